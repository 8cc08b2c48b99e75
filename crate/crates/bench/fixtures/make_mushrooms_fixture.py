"""Writes mushrooms_200.libsvm, a small synthetic stand-in for the LIBSVM
mushrooms file: 22 categorical attributes one-hot encoded into 112 binary
features, labels 1 (edible) and 2 (poisonous).

As in the real data, the class is drawn first and several attributes (odor,
spore print colour, gill size, bruises, ring type, ...) depend strongly on
it, while the rest are uninformative. Run with
`python3 make_mushrooms_fixture.py` from this folder.
"""

import random

CARDINALITIES = [6, 4, 9, 2, 9, 2, 2, 2, 10, 2, 5, 4, 4, 8, 8, 1, 4, 3, 5, 9, 6, 7]

# attribute index -> (values favoured by edible, values favoured by poisonous, concentration)
INFORMATIVE = {
    3: ([1], [0], 0.8),  # bruises
    4: ([0, 1, 5], [2, 3, 4, 6, 7, 8], 0.97),  # odor
    7: ([0], [1], 0.8),  # gill size
    8: ([4, 5, 9], [0, 2, 3], 0.7),  # gill color
    11: ([2], [1], 0.7),  # stalk surface above ring
    18: ([4], [0, 2], 0.75),  # ring type
    19: ([1, 3], [2, 7], 0.85),  # spore print colour
    20: ([0, 1, 3], [4], 0.6),  # population
    21: ([0, 2], [1, 4], 0.6),  # habitat
}
ROWS = 200
SEED = 20240611


def draw(rng, k, card, edible):
    if k not in INFORMATIVE:
        return rng.randrange(card)
    good, bad, conc = INFORMATIVE[k]
    favoured = good if edible else bad
    if rng.random() < conc:
        return rng.choice(favoured)
    return rng.randrange(card)


def main():
    assert sum(CARDINALITIES) == 112
    rng = random.Random(SEED)
    offsets = [sum(CARDINALITIES[:k]) for k in range(len(CARDINALITIES))]
    lines = []
    for _ in range(ROWS):
        edible = rng.random() < 0.52
        values = [draw(rng, k, c, edible) for k, c in enumerate(CARDINALITIES)]
        label = 1 if edible else 2
        idx = sorted(offsets[k] + v + 1 for k, v in enumerate(values))
        lines.append(f"{label} " + " ".join(f"{i}:1" for i in idx))
    with open("mushrooms_200.libsvm", "w") as f:
        f.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
