//! Sparse LIBSVM text format: `label idx:val idx:val ...` with 1-based indices.
//!
//! Features are densified to the largest index seen. Binary labels are mapped
//! to `{0, 1}` with the numerically smaller label becoming `0`, which covers
//! both the `{-1, +1}` and `{1, 2}` conventions.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{DataError, Dataset};
use crate::problems::Sample;

pub fn read_libsvm(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let io = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut data = parse_libsvm(file)?;
    data.source = path.display().to_string();
    Ok(data)
}

pub fn parse_libsvm(reader: impl Read) -> Result<Dataset, DataError> {
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut dim = 0;
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| DataError::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| DataError::Parse { line: lineno, message };
        let mut tokens = line.split_whitespace();
        let label_text = tokens.next().unwrap_or_default();
        let label: f64 = label_text
            .parse()
            .map_err(|_| err(format!("bad label `{label_text}`")))?;
        let mut entries = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected `index:value`, got `{tok}`")))?;
            let idx: usize = idx.parse().map_err(|_| err(format!("bad index `{idx}`")))?;
            if idx == 0 {
                return Err(err("indices start at 1".into()));
            }
            if idx <= last {
                return Err(err(format!("index {idx} is not increasing")));
            }
            let val: f64 = val.parse().map_err(|_| err(format!("bad value `{val}`")))?;
            last = idx;
            entries.push((idx, val));
        }
        dim = dim.max(last);
        rows.push((label, entries));
    }

    let mut labels: Vec<f64> = rows.iter().map(|r| r.0).collect();
    labels.sort_by(f64::total_cmp);
    labels.dedup();
    if labels.len() > 2 {
        return Err(DataError::TooManyLabels { found: labels });
    }
    let low = labels.first().copied();

    let samples = rows
        .into_iter()
        .map(|(label, entries)| {
            let mut x = vec![0.0; dim];
            for (idx, val) in entries {
                x[idx - 1] = val;
            }
            Sample::new(x, if Some(label) == low { 0.0 } else { 1.0 })
        })
        .collect();
    Ok(Dataset::new(samples, dim, "libsvm"))
}

/// Writes nonzero features only; labels are written as stored.
pub fn write_libsvm(data: &Dataset, mut out: impl Write) -> std::io::Result<()> {
    let mut line = String::new();
    for s in &data.samples {
        line.clear();
        write!(line, "{}", s.y).unwrap();
        for (i, v) in s.x.iter().enumerate() {
            if *v != 0.0 {
                write!(line, " {}:{}", i + 1, v).unwrap();
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset, DataError> {
        parse_libsvm(text.as_bytes())
    }

    #[test]
    fn densifies_sparse_line() {
        let d = parse("1 1:0.5 3:2.0\n").unwrap();
        assert_eq!(d.feature_dim, 3);
        assert_eq!(d.samples[0].x, vec![0.5, 0.0, 2.0]);
    }

    #[test]
    fn maps_signed_and_one_two_labels() {
        let d = parse("-1 1:1\n+1 2:1\n-1 1:3\n").unwrap();
        assert_eq!(d.samples.iter().map(|s| s.y).collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);
        let d = parse("2 1:1\r\n1 1:0\r\n").unwrap();
        assert_eq!(d.samples.iter().map(|s| s.y).collect::<Vec<_>>(), vec![1.0, 0.0]);
    }

    #[test]
    fn empty_input_gives_empty_dataset() {
        let d = parse("").unwrap();
        assert!(d.is_empty());
        assert_eq!(d.feature_dim, 0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let msg = parse("1 1:1\n0 2:x\n").unwrap_err().to_string();
        assert!(msg.starts_with("line 2:"), "{msg}");
        let msg = parse("1 1:1\n\n1 4\n").unwrap_err().to_string();
        assert!(msg.starts_with("line 3:"), "{msg}");
        assert!(matches!(parse("0 0:1\n"), Err(DataError::Parse { line: 1, .. })));
    }

    #[test]
    fn rejects_three_labels() {
        assert!(matches!(parse("0 1:1\n1 1:1\n2 1:1\n"), Err(DataError::TooManyLabels { .. })));
    }

    #[test]
    fn round_trip() {
        let samples = vec![
            Sample::new(vec![0.25, 0.0, -3.5], 1.0),
            Sample::new(vec![0.0, 1e-7, 2.0], 0.0),
        ];
        let data = Dataset::new(samples, 3, "mem");
        let mut buf = Vec::new();
        write_libsvm(&data, &mut buf).unwrap();
        let back = parse_libsvm(buf.as_slice()).unwrap();
        assert_eq!(back.samples, data.samples);
    }
}
