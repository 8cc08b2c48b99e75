//! Datasets: synthetic generators, LIBSVM text files and train/test splits.

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::problems::Sample;
use crate::rng::seeded;

mod libsvm;
mod synthetic;

pub use libsvm::{parse_libsvm, read_libsvm, write_libsvm};
pub use synthetic::{
    gen_gaussian, gen_gaussian_cov, gen_linear, gen_location, gen_logistic, gen_sphere,
    power_covariance, CovarianceChoice, Generated, SyntheticSpec,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("expected at most two distinct labels, found {found:?}")]
    TooManyLabels { found: Vec<f64> },
    #[error("covariance: {0}")]
    Covariance(#[from] LinalgError),
    #[error("invalid generator setting: {0}")]
    Invalid(String),
}

/// A finite sequence of samples with a common feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub feature_dim: usize,
    /// Where the samples came from (generator description or file path).
    pub source: String,
}

impl Dataset {
    /// Panics if the samples disagree on their dimension.
    pub fn new(samples: Vec<Sample>, feature_dim: usize, source: impl Into<String>) -> Self {
        assert!(
            samples.iter().all(|s| s.x.len() == feature_dim),
            "samples must all have dimension {feature_dim}"
        );
        Self {
            samples,
            feature_dim,
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Zero-extends every sample to `dim` features.
    pub fn pad_to(&mut self, dim: usize) {
        if dim <= self.feature_dim {
            return;
        }
        for s in &mut self.samples {
            s.x.resize(dim, 0.0);
        }
        self.feature_dim = dim;
    }

    /// Seeded shuffle, then the first `round(fraction · len)` samples go to the
    /// training set and the rest to the test set.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(DataError::Invalid(format!("split fraction {fraction} is outside (0, 1)")));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut seeded(seed));
        let cut = (fraction * self.len() as f64).round() as usize;
        let pick = |idx: &[usize], tag: &str| {
            Dataset::new(
                idx.iter().map(|&i| self.samples[i].clone()).collect(),
                self.feature_dim,
                format!("{} [{tag}]", self.source),
            )
        };
        Ok((pick(&order[..cut], "train"), pick(&order[cut..], "test")))
    }
}
