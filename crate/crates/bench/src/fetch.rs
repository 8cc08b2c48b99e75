//! Downloads of the public LIBSVM binary-classification files used for the
//! real-data benchmarks. Never called from tests.

use std::path::{Path, PathBuf};

use crate::BenchError;

const BASE: &str = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary";

/// `(name, remote file, note)`.
pub const DATASETS: [(&str, &str, &str); 3] = [
    ("mushrooms", "mushrooms", "8124 samples, 112 features"),
    ("phishing", "phishing", "11055 samples, 68 features"),
    ("covtype", "covtype.libsvm.binary.bz2", "581012 samples, 54 features; bzip2-compressed"),
];

pub fn url_for(name: &str) -> Option<String> {
    DATASETS
        .iter()
        .find(|d| d.0 == name)
        .map(|d| format!("{BASE}/{}", d.1))
}

/// Saves `name` into `dir` under its remote file name and returns the path.
pub fn fetch(name: &str, dir: &Path) -> Result<PathBuf, BenchError> {
    let entry = DATASETS.iter().find(|d| d.0 == name).ok_or_else(|| {
        let known: Vec<&str> = DATASETS.iter().map(|d| d.0).collect();
        BenchError::Plan(format!("unknown dataset `{name}` (known: {})", known.join(", ")))
    })?;
    let url = format!("{BASE}/{}", entry.1);
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    let target = dir.join(entry.1);
    let response = ureq::get(&url)
        .call()
        .map_err(|e| BenchError::Io(format!("{url}: {e}")))?;
    let mut reader = response.into_body().into_reader();
    let mut file = std::fs::File::create(&target).map_err(|e| BenchError::io(&target, e))?;
    std::io::copy(&mut reader, &mut file).map_err(|e| BenchError::io(&target, e))?;
    Ok(target)
}
