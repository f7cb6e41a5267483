//! The dataset cache: known UCI files, where they live, and how to fetch them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use catclust::dataset::{CategoricalDataset, ColumnRef, LoadOptions};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const DATA_DIR_ENV: &str = "CATCLUST_DATA_DIR";
const EMBEDDED: &str = include_str!("../datasets.toml");

#[derive(Debug, Clone, Deserialize)]
pub struct DatasetEntry {
    pub url: String,
    pub file: String,
    pub label_column: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct DatasetConfig {
    pub datasets: BTreeMap<String, DatasetEntry>,
}

impl DatasetConfig {
    pub fn embedded() -> Self {
        toml::from_str(EMBEDDED).expect("embedded dataset config is valid")
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        path.map_or_else(|| Ok(Self::embedded()), Self::from_file)
    }

    pub fn get(&self, name: &str) -> CliResult<&DatasetEntry> {
        self.datasets.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.datasets.keys().map(String::as_str).collect();
            CliError::Input(format!("unknown dataset {name:?}; known: {}", known.join(", ")))
        })
    }
}

impl DatasetEntry {
    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            label_column: self.label_column.map(ColumnRef::Index),
            ..LoadOptions::default()
        }
    }
}

/// Directory holding cached dataset files.
pub fn data_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn download(url: &str) -> Result<Vec<u8>, String> {
    let config = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(60)))
        .build();
    let agent = ureq::Agent::new_with_config(config);
    let mut response = agent.get(url).call().map_err(|e| e.to_string())?;
    response
        .body_mut()
        .with_config()
        .limit(64 << 20)
        .read_to_vec()
        .map_err(|e| e.to_string())
}

/// Downloads `entry` into `dir` unless it is already there. Returns the path.
pub fn fetch(entry: &DatasetEntry, dir: &Path, refresh: bool) -> CliResult<PathBuf> {
    let path = dir.join(&entry.file);
    if path.is_file() && !refresh {
        return Ok(path);
    }
    let bytes = download(&entry.url).map_err(|e| {
        CliError::Input(format!(
            "could not download {}: {e}\nprovide the file locally at {}",
            entry.url,
            path.display()
        ))
    })?;
    std::fs::create_dir_all(dir)?;
    let tmp = path.with_extension("part");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

/// Loads a known dataset from the cache, fetching it first if needed.
pub fn load_known(
    config: &DatasetConfig,
    name: &str,
    dir: &Path,
    allow_fetch: bool,
) -> CliResult<CategoricalDataset> {
    let entry = config.get(name)?;
    let path = dir.join(&entry.file);
    let path = if path.is_file() {
        path
    } else if allow_fetch {
        fetch(entry, dir, false)?
    } else {
        return Err(CliError::Input(format!(
            "dataset {name} not found; provide the file locally at {}",
            path.display()
        )));
    };
    Ok(catclust::load_csv(&path, &entry.load_options())?)
}
