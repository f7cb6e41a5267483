#![allow(dead_code)]

use std::path::PathBuf;

use catclust::dataset::{CategoricalDataset, ColumnRef, LoadOptions};

pub const VOTES_FILE: &str = "house-votes-84.data";
pub const MUSHROOM_FILE: &str = "agaricus-lepiota.data";

/// `$CATCLUST_DATA_DIR`, else the workspace `data/` directory.
pub fn data_dir() -> PathBuf {
    std::env::var_os("CATCLUST_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
            manifest.ancestors().nth(2).expect("workspace root").join("data")
        })
}

/// Loads a UCI file with the class in column 0, or explains where it was expected.
pub fn load_uci(file: &str) -> Result<CategoricalDataset, String> {
    let path = data_dir().join(file);
    if !path.is_file() {
        return Err(format!("dataset unavailable at {}", path.display()));
    }
    let opts = LoadOptions::default().with_label(ColumnRef::Index(0));
    catclust::load_csv(&path, &opts).map_err(|e| e.to_string())
}
