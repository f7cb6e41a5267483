//! Clustering of categorical data under the simple matching dissimilarity.
//!
//! The crate provides the classical k-modes heuristic ([`kmodes`]), two
//! k-median solvers with medoids restricted to dataset members
//! ([`medoids`]), evaluation against class labels ([`eval`]) and randomized
//! audits of the approximation bounds that tie the two objectives together
//! ([`audit`]).
//!
//! ```
//! use catclust::dataset::{CategoricalDataset, LoadOptions};
//! use catclust::medoids::{exhaustive_search, ExhaustiveConfig};
//!
//! let data = "a,a\na,b\nc,d\nc,e\n";
//! let ds = CategoricalDataset::from_reader(data.as_bytes(), &LoadOptions::default()).unwrap();
//! let sol = exhaustive_search(&ds, &ExhaustiveConfig::new(2)).unwrap();
//! assert_eq!(sol.medoid_objective, 2);
//! assert_eq!(sol.medoid_indices, vec![0, 2]);
//! ```

pub mod audit;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod kmodes;
pub mod medoids;
pub mod metric;

pub use dataset::{load_csv, CategoricalDataset, ColumnRef, LoadOptions, MissingPolicy};
pub use error::{Error, Result};
pub use kmodes::{run_kmodes, KModesConfig, KModesResult};
pub use medoids::{exhaustive_search, local_search, ExhaustiveConfig, LocalSearchConfig, MedoidSolution};
