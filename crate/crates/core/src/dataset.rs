//! Categorical dataset ingestion.
//!
//! Every field is treated as an opaque category string. Category ids are
//! assigned per attribute in order of first appearance, so the same file
//! always produces the same encoding.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// The categories observed for one attribute. A category's id is its position
/// in `categories`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttributeDomain {
    name: String,
    categories: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl AttributeDomain {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    /// Returns the id of `value`, adding it as a new category if unseen.
    pub fn intern(&mut self, value: &str) -> u32 {
        if let Some(&id) = self.lookup.get(value) {
            return id;
        }
        let id = self.categories.len() as u32;
        self.categories.push(value.to_owned());
        self.lookup.insert(value.to_owned(), id);
        id
    }

    pub fn id_of(&self, value: &str) -> Option<u32> {
        self.lookup.get(value).copied()
    }

    pub fn category(&self, id: u32) -> Option<&str> {
        self.categories.get(id as usize).map(String::as_str)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub attributes: Vec<AttributeDomain>,
    /// Class column, never used for distances.
    pub label_domain: Option<AttributeDomain>,
}

impl Schema {
    pub fn m(&self) -> usize {
        self.attributes.len()
    }
}

/// One (possibly merged) categorical object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub values: Vec<u32>,
    /// Multiplicity; always equals `source_rows.len()`.
    pub weight: u64,
    pub label: Option<u32>,
    pub source_rows: Vec<usize>,
}

/// Which column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_owned()),
        })
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Name(n) => f.write_str(n),
            ColumnRef::Index(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// The missing token is an ordinary category.
    #[default]
    TreatAsCategory,
    Reject,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub label_column: Option<ColumnRef>,
    pub missing_token: String,
    pub missing_policy: MissingPolicy,
    pub has_header: bool,
    pub delimiter: u8,
    /// Column names for headerless files. Ignored when `has_header` is set.
    pub column_names: Option<Vec<String>>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            label_column: None,
            missing_token: "?".to_owned(),
            missing_policy: MissingPolicy::TreatAsCategory,
            has_header: false,
            delimiter: b',',
            column_names: None,
        }
    }
}

impl LoadOptions {
    pub fn with_label(mut self, column: ColumnRef) -> Self {
        self.label_column = Some(column);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoricalDataset {
    pub schema: Schema,
    pub records: Vec<Record>,
    /// Number of original rows.
    pub total_weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetStats {
    pub n: u64,
    pub n_records: usize,
    pub n_distinct: usize,
    pub m: usize,
    pub category_counts: Vec<usize>,
    pub label_histogram: Option<Vec<(String, u64)>>,
}

pub fn load_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<CategoricalDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    CategoricalDataset::from_reader(file, options)
}

impl CategoricalDataset {
    pub fn from_reader<R: Read>(reader: R, options: &LoadOptions) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(options.has_header)
            .delimiter(options.delimiter)
            .flexible(true)
            .from_reader(reader);

        let header: Option<Vec<String>> = if options.has_header {
            Some(csv.headers()?.iter().map(str::to_owned).collect())
        } else {
            options.column_names.clone()
        };

        let mut rows = Vec::new();
        for row in csv.records() {
            let row = row?;
            rows.push(row.iter().map(str::to_owned).collect::<Vec<_>>());
        }
        Self::from_rows(rows, header, options)
    }

    /// Builds a dataset from already-split rows.
    pub fn from_rows<S: AsRef<str>>(
        rows: impl IntoIterator<Item = Vec<S>>,
        header: Option<Vec<String>>,
        options: &LoadOptions,
    ) -> Result<Self> {
        let mut rows = rows.into_iter().peekable();
        let width = match rows.peek() {
            Some(first) => first.len(),
            None => return Err(Error::EmptyInput),
        };

        let names: Vec<String> = match header {
            Some(h) if h.len() == width => h,
            Some(h) => {
                return Err(Error::RaggedRow {
                    row: 0,
                    expected: h.len(),
                    found: width,
                })
            }
            None => (0..width).map(|i| format!("col{i}")).collect(),
        };

        let label_idx = match &options.label_column {
            None => None,
            Some(ColumnRef::Index(i)) if *i < width => Some(*i),
            Some(ColumnRef::Name(n)) => match names.iter().position(|c| c == n) {
                Some(i) => Some(i),
                None => return Err(Error::UnknownLabelColumn(n.clone())),
            },
            Some(c) => return Err(Error::UnknownLabelColumn(c.to_string())),
        };

        let feature_cols: Vec<usize> = (0..width).filter(|&c| Some(c) != label_idx).collect();
        if feature_cols.is_empty() {
            return Err(Error::NoAttributes);
        }

        let mut attributes: Vec<AttributeDomain> = feature_cols
            .iter()
            .map(|&c| AttributeDomain::new(names[c].clone()))
            .collect();
        let mut label_domain = label_idx.map(|c| AttributeDomain::new(names[c].clone()));

        let mut records = Vec::new();
        for (row_idx, row) in rows.enumerate() {
            if row.len() != width {
                return Err(Error::RaggedRow {
                    row: row_idx,
                    expected: width,
                    found: row.len(),
                });
            }
            if options.missing_policy == MissingPolicy::Reject {
                if let Some(col) = row.iter().position(|f| f.as_ref() == options.missing_token) {
                    return Err(Error::MissingValue {
                        token: options.missing_token.clone(),
                        row: row_idx,
                        column: col,
                    });
                }
            }
            let values = feature_cols
                .iter()
                .zip(attributes.iter_mut())
                .map(|(&c, dom)| dom.intern(row[c].as_ref()))
                .collect();
            let label = match (label_idx, label_domain.as_mut()) {
                (Some(c), Some(dom)) => Some(dom.intern(row[c].as_ref())),
                _ => None,
            };
            records.push(Record {
                values,
                weight: 1,
                label,
                source_rows: vec![row_idx],
            });
        }

        let total_weight = records.len() as u64;
        Ok(Self {
            schema: Schema {
                attributes,
                label_domain,
            },
            records,
            total_weight,
        })
    }

    pub fn m(&self) -> usize {
        self.schema.m()
    }

    /// Number of (possibly weighted) records.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_labels(&self) -> bool {
        self.schema.label_domain.is_some() && self.records.iter().all(|r| r.label.is_some())
    }

    /// Decodes a record's values back to their category strings.
    pub fn decode(&self, record: &Record) -> Vec<&str> {
        self.decode_values(&record.values)
    }

    pub fn decode_values<'a>(&'a self, values: &[u32]) -> Vec<&'a str> {
        values
            .iter()
            .zip(&self.schema.attributes)
            .map(|(&v, dom)| dom.category(v).unwrap_or("<invalid>"))
            .collect()
    }

    pub fn label_name(&self, label: u32) -> Option<&str> {
        self.schema.label_domain.as_ref()?.category(label)
    }

    /// Merges records with identical values and labels, keeping first-appearance
    /// order and summing weights.
    pub fn dedupe(&self) -> Self {
        let mut index: HashMap<(&[u32], Option<u32>), usize> = HashMap::new();
        let mut merged: Vec<Record> = Vec::new();
        for rec in &self.records {
            match index.get(&(rec.values.as_slice(), rec.label)) {
                Some(&i) => {
                    let target = &mut merged[i];
                    target.weight += rec.weight;
                    target.source_rows.extend_from_slice(&rec.source_rows);
                }
                None => {
                    index.insert((rec.values.as_slice(), rec.label), merged.len());
                    merged.push(rec.clone());
                }
            }
        }
        Self {
            schema: self.schema.clone(),
            records: merged,
            total_weight: self.total_weight,
        }
    }

    pub fn stats(&self) -> DatasetStats {
        let m = self.m();
        let mut seen = vec![vec![false; 0]; m];
        for (r, dom) in self.schema.attributes.iter().enumerate() {
            seen[r] = vec![false; dom.len()];
        }
        let mut label_counts = self
            .schema
            .label_domain
            .as_ref()
            .map(|d| vec![0u64; d.len()]);
        let mut n = 0u64;
        for rec in &self.records {
            n += rec.weight;
            for (r, &v) in rec.values.iter().enumerate() {
                seen[r][v as usize] = true;
            }
            if let (Some(counts), Some(l)) = (label_counts.as_mut(), rec.label) {
                counts[l as usize] += rec.weight;
            }
        }
        let label_histogram = match (label_counts, &self.schema.label_domain) {
            (Some(counts), Some(dom)) => Some(
                dom.categories()
                    .iter()
                    .cloned()
                    .zip(counts)
                    .collect(),
            ),
            _ => None,
        };
        DatasetStats {
            n,
            n_records: self.records.len(),
            n_distinct: self.distinct_points().len(),
            m,
            category_counts: seen
                .iter()
                .map(|s| s.iter().filter(|&&b| b).count())
                .collect(),
            label_histogram,
        }
    }

    /// Groups records by value vector (labels ignored).
    pub fn distinct_points(&self) -> DistinctPoints {
        DistinctPoints::from_dataset(self)
    }
}

/// The distinct value vectors of a dataset, in first-appearance order, with
/// their summed weights. All solvers search over these points: records that
/// agree on every attribute are interchangeable as representatives.
#[derive(Debug, Clone)]
pub struct DistinctPoints {
    m: usize,
    values: Vec<u32>,
    weights: Vec<u64>,
    first_record: Vec<usize>,
    record_point: Vec<usize>,
}

impl DistinctPoints {
    pub fn from_dataset(dataset: &CategoricalDataset) -> Self {
        let m = dataset.m();
        let mut index: HashMap<&[u32], usize> = HashMap::new();
        let mut values = Vec::new();
        let mut weights = Vec::new();
        let mut first_record = Vec::new();
        let mut record_point = Vec::with_capacity(dataset.len());
        for (ri, rec) in dataset.records.iter().enumerate() {
            let p = *index.entry(rec.values.as_slice()).or_insert_with(|| {
                values.extend_from_slice(&rec.values);
                weights.push(0);
                first_record.push(ri);
                weights.len() - 1
            });
            weights[p] += rec.weight;
            record_point.push(p);
        }
        Self {
            m,
            values,
            weights,
            first_record,
            record_point,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn point(&self, i: usize) -> &[u32] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn weight(&self, i: usize) -> u64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    /// Index of the first record carrying point `i`.
    pub fn first_record(&self, i: usize) -> usize {
        self.first_record[i]
    }

    /// Point index of every dataset record.
    pub fn record_points(&self) -> &[usize] {
        &self.record_point
    }

    /// Expands a per-point assignment to a per-record assignment.
    pub fn expand(&self, point_assignment: &[usize]) -> Vec<usize> {
        self.record_point
            .iter()
            .map(|&p| point_assignment[p])
            .collect()
    }
}
