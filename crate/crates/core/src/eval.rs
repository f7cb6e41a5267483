//! Clustering accuracy against class labels, and the two objective readings
//! (mode representatives vs. member representatives) of a partition.

use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::dataset::CategoricalDataset;
use crate::error::{Error, Result};
use crate::kmodes::FrequencyTable;
use crate::medoids::cost_of_medoid_set;
use crate::metric::distance;

/// Weighted record counts per (cluster, class).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub classes: Vec<String>,
}

impl ConfusionMatrix {
    /// Builds a matrix from raw counts with anonymous class names.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Self {
        let width = counts.iter().map(Vec::len).max().unwrap_or(0);
        Self {
            counts,
            classes: (0..width).map(|j| format!("class{j}")).collect(),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn clusters(&self) -> usize {
        self.counts.len()
    }

    /// Count of the dominant class in each cluster.
    pub fn dominant(&self) -> Vec<u64> {
        self.counts
            .iter()
            .map(|row| row.iter().copied().max().unwrap_or(0))
            .collect()
    }
}

fn cluster_count(assignment: &[usize]) -> usize {
    assignment.iter().max().map_or(0, |&c| c + 1)
}

fn check_len(dataset: &CategoricalDataset, assignment: &[usize]) -> Result<()> {
    if assignment.len() != dataset.len() {
        return Err(Error::AssignmentLength {
            expected: dataset.len(),
            found: assignment.len(),
        });
    }
    Ok(())
}

/// Confusion matrix of a per-record assignment against the class labels.
pub fn confusion(dataset: &CategoricalDataset, assignment: &[usize]) -> Result<ConfusionMatrix> {
    check_len(dataset, assignment)?;
    let labels = dataset
        .schema
        .label_domain
        .as_ref()
        .ok_or(Error::MissingLabels)?;
    let mut counts = vec![vec![0u64; labels.len()]; cluster_count(assignment)];
    for (rec, &c) in dataset.records.iter().zip(assignment) {
        let l = rec.label.ok_or(Error::MissingLabels)?;
        counts[c][l as usize] += rec.weight;
    }
    Ok(ConfusionMatrix {
        counts,
        classes: labels.categories().to_vec(),
    })
}

fn ratio_str<S: Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

/// Accuracy r and error e = 1 − r as exact fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Accuracy {
    #[serde(serialize_with = "ratio_str")]
    pub accuracy: Ratio<u64>,
    #[serde(serialize_with = "ratio_str")]
    pub error: Ratio<u64>,
}

impl Accuracy {
    pub fn accuracy_f64(&self) -> f64 {
        *self.accuracy.numer() as f64 / *self.accuracy.denom() as f64
    }

    pub fn error_f64(&self) -> f64 {
        *self.error.numer() as f64 / *self.error.denom() as f64
    }

    /// Error rounded half-up to three decimals, e.g. `"0.136"`.
    pub fn error_display(&self) -> String {
        round_half_up(self.error, 3)
    }
}

/// Decimal rendering of a non-negative fraction, rounded half-up.
pub fn round_half_up(value: Ratio<u64>, decimals: u32) -> String {
    let scale = 10u128.pow(decimals);
    let num = *value.numer() as u128;
    let den = *value.denom() as u128;
    let scaled = (2 * num * scale + den) / (2 * den);
    let int = scaled / scale;
    let frac = scaled % scale;
    if decimals == 0 {
        format!("{int}")
    } else {
        format!("{int}.{frac:0width$}", width = decimals as usize)
    }
}

/// r = Σ_i max_j counts[i][j] / n and e = 1 − r.
pub fn accuracy_error(matrix: &ConfusionMatrix) -> Result<Accuracy> {
    let n = matrix.total();
    if n == 0 {
        return Err(Error::InvalidConfig("confusion matrix is empty".into()));
    }
    let hit: u64 = matrix.dominant().iter().sum();
    Ok(Accuracy {
        accuracy: Ratio::new(hit, n),
        error: Ratio::new(n - hit, n),
    })
}

/// Σ_i Σ_{X∈S_i} weight · d(X, mode(S_i)) for a fixed partition.
pub fn objective_under_modes(dataset: &CategoricalDataset, assignment: &[usize]) -> Result<u64> {
    check_len(dataset, assignment)?;
    let k = cluster_count(assignment);
    let mut tables = vec![FrequencyTable::new(dataset.m()); k];
    for (rec, &c) in dataset.records.iter().zip(assignment) {
        tables[c].add(&rec.values, rec.weight);
    }
    tables
        .iter()
        .enumerate()
        .map(|(c, t)| {
            let mode = t.mode().ok_or(Error::EmptyCluster(c))?;
            Ok(t.cost_of(&mode))
        })
        .sum()
}

/// For each cluster, the cost of its best member as representative, summed.
pub fn objective_under_medoids(dataset: &CategoricalDataset, assignment: &[usize]) -> Result<u64> {
    check_len(dataset, assignment)?;
    let k = cluster_count(assignment);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in assignment.iter().enumerate() {
        members[c].push(i);
    }
    members
        .iter()
        .enumerate()
        .map(|(c, idx)| {
            if idx.is_empty() {
                return Err(Error::EmptyCluster(c));
            }
            Ok(best_member_cost(dataset, idx))
        })
        .sum()
}

/// Smallest Σ weight · d(X, Y) over members Y of `members`.
pub(crate) fn best_member_cost(dataset: &CategoricalDataset, members: &[usize]) -> u64 {
    members
        .iter()
        .map(|&y| {
            let center = &dataset.records[y].values;
            members
                .iter()
                .map(|&x| {
                    let rec = &dataset.records[x];
                    rec.weight * distance(&rec.values, center) as u64
                })
                .sum::<u64>()
        })
        .min()
        .unwrap_or(0)
}

/// Nearest-medoid objective of an explicit medoid set (record indices).
pub fn objective_of_medoid_set(dataset: &CategoricalDataset, indices: &[usize]) -> Result<u64> {
    Ok(cost_of_medoid_set(dataset, indices)?.objective)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub accuracy: Accuracy,
    pub error_display: String,
    /// k-modes objective with modes refit on the partition.
    pub mode_objective: u64,
    /// Objective reported by a medoid solver, when there is one.
    pub medoid_objective: Option<u64>,
    pub confusion: ConfusionMatrix,
}

/// Full evaluation of a labelled clustering.
pub fn evaluate(
    dataset: &CategoricalDataset,
    assignment: &[usize],
    medoid_objective: Option<u64>,
) -> Result<EvalReport> {
    let confusion = confusion(dataset, assignment)?;
    let accuracy = accuracy_error(&confusion)?;
    Ok(EvalReport {
        error_display: accuracy.error_display(),
        accuracy,
        mode_objective: objective_under_modes(dataset, assignment)?,
        medoid_objective,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ColumnRef, LoadOptions};

    fn ds(text: &str) -> CategoricalDataset {
        CategoricalDataset::from_reader(text.as_bytes(), &LoadOptions::default()).unwrap()
    }

    #[test]
    fn table_error_arithmetic() {
        let cases: [([[u64; 2]; 2], &str); 4] = [
            ([[154, 45], [14, 222]], "0.136"),
            ([[158, 55], [10, 212]], "0.149"),
            ([[1470, 1856], [2738, 2060]], "0.435"),
            ([[4182, 960], [26, 2956]], "0.121"),
        ];
        for (rows, expected) in cases {
            let m = ConfusionMatrix::from_counts(rows.iter().map(|r| r.to_vec()).collect());
            let acc = accuracy_error(&m).unwrap();
            assert_eq!(acc.error_display(), expected);
            assert_eq!(acc.accuracy + acc.error, Ratio::from_integer(1));
        }
        let m = ConfusionMatrix::from_counts(vec![vec![154, 45], vec![14, 222]]);
        assert_eq!(accuracy_error(&m).unwrap().accuracy, Ratio::new(376, 435));
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_half_up(Ratio::new(1, 8), 2), "0.13");
        assert_eq!(round_half_up(Ratio::new(1, 2000), 3), "0.001");
        assert_eq!(round_half_up(Ratio::new(0, 1), 3), "0.000");
        assert_eq!(round_half_up(Ratio::new(1, 1), 3), "1.000");
        assert_eq!(round_half_up(Ratio::new(5, 2), 0), "3");
    }

    #[test]
    fn empty_matrix_is_an_error() {
        let m = ConfusionMatrix::from_counts(vec![vec![0, 0]]);
        assert!(accuracy_error(&m).is_err());
    }

    #[test]
    fn single_cluster_single_class() {
        let opts = LoadOptions::default().with_label(ColumnRef::Index(0));
        let d = CategoricalDataset::from_reader("x,a\nx,b\nx,c\n".as_bytes(), &opts).unwrap();
        let m = confusion(&d, &[0, 0, 0]).unwrap();
        assert_eq!(m.counts, vec![vec![3]]);
        assert_eq!(accuracy_error(&m).unwrap().accuracy, Ratio::from_integer(1));
    }

    #[test]
    fn confusion_needs_labels() {
        let d = ds("a\nb\n");
        assert!(matches!(confusion(&d, &[0, 1]), Err(Error::MissingLabels)));
        assert!(matches!(
            confusion(&d, &[0]),
            Err(Error::AssignmentLength { .. })
        ));
    }

    #[test]
    fn objectives_on_three_records() {
        let d = ds("a,p\na,q\nb,q\n");
        assert_eq!(objective_under_modes(&d, &[0, 0, 0]).unwrap(), 2);
        assert_eq!(objective_under_medoids(&d, &[0, 0, 0]).unwrap(), 2);
        assert_eq!(objective_under_modes(&d, &[0, 1, 2]).unwrap(), 0);
        assert_eq!(objective_under_medoids(&d, &[0, 1, 2]).unwrap(), 0);
    }

    #[test]
    fn empty_cluster_in_partition() {
        let d = ds("a\nb\n");
        assert!(matches!(
            objective_under_modes(&d, &[0, 2]),
            Err(Error::EmptyCluster(1))
        ));
        assert!(matches!(
            objective_under_medoids(&d, &[2, 0]),
            Err(Error::EmptyCluster(1))
        ));
    }

    #[test]
    fn accuracy_ignores_cluster_order() {
        let a = ConfusionMatrix::from_counts(vec![vec![154, 45], vec![14, 222]]);
        let b = ConfusionMatrix::from_counts(vec![vec![14, 222], vec![154, 45]]);
        assert_eq!(accuracy_error(&a).unwrap(), accuracy_error(&b).unwrap());
    }
}
