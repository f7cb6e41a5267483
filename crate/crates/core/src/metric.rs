//! Simple matching dissimilarity and its metric certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{CategoricalDataset, DistinctPoints, Record};
use crate::error::{Error, Result};

/// Number of attributes on which `x` and `y` disagree.
#[inline]
pub fn distance(x: &[u32], y: &[u32]) -> u32 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).filter(|(a, b)| a != b).count() as u32
}

/// [`distance`] between two records, checking that they share a schema width.
pub fn record_distance(x: &Record, y: &Record) -> Result<u32> {
    if x.values.len() != y.values.len() {
        return Err(Error::SchemaMismatch {
            left: x.values.len(),
            right: y.values.len(),
        });
    }
    Ok(distance(&x.values, &y.values))
}

/// Pairwise distances between distinct points, either precomputed or on demand.
pub trait Dissimilarity: Sync {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> u32;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Computes distances from the point vectors on every call.
#[derive(Debug, Clone, Copy)]
pub struct OnTheFly<'a> {
    points: &'a DistinctPoints,
}

impl<'a> OnTheFly<'a> {
    pub fn new(points: &'a DistinctPoints) -> Self {
        Self { points }
    }
}

impl Dissimilarity for OnTheFly<'_> {
    fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> u32 {
        distance(self.points.point(i), self.points.point(j))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Cells {
    U8(Vec<u8>),
    U16(Vec<u16>),
    U32(Vec<u32>),
}

/// Full square table of point distances, stored in the narrowest integer type
/// that holds `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    cells: Cells,
}

/// Default cap on matrix size: 1 GiB.
pub const DEFAULT_MATRIX_BUDGET: usize = 1 << 30;

impl DistanceMatrix {
    pub fn bytes_needed(n: usize, m: usize) -> usize {
        n.saturating_mul(n).saturating_mul(cell_width(m))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        (0..self.n).map(|j| self.dist(i, j) as u64).sum()
    }
}

fn cell_width(m: usize) -> usize {
    if m <= u8::MAX as usize {
        1
    } else if m <= u16::MAX as usize {
        2
    } else {
        4
    }
}

impl Dissimilarity for DistanceMatrix {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> u32 {
        let idx = i * self.n + j;
        match &self.cells {
            Cells::U8(v) => v[idx] as u32,
            Cells::U16(v) => v[idx] as u32,
            Cells::U32(v) => v[idx],
        }
    }
}

fn fill<T: Copy + Send + TryFrom<u32>>(points: &DistinctPoints) -> Vec<T>
where
    <T as TryFrom<u32>>::Error: std::fmt::Debug,
{
    let n = points.len();
    let zero = T::try_from(0).unwrap();
    let mut cells = vec![zero; n * n];
    cells
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            let x = points.point(i);
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = T::try_from(distance(x, points.point(j))).unwrap();
            }
        });
    cells
}

/// Materializes all point-to-point distances. Fails if the table would exceed
/// `budget_bytes`; callers can fall back to [`OnTheFly`].
pub fn pairwise_matrix(points: &DistinctPoints, budget_bytes: usize) -> Result<DistanceMatrix> {
    let n = points.len();
    let needed = DistanceMatrix::bytes_needed(n, points.m());
    if needed > budget_bytes {
        return Err(Error::MemoryBudget {
            needed,
            budget: budget_bytes,
        });
    }
    let cells = match cell_width(points.m()) {
        1 => Cells::U8(fill(points)),
        2 => Cells::U16(fill(points)),
        _ => Cells::U32(fill(points)),
    };
    Ok(DistanceMatrix { n, cells })
}

/// How the medoid solvers obtain distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMode {
    /// Use a matrix when it fits the budget, otherwise compute on the fly.
    #[default]
    Auto,
    Matrix,
    OnTheFly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    /// d(X, Y) > 0 whenever X != Y.
    Positivity,
    /// d(X, X) = 0, and d(X, Y) = 0 when X and Y agree everywhere.
    Identity,
    Symmetry,
    Triangle,
    /// d(X, Y) = m - |X ∩ Y| with records viewed as (attribute, value) sets.
    SetView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub triple: [usize; 3],
    pub axiom: Axiom,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricReport {
    pub triples_checked: u64,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

/// Size of the intersection of two records viewed as sets of
/// (attribute, value) pairs.
fn set_intersection(x: &[u32], y: &[u32]) -> usize {
    let xs: Vec<(usize, u32)> = x.iter().copied().enumerate().collect();
    let ys: Vec<(usize, u32)> = y.iter().copied().enumerate().collect();
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    common
}

/// Samples `sample_size` record triples and checks every metric axiom on each.
pub fn check_metric_properties(
    dataset: &CategoricalDataset,
    sample_size: u64,
    seed: u64,
) -> MetricReport {
    let n = dataset.len();
    let m = dataset.m();
    let mut violations = Vec::new();
    if n == 0 {
        return MetricReport {
            triples_checked: 0,
            violations,
            passed: true,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..sample_size {
        let t = [
            rng.random_range(0..n),
            rng.random_range(0..n),
            rng.random_range(0..n),
        ];
        let v = |i: usize| dataset.records[t[i]].values.as_slice();
        let mut flag = |axiom| violations.push(Violation { triple: t, axiom });

        for a in 0..3 {
            if distance(v(a), v(a)) != 0 {
                flag(Axiom::Identity);
            }
        }
        let pairs = [(0, 1), (1, 2), (0, 2)];
        let mut d = [[0u32; 3]; 3];
        for &(a, b) in &pairs {
            let ab = distance(v(a), v(b));
            let ba = distance(v(b), v(a));
            if ab != ba {
                flag(Axiom::Symmetry);
            }
            if v(a) == v(b) {
                if ab != 0 {
                    flag(Axiom::Identity);
                }
            } else if ab == 0 {
                flag(Axiom::Positivity);
            }
            let set_view = (m - set_intersection(v(a), v(b))) as u32;
            if set_view != ab {
                flag(Axiom::SetView);
            }
            d[a][b] = set_view;
            d[b][a] = set_view;
        }
        // all three orientations of the triangle
        if d[0][1] + d[1][2] < d[0][2] || d[0][1] + d[0][2] < d[1][2] || d[0][2] + d[1][2] < d[0][1]
        {
            flag(Axiom::Triangle);
        }
    }
    MetricReport {
        triples_checked: sample_size,
        passed: violations.is_empty(),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LoadOptions;

    fn ds(text: &str) -> CategoricalDataset {
        CategoricalDataset::from_reader(text.as_bytes(), &LoadOptions::default()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&[0, 1, 2], &[0, 1, 2]), 0);
        assert_eq!(distance(&[0, 1, 2], &[0, 3, 2]), 1);
        let x = vec![0u32; 16];
        let y = vec![1u32; 16];
        assert_eq!(distance(&x, &y), 16);
    }

    #[test]
    fn record_distance_checks_width() {
        let a = Record {
            values: vec![0, 1],
            weight: 1,
            label: None,
            source_rows: vec![0],
        };
        let b = Record {
            values: vec![0],
            ..a.clone()
        };
        assert!(matches!(
            record_distance(&a, &b),
            Err(Error::SchemaMismatch { left: 2, right: 1 })
        ));
        assert_eq!(record_distance(&a, &a).unwrap(), 0);
    }

    #[test]
    fn matrix_small_cases() {
        let one = ds("a,b\n").distinct_points();
        let mat = pairwise_matrix(&one, DEFAULT_MATRIX_BUDGET).unwrap();
        assert_eq!(mat.n(), 1);
        assert_eq!(mat.dist(0, 0), 0);

        let three = ds("a,x\nb,y\nc,z\n").distinct_points();
        let mat = pairwise_matrix(&three, DEFAULT_MATRIX_BUDGET).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(mat.dist(i, j), if i == j { 0 } else { 2 });
            }
        }
    }

    #[test]
    fn matrix_budget() {
        let pts = ds("a,x\nb,y\nc,z\n").distinct_points();
        let err = pairwise_matrix(&pts, 8).unwrap_err();
        assert!(matches!(err, Error::MemoryBudget { needed: 9, budget: 8 }));
    }

    #[test]
    fn wide_schema_uses_wider_cells() {
        let m = 300;
        let a = vec!["a"; m].join(",");
        let b = vec!["b"; m].join(",");
        let pts = ds(&format!("{a}\n{b}\n")).distinct_points();
        let mat = pairwise_matrix(&pts, DEFAULT_MATRIX_BUDGET).unwrap();
        assert_eq!(mat.dist(0, 1), 300);
        assert_eq!(DistanceMatrix::bytes_needed(2, m), 8);
    }

    #[test]
    fn single_record_metric_check() {
        let report = check_metric_properties(&ds("a,b\n"), 50, 1);
        assert!(report.passed);
        assert_eq!(report.triples_checked, 50);
    }

    #[test]
    fn set_view_matches_distance() {
        let x = [0, 1, 2, 3];
        let y = [0, 2, 2, 1];
        assert_eq!(4 - set_intersection(&x, &y), distance(&x, &y) as usize);
    }
}
