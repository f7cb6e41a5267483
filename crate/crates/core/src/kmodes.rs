//! Lloyd-style k-modes: alternate nearest-mode assignment with a
//! frequency-based mode update until the assignment stops changing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{CategoricalDataset, DistinctPoints};
use crate::error::{Error, Result};
use crate::metric::distance;

/// A cluster representative. Need not coincide with any record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct ModeVector(pub Vec<u32>);

impl ModeVector {
    pub fn values(&self) -> &[u32] {
        &self.0
    }
}

/// Weighted category counts per attribute for one cluster.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: Vec<Vec<u64>>,
    total: u64,
}

impl FrequencyTable {
    pub fn new(m: usize) -> Self {
        Self {
            counts: vec![Vec::new(); m],
            total: 0,
        }
    }

    pub fn add(&mut self, values: &[u32], weight: u64) {
        if self.counts.len() < values.len() {
            self.counts.resize(values.len(), Vec::new());
        }
        for (counts, &v) in self.counts.iter_mut().zip(values) {
            let v = v as usize;
            if counts.len() <= v {
                counts.resize(v + 1, 0);
            }
            counts[v] += weight;
        }
        self.total += weight;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, attribute: usize, category: u32) -> u64 {
        self.counts[attribute]
            .get(category as usize)
            .copied()
            .unwrap_or(0)
    }

    /// Relative frequency as an exact fraction (numerator, denominator).
    pub fn frequency(&self, attribute: usize, category: u32) -> (u64, u64) {
        (self.count(attribute, category), self.total)
    }

    /// Most frequent category per attribute, smallest id on ties.
    pub fn mode(&self) -> Option<ModeVector> {
        if self.total == 0 {
            return None;
        }
        let values = self
            .counts
            .iter()
            .map(|counts| {
                let mut best = 0usize;
                for (c, &n) in counts.iter().enumerate() {
                    if n > counts[best] {
                        best = c;
                    }
                }
                best as u32
            })
            .collect();
        Some(ModeVector(values))
    }

    /// Summed weighted mismatch against `mode`: Σ_r (total − count of q_r).
    pub fn cost_of(&self, mode: &ModeVector) -> u64 {
        mode.0
            .iter()
            .enumerate()
            .map(|(r, &q)| self.total - self.count(r, q))
            .sum()
    }
}

/// Mode of a weighted set of value vectors.
pub fn compute_mode<'a, I>(members: I) -> Result<ModeVector>
where
    I: IntoIterator<Item = (&'a [u32], u64)>,
{
    let mut table = FrequencyTable::default();
    for (values, weight) in members {
        table.add(values, weight);
    }
    table.mode().ok_or(Error::EmptyCluster(0))
}

/// Σ weight · d(X, Q) over the members.
pub fn mode_cost<'a, I>(members: I, mode: &ModeVector) -> u64
where
    I: IntoIterator<Item = (&'a [u32], u64)>,
{
    members
        .into_iter()
        .map(|(v, w)| w * distance(v, &mode.0) as u64)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMethod {
    /// The first k records with pairwise-distinct values, in file order.
    #[default]
    FirstKDistinct,
    /// k distinct value vectors drawn uniformly with the seeded generator.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyClusterPolicy {
    /// Move the empty cluster's mode onto the record farthest from its own
    /// representative (lowest index on ties).
    #[default]
    ReseedFarthest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KModesConfig {
    pub k: usize,
    pub init: InitMethod,
    pub seed: u64,
    pub max_iterations: usize,
    pub empty_cluster_policy: EmptyClusterPolicy,
    /// Fail with [`Error::ObjectiveIncreased`] if the objective ever rises.
    pub check_monotone: bool,
}

impl KModesConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            init: InitMethod::FirstKDistinct,
            seed: 0,
            max_iterations: 100,
            empty_cluster_policy: EmptyClusterPolicy::ReseedFarthest,
            check_monotone: cfg!(debug_assertions),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KModesResult {
    /// Cluster index of every dataset record.
    pub assignment: Vec<usize>,
    pub modes: Vec<ModeVector>,
    pub mode_objective: u64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each assignment step (plus a final refit when the
    /// iteration cap is hit).
    pub objective_trace: Vec<u64>,
}

fn check_k(k: usize, n_distinct: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidK {
            k,
            reason: "k must be at least 1".into(),
        });
    }
    if k > n_distinct {
        return Err(Error::NotEnoughDistinct {
            k,
            available: n_distinct,
        });
    }
    Ok(())
}

fn init_from_points(points: &DistinctPoints, config: &KModesConfig) -> Result<Vec<ModeVector>> {
    check_k(config.k, points.len())?;
    let chosen: Vec<usize> = match config.init {
        InitMethod::FirstKDistinct => (0..config.k).collect(),
        InitMethod::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rand::seq::index::sample(&mut rng, points.len(), config.k).into_vec()
        }
    };
    Ok(chosen
        .into_iter()
        .map(|p| ModeVector(points.point(p).to_vec()))
        .collect())
}

/// Initial modes per `config.init`.
pub fn init_modes(dataset: &CategoricalDataset, config: &KModesConfig) -> Result<Vec<ModeVector>> {
    init_from_points(&dataset.distinct_points(), config)
}

#[inline]
fn nearest(values: &[u32], modes: &[ModeVector]) -> (usize, u32) {
    let mut best = (0, u32::MAX);
    for (c, q) in modes.iter().enumerate() {
        let d = distance(values, &q.0);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Nearest mode for every record, lowest cluster index on ties.
pub fn assign_points(dataset: &CategoricalDataset, modes: &[ModeVector]) -> Vec<usize> {
    assert!(!modes.is_empty(), "assign_points needs at least one mode");
    dataset
        .records
        .par_iter()
        .map(|r| nearest(&r.values, modes).0)
        .collect()
}

fn assign_distinct(points: &DistinctPoints, modes: &[ModeVector]) -> (Vec<usize>, u64) {
    let pairs: Vec<(usize, u32)> = (0..points.len())
        .into_par_iter()
        .map(|p| nearest(points.point(p), modes))
        .collect();
    let cost = pairs
        .iter()
        .enumerate()
        .map(|(p, &(_, d))| points.weight(p) * d as u64)
        .sum();
    (pairs.into_iter().map(|(c, _)| c).collect(), cost)
}

fn tables(points: &DistinctPoints, assignment: &[usize], k: usize) -> Vec<FrequencyTable> {
    let mut tables = vec![FrequencyTable::new(points.m()); k];
    for (p, &c) in assignment.iter().enumerate() {
        tables[c].add(points.point(p), points.weight(p));
    }
    tables
}

/// Recomputes the mode of every non-empty cluster and reseeds empty ones.
fn update_modes(points: &DistinctPoints, assignment: &[usize], modes: &mut [ModeVector]) {
    let k = modes.len();
    let tables = tables(points, assignment, k);
    let mut empty = Vec::new();
    for (c, table) in tables.iter().enumerate() {
        match table.mode() {
            Some(q) => modes[c] = q,
            None => empty.push(c),
        }
    }
    if empty.is_empty() {
        return;
    }
    // distance of each point to the (updated) mode of the cluster that holds it
    let spread: Vec<u32> = (0..points.len())
        .map(|p| distance(points.point(p), &modes[assignment[p]].0))
        .collect();
    let mut taken = vec![false; points.len()];
    for c in empty {
        let mut best: Option<usize> = None;
        for p in 0..points.len() {
            if taken[p] {
                continue;
            }
            if best.is_none_or(|b| spread[p] > spread[b]) {
                best = Some(p);
            }
        }
        if let Some(p) = best {
            taken[p] = true;
            modes[c] = ModeVector(points.point(p).to_vec());
        }
    }
}

/// Runs k-modes to convergence or the iteration cap.
pub fn run_kmodes(dataset: &CategoricalDataset, config: &KModesConfig) -> Result<KModesResult> {
    let points = dataset.distinct_points();
    let mut modes = init_from_points(&points, config)?;
    let (mut assignment, mut cost) = assign_distinct(&points, &modes);
    let mut trace = vec![cost];
    let mut iterations = 0;
    let mut converged = false;

    let record = |trace: &mut Vec<u64>, iteration: usize, current: u64| -> Result<()> {
        let previous = *trace.last().unwrap();
        if config.check_monotone && current > previous {
            return Err(Error::ObjectiveIncreased {
                iteration,
                previous,
                current,
            });
        }
        trace.push(current);
        Ok(())
    };

    while iterations < config.max_iterations {
        iterations += 1;
        update_modes(&points, &assignment, &mut modes);
        let (next, next_cost) = assign_distinct(&points, &modes);
        record(&mut trace, iterations, next_cost)?;
        cost = next_cost;
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
    }

    if !converged {
        // modes still describe the previous partition; refit them
        for (c, table) in tables(&points, &assignment, config.k).iter().enumerate() {
            if let Some(q) = table.mode() {
                modes[c] = q;
            }
        }
        cost = (0..points.len())
            .map(|p| points.weight(p) * distance(points.point(p), &modes[assignment[p]].0) as u64)
            .sum();
        record(&mut trace, iterations, cost)?;
    }

    Ok(KModesResult {
        assignment: points.expand(&assignment),
        modes,
        mode_objective: cost,
        iterations,
        converged,
        objective_trace: trace,
    })
}
