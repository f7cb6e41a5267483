//! k-median over the simple matching metric, with representatives restricted
//! to dataset members.
//!
//! Two solvers are provided. [`exhaustive_search`] enumerates every k-subset of
//! distinct points and returns an optimal medoid set; its objective is within
//! a factor of 2 of the optimal k-modes objective. [`local_search`] is a
//! swap-based heuristic with a (3 + 2/p) k-median factor, hence 2(3 + 2/p) for
//! k-modes.
//!
//! Both solvers work on [`DistinctPoints`]: records with identical values are
//! interchangeable as medoids, so each point is a candidate once and carries
//! the summed weight of its records. Reported medoid indices are the first
//! record holding each chosen point.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{CategoricalDataset, DistinctPoints};
use crate::error::{Error, Result};
use crate::metric::{
    distance, pairwise_matrix, Dissimilarity, DistanceMode, OnTheFly, DEFAULT_MATRIX_BUDGET,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Exhaustive,
    LocalSearch,
}

/// Approximation factors carried by a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Guarantee {
    /// Factor against the optimal k-median objective.
    pub kmedian_factor: f64,
    /// Factor against the optimal k-modes objective (twice the above).
    pub kmodes_factor: f64,
}

impl Guarantee {
    pub fn exhaustive() -> Self {
        Self {
            kmedian_factor: 1.0,
            kmodes_factor: 2.0,
        }
    }

    pub fn local_search(p: usize) -> Self {
        let alpha = 3.0 + 2.0 / p as f64;
        Self {
            kmedian_factor: alpha,
            kmodes_factor: 2.0 * alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedoidSolution {
    /// Record index of each medoid; cluster `i` is represented by `medoid_indices[i]`.
    pub medoid_indices: Vec<usize>,
    /// Cluster of every record.
    pub assignment: Vec<usize>,
    pub medoid_objective: u64,
    pub algorithm: Algorithm,
    pub guarantee: Guarantee,
    /// Subsets evaluated (exhaustive) or swaps applied over all restarts (local search).
    pub steps: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MedoidCost {
    pub objective: u64,
    pub assignment: Vec<usize>,
}

/// Weighted nearest-medoid cost of an explicit medoid list (record indices).
/// Ties go to the earliest position in `indices`.
pub fn cost_of_medoid_set(dataset: &CategoricalDataset, indices: &[usize]) -> Result<MedoidCost> {
    let n = dataset.len();
    for (pos, &i) in indices.iter().enumerate() {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        if indices[..pos].contains(&i) {
            return Err(Error::DuplicateIndex(i));
        }
    }
    if indices.is_empty() {
        return Err(Error::InvalidK {
            k: 0,
            reason: "at least one medoid is required".into(),
        });
    }
    let mut objective = 0;
    let assignment = dataset
        .records
        .iter()
        .map(|rec| {
            let (pos, d) = indices
                .iter()
                .enumerate()
                .map(|(pos, &i)| (pos, distance(&rec.values, &dataset.records[i].values)))
                .fold((0, u32::MAX), |best, cur| if cur.1 < best.1 { cur } else { best });
            objective += rec.weight * d as u64;
            pos
        })
        .collect();
    Ok(MedoidCost {
        objective,
        assignment,
    })
}

/// Default refusal threshold for exhaustive search, in distinct points.
pub const EXHAUSTIVE_SIZE_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExhaustiveConfig {
    pub k: usize,
    /// Refuse instances with more distinct points; `None` lifts the limit.
    pub size_limit: Option<usize>,
    pub distances: DistanceMode,
    pub matrix_budget: usize,
}

impl ExhaustiveConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            size_limit: Some(EXHAUSTIVE_SIZE_LIMIT),
            distances: DistanceMode::Auto,
            matrix_budget: DEFAULT_MATRIX_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalSearchConfig {
    /// Maximum number of medoids exchanged in one swap.
    pub p: usize,
    pub seed: u64,
    /// A swap is taken only if it lowers the objective by at least this fraction.
    pub min_relative_improvement: f64,
    pub max_steps: usize,
    pub restarts: usize,
    pub distances: DistanceMode,
    pub matrix_budget: usize,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        Self {
            p: 1,
            seed: 0,
            min_relative_improvement: 1e-9,
            max_steps: 10_000,
            restarts: 1,
            distances: DistanceMode::Auto,
            matrix_budget: DEFAULT_MATRIX_BUDGET,
        }
    }
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

/// Runs `f` against a distance matrix or the on-the-fly oracle per `mode`.
fn with_distances<T>(
    points: &DistinctPoints,
    mode: DistanceMode,
    budget: usize,
    f: impl FnOnce(&dyn Dissimilarity) -> T,
) -> Result<T> {
    match mode {
        DistanceMode::OnTheFly => Ok(f(&OnTheFly::new(points))),
        DistanceMode::Matrix => Ok(f(&pairwise_matrix(points, budget)?)),
        DistanceMode::Auto => match pairwise_matrix(points, budget) {
            Ok(mat) => Ok(f(&mat)),
            Err(Error::MemoryBudget { .. }) => Ok(f(&OnTheFly::new(points))),
            Err(e) => Err(e),
        },
    }
}

/// Nearest-medoid assignment over points and the weighted objective.
fn point_assignment(
    d: &dyn Dissimilarity,
    weights: &[u64],
    medoids: &[usize],
) -> (Vec<usize>, u64) {
    let mut cost = 0;
    let assignment = (0..d.len())
        .map(|x| {
            let mut best = (0, u32::MAX);
            for (pos, &m) in medoids.iter().enumerate() {
                let dx = d.dist(m, x);
                if dx < best.1 {
                    best = (pos, dx);
                }
            }
            cost += weights[x] * best.1 as u64;
            best.0
        })
        .collect();
    (assignment, cost)
}

fn to_solution(
    points: &DistinctPoints,
    medoids: &[usize],
    point_assign: &[usize],
    objective: u64,
    algorithm: Algorithm,
    guarantee: Guarantee,
    steps: u64,
    started: Instant,
) -> MedoidSolution {
    MedoidSolution {
        medoid_indices: medoids.iter().map(|&p| points.first_record(p)).collect(),
        assignment: points.expand(point_assign),
        medoid_objective: objective,
        algorithm,
        guarantee,
        steps,
        elapsed: started.elapsed(),
    }
}

/// Best k-subset in the subtree rooted at `first`, enumerated lexicographically.
struct SubtreeSearch<'a> {
    d: &'a dyn Dissimilarity,
    weights: &'a [u64],
    k: usize,
    global: &'a AtomicU64,
    best_cost: u64,
    best: Vec<usize>,
    chosen: Vec<usize>,
    evaluated: u64,
}

impl SubtreeSearch<'_> {
    fn descend(&mut self, near: &[u32], next: usize) {
        let n = self.d.len();
        let remaining = self.k - self.chosen.len();
        if remaining == 1 {
            for c in next..n {
                self.leaf(near, c);
            }
            return;
        }
        for c in next..=n - remaining {
            let narrowed: Vec<u32> = near
                .iter()
                .enumerate()
                .map(|(x, &dn)| dn.min(self.d.dist(c, x)))
                .collect();
            self.chosen.push(c);
            self.descend(&narrowed, c + 1);
            self.chosen.pop();
        }
    }

    fn leaf(&mut self, near: &[u32], c: usize) {
        self.evaluated += 1;
        // a tie with another worker's incumbent may still win lexicographically
        let bound = self.best_cost.min(self.global.load(Ordering::Relaxed));
        let mut cost = 0u64;
        for (x, &dn) in near.iter().enumerate() {
            cost += self.weights[x] * dn.min(self.d.dist(c, x)) as u64;
            if cost > bound {
                return;
            }
        }
        if cost < self.best_cost {
            self.best_cost = cost;
            self.best.clear();
            self.best.extend_from_slice(&self.chosen);
            self.best.push(c);
            self.global.fetch_min(cost, Ordering::Relaxed);
        }
    }
}

/// Exhaustive k-subset search over point indices. Returns the optimal cost,
/// the lexicographically smallest optimal subset, and the number of subsets
/// evaluated.
pub(crate) fn exhaustive_points(
    d: &dyn Dissimilarity,
    weights: &[u64],
    k: usize,
) -> (u64, Vec<usize>, u64) {
    let n = d.len();
    debug_assert!(k >= 1 && k <= n);
    let global = AtomicU64::new(u64::MAX);
    (0..=n - k)
        .into_par_iter()
        .map(|first| {
            let mut search = SubtreeSearch {
                d,
                weights,
                k,
                global: &global,
                best_cost: u64::MAX,
                best: Vec::new(),
                chosen: Vec::with_capacity(k),
                evaluated: 0,
            };
            if k == 1 {
                let near = vec![u32::MAX; n];
                search.leaf(&near, first);
            } else {
                let near: Vec<u32> = (0..n).map(|x| d.dist(first, x)).collect();
                search.chosen.push(first);
                search.descend(&near, first + 1);
            }
            (search.best_cost, search.best, search.evaluated)
        })
        .reduce(
            || (u64::MAX, Vec::new(), 0),
            |a, b| {
                let evaluated = a.2 + b.2;
                let (cost, subset) = if b.1.is_empty() || (!a.1.is_empty() && (a.0, &a.1) <= (b.0, &b.1)) {
                    (a.0, a.1)
                } else {
                    (b.0, b.1)
                };
                (cost, subset, evaluated)
            },
        )
}

/// Optimal medoid set by enumerating all k-subsets of distinct points, with
/// early abandoning of subsets that already exceed the incumbent. Ties resolve
/// to the lexicographically smallest index tuple regardless of scheduling.
pub fn exhaustive_search(
    dataset: &CategoricalDataset,
    config: &ExhaustiveConfig,
) -> Result<MedoidSolution> {
    let started = Instant::now();
    let points = dataset.distinct_points();
    check_k(config.k, points.len())?;
    if let Some(limit) = config.size_limit {
        if points.len() > limit {
            return Err(Error::InstanceTooLarge {
                n_distinct: points.len(),
                limit,
            });
        }
    }
    with_distances(&points, config.distances, config.matrix_budget, |d| {
        let (cost, medoids, evaluated) = exhaustive_points(d, points.weights(), config.k);
        let (assign, check) = point_assignment(d, points.weights(), &medoids);
        debug_assert_eq!(cost, check);
        to_solution(
            &points,
            &medoids,
            &assign,
            cost,
            Algorithm::Exhaustive,
            Guarantee::exhaustive(),
            evaluated,
            started,
        )
    })
}

/// Per-point nearest and second-nearest medoid distances.
struct Nearest {
    pos: Vec<usize>,
    first: Vec<u32>,
    second: Vec<u32>,
}

impl Nearest {
    fn compute(d: &dyn Dissimilarity, medoids: &[usize]) -> Self {
        let n = d.len();
        let mut pos = vec![0; n];
        let mut first = vec![u32::MAX; n];
        let mut second = vec![u32::MAX; n];
        for x in 0..n {
            for (i, &m) in medoids.iter().enumerate() {
                let dx = d.dist(m, x);
                if dx < first[x] {
                    second[x] = first[x];
                    first[x] = dx;
                    pos[x] = i;
                } else if dx < second[x] {
                    second[x] = dx;
                }
            }
        }
        Self { pos, first, second }
    }
}

/// A medoid exchange: positions leaving and points entering.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Swap {
    out: Vec<usize>,
    inn: Vec<usize>,
    delta: i64,
}

/// Best single swap by exact delta, O(n) per candidate. Ties prefer the
/// smallest entering point, then the smallest leaving position.
fn best_single_swap(
    d: &dyn Dissimilarity,
    weights: &[u64],
    medoids: &[usize],
) -> Option<Swap> {
    let n = d.len();
    let k = medoids.len();
    let near = Nearest::compute(d, medoids);
    let mut is_medoid = vec![false; n];
    for &m in medoids {
        is_medoid[m] = true;
    }
    (0..n)
        .into_par_iter()
        .filter(|&c| !is_medoid[c])
        .map(|c| {
            let mut shared = 0i64;
            let mut removal = vec![0i64; k];
            for x in 0..n {
                let dc = d.dist(c, x);
                let dn = near.first[x];
                let w = weights[x] as i64;
                if dc < dn {
                    shared += w * (dc as i64 - dn as i64);
                } else {
                    let fallback = near.second[x].min(dc);
                    removal[near.pos[x]] += w * (fallback as i64 - dn as i64);
                }
            }
            let (i, r) = removal
                .iter()
                .enumerate()
                .fold((0, i64::MAX), |b, (i, &r)| if r < b.1 { (i, r) } else { b });
            Swap {
                out: vec![i],
                inn: vec![c],
                delta: shared + r,
            }
        })
        .min_by(|a, b| (a.delta, a.inn[0], a.out[0]).cmp(&(b.delta, b.inn[0], b.out[0])))
}

fn combinations(n: usize, r: usize, mut f: impl FnMut(&[usize])) {
    if r > n {
        return;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        f(&idx);
        let mut i = r;
        while i > 0 && idx[i - 1] == i - 1 + n - r {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Best swap of up to `p` medoids by full re-evaluation.
fn best_multi_swap(
    d: &dyn Dissimilarity,
    weights: &[u64],
    medoids: &[usize],
    p: usize,
    current: u64,
) -> Option<Swap> {
    let n = d.len();
    let k = medoids.len();
    let outside: Vec<usize> = (0..n).filter(|x| !medoids.contains(x)).collect();
    let mut best: Option<Swap> = None;
    let mut trial = medoids.to_vec();
    for q in 1..=p.min(k).min(outside.len()) {
        combinations(k, q, |out| {
            combinations(outside.len(), q, |inn| {
                trial.copy_from_slice(medoids);
                for (&o, &i) in out.iter().zip(inn) {
                    trial[o] = outside[i];
                }
                let (_, cost) = point_assignment(d, weights, &trial);
                let delta = cost as i64 - current as i64;
                if best.as_ref().is_none_or(|b| delta < b.delta) {
                    best = Some(Swap {
                        out: out.to_vec(),
                        inn: inn.iter().map(|&i| outside[i]).collect(),
                        delta,
                    });
                }
            });
        });
    }
    best
}

fn accepts(current: u64, delta: i64, threshold: f64) -> bool {
    if delta >= 0 || current == 0 {
        return false;
    }
    (-delta) as f64 / current as f64 >= threshold
}

pub(crate) struct Descent {
    pub(crate) medoids: Vec<usize>,
    pub(crate) cost: u64,
    pub(crate) steps: u64,
}

fn descend_from(
    d: &dyn Dissimilarity,
    weights: &[u64],
    start: Vec<usize>,
    config: &LocalSearchConfig,
) -> Descent {
    let mut medoids = start;
    let (_, mut cost) = point_assignment(d, weights, &medoids);
    let mut steps = 0;
    while steps < config.max_steps as u64 {
        let swap = if config.p == 1 {
            best_single_swap(d, weights, &medoids)
        } else {
            best_multi_swap(d, weights, &medoids, config.p, cost)
        };
        match swap {
            Some(s) if accepts(cost, s.delta, config.min_relative_improvement) => {
                for (&o, &i) in s.out.iter().zip(&s.inn) {
                    medoids[o] = i;
                }
                cost = (cost as i64 + s.delta) as u64;
                steps += 1;
            }
            _ => break,
        }
    }
    Descent {
        medoids,
        cost,
        steps,
    }
}

pub(crate) fn local_search_points(
    d: &dyn Dissimilarity,
    weights: &[u64],
    k: usize,
    config: &LocalSearchConfig,
) -> Descent {
    let n = d.len();
    let runs: Vec<Descent> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(r as u64);
            let start = rand::seq::index::sample(&mut rng, n, k).into_vec();
            descend_from(d, weights, start, config)
        })
        .collect();
    let steps = runs.iter().map(|r| r.steps).sum();
    let mut best = runs
        .into_iter()
        .reduce(|a, b| if b.cost < a.cost { b } else { a })
        .expect("at least one restart");
    best.medoids.sort_unstable();
    best.steps = steps;
    best
}

/// Swap-based local search from seeded random starts; best of `restarts`.
pub fn local_search(
    dataset: &CategoricalDataset,
    k: usize,
    config: &LocalSearchConfig,
) -> Result<MedoidSolution> {
    let started = Instant::now();
    if config.p == 0 {
        return Err(Error::InvalidConfig("swap width p must be at least 1".into()));
    }
    if config.restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    if config.min_relative_improvement.is_nan() || config.min_relative_improvement < 0.0 {
        return Err(Error::InvalidConfig(
            "min_relative_improvement must be non-negative".into(),
        ));
    }
    let points = dataset.distinct_points();
    check_k(k, points.len())?;
    with_distances(&points, config.distances, config.matrix_budget, |d| {
        let run = local_search_points(d, points.weights(), k, config);
        let (assign, cost) = point_assignment(d, points.weights(), &run.medoids);
        debug_assert_eq!(cost, run.cost);
        to_solution(
            &points,
            &run.medoids,
            &assign,
            cost,
            Algorithm::LocalSearch,
            Guarantee::local_search(config.p),
            run.steps,
            started,
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LoadOptions;

    fn ds(text: &str) -> CategoricalDataset {
        CategoricalDataset::from_reader(text.as_bytes(), &LoadOptions::default()).unwrap()
    }

    fn four() -> CategoricalDataset {
        ds("a,a\na,b\nc,d\nc,e\n")
    }

    #[test]
    fn cost_of_four_point_example() {
        let c = cost_of_medoid_set(&four(), &[0, 2]).unwrap();
        assert_eq!(c.objective, 2);
        assert_eq!(c.assignment, vec![0, 0, 1, 1]);
    }

    #[test]
    fn all_records_as_medoids_cost_nothing() {
        let c = cost_of_medoid_set(&four(), &[0, 1, 2, 3]).unwrap();
        assert_eq!(c.objective, 0);
    }

    #[test]
    fn medoid_index_errors() {
        assert!(matches!(
            cost_of_medoid_set(&four(), &[0, 0]),
            Err(Error::DuplicateIndex(0))
        ));
        assert!(matches!(
            cost_of_medoid_set(&four(), &[9]),
            Err(Error::IndexOutOfRange { index: 9, n: 4 })
        ));
    }

    #[test]
    fn exhaustive_four_points() {
        let sol = exhaustive_search(&four(), &ExhaustiveConfig::new(2)).unwrap();
        assert_eq!(sol.medoid_objective, 2);
        assert_eq!(sol.medoid_indices, vec![0, 2]);
        assert_eq!(sol.steps, 6);
        assert_eq!(sol.guarantee.kmodes_factor, 2.0);
    }

    #[test]
    fn exhaustive_k_equals_n() {
        let sol = exhaustive_search(&four(), &ExhaustiveConfig::new(4)).unwrap();
        assert_eq!(sol.medoid_objective, 0);
        assert_eq!(sol.medoid_indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn exhaustive_size_gate() {
        let cfg = ExhaustiveConfig {
            size_limit: Some(3),
            ..ExhaustiveConfig::new(2)
        };
        assert!(matches!(
            exhaustive_search(&four(), &cfg),
            Err(Error::InstanceTooLarge {
                n_distinct: 4,
                limit: 3
            })
        ));
        let cfg = ExhaustiveConfig {
            size_limit: None,
            ..cfg
        };
        assert!(exhaustive_search(&four(), &cfg).is_ok());
    }

    #[test]
    fn local_search_four_points_any_seed() {
        for seed in 0..20 {
            let cfg = LocalSearchConfig {
                seed,
                ..LocalSearchConfig::default()
            };
            let sol = local_search(&four(), 2, &cfg).unwrap();
            assert_eq!(sol.medoid_objective, 2, "seed {seed}");
        }
    }

    #[test]
    fn local_search_k_equals_n() {
        let sol = local_search(&four(), 4, &LocalSearchConfig::default()).unwrap();
        assert_eq!(sol.medoid_objective, 0);
        assert_eq!(sol.steps, 0);
    }

    #[test]
    fn local_search_rejects_bad_config() {
        let bad = LocalSearchConfig {
            p: 0,
            ..LocalSearchConfig::default()
        };
        assert!(matches!(
            local_search(&four(), 2, &bad),
            Err(Error::InvalidConfig(_))
        ));
        let bad = LocalSearchConfig {
            restarts: 0,
            ..LocalSearchConfig::default()
        };
        assert!(local_search(&four(), 2, &bad).is_err());
    }

    #[test]
    fn single_swap_delta_matches_reevaluation() {
        let d = ds("a,a,x\na,b,x\nc,d,y\nc,e,y\nb,b,x\nc,c,z\na,e,z\n");
        let pts = d.distinct_points();
        let mat = OnTheFly::new(&pts);
        let medoids = vec![1, 5];
        let (_, cost) = point_assignment(&mat, pts.weights(), &medoids);
        let fast = best_single_swap(&mat, pts.weights(), &medoids).unwrap();
        let slow = best_multi_swap(&mat, pts.weights(), &medoids, 1, cost).unwrap();
        assert_eq!(fast.delta, slow.delta);
    }

    #[test]
    fn combinations_enumerates_lexicographically() {
        let mut seen = Vec::new();
        combinations(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        let mut count = 0;
        combinations(3, 3, |_| count += 1);
        assert_eq!(count, 1);
        combinations(2, 3, |_| panic!("no combinations"));
    }

    #[test]
    fn guarantee_factors() {
        let g = Guarantee::local_search(1);
        assert_eq!(g.kmedian_factor, 5.0);
        assert_eq!(g.kmodes_factor, 10.0);
        assert_eq!(Guarantee::local_search(2).kmedian_factor, 4.0);
    }
}
