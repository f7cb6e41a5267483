//! Empirical audits of the approximation bounds, backed by brute-force
//! oracles that share no code path with the solvers they check.
//!
//! * [`audit_lemma1`]: on random subsets, the best member representative
//!   costs at most twice the mode.
//! * [`audit_lemma2`]: on small random instances, the optimal k-median
//!   objective is at most twice the optimal k-modes objective, the latter
//!   found by enumerating every k-labelling of the records.
//! * [`audit_oracle`]: pruned exhaustive search agrees with a naive
//!   enumeration of all k-subsets.
//! * [`audit_mode_optimality`]: the frequency mode matches a search over the
//!   whole category product.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::{CategoricalDataset, LoadOptions};
use crate::error::{Error, Result};
use crate::eval::best_member_cost;
use crate::kmodes::{compute_mode, mode_cost};
use crate::medoids::{exhaustive_search, ExhaustiveConfig};

/// Shape of randomly generated audit instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InstanceParams {
    pub n_max: usize,
    pub m_max: usize,
    pub categories_max: usize,
    pub k: usize,
}

impl InstanceParams {
    /// Instances small enough for the partition oracle.
    pub const LEMMA2: Self = Self {
        n_max: 10,
        m_max: 4,
        categories_max: 3,
        k: 2,
    };
    /// Instances for pruned-vs-naive exhaustive search; `k` is the largest k drawn.
    pub const ORACLE: Self = Self {
        n_max: 40,
        m_max: 6,
        categories_max: 4,
        k: 3,
    };
    /// Clusters for the mode-optimality check; `k` is unused.
    pub const MODES: Self = Self {
        n_max: 8,
        m_max: 4,
        categories_max: 4,
        k: 1,
    };
}

/// Uniform random categorical dataset with `n` rows over `m` attributes.
pub fn random_dataset(rng: &mut impl Rng, n: usize, m: usize, categories: usize) -> CategoricalDataset {
    let rows: Vec<Vec<String>> = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| format!("c{}", rng.random_range(0..categories)))
                .collect()
        })
        .collect();
    CategoricalDataset::from_rows(rows, None, &LoadOptions::default())
        .expect("generated rows are rectangular")
}

fn random_instance(rng: &mut impl Rng, params: &InstanceParams) -> CategoricalDataset {
    let n = rng.random_range(1..=params.n_max);
    let m = rng.random_range(1..=params.m_max);
    let c = rng.random_range(1..=params.categories_max);
    random_dataset(rng, n, m, c)
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        // 0/0: the bound holds vacuously
        if num == 0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num as f64 / den as f64
    }
}

/// Histogram bins of width 0.1 over [1, 2], plus an overflow bin above 2.
const BINS: usize = 11;

fn bin_of(r: f64) -> usize {
    if r > 2.0 {
        BINS - 1
    } else {
        (((r - 1.0).max(0.0) * 10.0).floor() as usize).min(BINS - 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioBin {
    pub lower: f64,
    pub upper: Option<f64>,
    pub count: u64,
}

fn histogram(counts: &[u64; BINS]) -> Vec<RatioBin> {
    counts
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            if i == BINS - 1 {
                RatioBin {
                    lower: 2.0,
                    upper: None,
                    count,
                }
            } else {
                RatioBin {
                    lower: 1.0 + i as f64 / 10.0,
                    upper: Some(1.0 + (i + 1) as f64 / 10.0),
                    count,
                }
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Case {
    pub trial: u64,
    pub subset: Vec<usize>,
    pub medoid_cost: u64,
    pub mode_cost: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub trials: u64,
    pub max_ratio: f64,
    pub histogram: Vec<RatioBin>,
    pub violations: Vec<Lemma1Case>,
    pub passed: bool,
}

/// Cost of the best member and of the mode for one set of records.
pub fn lemma1_costs(dataset: &CategoricalDataset, members: &[usize]) -> Result<(u64, u64)> {
    let weighted = || {
        members
            .iter()
            .map(|&i| (dataset.records[i].values.as_slice(), dataset.records[i].weight))
    };
    let mode = compute_mode(weighted())?;
    Ok((best_member_cost(dataset, members), mode_cost(weighted(), &mode)))
}

/// Samples random non-empty record subsets and checks that the best member
/// costs at most twice the mode on each.
pub fn audit_lemma1(dataset: &CategoricalDataset, trials: u64, seed: u64) -> Result<Lemma1Report> {
    let n = dataset.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bins = [0u64; BINS];
    let mut max_ratio: f64 = 0.0;
    let mut violations = Vec::new();
    for trial in 0..trials {
        let size = rng.random_range(1..=n);
        let mut subset = rand::seq::index::sample(&mut rng, n, size).into_vec();
        subset.sort_unstable();
        let (medoid, mode) = lemma1_costs(dataset, &subset)?;
        let r = ratio(medoid, mode);
        max_ratio = max_ratio.max(r);
        bins[bin_of(r)] += 1;
        if medoid > 2 * mode {
            violations.push(Lemma1Case {
                trial,
                subset,
                medoid_cost: medoid,
                mode_cost: mode,
            });
        }
    }
    Ok(Lemma1Report {
        trials,
        max_ratio,
        histogram: histogram(&bins),
        passed: violations.is_empty(),
        violations,
    })
}

/// Largest number of labellings the partition oracle will enumerate.
const PARTITION_LIMIT: u64 = 1 << 22;

/// Optimal k-modes objective by trying every assignment of records to k
/// labels. Each cluster's cost is minimized attribute by attribute over every
/// category of that attribute.
pub fn brute_force_kmodes(dataset: &CategoricalDataset, k: usize) -> Result<u64> {
    let n = dataset.len();
    if k == 0 {
        return Err(Error::InvalidK {
            k,
            reason: "k must be at least 1".into(),
        });
    }
    let labellings = (k as u64).checked_pow(n as u32).filter(|&l| l <= PARTITION_LIMIT);
    let Some(labellings) = labellings else {
        return Err(Error::OracleTooLarge(format!("{k}^{n} labellings")));
    };
    let m = dataset.m();
    let domain: Vec<usize> = dataset.schema.attributes.iter().map(|a| a.len()).collect();
    let mut labels = vec![0usize; n];
    let mut best = u64::MAX;
    for code in 0..labellings {
        let mut rest = code;
        for l in labels.iter_mut() {
            *l = (rest % k as u64) as usize;
            rest /= k as u64;
        }
        let mut total = 0u64;
        for cluster in 0..k {
            for r in 0..m {
                let mut cheapest = u64::MAX;
                for cat in 0..domain[r] as u32 {
                    let mismatches: u64 = dataset
                        .records
                        .iter()
                        .zip(&labels)
                        .filter(|(rec, &l)| l == cluster && rec.values[r] != cat)
                        .map(|(rec, _)| rec.weight)
                        .sum();
                    cheapest = cheapest.min(mismatches);
                }
                total += cheapest;
            }
            if total >= best {
                break;
            }
        }
        best = best.min(total);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Case {
    pub trial: u64,
    pub n: usize,
    pub m: usize,
    pub median_optimum: u64,
    pub modes_optimum: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Report {
    pub trials: u64,
    pub max_ratio: f64,
    pub violations: Vec<Lemma2Case>,
    pub passed: bool,
}

/// The two optima of one instance: (exhaustive k-median, brute-force k-modes).
pub fn lemma2_optima(dataset: &CategoricalDataset, k: usize) -> Result<(u64, u64)> {
    let n_distinct = dataset.distinct_points().len();
    let median = exhaustive_search(dataset, &ExhaustiveConfig::new(k.min(n_distinct)))?;
    let modes = brute_force_kmodes(dataset, k)?;
    Ok((median.medoid_objective, modes))
}

/// Checks OPT(k-median) ≤ 2 · OPT(k-modes) on random small instances.
pub fn audit_lemma2(params: &InstanceParams, trials: u64, seed: u64) -> Result<Lemma2Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    let mut violations = Vec::new();
    for trial in 0..trials {
        let inst = random_instance(&mut rng, params);
        let (median, modes) = lemma2_optima(&inst, params.k)?;
        max_ratio = max_ratio.max(ratio(median, modes));
        if median > 2 * modes {
            violations.push(Lemma2Case {
                trial,
                n: inst.len(),
                m: inst.m(),
                median_optimum: median,
                modes_optimum: modes,
            });
        }
    }
    Ok(Lemma2Report {
        trials,
        max_ratio,
        passed: violations.is_empty(),
        violations,
    })
}

/// Pruning-free exhaustive search: every k-subset of distinct points in
/// lexicographic order, full cost each, first strict minimum kept. Returns
/// the objective and the medoids as record indices.
pub fn naive_exhaustive(dataset: &CategoricalDataset, k: usize) -> Result<(u64, Vec<usize>)> {
    let points = dataset.distinct_points();
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK {
            k,
            reason: format!("need 1 ≤ k ≤ {n}"),
        });
    }
    let mismatch = |a: usize, b: usize| {
        points
            .point(a)
            .iter()
            .zip(points.point(b))
            .filter(|(x, y)| x != y)
            .count() as u64
    };
    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut subset = Vec::with_capacity(k);
    fn walk(
        start: usize,
        n: usize,
        k: usize,
        subset: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if subset.len() == k {
            visit(subset);
            return;
        }
        for c in start..n {
            subset.push(c);
            walk(c + 1, n, k, subset, visit);
            subset.pop();
        }
    }
    walk(0, n, k, &mut subset, &mut |s| {
        let cost: u64 = (0..n)
            .map(|x| points.weight(x) * s.iter().map(|&c| mismatch(x, c)).min().unwrap())
            .sum();
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, s.to_vec()));
        }
    });
    let (cost, subset) = best.expect("at least one subset");
    Ok((cost, subset.iter().map(|&p| points.first_record(p)).collect()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleMismatch {
    pub trial: u64,
    pub k: usize,
    pub pruned: (u64, Vec<usize>),
    pub naive: (u64, Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub trials: u64,
    pub mismatches: Vec<OracleMismatch>,
    pub passed: bool,
}

/// Compares pruned exhaustive search with [`naive_exhaustive`] on random instances.
pub fn audit_oracle(params: &InstanceParams, trials: u64, seed: u64) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = Vec::new();
    for trial in 0..trials {
        let inst = random_instance(&mut rng, params);
        let n_distinct = inst.distinct_points().len();
        let k = rng.random_range(1..=params.k.min(n_distinct));
        let pruned = exhaustive_search(&inst, &ExhaustiveConfig::new(k))?;
        let pruned = (pruned.medoid_objective, pruned.medoid_indices);
        let naive = naive_exhaustive(&inst, k)?;
        if pruned != naive {
            mismatches.push(OracleMismatch {
                trial,
                k,
                pruned,
                naive,
            });
        }
    }
    Ok(OracleReport {
        trials,
        passed: mismatches.is_empty(),
        mismatches,
    })
}

/// Minimum of Σ weight · d(X, Q) over every Q in the category product.
pub fn brute_force_mode_cost(
    members: &[(&[u32], u64)],
    domain_sizes: &[usize],
) -> Result<u64> {
    let combos = domain_sizes
        .iter()
        .try_fold(1u64, |acc, &s| acc.checked_mul(s.max(1) as u64))
        .filter(|&c| c <= PARTITION_LIMIT)
        .ok_or_else(|| Error::OracleTooLarge("category product".into()))?;
    let mut q = vec![0u32; domain_sizes.len()];
    let mut best = u64::MAX;
    for code in 0..combos {
        let mut rest = code;
        for (v, &s) in q.iter_mut().zip(domain_sizes) {
            let s = s.max(1) as u64;
            *v = (rest % s) as u32;
            rest /= s;
        }
        let cost: u64 = members
            .iter()
            .map(|(x, w)| w * x.iter().zip(&q).filter(|(a, b)| a != b).count() as u64)
            .sum();
        best = best.min(cost);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModeMismatch {
    pub trial: u64,
    pub mode_cost: u64,
    pub brute_force: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModeReport {
    pub trials: u64,
    pub mismatches: Vec<ModeMismatch>,
    pub passed: bool,
}

/// Checks that the frequency mode attains the category-product minimum on
/// random weighted clusters.
pub fn audit_mode_optimality(params: &InstanceParams, trials: u64, seed: u64) -> Result<ModeReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = Vec::new();
    for trial in 0..trials {
        let inst = random_instance(&mut rng, params);
        let weights: Vec<u64> = (0..inst.len()).map(|_| rng.random_range(1..=3)).collect();
        let members: Vec<(&[u32], u64)> = inst
            .records
            .iter()
            .zip(&weights)
            .map(|(r, &w)| (r.values.as_slice(), w))
            .collect();
        let mode = compute_mode(members.iter().copied())?;
        let cost = mode_cost(members.iter().copied(), &mode);
        let domain: Vec<usize> = inst.schema.attributes.iter().map(|a| a.len()).collect();
        let brute = brute_force_mode_cost(&members, &domain)?;
        if cost != brute {
            mismatches.push(ModeMismatch {
                trial,
                mode_cost: cost,
                brute_force: brute,
            });
        }
    }
    Ok(ModeReport {
        trials,
        passed: mismatches.is_empty(),
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(text: &str) -> CategoricalDataset {
        CategoricalDataset::from_reader(text.as_bytes(), &LoadOptions::default()).unwrap()
    }

    #[test]
    fn lemma1_three_records() {
        let d = ds("a,p\na,q\nb,q\n");
        assert_eq!(lemma1_costs(&d, &[0, 1, 2]).unwrap(), (2, 2));
        assert_eq!(lemma1_costs(&d, &[1]).unwrap(), (0, 0));
        assert_eq!(ratio(0, 0), 1.0);
    }

    #[test]
    fn lemma2_four_points() {
        let d = ds("a,a\na,b\nc,d\nc,e\n");
        assert_eq!(lemma2_optima(&d, 2).unwrap(), (2, 2));
    }

    #[test]
    fn lemma2_identical_records() {
        let d = ds("a,b\na,b\na,b\n");
        assert_eq!(lemma2_optima(&d, 2).unwrap(), (0, 0));
    }

    #[test]
    fn partition_oracle_refuses_large_instances() {
        let rows = "a\n".repeat(40);
        assert!(matches!(
            brute_force_kmodes(&ds(&rows), 2),
            Err(Error::OracleTooLarge(_))
        ));
    }

    #[test]
    fn naive_matches_hand_enumeration() {
        let d = ds("a,a\na,b\nc,d\nc,e\n");
        assert_eq!(naive_exhaustive(&d, 2).unwrap(), (2, vec![0, 2]));
        assert_eq!(naive_exhaustive(&d, 1).unwrap().0, 5);
    }

    #[test]
    fn brute_force_mode_small() {
        let d = ds("a,p\na,q\nb,q\n");
        let members: Vec<(&[u32], u64)> = d.records.iter().map(|r| (r.values.as_slice(), 1)).collect();
        assert_eq!(brute_force_mode_cost(&members, &[2, 2]).unwrap(), 2);
    }

    #[test]
    fn histogram_bins() {
        assert_eq!(bin_of(1.0), 0);
        assert_eq!(bin_of(1.05), 0);
        assert_eq!(bin_of(1.5), 5);
        assert_eq!(bin_of(2.0), 9);
        assert_eq!(bin_of(2.01), 10);
        let h = histogram(&[0; BINS]);
        assert_eq!(h.len(), BINS);
        assert_eq!(h[10].upper, None);
    }
}
