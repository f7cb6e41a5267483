use catclust::audit::{brute_force_kmodes, brute_force_mode_cost, naive_exhaustive};
use catclust::dataset::{CategoricalDataset, LoadOptions};
use catclust::eval::{accuracy_error, objective_under_medoids, objective_under_modes, ConfusionMatrix};
use catclust::kmodes::{compute_mode, mode_cost, run_kmodes, FrequencyTable, InitMethod, KModesConfig};
use catclust::medoids::{
    cost_of_medoid_set, exhaustive_search, local_search, ExhaustiveConfig, LocalSearchConfig,
};
use catclust::metric::{distance, pairwise_matrix, Dissimilarity, DistanceMode, OnTheFly};
use proptest::prelude::*;

fn build(rows: &[Vec<u8>]) -> CategoricalDataset {
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| r.iter().map(|v| format!("v{v}")).collect())
        .collect();
    CategoricalDataset::from_rows(rows, None, &LoadOptions::default()).unwrap()
}

/// Rows over `m` attributes with up to `cats` categories; small alphabets
/// make duplicate rows and distance ties common.
fn rows(n: std::ops::RangeInclusive<usize>, m: usize, cats: u8) -> impl Strategy<Value = Vec<Vec<u8>>> {
    (1..=m).prop_flat_map(move |m| {
        prop::collection::vec(prop::collection::vec(0..cats, m), n.clone())
    })
}

fn record(values: &[u8]) -> Vec<u32> {
    values.iter().map(|&v| v as u32).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_is_a_metric(
        x in prop::collection::vec(0u8..3, 6),
        y in prop::collection::vec(0u8..3, 6),
        z in prop::collection::vec(0u8..3, 6),
    ) {
        let (x, y, z) = (record(&x), record(&y), record(&z));
        prop_assert_eq!(distance(&x, &x), 0);
        prop_assert_eq!(distance(&x, &y), distance(&y, &x));
        prop_assert_eq!(distance(&x, &y) == 0, x == y);
        prop_assert!(distance(&x, &y) + distance(&y, &z) >= distance(&x, &z));
        let agree = x.iter().zip(&y).filter(|(a, b)| a == b).count() as u32;
        prop_assert_eq!(distance(&x, &y), 6 - agree);
    }

    #[test]
    fn matrix_matches_on_the_fly(data in rows(1..=15, 5, 3)) {
        let ds = build(&data);
        let pts = ds.distinct_points();
        let mat = pairwise_matrix(&pts, usize::MAX).unwrap();
        let otf = OnTheFly::new(&pts);
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                prop_assert_eq!(mat.dist(i, j), otf.dist(i, j));
                prop_assert_eq!(mat.dist(i, j), mat.dist(j, i));
            }
        }
    }

    #[test]
    fn mode_attains_product_minimum(data in rows(1..=8, 4, 4), w in prop::collection::vec(1u64..4, 8)) {
        let ds = build(&data);
        let members: Vec<(&[u32], u64)> = ds.records.iter().zip(&w).map(|(r, &w)| (r.values.as_slice(), w)).collect();
        let q = compute_mode(members.iter().copied()).unwrap();
        let domain: Vec<usize> = ds.schema.attributes.iter().map(|a| a.len()).collect();
        prop_assert_eq!(mode_cost(members.iter().copied(), &q), brute_force_mode_cost(&members, &domain).unwrap());
    }

    #[test]
    fn kmodes_objective_never_increases(data in rows(2..=30, 5, 3), k in 1usize..4, seed in 0u64..100) {
        let ds = build(&data);
        let cfg = KModesConfig { init: InitMethod::Random, seed, check_monotone: true, ..KModesConfig::new(k) };
        match run_kmodes(&ds, &cfg) {
            Ok(res) => {
                prop_assert!(res.objective_trace.windows(2).all(|w| w[1] <= w[0]));
                prop_assert_eq!(*res.objective_trace.last().unwrap(), res.mode_objective);
                let recomputed: u64 = ds.records.iter().zip(&res.assignment)
                    .map(|(r, &c)| distance(&r.values, &res.modes[c].0) as u64).sum();
                prop_assert_eq!(recomputed, res.mode_objective);
            }
            Err(catclust::Error::NotEnoughDistinct { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn dedup_is_exact(data in rows(1..=25, 4, 2), k in 1usize..4, seed in 0u64..50) {
        let raw = build(&data);
        let dd = raw.dedupe();
        prop_assert_eq!(dd.total_weight, raw.total_weight);

        // weighted frequencies agree per attribute
        let mut ft_raw = FrequencyTable::new(raw.m());
        let mut ft_dd = FrequencyTable::new(dd.m());
        raw.records.iter().for_each(|r| ft_raw.add(&r.values, r.weight));
        dd.records.iter().for_each(|r| ft_dd.add(&r.values, r.weight));
        prop_assert_eq!(ft_raw, ft_dd);

        let expand = |d: &CategoricalDataset, a: &[usize]| {
            let mut per_row = vec![0; raw.len()];
            for (rec, &c) in d.records.iter().zip(a) {
                for &row in &rec.source_rows { per_row[row] = c; }
            }
            per_row
        };
        for init in [InitMethod::FirstKDistinct, InitMethod::Random] {
            let cfg = KModesConfig { init, seed, ..KModesConfig::new(k) };
            if let (Ok(a), Ok(b)) = (run_kmodes(&raw, &cfg), run_kmodes(&dd, &cfg)) {
                prop_assert_eq!(a.mode_objective, b.mode_objective);
                prop_assert_eq!(expand(&raw, &a.assignment), expand(&dd, &b.assignment));
            }
        }
        if let (Ok(a), Ok(b)) = (
            exhaustive_search(&raw, &ExhaustiveConfig::new(k)),
            exhaustive_search(&dd, &ExhaustiveConfig::new(k)),
        ) {
            prop_assert_eq!(a.medoid_objective, b.medoid_objective);
            prop_assert_eq!(expand(&raw, &a.assignment), expand(&dd, &b.assignment));
        }
        let ls = LocalSearchConfig { seed, restarts: 2, ..LocalSearchConfig::default() };
        if let (Ok(a), Ok(b)) = (local_search(&raw, k, &ls), local_search(&dd, k, &ls)) {
            prop_assert_eq!(a.medoid_objective, b.medoid_objective);
            prop_assert_eq!(expand(&raw, &a.assignment), expand(&dd, &b.assignment));
        }
    }

    #[test]
    fn partition_objectives_are_sandwiched(data in rows(1..=20, 5, 3), labels in prop::collection::vec(0usize..3, 20)) {
        let ds = build(&data);
        // relabel to contiguous cluster ids so no cluster is empty
        let mut map = std::collections::BTreeMap::new();
        let assignment: Vec<usize> = labels[..ds.len()].iter().map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        }).collect();
        let modes = objective_under_modes(&ds, &assignment).unwrap();
        let medoids = objective_under_medoids(&ds, &assignment).unwrap();
        prop_assert!(modes <= medoids);
        prop_assert!(medoids <= 2 * modes);
    }

    #[test]
    fn accuracy_invariant_under_relabeling(counts in prop::collection::vec(prop::collection::vec(0u64..50, 3), 1..5)) {
        prop_assume!(counts.iter().flatten().sum::<u64>() > 0);
        let mut reversed = counts.clone();
        reversed.reverse();
        let a = accuracy_error(&ConfusionMatrix::from_counts(counts)).unwrap();
        let b = accuracy_error(&ConfusionMatrix::from_counts(reversed)).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(a.accuracy + a.error, num_rational::Ratio::from_integer(1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exhaustive_matches_naive(data in rows(1..=30, 5, 3), k in 1usize..4) {
        let ds = build(&data);
        let n = ds.distinct_points().len();
        prop_assume!(k <= n);
        let sol = exhaustive_search(&ds, &ExhaustiveConfig::new(k)).unwrap();
        prop_assert_eq!((sol.medoid_objective, sol.medoid_indices.clone()), naive_exhaustive(&ds, k).unwrap());
        let check = cost_of_medoid_set(&ds, &sol.medoid_indices).unwrap();
        prop_assert_eq!(check.objective, sol.medoid_objective);
        prop_assert_eq!(check.assignment, sol.assignment);
    }

    #[test]
    fn lemma2_bound_holds(data in rows(1..=9, 3, 3), k in 1usize..3) {
        let ds = build(&data);
        let n = ds.distinct_points().len();
        let median = exhaustive_search(&ds, &ExhaustiveConfig::new(k.min(n))).unwrap().medoid_objective;
        let modes = brute_force_kmodes(&ds, k).unwrap();
        prop_assert!(modes <= median);
        prop_assert!(median <= 2 * modes);
    }

    #[test]
    fn local_search_is_swap_stable(data in rows(2..=25, 5, 3), k in 1usize..4, seed in 0u64..1000) {
        let ds = build(&data);
        let pts = ds.distinct_points();
        prop_assume!(k < pts.len());
        let cfg = LocalSearchConfig { seed, ..LocalSearchConfig::default() };
        let sol = local_search(&ds, k, &cfg).unwrap();
        let exact = exhaustive_search(&ds, &ExhaustiveConfig::new(k)).unwrap();
        prop_assert!(sol.medoid_objective >= exact.medoid_objective);

        // no single swap improves by the threshold
        let current = sol.medoid_objective;
        let medoid_points: Vec<usize> = sol.medoid_indices.iter().map(|&r| pts.record_points()[r]).collect();
        for pos in 0..k {
            for cand in (0..pts.len()).filter(|c| !medoid_points.contains(c)) {
                let mut trial: Vec<usize> = sol.medoid_indices.clone();
                trial[pos] = pts.first_record(cand);
                let cost = cost_of_medoid_set(&ds, &trial).unwrap().objective;
                if cost < current {
                    let rel = (current - cost) as f64 / current as f64;
                    prop_assert!(rel < cfg.min_relative_improvement, "improving swap {pos}->{cand}");
                }
            }
        }
    }

    #[test]
    fn solvers_agree_across_distance_backends(data in rows(1..=25, 5, 3), k in 1usize..4, seed in 0u64..100) {
        let ds = build(&data);
        prop_assume!(k <= ds.distinct_points().len());
        let run_ex = |mode| exhaustive_search(&ds, &ExhaustiveConfig { distances: mode, ..ExhaustiveConfig::new(k) }).unwrap();
        let (a, b) = (run_ex(DistanceMode::Matrix), run_ex(DistanceMode::OnTheFly));
        prop_assert_eq!((a.medoid_indices, a.assignment), (b.medoid_indices, b.assignment));
        let run_ls = |mode| local_search(&ds, k, &LocalSearchConfig { seed, restarts: 3, distances: mode, ..LocalSearchConfig::default() }).unwrap();
        let (a, b) = (run_ls(DistanceMode::Matrix), run_ls(DistanceMode::OnTheFly));
        prop_assert_eq!((a.medoid_indices, a.assignment), (b.medoid_indices, b.assignment));
    }

    #[test]
    fn multi_swap_never_worse_than_single(data in rows(3..=12, 4, 3), seed in 0u64..100) {
        let ds = build(&data);
        prop_assume!(ds.distinct_points().len() >= 3);
        let one = local_search(&ds, 2, &LocalSearchConfig { seed, ..LocalSearchConfig::default() }).unwrap();
        let two = local_search(&ds, 2, &LocalSearchConfig { seed, p: 2, ..LocalSearchConfig::default() }).unwrap();
        let exact = exhaustive_search(&ds, &ExhaustiveConfig::new(2)).unwrap();
        // with k = 2, a 2-swap can reach any medoid pair
        prop_assert_eq!(two.medoid_objective, exact.medoid_objective);
        prop_assert!(one.medoid_objective >= exact.medoid_objective);
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let ds = catclust::audit::random_dataset(&mut rng, 120, 8, 3);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let ex = exhaustive_search(&ds, &ExhaustiveConfig::new(2)).unwrap();
            let ls = local_search(&ds, 3, &LocalSearchConfig { seed: 5, restarts: 4, ..LocalSearchConfig::default() }).unwrap();
            let km = run_kmodes(&ds, &KModesConfig::new(3)).unwrap();
            (ex.medoid_indices, ex.assignment, ls.medoid_indices, ls.assignment, km.assignment, km.mode_objective)
        })
    };
    let one = run(1);
    for threads in [2, 3, 8] {
        assert_eq!(run(threads), one);
    }
}
