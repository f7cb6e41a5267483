mod common;

use catclust::metric::{pairwise_matrix, Dissimilarity, OnTheFly, DEFAULT_MATRIX_BUDGET};

fn votes() -> Option<catclust::CategoricalDataset> {
    match common::load_uci(common::VOTES_FILE) {
        Ok(ds) => Some(ds),
        Err(e) => {
            eprintln!("skipping: {e}");
            None
        }
    }
}

#[test]
fn shape_and_class_balance() {
    let Some(ds) = votes() else { return };
    let stats = ds.stats();
    assert_eq!(stats.n, 435);
    assert_eq!(stats.m, 16);
    let hist: Vec<(String, u64)> = stats.label_histogram.unwrap();
    let mut counts: Vec<u64> = hist.iter().map(|(_, c)| *c).collect();
    counts.sort();
    assert_eq!(counts, vec![168, 267]);
    // yes / no / missing on every issue
    assert!(stats.category_counts.iter().all(|&c| c <= 3));
}

#[test]
fn matrix_rows_match_recomputation() {
    let Some(ds) = votes() else { return };
    let pts = ds.distinct_points();
    let mat = pairwise_matrix(&pts, DEFAULT_MATRIX_BUDGET).unwrap();
    let otf = OnTheFly::new(&pts);
    for i in 0..pts.len() {
        let naive: u64 = (0..pts.len())
            .map(|j| {
                let (x, y) = (pts.point(i), pts.point(j));
                x.iter().zip(y).filter(|(a, b)| a != b).count() as u64
            })
            .sum();
        let otf_sum: u64 = (0..pts.len()).map(|j| otf.dist(i, j) as u64).sum();
        assert_eq!(mat.row_sum(i), naive);
        assert_eq!(otf_sum, naive);
    }
}

#[test]
fn dedupe_keeps_every_row() {
    let Some(ds) = votes() else { return };
    let dd = ds.dedupe();
    assert_eq!(dd.total_weight, 435);
    let covered: usize = dd.records.iter().map(|r| r.source_rows.len()).sum();
    assert_eq!(covered, 435);
    // identical votes from different parties stay separate
    assert!(dd.len() >= ds.distinct_points().len());
}
