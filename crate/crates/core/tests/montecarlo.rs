use partree::bounds::{
    doubling_failure_bound, doubling_phi_bound, failure_bound, level_count, level_sizes,
    spill_failure_bound_from_parts, topic_phi_bound, BoundFamily,
};
use partree::eval::{knn_separation_frequency, separated_fraction};
use partree::generators::{
    expected_lengths, sample_doubling, sample_topic_documents, sample_topic_model, DoublingParams,
    TopicModelParams,
};
use partree::oracle::compute_v;
use partree::potential::{phi, separation_probability_bound};
use partree::{NeighborOrdering, PotentialProfile, RngSeed, TreeKind};
use proptest::prelude::*;

fn doubling(n: usize, seed: u64) -> partree::Dataset {
    sample_doubling(&DoublingParams {
        intrinsic_dim: 2,
        ambient_dim: 6,
        n,
        seed: RngSeed::new(seed),
    })
    .unwrap()
}

#[test]
fn separated_fraction_stays_below_half_phi() {
    let data = doubling(3000, 1);
    let queries = doubling(6, 2);
    for (j, q) in queries.rows().enumerate() {
        let ord = NeighborOrdering::new(&data, q).unwrap();
        for m in [10, 100, 1000] {
            let est = separated_fraction(&data, q, m, 20_000, &RngSeed::new(j as u64)).unwrap();
            let bound = 0.5 * phi(&ord, m).unwrap();
            assert!(
                est.mean <= bound + 3.0 * est.standard_error + 1e-12,
                "query {j}, m = {m}: {} > {bound}",
                est.mean
            );
        }
    }
}

#[test]
fn knn_separation_frequency_stays_below_its_bound() {
    let data = doubling(2000, 3);
    let queries = doubling(4, 4);
    for (j, q) in queries.rows().enumerate() {
        let ord = NeighborOrdering::new(&data, q).unwrap();
        for (k, m, alpha) in [(1, 200, 0.1), (3, 400, 0.1), (2, 100, 0.3)] {
            let est = knn_separation_frequency(&data, q, m, alpha, k, 20_000, &RngSeed::new(100 + j as u64)).unwrap();
            let bound = separation_probability_bound(&ord, m, alpha, k).unwrap();
            assert!(
                est.mean <= bound + 3.0 * est.standard_error + 1e-12,
                "query {j}, k = {k}, m = {m}: {} > {bound}",
                est.mean
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn levels_shrink_geometrically(n in 1usize..1_000_000, n_o in 1usize..1000, beta in 0.3f64..0.9, k in 1usize..4) {
        prop_assume!(n > k);
        let ell = level_count(n, n_o, beta).unwrap();
        let sizes = level_sizes(n, n_o, beta, k).unwrap();
        prop_assert_eq!(sizes.len(), ell + 1);
        prop_assert_eq!(sizes[0], n);
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(sizes.iter().all(|&m| m >= 2.max(k + 1)));
        if ell > 0 {
            // ℓ is the first depth at which β^ℓ n reaches n_o.
            prop_assert!(beta.powi(ell as i32) * n as f64 <= n_o as f64 * (1.0 + 1e-9));
            prop_assert!(beta.powi(ell as i32 - 1) * n as f64 > n_o as f64 * (1.0 - 1e-9));
        }
    }

    #[test]
    fn doubling_phi_bound_is_monotone(m in 2usize..100_000, d_o in 2.0f64..10.0, delta in 0.001f64..0.49, k in 1usize..10) {
        let b = doubling_phi_bound(m, d_o, delta, k).unwrap();
        prop_assert!(doubling_phi_bound(m + 1, d_o, delta, k).unwrap() <= b);
        prop_assert!(doubling_phi_bound(m, d_o, delta * 0.5, k).unwrap() >= b);
        prop_assert!(doubling_phi_bound(m, d_o, delta, k + 1).unwrap() >= b);
    }

    #[test]
    fn doubling_failure_bound_shrinks_with_leaf_size(
        d_o in 2.0f64..6.0,
        alpha in 0.01f64..0.49,
        n_o in 100usize..100_000,
        delta in 0.001f64..0.49,
        c_o in 0.001f64..0.1,
    ) {
        for family in [BoundFamily::Spill, BoundFamily::Rp] {
            let (Ok(a), Ok(b)) = (
                doubling_failure_bound(1, d_o, alpha, n_o, delta, c_o, family),
                doubling_failure_bound(1, d_o, alpha, 2 * n_o, delta, c_o, family),
            ) else { continue };
            prop_assert!(b.raw <= a.raw);
            prop_assert!(a.clamped <= 1.0 && a.clamped <= a.raw);
        }
        for kind in [TreeKind::Spill, TreeKind::VirtualSpill] {
            let a = spill_failure_bound_from_parts(1, d_o, alpha, n_o, delta, kind).unwrap();
            let b = spill_failure_bound_from_parts(1, d_o, alpha, 2 * n_o, delta, kind).unwrap();
            prop_assert!(b <= a);
            // Doubling n_o scales the bound by exactly 2^{-1/d_o}.
            prop_assert!((b / a - 2f64.powf(-1.0 / d_o)).abs() < 1e-9);
        }
    }

    #[test]
    fn tree_bounds_grow_with_the_potential(
        base in 0.0f64..0.5,
        extra in 0.0f64..0.5,
        alpha in 0.01f64..0.49,
        n in 100usize..100_000,
        n_o in 1usize..100,
    ) {
        let flat = |v: f64| PotentialProfile::from_values(1, vec![2, n], vec![v, v]).unwrap();
        for kind in [TreeKind::Rp, TreeKind::Spill, TreeKind::VirtualSpill] {
            let lo = failure_bound(&flat(base), kind, alpha, n_o, n, 1).unwrap();
            let hi = failure_bound(&flat(base + extra), kind, alpha, n_o, n, 1).unwrap();
            prop_assert!(hi.raw_total >= lo.raw_total - 1e-12);
            prop_assert!(lo.total <= 1.0 && lo.total <= lo.raw_total + 1e-15);
            prop_assert_eq!(lo.levels.len(), lo.per_level_term.len());
        }
    }
}

#[test]
fn spill_bound_forms_agree_up_to_the_constant() {
    let (d_o, alpha, delta, c_o) = (2.0, 0.1, 0.05, 0.125);
    let ratios: Vec<f64> = [100, 300, 1000, 3000, 10_000]
        .iter()
        .map(|&n_o| {
            let direct = doubling_failure_bound(1, d_o, alpha, n_o, delta, c_o, BoundFamily::Spill).unwrap();
            let parts = spill_failure_bound_from_parts(1, d_o, alpha, n_o, delta, TreeKind::Spill).unwrap();
            direct.raw / parts
        })
        .collect();
    for r in &ratios {
        assert!((r / ratios[0] - 1.0).abs() < 0.1, "{ratios:?}");
    }
    let full = doubling_failure_bound(1, d_o, alpha, 1000, delta, c_o, BoundFamily::Spill).unwrap();
    let half = doubling_failure_bound(1, d_o, alpha / 2.0, 1000, delta, c_o, BoundFamily::Spill).unwrap();
    assert!((half.raw / full.raw - 2.0).abs() < 1e-12);
}

#[test]
fn topic_potential_bound_holds_for_most_queries() {
    let (n, m, k, delta, c_o) = (2000, 1000, 1, 0.05, 0.125);
    let mut covered = 0;
    let mut trials = 0;
    for t in 0..50u64 {
        let params = TopicModelParams::random(5, 1000, 64.0, n, RngSeed::new(t)).unwrap();
        let length = expected_lengths(&params).unwrap().min;
        let data = sample_topic_model(&params).unwrap();
        let q = sample_topic_documents(&params, 1, &RngSeed::new(1000 + t)).unwrap();
        let q = q.point(0);
        let v = compute_v(q, &params, n, k, delta).unwrap();
        let Ok(bound) = topic_phi_bound(v, length, n, m, c_o) else { continue };
        let observed = phi(&NeighborOrdering::new(&data, q).unwrap(), m).unwrap();
        trials += 1;
        if observed <= bound {
            covered += 1;
        }
    }
    assert!(trials >= 40, "bound vacuous in {} of 50 trials", 50 - trials);
    assert!(covered as f64 >= 0.9 * trials as f64, "{covered} of {trials} covered");
}
