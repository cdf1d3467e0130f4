use cltlab::exact;
use cltlab::params::{validate, Layout, SequenceParams, WeightSchedule};
use cltlab::sim::trapezoid_weight;
use proptest::prelude::*;

/// Nonincreasing weights in (0, 1] and a block layout over 1..=K.
fn desk_params() -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
    (3usize..=18)
        .prop_flat_map(|k| {
            (
                proptest::collection::vec(0.0f64..0.3, k),
                0.2f64..=1.0,
                proptest::collection::btree_set(1..=k, 1..=4usize.min(k)),
            )
        })
        .prop_map(|(drops, top, ends)| {
            let mut a = top;
            let w = drops
                .iter()
                .map(|d| {
                    let v = a;
                    a = (a * (1.0 - d)).max(1e-3);
                    v
                })
                .collect();
            (w, ends.into_iter().collect())
        })
}

fn build(w: &[f64], ends: &[usize]) -> SequenceParams {
    SequenceParams::new(WeightSchedule::custom(w.to_vec()).unwrap(), Layout::Ends { ends: ends.to_vec() }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn blocks_partition_the_indices((w, ends) in desk_params()) {
        let p = build(&w, &ends);
        prop_assert!(validate(&p).partition_ok);
        let mut prev = 0u64;
        for b in p.blocks() {
            for k in b.ks() {
                let nk = SequenceParams::n(k);
                prop_assert!(prev < nk && nk <= b.horizon);
                prop_assert_eq!(p.block_of(k).map(|x| x.index), Some(b.index));
            }
            prev = b.horizon;
        }
        prop_assert_eq!(p.blocks().last().unwrap().k_hi, w.len());
    }

    #[test]
    fn b_grows_by_block_mass((w, ends) in desk_params()) {
        let p = build(&w, &ends);
        let mut last = 0.0;
        for n in 1..=(1u64 << w.len().min(12)) {
            let b2 = exact::b_sq(&p, n);
            prop_assert!(b2 >= last);
            last = b2;
        }
        let mut prev = 0.0;
        for b in p.complete_blocks() {
            let b2 = exact::b_sq(&p, b.horizon);
            prop_assert!((b2 - prev - b.mass * b.mass).abs() <= 1e-12 * b2);
            prev = b2;
        }
    }

    #[test]
    fn orthogonal_decomposition((w, ends) in desk_params(), e in 0u32..=14, frac in 0.5f64..=1.0) {
        let p = build(&w, &ends);
        let n = ((1u64 << e) as f64 * frac).max(1.0) as u64;
        let s = exact::sigma_sq(&p, n);
        let parts = exact::cond_norm_sq(&p, n) + exact::proj_norm_sq_total(&p, n);
        prop_assert!((s - parts).abs() <= 1e-10 * s, "N = {}: {} vs {}", n, s, parts);
    }

    #[test]
    fn projection_total_is_the_sum_over_lags((w, ends) in desk_params(), n in 1u64..300) {
        let p = build(&w, &ends);
        let direct: f64 = (1..n as i64).map(|l| exact::proj_norm_sq(&p, l, n)).sum();
        let total = exact::proj_norm_sq_total(&p, n);
        prop_assert!((direct - total).abs() <= 1e-11 * total.max(1e-300));
    }

    #[test]
    fn larger_weights_never_shrink_moments((w, ends) in desk_params(), t in 0.0f64..1.0, n in 1u64..5000) {
        let p = build(&w, &ends);
        let up: Vec<f64> = w.iter().map(|a| t + (1.0 - t) * a).collect();
        let q = build(&up, &ends);
        let le = |x: f64, y: f64| x <= y * (1.0 + 1e-12);
        prop_assert!(le(exact::b_sq(&p, n), exact::b_sq(&q, n)));
        prop_assert!(le(exact::cond_norm_sq(&p, n), exact::cond_norm_sq(&q, n)));
        prop_assert!(le(exact::sigma_sq(&p, n), exact::sigma_sq(&q, n)));
    }

    #[test]
    fn pair_counts_are_conserved(k in 1usize..=20, n in 1u64..100_000) {
        let nk = 1u64 << k;
        let lo = -(nk as i64 - 1);
        let hi = n as i64 - 1;
        let total: u64 = (lo..=hi).map(|m| trapezoid_weight(nk, m, n)).sum();
        prop_assert_eq!(total, n * nk);
        prop_assert_eq!(trapezoid_weight(nk, lo - 1, n), 0);
        prop_assert_eq!(trapezoid_weight(nk, hi + 1, n), 0);
    }
}

#[test]
fn bound_constant_is_stable_in_k_max() {
    let grid = exact::dyadic_grid(4, 20);
    let c = |k: usize| {
        let p = SequenceParams::with_ends(cltlab::params::WeightMode::ConstOne, k, &[5, k]).unwrap();
        exact::engine_table(&p, &grid).iter().map(|r| r.ratio_bound9).fold(0.0, f64::max)
    };
    let (c16, c20) = (c(16), c(20));
    assert!(c16.is_finite() && c20.is_finite());
    assert!(c16.max(c20) / c16.min(c20) <= 2.0, "{c16} vs {c20}");
}
