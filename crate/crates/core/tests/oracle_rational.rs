mod common;

use cltlab::exact;
use cltlab::params::{Layout, SequenceParams, WeightSchedule};
use common::rational::{self as ro, to_f64};

const LEVELS: [(i64, i64); 3] = [(1, 1), (1, 2), (1, 3)];

fn params(weights: &[(i64, i64)], ends: &[usize]) -> SequenceParams {
    let w = WeightSchedule::custom(weights.iter().map(|&(n, d)| n as f64 / d as f64).collect()).unwrap();
    SequenceParams::new(w, Layout::Ends { ends: ends.to_vec() }).unwrap()
}

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-10 * want.abs().max(1e-300)
}

#[test]
fn second_moments_match_rational_definition() {
    for k in 1..=3 {
        for (w, ends) in ro::small_instances(k, &LEVELS) {
            let p = params(&w, &ends);
            let inst = ro::instance(&w, &ends);
            for n in 1..=8i64 {
                let nu = n as u64;
                let want = to_f64(&ro::cond_norm_sq(&inst, n));
                assert!(close(exact::cond_norm_sq(&p, nu), want), "cond {w:?} {ends:?} N={n}");
                let want = to_f64(&ro::sigma_sq(&inst, n));
                assert!(close(exact::sigma_sq(&p, nu), want), "sigma {w:?} {ends:?} N={n}");
                for l in 0..=n {
                    let want = to_f64(&ro::proj_norm_sq(&inst, l, n));
                    let want = if l == 0 || l >= n { 0.0 } else { want };
                    let got = exact::proj_norm_sq(&p, l, nu);
                    assert!(close(got, want) || (want == 0.0 && got == 0.0), "proj {w:?} {ends:?} l={l} N={n}");
                }
                if n >= 2 {
                    let want = to_f64(&ro::lemma5_error_sq(&inst, n));
                    assert!(close(exact::lemma5_error_sq(&p, nu), want), "lemma5 {w:?} {ends:?} N={n}");
                }
            }
        }
    }
}

#[test]
fn series_tail_matches_definition() {
    for (w, ends) in ro::small_instances(3, &LEVELS).into_iter().step_by(5) {
        let p = params(&w, &ends);
        let inst = ro::instance(&w, &ends);
        for (a, b) in [(1, 1), (1, 8), (2, 5), (4, 8)] {
            let want = ro::series_tail_sq(&inst, a, b).sqrt();
            let got = exact::series2_tail_norm(&p, a as u64, b as u64).unwrap();
            assert!((got - want).abs() <= 1e-12 * want, "{w:?} {ends:?} [{a},{b}]");
        }
    }
}

#[test]
fn tiny_odd_block_value() {
    // K = 2, one block, N = 2. Coordinates m = 0, -1, -2, -3 carry
    // 1 + 1/4, 1/2 + 1/4, 1/4, 1/8, so the sum of squares is 141/64.
    let inst = ro::instance(&[(1, 1), (1, 1)], &[2]);
    let want = ro::cond_norm_sq(&inst, 2);
    assert_eq!(want, ro::q(141, 64));
    let p = params(&[(1, 1), (1, 1)], &[2]);
    assert!(close(exact::cond_norm_sq(&p, 2), 141.0 / 64.0));
}
