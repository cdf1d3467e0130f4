//! Weight schedule against an exact, literal evaluation of its definition.

mod common;

use cltlab::params::{build_weights, theorem2_schedule, WeightMode};
use common::rational::{q, to_f64, Q};
use num_traits::{One, Zero};

/// k_n is the first k with c_k ≤ 2^-n and k − k_{n-1} ≥ n; a_{k_n} is the
/// smaller of a_{k_{n-1}} and 1/Σ_{k_{n-1}<j≤k_n} 1/j; indices in between are
/// interpolated with α_j = min((j − k_{n-1})/n, 1). After the last k_n that
/// fits below K the schedule stays at its last value.
fn oracle(c: &[Q], k_max: usize) -> (Vec<usize>, Vec<Q>) {
    let mut a = vec![Q::zero(); k_max + 1];
    a[1] = Q::one();
    let mut ks = vec![1usize];
    let mut n = 1usize;
    loop {
        let prev = *ks.last().unwrap();
        let bound = Q::new(1.into(), num_bigint::BigInt::from(2).pow(n as u32));
        let next = (1..=k_max).find(|&k| k >= prev + n && c[k - 1] <= bound);
        match next {
            None => {
                for j in prev + 1..=k_max {
                    a[j] = a[prev].clone();
                }
                break;
            }
            Some(kn) => {
                let h: Q = (prev + 1..=kn).map(|j| q(1, j as i64)).sum();
                let cand = Q::one() / h;
                a[kn] = if cand < a[prev] { cand } else { a[prev].clone() };
                for j in prev + 1..kn {
                    let alpha = if j - prev <= n { q((j - prev) as i64, n as i64) } else { Q::one() };
                    a[j] = &a[prev] + alpha * (&a[kn] - &a[prev]);
                }
                ks.push(kn);
                n += 1;
                if kn == k_max {
                    break;
                }
            }
        }
    }
    (ks, a[1..].to_vec())
}

fn sequences() -> Vec<(&'static str, Vec<Q>)> {
    let k = 400;
    vec![
        ("1/k", (1..=k).map(|j| q(1, j)).collect()),
        ("1/(k+1)", (1..=k).map(|j| q(1, j + 1)).collect()),
        ("2/(k+3)", (1..=k).map(|j| q(2, j + 3)).collect()),
        ("steps", (1..=k).map(|j| q(1, 1 + j / 7)).collect()),
        ("slow", (1..=k).map(|j| q(1, 2 + (j as f64).sqrt() as i64)).collect()),
    ]
}

#[test]
fn schedule_matches_definition() {
    for (name, c) in sequences() {
        let cf: Vec<f64> = c.iter().map(to_f64).collect();
        for k_max in [1usize, 2, 3, 10, 57, 400] {
            let s = theorem2_schedule(&cf, k_max).unwrap();
            let (ks, a) = oracle(&c, k_max);
            assert_eq!(s.breakpoints, ks, "{name} K={k_max}");
            for (j, (got, want)) in s.values.iter().zip(&a).enumerate() {
                let w = to_f64(want);
                assert!((got - w).abs() <= 1e-13 * w, "{name} K={k_max} a_{} {got} vs {w}", j + 1);
            }
        }
    }
}

#[test]
fn schedule_is_nonincreasing_and_in_range() {
    for (_, c) in sequences() {
        let cf: Vec<f64> = c.iter().map(to_f64).collect();
        let w = build_weights(WeightMode::Theorem2, 400, Some(&cf)).unwrap();
        assert!(w.range_violations().is_empty());
        assert!(w.monotonicity_violations().is_empty());
    }
}

/// Σ_{k≤K} a_k c_k / k ≤ Σ_n 2^{-n} (1 + n a_{k_{n-1}}) + a_1 c_1.
#[test]
fn weighted_partial_sums_stay_below_the_proof_bound() {
    for (name, c) in sequences() {
        let cf: Vec<f64> = c.iter().map(to_f64).collect();
        let s = theorem2_schedule(&cf, 400).unwrap();
        let last = *s.breakpoints.last().unwrap();
        let mut bound = s.values[0] * cf[0];
        for (i, &kprev) in s.breakpoints.iter().enumerate() {
            let n = (i + 1) as f64;
            bound += 0.5f64.powi(i as i32 + 1) * (1.0 + n * s.values[kprev - 1]);
        }
        let mut sum = 0.0;
        for k in 1..=last {
            sum += s.values[k - 1] * cf[k - 1] / k as f64;
            assert!(sum <= bound, "{name}: partial sum {sum} above {bound} at k = {k}");
        }
    }
}
