//! Definition-level second moments in exact rational arithmetic.
//!
//! S_N(f) = Σ_k Σ_{j<N} Σ_{i<n_k} (a_k / k) / n_k · U^{j-i} p_{l(k)}, so the
//! coefficient of each independent coordinate variable is obtained by the
//! literal triple loop. Nothing here shares code with the library.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap()
}

/// Weights a_k (k = 1..K) and the block index of each k.
pub struct Instance {
    pub a: Vec<Q>,
    pub block_of: Vec<usize>,
    pub n_blocks: usize,
}

impl Instance {
    fn alpha(&self, k: usize) -> Q {
        &self.a[k - 1] / Q::from_integer(BigInt::from(k))
    }
}

/// coordinate m -> coefficient per block.
pub fn coordinates(inst: &Instance, n: i64) -> BTreeMap<i64, Vec<Q>> {
    let mut map: BTreeMap<i64, Vec<Q>> = BTreeMap::new();
    for k in 1..=inst.a.len() {
        let nk = 1i64 << k;
        let c = inst.alpha(k) / Q::from_integer(BigInt::from(nk));
        for j in 0..n {
            for i in 0..nk {
                let e = map.entry(j - i).or_insert_with(|| vec![Q::zero(); inst.n_blocks]);
                e[inst.block_of[k - 1]] += &c;
            }
        }
    }
    map
}

fn sq(v: &[Q]) -> Q {
    v.iter().fold(Q::zero(), |acc, x| acc + x * x)
}

pub fn sigma_sq(inst: &Instance, n: i64) -> Q {
    coordinates(inst, n).values().fold(Q::zero(), |acc, v| acc + sq(v))
}

/// E(S_N | F_0) keeps the coordinates m ≤ 0.
pub fn cond_norm_sq(inst: &Instance, n: i64) -> Q {
    coordinates(inst, n)
        .iter()
        .filter(|(m, _)| **m <= 0)
        .fold(Q::zero(), |acc, (_, v)| acc + sq(v))
}

pub fn proj_norm_sq(inst: &Instance, l: i64, n: i64) -> Q {
    coordinates(inst, n).get(&l).map(|v| sq(v)).unwrap_or_else(Q::zero)
}

/// ‖S'_N − Σ_{l=0}^{N-1} U^l Σ_{n_k ≤ N} e_k‖², S'_N being the m ≥ 1 part.
pub fn lemma5_error_sq(inst: &Instance, n: i64) -> Q {
    let coords = coordinates(inst, n);
    let mut target = vec![Q::zero(); inst.n_blocks];
    for k in 1..=inst.a.len() {
        if (1i64 << k) <= n {
            target[inst.block_of[k - 1]] += inst.alpha(k);
        }
    }
    let mut total = Q::zero();
    let lo = *coords.keys().next().unwrap();
    for m in lo.min(0)..n {
        let s: Vec<Q> = if m >= 1 {
            coords.get(&m).cloned().unwrap_or_else(|| vec![Q::zero(); inst.n_blocks])
        } else {
            vec![Q::zero(); inst.n_blocks]
        };
        let diff: Vec<Q> = if m >= 0 {
            s.iter().zip(&target).map(|(x, t)| x - t).collect()
        } else {
            s
        };
        total += sq(&diff);
    }
    total
}

/// Σ_{N=p}^{q} E(S_N | F_0) / N^{3/2}, squared norm, with the N^{3/2}
/// factors kept symbolic: returns Σ_m Σ_b (Σ_N c_{N,m,b} w_N)² in f64 where
/// c is rational and w_N = N^{-3/2}.
pub fn series_tail_sq(inst: &Instance, p: i64, qq: i64) -> f64 {
    let mut acc: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for n in p..=qq {
        let w = (n as f64).powf(-1.5);
        for (m, v) in coordinates(inst, n).into_iter().filter(|(m, _)| *m <= 0) {
            let e = acc.entry(m).or_insert_with(|| vec![0.0; inst.n_blocks]);
            for (x, c) in e.iter_mut().zip(&v) {
                *x += to_f64(c) * w;
            }
        }
    }
    acc.values().flatten().map(|x| x * x).sum()
}

/// All nonincreasing weight vectors of length k over `levels`, paired with
/// every composition of 1..=k into consecutive blocks.
/// Weights as (numerator, denominator) pairs, and block ends.
pub type Layout = (Vec<(i64, i64)>, Vec<usize>);

pub fn small_instances(k_max: usize, levels: &[(i64, i64)]) -> Vec<Layout> {
    let mut weights: Vec<Vec<(i64, i64)>> = vec![vec![]];
    for _ in 0..k_max {
        let mut next = Vec::new();
        for w in &weights {
            for &lv in levels {
                let ok = w.last().map_or(true, |&(pn, pd): &(i64, i64)| lv.0 * pd <= pn * lv.1);
                if ok {
                    let mut v = w.clone();
                    v.push(lv);
                    next.push(v);
                }
            }
        }
        weights = next;
    }
    let mut ends_list = Vec::new();
    for mask in 0u32..(1 << (k_max - 1)) {
        let mut ends: Vec<usize> = (1..k_max).filter(|i| mask & (1 << (i - 1)) != 0).collect();
        ends.push(k_max);
        ends_list.push(ends);
    }
    let mut out = Vec::new();
    for w in &weights {
        for e in &ends_list {
            out.push((w.clone(), e.clone()));
        }
    }
    out
}

pub fn instance(weights: &[(i64, i64)], ends: &[usize]) -> Instance {
    let mut block_of = Vec::new();
    let mut lo = 1;
    for (b, &e) in ends.iter().enumerate() {
        for _ in lo..=e {
            block_of.push(b);
        }
        lo = e + 1;
    }
    Instance {
        a: weights.iter().map(|&(n, d)| q(n, d)).collect(),
        block_of,
        n_blocks: ends.len(),
    }
}
