//! Closed-form second moments of S_N(f).
//!
//! Every quantity is a sum of squares of block coefficients that are
//! piecewise linear in the shift index, so each is evaluated segment by
//! segment with [`linear_sum_sq`]. The cost is O(K_max²) per N regardless of
//! how large N or n_{K_max} are.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::RwLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{fmt17, linear_sum_sq, Neumaier};
use crate::params::SequenceParams;

/// Default work budget for [`series2_tail_norm`], in coefficient updates.
pub const DEFAULT_WORK_BUDGET: f64 = 4e9;

/// (n_k, a_k / k) for the indices of each block.
fn block_terms(params: &SequenceParams) -> Vec<Vec<(i128, f64)>> {
    params
        .blocks()
        .iter()
        .map(|b| b.ks().map(|k| (1i128 << k, params.a(k) / k as f64)).collect())
        .collect()
}

/// Σ_{x=lo}^{hi} Σ_b v_b(x)² where every v_b is linear between consecutive
/// entries of `starts`.
fn piecewise_sum_sq<F>(nb: usize, lo: i128, hi: i128, mut starts: Vec<i128>, eval: F) -> f64
where
    F: Fn(i128, &mut [f64]),
{
    if hi < lo {
        return 0.0;
    }
    starts.push(lo);
    starts.push(hi + 1);
    starts.retain(|&s| s >= lo && s <= hi + 1);
    starts.sort_unstable();
    starts.dedup();
    let mut acc = Neumaier::new();
    let mut v0 = vec![0.0; nb];
    let mut v1 = vec![0.0; nb];
    for w in starts.windows(2) {
        let (s, e) = (w[0], w[1] - 1);
        eval(s, &mut v0);
        eval(e, &mut v1);
        let len = (e - s + 1) as u128;
        for b in 0..nb {
            acc.add(linear_sum_sq(v0[b], v1[b], len));
        }
    }
    acc.value()
}

/// d_k(j, N): weight of the shift U^{-j} in E(S_N(e_k) | F_0) relative to e_k's
/// own coefficients.
pub fn conditional_weights(n_k: u64, j: u64, n: u64) -> f64 {
    if j >= n_k {
        0.0
    } else {
        n.min(n_k - j) as f64 / n_k as f64
    }
}

/// b(N)² = Σ_l (Σ_{k in l, n_k ≤ N} a_k / k)².
pub fn b_sq(params: &SequenceParams, n: u64) -> f64 {
    params
        .blocks()
        .iter()
        .map(|b| params.mass_upto(b, n).powi(2))
        .collect::<Neumaier>()
        .value()
}

pub fn b_of_n(params: &SequenceParams, n: u64) -> f64 {
    b_sq(params, n).sqrt()
}

/// ‖E(S_N(f) | F_0)‖₂².
pub fn cond_norm_sq(params: &SequenceParams, n: u64) -> f64 {
    assert!(n >= 1, "N must be positive");
    let terms = block_terms(params);
    let n = n as i128;
    let mut starts = Vec::new();
    for t in terms.iter().flatten() {
        starts.push((t.0 - n).max(0));
        starts.push(t.0);
    }
    piecewise_sum_sq(terms.len(), 0, params.n_max() as i128 - 1, starts, |j, out| {
        for (o, blk) in out.iter_mut().zip(&terms) {
            *o = blk
                .iter()
                .filter(|t| j < t.0)
                .map(|&(nk, alpha)| alpha * n.min(nk - j) as f64 / nk as f64)
                .sum();
        }
    })
}

/// ‖P_l S_N(f)‖₂²; zero outside 1 ≤ l ≤ N − 1.
pub fn proj_norm_sq(params: &SequenceParams, l: i64, n: u64) -> f64 {
    if l < 1 || l as u64 >= n {
        return 0.0;
    }
    let rest = n - l as u64;
    params
        .blocks()
        .iter()
        .map(|b| {
            b.ks()
                .map(|k| {
                    let nk = SequenceParams::n(k);
                    let alpha = params.a(k) / k as f64;
                    if nk <= rest {
                        alpha
                    } else {
                        rest as f64 / nk as f64 * alpha
                    }
                })
                .sum::<f64>()
                .powi(2)
        })
        .collect::<Neumaier>()
        .value()
}

/// Σ_{l=1}^{N-1} ‖P_l S_N(f)‖₂².
pub fn proj_norm_sq_total(params: &SequenceParams, n: u64) -> f64 {
    let terms = block_terms(params);
    let n = n as i128;
    let starts = terms.iter().flatten().map(|t| n - t.0).collect();
    piecewise_sum_sq(terms.len(), 1, n - 1, starts, |l, out| {
        let rest = n - l;
        for (o, blk) in out.iter_mut().zip(&terms) {
            *o = blk
                .iter()
                .map(|&(nk, alpha)| alpha * rest.min(nk) as f64 / nk as f64)
                .sum();
        }
    })
}

/// ‖S_N(f)‖₂², summed over every coordinate m with the trapezoid pair counts.
pub fn sigma_sq(params: &SequenceParams, n: u64) -> f64 {
    assert!(n >= 1, "N must be positive");
    let terms = block_terms(params);
    let n = n as i128;
    let mut starts = Vec::new();
    for t in terms.iter().flatten() {
        starts.extend([1 - t.0, 0, n - t.0, n]);
    }
    piecewise_sum_sq(terms.len(), 1 - params.n_max() as i128, n - 1, starts, |m, out| {
        for (o, blk) in out.iter_mut().zip(&terms) {
            *o = blk
                .iter()
                .map(|&(nk, alpha)| alpha * trapezoid(nk, m, n) as f64 / nk as f64)
                .sum();
        }
    })
}

/// #{(j, i): 0 ≤ j < N, 0 ≤ i < n_k, j − i = m}.
#[inline]
pub(crate) fn trapezoid(nk: i128, m: i128, n: i128) -> i128 {
    ((n - 1).min(m + nk - 1) - m.max(0) + 1).max(0)
}

/// ‖S'_N(f) − Σ_{l=0}^{N-1} U^l Σ_{n_k ≤ N} e_k‖₂², the l = 0 term included.
pub fn lemma5_error_sq(params: &SequenceParams, n: u64) -> f64 {
    assert!(n >= 2, "N must be at least 2");
    let terms = block_terms(params);
    let n = n as i128;
    let starts = terms.iter().flatten().map(|t| n - t.0).collect();
    let tail = piecewise_sum_sq(terms.len(), 1, n - 1, starts, |l, out| {
        let rest = n - l;
        for (o, blk) in out.iter_mut().zip(&terms) {
            *o = blk
                .iter()
                .map(|&(nk, alpha)| {
                    if nk <= rest {
                        0.0
                    } else if nk <= n {
                        (rest as f64 / nk as f64 - 1.0) * alpha
                    } else {
                        rest as f64 / nk as f64 * alpha
                    }
                })
                .sum();
        }
    });
    b_sq(params, n as u64) + tail
}

/// ‖Σ_{N=p}^{q} E(S_N(f) | F_0) / N^{3/2}‖₂.
pub fn series2_tail_norm(params: &SequenceParams, p: u64, q: u64) -> Result<f64> {
    series2_tail_norm_budget(params, p, q, DEFAULT_WORK_BUDGET)
}

pub fn series2_tail_norm_budget(params: &SequenceParams, p: u64, q: u64, budget: f64) -> Result<f64> {
    if p < 1 || q < p {
        return Err(Error::Invalid(format!("need 1 ≤ p ≤ q, got p = {p}, q = {q}")));
    }
    let terms = block_terms(params);
    let kk = params.k_max() as f64;
    let cost = q as f64 * (1.0 + kk * kk);
    if cost > budget {
        return Err(Error::Budget {
            what: format!("series tail over N in [{p}, {q}]"),
            required: cost,
            budget,
        });
    }
    let q_us = q as usize;
    // prefix sums of N^{-1/2} and N^{-3/2}
    let mut p1 = vec![0.0; q_us + 1];
    let mut p3 = vec![0.0; q_us + 1];
    let (mut a1, mut a3) = (Neumaier::new(), Neumaier::new());
    for x in 1..=q_us {
        let xf = x as f64;
        a1.add(1.0 / xf.sqrt());
        a3.add(1.0 / (xf * xf.sqrt()));
        p1[x] = a1.value();
        p3[x] = a3.value();
    }
    let (p_us, q_i) = (p as usize, q as i128);
    // Σ_{N=p}^{q} min(N, r) / N^{3/2}
    let h = |r: i128| -> f64 {
        let up = (q_i.min(r)) as usize;
        let s1 = if up >= p_us { p1[up] - p1[p_us - 1] } else { 0.0 };
        let lo2 = (p as i128).max(r + 1);
        let s2 = if lo2 <= q_i { r as f64 * (p3[q_us] - p3[lo2 as usize - 1]) } else { 0.0 };
        s1 + s2
    };
    let eval = |j: i128, out: &mut [f64]| {
        for (o, blk) in out.iter_mut().zip(&terms) {
            *o = blk
                .iter()
                .filter(|t| j < t.0)
                .map(|&(nk, alpha)| alpha * h(nk - j) / nk as f64)
                .sum();
        }
    };
    let n_max = params.n_max() as i128;
    let mut starts = vec![0, n_max];
    let mut dense = Vec::new();
    for t in terms.iter().flatten() {
        let lo = (t.0 - q_i + 1).max(0);
        starts.push(lo);
        starts.push(t.0);
        dense.push((lo, t.0));
    }
    starts.sort_unstable();
    starts.dedup();
    let nb = terms.len();
    let mut v = vec![0.0; nb];
    let mut acc = Neumaier::new();
    for w in starts.windows(2) {
        let (s, e) = (w[0], w[1]);
        if dense.iter().any(|&(lo, hi)| lo <= s && s < hi) {
            for j in s..e {
                eval(j, &mut v);
                v.iter().for_each(|x| acc.add(x * x));
            }
        } else {
            eval(s, &mut v);
            let len = (e - s) as f64;
            v.iter().for_each(|x| acc.add(len * x * x));
        }
    }
    Ok(acc.value().sqrt())
}

/// Memoizing wrapper over the engine functions. Cache fills are idempotent,
/// so concurrent callers may race on a key without changing results.
#[derive(Debug)]
pub struct ExactMoments {
    params: SequenceParams,
    b2: RwLock<HashMap<u64, f64>>,
    cond: RwLock<HashMap<u64, f64>>,
    sigma: RwLock<HashMap<u64, f64>>,
}

fn memo(cache: &RwLock<HashMap<u64, f64>>, key: u64, f: impl FnOnce() -> f64) -> f64 {
    if let Some(v) = cache.read().unwrap().get(&key) {
        return *v;
    }
    let v = f();
    cache.write().unwrap().insert(key, v);
    v
}

impl ExactMoments {
    pub fn new(params: SequenceParams) -> Self {
        ExactMoments {
            params,
            b2: Default::default(),
            cond: Default::default(),
            sigma: Default::default(),
        }
    }

    pub fn params(&self) -> &SequenceParams {
        &self.params
    }

    pub fn b_sq(&self, n: u64) -> f64 {
        memo(&self.b2, n, || b_sq(&self.params, n))
    }

    pub fn cond_norm_sq(&self, n: u64) -> f64 {
        memo(&self.cond, n, || cond_norm_sq(&self.params, n))
    }

    pub fn sigma_sq(&self, n: u64) -> f64 {
        memo(&self.sigma, n, || sigma_sq(&self.params, n))
    }

    pub fn proj_norm_sq(&self, l: i64, n: u64) -> f64 {
        proj_norm_sq(&self.params, l, n)
    }

    pub fn lemma5_error_sq(&self, n: u64) -> f64 {
        lemma5_error_sq(&self.params, n)
    }

    pub fn series2_tail_norm(&self, p: u64, q: u64) -> Result<f64> {
        series2_tail_norm(&self.params, p, q)
    }
}

/// a_{[log N]}, clamped to the available indices.
pub fn a_at_log(params: &SequenceParams, n: u64) -> f64 {
    let k = (crate::numeric::ilog2(n) as usize).clamp(1, params.k_max().max(1));
    params.a(k)
}

/// Conditions tracked by [`check_condition`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConditionId {
    /// Tails of Σ E(S_N | F_0) / N^{3/2}.
    Series2Prime,
    /// Partial sums of ‖E(S_n | F_0)‖ / n^{3/2}.
    Mw3Prime,
    /// Partial sums of c_n ‖E(S_n | F_0)‖ / n^{3/2}.
    Weighted4,
    /// ‖E(S_n | F_0)‖ log n / √n.
    Rate5,
    /// ‖E(S_n | F_0)‖² log² n / (n a²_{[log n]}).
    Bound9,
}

impl ConditionId {
    pub const ALL: [ConditionId; 5] = [
        ConditionId::Series2Prime,
        ConditionId::Mw3Prime,
        ConditionId::Weighted4,
        ConditionId::Rate5,
        ConditionId::Bound9,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionId::Series2Prime => "SERIES_2PRIME",
            ConditionId::Mw3Prime => "MW_3PRIME",
            ConditionId::Weighted4 => "WEIGHTED_4",
            ConditionId::Rate5 => "RATE_5",
            ConditionId::Bound9 => "BOUND_9",
        }
    }
}

/// Whether the condition looks satisfied on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    TrendConfirmed,
    TrendViolated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::TrendConfirmed => "TREND_CONFIRMED",
            Verdict::TrendViolated => "TREND_VIOLATED",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub grid: Vec<u64>,
    pub values: Vec<f64>,
    pub verdict: Verdict,
    /// The number the verdict was read from (slope, ratio, ...).
    pub trend: f64,
    pub trend_rule: &'static str,
}

/// Dyadic grid 2^lo, ..., 2^hi.
pub fn dyadic_grid(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|e| 1u64 << e).collect()
}

/// Least-squares slope of y on x.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Partial sums Σ_{n ≤ g} weight(n) ‖E(S_n | F_0)‖ / n^{3/2} at each grid point.
fn partial_sums(params: &SequenceParams, grid: &[u64], weight: &dyn Fn(u64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = Neumaier::new();
    let mut n = 1u64;
    for &g in grid {
        while n <= g {
            let nf = n as f64;
            acc.add(weight(n) * cond_norm_sq(params, n).sqrt() / (nf * nf.sqrt()));
            n += 1;
        }
        out.push(acc.value());
    }
    out
}

/// Partial-sum verdict from the decay of the increments between grid points.
/// Increments D_i behaving like i^{-s}: s ≤ 1.1 reads as divergent, s ≥ 1.5
/// (or faster, e.g. geometric) as convergent.
fn partial_sum_verdict(values: &[f64]) -> (Verdict, f64) {
    let incs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let half = incs.len() / 2;
    let tail: Vec<(f64, f64)> = incs
        .iter()
        .enumerate()
        .skip(half)
        .filter(|(_, d)| **d > 0.0)
        .map(|(i, d)| (((i + 1) as f64).ln(), d.ln()))
        .collect();
    if tail.len() < 3 {
        return (Verdict::Inconclusive, f64::NAN);
    }
    let (x, y): (Vec<f64>, Vec<f64>) = tail.into_iter().unzip();
    let s = -slope(&x, &y);
    let v = if s >= 1.5 {
        Verdict::TrendConfirmed
    } else if s <= 1.1 {
        Verdict::TrendViolated
    } else {
        Verdict::Inconclusive
    };
    (v, s)
}

/// Evaluate one condition statistic over `grid`.
pub fn check_condition(
    params: &SequenceParams,
    id: ConditionId,
    grid: &[u64],
    c: Option<&dyn Fn(u64) -> f64>,
) -> Result<ConditionReport> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] == 0 {
        return Err(Error::Invalid("grid must be positive and strictly increasing".into()));
    }
    let (values, (verdict, trend), rule) = match id {
        ConditionId::Series2Prime => {
            let v = grid
                .iter()
                .map(|&p| series2_tail_norm(params, p, 2 * p))
                .collect::<Result<Vec<_>>>()?;
            let strictly = v.windows(2).all(|w| w[1] < w[0]);
            let ratio = v[v.len() - 1] / v[0];
            let verdict = if strictly && ratio < 0.5 {
                Verdict::TrendConfirmed
            } else if !strictly {
                Verdict::TrendViolated
            } else {
                Verdict::Inconclusive
            };
            (v, (verdict, ratio), "tail(p,2p) strictly decreasing and last/first < 0.5")
        }
        ConditionId::Mw3Prime => {
            let v = partial_sums(params, grid, &|_| 1.0);
            let vt = partial_sum_verdict(&v);
            (v, vt, "increment decay exponent s: s >= 1.5 converges, s <= 1.1 diverges")
        }
        ConditionId::Weighted4 => {
            let c = c.ok_or_else(|| Error::Invalid("WEIGHTED_4 needs a c sequence".into()))?;
            let v = partial_sums(params, grid, c);
            let vt = partial_sum_verdict(&v);
            (v, vt, "increment decay exponent s: s >= 1.5 converges, s <= 1.1 diverges")
        }
        ConditionId::Rate5 => {
            let v: Vec<f64> = grid
                .iter()
                .map(|&n| cond_norm_sq(params, n).sqrt() * (n as f64).log2() / (n as f64).sqrt())
                .collect();
            let ratio = v[v.len() - 1] / v[0];
            let x: Vec<f64> = grid.iter().map(|&n| (n as f64).log2()).collect();
            let s = slope(&x, &v);
            let verdict = if grid.len() < 3 {
                Verdict::Inconclusive
            } else if ratio < 0.75 && s < 0.0 {
                Verdict::TrendConfirmed
            } else if s >= 0.0 {
                Verdict::TrendViolated
            } else {
                Verdict::Inconclusive
            };
            (v, (verdict, ratio), "last/first < 0.75 with negative fitted slope")
        }
        ConditionId::Bound9 => {
            let v: Vec<f64> = grid
                .iter()
                .map(|&n| {
                    let lg = (n as f64).log2();
                    let a = a_at_log(params, n);
                    cond_norm_sq(params, n) * lg * lg / (n as f64 * a * a)
                })
                .collect();
            let h = v.len() / 2;
            let first = v[..h.max(1)].iter().cloned().fold(f64::MIN, f64::max);
            let second = v[h..].iter().cloned().fold(f64::MIN, f64::max);
            let ratio = second / first;
            let verdict = if v.len() < 4 {
                Verdict::Inconclusive
            } else if ratio <= 1.5 {
                Verdict::TrendConfirmed
            } else if ratio > 2.0 {
                Verdict::TrendViolated
            } else {
                Verdict::Inconclusive
            };
            (v, (verdict, ratio), "max over second half <= 1.5 x max over first half")
        }
    };
    Ok(ConditionReport {
        condition: id,
        grid: grid.to_vec(),
        values,
        verdict,
        trend,
        trend_rule: rule,
    })
}

/// One row of the engine table.
#[derive(Clone, Debug, Serialize)]
pub struct EngineRow {
    pub n: u64,
    pub b: f64,
    pub cond_norm: f64,
    pub sigma: f64,
    pub ratio_bound9: f64,
    pub ratio_rate5: f64,
    pub lemma5_ratio: f64,
    /// ‖Σ_{M=N}^{2N} E(S_M | F_0) / M^{3/2}‖; NaN when over budget.
    pub tail_2prime: f64,
}

pub fn engine_table(params: &SequenceParams, grid: &[u64]) -> Vec<EngineRow> {
    grid.iter()
        .map(|&n| {
            let b2 = b_sq(params, n);
            let cond2 = cond_norm_sq(params, n);
            let lg = (n as f64).log2();
            let a = a_at_log(params, n);
            let nf = n as f64;
            EngineRow {
                n,
                b: b2.sqrt(),
                cond_norm: cond2.sqrt(),
                sigma: sigma_sq(params, n).sqrt(),
                ratio_bound9: cond2 * lg * lg / (nf * a * a),
                ratio_rate5: cond2.sqrt() * lg / nf.sqrt(),
                lemma5_ratio: if n >= 2 { lemma5_error_sq(params, n) / (b2 * nf) } else { f64::NAN },
                tail_2prime: series2_tail_norm(params, n, 2 * n).unwrap_or(f64::NAN),
            }
        })
        .collect()
}

pub const ENGINE_CSV_HEADER: &str = "N,b,cond_norm,sigma,ratio_bound9,ratio_rate5,lemma5_ratio,tail_2prime";

pub fn engine_csv(rows: &[EngineRow]) -> String {
    let mut out = String::from(ENGINE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            fmt17(r.b),
            fmt17(r.cond_norm),
            fmt17(r.sigma),
            fmt17(r.ratio_bound9),
            fmt17(r.ratio_rate5),
            fmt17(r.lemma5_ratio),
            fmt17(r.tail_2prime)
        );
    }
    out
}

pub fn condition_csv(reports: &[ConditionReport]) -> String {
    let mut out = String::from("condition,N,value,verdict,trend\n");
    for r in reports {
        for (n, v) in r.grid.iter().zip(&r.values) {
            let _ = writeln!(out, "{},{},{},{},{}", r.condition.as_str(), n, fmt17(*v), r.verdict.as_str(), fmt17(r.trend));
        }
    }
    out
}
