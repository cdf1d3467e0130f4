//! Monte Carlo sampling of S_N(f) and of the approximating i.i.d. sum.
//!
//! Every coordinate m of the sum carries one independent variable per block,
//! weighted by the piecewise-linear profile g_l(m). Two samplers are
//! provided:
//!
//! * [`Strategy::PerCoordinate`] draws every (m, l) variable from a ChaCha
//!   stream keyed by (seed, sample, m, l). It is the literal definition and
//!   costs O((N + n_max) · blocks) per sample.
//! * [`Strategy::Sparse`] (default) draws the same law without visiting
//!   every coordinate: a Gaussian block contributes one normal with variance
//!   Σ_m g_l(m)²; a three-valued block draws binomial hit counts on flat
//!   segments and skips geometrically between hits on sloped ones.
//!
//! Both are keyed per sample, so a batch does not depend on the number of
//! worker threads.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, trapezoid};
use crate::numeric::{fmt17, linear_sum_sq, Neumaier};
use crate::params::{BlockSpec, Parity, SequenceParams};

/// #{(j, i): 0 ≤ j < N, 0 ≤ i < n_k, j − i = m}.
pub fn trapezoid_weight(n_k: u64, m: i64, n: u64) -> u64 {
    trapezoid(n_k as i128, m as i128, n as i128) as u64
}

/// One linear piece of a block profile: g(m) runs from `v0` at `start` to
/// `v1` at `end` (inclusive).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub start: i128,
    pub end: i128,
    pub v0: f64,
    pub v1: f64,
}

impl Segment {
    pub fn len(&self) -> u128 {
        (self.end - self.start + 1) as u128
    }

    pub fn is_empty(&self) -> bool {
        self.end < self.start
    }

    pub fn is_flat(&self) -> bool {
        self.v0 == self.v1
    }

    #[inline]
    pub fn at(&self, m: i128) -> f64 {
        if self.start == self.end {
            self.v0
        } else {
            self.v0 + (self.v1 - self.v0) * ((m - self.start) as f64 / (self.end - self.start) as f64)
        }
    }
}

#[derive(Clone, Debug)]
pub struct BlockProfile {
    pub parity: Parity,
    /// N_l.
    pub horizon: u64,
    pub segments: Vec<Segment>,
}

impl BlockProfile {
    /// Variance of the raw source variable: 1 / N_l for three-valued blocks.
    pub fn raw_variance(&self) -> f64 {
        match self.parity {
            Parity::ThreeValued => 1.0 / self.horizon as f64,
            Parity::Gaussian => 1.0,
        }
    }

    pub fn sum_sq(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| linear_sum_sq(s.v0, s.v1, s.len()))
            .collect::<Neumaier>()
            .value()
    }

    /// g_l(m); zero outside the support.
    pub fn value(&self, m: i128) -> f64 {
        let i = self.segments.partition_point(|s| s.end < m);
        match self.segments.get(i) {
            Some(s) if s.start <= m => s.at(m),
            _ => 0.0,
        }
    }
}

/// Which sum is sampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SampleKind {
    /// S_N(f) itself.
    FullSn,
    /// Σ_{m=0}^{N-1} U^m Σ_{n_k ≤ N} e_k, the i.i.d. approximation.
    ApproxIidSum,
}

impl SampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleKind::FullSn => "FULL_SN",
            SampleKind::ApproxIidSum => "APPROX_IID_SUM",
        }
    }
}

/// Weights g_l(m) over m in [1 − n_max, N − 1].
#[derive(Clone, Debug)]
pub struct CoordinateProfile {
    pub n: u64,
    pub m_lo: i128,
    pub m_hi: i128,
    pub kind: SampleKind,
    pub blocks: Vec<BlockProfile>,
}

fn scale(b: &BlockSpec) -> f64 {
    match b.parity {
        Parity::ThreeValued => (b.horizon as f64).sqrt(),
        Parity::Gaussian => 1.0,
    }
}

/// Profile of S_N(f).
pub fn build_profile(params: &SequenceParams, n: u64) -> Result<CoordinateProfile> {
    if n == 0 {
        return Err(Error::Invalid("N must be positive".into()));
    }
    params.require_blocks()?;
    let ni = n as i128;
    let m_lo = 1 - params.n_max() as i128;
    let blocks = params
        .blocks()
        .iter()
        .map(|b| {
            let terms: Vec<(i128, f64)> = b.ks().map(|k| (1i128 << k, params.a(k) / k as f64)).collect();
            let sc = scale(b);
            let eval = |m: i128| -> f64 {
                sc * terms
                    .iter()
                    .map(|&(nk, alpha)| alpha * trapezoid(nk, m, ni) as f64 / nk as f64)
                    .sum::<f64>()
            };
            let mut starts: Vec<i128> = terms.iter().flat_map(|&(nk, _)| [1 - nk, 0, ni - nk, ni]).collect();
            starts.push(ni);
            starts.retain(|&s| s >= m_lo && s <= ni);
            starts.sort_unstable();
            starts.dedup();
            let segments = starts
                .windows(2)
                .filter_map(|w| {
                    let (s, e) = (w[0], w[1] - 1);
                    let seg = Segment {
                        start: s,
                        end: e,
                        v0: eval(s),
                        v1: eval(e),
                    };
                    (seg.v0 != 0.0 || seg.v1 != 0.0).then_some(seg)
                })
                .collect();
            BlockProfile {
                parity: b.parity,
                horizon: b.horizon,
                segments,
            }
        })
        .collect();
    Ok(CoordinateProfile {
        n,
        m_lo,
        m_hi: ni - 1,
        kind: SampleKind::FullSn,
        blocks,
    })
}

/// Profile of the approximating sum: g_l(m) = M_l(N) · scale on [0, N − 1].
pub fn build_approx_profile(params: &SequenceParams, n: u64) -> Result<CoordinateProfile> {
    if n == 0 {
        return Err(Error::Invalid("N must be positive".into()));
    }
    params.require_blocks()?;
    let blocks = params
        .blocks()
        .iter()
        .map(|b| {
            let v = scale(b) * params.mass_upto(b, n);
            let segments = if v > 0.0 {
                vec![Segment {
                    start: 0,
                    end: n as i128 - 1,
                    v0: v,
                    v1: v,
                }]
            } else {
                vec![]
            };
            BlockProfile {
                parity: b.parity,
                horizon: b.horizon,
                segments,
            }
        })
        .collect();
    Ok(CoordinateProfile {
        n,
        m_lo: 0,
        m_hi: n as i128 - 1,
        kind: SampleKind::ApproxIidSum,
        blocks,
    })
}

impl CoordinateProfile {
    /// Var of the sampled sum: Σ_l Σ_m g_l(m)² · Var(raw_l).
    pub fn variance(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.sum_sq() * b.raw_variance())
            .collect::<Neumaier>()
            .value()
    }

    /// Fourth cumulant of the sampled sum.
    pub fn fourth_cumulant(&self) -> f64 {
        let mut acc = Neumaier::new();
        for b in self.blocks.iter().filter(|b| b.parity == Parity::ThreeValued) {
            // raw X: E X² = E X⁴ = 1/N_l
            let p = 1.0 / b.horizon as f64;
            let k4 = p - 3.0 * p * p;
            for s in &b.segments {
                let n = s.len();
                if s.is_flat() {
                    acc.add(n as f64 * s.v0.powi(4) * k4);
                } else {
                    for m in s.start..=s.end {
                        acc.add(s.at(m).powi(4) * k4);
                    }
                }
            }
        }
        acc.value()
    }

    pub fn width(&self) -> u128 {
        (self.m_hi - self.m_lo + 1) as u128
    }
}

/// Raw source draw: standard normal, or ±1 with probability 1/(2 N_l) each.
pub fn draw_coordinate<R: Rng + ?Sized>(parity: Parity, horizon: u64, rng: &mut R) -> f64 {
    match parity {
        Parity::Gaussian => rng.sample(StandardNormal),
        Parity::ThreeValued => {
            let u: f64 = rng.random();
            let h = 0.5 / horizon as f64;
            if u < h {
                -1.0
            } else if u < 2.0 * h {
                1.0
            } else {
                0.0
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Sparse,
    PerCoordinate,
}

#[derive(Clone, Copy, Debug)]
pub struct SamplerConfig {
    pub strategy: Strategy,
    /// Divide by b(N) √N.
    pub normalize: bool,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Largest number of (m, l) draws per sample for the per-coordinate sampler.
    pub coordinate_budget: u128,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            strategy: Strategy::Sparse,
            normalize: true,
            threads: None,
            coordinate_budget: 1 << 26,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleBatch {
    pub seed: u64,
    pub n: u64,
    pub count: usize,
    pub kind: SampleKind,
    pub normalized: bool,
    pub strategy: Strategy,
    pub values: Vec<f64>,
}

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_sparse(profile: &CoordinateProfile, rng: &mut ChaCha8Rng, gauss_sd: &[f64]) -> f64 {
    let mut acc = Neumaier::new();
    for (b, sd) in profile.blocks.iter().zip(gauss_sd) {
        match b.parity {
            Parity::Gaussian => {
                let z: f64 = rng.sample(StandardNormal);
                acc.add(sd * z);
            }
            Parity::ThreeValued => {
                let p = 1.0 / b.horizon as f64;
                for s in &b.segments {
                    let len = s.len();
                    if s.is_flat() {
                        let hits = binomial(rng, len, p);
                        if hits > 0 {
                            let plus = binomial(rng, hits as u128, 0.5);
                            acc.add(s.v0 * (2.0 * plus as f64 - hits as f64));
                        }
                    } else if p >= 1.0 {
                        for m in s.start..=s.end {
                            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                            acc.add(sign * s.at(m));
                        }
                    } else {
                        let geo = Geometric::new(p).expect("p in (0, 1)");
                        let mut m = s.start - 1;
                        loop {
                            let gap = geo.sample(rng);
                            m = m.saturating_add(gap as i128 + 1);
                            if m > s.end {
                                break;
                            }
                            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                            acc.add(sign * s.at(m));
                        }
                    }
                }
            }
        }
    }
    acc.value()
}

fn binomial(rng: &mut ChaCha8Rng, n: u128, p: f64) -> u64 {
    if p >= 1.0 {
        return n as u64;
    }
    Binomial::new(n as u64, p).expect("valid binomial").sample(rng)
}

fn draw_per_coordinate(profile: &CoordinateProfile, rng: &mut ChaCha8Rng) -> f64 {
    let nb = profile.blocks.len() as u128;
    let mut acc = Neumaier::new();
    for (l, b) in profile.blocks.iter().enumerate() {
        for s in &b.segments {
            for m in s.start..=s.end {
                let slot = (m - profile.m_lo) as u128 * nb + l as u128;
                rng.set_word_pos(slot << 8);
                let x = draw_coordinate(b.parity, b.horizon, rng);
                if x != 0.0 {
                    acc.add(s.at(m) * x);
                }
            }
        }
    }
    acc.value()
}

/// Draw `count` values of the sum described by `profile`.
pub fn sample_profile(profile: &CoordinateProfile, count: usize, seed: u64, norm: f64, cfg: &SamplerConfig) -> Result<Vec<f64>> {
    if cfg.strategy == Strategy::PerCoordinate {
        let need = profile.width() * profile.blocks.len() as u128;
        if need > cfg.coordinate_budget {
            return Err(Error::Budget {
                what: "per-coordinate draws per sample".into(),
                required: need as f64,
                budget: cfg.coordinate_budget as f64,
            });
        }
    }
    let gauss_sd: Vec<f64> = profile.blocks.iter().map(|b| b.sum_sq().sqrt()).collect();
    let run = || {
        (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = sample_rng(seed, i);
                let v = match cfg.strategy {
                    Strategy::Sparse => draw_sparse(profile, &mut rng, &gauss_sd),
                    Strategy::PerCoordinate => draw_per_coordinate(profile, &mut rng),
                };
                v / norm
            })
            .collect::<Vec<f64>>()
    };
    Ok(match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Invalid(e.to_string()))?
            .install(run),
        None => run(),
    })
}

/// Batch of S_N(f) or approximating-sum values with the default config.
pub fn sample_batch(params: &SequenceParams, n: u64, count: usize, seed: u64, kind: SampleKind) -> Result<SampleBatch> {
    sample_batch_with(params, n, count, seed, kind, &SamplerConfig::default())
}

pub fn sample_batch_with(
    params: &SequenceParams,
    n: u64,
    count: usize,
    seed: u64,
    kind: SampleKind,
    cfg: &SamplerConfig,
) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::Invalid("count must be at least 1".into()));
    }
    let profile = match kind {
        SampleKind::FullSn => build_profile(params, n)?,
        SampleKind::ApproxIidSum => build_approx_profile(params, n)?,
    };
    let norm = if cfg.normalize {
        exact::b_of_n(params, n) * (n as f64).sqrt()
    } else {
        1.0
    };
    let values = sample_profile(&profile, count, seed, norm, cfg)?;
    Ok(SampleBatch {
        seed,
        n,
        count,
        kind,
        normalized: cfg.normalize,
        strategy: cfg.strategy,
        values,
    })
}

/// splitmix64 finalizer, used to derive per-horizon seeds.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One normalized S_N batch per complete-block horizon.
pub fn dichotomy_samples(params: &SequenceParams, horizons: &[u64], count: usize, seed: u64) -> Result<Vec<(u64, SampleBatch)>> {
    horizons
        .iter()
        .map(|&h| {
            if !params.complete_blocks().any(|b| b.horizon == h) {
                return Err(Error::Invalid(format!("{h} is not the horizon of a complete block")));
            }
            Ok((h, sample_batch(params, h, count, derive_seed(seed, h), SampleKind::FullSn)?))
        })
        .collect()
}

pub const QUANTILE_GRID: [f64; 11] = [0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.999];

#[derive(Clone, Debug, Serialize)]
pub struct BatchSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub quantiles: Vec<(f64, f64)>,
}

impl SampleBatch {
    pub fn mean(&self) -> f64 {
        crate::numeric::neumaier_sum(self.values.iter().copied()) / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        crate::numeric::neumaier_sum(self.values.iter().map(|v| (v - mu) * (v - mu))) / (self.count as f64 - 1.0)
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn summary(&self) -> BatchSummary {
        let s = self.sorted();
        let quantiles = QUANTILE_GRID
            .iter()
            .map(|&q| {
                let idx = ((q * self.count as f64).ceil() as usize).clamp(1, self.count) - 1;
                (q, s[idx])
            })
            .collect();
        BatchSummary {
            count: self.count,
            mean: self.mean(),
            variance: if self.count > 1 { self.variance() } else { f64::NAN },
            quantiles,
        }
    }

    fn header(&self, params: &SequenceParams) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# seed={} N={} count={} kind={} normalized={} strategy={:?}",
            self.seed,
            self.n,
            self.count,
            self.kind.as_str(),
            self.normalized,
            self.strategy
        );
        for line in params.to_key_value().lines() {
            let _ = writeln!(out, "# {line}");
        }
        out
    }

    /// `sample_index,value` rows after a commented provenance header.
    pub fn to_csv(&self, params: &SequenceParams) -> String {
        let mut out = self.header(params);
        out.push_str("sample_index,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{i},{}", fmt17(*v));
        }
        out
    }

    pub fn summary_json(&self, params: &SequenceParams) -> Result<String> {
        let doc = serde_json::json!({
            "seed": self.seed,
            "N": self.n,
            "kind": self.kind,
            "normalized": self.normalized,
            "strategy": self.strategy,
            "params": params.to_key_value(),
            "summary": self.summary(),
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::WeightMode;

    fn brute(n_k: u64, m: i64, n: u64) -> u64 {
        let mut c = 0;
        for j in 0..n as i64 {
            for i in 0..n_k as i64 {
                c += (j - i == m) as u64;
            }
        }
        c
    }

    #[test]
    fn trapezoid_examples() {
        assert_eq!(trapezoid_weight(4, -2, 1), 1);
        assert_eq!(trapezoid_weight(4, -4, 9), 0);
        assert_eq!(trapezoid_weight(4, 9, 9), 0);
        for n_k in [2u64, 4, 8, 16] {
            for n in 1..20u64 {
                let total: u64 = (-(n_k as i64)..n as i64 + 1).map(|m| trapezoid_weight(n_k, m, n)).sum();
                assert_eq!(total, n * n_k);
                for m in -20..25 {
                    assert_eq!(trapezoid_weight(n_k, m, n), brute(n_k, m, n));
                }
            }
        }
    }

    #[test]
    fn single_block_profile() {
        let p = SequenceParams::with_ends(WeightMode::ConstOne, 1, &[1]).unwrap();
        let prof = build_profile(&p, 1).unwrap();
        let want = 2f64.sqrt() * 0.5;
        assert_eq!(prof.blocks[0].value(-1), want);
        assert_eq!(prof.blocks[0].value(0), want);
        assert_eq!(prof.blocks[0].value(1), 0.0);
    }

    #[test]
    fn profile_variance_is_sigma_sq() {
        let p = SequenceParams::with_ends(WeightMode::InvLog, 9, &[3, 6, 9]).unwrap();
        for n in [1u64, 2, 7, 64, 300, 4096] {
            let v = build_profile(&p, n).unwrap().variance();
            let s = exact::sigma_sq(&p, n);
            assert!((v - s).abs() < 1e-12 * s, "N={n}");
        }
    }

    #[test]
    fn profile_matches_pointwise_definition() {
        let p = SequenceParams::with_ends(WeightMode::ConstOne, 5, &[2, 5]).unwrap();
        let prof = build_profile(&p, 11).unwrap();
        for (bi, b) in p.blocks().iter().enumerate() {
            for m in -40..15i64 {
                let want: f64 = b
                    .ks()
                    .map(|k| p.a(k) / k as f64 * trapezoid_weight(1 << k, m, 11) as f64 / (1u64 << k) as f64)
                    .sum::<f64>()
                    * scale(b);
                assert!((prof.blocks[bi].value(m as i128) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn unit_horizon_never_zero() {
        let mut rng = sample_rng(1, 0);
        for _ in 0..1000 {
            assert!(draw_coordinate(Parity::ThreeValued, 1, &mut rng) != 0.0);
        }
    }

    #[test]
    fn per_coordinate_budget() {
        let p = SequenceParams::with_ends(WeightMode::ConstOne, 20, &[5, 20]).unwrap();
        let cfg = SamplerConfig {
            strategy: Strategy::PerCoordinate,
            coordinate_budget: 1000,
            ..Default::default()
        };
        assert!(matches!(
            sample_batch_with(&p, 64, 1, 0, SampleKind::FullSn, &cfg),
            Err(Error::Budget { .. })
        ));
    }
}
