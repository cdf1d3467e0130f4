//! Reference laws, exact finite-horizon oracles and Kolmogorov–Smirnov
//! distances.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact;
use crate::numeric::{fmt17, Neumaier};
use crate::params::SequenceParams;
use crate::sim::{self, SampleBatch, SampleKind};

/// Mass left out by lattice truncation.
pub const TRUNCATION_MASS: f64 = 1e-12;
/// Default cap on pmf terms evaluated while building an exact law.
pub const DEFAULT_LAW_BUDGET: f64 = 2e8;
/// Continuous grid points used by [`ks_distance`].
pub const KS_GRID: usize = 2048;

/// One odd-block contribution: `scale` times a signed binomial with
/// `trials` trials and hit probability `hit_prob`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub scale: f64,
    pub trials: u64,
    pub hit_prob: f64,
}

/// A finitely supported law: sorted points with probabilities.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Lattice {
    pub points: Vec<f64>,
    pub probs: Vec<f64>,
    #[serde(skip)]
    cum: Vec<f64>,
}

impl Lattice {
    pub fn new(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut probs: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, p) in pairs {
            // sums of scaled atoms can land on the same point up to rounding
            if points.last().is_some_and(|&y| x - y <= 1e-12 * y.abs().max(1.0)) {
                *probs.last_mut().unwrap() += p;
            } else {
                points.push(x);
                probs.push(p);
            }
        }
        let mut acc = Neumaier::new();
        let cum = probs
            .iter()
            .map(|p| {
                acc.add(*p);
                acc.value()
            })
            .collect();
        Lattice { points, probs, cum }
    }

    pub fn point_mass(x: f64) -> Self {
        Lattice::new(vec![(x, 1.0)])
    }

    pub fn total(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    /// P(X ≤ x).
    pub fn cdf(&self, x: f64) -> f64 {
        let i = self.points.partition_point(|p| *p <= x);
        if i == 0 {
            0.0
        } else {
            self.cum[i - 1]
        }
    }

    /// Raw moment E X^r.
    pub fn moment(&self, r: i32) -> f64 {
        self.points
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * x.powi(r))
            .collect::<Neumaier>()
            .value()
    }

    fn convolve(&self, other: &Lattice, prune: f64) -> Lattice {
        let mut pairs = Vec::with_capacity(self.points.len() * other.points.len());
        for (x, p) in self.points.iter().zip(&self.probs) {
            for (y, q) in other.points.iter().zip(&other.probs) {
                let w = p * q;
                if w > prune {
                    pairs.push((x + y, w));
                }
            }
        }
        Lattice::new(pairs)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "variant", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LawModel {
    Normal {
        mu: f64,
        var: f64,
    },
    SymPoisson {
        lambda: f64,
        #[serde(skip)]
        pmf: Lattice,
    },
    ExactFinite {
        gauss_var: f64,
        atoms: Vec<Atom>,
        #[serde(skip)]
        lattice: Lattice,
    },
    Empirical {
        #[serde(skip)]
        sorted: Vec<f64>,
    },
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Unnormalized pmf of Binomial(n, p) around its mode, cut where terms fall
/// below `cut` relative to the mode; returns (first index, weights).
fn binomial_core(n: u64, p: f64, cut: f64) -> (u64, Vec<f64>) {
    if p <= 0.0 || n == 0 {
        return (0, vec![1.0]);
    }
    if p >= 1.0 {
        return (n, vec![1.0]);
    }
    let mode = (((n + 1) as f64 * p).floor() as u64).min(n);
    let r = p / (1.0 - p);
    let mut up = vec![1.0];
    let mut h = mode;
    while h < n {
        let next = up.last().unwrap() * (n - h) as f64 / (h + 1) as f64 * r;
        if next < cut {
            break;
        }
        up.push(next);
        h += 1;
    }
    let mut down = Vec::new();
    let mut h = mode;
    let mut cur = 1.0;
    while h > 0 {
        cur *= h as f64 / ((n - h + 1) as f64 * r);
        if cur < cut {
            break;
        }
        down.push(cur);
        h -= 1;
    }
    let lo = mode - down.len() as u64;
    down.reverse();
    down.extend(up);
    (lo, down)
}

/// Exact pmf of Binomial(n, p) truncated at relative mass 1e-17.
pub fn binomial_pmf(n: u64, p: f64) -> (u64, Vec<f64>) {
    let (lo, mut w) = binomial_core(n, p, 1e-19);
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    (lo, w)
}

/// pmf of V = Σ_{t ≤ n} X_t with X = ±1 w.p. p/2 each, 0 otherwise, by
/// conditioning on the hit count. `work` counts the terms touched.
pub fn signed_binomial(n: u64, p: f64, budget: f64) -> Result<Vec<(i64, f64)>> {
    let (h_lo, hits) = binomial_pmf(n, p);
    let work: f64 = hits
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let h = (h_lo + i as u64) as f64;
            (16.0 * h.sqrt() + 10.0).min(h + 1.0)
        })
        .sum();
    if work > budget {
        let kept: f64 = hits.iter().take((budget / (work / hits.len() as f64)) as usize).sum();
        return Err(Error::Budget {
            what: format!("signed binomial with {n} trials (achieved mass {kept:.3e})"),
            required: work,
            budget,
        });
    }
    let mut acc = std::collections::BTreeMap::<i64, Neumaier>::new();
    for (i, ph) in hits.iter().enumerate() {
        let h = h_lo + i as u64;
        let (plo, plus) = binomial_pmf(h, 0.5);
        for (j, q) in plus.iter().enumerate() {
            let v = 2 * (plo + j as u64) as i64 - h as i64;
            acc.entry(v).or_default().add(ph * q);
        }
    }
    Ok(acc.into_iter().map(|(v, s)| (v, s.value())).collect())
}

/// Direct trinomial formula for the signed-binomial pmf at v; slow, for
/// cross-checks with small n.
pub fn signed_binomial_direct(n: u64, p: f64, v: i64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let a = v.unsigned_abs();
    if a > n {
        return 0.0;
    }
    let q = p / 2.0;
    let mut s = Neumaier::new();
    let mut i = 0u64;
    while 2 * i + a <= n {
        let lf = ln_gamma((n + 1) as f64) - ln_gamma((i + 1) as f64) - ln_gamma((i + a + 1) as f64) - ln_gamma((n - 2 * i - a + 1) as f64);
        let zeros = n - 2 * i - a;
        let miss = if zeros == 0 { 0.0 } else { zeros as f64 * (1.0 - p).ln() };
        let lt = lf + (2 * i + a) as f64 * q.ln() + miss;
        s.add(lt.exp());
        i += 1;
    }
    s.value()
}

/// Law of P₁ − P₂ with P₁, P₂ independent Poisson(λ).
pub fn sym_poisson(lambda: f64) -> Result<LawModel> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Invalid(format!("lambda must be a nonnegative real, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(LawModel::SymPoisson {
            lambda,
            pmf: Lattice::point_mass(0.0),
        });
    }
    // p(n) = e^{-2λ} Σ_j λ^{2j+n} / (j! (j+n)!)
    let pmf_at = |n: u64| -> f64 {
        let mut term = (-2.0 * lambda + n as f64 * lambda.ln() - statrs::function::gamma::ln_gamma(n as f64 + 1.0)).exp();
        let mut s = Neumaier::new();
        let mut j = 0u64;
        while term > 0.0 {
            s.add(term);
            j += 1;
            term *= lambda * lambda / (j as f64 * (j + n) as f64);
            if term < 1e-30 * s.value() {
                break;
            }
        }
        s.value()
    };
    let mut pairs = vec![(0.0, pmf_at(0))];
    let mut total = pairs[0].1;
    let mut n = 1u64;
    while 1.0 - total > 1e-17 && n < 100_000 {
        let p = pmf_at(n);
        pairs.push((n as f64, p));
        pairs.push((-(n as f64), p));
        total += 2.0 * p;
        if p < 1e-20 {
            break;
        }
        n += 1;
    }
    Ok(LawModel::SymPoisson {
        lambda,
        pmf: Lattice::new(pairs),
    })
}

pub fn normal(mu: f64, var: f64) -> LawModel {
    LawModel::Normal { mu, var }
}

pub fn empirical(values: &[f64]) -> LawModel {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    LawModel::Empirical { sorted }
}

/// Gaussian plus independent scaled signed binomials, each given exactly.
pub fn exact_finite(gauss_var: f64, atoms: Vec<Atom>, budget: f64) -> Result<LawModel> {
    let mut lattice = Lattice::point_mass(0.0);
    for a in &atoms {
        let pmf = signed_binomial(a.trials, a.hit_prob, budget)?;
        let l = Lattice::new(pmf.into_iter().map(|(v, p)| (a.scale * v as f64, p)).collect());
        if lattice.points.len() * l.points.len() > budget as usize {
            return Err(Error::Budget {
                what: "lattice convolution".into(),
                required: (lattice.points.len() * l.points.len()) as f64,
                budget,
            });
        }
        lattice = lattice.convolve(&l, 1e-300);
    }
    let total = lattice.total();
    if (1.0 - total).abs() > TRUNCATION_MASS {
        return Err(Error::Truncation {
            achieved_mass: total,
            tolerance: TRUNCATION_MASS,
        });
    }
    Ok(LawModel::ExactFinite {
        gauss_var,
        atoms,
        lattice,
    })
}

/// Exact law of the approximating i.i.d. sum at N, normalized by b(N) √N.
pub fn exact_law(params: &SequenceParams, n: u64) -> Result<LawModel> {
    exact_law_budget(params, n, DEFAULT_LAW_BUDGET)
}

pub fn exact_law_budget(params: &SequenceParams, n: u64, budget: f64) -> Result<LawModel> {
    params.require_blocks()?;
    let b2 = exact::b_sq(params, n);
    if !(b2 > 0.0) {
        return Err(Error::Invalid(format!("b(N) = 0 at N = {n}: no index has n_k ≤ N")));
    }
    let norm = (b2 * n as f64).sqrt();
    let mut gauss = Neumaier::new();
    let mut atoms = Vec::new();
    for b in params.blocks() {
        let m = params.mass_upto(b, n);
        if m == 0.0 {
            continue;
        }
        if b.is_odd() {
            atoms.push(Atom {
                scale: m * (b.horizon as f64).sqrt() / norm,
                trials: n,
                hit_prob: 1.0 / b.horizon as f64,
            });
        } else {
            gauss.add(m * m / b2);
        }
    }
    exact_finite(gauss.value(), atoms, budget)
}

impl LawModel {
    pub fn name(&self) -> &'static str {
        match self {
            LawModel::Normal { .. } => "NORMAL",
            LawModel::SymPoisson { .. } => "SYM_POISSON",
            LawModel::ExactFinite { .. } => "EXACT_FINITE",
            LawModel::Empirical { .. } => "EMPIRICAL",
        }
    }

    /// P(X ≤ x).
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            LawModel::Normal { mu, var } => {
                if *var == 0.0 {
                    (x >= *mu) as u8 as f64
                } else {
                    std_normal_cdf((x - mu) / var.sqrt())
                }
            }
            LawModel::SymPoisson { pmf, .. } => pmf.cdf(x),
            LawModel::ExactFinite { gauss_var, lattice, .. } => {
                if *gauss_var == 0.0 {
                    return lattice.cdf(x);
                }
                let sd = gauss_var.sqrt();
                let lo = lattice.points.partition_point(|p| *p < x - 12.0 * sd);
                let hi = lattice.points.partition_point(|p| *p <= x + 12.0 * sd);
                let mut acc = Neumaier::new();
                if lo > 0 {
                    acc.add(lattice.cum[lo - 1]);
                }
                for i in lo..hi {
                    acc.add(lattice.probs[i] * std_normal_cdf((x - lattice.points[i]) / sd));
                }
                acc.value().clamp(0.0, 1.0)
            }
            LawModel::Empirical { sorted } => sorted.partition_point(|v| *v <= x) as f64 / sorted.len() as f64,
        }
    }

    /// Jump locations of the CDF.
    pub fn discontinuities(&self) -> Vec<f64> {
        match self {
            LawModel::Normal { mu, var } if *var == 0.0 => vec![*mu],
            LawModel::Normal { .. } => vec![],
            LawModel::SymPoisson { pmf, .. } => pmf.points.clone(),
            LawModel::ExactFinite { gauss_var, lattice, .. } => {
                if *gauss_var == 0.0 {
                    lattice.points.clone()
                } else {
                    vec![]
                }
            }
            LawModel::Empirical { sorted } => {
                let mut v = sorted.clone();
                v.dedup();
                v
            }
        }
    }

    /// Raw moments E X, E X², E X³, E X⁴.
    pub fn raw_moments(&self) -> [f64; 4] {
        match self {
            LawModel::Normal { mu, var } => {
                let (m, v) = (*mu, *var);
                [m, m * m + v, m.powi(3) + 3.0 * m * v, m.powi(4) + 6.0 * m * m * v + 3.0 * v * v]
            }
            LawModel::SymPoisson { pmf, .. } => [pmf.moment(1), pmf.moment(2), pmf.moment(3), pmf.moment(4)],
            LawModel::ExactFinite { gauss_var, lattice, .. } => {
                // independent sum of a lattice law L and N(0, g)
                let g = *gauss_var;
                let (m1, m2, m3, m4) = (lattice.moment(1), lattice.moment(2), lattice.moment(3), lattice.moment(4));
                [m1, m2 + g, m3 + 3.0 * m1 * g, m4 + 6.0 * m2 * g + 3.0 * g * g]
            }
            LawModel::Empirical { sorted } => {
                let n = sorted.len() as f64;
                let m = |r: i32| sorted.iter().map(|x| x.powi(r)).collect::<Neumaier>().value() / n;
                [m(1), m(2), m(3), m(4)]
            }
        }
    }

    /// Mean, variance, skewness, excess kurtosis.
    pub fn moments(&self) -> [f64; 4] {
        let [m1, m2, m3, m4] = self.raw_moments();
        let var = m2 - m1 * m1;
        let c3 = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
        let c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
        [m1, var, c3 / var.powf(1.5), c4 / (var * var) - 3.0]
    }

    pub fn sd(&self) -> f64 {
        self.moments()[1].max(0.0).sqrt()
    }

    /// Smallest x on a bisection grid with F(x) ≥ q.
    pub fn quantile(&self, q: f64) -> f64 {
        if let LawModel::Empirical { sorted } = self {
            let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
            return sorted[idx];
        }
        let sd = self.sd().max(1e-300);
        let mu = self.moments()[0];
        let (mut lo, mut hi) = (mu - 40.0 * sd, mu + 40.0 * sd);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// JSON summary: variant, parameters, moments, quantiles.
    pub fn summary_json(&self) -> Result<String> {
        let [mean, var, skew, kurt] = self.moments();
        let doc = serde_json::json!({
            "law": self,
            "moments": {"mean": mean, "variance": var, "skewness": skew, "excess_kurtosis": kurt},
            "quantiles": sim::QUANTILE_GRID.iter().map(|&q| (q, self.quantile(q))).collect::<Vec<_>>(),
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

/// sup_x |F_a(x) − F_b(x)| over both laws' jump points (approached from
/// either side) and a continuous grid of ±8 standard deviations.
pub fn ks_distance(a: &LawModel, b: &LawModel) -> f64 {
    let mut best = 0.0f64;
    let mut probe = |x: f64| {
        let d = (a.cdf(x) - b.cdf(x)).abs();
        if d > best {
            best = d;
        }
    };
    for law in [a, b] {
        for x in law.discontinuities() {
            let eps = 1e-9 * x.abs().max(1.0);
            probe(x + eps);
            probe(x - eps);
        }
    }
    let sd = a.sd().max(b.sd());
    let sd = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
    for i in 0..KS_GRID {
        let t = -8.0 + 16.0 * i as f64 / (KS_GRID - 1) as f64;
        probe(t * sd);
    }
    best.min(1.0)
}

/// 1% critical value of the one-sample KS statistic.
pub fn ks_critical(count: usize) -> f64 {
    1.63 / (count as f64).sqrt()
}

/// Total variation distance between Binomial(n, 1/n) and Poisson(1).
pub fn binomial_poisson_tv(n: u64) -> f64 {
    let (lo, w) = binomial_pmf(n, 1.0 / n as f64);
    let pois = |k: u64| (-1.0 - statrs::function::gamma::ln_gamma(k as f64 + 1.0)).exp();
    let mut s = Neumaier::new();
    let top = (lo + w.len() as u64).max(60);
    for k in 0..top {
        let b = if k >= lo && ((k - lo) as usize) < w.len() { w[(k - lo) as usize] } else { 0.0 };
        s.add((b - pois(k)).abs());
    }
    0.5 * s.value()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DichotomyVerdict {
    DifferentLimits,
    NoDichotomy,
    Inconclusive,
}

impl DichotomyVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            DichotomyVerdict::DifferentLimits => "DIFFERENT_LIMITS",
            DichotomyVerdict::NoDichotomy => "NO_DICHOTOMY",
            DichotomyVerdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Which empirical batch must match the exact oracle law.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleCheck {
    /// The normalized S_N batch itself.
    FullSn,
    /// The approximating i.i.d. sum batch; S_N is then compared to the
    /// normal law only.
    ApproxSum,
}

#[derive(Clone, Copy, Debug)]
pub struct DichotomyConfig {
    pub margin: f64,
    pub oracle_check: OracleCheck,
    pub law_budget: f64,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        DichotomyConfig {
            margin: 0.05,
            oracle_check: OracleCheck::ApproxSum,
            law_budget: DEFAULT_LAW_BUDGET,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HorizonRow {
    pub block: usize,
    pub odd: bool,
    pub horizon: u64,
    /// KS(normalized S_N, exact law); NaN when the law is over budget.
    pub ks_vs_oracle: f64,
    /// KS(normalized S_N, N(0, 1)).
    pub ks_vs_normal: f64,
    /// KS(approximating sum, exact law); NaN unless checked.
    pub ks_approx_vs_oracle: f64,
    /// b²(N_{l-1}) / b²(N_l).
    pub residual_fraction: f64,
    pub excess_kurtosis: f64,
    pub oracle_pass: bool,
    /// The exact law could not be built within the work budget.
    pub over_budget: bool,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub count: usize,
    pub seed: u64,
    pub critical: f64,
    pub margin_required: f64,
    pub margin: f64,
    pub oracle_check: OracleCheck,
    pub rows: Vec<HorizonRow>,
    pub verdict: DichotomyVerdict,
    pub required_count: Option<usize>,
}

pub fn dichotomy_report(params: &SequenceParams, count: usize, seed: u64) -> Result<DichotomyReport> {
    dichotomy_report_with(params, count, seed, &DichotomyConfig::default())
}

pub fn dichotomy_report_with(params: &SequenceParams, count: usize, seed: u64, cfg: &DichotomyConfig) -> Result<DichotomyReport> {
    let mut report = DichotomyReport {
        count,
        seed,
        critical: if count > 0 { ks_critical(count) } else { f64::INFINITY },
        margin_required: cfg.margin,
        margin: f64::NAN,
        oracle_check: cfg.oracle_check,
        rows: vec![],
        verdict: DichotomyVerdict::Inconclusive,
        required_count: None,
    };
    if count == 0 {
        return Ok(report);
    }
    let std = normal(0.0, 1.0);
    let mut prev_b2 = 0.0;
    for b in params.complete_blocks() {
        let h = b.horizon;
        let b2 = exact::b_sq(params, h);
        let full = sim::sample_batch(params, h, count, sim::derive_seed(seed, h), SampleKind::FullSn)?;
        let emp = empirical(&full.values);
        let mut row = HorizonRow {
            block: b.index,
            odd: b.is_odd(),
            horizon: h,
            ks_vs_oracle: f64::NAN,
            ks_vs_normal: ks_distance(&emp, &std),
            ks_approx_vs_oracle: f64::NAN,
            residual_fraction: prev_b2 / b2,
            excess_kurtosis: emp.moments()[3],
            oracle_pass: false,
            over_budget: false,
            note: String::new(),
        };
        prev_b2 = b2;
        match exact_law_budget(params, h, cfg.law_budget) {
            Ok(law) => {
                row.ks_vs_oracle = ks_distance(&emp, &law);
                if cfg.oracle_check == OracleCheck::ApproxSum {
                    let approx = sim::sample_batch(params, h, count, sim::derive_seed(seed ^ 0xA5A5, h), SampleKind::ApproxIidSum)?;
                    row.ks_approx_vs_oracle = ks_distance(&empirical(&approx.values), &law);
                }
                let checked = match cfg.oracle_check {
                    OracleCheck::FullSn => row.ks_vs_oracle,
                    OracleCheck::ApproxSum => row.ks_approx_vs_oracle,
                };
                row.oracle_pass = checked <= report.critical;
            }
            Err(e) if e.is_budget() => {
                row.over_budget = true;
                row.note = e.to_string();
            }
            Err(e) => return Err(e),
        }
        report.rows.push(row);
    }
    let odd = report.rows.iter().filter(|r| r.odd).map(|r| r.ks_vs_normal).fold(f64::INFINITY, f64::min);
    let even = report.rows.iter().filter(|r| !r.odd).map(|r| r.ks_vs_normal).fold(f64::NEG_INFINITY, f64::max);
    if !odd.is_finite() || !even.is_finite() {
        report.verdict = DichotomyVerdict::NoDichotomy;
        return Ok(report);
    }
    report.margin = odd - even;
    let oracle_ok = report.rows.iter().all(|r| r.oracle_pass);
    // KS noise on each side is about critical / 1.63 per batch
    let noise = 2.0 * report.critical;
    report.verdict = if report.critical > cfg.margin {
        // sampling noise alone could produce or hide the margin
        report.required_count = Some((1.63 / cfg.margin).powi(2).ceil() as usize);
        DichotomyVerdict::Inconclusive
    } else if !oracle_ok {
        DichotomyVerdict::Inconclusive
    } else if report.margin >= cfg.margin {
        DichotomyVerdict::DifferentLimits
    } else if report.margin + noise >= cfg.margin {
        let gap = (cfg.margin - report.margin).max(1e-3);
        report.required_count = Some(((2.0 * 1.63 / gap).powi(2)).ceil() as usize);
        DichotomyVerdict::Inconclusive
    } else {
        DichotomyVerdict::NoDichotomy
    };
    Ok(report)
}

impl DichotomyReport {
    /// horizon, ks_vs_oracle, ks_vs_normal, residual_fraction, verdict rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("horizon,ks_vs_oracle,ks_vs_normal,residual_fraction,verdict\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.horizon,
                fmt17(r.ks_vs_oracle),
                fmt17(r.ks_vs_normal),
                fmt17(r.residual_fraction),
                self.verdict.as_str()
            );
        }
        out
    }
}

/// Convenience: KS of a batch against a law.
pub fn batch_ks(batch: &SampleBatch, law: &LawModel) -> f64 {
    ks_distance(&empirical(&batch.values), law)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_pmf(lambda: f64, k: u64) -> f64 {
        (-lambda + k as f64 * lambda.ln() - statrs::function::gamma::ln_gamma(k as f64 + 1.0)).exp()
    }

    #[test]
    fn sym_poisson_matches_convolution() {
        let law = sym_poisson(0.5).unwrap();
        for n in -6i64..=6 {
            let mut want = 0.0;
            for j in 0..60u64 {
                let i = j as i64 + n;
                if i >= 0 {
                    want += poisson_pmf(0.5, i as u64) * poisson_pmf(0.5, j);
                }
            }
            let got = law.cdf(n as f64) - law.cdf(n as f64 - 0.5);
            assert!((got - want).abs() < 1e-15, "n={n}");
        }
        let [m, v, s, k] = law.moments();
        assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12 && s.abs() < 1e-8 && (k - 1.0).abs() < 1e-8);
    }

    #[test]
    fn sym_poisson_zero_is_point_mass() {
        let law = sym_poisson(0.0).unwrap();
        assert_eq!(law.cdf(-1e-12), 0.0);
        assert_eq!(law.cdf(0.0), 1.0);
    }

    #[test]
    fn signed_binomial_matches_trinomial_formula() {
        for (n, p) in [(8u64, 0.25), (30, 0.1), (64, 1.0 / 64.0), (5, 1.0)] {
            let pmf = signed_binomial(n, p, 1e9).unwrap();
            for (v, q) in pmf {
                let want = signed_binomial_direct(n, p, v);
                assert!((q - want).abs() < 1e-13, "n={n} v={v}");
            }
        }
    }

    #[test]
    fn exact_finite_reductions() {
        let law = exact_finite(1.0, vec![], 1e8).unwrap();
        for x in [-2.0, 0.0, 0.7] {
            assert!((law.cdf(x) - normal(0.0, 1.0).cdf(x)).abs() < 1e-15);
        }
        let pure = exact_finite(0.0, vec![Atom { scale: 1.0, trials: 4, hit_prob: 1.0 }], 1e8).unwrap();
        // all four trials hit; V = 2·Bin(4, 1/2) − 4
        assert!((pure.cdf(-4.0) - 1.0 / 16.0).abs() < 1e-15);
        assert!((pure.cdf(0.0) - 11.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn ks_basics() {
        let n = normal(0.0, 1.0);
        assert_eq!(ks_distance(&n, &n), 0.0);
        let point = normal(0.0, 0.0);
        assert!((ks_distance(&n, &point) - 0.5).abs() < 1e-9);
        let sp = sym_poisson(0.5).unwrap();
        assert!(ks_distance(&sp, &n) > 0.1);
    }

    #[test]
    fn tv_shrinks() {
        let a = binomial_poisson_tv(16);
        let b = binomial_poisson_tv(1024);
        assert!(b < a && b < 1e-3);
    }

    #[test]
    fn budget_error() {
        assert!(signed_binomial(1 << 40, 0.5, 1e6).unwrap_err().is_budget());
    }
}
