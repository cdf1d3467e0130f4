//! Finite normal Markov operators in their eigenbasis.
//!
//! A toy is a list of eigenvalues λ_j (|λ_j| ≤ 1) and the coordinates ĝ_j of
//! an observable g; every operator function acts coordinatewise. Norms are
//! ℓ² norms of the coefficient vector, which for circulant operators equals
//! the L² norm under the uniform measure.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{fmt17, Neumaier};

type C = Complex64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToySource {
    Circulant { row: Vec<f64> },
    Explicit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralToy {
    pub eigenvalues: Vec<C>,
    pub coeffs: Vec<C>,
    pub source: ToySource,
}

/// JSON input: either `kernel_row` + `g` or `eigenvalues` + `coefficients`
/// (complex numbers as `[re, im]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToySpec {
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub kernel_row: Option<Vec<f64>>,
    #[serde(default)]
    pub g: Option<Vec<f64>>,
    #[serde(default)]
    pub eigenvalues: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub coefficients: Option<Vec<[f64; 2]>>,
}

const UNIT_TOL: f64 = 1e-12;

impl SpectralToy {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Toy from eigenvalues and coefficients.
    pub fn explicit(eigenvalues: Vec<C>, coeffs: Vec<C>) -> Result<Self> {
        let toy = SpectralToy {
            eigenvalues,
            coeffs,
            source: ToySource::Explicit,
        };
        toy.check()?;
        Ok(toy)
    }

    /// Circulant operator `Qg(i) = Σ_t row[t] g(i + t)` and observable values
    /// g(0..n); g must have mean zero.
    pub fn circulant(row: Vec<f64>, g: &[f64]) -> Result<Self> {
        let n = row.len();
        if n == 0 || g.len() != n {
            return Err(Error::Invalid(format!("kernel row has {n} entries, g has {}", g.len())));
        }
        if row.iter().any(|&x| !(x >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid("kernel row must be a probability vector".into()));
        }
        let omega = |e: f64| C::from_polar(1.0, 2.0 * PI * e / n as f64);
        let eigenvalues = (0..n)
            .map(|k| (0..n).map(|t| row[t] * omega(((t * k) % n) as f64)).sum())
            .collect();
        let coeffs = (0..n)
            .map(|k| (0..n).map(|j| g[j] * omega(-(((j * k) % n) as f64))).sum::<C>() / n as f64)
            .collect();
        let toy = SpectralToy {
            eigenvalues,
            coeffs,
            source: ToySource::Circulant { row },
        };
        toy.check()?;
        Ok(toy)
    }

    pub fn from_spec(spec: &ToySpec) -> Result<Self> {
        let toy = match (&spec.kernel_row, &spec.g, &spec.eigenvalues, &spec.coefficients) {
            (Some(row), Some(g), None, None) => Self::circulant(row.clone(), g)?,
            (None, None, Some(e), Some(c)) => Self::explicit(
                e.iter().map(|z| C::new(z[0], z[1])).collect(),
                c.iter().map(|z| C::new(z[0], z[1])).collect(),
            )?,
            _ => {
                return Err(Error::Invalid(
                    "toy spec needs kernel_row + g, or eigenvalues + coefficients".into(),
                ))
            }
        };
        if let Some(d) = spec.dim {
            if d != toy.dim() {
                return Err(Error::Invalid(format!("dim = {d} but {} eigenvalues", toy.dim())));
            }
        }
        Ok(toy)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_spec(&serde_json::from_str(s)?)
    }

    fn check(&self) -> Result<()> {
        if self.eigenvalues.len() != self.coeffs.len() {
            return Err(Error::Invalid("eigenvalue and coefficient counts differ".into()));
        }
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        for (j, (l, g)) in self.eigenvalues.iter().zip(&self.coeffs).enumerate() {
            if l.norm() > 1.0 + UNIT_TOL {
                return Err(Error::Invalid(format!("|λ_{j}| = {} exceeds 1", l.norm())));
            }
            if (l - 1.0).norm() <= UNIT_TOL && g.norm() > UNIT_TOL * scale {
                return Err(Error::Invalid(format!(
                    "coefficient {j} is nonzero on the eigenvalue 1; g must be mean zero"
                )));
            }
        }
        Ok(())
    }

    /// Indices that carry a nonzero coefficient.
    fn active(&self) -> impl Iterator<Item = (C, C)> + '_ {
        self.eigenvalues
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, g)| g.norm() > 0.0)
            .map(|(l, g)| (*l, *g))
    }

    /// ĥ = ĝ / √(1 − λ), the preimage of g under (I − Q)^{1/2}.
    pub fn h_coeffs(&self) -> Vec<C> {
        self.eigenvalues
            .iter()
            .zip(&self.coeffs)
            .map(|(l, g)| if g.norm() == 0.0 { C::new(0.0, 0.0) } else { g / (C::new(1.0, 0.0) - l).sqrt() })
            .collect()
    }

    /// Circulant matrix `P[i][j] = row[(j − i) mod n]` (circulant toys only).
    pub fn matrix(&self) -> Option<Vec<Vec<f64>>> {
        match &self.source {
            ToySource::Circulant { row } => {
                let n = row.len();
                Some((0..n).map(|i| (0..n).map(|j| row[(j + n - i) % n]).collect()).collect())
            }
            ToySource::Explicit => None,
        }
    }
}

fn norm(v: &[C]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).collect::<Neumaier>().value().sqrt()
}

/// Coefficients of √(1 − x) = 1 − Σ_{j≥1} a_j x^j.
pub fn binom_coeffs(m: usize) -> Vec<f64> {
    let mut a = Vec::with_capacity(m);
    let mut cur = 0.5;
    for j in 1..=m {
        a.push(cur);
        cur *= (j as f64 - 0.5) / (j as f64 + 1.0);
    }
    a
}

#[derive(Clone, Debug)]
pub struct SqrtApply {
    pub series: Vec<C>,
    pub direct: Vec<C>,
    pub error: f64,
}

/// (I − Q)^{1/2} g by the truncated binomial series and by the principal
/// square root of 1 − λ.
pub fn sqrt_apply(toy: &SpectralToy, m: usize) -> SqrtApply {
    let a = binom_coeffs(m);
    let mut series = Vec::with_capacity(toy.dim());
    let mut direct = Vec::with_capacity(toy.dim());
    let mut error = 0.0f64;
    for (l, g) in toy.eigenvalues.iter().zip(&toy.coeffs) {
        let mut pow = C::new(1.0, 0.0);
        let (mut re, mut im) = (Neumaier::new(), Neumaier::new());
        for aj in &a {
            pow *= l;
            re.add(aj * pow.re);
            im.add(aj * pow.im);
        }
        let s = g * (C::new(1.0, 0.0) - C::new(re.value(), im.value()));
        let d = g * (C::new(1.0, 0.0) - l).sqrt();
        error = error.max((s - d).norm());
        series.push(s);
        direct.push(d);
    }
    SqrtApply { series, direct, error }
}

/// S_n(g) coefficientwise, via the recurrence S_{k+1} = S_k + λ^k ĝ.
fn partial_sums(l: C, g: C, n: usize) -> Vec<C> {
    // out[k] = S_k, k = 0..=n
    let mut out = Vec::with_capacity(n + 1);
    let mut s = C::new(0.0, 0.0);
    let mut pow = C::new(1.0, 0.0);
    out.push(s);
    for _ in 0..n {
        s += pow * g;
        pow *= l;
        out.push(s);
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralRow {
    pub n: usize,
    /// ‖S_n(g)‖.
    pub norm_sn: f64,
    /// Σ_{k ≤ n} ‖S_k(g)‖ / k^{3/2}.
    pub sum3_partial: f64,
    /// ‖S_n‖ log n / √n.
    pub rate5: f64,
    /// ‖S_n‖ logᵠ n / √n.
    pub rate6_q: f64,
    /// Σ_{k ≤ n} ‖S_k‖² / k².
    pub remark7_partial: f64,
    /// ‖Σ_{k ≤ n} S_k / k^{3/2}‖.
    pub series2_partial: f64,
    /// n^{-1/2} ‖Σ_{k ≤ n} λ^k ĝ / √k‖.
    pub kronecker: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub q: f64,
    pub rows: Vec<SpectralRow>,
    /// ‖ĥ‖ with ĥ = ĝ / √(1 − λ).
    pub h_norm: f64,
    /// max_j |ĝ_j| / √|1 − λ_j|.
    pub h_max: f64,
}

/// Condition statistics on the dyadic grid 1, 2, 4, ... ≤ n_max.
pub fn evaluate_conditions(toy: &SpectralToy, n_max: usize, q: f64) -> Result<SpectralReport> {
    if n_max < 2 {
        return Err(Error::Invalid("n_max must be at least 2".into()));
    }
    toy.check()?;
    let active: Vec<(C, C)> = toy.active().collect();
    let sums: Vec<Vec<C>> = active.iter().map(|&(l, g)| partial_sums(l, g, n_max)).collect();
    let mut series2 = vec![C::new(0.0, 0.0); active.len()];
    let mut kron = vec![C::new(0.0, 0.0); active.len()];
    let mut pows: Vec<C> = active.iter().map(|(l, _)| *l).collect();
    let (mut sum3, mut rem7) = (Neumaier::new(), Neumaier::new());
    let mut rows = Vec::new();
    let mut next = 1usize;
    for n in 1..=n_max {
        let nf = n as f64;
        let sn: Vec<C> = sums.iter().map(|s| s[n]).collect();
        let ns = norm(&sn);
        sum3.add(ns / nf.powf(1.5));
        rem7.add(ns * ns / (nf * nf));
        for i in 0..active.len() {
            series2[i] += sn[i] / nf.powf(1.5);
            kron[i] += pows[i] * active[i].1 / nf.sqrt();
            pows[i] *= active[i].0;
        }
        if n == next {
            let lg = nf.log2();
            rows.push(SpectralRow {
                n,
                norm_sn: ns,
                sum3_partial: sum3.value(),
                rate5: ns * lg / nf.sqrt(),
                rate6_q: ns * lg.powf(q) / nf.sqrt(),
                remark7_partial: rem7.value(),
                series2_partial: norm(&series2),
                kronecker: norm(&kron) / nf.sqrt(),
            });
            next *= 2;
        }
    }
    let h = toy.h_coeffs();
    let h_max = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(SpectralReport {
        q,
        rows,
        h_norm: norm(&h),
        h_max,
    })
}

impl SpectralReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,norm_Sn,sum3_partial,rate5,rate6_q,remark7_partial,series2_partial,kronecker\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.n,
                fmt17(r.norm_sn),
                fmt17(r.sum3_partial),
                fmt17(r.rate5),
                fmt17(r.rate6_q),
                fmt17(r.remark7_partial),
                fmt17(r.series2_partial),
                fmt17(r.kronecker)
            );
        }
        out
    }
}

/// Residual of an identity together with the magnitude it is measured against.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residual {
    pub residual: f64,
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual
        } else {
            self.residual / self.scale
        }
    }
}

/// Σ_{k=n}^{2n-1} S_k / k^{3/2} = S_n Σ_{k=n}^{2n-1} k^{-3/2} + Q^n Σ_{k=1}^{n-1} S_k / (n+k)^{3/2}.
pub fn rn_identity_check(toy: &SpectralToy, n: usize) -> Residual {
    assert!(n >= 2, "n must be at least 2");
    let mut out = Residual { residual: 0.0, scale: 0.0 };
    for (l, g) in toy.active() {
        let s = partial_sums(l, g, 2 * n);
        let w: f64 = (n..2 * n).map(|k| (k as f64).powf(-1.5)).sum();
        let lhs: C = (n..2 * n).map(|k| s[k] * (k as f64).powf(-1.5)).sum();
        let inner: C = (1..n).map(|k| s[k] * ((n + k) as f64).powf(-1.5)).sum();
        let rhs = s[n] * w + l.powu(n as u32) * inner;
        out.residual = out.residual.max((lhs - rhs).norm());
        out.scale = out.scale.max(lhs.norm() + (s[n] * w).norm() + inner.norm());
    }
    out
}

/// Abel summation of Σ_{k=1}^{n-1} S_k / (n+k)^{3/2} with the finite tails
/// R_k = Σ_{i=k}^{2n} S_i / i^{3/2}.
pub fn rn_telescoping_check(toy: &SpectralToy, n: usize) -> Residual {
    assert!(n >= 3, "n must be at least 3");
    let top = 2 * n;
    let mut out = Residual { residual: 0.0, scale: 0.0 };
    let p = |x: usize, y: usize| (x as f64 / y as f64).powf(1.5);
    for (l, g) in toy.active() {
        let s = partial_sums(l, g, top);
        // r[k] = R_k for k = 1..=top + 1
        let mut r = vec![C::new(0.0, 0.0); top + 2];
        for k in (1..=top).rev() {
            r[k] = r[k + 1] + s[k] * (k as f64).powf(-1.5);
        }
        let lhs: C = (1..n).map(|k| s[k] * ((n + k) as f64).powf(-1.5)).sum();
        let body: C = (2..n).map(|k| r[k] * (p(k, n + k) - p(k - 1, n + k - 1))).sum();
        let rhs = body + r[1] * ((n + 1) as f64).powf(-1.5) - r[n] * p(n - 1, 2 * n - 1);
        out.residual = out.residual.max((lhs - rhs).norm());
        out.scale = out.scale.max(lhs.norm() + body.norm() + r[1].norm() + r[n].norm());
    }
    out
}

/// Random-walk kernel with `support` random weights, for demos and tests.
pub fn random_circulant<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<SpectralToy> {
    let mut row: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
    let fix = 1.0 - row.iter().sum::<f64>();
    row[0] += fix;
    let mut g: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    let mean = g.iter().sum::<f64>() / dim as f64;
    g.iter_mut().for_each(|x| *x -= mean);
    let mut toy = SpectralToy::circulant(row, &g)?;
    // remove the rounding residue left on the eigenvalue 1
    for (l, c) in toy.eigenvalues.iter().zip(toy.coeffs.iter_mut()) {
        if (l - 1.0).norm() <= UNIT_TOL {
            *c = C::new(0.0, 0.0);
        }
    }
    Ok(toy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn first_coefficients() {
        let a = binom_coeffs(3);
        assert_eq!(a, vec![0.5, 0.125, 0.0625]);
        // squaring 1 − Σ a_j x^j reproduces 1 − x through x³
        let p = [1.0, -a[0], -a[1], -a[2]];
        for d in 0..4 {
            let c: f64 = (0..=d).map(|i| p[i] * p[d - i]).sum();
            let want = [1.0, -1.0, 0.0, 0.0][d];
            assert!((c - want).abs() < 1e-15);
        }
    }

    #[test]
    fn coefficient_asymptotics() {
        let a = binom_coeffs(10_000);
        let j = 10_000f64;
        let r = a[9_999] * 2.0 * PI.sqrt() * j.powf(1.5);
        assert!((0.99..=1.01).contains(&r), "{r}");
        assert!(a.iter().sum::<f64>() < 1.0);
    }

    #[test]
    fn zero_spectrum_is_identity() {
        let toy = SpectralToy::explicit(vec![C::new(0.0, 0.0); 3], vec![C::new(1.0, 2.0); 3]).unwrap();
        let r = sqrt_apply(&toy, 5);
        assert_eq!(r.error, 0.0);
        assert_eq!(r.series, toy.coeffs);
    }

    #[test]
    fn minus_one_converges_to_sqrt2() {
        let toy = SpectralToy::explicit(vec![C::new(-1.0, 0.0)], vec![C::new(1.0, 0.0)]).unwrap();
        let e1 = sqrt_apply(&toy, 100).error;
        let e2 = sqrt_apply(&toy, 10_000).error;
        assert!(e2 < e1 && e2 < 1e-5);
    }

    #[test]
    fn rejects_mass_on_unit_eigenvalue() {
        assert!(SpectralToy::circulant(vec![0.5, 0.5], &[1.0, 1.0]).is_err());
        assert!(SpectralToy::explicit(vec![C::new(1.0, 0.0)], vec![C::new(0.3, 0.0)]).is_err());
    }

    #[test]
    fn identities_hold() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let toy = random_circulant(16, &mut rng).unwrap();
        assert!(rn_identity_check(&toy, 2).relative() < 1e-12);
        assert!(rn_identity_check(&toy, 64).relative() < 1e-10);
        assert!(rn_telescoping_check(&toy, 32).relative() < 1e-10);
        let scalar = SpectralToy::explicit(vec![C::new(0.5, 0.0)], vec![C::new(1.0, 0.0)]).unwrap();
        assert!(rn_telescoping_check(&scalar, 8).residual < 1e-12);
        let zero = SpectralToy::explicit(vec![C::new(0.5, 0.0)], vec![C::new(0.0, 0.0)]).unwrap();
        assert_eq!(rn_identity_check(&zero, 5).residual, 0.0);
        assert_eq!(rn_telescoping_check(&zero, 5).residual, 0.0);
    }

    #[test]
    fn circulant_is_normal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let toy = random_circulant(8, &mut rng).unwrap();
        let p = toy.matrix().unwrap();
        let n = p.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let ppt: f64 = (0..n).map(|k| p[i][k] * p[j][k]).sum();
                let ptp: f64 = (0..n).map(|k| p[k][i] * p[k][j]).sum();
                worst = worst.max((ppt - ptp).abs());
            }
        }
        assert!(worst <= 1e-12 * n as f64);
    }

    #[test]
    fn remark7_blows_up_near_one() {
        let run = |eps: f64| {
            let toy = SpectralToy::explicit(vec![C::new(1.0 - eps, 0.0)], vec![C::new(1.0, 0.0)]).unwrap();
            evaluate_conditions(&toy, 1 << 12, 1.5).unwrap().rows.last().unwrap().remark7_partial
        };
        let oracle = |eps: f64| -> f64 {
            (1..=1u32 << 12)
                .map(|n| {
                    let v = (1.0 - (1.0 - eps).powi(n as i32)) / eps;
                    v * v / (n as f64 * n as f64)
                })
                .sum()
        };
        for eps in [0.1, 0.01, 0.001] {
            assert!((run(eps) - oracle(eps)).abs() < 1e-10 * oracle(eps));
        }
        assert!(run(0.001) > 5.0 * run(0.01));
    }
}
