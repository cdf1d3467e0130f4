use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest k for which n_k = 2^k fits comfortably in 64-bit arithmetic.
pub const MAX_K: usize = 62;

/// Dyadic lengths n_k = 2^k for k = 1..=k_max.
pub fn build_dyadic_lengths(k_max: usize) -> Result<Vec<u64>> {
    if k_max > MAX_K {
        return Err(Error::Bounds(format!("K_max = {k_max} exceeds {MAX_K}")));
    }
    Ok((1..=k_max).map(|k| 1u64 << k).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// a_k = 1.
    ConstOne,
    /// a_1 = 1, a_k = 1 / log2 k.
    InvLog,
    /// Schedule built from a sequence c_k → 0 so that Σ a_k c_k / k converges.
    Theorem2,
    /// Explicit user-supplied values.
    Custom,
}

impl WeightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightMode::ConstOne => "const_one",
            WeightMode::InvLog => "inv_log",
            WeightMode::Theorem2 => "theorem2",
            WeightMode::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "const_one" | "const" => Ok(WeightMode::ConstOne),
            "inv_log" | "invlog" => Ok(WeightMode::InvLog),
            "theorem2" => Ok(WeightMode::Theorem2),
            "custom" => Ok(WeightMode::Custom),
            other => Err(Error::Parse(format!("unknown weight mode `{other}`"))),
        }
    }
}

/// The weight sequence a_1..a_K.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSchedule {
    pub mode: WeightMode,
    /// `values[k - 1]` is a_k.
    pub values: Vec<f64>,
    /// Schedule breakpoints k_0 < k_1 < ... (theorem2 mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<usize>>,
    /// The input sequence c_1, c_2, ... (theorem2 mode only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    /// Set when the theorem2 recipe ran out of room before K_max.
    #[serde(default)]
    pub truncated: bool,
}

impl WeightSchedule {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// a_k for 1-based k.
    #[inline]
    pub fn a(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    /// Explicit schedule; values must be nonincreasing and in [0, 1].
    pub fn custom(values: Vec<f64>) -> Result<Self> {
        let w = WeightSchedule {
            mode: WeightMode::Custom,
            values,
            breakpoints: None,
            c: None,
            truncated: false,
        };
        w.check()?;
        Ok(w)
    }

    /// Indices k (1-based) violating 0 ≤ a_k ≤ 1.
    pub fn range_violations(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, a)| !(0.0..=1.0).contains(*a))
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Indices k with a_{k+1} > a_k.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        self.values
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] > w[0])
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn check(&self) -> Result<()> {
        if let Some(k) = self.range_violations().first() {
            return Err(Error::Invalid(format!("a_{k} = {} outside [0, 1]", self.a(*k))));
        }
        if let Some(k) = self.monotonicity_violations().first() {
            return Err(Error::Invalid(format!("a_{} > a_{k}: weights must be nonincreasing", k + 1)));
        }
        Ok(())
    }
}

/// Build a weight schedule of length `k_max`.
pub fn build_weights(mode: WeightMode, k_max: usize, c: Option<&[f64]>) -> Result<WeightSchedule> {
    let values = match mode {
        WeightMode::ConstOne => vec![1.0; k_max],
        WeightMode::InvLog => (1..=k_max)
            .map(|k| if k == 1 { 1.0 } else { 1.0 / (k as f64).log2() })
            .collect(),
        WeightMode::Theorem2 => {
            let c = c.ok_or_else(|| Error::Invalid("theorem2 weights need a c sequence".into()))?;
            let s = theorem2_schedule(c, k_max)?;
            return Ok(WeightSchedule {
                mode,
                values: s.values,
                breakpoints: Some(s.breakpoints),
                c: Some(c[..k_max.min(c.len())].to_vec()),
                truncated: s.truncated,
            });
        }
        WeightMode::Custom => {
            return Err(Error::Invalid("custom weights are built with WeightSchedule::custom".into()))
        }
    };
    Ok(WeightSchedule {
        mode,
        values,
        breakpoints: None,
        c: None,
        truncated: false,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theorem2Schedule {
    /// k_0 = 1 < k_1 < ... (only breakpoints within K_max).
    pub breakpoints: Vec<usize>,
    /// a_1..a_K.
    pub values: Vec<f64>,
    /// True when some k_n could not be placed within K_max; the tail after the
    /// last breakpoint then holds a_{k_{n-1}} constant.
    pub truncated: bool,
}

/// Check that `c` is positive and nonincreasing.
pub fn check_c(c: &[f64]) -> Result<()> {
    if let Some(i) = c.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Invalid(format!("c_{} = {} is not a positive real", i + 1, c[i])));
    }
    if let Some(i) = c.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::Invalid(format!("c is not nonincreasing at k = {}", i + 1)));
    }
    Ok(())
}

/// Weight schedule with Σ a_k c_k / k < ∞ and Σ a_k / k = ∞.
///
/// `c[k - 1]` is c_k and must cover 1..=k_max.
pub fn theorem2_schedule(c: &[f64], k_max: usize) -> Result<Theorem2Schedule> {
    if c.len() < k_max {
        return Err(Error::Invalid(format!(
            "c has {} terms, K_max = {k_max} needs that many",
            c.len()
        )));
    }
    check_c(&c[..k_max])?;
    if k_max == 0 {
        return Ok(Theorem2Schedule {
            breakpoints: vec![],
            values: vec![],
            truncated: false,
        });
    }
    let mut values = vec![0.0; k_max];
    values[0] = 1.0;
    let mut breakpoints = vec![1usize];
    let mut prev = 1usize;
    let mut a_prev = 1.0f64;
    let mut n = 1usize;
    let mut truncated = false;
    loop {
        let threshold = 0.5f64.powi(n as i32);
        let start = prev + n;
        let found = (start..=k_max).find(|&k| c[k - 1] <= threshold);
        let Some(kn) = found else {
            truncated = prev < k_max;
            for v in values.iter_mut().take(k_max).skip(prev) {
                *v = a_prev;
            }
            break;
        };
        let harmonic: f64 = ((prev + 1)..=kn).map(|j| 1.0 / j as f64).sum();
        let a_n = a_prev.min(1.0 / harmonic);
        for j in (prev + 1)..kn {
            let step = j - prev;
            let alpha = if step <= n { step as f64 / n as f64 } else { 1.0 };
            values[j - 1] = (a_prev + alpha * (a_n - a_prev)).clamp(a_n, a_prev);
        }
        values[kn - 1] = a_n;
        breakpoints.push(kn);
        prev = kn;
        a_prev = a_n;
        n += 1;
        if prev == k_max {
            break;
        }
    }
    Ok(Theorem2Schedule {
        breakpoints,
        values,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_lengths() {
        assert_eq!(build_dyadic_lengths(3).unwrap(), vec![2, 4, 8]);
        assert!(build_dyadic_lengths(0).unwrap().is_empty());
        assert_eq!(*build_dyadic_lengths(20).unwrap().last().unwrap(), 1_048_576);
        assert!(build_dyadic_lengths(63).is_err());
    }

    #[test]
    fn simple_modes() {
        assert_eq!(build_weights(WeightMode::ConstOne, 4, None).unwrap().values, vec![1.0; 4]);
        let w = build_weights(WeightMode::InvLog, 4, None).unwrap();
        assert_eq!(w.values[..2], [1.0, 1.0]);
        assert!((w.values[2] - 0.630_929_753_571_457_4).abs() < 1e-15);
        assert_eq!(w.values[3], 0.5);
        assert!(build_weights(WeightMode::InvLog, 0, None).unwrap().is_empty());
    }

    #[test]
    fn theorem2_constant_half() {
        let c = vec![0.5; 6];
        let s = theorem2_schedule(&c, 6).unwrap();
        assert_eq!(s.breakpoints, vec![1, 2]);
        assert_eq!(s.values[0], 1.0);
        // a_2 = min(1, 1 / (1/2)) = 1
        assert_eq!(s.values[1], 1.0);
        assert!(s.truncated);
    }

    #[test]
    fn theorem2_geometric_c() {
        let c: Vec<f64> = (1..=40).map(|k| 0.5f64.powi(k)).collect();
        let s = theorem2_schedule(&c, 40).unwrap();
        assert_eq!(s.values[0], 1.0);
        let w = WeightSchedule::custom(s.values.clone()).unwrap();
        assert!(w.monotonicity_violations().is_empty());
        for pair in s.breakpoints.windows(2) {
            assert!(s.values[pair[1] - 1] <= s.values[pair[0] - 1]);
        }
    }

    #[test]
    fn theorem2_loglog_c_is_monotone() {
        let c: Vec<f64> = (1..=20).map(|k| 1.0 / ((k as f64 + 4.0).log2()).log2()).collect();
        let w = build_weights(WeightMode::Theorem2, 20, Some(&c)).unwrap();
        w.check().unwrap();
        assert_eq!(w.breakpoints.as_deref(), Some(&[1, 12][..]));
        assert!(w.truncated);
    }

    #[test]
    fn rejects_bad_c() {
        assert!(theorem2_schedule(&[0.5, 0.6], 2).is_err());
        assert!(theorem2_schedule(&[0.5, 0.0], 2).is_err());
        assert!(theorem2_schedule(&[0.5], 2).is_err());
    }
}
