//! Small numeric helpers shared by the engine and the law oracles.

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for Neumaier {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<Neumaier>().value()
}

/// Σ_{t=0}^{len-1} v(t)² for a sequence linear in t with v(0) = v0 and
/// v(len-1) = v1. Every term of the closed form is nonnegative when v0 and
/// v1 share a sign, so it stays accurate where the naive expansion cancels.
#[inline]
pub fn linear_sum_sq(v0: f64, v1: f64, len: u128) -> f64 {
    match len {
        0 => 0.0,
        1 => v0 * v0,
        _ => {
            let l = len as f64;
            let d = v1 - v0;
            l * v0 * v1 + d * d * l * (2.0 * l - 1.0) / (6.0 * (l - 1.0))
        }
    }
}

/// Dyadic logarithm.
#[inline]
pub fn log2(x: f64) -> f64 {
    x.log2()
}

/// Exact floor(log2 n) for n ≥ 1.
#[inline]
pub fn ilog2(n: u64) -> u32 {
    63 - n.leading_zeros()
}

/// Format a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_sum_matches_loop() {
        for &(v0, v1, len) in &[(1.0, 2.0, 5u128), (0.3, 0.3, 9), (2.0, 0.0, 3), (0.7, 0.1, 2)] {
            let step = if len > 1 { (v1 - v0) / (len as f64 - 1.0) } else { 0.0 };
            let direct: f64 = (0..len).map(|t| (v0 + step * t as f64).powi(2)).sum();
            assert!((linear_sum_sq(v0, v1, len) - direct).abs() < 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let s = neumaier_sum([1.0, 1e100, 1.0, -1e100]);
        assert_eq!(s, 2.0);
    }

    #[test]
    fn ilog2_exact() {
        assert_eq!(ilog2(1), 0);
        assert_eq!(ilog2(1 << 20), 20);
        assert_eq!(ilog2((1 << 20) + 1), 20);
    }
}
