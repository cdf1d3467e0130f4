//! Dyadic lengths, weight schedules and block layouts.

mod blocks;
mod io;
mod weights;

pub use blocks::{blocks_from_ends, build_blocks, BlockSpec, Layout, MassTarget, Parity};
pub use weights::{
    build_dyadic_lengths, build_weights, check_c, theorem2_schedule, Theorem2Schedule, WeightMode,
    WeightSchedule, MAX_K,
};

use serde::Serialize;

use crate::error::{Error, Result};

/// Full generative description of the process.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceParams {
    k_max: usize,
    weights: WeightSchedule,
    layout: Layout,
    blocks: Vec<BlockSpec>,
}

impl SequenceParams {
    /// Lay out blocks over the whole weight schedule.
    pub fn new(weights: WeightSchedule, layout: Layout) -> Result<Self> {
        weights.check()?;
        let k_max = weights.len();
        let blocks = match &layout {
            Layout::Targets { target, tolerance } => build_blocks(&weights, k_max, target, *tolerance)?,
            Layout::Ends { ends } => blocks_from_ends(&weights, k_max, ends)?,
        };
        Ok(SequenceParams {
            k_max,
            weights,
            layout,
            blocks,
        })
    }

    /// Weights from `mode` over 1..=k_max, blocks closing at `ends`.
    pub fn with_ends(mode: WeightMode, k_max: usize, ends: &[usize]) -> Result<Self> {
        let w = build_weights(mode, k_max, None)?;
        Self::new(w, Layout::Ends { ends: ends.to_vec() })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn weights(&self) -> &WeightSchedule {
        &self.weights
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn complete_blocks(&self) -> impl Iterator<Item = &BlockSpec> {
        self.blocks.iter().filter(|b| b.complete)
    }

    /// a_k.
    #[inline]
    pub fn a(&self, k: usize) -> f64 {
        self.weights.a(k)
    }

    /// n_k = 2^k.
    #[inline]
    pub fn n(k: usize) -> u64 {
        1u64 << k
    }

    /// Largest dyadic length n_{K_max}.
    pub fn n_max(&self) -> u64 {
        Self::n(self.k_max)
    }

    /// The block containing index k.
    pub fn block_of(&self, k: usize) -> Option<&BlockSpec> {
        self.blocks.iter().find(|b| b.ks().contains(&k))
    }

    /// Block mass restricted to indices with n_k ≤ n.
    pub fn mass_upto(&self, block: &BlockSpec, n: u64) -> f64 {
        block
            .ks()
            .filter(|&k| Self::n(k) <= n)
            .map(|k| self.a(k) / k as f64)
            .sum()
    }

    /// Partial sums of a_k / k over 1..=K_max.
    pub fn divergence_proxy(&self) -> f64 {
        (1..=self.k_max).map(|k| self.a(k) / k as f64).sum()
    }

    /// Tail Σ_{k>K_max} a_k / (k √n_k) of the untruncated model, with a_k
    /// frozen at a_{K_max}; reported for context only.
    pub fn truncation_tail(&self) -> f64 {
        let a = if self.k_max == 0 { 1.0 } else { self.a(self.k_max) };
        ((self.k_max + 1)..=(self.k_max + 200))
            .map(|k| a / (k as f64 * 2f64.powf(k as f64 / 2.0)))
            .sum()
    }
}

/// Per-block diagnostic row.
#[derive(Clone, Debug, Serialize)]
pub struct BlockDiagnostic {
    pub index: usize,
    pub parity: Parity,
    pub k_lo: usize,
    pub k_hi: usize,
    pub horizon: u64,
    pub mass: f64,
    pub target: Option<f64>,
    pub deviation: Option<f64>,
    pub complete: bool,
    /// M_l / b(N_l).
    pub dominance: f64,
}

/// Output of [`validate`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct Diagnostics {
    pub k_max: usize,
    pub range_violations: Vec<usize>,
    pub monotonicity_violations: Vec<usize>,
    pub blocks: Vec<BlockDiagnostic>,
    /// Σ_{k ≤ K_max} a_k / k.
    pub divergence_proxy: f64,
    /// a_{K-1} / a_K on the available prefix (finite-prefix trend only).
    pub last_ratio: Option<f64>,
    pub schedule_truncated: bool,
    pub partition_ok: bool,
}

impl Diagnostics {
    pub fn is_empty(&self) -> bool {
        self.k_max == 0 && self.blocks.is_empty()
    }
}

/// Check invariants and report block statistics.
pub fn validate(params: &SequenceParams) -> Diagnostics {
    let w = &params.weights;
    let mut partition_ok = true;
    let mut next = 1;
    let mut prev_horizon = 0u64;
    for b in &params.blocks {
        partition_ok &= b.k_lo == next && b.k_hi >= b.k_lo && b.parity == Parity::of(b.index);
        partition_ok &= prev_horizon < SequenceParams::n(b.k_lo) && SequenceParams::n(b.k_hi) <= b.horizon;
        partition_ok &= b.mass > 0.0;
        next = b.k_hi + 1;
        prev_horizon = b.horizon;
    }
    partition_ok &= params.blocks.is_empty() || next == params.k_max + 1;
    let blocks = params
        .blocks
        .iter()
        .map(|b| {
            let bn = crate::exact::b_of_n(params, b.horizon);
            BlockDiagnostic {
                index: b.index,
                parity: b.parity,
                k_lo: b.k_lo,
                k_hi: b.k_hi,
                horizon: b.horizon,
                mass: b.mass,
                target: b.target,
                deviation: b.target.map(|t| b.mass - t),
                complete: b.complete,
                dominance: b.mass / bn,
            }
        })
        .collect();
    let last_ratio = (w.len() >= 2).then(|| w.values[w.len() - 2] / w.values[w.len() - 1]);
    Diagnostics {
        k_max: params.k_max,
        range_violations: w.range_violations(),
        monotonicity_violations: w.monotonicity_violations(),
        blocks,
        divergence_proxy: params.divergence_proxy(),
        last_ratio,
        schedule_truncated: w.truncated,
        partition_ok,
    }
}

impl SequenceParams {
    /// Params with no weights and no blocks.
    pub fn empty() -> Self {
        SequenceParams {
            k_max: 0,
            weights: WeightSchedule {
                mode: WeightMode::Custom,
                values: vec![],
                breakpoints: None,
                c: None,
                truncated: false,
            },
            layout: Layout::Ends { ends: vec![] },
            blocks: vec![],
        }
    }

    pub(crate) fn require_blocks(&self) -> Result<()> {
        if self.blocks.is_empty() {
            Err(Error::Invalid("params have no blocks".into()))
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_const_one() {
        let p = SequenceParams::with_ends(WeightMode::ConstOne, 10, &[3, 10]).unwrap();
        let d = validate(&p);
        let h10: f64 = (1..=10).map(|k| 1.0 / k as f64).sum();
        assert!((d.divergence_proxy - h10).abs() < 1e-15);
        assert!(d.partition_ok);
        assert_eq!(d.blocks.len(), 2);
        assert!((d.blocks[0].dominance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn validate_empty() {
        assert!(validate(&SequenceParams::empty()).is_empty());
    }

    #[test]
    fn partition_property_holds() {
        let p = SequenceParams::new(
            build_weights(WeightMode::InvLog, 40, None).unwrap(),
            Layout::Targets {
                target: MassTarget::geometric(1.5),
                tolerance: 0.2,
            },
        )
        .unwrap();
        let mut prev = 0;
        for b in p.blocks() {
            for k in b.ks() {
                assert!(prev < SequenceParams::n(k) && SequenceParams::n(k) <= b.horizon);
            }
            prev = b.horizon;
        }
    }
}
