use serde::{Deserialize, Serialize};

use super::weights::WeightSchedule;
use crate::error::{Error, Result};

/// Law of the source variable shared by the coordinates of a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    /// Odd l: ±√N_l with probability 1/(2 N_l) each, 0 otherwise.
    ThreeValued,
    /// Even l: standard normal.
    Gaussian,
}

impl Parity {
    pub fn of(l: usize) -> Self {
        if l % 2 == 1 {
            Parity::ThreeValued
        } else {
            Parity::Gaussian
        }
    }
}

/// A maximal run of indices k sharing one source variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    /// 1-based block index l.
    pub index: usize,
    pub parity: Parity,
    pub k_lo: usize,
    pub k_hi: usize,
    /// N_l = 2^{k_hi}: the horizon and inverse hit probability.
    pub horizon: u64,
    /// M_l = Σ_{k in block} a_k / k.
    pub mass: f64,
    pub target: Option<f64>,
    pub complete: bool,
}

impl BlockSpec {
    pub fn ks(&self) -> std::ops::RangeInclusive<usize> {
        self.k_lo..=self.k_hi
    }

    pub fn is_odd(&self) -> bool {
        self.parity == Parity::ThreeValued
    }
}

/// Block mass targets as a function of l.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MassTarget {
    /// 2^(2^l).
    Paper,
    /// scale · ρ^l.
    Geometric { rho: f64, scale: f64 },
    /// One target per block; blocks past the list are left incomplete.
    Explicit { targets: Vec<f64> },
}

impl MassTarget {
    pub fn geometric(rho: f64) -> Self {
        MassTarget::Geometric { rho, scale: 1.0 }
    }

    pub fn target(&self, l: usize) -> Option<f64> {
        match self {
            MassTarget::Paper => Some(2f64.powf(2f64.powi(l as i32))),
            MassTarget::Geometric { rho, scale } => Some(scale * rho.powi(l as i32)),
            MassTarget::Explicit { targets } => targets.get(l - 1).copied(),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            MassTarget::Paper => Ok(()),
            MassTarget::Geometric { rho, scale } => {
                if *rho > 0.0 && *scale > 0.0 && rho.is_finite() && scale.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Invalid(format!("geometric target needs rho, scale > 0, got {rho}, {scale}")))
                }
            }
            MassTarget::Explicit { targets } => {
                if targets.is_empty() {
                    Err(Error::Invalid("explicit mass targets are empty".into()))
                } else if targets.iter().all(|t| t.is_finite() && *t > 0.0) {
                    Ok(())
                } else {
                    Err(Error::Invalid("explicit mass targets must be positive".into()))
                }
            }
        }
    }
}

/// How indices 1..=K_max are grouped into blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum Layout {
    /// Greedy: block l closes at the first k with M_l ≥ target_l − tolerance.
    Targets { target: MassTarget, tolerance: f64 },
    /// Explicit last index k_hi of every complete block.
    Ends { ends: Vec<usize> },
}

fn block(index: usize, k_lo: usize, k_hi: usize, weights: &WeightSchedule, target: Option<f64>, complete: bool) -> BlockSpec {
    let mass = (k_lo..=k_hi).map(|k| weights.a(k) / k as f64).sum();
    BlockSpec {
        index,
        parity: Parity::of(index),
        k_lo,
        k_hi,
        horizon: 1u64 << k_hi,
        mass,
        target,
        complete,
    }
}

/// Greedy block layout driven by mass targets.
pub fn build_blocks(weights: &WeightSchedule, k_max: usize, target: &MassTarget, tolerance: f64) -> Result<Vec<BlockSpec>> {
    target.check()?;
    if !(tolerance >= 0.0) {
        return Err(Error::Invalid(format!("tolerance must be nonnegative, got {tolerance}")));
    }
    if k_max > weights.len() {
        return Err(Error::Invalid(format!("K_max = {k_max} but only {} weights", weights.len())));
    }
    if k_max > super::MAX_K {
        return Err(Error::Bounds(format!("K_max = {k_max} exceeds {}", super::MAX_K)));
    }
    let mut blocks = Vec::new();
    let mut k_lo = 1;
    let mut mass = 0.0;
    for k in 1..=k_max {
        mass += weights.a(k) / k as f64;
        let l = blocks.len() + 1;
        match target.target(l) {
            Some(t) if mass >= t - tolerance && mass > 0.0 => {
                blocks.push(block(l, k_lo, k, weights, Some(t), true));
                k_lo = k + 1;
                mass = 0.0;
            }
            _ => {}
        }
    }
    if blocks.is_empty() {
        return Err(Error::NoCompleteBlock {
            k_max,
            achieved_mass: mass,
            target: target.target(1).unwrap_or(f64::NAN),
        });
    }
    if k_lo <= k_max {
        let l = blocks.len() + 1;
        blocks.push(block(l, k_lo, k_max, weights, target.target(l), false));
    }
    Ok(blocks)
}

/// Blocks with explicitly given right ends; indices past the last end form a
/// trailing incomplete block.
pub fn blocks_from_ends(weights: &WeightSchedule, k_max: usize, ends: &[usize]) -> Result<Vec<BlockSpec>> {
    if ends.is_empty() {
        return Err(Error::Invalid("block layout has no blocks".into()));
    }
    if k_max > weights.len() || k_max > super::MAX_K {
        return Err(Error::Bounds(format!("K_max = {k_max} not supported by {} weights", weights.len())));
    }
    let mut blocks = Vec::with_capacity(ends.len() + 1);
    let mut k_lo = 1;
    for (i, &end) in ends.iter().enumerate() {
        if end < k_lo || end > k_max {
            return Err(Error::Invalid(format!("block end {end} out of order or beyond K_max = {k_max}")));
        }
        blocks.push(block(i + 1, k_lo, end, weights, None, true));
        k_lo = end + 1;
    }
    if k_lo <= k_max {
        blocks.push(block(blocks.len() + 1, k_lo, k_max, weights, None, false));
    }
    if let Some(b) = blocks.iter().find(|b| !(b.mass > 0.0)) {
        return Err(Error::Invalid(format!("block {} has zero mass", b.index)));
    }
    Ok(blocks)
}
