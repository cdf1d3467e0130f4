//! Flat `key = value` and JSON encodings of [`SequenceParams`].
//!
//! The text format has one `key = value` pair per line; `#` starts a comment.
//! Reals are written with 17 significant digits, lists are comma-separated.
//!
//! ```text
//! k_max = 6
//! weight_mode = const_one
//! weights = 1.0000000000000000e0, ...
//! layout = ends            # or `targets`
//! block_ends = 2, 6
//! mass_target = geometric  # targets only: paper | geometric | explicit
//! rho = 4
//! scale = 1
//! tolerance = 1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Layout, MassTarget, SequenceParams, WeightMode, WeightSchedule};
use crate::error::{Error, Result};
use crate::numeric::fmt17;

#[derive(Serialize, Deserialize)]
struct ParamsDoc {
    k_max: usize,
    weights: WeightSchedule,
    layout: Layout,
    #[serde(default, skip_deserializing)]
    blocks: Vec<super::BlockSpec>,
}

fn join_f(v: &[f64]) -> String {
    v.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(", ")
}

fn join_u(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn split_list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| Error::Parse(format!("bad element `{}` in `{key}`", t.trim())))
        })
        .collect()
}

impl SequenceParams {
    pub fn to_json(&self) -> Result<String> {
        let doc = ParamsDoc {
            k_max: self.k_max,
            weights: self.weights.clone(),
            layout: self.layout.clone(),
            blocks: self.blocks.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ParamsDoc = serde_json::from_str(s)?;
        if doc.k_max != doc.weights.len() {
            return Err(Error::Invalid(format!(
                "k_max = {} but {} weights given",
                doc.k_max,
                doc.weights.len()
            )));
        }
        SequenceParams::new(doc.weights, doc.layout)
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let w = &self.weights;
        let _ = writeln!(out, "k_max = {}", self.k_max);
        let _ = writeln!(out, "weight_mode = {}", w.mode.as_str());
        let _ = writeln!(out, "weights = {}", join_f(&w.values));
        if let Some(b) = &w.breakpoints {
            let _ = writeln!(out, "breakpoints = {}", join_u(b));
        }
        if let Some(c) = &w.c {
            let _ = writeln!(out, "c = {}", join_f(c));
        }
        let _ = writeln!(out, "truncated = {}", w.truncated);
        match &self.layout {
            Layout::Ends { ends } => {
                let _ = writeln!(out, "layout = ends");
                let _ = writeln!(out, "block_ends = {}", join_u(ends));
            }
            Layout::Targets { target, tolerance } => {
                let _ = writeln!(out, "layout = targets");
                match target {
                    MassTarget::Paper => {
                        let _ = writeln!(out, "mass_target = paper");
                    }
                    MassTarget::Geometric { rho, scale } => {
                        let _ = writeln!(out, "mass_target = geometric");
                        let _ = writeln!(out, "rho = {}", fmt17(*rho));
                        let _ = writeln!(out, "scale = {}", fmt17(*scale));
                    }
                    MassTarget::Explicit { targets } => {
                        let _ = writeln!(out, "mass_target = explicit");
                        let _ = writeln!(out, "targets = {}", join_f(targets));
                    }
                }
                let _ = writeln!(out, "tolerance = {}", fmt17(*tolerance));
            }
        }
        out
    }

    pub fn from_key_value(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key `{}`", lineno + 1, k.trim())));
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str).ok_or_else(|| Error::Parse(format!("missing key `{k}`")));
        let num = |k: &str| -> Result<f64> {
            get(k)?.parse::<f64>().map_err(|_| Error::Parse(format!("`{k}` is not a number")))
        };
        let k_max: usize = get("k_max")?.parse().map_err(|_| Error::Parse("`k_max` is not an integer".into()))?;
        let weights = WeightSchedule {
            mode: WeightMode::parse(get("weight_mode")?)?,
            values: split_list("weights", get("weights")?)?,
            breakpoints: map.get("breakpoints").map(|s| split_list("breakpoints", s)).transpose()?,
            c: map.get("c").map(|s| split_list("c", s)).transpose()?,
            truncated: map.get("truncated").map(|s| s == "true").unwrap_or(false),
        };
        if weights.len() != k_max {
            return Err(Error::Invalid(format!("k_max = {k_max} but {} weights given", weights.len())));
        }
        let layout = match get("layout")? {
            "ends" => Layout::Ends {
                ends: split_list("block_ends", get("block_ends")?)?,
            },
            "targets" => {
                let target = match get("mass_target")? {
                    "paper" => MassTarget::Paper,
                    "geometric" => MassTarget::Geometric {
                        rho: num("rho")?,
                        scale: map.get("scale").map(|_| num("scale")).transpose()?.unwrap_or(1.0),
                    },
                    "explicit" => MassTarget::Explicit {
                        targets: split_list("targets", get("targets")?)?,
                    },
                    other => return Err(Error::Parse(format!("unknown mass_target `{other}`"))),
                };
                Layout::Targets {
                    target,
                    tolerance: num("tolerance")?,
                }
            }
            other => return Err(Error::Parse(format!("unknown layout `{other}`"))),
        };
        SequenceParams::new(weights, layout)
    }
}
