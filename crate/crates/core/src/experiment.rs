//! Scenario presets and the batch runner behind the command-line tool.
//!
//! [`run`] turns an [`ExperimentConfig`] into in-memory artifacts; nothing
//! here computes numbers of its own, every row comes from another module.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, ConditionId};
use crate::laws::{self, DichotomyReport, DichotomyVerdict};
use crate::numeric::{fmt17, Neumaier};
use crate::params::{self, build_weights, theorem2_schedule, Layout, SequenceParams, WeightMode, WeightSchedule};
use crate::spectral::{self, SpectralToy, ToySpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scenario {
    Theorem1,
    Theorem2,
    Theorem3,
    Conditions,
    Spectral,
    Custom,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Theorem1 => "theorem1",
            Scenario::Theorem2 => "theorem2",
            Scenario::Theorem3 => "theorem3",
            Scenario::Conditions => "conditions",
            Scenario::Spectral => "spectral",
            Scenario::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "theorem1" => Ok(Scenario::Theorem1),
            "theorem2" => Ok(Scenario::Theorem2),
            "theorem3" => Ok(Scenario::Theorem3),
            "conditions" => Ok(Scenario::Conditions),
            "spectral" => Ok(Scenario::Spectral),
            "custom" => Ok(Scenario::Custom),
            other => Err(Error::Parse(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Grid 2^lo, ..., 2^hi, written `dyadic:lo:hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: u32,
    pub hi: u32,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Parse(format!("grid `{s}` is not of the form dyadic:<lo>:<hi>"));
        if parts.len() != 3 || parts[0] != "dyadic" {
            return Err(bad());
        }
        let lo = parts[1].parse().map_err(|_| bad())?;
        let hi = parts[2].parse().map_err(|_| bad())?;
        if lo > hi || hi > 62 {
            return Err(Error::Invalid(format!("grid exponents {lo}..{hi} out of order or above 62")));
        }
        Ok(GridSpec { lo, hi })
    }

    pub fn points(&self) -> Vec<u64> {
        exact::dyadic_grid(self.lo, self.hi)
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "dyadic:{}:{}", self.lo, self.hi)
    }
}

/// Where the sequence c_n comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CSource {
    /// c_n = 1 / log2 log2 (n + 4).
    LogLog,
    /// Whitespace, comma or JSON-array separated reals; `#` starts a comment.
    File { path: String },
    Values { values: Vec<f64> },
}

impl CSource {
    pub fn default_value(n: usize) -> f64 {
        1.0 / ((n as f64 + 4.0).log2()).log2()
    }

    /// c_1..c_len. Files shorter than `len` are extended with their last value.
    pub fn values(&self, len: usize) -> Result<Vec<f64>> {
        let mut v = match self {
            CSource::LogLog => return Ok((1..=len).map(Self::default_value).collect()),
            CSource::File { path } => parse_c(&std::fs::read_to_string(path)?)?,
            CSource::Values { values } => values.clone(),
        };
        let Some(&last) = v.last() else {
            return Err(Error::Invalid("c sequence is empty".into()));
        };
        v.resize(len.max(v.len()), last);
        params::check_c(&v)?;
        Ok(v)
    }
}

/// Parse a c file.
pub fn parse_c(text: &str) -> Result<Vec<f64>> {
    let t = text.trim_start();
    if t.starts_with('[') {
        return Ok(serde_json::from_str(t)?);
    }
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Parse(format!("`{s}` is not a real number"))))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub k_max: usize,
    pub a_mode: WeightMode,
    /// Explicit a_1..a_K for the custom weight mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    pub c: CSource,
    pub layout: Layout,
    pub grid: GridSpec,
    pub samples: usize,
    pub seed: u64,
    /// Length of the standalone schedule table (theorem2).
    pub schedule_len: usize,
    /// Exponent q of the log^q rate (spectral).
    pub q: f64,
    pub spectral_n_max: usize,
    pub spectral_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toy: Option<ToySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn preset(scenario: Scenario) -> Self {
        let (k_max, a_mode, grid) = match scenario {
            Scenario::Theorem1 => (19, WeightMode::ConstOne, GridSpec { lo: 4, hi: 19 }),
            Scenario::Theorem2 => (20, WeightMode::Theorem2, GridSpec { lo: 4, hi: 16 }),
            Scenario::Theorem3 => (20, WeightMode::InvLog, GridSpec { lo: 8, hi: 20 }),
            Scenario::Conditions => (20, WeightMode::ConstOne, GridSpec { lo: 4, hi: 16 }),
            Scenario::Spectral => (20, WeightMode::ConstOne, GridSpec { lo: 0, hi: 14 }),
            Scenario::Custom => (20, WeightMode::ConstOne, GridSpec { lo: 4, hi: 16 }),
        };
        let layout = match scenario {
            Scenario::Custom => Layout::Ends { ends: vec![] },
            _ => Layout::Ends { ends: vec![5, k_max] },
        };
        ExperimentConfig {
            scenario,
            k_max,
            a_mode,
            weights: None,
            c: CSource::LogLog,
            layout,
            grid,
            samples: 100_000,
            seed: 1,
            schedule_len: 1_000_000,
            q: 1.5,
            spectral_n_max: 1 << 14,
            spectral_dim: 32,
            toy: None,
            out: None,
        }
    }

    /// Build the sequence parameters described by the config.
    pub fn sequence_params(&self) -> Result<SequenceParams> {
        let weights = match self.a_mode {
            WeightMode::Custom => {
                let v = self
                    .weights
                    .clone()
                    .ok_or_else(|| Error::Invalid("custom weight mode needs explicit weights".into()))?;
                if v.len() != self.k_max {
                    return Err(Error::Invalid(format!("{} weights given for K_max = {}", v.len(), self.k_max)));
                }
                WeightSchedule::custom(v)?
            }
            WeightMode::Theorem2 => build_weights(WeightMode::Theorem2, self.k_max, Some(&self.c.values(self.k_max)?))?,
            mode => build_weights(mode, self.k_max, None)?,
        };
        params::build_dyadic_lengths(self.k_max)?;
        SequenceParams::new(weights, self.layout.clone())
    }

    pub fn toy(&self) -> Result<SpectralToy> {
        match &self.toy {
            Some(spec) => SpectralToy::from_spec(spec),
            None => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(self.seed);
                spectral::random_circulant(self.spectral_dim, &mut rng)
            }
        }
    }

    /// Check the config without running anything expensive.
    pub fn validate(&self) -> Result<()> {
        if self.scenario == Scenario::Spectral {
            self.toy()?;
            if self.spectral_n_max < 2 || !(self.q > 1.0) {
                return Err(Error::Invalid("spectral runs need n_max >= 2 and q > 1".into()));
            }
            return Ok(());
        }
        let p = self.sequence_params()?;
        if p.complete_blocks().next().is_none() {
            return Err(Error::Invalid("no complete block".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Exit status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Success,
    Validation,
    Budget,
    Inconclusive,
    Failure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Failure => 1,
            Status::Validation => 2,
            Status::Budget => 3,
            Status::Inconclusive => 4,
        }
    }

    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::Budget { .. } | Error::Truncation { .. } => Status::Budget,
            Error::Io(_) => Status::Failure,
            _ => Status::Validation,
        }
    }
}

/// Machine-readable error document.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": Status::of_error(e).code(),
    })
    .to_string()
}

#[derive(Clone, Debug)]
pub struct Artifact {
    pub name: String,
    /// File body without the provenance header.
    pub body: String,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: Status,
    pub config: ExperimentConfig,
    pub artifacts: Vec<Artifact>,
    pub dichotomy: Option<DichotomyReport>,
    /// Error document when the run failed.
    pub error: Option<String>,
}

impl Outcome {
    /// Header lines prepended to every CSV artifact.
    pub fn header(&self, timestamp: Option<u64>) -> Result<String> {
        let mut h = String::new();
        if let Some(t) = timestamp {
            let _ = writeln!(h, "# generated_unix: {t}");
        }
        let _ = writeln!(h, "# config: {}", self.config.to_json()?);
        Ok(h)
    }

    /// Write every artifact into `dir`.
    pub fn write(&self, dir: &Path, timestamp: Option<u64>) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let header = self.header(timestamp)?;
        let mut paths = vec![];
        for a in &self.artifacts {
            let path = dir.join(&a.name);
            let text = if a.name.ends_with(".csv") { format!("{header}{}", a.body) } else { a.body.clone() };
            std::fs::write(&path, text)?;
            paths.push(path);
        }
        Ok(paths)
    }
}

fn artifact(name: &str, body: String) -> Artifact {
    Artifact { name: name.to_string(), body }
}

fn json_doc<T: Serialize>(config: &ExperimentConfig, result: &T) -> Result<String> {
    let v = serde_json::json!({ "config": config, "result": result });
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn with_dichotomy(cfg: &ExperimentConfig, p: &SequenceParams, arts: &mut Vec<Artifact>) -> Result<DichotomyReport> {
    let report = laws::dichotomy_report(p, cfg.samples, cfg.seed)?;
    arts.push(artifact("dichotomy.csv", report.to_csv()));
    arts.push(artifact("dichotomy.json", json_doc(cfg, &report)?));
    Ok(report)
}

/// Partial sums of a_k c_k / k and a_k / k at every decade and at the end.
pub fn schedule_partial_sums(values: &[f64], c: &[f64]) -> Vec<(usize, f64, f64)> {
    let mut rows = vec![];
    let (mut sc, mut s) = (Neumaier::new(), Neumaier::new());
    let mut next = 10usize;
    for (i, (a, ck)) in values.iter().zip(c).enumerate() {
        let k = i + 1;
        sc.add(a * ck / k as f64);
        s.add(a / k as f64);
        if k == next || k == values.len() {
            rows.push((k, sc.value(), s.value()));
            if k == next {
                next *= 10;
            }
        }
    }
    rows
}

fn run_inner(cfg: &ExperimentConfig) -> Result<(Vec<Artifact>, Option<DichotomyReport>)> {
    cfg.validate()?;
    let mut arts = vec![];
    let grid = cfg.grid.points();
    if cfg.scenario == Scenario::Spectral {
        let toy = cfg.toy()?;
        let report = spectral::evaluate_conditions(&toy, cfg.spectral_n_max, cfg.q)?;
        let n = cfg.spectral_n_max / 2;
        let checks = serde_json::json!({
            "h_norm": report.h_norm,
            "h_max": report.h_max,
            "sqrt_error_m1e4": spectral::sqrt_apply(&toy, 10_000).error,
            "rn_identity": spectral::rn_identity_check(&toy, n.max(2)),
            "rn_telescoping": spectral::rn_telescoping_check(&toy, n.max(3)),
        });
        arts.push(artifact("spectral.csv", report.to_csv()));
        arts.push(artifact("spectral.json", json_doc(cfg, &checks)?));
        return Ok((arts, None));
    }
    let p = cfg.sequence_params()?;
    arts.push(artifact("params.json", p.to_json()? + "\n"));
    arts.push(artifact("diagnostics.json", json_doc(cfg, &params::validate(&p))?));
    let mut dich = None;
    match cfg.scenario {
        Scenario::Theorem1 => {
            let tail = exact::check_condition(&p, ConditionId::Series2Prime, &[4, 16, 64, 256, 1024], None)?;
            arts.push(artifact("series_tail.csv", exact::condition_csv(&[tail])));
            arts.push(artifact("engine.csv", exact::engine_csv(&exact::engine_table(&p, &grid))));
            dich = Some(with_dichotomy(cfg, &p, &mut arts)?);
        }
        Scenario::Theorem2 => {
            let c = cfg.c.values(cfg.schedule_len)?;
            let s = theorem2_schedule(&c, cfg.schedule_len)?;
            let mut body = String::from("k,sum_a_c_over_k,sum_a_over_k\n");
            for (k, sc, s) in schedule_partial_sums(&s.values, &c) {
                let _ = writeln!(body, "{k},{},{}", fmt17(sc), fmt17(s));
            }
            arts.push(artifact("schedule_partial_sums.csv", body));
            let bp = serde_json::json!({ "breakpoints": s.breakpoints, "truncated": s.truncated });
            arts.push(artifact("schedule.json", json_doc(cfg, &bp)?));
            dich = Some(with_dichotomy(cfg, &p, &mut arts)?);
        }
        Scenario::Theorem3 => {
            let rate = exact::check_condition(&p, ConditionId::Rate5, &grid, None)?;
            arts.push(artifact("rate5.csv", exact::condition_csv(&[rate])));
            dich = Some(with_dichotomy(cfg, &p, &mut arts)?);
        }
        Scenario::Conditions => {
            let c = cfg.c.values(1)?;
            let cn = |n: u64| match &cfg.c {
                CSource::LogLog => CSource::default_value(n as usize),
                _ => c.get(n as usize - 1).copied().unwrap_or(c[c.len() - 1]),
            };
            let reports = ConditionId::ALL
                .iter()
                .map(|&id| exact::check_condition(&p, id, &grid, Some(&cn)))
                .collect::<Result<Vec<_>>>()?;
            arts.push(artifact("conditions.csv", exact::condition_csv(&reports)));
            arts.push(artifact("engine.csv", exact::engine_csv(&exact::engine_table(&p, &grid))));
        }
        Scenario::Custom => {
            arts.push(artifact("engine.csv", exact::engine_csv(&exact::engine_table(&p, &grid))));
            if cfg.samples > 0 {
                dich = Some(with_dichotomy(cfg, &p, &mut arts)?);
            }
        }
        Scenario::Spectral => unreachable!(),
    }
    Ok((arts, dich))
}

/// Run a scenario. Errors become a status plus an `error.json` artifact.
pub fn run(cfg: &ExperimentConfig) -> Outcome {
    match run_inner(cfg) {
        Ok((artifacts, dichotomy)) => {
            let status = match &dichotomy {
                Some(d) if d.rows.iter().any(|r| r.over_budget) => Status::Budget,
                Some(d) if d.verdict == DichotomyVerdict::Inconclusive => Status::Inconclusive,
                _ => Status::Success,
            };
            Outcome {
                status,
                config: cfg.clone(),
                artifacts,
                dichotomy,
                error: None,
            }
        }
        Err(e) => Outcome {
            status: Status::of_error(&e),
            config: cfg.clone(),
            artifacts: vec![artifact("error.json", error_json(&e) + "\n")],
            dichotomy: None,
            error: Some(error_json(&e)),
        },
    }
}
