use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cltlab::experiment::{error_json, CSource, ExperimentConfig, GridSpec, Scenario, Status};
use cltlab::params::{self, Layout, MassTarget, WeightMode};
use cltlab::spectral::ToySpec;
use cltlab::Error;

#[derive(Parser)]
#[command(name = "cltlab", version, about = "Exact moments, simulation and limit laws for a process without a CLT")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Constant weights: tail table, engine table, dichotomy.
    Theorem1(Opts),
    /// Schedule from a c sequence: partial sums, dichotomy.
    Theorem2(Opts),
    /// Inverse-log weights: rate table, dichotomy.
    Theorem3(Opts),
    /// All condition statistics on the grid.
    Conditions(Opts),
    /// Spectral toy report.
    Spectral(Opts),
    /// User-defined layout.
    Custom(Opts),
    /// Any scenario by name.
    Run {
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        opts: Opts,
    },
    /// Check a configuration and print diagnostics without running it.
    Validate {
        #[arg(long, default_value = "theorem1")]
        scenario: String,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args, Clone, Default)]
struct Opts {
    /// Full config as JSON; other flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kmax: Option<usize>,
    /// const, invlog, theorem2 or custom.
    #[arg(long)]
    a_mode: Option<String>,
    /// Comma-separated a_1..a_K for --a-mode custom.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long)]
    c_file: Option<PathBuf>,
    /// Geometric mass targets scale·rho^l.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.5)]
    tolerance: f64,
    /// Comma-separated last index of every complete block.
    #[arg(long, value_delimiter = ',')]
    ends: Option<Vec<usize>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// dyadic:<lo>:<hi>
    #[arg(long)]
    grid: Option<String>,
    /// Spectral toy JSON.
    #[arg(long)]
    toy: Option<PathBuf>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_timestamp: bool,
}

fn build(scenario: Scenario, o: &Opts) -> cltlab::Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::preset(scenario),
    };
    cfg.scenario = scenario;
    if let Some(k) = o.kmax {
        if cfg.layout == (Layout::Ends { ends: vec![5, cfg.k_max] }) {
            cfg.layout = Layout::Ends { ends: vec![5, k] };
        }
        cfg.k_max = k;
    }
    if let Some(m) = &o.a_mode {
        cfg.a_mode = WeightMode::parse(m)?;
    }
    if let Some(w) = &o.weights {
        cfg.weights = Some(w.clone());
        cfg.a_mode = WeightMode::Custom;
    }
    if let Some(p) = &o.c_file {
        cfg.c = CSource::File { path: p.display().to_string() };
    }
    if let Some(rho) = o.rho {
        cfg.layout = Layout::Targets {
            target: MassTarget::Geometric { rho, scale: o.scale },
            tolerance: o.tolerance,
        };
    }
    if let Some(e) = &o.ends {
        cfg.layout = Layout::Ends { ends: e.clone() };
    }
    if let Some(n) = o.samples {
        cfg.samples = n;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(g) = &o.grid {
        cfg.grid = GridSpec::parse(g)?;
    }
    if let Some(t) = &o.toy {
        cfg.toy = Some(serde_json::from_str::<ToySpec>(&std::fs::read_to_string(t)?)?);
    }
    if let Some(n) = o.n_max {
        cfg.spectral_n_max = n;
    }
    if let Some(q) = o.q {
        cfg.q = q;
    }
    cfg.out = o.out.as_ref().map(|p| p.display().to_string());
    Ok(cfg)
}

fn fail(e: &Error) -> ExitCode {
    println!("{}", error_json(e));
    ExitCode::from(Status::of_error(e).code() as u8)
}

fn validate(scenario: &str, o: &Opts) -> cltlab::Result<String> {
    let cfg = build(Scenario::parse(scenario)?, o)?;
    cfg.validate()?;
    if cfg.scenario == Scenario::Spectral {
        return Ok(serde_json::to_string_pretty(&cfg)?);
    }
    Ok(serde_json::to_string_pretty(&params::validate(&cfg.sequence_params()?))?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (scenario, opts) = match cli.command {
        Command::Theorem1(o) => (Scenario::Theorem1, o),
        Command::Theorem2(o) => (Scenario::Theorem2, o),
        Command::Theorem3(o) => (Scenario::Theorem3, o),
        Command::Conditions(o) => (Scenario::Conditions, o),
        Command::Spectral(o) => (Scenario::Spectral, o),
        Command::Custom(o) => (Scenario::Custom, o),
        Command::Run { scenario, opts } => match Scenario::parse(&scenario) {
            Ok(s) => (s, opts),
            Err(e) => return fail(&e),
        },
        Command::Validate { scenario, opts } => {
            return match validate(&scenario, &opts) {
                Ok(text) => {
                    println!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            };
        }
    };
    let cfg = match build(scenario, &opts) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let outcome = cltlab::experiment::run(&cfg);
    let stamp = (!opts.no_timestamp).then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    match &opts.out {
        Some(dir) => match outcome.write(dir, stamp) {
            Ok(paths) => {
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
            }
            Err(e) => return fail(&e),
        },
        None if outcome.error.is_some() => println!("{}", outcome.error.as_deref().unwrap_or_default()),
        None => {
            let header = outcome.header(stamp).unwrap_or_default();
            for a in &outcome.artifacts {
                println!("## {}", a.name);
                if a.name.ends_with(".csv") {
                    print!("{header}");
                }
                print!("{}", a.body);
            }
        }
    }
    if let Some(d) = &outcome.dichotomy {
        eprintln!("verdict: {} (margin {:.4})", d.verdict.as_str(), d.margin);
    }
    ExitCode::from(outcome.status.code() as u8)
}
