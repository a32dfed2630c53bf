use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use irs_chanest::analysis::{predictions, theorem_predicates, AsymptoticInputs, Predictions, TheoremReport};
use irs_chanest::channel::{distance, path_loss, SharingRegime};
use irs_chanest::harness::{emit, figure_preset, run_experiment, ExperimentSpec, PRESET_NAMES};
use irs_chanest::schedule::Regime;
use irs_chanest::validation::{run_suite, Suite};

#[derive(Parser)]
#[command(name = "irs-chanest", version, about = "Channel estimation experiments for IRS-aided multiuser uplinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write CSV (or JSON for a .json path).
    Run(RunArgs),
    /// Evaluate the MSE expressions for every sweep point without simulating.
    Predict(PredictArgs),
    /// Run one of the built-in property suites.
    Validate {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct Source {
    /// Figure preset.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Result<ExperimentSpec> {
        match (&self.preset, &self.config) {
            (Some(name), None) => Ok(figure_preset(name)?),
            (None, Some(path)) => ExperimentSpec::from_path(path).with_context(|| format!("reading {}", path.display())),
            _ => bail!("give --preset <{}> or --config <path>", PRESET_NAMES.join("|")),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Phase-II layout when M < N.
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    #[arg(long)]
    no_predictions: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum)]
    regime: Option<RegimeArg>,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Shared,
    Orthogonal,
}

impl From<RegimeArg> for SharingRegime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Shared => SharingRegime::Shared,
            RegimeArg::Orthogonal => SharingRegime::Orthogonal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Lemmas,
    Noiseless,
    Mse,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Lemmas => Suite::Lemmas,
            SuiteArg::Noiseless => Suite::Noiseless,
            SuiteArg::Mse => Suite::Mse,
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut spec = args.source.load()?;
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(r) = args.regime {
        spec.regime = r.into();
    }
    if args.no_predictions {
        spec.emit_predictions = false;
    }
    let out = args
        .out
        .or_else(|| spec.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.name)));
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let rows = run_experiment(&spec)?;
    let excluded: usize = rows.iter().map(|r| r.excluded).sum();
    emit(&rows, &out).with_context(|| format!("writing {}", out.display()))?;
    log::info!("wrote {} rows to {} ({excluded} trials excluded)", rows.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct PredictionRow {
    sweep: f64,
    strategy: &'static str,
    regime: Regime,
    pred: Predictions,
    comparison: Option<TheoremReport>,
}

fn predict(args: PredictArgs) -> Result<()> {
    let mut spec = args.source.load()?;
    if let Some(r) = args.regime {
        spec.regime = r.into();
    }
    let mut rows = Vec::new();
    for (i, &sweep) in spec.sweep.values.iter().enumerate() {
        let cfg = spec.point_config(i)?;
        // Loss ratio to the typical user stands in for E|mu|^2, which has
        // no finite value under Rayleigh user-IRS links.
        let users = cfg.users();
        let loss_ui = |u: usize| path_loss(distance(&users[u], &cfg.irs_ref), cfg.alpha_ui, &cfg);
        let l1 = loss_ui(0)?;
        let mu_sq = (1..cfg.k).map(|u| Ok(vec![loss_ui(u)? / l1; cfg.n()])).collect::<Result<Vec<_>>>()?;
        let inputs = AsymptoticInputs::from_config(&cfg, mu_sq)?;
        let regime = Regime::select(cfg.m, cfg.n(), cfg.mltn_regime);
        for &strategy in &spec.strategies {
            let sched_regime = match strategy {
                irs_chanest::schedule::Strategy::TwoPhase => regime,
                irs_chanest::schedule::Strategy::ThreePhase => Regime::select(cfg.m, cfg.n(), SharingRegime::Shared),
            };
            rows.push(PredictionRow {
                sweep,
                strategy: strategy.label(),
                regime: sched_regime,
                pred: predictions(&inputs, strategy, sched_regime),
                comparison: theorem_predicates(&inputs).ok(),
            });
        }
    }
    let text = serde_json::to_string_pretty(&rows)?;
    match args.out {
        Some(path) => std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn validate(suite: Suite, seed: u64) -> Result<bool> {
    let checks = run_suite(suite, seed)?;
    let mut ok = true;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {} [{} cases, worst {:.3e}, limit {:.1e}]", c.name, c.cases, c.worst, c.tolerance);
        ok &= c.passed;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args).map(|_| true),
        Command::Predict(args) => predict(args).map(|_| true),
        Command::Validate { suite, seed } => validate(suite.into(), seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
