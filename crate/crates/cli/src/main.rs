//! `riskcap`: capital requirements from the command line.
//!
//! Exit codes: 0 when the report was computed, 2 on input errors, 3 when
//! `oracle-check` finds a disagreement.

mod acceptance_args;
mod error;
mod model;
mod oracle_check;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use riskcap::capital::SolverOptions;
use riskcap::diagnostics::{
    conic_finiteness, nonatomic_refinement_demo, semicontinuity_probe, tvar_finiteness, var_finiteness,
    var_global_continuity, var_pointwise_continuity, ContinuityReport, ContinuityScope, FinitenessReport,
};
use riskcap::optimality::{dominance_refute, equality_check, no_leverage_check, AssetPair};
use riskcap::quantile::{tvar, var};
use riskcap::{required_capital_with, Confidence, RiskError};

use acceptance_args::{AcceptanceArgs, Kind};
use error::CliError;
use model::Model;

#[derive(Debug, Parser)]
#[command(name = "riskcap", version, about = "Capital requirements under general acceptance sets")]
struct Cli {
    /// Model file (JSON, or CSV when the extension is .csv).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Overrides the solver's relative tolerance, or the agreement
    /// tolerance for `oracle-check`.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Seed for randomized searches.
    #[arg(long, global = true, env = "RISKCAP_SEED", default_value_t = 42)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Value at risk of a named position.
    Var(QuantileArgs),
    /// Tail value at risk of a named position.
    Tvar(QuantileArgs),
    /// Capital requirement of a position for an acceptance set and asset.
    Require(RequireArgs),
    /// Finiteness and continuity of the capital requirement.
    Diagnose(DiagnoseArgs),
    /// Whether two eligible assets with equal prices give equal requirements.
    Compare(CompareArgs),
    /// Cross-check the solvers against the brute-force oracle.
    OracleCheck(oracle_check::OracleArgs),
    /// Print the model in canonical JSON form.
    Convert,
    /// Demonstrations.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
}

#[derive(Debug, Args)]
struct QuantileArgs {
    #[arg(long)]
    position: String,
    /// Falls back to the model's `defaults.alpha`.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Args)]
struct RequireArgs {
    #[command(flatten)]
    acceptance: AcceptanceArgs,
    #[arg(long)]
    asset: String,
    #[arg(long)]
    position: String,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    acceptance: AcceptanceArgs,
    #[arg(long)]
    asset: String,
    /// Pointwise continuity at this position; global when omitted.
    #[arg(long)]
    position: Option<String>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    acceptance: AcceptanceArgs,
    #[arg(long)]
    asset_a: String,
    #[arg(long)]
    asset_b: String,
    /// Random draws per search.
    #[arg(long, default_value_t = 1000)]
    budget: usize,
}

#[derive(Debug, Subcommand)]
enum Demo {
    /// Gap behaviour of VaR requirements as a uniform model is refined.
    Nonatomic {
        #[arg(long, default_value_t = 0.125)]
        alpha: f64,
        #[arg(long, default_value_t = 4)]
        min_level: u32,
        #[arg(long, default_value_t = 12)]
        max_level: u32,
    },
}

enum Failure {
    Input(CliError),
    Disagreement(Value),
}

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        Failure::Input(e)
    }
}

impl From<RiskError> for Failure {
    fn from(e: RiskError) -> Self {
        Failure::Input(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let render = |v: &Value| match cli.format {
        Format::Json => output::json(v),
        Format::Table => output::table(v),
    };
    if let Command::Convert = cli.command {
        return match load(&cli) {
            Ok(model) => {
                print!("{}", model.file.to_canonical_json());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error[{}]: {e}", error_kind(&e));
                ExitCode::from(2)
            }
        };
    }
    match run(&cli) {
        Ok(report) => {
            print!("{}", render(&report));
            ExitCode::SUCCESS
        }
        Err(Failure::Disagreement(report)) => {
            print!("{}", render(&report));
            eprintln!("error: solver and oracle disagree");
            ExitCode::from(3)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error[{}]: {e}", error_kind(&e));
            ExitCode::from(2)
        }
    }
}

fn error_kind(e: &CliError) -> String {
    match e {
        CliError::Risk(r) => {
            let debug = format!("{r:?}");
            debug
                .split(|c: char| !c.is_alphanumeric())
                .next()
                .unwrap_or("Risk")
                .to_string()
        }
        other => other.kind().to_string(),
    }
}

fn load(cli: &Cli) -> Result<Model, CliError> {
    let path = cli
        .model
        .as_ref()
        .ok_or_else(|| CliError::Usage("--model is required for this command".into()))?;
    Model::load(path)
}

fn solver_options(cli: &Cli) -> Result<SolverOptions, CliError> {
    let mut opts = SolverOptions::default();
    if let Some(t) = cli.tolerance {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Usage(format!("--tolerance must lie in (0, 1), got {t}")));
        }
        opts.rel_tol = t;
    }
    Ok(opts)
}

fn model_summary(model: &Model) -> Value {
    json!({
        "states": model.space.len(),
        "renormalization": model.renormalization,
    })
}

fn run(cli: &Cli) -> Result<Value, Failure> {
    Ok(match &cli.command {
        Command::Var(args) | Command::Tvar(args) => {
            let model = load(cli)?;
            let x = model.position(&args.position)?;
            let alpha = args
                .alpha
                .or(model.file.defaults.alpha)
                .ok_or_else(|| CliError::Usage("--alpha is required (no default in the model)".into()))?;
            let (name, value) = match cli.command {
                Command::Var(_) => ("var", var(&model.space, &x, alpha)?),
                _ => ("tvar", tvar(&model.space, &x, alpha)?),
            };
            json!({
                "command": name,
                "model": model_summary(&model),
                "position": args.position,
                "alpha": alpha,
                "value": value,
            })
        }
        Command::Require(args) => {
            let model = load(cli)?;
            let a = args.acceptance.resolve(&model, cli.seed)?;
            let s = model.asset(&args.asset)?;
            let x = model.position(&args.position)?;
            let r = required_capital_with(&model.space, &a.spec, &s, &x, &solver_options(cli)?)?;
            json!({
                "command": "require",
                "model": model_summary(&model),
                "acceptance": a.describe(&args.acceptance),
                "asset": args.asset,
                "position": args.position,
                "amount": r.amount.value,
                "attained": r.amount.attained,
                "confidence": r.amount.confidence,
                "method": r.method,
                "acceptable_position": r.acceptable_position,
                "warnings": r.warnings,
            })
        }
        Command::Diagnose(args) => diagnose(cli, args)?,
        Command::Compare(args) => {
            let model = load(cli)?;
            let a = args.acceptance.resolve(&model, cli.seed)?;
            let pair = AssetPair::new(&model.space, model.asset(&args.asset_a)?, model.asset(&args.asset_b)?)?;
            let equality = equality_check(&model.space, &a.spec, &a.spec, &pair, args.budget, cli.seed)?;
            let dominance = dominance_refute(&model.space, &a.spec, &pair, args.budget, cli.seed)?;
            let (no_leverage, note) = match no_leverage_check(&model.space, &a.spec, &pair, args.budget, cli.seed) {
                Ok(v) => (Some(v), None),
                Err(RiskError::NotFinite) => (None, Some("requirement of the zero position is not finite")),
                Err(e) => return Err(e.into()),
            };
            json!({
                "command": "compare",
                "model": model_summary(&model),
                "acceptance": a.describe(&args.acceptance),
                "asset_a": args.asset_a,
                "asset_b": args.asset_b,
                "budget": args.budget,
                "seed": cli.seed,
                "equality": equality,
                "dominance": dominance,
                "no_leverage": no_leverage,
                "notes": note.into_iter().collect::<Vec<_>>(),
            })
        }
        Command::OracleCheck(args) => {
            let model = cli.model.as_ref().map(|_| load(cli)).transpose()?;
            let tolerance = cli.tolerance.unwrap_or(1e-6);
            let report = oracle_check::run(args, model.as_ref(), tolerance, cli.seed)?;
            if report.disagreements > 0 {
                return Err(Failure::Disagreement(serde_json::to_value(report).expect("report serializes")));
            }
            serde_json::to_value(report).expect("report serializes")
        }
        Command::Convert => unreachable!("handled before dispatch"),
        Command::Demo {
            which: Demo::Nonatomic {
                alpha,
                min_level,
                max_level,
            },
        } => {
            if min_level > max_level || *max_level > 20 {
                return Err(CliError::Usage("levels must satisfy min <= max <= 20".into()).into());
            }
            let rows = nonatomic_refinement_demo(*alpha, *min_level..=*max_level)?;
            json!({
                "command": "demo-nonatomic",
                "alpha": alpha,
                "rows": rows,
                "note": "uniform law on [0,1) discretized into 2^k states; payoff w touches zero, payoff 1/2 + w does not. \
                         A finite discretization is never nonatomic, so this is a qualitative picture.",
            })
        }
    })
}

fn diagnose(cli: &Cli, args: &DiagnoseArgs) -> Result<Value, Failure> {
    let model = load(cli)?;
    let a = args.acceptance.resolve(&model, cli.seed)?;
    let s = model.asset(&args.asset)?;
    let space = &model.space;
    let opts = solver_options(cli)?;
    let mut notes: Vec<String> = Vec::new();

    let finiteness: Option<FinitenessReport> = match a.kind {
        Kind::Var => Some(var_finiteness(space, &s, a.alpha.expect("var has alpha"))?),
        Kind::Tvar => Some(tvar_finiteness(space, &s, a.alpha.expect("tvar has alpha"))?),
        Kind::Expectation if !a.spec.is_conic() => {
            notes.push("expectation sets with a nonzero floor are finite whenever E[S_T] > 0".into());
            let mean = space.expectation(s.payoff());
            Some(FinitenessReport {
                never_pos_inf: mean > 0.0,
                never_neg_inf: mean > 0.0,
                finite_everywhere: mean > 0.0,
                witnesses: Vec::new(),
                rule: "expectation: finite iff E[S_T] > 0".into(),
                lipschitz_bound: (mean > 0.0).then(|| s.price() / mean),
            })
        }
        _ if a.spec.is_conic() => Some(conic_finiteness(&a.spec, space, &s)?),
        _ => {
            notes.push("no finiteness characterization for non-conic custom sets".into());
            None
        }
    };

    let continuity: Option<ContinuityReport> = match (&args.position, a.kind) {
        (Some(name), kind) => {
            let x = model.position(name)?;
            let result = if kind == Kind::Var {
                var_pointwise_continuity(space, &s, a.alpha.expect("var has alpha"), &x)
            } else {
                semicontinuity_probe(space, &a.spec, &s, &x, 1 << 20, &opts)
            };
            match result {
                Ok(r) => Some(r),
                Err(RiskError::NotFinite) => {
                    notes.push(format!("requirement at `{name}` is not finite"));
                    None
                }
                Err(e) => return Err(e.into()),
            }
        }
        (None, Kind::Var) => match var_global_continuity(space, &s, a.alpha.expect("var has alpha")) {
            Ok(r) => Some(r),
            Err(RiskError::NotFinite) => {
                notes.push("requirement is not finite everywhere".into());
                None
            }
            Err(e @ RiskError::TooManyStates { .. }) => {
                notes.push(e.to_string());
                None
            }
            Err(e) => return Err(e.into()),
        },
        (None, Kind::Tvar | Kind::Expectation) => match finiteness.as_ref().and_then(|f| f.lipschitz_bound) {
            Some(bound) => Some(ContinuityReport {
                scope: ContinuityScope::Global,
                continuous: true,
                lsc: true,
                usc: true,
                witness: None,
                lipschitz_bound: Some(bound),
                confidence: Confidence::Exact,
            }),
            None => {
                notes.push("requirement is not finite everywhere".into());
                None
            }
        },
        (None, _) => {
            notes.push("global continuity is decided for var, tvar and expectation sets; pass --position".into());
            None
        }
    };

    Ok(json!({
        "command": "diagnose",
        "model": model_summary(&model),
        "acceptance": a.describe(&args.acceptance),
        "asset": args.asset,
        "position": args.position,
        "finiteness": finiteness,
        "continuity": continuity,
        "notes": notes,
    }))
}
