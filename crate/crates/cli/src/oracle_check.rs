//! Solver-versus-oracle sweep behind `riskcap oracle-check`.

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use riskcap::oracle::{oracle_capital, GridSpec};
use riskcap::{required_capital, AcceptanceSpec, Amount, Position, RiskError, ScenarioSpace, TradedAsset};

use crate::error::CliError;
use crate::model::Model;

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Random instances to check when no model is given.
    #[arg(long, default_value_t = 200)]
    instances: usize,
    /// Level used for the model sweep; falls back to `defaults.alpha`.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = -1000.0, allow_hyphen_values = true)]
    grid_lo: f64,
    #[arg(long, default_value_t = 1000.0, allow_hyphen_values = true)]
    grid_hi: f64,
    #[arg(long, default_value_t = 1.0)]
    grid_step: f64,
    #[arg(long, default_value_t = 7)]
    refine_rounds: u32,
}

#[derive(Debug, Serialize)]
pub struct Disagreement {
    pub acceptance: String,
    pub position: Position,
    pub solver: Amount,
    pub oracle: Amount,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub command: &'static str,
    pub source: &'static str,
    pub seed: u64,
    pub tolerance: f64,
    pub grid: [f64; 3],
    pub checked: usize,
    /// Cases the grid cannot decide, for instance a requirement below its
    /// lower edge.
    pub undecided: usize,
    pub disagreements: usize,
    pub max_deviation: f64,
    pub failures: Vec<Disagreement>,
}

struct Case {
    space: ScenarioSpace,
    asset: TradedAsset,
    acceptance: AcceptanceSpec,
    position: Position,
}

fn agree(a: Amount, b: Amount, tol: f64) -> bool {
    match (a, b) {
        (Amount::Finite(a), Amount::Finite(b)) => (a - b).abs() <= tol,
        _ => a == b,
    }
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let n = rng.gen_range(1..=8);
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=20) as f64).collect();
    let total: f64 = weights.iter().sum();
    let labels: Vec<String> = (1..=n).map(|i| format!("w{i}")).collect();
    let space = ScenarioSpace::new(labels, weights.iter().map(|w| w / total).collect()).expect("valid weights");
    let mut payoff: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.1..2.0) })
        .collect();
    let k = rng.gen_range(0..n);
    payoff[k] = payoff[k].max(0.1);
    let asset = TradedAsset::new(&space, rng.gen_range(0.5..1.5), Position::new(payoff).expect("finite"))
        .expect("valid asset");
    let alpha = rng.gen_range(0.05..0.95);
    let acceptance = if rng.gen_bool(0.5) {
        AcceptanceSpec::var(alpha)
    } else {
        AcceptanceSpec::tvar(alpha)
    }
    .expect("alpha in range");
    let position = Position::new(
        (0..n)
            .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-5i32..=5) as f64 })
            .collect(),
    )
    .expect("finite");
    Case {
        space,
        asset,
        acceptance,
        position,
    }
}

fn model_cases(model: &Model, alpha: f64) -> Result<Vec<Case>, CliError> {
    let mut cases = Vec::new();
    for asset_name in model.file.assets.keys() {
        let asset = model.asset(asset_name)?;
        for position_name in model.file.positions.keys() {
            for acceptance in [AcceptanceSpec::var(alpha)?, AcceptanceSpec::tvar(alpha)?] {
                cases.push(Case {
                    space: model.space.clone(),
                    asset: asset.clone(),
                    acceptance,
                    position: model.position(position_name)?,
                });
            }
        }
    }
    Ok(cases)
}

pub fn run(args: &OracleArgs, model: Option<&Model>, tolerance: f64, seed: u64) -> Result<OracleReport, CliError> {
    let grid = GridSpec::new(args.grid_lo, args.grid_hi, args.grid_step, args.refine_rounds)?;
    if grid.final_step() > tolerance {
        return Err(CliError::Usage(format!(
            "grid resolution {} is coarser than the tolerance {tolerance}",
            grid.final_step()
        )));
    }
    let (source, cases) = match model {
        Some(m) => {
            let alpha = args
                .alpha
                .or(m.file.defaults.alpha)
                .ok_or_else(|| CliError::Usage("--alpha is required (no default in the model)".into()))?;
            ("model", model_cases(m, alpha)?)
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ("random", (0..args.instances).map(|_| random_case(&mut rng)).collect())
        }
    };

    let mut report = OracleReport {
        command: "oracle-check",
        source,
        seed,
        tolerance,
        grid: [args.grid_lo, args.grid_hi, grid.final_step()],
        checked: 0,
        undecided: 0,
        disagreements: 0,
        max_deviation: 0.0,
        failures: Vec::new(),
    };
    for case in cases {
        let solver = match required_capital(&case.space, &case.acceptance, &case.asset, &case.position) {
            Ok(r) => r.amount.value,
            Err(RiskError::DegenerateAsset) => {
                report.undecided += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let oracle = match oracle_capital(&case.acceptance, &case.space, &case.asset, &case.position, &grid) {
            Ok(r) => r.value,
            Err(RiskError::DegenerateGrid(_)) => {
                report.undecided += 1;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        // A finite answer beyond the grid shows up as +inf in the oracle.
        if solver.finite().is_some_and(|v| v > args.grid_hi) {
            report.undecided += 1;
            continue;
        }
        report.checked += 1;
        if solver.is_finite() && oracle.is_finite() {
            report.max_deviation = report.max_deviation.max(solver.distance(oracle));
        }
        if !agree(solver, oracle, tolerance) {
            report.disagreements += 1;
            report.failures.push(Disagreement {
                acceptance: case.acceptance.kind_name().to_string(),
                position: case.position,
                solver,
                oracle,
            });
        }
    }
    Ok(report)
}
