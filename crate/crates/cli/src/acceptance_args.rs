//! Turning `--acceptance` and friends into an [`AcceptanceSpec`].

use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use riskcap::{AcceptanceSpec, ConeFlags, Position, ScenarioSpace};

use crate::error::CliError;
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Var,
    Tvar,
    Expectation,
    PositiveCone,
    /// `{X : Σ coef_i · E_{q_i}[X] ≥ floor}` over the given measures.
    Linear,
}

impl Kind {
    fn parse(name: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(name, true).ok()
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Var => "var",
            Kind::Tvar => "tvar",
            Kind::Expectation => "expectation",
            Kind::PositiveCone => "positive-cone",
            Kind::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AcceptanceArgs {
    /// Acceptance set; falls back to the model's `defaults.acceptance`.
    #[arg(long, value_enum)]
    pub acceptance: Option<Kind>,
    /// Level for var/tvar; falls back to the model's `defaults.alpha`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Floor for expectation and linear sets.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub floor: f64,
    /// Comma-separated weights over the states; repeat for several measures.
    #[arg(long = "measure", value_delimiter = ';')]
    pub measures: Vec<String>,
    /// One coefficient per `--measure`, default 1.
    #[arg(long = "coef", allow_hyphen_values = true)]
    pub coefs: Vec<f64>,
}

pub struct Resolved {
    pub kind: Kind,
    pub spec: AcceptanceSpec,
    pub alpha: Option<f64>,
}

impl Resolved {
    /// Parameters echoed into reports.
    pub fn describe(&self, args: &AcceptanceArgs) -> Value {
        match self.kind {
            Kind::Var | Kind::Tvar => json!({"kind": self.kind.name(), "alpha": self.alpha}),
            Kind::Expectation => json!({"kind": "expectation", "floor": args.floor}),
            Kind::PositiveCone => json!({"kind": "positive-cone"}),
            Kind::Linear => json!({
                "kind": "linear",
                "floor": args.floor,
                "measures": args.measures,
                "coefs": args.coefs,
            }),
        }
    }
}

impl AcceptanceArgs {
    pub fn alpha(&self, model: Option<&Model>) -> Result<f64, CliError> {
        self.alpha
            .or_else(|| model.and_then(|m| m.file.defaults.alpha))
            .ok_or_else(|| CliError::Usage("--alpha is required (no default in the model)".into()))
    }

    pub fn resolve(&self, model: &Model, seed: u64) -> Result<Resolved, CliError> {
        let kind = match self.acceptance {
            Some(k) => k,
            None => match model.file.defaults.acceptance.as_deref() {
                Some(name) => Kind::parse(name)
                    .ok_or_else(|| CliError::Usage(format!("unknown default acceptance `{name}`")))?,
                None => return Err(CliError::Usage("--acceptance is required (no default in the model)".into())),
            },
        };
        let (spec, alpha) = match kind {
            Kind::Var => {
                let a = self.alpha(Some(model))?;
                (AcceptanceSpec::var(a)?, Some(a))
            }
            Kind::Tvar => {
                let a = self.alpha(Some(model))?;
                (AcceptanceSpec::tvar(a)?, Some(a))
            }
            Kind::Expectation => (AcceptanceSpec::expectation(self.floor), None),
            Kind::PositiveCone => (AcceptanceSpec::positive_cone(), None),
            Kind::Linear => (self.linear(&model.space, seed)?, None),
        };
        Ok(Resolved { kind, spec, alpha })
    }

    fn linear(&self, space: &ScenarioSpace, seed: u64) -> Result<AcceptanceSpec, CliError> {
        if self.measures.is_empty() {
            return Err(CliError::Usage("linear acceptance needs at least one --measure".into()));
        }
        if !self.coefs.is_empty() && self.coefs.len() != self.measures.len() {
            return Err(CliError::Usage(format!(
                "{} coefficients for {} measures",
                self.coefs.len(),
                self.measures.len()
            )));
        }
        let n = space.len();
        let mut weights = vec![0.0; n];
        for (k, text) in self.measures.iter().enumerate() {
            let q = text
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Usage(format!("--measure `{text}` is not a list of numbers")))?;
            if q.len() != n {
                return Err(CliError::Usage(format!("--measure `{text}` has {} weights for {n} states", q.len())));
            }
            if q.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                return Err(CliError::Usage(format!("--measure `{text}` has a negative weight")));
            }
            let c = self.coefs.get(k).copied().unwrap_or(1.0);
            for (w, qi) in weights.iter_mut().zip(&q) {
                *w += c * qi;
            }
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(CliError::Usage(
                "combined weights must be nonnegative on every state for the set to be monotone".into(),
            ));
        }
        let floor = self.floor;
        let flags = ConeFlags {
            closed: true,
            conic: floor == 0.0,
            convex: true,
        };
        let predicate = move |_: &ScenarioSpace, x: &Position| {
            x.values().iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() >= floor
        };
        Ok(AcceptanceSpec::custom(space, "linear", flags, seed, predicate)?)
    }
}
