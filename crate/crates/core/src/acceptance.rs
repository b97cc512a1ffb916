//! Acceptance sets: membership, interior and closure tests, and the
//! structural flags (closed, conic, convex) the finiteness results key on.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RiskError};
use crate::quantile::{check_alpha, tvar, var};
use crate::types::{Position, ScenarioSpace, PROB_TOL};

/// Shifts tried when probing a black-box set for interior or closure
/// membership: `1, 1e-1, ..., 1e-8`.
pub const PROBE_EPSILONS: [f64; 9] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

/// Number of random ordered pairs checked when a custom predicate is
/// registered.
pub const MONOTONICITY_PROBES: usize = 256;

pub type MembershipFn = dyn Fn(&ScenarioSpace, &Position) -> bool + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct ConeFlags {
    pub closed: bool,
    pub conic: bool,
    pub convex: bool,
}

/// A user-supplied acceptance set given by its membership predicate.
///
/// The predicate must be pure. Monotonicity is probed at registration; the
/// structural flags are taken on trust.
#[derive(Clone)]
pub struct CustomCone {
    name: String,
    flags: ConeFlags,
    predicate: Arc<MembershipFn>,
}

impl CustomCone {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn flags(&self) -> ConeFlags {
        self.flags
    }

    pub fn accepts(&self, space: &ScenarioSpace, x: &Position) -> bool {
        (self.predicate)(space, x)
    }
}

impl fmt::Debug for CustomCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomCone")
            .field("name", &self.name)
            .field("flags", &self.flags)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum AcceptanceSpec {
    /// `{X : ℙ[X < 0] ≤ α}`
    VaR { alpha: f64 },
    /// `{X : TVaR_α(X) ≤ 0}`
    TVaR { alpha: f64 },
    /// `{X : E[X] ≥ floor}`
    Expectation { floor: f64 },
    /// `{X : X(ω) ≥ 0 for every state}`
    PositiveCone,
    Custom(CustomCone),
}

impl AcceptanceSpec {
    pub fn var(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self::VaR { alpha })
    }

    pub fn tvar(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self::TVaR { alpha })
    }

    pub fn expectation(floor: f64) -> Self {
        Self::Expectation { floor }
    }

    pub fn positive_cone() -> Self {
        Self::PositiveCone
    }

    /// Registers a custom acceptance set after probing its predicate for
    /// monotonicity on [`MONOTONICITY_PROBES`] random ordered pairs drawn
    /// over `space`.
    pub fn custom<F>(
        space: &ScenarioSpace,
        name: impl Into<String>,
        flags: ConeFlags,
        seed: u64,
        predicate: F,
    ) -> Result<Self>
    where
        F: Fn(&ScenarioSpace, &Position) -> bool + Send + Sync + 'static,
    {
        let cone = CustomCone {
            name: name.into(),
            flags,
            predicate: Arc::new(predicate),
        };
        probe_monotonicity(space, &cone, seed)?;
        Ok(Self::Custom(cone))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::VaR { .. } => "var",
            Self::TVaR { .. } => "tvar",
            Self::Expectation { .. } => "expectation",
            Self::PositiveCone => "positive-cone",
            Self::Custom(_) => "custom",
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Self::Custom(c) => c.flags.closed,
            _ => true,
        }
    }

    pub fn is_conic(&self) -> bool {
        match self {
            Self::VaR { .. } | Self::TVaR { .. } | Self::PositiveCone => true,
            Self::Expectation { floor } => *floor == 0.0,
            Self::Custom(c) => c.flags.conic,
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            Self::VaR { .. } => false,
            Self::TVaR { .. } | Self::Expectation { .. } | Self::PositiveCone => true,
            Self::Custom(c) => c.flags.convex,
        }
    }

    pub fn is_coherent(&self) -> bool {
        self.is_conic() && self.is_convex()
    }

    pub fn contains(&self, space: &ScenarioSpace, x: &Position) -> Result<bool> {
        space.check_bound(x)?;
        Ok(match self {
            Self::VaR { alpha } => loss_probability(space, x) <= alpha + PROB_TOL,
            Self::TVaR { alpha } => tvar(space, x, *alpha)? <= 0.0,
            Self::Expectation { floor } => space.expectation(x) >= *floor,
            Self::PositiveCone => x.min() >= 0.0,
            Self::Custom(c) => c.accepts(space, x),
        })
    }

    /// Interior membership. Exact for the built-in sets; for custom sets a
    /// `true` answer is certain and `false` only means no shift on the
    /// probe grid worked.
    pub fn in_interior(&self, space: &ScenarioSpace, x: &Position) -> Result<bool> {
        space.check_bound(x)?;
        Ok(match self {
            Self::VaR { alpha } => var(space, x, *alpha)? < 0.0,
            Self::TVaR { alpha } => tvar(space, x, *alpha)? < 0.0,
            Self::Expectation { floor } => space.expectation(x) > *floor,
            Self::PositiveCone => x.min() > 0.0,
            Self::Custom(c) => PROBE_EPSILONS
                .iter()
                .any(|&eps| c.accepts(space, &x.shift(-eps))),
        })
    }

    /// Closure membership. Closed sets answer with [`Self::contains`]; an
    /// unclosed custom set accepts `X` when every shift `X + ε·1_Ω` on the
    /// probe grid is accepted.
    pub fn in_closure(&self, space: &ScenarioSpace, x: &Position) -> Result<bool> {
        match self {
            Self::Custom(c) if !c.flags.closed => {
                space.check_bound(x)?;
                Ok(PROBE_EPSILONS
                    .iter()
                    .all(|&eps| c.accepts(space, &x.shift(eps))))
            }
            _ => self.contains(space, x),
        }
    }
}

/// `ℙ[X < 0]`.
pub fn loss_probability(space: &ScenarioSpace, x: &Position) -> f64 {
    space.prob_of(|i| x.get(i) < 0.0)
}

fn probe_monotonicity(space: &ScenarioSpace, cone: &CustomCone, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.len();
    for _ in 0..MONOTONICITY_PROBES {
        let scale = 10f64.powi(rng.gen_range(-2..=2));
        let x = Position::new((0..n).map(|_| rng.gen_range(-scale..scale)).collect())
            .expect("finite draws");
        let bump = Position::new(
            (0..n)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        0.0
                    } else {
                        rng.gen_range(0.0..scale)
                    }
                })
                .collect(),
        )
        .expect("finite draws");
        let y = &x + &bump;
        if cone.accepts(space, &x) && !cone.accepts(space, &y) {
            return Err(RiskError::NonMonotonePredicate {
                name: cone.name.clone(),
            });
        }
    }
    Ok(())
}
