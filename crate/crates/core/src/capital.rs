//! Capital requirements `ρ_{A,S}(X) = inf{m ∈ ℝ : X + (m/S₀)·S_T ∈ A}`.
//!
//! VaR and expectation sets are solved in closed form. TVaR uses bisection
//! on the convex, non-increasing map `m ↦ TVaR_α(X + (m/S₀)·S_T)` with an
//! analytic plateau test for the `+∞` case. Everything else goes through a
//! generic bracket-and-bisect search on the membership predicate.

use serde::Serialize;

use crate::acceptance::AcceptanceSpec;
use crate::error::{Result, RiskError};
use crate::quantile::{check_alpha, tvar_of, SortedDistribution};
use crate::types::{Confidence, ExtendedAmount, Position, ScenarioSpace, TradedAsset, PROB_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bisection stops once the bracket is narrower than
    /// `rel_tol · max(1, |m|)`.
    pub rel_tol: f64,
    /// Bracket expansions allowed on either side before giving up.
    pub max_doublings: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_doublings: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    VarSweep,
    TvarBisect,
    ExpectationClosed,
    ConeBisect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapitalWarning {
    /// The payoff is not interior to the conic set, so some position needs
    /// infinite capital.
    MayTakePosInf,
    /// `-S_T` lies in the closure of the conic set: acceptability arbitrage
    /// is possible for some position.
    MayTakeNegInf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapitalResult {
    pub amount: ExtendedAmount,
    pub method: Method,
    /// `X + (m/S₀)·S_T` at the returned amount, when it is finite.
    pub acceptable_position: Option<Position>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<CapitalWarning>,
}

impl CapitalResult {
    fn infinite(amount: ExtendedAmount, method: Method) -> Self {
        Self {
            amount,
            method,
            acceptable_position: None,
            warnings: Vec::new(),
        }
    }
}

pub fn required_capital(
    space: &ScenarioSpace,
    a: &AcceptanceSpec,
    s: &TradedAsset,
    x: &Position,
) -> Result<CapitalResult> {
    required_capital_with(space, a, s, x, &SolverOptions::default())
}

pub fn required_capital_with(
    space: &ScenarioSpace,
    a: &AcceptanceSpec,
    s: &TradedAsset,
    x: &Position,
    opts: &SolverOptions,
) -> Result<CapitalResult> {
    match a {
        AcceptanceSpec::VaR { alpha } => var_sweep(space, s, *alpha, x),
        AcceptanceSpec::TVaR { alpha } => tvar_solve(space, s, *alpha, x, opts),
        AcceptanceSpec::Expectation { floor } => expectation_closed_form(space, s, *floor, x),
        AcceptanceSpec::PositiveCone | AcceptanceSpec::Custom(_) => {
            cone_bisect(space, s, a, x, opts)
        }
    }
}

fn check_binding(space: &ScenarioSpace, s: &TradedAsset, x: &Position) -> Result<()> {
    space.check_bound(x)?;
    space.check_bound(s.payoff())
}

/// Moves `m` up by single ulps until the invested position passes `accepts`.
/// Only needed when `-S₀·X/S_T` does not round-trip through `X + (m/S₀)·S_T`.
fn settle(
    mut m: f64,
    s: &TradedAsset,
    x: &Position,
    mut accepts: impl FnMut(&Position) -> bool,
) -> (f64, Position) {
    for _ in 0..64 {
        let y = x.add_scaled(m / s.price(), s.payoff());
        if accepts(&y) {
            return (m, y);
        }
        m = m.next_up();
    }
    (m, x.add_scaled(m / s.price(), s.payoff()))
}

/// Exact capital requirement for `{X : ℙ[X < 0] ≤ α}`.
///
/// On states where the asset pays nothing, investing changes nothing; on the
/// others, state `ω` stops being a loss once `m ≥ -S₀·X(ω)/S_T(ω)`. The loss
/// probability is therefore a right-continuous step function of `m` and the
/// infimum is one of the thresholds.
pub fn var_sweep(
    space: &ScenarioSpace,
    s: &TradedAsset,
    alpha: f64,
    x: &Position,
) -> Result<CapitalResult> {
    check_alpha(alpha)?;
    check_binding(space, s, x)?;
    let payoff = s.payoff();
    let stuck = space.prob_of(|i| payoff.get(i) == 0.0 && x.get(i) < 0.0);
    let reachable = s.positive_payoff_mass(space);
    if stuck > alpha + PROB_TOL {
        return Ok(CapitalResult::infinite(
            ExtendedAmount::pos_inf(Confidence::Exact),
            Method::VarSweep,
        ));
    }
    if stuck + reachable <= alpha + PROB_TOL {
        return Ok(CapitalResult::infinite(
            ExtendedAmount::neg_inf(Confidence::Exact),
            Method::VarSweep,
        ));
    }

    let mut thresholds: Vec<(f64, f64)> = space
        .charged_states()
        .filter(|&i| payoff.get(i) > 0.0)
        .map(|i| (-s.price() * x.get(i) / payoff.get(i) + 0.0, space.prob(i)))
        .collect();
    thresholds.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Walk from the largest threshold down, tracking the mass strictly above.
    let mut above = 0.0;
    let mut best = None;
    let mut k = thresholds.len();
    while k > 0 {
        let t = thresholds[k - 1].0;
        if stuck + above > alpha + PROB_TOL {
            break;
        }
        best = Some(t);
        while k > 0 && thresholds[k - 1].0 == t {
            above += thresholds[k - 1].1;
            k -= 1;
        }
    }
    let m = best.expect("finite branch has at least one admissible threshold");
    let (m, y) = settle(m, s, x, |y| {
        space.prob_of(|i| y.get(i) < 0.0) <= alpha + PROB_TOL
    });
    Ok(CapitalResult {
        amount: ExtendedAmount::exact(m),
        method: Method::VarSweep,
        acceptable_position: Some(y),
        warnings: Vec::new(),
    })
}

/// Capital requirement for `{X : TVaR_α(X) ≤ 0}`.
pub fn tvar_solve(
    space: &ScenarioSpace,
    s: &TradedAsset,
    alpha: f64,
    x: &Position,
    opts: &SolverOptions,
) -> Result<CapitalResult> {
    check_alpha(alpha)?;
    check_binding(space, s, x)?;
    let payoff = s.payoff();
    if space.charged_states().all(|i| payoff.get(i) == 0.0) {
        return Err(RiskError::DegenerateAsset);
    }
    let h = |m: f64| -> Result<f64> {
        let y = x.add_scaled(m / s.price(), payoff);
        Ok(tvar_of(&SortedDistribution::new(space, &y)?, alpha))
    };
    let numeric = |m: f64| opts.rel_tol * m.abs().max(1.0);

    let mut upper_limit = None;
    if zero_payoff_mass(space, s)? >= alpha {
        // Once every paying state sits above all non-paying ones, the α-tail
        // lives on the non-paying states and h stops moving.
        let ceiling = 1.0
            + space
                .charged_states()
                .filter(|&i| payoff.get(i) == 0.0)
                .map(|i| x.get(i))
                .fold(f64::NEG_INFINITY, f64::max);
        let plateau = space
            .charged_states()
            .filter(|&i| payoff.get(i) > 0.0)
            .map(|i| s.price() * (ceiling - x.get(i)) / payoff.get(i))
            .fold(f64::NEG_INFINITY, f64::max);
        if h(plateau)? > 0.0 {
            return Ok(CapitalResult::infinite(
                ExtendedAmount::pos_inf(Confidence::Exact),
                Method::TvarBisect,
            ));
        }
        upper_limit = Some(plateau);
    }

    let (mut lo, mut hi) = match bracket(&h, upper_limit, opts.max_doublings)? {
        Bracket::Found { lo, hi } => (lo, hi),
        Bracket::AlwaysAccepted => {
            return Ok(CapitalResult::infinite(
                ExtendedAmount::neg_inf(Confidence::BudgetExhausted),
                Method::TvarBisect,
            ))
        }
        Bracket::NeverAccepted => {
            return Ok(CapitalResult::infinite(
                ExtendedAmount::pos_inf(Confidence::BudgetExhausted),
                Method::TvarBisect,
            ))
        }
    };

    let mut h_lo = h(lo)?;
    let mut h_hi = h(hi)?;
    for _ in 0..2000 {
        if hi - lo <= numeric(hi) {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = h(mid)?;
        if v <= 0.0 {
            hi = mid;
            h_hi = v;
        } else {
            lo = mid;
            h_lo = v;
        }
    }
    // h is piecewise linear; a secant step lands on the root whenever the
    // final bracket holds no kink. Rounding can leave h a hair above zero
    // at the secant root, so a few ulps above it are tried too.
    if h_lo > h_hi {
        let mut cand = lo + (hi - lo) * h_lo / (h_lo - h_hi);
        for _ in 0..16 {
            if !(cand > lo && cand < hi) {
                break;
            }
            if h(cand)? <= 0.0 {
                hi = cand;
                break;
            }
            cand = cand.next_up();
        }
    }
    let y = x.add_scaled(hi / s.price(), payoff);
    Ok(CapitalResult {
        amount: ExtendedAmount::numeric(hi, numeric(hi), Some(true)),
        method: Method::TvarBisect,
        acceptable_position: Some(y),
        warnings: Vec::new(),
    })
}

/// `ℙ[S_T = 0]`, accumulated the same way TVaR accumulates it.
pub(crate) fn zero_payoff_mass(space: &ScenarioSpace, s: &TradedAsset) -> Result<f64> {
    let dist = SortedDistribution::new(space, s.payoff())?;
    Ok(match dist.values().first() {
        Some(&v) if v == 0.0 => dist.cumulative()[0],
        _ => 0.0,
    })
}

enum Bracket {
    Found { lo: f64, hi: f64 },
    AlwaysAccepted,
    NeverAccepted,
}

/// Brackets the sign change of a non-increasing `h` by doubling away from
/// zero: `h(lo) > 0 ≥ h(hi)`.
fn bracket(
    h: &impl Fn(f64) -> Result<f64>,
    upper_limit: Option<f64>,
    max_doublings: u32,
) -> Result<Bracket> {
    let start = upper_limit.map_or(0.0, |u| u.min(0.0));
    if h(start)? <= 0.0 {
        let mut hi = start;
        let mut step = 1.0;
        for _ in 0..max_doublings {
            let lo = start - step;
            if h(lo)? > 0.0 {
                return Ok(Bracket::Found { lo, hi });
            }
            hi = lo;
            step *= 2.0;
        }
        return Ok(Bracket::AlwaysAccepted);
    }
    if let Some(u) = upper_limit {
        return Ok(Bracket::Found { lo: start, hi: u });
    }
    let mut lo = start;
    let mut step = 1.0;
    for _ in 0..max_doublings {
        let hi = start + step;
        if h(hi)? <= 0.0 {
            return Ok(Bracket::Found { lo, hi });
        }
        lo = hi;
        step *= 2.0;
    }
    Ok(Bracket::NeverAccepted)
}

/// Closed form for `{X : E[X] ≥ floor}`: `S₀·(floor − E[X]) / E[S_T]`.
pub fn expectation_closed_form(
    space: &ScenarioSpace,
    s: &TradedAsset,
    floor: f64,
    x: &Position,
) -> Result<CapitalResult> {
    check_binding(space, s, x)?;
    let mean_x = space.expectation(x);
    let mean_s = space.expectation(s.payoff());
    if mean_s <= 0.0 {
        let amount = if mean_x >= floor {
            ExtendedAmount::neg_inf(Confidence::Exact)
        } else {
            ExtendedAmount::pos_inf(Confidence::Exact)
        };
        return Ok(CapitalResult::infinite(amount, Method::ExpectationClosed));
    }
    let m = s.price() * (floor - mean_x) / mean_s + 0.0;
    let (m, y) = settle(m, s, x, |y| space.expectation(y) >= floor);
    Ok(CapitalResult {
        amount: ExtendedAmount::exact(m),
        method: Method::ExpectationClosed,
        acceptable_position: Some(y),
        warnings: Vec::new(),
    })
}

/// Generic search for any monotone acceptance set.
///
/// Acceptability of `X + (m/S₀)·S_T` is an up-set in `m`; the bracket is
/// grown by doubling from `±1` and then bisected. Every probed point is
/// kept so that a predicate that turns out not to be monotone is reported
/// instead of silently producing a wrong number.
pub fn cone_bisect(
    space: &ScenarioSpace,
    s: &TradedAsset,
    a: &AcceptanceSpec,
    x: &Position,
    opts: &SolverOptions,
) -> Result<CapitalResult> {
    check_binding(space, s, x)?;
    let payoff = s.payoff();

    let mut warnings = Vec::new();
    if a.is_conic() {
        if !a.in_interior(space, payoff)? {
            warnings.push(CapitalWarning::MayTakePosInf);
        }
        if a.in_closure(space, &-payoff)? {
            warnings.push(CapitalWarning::MayTakeNegInf);
        }
    }
    let with = |amount: ExtendedAmount, acceptable_position: Option<Position>| CapitalResult {
        amount,
        method: Method::ConeBisect,
        acceptable_position,
        warnings: warnings.clone(),
    };

    if matches!(a, AcceptanceSpec::PositiveCone)
        && (0..space.len()).any(|i| payoff.get(i) == 0.0 && x.get(i) < 0.0)
    {
        return Ok(with(ExtendedAmount::pos_inf(Confidence::Exact), None));
    }

    let mut probes: Vec<(f64, bool)> = Vec::new();
    let mut accepts = |m: f64| -> Result<bool> {
        let ok = a.contains(space, &x.add_scaled(m / s.price(), payoff))?;
        probes.push((m, ok));
        Ok(ok)
    };

    let (mut lo, mut hi);
    if accepts(0.0)? {
        hi = 0.0;
        let mut step = 1.0;
        let mut found = None;
        for _ in 0..opts.max_doublings {
            if !accepts(-step)? {
                found = Some(-step);
                break;
            }
            hi = -step;
            step *= 2.0;
        }
        match found {
            Some(l) => lo = l,
            None => {
                check_up_set(&probes, a)?;
                return Ok(with(ExtendedAmount::neg_inf(Confidence::BudgetExhausted), None));
            }
        }
    } else {
        lo = 0.0;
        let mut step = 1.0;
        let mut found = None;
        for _ in 0..opts.max_doublings {
            if accepts(step)? {
                found = Some(step);
                break;
            }
            lo = step;
            step *= 2.0;
        }
        match found {
            Some(h) => hi = h,
            None => {
                check_up_set(&probes, a)?;
                return Ok(with(ExtendedAmount::pos_inf(Confidence::BudgetExhausted), None));
            }
        }
    }

    // Membership tests are cheap next to their failure modes, so bisect down
    // to adjacent doubles.
    for _ in 0..2000 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if accepts(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let scale = hi.abs().max(1.0);
    for k in [1.0, 10.0, 100.0] {
        accepts(hi + k * scale)?;
    }
    check_up_set(&probes, a)?;
    let numeric = |m: f64| opts.rel_tol * m.abs().max(1.0);

    let attained = if a.is_closed() { Some(true) } else { None };
    let y = x.add_scaled(hi / s.price(), payoff);
    Ok(with(ExtendedAmount::numeric(hi, numeric(hi), attained), Some(y)))
}

fn check_up_set(probes: &[(f64, bool)], a: &AcceptanceSpec) -> Result<()> {
    let lowest_accepted = probes
        .iter()
        .filter(|p| p.1)
        .map(|p| p.0)
        .fold(f64::INFINITY, f64::min);
    if probes.iter().any(|&(m, ok)| !ok && m > lowest_accepted) {
        let name = match a {
            AcceptanceSpec::Custom(c) => c.name().to_string(),
            other => other.kind_name().to_string(),
        };
        return Err(RiskError::NonMonotonePredicate { name });
    }
    Ok(())
}
