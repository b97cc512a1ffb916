//! Finiteness and continuity diagnostics for capital requirements.
//!
//! VaR, TVaR and conic acceptance sets admit exact characterizations of
//! when `ρ_{A,S}` is finite and where it is continuous; those are decided
//! here without evaluating `ρ` over the whole position space. Every witness
//! attached to a report has been re-evaluated through [`required_capital`]
//! before it is returned.

use serde::Serialize;

use crate::acceptance::{loss_probability, AcceptanceSpec};
use crate::capital::{required_capital, required_capital_with, var_sweep, zero_payoff_mass, SolverOptions};
use crate::error::{Result, RiskError};
use crate::quantile::{check_alpha, tvar};
use crate::types::{Amount, Confidence, Position, ScenarioSpace, TradedAsset, PROB_TOL};

/// Upper limit on the number of paying states handled by the subset search.
pub const MAX_SUBSET_STATES: usize = 44;

/// A sequence gap at or below this size counts as convergence.
pub const GAP_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub position: Position,
    pub evaluated: Amount,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinitenessReport {
    pub never_pos_inf: bool,
    pub never_neg_inf: bool,
    pub finite_everywhere: bool,
    pub witnesses: Vec<Witness>,
    pub rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "position", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ContinuityScope {
    Pointwise(Position),
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscontinuityWitness {
    /// The approximating sequence, in words.
    pub sequence: String,
    /// The point the sequence converges to.
    pub position: Position,
    /// States of the offending event, for global verdicts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<String>>,
    /// `|lim ρ(X_n) − ρ(X)|`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub scope: ContinuityScope,
    pub continuous: bool,
    pub lsc: bool,
    pub usc: bool,
    pub witness: Option<DiscontinuityWitness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz_bound: Option<f64>,
    pub confidence: Confidence,
}

fn evaluate(space: &ScenarioSpace, a: &AcceptanceSpec, s: &TradedAsset, x: &Position) -> Result<Amount> {
    Ok(required_capital(space, a, s, x)?.amount.value)
}

fn validated(
    space: &ScenarioSpace,
    a: &AcceptanceSpec,
    s: &TradedAsset,
    position: Position,
    claimed: Amount,
) -> Result<Witness> {
    let evaluated = evaluate(space, a, s, &position)?;
    if evaluated != claimed {
        return Err(RiskError::Inconsistent(format!(
            "witness for {claimed} evaluates to {evaluated}"
        )));
    }
    Ok(Witness { position, evaluated })
}

/// Finiteness of VaR-based capital requirements: never `+∞` iff
/// `ℙ[S_T = 0] ≤ α`, never `−∞` iff `ℙ[S_T > 0] > α`.
pub fn var_finiteness(space: &ScenarioSpace, s: &TradedAsset, alpha: f64) -> Result<FinitenessReport> {
    check_alpha(alpha)?;
    space.check_bound(s.payoff())?;
    let n = space.len();
    let a = AcceptanceSpec::VaR { alpha };
    let never_pos_inf = s.zero_payoff_mass(space) <= alpha + PROB_TOL;
    let never_neg_inf = s.positive_payoff_mass(space) > alpha + PROB_TOL;
    if alpha < 0.5 && never_pos_inf && !never_neg_inf {
        return Err(RiskError::Inconsistent(
            "below one half, finite upward must imply finite downward".into(),
        ));
    }
    let mut witnesses = Vec::new();
    if !never_pos_inf {
        witnesses.push(validated(space, &a, s, Position::constant(n, -1.0), Amount::PosInf)?);
    }
    if !never_neg_inf {
        witnesses.push(validated(space, &a, s, Position::zeros(n), Amount::NegInf)?);
    }
    let rule = if alpha < 0.5 {
        "var(alpha<1/2): finite iff P[S_T=0] <= alpha"
    } else {
        "var: no +inf iff P[S_T=0] <= alpha; no -inf iff P[S_T>0] > alpha"
    };
    Ok(FinitenessReport {
        never_pos_inf,
        never_neg_inf,
        finite_everywhere: never_pos_inf && never_neg_inf,
        witnesses,
        rule: rule.into(),
        lipschitz_bound: None,
    })
}

/// Finiteness of TVaR-based capital requirements: finite iff
/// `ℙ[S_T = 0] < α` iff `TVaR_α(S_T) < 0`. Both sides are computed.
pub fn tvar_finiteness(space: &ScenarioSpace, s: &TradedAsset, alpha: f64) -> Result<FinitenessReport> {
    check_alpha(alpha)?;
    space.check_bound(s.payoff())?;
    if s.positive_payoff_mass(space) == 0.0 {
        return Err(RiskError::DegenerateAsset);
    }
    let n = space.len();
    let a = AcceptanceSpec::TVaR { alpha };
    let by_mass = zero_payoff_mass(space, s)? < alpha;
    let payoff_tvar = tvar(space, s.payoff(), alpha)?;
    let by_interior = payoff_tvar < 0.0;
    if by_mass != by_interior {
        return Err(RiskError::Inconsistent(format!(
            "P[S_T=0] < alpha is {by_mass} but TVaR(S_T) = {payoff_tvar}"
        )));
    }
    let never_neg_inf = tvar(space, &-s.payoff(), alpha)? > 0.0;
    let mut witnesses = Vec::new();
    if !by_mass {
        witnesses.push(validated(space, &a, s, Position::constant(n, -1.0), Amount::PosInf)?);
    }
    Ok(FinitenessReport {
        never_pos_inf: by_mass,
        never_neg_inf,
        finite_everywhere: by_mass && never_neg_inf,
        witnesses,
        rule: "tvar: finite iff P[S_T=0] < alpha iff TVaR(S_T) < 0".into(),
        lipschitz_bound: by_interior.then(|| s.price() / -payoff_tvar),
    })
}

/// Finiteness for conic acceptance sets: never `+∞` iff `S_T` is interior,
/// never `−∞` iff `−S_T` is outside the closure.
pub fn conic_finiteness(a: &AcceptanceSpec, space: &ScenarioSpace, s: &TradedAsset) -> Result<FinitenessReport> {
    if !a.is_conic() {
        return Err(RiskError::NotConic);
    }
    space.check_bound(s.payoff())?;
    let n = space.len();
    let custom = matches!(a, AcceptanceSpec::Custom(_));
    let mut never_pos_inf = a.in_interior(space, s.payoff())?;
    let never_neg_inf = !a.in_closure(space, &-s.payoff())?;
    let mut witnesses = Vec::new();

    if !never_pos_inf {
        let probe = Position::constant(n, -1.0);
        let value = evaluate(space, a, s, &probe)?;
        if value == Amount::PosInf {
            witnesses.push(Witness { position: probe, evaluated: value });
        } else if custom {
            // The interior probe for black-box sets is one-sided. A finite
            // requirement at -1 certifies that S_T is interior after all.
            never_pos_inf = true;
        } else {
            return Err(RiskError::Inconsistent(format!(
                "S_T not interior yet rho(-1) = {value}"
            )));
        }
    }
    if !never_neg_inf {
        let probe = Position::constant(n, 1.0);
        let value = evaluate(space, a, s, &probe)?;
        if value != Amount::NegInf {
            return Err(RiskError::Inconsistent(format!(
                "-S_T in the closure yet rho(1) = {value}"
            )));
        }
        witnesses.push(Witness { position: probe, evaluated: value });
    }
    if a.is_coherent() && never_pos_inf && !never_neg_inf {
        return Err(RiskError::Inconsistent(
            "coherent set with interior payoff cannot reach -inf".into(),
        ));
    }
    let rule = if a.is_coherent() {
        "coherent: finite iff S_T in interior(A)"
    } else {
        "conic: no +inf iff S_T in interior(A); no -inf iff -S_T outside closure(A)"
    };
    Ok(FinitenessReport {
        never_pos_inf,
        never_neg_inf,
        finite_everywhere: never_pos_inf && never_neg_inf,
        witnesses,
        rule: rule.into(),
        lipschitz_bound: None,
    })
}

/// Default `n` at which approximating sequences are read off.
const LIMIT_INDEX: f64 = 67_108_864.0; // 2^26

/// Limit of `n ↦ f(1/n)` read off at two dyadic indices. `f` is piecewise
/// linear in `1/n` near zero for every finite-space solver here, so the
/// linear extrapolation `2·f(1/2n) − f(1/n)` is exact once `1/n` lies inside
/// the last linear piece.
fn sequence_limit(mut f: impl FnMut(f64) -> Result<Amount>, n: f64) -> Result<Amount> {
    let coarse = f(1.0 / n)?;
    let fine = f(0.5 / n)?;
    Ok(match (coarse, fine) {
        (Amount::Finite(a), Amount::Finite(b)) => Amount::Finite(2.0 * b - a),
        (_, other) => other,
    })
}

/// Pointwise continuity of VaR-based requirements at `x`: continuous iff
/// `ℙ[X̃ < 0] + ℙ[{X = 0} ∩ {S_T = 0}] ≤ α` with `X̃ = X + (ρ(X)/S₀)·S_T`.
pub fn var_pointwise_continuity(
    space: &ScenarioSpace,
    s: &TradedAsset,
    alpha: f64,
    x: &Position,
) -> Result<ContinuityReport> {
    let base = var_sweep(space, s, alpha, x)?;
    let Amount::Finite(rho) = base.amount.value else {
        return Err(RiskError::NotFinite);
    };
    let shifted = base
        .acceptable_position
        .expect("finite VaR requirement carries its acceptable position");
    let payoff = s.payoff();
    let trapped = space.prob_of(|i| x.get(i) == 0.0 && payoff.get(i) == 0.0);
    let continuous = loss_probability(space, &shifted) + trapped <= alpha + PROB_TOL;

    let witness = if continuous {
        None
    } else {
        let a = AcceptanceSpec::VaR { alpha };
        let limit = sequence_limit(|eps| evaluate(space, &a, s, &x.shift(-eps)), LIMIT_INDEX)?;
        let gap = limit.distance(Amount::Finite(rho));
        if !(gap > GAP_THRESHOLD) {
            return Err(RiskError::Inconsistent(format!(
                "discontinuity predicted at X but the downward sequence gap is {gap}"
            )));
        }
        Some(DiscontinuityWitness {
            sequence: "X_n = X - (1/n)·1_Ω".into(),
            position: x.clone(),
            subset: None,
            gap,
        })
    };
    Ok(ContinuityReport {
        scope: ContinuityScope::Pointwise(x.clone()),
        continuous,
        lsc: true,
        usc: continuous,
        witness,
        lipschitz_bound: None,
        confidence: Confidence::Exact,
    })
}

/// Global continuity of VaR-based requirements on a finite space: with
/// `z = ℙ[S_T = 0]`, continuous iff no event inside `{S_T > 0}` has
/// probability in `(α − z, α]`.
pub fn var_global_continuity(space: &ScenarioSpace, s: &TradedAsset, alpha: f64) -> Result<ContinuityReport> {
    if !var_finiteness(space, s, alpha)?.finite_everywhere {
        return Err(RiskError::NotFinite);
    }
    let payoff = s.payoff();
    let paying: Vec<usize> = space.charged_states().filter(|&i| payoff.get(i) > 0.0).collect();
    if paying.len() > MAX_SUBSET_STATES {
        return Err(RiskError::TooManyStates {
            count: paying.len(),
            limit: MAX_SUBSET_STATES,
        });
    }
    let zero_mass = s.zero_payoff_mass(space);
    let report = |continuous: bool, witness: Option<DiscontinuityWitness>| ContinuityReport {
        scope: ContinuityScope::Global,
        continuous,
        lsc: true,
        usc: continuous,
        witness,
        lipschitz_bound: None,
        confidence: Confidence::Exact,
    };
    if zero_mass == 0.0 {
        return Ok(report(true, None));
    }
    let weights: Vec<f64> = paying.iter().map(|&i| space.prob(i)).collect();
    let Some(chosen) = find_window_subset(&weights, alpha - zero_mass, alpha, PROB_TOL) else {
        return Ok(report(true, None));
    };
    let states: Vec<usize> = chosen.iter().map(|&k| paying[k]).collect();
    let position = Position::indicator_of(space.len(), &states).scale(-1.0);
    let a = AcceptanceSpec::VaR { alpha };
    let rho = evaluate(space, &a, s, &position)?;
    let limit = sequence_limit(|eps| evaluate(space, &a, s, &position.shift(-eps)), LIMIT_INDEX)?;
    let gap = limit.distance(rho);
    if !(gap > GAP_THRESHOLD) {
        return Err(RiskError::Inconsistent(format!(
            "subset witness shows no gap (rho = {rho}, limit = {limit})"
        )));
    }
    Ok(report(
        false,
        Some(DiscontinuityWitness {
            sequence: "X_n = -1_A - (1/n)·1_Ω".into(),
            position,
            subset: Some(states.iter().map(|&i| space.labels()[i].clone()).collect()),
            gap,
        }),
    ))
}

/// Finds a subset of `items` whose sum lies in `(lo, hi]`, both ends with
/// absolute slack `tol`, by meet-in-the-middle: the half-sums of each side
/// are sorted and a two-pointer sweep queries the window.
pub fn find_window_subset(items: &[f64], lo: f64, hi: f64, tol: f64) -> Option<Vec<usize>> {
    let split = items.len() / 2;
    let (left, right) = items.split_at(split);
    let mut left_sums = half_sums(left);
    let mut right_sums = half_sums(right);
    left_sums.sort_by(|a, b| b.0.total_cmp(&a.0));
    right_sums.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Left sums descend, so the first right sum clearing the lower bound
    // only moves right.
    let mut j = 0;
    for &(a, left_mask) in &left_sums {
        while j < right_sums.len() && !(a + right_sums[j].0 > lo + tol) {
            j += 1;
        }
        if j == right_sums.len() {
            break;
        }
        let (b, right_mask) = right_sums[j];
        if a + b <= hi + tol {
            let mut chosen: Vec<usize> = (0..split).filter(|i| left_mask & (1 << i) != 0).collect();
            chosen.extend((0..right.len()).filter(|i| right_mask & (1 << i) != 0).map(|i| i + split));
            return Some(chosen);
        }
    }
    None
}

fn half_sums(items: &[f64]) -> Vec<(f64, u32)> {
    let mut sums = Vec::with_capacity(1 << items.len());
    sums.push((0.0, 0u32));
    for (i, &w) in items.iter().enumerate() {
        for k in 0..sums.len() {
            let (s, mask) = sums[k];
            sums.push((s + w, mask | (1 << i)));
        }
    }
    sums
}

/// Numeric semicontinuity check along `X ± (1/n)·1_Ω`.
///
/// `ρ(X + ε·1_Ω)` is monotone in `ε`, so the dyadic subsequence
/// `n = 1, 2, 4, ..., n_max` decides convergence of the whole sequence. The
/// gap at `n_max` is extrapolated linearly in `1/n` and compared against
/// [`GAP_THRESHOLD`].
pub fn semicontinuity_probe(
    space: &ScenarioSpace,
    a: &AcceptanceSpec,
    s: &TradedAsset,
    x: &Position,
    n_max: u64,
    opts: &SolverOptions,
) -> Result<ContinuityReport> {
    let rho = required_capital_with(space, a, s, x, opts)?.amount.value;
    if !rho.is_finite() {
        return Err(RiskError::NotFinite);
    }
    let n_max = n_max.max(2) as f64;
    let eval = |eps: f64| Ok(required_capital_with(space, a, s, &x.shift(eps), opts)?.amount.value);
    // Walk the dyadic indices so that every step of the sequence is seen;
    // the values themselves only feed the extrapolation at the end.
    let mut n = 1.0;
    while n * 2.0 <= n_max {
        eval(1.0 / n)?;
        eval(-1.0 / n)?;
        n *= 2.0;
    }
    let up = sequence_limit(|eps| eval(eps), n_max / 2.0)?;
    let down = sequence_limit(|eps| eval(-eps), n_max / 2.0)?;
    let lsc_gap = up.distance(rho);
    let usc_gap = down.distance(rho);
    let lsc = lsc_gap <= GAP_THRESHOLD;
    let usc = usc_gap <= GAP_THRESHOLD;
    let witness = if lsc && usc {
        None
    } else if usc_gap >= lsc_gap {
        Some(DiscontinuityWitness {
            sequence: "X_n = X - (1/n)·1_Ω".into(),
            position: x.clone(),
            subset: None,
            gap: usc_gap,
        })
    } else {
        Some(DiscontinuityWitness {
            sequence: "X_n = X + (1/n)·1_Ω".into(),
            position: x.clone(),
            subset: None,
            gap: lsc_gap,
        })
    };
    Ok(ContinuityReport {
        scope: ContinuityScope::Pointwise(x.clone()),
        continuous: lsc && usc,
        lsc,
        usc,
        witness,
        lipschitz_bound: None,
        confidence: Confidence::Numeric(GAP_THRESHOLD),
    })
}

/// Global Lipschitz constant `S₀ / (−TVaR_α(S_T))` of TVaR-based capital
/// requirements in the sup-norm.
///
/// `TVaR_α` is subadditive, positively homogeneous and 1-Lipschitz, so
/// moving `m` by `δ` lowers `m ↦ TVaR_α(X + (m/S₀)·S_T)` by at least
/// `δ·(−TVaR_α(S_T))/S₀` while a perturbation of size `‖X − Y‖` raises it by
/// at most `‖X − Y‖`.
pub fn tvar_lipschitz_bound(space: &ScenarioSpace, s: &TradedAsset, alpha: f64) -> Result<f64> {
    let t = tvar(space, s.payoff(), alpha)?;
    if t >= 0.0 {
        return Err(RiskError::NotFinite);
    }
    Ok(s.price() / -t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementRow {
    pub level: u32,
    pub states: usize,
    /// Largest downward gap for the payoff `S_T(ω) = ω`, which touches zero.
    pub gap_touching_zero: f64,
    /// Largest downward gap for `S_T(ω) = 1/2 + ω`.
    pub gap_bounded_away: f64,
}

/// Discretizes the uniform law on `[0, 1)` into `2^k` equally likely
/// states and compares two VaR-based requirements under refinement: one
/// whose eligible payoff `ω` is not bounded away from zero and one whose
/// payoff `1/2 + ω` is. The largest observed downward gap over a family of
/// test positions is reported per level.
///
/// This is a qualitative picture only; a discretization is never
/// nonatomic.
pub fn nonatomic_refinement_demo(alpha: f64, levels: std::ops::RangeInclusive<u32>) -> Result<Vec<RefinementRow>> {
    check_alpha(alpha)?;
    let a = AcceptanceSpec::VaR { alpha };
    let mut rows = Vec::new();
    for level in levels {
        let n = 1usize << level;
        let space = ScenarioSpace::uniform(n)?;
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let touching = TradedAsset::new(&space, 1.0, Position::new(grid.clone())?)?;
        let bounded = TradedAsset::new(&space, 1.0, Position::new(grid.iter().map(|w| 0.5 + w).collect())?)?;
        let mut gaps = [0.0f64; 2];
        for (slot, s) in [&touching, &bounded].into_iter().enumerate() {
            // Event A: the top α-mass of states, where the payoff is largest.
            let top = ((alpha * n as f64).floor() as usize).max(1);
            let event: Vec<usize> = (n - top..n).collect();
            let indicator = Position::indicator_of(n, &event);
            let family = [
                indicator.scale(-s.payoff().sup_norm()),
                indicator.scale(-1.0),
                Position::zeros(n),
            ];
            for x in &family {
                let rho = evaluate(&space, &a, s, x)?;
                if !rho.is_finite() {
                    continue;
                }
                let limit = sequence_limit(|eps| evaluate(&space, &a, s, &x.shift(-eps)), LIMIT_INDEX)?;
                gaps[slot] = gaps[slot].max(limit.distance(rho));
            }
        }
        rows.push(RefinementRow {
            level,
            states: n,
            gap_touching_zero: gaps[0],
            gap_bounded_away: gaps[1],
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::exhaustive_window_subset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(p: &[f64]) -> ScenarioSpace {
        let labels = (1..=p.len()).map(|i| format!("w{i}")).collect::<Vec<_>>();
        ScenarioSpace::new(labels, p.to_vec()).unwrap()
    }

    fn pos(v: &[f64]) -> Position {
        Position::new(v.to_vec()).unwrap()
    }

    fn asset(sp: &ScenarioSpace, price: f64, payoff: &[f64]) -> TradedAsset {
        TradedAsset::new(sp, price, pos(payoff)).unwrap()
    }

    #[test]
    fn var_finiteness_examples() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let r = var_finiteness(&sp, &asset(&sp, 1.0, &[0.0, 1.0, 1.0]), 0.1).unwrap();
        assert!(r.finite_everywhere);
        assert!(r.witnesses.is_empty());

        let r = var_finiteness(&sp, &asset(&sp, 1.0, &[1.0, 0.0, 0.0]), 0.1).unwrap();
        assert!(!r.never_neg_inf && !r.never_pos_inf);
        assert_eq!(r.witnesses[0].evaluated, Amount::PosInf);
        assert_eq!(r.witnesses[1].position, Position::zeros(3));
        assert_eq!(r.witnesses[1].evaluated, Amount::NegInf);

        let sp2 = space(&[0.05, 0.05, 0.90]);
        let r = var_finiteness(&sp2, &asset(&sp2, 1.0, &[0.0, 0.0, 1.0]), 0.05).unwrap();
        assert!(!r.never_pos_inf);
        assert_eq!(r.witnesses[0].evaluated, Amount::PosInf);
    }

    #[test]
    fn tvar_finiteness_examples() {
        let sp = space(&[0.05, 0.05, 0.90]);
        let r = tvar_finiteness(&sp, &asset(&sp, 1.0, &[0.0, 1.0, 1.0]), 0.1).unwrap();
        assert!(r.finite_everywhere);
        assert_eq!(r.lipschitz_bound, Some(2.0));

        let r = tvar_finiteness(&sp, &asset(&sp, 1.0, &[0.0, 0.0, 1.0]), 0.05).unwrap();
        assert!(!r.finite_everywhere);
        assert_eq!(r.witnesses[0].evaluated, Amount::PosInf);

        for alpha in [0.01, 0.5, 0.99] {
            let r = tvar_finiteness(&sp, &TradedAsset::risk_free(&sp), alpha).unwrap();
            assert!(r.finite_everywhere);
            assert!((r.lipschitz_bound.unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn conic_finiteness_examples() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let cone = AcceptanceSpec::positive_cone();
        let r = conic_finiteness(&cone, &sp, &asset(&sp, 1.0, &[0.0, 1.0, 1.0])).unwrap();
        assert!(!r.never_pos_inf);
        assert!(r.never_neg_inf);
        assert_eq!(r.witnesses[0].evaluated, Amount::PosInf);

        let r = conic_finiteness(&cone, &sp, &asset(&sp, 1.0, &[1.0, 1.0, 1.0])).unwrap();
        assert!(r.finite_everywhere);

        let var = AcceptanceSpec::var(0.1).unwrap();
        let r = conic_finiteness(&var, &sp, &asset(&sp, 1.0, &[0.0, 1.0, 1.0])).unwrap();
        assert!(r.never_pos_inf);

        assert_eq!(
            conic_finiteness(&AcceptanceSpec::expectation(1.0), &sp, &TradedAsset::risk_free(&sp)),
            Err(RiskError::NotConic)
        );
    }

    #[test]
    fn var_pointwise_examples() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let s = asset(&sp, 1.0, &[0.0, 1.0, 1.0]);
        let r = var_pointwise_continuity(&sp, &s, 0.1, &pos(&[0.0, 0.0, 1.0])).unwrap();
        assert!(!r.continuous);
        assert!(r.lsc && !r.usc);
        assert_eq!(r.witness.unwrap().gap, 1.0);

        let r = var_pointwise_continuity(&sp, &s, 0.1, &pos(&[1.0, 1.0, 1.0])).unwrap();
        assert!(r.continuous);
        let probe = semicontinuity_probe(
            &sp,
            &AcceptanceSpec::var(0.1).unwrap(),
            &s,
            &pos(&[1.0, 1.0, 1.0]),
            64,
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(probe.continuous);

        let inf = asset(&sp, 1.0, &[1.0, 0.0, 0.0]);
        assert_eq!(
            var_pointwise_continuity(&sp, &inf, 0.1, &Position::zeros(3)),
            Err(RiskError::NotFinite)
        );
    }

    #[test]
    fn bounded_away_payoff_is_continuous_everywhere() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let s = asset(&sp, 1.0, &[0.2, 1.0, 3.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let x = pos(&[
                rng.gen_range(-2i32..=2) as f64,
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-2i32..=2) as f64,
            ]);
            assert!(var_pointwise_continuity(&sp, &s, 0.1, &x).unwrap().continuous);
        }
    }

    #[test]
    fn literal_and_shifted_zero_sets_agree() {
        // On {S_T = 0} investing changes nothing, so {X = 0} and {X̃ = 0}
        // coincide there.
        let sp = space(&[0.1, 0.15, 0.25, 0.5]);
        let s = asset(&sp, 0.9, &[0.0, 0.0, 1.0, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let x = Position::new((0..4).map(|_| rng.gen_range(-2i32..=2) as f64).collect()).unwrap();
            let r = var_sweep(&sp, &s, 0.3, &x).unwrap();
            let Some(shifted) = r.acceptable_position else { continue };
            let literal = sp.prob_of(|i| x.get(i) == 0.0 && s.payoff().get(i) == 0.0);
            let moved = sp.prob_of(|i| shifted.get(i) == 0.0 && s.payoff().get(i) == 0.0);
            assert_eq!(literal, moved);
        }
    }

    #[test]
    fn global_examples() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let r = var_global_continuity(&sp, &asset(&sp, 1.0, &[0.0, 1.0, 1.0]), 0.1).unwrap();
        assert!(!r.continuous);
        let w = r.witness.unwrap();
        assert_eq!(w.subset, Some(vec!["w2".to_string()]));
        assert_eq!(w.position, pos(&[0.0, -1.0, 0.0]));
        assert!(w.gap > GAP_THRESHOLD);

        let sp2 = space(&[0.05, 0.05, 0.90]);
        let r = var_global_continuity(&sp2, &asset(&sp2, 1.0, &[0.0, 1.0, 1.0]), 0.1).unwrap();
        assert!(r.continuous);

        let r = var_global_continuity(&sp, &asset(&sp, 1.0, &[0.5, 1.0, 2.0]), 0.1).unwrap();
        assert!(r.continuous);
    }

    #[test]
    fn global_continuity_rejects_large_spaces() {
        let sp = ScenarioSpace::uniform(50).unwrap();
        let mut payoff = vec![1.0; 50];
        payoff[0] = 0.0;
        let s = TradedAsset::new(&sp, 1.0, Position::new(payoff).unwrap()).unwrap();
        assert!(matches!(
            var_global_continuity(&sp, &s, 0.1),
            Err(RiskError::TooManyStates { count: 49, limit: 44 })
        ));
    }

    #[test]
    fn global_continuity_on_continuous_fixture_matches_probes() {
        let sp = space(&[0.05, 0.05, 0.90]);
        let s = asset(&sp, 1.0, &[0.0, 1.0, 1.0]);
        let a = AcceptanceSpec::var(0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let x = pos(&[
                rng.gen_range(-2i32..=2) as f64 / 2.0,
                rng.gen_range(-2i32..=2) as f64 / 2.0,
                rng.gen_range(-2.0..2.0),
            ]);
            let probe = semicontinuity_probe(&sp, &a, &s, &x, 1 << 20, &SolverOptions::default()).unwrap();
            assert!(probe.continuous, "{x:?}");
        }
    }

    #[test]
    fn meet_in_the_middle_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let n = rng.gen_range(0..=14);
            let items: Vec<f64> = (0..n).map(|_| rng.gen_range(1..20) as f64 / 100.0).collect();
            let lo = rng.gen_range(0..30) as f64 / 100.0;
            let hi = lo + rng.gen_range(0..10) as f64 / 100.0;
            let fast = find_window_subset(&items, lo, hi, 1e-12);
            let slow = exhaustive_window_subset(&items, lo, hi, 1e-12);
            assert_eq!(fast.is_some(), slow.is_some(), "{items:?} ({lo}, {hi}]");
            if let Some(chosen) = fast {
                let sum: f64 = chosen.iter().map(|&i| items[i]).sum();
                assert!(sum > lo + 1e-12 - 1e-15 && sum <= hi + 1e-12 + 1e-15);
            }
        }
    }

    #[test]
    fn probe_examples() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let s = asset(&sp, 1.0, &[0.0, 1.0, 1.0]);
        let var = AcceptanceSpec::var(0.1).unwrap();
        let r = semicontinuity_probe(&sp, &var, &s, &pos(&[0.0, 0.0, 1.0]), 64, &SolverOptions::default()).unwrap();
        assert!(r.lsc && !r.usc);
        assert_eq!(r.witness.unwrap().gap, 1.0);

        let sp2 = space(&[0.05, 0.05, 0.90]);
        let s2 = asset(&sp2, 1.0, &[0.0, 1.0, 1.0]);
        let tv = AcceptanceSpec::tvar(0.1).unwrap();
        let r = semicontinuity_probe(&sp2, &tv, &s2, &pos(&[0.3, -1.0, 2.0]), 64, &SolverOptions::default()).unwrap();
        assert!(r.continuous);

        let ex = AcceptanceSpec::expectation(0.0);
        let r = semicontinuity_probe(&sp2, &ex, &s2, &pos(&[0.3, -1.0, 2.0]), 64, &SolverOptions::default()).unwrap();
        assert!(r.continuous);
    }

    #[test]
    fn lipschitz_examples() {
        let sp = space(&[0.05, 0.05, 0.90]);
        assert_eq!(tvar_lipschitz_bound(&sp, &TradedAsset::risk_free(&sp), 0.1).unwrap(), 1.0);
        assert_eq!(tvar_lipschitz_bound(&sp, &asset(&sp, 1.0, &[0.0, 1.0, 1.0]), 0.1).unwrap(), 2.0);
        assert_eq!(tvar_lipschitz_bound(&sp, &asset(&sp, 2.0, &[0.0, 1.0, 1.0]), 0.1).unwrap(), 4.0);
        assert_eq!(
            tvar_lipschitz_bound(&sp, &asset(&sp, 1.0, &[0.0, 0.0, 1.0]), 0.1),
            Err(RiskError::NotFinite)
        );
    }

    #[test]
    fn refinement_demo_shape() {
        let rows = nonatomic_refinement_demo(0.125, 4..=8).unwrap();
        assert_eq!(rows.len(), 5);
        for row in rows {
            assert!(row.gap_touching_zero >= 0.5, "{row:?}");
            assert_eq!(row.gap_bounded_away, 0.0, "{row:?}");
        }
    }
}
