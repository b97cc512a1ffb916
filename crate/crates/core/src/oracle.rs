//! Brute-force reference implementations.
//!
//! Nothing here calls into the quantile, acceptance or capital solvers: the
//! quantile is found by pairwise comparison, membership is re-derived from
//! the definitions and the capital requirement is located by scanning a
//! grid of investment amounts. These routines are slow on purpose and back
//! the test suite and `riskcap oracle-check`.

use crate::acceptance::AcceptanceSpec;
use crate::error::{Result, RiskError};
use crate::types::{Confidence, ExtendedAmount, Position, ScenarioSpace, TradedAsset, PROB_TOL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub coarse_step: f64,
    pub refine_rounds: u32,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, coarse_step: f64, refine_rounds: u32) -> Result<Self> {
        let grid = Self {
            lo,
            hi,
            coarse_step,
            refine_rounds,
        };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(RiskError::DegenerateGrid(format!(
                "need lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if !(self.coarse_step > 0.0) {
            return Err(RiskError::DegenerateGrid(format!(
                "coarse step must be positive, got {}",
                self.coarse_step
            )));
        }
        if self.refine_rounds < 1 {
            return Err(RiskError::DegenerateGrid("at least one refinement round".into()));
        }
        Ok(())
    }

    /// Spacing after all refinement rounds.
    pub fn final_step(&self) -> f64 {
        self.coarse_step / 10f64.powi(self.refine_rounds as i32)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: -100.0,
            hi: 100.0,
            coarse_step: 0.01,
            refine_rounds: 4,
        }
    }
}

fn prob_where(space: &ScenarioSpace, mut pred: impl FnMut(f64) -> bool, x: &Position) -> f64 {
    let mut total = 0.0;
    for (i, &p) in space.probs().iter().enumerate() {
        if p > 0.0 && pred(x.values()[i]) {
            total += p;
        }
    }
    total
}

/// Lower-tail quantile by pairwise comparison: the smallest attained value
/// `v` with `ℙ[X ≤ v] > alpha`.
pub fn oracle_quantile(space: &ScenarioSpace, x: &Position, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RiskError::AlphaOutOfRange(alpha));
    }
    space.check_bound(x)?;
    let mut best = f64::INFINITY;
    let mut largest = f64::NEG_INFINITY;
    for (i, &p) in space.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let v = x.values()[i];
        largest = largest.max(v);
        if v < best && prob_where(space, |w| w <= v, x) > alpha + PROB_TOL {
            best = v;
        }
    }
    Ok(if best.is_finite() { best } else { largest })
}

/// `VaR_α` located by scanning `m` upward from `lo` and returning the first
/// grid point with `ℙ[X + m < 0] ≤ α`.
pub fn oracle_var_grid(
    space: &ScenarioSpace,
    x: &Position,
    alpha: f64,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RiskError::AlphaOutOfRange(alpha));
    }
    space.check_bound(x)?;
    let n = ((hi - lo) / step).floor() as i64;
    for k in 0..=n {
        let m = lo + k as f64 * step;
        if prob_where(space, |v| v + m < 0.0, x) <= alpha + PROB_TOL {
            return Ok(m);
        }
    }
    Err(RiskError::DegenerateGrid("no acceptable grid point".into()))
}

/// `TVaR_α` through the tail-average identity
/// `-(E[X·1{X<q}] + q·(α − ℙ[X<q])) / α` with `q` the lower quantile.
pub fn oracle_tvar(space: &ScenarioSpace, x: &Position, alpha: f64) -> Result<f64> {
    let q = tail_quantile(space, x, alpha)?;
    let mut below_mean = 0.0;
    let mut below_mass = 0.0;
    for (i, &p) in space.probs().iter().enumerate() {
        let v = x.values()[i];
        if p > 0.0 && v < q {
            below_mean += p * v;
            below_mass += p;
        }
    }
    Ok(-(below_mean + q * (alpha - below_mass)) / alpha + 0.0)
}

/// Quantile for the tail identity. Unlike [`oracle_quantile`] it carries no
/// slack, since the identity is continuous in the probabilities.
fn tail_quantile(space: &ScenarioSpace, x: &Position, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RiskError::AlphaOutOfRange(alpha));
    }
    space.check_bound(x)?;
    let mut best = f64::INFINITY;
    let mut largest = f64::NEG_INFINITY;
    for (i, &p) in space.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let v = x.values()[i];
        largest = largest.max(v);
        if v < best && prob_where(space, |w| w <= v, x) > alpha {
            best = v;
        }
    }
    Ok(if best.is_finite() { best } else { largest })
}

/// Membership re-derived from the definition of each built-in set.
pub fn oracle_contains(a: &AcceptanceSpec, space: &ScenarioSpace, y: &Position) -> Result<bool> {
    space.check_bound(y)?;
    Ok(match a {
        AcceptanceSpec::VaR { alpha } => prob_where(space, |v| v < 0.0, y) <= alpha + PROB_TOL,
        AcceptanceSpec::TVaR { alpha } => oracle_tvar(space, y, *alpha)? <= 0.0,
        AcceptanceSpec::Expectation { floor } => {
            let mut mean = 0.0;
            for (i, &p) in space.probs().iter().enumerate() {
                mean += p * y.values()[i];
            }
            mean >= *floor
        }
        AcceptanceSpec::PositiveCone => y.values().iter().all(|&v| v >= 0.0),
        AcceptanceSpec::Custom(c) => c.accepts(space, y),
    })
}

/// `inf{m : X + (m/S₀)·S_T ∈ A}` evaluated literally on a grid.
pub fn oracle_capital(
    a: &AcceptanceSpec,
    space: &ScenarioSpace,
    s: &TradedAsset,
    x: &Position,
    grid: &GridSpec,
) -> Result<ExtendedAmount> {
    grid.validate()?;
    space.check_bound(x)?;
    let accepts = |m: f64| -> Result<bool> {
        let y = Position::new(
            x.values()
                .iter()
                .zip(s.payoff().values())
                .map(|(xv, sv)| xv + m / s.price() * sv)
                .collect(),
        )?;
        oracle_contains(a, space, &y)
    };

    let count = ((grid.hi - grid.lo) / grid.coarse_step).floor() as i64;
    let mut first = None;
    for k in 0..=count {
        if accepts(grid.lo + k as f64 * grid.coarse_step)? {
            first = Some(k);
            break;
        }
    }
    let Some(k) = first else {
        return Ok(ExtendedAmount::pos_inf(Confidence::Numeric(grid.coarse_step)));
    };
    if k == 0 {
        let mut unbounded = true;
        for factor in [2.0, 4.0, 8.0] {
            let probe = if grid.lo < 0.0 {
                grid.lo * factor
            } else {
                grid.lo - (grid.hi - grid.lo) * factor
            };
            if !accepts(probe)? {
                unbounded = false;
            }
        }
        if unbounded {
            return Ok(ExtendedAmount::neg_inf(Confidence::Numeric(grid.coarse_step)));
        }
        return Err(RiskError::DegenerateGrid(
            "acceptable at the lower grid edge but not unbounded below".into(),
        ));
    }

    let mut rejected = grid.lo + (k - 1) as f64 * grid.coarse_step;
    let mut accepted = grid.lo + k as f64 * grid.coarse_step;
    let mut step = grid.coarse_step;
    for _ in 0..grid.refine_rounds {
        step /= 10.0;
        let base = rejected;
        for j in 1..=10 {
            let m = if j == 10 { accepted } else { base + j as f64 * step };
            if accepts(m)? {
                accepted = m;
                break;
            }
            rejected = m;
        }
    }
    Ok(ExtendedAmount::numeric(accepted, step, None))
}

/// Exhaustive search for a subset of `items` whose sum lies in `(lo, hi]`,
/// both endpoints taken with an absolute slack of `tol`.
pub fn exhaustive_window_subset(items: &[f64], lo: f64, hi: f64, tol: f64) -> Option<Vec<usize>> {
    assert!(items.len() <= 24, "exhaustive enumeration capped at 24 items");
    for mask in 0u32..(1u32 << items.len()) {
        let mut sum = 0.0;
        for (i, &w) in items.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sum += w;
            }
        }
        if sum > lo + tol && sum <= hi + tol {
            return Some((0..items.len()).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acceptance::ConeFlags;
    use crate::types::Amount;

    fn space(p: &[f64]) -> ScenarioSpace {
        let labels = (1..=p.len()).map(|i| format!("w{i}")).collect::<Vec<_>>();
        ScenarioSpace::new(labels, p.to_vec()).unwrap()
    }

    fn pos(v: &[f64]) -> Position {
        Position::new(v.to_vec()).unwrap()
    }

    fn bond(sp: &ScenarioSpace, payoff: &[f64]) -> TradedAsset {
        TradedAsset::new(sp, 1.0, pos(payoff)).unwrap()
    }

    #[test]
    fn grid_reproduces_var_fixture() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let s = bond(&sp, &[0.0, 1.0, 1.0]);
        let a = AcceptanceSpec::var(0.1).unwrap();
        let r = oracle_capital(&a, &sp, &s, &pos(&[0.0, 0.0, 1.0]), &GridSpec::default()).unwrap();
        let v = r.finite().unwrap();
        assert!((v + 1.0).abs() <= 1e-6, "{v}");
        assert!(matches!(r.confidence, Confidence::Numeric(t) if (t - 1e-6).abs() < 1e-18));
    }

    #[test]
    fn grid_sees_unreachable_state() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let s = bond(&sp, &[0.0, 1.0, 1.0]);
        let r = oracle_capital(
            &AcceptanceSpec::positive_cone(),
            &sp,
            &s,
            &Position::constant(3, -1.0),
            &GridSpec::default(),
        )
        .unwrap();
        assert_eq!(r.value, Amount::PosInf);
    }

    #[test]
    fn grid_reproduces_expectation_closed_form() {
        let sp = space(&[0.05, 0.05, 0.90]);
        let s = bond(&sp, &[0.0, 1.0, 1.0]);
        let r = oracle_capital(
            &AcceptanceSpec::expectation(0.0),
            &sp,
            &s,
            &pos(&[0.0, 0.0, 1.0]),
            &GridSpec::default(),
        )
        .unwrap();
        assert!((r.finite().unwrap() + 18.0 / 19.0).abs() <= 1e-6);
    }

    #[test]
    fn grid_detects_acceptability_arbitrage() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let s = bond(&sp, &[1.0, 0.0, 0.0]);
        let r = oracle_capital(
            &AcceptanceSpec::var(0.1).unwrap(),
            &sp,
            &s,
            &Position::zeros(3),
            &GridSpec::default(),
        )
        .unwrap();
        assert_eq!(r.value, Amount::NegInf);
    }

    #[test]
    fn degenerate_grids() {
        assert!(GridSpec::new(1.0, 1.0, 0.1, 1).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0.1, 0).is_err());
    }

    #[test]
    fn tail_identity_examples() {
        let sp = space(&[0.05, 0.05, 0.90]);
        assert_eq!(oracle_tvar(&sp, &pos(&[0.0, 0.0, 1.0]), 0.1).unwrap(), 0.0);
        assert!((oracle_tvar(&sp, &pos(&[-1.0, 0.0, 1.0]), 0.1).unwrap() - 0.5).abs() < 1e-15);
        assert!((oracle_tvar(&sp, &Position::constant(3, 4.0), 0.3).unwrap() + 4.0).abs() < 1e-15);
    }

    #[test]
    fn enlarging_the_set_never_raises_the_oracle() {
        let sp = space(&[0.1, 0.2, 0.3, 0.4]);
        let s = bond(&sp, &[0.0, 0.5, 1.0, 2.0]);
        let base = AcceptanceSpec::var(0.15).unwrap();
        let union = AcceptanceSpec::custom(
            &sp,
            "var or mean",
            ConeFlags { closed: true, ..Default::default() },
            5,
            |sp, x| {
                oracle_contains(&AcceptanceSpec::VaR { alpha: 0.15 }, sp, x).unwrap()
                    || sp.expectation(x) >= 1.0
            },
        )
        .unwrap();
        let grid = GridSpec::new(-50.0, 50.0, 0.05, 2).unwrap();
        for x in [
            pos(&[-1.0, 2.0, -3.0, 0.5]),
            pos(&[0.0, 0.0, 0.0, 0.0]),
            pos(&[3.0, -4.0, 1.0, 1.0]),
        ] {
            let small = oracle_capital(&base, &sp, &s, &x, &grid).unwrap();
            let big = oracle_capital(&union, &sp, &s, &x, &grid).unwrap();
            assert!(big.value <= small.value, "{:?} > {:?}", big.value, small.value);
        }
    }

    #[test]
    fn exhaustive_window() {
        assert_eq!(exhaustive_window_subset(&[0.06, 0.89], 0.05, 0.1, 1e-12), Some(vec![0]));
        assert_eq!(exhaustive_window_subset(&[0.05, 0.9], 0.05, 0.1, 1e-12), None);
    }
}
