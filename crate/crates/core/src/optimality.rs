//! Comparing capital requirements across two eligible assets with the same
//! price.
//!
//! The conditions involved quantify over every position, so they are
//! checked by seeded, budgeted refutation searches. `NotRefuted` is a
//! bounded-search verdict, never a proof.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::acceptance::AcceptanceSpec;
use crate::capital::required_capital;
use crate::error::{Result, RiskError};
use crate::types::{Amount, Position, ScenarioSpace, TradedAsset};

/// Smallest gap between two capital amounts that counts as a violation.
pub const STRICT_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AssetPair {
    s: TradedAsset,
    r: TradedAsset,
}

impl AssetPair {
    pub fn new(space: &ScenarioSpace, s: TradedAsset, r: TradedAsset) -> Result<Self> {
        space.check_bound(s.payoff())?;
        space.check_bound(r.payoff())?;
        if s.price() != r.price() {
            return Err(RiskError::PriceMismatch(s.price(), r.price()));
        }
        Ok(Self { s, r })
    }

    pub fn s(&self) -> &TradedAsset {
        &self.s
    }

    pub fn r(&self) -> &TradedAsset {
        &self.r
    }

    pub fn price(&self) -> f64 {
        self.s.price()
    }

    /// `R_T − S_T`, the payoff of the zero-cost long/short leg.
    pub fn spread(&self) -> Position {
        self.r.payoff() - self.s.payoff()
    }

    fn identical(&self) -> bool {
        self.s.payoff() == self.r.payoff()
    }
}

/// `(m/P)·S_T + λ·(R_T − S_T)`. Costs exactly `m` at time zero for every `λ`.
pub fn leveraged_payoff(pair: &AssetPair, m: f64, lambda: f64) -> Position {
    pair.s
        .payoff()
        .scale(m / pair.price())
        .add_scaled(lambda, &pair.spread())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictStatus {
    Refuted,
    NotRefuted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub position: Position,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Capital under the first set and asset, when the check compares two.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_left: Option<Amount>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_right: Option<Amount>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub witness: Option<Violation>,
    pub trials: usize,
    pub seed: u64,
}

impl Verdict {
    pub fn is_refuted(&self) -> bool {
        self.status == VerdictStatus::Refuted
    }
}

/// The structured leverage grid `{±10^k : k = −6..6}`.
pub fn lambda_grid() -> Vec<f64> {
    (-6..=6)
        .flat_map(|k| {
            let v = 10f64.powi(k);
            [v, -v]
        })
        .collect()
}

fn random_lambda(rng: &mut ChaCha8Rng) -> f64 {
    let magnitude = 10f64.powf(rng.gen_range(-6.0..6.0));
    if rng.gen_bool(0.5) {
        magnitude
    } else {
        -magnitude
    }
}

fn rho(space: &ScenarioSpace, a: &AcceptanceSpec, s: &TradedAsset, x: &Position) -> Result<Amount> {
    Ok(required_capital(space, a, s, x)?.amount.value)
}

/// `a < b` with margin, in the extended order.
fn strictly_below(a: Amount, b: Amount) -> bool {
    match (a, b) {
        (Amount::Finite(a), Amount::Finite(b)) => a < b - STRICT_MARGIN,
        _ => a < b,
    }
}

fn differ(a: Amount, b: Amount) -> bool {
    strictly_below(a, b) || strictly_below(b, a)
}

/// Searches for `λ ≠ 0` making the fully leveraged position
/// `(ρ_{A,S}(0)/P)·S_T + λ·(R_T − S_T)` acceptable. `Refuted` means leverage
/// is acceptable for this set and pair.
pub fn no_leverage_check(
    space: &ScenarioSpace,
    a: &AcceptanceSpec,
    pair: &AssetPair,
    budget: usize,
    seed: u64,
) -> Result<Verdict> {
    let base = rho(space, a, &pair.s, &Position::zeros(space.len()))?;
    let Amount::Finite(m) = base else {
        return Err(RiskError::NotFinite);
    };
    let mut trials = 0;
    if pair.identical() {
        return Ok(Verdict {
            status: VerdictStatus::NotRefuted,
            witness: None,
            trials,
            seed,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let randoms: Vec<f64> = (0..budget).map(|_| random_lambda(&mut rng)).collect();
    for lambda in lambda_grid().into_iter().chain(randoms) {
        trials += 1;
        let y = leveraged_payoff(pair, m, lambda);
        if a.in_closure(space, &y)? {
            return Ok(Verdict {
                status: VerdictStatus::Refuted,
                witness: Some(Violation {
                    position: y,
                    lambda: Some(lambda),
                    rho_left: None,
                    rho_right: None,
                    reason: format!("leveraged position with lambda = {lambda} lies in the closure"),
                }),
                trials,
                seed,
            });
        }
    }
    Ok(Verdict {
        status: VerdictStatus::NotRefuted,
        witness: None,
        trials,
        seed,
    })
}

fn random_position(rng: &mut ChaCha8Rng, pair: &AssetPair, n: usize) -> Position {
    let scale = 1.0 + pair.s.payoff().sup_norm().max(pair.r.payoff().sup_norm());
    let values: Vec<f64> = match rng.gen_range(0..4) {
        // Small integers hit exact zeros and ties.
        0 => (0..n).map(|_| rng.gen_range(-3i32..=3) as f64 * scale / 2.0).collect(),
        1 => (0..n).map(|_| rng.gen_range(-scale..scale)).collect(),
        2 => (0..n)
            .map(|_| if rng.gen_bool(0.6) { 0.0 } else { rng.gen_range(-scale..scale) })
            .collect(),
        _ => {
            let (cs, cr) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            (0..n)
                .map(|i| {
                    cs * pair.s.payoff().get(i) + cr * pair.r.payoff().get(i) + rng.gen_range(-2i32..=2) as f64
                })
                .collect()
        }
    };
    Position::new(values).expect("finite draws")
}

/// Evaluates `ρ_{A,S}` and `ρ_{B,R}` at each candidate and returns the first
/// one where they differ by more than [`STRICT_MARGIN`].
fn verify_difference(
    space: &ScenarioSpace,
    a: &AcceptanceSpec,
    b: &AcceptanceSpec,
    pair: &AssetPair,
    candidates: Vec<Position>,
    lambda: Option<f64>,
    reason: &str,
) -> Result<Option<Violation>> {
    for p in candidates {
        let left = rho(space, a, &pair.s, &p)?;
        let right = rho(space, b, &pair.r, &p)?;
        if differ(left, right) {
            return Ok(Some(Violation {
                position: p,
                lambda,
                rho_left: Some(left),
                rho_right: Some(right),
                reason: reason.into(),
            }));
        }
    }
    Ok(None)
}

/// Refutation search for `ρ_{A,S} = ρ_{B,R}`: looks for positions where the
/// closures of `A` and `B` disagree, or where a translate along
/// `R_T − S_T` leaves the closure of `A`. Every hit is confirmed by
/// evaluating both requirements.
pub fn equality_check(
    space: &ScenarioSpace,
    a: &AcceptanceSpec,
    b: &AcceptanceSpec,
    pair: &AssetPair,
    budget: usize,
    seed: u64,
) -> Result<Verdict> {
    let n = space.len();
    let (s_t, r_t) = (pair.s.payoff(), pair.r.payoff());
    let spread = pair.spread();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = 0;
    for _ in 0..budget {
        trials += 1;
        let x = random_position(&mut rng, pair, n);
        let in_a = a.in_closure(space, &x)?;
        let found = if in_a != b.in_closure(space, &x)? {
            verify_difference(space, a, b, pair, vec![x.clone()], None, "closure mismatch")?
        } else {
            None
        };
        let found = match found {
            Some(v) => Some(v),
            None if in_a && !pair.identical() => {
                let mut hit = None;
                for lambda in lambda_grid() {
                    let y = x.add_scaled(lambda, &spread);
                    if a.in_closure(space, &y)? {
                        continue;
                    }
                    let candidates = vec![
                        x.clone(),
                        y,
                        x.add_scaled(-lambda, s_t),
                        x.add_scaled(lambda, r_t),
                        x.add_scaled(lambda, s_t),
                        x.add_scaled(-lambda, r_t),
                    ];
                    hit = verify_difference(space, a, b, pair, candidates, Some(lambda), "translation escape")?;
                    if hit.is_some() {
                        break;
                    }
                }
                hit
            }
            None => None,
        };
        if let Some(witness) = found {
            return Ok(Verdict {
                status: VerdictStatus::Refuted,
                witness: Some(witness),
                trials,
                seed,
            });
        }
    }
    Ok(Verdict {
        status: VerdictStatus::NotRefuted,
        witness: None,
        trials,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub position: Position,
    pub rho_s: Amount,
    pub rho_r: Amount,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DominanceOutcome {
    /// `ρ_S < ρ_R` somewhere and `ρ_S > ρ_R` somewhere else.
    Refuted {
        witness_low: Comparison,
        witness_high: Comparison,
        trials: usize,
        seed: u64,
    },
    NotRefuted {
        witness_low: Option<Comparison>,
        witness_high: Option<Comparison>,
        equality: Verdict,
        trials: usize,
        seed: u64,
    },
}

struct DominanceSearch<'a> {
    space: &'a ScenarioSpace,
    a: &'a AcceptanceSpec,
    pair: &'a AssetPair,
    low: Option<Comparison>,
    high: Option<Comparison>,
    trials: usize,
}

impl DominanceSearch<'_> {
    fn done(&self) -> bool {
        self.low.is_some() && self.high.is_some()
    }

    fn try_position(&mut self, x: Position) -> Result<()> {
        self.trials += 1;
        let rho_s = rho(self.space, self.a, &self.pair.s, &x)?;
        let rho_r = rho(self.space, self.a, &self.pair.r, &x)?;
        if self.low.is_none() && strictly_below(rho_s, rho_r) {
            self.low = Some(Comparison { position: x, rho_s, rho_r });
            self.mirror(true)?;
        } else if self.high.is_none() && strictly_below(rho_r, rho_s) {
            self.high = Some(Comparison { position: x, rho_s, rho_r });
            self.mirror(false)?;
        }
        Ok(())
    }

    /// Builds the opposite witness from a one-sided one. With a low witness
    /// `W` and `c = ρ_S(W)/P`, the position `X = W + c·S_T` sits on the
    /// boundary of the closure while `X + c·(R_T − S_T)` lies outside it, and
    /// `W + c·(S_T + R_T)` then has `ρ_S > ρ_R`. Multiples of the escape
    /// direction are tried as well to widen the gap.
    fn mirror(&mut self, from_low: bool) -> Result<()> {
        let (w, anchor) = match (from_low, &self.low, &self.high) {
            (true, Some(c), _) => (c.position.clone(), c.rho_s),
            (false, _, Some(c)) => (c.position.clone(), c.rho_r),
            _ => return Ok(()),
        };
        let Amount::Finite(anchor) = anchor else {
            return Ok(());
        };
        let c = anchor / self.pair.price();
        let (s_t, r_t) = (self.pair.s.payoff().clone(), self.pair.r.payoff().clone());
        let (own, other) = if from_low { (&s_t, &r_t) } else { (&r_t, &s_t) };
        let boundary = w.add_scaled(c, own);
        for k in [0.0, 1.0, 10.0, 100.0, -1.0, -10.0] {
            if self.done() {
                break;
            }
            // λ = c + k·max(1, |c|) moves further along the escape direction.
            let lambda = c + k * c.abs().max(1.0);
            self.try_position(boundary.add_scaled(lambda, other))?;
        }
        Ok(())
    }
}

/// Searches for positions on both sides of `ρ_{A,S}` versus `ρ_{A,R}`.
/// Finding both shows neither asset dominates the other.
pub fn dominance_refute(
    space: &ScenarioSpace,
    a: &AcceptanceSpec,
    pair: &AssetPair,
    budget: usize,
    seed: u64,
) -> Result<DominanceOutcome> {
    let n = space.len();
    let mut search = DominanceSearch {
        space,
        a,
        pair,
        low: None,
        high: None,
        trials: 0,
    };
    let (s_t, r_t) = (pair.s.payoff().clone(), pair.r.payoff().clone());
    let spread = pair.spread();

    let mut fixed: Vec<Position> = Vec::new();
    for i in 0..n {
        let e = Position::indicator(n, i);
        fixed.push(e.scale(-1.0));
        fixed.push(e);
    }
    fixed.push(s_t.scale(-1.0));
    fixed.push(r_t.scale(-1.0));
    let box_scale = 1.0 + s_t.sup_norm().max(r_t.sup_norm());
    for c in [-1.0, 1.0] {
        fixed.push(Position::constant(n, c * box_scale));
    }
    for x in fixed {
        if search.done() {
            break;
        }
        search.try_position(x)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = lambda_grid();
    let mut draws = 0;
    while !search.done() && draws < budget {
        draws += 1;
        let x = random_position(&mut rng, pair, n);
        if a.contains(space, &x)? && !pair.identical() {
            let lambda = grid[rng.gen_range(0..grid.len())];
            search.try_position(x.add_scaled(-lambda, &spread))?;
        }
        if !search.done() {
            search.try_position(x)?;
        }
    }

    let mut equality = None;
    if !search.done() {
        let verdict = equality_check(space, a, a, pair, budget, seed)?;
        if let Some(w) = &verdict.witness {
            search.try_position(w.position.clone())?;
        }
        equality = Some(verdict);
    }

    let trials = search.trials;
    Ok(match (search.low, search.high) {
        (Some(witness_low), Some(witness_high)) => DominanceOutcome::Refuted {
            witness_low,
            witness_high,
            trials,
            seed,
        },
        (witness_low, witness_high) => DominanceOutcome::NotRefuted {
            witness_low,
            witness_high,
            equality: equality.expect("equality search ran"),
            trials,
            seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn space(p: &[f64]) -> ScenarioSpace {
        let labels = (1..=p.len()).map(|i| format!("w{i}")).collect::<Vec<_>>();
        ScenarioSpace::new(labels, p.to_vec()).unwrap()
    }

    fn pos(v: &[f64]) -> Position {
        Position::new(v.to_vec()).unwrap()
    }

    fn pair(sp: &ScenarioSpace, s: &[f64], r: &[f64]) -> AssetPair {
        AssetPair::new(
            sp,
            TradedAsset::new(sp, 1.0, pos(s)).unwrap(),
            TradedAsset::new(sp, 1.0, pos(r)).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn leveraged_payoff_examples() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let p = pair(&sp, &[0.0, 1.0, 1.0], &[1.0, 1.0, 1.0]);
        assert_eq!(leveraged_payoff(&p, 3.0, 0.0), pos(&[0.0, 3.0, 3.0]));
        assert_eq!(leveraged_payoff(&p, 0.0, 1.0), pos(&[1.0, 0.0, 0.0]));
        assert_eq!(leveraged_payoff(&p, 0.0, 2.0), pos(&[2.0, 0.0, 0.0]));
    }

    #[test]
    fn price_mismatch() {
        let sp = space(&[0.5, 0.5]);
        let s = TradedAsset::new(&sp, 1.0, pos(&[1.0, 1.0])).unwrap();
        let r = TradedAsset::new(&sp, 2.0, pos(&[1.0, 1.0])).unwrap();
        assert_eq!(AssetPair::new(&sp, s, r), Err(RiskError::PriceMismatch(1.0, 2.0)));
    }

    #[test]
    fn no_leverage_examples() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let p = pair(&sp, &[0.0, 1.0, 1.0], &[1.0, 1.0, 1.0]);
        let var = AcceptanceSpec::var(0.1).unwrap();
        let v = no_leverage_check(&sp, &var, &p, 100, 1).unwrap();
        assert!(v.is_refuted());
        let w = v.witness.unwrap();
        assert!(var.in_closure(&sp, &w.position).unwrap());
        assert_ne!(w.lambda, Some(0.0));

        // (λ, 0, 0) with λ > 0 is a positive position, so the cone accepts
        // leverage in one direction.
        let cone = AcceptanceSpec::positive_cone();
        let v = no_leverage_check(&sp, &cone, &p, 100, 1).unwrap();
        assert!(v.is_refuted());
        assert!(v.witness.unwrap().lambda.unwrap() > 0.0);

        // A spread with both signs can never be positive.
        let mixed = pair(&sp, &[0.0, 1.0, 1.0], &[1.0, 0.0, 2.0]);
        let v = no_leverage_check(&sp, &cone, &mixed, 500, 1).unwrap();
        assert_eq!(v.status, VerdictStatus::NotRefuted);
        assert_eq!(v.trials, 26 + 500);

        let same = pair(&sp, &[0.0, 1.0, 1.0], &[0.0, 1.0, 1.0]);
        assert!(!no_leverage_check(&sp, &var, &same, 100, 1).unwrap().is_refuted());

        let inf = pair(&sp, &[1.0, 0.0, 0.0], &[1.0, 1.0, 1.0]);
        assert_eq!(no_leverage_check(&sp, &var, &inf, 10, 1), Err(RiskError::NotFinite));
    }

    #[test]
    fn equality_examples() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let p = pair(&sp, &[0.0, 1.0, 1.0], &[1.0, 1.0, 1.0]);
        let var = AcceptanceSpec::var(0.1).unwrap();
        let v = equality_check(&sp, &var, &var, &p, 500, 7).unwrap();
        assert!(v.is_refuted());
        let w = v.witness.unwrap();
        assert!(differ(w.rho_left.unwrap(), w.rho_right.unwrap()));
        assert_eq!(rho(&sp, &var, p.s(), &w.position).unwrap(), w.rho_left.unwrap());

        let rf = pair(&sp, &[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]);
        let tv = AcceptanceSpec::tvar(0.1).unwrap();
        let v = equality_check(&sp, &var, &tv, &rf, 500, 7).unwrap();
        assert!(v.is_refuted());

        // The specific mismatch point.
        let x = pos(&[-10.0, 0.0, 0.0]);
        assert!(var.in_closure(&sp, &x).unwrap());
        assert!(!tv.in_closure(&sp, &x).unwrap());
        assert_eq!(rho(&sp, &tv, rf.s(), &x).unwrap(), Amount::Finite(5.0));
    }

    #[test]
    fn specific_dominance_witnesses() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let p = pair(&sp, &[0.0, 1.0, 1.0], &[1.0, 1.0, 1.0]);
        let var = AcceptanceSpec::var(0.1).unwrap();
        let low = pos(&[0.0, -5.0, 1.0]);
        assert_eq!(rho(&sp, &var, p.s(), &low).unwrap(), Amount::Finite(-1.0));
        assert_eq!(rho(&sp, &var, p.r(), &low).unwrap(), Amount::Finite(0.0));
        let high = pos(&[-1.0, -2.0, 5.0]);
        assert_eq!(rho(&sp, &var, p.s(), &high).unwrap(), Amount::Finite(2.0));
        assert_eq!(rho(&sp, &var, p.r(), &high).unwrap(), Amount::Finite(1.0));

        match dominance_refute(&sp, &var, &p, 500, 3).unwrap() {
            DominanceOutcome::Refuted { witness_low, witness_high, .. } => {
                assert!(strictly_below(witness_low.rho_s, witness_low.rho_r));
                assert!(strictly_below(witness_high.rho_r, witness_high.rho_s));
            }
            other => panic!("expected both witnesses, got {other:?}"),
        }
    }

    #[test]
    fn tvar_dominance_fixture() {
        let sp = space(&[0.05, 0.05, 0.90]);
        let p = pair(&sp, &[0.0, 1.0, 1.0], &[1.0, 1.0, 1.0]);
        let tv = AcceptanceSpec::tvar(0.1).unwrap();
        match dominance_refute(&sp, &tv, &p, 500, 3).unwrap() {
            DominanceOutcome::Refuted { witness_low, witness_high, .. } => {
                for w in [&witness_low, &witness_high] {
                    assert_eq!(rho(&sp, &tv, p.s(), &w.position).unwrap(), w.rho_s);
                    assert_eq!(rho(&sp, &tv, p.r(), &w.position).unwrap(), w.rho_r);
                }
            }
            other => panic!("expected both witnesses, got {other:?}"),
        }
    }

    #[test]
    fn identical_assets_are_never_refuted() {
        let sp = space(&[0.05, 0.06, 0.89]);
        let p = pair(&sp, &[0.0, 1.0, 1.0], &[0.0, 1.0, 1.0]);
        for a in [
            AcceptanceSpec::var(0.1).unwrap(),
            AcceptanceSpec::tvar(0.2).unwrap(),
            AcceptanceSpec::expectation(0.5),
        ] {
            match dominance_refute(&sp, &a, &p, 200, 9).unwrap() {
                DominanceOutcome::NotRefuted { witness_low, witness_high, equality, .. } => {
                    assert!(witness_low.is_none() && witness_high.is_none());
                    assert!(!equality.is_refuted());
                }
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn lambda_grid_shape() {
        let g = lambda_grid();
        assert_eq!(g.len(), 26);
        assert!(g.contains(&1e-6) && g.contains(&-1e6));
        assert!(!g.contains(&0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn equality_with_itself_is_never_refuted(seed in any::<u64>(), budget in 1usize..60, alpha in 0.05f64..0.5) {
            let sp = space(&[0.05, 0.06, 0.89]);
            let p = pair(&sp, &[0.0, 1.0, 1.0], &[0.0, 1.0, 1.0]);
            for a in [AcceptanceSpec::var(alpha).unwrap(), AcceptanceSpec::tvar(alpha).unwrap()] {
                prop_assert!(!equality_check(&sp, &a, &a, &p, budget, seed).unwrap().is_refuted());
            }
        }

        #[test]
        fn leveraged_leg_is_free(m in -1e3f64..1e3, lambda in -1e3f64..1e3, price in 0.1f64..10.0) {
            // Cost of (m/P)·S_T + λ·(R_T − S_T) is m·P/P + λ·(P − P).
            let cost = m / price * price + lambda * (price - price);
            prop_assert!((cost - m).abs() <= 1e-12 * m.abs().max(1.0));
        }
    }
}
