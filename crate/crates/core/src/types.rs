//! Scenario spaces, positions, traded assets and extended-real amounts.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Result, RiskError};

/// Tolerance on the probability sum accepted by [`ScenarioSpace::new`].
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Absolute slack used whenever an accumulated probability is compared
/// against a level such as `alpha`. Masses that agree to this many digits
/// are treated as equal.
pub const PROB_TOL: f64 = 1e-12;

/// A finite set of states with a probability for each of them.
///
/// Zero-probability states are allowed. They take part in pointwise
/// statements (sup-norm, the positive cone) and are ignored by every
/// probabilistic quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpace {
    labels: Vec<String>,
    probs: Vec<f64>,
    input_sum: f64,
}

impl ScenarioSpace {
    pub fn new<S: Into<String>>(labels: Vec<S>, probs: Vec<f64>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != probs.len() {
            return Err(RiskError::LengthMismatch {
                labels: labels.len(),
                probs: probs.len(),
            });
        }
        if labels.is_empty() {
            return Err(RiskError::EmptySpace);
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(RiskError::DuplicateLabel(label.clone()));
            }
        }
        for (label, &p) in labels.iter().zip(&probs) {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(RiskError::NegativeProbability {
                    label: label.clone(),
                    prob: p,
                });
            }
        }
        let input_sum: f64 = probs.iter().sum();
        if (input_sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(RiskError::ProbabilitySumMismatch { sum: input_sum });
        }
        let probs = renormalize(probs, input_sum);
        Ok(Self {
            labels,
            probs,
            input_sum,
        })
    }

    /// Builds a space from decimal probability literals such as `"0.05"`.
    pub fn from_decimal<S: Into<String>>(labels: Vec<S>, probs: &[&str]) -> Result<Self> {
        let parsed = probs
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| RiskError::InvalidProbability(s.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, parsed)
    }

    /// `n` equally likely states labelled `w1..wn`.
    pub fn uniform(n: usize) -> Result<Self> {
        let labels = (1..=n).map(|i| format!("w{i}")).collect::<Vec<_>>();
        Self::new(labels, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, state: usize) -> f64 {
        self.probs[state]
    }

    /// Sum of the probabilities as supplied, before renormalization.
    pub fn input_sum(&self) -> f64 {
        self.input_sum
    }

    /// Indices of the states carrying strictly positive probability.
    pub fn charged_states(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
    }

    /// Probability of the event `{ω : pred(ω)}`.
    pub fn prob_of(&self, mut pred: impl FnMut(usize) -> bool) -> f64 {
        self.charged_states().filter(|&i| pred(i)).map(|i| self.probs[i]).sum()
    }

    pub fn expectation(&self, x: &Position) -> f64 {
        self.charged_states().map(|i| self.probs[i] * x.values[i]).sum()
    }

    pub fn check_bound(&self, x: &Position) -> Result<()> {
        if x.len() == self.len() {
            Ok(())
        } else {
            Err(RiskError::UnboundPosition {
                expected: self.len(),
                found: x.len(),
            })
        }
    }
}

/// Divides by the observed sum, then absorbs the rounding residue into the
/// last charged state so that a left-to-right sum reads back as exactly one.
fn renormalize(mut probs: Vec<f64>, sum: f64) -> Vec<f64> {
    if sum != 1.0 {
        for p in &mut probs {
            *p /= sum;
        }
    }
    let Some(last) = probs.iter().rposition(|&p| p > 0.0) else {
        return probs;
    };
    let before: f64 = probs[..last].iter().sum();
    let patched = 1.0 - before;
    if patched > 0.0 && (patched - probs[last]).abs() <= SUM_TOLERANCE {
        probs[last] = patched;
    }
    for _ in 0..64 {
        let total: f64 = probs.iter().sum();
        if total == 1.0 {
            break;
        }
        probs[last] = if total < 1.0 {
            probs[last].next_up()
        } else {
            probs[last].next_down()
        };
    }
    probs
}

/// A payoff at the horizon, one value per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Position {
    values: Vec<f64>,
}

impl Position {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(RiskError::NonFiniteValue { index });
        }
        Ok(Self { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_vec_unchecked(vec![c; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    /// The indicator `1_{ω_state}`.
    pub fn indicator(n: usize, state: usize) -> Self {
        let mut values = vec![0.0; n];
        values[state] = 1.0;
        Self::from_vec_unchecked(values)
    }

    /// The indicator of an arbitrary event.
    pub fn indicator_of(n: usize, states: &[usize]) -> Self {
        let mut values = vec![0.0; n];
        for &s in states {
            values[s] = 1.0;
        }
        Self::from_vec_unchecked(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, state: usize) -> f64 {
        self.values[state]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Maximum of `|X(ω)|` over all states, null states included.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `self + c·1_Ω`.
    pub fn shift(&self, c: f64) -> Self {
        Self::from_vec_unchecked(self.values.iter().map(|v| v + c).collect())
    }

    /// `self + k·other`.
    pub fn add_scaled(&self, k: f64, other: &Position) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self::from_vec_unchecked(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + k * b)
                .collect(),
        )
    }

    /// `k·self`, with negative zeros folded to `+0`.
    pub fn scale(&self, k: f64) -> Self {
        Self::from_vec_unchecked(self.values.iter().map(|v| k * v + 0.0).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Componentwise `self <= other` on every state.
    pub fn le(&self, other: &Position) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }
}

impl From<Position> for Vec<f64> {
    fn from(p: Position) -> Self {
        p.values
    }
}

impl Add for &Position {
    type Output = Position;
    fn add(self, rhs: &Position) -> Position {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &Position {
    type Output = Position;
    fn sub(self, rhs: &Position) -> Position {
        self.add_scaled(-1.0, rhs)
    }
}

impl Mul<f64> for &Position {
    type Output = Position;
    fn mul(self, k: f64) -> Position {
        self.scale(k)
    }
}

impl Neg for &Position {
    type Output = Position;
    fn neg(self) -> Position {
        self.scale(-1.0)
    }
}

/// An eligible asset: a strictly positive price today and a nonnegative,
/// nonzero payoff at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradedAsset {
    price: f64,
    payoff: Position,
    defaultable: bool,
}

impl TradedAsset {
    pub fn new(space: &ScenarioSpace, price: f64, payoff: Position) -> Result<Self> {
        space.check_bound(&payoff)?;
        if !(price > 0.0) || !price.is_finite() {
            return Err(RiskError::NonPositivePrice(price));
        }
        if let Some(index) = payoff.values().iter().position(|&v| v < 0.0) {
            return Err(RiskError::NegativePayoff { index });
        }
        if payoff.max() <= 0.0 {
            return Err(RiskError::ZeroPayoff);
        }
        let defaultable = space.charged_states().any(|i| payoff.get(i) == 0.0);
        Ok(Self {
            price,
            payoff,
            defaultable,
        })
    }

    /// The risk-free bond: unit price, unit payoff in every state.
    pub fn risk_free(space: &ScenarioSpace) -> Self {
        Self {
            price: 1.0,
            payoff: Position::constant(space.len(), 1.0),
            defaultable: false,
        }
    }

    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn payoff(&self) -> &Position {
        &self.payoff
    }

    /// True when the payoff vanishes on some positive-probability state.
    pub fn is_defaultable(&self) -> bool {
        self.defaultable
    }

    /// Position obtained by investing `amount` of cash in the asset today.
    pub fn invest(&self, amount: f64) -> Position {
        self.payoff.scale(amount / self.price)
    }

    /// `ℙ[S_T = 0]`.
    pub fn zero_payoff_mass(&self, space: &ScenarioSpace) -> f64 {
        space.prob_of(|i| self.payoff.get(i) == 0.0)
    }

    /// `ℙ[S_T > 0]`.
    pub fn positive_payoff_mass(&self, space: &ScenarioSpace) -> f64 {
        space.prob_of(|i| self.payoff.get(i) > 0.0)
    }
}

/// A point of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Amount {
    NegInf,
    Finite(f64),
    PosInf,
}

impl Amount {
    pub fn is_finite(self) -> bool {
        matches!(self, Amount::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Amount::Finite(v) => Some(v),
            _ => None,
        }
    }

    fn rank(self) -> u8 {
        match self {
            Amount::NegInf => 0,
            Amount::Finite(_) => 1,
            Amount::PosInf => 2,
        }
    }

    /// `self + c` for finite `c`; infinities absorb the shift.
    pub fn offset(self, c: f64) -> Amount {
        match self {
            Amount::Finite(v) => Amount::Finite(v + c),
            other => other,
        }
    }

    /// Distance between two amounts: zero for matching infinities,
    /// infinite when exactly one side (or opposite sides) is infinite.
    pub fn distance(self, other: Amount) -> f64 {
        match (self, other) {
            (Amount::Finite(a), Amount::Finite(b)) => (a - b).abs(),
            (a, b) if a == b => 0.0,
            _ => f64::INFINITY,
        }
    }
}

impl PartialOrd for Amount {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Amount::Finite(a), Amount::Finite(b)) => a.partial_cmp(b),
            _ => Some(self.rank().cmp(&other.rank())),
        }
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amount::NegInf => f.write_str("-inf"),
            Amount::PosInf => f.write_str("+inf"),
            Amount::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Amount {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Amount::NegInf => s.serialize_str("-inf"),
            Amount::PosInf => s.serialize_str("+inf"),
            Amount::Finite(v) => s.serialize_f64(*v),
        }
    }
}

/// How much trust to put in a computed amount.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "tolerance", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Confidence {
    Exact,
    Numeric(f64),
    BudgetExhausted,
}

/// A capital amount on the extended real line together with whether the
/// infimum is attained (`None` when that cannot be decided).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtendedAmount {
    pub value: Amount,
    pub attained: Option<bool>,
    pub confidence: Confidence,
}

impl ExtendedAmount {
    pub fn exact(v: f64) -> Self {
        Self {
            value: Amount::Finite(v),
            attained: Some(true),
            confidence: Confidence::Exact,
        }
    }

    pub fn numeric(v: f64, tolerance: f64, attained: Option<bool>) -> Self {
        assert!(tolerance > 0.0, "numeric confidence needs a positive tolerance");
        Self {
            value: Amount::Finite(v),
            attained,
            confidence: Confidence::Numeric(tolerance),
        }
    }

    pub fn pos_inf(confidence: Confidence) -> Self {
        Self {
            value: Amount::PosInf,
            attained: Some(false),
            confidence,
        }
    }

    pub fn neg_inf(confidence: Confidence) -> Self {
        Self {
            value: Amount::NegInf,
            attained: Some(false),
            confidence,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        self.value.finite()
    }
}

impl PartialOrd for ExtendedAmount {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn three_state_space() -> ScenarioSpace {
        ScenarioSpace::new(vec!["w1", "w2", "w3"], vec![0.05, 0.06, 0.89]).unwrap()
    }

    #[test]
    fn builds_three_state_space() {
        let space = three_state_space();
        assert_eq!(space.len(), 3);
        assert_eq!(space.probs().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn single_state_space() {
        let space = ScenarioSpace::new(vec!["w1"], vec![1.0]).unwrap();
        assert_eq!(space.probs(), &[1.0]);
    }

    #[test]
    fn space_errors() {
        assert!(matches!(
            ScenarioSpace::new(vec!["a", "b"], vec![0.5, 0.6]),
            Err(RiskError::ProbabilitySumMismatch { .. })
        ));
        assert!(matches!(
            ScenarioSpace::new(vec!["a", "b"], vec![-0.5, 1.5]),
            Err(RiskError::NegativeProbability { .. })
        ));
        assert!(matches!(
            ScenarioSpace::new(vec!["a", "a"], vec![0.5, 0.5]),
            Err(RiskError::DuplicateLabel(_))
        ));
        assert!(matches!(
            ScenarioSpace::new(Vec::<String>::new(), vec![]),
            Err(RiskError::EmptySpace)
        ));
        assert!(matches!(
            ScenarioSpace::from_decimal(vec!["a"], &["one"]),
            Err(RiskError::InvalidProbability(_))
        ));
    }

    #[test]
    fn decimal_strings_within_tolerance() {
        let space = ScenarioSpace::from_decimal(
            vec!["a", "b", "c"],
            &["0.1", "0.2", "0.7000000000001"],
        )
        .unwrap();
        assert!((space.input_sum() - 1.0).abs() > 0.0);
        assert_eq!(space.probs().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn asset_flags() {
        let space = three_state_space();
        let bond = TradedAsset::new(&space, 1.0, Position::new(vec![0.0, 1.0, 1.0]).unwrap())
            .unwrap();
        assert!(bond.is_defaultable());
        let rf = TradedAsset::new(&space, 1.0, Position::constant(3, 1.0)).unwrap();
        assert!(!rf.is_defaultable());
        assert_eq!(
            TradedAsset::new(&space, 0.0, Position::constant(3, 1.0)),
            Err(RiskError::NonPositivePrice(0.0))
        );
        assert_eq!(
            TradedAsset::new(&space, 1.0, Position::zeros(3)),
            Err(RiskError::ZeroPayoff)
        );
        assert!(matches!(
            TradedAsset::new(&space, 1.0, Position::new(vec![1.0, -1.0, 1.0]).unwrap()),
            Err(RiskError::NegativePayoff { index: 1 })
        ));
    }

    #[test]
    fn null_state_zero_payoff_is_not_default() {
        let space = ScenarioSpace::new(vec!["a", "b", "c"], vec![0.0, 0.5, 0.5]).unwrap();
        let s = TradedAsset::new(&space, 1.0, Position::new(vec![0.0, 0.2, 3.0]).unwrap())
            .unwrap();
        assert!(!s.is_defaultable());
    }

    #[test]
    fn sup_norm_examples() {
        assert_eq!(Position::new(vec![0.0, 0.0, 1.0]).unwrap().sup_norm(), 1.0);
        assert_eq!(Position::new(vec![-2.0, 5.0, 5.0]).unwrap().sup_norm(), 5.0);
        assert_eq!(Position::zeros(4).sup_norm(), 0.0);
    }

    #[test]
    fn amount_order() {
        assert!(Amount::NegInf < Amount::Finite(-1e300));
        assert!(Amount::Finite(1e300) < Amount::PosInf);
        assert!(Amount::Finite(1.0) < Amount::Finite(2.0));
        assert_eq!(Amount::PosInf.offset(3.0), Amount::PosInf);
    }

    #[test]
    fn infinities_serialize_as_strings() {
        let json = serde_json::to_string(&ExtendedAmount::pos_inf(Confidence::Exact)).unwrap();
        assert!(json.contains("\"+inf\""), "{json}");
        let json = serde_json::to_string(&Amount::NegInf).unwrap();
        assert_eq!(json, "\"-inf\"");
    }

    proptest! {
        #[test]
        fn sup_norm_is_a_norm(
            a in prop::collection::vec(-1e3f64..1e3, 5),
            b in prop::collection::vec(-1e3f64..1e3, 5),
            k in -50.0f64..50.0,
        ) {
            let x = Position::new(a).unwrap();
            let y = Position::new(b).unwrap();
            prop_assert!((&x + &y).sup_norm() <= x.sup_norm() + y.sup_norm());
            prop_assert_eq!(x.scale(k).sup_norm(), k.abs() * x.sup_norm());
        }

        #[test]
        fn renormalized_probs_sum_to_one(raw in prop::collection::vec(0.0f64..1.0, 1..40)) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 0.0);
            let probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
            let labels = (0..probs.len()).map(|i| format!("s{i}")).collect::<Vec<_>>();
            if let Ok(space) = ScenarioSpace::new(labels, probs) {
                prop_assert_eq!(space.probs().iter().sum::<f64>(), 1.0);
            }
        }

        #[test]
        fn bounded_away_payoff_is_not_defaultable(
            raw in prop::collection::vec(0.01f64..5.0, 1..10),
            eps in 0.001f64..0.01,
        ) {
            let n = raw.len();
            let space = ScenarioSpace::uniform(n).unwrap();
            let payoff = Position::new(raw.iter().map(|v| v.max(eps)).collect()).unwrap();
            let s = TradedAsset::new(&space, 1.0, payoff).unwrap();
            prop_assert!(!s.is_defaultable());
        }
    }
}
