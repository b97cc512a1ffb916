//! Seeded instance generators shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riskcap::optimality::AssetPair;
use riskcap::{Position, ScenarioSpace, TradedAsset};

/// One benchmark input: a space, an eligible asset and a batch of positions.
pub struct Instance {
    pub space: ScenarioSpace,
    pub asset: TradedAsset,
    pub positions: Vec<Position>,
}

/// Random space with `n` states and integer weights.
pub fn space(rng: &mut ChaCha8Rng, n: usize) -> ScenarioSpace {
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=20) as f64).collect();
    let total: f64 = weights.iter().sum();
    let labels: Vec<String> = (1..=n).map(|i| format!("w{i}")).collect();
    ScenarioSpace::new(labels, weights.iter().map(|w| w / total).collect()).expect("valid weights")
}

/// Payoff that defaults on roughly a fifth of the states.
pub fn defaultable_payoff(rng: &mut ChaCha8Rng, n: usize) -> Position {
    let mut v: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.1..2.0) })
        .collect();
    v[0] = v[0].max(0.5);
    Position::new(v).expect("finite")
}

pub fn position(rng: &mut ChaCha8Rng, n: usize) -> Position {
    Position::new((0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()).expect("finite")
}

/// Instance with `n` states and `batch` positions, reproducible from `seed`.
pub fn instance(seed: u64, n: usize, batch: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = space(&mut rng, n);
    let payoff = defaultable_payoff(&mut rng, n);
    let asset = TradedAsset::new(&space, 1.0, payoff).expect("valid asset");
    let positions = (0..batch).map(|_| position(&mut rng, n)).collect();
    Instance { space, asset, positions }
}

/// Probability that the instance's asset pays nothing.
pub fn default_mass(inst: &Instance) -> f64 {
    inst.space
        .probs()
        .iter()
        .zip(inst.asset.payoff().values())
        .filter(|(_, v)| **v == 0.0)
        .map(|(p, _)| p)
        .sum()
}

/// Two unit-price assets on the same space, one of them defaultable.
pub fn pair(seed: u64, n: usize) -> (ScenarioSpace, AssetPair) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = space(&mut rng, n);
    let s = TradedAsset::new(&space, 1.0, defaultable_payoff(&mut rng, n)).expect("valid asset");
    let r = TradedAsset::new(&space, 1.0, Position::new(vec![1.0; n]).expect("finite")).expect("valid asset");
    let pair = AssetPair::new(&space, s, r).expect("same price");
    (space, pair)
}
