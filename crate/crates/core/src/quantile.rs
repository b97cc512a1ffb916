//! Value-at-Risk and Tail-Value-at-Risk of a position under a finite law.
//!
//! Both quantities are computed exactly from the sorted atoms of the law.
//! `VaR_α(X) = inf{m : ℙ[X + m < 0] ≤ α}` and `TVaR_α` is the average of
//! `VaR_β` over `β ∈ (0, α]`, which on a finite law is a step function in
//! `β` and integrates to a finite sum.

use crate::error::{Result, RiskError};
use crate::types::{Position, ScenarioSpace, PROB_TOL};

pub fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(RiskError::AlphaOutOfRange(alpha))
    }
}

/// The law of a position: distinct values in ascending order with their
/// masses and cumulative masses. Null states are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedDistribution {
    values: Vec<f64>,
    masses: Vec<f64>,
    cumulative: Vec<f64>,
}

impl SortedDistribution {
    pub fn new(space: &ScenarioSpace, x: &Position) -> Result<Self> {
        space.check_bound(x)?;
        let mut atoms: Vec<(f64, f64)> = space
            .charged_states()
            .map(|i| (x.get(i), space.prob(i)))
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut values: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut masses: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match values.last() {
                Some(&last) if last == v => *masses.last_mut().unwrap() += p,
                _ => {
                    values.push(v);
                    masses.push(p);
                }
            }
        }
        let mut cumulative = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for &m in &masses {
            acc += m;
            cumulative.push(acc);
        }
        // The last cumulative mass is one by construction; pin it so the
        // quantile search always terminates.
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self {
            values,
            masses,
            cumulative,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Smallest attained value `v` with `ℙ[X ≤ v] > level`.
    pub fn upper_quantile(&self, level: f64) -> f64 {
        let k = self
            .cumulative
            .iter()
            .position(|&c| c > level + PROB_TOL)
            .unwrap_or(self.values.len() - 1);
        self.values[k]
    }

    /// `∫_0^α VaR_β dβ`, summed segment by segment.
    fn lower_tail_integral(&self, alpha: f64) -> f64 {
        let mut total = 0.0;
        let mut start = 0.0;
        for (&v, &end) in self.values.iter().zip(&self.cumulative) {
            if start >= alpha {
                break;
            }
            let width = end.min(alpha) - start;
            if width > 0.0 {
                total += width * -v;
            }
            start = end;
        }
        total
    }
}

pub fn var(space: &ScenarioSpace, x: &Position, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(var_of(&SortedDistribution::new(space, x)?, alpha))
}

pub fn tvar(space: &ScenarioSpace, x: &Position, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(tvar_of(&SortedDistribution::new(space, x)?, alpha))
}

pub fn var_of(dist: &SortedDistribution, alpha: f64) -> f64 {
    // `+ 0.0` folds a negative zero into zero.
    -dist.upper_quantile(alpha) + 0.0
}

pub fn tvar_of(dist: &SortedDistribution, alpha: f64) -> f64 {
    dist.lower_tail_integral(alpha) / alpha + 0.0
}
