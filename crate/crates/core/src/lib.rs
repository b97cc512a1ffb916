//! Capital requirements for general acceptance sets and general eligible
//! assets on finite scenario spaces.
//!
//! The capital requirement of a position `X` with respect to an acceptance
//! set `A` and a traded asset `S = (S₀, S_T)` is the least amount of capital
//! that, invested in `S`, makes the position acceptable:
//!
//! ```text
//! ρ_{A,S}(X) = inf{ m ∈ ℝ : X + (m/S₀)·S_T ∈ A }
//! ```
//!
//! When the eligible asset can default (its payoff vanishes in some states)
//! this quantity may be infinite or discontinuous. Besides solvers for
//! `ρ_{A,S}`, the crate ships diagnostics that decide finiteness and
//! continuity for VaR, TVaR and conic acceptance sets, and refutation
//! searches comparing two eligible assets.

pub mod acceptance;
pub mod capital;
pub mod diagnostics;
pub mod error;
pub mod optimality;
pub mod oracle;
pub mod quantile;
pub mod types;

pub use acceptance::{AcceptanceSpec, ConeFlags, CustomCone};
pub use capital::{required_capital, required_capital_with, CapitalResult, Method, SolverOptions};
pub use error::{Result, RiskError};
pub use types::{Amount, Confidence, ExtendedAmount, Position, ScenarioSpace, TradedAsset};
