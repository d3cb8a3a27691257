//! Asian superhedging on a bounded scenario band.

mod asian;
mod backtest;
mod oracle;
mod verify;

pub use asian::{
    asian_cost_to_go, asian_delta, asian_theta, whole_space_gap, whole_space_limit, AsianParams,
    AsianState, CostToGo, Delta, HedgeValue, ScenarioBounds,
};
pub use backtest::{superhedge_backtest, HedgeReport, LevelOutcome};
pub use oracle::{lattice_minimax_oracle, OracleConfig, OracleResult};
pub use verify::{adversarial_path, verification_check, EpsilonCheck, VerificationReport};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::portfolio::Strategy;
use crate::scalar::Scalar;

/// `{t0, A0, x0, T, K, a, b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRequest {
    pub t0: f64,
    #[serde(rename = "A0")]
    pub a0: f64,
    pub x0: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    #[serde(rename = "K")]
    pub strike: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceQuote {
    pub price: f64,
    pub delta: f64,
    pub theta: f64,
    pub whole_space: f64,
}

impl PriceRequest {
    pub fn params(&self) -> Result<AsianParams<f64>> {
        AsianParams::new(self.maturity, self.strike, self.a, self.b)
    }

    pub fn state(&self) -> AsianState<f64> {
        AsianState::new(self.t0, self.a0, self.x0)
    }

    pub fn quote(&self) -> Result<PriceQuote> {
        let (p, s) = (self.params()?, self.state());
        Ok(PriceQuote {
            price: asian_cost_to_go(&p, &s)?,
            delta: asian_delta(&p, &s)?,
            theta: asian_theta(&p, &s)?,
            whole_space: whole_space_limit(s.t, s.running, s.spot, p.maturity, p.strike)?,
        })
    }
}

/// `φ = ∇_x U`, `ψ = V − φ·x` with `V = U − ∫_{t0}^t 𝒟U`.
pub fn superhedge_strategy<T: Scalar>(params: AsianParams<T>, t0: T) -> Strategy<T> {
    Strategy::from_value(
        "asian superhedge",
        Arc::new(Delta(params)),
        Arc::new(HedgeValue { params, t0 }),
    )
}
