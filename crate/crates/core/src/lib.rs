//! Pathwise integration, self-financing portfolios and robust hedging on
//! càdlàg price paths.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`, which is what the harness and CLI use.

pub mod calculus;
pub mod error;
pub mod harness;
pub mod path;
pub mod payoff;
pub mod portfolio;
pub mod scalar;
pub mod superhedge;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Path = path::CadlagPath<f64>;
pub type View<'a> = path::PathView<'a, f64>;
pub type Ladder = path::PartitionLadder<f64>;
pub type Asian = superhedge::AsianParams<f64>;
pub type PortfolioStrategy = portfolio::Strategy<f64>;
