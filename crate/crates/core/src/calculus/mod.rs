//! Non-anticipative functionals, their derivatives and the pathwise integral.

mod derivative;
mod functional;
mod integral;
mod probe;

pub use derivative::{
    default_step, gradient_check, horizontal_derivative, horizontal_derivative_richardson,
    vertical_derivative, vertical_derivative_fd, GradientCheck,
};
pub(crate) use functional::scalar_integrand;
pub use functional::{library, Components, FnFunctional, Functional, Integrand};
pub use integral::{
    pathwise_integral, pathwise_integral_between, riemann_sum, IntegralConfig, IntegralEstimate,
};
pub use probe::{
    causality_probe, continuity_probe, CausalityRecord, CausalityReport, ConditionCheck,
    ContinuityConfig, ContinuityReport,
};
