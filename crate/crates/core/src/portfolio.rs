//! Trading strategies, self-financing diagnostics, gains and arbitrage search.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{
    pathwise_integral, FnFunctional, Functional, IntegralConfig, IntegralEstimate, Integrand,
};
use crate::error::{Error, Result};
use crate::path::{vertical_perturb, CadlagPath, PartitionLadder, PathView, StopSide};
use crate::scalar::Scalar;

/// A pair `(φ, ψ)`: risky holdings and numeraire units.
#[derive(Clone)]
pub struct Strategy<T: Scalar> {
    pub label: String,
    pub phi: Arc<dyn Integrand<T>>,
    pub psi: Arc<dyn Functional<T>>,
}

/// `ψ = V − φ·x`.
struct CashFromValue<T: Scalar> {
    value: Arc<dyn Functional<T>>,
    phi: Arc<dyn Integrand<T>>,
}

impl<T: Scalar> Functional<T> for CashFromValue<T> {
    fn eval(&self, t: T, x: &PathView<'_, T>) -> T {
        let mut buf = vec![T::zero(); self.phi.dim()];
        self.phi.eval_into(t, x, &mut buf);
        let held: T = buf.iter().enumerate().map(|(c, p)| *p * x.value(t, c)).sum();
        self.value.eval(t, x) - held
    }
    fn label(&self) -> String {
        format!("{} - phi.x", Functional::label(&*self.value))
    }
}

impl<T: Scalar> Strategy<T> {
    pub fn new(
        label: impl Into<String>,
        phi: Arc<dyn Integrand<T>>,
        psi: Arc<dyn Functional<T>>,
    ) -> Self {
        Self {
            label: label.into(),
            phi,
            psi,
        }
    }

    /// Derives the cash account from a value functional.
    pub fn from_value(
        label: impl Into<String>,
        phi: Arc<dyn Integrand<T>>,
        value: Arc<dyn Functional<T>>,
    ) -> Self {
        let psi = Arc::new(CashFromValue {
            value,
            phi: phi.clone(),
        });
        Self::new(label, phi, psi)
    }

    /// Constant holdings `φ ≡ q`, `ψ ≡ cash`.
    pub fn constant(holdings: T, cash: T) -> Self {
        Self::new(
            format!("hold({holdings}, {cash})"),
            Arc::new(crate::calculus::library::constant(holdings)),
            Arc::new(crate::calculus::library::constant(cash)),
        )
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn holdings(&self, t: T, x: &PathView<'_, T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.phi.dim()];
        self.phi.eval_into(t, x, &mut out);
        out
    }

    /// `φ_−(t, x_t) := φ(t, x_{t−})`.
    pub fn holdings_left(&self, t: T, x: &PathView<'_, T>) -> Vec<T> {
        self.holdings(t, &x.restop(t, StopSide::Before))
    }

    /// `V(t, x_t) = φ(t, x_t)·x(t) + ψ(t, x_t)`.
    pub fn value(&self, t: T, x: &PathView<'_, T>) -> T {
        let phi = self.holdings(t, x);
        let held: T = phi.iter().enumerate().map(|(c, p)| *p * x.value(t, c)).sum();
        held + self.psi.eval(t, x)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PortfolioValue<T> {
    /// `φ(t, x_t)·x(t) + ψ(t, x_t)`.
    pub value: T,
    /// `φ(t, x_{t−})·x(t) + ψ(t, x_{t−})`.
    pub left_form: T,
    pub difference: T,
}

pub fn portfolio_value<T: Scalar>(s: &Strategy<T>, t: T, x: &PathView<'_, T>) -> PortfolioValue<T> {
    let value = s.value(t, x);
    let left = x.restop(t, StopSide::Before);
    let phi = s.holdings(t, &left);
    let held: T = phi.iter().enumerate().map(|(c, p)| *p * x.value(t, c)).sum();
    let left_form = held + s.psi.eval(t, &left);
    PortfolioValue {
        value,
        left_form,
        difference: (value - left_form).abs(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Jump,
    Horizontal,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinancingRecord {
    pub t: f64,
    pub condition: Condition,
    pub h: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfFinancingReport {
    pub label: String,
    pub tol: f64,
    pub records: Vec<FinancingRecord>,
    pub max_residual: f64,
    pub pass: bool,
}

pub const DEFAULT_FINANCING_STEPS: [f64; 2] = [1e-2, 1e-3];

/// Checks the jump condition `Δφ·x(t) + Δψ = 0` and the frozen-path
/// condition `(φ(t+h) − φ(t))·x(t) + ψ(t+h) − ψ(t) = 0` at each grid time.
pub fn self_financing_check<T: Scalar>(
    s: &Strategy<T>,
    path: &CadlagPath<T>,
    grid: &[T],
    hs: &[T],
    tol: f64,
) -> SelfFinancingReport {
    let mut records = Vec::new();
    for &t in grid {
        let at = path.view(t, StopSide::At);
        let before = path.view(t, StopSide::Before);
        let (pa, pb) = (s.holdings(t, &at), s.holdings(t, &before));
        let dphi: T = (0..s.dim()).map(|c| (pa[c] - pb[c]) * at.spot(c)).sum();
        let r = dphi + s.psi.eval(t, &at) - s.psi.eval(t, &before);
        records.push(FinancingRecord {
            t: t.as_f64(),
            condition: Condition::Jump,
            h: None,
            residual: r.abs().as_f64(),
        });
        let psi0 = s.psi.eval(t, &at);
        for &h in hs {
            let ph = s.holdings(t + h, &at);
            let dphi: T = (0..s.dim()).map(|c| (ph[c] - pa[c]) * at.spot(c)).sum();
            let r = dphi + s.psi.eval(t + h, &at) - psi0;
            records.push(FinancingRecord {
                t: t.as_f64(),
                condition: Condition::Horizontal,
                h: Some(h.as_f64()),
                residual: r.abs().as_f64(),
            });
        }
    }
    let max_residual = records.iter().map(|r| r.residual).fold(0.0, f64::max);
    SelfFinancingReport {
        label: s.label.clone(),
        tol,
        pass: records.iter().all(|r| r.residual < tol),
        records,
        max_residual,
    }
}

/// Breakpoints of `path` in `[0, horizon]`, plus `horizon` itself.
pub fn breakpoint_grid<T: Scalar>(path: &CadlagPath<T>, horizon: T) -> Vec<T> {
    let mut g: Vec<T> = path.times().iter().copied().filter(|t| *t <= horizon).collect();
    if g.last().is_none_or(|l| *l < horizon) {
        g.push(horizon);
    }
    g
}

#[derive(Debug, Clone, Serialize)]
pub struct GainReport<T> {
    pub estimate: IntegralEstimate<T>,
    pub initial_value: T,
    pub terminal_value: T,
    /// `|V(T) − V(0) − I_n|` per level.
    pub residuals: Vec<(usize, T)>,
    /// Residual against the limit (finest level when not converged).
    pub residual: T,
}

/// `∫_0^T φ(s, x_{s−}) dx` next to `V(T, x_T) − V(0, x_0)`.
pub fn gain<T: Scalar>(
    s: &Strategy<T>,
    path: &CadlagPath<T>,
    ladder: &PartitionLadder<T>,
    horizon: T,
    cfg: &IntegralConfig,
) -> Result<GainReport<T>> {
    let estimate = pathwise_integral(&*s.phi, path, ladder, horizon, cfg)?;
    let initial_value = s.value(T::zero(), &path.view(T::zero(), StopSide::At));
    let terminal_value = s.value(horizon, &path.view(horizon, StopSide::At));
    let target = terminal_value - initial_value;
    let residuals = estimate
        .levels
        .iter()
        .map(|(n, v)| (*n, (target - *v).abs()))
        .collect();
    let residual = (target - estimate.limit.unwrap_or_else(|| estimate.finest())).abs();
    Ok(GainReport {
        estimate,
        initial_value,
        terminal_value,
        residuals,
        residual,
    })
}

/// `V(t, x_t) = (x(t) − x(0−))² − [x](t)`, held via `φ = 2(x(t) − x(0−))`.
pub fn free_lunch_value<T: Scalar>() -> FnFunctional<T> {
    FnFunctional::new("(x-x0)^2-[x]", |t, x: &PathView<'_, T>| {
        let d = x.value(t, 0) - x.initial(0);
        d * d - x.quadratic_variation(t, 0)
    })
}

pub fn free_lunch_strategy<T: Scalar>() -> Strategy<T> {
    let phi = FnFunctional::new("2(x-x0)", |t, x: &PathView<'_, T>| {
        T::lit(2.0) * (x.value(t, 0) - x.initial(0))
    });
    Strategy::from_value("free lunch", Arc::new(phi), Arc::new(free_lunch_value()))
}

/// Reproducible source of scenarios: path `i` depends on `i` alone.
pub trait ScenarioSource<T: Scalar>: Send + Sync {
    fn sample(&self, index: u64) -> Result<CadlagPath<T>>;
    /// Whether the scenario class is closed under vertical perturbation.
    fn admits_jumps(&self) -> bool;
    fn label(&self) -> String;
}

impl<T: Scalar> ScenarioSource<T> for Vec<CadlagPath<T>> {
    fn sample(&self, index: u64) -> Result<CadlagPath<T>> {
        self.get(index as usize % self.len().max(1))
            .cloned()
            .ok_or_else(|| Error::InvalidParams("empty scenario list".into()))
    }
    fn admits_jumps(&self) -> bool {
        true
    }
    fn label(&self) -> String {
        "fixed list".into()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeConfig {
    /// Gains below this in magnitude count as zero.
    pub zero_tol: f64,
    /// Base paths for the single-jump family.
    pub adversarial_bases: usize,
    pub adversarial_times: usize,
    pub adversarial_sizes: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            zero_tol: 1e-8,
            adversarial_bases: 4,
            adversarial_times: 8,
            adversarial_sizes: 9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Falsifier<T> {
    pub index: usize,
    pub gain: T,
    pub path: CadlagPath<T>,
}

pub struct ProbeOutcome<T> {
    pub report: ArbitrageReport,
    pub falsifier: Option<Falsifier<T>>,
    /// Terminal gain per scanned path, generated paths first.
    pub gains: Vec<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArbitrageReport {
    pub strategy_label: String,
    pub n_paths: usize,
    pub min_gain: f64,
    pub max_gain: f64,
    /// All gains `>= -zero_tol` and at least one `> zero_tol`.
    pub arbitrage_evidence: bool,
    pub falsifier_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub falsifier_path_file: Option<String>,
}

/// Scans generated and adversarially perturbed paths for a negative
/// terminal gain `V(T, x_T) − V(0, x_0)`.
pub fn arbitrage_probe<T: Scalar>(
    s: &Strategy<T>,
    source: &dyn ScenarioSource<T>,
    horizon: T,
    n_paths: usize,
    cfg: &ProbeConfig,
) -> Result<ProbeOutcome<T>> {
    let mut paths: Vec<CadlagPath<T>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| source.sample(i))
        .collect::<Result<_>>()?;
    if source.admits_jumps() {
        let bases = cfg.adversarial_bases.min(paths.len());
        let mut extra = Vec::new();
        for base in &paths[..bases] {
            for k in 1..=cfg.adversarial_times {
                let t = horizon * T::lit(k as f64 / (cfg.adversarial_times + 1) as f64);
                let left = base.left_limit(t, 0);
                for j in 0..cfg.adversarial_sizes {
                    let u = -0.8 + 1.6 * j as f64 / (cfg.adversarial_sizes.max(2) - 1) as f64;
                    let e = vec![left * T::lit(u); base.dim()];
                    extra.push(vertical_perturb(base, t, &e)?);
                }
            }
        }
        paths.extend(extra);
    }
    let gains: Vec<T> = paths
        .par_iter()
        .map(|p| {
            s.value(horizon, &p.view(horizon, StopSide::At))
                - s.value(T::zero(), &p.view(T::zero(), StopSide::At))
        })
        .collect();
    let zero = T::lit(cfg.zero_tol);
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    let mut worst: Option<usize> = None;
    for (i, g) in gains.iter().enumerate() {
        lo = lo.min(*g);
        hi = hi.max(*g);
        if *g < -zero && worst.is_none_or(|w| *g < gains[w]) {
            worst = Some(i);
        }
    }
    let falsifier = worst.map(|i| Falsifier {
        index: i,
        gain: gains[i],
        path: paths[i].clone(),
    });
    let report = ArbitrageReport {
        strategy_label: s.label.clone(),
        n_paths: paths.len(),
        min_gain: lo.as_f64(),
        max_gain: hi.as_f64(),
        arbitrage_evidence: worst.is_none() && hi > zero,
        falsifier_gain: falsifier.as_ref().map(|f| f.gain.as_f64()),
        falsifier_path_file: None,
    };
    Ok(ProbeOutcome {
        report,
        falsifier,
        gains,
    })
}
