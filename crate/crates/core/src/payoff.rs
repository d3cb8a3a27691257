//! Path-dependent payoffs, their vertical perturbations and perfect hedges.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::Functional;
use crate::error::{Error, Result};
use crate::path::{vertical_perturb, CadlagPath, PathView, StopSide};
use crate::portfolio::Strategy;
use crate::scalar::Scalar;

#[derive(Clone)]
pub enum PayoffKind<T: Scalar> {
    /// `((1/T)∫_0^T x dt − K)^+`.
    Asian { strike: T },
    /// `sup_{s<=T} x(s) − x(T)`.
    Lookback,
    /// `(V(T, x_T) − K)^+` for the value `V` of a self-financing strategy.
    PortfolioCall { strike: T, strategy: Strategy<T> },
    /// `x(T)`.
    Forward,
}

#[derive(Clone)]
pub struct Payoff<T: Scalar> {
    maturity: T,
    kind: PayoffKind<T>,
}

impl<T: Scalar> std::fmt::Debug for Payoff<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

fn check_maturity<T: Scalar>(maturity: T) -> Result<()> {
    if maturity > T::zero() && maturity.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("maturity must be positive, got {maturity}")))
    }
}

fn check_strike<T: Scalar>(strike: T) -> Result<()> {
    if strike >= T::zero() && strike.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("strike must be nonnegative, got {strike}")))
    }
}

impl<T: Scalar> Payoff<T> {
    pub fn asian(maturity: T, strike: T) -> Result<Self> {
        check_maturity(maturity)?;
        check_strike(strike)?;
        Ok(Self {
            maturity,
            kind: PayoffKind::Asian { strike },
        })
    }

    pub fn lookback(maturity: T) -> Result<Self> {
        check_maturity(maturity)?;
        Ok(Self {
            maturity,
            kind: PayoffKind::Lookback,
        })
    }

    pub fn forward(maturity: T) -> Result<Self> {
        check_maturity(maturity)?;
        Ok(Self {
            maturity,
            kind: PayoffKind::Forward,
        })
    }

    pub fn portfolio_call(maturity: T, strike: T, strategy: Strategy<T>) -> Result<Self> {
        check_maturity(maturity)?;
        check_strike(strike)?;
        if strategy.dim() != 1 {
            return Err(Error::InvalidParams("portfolio call needs a single-asset strategy".into()));
        }
        Ok(Self {
            maturity,
            kind: PayoffKind::PortfolioCall { strike, strategy },
        })
    }

    pub fn maturity(&self) -> T {
        self.maturity
    }

    pub fn kind(&self) -> &PayoffKind<T> {
        &self.kind
    }

    pub fn strike(&self) -> Option<T> {
        match &self.kind {
            PayoffKind::Asian { strike } | PayoffKind::PortfolioCall { strike, .. } => Some(*strike),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        let t = self.maturity;
        match &self.kind {
            PayoffKind::Asian { strike } => format!("asian(T={t}, K={strike})"),
            PayoffKind::Lookback => format!("lookback(T={t})"),
            PayoffKind::PortfolioCall { strike, strategy } => {
                format!("call on {}(T={t}, K={strike})", strategy.label)
            }
            PayoffKind::Forward => format!("forward(T={t})"),
        }
    }

    /// `H` applied to a stopped path, i.e. `H(x_t)`.
    pub fn eval_view(&self, x: &PathView<'_, T>) -> T {
        let big_t = self.maturity;
        match &self.kind {
            PayoffKind::Asian { strike } => (x.integral(big_t, 0) / big_t - *strike).max(T::zero()),
            PayoffKind::Lookback => x.sup_through(big_t, 0) - x.value(big_t, 0),
            PayoffKind::PortfolioCall { strike, strategy } => {
                (strategy.value(big_t, x) - *strike).max(T::zero())
            }
            PayoffKind::Forward => x.value(big_t, 0),
        }
    }

    /// `H(x_T)`.
    pub fn terminal(&self, path: &CadlagPath<T>) -> T {
        self.eval_view(&path.view(self.maturity, StopSide::At))
    }

    /// `H(x_t)`, the payoff of the path frozen at `t ∧ T`.
    pub fn running(&self, path: &CadlagPath<T>, t: T) -> T {
        self.eval_view(&path.view(t.min(self.maturity), StopSide::At))
    }

    /// Closed form of `H(x_{t−} + e·1_[t,∞))`.
    pub fn perturbed(&self, path: &CadlagPath<T>, t: T, e: T) -> Result<T> {
        let left = path.left_limit(t, 0);
        if !(left + e > T::zero()) {
            return Err(Error::InadmissiblePerturbation {
                t: t.as_f64(),
                left: left.as_f64(),
                bump: e.as_f64(),
            });
        }
        let big_t = self.maturity;
        if t > big_t {
            return Ok(self.terminal(path));
        }
        let y = left + e;
        Ok(match &self.kind {
            PayoffKind::Asian { strike } => {
                ((path.integral(t, 0) + (big_t - t) * y) / big_t - *strike).max(T::zero())
            }
            PayoffKind::Lookback => (path.sup_before(t, 0) - y).max(T::zero()),
            PayoffKind::PortfolioCall { strike, strategy } => {
                let before = path.view(t, StopSide::Before);
                let slope = strategy.holdings(t, &before)[0];
                (strategy.value(t, &before) + slope * e - *strike).max(T::zero())
            }
            PayoffKind::Forward => y,
        })
    }

    /// Builds the perturbed path and evaluates `H` on it.
    pub fn perturbed_brute_force(&self, path: &CadlagPath<T>, t: T, e: T) -> Result<T> {
        Ok(self.terminal(&vertical_perturb(path, t, &[e])?))
    }
}

/// Three consecutive grid points on which `e ↦ H(x_{t−} + e)` bends.
#[derive(Debug, Clone, Serialize)]
pub struct AffineWitness {
    pub t: f64,
    pub left_limit: f64,
    pub e: [f64; 3],
    pub values: [f64; 3],
    /// Change of slope across the middle point.
    pub slope_change: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AffineVerdict {
    pub affine: bool,
    pub checked: usize,
    pub max_slope_change: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<AffineWitness>,
}

/// `n` points spanning `frac` of the admissible neighbourhood `|e| < x(t−)`.
pub fn neighbourhood_grid<T: Scalar>(left: T, n: usize, frac: f64) -> Vec<T> {
    let n = n.max(3);
    (0..n)
        .map(|i| left * T::lit(frac * (-1.0 + 2.0 * i as f64 / (n - 1) as f64)))
        .collect()
}

/// Slope changes of `e ↦ H(x_{t−} + e·1_[t,∞))` along a sorted `e_grid`.
pub fn affine_check<T: Scalar>(
    payoff: &Payoff<T>,
    t: T,
    path: &CadlagPath<T>,
    e_grid: &[T],
    tol: f64,
) -> Result<AffineVerdict> {
    if e_grid.len() < 3 {
        return Err(Error::InvalidParams("affine check needs at least 3 points".into()));
    }
    let vals: Vec<T> = e_grid
        .iter()
        .map(|&e| payoff.perturbed(path, t, e))
        .collect::<Result<_>>()?;
    let mut max_change = 0.0f64;
    let mut witness = None;
    for i in 0..e_grid.len() - 2 {
        let s0 = (vals[i + 1] - vals[i]) / (e_grid[i + 1] - e_grid[i]);
        let s1 = (vals[i + 2] - vals[i + 1]) / (e_grid[i + 2] - e_grid[i + 1]);
        let change = (s1 - s0).abs().as_f64();
        let scale = 1.0f64.max(s0.abs().as_f64()).max(s1.abs().as_f64());
        if change > max_change {
            max_change = change;
        }
        if change > tol * scale && witness.is_none() {
            witness = Some(AffineWitness {
                t: t.as_f64(),
                left_limit: path.left_limit(t, 0).as_f64(),
                e: [e_grid[i].as_f64(), e_grid[i + 1].as_f64(), e_grid[i + 2].as_f64()],
                values: [vals[i].as_f64(), vals[i + 1].as_f64(), vals[i + 2].as_f64()],
                slope_change: change,
            });
        }
    }
    Ok(AffineVerdict {
        affine: witness.is_none(),
        checked: 1,
        max_slope_change: max_change,
        witness,
    })
}

pub const AFFINE_TOL: f64 = 1e-9;

/// Runs `affine_check` at every breakpoint up to maturity of every path,
/// on an 11-point grid spanning 80% of the neighbourhood.
pub fn certify_affine<T: Scalar>(payoff: &Payoff<T>, paths: &[CadlagPath<T>], tol: f64) -> Result<AffineVerdict> {
    let mut out = AffineVerdict {
        affine: true,
        checked: 0,
        max_slope_change: 0.0,
        witness: None,
    };
    for p in paths {
        for &t in p.times().iter().filter(|t| **t <= payoff.maturity()) {
            let grid = neighbourhood_grid(p.left_limit(t, 0), 11, 0.8);
            let v = affine_check(payoff, t, p, &grid, tol)?;
            out.checked += 1;
            out.max_slope_change = out.max_slope_change.max(v.max_slope_change);
            if !v.affine {
                out.affine = false;
                out.witness = v.witness;
                return Ok(out);
            }
        }
    }
    Ok(out)
}

/// `V(t, x_t) := H(x_t)`.
struct PayoffValue<T: Scalar>(Arc<Payoff<T>>);

impl<T: Scalar> Functional<T> for PayoffValue<T> {
    fn eval(&self, _t: T, x: &PathView<'_, T>) -> T {
        self.0.eval_view(x)
    }
    fn horizontal_derivative(&self, _t: T, _x: &PathView<'_, T>) -> Option<T> {
        Some(T::zero())
    }
    fn label(&self) -> String {
        format!("H(x_t) for {}", self.0.label())
    }
}

/// Slope of `e ↦ H(x_t + e·1_[t,∞))` from the bumps `±x(t)/4`.
struct PayoffSlope<T: Scalar>(Arc<Payoff<T>>);

impl<T: Scalar> PayoffSlope<T> {
    fn slope(&self, x: &PathView<'_, T>) -> T {
        let e = T::lit(0.25) * x.spot(0);
        match (x.bumped(&[e]), x.bumped(&[-e])) {
            (Ok(up), Ok(down)) => (self.0.eval_view(&up) - self.0.eval_view(&down)) / (e + e),
            _ => T::nan(),
        }
    }
}

impl<T: Scalar> Functional<T> for PayoffSlope<T> {
    fn eval(&self, t: T, x: &PathView<'_, T>) -> T {
        if t <= x.time() + T::time_tol() {
            self.slope(x)
        } else {
            // Bump from `t` on, past the stopping time.
            let frozen = x.to_path();
            self.slope(&frozen.view(t, StopSide::At))
        }
    }
    fn label(&self) -> String {
        format!("dH for {}", self.0.label())
    }
}

crate::calculus::scalar_integrand!([T: Scalar] PayoffSlope<T>);

pub struct PerfectHedge<T: Scalar> {
    pub strategy: Strategy<T>,
    /// `H(x_0)` on the first certification path.
    pub price: T,
    pub certification: AffineVerdict,
}

impl<T: Scalar> PerfectHedge<T> {
    pub fn price_on(&self, payoff: &Payoff<T>, path: &CadlagPath<T>) -> T {
        payoff.eval_view(&path.view(T::zero(), StopSide::At))
    }
}

/// Replicating strategy of a vertically affine payoff; refuses otherwise.
pub fn perfect_hedge<T: Scalar>(payoff: Arc<Payoff<T>>, certification: &[CadlagPath<T>]) -> Result<PerfectHedge<T>> {
    let first = certification
        .first()
        .ok_or_else(|| Error::InvalidParams("perfect hedge needs certification paths".into()))?;
    let verdict = certify_affine(&payoff, certification, AFFINE_TOL)?;
    if let Some(w) = &verdict.witness {
        return Err(Error::NotAffine(format!(
            "{}: slope changes by {} at t = {}, x(t-) = {}, e in {:?}",
            payoff.label(),
            w.slope_change,
            w.t,
            w.left_limit,
            w.e
        )));
    }
    let price = payoff.eval_view(&first.view(T::zero(), StopSide::At));
    let strategy = Strategy::from_value(
        format!("perfect hedge of {}", payoff.label()),
        Arc::new(PayoffSlope(payoff.clone())),
        Arc::new(PayoffValue(payoff)),
    );
    Ok(PerfectHedge {
        strategy,
        price,
        certification: verdict,
    })
}

/// `{kind, T, K?, portfolio_ref?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub kind: String,
    #[serde(rename = "T")]
    pub maturity: f64,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub strike: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub portfolio_ref: Option<String>,
}

impl PayoffSpec {
    /// `resolve` maps a `portfolio_ref` to a strategy.
    pub fn build(&self, resolve: impl Fn(&str) -> Option<Strategy<f64>>) -> Result<Payoff<f64>> {
        let strike = || {
            self.strike
                .ok_or_else(|| Error::InvalidParams(format!("{} payoff needs K", self.kind)))
        };
        match self.kind.as_str() {
            "asian" => Payoff::asian(self.maturity, strike()?),
            "lookback" => Payoff::lookback(self.maturity),
            "forward" => Payoff::forward(self.maturity),
            "portfolio_call" => {
                let name = self
                    .portfolio_ref
                    .as_deref()
                    .ok_or_else(|| Error::InvalidParams("portfolio_call needs portfolio_ref".into()))?;
                let s = resolve(name)
                    .ok_or_else(|| Error::InvalidParams(format!("unknown portfolio_ref {name}")))?;
                Payoff::portfolio_call(self.maturity, strike()?, s)
            }
            other => Err(Error::InvalidParams(format!("unknown payoff kind {other}"))),
        }
    }
}
