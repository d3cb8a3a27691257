use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::asian::AsianParams;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n_steps: usize,
    pub value_grid: usize,
    pub avg_grid: usize,
    /// Adversary stays in `[a + δ, b − δ]` with `δ = delta_margin·(b − a)`.
    #[serde(default = "default_margin")]
    pub delta_margin: f64,
    /// When set, also price at half resolution and flag a gap above this.
    #[serde(default)]
    pub refinement_tol: Option<f64>,
}

fn default_margin() -> f64 {
    1e-6
}

impl OracleConfig {
    pub fn new(n_steps: usize, value_grid: usize, avg_grid: usize) -> Self {
        Self {
            n_steps,
            value_grid,
            avg_grid,
            delta_margin: default_margin(),
            refinement_tol: None,
        }
    }

    fn halved(&self) -> Self {
        Self {
            n_steps: (self.n_steps / 2).max(1),
            value_grid: (self.value_grid / 2).max(1),
            avg_grid: (self.avg_grid / 2).max(2),
            refinement_tol: None,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub price: f64,
    pub config: OracleConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarse_price: Option<f64>,
    pub too_coarse: bool,
}

/// Upper concave envelope of `(xs[i], ys[i])` (xs ascending) sampled back at every `xs[i]`.
fn concave_envelope<T: Scalar>(xs: &[T], ys: &[T], out: &mut [T]) {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (xs[a] - xs[o]) * (ys[i] - ys[o]) - (ys[a] - ys[o]) * (xs[i] - xs[o]);
            if cross >= T::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut seg = 0;
    for i in 0..xs.len() {
        while seg + 1 < hull.len() - 1 && xs[hull[seg + 1]] <= xs[i] {
            seg += 1;
        }
        if hull.len() == 1 {
            out[i] = ys[hull[0]];
            continue;
        }
        let (l, r) = (hull[seg], hull[seg + 1]);
        let w = (xs[i] - xs[l]) / (xs[r] - xs[l]);
        out[i] = ys[l] + w * (ys[r] - ys[l]);
    }
}

struct AvgGrid<T> {
    lo: T,
    hi: T,
    m: usize,
}

impl<T: Scalar> AvgGrid<T> {
    fn point(&self, j: usize) -> T {
        if self.m == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * T::lit(j as f64 / (self.m - 1) as f64)
        }
    }

    /// Linear interpolation (extrapolation beyond the ends) of column `col`.
    fn interpolate(&self, vals: &[T], stride: usize, col: usize, a: T) -> T {
        if self.m == 1 {
            return vals[col];
        }
        let pos = (a - self.lo) / (self.hi - self.lo) * T::lit((self.m - 1) as f64);
        let j = pos.floor().to_f64().unwrap_or(0.0).clamp(0.0, (self.m - 2) as f64) as usize;
        let w = pos - T::lit(j as f64);
        let (v0, v1) = (vals[j * stride + col], vals[(j + 1) * stride + col]);
        v0 + w * (v1 - v0)
    }
}

/// Backward induction of the one-step minimax `min_φ max_x' [U' − φ(x' − x)]`
/// on a lattice, solved per step by the upper concave envelope in `x'`.
pub fn lattice_minimax_oracle<T: Scalar>(
    params: &AsianParams<T>,
    t0: T,
    a0: T,
    x0: T,
    cfg: &OracleConfig,
) -> Result<OracleResult> {
    let price = oracle_price(params, t0, a0, x0, cfg)?;
    let coarse_price = match cfg.refinement_tol {
        Some(_) => Some(oracle_price(params, t0, a0, x0, &cfg.halved())?.as_f64()),
        None => None,
    };
    let too_coarse = match (coarse_price, cfg.refinement_tol) {
        (Some(c), Some(tol)) => (c - price.as_f64()).abs() > tol,
        _ => false,
    };
    Ok(OracleResult {
        price: price.as_f64(),
        config: *cfg,
        coarse_price,
        too_coarse,
    })
}

fn oracle_price<T: Scalar>(params: &AsianParams<T>, t0: T, a0: T, x0: T, cfg: &OracleConfig) -> Result<T> {
    let (a, b, big_t) = (params.a, params.b, params.maturity);
    if cfg.n_steps == 0 || cfg.value_grid == 0 || cfg.avg_grid < 2 {
        return Err(Error::InvalidParams("oracle needs n_steps, value_grid >= 1 and avg_grid >= 2".into()));
    }
    if !(t0 >= T::zero() && t0 < big_t) {
        return Err(Error::InvalidParams(format!("t0 = {t0} must lie in [0, T)")));
    }
    if !params.bounds().contains(x0) {
        return Err(Error::OutOfBounds {
            t: t0.as_f64(),
            spot: x0.as_f64(),
            a: a.as_f64(),
            b: b.as_f64(),
        });
    }
    let width = b - a;
    let margin = T::lit(cfg.delta_margin) * width;
    if !(margin > T::zero()) || margin * T::lit(2.0) >= width {
        return Err(Error::InvalidParams(format!("delta_margin {} out of range", cfg.delta_margin)));
    }
    let (lo, hi) = (a + margin, b - margin);
    let mut xs: Vec<T> = vec![lo, hi, x0];
    for j in 0..cfg.value_grid {
        xs.push(a + width * T::lit((j + 1) as f64 / (cfg.value_grid + 1) as f64));
    }
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    xs.dedup_by(|p, q| (*p - *q).abs() <= T::epsilon() * width);
    let nx = xs.len();
    let dt = (big_t - t0) / T::lit(cfg.n_steps as f64);
    let grid_at = |k: usize| {
        let span = dt * T::lit(k as f64);
        AvgGrid {
            lo: a0 + lo * span,
            hi: a0 + hi * span,
            m: if k == 0 { 1 } else { cfg.avg_grid },
        }
    };

    // `next` holds U_{k+1} on (A-grid_{k+1}) × xs; `None` at maturity.
    let mut next: Option<(AvgGrid<T>, Vec<T>)> = None;
    for k in (0..cfg.n_steps).rev() {
        let grid = grid_at(k);
        let rows: Vec<Vec<T>> = (0..grid.m)
            .into_par_iter()
            .map(|j| {
                let acc = grid.point(j);
                let g: Vec<T> = xs
                    .iter()
                    .enumerate()
                    .map(|(i, &xp)| {
                        let a1 = acc + xp * dt;
                        match &next {
                            None => params.payoff(a1),
                            Some((ng, vals)) => ng.interpolate(vals, nx, i, a1),
                        }
                    })
                    .collect();
                let mut row = vec![T::zero(); nx];
                concave_envelope(&xs, &g, &mut row);
                row
            })
            .collect();
        next = Some((grid, rows.concat()));
    }
    let (_, vals) = next.expect("at least one step");
    let i0 = xs
        .iter()
        .position(|x| (*x - x0).abs() <= T::epsilon() * width)
        .expect("x0 is a lattice node");
    Ok(vals[i0])
}
