use serde::{Deserialize, Serialize};

use super::{CadlagPath, PartitionLadder};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Levels to evaluate and the Cauchy tolerance between the two finest ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationConfig {
    pub first_level: usize,
    pub last_level: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for VariationConfig {
    fn default() -> Self {
        Self {
            first_level: 6,
            last_level: 14,
            rel_tol: 1e-3,
            abs_tol: 1e-3,
        }
    }
}

/// Per-level sums `Σ_{t_i <= t} (x(t_{i+1}) - x(t_i))^{⊗p}`, flattened
/// row-major for `d > 1` (where only `p = 2` is supported).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationEstimate<T> {
    pub p: u32,
    pub t: T,
    pub levels: Vec<(usize, Vec<T>)>,
    /// Gap between the two finest levels (max norm).
    pub gap: T,
    pub converged: bool,
    /// Richardson-extrapolated limit when the gaps shrink like the mesh,
    /// otherwise the finest estimate; `None` when not converged.
    pub limit: Option<Vec<T>>,
}

pub fn p_variation<T: Scalar>(
    path: &CadlagPath<T>,
    ladder: &PartitionLadder<T>,
    p: u32,
    t: T,
    cfg: &VariationConfig,
) -> Result<VariationEstimate<T>> {
    if p == 0 || !p.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("p must be a positive even integer, got {p}")));
    }
    let d = path.dim();
    if d > 1 && p != 2 {
        return Err(Error::InvalidParams("tensor variation for d > 1 supports p = 2 only".into()));
    }
    if t > ladder.horizon() + T::time_tol() {
        return Err(Error::InvalidParams(format!(
            "t = {t} beyond ladder horizon {}",
            ladder.horizon()
        )));
    }
    if cfg.first_level > cfg.last_level {
        return Err(Error::InvalidParams("empty level range".into()));
    }
    let mut levels = Vec::new();
    for n in cfg.first_level..=cfg.last_level {
        let g = ladder.grid(n)?;
        levels.push((n, level_sum(path, g, p, t)));
    }
    let m = levels.len();
    let dist = |a: &[T], b: &[T]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (*x - *y).abs())
            .fold(T::zero(), T::max)
    };
    let scale = |a: &[T]| a.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    let (gap, converged) = if m < 2 {
        (T::infinity(), false)
    } else {
        let g = dist(&levels[m - 2].1, &levels[m - 1].1);
        let tol = (T::lit(cfg.rel_tol) * scale(&levels[m - 1].1)).max(T::lit(cfg.abs_tol));
        (g, g < tol)
    };
    let limit = converged.then(|| {
        let top = levels[m - 1].1.clone();
        if m < 3 || gap == T::zero() {
            return top;
        }
        let r = ladder.mesh(levels[m - 2].0).ok().zip(ladder.mesh(levels[m - 1].0).ok());
        let g1 = dist(&levels[m - 3].1, &levels[m - 2].1);
        match r {
            Some((coarse, fine)) if fine > T::zero() => {
                let ratio = coarse / fine;
                let first_order = ((g1 / gap) - ratio).abs() <= T::lit(0.1) * ratio;
                if !first_order {
                    return top;
                }
                let mut out: Vec<T> = top
                    .iter()
                    .zip(&levels[m - 2].1)
                    .map(|(f, c)| (ratio * *f - *c) / (ratio - T::one()))
                    .collect();
                if d == 1 {
                    out[0] = out[0].max(T::zero());
                }
                out
            }
            _ => top,
        }
    });
    Ok(VariationEstimate {
        p,
        t,
        levels,
        gap,
        converged,
        limit,
    })
}

fn level_sum<T: Scalar>(path: &CadlagPath<T>, grid: &[T], p: u32, t: T) -> Vec<T> {
    let d = path.dim();
    let mut acc = vec![T::zero(); d * d];
    let mut inc = vec![T::zero(); d];
    let tol = T::time_tol();
    for w in grid.windows(2) {
        if w[0] > t + tol {
            break;
        }
        for (c, v) in inc.iter_mut().enumerate() {
            *v = path.value(w[1], c) - path.value(w[0], c);
        }
        if d == 1 {
            acc[0] = acc[0] + inc[0].powi(p as i32);
        } else {
            for r in 0..d {
                for c in 0..d {
                    acc[r * d + c] = acc[r * d + c] + inc[r] * inc[c];
                }
            }
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(first: usize, last: usize) -> VariationConfig {
        VariationConfig {
            first_level: first,
            last_level: last,
            ..Default::default()
        }
    }

    #[test]
    fn single_jump_is_exact_once_resolved() {
        let ladder = PartitionLadder::dyadic(1.0, 10).unwrap();
        let x = CadlagPath::step(&[(0.0, 1.0), (0.5, 1.5)]).unwrap();
        let est = p_variation(&x, &ladder, 2, 1.0, &cfg(1, 10)).unwrap();
        for (_, v) in &est.levels {
            assert_eq!(v[0], 0.25);
        }
        assert!(est.converged);
        assert_eq!(est.limit.unwrap()[0], 0.25);
    }

    #[test]
    fn linear_path_quadratic_variation_vanishes() {
        let ladder = PartitionLadder::dyadic(1.0, 14).unwrap();
        let x = CadlagPath::linear(&[(0.0, 1.0), (1.0, 2.0)]).unwrap();
        let est = p_variation(&x, &ladder, 2, 1.0, &cfg(6, 14)).unwrap();
        for (n, v) in &est.levels {
            assert!((v[0] - 2f64.powi(-(*n as i32))).abs() < 1e-15);
        }
        assert!(est.converged);
        assert!(est.limit.unwrap()[0].abs() < 1e-12);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let ladder = PartitionLadder::dyadic(1.0, 4).unwrap();
        let x = CadlagPath::linear(&[(0.0, 1.0), (1.0, 3.0)]).unwrap();
        let est = p_variation(&x, &ladder, 2, 1.0, &cfg(0, 2)).unwrap();
        assert!(!est.converged);
        assert!(est.limit.is_none());
    }

    #[test]
    fn rejects_odd_order_and_tensor_p4() {
        let ladder = PartitionLadder::dyadic(1.0, 4).unwrap();
        let x = CadlagPath::constant(1.0);
        assert!(p_variation(&x, &ladder, 3, 1.0, &cfg(0, 4)).is_err());
        let y = CadlagPath::from_parts(
            crate::path::Interpolation::Step,
            2,
            vec![0.0, 0.5],
            vec![1.0, 1.0, 2.0, 0.5],
            None,
            None,
        )
        .unwrap();
        assert!(p_variation(&y, &ladder, 4, 1.0, &cfg(0, 4)).is_err());
        let est = p_variation(&y, &ladder, 2, 1.0, &cfg(1, 4)).unwrap();
        assert_eq!(est.limit.unwrap(), vec![1.0, -0.5, -0.5, 0.25]);
    }

    #[test]
    fn fourth_order_of_jump() {
        let ladder = PartitionLadder::dyadic(1.0, 6).unwrap();
        let x = CadlagPath::step(&[(0.0, 1.0), (0.3, 1.5), (0.7, 1.0)]).unwrap();
        let est = p_variation(&x, &ladder, 4, 1.0, &cfg(3, 6)).unwrap();
        assert!((est.limit.unwrap()[0] - 2.0 * 0.5f64.powi(4)).abs() < 1e-15);
    }
}
