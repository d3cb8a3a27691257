use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{same_time, Scalar};

/// A refining sequence of grids `0 = t_0 < ... < t_k = T` with vanishing mesh.
///
/// Level numbers are indices into the stored grids; the dyadic ladder stores
/// level `n` with mesh `T / 2^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionLadder<T> {
    horizon: T,
    levels: Vec<Vec<T>>,
}

impl<T: Scalar> PartitionLadder<T> {
    /// Dyadic refinement of `[0, horizon]`, levels `0..=max_level`.
    pub fn dyadic(horizon: T, max_level: usize) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidLadder(format!("horizon must be positive, got {horizon}")));
        }
        if max_level > 24 {
            return Err(Error::InvalidLadder(format!("level {max_level} too fine")));
        }
        let levels = (0..=max_level)
            .map(|n| {
                let k = 1usize << n;
                let step = horizon / T::lit(k as f64);
                let mut g: Vec<T> = (0..k).map(|i| T::lit(i as f64) * step).collect();
                g.push(horizon);
                g
            })
            .collect();
        Ok(Self { horizon, levels })
    }

    /// Arbitrary user grids; each must be sorted, start at 0, end at the
    /// horizon, and the mesh must decrease strictly from level to level.
    pub fn from_grids(horizon: T, grids: Vec<Vec<T>>) -> Result<Self> {
        if grids.is_empty() {
            return Err(Error::InvalidLadder("no levels".into()));
        }
        let mut last_mesh = T::infinity();
        for (n, g) in grids.iter().enumerate() {
            if g.len() < 2 || !same_time(g[0], T::zero()) || !same_time(g[g.len() - 1], horizon) {
                return Err(Error::InvalidLadder(format!(
                    "level {n} must run from 0 to the horizon"
                )));
            }
            if g.windows(2).any(|w| w[1] - w[0] <= T::time_tol()) {
                return Err(Error::InvalidLadder(format!("level {n} is not strictly increasing")));
            }
            let m = mesh_of(g);
            if m >= last_mesh {
                return Err(Error::InvalidLadder(format!("mesh does not decrease at level {n}")));
            }
            last_mesh = m;
        }
        Ok(Self { horizon, levels: grids })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn grid(&self, n: usize) -> Result<&[T]> {
        self.levels
            .get(n)
            .map(Vec::as_slice)
            .ok_or(Error::LevelOutOfRange {
                level: n,
                first: 0,
                last: self.max_level(),
            })
    }

    pub fn mesh(&self, n: usize) -> Result<T> {
        self.grid(n).map(mesh_of)
    }

    /// `t'_n = max{t_i ∈ π_n : t_i < t}`, with `max ∅ = 0`.
    pub fn predecessor(&self, n: usize, t: T) -> Result<T> {
        let g = self.grid(n)?;
        let idx = g.partition_point(|&s| s < t - T::time_tol());
        Ok(if idx == 0 { T::zero() } else { g[idx - 1] })
    }

    /// `min{t_i ∈ π_n : t_i > t}`, with `min ∅ = t_{k_n}`.
    pub fn successor(&self, n: usize, t: T) -> Result<T> {
        let g = self.grid(n)?;
        let idx = g.partition_point(|&s| s <= t + T::time_tol());
        Ok(*g.get(idx).unwrap_or(&g[g.len() - 1]))
    }
}

fn mesh_of<T: Scalar>(g: &[T]) -> T {
    g.windows(2)
        .map(|w| w[1] - w[0])
        .fold(T::zero(), |a, b| a.max(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_levels() {
        let l = PartitionLadder::dyadic(1.0, 3).unwrap();
        assert_eq!(l.grid(0).unwrap(), &[0.0, 1.0]);
        assert_eq!(l.grid(2).unwrap(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(l.mesh(3).unwrap(), 0.125);
        assert!(l.grid(4).is_err());
        for n in 0..3 {
            assert!(l.mesh(n + 1).unwrap() < l.mesh(n).unwrap());
        }
    }

    #[test]
    fn predecessor_and_successor_conventions() {
        let l = PartitionLadder::dyadic(1.0, 2).unwrap();
        assert_eq!(l.predecessor(2, 0.5).unwrap(), 0.25);
        assert_eq!(l.predecessor(2, 0.6).unwrap(), 0.5);
        assert_eq!(l.predecessor(2, 0.0).unwrap(), 0.0);
        assert_eq!(l.successor(2, 0.5).unwrap(), 0.75);
        assert_eq!(l.successor(2, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn custom_grids_validated() {
        assert!(PartitionLadder::from_grids(1.0, vec![vec![0.0, 1.0], vec![0.0, 0.3, 1.0]]).is_ok());
        assert!(PartitionLadder::from_grids(1.0, vec![vec![0.0, 0.5, 1.0], vec![0.0, 0.9, 1.0]]).is_err());
        assert!(PartitionLadder::from_grids(1.0, vec![vec![0.0, 0.5]]).is_err());
        assert!(PartitionLadder::<f64>::dyadic(0.0, 2).is_err());
    }
}
