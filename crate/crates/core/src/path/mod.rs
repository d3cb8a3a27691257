//! Càdlàg price paths on a finite breakpoint list.
//!
//! A [`CadlagPath`] stores breakpoints `t_0 = 0 < t_1 < ... < t_m` with the
//! right value `x(t_i)` and the left limit `x(t_i-)` at each of them. Row 0 of
//! the left limits is the pre-initial value `x(0-)`. Between breakpoints the
//! path is either constant ([`Interpolation::Step`]) or linear
//! ([`Interpolation::Linear`]); past the last breakpoint it is constant.
//!
//! Linear paths can still jump: a breakpoint whose left limit differs from its
//! value is a jump, which is how sampled jump-diffusions are represented.
//!
//! Functionals never look at a raw path. They receive a [`PathView`], a
//! borrowed path stopped at some time (optionally with a vertical bump on the
//! frozen tail), which is what makes non-anticipativity structural.

mod io;
mod ladder;
mod variation;

pub use io::{fmt_num, read_path, write_path, PathManifest};
pub use ladder::PartitionLadder;
pub use variation::{p_variation, VariationConfig, VariationEstimate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{same_time, Scalar};

/// Interpolation between breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Step,
    Linear,
}

/// Which version of a stopped path: `x_t` or `x_{t-}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopSide {
    At,
    Before,
}

/// `(x(t), x(t-), Δx(t))` for every component.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub value: Vec<T>,
    pub left_limit: Vec<T>,
    pub jump: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath<T> {
    mode: Interpolation,
    dim: usize,
    times: Vec<T>,
    values: Vec<T>,
    lefts: Vec<T>,
    // prefix data at each breakpoint, row-major like `values`
    area: Vec<T>,
    peak: Vec<T>,
    jump_sq: Vec<T>,
}

impl<T: Scalar> CadlagPath<T> {
    /// Builds a path from explicit breakpoint data.
    ///
    /// `lefts` row 0 is `x(0-)`. In step mode rows `i >= 1` must equal
    /// `values` row `i - 1`; pass `None` to have them derived.
    pub fn from_parts(
        mode: Interpolation,
        dim: usize,
        times: Vec<T>,
        values: Vec<T>,
        lefts: Option<Vec<T>>,
        initial: Option<Vec<T>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPath("dimension must be positive".into()));
        }
        if times.is_empty() {
            return Err(Error::InvalidPath("path needs at least one breakpoint".into()));
        }
        if values.len() != times.len() * dim {
            return Err(Error::Dimension {
                expected: times.len() * dim,
                got: values.len(),
            });
        }
        let mut times = times;
        if !same_time(times[0], T::zero()) {
            return Err(Error::InvalidPath(format!(
                "first breakpoint must be at t=0, got {}",
                times[0]
            )));
        }
        times[0] = T::zero();
        for w in times.windows(2) {
            if w[1] - w[0] <= T::time_tol() {
                return Err(Error::InvalidPath(format!(
                    "breakpoint times must increase strictly ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        let lefts = match (mode, lefts) {
            (_, Some(l)) => {
                if l.len() != values.len() {
                    return Err(Error::Dimension {
                        expected: values.len(),
                        got: l.len(),
                    });
                }
                if mode == Interpolation::Step && l[dim..] != values[..values.len() - dim] {
                    return Err(Error::InvalidPath(
                        "step path left limits must equal the previous value".into(),
                    ));
                }
                l
            }
            (Interpolation::Step, None) => {
                let mut l = Vec::with_capacity(values.len());
                l.extend_from_slice(&values[..dim]);
                l.extend_from_slice(&values[..values.len() - dim]);
                l
            }
            (Interpolation::Linear, None) => values.clone(),
        };
        let mut path = Self {
            mode,
            dim,
            times,
            values,
            lefts,
            area: Vec::new(),
            peak: Vec::new(),
            jump_sq: Vec::new(),
        };
        if let Some(init) = initial {
            if init.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: init.len(),
                });
            }
            path.lefts[..dim].copy_from_slice(&init);
        }
        for (i, v) in path.values.iter().chain(path.lefts.iter()).enumerate() {
            if !v.is_finite() || *v <= T::zero() {
                return Err(Error::InvalidPath(format!(
                    "values must be finite and positive (entry {i} = {v})"
                )));
            }
        }
        path.rebuild_prefix();
        Ok(path)
    }

    /// One-dimensional step path; `x(0-)` defaults to the first value.
    pub fn step(points: &[(T, T)]) -> Result<Self> {
        let (t, v) = points.iter().copied().unzip();
        Self::from_parts(Interpolation::Step, 1, t, v, None, None)
    }

    /// One-dimensional continuous piecewise-linear path.
    pub fn linear(points: &[(T, T)]) -> Result<Self> {
        let (t, v) = points.iter().copied().unzip();
        Self::from_parts(Interpolation::Linear, 1, t, v, None, None)
    }

    pub fn constant(value: T) -> Self {
        Self::step(&[(T::zero(), value)]).expect("constant path must be positive")
    }

    /// Builds a path from CSV-style rows. Two consecutive rows with the same
    /// time encode a jump in linear mode: the first row is the left limit.
    pub fn from_rows(
        mode: Interpolation,
        dim: usize,
        rows: &[(T, Vec<T>)],
        initial: Option<Vec<T>>,
    ) -> Result<Self> {
        let mut times = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        let mut lefts: Vec<T> = Vec::with_capacity(rows.len() * dim);
        let mut i = 0;
        while i < rows.len() {
            let (t, ref v) = rows[i];
            if v.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: v.len(),
                });
            }
            let jump_row = rows.get(i + 1).filter(|(t2, _)| same_time(*t2, t));
            match (mode, jump_row) {
                (Interpolation::Step, Some(_)) => {
                    return Err(Error::InvalidPath(format!(
                        "duplicate time {t} in step path"
                    )))
                }
                (Interpolation::Linear, Some((_, right))) => {
                    if right.len() != dim {
                        return Err(Error::Dimension {
                            expected: dim,
                            got: right.len(),
                        });
                    }
                    times.push(t);
                    lefts.extend_from_slice(v);
                    values.extend_from_slice(right);
                    i += 2;
                }
                (_, None) => {
                    times.push(t);
                    values.extend_from_slice(v);
                    match (mode, times.len()) {
                        (_, 1) => lefts.extend_from_slice(v),
                        (Interpolation::Step, _) => {
                            let prev = values.len() - 2 * dim;
                            let p = values[prev..prev + dim].to_vec();
                            lefts.extend_from_slice(&p)
                        }
                        (Interpolation::Linear, _) => lefts.extend_from_slice(v),
                    }
                    i += 1;
                }
            }
            if let Some((t3, _)) = rows.get(i) {
                if same_time(*t3, t) {
                    return Err(Error::InvalidPath(format!(
                        "more than two rows at time {t}"
                    )));
                }
            }
        }
        // a jump at t=0 in linear mode is the initial left limit
        let initial = initial.or_else(|| Some(lefts[..dim].to_vec()));
        Self::from_parts(mode, dim, times, values, Some(lefts), initial)
    }

    /// Rows as written to CSV (inverse of [`from_rows`](Self::from_rows)).
    pub fn to_rows(&self) -> Vec<(T, Vec<T>)> {
        let mut rows = Vec::with_capacity(self.times.len());
        for i in 0..self.times.len() {
            let v = self.value_row(i).to_vec();
            let l = self.left_row(i).to_vec();
            if self.mode == Interpolation::Linear && i > 0 && l != v {
                rows.push((self.times[i], l));
            }
            rows.push((self.times[i], v));
        }
        rows
    }

    fn rebuild_prefix(&mut self) {
        let (n, d) = (self.times.len(), self.dim);
        self.area = vec![T::zero(); n * d];
        self.peak = vec![T::zero(); n * d];
        self.jump_sq = vec![T::zero(); n * d];
        let half = T::lit(0.5);
        for c in 0..d {
            let j0 = self.values[c] - self.lefts[c];
            self.jump_sq[c] = j0 * j0;
            self.peak[c] = self.values[c];
            for i in 1..n {
                let k = i * d + c;
                let prev = (i - 1) * d + c;
                let dt = self.times[i] - self.times[i - 1];
                let seg = match self.mode {
                    Interpolation::Step => self.values[prev] * dt,
                    Interpolation::Linear => (self.values[prev] + self.lefts[k]) * half * dt,
                };
                self.area[k] = self.area[prev] + seg;
                self.peak[k] = self.peak[prev].max(self.lefts[k]).max(self.values[k]);
                let j = self.values[k] - self.lefts[k];
                self.jump_sq[k] = self.jump_sq[prev] + j * j;
            }
        }
    }

    pub fn mode(&self) -> Interpolation {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn last_time(&self) -> T {
        *self.times.last().expect("non-empty")
    }

    pub fn value_row(&self, i: usize) -> &[T] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn left_row(&self, i: usize) -> &[T] {
        &self.lefts[i * self.dim..(i + 1) * self.dim]
    }

    /// `x(0-)`.
    pub fn initial(&self) -> &[T] {
        self.left_row(0)
    }

    /// Replaces `x(0-)`.
    pub fn with_initial(mut self, initial: &[T]) -> Result<Self> {
        if initial.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: initial.len(),
            });
        }
        if initial.iter().any(|v| !v.is_finite() || *v <= T::zero()) {
            return Err(Error::InvalidPath("initial value must be positive".into()));
        }
        self.lefts[..self.dim].copy_from_slice(initial);
        self.rebuild_prefix();
        Ok(self)
    }

    /// Index of the last breakpoint `<= s` (within tolerance) and whether `s`
    /// sits on it.
    #[inline]
    pub(crate) fn locate(&self, s: T) -> (usize, bool) {
        let tol = T::time_tol();
        let idx = self.times.partition_point(|&t| t <= s + tol);
        let idx = idx.max(1) - 1;
        (idx, same_time(self.times[idx], s))
    }

    #[inline]
    fn at(&self, buf: &[T], i: usize, c: usize) -> T {
        buf[i * self.dim + c]
    }

    /// Slope of the segment starting at breakpoint `i` (zero for step paths and
    /// for the constant tail).
    #[inline]
    fn slope(&self, i: usize, c: usize) -> T {
        if self.mode == Interpolation::Step || i + 1 >= self.times.len() {
            return T::zero();
        }
        (self.at(&self.lefts, i + 1, c) - self.at(&self.values, i, c))
            / (self.times[i + 1] - self.times[i])
    }

    #[inline]
    fn on_segment(&self, i: usize, c: usize, s: T) -> T {
        self.at(&self.values, i, c) + self.slope(i, c) * (s - self.times[i])
    }

    /// Right-continuous value `x(s)`.
    #[inline]
    pub fn value(&self, s: T, c: usize) -> T {
        let (i, on) = self.locate(s);
        if on {
            self.at(&self.values, i, c)
        } else {
            self.on_segment(i, c, s)
        }
    }

    /// Left limit `x(s-)`, with `x(0-)` the stored initial value.
    #[inline]
    pub fn left_limit(&self, s: T, c: usize) -> T {
        let (i, on) = self.locate(s);
        if on {
            self.at(&self.lefts, i, c)
        } else {
            self.on_segment(i, c, s)
        }
    }

    pub fn jump(&self, s: T, c: usize) -> T {
        self.value(s, c) - self.left_limit(s, c)
    }

    pub fn sample(&self, t: T) -> Sample<T> {
        let value: Vec<T> = (0..self.dim).map(|c| self.value(t, c)).collect();
        let left_limit: Vec<T> = (0..self.dim).map(|c| self.left_limit(t, c)).collect();
        let jump = value.iter().zip(&left_limit).map(|(v, l)| *v - *l).collect();
        Sample {
            value,
            left_limit,
            jump,
        }
    }

    /// `∫_0^s x(u) du`, exact for both interpolation modes.
    pub fn integral(&self, s: T, c: usize) -> T {
        if s <= T::zero() {
            return T::zero();
        }
        let (i, on) = self.locate(s);
        let base = self.at(&self.area, i, c);
        if on {
            return base;
        }
        let dt = s - self.times[i];
        let start = self.at(&self.values, i, c);
        let end = self.on_segment(i, c, s);
        base + (start + end) * T::lit(0.5) * dt
    }

    /// `sup_{u < s} x(u)`; `-inf` for `s = 0`.
    pub fn sup_before(&self, s: T, c: usize) -> T {
        let (i, on) = self.locate(s);
        if on {
            if i == 0 {
                T::neg_infinity()
            } else {
                self.at(&self.peak, i - 1, c).max(self.at(&self.lefts, i, c))
            }
        } else {
            self.at(&self.peak, i, c).max(self.on_segment(i, c, s))
        }
    }

    /// `sup_{u <= s} x(u)`.
    pub fn sup_through(&self, s: T, c: usize) -> T {
        self.sup_before(s, c).max(self.value(s, c))
    }

    /// Squared jumps summed over `[0, s]`, the jump at 0 measured against `x(0-)`.
    /// For these paths this is the exact quadratic variation: linear segments
    /// contribute nothing in the limit.
    pub fn quadratic_variation(&self, s: T, c: usize) -> T {
        let (i, _) = self.locate(s);
        self.at(&self.jump_sq, i, c)
    }

    /// Sum of squared jumps strictly before `s`.
    fn quadratic_variation_before(&self, s: T, c: usize) -> T {
        let (i, on) = self.locate(s);
        match (on, i) {
            (true, 0) => T::zero(),
            (true, _) => self.at(&self.jump_sq, i - 1, c),
            (false, _) => self.at(&self.jump_sq, i, c),
        }
    }

    /// True when every value and left limit lies strictly inside `(lo, hi)`.
    pub fn within(&self, lo: T, hi: T) -> bool {
        self.values
            .iter()
            .chain(self.lefts.iter())
            .all(|v| *v > lo && *v < hi)
    }

    /// Borrowed view of `x_t` (`side = At`) or `x_{t-}` (`side = Before`).
    pub fn view(&self, t: T, side: StopSide) -> PathView<'_, T> {
        PathView::new(self, t, side)
    }

    /// Trajectory equality: same values and left limits at every breakpoint of
    /// either path and at segment midpoints.
    pub fn same_trajectory(&self, other: &Self, tol: T) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let mut grid: Vec<T> = self.times.iter().chain(&other.times).copied().collect();
        grid.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        grid.dedup_by(|a, b| same_time(*a, *b));
        let last = *grid.last().expect("non-empty");
        let mut probes = grid.clone();
        for w in grid.windows(2) {
            probes.push((w[0] + w[1]) * T::lit(0.5));
        }
        probes.push(last + T::one());
        probes.iter().all(|&s| {
            (0..self.dim).all(|c| {
                (self.value(s, c) - other.value(s, c)).abs() <= tol
                    && (self.left_limit(s, c) - other.left_limit(s, c)).abs() <= tol
            })
        })
    }
}

/// Stops a path: `x_t` for [`StopSide::At`], `x_{t-}` for [`StopSide::Before`].
pub fn stop<T: Scalar>(path: &CadlagPath<T>, t: T, side: StopSide) -> CadlagPath<T> {
    path.view(t, side).to_path()
}

/// `x_{t-} + e·1_[t,∞)`. Rejects bumps that would leave the positive cone.
pub fn vertical_perturb<T: Scalar>(path: &CadlagPath<T>, t: T, e: &[T]) -> Result<CadlagPath<T>> {
    let view = path.view(t, StopSide::Before);
    Ok(view.bumped(e)?.to_path())
}

/// Look-ahead piecewise-constant approximation on level `n` of the ladder:
/// value `x(t_{i+1})` on `[t_i, t_{i+1})`, and `x(t_k)` from the last grid
/// point on. `x(0-)` is inherited from the path.
pub fn approximate<T: Scalar>(
    path: &CadlagPath<T>,
    ladder: &PartitionLadder<T>,
    n: usize,
) -> Result<CadlagPath<T>> {
    let grid = ladder.grid(n)?;
    Ok(approximate_on(path, grid))
}

pub(crate) fn approximate_on<T: Scalar>(path: &CadlagPath<T>, grid: &[T]) -> CadlagPath<T> {
    let d = path.dim();
    let k = grid.len() - 1;
    let mut values = Vec::with_capacity(grid.len() * d);
    for i in 0..=k {
        let s = grid[(i + 1).min(k)];
        values.extend((0..d).map(|c| path.value(s, c)));
    }
    CadlagPath::from_parts(
        Interpolation::Step,
        d,
        grid.to_vec(),
        values,
        None,
        Some(path.initial().to_vec()),
    )
    .expect("approximation of a valid path is valid")
}

#[derive(Debug, Clone, PartialEq)]
enum Frozen<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Scalar> Frozen<T> {
    #[inline]
    fn get(&self, c: usize) -> T {
        match self {
            Frozen::One(v) => *v,
            Frozen::Many(v) => v[c],
        }
    }
}

/// A path stopped at `cut`, possibly with a vertical bump on the frozen tail:
/// equal to the base path on `[0, cut)` and to a constant from `cut` on.
#[derive(Debug, Clone, PartialEq)]
pub struct PathView<'a, T> {
    base: &'a CadlagPath<T>,
    cut: T,
    frozen: Frozen<T>,
}

/// One piece of a view on which the spot is affine in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub start: T,
    pub end: T,
    /// Spot at `start` (right value).
    pub spot: T,
    pub slope: T,
    /// `∫_0^start x(u) du`.
    pub area: T,
}

impl<'a, T: Scalar> PathView<'a, T> {
    fn new(base: &'a CadlagPath<T>, cut: T, side: StopSide) -> Self {
        let cut = cut.max(T::zero());
        let pick = |c| match side {
            StopSide::At => base.value(cut, c),
            StopSide::Before => base.left_limit(cut, c),
        };
        let frozen = if base.dim == 1 {
            Frozen::One(pick(0))
        } else {
            Frozen::Many((0..base.dim).map(pick).collect())
        };
        Self { base, cut, frozen }
    }

    pub fn base(&self) -> &'a CadlagPath<T> {
        self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    /// Stopping time.
    pub fn time(&self) -> T {
        self.cut
    }

    /// Frozen value, i.e. `x(t)` of the stopped path.
    #[inline]
    pub fn spot(&self, c: usize) -> T {
        self.frozen.get(c)
    }

    pub fn spots(&self) -> Vec<T> {
        (0..self.dim()).map(|c| self.spot(c)).collect()
    }

    pub fn initial(&self, c: usize) -> T {
        self.base.initial()[c]
    }

    #[inline]
    fn before_cut(&self, s: T) -> bool {
        s < self.cut - T::time_tol()
    }

    #[inline]
    pub fn value(&self, s: T, c: usize) -> T {
        if self.before_cut(s) {
            self.base.value(s, c)
        } else {
            self.spot(c)
        }
    }

    #[inline]
    pub fn left_limit(&self, s: T, c: usize) -> T {
        if self.before_cut(s) || same_time(s, self.cut) {
            self.base.left_limit(s.min(self.cut), c)
        } else {
            self.spot(c)
        }
    }

    pub fn jump(&self, s: T, c: usize) -> T {
        self.value(s, c) - self.left_limit(s, c)
    }

    /// `∫_0^s` of the stopped path.
    #[inline]
    pub fn integral(&self, s: T, c: usize) -> T {
        if s <= self.cut {
            self.base.integral(s, c)
        } else {
            self.base.integral(self.cut, c) + self.spot(c) * (s - self.cut)
        }
    }

    pub fn sup_before(&self, s: T, c: usize) -> T {
        if s <= self.cut + T::time_tol() {
            self.base.sup_before(s.min(self.cut), c)
        } else {
            self.base.sup_before(self.cut, c).max(self.spot(c))
        }
    }

    pub fn sup_through(&self, s: T, c: usize) -> T {
        self.sup_before(s, c).max(self.value(s, c))
    }

    /// Quadratic variation (sum of squared jumps) over `[0, s]`.
    pub fn quadratic_variation(&self, s: T, c: usize) -> T {
        if self.before_cut(s) {
            self.base.quadratic_variation(s, c)
        } else {
            let j = self.spot(c) - self.base.left_limit(self.cut, c);
            self.base.quadratic_variation_before(self.cut, c) + j * j
        }
    }

    /// Adds `e` to the frozen tail: `y = x_t + e·1_[t,∞)`.
    pub fn bumped(&self, e: &[T]) -> Result<Self> {
        if e.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: e.len(),
            });
        }
        let mut out = self.clone();
        let vals: Vec<T> = (0..self.dim()).map(|c| self.spot(c) + e[c]).collect();
        for (c, v) in vals.iter().enumerate() {
            if !(*v > T::zero()) {
                return Err(Error::InadmissiblePerturbation {
                    t: self.cut.as_f64(),
                    left: self.spot(c).as_f64(),
                    bump: e[c].as_f64(),
                });
            }
        }
        out.frozen = if vals.len() == 1 {
            Frozen::One(vals[0])
        } else {
            Frozen::Many(vals)
        };
        Ok(out)
    }

    /// Scalar bump of one component.
    pub fn bumped_component(&self, c: usize, e: T) -> Result<Self> {
        let mut v = vec![T::zero(); self.dim()];
        v[c] = e;
        self.bumped(&v)
    }

    /// Stops this (already stopped) path again at `t`.
    pub fn restop(&self, t: T, side: StopSide) -> Self {
        if self.before_cut(t) {
            return PathView::new(self.base, t, side);
        }
        if same_time(t, self.cut) && side == StopSide::Before {
            return PathView::new(self.base, self.cut, StopSide::Before);
        }
        self.clone()
    }

    /// Calls `f` on each affine piece of component `c` over `[s0, s1)`.
    pub fn for_each_segment(&self, s0: T, s1: T, c: usize, mut f: impl FnMut(Segment<T>)) {
        if s1 <= s0 {
            return;
        }
        let b = self.base;
        let head_end = s1.min(self.cut);
        if s0 < head_end {
            let (mut i, _) = b.locate(s0);
            let mut lo = s0;
            while lo < head_end {
                let seg_end = if i + 1 < b.len() { b.times[i + 1] } else { head_end };
                let hi = seg_end.min(head_end);
                if hi > lo {
                    f(Segment {
                        start: lo,
                        end: hi,
                        spot: if same_time(lo, b.times[i]) {
                            b.at(&b.values, i, c)
                        } else {
                            b.on_segment(i, c, lo)
                        },
                        slope: b.slope(i, c),
                        area: b.integral(lo, c),
                    });
                }
                lo = hi;
                i += 1;
                if i >= b.len() {
                    break;
                }
            }
        }
        let tail_start = s0.max(self.cut);
        if tail_start < s1 {
            f(Segment {
                start: tail_start,
                end: s1,
                spot: self.spot(c),
                slope: T::zero(),
                area: self.integral(tail_start, c),
            });
        }
    }

    /// Materializes the stopped path.
    pub fn to_path(&self) -> CadlagPath<T> {
        let b = self.base;
        let d = b.dim;
        let cut = self.cut;
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut lefts = Vec::new();
        for i in 0..b.len() {
            if !(b.times[i] < cut - T::time_tol()) {
                break;
            }
            times.push(b.times[i]);
            values.extend_from_slice(b.value_row(i));
            lefts.extend_from_slice(b.left_row(i));
        }
        let left_at_cut: Vec<T> = (0..d).map(|c| b.left_limit(cut, c)).collect();
        let frozen = self.spots();
        let redundant = b.mode == Interpolation::Step
            && !times.is_empty()
            && frozen == left_at_cut
            && values[values.len() - d..] == frozen[..];
        if times.is_empty() || !redundant {
            times.push(if times.is_empty() { T::zero() } else { cut });
            values.extend_from_slice(&frozen);
            lefts.extend_from_slice(&left_at_cut);
        }
        CadlagPath::from_parts(b.mode, d, times, values, Some(lefts), None)
            .expect("stopping preserves validity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jump_path() -> CadlagPath<f64> {
        CadlagPath::<f64>::step(&[(0.0, 1.0), (0.5, 2.0)]).unwrap()
    }

    #[test]
    fn sample_step_and_linear() {
        let x = jump_path();
        let s = x.sample(0.5);
        assert_eq!((s.value[0], s.left_limit[0], s.jump[0]), (2.0, 1.0, 1.0));
        let s = x.sample(0.25);
        assert_eq!((s.value[0], s.left_limit[0], s.jump[0]), (1.0, 1.0, 0.0));
        let l = CadlagPath::<f64>::linear(&[(0.0, 1.0), (1.0, 2.0)]).unwrap();
        let s = l.sample(0.5);
        assert_eq!((s.value[0], s.left_limit[0], s.jump[0]), (1.5, 1.5, 0.0));
        // constant extension past the last breakpoint
        assert_eq!(l.value(7.0, 0), 2.0);
    }

    #[test]
    fn left_limit_at_zero_is_initial_value() {
        let x = jump_path().with_initial(&[0.7]).unwrap();
        let s = x.sample(0.0);
        assert_eq!(s.left_limit[0], 0.7);
        assert!((s.jump[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_paths() {
        assert!(CadlagPath::<f64>::step(&[(0.1, 1.0)]).is_err());
        assert!(CadlagPath::<f64>::step(&[(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(CadlagPath::<f64>::step(&[(0.0, 1.0), (0.5, -2.0)]).is_err());
        assert!(CadlagPath::<f64>::step(&[(0.0, 1.0), (0.5, 0.4), (0.3, 2.0)]).is_err());
    }

    #[test]
    fn stop_at_and_before() {
        let x = jump_path();
        let at = stop(&x, 0.5, StopSide::At);
        assert_eq!(at.value(0.4, 0), 1.0);
        assert_eq!(at.value(0.5, 0), 2.0);
        assert_eq!(at.value(3.0, 0), 2.0);
        let before = stop(&x, 0.5, StopSide::Before);
        for s in [0.0, 0.25, 0.5, 0.75, 10.0] {
            assert_eq!(before.value(s, 0), 1.0);
        }
        assert_eq!(before.jump(0.5, 0), 0.0);
    }

    #[test]
    fn stop_inside_linear_segment_freezes_value() {
        let l = CadlagPath::<f64>::linear(&[(0.0, 1.0), (1.0, 2.0)]).unwrap();
        let s = stop(&l, 0.25, StopSide::At);
        assert_eq!(s.value(0.125, 0), 1.125);
        assert_eq!(s.value(0.25, 0), 1.25);
        assert_eq!(s.value(0.9, 0), 1.25);
        assert!((s.integral(1.0, 0) - (0.25 * 1.125 + 0.75 * 1.25)).abs() < 1e-15);
    }

    #[test]
    fn perturbation_examples() {
        let x = jump_path();
        let p = vertical_perturb(&x, 0.5, &[1.0]).unwrap();
        assert!(p.same_trajectory(&stop(&x, 0.5, StopSide::At), 0.0));
        let z = vertical_perturb(&x, 0.5, &[0.0]).unwrap();
        assert!(z.same_trajectory(&CadlagPath::<f64>::constant(1.0), 0.0));
        match vertical_perturb(&x, 0.5, &[-1.0]) {
            Err(Error::InadmissiblePerturbation { .. }) => {}
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn approximation_looks_ahead() {
        let ladder = PartitionLadder::dyadic(1.0, 4).unwrap();
        let l = CadlagPath::<f64>::linear(&[(0.0, 1.0), (1.0, 2.0)]).unwrap();
        let a = approximate(&l, &ladder, 1).unwrap();
        assert_eq!(a.value(0.0, 0), 1.5);
        assert_eq!(a.value(0.49, 0), 1.5);
        assert_eq!(a.value(0.5, 0), 2.0);
        assert_eq!(a.value(1.0, 0), 2.0);
        assert_eq!(a.initial()[0], 1.0);

        // the jump at 0.5 shows up one cell early
        let x = jump_path();
        let a = approximate(&x, &ladder, 2).unwrap();
        assert_eq!(a.value(0.0, 0), 1.0);
        assert_eq!(a.value(0.25, 0), 2.0);
        assert_eq!(a.left_limit(0.25, 0), 1.0);

        let c = CadlagPath::<f64>::constant(3.0);
        for n in 0..=4 {
            let a = approximate(&c, &ladder, n).unwrap();
            assert!(a.same_trajectory(&c, 0.0));
        }
    }

    #[test]
    fn linear_jump_rows_round_trip() {
        let rows = vec![
            (0.0, vec![1.0]),
            (0.5, vec![1.5]),
            (0.5, vec![0.8]),
            (1.0, vec![1.0]),
        ];
        let p = CadlagPath::<f64>::from_rows(Interpolation::Linear, 1, &rows, None).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.left_limit(0.5, 0), 1.5);
        assert_eq!(p.value(0.5, 0), 0.8);
        assert_eq!(p.value(0.25, 0), 1.25);
        assert!((p.quadratic_variation(1.0, 0) - 0.49).abs() < 1e-15);
        assert_eq!(p.to_rows(), rows);
    }

    #[test]
    fn running_integral_and_sup() {
        let x = CadlagPath::<f64>::step(&[(0.0, 1.0), (0.5, 2.0)]).unwrap();
        assert_eq!(x.integral(1.0, 0), 1.5);
        assert_eq!(x.integral(0.25, 0), 0.25);
        assert_eq!(x.sup_before(0.5, 0), 1.0);
        assert_eq!(x.sup_through(0.5, 0), 2.0);
        assert_eq!(x.sup_before(0.0, 0), f64::NEG_INFINITY);
        let l = CadlagPath::<f64>::linear(&[(0.0, 1.0), (0.5, 3.0), (1.0, 1.0)]).unwrap();
        assert_eq!(l.integral(1.0, 0), 2.0);
        assert_eq!(l.sup_before(0.75, 0), 3.0);
        assert_eq!(l.sup_before(0.25, 0), 2.0);
    }

    #[test]
    fn view_semantics() {
        let x = CadlagPath::<f64>::step(&[(0.0, 1.0), (0.3, 0.5), (0.6, 1.5)]).unwrap();
        let v = x.view(0.6, StopSide::Before);
        assert_eq!(v.spot(0), 0.5);
        assert_eq!(v.value(0.4, 0), 0.5);
        assert_eq!(v.value(0.9, 0), 0.5);
        assert_eq!(v.jump(0.6, 0), 0.0);
        assert!((v.quadratic_variation(1.0, 0) - 0.25).abs() < 1e-15);
        let w = v.bumped(&[1.0]).unwrap();
        assert_eq!(w.jump(0.6, 0), 1.0);
        assert!((w.quadratic_variation(1.0, 0) - 1.25).abs() < 1e-15);
        assert!((w.integral(1.0, 0) - (0.3 + 0.3 * 0.5 + 0.4 * 1.5)).abs() < 1e-15);
        assert_eq!(w.restop(0.6, StopSide::Before), v);
        assert!(v.bumped(&[-0.5]).is_err());
    }

    #[test]
    fn segments_cover_interval() {
        let l = CadlagPath::<f64>::from_rows(
            Interpolation::Linear,
            1,
            &[(0.0, vec![1.0]), (0.5, vec![2.0]), (0.5, vec![1.0]), (1.0, vec![1.5])],
            None,
        )
        .unwrap();
        let v = l.view(0.75, StopSide::At);
        let mut segs = Vec::new();
        v.for_each_segment(0.25, 1.0, 0, |s| segs.push(s));
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[0].start, 0.25);
        assert_eq!(segs[0].spot, 1.5);
        assert_eq!(segs[0].slope, 2.0);
        assert_eq!(segs[1].start, 0.5);
        assert_eq!(segs[1].spot, 1.0);
        assert_eq!(segs[2].start, 0.75);
        assert_eq!(segs[2].slope, 0.0);
        assert_eq!(segs[2].spot, 1.25);
        let mut area = 0.0;
        v.for_each_segment(0.0, 1.0, 0, |s| {
            let len = s.end - s.start;
            area += s.spot * len + 0.5 * s.slope * len * len;
        });
        assert!((area - v.integral(1.0, 0)).abs() < 1e-14);
    }
}
