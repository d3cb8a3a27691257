//! Scenario corpora. These only populate path sets for the pathwise
//! checks; nothing here is a probability model or a Monte-Carlo pricer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{vertical_perturb, CadlagPath, Interpolation};
use crate::portfolio::ScenarioSource;
use crate::superhedge::{adversarial_path, AsianParams, ScenarioBounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioClass {
    Step,
    BvSampled,
    JumpDiffusionSampled,
    Adversarial,
    /// Round-robin over step, bv_sampled and jump_diffusion_sampled.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub class: ScenarioClass,
    pub bounds: Option<ScenarioBounds<f64>>,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Starting level, clamped into the band.
    pub x0: f64,
    /// Upper bound on the number of breakpoints of a step path.
    pub max_breaks: usize,
    /// Grid points of the sampled classes.
    pub samples: usize,
    /// Expected number of jumps over the horizon.
    pub jump_intensity: f64,
    /// Scale of the sampled wiggle per unit time.
    pub wiggle: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            class: ScenarioClass::Mixed,
            bounds: Some(ScenarioBounds { a: 0.0, b: 2.0 }),
            horizon: 1.0,
            n_paths: 1000,
            seed: 7,
            x0: 1.0,
            max_breaks: 12,
            samples: 256,
            jump_intensity: 3.0,
            wiggle: 0.4,
        }
    }
}

/// Open interval the generators aim for, shrunk by the margin.
fn target_band(spec: &ScenarioSpec) -> (f64, f64) {
    match spec.bounds {
        Some(b) => (b.a + b.margin(), b.b - b.margin()),
        None => (spec.x0 * 0.05, spec.x0 * 20.0),
    }
}

fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let w = hi - lo;
    let mut u = (v - lo).rem_euclid(2.0 * w);
    if u > w {
        u = 2.0 * w - u;
    }
    (lo + u).clamp(lo, hi)
}

impl ScenarioSpec {
    pub fn with_class(class: ScenarioClass, n_paths: usize, seed: u64) -> Self {
        Self {
            class,
            n_paths,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.bounds {
            ScenarioBounds::new(b.a, b.b)?;
        }
        if !(self.horizon > 0.0) || self.samples < 2 || self.max_breaks == 0 {
            return Err(Error::InvalidParams("scenario needs T > 0, samples >= 2, max_breaks >= 1".into()));
        }
        if !(self.x0 > 0.0) || self.jump_intensity < 0.0 || self.wiggle < 0.0 {
            return Err(Error::InvalidParams("scenario needs x0 > 0 and nonnegative rates".into()));
        }
        Ok(())
    }

    fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    fn start(&self) -> f64 {
        let (lo, hi) = target_band(self);
        self.x0.clamp(lo, hi)
    }

    pub fn class_of(&self, index: u64) -> ScenarioClass {
        match self.class {
            ScenarioClass::Mixed => [
                ScenarioClass::Step,
                ScenarioClass::BvSampled,
                ScenarioClass::JumpDiffusionSampled,
            ][(index % 3) as usize],
            c => c,
        }
    }

    /// Path number `index`; depends on `(seed, index)` only.
    pub fn path(&self, index: u64) -> Result<CadlagPath<f64>> {
        let mut rng = self.rng(index);
        match self.class_of(index) {
            ScenarioClass::Step => self.step_path(&mut rng),
            ScenarioClass::BvSampled => self.sampled_path(&mut rng, false),
            ScenarioClass::JumpDiffusionSampled => self.sampled_path(&mut rng, true),
            ScenarioClass::Adversarial => self.adversarial(index, &mut rng),
            ScenarioClass::Mixed => unreachable!(),
        }
    }

    fn step_path(&self, rng: &mut ChaCha8Rng) -> Result<CadlagPath<f64>> {
        let (lo, hi) = target_band(self);
        let k = rng.gen_range(1..=self.max_breaks);
        let mut times: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..self.horizon)).collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let mut pts = vec![(0.0, self.start())];
        for t in times.into_iter().filter(|t| *t > 0.0) {
            pts.push((t, rng.gen_range(lo..hi)));
        }
        CadlagPath::step(&pts)
    }

    fn sampled_path(&self, rng: &mut ChaCha8Rng, jumps: bool) -> Result<CadlagPath<f64>> {
        let (lo, hi) = target_band(self);
        let m = self.samples;
        let dt = self.horizon / (m - 1) as f64;
        let scale = self.wiggle * (hi - lo).min(self.x0.max(1.0)) * dt.sqrt();
        let p_jump = (self.jump_intensity * dt).min(1.0);
        let mut x = self.start();
        let mut rows = vec![(0.0, vec![x])];
        for i in 1..m {
            let t = dt * i as f64;
            let z: f64 = StandardNormal.sample(rng);
            x = reflect(x + scale * z, lo, hi);
            rows.push((t, vec![x]));
            if jumps && i + 1 < m && rng.gen_bool(p_jump) {
                x = rng.gen_range(lo..hi);
                rows.push((t, vec![x]));
            }
        }
        CadlagPath::from_rows(Interpolation::Linear, 1, &rows, None)
    }

    /// `z^ε` paths from the starting level and single-jump perturbations
    /// of sampled paths, alternating.
    fn adversarial(&self, index: u64, rng: &mut ChaCha8Rng) -> Result<CadlagPath<f64>> {
        let b = self.bounds.unwrap_or(ScenarioBounds { a: 0.0, b: 2.0 * self.x0 });
        let (lo, hi) = target_band(self);
        if index.is_multiple_of(2) {
            let eps = 0.1 * 0.5f64.powi((index / 2 % 8) as i32);
            let params = AsianParams::new(self.horizon, 0.0, b.a, b.b)?;
            let start = CadlagPath::constant(self.start());
            adversarial_path(&params, &start.view(0.0, crate::path::StopSide::At), eps)
        } else {
            let base = if index % 4 == 1 {
                CadlagPath::constant(self.start())
            } else {
                self.sampled_path(rng, false)?
            };
            let t = self.horizon * rng.gen_range(1..16) as f64 / 16.0;
            let target = rng.gen_range(lo..hi);
            vertical_perturb(&base, t, &[target - base.left_limit(t, 0)])
        }
    }

    /// Checks a path against the declared class and bounds.
    pub fn check(&self, index: u64, path: &CadlagPath<f64>) -> Result<()> {
        let fail = |why: &str| Err(Error::InvalidPath(format!("scenario {index}: {why}")));
        match self.bounds {
            Some(b) if !path.within(b.a, b.b) => return fail("leaves the band"),
            _ => {}
        }
        if path.last_time() > self.horizon + 1e-12 {
            return fail("breakpoint past the horizon");
        }
        let continuous = (0..path.len()).all(|i| path.value_row(i) == path.left_row(i));
        match self.class_of(index) {
            ScenarioClass::Step if path.mode() != Interpolation::Step => fail("not a step path"),
            ScenarioClass::BvSampled if path.mode() != Interpolation::Linear || !continuous => {
                fail("not a continuous piecewise-linear path")
            }
            ScenarioClass::JumpDiffusionSampled if path.mode() != Interpolation::Linear => {
                fail("not a sampled path")
            }
            _ => Ok(()),
        }
    }
}

impl ScenarioSource<f64> for ScenarioSpec {
    fn sample(&self, index: u64) -> Result<CadlagPath<f64>> {
        self.path(index)
    }
    fn admits_jumps(&self) -> bool {
        self.class != ScenarioClass::BvSampled
    }
    fn label(&self) -> String {
        format!("{:?} (seed {})", self.class, self.seed)
    }
}

/// `n_paths` paths in index order; each one passes `spec.check`.
pub fn generate_scenarios(spec: &ScenarioSpec) -> Result<Vec<CadlagPath<f64>>> {
    spec.validate()?;
    (0..spec.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let p = spec.path(i)?;
            spec.check(i, &p)?;
            Ok(p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_band() {
        let spec = ScenarioSpec::with_class(ScenarioClass::Step, 100, 7);
        let a = generate_scenarios(&spec).unwrap();
        let b = generate_scenarios(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.within(0.0, 2.0)));
        let other = generate_scenarios(&ScenarioSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn every_class_validates() {
        for class in [
            ScenarioClass::Step,
            ScenarioClass::BvSampled,
            ScenarioClass::JumpDiffusionSampled,
            ScenarioClass::Adversarial,
            ScenarioClass::Mixed,
        ] {
            let spec = ScenarioSpec::with_class(class, 30, 3);
            assert_eq!(generate_scenarios(&spec).unwrap().len(), 30);
        }
    }

    #[test]
    fn jump_class_has_jumps() {
        let spec = ScenarioSpec::with_class(ScenarioClass::JumpDiffusionSampled, 20, 1);
        let paths = generate_scenarios(&spec).unwrap();
        assert!(paths.iter().any(|p| (0..p.len()).any(|i| p.value_row(i) != p.left_row(i))));
    }

    #[test]
    fn bad_bounds() {
        let spec = ScenarioSpec {
            bounds: Some(ScenarioBounds { a: 2.0, b: 1.0 }),
            ..Default::default()
        };
        assert!(generate_scenarios(&spec).is_err());
    }
}
