//! Scalar error dynamics `ė = r(e) + s(e) + w(t)`.
//!
//! Integration is classical RK4 on a fixed output grid. Where the
//! rectifying action is stiff relative to the current error (large errors
//! under high powers, or the non-Lipschitz region near zero) a step is
//! subdivided so that no substep moves the error by more than a fraction
//! of itself. Samples are only recorded on the output grid.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compensate::{compensate, Compensation};
use crate::error::{Error, Result};
use crate::laws::AttractingLaw;

pub const DEFAULT_DT: f64 = 1e-4;
pub const DEFAULT_SETTLE_TOL: f64 = 1e-6;
pub const DEFAULT_DEADZONE: f64 = 1e-12;

/// Largest fraction of `|e|` the rectifying action may move the error in one substep.
const STIFF_FRACTION: f64 = 0.1;
/// Smallest substep, as a power-of-two fraction of `dt`.
const MIN_SUBSTEP_LOG2: i32 = 20;

/// Lumped disturbance `w(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum Disturbance {
    #[default]
    Zero,
    Constant {
        c: f64,
    },
    Sinusoid {
        amplitude: f64,
        angular_frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    BoundedNoise {
        bound: f64,
        seed: u64,
    },
}

impl Disturbance {
    pub fn validate(&self) -> Result<()> {
        let finite = |field: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(field, format!("{v} is not finite")))
            }
        };
        match *self {
            Disturbance::Zero => Ok(()),
            Disturbance::Constant { c } => finite("c", c),
            Disturbance::Sinusoid {
                amplitude,
                angular_frequency,
                phase,
            } => {
                finite("amplitude", amplitude)?;
                finite("angular_frequency", angular_frequency)?;
                finite("phase", phase)
            }
            Disturbance::BoundedNoise { bound, .. } => {
                if bound > 0.0 && bound.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("bound", format!("{bound} must be > 0")))
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Disturbance::Zero => "Zero",
            Disturbance::Constant { .. } => "Constant",
            Disturbance::Sinusoid { .. } => "Sinusoid",
            Disturbance::BoundedNoise { .. } => "BoundedNoise",
        }
    }

    /// Declared bound on `|w(t)|`.
    pub fn bound(&self) -> f64 {
        match *self {
            Disturbance::Zero => 0.0,
            Disturbance::Constant { c } => c.abs(),
            Disturbance::Sinusoid { amplitude, .. } => amplitude.abs(),
            Disturbance::BoundedNoise { bound, .. } => bound,
        }
    }

    /// Same disturbance with its noise stream reseeded; other variants are unchanged.
    pub fn with_seed(&self, seed: u64) -> Self {
        match *self {
            Disturbance::BoundedNoise { bound, .. } => Disturbance::BoundedNoise { bound, seed },
            other => other,
        }
    }

    /// Sampler that yields `w` for successive steps.
    pub fn sampler(&self) -> DisturbanceSampler {
        let rng = match *self {
            Disturbance::BoundedNoise { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        DisturbanceSampler {
            dist: *self,
            rng,
            held: 0.0,
        }
    }
}

/// Stateful view of a [`Disturbance`]. Noise is piecewise constant: call
/// [`DisturbanceSampler::begin_step`] once per output step, then read
/// [`DisturbanceSampler::at`] for any time inside that step.
#[derive(Debug, Clone)]
pub struct DisturbanceSampler {
    dist: Disturbance,
    rng: Option<ChaCha8Rng>,
    held: f64,
}

impl DisturbanceSampler {
    pub fn begin_step(&mut self) {
        if let (Disturbance::BoundedNoise { bound, .. }, Some(rng)) = (self.dist, self.rng.as_mut()) {
            self.held = rng.gen_range(-bound..=bound);
        }
    }

    pub fn at(&self, t: f64) -> f64 {
        match self.dist {
            Disturbance::Zero => 0.0,
            Disturbance::Constant { c } => c,
            Disturbance::Sinusoid {
                amplitude,
                angular_frequency,
                phase,
            } => amplitude * (angular_frequency * t + phase).sin(),
            Disturbance::BoundedNoise { .. } => self.held,
        }
    }
}

/// Inputs of one scalar run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErsConfig {
    pub law: AttractingLaw,
    #[serde(default)]
    pub comp: Compensation,
    #[serde(default)]
    pub dist: Disturbance,
    pub dt: f64,
    pub horizon: f64,
    pub settle_tol: f64,
    pub deadzone: f64,
}

impl ErsConfig {
    /// Defaults for step, tolerance and deadzone.
    pub fn new(law: AttractingLaw, horizon: f64) -> Self {
        Self {
            law,
            comp: Compensation::None,
            dist: Disturbance::Zero,
            dt: DEFAULT_DT,
            horizon,
            settle_tol: DEFAULT_SETTLE_TOL,
            deadzone: DEFAULT_DEADZONE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        self.comp.validate()?;
        self.dist.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("{} must be > 0", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::param(
                "horizon",
                format!("{} must be finite and >= dt", self.horizon),
            ));
        }
        if self.deadzone.is_nan() || self.deadzone <= 0.0 {
            return Err(Error::param("deadzone", format!("{} must be > 0", self.deadzone)));
        }
        if !(self.settle_tol > self.deadzone && self.settle_tol.is_finite()) {
            return Err(Error::param(
                "settle_tol",
                format!("{} must exceed the deadzone {}", self.settle_tol, self.deadzone),
            ));
        }
        Ok(())
    }

    /// Whether exact arrival at zero is representable: no disturbance and no
    /// discontinuous compensation.
    pub fn clamps(&self) -> bool {
        self.dist == Disturbance::Zero && !self.comp.is_signum()
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }
}

/// Sampled scalar trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    /// Disturbance value applied over the step starting at each sample.
    pub disturbance: Vec<f64>,
    pub meta: ErsConfig,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Write `t,e_1,w_1` rows with round-trip precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,e_1,w_1")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{:?},{:?},{:?}",
                self.times[i], self.errors[i], self.disturbance[i]
            )?;
        }
        Ok(())
    }
}

fn substep_limit(law: &AttractingLaw, e: f64, dt: f64) -> f64 {
    let r = law.rectify(e).abs();
    if r == 0.0 {
        return dt;
    }
    let h = STIFF_FRACTION * e.abs() / r;
    h.clamp(dt * 2f64.powi(-MIN_SUBSTEP_LOG2), dt)
}

/// Integrate from `e0` over `[0, horizon]`.
pub fn integrate_scalar(config: &ErsConfig, e0: f64) -> Result<Trace> {
    config.validate()?;
    if !e0.is_finite() {
        return Err(Error::Domain(format!("initial error {e0} is not finite")));
    }
    let law = config.law;
    let comp = config.comp;
    let dt = config.dt;
    let n = config.steps();
    let clamps = config.clamps();
    let rhs = |e: f64, w: f64| law.rectify(e) + compensate(&comp, e) + w;

    let mut sampler = config.dist.sampler();
    let mut times = Vec::with_capacity(n + 1);
    let mut errors = Vec::with_capacity(n + 1);
    let mut disturbance = Vec::with_capacity(n + 1);

    let mut e = e0;
    if clamps && e.abs() < config.deadzone {
        e = 0.0;
    }
    for k in 0..=n {
        let t0 = k as f64 * dt;
        sampler.begin_step();
        times.push(t0);
        errors.push(e);
        disturbance.push(sampler.at(t0));
        if k == n {
            break;
        }
        if clamps && e == 0.0 {
            continue;
        }
        let t_end = (k + 1) as f64 * dt;
        let mut t = t0;
        while t < t_end {
            let h = substep_limit(&law, e, dt).min(t_end - t);
            let k1 = rhs(e, sampler.at(t));
            let k2 = rhs(e + 0.5 * h * k1, sampler.at(t + 0.5 * h));
            let k3 = rhs(e + 0.5 * h * k2, sampler.at(t + 0.5 * h));
            let k4 = rhs(e + h * k3, sampler.at(t + h));
            let next = e + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !next.is_finite() {
                return Err(Error::Divergence { time: t + h });
            }
            t += h;
            if clamps && (next.abs() < config.deadzone || next.signum() != e.signum()) {
                e = 0.0;
                break;
            }
            e = next;
        }
    }
    Ok(Trace {
        times,
        errors,
        disturbance,
        meta: *config,
    })
}

/// Earliest sample time after which every sample satisfies `|e| ≤ tol`.
pub fn empirical_settling_time(trace: &Trace, tol: f64) -> Option<f64> {
    settling_index(trace.errors.iter().map(|e| e.abs()), tol).map(|i| trace.times[i])
}

/// Index form of [`empirical_settling_time`] over a sequence of magnitudes.
pub fn settling_index<I>(mags: I, tol: f64) -> Option<usize>
where
    I: DoubleEndedIterator<Item = f64> + ExactSizeIterator,
{
    let len = mags.len();
    if len == 0 {
        return None;
    }
    match mags.rev().position(|m| m.is_nan() || m > tol) {
        None => Some(0),
        Some(0) => None,
        Some(back) => Some(len - back),
    }
}

/// `sup |e(t)|` over samples with `t ≥ after`.
pub fn empirical_residual(trace: &Trace, after: f64) -> f64 {
    trace
        .times
        .iter()
        .zip(&trace.errors)
        .filter(|(t, _)| **t >= after)
        .fold(0.0, |acc, (_, e)| acc.max(e.abs()))
}
