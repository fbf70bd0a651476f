//! Fixed-step deterministic and stochastic time stepping.
//!
//! Noiseless spans use classical RK4; once the noise gate opens and the
//! model's noise amplitude is nonzero, stepping switches to the stochastic
//! Heun predictor-corrector (the noise is additive, so the Ito and
//! Stratonovich readings coincide and the same increment is used in the
//! predictor and the corrector). Schedules are evaluated at stage times
//! as-is; pulse edges are expected to land on step boundaries.
//!
//! Every noise increment is keyed by `(rng_seed, site, step)`, so a seed
//! fixes the whole trajectory bit-for-bit regardless of how many other
//! integrations run concurrently.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{noise_amplitudes, Model, NoiseChannel, SystemState};
use crate::schedule::ScheduleSet;

/// Step size, span, decimation and noise gating for one integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t0: f64,
    pub tf: f64,
    /// Steps per recorded sample.
    pub sample_stride: usize,
    pub rng_seed: u64,
    /// Noise increments are zero before this time; `None` disables noise for
    /// the whole run (the mean-field limit of the same code path).
    pub noise_enabled_from: Option<f64>,
}

impl IntegrationConfig {
    /// Noiseless run over `[t0, tf]`.
    pub fn noiseless(dt: f64, t0: f64, tf: f64, sample_stride: usize) -> Self {
        IntegrationConfig { dt, t0, tf, sample_stride, rng_seed: 0, noise_enabled_from: None }
    }

    pub fn with_noise_from(mut self, t: f64, seed: u64) -> Self {
        self.noise_enabled_from = Some(t);
        self.rng_seed = seed;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    /// Effective gate time (`+inf` when noise is disabled).
    pub fn noise_gate(&self) -> f64 {
        self.noise_enabled_from.unwrap_or(f64::INFINITY)
    }

    pub fn n_steps(&self) -> usize {
        ((self.tf - self.t0) / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig("dt must be positive and finite".into()));
        }
        if !(self.tf > self.t0) {
            return Err(Error::InvalidConfig("tf must exceed t0".into()));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidConfig("sample_stride must be >= 1".into()));
        }
        let n = self.n_steps();
        if n == 0 {
            return Err(Error::InvalidConfig("span shorter than one step".into()));
        }
        let span_err = (self.t0 + n as f64 * self.dt - self.tf).abs();
        if span_err > 1e-6 * self.dt {
            return Err(Error::InvalidConfig(format!(
                "span is not a whole number of steps (residual {span_err:e})"
            )));
        }
        if n % self.sample_stride != 0 {
            return Err(Error::InvalidConfig(
                "span must be a whole number of sample strides".into(),
            ));
        }
        Ok(())
    }
}

/// Round a time to the nearest integration step boundary.
pub fn round_to_step(t: f64, dt: f64) -> f64 {
    (t / dt).round() * dt
}

/// Decimated record of one integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<SystemState>,
    model_tag: String,
    config: IntegrationConfig,
    warnings: Vec<String>,
}

impl Trajectory {
    /// Wrap externally produced samples (synthetic signals, imported data)
    /// as a trajectory. Times must be uniformly spaced and ascending.
    pub fn from_samples(
        times: Vec<f64>,
        states: Vec<SystemState>,
        tag: &str,
    ) -> Result<Trajectory> {
        if times.len() < 2 || times.len() != states.len() {
            return Err(Error::InvalidConfig(
                "need at least two samples with matching times and states".into(),
            ));
        }
        let h = times[1] - times[0];
        if !(h > 0.0) {
            return Err(Error::InvalidConfig("times must be ascending".into()));
        }
        for (i, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs() {
                return Err(Error::InvalidConfig(format!(
                    "non-uniform sample spacing at index {i}"
                )));
            }
        }
        let config = IntegrationConfig {
            dt: h,
            t0: times[0],
            tf: *times.last().unwrap(),
            sample_stride: 1,
            rng_seed: 0,
            noise_enabled_from: None,
        };
        Ok(Trajectory { times, states, model_tag: tag.to_string(), config, warnings: Vec::new() })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn config(&self) -> &IntegrationConfig {
        &self.config
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Spacing between recorded samples.
    pub fn sample_interval(&self) -> f64 {
        self.config.dt * self.config.sample_stride as f64
    }

    pub fn final_state(&self) -> &SystemState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    /// Index of the recorded sample at time `t`, which must lie on the
    /// sample grid to within a small tolerance.
    pub fn sample_index(&self, t: f64) -> Result<usize> {
        let h = self.sample_interval();
        let x = (t - self.config.t0) / h;
        let idx = x.round();
        if (x - idx).abs() > 1e-6 {
            return Err(Error::Demod(format!("time {t} is not on the sample grid")));
        }
        let idx = idx as isize;
        if idx < 0 || idx as usize >= self.times.len() {
            return Err(Error::Demod(format!("time {t} outside the recorded span")));
        }
        Ok(idx as usize)
    }
}

/// Anything the stepper can integrate: a drift field plus a noise channel.
/// [`Model`] implements this; test code adds closed-form problems.
pub trait Flow {
    fn drift_into(&self, state: &SystemState, t: f64, sched: &ScheduleSet, out: &mut SystemState);
    fn noise(&self) -> NoiseChannel;
    fn tag(&self) -> String;
    /// Optional per-sample validity metric; values above 1.0 raise a
    /// diagnostic in the trajectory.
    fn validity_metric(&self, _state: &SystemState) -> Option<f64> {
        None
    }
}

impl Flow for Model {
    fn drift_into(&self, state: &SystemState, t: f64, sched: &ScheduleSet, out: &mut SystemState) {
        Model::drift_into(self, state, t, sched, out)
    }

    fn noise(&self) -> NoiseChannel {
        noise_amplitudes(self).expect("validated model")
    }

    fn tag(&self) -> String {
        self.kind().to_string()
    }

    fn validity_metric(&self, state: &SystemState) -> Option<f64> {
        // normal-phase bound |b|^2/N < 0.5 mapped onto [0, 1]
        Model::validity_metric(self, state).map(|m| m / 0.5)
    }
}

/// Integrate a model over the configured span.
///
/// Deterministic RK4 while the noise is inactive, stochastic Heun once it is;
/// the same seed always reproduces the identical trajectory. The sampling
/// rate must resolve the subharmonic period with at least 32 samples so the
/// demodulation contract holds downstream.
pub fn integrate(
    model: &Model,
    sched: &ScheduleSet,
    init: &SystemState,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    model.validate()?;
    if !model.state_matches(init) {
        return Err(Error::VariantMismatch);
    }
    sched.validate(model.topology().edges().len(), model.n_sites())?;
    let subharmonic_period = 2.0 * model.drive_period();
    let sample_interval = cfg.dt * cfg.sample_stride as f64;
    if sample_interval > subharmonic_period / 32.0 * (1.0 + 1e-9) {
        return Err(Error::InvalidConfig(format!(
            "sample interval {sample_interval} exceeds subharmonic period / 32"
        )));
    }
    integrate_flow(model, sched, init, cfg)
}

/// Integrate an arbitrary [`Flow`]. Skips the model-specific sampling-rate
/// check; everything else is identical to [`integrate`].
pub fn integrate_flow<F: Flow>(
    flow: &F,
    sched: &ScheduleSet,
    init: &SystemState,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !init.is_finite() {
        return Err(Error::NonFinite { t: cfg.t0 });
    }
    let n_steps = cfg.n_steps();
    let dt = cfg.dt;
    let sqrt_dt = dt.sqrt();
    let noise = flow.noise();
    let noise_active = !noise.is_zero();
    // First step index whose increment is drawn; pulse alignment guarantees
    // the gate lands on a step boundary.
    let gate = cfg.noise_gate();
    let noise_from_step = if !noise_active || !gate.is_finite() {
        usize::MAX
    } else if gate <= cfg.t0 {
        0
    } else {
        (((gate - cfg.t0) / dt) - 1e-9).ceil() as usize
    };

    let n_samples = n_steps / cfg.sample_stride + 1;
    let mut times = Vec::with_capacity(n_samples);
    let mut states = Vec::with_capacity(n_samples);
    let mut max_validity: f64 = 0.0;

    let mut y = init.clone();
    let mut k1 = init.zeros_like();
    let mut k2 = init.zeros_like();
    let mut k3 = init.zeros_like();
    let mut k4 = init.zeros_like();
    let mut stage = init.zeros_like();
    let mut ynext = init.zeros_like();

    let record = |times: &mut Vec<f64>,
                  states: &mut Vec<SystemState>,
                  max_validity: &mut f64,
                  t: f64,
                  y: &SystemState| {
        if let Some(m) = flow.validity_metric(y) {
            *max_validity = max_validity.max(m);
        }
        times.push(t);
        states.push(y.clone());
    };

    record(&mut times, &mut states, &mut max_validity, cfg.t0, &y);

    for step in 0..n_steps {
        let t = cfg.t0 + step as f64 * dt;
        let t_next = cfg.t0 + (step + 1) as f64 * dt;
        if step >= noise_from_step {
            // Heun predictor-corrector; the predictor and corrector share
            // the increment keyed by (seed, site, step).
            flow.drift_into(&y, t, sched, &mut k1);
            stage.assign_axpy(&y, &k1, dt);
            stage.add_noise(&noise, cfg.rng_seed, step as u64, sqrt_dt);
            flow.drift_into(&stage, t_next, sched, &mut k2);
            ynext.assign_heun(&y, &k1, &k2, dt);
            ynext.add_noise(&noise, cfg.rng_seed, step as u64, sqrt_dt);
        } else {
            flow.drift_into(&y, t, sched, &mut k1);
            stage.assign_axpy(&y, &k1, 0.5 * dt);
            flow.drift_into(&stage, t + 0.5 * dt, sched, &mut k2);
            stage.assign_axpy(&y, &k2, 0.5 * dt);
            flow.drift_into(&stage, t + 0.5 * dt, sched, &mut k3);
            stage.assign_axpy(&y, &k3, dt);
            flow.drift_into(&stage, t_next, sched, &mut k4);
            ynext.assign_rk4(&y, &k1, &k2, &k3, &k4, dt);
        }
        std::mem::swap(&mut y, &mut ynext);
        if !y.is_finite() {
            return Err(Error::NonFinite { t: t_next });
        }
        if (step + 1) % cfg.sample_stride == 0 {
            record(&mut times, &mut states, &mut max_validity, t_next, &y);
        }
    }

    let mut warnings = Vec::new();
    if max_validity > 1.0 {
        warnings.push(format!(
            "normal-phase validity exceeded: max |b|^2/N = {:.3} (bound 0.5)",
            max_validity * 0.5
        ));
    }

    Ok(Trajectory { times, states, model_tag: flow.tag(), config: cfg.clone(), warnings })
}
