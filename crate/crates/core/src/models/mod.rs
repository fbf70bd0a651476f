//! The three driven dissipative systems and their Langevin equations of motion.
//!
//! All parameters are expressed in units of the model's reference frequency
//! (pendulum natural frequency, KPO detuning, or DLM photon frequency = 1).
//! Drift fields are pure functions of `(state, t, params, schedules)` and are
//! safe to evaluate concurrently.

mod dlm;
mod dpo;
mod kpo;

pub use dlm::{dlm_drift, lambda_critical, lambda_critical_with, DlmParams, LambdaCriticalForm};
pub use dpo::{dpo_drift, DpoParams};
pub use kpo::{kpo_drift, KpoParams};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::ScheduleSet;

/// Undirected weighted edge between two sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    /// Base coupling strength; the edge's gate schedule multiplies this.
    pub strength: f64,
}

/// Symmetric weighted edge list. Nearest-neighbor chains and the four-site
/// star used by the gate architecture are both instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    n_sites: usize,
    edges: Vec<Edge>,
}

impl Topology {
    pub fn new(n_sites: usize, edges: Vec<Edge>) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidParams("topology needs at least one site".into()));
        }
        for e in &edges {
            if e.a == e.b {
                return Err(Error::InvalidParams(format!("self-edge on site {}", e.a)));
            }
            if e.a >= n_sites || e.b >= n_sites {
                return Err(Error::InvalidParams(format!(
                    "edge ({}, {}) out of range for {} sites",
                    e.a, e.b, n_sites
                )));
            }
        }
        Ok(Topology { n_sites, edges })
    }

    /// Isolated sites, no edges.
    pub fn isolated(n_sites: usize) -> Self {
        Topology { n_sites, edges: Vec::new() }
    }

    /// Open chain `0 - 1 - ... - n-1` with uniform strength.
    pub fn chain(n_sites: usize, strength: f64) -> Self {
        let edges = (1..n_sites).map(|i| Edge { a: i - 1, b: i, strength }).collect();
        Topology { n_sites, edges }
    }

    /// Single pair `0 - 1`.
    pub fn pair(strength: f64) -> Self {
        Topology { n_sites: 2, edges: vec![Edge { a: 0, b: 1, strength }] }
    }

    /// The four-site gate star: inputs and reference each couple to the
    /// output. Site order: `I1 = 0`, `I2 = 1`, `O = 2`, `R = 3`; edges in
    /// order `I1-O`, `I2-O`, `R-O`.
    pub fn gate_star(input_strength: f64, reset_strength: f64) -> Self {
        Topology {
            n_sites: 4,
            edges: vec![
                Edge { a: 0, b: 2, strength: input_strength },
                Edge { a: 1, b: 2, strength: input_strength },
                Edge { a: 3, b: 2, strength: reset_strength },
            ],
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }
}

/// Angle and angular velocity of one pendulum site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumSite {
    pub theta: f64,
    pub theta_dot: f64,
}

/// Photon and spin-boson amplitudes of one Dicke lattice site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DlmSite {
    pub a: Complex64,
    pub b: Complex64,
}

/// Per-site dynamical state for one of the three systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SystemState {
    Dpo(Vec<PendulumSite>),
    Kpo(Vec<Complex64>),
    Dlm(Vec<DlmSite>),
}

impl SystemState {
    pub fn dpo_zero(n: usize) -> Self {
        SystemState::Dpo(vec![PendulumSite { theta: 0.0, theta_dot: 0.0 }; n])
    }

    pub fn kpo_zero(n: usize) -> Self {
        SystemState::Kpo(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn dlm_zero(n: usize) -> Self {
        SystemState::Dlm(vec![DlmSite { a: Complex64::ZERO, b: Complex64::ZERO }; n])
    }

    pub fn n_sites(&self) -> usize {
        match self {
            SystemState::Dpo(v) => v.len(),
            SystemState::Kpo(v) => v.len(),
            SystemState::Dlm(v) => v.len(),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            SystemState::Dpo(v) => v.iter().all(|s| s.theta.is_finite() && s.theta_dot.is_finite()),
            SystemState::Kpo(v) => v.iter().all(|a| a.re.is_finite() && a.im.is_finite()),
            SystemState::Dlm(v) => v.iter().all(|s| {
                s.a.re.is_finite() && s.a.im.is_finite() && s.b.re.is_finite() && s.b.im.is_finite()
            }),
        }
    }

    pub fn zeros_like(&self) -> Self {
        match self {
            SystemState::Dpo(v) => SystemState::dpo_zero(v.len()),
            SystemState::Kpo(v) => SystemState::kpo_zero(v.len()),
            SystemState::Dlm(v) => SystemState::dlm_zero(v.len()),
        }
    }

    /// State with every component negated (the Z2 partner).
    pub fn negated(&self) -> Self {
        match self {
            SystemState::Dpo(v) => SystemState::Dpo(
                v.iter()
                    .map(|s| PendulumSite { theta: -s.theta, theta_dot: -s.theta_dot })
                    .collect(),
            ),
            SystemState::Kpo(v) => SystemState::Kpo(v.iter().map(|a| -a).collect()),
            SystemState::Dlm(v) => {
                SystemState::Dlm(v.iter().map(|s| DlmSite { a: -s.a, b: -s.b }).collect())
            }
        }
    }

    /// `self = base + h * k`. All three states must share variant and length.
    pub(crate) fn assign_axpy(&mut self, base: &SystemState, k: &SystemState, h: f64) {
        match (self, base, k) {
            (SystemState::Dpo(out), SystemState::Dpo(y), SystemState::Dpo(d)) => {
                for i in 0..y.len() {
                    out[i].theta = y[i].theta + h * d[i].theta;
                    out[i].theta_dot = y[i].theta_dot + h * d[i].theta_dot;
                }
            }
            (SystemState::Kpo(out), SystemState::Kpo(y), SystemState::Kpo(d)) => {
                for i in 0..y.len() {
                    out[i] = y[i] + h * d[i];
                }
            }
            (SystemState::Dlm(out), SystemState::Dlm(y), SystemState::Dlm(d)) => {
                for i in 0..y.len() {
                    out[i].a = y[i].a + h * d[i].a;
                    out[i].b = y[i].b + h * d[i].b;
                }
            }
            _ => unreachable!("mixed state variants in integrator"),
        }
    }

    /// `self = base + (h/6) (k1 + 2 k2 + 2 k3 + k4)`.
    pub(crate) fn assign_rk4(
        &mut self,
        base: &SystemState,
        k1: &SystemState,
        k2: &SystemState,
        k3: &SystemState,
        k4: &SystemState,
        h: f64,
    ) {
        let w = h / 6.0;
        match (self, base, k1, k2, k3, k4) {
            (
                SystemState::Dpo(out),
                SystemState::Dpo(y),
                SystemState::Dpo(a),
                SystemState::Dpo(b),
                SystemState::Dpo(c),
                SystemState::Dpo(d),
            ) => {
                for i in 0..y.len() {
                    out[i].theta = y[i].theta
                        + w * (a[i].theta + 2.0 * b[i].theta + 2.0 * c[i].theta + d[i].theta);
                    out[i].theta_dot = y[i].theta_dot
                        + w * (a[i].theta_dot
                            + 2.0 * b[i].theta_dot
                            + 2.0 * c[i].theta_dot
                            + d[i].theta_dot);
                }
            }
            (
                SystemState::Kpo(out),
                SystemState::Kpo(y),
                SystemState::Kpo(a),
                SystemState::Kpo(b),
                SystemState::Kpo(c),
                SystemState::Kpo(d),
            ) => {
                for i in 0..y.len() {
                    out[i] = y[i] + w * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
                }
            }
            (
                SystemState::Dlm(out),
                SystemState::Dlm(y),
                SystemState::Dlm(a),
                SystemState::Dlm(b),
                SystemState::Dlm(c),
                SystemState::Dlm(d),
            ) => {
                for i in 0..y.len() {
                    out[i].a = y[i].a + w * (a[i].a + 2.0 * b[i].a + 2.0 * c[i].a + d[i].a);
                    out[i].b = y[i].b + w * (a[i].b + 2.0 * b[i].b + 2.0 * c[i].b + d[i].b);
                }
            }
            _ => unreachable!("mixed state variants in integrator"),
        }
    }

    /// Add one white-noise increment `amplitude * sqrt(dt) * N(0, 1)` per
    /// noisy component, keyed by `(seed, site, step)`. Complex channels use
    /// two normals scaled by `1/sqrt(2)` so that `<xi* xi'> = delta delta'`.
    pub(crate) fn add_noise(
        &mut self,
        channel: &NoiseChannel,
        seed: u64,
        step: u64,
        sqrt_dt: f64,
    ) {
        match (self, channel) {
            (SystemState::Dpo(v), NoiseChannel::RealVelocity { amplitude }) => {
                let scale = amplitude * sqrt_dt;
                for (site, s) in v.iter_mut().enumerate() {
                    s.theta_dot += scale * crate::rng::normal(seed, site as u64, step);
                }
            }
            (SystemState::Kpo(v), NoiseChannel::ComplexField { amplitude }) => {
                let scale = amplitude * sqrt_dt * std::f64::consts::FRAC_1_SQRT_2;
                for (site, a) in v.iter_mut().enumerate() {
                    let (n1, n2) = crate::rng::normal_pair(seed, site as u64, step);
                    *a += Complex64::new(scale * n1, scale * n2);
                }
            }
            (SystemState::Dlm(v), NoiseChannel::ComplexField { amplitude }) => {
                let scale = amplitude * sqrt_dt * std::f64::consts::FRAC_1_SQRT_2;
                for (site, s) in v.iter_mut().enumerate() {
                    let (n1, n2) = crate::rng::normal_pair(seed, site as u64, step);
                    s.a += Complex64::new(scale * n1, scale * n2);
                }
            }
            _ => unreachable!("noise channel does not match state variant"),
        }
    }

    /// `self = base + (h/2) (k1 + k2)` (Heun corrector, drift part).
    pub(crate) fn assign_heun(
        &mut self,
        base: &SystemState,
        k1: &SystemState,
        k2: &SystemState,
        h: f64,
    ) {
        let w = h / 2.0;
        match (self, base, k1, k2) {
            (SystemState::Dpo(out), SystemState::Dpo(y), SystemState::Dpo(a), SystemState::Dpo(b)) => {
                for i in 0..y.len() {
                    out[i].theta = y[i].theta + w * (a[i].theta + b[i].theta);
                    out[i].theta_dot = y[i].theta_dot + w * (a[i].theta_dot + b[i].theta_dot);
                }
            }
            (SystemState::Kpo(out), SystemState::Kpo(y), SystemState::Kpo(a), SystemState::Kpo(b)) => {
                for i in 0..y.len() {
                    out[i] = y[i] + w * (a[i] + b[i]);
                }
            }
            (SystemState::Dlm(out), SystemState::Dlm(y), SystemState::Dlm(a), SystemState::Dlm(b)) => {
                for i in 0..y.len() {
                    out[i].a = y[i].a + w * (a[i].a + b[i].a);
                    out[i].b = y[i].b + w * (a[i].b + b[i].b);
                }
            }
            _ => unreachable!("mixed state variants in integrator"),
        }
    }
}

/// Additive white-noise channel of one model, in the unit-variance
/// convention: real noise enters as `amplitude * sqrt(dt) * N(0,1)`, complex
/// noise as `amplitude * sqrt(dt) * (N1 + i N2) / sqrt(2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseChannel {
    /// Thermal noise on the pendulum velocity.
    RealVelocity { amplitude: f64 },
    /// Quantum noise on the photon amplitude `a` (KPO and DLM; the DLM spin
    /// mode `b` is noiseless).
    ComplexField { amplitude: f64 },
}

impl NoiseChannel {
    pub fn amplitude(&self) -> f64 {
        match self {
            NoiseChannel::RealVelocity { amplitude } => *amplitude,
            NoiseChannel::ComplexField { amplitude } => *amplitude,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude() == 0.0
    }
}

/// A model selection with its full parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Dpo(DpoParams),
    Kpo(KpoParams),
    Dlm(DlmParams),
}

/// Discriminant tag, used in trajectory metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dpo,
    Kpo,
    Dlm,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Dpo => write!(f, "dpo"),
            ModelKind::Kpo => write!(f, "kpo"),
            ModelKind::Dlm => write!(f, "dlm"),
        }
    }
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Dpo(_) => ModelKind::Dpo,
            Model::Kpo(_) => ModelKind::Kpo,
            Model::Dlm(_) => ModelKind::Dlm,
        }
    }

    pub fn topology(&self) -> &Topology {
        match self {
            Model::Dpo(p) => &p.topology,
            Model::Kpo(p) => &p.topology,
            Model::Dlm(p) => &p.topology,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.topology().n_sites()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Dpo(p) => p.validate(),
            Model::Kpo(p) => p.validate(),
            Model::Dlm(p) => p.validate(),
        }
    }

    /// Period of the parametric modulation, `T_d = 2 pi / (drive frequency)`.
    pub fn drive_period(&self) -> f64 {
        std::f64::consts::TAU / self.drive_frequency()
    }

    pub fn drive_frequency(&self) -> f64 {
        match self {
            Model::Dpo(p) => p.omega_d,
            Model::Kpo(p) => p.omega_mod,
            Model::Dlm(p) => p.omega_d,
        }
    }

    /// Demodulation frequency of the period-doubled response: half the
    /// modulation frequency.
    pub fn subharmonic_omega(&self) -> f64 {
        0.5 * self.drive_frequency()
    }

    /// Zero state of the matching variant.
    pub fn zero_state(&self) -> SystemState {
        match self {
            Model::Dpo(_) => SystemState::dpo_zero(self.n_sites()),
            Model::Kpo(_) => SystemState::kpo_zero(self.n_sites()),
            Model::Dlm(_) => SystemState::dlm_zero(self.n_sites()),
        }
    }

    pub fn state_matches(&self, state: &SystemState) -> bool {
        self.n_sites() == state.n_sites()
            && matches!(
                (self, state),
                (Model::Dpo(_), SystemState::Dpo(_))
                    | (Model::Kpo(_), SystemState::Kpo(_))
                    | (Model::Dlm(_), SystemState::Dlm(_))
            )
    }

    /// Model with the same physical constants on a single isolated site.
    /// Used by readout calibration.
    pub fn single_site(&self) -> Model {
        match self {
            Model::Dpo(p) => {
                Model::Dpo(DpoParams { topology: Topology::isolated(1), ..p.clone() })
            }
            Model::Kpo(p) => {
                Model::Kpo(KpoParams { topology: Topology::isolated(1), ..p.clone() })
            }
            Model::Dlm(p) => {
                Model::Dlm(DlmParams { topology: Topology::isolated(1), ..p.clone() })
            }
        }
    }

    /// Drift field, written into `out`.
    pub fn drift_into(
        &self,
        state: &SystemState,
        t: f64,
        sched: &ScheduleSet,
        out: &mut SystemState,
    ) {
        match self {
            Model::Dpo(p) => dpo::drift_into(state, t, p, sched, out),
            Model::Kpo(p) => kpo::drift_into(state, t, p, sched, out),
            Model::Dlm(p) => dlm::drift_into(state, t, p, sched, out),
        }
    }

    /// DLM normal-phase validity metric `max_l |b_l|^2 / N`; `None` for
    /// models without such a bound.
    pub fn validity_metric(&self, state: &SystemState) -> Option<f64> {
        match (self, state) {
            (Model::Dlm(p), SystemState::Dlm(v)) => v
                .iter()
                .map(|s| s.b.norm_sqr() / p.n_spins)
                .max_by(f64::total_cmp),
            _ => None,
        }
    }
}

/// Additive noise amplitudes of each model's stochastic term.
pub fn noise_amplitudes(model: &Model) -> Result<NoiseChannel> {
    match model {
        Model::Dpo(p) => {
            if p.t_tilde < 0.0 || p.gamma < 0.0 {
                return Err(Error::InvalidParams("negative temperature or damping".into()));
            }
            // <eta eta'> = 2 T Omega^2 gamma delta(t - t') delta_ll'
            Ok(NoiseChannel::RealVelocity {
                amplitude: (2.0 * p.t_tilde * p.omega * p.omega * p.gamma).sqrt(),
            })
        }
        Model::Kpo(p) => {
            if p.kappa < 0.0 || p.n_scale <= 0.0 {
                return Err(Error::InvalidParams("kappa must be >= 0 and N > 0".into()));
            }
            Ok(NoiseChannel::ComplexField { amplitude: (p.kappa / p.n_scale).sqrt() })
        }
        Model::Dlm(p) => {
            if p.kappa < 0.0 {
                return Err(Error::InvalidParams("kappa must be >= 0".into()));
            }
            // <xi* xi'> = kappa delta delta'
            Ok(NoiseChannel::ComplexField { amplitude: p.kappa.sqrt() })
        }
    }
}
