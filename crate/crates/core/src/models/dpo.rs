//! Dissipative parametric oscillator network: linearly coupled pendulums in a
//! thermal bath,
//!
//! ```text
//! theta_l'' + Omega^2 [1 - A_l(t) A cos(Omega_d t)] sin(theta_l)
//!     + gamma theta_l' - sum_l' j_ll'(t) theta_l' = eta_l(t)
//! ```
//!
//! with `<eta_l(t) eta_l'(t')> = 2 T Omega^2 gamma delta(t - t') delta_ll'`.
//! `A_l(t)` is the per-site drive gate and `j_ll'(t)` the gated edge coupling.

use serde::{Deserialize, Serialize};

use super::{SystemState, Topology};
use crate::error::{Error, Result};
use crate::schedule::ScheduleSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpoParams {
    /// Natural frequency `Omega` (the reference unit; normally 1).
    pub omega: f64,
    /// Drive modulation depth `A` (dimensionless).
    pub drive_amp: f64,
    /// Drive frequency `Omega_d`.
    pub omega_d: f64,
    /// Damping rate `gamma`.
    pub gamma: f64,
    /// Dimensionless bath temperature `T` (k_B T / m L^2 Omega^2).
    pub t_tilde: f64,
    /// Coupling graph; edge strengths are the base `j` in units of Omega^2.
    pub topology: Topology,
}

impl DpoParams {
    /// Canonical operating point of the shipped presets: `Omega = 1`,
    /// `A = 0.5`, `Omega_d = 2 Omega`, with damping and temperature free.
    pub fn standard(gamma: f64, t_tilde: f64, topology: Topology) -> Self {
        DpoParams { omega: 1.0, drive_amp: 0.5, omega_d: 2.0, gamma, t_tilde, topology }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParams("Omega must be > 0".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParams("gamma must be >= 0".into()));
        }
        if self.t_tilde < 0.0 {
            return Err(Error::InvalidParams("temperature must be >= 0".into()));
        }
        if !(self.omega_d > 0.0) {
            return Err(Error::InvalidParams("Omega_d must be > 0".into()));
        }
        Ok(())
    }
}

pub(super) fn drift_into(
    state: &SystemState,
    t: f64,
    params: &DpoParams,
    sched: &ScheduleSet,
    out: &mut SystemState,
) {
    let (sites, deriv) = match (state, out) {
        (SystemState::Dpo(s), SystemState::Dpo(d)) => (s, d),
        _ => unreachable!("state variant checked by caller"),
    };
    let omega_sq = params.omega * params.omega;
    let drive_cos = (params.omega_d * t).cos();
    for (l, site) in sites.iter().enumerate() {
        let depth = sched.drive_gate(l, t) * params.drive_amp;
        let accel = -omega_sq * (1.0 - depth * drive_cos) * site.theta.sin()
            - params.gamma * site.theta_dot;
        deriv[l].theta = site.theta_dot;
        deriv[l].theta_dot = accel;
    }
    for (e_idx, edge) in params.topology.edges().iter().enumerate() {
        let j = edge.strength * sched.edge_gate(e_idx, t);
        deriv[edge.a].theta_dot += j * sites[edge.b].theta;
        deriv[edge.b].theta_dot += j * sites[edge.a].theta;
    }
}

/// Drift field of the pendulum network at time `t`.
pub fn dpo_drift(
    state: &SystemState,
    t: f64,
    params: &DpoParams,
    sched: &ScheduleSet,
) -> Result<SystemState> {
    if !matches!(state, SystemState::Dpo(_)) || state.n_sites() != params.topology.n_sites() {
        return Err(Error::VariantMismatch);
    }
    if !state.is_finite() {
        return Err(Error::NonFinite { t });
    }
    sched.validate(params.topology.edges().len(), params.topology.n_sites())?;
    let mut out = state.zeros_like();
    drift_into(state, t, params, sched, &mut out);
    Ok(out)
}
