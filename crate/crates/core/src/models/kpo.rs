//! Kerr parametric oscillator network, semiclassical field equations.
//!
//! Per site (field rescaled by the particle-number scale, so amplitudes are
//! O(1) and the quantum noise carries the 1/sqrt(N) factor):
//!
//! ```text
//! i da_l/dt = -Delta a_l - chi |a_l|^2 a_l + p(t) a_l*
//!             - sum_l' J_ll'(t) a_l' - i kappa a_l
//! p(t) = p0 (1 + A_l(t) A0 sin(omega_mod t))
//! ```
//!
//! The dissipative damping sign is used throughout; the TWA adds the complex
//! noise `sqrt(kappa / N) xi_l(t)` with `<xi* xi'> = delta delta'`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{SystemState, Topology};
use crate::error::{Error, Result};
use crate::schedule::ScheduleSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpoParams {
    /// Detuning `Delta` (the reference unit; normally 1).
    pub delta: f64,
    /// Kerr strength `chi`.
    pub chi: f64,
    /// Two-photon pump strength `p0`.
    pub p0: f64,
    /// Pump modulation depth `A0` (dimensionless).
    pub a0: f64,
    /// Pump modulation frequency `omega_mod`.
    pub omega_mod: f64,
    /// Single-photon dissipation `kappa`.
    pub kappa: f64,
    /// Particle-number scale `N`; enters only the TWA noise amplitude.
    pub n_scale: f64,
    /// Coupling graph; edge strengths are the base hopping `J`.
    pub topology: Topology,
}

impl KpoParams {
    /// Canonical operating point of the shipped presets: `Delta = 1`,
    /// `chi = Delta`, `p0 = 2.5 Delta`, `A0 = 0.6`, `kappa = 0.4 Delta`.
    /// The modulation frequency must be supplied (see the subharmonic
    /// response scan in the protocols module).
    pub fn standard(omega_mod: f64, n_scale: f64, topology: Topology) -> Self {
        KpoParams {
            delta: 1.0,
            chi: 1.0,
            p0: 2.5,
            a0: 0.6,
            omega_mod,
            kappa: 0.4,
            n_scale,
            topology,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa < 0.0 {
            return Err(Error::InvalidParams("kappa must be >= 0".into()));
        }
        if !(self.n_scale > 0.0) {
            return Err(Error::InvalidParams("N must be > 0".into()));
        }
        if !(self.omega_mod > 0.0) {
            return Err(Error::InvalidParams("omega_mod must be > 0".into()));
        }
        Ok(())
    }
}

pub(super) fn drift_into(
    state: &SystemState,
    t: f64,
    params: &KpoParams,
    sched: &ScheduleSet,
    out: &mut SystemState,
) {
    let (sites, deriv) = match (state, out) {
        (SystemState::Kpo(s), SystemState::Kpo(d)) => (s, d),
        _ => unreachable!("state variant checked by caller"),
    };
    let mod_sin = (params.omega_mod * t).sin();
    for (l, &a) in sites.iter().enumerate() {
        let p = params.p0 * (1.0 + sched.drive_gate(l, t) * params.a0 * mod_sin);
        // bracket of i da/dt, coupling added below
        let bracket = -params.delta * a - params.chi * a.norm_sqr() * a + p * a.conj();
        deriv[l] = Complex64::new(0.0, -1.0) * bracket - params.kappa * a;
    }
    for (e_idx, edge) in params.topology.edges().iter().enumerate() {
        let j = edge.strength * sched.edge_gate(e_idx, t);
        // -i * (-J a_neighbor) = i J a_neighbor
        deriv[edge.a] += Complex64::new(0.0, j) * sites[edge.b];
        deriv[edge.b] += Complex64::new(0.0, j) * sites[edge.a];
    }
}

/// Drift field of the KPO network at time `t`.
pub fn kpo_drift(
    state: &SystemState,
    t: f64,
    params: &KpoParams,
    sched: &ScheduleSet,
) -> Result<SystemState> {
    if !matches!(state, SystemState::Kpo(_)) || state.n_sites() != params.topology.n_sites() {
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

#[cfg(test)]
mod tests {
    use super::*;

    fn sched_for(p: &KpoParams) -> ScheduleSet {
        ScheduleSet::uniform(p.topology.edges().len(), p.topology.n_sites(), 1.0)
    }

    #[test]
    fn vacuum_is_fixed_point() {
        let p = KpoParams::standard(7.6, 1e3, Topology::pair(0.2));
        let s = SystemState::kpo_zero(2);
        let d = kpo_drift(&s, 2.2, &p, &sched_for(&p)).unwrap();
        match d {
            SystemState::Kpo(v) => v.iter().for_each(|a| assert_eq!(*a, Complex64::ZERO)),
            _ => panic!(),
        }
    }

    // Hand evaluation against the equation of motion written out in real and
    // imaginary parts, independent of the complex-arithmetic path.
    #[test]
    fn drift_hand_value_single_site() {
        let p = KpoParams {
            delta: 1.0,
            chi: 0.9,
            p0: 2.5,
            a0: 0.6,
            omega_mod: 7.0,
            kappa: 0.4,
            n_scale: 1e3,
            topology: Topology::isolated(1),
        };
        let t = 0.31;
        let (x, y) = (0.3, -0.2);
        let s = SystemState::Kpo(vec![Complex64::new(x, y)]);
        let d = kpo_drift(&s, t, &p, &sched_for(&p)).unwrap();

        // bracket B = -Delta a - chi |a|^2 a + p(t) a*; da/dt = -i B - kappa a
        let pt = 2.5 * (1.0 + 0.6 * (7.0 * t).sin());
        let n2 = x * x + y * y;
        let b_re = -1.0 * x - 0.9 * n2 * x + pt * x;
        let b_im = -1.0 * y - 0.9 * n2 * y + pt * (-y);
        let expect_re = b_im - 0.4 * x;
        let expect_im = -b_re - 0.4 * y;
        match d {
            SystemState::Kpo(v) => {
                assert!((v[0].re - expect_re).abs() < 1e-14, "{} vs {}", v[0].re, expect_re);
                assert!((v[0].im - expect_im).abs() < 1e-14, "{} vs {}", v[0].im, expect_im);
            }
            _ => panic!(),
        }
    }

    // The hopping enters as -i * (-J a_neighbor) = +i J a_neighbor.
    #[test]
    fn hopping_hand_value() {
        let mut p = KpoParams::standard(7.0, 1e3, Topology::pair(0.5));
        p.p0 = 0.0;
        p.delta = 0.0;
        p.chi = 0.0;
        p.kappa = 0.0;
        let s = SystemState::Kpo(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)]);
        let d = kpo_drift(&s, 0.0, &p, &sched_for(&p)).unwrap();
        match d {
            SystemState::Kpo(v) => {
                // site 0: i * 0.5 * (2i) = -1
                assert!((v[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
                // site 1: i * 0.5 * 1 = 0.5 i
                assert!((v[1] - Complex64::new(0.0, 0.5)).norm() < 1e-15);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn drift_is_odd_in_the_field() {
        let p = KpoParams::standard(7.0, 1e3, Topology::pair(0.2));
        let s = SystemState::Kpo(vec![Complex64::new(0.4, -0.1), Complex64::new(-0.2, 0.7)]);
        let sched = sched_for(&p);
        let d = kpo_drift(&s, 0.77, &p, &sched).unwrap();
        let dn = kpo_drift(&s.negated(), 0.77, &p, &sched).unwrap();
        assert_eq!(dn, d.negated());
    }
}
