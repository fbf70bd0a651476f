//! Dicke lattice model after the Holstein-Primakoff expansion around the
//! normal phase. Per site, the coupled photon (`a`) and spin-boson (`b`)
//! amplitudes obey
//!
//! ```text
//! i da_l/dt = omega a_l + lambda(t) (b_l + b_l*) (1 - |b_l|^2 / 2N)
//!             - sum_l' J_ll'(t) a_l' - i kappa a_l
//! i db_l/dt = omega0 b_l + lambda(t) (a_l + a_l*) (1 - (2|b_l|^2 + b_l^2) / 2N)
//! lambda(t) = lambda0 (1 + A_l(t) A1 sin(omega_d t))
//! ```
//!
//! The TWA noise acts on `a` only, with amplitude `sqrt(kappa)`. The
//! expansion is valid in the normal phase where `|b|^2 / N` stays small; the
//! integrator raises a diagnostic when `|b|^2 / N` exceeds 0.5.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{SystemState, Topology};
use crate::error::{Error, Result};
use crate::schedule::ScheduleSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlmParams {
    /// Photon frequency `omega` (the reference unit; normally 1).
    pub omega: f64,
    /// Spin excitation frequency `omega0`.
    pub omega0: f64,
    /// Base light-matter coupling `lambda0`; must stay below the critical
    /// coupling for the normal phase.
    pub lambda0: f64,
    /// Coupling modulation depth `A1` (dimensionless).
    pub a1: f64,
    /// Coupling modulation frequency `omega_d`.
    pub omega_d: f64,
    /// Photon loss rate `kappa`.
    pub kappa: f64,
    /// Spin number `N` per site.
    pub n_spins: f64,
    /// Coupling graph; edge strengths are the base photon hopping `J`.
    pub topology: Topology,
}

/// Which form of the critical coupling to use. The published expression
/// mixes `kappa` linearly with `omega^2`; the conventional open-Dicke result
/// has `kappa^2`. Both agree at `kappa = omega = 1`, the operating point of
/// the shipped presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LambdaCriticalForm {
    /// `lambda_c = (1/2) sqrt((omega0 / omega) (kappa + omega^2))`
    #[default]
    AsPublished,
    /// `lambda_c = (1/2) sqrt((omega0 / omega) (kappa^2 + omega^2))`
    KappaSquared,
}

/// Critical light-matter coupling separating the normal and superradiant
/// phases of the uncoupled lattice (`J = 0`), in the selected form.
pub fn lambda_critical_with(
    omega: f64,
    omega0: f64,
    kappa: f64,
    form: LambdaCriticalForm,
) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParams("omega must be > 0".into()));
    }
    let kappa_term = match form {
        LambdaCriticalForm::AsPublished => kappa,
        LambdaCriticalForm::KappaSquared => kappa * kappa,
    };
    Ok(0.5 * ((omega0 / omega) * (kappa_term + omega * omega)).sqrt())
}

/// Critical coupling in the default (published) form.
pub fn lambda_critical(params: &DlmParams) -> Result<f64> {
    lambda_critical_with(params.omega, params.omega0, params.kappa, LambdaCriticalForm::default())
}

impl DlmParams {
    /// Canonical operating point of the shipped presets: `omega = omega0 = 1`,
    /// `omega_d = 0.8 omega`, `A1 = 0.5`, `lambda0 = 0.9 lambda_c`. At the
    /// default `kappa = 1` the two critical-coupling forms coincide.
    pub fn standard(kappa: f64, n_spins: f64, topology: Topology) -> Self {
        let lambda_c =
            lambda_critical_with(1.0, 1.0, kappa, LambdaCriticalForm::default()).unwrap();
        DlmParams {
            omega: 1.0,
            omega0: 1.0,
            lambda0: 0.9 * lambda_c,
            a1: 0.5,
            omega_d: 0.8,
            kappa,
            n_spins,
            topology,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !(self.omega0 > 0.0) {
            return Err(Error::InvalidParams("omega and omega0 must be > 0".into()));
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidParams("kappa must be >= 0".into()));
        }
        if !(self.n_spins > 0.0) {
            return Err(Error::InvalidParams("N must be > 0".into()));
        }
        if !(self.omega_d > 0.0) {
            return Err(Error::InvalidParams("omega_d must be > 0".into()));
        }
        let lc = lambda_critical(self)?;
        if self.lambda0 >= lc {
            return Err(Error::InvalidParams(format!(
                "lambda0 = {} is at or above the critical coupling {lc}; \
                 the normal-phase expansion does not apply",
                self.lambda0
            )));
        }
        Ok(())
    }
}

pub(super) fn drift_into(
    state: &SystemState,
    t: f64,
    params: &DlmParams,
    sched: &ScheduleSet,
    out: &mut SystemState,
) {
    let (sites, deriv) = match (state, out) {
        (SystemState::Dlm(s), SystemState::Dlm(d)) => (s, d),
        _ => unreachable!("state variant checked by caller"),
    };
    let minus_i = Complex64::new(0.0, -1.0);
    let mod_sin = (params.omega_d * t).sin();
    let inv_2n = 0.5 / params.n_spins;
    for (l, site) in sites.iter().enumerate() {
        let lambda = params.lambda0 * (1.0 + sched.drive_gate(l, t) * params.a1 * mod_sin);
        let b_norm_sqr = site.b.norm_sqr();
        let bracket_a = params.omega * site.a
            + lambda * (site.b + site.b.conj()) * (1.0 - b_norm_sqr * inv_2n);
        let correction_b = Complex64::new(1.0, 0.0)
            - (2.0 * b_norm_sqr + site.b * site.b) * inv_2n;
        let bracket_b =
            params.omega0 * site.b + lambda * (site.a + site.a.conj()) * correction_b;
        deriv[l].a = minus_i * bracket_a - params.kappa * site.a;
        deriv[l].b = minus_i * bracket_b;
    }
    for (e_idx, edge) in params.topology.edges().iter().enumerate() {
        let j = edge.strength * sched.edge_gate(e_idx, t);
        // -i * (-J a_neighbor)
        deriv[edge.a].a += Complex64::new(0.0, j) * sites[edge.b].a;
        deriv[edge.b].a += Complex64::new(0.0, j) * sites[edge.a].a;
    }
}

/// Drift field of the Dicke lattice at time `t`.
pub fn dlm_drift(
    state: &SystemState,
    t: f64,
    params: &DlmParams,
    sched: &ScheduleSet,
) -> Result<SystemState> {
    if !matches!(state, SystemState::Dlm(_)) || state.n_sites() != params.topology.n_sites() {
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
    use crate::models::DlmSite;

    fn sched_for(p: &DlmParams) -> ScheduleSet {
        ScheduleSet::uniform(p.topology.edges().len(), p.topology.n_sites(), 1.0)
    }

    #[test]
    fn normal_phase_origin_is_fixed_point() {
        let p = DlmParams::standard(1.0, 1e3, Topology::pair(0.1));
        let s = SystemState::dlm_zero(2);
        let d = dlm_drift(&s, 5.1, &p, &sched_for(&p)).unwrap();
        match d {
            SystemState::Dlm(v) => {
                for site in v {
                    assert_eq!(site.a, Complex64::ZERO);
                    assert_eq!(site.b, Complex64::ZERO);
                }
            }
            _ => panic!(),
        }
    }

    // Hand evaluation at a nontrivial point, written out in real arithmetic
    // including the complex (2|b|^2 + b^2) correction.
    #[test]
    fn drift_hand_value_single_site() {
        let p = DlmParams {
            omega: 1.0,
            omega0: 0.9,
            lambda0: 0.4,
            a1: 0.5,
            omega_d: 0.8,
            kappa: 0.3,
            n_spins: 50.0,
            topology: Topology::isolated(1),
        };
        let t = 1.7;
        let (ax, ay) = (0.6, -0.4);
        let (bx, by) = (1.1, 0.5);
        let s = SystemState::Dlm(vec![DlmSite {
            a: Complex64::new(ax, ay),
            b: Complex64::new(bx, by),
        }]);
        let d = dlm_drift(&s, t, &p, &sched_for(&p)).unwrap();

        let lambda = 0.4 * (1.0 + 0.5 * (0.8 * t).sin());
        let b2 = bx * bx + by * by;
        let inv_2n = 0.5 / 50.0;
        // bracket_a = omega a + lambda (b + b*) (1 - |b|^2/2N)  [b + b* real]
        let ba_re = 1.0 * ax + lambda * 2.0 * bx * (1.0 - b2 * inv_2n);
        let ba_im = 1.0 * ay;
        // da/dt = -i bracket_a - kappa a
        let da_re = ba_im - 0.3 * ax;
        let da_im = -ba_re - 0.3 * ay;
        // correction_b = 1 - (2|b|^2 + b^2)/2N, complex
        let corr_re = 1.0 - (2.0 * b2 + (bx * bx - by * by)) * inv_2n;
        let corr_im = -(2.0 * bx * by) * inv_2n;
        // bracket_b = omega0 b + lambda (a + a*) corr  [a + a* real]
        let two_ax = 2.0 * ax;
        let bb_re = 0.9 * bx + lambda * two_ax * corr_re;
        let bb_im = 0.9 * by + lambda * two_ax * corr_im;
        let db_re = bb_im;
        let db_im = -bb_re;

        match d {
            SystemState::Dlm(v) => {
                assert!((v[0].a.re - da_re).abs() < 1e-14);
                assert!((v[0].a.im - da_im).abs() < 1e-14);
                assert!((v[0].b.re - db_re).abs() < 1e-14);
                assert!((v[0].b.im - db_im).abs() < 1e-14);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn lambda_critical_values() {
        // kappa = 0, omega0 = omega -> lambda_c = omega / 2
        let lc = lambda_critical_with(2.0, 2.0, 0.0, LambdaCriticalForm::AsPublished).unwrap();
        assert!((lc - 1.0).abs() < 1e-15);
        // omega0 = omega = 1, kappa = 1 -> lambda_c = sqrt(2)/2 in both forms
        for form in [LambdaCriticalForm::AsPublished, LambdaCriticalForm::KappaSquared] {
            let lc = lambda_critical_with(1.0, 1.0, 1.0, form).unwrap();
            assert!((lc - 0.5 * 2.0_f64.sqrt()).abs() < 1e-15);
        }
        // the two forms differ away from kappa in {0, 1}
        let a = lambda_critical_with(1.0, 1.0, 0.5, LambdaCriticalForm::AsPublished).unwrap();
        let b = lambda_critical_with(1.0, 1.0, 0.5, LambdaCriticalForm::KappaSquared).unwrap();
        assert!(a > b);
    }

    #[test]
    fn standard_params_sit_below_critical() {
        let p = DlmParams::standard(1.0, 1e3, Topology::isolated(1));
        p.validate().unwrap();
        assert!((p.lambda0 - 0.9 * 0.5 * 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn superradiant_coupling_rejected() {
        let mut p = DlmParams::standard(1.0, 1e3, Topology::isolated(1));
        p.lambda0 = 1.2 * lambda_critical(&p).unwrap();
        assert!(p.validate().is_err());
    }

    #[test]
    fn lambda_critical_rejects_nonpositive_omega() {
        assert!(lambda_critical_with(0.0, 1.0, 1.0, LambdaCriticalForm::AsPublished).is_err());
    }
}
