//! Absolute-time-phase extraction and bit classification.
//!
//! The order parameter of the period-doubled response is the complex
//! subharmonic amplitude
//!
//! ```text
//! s_R(t) = r e^{i phi} = (omega_R / pi) * integral_t^{t + 2 pi / omega_R}
//!          e^{i omega_R tau} s(tau) d tau
//! ```
//!
//! evaluated by trapezoidal quadrature on the recorded samples. The phase is
//! absolute (the reference `e^{i omega_R tau}` uses absolute time), so the
//! two degenerate period-doubled states, which differ by one drive period,
//! demodulate to phases pi apart. Convention: `phi < 0` is the 1-bit,
//! `phi > 0` the 0-bit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::models::{ModelKind, SystemState};

/// Classified state of one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bit {
    Zero,
    One,
    /// Amplitude below threshold (or phase exactly zero).
    Undefined,
}

impl Bit {
    pub fn complement(self) -> Bit {
        match self {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
            Bit::Undefined => Bit::Undefined,
        }
    }

    pub fn is_defined(self) -> bool {
        !matches!(self, Bit::Undefined)
    }

    pub fn from_bool(b: bool) -> Bit {
        if b {
            Bit::One
        } else {
            Bit::Zero
        }
    }
}

impl std::fmt::Display for Bit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bit::Zero => write!(f, "0"),
            Bit::One => write!(f, "1"),
            Bit::Undefined => write!(f, "?"),
        }
    }
}

/// Per-site complex subharmonic amplitude over one demodulation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemodResult {
    /// Amplitudes `r >= 0`, one per site.
    pub r: Vec<f64>,
    /// Phases in `(-pi, pi]`, one per site.
    pub phi: Vec<f64>,
    /// Demodulated window `(t, t + 2 pi / omega_R)` (full averaged span for
    /// multi-window readouts).
    pub window: (f64, f64),
}

impl DemodResult {
    pub fn n_sites(&self) -> usize {
        self.r.len()
    }

    pub fn complex(&self, site: usize) -> Complex64 {
        Complex64::from_polar(self.r[site], self.phi[site])
    }
}

/// Scalar observable demodulated per site: the pendulum angle, or the real
/// part of the photon amplitude for the bosonic models.
pub fn default_observable(kind: ModelKind) -> fn(&SystemState, usize) -> f64 {
    match kind {
        ModelKind::Dpo => |s, l| match s {
            SystemState::Dpo(v) => v[l].theta,
            _ => f64::NAN,
        },
        ModelKind::Kpo => |s, l| match s {
            SystemState::Kpo(v) => v[l].re,
            _ => f64::NAN,
        },
        ModelKind::Dlm => |s, l| match s {
            SystemState::Dlm(v) => v[l].a.re,
            _ => f64::NAN,
        },
    }
}

/// Complex amplitudes of every site over `[t, t + 2 pi / omega_r]`.
fn demodulate_window<F>(
    traj: &Trajectory,
    observable: &F,
    omega_r: f64,
    t: f64,
) -> Result<Vec<Complex64>>
where
    F: Fn(&SystemState, usize) -> f64,
{
    if !(omega_r > 0.0) {
        return Err(Error::Demod("omega_R must be positive".into()));
    }
    let period = std::f64::consts::TAU / omega_r;
    let h = traj.sample_interval();
    let count = (period / h).round() as usize;
    if count < 32 {
        return Err(Error::Demod(format!(
            "only {count} samples per demodulation window; need at least 32"
        )));
    }
    if ((count as f64 * h) - period).abs() > 1e-6 * period {
        return Err(Error::Demod(
            "demodulation window is not a whole number of sample intervals".into(),
        ));
    }
    let i0 = traj.sample_index(t)?;
    let i1 = i0 + count;
    if i1 >= traj.len() {
        return Err(Error::Demod(format!(
            "window [{t}, {}] exceeds the recorded span",
            t + period
        )));
    }

    let n_sites = traj.states()[0].n_sites();
    let times = traj.times();
    let states = traj.states();
    let mut acc = vec![Complex64::ZERO; n_sites];
    for i in i0..=i1 {
        // trapezoid: half weight at both window ends
        let w = if i == i0 || i == i1 { 0.5 } else { 1.0 };
        let phase = Complex64::from_polar(1.0, omega_r * times[i]);
        for (l, a) in acc.iter_mut().enumerate() {
            *a += w * phase * observable(&states[i], l);
        }
    }
    let scale = omega_r / std::f64::consts::PI * h;
    Ok(acc.into_iter().map(|a| a * scale).collect())
}

/// Absolute-time-phase demodulation over the single window starting at `t`.
pub fn demodulate<F>(
    traj: &Trajectory,
    observable: F,
    omega_r: f64,
    t: f64,
) -> Result<DemodResult>
where
    F: Fn(&SystemState, usize) -> f64,
{
    let amps = demodulate_window(traj, &observable, omega_r, t)?;
    let period = std::f64::consts::TAU / omega_r;
    Ok(DemodResult {
        r: amps.iter().map(|a| a.norm()).collect(),
        phi: amps.iter().map(|a| a.arg()).collect(),
        window: (t, t + period),
    })
}

/// Steady-state readout: the complex amplitude averaged over the last
/// `n_windows` subharmonic windows of the trajectory, suppressing residual
/// transients before classification.
pub fn readout_average<F>(
    traj: &Trajectory,
    observable: F,
    omega_r: f64,
    n_windows: usize,
) -> Result<DemodResult>
where
    F: Fn(&SystemState, usize) -> f64,
{
    readout_average_at(traj, observable, omega_r, n_windows, traj.final_time())
}

/// Like [`readout_average`], but over the `n_windows` windows that end at
/// `t_end` (e.g. just before a pulse). Window starts snap to the sample grid.
pub fn readout_average_at<F>(
    traj: &Trajectory,
    observable: F,
    omega_r: f64,
    n_windows: usize,
    t_end: f64,
) -> Result<DemodResult>
where
    F: Fn(&SystemState, usize) -> f64,
{
    if n_windows == 0 {
        return Err(Error::Demod("need at least one readout window".into()));
    }
    let period = std::f64::consts::TAU / omega_r;
    let h = traj.sample_interval();
    let n_sites = traj.states()[0].n_sites();
    let mut acc = vec![Complex64::ZERO; n_sites];
    for k in 0..n_windows {
        let t = t_end - (k + 1) as f64 * period;
        // snap to the sample grid to absorb float drift in the window start
        let t = traj.config().t0 + ((t - traj.config().t0) / h).round() * h;
        let amps = demodulate_window(traj, &observable, omega_r, t)?;
        for (a, w) in acc.iter_mut().zip(amps) {
            *a += w;
        }
    }
    let scale = 1.0 / n_windows as f64;
    Ok(DemodResult {
        r: acc.iter().map(|a| (a * scale).norm()).collect(),
        phi: acc.iter().map(|a| a.arg()).collect(),
        window: (t_end - n_windows as f64 * period, t_end),
    })
}

/// Classify each site: `phi < 0` is the 1-bit, `phi > 0` the 0-bit;
/// amplitudes below `r_min` (or a phase of exactly zero) are undefined.
pub fn classify_bit(d: &DemodResult, r_min: f64) -> Vec<Bit> {
    d.r.iter()
        .zip(&d.phi)
        .map(|(&r, &phi)| {
            if r < r_min || phi == 0.0 {
                Bit::Undefined
            } else if phi < 0.0 {
                Bit::One
            } else {
                Bit::Zero
            }
        })
        .collect()
}

/// Cartesian rotating-frame coordinates `(X, Y) = (r cos phi, r sin phi)`
/// of the complex amplitude, one pair per site.
pub fn rotating_frame_point(d: &DemodResult) -> Vec<(f64, f64)> {
    d.r.iter().zip(&d.phi).map(|(&r, &phi)| (r * phi.cos(), r * phi.sin())).collect()
}

/// Circular phase distance in `[0, pi]`.
pub fn delta_phi(phi1: f64, phi2: f64) -> f64 {
    let d = (phi1 - phi2).abs() % std::f64::consts::TAU;
    d.min(std::f64::consts::TAU - d)
}
