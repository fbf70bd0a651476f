//! Basin-of-attraction maps for the two period-doubled states of a single
//! dissipative parametric oscillator.
//!
//! Lab frame: scan initial conditions `(theta, theta')`, integrate to
//! `t_f` (150 drive periods by default), and label each cell by the bit of
//! the absolute time phase at `t_f`. Rotating frame: the initial rotating
//! coordinates are not directly settable, so lab-frame seeds are scanned,
//! each seed's initial point `(X, Y)` is computed from the demodulation of
//! the first window `[0, 2 T_d]`, and every rotating cell takes the label of
//! the nearest achieved point within half a cell (otherwise it is marked
//! unreachable).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{classify_bit, default_observable, demodulate, Bit};
use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegrationConfig};
use crate::models::{DpoParams, Model, PendulumSite, SystemState};
use crate::protocols::{calibrate, Numerics};
use crate::schedule::ScheduleSet;

/// Uniform inclusive axis: `count` points from `min` to `max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(name: &str, min: f64, max: f64, count: usize) -> Self {
        AxisSpec { name: name.to_string(), min, max, count }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 {
            return Err(Error::InvalidConfig(format!("axis {} needs count >= 2", self.name)));
        }
        if !(self.max > self.min) {
            return Err(Error::InvalidConfig(format!("axis {} needs max > min", self.name)));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    /// Index of the nearest grid point, if within half a spacing of the axis.
    fn nearest(&self, x: f64) -> Option<usize> {
        let i = ((x - self.min) / self.spacing()).round();
        if i < 0.0 || i as usize >= self.count {
            return None;
        }
        let i = i as usize;
        ((x - self.value(i)).abs() <= 0.5 * self.spacing() * (1.0 + 1e-12)).then_some(i)
    }
}

/// Which phase-space coordinates the map is over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// `(theta, theta')`
    Lab,
    /// `(X, Y)` of the demodulated amplitude
    Rotating,
}

/// Per-cell label of a basin map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasinLabel {
    Zero,
    One,
    /// No period-doubled response (or a failed cell).
    Undefined,
    /// Rotating frame only: no lab seed realizes this cell.
    Unreachable,
}

impl From<Bit> for BasinLabel {
    fn from(b: Bit) -> Self {
        match b {
            Bit::Zero => BasinLabel::Zero,
            Bit::One => BasinLabel::One,
            Bit::Undefined => BasinLabel::Undefined,
        }
    }
}

impl BasinLabel {
    pub fn complement(self) -> BasinLabel {
        match self {
            BasinLabel::Zero => BasinLabel::One,
            BasinLabel::One => BasinLabel::Zero,
            other => other,
        }
    }

    /// Numeric code used in CSV exports: 0, 1, -1 (undefined), -2
    /// (unreachable).
    pub fn code(self) -> i8 {
        match self {
            BasinLabel::Zero => 0,
            BasinLabel::One => 1,
            BasinLabel::Undefined => -1,
            BasinLabel::Unreachable => -2,
        }
    }
}

/// Basin map over a 2-D grid of initial conditions. Cells are stored
/// row-major with the x index outermost: `labels[ix * y.count + iy]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinMap {
    pub frame: Frame,
    pub x: AxisSpec,
    pub y: AxisSpec,
    pub labels: Vec<BasinLabel>,
    /// Classification threshold used for the labels.
    pub r_min: f64,
    /// Final time of each cell integration, in drive periods.
    pub t_f_periods: f64,
}

impl BasinMap {
    pub fn label(&self, ix: usize, iy: usize) -> BasinLabel {
        self.labels[ix * self.y.count + iy]
    }

    pub fn unreachable_fraction(&self) -> f64 {
        let n = self.labels.len();
        let u = self.labels.iter().filter(|&&l| l == BasinLabel::Unreachable).count();
        u as f64 / n as f64
    }
}

/// Knobs of a basin scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinScanConfig {
    /// Integration time before labeling, in drive periods.
    pub t_f_periods: f64,
    pub dt_per_period: usize,
    pub samples_per_subharmonic: usize,
    /// Classification threshold; `None` calibrates 5% of the single-site
    /// steady-state amplitude.
    pub r_min: Option<f64>,
    /// Lab seed grid for the rotating-frame scan.
    pub seed_x: AxisSpec,
    pub seed_y: AxisSpec,
}

impl Default for BasinScanConfig {
    fn default() -> Self {
        BasinScanConfig {
            t_f_periods: 150.0,
            dt_per_period: 512,
            samples_per_subharmonic: 64,
            r_min: None,
            seed_x: AxisSpec::new("theta", -std::f64::consts::PI, std::f64::consts::PI, 201),
            seed_y: AxisSpec::new("theta_dot", -2.0, 2.0, 201),
        }
    }
}

fn single_site_model(params: &DpoParams) -> Result<Model> {
    if params.topology.n_sites() != 1 || !params.topology.edges().is_empty() {
        return Err(Error::InvalidParams(
            "basin scans need a single uncoupled site".into(),
        ));
    }
    let model = Model::Dpo(params.clone());
    model.validate()?;
    Ok(model)
}

fn resolve_r_min(model: &Model, scan: &BasinScanConfig) -> Result<f64> {
    match scan.r_min {
        Some(r) => Ok(r),
        None => {
            let numerics = Numerics {
                dt_per_period: scan.dt_per_period,
                samples_per_subharmonic: scan.samples_per_subharmonic,
                calibration_relax: scan.t_f_periods,
                ..Numerics::default()
            };
            Ok(calibrate(model, &numerics)?.r_min)
        }
    }
}

/// One noiseless cell integration; returns the initial-window demodulation
/// point and the final-window classification.
fn run_cell(
    model: &Model,
    scan: &BasinScanConfig,
    theta: f64,
    theta_dot: f64,
    r_min: f64,
) -> Result<((f64, f64), Bit)> {
    let t_d = model.drive_period();
    let dt = t_d / scan.dt_per_period as f64;
    let stride = 2 * scan.dt_per_period / scan.samples_per_subharmonic;
    let t_f = scan.t_f_periods * t_d;
    let cfg = IntegrationConfig::noiseless(dt, 0.0, t_f + 2.0 * t_d, stride);
    let sched = ScheduleSet::uniform(0, 1, 0.0);
    let init = SystemState::Dpo(vec![PendulumSite { theta, theta_dot }]);
    let traj = integrate(model, &sched, &init, &cfg)?;
    let obs = default_observable(model.kind());
    let omega_r = model.subharmonic_omega();
    let d0 = demodulate(&traj, obs, omega_r, 0.0)?;
    let df = demodulate(&traj, obs, omega_r, t_f)?;
    let xy = (d0.r[0] * d0.phi[0].cos(), d0.r[0] * d0.phi[0].sin());
    Ok((xy, classify_bit(&df, r_min)[0]))
}

/// Lab-frame basin map over initial `(theta, theta')` cells.
pub fn basin_scan_lab(
    params: &DpoParams,
    x: AxisSpec,
    y: AxisSpec,
    scan: &BasinScanConfig,
) -> Result<BasinMap> {
    x.validate()?;
    y.validate()?;
    let model = single_site_model(params)?;
    let r_min = resolve_r_min(&model, scan)?;
    let cells: Vec<(usize, usize)> =
        (0..x.count).flat_map(|ix| (0..y.count).map(move |iy| (ix, iy))).collect();
    let labels: Vec<BasinLabel> = cells
        .par_iter()
        .map(|&(ix, iy)| {
            match run_cell(&model, scan, x.value(ix), y.value(iy), r_min) {
                Ok((_, bit)) => BasinLabel::from(bit),
                Err(_) => BasinLabel::Undefined,
            }
        })
        .collect();
    Ok(BasinMap { frame: Frame::Lab, x, y, labels, r_min, t_f_periods: scan.t_f_periods })
}

/// Rotating-frame basin map over target `(X, Y)` cells, realized through a
/// scan of lab-frame seeds.
pub fn basin_scan_rotating(
    params: &DpoParams,
    x: AxisSpec,
    y: AxisSpec,
    scan: &BasinScanConfig,
) -> Result<BasinMap> {
    x.validate()?;
    y.validate()?;
    scan.seed_x.validate()?;
    scan.seed_y.validate()?;
    let model = single_site_model(params)?;
    let r_min = resolve_r_min(&model, scan)?;

    let seeds: Vec<(f64, f64)> = scan
        .seed_x
        .values()
        .into_iter()
        .flat_map(|sx| scan.seed_y.values().into_iter().map(move |sy| (sx, sy)))
        .collect();
    let achieved: Vec<((f64, f64), Bit)> = seeds
        .par_iter()
        .filter_map(|&(sx, sy)| run_cell(&model, scan, sx, sy, r_min).ok())
        .collect();

    // keep, per rotating cell, the achieved point closest to the center
    let mut best: Vec<Option<(f64, Bit)>> = vec![None; x.count * y.count];
    for ((px, py), bit) in achieved {
        let (Some(ix), Some(iy)) = (x.nearest(px), y.nearest(py)) else { continue };
        let dx = px - x.value(ix);
        let dy = py - y.value(iy);
        let d2 = dx * dx + dy * dy;
        let slot = &mut best[ix * y.count + iy];
        if slot.map_or(true, |(prev, _)| d2 < prev) {
            *slot = Some((d2, bit));
        }
    }
    let labels = best
        .into_iter()
        .map(|slot| slot.map_or(BasinLabel::Unreachable, |(_, bit)| BasinLabel::from(bit)))
        .collect();
    Ok(BasinMap { frame: Frame::Rotating, x, y, labels, r_min, t_f_periods: scan.t_f_periods })
}
