//! Piecewise-constant time profiles for couplings and drive gates.
//!
//! A [`Schedule`] is an ordered list of `[t_start, t_end)` segments with a
//! dimensionless value each and a default value outside all segments. The
//! pulse protocols are built from these: a coupling pulse of height `j` and
//! duration `T_q` is an edge with base strength `j` whose gate schedule is
//! `1` on `[t_p, t_p + T_q)` and `0` otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One piecewise-constant segment, right-open: `t_start <= t < t_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub value: f64,
}

/// Piecewise-constant profile with a default value outside all segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    segments: Vec<Segment>,
    default: f64,
}

impl Schedule {
    /// Constant profile.
    pub fn constant(value: f64) -> Self {
        Schedule { segments: Vec::new(), default: value }
    }

    /// Profile that is `default` everywhere except the given segments.
    pub fn new(default: f64, mut segments: Vec<Segment>) -> Result<Self> {
        segments.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        for seg in &segments {
            if !(seg.t_start < seg.t_end) {
                return Err(Error::Schedule(format!(
                    "segment [{}, {}) is empty or inverted",
                    seg.t_start, seg.t_end
                )));
            }
        }
        for pair in segments.windows(2) {
            if pair[1].t_start < pair[0].t_end {
                return Err(Error::Schedule(format!(
                    "segments [{}, {}) and [{}, {}) overlap",
                    pair[0].t_start, pair[0].t_end, pair[1].t_start, pair[1].t_end
                )));
            }
        }
        Ok(Schedule { segments, default })
    }

    /// Single pulse of `value` on `[t_start, t_start + duration)` over a
    /// `default` background.
    pub fn pulse(default: f64, t_start: f64, duration: f64, value: f64) -> Result<Self> {
        Schedule::new(default, vec![Segment { t_start, t_end: t_start + duration, value }])
    }

    pub fn default_value(&self) -> f64 {
        self.default
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Value at time `t` (right-open segment convention).
    pub fn value(&self, t: f64) -> f64 {
        for seg in &self.segments {
            if t < seg.t_start {
                break;
            }
            if t < seg.t_end {
                return seg.value;
            }
        }
        self.default
    }

    /// All segment boundaries, for step-alignment validation.
    pub fn boundaries(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().flat_map(|s| [s.t_start, s.t_end])
    }
}

/// Evaluate a schedule at time `t`.
pub fn schedule_value(s: &Schedule, t: f64) -> f64 {
    s.value(t)
}

/// Per-edge coupling gates and per-site drive gates for one run.
///
/// Edge schedules are dimensionless multipliers on the edge's base coupling
/// strength; site schedules are the drive gate factors `A_l(t) in [0, 1]`
/// multiplying the model's modulation depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSet {
    edge_gates: Vec<Schedule>,
    drive_gates: Vec<Schedule>,
}

impl ScheduleSet {
    /// All drive gates at 1, all edge gates at `edge_default`.
    pub fn uniform(n_edges: usize, n_sites: usize, edge_default: f64) -> Self {
        ScheduleSet {
            edge_gates: vec![Schedule::constant(edge_default); n_edges],
            drive_gates: vec![Schedule::constant(1.0); n_sites],
        }
    }

    pub fn new(edge_gates: Vec<Schedule>, drive_gates: Vec<Schedule>) -> Self {
        ScheduleSet { edge_gates, drive_gates }
    }

    pub fn n_edges(&self) -> usize {
        self.edge_gates.len()
    }

    pub fn n_sites(&self) -> usize {
        self.drive_gates.len()
    }

    pub fn set_edge_gate(&mut self, edge: usize, s: Schedule) {
        self.edge_gates[edge] = s;
    }

    pub fn set_drive_gate(&mut self, site: usize, s: Schedule) {
        self.drive_gates[site] = s;
    }

    #[inline]
    pub fn edge_gate(&self, edge: usize, t: f64) -> f64 {
        self.edge_gates[edge].value(t)
    }

    #[inline]
    pub fn drive_gate(&self, site: usize, t: f64) -> f64 {
        self.drive_gates[site].value(t)
    }

    /// Check that the set addresses exactly the given topology size.
    pub fn validate(&self, n_edges: usize, n_sites: usize) -> Result<()> {
        if self.edge_gates.len() != n_edges {
            return Err(Error::Schedule(format!(
                "schedule set has {} edge gates, topology has {} edges",
                self.edge_gates.len(),
                n_edges
            )));
        }
        if self.drive_gates.len() != n_sites {
            return Err(Error::Schedule(format!(
                "schedule set has {} drive gates, model has {} sites",
                self.drive_gates.len(),
                n_sites
            )));
        }
        Ok(())
    }

    /// All segment boundaries across all schedules.
    pub fn boundaries(&self) -> Vec<f64> {
        self.edge_gates
            .iter()
            .chain(self.drive_gates.iter())
            .flat_map(|s| s.boundaries())
            .collect()
    }
}
