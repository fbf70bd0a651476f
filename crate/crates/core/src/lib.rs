//! Classical bits in period-doubled states of driven dissipative systems.
//!
//! This crate simulates three systems that host two degenerate period-doubled
//! states — a network of dissipative parametric oscillators (DPO), a network
//! of Kerr parametric oscillators (KPO), and the driven open Dicke lattice
//! model (DLM) — and implements single-pulse bit-flip, NAND/NOR and reset
//! protocols on the bits encoded in those states, along with noise-robustness
//! sweeps and basin-of-attraction scans.
//!
//! Module map:
//! - [`models`]: parameters, drift fields and noise channels of the three
//!   systems.
//! - [`schedule`]: piecewise-constant pulse profiles for couplings and drive
//!   gates.
//! - [`integrator`]: fixed-step RK4 / stochastic Heun stepping with
//!   counter-based reproducible noise.
//! - [`analysis`]: subharmonic demodulation, bit classification, phase
//!   distances.
//! - [`basins`]: basin-of-attraction maps in the lab and rotating frames.
//! - [`protocols`]: initialization, bit-flip, NAND/NOR gates, pseudo-gate
//!   detection, reset, Monte Carlo success statistics.
//! - [`sweep`]: parameter sweeps, CSV/JSON persistence, resumable grids.
//! - [`config`]: the declarative run configuration consumed by the CLI.

pub mod analysis;
pub mod basins;
pub mod config;
pub mod error;
pub mod integrator;
pub mod models;
pub mod protocols;
pub mod rng;
pub mod schedule;
pub mod sweep;

pub use analysis::{classify_bit, delta_phi, demodulate, rotating_frame_point, Bit, DemodResult};
pub use error::{Error, Result};
pub use integrator::{integrate, IntegrationConfig, Trajectory};
pub use models::{
    dlm_drift, dpo_drift, kpo_drift, lambda_critical, noise_amplitudes, DlmParams, DpoParams,
    KpoParams, Model, ModelKind, NoiseChannel, SystemState, Topology,
};
pub use schedule::{schedule_value, Schedule, ScheduleSet};
