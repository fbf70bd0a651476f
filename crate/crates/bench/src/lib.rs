//! Shared fixtures for the kernel benchmarks.

use pdgate_core::integrator::IntegrationConfig;
use pdgate_core::models::{DpoParams, KpoParams, Model, PendulumSite, SystemState, Topology};
use pdgate_core::schedule::ScheduleSet;
use std::f64::consts::PI;

/// Four-site pendulum star at the canonical gate operating point.
pub fn dpo_star() -> (Model, ScheduleSet, SystemState, IntegrationConfig) {
    let model = Model::Dpo(DpoParams::standard(0.2, 0.0, Topology::gate_star(0.3, 0.0)));
    let sched = ScheduleSet::uniform(3, 4, 1.0);
    let init = SystemState::Dpo(vec![
        PendulumSite { theta: 0.5, theta_dot: 0.0 },
        PendulumSite { theta: -0.5, theta_dot: 0.0 },
        PendulumSite { theta: 0.5, theta_dot: 0.0 },
        PendulumSite { theta: 0.5, theta_dot: 0.0 },
    ]);
    let t_d = PI;
    let cfg = IntegrationConfig::noiseless(t_d / 512.0, 0.0, 4.0 * t_d, 16);
    (model, sched, init, cfg)
}

/// Four-site KPO star growing out of the vacuum with TWA noise from t = 0,
/// so the stochastic Heun path is exercised.
pub fn kpo_star_noisy() -> (Model, ScheduleSet, SystemState, IntegrationConfig) {
    let model = Model::Kpo(KpoParams::standard(6.0, 1e3, Topology::gate_star(-0.3, 0.0)));
    let sched = ScheduleSet::uniform(3, 4, 1.0);
    let init = SystemState::kpo_zero(4);
    let t_mod = 2.0 * PI / 6.0;
    let cfg = IntegrationConfig::noiseless(t_mod / 512.0, 0.0, 4.0 * t_mod, 16)
        .with_noise_from(0.0, 7);
    (model, sched, init, cfg)
}
