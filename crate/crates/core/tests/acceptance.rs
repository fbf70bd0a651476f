//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its runtime. Run with
//!
//! ```text
//! cargo test -p pdgate-core --test acceptance -- --nocapture --test-threads=1
//! ```
//!
//! Every tolerance is pinned here, in code.

use std::f64::consts::PI;
use std::time::Instant;

use pdgate_core::analysis::{default_observable, delta_phi, demodulate, readout_average};
use pdgate_core::basins::{basin_scan_lab, AxisSpec, BasinLabel, BasinScanConfig};
use pdgate_core::config::RunConfig;
use pdgate_core::integrator::{integrate, integrate_flow, Flow, IntegrationConfig, Trajectory};
use pdgate_core::models::{
    DlmParams, DpoParams, KpoParams, Model, NoiseChannel, PendulumSite, SystemState, Topology,
};
use pdgate_core::protocols::{
    best_subharmonic_frequency, calibrate, kpo_subharmonic_scan, GateClass, GateKind, Numerics,
    Runner, SuccessPolicy,
};
use pdgate_core::schedule::ScheduleSet;
use pdgate_core::sweep::{sweep_gate, sweep_reset, CellValue};

fn report(n: usize, started: Instant, what: &str) {
    println!("ACCEPTANCE {n:2} PASS ({:8.2} s): {what}", started.elapsed().as_secs_f64());
}

fn load_preset(name: &str, overrides: &[(&str, &str)]) -> RunConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    let owned: Vec<(String, String)> =
        overrides.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    RunConfig::load(&path, &owned).unwrap()
}

/// 1. Demodulation recovers a pure subharmonic to 1e-6 at 256 samples per
/// window, and rejects the drive harmonic to the same level.
#[test]
fn acceptance_01_demodulation_oracle() {
    let started = Instant::now();
    let omega_r = 1.0;
    let (r0, phi0) = (0.83, 0.9);
    let n = 4 * 256;
    let t1 = 4.0 * 2.0 * PI;
    let h = t1 / n as f64;
    let wrap = |f: &dyn Fn(f64) -> f64| {
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let states = times
            .iter()
            .map(|&t| SystemState::Dpo(vec![PendulumSite { theta: f(t), theta_dot: 0.0 }]))
            .collect();
        Trajectory::from_samples(times, states, "synthetic").unwrap()
    };
    let obs = default_observable(pdgate_core::models::ModelKind::Dpo);

    let traj = wrap(&|t| r0 * (omega_r * t - phi0).cos());
    let d = demodulate(&traj, obs, omega_r, 2.0 * PI).unwrap();
    assert!((d.r[0] - r0).abs() < 1e-6 * r0, "amplitude error {:e}", (d.r[0] - r0).abs());
    assert!((d.phi[0] - phi0).abs() < 1e-6, "phase error {:e}", (d.phi[0] - phi0).abs());

    let harmonic = wrap(&|t| (2.0 * omega_r * t).cos());
    let dh = demodulate(&harmonic, obs, omega_r, 2.0 * PI).unwrap();
    assert!(dh.r[0] < 1e-6, "drive harmonic leaked: r = {:e}", dh.r[0]);

    assert!(started.elapsed().as_secs_f64() < 1.0, "over the 1 s budget");
    report(1, started, "demodulation oracle: pure subharmonic and drive-harmonic rejection");
}

/// 2. A single pendulum at the canonical operating point reaches a steady
/// subharmonic state from (0.5, 0); the negated seed sits pi away in phase.
#[test]
fn acceptance_02_period_doubling_onset() {
    let started = Instant::now();
    let model = Model::Dpo(DpoParams::standard(0.2, 0.0, Topology::isolated(1)));
    let numerics = Numerics::default();
    let cal = calibrate(&model, &numerics).unwrap();

    let t_d = model.drive_period();
    let dt = t_d / numerics.dt_per_period as f64;
    let cfg = IntegrationConfig::noiseless(dt, 0.0, 150.0 * t_d, numerics.sample_stride());
    let sched = ScheduleSet::uniform(0, 1, 0.0);
    let seed = SystemState::Dpo(vec![PendulumSite { theta: 0.5, theta_dot: 0.0 }]);
    let obs = default_observable(model.kind());

    let traj = integrate(&model, &sched, &seed, &cfg).unwrap();
    let d = readout_average(&traj, obs, cal.omega_r, numerics.readout_windows).unwrap();
    assert!(
        d.r[0] > 10.0 * cal.r_min,
        "r = {} vs 10 r_min = {}",
        d.r[0],
        10.0 * cal.r_min
    );

    let traj_neg = integrate(&model, &sched, &seed.negated(), &cfg).unwrap();
    let dn = readout_average(&traj_neg, obs, cal.omega_r, numerics.readout_windows).unwrap();
    let sep = delta_phi(d.phi[0], dn.phi[0]);
    assert!((sep - PI).abs() < 0.05, "phase separation {sep}");

    assert!(started.elapsed().as_secs_f64() < 5.0, "over the 5 s budget");
    report(2, started, "period-doubling onset and pi-separated partner state");
}

/// 3. Bit-flip map: no success anywhere at j = 0.1; at least one contiguous
/// success band in T_q at j = 0.3.
#[test]
fn acceptance_03_bit_flip_map_structure() {
    let started = Instant::now();
    let numerics = Numerics::default();
    let cal = calibrate(
        &Model::Dpo(DpoParams::standard(0.2, 0.0, Topology::isolated(1))),
        &numerics,
    )
    .unwrap();
    let tq_values: Vec<f64> = (1..=80).map(|k| 0.25 * k as f64).collect();

    let successes_at = |j: f64| -> Vec<bool> {
        let model = Model::Dpo(DpoParams::standard(0.2, 0.0, Topology::pair(j)));
        let runner = Runner::with_calibration(model, numerics.clone(), cal.clone()).unwrap();
        tq_values.iter().map(|&tq| runner.run_flip(tq, None).unwrap().success).collect()
    };

    let weak = successes_at(0.1);
    assert_eq!(weak.iter().filter(|&&s| s).count(), 0, "j = 0.1 must never flip");

    let strong = successes_at(0.3);
    let mut best_band = 0usize;
    let mut current = 0usize;
    for &s in &strong {
        current = if s { current + 1 } else { 0 };
        best_band = best_band.max(current);
    }
    assert!(best_band >= 2, "no contiguous success band at j = 0.3");

    // scan-refinement consistency: band edges seen by a 4x coarser grid sit
    // within one coarse cell of the fine edges
    let edge = |flags: &[bool]| {
        let first = flags.iter().position(|&s| s);
        let last = flags.iter().rposition(|&s| s);
        (first, last)
    };
    let coarse: Vec<bool> = strong.iter().copied().step_by(4).collect();
    let (ff, fl) = edge(&strong);
    let (cf, cl) = edge(&coarse);
    let (ff, fl, cf, cl) = (ff.unwrap(), fl.unwrap(), cf.unwrap(), cl.unwrap());
    let coarse_step = 1.0;
    assert!(
        (tq_values[ff] - (0.25 + cf as f64 * coarse_step * 4.0 * 0.25)).abs()
            <= coarse_step + 1e-9,
        "lower band edge moved by more than one coarse cell"
    );
    assert!(
        (tq_values[fl] - (0.25 + cl as f64 * coarse_step * 4.0 * 0.25)).abs()
            <= coarse_step + 1e-9,
        "upper band edge moved by more than one coarse cell"
    );

    assert!(started.elapsed().as_secs_f64() < 120.0, "over the 2 min budget");
    report(3, started, "bit-flip map: j=0.1 empty, j=0.3 has a contiguous band");
}

/// 4. A noiseless NAND truth table passes at a pulse duration selected by
/// scan, and the NOR dual passes under global bit complement.
#[test]
fn acceptance_04_noiseless_nand_and_nor_dual() {
    let started = Instant::now();
    let numerics = Numerics::default();
    let model = Model::Dpo(DpoParams::standard(0.2, 0.0, Topology::gate_star(0.3, 0.0)));
    let runner = Runner::new(model, numerics).unwrap();

    // select T_q by scanning upward until the table is fully correct
    let mut chosen = None;
    for k in 2..=24 {
        let tq = 0.25 * k as f64;
        let table = runner.run_truth_table(GateKind::Nand, tq, None).unwrap();
        if table.aggregate == GateClass::Full {
            chosen = Some((tq, table));
            break;
        }
    }
    let (tq, nand) = chosen.expect("no working NAND point in the scanned range");
    for o in &nand.outcomes {
        assert_eq!(o.output, o.expected, "NAND inputs {:?}", o.inputs);
    }

    // the NOR dual: complemented inputs and initial bits, complemented output
    for inputs in [(false, false), (false, true), (true, false), (true, true)] {
        let a = runner.run_gate(GateKind::Nand, inputs, tq, None).unwrap();
        let b = runner.run_gate(GateKind::Nor, (!inputs.0, !inputs.1), tq, None).unwrap();
        assert_eq!(b.output, a.output.complement(), "duality at inputs {inputs:?}");
        assert_eq!(b.output, b.expected, "NOR truth table at inputs {inputs:?}");
    }

    assert!(started.elapsed().as_secs_f64() < 120.0, "over the 2 min budget");
    report(4, started, &format!("noiseless NAND full at T_q = {tq} T_d, NOR dual passes"));
}

/// 5. The noiseless three-way gate map contains nonempty Full and Pseudo
/// regions (21 x 21 grid, shipped preset).
#[test]
fn acceptance_05_pseudo_gate_three_way_map() {
    let started = Instant::now();
    let cfg = load_preset("sm_pseudogates.toml", &[]);
    let grid = sweep_gate(&cfg, None).unwrap();
    let full = grid.cells.iter().filter(|c| matches!(c, CellValue::Class(GateClass::Full))).count();
    let pseudo =
        grid.cells.iter().filter(|c| matches!(c, CellValue::Class(GateClass::Pseudo))).count();
    let failed = grid.cells.iter().filter(|c| matches!(c, CellValue::Failed(_))).count();
    assert!(full > 0, "no Full region");
    assert!(pseudo > 0, "no Pseudo region");
    assert_eq!(failed, 0, "cells failed to evaluate");

    assert!(started.elapsed().as_secs_f64() < 900.0, "over the 15 min budget");
    report(
        5,
        started,
        &format!("three-way gate map: {full} Full and {pseudo} Pseudo cells of {}", grid.cells.len()),
    );
}

/// 6. Reset protocol: every scanned pulse duration ends within 0.05 rad of
/// synchronization (0) or anti-synchronization (pi), and both occur.
#[test]
fn acceptance_06_reset_protocol() {
    let started = Instant::now();
    let cfg = load_preset("sm_reset.toml", &[]);
    let table = sweep_reset(&cfg).unwrap();
    let cluster_of = |v: f64, i: usize| -> bool {
        if v < 0.05 {
            false
        } else if (v - PI).abs() < 0.05 {
            true
        } else {
            panic!("delta_phi = {v} at T_q = {} is outside both clusters", table.t_q.value(i));
        }
    };
    let clusters: Vec<bool> = table
        .delta_phi
        .iter()
        .enumerate()
        .map(|(i, v)| cluster_of(v.unwrap_or_else(|| panic!("cell {i} undefined")), i))
        .collect();
    let anti = clusters.iter().filter(|&&c| c).count();
    let synch = clusters.len() - anti;
    assert!(synch > 0, "no synchronized outcomes");
    assert!(anti > 0, "no anti-synchronized outcomes");

    // refinement oracle: halving the step leaves every cluster assignment
    // unchanged
    let cfg_fine = load_preset("sm_reset.toml", &[("integration.dt_per_period", "1024")]);
    let fine = sweep_reset(&cfg_fine).unwrap();
    let clusters_fine: Vec<bool> = fine
        .delta_phi
        .iter()
        .enumerate()
        .map(|(i, v)| cluster_of(v.unwrap_or_else(|| panic!("fine cell {i} undefined")), i))
        .collect();
    assert_eq!(clusters, clusters_fine, "cluster boundaries moved under dt halving");

    assert!(started.elapsed().as_secs_f64() < 120.0, "over the 2 min budget");
    report(6, started, &format!("reset: {synch} synchronized / {anti} anti-synchronized, stable under dt halving"));
}

/// 7. Thermal robustness at a full-region interior point: high success at
/// T = 1e-4 and no significant loss relative to T = 1e-3.
#[test]
fn acceptance_07_thermal_robustness() {
    let started = Instant::now();
    let (j, tq) = (0.1, 7.0);
    let n = 50usize;
    let numerics = Numerics::default();

    // the chosen point is interior: noiseless table is Full
    let noiseless = Runner::new(
        Model::Dpo(DpoParams::standard(0.1, 0.0, Topology::gate_star(j, 0.0))),
        numerics.clone(),
    )
    .unwrap();
    assert_eq!(
        noiseless.run_truth_table(GateKind::Nand, tq, None).unwrap().aggregate,
        GateClass::Full,
        "(j, T_q) = ({j}, {tq}) is not in the Full region"
    );
    let cal = noiseless.calibration().clone();

    let p_at = |t_tilde: f64| {
        let model = Model::Dpo(DpoParams::standard(0.1, t_tilde, Topology::gate_star(j, 0.0)));
        Runner::with_calibration(model, numerics.clone(), cal.clone())
            .unwrap()
            .success_probability(GateKind::Nand, tq, n, 20260809, SuccessPolicy::OutputOnly)
            .unwrap()
    };
    let p_cold = p_at(1e-4);
    let p_warm = p_at(1e-3);
    let tol = 2.0 / (n as f64).sqrt();
    assert!(p_cold >= 0.9, "P(T = 1e-4) = {p_cold}");
    assert!(p_cold >= p_warm - tol, "P(1e-4) = {p_cold} vs P(1e-3) = {p_warm} (tol {tol:.3})");

    assert!(started.elapsed().as_secs_f64() < 600.0, "over the 10 min budget");
    report(7, started, &format!("thermal robustness: P(1e-4) = {p_cold}, P(1e-3) = {p_warm}"));
}

/// 8. KPO and DLM: the modulation frequency found by the documented
/// subharmonic scan yields two initializable bit states, and a noiseless
/// (J, T_q) point passing the full truth table exists for both models.
#[test]
fn acceptance_08_kpo_dlm_validity() {
    let started = Instant::now();
    let numerics = Numerics::default();

    // KPO: scan omega_mod over [3, 12]; keep frequencies where both bits are
    // initializable; take the strongest response
    let base = KpoParams::standard(6.0, 1e3, Topology::isolated(1));
    let scan = kpo_subharmonic_scan(&base, &numerics, (3.0, 12.0), 46).unwrap();
    let omega_mod = best_subharmonic_frequency(&scan).expect("no initializable frequency");
    let kpo_single = Model::Kpo(KpoParams::standard(omega_mod, 1e3, Topology::isolated(1)));
    let kpo_cal = calibrate(&kpo_single, &numerics).unwrap();
    assert!(
        (delta_phi(kpo_cal.phi_zero, kpo_cal.phi_one) - PI).abs() < 0.1,
        "KPO bit states are not pi-separated"
    );

    let mut kpo_full = None;
    'kpo: for &j in &[-0.30, -0.35, -0.25, -0.20] {
        for k in 0..=30 {
            let tq = 4.5 + 0.1 * k as f64;
            let model =
                Model::Kpo(KpoParams::standard(omega_mod, 1e3, Topology::gate_star(j, 0.0)));
            let runner =
                Runner::with_calibration(model, numerics.clone(), kpo_cal.clone()).unwrap();
            if runner.run_truth_table(GateKind::Nand, tq, None).unwrap().aggregate
                == GateClass::Full
            {
                kpo_full = Some((j, tq));
                break 'kpo;
            }
        }
    }
    let kpo_point = kpo_full.expect("no full-truth-table KPO point in the scanned grid");

    // DLM at the documented kappa = omega: two initializable bit states and
    // a full-truth-table point
    let dlm_single = Model::Dlm(DlmParams::standard(1.0, 1e3, Topology::isolated(1)));
    let dlm_cal = calibrate(&dlm_single, &numerics).unwrap();
    assert!(
        (delta_phi(dlm_cal.phi_zero, dlm_cal.phi_one) - PI).abs() < 0.1,
        "DLM bit states are not pi-separated"
    );

    let mut dlm_full = None;
    'dlm: for &j in &[0.1, 0.3] {
        for k in 0..=14 {
            let tq = 3.0 + 0.5 * k as f64;
            let model = Model::Dlm(DlmParams::standard(1.0, 1e3, Topology::gate_star(j, 0.0)));
            let runner =
                Runner::with_calibration(model, numerics.clone(), dlm_cal.clone()).unwrap();
            if runner.run_truth_table(GateKind::Nand, tq, None).unwrap().aggregate
                == GateClass::Full
            {
                dlm_full = Some((j, tq));
                break 'dlm;
            }
        }
    }
    let dlm_point = dlm_full.expect("no full-truth-table DLM point in the scanned grid");

    assert!(started.elapsed().as_secs_f64() < 1800.0, "over the 30 min budget");
    report(
        8,
        started,
        &format!(
            "KPO omega_mod = {omega_mod:.1}, full gate at (J, T_q) = {kpo_point:?}; \
             DLM full gate at (J, T_q) = {dlm_point:?}"
        ),
    );
}

/// 9. TWA convergence: the KPO success map at N = 1e4 is closer (L1) to the
/// noiseless map than the N = 1e3 map, with matched seeds.
#[test]
fn acceptance_09_twa_convergence() {
    let started = Instant::now();
    let overrides_base: &[(&str, &str)] = &[
        ("sweep.coupling.min", "-0.35"),
        ("sweep.coupling.max", "-0.15"),
        ("sweep.coupling.count", "5"),
        ("sweep.Tq.min", "5.0"),
        ("sweep.Tq.max", "7.0"),
        ("sweep.Tq.count", "9"),
        ("sweep.n_realizations", "20"),
    ];
    let noiseless_cfg = {
        let mut o = overrides_base.to_vec();
        o.push(("integration.noise", "false"));
        load_preset("fig3d.toml", &o)
    };
    let reference = sweep_gate(&noiseless_cfg, None).unwrap();

    let grid_at = |n: &str| {
        let mut o = overrides_base.to_vec();
        o.push(("model.kpo.n", n));
        let cfg = load_preset("fig3d.toml", &o);
        sweep_gate(&cfg, None).unwrap()
    };
    let coarse = grid_at("1e3");
    let fine = grid_at("1e4");
    let d_coarse = coarse.l1_distance(&reference, SuccessPolicy::OutputOnly);
    let d_fine = fine.l1_distance(&reference, SuccessPolicy::OutputOnly);
    assert!(
        d_fine < d_coarse,
        "L1(N=1e4) = {d_fine:.4} is not below L1(N=1e3) = {d_coarse:.4}"
    );

    assert!(started.elapsed().as_secs_f64() < 1800.0, "over the 30 min budget");
    report(9, started, &format!("TWA convergence: L1 {d_coarse:.4} (N=1e3) -> {d_fine:.4} (N=1e4)"));
}

/// 10. Numerical hygiene: energy conservation, step-halving order,
/// thread-count invariance, basin antisymmetry.
#[test]
fn acceptance_10_numerical_hygiene() {
    let started = Instant::now();

    // energy conservation of the undriven undamped pendulum at dt = T_d/1024
    let params = DpoParams {
        omega: 1.0,
        drive_amp: 0.0,
        omega_d: 2.0,
        gamma: 0.0,
        t_tilde: 0.0,
        topology: Topology::isolated(1),
    };
    let model = Model::Dpo(params);
    let t_d = PI;
    let periods = 20.0;
    let cfg = IntegrationConfig::noiseless(t_d / 1024.0, 0.0, periods * t_d, 32);
    let init = SystemState::Dpo(vec![PendulumSite { theta: 1.2, theta_dot: 0.3 }]);
    let traj = integrate(&model, &ScheduleSet::uniform(0, 1, 0.0), &init, &cfg).unwrap();
    let energy = |s: &SystemState| match s {
        SystemState::Dpo(v) => 0.5 * v[0].theta_dot * v[0].theta_dot - v[0].theta.cos(),
        _ => unreachable!(),
    };
    let drift = (energy(traj.final_state()) - energy(&traj.states()[0])).abs() / periods;
    assert!(drift < 1e-8, "energy drift {drift:e} per period");

    // step-halving order >= 3.5 on the linear problem
    struct Linear;
    impl Flow for Linear {
        fn drift_into(
            &self,
            s: &SystemState,
            _: f64,
            _: &ScheduleSet,
            out: &mut SystemState,
        ) {
            let (s, d) = match (s, out) {
                (SystemState::Dpo(s), SystemState::Dpo(d)) => (s, d),
                _ => unreachable!(),
            };
            d[0].theta = s[0].theta_dot;
            d[0].theta_dot = -s[0].theta - 0.2 * s[0].theta_dot;
        }
        fn noise(&self) -> NoiseChannel {
            NoiseChannel::RealVelocity { amplitude: 0.0 }
        }
        fn tag(&self) -> String {
            "linear".into()
        }
    }
    let exact = |t: f64| {
        let wt = (1.0f64 - 0.01).sqrt();
        0.8 * (-0.1 * t).exp() * ((wt * t).cos() + 0.1 / wt * (wt * t).sin())
    };
    let err_at = |dt: f64| {
        let tf = 10.0;
        let n = (tf / dt).round() as usize;
        let cfg = IntegrationConfig::noiseless(dt, 0.0, tf, n);
        let init = SystemState::Dpo(vec![PendulumSite { theta: 0.8, theta_dot: 0.0 }]);
        let traj =
            integrate_flow(&Linear, &ScheduleSet::uniform(0, 1, 0.0), &init, &cfg).unwrap();
        match traj.final_state() {
            SystemState::Dpo(v) => (v[0].theta - exact(tf)).abs(),
            _ => unreachable!(),
        }
    };
    let order = (err_at(0.02) / err_at(0.01)).log2();
    assert!(order >= 3.5, "observed order {order:.2}");

    // bit-identical results across thread counts on a noisy sweep
    let cfg = load_preset(
        "fig3b.toml",
        &[
            ("sweep.coupling.min", "0.08"),
            ("sweep.coupling.max", "0.12"),
            ("sweep.coupling.count", "2"),
            ("sweep.Tq.min", "6.0"),
            ("sweep.Tq.max", "8.0"),
            ("sweep.Tq.count", "2"),
            ("sweep.n_realizations", "3"),
        ],
    );
    let run_with_threads = |n: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| sweep_gate(&cfg, None).unwrap())
    };
    let single = run_with_threads(1);
    let multi = run_with_threads(4);
    assert_eq!(single.cells, multi.cells, "results depend on thread count");

    // basin antisymmetry: label(-s) is the complement of label(s) on every
    // defined cell of a symmetric grid
    let params = DpoParams::standard(0.2, 0.0, Topology::isolated(1));
    let nx = 21;
    let map = basin_scan_lab(
        &params,
        AxisSpec::new("theta", -PI, PI, nx),
        AxisSpec::new("theta_dot", -2.0, 2.0, nx),
        &BasinScanConfig::default(),
    )
    .unwrap();
    let mut defined = 0usize;
    for ix in 0..nx {
        for iy in 0..nx {
            let l = map.label(ix, iy);
            let ln = map.label(nx - 1 - ix, nx - 1 - iy);
            if matches!(l, BasinLabel::Zero | BasinLabel::One) {
                defined += 1;
                if matches!(ln, BasinLabel::Zero | BasinLabel::One) {
                    assert_eq!(ln, l.complement(), "violation at cell ({ix}, {iy})");
                }
            }
        }
    }
    assert!(defined > nx * nx / 2, "too few defined basin cells: {defined}");

    assert!(started.elapsed().as_secs_f64() < 300.0, "over the 5 min budget");
    report(
        10,
        started,
        &format!("hygiene: energy {drift:.1e}/period, order {order:.2}, thread-invariant, basins antisymmetric"),
    );
}
