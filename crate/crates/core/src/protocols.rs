//! Bit initialization, single-pulse bit-flip and NAND/NOR gates, pseudo-gate
//! detection, the reset protocol, and Monte Carlo success statistics.
//!
//! All protocols share one run shape: relax the uncoupled network noiselessly
//! into the target period-doubled states, open the noise gate and pulse the
//! couplings for a duration `T_q`, relax again, then classify every site from
//! the averaged subharmonic amplitude of the final windows. Suppressing the
//! noise before the pulse post-selects the intended initial configuration.
//!
//! Site convention for the four-site gate star: `I1 = 0`, `I2 = 1`, `O = 2`,
//! `R = 3`; two-site protocols use sites `0` and `1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    classify_bit, default_observable, delta_phi, readout_average, readout_average_at, Bit,
    DemodResult,
};
use crate::error::{Error, Result};
use crate::integrator::{integrate, round_to_step, IntegrationConfig, Trajectory};
use crate::models::{DlmSite, Model, PendulumSite, SystemState};
use crate::rng;
use crate::schedule::{Schedule, ScheduleSet};

/// Index of the output site in the gate star.
pub const SITE_OUT: usize = 2;
/// Indices of the input sites in the gate star.
pub const SITE_IN: [usize; 2] = [0, 1];
/// Index of the reference site in the gate star.
pub const SITE_REF: usize = 3;

/// Numerical knobs shared by all protocol runs. Durations are in units of
/// the drive period `T_d`; every pulse edge is rounded onto the step grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Numerics {
    /// Steps per drive period (`dt = T_d / dt_per_period`).
    pub dt_per_period: usize,
    /// Recorded samples per subharmonic period `2 T_d`.
    pub samples_per_subharmonic: usize,
    /// Relaxation before the pulse, in drive periods.
    pub relax_before: f64,
    /// Relaxation after the pulse, in drive periods.
    pub relax_after: f64,
    /// Subharmonic windows averaged for steady-state readout.
    pub readout_windows: usize,
    /// Extra pulse-start offset (raw time) on top of the default
    /// whole-period alignment; for studying drive-phase sensitivity.
    pub pulse_offset: f64,
    /// Relaxation used when calibrating the single-site steady state, in
    /// drive periods.
    pub calibration_relax: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            dt_per_period: 512,
            samples_per_subharmonic: 64,
            relax_before: 60.0,
            relax_after: 100.0,
            readout_windows: 8,
            pulse_offset: 0.0,
            calibration_relax: 150.0,
        }
    }
}

impl Numerics {
    pub fn validate(&self) -> Result<()> {
        if self.dt_per_period == 0 || self.samples_per_subharmonic == 0 {
            return Err(Error::InvalidConfig("numerics counts must be positive".into()));
        }
        if (2 * self.dt_per_period) % self.samples_per_subharmonic != 0 {
            return Err(Error::InvalidConfig(
                "samples_per_subharmonic must divide 2 * dt_per_period".into(),
            ));
        }
        if self.samples_per_subharmonic < 32 {
            return Err(Error::InvalidConfig(
                "need at least 32 samples per subharmonic period".into(),
            ));
        }
        if self.relax_before < 2.0 * self.readout_windows as f64 {
            return Err(Error::InvalidConfig(
                "relax_before too short for the pre-pulse readout windows".into(),
            ));
        }
        if self.relax_after < 2.0 * self.readout_windows as f64 {
            return Err(Error::InvalidConfig(
                "relax_after too short for the readout windows".into(),
            ));
        }
        if self.readout_windows == 0 {
            return Err(Error::InvalidConfig("readout_windows must be >= 1".into()));
        }
        // calibration must cover the pre-pulse readout plus a steady tail
        if self.calibration_relax < self.relax_before + 2.0 * self.readout_windows as f64 {
            return Err(Error::InvalidConfig(
                "calibration_relax must exceed relax_before by at least one readout block"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Steps per recorded sample.
    pub fn sample_stride(&self) -> usize {
        2 * self.dt_per_period / self.samples_per_subharmonic
    }
}

/// Per-parameter-set readout calibration: the demodulation frequency, the
/// single-site steady-state amplitude, the classification threshold (5% of
/// that amplitude), and the seed states assigned to each bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub omega_r: f64,
    pub r_steady: f64,
    pub r_min: f64,
    pub phi_zero: f64,
    pub phi_one: f64,
    seed_zero: SystemState,
    seed_one: SystemState,
}

/// Reference single-site seed states that relax into the two symmetry-broken
/// states: the pendulum starts at `(theta, theta') = (+-0.5, 0)`; the KPO
/// field at `0.1` or `0.1i`; the DLM pair at `{0.1, 0.1}` or `{0.1i, 0.1i}`.
fn reference_seeds(model: &Model) -> (SystemState, SystemState) {
    match model {
        Model::Dpo(_) => (
            SystemState::Dpo(vec![PendulumSite { theta: 0.5, theta_dot: 0.0 }]),
            SystemState::Dpo(vec![PendulumSite { theta: -0.5, theta_dot: 0.0 }]),
        ),
        Model::Kpo(_) => (
            SystemState::Kpo(vec![Complex64::new(0.1, 0.0)]),
            SystemState::Kpo(vec![Complex64::new(0.0, 0.1)]),
        ),
        Model::Dlm(_) => (
            SystemState::Dlm(vec![DlmSite {
                a: Complex64::new(0.1, 0.0),
                b: Complex64::new(0.1, 0.0),
            }]),
            SystemState::Dlm(vec![DlmSite {
                a: Complex64::new(0.0, 0.1),
                b: Complex64::new(0.0, 0.1),
            }]),
        ),
    }
}

/// Relax one isolated site from `seed` and return the averaged steady-state
/// readout together with the readout at the protocols' pre-pulse time
/// (`relax_before`), for phase-establishment checks.
fn single_site_profile(
    single: &Model,
    numerics: &Numerics,
    seed: &SystemState,
) -> Result<(DemodResult, DemodResult)> {
    let t_d = single.drive_period();
    let dt = t_d / numerics.dt_per_period as f64;
    let tf = numerics.calibration_relax * t_d;
    let cfg = IntegrationConfig::noiseless(dt, 0.0, tf, numerics.sample_stride());
    let sched = ScheduleSet::uniform(0, 1, 0.0);
    let traj = integrate(single, &sched, seed, &cfg)?;
    let obs = default_observable(single.kind());
    let omega_r = single.subharmonic_omega();
    let late = readout_average(&traj, obs, omega_r, numerics.readout_windows)?;
    let early = readout_average_at(
        &traj,
        obs,
        omega_r,
        numerics.readout_windows,
        numerics.relax_before.round() * t_d,
    )?;
    Ok((late, early))
}

/// Relax one isolated site from `seed` and return the averaged steady-state
/// readout.
fn single_site_steady(
    single: &Model,
    numerics: &Numerics,
    seed: &SystemState,
) -> Result<DemodResult> {
    Ok(single_site_profile(single, numerics, seed)?.0)
}

/// Measure the steady states reached from the two reference seeds and assign
/// the bit-to-seed map for this parameter set. Both seeds must relax into
/// defined, complementary bits.
pub fn calibrate(model: &Model, numerics: &Numerics) -> Result<Calibration> {
    numerics.validate()?;
    model.validate()?;
    let single = model.single_site();
    let (seed_a, seed_b) = reference_seeds(&single);
    let (da, da_early) = single_site_profile(&single, numerics, &seed_a)?;
    let (db, db_early) = single_site_profile(&single, numerics, &seed_b)?;
    // the absolute phase must be established by the protocols' pre-pulse
    // readout time and locked thereafter: an unlocked or slowly converging
    // response can read as two "complementary bits" at one instant and still
    // be useless as a bit pair
    for (late, early) in [(&da, &da_early), (&db, &db_early)] {
        let drift = crate::analysis::delta_phi(late.phi[0], early.phi[0]);
        if drift > 0.15 {
            return Err(Error::InitFailure(format!(
                "subharmonic phase not established by {} drive periods \
                 (drift {drift:.3} rad against the steady state)",
                numerics.relax_before
            )));
        }
    }
    let r_steady = 0.5 * (da.r[0] + db.r[0]);
    // absolute floor against a dead oscillator: the per-site amplitude scale
    // is O(1) except for the DLM, whose fields grow like sqrt(N)
    let scale = match &single {
        Model::Dlm(p) => p.n_spins.sqrt(),
        _ => 1.0,
    };
    if r_steady < 1e-2 * scale {
        return Err(Error::InitFailure(format!(
            "no subharmonic response at these parameters (r = {r_steady:.3e})"
        )));
    }
    let r_min = 0.05 * r_steady;
    let bits_a = classify_bit(&da, r_min);
    let bits_b = classify_bit(&db, r_min);
    match (bits_a[0], bits_b[0]) {
        (Bit::Zero, Bit::One) => Ok(Calibration {
            omega_r: single.subharmonic_omega(),
            r_steady,
            r_min,
            phi_zero: da.phi[0],
            phi_one: db.phi[0],
            seed_zero: seed_a,
            seed_one: seed_b,
        }),
        (Bit::One, Bit::Zero) => Ok(Calibration {
            omega_r: single.subharmonic_omega(),
            r_steady,
            r_min,
            phi_zero: db.phi[0],
            phi_one: da.phi[0],
            seed_zero: seed_b,
            seed_one: seed_a,
        }),
        (a, b) => Err(Error::InitFailure(format!(
            "reference seeds relax to bits ({a}, {b}) with amplitudes ({:.3e}, {:.3e}); \
             no period-doubled pair at these parameters",
            da.r[0], db.r[0]
        ))),
    }
}

impl Calibration {
    /// Single-site seed state for one bit.
    pub fn seed(&self, bit: Bit) -> Result<&SystemState> {
        match bit {
            Bit::Zero => Ok(&self.seed_zero),
            Bit::One => Ok(&self.seed_one),
            Bit::Undefined => Err(Error::Protocol("cannot seed an undefined bit".into())),
        }
    }

    /// Build the full network state with each site seeded for its target bit.
    pub fn compose_state(&self, model: &Model, targets: &[Bit]) -> Result<SystemState> {
        if targets.len() != model.n_sites() {
            return Err(Error::Protocol(format!(
                "{} targets for {} sites",
                targets.len(),
                model.n_sites()
            )));
        }
        match model {
            Model::Dpo(_) => {
                let mut sites = Vec::with_capacity(targets.len());
                for &b in targets {
                    match self.seed(b)? {
                        SystemState::Dpo(v) => sites.push(v[0]),
                        _ => return Err(Error::VariantMismatch),
                    }
                }
                Ok(SystemState::Dpo(sites))
            }
            Model::Kpo(_) => {
                let mut sites = Vec::with_capacity(targets.len());
                for &b in targets {
                    match self.seed(b)? {
                        SystemState::Kpo(v) => sites.push(v[0]),
                        _ => return Err(Error::VariantMismatch),
                    }
                }
                Ok(SystemState::Kpo(sites))
            }
            Model::Dlm(_) => {
                let mut sites = Vec::with_capacity(targets.len());
                for &b in targets {
                    match self.seed(b)? {
                        SystemState::Dlm(v) => sites.push(v[0]),
                        _ => return Err(Error::VariantMismatch),
                    }
                }
                Ok(SystemState::Dlm(sites))
            }
        }
    }
}

/// Relax every site noiselessly into its target bit and verify the result.
/// Returns the relaxed state and the verifying readout.
pub fn initialize_bits(
    model: &Model,
    cal: &Calibration,
    numerics: &Numerics,
    targets: &[Bit],
    relax_periods: f64,
) -> Result<(SystemState, DemodResult)> {
    let t_d = model.drive_period();
    let dt = t_d / numerics.dt_per_period as f64;
    let stride = numerics.sample_stride();
    let tf = round_to_step(relax_periods * t_d, dt * stride as f64);
    let cfg = IntegrationConfig::noiseless(dt, 0.0, tf, stride);
    let n_edges = model.topology().edges().len();
    let sched = ScheduleSet::uniform(n_edges, model.n_sites(), 0.0);
    let init = cal.compose_state(model, targets)?;
    let traj = integrate(model, &sched, &init, &cfg)?;
    let demod = readout_average(
        &traj,
        default_observable(model.kind()),
        cal.omega_r,
        numerics.readout_windows,
    )?;
    let bits = classify_bit(&demod, cal.r_min);
    for (l, (&got, &want)) in bits.iter().zip(targets).enumerate() {
        if got != want {
            return Err(Error::InitFailure(format!(
                "site {l} relaxed to {got} instead of {want} (r = {:.3e})",
                demod.r[l]
            )));
        }
    }
    Ok((traj.final_state().clone(), demod))
}

/// Gate flavor. NAND and NOR are duals under global bit complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Nand,
    Nor,
}

impl GateKind {
    pub fn expected_output(self, i1: bool, i2: bool) -> bool {
        match self {
            GateKind::Nand => !(i1 && i2),
            GateKind::Nor => !(i1 || i2),
        }
    }

    /// Initial bit of the output (and reference) site.
    pub fn output_init(self) -> Bit {
        match self {
            GateKind::Nand => Bit::One,
            GateKind::Nor => Bit::Zero,
        }
    }
}

/// Three-way outcome of a gate execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateClass {
    /// Correct output, no input flipped.
    Full,
    /// Correct output, but at least one input site flipped.
    Pseudo,
    /// Wrong or undefined output.
    Fail,
}

/// Result of one gate execution for one input configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    pub kind: GateKind,
    pub inputs: (bool, bool),
    pub output: Bit,
    pub expected: Bit,
    pub input_flipped: [bool; 2],
    pub classification: GateClass,
    pub bits_before: Vec<Bit>,
    pub bits_after: Vec<Bit>,
    pub phases_before: Vec<f64>,
    pub phases_after: Vec<f64>,
    /// Pulse duration after rounding onto the step grid.
    pub t_q_rounded: f64,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Trajectory>,
}

/// Truth-table execution over all four input configurations under one noise
/// realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTableResult {
    pub outcomes: Vec<GateOutcome>,
    pub aggregate: GateClass,
}

impl TruthTableResult {
    pub const INPUT_ORDER: [(bool, bool); 4] =
        [(false, false), (false, true), (true, false), (true, true)];

    /// All four outputs correct (pseudo allowed).
    pub fn outputs_correct(&self) -> bool {
        self.aggregate != GateClass::Fail
    }
}

/// How a Monte Carlo success is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SuccessPolicy {
    /// Correct outputs for all configurations; input flips allowed.
    #[default]
    OutputOnly,
    /// Correct outputs and no input flips anywhere.
    StrictFull,
}

/// Result of one bit-flip run on the in-phase pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipOutcome {
    pub success: bool,
    pub bits_before: Vec<Bit>,
    pub bits_after: Vec<Bit>,
    pub t_q_rounded: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Trajectory>,
}

/// Result of one reset run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResetOutcome {
    /// Circular distance between the output and reference phases.
    pub delta_phi: f64,
    pub output_bit: Bit,
    pub t_q_rounded: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Trajectory>,
}

/// Executes protocols on one model (whose topology carries the pulse
/// heights) with a shared calibration.
#[derive(Debug, Clone)]
pub struct Runner {
    model: Model,
    numerics: Numerics,
    cal: Calibration,
    pub keep_trajectory: bool,
}

struct PulseTiming {
    dt: f64,
    stride: usize,
    t_p: f64,
    t_q: f64,
    t_end: f64,
}

impl Runner {
    /// Calibrate the single-site readout for this parameter set and build a
    /// runner.
    pub fn new(model: Model, numerics: Numerics) -> Result<Runner> {
        let cal = calibrate(&model, &numerics)?;
        Ok(Runner { model, numerics, cal, keep_trajectory: false })
    }

    /// Reuse an existing calibration (sweeps vary only coupling strengths,
    /// which do not enter the single-site calibration).
    pub fn with_calibration(model: Model, numerics: Numerics, cal: Calibration) -> Result<Runner> {
        numerics.validate()?;
        model.validate()?;
        Ok(Runner { model, numerics, cal, keep_trajectory: false })
    }

    pub fn calibration(&self) -> &Calibration {
        &self.cal
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn numerics(&self) -> &Numerics {
        &self.numerics
    }

    fn timing(&self, t_q_periods: f64) -> PulseTiming {
        let t_d = self.model.drive_period();
        let dt = t_d / self.numerics.dt_per_period as f64;
        let stride = self.numerics.sample_stride();
        let sample_h = dt * stride as f64;
        // pulse onset on a whole drive period, then onto the step grid
        let t_p = round_to_step(
            self.numerics.relax_before.round() * t_d + self.numerics.pulse_offset,
            sample_h,
        );
        let t_q = round_to_step(t_q_periods * t_d, dt).max(0.0);
        let t_end = round_to_step(t_p + t_q + self.numerics.relax_after * t_d, sample_h);
        PulseTiming { dt, stride, t_p, t_q, t_end }
    }

    fn readout(&self, traj: &Trajectory) -> Result<DemodResult> {
        readout_average(
            traj,
            default_observable(self.model.kind()),
            self.cal.omega_r,
            self.numerics.readout_windows,
        )
    }

    /// Steady-state readout of a finished trajectory (last windows).
    pub fn final_readout(&self, traj: &Trajectory) -> Result<DemodResult> {
        self.readout(traj)
    }

    /// Averaged demodulation over the windows that end at `t`.
    fn readout_at(&self, traj: &Trajectory, t: f64) -> Result<DemodResult> {
        readout_average_at(
            traj,
            default_observable(self.model.kind()),
            self.cal.omega_r,
            self.numerics.readout_windows,
            t,
        )
    }

    /// One pulse run: seed the sites, relax, pulse the given edges, relax,
    /// and read out. Returns the trajectory plus the readouts just before
    /// the pulse and at the end.
    fn pulse_run(
        &self,
        targets: &[Bit],
        pulsed_edges: &[usize],
        timing: &PulseTiming,
        drive_gates: Option<Vec<Schedule>>,
        seed: Option<u64>,
        init_override: Option<SystemState>,
    ) -> Result<(Trajectory, DemodResult, DemodResult)> {
        let n_edges = self.model.topology().edges().len();
        let n_sites = self.model.n_sites();
        let mut sched = ScheduleSet::uniform(n_edges, n_sites, 0.0);
        for &e in pulsed_edges {
            if timing.t_q > 0.0 {
                sched.set_edge_gate(e, Schedule::pulse(0.0, timing.t_p, timing.t_q, 1.0)?);
            }
        }
        if let Some(gates) = drive_gates {
            for (l, g) in gates.into_iter().enumerate() {
                sched.set_drive_gate(l, g);
            }
        }
        let cfg = IntegrationConfig {
            dt: timing.dt,
            t0: 0.0,
            tf: timing.t_end,
            sample_stride: timing.stride,
            rng_seed: seed.unwrap_or(0),
            noise_enabled_from: seed.map(|_| timing.t_p),
        };
        let init = match init_override {
            Some(s) => s,
            None => self.cal.compose_state(&self.model, targets)?,
        };
        let traj = integrate(&self.model, &sched, &init, &cfg)?;
        let before = self.readout_at(&traj, timing.t_p)?;
        let after = self.readout(&traj)?;
        Ok((traj, before, after))
    }

    /// Bit-flip on the in-phase pair: couple sites 0 and 1 for `T_q` drive
    /// periods, relax, and check that both sites flipped.
    pub fn run_flip(&self, t_q_periods: f64, seed: Option<u64>) -> Result<FlipOutcome> {
        if self.model.n_sites() != 2 {
            return Err(Error::Protocol("bit flip needs a two-site model".into()));
        }
        let timing = self.timing(t_q_periods);
        let start = Bit::Zero;
        let targets = vec![start, start];
        let (traj, before, after) = self.pulse_run(&targets, &[0], &timing, None, seed, None)?;
        let bits_before = classify_bit(&before, self.cal.r_min);
        for (l, &b) in bits_before.iter().enumerate() {
            if b != targets[l] {
                return Err(Error::InitFailure(format!(
                    "site {l} was {b} instead of {} before the pulse",
                    targets[l]
                )));
            }
        }
        let bits_after = classify_bit(&after, self.cal.r_min);
        let want = start.complement();
        let success = bits_after.iter().all(|&b| b == want);
        Ok(FlipOutcome {
            success,
            bits_before,
            bits_after,
            t_q_rounded: timing.t_q,
            trajectory: self.keep_trajectory.then_some(traj),
        })
    }

    /// One gate execution on the four-site star for a single input
    /// configuration.
    pub fn run_gate(
        &self,
        kind: GateKind,
        inputs: (bool, bool),
        t_q_periods: f64,
        seed: Option<u64>,
    ) -> Result<GateOutcome> {
        if self.model.n_sites() != 4 || self.model.topology().edges().len() != 3 {
            return Err(Error::Protocol("gates need the four-site star topology".into()));
        }
        let timing = self.timing(t_q_periods);
        let out_init = kind.output_init();
        let targets = vec![
            Bit::from_bool(inputs.0),
            Bit::from_bool(inputs.1),
            out_init,
            out_init,
        ];
        // pulse the two input-output edges; the reference edge stays off
        let (traj, before, after) =
            self.pulse_run(&targets, &[0, 1], &timing, None, seed, None)?;
        let bits_before = classify_bit(&before, self.cal.r_min);
        for (l, (&got, &want)) in bits_before.iter().zip(&targets).enumerate() {
            if got != want {
                return Err(Error::InitFailure(format!(
                    "site {l} was {got} instead of {want} before the pulse"
                )));
            }
        }
        let bits_after = classify_bit(&after, self.cal.r_min);
        let expected = Bit::from_bool(kind.expected_output(inputs.0, inputs.1));
        let output = bits_after[SITE_OUT];
        let input_flipped = [
            bits_after[SITE_IN[0]] != bits_before[SITE_IN[0]],
            bits_after[SITE_IN[1]] != bits_before[SITE_IN[1]],
        ];
        let classification = if output != expected || !output.is_defined() {
            GateClass::Fail
        } else if input_flipped.iter().any(|&f| f)
            || !bits_after[SITE_IN[0]].is_defined()
            || !bits_after[SITE_IN[1]].is_defined()
        {
            GateClass::Pseudo
        } else {
            GateClass::Full
        };
        Ok(GateOutcome {
            kind,
            inputs,
            output,
            expected,
            input_flipped,
            classification,
            bits_before,
            bits_after,
            phases_before: before.phi,
            phases_after: after.phi,
            t_q_rounded: timing.t_q,
            seed,
            trajectory: self.keep_trajectory.then_some(traj),
        })
    }

    /// All four input configurations under the same noise realization.
    pub fn run_truth_table(
        &self,
        kind: GateKind,
        t_q_periods: f64,
        seed: Option<u64>,
    ) -> Result<TruthTableResult> {
        let mut outcomes = Vec::with_capacity(4);
        for &inputs in &TruthTableResult::INPUT_ORDER {
            outcomes.push(self.run_gate(kind, inputs, t_q_periods, seed)?);
        }
        let aggregate = if outcomes.iter().any(|o| o.classification == GateClass::Fail) {
            GateClass::Fail
        } else if outcomes.iter().any(|o| o.classification == GateClass::Pseudo) {
            GateClass::Pseudo
        } else {
            GateClass::Full
        };
        Ok(TruthTableResult { outcomes, aggregate })
    }

    /// Fraction of noise realizations whose truth table succeeds under the
    /// given counting policy. Realization `k` uses the seed derived from
    /// `(base_seed, k)`, so the estimate is reproducible bit-for-bit.
    pub fn success_probability(
        &self,
        kind: GateKind,
        t_q_periods: f64,
        n_realizations: usize,
        base_seed: u64,
        policy: SuccessPolicy,
    ) -> Result<f64> {
        if n_realizations == 0 {
            return Err(Error::Protocol("need at least one realization".into()));
        }
        let mut successes = 0usize;
        for k in 0..n_realizations {
            let seed = rng::derive_seed(base_seed, rng::tags::REALIZATION, k as u64);
            let table = self.run_truth_table(kind, t_q_periods, Some(seed))?;
            let ok = match policy {
                SuccessPolicy::OutputOnly => table.outputs_correct(),
                SuccessPolicy::StrictFull => table.aggregate == GateClass::Full,
            };
            if ok {
                successes += 1;
            }
        }
        Ok(successes as f64 / n_realizations as f64)
    }

    /// Reset protocol on a two-site model (`O = 0`, `R = 1`): the output
    /// site is undriven (drive gate 0) and dead until the pulse, then the
    /// drive is reinstated while the coupling to the reference site is
    /// pulsed. Returns the final phase distance (0 = synchronized, pi =
    /// anti-synchronized) and the output's bit.
    pub fn run_reset(&self, t_q_periods: f64, seed: Option<u64>) -> Result<ResetOutcome> {
        if self.model.n_sites() != 2 || self.model.topology().edges().len() != 1 {
            return Err(Error::Protocol("reset needs a coupled two-site model".into()));
        }
        let timing = self.timing(t_q_periods);
        // output site: drive off on [0, t_p), on afterwards
        let gate_out = Schedule::new(
            1.0,
            vec![crate::schedule::Segment { t_start: 0.0, t_end: timing.t_p, value: 0.0 }],
        )?;
        let drive_gates = vec![gate_out, Schedule::constant(1.0)];
        // output starts at rest; reference seeded into a period-doubled state
        let mut init = self.cal.compose_state(&self.model, &[Bit::Zero, Bit::Zero])?;
        match &mut init {
            SystemState::Dpo(v) => v[0] = PendulumSite { theta: 0.0, theta_dot: 0.0 },
            SystemState::Kpo(v) => v[0] = Complex64::ZERO,
            SystemState::Dlm(v) => v[0] = DlmSite { a: Complex64::ZERO, b: Complex64::ZERO },
        }
        let (traj, before, after) =
            self.pulse_run(&[Bit::Zero, Bit::Zero], &[0], &timing, Some(drive_gates), seed, Some(init))?;
        // before the pulse: output dead, reference period-doubled
        if before.r[0] >= self.cal.r_min {
            return Err(Error::InitFailure(format!(
                "output site still oscillating before the reset pulse (r = {:.3e})",
                before.r[0]
            )));
        }
        let ref_bits = classify_bit(&before, self.cal.r_min);
        if !ref_bits[1].is_defined() {
            return Err(Error::InitFailure("reference site not period-doubled".into()));
        }
        let bits_after = classify_bit(&after, self.cal.r_min);
        if !bits_after[0].is_defined() {
            return Err(Error::Protocol(
                "output failed to re-enter a period-doubled state after reset".into(),
            ));
        }
        Ok(ResetOutcome {
            delta_phi: delta_phi(after.phi[0], after.phi[1]),
            output_bit: bits_after[0],
            t_q_rounded: timing.t_q,
            trajectory: self.keep_trajectory.then_some(traj),
        })
    }
}

/// One point of a modulation-frequency scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubharmonicPoint {
    pub omega_mod: f64,
    /// Steady subharmonic amplitude from the 0-bit reference seed.
    pub r: f64,
    /// Whether both reference seeds relax into complementary defined bits.
    pub initializable: bool,
}

/// Scan the pump modulation frequency of a single-site KPO. Used to pick a
/// working modulation frequency where none is prescribed: take the largest
/// response among the frequencies where both bits are initializable.
pub fn kpo_subharmonic_scan(
    base: &crate::models::KpoParams,
    numerics: &Numerics,
    omega_range: (f64, f64),
    count: usize,
) -> Result<Vec<SubharmonicPoint>> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let omega_mod = omega_range.0
            + (omega_range.1 - omega_range.0) * i as f64 / (count.max(2) - 1) as f64;
        let mut params = base.clone();
        params.omega_mod = omega_mod;
        params.topology = crate::models::Topology::isolated(1);
        let model = Model::Kpo(params);
        match calibrate(&model, numerics) {
            Ok(cal) => {
                out.push(SubharmonicPoint { omega_mod, r: cal.r_steady, initializable: true })
            }
            Err(_) => {
                let (seed, _) = reference_seeds(&model);
                let r = single_site_steady(&model, numerics, &seed).map_or(0.0, |d| d.r[0]);
                out.push(SubharmonicPoint { omega_mod, r, initializable: false });
            }
        }
    }
    Ok(out)
}

/// Best frequency of a scan: the strongest response inside the widest
/// contiguous initializable window. Preferring the widest window selects an
/// operating point robust against frequency detuning; isolated initializable
/// points near the edge of the locking region are fragile.
pub fn best_subharmonic_frequency(scan: &[SubharmonicPoint]) -> Option<f64> {
    let mut best_window: Option<(usize, usize)> = None; // (start, len)
    let mut start = None;
    for (i, p) in scan.iter().chain(std::iter::once(&SubharmonicPoint {
        omega_mod: 0.0,
        r: 0.0,
        initializable: false,
    })).enumerate()
    {
        match (p.initializable, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                let len = i - s;
                let better = match best_window {
                    None => true,
                    Some((bs, bl)) => {
                        len > bl
                            || (len == bl
                                && window_peak(scan, s, len) > window_peak(scan, bs, bl))
                    }
                };
                if better {
                    best_window = Some((s, len));
                }
                start = None;
            }
            _ => {}
        }
    }
    let (s, len) = best_window?;
    scan[s..s + len]
        .iter()
        .max_by(|a, b| a.r.total_cmp(&b.r))
        .map(|p| p.omega_mod)
}

fn window_peak(scan: &[SubharmonicPoint], start: usize, len: usize) -> f64 {
    scan[start..start + len].iter().map(|p| p.r).fold(f64::NEG_INFINITY, f64::max)
}
