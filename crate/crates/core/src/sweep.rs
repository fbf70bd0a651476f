//! Parameter sweeps and persistence.
//!
//! Grids are evaluated cell by cell with seeds derived from
//! `(base_seed, cell index)`, so results are independent of thread count and
//! visitation order. Per-cell failures are recorded and the sweep continues.
//! A sweep can resume from the journal of a previous partial run: completed
//! cells are loaded, only missing ones are computed, and the exported data
//! file is identical to that of an uninterrupted run.
//!
//! Exports: CSV with one header row `(axis1, axis2, value)` in row-major
//! order (first axis outermost), floats printed with 9 significant digits,
//! plus a JSON metadata sidecar carrying the full config echo, seeds, code
//! version and wall time, with stable key order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use crate::analysis::{Bit, DemodResult};
use crate::basins::{AxisSpec, BasinMap};
use crate::config::{ProtocolKind, RunConfig};
use crate::error::{Error, Result};
use crate::integrator::Trajectory;
use crate::models::Model;
use crate::protocols::{calibrate, Calibration, GateClass, Runner, SuccessPolicy};
use crate::rng;

/// Outcome of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellValue {
    /// Monte Carlo success probability.
    Probability(f64),
    /// Noiseless three-way gate classification.
    Class(GateClass),
    /// Noiseless boolean success (bit-flip scans).
    Success(bool),
    /// The cell failed; the message records why.
    Failed(String),
}

impl CellValue {
    /// Numeric code for CSV export: probabilities as-is; classifications
    /// Full = 2, Pseudo = 1, Fail = 0; booleans 1/0; failed cells -1.
    pub fn code(&self) -> f64 {
        match self {
            CellValue::Probability(p) => *p,
            CellValue::Class(GateClass::Full) => 2.0,
            CellValue::Class(GateClass::Pseudo) => 1.0,
            CellValue::Class(GateClass::Fail) => 0.0,
            CellValue::Success(true) => 1.0,
            CellValue::Success(false) => 0.0,
            CellValue::Failed(_) => -1.0,
        }
    }
}

/// 2-D sweep result over (coupling, pulse duration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub coupling: AxisSpec,
    pub t_q: AxisSpec,
    /// Row-major, coupling index outermost.
    pub cells: Vec<CellValue>,
    pub n_realizations: usize,
    pub base_seed: u64,
    pub noiseless: bool,
    pub policy: SuccessPolicy,
    pub wall_time_s: f64,
}

impl SweepGrid {
    pub fn cell(&self, i_coupling: usize, i_tq: usize) -> &CellValue {
        &self.cells[i_coupling * self.t_q.count + i_tq]
    }

    /// Per-cell success probability under `policy`: probabilities as-is,
    /// noiseless classifications mapped to {0, 1}, failed cells NaN.
    pub fn success_map(&self, policy: SuccessPolicy) -> Vec<f64> {
        self.cells
            .iter()
            .map(|c| match c {
                CellValue::Probability(p) => *p,
                CellValue::Class(cls) => match policy {
                    SuccessPolicy::OutputOnly => (*cls != GateClass::Fail) as u8 as f64,
                    SuccessPolicy::StrictFull => (*cls == GateClass::Full) as u8 as f64,
                },
                CellValue::Success(b) => *b as u8 as f64,
                CellValue::Failed(_) => f64::NAN,
            })
            .collect()
    }

    /// Mean absolute difference of the success maps against another grid of
    /// the same shape; cells failed in either grid are skipped.
    pub fn l1_distance(&self, other: &SweepGrid, policy: SuccessPolicy) -> f64 {
        assert_eq!(self.cells.len(), other.cells.len(), "grid shapes differ");
        let a = self.success_map(policy);
        let b = other.success_map(policy);
        let mut sum = 0.0;
        let mut n = 0usize;
        for (x, y) in a.iter().zip(&b) {
            if x.is_finite() && y.is_finite() {
                sum += (x - y).abs();
                n += 1;
            }
        }
        assert!(n > 0, "no comparable cells");
        sum / n as f64
    }
}

/// 1-D reset scan result: phase distance per pulse duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResetTable {
    pub t_q: AxisSpec,
    /// `None` marks cells where the output never re-entered a
    /// period-doubled state.
    pub delta_phi: Vec<Option<f64>>,
    pub base_seed: u64,
    pub noiseless: bool,
    pub wall_time_s: f64,
}

/// Journal of completed cells, enabling resumable sweeps.
struct CellJournal {
    writer: Option<Mutex<BufWriter<std::fs::File>>>,
    done: HashMap<usize, CellValue>,
}

#[derive(Serialize, Deserialize)]
struct JournalLine {
    cell: usize,
    value: CellValue,
}

impl CellJournal {
    fn open(path: Option<&Path>) -> Result<CellJournal> {
        let Some(path) = path else {
            return Ok(CellJournal { writer: None, done: HashMap::new() });
        };
        let mut done = HashMap::new();
        if path.exists() {
            let file = std::fs::File::open(path)?;
            for line in std::io::BufReader::new(file).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed: JournalLine = serde_json::from_str(&line)
                    .map_err(|e| Error::ConfigParse(format!("corrupt journal: {e}")))?;
                done.insert(parsed.cell, parsed.value);
            }
        }
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(CellJournal { writer: Some(Mutex::new(BufWriter::new(file))), done })
    }

    fn record(&self, cell: usize, value: &CellValue) {
        if let Some(w) = &self.writer {
            let line = serde_json::to_string(&JournalLine { cell, value: value.clone() })
                .expect("journal line serializes");
            let mut w = w.lock().expect("journal lock");
            let _ = writeln!(w, "{line}");
            let _ = w.flush();
        }
    }
}

/// Evaluate all cells of a grid, reusing journal entries, in parallel.
fn run_cells<F>(n_cells: usize, journal: &CellJournal, compute: F) -> Vec<CellValue>
where
    F: Fn(usize) -> Result<CellValue> + Sync,
{
    (0..n_cells)
        .into_par_iter()
        .map(|idx| {
            if let Some(v) = journal.done.get(&idx) {
                return v.clone();
            }
            let value = match compute(idx) {
                Ok(v) => v,
                Err(e) => CellValue::Failed(e.to_string()),
            };
            journal.record(idx, &value);
            value
        })
        .collect()
}

fn sweep_axes(cfg: &RunConfig) -> Result<(AxisSpec, AxisSpec, usize)> {
    let Some(sweep) = &cfg.sweep else {
        return Err(Error::InvalidConfig("missing [sweep] section".into()));
    };
    let coupling = sweep
        .coupling
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("missing [sweep.coupling] axis".into()))?;
    Ok((coupling.to_axis("coupling"), sweep.t_q.to_axis("Tq"), sweep.n_realizations))
}

fn tq_axis(cfg: &RunConfig) -> Result<(AxisSpec, usize)> {
    let Some(sweep) = &cfg.sweep else {
        return Err(Error::InvalidConfig("missing [sweep] section".into()));
    };
    Ok((sweep.t_q.to_axis("Tq"), sweep.n_realizations))
}

fn shared_calibration(cfg: &RunConfig) -> Result<Calibration> {
    calibrate(&cfg.build_model()?, &cfg.numerics())
}

/// Bit-flip success map over (j, T_q) for the two-site network: booleans in
/// the noiseless limit, probabilities with noise.
pub fn sweep_flip(cfg: &RunConfig, journal_path: Option<&Path>) -> Result<SweepGrid> {
    if cfg.protocol()?.kind != ProtocolKind::Flip {
        return Err(Error::InvalidConfig("flip scan needs protocol.kind = \"flip\"".into()));
    }
    let started = Instant::now();
    let (coupling, t_q, n_realizations) = sweep_axes(cfg)?;
    let cal = shared_calibration(cfg)?;
    let numerics = cfg.numerics();
    let noiseless = !cfg.integration.noise;
    let base_seed = cfg.integration.rng_seed;
    let journal = CellJournal::open(journal_path)?;

    let cells = run_cells(coupling.count * t_q.count, &journal, |idx| {
        let (ic, it) = (idx / t_q.count, idx % t_q.count);
        let model = cfg.build_model_with_coupling(coupling.value(ic))?;
        let runner = Runner::with_calibration(model, numerics.clone(), cal.clone())?;
        let tq = t_q.value(it);
        if noiseless {
            Ok(CellValue::Success(runner.run_flip(tq, None)?.success))
        } else {
            let cell_seed = rng::derive_seed(base_seed, rng::tags::GRID_CELL, idx as u64);
            let mut ok = 0usize;
            for k in 0..n_realizations {
                let seed = rng::derive_seed(cell_seed, rng::tags::REALIZATION, k as u64);
                if runner.run_flip(tq, Some(seed))?.success {
                    ok += 1;
                }
            }
            Ok(CellValue::Probability(ok as f64 / n_realizations as f64))
        }
    });

    Ok(SweepGrid {
        coupling,
        t_q,
        cells,
        n_realizations: if noiseless { 1 } else { n_realizations },
        base_seed,
        noiseless,
        policy: cfg.success_policy(),
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Gate map over (coupling, T_q) for the four-site star: the noiseless
/// three-way classification, or the Monte Carlo success probability.
pub fn sweep_gate(cfg: &RunConfig, journal_path: Option<&Path>) -> Result<SweepGrid> {
    let kind = cfg.gate_kind()?;
    let started = Instant::now();
    let (coupling, t_q, n_realizations) = sweep_axes(cfg)?;
    let cal = shared_calibration(cfg)?;
    let numerics = cfg.numerics();
    let noiseless = !cfg.integration.noise;
    let base_seed = cfg.integration.rng_seed;
    let policy = cfg.success_policy();
    let journal = CellJournal::open(journal_path)?;

    let cells = run_cells(coupling.count * t_q.count, &journal, |idx| {
        let (ic, it) = (idx / t_q.count, idx % t_q.count);
        let model = cfg.build_model_with_coupling(coupling.value(ic))?;
        let runner = Runner::with_calibration(model, numerics.clone(), cal.clone())?;
        let tq = t_q.value(it);
        if noiseless {
            Ok(CellValue::Class(runner.run_truth_table(kind, tq, None)?.aggregate))
        } else {
            let cell_seed = rng::derive_seed(base_seed, rng::tags::GRID_CELL, idx as u64);
            let p = runner.success_probability(kind, tq, n_realizations, cell_seed, policy)?;
            Ok(CellValue::Probability(p))
        }
    });

    Ok(SweepGrid {
        coupling,
        t_q,
        cells,
        n_realizations: if noiseless { 1 } else { n_realizations },
        base_seed,
        noiseless,
        policy,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Reset scan: final phase distance between output and reference per pulse
/// duration; values cluster at 0 (synchronized) and pi (anti-synchronized).
pub fn sweep_reset(cfg: &RunConfig) -> Result<ResetTable> {
    if cfg.protocol()?.kind != ProtocolKind::Reset {
        return Err(Error::InvalidConfig("reset scan needs protocol.kind = \"reset\"".into()));
    }
    let started = Instant::now();
    let (t_q, _) = tq_axis(cfg)?;
    let cal = shared_calibration(cfg)?;
    let numerics = cfg.numerics();
    let noiseless = !cfg.integration.noise;
    let base_seed = cfg.integration.rng_seed;
    let model = cfg.build_model()?;

    let values: Vec<Option<f64>> = (0..t_q.count)
        .into_par_iter()
        .map(|it| {
            let runner =
                Runner::with_calibration(model.clone(), numerics.clone(), cal.clone()).ok()?;
            let seed = (!noiseless)
                .then(|| rng::derive_seed(base_seed, rng::tags::GRID_CELL, it as u64));
            runner.run_reset(t_q.value(it), seed).ok().map(|o| o.delta_phi)
        })
        .collect();

    Ok(ResetTable {
        t_q,
        delta_phi: values,
        base_seed,
        noiseless,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Artifacts of a single `simulate` run: the full trajectory, the final
/// readout, and the protocol outcome as JSON.
pub struct SimulateArtifacts {
    pub trajectory: Trajectory,
    pub readout: DemodResult,
    pub outcome: serde_json::Value,
}

/// Run the configured protocol once and keep the trajectory.
pub fn simulate_once(cfg: &RunConfig) -> Result<SimulateArtifacts> {
    let protocol = cfg.protocol()?.clone();
    let model = cfg.build_model()?;
    let mut runner = Runner::new(model, cfg.numerics())?;
    runner.keep_trajectory = true;
    let t_q = protocol
        .t_q
        .ok_or_else(|| Error::InvalidConfig("simulate needs protocol.t_q".into()))?;
    let seed = cfg.integration.noise.then_some(cfg.integration.rng_seed);
    let (trajectory, readout, outcome) = match protocol.kind {
        ProtocolKind::Flip => {
            let mut out = runner.run_flip(t_q, seed)?;
            let traj = out.trajectory.take().expect("keep_trajectory set");
            let readout = runner.final_readout(&traj)?;
            (traj, readout, serde_json::to_value(&out).unwrap())
        }
        ProtocolKind::Nand | ProtocolKind::Nor => {
            let kind = cfg.gate_kind()?;
            let inputs = protocol.inputs.ok_or_else(|| {
                Error::InvalidConfig("simulate on a gate needs protocol.inputs".into())
            })?;
            let mut out = runner.run_gate(kind, (inputs[0] != 0, inputs[1] != 0), t_q, seed)?;
            let traj = out.trajectory.take().expect("keep_trajectory set");
            let readout = runner.final_readout(&traj)?;
            (traj, readout, serde_json::to_value(&out).unwrap())
        }
        ProtocolKind::Reset => {
            let mut out = runner.run_reset(t_q, seed)?;
            let traj = out.trajectory.take().expect("keep_trajectory set");
            let readout = runner.final_readout(&traj)?;
            (traj, readout, serde_json::to_value(&out).unwrap())
        }
    };
    Ok(SimulateArtifacts { trajectory, readout, outcome })
}

/// Nine significant digits, stable across runs.
pub fn fmt_sig9(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.8e}")
    }
}

/// Metadata sidecar written next to every exported data file.
#[derive(Debug, Serialize, Deserialize)]
pub struct Metadata {
    pub code_version: String,
    pub wall_time_s: f64,
    pub base_seed: u64,
    pub n_realizations: usize,
    pub noiseless: bool,
    pub config: RunConfig,
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn metadata_for(cfg: &RunConfig, grid: Option<&SweepGrid>, wall: f64) -> Metadata {
    Metadata {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: wall,
        base_seed: cfg.integration.rng_seed,
        n_realizations: grid.map_or(1, |g| g.n_realizations),
        noiseless: !cfg.integration.noise,
        config: cfg.clone(),
    }
}

/// Write `<prefix>.csv` and `<prefix>.meta.json` for a sweep grid; returns
/// the CSV path.
pub fn export_grid(grid: &SweepGrid, cfg: &RunConfig, dir: &Path, prefix: &str) -> Result<PathBuf> {
    let mut csv = String::new();
    csv.push_str(&format!("{},{},value\n", grid.coupling.name, grid.t_q.name));
    for ic in 0..grid.coupling.count {
        for it in 0..grid.t_q.count {
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt_sig9(grid.coupling.value(ic)),
                fmt_sig9(grid.t_q.value(it)),
                fmt_sig9(grid.cell(ic, it).code())
            ));
        }
    }
    let csv_path = dir.join(format!("{prefix}.csv"));
    write_atomic(&csv_path, &csv)?;
    let meta = metadata_for(cfg, Some(grid), grid.wall_time_s);
    let meta_json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    write_atomic(&dir.join(format!("{prefix}.meta.json")), &meta_json)?;
    Ok(csv_path)
}

/// Write a reset table as CSV (+ metadata).
pub fn export_reset(
    table: &ResetTable,
    cfg: &RunConfig,
    dir: &Path,
    prefix: &str,
) -> Result<PathBuf> {
    let mut csv = String::new();
    csv.push_str(&format!("{},delta_phi\n", table.t_q.name));
    for (it, v) in table.delta_phi.iter().enumerate() {
        csv.push_str(&format!(
            "{},{}\n",
            fmt_sig9(table.t_q.value(it)),
            fmt_sig9(v.unwrap_or(f64::NAN))
        ));
    }
    let csv_path = dir.join(format!("{prefix}.csv"));
    write_atomic(&csv_path, &csv)?;
    let meta = metadata_for(cfg, None, table.wall_time_s);
    let meta_json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    write_atomic(&dir.join(format!("{prefix}.meta.json")), &meta_json)?;
    Ok(csv_path)
}

/// Write a basin map as CSV (x, y, label code) + metadata.
pub fn export_basins(
    map: &BasinMap,
    cfg: &RunConfig,
    dir: &Path,
    prefix: &str,
) -> Result<PathBuf> {
    let mut csv = String::new();
    csv.push_str(&format!("{},{},label\n", map.x.name, map.y.name));
    for ix in 0..map.x.count {
        for iy in 0..map.y.count {
            csv.push_str(&format!(
                "{},{},{}\n",
                fmt_sig9(map.x.value(ix)),
                fmt_sig9(map.y.value(iy)),
                map.label(ix, iy).code()
            ));
        }
    }
    let csv_path = dir.join(format!("{prefix}.csv"));
    write_atomic(&csv_path, &csv)?;
    let meta = metadata_for(cfg, None, 0.0);
    let meta_json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    write_atomic(&dir.join(format!("{prefix}.meta.json")), &meta_json)?;
    Ok(csv_path)
}

/// Write a trajectory as CSV: time column plus the per-site demodulation
/// observable.
pub fn export_trajectory(
    traj: &Trajectory,
    model: &Model,
    dir: &Path,
    prefix: &str,
) -> Result<PathBuf> {
    let obs = crate::analysis::default_observable(model.kind());
    let n_sites = model.n_sites();
    let mut csv = String::from("t");
    for l in 0..n_sites {
        csv.push_str(&format!(",site{l}"));
    }
    csv.push('\n');
    for (i, &t) in traj.times().iter().enumerate() {
        csv.push_str(&fmt_sig9(t));
        for l in 0..n_sites {
            csv.push_str(&format!(",{}", fmt_sig9(obs(&traj.states()[i], l))));
        }
        csv.push('\n');
    }
    let csv_path = dir.join(format!("{prefix}.trajectory.csv"));
    write_atomic(&csv_path, &csv)?;
    Ok(csv_path)
}

/// Classify the sites of a finished trajectory with the runner's calibrated
/// threshold; convenience for `simulate`.
#[derive(Debug, Serialize)]
pub struct ReadoutSummary {
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub bits: Vec<Bit>,
    pub r_min: f64,
}

impl ReadoutSummary {
    pub fn new(readout: &DemodResult, r_min: f64) -> ReadoutSummary {
        ReadoutSummary {
            r: readout.r.clone(),
            phi: readout.phi.clone(),
            bits: crate::analysis::classify_bit(readout, r_min),
            r_min,
        }
    }
}
