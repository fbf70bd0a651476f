//! Declarative run configuration.
//!
//! One structured file (TOML, or the JSON echo written next to results) with
//! sections `model`, `protocol`, `sweep`, `basins`, `integration`, `output`.
//! Physical parameters have no silent defaults and unknown keys are
//! rejected; only numerical knobs (step size, relaxation spans, seeds)
//! default. Durations in the protocol and sweep sections are in units of the
//! drive period `T_d`.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::basins::{AxisSpec, BasinScanConfig, Frame};
use crate::error::{Error, Result};
use crate::models::{
    lambda_critical_with, DlmParams, DpoParams, KpoParams, LambdaCriticalForm, Model, ModelKind,
    Topology,
};
use crate::protocols::{GateKind, Numerics, SuccessPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    /// Required by every command except `basins`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basins: Option<BasinsSection>,
    #[serde(default)]
    pub integration: IntegrationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dpo: Option<DpoModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kpo: Option<KpoModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dlm: Option<DlmModelConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpoModelConfig {
    pub omega: f64,
    pub drive_amp: f64,
    pub omega_d: f64,
    pub gamma: f64,
    pub t_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpoModelConfig {
    pub delta: f64,
    pub chi: f64,
    pub p0: f64,
    pub a0: f64,
    pub omega_mod: f64,
    pub kappa: f64,
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DlmModelConfig {
    pub omega: f64,
    pub omega0: f64,
    /// Absolute base coupling; give exactly one of this and
    /// `lambda0_over_lambda_c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    /// Base coupling relative to the critical coupling (published form).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0_over_lambda_c: Option<f64>,
    pub a1: f64,
    pub omega_d: f64,
    pub kappa: f64,
    pub n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Flip,
    Nand,
    Nor,
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub kind: ProtocolKind,
    /// Pulse height: edge coupling `j` (DPO, units of Omega^2) or hopping
    /// `J` (KPO/DLM).
    pub coupling: f64,
    /// Pulse duration in drive periods; required for single runs, ignored by
    /// scans that sweep it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_q: Option<f64>,
    /// Input bits for `simulate` on a gate protocol.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<[u8; 2]>,
    /// Count pseudo gates (correct outputs, flipped inputs) as successes.
    #[serde(default = "default_true")]
    pub count_pseudo: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisRange {
    pub fn to_axis(&self, name: &str) -> AxisSpec {
        AxisSpec::new(name, self.min, self.max, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_realizations")]
    pub n_realizations: usize,
    /// Coupling axis; not needed by `reset-scan`, which pulses at
    /// `protocol.coupling` and sweeps only `Tq`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<AxisRange>,
    #[serde(rename = "Tq", alias = "tq")]
    pub t_q: AxisRange,
}

fn default_realizations() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinsSection {
    pub frame: Frame,
    pub x: AxisRange,
    pub y: AxisRange,
    #[serde(default = "default_tf")]
    pub tf: f64,
    /// Lab seed grid resolution per axis (rotating frame only).
    #[serde(default = "default_seed_count")]
    pub seed_count: usize,
}

fn default_tf() -> f64 {
    150.0
}

fn default_seed_count() -> usize {
    201
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationSection {
    pub dt_per_period: usize,
    pub samples_per_subharmonic: usize,
    pub relax_before: f64,
    pub relax_after: f64,
    pub readout_windows: usize,
    pub pulse_offset: f64,
    pub calibration_relax: f64,
    pub rng_seed: u64,
    /// Enable the stochastic terms (gated on at the pulse); `false` runs the
    /// mean-field limit of the same path.
    pub noise: bool,
}

impl Default for IntegrationSection {
    fn default() -> Self {
        let n = Numerics::default();
        IntegrationSection {
            dt_per_period: n.dt_per_period,
            samples_per_subharmonic: n.samples_per_subharmonic,
            relax_before: n.relax_before,
            relax_after: n.relax_after,
            readout_windows: n.readout_windows,
            pulse_offset: n.pulse_offset,
            calibration_relax: n.calibration_relax,
            rng_seed: 20260809,
            noise: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub prefix: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into(), prefix: "run".into() }
    }
}

impl RunConfig {
    /// Parse a TOML document, apply `--set key=value` overrides, and
    /// validate strictly.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<RunConfig> {
        let mut doc: toml::Value =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        for (path, value) in overrides {
            apply_override(&mut doc, path, value)?;
        }
        let cfg: RunConfig =
            doc.try_into().map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load from a `.toml` file or a `.json` metadata echo.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigParse(format!("cannot read {}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            if !overrides.is_empty() {
                return Err(Error::ConfigParse(
                    "--set overrides are only supported for TOML configs".into(),
                ));
            }
            let cfg: RunConfig =
                serde_json::from_str(&text).map_err(|e| Error::ConfigParse(e.to_string()))?;
            cfg.validate()?;
            Ok(cfg)
        } else {
            Self::from_toml_str(&text, overrides)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let provided = [
            (self.model.dpo.is_some(), ModelKind::Dpo),
            (self.model.kpo.is_some(), ModelKind::Kpo),
            (self.model.dlm.is_some(), ModelKind::Dlm),
        ];
        for (present, kind) in provided {
            if present && kind != self.model.kind {
                return Err(Error::InvalidConfig(format!(
                    "model.kind is {} but a {kind} parameter table is present",
                    self.model.kind
                )));
            }
        }
        match self.model.kind {
            ModelKind::Dpo if self.model.dpo.is_none() => {
                return Err(Error::InvalidConfig("missing [model.dpo] table".into()))
            }
            ModelKind::Kpo if self.model.kpo.is_none() => {
                return Err(Error::InvalidConfig("missing [model.kpo] table".into()))
            }
            ModelKind::Dlm if self.model.dlm.is_none() => {
                return Err(Error::InvalidConfig("missing [model.dlm] table".into()))
            }
            _ => {}
        }
        if let Some(dlm) = &self.model.dlm {
            match (dlm.lambda0, dlm.lambda0_over_lambda_c) {
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidConfig(
                        "give either lambda0 or lambda0_over_lambda_c, not both".into(),
                    ))
                }
                (None, None) => {
                    return Err(Error::InvalidConfig(
                        "missing lambda0 (or lambda0_over_lambda_c)".into(),
                    ))
                }
                _ => {}
            }
        }
        if let Some(sweep) = &self.sweep {
            if let Some(coupling) = &sweep.coupling {
                coupling.to_axis("coupling").validate()?;
            }
            sweep.t_q.to_axis("Tq").validate()?;
            if sweep.n_realizations == 0 {
                return Err(Error::InvalidConfig("n_realizations must be >= 1".into()));
            }
        }
        self.numerics().validate()?;
        // the model must be constructible with whatever topology applies
        if self.protocol.is_some() {
            self.build_model()?.validate()
        } else {
            self.build_model_with_topology(Topology::isolated(1))?.validate()
        }
    }

    /// The protocol section, required by every command except `basins`.
    pub fn protocol(&self) -> Result<&ProtocolSection> {
        self.protocol
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("missing [protocol] section".into()))
    }

    /// Numerical knobs as used by the protocol runners.
    pub fn numerics(&self) -> Numerics {
        Numerics {
            dt_per_period: self.integration.dt_per_period,
            samples_per_subharmonic: self.integration.samples_per_subharmonic,
            relax_before: self.integration.relax_before,
            relax_after: self.integration.relax_after,
            readout_windows: self.integration.readout_windows,
            pulse_offset: self.integration.pulse_offset,
            calibration_relax: self.integration.calibration_relax,
        }
    }

    pub fn success_policy(&self) -> SuccessPolicy {
        if self.protocol.as_ref().is_none_or(|p| p.count_pseudo) {
            SuccessPolicy::OutputOnly
        } else {
            SuccessPolicy::StrictFull
        }
    }

    pub fn gate_kind(&self) -> Result<GateKind> {
        match self.protocol()?.kind {
            ProtocolKind::Nand => Ok(GateKind::Nand),
            ProtocolKind::Nor => Ok(GateKind::Nor),
            other => Err(Error::InvalidConfig(format!(
                "protocol kind {other:?} is not a gate"
            ))),
        }
    }

    /// Topology implied by the protocol kind, with the given pulse height.
    fn topology(&self, coupling: f64) -> Result<Topology> {
        Ok(match self.protocol()?.kind {
            ProtocolKind::Flip | ProtocolKind::Reset => Topology::pair(coupling),
            ProtocolKind::Nand | ProtocolKind::Nor => Topology::gate_star(coupling, 0.0),
        })
    }

    /// Model with the protocol topology at the configured pulse height.
    pub fn build_model(&self) -> Result<Model> {
        self.build_model_with_coupling(self.protocol()?.coupling)
    }

    /// Model with the protocol topology at an overridden pulse height (used
    /// by sweeps).
    pub fn build_model_with_coupling(&self, coupling: f64) -> Result<Model> {
        let topology = self.topology(coupling)?;
        self.build_model_with_topology(topology)
    }

    /// Model from the configured physical constants on an explicit topology.
    pub fn build_model_with_topology(&self, topology: Topology) -> Result<Model> {
        match self.model.kind {
            ModelKind::Dpo => {
                let p = self.model.dpo.as_ref().unwrap();
                Ok(Model::Dpo(DpoParams {
                    omega: p.omega,
                    drive_amp: p.drive_amp,
                    omega_d: p.omega_d,
                    gamma: p.gamma,
                    t_tilde: p.t_tilde,
                    topology,
                }))
            }
            ModelKind::Kpo => {
                let p = self.model.kpo.as_ref().unwrap();
                Ok(Model::Kpo(KpoParams {
                    delta: p.delta,
                    chi: p.chi,
                    p0: p.p0,
                    a0: p.a0,
                    omega_mod: p.omega_mod,
                    kappa: p.kappa,
                    n_scale: p.n,
                    topology,
                }))
            }
            ModelKind::Dlm => {
                let p = self.model.dlm.as_ref().unwrap();
                let lambda0 = match (p.lambda0, p.lambda0_over_lambda_c) {
                    (Some(l), None) => l,
                    (None, Some(rel)) => {
                        rel * lambda_critical_with(
                            p.omega,
                            p.omega0,
                            p.kappa,
                            LambdaCriticalForm::default(),
                        )?
                    }
                    _ => unreachable!("checked in validate"),
                };
                Ok(Model::Dlm(DlmParams {
                    omega: p.omega,
                    omega0: p.omega0,
                    lambda0,
                    a1: p.a1,
                    omega_d: p.omega_d,
                    kappa: p.kappa,
                    n_spins: p.n,
                    topology,
                }))
            }
        }
    }

    /// Basin scan knobs from the `[basins]` section.
    pub fn basin_scan(&self) -> Result<(Frame, AxisSpec, AxisSpec, BasinScanConfig)> {
        let Some(b) = &self.basins else {
            return Err(Error::InvalidConfig("missing [basins] section".into()));
        };
        let (xn, yn) = match b.frame {
            Frame::Lab => ("theta", "theta_dot"),
            Frame::Rotating => ("X", "Y"),
        };
        let mut scan = BasinScanConfig {
            t_f_periods: b.tf,
            dt_per_period: self.integration.dt_per_period,
            samples_per_subharmonic: self.integration.samples_per_subharmonic,
            r_min: None,
            ..BasinScanConfig::default()
        };
        scan.seed_x.count = b.seed_count;
        scan.seed_y.count = b.seed_count;
        Ok((b.frame, b.x.to_axis(xn), b.y.to_axis(yn), scan))
    }
}

/// Apply one `--set path.to.key=value` override onto a parsed TOML document.
fn apply_override(doc: &mut toml::Value, path: &str, raw: &str) -> Result<()> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(Error::ConfigParse(format!("bad override path '{path}'")));
    }
    let mut node = doc;
    for seg in &segments[..segments.len() - 1] {
        node = node
            .as_table_mut()
            .ok_or_else(|| Error::ConfigParse(format!("'{seg}' in '{path}' is not a table")))?
            .entry(seg.to_string())
            .or_insert(toml::Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| Error::ConfigParse(format!("parent of '{path}' is not a table")))?;
    let value = parse_override_value(raw);
    table.insert(segments.last().unwrap().to_string(), value);
    Ok(())
}

/// Type an override value: bool, integer, float, then string.
fn parse_override_value(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.to_string())
}
