//! Scenario configuration: a single JSON document describes the
//! oscillator, its environment, and what to run, so that every result
//! can be reproduced from one artifact.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use defosc::{
    BathModel, CoefficientTable, Deformation, DensityMatrix, IntegratorConfig, OscillatorModel,
    PopulationDist, DEFAULT_ATOL, DEFAULT_RTOL,
};

use crate::{CliError, CliResult};

/// Top-level configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub oscillator: OscillatorSection,
    pub bath: BathSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorSection {
    pub omega: f64,
    pub deformation: DeformationSection,
    pub n_max: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationSection {
    pub kind: DeformationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_table: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeformationKind {
    Identity,
    Q,
    Custom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub kind: BathKind,
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dpp: Option<CoefficientInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dqq: Option<CoefficientInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dpq: Option<CoefficientInput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BathKind {
    Thermal,
    Constant,
    Table,
}

/// Diffusion coefficient given either as one number or as (x, value)
/// interpolation nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientInput {
    Constant(f64),
    Table(Vec<(f64, f64)>),
}

impl CoefficientInput {
    fn as_constant(&self, key: &str) -> CliResult<f64> {
        match self {
            CoefficientInput::Constant(v) => Ok(*v),
            CoefficientInput::Table(_) => Err(CliError::Config(format!(
                "{key} must be a single number for a constant bath"
            ))),
        }
    }

    fn as_table(&self, key: &str) -> CliResult<CoefficientTable> {
        match self {
            CoefficientInput::Table(points) => {
                CoefficientTable::new(points.clone()).map_err(|e| config_err(key, &e))
            }
            CoefficientInput::Constant(_) => Err(CliError::Config(format!(
                "{key} must be a list of [x, value] pairs for a table bath"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: RunMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<InitialStateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_policy: Option<PolicyKind>,
    #[serde(default)]
    pub snapshots: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_terms: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Spectrum,
    Evolve,
    EvolvePopulations,
    Steady,
    Partition,
    Validate,
}

impl RunMode {
    pub fn label(self) -> &'static str {
        match self {
            RunMode::Spectrum => "spectrum",
            RunMode::Evolve => "evolve",
            RunMode::EvolvePopulations => "evolve-populations",
            RunMode::Steady => "steady",
            RunMode::Partition => "partition",
            RunMode::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Drop,
    Reflecting,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateSection {
    pub kind: InitialStateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialStateKind {
    Fock,
    DiagonalTable,
    MatrixFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub method: MethodKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    pub t_final: f64,
    /// Number of uniform sampling intervals over [0, t_final]
    /// (samples + 1 output rows). Defaults to 100.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Rk4Fixed,
    Rk45Adaptive,
}

fn config_err(key: &str, err: &dyn std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {err}"))
}

fn require<T>(value: Option<T>, key: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Config(format!("{key} is required")))
}

fn forbid<T>(value: &Option<T>, key: &str, why: &str) -> CliResult<()> {
    if value.is_some() {
        return Err(CliError::Config(format!("{key} is not allowed: {why}")));
    }
    Ok(())
}

/// Reads and parses a scenario file; parse errors name the offending
/// key and location.
pub fn load(path: &Path) -> CliResult<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl ScenarioConfig {
    pub fn build_model(&self) -> CliResult<OscillatorModel> {
        let osc = &self.oscillator;
        let deformation = match osc.deformation.kind {
            DeformationKind::Identity => {
                forbid(&osc.deformation.tau, "oscillator.deformation.tau", "identity has no τ")?;
                forbid(
                    &osc.deformation.phi_table,
                    "oscillator.deformation.phi_table",
                    "identity has no table",
                )?;
                Deformation::Identity
            }
            DeformationKind::Q => {
                forbid(
                    &osc.deformation.phi_table,
                    "oscillator.deformation.phi_table",
                    "the q deformation is set by tau alone",
                )?;
                Deformation::Q { tau: require(osc.deformation.tau, "oscillator.deformation.tau")? }
            }
            DeformationKind::Custom => {
                forbid(
                    &osc.deformation.tau,
                    "oscillator.deformation.tau",
                    "custom tables carry no τ",
                )?;
                Deformation::Custom {
                    phi: require(
                        osc.deformation.phi_table.clone(),
                        "oscillator.deformation.phi_table",
                    )?,
                }
            }
        };
        OscillatorModel::new(osc.omega, deformation, osc.n_max)
            .map_err(|e| config_err("oscillator", &e))
    }

    pub fn build_bath(&self, omega: f64) -> CliResult<BathModel> {
        let b = &self.bath;
        match b.kind {
            BathKind::Thermal => {
                forbid(&b.dpp, "bath.dpp", "thermal baths derive it from λ and T")?;
                forbid(&b.dqq, "bath.dqq", "thermal baths derive it from λ and T")?;
                forbid(&b.dpq, "bath.dpq", "thermal baths have none")?;
                let temperature = require(b.temperature, "bath.temperature")?;
                BathModel::thermal(b.lambda, temperature, omega).map_err(|e| config_err("bath", &e))
            }
            BathKind::Constant => {
                forbid(&b.temperature, "bath.temperature", "constant baths set coefficients directly")?;
                let dpp = require(b.dpp.as_ref(), "bath.dpp")?.as_constant("bath.dpp")?;
                let dqq = require(b.dqq.as_ref(), "bath.dqq")?.as_constant("bath.dqq")?;
                let dpq = match &b.dpq {
                    Some(input) => input.as_constant("bath.dpq")?,
                    None => 0.0,
                };
                BathModel::constant(b.lambda, omega, dpp, dqq, dpq)
                    .map_err(|e| config_err("bath", &e))
            }
            BathKind::Table => {
                forbid(&b.temperature, "bath.temperature", "table baths set coefficients directly")?;
                let dpp = require(b.dpp.as_ref(), "bath.dpp")?.as_table("bath.dpp")?;
                let dqq = require(b.dqq.as_ref(), "bath.dqq")?.as_table("bath.dqq")?;
                let dpq = match &b.dpq {
                    Some(input) => input.as_table("bath.dpq")?,
                    None => CoefficientTable::constant(0.0),
                };
                BathModel::from_tables(b.lambda, omega, dpp, dqq, dpq, "table")
                    .map_err(|e| config_err("bath", &e))
            }
        }
    }

    /// Integrator settings for the evolve modes.
    pub fn integrator_config(&self) -> CliResult<IntegratorConfig> {
        let section = require(self.run.integrator.as_ref(), "run.integrator")?;
        let samples = section.samples.unwrap_or(100);
        if samples == 0 {
            return Err(CliError::Config("run.integrator.samples must be >= 1".into()));
        }
        let cfg = match section.method {
            MethodKind::Rk4Fixed => {
                forbid(&section.rtol, "run.integrator.rtol", "rk4-fixed has no error control")?;
                forbid(&section.atol, "run.integrator.atol", "rk4-fixed has no error control")?;
                let dt = require(section.dt, "run.integrator.dt")?;
                IntegratorConfig::rk4(dt, section.t_final, samples)
            }
            MethodKind::Rk45Adaptive => {
                forbid(&section.dt, "run.integrator.dt", "rk45-adaptive chooses its own steps")?;
                let rtol = section.rtol.unwrap_or(DEFAULT_RTOL);
                let atol = section.atol.unwrap_or(DEFAULT_ATOL);
                IntegratorConfig::rk45(rtol, atol, section.t_final, samples)
            }
        }
        .with_snapshots(self.run.snapshots);
        cfg.validate().map_err(|e| config_err("run.integrator", &e))?;
        Ok(cfg)
    }

    /// Initial density matrix for mode `evolve`; `base_dir` anchors
    /// relative matrix-file paths (normally the config's directory).
    pub fn initial_density(
        &self,
        model: &OscillatorModel,
        base_dir: &Path,
    ) -> CliResult<DensityMatrix> {
        let state = require(self.run.initial_state.as_ref(), "run.initial_state")?;
        match state.kind {
            InitialStateKind::Fock => {
                forbid(&state.p, "run.initial_state.p", "fock states are set by n")?;
                forbid(&state.path, "run.initial_state.path", "fock states are set by n")?;
                let n = require(state.n, "run.initial_state.n")?;
                DensityMatrix::fock(model.dim(), n).map_err(|e| config_err("run.initial_state", &e))
            }
            InitialStateKind::DiagonalTable => {
                Ok(DensityMatrix::from_populations(&self.diagonal_table(state, model)?))
            }
            InitialStateKind::MatrixFile => {
                forbid(&state.n, "run.initial_state.n", "matrix files carry the full state")?;
                forbid(&state.p, "run.initial_state.p", "matrix files carry the full state")?;
                let path = require(state.path.clone(), "run.initial_state.path")?;
                let resolved = if path.is_absolute() { path } else { base_dir.join(path) };
                read_matrix_file(&resolved, model.dim())
            }
        }
    }

    /// Initial population vector for mode `evolve-populations`.
    pub fn initial_populations(&self, model: &OscillatorModel) -> CliResult<PopulationDist> {
        let state = require(self.run.initial_state.as_ref(), "run.initial_state")?;
        match state.kind {
            InitialStateKind::Fock => {
                forbid(&state.p, "run.initial_state.p", "fock states are set by n")?;
                forbid(&state.path, "run.initial_state.path", "fock states are set by n")?;
                let n = require(state.n, "run.initial_state.n")?;
                PopulationDist::delta(model.dim(), n)
                    .map_err(|e| config_err("run.initial_state", &e))
            }
            InitialStateKind::DiagonalTable => self.diagonal_table(state, model),
            InitialStateKind::MatrixFile => Err(CliError::Config(
                "run.initial_state: matrix-file states need mode evolve (populations are diagonal)"
                    .into(),
            )),
        }
    }

    fn diagonal_table(
        &self,
        state: &InitialStateSection,
        model: &OscillatorModel,
    ) -> CliResult<PopulationDist> {
        forbid(&state.n, "run.initial_state.n", "diagonal tables are set by p")?;
        forbid(&state.path, "run.initial_state.path", "diagonal tables are set by p")?;
        let p = require(state.p.clone(), "run.initial_state.p")?;
        if p.len() != model.dim() {
            return Err(CliError::Config(format!(
                "run.initial_state.p must have n_max+1 = {} entries, got {}",
                model.dim(),
                p.len()
            )));
        }
        PopulationDist::new(Array1::from_vec(p)).map_err(|e| config_err("run.initial_state", &e))
    }
}

/// Reads a density matrix stored as JSON rows of [re, im] pairs.
fn read_matrix_file(path: &Path, dim: usize) -> CliResult<DensityMatrix> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read matrix file {}: {e}", path.display())))?;
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Config(format!(
            "{}: matrix must be {dim}×{dim} to match n_max",
            path.display()
        )));
    }
    let mut m = Array2::zeros((dim, dim));
    for (i, row) in rows.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            m[[i, j]] = Complex64::new(re, im);
        }
    }
    DensityMatrix::new(m).map_err(|e| config_err("run.initial_state.path", &e))
}
