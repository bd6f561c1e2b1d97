//! TOML documents accepted by the CLI. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::Context;
use qmps::ansatz::{AnsatzSpec, BlockKind};
use qmps::estimator::{Component, Mode, NoiseSpec, StudyConfig, Sweep};
use qmps::model::LatticeSpec;
use qmps::trainer::{GradientMethod, TrainConfig};
use serde::Deserialize;

/// Input-validation failure; maps to exit code 2.
#[derive(Debug)]
pub struct SchemaError(pub String);

impl std::error::Error for SchemaError {}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn schema(msg: impl Into<String>) -> anyhow::Error {
    SchemaError(msg.into()).into()
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<(T, String)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc = toml::from_str(&text).map_err(|e| schema(format!("{}: {e}", path.display())))?;
    Ok((doc, text))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub lx: usize,
    pub ly: usize,
    #[serde(default)]
    pub j2: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Qmps,
    Qpeps,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSection {
    pub family: FamilyName,
    pub block: Option<BlockKind>,
    pub virtual_qubits: Option<usize>,
    pub depth: usize,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Exact,
    Sampled,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub mode: ModeName,
    pub batch: Option<usize>,
    #[serde(default)]
    pub gradient: GradientMethod,
    pub steps: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub record_fidelity: bool,
}

fn default_lr() -> f64 {
    0.1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub ansatz: AnsatzSection,
    pub training: TrainingSection,
    pub output: Option<OutputSection>,
}

pub struct LoadedRun {
    pub config: RunConfig,
    pub text: String,
}

pub fn load_run(path: &Path) -> anyhow::Result<LoadedRun> {
    let (config, text) = parse::<RunConfig>(path)?;
    Ok(LoadedRun { config, text })
}

impl RunConfig {
    pub fn lattice(&self) -> anyhow::Result<LatticeSpec> {
        LatticeSpec::new(self.lattice.lx, self.lattice.ly, self.lattice.j2).map_err(|e| schema(e.to_string()))
    }

    pub fn ansatz(&self) -> anyhow::Result<AnsatzSpec> {
        let a = &self.ansatz;
        match a.family {
            FamilyName::Qmps => Ok(AnsatzSpec::Qmps {
                block: a.block.ok_or_else(|| schema("ansatz.block is required for qmps"))?,
                virtual_qubits: a
                    .virtual_qubits
                    .ok_or_else(|| schema("ansatz.virtual_qubits is required for qmps"))?,
                depth: a.depth,
            }),
            FamilyName::Qpeps => {
                if a.block.is_some() || a.virtual_qubits.is_some() {
                    return Err(schema("qpeps takes only ansatz.depth"));
                }
                Ok(AnsatzSpec::Qpeps { depth: a.depth })
            }
        }
    }

    /// Resolves the document (plus CLI overrides) into a validated
    /// training configuration.
    pub fn train_config(&self, mode: Option<ModeName>, seed: Option<u64>) -> anyhow::Result<TrainConfig> {
        let t = &self.training;
        let mode = match mode.unwrap_or(t.mode) {
            ModeName::Exact => Mode::Exact,
            ModeName::Sampled => Mode::Sampled {
                shots_per_basis: t
                    .batch
                    .ok_or_else(|| schema("training.batch is required in sampled mode"))?,
            },
        };
        let cfg = TrainConfig {
            lattice: self.lattice()?,
            ansatz: self.ansatz()?,
            mode,
            gradient: t.gradient,
            steps: t.steps,
            seed: seed.unwrap_or(t.seed),
            lr: t.lr,
            record_fidelity: t.record_fidelity,
        };
        cfg.validate().map_err(|e| schema(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub over: String,
    pub values: Vec<usize>,
    pub v: Option<usize>,
    pub n: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    pub block: BlockKind,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub j2: f64,
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
    /// `"last_block"`, `"pooled"`, or a parameter index.
    pub component: Option<toml::Value>,
    pub sweep: SweepSection,
    pub noise: Option<NoiseSpec>,
}

fn default_depth() -> usize {
    1
}

pub fn load_study(path: &Path, seed: Option<u64>) -> anyhow::Result<(StudyConfig, String)> {
    let (f, text) = parse::<StudyFile>(path)?;
    let sweep = match f.sweep.over.as_str() {
        "n" | "N" => Sweep::N {
            values: f.sweep.values.clone(),
            v: f.sweep.v.ok_or_else(|| schema("sweep.v is required when sweeping N"))?,
        },
        "v" | "V" => Sweep::V {
            values: f.sweep.values.clone(),
            n: f.sweep.n.ok_or_else(|| schema("sweep.n is required when sweeping V"))?,
        },
        other => return Err(schema(format!("sweep.over must be \"n\" or \"v\", got {other:?}"))),
    };
    let component = match &f.component {
        None => Component::LastBlock,
        Some(toml::Value::String(s)) if s == "last_block" => Component::LastBlock,
        Some(toml::Value::String(s)) if s == "pooled" => Component::Pooled,
        Some(toml::Value::Integer(i)) if *i >= 0 => Component::Slot { index: *i as usize },
        Some(other) => return Err(schema(format!("invalid component {other}"))),
    };
    if f.draws < 2 {
        return Err(schema("draws must be at least 2 (variance undefined otherwise)"));
    }
    Ok((
        StudyConfig {
            block: f.block,
            depth: f.depth,
            j2: f.j2,
            sweep,
            draws: f.draws,
            component,
            noise: f.noise,
            seed: seed.unwrap_or(f.seed),
        },
        text,
    ))
}
