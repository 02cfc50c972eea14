//! Run configuration: a TOML file overlaid by command-line flags, lab-unit
//! conversion, and coherent-label specs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sradcat_core::norms::Engine;
use sradcat_core::spin::{CoherentLabel, SpinQuantum};

/// A coherent label given either by a real γ or by (θ, φ) in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelSpec {
    Gamma { gamma: f64 },
    Degrees { theta_deg: f64, phi_deg: f64 },
}

impl LabelSpec {
    pub fn to_label(self) -> Result<CoherentLabel> {
        Ok(match self {
            LabelSpec::Gamma { gamma } => CoherentLabel::from_real_gamma(gamma)?,
            LabelSpec::Degrees { theta_deg, phi_deg } => {
                CoherentLabel::from_angles(theta_deg.to_radians(), phi_deg.to_radians())?
            }
        })
    }
}

impl std::str::FromStr for LabelSpec {
    type Err = anyhow::Error;

    /// `0.5` is a real γ; `30,90` is θ, φ in degrees.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(',') {
            Some((t, p)) => Ok(LabelSpec::Degrees {
                theta_deg: t.trim().parse().with_context(|| format!("bad theta in {s:?}"))?,
                phi_deg: p.trim().parse().with_context(|| format!("bad phi in {s:?}"))?,
            }),
            None => Ok(LabelSpec::Gamma {
                gamma: s.trim().parse().with_context(|| format!("bad gamma {s:?}"))?,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EngineKind {
    Oracle,
    Exact,
    ShortTime,
}

impl EngineKind {
    pub fn engine(self, tol: f64) -> Engine {
        match self {
            EngineKind::Oracle => Engine::Oracle { tol },
            EngineKind::Exact => Engine::Exact,
            EngineKind::ShortTime => Engine::ShortTime,
        }
    }
}

/// Cavity parameters in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabUnits {
    pub g: f64,
    pub kappa: f64,
    pub delta: f64,
}

impl LabUnits {
    pub fn new(g: f64, kappa: f64, delta: f64) -> Result<Self> {
        for (name, v) in [("g", g), ("kappa", kappa), ("delta", delta)] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name} = {v} must be positive and finite");
            }
        }
        Ok(Self { g, kappa, delta })
    }

    /// g√N/κ with N = 2j atoms.
    pub fn coupling_ratio(&self, spin: SpinQuantum) -> f64 {
        self.g * f64::from(spin.twice_j()).sqrt() / self.kappa
    }

    /// The damping picture needs g√N/κ ≪ 1; flagged below 0.1.
    pub fn weak_coupling(&self, spin: SpinQuantum) -> bool {
        self.coupling_ratio(spin) < 0.1
    }
}

/// τ = 2j g² t / κ.
pub fn lab_time_to_tau(t_seconds: f64, units: &LabUnits, spin: SpinQuantum) -> f64 {
    f64::from(spin.twice_j()) * units.g * units.g * t_seconds / units.kappa
}

/// Settings for a single decoherence curve; every field may come from the
/// config file, and flags override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub twice_j: Option<u32>,
    pub label1: Option<LabelSpec>,
    pub label2: Option<LabelSpec>,
    pub t_max: Option<f64>,
    /// Alternative to `t_max`, converted with `lab`.
    pub t_max_seconds: Option<f64>,
    pub lab: Option<LabUnits>,
    pub samples: Option<usize>,
    pub engine: Option<EngineKind>,
    pub tol: Option<f64>,
    pub output_path: Option<PathBuf>,
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `flags` win over `self`.
    pub fn overlay(self, flags: RunConfigFile) -> RunConfigFile {
        RunConfigFile {
            twice_j: flags.twice_j.or(self.twice_j),
            label1: flags.label1.or(self.label1),
            label2: flags.label2.or(self.label2),
            t_max: flags.t_max.or(self.t_max),
            t_max_seconds: flags.t_max_seconds.or(self.t_max_seconds),
            lab: flags.lab.or(self.lab),
            samples: flags.samples.or(self.samples),
            engine: flags.engine.or(self.engine),
            tol: flags.tol.or(self.tol),
            output_path: flags.output_path.or(self.output_path),
        }
    }
}

/// Validated curve settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub twice_j: u32,
    pub label1: LabelSpec,
    pub label2: LabelSpec,
    pub t_max: f64,
    pub samples: usize,
    pub engine: EngineKind,
    pub tol: f64,
    pub output_path: Option<PathBuf>,
    pub lab: Option<LabUnits>,
    /// g√N/κ < 0.1, present only with lab units.
    pub weak_coupling: Option<bool>,
}

impl RunConfig {
    pub fn resolve(f: RunConfigFile) -> Result<Self> {
        let twice_j = f.twice_j.context("twice_j is required")?;
        let spin = SpinQuantum::new(twice_j)?;
        let label1 = f.label1.context("label1 is required")?;
        let label2 = f.label2.context("label2 is required")?;
        label1.to_label()?;
        label2.to_label()?;
        let lab = f.lab.map(|u| LabUnits::new(u.g, u.kappa, u.delta)).transpose()?;
        let t_max = match (f.t_max, f.t_max_seconds) {
            (Some(_), Some(_)) => bail!("give either t_max or t_max_seconds, not both"),
            (Some(t), None) => t,
            (None, Some(s)) => {
                let units = lab
                    .as_ref()
                    .context("t_max_seconds needs lab units (g, kappa, delta)")?;
                lab_time_to_tau(s, units, spin)
            }
            (None, None) => bail!("t_max is required"),
        };
        if !(t_max > 0.0 && t_max.is_finite()) {
            bail!("t_max = {t_max} must be positive");
        }
        let samples = f.samples.unwrap_or(21);
        if samples < 2 {
            bail!("samples = {samples} must be at least 2");
        }
        let tol = f.tol.unwrap_or(1e-12);
        if !(tol > 0.0 && tol < 1.0) {
            bail!("tol = {tol} must lie in (0, 1)");
        }
        Ok(Self {
            twice_j,
            label1,
            label2,
            t_max,
            samples,
            engine: f.engine.unwrap_or(EngineKind::Exact),
            tol,
            output_path: f.output_path,
            weak_coupling: lab.map(|u| u.weak_coupling(spin)),
            lab,
        })
    }

    pub fn spin(&self) -> SpinQuantum {
        SpinQuantum::new(self.twice_j).expect("validated")
    }
}
