//! Declarative run configuration: one TOML file drives both `run` and
//! `scan`. Defaults mirror the library configs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qdmet_core::dmet::{DmetMode, FragmentPartition};
use qdmet_core::{DmetConfig, ScfConfig, VqeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rhf,
    Fci,
    Vqe,
    DmetFci,
    DmetEsvqe,
}

impl Method {
    pub fn is_dmet(self) -> bool {
        matches!(self, Method::DmetFci | Method::DmetEsvqe)
    }

    pub fn label(self) -> &'static str {
        match self {
            Method::Rhf => "rhf",
            Method::Fci => "fci",
            Method::Vqe => "vqe",
            Method::DmetFci => "dmet-fci",
            Method::DmetEsvqe => "dmet-esvqe",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rhf" => Ok(Method::Rhf),
            "fci" => Ok(Method::Fci),
            "vqe" => Ok(Method::Vqe),
            "dmet-fci" => Ok(Method::DmetFci),
            "dmet-esvqe" => Ok(Method::DmetEsvqe),
            other => bail!("unknown method {other:?} (expected rhf|fci|vqe|dmet-fci|dmet-esvqe)"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HubbardSpec {
    pub n_sites: usize,
    pub t: f64,
    pub u: f64,
    #[serde(default)]
    pub periodic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_electrons: Option<usize>,
}

/// One input system: an FCIDUMP path or a built-in Hubbard lattice.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fcidump: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hubbard: Option<HubbardSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl InputSpec {
    pub fn validate(&self, context: &str) -> Result<()> {
        match (&self.fcidump, &self.hubbard) {
            (Some(_), Some(_)) => {
                bail!("{context}: exactly one input source expected, got both fcidump and hubbard")
            }
            (None, None) => bail!("{context}: an input needs either fcidump or hubbard"),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        if let Some(label) = &self.label {
            return label.clone();
        }
        match (&self.fcidump, &self.hubbard) {
            (Some(path), _) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            (_, Some(h)) => format!("hubbard{}", h.n_sites),
            _ => "input".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    pub fragments: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inactive: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmetSection {
    pub tau: f64,
    pub eta: f64,
    pub mu_max_iter: usize,
    pub mu_step: f64,
    pub gamma: f64,
    pub mode: String,
}

impl Default for DmetSection {
    fn default() -> Self {
        let d = DmetConfig::default();
        DmetSection {
            tau: d.tau,
            eta: d.eta,
            mu_max_iter: d.mu_max_iter,
            mu_step: d.mu_step,
            gamma: d.gamma,
            mode: "single_shot".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqeSection {
    pub epsilon: f64,
    pub optimizer_tol: f64,
    pub max_evals: usize,
    pub bracket_half_width: f64,
}

impl Default for VqeSection {
    fn default() -> Self {
        let v = VqeConfig::default();
        VqeSection {
            epsilon: v.epsilon,
            optimizer_tol: v.optimizer_tol,
            max_evals: v.max_evals,
            bracket_half_width: v.bracket_half_width,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScfSection {
    pub density_tol: f64,
    pub max_iter: usize,
    pub diis: bool,
}

impl Default for ScfSection {
    fn default() -> Self {
        let s = ScfConfig::default();
        ScfSection {
            density_tol: s.density_tol,
            max_iter: s.max_iter,
            diis: s.use_diis,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

/// Whole configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<InputSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionSection>,
    #[serde(default)]
    pub dmet: DmetSection,
    #[serde(default)]
    pub vqe: VqeSection,
    #[serde(default)]
    pub scf: ScfSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).context("config parse failure")?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(input) = &self.input {
            input.validate("[input]")?;
        }
        for (i, input) in self.inputs.iter().enumerate() {
            input.validate(&format!("[[inputs]] entry {i}"))?;
        }
        if self.method.is_dmet() {
            let partition = self
                .partition
                .as_ref()
                .context("[partition] is required for dmet methods")?;
            if partition.fragments.is_empty() {
                bail!("[partition].fragments must not be empty");
            }
            if let Some(inactive) = &partition.inactive {
                if inactive.len() != partition.fragments.len() {
                    bail!(
                        "[partition].inactive has {} sets for {} fragments",
                        inactive.len(),
                        partition.fragments.len()
                    );
                }
            }
        }
        self.dmet_mode()?;
        Ok(())
    }

    pub fn dmet_mode(&self) -> Result<DmetMode> {
        match self.dmet.mode.as_str() {
            "single_shot" => Ok(DmetMode::SingleShot),
            "active_space" => Ok(DmetMode::ActiveSpace),
            "correlation_fitting" => Ok(DmetMode::CorrelationFitting),
            other => bail!(
                "[dmet].mode = {other:?} (expected single_shot|active_space|correlation_fitting)"
            ),
        }
    }

    pub fn partition(&self) -> Result<FragmentPartition> {
        let section = self
            .partition
            .as_ref()
            .context("[partition] is required for dmet methods")?;
        let partition = match &section.inactive {
            Some(inactive) => {
                FragmentPartition::with_inactive(section.fragments.clone(), inactive.clone())
            }
            None => FragmentPartition::new(section.fragments.clone()),
        };
        partition.map_err(|e| anyhow::anyhow!("[partition]: {e}"))
    }

    pub fn dmet_config(&self) -> Result<DmetConfig> {
        Ok(DmetConfig {
            tau: self.dmet.tau,
            eta: self.dmet.eta,
            mu_max_iter: self.dmet.mu_max_iter,
            mu_step: self.dmet.mu_step,
            gamma: self.dmet.gamma,
            mode: self.dmet_mode()?,
            ..DmetConfig::default()
        })
    }

    pub fn vqe_config(&self) -> VqeConfig {
        VqeConfig {
            epsilon: self.vqe.epsilon,
            optimizer_tol: self.vqe.optimizer_tol,
            max_evals: self.vqe.max_evals,
            bracket_half_width: self.vqe.bracket_half_width,
            ..VqeConfig::default()
        }
    }

    pub fn scf_config(&self) -> ScfConfig {
        ScfConfig {
            density_tol: self.scf.density_tol,
            max_iter: self.scf.max_iter,
            use_diis: self.scf.diis,
            ..ScfConfig::default()
        }
    }

    /// Inputs for a scan: the `[[inputs]]` list, falling back to `[input]`.
    pub fn scan_inputs(&self) -> Vec<InputSpec> {
        if !self.inputs.is_empty() {
            self.inputs.clone()
        } else {
            self.input.iter().cloned().collect()
        }
    }

    /// The single input for `run`.
    pub fn single_input(&self) -> Result<InputSpec> {
        if let Some(input) = &self.input {
            return Ok(input.clone());
        }
        if self.inputs.len() == 1 {
            return Ok(self.inputs[0].clone());
        }
        bail!(
            "`run` needs a single [input] section (found {})",
            self.inputs.len()
        )
    }
}
