use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use nicholson_core::lyapunov::NormKind;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Structure,
    Exponents,
    Classify,
    Simulate,
    HullDemo,
    CharRoot,
}

impl Command {
    pub fn needs_system(self) -> bool {
        !matches!(self, Command::HullDemo | Command::CharRoot)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emit {
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub report: bool,
    #[serde(default = "yes")]
    pub plotdata: bool,
}

fn yes() -> bool {
    true
}

impl Default for Emit {
    fn default() -> Self {
        Emit { csv: true, report: true, plotdata: true }
    }
}

/// Everything a run depends on. Subcommand flags are folded into one of
/// these, and `run CONFIG` reads one from TOML, so both paths share a
/// single executor. Unset fields fall back to library defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub empirical: bool,
    #[serde(default)]
    pub fixed_horizon: bool,
    #[serde(default)]
    pub norm: NormKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renorm_period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub empirical_horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recurrence_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifts: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<usize>,
    /// `(d, β, τ)` for the characteristic-root oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub char_root: Option<[f64; 3]>,
    #[serde(default)]
    pub emit: Emit,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            system: None,
            out: None,
            seed: 0,
            strict: false,
            empirical: false,
            fixed_horizon: false,
            norm: NormKind::Sup,
            horizon: None,
            step: None,
            max_horizon: None,
            renorm_period: None,
            slope_tol: None,
            margin_tol: None,
            grid_step: None,
            validation_horizon: None,
            empirical_horizon: None,
            window: None,
            history: None,
            recurrence_tol: None,
            terms: None,
            shifts: None,
            scan: None,
            char_root: None,
            emit: Emit::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("parsing run config")?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn check(&self) -> Result<()> {
        let positive = [
            ("horizon", self.horizon),
            ("step", self.step),
            ("renorm_period", self.renorm_period),
            ("slope_tol", self.slope_tol),
            ("margin_tol", self.margin_tol),
            ("grid_step", self.grid_step),
            ("validation_horizon", self.validation_horizon),
            ("empirical_horizon", self.empirical_horizon),
            ("window", self.window),
            ("recurrence_tol", self.recurrence_tol),
        ];
        for (name, value) in positive {
            if let Some(v) = value {
                ensure!(v.is_finite() && v > 0.0, "{name} must be positive, got {v}");
            }
        }
        if let Some(v) = self.max_horizon {
            ensure!(v.is_finite() && v >= 0.0, "max_horizon must be nonnegative, got {v}");
        }
        if self.command.needs_system() && self.system.is_none() {
            bail!("command {:?} needs a system file", self.command);
        }
        if self.shifts.is_some() && self.scan.is_some() {
            bail!("shifts and scan are mutually exclusive");
        }
        if let Some(s) = &self.shifts {
            ensure!(s.iter().all(|x| x.is_finite()), "shifts must be finite");
        }
        if let Some(h) = &self.history {
            ensure!(h.iter().all(|x| x.is_finite()), "history values must be finite");
        }
        if self.command == Command::CharRoot {
            let Some([d, beta, tau]) = self.char_root else {
                bail!("char-root needs d, beta and tau");
            };
            ensure!(d.is_finite() && d > 0.0 && beta.is_finite() && beta > 0.0, "d and beta must be positive");
            ensure!(tau.is_finite() && tau > 0.0, "tau must be positive, got {tau}");
        }
        Ok(())
    }
}
