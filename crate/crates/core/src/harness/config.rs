//! Experiment specifications and their TOML form.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, SharingRegime, SystemConfig};
use crate::error::{Error, Result};
use crate::schedule::Strategy;

use super::rng::MAX_SWEEP_POINTS;

pub const DEFAULT_TRIALS: usize = 500;
pub const DEFAULT_SEED: u64 = 42;

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    PDbm,
    AlphaUb,
    AlphaUi,
    AlphaIb,
    M,
    N,
    K,
    BetaUbDb,
    BetaUiDb,
    BetaIbDb,
    RD,
    RR,
    RRk,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::PDbm => "p_dbm",
            SweepParam::AlphaUb => "alpha_ub",
            SweepParam::AlphaUi => "alpha_ui",
            SweepParam::AlphaIb => "alpha_ib",
            SweepParam::M => "m",
            SweepParam::N => "n",
            SweepParam::K => "k",
            SweepParam::BetaUbDb => "beta_ub_db",
            SweepParam::BetaUiDb => "beta_ui_db",
            SweepParam::BetaIbDb => "beta_ib_db",
            SweepParam::RD => "r_d",
            SweepParam::RR => "r_r",
            SweepParam::RRk => "r_rk",
        }
    }

    /// Returns `base` with this parameter set to `value`.
    pub fn apply(self, base: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 && value < 1e9 {
                Ok(value as usize)
            } else {
                Err(Error::Config(format!("{} must be a positive integer, got {value}", self.name())))
            }
        };
        let mut cfg = base.clone();
        match self {
            SweepParam::PDbm => cfg.p_dbm = value,
            SweepParam::AlphaUb => cfg.alpha_ub = value,
            SweepParam::AlphaUi => cfg.alpha_ui = value,
            SweepParam::AlphaIb => cfg.alpha_ib = value,
            SweepParam::M => cfg.m = count()?,
            SweepParam::N => cfg.set_n(count()?),
            SweepParam::K => cfg.k = count()?,
            SweepParam::BetaUbDb => cfg.beta_ub = db_to_linear(value),
            SweepParam::BetaUiDb => cfg.beta_ui = db_to_linear(value),
            SweepParam::BetaIbDb => cfg.beta_ib = db_to_linear(value),
            SweepParam::RD => cfg.r_d = value,
            SweepParam::RR => cfg.r_r = value,
            SweepParam::RRk => cfg.r_rk = value,
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub system: SystemConfig,
    pub sweep: SweepAxis,
    pub trials: usize,
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub regime: SharingRegime,
    pub output: Option<PathBuf>,
    pub emit_predictions: bool,
}

impl ExperimentSpec {
    pub fn new(name: &str, system: SystemConfig, sweep: SweepAxis) -> Self {
        Self {
            name: name.into(),
            regime: system.mltn_regime,
            system,
            sweep,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            strategies: vec![Strategy::TwoPhase, Strategy::ThreePhase],
            output: None,
            emit_predictions: true,
        }
    }

    /// Configuration of the `index`-th sweep point.
    pub fn point_config(&self, index: usize) -> Result<SystemConfig> {
        let value = *self
            .sweep
            .values
            .get(index)
            .ok_or_else(|| Error::Config(format!("sweep index {index} out of range")))?;
        let mut cfg = self.sweep.parameter.apply(&self.system, value)?;
        cfg.mltn_regime = self.regime;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::Config("the sweep needs at least one value".into()));
        }
        if self.sweep.values.len() > MAX_SWEEP_POINTS {
            return Err(Error::Config(format!("at most {MAX_SWEEP_POINTS} sweep values are supported")));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("select at least one strategy".into()));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(s) {
                return Err(Error::Config(format!("strategy {} listed twice", s.label())));
            }
        }
        for i in 0..self.sweep.values.len() {
            self.point_config(i)?.validate()?;
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ExperimentFile = toml::from_str(text)?;
        let system = system_from_table(file.system)?;
        let mut spec = ExperimentSpec::new(file.name.as_deref().unwrap_or("custom"), system, file.sweep);
        if let Some(t) = file.trials {
            spec.trials = t;
        }
        if let Some(s) = file.seed {
            spec.seed = s;
        }
        if let Some(s) = file.strategies {
            spec.strategies = s;
        }
        if let Some(r) = file.regime {
            spec.regime = r;
        }
        if let Some(p) = file.emit_predictions {
            spec.emit_predictions = p;
        }
        spec.output = file.output;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    name: Option<String>,
    trials: Option<usize>,
    seed: Option<u64>,
    strategies: Option<Vec<Strategy>>,
    regime: Option<SharingRegime>,
    output: Option<PathBuf>,
    emit_predictions: Option<bool>,
    #[serde(default)]
    system: toml::Table,
    sweep: SweepAxis,
}

/// Builds a system config from a table that may give Rician factors in dB
/// (`beta_*_db`) instead of linear units.
fn system_from_table(mut table: toml::Table) -> Result<SystemConfig> {
    for link in ["ub", "ui", "ib"] {
        let db_key = format!("beta_{link}_db");
        let Some(db) = table.remove(&db_key) else { continue };
        let lin_key = format!("beta_{link}");
        if table.contains_key(&lin_key) {
            return Err(Error::Config(format!("give either {lin_key} or {db_key}, not both")));
        }
        let db = db
            .as_float()
            .or_else(|| db.as_integer().map(|i| i as f64))
            .ok_or_else(|| Error::Config(format!("{db_key} must be a number")))?;
        table.insert(lin_key, toml::Value::Float(db_to_linear(db)));
    }
    Ok(toml::Value::Table(table).try_into()?)
}
