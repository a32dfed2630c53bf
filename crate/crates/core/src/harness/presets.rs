//! Sweeps behind the published NMSE figures.

use crate::channel::SystemConfig;
use crate::error::{Error, Result};

use super::config::{ExperimentSpec, SweepAxis, SweepParam};

pub const PRESET_NAMES: [&str; 8] = ["fig3", "fig4a", "fig4b", "fig5", "fig6", "fig7a", "fig7b", "fig8"];

fn spec(name: &str, system: SystemConfig, parameter: SweepParam, values: &[f64]) -> ExperimentSpec {
    ExperimentSpec::new(name, system, SweepAxis { parameter, values: values.to_vec() })
}

fn at_power(p_dbm: f64) -> SystemConfig {
    SystemConfig { p_dbm, ..SystemConfig::default() }
}

/// Looks up a preset. `fig4` and `fig7` name their first panel.
pub fn figure_preset(name: &str) -> Result<ExperimentSpec> {
    let s = match name {
        "fig3" => spec(name, SystemConfig::default(), SweepParam::PDbm, &[10.0, 15.0, 20.0, 25.0, 30.0]),
        "fig4" | "fig4a" => spec("fig4a", at_power(16.0), SweepParam::AlphaUb, &[3.0, 3.5, 4.0, 4.5, 5.0, 5.5]),
        "fig4b" => spec(name, at_power(16.0), SweepParam::AlphaIb, &[2.0, 2.2, 2.4, 2.6, 2.8, 3.0]),
        "fig5" => {
            let mut cfg = SystemConfig { k: 2, ..at_power(24.0) };
            cfg.set_n(20);
            spec(name, cfg, SweepParam::M, &[8.0, 12.0, 16.0, 20.0, 24.0, 28.0, 32.0, 36.0, 40.0])
        }
        "fig6" => {
            let cfg = SystemConfig { k: 2, m: 20, ..at_power(24.0) };
            spec(name, cfg, SweepParam::N, &[8.0, 12.0, 16.0, 20.0, 24.0, 28.0, 32.0, 36.0, 40.0])
        }
        "fig7" | "fig7a" => {
            let cfg = SystemConfig { beta_ui: 0.0, beta_ub: 0.0, ..at_power(16.0) };
            spec("fig7a", cfg, SweepParam::BetaIbDb, &[-10.0, -5.0, 0.0, 5.0, 10.0])
        }
        "fig7b" => {
            let cfg = SystemConfig { beta_ib: 0.0, beta_ub: 0.0, ..at_power(16.0) };
            spec(name, cfg, SweepParam::BetaUiDb, &[-10.0, -5.0, 0.0, 5.0, 10.0])
        }
        "fig8" => {
            let cfg = SystemConfig { r_r: 0.0, r_rk: 0.0, ..at_power(16.0) };
            spec(name, cfg, SweepParam::RD, &[0.0, 0.2, 0.4, 0.6, 0.8, 0.9])
        }
        other => return Err(Error::UnknownPreset(other.into())),
    };
    Ok(s)
}
