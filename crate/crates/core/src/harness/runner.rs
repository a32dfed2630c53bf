//! Seeded Monte Carlo sweeps.

use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{empirical_mu_moments, nmse, predictions, AsymptoticInputs, MseReport, Predictions, TrialErrors};
use crate::channel::{ChannelSampler, SystemConfig};
use crate::error::{Error, Result};
use crate::estimator::run_strategy;
use crate::schedule::{build_schedule, Regime, Strategy, TrainingSchedule};

use super::config::ExperimentSpec;
use super::rng::{trial_rng, Purpose};

/// Per-group values of one row.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub d1: Option<f64>,
    pub r1: Option<f64>,
    pub dk: Option<f64>,
    pub rk: Option<f64>,
    pub d: Option<f64>,
    pub r: Option<f64>,
}

/// Empirical unnormalized MSEs, matching the prediction columns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MseStats {
    pub d1: Option<f64>,
    pub r1: Option<f64>,
    pub dk: Option<f64>,
    pub mu: Option<f64>,
}

/// One row per sweep value and strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep: f64,
    pub strategy: Strategy,
    pub regime: Regime,
    pub nmse: GroupStats,
    pub se: GroupStats,
    pub mse: MseStats,
    pub pred: Predictions,
    pub trials: usize,
    pub excluded: usize,
    /// Seconds spent on the sweep point. Kept out of the written files so
    /// that equal seeds give equal bytes.
    #[serde(skip)]
    pub wall_time_s: f64,
}

/// Included trials of one strategy at one sweep point.
#[derive(Debug, Clone)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub regime: Regime,
    pub trials: Vec<TrialErrors>,
    pub excluded: usize,
}

/// Runs `trials` trials of every strategy on shared channel draws.
///
/// Trial `t` draws its channel from the stream `(seed, sweep_index, t)` and
/// the noise of the `i`-th strategy from a sibling stream, so adding or
/// removing a strategy leaves the others unchanged.
pub fn simulate_point(
    cfg: &SystemConfig,
    strategies: &[Strategy],
    trials: usize,
    seed: u64,
    sweep_index: usize,
) -> Result<Vec<StrategyOutcome>> {
    cfg.validate()?;
    let sampler = ChannelSampler::new(cfg)?;
    let schedules: Vec<TrainingSchedule> = strategies
        .iter()
        .map(|&s| build_schedule(s, cfg.m, cfg.n(), cfg.k, cfg.mltn_regime))
        .collect::<Result<_>>()?;
    let (p, sigma2) = (cfg.p_mw(), cfg.noise_mw());

    let results: Vec<Vec<Result<TrialErrors>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, sweep_index, t, Purpose::Channel);
            let real = match sampler.sample(&mut rng) {
                Ok(r) => r,
                Err(e) => return schedules.iter().map(|_| Err(Error::Unsupported(e.to_string()))).collect(),
            };
            schedules
                .iter()
                .enumerate()
                .map(|(i, sched)| {
                    let mut noise = trial_rng(seed, sweep_index, t, Purpose::Noise(i as u8));
                    run_strategy(&real, sched, p, sigma2, &mut noise).map(|est| TrialErrors::new(&real, &est))
                })
                .collect()
        })
        .collect();

    let mut out: Vec<StrategyOutcome> = strategies
        .iter()
        .zip(&schedules)
        .map(|(&strategy, sched)| StrategyOutcome {
            strategy,
            regime: sched.regime,
            trials: Vec::with_capacity(trials),
            excluded: 0,
        })
        .collect();
    for (t, per_strategy) in results.into_iter().enumerate() {
        for (slot, r) in out.iter_mut().zip(per_strategy) {
            match r {
                Ok(e) => slot.trials.push(e),
                Err(e) => {
                    warn!("trial {t} excluded for {}: {e}", slot.strategy.label());
                    slot.excluded += 1;
                }
            }
        }
    }
    Ok(out)
}

fn row_from(sweep: f64, outcome: &StrategyOutcome, report: Option<&MseReport>, pred: Predictions) -> ResultRow {
    let get = |q: &str, g: &str| report.and_then(|r| r.entry(q, g));
    let nmse_of = |g: &str| get("nmse", g).map(|e| e.empirical);
    let se_of = |g: &str| get("nmse", g).map(|e| e.stderr);
    let mse_of = |g: &str| get("mse", g).map(|e| e.empirical);
    let groups = |f: &dyn Fn(&str) -> Option<f64>| GroupStats {
        d1: f("d1"),
        r1: f("r1"),
        dk: f("dk"),
        rk: f("rk"),
        d: f("d"),
        r: f("r"),
    };
    ResultRow {
        sweep,
        strategy: outcome.strategy,
        regime: outcome.regime,
        nmse: groups(&nmse_of),
        se: groups(&se_of),
        mse: MseStats { d1: mse_of("d1"), r1: mse_of("r1"), dk: mse_of("dk"), mu: mse_of("mu") },
        pred,
        trials: outcome.trials.len(),
        excluded: outcome.excluded,
        wall_time_s: 0.0,
    }
}

/// Aggregates one sweep point into rows, attaching predictions when asked.
pub fn summarize_point(cfg: &SystemConfig, sweep: f64, outcomes: &[StrategyOutcome], emit_predictions: bool) -> Result<Vec<ResultRow>> {
    outcomes
        .iter()
        .map(|o| {
            let pred = if emit_predictions && !o.trials.is_empty() {
                let inputs = AsymptoticInputs::from_config(cfg, empirical_mu_moments(&o.trials))?;
                predictions(&inputs, o.strategy, o.regime)
            } else {
                Predictions::default()
            };
            let report = if o.trials.is_empty() {
                None
            } else {
                Some(nmse(&o.trials, &pred, o.strategy.label(), o.regime.label())?)
            };
            Ok(row_from(sweep, o, report.as_ref(), pred))
        })
        .collect()
}

/// Runs every sweep point of `spec` in order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for (i, &value) in spec.sweep.values.iter().enumerate() {
        let start = Instant::now();
        let cfg = spec.point_config(i)?;
        let outcomes = simulate_point(&cfg, &spec.strategies, spec.trials, spec.seed, i)?;
        let mut point_rows = summarize_point(&cfg, value, &outcomes, spec.emit_predictions)?;
        let elapsed = start.elapsed().as_secs_f64();
        for row in &mut point_rows {
            row.wall_time_s = elapsed;
            info!(
                "{} {}={value} {}: nmse_d1={:?} nmse_rk={:?} excluded={} ({elapsed:.2}s)",
                spec.name,
                spec.sweep.parameter.name(),
                row.strategy.label(),
                row.nmse.d1,
                row.nmse.rk,
                row.excluded
            );
        }
        rows.extend(point_rows);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{SweepAxis, SweepParam};

    fn small_spec() -> ExperimentSpec {
        let system = SystemConfig { m: 6, n_y: 2, n_z: 2, k: 3, ..SystemConfig::default() };
        let mut s = ExperimentSpec::new("small", system, SweepAxis { parameter: SweepParam::PDbm, values: vec![20.0, 30.0] });
        s.trials = 12;
        s
    }

    #[test]
    fn one_row_per_point_and_strategy() {
        let rows = run_experiment(&small_spec()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].strategy, Strategy::TwoPhase);
        assert_eq!(rows[1].strategy, Strategy::ThreePhase);
        assert_eq!(rows[2].sweep, 30.0);
        for r in &rows {
            assert_eq!(r.trials + r.excluded, 12);
            assert!(r.nmse.rk.is_some() && r.pred.d1.is_some());
        }
    }

    #[test]
    fn noiseless_single_trial_is_exact() {
        let mut s = small_spec();
        s.trials = 1;
        s.system.noise_override_mw = Some(0.0);
        for r in run_experiment(&s).unwrap() {
            for v in [r.nmse.d1, r.nmse.r1, r.nmse.dk, r.nmse.rk, r.nmse.d, r.nmse.r] {
                assert!(v.unwrap() < 1e-16, "{r:?}");
            }
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let s = small_spec();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_experiment(&s).unwrap());
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run_experiment(&s).unwrap());
        let strip = |rows: Vec<ResultRow>| rows.into_iter().map(|r| ResultRow { wall_time_s: 0.0, ..r }).collect::<Vec<_>>();
        assert_eq!(strip(one), strip(many));
    }

    #[test]
    fn dropping_a_strategy_keeps_the_other() {
        let cfg = small_spec().point_config(0).unwrap();
        let both = simulate_point(&cfg, &[Strategy::TwoPhase, Strategy::ThreePhase], 5, 3, 0).unwrap();
        let alone = simulate_point(&cfg, &[Strategy::TwoPhase], 5, 3, 0).unwrap();
        assert_eq!(both[0].trials, alone[0].trials);
    }
}
