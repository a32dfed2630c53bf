//! Python bindings. Results cross the boundary as JSON text or plain tuples.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use irs_chanest::analysis::{mse_phase1_2pce, mse_phase2_2pce_mgen, mse_phase2_2pce_mltn, AsymptoticInputs};
use irs_chanest::channel::SharingRegime;
use irs_chanest::estimator::{max_relative_error, run_strategy};
use irs_chanest::harness::{figure_preset, run_experiment, ExperimentSpec};
use irs_chanest::schedule::{build_schedule, Strategy};
use irs_chanest::validation::random_realization;

fn py_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn strategy(name: &str) -> PyResult<Strategy> {
    match name {
        "2pce" => Ok(Strategy::TwoPhase),
        "3pce" => Ok(Strategy::ThreePhase),
        other => Err(py_err(format!("unknown strategy {other:?}, expected \"2pce\" or \"3pce\""))),
    }
}

fn sharing(name: &str) -> PyResult<SharingRegime> {
    match name {
        "shared" => Ok(SharingRegime::Shared),
        "orthogonal" => Ok(SharingRegime::Orthogonal),
        other => Err(py_err(format!("unknown regime {other:?}, expected \"shared\" or \"orthogonal\""))),
    }
}

/// Pilot slots needed by a strategy.
#[pyfunction]
#[pyo3(signature = (m, n, k, strategy_name = "2pce"))]
fn training_overhead(m: usize, n: usize, k: usize, strategy_name: &str) -> PyResult<usize> {
    Ok(irs_chanest::schedule::training_overhead(m, n, k, strategy(strategy_name)?))
}

/// Pilot and reflection schedule as JSON.
#[pyfunction]
#[pyo3(signature = (m, n, k, strategy_name = "2pce", regime = "shared"))]
fn schedule_json(m: usize, n: usize, k: usize, strategy_name: &str, regime: &str) -> PyResult<String> {
    let s = build_schedule(strategy(strategy_name)?, m, n, k, sharing(regime)?).map_err(py_err)?;
    s.to_json().map_err(py_err)
}

/// Closed-form 2PCE MSEs `(d1, r1, dk, mu)` for one user with a uniform
/// `E|mu_n|^2`. `dk` and `mu` are `None` when no formula applies.
#[pyfunction]
#[pyo3(signature = (m, n, k, p, sigma2, l_ui1, l_ib, mu_sq = 1.0, regime = "orthogonal"))]
#[allow(clippy::too_many_arguments)]
fn mse_2pce(
    m: usize,
    n: usize,
    k: usize,
    p: f64,
    sigma2: f64,
    l_ui1: f64,
    l_ib: f64,
    mu_sq: f64,
    regime: &str,
) -> PyResult<(f64, f64, Option<f64>, Option<f64>)> {
    let x = AsymptoticInputs::with_uniform_mu(m, n, k, p, sigma2, l_ui1, l_ib, mu_sq);
    let (d1, r1) = mse_phase1_2pce(&x);
    let phase2 = if k < 2 {
        None
    } else if m >= n {
        Some(mse_phase2_2pce_mgen(&x, 0).map_err(py_err)?)
    } else if sharing(regime)? == SharingRegime::Orthogonal {
        mse_phase2_2pce_mltn(&x, 0).ok()
    } else {
        None
    };
    Ok((d1, r1, phase2.map(|t| t.0), phase2.map(|t| t.1)))
}

/// Worst relative error of noiseless estimation over random channels.
#[pyfunction]
#[pyo3(signature = (m, n, k, strategy_name = "2pce", regime = "shared", instances = 10, seed = 0))]
fn noiseless_error(
    m: usize,
    n: usize,
    k: usize,
    strategy_name: &str,
    regime: &str,
    instances: usize,
    seed: u64,
) -> PyResult<f64> {
    let sched = build_schedule(strategy(strategy_name)?, m, n, k, sharing(regime)?).map_err(py_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let real = random_realization(&mut rng, m, n, k).map_err(py_err)?;
        let est = run_strategy(&real, &sched, 1.0, 0.0, &mut rng).map_err(py_err)?;
        worst = worst.max(max_relative_error(&real, &est));
    }
    Ok(worst)
}

/// Runs a preset or a TOML config and returns the result rows as JSON.
#[pyfunction]
#[pyo3(signature = (preset = None, config = None, trials = None, seed = None))]
fn run(
    py: Python<'_>,
    preset: Option<&str>,
    config: Option<PathBuf>,
    trials: Option<usize>,
    seed: Option<u64>,
) -> PyResult<String> {
    let mut spec = match (preset, config) {
        (Some(name), None) => figure_preset(name).map_err(py_err)?,
        (None, Some(path)) => ExperimentSpec::from_path(&path).map_err(py_err)?,
        _ => return Err(py_err("give exactly one of preset or config")),
    };
    if let Some(t) = trials {
        spec.trials = t;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    let rows = py.detach(|| run_experiment(&spec)).map_err(py_err)?;
    serde_json::to_string(&rows).map_err(py_err)
}

#[pymodule]
fn pyirs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(training_overhead, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_json, m)?)?;
    m.add_function(wrap_pyfunction!(mse_2pce, m)?)?;
    m.add_function(wrap_pyfunction!(noiseless_error, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
