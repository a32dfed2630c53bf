//! Runtime property suites behind `validate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{mse_phase1_2pce, mse_phase2_2pce_mgen, mse_phase2_2pce_mltn, AsymptoticInputs};
use crate::channel::{complex_gaussian, ChannelRealization, SharingRegime, SystemConfig};
use crate::error::{Error, Result};
use crate::estimator::{max_relative_error, run_strategy};
use crate::linalg::{block_inverse, block_pinv_rank1structured, pinv_default, BlockMatrix2x2, CMatrix, CVector, C64};
use crate::schedule::{build_schedule, Regime, Strategy};

/// Outcome of one property check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub cases: usize,
    /// Largest observed violation, in the check's own units.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn bounded(name: impl Into<String>, cases: usize, worst: f64, tolerance: f64) -> Self {
        Self { name: name.into(), cases, worst, tolerance, passed: worst <= tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemmas,
    Noiseless,
    Mse,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lemmas" => Ok(Suite::Lemmas),
            "noiseless" => Ok(Suite::Noiseless),
            "mse" => Ok(Suite::Mse),
            other => Err(Error::Config(format!("unknown suite `{other}` (lemmas, noiseless or mse)"))),
        }
    }
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, 1.0))
}

fn random_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
    CVector::from_fn(len, |_, _| complex_gaussian(rng, 1.0))
}

fn relative(err: f64, scale: f64) -> f64 {
    err / scale.max(f64::MIN_POSITIVE)
}

/// `block_inverse(M) * M = I` on random well-conditioned blocks.
pub fn block_inverse_identity<R: Rng + ?Sized>(rng: &mut R, cases: usize) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (p, q) = (rng.random_range(1..6), rng.random_range(1..6));
        let shift = |n: usize| CMatrix::identity(n, n) * C64::new(3.0 * n as f64, 0.0);
        let m = BlockMatrix2x2::new(
            random_matrix(rng, p, p) + shift(p),
            random_matrix(rng, p, q),
            random_matrix(rng, q, p),
            random_matrix(rng, q, q) + shift(q),
        )
        .expect("conformable blocks");
        let err = match block_inverse(&m) {
            Ok(inv) => (inv * m.assemble() - CMatrix::identity(p + q, p + q)).norm(),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    Check::bounded("block inverse times M equals identity", cases, worst, 1e-9)
}

/// Structured pseudo-inverse against the SVD pseudo-inverse on
/// `[E, -E; -E, E]` blocks with random low-rank `E`.
pub fn block_pinv_identity<R: Rng + ?Sized>(rng: &mut R, cases: usize) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (p, q) = (rng.random_range(1..7), rng.random_range(1..7));
        let rank = rng.random_range(1..=p.min(q));
        let e = random_matrix(rng, p, rank) * random_matrix(rng, rank, q);
        let m = BlockMatrix2x2::new(e.clone(), -&e, -&e, e).expect("conformable blocks");
        let want = pinv_default(&m.assemble());
        let err = match block_pinv_rank1structured(&m) {
            Ok(got) => relative((got - &want).norm(), want.norm()),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    Check::bounded("structured block pseudo-inverse equals SVD pseudo-inverse", cases, worst, 1e-8)
}

/// Same comparison on the general family `[A, A X; Y A, Y A X]`.
pub fn block_pinv_general_identity<R: Rng + ?Sized>(rng: &mut R, cases: usize) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (p, q) = (rng.random_range(1..6), rng.random_range(1..6));
        let (s, r) = (rng.random_range(1..4), rng.random_range(1..4));
        let rank = rng.random_range(1..=p.min(q));
        let a = random_matrix(rng, p, rank) * random_matrix(rng, rank, q);
        let x = random_matrix(rng, q, s);
        let y = random_matrix(rng, r, p);
        let m = BlockMatrix2x2::new(a.clone(), &a * &x, &y * &a, &y * &a * &x).expect("conformable blocks");
        let want = pinv_default(&m.assemble());
        let err = match block_pinv_rank1structured(&m) {
            Ok(got) => relative((got - &want).norm(), want.norm()),
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(err);
    }
    Check::bounded("structured block pseudo-inverse on general factored blocks", cases, worst, 1e-8)
}

/// `tr(ABC) = tr(BCA) = tr(CAB)` for random conformable triples.
pub fn trace_cyclicity<R: Rng + ?Sized>(rng: &mut R, cases: usize) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let (p, q, r) = (rng.random_range(1..8), rng.random_range(1..8), rng.random_range(1..8));
        let (a, b, c) = (random_matrix(rng, p, q), random_matrix(rng, q, r), random_matrix(rng, r, p));
        let t1 = (&a * &b * &c).trace();
        let t2 = (&b * &c * &a).trace();
        let t3 = (&c * &a * &b).trace();
        let scale = a.norm() * b.norm() * c.norm();
        worst = worst.max(relative((t1 - t2).norm(), scale)).max(relative((t1 - t3).norm(), scale));
    }
    Check::bounded("trace is invariant under cyclic permutation", cases, worst, 1e-10)
}

/// The sample mean of traces equals the trace of the sample mean.
pub fn trace_mean_commutes<R: Rng + ?Sized>(rng: &mut R, cases: usize) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let n = rng.random_range(1..8);
        let count = rng.random_range(1..50);
        let xs: Vec<CMatrix> = (0..count).map(|_| random_matrix(rng, n, n)).collect();
        let mean_of_traces = xs.iter().map(|x| x.trace()).sum::<C64>() / count as f64;
        let mean = xs.iter().fold(CMatrix::zeros(n, n), |acc, x| acc + x) / C64::new(count as f64, 0.0);
        let scale = xs.iter().map(|x| x.norm()).sum::<f64>() / count as f64;
        worst = worst.max(relative((mean_of_traces - mean.trace()).norm(), scale));
    }
    Check::bounded("sample mean commutes with trace", cases, worst, 1e-10)
}

/// Frobenius distances `||mean (X X^H)^-1 - C^-1||` for `X` with `n`
/// independent columns of covariance `C / n`, one per column count.
pub fn inverse_concentration<R: Rng + ?Sized>(rng: &mut R, rows: usize, columns: &[usize], draws: usize) -> Vec<f64> {
    let c: Vec<f64> = (0..rows).map(|i| 1.0 + i as f64).collect();
    let c_inv = CMatrix::from_diagonal(&CVector::from_iterator(rows, c.iter().map(|v| C64::new(1.0 / v, 0.0))));
    columns
        .iter()
        .map(|&n| {
            let mut acc = CMatrix::zeros(rows, rows);
            for _ in 0..draws {
                let x = CMatrix::from_fn(rows, n, |i, _| complex_gaussian(rng, c[i] / n as f64));
                let gram = &x * x.adjoint();
                acc += gram.try_inverse().unwrap_or_else(|| CMatrix::from_element(rows, rows, C64::new(f64::NAN, 0.0)));
            }
            (acc / C64::new(draws as f64, 0.0) - &c_inv).norm()
        })
        .collect()
}

pub fn inverse_concentration_trend<R: Rng + ?Sized>(rng: &mut R) -> Check {
    let rows = 4;
    let d = inverse_concentration(rng, rows, &[4 * rows, 16 * rows, 64 * rows], 500);
    let worst = d.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    Check {
        name: format!("inverse sample Gram approaches C^-1 (distances {d:?})"),
        cases: 3,
        worst,
        tolerance: 1.0,
        passed: worst < 1.0,
    }
}

/// A random Rayleigh realization with unit variances.
pub fn random_realization<R: Rng + ?Sized>(rng: &mut R, m: usize, n: usize, k: usize) -> Result<ChannelRealization> {
    let h_d = (0..k).map(|_| random_vector(rng, m)).collect();
    let h_r = (0..k).map(|_| random_vector(rng, n)).collect();
    ChannelRealization::from_parts(h_d, h_r, random_matrix(rng, m, n))
}

/// Worst relative channel error without noise over `instances` draws.
pub fn noiseless_exactness<R: Rng + ?Sized>(
    rng: &mut R,
    (m, n, k): (usize, usize, usize),
    sharing: SharingRegime,
    strategy: Strategy,
    instances: usize,
) -> Result<Check> {
    let sched = build_schedule(strategy, m, n, k, sharing)?;
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let real = random_realization(rng, m, n, k)?;
        let est = run_strategy(&real, &sched, 1.0, 0.0, rng)?;
        worst = worst.max(max_relative_error(&real, &est));
    }
    Ok(Check::bounded(
        format!("noiseless {} recovery at M={m}, N={n}, K={k} ({})", strategy.label(), sched.regime.label()),
        instances,
        worst,
        1e-8,
    ))
}

/// Per-trial squared errors of the closed-form quantities for one strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactErrors {
    pub d1: f64,
    pub r1: f64,
    /// Mean over users 1..K.
    pub dk: f64,
    /// Sum over all users.
    pub d_total: f64,
}

/// Reference-loss Rayleigh config for closed-form comparisons.
pub fn rayleigh_config(m: usize, n: usize, k: usize, sharing: SharingRegime) -> SystemConfig {
    let mut cfg = SystemConfig {
        m,
        k,
        beta_ub: 0.0,
        beta_ui: 0.0,
        beta_ib: 0.0,
        reference_loss: true,
        mltn_regime: sharing,
        ..SystemConfig::default()
    };
    cfg.set_n(n);
    cfg
}

/// Closed-form MSE predictions matching [`ExactErrors`].
pub fn exact_predictions(cfg: &SystemConfig, strategy: Strategy) -> Result<ExactErrors> {
    let x = AsymptoticInputs::with_uniform_mu(cfg.m, cfg.n(), cfg.k, cfg.p_mw(), cfg.noise_mw(), 1.0, 1.0, 1.0);
    let (m, k, s2, p) = (cfg.m as f64, cfg.k as f64, cfg.noise_mw(), cfg.p_mw());
    match strategy {
        Strategy::TwoPhase => {
            let (d1, r1) = mse_phase1_2pce(&x);
            let dk = match Regime::select(cfg.m, cfg.n(), cfg.mltn_regime) {
                Regime::MgeN => mse_phase2_2pce_mgen(&x, 0)?.0,
                Regime::MltNOrthogonal => mse_phase2_2pce_mltn(&x, 0)?.0,
                Regime::MltNShared => {
                    return Err(Error::Unsupported("no closed-form Phase-II MSE for the shared layout".into()))
                }
            };
            Ok(ExactErrors { d1, r1, dk, d_total: d1 + (k - 1.0) * dk })
        }
        Strategy::ThreePhase => Ok(ExactErrors {
            d1: m * s2 / (p * k),
            r1: (1.0 + k) * m * s2 / (p * k),
            dk: m * s2 / (p * k),
            d_total: m * s2 / p,
        }),
    }
}

/// Monte Carlo per-trial errors of the closed-form quantities.
pub fn exact_mse_trials(cfg: &SystemConfig, strategy: Strategy, trials: usize, seed: u64) -> Result<Vec<ExactErrors>> {
    let outcome = crate::harness::simulate_point(cfg, &[strategy], trials, seed, 0)?;
    let users = (cfg.k - 1).max(1) as f64;
    Ok(outcome[0]
        .trials
        .iter()
        .map(|t| ExactErrors {
            d1: t.hd_err[0],
            r1: t.h_err[0],
            dk: t.hd_err[1..].iter().sum::<f64>() / users,
            d_total: t.hd_err.iter().sum(),
        })
        .collect())
}

/// Largest `|MC - formula| / stderr` over the closed-form quantities.
pub fn exact_mse_check(cfg: &SystemConfig, strategy: Strategy, trials: usize, seed: u64) -> Result<Check> {
    let pred = exact_predictions(cfg, strategy)?;
    let runs = exact_mse_trials(cfg, strategy, trials, seed)?;
    let pick: [(&str, fn(&ExactErrors) -> f64); 4] =
        [("d1", |e| e.d1), ("r1", |e| e.r1), ("dk", |e| e.dk), ("d_total", |e| e.d_total)];
    let mut worst: f64 = 0.0;
    for (_, f) in pick.iter().skip(if cfg.k < 2 { 1 } else { 0 }) {
        let xs: Vec<f64> = runs.iter().map(f).collect();
        let est = crate::analysis::mean_stderr(&xs)?;
        worst = worst.max((est.value - f(&pred)).abs() / est.stderr);
    }
    Ok(Check::bounded(
        format!("{} closed-form MSEs at M={}, N={}, K={} (standard errors)", strategy.label(), cfg.m, cfg.n(), cfg.k),
        runs.len(),
        worst,
        3.0,
    ))
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match suite {
        Suite::Lemmas => Ok(vec![
            block_inverse_identity(&mut rng, 1000),
            block_pinv_identity(&mut rng, 1000),
            block_pinv_general_identity(&mut rng, 1000),
            trace_cyclicity(&mut rng, 1000),
            trace_mean_commutes(&mut rng, 200),
            inverse_concentration_trend(&mut rng),
        ]),
        Suite::Noiseless => {
            let mut out = Vec::new();
            for (dims, sharing) in [
                ((12, 8, 3), SharingRegime::Shared),
                ((3, 7, 3), SharingRegime::Shared),
                ((4, 10, 2), SharingRegime::Orthogonal),
            ] {
                for strategy in [Strategy::TwoPhase, Strategy::ThreePhase] {
                    out.push(noiseless_exactness(&mut rng, dims, sharing, strategy, 500)?);
                }
            }
            Ok(out)
        }
        Suite::Mse => {
            let mut out = Vec::new();
            for (m, n, k, sharing) in [(16, 8, 4, SharingRegime::Shared), (8, 20, 3, SharingRegime::Orthogonal)] {
                let cfg = rayleigh_config(m, n, k, sharing);
                for strategy in [Strategy::TwoPhase, Strategy::ThreePhase] {
                    out.push(exact_mse_check(&cfg, strategy, 2000, seed)?);
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn small_lemma_checks_pass() {
        let mut r = rng();
        for c in [
            block_inverse_identity(&mut r, 50),
            block_pinv_identity(&mut r, 50),
            block_pinv_general_identity(&mut r, 50),
            trace_cyclicity(&mut r, 50),
            trace_mean_commutes(&mut r, 20),
        ] {
            assert!(c.passed, "{c:?}");
        }
    }

    #[test]
    fn noiseless_small() {
        let c = noiseless_exactness(&mut rng(), (3, 7, 3), SharingRegime::Shared, Strategy::TwoPhase, 20).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn shared_layout_has_no_closed_form() {
        let cfg = rayleigh_config(3, 7, 3, SharingRegime::Shared);
        assert!(exact_predictions(&cfg, Strategy::TwoPhase).is_err());
        assert!(exact_predictions(&cfg, Strategy::ThreePhase).is_ok());
    }

    #[test]
    fn suite_names() {
        assert_eq!("mse".parse::<Suite>().unwrap(), Suite::Mse);
        assert!("all".parse::<Suite>().is_err());
    }
}
