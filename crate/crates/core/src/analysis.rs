//! Closed-form and large-`M` MSE expressions for both strategies, the
//! strategy comparison predicates, and empirical NMSE aggregation.

use serde::{Deserialize, Serialize};

use crate::channel::{reference_losses, ChannelRealization, SystemConfig};
use crate::error::{Error, Result};
use crate::estimator::EstimateSet;
use crate::schedule::gamma_delta;

/// Scalar inputs shared by every MSE expression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticInputs {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub sigma2: f64,
    /// Loss between the typical user and the IRS.
    pub l_ui1: f64,
    /// Loss between the IRS and the BS.
    pub l_ib: f64,
    /// `E|mu_{k,n}|^2` per user 1..K (outer) and element (inner).
    pub mu_sq: Vec<Vec<f64>>,
}

impl AsymptoticInputs {
    /// Inputs with every `E|mu_{k,n}|^2` set to `value`.
    pub fn with_uniform_mu(m: usize, n: usize, k: usize, p: f64, sigma2: f64, l_ui1: f64, l_ib: f64, value: f64) -> Self {
        Self { m, n, k, p, sigma2, l_ui1, l_ib, mu_sq: vec![vec![value; n]; k.saturating_sub(1)] }
    }

    /// Reference-point losses of `cfg` with the given moment surrogates.
    pub fn from_config(cfg: &SystemConfig, mu_sq: Vec<Vec<f64>>) -> Result<Self> {
        let losses = reference_losses(cfg)?;
        Ok(Self {
            m: cfg.m,
            n: cfg.n(),
            k: cfg.k,
            p: cfg.p_mw(),
            sigma2: cfg.noise_mw(),
            l_ui1: losses.ui1,
            l_ib: losses.ib,
            mu_sq,
        })
    }

    pub fn gamma_delta(&self) -> (usize, usize) {
        gamma_delta(self.m, self.n)
    }

    fn ll(&self) -> f64 {
        self.l_ui1 * self.l_ib
    }

    fn mu(&self, user: usize) -> Result<&[f64]> {
        self.mu_sq
            .get(user)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Dimension(format!("no scaling moments for user index {user}")))
    }

    fn check_mltn(&self) -> Result<(usize, usize)> {
        if self.m >= self.n {
            return Err(Error::Config(format!("M < N expression used with M={} >= N={}", self.m, self.n)));
        }
        let (gamma, delta) = self.gamma_delta();
        if delta == 0 {
            return Err(Error::Unsupported(format!(
                "delta = 0 for M={}, N={}: the M < N expressions divide by delta",
                self.m, self.n
            )));
        }
        Ok((gamma, delta))
    }
}

/// `a / b`, taken as zero when the numerator vanishes.
fn frac(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Phase-I MSEs `(eps_d1, eps_r1)` of the 2PCE strategy.
pub fn mse_phase1_2pce(x: &AsymptoticInputs) -> (f64, f64) {
    let (m, n) = (x.m as f64, x.n as f64);
    let d1 = frac(m * x.sigma2, x.p * (n + 1.0));
    (d1, n * d1)
}

/// Phase-II MSEs `(eps_dk, eps_mu_k)` of the 2PCE strategy for `M >= N`.
/// `user` indexes users 1..K from zero.
pub fn mse_phase2_2pce_mgen(x: &AsymptoticInputs, user: usize) -> Result<(f64, f64)> {
    if x.k < 2 {
        return Err(Error::Config("Phase II needs K >= 2".into()));
    }
    let (m, n, k, s2, p, ll) = (x.m as f64, x.n as f64, x.k as f64, x.sigma2, x.p, x.ll());
    let dk = frac(m * s2, 2.0 * p * (k - 1.0));
    let mu_norm: f64 = x.mu(user)?.iter().sum();
    let term1 = frac(s2 * (n + 1.0) * n, 2.0 * (k - 1.0) * m * (p * (n + 1.0) * ll + s2));
    let term2 = frac(m * s2 * mu_norm, n * ll * p * (n + 1.0) + m * s2);
    Ok((dk, term1 + term2))
}

/// Phase-II MSEs `(eps_dk, eps_mu_k)` of the 2PCE strategy for `M < N` with
/// per-user slot windows.
pub fn mse_phase2_2pce_mltn(x: &AsymptoticInputs, user: usize) -> Result<(f64, f64)> {
    if x.k < 2 {
        return Err(Error::Config("Phase II needs K >= 2".into()));
    }
    let (gamma, delta) = x.check_mltn()?;
    let (m, n, s2, p, ll) = (x.m as f64, x.n as f64, x.sigma2, x.p, x.ll());
    let (g, d) = (gamma as f64, delta as f64);
    let dk = frac(m * s2, p * (g + 1.0));

    let mu = x.mu(user)?;
    let split = (gamma - 1) * x.m;
    let head: f64 = mu[..split].iter().sum();
    let tail: f64 = mu[split..].iter().sum();
    let c_head = d * g * g + 2.0 * g + 2.0 * d - m;
    let c_tail = m * g * g + (3.0 * m - 1.0) * g + d;
    let base = p * d * (g + 1.0).powi(2) * (n + 1.0) * ll;

    let term1 = frac(s2 * n * (n + 1.0), 2.0 * p * m * (n + 1.0) * ll + 2.0 * m * s2);
    let term2 = frac(c_head * s2 * head, base + c_head * s2);
    let term3 = frac(c_tail * s2 * tail, base + c_tail * s2);
    Ok((dk, term1 + term2 + term3))
}

/// Three-phase baseline MSEs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreePhaseMse {
    /// Sum over all users' direct channels.
    pub d_total: f64,
    pub r1: f64,
    /// Scaling-vector MSE of the requested user, in the applicable regime.
    pub mu: f64,
}

/// `M >= N` scaling-vector MSE of the baseline.
pub fn mse_3pce_mu_mgen(x: &AsymptoticInputs, user: usize) -> Result<f64> {
    let (m, n, k, s2, p, ll) = (x.m as f64, x.n as f64, x.k as f64, x.sigma2, x.p, x.ll());
    let mu = x.mu(user)?;
    let first = mu.first().copied().unwrap_or(0.0);
    let rest: f64 = mu.iter().skip(1).sum();
    Ok(frac(n * (n - 1.0) * (1.0 + k) * s2, k * m * s2 + p * k * m * n * ll)
        + frac(k * (1.0 + k) * n * s2, k * (k + n) * m * s2 + p * m * n * k * k * ll)
        + frac((k + n) * m * s2 * first, p * n * n * k * ll + (k + n) * m * s2)
        + frac(m * s2 * rest, p * n * n * ll + m * s2))
}

/// `M < N` scaling-vector MSE of the baseline.
pub fn mse_3pce_mu_mltn(x: &AsymptoticInputs, user: usize) -> Result<f64> {
    let (gamma, delta) = x.check_mltn()?;
    let (m, n, k, s2, p, ll) = (x.m as f64, x.n as f64, x.k as f64, x.sigma2, x.p, x.ll());
    let mu = x.mu(user)?;
    let split = (gamma - 1) * x.m;
    let first = mu.first().copied().unwrap_or(0.0);
    let mid: f64 = mu.iter().take(split).skip(1).sum();
    let tail: f64 = mu[split..].iter().sum();
    Ok(frac(k * (1.0 + k) * n * s2, p * k * k * n * m * ll + k * (k + n) * m * s2)
        + frac(n * (n - 1.0) * (1.0 + k) * s2, p * n * m * k * ll + k * m * s2)
        + frac(m * s2 * mid, p * n * m * ll + m * s2)
        + frac((k + n) * m * s2 * first, p * k * n * m * ll + (k + n) * m * s2)
        + frac(m * s2 * tail, p * n * delta as f64 * ll + m * s2))
}

/// Baseline MSEs for `user` (index into users 1..K), picking the regime from
/// `M` and `N`.
pub fn mse_3pce_table(x: &AsymptoticInputs, user: usize) -> Result<ThreePhaseMse> {
    let (m, k, s2, p) = (x.m as f64, x.k as f64, x.sigma2, x.p);
    let mu = if x.m >= x.n { mse_3pce_mu_mgen(x, user)? } else { mse_3pce_mu_mltn(x, user)? };
    Ok(ThreePhaseMse {
        d_total: frac(m * s2, p),
        r1: frac((1.0 + k) * m * s2, p * k),
        mu,
    })
}

/// Signed gap `baseline - proposed` of one MSE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub difference: f64,
    /// The proposed strategy is strictly better.
    pub holds: bool,
    pub tie: bool,
}

impl Comparison {
    fn new(baseline: f64, proposed: f64) -> Self {
        let difference = baseline - proposed;
        let scale = baseline.abs().max(proposed.abs());
        let tie = difference == 0.0 || difference.abs() <= 1e-12 * scale;
        Self { difference, holds: difference > 0.0 && !tie, tie }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub m_ge_n: bool,
    /// Total MSE over every user's direct channel.
    pub direct: Comparison,
    pub reflected_typical: Comparison,
    /// Scaling-vector MSE per user 1..K.
    pub scaling: Vec<Comparison>,
    /// `gamma < K + 2`, as the direct-channel condition is usually stated.
    pub literal_condition: Option<bool>,
    /// `K < gamma + 2`, the condition the direct-channel difference implies.
    pub derived_condition: Option<bool>,
}

impl TheoremReport {
    /// Every MSE of the proposed strategy is strictly lower (`M >= N`).
    pub fn thm1_holds(&self) -> bool {
        self.m_ge_n && self.direct.holds && self.reflected_typical.holds && self.scaling.iter().all(|c| c.holds)
    }

    pub fn thm2_direct_holds(&self) -> bool {
        !self.m_ge_n && self.direct.holds
    }

    pub fn thm2_reflected_holds(&self) -> bool {
        !self.m_ge_n && self.reflected_typical.holds && self.scaling.iter().all(|c| c.holds)
    }

    /// True when every difference is a tie.
    pub fn all_ties(&self) -> bool {
        self.direct.tie && self.reflected_typical.tie && self.scaling.iter().all(|c| c.tie)
    }
}

/// Evaluates the strategy comparison on the closed-form and large-`M`
/// expressions.
pub fn theorem_predicates(x: &AsymptoticInputs) -> Result<TheoremReport> {
    let m_ge_n = x.m >= x.n;
    let (d1, r1) = mse_phase1_2pce(x);
    let (m, k, s2, p) = (x.m as f64, x.k as f64, x.sigma2, x.p);
    let d_total_3p = frac(m * s2, p);
    let r1_3p = frac((1.0 + k) * m * s2, p * k);

    let mut proposed_direct = d1;
    let mut scaling = Vec::new();
    for user in 0..x.k.saturating_sub(1) {
        let (dk, mu2) = if m_ge_n { mse_phase2_2pce_mgen(x, user)? } else { mse_phase2_2pce_mltn(x, user)? };
        proposed_direct += dk;
        let mu3 = if m_ge_n { mse_3pce_mu_mgen(x, user)? } else { mse_3pce_mu_mltn(x, user)? };
        scaling.push(Comparison::new(mu3, mu2));
    }
    let (literal_condition, derived_condition) = if m_ge_n {
        (None, None)
    } else {
        let (gamma, _) = x.gamma_delta();
        (Some(gamma < x.k + 2), Some(x.k < gamma + 2))
    };
    Ok(TheoremReport {
        m_ge_n,
        direct: Comparison::new(d_total_3p, proposed_direct),
        reflected_typical: Comparison::new(r1_3p, r1),
        scaling,
        literal_condition,
        derived_condition,
    })
}

/// `Mσ²/p (N/(N+1) - (K-1)/(gamma+1))`, the direct-channel gap for `M < N`.
pub fn direct_gap_mltn(x: &AsymptoticInputs) -> f64 {
    let (gamma, _) = x.gamma_delta();
    let (m, n, k) = (x.m as f64, x.n as f64, x.k as f64);
    frac(m * x.sigma2, x.p) * (n / (n + 1.0) - (k - 1.0) / (gamma as f64 + 1.0))
}

/// Channel groups over which NMSE is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    /// Every direct channel.
    D,
    /// Every reflected channel.
    R,
    D1,
    R1,
    /// Direct channels of users 1..K.
    Dk,
    /// Reflected channels of users 1..K.
    Rk,
}

impl Group {
    pub const ALL: [Group; 6] = [Group::D, Group::R, Group::D1, Group::R1, Group::Dk, Group::Rk];

    pub fn label(self) -> &'static str {
        match self {
            Group::D => "d",
            Group::R => "r",
            Group::D1 => "d1",
            Group::R1 => "r1",
            Group::Dk => "dk",
            Group::Rk => "rk",
        }
    }
}

/// Squared errors and channel energies of one trial, per user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialErrors {
    pub hd_err: Vec<f64>,
    pub hd_energy: Vec<f64>,
    pub h_err: Vec<f64>,
    pub h_energy: Vec<f64>,
    /// Users 1..K.
    pub mu_err: Vec<f64>,
    /// `|mu_{k,n}|^2` per user 1..K and element.
    pub mu_sq: Vec<Vec<f64>>,
}

impl TrialErrors {
    pub fn new(real: &ChannelRealization, est: &EstimateSet) -> Self {
        Self {
            hd_err: real.h_d.iter().zip(&est.hd_hat).map(|(h, e)| (e - h).norm_squared()).collect(),
            hd_energy: real.h_d.iter().map(|h| h.norm_squared()).collect(),
            h_err: real.h.iter().zip(&est.hk_hat).map(|(h, e)| (e - h).norm_squared()).collect(),
            h_energy: real.h.iter().map(|h| h.norm_squared()).collect(),
            mu_err: real.mu.iter().zip(&est.mu_hat).map(|(h, e)| (e - h).norm_squared()).collect(),
            mu_sq: real.mu.iter().map(|mu| mu.iter().map(|z| z.norm_sqr()).collect()).collect(),
        }
    }

    /// `(error, energy)` summed over the users in `group`.
    pub fn group_sums(&self, group: Group) -> (f64, f64) {
        let sum = |v: &[f64]| v.iter().sum::<f64>();
        let tail = |v: &[f64]| v.iter().skip(1).sum::<f64>();
        let head = |v: &[f64]| v.first().copied().unwrap_or(0.0);
        match group {
            Group::D => (sum(&self.hd_err), sum(&self.hd_energy)),
            Group::R => (sum(&self.h_err), sum(&self.h_energy)),
            Group::D1 => (head(&self.hd_err), head(&self.hd_energy)),
            Group::R1 => (head(&self.h_err), head(&self.h_energy)),
            Group::Dk => (tail(&self.hd_err), tail(&self.hd_energy)),
            Group::Rk => (tail(&self.h_err), tail(&self.h_energy)),
        }
    }
}

/// Ratio-of-sums estimate with a leave-one-out jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub value: f64,
    pub stderr: f64,
}

pub fn jackknife_ratio(num: &[f64], den: &[f64]) -> Result<RatioEstimate> {
    if num.is_empty() {
        return Err(Error::Empty("trial list"));
    }
    if num.len() != den.len() {
        return Err(Error::Dimension("numerator and denominator lengths differ".into()));
    }
    let (sn, sd): (f64, f64) = (num.iter().sum(), den.iter().sum());
    let value = sn / sd;
    let n = num.len();
    if n == 1 {
        return Ok(RatioEstimate { value, stderr: 0.0 });
    }
    let loo: Vec<f64> = num.iter().zip(den).map(|(a, b)| (sn - a) / (sd - b)).collect();
    let mean = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|r| (r - mean).powi(2)).sum::<f64>() * (n as f64 - 1.0) / n as f64;
    Ok(RatioEstimate { value, stderr: var.sqrt() })
}

/// Sample mean with the standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> Result<RatioEstimate> {
    if xs.is_empty() {
        return Err(Error::Empty("trial list"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Ok(RatioEstimate { value: mean, stderr: 0.0 });
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(RatioEstimate { value: mean, stderr: (var / n).sqrt() })
}

/// NMSE of a group over a set of trials, or `None` when the group is empty
/// (no users 1..K).
pub fn group_nmse(trials: &[TrialErrors], group: Group) -> Result<Option<RatioEstimate>> {
    if trials.is_empty() {
        return Err(Error::Empty("trial list"));
    }
    let (num, den): (Vec<f64>, Vec<f64>) = trials.iter().map(|t| t.group_sums(group)).unzip();
    if den.iter().all(|&d| d == 0.0) {
        return Ok(None);
    }
    jackknife_ratio(&num, &den).map(Some)
}

/// Mean over trials of `E|mu_{k,n}|^2`, per user 1..K and element.
pub fn empirical_mu_moments(trials: &[TrialErrors]) -> Vec<Vec<f64>> {
    let Some(first) = trials.first() else { return Vec::new() };
    let mut acc: Vec<Vec<f64>> = first.mu_sq.iter().map(|v| vec![0.0; v.len()]).collect();
    for t in trials {
        for (a, v) in acc.iter_mut().zip(&t.mu_sq) {
            for (x, y) in a.iter_mut().zip(v) {
                *x += y;
            }
        }
    }
    let n = trials.len() as f64;
    acc.iter_mut().flatten().for_each(|x| *x /= n);
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseEntry {
    pub quantity: String,
    pub group: String,
    pub empirical: f64,
    pub stderr: f64,
    pub predicted: Option<f64>,
    pub trials: usize,
}

/// Empirical NMSE/MSE aggregates with matching predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub strategy: String,
    pub regime: String,
    pub entries: Vec<MseEntry>,
    pub notes: Vec<String>,
}

impl MseReport {
    pub fn entry(&self, quantity: &str, group: &str) -> Option<&MseEntry> {
        self.entries.iter().find(|e| e.quantity == quantity && e.group == group)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Predicted per-quantity MSEs for one strategy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub d1: Option<f64>,
    pub r1: Option<f64>,
    /// Per-user direct-channel MSE for users 1..K.
    pub dk: Option<f64>,
    /// Mean over users 1..K of the scaling-vector MSE.
    pub mu: Option<f64>,
}

/// Predictions matching how a strategy was run. The shared `M < N` layout
/// has no closed form for its Phase-II MSEs, so those stay empty.
pub fn predictions(x: &AsymptoticInputs, strategy: crate::schedule::Strategy, regime: crate::schedule::Regime) -> Predictions {
    use crate::schedule::{Regime, Strategy};
    let users = x.k.saturating_sub(1);
    let mean_mu = |f: &dyn Fn(usize) -> Result<f64>| -> Option<f64> {
        if users == 0 {
            return None;
        }
        let vals: Result<Vec<f64>> = (0..users).map(f).collect();
        vals.ok().map(|v| v.iter().sum::<f64>() / users as f64)
    };
    match strategy {
        Strategy::TwoPhase => {
            let (d1, r1) = mse_phase1_2pce(x);
            let (dk, mu) = match regime {
                Regime::MgeN => (
                    mse_phase2_2pce_mgen(x, 0).ok().map(|v| v.0),
                    mean_mu(&|u| mse_phase2_2pce_mgen(x, u).map(|v| v.1)),
                ),
                Regime::MltNOrthogonal => (
                    mse_phase2_2pce_mltn(x, 0).ok().map(|v| v.0),
                    mean_mu(&|u| mse_phase2_2pce_mltn(x, u).map(|v| v.1)),
                ),
                Regime::MltNShared => (None, None),
            };
            Predictions { d1: Some(d1), r1: Some(r1), dk, mu }
        }
        Strategy::ThreePhase => {
            let per_user = frac(x.m as f64 * x.sigma2, x.p * x.k as f64);
            let k = x.k as f64;
            let mu = if x.m >= x.n {
                mean_mu(&|u| mse_3pce_mu_mgen(x, u))
            } else {
                mean_mu(&|u| mse_3pce_mu_mltn(x, u))
            };
            Predictions {
                d1: Some(per_user),
                r1: Some(frac((1.0 + k) * x.m as f64 * x.sigma2, x.p * k)),
                dk: (users > 0).then_some(per_user),
                mu,
            }
        }
    }
}

/// Builds the report of one strategy from its per-trial errors.
pub fn nmse(trials: &[TrialErrors], pred: &Predictions, strategy: &str, regime: &str) -> Result<MseReport> {
    if trials.is_empty() {
        return Err(Error::Empty("trial list"));
    }
    let count = trials.len();
    let mut entries = Vec::new();
    for g in Group::ALL {
        if let Some(r) = group_nmse(trials, g)? {
            entries.push(MseEntry {
                quantity: "nmse".into(),
                group: g.label().into(),
                empirical: r.value,
                stderr: r.stderr,
                predicted: None,
                trials: count,
            });
        }
    }
    let users = trials[0].hd_err.len().saturating_sub(1);
    let per_trial = |f: &dyn Fn(&TrialErrors) -> f64| trials.iter().map(f).collect::<Vec<f64>>();
    let mut push_mse = |group: &str, xs: Vec<f64>, predicted: Option<f64>| -> Result<()> {
        let r = mean_stderr(&xs)?;
        entries.push(MseEntry {
            quantity: "mse".into(),
            group: group.into(),
            empirical: r.value,
            stderr: r.stderr,
            predicted,
            trials: count,
        });
        Ok(())
    };
    push_mse("d1", per_trial(&|t| t.hd_err[0]), pred.d1)?;
    push_mse("r1", per_trial(&|t| t.h_err[0]), pred.r1)?;
    if users > 0 {
        let u = users as f64;
        push_mse("dk", per_trial(&|t| t.hd_err[1..].iter().sum::<f64>() / u), pred.dk)?;
        push_mse("mu", per_trial(&|t| t.mu_err.iter().sum::<f64>() / u), pred.mu)?;
    }
    let mut notes = Vec::new();
    if users > 0 {
        notes.push(
            "E|mu|^2 has no finite value under Rayleigh user-IRS links; predictions use the trial-set mean".into(),
        );
    }
    Ok(MseReport { strategy: strategy.into(), regime: regime.into(), entries, notes })
}
