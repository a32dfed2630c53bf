//! Received-signal simulation and the least-squares estimators of both
//! strategies.

use rand::Rng;

use crate::channel::{complex_gaussian, reflected, ChannelRealization};
use crate::error::{Error, Result};
use crate::linalg::{c64, pinv_full_column_rank, CMatrix, CVector, C64};
use crate::schedule::{Regime, Strategy, TrainingSchedule};

/// Largest condition number accepted for an LS design matrix.
pub const MAX_DESIGN_CONDITION: f64 = 1e10;

/// Received training signals, one column per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    pub y: CMatrix,
    pub noise_variance: f64,
}

/// Estimated channels of every user.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSet {
    pub hd_hat: Vec<CVector>,
    pub h1_hat: CMatrix,
    /// Scaling vectors of users 1..K (0-based user index minus one).
    pub mu_hat: Vec<CVector>,
    /// Reflected channels; entry 0 is `h1_hat`, the rest `h1_hat diag(mu)`.
    pub hk_hat: Vec<CMatrix>,
}

impl EstimateSet {
    pub fn new(hd_hat: Vec<CVector>, h1_hat: CMatrix, mu_hat: Vec<CVector>) -> Self {
        let mut hk_hat = Vec::with_capacity(mu_hat.len() + 1);
        hk_hat.push(h1_hat.clone());
        hk_hat.extend(mu_hat.iter().map(|mu| reflected(&h1_hat, mu)));
        Self { hd_hat, h1_hat, mu_hat, hk_hat }
    }
}

fn stack_columns(vs: &[CVector], rows: usize) -> CMatrix {
    CMatrix::from_fn(rows, vs.len(), |r, c| vs[c][r])
}

/// Noise-free received signal `sqrt(p) (H_d A + G ((H_r A) o Theta))`.
pub fn noiseless_rx(real: &ChannelRealization, sched: &TrainingSchedule, p: f64) -> Result<CMatrix> {
    let (m, n, k) = (real.m(), real.n(), real.k());
    if sched.n != n || sched.k != k {
        return Err(Error::Dimension(format!(
            "schedule is for N={}, K={} but the channel has N={n}, K={k}",
            sched.n, sched.k
        )));
    }
    let hd = stack_columns(&real.h_d, m);
    let hr = stack_columns(&real.h_r, n);
    let v = (hr * &sched.pilots).component_mul(&sched.patterns);
    Ok((hd * &sched.pilots + &real.g * v) * c64(p.sqrt(), 0.0))
}

/// Received signal with fresh `CN(0, sigma2 I)` noise in every slot.
pub fn simulate_rx<R: Rng + ?Sized>(
    real: &ChannelRealization,
    sched: &TrainingSchedule,
    p: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<ReceivedBlock> {
    let mut y = noiseless_rx(real, sched, p)?;
    if sigma2 > 0.0 {
        // column-major fill: slot by slot
        for z in y.iter_mut() {
            *z += complex_gaussian(rng, sigma2);
        }
    }
    Ok(ReceivedBlock { y, noise_variance: sigma2 })
}

fn span_columns(y: &CMatrix, start: usize, len: usize) -> CMatrix {
    y.columns(start, len).into_owned()
}

/// Phase I: `[h_d,1, H_1] = Y_I V_I^H / (sqrt(p) (N + 1))`.
pub fn phase1_estimate(y_phase1: &CMatrix, v_phase1: &CMatrix, p: f64) -> (CVector, CMatrix) {
    let n1 = v_phase1.nrows();
    let x = y_phase1 * v_phase1.adjoint() * c64(1.0 / (p.sqrt() * n1 as f64), 0.0);
    let hd1 = x.column(0).into_owned();
    let h1 = x.columns(1, n1 - 1).into_owned();
    (hd1, h1)
}

/// Direct-channel and scaling-vector estimates of users 1..K from Phase II.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase2Estimate {
    pub hd_hat: Vec<CVector>,
    pub mu_hat: Vec<CVector>,
}

fn h1_pinv(h1_hat: &CMatrix) -> Result<CMatrix> {
    pinv_full_column_rank(h1_hat, "estimated reflected channel of the typical user", MAX_DESIGN_CONDITION)
}

/// Correlates slots `[start, start + len)` with each user's pilots and
/// normalizes by `sqrt(p) * len`.
fn decorrelate(y: &CMatrix, pilots: &CMatrix, user: usize, start: usize, len: usize, p: f64) -> CVector {
    let mut z = CVector::zeros(y.nrows());
    for i in start..start + len {
        let a = pilots[(user, i)];
        if a != C64::from(0.0) {
            z += y.column(i) * a.conj();
        }
    }
    z / c64(p.sqrt() * len as f64, 0.0)
}

/// `M >= N` Phase II. The pilot correlation over each half gives
/// `z+ = h_d + H_1 mu` and `z- = h_d - H_1 mu`, and the LS solution of
/// `[H_1, I; -H_1, I] [mu; h_d] = [z+; z-]` splits into
/// `mu = H_1^+ (z+ - z-) / 2`, `h_d = (z+ + z-) / 2`.
pub fn phase2_estimate_mgen(y2: &CMatrix, h1_hat: &CMatrix, sched: &TrainingSchedule, p: f64) -> Result<Phase2Estimate> {
    let others = sched.k - 1;
    let span = sched.phase("II").ok_or(Error::Empty("Phase II span"))?;
    if span.len() != 2 * others || y2.ncols() != span.len() {
        return Err(Error::Dimension(format!(
            "Phase II needs {} slots, got {}",
            2 * others,
            y2.ncols()
        )));
    }
    let pilots = sched.pilots.columns(span.start, span.len()).into_owned();
    let pinv = h1_pinv(h1_hat)?;
    let mut hd_hat = Vec::with_capacity(others);
    let mut mu_hat = Vec::with_capacity(others);
    for user in 1..sched.k {
        let plus = decorrelate(y2, &pilots, user, 0, others, p);
        let minus = decorrelate(y2, &pilots, user, others, others, p);
        mu_hat.push(&pinv * (&plus - &minus) * c64(0.5, 0.0));
        hd_hat.push((plus + minus) * c64(0.5, 0.0));
    }
    Ok(Phase2Estimate { hd_hat, mu_hat })
}

/// Design matrix `[H_1 diag(theta_i)|_cols, I]` stacked over `slots`, for a
/// user transmitting alone with unit pilots.
fn solo_design(h1_hat: &CMatrix, patterns: &CMatrix, slots: &[usize], cols: &[usize]) -> CMatrix {
    let m = h1_hat.nrows();
    let unknowns = cols.len() + m;
    let mut q = CMatrix::zeros(m * slots.len(), unknowns);
    for (b, &i) in slots.iter().enumerate() {
        for (j, &e) in cols.iter().enumerate() {
            let theta = patterns[(e, i)];
            if theta != C64::from(0.0) {
                q.view_mut((b * m, j), (m, 1)).copy_from(&(h1_hat.column(e) * theta));
            }
        }
        q.view_mut((b * m, cols.len()), (m, m)).fill_with_identity();
    }
    q
}

fn stack_slots(y: &CMatrix, slots: &[usize]) -> CVector {
    let m = y.nrows();
    CVector::from_fn(m * slots.len(), |r, _| y[(r % m, slots[r / m])])
}

/// Slots in which `user` transmits, in order.
fn user_slots(sched: &TrainingSchedule, user: usize, start: usize, end: usize) -> Vec<usize> {
    (start..end).filter(|&i| sched.pilots[(user, i)] != C64::from(0.0)).collect()
}

/// Orthogonal `M < N` Phase II: per user, `[mu; h_d] = Q^+ y / sqrt(p)`.
pub fn phase2_estimate_mltn_orthogonal(
    y: &CMatrix,
    h1_hat: &CMatrix,
    sched: &TrainingSchedule,
    p: f64,
) -> Result<Phase2Estimate> {
    let span = sched.phase("II").ok_or(Error::Empty("Phase II span"))?;
    let (m, n) = (h1_hat.nrows(), h1_hat.ncols());
    let all: Vec<usize> = (0..n).collect();
    let mut out = Phase2Estimate { hd_hat: Vec::new(), mu_hat: Vec::new() };
    for user in 1..sched.k {
        let slots = user_slots(sched, user, span.start, span.end);
        let q = solo_design(h1_hat, &sched.patterns, &slots, &all);
        let q_pinv = pinv_full_column_rank(&q, &format!("Phase II design of user {}", user + 1), MAX_DESIGN_CONDITION)?;
        let x = q_pinv * stack_slots(y, &slots) / c64(p.sqrt(), 0.0);
        out.mu_hat.push(x.rows(0, n).into_owned());
        out.hd_hat.push(x.rows(n, m).into_owned());
    }
    Ok(out)
}

/// Shared `M < N` Phase II. Phase II-A solves each user's `chi_A` factors
/// together with its direct channel; Phase II-B removes every known
/// contribution from each shared slot and solves for the slot's assigned
/// factors.
pub fn phase2_estimate_mltn_shared(
    y: &CMatrix,
    h1_hat: &CMatrix,
    sched: &TrainingSchedule,
    p: f64,
) -> Result<Phase2Estimate> {
    let span_a = sched.phase("II-A").ok_or(Error::Empty("Phase II-A span"))?;
    let span_b = sched.phase("II-B").ok_or(Error::Empty("Phase II-B span"))?;
    let (m, n) = (h1_hat.nrows(), h1_hat.ncols());
    let sqrt_p = c64(p.sqrt(), 0.0);
    let mut hd_hat = Vec::new();
    let mut mu_hat = Vec::new();
    let mut known: Vec<Vec<bool>> = Vec::new();

    for user in 1..sched.k {
        let slots = user_slots(sched, user, span_a.start, span_a.end);
        let chi_a: Vec<usize> = (0..n)
            .filter(|&e| slots.iter().any(|&i| sched.patterns[(e, i)] != C64::from(0.0)))
            .collect();
        let v = solo_design(h1_hat, &sched.patterns, &slots, &chi_a);
        let v_pinv = pinv_full_column_rank(&v, &format!("Phase II-A design of user {}", user + 1), MAX_DESIGN_CONDITION)?;
        let x = v_pinv * stack_slots(y, &slots) / sqrt_p;
        let mut mu = CVector::zeros(n);
        let mut mask = vec![false; n];
        for (j, &e) in chi_a.iter().enumerate() {
            mu[e] = x[j];
            mask[e] = true;
        }
        mu_hat.push(mu);
        known.push(mask);
        hd_hat.push(x.rows(chi_a.len(), m).into_owned());
    }

    for i in span_b.start..span_b.end {
        let sets = sched.active_sets[i]
            .as_ref()
            .ok_or_else(|| Error::Dimension(format!("slot {i} of Phase II-B has no user/element assignment")))?;
        let mut residual = y.column(i) / sqrt_p;
        let active: Vec<usize> = (1..sched.k).filter(|&u| sched.pilots[(u, i)] != C64::from(0.0)).collect();
        for &u in &active {
            let a = sched.pilots[(u, i)];
            residual -= &hd_hat[u - 1] * a;
            for e in 0..n {
                let theta = sched.patterns[(e, i)];
                if theta == C64::from(0.0) {
                    continue;
                }
                let assigned = sets.users.iter().zip(&sets.elements).any(|(&su, &se)| su == u && se == e);
                if assigned {
                    continue;
                }
                if !known[u - 1][e] {
                    return Err(Error::Unsupported(format!(
                        "slot {i} mixes the unknown factor of user {} at element {e}",
                        u + 1
                    )));
                }
                residual -= h1_hat.column(e) * (a * theta * mu_hat[u - 1][e]);
            }
        }
        let mut design = CMatrix::zeros(m, sets.users.len());
        for (j, (&u, &e)) in sets.users.iter().zip(&sets.elements).enumerate() {
            let coeff = sched.pilots[(u, i)] * sched.patterns[(e, i)];
            design.set_column(j, &(h1_hat.column(e) * coeff));
        }
        let d_pinv = pinv_full_column_rank(&design, &format!("Phase II-B slot {i}"), MAX_DESIGN_CONDITION)?;
        let c = d_pinv * residual;
        for (j, (&u, &e)) in sets.users.iter().zip(&sets.elements).enumerate() {
            mu_hat[u - 1][e] = c[j];
            known[u - 1][e] = true;
        }
    }
    if let Some((u, _)) = known.iter().enumerate().find(|(_, k)| k.iter().any(|b| !b)) {
        return Err(Error::Unsupported(format!("schedule leaves factors of user {} unestimated", u + 2)));
    }
    Ok(Phase2Estimate { hd_hat, mu_hat })
}

/// Runs the full 2PCE estimator on a received block.
pub fn estimate_2pce(y: &CMatrix, sched: &TrainingSchedule, p: f64) -> Result<EstimateSet> {
    let n = sched.n;
    let v1 = crate::schedule::phase1_schedule(n);
    let (hd1, h1) = phase1_estimate(&y.columns(0, n + 1).into_owned(), &v1, p);
    let mut hd_hat = vec![hd1];
    let mut mu_hat = Vec::new();
    if sched.k >= 2 {
        let est = match sched.regime {
            Regime::MgeN => {
                let span = sched.phase("II").ok_or(Error::Empty("Phase II span"))?;
                phase2_estimate_mgen(&span_columns(y, span.start, span.len()), &h1, sched, p)?
            }
            Regime::MltNShared => phase2_estimate_mltn_shared(y, &h1, sched, p)?,
            Regime::MltNOrthogonal => phase2_estimate_mltn_orthogonal(y, &h1, sched, p)?,
        };
        hd_hat.extend(est.hd_hat);
        mu_hat = est.mu_hat;
    }
    Ok(EstimateSet::new(hd_hat, h1, mu_hat))
}

/// Runs the full 3PCE estimator on a received block.
pub fn estimate_3pce(y: &CMatrix, sched: &TrainingSchedule, p: f64) -> Result<EstimateSet> {
    let (k, n) = (sched.k, sched.n);
    let m = y.nrows();
    let sqrt_p = c64(p.sqrt(), 0.0);
    let s1 = sched.phase("1").ok_or(Error::Empty("phase 1 span"))?;
    let s2 = sched.phase("2").ok_or(Error::Empty("phase 2 span"))?;

    let hd_hat: Vec<CVector> = (0..k).map(|u| decorrelate(y, &sched.pilots, u, s1.start, s1.len(), p)).collect();

    // Theta Theta^H = N I for the DFT patterns
    let theta = sched.patterns.columns(s2.start, s2.len());
    let mut y2 = y.columns(s2.start, s2.len()) / sqrt_p;
    for mut col in y2.column_iter_mut() {
        col -= &hd_hat[0];
    }
    let h1_hat = y2 * theta.adjoint() / c64(n as f64, 0.0);

    let mut mu_hat = Vec::new();
    if k >= 2 {
        let s3 = sched.phase("3").ok_or(Error::Empty("phase 3 span"))?;
        if sched.regime == Regime::MgeN {
            let pinv = h1_pinv(&h1_hat)?;
            for u in 1..k {
                let z = decorrelate(y, &sched.pilots, u, s3.start, s3.len(), p);
                mu_hat.push(&pinv * (z - &hd_hat[u]));
            }
        } else {
            // joint LS over every scaling factor of users 1..K
            let unknowns = (k - 1) * n;
            let mut design = CMatrix::zeros(m * s3.len(), unknowns);
            let mut rhs = CVector::zeros(m * s3.len());
            for (b, i) in (s3.start..s3.end).enumerate() {
                let mut z = y.column(i) / sqrt_p;
                for u in 1..k {
                    let a = sched.pilots[(u, i)];
                    if a == C64::from(0.0) {
                        continue;
                    }
                    z -= &hd_hat[u] * a;
                    for e in 0..n {
                        let th = sched.patterns[(e, i)];
                        if th != C64::from(0.0) {
                            let col = (u - 1) * n + e;
                            design.view_mut((b * m, col), (m, 1)).copy_from(&(h1_hat.column(e) * (a * th)));
                        }
                    }
                }
                rhs.rows_mut(b * m, m).copy_from(&z);
            }
            let pinv = pinv_full_column_rank(&design, "phase 3 scaling-factor design", MAX_DESIGN_CONDITION)?;
            let x = pinv * rhs;
            mu_hat = (0..k - 1).map(|u| x.rows(u * n, n).into_owned()).collect();
        }
    }
    Ok(EstimateSet::new(hd_hat, h1_hat, mu_hat))
}

pub fn estimate(y: &CMatrix, sched: &TrainingSchedule, p: f64) -> Result<EstimateSet> {
    match sched.strategy {
        Strategy::TwoPhase => estimate_2pce(y, sched, p),
        Strategy::ThreePhase => estimate_3pce(y, sched, p),
    }
}

/// Simulates the training of a strategy on one realization and estimates
/// every channel.
pub fn run_strategy<R: Rng + ?Sized>(
    real: &ChannelRealization,
    sched: &TrainingSchedule,
    p: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<EstimateSet> {
    let rx = simulate_rx(real, sched, p, sigma2, rng)?;
    estimate(&rx.y, sched, p)
}

pub fn run_2pce<R: Rng + ?Sized>(
    real: &ChannelRealization,
    cfg: &crate::channel::SystemConfig,
    rng: &mut R,
) -> Result<EstimateSet> {
    let sched = crate::schedule::schedule_2pce(cfg.m, cfg.n(), cfg.k, cfg.mltn_regime)?;
    run_strategy(real, &sched, cfg.p_mw(), cfg.noise_mw(), rng)
}

pub fn run_3pce<R: Rng + ?Sized>(
    real: &ChannelRealization,
    cfg: &crate::channel::SystemConfig,
    rng: &mut R,
) -> Result<EstimateSet> {
    let sched = crate::schedule::schedule_3pce(cfg.m, cfg.n(), cfg.k)?;
    run_strategy(real, &sched, cfg.p_mw(), cfg.noise_mw(), rng)
}

/// Relative Frobenius error of every estimated channel, worst case.
pub fn max_relative_error(real: &ChannelRealization, est: &EstimateSet) -> f64 {
    let mut worst: f64 = 0.0;
    for (h, e) in real.h_d.iter().zip(&est.hd_hat) {
        worst = worst.max((e - h).norm() / h.norm());
    }
    for (h, e) in real.h.iter().zip(&est.hk_hat) {
        worst = worst.max((e - h).norm() / h.norm());
    }
    worst
}
