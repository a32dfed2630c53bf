//! System configuration, array geometry and channel realizations.
//!
//! The BS is a ULA along the x axis and the IRS is a UPA in the y-z plane.
//! Every link is spatially correlated Rician: a deterministic steering
//! component plus a correlated Rayleigh component, each scaled by the per-pair
//! path loss.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_sqrt, kron, CMatrix, CVector, C64};

/// Entries of `h_r,1` below this modulus make the scaling vectors undefined.
pub const SCALING_FLOOR: f64 = 1e-12;

/// Distances below this are treated as coincident points.
const MIN_DISTANCE: f64 = 1e-9;

pub type Point = [f64; 3];

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: &Point) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

/// How the Phase-II training of the 2PCE strategy is laid out when `M < N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SharingRegime {
    /// Minimal overhead: users share Phase II-B slots.
    #[default]
    Shared,
    /// Each user gets its own `gamma + 1` slots.
    Orthogonal,
}

/// All scalar parameters of one simulated system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub m: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub k: usize,
    pub p_dbm: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub bandwidth_hz: f64,
    /// Overrides the PSD/bandwidth noise power when set (mW).
    pub noise_override_mw: Option<f64>,
    /// Rician factors, linear.
    pub beta_ub: f64,
    pub beta_ui: f64,
    pub beta_ib: f64,
    pub alpha_ub: f64,
    pub alpha_ui: f64,
    pub alpha_ib: f64,
    pub r_d: f64,
    pub r_r: f64,
    pub r_rk: f64,
    pub l0_db: f64,
    pub d0_m: f64,
    pub lambda_m: f64,
    pub bs_ref: Point,
    pub irs_ref: Point,
    /// Explicit user positions. `None` places the users on the default circle.
    pub user_positions: Option<Vec<Point>>,
    /// Collapse every per-pair path loss to its reference-point distance.
    pub reference_loss: bool,
    pub mltn_regime: SharingRegime,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            m: 40,
            n_y: 4,
            n_z: 8,
            k: 4,
            p_dbm: 20.0,
            noise_psd_dbm_per_hz: -169.0,
            bandwidth_hz: 1e6,
            noise_override_mw: None,
            beta_ub: 0.0,
            beta_ui: 0.0,
            beta_ib: db_to_linear(3.0),
            alpha_ub: 5.0,
            alpha_ui: 2.2,
            alpha_ib: 2.2,
            r_d: 0.0,
            r_r: 0.0,
            r_rk: 0.0,
            l0_db: -30.0,
            d0_m: 1.0,
            lambda_m: 0.1,
            bs_ref: [2.0, 0.0, 0.0],
            irs_ref: [0.0, 45.0, 2.0],
            user_positions: None,
            reference_loss: false,
            mltn_regime: SharingRegime::Shared,
        }
    }
}

/// Centre and radius of the default user circle (z = 0 plane).
pub const USER_CIRCLE_CENTRE: Point = [0.0, 48.0, 0.0];
pub const USER_CIRCLE_RADIUS: f64 = 3.0;

impl SystemConfig {
    pub fn n(&self) -> usize {
        self.n_y * self.n_z
    }

    /// Transmit power in mW.
    pub fn p_mw(&self) -> f64 {
        db_to_linear(self.p_dbm)
    }

    /// Noise power in mW.
    pub fn noise_mw(&self) -> f64 {
        self.noise_override_mw
            .unwrap_or_else(|| db_to_linear(self.noise_psd_dbm_per_hz + linear_to_db(self.bandwidth_hz)))
    }

    pub fn users(&self) -> Vec<Point> {
        match &self.user_positions {
            Some(p) => p.clone(),
            None => (0..self.k)
                .map(|k| {
                    let a = 2.0 * PI * (k + 1) as f64 / self.k as f64;
                    [
                        USER_CIRCLE_CENTRE[0] + USER_CIRCLE_RADIUS * a.cos(),
                        USER_CIRCLE_CENTRE[1] + USER_CIRCLE_RADIUS * a.sin(),
                        USER_CIRCLE_CENTRE[2],
                    ]
                })
                .collect(),
        }
    }

    /// Sets `n_y` and `n_z` for a target `N`, keeping `n_y` when it divides
    /// `N` and falling back to a single row otherwise.
    pub fn set_n(&mut self, n: usize) {
        if self.n_y >= 1 && n.is_multiple_of(self.n_y) {
            self.n_z = n / self.n_y;
        } else {
            self.n_y = n;
            self.n_z = 1;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m < 1 || self.k < 1 || self.n_y < 1 || self.n_z < 1 {
            return bad(format!(
                "M, K, N_y, N_z must be at least 1 (got M={}, K={}, N_y={}, N_z={})",
                self.m, self.k, self.n_y, self.n_z
            ));
        }
        for (name, v) in [("beta_ub", self.beta_ub), ("beta_ui", self.beta_ui), ("beta_ib", self.beta_ib)] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        for (name, v) in [("alpha_ub", self.alpha_ub), ("alpha_ui", self.alpha_ui), ("alpha_ib", self.alpha_ib)] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("r_d", self.r_d), ("r_r", self.r_r), ("r_rk", self.r_rk)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.d0_m > 0.0) || !(self.lambda_m > 0.0) || !(self.bandwidth_hz > 0.0) {
            return bad("d0_m, lambda_m and bandwidth_hz must be positive".into());
        }
        if let Some(v) = self.noise_override_mw {
            if !(v >= 0.0) {
                return bad(format!("noise_override_mw must be non-negative, got {v}"));
            }
        }
        if let Some(p) = &self.user_positions {
            if p.len() != self.k {
                return bad(format!("{} user positions given for K = {}", p.len(), self.k));
            }
        }
        Ok(())
    }
}

/// Array positions and reference-point angles.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub bs_antennas: Vec<Point>,
    pub irs_elements: Vec<Point>,
    pub users: Vec<Point>,
    /// AoA at the BS from each user.
    pub theta_ub: Vec<f64>,
    /// AoA at the BS from the IRS.
    pub theta_ib: f64,
    /// Elevation and azimuth AoA at the IRS from each user.
    pub phi_ui: Vec<f64>,
    pub psi_ui: Vec<f64>,
    /// Elevation and azimuth AoD from the IRS towards the BS.
    pub phi_ib: f64,
    pub psi_ib: f64,
    pub d_bs: f64,
    pub d_irs: f64,
}

/// Angle off broadside of a ULA along x, for a unit direction `u`.
fn ula_angle(u: &Point) -> f64 {
    u[0].clamp(-1.0, 1.0).asin()
}

/// Elevation from the x axis and azimuth in the y-z plane.
fn upa_angles(u: &Point) -> (f64, f64) {
    (u[0].clamp(-1.0, 1.0).acos(), u[2].atan2(u[1]))
}

fn unit(from: &Point, to: &Point, what: &str) -> Result<Point> {
    let d = sub(to, from);
    let len = norm(&d);
    if len < MIN_DISTANCE {
        return Err(Error::Geometry(format!("{what}: points coincide")));
    }
    Ok([d[0] / len, d[1] / len, d[2] / len])
}

pub fn build_geometry(cfg: &SystemConfig) -> Result<Geometry> {
    cfg.validate()?;
    let d_bs = cfg.lambda_m / 2.0;
    let d_irs = cfg.lambda_m / 8.0;
    let bs_antennas = (0..cfg.m)
        .map(|m| [cfg.bs_ref[0] + m as f64 * d_bs, cfg.bs_ref[1], cfg.bs_ref[2]])
        .collect();
    let irs_elements = (0..cfg.n())
        .map(|n| {
            [
                cfg.irs_ref[0],
                cfg.irs_ref[1] + (n % cfg.n_y) as f64 * d_irs,
                cfg.irs_ref[2] + (n / cfg.n_y) as f64 * d_irs,
            ]
        })
        .collect();
    let users = cfg.users();

    let mut theta_ub = Vec::with_capacity(cfg.k);
    let mut phi_ui = Vec::with_capacity(cfg.k);
    let mut psi_ui = Vec::with_capacity(cfg.k);
    for (k, u) in users.iter().enumerate() {
        theta_ub.push(ula_angle(&unit(&cfg.bs_ref, u, &format!("user {} and BS", k + 1))?));
        let (phi, psi) = upa_angles(&unit(&cfg.irs_ref, u, &format!("user {} and IRS", k + 1))?);
        phi_ui.push(phi);
        psi_ui.push(psi);
    }
    let theta_ib = ula_angle(&unit(&cfg.bs_ref, &cfg.irs_ref, "IRS and BS")?);
    let (phi_ib, psi_ib) = upa_angles(&unit(&cfg.irs_ref, &cfg.bs_ref, "IRS and BS")?);

    Ok(Geometry {
        bs_antennas,
        irs_elements,
        users,
        theta_ub,
        theta_ib,
        phi_ui,
        psi_ui,
        phi_ib,
        psi_ib,
        d_bs,
        d_irs,
    })
}

/// Distance-dependent path loss `l0 (d / d0)^-alpha`, linear.
pub fn path_loss(distance_m: f64, exponent: f64, cfg: &SystemConfig) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::Geometry(format!("path loss needs a positive distance, got {distance_m}")));
    }
    Ok(db_to_linear(cfg.l0_db) * (distance_m / cfg.d0_m).powf(-exponent))
}

/// Exponential correlation matrix, `[Phi]_{ij} = r^(j-i)` for `i <= j`.
pub fn exp_corr_matrix(r: f64, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| c64(r.powi((j as i64 - i as i64).unsigned_abs() as i32), 0.0))
}

/// Scalar losses between reference points, used by the closed-form MSEs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceLosses {
    pub ub1: f64,
    pub ui1: f64,
    pub ib: f64,
}

pub fn reference_losses(cfg: &SystemConfig) -> Result<ReferenceLosses> {
    let users = cfg.users();
    let u1 = users.first().ok_or(Error::Empty("user positions"))?;
    Ok(ReferenceLosses {
        ub1: path_loss(distance(u1, &cfg.bs_ref), cfg.alpha_ub, cfg)?,
        ui1: path_loss(distance(u1, &cfg.irs_ref), cfg.alpha_ui, cfg)?,
        ib: path_loss(distance(&cfg.irs_ref, &cfg.bs_ref), cfg.alpha_ib, cfg)?,
    })
}

/// One coherence-block draw of every channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_d: Vec<CVector>,
    pub h_r: Vec<CVector>,
    pub g: CMatrix,
    /// Reflected channels `G diag(h_r,k)`.
    pub h: Vec<CMatrix>,
    /// Scaling vectors `h_r,k / h_r,1` for users 2..K.
    pub mu: Vec<CVector>,
}

impl ChannelRealization {
    /// Builds the derived channels from `h_d`, `h_r` and `G`.
    pub fn from_parts(h_d: Vec<CVector>, h_r: Vec<CVector>, g: CMatrix) -> Result<Self> {
        let first = h_r.first().ok_or(Error::Empty("reflected channels"))?;
        if first.iter().any(|z| z.norm() < SCALING_FLOOR) {
            return Err(Error::DegenerateScaling { threshold: SCALING_FLOOR });
        }
        let h: Vec<CMatrix> = h_r.iter().map(|hr| reflected(&g, hr)).collect();
        let mu = h_r[1..].iter().map(|hr| hr.component_div(first)).collect();
        Ok(Self { h_d, h_r, g, h, mu })
    }

    pub fn k(&self) -> usize {
        self.h_d.len()
    }

    pub fn m(&self) -> usize {
        self.g.nrows()
    }

    pub fn n(&self) -> usize {
        self.g.ncols()
    }
}

/// `G diag(v)`.
pub fn reflected(g: &CMatrix, v: &CVector) -> CMatrix {
    let mut h = g.clone();
    for (j, mut col) in h.column_iter_mut().enumerate() {
        col *= v[j];
    }
    h
}

/// Draws `CN(0, v)` with independent real and imaginary parts of variance `v/2`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(s * re, s * im)
}

/// Correlation square root, or `None` when it is the identity.
fn corr_sqrt(r: f64, dims: &[usize]) -> Result<Option<CMatrix>> {
    if r == 0.0 {
        return Ok(None);
    }
    // Vertical (slow) index outer, horizontal (fast) index inner, matching
    // element numbering n = row * N_y + column.
    let mut phi = CMatrix::identity(1, 1);
    for &d in dims {
        phi = kron(&phi, &exp_corr_matrix(r, d));
    }
    Ok(Some(hermitian_sqrt(&phi)?))
}

fn apply(s: &Option<CMatrix>, v: CVector) -> CVector {
    match s {
        Some(s) => s * v,
        None => v,
    }
}

/// Precomputed path losses, steering components and correlation roots for a
/// fixed configuration.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    pub geometry: Geometry,
    /// `l_ub[k][m]`
    pub l_ub: Vec<Vec<f64>>,
    /// `l_ui[k][n]`
    pub l_ui: Vec<Vec<f64>>,
    /// `l_ib[(m, n)]`
    pub l_ib: nalgebra::DMatrix<f64>,
    los_d: Vec<CVector>,
    los_r: Vec<CVector>,
    los_g: CMatrix,
    sqrt_d: Option<CMatrix>,
    sqrt_r: Option<CMatrix>,
    sqrt_rk: Option<CMatrix>,
    w_ub: (f64, f64),
    w_ui: (f64, f64),
    w_ib: (f64, f64),
}

fn rician_weights(beta: f64) -> (f64, f64) {
    ((beta / (1.0 + beta)).sqrt(), (1.0 / (1.0 + beta)).sqrt())
}

impl ChannelSampler {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        let geometry = build_geometry(cfg)?;
        let (m_count, n_count) = (cfg.m, cfg.n());
        let bs_ref = cfg.bs_ref;
        let irs_ref = cfg.irs_ref;
        let pair = |a: &Point, b: &Point, ra: &Point, rb: &Point| {
            if cfg.reference_loss {
                distance(ra, rb)
            } else {
                distance(a, b)
            }
        };

        let mut l_ub = Vec::with_capacity(cfg.k);
        let mut l_ui = Vec::with_capacity(cfg.k);
        for u in &geometry.users {
            l_ub.push(
                geometry
                    .bs_antennas
                    .iter()
                    .map(|a| path_loss(pair(u, a, u, &bs_ref), cfg.alpha_ub, cfg))
                    .collect::<Result<Vec<_>>>()?,
            );
            l_ui.push(
                geometry
                    .irs_elements
                    .iter()
                    .map(|e| path_loss(pair(u, e, u, &irs_ref), cfg.alpha_ui, cfg))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let mut l_ib = nalgebra::DMatrix::zeros(m_count, n_count);
        for (mi, a) in geometry.bs_antennas.iter().enumerate() {
            for (ni, e) in geometry.irs_elements.iter().enumerate() {
                l_ib[(mi, ni)] = path_loss(pair(a, e, &bs_ref, &irs_ref), cfg.alpha_ib, cfg)?;
            }
        }

        let ula = |theta: f64| -> CVector {
            CVector::from_fn(m_count, |m, _| {
                C64::from_polar(1.0, 2.0 * PI * m as f64 * geometry.d_bs * theta.sin() / cfg.lambda_m)
            })
        };
        let upa = |phi: f64, psi: f64| -> CVector {
            CVector::from_fn(n_count, |n, _| {
                let h = (n % cfg.n_y) as f64;
                let v = (n / cfg.n_y) as f64;
                let phase = h * phi.sin() * psi.cos() + v * phi.sin() * psi.sin();
                C64::from_polar(1.0, 2.0 * PI * geometry.d_irs * phase / cfg.lambda_m)
            })
        };
        let los_d = (0..cfg.k)
            .map(|k| {
                let f = ula(geometry.theta_ub[k]);
                CVector::from_fn(m_count, |m, _| f[m] * l_ub[k][m].sqrt())
            })
            .collect();
        let los_r = (0..cfg.k)
            .map(|k| {
                let f = upa(geometry.phi_ui[k], geometry.psi_ui[k]);
                CVector::from_fn(n_count, |n, _| f[n] * l_ui[k][n].sqrt())
            })
            .collect();
        let f_l = ula(geometry.theta_ib);
        let f_p = upa(geometry.phi_ib, geometry.psi_ib);
        let los_g = CMatrix::from_fn(m_count, n_count, |m, n| f_l[m] * f_p[n] * l_ib[(m, n)].sqrt());

        Ok(Self {
            sqrt_d: corr_sqrt(cfg.r_d, &[m_count])?,
            sqrt_r: corr_sqrt(cfg.r_r, &[cfg.n_z, cfg.n_y])?,
            sqrt_rk: corr_sqrt(cfg.r_rk, &[cfg.n_z, cfg.n_y])?,
            w_ub: rician_weights(cfg.beta_ub),
            w_ui: rician_weights(cfg.beta_ui),
            w_ib: rician_weights(cfg.beta_ib),
            geometry,
            l_ub,
            l_ui,
            l_ib,
            los_d,
            los_r,
            los_g,
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<CVector>, Vec<CVector>, CMatrix) {
        let (m_count, n_count) = self.l_ib.shape();
        let h_d = self
            .l_ub
            .iter()
            .zip(&self.los_d)
            .map(|(l, los)| {
                let z = CVector::from_iterator(m_count, l.iter().map(|&v| complex_gaussian(rng, v)));
                los * c64(self.w_ub.0, 0.0) + apply(&self.sqrt_d, z) * c64(self.w_ub.1, 0.0)
            })
            .collect();
        let h_r = self
            .l_ui
            .iter()
            .zip(&self.los_r)
            .map(|(l, los)| {
                let z = CVector::from_iterator(n_count, l.iter().map(|&v| complex_gaussian(rng, v)));
                los * c64(self.w_ui.0, 0.0) + apply(&self.sqrt_rk, z) * c64(self.w_ui.1, 0.0)
            })
            .collect();
        // nalgebra fills column-major; the draw order is part of the seed contract
        let mut f = CMatrix::from_fn(m_count, n_count, |m, n| complex_gaussian(rng, self.l_ib[(m, n)]));
        if let Some(s) = &self.sqrt_d {
            f = s * f;
        }
        if let Some(s) = &self.sqrt_r {
            f *= s;
        }
        let g = &self.los_g * c64(self.w_ib.0, 0.0) + f * c64(self.w_ib.1, 0.0);
        (h_d, h_r, g)
    }

    /// Draws one realization, resampling once if `h_r,1` has a vanishing entry.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization> {
        let mut last = Err(Error::DegenerateScaling { threshold: SCALING_FLOOR });
        for _ in 0..2 {
            let (h_d, h_r, g) = self.draw(rng);
            last = ChannelRealization::from_parts(h_d, h_r, g);
            if last.is_ok() {
                break;
            }
        }
        last
    }
}

/// Convenience wrapper building a sampler for a single draw.
pub fn sample_realization<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelRealization> {
    ChannelSampler::new(cfg)?.sample(rng)
}
