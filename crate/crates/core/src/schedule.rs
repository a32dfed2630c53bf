//! Pilot sequences and IRS reflection patterns.
//!
//! A [`TrainingSchedule`] holds one pilot row per user and one reflection
//! column per slot. Element and user indices are 0-based throughout; user 0
//! is the typical user whose reflected channel is estimated directly.

use serde::{Deserialize, Serialize};

use crate::channel::SharingRegime;
use crate::error::{Error, Result};
use crate::linalg::{c64, dft_matrix, CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "2pce")]
    TwoPhase,
    #[serde(rename = "3pce")]
    ThreePhase,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::TwoPhase => "2pce",
            Strategy::ThreePhase => "3pce",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "2pce" => Ok(Strategy::TwoPhase),
            "3pce" => Ok(Strategy::ThreePhase),
            other => Err(Error::Config(format!("unknown strategy `{other}` (expected 2pce or 3pce)"))),
        }
    }
}

/// Which antenna/element regime a schedule was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "m_ge_n")]
    MgeN,
    #[serde(rename = "m_lt_n_shared")]
    MltNShared,
    #[serde(rename = "m_lt_n_orthogonal")]
    MltNOrthogonal,
}

impl Regime {
    pub fn select(m: usize, n: usize, sharing: SharingRegime) -> Self {
        match (m >= n, sharing) {
            (true, _) => Regime::MgeN,
            (false, SharingRegime::Shared) => Regime::MltNShared,
            (false, SharingRegime::Orthogonal) => Regime::MltNOrthogonal,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::MgeN => "m_ge_n",
            Regime::MltNShared => "m_lt_n_shared",
            Regime::MltNOrthogonal => "m_lt_n_orthogonal",
        }
    }
}

/// Contiguous run of slots `[start, end)` belonging to one training phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseSpan {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

impl PhaseSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Users and elements assigned to a shared slot. `users[j]` owns the scaling
/// factor of element `elements[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSets {
    pub users: Vec<usize>,
    pub elements: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSchedule {
    pub strategy: Strategy,
    pub regime: Regime,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    /// `K x tau` pilot symbols.
    pub pilots: CMatrix,
    /// `N x tau` reflection coefficients.
    pub patterns: CMatrix,
    pub phases: Vec<PhaseSpan>,
    /// Per-slot assignments for slots that share users or elements.
    pub active_sets: Vec<Option<SlotSets>>,
}

impl TrainingSchedule {
    pub fn tau(&self) -> usize {
        self.pilots.ncols()
    }

    pub fn phase(&self, label: &str) -> Option<&PhaseSpan> {
        self.phases.iter().find(|p| p.label == label)
    }
}

/// Regime constants and the per-user split of element indices for `M < N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSets {
    pub gamma: usize,
    pub delta: usize,
    /// Elements whose scaling factors are found in Phase II-A, per user 1..K.
    pub chi_a: Vec<Vec<usize>>,
    /// Elements left for Phase II-B, per user 1..K.
    pub chi_b: Vec<Vec<usize>>,
}

/// `gamma = floor((M + N) / M)` and `delta = N - (gamma - 1) M`.
pub fn gamma_delta(m: usize, n: usize) -> (usize, usize) {
    let gamma = (m + n) / m;
    (gamma, n - (gamma - 1) * m)
}

impl IndexSets {
    pub fn new(m: usize, n: usize, k: usize) -> Result<Self> {
        if m == 0 || m >= n {
            return Err(Error::Config(format!("index sets need 1 <= M < N, got M={m}, N={n}")));
        }
        let (gamma, delta) = gamma_delta(m, n);
        let mut chi_a = Vec::new();
        let mut chi_b = Vec::new();
        for u in 0..k.saturating_sub(1) {
            let b: Vec<usize> = (0..delta).map(|j| (u * delta + j) % n).collect();
            let mut in_b = vec![false; n];
            b.iter().for_each(|&e| in_b[e] = true);
            chi_a.push((0..n).filter(|&e| !in_b[e]).collect());
            chi_b.push(b);
        }
        Ok(Self { gamma, delta, chi_a, chi_b })
    }
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Training overhead `tau` of a strategy.
pub fn training_overhead(m: usize, n: usize, k: usize, strategy: Strategy) -> usize {
    let others = k.saturating_sub(1);
    match strategy {
        Strategy::TwoPhase if m >= n => n + 2 * k - 1,
        Strategy::TwoPhase => n + k + ceil_div(others * n, m),
        Strategy::ThreePhase => k + n + others.max(ceil_div(others * n, m)),
    }
}

/// Phase-II slot count of the 2PCE strategy for a regime.
pub fn phase2_slots(m: usize, n: usize, k: usize, regime: Regime) -> usize {
    let others = k.saturating_sub(1);
    let (gamma, _) = gamma_delta(m, n);
    match regime {
        Regime::MgeN => 2 * others,
        Regime::MltNShared => others + ceil_div(others * n, m),
        Regime::MltNOrthogonal => others * (gamma + 1),
    }
}

/// Builder that appends slots column by column.
struct SlotWriter {
    k: usize,
    n: usize,
    pilots: Vec<Vec<C64>>,
    patterns: Vec<Vec<C64>>,
    sets: Vec<Option<SlotSets>>,
    phases: Vec<PhaseSpan>,
}

impl SlotWriter {
    fn new(k: usize, n: usize) -> Self {
        Self { k, n, pilots: Vec::new(), patterns: Vec::new(), sets: Vec::new(), phases: Vec::new() }
    }

    fn slot(&mut self, pilot: Vec<C64>, pattern: Vec<C64>, sets: Option<SlotSets>) {
        debug_assert_eq!(pilot.len(), self.k);
        debug_assert_eq!(pattern.len(), self.n);
        self.pilots.push(pilot);
        self.patterns.push(pattern);
        self.sets.push(sets);
    }

    fn len(&self) -> usize {
        self.pilots.len()
    }

    fn begin(&mut self, label: &str) {
        let at = self.len();
        if let Some(last) = self.phases.last_mut() {
            last.end = at;
        }
        self.phases.push(PhaseSpan { label: label.to_string(), start: at, end: at });
    }

    fn finish(mut self, strategy: Strategy, regime: Regime, m: usize) -> TrainingSchedule {
        let tau = self.len();
        if let Some(last) = self.phases.last_mut() {
            last.end = tau;
        }
        let pilots = CMatrix::from_fn(self.k, tau, |r, c| self.pilots[c][r]);
        let patterns = CMatrix::from_fn(self.n, tau, |r, c| self.patterns[c][r]);
        TrainingSchedule {
            strategy,
            regime,
            m,
            n: self.n,
            k: self.k,
            pilots,
            patterns,
            phases: self.phases,
            active_sets: self.sets,
        }
    }
}

const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn solo_pilot(k: usize, user: usize) -> Vec<C64> {
    let mut p = vec![ZERO; k];
    p[user] = ONE;
    p
}

/// Phase-I reflection matrix `V_I`: the `(N+1)`-point DFT, whose column `i`
/// is `[1; theta_i]`.
pub fn phase1_schedule(n: usize) -> CMatrix {
    dft_matrix(n + 1)
}

fn write_phase1(w: &mut SlotWriter) {
    let v = phase1_schedule(w.n);
    w.begin("I");
    for i in 0..=w.n {
        let pattern = v.column(i).iter().skip(1).copied().collect();
        w.slot(solo_pilot(w.k, 0), pattern, None);
    }
}

fn write_phase2_mgen(w: &mut SlotWriter) {
    let others = w.k - 1;
    if others == 0 {
        return;
    }
    let d = dft_matrix(others);
    w.begin("II");
    for sign in [1.0, -1.0] {
        for i in 0..others {
            let mut pilot = vec![ZERO; w.k];
            for u in 0..others {
                pilot[u + 1] = d[(i, u)];
            }
            w.slot(pilot, vec![c64(sign, 0.0); w.n], None);
        }
    }
}

fn write_phase2_shared(w: &mut SlotWriter, m: usize) -> Result<()> {
    let sets = IndexSets::new(m, w.n, w.k)?;
    let (gamma, delta) = (sets.gamma, sets.delta);
    w.begin("II-A");
    for (u, chi_a) in sets.chi_a.iter().enumerate() {
        let user = u + 1;
        for offset in 0..gamma - 1 {
            let mut pattern = vec![ZERO; w.n];
            for &e in &chi_a[offset * m..(offset + 1) * m] {
                pattern[e] = ONE;
            }
            w.slot(solo_pilot(w.k, user), pattern, None);
        }
        let mut pattern = vec![ZERO; w.n];
        for &e in chi_a {
            pattern[e] = -ONE;
        }
        w.slot(solo_pilot(w.k, user), pattern, None);
    }
    w.begin("II-B");
    let pairs = (w.k - 1) * delta;
    for start in (0..pairs).step_by(m) {
        let end = (start + m).min(pairs);
        let mut pilot = vec![ZERO; w.k];
        let mut pattern = vec![ZERO; w.n];
        let mut slot_sets = SlotSets { users: Vec::new(), elements: Vec::new() };
        for g in start..end {
            let user = g / delta + 1;
            let element = sets.chi_b[user - 1][g % delta];
            pilot[user] = ONE;
            pattern[element] = ONE;
            slot_sets.users.push(user);
            slot_sets.elements.push(element);
        }
        w.slot(pilot, pattern, Some(slot_sets));
    }
    Ok(())
}

fn write_phase2_orthogonal(w: &mut SlotWriter, m: usize) {
    let (gamma, _) = gamma_delta(m, w.n);
    w.begin("II");
    for user in 1..w.k {
        for offset in 0..gamma {
            let pattern = (0..w.n).map(|e| if e / m == offset { ONE } else { ZERO }).collect();
            w.slot(solo_pilot(w.k, user), pattern, None);
        }
        w.slot(solo_pilot(w.k, user), vec![-ONE; w.n], None);
    }
}

/// Full 2PCE schedule (Phase I followed by the regime's Phase II).
pub fn schedule_2pce(m: usize, n: usize, k: usize, sharing: SharingRegime) -> Result<TrainingSchedule> {
    check_dims(m, n, k)?;
    let regime = Regime::select(m, n, sharing);
    let mut w = SlotWriter::new(k, n);
    write_phase1(&mut w);
    if k >= 2 {
        match regime {
            Regime::MgeN => write_phase2_mgen(&mut w),
            Regime::MltNShared => write_phase2_shared(&mut w, m)?,
            Regime::MltNOrthogonal => write_phase2_orthogonal(&mut w, m),
        }
    }
    Ok(w.finish(Strategy::TwoPhase, regime, m))
}

/// Phase-II segment alone, for the `M >= N` design.
pub fn phase2_schedule_mgen(m: usize, n: usize, k: usize) -> Result<TrainingSchedule> {
    check_dims(m, n, k)?;
    if m < n {
        return Err(Error::Config(format!("M >= N design requested with M={m} < N={n}")));
    }
    let mut w = SlotWriter::new(k, n);
    if k >= 2 {
        write_phase2_mgen(&mut w);
    }
    Ok(w.finish(Strategy::TwoPhase, Regime::MgeN, m))
}

/// Phase-II segment alone, for the shared `M < N` design.
pub fn phase2_schedule_mltn_shared(m: usize, n: usize, k: usize) -> Result<TrainingSchedule> {
    check_dims(m, n, k)?;
    let mut w = SlotWriter::new(k, n);
    if k >= 2 {
        write_phase2_shared(&mut w, m)?;
    } else {
        IndexSets::new(m, n, k)?;
    }
    Ok(w.finish(Strategy::TwoPhase, Regime::MltNShared, m))
}

/// Phase-II segment alone, for the orthogonal `M < N` design.
pub fn phase2_schedule_mltn_orthogonal(m: usize, n: usize, k: usize) -> Result<TrainingSchedule> {
    check_dims(m, n, k)?;
    if m >= n {
        return Err(Error::Config(format!("M < N design requested with M={m} >= N={n}")));
    }
    let mut w = SlotWriter::new(k, n);
    if k >= 2 {
        write_phase2_orthogonal(&mut w, m);
    }
    Ok(w.finish(Strategy::TwoPhase, Regime::MltNOrthogonal, m))
}

/// Three-phase baseline: direct channels with the IRS off, then the typical
/// user's reflected channel, then the scaling factors of users 1..K.
pub fn schedule_3pce(m: usize, n: usize, k: usize) -> Result<TrainingSchedule> {
    check_dims(m, n, k)?;
    let regime = Regime::select(m, n, SharingRegime::Shared);
    let mut w = SlotWriter::new(k, n);

    let d_k = dft_matrix(k);
    w.begin("1");
    for i in 0..k {
        w.slot(d_k.row(i).iter().copied().collect(), vec![ZERO; n], None);
    }

    let d_n = dft_matrix(n);
    w.begin("2");
    for i in 0..n {
        w.slot(solo_pilot(k, 0), d_n.column(i).iter().copied().collect(), None);
    }

    let others = k - 1;
    if others > 0 {
        w.begin("3");
        if m >= n {
            let d = dft_matrix(others);
            for i in 0..others {
                let mut pilot = vec![ZERO; k];
                for u in 0..others {
                    pilot[u + 1] = d[(i, u)];
                }
                w.slot(pilot, vec![ONE; n], None);
            }
        } else {
            let pairs = others * n;
            for start in (0..pairs).step_by(m) {
                let end = (start + m).min(pairs);
                let mut pilot = vec![ZERO; k];
                let mut pattern = vec![ZERO; n];
                let mut sets = SlotSets { users: Vec::new(), elements: Vec::new() };
                for g in start..end {
                    let (user, element) = (g / n + 1, g % n);
                    pilot[user] = ONE;
                    pattern[element] = ONE;
                    sets.users.push(user);
                    sets.elements.push(element);
                }
                w.slot(pilot, pattern, Some(sets));
            }
        }
    }
    Ok(w.finish(Strategy::ThreePhase, regime, m))
}

pub fn build_schedule(
    strategy: Strategy,
    m: usize,
    n: usize,
    k: usize,
    sharing: SharingRegime,
) -> Result<TrainingSchedule> {
    match strategy {
        Strategy::TwoPhase => schedule_2pce(m, n, k, sharing),
        Strategy::ThreePhase => schedule_3pce(m, n, k),
    }
}

fn check_dims(m: usize, n: usize, k: usize) -> Result<()> {
    if m == 0 || n == 0 || k == 0 {
        return Err(Error::Config(format!("M, N, K must be positive, got M={m}, N={n}, K={k}")));
    }
    Ok(())
}

/// Serialized form used by golden files: one entry per slot, complex values
/// as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleJson {
    pub strategy: Strategy,
    pub regime: Regime,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub tau: usize,
    pub phases: Vec<PhaseSpan>,
    pub slots: Vec<SlotJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotJson {
    pub pilots: Vec<[f64; 2]>,
    pub pattern: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub active: Option<SlotSets>,
}

/// Rounds away `-0.0` and DFT rounding noise so golden files stay stable.
fn clean(z: C64) -> [f64; 2] {
    let r = |x: f64| {
        let y = (x * 1e12).round() / 1e12;
        if y == 0.0 {
            0.0
        } else {
            y
        }
    };
    [r(z.re), r(z.im)]
}

impl From<&TrainingSchedule> for ScheduleJson {
    fn from(s: &TrainingSchedule) -> Self {
        let slots = (0..s.tau())
            .map(|i| SlotJson {
                pilots: s.pilots.column(i).iter().map(|&z| clean(z)).collect(),
                pattern: s.patterns.column(i).iter().map(|&z| clean(z)).collect(),
                active: s.active_sets[i].clone(),
            })
            .collect();
        Self {
            strategy: s.strategy,
            regime: s.regime,
            m: s.m,
            n: s.n,
            k: s.k,
            tau: s.tau(),
            phases: s.phases.clone(),
            slots,
        }
    }
}

impl TrainingSchedule {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ScheduleJson::from(self))?)
    }
}
