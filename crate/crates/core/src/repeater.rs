//! Two-way and one-way quantum repeater chains.
//!
//! Two-way: heralded link generation through a middle-station analyzer,
//! stored spins dephasing while they wait, optional link-level purification
//! (entanglement pumping) and nested swapping. Monte-Carlo trials run in
//! parallel; trial `i` draws from its own ChaCha stream of the root seed, so
//! aggregates do not depend on the worker count.
//!
//! One-way: a quantum parity code is forwarded hop by hop and re-encoded
//! at every station. The rate follows from the per-hop loss-decoding
//! probability; Monte-Carlo samples individual loss patterns.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzers::{self, AnalyzerError, BsaModel};
use crate::cluster::{self, ClusterError};
use crate::interface::{self, EmitterParams, InterfaceError, LinkParams};
pub use crate::mc::trial_rng;
use crate::mc::run_trials;
use crate::qsim::{
    gates::{self, Bell},
    Measurement, MixedState, Outcome, PureState, QsimError, QuantumChannel, QubitLabel, Register,
    CMatrix, C64, TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepeaterError {
    #[error("invalid repeater config: {0}")]
    InvalidConfig(String),
    #[error("no success within {max} attempts")]
    MaxAttempts { max: u64 },
    #[error("expected a two-qubit pair, got {0} qubits")]
    NotAPair(usize),
    #[error("{requested} qubits exceed the engine cap of {cap}")]
    QubitCap { requested: usize, cap: usize },
    #[error(transparent)]
    Interface(#[from] InterfaceError),
    #[error(transparent)]
    Analyzer(#[from] AnalyzerError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Engine(#[from] QsimError),
}

pub type Result<T> = std::result::Result<T, RepeaterError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    TwoWay,
    OneWay,
}

/// Quantum parity code with `n_blocks` blocks of `block_size` photons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParityCode {
    pub n_blocks: usize,
    pub block_size: usize,
}

impl ParityCode {
    pub fn new(n_blocks: usize, block_size: usize) -> Self {
        Self { n_blocks, block_size }
    }

    pub fn n_photons(&self) -> usize {
        self.n_blocks * self.block_size
    }

    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if self.n_blocks == 0 {
            out.push(("n_blocks".into(), "must be >= 1".into()));
        }
        if self.block_size == 0 {
            out.push(("block_size".into(), "must be >= 1".into()));
        }
        if self.n_photons() > MAX_CODE_PHOTONS {
            out.push((
                "n_blocks".into(),
                format!("n_blocks * block_size must be <= {MAX_CODE_PHOTONS}"),
            ));
        }
        out
    }

    fn validate(&self) -> Result<()> {
        first_violation(self.violations())
    }
}

/// Largest code handled by the exact pattern-count polynomial.
pub const MAX_CODE_PHOTONS: usize = 120;
/// Codes up to this size are decoded by exhaustive pattern enumeration.
pub const ENUMERATION_LIMIT: usize = 20;

fn default_max_attempts() -> u64 {
    100_000_000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepeaterConfig {
    pub total_distance_km: f64,
    pub n_links: u32,
    pub link: LinkParams,
    /// Memory and photon-source parameters of every station.
    pub emitter: EmitterParams,
    /// Analyzer used for link heralding, swapping and re-encoding.
    pub bsa: BsaModel,
    /// Local repetition rate (1/s); sets the one-way rate.
    pub attempt_rate: f64,
    #[serde(default)]
    pub purification_rounds: u32,
    pub mode: Mode,
    /// Guard on geometric waiting and on swap retries.
    #[serde(default = "default_max_attempts")]
    pub max_attempts: u64,
}

impl RepeaterConfig {
    /// Evenly spaced chain with default fiber.
    pub fn new(mode: Mode, total_distance_km: f64, n_links: u32, emitter: EmitterParams, bsa: BsaModel) -> Self {
        Self {
            total_distance_km,
            n_links,
            link: LinkParams::new(total_distance_km / n_links.max(1) as f64),
            emitter,
            bsa,
            attempt_rate: 1e6,
            purification_rounds: 0,
            mode,
            max_attempts: default_max_attempts(),
        }
    }

    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let nested = |prefix: &str, v: Vec<(&'static str, String)>| {
            v.into_iter().map(|(f, r)| (format!("{prefix}.{f}"), r)).collect::<Vec<_>>()
        };
        out.extend(nested("link", self.link.violations()));
        out.extend(nested("emitter", self.emitter.violations()));
        out.extend(
            self.bsa
                .violations()
                .into_iter()
                .map(|(f, r)| (format!("bsa.{f}"), r)),
        );
        if self.n_links == 0 {
            out.push(("n_links".into(), "must be >= 1".into()));
        } else {
            if self.mode == Mode::TwoWay && !self.n_links.is_power_of_two() {
                out.push((
                    "n_links".into(),
                    format!("two-way nesting needs a power of two, got {}", self.n_links),
                ));
            }
            let span = self.n_links as f64 * self.link.length_km;
            let scale = self.total_distance_km.abs().max(1.0);
            let gap = (span - self.total_distance_km).abs();
            if gap.is_nan() || gap > 1e-9 * scale {
                out.push((
                    "total_distance_km".into(),
                    format!(
                        "must equal n_links * link.length_km = {span}, got {}",
                        self.total_distance_km
                    ),
                ));
            }
        }
        if !self.attempt_rate.is_finite() || self.attempt_rate <= 0.0 {
            out.push(("attempt_rate".into(), format!("must be finite and > 0, got {}", self.attempt_rate)));
        }
        if self.max_attempts == 0 {
            out.push(("max_attempts".into(), "must be >= 1".into()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        first_violation(self.violations())
    }

    fn require(&self, mode: Mode) -> Result<()> {
        self.validate()?;
        if self.mode != mode {
            return Err(RepeaterError::InvalidConfig(format!(
                "mode: expected {mode:?}, got {:?}",
                self.mode
            )));
        }
        Ok(())
    }
}

fn first_violation(v: Vec<(String, String)>) -> Result<()> {
    match v.into_iter().next() {
        Some((f, r)) => Err(RepeaterError::InvalidConfig(format!("{f}: {r}"))),
        None => Ok(()),
    }
}

/// Five-number summary plus standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let at = |q: f64| sorted[((q * (sorted.len() - 1) as f64).round()) as usize];
        Some(Summary {
            mean,
            std_dev: var.sqrt(),
            min: sorted[0],
            median: at(0.5),
            p90: at(0.9),
            max: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeraldStatistics {
    pub successes: u64,
    pub success_fraction: f64,
    /// Mean elementary-link attempts per delivered pair (two-way).
    pub mean_link_attempts: Option<f64>,
    /// Distribution of the time to deliver one end-to-end pair (two-way).
    pub wait_s: Option<Summary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub rate_hz: f64,
    pub fidelity: f64,
    #[serde(with = "crate::serde_inf")]
    pub mean_wait_s: f64,
    pub herald_statistics: HeraldStatistics,
    pub trials: u64,
}

fn pair_labels() -> Vec<QubitLabel> {
    vec![QubitLabel::spin(0), QubitLabel::spin(1)]
}

fn as_pair(state: &MixedState, labels: Vec<QubitLabel>) -> Result<MixedState> {
    if state.num_qubits() != 2 {
        return Err(RepeaterError::NotAPair(state.num_qubits()));
    }
    Ok(state.relabeled(Register::new(labels)?)?)
}

/// `|phi+>` on spins 0 and 1.
pub fn phi_plus() -> PureState {
    PureState::from_amplitudes(
        Register::new(pair_labels()).expect("two labels"),
        Bell::PhiPlus.amplitudes().to_vec(),
    )
    .expect("normalized")
}

/// Werner pair `F |phi+><phi+| + (1-F)/3 (I - |phi+><phi+|)` on spins 0 and 1.
pub fn werner_pair(fidelity: f64) -> Result<MixedState> {
    if !(0.0..=1.0).contains(&fidelity) {
        return Err(RepeaterError::InvalidConfig(format!(
            "fidelity: must be in [0, 1], got {fidelity}"
        )));
    }
    let phi = phi_plus().to_mixed();
    let id = CMatrix::identity(4, 4);
    let rest = (1.0 - fidelity) / 3.0;
    let m = phi.matrix() * C64::new(fidelity - rest, 0.0) + id * C64::new(rest, 0.0);
    Ok(MixedState::from_matrix(Register::new(pair_labels())?, m)?)
}

/// Bit-error rate of a Werner pair measured in a common basis.
pub fn werner_qber(fidelity: f64) -> f64 {
    2.0 * (1.0 - fidelity) / 3.0
}

/// Asymptotic BB84 key fraction `max(0, 1 - 2 h(q))`.
pub fn qkd_key_fraction(qber: f64) -> f64 {
    let q = qber.clamp(0.0, 0.5);
    let h = |p: f64| {
        if p <= 0.0 || p >= 1.0 {
            0.0
        } else {
            -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
        }
    };
    (1.0 - 2.0 * h(q)).max(0.0)
}

fn dephase_pair(state: MixedState, t: f64, p: &EmitterParams) -> Result<MixedState> {
    if t == 0.0 || p.t_coh.is_infinite() {
        return Ok(state);
    }
    let mut out = state;
    for q in out.register().labels().to_vec() {
        out = out.apply_channel(&interface::memory_dephasing_channel(t, p, q)?)?;
    }
    Ok(out)
}

/// Per-attempt heralding probability `eta_half^2 p_bsa` with
/// `eta_half = fiber(L/2) eta_out`.
pub fn link_success_probability(cfg: &RepeaterConfig) -> Result<f64> {
    let half = cfg.link.with_length(cfg.link.length_km / 2.0);
    let eta_half = interface::fiber_transmissivity(&half) * cfg.emitter.eta_out;
    Ok(eta_half * eta_half * analyzers::bsa_success_prob(&cfg.bsa)?)
}

/// Photon to the middle station and herald back: `L / c`.
pub fn attempt_time(cfg: &RepeaterConfig) -> f64 {
    cfg.link.delay_s(cfg.link.length_km)
}

#[derive(Debug, Clone)]
pub struct LinkPair {
    pub wait_s: f64,
    pub attempts: u64,
    /// Spins 0 and 1, corrected to `|phi+>` for the announced outcome.
    pub state: MixedState,
}

fn spin_photon_pair(spin: QubitLabel, photon: QubitLabel, photon_coherence: f64) -> Result<MixedState> {
    let pure = PureState::from_amplitudes(
        Register::new(vec![spin, photon])?,
        Bell::PhiPlus.amplitudes().to_vec(),
    )?;
    Ok(pure
        .to_mixed()
        .apply_channel(&QuantumChannel::phase_damping(photon, photon_coherence))?)
}

/// Heralded entanglement of the two end spins of one link.
pub fn generate_link_entanglement(cfg: &RepeaterConfig, rng: &mut dyn RngCore) -> Result<LinkPair> {
    cfg.require(Mode::TwoWay)?;
    let p = link_success_probability(cfg)?;
    if p <= 0.0 {
        return Err(RepeaterError::MaxAttempts { max: cfg.max_attempts });
    }
    let failures = Geometric::new(p)
        .map_err(|e| RepeaterError::InvalidConfig(format!("link success probability {p}: {e}")))?
        .sample(rng);
    let attempts = failures.saturating_add(1);
    if attempts > cfg.max_attempts {
        return Err(RepeaterError::MaxAttempts { max: cfg.max_attempts });
    }
    let tau = attempt_time(cfg);

    let pc = cluster::photon_coherence(&cfg.emitter)?;
    let (sa, pa) = (QubitLabel::spin(0), QubitLabel::photon(1));
    let (sb, pb) = (QubitLabel::spin(2), QubitLabel::photon(3));
    let joint = spin_photon_pair(sa, pa, pc)?.tensor(&spin_photon_pair(sb, pb, pc)?)?;
    let (bell, spins) = analyzers::heralded_bell_measurement(&joint, [pa, pb], &cfg.bsa, rng)?;
    let spins = spins
        .expect("spins remain")
        .apply_unitary(&bell.correction(), &[sb])?;
    let state = dephase_pair(as_pair(&spins, pair_labels())?, tau, &cfg.emitter)?;
    Ok(LinkPair {
        wait_s: attempts as f64 * tau,
        attempts,
        state,
    })
}

/// Bell measurement on the inner spins of `A-B` and `B-C`, read out through
/// the analyzer model. On success returns the corrected `A-C` pair.
pub fn entanglement_swap(
    ab: &MixedState,
    bc: &MixedState,
    m: &BsaModel,
    rng: &mut dyn RngCore,
) -> Result<Option<MixedState>> {
    let (a, b1) = (QubitLabel::spin(0), QubitLabel::photon(1));
    let (b2, c) = (QubitLabel::photon(2), QubitLabel::spin(3));
    let joint = as_pair(ab, vec![a, b1])?.tensor(&as_pair(bc, vec![b2, c])?)?;
    let run = analyzers::simulate_bsa(&joint, [b1, b2], m, rng)?;
    let Some(bell) = run.outcome.bell() else {
        return Ok(None);
    };
    let ac = run
        .state
        .expect("outer spins remain")
        .apply_unitary(&bell.correction(), &[c])?;
    Ok(Some(as_pair(&ac, pair_labels())?))
}

/// One coincident outcome of the purification circuit.
#[derive(Debug, Clone)]
pub struct PurificationBranch {
    pub probability: f64,
    pub state: Option<MixedState>,
}

/// Bilateral CNOT from pair 1 onto pair 2, then Z readout of pair 2.
/// Returns the `00` and `11` branches.
pub fn purification_branches(p1: &MixedState, p2: &MixedState) -> Result<[PurificationBranch; 2]> {
    let (a1, b1) = (QubitLabel::spin(0), QubitLabel::spin(1));
    let (a2, b2) = (QubitLabel::spin(2), QubitLabel::spin(3));
    let joint = as_pair(p1, vec![a1, b1])?
        .tensor(&as_pair(p2, vec![a2, b2])?)?
        .apply_unitary(&gates::cnot(), &[a1, a2])?
        .apply_unitary(&gates::cnot(), &[b1, b2])?;
    let meas = Measurement::new(parity_projectors(), vec![a2, b2])?;
    let branch = |k: usize| -> Result<PurificationBranch> {
        match joint.measure_projective(&meas, Outcome::Forced(k)) {
            Ok(r) => Ok(PurificationBranch {
                probability: r.probability,
                state: Some(r.state.partial_trace(&[a2, b2])?),
            }),
            Err(QsimError::DegenerateOutcome { probability, .. }) => Ok(PurificationBranch {
                probability,
                state: None,
            }),
            Err(e) => Err(e.into()),
        }
    };
    Ok([branch(0)?, branch(1)?])
}

/// `|00><00|`, `|11><11|`, and the mismatch projector.
fn parity_projectors() -> Vec<CMatrix> {
    let diag = |d: [f64; 4]| CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(4, d.map(|x| C64::new(x, 0.0))));
    vec![
        diag([1.0, 0.0, 0.0, 0.0]),
        diag([0.0, 0.0, 0.0, 1.0]),
        diag([0.0, 1.0, 1.0, 0.0]),
    ]
}

pub fn purify_success_probability(p1: &MixedState, p2: &MixedState) -> Result<f64> {
    let [x, y] = purification_branches(p1, p2)?;
    Ok(x.probability + y.probability)
}

/// One recurrence round; `None` when the two readouts disagree.
pub fn purify(p1: &MixedState, p2: &MixedState, rng: &mut dyn RngCore) -> Result<Option<MixedState>> {
    let branches = purification_branches(p1, p2)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for b in branches {
        acc += b.probability;
        if u < acc {
            return Ok(b.state);
        }
    }
    Ok(None)
}

/// Per-trial outcome of the two-way simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    /// Time to deliver the end-to-end pair.
    pub time_s: f64,
    pub fidelity: f64,
    /// Total time finished pairs spent waiting for a swap partner.
    pub idle_s: f64,
    pub link_attempts: u64,
}

#[derive(Default)]
struct TrialCtx {
    idle_s: f64,
    link_attempts: u64,
}

/// `H (x) H` on a pair. Fixes `|phi+>` and swaps phase flips with bit
/// flips, so pumping detects the dephasing that dominates link noise.
fn hadamard_both(pair: &MixedState) -> Result<MixedState> {
    let h = gates::h();
    Ok(pair.apply_unitary(&h.kronecker(&h), &pair_labels())?)
}

fn link_level(cfg: &RepeaterConfig, t0: f64, rng: &mut dyn RngCore, ctx: &mut TrialCtx) -> Result<(f64, MixedState)> {
    let signal = cfg.link.delay_s(cfg.link.length_km);
    let mut start = t0;
    'restart: for _ in 0..cfg.max_attempts {
        let first = generate_link_entanglement(cfg, rng)?;
        ctx.link_attempts += first.attempts;
        let mut t = start + first.wait_s;
        let mut pair = first.state;
        for _ in 0..cfg.purification_rounds {
            let fresh = generate_link_entanglement(cfg, rng)?;
            ctx.link_attempts += fresh.attempts;
            ctx.idle_s += fresh.wait_s;
            pair = dephase_pair(pair, fresh.wait_s, &cfg.emitter)?;
            t += fresh.wait_s + signal;
            match purify(&hadamard_both(&pair)?, &hadamard_both(&fresh.state)?, rng)? {
                Some(better) => pair = dephase_pair(hadamard_both(&better)?, signal, &cfg.emitter)?,
                None => {
                    start = t;
                    continue 'restart;
                }
            }
        }
        return Ok((t, pair));
    }
    Err(RepeaterError::MaxAttempts { max: cfg.max_attempts })
}

fn segment(
    cfg: &RepeaterConfig,
    links: u32,
    t0: f64,
    rng: &mut dyn RngCore,
    ctx: &mut TrialCtx,
) -> Result<(f64, MixedState)> {
    if links == 1 {
        return link_level(cfg, t0, rng, ctx);
    }
    // herald from the middle to both ends of the merged segment
    let signal = cfg.link.delay_s(links as f64 * cfg.link.length_km / 2.0);
    let mut start = t0;
    for _ in 0..cfg.max_attempts {
        let (tl, left) = segment(cfg, links / 2, start, rng, ctx)?;
        let (tr, right) = segment(cfg, links / 2, start, rng, ctx)?;
        let dt = (tl - tr).abs();
        ctx.idle_s += dt;
        let (left, right) = if tl < tr {
            (dephase_pair(left, dt, &cfg.emitter)?, right)
        } else {
            (left, dephase_pair(right, dt, &cfg.emitter)?)
        };
        let t = tl.max(tr) + signal;
        match entanglement_swap(&left, &right, &cfg.bsa, rng)? {
            Some(pair) => return Ok((t, dephase_pair(pair, signal, &cfg.emitter)?)),
            None => start = t,
        }
    }
    Err(RepeaterError::MaxAttempts { max: cfg.max_attempts })
}

/// One end-to-end delivery.
pub fn two_way_trial(cfg: &RepeaterConfig, rng: &mut dyn RngCore) -> Result<TrialRecord> {
    cfg.require(Mode::TwoWay)?;
    let mut ctx = TrialCtx::default();
    let (t, pair) = segment(cfg, cfg.n_links, 0.0, rng, &mut ctx)?;
    Ok(TrialRecord {
        time_s: t,
        fidelity: pair.fidelity(&phi_plus())?,
        idle_s: ctx.idle_s,
        link_attempts: ctx.link_attempts,
    })
}

/// Trials in index order; trial `i` uses [`trial_rng`]`(seed, i)`.
pub fn two_way_trials(cfg: &RepeaterConfig, trials: u64, seed: u64) -> Result<Vec<TrialRecord>> {
    cfg.require(Mode::TwoWay)?;
    run_trials(trials, seed, |_, rng| two_way_trial(cfg, rng))
        .into_iter()
        .collect()
}

pub fn simulate_two_way(cfg: &RepeaterConfig, trials: u64, seed: u64) -> Result<SimResult> {
    if trials == 0 {
        return Err(RepeaterError::InvalidConfig("trials: must be >= 1".into()));
    }
    let records = two_way_trials(cfg, trials, seed)?;
    let times: Vec<f64> = records.iter().map(|r| r.time_s).collect();
    let wait = Summary::of(&times).expect("trials > 0");
    let n = trials as f64;
    let fidelity = records.iter().map(|r| r.fidelity).sum::<f64>() / n;
    let attempts = records.iter().map(|r| r.link_attempts as f64).sum::<f64>() / n;
    Ok(SimResult {
        rate_hz: if wait.mean > 0.0 { 1.0 / wait.mean } else { f64::INFINITY },
        fidelity,
        mean_wait_s: wait.mean,
        herald_statistics: HeraldStatistics {
            successes: trials,
            success_fraction: 1.0,
            mean_link_attempts: Some(attempts),
            wait_s: Some(wait),
        },
        trials,
    })
}

/// Logical state `alpha |0_L> + beta |1_L>` on photons `0..n*m`.
pub fn parity_encode(alpha: C64, beta: C64, code: &ParityCode) -> Result<PureState> {
    code.validate()?;
    let (n, m) = (code.n_blocks, code.block_size);
    let total = n * m;
    if total > TOL.max_qubits {
        return Err(RepeaterError::QubitCap {
            requested: total,
            cap: TOL.max_qubits,
        });
    }
    let mut amps = vec![C64::new(0.0, 0.0); 1 << total];
    let scale = FRAC_1_SQRT_2 * 0.5f64.powf(n as f64 / 2.0);
    let block_ones = (1usize << m) - 1;
    for pattern in 0..(1usize << n) {
        let index = (0..n)
            .filter(|b| pattern >> (n - 1 - b) & 1 == 1)
            .fold(0usize, |acc, b| acc | block_ones << ((n - 1 - b) * m));
        let odd = pattern.count_ones() % 2 == 1;
        amps[index] = if odd { beta * 2.0 * scale } else { alpha * 2.0 * scale };
    }
    let labels = (0..total as u32).map(QubitLabel::photon).collect();
    Ok(PureState::from_amplitudes(Register::new(labels)?, amps)?)
}

/// Decoding criterion: some block arrived complete and no block was lost
/// entirely. Bit `j` of `lost` marks photon `j` (block-major) as lost.
pub fn correctable(code: &ParityCode, lost: u128) -> bool {
    let m = code.block_size;
    let full = if m == 128 { u128::MAX } else { (1u128 << m) - 1 };
    let mut any_complete = false;
    for b in 0..code.n_blocks {
        let block = lost >> (b * m) & full;
        if block == full {
            return false;
        }
        any_complete |= block == 0;
    }
    any_complete
}

/// Number of correctable loss patterns with `k` losses, by enumeration.
pub fn correctable_counts_enumerated(code: &ParityCode) -> Result<Vec<u128>> {
    code.validate()?;
    let total = code.n_photons();
    if total > ENUMERATION_LIMIT + 4 {
        return Err(RepeaterError::InvalidConfig(format!(
            "enumeration limited to {} photons, got {total}",
            ENUMERATION_LIMIT + 4
        )));
    }
    let mut counts = vec![0u128; total + 1];
    for lost in 0u128..(1u128 << total) {
        if correctable(code, lost) {
            counts[lost.count_ones() as usize] += 1;
        }
    }
    Ok(counts)
}

fn poly_mul(a: &[u128], b: &[u128]) -> Vec<u128> {
    let mut out = vec![0u128; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_pow(a: &[u128], n: usize) -> Vec<u128> {
    (0..n).fold(vec![1u128], |acc, _| poly_mul(&acc, a))
}

/// Closed-form pattern counts: coefficients of `A(x)^n - (A(x) - 1)^n` with
/// `A(x) = sum_{j<m} C(m, j) x^j`.
pub fn correctable_counts(code: &ParityCode) -> Result<Vec<u128>> {
    code.validate()?;
    let m = code.block_size;
    let mut a = vec![0u128; m];
    let mut binom = 1u128;
    for (j, slot) in a.iter_mut().enumerate() {
        *slot = binom;
        binom = binom * (m - j) as u128 / (j + 1) as u128;
    }
    let mut b = a.clone();
    b[0] -= 1;
    let pa = poly_pow(&a, code.n_blocks);
    let pb = poly_pow(&b, code.n_blocks);
    let mut out = vec![0u128; code.n_photons() + 1];
    for (k, slot) in out.iter_mut().enumerate() {
        let x = pa.get(k).copied().unwrap_or(0);
        let y = pb.get(k).copied().unwrap_or(0);
        *slot = x - y;
    }
    Ok(out)
}

fn from_counts(counts: &[u128], eps: f64) -> f64 {
    let total = counts.len() - 1;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 * eps.powi(k as i32) * (1.0 - eps).powi((total - k) as i32))
        .sum()
}

/// Closed form `(1 - eps^m)^n - (1 - eps^m - (1-eps)^m)^n`.
pub fn parity_loss_success_closed_form(code: &ParityCode, eps: f64) -> f64 {
    let (n, m) = (code.n_blocks as i32, code.block_size as i32);
    let all_lost = eps.powi(m);
    let all_kept = (1.0 - eps).powi(m);
    ((1.0 - all_lost).powi(n) - (1.0 - all_lost - all_kept).powi(n)).clamp(0.0, 1.0)
}

/// Probability that the loss pattern of one hop is correctable when each
/// photon is lost independently with probability `eps`.
pub fn parity_loss_success(code: &ParityCode, eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(RepeaterError::InvalidConfig(format!("epsilon: must be in [0, 1], got {eps}")));
    }
    code.validate()?;
    if code.n_photons() <= ENUMERATION_LIMIT {
        Ok(from_counts(&correctable_counts_enumerated(code)?, eps).clamp(0.0, 1.0))
    } else {
        Ok(parity_loss_success_closed_form(code, eps))
    }
}

/// Photon loss over one hop, including outcoupling.
pub fn hop_loss(cfg: &RepeaterConfig) -> f64 {
    1.0 - interface::fiber_transmissivity(&cfg.link) * cfg.emitter.eta_out
}

/// Success probability of one hop: loss decoding times `n m` re-encoding
/// Bell measurements.
pub fn one_way_hop_success(cfg: &RepeaterConfig, code: &ParityCode) -> Result<f64> {
    let decode = parity_loss_success(code, hop_loss(cfg))?;
    let p_bsa = analyzers::bsa_success_prob(&cfg.bsa)?;
    Ok(decode * p_bsa.powi(code.n_photons() as i32))
}

fn one_way_trial(cfg: &RepeaterConfig, code: &ParityCode, p_bsa: f64, rng: &mut dyn RngCore) -> bool {
    let eps = hop_loss(cfg);
    let total = code.n_photons();
    for _ in 0..cfg.n_links {
        let mut lost = 0u128;
        for j in 0..total {
            if rng.random::<f64>() < eps {
                lost |= 1 << j;
            }
        }
        if !correctable(code, lost) {
            return false;
        }
        if p_bsa < 1.0 && (0..total).any(|_| rng.random::<f64>() >= p_bsa) {
            return false;
        }
    }
    true
}

/// Rate `attempt_rate * prod_hops hop_success`; no memory decay and no
/// signaling wait. Monte-Carlo trials sample loss patterns for the herald
/// statistics.
pub fn simulate_one_way(cfg: &RepeaterConfig, code: &ParityCode, trials: u64, seed: u64) -> Result<SimResult> {
    cfg.require(Mode::OneWay)?;
    code.validate()?;
    if trials == 0 {
        return Err(RepeaterError::InvalidConfig("trials: must be >= 1".into()));
    }
    let hop = one_way_hop_success(cfg, code)?;
    let success = hop.powi(cfg.n_links as i32);
    let rate = cfg.attempt_rate * success;
    let error = analyzers::bsa_error_prob(&cfg.bsa)?;
    let fidelity = (1.0 - error).powi((code.n_photons() as u32 * cfg.n_links) as i32);
    let p_bsa = analyzers::bsa_success_prob(&cfg.bsa)?;
    let outcomes = run_trials(trials, seed, |_, rng| one_way_trial(cfg, code, p_bsa, rng));
    let successes = outcomes.iter().filter(|ok| **ok).count() as u64;
    Ok(SimResult {
        rate_hz: rate,
        fidelity,
        mean_wait_s: if rate > 0.0 { 1.0 / rate } else { f64::INFINITY },
        herald_statistics: HeraldStatistics {
            successes,
            success_fraction: successes as f64 / trials as f64,
            mean_link_attempts: None,
            wait_s: None,
        },
        trials,
    })
}

/// One-way rate per station over a fixed total distance, for each station
/// spacing. Returns `(spacing_km, rate_hz, rate_per_station)`.
pub fn one_way_spacing_sweep(
    cfg: &RepeaterConfig,
    code: &ParityCode,
    spacings_km: &[f64],
) -> Result<Vec<(f64, f64, f64)>> {
    spacings_km
        .iter()
        .map(|&s| {
            let hops = (cfg.total_distance_km / s).round().max(1.0) as u32;
            let mut c = *cfg;
            c.n_links = hops;
            c.link = cfg.link.with_length(s);
            c.total_distance_km = s * hops as f64;
            let rate = cfg.attempt_rate * one_way_hop_success(&c, code)?.powi(hops as i32);
            Ok((s, rate, rate / hops as f64))
        })
        .collect()
}
