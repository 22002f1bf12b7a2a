//! Bell-state analyzers and QND photon detection.
//!
//! Six analyzer families are modelled. All but the cavity CZ analyzer are
//! parametric: a success probability and a misidentification probability
//! built from the hardware figures of merit. Where only a scaling is known
//! the proportionality constant lives in [`ModelConstants`] and defaults
//! to one.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interface::{
    self, effective_beta, effective_cooperativity, EmitterParams, Geometry, InterfaceError,
};
use crate::qsim::{
    gates::{self, Bell},
    Measurement, MixedState, Outcome, PureState, QsimError, QubitKind, QubitLabel, Register, C64,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyzerError {
    #[error("invalid analyzer model: {0}")]
    InvalidModel(String),
    #[error("qubit {0} is not a photon {1} qubit in the register")]
    NotPhotonic(u32, &'static str),
    #[error(transparent)]
    Interface(#[from] InterfaceError),
    #[error(transparent)]
    Engine(#[from] QsimError),
}

pub type Result<T> = std::result::Result<T, AnalyzerError>;

/// Analyzer family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsaKind {
    /// Beam splitters and detectors, optionally boosted by auxiliary single photons.
    LinearOptics { aux_photons: u32 },
    /// Photon-photon CZ by sequential scattering off one cavity-coupled spin.
    CavityCz,
    /// Active scheme with two three-level spins.
    ActiveTwoSpin,
    /// Passive photon-sorter scheme, concatenated `concatenations` times.
    PassiveSorter { concatenations: u32 },
    /// Passive CZ from coherent scattering off a chain of two-level emitters.
    PassiveCzChain { n_emitters: u32 },
    /// Scheme with active optics (sum-frequency filtering).
    ActiveSfg,
}

impl BsaKind {
    pub fn name(&self) -> &'static str {
        match self {
            BsaKind::LinearOptics { .. } => "linear-optics",
            BsaKind::CavityCz => "cavity-cz-gate",
            BsaKind::ActiveTwoSpin => "active-bell-scheme",
            BsaKind::PassiveSorter { .. } => "passive-bell-scheme",
            BsaKind::PassiveCzChain { .. } => "passive-cz-scheme",
            BsaKind::ActiveSfg => "bell-scheme-with-active-optics",
        }
    }
}

/// Proportionality constants for the scaling laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConstants {
    /// Cavity CZ failure `k / C`.
    pub cavity_failure: f64,
    /// Cavity CZ asymmetric spontaneous-emission error `k / C^2`.
    pub cavity_asymmetric_loss: f64,
    /// Cavity CZ pulse distortion `k sigma_omega / kappa`.
    pub pulse_distortion: f64,
    /// Active two-spin error `k (sigma_omega / Gamma)^4`.
    pub active_error: f64,
    /// Photon-sorter error `k (dGamma_1d / sigma_omega)^2`.
    pub sorter_error: f64,
    /// Active-optics failure `k (1 - beta) / beta`.
    pub sfg_failure: f64,
    /// Active-optics error `k (dGamma_1d / sigma_omega)^2`.
    pub sfg_error: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        Self {
            cavity_failure: 1.0,
            cavity_asymmetric_loss: 1.0,
            pulse_distortion: 1.0,
            active_error: 1.0,
            sorter_error: 1.0,
            sfg_failure: 1.0,
            sfg_error: 1.0,
        }
    }
}

/// Success probability of one photon-sorter stage.
pub const SORTER_STAGE_SUCCESS: f64 = 0.75;
/// Passive CZ chain error prefactor and exponent.
pub const CZ_CHAIN_ERROR: (f64, f64) = (0.537, -1.61);
/// Passive CZ chain optimal-width prefactor and exponent.
pub const CZ_CHAIN_WIDTH: (f64, f64) = (0.350, -0.81);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBsaModel", into = "RawBsaModel")]
pub struct BsaModel {
    pub kind: BsaKind,
    /// Spectral width of the Gaussian input pulses (rad/s).
    pub pulse_width_sigma_omega: f64,
    /// Waveguide-decay mismatch between the emitters (1/s).
    pub delta_gamma_1d: f64,
    pub emitter: EmitterParams,
    pub constants: ModelConstants,
}

impl BsaModel {
    pub fn new(kind: BsaKind, emitter: EmitterParams) -> Self {
        Self {
            kind,
            pulse_width_sigma_omega: 0.0,
            delta_gamma_1d: 0.0,
            emitter,
            constants: ModelConstants::default(),
        }
    }

    /// Every violated constraint as `(field, reason)`.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .emitter
            .violations()
            .into_iter()
            .map(|(f, r)| (format!("emitter.{f}"), r))
            .collect();
        for (name, v) in [
            ("pulse_width_sigma_omega", self.pulse_width_sigma_omega),
            ("delta_gamma_1d", self.delta_gamma_1d),
        ] {
            if v.is_nan() || v < 0.0 {
                out.push((name.into(), format!("must be >= 0, got {v}")));
            }
        }
        match self.kind {
            BsaKind::LinearOptics { aux_photons } if aux_photons != 0 && aux_photons != 4 => {
                out.push(("aux_photons".into(), format!("supported values are 0 and 4, got {aux_photons}")));
            }
            BsaKind::PassiveSorter { concatenations: 0 } => {
                out.push(("concatenations".into(), "must be >= 1".into()));
            }
            BsaKind::PassiveCzChain { n_emitters: 0 } => {
                out.push(("n_emitters".into(), "must be >= 1".into()));
            }
            _ => {}
        }
        let waveguide_only = matches!(
            self.kind,
            BsaKind::ActiveTwoSpin
                | BsaKind::PassiveSorter { .. }
                | BsaKind::PassiveCzChain { .. }
                | BsaKind::ActiveSfg
        );
        if waveguide_only && self.emitter.geometry != Geometry::Waveguide {
            out.push((
                "emitter.geometry".into(),
                format!("{} requires a waveguide emitter", self.kind.name()),
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some((field, reason)) => Err(AnalyzerError::InvalidModel(format!("{field}: {reason}"))),
            None => Ok(()),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBsaModel {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aux_photons: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    concatenations: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_emitters: Option<u32>,
    #[serde(default)]
    pulse_width_sigma_omega: f64,
    #[serde(default)]
    delta_gamma_1d: f64,
    emitter: EmitterParams,
    #[serde(default)]
    constants: ModelConstants,
}

impl TryFrom<RawBsaModel> for BsaModel {
    type Error = String;

    fn try_from(raw: RawBsaModel) -> std::result::Result<Self, String> {
        let stray = |field: &str, value: Option<u32>| match value {
            Some(_) => Err(format!("field `{field}` does not apply to kind `{}`", raw.kind)),
            None => Ok(()),
        };
        let kind = match raw.kind.as_str() {
            "linear-optics" => {
                stray("concatenations", raw.concatenations)?;
                stray("n_emitters", raw.n_emitters)?;
                BsaKind::LinearOptics {
                    aux_photons: raw.aux_photons.unwrap_or(0),
                }
            }
            "cavity-cz-gate" | "cavity-cz" => BsaKind::CavityCz,
            "active-bell-scheme" | "active-two-spin" => BsaKind::ActiveTwoSpin,
            "passive-bell-scheme" | "passive-sorter" => {
                stray("aux_photons", raw.aux_photons)?;
                stray("n_emitters", raw.n_emitters)?;
                BsaKind::PassiveSorter {
                    concatenations: raw.concatenations.unwrap_or(1),
                }
            }
            "passive-cz-scheme" | "passive-cz-chain" => {
                stray("aux_photons", raw.aux_photons)?;
                stray("concatenations", raw.concatenations)?;
                BsaKind::PassiveCzChain {
                    n_emitters: raw.n_emitters.unwrap_or(1),
                }
            }
            "bell-scheme-with-active-optics" | "active-sfg" => BsaKind::ActiveSfg,
            other => return Err(format!("unknown analyzer kind `{other}`")),
        };
        if matches!(kind, BsaKind::CavityCz | BsaKind::ActiveTwoSpin | BsaKind::ActiveSfg) {
            stray("aux_photons", raw.aux_photons)?;
            stray("concatenations", raw.concatenations)?;
            stray("n_emitters", raw.n_emitters)?;
        }
        Ok(BsaModel {
            kind,
            pulse_width_sigma_omega: raw.pulse_width_sigma_omega,
            delta_gamma_1d: raw.delta_gamma_1d,
            emitter: raw.emitter,
            constants: raw.constants,
        })
    }
}

impl From<BsaModel> for RawBsaModel {
    fn from(m: BsaModel) -> Self {
        let (aux_photons, concatenations, n_emitters) = match m.kind {
            BsaKind::LinearOptics { aux_photons } => (Some(aux_photons), None, None),
            BsaKind::PassiveSorter { concatenations } => (None, Some(concatenations), None),
            BsaKind::PassiveCzChain { n_emitters } => (None, None, Some(n_emitters)),
            _ => (None, None, None),
        };
        RawBsaModel {
            kind: m.kind.name().to_string(),
            aux_photons,
            concatenations,
            n_emitters,
            pulse_width_sigma_omega: m.pulse_width_sigma_omega,
            delta_gamma_1d: m.delta_gamma_1d,
            emitter: m.emitter,
            constants: m.constants,
        }
    }
}

/// Announced analyzer result; `Failure` is always heralded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
    Failure,
}

impl BellOutcome {
    pub fn bell(self) -> Option<Bell> {
        match self {
            BellOutcome::PhiPlus => Some(Bell::PhiPlus),
            BellOutcome::PhiMinus => Some(Bell::PhiMinus),
            BellOutcome::PsiPlus => Some(Bell::PsiPlus),
            BellOutcome::PsiMinus => Some(Bell::PsiMinus),
            BellOutcome::Failure => None,
        }
    }

    pub fn is_success(self) -> bool {
        self != BellOutcome::Failure
    }
}

impl From<Bell> for BellOutcome {
    fn from(b: Bell) -> Self {
        match b {
            Bell::PhiPlus => BellOutcome::PhiPlus,
            Bell::PhiMinus => BellOutcome::PhiMinus,
            Bell::PsiPlus => BellOutcome::PsiPlus,
            Bell::PsiMinus => BellOutcome::PsiMinus,
        }
    }
}

/// `x` if finite and in range, saturating the obvious limits.
fn prob(x: f64) -> f64 {
    if x.is_nan() {
        1.0
    } else {
        x.clamp(0.0, 1.0)
    }
}

/// `(num / den)^power` with `0/0 = 0` and `x/0 = inf`.
fn ratio_pow(num: f64, den: f64, power: i32) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        (num / den).powi(power)
    }
}

pub fn bsa_success_prob(m: &BsaModel) -> Result<f64> {
    m.validate()?;
    let k = &m.constants;
    Ok(match m.kind {
        BsaKind::LinearOptics { aux_photons: 0 } => 0.5,
        BsaKind::LinearOptics { .. } => 0.75,
        BsaKind::CavityCz => {
            let c = effective_cooperativity(&m.emitter, false)?;
            prob(1.0 - ratio_pow(k.cavity_failure, c, 1))
        }
        BsaKind::ActiveTwoSpin => {
            let b = effective_beta(&m.emitter, false)?;
            if b <= 0.5 {
                0.0
            } else {
                (2.0 * b - 1.0).powi(2)
            }
        }
        BsaKind::PassiveSorter { concatenations } => {
            let s = 1.0 - (1.0 - SORTER_STAGE_SUCCESS).powi(concatenations as i32);
            s.min(1.0 - f64::EPSILON)
        }
        BsaKind::PassiveCzChain { .. } => 1.0,
        BsaKind::ActiveSfg => {
            let b = effective_beta(&m.emitter, false)?;
            prob(1.0 - k.sfg_failure * ratio_pow(1.0 - b, b, 1))
        }
    })
}

pub fn bsa_error_prob(m: &BsaModel) -> Result<f64> {
    m.validate()?;
    let k = &m.constants;
    let sigma = m.pulse_width_sigma_omega;
    Ok(match m.kind {
        BsaKind::LinearOptics { .. } => 0.0,
        BsaKind::CavityCz => {
            let c = effective_cooperativity(&m.emitter, false)?;
            prob(k.pulse_distortion * pulse_term(m) + k.cavity_asymmetric_loss * ratio_pow(1.0, c, 2))
        }
        BsaKind::ActiveTwoSpin => prob(k.active_error * ratio_pow(sigma, m.emitter.total_rate(), 4)),
        BsaKind::PassiveSorter { .. } => prob(k.sorter_error * ratio_pow(m.delta_gamma_1d, sigma, 2)),
        BsaKind::PassiveCzChain { n_emitters } => {
            prob(CZ_CHAIN_ERROR.0 * (n_emitters as f64).powf(CZ_CHAIN_ERROR.1))
        }
        BsaKind::ActiveSfg => prob(k.sfg_error * ratio_pow(m.delta_gamma_1d, sigma, 2)),
    })
}

/// Pulse-distortion infidelity against the cavity linewidth, or the total
/// decay rate for a waveguide emitter.
fn pulse_term(m: &BsaModel) -> f64 {
    let width = match m.emitter.geometry {
        Geometry::Cavity => m.emitter.kappa,
        Geometry::Waveguide => m.emitter.total_rate(),
    };
    interface::pulse_distortion_infidelity(m.pulse_width_sigma_omega, width)
}

/// Optimal pulse width `0.350 N^-0.81 Gamma` for an `N`-emitter passive CZ.
pub fn optimal_pulse_width(n_emitters: u32, gamma_total: f64) -> f64 {
    debug_assert!(n_emitters >= 1 && gamma_total > 0.0);
    CZ_CHAIN_WIDTH.0 * (n_emitters as f64).powf(CZ_CHAIN_WIDTH.1) * gamma_total
}

/// Result of running an analyzer on a state.
#[derive(Debug, Clone)]
pub struct BsaRun {
    pub outcome: BellOutcome,
    /// State of the qubits other than the measured photons, if any remain.
    pub state: Option<MixedState>,
}

fn check_photon(state: &MixedState, q: QubitLabel, kind: QubitKind, what: &'static str) -> Result<QubitLabel> {
    let pos = state
        .register()
        .position(&q)
        .map_err(|_| AnalyzerError::NotPhotonic(q.id(), what))?;
    let label = state.register()[pos];
    if label.kind() != kind {
        return Err(AnalyzerError::NotPhotonic(q.id(), what));
    }
    Ok(label)
}

fn trace_out(state: &MixedState, labels: &[QubitLabel]) -> Result<Option<MixedState>> {
    if labels.len() == state.num_qubits() {
        return Ok(None);
    }
    Ok(Some(state.partial_trace(labels)?))
}

/// Picks one of the three other Bell states uniformly.
fn misidentify(true_bell: Bell, rng: &mut dyn RngCore) -> Bell {
    let others: Vec<Bell> = Bell::ALL.into_iter().filter(|b| *b != true_bell).collect();
    others[rng.random_range(0..others.len())]
}

/// Bell measurement of two photonic polarization qubits.
///
/// The cavity CZ analyzer is simulated at circuit level: an auxiliary spin
/// in `|+>` scatters both photons, its X readout gives the ZZ parity,
/// and Hadamard plus Z detection on the photons gives the XX parity. Photon
/// loss during scattering is a heralded failure. Every other family samples
/// success from [`bsa_success_prob`] and then projects onto the Bell basis,
/// announcing a wrong outcome with probability [`bsa_error_prob`].
pub fn simulate_bsa(
    state: &MixedState,
    photons: [QubitLabel; 2],
    m: &BsaModel,
    rng: &mut dyn RngCore,
) -> Result<BsaRun> {
    m.validate()?;
    let p1 = check_photon(state, photons[0], QubitKind::PhotonPolarization, "polarization")?;
    let p2 = check_photon(state, photons[1], QubitKind::PhotonPolarization, "polarization")?;
    if p1.id() == p2.id() {
        return Err(AnalyzerError::NotPhotonic(p2.id(), "polarization"));
    }
    let error = bsa_error_prob(m)?;
    let (true_bell, post) = match m.kind {
        BsaKind::CavityCz => match cavity_cz_circuit(state, [p1, p2], &m.emitter, rng)? {
            Some(found) => found,
            None => {
                return Ok(BsaRun {
                    outcome: BellOutcome::Failure,
                    state: trace_out(state, &[p1, p2])?,
                })
            }
        },
        _ => {
            let success = bsa_success_prob(m)?;
            if rng.random::<f64>() >= success {
                return Ok(BsaRun {
                    outcome: BellOutcome::Failure,
                    state: trace_out(state, &[p1, p2])?,
                });
            }
            born_bell_projection(state, [p1, p2], rng)?
        }
    };
    let announced = if error > 0.0 && rng.random::<f64>() < error {
        misidentify(true_bell, rng)
    } else {
        true_bell
    };
    Ok(BsaRun {
        outcome: announced.into(),
        state: post,
    })
}

fn born_bell_projection(
    state: &MixedState,
    photons: [QubitLabel; 2],
    rng: &mut dyn RngCore,
) -> Result<(Bell, Option<MixedState>)> {
    let bell = Measurement::new(gates::bell_basis(), photons.to_vec())?;
    let r = state.measure_projective(&bell, Outcome::Sample(rng))?;
    let b = Bell::from_index(r.outcome).expect("four Bell projectors");
    Ok((b, trace_out(&r.state, &photons)?))
}

/// Bell measurement conditioned on the analyzer having succeeded: a Born
/// projection followed by misidentification with [`bsa_error_prob`].
/// Used where success was already sampled, e.g. by geometric waiting.
pub fn heralded_bell_measurement(
    state: &MixedState,
    photons: [QubitLabel; 2],
    m: &BsaModel,
    rng: &mut dyn RngCore,
) -> Result<(Bell, Option<MixedState>)> {
    let p1 = check_photon(state, photons[0], QubitKind::PhotonPolarization, "polarization")?;
    let p2 = check_photon(state, photons[1], QubitKind::PhotonPolarization, "polarization")?;
    let error = bsa_error_prob(m)?;
    let (true_bell, post) = born_bell_projection(state, [p1, p2], rng)?;
    let announced = if error > 0.0 && rng.random::<f64>() < error {
        misidentify(true_bell, rng)
    } else {
        true_bell
    };
    Ok((announced, post))
}

/// Runs the scattering circuit; `None` on heralded photon loss.
fn cavity_cz_circuit(
    state: &MixedState,
    photons: [QubitLabel; 2],
    emitter: &EmitterParams,
    rng: &mut dyn RngCore,
) -> Result<Option<(Bell, Option<MixedState>)>> {
    let anc = QubitLabel::spin(state.register().next_free_id());
    let plus = PureState::from_amplitudes(
        Register::new(vec![anc])?,
        vec![C64::new(FRAC_1_SQRT_2, 0.0); 2],
    )?;
    let mut rho = state.tensor(&plus.to_mixed())?;
    for photon in photons {
        let ch = interface::spin_photon_cz_channel(emitter, photon, anc)?;
        let split = rho.split_by_loss(&ch)?;
        let lost = rng.random::<f64>() < split.lost_probability;
        match (lost, split.kept) {
            (false, Some(kept)) => rho = kept,
            _ => return Ok(None),
        }
    }
    let x_basis = Measurement::new(gates::x_basis(), vec![anc])?;
    let parity_zz = rho.measure_projective(&x_basis, Outcome::Sample(rng))?;
    rho = parity_zz.state;
    let mut x_bits = 0;
    for photon in photons {
        rho = rho.apply_unitary(&gates::h(), &[photon])?;
        let z = Measurement::new(gates::z_basis(), vec![photon])?;
        let r = rho.measure_projective(&z, Outcome::Sample(rng))?;
        x_bits ^= r.outcome;
        rho = r.state;
    }
    let bell = match (parity_zz.outcome, x_bits) {
        (0, 0) => Bell::PhiPlus,
        (0, _) => Bell::PhiMinus,
        (_, 0) => Bell::PsiPlus,
        _ => Bell::PsiMinus,
    };
    let rest = trace_out(&rho, &[photons[0], photons[1], anc])?;
    Ok(Some((bell, rest)))
}

/// Wrong-answer probability of the spin-based QND detector:
/// `1/beta_coh - 1` (waveguide) or `1/C_coh` (cavity), clipped to `[0, 1/2]`.
pub fn qnd_error_prob(p: &EmitterParams) -> Result<f64> {
    p.validate()?;
    let e = match p.geometry {
        Geometry::Waveguide => {
            let b = interface::beta_coh(p)?;
            ratio_pow(1.0, b, 1) - 1.0
        }
        Geometry::Cavity => ratio_pow(1.0, interface::cooperativity(p, true)?, 1),
    };
    Ok(if e.is_nan() { 0.5 } else { e.clamp(0.0, 0.5) })
}

/// Non-demolition detection of a photon-presence qubit.
///
/// An auxiliary spin in `(|g> + |s>)/sqrt2` acquires a phase flip when a
/// photon scatters; the detector's imperfection is a further phase flip with
/// probability [`qnd_error_prob`]. The auxiliary spin is read out in the X
/// basis and discarded. Only diagonal operators touch the presence qubit,
/// so its populations are untouched.
pub fn qnd_detect(
    state: &MixedState,
    presence: QubitLabel,
    p: &EmitterParams,
    rng: &mut dyn RngCore,
) -> Result<(bool, MixedState)> {
    let presence = check_photon(state, presence, QubitKind::PhotonPresence, "presence")?;
    let error = qnd_error_prob(p)?;
    let anc = QubitLabel::spin(state.register().next_free_id());
    let plus = PureState::from_amplitudes(
        Register::new(vec![anc])?,
        vec![C64::new(FRAC_1_SQRT_2, 0.0); 2],
    )?;
    let rho = state
        .tensor(&plus.to_mixed())?
        .apply_unitary(&gates::cz(), &[presence, anc])?
        .apply_channel(&crate::qsim::QuantumChannel::pauli_flip(anc, gates::z(), error)?)?;
    let x_basis = Measurement::new(gates::x_basis(), vec![anc])?;
    let r = rho.measure_projective(&x_basis, Outcome::Sample(rng))?;
    Ok((r.outcome == 1, r.state.partial_trace(&[anc])?))
}

/// Monte-Carlo benchmark of an analyzer on two ideal spin-photon pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsaBench {
    pub success_prob: f64,
    pub error_prob: f64,
    pub trials: u64,
    pub successes: u64,
    pub success_fraction: f64,
    /// Mean `|phi+>` fidelity of the spin pair after the outcome-dependent
    /// Pauli correction, over successful trials.
    pub mean_fidelity: f64,
}

/// Runs the analyzer on the photons of `(|gH> + |sV>)/sqrt2 (x2)` and
/// corrects the remaining spins towards `|phi+>`. Trial `i` uses stream
/// `i` of `seed`.
pub fn bench_bsa(m: &BsaModel, trials: u64, seed: u64) -> Result<BsaBench> {
    m.validate()?;
    let (sa, pa) = (QubitLabel::spin(0), QubitLabel::photon(1));
    let (sb, pb) = (QubitLabel::spin(2), QubitLabel::photon(3));
    let pair = |s, p| {
        PureState::from_amplitudes(Register::new(vec![s, p])?, Bell::PhiPlus.amplitudes().to_vec())
    };
    let input = pair(sa, pa)?.tensor(&pair(sb, pb)?)?.to_mixed();
    let target = PureState::from_amplitudes(
        Register::new(vec![sa, sb])?,
        Bell::PhiPlus.amplitudes().to_vec(),
    )?;
    let runs = crate::mc::run_trials(trials, seed, |_, rng| -> Result<Option<f64>> {
        let run = simulate_bsa(&input, [pa, pb], m, rng)?;
        match (run.outcome.bell(), run.state) {
            (Some(b), Some(spins)) => {
                let fixed = spins.apply_unitary(&b.correction(), &[sb])?;
                Ok(Some(fixed.fidelity(&target)?))
            }
            _ => Ok(None),
        }
    });
    let mut successes = 0u64;
    let mut fidelity_sum = 0.0;
    for r in runs {
        if let Some(f) = r? {
            successes += 1;
            fidelity_sum += f;
        }
    }
    Ok(BsaBench {
        success_prob: bsa_success_prob(m)?,
        error_prob: bsa_error_prob(m)?,
        trials,
        successes,
        success_fraction: if trials > 0 { successes as f64 / trials as f64 } else { 0.0 },
        mean_fidelity: if successes > 0 { fidelity_sum / successes as f64 } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(kind: BsaKind, emitter: EmitterParams) -> BsaModel {
        BsaModel::new(kind, emitter)
    }

    #[test]
    fn linear_optics_success() {
        let e = EmitterParams::waveguide(1.0);
        assert_eq!(bsa_success_prob(&model(BsaKind::LinearOptics { aux_photons: 0 }, e)).unwrap(), 0.5);
        assert_eq!(bsa_success_prob(&model(BsaKind::LinearOptics { aux_photons: 4 }, e)).unwrap(), 0.75);
        assert!(bsa_success_prob(&model(BsaKind::LinearOptics { aux_photons: 2 }, e)).is_err());
        assert_eq!(bsa_error_prob(&model(BsaKind::LinearOptics { aux_photons: 0 }, e)).unwrap(), 0.0);
    }

    #[test]
    fn active_two_spin_success() {
        let at = |b| bsa_success_prob(&model(BsaKind::ActiveTwoSpin, EmitterParams::waveguide(b))).unwrap();
        assert_eq!(at(1.0), 1.0);
        assert_eq!(at(0.5), 0.0);
        assert_abs_diff_eq!(at(0.8), 0.36, epsilon = 1e-12);
        let mut last = 0.0;
        for i in 0..=50 {
            let s = at(0.5 + i as f64 / 100.0);
            assert!(s >= last);
            last = s;
        }
    }

    #[test]
    fn cavity_and_sfg_success_scale_as_failure_laws() {
        let cz = |c| bsa_success_prob(&model(BsaKind::CavityCz, EmitterParams::cavity(c))).unwrap();
        assert_abs_diff_eq!(cz(10.0), 0.9, epsilon = 1e-12);
        assert_eq!(cz(f64::INFINITY), 1.0);
        assert_eq!(cz(0.5), 0.0);
        let sfg = |b| bsa_success_prob(&model(BsaKind::ActiveSfg, EmitterParams::waveguide(b))).unwrap();
        assert_abs_diff_eq!(sfg(0.9), 1.0 - 0.1 / 0.9, epsilon = 1e-12);
        assert_eq!(sfg(0.0), 0.0);
    }

    #[test]
    fn sorter_concatenation() {
        let s = |k| {
            bsa_success_prob(&model(BsaKind::PassiveSorter { concatenations: k }, EmitterParams::waveguide(1.0))).unwrap()
        };
        assert_eq!(s(1), 0.75);
        assert_eq!(s(2), 0.9375);
        assert!(s(40) < 1.0);
        assert!(bsa_success_prob(&model(BsaKind::PassiveSorter { concatenations: 0 }, EmitterParams::waveguide(1.0))).is_err());
    }

    #[test]
    fn error_examples() {
        let e = EmitterParams::waveguide(1.0);
        let chain = bsa_error_prob(&model(BsaKind::PassiveCzChain { n_emitters: 1 }, e)).unwrap();
        assert_abs_diff_eq!(chain, 0.537, epsilon = 1e-15);
        let chain8 = bsa_error_prob(&model(BsaKind::PassiveCzChain { n_emitters: 8 }, e)).unwrap();
        assert_abs_diff_eq!(chain8, 0.537 * 8f64.powf(-1.61), epsilon = 1e-15);

        let mut active = model(BsaKind::ActiveTwoSpin, e);
        assert_eq!(bsa_error_prob(&active).unwrap(), 0.0);
        active.pulse_width_sigma_omega = 0.1;
        assert_abs_diff_eq!(bsa_error_prob(&active).unwrap(), 1e-4, epsilon = 1e-15);

        let mut sorter = model(BsaKind::PassiveSorter { concatenations: 1 }, e);
        sorter.pulse_width_sigma_omega = 2.0;
        assert_eq!(bsa_error_prob(&sorter).unwrap(), 0.0);
        sorter.delta_gamma_1d = 0.2;
        assert_abs_diff_eq!(bsa_error_prob(&sorter).unwrap(), 0.01, epsilon = 1e-15);

        let mut cz = model(BsaKind::CavityCz, EmitterParams::cavity(10.0));
        assert_abs_diff_eq!(bsa_error_prob(&cz).unwrap(), 0.01, epsilon = 1e-15);
        cz.pulse_width_sigma_omega = 0.4;
        assert_abs_diff_eq!(bsa_error_prob(&cz).unwrap(), 0.11, epsilon = 1e-15);
    }

    #[test]
    fn waveguide_schemes_reject_cavity_emitters() {
        let m = model(BsaKind::ActiveTwoSpin, EmitterParams::cavity(10.0));
        assert!(matches!(bsa_success_prob(&m), Err(AnalyzerError::InvalidModel(_))));
    }

    #[test]
    fn optimal_width_examples() {
        assert_abs_diff_eq!(optimal_pulse_width(1, 1.0), 0.350, epsilon = 1e-15);
        assert_abs_diff_eq!(optimal_pulse_width(1, 2.0), 0.700, epsilon = 1e-15);
        assert_abs_diff_eq!(optimal_pulse_width(8, 1.0), 0.064_947_906_215_020_89, epsilon = 1e-15);
    }

    #[test]
    fn model_roundtrips_through_toml() {
        let mut m = model(BsaKind::PassiveCzChain { n_emitters: 3 }, EmitterParams::waveguide(0.9));
        m.delta_gamma_1d = 0.01;
        let text = toml::to_string(&m).unwrap();
        let back: BsaModel = toml::from_str(&text).unwrap();
        assert_eq!(back, m);
        let bad = text.replace("n_emitters", "aux_photons");
        assert!(toml::from_str::<BsaModel>(&bad).is_err());
    }

    fn spins_and_photons() -> (MixedState, [QubitLabel; 2]) {
        let amps = Bell::PhiPlus.amplitudes().to_vec();
        let a = PureState::from_amplitudes(
            Register::new(vec![QubitLabel::spin(0), QubitLabel::photon(1)]).unwrap(),
            amps.clone(),
        )
        .unwrap();
        let b = PureState::from_amplitudes(
            Register::new(vec![QubitLabel::spin(2), QubitLabel::photon(3)]).unwrap(),
            amps,
        )
        .unwrap();
        (a.tensor(&b).unwrap().to_mixed(), [QubitLabel::photon(1), QubitLabel::photon(3)])
    }

    fn spin_bell(b: Bell) -> PureState {
        PureState::from_amplitudes(
            Register::new(vec![QubitLabel::spin(0), QubitLabel::spin(2)]).unwrap(),
            b.amplitudes().to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn ideal_cavity_cz_projects_spins_onto_announced_bell_state() {
        let (rho, photons) = spins_and_photons();
        let m = model(BsaKind::CavityCz, EmitterParams::cavity(f64::INFINITY));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 4];
        let trials = 4000;
        for _ in 0..trials {
            let run = simulate_bsa(&rho, photons, &m, &mut rng).unwrap();
            let b = run.outcome.bell().expect("ideal analyzer never fails");
            counts[b.index()] += 1;
            let f = run.state.unwrap().fidelity(&spin_bell(b)).unwrap();
            assert!((f - 1.0).abs() < 1e-9, "{f}");
        }
        let sigma = (trials as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - trials as f64 / 4.0).abs() < 3.5 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn heralded_outcome_is_sound_without_error() {
        let (rho, photons) = spins_and_photons();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = model(BsaKind::ActiveTwoSpin, EmitterParams::waveguide(0.9));
        for _ in 0..200 {
            let run = simulate_bsa(&rho, photons, &m, &mut rng).unwrap();
            if let Some(b) = run.outcome.bell() {
                let f = run.state.unwrap().fidelity(&spin_bell(b)).unwrap();
                assert!((f - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_optics_success_frequency() {
        let (rho, photons) = spins_and_photons();
        let m = model(BsaKind::LinearOptics { aux_photons: 0 }, EmitterParams::waveguide(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let trials = 100_000;
        let ok = (0..trials)
            .filter(|_| simulate_bsa(&rho, photons, &m, &mut rng).unwrap().outcome.is_success())
            .count();
        let sigma = (trials as f64 * 0.25).sqrt();
        assert!((ok as f64 - trials as f64 * 0.5).abs() < 3.0 * sigma, "{ok}");
    }

    #[test]
    fn active_two_spin_at_half_always_fails() {
        let (rho, photons) = spins_and_photons();
        let m = model(BsaKind::ActiveTwoSpin, EmitterParams::waveguide(0.5));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let run = simulate_bsa(&rho, photons, &m, &mut rng).unwrap();
            assert_eq!(run.outcome, BellOutcome::Failure);
            assert_eq!(run.state.unwrap().num_qubits(), 2);
        }
    }

    #[test]
    fn finite_cooperativity_loses_photons() {
        let (rho, photons) = spins_and_photons();
        let m = model(BsaKind::CavityCz, EmitterParams::cavity(3.0));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fails = (0..2000)
            .filter(|_| !simulate_bsa(&rho, photons, &m, &mut rng).unwrap().outcome.is_success())
            .count();
        assert!(fails > 100, "{fails}");
    }

    #[test]
    fn bsa_requires_two_photons() {
        let (rho, _) = spins_and_photons();
        let m = model(BsaKind::LinearOptics { aux_photons: 0 }, EmitterParams::waveguide(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = simulate_bsa(&rho, [QubitLabel::photon(0), QubitLabel::photon(3)], &m, &mut rng).unwrap_err();
        assert_eq!(err, AnalyzerError::NotPhotonic(0, "polarization"));
        let err = simulate_bsa(&rho, [QubitLabel::photon(7), QubitLabel::photon(3)], &m, &mut rng).unwrap_err();
        assert_eq!(err, AnalyzerError::NotPhotonic(7, "polarization"));
    }

    fn presence_plus_polarization(present: bool) -> MixedState {
        // presence qubit, polarization in |+>
        let n = QubitLabel::presence(0);
        let pol = QubitLabel::photon(1);
        let s = FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let amps = if present {
            vec![z, z, C64::new(s, 0.0), C64::new(s, 0.0)]
        } else {
            vec![C64::new(s, 0.0), C64::new(s, 0.0), z, z]
        };
        PureState::from_amplitudes(Register::new(vec![n, pol]).unwrap(), amps).unwrap().to_mixed()
    }

    #[test]
    fn qnd_ideal_detects_photon() {
        let rho = presence_plus_polarization(true);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let (present, post) = qnd_detect(&rho, QubitLabel::presence(0), &EmitterParams::waveguide(1.0), &mut rng).unwrap();
            assert!(present);
            assert_eq!(post.register(), rho.register());
            assert!((post.matrix() - rho.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn qnd_without_photon_leaves_state_alone() {
        let rho = presence_plus_polarization(false);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = EmitterParams::waveguide(0.8);
        for _ in 0..200 {
            let (_, post) = qnd_detect(&rho, QubitLabel::presence(0), &p, &mut rng).unwrap();
            assert!((post.matrix() - rho.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn qnd_error_probability() {
        let mut p = EmitterParams::waveguide(0.99);
        assert_abs_diff_eq!(qnd_error_prob(&p).unwrap(), 1.0 / 0.99 - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(qnd_error_prob(&p).unwrap(), 0.0101, epsilon = 1e-5);
        p.gamma_1d = 0.0;
        assert_eq!(qnd_error_prob(&p).unwrap(), 0.5);
        assert_abs_diff_eq!(qnd_error_prob(&EmitterParams::cavity(50.0)).unwrap(), 0.02, epsilon = 1e-12);
    }

    #[test]
    fn qnd_preserves_presence_populations() {
        // presence in superposition, entangled with polarization
        let n = QubitLabel::presence(0);
        let pol = QubitLabel::photon(1);
        let amps = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.8, 0.0)];
        let rho = PureState::from_amplitudes(Register::new(vec![n, pol]).unwrap(), amps).unwrap().to_mixed();
        let before = rho.partial_trace(&[pol]).unwrap();
        let p = EmitterParams::waveguide(0.95);
        // average over outcomes: apply the detector as a channel by summing both branches
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let trials = 20_000;
        let mut acc = nalgebra::DMatrix::<C64>::zeros(2, 2);
        for _ in 0..trials {
            let (_, post) = qnd_detect(&rho, n, &p, &mut rng).unwrap();
            acc += post.partial_trace(&[pol]).unwrap().matrix();
        }
        let mean = acc / C64::new(trials as f64, 0.0);
        // populations: each trial keeps a projected state; averaged they converge to the prior
        assert!((mean[(0, 0)].re - before.matrix()[(0, 0)].re).abs() < 0.02);
    }

    #[test]
    fn bench_reports_frequency_and_fidelity() {
        let m = model(BsaKind::ActiveTwoSpin, EmitterParams::waveguide(0.8));
        let b = bench_bsa(&m, 20_000, 1).unwrap();
        assert_abs_diff_eq!(b.success_prob, 0.36, epsilon = 1e-12);
        let sigma = (0.36 * 0.64 / 20_000.0f64).sqrt();
        assert!((b.success_fraction - 0.36).abs() < 3.5 * sigma);
        assert_abs_diff_eq!(b.mean_fidelity, 1.0, epsilon = 1e-12);

        let mut noisy = model(BsaKind::PassiveCzChain { n_emitters: 4 }, EmitterParams::waveguide(1.0));
        noisy.delta_gamma_1d = 0.0;
        let b = bench_bsa(&noisy, 5000, 2).unwrap();
        let e = bsa_error_prob(&noisy).unwrap();
        let sigma = (e * (1.0 - e) / 5000.0).sqrt();
        assert!((1.0 - b.mean_fidelity - e).abs() < 3.5 * sigma);
        assert_eq!(bench_bsa(&noisy, 5000, 2).unwrap(), b);
    }

    #[test]
    fn qnd_rejects_non_presence_qubit() {
        let rho = presence_plus_polarization(true);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(qnd_detect(&rho, QubitLabel::photon(1), &EmitterParams::waveguide(1.0), &mut rng).is_err());
    }
}
