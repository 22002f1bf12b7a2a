//! Photonic GHZ and linear cluster states emitted by one spin, and fusion
//! of two such strings with a Bell-state analyzer.
//!
//! Photon loss is heralded: states are post-selected on every photon being
//! collected and the collection probability is reported separately.
//!
//! Emission order per cycle: spin phase damping `exp(-cycle_time/T_coh)`,
//! CNOT from the spin onto a fresh `|H>` photon, photon phase damping with
//! coherence `beta_coh/beta`, then (cluster only) a Hadamard on the spin.
//! Registers are ordered `[spin, p1, ..., pn]`; the cluster graph is the
//! path `p1 - p2 - ... - pn - spin`.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyzers::{self, AnalyzerError, BsaModel};
use crate::interface::{self, EmitterParams, InterfaceError};
use crate::qsim::{
    gates, MixedState, Pauli, PauliString, PureState, QsimError, QuantumChannel, QubitLabel,
    Register, C64, TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("invalid emission config: {0}")]
    InvalidConfig(String),
    #[error("{requested} qubits exceed the engine cap of {cap}")]
    QubitCap { requested: usize, cap: usize },
    #[error("state has no end photon left to fuse")]
    NoEndPhoton,
    #[error("no stabilizer maps the announced Bell state onto the reference outcome")]
    NoCorrection,
    #[error(transparent)]
    Interface(#[from] InterfaceError),
    #[error(transparent)]
    Analyzer(#[from] AnalyzerError),
    #[error(transparent)]
    Engine(#[from] QsimError),
}

pub type Result<T> = std::result::Result<T, ClusterError>;

fn default_cap() -> usize {
    TOL.max_qubits
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionConfig {
    pub n_photons: usize,
    pub emitter: EmitterParams,
    /// Duration of one excitation-emission round (s).
    pub cycle_time: f64,
    /// Hadamard on the spin after each emission: cluster instead of GHZ.
    #[serde(default)]
    pub intermediate_rotation: bool,
    #[serde(default = "default_cap")]
    pub max_qubits: usize,
}

impl EmissionConfig {
    pub fn new(n_photons: usize, emitter: EmitterParams) -> Self {
        Self {
            n_photons,
            emitter,
            cycle_time: 1.0,
            intermediate_rotation: false,
            max_qubits: default_cap(),
        }
    }

    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self
            .emitter
            .violations()
            .into_iter()
            .map(|(f, r)| (format!("emitter.{f}"), r))
            .collect();
        if self.n_photons == 0 {
            out.push(("n_photons".into(), "must be >= 1".into()));
        }
        if !self.cycle_time.is_finite() || self.cycle_time <= 0.0 {
            out.push(("cycle_time".into(), format!("must be finite and > 0, got {}", self.cycle_time)));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((f, r)) = self.violations().into_iter().next() {
            return Err(ClusterError::InvalidConfig(format!("{f}: {r}")));
        }
        if self.n_photons + 1 > self.max_qubits {
            return Err(ClusterError::QubitCap {
                requested: self.n_photons + 1,
                cap: self.max_qubits,
            });
        }
        Ok(())
    }
}

/// Post-selected multi-qubit state with its collection probability.
#[derive(Debug, Clone)]
pub struct HeraldedState {
    pub state: MixedState,
    pub herald_probability: f64,
    /// Generators of the ideal stabilizer group, over the register order.
    pub stabilizers: Vec<PauliString>,
    /// Photons available for fusion, first one used next.
    pub end_photons: Vec<QubitLabel>,
}

impl HeraldedState {
    /// Expectation value of every stabilizer generator.
    pub fn stabilizer_report(&self) -> Result<Vec<(PauliString, f64)>> {
        self.stabilizers
            .iter()
            .map(|g| Ok((g.clone(), self.state.stabilizer_expectation(g)?)))
            .collect()
    }
}

/// Coherence multiplier on each emitted photon, `beta_coh / beta`.
pub fn photon_coherence(p: &EmitterParams) -> Result<f64> {
    let b = interface::effective_beta(p, false)?;
    if b <= 0.0 {
        return Ok(0.0);
    }
    Ok((interface::effective_beta(p, true)? / b).clamp(0.0, 1.0))
}

/// Probability that all `n` photons are collected, `(beta eta_out)^n`.
pub fn herald_probability(p: &EmitterParams, n: usize) -> Result<f64> {
    let b = interface::effective_beta(p, false)?;
    Ok((b * p.eta_out).powi(n as i32))
}

pub fn emit_ghz(cfg: &EmissionConfig) -> Result<HeraldedState> {
    emit_with(cfg, false)
}

pub fn emit_1d_cluster(cfg: &EmissionConfig) -> Result<HeraldedState> {
    emit_with(cfg, true)
}

/// GHZ or cluster according to `cfg.intermediate_rotation`.
pub fn emit(cfg: &EmissionConfig) -> Result<HeraldedState> {
    emit_with(cfg, cfg.intermediate_rotation)
}

fn emit_with(cfg: &EmissionConfig, rotate: bool) -> Result<HeraldedState> {
    cfg.validate()?;
    let n = cfg.n_photons;
    let spin = QubitLabel::spin(0);
    let spin_coherence = interface::memory_coherence(cfg.cycle_time, cfg.emitter.t_coh);
    let photon_c = photon_coherence(&cfg.emitter)?;
    let plus = C64::new(FRAC_1_SQRT_2, 0.0);
    let mut rho = PureState::from_amplitudes(Register::with_cap(vec![spin], cfg.max_qubits)?, vec![plus, plus])?
        .to_mixed();
    for i in 1..=n {
        let photon = QubitLabel::photon(i as u32);
        rho = rho.apply_channel(&QuantumChannel::phase_damping(spin, spin_coherence))?;
        let fresh = PureState::basis(Register::new(vec![photon])?, 0)?.to_mixed();
        rho = rho.tensor(&fresh)?;
        rho = rho.apply_unitary(&gates::cnot(), &[spin, photon])?;
        rho = rho.apply_channel(&QuantumChannel::phase_damping(photon, photon_c))?;
        if rotate {
            rho = rho.apply_unitary(&gates::h(), &[spin])?;
        }
    }
    let stabilizers = if rotate {
        cluster_generators(n)
    } else {
        ghz_generators(n)
    };
    Ok(HeraldedState {
        state: rho,
        herald_probability: herald_probability(&cfg.emitter, n)?,
        stabilizers,
        end_photons: vec![QubitLabel::photon(1)],
    })
}

/// `X^(n+1)` and `Z_0 Z_i` over `[spin, p1, ..., pn]`.
pub fn ghz_generators(n_photons: usize) -> Vec<PauliString> {
    let len = n_photons + 1;
    let mut out = vec![PauliString::new(vec![Pauli::X; len], false)];
    out.extend((1..len).map(|i| PauliString::from_sparse(len, &[(0, Pauli::Z), (i, Pauli::Z)])));
    out
}

/// `X_v Z_neighbours` on the path `p1 - ... - pn - spin`, over `[spin, p1, ..., pn]`.
pub fn cluster_generators(n_photons: usize) -> Vec<PauliString> {
    let len = n_photons + 1;
    // path order as register positions
    let path: Vec<usize> = (1..len).chain(std::iter::once(0)).collect();
    (0..len)
        .map(|k| {
            let mut f = vec![(path[k], Pauli::X)];
            if k > 0 {
                f.push((path[k - 1], Pauli::Z));
            }
            if k + 1 < len {
                f.push((path[k + 1], Pauli::Z));
            }
            PauliString::from_sparse(len, &f)
        })
        .collect()
}

/// Result of a fusion attempt.
#[derive(Debug, Clone)]
pub enum Fusion {
    Fused(HeraldedState),
    Failed,
}

impl Fusion {
    pub fn is_fused(&self) -> bool {
        matches!(self, Fusion::Fused(_))
    }

    /// Fuses two attempts, propagating any earlier failure.
    pub fn fuse_with(self, other: Fusion, m: &BsaModel, rng: &mut dyn RngCore) -> Result<Fusion> {
        match (self, other) {
            (Fusion::Fused(a), Fusion::Fused(b)) => fuse_strings(&a, &b, m, rng),
            _ => Ok(Fusion::Failed),
        }
    }
}

/// Letters of `P` on the two measured photons that map `|phi+>` onto the
/// given Bell state up to phase.
fn bell_coset(b: gates::Bell) -> [[Pauli; 2]; 4] {
    use Pauli::*;
    match b {
        gates::Bell::PhiPlus => [[I, I], [X, X], [Y, Y], [Z, Z]],
        gates::Bell::PhiMinus => [[I, Z], [X, Y], [Y, X], [Z, I]],
        gates::Bell::PsiPlus => [[I, X], [X, I], [Y, Z], [Z, Y]],
        gates::Bell::PsiMinus => [[I, Y], [X, Z], [Y, I], [Z, X]],
    }
}

/// Every element of the group generated by `gens`, as a Gray-code walk.
fn group_elements(gens: &[PauliString]) -> Vec<PauliString> {
    let n = gens.first().map_or(0, |g| g.len());
    let mut out = Vec::with_capacity(1 << gens.len());
    let mut cur = PauliString::identity(n);
    out.push(cur.clone());
    for i in 1u64..(1u64 << gens.len()) {
        let flip = i.trailing_zeros() as usize;
        cur = cur
            .checked_mul(&gens[flip])
            .expect("stabilizer generators commute");
        out.push(cur.clone());
    }
    out
}

fn symplectic(p: &PauliString) -> u64 {
    p.letters().iter().enumerate().fold(0u64, |acc, (i, l)| {
        let (x, z) = match l {
            Pauli::I => (0, 0),
            Pauli::X => (1, 0),
            Pauli::Y => (1, 1),
            Pauli::Z => (0, 1),
        };
        acc | (x << (2 * i)) | (z << (2 * i + 1))
    })
}

/// Independent subset of `candidates` (GF(2) elimination), at most `limit`.
fn independent(candidates: Vec<PauliString>, limit: usize) -> Vec<PauliString> {
    let mut basis: Vec<u64> = Vec::new();
    let mut out = Vec::new();
    for c in candidates {
        let mut v = symplectic(&c);
        for &b in &basis {
            let top = 63 - b.leading_zeros();
            if v >> top & 1 == 1 {
                v ^= b;
            }
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
            out.push(c);
            if out.len() == limit {
                break;
            }
        }
    }
    out
}

fn pauli_unitary(letters: &[Pauli]) -> crate::qsim::CMatrix {
    PauliString::new(letters.to_vec(), false).matrix()
}

/// Bell-measures the first end photon of each string. On success the
/// outcome-dependent Pauli correction is applied to the remaining qubits,
/// so the result is always the `|phi+>`-projected string.
pub fn fuse_strings(
    a: &HeraldedState,
    b: &HeraldedState,
    m: &BsaModel,
    rng: &mut dyn RngCore,
) -> Result<Fusion> {
    let ea = *a.end_photons.first().ok_or(ClusterError::NoEndPhoton)?;
    let eb_old = *b.end_photons.first().ok_or(ClusterError::NoEndPhoton)?;
    let offset = a.state.register().next_free_id();
    let shift = |q: &QubitLabel| QubitLabel::new(q.id() + offset, q.kind());
    let b_register = Register::with_cap(
        b.state.register().iter().map(shift).collect(),
        usize::MAX,
    )?;
    let b_state = b.state.relabeled(b_register)?;
    let joint = a.state.tensor(&b_state)?;
    let eb = shift(&eb_old);

    let run = analyzers::simulate_bsa(&joint, [ea, eb], m, rng)?;
    let bell = match run.outcome.bell() {
        Some(bell) => bell,
        None => return Ok(Fusion::Failed),
    };
    let rest_state = run.state.ok_or(ClusterError::NoEndPhoton)?;

    let na = a.state.num_qubits();
    let nb = b.state.num_qubits();
    let mut gens: Vec<PauliString> = a
        .stabilizers
        .iter()
        .map(|g| g.tensor(&PauliString::identity(nb)))
        .collect();
    gens.extend(b.stabilizers.iter().map(|g| PauliString::identity(na).tensor(g)));
    let pe = joint.register().positions(&[ea, eb])?;
    let elements = group_elements(&gens);

    let target = bell_coset(bell);
    let correction = elements
        .iter()
        .find(|g| {
            let e = g.restricted(&pe);
            target.iter().any(|t| t == e.letters())
        })
        .ok_or(ClusterError::NoCorrection)?
        .without(&pe);
    let rest_labels: Vec<QubitLabel> = rest_state.register().labels().to_vec();
    let mut state = rest_state;
    for (label, letter) in rest_labels.iter().zip(correction.letters()) {
        if *letter != Pauli::I {
            state = state.apply_unitary(&pauli_unitary(&[*letter]), &[*label])?;
        }
    }

    let fused: Vec<PauliString> = elements
        .iter()
        .filter_map(|g| {
            let e = g.restricted(&pe);
            let yy = match e.letters() {
                [Pauli::I, Pauli::I] | [Pauli::X, Pauli::X] | [Pauli::Z, Pauli::Z] => false,
                [Pauli::Y, Pauli::Y] => true,
                _ => return None,
            };
            let rest = g.without(&pe);
            if rest.letters().iter().all(|l| *l == Pauli::I) {
                return None;
            }
            Some(if yy { rest.negated() } else { rest })
        })
        .collect();
    let stabilizers = independent(fused, na + nb - 2);

    let mut end_photons: Vec<QubitLabel> = a.end_photons[1..].to_vec();
    end_photons.extend(b.end_photons[1..].iter().map(shift));
    Ok(Fusion::Fused(HeraldedState {
        state,
        herald_probability: a.herald_probability
            * b.herald_probability
            * analyzers::bsa_success_prob(m)?,
        stabilizers,
        end_photons,
    }))
}
