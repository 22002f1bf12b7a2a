//! Figure-of-merit algebra for a spin-photon interface and the quantum
//! channels produced by scattering a photon off it.
//!
//! Two cooperativity conventions coexist. Everything here uses the
//! hardware convention `C = 4|g|^2 / (kappa (gamma_rad + gamma_nonrad))`
//! except [`reflection_coefficient`], whose argument is the scattering
//! convention `C' = |g|^2 / (gamma kappa)`, which is `C / 4` when
//! `gamma = gamma_rad + gamma_nonrad`. [`spin_photon_cz_channel`] performs
//! that conversion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qsim::{gates, CMatrix, QsimError, QuantumChannel, QubitLabel, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterfaceError {
    #[error("{field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("operation requires {expected:?} geometry")]
    WrongGeometry { expected: Geometry },
    #[error("{0} has a zero denominator")]
    ZeroRate(&'static str),
    #[error(transparent)]
    Engine(#[from] QsimError),
}

pub type Result<T> = std::result::Result<T, InterfaceError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    Waveguide,
    Cavity,
}

/// Hardware description of one spin-photon interface.
///
/// Rates are in 1/s, `g` and `delta_omega` in rad/s, `t_coh` in s.
/// `gamma_1d` is ignored for cavities; `g` and `kappa` are ignored for
/// waveguides. Detector efficiency is folded into `eta_out`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterParams {
    pub geometry: Geometry,
    #[serde(default)]
    pub gamma_rad: f64,
    #[serde(default)]
    pub gamma_nonrad: f64,
    #[serde(default)]
    pub gamma_dp: f64,
    #[serde(default)]
    pub gamma_1d: f64,
    #[serde(default)]
    pub g: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default = "infinite", with = "crate::serde_inf")]
    pub t_coh: f64,
    #[serde(default)]
    pub delta_omega: f64,
    #[serde(default = "one")]
    pub eta_in: f64,
    #[serde(default = "one")]
    pub eta_out: f64,
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn one() -> f64 {
    1.0
}

impl EmitterParams {
    /// Lossless waveguide emitter with the given beta factor and unit total rate.
    pub fn waveguide(beta: f64) -> Self {
        Self {
            geometry: Geometry::Waveguide,
            gamma_rad: 1.0 - beta,
            gamma_nonrad: 0.0,
            gamma_dp: 0.0,
            gamma_1d: beta,
            g: 0.0,
            kappa: 0.0,
            t_coh: f64::INFINITY,
            delta_omega: 0.0,
            eta_in: 1.0,
            eta_out: 1.0,
        }
    }

    /// Cavity emitter with cooperativity `c` (`kappa = 4`, `gamma_rad = 1`).
    pub fn cavity(c: f64) -> Self {
        Self {
            geometry: Geometry::Cavity,
            gamma_rad: 1.0,
            gamma_nonrad: 0.0,
            gamma_dp: 0.0,
            gamma_1d: 0.0,
            g: c.sqrt(),
            kappa: 4.0,
            t_coh: f64::INFINITY,
            delta_omega: 0.0,
            eta_in: 1.0,
            eta_out: 1.0,
        }
    }

    /// Every violated constraint as `(field, reason)`.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let rates = [
            ("gamma_rad", self.gamma_rad),
            ("gamma_nonrad", self.gamma_nonrad),
            ("gamma_dp", self.gamma_dp),
            ("gamma_1d", self.gamma_1d),
            ("kappa", self.kappa),
            ("delta_omega", self.delta_omega),
        ];
        for (name, v) in rates {
            if v.is_nan() || v < 0.0 {
                out.push((name, format!("must be >= 0, got {v}")));
            }
        }
        if self.g.is_nan() {
            out.push(("g", "must be a number".to_string()));
        }
        for (name, v) in [("eta_in", self.eta_in), ("eta_out", self.eta_out)] {
            if !(0.0..=1.0).contains(&v) {
                out.push((name, format!("must lie in [0, 1], got {v}")));
            }
        }
        if self.t_coh.is_nan() || self.t_coh <= 0.0 {
            out.push(("t_coh", format!("must be > 0, got {}", self.t_coh)));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some((field, reason)) => Err(InterfaceError::InvalidParameter { field, reason }),
            None => Ok(()),
        }
    }

    /// Total decay rate of a waveguide emitter, `Gamma_1d + gamma_rad + gamma_nonrad`.
    pub fn total_rate(&self) -> f64 {
        self.gamma_1d + self.gamma_rad + self.gamma_nonrad
    }

    fn require(&self, expected: Geometry) -> Result<()> {
        self.validate()?;
        if self.geometry != expected {
            return Err(InterfaceError::WrongGeometry { expected });
        }
        Ok(())
    }
}

/// `Gamma_1d / Gamma`.
pub fn beta(p: &EmitterParams) -> Result<f64> {
    p.require(Geometry::Waveguide)?;
    let total = p.total_rate();
    if total <= 0.0 {
        return Err(InterfaceError::ZeroRate("beta"));
    }
    Ok(p.gamma_1d / total)
}

/// `Gamma_1d / (Gamma + gamma_dp)`.
pub fn beta_coh(p: &EmitterParams) -> Result<f64> {
    p.require(Geometry::Waveguide)?;
    let total = p.total_rate() + p.gamma_dp;
    if total <= 0.0 {
        return Err(InterfaceError::ZeroRate("beta_coh"));
    }
    Ok(p.gamma_1d / total)
}

/// `4|g|^2 / (kappa (gamma_rad + gamma_nonrad [+ gamma_dp]))`.
pub fn cooperativity(p: &EmitterParams, coherent: bool) -> Result<f64> {
    p.require(Geometry::Cavity)?;
    let mut gamma = p.gamma_rad + p.gamma_nonrad;
    if coherent {
        gamma += p.gamma_dp;
    }
    let denom = p.kappa * gamma;
    if denom <= 0.0 {
        return Err(InterfaceError::ZeroRate("cooperativity"));
    }
    Ok(4.0 * p.g * p.g / denom)
}

/// Fraction of the emission that goes through the cavity, `C / (1 + C)`.
pub fn cavity_decay_fraction(c: f64) -> f64 {
    if c.is_infinite() {
        1.0
    } else {
        c / (1.0 + c)
    }
}

/// Amplitude reflection coefficient `(-1 + 4C N_s) / (1 + 4C N_s)` with the
/// scattering-convention cooperativity `C = |g|^2 / (gamma kappa)`.
pub fn reflection_coefficient(c: f64, spin_in_s: bool) -> f64 {
    if !spin_in_s {
        return -1.0;
    }
    let x = 4.0 * c;
    if x.is_infinite() {
        1.0
    } else {
        (-1.0 + x) / (1.0 + x)
    }
}

/// Hardware-convention cooperativity; for a waveguide the equivalent
/// `beta / (1 - beta)`, which is infinite at `beta = 1`.
pub fn effective_cooperativity(p: &EmitterParams, coherent: bool) -> Result<f64> {
    match p.geometry {
        Geometry::Cavity => cooperativity(p, coherent),
        Geometry::Waveguide => {
            let b = if coherent { beta_coh(p)? } else { beta(p)? };
            Ok(if b >= 1.0 { f64::INFINITY } else { b / (1.0 - b) })
        }
    }
}

/// Beta factor; for a cavity the decay fraction `C / (1 + C)`.
pub fn effective_beta(p: &EmitterParams, coherent: bool) -> Result<f64> {
    match p.geometry {
        Geometry::Waveguide => {
            if coherent {
                beta_coh(p)
            } else {
                beta(p)
            }
        }
        Geometry::Cavity => Ok(cavity_decay_fraction(cooperativity(p, coherent)?)),
    }
}

/// Probability that a scattering event is incoherent because of pure dephasing.
fn dephasing_weight(p: &EmitterParams) -> Result<f64> {
    if p.gamma_dp == 0.0 {
        return Ok(0.0);
    }
    let w = match p.geometry {
        Geometry::Waveguide => {
            let total = p.total_rate() + p.gamma_dp;
            if total <= 0.0 {
                return Err(InterfaceError::ZeroRate("dephasing weight"));
            }
            p.gamma_dp / total
        }
        Geometry::Cavity => {
            let c = cooperativity(p, false)?;
            let c_coh = cooperativity(p, true)?;
            if c == 0.0 {
                0.0
            } else if c_coh == 0.0 {
                1.0
            } else {
                1.0 / c_coh - 1.0 / c
            }
        }
    };
    Ok(w.clamp(0.0, 1.0))
}

/// Ideal spin-photon CZ in the `(photon, spin)` computational basis:
/// the phase flip sits on `|H s> = |01>`.
pub fn ideal_spin_photon_cz() -> CMatrix {
    let d = [1.0, -1.0, 1.0, 1.0];
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(4, d.iter().map(|&v| C64::new(v, 0.0))))
}

/// Channel realised by reflecting a photon off the interface.
///
/// Only `|H>` couples to the emitter. Up to the global mirror phase the
/// coherent operator is `diag(1, 1, 1, -r)` in the `(V g, V s, H g, H s)`
/// ordering, with `r` the spin-`s` reflection coefficient. The missing
/// weight `1 - r^2` on `|H s>` is a heralded-loss operator leaving the spin
/// in `|s>`; pure dephasing adds a spin phase flip on the `|H>` component.
/// At infinite cooperativity without dephasing the channel is exactly the
/// ideal CZ.
pub fn spin_photon_cz_channel(
    p: &EmitterParams,
    photon: QubitLabel,
    spin: QubitLabel,
) -> Result<QuantumChannel> {
    p.validate()?;
    let c = effective_cooperativity(p, false)?;
    let r = reflection_coefficient(c / 4.0, true);
    let z = C64::new(0.0, 0.0);
    let mut coherent = CMatrix::identity(4, 4);
    coherent[(1, 1)] = C64::new(-r, 0.0);
    let mut ops = vec![coherent];
    let mut loss = vec![false];
    let loss_weight = 1.0 - r * r;
    if loss_weight > 0.0 {
        let mut k = CMatrix::from_element(4, 4, z);
        k[(1, 1)] = C64::new(loss_weight.sqrt(), 0.0);
        ops.push(k);
        loss.push(true);
    }
    let labels = vec![photon, spin];
    let scatter = QuantumChannel::with_loss_flags(ops, loss, labels.clone())?;

    let w = dephasing_weight(p)?;
    if w == 0.0 {
        return Ok(scatter);
    }
    let [p_h, p_v]: [CMatrix; 2] = gates::z_basis().try_into().expect("two projectors");
    let id = gates::identity(1);
    let keep = p_v.kronecker(&id) + p_h.kronecker(&id) * C64::new((1.0 - w).sqrt(), 0.0);
    let flip = p_h.kronecker(&gates::z()) * C64::new(w.sqrt(), 0.0);
    let dephase = QuantumChannel::new(vec![keep, flip], labels)?;
    Ok(scatter.then(&dephase)?)
}

/// Additive infidelity from pulse-shape distortion, `sigma_omega / kappa`.
pub fn pulse_distortion_infidelity(sigma_omega: f64, kappa: f64) -> f64 {
    if sigma_omega == 0.0 {
        0.0
    } else if kappa <= 0.0 {
        1.0
    } else {
        (sigma_omega / kappa).min(1.0)
    }
}

/// Fiber segment between two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    pub length_km: f64,
    #[serde(default = "default_attenuation")]
    pub attenuation_db_per_km: f64,
    #[serde(default = "default_speed")]
    pub signal_speed_km_per_s: f64,
}

pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.2;
pub const DEFAULT_SIGNAL_SPEED_KM_PER_S: f64 = 2e5;

fn default_attenuation() -> f64 {
    DEFAULT_ATTENUATION_DB_PER_KM
}

fn default_speed() -> f64 {
    DEFAULT_SIGNAL_SPEED_KM_PER_S
}

impl LinkParams {
    pub fn new(length_km: f64) -> Self {
        Self {
            length_km,
            attenuation_db_per_km: DEFAULT_ATTENUATION_DB_PER_KM,
            signal_speed_km_per_s: DEFAULT_SIGNAL_SPEED_KM_PER_S,
        }
    }

    pub fn with_length(&self, length_km: f64) -> Self {
        Self { length_km, ..*self }
    }

    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.length_km.is_nan() || self.length_km < 0.0 {
            out.push(("length_km", format!("must be >= 0, got {}", self.length_km)));
        }
        if self.attenuation_db_per_km.is_nan() || self.attenuation_db_per_km < 0.0 {
            out.push((
                "attenuation_db_per_km",
                format!("must be >= 0, got {}", self.attenuation_db_per_km),
            ));
        }
        if self.signal_speed_km_per_s.is_nan() || self.signal_speed_km_per_s <= 0.0 {
            out.push((
                "signal_speed_km_per_s",
                format!("must be > 0, got {}", self.signal_speed_km_per_s),
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some((field, reason)) => Err(InterfaceError::InvalidParameter { field, reason }),
            None => Ok(()),
        }
    }

    /// Propagation time over `distance_km` of this fiber.
    pub fn delay_s(&self, distance_km: f64) -> f64 {
        distance_km / self.signal_speed_km_per_s
    }
}

/// `10^(-attenuation * length / 10)`.
pub fn fiber_transmissivity(l: &LinkParams) -> f64 {
    10f64.powf(-l.attenuation_db_per_km * l.length_km / 10.0)
}

/// Phase damping of a stored spin over `t_wait` with multiplier `exp(-t/T_coh)`.
pub fn memory_dephasing_channel(t_wait: f64, p: &EmitterParams, spin: QubitLabel) -> Result<QuantumChannel> {
    if t_wait.is_nan() || t_wait < 0.0 {
        return Err(InterfaceError::InvalidParameter {
            field: "t_wait",
            reason: format!("must be >= 0, got {t_wait}"),
        });
    }
    Ok(QuantumChannel::phase_damping(spin, memory_coherence(t_wait, p.t_coh)))
}

/// `exp(-t / T_coh)`, exactly one at `t = 0` or infinite `T_coh`.
pub fn memory_coherence(t_wait: f64, t_coh: f64) -> f64 {
    if t_wait == 0.0 || t_coh.is_infinite() {
        1.0
    } else {
        (-t_wait / t_coh).exp()
    }
}
