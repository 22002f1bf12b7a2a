use nalgebra::DVector;
use rand::{Rng, RngCore};

use super::kernel::{apply_to_vector, bit, conjugate_matrix};
use super::{
    max_abs_diff, CMatrix, LossSplit, PauliString, QsimError, QuantumChannel, QubitLabel,
    Register, Result, C64, TOL,
};

/// Normalized state vector over a register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    register: Register,
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn from_amplitudes(register: Register, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != register.dim() {
            return Err(QsimError::DimensionMismatch {
                expected: register.dim(),
                found: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TOL.normalization {
            return Err(QsimError::NotNormalized((norm - 1.0).abs()));
        }
        Ok(Self {
            register,
            amplitudes: DVector::from_vec(amplitudes),
        })
    }

    /// Rescales `amplitudes` to unit norm before construction.
    pub fn normalized(register: Register, amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(QsimError::NotNormalized(1.0));
        }
        Self::from_amplitudes(register, amplitudes.into_iter().map(|a| a / norm).collect())
    }

    pub fn basis(register: Register, index: usize) -> Result<Self> {
        let mut amps = vec![C64::new(0.0, 0.0); register.dim()];
        *amps.get_mut(index).ok_or(QsimError::DimensionMismatch {
            expected: register.dim(),
            found: index,
        })? = C64::new(1.0, 0.0);
        Self::from_amplitudes(register, amps)
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amplitudes.as_slice()
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let register = self.register.concat(&other.register)?;
        Ok(PureState {
            register,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }

    pub fn apply_unitary(&self, u: &CMatrix, targets: &[QubitLabel]) -> Result<PureState> {
        let pos = self.register.positions(targets)?;
        check_square(u, 1 << pos.len())?;
        let mut out = self.clone();
        apply_to_vector(out.amplitudes.as_mut_slice(), self.register.len(), &pos, u);
        Ok(out)
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(QsimError::DimensionMismatch {
                expected: self.amplitudes.len(),
                found: other.amplitudes.len(),
            });
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_mixed(&self) -> MixedState {
        MixedState {
            register: self.register.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Density matrix over a register.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    register: Register,
    matrix: CMatrix,
}

/// A projective measurement on a subset of qubits.
#[derive(Debug, Clone)]
pub struct Measurement {
    projectors: Vec<CMatrix>,
    acts_on: Vec<QubitLabel>,
}

impl Measurement {
    pub fn new(projectors: Vec<CMatrix>, acts_on: Vec<QubitLabel>) -> Result<Self> {
        let dim = 1usize << acts_on.len();
        let mut sum = CMatrix::zeros(dim, dim);
        let mut dev: f64 = 0.0;
        for p in &projectors {
            check_square(p, dim)?;
            sum += p;
            dev = dev.max(max_abs_diff(&(p * p), p));
            dev = dev.max(max_abs_diff(&p.adjoint(), p));
        }
        dev = dev.max(max_abs_diff(&sum, &CMatrix::identity(dim, dim)));
        if projectors.is_empty() || dev > TOL.completeness {
            return Err(QsimError::IncompleteProjectors(dev));
        }
        Ok(Self { projectors, acts_on })
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn acts_on(&self) -> &[QubitLabel] {
        &self.acts_on
    }
}

/// Either draw the outcome from Born probabilities or force it.
pub enum Outcome<'r> {
    Sample(&'r mut dyn RngCore),
    Forced(usize),
}

#[derive(Debug, Clone)]
pub struct MeasurementResult {
    pub outcome: usize,
    pub probability: f64,
    /// Born probability of every outcome, in projector order.
    pub probabilities: Vec<f64>,
    pub state: MixedState,
}

fn check_square(m: &CMatrix, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(QsimError::DimensionMismatch {
            expected: dim,
            found: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

impl MixedState {
    /// Validates Hermiticity and unit trace; positivity is checked in debug builds.
    pub fn from_matrix(register: Register, matrix: CMatrix) -> Result<Self> {
        check_square(&matrix, register.dim())?;
        let state = Self { register, matrix };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn maximally_mixed(register: Register) -> Self {
        let d = register.dim();
        Self {
            register,
            matrix: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
        }
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn num_qubits(&self) -> usize {
        self.register.len()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn check_invariants(&self) -> Result<()> {
        let herm = max_abs_diff(&self.matrix, &self.matrix.adjoint());
        if herm > TOL.hermiticity {
            return Err(QsimError::NotHermitian(herm));
        }
        let tr = (self.trace() - 1.0).abs();
        if tr > TOL.trace {
            return Err(QsimError::NotUnitTrace(tr));
        }
        if cfg!(debug_assertions) {
            let min = self.min_eigenvalue();
            if min < TOL.eigenvalue_floor {
                return Err(QsimError::NotPositive(min));
            }
        }
        Ok(())
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Same matrix, new labels (must have the same length).
    pub fn relabeled(&self, register: Register) -> Result<MixedState> {
        if register.len() != self.register.len() {
            return Err(QsimError::DimensionMismatch {
                expected: self.register.len(),
                found: register.len(),
            });
        }
        Ok(Self {
            register,
            matrix: self.matrix.clone(),
        })
    }

    /// Permutes qubits so the register follows `order`.
    pub fn reordered(&self, order: &[QubitLabel]) -> Result<MixedState> {
        let n = self.register.len();
        if order.len() != n {
            return Err(QsimError::DimensionMismatch {
                expected: n,
                found: order.len(),
            });
        }
        let src = self.register.positions(order)?;
        let register = Register::new(src.iter().map(|&p| self.register[p]).collect())?;
        let d = self.register.dim();
        let map: Vec<usize> = (0..d)
            .map(|new| {
                (0..n)
                    .filter(|&i| new & bit(n, i) != 0)
                    .map(|i| bit(n, src[i]))
                    .sum()
            })
            .collect();
        let matrix = CMatrix::from_fn(d, d, |r, c| self.matrix[(map[r], map[c])]);
        Ok(Self { register, matrix })
    }

    pub fn tensor(&self, other: &MixedState) -> Result<MixedState> {
        let register = self.register.concat(&other.register)?;
        Ok(Self {
            register,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    pub fn apply_unitary(&self, u: &CMatrix, targets: &[QubitLabel]) -> Result<MixedState> {
        let pos = self.register.positions(targets)?;
        check_square(u, 1 << pos.len())?;
        let mut out = self.clone();
        conjugate_matrix(&mut out.matrix, self.register.len(), &pos, u);
        Ok(out)
    }

    /// `rho -> sum_k K rho K^dagger` over the operators selected by `keep`.
    fn apply_operators(&self, ch: &QuantumChannel, keep: impl Fn(bool) -> bool) -> Result<CMatrix> {
        let pos = self.register.positions(ch.acts_on())?;
        let n = self.register.len();
        let d = self.register.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (k, &lost) in ch.operators().iter().zip(ch.loss_flags()) {
            if !keep(lost) {
                continue;
            }
            let mut m = self.matrix.clone();
            conjugate_matrix(&mut m, n, &pos, k);
            acc += m;
        }
        Ok(acc)
    }

    pub fn apply_channel(&self, ch: &QuantumChannel) -> Result<MixedState> {
        let matrix = self.apply_operators(ch, |_| true)?;
        Ok(Self {
            register: self.register.clone(),
            matrix,
        })
    }

    /// Applies `ch`, separating heralded-loss branches from the rest.
    pub fn split_by_loss(&self, ch: &QuantumChannel) -> Result<LossSplit> {
        let kept = self.apply_operators(ch, |lost| !lost)?;
        let lost = self.apply_operators(ch, |lost| lost)?;
        let normalize = |m: CMatrix| {
            let p = m.trace().re;
            let state = (p > TOL.degenerate_probability).then(|| Self {
                register: self.register.clone(),
                matrix: m / C64::new(p, 0.0),
            });
            (p.max(0.0), state)
        };
        let (kept_probability, kept) = normalize(kept);
        let (lost_probability, lost) = normalize(lost);
        Ok(LossSplit {
            kept_probability,
            kept,
            lost_probability,
            lost,
        })
    }

    pub fn measure_projective(&self, m: &Measurement, outcome: Outcome<'_>) -> Result<MeasurementResult> {
        let pos = self.register.positions(m.acts_on())?;
        let n = self.register.len();
        let projected: Vec<CMatrix> = m
            .projectors()
            .iter()
            .map(|p| {
                let mut out = self.matrix.clone();
                conjugate_matrix(&mut out, n, &pos, p);
                out
            })
            .collect();
        let probabilities: Vec<f64> = projected.iter().map(|p| p.trace().re.max(0.0)).collect();
        let chosen = match outcome {
            Outcome::Forced(i) => {
                let p = *probabilities.get(i).ok_or(QsimError::OutcomeOutOfRange(i))?;
                if p < TOL.degenerate_probability {
                    return Err(QsimError::DegenerateOutcome {
                        outcome: i,
                        probability: p,
                    });
                }
                i
            }
            Outcome::Sample(rng) => sample_index(&probabilities, rng),
        };
        let probability = probabilities[chosen];
        let matrix = projected[chosen].clone() / C64::new(probability, 0.0);
        Ok(MeasurementResult {
            outcome: chosen,
            probability,
            probabilities,
            state: Self {
                register: self.register.clone(),
                matrix,
            },
        })
    }

    pub fn partial_trace(&self, discard: &[QubitLabel]) -> Result<MixedState> {
        let n = self.register.len();
        let drop = self.register.positions(discard)?;
        if drop.len() == n {
            return Err(QsimError::DiscardAll);
        }
        let keep: Vec<usize> = (0..n).filter(|p| !drop.contains(p)).collect();
        let embed = |positions: &[usize], local: usize| -> usize {
            let k = positions.len();
            positions
                .iter()
                .enumerate()
                .filter(|(j, _)| local & (1 << (k - 1 - j)) != 0)
                .map(|(_, &p)| bit(n, p))
                .sum()
        };
        let kept_idx: Vec<usize> = (0..1usize << keep.len()).map(|i| embed(&keep, i)).collect();
        let drop_idx: Vec<usize> = (0..1usize << drop.len()).map(|i| embed(&drop, i)).collect();
        let dk = kept_idx.len();
        let matrix = CMatrix::from_fn(dk, dk, |r, c| {
            drop_idx
                .iter()
                .map(|t| self.matrix[(kept_idx[r] | t, kept_idx[c] | t)])
                .sum()
        });
        let register = Register::new(keep.iter().map(|&p| self.register[p]).collect())?;
        Ok(Self { register, matrix })
    }

    /// `<psi| rho |psi>`, matched by position.
    pub fn fidelity(&self, target: &PureState) -> Result<f64> {
        if target.register().len() != self.register.len() {
            return Err(QsimError::DimensionMismatch {
                expected: self.register.len(),
                found: target.register().len(),
            });
        }
        let psi = DVector::from_column_slice(target.amplitudes());
        let f = psi.dotc(&(&self.matrix * &psi)).re;
        Ok(f.clamp(0.0, 1.0))
    }

    /// `Tr(rho g)`.
    pub fn stabilizer_expectation(&self, g: &PauliString) -> Result<f64> {
        if g.len() != self.register.len() {
            return Err(QsimError::DimensionMismatch {
                expected: self.register.len(),
                found: g.len(),
            });
        }
        let xm = g.x_mask();
        let v: C64 = (0..self.register.dim())
            .map(|j| self.matrix[(j, j ^ xm)] * g.column_phase(j))
            .sum();
        Ok(v.re.clamp(-1.0, 1.0))
    }
}

fn sample_index(probabilities: &[f64], rng: &mut dyn RngCore) -> usize {
    let total: f64 = probabilities.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

impl From<&PureState> for MixedState {
    fn from(p: &PureState) -> Self {
        p.to_mixed()
    }
}
