use super::{gates, max_abs_diff, CMatrix, MixedState, QsimError, QubitLabel, Result, C64, TOL};

/// Completely positive trace-preserving map given by Kraus operators.
///
/// Operators may be flagged as heralded loss: they describe a branch in
/// which a photon left the system and a detector downstream will notice.
/// [`MixedState::split_by_loss`] separates those branches.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    operators: Vec<CMatrix>,
    loss: Vec<bool>,
    acts_on: Vec<QubitLabel>,
}

impl QuantumChannel {
    pub fn new(operators: Vec<CMatrix>, acts_on: Vec<QubitLabel>) -> Result<Self> {
        let loss = vec![false; operators.len()];
        Self::with_loss_flags(operators, loss, acts_on)
    }

    pub fn with_loss_flags(
        operators: Vec<CMatrix>,
        loss: Vec<bool>,
        acts_on: Vec<QubitLabel>,
    ) -> Result<Self> {
        if operators.is_empty() {
            return Err(QsimError::EmptyChannel);
        }
        if loss.len() != operators.len() {
            return Err(QsimError::DimensionMismatch {
                expected: operators.len(),
                found: loss.len(),
            });
        }
        let dim = 1usize << acts_on.len();
        for (i, a) in acts_on.iter().enumerate() {
            if acts_on[..i].iter().any(|b| b.id() == a.id()) {
                return Err(QsimError::DuplicateLabel(a.id()));
            }
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for k in &operators {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(QsimError::DimensionMismatch {
                    expected: dim,
                    found: k.nrows().max(k.ncols()),
                });
            }
            sum += k.adjoint() * k;
        }
        let dev = max_abs_diff(&sum, &CMatrix::identity(dim, dim));
        if dev > TOL.completeness {
            return Err(QsimError::NotTracePreserving(dev));
        }
        Ok(Self {
            operators,
            loss,
            acts_on,
        })
    }

    pub fn identity(acts_on: Vec<QubitLabel>) -> Self {
        let k = acts_on.len();
        Self::unitary(gates::identity(k), acts_on).expect("identity is unitary")
    }

    pub fn unitary(u: CMatrix, acts_on: Vec<QubitLabel>) -> Result<Self> {
        Self::new(vec![u], acts_on)
    }

    /// Complete dephasing in the computational basis.
    pub fn dephasing(qubit: QubitLabel) -> Self {
        Self::new(gates::z_basis(), vec![qubit]).expect("projectors are complete")
    }

    /// Phase damping that multiplies the off-diagonal element by `coherence`.
    pub fn phase_damping(qubit: QubitLabel, coherence: f64) -> Self {
        let lambda = coherence.clamp(-1.0, 1.0);
        let keep = ((1.0 + lambda) / 2.0).sqrt();
        let flip = ((1.0 - lambda) / 2.0).sqrt();
        Self::new(
            vec![gates::identity(1) * C64::new(keep, 0.0), gates::z() * C64::new(flip, 0.0)],
            vec![qubit],
        )
        .expect("phase damping is trace preserving")
    }

    /// Photon loss on a presence qubit with transmissivity `eta`.
    pub fn amplitude_loss(qubit: QubitLabel, eta: f64) -> Self {
        let eta = eta.clamp(0.0, 1.0);
        let k0 = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(eta.sqrt(), 0.0)],
        );
        let k1 = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new((1.0 - eta).sqrt(), 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        Self::new(vec![k0, k1], vec![qubit]).expect("loss is trace preserving")
    }

    /// Pauli `p` applied with probability `prob`.
    pub fn pauli_flip(qubit: QubitLabel, p: CMatrix, prob: f64) -> Result<Self> {
        let prob = prob.clamp(0.0, 1.0);
        Self::new(
            vec![gates::identity(1) * C64::new((1.0 - prob).sqrt(), 0.0), p * C64::new(prob.sqrt(), 0.0)],
            vec![qubit],
        )
    }

    /// `next` after `self`; both must act on the same qubits in the same order.
    pub fn then(&self, next: &QuantumChannel) -> Result<QuantumChannel> {
        if self.acts_on != next.acts_on {
            return Err(QsimError::DimensionMismatch {
                expected: self.acts_on.len(),
                found: next.acts_on.len(),
            });
        }
        let mut ops = Vec::with_capacity(self.operators.len() * next.operators.len());
        let mut loss = Vec::with_capacity(ops.capacity());
        for (b, lb) in next.operators.iter().zip(&next.loss) {
            for (a, la) in self.operators.iter().zip(&self.loss) {
                let k = b * a;
                if k.iter().all(|v| v.norm() == 0.0) {
                    continue;
                }
                ops.push(k);
                loss.push(*la || *lb);
            }
        }
        QuantumChannel::with_loss_flags(ops, loss, self.acts_on.clone())
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn loss_flags(&self) -> &[bool] {
        &self.loss
    }

    pub fn acts_on(&self) -> &[QubitLabel] {
        &self.acts_on
    }

    /// Same operators on different qubits.
    pub fn relabeled(&self, acts_on: Vec<QubitLabel>) -> Result<QuantumChannel> {
        QuantumChannel::with_loss_flags(self.operators.clone(), self.loss.clone(), acts_on)
    }

    /// Total Choi-state fidelity with the unitary `u`:
    /// `sum_k |Tr(u^dagger K)|^2 / d^2`.
    pub fn entanglement_fidelity(&self, u: &CMatrix) -> f64 {
        let d = u.nrows() as f64;
        self.operators
            .iter()
            .map(|k| (u.adjoint() * k).trace().norm_sqr())
            .sum::<f64>()
            / (d * d)
    }
}

/// Outcome of applying a channel with heralded-loss operators.
#[derive(Debug, Clone)]
pub struct LossSplit {
    pub kept_probability: f64,
    /// Normalized state of the no-loss branch, if it has weight.
    pub kept: Option<MixedState>,
    pub lost_probability: f64,
    pub lost: Option<MixedState>,
}
