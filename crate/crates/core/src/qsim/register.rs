use serde::{Deserialize, Serialize};

use super::{QsimError, Result, TOL};

/// Physical role of a qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QubitKind {
    Spin,
    PhotonPolarization,
    PhotonPresence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QubitLabel {
    id: u32,
    kind: QubitKind,
}

impl QubitLabel {
    pub const fn new(id: u32, kind: QubitKind) -> Self {
        Self { id, kind }
    }

    pub const fn spin(id: u32) -> Self {
        Self::new(id, QubitKind::Spin)
    }

    pub const fn photon(id: u32) -> Self {
        Self::new(id, QubitKind::PhotonPolarization)
    }

    pub const fn presence(id: u32) -> Self {
        Self::new(id, QubitKind::PhotonPresence)
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn kind(&self) -> QubitKind {
        self.kind
    }
}

/// Ordered list of qubits with unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Register {
    labels: Vec<QubitLabel>,
}

impl Register {
    pub fn new(labels: Vec<QubitLabel>) -> Result<Self> {
        Self::with_cap(labels, TOL.max_qubits)
    }

    pub fn with_cap(labels: Vec<QubitLabel>, cap: usize) -> Result<Self> {
        if labels.len() > cap {
            return Err(QsimError::QubitCap {
                requested: labels.len(),
                cap,
            });
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].iter().any(|b| b.id == a.id) {
                return Err(QsimError::DuplicateLabel(a.id));
            }
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        1usize << self.labels.len()
    }

    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    pub fn iter(&self) -> impl Iterator<Item = &QubitLabel> {
        self.labels.iter()
    }

    pub fn contains(&self, label: &QubitLabel) -> bool {
        self.labels.iter().any(|l| l.id == label.id)
    }

    /// Position of the qubit with the same id as `label`.
    pub fn position(&self, label: &QubitLabel) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l.id == label.id)
            .ok_or(QsimError::UnknownLabel(label.id))
    }

    pub fn positions(&self, labels: &[QubitLabel]) -> Result<Vec<usize>> {
        let pos = labels
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<Vec<_>>>()?;
        for (i, p) in pos.iter().enumerate() {
            if pos[..i].contains(p) {
                return Err(QsimError::DuplicateLabel(labels[i].id));
            }
        }
        Ok(pos)
    }

    pub fn concat(&self, other: &Register) -> Result<Register> {
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Register::new(labels)
    }

    /// Smallest id not used by this register.
    pub fn next_free_id(&self) -> u32 {
        self.labels.iter().map(|l| l.id + 1).max().unwrap_or(0)
    }
}

impl std::ops::Index<usize> for Register {
    type Output = QubitLabel;

    fn index(&self, index: usize) -> &QubitLabel {
        &self.labels[index]
    }
}
