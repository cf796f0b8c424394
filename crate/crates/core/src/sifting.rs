//! Basis reconciliation, Bob's post-selection flips and QBER estimation.

use crate::encoding::EncodingChoice;
use crate::error::{QkdError, Result};
use crate::state::{dof_labels, BasisKind, BellIndex, DofLabel, HyperBellOutcome};

/// Abort threshold applied to the check-basis QBER when none is configured.
pub const DEFAULT_QBER_THRESHOLD: f64 = 0.11;

/// Bob's action on his own bit after Charlie's announcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correction {
    Keep,
    Flip,
}

impl Correction {
    pub fn apply(self, bit: u8) -> u8 {
        match self {
            Correction::Keep => bit,
            Correction::Flip => 1 - bit,
        }
    }
}

/// Post-selection rule shared by all DOFs.
///
/// Rectilinear: flip on Ψ⁺/Ψ⁻. Diagonal: flip on Φ⁻/Ψ⁻.
pub fn bob_correction(basis: BasisKind, bell: BellIndex) -> Correction {
    use BellIndex::*;
    match (basis, bell) {
        (BasisKind::Rectilinear, PsiPlus | PsiMinus) => Correction::Flip,
        (BasisKind::Rectilinear, PhiPlus | PhiMinus) => Correction::Keep,
        (BasisKind::Diagonal, PhiMinus | PsiMinus) => Correction::Flip,
        (BasisKind::Diagonal, PhiPlus | PsiPlus) => Correction::Keep,
    }
}

/// Everything both parties know about one round after the announcements.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    alice: EncodingChoice,
    bob: EncodingChoice,
    outcome: Option<HyperBellOutcome>,
}

impl RoundRecord {
    /// `outcome` is `None` when the pair was lost before Charlie.
    pub fn new(
        alice: EncodingChoice,
        bob: EncodingChoice,
        outcome: Option<HyperBellOutcome>,
    ) -> Result<Self> {
        let n = alice.n_dofs();
        if bob.n_dofs() != n {
            return Err(QkdError::DofMismatch {
                expected: n,
                actual: bob.n_dofs(),
            });
        }
        if let Some(o) = &outcome {
            if o.n_dofs() != n {
                return Err(QkdError::DofMismatch {
                    expected: n,
                    actual: o.n_dofs(),
                });
            }
        }
        Ok(RoundRecord {
            alice,
            bob,
            outcome,
        })
    }

    pub fn alice(&self) -> &EncodingChoice {
        &self.alice
    }

    pub fn bob(&self) -> &EncodingChoice {
        &self.bob
    }

    pub fn survived(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn outcome(&self) -> Option<&HyperBellOutcome> {
        self.outcome.as_ref()
    }
}

/// A kept bit in one DOF where both parties used the same basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiftedBitPair {
    pub dof: DofLabel,
    pub basis: BasisKind,
    pub alice_bit: u8,
    pub bob_bit_corrected: u8,
}

impl SiftedBitPair {
    pub fn is_error(&self) -> bool {
        self.alice_bit != self.bob_bit_corrected
    }
}

/// Sifted pairs of one round: one per matching-basis DOF, none if lost.
pub fn sift_round(record: &RoundRecord) -> Vec<SiftedBitPair> {
    let Some(outcome) = &record.outcome else {
        return Vec::new();
    };
    dof_labels(record.alice.n_dofs())
        .filter_map(|dof| {
            let a = record.alice.get(dof);
            let b = record.bob.get(dof);
            (a.basis == b.basis).then(|| SiftedBitPair {
                dof,
                basis: a.basis,
                alice_bit: a.bit,
                bob_bit_corrected: bob_correction(a.basis, outcome.get(dof)).apply(b.bit),
            })
        })
        .collect()
}

/// Error count over the sifted pairs of one DOF and basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QberEstimate {
    pub dof: DofLabel,
    pub basis: BasisKind,
    pub errors: u64,
    pub total: u64,
}

impl QberEstimate {
    pub fn empty(dof: DofLabel, basis: BasisKind) -> Self {
        QberEstimate {
            dof,
            basis,
            errors: 0,
            total: 0,
        }
    }

    /// `None` when no pairs were observed.
    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.errors as f64 / self.total as f64)
    }

    /// Binomial standard error of [`QberEstimate::rate`] at probability `p`.
    pub fn std_error(&self, p: f64) -> Option<f64> {
        (self.total > 0).then(|| (p * (1.0 - p) / self.total as f64).sqrt())
    }

    pub fn record(&mut self, is_error: bool) {
        self.total += 1;
        self.errors += is_error as u64;
    }

    /// Sum of two partial counts for the same DOF and basis.
    pub fn merge(&self, other: &QberEstimate) -> Result<QberEstimate> {
        if self.dof != other.dof || self.basis != other.basis {
            return Err(QkdError::Config(format!(
                "cannot merge QBER counts for {}/{} with {}/{}",
                self.dof, self.basis, other.dof, other.basis
            )));
        }
        Ok(QberEstimate {
            errors: self.errors + other.errors,
            total: self.total + other.total,
            ..*self
        })
    }
}

pub fn estimate_qber<'a>(
    pairs: impl IntoIterator<Item = &'a SiftedBitPair>,
    dof: DofLabel,
    basis: BasisKind,
) -> QberEstimate {
    let mut est = QberEstimate::empty(dof, basis);
    for p in pairs
        .into_iter()
        .filter(|p| p.dof == dof && p.basis == basis)
    {
        est.record(p.is_error());
    }
    est
}
