//! Per-DOF basis/bit choices and the single-photon states they prepare.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{QkdError, Result};
use crate::state::{check_n_dofs, dof_labels, BasisKind, DofLabel, SinglePhotonState};

/// One DOF's encoding: which basis, which bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DofChoice {
    pub basis: BasisKind,
    pub bit: u8,
}

impl DofChoice {
    pub fn new(basis: BasisKind, bit: u8) -> Result<Self> {
        if bit > 1 {
            return Err(QkdError::Config(format!("bit must be 0 or 1, got {bit}")));
        }
        Ok(DofChoice { basis, bit })
    }

    pub fn rectilinear(bit: u8) -> Result<Self> {
        Self::new(BasisKind::Rectilinear, bit)
    }

    pub fn diagonal(bit: u8) -> Result<Self> {
        Self::new(BasisKind::Diagonal, bit)
    }

    /// Intended qubit `(⟨0|u⟩, ⟨1|u⟩)`: `|b⟩` or `|±⟩`.
    fn intended(self) -> [f64; 2] {
        let h = FRAC_1_SQRT_2;
        match (self.basis, self.bit) {
            (BasisKind::Rectilinear, 0) => [1.0, 0.0],
            (BasisKind::Rectilinear, _) => [0.0, 1.0],
            (BasisKind::Diagonal, 0) => [h, h],
            (BasisKind::Diagonal, _) => [h, -h],
        }
    }

    /// The other vector of the same basis.
    fn orthogonal(self) -> [f64; 2] {
        DofChoice {
            basis: self.basis,
            bit: 1 - self.bit,
        }
        .intended()
    }

    /// Basis-state symbol in DOF `dof`, e.g. `H`, `R`, `+f`.
    pub fn symbol(self, dof: DofLabel) -> String {
        match self.basis {
            BasisKind::Rectilinear => dof.rectilinear_symbols()[self.bit as usize].to_string(),
            BasisKind::Diagonal => {
                let sign = if self.bit == 0 { '+' } else { '-' };
                format!("{sign}{}", dof.diagonal_suffix())
            }
        }
    }
}

/// A party's choices for every DOF of one photon.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodingChoice {
    per_dof: Vec<DofChoice>,
}

impl EncodingChoice {
    pub fn new(per_dof: Vec<DofChoice>) -> Result<Self> {
        check_n_dofs(per_dof.len())?;
        Ok(EncodingChoice { per_dof })
    }

    /// All DOFs rectilinear with the given bits.
    pub fn rectilinear(bits: &[u8]) -> Result<Self> {
        Self::new(
            bits.iter()
                .map(|&b| DofChoice::rectilinear(b))
                .collect::<Result<_>>()?,
        )
    }

    /// Independent uniform basis and bit per DOF.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n_dofs: usize) -> Self {
        let per_dof = (0..n_dofs)
            .map(|_| {
                let basis = if rng.random::<bool>() {
                    BasisKind::Diagonal
                } else {
                    BasisKind::Rectilinear
                };
                DofChoice {
                    basis,
                    bit: rng.random::<bool>() as u8,
                }
            })
            .collect();
        EncodingChoice { per_dof }
    }

    pub fn n_dofs(&self) -> usize {
        self.per_dof.len()
    }

    pub fn per_dof(&self) -> &[DofChoice] {
        &self.per_dof
    }

    pub fn get(&self, dof: DofLabel) -> DofChoice {
        self.per_dof[dof.index()]
    }
}

impl fmt::Display for EncodingChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let symbols: Vec<String> = dof_labels(self.n_dofs())
            .map(|d| self.get(d).symbol(d))
            .collect();
        f.write_str(&symbols.join(","))
    }
}

/// Per-DOF source amplitude fidelity `β_k ∈ (0, 1]`, shared by both parties.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceFidelity {
    beta: Vec<f64>,
}

impl SourceFidelity {
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        check_n_dofs(beta.len())?;
        for &b in &beta {
            check_beta(b)?;
        }
        Ok(SourceFidelity { beta })
    }

    /// From `|β_k|²`, the form quoted for experimental sources.
    pub fn from_beta_squared(beta_sq: &[f64]) -> Result<Self> {
        for &b2 in beta_sq {
            if !(b2 > 0.0 && b2 <= 1.0) {
                return Err(QkdError::OutOfRange {
                    name: "beta^2",
                    value: b2,
                    range: "(0, 1]",
                });
            }
        }
        Self::new(beta_sq.iter().map(|b2| b2.sqrt()).collect())
    }

    pub fn perfect(n_dofs: usize) -> Self {
        SourceFidelity {
            beta: vec![1.0; n_dofs],
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self, dof: DofLabel) -> f64 {
        self.beta[dof.index()]
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta <= 1.0 {
        Ok(())
    } else {
        Err(QkdError::OutOfRange {
            name: "beta",
            value: beta,
            range: "(0, 1]",
        })
    }
}

/// How an imperfect source deviates from the intended state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceModel {
    /// The preparation frame is rotated by a fixed angle `φ`, `cos φ = β`:
    /// `|0⟩ → β|0⟩ + √(1−β²)|1⟩` and `|1⟩ → −√(1−β²)|0⟩ + β|1⟩`, applied to
    /// every intended state. `|0⟩` and `|−⟩` get the `+√(1−β²)` admixture of their
    /// partner, `|1⟩` and `|+⟩` the `−√(1−β²)` one. Error rates are the same
    /// for every intent and in both bases.
    #[default]
    FrameRotation,
    /// Every intent `|u⟩` becomes `β|u⟩ + √(1−β²)|u⊥⟩` with a `+` sign. The
    /// resulting error rate depends on the transmitted bits.
    IntentMixing,
}

/// Noiseless preparation: `|b⟩` for rectilinear, Hadamard of `|b⟩` for diagonal.
pub fn ideal_state(choice: &EncodingChoice) -> SinglePhotonState {
    let bits: Vec<u8> = choice.per_dof.iter().map(|c| c.bit).collect();
    let mut state = SinglePhotonState::computational_basis(choice.n_dofs(), &bits)
        .expect("choice validated on construction");
    for dof in dof_labels(choice.n_dofs()) {
        if choice.get(dof).basis == BasisKind::Diagonal {
            state = state.hadamard(dof).expect("dof in range");
        }
    }
    state
}

/// Preparation by an imperfect source, using [`SourceModel::FrameRotation`].
pub fn misaligned_state(
    choice: &EncodingChoice,
    fidelity: &SourceFidelity,
) -> Result<SinglePhotonState> {
    misaligned_state_with(choice, fidelity, SourceModel::default())
}

pub fn misaligned_state_with(
    choice: &EncodingChoice,
    fidelity: &SourceFidelity,
    model: SourceModel,
) -> Result<SinglePhotonState> {
    let qubits = misaligned_qubits(choice, fidelity, model)?;
    SinglePhotonState::product(&qubits)
}

/// Per-DOF prepared qubits `(⟨0|ψ_k⟩, ⟨1|ψ_k⟩)`.
pub fn misaligned_qubits(
    choice: &EncodingChoice,
    fidelity: &SourceFidelity,
    model: SourceModel,
) -> Result<Vec<[Complex64; 2]>> {
    if fidelity.n_dofs() != choice.n_dofs() {
        return Err(QkdError::DofMismatch {
            expected: choice.n_dofs(),
            actual: fidelity.n_dofs(),
        });
    }
    Ok(choice
        .per_dof
        .iter()
        .zip(&fidelity.beta)
        .map(|(&c, &beta)| {
            let leak = (1.0 - beta * beta).max(0.0).sqrt();
            let u = c.intended();
            let [a0, a1] = match model {
                SourceModel::FrameRotation => {
                    [beta * u[0] - leak * u[1], leak * u[0] + beta * u[1]]
                }
                SourceModel::IntentMixing => {
                    let w = c.orthogonal();
                    [beta * u[0] + leak * w[0], beta * u[1] + leak * w[1]]
                }
            };
            [Complex64::new(a0, 0.0), Complex64::new(a1, 0.0)]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::EXACT_TOL;
    use proptest::prelude::*;

    fn choice(states: &[(BasisKind, u8)]) -> EncodingChoice {
        EncodingChoice::new(
            states
                .iter()
                .map(|&(b, v)| DofChoice::new(b, v).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn overlap_sq(a: &SinglePhotonState, b: &SinglePhotonState) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
            .norm_sqr()
    }

    use BasisKind::{Diagonal as D, Rectilinear as R};

    #[test]
    fn ideal_rectilinear_zero_is_hli() {
        let s = ideal_state(&choice(&[(R, 0), (R, 0), (R, 0)]));
        assert_eq!(
            s,
            SinglePhotonState::computational_basis(3, &[0, 0, 0]).unwrap()
        );
    }

    #[test]
    fn ideal_mixed_bases() {
        // |+⟩_p ⊗ |L⟩ ⊗ |+⟩_s
        let s = ideal_state(&choice(&[(D, 0), (R, 0), (D, 0)]));
        let expected = SinglePhotonState::computational_basis(3, &[0, 0, 0])
            .unwrap()
            .hadamard(DofLabel::POLARIZATION)
            .unwrap()
            .hadamard(DofLabel::MOMENTUM2)
            .unwrap();
        assert_eq!(s, expected);
        for index in [0, 1, 4, 5] {
            assert!((s.amplitude(index).re - 0.5).abs() < EXACT_TOL);
        }
    }

    #[test]
    fn ideal_all_diagonal_ones() {
        let s = ideal_state(&choice(&[(D, 1), (D, 1), (D, 1)]));
        let h = FRAC_1_SQRT_2;
        let minus = [Complex64::new(h, 0.0), Complex64::new(-h, 0.0)];
        let expected = SinglePhotonState::product(&[minus; 3]).unwrap();
        for (a, b) in s.amplitudes().iter().zip(expected.amplitudes()) {
            assert!((a - b).norm() < EXACT_TOL);
        }
    }

    #[test]
    fn eight_states_encode_key_000() {
        let states: Vec<_> = (0..8)
            .map(|m: u8| {
                let states: Vec<_> = (0..3)
                    .map(|k| (if (m >> (2 - k)) & 1 == 1 { D } else { R }, 0))
                    .collect();
                ideal_state(&choice(&states))
            })
            .collect();
        for i in 0..8 {
            for j in 0..i {
                assert_ne!(states[i], states[j]);
            }
        }
    }

    #[test]
    fn perfect_source_is_ideal() {
        let c = choice(&[(D, 1), (R, 1), (D, 0)]);
        for model in [SourceModel::FrameRotation, SourceModel::IntentMixing] {
            let s = misaligned_state_with(&c, &SourceFidelity::perfect(3), model).unwrap();
            assert_eq!(s, ideal_state(&c));
        }
    }

    #[test]
    fn rectilinear_zero_leaks_into_one() {
        let fid = SourceFidelity::from_beta_squared(&[0.85]).unwrap();
        let s = misaligned_state(&choice(&[(R, 0)]), &fid).unwrap();
        assert!((s.amplitude(0).re - 0.921954).abs() < 1e-6);
        assert!((s.amplitude(1).re - 0.387298).abs() < 1e-6);
        assert!((s.amplitude(0).re - 0.85f64.sqrt()).abs() < EXACT_TOL);
        assert!((s.amplitude(1).re - 0.15f64.sqrt()).abs() < EXACT_TOL);
    }

    #[test]
    fn diagonal_one_leaks_into_plus() {
        // β|−⟩ + √(1−β²)|+⟩ under both models
        let fid = SourceFidelity::from_beta_squared(&[0.85]).unwrap();
        let (beta, leak) = (0.85f64.sqrt(), 0.15f64.sqrt());
        let h = FRAC_1_SQRT_2;
        let expected = [h * (beta + leak), h * (leak - beta)];
        for model in [SourceModel::FrameRotation, SourceModel::IntentMixing] {
            let s = misaligned_state_with(&choice(&[(D, 1)]), &fid, model).unwrap();
            assert!((s.amplitude(0).re - expected[0]).abs() < EXACT_TOL);
            assert!((s.amplitude(1).re - expected[1]).abs() < EXACT_TOL);
        }
    }

    #[test]
    fn models_differ_in_the_admixture_sign() {
        let fid = SourceFidelity::from_beta_squared(&[0.85]).unwrap();
        let v = choice(&[(R, 1)]);
        let rot = misaligned_state_with(&v, &fid, SourceModel::FrameRotation).unwrap();
        let mix = misaligned_state_with(&v, &fid, SourceModel::IntentMixing).unwrap();
        assert!((rot.amplitude(0).re + 0.15f64.sqrt()).abs() < EXACT_TOL);
        assert!((mix.amplitude(0).re - 0.15f64.sqrt()).abs() < EXACT_TOL);
    }

    #[test]
    fn rejects_invalid_fidelity() {
        assert!(SourceFidelity::new(vec![0.0]).is_err());
        assert!(SourceFidelity::new(vec![1.1]).is_err());
        assert!(SourceFidelity::new(vec![f64::NAN]).is_err());
        assert!(SourceFidelity::from_beta_squared(&[-0.2]).is_err());
        let c = choice(&[(R, 0), (R, 0)]);
        assert!(misaligned_state(&c, &SourceFidelity::perfect(3)).is_err());
        assert!(DofChoice::new(R, 2).is_err());
    }

    #[test]
    fn symbols() {
        let c = choice(&[(R, 1), (D, 0), (D, 1)]);
        assert_eq!(c.to_string(), "V,+f,-s");
    }

    fn choice_strategy() -> impl Strategy<Value = EncodingChoice> {
        proptest::collection::vec((any::<bool>(), 0u8..2), 3).prop_map(|v| {
            choice(
                &v.into_iter()
                    .map(|(d, b)| (if d { D } else { R }, b))
                    .collect::<Vec<_>>(),
            )
        })
    }

    proptest! {
        #[test]
        fn misaligned_states_are_normalized(
            c in choice_strategy(),
            betas in proptest::collection::vec(0.01f64..=1.0, 3),
            mixing in any::<bool>(),
        ) {
            let model = if mixing { SourceModel::IntentMixing } else { SourceModel::FrameRotation };
            let fid = SourceFidelity::new(betas.clone()).unwrap();
            let s = misaligned_state_with(&c, &fid, model).unwrap();
            prop_assert!((s.norm_sqr() - 1.0).abs() < EXACT_TOL);
            let expected: f64 = betas.iter().map(|b| b * b).product();
            prop_assert!((overlap_sq(&ideal_state(&c), &s) - expected).abs() < EXACT_TOL);
        }
    }
}
