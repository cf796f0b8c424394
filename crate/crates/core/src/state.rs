//! State-vector algebra for single photons carrying `N` two-level degrees of
//! freedom, and for the two-photon states Charlie receives.
//!
//! Indexing conventions used throughout the crate:
//!
//! * single photon: bit `k` of the basis index is the rectilinear bit of DOF `k`
//!   (`0` ↔ H/L/I, `1` ↔ V/R/E);
//! * joint state: index = `alice_index * 2^N + bob_index`;
//! * hyper-Bell outcomes: lexicographic by DOF with DOF 0 most significant,
//!   Bell order Φ⁺, Φ⁻, Ψ⁺, Ψ⁻.

use std::borrow::Cow;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;

use crate::error::{QkdError, Result};

/// Tolerance for quantities that are exact up to a handful of roundings.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for quantities accumulated over many floating-point operations.
pub const ACCUM_TOL: f64 = 1e-10;
/// Largest supported number of DOFs (joint dimension 4^8 = 65536).
pub const MAX_DOFS: usize = 8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Single-DOF gate, `gate[row][col]` acting on the column `(|0⟩, |1⟩)`.
pub type DofGate = [[Complex64; 2]; 2];

/// Degree of freedom of a photon, identified by its position in the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DofLabel(usize);

impl DofLabel {
    pub const POLARIZATION: DofLabel = DofLabel(0);
    pub const MOMENTUM1: DofLabel = DofLabel(1);
    pub const MOMENTUM2: DofLabel = DofLabel(2);

    pub const fn new(index: usize) -> Self {
        DofLabel(index)
    }

    pub const fn index(self) -> usize {
        self.0
    }

    /// Human-readable tag; the first three DOFs carry their physical names.
    pub fn name(self) -> Cow<'static, str> {
        match self.0 {
            0 => Cow::Borrowed("polarization"),
            1 => Cow::Borrowed("momentum1"),
            2 => Cow::Borrowed("momentum2"),
            k => Cow::Owned(format!("dof{k}")),
        }
    }

    /// Symbols of the rectilinear basis states `[|0⟩, |1⟩]` in this DOF.
    pub fn rectilinear_symbols(self) -> [&'static str; 2] {
        match self.0 {
            0 => ["H", "V"],
            1 => ["L", "R"],
            2 => ["I", "E"],
            _ => ["0", "1"],
        }
    }

    /// Subscript used for diagonal states, e.g. `+f`.
    pub fn diagonal_suffix(self) -> Cow<'static, str> {
        match self.0 {
            0 => Cow::Borrowed("p"),
            1 => Cow::Borrowed("f"),
            2 => Cow::Borrowed("s"),
            k => Cow::Owned(k.to_string()),
        }
    }

    pub(crate) fn check(self, n_dofs: usize) -> Result<()> {
        if self.0 < n_dofs {
            Ok(())
        } else {
            Err(QkdError::DofOutOfRange {
                index: self.0,
                n_dofs,
            })
        }
    }
}

impl fmt::Display for DofLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// All DOF labels of an `n_dofs` configuration, in index order.
pub fn dof_labels(n_dofs: usize) -> impl Iterator<Item = DofLabel> + Clone {
    (0..n_dofs).map(DofLabel)
}

/// The two conjugate encoding bases available in every DOF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisKind {
    Rectilinear,
    Diagonal,
}

impl BasisKind {
    pub const ALL: [BasisKind; 2] = [BasisKind::Rectilinear, BasisKind::Diagonal];

    pub fn index(self) -> usize {
        match self {
            BasisKind::Rectilinear => 0,
            BasisKind::Diagonal => 1,
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisKind::Rectilinear => "rectilinear",
            BasisKind::Diagonal => "diagonal",
        })
    }
}

pub(crate) fn check_n_dofs(n_dofs: usize) -> Result<()> {
    if (1..=MAX_DOFS).contains(&n_dofs) {
        Ok(())
    } else {
        Err(QkdError::Config(format!(
            "number of DOFs must be in 1..={MAX_DOFS}, got {n_dofs}"
        )))
    }
}

fn check_norm(amplitudes: &[Complex64]) -> Result<()> {
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() <= EXACT_TOL {
        Ok(())
    } else {
        Err(QkdError::InvalidState(format!(
            "squared norm {norm} is not 1"
        )))
    }
}

/// Pure state of one photon's `N` DOFs, `2^N` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SinglePhotonState {
    n_dofs: usize,
    amplitudes: Vec<Complex64>,
}

impl SinglePhotonState {
    /// Computational (all-rectilinear) basis state with the given per-DOF bits.
    pub fn computational_basis(n_dofs: usize, bits: &[u8]) -> Result<Self> {
        check_n_dofs(n_dofs)?;
        if bits.len() != n_dofs {
            return Err(QkdError::DofMismatch {
                expected: n_dofs,
                actual: bits.len(),
            });
        }
        let mut index = 0;
        for (k, &bit) in bits.iter().enumerate() {
            match bit {
                0 => {}
                1 => index |= 1 << k,
                b => return Err(QkdError::Config(format!("bit must be 0 or 1, got {b}"))),
            }
        }
        let mut amplitudes = vec![ZERO; 1 << n_dofs];
        amplitudes[index] = ONE;
        Ok(SinglePhotonState { n_dofs, amplitudes })
    }

    pub fn from_amplitudes(n_dofs: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_n_dofs(n_dofs)?;
        if amplitudes.len() != 1 << n_dofs {
            return Err(QkdError::InvalidState(format!(
                "{} amplitudes for {n_dofs} DOFs",
                amplitudes.len()
            )));
        }
        check_norm(&amplitudes)?;
        Ok(SinglePhotonState { n_dofs, amplitudes })
    }

    /// Tensor product of independent per-DOF qubits, `qubits[k] = (⟨0|ψ_k⟩, ⟨1|ψ_k⟩)`.
    pub fn product(qubits: &[[Complex64; 2]]) -> Result<Self> {
        let n_dofs = qubits.len();
        check_n_dofs(n_dofs)?;
        for q in qubits {
            check_norm(q)?;
        }
        let amplitudes = (0..1usize << n_dofs)
            .map(|index| {
                qubits
                    .iter()
                    .enumerate()
                    .map(|(k, q)| q[(index >> k) & 1])
                    .product()
            })
            .collect();
        Ok(SinglePhotonState { n_dofs, amplitudes })
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies a 2×2 gate on one DOF, identity elsewhere.
    pub fn apply_dof_gate(&self, dof: DofLabel, gate: &DofGate) -> Result<Self> {
        dof.check(self.n_dofs)?;
        let mask = 1 << dof.index();
        let mut out = self.amplitudes.clone();
        for i0 in (0..self.dim()).filter(|i| i & mask == 0) {
            let i1 = i0 | mask;
            let (a0, a1) = (self.amplitudes[i0], self.amplitudes[i1]);
            out[i0] = gate[0][0] * a0 + gate[0][1] * a1;
            out[i1] = gate[1][0] * a0 + gate[1][1] * a1;
        }
        Ok(SinglePhotonState {
            n_dofs: self.n_dofs,
            amplitudes: out,
        })
    }

    /// Hadamard on one DOF: `|0⟩ → |+⟩`, `|1⟩ → |−⟩`.
    pub fn hadamard(&self, dof: DofLabel) -> Result<Self> {
        self.apply_dof_gate(dof, &hadamard_gate())
    }
}

pub fn hadamard_gate() -> DofGate {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// Two-photon pure state, `4^N` amplitudes with Alice-major indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    n_dofs: usize,
    amplitudes: Vec<Complex64>,
}

impl JointState {
    /// `|alice⟩ ⊗ |bob⟩`.
    pub fn tensor(alice: &SinglePhotonState, bob: &SinglePhotonState) -> Result<Self> {
        if alice.n_dofs != bob.n_dofs {
            return Err(QkdError::DofMismatch {
                expected: alice.n_dofs,
                actual: bob.n_dofs,
            });
        }
        let amplitudes = alice
            .amplitudes
            .iter()
            .flat_map(|&a| bob.amplitudes.iter().map(move |&b| a * b))
            .collect();
        Ok(JointState {
            n_dofs: alice.n_dofs,
            amplitudes,
        })
    }

    pub fn from_amplitudes(n_dofs: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_n_dofs(n_dofs)?;
        if amplitudes.len() != 1 << (2 * n_dofs) {
            return Err(QkdError::InvalidState(format!(
                "{} amplitudes for a {n_dofs}-DOF photon pair",
                amplitudes.len()
            )));
        }
        check_norm(&amplitudes)?;
        Ok(JointState { n_dofs, amplitudes })
    }

    /// Tensor product over DOFs of one Bell state per DOF.
    pub fn hyper_bell(outcome: &HyperBellOutcome) -> Self {
        let n_dofs = outcome.n_dofs();
        let side = 1usize << n_dofs;
        let vectors: Vec<[f64; 4]> = outcome.per_dof.iter().map(|b| b.local_vector()).collect();
        let amplitudes = (0..side * side)
            .map(|index| {
                let (a, b) = (index / side, index % side);
                let amp: f64 = vectors
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v[local_pair(a, b, k)])
                    .product();
                Complex64::new(amp, 0.0)
            })
            .collect();
        JointState { n_dofs, amplitudes }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Amplitude on `|a⟩_alice |b⟩_bob`.
    pub fn amplitude(&self, alice_index: usize, bob_index: usize) -> Complex64 {
        self.amplitudes[(alice_index << self.n_dofs) | bob_index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Coordinates in the hyper-Bell basis, indexed by [`HyperBellOutcome::index`].
    ///
    /// Regroups the amplitudes by per-DOF photon pairs, then applies the 4×4
    /// Bell change of basis along each DOF axis in turn.
    pub fn hyper_bell_amplitudes(&self) -> Vec<Complex64> {
        let n = self.n_dofs;
        let side = 1usize << n;
        let mut coords = vec![ZERO; side * side];
        for (index, &amp) in self.amplitudes.iter().enumerate() {
            let (a, b) = (index / side, index % side);
            let grouped = (0..n).fold(0, |acc, k| acc * 4 + local_pair(a, b, k));
            coords[grouped] = amp;
        }

        let basis: [[f64; 4]; 4] = BellIndex::ALL.map(|b| b.local_vector());
        for k in 0..n {
            let stride = 1usize << (2 * (n - 1 - k));
            for block in (0..coords.len()).step_by(4 * stride) {
                for offset in block..block + stride {
                    let local = [0, 1, 2, 3].map(|j| coords[offset + j * stride]);
                    for (row, bell) in basis.iter().enumerate() {
                        coords[offset + row * stride] = (0..4).map(|j| local[j] * bell[j]).sum();
                    }
                }
            }
        }
        coords
    }
}

/// Two-bit index `2·a_k + b_k` of the DOF-`k` pair inside joint index `(a, b)`.
fn local_pair(alice_index: usize, bob_index: usize, dof: usize) -> usize {
    (((alice_index >> dof) & 1) << 1) | ((bob_index >> dof) & 1)
}

/// The four Bell states of a single DOF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellIndex {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellIndex {
    pub const ALL: [BellIndex; 4] = [
        BellIndex::PhiPlus,
        BellIndex::PhiMinus,
        BellIndex::PsiPlus,
        BellIndex::PsiMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Amplitudes on `|00⟩, |01⟩, |10⟩, |11⟩` (Alice's bit first).
    pub fn local_vector(self) -> [f64; 4] {
        let h = FRAC_1_SQRT_2;
        match self {
            BellIndex::PhiPlus => [h, 0.0, 0.0, h],
            BellIndex::PhiMinus => [h, 0.0, 0.0, -h],
            BellIndex::PsiPlus => [0.0, h, h, 0.0],
            BellIndex::PsiMinus => [0.0, h, -h, 0.0],
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BellIndex::PhiPlus => "Phi+",
            BellIndex::PhiMinus => "Phi-",
            BellIndex::PsiPlus => "Psi+",
            BellIndex::PsiMinus => "Psi-",
        }
    }
}

impl fmt::Display for BellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Result of a complete hyper-Bell analysis: one Bell label per DOF.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HyperBellOutcome {
    per_dof: Vec<BellIndex>,
}

impl HyperBellOutcome {
    pub fn new(per_dof: Vec<BellIndex>) -> Result<Self> {
        check_n_dofs(per_dof.len())?;
        Ok(HyperBellOutcome { per_dof })
    }

    /// Inverse of [`HyperBellOutcome::index`].
    pub fn from_index(index: usize, n_dofs: usize) -> Result<Self> {
        check_n_dofs(n_dofs)?;
        if index >= 1 << (2 * n_dofs) {
            return Err(QkdError::Config(format!(
                "outcome index {index} out of range for {n_dofs} DOFs"
            )));
        }
        let per_dof = (0..n_dofs)
            .map(|k| {
                let digit = (index >> (2 * (n_dofs - 1 - k))) & 3;
                BellIndex::ALL[digit]
            })
            .collect();
        Ok(HyperBellOutcome { per_dof })
    }

    /// All `4^N` outcomes in canonical order.
    pub fn all(n_dofs: usize) -> impl Iterator<Item = HyperBellOutcome> {
        (0..1usize << (2 * n_dofs))
            .map(move |i| HyperBellOutcome::from_index(i, n_dofs).expect("index in range"))
    }

    pub fn n_dofs(&self) -> usize {
        self.per_dof.len()
    }

    pub fn per_dof(&self) -> &[BellIndex] {
        &self.per_dof
    }

    pub fn get(&self, dof: DofLabel) -> BellIndex {
        self.per_dof[dof.index()]
    }

    /// Position in the lexicographic enumeration (DOF 0 most significant).
    pub fn index(&self) -> usize {
        self.per_dof.iter().fold(0, |acc, b| acc * 4 + b.index())
    }
}

impl fmt::Display for HyperBellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, b) in self.per_dof.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{b}_{}", DofLabel(k).diagonal_suffix())?;
        }
        Ok(())
    }
}
