//! Charlie's complete hyper-Bell-state analysis.

use rand::Rng;

use crate::error::{QkdError, Result};
use crate::state::{BellIndex, DofLabel, HyperBellOutcome, JointState, ACCUM_TOL};

/// Born-rule probabilities over the `4^N` hyper-Bell outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    n_dofs: usize,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    /// Validates non-negativity and normalization.
    pub fn from_probs(n_dofs: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << (2 * n_dofs) {
            return Err(QkdError::InvalidState(format!(
                "{} probabilities for {n_dofs} DOFs",
                probs.len()
            )));
        }
        if probs.iter().any(|p| p.is_nan() || *p < 0.0) {
            return Err(QkdError::InvalidState("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > ACCUM_TOL {
            return Err(QkdError::InvalidState(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(OutcomeDistribution { n_dofs, probs })
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, outcome: &HyperBellOutcome) -> f64 {
        self.probs[outcome.index()]
    }

    /// Outcomes with probability above `tol`, in canonical order.
    pub fn support(&self, tol: f64) -> impl Iterator<Item = (HyperBellOutcome, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(move |(_, &p)| p > tol)
            .map(move |(i, &p)| {
                (
                    HyperBellOutcome::from_index(i, self.n_dofs).expect("index in range"),
                    p,
                )
            })
    }

    /// Marginal over one DOF, in Bell order Φ⁺, Φ⁻, Ψ⁺, Ψ⁻.
    pub fn marginal(&self, dof: DofLabel) -> Result<[f64; 4]> {
        dof.check(self.n_dofs)?;
        let shift = 2 * (self.n_dofs - 1 - dof.index());
        let mut out = [0.0; 4];
        for (i, p) in self.probs.iter().enumerate() {
            out[(i >> shift) & 3] += p;
        }
        Ok(out)
    }
}

/// `probs[o] = |⟨hyper-Bell o | joint⟩|²`.
pub fn outcome_distribution(joint: &JointState) -> OutcomeDistribution {
    let probs = joint
        .hyper_bell_amplitudes()
        .into_iter()
        .map(|a| a.norm_sqr())
        .collect();
    OutcomeDistribution {
        n_dofs: joint.n_dofs(),
        probs,
    }
}

/// Draws one outcome by inverse-CDF sampling on a single uniform variate.
pub fn sample_outcome<R: Rng + ?Sized>(
    rng: &mut R,
    dist: &OutcomeDistribution,
) -> Result<HyperBellOutcome> {
    let total: f64 = dist.probs.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(QkdError::InvalidState(
            "cannot sample from an all-zero distribution".into(),
        ));
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in dist.probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_nonzero = i;
            if target < acc {
                return HyperBellOutcome::from_index(i, dist.n_dofs);
            }
        }
    }
    // rounding left target just above the accumulated sum
    HyperBellOutcome::from_index(last_nonzero, dist.n_dofs)
}

/// Per-DOF Bell-outcome probabilities, the marginal of [`outcome_distribution`].
pub fn per_dof_distribution(joint: &JointState, dof: DofLabel) -> Result<[f64; 4]> {
    outcome_distribution(joint).marginal(dof)
}

/// Probability of `bell` in a given DOF.
pub fn bell_probability(marginal: &[f64; 4], bell: BellIndex) -> f64 {
    marginal[bell.index()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{ideal_state, DofChoice, EncodingChoice};
    use crate::state::{BasisKind, SinglePhotonState, EXACT_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use BasisKind::{Diagonal as D, Rectilinear as R};

    fn prepare(states: &[(BasisKind, u8)]) -> SinglePhotonState {
        ideal_state(
            &EncodingChoice::new(
                states
                    .iter()
                    .map(|&(b, v)| DofChoice::new(b, v).unwrap())
                    .collect(),
            )
            .unwrap(),
        )
    }

    fn joint(a: &[(BasisKind, u8)], b: &[(BasisKind, u8)]) -> JointState {
        JointState::tensor(&prepare(a), &prepare(b)).unwrap()
    }

    fn assert_uniform_support(dist: &OutcomeDistribution, count: usize) {
        let support: Vec<_> = dist.support(EXACT_TOL).collect();
        assert_eq!(support.len(), count);
        for (_, p) in support {
            assert!((p - 1.0 / count as f64).abs() < EXACT_TOL);
        }
    }

    #[test]
    fn worked_decompositions() {
        let alice = [(R, 0), (R, 0), (R, 0)];
        let d2 = outcome_distribution(&joint(&alice, &[(R, 1), (R, 0), (R, 1)]));
        assert_uniform_support(&d2, 8);
        for (o, _) in d2.support(EXACT_TOL) {
            assert!(matches!(
                o.per_dof()[0],
                BellIndex::PsiPlus | BellIndex::PsiMinus
            ));
            assert!(matches!(
                o.per_dof()[1],
                BellIndex::PhiPlus | BellIndex::PhiMinus
            ));
            assert!(matches!(
                o.per_dof()[2],
                BellIndex::PsiPlus | BellIndex::PsiMinus
            ));
        }
        assert_uniform_support(
            &outcome_distribution(&joint(&alice, &[(R, 1), (D, 0), (R, 1)])),
            16,
        );
        assert_uniform_support(
            &outcome_distribution(&joint(&alice, &[(R, 1), (D, 0), (D, 1)])),
            32,
        );
    }

    #[test]
    fn single_dof_outcome_examples() {
        let pol = DofLabel::POLARIZATION;
        let hh = per_dof_distribution(&joint(&[(R, 0)], &[(R, 0)]), pol).unwrap();
        assert_eq!(hh.map(|p| (p * 1e12).round() / 1e12), [0.5, 0.5, 0.0, 0.0]);
        let pm = per_dof_distribution(&joint(&[(D, 0)], &[(D, 1)]), pol).unwrap();
        assert_eq!(pm.map(|p| (p * 1e12).round() / 1e12), [0.0, 0.5, 0.0, 0.5]);
        let mixed = per_dof_distribution(
            &joint(&[(R, 0), (R, 0)], &[(R, 0), (D, 0)]),
            DofLabel::MOMENTUM1,
        )
        .unwrap();
        for p in mixed {
            assert!((p - 0.25).abs() < EXACT_TOL);
        }
        assert!(per_dof_distribution(&joint(&[(R, 0)], &[(R, 0)]), DofLabel::new(1)).is_err());
    }

    #[test]
    fn product_inputs_factorize_exhaustively() {
        // every same-basis-per-DOF pair of N=3 preparations
        for basis_mask in 0..8u8 {
            for a_bits in 0..8u8 {
                for b_bits in 0..8u8 {
                    let states = |bits: u8| -> Vec<(BasisKind, u8)> {
                        (0..3)
                            .map(|k| {
                                (
                                    if (basis_mask >> k) & 1 == 1 { D } else { R },
                                    (bits >> k) & 1,
                                )
                            })
                            .collect()
                    };
                    let j = joint(&states(a_bits), &states(b_bits));
                    let dist = outcome_distribution(&j);
                    let marginals: Vec<[f64; 4]> = (0..3)
                        .map(|k| dist.marginal(DofLabel::new(k)).unwrap())
                        .collect();
                    for o in HyperBellOutcome::all(3) {
                        let product: f64 = o
                            .per_dof()
                            .iter()
                            .enumerate()
                            .map(|(k, b)| marginals[k][b.index()])
                            .product();
                        assert!((dist.prob(&o) - product).abs() < EXACT_TOL);
                    }
                }
            }
        }
    }

    #[test]
    fn sampling_delta_distribution() {
        let target = HyperBellOutcome::from_index(37, 3).unwrap();
        let dist = outcome_distribution(&JointState::hyper_bell(&target));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert_eq!(sample_outcome(&mut rng, &dist).unwrap(), target);
        }
    }

    #[test]
    fn sampling_rejects_zero_distribution() {
        let dist = OutcomeDistribution {
            n_dofs: 1,
            probs: vec![0.0; 4],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_outcome(&mut rng, &dist),
            Err(QkdError::InvalidState(_))
        ));
        assert!(OutcomeDistribution::from_probs(1, vec![0.0; 4]).is_err());
        assert!(OutcomeDistribution::from_probs(1, vec![0.5, 0.5, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn sampling_eight_outcome_distribution() {
        let dist =
            outcome_distribution(&joint(&[(R, 0), (R, 0), (R, 0)], &[(R, 1), (R, 0), (R, 1)]));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut counts = vec![0usize; 64];
        for _ in 0..n {
            counts[sample_outcome(&mut rng, &dist).unwrap().index()] += 1;
        }
        let sigma = (n as f64 * 0.125 * 0.875).sqrt();
        for (o, _) in dist.support(EXACT_TOL) {
            let c = counts[o.index()] as f64;
            assert!((c - 12_500.0).abs() <= 3.0 * sigma, "{o}: {c}");
        }
        let outside: usize = (0..64)
            .filter(|&i| dist.probs()[i] < EXACT_TOL)
            .map(|i| counts[i])
            .sum();
        assert_eq!(outside, 0);
    }

    #[test]
    fn sampling_uniform_chi_square() {
        let dist = OutcomeDistribution::from_probs(3, vec![1.0 / 64.0; 64]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000;
        let mut counts = vec![0usize; 64];
        for _ in 0..n {
            counts[sample_outcome(&mut rng, &dist).unwrap().index()] += 1;
        }
        let expected = n as f64 / 64.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square 99th percentile, 63 degrees of freedom
        assert!(chi2 < 92.01, "chi2 = {chi2}");
    }
}
