//! Transmission from each party to Charlie: per-DOF rotation misalignment and
//! fibre attenuation with Charlie at the midpoint.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{QkdError, Result};
use crate::state::{check_n_dofs, dof_labels, DofGate, DofLabel, SinglePhotonState};

pub const DEFAULT_ATTENUATION_DB_PER_KM: f64 = 0.2;

/// How the rotation matrix `[[cos θ, −sin θ], [sin θ, cos θ]]` acts on a DOF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RotationConvention {
    /// `|0⟩ → cos θ|0⟩ − sin θ|1⟩`, `|1⟩ → sin θ|0⟩ + cos θ|1⟩`, equivalently
    /// `|+⟩ → cos θ|+⟩ + sin θ|−⟩`, `|−⟩ → cos θ|−⟩ − sin θ|+⟩`. This is the
    /// action the closed-form coefficients in [`crate::rates`] are derived from.
    #[default]
    RowAction,
    /// The matrix multiplies the amplitude column `(|0⟩, |1⟩)`:
    /// `|0⟩ → cos θ|0⟩ + sin θ|1⟩`. Same as `RowAction` with `−θ`.
    ColumnAction,
}

/// Channel configuration shared by both arms.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    theta: Vec<f64>,
    distance_km: f64,
    attenuation_db_per_km: f64,
    convention: RotationConvention,
}

impl ChannelParams {
    pub fn new(theta: Vec<f64>, distance_km: f64, attenuation_db_per_km: f64) -> Result<Self> {
        check_n_dofs(theta.len())?;
        for &t in &theta {
            check_theta(t)?;
        }
        check_distance(distance_km)?;
        check_attenuation(attenuation_db_per_km)?;
        Ok(ChannelParams {
            theta,
            distance_km,
            attenuation_db_per_km,
            convention: RotationConvention::default(),
        })
    }

    /// No rotation, zero distance, default attenuation.
    pub fn ideal(n_dofs: usize) -> Self {
        ChannelParams {
            theta: vec![0.0; n_dofs],
            distance_km: 0.0,
            attenuation_db_per_km: DEFAULT_ATTENUATION_DB_PER_KM,
            convention: RotationConvention::default(),
        }
    }

    pub fn with_convention(mut self, convention: RotationConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_distance(mut self, distance_km: f64) -> Result<Self> {
        check_distance(distance_km)?;
        self.distance_km = distance_km;
        Ok(self)
    }

    pub fn n_dofs(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self, dof: DofLabel) -> f64 {
        self.theta[dof.index()]
    }

    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    pub fn distance_km(&self) -> f64 {
        self.distance_km
    }

    pub fn attenuation_db_per_km(&self) -> f64 {
        self.attenuation_db_per_km
    }

    pub fn convention(&self) -> RotationConvention {
        self.convention
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if (-PI..=PI).contains(&theta) {
        Ok(())
    } else {
        Err(QkdError::OutOfRange {
            name: "theta",
            value: theta,
            range: "[-pi, pi]",
        })
    }
}

pub(crate) fn check_distance(d: f64) -> Result<()> {
    if d >= 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(QkdError::OutOfRange {
            name: "distance_km",
            value: d,
            range: "[0, inf)",
        })
    }
}

pub(crate) fn check_attenuation(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(QkdError::OutOfRange {
            name: "attenuation_db_per_km",
            value: a,
            range: "(0, inf)",
        })
    }
}

/// Non-negative angle with `sin²θ` equal to the given misalignment error rate.
pub fn theta_from_sin2(sin2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&sin2) {
        return Err(QkdError::OutOfRange {
            name: "sin^2 theta",
            value: sin2,
            range: "[0, 1]",
        });
    }
    Ok(sin2.sqrt().asin())
}

/// `[[cos θ, −sin θ], [sin θ, cos θ]]`.
pub fn rotation_unitary(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, -s], [s, c]]
}

/// Gate acting on the column `(|0⟩, |1⟩)` for the given convention.
pub fn rotation_gate(theta: f64, convention: RotationConvention) -> DofGate {
    let u = rotation_unitary(theta);
    let m = match convention {
        RotationConvention::ColumnAction => u,
        RotationConvention::RowAction => [[u[0][0], u[1][0]], [u[0][1], u[1][1]]],
    };
    m.map(|row| row.map(|x| Complex64::new(x, 0.0)))
}

/// Applies the per-DOF channel rotations to one photon.
pub fn apply_misalignment(
    state: &SinglePhotonState,
    params: &ChannelParams,
) -> Result<SinglePhotonState> {
    if params.n_dofs() != state.n_dofs() {
        return Err(QkdError::DofMismatch {
            expected: state.n_dofs(),
            actual: params.n_dofs(),
        });
    }
    let mut out = state.clone();
    for dof in dof_labels(state.n_dofs()) {
        let theta = params.theta(dof);
        if theta != 0.0 {
            out = out.apply_dof_gate(dof, &rotation_gate(theta, params.convention))?;
        }
    }
    Ok(out)
}

/// Probability that one photon covers the `d/2` from its party to Charlie.
pub fn arm_survival_probability(params: &ChannelParams) -> f64 {
    10f64.powf(-params.attenuation_db_per_km * params.distance_km / 20.0)
}

/// Probability that both photons reach Charlie, `10^(−a₀·d/10)`.
pub fn survival_probability(params: &ChannelParams) -> f64 {
    pair_survival(params.distance_km, params.attenuation_db_per_km)
}

pub(crate) fn pair_survival(distance_km: f64, attenuation_db_per_km: f64) -> f64 {
    10f64.powf(-attenuation_db_per_km * distance_km / 10.0)
}

/// Bernoulli draw: `true` (survived) with probability `p`.
pub fn sample_loss<R: Rng + ?Sized>(rng: &mut R, p: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QkdError::OutOfRange {
            name: "survival probability",
            value: p,
            range: "[0, 1]",
        });
    }
    Ok(rng.random::<f64>() < p)
}
