//! Closed-form QBER and asymptotic secret-key-rate formulas.
//!
//! Per DOF `i` the rate is `R_i = R₀ (1 − H(e_x) − f·H(e_z))` with
//! `R₀ = 10^(−a₀ d / 10)`; the photon's total rate is the sum over DOFs.
//! Source fidelity `β` and channel rotation `θ` enter only through the
//! error rate `e = 2·A₂²`.

use crate::channel::{
    check_attenuation, check_distance, check_theta, pair_survival, ChannelParams,
};
use crate::encoding::{check_beta, SourceFidelity};
use crate::error::{QkdError, Result};
use crate::state::{check_n_dofs, dof_labels, DofLabel};

/// Shannon entropy of a biased coin, in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(QkdError::OutOfRange {
            name: "binary entropy argument",
            value: x,
            range: "[0, 1]",
        });
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Amplitudes of `|00⟩`, `|11⟩` and each of `|01⟩`, `|10⟩` after source
/// misalignment and channel rotation of an intended `|00⟩` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisalignmentCoeffs {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl MisalignmentCoeffs {
    /// Expanded trigonometric form.
    pub fn new(beta: f64, theta: f64) -> Result<Self> {
        check_beta(beta)?;
        let b2 = beta * beta;
        let leak = (1.0 - b2).max(0.0).sqrt();
        let (s, c) = theta.sin_cos();
        Ok(MisalignmentCoeffs {
            a0: b2 * c * c + (1.0 - b2) * s * s + 2.0 * beta * leak * c * s,
            a1: b2 * s * s + (1.0 - b2) * c * c - 2.0 * beta * leak * c * s,
            a2: -b2 * c * s + (1.0 - b2) * c * s + beta * leak * (c * c - s * s),
        })
    }

    /// Qubit error rate `2·A₂²`.
    pub fn qber(&self) -> f64 {
        2.0 * self.a2 * self.a2
    }
}

pub fn misalignment_coeffs(beta: f64, theta: f64) -> Result<MisalignmentCoeffs> {
    MisalignmentCoeffs::new(beta, theta)
}

/// `e_z = e_x = 2·A₂²` for one DOF.
pub fn analytic_qber(beta: f64, theta: f64) -> Result<f64> {
    Ok(MisalignmentCoeffs::new(beta, theta)?.qber())
}

/// Source fidelity and channel rotation of one DOF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofNoise {
    pub beta: f64,
    pub theta: f64,
}

impl DofNoise {
    pub const IDEAL: DofNoise = DofNoise {
        beta: 1.0,
        theta: 0.0,
    };
}

/// Inputs of the analytic rate computation.
#[derive(Debug, Clone, PartialEq)]
pub struct RateParams {
    f_ec: f64,
    attenuation_db_per_km: f64,
    distance_km: f64,
    noise: Vec<DofNoise>,
}

impl RateParams {
    pub fn new(
        noise: Vec<DofNoise>,
        f_ec: f64,
        attenuation_db_per_km: f64,
        distance_km: f64,
    ) -> Result<Self> {
        check_n_dofs(noise.len())?;
        for n in &noise {
            check_beta(n.beta)?;
            check_theta(n.theta)?;
        }
        check_f_ec(f_ec)?;
        check_attenuation(attenuation_db_per_km)?;
        check_distance(distance_km)?;
        Ok(RateParams {
            f_ec,
            attenuation_db_per_km,
            distance_km,
            noise,
        })
    }

    /// Noiseless DOFs, `f = 1`, `a₀ = 0.2 dB/km`, `d = 0`.
    pub fn ideal(n_dofs: usize) -> Self {
        RateParams {
            f_ec: 1.0,
            attenuation_db_per_km: crate::channel::DEFAULT_ATTENUATION_DB_PER_KM,
            distance_km: 0.0,
            noise: vec![DofNoise::IDEAL; n_dofs],
        }
    }

    /// Collects `β`, `θ`, `d` and `a₀` from the simulation parameters.
    pub fn from_parts(source: &SourceFidelity, channel: &ChannelParams, f_ec: f64) -> Result<Self> {
        if source.n_dofs() != channel.n_dofs() {
            return Err(QkdError::DofMismatch {
                expected: source.n_dofs(),
                actual: channel.n_dofs(),
            });
        }
        let noise = source
            .betas()
            .iter()
            .zip(channel.thetas())
            .map(|(&beta, &theta)| DofNoise { beta, theta })
            .collect();
        Self::new(
            noise,
            f_ec,
            channel.attenuation_db_per_km(),
            channel.distance_km(),
        )
    }

    pub fn with_distance(&self, distance_km: f64) -> Result<Self> {
        check_distance(distance_km)?;
        Ok(RateParams {
            distance_km,
            ..self.clone()
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.noise.len()
    }

    pub fn f_ec(&self) -> f64 {
        self.f_ec
    }

    pub fn attenuation_db_per_km(&self) -> f64 {
        self.attenuation_db_per_km
    }

    pub fn distance_km(&self) -> f64 {
        self.distance_km
    }

    pub fn noise(&self, dof: DofLabel) -> DofNoise {
        self.noise[dof.index()]
    }

    /// `R₀ = 10^(−a₀ d / 10)`.
    pub fn r0(&self) -> f64 {
        pair_survival(self.distance_km, self.attenuation_db_per_km)
    }
}

pub(crate) fn check_f_ec(f: f64) -> Result<()> {
    if f >= 1.0 && f.is_finite() {
        Ok(())
    } else {
        Err(QkdError::OutOfRange {
            name: "f_ec",
            value: f,
            range: "[1, inf)",
        })
    }
}

/// A key rate before and after clamping negative values to zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KeyRate {
    pub raw: f64,
    pub clamped: f64,
}

impl KeyRate {
    pub fn from_raw(raw: f64) -> Self {
        KeyRate {
            raw,
            clamped: raw.max(0.0),
        }
    }
}

/// `1 − H(e_x) − f·H(e_z)`, the secret fraction per detected bit.
pub(crate) fn secret_fraction(e_x: f64, e_z: f64, f_ec: f64) -> Result<f64> {
    Ok(1.0 - binary_entropy(e_x)? - f_ec * binary_entropy(e_z)?)
}

fn check_qber_arg(name: &'static str, e: f64) -> Result<()> {
    if (0.0..=0.5).contains(&e) {
        Ok(())
    } else {
        Err(QkdError::OutOfRange {
            name,
            value: e,
            range: "[0, 0.5]",
        })
    }
}

/// `R₀ (1 − H(e_x) − f·H(e_z))` for one DOF.
pub fn dof_key_rate(e_x: f64, e_z: f64, params: &RateParams) -> Result<KeyRate> {
    check_qber_arg("e_x", e_x)?;
    check_qber_arg("e_z", e_z)?;
    Ok(KeyRate::from_raw(
        params.r0() * secret_fraction(e_x, e_z, params.f_ec)?,
    ))
}

/// Sum over DOFs, separately for raw and clamped rates.
pub fn total_key_rate(per_dof: &[KeyRate]) -> KeyRate {
    per_dof.iter().fold(KeyRate::default(), |acc, r| KeyRate {
        raw: acc.raw + r.raw,
        clamped: acc.clamped + r.clamped,
    })
}

/// One DOF's contribution to a [`RateReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DofRateReport {
    pub dof: DofLabel,
    pub coeffs: MisalignmentCoeffs,
    pub e_x: f64,
    pub e_z: f64,
    pub rate: KeyRate,
}

/// Analytic rates at one distance.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub distance_km: f64,
    pub r0: f64,
    pub per_dof: Vec<DofRateReport>,
    pub total: KeyRate,
}

impl RateReport {
    /// `log₁₀` of the clamped total, `None` when it is zero.
    pub fn log10_total(&self) -> Option<f64> {
        (self.total.clamped > 0.0).then(|| self.total.clamped.log10())
    }

    /// True when the formula went negative in some DOF and was clamped.
    pub fn has_negative_raw(&self) -> bool {
        self.per_dof.iter().any(|d| d.rate.raw < 0.0)
    }
}

pub fn rate_report(params: &RateParams) -> Result<RateReport> {
    let per_dof = dof_labels(params.n_dofs())
        .map(|dof| {
            let n = params.noise(dof);
            let coeffs = MisalignmentCoeffs::new(n.beta, n.theta)?;
            let e = coeffs.qber();
            Ok(DofRateReport {
                dof,
                coeffs,
                e_x: e,
                e_z: e,
                rate: dof_key_rate(e, e, params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rates: Vec<KeyRate> = per_dof.iter().map(|d| d.rate).collect();
    Ok(RateReport {
        distance_km: params.distance_km,
        r0: params.r0(),
        total: total_key_rate(&rates),
        per_dof,
    })
}

/// One [`RateReport`] per distance, in the given order.
pub fn rate_sweep(params: &RateParams, d_values: &[f64]) -> Result<Vec<RateReport>> {
    d_values
        .iter()
        .map(|&d| rate_report(&params.with_distance(d)?))
        .collect()
}

/// Distances `start, start + step, …` up to and including `end`.
pub fn distance_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    check_distance(start)?;
    if !(end.is_finite() && step.is_finite() && end >= start && step > 0.0) {
        return Err(QkdError::Config(format!(
            "invalid distance range {start}..={end} step {step}"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| start + i as f64 * step).collect())
}
