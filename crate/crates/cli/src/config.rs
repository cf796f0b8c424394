//! Run settings: defaults, `key = value` configuration files and overrides.
//!
//! Precedence, lowest to highest: built-in defaults, `--config` file, the
//! `--fig2` preset, individual flags. Within one layer a value may be given
//! only once; `beta.K` and `beta2.K` (or `theta.K` and `sin2theta.K`) for the
//! same DOF in the same file is an error.

use std::collections::BTreeMap;
use std::fmt;

use mdiqkd::channel::theta_from_sin2;
use mdiqkd::{
    ChannelParams, RateParams, RotationConvention, RunConfig, SourceFidelity, SourceModel,
};

use crate::CliError;

/// Fully resolved settings shared by all subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub n_dofs: usize,
    pub seed: u64,
    pub rounds: u64,
    pub d_start: f64,
    pub d_end: f64,
    pub d_step: f64,
    pub distance: f64,
    pub atten: f64,
    pub f_ec: f64,
    pub threshold: f64,
    /// Source amplitude fidelity per DOF; absent DOFs are perfect.
    pub beta: BTreeMap<usize, f64>,
    /// Channel rotation angle per DOF (radians); absent DOFs are aligned.
    pub theta: BTreeMap<usize, f64>,
    pub source_model: SourceModel,
    pub rotation: RotationConvention,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            n_dofs: 3,
            seed: 0,
            rounds: 1_000_000,
            d_start: 0.0,
            d_end: 300.0,
            d_step: 10.0,
            distance: 0.0,
            atten: 0.2,
            f_ec: 1.0,
            threshold: 0.11,
            beta: BTreeMap::new(),
            theta: BTreeMap::new(),
            source_model: SourceModel::default(),
            rotation: RotationConvention::default(),
        }
    }
}

/// One layer of settings, every field optional.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub n_dofs: Option<usize>,
    pub seed: Option<u64>,
    pub rounds: Option<u64>,
    pub d_start: Option<f64>,
    pub d_end: Option<f64>,
    pub d_step: Option<f64>,
    pub distance: Option<f64>,
    pub atten: Option<f64>,
    pub f_ec: Option<f64>,
    pub threshold: Option<f64>,
    pub beta: BTreeMap<usize, f64>,
    pub theta: BTreeMap<usize, f64>,
    pub source_model: Option<SourceModel>,
    pub rotation: Option<RotationConvention>,
}

/// Source and channel values of the published rate-vs-distance example.
pub const FIG2_BETA_SQUARED: f64 = 0.85;
pub const FIG2_SIN2_THETA: f64 = 0.015;

impl Overrides {
    /// `|β|² = 0.85` and `sin²θ = 0.015` in every DOF of an `n_dofs` photon.
    pub fn fig2(n_dofs: usize) -> Self {
        let theta = theta_from_sin2(FIG2_SIN2_THETA).expect("valid constant");
        Overrides {
            beta: (0..n_dofs).map(|k| (k, FIG2_BETA_SQUARED.sqrt())).collect(),
            theta: (0..n_dofs).map(|k| (k, theta)).collect(),
            ..Default::default()
        }
    }

    /// Parses a configuration file body.
    pub fn parse_file(text: &str) -> Result<Self, CliError> {
        let mut out = Overrides::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("line {lineno}: expected key = value, got {raw:?}"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            // beta.K / beta2.K and theta.K / sin2theta.K name the same setting
            let canonical = match key.split_once('.') {
                Some(("beta" | "beta2", k)) => format!("beta.{k}"),
                Some(("theta" | "sin2theta", k)) => format!("theta.{k}"),
                _ => key.to_string(),
            };
            if let Some(prev) = seen.insert(canonical.clone(), lineno) {
                return Err(CliError::Usage(format!(
                    "line {lineno}: {key} conflicts with the value for {canonical} on line {prev}"
                )));
            }
            out.set(key, value)
                .map_err(|e| CliError::Usage(format!("line {lineno}: {e}")))?;
        }
        Ok(out)
    }

    /// Sets one `key = value` entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "dofs" => self.n_dofs = Some(parse_count(value)? as usize),
            "seed" => self.seed = Some(value.parse().map_err(|_| bad(key, value))?),
            "rounds" => self.rounds = Some(parse_count(value)?),
            "d_start" => self.d_start = Some(parse_f64(key, value)?),
            "d_end" => self.d_end = Some(parse_f64(key, value)?),
            "d_step" => self.d_step = Some(parse_f64(key, value)?),
            "distance" => self.distance = Some(parse_f64(key, value)?),
            "atten" => self.atten = Some(parse_f64(key, value)?),
            "f_ec" => self.f_ec = Some(parse_f64(key, value)?),
            "threshold" => self.threshold = Some(parse_f64(key, value)?),
            "source_model" => self.source_model = Some(parse_source_model(value)?),
            "rotation" => self.rotation = Some(parse_rotation(value)?),
            _ => {
                let (name, dof) = key
                    .split_once('.')
                    .ok_or_else(|| format!("unknown key {key:?}"))?;
                let dof: usize = dof
                    .parse()
                    .map_err(|_| format!("bad DOF index in {key:?}"))?;
                let x = parse_f64(key, value)?;
                match name {
                    "beta" => self.beta.insert(dof, x),
                    "beta2" => self.beta.insert(dof, beta_from_squared(x)?),
                    "theta" => self.theta.insert(dof, x),
                    "sin2theta" => self
                        .theta
                        .insert(dof, theta_from_sin2(x).map_err(|e| e.to_string())?),
                    _ => return Err(format!("unknown key {key:?}")),
                };
            }
        }
        Ok(())
    }

    /// Applies this layer on top of `base`.
    pub fn apply(&self, base: &mut Settings) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { base.$field = v; })*
            };
        }
        take!(
            n_dofs,
            seed,
            rounds,
            d_start,
            d_end,
            d_step,
            distance,
            atten,
            f_ec,
            threshold,
            source_model,
            rotation
        );
        base.beta.extend(&self.beta);
        base.theta.extend(&self.theta);
    }
}

fn bad(key: &str, value: &str) -> String {
    format!("invalid value {value:?} for {key}")
}

fn parse_f64(key: &str, value: &str) -> Result<f64, String> {
    value
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| bad(key, value))
}

/// Non-negative integer, also accepting integral scientific notation (`1e6`).
pub fn parse_count(value: &str) -> Result<u64, String> {
    if let Ok(n) = value.parse::<u64>() {
        return Ok(n);
    }
    match value.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(x as u64),
        _ => Err(format!("expected a non-negative integer, got {value:?}")),
    }
}

pub fn beta_from_squared(b2: f64) -> Result<f64, String> {
    if b2 > 0.0 && b2 <= 1.0 {
        Ok(b2.sqrt())
    } else {
        Err(format!("beta^2 must be in (0, 1], got {b2}"))
    }
}

pub fn parse_source_model(value: &str) -> Result<SourceModel, String> {
    match value {
        "rotation" => Ok(SourceModel::FrameRotation),
        "mixing" => Ok(SourceModel::IntentMixing),
        _ => Err(format!(
            "source model must be rotation or mixing, got {value:?}"
        )),
    }
}

pub fn parse_rotation(value: &str) -> Result<RotationConvention, String> {
    match value {
        "row" => Ok(RotationConvention::RowAction),
        "column" => Ok(RotationConvention::ColumnAction),
        _ => Err(format!("rotation must be row or column, got {value:?}")),
    }
}

/// Parses `K=V` with an integer DOF index.
pub fn parse_dof_value(s: &str) -> Result<(usize, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected K=V, got {s:?}"))?;
    let k = k
        .trim()
        .parse()
        .map_err(|_| format!("bad DOF index in {s:?}"))?;
    let v = v
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("bad value in {s:?}"))?;
    Ok((k, v))
}

impl Settings {
    fn check_dof_keys(&self) -> Result<(), CliError> {
        for (&k, _) in self.beta.iter().chain(&self.theta) {
            if k >= self.n_dofs {
                return Err(CliError::Usage(format!(
                    "DOF index {k} out of range for {} DOFs",
                    self.n_dofs
                )));
            }
        }
        Ok(())
    }

    pub fn betas(&self) -> Vec<f64> {
        (0..self.n_dofs)
            .map(|k| self.beta.get(&k).copied().unwrap_or(1.0))
            .collect()
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n_dofs)
            .map(|k| self.theta.get(&k).copied().unwrap_or(0.0))
            .collect()
    }

    pub fn source(&self) -> Result<SourceFidelity, CliError> {
        self.check_dof_keys()?;
        Ok(SourceFidelity::new(self.betas())?)
    }

    pub fn channel(&self, distance: f64) -> Result<ChannelParams, CliError> {
        self.check_dof_keys()?;
        Ok(ChannelParams::new(self.thetas(), distance, self.atten)?.with_convention(self.rotation))
    }

    pub fn rate_params(&self, distance: f64) -> Result<RateParams, CliError> {
        Ok(RateParams::from_parts(
            &self.source()?,
            &self.channel(distance)?,
            self.f_ec,
        )?)
    }

    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        let config = RunConfig {
            n_rounds: self.rounds,
            seed: self.seed,
            source: self.source()?,
            source_model: self.source_model,
            channel: self.channel(self.distance)?,
            f_ec: self.f_ec,
            qber_abort_threshold: self.threshold,
        };
        config.validate()?;
        Ok(config)
    }
}

impl fmt::Display for Settings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dofs={} seed={} rounds={} distance={} atten={} f_ec={} threshold={}",
            self.n_dofs,
            self.seed,
            self.rounds,
            self.distance,
            self.atten,
            self.f_ec,
            self.threshold
        )?;
        for (k, (b, t)) in self.betas().iter().zip(self.thetas()).enumerate() {
            write!(f, " beta2.{k}={} sin2theta.{k}={}", b * b, t.sin().powi(2))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_with_comments() {
        let text = "# sweep\nseed = 42\nrounds = 1e5 # short run\n\nbeta2.0 = 0.85\ntheta.1 = 0.1\nsin2theta.2=0.015\nrotation = column\n";
        let o = Overrides::parse_file(text).unwrap();
        assert_eq!(o.seed, Some(42));
        assert_eq!(o.rounds, Some(100_000));
        assert!((o.beta[&0] - 0.85f64.sqrt()).abs() < 1e-15);
        assert_eq!(o.theta[&1], 0.1);
        assert!((o.theta[&2].sin().powi(2) - 0.015).abs() < 1e-15);
        assert_eq!(o.rotation, Some(RotationConvention::ColumnAction));
    }

    #[test]
    fn rejects_conflicts_and_junk() {
        assert!(Overrides::parse_file("seed = 1\nseed = 2").is_err());
        assert!(Overrides::parse_file("beta.0 = 0.9\nbeta2.0 = 0.81").is_err());
        assert!(Overrides::parse_file("theta.1 = 0.1\nsin2theta.1 = 0.01").is_err());
        assert!(Overrides::parse_file("nonsense = 1").is_err());
        assert!(Overrides::parse_file("just text").is_err());
        assert!(Overrides::parse_file("beta2.0 = 1.5").is_err());
        assert!(Overrides::parse_file("rounds = -3").is_err());
        // different DOFs do not conflict
        assert!(Overrides::parse_file("beta.0 = 0.9\nbeta2.1 = 0.81").is_ok());
    }

    #[test]
    fn layers_apply_in_order() {
        let mut s = Settings::default();
        let file = Overrides::parse_file("seed = 5\nbeta2.0 = 0.5\natten = 0.3").unwrap();
        file.apply(&mut s);
        Overrides::fig2(3).apply(&mut s);
        let mut flags = Overrides::default();
        flags.set("seed", "9").unwrap();
        flags.set("beta2.1", "0.64").unwrap();
        flags.apply(&mut s);
        assert_eq!(s.seed, 9);
        assert_eq!(s.atten, 0.3);
        assert!((s.beta[&0] - 0.85f64.sqrt()).abs() < 1e-15);
        assert!((s.beta[&1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_dof_keys_are_rejected() {
        let mut s = Settings::default();
        s.beta.insert(3, 0.9);
        assert!(s.source().is_err());
        s.n_dofs = 4;
        assert!(s.source().is_ok());
    }

    #[test]
    fn dof_value_syntax() {
        assert_eq!(parse_dof_value("1=0.5").unwrap(), (1, 0.5));
        assert!(parse_dof_value("x=0.5").is_err());
        assert!(parse_dof_value("0.5").is_err());
        assert!(parse_dof_value("0=nan").is_err());
    }
}
