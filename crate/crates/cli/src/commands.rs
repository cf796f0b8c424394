//! The three subcommands. Each renders its CSV into a string so callers can
//! send it to a file or standard output unchanged.

use std::fmt::Write as _;
use std::io::Write;

use mdiqkd::channel::apply_misalignment;
use mdiqkd::encoding::misaligned_state_with;
use mdiqkd::hbsa::outcome_distribution;
use mdiqkd::protocol::run_protocol;
use mdiqkd::rates::{distance_grid, rate_report, rate_sweep};
use mdiqkd::state::{dof_labels, EXACT_TOL};
use mdiqkd::{BasisKind, EncodingChoice, JointState, ProtocolStats, RateReport};

use crate::config::Settings;
use crate::CliError;

/// Successful command outcome; `Aborted` maps to its own exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Aborted,
}

fn na(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// Analytic key-rate sweep over the configured distance grid.
pub fn analytic_sweep(settings: &Settings, diag: &mut dyn Write) -> Result<String, CliError> {
    let grid = distance_grid(settings.d_start, settings.d_end, settings.d_step)?;
    let reports = rate_sweep(&settings.rate_params(settings.d_start)?, &grid)?;
    warn_negative(&reports, diag)?;
    Ok(sweep_csv(settings.n_dofs, &reports))
}

pub fn sweep_csv(n_dofs: usize, reports: &[RateReport]) -> String {
    let suffixes: Vec<String> = dof_labels(n_dofs)
        .map(|d| d.diagonal_suffix().into_owned())
        .collect();
    let mut out = String::from("d_km,r0");
    for s in &suffixes {
        write!(out, ",e_z_{s}").unwrap();
    }
    for s in &suffixes {
        write!(out, ",r_{s}").unwrap();
    }
    out.push_str(",r_total,log10_r_total\n");
    for r in reports {
        write!(out, "{},{}", r.distance_km, r.r0).unwrap();
        for d in &r.per_dof {
            write!(out, ",{}", d.e_z).unwrap();
        }
        for d in &r.per_dof {
            write!(out, ",{}", d.rate.clamped).unwrap();
        }
        writeln!(out, ",{},{}", r.total.clamped, na(r.log10_total())).unwrap();
    }
    out
}

fn warn_negative(reports: &[RateReport], diag: &mut dyn Write) -> Result<(), CliError> {
    let negative: Vec<&RateReport> = reports.iter().filter(|r| r.has_negative_raw()).collect();
    if negative.is_empty() {
        return Ok(());
    }
    let worst = negative
        .iter()
        .flat_map(|r| r.per_dof.iter().map(|d| d.rate.raw))
        .fold(f64::INFINITY, f64::min);
    let e_max = negative
        .iter()
        .flat_map(|r| r.per_dof.iter().map(|d| d.e_z))
        .fold(0.0, f64::max);
    writeln!(
        diag,
        "warning: the secret-key formula is negative in at least one DOF at {} of {} distances \
         (QBER up to {e_max}, most negative raw rate {worst}); those rates are clamped to 0, \
         so the reported curve is not a positive key rate",
        negative.len(),
        reports.len()
    )
    .map_err(CliError::io("standard error"))
}

/// Monte Carlo run followed by a per-DOF comparison with the analytic model.
pub fn simulate(settings: &Settings, diag: &mut dyn Write) -> Result<(String, Outcome), CliError> {
    let config = settings.run_config()?;
    let analytic = rate_report(&settings.rate_params(settings.distance)?)?;
    let stats = run_protocol(&config)?;
    let csv = simulate_csv(&stats, &analytic);

    writeln!(
        diag,
        "simulated {} rounds, {} survived the channel",
        stats.rounds_total, stats.rounds_survived
    )
    .map_err(CliError::io("standard error"))?;
    for d in dof_labels(stats.n_dofs()) {
        let e_z = stats.qber(d, BasisKind::Rectilinear).rate();
        let e_x = stats.qber(d, BasisKind::Diagonal).rate();
        writeln!(
            diag,
            "  {d}: e_z={} e_x={} analytic={} key_bits={}",
            na(e_z),
            na(e_x),
            analytic.per_dof[d.index()].e_z,
            stats.key_bits(d)
        )
        .map_err(CliError::io("standard error"))?;
    }
    warn_negative(std::slice::from_ref(&analytic), diag)?;
    if stats.aborted() {
        writeln!(
            diag,
            "abort: check-basis QBER exceeds the threshold {}",
            stats.qber_abort_threshold()
        )
        .map_err(CliError::io("standard error"))?;
        Ok((csv, Outcome::Aborted))
    } else {
        Ok((csv, Outcome::Done))
    }
}

pub const SIMULATE_HEADER: &str = "dof,rounds,survived,rect_pairs,rect_errors,e_z,diag_pairs,\
diag_errors,e_x,e_analytic,key_bits,r_empirical_raw,r_empirical,r_analytic_raw,r_analytic,abort";

pub fn simulate_csv(stats: &ProtocolStats, analytic: &RateReport) -> String {
    let mut out = format!("{SIMULATE_HEADER}\n");
    let abort = stats.aborted();
    for d in dof_labels(stats.n_dofs()) {
        let z = stats.qber(d, BasisKind::Rectilinear);
        let x = stats.qber(d, BasisKind::Diagonal);
        let emp = stats.empirical_key_rate(d);
        let ana = &analytic.per_dof[d.index()];
        writeln!(
            out,
            "{d},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{abort}",
            stats.rounds_total,
            stats.rounds_survived,
            z.total,
            z.errors,
            na(z.rate()),
            x.total,
            x.errors,
            na(x.rate()),
            ana.e_z,
            stats.key_bits(d),
            na(emp.map(|r| r.raw)),
            na(emp.map(|r| r.clamped)),
            ana.rate.raw,
            ana.rate.clamped,
        )
        .unwrap();
    }
    let sum = |basis: BasisKind| {
        dof_labels(stats.n_dofs()).fold((0u64, 0u64), |(t, e), d| {
            let q = stats.qber(d, basis);
            (t + q.total, e + q.errors)
        })
    };
    let ratio = |(t, e): (u64, u64)| (t > 0).then(|| e as f64 / t as f64);
    let (z, x) = (sum(BasisKind::Rectilinear), sum(BasisKind::Diagonal));
    let emp = stats.total_empirical_key_rate();
    writeln!(
        out,
        "total,{},{},{},{},{},{},{},{},NA,{},{},{},{},{},{abort}",
        stats.rounds_total,
        stats.rounds_survived,
        z.0,
        z.1,
        na(ratio(z)),
        x.0,
        x.1,
        na(ratio(x)),
        z.0,
        na(emp.map(|r| r.raw)),
        na(emp.map(|r| r.clamped)),
        analytic.total.raw,
        analytic.total.clamped,
    )
    .unwrap();
    out
}

pub const DECOMPOSE_HEADER: &str = "outcome,amplitude_re,amplitude_im,probability";

/// Nonzero hyper-Bell components of Alice's and Bob's photons after the
/// configured source and channel imperfections (none by default).
pub fn decompose(
    settings: &Settings,
    alice: &EncodingChoice,
    bob: &EncodingChoice,
) -> Result<String, CliError> {
    let n = alice.n_dofs();
    if bob.n_dofs() != n {
        return Err(CliError::Usage(format!(
            "Alice chose {n} DOFs but Bob chose {}",
            bob.n_dofs()
        )));
    }
    let mut settings = settings.clone();
    settings.n_dofs = n;
    let source = settings.source()?;
    let channel = settings.channel(0.0)?;
    let send = |c: &EncodingChoice| -> Result<_, CliError> {
        let prepared = misaligned_state_with(c, &source, settings.source_model)?;
        Ok(apply_misalignment(&prepared, &channel)?)
    };
    let joint = JointState::tensor(&send(alice)?, &send(bob)?)?;
    let amps = joint.hyper_bell_amplitudes();
    let dist = outcome_distribution(&joint);
    let mut out = format!("{DECOMPOSE_HEADER}\n");
    for (outcome, p) in dist.support(EXACT_TOL) {
        let a = amps[outcome.index()];
        writeln!(out, "{outcome},{},{},{p}", a.re, a.im).unwrap();
    }
    Ok(out)
}
