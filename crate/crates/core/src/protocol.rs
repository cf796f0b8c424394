//! Monte Carlo runs of the full protocol: random preparation, channels,
//! hyper-Bell analysis, sifting and per-DOF error statistics.
//!
//! Rounds are grouped into fixed-size chunks. Chunk `i` draws from a ChaCha8
//! generator seeded with the master seed on stream `i`, so results depend only
//! on the configuration, never on how chunks are spread over workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{apply_misalignment, sample_loss, survival_probability, ChannelParams};
use crate::encoding::{misaligned_state_with, EncodingChoice, SourceFidelity, SourceModel};
use crate::error::{QkdError, Result};
use crate::hbsa::{outcome_distribution, sample_outcome};
use crate::rates::{check_f_ec, secret_fraction, KeyRate, RateParams};
use crate::sifting::{sift_round, QberEstimate, RoundRecord, DEFAULT_QBER_THRESHOLD};
use crate::state::{check_n_dofs, dof_labels, BasisKind, DofLabel, JointState};

/// Rounds per independently seeded chunk.
pub const CHUNK_ROUNDS: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_rounds: u64,
    pub seed: u64,
    pub source: SourceFidelity,
    pub source_model: SourceModel,
    pub channel: ChannelParams,
    /// Error-correction inefficiency `f ≥ 1`.
    pub f_ec: f64,
    pub qber_abort_threshold: f64,
}

impl RunConfig {
    /// Perfect sources and channels at zero distance.
    pub fn ideal(n_dofs: usize, n_rounds: u64, seed: u64) -> Self {
        RunConfig {
            n_rounds,
            seed,
            source: SourceFidelity::perfect(n_dofs),
            source_model: SourceModel::default(),
            channel: ChannelParams::ideal(n_dofs),
            f_ec: 1.0,
            qber_abort_threshold: DEFAULT_QBER_THRESHOLD,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.source.n_dofs()
    }

    pub fn validate(&self) -> Result<()> {
        check_n_dofs(self.n_dofs())?;
        if self.n_rounds == 0 {
            return Err(QkdError::Config("n_rounds must be at least 1".into()));
        }
        if self.channel.n_dofs() != self.n_dofs() {
            return Err(QkdError::DofMismatch {
                expected: self.n_dofs(),
                actual: self.channel.n_dofs(),
            });
        }
        check_f_ec(self.f_ec)?;
        if !(0.0..=1.0).contains(&self.qber_abort_threshold) {
            return Err(QkdError::OutOfRange {
                name: "qber_abort_threshold",
                value: self.qber_abort_threshold,
                range: "[0, 1]",
            });
        }
        Ok(())
    }

    /// Parameters of the matching analytic rate computation.
    pub fn rate_params(&self) -> Result<RateParams> {
        RateParams::from_parts(&self.source, &self.channel, self.f_ec)
    }

    fn n_chunks(&self) -> u64 {
        self.n_rounds.div_ceil(CHUNK_ROUNDS)
    }

    fn chunk_len(&self, chunk: u64) -> u64 {
        (self.n_rounds - chunk * CHUNK_ROUNDS).min(CHUNK_ROUNDS)
    }
}

/// Accumulated counts of a (partial) run. All rates derive from the counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolStats {
    n_dofs: usize,
    qber_abort_threshold: f64,
    f_ec: f64,
    pub rounds_total: u64,
    pub rounds_survived: u64,
    /// Survived rounds by number of DOFs with matching bases, `0..=N`.
    pub basis_matches: Vec<u64>,
    /// Per DOF, indexed by [`BasisKind::index`].
    sifted: Vec<[QberEstimate; 2]>,
}

impl ProtocolStats {
    pub fn empty(n_dofs: usize, qber_abort_threshold: f64, f_ec: f64) -> Self {
        ProtocolStats {
            n_dofs,
            qber_abort_threshold,
            f_ec,
            rounds_total: 0,
            rounds_survived: 0,
            basis_matches: vec![0; n_dofs + 1],
            sifted: dof_labels(n_dofs)
                .map(|d| BasisKind::ALL.map(|b| QberEstimate::empty(d, b)))
                .collect(),
        }
    }

    fn for_config(config: &RunConfig) -> Self {
        Self::empty(config.n_dofs(), config.qber_abort_threshold, config.f_ec)
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn qber_abort_threshold(&self) -> f64 {
        self.qber_abort_threshold
    }

    /// Folds one round into the counts.
    pub fn record(&mut self, round: &RoundRecord) -> Result<()> {
        if round.alice().n_dofs() != self.n_dofs {
            return Err(QkdError::DofMismatch {
                expected: self.n_dofs,
                actual: round.alice().n_dofs(),
            });
        }
        self.rounds_total += 1;
        if !round.survived() {
            return Ok(());
        }
        self.rounds_survived += 1;
        let pairs = sift_round(round);
        self.basis_matches[pairs.len()] += 1;
        for p in pairs {
            self.sifted[p.dof.index()][p.basis.index()].record(p.is_error());
        }
        Ok(())
    }

    /// Sifted-pair counts for one DOF and basis.
    pub fn qber(&self, dof: DofLabel, basis: BasisKind) -> &QberEstimate {
        &self.sifted[dof.index()][basis.index()]
    }

    /// Key material: rectilinear sifted pairs of one DOF.
    pub fn key_bits(&self, dof: DofLabel) -> u64 {
        self.qber(dof, BasisKind::Rectilinear).total
    }

    /// Set when the diagonal-basis (check) QBER of any DOF exceeds the threshold.
    pub fn aborted(&self) -> bool {
        dof_labels(self.n_dofs).any(|d| {
            self.qber(d, BasisKind::Diagonal)
                .rate()
                .is_some_and(|e| e > self.qber_abort_threshold)
        })
    }

    /// Rectilinear sifted pairs per emitted round.
    pub fn rectilinear_yield(&self, dof: DofLabel) -> Option<f64> {
        (self.rounds_total > 0).then(|| self.key_bits(dof) as f64 / self.rounds_total as f64)
    }

    /// `yield · (1 − H(ê_x) − f·H(ê_z))`; `None` until both bases have pairs.
    pub fn empirical_key_rate(&self, dof: DofLabel) -> Option<KeyRate> {
        let e_x = self.qber(dof, BasisKind::Diagonal).rate()?;
        let e_z = self.qber(dof, BasisKind::Rectilinear).rate()?;
        let fraction = secret_fraction(e_x, e_z, self.f_ec).ok()?;
        Some(KeyRate::from_raw(self.rectilinear_yield(dof)? * fraction))
    }

    pub fn total_empirical_key_rate(&self) -> Option<KeyRate> {
        let rates = dof_labels(self.n_dofs)
            .map(|d| self.empirical_key_rate(d))
            .collect::<Option<Vec<_>>>()?;
        Some(crate::rates::total_key_rate(&rates))
    }

    /// Combines counts of two runs with the same shape.
    pub fn merge(&self, other: &ProtocolStats) -> Result<ProtocolStats> {
        if self.n_dofs != other.n_dofs
            || self.qber_abort_threshold != other.qber_abort_threshold
            || self.f_ec != other.f_ec
        {
            return Err(QkdError::Config(
                "cannot merge statistics of differently shaped runs".into(),
            ));
        }
        let sifted = self
            .sifted
            .iter()
            .zip(&other.sifted)
            .map(|(a, b)| Ok([a[0].merge(&b[0])?, a[1].merge(&b[1])?]))
            .collect::<Result<_>>()?;
        Ok(ProtocolStats {
            rounds_total: self.rounds_total + other.rounds_total,
            rounds_survived: self.rounds_survived + other.rounds_survived,
            basis_matches: self
                .basis_matches
                .iter()
                .zip(&other.basis_matches)
                .map(|(a, b)| a + b)
                .collect(),
            sifted,
            ..self.clone()
        })
    }
}

/// State reaching Charlie from one party.
fn transmitted(
    choice: &EncodingChoice,
    config: &RunConfig,
) -> Result<crate::state::SinglePhotonState> {
    let prepared = misaligned_state_with(choice, &config.source, config.source_model)?;
    apply_misalignment(&prepared, &config.channel)
}

/// Plays one round with the given generator.
pub fn simulate_round(rng: &mut ChaCha8Rng, config: &RunConfig) -> Result<RoundRecord> {
    let n = config.n_dofs();
    let alice = EncodingChoice::random(rng, n);
    let bob = EncodingChoice::random(rng, n);
    if !sample_loss(rng, survival_probability(&config.channel))? {
        return RoundRecord::new(alice, bob, None);
    }
    let joint = JointState::tensor(&transmitted(&alice, config)?, &transmitted(&bob, config)?)?;
    let outcome = sample_outcome(rng, &outcome_distribution(&joint))?;
    RoundRecord::new(alice, bob, Some(outcome))
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// The rounds of one chunk, in order.
pub fn chunk_rounds(
    config: &RunConfig,
    chunk: u64,
) -> impl Iterator<Item = Result<RoundRecord>> + '_ {
    let mut rng = chunk_rng(config.seed, chunk);
    let len = if chunk < config.n_chunks() {
        config.chunk_len(chunk)
    } else {
        0
    };
    (0..len).map(move |_| simulate_round(&mut rng, config))
}

/// Every round of the run, sequentially.
pub fn rounds(config: &RunConfig) -> impl Iterator<Item = Result<RoundRecord>> + '_ {
    (0..config.n_chunks()).flat_map(move |c| chunk_rounds(config, c))
}

fn run_chunk(config: &RunConfig, chunk: u64) -> Result<ProtocolStats> {
    let mut stats = ProtocolStats::for_config(config);
    for round in chunk_rounds(config, chunk) {
        stats.record(&round?)?;
    }
    Ok(stats)
}

/// Runs all rounds, spreading chunks over the rayon thread pool.
pub fn run_protocol(config: &RunConfig) -> Result<ProtocolStats> {
    config.validate()?;
    (0..config.n_chunks())
        .into_par_iter()
        .map(|c| run_chunk(config, c))
        .try_reduce(|| ProtocolStats::for_config(config), |a, b| a.merge(&b))
}

/// Runs with `n_workers` workers, worker `w` taking chunks `w, w + n_workers, …`.
pub fn run_protocol_partitioned(config: &RunConfig, n_workers: usize) -> Result<ProtocolStats> {
    config.validate()?;
    if n_workers == 0 {
        return Err(QkdError::Config("at least one worker required".into()));
    }
    let partials = (0..n_workers as u64)
        .into_par_iter()
        .map(|w| {
            let mut stats = ProtocolStats::for_config(config);
            for chunk in (w..config.n_chunks()).step_by(n_workers) {
                stats = stats.merge(&run_chunk(config, chunk)?)?;
            }
            Ok(stats)
        })
        .collect::<Result<Vec<_>>>()?;
    partials
        .iter()
        .try_fold(ProtocolStats::for_config(config), |acc, s| acc.merge(s))
}

/// Exact expected sifted QBER of one DOF and basis under uniform bits,
/// by enumerating both parties' bits and Charlie's outcome distribution.
pub fn expected_sifted_qber(
    beta: f64,
    theta: f64,
    basis: BasisKind,
    source_model: SourceModel,
    convention: crate::channel::RotationConvention,
) -> Result<f64> {
    use crate::encoding::DofChoice;
    use crate::sifting::bob_correction;
    use crate::state::BellIndex;

    let source = SourceFidelity::new(vec![beta])?;
    let channel = ChannelParams::new(vec![theta], 0.0, 1.0)?.with_convention(convention);
    let send = |bit: u8| -> Result<_> {
        let choice = EncodingChoice::new(vec![DofChoice::new(basis, bit)?])?;
        apply_misalignment(
            &misaligned_state_with(&choice, &source, source_model)?,
            &channel,
        )
    };
    let mut total = 0.0;
    for a in 0..2u8 {
        for b in 0..2u8 {
            let dist = outcome_distribution(&JointState::tensor(&send(a)?, &send(b)?)?);
            let marginal = dist.marginal(DofLabel::new(0))?;
            total += BellIndex::ALL
                .iter()
                .filter(|&&bell| bob_correction(basis, bell).apply(b) != a)
                .map(|bell| marginal[bell.index()])
                .sum::<f64>();
        }
    }
    Ok(total / 4.0)
}
