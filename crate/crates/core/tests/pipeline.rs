//! End-to-end use of the public API: prepare, transmit, measure, sift, rate.

use mdiqkd::channel::{apply_misalignment, survival_probability, theta_from_sin2};
use mdiqkd::encoding::misaligned_state;
use mdiqkd::hbsa::{outcome_distribution, sample_outcome};
use mdiqkd::protocol::{expected_sifted_qber, rounds, run_protocol};
use mdiqkd::rates::{analytic_qber, rate_report};
use mdiqkd::sifting::{estimate_qber, sift_round};
use mdiqkd::state::DofLabel;
use mdiqkd::{
    BasisKind, ChannelParams, EncodingChoice, JointState, ProtocolStats, RotationConvention,
    RoundRecord, RunConfig, SourceFidelity, SourceModel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn noisy(n_rounds: u64, seed: u64) -> RunConfig {
    let theta = theta_from_sin2(0.03).unwrap();
    RunConfig {
        source: SourceFidelity::from_beta_squared(&[0.95, 1.0, 0.9]).unwrap(),
        channel: ChannelParams::new(vec![theta, 0.0, theta], 25.0, 0.2).unwrap(),
        qber_abort_threshold: 0.5,
        ..RunConfig::ideal(3, n_rounds, seed)
    }
}

#[test]
fn hand_rolled_rounds_match_run_protocol_counts() {
    let config = noisy(30_000, 5);
    let records: Vec<RoundRecord> = rounds(&config).collect::<Result<_, _>>().unwrap();
    let mut manual = ProtocolStats::empty(3, config.qber_abort_threshold, config.f_ec);
    for r in &records {
        manual.record(r).unwrap();
    }
    assert_eq!(manual, run_protocol(&config).unwrap());

    let pairs: Vec<_> = records.iter().flat_map(sift_round).collect();
    for k in 0..3 {
        let dof = DofLabel::new(k);
        for basis in BasisKind::ALL {
            assert_eq!(&estimate_qber(&pairs, dof, basis), manual.qber(dof, basis));
        }
    }
}

#[test]
fn loss_matches_channel_survival() {
    let config = noisy(200_000, 9);
    let stats = run_protocol(&config).unwrap();
    let p = survival_probability(&config.channel);
    let n = stats.rounds_total as f64;
    let sigma = (p * (1.0 - p) / n).sqrt();
    let observed = stats.rounds_survived as f64 / n;
    assert!((observed - p).abs() < 4.0 * sigma, "{observed} vs {p}");
}

#[test]
fn per_dof_qber_tracks_analytic_value() {
    let config = noisy(400_000, 21);
    let stats = run_protocol(&config).unwrap();
    for (k, &theta) in config.channel.thetas().iter().enumerate() {
        let dof = DofLabel::new(k);
        let e = analytic_qber(config.source.beta(dof), theta).unwrap();
        for basis in BasisKind::ALL {
            let q = stats.qber(dof, basis);
            let exact = expected_sifted_qber(
                config.source.beta(dof),
                theta,
                basis,
                SourceModel::FrameRotation,
                RotationConvention::RowAction,
            )
            .unwrap();
            assert!((exact - e).abs() < 1e-12);
            let sigma = (e * (1.0 - e) / q.total as f64).sqrt();
            let rate = q.rate().unwrap();
            assert!(
                (rate - e).abs() <= 4.0 * sigma.max(1e-12),
                "DOF {k} {basis}: {rate} vs {e}"
            );
        }
    }
}

#[test]
fn empirical_rate_approaches_analytic_rate() {
    let config = noisy(400_000, 3);
    let stats = run_protocol(&config).unwrap();
    let analytic = rate_report(&config.rate_params().unwrap()).unwrap();
    // the empirical rate counts only rectilinear sifted pairs: a quarter of survivors
    let survival = survival_probability(&config.channel);
    for (k, d) in analytic.per_dof.iter().enumerate() {
        let emp = stats.empirical_key_rate(DofLabel::new(k)).unwrap();
        let expected = 0.25 * survival / analytic.r0 * d.rate.raw;
        assert!(
            (emp.raw - expected).abs() < 0.02,
            "DOF {k}: {} vs {expected}",
            emp.raw
        );
    }
}

#[test]
fn single_round_by_hand() {
    let config = noisy(1, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let alice = EncodingChoice::random(&mut rng, 3);
    let bob = EncodingChoice::random(&mut rng, 3);
    let send = |c: &EncodingChoice| {
        apply_misalignment(
            &misaligned_state(c, &config.source).unwrap(),
            &config.channel,
        )
        .unwrap()
    };
    let joint = JointState::tensor(&send(&alice), &send(&bob)).unwrap();
    assert!((joint.norm_sqr() - 1.0).abs() < 1e-12);
    let outcome = sample_outcome(&mut rng, &outcome_distribution(&joint)).unwrap();
    let record = RoundRecord::new(alice.clone(), bob.clone(), Some(outcome)).unwrap();
    let matching = alice
        .per_dof()
        .iter()
        .zip(bob.per_dof())
        .filter(|(a, b)| a.basis == b.basis)
        .count();
    assert_eq!(sift_round(&record).len(), matching);
}
