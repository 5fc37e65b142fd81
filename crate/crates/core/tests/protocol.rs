use pprank::data::{synth_relevance, ScoreDistribution};
use pprank::fairness::{AttentionModel, RatingScale, RelevanceProfile};
use pprank::mpc::{reveal_to_client, PartyId, SharedVector, TransportMode};
use pprank::pipeline::{
    reconstructed_aggregates, run_centralized, run_sequence, run_unfair, PrivateRun,
};
use pprank::protocol::{
    initialize, ClientSession, ProtocolConfig, RerankSettings, SensitivityMode, Upload,
};
use pprank::solver::ScalingMode;
use pprank::stats::LaplaceAudit;

fn users(l: usize, n: usize, seed: u64) -> Vec<RelevanceProfile> {
    synth_relevance(
        l,
        n,
        seed,
        RatingScale::default(),
        ScoreDistribution::Uniform,
    )
    .unwrap()
    .profiles()
    .unwrap()
}

fn quiet(n: usize, l: usize) -> ProtocolConfig {
    let mut c = ProtocolConfig::new(n, l, 1.0);
    c.noise_enabled = false;
    c.scaling = ScalingMode::None;
    c
}

#[test]
fn initialize_laplace_scale() {
    let mut c = ProtocolConfig::new(100, 3000, 1.0);
    c.sensitivity = SensitivityMode::Unit;
    let pair = initialize(&c, &AttentionModel::geometric(100).unwrap(), 0).unwrap();
    assert!((pair.privacy().scale - 300_000.0).abs() < 1e-6);

    let c = ProtocolConfig::new(20, 200, 1e5);
    let att = AttentionModel::geometric(20).unwrap();
    let pair = initialize(&c, &att, 0).unwrap();
    let expected = pprank::fairness::sensitivity(&att) * 20.0 * 200.0 / 1e5;
    assert!((pair.privacy().scale - expected).abs() < 1e-12);
    assert!((pair.privacy().scale - 0.04).abs() < 1e-6);
}

#[test]
fn initial_aggregates_are_zero() {
    let c = ProtocolConfig::new(6, 4, 1.0);
    let pair = initialize(&c, &AttentionModel::geometric(6).unwrap(), 3).unwrap();
    let (a, r) = reconstructed_aggregates(&pair, &c).unwrap();
    assert_eq!(a, vec![0.0; 6]);
    assert_eq!(r, vec![0.0; 6]);
}

#[test]
fn aggregates_track_plaintext_sums() {
    let (n, l) = (20, 200);
    let c = ProtocolConfig::new(n, l, 10.0);
    let us = users(l, n, 5);
    let mut run = PrivateRun::new(&c, 8).unwrap();
    let att = AttentionModel::geometric(n).unwrap();
    let mut a_plain = vec![0.0; n];
    let mut r_plain = vec![0.0; n];
    let tol = (l * n) as f64 * c.codec.resolution();
    for (i, p) in us.iter().enumerate() {
        let rec = run.serve_user(p).unwrap();
        for (pos, &item) in rec.order.iter().enumerate() {
            a_plain[item] += att.weights()[pos];
        }
        for (x, y) in r_plain.iter_mut().zip(p.normalized()) {
            *x += y;
        }
        if i % 50 == 49 || i < 2 {
            let (a, r) = reconstructed_aggregates(run.servers(), &c).unwrap();
            for j in 0..n {
                assert!((a[j] - a_plain[j]).abs() <= tol);
                assert!((r[j] - r_plain[j]).abs() <= tol);
            }
        }
    }
    assert_eq!(run.servers().server(PartyId::Zero).users_served(), l);
}

#[test]
fn zero_upload_leaves_aggregates_unchanged() {
    let c = ProtocolConfig::new(3, 2, 1.0);
    let mut pair = initialize(&c, &AttentionModel::geometric(3).unwrap(), 1).unwrap();
    let zero = |p| Upload {
        attention: SharedVector::zeros(p, 3),
        relevance: SharedVector::zeros(p, 3),
    };
    pair.update_aggregation(&[zero(PartyId::Zero), zero(PartyId::One)])
        .unwrap();
    let (a, r) = reconstructed_aggregates(&pair, &c).unwrap();
    assert_eq!((a, r), (vec![0.0; 3], vec![0.0; 3]));
    assert_eq!(pair.server(PartyId::One).users_served(), 1);
}

#[test]
fn malformed_uploads_are_rejected_without_side_effects() {
    let c = ProtocolConfig::new(3, 1, 1.0);
    let mut pair = initialize(&c, &AttentionModel::geometric(3).unwrap(), 1).unwrap();
    let up = |p, n| Upload {
        attention: SharedVector::zeros(p, n),
        relevance: SharedVector::zeros(p, n),
    };
    assert!(pair
        .update_aggregation(&[up(PartyId::Zero, 3), up(PartyId::One, 2)])
        .is_err());
    assert!(pair
        .update_aggregation(&[up(PartyId::One, 3), up(PartyId::Zero, 3)])
        .is_err());
    assert_eq!(pair.server(PartyId::Zero).users_served(), 0);
    pair.update_aggregation(&[up(PartyId::Zero, 3), up(PartyId::One, 3)])
        .unwrap();
    // L = 1: a second user is over budget.
    assert!(pair
        .update_aggregation(&[up(PartyId::Zero, 3), up(PartyId::One, 3)])
        .is_err());
}

#[test]
fn two_item_client_session() {
    let c = quiet(2, 1);
    let att = AttentionModel::geometric(2).unwrap();
    let mut pair = initialize(&c, &att, 0).unwrap();
    let profile = RelevanceProfile::new(vec![5.0, 2.0], RatingScale::default()).unwrap();
    let mut client = ClientSession::new(0, profile, 11);
    let (x0, x1) = pair.get_unfairness_metric().unwrap();
    let settings = RerankSettings::from(&c);
    let out = client
        .client_rerank((&x0, &x1), att.weights(), &settings, &c.codec)
        .unwrap();
    assert_eq!(out.reranking.order(), &[0, 1]);
    let [u0, u1] = &out.uploads;
    let w = reveal_to_client(&u0.attention, &u1.attention, &c.codec).unwrap();
    let r = reveal_to_client(&u0.relevance, &u1.relevance, &c.codec).unwrap();
    let eps = c.codec.resolution();
    assert!((w[0] - 2.0 / 3.0).abs() <= eps && (w[1] - 1.0 / 3.0).abs() <= eps);
    assert!((r[0] - 0.8).abs() <= eps && (r[1] - 0.2).abs() <= eps);
    // One upload per session.
    assert!(client
        .client_rerank((&x0, &x1), att.weights(), &settings, &c.codec)
        .is_err());
    pair.update_aggregation(&out.uploads).unwrap();
    let (a, _) = reconstructed_aggregates(&pair, &c).unwrap();
    assert!((a[0] - 2.0 / 3.0).abs() <= eps);
}

#[test]
fn aggregates_after_two_users_sum_their_attention() {
    let c = quiet(4, 2);
    let us = users(2, 4, 2);
    let att = AttentionModel::geometric(4).unwrap();
    let mut run = PrivateRun::new(&c, 1).unwrap();
    let r1 = run.serve_user(&us[0]).unwrap();
    let r2 = run.serve_user(&us[1]).unwrap();
    let mut expect = vec![0.0; 4];
    for rec in [&r1, &r2] {
        for (pos, &item) in rec.order.iter().enumerate() {
            expect[item] += att.weights()[pos];
        }
    }
    let (a, _) = reconstructed_aggregates(run.servers(), &c).unwrap();
    for (x, y) in a.iter().zip(&expect) {
        assert!((x - y).abs() <= 2.0 * c.codec.resolution());
    }
}

#[test]
fn each_release_draws_fresh_noise() {
    let c = ProtocolConfig::new(5, 10, 1.0);
    let mut pair = initialize(&c, &AttentionModel::geometric(5).unwrap(), 4).unwrap();
    let (a0, a1) = pair.get_unfairness_metric().unwrap();
    let (b0, b1) = pair.get_unfairness_metric().unwrap();
    let a = reveal_to_client(&a0, &a1, &c.codec).unwrap();
    let b = reveal_to_client(&b0, &b1, &c.codec).unwrap();
    assert_ne!(a, b);
    assert_eq!(pair.server(PartyId::Zero).noise_draws(), 10);
}

#[test]
fn released_noise_is_laplace() {
    // n = 1 has sensitivity 1, so b = L / epsilon = 1.
    let c = ProtocolConfig::new(1, 10_000, 10_000.0);
    let mut pair = initialize(&c, &AttentionModel::geometric(1).unwrap(), 77).unwrap();
    assert!((pair.privacy().scale - 1.0).abs() < 1e-12);
    let xs: Vec<f64> = (0..10_000)
        .map(|_| {
            let (s0, s1) = pair.get_unfairness_metric().unwrap();
            reveal_to_client(&s0, &s1, &c.codec).unwrap()[0]
        })
        .collect();
    let audit = LaplaceAudit::new(&xs, 1.0);
    assert!(audit.ks_passes(), "{audit:?}");
    assert!(audit.variance_rel_error() < 0.1, "{audit:?}");
}

#[test]
fn budget_accounting() {
    let (n, l) = (6, 15);
    let c = ProtocolConfig::new(n, l, 3.0);
    let out = run_sequence(&users(l, n, 9), &c, 2).unwrap();
    assert_eq!(out.noise_draws, (n * l) as u64);
    let pair = initialize(&c, &AttentionModel::geometric(n).unwrap(), 0).unwrap();
    let spent = pair.privacy().per_query_epsilon() * out.noise_draws as f64;
    assert!((spent - 3.0).abs() < 1e-12);
}

#[test]
fn runs_are_deterministic() {
    let c = ProtocolConfig::new(8, 30, 10.0);
    let us = users(30, 8, 1);
    let a = run_sequence(&us, &c, 42).unwrap();
    let b = run_sequence(&us, &c, 42).unwrap();
    assert!(a.same_results(&b));
    let d = run_sequence(&us, &c, 43).unwrap();
    assert!(!a.same_results(&d));
}

#[test]
fn noiseless_private_matches_centralized() {
    let (n, l) = (10, 60);
    let us = users(l, n, 3);
    let att = AttentionModel::geometric(n).unwrap();
    let private = run_sequence(&us, &quiet(n, l), 5).unwrap();
    let central = run_centralized(&us, &att, n, 0.8).unwrap();
    assert_eq!(private.orders, central.orders);
    assert!((private.unfairness - central.unfairness).abs() < 1e-6);
}

#[test]
fn single_user_unfairness() {
    let c = quiet(5, 1);
    let us = users(1, 5, 6);
    let out = run_sequence(&us, &c, 0).unwrap();
    let att = AttentionModel::geometric(5).unwrap();
    let order = out.orders[0].clone().unwrap();
    let mut w = [0.0; 5];
    for (pos, &item) in order.iter().enumerate() {
        w[item] = att.weights()[pos];
    }
    let expected: f64 = w
        .iter()
        .zip(us[0].normalized())
        .map(|(a, r)| (a - r).abs())
        .sum();
    assert!((out.unfairness - expected).abs() < 1e-12);
}

#[test]
fn quality_floor_holds_under_noise() {
    let (n, l) = (12, 40);
    let us = users(l, n, 12);
    for eps in [0.5, 100.0, 1e5] {
        let c = ProtocolConfig::new(n, l, eps);
        let out = run_sequence(&us, &c, 1).unwrap();
        assert_eq!(out.aborts, 0);
        assert!(out
            .ndcg
            .iter()
            .all(|&x| (0.8 - 1e-9..=1.0 + 1e-12).contains(&x)));
    }
}

#[test]
fn high_budget_beats_no_fairness() {
    let (n, l) = (20, 200);
    let us = users(l, n, 21);
    let att = AttentionModel::geometric(n).unwrap();
    let mut c = ProtocolConfig::new(n, l, 1e5);
    c.scaling = ScalingMode::None;
    let private = run_sequence(&us, &c, 3).unwrap();
    let none = run_unfair(&us, &att).unwrap();
    assert!(private.unfairness <= none.unfairness);
}

#[test]
fn wrong_user_count_is_a_config_error() {
    let c = ProtocolConfig::new(4, 3, 1.0);
    assert!(run_sequence(&users(2, 4, 0), &c, 0).is_err());
}

#[test]
fn malformed_profile_aborts_only_that_user() {
    let c = ProtocolConfig::new(4, 3, 1.0);
    let mut run = PrivateRun::new(&c, 0).unwrap();
    let good = users(2, 4, 0);
    let bad = RelevanceProfile::new(vec![1.0, 2.0], RatingScale::default()).unwrap();
    run.serve_user(&good[0]).unwrap();
    assert!(run.serve_user(&bad).is_err());
    run.serve_user(&good[1]).unwrap();
    let out = run.finish().unwrap();
    assert_eq!(out.aborts, 1);
    assert_eq!(out.ndcg.len(), 2);
    assert!(out.orders[1].is_none());
}

#[test]
fn tcp_transport_gives_same_results() {
    let (n, l) = (6, 12);
    let us = users(l, n, 4);
    let mut c = ProtocolConfig::new(n, l, 5.0);
    let inproc = run_sequence(&us, &c, 8).unwrap();
    c.transport = TransportMode::Tcp;
    let tcp = run_sequence(&us, &c, 8).unwrap();
    assert!(inproc.same_results(&tcp));
}
