use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use cesa_core::crypto::{
    derive_shared_secret, gen_keypair, DhParams, ModelVector, PrgSeed, RingModulus,
};
use cesa_core::secagg::{
    envelope_seed, local_round, open, pairwise_mask, seal, SecAggClient, SecAggError, SecAggServer,
    ShareBundle,
};
use cesa_core::simnet::{
    count_messages, run_session, MessageFilter, Protocol, SessionConfig, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Coordinate-wise sum mod 2^bits in u128, independent of the ring code.
fn oracle_sum(models: &[ModelVector], members: impl Iterator<Item = usize>, bits: u32) -> Vec<u64> {
    let len = models[0].len();
    let mut acc = vec![0u128; len];
    for i in members {
        for (a, &x) in acc.iter_mut().zip(models[i].elems()) {
            *a += u128::from(x);
        }
    }
    let mask = (1u128 << bits) - 1;
    acc.into_iter().map(|a| (a & mask) as u64).collect()
}

fn random_models(rng: &mut ChaCha20Rng, n: usize, len: usize, m: RingModulus) -> Vec<ModelVector> {
    (0..n)
        .map(|_| ModelVector::new(m, (0..len).map(|_| rng.random()).collect()))
        .collect()
}

#[test]
fn seven_clients_sum_exactly() {
    let m = RingModulus::new(16).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let models = random_models(&mut rng, 7, 16, m);
    let agg = local_round(
        Arc::new(DhParams::toy()),
        m,
        &models,
        &BTreeSet::new(),
        true,
        &mut rng,
    )
    .unwrap();
    assert_eq!(agg.elems(), oracle_sum(&models, 0..7, 16).as_slice());
}

#[test]
fn two_clients_five_plus_seven() {
    let m = RingModulus::new(16).unwrap();
    let models = vec![ModelVector::new(m, vec![5]), ModelVector::new(m, vec![7])];
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let agg = local_round(
        Arc::new(DhParams::toy()),
        m,
        &models,
        &BTreeSet::new(),
        true,
        &mut rng,
    )
    .unwrap();
    assert_eq!(agg.elems(), &[12]);
}

#[test]
fn sums_wrap_around_the_ring() {
    let m = RingModulus::new(8).unwrap();
    let models = vec![
        ModelVector::new(m, vec![200, 1]),
        ModelVector::new(m, vec![100, 255]),
    ];
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let agg = local_round(
        Arc::new(DhParams::toy()),
        m,
        &models,
        &BTreeSet::new(),
        true,
        &mut rng,
    )
    .unwrap();
    assert_eq!(agg.elems(), &[44, 0]);
}

#[test]
fn single_dropout_recovered_to_survivor_sum() {
    let m = RingModulus::new(32).unwrap();
    for n in [3usize, 5, 8] {
        for k in 0..n {
            let mut rng = ChaCha20Rng::seed_from_u64((n * 100 + k) as u64);
            let models = random_models(&mut rng, n, 6, m);
            let dropped = BTreeSet::from([k]);
            let agg = local_round(
                Arc::new(DhParams::toy()),
                m,
                &models,
                &dropped,
                true,
                &mut rng,
            )
            .unwrap();
            let survivors = (0..n).filter(|&i| i != k);
            assert_eq!(
                agg.elems(),
                oracle_sum(&models, survivors, 32).as_slice(),
                "n={n} k={k}"
            );
        }
    }
}

#[test]
fn dropout_without_recovery_leaves_masks_in() {
    let m = RingModulus::WORD;
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let models = random_models(&mut rng, 5, 8, m);
    let dropped = BTreeSet::from([2]);
    let agg = local_round(
        Arc::new(DhParams::modp2048()),
        m,
        &models,
        &dropped,
        false,
        &mut rng,
    )
    .unwrap();
    let survivors = (0..5).filter(|&i| i != 2);
    assert_ne!(agg.elems(), oracle_sum(&models, survivors, 64).as_slice());
}

#[test]
fn two_dropouts_are_unrecoverable() {
    let m = RingModulus::WORD;
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let models = random_models(&mut rng, 6, 4, m);
    let dropped = BTreeSet::from([1, 4]);
    let err = local_round(
        Arc::new(DhParams::toy()),
        m,
        &models,
        &dropped,
        true,
        &mut rng,
    )
    .unwrap_err();
    assert!(
        matches!(err, SecAggError::UnrecoverableDropout(_)),
        "{err:?}"
    );
}

#[test]
fn envelope_under_wrong_key_is_rejected() {
    let params = DhParams::modp2048();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let a = gen_keypair(&params, &mut rng);
    let b = gen_keypair(&params, &mut rng);
    let eve = gen_keypair(&params, &mut rng);
    let bundle = ShareBundle {
        origin: 0,
        recipient: 1,
        b_share: 99,
        sk_share: 12345u32.into(),
    };
    let seed = envelope_seed(&params, a.private(), b.public(), 1, 0, 1).unwrap();
    let ct = seal(&bundle, 1, seed, &params);
    let back = envelope_seed(&params, b.private(), a.public(), 1, 0, 1).unwrap();
    assert_eq!(open(&ct, back, &params).unwrap(), bundle);
    let wrong = envelope_seed(&params, eve.private(), a.public(), 1, 0, 1).unwrap();
    assert!(matches!(
        open(&ct, wrong, &params),
        Err(SecAggError::HeaderMismatch {
            origin: 0,
            recipient: 1
        })
    ));
    assert!(open(&ct, PrgSeed(0), &params).is_err());
}

#[test]
fn routing_moves_every_envelope_once() {
    let mut config = SessionConfig::new(Protocol::SecAgg, 7, 1);
    config.model_len = 4;
    let run = run_session(&config).unwrap();
    let count = |step: &str| count_messages(&run.ledger, &MessageFilter::default().with_step(step));
    let up = count("secagg.step4");
    let down = count("secagg.step5");
    assert_eq!(up.messages, 42);
    assert_eq!(down.messages, 42);
    assert_eq!(up.bytes, down.bytes);
    assert_eq!(run.report.verdict(1), Some(Verdict::Correct));
}

#[test]
fn pairwise_masks_agree_across_the_pair() {
    let params = DhParams::toy();
    let m = RingModulus::WORD;
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    for _ in 0..50 {
        let a = gen_keypair(&params, &mut rng);
        let b = gen_keypair(&params, &mut rng);
        let s_ab = derive_shared_secret(&params, a.private(), b.public()).unwrap();
        let s_ba = derive_shared_secret(&params, b.private(), a.public()).unwrap();
        assert_eq!(
            pairwise_mask(&s_ab, (2, 5), 8, m),
            pairwise_mask(&s_ba, (5, 2), 8, m)
        );
        assert_ne!(
            pairwise_mask(&s_ab, (2, 5), 8, m),
            pairwise_mask(&s_ab, (2, 6), 8, m)
        );
    }
}

#[test]
fn server_rejects_out_of_order_and_duplicates() {
    let params = Arc::new(DhParams::toy());
    let m = RingModulus::WORD;
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let mut server = SecAggServer::new(Arc::clone(&params), m, 1, true);
    let all: BTreeSet<usize> = (0..3).collect();
    server.begin_round(1, all.clone());
    assert!(server.fix_survivors().is_err());
    let mut clients: Vec<_> = (0..3)
        .map(|i| SecAggClient::new(i, Arc::clone(&params), m))
        .collect();
    assert!(clients[0].compute_masked_model(&all).is_err());
    for (i, c) in clients.iter_mut().enumerate() {
        let keys = c.begin_round(1, ModelVector::new(m, vec![i as u64]), &mut rng);
        server.receive_public_keys(i, keys).unwrap();
    }
    let dir: BTreeMap<_, _> = server.key_directory().clone();
    for c in &mut clients {
        c.receive_public_keys(&dir).unwrap();
    }
    let e0 = clients[0].build_share_envelopes(&all, &mut rng).unwrap();
    assert_eq!(e0.len(), 2);
    server.receive_envelopes(0, e0.clone()).unwrap();
    assert!(matches!(
        server.receive_envelopes(0, e0.clone()),
        Err(SecAggError::DuplicateEnvelope { origin: 0, .. })
    ));
    assert!(matches!(
        server.receive_envelopes(1, e0),
        Err(SecAggError::MisaddressedEnvelope { .. })
    ));
    assert!(matches!(
        server.receive_envelopes(9, vec![]),
        Err(SecAggError::UnknownClient(9)) | Err(SecAggError::NotParticipant(9))
    ));
}
