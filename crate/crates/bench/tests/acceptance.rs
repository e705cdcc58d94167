//! Acceptance checks. Prints one `criterion N ...: PASS|FAIL` line per
//! criterion and exits nonzero if any fails. Runs without the libtest
//! harness so the lines always reach the output.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use cesa_bench::{run_bench, BenchSpec};
use cesa_core::cesa::{
    self, cesa_aggregate, fp_index, sp_index, valid_offsets, CesaClient, CesaSessionParams,
};
use cesa_core::crypto::{
    derive_shared_secret, gen_keypair, DhParams, KeyPair, ModelVector, RingModulus,
};
use cesa_core::secagg;
use cesa_core::simnet::{run_session, Protocol, SessionConfig, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn verdict(n: u32, name: &str, start: Instant, outcome: Result<String, String>) -> bool {
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("criterion {n} {name}: PASS ({detail}; {secs:.1}s)");
            true
        }
        Err(detail) => {
            println!("criterion {n} {name}: FAIL ({detail}; {secs:.1}s)");
            false
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Coordinate-wise sum mod 2^bits in u128.
fn oracle_sum(models: &[ModelVector], members: impl Iterator<Item = usize>, bits: u32) -> Vec<u64> {
    let mut acc = vec![0u128; models[0].len()];
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

fn modpow_u128(base: u128, mut exp: u128, p: u128) -> u128 {
    let (mut acc, mut b) = (1u128, base % p);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        exp >>= 1;
    }
    acc
}

fn criterion_1_cesa_closed_form_counts() -> bool {
    let start = Instant::now();
    let outcome = (|| {
        let n = 100u64;
        for clients in [7usize, 10, 20, 50, 100] {
            let mut c = SessionConfig::new(Protocol::Cesa, clients, n);
            c.model_len = 1;
            let r = run_session(&c).map_err(|e| e.to_string())?.report;
            let (up, down) = (r.client_to_server.messages, r.server_to_client.messages);
            check(up == (n + 1) * clients as u64, || {
                format!("|C|={clients}: {up} client->server")
            })?;
            check(down == n + 1, || {
                format!("|C|={clients}: {down} server->client")
            })?;
            check(r.all_correct(), || {
                format!("|C|={clients}: a round was not correct")
            })?;
        }
        Ok("n=100, |C| in {7,10,20,50,100}: (n+1)|C| up, n+1 down".to_string())
    })();
    verdict(1, "cesa closed-form counts", start, outcome)
}

fn criterion_2_server_traffic_shape() -> bool {
    let start = Instant::now();
    let outcome = (|| {
        let spec = BenchSpec {
            protocols: vec![Protocol::SecAgg, Protocol::Cesa],
            clients: vec![8, 16, 32, 64],
            rounds: 100,
            model_len: 1,
            ..BenchSpec::default()
        };
        let rows = run_bench(&spec).map_err(|e| e.to_string())?;
        let down = |p: Protocol| -> Vec<u64> {
            rows.iter()
                .filter(|r| r.protocol == p)
                .map(|r| r.server_to_client_msgs)
                .collect()
        };
        let (sa, ce) = (down(Protocol::SecAgg), down(Protocol::Cesa));
        check(ce.iter().all(|&c| c == 101), || {
            format!("cesa server counts {ce:?}")
        })?;
        let ratios: Vec<f64> = sa.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
        check(ratios.iter().all(|&r| r > 2.0), || {
            format!("secagg ratios {ratios:?}")
        })?;
        check(rows.iter().all(|r| r.all_correct), || {
            "a round was not correct".into()
        })?;
        Ok(format!(
            "n=100, secagg server {sa:?} ratios {:.2?}, cesa server {ce:?}",
            ratios
        ))
    })();
    verdict(2, "server traffic shape", start, outcome)
}

fn criterion_3_cesa_aggregation_randomized() -> bool {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha20Rng::seed_from_u64(0xC3);
        let dh = Arc::new(DhParams::toy());
        let mut rounds_checked = 0;
        for cfg in 0..200 {
            let n = rng.random_range(7..=64);
            let k = cesa::draw_offset(n, &mut rng).map_err(|e| e.to_string())?;
            let len = rng.random_range(1..=256);
            let bits = rng.random_range(1..=64);
            let m = RingModulus::new(bits).map_err(|e| e.to_string())?;
            let rounds = rng.random_range(1..=3);
            let session = CesaSessionParams::new(n, k, Arc::clone(&dh), len, m, rounds)
                .map_err(|e| e.to_string())?;
            let mut clients = (0..n)
                .map(|i| CesaClient::new(i, session.clone(), &mut rng))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            let dir: BTreeMap<_, _> = clients
                .iter()
                .map(|c| (c.index(), c.public_key().clone()))
                .collect();
            for c in &mut clients {
                c.receive_directory(&dir);
                c.derive_pair_masks().map_err(|e| e.to_string())?;
            }
            for round in 1..=rounds {
                let models = random_models(&mut rng, n, len, m);
                let masked: BTreeMap<_, _> = clients
                    .iter()
                    .map(|c| c.mask_model(&models[c.index()]).map(|v| (c.index(), v)))
                    .collect::<Result<_, _>>()
                    .map_err(|e| e.to_string())?;
                let agg = cesa_aggregate(&masked, n, m, len).map_err(|e| e.to_string())?;
                check(agg.elems() == oracle_sum(&models, 0..n, bits), || {
                    format!("config {cfg} (|C|={n}, offset={k}, L={len}, R=2^{bits}) round {round}")
                })?;
                rounds_checked += 1;
            }
        }
        Ok(format!("200 configurations, {rounds_checked} rounds exact"))
    })();
    verdict(3, "cesa aggregation vs oracle", start, outcome)
}

fn criterion_4_secagg_aggregation_randomized() -> bool {
    let start = Instant::now();
    let outcome = (|| {
        let mut rng = ChaCha20Rng::seed_from_u64(0x5A);
        let dh = Arc::new(DhParams::toy());
        let configs = 100;
        for cfg in 0..configs {
            let n = rng.random_range(2..=32);
            let len = rng.random_range(1..=256);
            let bits = rng.random_range(1..=64);
            let m = RingModulus::new(bits).map_err(|e| e.to_string())?;
            let models = random_models(&mut rng, n, len, m);
            let agg = secagg::local_round(
                Arc::clone(&dh),
                m,
                &models,
                &BTreeSet::new(),
                true,
                &mut rng,
            )
            .map_err(|e| format!("config {cfg}: {e}"))?;
            check(agg.elems() == oracle_sum(&models, 0..n, bits), || {
                format!("config {cfg} (|C|={n}, L={len}, R=2^{bits}) no dropout")
            })?;

            let k = rng.random_range(0..n);
            let models = random_models(&mut rng, n, len, m);
            let agg = secagg::local_round(
                Arc::clone(&dh),
                m,
                &models,
                &BTreeSet::from([k]),
                true,
                &mut rng,
            )
            .map_err(|e| format!("config {cfg} dropout: {e}"))?;
            check(
                agg.elems() == oracle_sum(&models, (0..n).filter(|&i| i != k), bits),
                || format!("config {cfg} (|C|={n}, L={len}, R=2^{bits}) client {k} dropped"),
            )?;
        }
        Ok(format!(
            "{configs} configurations, each without and with one recovered dropout"
        ))
    })();
    verdict(4, "secagg aggregation vs oracle", start, outcome)
}

fn criterion_5_mask_cancellation() -> bool {
    let start = Instant::now();
    let outcome = (|| {
        let m = RingModulus::WORD;
        let dh = Arc::new(DhParams::toy());
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut cases = 0;
        for n in 7..=32 {
            for k in valid_offsets(n) {
                let session = CesaSessionParams::new(n, k, Arc::clone(&dh), 8, m, 1)
                    .map_err(|e| e.to_string())?;
                let mut clients = (0..n)
                    .map(|i| CesaClient::new(i, session.clone(), &mut rng))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| e.to_string())?;
                let dir: BTreeMap<_, _> = clients
                    .iter()
                    .map(|c| (c.index(), c.public_key().clone()))
                    .collect();
                let mut acc = vec![0u64; 8];
                for c in &mut clients {
                    c.receive_directory(&dir);
                    let (a, b) = c.derive_pair_masks().map_err(|e| e.to_string())?;
                    for (s, (&x, &y)) in acc.iter_mut().zip(a.elems().iter().zip(b.elems())) {
                        *s = s.wrapping_add(x).wrapping_add(y);
                    }
                }
                check(acc.iter().all(|&x| x == 0), || {
                    format!("|C|={n} offset={k}: {acc:?}")
                })?;
                cases += 1;
            }
        }
        Ok(format!("{cases} (|C|, offset) cases, |C| in 7..=32"))
    })();
    verdict(5, "mask cancellation", start, outcome)
}

fn criterion_6_pair_graph() -> bool {
    let start = Instant::now();
    let outcome = (|| {
        let mut cases = 0;
        for n in 7..=64 {
            for k in valid_offsets(n) {
                for i in 0..n {
                    let (f, s) = (fp_index(i, k, n), sp_index(i, k, n));
                    check(f == (i + k) % n && s == (i + n - k) % n, || {
                        format!("|C|={n} k={k} i={i}: formula")
                    })?;
                    check(sp_index(f, k, n) == i, || {
                        format!("|C|={n} k={k} i={i}: sp(fp(i))")
                    })?;
                    check(fp_index(s, k, n) == i, || {
                        format!("|C|={n} k={k} i={i}: fp(sp(i))")
                    })?;
                    check(i != f && i != s && f != s, || {
                        format!("|C|={n} k={k} i={i}: not distinct")
                    })?;
                }
                cases += 1;
            }
        }
        Ok(format!("{cases} (|C|, offset) cases, |C| in 7..=64"))
    })();
    verdict(6, "pair graph", start, outcome)
}

fn criterion_7_key_agreement_symmetry() -> bool {
    let start = Instant::now();
    let outcome = (|| {
        let toy = DhParams::toy();
        let a = KeyPair::from_private(&toy, 6u32.into()).map_err(|e| e.to_string())?;
        let b = KeyPair::from_private(&toy, 15u32.into()).map_err(|e| e.to_string())?;
        let s = derive_shared_secret(&toy, a.private(), b.public()).map_err(|e| e.to_string())?;
        let oracle = modpow_u128(modpow_u128(5, 15, 23), 6, 23);
        check(oracle == 2, || format!("oracle gave {oracle}"))?;
        check(s.value().to_string() == oracle.to_string(), || {
            format!("library gave {}", s.value())
        })?;

        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for (name, params) in [("toy", toy), ("modp2048", DhParams::modp2048())] {
            for draw in 0..1000 {
                let a = gen_keypair(&params, &mut rng);
                let b = gen_keypair(&params, &mut rng);
                let ab = derive_shared_secret(&params, a.private(), b.public())
                    .map_err(|e| e.to_string())?;
                let ba = derive_shared_secret(&params, b.private(), a.public())
                    .map_err(|e| e.to_string())?;
                check(ab == ba, || format!("{name} draw {draw}: secrets differ"))?;
            }
        }
        Ok("1000 draws each for toy and modp2048; 23/5/6/15 -> 2".to_string())
    })();
    verdict(7, "key agreement symmetry", start, outcome)
}

fn criterion_8_bench_determinism() -> bool {
    let start = Instant::now();
    let outcome = (|| {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for i in 0..2 {
            let path = dir.path().join(format!("run{i}.csv"));
            let status = Command::new(env!("CARGO_BIN_EXE_cesa-bench"))
                .args([
                    "bench",
                    "--protocols",
                    "secagg,cesa,plain",
                    "--clients",
                    "7,12,16",
                    "--rounds",
                    "5",
                ])
                .args(["--seed", "2024", "--mode", "bytes", "--out"])
                .arg(&path)
                .output()
                .map_err(|e| e.to_string())?
                .status;
            check(status.success(), || format!("run {i} exited with {status}"))?;
            outputs.push(fs::read(&path).map_err(|e| e.to_string())?);
        }
        check(outputs[0] == outputs[1], || "CSV files differ".into())?;
        Ok(format!("two runs, {} identical bytes", outputs[0].len()))
    })();
    verdict(8, "bench determinism", start, outcome)
}

fn criterion_9_cesa_dropout_sensitivity() -> bool {
    let start = Instant::now();
    let outcome = (|| {
        let mut c = SessionConfig::new(Protocol::Cesa, 10, 1);
        c.dropouts.insert((1, 4));
        c.cesa_force = true;
        let r = run_session(&c).map_err(|e| e.to_string())?.report;
        check(r.verdict(1) == Some(Verdict::Incorrect), || {
            format!("session verdict {:?}", r.verdict(1))
        })?;

        let m = RingModulus::WORD;
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let models = random_models(&mut rng, 10, 16, m);
        let session = CesaSessionParams::new(10, 3, Arc::new(DhParams::toy()), 16, m, 1)
            .map_err(|e| e.to_string())?;
        let forced = cesa::local_round(&session, &models, &BTreeSet::from([4]), true, &mut rng)
            .map_err(|e| e.to_string())?;
        let survivors = oracle_sum(&models, (0..10).filter(|&i| i != 4), 64);
        check(forced.elems() != survivors.as_slice(), || {
            "forced aggregate equals survivor sum".into()
        })?;
        Ok("forced round with one dropout: aggregate != survivor sum".to_string())
    })();
    verdict(9, "cesa dropout sensitivity", start, outcome)
}

fn main() -> ExitCode {
    let criteria: [fn() -> bool; 9] = [
        criterion_1_cesa_closed_form_counts,
        criterion_2_server_traffic_shape,
        criterion_3_cesa_aggregation_randomized,
        criterion_4_secagg_aggregation_randomized,
        criterion_5_mask_cancellation,
        criterion_6_pair_graph,
        criterion_7_key_agreement_symmetry,
        criterion_8_bench_determinism,
        criterion_9_cesa_dropout_sensitivity,
    ];
    let passed = criteria.iter().filter(|c| c()).count();
    println!("acceptance: {passed} of {} criteria passed", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
