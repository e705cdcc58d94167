use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use cesa_core::cesa::{
    self, fp_index, sp_index, valid_offsets, CesaClient, CesaSessionParams, MIN_CLIENTS,
};
use cesa_core::crypto::{
    derive_shared_secret, gen_keypair, DhParams, KeyPair, ModelVector, RingModulus,
};
use cesa_core::secagg;
use cesa_core::simnet::{run_session, Protocol, SessionConfig, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::BenchError;

pub const DEFAULT_VERIFY_SIZES: [usize; 3] = [7, 10, 16];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{} {:<28} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        let _ = writeln!(
            out,
            "{} of {} properties passed",
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len()
        );
        out
    }

    fn record(&mut self, name: &'static str, outcome: Result<String, String>) {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(Check {
            name,
            passed,
            detail,
        });
    }
}

fn oracle_sum(models: &[ModelVector], members: impl Iterator<Item = usize>, bits: u32) -> Vec<u64> {
    let mut acc = vec![0u128; models.first().map_or(0, ModelVector::len)];
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

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dh_symmetry(rng: &mut ChaCha20Rng) -> Result<String, String> {
    let toy = DhParams::toy();
    let a = KeyPair::from_private(&toy, 6u32.into()).map_err(|e| e.to_string())?;
    let b = KeyPair::from_private(&toy, 15u32.into()).map_err(|e| e.to_string())?;
    let s = derive_shared_secret(&toy, a.private(), b.public()).map_err(|e| e.to_string())?;
    ensure(s.value() == &2u32.into(), || {
        format!("23/5 example gave {}", s.value())
    })?;
    for (params, draws) in [(toy, 200), (DhParams::modp2048(), 8)] {
        for _ in 0..draws {
            let a = gen_keypair(&params, rng);
            let b = gen_keypair(&params, rng);
            let ab = derive_shared_secret(&params, a.private(), b.public())
                .map_err(|e| e.to_string())?;
            let ba = derive_shared_secret(&params, b.private(), a.public())
                .map_err(|e| e.to_string())?;
            ensure(ab == ba, || {
                format!("asymmetric secret for p of {} bits", params.p().bits())
            })?;
        }
    }
    Ok("toy x200, 2048-bit x8, 23/5/6/15 -> 2".into())
}

fn pair_graph(sizes: &[usize]) -> Result<String, String> {
    let mut cases = 0;
    for &n in sizes {
        for k in valid_offsets(n) {
            for i in 0..n {
                let (f, s) = (fp_index(i, k, n), sp_index(i, k, n));
                ensure(sp_index(f, k, n) == i && fp_index(s, k, n) == i, || {
                    format!("|C|={n} offset={k} i={i}: roles do not invert")
                })?;
                ensure(i != f && i != s && f != s, || {
                    format!("|C|={n} offset={k} i={i}: repeated index")
                })?;
            }
            cases += 1;
        }
    }
    Ok(format!("{cases} (|C|, offset) cases"))
}

fn mask_cancellation(sizes: &[usize], rng: &mut ChaCha20Rng) -> Result<String, String> {
    let m = RingModulus::WORD;
    let dh = Arc::new(DhParams::toy());
    let mut cases = 0;
    for &n in sizes {
        for k in valid_offsets(n) {
            let session = CesaSessionParams::new(n, k, Arc::clone(&dh), 4, m, 1)
                .map_err(|e| e.to_string())?;
            let mut clients = (0..n)
                .map(|i| CesaClient::new(i, session.clone(), rng))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            let dir: BTreeMap<_, _> = clients
                .iter()
                .map(|c| (c.index(), c.public_key().clone()))
                .collect();
            let mut total = ModelVector::zeros(m, 4);
            for c in &mut clients {
                c.receive_directory(&dir);
                let (a, b) = c.derive_pair_masks().map_err(|e| e.to_string())?;
                total
                    .add_assign(a)
                    .and_then(|_| total.add_assign(b))
                    .map_err(|e| e.to_string())?;
            }
            ensure(total.is_zero(), || {
                format!("|C|={n} offset={k}: masks sum to {:?}", total.elems())
            })?;
            cases += 1;
        }
    }
    Ok(format!("{cases} (|C|, offset) cases"))
}

fn cesa_aggregation(sizes: &[usize], rng: &mut ChaCha20Rng) -> Result<String, String> {
    let dh = Arc::new(DhParams::toy());
    for &n in sizes {
        let bits = rng.random_range(1..=64);
        let m = RingModulus::new(bits).map_err(|e| e.to_string())?;
        let len = rng.random_range(1..=32);
        let k = cesa::draw_offset(n, rng).map_err(|e| e.to_string())?;
        let models = random_models(rng, n, len, m);
        let session =
            CesaSessionParams::new(n, k, Arc::clone(&dh), len, m, 1).map_err(|e| e.to_string())?;
        let agg = cesa::local_round(&session, &models, &BTreeSet::new(), false, rng)
            .map_err(|e| e.to_string())?;
        ensure(agg.elems() == oracle_sum(&models, 0..n, bits), || {
            format!("|C|={n} offset={k}: aggregate differs from oracle")
        })?;
    }
    Ok(format!("{} configurations", sizes.len()))
}

fn secagg_aggregation(sizes: &[usize], rng: &mut ChaCha20Rng) -> Result<String, String> {
    let dh = Arc::new(DhParams::toy());
    let m = RingModulus::new(32).map_err(|e| e.to_string())?;
    for &n in [2usize, 3].iter().chain(sizes) {
        let models = random_models(rng, n, 8, m);
        let agg = secagg::local_round(Arc::clone(&dh), m, &models, &BTreeSet::new(), true, rng)
            .map_err(|e| e.to_string())?;
        ensure(agg.elems() == oracle_sum(&models, 0..n, 32), || {
            format!("|C|={n}: aggregate differs from oracle")
        })?;
    }
    Ok(format!("{} configurations", sizes.len() + 2))
}

fn secagg_dropout(sizes: &[usize], rng: &mut ChaCha20Rng) -> Result<String, String> {
    let dh = Arc::new(DhParams::toy());
    let m = RingModulus::WORD;
    for &n in sizes {
        let k = rng.random_range(0..n);
        let models = random_models(rng, n, 8, m);
        let agg = secagg::local_round(Arc::clone(&dh), m, &models, &BTreeSet::from([k]), true, rng)
            .map_err(|e| e.to_string())?;
        ensure(
            agg.elems() == oracle_sum(&models, (0..n).filter(|&i| i != k), 64),
            || format!("|C|={n}, client {k} dropped: aggregate differs from survivor sum"),
        )?;
    }
    Ok(format!("{} configurations, one dropout each", sizes.len()))
}

fn closed_forms(sizes: &[usize], seed: u64) -> Result<String, String> {
    let rounds = 10;
    for &n in sizes {
        let mut c = SessionConfig::new(Protocol::Cesa, n, rounds);
        c.seed = seed;
        let r = run_session(&c).map_err(|e| e.to_string())?.report;
        let (up, down) = (r.client_to_server.messages, r.server_to_client.messages);
        ensure(up == (rounds + 1) * n as u64 && down == rounds + 1, || {
            format!(
                "|C|={n}: got {up}/{down}, want {}/{}",
                (rounds + 1) * n as u64,
                rounds + 1
            )
        })?;
        ensure(r.all_correct(), || {
            format!("|C|={n}: a round was not correct")
        })?;
    }
    Ok(format!("n={rounds}, (n+1)|C| up and n+1 down"))
}

fn expect_verdict(config: &SessionConfig, round: u64, want: Verdict) -> Result<String, String> {
    let r = run_session(config).map_err(|e| e.to_string())?.report;
    match r.verdict(round) {
        Some(v) if v == want => Ok(format!("round {round} {}, as expected", v.as_str())),
        other => Err(format!(
            "round {round}: expected {}, got {other:?}",
            want.as_str()
        )),
    }
}

/// Runs every named property for the given client counts. Each count must
/// be a valid CESA size.
pub fn cmd_verify(seed: u64, sizes: &[usize]) -> Result<VerifyReport, BenchError> {
    if sizes.is_empty() {
        return Err(BenchError::Usage("verify needs at least one size".into()));
    }
    if let Some(&n) = sizes.iter().find(|&&n| n < MIN_CLIENTS) {
        return Err(BenchError::Usage(format!(
            "verify sizes must be at least {MIN_CLIENTS}, got {n}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut report = VerifyReport::default();
    report.record("dh-symmetry", dh_symmetry(&mut rng));
    report.record("pair-graph", pair_graph(sizes));
    report.record("mask-cancellation", mask_cancellation(sizes, &mut rng));
    report.record("cesa-aggregation", cesa_aggregation(sizes, &mut rng));
    report.record("secagg-aggregation", secagg_aggregation(sizes, &mut rng));
    report.record("secagg-dropout-recovery", secagg_dropout(sizes, &mut rng));
    report.record("closed-form-counts", closed_forms(sizes, seed));

    let n = sizes[0];
    let mut dropout = SessionConfig::new(Protocol::Cesa, n, 2);
    dropout.seed = seed;
    dropout.model_len = 4;
    dropout.dropouts.insert((1, n - 1));
    report.record(
        "cesa-dropout-aborts",
        expect_verdict(&dropout, 1, Verdict::Aborted),
    );
    dropout.cesa_force = true;
    report.record(
        "cesa-forced-dropout-corrupts",
        expect_verdict(&dropout, 1, Verdict::Incorrect),
    );

    let mut tamper = SessionConfig::new(Protocol::Cesa, n, 1);
    tamper.seed = seed;
    tamper.tamper.insert((1, 0));
    report.record(
        "tamper-detected",
        expect_verdict(&tamper, 1, Verdict::Incorrect),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let r = cmd_verify(0, &[7, 9]).unwrap();
        assert!(r.passed(), "{}", r.render());
        assert_eq!(r.checks.len(), 10);
    }

    #[test]
    fn small_sizes_are_usage_errors() {
        assert!(matches!(cmd_verify(0, &[5]), Err(BenchError::Usage(_))));
        assert!(matches!(cmd_verify(0, &[]), Err(BenchError::Usage(_))));
    }
}
