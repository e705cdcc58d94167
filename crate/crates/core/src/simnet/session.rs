use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::bus::Bus;
use super::config::{Protocol, SessionConfig};
use super::drivers::{CesaDriver, Driver, PlainDriver, RoundInput, SecAggDriver};
use super::ledger::MessageLedger;
use super::report::{RoundVerdict, SessionReport, Verdict};
use super::SimError;
use crate::cesa::{draw_offset, CesaSessionParams};
use crate::crypto::{context_with, integer_to_seed, prg_expand, vec_sum, ModelVector, PrgSeed};

/// Derives a labelled sub-seed from the master seed.
pub fn derive_seed(master: u64, label: &str, fields: &[u64]) -> u64 {
    integer_to_seed(&BigUint::from(master), &context_with(label, fields)).0
}

/// Report plus the full message ledger of one session.
#[derive(Clone, Debug)]
pub struct SessionRun {
    pub report: SessionReport,
    pub ledger: MessageLedger,
}

/// Offset a CESA session will use: the configured one, else a draw from
/// the master seed.
pub fn session_offset(config: &SessionConfig) -> Result<usize, SimError> {
    match config.offset {
        Some(o) => Ok(o),
        None => {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(config.seed, "offset", &[]));
            Ok(draw_offset(config.clients, &mut rng)?)
        }
    }
}

/// Trained model of `client` in `round`: the current global model plus a
/// seeded pseudo-random update.
fn trained_model(
    config: &SessionConfig,
    global: &ModelVector,
    round: u64,
    client: usize,
) -> ModelVector {
    let update = prg_expand(
        PrgSeed(derive_seed(config.seed, "update", &[round, client as u64])),
        global.len(),
        global.modulus(),
    );
    let mut w = global.clone();
    w.add_assign(&update).expect("same shape");
    w
}

/// Runs `config.rounds` rounds of the configured protocol. Protocol
/// failures inside a round become `Aborted` verdicts.
pub fn run_session(config: &SessionConfig) -> Result<SessionRun, SimError> {
    config.validate()?;
    let start = Instant::now();
    let modulus = config.modulus()?;
    let dh = Arc::new(config.params.params());
    let mut bus = Bus::new(dh.element_width());
    let client_seed = |i: usize| derive_seed(config.seed, "client", &[i as u64]);

    let mut offset = None;
    let mut driver: Box<dyn Driver> = match config.protocol {
        Protocol::SecAgg => Box::new(SecAggDriver::new(
            config.clients,
            Arc::clone(&dh),
            modulus,
            config.model_len,
            config.secagg_recovery,
            client_seed,
        )),
        Protocol::Cesa => {
            let o = session_offset(config)?;
            offset = Some(o);
            let session = CesaSessionParams::new(
                config.clients,
                o,
                Arc::clone(&dh),
                config.model_len,
                modulus,
                config.rounds,
            )?;
            Box::new(CesaDriver::new(session, config.cesa_force, client_seed)?)
        }
        Protocol::Plain => Box::new(PlainDriver::new(config.clients, modulus, config.model_len)),
    };

    let mut global = prg_expand(
        PrgSeed(derive_seed(config.seed, "init", &[])),
        config.model_len,
        modulus,
    );
    driver.setup(&mut bus, &global)?;

    let mut verdicts = Vec::with_capacity(config.rounds as usize);
    for round in 1..=config.rounds {
        let models: Vec<ModelVector> = (0..config.clients)
            .map(|i| trained_model(config, &global, round, i))
            .collect();
        let faults = |set: &BTreeSet<(u64, usize)>| -> BTreeSet<usize> {
            set.iter()
                .filter(|(r, _)| *r == round)
                .map(|&(_, c)| c)
                .collect()
        };
        let dropped = faults(&config.dropouts);
        let tampered = faults(&config.tamper);
        let result = driver.run_round(
            &mut bus,
            &RoundInput {
                round,
                models: &models,
                dropped: &dropped,
                tampered: &tampered,
            },
        );
        let contributors: Vec<usize> = result.contributors.iter().copied().collect();
        let verdict = match result.aggregate {
            Ok(aggregate) => {
                let oracle = vec_sum(
                    modulus,
                    config.model_len,
                    contributors.iter().map(|&i| &models[i]),
                )?;
                let v = if aggregate == oracle {
                    Verdict::Correct
                } else {
                    Verdict::Incorrect
                };
                global = aggregate;
                RoundVerdict {
                    round,
                    verdict: v,
                    contributors,
                    detail: None,
                }
            }
            Err(e) => RoundVerdict {
                round,
                verdict: Verdict::Aborted,
                contributors,
                detail: Some(e.to_string()),
            },
        };
        verdicts.push(verdict);
    }

    let ledger = bus.into_ledger();
    let report = SessionReport::from_ledger(config, offset, &ledger, verdicts, start.elapsed());
    Ok(SessionRun { report, ledger })
}
