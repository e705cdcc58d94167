use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::RngCore;

use super::{SecAggClient, SecAggError, SecAggServer};
use crate::crypto::{DhParams, ModelVector, RingModulus};

/// Runs one SecAgg round in memory, without a network: client `i` holds
/// `models[i]`, and clients in `dropped` go silent before uploading their
/// masked model. Returns the server's aggregate.
pub fn local_round<R: RngCore + ?Sized>(
    params: Arc<DhParams>,
    modulus: RingModulus,
    models: &[ModelVector],
    dropped: &BTreeSet<usize>,
    recovery: bool,
    rng: &mut R,
) -> Result<ModelVector, SecAggError> {
    let n = models.len();
    let model_len = models.first().map_or(0, ModelVector::len);
    let all: BTreeSet<usize> = (0..n).collect();
    let mut server = SecAggServer::new(Arc::clone(&params), modulus, model_len, recovery);
    server.begin_round(1, all.clone());
    let mut clients: Vec<SecAggClient> = (0..n)
        .map(|i| SecAggClient::new(i, Arc::clone(&params), modulus))
        .collect();

    for (i, c) in clients.iter_mut().enumerate() {
        let keys = c.begin_round(1, models[i].clone(), rng);
        server.receive_public_keys(i, keys)?;
    }
    let directory = server.key_directory().clone();
    for c in &mut clients {
        c.receive_public_keys(&directory)?;
    }
    for (i, c) in clients.iter_mut().enumerate() {
        let envelopes = c.build_share_envelopes(&all, rng)?;
        server.receive_envelopes(i, envelopes)?;
    }
    let mut plan = server.route()?;
    let c1 = server.c1().cloned().unwrap_or_default();
    for &j in &c1 {
        clients[j].receive_envelopes(plan.remove(&j).unwrap_or_default())?;
    }
    for &i in c1.iter().filter(|i| !dropped.contains(i)) {
        let masked = clients[i].compute_masked_model(&c1)?;
        server.receive_masked_model(i, masked)?;
    }
    let c2 = server.fix_survivors()?;
    let mut reveals = BTreeMap::new();
    for &i in &c2 {
        reveals.insert(i, clients[i].reveal_shares(&c2)?);
    }
    for (i, reveal) in reveals {
        server.receive_reveal(i, reveal)?;
    }
    server.aggregate()
}
