use std::collections::{BTreeMap, BTreeSet};

use rand::RngCore;

use super::{cesa_aggregate, force_aggregate, CesaClient, CesaError, CesaSessionParams};
use crate::crypto::ModelVector;

/// Runs key setup and one CESA round in memory: client `i` holds
/// `models[i]`, clients in `absent` never upload. With `force` the server
/// sums whatever arrived instead of aborting.
pub fn local_round<R: RngCore + ?Sized>(
    session: &CesaSessionParams,
    models: &[ModelVector],
    absent: &BTreeSet<usize>,
    force: bool,
    rng: &mut R,
) -> Result<ModelVector, CesaError> {
    let mut clients = (0..session.clients())
        .map(|i| CesaClient::new(i, session.clone(), rng))
        .collect::<Result<Vec<_>, _>>()?;
    let directory: BTreeMap<_, _> = clients
        .iter()
        .map(|c| (c.index(), c.public_key().clone()))
        .collect();
    let mut masked = BTreeMap::new();
    for c in &mut clients {
        c.receive_directory(&directory);
        c.derive_pair_masks()?;
        if !absent.contains(&c.index()) {
            masked.insert(c.index(), c.mask_model(&models[c.index()])?);
        }
    }
    if force {
        force_aggregate(&masked, session.modulus(), session.model_len())
    } else {
        cesa_aggregate(
            &masked,
            session.clients(),
            session.modulus(),
            session.model_len(),
        )
    }
}
