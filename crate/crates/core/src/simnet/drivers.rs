//! Protocol drivers: move each protocol's state machines through a round,
//! with every exchange going over the [`Bus`].

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::bus::{Bus, Delivery};
use super::message::{Party, Payload};
use super::{ProtocolError, SimError};
use crate::cesa::{CesaClient, CesaServer, CesaSessionParams};
use crate::crypto::{DhParams, ModelVector, RingModulus};
use crate::secagg::{
    PeerKeys, Reveal, RevealedBShare, RevealedSkShare, SecAggClient, SecAggServer,
};

pub const SECAGG_STEP1: &str = "secagg.step1";
pub const SECAGG_STEP3: &str = "secagg.step3";
pub const SECAGG_STEP4: &str = "secagg.step4";
pub const SECAGG_STEP5: &str = "secagg.step5";
pub const SECAGG_STEP6: &str = "secagg.step6";
pub const SECAGG_STEP7: &str = "secagg.step7";
pub const SECAGG_STEP8: &str = "secagg.step8";
pub const CESA_PHASE1: &str = "cesa.phase1";
pub const CESA_PHASE3: &str = "cesa.phase3";
pub const PLAIN_INIT: &str = "plain.init";
pub const PLAIN_UPLOAD: &str = "plain.upload";
pub const PLAIN_GLOBAL: &str = "plain.global";

pub(crate) struct RoundInput<'a> {
    pub round: u64,
    /// Trained model of every client, indexed by client.
    pub models: &'a [ModelVector],
    pub dropped: &'a BTreeSet<usize>,
    pub tampered: &'a BTreeSet<usize>,
}

pub(crate) struct RoundResult {
    pub aggregate: Result<ModelVector, ProtocolError>,
    /// Clients whose models the aggregate should sum.
    pub contributors: BTreeSet<usize>,
}

pub(crate) trait Driver {
    /// Setup traffic, ledgered as round 0.
    fn setup(&mut self, bus: &mut Bus, initial: &ModelVector) -> Result<(), SimError>;
    fn run_round(&mut self, bus: &mut Bus, input: &RoundInput<'_>) -> RoundResult;
}

fn sender(d: &Delivery) -> usize {
    match d.from {
        Party::Client(i) => i,
        other => panic!("server inbox holds a message from {other}"),
    }
}

fn unexpected(d: &Delivery) -> ProtocolError {
    ProtocolError::UnexpectedPayload {
        step: d.step,
        kind: d.payload.kind(),
    }
}

fn directory_entries<'a, I>(keys: I) -> Vec<(usize, Vec<BigUint>)>
where
    I: IntoIterator<Item = (&'a usize, &'a PeerKeys)>,
{
    keys.into_iter()
        .map(|(&i, k)| (i, vec![k.mask_public.clone(), k.cipher_public.clone()]))
        .collect()
}

fn tamper_if(masked: &mut ModelVector, client: usize, input: &RoundInput<'_>) {
    if input.tampered.contains(&client) {
        masked.flip_low_bit(0);
    }
}

pub(crate) struct SecAggDriver {
    participants: BTreeSet<usize>,
    clients: Vec<SecAggClient>,
    rngs: Vec<ChaCha20Rng>,
    server: SecAggServer,
}

impl SecAggDriver {
    pub fn new(
        clients: usize,
        dh: Arc<DhParams>,
        modulus: RingModulus,
        model_len: usize,
        recovery: bool,
        client_seed: impl Fn(usize) -> u64,
    ) -> Self {
        Self {
            participants: (0..clients).collect(),
            clients: (0..clients)
                .map(|i| SecAggClient::new(i, Arc::clone(&dh), modulus))
                .collect(),
            rngs: (0..clients)
                .map(|i| ChaCha20Rng::seed_from_u64(client_seed(i)))
                .collect(),
            server: SecAggServer::new(dh, modulus, model_len, recovery),
        }
    }

    fn round(
        &mut self,
        bus: &mut Bus,
        input: &RoundInput<'_>,
        contributors: &mut BTreeSet<usize>,
    ) -> Result<ModelVector, ProtocolError> {
        let r = input.round;
        let all = self.participants.clone();
        self.server.begin_round(r, all.clone());

        // (1) key generation and upload.
        for &i in &all {
            let keys = self.clients[i].begin_round(r, input.models[i].clone(), &mut self.rngs[i]);
            bus.send_to_server(
                r,
                SECAGG_STEP1,
                i,
                Payload::PublicKey {
                    slot: 1,
                    key: keys.mask_public,
                },
            );
            bus.send_to_server(
                r,
                SECAGG_STEP1,
                i,
                Payload::PublicKey {
                    slot: 2,
                    key: keys.cipher_public,
                },
            );
        }
        let mut uploads: BTreeMap<usize, [Option<BigUint>; 2]> = BTreeMap::new();
        for d in bus.drain_server() {
            match &*d.payload {
                Payload::PublicKey {
                    slot: s @ (1 | 2),
                    key,
                } => {
                    uploads.entry(sender(&d)).or_default()[usize::from(*s) - 1] = Some(key.clone());
                }
                _ => return Err(unexpected(&d)),
            }
        }
        for (i, [mask, cipher]) in uploads {
            match (mask, cipher) {
                (Some(mask_public), Some(cipher_public)) => self.server.receive_public_keys(
                    i,
                    PeerKeys {
                        mask_public,
                        cipher_public,
                    },
                )?,
                _ => return Err(crate::secagg::SecAggError::MissingPeerKey(i).into()),
            }
        }

        // (3) key broadcast.
        let directory = directory_entries(self.server.key_directory());
        bus.broadcast(
            r,
            SECAGG_STEP3,
            all.iter().copied(),
            Payload::KeyDirectory(directory),
        );
        for &i in &all {
            for d in bus.drain_client(i) {
                let Payload::KeyDirectory(entries) = &*d.payload else {
                    return Err(unexpected(&d));
                };
                let map: BTreeMap<usize, PeerKeys> = entries
                    .iter()
                    .map(|(j, k)| {
                        (
                            *j,
                            PeerKeys {
                                mask_public: k[0].clone(),
                                cipher_public: k[1].clone(),
                            },
                        )
                    })
                    .collect();
                self.clients[i].receive_public_keys(&map)?;
            }
        }

        // (4) share envelopes.
        for &i in &all {
            let envelopes = self.clients[i].build_share_envelopes(&all, &mut self.rngs[i])?;
            for e in envelopes {
                bus.send_to_server(r, SECAGG_STEP4, i, Payload::Envelope(e));
            }
        }
        for d in bus.drain_server() {
            let Payload::Envelope(e) = &*d.payload else {
                return Err(unexpected(&d));
            };
            self.server.receive_envelopes(sender(&d), vec![e.clone()])?;
        }

        // (5) routing.
        let plan = self.server.route()?;
        for (j, envelopes) in plan {
            for e in envelopes {
                bus.send_to_client(r, SECAGG_STEP5, j, Payload::Envelope(e));
            }
        }
        let c1 = self.server.c1().cloned().unwrap_or_default();
        for &j in &c1 {
            let mut inbox = Vec::new();
            for d in bus.drain_client(j) {
                let Payload::Envelope(e) = &*d.payload else {
                    return Err(unexpected(&d));
                };
                inbox.push(e.clone());
            }
            self.clients[j].receive_envelopes(inbox)?;
        }

        // (6) masked models; dropped clients go silent here.
        for &i in c1.iter().filter(|i| !input.dropped.contains(i)) {
            let mut masked = self.clients[i].compute_masked_model(&c1)?;
            tamper_if(&mut masked, i, input);
            bus.send_to_server(r, SECAGG_STEP6, i, Payload::MaskedModel(masked));
        }
        for d in bus.drain_server() {
            let Payload::MaskedModel(m) = &*d.payload else {
                return Err(unexpected(&d));
            };
            self.server.receive_masked_model(sender(&d), m.clone())?;
        }

        // (7) survivor set and share reveal.
        let c2 = self.server.fix_survivors()?;
        *contributors = c2.clone();
        bus.broadcast(
            r,
            SECAGG_STEP7,
            c2.iter().copied(),
            Payload::Participants(c2.iter().copied().collect()),
        );
        for &i in &c2 {
            for d in bus.drain_client(i) {
                let Payload::Participants(list) = &*d.payload else {
                    return Err(unexpected(&d));
                };
                let survivors: BTreeSet<usize> = list.iter().copied().collect();
                let reveal = self.clients[i].reveal_shares(&survivors)?;
                for s in reveal.b_shares {
                    bus.send_to_server(
                        r,
                        SECAGG_STEP7,
                        i,
                        Payload::BShare {
                            origin: s.origin,
                            holder: s.holder,
                            value: s.value,
                        },
                    );
                }
                for s in reveal.sk_shares {
                    bus.send_to_server(
                        r,
                        SECAGG_STEP7,
                        i,
                        Payload::SkShare {
                            origin: s.origin,
                            holder: s.holder,
                            value: s.value,
                        },
                    );
                }
            }
        }
        let mut reveals: BTreeMap<usize, Reveal> = BTreeMap::new();
        for d in bus.drain_server() {
            let entry = reveals.entry(sender(&d)).or_default();
            match &*d.payload {
                Payload::BShare {
                    origin,
                    holder,
                    value,
                } => entry.b_shares.push(RevealedBShare {
                    origin: *origin,
                    holder: *holder,
                    value: *value,
                }),
                Payload::SkShare {
                    origin,
                    holder,
                    value,
                } => entry.sk_shares.push(RevealedSkShare {
                    origin: *origin,
                    holder: *holder,
                    value: value.clone(),
                }),
                _ => return Err(unexpected(&d)),
            }
        }
        for (i, reveal) in reveals {
            self.server.receive_reveal(i, reveal)?;
        }

        // (8) unmask, aggregate, publish.
        let aggregate = self.server.aggregate()?;
        bus.broadcast(
            r,
            SECAGG_STEP8,
            all.iter().copied(),
            Payload::GlobalModel(aggregate.clone()),
        );
        Ok(aggregate)
    }
}

impl Driver for SecAggDriver {
    fn setup(&mut self, bus: &mut Bus, initial: &ModelVector) -> Result<(), SimError> {
        bus.broadcast(
            0,
            SECAGG_STEP1,
            self.participants.iter().copied(),
            Payload::GlobalModel(initial.clone()),
        );
        bus.clear_inboxes();
        Ok(())
    }

    fn run_round(&mut self, bus: &mut Bus, input: &RoundInput<'_>) -> RoundResult {
        let mut contributors = BTreeSet::new();
        let aggregate = self.round(bus, input, &mut contributors);
        bus.clear_inboxes();
        RoundResult {
            aggregate,
            contributors,
        }
    }
}

pub(crate) struct CesaDriver {
    clients: Vec<CesaClient>,
    server: CesaServer,
}

impl CesaDriver {
    pub fn new(
        session: CesaSessionParams,
        force: bool,
        client_seed: impl Fn(usize) -> u64,
    ) -> Result<Self, SimError> {
        let n = session.clients();
        let server = CesaServer::new(n, session.modulus(), session.model_len(), force);
        let clients = (0..n)
            .map(|i| {
                let mut rng = ChaCha20Rng::seed_from_u64(client_seed(i));
                CesaClient::new(i, session.clone(), &mut rng)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { clients, server })
    }

    fn round(
        &mut self,
        bus: &mut Bus,
        input: &RoundInput<'_>,
        contributors: &mut BTreeSet<usize>,
    ) -> Result<ModelVector, ProtocolError> {
        let r = input.round;
        self.server.begin_round(r);
        for c in self
            .clients
            .iter()
            .filter(|c| !input.dropped.contains(&c.index()))
        {
            let i = c.index();
            let mut masked = c.mask_model(&input.models[i])?;
            tamper_if(&mut masked, i, input);
            bus.send_to_server(r, CESA_PHASE3, i, Payload::MaskedModel(masked));
        }
        for d in bus.drain_server() {
            let Payload::MaskedModel(m) = &*d.payload else {
                return Err(unexpected(&d));
            };
            self.server.receive_masked_model(sender(&d), m.clone())?;
        }
        *contributors = self.server.submitted();
        let aggregate = self.server.aggregate()?;
        bus.broadcast(
            r,
            CESA_PHASE3,
            0..self.clients.len(),
            Payload::GlobalModel(aggregate.clone()),
        );
        Ok(aggregate)
    }
}

impl Driver for CesaDriver {
    /// Phase I key exchange, then Phase II mask derivation (local, silent).
    fn setup(&mut self, bus: &mut Bus, initial: &ModelVector) -> Result<(), SimError> {
        for c in &self.clients {
            bus.send_to_server(
                0,
                CESA_PHASE1,
                c.index(),
                Payload::PublicKey {
                    slot: 1,
                    key: c.public_key().clone(),
                },
            );
        }
        for d in bus.drain_server() {
            match &*d.payload {
                Payload::PublicKey { key, .. } => {
                    self.server.receive_public_key(sender(&d), key.clone())?
                }
                _ => return Err(SimError::Setup(unexpected(&d).to_string())),
            }
        }
        let directory: Vec<(usize, Vec<BigUint>)> = self
            .server
            .key_directory()?
            .iter()
            .map(|(&i, k)| (i, vec![k.clone()]))
            .collect();
        bus.broadcast(
            0,
            CESA_PHASE1,
            0..self.clients.len(),
            Payload::Setup {
                model: initial.clone(),
                directory,
            },
        );
        for c in &mut self.clients {
            for d in bus.drain_client(c.index()) {
                let Payload::Setup { directory, .. } = &*d.payload else {
                    return Err(SimError::Setup(unexpected(&d).to_string()));
                };
                let map: BTreeMap<usize, BigUint> =
                    directory.iter().map(|(j, k)| (*j, k[0].clone())).collect();
                c.receive_directory(&map);
            }
            c.derive_pair_masks()?;
        }
        Ok(())
    }

    fn run_round(&mut self, bus: &mut Bus, input: &RoundInput<'_>) -> RoundResult {
        let mut contributors = BTreeSet::new();
        let aggregate = self.round(bus, input, &mut contributors);
        bus.clear_inboxes();
        RoundResult {
            aggregate,
            contributors,
        }
    }
}

pub(crate) struct PlainDriver {
    clients: usize,
    modulus: RingModulus,
    model_len: usize,
}

impl PlainDriver {
    pub fn new(clients: usize, modulus: RingModulus, model_len: usize) -> Self {
        Self {
            clients,
            modulus,
            model_len,
        }
    }
}

impl Driver for PlainDriver {
    fn setup(&mut self, bus: &mut Bus, initial: &ModelVector) -> Result<(), SimError> {
        bus.broadcast(
            0,
            PLAIN_INIT,
            0..self.clients,
            Payload::GlobalModel(initial.clone()),
        );
        bus.clear_inboxes();
        Ok(())
    }

    fn run_round(&mut self, bus: &mut Bus, input: &RoundInput<'_>) -> RoundResult {
        let r = input.round;
        for i in (0..self.clients).filter(|i| !input.dropped.contains(i)) {
            let mut model = input.models[i].clone();
            tamper_if(&mut model, i, input);
            bus.send_to_server(r, PLAIN_UPLOAD, i, Payload::PlainModel(model));
        }
        let mut contributors = BTreeSet::new();
        let mut sum = ModelVector::zeros(self.modulus, self.model_len);
        let mut aggregate = Ok(());
        for d in bus.drain_server() {
            match &*d.payload {
                Payload::PlainModel(m) => {
                    contributors.insert(sender(&d));
                    if let Err(e) = sum.add_assign(m) {
                        aggregate = Err(ProtocolError::Crypto(e));
                    }
                }
                _ => aggregate = Err(unexpected(&d)),
            }
        }
        let aggregate = aggregate.map(|()| {
            bus.broadcast(
                r,
                PLAIN_GLOBAL,
                0..self.clients,
                Payload::GlobalModel(sum.clone()),
            );
            sum
        });
        bus.clear_inboxes();
        RoundResult {
            aggregate,
            contributors,
        }
    }
}
