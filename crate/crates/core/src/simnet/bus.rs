//! Synchronous, lossless, in-order message bus. Every send is ledgered at
//! the moment it is posted.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use super::ledger::MessageLedger;
use super::message::{Direction, Party, Payload, ProtocolMessage};

#[derive(Clone, Debug)]
pub struct Delivery {
    pub round: u64,
    pub step: &'static str,
    pub from: Party,
    pub payload: Arc<Payload>,
}

pub struct Bus {
    key_width: usize,
    ledger: MessageLedger,
    server_inbox: VecDeque<Delivery>,
    client_inboxes: BTreeMap<usize, VecDeque<Delivery>>,
}

impl Bus {
    /// `key_width` is the byte width of p, used for serialized sizes.
    pub fn new(key_width: usize) -> Self {
        Self {
            key_width,
            ledger: MessageLedger::new(),
            server_inbox: VecDeque::new(),
            client_inboxes: BTreeMap::new(),
        }
    }

    fn record(
        &mut self,
        round: u64,
        step: &'static str,
        direction: Direction,
        sender: Party,
        recipient: Party,
        payload: &Payload,
    ) {
        self.ledger.append(ProtocolMessage {
            round,
            step,
            direction,
            sender,
            recipient,
            kind: payload.kind(),
            values: payload.value_count(),
            bytes: payload.encode(self.key_width).len() as u64,
        });
    }

    pub fn send_to_server(
        &mut self,
        round: u64,
        step: &'static str,
        from: usize,
        payload: Payload,
    ) {
        let from = Party::Client(from);
        self.record(
            round,
            step,
            Direction::ClientToServer,
            from,
            Party::Server,
            &payload,
        );
        self.server_inbox.push_back(Delivery {
            round,
            step,
            from,
            payload: Arc::new(payload),
        });
    }

    pub fn send_to_client(&mut self, round: u64, step: &'static str, to: usize, payload: Payload) {
        self.record(
            round,
            step,
            Direction::ServerToClient,
            Party::Server,
            Party::Client(to),
            &payload,
        );
        self.client_inboxes
            .entry(to)
            .or_default()
            .push_back(Delivery {
                round,
                step,
                from: Party::Server,
                payload: Arc::new(payload),
            });
    }

    /// One ledger entry; a shared copy lands in every recipient's inbox.
    pub fn broadcast<I>(&mut self, round: u64, step: &'static str, recipients: I, payload: Payload)
    where
        I: IntoIterator<Item = usize>,
    {
        self.record(
            round,
            step,
            Direction::ServerBroadcast,
            Party::Server,
            Party::Clients,
            &payload,
        );
        let payload = Arc::new(payload);
        for to in recipients {
            self.client_inboxes
                .entry(to)
                .or_default()
                .push_back(Delivery {
                    round,
                    step,
                    from: Party::Server,
                    payload: Arc::clone(&payload),
                });
        }
    }

    pub fn drain_server(&mut self) -> Vec<Delivery> {
        self.server_inbox.drain(..).collect()
    }

    pub fn drain_client(&mut self, client: usize) -> Vec<Delivery> {
        self.client_inboxes
            .get_mut(&client)
            .map(|q| q.drain(..).collect())
            .unwrap_or_default()
    }

    /// Drops undelivered messages, e.g. those addressed to a dropped client.
    pub fn clear_inboxes(&mut self) {
        self.server_inbox.clear();
        self.client_inboxes.clear();
    }

    pub fn ledger(&self) -> &MessageLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> MessageLedger {
        self.ledger
    }
}
