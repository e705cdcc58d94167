use std::collections::BTreeMap;
use std::io;

use serde::Serialize;

use super::message::{Direction, ProtocolMessage};

/// Message, value and byte totals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub messages: u64,
    pub values: u64,
    pub bytes: u64,
}

impl Tally {
    fn add(&mut self, m: &ProtocolMessage) {
        self.messages += 1;
        self.values += m.values;
        self.bytes += m.bytes;
    }
}

/// Append-only record of every transmitted message, with running totals
/// per (round, direction).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MessageLedger {
    entries: Vec<ProtocolMessage>,
    totals: BTreeMap<(u64, Direction), Tally>,
}

/// Which side of the link to count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionFilter {
    ClientToServer,
    /// Unicast and broadcast messages sent by the server.
    FromServer,
    ServerUnicast,
    ServerBroadcast,
}

impl DirectionFilter {
    fn matches(self, d: Direction) -> bool {
        match self {
            DirectionFilter::ClientToServer => d == Direction::ClientToServer,
            DirectionFilter::FromServer => d.from_server(),
            DirectionFilter::ServerUnicast => d == Direction::ServerToClient,
            DirectionFilter::ServerBroadcast => d == Direction::ServerBroadcast,
        }
    }
}

/// Conjunction of optional constraints. `step` matches as a prefix, so
/// `"secagg"` selects every SecAgg step and `"secagg.step4"` just one.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MessageFilter {
    pub direction: Option<DirectionFilter>,
    pub round: Option<u64>,
    pub step: Option<String>,
}

impl MessageFilter {
    pub fn direction(d: DirectionFilter) -> Self {
        Self {
            direction: Some(d),
            ..Self::default()
        }
    }

    pub fn with_round(mut self, round: u64) -> Self {
        self.round = Some(round);
        self
    }

    pub fn with_step(mut self, step: impl Into<String>) -> Self {
        self.step = Some(step.into());
        self
    }

    pub fn matches(&self, m: &ProtocolMessage) -> bool {
        self.direction.is_none_or(|d| d.matches(m.direction))
            && self.round.is_none_or(|r| r == m.round)
            && self.step.as_deref().is_none_or(|s| m.step.starts_with(s))
    }
}

impl MessageLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, message: ProtocolMessage) {
        self.totals
            .entry((message.round, message.direction))
            .or_default()
            .add(&message);
        self.entries.push(message);
    }

    pub fn entries(&self) -> &[ProtocolMessage] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Running total for one round and direction.
    pub fn running_total(&self, round: u64, direction: Direction) -> Tally {
        self.totals
            .get(&(round, direction))
            .copied()
            .unwrap_or_default()
    }

    /// Rounds that have at least one message, ascending.
    pub fn rounds(&self) -> Vec<u64> {
        let mut r: Vec<u64> = self.totals.keys().map(|&(r, _)| r).collect();
        r.dedup();
        r
    }

    /// True when the running totals agree with a recount of the entries.
    pub fn totals_consistent(&self) -> bool {
        let mut recount: BTreeMap<(u64, Direction), Tally> = BTreeMap::new();
        for m in &self.entries {
            recount.entry((m.round, m.direction)).or_default().add(m);
        }
        recount == self.totals
    }

    /// One JSON object per line.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for m in &self.entries {
            out.push_str(&serde_json::to_string(m).expect("ledger entries serialize"));
            out.push('\n');
        }
        out
    }

    /// CSV with header `round,step,direction,sender,recipient,values,bytes`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "round",
            "step",
            "direction",
            "sender",
            "recipient",
            "values",
            "bytes",
        ])?;
        for m in &self.entries {
            w.write_record([
                m.round.to_string(),
                m.step.to_string(),
                m.direction.to_string(),
                m.sender.to_string(),
                m.recipient.to_string(),
                m.values.to_string(),
                m.bytes.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// Totals over every entry the filter accepts.
pub fn count_messages(ledger: &MessageLedger, filter: &MessageFilter) -> Tally {
    let mut t = Tally::default();
    for m in ledger.entries().iter().filter(|m| filter.matches(m)) {
        t.add(m);
    }
    t
}
