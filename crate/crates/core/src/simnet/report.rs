use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;

use super::config::{AccountingMode, Protocol, SessionConfig};
use super::ledger::{MessageLedger, Tally};
use super::message::Direction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Aggregate equals the plaintext sum of the contributing clients.
    Correct,
    /// An aggregate was produced but differs from the plaintext sum.
    Incorrect,
    /// The protocol refused to produce an aggregate.
    Aborted,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Correct => "correct",
            Verdict::Incorrect => "incorrect",
            Verdict::Aborted => "aborted",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundVerdict {
    pub round: u64,
    pub verdict: Verdict,
    /// Clients whose models the aggregate is checked against.
    pub contributors: Vec<usize>,
    /// Protocol error for aborted rounds.
    pub detail: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RoundCounts {
    pub round: u64,
    pub client_to_server: Tally,
    /// Unicast plus broadcast.
    pub server_to_client: Tally,
}

/// Per-round and total message counts with per-round aggregation verdicts.
/// Round 0 holds setup traffic.
#[derive(Clone, Debug)]
pub struct SessionReport {
    pub protocol: Protocol,
    pub clients: usize,
    pub rounds: u64,
    pub offset: Option<usize>,
    pub mode: AccountingMode,
    pub per_round: Vec<RoundCounts>,
    pub client_to_server: Tally,
    pub server_to_client: Tally,
    pub verdicts: Vec<RoundVerdict>,
    /// Wall-clock time of the run. Not part of any export.
    pub duration: Duration,
}

impl SessionReport {
    pub(crate) fn from_ledger(
        config: &SessionConfig,
        offset: Option<usize>,
        ledger: &MessageLedger,
        verdicts: Vec<RoundVerdict>,
        duration: Duration,
    ) -> Self {
        let rounds = config.rounds;
        let mut per_round = Vec::with_capacity(rounds as usize + 1);
        let mut up_total = Tally::default();
        let mut down_total = Tally::default();
        for round in 0..=rounds {
            let up = ledger.running_total(round, Direction::ClientToServer);
            let mut down = ledger.running_total(round, Direction::ServerToClient);
            let bcast = ledger.running_total(round, Direction::ServerBroadcast);
            down.messages += bcast.messages;
            down.values += bcast.values;
            down.bytes += bcast.bytes;
            for (t, x) in [(&mut up_total, up), (&mut down_total, down)] {
                t.messages += x.messages;
                t.values += x.values;
                t.bytes += x.bytes;
            }
            per_round.push(RoundCounts {
                round,
                client_to_server: up,
                server_to_client: down,
            });
        }
        Self {
            protocol: config.protocol,
            clients: config.clients,
            rounds,
            offset,
            mode: config.mode,
            per_round,
            client_to_server: up_total,
            server_to_client: down_total,
            verdicts,
            duration,
        }
    }

    pub fn all_correct(&self) -> bool {
        self.verdicts.iter().all(|v| v.verdict == Verdict::Correct)
    }

    pub fn verdict(&self, round: u64) -> Option<Verdict> {
        self.verdicts
            .iter()
            .find(|v| v.round == round)
            .map(|v| v.verdict)
    }

    /// Per-round CSV followed by a `total` row. Bytes columns appear in
    /// bytes mode only.
    pub fn to_csv(&self) -> String {
        let bytes = self.mode == AccountingMode::Bytes;
        let mut out = String::from("round,client_to_server_msgs,server_to_client_msgs");
        if bytes {
            out.push_str(",client_to_server_bytes,server_to_client_bytes");
        }
        out.push_str(",verdict\n");
        let row = |out: &mut String, label: &str, up: &Tally, down: &Tally, verdict: &str| {
            let _ = write!(out, "{label},{},{}", up.messages, down.messages);
            if bytes {
                let _ = write!(out, ",{},{}", up.bytes, down.bytes);
            }
            let _ = writeln!(out, ",{verdict}");
        };
        for rc in &self.per_round {
            let verdict = if rc.round == 0 {
                "setup"
            } else {
                self.verdict(rc.round).map_or("", Verdict::as_str)
            };
            row(
                &mut out,
                &rc.round.to_string(),
                &rc.client_to_server,
                &rc.server_to_client,
                verdict,
            );
        }
        let overall = if self.all_correct() {
            "correct"
        } else {
            "mixed"
        };
        row(
            &mut out,
            "total",
            &self.client_to_server,
            &self.server_to_client,
            overall,
        );
        out
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "protocol {} | clients {} | rounds {}{}",
            self.protocol,
            self.clients,
            self.rounds,
            self.offset
                .map(|o| format!(" | offset {o}"))
                .unwrap_or_default()
        );
        let _ = writeln!(
            s,
            "client -> server: {} messages ({} bytes)",
            self.client_to_server.messages, self.client_to_server.bytes
        );
        let _ = writeln!(
            s,
            "server -> client: {} messages ({} bytes)",
            self.server_to_client.messages, self.server_to_client.bytes
        );
        let count = |v: Verdict| self.verdicts.iter().filter(|x| x.verdict == v).count();
        let _ = writeln!(
            s,
            "rounds correct {} / incorrect {} / aborted {}",
            count(Verdict::Correct),
            count(Verdict::Incorrect),
            count(Verdict::Aborted)
        );
        for v in self
            .verdicts
            .iter()
            .filter(|v| v.verdict != Verdict::Correct)
        {
            let _ = writeln!(
                s,
                "  round {}: {}{}",
                v.round,
                v.verdict.as_str(),
                v.detail
                    .as_deref()
                    .map(|d| format!(" ({d})"))
                    .unwrap_or_default()
            );
        }
        s
    }
}
