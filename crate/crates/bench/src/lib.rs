//! Benchmark sweeps, the end-to-end verification suite and annotated
//! protocol traces, shared by the `cesa-bench` binary and its tests.

mod config;
mod explain;
mod verify;

use std::fmt::Write as _;
use std::time::Duration;

use cesa_core::crypto::ParamSet;
use cesa_core::simnet::{run_session, AccountingMode, Protocol, SessionConfig, SimError};
use thiserror::Error;

pub use config::{parse_config_file, ConfigFile, SEED_ENV};
pub use explain::cmd_explain;
pub use verify::{cmd_verify, Check, VerifyReport, DEFAULT_VERIFY_SIZES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => EXIT_USAGE,
            BenchError::Verification(_) => EXIT_VERIFY,
            BenchError::Io(_) | BenchError::Sim(_) => EXIT_FAILURE,
        }
    }
}

/// One benchmark sweep: every protocol at every client count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchSpec {
    pub protocols: Vec<Protocol>,
    pub clients: Vec<usize>,
    pub rounds: u64,
    pub repetitions: u32,
    pub seed: u64,
    pub mode: AccountingMode,
    pub model_len: usize,
    pub ring_bits: u32,
    pub params: ParamSet,
    pub offset: Option<usize>,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            protocols: vec![Protocol::SecAgg, Protocol::Cesa],
            clients: vec![10, 20, 30, 40, 50],
            rounds: 100,
            repetitions: 1,
            seed: 0,
            mode: AccountingMode::Paper,
            model_len: 8,
            ring_bits: 64,
            params: ParamSet::Toy,
            offset: None,
        }
    }
}

impl BenchSpec {
    pub fn session(&self, protocol: Protocol, clients: usize) -> SessionConfig {
        SessionConfig {
            protocol,
            clients,
            rounds: self.rounds,
            model_len: self.model_len,
            ring_bits: self.ring_bits,
            params: self.params,
            seed: self.seed,
            offset: if protocol == Protocol::Cesa {
                self.offset
            } else {
                None
            },
            mode: self.mode,
            ..SessionConfig::default()
        }
    }

    /// Checks every sweep point before anything runs.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.repetitions == 0 {
            return Err(BenchError::Usage("repetitions must be at least 1".into()));
        }
        for &p in &self.protocols {
            for &c in &self.clients {
                self.session(p, c)
                    .validate()
                    .map_err(|e| BenchError::Usage(e.to_string()))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRow {
    pub protocol: Protocol,
    pub clients: usize,
    pub rounds: u64,
    pub client_to_server_msgs: u64,
    pub server_to_client_msgs: u64,
    pub client_to_server_bytes: u64,
    pub server_to_client_bytes: u64,
    pub all_correct: bool,
    /// Mean over repetitions.
    pub mean_duration: Duration,
}

pub fn csv_header(mode: AccountingMode) -> &'static str {
    match mode {
        AccountingMode::Paper => {
            "protocol,clients,rounds,client_to_server_msgs,server_to_client_msgs"
        }
        AccountingMode::Bytes => {
            "protocol,clients,rounds,client_to_server_msgs,server_to_client_msgs,\
             client_to_server_bytes,server_to_client_bytes"
        }
    }
}

/// Runs the sweep in protocol-major order. Repetitions re-run the same
/// configuration for timing; their counts must agree.
pub fn run_bench(spec: &BenchSpec) -> Result<Vec<BenchRow>, BenchError> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &protocol in &spec.protocols {
        for &clients in &spec.clients {
            let config = spec.session(protocol, clients);
            let mut total = Duration::ZERO;
            let mut first: Option<BenchRow> = None;
            for _ in 0..spec.repetitions {
                let run = run_session(&config)?;
                total += run.report.duration;
                let r = &run.report;
                let row = BenchRow {
                    protocol,
                    clients,
                    rounds: spec.rounds,
                    client_to_server_msgs: r.client_to_server.messages,
                    server_to_client_msgs: r.server_to_client.messages,
                    client_to_server_bytes: r.client_to_server.bytes,
                    server_to_client_bytes: r.server_to_client.bytes,
                    all_correct: r.all_correct(),
                    mean_duration: Duration::ZERO,
                };
                match &first {
                    None => first = Some(row),
                    Some(f)
                        if f.client_to_server_msgs != row.client_to_server_msgs
                            || f.server_to_client_msgs != row.server_to_client_msgs =>
                    {
                        return Err(BenchError::Verification(format!(
                            "{protocol} with {clients} clients gave different counts across repetitions"
                        )));
                    }
                    Some(_) => {}
                }
            }
            let mut row = first.expect("at least one repetition");
            row.mean_duration = total / spec.repetitions;
            rows.push(row);
        }
    }
    Ok(rows)
}

/// CSV for `rows`; timing is left out so output is reproducible.
pub fn render_csv(rows: &[BenchRow], mode: AccountingMode) -> String {
    let mut out = String::from(csv_header(mode));
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            r.protocol, r.clients, r.rounds, r.client_to_server_msgs, r.server_to_client_msgs
        );
        if mode == AccountingMode::Bytes {
            let _ = write!(
                out,
                ",{},{}",
                r.client_to_server_bytes, r.server_to_client_bytes
            );
        }
        out.push('\n');
    }
    out
}

/// Human-readable table with verdicts and timings.
pub fn render_table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:<8} {:>7} {:>6} {:>14} {:>14} {:>8} {:>10}\n",
        "protocol", "clients", "rounds", "client->server", "server->client", "correct", "time/run"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<8} {:>7} {:>6} {:>14} {:>14} {:>8} {:>9.1?}",
            r.protocol.as_str(),
            r.clients,
            r.rounds,
            r.client_to_server_msgs,
            r.server_to_client_msgs,
            if r.all_correct { "yes" } else { "no" },
            r.mean_duration
        );
    }
    out
}

/// Runs the sweep and returns `(csv, table)`.
pub fn cmd_bench(spec: &BenchSpec) -> Result<(String, String), BenchError> {
    let rows = run_bench(spec)?;
    Ok((render_csv(&rows, spec.mode), render_table(&rows)))
}

/// Splits a comma-separated list, ignoring blanks.
pub fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, BenchError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse::<T>()
                .map_err(|e| BenchError::Usage(format!("bad {what} `{x}`: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sweep_is_header_only() {
        let spec = BenchSpec {
            clients: vec![],
            ..BenchSpec::default()
        };
        let (csv, _) = cmd_bench(&spec).unwrap();
        assert_eq!(csv, format!("{}\n", csv_header(AccountingMode::Paper)));
    }

    #[test]
    fn small_cesa_sweep_rejected_before_running() {
        let spec = BenchSpec {
            protocols: vec![Protocol::SecAgg, Protocol::Cesa],
            clients: vec![10, 6],
            ..BenchSpec::default()
        };
        let err = run_bench(&spec).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn lists() {
        assert_eq!(
            parse_list::<usize>("10, 20,,30", "clients").unwrap(),
            vec![10, 20, 30]
        );
        assert!(parse_list::<usize>("10,x", "clients").is_err());
        assert_eq!(
            parse_list::<Protocol>("cesa,secagg", "protocol").unwrap(),
            vec![Protocol::Cesa, Protocol::SecAgg]
        );
    }
}
