use std::fmt::Write as _;

use cesa_core::cesa::{fp_index, sp_index};
use cesa_core::simnet::{
    count_messages, run_session, session_offset, DirectionFilter, MessageFilter, MessageLedger,
    Protocol, SessionConfig,
};

use crate::BenchError;

const SECAGG_STEPS: [(&str, &str); 8] = [
    ("secagg.step1", "key generation and upload"),
    ("", "no separate label; key upload is counted under step 1"),
    ("secagg.step3", "public key broadcast"),
    ("secagg.step4", "encrypted share upload"),
    ("secagg.step5", "share routing"),
    ("secagg.step6", "masked model upload"),
    ("secagg.step7", "survivor set and share reveal"),
    ("secagg.step8", "unmasking and global model broadcast"),
];

fn counts(ledger: &MessageLedger, round: u64, step: &str) -> (u64, u64, u64) {
    let f = |d| {
        count_messages(
            ledger,
            &MessageFilter::direction(d)
                .with_round(round)
                .with_step(step),
        )
        .messages
    };
    (
        f(DirectionFilter::ClientToServer),
        f(DirectionFilter::ServerUnicast),
        f(DirectionFilter::ServerBroadcast),
    )
}

fn trace_line(out: &mut String, label: &str, note: &str, c: (u64, u64, u64)) {
    let _ = writeln!(
        out,
        "  {label:<18} {:>6} up {:>6} unicast {:>3} broadcast  {note}",
        c.0, c.1, c.2
    );
}

/// Distinct step tags of `round`, in ledger order.
fn steps_of(ledger: &MessageLedger, round: u64) -> Vec<&'static str> {
    let mut steps: Vec<&'static str> = Vec::new();
    for e in ledger.entries().iter().filter(|e| e.round == round) {
        if !steps.contains(&e.step) {
            steps.push(e.step);
        }
    }
    steps
}

/// Pair table (CESA) and an annotated one-round message trace.
pub fn cmd_explain(
    protocol: Protocol,
    clients: usize,
    offset: Option<usize>,
    seed: u64,
) -> Result<String, BenchError> {
    let mut config = SessionConfig::new(protocol, clients, 1);
    config.seed = seed;
    config.model_len = 4;
    config.offset = offset;
    if protocol != Protocol::Cesa && offset.is_some() {
        return Err(BenchError::Usage("--offset only applies to cesa".into()));
    }
    config
        .validate()
        .map_err(|e| BenchError::Usage(e.to_string()))?;

    let mut out = String::new();
    let _ = writeln!(out, "protocol {protocol}, {clients} clients");
    if protocol == Protocol::Cesa {
        let k = session_offset(&config)?;
        config.offset = Some(k);
        let _ = writeln!(out, "\npair graph, offset {k}:");
        for i in 0..clients {
            let _ = writeln!(
                out,
                "  {i} -> FP {}, SP {}",
                fp_index(i, k, clients),
                sp_index(i, k, clients)
            );
        }
    }

    let run = run_session(&config)?;
    let ledger = &run.ledger;
    let _ = writeln!(out, "\nsetup (round 0):");
    for step in steps_of(ledger, 0) {
        trace_line(&mut out, step, "", counts(ledger, 0, step));
    }
    let _ = writeln!(out, "\nround 1:");
    if protocol == Protocol::SecAgg {
        for (n, (step, note)) in SECAGG_STEPS.iter().enumerate() {
            let label = format!("({}) {}", n + 1, step);
            let c = if step.is_empty() {
                (0, 0, 0)
            } else {
                counts(ledger, 1, step)
            };
            trace_line(&mut out, &label, note, c);
        }
    } else {
        for step in steps_of(ledger, 1) {
            trace_line(&mut out, step, "", counts(ledger, 1, step));
        }
    }
    let r = &run.report;
    let _ = writeln!(
        out,
        "\ntotal: {} client->server, {} server->client; round 1 {}",
        r.client_to_server.messages,
        r.server_to_client.messages,
        r.verdict(1).map_or("-", |v| v.as_str())
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cesa_pair_table() {
        let s = cmd_explain(Protocol::Cesa, 7, Some(2), 0).unwrap();
        assert!(s.contains("  0 -> FP 2, SP 5\n"), "{s}");
        assert!(s.contains("  6 -> FP 1, SP 4\n"), "{s}");
        assert!(matches!(
            cmd_explain(Protocol::Cesa, 7, Some(1), 0),
            Err(BenchError::Usage(_))
        ));
        assert!(matches!(
            cmd_explain(Protocol::Cesa, 6, None, 0),
            Err(BenchError::Usage(_))
        ));
    }

    #[test]
    fn secagg_eight_steps() {
        let s = cmd_explain(Protocol::SecAgg, 3, None, 0).unwrap();
        let steps: Vec<&str> = s
            .lines()
            .filter(|l| l.trim_start().starts_with('('))
            .collect();
        assert_eq!(steps.len(), 8, "{s}");
        assert!(steps[0].contains("     6 up"), "{s}");
        assert!(steps[3].contains("     6 up"), "{s}");
        assert!(steps[4].contains("     6 unicast"), "{s}");
    }
}
