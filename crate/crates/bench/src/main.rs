use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use cesa_bench::{
    cmd_bench, cmd_explain, cmd_verify, parse_config_file, parse_list, BenchError, BenchSpec,
    DEFAULT_VERIFY_SIZES, EXIT_OK, SEED_ENV,
};
use cesa_core::crypto::ParamSet;
use cesa_core::simnet::{AccountingMode, Protocol};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cesa-bench",
    version,
    about = "Message-count benchmarks and checks for SecAgg and CESA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep client counts and write one CSV row per (protocol, clients).
    Bench {
        /// Comma-separated: secagg, cesa, plain.
        #[arg(long)]
        protocols: Option<String>,
        /// Comma-separated client counts.
        #[arg(long)]
        clients: Option<String>,
        #[arg(long)]
        rounds: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// paper | bytes
        #[arg(long)]
        mode: Option<AccountingMode>,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Model vector length.
        #[arg(long)]
        length: Option<usize>,
        #[arg(long)]
        ring_bits: Option<u32>,
        /// toy | modp2048
        #[arg(long)]
        params: Option<ParamSet>,
        #[arg(long)]
        repetitions: Option<u32>,
        /// CESA offset; drawn from the seed when absent.
        #[arg(long)]
        offset: Option<usize>,
        /// Flat key = value file; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the property suite end to end.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated client counts, each at least 7.
        #[arg(long)]
        sizes: Option<String>,
    },
    /// Print the pair graph and an annotated one-round trace.
    Explain {
        #[arg(long)]
        protocol: Protocol,
        #[arg(long)]
        clients: usize,
        #[arg(long)]
        offset: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn env_seed() -> Result<Option<u64>, BenchError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| BenchError::Usage(format!("{SEED_ENV}=`{v}`: {e}"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<i32, BenchError> {
    match cli.command {
        Command::Bench {
            protocols,
            clients,
            rounds,
            seed,
            mode,
            out,
            length,
            ring_bits,
            params,
            repetitions,
            offset,
            config,
        } => {
            let mut spec = BenchSpec::default();
            if let Some(s) = env_seed()? {
                spec.seed = s;
            }
            let mut out_path = None;
            if let Some(path) = config {
                let text = fs::read_to_string(&path)
                    .map_err(|e| BenchError::Usage(format!("{}: {e}", path.display())))?;
                let file = parse_config_file(&text)?;
                file.apply(&mut spec);
                out_path = file.out;
            }
            if let Some(p) = protocols {
                spec.protocols = parse_list(&p, "protocol")?;
            }
            if let Some(c) = clients {
                spec.clients = parse_list(&c, "client count")?;
            }
            spec.rounds = rounds.unwrap_or(spec.rounds);
            spec.seed = seed.unwrap_or(spec.seed);
            spec.mode = mode.unwrap_or(spec.mode);
            spec.model_len = length.unwrap_or(spec.model_len);
            spec.ring_bits = ring_bits.unwrap_or(spec.ring_bits);
            spec.params = params.unwrap_or(spec.params);
            spec.repetitions = repetitions.unwrap_or(spec.repetitions);
            spec.offset = offset.or(spec.offset);
            let out_path = out.or(out_path);

            let (csv, table) = cmd_bench(&spec)?;
            match out_path {
                Some(path) => {
                    fs::write(&path, csv)?;
                    print!("{table}");
                    println!("wrote {}", path.display());
                }
                None => {
                    print!("{csv}");
                    eprint!("{table}");
                }
            }
            Ok(EXIT_OK)
        }
        Command::Verify { seed, sizes } => {
            let seed = seed.or(env_seed()?).unwrap_or(0);
            let sizes = match sizes {
                Some(s) => parse_list(&s, "size")?,
                None => DEFAULT_VERIFY_SIZES.to_vec(),
            };
            let report = cmd_verify(seed, &sizes)?;
            print!("{}", report.render());
            if report.passed() {
                Ok(EXIT_OK)
            } else {
                Err(BenchError::Verification(report.failures().join(", ")))
            }
        }
        Command::Explain {
            protocol,
            clients,
            offset,
            seed,
        } => {
            let seed = seed.or(env_seed()?).unwrap_or(0);
            print!("{}", cmd_explain(protocol, clients, offset, seed)?);
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("cesa-bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
