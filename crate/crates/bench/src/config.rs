//! Flat `key = value` config files. Blank lines and `#` comments are
//! ignored; keys match the long flag names.

use std::path::PathBuf;

use cesa_core::crypto::ParamSet;
use cesa_core::simnet::{AccountingMode, Protocol};

use crate::{parse_list, BenchError, BenchSpec};

/// Environment variable supplying the default master seed.
pub const SEED_ENV: &str = "CESA_SEED";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub protocols: Option<Vec<Protocol>>,
    pub clients: Option<Vec<usize>>,
    pub rounds: Option<u64>,
    pub repetitions: Option<u32>,
    pub seed: Option<u64>,
    pub mode: Option<AccountingMode>,
    pub length: Option<usize>,
    pub ring_bits: Option<u32>,
    pub params: Option<ParamSet>,
    pub offset: Option<usize>,
    pub out: Option<PathBuf>,
}

fn scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, BenchError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| BenchError::Usage(format!("config key `{key}`: {e}")))
}

pub fn parse_config_file(text: &str) -> Result<ConfigFile, BenchError> {
    let mut c = ConfigFile::default();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(BenchError::Usage(format!(
                "config line {}: expected key = value",
                n + 1
            )));
        };
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        match key.as_str() {
            "protocols" => c.protocols = Some(parse_list(value, "protocol")?),
            "clients" => c.clients = Some(parse_list(value, "client count")?),
            "rounds" => c.rounds = Some(scalar(&key, value)?),
            "repetitions" => c.repetitions = Some(scalar(&key, value)?),
            "seed" => c.seed = Some(scalar(&key, value)?),
            "mode" => c.mode = Some(scalar(&key, value)?),
            "length" => c.length = Some(scalar(&key, value)?),
            "ring-bits" => c.ring_bits = Some(scalar(&key, value)?),
            "params" => c.params = Some(scalar(&key, value)?),
            "offset" => c.offset = Some(scalar(&key, value)?),
            "out" => c.out = Some(PathBuf::from(value)),
            other => return Err(BenchError::Usage(format!("unknown config key `{other}`"))),
        }
    }
    Ok(c)
}

impl ConfigFile {
    /// Overrides `spec` with every key this file sets.
    pub fn apply(&self, spec: &mut BenchSpec) {
        if let Some(v) = &self.protocols {
            spec.protocols = v.clone();
        }
        if let Some(v) = &self.clients {
            spec.clients = v.clone();
        }
        if let Some(v) = self.rounds {
            spec.rounds = v;
        }
        if let Some(v) = self.repetitions {
            spec.repetitions = v;
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.mode {
            spec.mode = v;
        }
        if let Some(v) = self.length {
            spec.model_len = v;
        }
        if let Some(v) = self.ring_bits {
            spec.ring_bits = v;
        }
        if let Some(v) = self.params {
            spec.params = v;
        }
        if self.offset.is_some() {
            spec.offset = self.offset;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_applies() {
        let c = parse_config_file(
            "# sweep\nprotocols = cesa\nclients = 7, 9\nrounds=3\nring_bits = 16\nmode = bytes # trailing\n",
        )
        .unwrap();
        let mut spec = BenchSpec::default();
        c.apply(&mut spec);
        assert_eq!(spec.protocols, vec![Protocol::Cesa]);
        assert_eq!(spec.clients, vec![7, 9]);
        assert_eq!(spec.rounds, 3);
        assert_eq!(spec.ring_bits, 16);
        assert_eq!(spec.mode, AccountingMode::Bytes);
        assert_eq!(spec.seed, 0);
    }

    #[test]
    fn rejects_junk() {
        assert!(parse_config_file("rounds").is_err());
        assert!(parse_config_file("colour = red").is_err());
        assert!(parse_config_file("rounds = many").is_err());
    }
}
