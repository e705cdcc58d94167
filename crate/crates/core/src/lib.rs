//! Secure aggregation for federated learning: SecAgg (double masking with
//! additively shared unmasking material) and CESA (two pairwise masks per
//! client), plus a deterministic simulator that runs either protocol end to
//! end and counts every transmitted message.

pub mod cesa;
pub mod crypto;
pub mod secagg;
pub mod simnet;
