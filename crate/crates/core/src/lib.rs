//! Capacity-achieving transmission over two-polarization channels with
//! polarization-dependent loss (PDL).
//!
//! The channel applies an unknown PDL `γ ∈ [−α, α]` and unknown rotations.
//! A fixed orthogonal precoder spread over two channel uses, followed by an
//! LMMSE (or ZF) equalizer and one step of successive interference
//! cancellation, turns every member of that compound class into two scalar
//! AWGN sub-channels whose SNRs depend on `γ²` only. Their summed capacity
//! equals the compound capacity, so codes built for the scalar AWGN channel
//! can be used as-is.
//!
//! Modules:
//!
//! - [`channel`]: the compound class, channel matrices, parameter sampling.
//! - [`precode`]: the universal precoders and effective channel.
//! - [`equalize`]: equalizers, stream statistics and the SIC receiver.
//! - [`capacity`]: closed-form capacities, penalties and max-min oracles.
//! - [`montecarlo`]: stochastic simulation of the full chain.
//! - [`linkbudget`]: gap and FER composition from AWGN code tables.
//! - [`cli`]: the commands behind the `pdlsic` binary.

pub mod capacity;
pub mod channel;
pub mod cli;
pub mod equalize;
pub mod error;
pub mod linkbudget;
pub mod montecarlo;
pub mod precode;
pub mod rng;

pub use error::{Error, Result};

use nalgebra::DMatrix;

/// Serializes a matrix as a list of rows.
pub(crate) fn serialize_matrix<S: serde::Serializer>(
    m: &DMatrix<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for row in m.row_iter() {
        seq.serialize_element(&row.iter().copied().collect::<Vec<f64>>())?;
    }
    seq.end()
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Runs `f` on a pool capped at `PDLSIC_THREADS` workers when that variable
/// is set, otherwise on the global pool.
pub fn with_thread_limit<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    match std::env::var("PDLSIC_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::Config(format!("PDLSIC_THREADS must be a positive integer, got `{v}`")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}
