use std::path::Path;

use super::{read_bytes, write_bytes, Reader, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::gaussian::GaussianStats;
use crate::linalg::SpdMatrix;

pub const STATS_MAGIC: [u8; 4] = *b"GOTS";

pub fn encode_stats(stats: &GaussianStats) -> Vec<u8> {
    let m = stats.dim();
    let mut out = Vec::with_capacity(20 + 8 * m * (m + 1));
    out.extend_from_slice(&STATS_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m as u32).to_le_bytes());
    out.extend_from_slice(&stats.n_samples.to_le_bytes());
    for v in stats.mean.iter().chain(&stats.cov.to_row_major()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses a stats file; the covariance must pass [`SpdMatrix::new`].
pub fn decode_stats(bytes: &[u8]) -> Result<GaussianStats> {
    let mut r = Reader::new(bytes);
    r.magic(STATS_MAGIC)?;
    r.version()?;
    let m = r.u32()? as usize;
    let n_samples = r.u64()?;
    if m == 0 {
        return Err(Error::EmptySamples);
    }
    r.require(8 * m * (m + 1))?;
    let mut values = r
        .take(8 * m * (m + 1))?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mean: Vec<f64> = values.by_ref().take(m).collect();
    let cov: Vec<f64> = values.collect();
    r.finish()?;
    if mean.iter().chain(&cov).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    GaussianStats::new(mean, SpdMatrix::from_row_major(m, &cov)?, n_samples)
}

pub fn read_stats(path: impl AsRef<Path>) -> Result<GaussianStats> {
    decode_stats(&read_bytes(path.as_ref())?)
}

pub fn write_stats(path: impl AsRef<Path>, stats: &GaussianStats) -> Result<()> {
    write_bytes(path.as_ref(), &encode_stats(stats))
}
