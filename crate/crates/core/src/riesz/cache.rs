//! On-disk kernel cache.
//!
//! Layout: `RIESZK1\0`, `N` as little-endian u64, then little-endian f64
//! values `r_max`, `alpha`, scheme code, followed by the `N²` entries in
//! row-major order.

use super::{assemble_kernel, RieszKernelMatrix};
use crate::error::{ChoquardError, Result};
use crate::grid::{GridScheme, RadialGrid};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

const MAGIC: &[u8; 8] = b"RIESZK1\0";

fn scheme_code(s: GridScheme) -> f64 {
    match s {
        GridScheme::UniformMidpoint => 0.0,
        GridScheme::Graded => 1.0,
    }
}

fn cache_err(msg: impl Into<String>) -> ChoquardError {
    ChoquardError::Cache(msg.into())
}

/// File name encoding `(N, R, scheme, alpha)`, with exact bit patterns.
pub fn cache_file_name(grid: &RadialGrid, alpha: f64) -> String {
    format!(
        "riesz-n{}-r{:016x}-{}-a{:016x}.bin",
        grid.len(),
        grid.r_max().to_bits(),
        grid.scheme().as_str(),
        alpha.to_bits()
    )
}

pub fn write_kernel(path: &Path, kernel: &RieszKernelMatrix) -> Result<()> {
    let grid = kernel.grid();
    let mut buf = Vec::with_capacity(16 + 8 * (3 + kernel.entries().len()));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(grid.len() as u64).to_le_bytes());
    for v in [grid.r_max(), kernel.alpha(), scheme_code(grid.scheme())] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in kernel.entries() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    // Write to a sibling temp file first so readers never see a partial file.
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| cache_err(format!("{}: {e}", tmp.display())))?;
    f.write_all(&buf)
        .and_then(|_| f.sync_all())
        .map_err(|e| cache_err(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| cache_err(format!("{}: {e}", path.display())))
}

/// Read a cached kernel for `grid`; the stored key must match exactly.
pub fn read_kernel(path: &Path, grid: &Arc<RadialGrid>, alpha: f64) -> Result<RieszKernelMatrix> {
    let bytes = fs::read(path).map_err(|e| cache_err(format!("{}: {e}", path.display())))?;
    if bytes.len() < 40 || &bytes[..8] != MAGIC {
        return Err(cache_err(format!("{}: bad header", path.display())));
    }
    let word = |k: usize| -> [u8; 8] { bytes[k..k + 8].try_into().expect("8-byte slice") };
    let n = u64::from_le_bytes(word(8)) as usize;
    let key = [
        f64::from_le_bytes(word(16)),
        f64::from_le_bytes(word(24)),
        f64::from_le_bytes(word(32)),
    ];
    let want = [grid.r_max(), alpha, scheme_code(grid.scheme())];
    if n != grid.len()
        || key
            .iter()
            .zip(&want)
            .any(|(a, b)| a.to_bits() != b.to_bits())
    {
        return Err(cache_err(format!("{}: key mismatch", path.display())));
    }
    let payload = &bytes[40..];
    if payload.len() != 8 * n * n {
        return Err(cache_err(format!("{}: truncated payload", path.display())));
    }
    let entries = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    RieszKernelMatrix::from_parts(Arc::clone(grid), alpha, entries)
}

/// Read the kernel from `dir` if present and valid, otherwise assemble it and
/// try to store it. Cache write failures are not fatal.
pub fn load_or_assemble(
    grid: &Arc<RadialGrid>,
    alpha: f64,
    dir: Option<&Path>,
) -> Result<RieszKernelMatrix> {
    let Some(dir) = dir else {
        return assemble_kernel(grid, alpha);
    };
    let path: PathBuf = dir.join(cache_file_name(grid, alpha));
    if let Ok(k) = read_kernel(&path, grid, alpha) {
        return Ok(k);
    }
    let k = assemble_kernel(grid, alpha)?;
    if fs::create_dir_all(dir).is_ok() {
        let _ = write_kernel(&path, &k);
    }
    Ok(k)
}
