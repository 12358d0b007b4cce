//! Coefficient/solution pair datasets and their binary container.
//!
//! A dataset is `n` pairs drawn from one [`PdeSpec`]: the coefficient (or
//! initial condition) is a seeded GRF draw, the solution comes from the
//! matching solver. Pairs are audited against [`pde_residual`] before they
//! are written.
//!
//! File layout (all little-endian):
//!
//! ```text
//! "APDE" | version u32 | kind u8 | height u32 | width u32 | count u64
//! then per pair: height·width f32 coefficient, height·width f32 solution
//! ```
//!
//! Values are stored as f32; generation and training run in f64. Residual
//! audits therefore run on the f64 pairs before quantization — the stencil
//! residual divides by h², which amplifies f32 rounding above the audit
//! tolerance on the stored copies.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::par::map_indexed;
use crate::pde::{pde_residual, PdeKind, PdeSpec};
use crate::seeds;

pub const DATASET_MAGIC: &[u8; 4] = b"APDE";
pub const DATASET_VERSION: u32 = 1;

/// One coefficient/solution pair on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub coefficient: Field,
    pub solution: Field,
}

impl PairedSample {
    /// Structural checks: matching grids, finite values, and a zero
    /// boundary ring on Dirichlet solutions.
    pub fn validate(&self, kind: PdeKind) -> Result<()> {
        if self.coefficient.size() != self.solution.size() {
            return Err(Error::config("pair grids must match"));
        }
        if !self.coefficient.is_finite() || !self.solution.is_finite() {
            return Err(Error::numeric("pair contains non-finite values"));
        }
        if kind.is_dirichlet() {
            let n = self.solution.size();
            let ring_ok = (0..n).all(|i| {
                self.solution.at(0, i) == 0.0
                    && self.solution.at(n - 1, i) == 0.0
                    && self.solution.at(i, 0) == 0.0
                    && self.solution.at(i, n - 1) == 0.0
            });
            if !ring_ok {
                return Err(Error::numeric("Dirichlet solution has a nonzero boundary ring"));
            }
        }
        Ok(())
    }
}

/// Residual level a freshly generated pair must meet. Dirichlet solves are
/// algebraically exact, so machine-level; the Navier–Stokes audit measures
/// time-discretization self-consistency and is bounded, not tiny.
pub fn audit_tolerance(kind: PdeKind) -> f64 {
    match kind {
        PdeKind::NavierStokes => 5e-2,
        _ => 1e-6,
    }
}

/// Generate the pair with index `index` of a dataset seeded by `seed`.
pub fn generate_pair(spec: &PdeSpec, seed: u64, index: u64) -> Result<PairedSample> {
    let coeff = spec.draw_coefficient(seeds::derive(seed, seeds::stream::PAIR, index));
    let solution = spec.solve(&coeff)?;
    let pair = PairedSample {
        coefficient: coeff,
        solution,
    };
    pair.validate(spec.kind)?;
    Ok(pair)
}

/// Generate `n` pairs (data-parallel across samples, deterministic in
/// `seed` regardless of thread count).
pub fn generate_pairs(spec: &PdeSpec, n: usize, seed: u64) -> Result<Vec<PairedSample>> {
    map_indexed(n, |i| generate_pair(spec, seed, i as u64))
        .into_iter()
        .collect()
}

/// Summary of one generation run.
#[derive(Debug, Clone, Copy)]
pub struct GenerationReport {
    pub count: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
}

/// Generate `n` pairs at `resolution`, audit each against the residual
/// tolerance, and write them to `path`. Byte-identical output for equal
/// arguments.
pub fn generate_dataset(
    spec: &PdeSpec,
    n: usize,
    resolution: usize,
    seed: u64,
    path: &Path,
) -> Result<GenerationReport> {
    let mut spec = spec.clone();
    spec.resolution = resolution;

    let pairs = generate_pairs(&spec, n, seed)?;
    let residuals: Vec<f64> = map_indexed(n, |i| {
        pde_residual(&spec, &pairs[i].coefficient, &pairs[i].solution)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let tol = audit_tolerance(spec.kind);
    let max_residual = residuals.iter().cloned().fold(0.0f64, f64::max);
    if max_residual > tol {
        return Err(Error::numeric(format!(
            "residual audit failed: max {max_residual:.3e} exceeds {tol:.1e}"
        )));
    }
    let mean_residual = residuals.iter().sum::<f64>() / residuals.len().max(1) as f64;

    write_dataset(path, spec.kind, &pairs)?;
    Ok(GenerationReport {
        count: n,
        max_residual,
        mean_residual,
    })
}

fn field_to_f32_bytes(field: &Field, out: &mut Vec<u8>) {
    for &v in field.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

/// Write pairs to the binary container. Values are quantized to f32.
pub fn write_dataset(path: &Path, kind: PdeKind, pairs: &[PairedSample]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::config("refusing to write an empty dataset"));
    }
    let size = pairs[0].coefficient.size();
    for p in pairs {
        if p.coefficient.size() != size || p.solution.size() != size {
            return Err(Error::config("all pairs in a dataset must share one grid"));
        }
    }

    let mut buf = Vec::with_capacity(25 + pairs.len() * size * size * 8);
    buf.extend_from_slice(DATASET_MAGIC);
    buf.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    buf.push(kind.tag());
    buf.extend_from_slice(&(size as u32).to_le_bytes());
    buf.extend_from_slice(&(size as u32).to_le_bytes());
    buf.extend_from_slice(&(pairs.len() as u64).to_le_bytes());
    for p in pairs {
        field_to_f32_bytes(&p.coefficient, &mut buf);
        field_to_f32_bytes(&p.solution, &mut buf);
    }

    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn read_exact_or_format(r: &mut impl Read, buf: &mut [u8], path: &Path, what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::format(path.display().to_string(), format!("truncated {what}")))
}

fn read_f32_field(r: &mut impl Read, size: usize, path: &Path) -> Result<Field> {
    let mut bytes = vec![0u8; size * size * 4];
    read_exact_or_format(r, &mut bytes, path, "field data")?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(Field::from_vec(size, data))
}

/// Read a dataset container back into f64 pairs.
pub fn read_dataset(path: &Path) -> Result<(PdeKind, Vec<PairedSample>)> {
    let mut r = BufReader::new(File::open(path)?);
    let disp = path.display().to_string();

    let mut magic = [0u8; 4];
    read_exact_or_format(&mut r, &mut magic, path, "magic")?;
    if &magic != DATASET_MAGIC {
        return Err(Error::format(disp, "bad magic, not a dataset file"));
    }
    let mut u32buf = [0u8; 4];
    read_exact_or_format(&mut r, &mut u32buf, path, "version")?;
    let version = u32::from_le_bytes(u32buf);
    if version != DATASET_VERSION {
        return Err(Error::format(disp, format!("unsupported version {version}")));
    }
    let mut tag = [0u8; 1];
    read_exact_or_format(&mut r, &mut tag, path, "kind tag")?;
    let kind = PdeKind::from_tag(tag[0])
        .ok_or_else(|| Error::format(disp.clone(), format!("unknown PDE kind tag {}", tag[0])))?;
    read_exact_or_format(&mut r, &mut u32buf, path, "height")?;
    let h = u32::from_le_bytes(u32buf) as usize;
    read_exact_or_format(&mut r, &mut u32buf, path, "width")?;
    let w = u32::from_le_bytes(u32buf) as usize;
    if h != w || !h.is_power_of_two() || h < 2 {
        return Err(Error::format(disp, format!("unsupported grid {h}x{w}")));
    }
    let mut u64buf = [0u8; 8];
    read_exact_or_format(&mut r, &mut u64buf, path, "count")?;
    let n = u64::from_le_bytes(u64buf) as usize;

    let mut pairs = Vec::with_capacity(n);
    for _ in 0..n {
        let coefficient = read_f32_field(&mut r, h, path)?;
        let solution = read_f32_field(&mut r, h, path)?;
        pairs.push(PairedSample {
            coefficient,
            solution,
        });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::format(disp, "trailing bytes after last pair"));
    }
    Ok((kind, pairs))
}
