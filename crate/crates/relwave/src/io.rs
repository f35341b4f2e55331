//! CSV and JSON artifact emission: field snapshots, tabular reports, and
//! per-artifact JSON sidecar manifests.
//!
//! Conventions shared by every writer:
//!
//! * CSV carries tabular/plot data, JSON carries summaries and manifests;
//!   there are no binary formats.
//! * All writes are atomic: content goes to a temporary file in the target
//!   directory which is then renamed over the destination, so a crashed run
//!   never leaves a half-written artifact behind.
//! * Floating-point values are printed with `{:.17e}`, enough digits to
//!   round-trip an `f64` exactly, so identical inputs yield byte-identical
//!   files.
//! * Field snapshots use the columns `x[,y,z],re,im` (physical) or
//!   `kx[,ky,kz],re,im` (spectral); the header row names the representation.
//!   Rows follow the flat lattice order (axis 0 slowest), matching the
//!   in-memory layout of [`ComplexField`].

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dispersion::DispersionTable;
use crate::error::RelwaveError;
use crate::grid::{ComplexField, Representation, SpectralGrid};
use crate::observables::ConservationReport;
use crate::wavefield::ModeAmplitudes;
use crate::Result;

/// Write `bytes` to `path` atomically: a unique temporary file in the same
/// directory is filled, flushed, and renamed over the destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| RelwaveError::Validation(format!("not a file path: {}", path.display())))?;
    let mut tmp = path.to_path_buf();
    tmp.set_file_name(format!(".{}.tmp-{}", file_name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Serialize `value` as pretty-printed JSON (with a trailing newline) and
/// write it atomically.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    write_atomic(path, body.as_bytes())
}

/// Hex-encoded SHA-256 of the bytes that configured a run; embedded in every
/// manifest so artifacts can be traced back to their exact configuration.
pub fn config_hash(config_bytes: &[u8]) -> String {
    let digest = Sha256::digest(config_bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Sidecar manifest path for an artifact: `out.csv` → `out.csv.manifest.json`.
pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".manifest.json");
    artifact.with_file_name(name)
}

/// Provenance record written next to every artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    /// Crate version that produced the artifact.
    pub version: String,
    /// SHA-256 of the effective configuration (resolved config file or the
    /// canonicalized command-line parameters).
    pub config_hash: String,
    /// Subcommand that produced the artifact.
    pub command: String,
    /// File name of the artifact the manifest describes.
    pub artifact: String,
}

impl Manifest {
    pub fn new(command: &str, config_bytes: &[u8], artifact: &Path) -> Self {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash(config_bytes),
            command: command.to_string(),
            artifact: artifact
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        }
    }

    /// Write the manifest to the artifact's sidecar path.
    pub fn write_sidecar(&self, artifact: &Path) -> Result<()> {
        write_json(&sidecar_path(artifact), self)
    }
}

const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];
const K_AXIS_NAMES: [&str; 3] = ["kx", "ky", "kz"];

fn fmt_f64(out: &mut String, v: f64) {
    // 17 significant digits round-trip every f64 exactly.
    let _ = write!(out, "{v:.17e}");
}

/// Render a field snapshot as CSV. The header names the representation
/// through its coordinate columns (`x,…` physical, `kx,…` spectral).
pub fn field_to_csv(field: &ComplexField) -> String {
    let grid = field.grid();
    let dim = grid.dim();
    let names = match field.representation() {
        Representation::Physical => &AXIS_NAMES,
        Representation::Spectral => &K_AXIS_NAMES,
    };
    let mut out = String::new();
    for name in names.iter().take(dim) {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("re,im\n");
    for (flat, value) in field.values().iter().enumerate() {
        let coords = match field.representation() {
            Representation::Physical => grid.x_vec(flat),
            Representation::Spectral => grid.k_vec(flat),
        };
        for &c in coords.iter().take(dim) {
            fmt_f64(&mut out, c);
            out.push(',');
        }
        fmt_f64(&mut out, value.re);
        out.push(',');
        fmt_f64(&mut out, value.im);
        out.push('\n');
    }
    out
}

/// Write a field snapshot CSV atomically.
pub fn write_field_csv(path: &Path, field: &ComplexField) -> Result<()> {
    write_atomic(path, field_to_csv(field).as_bytes())
}

fn parse_f64(token: &str, line: usize, path: &Path) -> Result<f64> {
    token.trim().parse::<f64>().map_err(|_| {
        RelwaveError::Validation(format!(
            "{}:{line}: cannot parse '{token}' as a number",
            path.display()
        ))
    })
}

/// Read a field snapshot CSV, reconstructing the grid from the lattice
/// coordinates. The representation is taken from the header (`x` columns ⇒
/// physical, `kx` columns ⇒ spectral); rows must be in flat lattice order.
pub fn read_field_csv(path: &Path) -> Result<ComplexField> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| RelwaveError::Validation(format!("{}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[cols.len() - 2..] != ["re", "im"] {
        return Err(RelwaveError::Validation(format!(
            "{}: header must be '<coords…>,re,im', got '{header}'",
            path.display()
        )));
    }
    let dim = cols.len() - 2;
    let representation = if cols[..dim] == AXIS_NAMES[..dim] {
        Representation::Physical
    } else if cols[..dim] == K_AXIS_NAMES[..dim] {
        Representation::Spectral
    } else {
        return Err(RelwaveError::Validation(format!(
            "{}: coordinate columns must be x,y,z or kx,ky,kz; got '{header}'",
            path.display()
        )));
    };

    let mut coords: Vec<f64> = Vec::new();
    let mut values: Vec<Complex64> = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(RelwaveError::Validation(format!(
                "{}:{}: expected {} columns, got {}",
                path.display(),
                lineno + 1,
                dim + 2,
                fields.len()
            )));
        }
        // Only the fastest-varying (last) coordinate is needed to infer the
        // lattice spacing; all coordinates are re-validated below.
        coords.push(parse_f64(fields[dim - 1], lineno + 1, path)?);
        let re = parse_f64(fields[dim], lineno + 1, path)?;
        let im = parse_f64(fields[dim + 1], lineno + 1, path)?;
        values.push(Complex64::new(re, im));
    }

    let n_total = values.len();
    let n = (n_total as f64).powf(1.0 / dim as f64).round() as usize;
    if n.pow(dim as u32) != n_total {
        return Err(RelwaveError::Validation(format!(
            "{}: {n_total} rows is not a full {dim}-d lattice",
            path.display()
        )));
    }
    if n_total < 2 {
        return Err(RelwaveError::Validation(format!(
            "{}: a field needs at least 2 samples",
            path.display()
        )));
    }
    // Row 1 differs from row 0 by one step of the fastest axis, which is one
    // `dx` (physical order) or one `dk` (spectral FFT order, k=0 first).
    let step = coords[1] - coords[0];
    if !(step.is_finite() && step > 0.0) {
        return Err(RelwaveError::Validation(format!(
            "{}: coordinate step between the first two rows must be positive",
            path.display()
        )));
    }
    let box_length = match representation {
        Representation::Physical => step * n as f64,
        Representation::Spectral => 2.0 * std::f64::consts::PI / step,
    };
    let grid = SpectralGrid::new(dim, n, box_length)?;

    // Cross-check that the declared lattice coordinates match the
    // reconstructed grid, so shuffled or subsampled files are rejected.
    let tol = 1e-9 * step.abs().max(1.0);
    for (flat, &c) in coords.iter().enumerate() {
        let expected = match representation {
            Representation::Physical => grid.x_vec(flat)[dim - 1],
            Representation::Spectral => grid.k_vec(flat)[dim - 1],
        };
        if (c - expected).abs() > tol {
            return Err(RelwaveError::Validation(format!(
                "{}: row {} coordinate {c} does not match the lattice value {expected}; \
                 rows must be in flat lattice order",
                path.display(),
                flat + 2
            )));
        }
    }
    ComplexField::from_values(grid, values, representation)
}

/// Render a dispersion table as CSV (`k,omega_plus,omega_minus,v_group`).
pub fn dispersion_to_csv(table: &DispersionTable) -> String {
    let mut out = String::from("k,omega_plus,omega_minus,v_group\n");
    for row in &table.rows {
        fmt_f64(&mut out, row.k);
        out.push(',');
        fmt_f64(&mut out, row.omega_plus);
        out.push(',');
        fmt_f64(&mut out, row.omega_minus);
        out.push(',');
        fmt_f64(&mut out, row.v_group);
        out.push('\n');
    }
    out
}

/// Render a branch split as CSV: per-mode wavenumber and both branch
/// amplitudes (`kx,re_aplus,im_aplus,re_aminus,im_aminus`; extra `ky,kz`
/// columns in higher dimensions).
pub fn split_to_csv(amps: &ModeAmplitudes) -> String {
    let grid: &Arc<SpectralGrid> = amps.grid();
    let dim = grid.dim();
    let mut out = String::new();
    for name in K_AXIS_NAMES.iter().take(dim) {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("re_aplus,im_aplus,re_aminus,im_aminus\n");
    for flat in 0..grid.n_total() {
        let k = grid.k_vec(flat);
        for &ka in k.iter().take(dim) {
            fmt_f64(&mut out, ka);
            out.push(',');
        }
        let p = amps.plus()[flat];
        let m = amps.minus()[flat];
        fmt_f64(&mut out, p.re);
        out.push(',');
        fmt_f64(&mut out, p.im);
        out.push(',');
        fmt_f64(&mut out, m.re);
        out.push(',');
        fmt_f64(&mut out, m.im);
        out.push('\n');
    }
    out
}

/// Render a conservation report as CSV, one row per sampled time.
pub fn conservation_to_csv(report: &ConservationReport) -> String {
    let dim = report
        .rows
        .first()
        .map(|r| r.total_momentum.len())
        .unwrap_or(1);
    let mut out = String::from("t,total_norm,total_energy");
    for name in AXIS_NAMES.iter().take(dim) {
        let _ = write!(out, ",total_momentum_{name}");
    }
    out.push_str(",max_continuity_residual,max_energy_residual,max_momentum_residual\n");
    for row in &report.rows {
        fmt_f64(&mut out, row.t);
        out.push(',');
        fmt_f64(&mut out, row.total_norm);
        out.push(',');
        fmt_f64(&mut out, row.total_energy);
        for &p in &row.total_momentum {
            out.push(',');
            fmt_f64(&mut out, p);
        }
        out.push(',');
        fmt_f64(&mut out, row.max_continuity_residual);
        out.push(',');
        fmt_f64(&mut out, row.max_energy_residual);
        out.push(',');
        fmt_f64(&mut out, row.max_momentum_residual);
        out.push('\n');
    }
    out
}
