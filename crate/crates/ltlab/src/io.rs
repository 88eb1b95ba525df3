//! Grid file I/O: a JSON sidecar (`<base>.json`) describing the grid plus
//! a raw little-endian binary array (`<base>.bin`), row-major. Complex
//! fields store interleaved re/im f64 pairs (`dtype: "c128"`), masks store
//! one byte per cell (`dtype: "u8"`), and N-body tensors add an `"N"`
//! field to the sidecar.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoxSpec, DomainMask, GridFunction};
use crate::nbody::{NBodyState, StateData};

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    d: usize,
    points: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    dtype: String,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n_particles: Option<usize>,
}

/// Strip a trailing `.bin` / `.json` so both files share one base path.
pub fn base_path(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn write_sidecar(base: &Path, sc: &Sidecar) -> Result<()> {
    let mut f = fs::File::create(base.with_extension("json"))?;
    serde_json::to_writer_pretty(&mut f, sc)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn read_sidecar(base: &Path) -> Result<Sidecar> {
    let text = fs::read_to_string(base.with_extension("json"))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_complex_bin(base: &Path, values: &[Complex64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 16);
    for v in values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    fs::write(base.with_extension("bin"), buf)?;
    Ok(())
}

fn read_complex_bin(base: &Path, expect: usize) -> Result<Vec<Complex64>> {
    let mut buf = Vec::new();
    fs::File::open(base.with_extension("bin"))?.read_to_end(&mut buf)?;
    if buf.len() != expect * 16 {
        return Err(Error::config(format!(
            "binary payload is {} bytes, expected {}",
            buf.len(),
            expect * 16
        )));
    }
    let mut out = Vec::with_capacity(expect);
    for chunk in buf.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        out.push(Complex64::new(re, im));
    }
    Ok(out)
}

pub fn write_grid_function(path: &Path, g: &GridFunction) -> Result<()> {
    let base = base_path(path);
    write_sidecar(
        &base,
        &Sidecar {
            d: g.box_spec.d(),
            points: g.box_spec.points().to_vec(),
            lo: g.box_spec.lo().to_vec(),
            hi: g.box_spec.hi().to_vec(),
            dtype: "c128".into(),
            n_particles: None,
        },
    )?;
    write_complex_bin(&base, &g.values)
}

pub fn read_grid_function(path: &Path) -> Result<GridFunction> {
    let base = base_path(path);
    let sc = read_sidecar(&base)?;
    if sc.dtype != "c128" {
        return Err(Error::config(format!("expected dtype c128, got {}", sc.dtype)));
    }
    let box_spec = BoxSpec::new(sc.lo, sc.hi, sc.points)?;
    let values = read_complex_bin(&base, box_spec.total_points())?;
    GridFunction::new(box_spec, values)
}

pub fn write_mask(path: &Path, m: &DomainMask) -> Result<()> {
    let base = base_path(path);
    write_sidecar(
        &base,
        &Sidecar {
            d: m.box_spec.d(),
            points: m.box_spec.points().to_vec(),
            lo: m.box_spec.lo().to_vec(),
            hi: m.box_spec.hi().to_vec(),
            dtype: "u8".into(),
            n_particles: None,
        },
    )?;
    let bytes: Vec<u8> = m.mask.iter().map(|&b| b as u8).collect();
    fs::write(base.with_extension("bin"), bytes)?;
    Ok(())
}

pub fn read_mask(path: &Path) -> Result<DomainMask> {
    let base = base_path(path);
    let sc = read_sidecar(&base)?;
    if sc.dtype != "u8" {
        return Err(Error::config(format!("expected dtype u8, got {}", sc.dtype)));
    }
    let box_spec = BoxSpec::new(sc.lo, sc.hi, sc.points)?;
    let mut buf = Vec::new();
    fs::File::open(base.with_extension("bin"))?.read_to_end(&mut buf)?;
    if buf.len() != box_spec.total_points() {
        return Err(Error::config("mask payload length mismatch"));
    }
    DomainMask::new(box_spec, buf.into_iter().map(|b| b != 0).collect())
}

/// Dense N-body states only; product states are built on demand from
/// their factors and are not persisted.
pub fn write_state(path: &Path, st: &NBodyState) -> Result<()> {
    let base = base_path(path);
    let values = match st.data() {
        StateData::Dense(v) => v,
        StateData::Product(_) => {
            return Err(Error::config("only dense states have a file form"))
        }
    };
    write_sidecar(
        &base,
        &Sidecar {
            d: st.box_spec().d(),
            points: st.box_spec().points().to_vec(),
            lo: st.box_spec().lo().to_vec(),
            hi: st.box_spec().hi().to_vec(),
            dtype: "c128".into(),
            n_particles: Some(st.n_particles()),
        },
    )?;
    write_complex_bin(&base, values)
}

pub fn read_state(path: &Path) -> Result<NBodyState> {
    let base = base_path(path);
    let sc = read_sidecar(&base)?;
    let n = sc
        .n_particles
        .ok_or_else(|| Error::config("sidecar has no N field: not a state file"))?;
    let box_spec = BoxSpec::new(sc.lo, sc.hi, sc.points)?;
    let total = box_spec.total_points().pow(n as u32);
    let values = read_complex_bin(&base, total)?;
    NBodyState::dense(box_spec, n, values)
}

/// Peek at a sidecar to see whether the payload is an N-body state.
pub fn is_state_file(path: &Path) -> Result<bool> {
    let sc = read_sidecar(&base_path(path))?;
    Ok(sc.n_particles.is_some())
}
