//! Field snapshots: an ASCII `key = value` header after the magic line
//! `VBSNAP 1`, a `DATA` line, then little-endian 64-bit floats, row-major,
//! in field order vx, vy, b. The payload carries the spectral coefficients
//! as (re, im) pairs (declared by `payload = spectral`), which is what makes
//! the round trip bit-exact; physical samples are one inverse transform away.

use crate::dynamics::{FluidParams, State};
use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField, VectorField};
use num_complex::Complex;

pub const MAGIC: &str = "VBSNAP 1";

/// Everything needed to interpret the payload.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    pub n: usize,
    pub length: f64,
    pub time: f64,
    pub params: FluidParams,
    pub n_v: usize,
    pub l_b: usize,
    pub n_cut: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct SnapshotMeta<'a> {
    pub params: &'a FluidParams,
    pub n_v: usize,
    pub l_b: usize,
    pub n_cut: u32,
}

fn push_coeffs(bytes: &mut Vec<u8>, field: &SpectralField) {
    for c in field.coefficients() {
        bytes.extend_from_slice(&c.re.to_le_bytes());
        bytes.extend_from_slice(&c.im.to_le_bytes());
    }
}

/// Serialize a state. Deterministic: identical states give identical bytes.
pub fn write_snapshot(state: &State, meta: &SnapshotMeta) -> Vec<u8> {
    let grid = state.grid();
    let mut text = String::new();
    text.push_str(MAGIC);
    text.push('\n');
    text.push_str("payload = spectral\n");
    text.push_str(&format!("n = {}\n", grid.points_per_axis()));
    text.push_str(&format!("length = {}\n", grid.box_length()));
    text.push_str(&format!("time = {}\n", state.time));
    text.push_str(&format!("rho = {}\n", meta.params.rho));
    text.push_str(&format!("nu = {}\n", meta.params.nu));
    text.push_str(&format!("nu1 = {}\n", meta.params.nu1));
    text.push_str(&format!("mu = {}\n", meta.params.mu));
    text.push_str(&format!("sigma = {}\n", meta.params.sigma));
    text.push_str(&format!("n_v = {}\n", meta.n_v));
    text.push_str(&format!("l_b = {}\n", meta.l_b));
    text.push_str(&format!("n_cut = {}\n", meta.n_cut));
    text.push_str("fields = vx vy b\n");
    text.push_str("DATA\n");

    let mut bytes = text.into_bytes();
    push_coeffs(&mut bytes, &state.v.x);
    push_coeffs(&mut bytes, &state.v.y);
    push_coeffs(&mut bytes, &state.b);
    bytes
}

fn read_coeffs(payload: &[u8], offset: usize, count: usize) -> Result<Vec<Complex<f64>>> {
    let need = offset + 16 * count;
    if payload.len() < need {
        return Err(Error::Snapshot(format!(
            "truncated payload: need {need} bytes, have {}",
            payload.len()
        )));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let base = offset + 16 * i;
        let re = f64::from_le_bytes(payload[base..base + 8].try_into().unwrap());
        let im = f64::from_le_bytes(payload[base + 8..base + 16].try_into().unwrap());
        out.push(Complex::new(re, im));
    }
    Ok(out)
}

/// Deserialize a snapshot back into a state and its header.
pub fn read_snapshot(bytes: &[u8]) -> Result<(State, SnapshotHeader)> {
    let data_marker = b"DATA\n";
    let split = bytes
        .windows(data_marker.len())
        .position(|w| w == data_marker)
        .ok_or_else(|| Error::Snapshot("missing DATA marker".into()))?;
    let header_text = std::str::from_utf8(&bytes[..split])
        .map_err(|_| Error::Snapshot("header is not UTF-8".into()))?;
    let payload = &bytes[split + data_marker.len()..];

    let mut lines = header_text.lines();
    let magic = lines.next().unwrap_or("");
    if magic != MAGIC {
        return Err(Error::Snapshot(format!("bad magic line '{magic}' (expected '{MAGIC}')")));
    }

    let mut n = None;
    let mut length = None;
    let mut time = None;
    let mut rho = None;
    let mut nu = None;
    let mut nu1 = None;
    let mut mu = None;
    let mut sigma = None;
    let mut n_v = None;
    let mut l_b = None;
    let mut n_cut = None;
    let mut payload_kind = None;
    let mut fields = None;
    for line in lines {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Snapshot(format!("malformed header line '{line}'")))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |k: &str| Error::Snapshot(format!("invalid header value for {k}: '{value}'"));
        match key {
            "payload" => payload_kind = Some(value.to_string()),
            "n" => n = Some(value.parse::<usize>().map_err(|_| bad(key))?),
            "length" => length = Some(value.parse::<f64>().map_err(|_| bad(key))?),
            "time" => time = Some(value.parse::<f64>().map_err(|_| bad(key))?),
            "rho" => rho = Some(value.parse::<f64>().map_err(|_| bad(key))?),
            "nu" => nu = Some(value.parse::<f64>().map_err(|_| bad(key))?),
            "nu1" => nu1 = Some(value.parse::<f64>().map_err(|_| bad(key))?),
            "mu" => mu = Some(value.parse::<f64>().map_err(|_| bad(key))?),
            "sigma" => sigma = Some(value.parse::<f64>().map_err(|_| bad(key))?),
            "n_v" => n_v = Some(value.parse::<usize>().map_err(|_| bad(key))?),
            "l_b" => l_b = Some(value.parse::<usize>().map_err(|_| bad(key))?),
            "n_cut" => n_cut = Some(value.parse::<u32>().map_err(|_| bad(key))?),
            "fields" => fields = Some(value.to_string()),
            other => return Err(Error::Snapshot(format!("unknown header key '{other}'"))),
        }
    }

    let missing = |k: &str| Error::Snapshot(format!("missing header key '{k}'"));
    let n = n.ok_or_else(|| missing("n"))?;
    let length = length.ok_or_else(|| missing("length"))?;
    let time = time.ok_or_else(|| missing("time"))?;
    let header = SnapshotHeader {
        n,
        length,
        time,
        params: FluidParams::new(
            rho.ok_or_else(|| missing("rho"))?,
            nu.ok_or_else(|| missing("nu"))?,
            nu1.ok_or_else(|| missing("nu1"))?,
            mu.ok_or_else(|| missing("mu"))?,
            sigma.ok_or_else(|| missing("sigma"))?,
        )?,
        n_v: n_v.ok_or_else(|| missing("n_v"))?,
        l_b: l_b.ok_or_else(|| missing("l_b"))?,
        n_cut: n_cut.ok_or_else(|| missing("n_cut"))?,
    };
    if payload_kind.as_deref() != Some("spectral") {
        return Err(Error::Snapshot("unsupported payload kind (expected 'spectral')".into()));
    }
    if fields.as_deref() != Some("vx vy b") {
        return Err(Error::Snapshot("unexpected field order (expected 'vx vy b')".into()));
    }

    let grid = Grid::new(n, length)?;
    let count = grid.num_points();
    if payload.len() != 3 * 16 * count {
        return Err(Error::Snapshot(format!(
            "payload length {} does not match 3 fields of {count} coefficients",
            payload.len()
        )));
    }
    let vx = SpectralField::from_coefficients(grid, read_coeffs(payload, 0, count)?)?;
    let vy = SpectralField::from_coefficients(grid, read_coeffs(payload, 16 * count, count)?)?;
    let b = SpectralField::from_coefficients(grid, read_coeffs(payload, 32 * count, count)?)?;

    let state = State::new(VectorField { x: vx, y: vy }, b, time)?;
    Ok((state, header))
}
