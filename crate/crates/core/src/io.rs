//! File formats: binary wavefunction snapshots and CSV density profiles.
//!
//! Snapshot layout (little endian): 4 magic bytes, `u32 n_points`,
//! `f64 z_min`, `f64 z_max`, `f64 time`, then the interleaved payload.
//! `QKT1` carries `Re ψ₂, Im ψ₂, Re ψ₁, Im ψ₁` per point, `QKS1` carries `Re ψ, Im ψ`.

use num_complex::Complex64;

use crate::dirac::{SlowPotential, SpinorField};
use crate::error::{Error, Result};
use crate::field::GridSpec;
use crate::schrodinger::ScalarField;

pub const SPINOR_MAGIC: &[u8; 4] = b"QKT1";
pub const SCALAR_MAGIC: &[u8; 4] = b"QKS1";
const HEADER_LEN: usize = 4 + 4 + 3 * 8;

/// Float with 12 significant digits.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

fn header(magic: &[u8; 4], grid: &GridSpec, time: f64, payload_f64s: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * payload_f64s);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(grid.n_points() as u32).to_le_bytes());
    out.extend_from_slice(&grid.z_min().to_le_bytes());
    out.extend_from_slice(&grid.z_max().to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    out
}

fn push_complex(out: &mut Vec<u8>, x: Complex64) {
    out.extend_from_slice(&x.re.to_le_bytes());
    out.extend_from_slice(&x.im.to_le_bytes());
}

pub fn encode_spinor(f: &SpinorField) -> Vec<u8> {
    let mut out = header(SPINOR_MAGIC, &f.grid, f.time, 4 * f.grid.n_points());
    for (u, l) in f.psi_upper.iter().zip(&f.psi_lower) {
        push_complex(&mut out, *u);
        push_complex(&mut out, *l);
    }
    out
}

pub fn encode_scalar(f: &ScalarField) -> Vec<u8> {
    let mut out = header(SCALAR_MAGIC, &f.grid, f.time, 2 * f.grid.n_points());
    for x in &f.psi {
        push_complex(&mut out, *x);
    }
    out
}

struct Decoded {
    grid: GridSpec,
    time: f64,
    values: Vec<f64>,
}

fn decode(bytes: &[u8], magic: &[u8; 4], per_point: usize) -> Result<Decoded> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Snapshot(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != magic {
        return Err(Error::Snapshot(format!("bad magic {:?}", &bytes[..4])));
    }
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let grid = GridSpec::new(f64_at(8), f64_at(16), n).map_err(|e| Error::Snapshot(e.to_string()))?;
    let time = f64_at(24);
    let expected = HEADER_LEN + 8 * per_point * n;
    if bytes.len() != expected {
        return Err(Error::Snapshot(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let values =
        bytes[HEADER_LEN..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(Decoded { grid, time, values })
}

/// Absorbed tallies are not part of the format and come back as zero.
pub fn decode_spinor(bytes: &[u8]) -> Result<SpinorField> {
    let d = decode(bytes, SPINOR_MAGIC, 4)?;
    let (psi_upper, psi_lower) =
        d.values.chunks_exact(4).map(|c| (Complex64::new(c[0], c[1]), Complex64::new(c[2], c[3]))).unzip();
    Ok(SpinorField { grid: d.grid, psi_upper, psi_lower, time: d.time, absorbed_left: 0.0, absorbed_right: 0.0 })
}

pub fn decode_scalar(bytes: &[u8]) -> Result<ScalarField> {
    let d = decode(bytes, SCALAR_MAGIC, 2)?;
    let psi = d.values.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok(ScalarField { grid: d.grid, psi, time: d.time, absorbed_left: 0.0, absorbed_right: 0.0 })
}

/// `z,density_upper,density_lower,V_slow`, one row per grid point (every `stride`-th).
pub fn spinor_density_csv(f: &SpinorField, pot: &SlowPotential, stride: usize) -> String {
    let mut out = String::from("z,density_upper,density_lower,V_slow\n");
    for i in (0..f.grid.n_points()).step_by(stride.max(1)) {
        let z = f.grid.z(i);
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(z),
            fmt_sig(f.psi_upper[i].norm_sqr()),
            fmt_sig(f.psi_lower[i].norm_sqr()),
            fmt_sig(pot.eval(z))
        ));
    }
    out
}

/// `z,density,V_slow` for the scalar field.
pub fn scalar_density_csv(f: &ScalarField, pot: &SlowPotential, stride: usize) -> String {
    let mut out = String::from("z,density,V_slow\n");
    for i in (0..f.grid.n_points()).step_by(stride.max(1)) {
        let z = f.grid.z(i);
        out.push_str(&format!("{},{},{}\n", fmt_sig(z), fmt_sig(f.psi[i].norm_sqr()), fmt_sig(pot.eval(z))));
    }
    out
}
