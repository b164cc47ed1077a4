//! Binary MPS container and Pauli expectation CSV export.
//!
//! Layout (all integers `u32` little-endian):
//!
//! ```text
//! "MPS1" | N | d | boundary (0 open, 1 periodic, 2 translation invariant)
//! per site: χ_left | d | χ_right | χ_left·d·χ_right × (re: f64, im: f64)
//! ```

use std::io::{Read, Write};

use super::{Boundary, Mps, PHYS};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use crate::tensor::{DenseTensor, C64};

pub const MPS_MAGIC: &[u8; 4] = b"MPS1";

/// Guard against absurd headers in corrupt files.
const MAX_SITE_ENTRIES: usize = 1 << 28;

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_mps(mps: &Mps, w: &mut impl Write) -> Result<()> {
    w.write_all(MPS_MAGIC)?;
    put_u32(w, mps.len())?;
    put_u32(w, PHYS)?;
    let kind = match (mps.boundary(), mps.is_translation_invariant()) {
        (Boundary::Open, _) => 0,
        (Boundary::Periodic, false) => 1,
        (Boundary::Periodic, true) => 2,
    };
    put_u32(w, kind)?;
    for t in mps.tensors() {
        for &d in t.shape() {
            put_u32(w, d)?;
        }
        for z in t.data() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_mps(r: &mut impl Read) -> Result<Mps> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MPS_MAGIC {
        return Err(Error::Format("missing MPS1 header".into()));
    }
    let n = get_u32(r)?;
    let d = get_u32(r)?;
    if d != PHYS {
        return Err(Error::Format(format!("physical dimension {d}, expected {PHYS}")));
    }
    let kind = get_u32(r)?;
    if n == 0 {
        return Err(Error::Format("empty chain".into()));
    }
    let mut tensors = Vec::with_capacity(n);
    for k in 0..n {
        let shape = [get_u32(r)?, get_u32(r)?, get_u32(r)?];
        let len = shape.iter().try_fold(1usize, |acc, &x| acc.checked_mul(x));
        let len = match len {
            Some(l) if l > 0 && l <= MAX_SITE_ENTRIES => l,
            _ => return Err(Error::Format(format!("site {k}: bad shape {shape:?}"))),
        };
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            let re = get_f64(r)?;
            let im = get_f64(r)?;
            data.push(C64::new(re, im));
        }
        tensors.push(DenseTensor::new(shape.to_vec(), data)?);
    }
    match kind {
        0 => Mps::open(tensors),
        1 => Mps::periodic(tensors),
        2 => {
            if tensors.windows(2).any(|w| w[0] != w[1]) {
                return Err(Error::Format("translation-invariant chain with distinct tensors".into()));
            }
            Mps::uniform(&tensors[0], n)
        }
        _ => Err(Error::Format(format!("boundary kind {kind}"))),
    }
}

/// `pauli,expectation` rows for each requested string.
pub fn write_pauli_csv(mps: &Mps, strings: &[PauliString], w: &mut impl Write) -> Result<()> {
    writeln!(w, "pauli,expectation")?;
    for p in strings {
        writeln!(w, "{p},{:.17e}", mps.expectation_pauli(p)?)?;
    }
    Ok(())
}
