//! Debug dumps of fields and phase screens.
//!
//! Format: one ASCII header line terminated by `\n`, e.g.
//! `oamqkd-dump kind=field n=512 delta=0.02 z=500000 l=1`, followed by
//! `n²` row-major samples as little-endian `f64`. Fields store each sample
//! as a `(re, im)` pair; screens store one phase per sample.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::optics::{ComplexField, GridSpec};
use crate::turbulence::PhaseScreen;

const MAGIC: &str = "oamqkd-dump";

pub fn write_field<W: Write>(mut w: W, field: &ComplexField, z: f64, l: Option<i32>) -> Result<()> {
    let grid = field.grid();
    let mut header = format!("{MAGIC} kind=field n={} delta={} z={z}", grid.n, grid.delta);
    if let Some(l) = l {
        header.push_str(&format!(" l={l}"));
    }
    writeln!(w, "{header}")?;
    let mut buf = Vec::with_capacity(grid.len() * 16);
    for a in field.amplitudes() {
        buf.extend_from_slice(&a.re.to_le_bytes());
        buf.extend_from_slice(&a.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_screen<W: Write>(mut w: W, screen: &PhaseScreen) -> Result<()> {
    let grid = screen.grid;
    writeln!(w, "{MAGIC} kind=screen n={} delta={} r0={}", grid.n, grid.delta, screen.r0)?;
    let mut buf = Vec::with_capacity(grid.len() * 8);
    for p in &screen.phases {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Parsed dump header: the kind plus `key=value` attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpHeader {
    pub kind: String,
    pub attrs: Vec<(String, String)>,
}

impl DumpHeader {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn number(&self, key: &str) -> Result<f64> {
        self.get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Store(format!("dump header lacks numeric `{key}`")))
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.number("n")? as usize, self.number("delta")?)
    }
}

fn read_header<R: BufRead>(r: &mut R) -> Result<DumpHeader> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let mut parts = line.trim_end().split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(Error::Store("not a field dump".into()));
    }
    let mut kind = None;
    let mut attrs = Vec::new();
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| Error::Store(format!("bad header token `{p}`")))?;
        if k == "kind" {
            kind = Some(v.to_string());
        } else {
            attrs.push((k.to_string(), v.to_string()));
        }
    }
    Ok(DumpHeader {
        kind: kind.ok_or_else(|| Error::Store("dump header lacks kind".into()))?,
        attrs,
    })
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

pub fn read_field<R: BufRead>(mut r: R) -> Result<(DumpHeader, ComplexField)> {
    let header = read_header(&mut r)?;
    if header.kind != "field" {
        return Err(Error::Store(format!("expected a field dump, found {}", header.kind)));
    }
    let grid = header.grid()?;
    let raw = read_f64s(&mut r, 2 * grid.len())?;
    let data = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
    Ok((header, ComplexField::new(grid, data)?))
}

pub fn read_screen<R: BufRead>(mut r: R) -> Result<PhaseScreen> {
    let header = read_header(&mut r)?;
    if header.kind != "screen" {
        return Err(Error::Store(format!("expected a screen dump, found {}", header.kind)));
    }
    let grid = header.grid()?;
    let r0 = header.number("r0")?;
    Ok(PhaseScreen {
        grid,
        phases: read_f64s(&mut r, grid.len())?,
        r0,
    })
}
