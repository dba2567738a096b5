//! Text dump of spectral snapshots.
//!
//! ```text
//! # norminflate spectral snapshot v1
//! # N=64
//! # dims=1x64x64
//! # time=0.25
//! # arity=vector
//! # endianness=none (decimal text); convention f(x) = sum_k F_k exp(i k.x)
//! kx,ky,kz,component,re,im
//! 0,1,4,1,0.5,0
//! ```
//!
//! `dims` gives the stored points per axis; an axis with one point is one the
//! field does not vary along. Only nonzero coefficients are listed; numbers use
//! the shortest decimal that round-trips.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use super::grid::GridField;
use crate::error::{Error, Result};
use crate::trig_field::Arity;

const MAGIC: &str = "# norminflate spectral snapshot v1";
const COLUMNS: &str = "kx,ky,kz,component,re,im";

pub fn write_snapshot<W: Write>(out: &mut W, field: &GridField, time: f64) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "# N={}", field.n())?;
    let d = field.dims();
    writeln!(out, "# dims={}x{}x{}", d[0], d[1], d[2])?;
    writeln!(out, "# time={time:?}")?;
    writeln!(out, "# arity={}", field.arity().name())?;
    writeln!(out, "# endianness=none (decimal text); convention f(x) = sum_k F_k exp(i k.x)")?;
    writeln!(out, "{COLUMNS}")?;
    for (k, c, z) in field.nonzero() {
        writeln!(out, "{},{},{},{},{:?},{:?}", k[0], k[1], k[2], c, z.re, z.im)?;
    }
    Ok(())
}

/// Parses a dump written by [`write_snapshot`]; returns the field and its time.
pub fn read_snapshot<R: BufRead>(input: R) -> Result<(GridField, f64)> {
    let mut n = None;
    let mut time = None;
    let mut arity = None;
    let mut dims = None;
    let mut field: Option<GridField> = None;
    let fmt = |m: String| Error::Format(m);
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(|e| fmt(e.to_string()))?;
        let line = line.trim_end();
        if lineno == 0 {
            if line != MAGIC {
                return Err(fmt(format!("missing header line `{MAGIC}`")));
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some(v) = rest.strip_prefix("N=") {
                n = Some(v.parse::<usize>().map_err(|e| fmt(format!("N: {e}")))?);
            } else if let Some(v) = rest.strip_prefix("dims=") {
                let d: Vec<usize> = v
                    .split('x')
                    .map(|p| p.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| fmt(format!("dims: {e}")))?;
                if d.len() != 3 {
                    return Err(fmt("dims needs three axes".into()));
                }
                dims = Some([d[0], d[1], d[2]]);
            } else if let Some(v) = rest.strip_prefix("time=") {
                time = Some(v.parse::<f64>().map_err(|e| fmt(format!("time: {e}")))?);
            } else if let Some(v) = rest.strip_prefix("arity=") {
                arity = Some(match v {
                    "scalar" => Arity::Scalar,
                    "vector" => Arity::Vector,
                    other => return Err(fmt(format!("unknown arity `{other}`"))),
                });
            }
            continue;
        }
        if line == COLUMNS || line.is_empty() {
            continue;
        }
        let g = match &mut field {
            Some(g) => g,
            None => {
                let (n, a) = n.zip(arity).ok_or_else(|| fmt("N and arity must precede data".into()))?;
                field.insert(GridField::zero_dims(n, dims.unwrap_or([n, n, n]), a))
            }
        };
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(fmt(format!("line {}: expected 6 columns", lineno + 1)));
        }
        let int = |s: &str| s.parse::<i64>().map_err(|e| fmt(format!("line {}: {e}", lineno + 1)));
        let num = |s: &str| s.parse::<f64>().map_err(|e| fmt(format!("line {}: {e}", lineno + 1)));
        let k = [int(cols[0])?, int(cols[1])?, int(cols[2])?];
        let c = int(cols[3])? as usize;
        if c >= g.arity().components() {
            return Err(fmt(format!("line {}: component {c} out of range", lineno + 1)));
        }
        let idx = g.index(k);
        g.coeffs_mut()[c][idx] = Complex64::new(num(cols[4])?, num(cols[5])?);
    }
    let time = time.ok_or_else(|| fmt("missing time".into()))?;
    let field = match field {
        Some(f) => f,
        None => {
            let (n, a) = n.zip(arity).ok_or_else(|| fmt("missing N or arity".into()))?;
            GridField::zero_dims(n, dims.unwrap_or([n, n, n]), a)
        }
    };
    Ok((field, time))
}
