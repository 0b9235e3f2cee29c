//! File formats: JSON artifacts with decimal-string numbers and an explicit
//! bit precision, plus the CSV table layout.  No binary floats in files.

use anyhow::{bail, Context};
use rmsic_core::bigc::{BigComplex, BigReal};
use rug::Float;
use serde::{Deserialize, Serialize};

/// Digits needed to reproduce `prec` bits exactly on re-parse.
pub fn digits_for(prec: u32) -> usize {
    (prec as f64 * std::f64::consts::LOG10_2).ceil() as usize + 3
}

pub fn real_to_string(x: &BigReal) -> String {
    x.to_string_radix(10, Some(digits_for(x.prec())))
}

pub fn real_from_string(s: &str, prec: u32) -> anyhow::Result<BigReal> {
    let parsed = Float::parse(s).with_context(|| format!("bad decimal: {s}"))?;
    Ok(Float::with_val(prec, parsed))
}

pub fn complex_to_strings(z: &BigComplex) -> [String; 2] {
    [real_to_string(&z.re), real_to_string(&z.im)]
}

pub fn complex_from_strings(re: &str, im: &str, prec: u32) -> anyhow::Result<BigComplex> {
    Ok(BigComplex::new(
        real_from_string(re, prec)?,
        real_from_string(im, prec)?,
    ))
}

#[derive(Serialize, Deserialize)]
pub struct TupleDto {
    pub d: u64,
    pub r: u64,
    pub form: [i64; 3],
    pub delta0: String,
    pub j: u64,
    pub m: u64,
    pub f: String,
}

#[derive(Serialize, Deserialize)]
pub struct OverlapDto {
    pub p: [u64; 2],
    pub nu: String,
    pub prec: u32,
}

#[derive(Serialize, Deserialize)]
pub struct GhostDto {
    pub tuple: TupleDto,
    pub shift: i64,
    pub twist: [[String; 2]; 2],
    pub prec_bits: u32,
    pub overlaps: Vec<OverlapDto>,
    pub residuals: ResidualsDto,
}

#[derive(Serialize, Deserialize)]
pub struct ResidualsDto {
    pub idempotency: String,
    pub trace: String,
    pub parity: String,
}

#[derive(Serialize, Deserialize)]
pub struct KElemDto {
    pub u: [String; 2],
    pub v: [String; 2],
}

#[derive(Serialize, Deserialize)]
pub struct SicDto {
    pub d: u64,
    pub form: [i64; 3],
    pub prec_bits: u32,
    /// Components as `[re, im]` decimal strings.
    pub psi: Vec<[String; 2]>,
    pub residuals: SicResidualsDto,
    pub candidate_shift: [[String; 2]; 2],
    pub invariants: Vec<KElemDto>,
}

#[derive(Serialize, Deserialize)]
pub struct SicResidualsDto {
    pub equiangularity: String,
    pub overlap: String,
    pub gram: String,
    pub resolution: String,
    pub hermiticity: String,
}

pub fn form_to_ints(q: &rmsic_core::QuadForm) -> anyhow::Result<[i64; 3]> {
    let conv = |x: &rug::Integer| -> anyhow::Result<i64> {
        x.to_i64().context("form coefficient exceeds i64")
    };
    Ok([conv(&q.a)?, conv(&q.b)?, conv(&q.c)?])
}

pub fn mat_to_strings(m: &rmsic_core::Mat2Z) -> [[String; 2]; 2] {
    [
        [m.m[0][0].to_string(), m.m[0][1].to_string()],
        [m.m[1][0].to_string(), m.m[1][1].to_string()],
    ]
}

/// Parse `a,b,c` into a form.
pub fn parse_form(s: &str) -> anyhow::Result<rmsic_core::QuadForm> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        bail!("form must be a,b,c");
    }
    let a: i64 = parts[0].trim().parse()?;
    let b: i64 = parts[1].trim().parse()?;
    let c: i64 = parts[2].trim().parse()?;
    Ok(rmsic_core::QuadForm::from_ints(a, b, c)?)
}
