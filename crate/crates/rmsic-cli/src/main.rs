//! Command-line surface for the ghost/SIC construction pipeline.

mod io;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use io::*;
use rmsic_core::bigc::BigComplex;
use rmsic_core::ghost::{ghost_fiducial_from_table, tcc_max_residual, GhostOverlapTable, ShinTables};
use rmsic_core::necromancy::{
    equiangularity_residual, ghost_invariants, ghost_vector, newton_refine,
    table_from_vector, verify_sic, SicCandidate,
};
use rmsic_core::numtheory::{class_number_order, divisors, fundamental_discriminant};
use rmsic_core::towers::{
    admissible_pairs, anti_unitary_type, conductor_sequence, dimension_tower, odd_trace_density,
    AdmissibleTuple,
};
use rug::{Float, Integer};
use serde_json::json;
use std::io::Write as _;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "rmsic",
    about = "Ghost and live SIC fiducials from real-multiplication cocycle values",
    version
)]
struct Cli {
    /// Worker threads for the data-parallel loops (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for table commands.
    #[arg(long, global = true, default_value = "json")]
    format: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dimension tower and conductor sequence of a real quadratic field.
    Tower {
        #[arg(long)]
        disc: i64,
        #[arg(long, default_value_t = 8)]
        jmax: u64,
    },
    /// Admissible pairs with rank greater than one, up to a dimension bound.
    Pairs {
        #[arg(long)]
        dmax: u64,
    },
    /// Galois multiplets and orbit classes for one dimension or a range.
    Classify {
        #[arg(long)]
        d: Option<u64>,
        #[arg(long)]
        dmax: Option<u64>,
    },
    /// Assemble a ghost fiducial and report its residual certificates.
    Ghost {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        form: String,
        #[arg(long, default_value_t = 1)]
        shift: i64,
        #[arg(long)]
        prec: Option<u32>,
        #[arg(long, default_value_t = 1)]
        r: u64,
    },
    /// Twisted convolution residuals for the shifts 0 and 1 (or one shift).
    Tcc {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        form: String,
        #[arg(long)]
        shift: Option<i64>,
        #[arg(long)]
        prec: Option<u32>,
        #[arg(long, default_value_t = 1)]
        r: u64,
        /// Re-run at doubled precision and require the residual to shrink.
        #[arg(long)]
        certify: bool,
    },
    /// Convert a ghost into a live fiducial through invariant recognition.
    Necromancy {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        form: String,
        #[arg(long)]
        prec: Option<u32>,
        #[arg(long, default_value_t = 320)]
        boot_prec: u32,
        #[arg(long, default_value_t = 1400)]
        inv_prec: u32,
        #[arg(long, default_value_t = 1_000_000)]
        height_bound: u64,
    },
    /// Verify a fiducial file against the equiangularity conditions.
    Verify {
        #[arg(long, name = "in")]
        input: PathBuf,
    },
    /// Ghost-side alignment between tower positions j and n j.
    Align {
        #[arg(long)]
        disc: i64,
        #[arg(long)]
        j: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        prec: Option<u32>,
    },
    /// Fraction of fundamental discriminants 5 mod 8 with an odd-trace unit.
    Density {
        #[arg(long, default_value_t = 100_000)]
        limit: u64,
    },
}

fn default_prec(cli_prec: Option<u32>) -> u32 {
    if let Some(p) = cli_prec {
        return p.max(64);
    }
    std::env::var("RMSIC_PREC_BITS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(256)
}

/// Residual gate: pass thresholds scale with the working precision.
fn gate(prec: u32) -> Float {
    if prec >= 200 {
        Float::with_val(64, 1e-30)
    } else {
        Float::with_val(64, 1) >> (prec / 2)
    }
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, body).context("writing output")?,
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{body}")?;
        }
    }
    Ok(())
}

fn tuple_dto(t: &AdmissibleTuple) -> Result<TupleDto> {
    Ok(TupleDto {
        d: t.d,
        r: t.r,
        form: form_to_ints(&t.q)?,
        delta0: t.delta0.to_string(),
        j: t.j,
        m: t.m,
        f: t.f.to_string(),
    })
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match cli.command {
        Command::Tower { disc, jmax } => {
            let delta0 = Integer::from(disc);
            let d = dimension_tower(&delta0, jmax)?;
            let f = conductor_sequence(&delta0, jmax)?;
            if cli.format == "csv" {
                let mut s = String::from("j,d_j,f_j\n");
                for j in 0..jmax as usize {
                    s += &format!("{},{},{}\n", j + 1, d[j], f[j]);
                }
                emit(&cli.out, s.trim_end())?;
            } else {
                let rows: Vec<_> = (0..jmax as usize)
                    .map(|j| {
                        json!({"j": j + 1, "d": d[j].to_string(), "f": f[j].to_string()})
                    })
                    .collect();
                emit(
                    &cli.out,
                    &serde_json::to_string_pretty(&json!({"delta0": disc, "rows": rows}))?,
                )?;
            }
            Ok(0)
        }
        Command::Pairs { dmax } => {
            let pairs = admissible_pairs(dmax)?;
            if cli.format == "csv" {
                let mut s = String::from("d,r,delta0,j,m\n");
                for (d, r, delta0, j, m) in &pairs {
                    s += &format!("{d},{r},{delta0},{j},{m}\n");
                }
                emit(&cli.out, s.trim_end())?;
            } else {
                let rows: Vec<_> = pairs
                    .iter()
                    .map(|(d, r, delta0, j, m)| {
                        let fj = conductor_sequence(delta0, *j)
                            .map(|v| v[*j as usize - 1].to_string())
                            .unwrap_or_default();
                        json!({"d": d, "r": r, "delta0": delta0.to_string(), "j": j, "m": m, "f_j": fj})
                    })
                    .collect();
                emit(&cli.out, &serde_json::to_string_pretty(&rows)?)?;
            }
            Ok(0)
        }
        Command::Classify { d, dmax } => {
            let dims: Vec<u64> = match (d, dmax) {
                (Some(d), None) => vec![d],
                (None, Some(n)) => (4..=n).collect(),
                _ => bail!("pass exactly one of --d, --dmax"),
            };
            let mut rows = Vec::new();
            for dim in dims {
                rows.extend(classify_dimension(dim)?);
            }
            if cli.format == "csv" {
                let mut s = String::from("d,delta0,f,h,form,type,antiunitary,word_len\n");
                for r in &rows {
                    s += &format!(
                        "{},{},{},{},{},{},{},{}\n",
                        r["d"], r["delta0"], r["f"], r["h"], r["form"], r["type"],
                        r["antiunitary"], r["word_len"]
                    );
                }
                emit(&cli.out, s.trim_end())?;
            } else {
                emit(&cli.out, &serde_json::to_string_pretty(&rows)?)?;
            }
            Ok(0)
        }
        Command::Ghost {
            d,
            form,
            shift,
            prec,
            r,
        } => {
            let prec = default_prec(prec);
            let q = parse_form(&form)?;
            let t = AdmissibleTuple::new(d, r, q)?;
            let table = GhostOverlapTable::compute(&t, prec)?;
            let g = ghost_fiducial_from_table(&table, shift)?;
            let mut overlaps = Vec::new();
            for p1 in 0..d {
                for p2 in 0..d {
                    let nu = table.nu(&(Integer::from(p1), Integer::from(p2)));
                    overlaps.push(OverlapDto {
                        p: [p1, p2],
                        nu: real_to_string(&nu),
                        prec,
                    });
                }
            }
            let dto = GhostDto {
                tuple: tuple_dto(&t)?,
                shift,
                twist: mat_to_strings(&g.twist),
                prec_bits: prec,
                overlaps,
                residuals: ResidualsDto {
                    idempotency: real_to_string(&g.residual_idempotency),
                    trace: real_to_string(&g.residual_trace),
                    parity: real_to_string(&g.residual_parity),
                },
            };
            emit(&cli.out, &serde_json::to_string_pretty(&dto)?)?;
            let gate = gate(prec);
            let pass = g.residual_idempotency < gate
                && g.residual_trace < gate
                && g.residual_parity < gate;
            Ok(if pass { 0 } else { 1 })
        }
        Command::Tcc {
            d,
            form,
            shift,
            prec,
            r,
            certify,
        } => {
            let prec = default_prec(prec);
            let q = parse_form(&form)?;
            let t = AdmissibleTuple::new(d, r, q)?;
            let shifts: Vec<i64> = match shift {
                Some(s) => vec![s],
                None => vec![0, 1],
            };
            let tables = ShinTables::compute(&t, prec)?;
            let mut results = Vec::new();
            let mut pass = true;
            let gate = gate(prec);
            for s in &shifts {
                let resid = tcc_max_residual(&tables, *s)?;
                pass &= resid < gate;
                let shrink = if certify {
                    let tables2 = ShinTables::compute(&t, 2 * prec)?;
                    let resid2 = tcc_max_residual(&tables2, *s)?;
                    let ratio_ok = resid2.clone() * 2u32 < resid || resid2.is_zero();
                    pass &= ratio_ok;
                    Some(json!({
                        "residual_at_double": real_to_string(&resid2),
                        "shrinks": ratio_ok
                    }))
                } else {
                    None
                };
                results.push(json!({
                    "shift": s,
                    "max_residual": real_to_string(&resid),
                    "certify": shrink,
                }));
            }
            let body = json!({
                "tuple": {"d": d, "form": form, "r": r},
                "prec_bits": prec,
                "shifts": results,
            });
            emit(&cli.out, &serde_json::to_string_pretty(&body)?)?;
            Ok(if pass { 0 } else { 1 })
        }
        Command::Necromancy {
            d,
            form,
            prec,
            boot_prec,
            inv_prec,
            height_bound,
        } => {
            let prec = default_prec(prec);
            let q = parse_form(&form)?;
            let t = AdmissibleTuple::new(d, 1, q)?;
            // run the stages separately so the invariants can be serialized
            let ghost = rmsic_core::ghost::ghost_fiducial(&t, 1, boot_prec)?;
            let gv = ghost_vector(&ghost)?;
            let refined = newton_refine(&gv, inv_prec)?;
            let table = table_from_vector(&t, &refined)?;
            let inv = ghost_invariants(&t, &table, &Integer::from(height_bound))?;
            let cand = rmsic_core::necromancy::conjugate_and_reconstruct(&inv, prec)?;
            let report = verify_sic(&cand);
            let mut invariants = Vec::new();
            for j in 0..inv.gens.len() {
                for k in inv.b[j].iter().chain(inv.e[j].iter()) {
                    invariants.push(KElemDto {
                        u: [k.u.numer().to_string(), k.u.denom().to_string()],
                        v: [k.v.numer().to_string(), k.v.denom().to_string()],
                    });
                }
            }
            let dto = SicDto {
                d,
                form: form_to_ints(&t.q)?,
                prec_bits: prec,
                psi: cand.psi.iter().map(complex_to_strings).collect(),
                residuals: SicResidualsDto {
                    equiangularity: real_to_string(&cand.equiangularity_residual),
                    overlap: real_to_string(&report.overlap_residual),
                    gram: real_to_string(&report.gram_residual),
                    resolution: real_to_string(&report.resolution_residual),
                    hermiticity: real_to_string(&report.hermiticity_residual),
                },
                candidate_shift: mat_to_strings(&cand.candidate_shift),
                invariants,
            };
            emit(&cli.out, &serde_json::to_string_pretty(&dto)?)?;
            let g = gate(prec);
            Ok(if cand.equiangularity_residual < g { 0 } else { 1 })
        }
        Command::Verify { input } => {
            let body = std::fs::read_to_string(&input).context("reading input")?;
            let dto: SicDto = serde_json::from_str(&body).context("parsing fiducial file")?;
            let prec = dto.prec_bits;
            let mut psi = Vec::new();
            for pair in &dto.psi {
                psi.push(complex_from_strings(&pair[0], &pair[1], prec)?);
            }
            if psi.len() != dto.d as usize {
                bail!("vector length does not match the dimension");
            }
            let cand = SicCandidate {
                d: dto.d,
                psi,
                prec,
                equiangularity_residual: equiangularity_residual(
                    dto.d,
                    &complexes(&dto, prec)?,
                    prec,
                ),
                candidate_shift: rmsic_core::Mat2Z::identity(),
            };
            let report = verify_sic(&cand);
            let g = gate(prec);
            let pass = report.overlap_residual < g
                && report.hermiticity_residual < g
                && report.resolution_residual < Float::with_val(64, 1e-15);
            let body = json!({
                "d": dto.d,
                "prec_bits": prec,
                "overlap_residual": real_to_string(&report.overlap_residual),
                "gram_residual": real_to_string(&report.gram_residual),
                "resolution_residual": real_to_string(&report.resolution_residual),
                "hermiticity_residual": real_to_string(&report.hermiticity_residual),
                "pass": pass,
            });
            emit(&cli.out, &serde_json::to_string_pretty(&body)?)?;
            Ok(if pass { 0 } else { 1 })
        }
        Command::Align { disc, j, n, prec } => {
            let prec = default_prec(prec);
            let dev = rmsic_core::ghost::alignment_check(&Integer::from(disc), j, n, prec)?;
            let body = json!({
                "delta0": disc,
                "j": j,
                "n": n,
                "prec_bits": prec,
                "max_deviation": real_to_string(&dev),
            });
            emit(&cli.out, &serde_json::to_string_pretty(&body)?)?;
            let g = Float::with_val(64, 1e-25);
            Ok(if dev < g { 0 } else { 1 })
        }
        Command::Density { limit } => {
            let (odd, total) = odd_trace_density(limit);
            let frac = odd as f64 / total.max(1) as f64;
            let body = json!({
                "limit": limit,
                "odd_trace": odd,
                "total": total,
                "fraction": frac,
            });
            emit(&cli.out, &serde_json::to_string_pretty(&body)?)?;
            Ok(0)
        }
    }
}

fn complexes(dto: &SicDto, prec: u32) -> Result<Vec<BigComplex>> {
    dto.psi
        .iter()
        .map(|p| complex_from_strings(&p[0], &p[1], prec))
        .collect()
}

/// Rows for one dimension: one per Galois multiplet conductor.
fn classify_dimension(d: u64) -> Result<Vec<serde_json::Value>> {
    let delta = Integer::from(d + 1) * Integer::from(d - 3);
    let disc = fundamental_discriminant(&delta)?;
    let f_j = disc.f.clone();
    let delta0 = disc.delta0.clone();
    let mut rows = Vec::new();
    for f in divisors(&f_j)? {
        let full = Integer::from(&f * &f) * &delta0;
        let (h, reps) = class_number_order(&delta0, &f)?;
        let (form_str, word_len, a_type, au) = if !reps.is_empty() {
            let minimal = rmsic_core::hjcf::minimal_form(&reps[..1])?;
            let t = AdmissibleTuple::new(d, 1, minimal.clone())?;
            let (_, _, _, a) = rmsic_core::quadforms::stabilizers(&t)?;
            let word = rmsic_core::hjcf::word_decompose(&a)?;
            let au = anti_unitary_type(&t)?;
            let a_type = if d % 9 == 3 {
                if Integer::from(&f_j / &f).is_divisible(&Integer::from(3)) {
                    "a"
                } else {
                    "z"
                }
            } else {
                "z"
            };
            (minimal.to_string(), word.n() as i64, a_type, au)
        } else {
            ("".to_string(), -1, "", false)
        };
        rows.push(json!({
            "d": d,
            "delta0": delta0.to_string(),
            "f": f.to_string(),
            "disc": full.to_string(),
            "h": h,
            "form": form_str,
            "type": a_type,
            "antiunitary": au,
            "word_len": word_len,
        }));
    }
    Ok(rows)
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
