//! Conversion of a numerical ghost into a live SIC fiducial: vector
//! extraction, Newton amplification, ghost invariants, algebraic
//! recognition over the real quadratic field, Galois conjugation, and
//! eigenvector-seeded reconstruction.
//!
//! Scope: rank 1 and class number 1 (invariants live in the field itself).

use crate::bigc::{BigComplex, BigReal};
use crate::error::Error;
use crate::ghost::{GhostFiducial, GhostOverlapTable};
use crate::quadforms::{roots, stabilizers, Mat2Z};
use crate::towers::AdmissibleTuple;
use crate::weylheis::{displacement, parity, CMatrix, Displacement};
use crate::Result;
use rug::ops::RemRounding;
use rug::{Float, Integer, Rational};
use std::collections::HashMap;

/// Ghost fiducial vector with the sign from `ghost = lambda psi psi^dag U_P`.
#[derive(Debug, Clone)]
pub struct GhostVector {
    pub d: u64,
    pub psi: Vec<BigComplex>,
    pub lambda: i32,
    pub prec: u32,
}

/// Element `u + v sqrt(delta0)` of the base field, exact.
#[derive(Debug, Clone, PartialEq)]
pub struct KElem {
    pub u: Rational,
    pub v: Rational,
}

impl KElem {
    pub fn conj(&self) -> KElem {
        KElem {
            u: self.u.clone(),
            v: -self.v.clone(),
        }
    }

    pub fn embed(&self, delta0: &Integer, prec: u32) -> BigReal {
        let s = Float::with_val(prec, delta0).sqrt();
        Float::with_val(prec, &self.u) + Float::with_val(prec, &self.v) * s
    }
}

/// Ghost invariants: the orbit labeling and the recognized coefficients.
#[derive(Debug, Clone)]
pub struct InvariantSet {
    pub t: AdmissibleTuple,
    pub prec: u32,
    /// Generators of the quotient of the maximal abelian group by the
    /// symmetry group, with their prime-power orders.
    pub gens: Vec<(Mat2Z, u64)>,
    pub base_point: (Integer, Integer),
    /// Members of the maximal abelian group itself.
    pub group: Vec<Mat2Z>,
    /// Symmetry subgroup of the overlap table.
    pub symmetry: Vec<Mat2Z>,
    /// Map from orbit point (mod dbar) to its label tuple.
    pub labels: HashMap<(u64, u64), Vec<u64>>,
    /// For each factor j: the distinguished coefficient index `l_j`.
    pub ell: Vec<usize>,
    /// Recognized `a_{j,t,l}` with `a[j][l][t]`, absent at `l = l_j`.
    pub a: Vec<Vec<Option<Vec<KElem>>>>,
    /// Recognized Galois polynomial coefficients `b[j][u]`.
    pub b: Vec<Vec<KElem>>,
    /// Recognized minimal-polynomial coefficients `e[j][t]` (monic, degree n_j).
    pub e: Vec<Vec<KElem>>,
    /// Largest recognition residual observed.
    pub max_residual: Float,
}

/// A live SIC fiducial candidate.
#[derive(Debug, Clone)]
pub struct SicCandidate {
    pub d: u64,
    pub psi: Vec<BigComplex>,
    pub prec: u32,
    pub equiangularity_residual: Float,
    pub candidate_shift: Mat2Z,
}

/// Verification report for a candidate fiducial.
#[derive(Debug, Clone)]
pub struct SicReport {
    pub overlap_residual: Float,
    pub gram_residual: Float,
    pub resolution_residual: Float,
    pub hermiticity_residual: Float,
}

// ---- small dense linear algebra over floats ----

/// Solve the square system `m x = rhs` by Gaussian elimination.
fn solve_real(mut m: Vec<Vec<Float>>, mut rhs: Vec<Float>, what: &str) -> Result<Vec<Float>> {
    let n = m.len();
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if m[row][col].clone().abs() > m[piv][col].clone().abs() {
                piv = row;
            }
        }
        if m[piv][col].is_zero() {
            return Err(Error::Singular(what.into()));
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        let inv = m[col][col].clone().recip();
        for row in col + 1..n {
            let factor = Float::with_val(m[row][col].prec(), &m[row][col] * &inv);
            if factor.is_zero() {
                continue;
            }
            for k in col..n {
                let sub = Float::with_val(factor.prec(), &factor * &m[col][k]);
                m[row][k] -= sub;
            }
            let sub = Float::with_val(factor.prec(), &factor * &rhs[col]);
            rhs[row] -= sub;
        }
    }
    let prec = rhs[0].prec();
    let mut x = vec![Float::new(prec); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row].clone();
        for k in row + 1..n {
            acc -= Float::with_val(prec, &m[row][k] * &x[k]);
        }
        x[row] = acc / &m[row][row];
    }
    Ok(x)
}

// ---- integer lattice reduction ----

/// In-place LLL with delta = 0.99 on three integer row vectors, in exact
/// integer arithmetic on the Gram minors (no rationals, no floats).
fn lll_reduce(basis: &mut Vec<Vec<Integer>>) {
    assert_eq!(basis.len(), 3, "recognition lattice has three rows");
    let dot = |a: &[Integer], b: &[Integer]| -> Integer {
        let mut acc = Integer::from(0);
        for (x, y) in a.iter().zip(b) {
            acc += Integer::from(x * y);
        }
        acc
    };
    loop {
        let g = |i: usize, j: usize| dot(&basis[i], &basis[j]);
        let g00 = g(0, 0);
        let g01 = g(0, 1);
        let g02 = g(0, 2);
        let g11 = g(1, 1);
        let g12 = g(1, 2);
        let g22 = g(2, 2);
        // Gram-Schmidt data as integer minors:
        // d_j = leading principal minors, lambda_{ij} = mu_{ij} d_j
        let d0 = g00.clone();
        let d1 = Integer::from(&g00 * &g11) - Integer::from(&g01 * &g01);
        let d2 = Integer::from(&g00 * &g11) * &g22 + Integer::from(2) * Integer::from(&g01 * &g02) * &g12
            - Integer::from(&g02 * &g02) * &g11
            - Integer::from(&g12 * &g12) * &g00
            - Integer::from(&g01 * &g01) * &g22;
        let l10 = g01.clone();
        let l20 = g02.clone();
        let l21 = Integer::from(&g00 * &g12) - Integer::from(&g01 * &g02);
        // size reduction: |mu_{ij}| > 1/2  <=>  2 |lambda| > d_j
        let mut reduced = false;
        for (i, j, lam, dj) in [
            (1usize, 0usize, &l10, &d0),
            (2, 1, &l21, &d1),
            (2, 0, &l20, &d0),
        ] {
            if dj.is_zero() {
                continue;
            }
            if Integer::from(2) * lam.clone().abs() > dj.clone().abs() {
                let q = Rational::from((lam.clone(), dj.clone())).round().numer().clone();
                if !q.is_zero() {
                    let row_j = basis[j].clone();
                    for (x, y) in basis[i].iter_mut().zip(&row_j) {
                        *x -= Integer::from(&q * y);
                    }
                    reduced = true;
                    break;
                }
            }
        }
        if reduced {
            continue;
        }
        // Lovasz at k = 1: 100 (d1 + lambda10^2) < 99 d0^2   (d_{-1} = 1)
        if Integer::from(100) * (d1.clone() + Integer::from(&l10 * &l10))
            < Integer::from(99) * Integer::from(&d0 * &d0)
        {
            basis.swap(0, 1);
            continue;
        }
        // Lovasz at k = 2: 100 (d2 d0 + lambda21^2) < 99 d1^2
        if Integer::from(100) * (Integer::from(&d2 * &d0) + Integer::from(&l21 * &l21))
            < Integer::from(99) * Integer::from(&d1 * &d1)
        {
            basis.swap(1, 2);
            continue;
        }
        return;
    }
}

/// Recognize `x` as `u + v sqrt(delta0)` with denominators below
/// `height_bound`, or `None`.  Acceptance requires the residual below
/// `2^{-prec/4}` and confirmation at doubled evaluation precision.
pub fn recognize_quadratic(
    x: &BigReal,
    delta0: &Integer,
    height_bound: &Integer,
) -> Option<(Rational, Rational)> {
    let prec = x.prec();
    let scale_bits = prec / 2;
    let scale = Integer::from(1) << scale_bits;
    let sqrt_d = Float::with_val(prec, delta0).sqrt();
    let to_scaled = |v: &Float| -> Integer {
        let y = Float::with_val(prec, v * Float::with_val(prec, &scale));
        y.round().to_integer().unwrap()
    };
    let one_s = scale.clone();
    let sqrt_s = to_scaled(&sqrt_d);
    let x_s = to_scaled(x);
    let mut basis = vec![
        vec![Integer::from(1), Integer::from(0), Integer::from(0), one_s],
        vec![Integer::from(0), Integer::from(1), Integer::from(0), sqrt_s],
        vec![Integer::from(0), Integer::from(0), Integer::from(1), x_s],
    ];
    lll_reduce(&mut basis);
    for cand in &basis {
        let (c1, c2, c3) = (&cand[0], &cand[1], &cand[2]);
        if c3.is_zero() {
            continue;
        }
        let u = Rational::from((Integer::from(-c1), c3.clone()));
        let v = Rational::from((Integer::from(-c2), c3.clone()));
        if u.denom() > height_bound
            || v.denom() > height_bound
            || u.numer().clone().abs() > Integer::from(height_bound * height_bound)
        {
            continue;
        }
        // residual check at the working precision and at doubled precision
        let ok = |p: u32| -> bool {
            let s = Float::with_val(p, delta0).sqrt();
            let val = Float::with_val(p, &u) + Float::with_val(p, &v) * s;
            let resid = (Float::with_val(p, x) - val).abs();
            resid < Float::with_val(p, 1) >> (prec / 4)
        };
        if ok(prec) && ok(2 * prec) {
            return Some((u, v));
        }
    }
    None
}

// ---- ghost vector and Newton refinement ----

/// Factor a rank-1 ghost as `lambda |psi><psi| U_P`.
pub fn ghost_vector(g: &GhostFiducial) -> Result<GhostVector> {
    if g.t.r != 1 {
        return Err(Error::RankTest("ghost vector extraction needs rank 1".into()));
    }
    let prec = g.prec;
    let d = g.t.d as usize;
    let up = parity(g.t.d, prec);
    let b = g.matrix.mul(&up); // lambda psi psi^dag
    // dominant column
    let mut best_col = 0usize;
    let mut best = Float::with_val(prec, -1);
    for j in 0..d {
        let mut s = Float::with_val(prec, 0);
        for i in 0..d {
            s += b.at(i, j).norm_sqr();
        }
        if s > best {
            best = s;
            best_col = j;
        }
    }
    let col: Vec<BigComplex> = (0..d).map(|i| b.at(i, best_col).clone()).collect();
    let norm = {
        let mut s = Float::with_val(prec, 0);
        for v in &col {
            s += v.norm_sqr();
        }
        s.sqrt()
    };
    if norm.is_zero() {
        return Err(Error::RankTest("ghost has a zero column".into()));
    }
    let v: Vec<BigComplex> = col
        .iter()
        .map(|x| x.mul_real(&norm.clone().recip()))
        .collect();
    let trace = b.trace();
    let lambda: i32 = if trace.re.is_sign_negative() { -1 } else { 1 };
    let scale = trace.re.clone().abs().sqrt();
    let mut psi: Vec<BigComplex> = v.iter().map(|x| x.mul_real(&scale)).collect();
    // gauge: first component of largest modulus real positive; prefer index 0
    let anchor = anchor_index(&psi);
    let phase = psi[anchor].div(&BigComplex::from_real(psi[anchor].abs()));
    psi = psi.iter().map(|x| x.div(&phase)).collect();
    // rank certificate
    let mut outer = CMatrix::zeros(d, prec);
    for i in 0..d {
        for j in 0..d {
            outer.set(i, j, psi[i].mul(&psi[j].conj()));
        }
    }
    let lam_c = BigComplex::from_int(lambda as i64, prec);
    let resid = outer.scale(&lam_c).dist_max(&b);
    let tol = Float::with_val(prec, 1) >> (prec / 2);
    if resid > tol {
        return Err(Error::RankTest(format!(
            "rank-1 factorization residual {resid} exceeds tolerance"
        )));
    }
    Ok(GhostVector {
        d: g.t.d,
        psi,
        lambda,
        prec,
    })
}

fn anchor_index(psi: &[BigComplex]) -> usize {
    let mut anchor = 0usize;
    let mut best = Float::with_val(psi[0].prec(), -1);
    for (i, c) in psi.iter().enumerate() {
        let a = c.abs();
        if a > best {
            best = a;
            anchor = i;
        }
    }
    anchor
}

/// Monomial matrix `U_P D_p` applied to a vector.
fn up_dp_apply(d: u64, p: &(Integer, Integer), psi: &[BigComplex], prec: u32) -> Vec<BigComplex> {
    let disp = Displacement::from_vec(d, p);
    let n = d as usize;
    let mut out = vec![BigComplex::zero(prec); n];
    for col in 0..d {
        let row = disp.row_of_col(col);
        let prow = ((d - row) % d) as usize; // parity flips the row
        let phase = disp.entry_phase(col).to_complex(prec);
        out[prow] = phase.mul(&psi[col as usize]);
    }
    out
}

fn dp_apply(d: u64, p: &(Integer, Integer), psi: &[BigComplex], prec: u32) -> Vec<BigComplex> {
    let disp = Displacement::from_vec(d, p);
    let n = d as usize;
    let mut out = vec![BigComplex::zero(prec); n];
    for col in 0..d {
        let row = disp.row_of_col(col) as usize;
        let phase = disp.entry_phase(col).to_complex(prec);
        out[row] = phase.mul(&psi[col as usize]);
    }
    out
}

fn inner(a: &[BigComplex], b: &[BigComplex]) -> BigComplex {
    let prec = a[0].prec();
    let mut acc = BigComplex::zero(prec);
    for (x, y) in a.iter().zip(b) {
        acc = acc.add(&x.conj().mul(y));
    }
    acc
}

/// The ghost quadratic system: for each `p`,
/// `<psi|U_P D_p|psi> <psi|U_P D_{-p}|psi> = (d delta_{p,0} + 1)/(d + 1)`.
fn ghost_system_residual(d: u64, psi: &[BigComplex], prec: u32) -> Float {
    let mut worst = Float::with_val(prec, 0);
    for p1 in 0..d {
        for p2 in 0..d {
            let p = (Integer::from(p1), Integer::from(p2));
            let mp = (Integer::from(-(p1 as i64)), Integer::from(-(p2 as i64)));
            let b1 = inner(psi, &up_dp_apply(d, &p, psi, prec));
            let b2 = inner(psi, &up_dp_apply(d, &mp, psi, prec));
            let c = if p1 == 0 && p2 == 0 {
                Float::with_val(prec, 1)
            } else {
                Float::with_val(prec, 1) / Float::with_val(prec, d + 1)
            };
            let f = b1.mul(&b2).sub(&BigComplex::from_real(c));
            let a = f.abs();
            if a > worst {
                worst = a;
            }
        }
    }
    worst
}

/// One Gauss-Newton step on the ghost system; returns the updated vector.
fn ghost_newton_step(d: u64, psi: &[BigComplex], prec: u32) -> Result<Vec<BigComplex>> {
    let n = d as usize;
    let anchor = anchor_index(psi);
    // unknowns: re/im of each component, with im(anchor) removed
    let nvar = 2 * n - 1;
    let var_of = |k: usize, im: bool| -> Option<usize> {
        if im && k == anchor {
            return None;
        }
        let base = 2 * k + usize::from(im);
        let skip = 2 * anchor + 1;
        Some(if base > skip { base - 1 } else { base })
    };
    let mut rows: Vec<Vec<Float>> = Vec::new();
    let mut rhs: Vec<Float> = Vec::new();
    for p1 in 0..d {
        for p2 in 0..d {
            let p = (Integer::from(p1), Integer::from(p2));
            let mp = (Integer::from(-(p1 as i64)), Integer::from(-(p2 as i64)));
            let u1 = up_dp_apply(d, &p, psi, prec);
            let u2 = up_dp_apply(d, &mp, psi, prec);
            let b1 = inner(psi, &u1);
            let b2 = inner(psi, &u2);
            let c = if p1 == 0 && p2 == 0 {
                Float::with_val(prec, 1)
            } else {
                Float::with_val(prec, 1) / Float::with_val(prec, d + 1)
            };
            let f = b1.mul(&b2).sub(&BigComplex::from_real(c));
            // dB = (M psi)_k + conj((M^dag psi)_k) for the re-part,
            //      -i (M psi)_k + i conj((M^dag psi)_k) for the im-part
            let m1_dag = {
                // (U_P D_p)^dag psi
                let up = up_dp_apply(d, &p, &unit_basis(n, prec), prec);
                let _ = up;
                apply_up_dp_dagger(d, &p, psi, prec)
            };
            let m2_dag = apply_up_dp_dagger(d, &mp, psi, prec);
            let mut row_re = vec![Float::new(prec); nvar];
            let mut row_im = vec![Float::new(prec); nvar];
            for k in 0..n {
                for im_part in [false, true] {
                    let Some(v) = var_of(k, im_part) else { continue };
                    let d1 = if !im_part {
                        u1[k].add(&m1_dag[k].conj())
                    } else {
                        u1[k].mul_i().neg().add(&m1_dag[k].conj().mul_i())
                    };
                    let d2 = if !im_part {
                        u2[k].add(&m2_dag[k].conj())
                    } else {
                        u2[k].mul_i().neg().add(&m2_dag[k].conj().mul_i())
                    };
                    let df = d1.mul(&b2).add(&b1.mul(&d2));
                    row_re[v] = df.re.clone();
                    row_im[v] = df.im.clone();
                }
            }
            rows.push(row_re);
            rhs.push(-f.re.clone());
            rows.push(row_im);
            rhs.push(-f.im.clone());
        }
    }
    let delta = gauss_newton_solve(rows, rhs, nvar, prec)?;
    let mut out = psi.to_vec();
    for k in 0..n {
        let dre = var_of(k, false).map(|v| delta[v].clone()).unwrap();
        let dim = var_of(k, true).map(|v| delta[v].clone());
        let upd = BigComplex::new(dre, dim.unwrap_or_else(|| Float::new(prec)));
        out[k] = out[k].add(&upd);
    }
    Ok(out)
}

fn unit_basis(n: usize, prec: u32) -> Vec<BigComplex> {
    vec![BigComplex::zero(prec); n]
}

/// `(U_P D_p)^dagger psi` for monomial `U_P D_p`.
fn apply_up_dp_dagger(
    d: u64,
    p: &(Integer, Integer),
    psi: &[BigComplex],
    prec: u32,
) -> Vec<BigComplex> {
    let disp = Displacement::from_vec(d, p);
    let n = d as usize;
    let mut out = vec![BigComplex::zero(prec); n];
    for col in 0..d {
        let row = disp.row_of_col(col);
        let prow = ((d - row) % d) as usize;
        let phase = disp.entry_phase(col).to_complex(prec);
        // M[prow][col] = phase  =>  (M^dag psi)[col] = conj(phase) psi[prow]
        out[col as usize] = phase.conj().mul(&psi[prow]);
    }
    out
}

/// Solve the least-squares system by normal equations.
fn gauss_newton_solve(
    rows: Vec<Vec<Float>>,
    rhs: Vec<Float>,
    nvar: usize,
    prec: u32,
) -> Result<Vec<Float>> {
    let mut ata = vec![vec![Float::new(prec); nvar]; nvar];
    let mut atb = vec![Float::new(prec); nvar];
    for (row, b) in rows.iter().zip(&rhs) {
        for i in 0..nvar {
            if row[i].is_zero() {
                continue;
            }
            for j in i..nvar {
                let t = Float::with_val(prec, &row[i] * &row[j]);
                ata[i][j] += t;
            }
            atb[i] += Float::with_val(prec, &row[i] * b);
        }
    }
    for i in 0..nvar {
        for j in 0..i {
            ata[i][j] = ata[j][i].clone();
        }
    }
    solve_real(ata, atb, "Gauss-Newton normal equations")
}

/// Newton refinement of a ghost vector to `target_prec` bits, doubling the
/// working precision as the residual shrinks.
pub fn newton_refine(start: &GhostVector, target_prec: u32) -> Result<GhostVector> {
    let d = start.d;
    let mut psi = start.psi.clone();
    let mut prec = start.prec;
    let target = Float::with_val(target_prec, 1) >> (target_prec.saturating_sub(8));
    for iter in 0..60 {
        let resid = ghost_system_residual(d, &psi, prec);
        if resid.clone() > 1e-4 && iter > 6 {
            return Err(Error::NewtonDiverged(format!(
                "residual {resid} after {iter} iterations"
            )));
        }
        let good_bits = if resid.is_zero() {
            prec
        } else {
            (-resid.clone().log2()).to_f64().max(4.0) as u32
        };
        if good_bits >= target_prec.saturating_sub(8) {
            let psi_t: Vec<BigComplex> = psi.iter().map(|x| x.with_prec(target_prec)).collect();
            let final_resid = ghost_system_residual(d, &psi_t, target_prec);
            if final_resid < target {
                return Ok(GhostVector {
                    d,
                    psi: psi_t,
                    lambda: start.lambda,
                    prec: target_prec,
                });
            }
        }
        let wanted = (2 * good_bits + 64).min(target_prec + 64);
        if wanted > prec {
            prec = wanted;
            psi = psi.iter().map(|x| x.with_prec(prec)).collect();
        }
        psi = ghost_newton_step(d, &psi, prec)?;
    }
    Err(Error::NewtonDiverged("iteration budget exhausted".into()))
}

// ---- SIC system (live side) ----

fn sic_system_residual(d: u64, psi: &[BigComplex], prec: u32) -> Float {
    let mut worst = Float::with_val(prec, 0);
    for p1 in 0..d {
        for p2 in 0..d {
            let p = (Integer::from(p1), Integer::from(p2));
            let a = inner(psi, &dp_apply(d, &p, psi, prec));
            let c = if p1 == 0 && p2 == 0 {
                Float::with_val(prec, 1)
            } else {
                Float::with_val(prec, 1) / Float::with_val(prec, d + 1)
            };
            let f = a.norm_sqr() - c;
            let fa = f.abs();
            if fa > worst {
                worst = fa;
            }
        }
    }
    worst
}

fn sic_newton_step(d: u64, psi: &[BigComplex], prec: u32) -> Result<Vec<BigComplex>> {
    let n = d as usize;
    let anchor = anchor_index(psi);
    let nvar = 2 * n - 1;
    let var_of = |k: usize, im: bool| -> Option<usize> {
        if im && k == anchor {
            return None;
        }
        let base = 2 * k + usize::from(im);
        let skip = 2 * anchor + 1;
        Some(if base > skip { base - 1 } else { base })
    };
    let mut rows: Vec<Vec<Float>> = Vec::new();
    let mut rhs: Vec<Float> = Vec::new();
    for p1 in 0..d {
        for p2 in 0..d {
            let p = (Integer::from(p1), Integer::from(p2));
            let u = dp_apply(d, &p, psi, prec);
            let udag = {
                let disp = Displacement::from_vec(d, &p);
                let mut out = vec![BigComplex::zero(prec); n];
                for col in 0..d {
                    let row = disp.row_of_col(col) as usize;
                    let phase = disp.entry_phase(col).to_complex(prec);
                    out[col as usize] = phase.conj().mul(&psi[row]);
                }
                out
            };
            let a = inner(psi, &u);
            let c = if p1 == 0 && p2 == 0 {
                Float::with_val(prec, 1)
            } else {
                Float::with_val(prec, 1) / Float::with_val(prec, d + 1)
            };
            let f = a.norm_sqr() - c;
            let mut row = vec![Float::new(prec); nvar];
            for k in 0..n {
                for im_part in [false, true] {
                    let Some(v) = var_of(k, im_part) else { continue };
                    let da = if !im_part {
                        u[k].add(&udag[k].conj())
                    } else {
                        u[k].mul_i().neg().add(&udag[k].conj().mul_i())
                    };
                    // d|A|^2 = 2 Re(conj(A) dA)
                    let g = a.conj().mul(&da);
                    row[v] = Float::with_val(prec, 2) * g.re.clone();
                }
            }
            rows.push(row);
            rhs.push(-f);
        }
    }
    let delta = gauss_newton_solve(rows, rhs, nvar, prec)?;
    let mut out = psi.to_vec();
    for k in 0..n {
        let dre = var_of(k, false).map(|v| delta[v].clone()).unwrap();
        let dim = var_of(k, true).map(|v| delta[v].clone());
        out[k] = out[k].add(&BigComplex::new(
            dre,
            dim.unwrap_or_else(|| Float::new(prec)),
        ));
    }
    Ok(out)
}

fn sic_newton_refine(
    d: u64,
    start: &[BigComplex],
    target_prec: u32,
) -> Result<Vec<BigComplex>> {
    let mut prec = start[0].prec();
    let mut psi = start.to_vec();
    for iter in 0..60 {
        let resid = sic_system_residual(d, &psi, prec);
        if resid.clone() > 1e-3 && iter > 8 {
            return Err(Error::NewtonDiverged(format!("residual {resid}")));
        }
        let good_bits = if resid.is_zero() {
            prec
        } else {
            (-resid.clone().log2()).to_f64().max(1.0) as u32
        };
        if good_bits >= target_prec.saturating_sub(8) {
            return Ok(psi.iter().map(|x| x.with_prec(target_prec)).collect());
        }
        let wanted = (2 * good_bits + 64).min(target_prec + 64);
        if wanted > prec {
            prec = wanted;
            psi = psi.iter().map(|x| x.with_prec(prec)).collect();
        }
        psi = sic_newton_step(d, &psi, prec)?;
    }
    Err(Error::NewtonDiverged("iteration budget exhausted".into()))
}

// ---- ghost invariants ----

fn mat_mod(m: &Mat2Z, n: u64) -> Mat2Z {
    let ni = Integer::from(n);
    Mat2Z::from_integers(
        m.m[0][0].clone().rem_euc(ni.clone()),
        m.m[0][1].clone().rem_euc(ni.clone()),
        m.m[1][0].clone().rem_euc(ni.clone()),
        m.m[1][1].clone().rem_euc(ni),
    )
}

fn mat_mul_mod(a: &Mat2Z, b: &Mat2Z, n: u64) -> Mat2Z {
    mat_mod(&a.mul(b), n)
}

fn apply_mod(m: &Mat2Z, p: &(u64, u64), n: u64) -> (u64, u64) {
    let v = m.apply_vec(&(Integer::from(p.0), Integer::from(p.1)));
    (
        v.0.rem_euc(Integer::from(n)).to_u64().unwrap(),
        v.1.rem_euc(Integer::from(n)).to_u64().unwrap(),
    )
}

/// The maximal abelian subgroup of `GL2(Z/dbar)` containing the overlap
/// symmetries: units of the ring generated by the symmetry generator.
fn maximal_abelian_group(t: &AdmissibleTuple) -> Result<Vec<Mat2Z>> {
    let db = t.dbar;
    let (_, _, lz, _) = stabilizers(t)?;
    let gen = mat_mod(&lz, db);
    // the generator must act non-scalarly mod every prime of dbar for its
    // centralizer {x I + y gen} to be maximal abelian
    let mut out = Vec::new();
    for x in 0..db {
        for y in 0..db {
            let m = Mat2Z::from_integers(
                (Integer::from(x) + Integer::from(y) * &gen.m[0][0]).rem_euc(Integer::from(db)),
                (Integer::from(y) * &gen.m[0][1]).rem_euc(Integer::from(db)),
                (Integer::from(y) * &gen.m[1][0]).rem_euc(Integer::from(db)),
                (Integer::from(x) + Integer::from(y) * &gen.m[1][1]).rem_euc(Integer::from(db)),
            );
            let det = m.det().rem_euc(Integer::from(db));
            if Integer::from(det.gcd_ref(&Integer::from(db))) == 1 {
                out.push(m);
            }
        }
    }
    Ok(out)
}

fn mat_key(m: &Mat2Z) -> (u64, u64, u64, u64) {
    (
        m.m[0][0].to_u64().unwrap(),
        m.m[0][1].to_u64().unwrap(),
        m.m[1][0].to_u64().unwrap(),
        m.m[1][1].to_u64().unwrap(),
    )
}

/// Symmetries of the overlap table inside the group.
fn table_symmetries(
    table: &GhostOverlapTable,
    group: &[Mat2Z],
) -> Vec<Mat2Z> {
    let t = &table.t;
    let d = t.d;
    let tol = Float::with_val(table.prec, 1) >> (table.prec / 2);
    let mut sym = Vec::new();
    'outer: for m in group {
        for p1 in 0..d {
            for p2 in 0..d {
                if p1 == 0 && p2 == 0 {
                    continue;
                }
                let p = (Integer::from(p1), Integer::from(p2));
                let mp = m.apply_vec(&p);
                let lhs = table.nu(&mp);
                let rhs = table.nu(&p);
                if Float::with_val(table.prec, &lhs - &rhs).abs() > tol {
                    continue 'outer;
                }
            }
        }
        sym.push(m.clone());
    }
    sym
}

/// Decompose the abelian quotient group into cyclic factors of prime-power
/// order, returning generator representatives with their orders.
fn quotient_generators(
    group: &[Mat2Z],
    sym: &[Mat2Z],
    db: u64,
) -> Result<Vec<(Mat2Z, u64)>> {
    let sym_keys: std::collections::HashSet<_> = sym.iter().map(mat_key).collect();
    // canonical coset key: minimum over the S-orbit
    let coset_key = |m: &Mat2Z| -> (u64, u64, u64, u64) {
        sym.iter()
            .map(|s| mat_key(&mat_mul_mod(m, s, db)))
            .min()
            .unwrap()
    };
    let mut cosets: HashMap<(u64, u64, u64, u64), Mat2Z> = HashMap::new();
    for m in group {
        cosets.entry(coset_key(m)).or_insert_with(|| m.clone());
    }
    let order = |m: &Mat2Z| -> u64 {
        let mut acc = m.clone();
        let mut k = 1u64;
        while !sym_keys.contains(&mat_key(&acc)) {
            acc = mat_mul_mod(&acc, m, db);
            k += 1;
        }
        k
    };
    let n = cosets.len() as u64;
    // greedy invariant-factor construction on the small quotient
    let reps: Vec<Mat2Z> = cosets.values().cloned().collect();
    let mut gens: Vec<(Mat2Z, u64)> = Vec::new();
    let mut generated: std::collections::HashSet<(u64, u64, u64, u64)> =
        std::collections::HashSet::new();
    generated.insert(coset_key(&Mat2Z::identity()));
    while (generated.len() as u64) < n {
        // element of maximal order among those outside the generated subgroup;
        // prefer elements whose full cyclic group meets the subgroup trivially
        let mut best: Option<(u64, Mat2Z)> = None;
        for r in &reps {
            if generated.contains(&coset_key(r)) {
                continue;
            }
            let o = order(r);
            if best.as_ref().map(|(bo, _)| o > *bo).unwrap_or(true) {
                best = Some((o, r.clone()));
            }
        }
        let (o, g) = best.ok_or_else(|| Error::Other("quotient decomposition failed".into()))?;
        gens.push((g.clone(), o));
        // close the generated set
        let mut frontier: Vec<Mat2Z> = generated
            .iter()
            .map(|_| Mat2Z::identity())
            .take(0)
            .collect();
        frontier.push(g.clone());
        let snapshot: Vec<(u64, u64, u64, u64)> = generated.iter().cloned().collect();
        let mut news: Vec<Mat2Z> = Vec::new();
        let mut acc = Mat2Z::identity();
        for _ in 1..o {
            acc = mat_mul_mod(&acc, &g, db);
            news.push(acc.clone());
        }
        for base_key in snapshot {
            let base = &cosets[&base_key];
            for nw in &news {
                generated.insert(coset_key(&mat_mul_mod(base, nw, db)));
            }
        }
        let _ = frontier;
    }
    // split invariant factors into prime powers
    let mut out = Vec::new();
    for (g, o) in gens {
        let mut rem = o;
        let mut p = 2u64;
        while rem > 1 {
            if rem % p == 0 {
                let mut q = 1u64;
                while rem % p == 0 {
                    q *= p;
                    rem /= p;
                }
                let mut power = Mat2Z::identity();
                let e = o / q;
                for _ in 0..e {
                    power = mat_mul_mod(&power, &g, db);
                }
                out.push((power, q));
            }
            p += 1;
        }
    }
    Ok(out)
}

/// Compute ghost invariants of a rank-1 tuple from its overlap table.
pub fn ghost_invariants(
    t: &AdmissibleTuple,
    table: &GhostOverlapTable,
    height_bound: &Integer,
) -> Result<InvariantSet> {
    if t.r != 1 {
        return Err(Error::Domain("invariants implemented for rank 1".into()));
    }
    let (h, _) = crate::numtheory::class_number_order(&t.delta0, &t.f)?;
    if h != 1 {
        return Err(Error::Domain(format!(
            "class number {h} > 1 is out of scope (invariants must lie in the base field)"
        )));
    }
    let prec = table.prec;
    let db = t.dbar;
    let group = maximal_abelian_group(t)?;
    let sym = table_symmetries(table, &group);
    let gens = quotient_generators(&group, &sym, db)?;
    let orders: Vec<u64> = gens.iter().map(|(_, o)| *o).collect();
    let n: u64 = orders.iter().product();

    // orbits of the group on (Z/dbar)^2; take a maximal one
    let mut seen = vec![false; (db * db) as usize];
    let mut best_orbit: Vec<(u64, u64)> = Vec::new();
    for s1 in 0..db {
        for s2 in 0..db {
            if seen[(s1 * db + s2) as usize] {
                continue;
            }
            let mut orbit = Vec::new();
            for m in &group {
                let q = apply_mod(m, &(s1, s2), db);
                if !seen[(q.0 * db + q.1) as usize] {
                    seen[(q.0 * db + q.1) as usize] = true;
                    orbit.push(q);
                }
            }
            if orbit.len() > best_orbit.len() {
                best_orbit = orbit;
            }
        }
    }
    let base = *best_orbit.iter().min().unwrap();

    // label the orbit by the generator exponents; the action must be free
    let mut labels: HashMap<(u64, u64), Vec<u64>> = HashMap::new();
    let mut stack = vec![(Mat2Z::identity(), Vec::<u64>::new(), 0usize)];
    let mut tuples: Vec<(Vec<u64>, (u64, u64))> = Vec::new();
    while let Some((m, s, j)) = stack.pop() {
        if j == gens.len() {
            let pt = apply_mod(&m, &base, db);
            tuples.push((s.clone(), pt));
            for sg in &sym {
                let q = apply_mod(&mat_mul_mod(&m, sg, db), &base, db);
                if let Some(old) = labels.get(&q) {
                    if *old != s {
                        return Err(Error::OrbitNotFree(format!(
                            "point {q:?} reached with labels {old:?} and {s:?}"
                        )));
                    }
                } else {
                    labels.insert(q, s.clone());
                }
            }
            continue;
        }
        let (g, o) = &gens[j];
        let mut acc = m.clone();
        for e in 0..*o {
            let mut s2 = s.clone();
            s2.push(e);
            stack.push((acc.clone(), s2, j + 1));
            acc = mat_mul_mod(&acc, g, db);
        }
    }
    // distinct values on the orbit
    let value_of = |s: &[u64]| -> BigReal {
        let pt = tuples
            .iter()
            .find(|(ss, _)| ss == s)
            .map(|(_, p)| *p)
            .unwrap();
        table.nu(&(Integer::from(pt.0), Integer::from(pt.1)))
    };
    {
        let mut vals: Vec<BigReal> = Vec::new();
        let tol = Float::with_val(prec, 1) >> (prec / 2);
        for (s, _) in &tuples {
            let v = value_of(s);
            for w in &vals {
                if Float::with_val(prec, &v - w).abs() < tol {
                    return Err(Error::OrbitNotFree(
                        "orbit values are not distinct".into(),
                    ));
                }
            }
            vals.push(v);
        }
    }

    // polynomials P_{j,t}(x) = prod over the slice s_j = t
    let m_factors = gens.len();
    let mut c_coeffs: Vec<Vec<Vec<BigReal>>> = Vec::new(); // [j][t][l]
    for j in 0..m_factors {
        let nj = orders[j];
        let deg = (n / nj) as usize;
        let mut per_t = Vec::new();
        for tval in 0..nj {
            let slice: Vec<BigReal> = tuples
                .iter()
                .filter(|(s, _)| s[j] == tval)
                .map(|(s, _)| value_of(s))
                .collect();
            debug_assert_eq!(slice.len(), deg);
            // expand prod (x - v)
            let mut coeffs = vec![Float::with_val(prec, 1)];
            for v in &slice {
                let mut next = vec![Float::new(prec); coeffs.len() + 1];
                for (i, c) in coeffs.iter().enumerate() {
                    next[i + 1] += c;
                    next[i] -= Float::with_val(prec, c * v);
                }
                coeffs = next;
            }
            // coeffs[l] multiplies x^l, degree = deg, monic
            per_t.push(coeffs);
        }
        c_coeffs.push(per_t);
    }

    // distinguished index l_j: all c_{j,t,l} distinct and nonzero
    let mut ell = Vec::new();
    for j in 0..m_factors {
        let nj = orders[j] as usize;
        let deg = (n / orders[j]) as usize;
        let tol = Float::with_val(prec, 1) >> (prec / 2);
        let mut found = None;
        for l in 0..deg {
            let vals: Vec<&BigReal> = (0..nj).map(|tv| &c_coeffs[j][tv][l]).collect();
            let nonzero = vals.iter().all(|v| (*v).clone().abs() > tol);
            let distinct = (0..nj).all(|a| {
                (a + 1..nj).all(|b| {
                    Float::with_val(prec, vals[a] - vals[b]).abs() > tol
                })
            });
            if nonzero && distinct {
                found = Some(l);
                break;
            }
        }
        ell.push(found.ok_or_else(|| {
            Error::Other("no index with distinct nonzero coefficients".into())
        })?);
    }

    // Vandermonde systems and recognition
    let mut max_residual = Float::with_val(prec, 0);
    let mut recognize = |x: &BigReal| -> Result<KElem> {
        let (u, v) = recognize_quadratic(x, &t.delta0, height_bound).ok_or_else(|| {
            Error::RecognitionFailed(format!("no field element found for {x}"))
        })?;
        let elem = KElem { u, v };
        let resid = (Float::with_val(prec, x)
            - elem.embed(&t.delta0, prec))
        .abs();
        if resid > max_residual {
            max_residual = resid.clone();
        }
        Ok(elem)
    };
    let mut a_rec: Vec<Vec<Option<Vec<KElem>>>> = Vec::new();
    let mut b_rec: Vec<Vec<KElem>> = Vec::new();
    let mut e_rec: Vec<Vec<KElem>> = Vec::new();
    for j in 0..m_factors {
        let nj = orders[j] as usize;
        let deg = (n / orders[j]) as usize;
        let lj = ell[j];
        // Vandermonde in c_{j,t,l_j}
        let key: Vec<BigReal> = (0..nj).map(|tv| c_coeffs[j][tv][lj].clone()).collect();
        let vand: Vec<Vec<Float>> = (0..nj)
            .map(|tv| {
                let mut row = Vec::with_capacity(nj);
                let mut acc = Float::with_val(prec, 1);
                for _ in 0..nj {
                    row.push(acc.clone());
                    acc *= &key[tv];
                }
                row
            })
            .collect();
        // a_{j, ., l} for every l except l_j
        let mut a_j: Vec<Option<Vec<KElem>>> = Vec::new();
        for l in 0..=deg {
            if l == lj || l == deg {
                // monic top coefficient carries no information
                a_j.push(None);
                continue;
            }
            let rhs: Vec<Float> = (0..nj).map(|tv| c_coeffs[j][tv][l].clone()).collect();
            let sol = solve_real(vand.clone(), rhs, "Vandermonde for a")?;
            let rec: Result<Vec<KElem>> = sol.iter().map(|x| recognize(x)).collect();
            a_j.push(Some(rec?));
        }
        a_rec.push(a_j);
        // b: cyclic shift c_{j,t+1,l_j} = Q_j(c_{j,t,l_j})
        let rhs: Vec<Float> = (0..nj)
            .map(|tv| c_coeffs[j][(tv + 1) % nj][lj].clone())
            .collect();
        let sol = solve_real(vand.clone(), rhs, "Vandermonde for b")?;
        let rec: Result<Vec<KElem>> = sol.iter().map(|x| recognize(x)).collect();
        b_rec.push(rec?);
        // e: monic polynomial with roots c_{j,t,l_j}
        let mut coeffs = vec![Float::with_val(prec, 1)];
        for v in &key {
            let mut next = vec![Float::new(prec); coeffs.len() + 1];
            for (i, c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= Float::with_val(prec, c * v);
            }
            coeffs = next;
        }
        let rec: Result<Vec<KElem>> = coeffs[..nj].iter().map(|x| recognize(x)).collect();
        e_rec.push(rec?);
    }

    Ok(InvariantSet {
        t: t.clone(),
        prec,
        gens,
        base_point: (Integer::from(base.0), Integer::from(base.1)),
        group,
        symmetry: sym,
        labels,
        ell,
        a: a_rec,
        b: b_rec,
        e: e_rec,
        max_residual,
    })
}

// ---- polynomial roots ----

/// All complex roots of a monic polynomial given by its coefficients
/// `c[0] + c[1] x + ... + c[n-1] x^{n-1} + x^n`.
fn poly_roots(coeffs: &[BigComplex], prec: u32) -> Vec<BigComplex> {
    let n = coeffs.len();
    if n == 0 {
        return Vec::new();
    }
    let eval = |z: &BigComplex, p: u32| -> (BigComplex, BigComplex) {
        // value and derivative, Horner
        let mut v = BigComplex::one(p);
        let mut dv = BigComplex::zero(p);
        for k in (0..n).rev() {
            dv = dv.mul(z).add(&v);
            v = v.mul(z).add(&coeffs[k].with_prec(p));
        }
        (v, dv)
    };
    // Durand-Kerner at moderate precision
    let p0 = 128u32.min(prec);
    let mut zs: Vec<BigComplex> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64) + 0.4;
            let r = 0.4 + 0.9_f64;
            BigComplex::new(
                Float::with_val(p0, r * angle.cos()),
                Float::with_val(p0, r * angle.sin()),
            )
        })
        .collect();
    for _ in 0..300 {
        let mut moved = Float::with_val(p0, 0);
        for i in 0..n {
            let (v, _) = eval(&zs[i], p0);
            let mut denom = BigComplex::one(p0);
            for j in 0..n {
                if i != j {
                    denom = denom.mul(&zs[i].sub(&zs[j]));
                }
            }
            let step = v.div(&denom);
            let m = step.abs();
            if m > moved {
                moved = m;
            }
            zs[i] = zs[i].sub(&step);
        }
        if moved < Float::with_val(p0, 1) >> (p0 - 16) {
            break;
        }
    }
    // Newton polish at full precision
    zs.into_iter()
        .map(|z0| {
            let mut z = z0.with_prec(prec);
            for _ in 0..64 {
                let (v, dv) = eval(&z, prec);
                if dv.abs().is_zero() {
                    break;
                }
                let step = v.div(&dv);
                let small = step.abs() < Float::with_val(prec, 1) >> (prec - 8);
                z = z.sub(&step);
                if small {
                    break;
                }
            }
            z
        })
        .collect()
}

// ---- reconstruction ----

fn power_iteration_top(b: &CMatrix, prec: u32, iters: u32) -> (Float, Vec<BigComplex>) {
    let n = b.n;
    // shift to make the top algebraic eigenvalue dominant in magnitude
    let mut bound = Float::with_val(prec, 0);
    for i in 0..n {
        let mut row = Float::with_val(prec, 0);
        for j in 0..n {
            row += b.at(i, j).abs();
        }
        if row > bound {
            bound = row;
        }
    }
    let shifted = {
        let mut s = b.clone();
        for i in 0..n {
            let cur = s.at(i, i).add(&BigComplex::from_real(bound.clone()));
            s.set(i, i, cur);
        }
        s
    };
    let mut v: Vec<BigComplex> = (0..n)
        .map(|i| BigComplex::from_int(1 + (i as i64 % 3), prec))
        .collect();
    let mut lambda = Float::with_val(prec, 0);
    for _ in 0..iters {
        let w = shifted.apply(&v);
        let mut norm = Float::with_val(prec, 0);
        for x in &w {
            norm += x.norm_sqr();
        }
        let norm = norm.sqrt();
        v = w.iter().map(|x| x.mul_real(&norm.clone().recip())).collect();
        let bv = shifted.apply(&v);
        lambda = inner(&v, &bv).re;
    }
    (lambda - bound, v)
}

/// Conjugate the invariants with the sign switch `sqrt(delta0) -> -sqrt(delta0)`,
/// rebuild candidate overlaps on the maximal orbit, and reconstruct a live
/// fiducial by eigenvector seeding and Newton refinement.
pub fn conjugate_and_reconstruct(inv: &InvariantSet, prec: u32) -> Result<SicCandidate> {
    let t = &inv.t;
    let d = t.d;
    let db = t.dbar;
    let delta0 = &t.delta0;
    let wp = prec + 64;
    let orders: Vec<u64> = inv.gens.iter().map(|(_, o)| *o).collect();
    let n: u64 = orders.iter().product();
    let m_factors = inv.gens.len();

    // SIC-side coefficients c'_{j,t,l_j} by root bootstrapping
    let mut c_key: Vec<Vec<BigComplex>> = Vec::new();
    for j in 0..m_factors {
        let nj = orders[j] as usize;
        let e_conj: Vec<BigComplex> = inv.e[j]
            .iter()
            .map(|k| BigComplex::from_real(k.conj().embed(delta0, wp)))
            .collect();
        let roots_j = poly_roots(&e_conj, wp);
        // Galois polynomial
        let b_conj: Vec<BigComplex> = inv.b[j]
            .iter()
            .map(|k| BigComplex::from_real(k.conj().embed(delta0, wp)))
            .collect();
        let apply_q = |x: &BigComplex| -> BigComplex {
            let mut acc = BigComplex::zero(wp);
            for c in b_conj.iter().rev() {
                acc = acc.mul(x).add(c);
            }
            acc
        };
        // start from any root and generate the cycle
        let mut cyc = vec![roots_j[0].clone()];
        for _ in 1..nj {
            let next = apply_q(cyc.last().unwrap());
            cyc.push(next);
        }
        // closure check: one more application returns to the start
        let back = apply_q(cyc.last().unwrap());
        if back.dist_max(&cyc[0]) > Float::with_val(wp, 1e-10) {
            return Err(Error::Other(
                "Galois polynomial does not cycle the conjugated roots".into(),
            ));
        }
        c_key.push(cyc);
    }

    // all coefficients c'_{j,t,l} from the conjugated a-invariants
    // K'_{j,t} = roots of sum_l c'_{j,t,l} x^l (monic of degree n/n_j)
    let mut k_sets: Vec<Vec<Vec<BigComplex>>> = Vec::new(); // [j][t] -> roots
    for j in 0..m_factors {
        let nj = orders[j] as usize;
        let deg = (n / orders[j]) as usize;
        let mut per_t = Vec::new();
        for tv in 0..nj {
            let mut coeffs: Vec<BigComplex> = Vec::with_capacity(deg);
            for l in 0..deg {
                if l == inv.ell[j] {
                    coeffs.push(c_key[j][tv].clone());
                } else {
                    let a_l = inv.a[j][l].as_ref().expect("missing a-invariants");
                    // c'_{j,t,l} = sum_r a'_{j,r,l} (c'_{j,t,l_j})^r
                    let mut acc = BigComplex::zero(wp);
                    let mut pw = BigComplex::one(wp);
                    for r in 0..nj {
                        let av = BigComplex::from_real(a_l[r].conj().embed(delta0, wp));
                        acc = acc.add(&av.mul(&pw));
                        pw = pw.mul(&c_key[j][tv]);
                    }
                    coeffs.push(acc);
                }
            }
            per_t.push(poly_roots(&coeffs, wp));
        }
        k_sets.push(per_t);
    }

    // nu'_{t_1..t_m} = the unique common member of the K'_{j,t_j}
    let mut tuples: Vec<Vec<u64>> = vec![vec![]];
    for &o in &orders {
        let mut next = Vec::new();
        for base in &tuples {
            for e in 0..o {
                let mut b2 = base.clone();
                b2.push(e);
                next.push(b2);
            }
        }
        tuples = next;
    }
    let mut nu_prime: HashMap<Vec<u64>, BigComplex> = HashMap::new();
    for s in &tuples {
        // candidates from factor 0, scored by distance to the other sets
        let cands = &k_sets[0][s[0] as usize];
        let mut best: Option<(Float, BigComplex)> = None;
        for c in cands {
            let mut worst = Float::with_val(wp, 0);
            for j in 1..m_factors {
                let set = &k_sets[j][s[j] as usize];
                let mut dmin = Float::with_val(wp, f64::MAX);
                for r in set {
                    let dist = c.dist_max(r);
                    if dist < dmin {
                        dmin = dist;
                    }
                }
                if dmin > worst {
                    worst = dmin;
                }
            }
            if best.as_ref().map(|(b, _)| worst < *b).unwrap_or(true) {
                best = Some((worst, c.clone()));
            }
        }
        let (score, val) = best.unwrap();
        if m_factors > 1 && score > Float::with_val(wp, 1e-10) {
            return Err(Error::Other(format!(
                "no common root for label {s:?} (separation {score})"
            )));
        }
        nu_prime.insert(s.clone(), val);
    }

    // candidate shifts: coset representatives of M / (M intersect ESL)
    let esl: Vec<Mat2Z> = inv
        .group
        .iter()
        .filter(|m| {
            let det = m.det().rem_euc(Integer::from(db));
            det == 1 || det == db - 1
        })
        .cloned()
        .collect();
    let esl_keys: std::collections::HashSet<_> = esl.iter().map(mat_key).collect();
    let mut coset_reps: Vec<Mat2Z> = Vec::new();
    let mut covered: std::collections::HashSet<(u64, u64, u64, u64)> =
        std::collections::HashSet::new();
    for m in &inv.group {
        if covered.contains(&mat_key(m)) {
            continue;
        }
        coset_reps.push(m.clone());
        for h in &esl {
            covered.insert(mat_key(&mat_mul_mod(m, h, db)));
        }
        let _ = &esl_keys;
    }

    // orbit points and the threshold for the eigenvalue filter
    let orbit: Vec<(u64, u64)> = inv.labels.keys().cloned().collect();
    let orbit_size = orbit.len() as u64;
    let threshold = Float::with_val(wp, orbit_size) / Float::with_val(wp, d * (d + 1));
    let sqrt_dp1 = (Float::with_val(wp, d) + 1u32).sqrt();
    let mut diagnostics = Vec::new();
    for shift in &coset_reps {
        // B = (1/d) sum_{p in orbit} [nu'_{label(shift p)} / sqrt(d+1)] D_p
        let mut b = CMatrix::zeros(d as usize, wp);
        let mut labelled = true;
        for pt in &orbit {
            let sp = apply_mod(shift, pt, db);
            let Some(s) = inv.labels.get(&sp) else {
                labelled = false;
                break;
            };
            let val = nu_prime[s].mul_real(&sqrt_dp1.clone().recip());
            let p = (Integer::from(pt.0), Integer::from(pt.1));
            let dp = displacement(d, &p, wp);
            b = b.add(&dp.scale(&val));
        }
        if !labelled {
            continue;
        }
        let inv_d = Float::with_val(wp, 1) / Float::with_val(wp, d);
        for v in &mut b.e {
            *v = v.mul_real(&inv_d);
        }
        // Hermitian by construction (the orbit contains -I); filter by lambda_max
        let (lam, vtop) = power_iteration_top(&b, wp.min(192), 400);
        if lam < Float::with_val(wp, &threshold - Float::with_val(wp, 0.01)) {
            diagnostics.push(format!(
                "shift {shift}: lambda_max = {:.6} below threshold {:.6}",
                lam.to_f64(),
                threshold.to_f64()
            ));
            continue;
        }
        // seed and refine
        let seed: Vec<BigComplex> = vtop.iter().map(|x| x.with_prec(wp)).collect();
        match sic_newton_refine(d, &seed, prec) {
            Ok(psi) => {
                // equiangularity
                let resid = equiangularity_residual(d, &psi, prec);
                if resid < Float::with_val(prec, 1e-18) {
                    return Ok(SicCandidate {
                        d,
                        psi,
                        prec,
                        equiangularity_residual: resid,
                        candidate_shift: shift.clone(),
                    });
                }
                diagnostics.push(format!(
                    "shift {shift}: refined but equiangularity residual {resid}"
                ));
            }
            Err(e) => {
                diagnostics.push(format!("shift {shift}: {e}"));
            }
        }
    }
    Err(Error::CandidatesExhausted(diagnostics.join("; ")))
}

/// Rebuild the normalized overlap table from a (refined) ghost vector:
/// `nu_p = sqrt(d+1) lambda <psi|U_P D_p^dag|psi>` over the transversal.
/// This is how high-precision tables are produced without high-precision
/// quadrature.
pub fn table_from_vector(t: &AdmissibleTuple, gv: &GhostVector) -> Result<GhostOverlapTable> {
    if t.r != 1 {
        return Err(Error::Domain("vector tables need rank 1".into()));
    }
    let d = t.d;
    let prec = gv.prec;
    let sqrt_n = (Float::with_val(prec, d) + 1u32).sqrt();
    let lam = BigComplex::from_int(gv.lambda as i64, prec);
    let mut nu = Vec::with_capacity((d * d) as usize);
    let mut max_imag = Float::with_val(prec, 0);
    for p1 in 0..d {
        for p2 in 0..d {
            if p1 == 0 && p2 == 0 {
                // the trace at p = 0 carries mu_0 = 1, not nu_0;
                // nu_0 = -1/sqrt(j_A(rho)) is exact field data
                let j_plus = {
                    let (_, _, _, a) = stabilizers(t)?;
                    let (rho, _) = roots(&t.q, prec + 16);
                    a.j_factor(&rho)
                };
                nu.push(-j_plus.sqrt().recip());
                continue;
            }
            // Tr(Pi D_p^dag) = lambda <psi|U_P D_{-p}|psi>
            let mp = (Integer::from(-(p1 as i64)), Integer::from(-(p2 as i64)));
            let b = inner(&gv.psi, &up_dp_apply(d, &mp, &gv.psi, prec));
            let val = lam.mul(&b).mul_real(&sqrt_n);
            if val.im.clone().abs() > max_imag {
                max_imag = val.im.clone().abs();
            }
            nu.push(val.re);
        }
    }
    GhostOverlapTable::from_raw(t.clone(), prec, nu, sqrt_n, max_imag)
}

/// End-to-end necromancy for a rank-1 tuple: bootstrap a ghost from the
/// quadrature at modest precision, amplify with Newton, recognize the
/// invariants, conjugate, and reconstruct a live fiducial.
pub fn necromancy_pipeline(
    t: &AdmissibleTuple,
    bootstrap_prec: u32,
    invariant_prec: u32,
    out_prec: u32,
    height_bound: &Integer,
) -> Result<SicCandidate> {
    let ghost = crate::ghost::ghost_fiducial(t, 1, bootstrap_prec)?;
    let gv = ghost_vector(&ghost)?;
    let refined = newton_refine(&gv, invariant_prec)?;
    let table = table_from_vector(t, &refined)?;
    let inv = ghost_invariants(t, &table, height_bound)?;
    conjugate_and_reconstruct(&inv, out_prec)
}

/// `max_{p != 0} | |Tr(Pi D_p^dag)| - sqrt(1/(d+1)) |` for `Pi = psi psi^dag / |psi|^2`.
pub fn equiangularity_residual(d: u64, psi: &[BigComplex], prec: u32) -> Float {
    let mut norm = Float::with_val(prec, 0);
    for x in psi {
        norm += x.norm_sqr();
    }
    let target = (Float::with_val(prec, 1) / Float::with_val(prec, d + 1)).sqrt();
    let mut worst = Float::with_val(prec, 0);
    for p1 in 0..d {
        for p2 in 0..d {
            if p1 == 0 && p2 == 0 {
                continue;
            }
            let p = (Integer::from(p1), Integer::from(p2));
            // Tr(Pi D_p^dag) = <psi| D_p^dag |psi> / |psi|^2
            let a = inner(psi, &dp_apply(d, &p, psi, prec)).conj();
            let m = a.abs() / &norm;
            let dev = (m - &target).abs();
            if dev > worst {
                worst = dev;
            }
        }
    }
    worst
}

/// Full verification report for a candidate fiducial vector.
pub fn verify_sic(candidate: &SicCandidate) -> SicReport {
    let d = candidate.d;
    let prec = candidate.prec;
    let psi = &candidate.psi;
    let mut norm = Float::with_val(prec, 0);
    for x in psi {
        norm += x.norm_sqr();
    }
    let n = d as usize;
    let mut pi = CMatrix::zeros(n, prec);
    for i in 0..n {
        for j in 0..n {
            pi.set(i, j, psi[i].mul(&psi[j].conj()).mul_real(&norm.clone().recip()));
        }
    }
    let overlap_residual = equiangularity_residual(d, psi, prec);
    let hermiticity_residual = pi.dist_max(&pi.dagger());
    // Gram residual on sampled pairs
    let alpha_diag = Float::with_val(prec, d) / Float::with_val(prec, d + 1)
        + Float::with_val(prec, d - 1) / (Float::with_val(prec, d * d) - 1u32);
    let _ = alpha_diag;
    let mut gram_residual = Float::with_val(prec, 0);
    let sample: Vec<(u64, u64)> = (0..d.min(5))
        .flat_map(|a| (0..d.min(5)).map(move |b| (a, b)))
        .collect();
    for (i, pa) in sample.iter().enumerate() {
        for pb in sample.iter().skip(i) {
            let p1 = (Integer::from(pa.0), Integer::from(pa.1));
            let p2 = (Integer::from(pb.0), Integer::from(pb.1));
            let d1 = displacement(d, &p1, prec);
            let d2 = displacement(d, &p2, prec);
            let pi1 = d1.mul(&pi).mul(&d1.dagger());
            let pi2 = d2.mul(&pi).mul(&d2.dagger());
            let got = pi1.mul(&pi2).trace();
            let expect = if pa == pb {
                Float::with_val(prec, 1)
            } else {
                // r = 1: off-diagonal Gram value (d-1)/(d^2-1) = 1/(d+1)
                Float::with_val(prec, 1) / Float::with_val(prec, d + 1)
            };
            let dev = got.sub(&BigComplex::from_real(expect)).abs();
            if dev > gram_residual {
                gram_residual = dev;
            }
        }
    }
    // resolution of the identity: sum_p Pi_p = d I
    let mut total = CMatrix::zeros(n, prec);
    for p1 in 0..d {
        for p2 in 0..d {
            let p = (Integer::from(p1), Integer::from(p2));
            let dp = displacement(d, &p, prec);
            total = total.add(&dp.mul(&pi).mul(&dp.dagger()));
        }
    }
    let target = CMatrix::identity(n, prec).scale(&BigComplex::from_int(d as i64, prec));
    let resolution_residual = total.dist_max(&target);
    SicReport {
        overlap_residual,
        gram_residual,
        resolution_residual,
        hermiticity_residual,
    }
}

/// Whether the fiducial has the canonical order-3 symmetry inherited from
/// the stabilizer: some conjugate of `[L_z]` under `diag(1, k)` fixes it.
pub fn order3_symmetry_holds(
    t: &AdmissibleTuple,
    psi: &[BigComplex],
    tol_exp: u32,
) -> Result<bool> {
    let d = t.d;
    let db = t.dbar;
    let prec = psi[0].prec();
    let (_, _, lz, _) = stabilizers(t)?;
    let mut norm = Float::with_val(prec, 0);
    for x in psi {
        norm += x.norm_sqr();
    }
    let n = d as usize;
    let mut pi = CMatrix::zeros(n, prec);
    for i in 0..n {
        for j in 0..n {
            pi.set(i, j, psi[i].mul(&psi[j].conj()).mul_real(&norm.clone().recip()));
        }
    }
    let tol = Float::with_val(prec, 1) >> tol_exp;
    for k in 1..db {
        if Integer::from(k).gcd(&Integer::from(db)) != 1 {
            continue;
        }
        let h = Mat2Z::from_integers(
            Integer::from(1),
            Integer::from(0),
            Integer::from(0),
            Integer::from(k),
        );
        let h_inv = Mat2Z::from_integers(
            Integer::from(1),
            Integer::from(0),
            Integer::from(0),
            Integer::from(k).invert(&Integer::from(db)).unwrap(),
        );
        for sign in [1i64, -1] {
            let mut r = mat_mul_mod(&mat_mul_mod(&h, &lz, db), &h_inv, db);
            if sign == -1 {
                r = mat_mod(&r.neg(), db);
            }
            let Ok(u) = crate::weylheis::symplectic_unitary(d, &r, prec) else {
                continue;
            };
            let conj = u.mul(&pi).mul(&u.dagger());
            if conj.dist_max(&pi) < tol {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghost::ghost_fiducial;
    use crate::quadforms::QuadForm;

    fn tuple_d4() -> AdmissibleTuple {
        AdmissibleTuple::new(4, 1, QuadForm::from_ints(1, -3, 1).unwrap()).unwrap()
    }

    #[test]
    fn recognize_quadratic_examples() {
        let p = 256;
        let x = Float::with_val(p, 2) - Float::with_val(p, 5).sqrt();
        let (u, v) = recognize_quadratic(&x, &Integer::from(5), &Integer::from(1000)).unwrap();
        assert_eq!(u, Rational::from(2));
        assert_eq!(v, Rational::from(-1));
        let x = Float::with_val(p, 1) / 3u32;
        let (u, v) = recognize_quadratic(&x, &Integer::from(5), &Integer::from(1000)).unwrap();
        assert_eq!(u, Rational::from((1, 3)));
        assert_eq!(v, Rational::from(0));
    }

    #[test]
    fn recognize_quadratic_fuzz() {
        let p = 340;
        let delta0 = Integer::from(12);
        for (un, ud, vn, vd) in [(913_271i64, 1_000_003i64, -77i64, 997i64), (5, 7, 131_071, 524_287)] {
            let u = Rational::from((un, ud));
            let v = Rational::from((vn, vd));
            let x = Float::with_val(p, &u) + Float::with_val(p, &v) * Float::with_val(p, &delta0).sqrt();
            let (gu, gv) = recognize_quadratic(&x, &delta0, &Integer::from(2_000_000)).unwrap();
            assert_eq!(gu, u);
            assert_eq!(gv, v);
        }
    }

    #[test]
    fn ghost_vector_round_trip() {
        let t = tuple_d4();
        let g = ghost_fiducial(&t, 1, 224).unwrap();
        let gv = ghost_vector(&g).unwrap();
        assert!(gv.lambda == 1 || gv.lambda == -1);
        // lambda <psi|U_P|psi> = 1
        let up = parity(4, gv.prec);
        let val = inner(&gv.psi, &up.apply(&gv.psi));
        let target = BigComplex::from_int(gv.lambda as i64, gv.prec);
        assert!(val.dist_max(&target) < Float::with_val(gv.prec, 1e-30));
        // reconstruction
        let n = 4usize;
        let mut outer = CMatrix::zeros(n, gv.prec);
        for i in 0..n {
            for j in 0..n {
                outer.set(i, j, gv.psi[i].mul(&gv.psi[j].conj()));
            }
        }
        let recon = outer
            .scale(&BigComplex::from_int(gv.lambda as i64, gv.prec))
            .mul(&up);
        assert!(recon.dist_max(&g.matrix) < Float::with_val(gv.prec, 1e-25));
    }

    #[test]
    fn newton_quadratic_convergence() {
        let t = tuple_d4();
        let g = ghost_fiducial(&t, 1, 224).unwrap();
        let gv = ghost_vector(&g).unwrap();
        // perturb to a known modest residual, then watch it square away
        let mut psi = gv.psi.clone();
        let bump = BigComplex::new(
            Float::with_val(gv.prec, 1e-7),
            Float::with_val(gv.prec, -2e-8),
        );
        psi[1] = psi[1].add(&bump);
        let r0 = ghost_system_residual(4, &psi, gv.prec);
        let psi1 = ghost_newton_step(4, &psi, gv.prec).unwrap();
        let r1 = ghost_system_residual(4, &psi1, gv.prec);
        let psi2 = ghost_newton_step(4, &psi1, gv.prec).unwrap();
        let r2 = ghost_system_residual(4, &psi2, gv.prec);
        // log-residual ratios approach 2
        let l0 = -r0.to_f64().log2();
        let l1 = -r1.to_f64().log2();
        let l2 = -r2.to_f64().log2();
        assert!(l1 > 1.7 * l0, "first step not quadratic: {l0} -> {l1}");
        assert!(l2 > 1.7 * l1 || r2 < Float::with_val(gv.prec, 1) >> 200, "{l1} -> {l2}");
    }

    #[test]
    fn newton_refine_reaches_target() {
        let t = tuple_d4();
        let g = ghost_fiducial(&t, 1, 224).unwrap();
        let gv = ghost_vector(&g).unwrap();
        let refined = newton_refine(&gv, 700).unwrap();
        let resid = ghost_system_residual(4, &refined.psi, 700);
        assert!(resid < Float::with_val(700, 1) >> 690);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let t = tuple_d4();
        let g = ghost_fiducial(&t, 1, 224).unwrap();
        let gv = ghost_vector(&g).unwrap();
        let prec = 224u32;
        let d = 4u64;
        let psi = &gv.psi;
        // compare dF/dx for one p and a few variables against central differences
        let p = (Integer::from(1), Integer::from(2));
        let mp = (Integer::from(-1), Integer::from(-2));
        let f_of = |psi: &[BigComplex]| -> BigComplex {
            let b1 = inner(psi, &up_dp_apply(d, &p, psi, prec));
            let b2 = inner(psi, &up_dp_apply(d, &mp, psi, prec));
            b1.mul(&b2)
        };
        let h = Float::with_val(prec, 1e-20);
        for k in 0..4usize {
            for im_part in [false, true] {
                let mut plus = psi.clone();
                let mut minus = psi.clone();
                let delta = if im_part {
                    BigComplex::new(Float::new(prec), h.clone())
                } else {
                    BigComplex::new(h.clone(), Float::new(prec))
                };
                plus[k] = plus[k].add(&delta);
                minus[k] = minus[k].sub(&delta);
                let fd = f_of(&plus)
                    .sub(&f_of(&minus))
                    .mul_real(&(Float::with_val(prec, 0.5) / h.clone()));
                // analytic
                let u1 = up_dp_apply(d, &p, psi, prec);
                let u2 = up_dp_apply(d, &mp, psi, prec);
                let b1 = inner(psi, &u1);
                let b2 = inner(psi, &u2);
                let m1d = apply_up_dp_dagger(d, &p, psi, prec);
                let m2d = apply_up_dp_dagger(d, &mp, psi, prec);
                let d1 = if !im_part {
                    u1[k].add(&m1d[k].conj())
                } else {
                    u1[k].mul_i().neg().add(&m1d[k].conj().mul_i())
                };
                let d2 = if !im_part {
                    u2[k].add(&m2d[k].conj())
                } else {
                    u2[k].mul_i().neg().add(&m2d[k].conj().mul_i())
                };
                let an = d1.mul(&b2).add(&b1.mul(&d2));
                let rel = fd.dist_max(&an) / (an.abs() + Float::with_val(prec, 1e-30));
                assert!(rel < 1e-6, "jacobian mismatch at k={k}, im={im_part}: {rel}");
            }
        }
    }

    #[test]
    fn necromancy_d4_end_to_end() {
        let t = tuple_d4();
        let cand = necromancy_pipeline(&t, 320, 1400, 256, &Integer::from(1_000_000)).unwrap();
        assert!(cand.equiangularity_residual < Float::with_val(256, 1e-20));
        let report = verify_sic(&cand);
        assert!(report.hermiticity_residual < Float::with_val(256, 1e-30));
        assert!(report.resolution_residual < Float::with_val(256, 1e-18));
        assert!(report.gram_residual < Float::with_val(256, 1e-18));
        // canonical order-3 symmetry
        assert!(order3_symmetry_holds(&t, &cand.psi, 60).unwrap());
    }

    #[test]
    fn invariants_d4_recognized() {
        let t = tuple_d4();
        let ghost = ghost_fiducial(&t, 1, 320).unwrap();
        let gv = ghost_vector(&ghost).unwrap();
        let refined = newton_refine(&gv, 1400).unwrap();
        let table = table_from_vector(&t, &refined).unwrap();
        let inv = ghost_invariants(&t, &table, &Integer::from(1_000_000)).unwrap();
        // residuals certify the recognition quality
        assert!(inv.max_residual < Float::with_val(1400, 1) >> 500);
        let n: u64 = inv.gens.iter().map(|(_, o)| o).product();
        assert!(n >= 2, "quotient group should be nontrivial, got {n}");
        // negative control: corrupting an invariant moves the factor-0 root
        // cycle off the other factors and reconstruction reports failure
        let mut bad = inv.clone();
        bad.e[0][0].u += Rational::from(7);
        assert!(conjugate_and_reconstruct(&bad, 192).is_err());
    }

    #[test]
    fn lll_finds_simple_relation() {
        // relation 2 - sqrt(4) = 0 disguised: x = 7/3 exactly
        let p = 192;
        let x = Float::with_val(p, 7) / 3u32;
        let got = recognize_quadratic(&x, &Integer::from(8), &Integer::from(100)).unwrap();
        assert_eq!(got.0, Rational::from((7, 3)));
        assert_eq!(got.1, Rational::from(0));
    }
}

