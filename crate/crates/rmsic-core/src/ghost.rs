//! Ghost overlaps from real-multiplication cocycle values, ghost fiducial
//! assembly, the twisted convolution residual, and the transform/alignment
//! verifiers.

use crate::bigc::{BigComplex, BigReal};
use crate::error::Error;
use crate::phases::{RootOfUnity, SfPhases};
use crate::quadforms::{apply_gl2, roots, stabilizers, Mat2Z};
use crate::sf::shin;
use crate::towers::AdmissibleTuple;
use crate::weylheis::{parity, CMatrix};
use crate::Result;
use rayon::prelude::*;
use rug::ops::RemRounding;
use rug::{Float, Integer, Rational};

/// Real normalized ghost overlaps over the transversal `0 <= p1, p2 < d`.
#[derive(Debug, Clone)]
pub struct GhostOverlapTable {
    pub t: AdmissibleTuple,
    pub prec: u32,
    nu: Vec<BigReal>,
    /// `sqrt(d_j + 1)`, the overlap normalization.
    pub sqrt_n: BigReal,
    /// Largest imaginary part seen before realification.
    pub max_imag: BigReal,
}

fn idx(d: u64, p1: u64, p2: u64) -> usize {
    (p1 * d + p2) as usize
}

impl GhostOverlapTable {
    /// Evaluate `nu_p = phi_p(t) shin^{p/d}_{A_t}(rho_t)` over the transversal.
    pub fn compute(t: &AdmissibleTuple, prec: u32) -> Result<Self> {
        let d = t.d;
        let (_, _, _, a) = stabilizers(t)?;
        let (rho, _) = roots(&t.q, prec + 32);
        let tau = BigComplex::from_real(rho.clone());
        let phases = SfPhases::new(t)?;
        let guard_tol = Float::with_val(prec, 1) >> (prec.saturating_sub(prec / 4));

        let points: Vec<(u64, u64)> = (0..d)
            .flat_map(|p1| (0..d).map(move |p2| (p1, p2)))
            .collect();
        let values: Result<Vec<(usize, BigReal, BigReal)>> = points
            .par_iter()
            .map(|&(p1, p2)| {
                let i = idx(d, p1, p2);
                if p1 == 0 && p2 == 0 {
                    // nu_0 = -1/sqrt(j_A(rho))
                    let j = a.j_factor(&rho);
                    let v = -j.sqrt().recip();
                    return Ok((i, v, Float::with_val(prec, 0)));
                }
                let pvec = (Integer::from(p1), Integer::from(p2));
                let r = (
                    Rational::from((pvec.0.clone(), Integer::from(d))),
                    Rational::from((pvec.1.clone(), Integer::from(d))),
                );
                let s = shin(&r, &a, &tau, prec)?;
                let phi = phases.phase(&pvec).to_complex(prec);
                let nu = phi.mul(&s);
                Ok((i, nu.re, nu.im.abs()))
            })
            .collect();
        let values = values?;
        let mut nu = vec![Float::new(prec); (d * d) as usize];
        let mut max_imag = Float::with_val(prec, 0);
        for (i, re, im) in values {
            nu[i] = re;
            if im > max_imag {
                max_imag = im;
            }
        }
        if max_imag > guard_tol {
            return Err(Error::NotReal(max_imag.to_string()));
        }
        let sqrt_n = (Float::with_val(prec, &t.d_j) + 1u32).sqrt();
        Ok(GhostOverlapTable {
            t: t.clone(),
            prec,
            nu,
            sqrt_n,
            max_imag,
        })
    }

    /// Assemble a table from externally computed entries (row-major over
    /// the transversal).
    pub(crate) fn from_raw(
        t: AdmissibleTuple,
        prec: u32,
        nu: Vec<BigReal>,
        sqrt_n: BigReal,
        max_imag: BigReal,
    ) -> Result<Self> {
        if nu.len() != (t.d * t.d) as usize {
            return Err(Error::Other("table size mismatch".into()));
        }
        Ok(GhostOverlapTable {
            t,
            prec,
            nu,
            sqrt_n,
            max_imag,
        })
    }

    /// `nu_p` for any integer vector, through the quasi-periodic extension
    /// `nu_{p + d q} = xi_d^{<p + d q, p>} nu_p` (the factor is a sign).
    pub fn nu(&self, p: &(Integer, Integer)) -> BigReal {
        let d = Integer::from(self.t.d);
        let p1 = p.0.clone().rem_euc(d.clone());
        let p2 = p.1.clone().rem_euc(d.clone());
        let base = self.nu[idx(
            self.t.d,
            p1.to_u64().unwrap(),
            p2.to_u64().unwrap(),
        )]
        .clone();
        if p1.is_zero() && p2.is_zero() && !(p.0.is_zero() && p.1.is_zero()) {
            // off-transversal representative of 0 is not covered by the
            // quasi-periodicity; treat as nu_0 which is what it equals
            return base;
        }
        // sign = xi_d^{<p, p0>} with <p, p0> = p2 p0_1 - p1 p0_2, divisible by d
        let symp = Integer::from(&p.1 * &p1) - Integer::from(&p.0 * &p2);
        let sign = RootOfUnity::new(
            symp * Integer::from(self.t.d + 1),
            Integer::from(2 * self.t.d),
        );
        match sign.real_sign() {
            Some(1) => base,
            Some(-1) => -base,
            _ => unreachable!("quasi-periodic factor must be a sign"),
        }
    }

    /// Ghost overlap `mu_p`: `r` on the zero class, `nu_p/sqrt(d_j+1)` else.
    pub fn mu(&self, p: &(Integer, Integer)) -> BigReal {
        let d = Integer::from(self.t.d);
        if p.0.is_divisible(&d) && p.1.is_divisible(&d) {
            return Float::with_val(self.prec, self.t.r);
        }
        self.nu(p) / &self.sqrt_n
    }
}

/// Assembled ghost fiducial with its residual certificates.
#[derive(Debug, Clone)]
pub struct GhostFiducial {
    pub t: AdmissibleTuple,
    pub shift: i64,
    pub twist: Mat2Z,
    pub matrix: CMatrix,
    pub prec: u32,
    pub residual_idempotency: Float,
    pub residual_trace: Float,
    pub residual_parity: Float,
}

/// Twist `G = diag(1, f_t(shift)^{-1} mod dbar)` solving
/// `det(G) r (2 shift + d_j - 1 + d) = 1 mod dbar`.
pub fn twist_for_shift(t: &AdmissibleTuple, shift: i64) -> Result<Mat2Z> {
    let db = Integer::from(t.dbar);
    let ft = (Integer::from(2 * shift) + Integer::from(t.d) + &t.d_j - 1u32)
        * Integer::from(t.r);
    let ft = ft.rem_euc(db.clone());
    let det_inv = ft.invert(&db).map_err(|_| Error::InvalidShift {
        shift,
        d: t.d,
    })?;
    Ok(Mat2Z::from_integers(
        Integer::from(1),
        Integer::from(0),
        Integer::from(0),
        det_inv,
    ))
}

/// Assemble the ghost fiducial `(1/d) sum_p mu_{G p} D_p` and attach the
/// idempotency, trace, and parity-Hermiticity residuals.
pub fn ghost_fiducial(t: &AdmissibleTuple, shift: i64, prec: u32) -> Result<GhostFiducial> {
    let table = GhostOverlapTable::compute(t, prec)?;
    ghost_fiducial_from_table(&table, shift)
}

/// Assembly from a precomputed overlap table.
pub fn ghost_fiducial_from_table(
    table: &GhostOverlapTable,
    shift: i64,
) -> Result<GhostFiducial> {
    let t = &table.t;
    let prec = table.prec;
    let d = t.d;
    let g = twist_for_shift(t, shift)?;
    let n = d as usize;
    let mut m = CMatrix::zeros(n, prec);
    for p1 in 0..d {
        for p2 in 0..d {
            let p = (Integer::from(p1), Integer::from(p2));
            let gp = g.apply_vec(&p);
            let coeff = table.mu(&gp);
            // D_p is monomial: add coeff * D_p entrywise
            let disp = crate::weylheis::Displacement::from_vec(d, &p);
            for col in 0..d {
                let row = disp.row_of_col(col);
                let phase = disp.entry_phase(col).to_complex(prec);
                let cur = m
                    .at(row as usize, col as usize)
                    .add(&phase.mul_real(&coeff));
                m.set(row as usize, col as usize, cur);
            }
        }
    }
    let inv_d = Float::with_val(prec, 1) / Float::with_val(prec, d);
    for v in &mut m.e {
        *v = v.mul_real(&inv_d);
    }
    // residuals
    let mm = m.mul(&m);
    let residual_idempotency = mm.dist_max(&m);
    let tr = m.trace();
    let residual_trace = tr
        .sub(&BigComplex::from_int(t.r as i64, prec))
        .abs();
    let up = parity(d, prec);
    let lhs = up.mul(&m).mul(&up);
    let residual_parity = lhs.dist_max(&m.dagger());
    Ok(GhostFiducial {
        t: t.clone(),
        shift,
        twist: g,
        matrix: m,
        prec,
        residual_idempotency,
        residual_trace,
        residual_parity,
    })
}

/// Cocycle value tables over the transversal, for the convolution check.
pub struct ShinTables {
    pub t: AdmissibleTuple,
    pub prec: u32,
    a_table: Vec<BigComplex>,
    a_inv_table: Vec<BigComplex>,
}

impl ShinTables {
    /// Evaluate `shin^{q/d}` for `A_t` and for `A_t^{-1}` over the transversal.
    /// The two tables are computed independently (no use of the inversion
    /// identity), so the convolution check exercises both routes.
    pub fn compute(t: &AdmissibleTuple, prec: u32) -> Result<Self> {
        let d = t.d;
        let (_, _, _, a) = stabilizers(t)?;
        let a_inv = a.inverse()?;
        let (rho, _) = roots(&t.q, prec + 32);
        let tau = BigComplex::from_real(rho);
        let points: Vec<(u64, u64)> = (0..d)
            .flat_map(|p1| (0..d).map(move |p2| (p1, p2)))
            .collect();
        let compute_for = |m: &Mat2Z| -> Result<Vec<BigComplex>> {
            let vals: Result<Vec<(usize, BigComplex)>> = points
                .par_iter()
                .map(|&(q1, q2)| {
                    let r = (
                        Rational::from((Integer::from(q1), Integer::from(d))),
                        Rational::from((Integer::from(q2), Integer::from(d))),
                    );
                    Ok((idx(d, q1, q2), shin(&r, m, &tau, prec)?))
                })
                .collect();
            let mut out = vec![BigComplex::zero(prec); (d * d) as usize];
            for (i, v) in vals? {
                out[i] = v;
            }
            Ok(out)
        };
        Ok(ShinTables {
            t: t.clone(),
            prec,
            a_table: compute_for(&a)?,
            a_inv_table: compute_for(&a_inv)?,
        })
    }

    fn lookup(&self, table: &[BigComplex], q: &(Integer, Integer)) -> BigComplex {
        let d = Integer::from(self.t.d);
        let q1 = q.0.clone().rem_euc(d.clone()).to_u64().unwrap();
        let q2 = q.1.clone().rem_euc(d).to_u64().unwrap();
        table[idx(self.t.d, q1, q2)].clone()
    }
}

/// The twisted convolution residual at index `p`:
/// `sum_{q in I_p} omega_d^{r <p, (shift I + L_z) q>} shin^{q/d}_A(rho)
///  shin^{(q-p)/d}_{A^-1}(rho) - d^2 delta_{p,0}`.
pub fn tcc_residual(
    tables: &ShinTables,
    shift: i64,
    p: &(Integer, Integer),
) -> Result<BigComplex> {
    let t = &tables.t;
    let d = t.d;
    let prec = tables.prec;
    // validity of the shift: 2 shift + d_j - 1 coprime to d
    let cond = (Integer::from(2 * shift) + &t.d_j - 1u32).rem_euc(Integer::from(d));
    if Integer::from(cond.gcd_ref(&Integer::from(d))) != 1 {
        return Err(Error::InvalidShift { shift, d });
    }
    let (_, _, lz, _) = stabilizers(t)?;
    let shift_i = Integer::from(shift);
    let mut acc = BigComplex::zero(prec);
    for q1 in 0..d {
        for q2 in 0..d {
            let q = (Integer::from(q1), Integer::from(q2));
            let lzq = lz.apply_vec(&q);
            let wq = (
                Integer::from(&shift_i * &q.0) + &lzq.0,
                Integer::from(&shift_i * &q.1) + &lzq.1,
            );
            // <p, w> = w... symplectic form <p, v> = p2 v1 - p1 v2
            let symp = Integer::from(&p.1 * &wq.0) - Integer::from(&p.0 * &wq.1);
            let e = (symp * Integer::from(t.r)).rem_euc(Integer::from(d));
            let omega = RootOfUnity::new(e, Integer::from(d)).to_complex(prec);
            let s1 = tables.lookup(&tables.a_table, &q);
            let diff = (Integer::from(&q.0 - &p.0), Integer::from(&q.1 - &p.1));
            let s2 = tables.lookup(&tables.a_inv_table, &diff);
            acc = acc.add(&omega.mul(&s1).mul(&s2));
        }
    }
    let d_i = Integer::from(d);
    if p.0.is_divisible(&d_i) && p.1.is_divisible(&d_i) {
        acc = acc.sub(&BigComplex::from_int((d * d) as i64, prec));
    }
    Ok(acc)
}

/// Largest twisted-convolution residual over all `p` in the transversal.
pub fn tcc_max_residual(tables: &ShinTables, shift: i64) -> Result<Float> {
    let d = tables.t.d;
    let mut worst = Float::with_val(tables.prec, 0);
    for p1 in 0..d {
        for p2 in 0..d {
            let r = tcc_residual(tables, shift, &(Integer::from(p1), Integer::from(p2)))?;
            let a = r.abs();
            if a > worst {
                worst = a;
            }
        }
    }
    Ok(worst)
}

/// Deviation `max_p |nu^{t_M}_p - nu^t_{l M p}|` with `l = sgn(j_{M^-1}(rho))`.
pub fn m_transform_check(t: &AdmissibleTuple, m: &Mat2Z, prec: u32) -> Result<Float> {
    let qm = apply_gl2(&t.q, m)?;
    let tm = AdmissibleTuple::new(t.d, t.r, qm)?;
    let table_t = GhostOverlapTable::compute(t, prec)?;
    let table_tm = GhostOverlapTable::compute(&tm, prec)?;
    let (rho, _) = roots(&t.q, prec);
    let m_inv = m.inverse()?;
    let l: i64 = if m_inv.j_factor(&rho).is_sign_negative() {
        -1
    } else {
        1
    };
    let mut worst = Float::with_val(prec, 0);
    for p1 in 0..t.d {
        for p2 in 0..t.d {
            if p1 == 0 && p2 == 0 {
                continue;
            }
            let p = (Integer::from(p1), Integer::from(p2));
            let mp = m.apply_vec(&p);
            let lmp = (Integer::from(l) * &mp.0, Integer::from(l) * &mp.1);
            let lhs = table_tm.nu(&p);
            let rhs = table_t.nu(&lmp);
            let dev = Float::with_val(prec, &lhs - &rhs).abs();
            if dev > worst {
                worst = dev;
            }
        }
    }
    Ok(worst)
}

/// Ghost-side alignment between positions `j` and `n j` of a tower:
/// `nu_{t', kappa p} = (-1)^{l(p)} nu_{t,p}^n` with `kappa = d_{nj}/d_j`.
pub fn alignment_check(delta0: &Integer, j: u64, n: u64, prec: u32) -> Result<Float> {
    if n % 3 == 0 {
        return Err(Error::Domain("power must be coprime to 3".into()));
    }
    let q = crate::hjcf::minimal_forms_of_disc(delta0)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Other("no classes".into()))?;
    let dj = crate::towers::dimension_tower(delta0, j * n)?;
    let d = dj[(j - 1) as usize].to_u64().unwrap();
    let dn = dj[(j * n - 1) as usize].to_u64().unwrap();
    let kappa = Integer::from(dn / d);
    let t = AdmissibleTuple::new(d, 1, q.clone())?;
    let t2 = AdmissibleTuple::new(dn, 1, q)?;
    if n == 1 {
        return Ok(Float::with_val(prec, 0));
    }
    let table = GhostOverlapTable::compute(&t, prec)?;
    let table2 = GhostOverlapTable::compute(&t2, prec)?;
    // l(p) = n + (1+p1)(1+p2) when d_j even and n = +-2, +-5 mod 12; n+1 else
    let special = d % 2 == 0 && matches!(n % 12, 2 | 5 | 7 | 10);
    let mut worst = Float::with_val(prec, 0);
    for p1 in 0..d {
        for p2 in 0..d {
            if p1 == 0 && p2 == 0 {
                continue;
            }
            let p = (Integer::from(p1), Integer::from(p2));
            let kp = (Integer::from(&kappa * &p.0), Integer::from(&kappa * &p.1));
            let lhs = table2.nu(&kp);
            let mut rhs = Float::with_val(prec, 1);
            let base = table.nu(&p);
            for _ in 0..n {
                rhs *= &base;
            }
            let lp = if special {
                n + (1 + p1) * (1 + p2)
            } else {
                n + 1
            };
            if lp % 2 == 1 {
                rhs = -rhs;
            }
            let dev = Float::with_val(prec, &lhs - &rhs).abs();
            if dev > worst {
                worst = dev;
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadforms::QuadForm;
    use crate::weylheis::displacement;

    fn tuple_d4() -> AdmissibleTuple {
        AdmissibleTuple::new(4, 1, QuadForm::from_ints(1, -3, 1).unwrap()).unwrap()
    }

    #[test]
    fn nu_zero_value() {
        // nu_0 = 2 - sqrt(5) for the root tuple over sqrt(5)
        let t = tuple_d4();
        let table = GhostOverlapTable::compute(&t, 192).unwrap();
        let got = table.nu(&(Integer::from(0), Integer::from(0)));
        let expect = Float::with_val(192, 2) - Float::with_val(192, 5).sqrt();
        assert!(Float::with_val(192, &got - &expect).abs() < 1e-40);
    }

    #[test]
    fn nu_zero_sum_rule() {
        // nu_0 + 1/nu_0 = -(d - 2r) sqrt(d_j + 1)
        for (d, r, f) in [(4u64, 1u64, (1, -3, 1)), (11, 3, (1, -3, 1))] {
            let q = QuadForm::from_ints(f.0, f.1, f.2).unwrap();
            let t = AdmissibleTuple::new(d, r, q).unwrap();
            let table = GhostOverlapTable::compute(&t, 192).unwrap();
            let nu0 = table.nu(&(Integer::from(0), Integer::from(0)));
            let lhs = Float::with_val(192, &nu0 + Float::with_val(192, nu0.clone().recip()));
            let expect = -Float::with_val(192, (d - 2 * r) as f64)
                * (Float::with_val(192, &t.d_j) + 1u32).sqrt();
            assert!(Float::with_val(192, &lhs - &expect).abs() < 1e-40);
        }
    }

    #[test]
    fn nu_product_identity() {
        // nu_p nu_{-p} = 1 for p not 0 mod d
        let q = QuadForm::from_ints(1, -4, 1).unwrap();
        let t = AdmissibleTuple::new(5, 1, q).unwrap();
        let table = GhostOverlapTable::compute(&t, 192).unwrap();
        for p1 in 0..5i64 {
            for p2 in 0..5i64 {
                if p1 == 0 && p2 == 0 {
                    continue;
                }
                let plus = table.nu(&(Integer::from(p1), Integer::from(p2)));
                let minus = table.nu(&(Integer::from(-p1), Integer::from(-p2)));
                let prod = Float::with_val(192, &plus * &minus);
                assert!(
                    Float::with_val(192, &prod - 1u32).abs() < 1e-40,
                    "nu product failed at ({p1},{p2}): {prod}"
                );
            }
        }
    }

    #[test]
    fn ghost_d4_idempotent() {
        let t = tuple_d4();
        let g = ghost_fiducial(&t, 1, 224).unwrap();
        assert_eq!(g.twist, Mat2Z::identity());
        assert!(g.residual_idempotency < Float::with_val(224, 1e-35));
        assert!(g.residual_trace < Float::with_val(224, 1e-35));
        assert!(g.residual_parity < Float::with_val(224, 1e-35));
    }

    #[test]
    fn ghost_overlap_round_trip() {
        // Tr(ghost D_p^dagger) reproduces the assembled mu table
        let t = tuple_d4();
        let prec = 192;
        let table = GhostOverlapTable::compute(&t, prec).unwrap();
        let g = ghost_fiducial_from_table(&table, 1).unwrap();
        for p1 in 0..4i64 {
            for p2 in 0..4i64 {
                let p = (Integer::from(p1), Integer::from(p2));
                let dp = displacement(4, &p, prec);
                let got = g.matrix.mul(&dp.dagger()).trace();
                let gp = g.twist.apply_vec(&p);
                let expect = table.mu(&gp);
                assert!(
                    got.re.clone() - &expect < Float::with_val(prec, 1e-35)
                        && got.im.clone().abs() < Float::with_val(prec, 1e-35),
                    "overlap mismatch at ({p1},{p2})"
                );
            }
        }
    }

    #[test]
    fn invalid_shift_rejected() {
        // d = 4, d_j = 4: 2 shift + 3 must be coprime to 4 (always odd, fine);
        // use d = 11, r = 3 where some shifts collide
        let q = QuadForm::from_ints(1, -3, 1).unwrap();
        let t = AdmissibleTuple::new(11, 3, q).unwrap();
        // 2 shift + d_j - 1 = 2 shift + 3; shift = 4 gives 11 = 0 mod 11
        assert!(twist_for_shift(&t, 4).is_err());
        assert!(twist_for_shift(&t, 1).is_ok());
    }

    #[test]
    fn twist_d11_r3() {
        let q = QuadForm::from_ints(1, -3, 1).unwrap();
        let t = AdmissibleTuple::new(11, 3, q).unwrap();
        let g = twist_for_shift(&t, 1).unwrap();
        // f_t(1) = 3 (2 + 11 + 3) = 48 = 4 mod 11, inverse 3: G = diag(1, 3)
        assert_eq!(g, Mat2Z::new(1, 0, 0, 3));
    }

    #[test]
    fn tcc_zero_index_unconditional() {
        let t = tuple_d4();
        let tables = ShinTables::compute(&t, 192).unwrap();
        let r = tcc_residual(&tables, 0, &(Integer::from(0), Integer::from(0))).unwrap();
        assert!(r.abs() < Float::with_val(192, 1e-40));
    }

    #[test]
    fn tcc_invalid_shift() {
        let q = QuadForm::from_ints(1, -3, 1).unwrap();
        let t = AdmissibleTuple::new(11, 3, q).unwrap();
        let tables = ShinTables::compute(&t, 64).unwrap();
        assert!(matches!(
            tcc_residual(&tables, 4, &(Integer::from(0), Integer::from(0))),
            Err(Error::InvalidShift { .. })
        ));
    }

    #[test]
    fn m_transform_identity_and_parity() {
        let t = tuple_d4();
        let dev = m_transform_check(&t, &Mat2Z::identity(), 160).unwrap();
        assert!(dev < Float::with_val(160, 1e-35));
        let dev = m_transform_check(&t, &Mat2Z::p(), 160).unwrap();
        assert!(dev < Float::with_val(160, 1e-35));
    }

    #[test]
    fn alignment_rejects_multiples_of_three() {
        assert!(alignment_check(&Integer::from(5), 1, 3, 128).is_err());
        let dev = alignment_check(&Integer::from(5), 1, 1, 128).unwrap();
        assert!(dev.is_zero());
    }
}
