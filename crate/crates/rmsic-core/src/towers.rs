//! Dimension towers and grids attached to real quadratic fields, the
//! admissible pair/triple correspondence, variant Chebyshev polynomials and
//! unit-group indices of orders.
//!
//! All grid values are exact integers computed with Chebyshev-style
//! recursions on the trace of the fundamental totally positive unit; no
//! floating powers of the unit appear anywhere.

use crate::error::Error;
use crate::numtheory::{fundamental_discriminant, fundamental_unit};
use crate::quadforms::QuadForm;
use crate::Result;
use rayon::prelude::*;
use rug::ops::RemRounding;
use rug::{Integer, Rational};

/// Dimension, rank, quadratic form and the derived field data.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleTuple {
    pub d: u64,
    pub r: u64,
    pub q: QuadForm,
    pub delta0: Integer,
    pub j: u64,
    pub m: u64,
    /// Conductor of `q`.
    pub f: Integer,
    pub f_j: Integer,
    pub d_j: Integer,
    /// `d` for odd `d`, `2d` for even.
    pub dbar: u64,
}

/// One entry of the dimension/rank grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub j: u64,
    pub m: u64,
    pub d: Integer,
    pub r: Integer,
    pub f_jm: Integer,
}

/// `(trace, coeff)` integers with `eps_bar^j = (t_j + u_j sqrt(delta0))/2`.
fn unit_power_seq(delta0: &Integer, jmax: u64) -> Result<Vec<(Integer, Integer)>> {
    let (_, eps_bar, _) = fundamental_unit(delta0)?;
    let t1 = {
        let t = eps_bar.trace();
        debug_assert!(t.is_integer());
        t.numer().clone()
    };
    let u1 = {
        let u = Rational::from(&eps_bar.y) * Rational::from(2);
        debug_assert!(u.is_integer());
        u.numer().clone()
    };
    let mut seq = Vec::with_capacity(jmax as usize);
    if jmax == 0 {
        return Ok(seq);
    }
    seq.push((t1.clone(), u1.clone()));
    for j in 1..jmax {
        let (tj, uj) = &seq[(j - 1) as usize];
        let tn = (Integer::from(&t1 * tj) + delta0.clone() * Integer::from(&u1 * uj)) / 2u32;
        let un = (Integer::from(&t1 * uj) + Integer::from(&u1 * tj)) / 2u32;
        seq.push((tn, un));
    }
    Ok(seq)
}

/// The conductor sequence `f_j = (eps_bar^j - eps_bar^-j)/sqrt(delta0)`.
pub fn conductor_sequence(delta0: &Integer, jmax: u64) -> Result<Vec<Integer>> {
    Ok(unit_power_seq(delta0, jmax)?
        .into_iter()
        .map(|(_, u)| u)
        .collect())
}

/// The dimension tower `d_j = eps_bar^j + eps_bar^-j + 1`.
pub fn dimension_tower(delta0: &Integer, jmax: u64) -> Result<Vec<Integer>> {
    Ok(unit_power_seq(delta0, jmax)?
        .into_iter()
        .map(|(t, _)| t + 1u32)
        .collect())
}

/// Variant Chebyshev polynomial kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChebKind {
    TStar,
    UStar,
}

/// Exact evaluation of the variant Chebyshev polynomials by their recursions:
/// `T*_1 = x`, `T*_2 = x(x-2)`, `T*_j = 3 - x + (x-1) T*_{j-1} - T*_{j-2}`;
/// `U*_1 = 1`, `U*_2 = x - 1`, `U*_j = (x-1) U*_{j-1} - U*_{j-2}`.
pub fn chebyshev_variant(kind: ChebKind, j: u64, x: &Integer) -> Integer {
    assert!(j >= 1, "chebyshev_variant requires j >= 1");
    match kind {
        ChebKind::TStar => {
            let mut prev = x.clone(); // T*_1
            if j == 1 {
                return prev;
            }
            let mut cur = x.clone() * (x.clone() - 2u32); // T*_2
            for _ in 3..=j {
                let next = Integer::from(3) - x + (x.clone() - 1u32) * &cur - &prev;
                prev = std::mem::replace(&mut cur, next);
            }
            cur
        }
        ChebKind::UStar => {
            let mut prev = Integer::from(1); // U*_1
            if j == 1 {
                return prev;
            }
            let mut cur = x.clone() - 1u32; // U*_2
            for _ in 3..=j {
                let next = (x.clone() - 1u32) * &cur - &prev;
                prev = std::mem::replace(&mut cur, next);
            }
            cur
        }
    }
}

/// Exact grid entry `d_{j,m}, r_{j,m}` for the field of discriminant `delta0`.
pub fn grid(delta0: &Integer, j: u64, m: u64) -> Result<GridEntry> {
    assert!(j >= 1 && m >= 1);
    let seq = unit_power_seq(delta0, j * (m + 1))?;
    let fj = &seq[(j - 1) as usize].1;
    let fjm = &seq[(j * m - 1) as usize].1;
    let fjm1 = &seq[(j * (m + 1) - 1) as usize].1;
    let r = Integer::from(fjm / fj);
    let r_next = Integer::from(fjm1 / fj);
    Ok(GridEntry {
        j,
        m,
        d: Integer::from(&r + &r_next),
        r,
        f_jm: fjm.clone(),
    })
}

/// Smallest `j` with `f | f_j`.
pub fn j_min(delta0: &Integer, f: &Integer) -> Result<u64> {
    if *f == 1 {
        return Ok(1);
    }
    let (_, eps_bar, _) = fundamental_unit(delta0)?;
    let d1 = {
        let t = eps_bar.trace();
        t.numer().clone() + 1u32
    };
    let f1 = Rational::from(&eps_bar.y) * Rational::from(2);
    let f1 = f1.numer().clone();
    // f_j mod f via f_{j+1} = (d1 - 1) f_j - f_{j-1}; division-free.
    let k = Integer::from(&d1 - 1u32).rem_euc(f.clone());
    let mut prev = Integer::from(0); // f_0
    let mut cur = f1.rem_euc(f.clone()); // f_1
    let bound = 12 * f.to_u64().unwrap_or(u64::MAX / 16) + 16;
    for j in 1..=bound {
        if cur.is_zero() {
            return Ok(j);
        }
        let next = (Integer::from(&k * &cur) - &prev).rem_euc(f.clone());
        prev = std::mem::replace(&mut cur, next);
    }
    Err(Error::Other(format!(
        "no j <= {bound} with {f} | f_j for delta0 = {delta0}"
    )))
}

/// Whether the order of conductor `f` contains a negative-norm unit.
pub fn order_has_negative_norm_unit(delta0: &Integer, f: &Integer) -> Result<bool> {
    let (_, _, norm) = fundamental_unit(delta0)?;
    if norm != -1 {
        return Ok(false);
    }
    let jm = j_min(delta0, f)?;
    if jm % 2 == 0 {
        return Ok(false);
    }
    let seq = unit_power_seq(delta0, jm)?;
    let (tj, uj) = &seq[(jm - 1) as usize];
    let dj_minus_3 = Integer::from(tj - 2u32); // d_j - 3 = t_j - 2
    if dj_minus_3 < 0 || !dj_minus_3.is_perfect_square() {
        return Ok(false);
    }
    let root = dj_minus_3.sqrt();
    let prod = Integer::from(f * &root);
    Ok(!prod.is_zero() && uj.is_divisible(&prod))
}

/// Resolve an admissible pair to its unique `(delta0, j, m)`, or report
/// inadmissibility.
pub fn pair_to_triple(d: u64, r: u64) -> Result<Option<(Integer, u64, u64)>> {
    if d < 4 || r == 0 || 2 * r >= d - 1 {
        return Ok(None);
    }
    let d_i = Integer::from(d);
    let r_i = Integer::from(r);
    let num = Integer::from(&d_i * &d_i) - 1u32;
    let den = Integer::from(&r_i * (Integer::from(&d_i - &r_i)));
    if !num.is_divisible(&den) {
        return Ok(None);
    }
    let n = num / den;
    if n <= 4 {
        return Ok(None);
    }
    let dd = Integer::from(&n * (Integer::from(&n - 4u32)));
    let disc = fundamental_discriminant(&dd)?;
    let delta0 = disc.delta0;
    // locate j with d_j + 1 = n
    let target_t = Integer::from(&n - 2u32); // trace of eps_bar^j
    let (_, eps_bar, _) = fundamental_unit(&delta0)?;
    let mut cur = eps_bar.clone();
    let mut j = 1u64;
    loop {
        let t = cur.trace();
        let t = t.numer().clone();
        if t == target_t {
            break;
        }
        if t > target_t {
            return Ok(None);
        }
        cur = cur.mul(&eps_bar);
        j += 1;
    }
    // locate m with r_{j,m} = r
    let mut m = 1u64;
    loop {
        let g = grid(&delta0, j, m)?;
        if g.r == r_i && g.d == d_i {
            return Ok(Some((delta0, j, m)));
        }
        if g.r > r_i || g.d > d_i {
            return Ok(None);
        }
        m += 1;
    }
}

/// All admissible pairs with `r > 1` and `d <= dmax`, sorted by `(d, r)`.
///
/// Enumerates per-field through the root of the tower: for each tower value
/// `c = d_j <= dmax` the grid columns depend only on `c` through the variant
/// Chebyshev polynomials.
pub fn admissible_pairs(dmax: u64) -> Result<Vec<(u64, u64, Integer, u64, u64)>> {
    let mut out = Vec::new();
    for c in 4..=dmax {
        let c_i = Integer::from(c);
        let mut m = 2u64;
        loop {
            let r = chebyshev_variant(ChebKind::UStar, m, &c_i);
            let d = chebyshev_variant(ChebKind::UStar, m + 1, &c_i).clone() + &r;
            if d > dmax {
                break;
            }
            let d_u = d.to_u64().unwrap();
            let r_u = r.to_u64().unwrap();
            if let Some((delta0, j, mm)) = pair_to_triple(d_u, r_u)? {
                debug_assert_eq!(mm, m);
                out.push((d_u, r_u, delta0, j, m));
            }
            m += 1;
        }
    }
    out.sort_by_key(|&(d, r, ..)| (d, r));
    Ok(out)
}

impl AdmissibleTuple {
    /// Validate `(d, r, Q)` and derive the field data.
    pub fn new(d: u64, r: u64, q: QuadForm) -> Result<Self> {
        let triple = pair_to_triple(d, r)?;
        let (delta0, j, m) = triple.ok_or_else(|| {
            Error::NotAdmissible(format!("({d}, {r}) is not an admissible pair"))
        })?;
        let (q_delta0, f) = q.conductor()?;
        if q_delta0 != delta0 {
            return Err(Error::NotAdmissible(format!(
                "form {q} has fundamental discriminant {q_delta0}, expected {delta0}"
            )));
        }
        let seq = unit_power_seq(&delta0, j)?;
        let (tj, fj) = seq[(j - 1) as usize].clone();
        if !fj.is_divisible(&f) {
            return Err(Error::NotAdmissible(format!(
                "conductor {f} of {q} does not divide f_j = {fj}"
            )));
        }
        let dbar = if d % 2 == 0 { 2 * d } else { d };
        Ok(AdmissibleTuple {
            d,
            r,
            q,
            delta0,
            j,
            m,
            f,
            f_j: fj,
            d_j: tj + 1u32,
            dbar,
        })
    }

    /// `f_{jm}/f`, the scaling of `Q` entering the cocycle phase.
    pub fn fjm_over_f(&self) -> Result<Integer> {
        let seq = unit_power_seq(&self.delta0, self.j * self.m)?;
        let fjm = &seq[(self.j * self.m - 1) as usize].1;
        Ok(Integer::from(fjm / &self.f))
    }
}

/// Whether the tuple is of anti-unitary type: `d_1 - 3` a perfect square,
/// `j_min(f)` odd, and `f sqrt(d_jmin - 3)` divides `f_jmin`.
pub fn anti_unitary_type(t: &AdmissibleTuple) -> Result<bool> {
    order_has_negative_norm_unit(&t.delta0, &t.f)
}

/// Fraction of fundamental discriminants `5 mod 8` up to `limit` whose
/// fundamental unit has odd trace.  Returns `(odd_count, total)`.
pub fn odd_trace_density(limit: u64) -> (u64, u64) {
    // squarefree sieve
    let n = limit as usize;
    let mut squarefree = vec![true; n + 1];
    let mut p = 2usize;
    while p * p <= n {
        let pp = p * p;
        let mut k = pp;
        while k <= n {
            squarefree[k] = false;
            k += pp;
        }
        p += 1;
    }
    let deltas: Vec<u64> = (5..=limit).step_by(8).filter(|&x| squarefree[x as usize]).collect();
    let odd: u64 = deltas
        .par_iter()
        .map(|&delta| if unit_trace_is_odd(delta) { 1 } else { 0 })
        .sum();
    (odd, deltas.len() as u64)
}

/// Parity of the trace of the fundamental unit of odd discriminant `delta`,
/// tracking continued-fraction convergents modulo 2 only.
fn unit_trace_is_odd(delta: u64) -> bool {
    let s = (delta as f64).sqrt() as u64;
    let s = if (s + 1) * (s + 1) <= delta { s + 1 } else { s };
    let b0 = if (s % 2) == (delta % 2) { s } else { s - 1 };
    let mut p_cur = b0;
    let mut q_cur = 2u64;
    let (mut q1, mut q2) = (0u8, 1u8); // q_{k-1}, q_{k-2} mod 2
    loop {
        let a = (p_cur + s) / q_cur;
        let qn = ((a % 2) as u8 * q1 + q2) % 2;
        q2 = q1;
        q1 = qn;
        p_cur = a * q_cur - p_cur;
        q_cur = (delta - p_cur * p_cur) / q_cur;
        if p_cur == b0 && q_cur == 2 {
            break;
        }
    }
    // trace = q_{l-1} b0 + 2 q_{l-2}; b0 odd here
    q1 == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(n: i64) -> Integer {
        Integer::from(n)
    }

    #[test]
    fn conductor_sequence_sqrt5() {
        let f = conductor_sequence(&int(5), 8).unwrap();
        let expect: Vec<Integer> = [1, 3, 8, 21, 55, 144, 377, 987]
            .iter()
            .map(|&x| int(x))
            .collect();
        assert_eq!(f, expect);
        assert_eq!(conductor_sequence(&int(5), 1).unwrap(), vec![int(1)]);
    }

    #[test]
    fn conductor_sequence_sqrt8() {
        let f = conductor_sequence(&int(8), 2).unwrap();
        assert_eq!(f, vec![int(2), int(12)]);
    }

    #[test]
    fn grid_examples() {
        let g = grid(&int(5), 1, 2).unwrap();
        assert_eq!((g.d, g.r), (int(11), int(3)));
        let g = grid(&int(5), 3, 1).unwrap();
        assert_eq!((g.d, g.r), (int(19), int(1)));
        let g = grid(&int(5), 4, 4).unwrap();
        assert_eq!((g.d, g.r), (int(4_976_784), int(103_729)));
    }

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev_variant(ChebKind::TStar, 2, &int(4)), int(8));
        // f_3 = f_1 U*_3(4) = 8 for sqrt(5)
        assert_eq!(chebyshev_variant(ChebKind::UStar, 3, &int(4)), int(8));
        for x in [0i64, 1, 5, 17] {
            assert_eq!(chebyshev_variant(ChebKind::TStar, 1, &int(x)), int(x));
        }
    }

    #[test]
    fn pair_to_triple_examples() {
        assert_eq!(pair_to_triple(4, 1).unwrap(), Some((int(5), 1, 1)));
        assert_eq!(pair_to_triple(11, 3).unwrap(), Some((int(5), 1, 2)));
        assert_eq!(pair_to_triple(19, 4).unwrap(), Some((int(12), 1, 2)));
        assert_eq!(pair_to_triple(19, 2).unwrap(), None);
        assert_eq!(pair_to_triple(10, 2).unwrap(), None);
    }

    #[test]
    fn admissible_pairs_to_29() {
        let pairs = admissible_pairs(29).unwrap();
        let drs: Vec<(u64, u64)> = pairs.iter().map(|&(d, r, ..)| (d, r)).collect();
        assert_eq!(drs, vec![(11, 3), (19, 4), (29, 5), (29, 8)]);
        assert!(admissible_pairs(10).unwrap().is_empty());
        let pairs = admissible_pairs(76).unwrap();
        let row = pairs.iter().find(|&&(d, ..)| d == 76).unwrap();
        assert_eq!((row.0, row.1, row.2.clone(), row.3, row.4), (76, 21, int(5), 1, 4));
    }

    #[test]
    fn j_min_examples() {
        assert_eq!(j_min(&int(5), &int(8)).unwrap(), 3);
        assert_eq!(j_min(&int(5), &int(1)).unwrap(), 1);
        assert_eq!(j_min(&int(5), &int(3)).unwrap(), 2);
    }

    #[test]
    fn tower_identities() {
        // d_{2j} + 1 = (d_j - 1)^2
        for delta0 in [5i64, 8, 12, 13, 21] {
            let d = dimension_tower(&int(delta0), 10).unwrap();
            for j in 1..=5usize {
                let lhs = Integer::from(&d[2 * j - 1] + 1u32);
                let rhs = Integer::from(&d[j - 1] - 1u32).square();
                assert_eq!(lhs, rhs, "delta0={delta0}, j={j}");
            }
        }
    }

    #[test]
    fn grid_rank_identities() {
        // r_{j,m+1}^2 - r_{j,m}^2 = r_{j,2m+1}; (d_j+1) r (d - r) = d^2 - 1
        for delta0 in [5i64, 8, 12] {
            for j in 1..=3u64 {
                for m in 1..=3u64 {
                    let g = grid(&int(delta0), j, m).unwrap();
                    let g1 = grid(&int(delta0), j, m + 1).unwrap();
                    let g2 = grid(&int(delta0), j, 2 * m + 1).unwrap();
                    let lhs = Integer::from(&g1.r * &g1.r) - Integer::from(&g.r * &g.r);
                    assert_eq!(lhs, g2.r);
                    let dj = dimension_tower(&int(delta0), j).unwrap()[(j - 1) as usize].clone();
                    let check = (dj + 1u32)
                        * Integer::from(&g.r)
                        * (Integer::from(&g.d) - Integer::from(&g.r));
                    assert_eq!(check, Integer::from(&g.d * &g.d) - 1u32);
                }
            }
        }
    }

    #[test]
    fn divisibility_j_vs_fj() {
        for delta0 in [5i64, 8] {
            let f = conductor_sequence(&int(delta0), 12).unwrap();
            for j in 1..=12u64 {
                for k in 1..=12u64 {
                    let divides_idx = k % j == 0;
                    let divides_val = f[(k - 1) as usize].is_divisible(&f[(j - 1) as usize]);
                    assert_eq!(divides_idx, divides_val, "delta0={delta0} j={j} k={k}");
                }
            }
        }
    }

    #[test]
    fn anti_unitary_examples() {
        let q = QuadForm::from_ints(1, -3, 1).unwrap();
        let t4 = AdmissibleTuple::new(4, 1, q.clone()).unwrap();
        assert!(anti_unitary_type(&t4).unwrap());
        let t8 = AdmissibleTuple::new(8, 1, q).unwrap();
        assert!(anti_unitary_type(&t8).unwrap());
        // conductor 8 tuple for d=19 is unitary type
        let q2 = QuadForm::from_ints(5, -20, 4).unwrap();
        let t19 = AdmissibleTuple::new(19, 1, q2).unwrap();
        assert!(!anti_unitary_type(&t19).unwrap());
    }

    #[test]
    fn tuple_rejects_wrong_form() {
        // disc 8 form with dimension from the sqrt(5) tower
        let q = QuadForm::from_ints(1, -2, -1).unwrap();
        assert!(AdmissibleTuple::new(4, 1, q).is_err());
        // conductor 8 over sqrt(5) needs 3 | j, so d=4 (j=1) is rejected
        let q8 = QuadForm::from_ints(5, -20, 4).unwrap();
        assert!(AdmissibleTuple::new(4, 1, q8).is_err());
    }

    #[test]
    fn odd_trace_density_smoke() {
        let (odd, total) = odd_trace_density(2000);
        assert!(total > 100);
        let frac = odd as f64 / total as f64;
        assert!(frac > 0.5 && frac < 0.8, "fraction {frac}");
    }
}

#[doc(hidden)]
pub fn unit_trace_is_odd_pub(delta: u64) -> bool {
    unit_trace_is_odd(delta)
}
