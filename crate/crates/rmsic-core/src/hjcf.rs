//! Hirzebruch--Jung ("minus") continued fractions, word decomposition of
//! SL2(Z) matrices into `T^r S` factors, and selection of minimal-period
//! form representatives.
//!
//! Period detection runs on exact form orbits under the HJ step; floating
//! point only enters when a numeric expansion of a real number is requested.

use crate::bigc::BigReal;
use crate::error::Error;
use crate::numtheory::class_reps_by_cycles;
use crate::quadforms::{apply_gl2, Mat2Z, QuadForm};
use crate::Result;
use rug::ops::{DivRounding, RemRounding};
use rug::{Float, Integer};
use std::collections::HashMap;

/// Word `T^{r_1} S T^{r_2} S ... T^{r_n} S T^{r_{n+1}}` with `r_i >= 2` for
/// the interior indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HJWord {
    pub exponents: Vec<Integer>,
}

impl HJWord {
    /// Number of `S` factors in the word.
    pub fn n(&self) -> usize {
        self.exponents.len() - 1
    }

    /// Multiply the word back out.
    pub fn reconstruct(&self) -> Mat2Z {
        let mut m = Mat2Z::identity();
        let last = self.exponents.len() - 1;
        for (i, r) in self.exponents.iter().enumerate() {
            let t = Mat2Z::from_integers(
                Integer::from(1),
                r.clone(),
                Integer::from(0),
                Integer::from(1),
            );
            m = m.mul(&t);
            if i != last {
                m = m.mul(&Mat2Z::s());
            }
        }
        m
    }

    /// Suffix matrices `L_1, ..., L_{n+1}` with `L_i = T^{r_i} S ... S T^{r_{n+1}}`.
    ///
    /// Their domains are nested; the left endpoints `-delta_i/gamma_i` are
    /// strictly increasing along the list.
    pub fn suffix_matrices(&self) -> Vec<Mat2Z> {
        let mut out = vec![Mat2Z::from_integers(
            Integer::from(1),
            self.exponents.last().unwrap().clone(),
            Integer::from(0),
            Integer::from(1),
        )];
        for r in self.exponents.iter().rev().skip(1) {
            let t = Mat2Z::from_integers(
                Integer::from(1),
                r.clone(),
                Integer::from(0),
                Integer::from(1),
            );
            let prev = out.last().unwrap().clone();
            out.push(t.mul(&Mat2Z::s()).mul(&prev));
        }
        out.reverse();
        out
    }
}

/// Preperiod and period of an eventually periodic HJ expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HJPeriod {
    pub preperiod: Vec<Integer>,
    pub period: Vec<Integer>,
}

/// Numeric HJ expansion `x = k_1 - 1/(k_2 - ...)`, `terms` partial quotients.
pub fn hj_expand(x: &BigReal, terms: usize) -> Result<Vec<Integer>> {
    let prec = x.prec();
    let mut cur = x.clone();
    let mut out = Vec::with_capacity(terms);
    // Error in `cur` grows roughly like the product of the step
    // magnifications; stop once too few good bits remain.
    let mut lost_bits = 0f64;
    for i in 0..terms {
        let k = cur.clone().ceil();
        let k_int = k
            .to_integer()
            .ok_or_else(|| Error::Other("non-finite value".into()))?;
        out.push(k_int);
        let rem = Float::with_val(prec, &k - &cur);
        if rem.is_zero() {
            return Err(Error::RationalInput(format!(
                "expansion terminated after {} terms",
                i + 1
            )));
        }
        let mag = -rem.clone().abs().log2().to_f64();
        lost_bits += 2.0 * mag.max(0.0) + 2.0;
        if lost_bits > (prec as f64) * 0.75 {
            return Err(Error::PrecisionExhausted {
                needed: (lost_bits * 2.0) as u32,
                have: prec,
            });
        }
        cur = Float::with_val(prec, rem.recip());
    }
    Ok(out)
}

/// Exact ceiling of the root `rho_{Q,+} = (-b + sqrt(disc))/(2a)`.
fn ceil_root_plus(q: &QuadForm) -> Integer {
    let delta = q.disc();
    let (rp, _) = crate::quadforms::roots(q, 96);
    let mut c = rp.ceil().to_integer().unwrap();
    // `m < rho`, exactly
    let below = |m: &Integer| -> bool {
        // a > 0:  m < rho  <=>  2 a m + b < sqrt(delta)
        // a < 0:  m < rho  <=>  2 a m + b > sqrt(delta)
        let lhs = Integer::from(2) * Integer::from(&q.a * m) + &q.b;
        let a_pos = q.a > 0;
        if lhs <= 0 {
            return a_pos;
        }
        let cmp = Integer::from(&lhs * &lhs).cmp(&delta);
        if a_pos {
            cmp == std::cmp::Ordering::Less
        } else {
            cmp == std::cmp::Ordering::Greater
        }
    };
    // unique c with c-1 < rho < c
    while below(&c) {
        c += 1;
    }
    while !below(&Integer::from(&c - 1u32)) {
        c -= 1;
    }
    c
}

/// HJ step on forms: `Q -> Q_{T^k S}` with `k = ceil(rho_+)`.
fn hj_step(q: &QuadForm) -> Result<(Integer, QuadForm)> {
    let k = ceil_root_plus(q);
    let m = Mat2Z::from_integers(
        k.clone(),
        Integer::from(-1),
        Integer::from(1),
        Integer::from(0),
    ); // T^k S
    let next = apply_gl2(q, &m)?;
    Ok((k, next))
}

/// Exact preperiod and period of the HJ expansion of `rho_{Q,+}`.
pub fn periodic_expansion(q: &QuadForm) -> Result<HJPeriod> {
    if q.a <= 0 {
        return Err(Error::InvalidForm(format!("{q} must have a > 0")));
    }
    let mut seen: HashMap<QuadForm, usize> = HashMap::new();
    let mut ks: Vec<Integer> = Vec::new();
    let mut cur = q.clone();
    loop {
        if let Some(&start) = seen.get(&cur) {
            let preperiod = ks[..start].to_vec();
            let period = ks[start..].to_vec();
            return Ok(HJPeriod { preperiod, period });
        }
        seen.insert(cur.clone(), ks.len());
        let (k, next) = hj_step(&cur)?;
        ks.push(k);
        cur = next;
    }
}

/// Decompose `M` (with positive lower-left entry) into its canonical word.
pub fn word_decompose(m: &Mat2Z) -> Result<HJWord> {
    if m.det() != 1 {
        return Err(Error::NotUnimodular(m.det().to_string()));
    }
    if m.m[1][0] <= 0 {
        return Err(Error::WordDomain(m.m[1][0].to_string()));
    }
    let mut r = m.clone();
    let mut exps: Vec<Integer> = Vec::new();
    while r.m[1][0] > 0 {
        let k = r.m[0][0].clone().div_ceil(&r.m[1][0]);
        // R <- S^-1 T^-k R = [[gamma, delta], [k gamma - alpha, k delta - beta]]
        let new = Mat2Z::from_integers(
            r.m[1][0].clone(),
            r.m[1][1].clone(),
            Integer::from(&k * &r.m[1][0]) - &r.m[0][0],
            Integer::from(&k * &r.m[1][1]) - &r.m[0][1],
        );
        exps.push(k);
        r = new;
    }
    if r.m[0][0] != 1 || r.m[1][1] != 1 || !r.m[1][0].is_zero() {
        return Err(Error::WordDomain(format!(
            "residual matrix {r} is not a power of T"
        )));
    }
    exps.push(r.m[0][1].clone());
    let word = HJWord { exponents: exps };
    debug_assert_eq!(&word.reconstruct(), m);
    Ok(word)
}

/// All HJ-reduced forms with `a > 0` in the GL2(Z) orbit of `q`, computed
/// from the E-reduced cycle via the maps `Q -> Q_{L_n^{-1}}`.
pub fn hj_reduced_in_class(q: &QuadForm) -> Result<Vec<QuadForm>> {
    let start = reduce(q)?;
    let mut w_e: Vec<QuadForm> = Vec::new();
    let mut cur = start.clone();
    loop {
        if cur.a > 0 {
            w_e.push(cur.clone());
        }
        cur = crate::numtheory::rho_step(&cur);
        if cur == start {
            break;
        }
    }
    // J-mirror cycle, if distinct
    let qj = QuadForm::new(
        Integer::from(-&start.a),
        start.b.clone(),
        Integer::from(-&start.c),
    )?;
    if !cycle_contains(&start, &qj) {
        let mut cur = qj.clone();
        loop {
            if cur.a > 0 {
                w_e.push(cur.clone());
            }
            cur = crate::numtheory::rho_step(&cur);
            if cur == qj {
                break;
            }
        }
    }
    w_e.sort();
    w_e.dedup();

    let mut out = Vec::new();
    for n in 0u32.. {
        let ln = Mat2Z::new(n as i64, -1, n as i64 + 1, -1);
        let ln_inv = ln.inverse()?;
        let mut any = false;
        for f in &w_e {
            if root_plus_below(f, 1, n + 1) {
                any = true;
                let img = apply_gl2(f, &ln_inv)?;
                let img = if img.a < 0 {
                    QuadForm::new(
                        Integer::from(-&img.a),
                        img.b.clone(),
                        Integer::from(-&img.c),
                    )?
                } else {
                    img
                };
                out.push(img);
            }
        }
        if !any {
            break;
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn cycle_contains(start: &QuadForm, target: &QuadForm) -> bool {
    let mut cur = start.clone();
    loop {
        if &cur == target {
            return true;
        }
        cur = crate::numtheory::rho_step(&cur);
        if &cur == start {
            return false;
        }
    }
}

/// Exact test `rho_{Q,+} < num/den` for positive `num/den` and `a > 0`.
fn root_plus_below(q: &QuadForm, num: u32, den: u32) -> bool {
    // sqrt(D) < 2 a num/den + b   <=>   D den^2 < (2 a num + b den)^2, rhs > 0
    let delta = q.disc();
    let lhs = Integer::from(2) * Integer::from(&q.a * Integer::from(num))
        + Integer::from(&q.b * Integer::from(den));
    if lhs <= 0 {
        return false;
    }
    let den_i = Integer::from(den);
    Integer::from(&delta * &den_i) * &den_i < Integer::from(&lhs * &lhs)
}

/// Bring an arbitrary indefinite irreducible form to an E-reduced one.
fn reduce(q: &QuadForm) -> Result<QuadForm> {
    let delta = q.disc();
    if delta <= 0 || delta.is_perfect_square() {
        return Err(Error::InvalidForm(format!(
            "{q} is not indefinite irreducible"
        )));
    }
    let s = delta.clone().sqrt();
    let mut cur = q.clone();
    for _ in 0..10_000 {
        if crate::numtheory::is_e_reduced(&cur) {
            return Ok(cur);
        }
        let c_abs = cur.c.clone().abs();
        let two_c = Integer::from(2) * &c_abs;
        let lo = if Integer::from(&c_abs * &c_abs) > delta {
            Integer::from(-&c_abs) + 1u32
        } else {
            Integer::from(&s - &two_c) + 1u32
        };
        let mut r = Integer::from(-&cur.b) - &lo;
        r = r.rem_euc(two_c);
        r += &lo;
        let c_new = (Integer::from(&r * &r) - &delta) / (Integer::from(4) * &cur.c);
        cur = QuadForm::new_unchecked(cur.c.clone(), r, c_new);
    }
    Err(Error::Other(format!("reduction of {q} did not terminate")))
}

/// HJ-reduced representative of minimal period length among the classes of
/// the given representatives; ties broken by lexicographically smallest
/// `(a, |b|, c)`.
pub fn minimal_form(class_reps: &[QuadForm]) -> Result<QuadForm> {
    if class_reps.is_empty() {
        return Err(Error::InvalidForm("empty class list".into()));
    }
    let disc = class_reps[0].disc();
    let mut best: Option<(usize, (Integer, Integer, Integer), QuadForm)> = None;
    for rep in class_reps {
        if rep.disc() != disc {
            return Err(Error::InvalidForm(
                "class representatives have mixed discriminants".into(),
            ));
        }
        for cand in hj_reduced_in_class(rep)? {
            let per = periodic_expansion(&cand)?;
            debug_assert!(per.preperiod.is_empty());
            let key = (
                per.period.len(),
                (cand.a.clone(), cand.b.clone().abs(), cand.c.clone()),
                cand.clone(),
            );
            best = match best {
                None => Some(key),
                Some(b) => {
                    if (key.0, &key.1) < (b.0, &b.1) {
                        Some(key)
                    } else {
                        Some(b)
                    }
                }
            };
        }
    }
    Ok(best.unwrap().2)
}

/// Minimal-period HJ representatives, one per wide class of discriminant `delta`.
pub fn minimal_forms_of_disc(delta: &Integer) -> Result<Vec<QuadForm>> {
    let (_, classes) = class_reps_by_cycles(delta)?;
    classes
        .iter()
        .map(|cl| minimal_form(std::slice::from_ref(&cl[0])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hj_expand_fixed_points() {
        let p = 256;
        let golden_sq = (Float::with_val(p, 3) + Float::with_val(p, 5).sqrt()) / 2u32;
        let ks = hj_expand(&golden_sq, 12).unwrap();
        assert!(ks.iter().all(|k| *k == 3));
        let x = (Float::with_val(p, 7) + Float::with_val(p, 45).sqrt()) / 2u32;
        let ks = hj_expand(&x, 12).unwrap();
        assert!(ks.iter().all(|k| *k == 7));
        let two = Float::with_val(p, 2);
        assert!(matches!(hj_expand(&two, 4), Err(Error::RationalInput(_))));
    }

    #[test]
    fn periodic_expansion_examples() {
        let q = QuadForm::from_ints(1, -3, 1).unwrap();
        let per = periodic_expansion(&q).unwrap();
        assert!(per.preperiod.is_empty());
        assert_eq!(per.period, vec![Integer::from(3)]);

        let q = QuadForm::from_ints(1, -7, 1).unwrap();
        let per = periodic_expansion(&q).unwrap();
        assert!(per.preperiod.is_empty());
        assert_eq!(per.period, vec![Integer::from(7)]);
    }

    #[test]
    fn word_decompose_examples() {
        let m = Mat2Z::new(3, -1, 1, 0);
        let w = word_decompose(&m).unwrap();
        assert_eq!(w.exponents, vec![Integer::from(3), Integer::from(0)]);
        assert_eq!(w.n(), 1);

        let s = Mat2Z::s();
        let w = word_decompose(&s).unwrap();
        assert_eq!(w.exponents, vec![Integer::from(0), Integer::from(0)]);

        let a = Mat2Z::new(3, -1, 1, 0).pow(3);
        let w = word_decompose(&a).unwrap();
        assert_eq!(
            w.exponents,
            vec![
                Integer::from(3),
                Integer::from(3),
                Integer::from(3),
                Integer::from(0)
            ]
        );
        assert_eq!(w.reconstruct(), a);

        assert!(word_decompose(&Mat2Z::new(1, 5, 0, 1)).is_err());
        assert!(word_decompose(&Mat2Z::new(0, 1, -1, 3)).is_err());
    }

    #[test]
    fn word_suffix_domains_nested() {
        // delta_i/gamma_i strictly increases along the suffixes, so the
        // excluded rays (-inf, -delta_i/gamma_i] shrink and the domains nest
        let a = Mat2Z::new(19, -4, 5, -1).pow(3);
        let w = word_decompose(&a).unwrap();
        let suffixes = w.suffix_matrices();
        assert_eq!(suffixes[0], a);
        let mut prev: Option<f64> = None;
        for m in &suffixes[..suffixes.len() - 1] {
            let g = m.m[1][0].to_f64();
            assert!(g > 0.0);
            let ratio = m.m[1][1].to_f64() / g;
            if let Some(p) = prev {
                assert!(ratio > p);
            }
            prev = Some(ratio);
        }
    }

    #[test]
    fn minimal_form_examples() {
        let q = QuadForm::from_ints(1, -3, 1).unwrap();
        assert_eq!(minimal_form(std::slice::from_ref(&q)).unwrap(), q);
        let q = QuadForm::from_ints(1, -7, 1).unwrap();
        assert_eq!(minimal_form(std::slice::from_ref(&q)).unwrap(), q);
    }

    #[test]
    fn expansion_of_stabilizer_word_matches() {
        // disc 320, conductor 8: the periodic word of rho_+ must reconstruct
        // the stability generator eta_Q(eps_bar_f) after preperiod conjugation
        let q = QuadForm::from_ints(5, -20, 4).unwrap();
        let per = periodic_expansion(&q).unwrap();
        let t = crate::towers::AdmissibleTuple::new(19, 1, q).unwrap();
        let (l, _, _, _) = crate::quadforms::stabilizers(&t).unwrap();
        let word_mat = |ks: &[Integer]| -> Mat2Z {
            let mut m = Mat2Z::identity();
            for k in ks {
                let t_k = Mat2Z::from_integers(
                    Integer::from(1),
                    k.clone(),
                    Integer::from(0),
                    Integer::from(1),
                );
                m = m.mul(&t_k).mul(&Mat2Z::s());
            }
            m
        };
        let n_mat = word_mat(&per.preperiod);
        let m_mat = word_mat(&per.period);
        let recon = n_mat.mul(&m_mat).mul(&n_mat.inverse().unwrap());
        assert_eq!(recon, l);
    }

    #[test]
    fn hj_value_reconstruction_matches_root() {
        let q = QuadForm::from_ints(5, -20, 4).unwrap();
        let per = periodic_expansion(&q).unwrap();
        let prec = 256;
        let mut terms: Vec<Integer> = per.preperiod.clone();
        while terms.len() < 50 {
            terms.extend(per.period.iter().cloned());
        }
        terms.truncate(50);
        let mut x = Float::with_val(prec, terms.last().unwrap());
        for k in terms.iter().rev().skip(1) {
            x = Float::with_val(prec, k) - Float::with_val(prec, x.recip_ref());
        }
        let (rho, _) = crate::quadforms::roots(&q, prec);
        assert!((x - rho).abs() < Float::with_val(prec, 1e-25));
    }
}
