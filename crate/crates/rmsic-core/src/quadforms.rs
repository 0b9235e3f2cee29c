//! Integral binary quadratic forms, the GL2(Z) action, roots, and the
//! stabilizer matrices attached to an admissible tuple.

use crate::bigc::BigReal;
use crate::error::Error;
use crate::numtheory::{fundamental_discriminant, fundamental_unit, QuadInt};
use crate::towers::{self, AdmissibleTuple};
use crate::Result;
use rug::{Float, Integer, Rational};

/// Primitive integral binary quadratic form `<a, b, c>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadForm {
    pub a: Integer,
    pub b: Integer,
    pub c: Integer,
}

impl QuadForm {
    /// A primitive, irreducible, indefinite form.
    pub fn new(a: Integer, b: Integer, c: Integer) -> Result<Self> {
        let q = QuadForm { a, b, c };
        if !q.is_primitive() {
            return Err(Error::InvalidForm(format!("{q} is not primitive")));
        }
        let d = q.disc();
        if d <= 0 || d.is_perfect_square() {
            return Err(Error::InvalidForm(format!(
                "{q} is not indefinite irreducible (disc {d})"
            )));
        }
        Ok(q)
    }

    pub fn from_ints(a: i64, b: i64, c: i64) -> Result<Self> {
        QuadForm::new(Integer::from(a), Integer::from(b), Integer::from(c))
    }

    /// Constructor without the indefinite/irreducible check, for the
    /// reduction-cycle internals.
    pub(crate) fn new_unchecked(a: Integer, b: Integer, c: Integer) -> Self {
        QuadForm { a, b, c }
    }

    pub fn disc(&self) -> Integer {
        Integer::from(&self.b * &self.b) - Integer::from(4) * Integer::from(&self.a * &self.c)
    }

    pub fn is_primitive(&self) -> bool {
        let g = Integer::from(self.a.gcd_ref(&self.b)).gcd(&self.c);
        g == 1
    }

    pub fn sign(&self) -> i32 {
        self.a.cmp0() as i32
    }

    /// Conductor of the form: `disc = f^2 * delta0`.
    pub fn conductor(&self) -> Result<(Integer, Integer)> {
        let d = fundamental_discriminant(&self.disc())?;
        Ok((d.delta0, d.f))
    }

    /// Evaluate `Q(p) = a p1^2 + b p1 p2 + c p2^2`.
    pub fn eval(&self, p1: &Integer, p2: &Integer) -> Integer {
        Integer::from(&self.a * p1) * p1
            + Integer::from(&self.b * p1) * p2
            + Integer::from(&self.c * p2) * p2
    }
}

impl std::fmt::Display for QuadForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "<{},{},{}>", self.a, self.b, self.c)
    }
}

/// 2x2 integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat2Z {
    pub m: [[Integer; 2]; 2],
}

impl Mat2Z {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2Z {
            m: [
                [Integer::from(a), Integer::from(b)],
                [Integer::from(c), Integer::from(d)],
            ],
        }
    }

    pub fn from_integers(a: Integer, b: Integer, c: Integer, d: Integer) -> Self {
        Mat2Z { m: [[a, b], [c, d]] }
    }

    pub fn identity() -> Self {
        Mat2Z::new(1, 0, 0, 1)
    }

    /// S = [[0,-1],[1,0]].
    pub fn s() -> Self {
        Mat2Z::new(0, -1, 1, 0)
    }

    /// T^k = [[1,k],[0,1]].
    pub fn t_pow(k: i64) -> Self {
        Mat2Z::new(1, k, 0, 1)
    }

    /// J = diag(1,-1).
    pub fn j() -> Self {
        Mat2Z::new(1, 0, 0, -1)
    }

    /// P = -I.
    pub fn p() -> Self {
        Mat2Z::new(-1, 0, 0, -1)
    }

    pub fn det(&self) -> Integer {
        Integer::from(&self.m[0][0] * &self.m[1][1]) - Integer::from(&self.m[0][1] * &self.m[1][0])
    }

    pub fn trace(&self) -> Integer {
        Integer::from(&self.m[0][0] + &self.m[1][1])
    }

    pub fn is_unimodular(&self) -> bool {
        let d = self.det();
        d == 1 || d == -1
    }

    /// Sign convention: sgn of the lower-left entry, or of the lower-right if zero.
    pub fn sign(&self) -> i32 {
        let s = self.m[1][0].cmp0() as i32;
        if s != 0 {
            s
        } else {
            self.m[1][1].cmp0() as i32
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let e = |i: usize, j: usize| -> Integer {
            Integer::from(&self.m[i][0] * &rhs.m[0][j]) + Integer::from(&self.m[i][1] * &rhs.m[1][j])
        };
        Mat2Z {
            m: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }

    pub fn neg(&self) -> Self {
        Mat2Z {
            m: [
                [Integer::from(-&self.m[0][0]), Integer::from(-&self.m[0][1])],
                [Integer::from(-&self.m[1][0]), Integer::from(-&self.m[1][1])],
            ],
        }
    }

    /// Inverse of a GL2(Z) matrix.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if d == 1 {
            Ok(Mat2Z {
                m: [
                    [self.m[1][1].clone(), Integer::from(-&self.m[0][1])],
                    [Integer::from(-&self.m[1][0]), self.m[0][0].clone()],
                ],
            })
        } else if d == -1 {
            Ok(Mat2Z {
                m: [
                    [Integer::from(-&self.m[1][1]), self.m[0][1].clone()],
                    [self.m[1][0].clone(), Integer::from(-&self.m[0][0])],
                ],
            })
        } else {
            Err(Error::NotUnimodular(d.to_string()))
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Mat2Z::identity();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn apply_vec(&self, p: &(Integer, Integer)) -> (Integer, Integer) {
        (
            Integer::from(&self.m[0][0] * &p.0) + Integer::from(&self.m[0][1] * &p.1),
            Integer::from(&self.m[1][0] * &p.0) + Integer::from(&self.m[1][1] * &p.1),
        )
    }

    /// Fractional linear action on a real scalar.
    pub fn moebius(&self, x: &BigReal) -> BigReal {
        let p = x.prec();
        let num = Float::with_val(p, &self.m[0][0]) * x + Float::with_val(p, &self.m[0][1]);
        let den = Float::with_val(p, &self.m[1][0]) * x + Float::with_val(p, &self.m[1][1]);
        num / den
    }

    /// Denominator `j_M(x) = gamma x + delta`.
    pub fn j_factor(&self, x: &BigReal) -> BigReal {
        let p = x.prec();
        Float::with_val(p, &self.m[1][0]) * x + Float::with_val(p, &self.m[1][1])
    }

    pub fn congruent_mod(&self, rhs: &Self, n: &Integer) -> bool {
        for i in 0..2 {
            for j in 0..2 {
                if !Integer::from(&self.m[i][j] - &rhs.m[i][j]).is_divisible(n) {
                    return false;
                }
            }
        }
        true
    }
}

impl std::fmt::Display for Mat2Z {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[[{},{}],[{},{}]]",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]
        )
    }
}

/// 2x2 rational matrix, the codomain of the canonical representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat2Q {
    pub m: [[Rational; 2]; 2],
}

impl Mat2Q {
    pub fn det(&self) -> Rational {
        Rational::from(&self.m[0][0] * &self.m[1][1]) - Rational::from(&self.m[0][1] * &self.m[1][0])
    }

    pub fn trace(&self) -> Rational {
        Rational::from(&self.m[0][0] + &self.m[1][1])
    }

    pub fn to_integer(&self) -> Option<Mat2Z> {
        let mut e = [[Integer::new(), Integer::new()], [Integer::new(), Integer::new()]];
        for i in 0..2 {
            for j in 0..2 {
                if !self.m[i][j].is_integer() {
                    return None;
                }
                e[i][j] = self.m[i][j].numer().clone();
            }
        }
        Some(Mat2Z { m: e })
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let e = |i: usize, j: usize| -> Rational {
            Rational::from(&self.m[i][0] * &rhs.m[0][j]) + Rational::from(&self.m[i][1] * &rhs.m[1][j])
        };
        Mat2Q {
            m: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }
}

/// `Q_M = det(M) M^T Q M`, the GL2(Z) action on forms.
pub fn apply_gl2(q: &QuadForm, m: &Mat2Z) -> Result<QuadForm> {
    if !m.is_unimodular() {
        return Err(Error::NotUnimodular(m.det().to_string()));
    }
    let det = m.det();
    let (al, be, ga, de) = (
        &m.m[0][0],
        &m.m[0][1],
        &m.m[1][0],
        &m.m[1][1],
    );
    let a2 = Integer::from(al * al) * &q.a
        + Integer::from(al * ga) * &q.b
        + Integer::from(ga * ga) * &q.c;
    let b2 = Integer::from(2) * Integer::from(al * be) * &q.a
        + (Integer::from(al * de) + Integer::from(be * ga)) * &q.b
        + Integer::from(2) * Integer::from(ga * de) * &q.c;
    let c2 = Integer::from(be * be) * &q.a
        + Integer::from(be * de) * &q.b
        + Integer::from(de * de) * &q.c;
    Ok(QuadForm::new_unchecked(
        a2 * &det,
        b2 * &det,
        c2 * &det,
    ))
}

/// Roots `rho_{Q,+-} = (-b +- sqrt(disc)) / (2a)` at the requested precision.
pub fn roots(q: &QuadForm, prec: u32) -> (BigReal, BigReal) {
    let sq = Float::with_val(prec, q.disc()).sqrt();
    let minus_b = Float::with_val(prec, Integer::from(-&q.b));
    let two_a = Float::with_val(prec, Integer::from(2) * &q.a);
    let plus = Float::with_val(prec, &minus_b + &sq) / &two_a;
    let minus = Float::with_val(prec, &minus_b - &sq) / &two_a;
    (plus, minus)
}

/// Canonical representation `eta_Q(x + y sqrt(delta0)) = x I + (2y/f) S Q`.
pub fn canonical_rep(q: &QuadForm, kappa: &QuadInt) -> Result<Mat2Q> {
    let (delta0, f) = q.conductor()?;
    if kappa.delta0 != delta0 {
        return Err(Error::WrongField(format!(
            "kappa lives over sqrt({}) but Q has fundamental discriminant {}",
            kappa.delta0, delta0
        )));
    }
    let t = Rational::from(&kappa.y) * Rational::from(2) / Rational::from(&f);
    // S Q = [[-b/2, -c], [a, b/2]]
    let half_b = Rational::from((q.b.clone(), Integer::from(2)));
    let m = Mat2Q {
        m: [
            [
                Rational::from(&kappa.x) - Rational::from(&t * &half_b),
                -Rational::from(&t * Rational::from(&q.c)),
            ],
            [
                Rational::from(&t * Rational::from(&q.a)),
                Rational::from(&kappa.x) + Rational::from(&t * &half_b),
            ],
        ],
    };
    Ok(m)
}

/// Integral canonical representation; errors if `kappa` is not in the order.
pub fn canonical_rep_int(q: &QuadForm, kappa: &QuadInt) -> Result<Mat2Z> {
    canonical_rep(q, kappa)?
        .to_integer()
        .ok_or_else(|| Error::WrongField(format!("element is not in the order of {q}")))
}

/// Stabilizer matrices `(L, L_pos, L_z, A)` of an admissible tuple.
///
/// `L = eta_Q(eps_bar^j_min(f))` generates the positive-norm part of the
/// stability group, `L_z = ((d_j-1)/2) I + (f_j/f) S Q`, and `A = L_z^{2m+1}`
/// generates `S_d(Q)`.
pub fn stabilizers(t: &AdmissibleTuple) -> Result<(Mat2Z, Mat2Z, Mat2Z, Mat2Z)> {
    let (_, eps_bar, _) = fundamental_unit(&t.delta0)?;
    let jmin = towers::j_min(&t.delta0, &t.f)?;
    let l = canonical_rep_int(&t.q, &eps_bar.pow(jmin as u32))?;
    let l_pos = l.clone();
    let lz = canonical_rep_int(&t.q, &eps_bar.pow(t.j as u32))?;
    let a = canonical_rep_int(&t.q, &eps_bar.pow((t.j * (2 * t.m + 1)) as u32))?;
    debug_assert_eq!(a, lz.pow((2 * t.m + 1) as u32));
    Ok((l, l_pos, lz, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q131() -> QuadForm {
        QuadForm::from_ints(1, -3, 1).unwrap()
    }

    #[test]
    fn gl2_action_examples() {
        let q = q131();
        let id = apply_gl2(&q, &Mat2Z::identity()).unwrap();
        assert_eq!(id, q);
        let j = apply_gl2(&q, &Mat2Z::j()).unwrap();
        assert_eq!(j, QuadForm::from_ints(-1, -3, -1).unwrap());
        let s = apply_gl2(&q, &Mat2Z::s()).unwrap();
        assert_eq!(s, QuadForm::from_ints(1, 3, 1).unwrap());
    }

    #[test]
    fn gl2_action_preserves_disc_and_rejects_non_unimodular() {
        let q = q131();
        let m = Mat2Z::new(2, 1, 1, 1);
        let qm = apply_gl2(&q, &m).unwrap();
        assert_eq!(qm.disc(), q.disc());
        let bad = Mat2Z::new(2, 0, 0, 1);
        assert!(apply_gl2(&q, &bad).is_err());
    }

    #[test]
    fn roots_examples() {
        let p = 128;
        let (rp, _) = roots(&q131(), p);
        let golden = (Float::with_val(p, 3) + Float::with_val(p, 5).sqrt()) / 2u32;
        assert!((rp - golden).abs() < 1e-30);

        let (rp, _) = roots(&QuadForm::from_ints(1, -7, 1).unwrap(), p);
        let expect = (Float::with_val(p, 7) + Float::with_val(p, 45).sqrt()) / 2u32;
        assert!((rp - expect).abs() < 1e-30);

        // a < 0 flips the branch ordering
        let (rp, _) = roots(&QuadForm::from_ints(-1, 3, -1).unwrap(), p);
        let expect = (Float::with_val(p, 3) - Float::with_val(p, 5).sqrt()) / 2u32;
        assert!((rp - expect).abs() < 1e-30);
    }

    #[test]
    fn canonical_rep_examples() {
        let q = q131();
        let one = QuadInt::from_ints(1, 0, 5);
        assert_eq!(
            canonical_rep_int(&q, &one).unwrap(),
            Mat2Z::identity()
        );
        // (3+sqrt(5))/2 -> [[3,-1],[1,0]]
        let eps_bar = QuadInt::new(
            Rational::from((3, 2)),
            Rational::from((1, 2)),
            Integer::from(5),
        );
        assert_eq!(
            canonical_rep_int(&q, &eps_bar).unwrap(),
            Mat2Z::new(3, -1, 1, 0)
        );
        // sqrt(5) -> 2 S Q, squares to 5 I, trace 0
        let sqrt5 = QuadInt::from_ints(0, 1, 5);
        let m = canonical_rep_int(&q, &sqrt5).unwrap();
        assert_eq!(m, Mat2Z::new(3, -2, 2, -3));
        assert_eq!(m.mul(&m), Mat2Z::new(5, 0, 0, 5));
        assert_eq!(m.trace(), 0);
    }

    #[test]
    fn canonical_rep_is_multiplicative() {
        let q = QuadForm::from_ints(5, -20, 4).unwrap();
        let k1 = QuadInt::new(
            Rational::from((7, 2)),
            Rational::from((3, 2)),
            Integer::from(5),
        );
        let k2 = QuadInt::new(Rational::from(2), Rational::from(-1), Integer::from(5));
        let lhs = canonical_rep(&q, &k1.mul(&k2)).unwrap();
        let rhs = canonical_rep(&q, &k1).unwrap().mul(&canonical_rep(&q, &k2).unwrap());
        assert_eq!(lhs, rhs);
        // det = norm, trace = trace
        assert_eq!(lhs.det(), k1.mul(&k2).norm());
        assert_eq!(lhs.trace(), k1.mul(&k2).trace());
    }

    #[test]
    fn canonical_rep_rejects_wrong_field() {
        let q = q131();
        let wrong = QuadInt::from_ints(1, 1, 8);
        assert!(canonical_rep(&q, &wrong).is_err());
    }

    #[test]
    fn stabilizers_d4_example() {
        let t = AdmissibleTuple::new(4, 1, q131()).unwrap();
        let (l, l_pos, lz, a) = stabilizers(&t).unwrap();
        assert_eq!(l, Mat2Z::new(3, -1, 1, 0));
        assert_eq!(l_pos, l);
        assert_eq!(lz, l);
        assert_eq!(a, l.pow(3));
        // A is congruent to I mod d, and to (d+1)I mod 2d for even d
        assert!(a.congruent_mod(&Mat2Z::identity(), &Integer::from(4)));
        let five_i = Mat2Z::new(5, 0, 0, 5);
        assert!(a.congruent_mod(&five_i, &Integer::from(8)));
    }

    #[test]
    fn stabilizers_d19_example() {
        let q = QuadForm::from_ints(5, -20, 4).unwrap();
        let t = AdmissibleTuple::new(19, 1, q).unwrap();
        let (l, _, lz, a) = stabilizers(&t).unwrap();
        assert_eq!(l, Mat2Z::new(19, -4, 5, -1));
        assert_eq!(lz, l);
        assert_eq!(a, l.pow(3));
        assert!(a.congruent_mod(&Mat2Z::identity(), &Integer::from(19)));
    }

    #[test]
    fn stabilizer_fixed_point() {
        let t = AdmissibleTuple::new(4, 1, q131()).unwrap();
        let (_, _, _, a) = stabilizers(&t).unwrap();
        let (rho, _) = roots(&t.q, 192);
        let moved = a.moebius(&rho);
        assert!((moved - rho).abs() < 1e-40);
    }
}
