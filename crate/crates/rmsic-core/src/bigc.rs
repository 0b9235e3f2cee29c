//! Arbitrary-precision complex scalars on top of MPFR floats.
//!
//! Every value carries its working precision in bits; binary operations
//! produce results at the minimum precision of the operands.  Branch cuts
//! follow the principal convention, except that the square root and
//! logarithm take the value on the upper edge of the cut for arguments on
//! the negative real axis (`log x = log|x| + i pi`).

use rug::ops::CompleteRound;
use rug::{Float, Integer, Rational};

/// Arbitrary-precision real scalar.
pub type BigReal = Float;

/// Arbitrary-precision complex scalar with explicit precision in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct BigComplex {
    pub re: Float,
    pub im: Float,
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, rug::float::Constant::Pi)
}

/// `floor(sqrt(n))` for non-negative `n`.
pub fn isqrt(n: &Integer) -> Integer {
    n.clone().sqrt()
}

/// Compare `sqrt(delta)` with the rational `num/den` (`delta >= 0`, `den > 0`).
pub fn cmp_sqrt_rational(delta: &Integer, num: &Integer, den: &Integer) -> std::cmp::Ordering {
    debug_assert!(*den > 0);
    if *num < 0 {
        return std::cmp::Ordering::Greater;
    }
    // sqrt(delta) <=> num/den  iff  delta*den^2 <=> num^2
    let lhs = delta.clone() * den.clone().square();
    let rhs = num.clone().square();
    lhs.cmp(&rhs)
}

impl BigComplex {
    pub fn new(re: Float, im: Float) -> Self {
        BigComplex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        BigComplex::new(Float::with_val(prec, 0), Float::with_val(prec, 0))
    }

    pub fn one(prec: u32) -> Self {
        BigComplex::new(Float::with_val(prec, 1), Float::with_val(prec, 0))
    }

    pub fn i(prec: u32) -> Self {
        BigComplex::new(Float::with_val(prec, 0), Float::with_val(prec, 1))
    }

    pub fn from_real(re: Float) -> Self {
        let prec = re.prec();
        BigComplex::new(re, Float::with_val(prec, 0))
    }

    pub fn from_int(n: i64, prec: u32) -> Self {
        BigComplex::new(Float::with_val(prec, n), Float::with_val(prec, 0))
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        BigComplex::new(Float::with_val(prec, q), Float::with_val(prec, 0))
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().min(self.im.prec())
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn conj(&self) -> Self {
        BigComplex::new(self.re.clone(), (-&self.im).complete(self.im.prec()))
    }

    pub fn neg(&self) -> Self {
        BigComplex::new(
            (-&self.re).complete(self.re.prec()),
            (-&self.im).complete(self.im.prec()),
        )
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let p = self.prec().min(rhs.prec());
        BigComplex::new(
            Float::with_val(p, &self.re + &rhs.re),
            Float::with_val(p, &self.im + &rhs.im),
        )
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let p = self.prec().min(rhs.prec());
        BigComplex::new(
            Float::with_val(p, &self.re - &rhs.re),
            Float::with_val(p, &self.im - &rhs.im),
        )
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let p = self.prec().min(rhs.prec());
        let re = Float::with_val(p, &self.re * &rhs.re) - Float::with_val(p, &self.im * &rhs.im);
        let im = Float::with_val(p, &self.re * &rhs.im) + Float::with_val(p, &self.im * &rhs.re);
        BigComplex::new(Float::with_val(p, re), Float::with_val(p, im))
    }

    pub fn mul_real(&self, rhs: &Float) -> Self {
        let p = self.prec().min(rhs.prec());
        BigComplex::new(
            Float::with_val(p, &self.re * rhs),
            Float::with_val(p, &self.im * rhs),
        )
    }

    pub fn mul_i(&self) -> Self {
        BigComplex::new(
            (-&self.im).complete(self.im.prec()),
            self.re.clone(),
        )
    }

    pub fn div(&self, rhs: &Self) -> Self {
        let p = self.prec().min(rhs.prec());
        let d = rhs.norm_sqr();
        let re = Float::with_val(p, &self.re * &rhs.re) + Float::with_val(p, &self.im * &rhs.im);
        let im = Float::with_val(p, &self.im * &rhs.re) - Float::with_val(p, &self.re * &rhs.im);
        BigComplex::new(Float::with_val(p, re / &d), Float::with_val(p, im / &d))
    }

    pub fn recip(&self) -> Self {
        BigComplex::one(self.prec()).div(self)
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.clone().square() + self.im.clone().square())
    }

    pub fn abs(&self) -> Float {
        self.norm_sqr().sqrt()
    }

    /// `e^z = e^re (cos im + i sin im)`.
    pub fn exp(&self) -> Self {
        let p = self.prec();
        let r = Float::with_val(p, self.re.clone().exp());
        let (s, c) = Float::with_val(p, &self.im).sin_cos(Float::new(p));
        BigComplex::new(Float::with_val(p, &r * &c), Float::with_val(p, &r * &s))
    }

    /// `sin z = sin re cosh im + i cos re sinh im`.
    pub fn sin(&self) -> Self {
        let p = self.prec();
        let (s, c) = Float::with_val(p, &self.re).sin_cos(Float::new(p));
        let sh = Float::with_val(p, self.im.clone().sinh());
        let ch = Float::with_val(p, self.im.clone().cosh());
        BigComplex::new(Float::with_val(p, s * ch), Float::with_val(p, c * sh))
    }

    /// `sinh z = sinh re cos im + i cosh re sin im`.
    pub fn sinh(&self) -> Self {
        let p = self.prec();
        let sh = Float::with_val(p, self.re.clone().sinh());
        let ch = Float::with_val(p, self.re.clone().cosh());
        let (s, c) = Float::with_val(p, &self.im).sin_cos(Float::new(p));
        BigComplex::new(Float::with_val(p, sh * c), Float::with_val(p, ch * s))
    }

    /// Principal logarithm, with `log x = log|x| + i pi` on the negative real axis.
    pub fn ln(&self) -> Self {
        let p = self.prec();
        let re = Float::with_val(p, self.abs().ln());
        let im = if self.im.is_zero() && self.re.is_sign_negative() {
            pi(p)
        } else {
            Float::with_val(p, self.im.clone().atan2(&self.re))
        };
        BigComplex::new(re, im)
    }

    /// Principal square root (upper edge of the cut on the negative real axis).
    pub fn sqrt(&self) -> Self {
        if self.im.is_zero() {
            let p = self.prec();
            if self.re.is_sign_negative() && !self.re.is_zero() {
                let m = Float::with_val(p, self.re.clone().abs().sqrt());
                return BigComplex::new(Float::with_val(p, 0), m);
            }
            return BigComplex::new(Float::with_val(p, self.re.clone().sqrt()), Float::new(p));
        }
        self.ln().mul_real(&Float::with_val(self.prec(), 0.5)).exp()
    }

    /// Distance to another value in the max norm on (re, im).
    pub fn dist_max(&self, rhs: &Self) -> Float {
        let d = self.sub(rhs);
        let ar = d.re.abs();
        let ai = d.im.abs();
        if ar > ai {
            ar
        } else {
            ai
        }
    }

    /// Reinterpret at lower precision.
    pub fn with_prec(&self, prec: u32) -> Self {
        BigComplex::new(
            Float::with_val(prec, &self.re),
            Float::with_val(prec, &self.im),
        )
    }
}

impl std::fmt::Display for BigComplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} + {}i", self.re, self.im)
    }
}

/// `e^{2 pi i q}` for an exact rational `q`.
pub fn exp_2pi_i_rational(q: &Rational, prec: u32) -> BigComplex {
    let two_pi = Float::with_val(prec, 2) * pi(prec);
    let frac = Float::with_val(prec, q);
    let angle = two_pi * frac;
    let (s, c) = angle.sin_cos(Float::new(prec));
    BigComplex::new(c, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_round_trip() {
        let p = 128;
        let z = BigComplex::new(Float::with_val(p, 1.5), Float::with_val(p, -2.25));
        let w = BigComplex::new(Float::with_val(p, 0.75), Float::with_val(p, 3.0));
        let q = z.mul(&w).div(&w);
        assert!(q.dist_max(&z) < Float::with_val(p, 1e-30));
    }

    #[test]
    fn exp_of_2pi_i_is_one() {
        let p = 256;
        let q = Rational::from((1, 1));
        let z = exp_2pi_i_rational(&q, p);
        assert!(z.dist_max(&BigComplex::one(p)) < Float::with_val(p, 1e-70));
    }

    #[test]
    fn sqrt_negative_real_is_upper_branch() {
        let p = 128;
        let z = BigComplex::from_int(-4, p);
        let r = z.sqrt();
        assert!(r.re.clone().abs() < 1e-30);
        assert!((r.im.clone() - 2u32).abs() < 1e-30);
    }

    #[test]
    fn complex_sin_matches_identity() {
        // sin(i y) = i sinh y
        let p = 128;
        let z = BigComplex::new(Float::with_val(p, 0), Float::with_val(p, 0.7));
        let s = z.sin();
        let expect = Float::with_val(p, 0.7).sinh();
        assert!(s.re.clone().abs() < 1e-30);
        assert!((s.im.clone() - expect).abs() < 1e-30);
    }
}
