//! Exact phase bookkeeping: the Rademacher class invariant, the eta and
//! theta multiplier characters, and the phase making the cocycle values
//! real.  All phases are stored as exact roots of unity; conversion to
//! floating complex numbers happens at the last moment.

use crate::bigc::{exp_2pi_i_rational, BigComplex};
use crate::error::Error;
use crate::numtheory::dedekind_sum;
use crate::quadforms::{Mat2Z, QuadForm};
use crate::towers::AdmissibleTuple;
use crate::Result;
use rug::{Integer, Rational};

/// `e^{2 pi i num/den}`, stored in lowest terms with `0 <= num < den`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootOfUnity {
    num: Integer,
    den: Integer,
}

impl RootOfUnity {
    pub fn new(num: Integer, den: Integer) -> Self {
        assert!(den > 0);
        let mut num = num.rem_euc(den.clone());
        let mut den = den;
        let g = Integer::from(num.gcd_ref(&den));
        if g > 1 {
            num /= &g;
            den /= &g;
        }
        RootOfUnity { num, den }
    }

    pub fn from_rational(q: &Rational) -> Self {
        RootOfUnity::new(q.numer().clone(), q.denom().clone())
    }

    pub fn one() -> Self {
        RootOfUnity::new(Integer::from(0), Integer::from(1))
    }

    pub fn minus_one() -> Self {
        RootOfUnity::new(Integer::from(1), Integer::from(2))
    }

    /// Exponent as a rational number in `[0, 1)`.
    pub fn exponent(&self) -> Rational {
        Rational::from((self.num.clone(), self.den.clone()))
    }

    pub fn order(&self) -> Integer {
        self.den.clone()
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let den = self.den.clone().lcm(&rhs.den);
        let num = Integer::from(&self.num * Integer::from(&den / &self.den))
            + Integer::from(&rhs.num * Integer::from(&den / &rhs.den));
        RootOfUnity::new(num, den)
    }

    pub fn pow(&self, k: &Integer) -> Self {
        RootOfUnity::new(Integer::from(&self.num * k), self.den.clone())
    }

    pub fn inverse(&self) -> Self {
        RootOfUnity::new(Integer::from(-&self.num), self.den.clone())
    }

    pub fn is_real(&self) -> bool {
        self.den <= 2
    }

    /// Value `+1` or `-1` when real.
    pub fn real_sign(&self) -> Option<i32> {
        if self.den == 1 {
            Some(1)
        } else if self.den == 2 {
            Some(-1)
        } else {
            None
        }
    }

    pub fn to_complex(&self, prec: u32) -> BigComplex {
        exp_2pi_i_rational(&self.exponent(), prec)
    }
}

impl std::fmt::Display for RootOfUnity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "e(2 pi i {}/{})", self.num, self.den)
    }
}

use rug::ops::RemRounding;

/// Rademacher class invariant of an SL2(Z) matrix, exact.
///
/// The value is an integer for every input; it is returned as a rational
/// since the two-branch formula produces one.
pub fn rademacher(m: &Mat2Z) -> Result<Rational> {
    if m.det() != 1 {
        return Err(Error::NotUnimodular(m.det().to_string()));
    }
    let c = &m.m[1][0];
    if c.is_zero() {
        return Ok(Rational::from((m.m[0][1].clone(), m.m[1][1].clone())));
    }
    let tr = m.trace();
    let sgn_c = c.cmp0() as i32;
    let sgn_ctr = (Integer::from(c * &tr)).cmp0() as i32;
    let s = dedekind_sum(&m.m[0][0], c)?;
    let val = Rational::from((tr, c.clone()))
        - Rational::from(3 * sgn_ctr)
        - Rational::from(12 * sgn_c) * s;
    debug_assert!(val.is_integer(), "Rademacher invariant must be integral");
    Ok(val)
}

/// Eta-multiplier value `psi(M) = e^{pi i Psi(M)/12}` as an exact root of
/// unity (principal square-root convention, `c != 0`, `Tr M > 0`).
pub fn psi(m: &Mat2Z) -> Result<RootOfUnity> {
    let psi_val = rademacher(m)?;
    let num = psi_val.numer().clone();
    Ok(RootOfUnity::new(num, Integer::from(24)))
}

/// Theta-multiplier character `chi_r(M)` for `M` in `Gamma_r`, exact.
pub fn chi_r(r: &(Rational, Rational), m: &Mat2Z) -> Result<RootOfUnity> {
    let mr = (
        Rational::from(&m.m[0][0] * &r.0) + Rational::from(&m.m[0][1] * &r.1),
        Rational::from(&m.m[1][0] * &r.0) + Rational::from(&m.m[1][1] * &r.1),
    );
    let shift = (
        Rational::from(&mr.0 - &r.0),
        Rational::from(&mr.1 - &r.1),
    );
    if !shift.0.is_integer() || !shift.1.is_integer() {
        return Err(Error::NotInGammaR);
    }
    // (-1)^{1 + delta2(Mr, r)} e^{-pi i <Mr, r>}
    let delta2 = Rational::from(&shift.0 / Rational::from(2)).is_integer()
        && Rational::from(&shift.1 / Rational::from(2)).is_integer();
    let sign_exp = if delta2 { 0 } else { 1 }; // 1 + delta2 mod 2
    let symp = Rational::from(&mr.1 * &r.0) - Rational::from(&mr.0 * &r.1);
    // e^{-pi i q} = e^{2 pi i (-q/2)}
    let half = -symp / Rational::from(2);
    let sign = RootOfUnity::new(Integer::from(sign_exp), Integer::from(2));
    Ok(sign.mul(&RootOfUnity::from_rational(&half)))
}

/// Precomputed data for the phase attached to an admissible tuple.
pub struct SfPhases {
    d: u64,
    psi_a: Integer,
    fjm_over_f: Integer,
    q: QuadForm,
}

impl SfPhases {
    pub fn new(t: &AdmissibleTuple) -> Result<Self> {
        let (_, _, _, a) = crate::quadforms::stabilizers(t)?;
        let psi_a = rademacher(&a)?;
        Ok(SfPhases {
            d: t.d,
            psi_a: psi_a.numer().clone(),
            fjm_over_f: t.fjm_over_f()?,
            q: t.q.clone(),
        })
    }

    /// `phi_p(t) = (-1)^{s_d(p)} e^{-pi i Psi(A_t)/12} xi_d^{-(f_jm/f) Q(p)}`.
    pub fn phase(&self, p: &(Integer, Integer)) -> RootOfUnity {
        let d = Integer::from(self.d);
        // s_d(p) = d + (1+d)(1+p1)(1+p2) mod 2
        let s_d = Integer::from(&d
            + Integer::from(1 + &d) * Integer::from(1 + &p.0) * Integer::from(1 + &p.1))
        .rem_euc(Integer::from(2));
        let sign = RootOfUnity::new(s_d, Integer::from(2));
        let eta_part = RootOfUnity::new(Integer::from(-&self.psi_a), Integer::from(24));
        // xi_d = e^{2 pi i (d+1)/(2d)}
        let q_val = self.q.eval(&p.0, &p.1);
        let exp = Integer::from(-&self.fjm_over_f) * q_val * Integer::from(&d + 1u32);
        let xi_part = RootOfUnity::new(exp, Integer::from(2) * &d);
        sign.mul(&eta_part).mul(&xi_part)
    }
}

/// The phase for a single index `p`.
pub fn sf_phase(t: &AdmissibleTuple, p: &(Integer, Integer)) -> Result<RootOfUnity> {
    Ok(SfPhases::new(t)?.phase(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigc::pi;
    use rug::Float;

    fn int(n: i64) -> Integer {
        Integer::from(n)
    }

    #[test]
    fn root_of_unity_arithmetic() {
        let a = RootOfUnity::new(int(1), int(3));
        let b = RootOfUnity::new(int(1), int(4));
        let c = a.mul(&b);
        assert_eq!(c.exponent(), Rational::from((7, 12)));
        assert_eq!(a.mul(&a.inverse()), RootOfUnity::one());
        assert_eq!(RootOfUnity::minus_one().real_sign(), Some(-1));
        assert_eq!(a.pow(&int(3)), RootOfUnity::one());
    }

    #[test]
    fn rademacher_examples() {
        assert_eq!(rademacher(&Mat2Z::identity()).unwrap(), 0);
        for k in [-3i64, 1, 5] {
            assert_eq!(rademacher(&Mat2Z::t_pow(k)).unwrap(), k);
        }
        assert_eq!(rademacher(&Mat2Z::new(3, -1, 1, 0)).unwrap(), 0);
        assert!(rademacher(&Mat2Z::j()).is_err());
    }

    #[test]
    fn rademacher_class_function_properties() {
        // Psi(-M) = Psi(M), Psi(M^-1) = -Psi(M), Psi(N M N^-1) = det(N) Psi(M)
        let ms = [
            Mat2Z::new(3, -1, 1, 0),
            Mat2Z::new(2, 1, 1, 1),
            Mat2Z::new(5, 2, 2, 1),
            Mat2Z::new(1, 0, 4, 1),
        ];
        let ns = [Mat2Z::new(1, 2, 0, 1), Mat2Z::new(2, 1, 1, 1), Mat2Z::j()];
        for m in &ms {
            let v = rademacher(m).unwrap();
            assert_eq!(rademacher(&m.neg()).unwrap(), v);
            assert_eq!(rademacher(&m.inverse().unwrap()).unwrap(), -v.clone());
            for n in &ns {
                let conj = n.mul(m).mul(&n.inverse().unwrap());
                let expect = Rational::from(&v * Rational::from(n.det()));
                assert_eq!(rademacher(&conj).unwrap(), expect);
            }
        }
    }

    #[test]
    fn rademacher_power_rule() {
        // Psi(M^n) = n Psi(M) when |Tr M| != 1
        let ms = [Mat2Z::new(3, -1, 1, 0), Mat2Z::new(2, 1, 1, 1), Mat2Z::s()];
        for m in &ms {
            let v = rademacher(m).unwrap();
            for n in 1..=5u32 {
                assert_eq!(
                    rademacher(&m.pow(n)).unwrap(),
                    Rational::from(&v * Rational::from(n))
                );
            }
        }
    }

    /// Truncated q-product Dedekind eta, the test oracle.
    fn eta(tau: &BigComplex, terms: u32) -> BigComplex {
        let prec = tau.prec();
        // e^{pi i tau / 12}
        let pref = tau
            .mul(&BigComplex::new(
                Float::with_val(prec, 0),
                pi(prec) / Float::with_val(prec, 12),
            ))
            .exp();
        let q = tau
            .mul(&BigComplex::new(
                Float::with_val(prec, 0),
                pi(prec) * Float::with_val(prec, 2),
            ))
            .exp();
        let mut prod = BigComplex::one(prec);
        let mut qk = q.clone();
        for _ in 0..terms {
            prod = prod.mul(&BigComplex::one(prec).sub(&qk));
            qk = qk.mul(&q);
        }
        pref.mul(&prod)
    }

    #[test]
    fn eta_multiplier_consistency() {
        // eta(M tau) = e^{pi i Psi(M)/12} sqrt(sgn(Tr M) j_M(tau)) eta(tau)
        let prec = 256;
        for m in [Mat2Z::new(1, 0, 1, 1), Mat2Z::new(2, 1, 1, 1), Mat2Z::new(3, -1, 1, 0)] {
            for tau in [
                BigComplex::new(Float::with_val(prec, 0), Float::with_val(prec, 0.5)),
                BigComplex::new(Float::with_val(prec, 3), Float::with_val(prec, 1)),
                BigComplex::new(Float::with_val(prec, 0), Float::with_val(prec, 2)),
            ] {
                let psi_m = rademacher(&m).unwrap();
                // M tau and j_M(tau) over complex tau
                let num = BigComplex::new(
                    Float::with_val(prec, &m.m[0][0]),
                    Float::new(prec),
                )
                .mul(&tau)
                .add(&BigComplex::new(
                    Float::with_val(prec, &m.m[0][1]),
                    Float::new(prec),
                ));
                let den = BigComplex::new(
                    Float::with_val(prec, &m.m[1][0]),
                    Float::new(prec),
                )
                .mul(&tau)
                .add(&BigComplex::new(
                    Float::with_val(prec, &m.m[1][1]),
                    Float::new(prec),
                ));
                let mtau = num.div(&den);
                let lhs = eta(&mtau, 600);
                let tr_sign = m.trace().cmp0() as i32;
                let j_signed = den.mul(&BigComplex::from_int(tr_sign as i64, prec));
                let mult = RootOfUnity::new(psi_m.numer().clone(), int(24)).to_complex(prec);
                let rhs = mult.mul(&j_signed.sqrt()).mul(&eta(&tau, 600));
                assert!(
                    lhs.dist_max(&rhs) < Float::with_val(prec, 1e-40),
                    "eta law failed for {m}"
                );
            }
        }
    }

    #[test]
    fn chi_on_integer_characteristics() {
        // r in Z^2: chi_r(M) = 1 for M in Gamma_r = SL2(Z)
        let r = (Rational::from(0), Rational::from(0));
        for m in [Mat2Z::s(), Mat2Z::t_pow(2), Mat2Z::new(2, 1, 1, 1)] {
            assert_eq!(chi_r(&r, &m).unwrap(), RootOfUnity::one());
        }
        let r = (Rational::from(1), Rational::from(2));
        let m = Mat2Z::new(2, 1, 1, 1);
        let v = chi_r(&r, &m).unwrap();
        assert!(v.is_real());
    }

    #[test]
    fn chi_is_homomorphism_on_cyclic_groups() {
        let t = AdmissibleTuple::new(4, 1, QuadForm::from_ints(1, -3, 1).unwrap()).unwrap();
        let (_, _, _, a) = crate::quadforms::stabilizers(&t).unwrap();
        for r in [
            (Rational::from((1, 4)), Rational::from((3, 4))),
            (Rational::from((2, 4)), Rational::from((1, 4))),
        ] {
            let c1 = chi_r(&r, &a).unwrap();
            let c2 = chi_r(&r, &a.pow(2)).unwrap();
            assert_eq!(c1.mul(&c1), c2);
        }
    }

    #[test]
    fn sf_phase_examples() {
        let t = AdmissibleTuple::new(4, 1, QuadForm::from_ints(1, -3, 1).unwrap()).unwrap();
        let phases = SfPhases::new(&t).unwrap();
        let phi0 = phases.phase(&(int(0), int(0)));
        assert_eq!(phi0, RootOfUnity::minus_one());
        // phi_{-p} = phi_p
        for p in [(1i64, 0i64), (2, 3), (1, 3), (0, 2)] {
            let plus = phases.phase(&(int(p.0), int(p.1)));
            let minus = phases.phase(&(int(-p.0), int(-p.1)));
            assert_eq!(plus, minus);
        }
    }

    #[test]
    fn phase_relation_squares() {
        // phi_p(t)^2 = (psi^{-2} chi_{p/d}^{-1})(A_t), exactly
        for (d, r, form) in [(4u64, 1u64, (1, -3, 1)), (5, 1, (1, -4, 1)), (11, 3, (1, -3, 1))] {
            let q = QuadForm::from_ints(form.0, form.1, form.2).unwrap();
            let t = AdmissibleTuple::new(d, r, q).unwrap();
            let phases = SfPhases::new(&t).unwrap();
            let (_, _, _, a) = crate::quadforms::stabilizers(&t).unwrap();
            let psi_a = psi(&a).unwrap();
            for p in [(0i64, 1i64), (1, 0), (1, 1), (2, 1), (3, 2), (1, 3)] {
                let pv = (int(p.0), int(p.1));
                let lhs = phases.phase(&pv).pow(&int(2));
                let r_vec = (
                    Rational::from((p.0, d as i64)),
                    Rational::from((p.1, d as i64)),
                );
                let chi = chi_r(&r_vec, &a).unwrap();
                let rhs = psi_a.pow(&int(-2)).mul(&chi.inverse());
                assert_eq!(lhs, rhs, "failed at d={d}, p={p:?}");
            }
        }
    }
}
