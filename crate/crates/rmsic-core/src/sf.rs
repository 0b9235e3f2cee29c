//! Special functions: variant q-Pochhammer symbols, the double sine function
//! via double-exponential quadrature, the Jacobi cocycle `sigma_M`, and the
//! modular cocycle evaluated at real-multiplication points.
//!
//! `sigma_S` is computed from the double sine integral whenever `Re tau > 0`
//! (the only case the real-multiplication pipeline needs); on the rest of
//! the upper/lower half-plane it falls back to the defining ratio of
//! infinite products.  Arguments are first brought into the double-sine
//! strip with the quasi-periodic shift, choosing the unique integer shift
//! that lands nearest the strip centre.

use crate::bigc::{pi, BigComplex};
use crate::error::Error;
use crate::hjcf::{word_decompose, HJWord};
use crate::quadforms::Mat2Z;
use crate::Result;
use once_cell::sync::Lazy;
use rug::{Float, Rational};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// A real quadratic irrational together with a hyperbolic matrix fixing it.
#[derive(Debug, Clone)]
pub struct RMPoint {
    pub rho: Float,
    pub a: Mat2Z,
    pub word: HJWord,
}

impl RMPoint {
    /// Build from a fixing matrix with positive trace and lower-left entry.
    pub fn new(rho: Float, a: Mat2Z) -> Result<Self> {
        if a.trace() <= 0 {
            return Err(Error::Domain(format!(
                "trace {} of the fixing matrix must be positive",
                a.trace()
            )));
        }
        let moved = a.moebius(&rho);
        let err = Float::with_val(64, &moved - &rho).abs();
        if err > Float::with_val(64, 1e-10) {
            return Err(Error::Domain("matrix does not fix the point".into()));
        }
        let word = word_decompose(&a)?;
        Ok(RMPoint { rho, a, word })
    }
}

/// `e^{2 pi i z}`.
pub fn exp_2pi_i(z: &BigComplex) -> BigComplex {
    let p = z.prec();
    let two_pi = Float::with_val(p, 2) * pi(p);
    z.mul_i().mul_real(&two_pi).exp()
}

/// Finite variant q-Pochhammer symbol.
pub fn qpoch_finite(z: &BigComplex, tau: &BigComplex, n: i64) -> Result<BigComplex> {
    let p = z.prec().min(tau.prec());
    let one = BigComplex::one(p);
    if n == 0 {
        return Ok(one);
    }
    let tiny = Float::with_val(p, 1) >> (p - p / 8);
    let mut acc = BigComplex::one(p);
    if n > 0 {
        for j in 0..n {
            let arg = z.add(&tau.mul_real(&Float::with_val(p, j)));
            let factor = one.sub(&exp_2pi_i(&arg));
            acc = acc.mul(&factor);
        }
        Ok(acc)
    } else {
        for j in n..0 {
            let arg = z.add(&tau.mul_real(&Float::with_val(p, j)));
            let factor = one.sub(&exp_2pi_i(&arg));
            if factor.abs() < tiny {
                return Err(Error::QPochhammerPole(j));
            }
            acc = acc.mul(&factor);
        }
        Ok(acc.recip())
    }
}

/// Infinite variant q-Pochhammer symbol on the upper and lower half-planes.
pub fn qpoch_infinite(z: &BigComplex, tau: &BigComplex) -> Result<BigComplex> {
    let p = z.prec().min(tau.prec());
    let one = BigComplex::one(p);
    let im_tau = tau.im.to_f64();
    if im_tau == 0.0 {
        return Err(Error::Domain(
            "infinite q-Pochhammer needs tau off the real axis".into(),
        ));
    }
    let lower = im_tau < 0.0;
    // product of (1 - e^{2 pi i (z + j tau)}) for j >= 0 (upper)
    // or inverse product with j <= -1 (lower); both decay like e^{-2 pi |im tau| j}
    let decay = 2.0 * std::f64::consts::PI * im_tau.abs();
    let needed = ((p as f64 + 32.0) * std::f64::consts::LN_2 / decay).ceil() as i64 + 4;
    let mut acc = BigComplex::one(p);
    for k in 0..needed {
        let j = if lower { -1 - k } else { k };
        let arg = z.add(&tau.mul_real(&Float::with_val(p, j)));
        let factor = one.sub(&exp_2pi_i(&arg));
        acc = acc.mul(&factor);
    }
    if lower {
        Ok(acc.recip())
    } else {
        Ok(acc)
    }
}

// ---- double-exponential quadrature ----

/// One abscissa of the double-exponential rule on (0, 1):
/// `(1+x)/2` and `(1-x)/2` kept separately so neither saturates, plus the
/// weight.  `k = 0` nodes carry `at_centre = true` and enter the sum once.
struct DENode {
    up: Float,
    um: Float,
    w: Float,
    at_centre: bool,
}

type NodeTable = Arc<Vec<DENode>>;

static NODE_CACHE: Lazy<Mutex<HashMap<(u32, u32), NodeTable>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Nodes new at `level` (step `2^-level`, odd multiples only for level >= 1).
fn de_nodes(prec: u32, level: u32) -> NodeTable {
    if let Some(t) = NODE_CACHE.lock().unwrap().get(&(prec, level)) {
        return t.clone();
    }
    let h = Float::with_val(prec, 1) >> level;
    let half_pi = pi(prec) / 2u32;
    let cutoff = Float::with_val(prec, 1) >> (prec + 48);
    let mut nodes = Vec::new();
    let step = if level == 0 { 1u32 } else { 2u32 };
    let start = if level == 0 { 0u32 } else { 1u32 };
    let mut k = start;
    loop {
        let u = Float::with_val(prec, k) * &h;
        let sinh_u = u.clone().sinh();
        let cosh_u = u.clone().cosh();
        let arg = Float::with_val(prec, &half_pi * &sinh_u);
        // (1 + tanh a)/2 = 1/(1 + e^{-2a}),  (1 - tanh a)/2 = 1/(1 + e^{2a})
        let two_arg = Float::with_val(prec, &arg * Float::with_val(prec, 2));
        let up = (Float::with_val(prec, (-two_arg.clone()).exp()) + 1u32).recip();
        let um = (Float::with_val(prec, two_arg.exp()) + 1u32).recip();
        let sech = arg.cosh();
        let w =
            Float::with_val(prec, &half_pi * &cosh_u) / Float::with_val(prec, &sech * &sech);
        let done = w < cutoff;
        nodes.push(DENode {
            up,
            um,
            w,
            at_centre: k == 0,
        });
        if done && k > 4 {
            break;
        }
        k += step;
    }
    let table: NodeTable = Arc::new(nodes);
    NODE_CACHE
        .lock()
        .unwrap()
        .insert((prec, level), table.clone());
    table
}

/// `sinh(x)/x`, stable near zero.
fn sinhc(x: &BigComplex) -> BigComplex {
    let p = x.prec();
    if x.abs() > 0.25 {
        return x.sinh().div(x);
    }
    // series sum x^{2k} / (2k+1)!
    let x2 = x.mul(x);
    let mut term = BigComplex::one(p);
    let mut acc = BigComplex::one(p);
    let mut k = 1u32;
    loop {
        term = term.mul(&x2).mul_real(
            &(Float::with_val(p, 1) / Float::with_val(p, (2 * k) * (2 * k + 1))),
        );
        acc = acc.add(&term);
        if term.abs() < Float::with_val(p, 1) >> (p + 4) {
            break;
        }
        k += 1;
    }
    acc
}

/// Double sine `dbs(w, tau)` by tanh-sinh quadrature of the integral
/// representation, valid for `Re tau > 0` and `0 < Re w < 1 + Re tau`.
pub fn double_sine(w: &BigComplex, tau: &BigComplex, prec: u32) -> Result<BigComplex> {
    let p = prec + 32;
    let w = w.with_prec(p);
    let tau = tau.with_prec(p);
    let z = w.sub(&BigComplex::one(p));
    let re_tau = tau.re.to_f64();
    let re_z = z.re.to_f64();
    if re_tau <= 0.0 || re_z <= -1.0 || re_z >= re_tau {
        return Err(Error::Domain(format!(
            "double sine strip violated: Re z = {re_z}, Re tau = {re_tau}"
        )));
    }
    // integrand (2a/(tau t^2)) (F1 - F2 F3)/(F2 F3),
    // a = (tau - 1 - 2z)/2, F1 = sinhc(a t), F2 = sinhc(t/2), F3 = sinhc(tau t / 2)
    let two = Float::with_val(p, 2);
    let a = tau
        .sub(&BigComplex::one(p))
        .sub(&z.mul_real(&two))
        .mul_real(&Float::with_val(p, 0.5));
    let c = a.mul_real(&two).div(&tau); // (tau - 1 - 2z)/tau
    // decay rate mu = (1 + Re tau)/2 - |Re a|
    let mu = (1.0 + re_tau) / 2.0 - a.re.to_f64().abs();
    if mu <= 0.0 {
        return Err(Error::Domain("integrand does not decay".into()));
    }
    let t_max = ((prec as f64 + 48.0) * std::f64::consts::LN_2 + 6.0) / mu;
    let t_max_f = Float::with_val(p, t_max);
    let half_t = Float::with_val(p, &t_max_f / &two);

    // F1 - F2 F3 cancels to O(t^2); near zero it is evaluated by its own
    // power series so the quotient by t^2 keeps full relative precision.
    let scale = a
        .abs()
        .to_f64()
        .max(tau.abs().to_f64() / 2.0)
        .max(0.5);
    let t_small = 0.25 / scale;
    let n_coeff = (p as usize) / 4 + 16;
    let diff_coeffs = {
        // seq1[k] = a^{2k}/(2k+1)!, seq2 = (1/2)^{2k}/(2k+1)!, seq3 with tau/2
        let mut seq1 = Vec::with_capacity(n_coeff + 1);
        let mut seq2 = Vec::with_capacity(n_coeff + 1);
        let mut seq3 = Vec::with_capacity(n_coeff + 1);
        let a2 = a.mul(&a);
        let h2 = BigComplex::new(Float::with_val(p, 0.25), Float::new(p));
        let q2 = tau.mul(&tau).mul_real(&Float::with_val(p, 0.25));
        seq1.push(BigComplex::one(p));
        seq2.push(BigComplex::one(p));
        seq3.push(BigComplex::one(p));
        for k in 1..=n_coeff {
            let fact = Float::with_val(p, ((2 * k) * (2 * k + 1)) as u64);
            let inv = Float::with_val(p, 1) / fact;
            seq1.push(seq1[k - 1].mul(&a2).mul_real(&inv));
            seq2.push(seq2[k - 1].mul(&h2).mul_real(&inv));
            seq3.push(seq3[k - 1].mul(&q2).mul_real(&inv));
        }
        let mut d = Vec::with_capacity(n_coeff + 1);
        d.push(BigComplex::zero(p));
        for k in 1..=n_coeff {
            let mut conv = BigComplex::zero(p);
            for i in 0..=k {
                conv = conv.add(&seq2[i].mul(&seq3[k - i]));
            }
            d.push(seq1[k].sub(&conv));
        }
        d
    };

    let integrand = |t: &Float| -> BigComplex {
        let tc = BigComplex::from_real(t.clone());
        let f2 = sinhc(&tc.mul_real(&Float::with_val(p, 0.5)));
        let f3 = sinhc(&tau.mul(&tc).mul_real(&Float::with_val(p, 0.5)));
        let f23 = f2.mul(&f3);
        let t2 = Float::with_val(p, t * t);
        if t.to_f64() < t_small {
            // (F1 - F2 F3)/t^2 = sum_k d_k t^{2k-2}, Horner in t^2
            let mut acc = BigComplex::zero(p);
            for k in (1..diff_coeffs.len()).rev() {
                acc = acc.mul_real(&t2).add(&diff_coeffs[k]);
            }
            c.mul(&acc).div(&f23)
        } else {
            let f1 = sinhc(&a.mul(&tc));
            let num = f1.sub(&f23);
            c.mul(&num).div(&f23).mul_real(&(Float::with_val(p, 1) / t2))
        }
    };

    // tanh-sinh levels with incremental refinement
    let target = Float::with_val(p, 1) >> (prec + 2);
    let t_full = Float::with_val(p, &t_max_f);
    let sum_level = |l: u32| -> BigComplex {
        let table = de_nodes(p, l);
        let mut acc = BigComplex::zero(p);
        for node in table.iter() {
            let t_plus = Float::with_val(p, &node.up * &t_full);
            acc = acc.add(&integrand(&t_plus).mul_real(&node.w));
            if !node.at_centre {
                let t_minus = Float::with_val(p, &node.um * &t_full);
                acc = acc.add(&integrand(&t_minus).mul_real(&node.w));
            }
        }
        acc
    };
    let mut level = 3u32;
    let mut acc = BigComplex::zero(p);
    for l in 0..=level {
        acc = acc.add(&sum_level(l));
    }
    let h0 = Float::with_val(p, 1) >> level;
    let mut integral = acc.mul_real(&Float::with_val(p, &h0 * &half_t));
    loop {
        if level >= 14 {
            return Err(Error::QuadratureDepth { target_bits: prec });
        }
        level += 1;
        let newsum = sum_level(level);
        let h = Float::with_val(p, 1) >> level;
        let refined = integral
            .mul_real(&Float::with_val(p, 0.5))
            .add(&newsum.mul_real(&Float::with_val(p, &h * &half_t)));
        let change = refined.dist_max(&integral);
        integral = refined;
        if change < target {
            break;
        }
    }
    // analytic tail of the subtracted 1/t^2 term: - int_T^inf c/t^2 = -c/T
    let tail = c.mul_real(&(Float::with_val(p, 1) / &t_max_f));
    let total = integral.sub(&tail);
    Ok(total.neg().exp().with_prec(prec))
}

/// Complex fractional linear action and denominator.
pub fn moebius_c(m: &Mat2Z, z: &BigComplex) -> BigComplex {
    let p = z.prec();
    let num = z
        .mul_real(&Float::with_val(p, &m.m[0][0]))
        .add(&BigComplex::from_real(Float::with_val(p, &m.m[0][1])));
    let den = z
        .mul_real(&Float::with_val(p, &m.m[1][0]))
        .add(&BigComplex::from_real(Float::with_val(p, &m.m[1][1])));
    num.div(&den)
}

pub fn j_factor_c(m: &Mat2Z, z: &BigComplex) -> BigComplex {
    let p = z.prec();
    z.mul_real(&Float::with_val(p, &m.m[1][0]))
        .add(&BigComplex::from_real(Float::with_val(p, &m.m[1][1])))
}

/// `sigma_S(z, tau)` with automatic strip reduction.
pub fn sigma_s(z: &BigComplex, tau: &BigComplex, prec: u32) -> Result<BigComplex> {
    let p = prec + 32;
    let z = z.with_prec(p);
    let tau = tau.with_prec(p);
    let re_tau = tau.re.to_f64();
    if re_tau > 0.0 {
        // shift z by an integer so Re lands at the strip centre (Re tau - 1)/2
        let centre = (re_tau - 1.0) / 2.0;
        let m2 = (z.re.to_f64() - centre).round() as i64;
        let z0 = z.sub(&BigComplex::from_int(m2, p));
        // sigma_S(z0 + m2, tau) = sigma_S(z0, tau) / qp_{-m2}(z0/tau, -1/tau)
        let phase = sf_exponential_prefactor(&z0, &tau);
        let dbs = double_sine(&z0.add(&BigComplex::one(p)), &tau, p)?;
        let base = phase.div(&dbs);
        if m2 == 0 {
            return Ok(base.with_prec(prec));
        }
        let minus_inv_tau = BigComplex::one(p).div(&tau).neg();
        let corr = qpoch_finite(&z0.div(&tau), &minus_inv_tau, -m2)?;
        Ok(base.div(&corr).with_prec(prec))
    } else if tau.im.to_f64() != 0.0 {
        // defining ratio of infinite products
        let zt = z.div(&tau);
        let minus_inv_tau = BigComplex::one(p).div(&tau).neg();
        let num = qpoch_infinite(&zt, &minus_inv_tau)?;
        let den = qpoch_infinite(&z, &tau)?;
        Ok(num.div(&den).with_prec(prec))
    } else {
        Err(Error::Domain(
            "sigma_S needs Re tau > 0 or tau off the real axis".into(),
        ))
    }
}

/// `e^{(pi i / 12 tau)(6 z^2 + 6(1 - tau) z + tau^2 - 3 tau + 1)}`.
fn sf_exponential_prefactor(z: &BigComplex, tau: &BigComplex) -> BigComplex {
    let p = z.prec();
    let six = Float::with_val(p, 6);
    let three = Float::with_val(p, 3);
    let poly = z
        .mul(z)
        .mul_real(&six)
        .add(
            &BigComplex::one(p)
                .sub(tau)
                .mul(z)
                .mul_real(&six),
        )
        .add(&tau.mul(tau))
        .sub(&tau.mul_real(&three))
        .add(&BigComplex::one(p));
    let coeff = BigComplex::new(Float::new(p), pi(p) / Float::with_val(p, 12)).div(tau);
    coeff.mul(&poly).exp()
}

/// `sigma_M(z, tau)` along the word decomposition of `M`.
pub fn sigma_m(m: &Mat2Z, z: &BigComplex, tau: &BigComplex, prec: u32) -> Result<BigComplex> {
    let gamma = m.m[1][0].clone();
    if gamma.is_zero() {
        if m.m[0][0] == 1 {
            // T^k
            return Ok(BigComplex::one(prec));
        }
        // -T^k: ratio of infinite products, off the real axis only
        let num = qpoch_infinite(&z.neg(), tau)?;
        let den = qpoch_infinite(z, tau)?;
        return Ok(num.div(&den).with_prec(prec));
    }
    if gamma < 0 {
        // sigma_M(z, tau) = 1 / sigma_{M^-1}(z / j_M(tau), M tau)
        let p = prec + 16;
        let z = z.with_prec(p);
        let tau = tau.with_prec(p);
        let inv = m.inverse()?;
        let jm = j_factor_c(m, &tau);
        let val = sigma_m(&inv, &z.div(&jm), &moebius_c(m, &tau), p)?;
        return Ok(val.recip().with_prec(prec));
    }
    let word = word_decompose(m)?;
    sigma_m_with_word(&word, z, tau, prec)
}

/// `sigma_M` given a precomputed word for `M`.
pub fn sigma_m_with_word(
    word: &HJWord,
    z: &BigComplex,
    tau: &BigComplex,
    prec: u32,
) -> Result<BigComplex> {
    let extra = 16 + (word.n() as f64).log2().ceil() as u32;
    let p = prec + extra;
    let z = z.with_prec(p);
    let tau = tau.with_prec(p);
    let suffixes = word.suffix_matrices();
    let mut acc = BigComplex::one(p);
    for l in suffixes.iter().skip(1) {
        let jl = j_factor_c(l, &tau);
        let factor = sigma_s(&z.div(&jl), &moebius_c(l, &tau), p)?;
        acc = acc.mul(&factor);
    }
    Ok(acc.with_prec(prec))
}

/// Check `(M - I) r` integral, i.e. `M` in `Gamma_r`.
pub fn in_gamma_r(m: &Mat2Z, r: &(Rational, Rational)) -> bool {
    let mr0 = Rational::from(&m.m[0][0] * &r.0) + Rational::from(&m.m[0][1] * &r.1);
    let mr1 = Rational::from(&m.m[1][0] * &r.0) + Rational::from(&m.m[1][1] * &r.1);
    (mr0 - &r.0).is_integer() && (mr1 - &r.1).is_integer()
}

/// The modular cocycle `shin^r_M(tau)`.
///
/// For integer characteristics the real-multiplication closed form
/// `psi(M) sqrt(j_M(rho))^{+-1}` is used (`tau` must then be the fixed
/// point); otherwise the defining ratio with the finite q-Pochhammer.
pub fn shin(
    r: &(Rational, Rational),
    m: &Mat2Z,
    tau: &BigComplex,
    prec: u32,
) -> Result<BigComplex> {
    if !in_gamma_r(m, r) {
        return Err(Error::NotInGammaR);
    }
    let p = prec + 32;
    let tau = tau.with_prec(p);
    if r.0.is_integer() && r.1.is_integer() {
        // Lemma: shin^r_M(rho) = psi(M) sqrt(j_M(rho))^{sign}, r2 > 0 or <= 0
        let moved = moebius_c(m, &tau);
        if moved.dist_max(&tau) > Float::with_val(p, 1) >> (prec / 2) {
            return Err(Error::Domain(
                "integer characteristics need a fixed point of M".into(),
            ));
        }
        if m.trace() <= 0 || m.m[1][0].is_zero() {
            return Err(Error::Domain(
                "closed form needs Tr M > 0 and a nonzero lower-left entry".into(),
            ));
        }
        let psi_m = crate::phases::psi(m)?.to_complex(p);
        let jm = j_factor_c(m, &tau);
        let root = jm.sqrt();
        let val = if r.1 > 0 {
            psi_m.mul(&root)
        } else {
            psi_m.div(&root)
        };
        return Ok(val.with_prec(prec));
    }
    // z = <r, (tau, 1)> = r2 tau - r1
    let z = tau
        .mul_real(&Float::with_val(p, &r.1))
        .sub(&BigComplex::from_real(Float::with_val(p, &r.0)));
    let num = sigma_m(m, &z, &tau, p)?;
    // index ((I - M) r)_2
    let idx = Rational::from(&r.1)
        - (Rational::from(&m.m[1][0] * &r.0) + Rational::from(&m.m[1][1] * &r.1));
    debug_assert!(idx.is_integer());
    let idx_i = idx.numer().to_i64().ok_or_else(|| {
        Error::Other("q-Pochhammer index overflow".into())
    })?;
    let jm = j_factor_c(m, &tau);
    let den = qpoch_finite(&z.div(&jm), &moebius_c(m, &tau), idx_i)?;
    Ok(num.div(&den).with_prec(prec))
}
