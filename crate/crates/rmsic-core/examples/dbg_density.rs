use rmsic_core::numtheory::fundamental_unit;
use rug::{Integer, Rational};

fn main() {
    let mut mismatch = 0;
    let mut odd = 0u64;
    let mut total = 0u64;
    for delta in (5..=30000u64).step_by(8) {
        // squarefree check
        let mut sf = true;
        let mut p = 2u64;
        while p * p <= delta {
            if delta % (p * p) == 0 { sf = false; break; }
            p += 1;
        }
        if !sf { continue; }
        total += 1;
        let (eps, _, _) = fundamental_unit(&Integer::from(delta)).unwrap();
        let tr = eps.trace();
        assert!(tr.is_integer());
        let t_odd = tr.numer().clone().is_odd();
        if t_odd { odd += 1; }
        // compare with any odd-trace unit existence: powers of eps
        // (odd trace of eps <=> exists odd-trace unit, per the theory)
        let _ = Rational::from(1);
        if t_odd != rmsic_core::towers::unit_trace_is_odd_pub(delta) {
            mismatch += 1;
            if mismatch < 5 { println!("mismatch at {delta}"); }
        }
    }
    println!("total {total}, odd {odd}, frac {}", odd as f64 / total as f64);
    println!("mismatches: {mismatch}");
}
