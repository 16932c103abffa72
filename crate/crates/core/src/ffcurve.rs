//! Kronecker symbols and traces of Frobenius for short Weierstrass curves
//! `y^2 = x^3 + a x + b` over prime fields.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::arith::{is_prime, mul_mod};
use crate::error::{Error, Result};
use crate::families::CurveFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PrimeModulus(u64);

impl PrimeModulus {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(PrimeModulus(p))
        } else {
            Err(Error::Domain(format!("{p} is not prime")))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CurveCoeffs {
    pub a: u64,
    pub b: u64,
}

impl CurveCoeffs {
    pub fn new(a: i64, b: i64, p: PrimeModulus) -> Self {
        let m = p.get() as i64;
        CurveCoeffs { a: a.rem_euclid(m) as u64, b: b.rem_euclid(m) as u64 }
    }

    pub fn is_singular(&self, p: u64) -> bool {
        discriminant_mod(self.a, self.b, p) == 0
    }
}

/// Trace of Frobenius; |a_p| <= 2 sqrt(p) by Hasse.
pub type TraceValue = i64;

/// −16(4a³ + 27b²) mod p.
pub fn discriminant_mod(a: u64, b: u64, p: u64) -> u64 {
    let a3 = mul_mod(mul_mod(a, a, p), a, p);
    let b2 = mul_mod(b, b, p);
    let inner = (mul_mod(4 % p, a3, p) + mul_mod(27 % p, b2, p)) % p;
    mul_mod((p - 16 % p) % p, inner, p)
}

fn jacobi(a: i128, n: i128) -> i32 {
    debug_assert!(n > 0 && n % 2 == 1);
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut r = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                r = -r;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            r = -r;
        }
        a %= n;
    }
    if n == 1 {
        r
    } else {
        0
    }
}

/// Kronecker symbol (a|n) with the full extension to n = 0, n < 0 and even n.
pub fn kronecker(a: i64, n: i64) -> i32 {
    let a = a as i128;
    let mut n = n as i128;
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut r = 1;
    if n < 0 {
        n = -n;
        if a < 0 {
            r = -r;
        }
    }
    let mut v = 0;
    while n % 2 == 0 {
        n /= 2;
        v += 1;
    }
    if v > 0 {
        if a % 2 == 0 {
            return 0;
        }
        let a8 = a.rem_euclid(8);
        if v % 2 == 1 && (a8 == 3 || a8 == 5) {
            r = -r;
        }
    }
    r * jacobi(a, n)
}

/// Quadratic character of F_p as a lookup table, shared by every trace
/// evaluated at the same prime.
#[derive(Debug, Clone)]
pub struct QuadraticCharacter {
    p: u64,
    chi: Vec<i8>,
}

impl QuadraticCharacter {
    /// Table for an odd prime `p`.
    pub fn new(p: u64) -> Self {
        assert!(p >= 3 && p % 2 == 1, "quadratic character needs an odd prime");
        let mut chi = vec![-1i8; p as usize];
        chi[0] = 0;
        for x in 1..=p / 2 {
            chi[mul_mod(x, x, p) as usize] = 1;
        }
        QuadraticCharacter { p, chi }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn eval(&self, x: u64) -> i8 {
        self.chi[x as usize]
    }

    /// −Σ_x χ(x³ + ax + b); no singularity check.
    pub fn trace(&self, a: u64, b: u64) -> TraceValue {
        let p = self.p;
        let mut s: i64 = 0;
        for x in 0..p {
            let x2a = (mul_mod(x, x, p) + a) % p;
            let y = (mul_mod(x2a, x, p) + b) % p;
            s += self.chi[y as usize] as i64;
        }
        -s
    }

    /// Trace, or `None` when the curve is singular mod p.
    pub fn trace_checked(&self, a: u64, b: u64) -> Option<TraceValue> {
        if discriminant_mod(a, b, self.p) == 0 {
            None
        } else {
            Some(self.trace(a, b))
        }
    }
}

/// a_p = −Σ_x (x³+ax+b | p), for p >= 5 and Δ ≢ 0.
pub fn curve_trace(c: CurveCoeffs, p: PrimeModulus) -> Result<TraceValue> {
    let p = p.get();
    if p < 5 {
        return Err(Error::Precondition(format!("curve_trace needs p >= 5, got {p}")));
    }
    let (a, b) = (c.a % p, c.b % p);
    if discriminant_mod(a, b, p) == 0 {
        return Err(Error::Singular(format!("y^2 = x^3 + {a}x + {b} over F_{p}")));
    }
    let mut s: i64 = 0;
    for x in 0..p {
        let y = (mul_mod(mul_mod(x, x, p), x, p) + mul_mod(a, x, p) + b) % p;
        s += kronecker(y as i64, p as i64) as i64;
    }
    Ok(-s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceEntry {
    Trace(TraceValue),
    Singular,
}

impl TraceEntry {
    pub fn trace(self) -> Option<TraceValue> {
        match self {
            TraceEntry::Trace(t) => Some(t),
            TraceEntry::Singular => None,
        }
    }
}

/// Trace of E(f(w), g(w)) for every residue w mod p.
pub fn trace_table(fam: &CurveFamily, p: PrimeModulus) -> Result<Vec<TraceEntry>> {
    let p = p.get();
    if p < 5 {
        return Err(Error::Precondition(format!("trace_table needs p >= 5, got {p}")));
    }
    if p <= fam.bad_prime_bound() {
        return Err(Error::Precondition(format!(
            "p = {p} does not exceed the bad-prime bound {}",
            fam.bad_prime_bound()
        )));
    }
    let chi = QuadraticCharacter::new(p);
    let reduced = fam.reduce_mod(p);
    Ok((0..p).map(|w| reduced.entry(w, &chi)).collect())
}

/// The thirteen rational CM j-invariants, one per imaginary quadratic order
/// of class number one (discriminants −3, −4, −7, −8, −11, −12, −16, −19,
/// −27, −28, −43, −67, −163).
pub const CM_J_INVARIANTS: [i64; 13] = [
    0,
    1728,
    -3375,
    8000,
    -32768,
    54000,
    287496,
    -884736,
    -12288000,
    16581375,
    -884736000,
    -147197952000,
    -262537412640768000,
];

pub fn is_cm_j(j: &BigRational) -> bool {
    j.is_integer() && CM_J_INVARIANTS.iter().any(|&c| *j.numer() == BigInt::from(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_points(a: u64, b: u64, p: u64) -> u64 {
        let mut n = 1;
        for x in 0..p {
            for y in 0..p {
                if (y * y) % p == (x * x % p * x + a * x + b) % p {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn trace_equals_point_count_for_small_primes() {
        for p in crate::arith::primes_up_to(100).into_iter().filter(|&p| p >= 5) {
            let pm = PrimeModulus::new(p).unwrap();
            let chi = QuadraticCharacter::new(p);
            let step = if p > 40 { 7 } else { 1 };
            for a in (0..p).step_by(step) {
                for b in 0..p {
                    let c = CurveCoeffs { a, b };
                    match curve_trace(c, pm) {
                        Ok(t) => {
                            assert_eq!(t, p as i64 + 1 - naive_points(a, b, p) as i64);
                            assert_eq!(chi.trace_checked(a, b), Some(t));
                            assert!(t * t <= 4 * p as i64);
                        }
                        Err(_) => assert!(c.is_singular(p)),
                    }
                }
            }
        }
    }

    #[test]
    fn kronecker_against_residue_tables() {
        for p in crate::arith::primes_up_to(100).into_iter().filter(|&p| p > 2) {
            let squares: std::collections::HashSet<u64> = (1..p).map(|x| x * x % p).collect();
            for a in -150i64..150 {
                let r = a.rem_euclid(p as i64) as u64;
                let want = if r == 0 { 0 } else if squares.contains(&r) { 1 } else { -1 };
                assert_eq!(kronecker(a, p as i64), want, "({a}|{p})");
            }
        }
    }

    #[test]
    fn kronecker_spot_values() {
        assert_eq!(kronecker(1, 7), 1);
        assert_eq!(kronecker(2, 7), 1);
        assert_eq!(kronecker(3, 9), 0);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(7, 2), 1);
        assert_eq!(kronecker(-1, -1), -1);
        assert_eq!(kronecker(1, 0), 1);
        assert_eq!(kronecker(2, 0), 0);
        assert_eq!(kronecker(-3, 4), 1);
        assert_eq!(kronecker(6, 4), 0);
    }

    #[test]
    fn curve_trace_examples() {
        let p5 = PrimeModulus::new(5).unwrap();
        assert_eq!(curve_trace(CurveCoeffs { a: 0, b: 1 }, p5), Ok(0));
        assert_eq!(curve_trace(CurveCoeffs { a: 1, b: 1 }, p5), Ok(-3));
        assert!(matches!(curve_trace(CurveCoeffs { a: 0, b: 0 }, p5), Err(Error::Singular(_))));
        assert!(PrimeModulus::new(9).is_err());
    }

    #[test]
    fn cm_list() {
        assert!(is_cm_j(&BigRational::from_integer(0.into())));
        assert!(is_cm_j(&BigRational::from_integer(1728.into())));
        assert!(!is_cm_j(&BigRational::from_integer(1.into())));
        assert!(!is_cm_j(&BigRational::new(1728.into(), 5.into())));
        let distinct: std::collections::BTreeSet<_> = CM_J_INVARIANTS.iter().collect();
        assert_eq!(distinct.len(), 13);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn kronecker_multiplicative(a in -10_000i64..10_000, b in -10_000i64..10_000, n in -5_000i64..5_000) {
                prop_assert_eq!(kronecker(a * b, n), kronecker(a, n) * kronecker(b, n));
            }

            #[test]
            fn kronecker_multiplicative_in_modulus(a in -10_000i64..10_000, m in -3_000i64..3_000, n in -3_000i64..3_000) {
                prop_assume!(m != 0 && n != 0);
                prop_assert_eq!(kronecker(a, m * n), kronecker(a, m) * kronecker(a, n));
            }

            #[test]
            fn hasse_bound(a in 0u64..1_000_000, b in 0u64..1_000_000, idx in 0usize..160) {
                let ps = crate::arith::primes_up_to(1000);
                let p = ps[3 + idx % (ps.len() - 3)];
                let c = CurveCoeffs { a: a % p, b: b % p };
                if let Ok(t) = curve_trace(c, PrimeModulus::new(p).unwrap()) {
                    prop_assert!(t * t <= 4 * p as i64);
                }
            }
        }
    }
}
