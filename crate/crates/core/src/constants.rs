//! Character sums c_{f,g}^{τ,υ,ω}(m,n), their prime-power closed forms,
//! the local factors Λ(p), Euler-product constants, π_{1/2}(x) and
//! congruence-restricted Hurwitz averages.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use twofloat::TwoFloat;

use crate::arith::{factorize, gcd, is_prime, lcm, phi_prime_power, primes_up_to, valuation};
use crate::classnum::HurwitzTable;
use crate::counting::{hurwitz_argument, CongruenceClass, TraceSequence};
use crate::error::{Error, Result};
use crate::ffcurve::kronecker;
use crate::numeric::{compensated_sum, dd_div, integrate, rational_to_twofloat, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CharSumArgs {
    pub f: u64,
    pub g: u64,
    pub m: u64,
    pub n: u64,
    pub tau: i64,
    pub cc: CongruenceClass,
}

fn require_odd(tau: i64) -> Result<()> {
    if tau % 2 == 0 {
        Err(Error::Domain(format!("τ = {tau} must be odd")))
    } else {
        Ok(())
    }
}

/// (f²g² | 2τ), using periodicity of the symbol in its top argument.
fn prefactor(f: u64, g: u64, tau: i64) -> i32 {
    let modulus = 8 * tau.unsigned_abs() as u128;
    let fg = (f as u128 % modulus) * (g as u128 % modulus) % modulus;
    let sq = fg * fg % modulus;
    kronecker(sq as i64, 2 * tau.abs())
}

/// Residues x mod 4·modulus admissible for one side of the double sum,
/// returned as (x, (τ² − x·s²)/4, (x | modulus)).
fn side(modulus: u64, s: u64, tau: i64, cc: &CongruenceClass) -> Vec<(i128, i32)> {
    let four_m = 4 * modulus as i128;
    let s2 = s as i128 * s as i128;
    let t2 = tau as i128 * tau as i128;
    let q_mod = gcd(cc.omega, modulus * s * s) as i128;
    let mut out = Vec::new();
    for x in 0..four_m {
        if x.gcd(&four_m) != 1 {
            continue;
        }
        let d = t2 - x * s2;
        if d.gcd(&four_m) != 4 {
            continue;
        }
        let q = d / 4;
        if (q - cc.upsilon as i128).rem_euclid(q_mod) != 0 {
            continue;
        }
        let k = kronecker(x as i64, modulus as i64);
        if k != 0 {
            out.push((q, k));
        }
    }
    out
}

/// Direct evaluation of the double sum over invertible residues a mod 4m, b mod 4n.
pub fn char_sum_direct(args: &CharSumArgs) -> Result<i64> {
    let CharSumArgs { f, g, m, n, tau, cc } = *args;
    require_odd(tau)?;
    if f == 0 || g == 0 || m == 0 || n == 0 {
        return Err(Error::Domain("f, g, m, n must be positive".into()));
    }
    let pre = prefactor(f, g, tau);
    if pre == 0 {
        return Ok(0);
    }
    let a_side = side(m, f, tau, &cc);
    let b_side = side(n, g, tau, &cc);
    let modulus = gcd(m * f * f, n * g * g) as i128;
    let mut by_class: HashMap<i128, i64> = HashMap::new();
    for (q, k) in &b_side {
        *by_class.entry(q.rem_euclid(modulus)).or_insert(0) += *k as i64;
    }
    let s: i64 = a_side
        .iter()
        .map(|(q, k)| *k as i64 * by_class.get(&q.rem_euclid(modulus)).copied().unwrap_or(0))
        .sum();
    Ok(pre as i64 * s)
}

fn ipow(p: u64, e: u32) -> i128 {
    (p as i128).pow(e)
}

/// Closed form of c_{p^k, p^ℓ}(p^i, p^j). The gate for the (k, ℓ) ≠ (0, 0)
/// cases compares min(v_p(ω), 2k) with v_p(ρ₀); see the tests against
/// `char_sum_direct`.
pub fn char_sum_local(p: u64, i: u32, j: u32, k: u32, l: u32, tau: i64, cc: &CongruenceClass) -> Result<i128> {
    require_odd(tau)?;
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    Ok(local_closed_form(p, i, j, k, l, tau, cc))
}

fn local_closed_form(p: u64, i: u32, j: u32, k: u32, l: u32, tau: i64, cc: &CongruenceClass) -> i128 {
    if k < l {
        return local_closed_form(p, j, i, l, k, tau, cc);
    }
    let v = valuation(cc.omega as i128, p).unwrap_or(0);
    let rho0 = tau as i128 * tau as i128 - 4 * cc.upsilon as i128;
    let vr = valuation(rho0, p).unwrap_or(u32::MAX);
    let kro = |a: i128| kronecker(a.rem_euclid(8 * p as i128) as i64, p as i64) as i128;
    let sign_pow = |x: i128, e: u32| if e.is_multiple_of(2) { x * x } else { x };
    if k == 0 && l == 0 {
        if i == 0 && j == 0 {
            return 1;
        }
        let mx = i.max(j);
        if v == 0 {
            if p == 2 {
                return ipow(2, mx - 1) * if (i + j).is_multiple_of(2) { 1 } else { -1 };
            }
            let kt = kro(tau as i128 * tau as i128);
            return if (i + j) % 2 == 1 {
                -ipow(p, mx - 1) * kt
            } else {
                ipow(p, mx - 1) * (p as i128 - 1 - kt)
            };
        }
        let e = (i as i64 - v as i64).max(j as i64 - v as i64).max(0) as u32;
        return ipow(p, e) * sign_pow(kro(rho0), i + j);
    }
    let v2tau = valuation(2 * tau as i128, p).unwrap_or(0);
    if v2tau >= 1 || v.min(2 * k) > vr {
        return 0;
    }
    let rho_k = || rho0 / ipow(p, 2 * k);
    if k > l {
        if j > 0 {
            return 0;
        }
        if i == 0 {
            return 1;
        }
        if 2 * k >= v {
            return if i % 2 == 1 { 0 } else { ipow(p, i - 1) * (p as i128 - 1) };
        }
        let e = (i as i64 + 2 * k as i64 - v as i64).max(0) as u32;
        return ipow(p, e) * sign_pow(kro(rho_k()), i);
    }
    if i + j == 0 {
        return 1;
    }
    if 2 * k >= v {
        return if (i + j) % 2 == 1 { 0 } else { ipow(p, i.max(j) - 1) * (p as i128 - 1) };
    }
    let base = 2 * k as i64 - v as i64;
    let e = (i as i64 + base).max(j as i64 + base).max(0) as u32;
    ipow(p, e) * sign_pow(kro(rho_k()), i + j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CurveKind {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    #[serde(rename = "p=2")]
    Two,
    #[serde(rename = "p|tau")]
    DividesTau,
    #[serde(rename = "generic")]
    Generic,
    #[serde(rename = "1<=v_p(omega)<=v_p(rho0)")]
    OmegaWithinRho,
    #[serde(rename = "v_p(rho0)=0<v_p(omega)")]
    RhoUnit,
    #[serde(rename = "0<v_p(rho0)<v_p(omega), odd")]
    RhoOdd,
    #[serde(rename = "0<v_p(rho0)<v_p(omega), even")]
    RhoEven,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalFactorProfile {
    pub kind: CurveKind,
    pub p: u64,
    #[serde(serialize_with = "ser_big_rational")]
    pub lambda: BigRational,
    pub branch: Branch,
    pub rho0: i64,
    pub rho_star: i64,
    pub v_omega: u32,
    pub v_rho0: u32,
    pub v_2tau: u32,
    pub chi_star: i32,
}

pub fn ser_big_rational<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

fn rat(n: impl Into<BigInt>, d: impl Into<BigInt>) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn big_pow(p: u64, e: u32) -> BigInt {
    num_traits::pow(BigInt::from(p), e as usize)
}

/// σ_{−1}(p^e) = Σ_{t <= e} p^{−t}.
pub fn sigma_minus1(p: u64, e: u32) -> BigRational {
    (0..=e).fold(BigRational::zero(), |acc, t| acc + rat(1, big_pow(p, t)))
}

fn phi_big(p: u64, e: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(phi_prime_power(p, e)))
}

/// Λ(p) from the seven-branch tables for one or two curves.
pub fn local_factor(kind: CurveKind, p: u64, tau: i64, cc: &CongruenceClass) -> Result<LocalFactorProfile> {
    require_odd(tau)?;
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    let v = valuation(cc.omega as i128, p).unwrap_or(0);
    let rho0 = tau as i128 * tau as i128 - 4 * cc.upsilon as i128;
    let vr = valuation(rho0, p).expect("ρ₀ is odd, hence nonzero");
    let rho_star = rho0 / (p as i128).pow(vr);
    let chi = kronecker(rho_star.rem_euclid(8 * p as i128) as i64, p as i64);
    let v2tau = valuation(2 * tau as i128, p).unwrap_or(0);
    let pb = BigInt::from(p);
    let pq = |e: u32| big_pow(p, e);
    let ceil = v.div_ceil(2);
    let (lambda, branch) = match kind {
        CurveKind::Two => {
            if v == 0 {
                if p == 2 {
                    (rat(4, 9), Branch::Two)
                } else if tau.rem_euclid(p as i64) == 0 {
                    let p2 = &pb * &pb;
                    (rat(&p2 * (&p2 + 1), (&p2 - 1) * (&p2 - 1)), Branch::DividesTau)
                } else {
                    let p2 = &pb * &pb;
                    let num = &p2 * (&p2 * &p2 - 2 * &p2 - 3 * &pb - 1);
                    let den = num_traits::pow(&pb + 1, 3) * num_traits::pow(&pb - 1, 3);
                    (rat(num, den), Branch::Generic)
                }
            } else if v <= vr {
                let s = sigma_minus1(p, ceil - 1);
                let head = &s * &s / phi_big(p, v);
                let num = 2 * pq(ceil) * (&pb + 1) * (&pb + 1) - &pb * &pb - 3 * &pb - 1;
                let den = pq(4 * ceil - 4) * num_traits::pow(&pb * &pb - 1, 3);
                (head + rat(num, den), Branch::OmegaWithinRho)
            } else if vr == 0 {
                let d = &pb - chi;
                (rat(&pb * &pb, &d * &d) / phi_big(p, v), Branch::RhoUnit)
            } else if vr % 2 == 1 {
                let s = sigma_minus1(p, (vr - 1) / 2);
                (&s * &s / phi_big(p, v), Branch::RhoOdd)
            } else {
                let s = sigma_minus1(p, vr / 2) + rat(1, pq(vr / 2) * (chi * &pb - 1));
                (&s * &s / phi_big(p, v), Branch::RhoEven)
            }
        }
        CurveKind::One => {
            if v == 0 {
                if p == 2 {
                    (rat(2, 3), Branch::Two)
                } else if tau.rem_euclid(p as i64) == 0 {
                    (rat(&pb * &pb, &pb * &pb - 1), Branch::DividesTau)
                } else {
                    (rat(&pb * (&pb * &pb - &pb - 1), (&pb * &pb - 1) * (&pb - 1)), Branch::Generic)
                }
            } else if v <= vr {
                let head = sigma_minus1(p, ceil - 1) / phi_big(p, v);
                (head + rat(1, pq(3 * ceil - 3) * (&pb * &pb - 1) * (&pb - 1)), Branch::OmegaWithinRho)
            } else if vr == 0 {
                (rat(pb.clone(), &pb - chi) / phi_big(p, v), Branch::RhoUnit)
            } else if vr % 2 == 1 {
                (sigma_minus1(p, (vr - 1) / 2) / phi_big(p, v), Branch::RhoOdd)
            } else {
                let s = sigma_minus1(p, vr / 2) + rat(1, pq(vr / 2) * (chi * &pb - 1));
                (s / phi_big(p, v), Branch::RhoEven)
            }
        }
    };
    Ok(LocalFactorProfile {
        kind,
        p,
        lambda,
        branch,
        rho0: rho0 as i64,
        rho_star: rho_star as i64,
        v_omega: v,
        v_rho0: vr,
        v_2tau: v2tau,
        chi_star: chi,
    })
}

/// Σ c/(p^{i+j+k+ℓ} φ(p^{max(v, i+2k, j+2ℓ)})) over exponents <= max_exp
/// (j = ℓ = 0 for one curve), from the closed-form character sums.
pub fn local_factor_from_series(kind: CurveKind, p: u64, tau: i64, cc: &CongruenceClass, max_exp: u32) -> Result<BigRational> {
    require_odd(tau)?;
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    let v = valuation(cc.omega as i128, p).unwrap_or(0);
    let e = max_exp;
    let outer = if kind == CurveKind::Two { e } else { 0 };
    // Common denominator p^top·(p−1); every term is an integer multiple of it.
    let top = 4 * e + v.max(3 * e) + 1;
    let powers: Vec<BigInt> = (0..=top).map(|t| big_pow(p, t)).collect();
    let pm1 = BigInt::from(p - 1);
    let mut num = BigInt::zero();
    for i in 0..=e {
        for j in 0..=outer {
            for k in 0..=e {
                for l in 0..=outer {
                    let c = local_closed_form(p, i, j, k, l, tau, cc);
                    if c == 0 {
                        continue;
                    }
                    let s = i + j + k + l;
                    let ex = v.max(i + 2 * k).max(j + 2 * l);
                    let c = BigInt::from(c);
                    num += if ex == 0 { c * &pm1 * &powers[(top - s) as usize] } else { c * &powers[(top + 1 - s - ex) as usize] };
                }
            }
        }
    }
    Ok(BigRational::new(num, &powers[top as usize] * pm1))
}

/// 4/π for one curve, 4/π² for two.
pub fn prefactor_of(kind: CurveKind) -> TwoFloat {
    let pi = TwoFloat::new_add(std::f64::consts::PI, 1.2246467991473532e-16);
    match kind {
        CurveKind::One => dd_div(TwoFloat::from(4.0), pi),
        CurveKind::Two => dd_div(TwoFloat::from(4.0), pi * pi),
    }
}

fn generic_log_envelope(kind: CurveKind) -> f64 {
    static ONE: OnceLock<f64> = OnceLock::new();
    static TWO: OnceLock<f64> = OnceLock::new();
    let cell = match kind {
        CurveKind::One => &ONE,
        CurveKind::Two => &TWO,
    };
    *cell.get_or_init(|| {
        // Fitted over p ∈ [10³, 10⁴] on the two branches that occur for p ∤ 2ω.
        let worst = primes_up_to(10_000)
            .into_iter()
            .filter(|&p| p >= 1000)
            .flat_map(|p| {
                [1i64, p as i64].map(|tau_like| {
                    let cc = CongruenceClass::all();
                    let tau = if tau_like == 1 { 1 } else { p as i64 };
                    let l = local_factor(kind, p, tau, &cc).expect("generic factor").lambda;
                    let d = (l.numer() - l.denom()).to_f64().unwrap() / l.denom().to_f64().unwrap();
                    d.ln_1p().abs() * (p as f64) * (p as f64)
                })
            })
            .fold(0.0, f64::max);
        2.0 * worst
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerProductResult {
    pub kind: CurveKind,
    pub p_max: u64,
    /// Primes above p_max that divide ω and are included anyway.
    pub extra_primes: Vec<u64>,
    /// ∏ Λ(p), leading double of the double-double product.
    pub partial_product: f64,
    pub partial_product_lo: f64,
    /// Bound on Σ_{p > p_max} |log Λ(p)|.
    pub tail_estimate: f64,
    /// Prefactor times the partial product.
    pub constant: f64,
    /// Absolute error bound on `constant` implied by `tail_estimate`.
    pub constant_error: f64,
    pub envelope_constant: f64,
}

pub fn euler_product(kind: CurveKind, tau: i64, cc: &CongruenceClass, p_max: u64) -> Result<EulerProductResult> {
    require_odd(tau)?;
    if p_max < 2 {
        return Err(Error::Domain("P_max must be at least 2".into()));
    }
    let mut primes = primes_up_to(p_max);
    let extra: Vec<u64> = factorize(cc.omega).into_iter().map(|(q, _)| q).filter(|&q| q > p_max).collect();
    primes.extend(&extra);
    let factors: Vec<TwoFloat> = primes
        .par_iter()
        .map(|&p| local_factor(kind, p, tau, cc).map(|f| rational_to_twofloat(&f.lambda)))
        .collect::<Result<_>>()?;
    let product = factors.iter().fold(TwoFloat::from(1.0), |acc, &f| acc * f);
    let c = generic_log_envelope(kind);
    // Σ_{p > P} 1/p² < 1/P.
    let tail = c / p_max as f64;
    let constant = product * prefactor_of(kind);
    Ok(EulerProductResult {
        kind,
        p_max,
        extra_primes: extra,
        partial_product: product.hi(),
        partial_product_lo: product.lo(),
        tail_estimate: tail,
        constant: constant.hi(),
        constant_error: constant.hi() * tail.exp_m1(),
        envelope_constant: c,
    })
}

/// π_{1/2}(x) = ∫₂ˣ dt/(2√t log t) = ∫_{√2}^{√x} ds/(2 log s), integrated in u = log s.
pub fn pi_half(x: f64) -> Result<f64> {
    if !(x >= 2.0) {
        return Err(Error::Domain(format!("π_1/2 needs x >= 2, got {x}")));
    }
    let a = 0.5 * std::f64::consts::LN_2;
    let b = 0.5 * x.ln();
    let scale = (x.sqrt() / x.ln().max(1.0)).max(1.0);
    Ok(integrate(|u: f64| u.exp() / (2.0 * u), a, b, 1e-14 * scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Moment {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HurwitzAverage {
    pub value: f64,
    pub primes_used: u64,
    /// Smallest prime admitted to the sum.
    pub start_prime: u64,
}

pub const HURWITZ_AVG_START: u64 = 5;

/// Largest Hurwitz argument the average needs up to x.
pub fn hurwitz_avg_bound(seq: &TraceSequence, x: u64) -> Result<u64> {
    let mut n = 0;
    for p in primes_up_to(x).into_iter().filter(|&p| p >= HURWITZ_AVG_START) {
        if let Some(a) = hurwitz_argument(seq, p)? {
            n = n.max(a);
        }
    }
    Ok(n)
}

/// Σ_{5 <= p <= x, p ≡ υ (ω)} H(4p − 𝔄(p)²)/p, or the squared version over p².
pub fn hurwitz_avg(seq: &TraceSequence, x: u64, cc: &CongruenceClass, moment: Moment, table: &HurwitzTable) -> Result<HurwitzAverage> {
    let mut acc = CompensatedSum::new();
    let mut used = 0;
    for p in primes_up_to(x).into_iter().filter(|&p| p >= HURWITZ_AVG_START && cc.contains(p)) {
        used += 1;
        let Some(n) = hurwitz_argument(seq, p)? else { continue };
        let h = table.value12(n)? as f64 / 12.0;
        acc.add(match moment {
            Moment::First => h / p as f64,
            Moment::Second => h * h / (p as f64 * p as f64),
        });
    }
    Ok(HurwitzAverage { value: acc.value(), primes_used: used, start_prime: HURWITZ_AVG_START })
}

/// κ: multiplicative with κ(p^i) = p for odd i and 1 for even i.
pub fn kappa(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Domain("κ needs n >= 1".into()));
    }
    Ok(factorize(n).into_iter().filter(|(_, e)| e % 2 == 1).map(|(p, _)| p).product())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KDirect {
    pub bounds: [u64; 4],
    pub value: f64,
    /// Σ |term| over the same box.
    pub abs_sum: f64,
    pub nonzero_terms: u64,
}

/// Truncated Σ_{f,g,m,n} c_{f,g}(m,n)/(fgmn·φ(lcm(ω, mf², ng²))) over a box.
pub fn k_direct(tau: i64, cc: &CongruenceClass, bounds: [u64; 4]) -> Result<KDirect> {
    require_odd(tau)?;
    if bounds.contains(&0) {
        return Err(Error::Domain("truncation bounds must be at least 1".into()));
    }
    let [bf, bg, bm, bn] = bounds;
    let tuples: Vec<(u64, u64, u64, u64)> = (1..=bf)
        .flat_map(|f| (1..=bg).flat_map(move |g| (1..=bm).flat_map(move |m| (1..=bn).map(move |n| (f, g, m, n)))))
        .collect();
    let terms: Vec<Option<BigRational>> = tuples
        .par_iter()
        .map(|&(f, g, m, n)| {
            let c = char_sum_direct(&CharSumArgs { f, g, m, n, tau, cc: *cc })?;
            if c == 0 {
                return Ok(None);
            }
            let l = lcm(cc.omega, lcm(m * f * f, n * g * g));
            let den = BigInt::from(f * g * m * n) * BigInt::from(crate::arith::euler_phi(l));
            Ok(Some(BigRational::new(BigInt::from(c), den)))
        })
        .collect::<Result<_>>()?;
    let mut value = BigRational::zero();
    let mut abs = BigRational::zero();
    let mut nonzero = 0;
    for t in terms.into_iter().flatten() {
        nonzero += 1;
        abs += t.abs();
        value += t;
    }
    Ok(KDirect {
        bounds,
        value: value.to_f64().unwrap_or(f64::NAN),
        abs_sum: abs.to_f64().unwrap_or(f64::NAN),
        nonzero_terms: nonzero,
    })
}

/// Local series of |c| at p, in double precision, exponents <= max_exp.
pub fn local_abs_series(p: u64, tau: i64, cc: &CongruenceClass, max_exp: u32) -> f64 {
    let v = valuation(cc.omega as i128, p).unwrap_or(0);
    let pf = p as f64;
    let mut terms = Vec::new();
    for i in 0..=max_exp {
        for j in 0..=max_exp {
            for k in 0..=max_exp {
                for l in 0..=max_exp {
                    let c = local_closed_form(p, i, j, k, l, tau, cc);
                    if c == 0 {
                        continue;
                    }
                    let ex = v.max(i + 2 * k).max(j + 2 * l);
                    let phi = if ex == 0 { 1.0 } else { pf.powi(ex as i32 - 1) * (pf - 1.0) };
                    terms.push(c.unsigned_abs() as f64 / (pf.powi((i + j + k + l) as i32) * phi));
                }
            }
        }
    }
    terms.sort_by(|a, b| a.total_cmp(b));
    compensated_sum(terms)
}

fn abs_series_exponent(p: u64) -> u32 {
    ((48.0 / (p as f64).log2()).ceil() as u32).max(4)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KEnvelope {
    /// ∏_p of the local series of |c|: the full Σ |term|.
    pub abs_total: f64,
    pub box_abs: f64,
    /// abs_total − box_abs bounds |K − K_box|.
    pub envelope: f64,
}

/// Bound on the part of the four-fold series outside the truncation box.
/// The |c| series is multiplicative, so Σ_all |term| = ∏_p Λ^{abs}(p); primes
/// up to 10⁴ are summed and the rest enter through a fitted 1/p² envelope.
pub fn k_direct_envelope(tau: i64, cc: &CongruenceClass, kd: &KDirect) -> Result<KEnvelope> {
    require_odd(tau)?;
    const P_ABS: u64 = 10_000;
    let mut primes = primes_up_to(P_ABS);
    primes.extend(factorize(cc.omega).into_iter().map(|(q, _)| q).filter(|&q| q > P_ABS));
    let logs: Vec<f64> = primes
        .par_iter()
        .map(|&p| local_abs_series(p, tau, cc, abs_series_exponent(p)).ln())
        .collect();
    let fit = primes
        .iter()
        .zip(&logs)
        .filter(|(&p, _)| (1000..=P_ABS).contains(&p) && gcd(p, cc.omega) == 1)
        .map(|(&p, l)| l.abs() * (p * p) as f64)
        .fold(0.0, f64::max);
    let tail = 2.0 * fit / P_ABS as f64;
    let abs_total = (compensated_sum(logs) + tail).exp();
    Ok(KEnvelope { abs_total, box_abs: kd.abs_sum, envelope: abs_total - kd.abs_sum })
}
