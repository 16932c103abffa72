//! Moments of the normalized pairing Σ_p ã_E(p)ã_E'(p)/√π_P(x) over boxes of
//! curve pairs, the h_m(j) expansion coefficients, S(n) averages, and the same
//! moments over ingested Hecke eigenvalue tables.

use std::collections::BTreeMap;
use std::io::Read;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{euler_phi, factorize, primes_up_to};
use crate::counting::CongruenceClass;
use crate::error::{Error, Result};
use crate::ffcurve::{discriminant_mod, QuadraticCharacter};
use crate::numeric::CompensatedSum;
use crate::poly::Poly;

const H_COEFF_MAX_M: u32 = 120;

fn binomial(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// h_m(j) = C(m, (m−j)/2) − C(m, (m−j)/2 − 1) when m ≡ j mod 2, else 0.
pub fn h_coeff(m: u32, j: u32) -> Result<u128> {
    if j > m {
        return Err(Error::Domain(format!("h_m(j) needs j <= m, got m = {m}, j = {j}")));
    }
    if m > H_COEFF_MAX_M {
        return Err(Error::Domain(format!("m = {m} exceeds {H_COEFF_MAX_M}")));
    }
    if (m - j) % 2 == 1 {
        return Ok(0);
    }
    let k = (m - j) / 2;
    Ok(binomial(m, k) - if k == 0 { 0 } else { binomial(m, k - 1) })
}

/// (2^{m+1}/π)∫₀^π cos^m θ sin((j+1)θ) sin θ dθ by the periodic trapezoid
/// rule, which is exact for trigonometric polynomials of degree < nodes.
pub fn h_coeff_quadrature(m: u32, j: u32) -> f64 {
    let nodes = 2 * (m + j) as usize + 8;
    let step = 2.0 * std::f64::consts::PI / nodes as f64;
    let mut acc = CompensatedSum::new();
    for k in 0..nodes {
        let t = -std::f64::consts::PI + k as f64 * step;
        acc.add(t.cos().powi(m as i32) * ((j + 1) as f64 * t).sin() * t.sin());
    }
    // The integrand is even, so ∫₀^π is half the full-period integral.
    2f64.powi(m as i32) / std::f64::consts::PI * acc.value() * step
}

/// Largest squarefree divisor s(n).
pub fn sqfree_core(n: u64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Domain("s(n) needs n >= 1".into()));
    }
    Ok(factorize(n).into_iter().map(|(p, _)| p).product())
}

/// γ(n) = φ(s(n)²).
pub fn gamma(n: u64) -> Result<u64> {
    let s = sqfree_core(n)?;
    let sq = s.checked_mul(s).ok_or_else(|| Error::Domain(format!("s({n})² overflows")))?;
    Ok(euler_phi(sq))
}

/// ã(p^j) from ã(p) by ã(p^j) = ã(p^{j−1})ã(p) − ã(p^{j−2}).
pub fn hecke_normalized(a_tilde: f64, j: u32) -> f64 {
    let (mut prev, mut cur) = (1.0, a_tilde);
    if j == 0 {
        return 1.0;
    }
    for _ in 1..j {
        (prev, cur) = (cur, cur * a_tilde - prev);
    }
    cur
}

/// (r−1)!! for even r, 0 for odd r.
pub fn gaussian_moment(r: u32) -> u128 {
    if r % 2 == 1 {
        return 0;
    }
    (1..r).step_by(2).map(|k| k as u128).product()
}

pub const DEFAULT_S_AVG_CAP: u64 = 10_000_000;

/// S(n) = s(n)^{−2} Σ_{a,b mod s(n), gcd(Δ(a,b), n) = 1} a_{E(a,b)}(n)/√n.
pub fn s_avg(n: u64, cap: u64) -> Result<f64> {
    let s = sqfree_core(n)?;
    if n == 1 {
        return Ok(1.0);
    }
    let size = s as u128 * s as u128;
    if size > cap as u128 {
        return Err(Error::CapExceeded { what: "s(n)^2", size, cap: cap as u128 });
    }
    let fac = factorize(n);
    if fac[0].0 == 2 {
        // Δ = −16(4a³ + 27b²) is always even.
        return Ok(0.0);
    }
    // Per prime: ã(p^e) on F_p², or None where the reduction is singular.
    let tables: Vec<(u64, Vec<Option<f64>>)> = fac
        .iter()
        .map(|&(p, e)| {
            let chi = QuadraticCharacter::new(p);
            let sp = (p as f64).sqrt();
            let mut t = Vec::with_capacity((p * p) as usize);
            for a in 0..p {
                for b in 0..p {
                    t.push(chi.trace_checked(a, b).map(|ap| hecke_normalized(ap as f64 / sp, e)));
                }
            }
            (p, t)
        })
        .collect();
    let mut acc = CompensatedSum::new();
    for a in 0..s {
        for b in 0..s {
            let mut v = 1.0;
            for (p, t) in &tables {
                match t[((a % p) * p + b % p) as usize] {
                    Some(x) => v *= x,
                    None => {
                        v = 0.0;
                        break;
                    }
                }
            }
            acc.add(v);
        }
    }
    Ok(acc.value() / size as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoeffMap {
    Identity,
    Poly(Poly),
    /// (αn + β)γⁿ, rational for n < 0.
    Exponential { alpha: i64, beta: i64, gamma: i64 },
}

impl CoeffMap {
    pub fn exponential(alpha: i64, beta: i64, gamma: i64) -> Result<Self> {
        if alpha == 0 || gamma == 0 {
            return Err(Error::Domain("exponential coefficient map needs α ≠ 0 and γ ≠ 0".into()));
        }
        Ok(CoeffMap::Exponential { alpha, beta, gamma })
    }

    pub fn apply(&self, n: i64) -> BigRational {
        match self {
            CoeffMap::Identity => BigRational::from_integer(n.into()),
            CoeffMap::Poly(q) => q.eval(&BigRational::from_integer(n.into())),
            CoeffMap::Exponential { alpha, beta, gamma } => {
                let lin = BigInt::from(*alpha as i128 * n as i128 + *beta as i128);
                let g = num_traits::pow(BigInt::from(*gamma), n.unsigned_abs() as usize);
                if n >= 0 {
                    BigRational::from_integer(lin * g)
                } else {
                    BigRational::new(lin, g)
                }
            }
        }
    }
}

impl FromStr for CoeffMap {
    type Err = Error;

    /// `identity`, `poly:<expr in Z>` or `exp:α,β,γ`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "identity" {
            return Ok(CoeffMap::Identity);
        }
        if let Some(rest) = s.strip_prefix("poly:") {
            return Ok(CoeffMap::Poly(Poly::parse(rest)?));
        }
        if let Some(rest) = s.strip_prefix("exp:") {
            let parts: Vec<i64> = rest
                .split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|e| Error::Parse(format!("{x:?}: {e}"))))
                .collect::<Result<_>>()?;
            if let [a, b, g] = parts[..] {
                return CoeffMap::exponential(a, b, g);
            }
            return Err(Error::Parse(format!("exp map needs three integers, got {rest:?}")));
        }
        Err(Error::Parse(format!("unknown coefficient map {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PrimeSet {
    All,
    Congruence(CongruenceClass),
    Explicit(Vec<u64>),
}

impl PrimeSet {
    /// P_x in increasing order.
    pub fn primes(&self, x: u64) -> Vec<u64> {
        match self {
            PrimeSet::All => primes_up_to(x),
            PrimeSet::Congruence(cc) => primes_up_to(x).into_iter().filter(|&p| cc.contains(p)).collect(),
            PrimeSet::Explicit(ps) => {
                let mut v: Vec<u64> = ps.iter().copied().filter(|&p| p <= x && crate::arith::is_prime(p)).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairFamilySpec {
    pub phi: CoeffMap,
    pub psi: CoeffMap,
    pub a_bound: u64,
    pub b_bound: u64,
    pub primes: PrimeSet,
}

/// A curve y² = x³ + ax + b of the box, with its box position.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxCurve {
    pub m: i64,
    pub n: i64,
    pub a: BigRational,
    pub b: BigRational,
}

impl BoxCurve {
    pub fn j_invariant(&self) -> BigRational {
        crate::families::j_invariant(&self.a, &self.b).expect("box curves are nonsingular")
    }
}

/// Nonsingular curves E(φ(m), ψ(n)) for |m| <= A, |n| <= B, and the number
/// of singular ones dropped.
pub fn box_curves(spec: &PairFamilySpec) -> (Vec<BoxCurve>, u64) {
    let (ab, bb) = (spec.a_bound as i64, spec.b_bound as i64);
    let mut out = Vec::new();
    let mut singular = 0;
    for m in -ab..=ab {
        let a = spec.phi.apply(m);
        for n in -bb..=bb {
            let b = spec.psi.apply(n);
            let four_a3: BigRational = BigRational::from_integer(4.into()) * &a * &a * &a;
            let d = four_a3 + BigRational::from_integer(27.into()) * &b * &b;
            if d.is_zero() {
                singular += 1;
            } else {
                out.push(BoxCurve { m, n, a: a.clone(), b });
            }
        }
    }
    (out, singular)
}

fn is_rational_kth_power(r: &BigRational, k: u32) -> bool {
    if r.is_negative() {
        return false;
    }
    let perfect = |n: &BigInt| {
        let root = n.nth_root(k);
        num_traits::pow(root, k as usize) == *n
    };
    perfect(r.numer()) && perfect(r.denom())
}

/// E(a₁,b₁) ≅ E(a₂,b₂) over ℚ: a₂ = u⁴a₁ and b₂ = u⁶b₁ for some u ∈ ℚ*.
pub fn isomorphic(a1: &BigRational, b1: &BigRational, a2: &BigRational, b2: &BigRational) -> bool {
    if a1.is_zero() != a2.is_zero() || b1.is_zero() != b2.is_zero() {
        return false;
    }
    match (a1.is_zero(), b1.is_zero()) {
        (true, true) => true,
        (false, true) => is_rational_kth_power(&(a2 / a1), 4),
        (true, false) => is_rational_kth_power(&(b2 / b1), 6),
        (false, false) => {
            let u2 = (a1 * b2) / (a2 * b1);
            is_rational_kth_power(&u2, 2) && &u2 * &u2 == a2 / a1 && &u2 * &u2 * &u2 == b2 / b1
        }
    }
}

/// Unordered index pairs {i < j} of isomorphic box curves, grouped by j first.
pub fn isomorphic_pairs(curves: &[BoxCurve]) -> Vec<(usize, usize)> {
    let mut by_j: BTreeMap<BigRational, Vec<usize>> = BTreeMap::new();
    for (i, c) in curves.iter().enumerate() {
        by_j.entry(c.j_invariant()).or_default().push(i);
    }
    let mut out = Vec::new();
    for group in by_j.values() {
        for (x, &i) in group.iter().enumerate() {
            for &j in &group[x + 1..] {
                if isomorphic(&curves[i].a, &curves[i].b, &curves[j].a, &curves[j].b) {
                    out.push((i.min(j), i.max(j)));
                }
            }
        }
    }
    out.sort_unstable();
    out
}

fn residue_big(r: &BigRational, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let den = r.denom().mod_floor(&pb).to_u64().unwrap();
    if den == 0 {
        return None;
    }
    let num = r.numer().mod_floor(&pb).to_u64().unwrap();
    Some(crate::arith::mul_mod(num, crate::arith::inv_mod(den, p)?, p))
}

/// ã_E(p) = a_p/√p for each p in `primes`; 0 at p = 2 and wherever the model
/// has a p in a denominator or is singular mod p.
pub fn normalized_traces(c: &BoxCurve, primes: &[u64], chars: &[Option<QuadraticCharacter>]) -> Vec<f64> {
    primes
        .iter()
        .zip(chars)
        .map(|(&p, chi)| {
            let Some(chi) = chi else { return 0.0 };
            match (residue_big(&c.a, p), residue_big(&c.b, p)) {
                (Some(a), Some(b)) if discriminant_mod(a, b, p) != 0 => chi.trace(a, b) as f64 / (p as f64).sqrt(),
                _ => 0.0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MomentMethod {
    PerPair,
    PowerSum,
    /// Power sums when r_max <= 2, else per pair.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub x: u64,
    pub r: Vec<u32>,
    pub v: Vec<f64>,
    pub gaussian_target: Vec<u128>,
    pub pair_count: u64,
    pub excluded_isomorphic: u64,
    pub excluded_singular: u64,
    pub curves: u64,
    pub primes_used: u64,
    pub method: MomentMethod,
}

pub const DEFAULT_MOMENT_BUDGET: u128 = 20_000_000_000;

pub struct TraceMatrix {
    pub curves: Vec<BoxCurve>,
    pub excluded_singular: u64,
    pub primes: Vec<u64>,
    /// rows[i][k] = ã_{E_i}(p_k).
    pub rows: Vec<Vec<f64>>,
    pub iso_pairs: Vec<(usize, usize)>,
}

pub fn trace_matrix(spec: &PairFamilySpec, x: u64) -> Result<TraceMatrix> {
    let primes = spec.primes.primes(x);
    if primes.is_empty() {
        return Err(Error::Precondition(format!("π_P({x}) = 0")));
    }
    let (curves, excluded_singular) = box_curves(spec);
    let chars: Vec<Option<QuadraticCharacter>> = primes.iter().map(|&p| (p > 2).then(|| QuadraticCharacter::new(p))).collect();
    let rows: Vec<Vec<f64>> = curves.par_iter().map(|c| normalized_traces(c, &primes, &chars)).collect();
    let iso_pairs = isomorphic_pairs(&curves);
    Ok(TraceMatrix { curves, excluded_singular, primes, rows, iso_pairs })
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (a, b) in u.iter().zip(v) {
        acc.add(a * b);
    }
    acc.value()
}

/// V_{x,r} for r = 1..=r_max over ordered pairs of distinct, non-isomorphic
/// curves in the box.
pub fn moments(spec: &PairFamilySpec, x: u64, r_max: u32, method: MomentMethod, budget: u128) -> Result<MomentReport> {
    if r_max == 0 {
        return Err(Error::Domain("r_max must be at least 1".into()));
    }
    let tm = trace_matrix(spec, x)?;
    let n = tm.curves.len() as u128;
    let work = n * n * tm.primes.len() as u128;
    let method = match method {
        MomentMethod::Auto if r_max <= 2 => MomentMethod::PowerSum,
        MomentMethod::Auto => MomentMethod::PerPair,
        m => m,
    };
    if method == MomentMethod::PowerSum && r_max > 2 {
        return Err(Error::Precondition("power-sum collapse covers r <= 2 only".into()));
    }
    if method == MomentMethod::PerPair && work > budget {
        return Err(Error::CapExceeded { what: "pair-moment work", size: work, cap: budget });
    }
    let iso_ordered = 2 * tm.iso_pairs.len() as u64;
    let pairs = (n * n.saturating_sub(1)) as u64 - iso_ordered;
    if pairs == 0 {
        return Err(Error::Precondition("no admissible curve pairs".into()));
    }
    let norm = (tm.primes.len() as f64).sqrt();
    let sums = match method {
        MomentMethod::PerPair => per_pair_sums(&tm, r_max, norm),
        _ => power_sum_sums(&tm, r_max, norm),
    };
    let r: Vec<u32> = (1..=r_max).collect();
    Ok(MomentReport {
        x,
        gaussian_target: r.iter().map(|&k| gaussian_moment(k)).collect(),
        r,
        v: sums.iter().map(|s| s / pairs as f64).collect(),
        pair_count: pairs,
        excluded_isomorphic: iso_ordered,
        excluded_singular: tm.excluded_singular,
        curves: tm.curves.len() as u64,
        primes_used: tm.primes.len() as u64,
        method,
    })
}

fn per_pair_sums(tm: &TraceMatrix, r_max: u32, norm: f64) -> Vec<f64> {
    let mut iso: Vec<Vec<usize>> = vec![Vec::new(); tm.rows.len()];
    for &(i, j) in &tm.iso_pairs {
        iso[i].push(j);
        iso[j].push(i);
    }
    let per_row: Vec<Vec<f64>> = (0..tm.rows.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![CompensatedSum::new(); r_max as usize];
            for j in 0..tm.rows.len() {
                if i == j || iso[i].contains(&j) {
                    continue;
                }
                let s = dot(&tm.rows[i], &tm.rows[j]) / norm;
                let mut pw = 1.0;
                for a in acc.iter_mut() {
                    pw *= s;
                    a.add(pw);
                }
            }
            acc.iter().map(|a| a.value()).collect()
        })
        .collect();
    (0..r_max as usize)
        .map(|r| {
            let mut acc = CompensatedSum::new();
            for row in &per_row {
                acc.add(row[r]);
            }
            acc.value()
        })
        .collect()
}

/// Σ_{i≠j} G_ij and Σ_{i≠j} G_ij² from column sums and the prime-by-prime
/// Gram matrix MᵀM, minus the diagonal and the isomorphic pairs.
fn power_sum_sums(tm: &TraceMatrix, r_max: u32, norm: f64) -> Vec<f64> {
    let k = tm.primes.len();
    let g = |i: usize, j: usize| dot(&tm.rows[i], &tm.rows[j]) / norm;
    let diag: Vec<f64> = (0..tm.rows.len()).map(|i| g(i, i)).collect();
    let iso: Vec<f64> = tm.iso_pairs.iter().map(|&(i, j)| g(i, j)).collect();

    let col: Vec<f64> = (0..k)
        .map(|c| {
            let mut acc = CompensatedSum::new();
            for row in &tm.rows {
                acc.add(row[c]);
            }
            acc.value()
        })
        .collect();
    let mut first = CompensatedSum::new();
    for c in &col {
        first.add(c * c / norm);
    }
    for d in &diag {
        first.add(-d);
    }
    for v in &iso {
        first.add(-2.0 * v);
    }
    let mut out = vec![first.value()];
    if r_max >= 2 {
        let gram: Vec<Vec<f64>> = (0..k)
            .into_par_iter()
            .map(|c| {
                (0..k)
                    .map(|d| {
                        let mut acc = CompensatedSum::new();
                        for row in &tm.rows {
                            acc.add(row[c] * row[d]);
                        }
                        acc.value()
                    })
                    .collect()
            })
            .collect();
        let mut second = CompensatedSum::new();
        for row in &gram {
            for v in row {
                second.add(v * v / (norm * norm));
            }
        }
        for d in &diag {
            second.add(-d * d);
        }
        for v in &iso {
            second.add(-2.0 * v * v);
        }
        out.push(second.value());
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueTable {
    pub forms: Vec<String>,
    pub values: BTreeMap<(usize, u64), f64>,
}

#[derive(serde::Deserialize)]
struct EigenRow {
    form_label: String,
    p: u64,
    lambda_normalized: f64,
}

impl EigenvalueTable {
    /// CSV with header `form_label,p,lambda_normalized`; forms keep first-seen order.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut forms: Vec<String> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut values = BTreeMap::new();
        for (line, row) in rdr.deserialize::<EigenRow>().enumerate() {
            let row = row.map_err(|e| Error::Parse(format!("eigenvalue row {}: {e}", line + 2)))?;
            if !row.lambda_normalized.is_finite() || row.lambda_normalized.abs() > 2.0 {
                return Err(Error::DeligneBound { form: row.form_label, p: row.p, value: row.lambda_normalized });
            }
            let next = forms.len();
            let idx = *index.entry(row.form_label.clone()).or_insert_with(|| {
                forms.push(row.form_label.clone());
                next
            });
            if values.insert((idx, row.p), row.lambda_normalized).is_some() {
                return Err(Error::Parse(format!("duplicate row for {} at p = {}", row.form_label, row.p)));
            }
        }
        Ok(EigenvalueTable { forms, values })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_csv(std::fs::File::open(path)?)
    }
}

/// Moments of Σ_{p∈P_x} λ_f(p)λ_g(p)/√π_P(x) over ordered pairs of distinct forms.
pub fn moments_from_eigen_table(table: &EigenvalueTable, primes: &PrimeSet, x: u64, r_max: u32) -> Result<MomentReport> {
    if table.forms.len() < 2 {
        return Err(Error::Precondition("need at least two forms for distinct pairs".into()));
    }
    if r_max == 0 {
        return Err(Error::Domain("r_max must be at least 1".into()));
    }
    let ps = primes.primes(x);
    if ps.is_empty() {
        return Err(Error::Precondition(format!("π_P({x}) = 0")));
    }
    let rows: Vec<Vec<f64>> = table
        .forms
        .iter()
        .enumerate()
        .map(|(i, f)| {
            ps.iter()
                .map(|&p| table.values.get(&(i, p)).copied().ok_or_else(|| Error::MissingEigenvalue { form: f.clone(), p }))
                .collect()
        })
        .collect::<Result<_>>()?;
    let tm = TraceMatrix { curves: Vec::new(), excluded_singular: 0, primes: ps, rows, iso_pairs: Vec::new() };
    let sums = per_pair_sums(&tm, r_max, (tm.primes.len() as f64).sqrt());
    let n = tm.rows.len() as u64;
    let pairs = n * (n - 1);
    let r: Vec<u32> = (1..=r_max).collect();
    Ok(MomentReport {
        x,
        gaussian_target: r.iter().map(|&k| gaussian_moment(k)).collect(),
        r,
        v: sums.iter().map(|s| s / pairs as f64).collect(),
        pair_count: pairs,
        excluded_isomorphic: 0,
        excluded_singular: 0,
        curves: n,
        primes_used: tm.primes.len() as u64,
        method: MomentMethod::PerPair,
    })
}
