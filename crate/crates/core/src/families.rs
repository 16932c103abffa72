//! Curve families E(Z): Y² = X³ + f(Z)X + g(Z), exponential j-families,
//! argument multisets S(T) with their residue profiles, and permutation
//! tests for polynomials and rational functions over F_p.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{inv_mod, is_prime, mul_mod, pow_mod, reduce};
use crate::error::{Error, Result};
use crate::ffcurve::{discriminant_mod, QuadraticCharacter, TraceEntry};
use crate::poly::{horner_mod, Poly};

pub const DEFAULT_SIZE_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveFamily {
    f: Poly,
    g: Poly,
    delta: Poly,
    j_num: Poly,
    j_den: Poly,
    bad_prime_bound: u64,
}

impl CurveFamily {
    /// Builds the family, its discriminant, reduced j = q/r and the bound x₀.
    /// A constant j-invariant is accepted and reported by `j_is_constant`.
    pub fn new(f: Poly, g: Poly) -> Result<Self> {
        let f3 = f.pow(3);
        let r0 = f3.scale(&BigInt::from(4)).add(&g.pow(2).scale(&BigInt::from(27)));
        if r0.is_zero() {
            return Err(Error::Domain("discriminant of the family is identically zero".into()));
        }
        let delta = r0.scale(&BigInt::from(-16));
        let q0 = f3.scale(&BigInt::from(6912));
        let (mut q, mut r) = if q0.is_zero() {
            (Poly::zero(), Poly::constant(1))
        } else {
            let d = q0.gcd(&r0);
            (q0.div_exact(&d)?, r0.div_exact(&d)?)
        };
        let c = q.content().gcd(&r.content());
        if !c.is_zero() && !c.is_one() {
            q = Poly::new(q.coeffs().iter().map(|x| x / &c).collect());
            r = Poly::new(r.coeffs().iter().map(|x| x / &c).collect());
        }
        if r.leading().is_negative() {
            let m1 = BigInt::from(-1);
            q = q.scale(&m1);
            r = r.scale(&m1);
        }
        let mut bad = vec![BigInt::from(6), delta.leading().abs(), r.leading().abs()];
        if !q.is_zero() {
            bad.push(q.leading().abs());
            if q.degree_or_zero() + r.degree_or_zero() > 0 {
                bad.push(q.resultant(&r).abs());
            }
        }
        let bad_prime_bound = bad.iter().map(largest_prime_factor_bound).max().unwrap_or(3);
        Ok(CurveFamily { f, g, delta, j_num: q, j_den: r, bad_prime_bound })
    }

    pub fn parse(f: &str, g: &str) -> Result<Self> {
        CurveFamily::new(Poly::parse(f)?, Poly::parse(g)?)
    }

    pub fn f(&self) -> &Poly {
        &self.f
    }

    pub fn g(&self) -> &Poly {
        &self.g
    }

    pub fn discriminant(&self) -> &Poly {
        &self.delta
    }

    /// Reduced j(Z) = q/r with gcd(q, r) = 1 and r of positive leading coefficient.
    pub fn j_function(&self) -> (&Poly, &Poly) {
        (&self.j_num, &self.j_den)
    }

    pub fn degj(&self) -> usize {
        self.j_num.degree_or_zero().max(self.j_den.degree_or_zero())
    }

    pub fn j_is_constant(&self) -> bool {
        self.degj() == 0
    }

    /// x₀: every prime above it keeps q, r coprime with their leading
    /// coefficients and Δ's leading coefficient invertible.
    pub fn bad_prime_bound(&self) -> u64 {
        self.bad_prime_bound
    }

    pub fn coeffs_at(&self, t: &Rational) -> (BigRational, BigRational) {
        let t = t.to_big();
        (self.f.eval(&t), self.g.eval(&t))
    }

    pub fn is_singular_at(&self, t: &Rational) -> bool {
        self.delta.eval(&t.to_big()).is_zero()
    }

    /// j(E(t)), or `None` when Δ(t) = 0.
    pub fn j_at(&self, t: &Rational) -> Option<BigRational> {
        let (a, b) = self.coeffs_at(t);
        j_invariant(&a, &b)
    }

    pub fn reduce_mod(&self, p: u64) -> FamilyModP {
        FamilyModP { p, f: self.f.reduce_mod(p), g: self.g.reduce_mod(p) }
    }

    /// Trace of E(t) at p from its p-minimal short Weierstrass model;
    /// `Singular` when that model is singular mod p (always so at p = 2).
    pub fn element_entry(&self, t: &Rational, p: u64, chi: Option<&QuadraticCharacter>) -> TraceEntry {
        let (a, b) = self.coeffs_at(t);
        minimal_model_entry(&a, &b, p, chi)
    }
}

impl fmt::Display for CurveFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f={};g={}", self.f, self.g)
    }
}

/// 6912 a³ / (4a³ + 27b²), or `None` for a singular pair.
pub fn j_invariant(a: &BigRational, b: &BigRational) -> Option<BigRational> {
    let a3 = a * a * a;
    let den = &a3 * BigRational::from_integer(4.into()) + b * b * BigRational::from_integer(27.into());
    if den.is_zero() {
        None
    } else {
        Some(a3 * BigRational::from_integer(6912.into()) / den)
    }
}

fn bigint_valuation(n: &BigInt, p: u64) -> u32 {
    let p = BigInt::from(p);
    let mut n = n.clone();
    let mut v = 0;
    while !n.is_zero() && (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    v
}

fn rational_valuation(x: &BigRational, p: u64) -> Option<i64> {
    if x.is_zero() {
        None
    } else {
        Some(bigint_valuation(x.numer(), p) as i64 - bigint_valuation(x.denom(), p) as i64)
    }
}

/// Unit part of `x · p^shift` reduced mod p, where `v_p(x) + shift >= 0`.
fn scaled_residue(x: &BigRational, v: i64, shift: i64, p: u64) -> u64 {
    if v + shift > 0 {
        return 0;
    }
    let pb = BigInt::from(p);
    let strip = |n: &BigInt| {
        let mut n = n.clone();
        while (&n % &pb).is_zero() {
            n /= &pb;
        }
        n.mod_floor(&pb).to_u64().expect("residue fits")
    };
    let num = strip(x.numer());
    let den = strip(x.denom());
    mul_mod(num, inv_mod(den, p).expect("unit"), p)
}

/// Reduce (a, b) to its p-minimal model and return its trace or `Singular`.
pub fn minimal_model_entry(a: &BigRational, b: &BigRational, p: u64, chi: Option<&QuadraticCharacter>) -> TraceEntry {
    if p == 2 {
        return TraceEntry::Singular;
    }
    let va = rational_valuation(a, p);
    let vb = rational_valuation(b, p);
    let e = match (va, vb) {
        (None, None) => return TraceEntry::Singular,
        (Some(x), None) => Integer::div_ceil(&-x, &4),
        (None, Some(y)) => Integer::div_ceil(&-y, &6),
        (Some(x), Some(y)) => Integer::div_ceil(&-x, &4).max(Integer::div_ceil(&-y, &6)),
    };
    let ar = va.map_or(0, |v| scaled_residue(a, v, 4 * e, p));
    let br = vb.map_or(0, |v| scaled_residue(b, v, 6 * e, p));
    if discriminant_mod(ar, br, p) == 0 {
        return TraceEntry::Singular;
    }
    let owned;
    let chi = match chi {
        Some(c) => c,
        None => {
            owned = QuadraticCharacter::new(p);
            &owned
        }
    };
    TraceEntry::Trace(chi.trace(ar, br))
}

fn largest_prime_factor_bound(n: &BigInt) -> u64 {
    let mut n = n.abs();
    if n.is_zero() {
        return 0;
    }
    let mut largest = 1u64;
    let mut q = 2u64;
    while q <= 1_000_000 && n > BigInt::one() {
        let qb = BigInt::from(q);
        if BigInt::from(q) * BigInt::from(q) > n {
            break;
        }
        if (&n % &qb).is_zero() {
            largest = q;
            while (&n % &qb).is_zero() {
                n /= &qb;
            }
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if n > BigInt::one() {
        // Remaining cofactor is prime or has only large factors; it bounds them.
        largest = largest.max(n.to_u64().unwrap_or(u64::MAX));
    }
    largest
}

/// A family reduced modulo a prime, for repeated evaluation at residues.
#[derive(Debug, Clone)]
pub struct FamilyModP {
    pub p: u64,
    pub f: Vec<u64>,
    pub g: Vec<u64>,
}

impl FamilyModP {
    pub fn coeffs(&self, w: u64) -> (u64, u64) {
        (horner_mod(&self.f, w, self.p), horner_mod(&self.g, w, self.p))
    }

    pub fn entry(&self, w: u64, chi: &QuadraticCharacter) -> TraceEntry {
        let (a, b) = self.coeffs(w);
        match chi.trace_checked(a, b) {
            Some(t) => TraceEntry::Trace(t),
            None => TraceEntry::Singular,
        }
    }
}

/// j*(Z) = Z·b^Z with f = −3 j*ⁿ (j*−1728)ᵐ h², g = 2 j*^{(3n−1)/2} (j*−1728)^{(3m+1)/2} h³.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentialFamily {
    pub h: Poly,
    pub m: u32,
    pub n: u32,
    pub b: i64,
}

impl ExponentialFamily {
    pub fn new(h: Poly, m: u32, n: u32, b: i64) -> Result<Self> {
        if m.is_multiple_of(2) || n.is_multiple_of(2) {
            return Err(Error::Domain(format!("m = {m} and n = {n} must both be odd")));
        }
        if b == 0 {
            return Err(Error::Domain("b must be nonzero".into()));
        }
        if h.is_zero() {
            return Err(Error::Domain("h must be nonzero".into()));
        }
        Ok(ExponentialFamily { h, m, n, b })
    }

    /// Primes at or below 6|b| are outside the lemma's range.
    pub fn bad_prime_bound(&self) -> u64 {
        6 * self.b.unsigned_abs()
    }

    pub fn is_bad_prime(&self, p: u64) -> bool {
        (6 * self.b.unsigned_abs()).is_multiple_of(p)
    }

    fn curve_from_jstar(&self, j: u64, hz: u64, p: u64) -> (u64, u64) {
        let jm = reduce(j as i128 - 1728, p);
        let h2 = mul_mod(hz, hz, p);
        let f = mul_mod(
            mul_mod(pow_mod(j, self.n as u64, p), pow_mod(jm, self.m as u64, p), p),
            h2,
            p,
        );
        let f = mul_mod(reduce(-3, p), f, p);
        let g = mul_mod(
            mul_mod(pow_mod(j, (3 * self.n as u64 - 1) / 2, p), pow_mod(jm, (3 * self.m as u64).div_ceil(2), p), p),
            mul_mod(h2, hz, p),
            p,
        );
        (f, mul_mod(2 % p, g, p))
    }

    /// Curve coefficients mod p at the residue w mod p(p−1).
    pub fn coeffs_at_residue(&self, w: u64, p: u64, h_mod: &[u64]) -> (u64, u64) {
        let z = w % p;
        let e = w % (p - 1);
        let j = mul_mod(z, pow_mod(reduce(self.b as i128, p), e, p), p);
        self.curve_from_jstar(j, horner_mod(h_mod, z, p), p)
    }

    /// Exact rational coefficients at an integer argument.
    pub fn coeffs_exact(&self, t: i64) -> (BigRational, BigRational) {
        let bb = BigRational::from_integer(self.b.into());
        let bt = if t >= 0 {
            num_traits::pow(bb, t as usize)
        } else {
            num_traits::pow(bb.recip(), t.unsigned_abs() as usize)
        };
        let tq = BigRational::from_integer(t.into());
        let j = tq.clone() * bt;
        let jm = &j - BigRational::from_integer(1728.into());
        let hz = self.h.eval(&tq);
        let f = BigRational::from_integer((-3).into())
            * num_traits::pow(j.clone(), self.n as usize)
            * num_traits::pow(jm.clone(), self.m as usize)
            * &hz
            * &hz;
        let g = BigRational::from_integer(2.into())
            * num_traits::pow(j, (3 * self.n as usize - 1) / 2)
            * num_traits::pow(jm, (3 * self.m as usize).div_ceil(2))
            * &hz
            * &hz
            * &hz;
        (f, g)
    }
}

/// Reduced fraction num/den with den >= 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Rational {
    pub num: i64,
    pub den: u64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        let g = num.gcd(&den);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        Ok(Rational { num: n, den: d as u64 })
    }

    pub fn integer(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn to_big(&self) -> BigRational {
        BigRational::new(self.num.into(), self.den.into())
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    /// u·v⁻¹ mod p, or `None` when p | v.
    pub fn residue(&self, p: u64) -> Option<u64> {
        if self.den.is_multiple_of(p) {
            return None;
        }
        let v = inv_mod(self.den % p, p)?;
        Some(mul_mod(reduce(self.num as i128, p), v, p))
    }

    fn checked_add(&self, o: &Rational) -> Result<Rational> {
        let num = self.num as i128 * o.den as i128 + o.num as i128 * self.den as i128;
        let den = self.den as i128 * o.den as i128;
        let g = num.gcd(&den);
        let (n, d) = (num / g, den / g);
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Rational::new(n, d),
            _ => Err(Error::Domain("sumset element overflows 64 bits".into())),
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.num as i128 * o.den as i128).cmp(&(o.num as i128 * self.den as i128))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// How an argument set is specified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgSpec {
    Integers(u64),
    Farey(u64),
    Sumset(Box<ArgSpec>, Box<ArgSpec>),
    Range(i64, i64),
    Explicit(Vec<(Rational, u64)>),
}

impl FromStr for ArgSpec {
    type Err = Error;

    /// `integers:T`, `farey:T`, `range:LO..HI`, `sumset(SPEC,SPEC)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |m: &str| Error::Parse(format!("argset {s:?}: {m}"));
        if let Some(inner) = s.strip_prefix("sumset(").and_then(|r| r.strip_suffix(')')) {
            let mut depth = 0;
            for (i, c) in inner.char_indices() {
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    ',' if depth == 0 => {
                        let u = inner[..i].parse()?;
                        let v = inner[i + 1..].parse()?;
                        return Ok(ArgSpec::Sumset(Box::new(u), Box::new(v)));
                    }
                    _ => {}
                }
            }
            return Err(bad("sumset needs two comma-separated operands"));
        }
        let (kind, arg) = s.split_once(':').ok_or_else(|| bad("expected KIND:PARAM"))?;
        match kind {
            "integers" => Ok(ArgSpec::Integers(arg.parse().map_err(|_| bad("T must be a positive integer"))?)),
            "farey" => Ok(ArgSpec::Farey(arg.parse().map_err(|_| bad("T must be a positive integer"))?)),
            "range" => {
                let (lo, hi) = arg.split_once("..").ok_or_else(|| bad("range needs LO..HI"))?;
                let lo = lo.parse().map_err(|_| bad("bad range start"))?;
                let hi = hi.parse().map_err(|_| bad("bad range end"))?;
                Ok(ArgSpec::Range(lo, hi))
            }
            _ => Err(bad("unknown kind")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ArgKind {
    Integers,
    Farey,
    Sumset,
    ExponentialRange,
    Explicit,
}

/// Finite multiset of reduced rationals, sorted, with multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArgumentSet {
    pub kind: ArgKind,
    pub size_param: u64,
    elements: Vec<(Rational, u64)>,
}

impl ArgumentSet {
    pub fn from_multiset(kind: ArgKind, size_param: u64, items: impl IntoIterator<Item = (Rational, u64)>) -> Self {
        let mut map: BTreeMap<Rational, u64> = BTreeMap::new();
        for (r, m) in items {
            if m > 0 {
                *map.entry(r).or_insert(0) += m;
            }
        }
        ArgumentSet { kind, size_param, elements: map.into_iter().collect() }
    }

    /// Distinct elements with multiplicities, ascending.
    pub fn elements(&self) -> &[(Rational, u64)] {
        &self.elements
    }

    pub fn cardinality(&self) -> u64 {
        self.elements.iter().map(|(_, m)| m).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Loads "numerator,denominator,multiplicity" rows.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_reader(reader);
        let mut items = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("argset csv row {}: {e}", line + 1)))?;
            let field = |i: usize| -> Result<i64> {
                rec.get(i)
                    .ok_or_else(|| Error::Parse(format!("argset csv row {}: missing column {}", line + 1, i + 1)))?
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("argset csv row {}: column {} is not an integer", line + 1, i + 1)))
            };
            if rec.len() == 3 && rec.get(0).is_some_and(|s| s.trim() == "numerator") {
                continue;
            }
            let m = field(2)?;
            if m < 0 {
                return Err(Error::Parse(format!("argset csv row {}: negative multiplicity", line + 1)));
            }
            items.push((Rational::new(field(0)?, field(1)?)?, m as u64));
        }
        Ok(ArgumentSet::from_multiset(ArgKind::Explicit, items.len() as u64, items))
    }
}

fn check_cap(what: &'static str, size: u128, cap: u64) -> Result<()> {
    if size > cap as u128 {
        Err(Error::CapExceeded { what, size, cap: cap as u128 })
    } else {
        Ok(())
    }
}

pub fn build_argset(spec: &ArgSpec, cap: u64) -> Result<ArgumentSet> {
    match spec {
        ArgSpec::Integers(t) => {
            if *t < 1 {
                return Err(Error::Domain("T must be at least 1".into()));
            }
            check_cap("integer argument set", *t as u128, cap)?;
            Ok(ArgumentSet::from_multiset(
                ArgKind::Integers,
                *t,
                (1..=*t as i64).map(|n| (Rational::integer(n), 1)),
            ))
        }
        ArgSpec::Farey(t) => {
            if *t < 1 {
                return Err(Error::Domain("T must be at least 1".into()));
            }
            check_cap("Farey argument set", (*t as u128).pow(2), cap)?;
            let t = *t as i64;
            let items = (1..=t)
                .flat_map(|v| (1..=t).filter(move |u| u.gcd(&v) == 1).map(move |u| (Rational { num: u, den: v as u64 }, 1)));
            Ok(ArgumentSet::from_multiset(ArgKind::Farey, t as u64, items))
        }
        ArgSpec::Range(lo, hi) => {
            if hi < lo {
                return Err(Error::Domain(format!("empty range {lo}..{hi}")));
            }
            check_cap("range argument set", (*hi as i128 - *lo as i128 + 1) as u128, cap)?;
            Ok(ArgumentSet::from_multiset(
                ArgKind::ExponentialRange,
                (*hi - *lo + 1) as u64,
                (*lo..=*hi).map(|n| (Rational::integer(n), 1)),
            ))
        }
        ArgSpec::Explicit(items) => {
            check_cap("explicit argument set", items.len() as u128, cap)?;
            Ok(ArgumentSet::from_multiset(ArgKind::Explicit, items.len() as u64, items.iter().copied()))
        }
        ArgSpec::Sumset(u, v) => {
            let u = build_argset(u, cap)?;
            let v = build_argset(v, cap)?;
            sumset(&u, &v, cap)
        }
    }
}

/// Multiset sum: the multiplicity of c is Σ_{a+b=c} m_U(a) m_V(b).
pub fn sumset(u: &ArgumentSet, v: &ArgumentSet, cap: u64) -> Result<ArgumentSet> {
    check_cap("sumset pair enumeration", u.elements.len() as u128 * v.elements.len() as u128, cap)?;
    let mut items = Vec::with_capacity(u.elements.len() * v.elements.len());
    for (a, ma) in &u.elements {
        for (b, mb) in &v.elements {
            items.push((a.checked_add(b)?, ma * mb));
        }
    }
    let size = u.size_param.max(v.size_param);
    Ok(ArgumentSet::from_multiset(ArgKind::Sumset, size, items))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResidueProfile {
    pub p: u64,
    pub counts: Vec<u64>,
    pub dropped_denominators: u64,
}

/// Occupied residues only, ascending in w, plus the dropped count.
pub fn residue_profile_sparse(s: &ArgumentSet, p: u64) -> (Vec<(u64, u64)>, u64) {
    let mut occupied: BTreeMap<u64, u64> = BTreeMap::new();
    let mut dropped = 0;
    for (r, m) in &s.elements {
        match r.residue(p) {
            Some(w) => *occupied.entry(w).or_insert(0) += m,
            None => dropped += m,
        }
    }
    (occupied.into_iter().collect(), dropped)
}

/// R(w) = #{u/v ∈ S : p ∤ v, u ≡ vw mod p} with multiplicity.
pub fn residue_profile(s: &ArgumentSet, p: u64) -> Result<ResidueProfile> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    let (occupied, dropped) = residue_profile_sparse(s, p);
    let mut counts = vec![0u64; p as usize];
    for (w, c) in occupied {
        counts[w as usize] = c;
    }
    Ok(ResidueProfile { p, counts, dropped_denominators: dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FareyDeviation {
    pub t: u64,
    pub p: u64,
    /// max_w |R(w) − (6/π²)T²/p|
    pub deviation: f64,
    /// T log T + T²/p², the shape of the error term.
    pub scale: f64,
    pub ratio: f64,
}

pub fn farey_r_deviation(t: u64, p: u64) -> Result<FareyDeviation> {
    if t < 2 {
        return Err(Error::Domain("T must be at least 2".into()));
    }
    let s = build_argset(&ArgSpec::Farey(t), DEFAULT_SIZE_CAP)?;
    let prof = residue_profile(&s, p)?;
    let expected = 6.0 / std::f64::consts::PI.powi(2) * (t * t) as f64 / p as f64;
    let deviation = prof.counts.iter().map(|&c| (c as f64 - expected).abs()).fold(0.0, f64::max);
    let tf = t as f64;
    let scale = tf * tf.ln() + tf * tf / (p as f64 * p as f64);
    Ok(FareyDeviation { t, p, deviation, scale, ratio: deviation / scale })
}

/// True iff w ↦ q(w) is a bijection of F_p.
pub fn is_permutation_poly(q: &Poly, p: u64) -> bool {
    let qm = q.reduce_mod(p);
    let mut seen = vec![false; p as usize];
    for w in 0..p {
        let y = horner_mod(&qm, w, p) as usize;
        if seen[y] {
            return false;
        }
        seen[y] = true;
    }
    true
}

/// True iff w ↦ q(w)/r(w) is injective on the non-poles of F_p.
pub fn is_near_permutation_rational(q: &Poly, r: &Poly, p: u64) -> Result<bool> {
    let qm = q.reduce_mod(p);
    let rm = r.reduce_mod(p);
    if rm.iter().all(|&c| c == 0) {
        return Err(Error::Precondition(format!("denominator vanishes identically mod {p}")));
    }
    let n = qm.len().max(rm.len());
    let at = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0);
    let proportional = (0..n).all(|i| (0..n).all(|k| mul_mod(at(&qm, i), at(&rm, k), p) == mul_mod(at(&qm, k), at(&rm, i), p)));
    if proportional {
        return Err(Error::Degenerate { p });
    }
    let mut seen = vec![false; p as usize];
    for w in 0..p {
        let den = horner_mod(&rm, w, p);
        if den == 0 {
            continue;
        }
        let y = mul_mod(horner_mod(&qm, w, p), inv_mod(den, p).expect("nonzero"), p) as usize;
        if seen[y] {
            return Ok(false);
        }
        seen[y] = true;
    }
    Ok(true)
}

/// R(w) = #{t ∈ S : t ≡ w mod p(p−1)} for integer sets.
pub fn exp_residue_profile(s: &ArgumentSet, b: i64, p: u64) -> Result<Vec<u64>> {
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    if (6 * b.unsigned_abs()).is_multiple_of(p) {
        return Err(Error::BadPrime { p, reason: format!("p divides 6b = {}", 6 * b) });
    }
    let modulus = p * (p - 1);
    let mut counts = vec![0u64; modulus as usize];
    for (r, m) in s.elements() {
        if !r.is_integer() {
            return Err(Error::Domain(format!("exponential families need integer arguments, got {r}")));
        }
        counts[reduce(r.num as i128, modulus) as usize] += m;
    }
    Ok(counts)
}
