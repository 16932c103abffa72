//! Lang–Trotter counters: single curves, family averages by residue
//! collapse, pairs, and exponential j-families.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{gcd, isqrt, primes_up_to, reduce};
use crate::classnum::HurwitzTable;
use crate::error::{Error, Result};
use crate::families::{residue_profile_sparse, ArgumentSet, CurveFamily, ExponentialFamily, Rational};
use crate::ffcurve::{discriminant_mod, is_cm_j, QuadraticCharacter, TraceEntry, TraceValue};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TraceSequence {
    Constant(i64),
    ExtremalPlus,
    ExtremalMinus,
    /// Either sign; a prime counts once.
    ExtremalBoth,
    Custom(BTreeMap<u64, i64>),
}

/// The target at one prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Target {
    One(i64),
    Either(i64, i64),
}

impl Target {
    #[inline]
    pub fn hits(self, t: TraceValue) -> bool {
        match self {
            Target::One(a) => t == a,
            Target::Either(a, b) => t == a || t == b,
        }
    }

    /// The absolute target, whose square enters H(4p − 𝔄(p)²).
    pub fn magnitude(self) -> u64 {
        match self {
            Target::One(a) | Target::Either(a, _) => a.unsigned_abs(),
        }
    }
}

pub fn seq_eval(seq: &TraceSequence, p: u64) -> Result<Target> {
    let e = isqrt(4 * p) as i64;
    Ok(match seq {
        TraceSequence::Constant(t) => Target::One(*t),
        TraceSequence::ExtremalPlus => Target::One(e),
        TraceSequence::ExtremalMinus => Target::One(-e),
        TraceSequence::ExtremalBoth => Target::Either(e, -e),
        TraceSequence::Custom(m) => Target::One(
            *m.get(&p)
                .ok_or_else(|| Error::Precondition(format!("custom trace sequence has no value at p = {p}")))?,
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CongruenceClass {
    pub upsilon: u64,
    pub omega: u64,
}

impl CongruenceClass {
    pub fn new(upsilon: i64, omega: u64) -> Result<Self> {
        if omega == 0 {
            return Err(Error::Domain("ω must be at least 1".into()));
        }
        let u = reduce(upsilon as i128, omega);
        if gcd(u, omega) != 1 && omega != 1 {
            return Err(Error::Domain(format!("gcd(υ, ω) = gcd({upsilon}, {omega}) must be 1")));
        }
        Ok(CongruenceClass { upsilon: u, omega })
    }

    pub fn all() -> Self {
        CongruenceClass { upsilon: 0, omega: 1 }
    }

    #[inline]
    pub fn contains(&self, p: u64) -> bool {
        p % self.omega == self.upsilon
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PrimeCount {
    pub p: u64,
    pub hits: u64,
    pub hits_cm: u64,
    pub bad: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub x: u64,
    pub total: u64,
    /// Hits attributable to CM arguments; excluded from `total` only when `cm_excluded`.
    pub excluded_cm: u64,
    pub cm_excluded: bool,
    /// (element, prime) incidences with bad reduction, never counted.
    pub excluded_singular: u64,
    /// Arguments with Δ(t) = 0 over Q.
    pub singular_arguments: u64,
    /// Primes outside the admissible range of the counter (exponential families).
    pub skipped_primes: u64,
    pub primes_used: u64,
    pub per_prime: Option<Vec<PrimeCount>>,
}

impl CountReport {
    fn from_tallies(x: u64, tallies: &[PrimeCount], exclude_cm: bool, singular_arguments: u64, skipped: u64) -> Self {
        let mut r = CountReport {
            x,
            total: 0,
            excluded_cm: 0,
            cm_excluded: exclude_cm,
            excluded_singular: 0,
            singular_arguments,
            skipped_primes: skipped,
            primes_used: 0,
            per_prime: None,
        };
        for t in tallies.iter().filter(|t| t.p <= x) {
            r.total += t.hits + if exclude_cm { 0 } else { t.hits_cm };
            r.excluded_cm += t.hits_cm;
            r.excluded_singular += t.bad;
            r.primes_used += 1;
        }
        r
    }

    pub fn with_breakdown(mut self, tallies: &[PrimeCount]) -> Self {
        self.per_prime = Some(tallies.iter().filter(|t| t.p <= self.x).copied().collect());
        self
    }
}

/// Per residue class of S at p: the entry of each family and the multiplicity.
/// Classes whose collapsed entry is singular, elements with p | v, and every
/// element when p is at or below a bad-prime bound are resolved directly.
fn collapse_entries(s: &ArgumentSet, fams: &[&CurveFamily], p: u64) -> Vec<(Vec<TraceEntry>, u64)> {
    if p == 2 {
        return vec![(vec![TraceEntry::Singular; fams.len()], s.cardinality())];
    }
    let chi = QuadraticCharacter::new(p);
    let direct = |t: &Rational| -> Vec<TraceEntry> { fams.iter().map(|f| f.element_entry(t, p, Some(&chi))).collect() };
    let bound = fams.iter().map(|f| f.bad_prime_bound()).max().unwrap_or(0);
    if p < 5 || p <= bound {
        return s.elements().iter().map(|(t, m)| (direct(t), *m)).collect();
    }
    let reduced: Vec<_> = fams.iter().map(|f| f.reduce_mod(p)).collect();
    let (occupied, dropped) = residue_profile_sparse(s, p);
    let mut out = Vec::with_capacity(occupied.len());
    let mut special: BTreeSet<u64> = BTreeSet::new();
    for (w, r) in occupied {
        let entries: Vec<TraceEntry> = reduced.iter().map(|f| f.entry(w, &chi)).collect();
        if entries.contains(&TraceEntry::Singular) {
            special.insert(w);
        } else {
            out.push((entries, r));
        }
    }
    if dropped > 0 || !special.is_empty() {
        for (t, m) in s.elements() {
            match t.residue(p) {
                Some(w) if !special.contains(&w) => {}
                _ => out.push((direct(t), *m)),
            }
        }
    }
    out
}

fn tally_one(s: &ArgumentSet, fam: &CurveFamily, target: Target, p: u64) -> (u64, u64) {
    let mut hits = 0;
    let mut bad = 0;
    for (e, m) in collapse_entries(s, &[fam], p) {
        match e[0] {
            TraceEntry::Trace(t) if target.hits(t) => hits += m,
            TraceEntry::Trace(_) => {}
            TraceEntry::Singular => bad += m,
        }
    }
    (hits, bad)
}

fn admissible_primes(x: u64, cc: &CongruenceClass) -> Vec<u64> {
    primes_up_to(x).into_iter().filter(|&p| cc.contains(p)).collect()
}

/// Split off arguments with Δ(t) = 0 and, separately, those with CM j(t).
fn split_arguments(s: &ArgumentSet, fam: &CurveFamily) -> (ArgumentSet, ArgumentSet, u64) {
    let mut regular = Vec::new();
    let mut cm = Vec::new();
    let mut singular = 0;
    for (t, m) in s.elements() {
        match fam.j_at(t) {
            None => singular += m,
            Some(j) if is_cm_j(&j) => cm.push((*t, *m)),
            Some(_) => regular.push((*t, *m)),
        }
    }
    (
        ArgumentSet::from_multiset(s.kind, s.size_param, regular),
        ArgumentSet::from_multiset(s.kind, s.size_param, cm),
        singular,
    )
}

/// Per-prime tallies for Σ_{t ∈ S, Δ(t) ≠ 0} π_{E(t)}(𝔄; x), ascending in p.
pub fn single_tallies(
    s: &ArgumentSet,
    fam: &CurveFamily,
    seq: &TraceSequence,
    x: u64,
    cc: &CongruenceClass,
) -> Result<(Vec<PrimeCount>, u64)> {
    let (regular, cm, singular) = split_arguments(s, fam);
    let primes = admissible_primes(x, cc);
    let targets: Vec<Target> = primes.iter().map(|&p| seq_eval(seq, p)).collect::<Result<_>>()?;
    let tallies = primes
        .par_iter()
        .zip(targets.par_iter())
        .map(|(&p, &target)| {
            let (hits, bad_r) = tally_one(&regular, fam, target, p);
            let (hits_cm, bad_c) = if cm.is_empty() { (0, 0) } else { tally_one(&cm, fam, target, p) };
            PrimeCount { p, hits, hits_cm, bad: bad_r + bad_c }
        })
        .collect();
    Ok((tallies, singular))
}

pub fn avg_single(
    s: &ArgumentSet,
    fam: &CurveFamily,
    seq: &TraceSequence,
    x: u64,
    cc: &CongruenceClass,
    exclude_cm: bool,
) -> Result<CountReport> {
    let (tallies, singular) = single_tallies(s, fam, seq, x, cc)?;
    Ok(CountReport::from_tallies(x, &tallies, exclude_cm, singular, 0).with_breakdown(&tallies))
}

/// One report per bound of an increasing grid, from a single pass at the largest bound.
pub fn avg_single_grid(
    s: &ArgumentSet,
    fam: &CurveFamily,
    seq: &TraceSequence,
    xs: &[u64],
    cc: &CongruenceClass,
    exclude_cm: bool,
) -> Result<Vec<CountReport>> {
    let xmax = xs.iter().copied().max().unwrap_or(0);
    let (tallies, singular) = single_tallies(s, fam, seq, xmax, cc)?;
    Ok(xs.iter().map(|&x| CountReport::from_tallies(x, &tallies, exclude_cm, singular, 0)).collect())
}

pub fn pi_single(t: Rational, fam: &CurveFamily, seq: &TraceSequence, x: u64, cc: &CongruenceClass) -> Result<CountReport> {
    if fam.is_singular_at(&t) {
        return Err(Error::Singular(format!("Δ({t}) = 0 for family {fam}")));
    }
    let s = ArgumentSet::from_multiset(crate::families::ArgKind::Explicit, 1, [(t, 1)]);
    avg_single(&s, fam, seq, x, cc, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PairMode {
    /// Σ over independent t₁, t₂ ∈ S.
    Independent,
    /// t₁ = t₂ only; exploratory, not one of the paper's sums.
    Diagonal,
}

fn pair_tallies(
    s: &ArgumentSet,
    fam1: &CurveFamily,
    fam2: &CurveFamily,
    seq1: &TraceSequence,
    seq2: &TraceSequence,
    x: u64,
    cc: &CongruenceClass,
    mode: PairMode,
) -> Result<(Vec<PrimeCount>, u64)> {
    let nonsingular = |fam: &CurveFamily| {
        ArgumentSet::from_multiset(
            s.kind,
            s.size_param,
            s.elements().iter().filter(|(t, _)| !fam.is_singular_at(t)).copied(),
        )
    };
    let s1 = nonsingular(fam1);
    let s2 = nonsingular(fam2);
    let both = ArgumentSet::from_multiset(
        s.kind,
        s.size_param,
        s.elements().iter().filter(|(t, _)| !fam1.is_singular_at(t) && !fam2.is_singular_at(t)).copied(),
    );
    let singular = s.cardinality() - both.cardinality();
    let primes = admissible_primes(x, cc);
    let targets: Vec<(Target, Target)> =
        primes.iter().map(|&p| Ok((seq_eval(seq1, p)?, seq_eval(seq2, p)?))).collect::<Result<_>>()?;
    let tallies = primes
        .par_iter()
        .zip(targets.par_iter())
        .map(|(&p, &(a1, a2))| match mode {
            PairMode::Independent => {
                let (h1, b1) = tally_one(&s1, fam1, a1, p);
                let (h2, b2) = tally_one(&s2, fam2, a2, p);
                PrimeCount { p, hits: h1 * h2, hits_cm: 0, bad: b1 + b2 }
            }
            PairMode::Diagonal => {
                let mut hits = 0;
                let mut bad = 0;
                for (e, m) in collapse_entries(&both, &[fam1, fam2], p) {
                    match (e[0], e[1]) {
                        (TraceEntry::Trace(t1), TraceEntry::Trace(t2)) => {
                            if a1.hits(t1) && a2.hits(t2) {
                                hits += m;
                            }
                        }
                        _ => bad += m,
                    }
                }
                PrimeCount { p, hits, hits_cm: 0, bad }
            }
        })
        .collect();
    Ok((tallies, singular))
}

#[allow(clippy::too_many_arguments)]
pub fn avg_pair(
    s: &ArgumentSet,
    fam1: &CurveFamily,
    fam2: &CurveFamily,
    seq1: &TraceSequence,
    seq2: &TraceSequence,
    x: u64,
    cc: &CongruenceClass,
    mode: PairMode,
) -> Result<CountReport> {
    let (tallies, singular) = pair_tallies(s, fam1, fam2, seq1, seq2, x, cc, mode)?;
    Ok(CountReport::from_tallies(x, &tallies, false, singular, 0).with_breakdown(&tallies))
}

#[allow(clippy::too_many_arguments)]
pub fn avg_pair_grid(
    s: &ArgumentSet,
    fam1: &CurveFamily,
    fam2: &CurveFamily,
    seq1: &TraceSequence,
    seq2: &TraceSequence,
    xs: &[u64],
    cc: &CongruenceClass,
    mode: PairMode,
) -> Result<Vec<CountReport>> {
    let xmax = xs.iter().copied().max().unwrap_or(0);
    let (tallies, singular) = pair_tallies(s, fam1, fam2, seq1, seq2, xmax, cc, mode)?;
    Ok(xs.iter().map(|&x| CountReport::from_tallies(x, &tallies, false, singular, 0)).collect())
}

/// Trace of the plain model (f(w), g(w)) of an exponential family at a residue.
fn exp_entry(
    fam: &ExponentialFamily,
    w: u64,
    p: u64,
    h_mod: &[u64],
    chi: &QuadraticCharacter,
    memo: &mut HashMap<(u64, u64), TraceEntry>,
) -> TraceEntry {
    let (a, b) = fam.coeffs_at_residue(w, p, h_mod);
    *memo.entry((a, b)).or_insert_with(|| {
        if discriminant_mod(a, b, p) == 0 {
            TraceEntry::Singular
        } else {
            TraceEntry::Trace(chi.trace(a, b))
        }
    })
}

fn exp_tallies(s: &ArgumentSet, fam: &ExponentialFamily, tau: i64, x: u64) -> Result<(Vec<PrimeCount>, u64)> {
    if let Some((r, _)) = s.elements().iter().find(|(r, _)| !r.is_integer()) {
        return Err(Error::Domain(format!("exponential families need integer arguments, got {r}")));
    }
    let x0 = fam.bad_prime_bound();
    let all = primes_up_to(x);
    let skipped = all.iter().filter(|&&p| p <= x0).count() as u64;
    let tallies = all
        .par_iter()
        .filter(|&&p| p > x0)
        .map(|&p| {
            let modulus = p * (p - 1);
            let mut profile: BTreeMap<u64, u64> = BTreeMap::new();
            for (t, m) in s.elements() {
                *profile.entry(reduce(t.num as i128, modulus)).or_insert(0) += m;
            }
            let chi = QuadraticCharacter::new(p);
            let h_mod = fam.h.reduce_mod(p);
            let mut memo = HashMap::new();
            let mut hits = 0;
            let mut bad = 0;
            for (w, r) in profile {
                match exp_entry(fam, w, p, &h_mod, &chi, &mut memo) {
                    TraceEntry::Trace(t) if t == tau => hits += r,
                    TraceEntry::Trace(_) => {}
                    TraceEntry::Singular => bad += r,
                }
            }
            PrimeCount { p, hits, hits_cm: 0, bad }
        })
        .collect();
    Ok((tallies, skipped))
}

/// Σ_{t ∈ S} #{p <= x : a_p(E(t)) = τ} over primes p > 6|b|, collapsing
/// arguments modulo p(p−1).
pub fn exp_count(s: &ArgumentSet, fam: &ExponentialFamily, tau: i64, x: u64) -> Result<CountReport> {
    let (tallies, skipped) = exp_tallies(s, fam, tau, x)?;
    Ok(CountReport::from_tallies(x, &tallies, false, 0, skipped).with_breakdown(&tallies))
}

pub fn exp_count_grid(s: &ArgumentSet, fam: &ExponentialFamily, tau: i64, xs: &[u64]) -> Result<Vec<CountReport>> {
    let xmax = xs.iter().copied().max().unwrap_or(0);
    let (tallies, _) = exp_tallies(s, fam, tau, xmax)?;
    let x0 = fam.bad_prime_bound();
    Ok(xs
        .iter()
        .map(|&x| {
            let skipped = primes_up_to(x.min(x0)).len() as u64;
            CountReport::from_tallies(x, &tallies, false, 0, skipped)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsolamDefect {
    pub p: u64,
    pub tau: i64,
    pub count: u64,
    /// (p−1)·12·H(4p − τ²)
    pub main_term12: u64,
    pub main_term: f64,
    pub defect: f64,
    pub defect_over_p: f64,
    /// p > 6|b|, the range in which the O(p) bound is usually stated.
    pub above_six_b: bool,
}

/// Exhaustive #{w mod p(p−1) : a_p(E(w)) = τ} against (p−1)·H(4p − τ²).
pub fn isolam_defect(fam: &ExponentialFamily, tau: i64, p: u64, table: &HurwitzTable) -> Result<IsolamDefect> {
    if !crate::arith::is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    // The counting argument needs only p ∤ 6b; p > 6|b| is reported, not required.
    if p < 5 || fam.is_bad_prime(p) {
        return Err(Error::BadPrime { p, reason: format!("p divides 6b = {}", fam.bad_prime_bound()) });
    }
    if (tau * tau) as u64 >= 4 * p {
        return Err(Error::Precondition(format!("|τ| = {} is not below 2√p", tau.abs())));
    }
    let chi = QuadraticCharacter::new(p);
    let h_mod = fam.h.reduce_mod(p);
    let mut memo = HashMap::new();
    let count = (0..p * (p - 1))
        .filter(|&w| exp_entry(fam, w, p, &h_mod, &chi, &mut memo) == TraceEntry::Trace(tau))
        .count() as u64;
    let main_term12 = (p - 1) * table.value12(4 * p - (tau * tau) as u64)?;
    let main_term = main_term12 as f64 / 12.0;
    let defect = count as f64 - main_term;
    Ok(IsolamDefect {
        p,
        tau,
        count,
        main_term12,
        main_term,
        defect,
        defect_over_p: defect / p as f64,
        above_six_b: p > fam.bad_prime_bound(),
    })
}

/// Hurwitz argument 4p − 𝔄(p)² for the sequence at p.
pub fn hurwitz_argument(seq: &TraceSequence, p: u64) -> Result<Option<u64>> {
    let m = seq_eval(seq, p)?.magnitude();
    Ok((4 * p).checked_sub(m * m).filter(|&n| n > 0))
}

/// card · Σ_{5 <= p <= x, p ∈ cc} H(4p − 𝔄(p)²)/p: the residue-collapse main term.
pub fn predicted_single(card: u64, seq: &TraceSequence, x: u64, cc: &CongruenceClass, table: &HurwitzTable) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for p in admissible_primes(x, cc).into_iter().filter(|&p| p >= 5) {
        if let Some(n) = hurwitz_argument(seq, p)? {
            acc.add(table.value12(n)? as f64 / (12.0 * p as f64));
        }
    }
    Ok(card as f64 * acc.value())
}

/// card² · Σ_{5 <= p <= x, p ∈ cc} H₁·H₂/p² for the independent pair sum.
pub fn predicted_pair(
    card: u64,
    seq1: &TraceSequence,
    seq2: &TraceSequence,
    x: u64,
    cc: &CongruenceClass,
    table: &HurwitzTable,
) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for p in admissible_primes(x, cc).into_iter().filter(|&p| p >= 5) {
        if let (Some(n1), Some(n2)) = (hurwitz_argument(seq1, p)?, hurwitz_argument(seq2, p)?) {
            let h = table.value12(n1)? as f64 * table.value12(n2)? as f64 / 144.0;
            acc.add(h / (p as f64 * p as f64));
        }
    }
    Ok((card as f64).powi(2) * acc.value())
}

/// card · Σ_{6|b| < p <= x} H(4p − τ²)/p.
pub fn predicted_exp(card: u64, fam: &ExponentialFamily, tau: i64, x: u64, table: &HurwitzTable) -> Result<f64> {
    let mut acc = CompensatedSum::new();
    for p in primes_up_to(x).into_iter().filter(|&p| p > fam.bad_prime_bound().max(3)) {
        if let Some(n) = (4 * p).checked_sub((tau * tau) as u64).filter(|&n| n > 0) {
            acc.add(table.value12(n)? as f64 / (12.0 * p as f64));
        }
    }
    Ok(card as f64 * acc.value())
}
