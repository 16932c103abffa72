//! `--selftest`: each module's results against small independent oracles.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use frobstat_core::arith::{gcd, primes_up_to};
use frobstat_core::classnum::deuring_check_all;
use frobstat_core::clt::{gaussian_moment, h_coeff, h_coeff_quadrature, moments, CoeffMap, MomentMethod, PairFamilySpec, PrimeSet};
use frobstat_core::constants::{local_factor, local_factor_from_series};
use frobstat_core::families::{build_argset, is_permutation_poly, residue_profile, ArgSpec, DEFAULT_SIZE_CAP};
use frobstat_core::ffcurve::trace_table;
use frobstat_core::numeric::integrate;
use frobstat_core::{
    avg_pair, avg_single, char_sum_direct, char_sum_local, curve_trace, hurwitz, hurwitz_table, isolam_defect, kronecker, pi_half,
    CharSumArgs, CongruenceClass, CurveCoeffs, CurveFamily, CurveKind, ExponentialFamily, PairMode, Poly, PrimeModulus, TraceSequence,
};

use crate::{Check, CliError, Outcome};

type Checks = Vec<Check>;

fn check(out: &mut Checks, name: &str, passed: bool, detail: impl Into<String>) {
    out.push(Check { name: name.into(), passed, detail: detail.into() });
}

fn module_of(command: &str) -> &'static str {
    match command {
        "trace" => "ffcurve",
        "hurwitz" | "deuring-check" => "classnum",
        "avg-lt" | "avg-lt-pair" | "exp-count" => "counting",
        "perm-check" => "families",
        "char-sum" | "local-factor" | "constant" | "hurwitz-avg" | "pi-half" => "constants",
        _ => "clt",
    }
}

const MODULES: [(&str, fn(&mut Checks) -> Result<(), CliError>); 6] = [
    ("ffcurve", ffcurve),
    ("classnum", classnum),
    ("families", families),
    ("counting", counting),
    ("constants", constants),
    ("clt", clt),
];

pub(crate) fn run(command: Option<&str>) -> Result<Outcome, CliError> {
    let wanted = command.map(module_of);
    let mut checks = Vec::new();
    for (name, f) in MODULES {
        if wanted.is_none_or(|w| w == name) {
            let mut local = Vec::new();
            f(&mut local)?;
            checks.extend(local.into_iter().map(|c| Check { name: format!("{name}/{}", c.name), ..c }));
        }
    }
    let mut payload = String::new();
    for c in &checks {
        let status = if c.passed { "ok" } else { "FAIL" };
        payload.push_str(&format!("selftest {}: {status} ({})\n", c.name, c.detail));
    }
    Ok(Outcome { payload: payload.into_bytes(), checks })
}

/// #{(x, y) ∈ F_p²: y² = x³ + ax + b} by a double loop.
fn affine_points(a: u64, b: u64, p: u64) -> u64 {
    let squares: Vec<u64> = (0..p).map(|y| y * y % p).collect();
    (0..p).map(|x| {
        let rhs = (x * x % p * x + a * x + b) % p;
        squares.iter().filter(|&&s| s == rhs).count() as u64
    }).sum()
}

fn singular_mod(a: u64, b: u64, p: u64) -> bool {
    (4 * (a * a % p) * a + 27 * (b * b % p)).is_multiple_of(p)
}

fn ffcurve(out: &mut Checks) -> Result<(), CliError> {
    let mut bad = 0;
    let mut hasse = 0;
    let mut tested = 0;
    for p in [5u64, 7, 11, 13, 17, 19, 23] {
        let pm = PrimeModulus::new(p)?;
        for a in 0..p {
            for b in 0..p {
                if singular_mod(a, b, p) {
                    continue;
                }
                let t = curve_trace(CurveCoeffs::new(a as i64, b as i64, pm), pm)?;
                tested += 1;
                bad += (t != p as i64 - affine_points(a, b, p) as i64) as u32;
                hasse += (t * t > 4 * p as i64) as u32;
            }
        }
    }
    check(out, "trace-vs-point-count", bad == 0, format!("{tested} curves, {bad} mismatches"));
    check(out, "hasse", hasse == 0, format!("{hasse} violations"));

    let mut bad = 0;
    for p in primes_up_to(100).into_iter().filter(|&p| p > 2) {
        let qr: HashSet<i64> = (1..p as i64).map(|y| y * y % p as i64).collect();
        for a in -50i64..50 {
            let r = a.rem_euclid(p as i64);
            let want = if r == 0 { 0 } else if qr.contains(&r) { 1 } else { -1 };
            bad += (kronecker(a, p as i64) != want) as u32;
        }
    }
    check(out, "kronecker-vs-residues", bad == 0, format!("{bad} mismatches for odd p < 100"));

    let fam = CurveFamily::parse("Z", "Z+1")?;
    let mut bad = 0;
    for p in [5u64, 7, 31, 101] {
        let pm = PrimeModulus::new(p)?;
        for (w, e) in trace_table(&fam, pm)?.into_iter().enumerate() {
            let (a, b) = (w as u64 % p, (w as u64 + 1) % p);
            let want = if singular_mod(a, b, p) { None } else { Some(p as i64 - affine_points(a, b, p) as i64) };
            bad += (e.trace() != want) as u32;
        }
    }
    check(out, "trace-table", bad == 0, format!("f=Z, g=Z+1: {bad} mismatches"));
    Ok(())
}

fn sigma(n: u64) -> u64 {
    (1..=n).filter(|d| n.is_multiple_of(*d)).sum()
}

fn classnum(out: &mut Checks) -> Result<(), CliError> {
    let table = hurwitz_table(2000, 1 << 30)?;
    let bad = (0..=2000).filter(|&n| table.value12(n).ok() != Some(hurwitz(n))).count();
    check(out, "table-vs-single", bad == 0, format!("{bad} mismatches for n <= 2000"));

    // Σ_t H(4n − t²) = 2σ(n) − Σ_{d|n} min(d, n/d) for non-square n.
    let mut bad = 0;
    for n in 1..=400u64 {
        let r = (n as f64).sqrt() as u64;
        if r * r == n {
            continue;
        }
        let mut lhs = 0;
        let mut t = 0i64;
        while t * t < 4 * n as i64 {
            let v = table.value12(4 * n - (t * t) as u64)?;
            lhs += if t == 0 { v } else { 2 * v };
            t += 1;
        }
        let mins: u64 = (1..=n).filter(|d| n % d == 0).map(|d| d.min(n / d)).sum();
        bad += (lhs != 12 * (2 * sigma(n) - mins)) as u32;
    }
    check(out, "class-number-relation", bad == 0, format!("{bad} failures for n <= 400"));

    let mut failures = 0;
    let mut count = 0;
    for p in primes_up_to(60).into_iter().filter(|&p| p >= 5) {
        for c in deuring_check_all(p)? {
            count += 1;
            failures += (!c.holds) as u32;
        }
    }
    check(out, "deuring", failures == 0, format!("{count} identities for p <= 60, {failures} failures"));
    Ok(())
}

fn families(out: &mut Checks) -> Result<(), CliError> {
    // Z⁵ + 5Z³ + 5Z permutes F_p exactly when p ≢ ±1 mod 5.
    let q = Poly::parse("Z^5+5Z^3+5Z")?;
    let mut bad = 0;
    for p in primes_up_to(300) {
        let image: HashSet<u64> = (0..p as u128).map(|w| ((w.pow(5) + 5 * w.pow(3) + 5 * w) % p as u128) as u64).collect();
        let brute = image.len() as u64 == p;
        let want = !matches!(p % 5, 1 | 4);
        bad += (is_permutation_poly(&q, p) != brute) as u32 + (brute != want) as u32;
    }
    check(out, "dickson-permutation", bad == 0, format!("{bad} disagreements for p < 300"));

    let t = 40u64;
    let farey = build_argset(&ArgSpec::Farey(t), DEFAULT_SIZE_CAP)?;
    let brute = (1..=t).flat_map(|u| (1..=t).map(move |v| (u, v))).filter(|&(u, v)| gcd(u, v) == 1).count() as u64;
    check(out, "farey-cardinality", farey.cardinality() == brute, format!("#F({t}) = {} vs {brute}", farey.cardinality()));

    let mut bad = 0;
    for p in [2u64, 3, 7, 13] {
        let prof = residue_profile(&farey, p)?;
        bad += (prof.counts.iter().sum::<u64>() + prof.dropped_denominators != farey.cardinality()) as u32;
    }
    check(out, "residue-profile-mass", bad == 0, format!("{bad} profiles lose elements"));
    Ok(())
}

/// a_p of y² = x³ + ax + b with integer a, b, or None when singular mod p.
fn int_trace(a: i64, b: i64, p: u64) -> Option<i64> {
    let (a, b) = (a.rem_euclid(p as i64) as u64, b.rem_euclid(p as i64) as u64);
    (!singular_mod(a, b, p)).then(|| p as i64 - affine_points(a, b, p) as i64)
}

fn hit(seq: &TraceSequence, p: u64, t: i64) -> bool {
    let e = (4.0 * p as f64).sqrt() as i64;
    let e = if (e + 1) * (e + 1) <= 4 * p as i64 { e + 1 } else if e * e > 4 * p as i64 { e - 1 } else { e };
    match seq {
        TraceSequence::Constant(c) => t == *c,
        TraceSequence::ExtremalPlus => t == e,
        TraceSequence::ExtremalMinus => t == -e,
        TraceSequence::ExtremalBoth => t.abs() == e,
        TraceSequence::Custom(_) => false,
    }
}

fn counting(out: &mut Checks) -> Result<(), CliError> {
    // Small integer arguments keep every model p-minimal for p >= 3.
    let s = build_argset(&ArgSpec::Integers(40), DEFAULT_SIZE_CAP)?;
    let x = 200;
    let primes: Vec<u64> = primes_up_to(x).into_iter().filter(|&p| p >= 3).collect();
    let fams: [(&str, &str, fn(i64) -> (i64, i64)); 2] = [("Z", "1", |t| (t, 1)), ("1", "Z", |t| (1, t))];
    let seqs = [TraceSequence::Constant(0), TraceSequence::Constant(1), TraceSequence::ExtremalBoth];
    let mut bad = 0;
    for (f, g, coeffs) in fams {
        let fam = CurveFamily::parse(f, g)?;
        for seq in &seqs {
            let brute: u64 = (1..=40)
                .map(|t| {
                    let (a, b) = coeffs(t);
                    primes.iter().filter(|&&p| int_trace(a, b, p).is_some_and(|tr| hit(seq, p, tr))).count() as u64
                })
                .sum();
            let r = avg_single(&s, &fam, seq, x, &CongruenceClass::all(), false)?;
            bad += (r.total != brute) as u32;
        }
    }
    check(out, "avg-single-vs-loop", bad == 0, format!("{bad} mismatches over 6 cases"));

    let f1 = CurveFamily::parse("Z", "1")?;
    let f2 = CurveFamily::parse("1", "Z")?;
    let s = build_argset(&ArgSpec::Integers(12), DEFAULT_SIZE_CAP)?;
    let seq = TraceSequence::Constant(1);
    let mut brute = 0u64;
    for &p in primes.iter().filter(|&&p| p <= 100) {
        let n1 = (1..=12).filter(|&t| int_trace(t, 1, p) == Some(1)).count() as u64;
        let n2 = (1..=12).filter(|&t| int_trace(1, t, p) == Some(1)).count() as u64;
        brute += n1 * n2;
    }
    let r = avg_pair(&s, &f1, &f2, &seq, &seq, 100, &CongruenceClass::all(), PairMode::Independent)?;
    check(out, "avg-pair-vs-loop", r.total == brute, format!("{} vs {brute}", r.total));

    let cm = CurveFamily::parse("0", "Z")?;
    let r = avg_single(&s, &cm, &TraceSequence::Constant(0), 100, &CongruenceClass::all(), true)?;
    check(out, "cm-exclusion", r.total == 0 && r.excluded_cm > 0, format!("j = 0 family: total {}, excluded {}", r.total, r.excluded_cm));

    let fam = ExponentialFamily::new(Poly::parse("1")?, 1, 1, 2)?;
    let p = 13u64;
    let table = hurwitz_table(4 * p, 1 << 30)?;
    let d = isolam_defect(&fam, 1, p, &table)?;
    let h_mod = fam.h.reduce_mod(p);
    let brute = (0..p * (p - 1))
        .filter(|&w| {
            let (a, b) = fam.coeffs_at_residue(w, p, &h_mod);
            int_trace(a as i64, b as i64, p) == Some(1)
        })
        .count() as u64;
    check(out, "exp-residue-count", d.count == brute, format!("p = 13: {} vs {brute}", d.count));
    Ok(())
}

/// li(x) by Ramanujan's series.
fn li(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let l = x.ln();
    let mut sum = 0.0;
    let mut term = 1.0;
    let mut inner = 0.0;
    for n in 1..200 {
        term *= l / n as f64;
        if (n - 1) % 2 == 0 {
            inner += 1.0 / (n as f64);
        }
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * term / 2f64.powi(n - 1) * inner;
    }
    EULER_GAMMA + l.ln() + x.sqrt() * sum
}

fn constants(out: &mut Checks) -> Result<(), CliError> {
    let mut bad = 0;
    let mut count = 0;
    for p in [2u64, 3, 5] {
        for tau in [1i64, 3] {
            for (u, w) in [(1, 1), (1, 4), (2, 5)] {
                let cc = CongruenceClass::new(u, w)?;
                for e in 0..16u32 {
                    let (i, j, k, l) = (e & 1, (e >> 1) & 1, (e >> 2) & 1, (e >> 3) & 1);
                    let args = CharSumArgs { f: p.pow(k), g: p.pow(l), m: p.pow(i), n: p.pow(j), tau, cc };
                    count += 1;
                    bad += (char_sum_direct(&args)? as i128 != char_sum_local(p, i, j, k, l, tau, &cc)?) as u32;
                }
            }
        }
    }
    check(out, "char-sum-closed-form", bad == 0, format!("{count} cases, {bad} mismatches"));

    let q = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let all = CongruenceClass::all();
    let spots = [
        (CurveKind::Two, 2u64, 1i64, q(4, 9)),
        (CurveKind::One, 2, 1, q(2, 3)),
        (CurveKind::One, 3, 3, q(9, 8)),
        (CurveKind::One, 5, 5, q(25, 24)),
    ];
    let bad = spots.iter().filter(|(k, p, t, want)| local_factor(*k, *p, *t, &all).map(|f| f.lambda) != Ok(want.clone())).count();
    check(out, "local-factor-spots", bad == 0, format!("{bad} of {} spot values differ", spots.len()));

    let mut worst: f64 = 0.0;
    for (kind, p, e) in [(CurveKind::One, 7u64, 24u32), (CurveKind::Two, 7, 8), (CurveKind::One, 3, 36)] {
        for tau in [1i64, 3, 7] {
            let table = local_factor(kind, p, tau, &all)?.lambda;
            let series = local_factor_from_series(kind, p, tau, &all, e)?;
            worst = worst.max((table - series).to_f64().unwrap_or(f64::INFINITY).abs());
        }
    }
    check(out, "local-factor-vs-series", worst < 1e-6, format!("largest truncation gap {worst:e}"));

    let mut worst: f64 = 0.0;
    for x in [10.0f64, 1e3, 1e6, 1e9] {
        // s = √t turns the integral into (li(√x) − li(√2))/2.
        let want = 0.5 * (li(x.sqrt()) - li(2f64.sqrt()));
        worst = worst.max((pi_half(x)? - want).abs() / want);
    }
    check(out, "pi-half-vs-li", worst < 1e-10, format!("largest relative gap {worst:e}"));
    Ok(())
}

fn clt(out: &mut Checks) -> Result<(), CliError> {
    let h2: Vec<u128> = (0..=2).map(|j| h_coeff(2, j)).collect::<Result<_, _>>()?;
    check(out, "h2", h2 == [1, 0, 1], format!("{h2:?}"));

    let mut worst: f64 = 0.0;
    for m in 0..=12 {
        for j in 0..=m {
            worst = worst.max((h_coeff(m, j)? as f64 - h_coeff_quadrature(m, j)).abs());
        }
    }
    check(out, "h-vs-quadrature", worst < 1e-8, format!("largest gap {worst:e}"));

    let mut worst: f64 = 0.0;
    for r in 0..=8u32 {
        let density = |t: f64| t.powi(r as i32) * (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let q: f64 = (-30..30).map(|k| integrate(density, k as f64, k as f64 + 1.0, 1e-14)).sum();
        worst = worst.max((q - gaussian_moment(r) as f64).abs());
    }
    check(out, "gaussian-moments", worst < 1e-9, format!("largest gap {worst:e}"));

    let spec = PairFamilySpec { phi: CoeffMap::Identity, psi: CoeffMap::Identity, a_bound: 4, b_bound: 4, primes: PrimeSet::All };
    let a = moments(&spec, 150, 2, MomentMethod::PerPair, u128::MAX)?;
    let b = moments(&spec, 150, 2, MomentMethod::PowerSum, u128::MAX)?;
    let gap = a.v.iter().zip(&b.v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    check(out, "per-pair-vs-power-sum", gap < 1e-10 && a.pair_count == b.pair_count, format!("gap {gap:e}"));
    Ok(())
}
