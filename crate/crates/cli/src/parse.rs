//! String forms of the experiment inputs.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use frobstat_core::clt::PrimeSet;
use frobstat_core::families::{build_argset, ArgSpec, ArgumentSet, DEFAULT_SIZE_CAP};
use frobstat_core::{CongruenceClass, CurveFamily, ExponentialFamily, Poly, TraceSequence};

use crate::CliError;

fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_bound(s: &str) -> Result<u64, CliError> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    // Allow 1e6-style bounds as long as they are exact integers.
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 => Ok(v as u64),
        _ => Err(config(format!("x: {s:?} is not a nonnegative integer"))),
    }
}

/// Comma-separated, strictly increasing bounds.
pub fn grid(s: &str) -> Result<Vec<u64>, CliError> {
    let xs: Vec<u64> = s.split(',').filter(|t| !t.trim().is_empty()).map(parse_bound).collect::<Result<_, _>>()?;
    if xs.is_empty() {
        return Err(config("x: empty grid"));
    }
    if xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(config(format!("x: grid {xs:?} is not strictly increasing")));
    }
    Ok(xs)
}

/// `f=<poly>;g=<poly>`.
pub fn family(s: &str) -> Result<CurveFamily, CliError> {
    let mut f = None;
    let mut g = None;
    for part in s.split(';') {
        let Some((k, v)) = part.split_once('=') else {
            return Err(config(format!("family: expected f=...;g=..., got {s:?}")));
        };
        match k.trim() {
            "f" => f = Some(v.trim().to_string()),
            "g" => g = Some(v.trim().to_string()),
            other => return Err(config(format!("family: unknown key {other:?}"))),
        }
    }
    let (Some(f), Some(g)) = (f, g) else {
        return Err(config(format!("family: both f and g are required in {s:?}")));
    };
    CurveFamily::parse(&f, &g).map_err(|e| config(format!("family: {e}")))
}

/// `constant:T`, `extremal-plus`, `extremal-minus`, `extremal-both` or
/// `custom:PATH` (CSV rows `p,value`); a bare `tau` means a constant.
pub fn sequence(seq: Option<&str>, tau: Option<i64>) -> Result<TraceSequence, CliError> {
    match (seq, tau) {
        (Some(_), Some(_)) => Err(config("give either --seq or --tau, not both")),
        (None, t) => Ok(TraceSequence::Constant(t.unwrap_or(0))),
        (Some(s), None) => {
            let s = s.trim();
            match s {
                "extremal-plus" => Ok(TraceSequence::ExtremalPlus),
                "extremal-minus" => Ok(TraceSequence::ExtremalMinus),
                "extremal-both" => Ok(TraceSequence::ExtremalBoth),
                _ => {
                    if let Some(t) = s.strip_prefix("constant:") {
                        return t.trim().parse().map(TraceSequence::Constant).map_err(|_| config(format!("seq: bad constant {t:?}")));
                    }
                    if let Some(path) = s.strip_prefix("custom:") {
                        return custom_sequence(Path::new(path));
                    }
                    Err(config(format!("seq: unknown sequence {s:?}")))
                }
            }
        }
    }
}

fn custom_sequence(path: &Path) -> Result<TraceSequence, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| config(format!("seq: {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| config(format!("seq: {} line {}: {e}", path.display(), i + 1)))?;
        let field = |k: usize| rec.get(k).map(str::trim).unwrap_or("");
        let p: u64 = field(0).parse().map_err(|_| config(format!("seq: {} line {}: bad prime", path.display(), i + 1)))?;
        let v: i64 = field(1).parse().map_err(|_| config(format!("seq: {} line {}: bad value", path.display(), i + 1)))?;
        map.insert(p, v);
    }
    Ok(TraceSequence::Custom(map))
}

pub fn class(upsilon: i64, omega: u64) -> Result<CongruenceClass, CliError> {
    CongruenceClass::new(upsilon, omega).map_err(|e| config(format!("upsilon/omega: {e}")))
}

/// `csv:PATH` for an explicit multiset, otherwise an argument-set spec.
pub fn argset(s: &str) -> Result<ArgumentSet, CliError> {
    if let Some(path) = s.strip_prefix("csv:") {
        let file = std::fs::File::open(path).map_err(|e| config(format!("argset: {path}: {e}")))?;
        return ArgumentSet::from_csv(file).map_err(|e| config(format!("argset: {path}: {e}")));
    }
    let spec = ArgSpec::from_str(s).map_err(|e| config(format!("argset: {e}")))?;
    build_argset(&spec, DEFAULT_SIZE_CAP).map_err(|e| config(format!("argset: {e}")))
}

/// `all`, `class:U,W` (p ≡ U mod W) or `list:P1,P2,...`.
pub fn prime_set(s: &str) -> Result<PrimeSet, CliError> {
    let s = s.trim();
    if s == "all" {
        return Ok(PrimeSet::All);
    }
    let ints = |rest: &str| -> Result<Vec<i64>, CliError> {
        rest.split(',').map(|t| t.trim().parse::<i64>().map_err(|_| config(format!("primes: bad integer {t:?}")))).collect()
    };
    if let Some(rest) = s.strip_prefix("class:") {
        let v = ints(rest)?;
        let [u, w] = v[..] else {
            return Err(config("primes: class needs U,W"));
        };
        if w <= 0 {
            return Err(config("primes: modulus must be positive"));
        }
        return Ok(PrimeSet::Congruence(class(u, w as u64)?));
    }
    if let Some(rest) = s.strip_prefix("list:") {
        let v = ints(rest)?;
        if v.iter().any(|&p| p < 2) {
            return Err(config("primes: list entries must be primes"));
        }
        return Ok(PrimeSet::Explicit(v.into_iter().map(|p| p as u64).collect()));
    }
    Err(config(format!("primes: unknown prime set {s:?}")))
}

pub fn poly(name: &str, s: &str) -> Result<Poly, CliError> {
    Poly::parse(s).map_err(|e| config(format!("{name}: {e}")))
}

pub fn exp_family(h: &str, m: u32, n: u32, b: i64) -> Result<ExponentialFamily, CliError> {
    ExponentialFamily::new(poly("h", h)?, m, n, b).map_err(|e| config(format!("exponential family: {e}")))
}
