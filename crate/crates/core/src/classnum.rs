//! Class numbers of imaginary quadratic discriminants and Hurwitz class
//! numbers, single and batched, stored exactly as 12·H(n).

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{gcd, isqrt};
use crate::error::{Error, Result};
use crate::ffcurve::{PrimeModulus, QuadraticCharacter};

/// Magic string (and schema version) of the Hurwitz cache file.
pub const HURWITZ_CACHE_MAGIC: &str = "HURW1";
pub const DEFAULT_TABLE_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Discriminant(i64);

impl Discriminant {
    pub fn new(d: i64) -> Result<Self> {
        if d >= 0 || !matches!(d.rem_euclid(4), 0 | 1) {
            return Err(Error::Domain(format!("{d} is not a negative discriminant")));
        }
        Ok(Discriminant(d))
    }

    pub fn get(self) -> i64 {
        self.0
    }
}

/// (h(d), w(d)) with w(−3) = 3, w(−4) = 2, else 1.
pub fn class_number(d: Discriminant) -> (u64, u64) {
    let d = d.get();
    let n = d.unsigned_abs();
    let w = match d {
        -3 => 3,
        -4 => 2,
        _ => 1,
    };
    let mut h = 0;
    let mut b = (n % 2) as i64;
    // Reduced forms satisfy b² <= a² and 3a² <= n.
    while 3 * (b * b) as u64 <= n {
        let ac = (b as u64 * b as u64 + n) / 4;
        let mut a = b.max(1) as u64;
        while a * a <= ac {
            if ac.is_multiple_of(a) {
                let c = ac / a;
                if gcd(gcd(a, b as u64), c) == 1 {
                    // (a, b, c) and (a, -b, c) are distinct reduced forms unless b = 0, b = a or a = c.
                    h += if b == 0 || b as u64 == a || a == c { 1 } else { 2 };
                }
            }
            a += 1;
        }
        b += 2;
    }
    (h, w)
}

/// 12·H(n), exact.
pub fn hurwitz(n: u64) -> u64 {
    if n == 0 || matches!(n % 4, 1 | 2) {
        return 0;
    }
    let mut total = 0;
    let mut f = 1;
    while f * f <= n {
        if n.is_multiple_of(f * f) {
            let m = n / (f * f);
            if matches!(m % 4, 0 | 3) {
                let (h, w) = class_number(Discriminant(-(m as i64)));
                total += 12 / w * h;
            }
        }
        f += 1;
    }
    total
}

/// Batched 12·H(n) for 0 <= n <= N.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HurwitzTable {
    values: Vec<u32>,
}

impl HurwitzTable {
    pub fn bound(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    /// 12·H(n).
    pub fn value12(&self, n: u64) -> Result<u64> {
        self.values
            .get(n as usize)
            .map(|&v| v as u64)
            .ok_or(Error::CacheTooSmall { have: self.bound(), need: n })
    }

    pub fn h(&self, n: u64) -> Result<f64> {
        Ok(self.value12(n)? as f64 / 12.0)
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn write_cache<W: Write>(&self, mut w: W) -> Result<()> {
        let mut out = String::with_capacity(self.values.len() * 6 + 32);
        out.push_str(HURWITZ_CACHE_MAGIC);
        out.push('\n');
        out.push_str(&self.bound().to_string());
        out.push('\n');
        for v in &self.values {
            out.push_str(&v.to_string());
            out.push('\n');
        }
        w.write_all(out.as_bytes())?;
        Ok(())
    }

    /// Parses a cache; any magic or length mismatch is an error so callers regenerate.
    pub fn read_cache<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let mut next = || -> Result<String> {
            lines.next().ok_or_else(|| Error::Parse("truncated hurwitz cache".into()))?.map_err(Error::from)
        };
        let magic = next()?;
        if magic.trim() != HURWITZ_CACHE_MAGIC {
            return Err(Error::Parse(format!("hurwitz cache schema {magic:?}, expected {HURWITZ_CACHE_MAGIC}")));
        }
        let n: u64 = next()?.trim().parse().map_err(|_| Error::Parse("bad hurwitz cache bound".into()))?;
        let mut values = Vec::with_capacity(n as usize + 1);
        for _ in 0..=n {
            values.push(next()?.trim().parse().map_err(|_| Error::Parse("bad hurwitz cache entry".into()))?);
        }
        Ok(HurwitzTable { values })
    }

    /// Reuses the cache at `path` when it is valid and large enough,
    /// otherwise builds the table and rewrites the file.
    pub fn load_or_build(path: &Path, n: u64, cap: u64) -> Result<Self> {
        if let Ok(file) = std::fs::File::open(path) {
            if let Ok(t) = HurwitzTable::read_cache(file) {
                if t.bound() >= n {
                    return Ok(t);
                }
            }
        }
        let t = hurwitz_table(n, cap)?;
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        t.write_cache(std::io::BufWriter::new(std::fs::File::create(&tmp)?))?;
        std::fs::rename(&tmp, path)?;
        Ok(t)
    }
}

/// One pass over all reduced forms (a, b, c), imprimitive included, with
/// 4ac − b² <= N. Forms a = b = c weigh 1/3, forms a = c with b = 0 weigh 1/2.
/// Work is split by ranges of n so every chunk owns its slice of the output.
pub fn hurwitz_table(n_max: u64, cap: u64) -> Result<HurwitzTable> {
    if n_max > cap {
        return Err(Error::CapExceeded { what: "hurwitz table", size: n_max as u128, cap: cap as u128 });
    }
    let len = n_max as usize + 1;
    let mut values = vec![0u32; len];
    let chunks = rayon::current_num_threads().max(1) * 4;
    let chunk_len = len.div_ceil(chunks).max(1 << 16);
    values.par_chunks_mut(chunk_len).enumerate().for_each(|(ci, out)| {
        let lo = (ci * chunk_len) as i64;
        let hi = lo + out.len() as i64;
        let mut a: i64 = 1;
        while 3 * a * a < hi {
            for b in (1 - a)..=a {
                let c0 = if b < 0 { a + 1 } else { a };
                let four_a = 4 * a;
                // Smallest c >= c0 with 4ac − b² >= lo.
                let c_lo = (lo + b * b + four_a - 1).div_euclid(four_a).max(c0);
                let mut n = four_a * c_lo - b * b;
                let mut c = c_lo;
                while n < hi {
                    let w = if c == a {
                        if b == 0 {
                            6
                        } else if b == a {
                            4
                        } else {
                            12
                        }
                    } else {
                        12
                    };
                    out[(n - lo) as usize] += w;
                    n += four_a;
                    c += 1;
                }
            }
            a += 1;
        }
    });
    Ok(HurwitzTable { values })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeuringCheck {
    pub p: u64,
    pub tau: i64,
    pub lhs: u64,
    /// (p−1)/2 · H(4p − τ²)
    #[serde(serialize_with = "ser_ratio")]
    pub rhs: Ratio<u64>,
    pub holds: bool,
}

fn ser_ratio<S: serde::Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

/// Histogram of a_p over all nonsingular (a, b) ∈ F_p², indexed by a_p + ⌊2√p⌋.
pub fn trace_histogram(p: u64) -> Vec<u64> {
    let chi = QuadraticCharacter::new(p);
    let bound = isqrt(4 * p) as i64;
    let mut hist = vec![0u64; 2 * bound as usize + 1];
    for a in 0..p {
        for b in 0..p {
            if let Some(t) = chi.trace_checked(a, b) {
                hist[(t + bound) as usize] += 1;
            }
        }
    }
    hist
}

fn validate_deuring(p: u64, tau: i64) -> Result<()> {
    PrimeModulus::new(p)?;
    if p < 5 {
        return Err(Error::Precondition(format!("p = {p} < 5")));
    }
    if tau == 0 || (tau * tau) as u64 >= 4 * p || tau.rem_euclid(p as i64) == 0 {
        return Err(Error::Precondition(format!("need 0 < |τ| < 2√p and p ∤ τ, got τ = {tau}, p = {p}")));
    }
    Ok(())
}

fn deuring_from_hist(p: u64, tau: i64, hist: &[u64]) -> DeuringCheck {
    let bound = isqrt(4 * p) as i64;
    let lhs = hist[(tau + bound) as usize];
    let rhs = Ratio::new((p - 1) * hurwitz(4 * p - (tau * tau) as u64), 24);
    let holds = rhs.is_integer() && *rhs.numer() == lhs;
    DeuringCheck { p, tau, lhs, rhs, holds }
}

/// Exhaustive #{(a,b): a_p = τ} against (p−1)/2 · H(4p − τ²).
pub fn deuring_check(p: u64, tau: i64) -> Result<DeuringCheck> {
    validate_deuring(p, tau)?;
    Ok(deuring_from_hist(p, tau, &trace_histogram(p)))
}

/// Every admissible τ at p, sharing one exhaustive enumeration.
pub fn deuring_check_all(p: u64) -> Result<Vec<DeuringCheck>> {
    PrimeModulus::new(p)?;
    if p < 5 {
        return Err(Error::Precondition(format!("p = {p} < 5")));
    }
    let hist = trace_histogram(p);
    let bound = isqrt(4 * p) as i64;
    Ok((-bound..=bound)
        .filter(|&t| validate_deuring(p, t).is_ok())
        .map(|t| deuring_from_hist(p, t, &hist))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_number_examples() {
        let h = |d| class_number(Discriminant::new(d).unwrap());
        assert_eq!(h(-3), (1, 3));
        assert_eq!(h(-4), (1, 2));
        assert_eq!(h(-23), (3, 1));
        assert_eq!(h(-163), (1, 1));
        assert_eq!(h(-12), (1, 1));
        assert_eq!(h(-16), (1, 1));
        assert_eq!(h(-47), (5, 1));
        assert!(Discriminant::new(-5).is_err());
        assert!(Discriminant::new(4).is_err());
    }

    #[test]
    fn hurwitz_examples() {
        assert_eq!(hurwitz(3), 4);
        assert_eq!(hurwitz(4), 6);
        assert_eq!(hurwitz(11), 12);
        assert_eq!(hurwitz(12), 16);
        assert_eq!(hurwitz(0), 0);
        assert_eq!(hurwitz(5), 0);
    }

    #[test]
    fn table_matches_single_values() {
        let t = hurwitz_table(10_000, DEFAULT_TABLE_CAP).unwrap();
        for n in 0..=10_000u64 {
            assert_eq!(t.value12(n).unwrap(), hurwitz(n), "n = {n}");
        }
        let small = hurwitz_table(12, DEFAULT_TABLE_CAP).unwrap();
        assert_eq!(&small.values()[3..=4], &[4, 6]);
        assert_eq!(small.value12(11), Ok(12));
        assert_eq!(small.value12(12), Ok(16));
        assert_eq!(hurwitz_table(0, 10).unwrap().values(), &[0]);
        assert!(matches!(hurwitz_table(11, 10), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn table_congruence_and_growth() {
        let t = hurwitz_table(100_000, DEFAULT_TABLE_CAP).unwrap();
        for n in 1..=100_000u64 {
            let v = t.value12(n).unwrap();
            if matches!(n % 4, 1 | 2) {
                assert_eq!(v, 0);
            } else if n >= 3 {
                assert!(v > 0);
            }
            if n >= 16 {
                let x = n as f64;
                assert!((v as f64) / 12.0 <= x.sqrt() * x.ln() * x.ln().ln(), "n = {n}");
            }
        }
    }

    #[test]
    fn cache_round_trip_and_schema_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.cache");
        let t = HurwitzTable::load_or_build(&path, 500, DEFAULT_TABLE_CAP).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("HURW1\n500\n0\n"));
        assert_eq!(HurwitzTable::load_or_build(&path, 300, DEFAULT_TABLE_CAP).unwrap(), t);
        std::fs::write(&path, text.replacen("HURW1", "HURW0", 1)).unwrap();
        assert!(HurwitzTable::read_cache(std::fs::File::open(&path).unwrap()).is_err());
        let rebuilt = HurwitzTable::load_or_build(&path, 600, DEFAULT_TABLE_CAP).unwrap();
        assert_eq!(rebuilt.bound(), 600);
        assert!(std::fs::read_to_string(&path).unwrap().starts_with("HURW1\n600\n"));
    }

    #[test]
    fn deuring_examples() {
        let c = deuring_check(5, 1).unwrap();
        assert!(c.holds);
        assert_eq!(c.rhs, Ratio::new(4 * hurwitz(19), 24));
        let c = deuring_check(7, 2).unwrap();
        assert!(c.holds);
        assert_eq!(c.rhs, Ratio::new(6 * hurwitz(24), 24));
        assert!(deuring_check(5, 5).is_err());
        assert!(deuring_check(5, 0).is_err());
        assert!(deuring_check(11, 7).is_err());
    }

    #[test]
    fn deuring_holds_up_to_100() {
        for p in crate::arith::primes_up_to(100).into_iter().filter(|&p| p >= 5) {
            for c in deuring_check_all(p).unwrap() {
                assert!(c.holds, "{c:?}");
            }
        }
    }
}
