//! Dense univariate polynomials over Z in the variable Z, with exact gcd,
//! resultant and modular evaluation.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::mul_mod;
use crate::error::{Error, Result};

/// Coefficients in ascending order; no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    coeffs: Vec<BigInt>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Poly::new(vec![c.into()])
    }

    /// The variable Z.
    pub fn var() -> Self {
        Poly::from_i64(&[0, 1])
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the zero polynomial counted as 0.
    pub fn degree_or_zero(&self) -> usize {
        self.degree().unwrap_or(0)
    }

    pub fn leading(&self) -> BigInt {
        self.coeffs.last().cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        Poly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = BigInt::zero();
        Poly::new(
            (0..n)
                .map(|i| self.coeffs.get(i).unwrap_or(&zero) + other.coeffs.get(i).unwrap_or(&zero))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&BigInt::from(-1)))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::constant(1);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Non-negative gcd of the coefficients (0 for the zero polynomial).
    pub fn content(&self) -> BigInt {
        self.coeffs.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Divide out the content and make the leading coefficient positive.
    pub fn primitive_part(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut c = self.content();
        if self.leading().is_negative() {
            c = -c;
        }
        Poly::new(self.coeffs.iter().map(|x| x / &c).collect())
    }

    /// Pseudo-remainder of `self` by `d` (d nonzero).
    fn pseudo_rem(&self, d: &Poly) -> Poly {
        let dd = d.degree().expect("division by zero polynomial");
        let lc = d.leading();
        let mut r = self.clone();
        while let Some(dr) = r.degree() {
            if dr < dd {
                break;
            }
            let lr = r.leading();
            let mut shifted = vec![BigInt::zero(); dr - dd];
            shifted.extend(d.coeffs.iter().map(|c| c * &lr));
            r = r.scale(&lc).sub(&Poly::new(shifted));
        }
        r
    }

    /// Primitive gcd over Q[Z] with positive leading coefficient.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.primitive_part();
        let mut b = other.primitive_part();
        if a.degree_or_zero() < b.degree_or_zero() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = a.pseudo_rem(&b).primitive_part();
            a = b;
            b = r;
        }
        a
    }

    /// Exact quotient in Z[Z]; errors when `d` does not divide `self` there.
    pub fn div_exact(&self, d: &Poly) -> Result<Poly> {
        let dd = d.degree().ok_or_else(|| Error::Domain("division by zero polynomial".into()))?;
        let lc = d.leading();
        let mut r = self.clone();
        let mut q = vec![BigInt::zero(); self.coeffs.len().saturating_sub(dd).max(1)];
        while let Some(dr) = r.degree() {
            if dr < dd {
                break;
            }
            let (c, rem) = r.leading().div_rem(&lc);
            if !rem.is_zero() {
                return Err(Error::Domain("inexact polynomial division".into()));
            }
            let mut shifted = vec![BigInt::zero(); dr - dd];
            shifted.extend(d.coeffs.iter().map(|x| x * &c));
            q[dr - dd] = c;
            r = r.sub(&Poly::new(shifted));
        }
        if !r.is_zero() {
            return Err(Error::Domain("inexact polynomial division".into()));
        }
        Ok(Poly::new(q))
    }

    /// Resultant via the Sylvester matrix (fraction-free Bareiss elimination).
    pub fn resultant(&self, other: &Poly) -> BigInt {
        let (m, n) = match (self.degree(), other.degree()) {
            (Some(m), Some(n)) => (m, n),
            _ => return BigInt::zero(),
        };
        if m == 0 && n == 0 {
            return BigInt::one();
        }
        let size = m + n;
        let mut mat = vec![vec![BigInt::zero(); size]; size];
        for row in 0..n {
            for (i, c) in self.coeffs.iter().rev().enumerate() {
                mat[row][row + i] = c.clone();
            }
        }
        for row in 0..m {
            for (i, c) in other.coeffs.iter().rev().enumerate() {
                mat[n + row][row + i] = c.clone();
            }
        }
        bareiss_det(mat)
    }

    pub fn eval(&self, t: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * t + BigRational::from_integer(c.clone()))
    }

    /// Coefficients reduced into `[0, p)`.
    pub fn reduce_mod(&self, p: u64) -> Vec<u64> {
        let m = BigInt::from(p);
        self.coeffs
            .iter()
            .map(|c| c.mod_floor(&m).to_u64().expect("residue fits u64"))
            .collect()
    }

    /// Reduce the variable and coefficients modulo `p` and evaluate.
    pub fn eval_mod(&self, w: u64, p: u64) -> u64 {
        horner_mod(&self.reduce_mod(p), w, p)
    }

    /// Parse expressions such as `Z^5+5Z^3+5Z`, `3*z^2 - 1`, `-(Z+1)^2`.
    pub fn parse(src: &str) -> Result<Poly> {
        let tokens: Vec<char> = src.chars().filter(|c| !c.is_whitespace()).collect();
        if tokens.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let mut parser = Parser { s: &tokens, pos: 0, src };
        let poly = parser.expr()?;
        if parser.pos != tokens.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(poly)
    }
}

pub fn horner_mod(coeffs: &[u64], w: u64, p: u64) -> u64 {
    coeffs.iter().rev().fold(0u64, |acc, &c| (mul_mod(acc, w, p) + c) % p)
}

fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

struct Parser<'a> {
    s: &'a [char],
    pos: usize,
    src: &'a str,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at offset {} in polynomial {:?}", self.pos, self.src))
    }

    fn peek(&self) -> Option<char> {
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = Poly::zero();
        let mut sign = BigInt::one();
        match self.peek() {
            Some('+') => self.pos += 1,
            Some('-') => {
                self.pos += 1;
                sign = BigInt::from(-1);
            }
            _ => {}
        }
        loop {
            acc = acc.add(&self.term()?.scale(&sign));
            match self.peek() {
                Some('+') => sign = BigInt::one(),
                Some('-') => sign = BigInt::from(-1),
                _ => return Ok(acc),
            }
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?);
                }
                Some(c) if c.is_ascii_digit() || c == 'Z' || c == 'z' || c == '(' => {
                    acc = acc.mul(&self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn number(&mut self) -> Result<BigInt> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a number"));
        }
        let digits: String = self.s[start..self.pos].iter().collect();
        digits.parse().map_err(|_| self.error("bad integer"))
    }

    fn exponent(&mut self) -> Result<u32> {
        if self.peek() == Some('^') {
            self.pos += 1;
            self.number()?.to_u32().ok_or_else(|| self.error("exponent too large"))
        } else {
            Ok(1)
        }
    }

    fn factor(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() => Ok(Poly::constant(self.number()?)),
            Some('Z') | Some('z') => {
                self.pos += 1;
                let e = self.exponent()?;
                Ok(Poly::var().pow(e))
            }
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                let e = self.exponent()?;
                Ok(inner.pow(e))
            }
            _ => Err(self.error("expected a term")),
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { "-" } else { "+" })?;
            }
            first = false;
            match (i, mag.is_one()) {
                (0, _) => write!(f, "{mag}")?,
                (_, true) => {}
                (_, false) => write!(f, "{mag}*")?,
            }
            match i {
                0 => {}
                1 => write!(f, "Z")?,
                _ => write!(f, "Z^{i}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print_round_trip() {
        for (src, coeffs) in [
            ("Z^5+5Z^3+5Z", vec![0, 5, 0, 5, 0, 1]),
            ("3*z^2 - 1", vec![-1, 0, 3]),
            ("-(Z+1)^2", vec![-1, -2, -1]),
            ("0", vec![]),
            ("2Z+1", vec![1, 2]),
            ("Z(Z-1)", vec![0, -1, 1]),
        ] {
            let p = Poly::parse(src).unwrap();
            assert_eq!(p, Poly::from_i64(&coeffs), "{src}");
            assert_eq!(Poly::parse(&p.to_string()).unwrap(), p);
        }
        assert!(Poly::parse("Z^").is_err());
        assert!(Poly::parse("(Z+1").is_err());
        assert!(Poly::parse("").is_err());
        assert!(Poly::parse("Y").is_err());
    }

    #[test]
    fn gcd_and_division() {
        let a = Poly::parse("(Z+1)^2*(2Z-3)").unwrap();
        let b = Poly::parse("(Z+1)*(Z+5)").unwrap();
        assert_eq!(a.gcd(&b), Poly::parse("Z+1").unwrap());
        assert_eq!(a.div_exact(&Poly::parse("Z+1").unwrap()).unwrap(), Poly::parse("(Z+1)(2Z-3)").unwrap());
        assert!(a.div_exact(&Poly::parse("Z+2").unwrap()).is_err());
    }

    #[test]
    fn resultant_matches_root_products() {
        // Res(f, g) = prod g(alpha) over the roots of monic f.
        let f = Poly::parse("Z-3").unwrap();
        let g = Poly::parse("Z-7").unwrap();
        assert_eq!(f.resultant(&g), BigInt::from(-4));
        let f = Poly::parse("Z^2+1").unwrap();
        let g = Poly::parse("Z-2").unwrap();
        assert_eq!(f.resultant(&g), BigInt::from(5));
        let f = Poly::parse("6912Z").unwrap();
        let g = Poly::parse("4Z+27").unwrap();
        assert_eq!(f.resultant(&g).abs(), BigInt::from(6912 * 27));
        assert!(Poly::parse("(Z+1)(Z+2)").unwrap().resultant(&Poly::parse("Z+2").unwrap()).is_zero());
    }

    #[test]
    fn modular_evaluation() {
        let q = Poly::parse("Z^5+5Z^3+5Z-11").unwrap();
        for p in [2u64, 3, 7, 101] {
            for w in 0..p.min(40) {
                let exact = q.eval(&BigRational::from_integer(w.into()));
                let want = exact.numer().mod_floor(&BigInt::from(p)).to_u64().unwrap();
                assert_eq!(q.eval_mod(w, p), want);
            }
        }
    }
}
