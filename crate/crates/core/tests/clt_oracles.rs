use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use frobstat_core::arith::primes_up_to;
use frobstat_core::clt::{
    box_curves, gaussian_moment, h_coeff, hecke_normalized, isomorphic_pairs, moments, moments_from_eigen_table, s_avg, CoeffMap,
    EigenvalueTable, MomentMethod, PairFamilySpec, PrimeSet,
};
use frobstat_core::numeric::integrate;
use frobstat_core::{CongruenceClass, Poly};

fn trace_oracle(a: &BigRational, b: &BigRational, p: u64) -> Option<i64> {
    if p == 2 {
        return None;
    }
    let pb = BigInt::from(p);
    let red = |x: &BigRational| -> Option<u64> {
        let d = x.denom().mod_floor(&pb).to_u64().unwrap();
        if d == 0 {
            return None;
        }
        let inv = (1..p).find(|&i| i * d % p == 1).unwrap();
        Some(x.numer().mod_floor(&pb).to_u64().unwrap() * inv % p)
    };
    let (a, b) = (red(a)?, red(b)?);
    if (4 * a * a % p * a + 27 * b * b).is_multiple_of(p) {
        return None;
    }
    let mut roots = vec![0i64; p as usize];
    for y in 0..p {
        roots[(y * y % p) as usize] += 1;
    }
    Some(p as i64 - (0..p).map(|x| roots[((x * x % p * x + a * x + b) % p) as usize]).sum::<i64>())
}

/// Brute-force u = r/s search for a₂ = u⁴a₁, b₂ = u⁶b₁, cross-multiplied in i128.
fn iso_oracle(a1: &BigRational, b1: &BigRational, a2: &BigRational, b2: &BigRational) -> bool {
    let parts = |x: &BigRational| (x.numer().to_i128().unwrap(), x.denom().to_i128().unwrap());
    let ((a1n, a1d), (b1n, b1d), (a2n, a2d), (b2n, b2d)) = (parts(a1), parts(b1), parts(a2), parts(b2));
    for r in 1..=6i128 {
        for s in 1..=6i128 {
            if r.gcd(&s) != 1 {
                continue;
            }
            let (r4, s4) = (r.pow(4), s.pow(4));
            let (r6, s6) = (r.pow(6), s.pow(6));
            if a2n * a1d * s4 == a1n * a2d * r4 && b2n * b1d * s6 == b1n * b2d * r6 {
                return true;
            }
        }
    }
    false
}

fn oracle_moments(spec: &PairFamilySpec, x: u64, r_max: u32) -> Vec<f64> {
    let (curves, _) = box_curves(spec);
    let primes = spec.primes.primes(x);
    let norm = (primes.len() as f64).sqrt();
    let vecs: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| primes.iter().map(|&p| trace_oracle(&c.a, &c.b, p).map_or(0.0, |t| t as f64 / (p as f64).sqrt())).collect())
        .collect();
    let mut sums = vec![0.0; r_max as usize];
    let mut count = 0;
    for i in 0..curves.len() {
        for j in 0..curves.len() {
            if i == j || iso_oracle(&curves[i].a, &curves[i].b, &curves[j].a, &curves[j].b) {
                continue;
            }
            count += 1;
            let s: f64 = vecs[i].iter().zip(&vecs[j]).map(|(u, v)| u * v).sum::<f64>() / norm;
            for (r, acc) in sums.iter_mut().enumerate() {
                *acc += s.powi(r as i32 + 1);
            }
        }
    }
    sums.iter().map(|s| s / count as f64).collect()
}

fn close(a: &[f64], b: &[f64]) {
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0), "{a:?} vs {b:?}");
    }
}

#[test]
fn tiny_box_matches_direct_definition() {
    let spec = PairFamilySpec { phi: CoeffMap::Identity, psi: CoeffMap::Identity, a_bound: 2, b_bound: 2, primes: PrimeSet::All };
    let want = oracle_moments(&spec, 20, 4);
    let got = moments(&spec, 20, 4, MomentMethod::PerPair, u128::MAX).unwrap();
    close(&got.v, &want);
    let got2 = moments(&spec, 20, 2, MomentMethod::PowerSum, u128::MAX).unwrap();
    close(&got2.v, &want[..2]);
    assert_eq!(got.gaussian_target, vec![0, 1, 0, 3]);
}

#[test]
fn rational_coefficient_maps_match_direct_definition() {
    let specs = [
        PairFamilySpec {
            phi: CoeffMap::exponential(1, 1, 2).unwrap(),
            psi: CoeffMap::exponential(2, -1, 3).unwrap(),
            a_bound: 3,
            b_bound: 3,
            primes: PrimeSet::All,
        },
        PairFamilySpec {
            phi: CoeffMap::Poly(Poly::parse("Z^5+5Z^3+5Z").unwrap()),
            psi: CoeffMap::Identity,
            a_bound: 2,
            b_bound: 3,
            primes: PrimeSet::Congruence(CongruenceClass::new(2, 5).unwrap()),
        },
        PairFamilySpec { phi: CoeffMap::Identity, psi: CoeffMap::Identity, a_bound: 16, b_bound: 1, primes: PrimeSet::Explicit(vec![5, 7, 13, 31]) },
    ];
    for spec in &specs {
        let want = oracle_moments(spec, 60, 3);
        let got = moments(spec, 60, 3, MomentMethod::PerPair, u128::MAX).unwrap();
        close(&got.v, &want);
    }
}

#[test]
fn isomorphism_classes_match_unit_search() {
    let spec = PairFamilySpec { phi: CoeffMap::Identity, psi: CoeffMap::Identity, a_bound: 20, b_bound: 20, primes: PrimeSet::All };
    let (curves, singular) = box_curves(&spec);
    assert!(singular > 0);
    let mut want = Vec::new();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let (c, d) = (&curves[i], &curves[j]);
            if iso_oracle(&c.a, &c.b, &d.a, &d.b) || iso_oracle(&d.a, &d.b, &c.a, &c.b) {
                want.push((i, j));
            }
        }
    }
    assert!(!want.is_empty());
    assert_eq!(isomorphic_pairs(&curves), want);
}

#[test]
fn power_identity_through_hecke_recursion() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let primes: Vec<u64> = primes_up_to(100).into_iter().filter(|&p| p >= 5).collect();
    let mut done = 0;
    while done < 20 {
        let p = primes[rng.gen_range(0..primes.len())];
        let a = BigRational::from_integer(rng.gen_range(0..p as i64).into());
        let b = BigRational::from_integer(rng.gen_range(0..p as i64).into());
        let Some(t) = trace_oracle(&a, &b, p) else { continue };
        let at = t as f64 / (p as f64).sqrt();
        for m in 0..=6u32 {
            let rhs: f64 = (0..=m).map(|j| h_coeff(m, j).unwrap() as f64 * hecke_normalized(at, j)).sum();
            assert!((at.powi(m as i32) - rhs).abs() < 1e-10, "p={p} m={m}");
        }
        done += 1;
    }
}

#[test]
fn s_avg_is_multiplicative_and_small_at_squares() {
    for (m, n) in [(9u64, 25u64), (9, 49), (25, 121), (27, 25), (49, 169)] {
        let lhs = s_avg(m * n, 1 << 24).unwrap();
        let rhs = s_avg(m, 1 << 24).unwrap() * s_avg(n, 1 << 24).unwrap();
        assert!((lhs - rhs).abs() < 1e-12, "S({m}·{n})");
    }
    let mut worst: f64 = 0.0;
    for p in primes_up_to(50).into_iter().filter(|&p| p >= 3) {
        let s = s_avg(p * p, 1 << 24).unwrap();
        worst = worst.max(s.abs() * (p as f64).sqrt() / 2.0);
    }
    eprintln!("max |S(p²)|·√p/2 over 3 <= p <= 50: {worst}");
    assert!(worst < 4.0);
}

#[test]
fn gaussian_moment_matches_quadrature() {
    for r in 0..=10u32 {
        let density = |t: f64| t.powi(r as i32) * (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let q: f64 = (-40..40).map(|k| integrate(density, k as f64, k as f64 + 1.0, 1e-14)).sum();
        assert!((q - gaussian_moment(r) as f64).abs() < 1e-9, "r={r}: {q}");
    }
}

#[test]
fn synthetic_sato_tate_table_has_unit_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let primes = primes_up_to(3000);
    let mut csv = String::from("form_label,p,lambda_normalized\n");
    for f in 0..30 {
        for &p in &primes {
            // θ with density (2/π) sin²θ by rejection.
            let theta = loop {
                let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
                if rng.gen::<f64>() < t.sin().powi(2) {
                    break t;
                }
            };
            csv.push_str(&format!("f{f},{p},{}\n", 2.0 * theta.cos()));
        }
    }
    let table = EigenvalueTable::from_csv(csv.as_bytes()).unwrap();
    let r = moments_from_eigen_table(&table, &PrimeSet::All, 3000, 4).unwrap();
    assert_eq!(r.pair_count, 30 * 29);
    assert!(r.v[0].abs() < 0.3, "{:?}", r.v);
    assert!((r.v[1] - 1.0).abs() < 0.3, "{:?}", r.v);
}
