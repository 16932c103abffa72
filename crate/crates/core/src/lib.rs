//! Frobenius trace statistics over families of elliptic curves: traces and
//! Hurwitz class numbers, constrained prime counts, the Euler-product
//! constants attached to them, and moments of normalized trace pairings.

pub mod arith;
pub mod classnum;
pub mod clt;
pub mod constants;
pub mod counting;
pub mod error;
pub mod families;
pub mod ffcurve;
pub mod numeric;
pub mod poly;

pub use classnum::{class_number, hurwitz, hurwitz_table, DeuringCheck, Discriminant, HurwitzTable};
pub use constants::{
    char_sum_direct, char_sum_local, euler_product, hurwitz_avg, k_direct, kappa, local_factor, local_factor_from_series, pi_half,
    CharSumArgs, CurveKind, EulerProductResult, LocalFactorProfile, Moment,
};
pub use counting::{avg_pair, avg_single, exp_count, isolam_defect, pi_single, CongruenceClass, CountReport, PairMode, TraceSequence};
pub use error::{Error, Result};
pub use families::{ArgSpec, ArgumentSet, CurveFamily, ExponentialFamily, Rational};
pub use ffcurve::{curve_trace, kronecker, CurveCoeffs, PrimeModulus, QuadraticCharacter, TraceValue};
pub use poly::Poly;
