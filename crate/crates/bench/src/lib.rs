//! Fixtures shared by the criterion benches.

use frobstat_core::families::build_argset;
use frobstat_core::{ArgSpec, ArgumentSet, CurveFamily};

pub fn family(f: &str, g: &str) -> CurveFamily {
    CurveFamily::parse(f, g).expect("bench family parses")
}

pub fn farey(n: u64) -> ArgumentSet {
    build_argset(&ArgSpec::Farey(n), 1 << 24).expect("bench argset builds")
}
