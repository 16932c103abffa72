use std::collections::BTreeMap;
use std::str::FromStr;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use frobstat_core::arith::{primes_up_to, valuation};
use frobstat_core::classnum::deuring_check_all;
use frobstat_core::clt::{moments, moments_from_eigen_table, CoeffMap, EigenvalueTable, MomentMethod, MomentReport, PairFamilySpec, DEFAULT_MOMENT_BUDGET};
use frobstat_core::constants::{hurwitz_avg_bound, local_factor, local_factor_from_series};
use frobstat_core::counting::{avg_pair_grid, avg_single_grid, exp_count_grid, predicted_exp, predicted_pair, predicted_single};
use frobstat_core::families::{is_near_permutation_rational, is_permutation_poly};
use frobstat_core::{
    char_sum_direct, char_sum_local, curve_trace, euler_product, hurwitz, hurwitz_avg, isolam_defect, pi_half, CharSumArgs, CongruenceClass,
    CountReport, CurveCoeffs, CurveKind, Error, Moment, PairMode, PrimeModulus, TraceSequence,
};

use crate::{parse, Check, ClassArgs, CliError, Command, Context, Format, KindArg, MethodArg, MomentArg, Outcome, PairModeArg};

pub(crate) fn dispatch(cmd: &Command, ctx: &Context) -> Result<Outcome, CliError> {
    match cmd {
        Command::Trace { a, b, p, pmax } => trace(ctx, *a, *b, *p, *pmax),
        Command::Hurwitz { n, max } => hurwitz_cmd(ctx, *n, *max),
        Command::DeuringCheck { pmax } => deuring(ctx, *pmax),
        Command::AvgLt { argset, family, tau, seq, x, class, exclude_cm } => {
            avg_lt(ctx, argset, family, *tau, seq.as_deref(), x, class, *exclude_cm)
        }
        Command::AvgLtPair { argset, family1, family2, tau1, seq1, tau2, seq2, x, class, mode } => {
            let seq1 = parse::sequence(seq1.as_deref(), *tau1)?;
            let seq2 = parse::sequence(seq2.as_deref(), *tau2)?;
            avg_lt_pair(ctx, argset, family1, family2, &seq1, &seq2, x, class, *mode)
        }
        Command::ExpCount { argset, h, m, n, b, tau, x, defect_primes } => {
            exp_count_cmd(ctx, argset, h, *m, *n, *b, *tau, x, defect_primes.as_deref())
        }
        Command::PermCheck { poly, denominator, pmax, modulus } => perm_check(ctx, poly, denominator.as_deref(), *pmax, *modulus),
        Command::CharSum { f, g, m, n, tau, class } => char_sum(ctx, *f, *g, *m, *n, *tau, class),
        Command::LocalFactor { kind, p, tau, class, series_exp } => local_factor_cmd(ctx, *kind, *p, *tau, class, *series_exp),
        Command::Constant { kind, tau, class, pmax } => constant(ctx, *kind, *tau, class, *pmax),
        Command::HurwitzAvg { tau, seq, x, class, moment, pmax } => {
            hurwitz_avg_cmd(ctx, *tau, seq.as_deref(), x, class, *moment, *pmax)
        }
        Command::PiHalf { x } => pi_half_cmd(ctx, x),
        Command::CltMoments { phi, psi, a_bound, b_bound, x, r, primes, method, budget } => {
            clt_moments(ctx, phi, psi, *a_bound, *b_bound, *x, *r, primes, *method, *budget)
        }
        Command::CltEigen { table, primes, x, r } => clt_eigen(ctx, table.as_deref(), primes, *x, *r),
        Command::Run { .. } => unreachable!("run is expanded before dispatch"),
    }
}

fn json_payload<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("payload serializes");
    s.push('\n');
    s.into_bytes()
}

fn json_outcome<T: Serialize>(value: &T) -> Outcome {
    Outcome { payload: json_payload(value), checks: Vec::new() }
}

/// Shortest round-trip decimal, empty for non-finite values.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or(String::new(), num)
}

fn ratio(measured: f64, predicted: Option<f64>) -> Option<f64> {
    predicted.filter(|&p| p != 0.0).map(|p| measured / p)
}

fn kind_of(k: KindArg) -> CurveKind {
    match k {
        KindArg::One => CurveKind::One,
        KindArg::Two => CurveKind::Two,
    }
}

fn class_of(c: &ClassArgs) -> Result<CongruenceClass, CliError> {
    parse::class(c.upsilon, c.omega)
}

/// A grid of count rows, as CSV or JSON.
struct GridRow {
    report: CountReport,
    predicted: Option<f64>,
}

fn grid_outcome(ctx: &Context, rows: &[GridRow], with_skipped: bool) -> Result<Outcome, CliError> {
    match ctx.format_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec![
                "x",
                "measured",
                "predicted_main_term",
                "ratio",
                "excluded_cm",
                "excluded_singular",
                "singular_arguments",
                "primes_used",
            ];
            if with_skipped {
                header.push("skipped_primes");
            }
            w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
            for row in rows {
                let r = &row.report;
                let mut rec = vec![
                    r.x.to_string(),
                    r.total.to_string(),
                    opt_num(row.predicted),
                    opt_num(ratio(r.total as f64, row.predicted)),
                    r.excluded_cm.to_string(),
                    r.excluded_singular.to_string(),
                    r.singular_arguments.to_string(),
                    r.primes_used.to_string(),
                ];
                if with_skipped {
                    rec.push(r.skipped_primes.to_string());
                }
                w.write_record(&rec).map_err(|e| CliError::Io(e.to_string()))?;
            }
            let payload = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
            Ok(Outcome { payload, checks: Vec::new() })
        }
        Format::Json => {
            let out: Vec<_> = rows
                .iter()
                .map(|row| {
                    json!({
                        "x": row.report.x,
                        "measured": row.report.total,
                        "predicted_main_term": row.predicted,
                        "ratio": ratio(row.report.total as f64, row.predicted),
                        "excluded_cm": row.report.excluded_cm,
                        "cm_excluded": row.report.cm_excluded,
                        "excluded_singular": row.report.excluded_singular,
                        "singular_arguments": row.report.singular_arguments,
                        "skipped_primes": row.report.skipped_primes,
                        "primes_used": row.report.primes_used,
                    })
                })
                .collect();
            Ok(json_outcome(&out))
        }
    }
}

fn trace(ctx: &Context, a: i64, b: i64, p: u64, pmax: Option<u64>) -> Result<Outcome, CliError> {
    ctx.json_only("trace")?;
    let one = |p: u64| -> Result<Option<i64>, CliError> {
        let pm = PrimeModulus::new(p)?;
        match curve_trace(CurveCoeffs::new(a, b, pm), pm) {
            Ok(t) => Ok(Some(t)),
            Err(Error::Singular(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    let value = match pmax {
        None => {
            let t = one(p)?.ok_or_else(|| CliError::Config(format!("y^2 = x^3 + {a}x + {b} is singular mod {p}")))?;
            json!({ "a": a, "b": b, "p": p, "trace": t })
        }
        Some(pmax) => {
            let primes: Vec<u64> = primes_up_to(pmax).into_iter().filter(|&p| p >= 5).collect();
            let traces: Vec<Option<i64>> = primes.par_iter().map(|&p| one(p)).collect::<Result<_, _>>()?;
            let rows: Vec<_> = primes.iter().zip(&traces).map(|(p, t)| json!({ "p": p, "trace": t })).collect();
            json!({ "a": a, "b": b, "pmax": pmax, "traces": rows })
        }
    };
    Ok(json_outcome(&value))
}

fn hurwitz_cmd(ctx: &Context, n: u64, max: Option<u64>) -> Result<Outcome, CliError> {
    match max {
        None => {
            ctx.json_only("hurwitz --n")?;
            let v = hurwitz(n);
            let h = Ratio::new(v, 12);
            Ok(json_outcome(&json!({ "n": n, "value12": v, "H": format!("{}/{}", h.numer(), h.denom()) })))
        }
        Some(max) => {
            let table = ctx.hurwitz_table(max)?;
            let mut out = String::from("n,value12\n");
            for n in 0..=max {
                out.push_str(&format!("{n},{}\n", table.value12(n)?));
            }
            if ctx.format == Some(Format::Json) {
                let values: Vec<u64> = (0..=max).map(|n| table.value12(n)).collect::<Result<_, _>>()?;
                return Ok(json_outcome(&json!({ "max": max, "value12": values })));
            }
            Ok(Outcome { payload: out.into_bytes(), checks: Vec::new() })
        }
    }
}

fn deuring(ctx: &Context, pmax: u64) -> Result<Outcome, CliError> {
    ctx.json_only("deuring-check")?;
    if pmax < 5 {
        return Err(CliError::Config("deuring-check needs pmax >= 5".into()));
    }
    let primes: Vec<u64> = primes_up_to(pmax).into_iter().filter(|&p| p >= 5).collect();
    let per_prime = primes.par_iter().map(|&p| deuring_check_all(p)).collect::<Result<Vec<_>, _>>()?;
    let identities: usize = per_prime.iter().map(Vec::len).sum();
    let first_bad = per_prime.iter().flatten().find(|c| !c.holds);
    let summary = match first_bad {
        None => "all identities hold".to_string(),
        Some(c) => format!("counterexample at p = {}, tau = {}", c.p, c.tau),
    };
    let value = json!({
        "pmax": pmax,
        "primes_checked": primes.len(),
        "identities_checked": identities,
        "all_hold": first_bad.is_none(),
        "summary": summary,
        "counterexample": first_bad,
    });
    let check = Check { name: "deuring-check".into(), passed: first_bad.is_none(), detail: summary };
    Ok(Outcome { payload: json_payload(&value), checks: vec![check] })
}

#[allow(clippy::too_many_arguments)]
fn avg_lt(
    ctx: &Context,
    argset: &str,
    family: &str,
    tau: Option<i64>,
    seq: Option<&str>,
    x: &str,
    class: &ClassArgs,
    exclude_cm: bool,
) -> Result<Outcome, CliError> {
    let s = parse::argset(argset)?;
    let fam = parse::family(family)?;
    let seq = parse::sequence(seq, tau)?;
    let xs = parse::grid(x)?;
    let cc = class_of(class)?;
    let reports = avg_single_grid(&s, &fam, &seq, &xs, &cc, exclude_cm)?;
    let table = ctx.hurwitz_table(4 * xs[xs.len() - 1])?;
    let rows = reports
        .into_iter()
        .map(|report| {
            let predicted = predicted_single(s.cardinality(), &seq, report.x, &cc, &table)?;
            Ok(GridRow { report, predicted: Some(predicted) })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    grid_outcome(ctx, &rows, false)
}

#[allow(clippy::too_many_arguments)]
fn avg_lt_pair(
    ctx: &Context,
    argset: &str,
    family1: &str,
    family2: &str,
    seq1: &TraceSequence,
    seq2: &TraceSequence,
    x: &str,
    class: &ClassArgs,
    mode: PairModeArg,
) -> Result<Outcome, CliError> {
    let s = parse::argset(argset)?;
    let f1 = parse::family(family1)?;
    let f2 = parse::family(family2)?;
    let xs = parse::grid(x)?;
    let cc = class_of(class)?;
    let mode = match mode {
        PairModeArg::Independent => PairMode::Independent,
        PairModeArg::Diagonal => PairMode::Diagonal,
    };
    let reports = avg_pair_grid(&s, &f1, &f2, seq1, seq2, &xs, &cc, mode)?;
    let table = ctx.hurwitz_table(4 * xs[xs.len() - 1])?;
    let rows = reports
        .into_iter()
        .map(|report| {
            // The diagonal sum has no main term to compare against.
            let predicted = match mode {
                PairMode::Independent => Some(predicted_pair(s.cardinality(), seq1, seq2, report.x, &cc, &table)?),
                PairMode::Diagonal => None,
            };
            Ok(GridRow { report, predicted })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    grid_outcome(ctx, &rows, false)
}

#[allow(clippy::too_many_arguments)]
fn exp_count_cmd(
    ctx: &Context,
    argset: &str,
    h: &str,
    m: u32,
    n: u32,
    b: i64,
    tau: i64,
    x: &str,
    defect_primes: Option<&str>,
) -> Result<Outcome, CliError> {
    let s = parse::argset(argset)?;
    let fam = parse::exp_family(h, m, n, b)?;
    let xs = parse::grid(x)?;
    let xmax = xs[xs.len() - 1];
    let reports = exp_count_grid(&s, &fam, tau, &xs)?;
    let mut bound = 4 * xmax;
    let defect_ps: Vec<u64> = match defect_primes {
        None => Vec::new(),
        Some(list) => list
            .split(',')
            .map(|t| t.trim().parse::<u64>().map_err(|_| CliError::Config(format!("defect-primes: bad prime {t:?}"))))
            .collect::<Result<_, _>>()?,
    };
    bound = bound.max(defect_ps.iter().map(|&p| 4 * p).max().unwrap_or(0));
    let table = ctx.hurwitz_table(bound)?;
    let rows = reports
        .into_iter()
        .map(|report| {
            let predicted = predicted_exp(s.cardinality(), &fam, tau, report.x, &table)?;
            Ok(GridRow { report, predicted: Some(predicted) })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if defect_ps.is_empty() {
        return grid_outcome(ctx, &rows, true);
    }
    // Defects do not fit the grid columns, so the whole record becomes JSON.
    if ctx.format == Some(Format::Csv) {
        return Err(CliError::Config("--defect-primes output is JSON only".into()));
    }
    let defects = defect_ps.par_iter().map(|&p| isolam_defect(&fam, tau, p, &table)).collect::<Result<Vec<_>, _>>()?;
    let json_ctx = Context { cache: None, format: Some(Format::Json) };
    let counts: serde_json::Value = serde_json::from_slice(&grid_outcome(&json_ctx, &rows, true)?.payload).expect("own JSON");
    let worst = defects.iter().map(|d| d.defect_over_p.abs()).fold(0.0, f64::max);
    Ok(json_outcome(&json!({ "counts": counts, "defects": defects, "max_abs_defect_over_p": worst })))
}

#[derive(Serialize)]
struct PermRow {
    p: u64,
    residue: u64,
    permutes: Option<bool>,
    note: Option<&'static str>,
}

fn perm_check(ctx: &Context, poly: &str, denominator: Option<&str>, pmax: u64, modulus: u64) -> Result<Outcome, CliError> {
    ctx.json_only("perm-check")?;
    if modulus == 0 {
        return Err(CliError::Config("modulus must be at least 1".into()));
    }
    let q = parse::poly("poly", poly)?;
    let r = denominator.map(|d| parse::poly("denominator", d)).transpose()?;
    let primes = primes_up_to(pmax);
    let rows: Vec<PermRow> = primes
        .par_iter()
        .map(|&p| {
            let (permutes, note) = match &r {
                None => (Some(is_permutation_poly(&q, p)), None),
                Some(r) => match is_near_permutation_rational(&q, r, p) {
                    Ok(v) => (Some(v), None),
                    Err(Error::Degenerate { .. }) => (None, Some("degenerate")),
                    Err(_) => (None, Some("denominator vanishes")),
                },
            };
            PermRow { p, residue: p % modulus, permutes, note }
        })
        .collect();
    let mut by_residue: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for row in &rows {
        let e = by_residue.entry(row.residue).or_default();
        e.0 += 1;
        e.1 += u64::from(row.permutes == Some(true));
    }
    let summary: Vec<_> =
        by_residue.iter().map(|(res, (n, k))| json!({ "residue": res, "primes": n, "permuting": k })).collect();
    let permuting: Vec<u64> = rows.iter().filter(|r| r.permutes == Some(true)).map(|r| r.p).collect();
    Ok(json_outcome(&json!({
        "poly": q.to_string(),
        "denominator": r.map(|r| r.to_string()),
        "pmax": pmax,
        "modulus": modulus,
        "per_prime": rows,
        "by_residue": summary,
        "permuting_primes": permuting,
    })))
}

/// The single prime supporting f·g·m·n, if there is at most one.
fn single_prime_support(vals: [u64; 4]) -> Option<u64> {
    let mut support: Vec<u64> = Vec::new();
    for v in vals {
        for (p, _) in frobstat_core::arith::factorize(v) {
            if !support.contains(&p) {
                support.push(p);
            }
        }
    }
    match support.len() {
        0 => Some(2),
        1 => Some(support[0]),
        _ => None,
    }
}

fn char_sum(ctx: &Context, f: u64, g: u64, m: u64, n: u64, tau: i64, class: &ClassArgs) -> Result<Outcome, CliError> {
    ctx.json_only("char-sum")?;
    let cc = class_of(class)?;
    let value = char_sum_direct(&CharSumArgs { f, g, m, n, tau, cc })?;
    let mut checks = Vec::new();
    let local = match single_prime_support([f, g, m, n]) {
        Some(p) => {
            let v = |x: u64| valuation(x as i128, p).unwrap_or(0);
            let (i, j, k, l) = (v(m), v(n), v(f), v(g));
            let c = char_sum_local(p, i, j, k, l, tau, &cc)?;
            checks.push(Check {
                name: "char-sum closed form".into(),
                passed: c == value as i128,
                detail: format!("direct {value}, closed form {c} at p = {p}"),
            });
            Some(json!({ "p": p, "i": i, "j": j, "k": k, "l": l, "value": c, "agrees": c == value as i128 }))
        }
        None => None,
    };
    let out = json!({
        "inputs": { "f": f, "g": g, "m": m, "n": n, "tau": tau, "upsilon": cc.upsilon, "omega": cc.omega },
        "value": value,
        "local": local,
    });
    Ok(Outcome { payload: json_payload(&out), checks })
}

fn local_factor_cmd(
    ctx: &Context,
    kind: KindArg,
    p: u64,
    tau: i64,
    class: &ClassArgs,
    series_exp: Option<u32>,
) -> Result<Outcome, CliError> {
    ctx.json_only("local-factor")?;
    let cc = class_of(class)?;
    let kind = kind_of(kind);
    let prof = local_factor(kind, p, tau, &cc)?;
    let series = match series_exp {
        None => None,
        Some(e) => {
            let s = local_factor_from_series(kind, p, tau, &cc, e)?;
            let gap = num_traits::ToPrimitive::to_f64(&(&prof.lambda - &s)).unwrap_or(f64::NAN);
            Some(json!({
                "max_exp": e,
                "value": format!("{}/{}", s.numer(), s.denom()),
                "value_f64": num_traits::ToPrimitive::to_f64(&s),
                "truncation": gap,
            }))
        }
    };
    let out = json!({
        "inputs": { "kind": kind, "p": p, "tau": tau, "upsilon": cc.upsilon, "omega": cc.omega },
        "value": prof,
        "value_f64": num_traits::ToPrimitive::to_f64(&prof.lambda),
        "branch": prof.branch,
        "series": series,
    });
    Ok(json_outcome(&out))
}

fn constant(ctx: &Context, kind: KindArg, tau: i64, class: &ClassArgs, pmax: u64) -> Result<Outcome, CliError> {
    ctx.json_only("constant")?;
    let cc = class_of(class)?;
    let r = euler_product(kind_of(kind), tau, &cc, pmax)?;
    let out = json!({
        "inputs": { "kind": r.kind, "tau": tau, "upsilon": cc.upsilon, "omega": cc.omega, "pmax": pmax },
        "value": r.constant,
        "constant_error": r.constant_error,
        "truncation": { "pmax": r.p_max, "extra_primes": r.extra_primes, "partial_product": r.partial_product, "partial_product_lo": r.partial_product_lo },
        "tail": r.tail_estimate,
        "envelope_constant": r.envelope_constant,
    });
    Ok(json_outcome(&out))
}

/// (8/3π)·x^{1/4}/log x, the extremal main term.
pub(crate) fn extremal_main_term(x: f64) -> f64 {
    8.0 / (3.0 * std::f64::consts::PI) * x.powf(0.25) / x.ln()
}

fn hurwitz_avg_cmd(
    ctx: &Context,
    tau: Option<i64>,
    seq: Option<&str>,
    x: &str,
    class: &ClassArgs,
    moment: MomentArg,
    pmax: u64,
) -> Result<Outcome, CliError> {
    let seq = parse::sequence(seq, tau)?;
    let xs = parse::grid(x)?;
    let cc = class_of(class)?;
    let moment = match moment {
        MomentArg::First => Moment::First,
        MomentArg::Second => Moment::Second,
    };
    let table = ctx.hurwitz_table(hurwitz_avg_bound(&seq, xs[xs.len() - 1])?)?;
    let constant = match (&seq, moment) {
        (TraceSequence::Constant(t), Moment::First) if t % 2 != 0 => Some(euler_product(CurveKind::One, *t, &cc, pmax)?.constant),
        _ => None,
    };
    let extremal = matches!(seq, TraceSequence::ExtremalPlus | TraceSequence::ExtremalMinus | TraceSequence::ExtremalBoth);
    let mut rows = Vec::new();
    for &x in &xs {
        let avg = hurwitz_avg(&seq, x, &cc, moment, &table)?;
        let predicted = match (constant, extremal && moment == Moment::First && cc.omega == 1) {
            (Some(c), _) => Some(c * pi_half(x as f64)?),
            (None, true) if x >= 3 => Some(extremal_main_term(x as f64)),
            _ => None,
        };
        rows.push((x, avg, predicted));
    }
    match ctx.format_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("x,measured,predicted_main_term,ratio,primes_used\n");
            for (x, avg, pred) in &rows {
                out.push_str(&format!(
                    "{x},{},{},{},{}\n",
                    num(avg.value),
                    opt_num(*pred),
                    opt_num(ratio(avg.value, *pred)),
                    avg.primes_used
                ));
            }
            Ok(Outcome { payload: out.into_bytes(), checks: Vec::new() })
        }
        Format::Json => {
            let out: Vec<_> = rows
                .iter()
                .map(|(x, avg, pred)| {
                    json!({ "x": x, "measured": avg.value, "predicted_main_term": pred, "ratio": ratio(avg.value, *pred),
                            "primes_used": avg.primes_used, "start_prime": avg.start_prime })
                })
                .collect();
            Ok(json_outcome(&json!({ "constant": constant, "rows": out })))
        }
    }
}

fn pi_half_cmd(ctx: &Context, x: &str) -> Result<Outcome, CliError> {
    let xs = parse::grid(x)?;
    let vals: Vec<f64> = xs.iter().map(|&x| pi_half(x as f64)).collect::<Result<_, _>>()?;
    match ctx.format_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("x,pi_half\n");
            for (x, v) in xs.iter().zip(&vals) {
                out.push_str(&format!("{x},{}\n", num(*v)));
            }
            Ok(Outcome { payload: out.into_bytes(), checks: Vec::new() })
        }
        Format::Json => Ok(json_outcome(&json!({ "x": xs, "pi_half": vals }))),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct MomentsOut<'a> {
    x: u64,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    a: Option<u64>,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    b: Option<u64>,
    r: &'a [u32],
    #[serde(rename = "V")]
    v: &'a [f64],
    gaussian_target: &'a [u128],
    pair_count: u64,
    excluded_isomorphic: u64,
    excluded_singular: u64,
    curves: u64,
    primes_used: u64,
    method: MomentMethod,
}

fn moments_out(rep: &MomentReport, a: Option<u64>, b: Option<u64>) -> Outcome {
    json_outcome(&MomentsOut {
        x: rep.x,
        a,
        b,
        r: &rep.r,
        v: &rep.v,
        gaussian_target: &rep.gaussian_target,
        pair_count: rep.pair_count,
        excluded_isomorphic: rep.excluded_isomorphic,
        excluded_singular: rep.excluded_singular,
        curves: rep.curves,
        primes_used: rep.primes_used,
        method: rep.method,
    })
}

#[allow(clippy::too_many_arguments)]
fn clt_moments(
    ctx: &Context,
    phi: &str,
    psi: &str,
    a_bound: u64,
    b_bound: u64,
    x: u64,
    r: u32,
    primes: &str,
    method: MethodArg,
    budget: Option<u128>,
) -> Result<Outcome, CliError> {
    ctx.json_only("clt-moments")?;
    if r == 0 {
        return Err(CliError::Config("r must be at least 1".into()));
    }
    let spec = PairFamilySpec {
        phi: CoeffMap::from_str(phi).map_err(|e| CliError::Config(format!("phi: {e}")))?,
        psi: CoeffMap::from_str(psi).map_err(|e| CliError::Config(format!("psi: {e}")))?,
        a_bound,
        b_bound,
        primes: parse::prime_set(primes)?,
    };
    let method = match method {
        MethodArg::Auto => MomentMethod::Auto,
        MethodArg::PerPair => MomentMethod::PerPair,
        MethodArg::PowerSum => MomentMethod::PowerSum,
    };
    let rep = moments(&spec, x, r, method, budget.unwrap_or(DEFAULT_MOMENT_BUDGET))?;
    Ok(moments_out(&rep, Some(a_bound), Some(b_bound)))
}

fn clt_eigen(ctx: &Context, table: Option<&std::path::Path>, primes: &str, x: u64, r: u32) -> Result<Outcome, CliError> {
    ctx.json_only("clt-eigen")?;
    let Some(path) = table else {
        return Err(CliError::Config("clt-eigen needs --table PATH".into()));
    };
    if r == 0 {
        return Err(CliError::Config("r must be at least 1".into()));
    }
    let t = EigenvalueTable::from_path(path)?;
    let rep = moments_from_eigen_table(&t, &parse::prime_set(primes)?, x, r)?;
    Ok(moments_out(&rep, None, None))
}
