//! The `frobstat` command line: argument parsing, dispatch and output.

mod commands;
mod config;
pub mod parse;
mod selftest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use frobstat_core::classnum::DEFAULT_TABLE_CAP;
use frobstat_core::HurwitzTable;

pub const CACHE_DIR_ENV: &str = "FROBSTAT_CACHE_DIR";
pub const HURWITZ_CACHE_FILE: &str = "hurwitz.cache";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Oracle(String),
    Io(String),
}

impl std::error::Error for CliError {}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Oracle(m) => write!(f, "oracle mismatch: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Oracle(_) => 3,
        }
    }
}

impl From<frobstat_core::Error> for CliError {
    fn from(e: frobstat_core::Error) -> Self {
        match e {
            frobstat_core::Error::Io(m) => CliError::Io(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "frobstat", version, about = "Average distributions of Frobenius traces, measured")]
pub struct Cli {
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Hurwitz table cache file; defaults to $FROBSTAT_CACHE_DIR/hurwitz.cache when that is set.
    #[arg(long, global = true)]
    pub hurwitz_cache: Option<PathBuf>,
    /// Write the payload here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Write a JSON run manifest here.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Run the oracle comparisons of the command's module (all modules without a command).
    #[arg(long, global = true)]
    pub selftest: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MomentArg {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairModeArg {
    Independent,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    PerPair,
    PowerSum,
}

#[derive(Debug, Clone, Args)]
pub struct ClassArgs {
    /// Residue υ of the prime congruence p ≡ υ mod ω.
    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub upsilon: i64,
    #[arg(long, default_value_t = 1)]
    pub omega: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace of Frobenius of y² = x³ + ax + b at one prime or all primes up to a bound.
    Trace {
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        a: i64,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        b: i64,
        #[arg(long, default_value_t = 5, conflicts_with = "pmax")]
        p: u64,
        #[arg(long)]
        pmax: Option<u64>,
    },
    /// Hurwitz class number H(n), or the table up to a bound.
    Hurwitz {
        #[arg(long, default_value_t = 3, conflicts_with = "max")]
        n: u64,
        #[arg(long)]
        max: Option<u64>,
    },
    /// Exhaustive check of #{(a,b): a_p = τ} = (p−1)/2·H(4p−τ²) for 5 <= p <= pmax.
    DeuringCheck {
        #[arg(long, default_value_t = 200)]
        pmax: u64,
    },
    /// Family average Σ_{t ∈ S} π_{E(t)}(𝔄; x) over an x grid.
    AvgLt {
        #[arg(long, default_value = "integers:100")]
        argset: String,
        #[arg(long, default_value = "f=0;g=Z")]
        family: String,
        #[arg(long, allow_negative_numbers = true)]
        tau: Option<i64>,
        #[arg(long)]
        seq: Option<String>,
        #[arg(long, default_value = "1000,10000")]
        x: String,
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        exclude_cm: bool,
    },
    /// Pair average Σ_{t₁, t₂ ∈ S} #{p <= x : a_p(E₁(t₁)) = 𝔄₁(p), a_p(E₂(t₂)) = 𝔄₂(p)}.
    AvgLtPair {
        #[arg(long, default_value = "integers:30")]
        argset: String,
        #[arg(long, default_value = "f=Z;g=1")]
        family1: String,
        #[arg(long, default_value = "f=1;g=Z")]
        family2: String,
        #[arg(long, allow_negative_numbers = true)]
        tau1: Option<i64>,
        #[arg(long)]
        seq1: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        tau2: Option<i64>,
        #[arg(long)]
        seq2: Option<String>,
        #[arg(long, default_value = "1000,10000")]
        x: String,
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, value_enum, default_value_t = PairModeArg::Independent)]
        mode: PairModeArg,
    },
    /// Counts for an exponential family with j(Z) = Z·b^Z.
    ExpCount {
        #[arg(long, default_value = "integers:100")]
        argset: String,
        #[arg(long, default_value = "1")]
        h: String,
        #[arg(long, default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 2, allow_negative_numbers = true)]
        b: i64,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        tau: i64,
        #[arg(long, default_value = "1000,10000")]
        x: String,
        /// Also report the exhaustive residue count against (p−1)·H(4p−τ²) at these primes.
        #[arg(long)]
        defect_primes: Option<String>,
    },
    /// Which primes make q (or q/r) a permutation (near-permutation) of F_p.
    PermCheck {
        #[arg(long, default_value = "Z^5+5Z^3+5Z")]
        poly: String,
        #[arg(long)]
        denominator: Option<String>,
        #[arg(long, default_value_t = 200)]
        pmax: u64,
        /// Summarize by residue of p modulo this.
        #[arg(long, default_value_t = 5)]
        modulus: u64,
    },
    /// The character sum c_{f,g}(m,n) by direct summation, and the closed form when local.
    CharSum {
        #[arg(long, default_value_t = 1)]
        f: u64,
        #[arg(long, default_value_t = 1)]
        g: u64,
        #[arg(long, default_value_t = 2)]
        m: u64,
        #[arg(long, default_value_t = 2)]
        n: u64,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        tau: i64,
        #[command(flatten)]
        class: ClassArgs,
    },
    /// Local Euler factor Λ(p) with its branch.
    LocalFactor {
        #[arg(long, value_enum, default_value_t = KindArg::One)]
        kind: KindArg,
        #[arg(long, default_value_t = 2)]
        p: u64,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        tau: i64,
        #[command(flatten)]
        class: ClassArgs,
        /// Also sum the local series with all exponents up to this.
        #[arg(long)]
        series_exp: Option<u32>,
    },
    /// The constant C by a truncated Euler product with tail estimate.
    Constant {
        #[arg(long, value_enum, default_value_t = KindArg::One)]
        kind: KindArg,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        tau: i64,
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, default_value_t = 10_000)]
        pmax: u64,
    },
    /// Σ_{5 <= p <= x} H(4p − 𝔄(p)²)/p against its predicted main term.
    HurwitzAvg {
        #[arg(long, allow_negative_numbers = true)]
        tau: Option<i64>,
        #[arg(long)]
        seq: Option<String>,
        #[arg(long, default_value = "10000,100000")]
        x: String,
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, value_enum, default_value_t = MomentArg::First)]
        moment: MomentArg,
        /// Euler product cutoff for the predicted constant.
        #[arg(long, default_value_t = 10_000)]
        pmax: u64,
    },
    /// π_{1/2}(x) = ∫₂ˣ dt/(2√t log t).
    PiHalf {
        #[arg(long, default_value = "1000,1000000")]
        x: String,
    },
    /// Moments V_{x,r} of normalized pair correlations over a box of curves.
    CltMoments {
        #[arg(long, default_value = "identity")]
        phi: String,
        #[arg(long, default_value = "identity")]
        psi: String,
        #[arg(long = "A", default_value_t = 5)]
        a_bound: u64,
        #[arg(long = "B", default_value_t = 5)]
        b_bound: u64,
        #[arg(long, default_value_t = 200)]
        x: u64,
        #[arg(long, default_value_t = 3)]
        r: u32,
        #[arg(long, default_value = "all")]
        primes: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        /// Upper bound on per-pair work, pairs × primes.
        #[arg(long)]
        budget: Option<u128>,
    },
    /// The same moments over an eigenvalue table form_label,p,lambda_normalized.
    CltEigen {
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, default_value = "all")]
        primes: String,
        #[arg(long, default_value_t = 1000)]
        x: u64,
        #[arg(long, default_value_t = 4)]
        r: u32,
    },
    /// Run a command described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Trace { .. } => "trace",
            Command::Hurwitz { .. } => "hurwitz",
            Command::DeuringCheck { .. } => "deuring-check",
            Command::AvgLt { .. } => "avg-lt",
            Command::AvgLtPair { .. } => "avg-lt-pair",
            Command::ExpCount { .. } => "exp-count",
            Command::PermCheck { .. } => "perm-check",
            Command::CharSum { .. } => "char-sum",
            Command::LocalFactor { .. } => "local-factor",
            Command::Constant { .. } => "constant",
            Command::HurwitzAvg { .. } => "hurwitz-avg",
            Command::PiHalf { .. } => "pi-half",
            Command::CltMoments { .. } => "clt-moments",
            Command::CltEigen { .. } => "clt-eigen",
            Command::Run { .. } => "run",
        }
    }
}

/// One oracle comparison made while running.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The payload of one command plus the checks it made along the way.
#[derive(Debug, Default)]
pub struct Outcome {
    pub payload: Vec<u8>,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    fn exit_code(&self) -> i32 {
        if self.failed().is_empty() {
            0
        } else {
            3
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    argv: &'a [String],
    command: &'a str,
    threads: usize,
    output: String,
    payload_bytes: usize,
    wall_time_seconds: f64,
    checks: &'a [Check],
    exit_code: i32,
}

/// Shared state for one invocation.
pub(crate) struct Context {
    pub cache: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Context {
    /// A Hurwitz table holding at least n, from the cache when possible.
    pub fn hurwitz_table(&self, n: u64) -> Result<HurwitzTable, CliError> {
        let n = n.max(16);
        match &self.cache {
            Some(path) => Ok(HurwitzTable::load_or_build(path, n, DEFAULT_TABLE_CAP)?),
            None => Ok(frobstat_core::hurwitz_table(n, DEFAULT_TABLE_CAP)?),
        }
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    pub fn json_only(&self, cmd: &str) -> Result<(), CliError> {
        match self.format {
            Some(Format::Csv) => Err(CliError::Config(format!("{cmd} emits JSON only"))),
            _ => Ok(()),
        }
    }
}

fn cache_path(explicit: &Option<PathBuf>) -> Option<PathBuf> {
    explicit.clone().or_else(|| std::env::var_os(CACHE_DIR_ENV).map(|d| Path::new(&d).join(HURWITZ_CACHE_FILE)))
}

fn outer_globals(cli: &Cli) -> Vec<(String, Option<String>)> {
    let mut g = Vec::new();
    let path = |p: &PathBuf| Some(p.display().to_string());
    if let Some(t) = cli.threads {
        g.push(("threads".into(), Some(t.to_string())));
    }
    if let Some(p) = &cli.hurwitz_cache {
        g.push(("hurwitz_cache".into(), path(p)));
    }
    if let Some(p) = &cli.output {
        g.push(("output".into(), path(p)));
    }
    if let Some(p) = &cli.manifest {
        g.push(("manifest".into(), path(p)));
    }
    if let Some(f) = cli.format {
        let name = match f {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        g.push(("format".into(), Some(name.into())));
    }
    if cli.selftest {
        g.push(("selftest".into(), None));
    }
    g
}

/// Parses and runs one invocation; returns the process exit code.
pub fn main_with(argv: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{rendered}");
            } else {
                let _ = write!(stderr, "{rendered}");
            }
            return code;
        }
    };
    if let Some(Command::Run { config }) = &cli.command {
        return match config::expand(config, &argv[0], &outer_globals(&cli)) {
            Ok(inner) => main_with(inner, stdout, stderr),
            Err(e) => {
                let _ = writeln!(stderr, "frobstat: {e}");
                e.exit_code()
            }
        };
    }
    let start = Instant::now();
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        let _ = writeln!(stderr, "frobstat: config error: --threads must be at least 1");
        return 2;
    }
    let ctx = Context { cache: cache_path(&cli.hurwitz_cache), format: cli.format };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "frobstat: {e}");
            return 1;
        }
    };
    let result = pool.install(|| {
        if cli.selftest {
            selftest::run(cli.command.as_ref().map(Command::name))
        } else {
            match &cli.command {
                Some(cmd) => commands::dispatch(cmd, &ctx),
                None => Err(CliError::Config("no command given (see --help)".into())),
            }
        }
    });
    let (outcome, code) = match result {
        Ok(o) => {
            for c in o.failed() {
                let _ = writeln!(stderr, "frobstat: oracle mismatch in {}: {}", c.name, c.detail);
            }
            let code = o.exit_code();
            (o, code)
        }
        Err(e) => {
            let _ = writeln!(stderr, "frobstat: {e}");
            return e.exit_code();
        }
    };
    let target = match &cli.output {
        Some(path) => match std::fs::write(path, &outcome.payload) {
            Ok(()) => path.display().to_string(),
            Err(e) => {
                let _ = writeln!(stderr, "frobstat: io error: {}: {e}", path.display());
                return 1;
            }
        },
        None => {
            if stdout.write_all(&outcome.payload).is_err() {
                return 1;
            }
            "stdout".to_string()
        }
    };
    if let Some(path) = &cli.manifest {
        let name = if cli.selftest { "selftest" } else { cli.command.as_ref().map_or("", Command::name) };
        let m = Manifest {
            tool: "frobstat",
            version: env!("CARGO_PKG_VERSION"),
            argv: &argv,
            command: name,
            threads,
            output: target,
            payload_bytes: outcome.payload.len(),
            wall_time_seconds: start.elapsed().as_secs_f64(),
            checks: &outcome.checks,
            exit_code: code,
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        if let Err(e) = std::fs::write(path, text + "\n") {
            let _ = writeln!(stderr, "frobstat: io error: {}: {e}", path.display());
            return 1;
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let argv = std::iter::once("frobstat").chain(args.iter().copied()).map(String::from).collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = main_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(run(&["--help"]).0, 0);
        let (code, out, _) = run(&["--version"]);
        assert_eq!(code, 0);
        assert!(out.contains(env!("CARGO_PKG_VERSION")));
    }

    #[test]
    fn bad_input_exits_two() {
        for args in [
            &["avg-lt", "--x", "10000,1000"][..],
            &["avg-lt", "--tau", "1", "--seq", "extremal-plus"],
            &["hurwitz-avg", "--omega", "0"],
            &["constant", "--tau", "2"],
            &["trace", "--a", "0", "--b", "0", "--p", "7"],
            &["--threads", "0", "pi-half"],
            &["no-such-command"],
            &[],
        ] {
            let (code, _, err) = run(args);
            assert_eq!(code, 2, "{args:?}: {err}");
            assert!(!err.is_empty());
        }
    }

    #[test]
    fn failed_checks_exit_three() {
        let check = |passed| Check { name: "x".into(), passed, detail: String::new() };
        assert_eq!(Outcome { payload: vec![], checks: vec![check(true)] }.exit_code(), 0);
        assert_eq!(Outcome { payload: vec![], checks: vec![check(true), check(false)] }.exit_code(), 3);
        assert_eq!(CliError::Oracle("x".into()).exit_code(), 3);
    }

    #[test]
    fn unreadable_inputs_are_config_errors() {
        let (code, _, err) = run(&["hurwitz-avg", "--seq", "custom:/nonexistent/seq.csv", "--x", "1000"]);
        assert_eq!(code, 2);
        assert!(err.contains("seq"), "{err}");
    }

    #[test]
    fn grid_commands_emit_one_row_per_x() {
        let (code, out, err) = run(&["avg-lt", "--argset", "integers:30", "--tau", "0", "--x", "100,200,300"]);
        assert_eq!(code, 0, "{err}");
        let mut lines = out.lines();
        assert!(lines.next().unwrap().starts_with("x,measured,predicted_main_term,ratio"));
        assert_eq!(lines.count(), 3);
        let (code, out, _) = run(&["--format", "json", "pi-half", "--x", "1e3,1e4"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["pi_half"].as_array().map(Vec::len), Some(2));
    }

    #[test]
    fn selftest_passes() {
        let (code, out, err) = run(&["--selftest"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.lines().count() > 10 && !out.contains("FAIL"));
        let (code, out, _) = run(&["--selftest", "char-sum"]);
        assert_eq!(code, 0);
        assert!(out.lines().all(|l| l.starts_with("selftest constants/")), "{out}");
    }

    #[test]
    fn run_config_matches_direct_invocation() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("exp.toml");
        std::fs::write(
            &cfg,
            "command = \"avg-lt\"\nthreads = 2\n[args]\nargset = \"integers:20\"\nfamily = { f = \"Z\", g = \"1\" }\nx = [100, 400]\ntau = 1\n",
        )
        .unwrap();
        let via_config = run(&["run", "--config", cfg.to_str().unwrap()]);
        let direct = run(&["--threads", "2", "avg-lt", "--argset", "integers:20", "--family", "f=Z;g=1", "--x", "100,400", "--tau", "1"]);
        assert_eq!(via_config.0, 0, "{}", via_config.2);
        assert_eq!(via_config.1, direct.1);

        std::fs::write(&cfg, "command = \"avg-lt\"\n[args]\nx = \"300,200\"\n").unwrap();
        assert_eq!(run(&["run", "--config", cfg.to_str().unwrap()]).0, 2);
        std::fs::write(&cfg, "command = \"pi-half\"\n[args]\nx = [1.5]\n").unwrap();
        let (code, _, err) = run(&["run", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(err.contains("args.x"), "{err}");
    }

    #[test]
    fn output_and_manifest_files() {
        let dir = tempfile::tempdir().unwrap();
        let out_path = dir.path().join("out.json");
        let manifest = dir.path().join("manifest.json");
        let (code, stdout, err) = run(&[
            "-o",
            out_path.to_str().unwrap(),
            "--manifest",
            manifest.to_str().unwrap(),
            "deuring-check",
            "--pmax",
            "50",
        ]);
        assert_eq!(code, 0, "{err}");
        assert!(stdout.is_empty());
        let payload = std::fs::read(&out_path).unwrap();
        let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
        assert_eq!(m["command"], "deuring-check");
        assert_eq!(m["exit_code"], 0);
        assert_eq!(m["payload_bytes"], payload.len());
        assert!(m["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    }

    #[test]
    fn explicit_cache_is_created_and_reused() {
        let dir = tempfile::tempdir().unwrap();
        let cache = dir.path().join("h.cache");
        let args = ["--hurwitz-cache", cache.to_str().unwrap(), "hurwitz-avg", "--tau", "1", "--x", "2000,5000"];
        let first = run(&args);
        assert_eq!(first.0, 0, "{}", first.2);
        assert!(std::fs::metadata(&cache).unwrap().len() > 0);
        assert_eq!(run(&args).1, first.1);
    }

    #[test]
    fn cache_dir_from_environment() {
        let dir = tempfile::tempdir().unwrap();
        std::env::set_var(CACHE_DIR_ENV, dir.path());
        let from_env = cache_path(&None);
        std::env::remove_var(CACHE_DIR_ENV);
        assert_eq!(from_env, Some(dir.path().join(HURWITZ_CACHE_FILE)));
        let explicit = PathBuf::from("/tmp/elsewhere");
        assert_eq!(cache_path(&Some(explicit.clone())), Some(explicit));
    }
}
