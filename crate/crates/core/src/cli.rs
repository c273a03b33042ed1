//! Command-line surface: configuration resolution, the six subcommands, and
//! CSV/SVG emission for the prediction-versus-count comparison.
//!
//! Configuration precedence is flags > environment (`FROBTRACE_*` prefix) >
//! config file (`key = value` lines, path from `FROBTRACE_CONFIG` or
//! `./frobtrace.conf`) > built-in defaults.

use crate::curves::{cache, serre_family_check, sweep, CurveSpec, TraceHistogram};
use crate::exceptional::{exceptional_factor, m_at, SerrePairProfile};
use crate::matcount::{universal_factor, universal_product};
use crate::satotate::{predict_value, sato_tate_factor, SatoTate};
use clap::{Args, Parser, Subcommand};
use num::ToPrimitive;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COMPUTE: i32 = 2;
pub const EXIT_ORACLE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Compute(String),
    #[error("oracle mismatch")]
    OracleMismatch,
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => EXIT_USAGE,
            RunError::Compute(_) => EXIT_COMPUTE,
            RunError::OracleMismatch => EXIT_ORACLE,
        }
    }
}

fn compute<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Compute(e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "frobtrace",
    about = "Fixed-trace prime counts and density constants for products of elliptic curves",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct PairArgs {
    /// Family parameters l1 l2 for the pair y^2+xy = x^3+l1, y^2+xy = x^3+l2
    #[arg(long, num_args = 2, value_names = ["L1", "L2"], conflicts_with_all = ["curve1", "curve2"])]
    family: Option<Vec<u64>>,
    /// First curve as a1,a2,a3,a4,a6
    #[arg(long, requires = "curve2")]
    curve1: Option<String>,
    /// Second curve as a1,a2,a3,a4,a6
    #[arg(long, requires = "curve1")]
    curve2: Option<String>,
    /// Attest that the pair is a Serre pair (required outside the certified family)
    #[arg(long)]
    attest_serre_pair: bool,
}

impl PairArgs {
    fn curves(&self) -> Result<(CurveSpec, CurveSpec), RunError> {
        match (&self.family, &self.curve1, &self.curve2) {
            (Some(f), None, None) => Ok((CurveSpec::family(f[0]), CurveSpec::family(f[1]))),
            (None, Some(c1), Some(c2)) => Ok((
                c1.parse().map_err(|e| RunError::Usage(format!("{e}")))?,
                c2.parse().map_err(|e| RunError::Usage(format!("{e}")))?,
            )),
            _ => Err(RunError::Usage(
                "specify a pair via --family L1 L2 or --curve1/--curve2".into(),
            )),
        }
    }

    fn profile(&self) -> Result<SerrePairProfile, RunError> {
        let (c1, c2) = self.curves()?;
        SerrePairProfile::from_curves(&c1, &c2, self.attest_serre_pair).map_err(compute)
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Sweep primes up to x, computing trace sums for a pair of curves
    Sweep {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        x: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Overwrite a cache with a mismatched header
        #[arg(long)]
        force: bool,
    },
    /// Print the constant C(E1 x E2, T) and its factor breakdown
    Constant {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long = "T", allow_hyphen_values = true)]
        t: i64,
        /// Truncation bound for the universal product
        #[arg(long = "L")]
        l: Option<u64>,
    },
    /// Print the predicted fixed-trace count at x
    Predict {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long = "T", allow_hyphen_values = true)]
        t: i64,
        #[arg(long)]
        x: Option<u64>,
        #[arg(long = "L")]
        l: Option<u64>,
    },
    /// Sweep, predict and emit the comparison table (CSV, optional SVG)
    Compare {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        x: Option<u64>,
        #[arg(long = "L")]
        l: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Run the exhaustive validation suite; nonzero exit on any mismatch
    Oracle {
        /// Directory for the golden CSV transcripts
        #[arg(long)]
        golden_out: Option<PathBuf>,
    },
    /// Print the Serre-pair profile (discriminants, conductor, characters)
    Profile {
        #[command(flatten)]
        pair: PairArgs,
    },
}

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

/// Key-value config file contents plus environment, consulted when a flag is
/// absent.
pub struct Settings {
    file: HashMap<String, String>,
}

impl Settings {
    pub fn load() -> Settings {
        let path = std::env::var("FROBTRACE_CONFIG").unwrap_or_else(|_| "frobtrace.conf".into());
        let mut file = HashMap::new();
        if let Ok(text) = std::fs::read_to_string(&path) {
            for line in text.lines() {
                let line = line.split('#').next().unwrap_or("").trim();
                if let Some((k, v)) = line.split_once('=') {
                    file.insert(k.trim().to_lowercase(), v.trim().to_string());
                }
            }
        }
        Settings { file }
    }

    /// flag > FROBTRACE_<KEY> > config file > default.
    pub fn resolve<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, RunError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        let env_key = format!("FROBTRACE_{}", key.to_uppercase());
        if let Ok(raw) = std::env::var(&env_key) {
            return raw
                .parse()
                .map_err(|_| RunError::Usage(format!("bad value in {env_key}: {raw}")));
        }
        if let Some(raw) = self.file.get(key) {
            return raw
                .parse()
                .map_err(|_| RunError::Usage(format!("bad config value for {key}: {raw}")));
        }
        Ok(default)
    }
}

const DEFAULT_X: u64 = 100_000;
const DEFAULT_TRUNC: u64 = 10_000;
const DEFAULT_WORKERS: usize = 4;

/// The universal product requires the truncation to clear every prime
/// dividing `T * m_A`; turn a violation into a usage error up front.
fn check_trunc(profile: &SerrePairProfile, t: i64, trunc: u64) -> Result<(), RunError> {
    let mut needed = 2u64;
    for &l in &profile.odd_primes {
        needed = needed.max(l);
    }
    if t != 0 {
        let f = crate::arith::factorize(&crate::arith::int(t)).map_err(compute)?;
        for p in f.primes() {
            needed = needed.max(p.to_u64().unwrap_or(u64::MAX));
        }
    }
    if trunc < needed {
        return Err(RunError::Usage(format!(
            "--L {trunc} is below {needed}, the largest prime dividing T * m_A; raise it"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// comparison table
// ---------------------------------------------------------------------------

/// One comparison row; `err_rel` and `err_clt` are NaN when the prediction
/// vanishes.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonRow {
    pub t: i64,
    pub gcd12: u32,
    pub pi_actual: u64,
    pub pi_pred: f64,
    pub c: f64,
    pub err_abs: f64,
    pub err_rel: f64,
    pub err_clt: f64,
}

/// Caching evaluator for the constant across many trace values: the generic
/// universal product is computed once, per-prime corrections and the
/// exceptional factor are memoized on the valuation data they depend on.
pub struct ConstantEvaluator {
    pub profile: SerrePairProfile,
    pub trunc: u64,
    base: f64,
    tail: f64,
    generic: HashMap<u64, f64>,
    correction: HashMap<(u64, u32), f64>,
    exceptional: HashMap<Vec<u32>, f64>,
}

impl ConstantEvaluator {
    pub fn new(profile: SerrePairProfile, trunc: u64) -> ConstantEvaluator {
        let mut base = 1.0;
        let mut generic = HashMap::new();
        let m_a = profile.m_a.clone();
        for p in crate::arith::Primes::up_to(trunc) {
            if (&m_a % crate::arith::int(p)).to_u64() != Some(0) {
                let f = universal_factor(p, 1).to_f64().unwrap();
                // universal_factor(p, 1) is the generic value only when p
                // does not divide the probe trace 1, true for every p
                base *= f;
                generic.insert(p, f);
            }
        }
        let tail = (crate::matcount::C_TAIL / (2.0 * trunc as f64 * trunc as f64)).exp_m1();
        ConstantEvaluator {
            profile,
            trunc,
            base,
            tail,
            generic,
            correction: HashMap::new(),
            exceptional: HashMap::new(),
        }
    }

    /// `(C, universal, tail, exceptional)` for a nonzero trace.
    pub fn constant(&mut self, t_sum: i64) -> (f64, f64, f64, f64) {
        assert!(t_sum != 0);
        let mut universal = self.base;
        let fact = crate::arith::factorize(&crate::arith::int(t_sum)).expect("trace factors");
        for (p, v) in &fact.factors {
            let p = p.to_u64().expect("trace prime fits u64");
            if p > self.trunc || !self.generic.contains_key(&p) {
                continue;
            }
            let corr = *self
                .correction
                .entry((p, *v))
                .or_insert_with(|| universal_factor(p, t_sum).to_f64().unwrap());
            universal *= corr / self.generic[&p];
        }
        let exc = *self
            .exceptional
            .entry(self.exc_key(t_sum))
            .or_insert_with(|| exceptional_factor(&self.profile, t_sum).to_f64().unwrap());
        let c = sato_tate_factor() * exc * universal;
        (c, universal, self.tail, exc)
    }

    /// The exceptional factor depends only on the conductor-prime valuations
    /// of T and on T modulo the 2-part of the stabilized conductor.
    fn exc_key(&self, t_sum: i64) -> Vec<u32> {
        let mut key = Vec::with_capacity(self.profile.odd_primes.len() + 2);
        let v2 = crate::arith::valuation_i64(t_sum, 2);
        let alpha = self.profile.alpha_base() + v2;
        key.push(v2);
        key.push(t_sum.rem_euclid(1i64 << alpha) as u32);
        for &l in &self.profile.odd_primes {
            key.push(crate::arith::valuation_i64(t_sum, l));
        }
        key
    }
}

/// Build the comparison table for every nonzero `|T| <= 4 sqrt(x)`.
pub fn compare_rows(
    profile: &SerrePairProfile,
    hist: &TraceHistogram,
    trunc: u64,
) -> Vec<ComparisonRow> {
    let t_max = crate::arith::isqrt_u64(16 * hist.x) as i64;
    // the truncation must clear every prime divisor of every row's T
    let mut eval = ConstantEvaluator::new(profile.clone(), trunc.max(t_max as u64 + 1));
    let st = SatoTate::get();
    let mut rows = Vec::with_capacity(2 * t_max as usize);
    for t in -t_max..=t_max {
        if t == 0 {
            continue;
        }
        let (c, universal, _, exc) = eval.constant(t);
        let scale = exc * universal;
        let pred = predict_value(scale, t, hist.x, 1e-8, &|s| st.phi(s)).expect("predictor");
        let actual = hist.count(t);
        let err_abs = actual as f64 - pred;
        let (err_rel, err_clt) = if pred > 0.0 {
            (err_abs / pred, err_abs / pred.sqrt())
        } else {
            (f64::NAN, f64::NAN)
        };
        rows.push(ComparisonRow {
            t,
            gcd12: crate::arith::gcd_u64(t.unsigned_abs(), 12) as u32,
            pi_actual: actual,
            pi_pred: pred,
            c,
            err_abs,
            err_rel,
            err_clt,
        });
    }
    rows
}

/// 17-significant-digit float rendering; round-trips exactly through parse.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn render_csv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from("T,gcd12,pi_actual,pi_pred,C,err_abs,err_rel,err_clt\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.gcd12,
            r.pi_actual,
            format_float(r.pi_pred),
            format_float(r.c),
            format_float(r.err_abs),
            format_float(r.err_rel),
            format_float(r.err_clt),
        );
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<ComparisonRow>, RunError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(RunError::Compute(format!("bad csv row: {line}")));
        }
        let pf = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| RunError::Compute(e.to_string()))
        };
        rows.push(ComparisonRow {
            t: f[0].parse().map_err(compute)?,
            gcd12: f[1].parse().map_err(compute)?,
            pi_actual: f[2].parse().map_err(compute)?,
            pi_pred: pf(f[3])?,
            c: pf(f[4])?,
            err_abs: pf(f[5])?,
            err_rel: pf(f[6])?,
            err_clt: pf(f[7])?,
        });
    }
    Ok(rows)
}

/// Color map keyed on gcd(T, 12).
fn gcd_color(gcd12: u32) -> &'static str {
    match gcd12 {
        1 => "red",
        3 => "orange",
        2 => "yellow",
        4 | 6 => "green",
        12 => "blue",
        _ => "black",
    }
}

/// Deterministic two-panel scatter (predicted on top, actual below), colored
/// by gcd(T, 12).
pub fn render_svg(rows: &[ComparisonRow], x: u64) -> String {
    const W: f64 = 1000.0;
    const H: f64 = 320.0;
    const PAD: f64 = 45.0;
    let t_max = crate::arith::isqrt_u64(16 * x) as f64;
    let y_max = rows
        .iter()
        .flat_map(|r| [r.pi_pred, r.pi_actual as f64])
        .fold(1.0f64, f64::max);
    let sx = |t: f64| PAD + (t + t_max) / (2.0 * t_max) * (W - 2.0 * PAD);
    let sy = |v: f64, panel: usize| {
        let top = PAD + panel as f64 * H;
        top + (H - 2.0 * PAD) * (1.0 - v / y_max) + PAD
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{}\" viewBox=\"0 0 {W} {}\">",
        2.0 * H + PAD,
        2.0 * H + PAD
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for (panel, label) in [(0usize, "predicted"), (1, "actual")] {
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\">{} counts, x = {}</text>",
            PAD,
            PAD * 0.7 + panel as f64 * H,
            label,
            x
        );
        for r in rows {
            let v = if panel == 0 {
                r.pi_pred
            } else {
                r.pi_actual as f64
            };
            let _ = writeln!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.4\" fill=\"{}\"/>",
                sx(r.t as f64),
                sy(v, panel),
                gcd_color(r.gcd12)
            );
        }
    }
    let _ = writeln!(s, "</svg>");
    s
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

/// Run the CLI; returns a process exit code.
pub fn main_entry<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    let settings = Settings::load();
    match cli.cmd {
        Cmd::Sweep {
            pair,
            x,
            workers,
            cache: cache_path,
            force,
        } => {
            let (c1, c2) = pair.curves()?;
            let x = settings.resolve(x, "x", DEFAULT_X)?;
            let workers = settings.resolve(workers, "workers", DEFAULT_WORKERS)?;
            let cache_path =
                settings.resolve(cache_path, "cache", PathBuf::from("frobtrace.cache"))?;
            let (out, status) =
                cache::cached_sweep(&c1, &c2, x, workers, &cache_path, force).map_err(compute)?;
            println!(
                "sweep x={} good={} bad={} cache={} ({:?})",
                out.x,
                out.records.len(),
                out.bad_primes.len(),
                cache_path.display(),
                status
            );
            Ok(())
        }
        Cmd::Constant { pair, t, l } => {
            if t == 0 {
                return Err(RunError::Usage(
                    "the constant at T = 0 is not computed".into(),
                ));
            }
            let profile = pair.profile()?;
            let trunc = settings.resolve(l, "l", DEFAULT_TRUNC)?;
            check_trunc(&profile, t, trunc)?;
            let exc = exceptional_factor(&profile, t);
            let (universal, tail) = universal_product(t, &profile.m_a, trunc);
            let c = sato_tate_factor() * exc.to_f64().unwrap() * universal;
            println!("T = {t}");
            println!(
                "sato-tate factor  = 16/(3 pi^2) = {}",
                format_float(sato_tate_factor())
            );
            println!(
                "exceptional factor = {} = {}",
                exc,
                format_float(exc.to_f64().unwrap())
            );
            println!(
                "universal product  = {} (truncated at {}, tail bound {})",
                format_float(universal),
                trunc,
                format_float(tail)
            );
            println!("C = {}", format_float(c));
            Ok(())
        }
        Cmd::Predict { pair, t, x, l } => {
            if t == 0 {
                return Err(RunError::Usage(
                    "the constant at T = 0 is not computed".into(),
                ));
            }
            let profile = pair.profile()?;
            let x = settings.resolve(x, "x", DEFAULT_X)?;
            let trunc = settings.resolve(l, "l", DEFAULT_TRUNC)?;
            check_trunc(&profile, t, trunc)?;
            let exc = exceptional_factor(&profile, t).to_f64().unwrap();
            let (universal, _) = universal_product(t, &profile.m_a, trunc);
            let c = sato_tate_factor() * exc * universal;
            let st = SatoTate::get();
            let pred =
                predict_value(exc * universal, t, x, 1e-8, &|s| st.phi(s)).map_err(compute)?;
            let simple = c * (x as f64).sqrt() / (x as f64).ln();
            println!("T = {t}, x = {x}");
            println!("C           = {}", format_float(c));
            println!("pi_pred     = {}", format_float(pred));
            println!("pi_simple   = {}", format_float(simple));
            Ok(())
        }
        Cmd::Compare {
            pair,
            x,
            l,
            workers,
            cache: cache_path,
            csv,
            svg,
            force,
        } => {
            let (c1, c2) = pair.curves()?;
            let profile = pair.profile()?;
            let x = settings.resolve(x, "x", DEFAULT_X)?;
            let trunc = settings.resolve(l, "l", DEFAULT_TRUNC)?;
            let workers = settings.resolve(workers, "workers", DEFAULT_WORKERS)?;
            let csv_path = settings.resolve(csv, "csv", PathBuf::from("compare.csv"))?;

            let outcome = match cache_path {
                Some(path) => {
                    cache::cached_sweep(&c1, &c2, x, workers, &path, force)
                        .map_err(compute)?
                        .0
                }
                None => sweep(&c1, &c2, x, workers).map_err(compute)?,
            };
            let hist = TraceHistogram::from_outcome(&outcome);
            let rows = compare_rows(&profile, &hist, trunc);
            std::fs::write(&csv_path, render_csv(&rows)).map_err(compute)?;
            println!(
                "compare x={} rows={} (T = 0 omitted: constant not computed) csv={}",
                x,
                rows.len(),
                csv_path.display()
            );
            if let Some(svg_path) = svg {
                std::fs::write(&svg_path, render_svg(&rows, x)).map_err(compute)?;
                println!("svg={}", svg_path.display());
            }
            Ok(())
        }
        Cmd::Oracle { golden_out } => {
            let report = crate::oracle::run_suite();
            for c in &report.checks {
                println!(
                    "{} {}{}",
                    if c.ok { "PASS" } else { "FAIL" },
                    c.name,
                    if c.detail.is_empty() {
                        String::new()
                    } else {
                        format!(": {}", c.detail)
                    }
                );
            }
            if let Some(dir) = golden_out {
                report.write_golden(&dir).map_err(compute)?;
                println!("golden transcripts written to {}", dir.display());
            }
            if report.passed() {
                println!("oracle suite: all checks passed");
                Ok(())
            } else {
                Err(RunError::OracleMismatch)
            }
        }
        Cmd::Profile { pair } => {
            let (c1, c2) = pair.curves()?;
            if let Some(f) = &pair.family {
                println!(
                    "family check ({}, {}): {}",
                    f[0],
                    f[1],
                    if serre_family_check(f[0], f[1]) {
                        "serre pair"
                    } else {
                        "NOT certified"
                    }
                );
            }
            let profile = pair.profile()?;
            println!("curve1: {} (disc {})", c1, c1.discriminant());
            println!("curve2: {} (disc {})", c2, c2.discriminant());
            println!("D1 = {}, D2 = {}", profile.d1, profile.d2);
            println!(
                "odd parts |D1'| = {}, |D2'| = {}",
                profile.d1_odd, profile.d2_odd
            );
            println!("m_A = {}", profile.m_a);
            println!("psi_2 codes: {:?}, {:?}", profile.psi2.0, profile.psi2.1);
            println!("im psi_m' = {:?}", profile.im_psi);
            println!("m_(A,T) at T = 1: {}", m_at(&profile, 1));
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_roundtrip() {
        for v in [0.0, 1.5, -2.25e-7, 1.0 / 3.0, 6.02e23, f64::MIN_POSITIVE] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert!(format_float(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn csv_roundtrip() {
        let rows = vec![
            ComparisonRow {
                t: -7,
                gcd12: 1,
                pi_actual: 42,
                pi_pred: 40.123456789,
                c: 0.531,
                err_abs: 1.876543211,
                err_rel: 0.0467,
                err_clt: 0.296,
            },
            ComparisonRow {
                t: 4000,
                gcd12: 4,
                pi_actual: 0,
                pi_pred: 0.0,
                c: 0.7,
                err_abs: 0.0,
                err_rel: f64::NAN,
                err_clt: f64::NAN,
            },
        ];
        let text = render_csv(&rows);
        assert!(text.starts_with("T,gcd12,pi_actual,pi_pred,C,err_abs,err_rel,err_clt\n"));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.t, b.t);
            assert_eq!(a.gcd12, b.gcd12);
            assert_eq!(a.pi_actual, b.pi_actual);
            for (x, y) in [
                (a.pi_pred, b.pi_pred),
                (a.c, b.c),
                (a.err_abs, b.err_abs),
                (a.err_rel, b.err_rel),
                (a.err_clt, b.err_clt),
            ] {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn settings_precedence() {
        let s = Settings {
            file: [("x".to_string(), "777".to_string())].into_iter().collect(),
        };
        // flag wins
        assert_eq!(s.resolve(Some(5u64), "x", 1).unwrap(), 5);
        // file beats default
        assert_eq!(s.resolve(None::<u64>, "x", 1).unwrap(), 777);
        // default when absent everywhere
        assert_eq!(s.resolve(None::<u64>, "nosuchkey", 123u64).unwrap(), 123);
    }

    #[test]
    fn usage_exit_codes() {
        assert_eq!(main_entry(["frobtrace", "no-such-subcommand"]), EXIT_USAGE);
        assert_eq!(
            main_entry(["frobtrace", "constant", "--T", "1"]),
            EXIT_USAGE
        );
        assert_eq!(main_entry(["frobtrace", "--help"]), EXIT_OK);
    }

    #[test]
    fn svg_deterministic() {
        let rows = vec![ComparisonRow {
            t: 12,
            gcd12: 12,
            pi_actual: 3,
            pi_pred: 2.5,
            c: 0.9,
            err_abs: 0.5,
            err_rel: 0.2,
            err_clt: 0.316,
        }];
        let a = render_svg(&rows, 1000);
        let b = render_svg(&rows, 1000);
        assert_eq!(a, b);
        assert!(a.contains("fill=\"blue\""));
    }
}
