//! Command-line front end.
//!
//! Exit codes: 0 success, 1 unexpected I/O or internal failure, 2 usage,
//! 3 oracle mismatch, 4 insufficient tail data, 5 verification failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::closed_form::{
    dmt_at, dmt_curve, is_rayleigh_equivalent, max_diversity, order_triple, ChannelTriple, DmtCurve,
    OrderedTriple,
};
use crate::error::{Error, Result};
use crate::exponent::{dmt_via_greedy, dmt_via_lp, triple_dims};
use crate::lemmas::{self, VerificationReport};
use crate::outage::{estimates_to_csv, fit_slope, run_sweep, ChannelSpec, OutageEstimate, SimConfig};
use crate::randmat::{correlation_matrix, density_shape_test, CorrelationSpec};
use crate::rng::{stream, stream_id};
use crate::Rational;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;
pub const EXIT_INSUFFICIENT: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

const SEED_ENV: &str = "DMT_SEED";

#[derive(Debug, Parser)]
#[command(name = "dmt", version, about = "Diversity-multiplexing tradeoff of double-scattering MIMO channels")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Format of the data files; summaries and reports are always JSON.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON object of option values; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tradeoff curve d(k), k = 0..M, of one channel.
    Curve(CurveArgs),
    /// Exact agreement of the closed form, the LP and the greedy reduction.
    Crosscheck(CrosscheckArgs),
    /// Monte Carlo outage probabilities and high-SNR slope.
    Sim(SimArgs),
    /// Numerical lemma and density checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Counts as T,S,R (transmit, scatterers, receive).
    #[arg(long)]
    pub triple: Option<String>,
}

#[derive(Debug, Args)]
pub struct CrosscheckArgs {
    /// Largest component of the swept triples.
    #[arg(long)]
    pub max_dim: Option<u32>,
    /// Also check r at quarter steps.
    #[arg(long)]
    pub fractional: bool,
    /// Harness self-test: ceil instead of floor in the closed form.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub triple: Option<String>,
    /// Multiplexing gain, decimal or a/b. The target rate is r·ln(SNR) nats.
    /// r = 0 has a null outage event; use a small proxy such as 0.05.
    #[arg(long)]
    pub r: Option<String>,
    /// SNR grid lo:hi:step in dB.
    #[arg(long)]
    pub snr_db: Option<String>,
    /// Trials per SNR point.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Seed; falls back to the DMT_SEED environment variable.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Correlation at every node: id, exp:<rho> or file:<path>.
    #[arg(long)]
    pub corr: Option<String>,
    /// Transmit-side override of --corr.
    #[arg(long)]
    pub corr_t: Option<String>,
    /// Scatterer override of --corr.
    #[arg(long)]
    pub corr_s: Option<String>,
    /// Receive-side override of --corr.
    #[arg(long)]
    pub corr_r: Option<String>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemma1,
    Lemma2,
    Lemma3,
    Lemma4,
    Prop1,
    Wishart,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// Random trials per shape for lemma4 and prop1.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Eigenvalue draws per case for the wishart suite.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Significant decimal digits for the extended-precision checks.
    #[arg(long)]
    pub digits: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Written next to every output set.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: Option<u64>,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub exit_code: i32,
    pub outputs: Vec<String>,
}

/// Error carrying the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) | Error::Domain(_) | Error::Construction(_) | Error::Degenerate(_) => EXIT_USAGE,
            Error::InsufficientData(_) => EXIT_INSUFFICIENT,
            Error::Precision(_) | Error::Validation(_) => EXIT_VERIFY,
            Error::Internal(_) | Error::Io(_) | Error::Json(_) => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

/// Option values from `--config`.
struct ConfigFile {
    values: Map<String, Value>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> std::result::Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self { values: Map::new() });
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::new(EXIT_USAGE, format!("cannot read config {}: {e}", path.display())))?;
        match serde_json::from_str(&text) {
            Ok(Value::Object(values)) => Ok(Self { values }),
            Ok(_) => Err(CliError::new(EXIT_USAGE, "config must be a JSON object")),
            Err(e) => Err(CliError::new(EXIT_USAGE, format!("config {}: {e}", path.display()))),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> std::result::Result<(), CliError> {
        for k in self.values.keys() {
            if !allowed.contains(&k.as_str()) && !["out", "format"].contains(&k.as_str()) {
                return Err(CliError::new(EXIT_USAGE, format!("unknown config key '{k}'")));
            }
        }
        Ok(())
    }

    fn text(&self, key: &str) -> Option<String> {
        match self.values.get(key)? {
            Value::String(s) => Some(s.clone()),
            Value::Null => None,
            other => Some(other.to_string()),
        }
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> std::result::Result<Option<T>, CliError> {
        self.text(key)
            .map(|s| {
                s.parse()
                    .map_err(|_| CliError::new(EXIT_USAGE, format!("config key '{key}': bad value '{s}'")))
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> bool {
        matches!(self.values.get(key), Some(Value::Bool(true)))
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::new(EXIT_USAGE, msg)
}

fn env_seed() -> std::result::Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{SEED_ENV}='{s}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Parses `lo:hi:step` (dB) into the grid `lo, lo+step, …, ≤ hi`.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::InvalidInput(format!("SNR grid must be lo:hi:step in dB, got '{s}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (lo, hi, step) = (v[0], v[1], v[2]);
    if !(lo.is_finite() && hi.is_finite() && step > 0.0 && hi >= lo) {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if count > 10_000 {
        return Err(Error::InvalidInput(format!("SNR grid '{s}' has {count} points")));
    }
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

/// Parses a multiplexing gain given as a decimal or `a/b`.
pub fn parse_gain(s: &str) -> Result<f64> {
    let bad = || Error::InvalidInput(format!("multiplexing gain must be a decimal or a/b, got '{s}'"));
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            if b == 0.0 {
                return Err(bad());
            }
            a / b
        }
        None => s.trim().parse().map_err(|_| bad())?,
    };
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::InvalidInput(format!("multiplexing gain must be >= 0, got {s}")));
    }
    Ok(v)
}

struct Context {
    out: PathBuf,
    format: Format,
    started: String,
    outputs: Vec<String>,
}

impl Context {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        fs::write(&path, contents)?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn finish(&mut self, stem: &str, command: &str, config: Value, seed: Option<u64>, exit_code: i32) -> Result<()> {
        let manifest = RunManifest {
            command: command.into(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            started: self.started.clone(),
            finished: now(),
            exit_code,
            outputs: self.outputs.clone(),
        };
        let name = format!("{stem}.manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::create_dir_all(&self.out)?;
        fs::write(self.out.join(name), text)?;
        Ok(())
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn stem_for(t: ChannelTriple) -> String {
    format!("{}-{}-{}", t.n_t, t.n_s, t.n_r)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cli: Cli) -> std::result::Result<i32, CliError> {
    let cfg = ConfigFile::load(cli.config.as_deref())?;
    let format = match cli.format {
        Some(f) => f,
        None => match cfg.text("format").as_deref() {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => return Err(usage(format!("config key 'format': bad value '{other}'"))),
        },
    };
    let out = cli
        .out
        .or_else(|| cfg.text("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("dmt-out"));
    let mut ctx = Context {
        out,
        format,
        started: now(),
        outputs: vec![],
    };
    match cli.command {
        Command::Curve(a) => cmd_curve(a, &cfg, &mut ctx),
        Command::Crosscheck(a) => cmd_crosscheck(a, &cfg, &mut ctx),
        Command::Sim(a) => cmd_sim(a, &cfg, &mut ctx),
        Command::Verify(a) => cmd_verify(a, &cfg, &mut ctx),
    }
}

fn cmd_curve(a: CurveArgs, cfg: &ConfigFile, ctx: &mut Context) -> std::result::Result<i32, CliError> {
    cfg.check_keys(&["triple"])?;
    let text = a
        .triple
        .or_else(|| cfg.text("triple"))
        .ok_or_else(|| usage("--triple T,S,R is required"))?;
    let triple: ChannelTriple = text.parse()?;
    let ordered = order_triple(triple);
    let curve = dmt_curve(triple);
    let summary = json!({
        "triple": triple,
        "ordered": ordered,
        "delta": ordered.delta,
        "is_rayleigh_equivalent": is_rayleigh_equivalent(triple),
        "max_diversity": max_diversity(triple),
    });
    let stem = format!("curve-{}", stem_for(triple));
    match ctx.format {
        Format::Csv => {
            ctx.write(&format!("{stem}.csv"), &curve.to_csv())?;
            ctx.write_json(&format!("{stem}.json"), &summary)?;
        }
        Format::Json => {
            let mut s = summary.clone();
            s["points"] = json!(curve.points.iter().map(|(k, d)| json!({"k": k, "d": d})).collect::<Vec<_>>());
            ctx.write_json(&format!("{stem}.json"), &s)?;
        }
    }
    print!("{}", curve.to_csv());
    ctx.finish(&stem, "curve", json!({"triple": triple}), None, EXIT_OK)?;
    Ok(EXIT_OK)
}

/// One disagreement between the three routes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mismatch {
    pub triple: ChannelTriple,
    /// `(m, n, l)` = (transmit, receive, scatterers)
    pub dims: (u32, u32, u32),
    pub r: String,
    pub closed_form: String,
    pub lp: String,
    pub greedy: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrosscheckReport {
    pub max_dim: u32,
    pub fractional: bool,
    pub cases: usize,
    pub mismatches: usize,
    /// Smallest mismatching case by component sum, then r.
    pub minimal_counterexample: Option<Mismatch>,
}

fn faulty_curve(t: ChannelTriple) -> DmtCurve {
    let o: OrderedTriple = order_triple(t);
    let (m, n) = (o.m_small as i64, o.n_mid as i64);
    let points = (0..=o.m_small)
        .map(|k| {
            let k = k as i64;
            let excess = (m - o.delta as i64 - k).max(0);
            (k as u32, (m - k) * (n - k) - (excess * excess + 3) / 4)
        })
        .collect();
    DmtCurve { points }
}

/// Sweeps every triple with components ≤ `max_dim` and r in `0..=M`, at
/// quarter steps when `fractional`.
pub fn crosscheck(max_dim: u32, fractional: bool, inject_fault: bool) -> Result<CrosscheckReport> {
    if max_dim == 0 {
        return Err(Error::InvalidInput("--max-dim must be >= 1".into()));
    }
    let denom: i64 = if fractional { 4 } else { 1 };
    let mut cases = 0;
    let mut found: Vec<(u32, Rational, Mismatch)> = vec![];
    for a in 1..=max_dim {
        for b in 1..=max_dim {
            for c in 1..=max_dim {
                let t = ChannelTriple::new(a, b, c)?;
                let curve = if inject_fault { faulty_curve(t) } else { dmt_curve(t) };
                let (m, n, l) = triple_dims(t);
                for step in 0..=(curve.max_gain() as i64 * denom) {
                    let r = Rational::new(BigInt::from(step), BigInt::from(denom));
                    let cf = dmt_at(&curve, &r)?;
                    let lp = dmt_via_lp(m, n, l, &r)?;
                    let gr = dmt_via_greedy(m, n, l, &r)?;
                    cases += 1;
                    if cf != lp || lp != gr {
                        found.push((
                            a + b + c,
                            r.clone(),
                            Mismatch {
                                triple: t,
                                dims: (m, n, l),
                                r: r.to_string(),
                                closed_form: cf.to_string(),
                                lp: lp.to_string(),
                                greedy: gr.to_string(),
                            },
                        ));
                    }
                }
            }
        }
    }
    let mismatches = found.len();
    let minimal = found.into_iter().min_by(|x, y| (x.0, &x.1).cmp(&(y.0, &y.1))).map(|x| x.2);
    Ok(CrosscheckReport {
        max_dim,
        fractional,
        cases,
        mismatches,
        minimal_counterexample: minimal,
    })
}

fn cmd_crosscheck(a: CrosscheckArgs, cfg: &ConfigFile, ctx: &mut Context) -> std::result::Result<i32, CliError> {
    cfg.check_keys(&["max_dim", "fractional"])?;
    let max_dim = match a.max_dim {
        Some(d) => d,
        None => cfg.parsed("max_dim")?.unwrap_or(5),
    };
    let fractional = a.fractional || cfg.flag("fractional");
    let report = crosscheck(max_dim, fractional, a.inject_fault)?;
    ctx.write_json("crosscheck.json", &report)?;
    println!("{} mismatches / {} cases", report.mismatches, report.cases);
    let code = match &report.minimal_counterexample {
        None => EXIT_OK,
        Some(c) => {
            eprintln!(
                "mismatch: triple {} (m,n,l)={:?} r={}: closed form {}, LP {}, greedy {}",
                c.triple, c.dims, c.r, c.closed_form, c.lp, c.greedy
            );
            EXIT_MISMATCH
        }
    };
    let config = json!({"max_dim": max_dim, "fractional": fractional, "inject_fault": a.inject_fault});
    ctx.finish("crosscheck", "crosscheck", config, None, code)?;
    Ok(code)
}

fn resolve_corr(
    flag: Option<String>,
    cfg: &ConfigFile,
    key: &str,
    fallback: &str,
) -> std::result::Result<(String, CorrelationSpec), CliError> {
    let text = flag.or_else(|| cfg.text(key)).unwrap_or_else(|| fallback.to_string());
    let spec = text.parse()?;
    Ok((text, spec))
}

#[derive(Debug, Serialize)]
struct SimSummary<'a> {
    triple: ChannelTriple,
    r: f64,
    c_norm: f64,
    correlation: Value,
    points: &'a [OutageEstimate],
    fit: Option<crate::outage::SlopeFit>,
    fit_error: Option<String>,
}

fn cmd_sim(a: SimArgs, cfg: &ConfigFile, ctx: &mut Context) -> std::result::Result<i32, CliError> {
    cfg.check_keys(&["triple", "r", "snr_db", "trials", "seed", "corr", "corr_t", "corr_s", "corr_r", "workers"])?;
    let triple: ChannelTriple = a
        .triple
        .or_else(|| cfg.text("triple"))
        .ok_or_else(|| usage("--triple T,S,R is required"))?
        .parse()?;
    let r_text = a.r.or_else(|| cfg.text("r")).ok_or_else(|| usage("--r is required"))?;
    let r = parse_gain(&r_text)?;
    let grid_text = a
        .snr_db
        .or_else(|| cfg.text("snr_db"))
        .ok_or_else(|| usage("--snr-db lo:hi:step is required"))?;
    let grid = parse_snr_grid(&grid_text)?;
    let trials = match a.trials {
        Some(t) => t,
        None => cfg.parsed("trials")?.unwrap_or(100_000),
    };
    let seed = match a.seed {
        Some(s) => s,
        None => match cfg.parsed("seed")? {
            Some(s) => s,
            None => env_seed()?.unwrap_or(0),
        },
    };
    let workers = match a.workers {
        Some(w) => w,
        None => cfg
            .parsed("workers")?
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    };
    let (corr_text, _) = resolve_corr(a.corr, cfg, "corr", "id")?;
    let (t_text, t_spec) = resolve_corr(a.corr_t, cfg, "corr_t", &corr_text)?;
    let (s_text, s_spec) = resolve_corr(a.corr_s, cfg, "corr_s", &corr_text)?;
    let (r_node_text, r_spec) = resolve_corr(a.corr_r, cfg, "corr_r", &corr_text)?;
    // a rejected correlation matrix is bad user input here
    let node = |spec: &CorrelationSpec, dim: u32| correlation_matrix(spec, dim as usize).map_err(|e| usage(e.to_string()));
    let spec = ChannelSpec::new(
        triple,
        node(&t_spec, triple.n_t)?,
        node(&s_spec, triple.n_s)?,
        node(&r_spec, triple.n_r)?,
    )?;
    let c_norm = spec.c_norm;
    let sim = SimConfig {
        spec,
        snr_grid_db: grid,
        r,
        trials,
        seed,
        workers,
    };
    let points = run_sweep(&sim)?;
    let (fit, fit_error) = match fit_slope(&points) {
        Ok(f) => (Some(f), None),
        Err(Error::InsufficientData(m)) => (None, Some(m)),
        Err(e) => return Err(e.into()),
    };
    let correlation = json!({"transmit": t_text, "scatterer": s_text, "receive": r_node_text});
    let stem = format!("sim-{}", stem_for(triple));
    let summary = SimSummary {
        triple,
        r,
        c_norm,
        correlation: correlation.clone(),
        points: &points,
        fit: fit.clone(),
        fit_error: fit_error.clone(),
    };
    match ctx.format {
        Format::Csv => {
            ctx.write(&format!("{stem}.csv"), &estimates_to_csv(&points))?;
            let fit_json = json!({"fit": summary.fit, "fit_error": summary.fit_error, "c_norm": c_norm});
            ctx.write_json(&format!("{stem}.fit.json"), &fit_json)?;
        }
        Format::Json => ctx.write_json(&format!("{stem}.json"), &summary)?,
    }
    print!("{}", estimates_to_csv(&points));
    let code = match &fit {
        Some(f) => {
            println!("slope {:.4} ± {:.4} over {} points", f.slope, f.stderr, f.points_used);
            EXIT_OK
        }
        None => {
            eprintln!("insufficient tail data: {}", fit_error.unwrap_or_default());
            EXIT_INSUFFICIENT
        }
    };
    let config = json!({
        "triple": triple,
        "r": r_text,
        "snr_db": grid_text,
        "trials": trials,
        "seed": seed,
        "workers": workers,
        "correlation": correlation,
    });
    ctx.finish(&stem, "sim", config, Some(seed), code)?;
    Ok(code)
}

/// Chi-square shape checks of the white Wishart eigenvalue density.
pub fn wishart_report(samples: usize, seed: u64) -> Result<VerificationReport> {
    let mut report = VerificationReport {
        check: "wishart".into(),
        cases: 0,
        violations: 0,
        worst_residual: 1.0,
        precision_digits: None,
        skipped: 0,
        failures: vec![],
    };
    for (k, (m, n)) in [(1usize, 1usize), (2, 2), (1, 2)].into_iter().enumerate() {
        let mut rng = stream(seed, stream_id(0x6000, k as u32));
        let r = density_shape_test(m, n, samples, &mut rng)?;
        report.cases += 1;
        report.worst_residual = report.worst_residual.min(r.p_value);
        if r.p_value <= 0.001 {
            report.violations += 1;
            report.failures.push(format!(
                "(m,n)=({m},{n}): chi2={:.2} dof={} p={:.3e}",
                r.statistic, r.dof, r.p_value
            ));
        }
    }
    Ok(report)
}

fn precision_failure(check: &str, digits: u32, e: Error) -> Result<VerificationReport> {
    match e {
        Error::Precision(msg) => Ok(VerificationReport {
            check: check.into(),
            cases: 0,
            violations: 1,
            worst_residual: f64::NAN,
            precision_digits: Some(digits),
            skipped: 0,
            failures: vec![format!("precision: {msg}")],
        }),
        other => Err(other),
    }
}

fn cmd_verify(a: VerifyArgs, cfg: &ConfigFile, ctx: &mut Context) -> std::result::Result<i32, CliError> {
    cfg.check_keys(&["suite", "trials", "samples", "digits", "seed"])?;
    let suite = match a.suite {
        Some(s) => s,
        None => match cfg.text("suite") {
            Some(s) => Suite::from_str(&s, true).map_err(|_| usage(format!("unknown suite '{s}'")))?,
            None => Suite::All,
        },
    };
    let trials = match a.trials {
        Some(t) => t,
        None => cfg.parsed("trials")?.unwrap_or(10_000),
    };
    let samples = match a.samples {
        Some(t) => t,
        None => cfg.parsed("samples")?.unwrap_or(100_000),
    };
    let digits = match a.digits {
        Some(d) => d,
        None => cfg.parsed("digits")?.unwrap_or(lemmas::DEFAULT_DIGITS),
    };
    let seed = match a.seed {
        Some(s) => s,
        None => match cfg.parsed("seed")? {
            Some(s) => s,
            None => env_seed()?.unwrap_or(0),
        },
    };
    if trials == 0 || samples == 0 {
        return Err(usage("--trials and --samples must be >= 1"));
    }
    let wanted = |s: Suite| suite == Suite::All || suite == s;
    let mut reports = Vec::new();
    if wanted(Suite::Lemma1) {
        reports.push(lemmas::lemma1_report(digits).or_else(|e| precision_failure("lemma1", digits, e))?);
    }
    if wanted(Suite::Lemma2) {
        reports.push(lemmas::lemma2_report(digits).or_else(|e| precision_failure("lemma2", digits, e))?);
    }
    if wanted(Suite::Lemma3) {
        reports.push(lemmas::lemma3_report(digits).or_else(|e| precision_failure("lemma3", digits, e))?);
    }
    if wanted(Suite::Lemma4) {
        for dim in [3, 4] {
            reports.push(lemmas::lemma4_suite(dim, trials, seed)?);
        }
    }
    if wanted(Suite::Prop1) {
        for (dim, cols) in [(3, 5), (4, 6)] {
            reports.push(lemmas::prop1_suite(dim, cols, trials, seed)?);
        }
    }
    if wanted(Suite::Wishart) {
        reports.push(wishart_report(samples, seed)?);
    }
    let passed = reports.iter().all(VerificationReport::passed);
    for r in &reports {
        let status = if r.passed() { "pass" } else { "FAIL" };
        println!("{status} {}: {} cases, {} violations", r.check, r.cases, r.violations);
        for f in &r.failures {
            eprintln!("  {f}");
        }
    }
    let name = format!("verify-{}", suite.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default());
    ctx.write_json(&format!("{name}.json"), &json!({"suite": suite, "passed": passed, "reports": reports}))?;
    let code = if passed { EXIT_OK } else { EXIT_VERIFY };
    let config = json!({"suite": suite, "trials": trials, "samples": samples, "digits": digits, "seed": seed});
    ctx.finish(&name, "verify", config, Some(seed), code)?;
    Ok(code)
}
