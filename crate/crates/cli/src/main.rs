use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use wilton_core::gfun::{cotangent_sum, g_fast, scan_cotangent, write_scan_csv};
use wilton_core::moments::{self, calibration_preflight, moment_table, ratios_bounded, MomentEstimate};
use wilton_core::special::{a_lambda, f_func, phi2};
use wilton_core::verify::{all_hard_pass, run_suite, Suite};
use wilton_core::wilton::{g_big, h_func, partial_sum_l, wilton};
use wilton_core::{Error, RealSpec};

const EXIT_INVARIANT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_CALIBRATION: u8 = 4;

/// Wilton's function, the series g(x) and its moments.
#[derive(Parser, Debug)]
#[command(name = "wilton-lab", version)]
struct Cli {
    /// Worker threads (falls back to WILTON_LAB_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq)]
enum Target {
    #[value(name = "g")]
    #[serde(rename = "g")]
    G,
    #[value(name = "wilton")]
    #[serde(rename = "wilton")]
    Wilton,
    #[value(name = "H")]
    #[serde(rename = "H")]
    H,
    #[value(name = "G")]
    #[serde(rename = "G")]
    BigG,
    #[value(name = "A")]
    #[serde(rename = "A")]
    A,
    #[value(name = "F")]
    #[serde(rename = "F")]
    F,
    #[value(name = "phi2")]
    #[serde(rename = "phi2")]
    Phi2,
    #[value(name = "L-partial")]
    #[serde(rename = "L-partial")]
    LPartial,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one function at one point.
    Eval {
        #[arg(value_enum)]
        target: Target,
        /// Point: 13/29, 0x…/2^64, dyadic:<seed>, [0;(1)], or a decimal for A, F, phi2.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Index for L-partial.
        #[arg(long)]
        n: Option<usize>,
    },
    /// The cotangent sum c0(r/b).
    Cotangent {
        #[arg(long)]
        r: u64,
        #[arg(long)]
        b: u64,
    },
    /// c0(r/b) for all r coprime to b in [a0·b, a1·b].
    Scan {
        #[arg(long)]
        b: u64,
        #[arg(long)]
        a0: f64,
        #[arg(long)]
        a1: f64,
    },
    /// Table of M_K = ∫|g|^K by importance sampling.
    Moments {
        #[arg(long = "K", value_delimiter = ',', required = true)]
        k: Vec<u32>,
        /// Samples per K; accepts 1e6 style.
        #[arg(long, default_value = "1e6", value_parser = parse_count)]
        budget: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Include wall-clock seconds in the artifact.
        #[arg(long)]
        timing: bool,
    },
    /// Run an invariant suite.
    Verify {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("not a count: {s}"))?;
    if f.is_finite() && f >= 1.0 && f.fract() == 0.0 && f < 1.8e19 {
        Ok(f as u64)
    } else {
        Err(format!("not a count: {s}"))
    }
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A failed run with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::Io(_) => EXIT_USAGE,
            _ => EXIT_DOMAIN,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads(cli.threads) {
        eprintln!("error: {}", f.message);
        return ExitCode::from(f.code);
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("WILTON_LAB_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| usage(format!("WILTON_LAB_THREADS is not a count: {v}")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Eval { target, x, tol, n } => cmd_eval(cli, *target, x, *tol, *n),
        Command::Cotangent { r, b } => {
            let value = cotangent_sum(*r, *b)?;
            let config = json!({"command": "cotangent", "r": r, "b": b, "format": cli.format});
            let body = match cli.format {
                Format::Json => to_json(&json!({"config": config, "c0": value, "c0_over_b": value / *b as f64}))?,
                Format::Csv => format!("r,b,c0,c0_over_b\n{r},{b},{value:?},{:?}\n", value / *b as f64),
                Format::Text => format!("c0({r}/{b}) = {value:?}\n"),
            };
            emit(cli, body.as_bytes())?;
            Ok(0)
        }
        Command::Scan { b, a0, a1 } => {
            let records = scan_cotangent(*b, *a0, *a1)?;
            let config = json!({"command": "scan", "b": b, "a0": a0, "a1": a1, "format": cli.format});
            let body = match cli.format {
                Format::Json => to_json(&json!({"config": config, "records": records}))?.into_bytes(),
                Format::Csv | Format::Text => {
                    let mut buf = Vec::new();
                    write_scan_csv(&records, &mut buf)?;
                    buf
                }
            };
            emit(cli, &body)?;
            Ok(0)
        }
        Command::Moments { k, budget, seed, timing } => cmd_moments(cli, k, *budget, *seed, *timing),
        Command::Verify { suite, seed } => {
            let checks = run_suite(*suite, *seed);
            let ok = all_hard_pass(&checks);
            let body = match cli.format {
                Format::Json => to_json(&json!({
                    "config": {"command": "verify", "suite": suite, "seed": seed, "format": cli.format},
                    "passed": ok,
                    "checks": checks,
                }))?,
                _ => {
                    let mut out = String::new();
                    for c in &checks {
                        let tag = if !c.hard { "INFO" } else if c.passed { "PASS" } else { "FAIL" };
                        let _ = writeln!(out, "{tag} [{}] {}: {}", c.suite, c.name, c.detail);
                    }
                    let _ = writeln!(out, "{}", if ok { "all hard checks passed" } else { "hard check failures" });
                    out
                }
            };
            emit(cli, body.as_bytes())?;
            Ok(if ok { 0 } else { EXIT_INVARIANT })
        }
    }
}

/// A point for A, F, phi2: a decimal, or any point syntax read as a float.
fn parse_real(s: &str) -> Result<f64, Failure> {
    if let Ok(v) = s.trim().parse::<f64>() {
        return Ok(v);
    }
    Ok(s.parse::<RealSpec>()?.to_f64())
}

#[derive(Serialize)]
struct EvalOut {
    value: f64,
    abs_error_bound: f64,
    depth: Option<usize>,
    terms_used: Option<usize>,
    terminated: bool,
    route: &'static str,
}

fn cmd_eval(cli: &Cli, target: Target, x: &str, tol: f64, n: Option<usize>) -> Result<u8, Failure> {
    if !(tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let real_arg = matches!(target, Target::A | Target::F | Target::Phi2);
    let out = if real_arg {
        let lam = parse_real(x)?;
        let (r, route) = match target {
            Target::A => (a_lambda(lam, tol)?, "closed form per unit interval plus periodic B2 tail"),
            Target::F => (f_func(lam, tol)?, "(A(1) - x)/2 minus the K-sum"),
            _ => (phi2(lam, tol)?, "periodic B2 sum at a rational approximant"),
        };
        EvalOut {
            value: r.value,
            abs_error_bound: r.abs_error_bound,
            depth: None,
            terms_used: Some(r.terms_used),
            terminated: false,
            route,
        }
    } else {
        let spec: RealSpec = x.parse()?;
        if target == Target::LPartial {
            let n = n.ok_or_else(|| usage("L-partial needs --n"))?;
            let v = partial_sum_l(&spec, n)?;
            EvalOut { value: v, abs_error_bound: 0.0, depth: Some(n), terms_used: None, terminated: false, route: "orbit partial sum" }
        } else {
            let (r, route) = match target {
                Target::G => (g_fast(&spec, tol)?, "W + H along the continued fraction orbit"),
                Target::Wilton => (wilton(&spec, tol)?, "alternating orbit sum"),
                Target::H => (h_func(&spec, tol)?, "-2 G along the orbit"),
                _ => (g_big(&spec, tol)?, "orbit sum of F"),
            };
            EvalOut {
                value: r.value,
                abs_error_bound: r.abs_error_bound,
                depth: Some(r.depth),
                terms_used: None,
                terminated: r.terminated,
                route,
            }
        }
    };
    let config = json!({"command": "eval", "target": target, "x": x, "tol": tol, "n": n, "format": cli.format});
    let body = match cli.format {
        Format::Json => to_json(&json!({"config": config, "result": out}))?,
        Format::Csv => format!(
            "value,abs_error_bound,depth,terms_used,terminated\n{:?},{:?},{},{},{}\n",
            out.value,
            out.abs_error_bound,
            out.depth.map(|d| d.to_string()).unwrap_or_default(),
            out.terms_used.map(|d| d.to_string()).unwrap_or_default(),
            out.terminated
        ),
        Format::Text => {
            let mut s = format!("value = {:?}\nabs_error_bound = {:?}\n", out.value, out.abs_error_bound);
            if let Some(d) = out.depth {
                let _ = writeln!(s, "depth = {d}");
            }
            if let Some(t) = out.terms_used {
                let _ = writeln!(s, "terms = {t}");
            }
            if out.terminated {
                s.push_str("terminated = true (rational input, finite partial sum)\n");
            }
            let _ = writeln!(s, "route = {}", out.route);
            s
        }
    };
    emit(cli, body.as_bytes())?;
    Ok(0)
}

fn cmd_moments(cli: &Cli, ks: &[u32], budget: u64, seed: u64, timing: bool) -> Result<u8, Failure> {
    for &k in ks {
        if k == 0 || k > moments::MAX_K {
            return Err(Failure { code: EXIT_DOMAIN, message: format!("K must lie in 1..={}, got {k}", moments::MAX_K) });
        }
    }
    let (calibrated, calib) = calibration_preflight(seed)?;
    if !calibrated {
        return Err(Failure {
            code: EXIT_CALIBRATION,
            message: format!("calibration failed: ∫ l^5 estimated as {} (ratio {})", calib.value, calib.ratio_to_prediction),
        });
    }
    let mut rows: Vec<MomentEstimate> = Vec::with_capacity(ks.len());
    for &k in ks {
        let start = Instant::now();
        let mut row = moment_table(&[k], budget, seed)?.remove(0);
        if timing {
            row.wall_seconds = Some(start.elapsed().as_secs_f64());
        }
        rows.push(row);
    }
    let config = json!({
        "command": "moments",
        "K": ks,
        "budget": budget,
        "seed": seed,
        "method": "importance_mc",
        "timing": timing,
        "format": cli.format,
    });
    let body = match cli.format {
        Format::Json => to_json(&json!({
            "config": config,
            "reference_constant": 2.0 * (-wilton_core::special::a_one().value).exp(),
            "ratios_bounded": ratios_bounded(&rows),
            "rows": rows,
        }))?
        .into_bytes(),
        Format::Csv => {
            let mut buf = format!("# config {config}\n").into_bytes();
            moments::write_table_csv(&rows, &mut buf)?;
            buf
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "{:>3} {:>14} {:>11} {:>9} {:>9} {:>12}", "K", "M_K", "std_error", "ratio", "M_K/K!", "M_K/pi^K");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{:>3} {:>14.6e} {:>11.3e} {:>9.5} {:>9.5} {:>12.6e}",
                    r.k, r.value, r.std_error, r.ratio_to_prediction, r.value_over_factorial, r.value_over_pi_k
                );
            }
            let _ = writeln!(s, "reference: M_K/K! -> 2exp(-A(1)) = {:.5}", 2.0 * (-wilton_core::special::a_one().value).exp());
            let _ = writeln!(s, "budget {budget}, seed {seed}");
            s.into_bytes()
        }
    };
    emit(cli, &body)?;
    if !ratios_bounded(&rows) {
        eprintln!("warning: a ratio for K >= 4 lies outside (0.2, 2.0)");
        return Ok(EXIT_INVARIANT);
    }
    Ok(0)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::from(Error::from(e)))?;
    s.push('\n');
    Ok(s)
}

/// Stdout, or an atomic write to `--output`.
fn emit(cli: &Cli, bytes: &[u8]) -> Result<(), Failure> {
    match &cli.output {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| Failure::from(Error::from(e)))
        }
        Some(path) => write_atomic(path, bytes).map_err(|e| Failure::from(Error::from(e))),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
