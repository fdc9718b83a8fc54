//! Command-line front end: argument validation, dispatch and rendering.
//!
//! Exit statuses: 0 success, 1 counterexample found by `verify`, 2 usage or
//! domain error. Reports go to stdout; errors are a single JSON line on stderr
//! of the form `{"error":"<kind>","message":"<text>"}`.
//!
//! JSON output is canonical: object keys sorted, no whitespace, one trailing
//! newline. Integers above `2^53 - 1` in magnitude are emitted as decimal
//! strings.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde_json::{json, Map, Value};

use crate::apsum::{check_window_square, sum_first_k, sum_sq_first_k, APWindow, SquareOutcome};
use crate::arith::PAdicSplit;
use crate::error::Error;
use crate::obstruction::{trace_window, TraceReport};
use crate::residues::{
    classify_prime_mod12, deterministic_prime_limit, is_prime, jacobi, legendre_euler,
    sqrt_mod_prime, PrimeProfile, DETERMINISTIC_PRIME_LIMIT,
};
use crate::search::{
    find_solutions_with, verify_no_solutions_with, Mode, RunOptions, SearchReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COUNTEREXAMPLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable consulted when `--format` is not given.
pub const FORMAT_ENV: &str = "APSQUARES_FORMAT";

/// CSV header for search and verify reports.
pub const SEARCH_CSV_HEADER: &str = "k,n,d,t";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Parser)]
#[command(
    name = "apsquares",
    version,
    about = "Sums of squares over arithmetic-progression windows: symbols, traces, verification and search"
)]
pub struct CliRequest {
    #[arg(long, value_enum, global = true, env = FORMAT_ENV, default_value = "json")]
    pub format: OutputFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Residue class of a prime p >= 5 mod 12 and the quadratic character of 3.
    Classify {
        #[arg(long)]
        p: BigInt,
    },
    /// Legendre symbol (a/p) by Euler's criterion, cross-checked by reciprocity.
    Legendre {
        #[arg(long, allow_hyphen_values = true)]
        a: BigInt,
        #[arg(long)]
        p: BigInt,
    },
    /// Square roots of a modulo an odd prime p.
    Sqrtmod {
        #[arg(long, allow_hyphen_values = true)]
        a: BigInt,
        #[arg(long)]
        p: BigInt,
    },
    /// 1 + ... + k and 1² + ... + k².
    Sum {
        #[arg(long)]
        k: BigInt,
    },
    /// Sum of squares of the window n, n+d, ..., n+(k-1)d and whether it is a square.
    Check {
        #[arg(long, allow_hyphen_values = true)]
        n: BigInt,
        #[arg(long, allow_hyphen_values = true)]
        d: BigInt,
        #[arg(long)]
        k: BigInt,
    },
    /// Obstruction that rules out a square sum for one window.
    Trace {
        #[arg(long, allow_hyphen_values = true)]
        n: BigInt,
        #[arg(long, allow_hyphen_values = true)]
        d: BigInt,
        #[arg(long)]
        k: BigInt,
    },
    /// Exhaustive nonexistence check for p = 3 or a prime with 3 a non-residue.
    Verify {
        #[arg(long)]
        p: BigInt,
        #[arg(long = "max-n")]
        max_n: BigInt,
        #[arg(long = "max-d")]
        max_d: BigInt,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Stop after this many newly processed rows (resume later from the checkpoint).
        #[arg(long = "stop-after-rows")]
        stop_after_rows: Option<u64>,
    },
    /// Find every square window of length k in the grid.
    Search {
        #[arg(long)]
        k: BigInt,
        #[arg(long = "max-n")]
        max_n: BigInt,
        #[arg(long = "max-d")]
        max_d: BigInt,
        #[arg(long)]
        sieve: bool,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long = "stop-after-rows")]
        stop_after_rows: Option<u64>,
    },
}

/// Result of one invocation, ready to be written out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Report {
    Classify(PrimeProfile),
    Legendre {
        a: BigInt,
        p: BigInt,
        legendre: i8,
        jacobi: i8,
    },
    SqrtMod {
        a: BigInt,
        p: BigInt,
        roots: Option<(BigInt, BigInt)>,
    },
    Sums {
        k: BigInt,
        sum: BigInt,
        sum_sq: BigInt,
    },
    Check {
        window: APWindow,
        outcome: SquareOutcome,
    },
    Trace(TraceReport),
    Search(SearchReport),
}

/// Parses `args` (including the program name) and runs the request.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match CliRequest::try_parse_from(args) {
        Ok(request) => dispatch(request),
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                return Outcome {
                    code: EXIT_OK,
                    stdout: err.to_string().into_bytes(),
                    stderr: Vec::new(),
                };
            }
            let message = err.to_string();
            let first = message
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            failure("usage", first)
        }
    }
}

pub fn dispatch(request: CliRequest) -> Outcome {
    match execute(request.command) {
        Ok(report) => conclude(&report, request.format),
        Err(err) => failure(err.kind(), &err.to_string()),
    }
}

/// Exit status and rendered output for a finished report.
pub fn conclude(report: &Report, format: OutputFormat) -> Outcome {
    let stdout = render(report, format);
    match report {
        Report::Search(r) if r.is_counterexample() => Outcome {
            code: EXIT_COUNTEREXAMPLE,
            stdout,
            stderr: error_record(
                "counterexample",
                &format!(
                    "{} square window(s) found for p = {}",
                    r.solutions.len(),
                    r.k
                ),
            ),
        },
        _ => Outcome {
            code: EXIT_OK,
            stdout,
            stderr: Vec::new(),
        },
    }
}

fn failure(kind: &str, message: &str) -> Outcome {
    Outcome {
        code: EXIT_USAGE,
        stdout: Vec::new(),
        stderr: error_record(kind, message),
    }
}

fn error_record(kind: &str, message: &str) -> Vec<u8> {
    let mut line =
        serde_json::to_string(&json!({ "error": kind, "message": message })).expect("serializable");
    line.push('\n');
    line.into_bytes()
}

/// Prime parameters must lie in the range where primality is proven.
fn prime_in_range(p: &BigInt, what: &str) -> Result<(), Error> {
    if *p >= deterministic_prime_limit() {
        return Err(Error::Domain(format!(
            "{what} = {p} exceeds the proven primality range (< {DETERMINISTIC_PRIME_LIMIT})"
        )));
    }
    Ok(())
}

fn grid_bound(value: &BigInt, flag: &str) -> Result<u64, Error> {
    if !value.is_positive() {
        return Err(Error::Domain(format!(
            "--{flag} must be at least 1, got {value}"
        )));
    }
    value
        .to_u64()
        .ok_or_else(|| Error::Domain(format!("--{flag} = {value} is too large to enumerate")))
}

fn execute(command: Command) -> Result<Report, Error> {
    match command {
        Command::Classify { p } => {
            prime_in_range(&p, "p")?;
            Ok(Report::Classify(classify_prime_mod12(&p)?))
        }
        Command::Legendre { a, p } => {
            prime_in_range(&p, "p")?;
            let legendre = legendre_euler(&a, &p)?;
            let by_reciprocity = jacobi(&a, &p)?;
            if legendre != by_reciprocity {
                return Err(Error::Consistency(format!(
                    "Euler's criterion gives {legendre}, reciprocity gives {by_reciprocity} for ({a}/{p})"
                )));
            }
            Ok(Report::Legendre {
                a,
                p,
                legendre,
                jacobi: by_reciprocity,
            })
        }
        Command::Sqrtmod { a, p } => {
            prime_in_range(&p, "p")?;
            let roots = sqrt_mod_prime(&a, &p)?;
            Ok(Report::SqrtMod { a, p, roots })
        }
        Command::Sum { k } => Ok(Report::Sums {
            sum: sum_first_k(&k)?,
            sum_sq: sum_sq_first_k(&k)?,
            k,
        }),
        Command::Check { n, d, k } => {
            let window = APWindow::new(n, d, k)?;
            let outcome = check_window_square(&window);
            Ok(Report::Check { window, outcome })
        }
        Command::Trace { n, d, k } => {
            let window = APWindow::new(n, d, k)?;
            if is_prime(window.k()) {
                prime_in_range(window.k(), "k")?;
            }
            Ok(Report::Trace(trace_window(&window)?))
        }
        Command::Verify {
            p,
            max_n,
            max_d,
            checkpoint,
            stop_after_rows,
        } => {
            let p = grid_bound(&p, "p")?;
            let opts = RunOptions {
                checkpoint,
                stop_after_rows,
            };
            let report = verify_no_solutions_with(
                p,
                grid_bound(&max_n, "max-n")?,
                grid_bound(&max_d, "max-d")?,
                &opts,
            )?;
            Ok(Report::Search(report))
        }
        Command::Search {
            k,
            max_n,
            max_d,
            sieve,
            checkpoint,
            stop_after_rows,
        } => {
            let k = grid_bound(&k, "k")?;
            let opts = RunOptions {
                checkpoint,
                stop_after_rows,
            };
            let report = find_solutions_with(
                k,
                grid_bound(&max_n, "max-n")?,
                grid_bound(&max_d, "max-d")?,
                sieve,
                &opts,
            )?;
            Ok(Report::Search(report))
        }
    }
}

const MAX_SAFE_JSON_INT: i64 = (1 << 53) - 1;

/// Exact JSON encoding: a number when a double holds it exactly, else a decimal string.
pub fn json_int(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) if v.abs() <= MAX_SAFE_JSON_INT => Value::from(v),
        _ => Value::String(x.to_string()),
    }
}

fn json_opt(x: Option<&BigInt>) -> Value {
    x.map_or(Value::Null, json_int)
}

fn json_split(s: &PAdicSplit) -> Value {
    json!({ "unit": json_int(&s.unit), "valuation": s.valuation })
}

pub fn to_json(report: &Report) -> Value {
    match report {
        Report::Classify(p) => json!({
            "legendre3": p.legendre3,
            "mod12": p.residue_mod_12,
            "p": json_int(&p.p),
        }),
        Report::Legendre {
            a,
            p,
            legendre,
            jacobi,
        } => json!({
            "a": json_int(a),
            "jacobi": jacobi,
            "legendre": legendre,
            "p": json_int(p),
        }),
        Report::SqrtMod { a, p, roots } => json!({
            "a": json_int(a),
            "p": json_int(p),
            "roots": roots.as_ref().map_or(Value::Null, |(x, y)| json!([json_int(x), json_int(y)])),
        }),
        Report::Sums { k, sum, sum_sq } => json!({
            "k": json_int(k),
            "sum_first_k": json_int(sum),
            "sum_sq_first_k": json_int(sum_sq),
        }),
        Report::Check { window, outcome } => json!({
            "d": json_int(window.d()),
            "floor_root": json_int(&outcome.floor_root),
            "k": json_int(window.k()),
            "n": json_int(window.n()),
            "root": json_opt(outcome.root.as_ref()),
            "sum": json_int(&outcome.sum),
        }),
        Report::Trace(t) => {
            let details = &t.details;
            json!({
                "case": t.valuation_case(),
                "d": json_int(t.window.d()),
                "d_split": t.d_split.as_ref().map_or(Value::Null, json_split),
                "details": {
                    "predicted_valuation": details.predicted_valuation,
                    "quantity": details.quantity.as_str(),
                    "quotient_residue": json_int(&details.quotient_residue),
                    "root": json_opt(details.root.as_ref()),
                    "sum": json_int(&details.sum),
                    "valuation": details.valuation,
                },
                "k": json_int(t.window.k()),
                "n": json_int(t.window.n()),
                "n_split": t.n_split.as_ref().map_or(Value::Null, json_split),
                "obstruction": t.obstruction.as_str(),
                "prime": json_opt(t.prime.as_ref()),
            })
        }
        Report::Search(r) => {
            let solutions: Vec<Value> = r
                .solutions
                .iter()
                .map(|s| json!({ "d": s.d, "n": s.n, "t": json_int(&s.t) }))
                .collect();
            let mut map = Map::new();
            map.insert("complete".into(), r.complete.into());
            map.insert("coprime_checked".into(), r.coprime_checked.into());
            map.insert("d_max".into(), r.d_range.1.into());
            map.insert("k".into(), r.k.into());
            map.insert(
                "mode".into(),
                match r.mode {
                    Mode::Verify => "verify",
                    Mode::Search => "search",
                }
                .into(),
            );
            map.insert("n_max".into(), r.n_range.1.into());
            map.insert("resume".into(), r.checkpoint_state.to_string().into());
            map.insert("sieve".into(), r.sieve_used.into());
            map.insert("solutions".into(), Value::Array(solutions));
            map.insert("windows".into(), r.windows_checked.into());
            Value::Object(map)
        }
    }
}

fn csv(header: &str, rows: &[Vec<String>]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn opt_str(x: Option<&BigInt>) -> String {
    x.map(ToString::to_string).unwrap_or_default()
}

pub fn to_csv(report: &Report) -> String {
    match report {
        Report::Classify(p) => csv(
            "p,mod12,legendre3",
            &[vec![
                p.p.to_string(),
                p.residue_mod_12.to_string(),
                p.legendre3.to_string(),
            ]],
        ),
        Report::Legendre {
            a,
            p,
            legendre,
            jacobi,
        } => csv(
            "a,p,legendre,jacobi",
            &[vec![
                a.to_string(),
                p.to_string(),
                legendre.to_string(),
                jacobi.to_string(),
            ]],
        ),
        Report::SqrtMod { a, p, roots } => csv(
            "a,p,root_low,root_high",
            &[vec![
                a.to_string(),
                p.to_string(),
                opt_str(roots.as_ref().map(|r| &r.0)),
                opt_str(roots.as_ref().map(|r| &r.1)),
            ]],
        ),
        Report::Sums { k, sum, sum_sq } => csv(
            "k,sum_first_k,sum_sq_first_k",
            &[vec![k.to_string(), sum.to_string(), sum_sq.to_string()]],
        ),
        Report::Check { window, outcome } => csv(
            "n,d,k,sum,floor_root,root",
            &[vec![
                window.n().to_string(),
                window.d().to_string(),
                window.k().to_string(),
                outcome.sum.to_string(),
                outcome.floor_root.to_string(),
                opt_str(outcome.root.as_ref()),
            ]],
        ),
        Report::Trace(t) => csv(
            "n,d,k,prime,e,f,obstruction,quantity,valuation,quotient_residue,sum",
            &[vec![
                t.window.n().to_string(),
                t.window.d().to_string(),
                t.window.k().to_string(),
                opt_str(t.prime.as_ref()),
                t.n_split
                    .as_ref()
                    .map(|s| s.valuation.to_string())
                    .unwrap_or_default(),
                t.d_split
                    .as_ref()
                    .map(|s| s.valuation.to_string())
                    .unwrap_or_default(),
                t.obstruction.to_string(),
                t.details.quantity.as_str().to_string(),
                t.details.valuation.to_string(),
                t.details.quotient_residue.to_string(),
                t.details.sum.to_string(),
            ]],
        ),
        Report::Search(r) => {
            let rows: Vec<Vec<String>> = r
                .solutions
                .iter()
                .map(|s| {
                    vec![
                        r.k.to_string(),
                        s.n.to_string(),
                        s.d.to_string(),
                        s.t.to_string(),
                    ]
                })
                .collect();
            csv(SEARCH_CSV_HEADER, &rows)
        }
    }
}

pub fn to_text(report: &Report) -> String {
    let mut out = String::new();
    match report {
        Report::Classify(p) => {
            let verdict = if p.three_is_residue() {
                "a quadratic residue"
            } else {
                "a quadratic non-residue"
            };
            let _ = writeln!(
                out,
                "p = {} ≡ {} (mod 12); 3 is {verdict} mod p",
                p.p, p.residue_mod_12
            );
        }
        Report::Legendre { a, p, legendre, .. } => {
            let _ = writeln!(out, "({a}/{p}) = {legendre}");
        }
        Report::SqrtMod { a, p, roots } => match roots {
            Some((x, y)) => {
                let _ = writeln!(out, "x² ≡ {a} (mod {p}): x ∈ {{{x}, {y}}}");
            }
            None => {
                let _ = writeln!(out, "{a} is a quadratic non-residue mod {p}");
            }
        },
        Report::Sums { k, sum, sum_sq } => {
            let _ = writeln!(out, "1 + ... + {k} = {sum}\n1² + ... + {k}² = {sum_sq}");
        }
        Report::Check { window, outcome } => {
            let _ = match &outcome.root {
                Some(t) => writeln!(out, "S{window} = {} = {t}²", outcome.sum),
                None => writeln!(
                    out,
                    "S{window} = {} is not a square ({}² < S < {}²)",
                    outcome.sum,
                    outcome.floor_root,
                    &outcome.floor_root + 1
                ),
            };
        }
        Report::Trace(t) => {
            let _ = writeln!(out, "window {}: S = {}", t.window, t.details.sum);
            if let (Some(p), Some(ns), Some(ds)) = (&t.prime, &t.n_split, &t.d_split) {
                let _ = writeln!(
                    out,
                    "  n = {p}^{} * {}, d = {p}^{} * {}",
                    ns.valuation, ns.unit, ds.valuation, ds.unit
                );
                let _ = writeln!(
                    out,
                    "  v_{p}({}) = {}, cofactor ≡ {} (mod {p})",
                    t.details.quantity.as_str(),
                    t.details.valuation,
                    t.details.quotient_residue
                );
            }
            let _ = writeln!(out, "  obstruction: {}", t.obstruction);
        }
        Report::Search(r) => {
            let _ = writeln!(
                out,
                "{} k={} n<={} d<={} sieve={}: {} windows tested, {} solution(s), {}{:.3}s",
                match r.mode {
                    Mode::Verify => "verify",
                    Mode::Search => "search",
                },
                r.k,
                r.n_range.1,
                r.d_range.1,
                r.sieve_used,
                r.windows_checked,
                r.solutions.len(),
                if r.complete { "" } else { "INCOMPLETE, " },
                r.elapsed.as_secs_f64()
            );
            for s in &r.solutions {
                let _ = writeln!(out, "  n={} d={} t={}", s.n, s.d, s.t);
            }
        }
    }
    out
}

pub fn render(report: &Report, format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string(&to_json(report)).expect("serializable");
            s.push('\n');
            s.into_bytes()
        }
        OutputFormat::Csv => to_csv(report).into_bytes(),
        OutputFormat::Text => to_text(report).into_bytes(),
    }
}
