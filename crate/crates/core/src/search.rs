//! Grid searches over `(n, d) ∈ [1, n_max] × [1, d_max]` for a fixed window
//! length.
//!
//! The grid is walked d-major, n-minor. Rows are independent, so a batch of
//! rows is evaluated in parallel and then merged in ascending `d` before the
//! checkpoint is advanced. Checkpoints therefore always describe a prefix
//! `1..=m` of completed rows.
//!
//! Checkpoint file format (line oriented):
//!
//! ```text
//! k=<k> n_max=<n_max> d_max=<d_max> sieve=<0|1>
//! solution n=<n> d=<d> t=<t>
//! done d=<d>
//! ```
//!
//! `solution` lines precede the `done` line of their row and are only
//! written for rows that contain solutions.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rayon::prelude::*;

use crate::apsum::{square_root_of_window, window_sum_sq_closed, APWindow};
use crate::error::{Error, Result};
use crate::obstruction::residue_sieve_u64;
use crate::residues::{classify_prime_mod12, is_prime_u64};

const ROWS_PER_BATCH: u64 = 64;

/// A window `(n, d)` of the searched length whose sum of squares is `t²`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Solution {
    pub d: u64,
    pub n: u64,
    pub t: BigInt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Nonexistence check; any solution is a counterexample.
    Verify,
    /// Discovery of square windows.
    Search,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridParams {
    pub k: u64,
    pub n_max: u64,
    pub d_max: u64,
    pub sieve: bool,
}

impl GridParams {
    pub fn fingerprint(&self) -> String {
        format!(
            "k={} n_max={} d_max={} sieve={}",
            self.k, self.n_max, self.d_max, self.sieve as u8
        )
    }

    pub fn grid_size(&self) -> u128 {
        self.n_max as u128 * self.d_max as u128
    }
}

/// Resume position: the run's fingerprint and the last fully completed row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResumeToken {
    pub fingerprint: String,
    pub last_completed_row: u64,
}

impl fmt::Display for ResumeToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};done d={}", self.fingerprint, self.last_completed_row)
    }
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    pub mode: Mode,
    pub k: u64,
    pub n_range: (u64, u64),
    pub d_range: (u64, u64),
    /// Cells whose sum was actually tested.
    pub windows_checked: u64,
    /// Tested cells with `k ∤ n·d`, tracked when `k` is a prime `≥ 5`.
    pub coprime_checked: Option<u64>,
    pub solutions: Vec<Solution>,
    pub sieve_used: bool,
    pub elapsed: Duration,
    pub checkpoint_state: ResumeToken,
    /// False when the run stopped before the last row.
    pub complete: bool,
}

impl SearchReport {
    pub fn grid_size(&self) -> u128 {
        self.n_range.1 as u128 * self.d_range.1 as u128
    }

    /// A solution found while verifying a nonexistence claim.
    pub fn is_counterexample(&self) -> bool {
        self.mode == Mode::Verify && !self.solutions.is_empty()
    }
}

/// Knobs that do not change the result, only how it is reached.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub checkpoint: Option<PathBuf>,
    /// Process at most this many new rows, then return an incomplete report.
    pub stop_after_rows: Option<u64>,
}

impl RunOptions {
    pub fn with_checkpoint(path: impl Into<PathBuf>) -> Self {
        RunOptions {
            checkpoint: Some(path.into()),
            stop_after_rows: None,
        }
    }
}

/// Exhaustively confirms that no window of length `p` in the grid has a
/// square sum. `p` must be 3 or a prime `≥ 5` at which 3 is a non-residue.
pub fn verify_no_solutions(
    p: u64,
    n_max: u64,
    d_max: u64,
    checkpoint: Option<&Path>,
) -> Result<SearchReport> {
    let opts = RunOptions {
        checkpoint: checkpoint.map(Path::to_path_buf),
        stop_after_rows: None,
    };
    verify_no_solutions_with(p, n_max, d_max, &opts)
}

pub fn verify_no_solutions_with(
    p: u64,
    n_max: u64,
    d_max: u64,
    opts: &RunOptions,
) -> Result<SearchReport> {
    if p != 3 {
        if p < 5 || !is_prime_u64(p) {
            return Err(Error::domain(format!(
                "verification needs p = 3 or a prime p >= 5, got {p}"
            )));
        }
        if classify_prime_mod12(&BigInt::from(p))?.three_is_residue() {
            return Err(Error::precondition(format!(
                "3 is a quadratic residue mod {p}, so square windows may exist; use find_solutions (the `search` command) instead"
            )));
        }
    }
    let params = GridParams {
        k: p,
        n_max,
        d_max,
        sieve: false,
    };
    run_grid(Mode::Verify, params, opts)
}

/// Every `(n, d, t)` in the grid with `S(n, d, k) = t²`, ascending in `(d, n)`.
///
/// With `use_sieve` and `k` a prime `≥ 5`, cells with `k ∤ n·d` are only
/// tested when `d·n⁻¹ mod k` is an admissible ratio, and cells with `k | n`
/// and `k | d` inherit the decision of `(n/k, d/k)`. The result set does not
/// change.
pub fn find_solutions(k: u64, n_max: u64, d_max: u64, use_sieve: bool) -> Result<SearchReport> {
    find_solutions_with(k, n_max, d_max, use_sieve, &RunOptions::default())
}

pub fn find_solutions_with(
    k: u64,
    n_max: u64,
    d_max: u64,
    use_sieve: bool,
    opts: &RunOptions,
) -> Result<SearchReport> {
    if k < 2 {
        return Err(Error::domain(format!("search needs k >= 2, got {k}")));
    }
    let params = GridParams {
        k,
        n_max,
        d_max,
        sieve: use_sieve,
    };
    run_grid(Mode::Search, params, opts)
}

/// Cell filter for one length `k`.
struct RowScanner {
    k: u64,
    n_max: u64,
    /// Set when `k` is a prime `≥ 5`; strata are defined relative to it.
    prime: Option<u64>,
    /// Admissible ratios, when the sieve is active.
    admissible: Option<Vec<u64>>,
}

#[derive(Debug, Default)]
struct RowResult {
    checked: u64,
    coprime_checked: u64,
    solutions: Vec<Solution>,
}

impl RowScanner {
    fn new(params: &GridParams) -> Result<Self> {
        let prime = (params.k >= 5 && is_prime_u64(params.k)).then_some(params.k);
        let admissible = match (params.sieve, prime) {
            (true, Some(p)) => Some(residue_sieve_u64(p)?),
            _ => None,
        };
        Ok(RowScanner {
            k: params.k,
            n_max: params.n_max,
            prime,
            admissible,
        })
    }

    fn sieve_used(&self) -> bool {
        self.admissible.is_some()
    }

    fn is_coprime(&self, n: u64, d: u64) -> bool {
        self.prime
            .is_some_and(|p| !n.is_multiple_of(p) && !d.is_multiple_of(p))
    }

    fn admits(&self, mut n: u64, mut d: u64) -> bool {
        let (Some(p), Some(admissible)) = (self.prime, &self.admissible) else {
            return true;
        };
        loop {
            match (n.is_multiple_of(p), d.is_multiple_of(p)) {
                (false, false) => {
                    let (n, d) = (n as u128, d as u128);
                    return admissible
                        .iter()
                        .any(|&r| (r as u128 * n) % p as u128 == d % p as u128);
                }
                (true, true) => {
                    n /= p;
                    d /= p;
                }
                // mixed stratum: scanned, not pruned
                _ => return true,
            }
        }
    }

    fn scan(&self, d: u64, evaluate: bool) -> RowResult {
        let mut out = RowResult::default();
        for n in 1..=self.n_max {
            if !self.admits(n, d) {
                continue;
            }
            out.checked += 1;
            if self.is_coprime(n, d) {
                out.coprime_checked += 1;
            }
            if evaluate {
                if let Some((_, t)) = square_root_of_window(n, d, self.k) {
                    out.solutions.push(Solution { d, n, t });
                }
            }
        }
        out
    }
}

/// Re-derives `t²` through the exact closed form before accepting a solution.
fn verified(k: u64, s: Solution) -> Result<Solution> {
    let w = APWindow::new(s.n, s.d, k)?;
    if &s.t * &s.t != window_sum_sq_closed(&w) {
        return Err(Error::Consistency(format!(
            "claimed solution n={} d={} t={} fails for k={k}",
            s.n, s.d, s.t
        )));
    }
    Ok(s)
}

fn run_grid(mode: Mode, params: GridParams, opts: &RunOptions) -> Result<SearchReport> {
    if params.n_max == 0 || params.d_max == 0 {
        return Err(Error::domain("grid bounds must be at least 1"));
    }
    let started = Instant::now();
    let scanner = RowScanner::new(&params)?;

    let mut solutions = Vec::new();
    let mut checked = 0u64;
    let mut coprime_checked = 0u64;

    let mut journal = match &opts.checkpoint {
        Some(path) => Some(Journal::open(path, &params)?),
        None => None,
    };
    let mut next_row = 1u64;
    if let Some(j) = &journal {
        for s in &j.restored.solutions {
            solutions.push(verified(params.k, s.clone())?);
        }
        // Cell counts of restored rows are recounted; only their squares are skipped.
        for d in 1..=j.restored.last_row {
            let row = scanner.scan(d, false);
            checked += row.checked;
            coprime_checked += row.coprime_checked;
        }
        next_row = j.restored.last_row + 1;
    }

    let mut budget = opts.stop_after_rows.unwrap_or(u64::MAX);
    while next_row <= params.d_max && budget > 0 {
        let batch_end = params.d_max.min(next_row + ROWS_PER_BATCH.min(budget) - 1);
        let rows: Vec<RowResult> = (next_row..=batch_end)
            .into_par_iter()
            .map(|d| scanner.scan(d, true))
            .collect();
        for (d, row) in (next_row..=batch_end).zip(rows) {
            checked += row.checked;
            coprime_checked += row.coprime_checked;
            let row_solutions = row
                .solutions
                .into_iter()
                .map(|s| verified(params.k, s))
                .collect::<Result<Vec<_>>>()?;
            if let Some(j) = journal.as_mut() {
                j.record_row(d, &row_solutions)?;
            }
            solutions.extend(row_solutions);
        }
        if let Some(j) = journal.as_mut() {
            j.flush()?;
        }
        budget -= batch_end - next_row + 1;
        next_row = batch_end + 1;
    }

    let last_completed_row = next_row - 1;
    Ok(SearchReport {
        mode,
        k: params.k,
        n_range: (1, params.n_max),
        d_range: (1, params.d_max),
        windows_checked: checked,
        coprime_checked: scanner.prime.map(|_| coprime_checked),
        solutions,
        sieve_used: scanner.sieve_used(),
        elapsed: started.elapsed(),
        checkpoint_state: ResumeToken {
            fingerprint: params.fingerprint(),
            last_completed_row,
        },
        complete: last_completed_row == params.d_max,
    })
}

#[derive(Debug, Default)]
struct Restored {
    last_row: u64,
    solutions: Vec<Solution>,
}

/// Append-only checkpoint file. Single writer.
struct Journal {
    path: PathBuf,
    out: BufWriter<File>,
    restored: Restored,
}

impl Journal {
    fn open(path: &Path, params: &GridParams) -> Result<Self> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let fingerprint = params.fingerprint();
        let restored = if path.exists() {
            let file = File::open(path).map_err(io)?;
            let lines = BufReader::new(file)
                .lines()
                .collect::<std::io::Result<Vec<_>>>()
                .map_err(io)?;
            parse_checkpoint(path, &lines, &fingerprint, params)?
        } else {
            Restored::default()
        };
        let fresh = !path.exists();
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io)?;
        let mut out = BufWriter::new(file);
        if fresh {
            writeln!(out, "{fingerprint}").map_err(io)?;
            out.flush().map_err(io)?;
        }
        Ok(Journal {
            path: path.to_path_buf(),
            out,
            restored,
        })
    }

    fn record_row(&mut self, d: u64, solutions: &[Solution]) -> Result<()> {
        let io = |source| Error::Io {
            path: self.path.clone(),
            source,
        };
        for s in solutions {
            writeln!(self.out, "solution n={} d={} t={}", s.n, s.d, s.t).map_err(io)?;
        }
        writeln!(self.out, "done d={d}").map_err(io)
    }

    fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|source| Error::Io {
            path: self.path.clone(),
            source,
        })
    }
}

fn parse_checkpoint(
    path: &Path,
    lines: &[String],
    fingerprint: &str,
    params: &GridParams,
) -> Result<Restored> {
    let mismatch = |reason: String| Error::CheckpointMismatch {
        path: path.to_path_buf(),
        reason,
    };
    let Some(first) = lines.first() else {
        return Err(mismatch("file is empty".into()));
    };
    if first.trim() != fingerprint {
        return Err(mismatch(format!(
            "fingerprint `{}` != `{fingerprint}`",
            first.trim()
        )));
    }
    let mut restored = Restored::default();
    let mut pending = Vec::new();
    for (idx, raw) in lines.iter().enumerate().skip(1) {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        if let Some(rest) = line.strip_prefix("done d=") {
            let d: u64 = rest
                .parse()
                .map_err(|_| mismatch(format!("line {lineno}: bad row `{line}`")))?;
            if d != restored.last_row + 1 || d > params.d_max {
                return Err(mismatch(format!(
                    "line {lineno}: row {d} does not continue the completed prefix 1..={}",
                    restored.last_row
                )));
            }
            restored.last_row = d;
            restored.solutions.append(&mut pending);
        } else if let Some(rest) = line.strip_prefix("solution ") {
            let s = parse_solution(rest)
                .ok_or_else(|| mismatch(format!("line {lineno}: bad solution `{line}`")))?;
            if s.d != restored.last_row + 1 || s.n == 0 || s.n > params.n_max {
                return Err(mismatch(format!(
                    "line {lineno}: solution outside the next row"
                )));
            }
            pending.push(s);
        } else {
            return Err(mismatch(format!("line {lineno}: unrecognized `{line}`")));
        }
    }
    // Solutions without a closing `done` line belong to an unfinished row and are dropped.
    Ok(restored)
}

fn parse_solution(rest: &str) -> Option<Solution> {
    let mut n = None;
    let mut d = None;
    let mut t = None;
    for field in rest.split_whitespace() {
        let (key, value) = field.split_once('=')?;
        match key {
            "n" => n = Some(value.parse().ok()?),
            "d" => d = Some(value.parse().ok()?),
            "t" => t = Some(value.parse().ok()?),
            _ => return None,
        }
    }
    Some(Solution {
        n: n?,
        d: d?,
        t: t?,
    })
}
