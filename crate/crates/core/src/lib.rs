//! Exact arithmetic on sums of squares of arithmetic-progression windows.
//!
//! - [`arith`]: integer square roots, p-adic splits, modular powers and inverses.
//! - [`residues`]: primality, Legendre and Jacobi symbols, the mod-12 character of 3, modular square roots.
//! - [`apsum`]: window sums `n² + (n+d)² + ... + (n+(k-1)d)²` and the square decision.
//! - [`obstruction`]: per-window certificates ruling out a square, and the residue sieve.
//! - [`search`]: checkpointed grid verification and discovery.
//! - [`cli`]: the `apsquares` command line.

pub mod apsum;
pub mod arith;
pub mod cli;
pub mod error;
pub mod obstruction;
pub mod residues;
pub mod search;

pub use apsum::{
    check_window_square, sum_first_k, sum_sq_first_k, window_sum_sq_closed, window_sum_sq_direct,
    APWindow, SquareOutcome,
};
pub use arith::{is_perfect_square, isqrt, modinv, modpow, padic_split, PAdicSplit};
pub use error::{Error, Result};
pub use obstruction::{
    obstruction_witness, residual_congruence_holds, residue_sieve, six_sum_valuation,
    trace_length_three, trace_window, valuation_law, ObstructionKind, ObstructionWitness,
    TraceReport,
};
pub use residues::{
    classify_prime_mod12, is_prime, jacobi, legendre_euler, sqrt_mod_prime, PrimeProfile,
};
pub use search::{find_solutions, verify_no_solutions, RunOptions, SearchReport, Solution};
