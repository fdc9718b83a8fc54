//! Sums of squares over windows of an increasing arithmetic progression.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};

use crate::arith::{isqrt, isqrt_u128};
use crate::error::{Error, Result};

/// `k` consecutive terms `n, n+d, ..., n+(k-1)d` with `n, d, k ≥ 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct APWindow {
    n: BigInt,
    d: BigInt,
    k: BigInt,
}

impl APWindow {
    pub fn new(n: impl Into<BigInt>, d: impl Into<BigInt>, k: impl Into<BigInt>) -> Result<Self> {
        let (n, d, k) = (n.into(), d.into(), k.into());
        if !n.is_positive() {
            return Err(Error::domain(format!(
                "first term must be positive, got {n}"
            )));
        }
        if !d.is_positive() {
            return Err(Error::domain(format!(
                "common difference must be positive (constant and decreasing progressions are excluded), got {d}"
            )));
        }
        if !k.is_positive() {
            return Err(Error::domain(format!(
                "window length must be positive, got {k}"
            )));
        }
        Ok(APWindow { n, d, k })
    }

    pub fn n(&self) -> &BigInt {
        &self.n
    }

    pub fn d(&self) -> &BigInt {
        &self.d
    }

    pub fn k(&self) -> &BigInt {
        &self.k
    }

    /// `(n, d, k)` as machine words, when all three fit.
    pub fn to_u64_triple(&self) -> Option<(u64, u64, u64)> {
        Some((self.n.to_u64()?, self.d.to_u64()?, self.k.to_u64()?))
    }

    pub fn is_degenerate(&self) -> bool {
        self.k.is_one()
    }

    /// The window scaled termwise by `m`.
    pub fn scaled(&self, m: &BigInt) -> Result<Self> {
        APWindow::new(&self.n * m, &self.d * m, self.k.clone())
    }
}

impl fmt::Display for APWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, d={}, k={})", self.n, self.d, self.k)
    }
}

/// A window's sum of squares with its floor root, and the exact root when there is one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareOutcome {
    pub sum: BigInt,
    pub floor_root: BigInt,
    pub root: Option<BigInt>,
}

impl SquareOutcome {
    pub fn is_square(&self) -> bool {
        self.root.is_some()
    }
}

fn require_positive(k: &BigInt) -> Result<()> {
    if !k.is_positive() {
        return Err(Error::domain(format!("k must be positive, got {k}")));
    }
    Ok(())
}

/// `1 + 2 + ... + k = k(k+1)/2`.
pub fn sum_first_k(k: &BigInt) -> Result<BigInt> {
    require_positive(k)?;
    Ok(k * (k + 1u32) / 2u32)
}

/// `1² + 2² + ... + k² = k(k+1)(2k+1)/6`.
pub fn sum_sq_first_k(k: &BigInt) -> Result<BigInt> {
    require_positive(k)?;
    let numerator = k * (k + 1u32) * (k * 2u32 + 1u32);
    debug_assert!(numerator.is_multiple_of(&BigInt::from(6)));
    Ok(numerator / 6u32)
}

/// `Σ_{i<k} (n + i·d)²`, term by term.
pub fn window_sum_sq_direct(w: &APWindow) -> BigInt {
    let mut term = w.n.clone();
    let mut total = BigInt::default();
    let mut i = BigInt::default();
    while i < w.k {
        total += &term * &term;
        term += &w.d;
        i += 1u32;
    }
    total
}

/// `k·n² + k(k−1)·n·d + [k(k−1)(2k−1)/6]·d²`.
///
/// The middle coefficient is `2·(1 + ... + (k−1))` and the last is
/// `1² + ... + (k−1)²`.
pub fn window_sum_sq_closed(w: &APWindow) -> BigInt {
    let APWindow { n, d, k } = w;
    let km1: BigInt = k - 1u32;
    let cross = k * &km1;
    let squares = if km1.is_positive() {
        sum_sq_first_k(&km1).expect("k - 1 >= 1")
    } else {
        BigInt::default()
    };
    k * n * n + cross * n * d + squares * d * d
}

/// Closed-form sum and its square-root decision.
pub fn check_window_square(w: &APWindow) -> SquareOutcome {
    let sum = window_sum_sq_closed(w);
    let floor_root = isqrt(&sum).expect("sum of squares is non-negative");
    let root = (&floor_root * &floor_root == sum).then(|| floor_root.clone());
    SquareOutcome {
        sum,
        floor_root,
        root,
    }
}

/// Machine-word evaluation of the closed form for the search loops.
/// `None` when any intermediate would overflow `u128`.
pub(crate) fn window_sum_sq_u128(n: u64, d: u64, k: u64) -> Option<u128> {
    let (n, d, k) = (n as u128, d as u128, k as u128);
    let km1 = k.checked_sub(1)?;
    let cross = k.checked_mul(km1)?;
    // k(k−1)(2k−1)/6 with the division applied before the last product
    let squares = if km1 == 0 {
        0
    } else {
        let a = km1;
        let b = k;
        let c = km1.checked_mul(2)?.checked_add(1)?;
        (a.checked_mul(b)? / 2).checked_mul(c)? / 3
    };
    let nn = n.checked_mul(n)?.checked_mul(k)?;
    let nd = n.checked_mul(d)?.checked_mul(cross)?;
    let dd = d.checked_mul(d)?.checked_mul(squares)?;
    nn.checked_add(nd)?.checked_add(dd)
}

/// Square test on `(n, d, k)` that stays in machine words when it can.
/// Returns the exact sum and root when the window's sum is a perfect square.
pub(crate) fn square_root_of_window(n: u64, d: u64, k: u64) -> Option<(BigInt, BigInt)> {
    match window_sum_sq_u128(n, d, k) {
        Some(sum) => {
            let r = isqrt_u128(sum);
            (r * r == sum).then(|| (BigInt::from(sum), BigInt::from(r)))
        }
        None => {
            let w = APWindow::new(n, d, k).expect("positive grid coordinates");
            let out = check_window_square(&w);
            out.root.map(|r| (out.sum, r))
        }
    }
}
