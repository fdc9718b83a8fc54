//! Per-window certificates that a sum of squares over an arithmetic
//! progression cannot be a perfect square.
//!
//! Two certificates exist:
//!
//! * **Valuation parity.** A square `t²` has even `p`-adic valuation, and for
//!   `p ≥ 5` so does `6t²`. If the relevant quantity has odd valuation it is
//!   not a square.
//! * **Quotient mod 3** (length 3 only). After removing an even power of 3,
//!   the cofactor of a square is `≡ 1 (mod 3)`. A cofactor `≡ 2` rules it out.
//!
//! For a prime length `p ≥ 5` at which 3 is a quadratic non-residue the
//! valuation of `6S` is always `2·min(e, f) + 1`, where `e`, `f` are the
//! valuations of `n`, `d`. When `e = f`, a square would force
//! `6N² − 6ND + D² ≡ 0 (mod p)`, which is `(3N − D)² ≡ 3N²`, which makes
//! `[K(3N − D)]² ≡ 3` for `K = N⁻¹`. [`obstruction_witness`] computes that
//! square, and [`residue_sieve`] inverts the congruence for the search.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::apsum::{check_window_square, window_sum_sq_closed, APWindow};
use crate::arith::{modinv_unchecked, split_unchecked, PAdicSplit};
use crate::error::{Error, Result};
use crate::residues::{euler_unchecked, is_prime, sqrt_mod_prime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObstructionKind {
    ValuationParity,
    Mod3Quotient,
    None,
}

impl ObstructionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObstructionKind::ValuationParity => "VALUATION_PARITY",
            ObstructionKind::Mod3Quotient => "MOD3_QUOTIENT",
            ObstructionKind::None => "NONE",
        }
    }
}

impl fmt::Display for ObstructionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which multiple of the sum the valuation was taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// `S` itself (length 3, prime 3).
    Sum,
    /// `6·S` (prime lengths `p ≥ 5`).
    SixSum,
}

impl Quantity {
    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Sum => "S",
            Quantity::SixSum => "6S",
        }
    }

    fn multiplier(self) -> u32 {
        match self {
            Quantity::Sum => 1,
            Quantity::SixSum => 6,
        }
    }
}

/// The exact integers behind an obstruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceDetails {
    pub sum: BigInt,
    pub quantity: Quantity,
    /// `v_p` of the quantity.
    pub valuation: u64,
    /// Cofactor of the quantity after removing `p^valuation`, reduced mod `p`.
    pub quotient_residue: BigInt,
    /// `2·min(e, f) + 1`, when the window has prime length `p ≥ 5`.
    pub predicted_valuation: Option<u64>,
    /// Present only when the sum is a perfect square.
    pub root: Option<BigInt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceReport {
    pub window: APWindow,
    /// The prime the splits are taken over; absent for composite lengths.
    pub prime: Option<BigInt>,
    pub n_split: Option<PAdicSplit>,
    pub d_split: Option<PAdicSplit>,
    pub obstruction: ObstructionKind,
    pub details: TraceDetails,
}

impl TraceReport {
    /// The valuation of `n` minus that of `d`, as the case label `e > f`, `e < f` or `e = f`.
    pub fn valuation_case(&self) -> Option<&'static str> {
        let (e, f) = (
            self.n_split.as_ref()?.valuation,
            self.d_split.as_ref()?.valuation,
        );
        Some(match e.cmp(&f) {
            std::cmp::Ordering::Greater => "e>f",
            std::cmp::Ordering::Less => "e<f",
            std::cmp::Ordering::Equal => "e=f",
        })
    }

    /// Recomputes every reported integer from the window alone and checks
    /// that the claimed obstruction really excludes a square root.
    pub fn recheck(&self) -> Result<()> {
        let fail = |what: &str| {
            Err(Error::Consistency(format!(
                "trace of {}: {what}",
                self.window
            )))
        };
        let sum = window_sum_sq_closed(&self.window);
        if sum != self.details.sum {
            return fail("sum differs");
        }
        let outcome = check_window_square(&self.window);
        if self.obstruction == ObstructionKind::None {
            return if outcome.root.is_some() && outcome.root == self.details.root {
                Ok(())
            } else {
                fail("NONE reported for a non-square sum")
            };
        }
        if outcome.is_square() {
            return fail("obstruction reported for a perfect square");
        }
        let Some(p) = &self.prime else {
            return fail("obstruction without a prime");
        };
        let quantity = &sum * self.details.quantity.multiplier();
        let split = split_unchecked(&quantity, p);
        if split.valuation != self.details.valuation
            || split.unit.mod_floor(p) != self.details.quotient_residue
        {
            return fail("valuation or quotient differs");
        }
        for (reported, value) in [
            (&self.n_split, self.window.n()),
            (&self.d_split, self.window.d()),
        ] {
            if reported.as_ref() != Some(&split_unchecked(value, p)) {
                return fail("split of n or d differs");
            }
        }
        match self.obstruction {
            ObstructionKind::ValuationParity if split.valuation % 2 == 1 => Ok(()),
            ObstructionKind::Mod3Quotient
                if split.valuation.is_multiple_of(2)
                    && *p == BigInt::from(3)
                    && self.details.quotient_residue == BigInt::from(2) =>
            {
                Ok(())
            }
            _ => fail("reported obstruction does not hold"),
        }
    }
}

/// Final-step data: `K = N⁻¹` and `w = [K(3N − D)]² mod p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObstructionWitness {
    pub prime: BigInt,
    pub n: BigInt,
    pub d: BigInt,
    pub inverse: BigInt,
    pub witness: BigInt,
}

fn require_prime_at_least_5(p: &BigInt) -> Result<()> {
    if *p < BigInt::from(5) || !is_prime(p) {
        return Err(Error::domain(format!("need a prime p >= 5, got {p}")));
    }
    Ok(())
}

fn require_units(n: &BigInt, d: &BigInt, p: &BigInt) -> Result<()> {
    if n.mod_floor(p).is_zero() || d.mod_floor(p).is_zero() {
        return Err(Error::domain(format!(
            "N = {n} and D = {d} must both be prime to {p}"
        )));
    }
    Ok(())
}

/// `6N² − 6ND + D² ≡ 0 (mod p)`.
///
/// This is the residual condition for `p² | 6S` when `e = f`, after
/// `(p−1)(2p−1)D² ≡ D²` and `6pND ≡ 0` are reduced away.
pub fn residual_congruence_holds(n: &BigInt, d: &BigInt, p: &BigInt) -> Result<bool> {
    require_prime_at_least_5(p)?;
    require_units(n, d, p)?;
    let lhs: BigInt = 6 * n * n - 6 * n * d + d * d;
    Ok(lhs.mod_floor(p).is_zero())
}

pub fn obstruction_witness(n: &BigInt, d: &BigInt, p: &BigInt) -> Result<ObstructionWitness> {
    require_prime_at_least_5(p)?;
    let inverse = modinv_unchecked(n, p)?;
    require_units(n, d, p)?;
    let base: BigInt = &inverse * (3 * n - d);
    let base = base.mod_floor(p);
    let witness = (&base * &base).mod_floor(p);
    Ok(ObstructionWitness {
        prime: p.clone(),
        n: n.mod_floor(p),
        d: d.mod_floor(p),
        inverse,
        witness,
    })
}

fn splits(w: &APWindow, p: &BigInt) -> (PAdicSplit, PAdicSplit) {
    (split_unchecked(w.n(), p), split_unchecked(w.d(), p))
}

fn details_for(
    sum: BigInt,
    quantity: Quantity,
    p: &BigInt,
    predicted: Option<u64>,
) -> TraceDetails {
    let split = split_unchecked(&(&sum * quantity.multiplier()), p);
    TraceDetails {
        sum,
        quantity,
        valuation: split.valuation,
        quotient_residue: split.unit.mod_floor(p),
        predicted_valuation: predicted,
        root: None,
    }
}

/// Observed `v_p(6S)` next to the predicted `2·min(e, f) + 1` for a window
/// of prime length `p ≥ 5`. The two agree whenever 3 is a non-residue mod
/// `p`; at residue primes they can differ, and this reports that too.
pub fn six_sum_valuation(w: &APWindow) -> Result<(u64, u64)> {
    let p = w.k();
    require_prime_at_least_5(p)?;
    let (ns, ds) = splits(w, p);
    let observed = split_unchecked(&(window_sum_sq_closed(w) * 6u32), p).valuation;
    Ok((observed, 2 * ns.valuation.min(ds.valuation) + 1))
}

/// Valuation-parity certificate for a window whose length is a prime
/// `p ≥ 5` with 3 a quadratic non-residue mod `p`.
pub fn valuation_law(w: &APWindow) -> Result<TraceReport> {
    let p = w.k();
    if !is_prime(p) {
        return Err(Error::domain(format!("window length {p} is not prime")));
    }
    require_prime_at_least_5(p)?;
    if euler_unchecked(&BigInt::from(3), p) != -1 {
        return Err(Error::precondition(format!(
            "3 is a quadratic residue mod {p}; the valuation law does not apply"
        )));
    }
    let (n_split, d_split) = splits(w, p);
    let predicted = 2 * n_split.valuation.min(d_split.valuation) + 1;
    let details = details_for(
        window_sum_sq_closed(w),
        Quantity::SixSum,
        p,
        Some(predicted),
    );
    if details.valuation != predicted {
        return Err(Error::Consistency(format!(
            "v_{p}(6S) = {} but 2·min(e, f) + 1 = {predicted} for {w}",
            details.valuation
        )));
    }
    Ok(TraceReport {
        window: w.clone(),
        prime: Some(p.clone()),
        n_split: Some(n_split),
        d_split: Some(d_split),
        obstruction: ObstructionKind::ValuationParity,
        details,
    })
}

/// Length-3 certificate: odd `v_3(S)`, or even `v_3(S)` with cofactor `≡ 2 (mod 3)`.
pub fn trace_length_three(w: &APWindow) -> Result<TraceReport> {
    let three = BigInt::from(3);
    if *w.k() != three {
        return Err(Error::domain(format!(
            "length-3 trace needs k = 3, got {}",
            w.k()
        )));
    }
    let (n_split, d_split) = splits(w, &three);
    let details = details_for(window_sum_sq_closed(w), Quantity::Sum, &three, None);
    let obstruction = if details.valuation % 2 == 1 {
        ObstructionKind::ValuationParity
    } else if details.quotient_residue == BigInt::from(2) {
        ObstructionKind::Mod3Quotient
    } else {
        return Err(Error::Consistency(format!(
            "neither obstruction fires for {w}: v_3(S) = {} and S/3^v ≡ {} (mod 3)",
            details.valuation, details.quotient_residue
        )));
    };
    Ok(TraceReport {
        window: w.clone(),
        prime: Some(three),
        n_split: Some(n_split),
        d_split: Some(d_split),
        obstruction,
        details,
    })
}

/// Best available trace for any window.
///
/// Length 3 and non-residue prime lengths always yield a certificate. Other
/// windows report `NONE` when their sum is a perfect square, a parity
/// certificate at prime lengths when `v_p(6S)` happens to be odd, and an
/// error otherwise.
pub fn trace_window(w: &APWindow) -> Result<TraceReport> {
    let k = w.k();
    if *k == BigInt::from(3) {
        return trace_length_three(w);
    }
    let prime_length = *k >= BigInt::from(5) && is_prime(k);
    if prime_length && euler_unchecked(&BigInt::from(3), k) == -1 {
        return valuation_law(w);
    }
    let outcome = check_window_square(w);
    let (prime, n_split, d_split, mut details) = if prime_length {
        let (ns, ds) = splits(w, k);
        let predicted = 2 * ns.valuation.min(ds.valuation) + 1;
        let details = details_for(outcome.sum.clone(), Quantity::SixSum, k, Some(predicted));
        (Some(k.clone()), Some(ns), Some(ds), details)
    } else {
        let details = TraceDetails {
            sum: outcome.sum.clone(),
            quantity: Quantity::Sum,
            valuation: 0,
            quotient_residue: BigInt::zero(),
            predicted_valuation: None,
            root: None,
        };
        (None, None, None, details)
    };
    let obstruction = if outcome.is_square() {
        details.root = outcome.root.clone();
        ObstructionKind::None
    } else if prime_length && details.valuation % 2 == 1 {
        ObstructionKind::ValuationParity
    } else {
        return Err(Error::precondition(format!(
            "no structural obstruction applies to {w}; its sum {} is not a perfect square (floor root {})",
            outcome.sum, outcome.floor_root
        )));
    };
    Ok(TraceReport {
        window: w.clone(),
        prime,
        n_split,
        d_split,
        obstruction,
        details,
    })
}

/// Admissible ratios `d·n⁻¹ mod p` for windows with `p ∤ n·d` whose sum can be
/// a square, ascending. Empty when 3 is a non-residue mod `p`.
pub fn residue_sieve(p: &BigInt) -> Result<Vec<BigInt>> {
    require_prime_at_least_5(p)?;
    let Some((x, _)) = sqrt_mod_prime(&BigInt::from(3), p)? else {
        return Ok(Vec::new());
    };
    let (low, high): (BigInt, BigInt) = (3 - &x, 3 + &x);
    let mut ratios = vec![low.mod_floor(p), high.mod_floor(p)];
    ratios.sort();
    ratios.dedup();
    Ok(ratios)
}

/// Machine-word view of [`residue_sieve`] for the search loops.
pub(crate) fn residue_sieve_u64(p: u64) -> Result<Vec<u64>> {
    Ok(residue_sieve(&BigInt::from(p))?
        .iter()
        .map(|r| r.to_u64().expect("residue below p"))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn window(n: i64, d: i64, k: i64) -> APWindow {
        APWindow::new(n, d, k).unwrap()
    }

    #[test]
    fn congruence_examples() {
        assert_eq!(6 - 72 + 144, 78);
        assert!(residual_congruence_holds(&big(1), &big(12), &big(13)).unwrap());
        assert!(!residual_congruence_holds(&big(1), &big(1), &big(5)).unwrap());
        assert_eq!(6 - 42 + 49, 13);
        assert!(residual_congruence_holds(&big(1), &big(7), &big(13)).unwrap());
        assert!(matches!(
            residual_congruence_holds(&big(13), &big(1), &big(13)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            residual_congruence_holds(&big(1), &big(26), &big(13)),
            Err(Error::Domain(_))
        ));
        assert!(residual_congruence_holds(&big(1), &big(1), &big(3)).is_err());
    }

    #[test]
    fn witness_examples() {
        let w = obstruction_witness(&big(1), &big(12), &big(13)).unwrap();
        assert_eq!((w.inverse.clone(), w.witness.clone()), (big(1), big(3)));
        assert_eq!(81 % 13, 3);

        let w = obstruction_witness(&big(1), &big(1), &big(5)).unwrap();
        assert_eq!(w.witness, big(4));

        assert!(residual_congruence_holds(&big(2), &big(1), &big(13)).unwrap());
        let w = obstruction_witness(&big(2), &big(1), &big(13)).unwrap();
        assert_eq!(w.inverse, big(7));
        assert_eq!(1225 % 13, 3);
        assert_eq!(w.witness, big(3));

        assert!(matches!(
            obstruction_witness(&big(13), &big(1), &big(13)),
            Err(Error::NoInverse { .. })
        ));
    }

    #[test]
    fn valuation_law_examples() {
        let r = valuation_law(&window(1, 1, 5)).unwrap();
        assert_eq!(r.details.sum, big(55));
        assert_eq!(r.details.valuation, 1);
        assert_eq!(r.valuation_case(), Some("e=f"));

        let oracle: i64 = (5..=11).map(|x| x * x).sum();
        assert_eq!(oracle, 476);
        assert_eq!(6 * 476, 7 * 408);
        let r = valuation_law(&window(5, 1, 7)).unwrap();
        assert_eq!(r.details.sum, big(476));
        assert_eq!(r.details.valuation, 1);
        assert_eq!(r.valuation_case(), Some("e=f"));

        let r = valuation_law(&window(7, 1, 7)).unwrap();
        assert_eq!(r.valuation_case(), Some("e>f"));
        assert_eq!(r.details.valuation, 1);
        let r = valuation_law(&window(3, 49, 7)).unwrap();
        assert_eq!(r.valuation_case(), Some("e<f"));
        assert_eq!(r.details.valuation, 1);

        let r = valuation_law(&window(5, 5, 5)).unwrap();
        assert_eq!(r.details.sum, big(1375));
        assert_eq!(8250, 125 * 66);
        assert_eq!(r.details.valuation, 3);
        let (e, f) = (
            r.n_split.as_ref().unwrap().valuation,
            r.d_split.as_ref().unwrap().valuation,
        );
        assert_eq!((e, f), (1, 1));
        r.recheck().unwrap();
    }

    #[test]
    fn valuation_law_rejects_out_of_scope_lengths() {
        assert!(matches!(
            valuation_law(&window(18, 1, 11)),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            valuation_law(&window(1, 1, 9)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            valuation_law(&window(1, 1, 3)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn negative_control_breaks_the_law() {
        assert_eq!(six_sum_valuation(&window(18, 1, 11)).unwrap(), (2, 1));
    }

    #[test]
    fn length_three_trace_examples() {
        let r = trace_length_three(&window(1, 1, 3)).unwrap();
        assert_eq!(r.details.valuation, 0);
        assert_eq!(r.details.sum, big(14));
        assert_eq!(r.details.quotient_residue, big(2));
        assert_eq!(r.obstruction, ObstructionKind::Mod3Quotient);

        let r = trace_length_three(&window(1, 3, 3)).unwrap();
        assert_eq!(r.details.sum, big(66));
        assert_eq!(r.details.valuation, 1);
        assert_eq!(r.obstruction, ObstructionKind::ValuationParity);

        let r = trace_length_three(&window(3, 3, 3)).unwrap();
        assert_eq!(r.details.sum, big(126));
        assert_eq!(r.details.valuation, 2);
        assert_eq!(r.details.quotient_residue, big(2));
        assert_eq!(r.obstruction, ObstructionKind::Mod3Quotient);

        assert!(matches!(
            trace_length_three(&window(1, 1, 5)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn trace_window_reports_none_for_squares() {
        let r = trace_window(&window(18, 1, 11)).unwrap();
        assert_eq!(r.obstruction, ObstructionKind::None);
        assert_eq!(r.details.root, Some(big(77)));
        r.recheck().unwrap();

        let r = trace_window(&window(1, 1, 24)).unwrap();
        assert_eq!(r.obstruction, ObstructionKind::None);
        assert_eq!(r.prime, None);

        // p = 11 with 11 | n, 11 ∤ d: e > f gives odd valuation even at a residue prime.
        let r = trace_window(&window(11, 1, 11)).unwrap();
        assert_eq!(r.obstruction, ObstructionKind::ValuationParity);
        r.recheck().unwrap();

        // 11·1 + 110·8 + 385·64 = 25531 = 11²·211: even valuation, yet not a square.
        assert_eq!(11 + 880 + 385 * 64, 121 * 211);
        assert!(matches!(
            trace_window(&window(1, 8, 11)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn sieve_examples() {
        assert!(residue_sieve(&big(5)).unwrap().is_empty());
        assert_eq!(residue_sieve(&big(11)).unwrap(), vec![big(8), big(9)]);
        assert_eq!(49 % 23, 3);
        assert_eq!(residue_sieve(&big(23)).unwrap(), vec![big(10), big(19)]);
        assert!(matches!(residue_sieve(&big(25)), Err(Error::Domain(_))));
        assert!(residue_sieve(&big(3)).is_err());
    }

    #[test]
    fn sieve_matches_known_square_windows() {
        // 18 ≡ 7 and 7⁻¹ ≡ 8 (mod 11); 7⁻¹ ≡ 10 (mod 23).
        let ratio = |n: i64, d: i64, p: i64| (d * (1..p).find(|k| (n * k) % p == 1).unwrap()) % p;
        assert_eq!(ratio(18, 1, 11), 8);
        assert!(residue_sieve(&big(11))
            .unwrap()
            .contains(&big(ratio(18, 1, 11))));
        assert_eq!(ratio(7, 1, 23), 10);
        assert!(residue_sieve(&big(23))
            .unwrap()
            .contains(&big(ratio(7, 1, 23))));
    }

    #[test]
    fn witness_soundness_exhaustive() {
        for p in [5i64, 7, 11, 13, 17, 19, 23] {
            for n in 1..p {
                for d in 1..p {
                    let holds = residual_congruence_holds(&big(n), &big(d), &big(p)).unwrap();
                    let w = obstruction_witness(&big(n), &big(d), &big(p)).unwrap();
                    assert_eq!((&w.inverse * big(n)).mod_floor(&big(p)), big(1));
                    if holds {
                        assert_eq!(w.witness, big(3), "p={p} N={n} D={d}");
                    }
                }
            }
        }
    }

    #[test]
    fn non_residue_primes_have_no_solutions_to_the_congruence() {
        for p in [5i64, 7, 17, 19, 29, 31] {
            for n in 1..p {
                for d in 1..p {
                    assert!(!residual_congruence_holds(&big(n), &big(d), &big(p)).unwrap());
                }
            }
        }
    }

    #[test]
    fn valuation_law_over_grid() {
        for p in [5i64, 7, 17, 19] {
            let bound = 3 * p * p;
            for n in 1..=bound {
                for d in 1..=bound {
                    let r = valuation_law(&window(n, d, p)).unwrap();
                    assert_eq!(r.details.valuation % 2, 1);
                }
            }
        }
    }

    #[test]
    fn length_three_trace_is_total_and_recomputable() {
        for n in 1..=300i64 {
            for d in 1..=300i64 {
                let r = trace_length_three(&window(n, d, 3)).unwrap();
                assert_ne!(r.obstruction, ObstructionKind::None);
                r.recheck().unwrap();
            }
        }
    }

    #[test]
    fn sieve_is_sound_against_brute_force() {
        for p in [11i64, 13, 23, 37] {
            let admissible = residue_sieve(&big(p)).unwrap();
            for n in 1..=4 * p {
                for d in 1..=4 * p {
                    if n % p == 0 || d % p == 0 {
                        continue;
                    }
                    // brute force: sum of squares term by term, then integer root
                    let s: i64 = (0..p).map(|i| (n + i * d) * (n + i * d)).sum();
                    let r = (s as f64).sqrt() as i64;
                    let square = (r - 1..=r + 1).any(|t| t >= 0 && t * t == s);
                    if square {
                        let inv = (1..p).find(|k| (n * k) % p == 1).unwrap();
                        assert!(admissible.contains(&big(d * inv % p)), "p={p} n={n} d={d}");
                    }
                }
            }
        }
    }
}
