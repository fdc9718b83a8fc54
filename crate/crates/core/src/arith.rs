//! Exact integer primitives: square roots, p-adic splitting and modular
//! arithmetic over unbounded integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::residues::is_prime;

/// Decomposition `x = base^valuation * unit` with `base` prime and `base ∤ unit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAdicSplit {
    pub base: BigInt,
    pub valuation: u64,
    pub unit: BigInt,
}

impl PAdicSplit {
    /// Rebuilds the integer that was split.
    pub fn reconstruct(&self) -> BigInt {
        &self.unit * num_traits::pow(self.base.clone(), self.valuation as usize)
    }
}

/// Floor square root: the `r` with `r² ≤ x < (r+1)²`.
pub fn isqrt(x: &BigInt) -> Result<BigInt> {
    if x.is_negative() {
        return Err(Error::domain(format!("isqrt of negative value {x}")));
    }
    Ok(x.sqrt())
}

/// Returns `Some(t)` with `t² = x` when `x` is a perfect square.
pub fn is_perfect_square(x: &BigInt) -> Result<Option<BigInt>> {
    let r = isqrt(x)?;
    Ok((&r * &r == *x).then_some(r))
}

/// Splits the positive integer `x` into its `p`-power and the cofactor prime to `p`.
pub fn padic_split(x: &BigInt, p: &BigInt) -> Result<PAdicSplit> {
    if !x.is_positive() {
        return Err(Error::domain(format!(
            "p-adic split needs a positive integer, got {x}"
        )));
    }
    if !is_prime(p) {
        return Err(Error::domain(format!("p-adic split base {p} is not prime")));
    }
    Ok(split_unchecked(x, p))
}

/// `padic_split` without the primality and sign checks; callers guarantee both.
pub(crate) fn split_unchecked(x: &BigInt, p: &BigInt) -> PAdicSplit {
    let mut unit = x.clone();
    let mut valuation = 0;
    loop {
        let (q, r) = unit.div_rem(p);
        if !r.is_zero() {
            break;
        }
        unit = q;
        valuation += 1;
    }
    PAdicSplit {
        base: p.clone(),
        valuation,
        unit,
    }
}

/// `b^e mod m`, canonical in `[0, m)`. Negative bases are reduced first.
pub fn modpow(b: &BigInt, e: &BigInt, m: &BigInt) -> Result<BigInt> {
    if *m < BigInt::from(2) {
        return Err(Error::domain(format!(
            "modulus must be at least 2, got {m}"
        )));
    }
    if e.is_negative() {
        return Err(Error::domain(format!("negative exponent {e}")));
    }
    Ok(b.mod_floor(m).modpow(e, m))
}

/// The unique `K ∈ [1, p)` with `a·K ≡ 1 (mod p)`.
pub fn modinv(a: &BigInt, p: &BigInt) -> Result<BigInt> {
    if !is_prime(p) {
        return Err(Error::domain(format!("modulus {p} is not prime")));
    }
    modinv_unchecked(a, p)
}

pub(crate) fn modinv_unchecked(a: &BigInt, p: &BigInt) -> Result<BigInt> {
    let r = a.mod_floor(p);
    if r.is_zero() {
        return Err(Error::NoInverse {
            a: a.clone(),
            p: p.clone(),
        });
    }
    let ext = r.extended_gcd(p);
    if !ext.gcd.is_one() {
        return Err(Error::NoInverse {
            a: a.clone(),
            p: p.clone(),
        });
    }
    Ok(ext.x.mod_floor(p))
}

/// Floor square root of a `u128`, exact for the whole range.
pub(crate) fn isqrt_u128(x: u128) -> u128 {
    if x < 2 {
        return x;
    }
    let mut r = (x as f64).sqrt() as u128;
    // The float estimate is within a few units; settle on the exact floor.
    while r.checked_mul(r).is_none_or(|sq| sq > x) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= x) {
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn isqrt_examples() {
        assert_eq!(isqrt(&big(0)).unwrap(), big(0));
        assert_eq!(isqrt(&big(4900)).unwrap(), big(70));
        assert_eq!(isqrt(&big(14)).unwrap(), big(3));
        assert!(matches!(isqrt(&big(-1)), Err(Error::Domain(_))));
    }

    #[test]
    fn perfect_square_examples() {
        assert_eq!(is_perfect_square(&big(0)).unwrap(), Some(big(0)));
        assert_eq!(is_perfect_square(&big(5929)).unwrap(), Some(big(77)));
        assert_eq!(is_perfect_square(&big(14)).unwrap(), None);
        assert!(is_perfect_square(&big(-4)).is_err());
    }

    #[test]
    fn isqrt_floor_contract_dense_range() {
        for x in 0..=1_000_000i64 {
            let r = isqrt(&big(x)).unwrap();
            let r: i64 = r.try_into().unwrap();
            assert!(r * r <= x && x < (r + 1) * (r + 1), "x = {x}");
        }
    }

    #[test]
    fn padic_split_examples() {
        let s = padic_split(&big(18), &big(3)).unwrap();
        assert_eq!((s.valuation, s.unit), (2, big(2)));
        let s = padic_split(&big(7), &big(5)).unwrap();
        assert_eq!((s.valuation, s.unit), (0, big(7)));
        let s = padic_split(&big(126), &big(3)).unwrap();
        assert_eq!((s.valuation, s.unit), (2, big(14)));
    }

    #[test]
    fn padic_split_rejects_zero_and_composite_base() {
        assert!(matches!(
            padic_split(&big(0), &big(3)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            padic_split(&big(-9), &big(3)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            padic_split(&big(12), &big(4)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn padic_split_round_trip_exhaustive() {
        for p in [3, 5, 7, 11, 13] {
            let p = big(p);
            for x in 1..=10_000 {
                let x = big(x);
                let s = padic_split(&x, &p).unwrap();
                assert_eq!(s.reconstruct(), x);
                assert!(!(&s.unit % &p).is_zero());
            }
        }
    }

    #[test]
    fn modpow_examples() {
        assert_eq!(modpow(&big(2), &big(0), &big(7)).unwrap(), big(1));
        assert_eq!(modpow(&big(3), &big(2), &big(5)).unwrap(), big(4));
        assert_eq!(modpow(&big(3), &big(6), &big(13)).unwrap(), big(1));
        assert_eq!(modpow(&big(-2), &big(3), &big(7)).unwrap(), big(6));
        assert!(matches!(
            modpow(&big(3), &big(2), &big(1)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn modinv_examples() {
        assert_eq!(modinv(&big(1), &big(5)).unwrap(), big(1));
        assert_eq!(modinv(&big(2), &big(5)).unwrap(), big(3));
        assert_eq!(modinv(&big(7), &big(11)).unwrap(), big(8));
        assert_eq!(modinv(&big(-1), &big(7)).unwrap(), big(6));
        assert!(matches!(
            modinv(&big(10), &big(5)),
            Err(Error::NoInverse { .. })
        ));
    }

    #[test]
    fn modinv_inverts_every_unit() {
        for p in [3, 5, 7, 11, 13, 101] {
            let p = big(p);
            for a in 1..p.to_string().parse::<i64>().unwrap() {
                let k = modinv(&big(a), &p).unwrap();
                assert!((&k * big(a)) % &p == big(1));
                assert!(k >= big(1) && k < p);
            }
        }
    }

    #[test]
    fn isqrt_u128_edges() {
        for x in [0u128, 1, 2, 3, 4, 15, 16, 17, u64::MAX as u128, u128::MAX] {
            let r = isqrt_u128(x);
            assert!(r * r <= x);
            assert!((r + 1).checked_mul(r + 1).is_none_or(|sq| sq > x));
        }
    }

    fn big_value() -> impl Strategy<Value = BigInt> {
        proptest::collection::vec(any::<u32>(), 1..12)
            .prop_map(|limbs| BigInt::from(num_bigint::BigUint::new(limbs)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn isqrt_floor_contract_big(x in big_value()) {
            let r = isqrt(&x).unwrap();
            prop_assert!(&r * &r <= x);
            let r1 = &r + 1;
            prop_assert!(&r1 * &r1 > x);
        }

        #[test]
        fn isqrt_u128_matches_bigint(x in any::<u128>()) {
            prop_assert_eq!(BigInt::from(isqrt_u128(x)), isqrt(&BigInt::from(x)).unwrap());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn square_round_trip(t in any::<u64>()) {
            let t = BigInt::from(t);
            let sq = &t * &t;
            prop_assert_eq!(is_perfect_square(&sq).unwrap(), Some(t.clone()));
            if !t.is_zero() {
                prop_assert_eq!(is_perfect_square(&(sq + 1)).unwrap(), None);
            }
        }
    }
}
