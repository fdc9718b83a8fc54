//! Quadratic-residue machinery.
//!
//! Two independent engines compute the quadratic character: [`legendre_euler`]
//! through Euler's criterion `a^((p-1)/2) mod p`, and [`jacobi`] through the
//! reciprocity law and its supplements, which never exponentiates. The test
//! suites play them against each other.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::modpow;
use crate::error::{Error, Result};

/// Bases for Miller-Rabin that make the test exact below this bound
/// (the first thirteen primes; Sorenson and Webster, 2015).
const WITNESSES: [u64; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

/// Primality answers from [`is_prime`] are proven for every input below this value.
pub const DETERMINISTIC_PRIME_LIMIT: &str = "3317044064679887385961981";

/// Extra bases used above the deterministic range, where the answer is a
/// strong-probable-prime verdict.
const EXTRA_WITNESSES: [u64; 12] = [43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97];

/// Reduced residue classes of primes modulo 12 (every prime `p ≥ 5`).
pub const PRIME_CLASSES_MOD_12: [u8; 4] = [1, 5, 7, 11];

/// A prime `p ≥ 5` with its class mod 12 and the quadratic character of 3 mod `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeProfile {
    pub p: BigInt,
    pub residue_mod_12: u8,
    /// `+1` if 3 is a quadratic residue of `p`, `-1` otherwise.
    pub legendre3: i8,
}

impl PrimeProfile {
    pub fn three_is_residue(&self) -> bool {
        self.legendre3 == 1
    }
}

pub fn deterministic_prime_limit() -> BigInt {
    DETERMINISTIC_PRIME_LIMIT.parse().expect("constant parses")
}

/// Miller-Rabin with a fixed witness set.
///
/// Exact for `x` below [`DETERMINISTIC_PRIME_LIMIT`]. Above it the verdict is
/// a strong probable prime test to 25 bases.
pub fn is_prime(x: &BigInt) -> bool {
    if let Some(small) = x.to_u64() {
        return is_prime_u64(small);
    }
    if x.is_negative() {
        return false;
    }
    for &w in &WITNESSES {
        if (x % w).is_zero() {
            return false;
        }
    }
    let bases = if *x < deterministic_prime_limit() {
        &WITNESSES[..]
    } else {
        &[WITNESSES.as_slice(), EXTRA_WITNESSES.as_slice()].concat()[..]
    };
    let x_minus_1: BigInt = x - 1;
    let s = x_minus_1.trailing_zeros().unwrap_or(0);
    let d = &x_minus_1 >> s;
    'witness: for &w in bases {
        let mut y = BigInt::from(w).modpow(&d, x);
        if y.is_one() || y == x_minus_1 {
            continue;
        }
        for _ in 1..s {
            y = (&y * &y) % x;
            if y == x_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n == w {
            return true;
        }
        if n.is_multiple_of(w) {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    // The first twelve bases already suffice for every u64.
    'witness: for &w in &WITNESSES[..12] {
        let mut y = pow_mod_u64(w, d, n);
        if y == 1 || y == n - 1 {
            continue;
        }
        for _ in 1..s {
            y = mul_mod_u64(y, y, n);
            if y == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_u64(acc, b, m);
        }
        b = mul_mod_u64(b, b, m);
        e >>= 1;
    }
    acc
}

fn require_odd_prime(p: &BigInt) -> Result<()> {
    if p.is_even() || !is_prime(p) {
        return Err(Error::domain(format!("{p} is not an odd prime")));
    }
    Ok(())
}

/// Legendre symbol by Euler's criterion: `+1`, `-1`, or `0` when `p | a`.
pub fn legendre_euler(a: &BigInt, p: &BigInt) -> Result<i8> {
    require_odd_prime(p)?;
    Ok(euler_unchecked(a, p))
}

pub(crate) fn euler_unchecked(a: &BigInt, p: &BigInt) -> i8 {
    let e: BigInt = (p - 1u32) >> 1;
    let r = modpow(a, &e, p).expect("odd prime modulus");
    if r.is_zero() {
        0
    } else if r.is_one() {
        1
    } else {
        debug_assert_eq!(r, p - 1u32);
        -1
    }
}

/// Jacobi symbol `(a/m)` for odd `m ≥ 1`.
pub fn jacobi(a: &BigInt, m: &BigInt) -> Result<i8> {
    if m.is_even() || !m.is_positive() {
        return Err(Error::domain(format!(
            "Jacobi symbol needs an odd positive modulus, got {m}"
        )));
    }
    let mut num = a.mod_floor(m);
    let mut den = m.clone();
    let mut sign = 1i8;
    loop {
        if den.is_one() {
            return Ok(sign);
        }
        if num.is_zero() {
            return Ok(0);
        }
        // (2/den) = -1 exactly when den ≡ 3, 5 (mod 8).
        let twos = num.trailing_zeros().unwrap_or(0);
        if twos > 0 {
            num >>= twos;
            let den_mod_8 = low_bits(&den, 8);
            if twos % 2 == 1 && (den_mod_8 == 3 || den_mod_8 == 5) {
                sign = -sign;
            }
        }
        // Reciprocity: flip sign when both are 3 mod 4.
        if low_bits(&num, 4) == 3 && low_bits(&den, 4) == 3 {
            sign = -sign;
        }
        std::mem::swap(&mut num, &mut den);
        num = num.mod_floor(&den);
    }
}

fn low_bits(x: &BigInt, modulus: u32) -> u32 {
    (x.mod_floor(&BigInt::from(modulus)))
        .to_u32()
        .expect("small residue")
}

/// Residue class mod 12 and character of 3 for a prime `p ≥ 5`.
///
/// The character is read off the class (1, 11 give a residue; 5, 7 a
/// non-residue) and then confirmed with Euler's criterion.
pub fn classify_prime_mod12(p: &BigInt) -> Result<PrimeProfile> {
    if *p < BigInt::from(5) || !is_prime(p) {
        return Err(Error::domain(format!(
            "classification needs a prime p >= 5, got {p}"
        )));
    }
    let residue_mod_12 = p.mod_floor(&BigInt::from(12)).to_u8().expect("small");
    let legendre3 = match residue_mod_12 {
        1 | 11 => 1,
        5 | 7 => -1,
        other => {
            return Err(Error::Consistency(format!(
                "prime {p} lies in class {other} mod 12"
            )))
        }
    };
    let euler = euler_unchecked(&BigInt::from(3), p);
    if euler != legendre3 {
        return Err(Error::Consistency(format!(
            "class {residue_mod_12} mod 12 predicts (3/{p}) = {legendre3}, Euler's criterion gives {euler}"
        )));
    }
    Ok(PrimeProfile {
        p: p.clone(),
        residue_mod_12,
        legendre3,
    })
}

/// Both square roots of `a` modulo the odd prime `p`, smaller first, or
/// `None` when `a` is a non-residue. Tonelli-Shanks with the least
/// non-residue as the auxiliary element, so results are deterministic.
pub fn sqrt_mod_prime(a: &BigInt, p: &BigInt) -> Result<Option<(BigInt, BigInt)>> {
    require_odd_prime(p)?;
    let a = a.mod_floor(p);
    if a.is_zero() {
        return Err(Error::domain(format!(
            "square root of a multiple of {p} is not a unit"
        )));
    }
    if euler_unchecked(&a, p) != 1 {
        return Ok(None);
    }
    let x = tonelli_shanks(&a, p);
    debug_assert_eq!((&x * &x) % p, a);
    let other = p - &x;
    Ok(Some(if x <= other { (x, other) } else { (other, x) }))
}

fn tonelli_shanks(a: &BigInt, p: &BigInt) -> BigInt {
    let p_minus_1: BigInt = p - 1u32;
    let s = p_minus_1.trailing_zeros().expect("p > 1");
    let q = &p_minus_1 >> s;
    if s == 1 {
        return a.modpow(&((p + 1u32) >> 2), p);
    }
    let mut z = BigInt::from(2);
    while euler_unchecked(&z, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = z.modpow(&q, p);
    let mut t = a.modpow(&q, p);
    let mut r = a.modpow(&((&q + 1u32) >> 1), p);
    while !t.is_one() {
        // Least i with t^(2^i) = 1.
        let mut i = 0;
        let mut probe = t.clone();
        while !probe.is_one() {
            probe = (&probe * &probe) % p;
            i += 1;
        }
        let mut b = c.clone();
        for _ in 0..(m - i - 1) {
            b = (&b * &b) % p;
        }
        m = i;
        c = (&b * &b) % p;
        t = (&t * &c) % p;
        r = (&r * &b) % p;
    }
    r
}

/// All primes `< limit`, by the sieve of Eratosthenes.
pub fn primes_below(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    if n < 3 {
        return Vec::new();
    }
    let mut composite = vec![false; n];
    let mut out = Vec::new();
    for i in 2..n {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        let mut j = i * i;
        while j < n {
            composite[j] = true;
            j += i;
        }
    }
    out
}
