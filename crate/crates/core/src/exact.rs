//! Exact integer and rational helpers: generalized binomial coefficients,
//! floor division, and the exact evaluation of `[m·√(r(N−r))·x]`.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::Rational;

/// Generalized binomial coefficient `a(a−1)···(a−j+1)/j!` for any integer `a`.
///
/// Zero when `0 ≤ a < j`; for negative `a` the reflection
/// `(−1)^j · binom(j−a−1, j)` applies.
pub fn binom(a: i64, j: u64) -> BigInt {
    if j == 0 {
        return BigInt::one();
    }
    if a < 0 {
        let upper = j as i64 - a - 1;
        let v = binom(upper, j);
        return if j % 2 == 1 { -v } else { v };
    }
    let a = a as u64;
    if j > a {
        return BigInt::zero();
    }
    let j = j.min(a - j);
    let mut acc = BigInt::one();
    for i in 0..j {
        acc *= a - i;
        acc /= i + 1;
    }
    acc
}

/// `binom(a, j)` with the convention that negative `j` gives zero.
pub fn binom_signed(a: i64, j: i64) -> BigInt {
    if j < 0 {
        BigInt::zero()
    } else {
        binom(a, j as u64)
    }
}

/// Floor of `num/den` toward −∞.
pub fn floor_div(num: &BigInt, den: &BigInt) -> Result<BigInt> {
    if den.is_zero() {
        return Err(Error::DivisionByZero);
    }
    Ok(num.div_floor(den))
}

/// Exact division of rationals; dividing by zero is an error.
pub fn checked_div(a: &Rational, b: &Rational) -> Result<Rational> {
    if b.is_zero() {
        return Err(Error::DivisionByZero);
    }
    Ok(a / b)
}

/// Largest integer `q` with `q ≤ m·√(r(nm−r))·x`, for rational `x ≥ 0`.
///
/// With `x = a/b` this is `⌊⌊√(m²·r·(nm−r)·a²)⌋ / b⌋`, all in integers.
/// Negative `x` gives the (negative) floor of the same expression.
pub fn floor_sqrt_scaled(m: u64, r: u64, nm: u64, x: &Rational) -> BigInt {
    debug_assert!(r >= 1 && r < nm);
    let a = x.numer();
    let b = x.denom();
    let radicand = BigInt::from(m) * m * r * (nm - r) * a * a;
    let root = radicand.sqrt();
    match a.sign() {
        Sign::Minus => {
            // −√y/b: floor is −⌈√y/b⌉.
            let exact = &root * &root == radicand;
            let mut q = root.div_ceil(b);
            if !exact && (&root % b).is_zero() {
                q += 1;
            }
            -q
        }
        _ => root.div_floor(b),
    }
}

/// Decides `k ≤ [m·√(r(nm−r))·x]` via `k² ≤ m²·r·(nm−r)·x²` for `x ≥ 0`.
pub fn within_scaled(k: u64, m: u64, r: u64, nm: u64, x: &Rational) -> bool {
    if x.is_negative() {
        return false;
    }
    let lhs = BigInt::from(k) * k * x.denom() * x.denom();
    let rhs = BigInt::from(m) * m * r * (nm - r) * x.numer() * x.numer();
    lhs <= rhs
}

/// Pascal triangle `binom(a, b)` for `0 ≤ a ≤ max`, with the generalized
/// extension to negative upper arguments served from the same rows.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    rows: Vec<Vec<BigInt>>,
}

impl BinomialTable {
    pub fn new(max: usize) -> Self {
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(max + 1);
        rows.push(vec![BigInt::one()]);
        for a in 1..=max {
            let prev = &rows[a - 1];
            // Symmetric, so only the first half is stored.
            let half = a / 2;
            let mut row = Vec::with_capacity(half + 1);
            row.push(BigInt::one());
            for b in 1..=half {
                let left = Self::lookup(prev, a - 1, b - 1);
                let right = Self::lookup(prev, a - 1, b);
                row.push(left + right);
            }
            rows.push(row);
        }
        Self { rows }
    }

    pub fn max(&self) -> usize {
        self.rows.len() - 1
    }

    fn lookup(row: &[BigInt], a: usize, b: usize) -> BigInt {
        if b > a {
            return BigInt::zero();
        }
        let b = b.min(a - b);
        row[b].clone()
    }

    /// Generalized `binom(a, j)`; negative `j` gives zero. Falls back to
    /// direct evaluation when the arguments leave the table.
    pub fn get(&self, a: i64, j: i64) -> BigInt {
        if j < 0 {
            return BigInt::zero();
        }
        if a < 0 {
            let v = self.get(j - a - 1, j);
            return if j % 2 == 1 { -v } else { v };
        }
        let (au, ju) = (a as usize, j as usize);
        if ju > au {
            return BigInt::zero();
        }
        if au <= self.max() {
            Self::lookup(&self.rows[au], au, ju)
        } else {
            binom(a, j as u64)
        }
    }
}

/// `lcm(1, 2, …, n)`; 1 for `n = 0`.
pub fn lcm_upto(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc.lcm(&BigInt::from(i)))
}

/// Formats a rational as `"num/den"` (or `"num"` when integral).
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parses `"a/b"`, an integer, or a plain decimal (`"0.05"`, `"-1.5e-3"`)
/// into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("not a rational number: {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        return Ok(Rational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let negative = int_part.starts_with('-');
    let int_digits = int_part.trim_start_matches(['-', '+']);
    if !int_digits.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
        || (int_digits.is_empty() && frac_part.is_empty())
    {
        return Err(bad());
    }
    let digits = format!("{int_digits}{frac_part}");
    let mut num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    Ok(if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Best-effort conversion to `f64`.
pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}
