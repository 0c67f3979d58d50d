//! Exact rational and high-precision fixed-point arithmetic for the parameter
//! formulas, where `⌈·⌉` and `⌊·⌋` of irrational quantities must be exact.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// The decimal number an `f64` prints as (shortest round-trip form), as an
/// exact rational. `0.1` maps to `1/10`, not to the nearest binary double.
pub fn decimal_rational(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::Parameter(format!("{x} is not finite")));
    }
    let text = format!("{x}");
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.as_str()),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    let numer: BigInt =
        format!("{int_part}{frac_part}").parse().map_err(|_| Error::Parameter(format!("cannot parse {text}")))?;
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    let value = BigRational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// Signed fixed-point number `mantissa · 2^{-bits}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixed {
    mantissa: BigInt,
    bits: u32,
}

impl Fixed {
    pub fn from_rational(q: &BigRational, bits: u32) -> Self {
        let scaled = q.numer() << bits as usize;
        Self { mantissa: scaled.div_floor(q.denom()), bits }
    }

    pub fn from_int(v: i64, bits: u32) -> Self {
        Self { mantissa: BigInt::from(v) << bits as usize, bits }
    }

    pub fn mul(&self, other: &Fixed) -> Fixed {
        debug_assert_eq!(self.bits, other.bits);
        Fixed { mantissa: (&self.mantissa * &other.mantissa) >> self.bits as usize, bits: self.bits }
    }

    pub fn div(&self, other: &Fixed) -> Fixed {
        debug_assert_eq!(self.bits, other.bits);
        let num = &self.mantissa << self.bits as usize;
        Fixed { mantissa: num.div_floor(&other.mantissa), bits: self.bits }
    }

    pub fn add(&self, other: &Fixed) -> Fixed {
        Fixed { mantissa: &self.mantissa + &other.mantissa, bits: self.bits }
    }

    pub fn sub(&self, other: &Fixed) -> Fixed {
        Fixed { mantissa: &self.mantissa - &other.mantissa, bits: self.bits }
    }

    pub fn powi(&self, exp: i32) -> Fixed {
        let one = Fixed::from_int(1, self.bits);
        let mut acc = one.clone();
        for _ in 0..exp.unsigned_abs() {
            acc = acc.mul(self);
        }
        if exp < 0 {
            one.div(&acc)
        } else {
            acc
        }
    }

    pub fn floor(&self) -> BigInt {
        self.mantissa.clone() >> self.bits as usize
    }

    /// Distance from the nearest integer, as a fixed-point fraction of one.
    fn frac_distance(&self) -> BigInt {
        let one = BigInt::one() << self.bits as usize;
        let frac = self.mantissa.mod_floor(&one);
        let other = &one - &frac;
        frac.min(other)
    }

    pub fn to_f64(&self) -> f64 {
        let shift = self.bits.saturating_sub(60) as usize;
        let m = (&self.mantissa >> shift).to_f64().unwrap_or(f64::NAN);
        m * (-(self.bits as f64 - shift as f64)).exp2()
    }

    fn magnitude_bits(&self) -> u64 {
        self.mantissa.abs().bits()
    }
}

/// `atanh(z)` for rational `0 ≤ z < 1/2` by its odd power series.
fn atanh_fixed(z: &BigRational, bits: u32) -> Fixed {
    let z = Fixed::from_rational(z, bits);
    let z2 = z.mul(&z);
    let mut power = z.clone();
    let mut sum = z.clone();
    let mut k: i64 = 1;
    while !power.mantissa.is_zero() {
        power = power.mul(&z2);
        k += 2;
        let term = Fixed { mantissa: &power.mantissa / BigInt::from(k), bits };
        if term.mantissa.is_zero() {
            break;
        }
        sum = sum.add(&term);
    }
    sum
}

pub fn ln2_fixed(bits: u32) -> Fixed {
    let third = BigRational::new(BigInt::one(), BigInt::from(3));
    let t = atanh_fixed(&third, bits);
    t.add(&t)
}

/// Natural logarithm of a positive rational, reduced to `[1, 2)` by powers of two.
pub fn ln_fixed(x: &BigRational, bits: u32) -> Result<Fixed> {
    if !x.is_positive() {
        return Err(Error::Domain("logarithm of a non-positive number".into()));
    }
    let mut m: i64 = x.numer().bits() as i64 - x.denom().bits() as i64;
    let two = BigRational::from_integer(BigInt::from(2));
    let mut y = x / pow_rational(&two, m as i32);
    while y >= two {
        y /= &two;
        m += 1;
    }
    while y < BigRational::one() {
        y *= &two;
        m -= 1;
    }
    let z = (&y - BigRational::one()) / (&y + BigRational::one());
    let t = atanh_fixed(&z, bits);
    let ln2 = ln2_fixed(bits);
    Ok(t.add(&t).add(&Fixed { mantissa: ln2.mantissa * BigInt::from(m), bits }))
}

pub fn pow_rational(base: &BigRational, exp: i32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..exp.unsigned_abs() {
        acc *= base;
    }
    if exp < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// `Q · (ln 2)^a · (ln d)^b` with rational `Q`.
#[derive(Debug, Clone)]
pub struct LogMonomial {
    pub coeff: BigRational,
    pub ln2_power: i32,
    pub ln_d_power: i32,
    pub d: u64,
}

impl LogMonomial {
    pub fn rational(coeff: BigRational) -> Self {
        Self { coeff, ln2_power: 0, ln_d_power: 0, d: 2 }
    }

    /// Folds `ln d = m ln 2` when `d = 2^m`.
    fn normalized(&self) -> Self {
        let mut out = self.clone();
        if out.ln_d_power != 0 && out.d.is_power_of_two() {
            let m = BigRational::from_integer(BigInt::from(out.d.trailing_zeros()));
            out.coeff *= pow_rational(&m, out.ln_d_power);
            out.ln2_power += out.ln_d_power;
            out.ln_d_power = 0;
        }
        out
    }

    /// The exact rational value, when the logarithms cancel.
    pub fn as_rational(&self) -> Option<BigRational> {
        let n = self.normalized();
        (n.ln2_power == 0 && n.ln_d_power == 0).then_some(n.coeff)
    }

    pub fn to_fixed(&self, bits: u32) -> Result<Fixed> {
        let n = self.normalized();
        let mut v = Fixed::from_rational(&n.coeff, bits);
        if n.ln2_power != 0 {
            v = v.mul(&ln2_fixed(bits).powi(n.ln2_power));
        }
        if n.ln_d_power != 0 {
            let ln_d = ln_fixed(&BigRational::from_integer(BigInt::from(n.d)), bits)?;
            v = v.mul(&ln_d.powi(n.ln_d_power));
        }
        Ok(v)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_fixed(128).map(|f| f.to_f64()).unwrap_or(f64::NAN)
    }

    /// Evaluates with increasing precision until the fractional part is
    /// resolved, then applies `finish` to the fixed-point value.
    fn resolve<T>(&self, finish: impl Fn(&Fixed) -> T) -> Result<T> {
        for bits in [256u32, 1024, 4096] {
            let v = self.to_fixed(bits)?;
            let tolerance = rounding_tolerance(&v);
            if v.frac_distance() > tolerance {
                return Ok(finish(&v));
            }
        }
        Err(Error::Domain("value too close to an integer to round reliably".into()))
    }

    pub fn floor(&self) -> Result<BigInt> {
        match self.as_rational() {
            Some(q) => Ok(q.floor().to_integer()),
            None => self.resolve(Fixed::floor),
        }
    }

    pub fn ceil(&self) -> Result<BigInt> {
        match self.as_rational() {
            Some(q) => Ok(q.ceil().to_integer()),
            None => self.resolve(|v| v.floor() + BigInt::one()),
        }
    }

    /// Exact sign of `self − rhs`.
    pub fn cmp_rational(&self, rhs: &BigRational) -> Result<std::cmp::Ordering> {
        if let Some(q) = self.as_rational() {
            return Ok(q.cmp(rhs));
        }
        for bits in [256u32, 1024, 4096] {
            let value = self.to_fixed(bits)?;
            let diff = value.sub(&Fixed::from_rational(rhs, bits));
            let tolerance = rounding_tolerance(&value);
            if diff.mantissa.abs() > tolerance {
                return Ok(diff.mantissa.sign().cmp(&Sign::NoSign));
            }
        }
        Err(Error::Domain("comparison unresolved at maximum precision".into()))
    }
}

/// Accumulated rounding error bound, with 32 bits of headroom, in mantissa
/// units: `|v| · 2^{32 - bits}` but never below `2^32` ulps.
fn rounding_tolerance(v: &Fixed) -> BigInt {
    let shift = (v.magnitude_bits() as i64 - v.bits as i64 + 32).max(32);
    BigInt::one() << shift as usize
}

pub fn to_biguint(v: BigInt) -> BigUint {
    v.to_biguint().unwrap_or_default()
}
