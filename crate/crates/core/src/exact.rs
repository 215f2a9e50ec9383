//! Exact rational helpers shared by the dyadic evaluator, the network document
//! format and the planar geometry kernel.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Exact rational value of a finite `f64`.
pub fn from_f64(x: f64) -> Result<Rational> {
    BigRational::from_float(x).ok_or_else(|| Error::NonDyadic(format!("{x}")))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// True iff the (reduced) denominator is a power of two.
pub fn is_dyadic(x: &Rational) -> bool {
    let d = x.denom();
    if d.is_zero() {
        return false;
    }
    let d = d.abs();
    // d & (d - 1) == 0 for powers of two
    (&d & (&d - BigInt::one())).is_zero()
}

/// Converts a dyadic rational to the `f64` carrying exactly that value.
pub fn dyadic_to_f64(x: &Rational) -> Result<f64> {
    if !is_dyadic(x) {
        return Err(Error::NonDyadic(x.to_string()));
    }
    let v = to_f64(x);
    if !v.is_finite() || &from_f64(v)? != x {
        return Err(Error::NonDyadic(format!("{x} (not representable as f64)")));
    }
    Ok(v)
}

/// Formats as `"p/q"` in lowest terms, or `"p"` for integers.
pub fn format_fraction(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn parse_fraction(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Schema(format!("malformed fraction {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(p))
        }
    }
}

/// Exact decimal expansion of `m / 2^bits` (always terminates).
pub fn dyadic_decimal(m: u64, bits: u32) -> String {
    if bits == 0 {
        return m.to_string();
    }
    // m / 2^b = m * 5^b / 10^b
    let scaled = BigInt::from(m) * BigInt::from(5u8).pow(bits);
    let digits = scaled.to_string();
    let b = bits as usize;
    let (int_part, frac_part) = if digits.len() > b {
        let (i, f) = digits.split_at(digits.len() - b);
        (i.to_string(), f.to_string())
    } else {
        ("0".to_string(), format!("{}{}", "0".repeat(b - digits.len()), digits))
    };
    let frac = frac_part.trim_end_matches('0');
    if frac.is_empty() {
        int_part
    } else {
        format!("{int_part}.{frac}")
    }
}

pub fn relu(x: &Rational) -> Rational {
    if x.is_negative() {
        Rational::zero()
    } else {
        x.clone()
    }
}

/// `m * 2^e`; the arithmetic the exact evaluator needs, without gcd reductions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dyadic {
    m: BigInt,
    e: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Self { m: BigInt::zero(), e: 0 }
    }

    pub fn one() -> Self {
        Self { m: BigInt::one(), e: 0 }
    }

    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::NonDyadic(format!("{x}")));
        }
        if x == 0.0 {
            return Ok(Self::zero());
        }
        let bits = x.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
        let m = BigInt::from(m);
        Ok(Self { m: if bits >> 63 == 1 { -m } else { m }, e }.normalized())
    }

    pub fn from_rational(x: &Rational) -> Result<Self> {
        if !is_dyadic(x) {
            return Err(Error::NonDyadic(x.to_string()));
        }
        let shift = x.denom().bits().saturating_sub(1) as i64;
        Ok(Self { m: x.numer().clone(), e: -shift }.normalized())
    }

    pub fn to_rational(&self) -> Rational {
        if self.e >= 0 {
            BigRational::from_integer(&self.m << self.e as usize)
        } else {
            BigRational::new(self.m.clone(), BigInt::one() << (-self.e) as usize)
        }
    }

    pub fn is_negative(&self) -> bool {
        self.m.is_negative()
    }

    fn normalized(mut self) -> Self {
        if self.m.is_zero() {
            return Self::zero();
        }
        if let Some(tz) = self.m.trailing_zeros() {
            if tz > 0 {
                self.m >>= tz as usize;
                self.e += tz as i64;
            }
        }
        self
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.m.is_zero() || o.m.is_zero() {
            return Self::zero();
        }
        Self { m: &self.m * &o.m, e: self.e + o.e }
    }

    pub fn add(&self, o: &Self) -> Self {
        if self.m.is_zero() {
            return o.clone();
        }
        if o.m.is_zero() {
            return self.clone();
        }
        let e = self.e.min(o.e);
        let m = (&self.m << (self.e - e) as usize) + (&o.m << (o.e - e) as usize);
        Self { m, e }.normalized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_detection() {
        assert!(is_dyadic(&ratio(3, 8)));
        assert!(is_dyadic(&int(-5)));
        assert!(!is_dyadic(&ratio(1, 3)));
        assert!(dyadic_to_f64(&ratio(1, 3)).is_err());
        assert_eq!(dyadic_to_f64(&ratio(1, 4)).unwrap(), 0.25);
    }

    #[test]
    fn fractions_round_trip() {
        let q = from_f64(0.1).unwrap();
        assert_eq!(parse_fraction(&format_fraction(&q)).unwrap(), q);
        assert_eq!(format_fraction(&ratio(2, 8)), "1/4");
        assert_eq!(format_fraction(&int(3)), "3");
        assert!(parse_fraction("1/0").is_err());
        assert!(parse_fraction("x").is_err());
    }

    #[test]
    fn decimals() {
        assert_eq!(dyadic_decimal(9, 4), "0.5625");
        assert_eq!(dyadic_decimal(0, 6), "0");
        assert_eq!(dyadic_decimal(1, 24), "0.000000059604644775390625");
        assert_eq!(dyadic_decimal(8, 3), "1");
    }

    #[test]
    fn dyadic_arithmetic() {
        for &(a, b) in &[(0.375, -2.5), (1e-300, 3.0), (-0.0, 7.25), (5e-324, 1.0)] {
            let (da, db) = (Dyadic::from_f64(a).unwrap(), Dyadic::from_f64(b).unwrap());
            let (ra, rb) = (from_f64(a).unwrap(), from_f64(b).unwrap());
            assert_eq!(da.to_rational(), ra);
            assert_eq!(da.add(&db).to_rational(), &ra + &rb);
            assert_eq!(da.mul(&db).to_rational(), &ra * &rb);
        }
        assert_eq!(Dyadic::from_rational(&ratio(-3, 8)).unwrap().to_rational(), ratio(-3, 8));
        assert!(Dyadic::from_rational(&ratio(1, 3)).is_err());
    }
}
