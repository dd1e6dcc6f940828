//! Exact rational helpers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `12`, `-0.16`, `1e3`, `2.5E-1` or `3/4` exactly.
pub fn parse_decimal(s: &str) -> Option<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_decimal(n)?;
        let d = parse_decimal(d)?;
        if d.is_zero() {
            return None;
        }
        return Some(n / d);
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = match mant.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mant, ""),
    };
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{ip}{fp}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut r = Rat::from_integer(n);
    if scale >= 0 {
        r *= Rat::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= Rat::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

pub fn to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact rational value of a finite float.
pub fn from_f64(x: f64) -> Rat {
    Rat::from_float(x).unwrap_or_else(Rat::zero)
}

/// Decimal rendering when the denominator has only factors 2 and 5,
/// `n/d` otherwise.
pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut d = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut k2 = 0usize;
    let mut k5 = 0usize;
    while d.is_even() {
        d /= &two;
        k2 += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        k5 += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = k2.max(k5);
    let scaled = r * Rat::from_integer(num_traits::pow(BigInt::from(10), places));
    let n = scaled.to_integer();
    let neg = n.is_negative();
    let digits = n.abs().to_string();
    let digits = if digits.len() <= places {
        format!("{}{}", "0".repeat(places + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (a, b) = digits.split_at(digits.len() - places);
    format!("{}{}.{}", if neg { "-" } else { "" }, a, b)
}

/// Shortest round-trip decimal text for a float, used in generated names.
pub fn fmt_f64_name(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('e') {
        fmt_rat(&from_f64(x))
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_decimal("0.16").unwrap(), ratio(4, 25));
        assert_eq!(parse_decimal("-0.1").unwrap(), ratio(-1, 10));
        assert_eq!(parse_decimal("990").unwrap(), int(990));
        assert_eq!(parse_decimal("1e3").unwrap(), int(1000));
        assert_eq!(parse_decimal("2.5E-1").unwrap(), ratio(1, 4));
        assert_eq!(parse_decimal("3/4").unwrap(), ratio(3, 4));
        assert!(parse_decimal("abc").is_none());
        assert!(parse_decimal("-").is_none());
    }

    #[test]
    fn formats_rationals() {
        assert_eq!(fmt_rat(&ratio(4, 25)), "0.16");
        assert_eq!(fmt_rat(&ratio(-1, 10)), "-0.1");
        assert_eq!(fmt_rat(&int(7)), "7");
        assert_eq!(fmt_rat(&ratio(1, 3)), "1/3");
        assert_eq!(fmt_rat(&ratio(175, 8)), "21.875");
        assert_eq!(fmt_rat(&ratio(1, 200)), "0.005");
    }

    #[test]
    fn names_from_floats() {
        assert_eq!(fmt_f64_name(18.75), "18.75");
        assert_eq!(fmt_f64_name(25.0), "25");
        assert_eq!(fmt_f64_name(21.875), "21.875");
    }
}
