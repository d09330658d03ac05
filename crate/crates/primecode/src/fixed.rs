//! Fixed-point interval arithmetic over big integers.
//!
//! An [`Enclosure`] holds mantissa bounds `[lo, hi]` at a power-of-two
//! scale: the represented real lies in `[lo * 2^-scale, hi * 2^-scale]`.
//! Lower bounds round down and upper bounds round up at every step, and
//! addition is exact, so an enclosure is a sound worst-case error bound,
//! not a statistical estimate.

use num::bigint::{BigInt, BigUint};
use num::integer::Integer;
use num::traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Debug)]
pub(crate) struct Enclosure {
    pub lo: BigInt,
    pub hi: BigInt,
    pub scale: u32,
}

pub(crate) fn shr_floor(x: &BigInt, s: u32) -> BigInt {
    // BigInt shift-right rounds toward negative infinity
    x >> s
}

pub(crate) fn shr_ceil(x: &BigInt, s: u32) -> BigInt {
    -((-x) >> s)
}

fn div_ceil_int(a: &BigInt, b: &BigInt) -> BigInt {
    debug_assert!(b.is_positive());
    -(-a).div_floor(b)
}

impl Enclosure {
    pub fn zero(scale: u32) -> Self {
        Enclosure { lo: BigInt::zero(), hi: BigInt::zero(), scale }
    }

    pub fn exact(mant: BigInt, scale: u32) -> Self {
        Enclosure { lo: mant.clone(), hi: mant, scale }
    }

    pub fn from_u64(value: u64, scale: u32) -> Self {
        Self::exact(BigInt::from(value) << scale, scale)
    }

    /// Enclosure of `num / den` with `den > 0`.
    pub fn from_ratio(num: &BigInt, den: &BigInt, scale: u32) -> Self {
        debug_assert!(den.is_positive());
        let shifted = num << scale;
        Enclosure {
            lo: shifted.div_floor(den),
            hi: div_ceil_int(&shifted, den),
            scale,
        }
    }

    pub fn width(&self) -> BigInt {
        &self.hi - &self.lo
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        debug_assert_eq!(self.scale, other.scale);
        Enclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
            scale: self.scale,
        }
    }

    pub fn neg(&self) -> Enclosure {
        Enclosure { lo: -&self.hi, hi: -&self.lo, scale: self.scale }
    }

    /// Exact scaling by a nonnegative integer.
    pub fn mul_u64(&self, k: u64) -> Enclosure {
        let k = BigInt::from(k);
        Enclosure { lo: &self.lo * &k, hi: &self.hi * &k, scale: self.scale }
    }

    /// Exact scaling by a signed integer.
    pub fn mul_int(&self, k: &BigInt) -> Enclosure {
        if k.is_negative() {
            Enclosure { lo: &self.hi * k, hi: &self.lo * k, scale: self.scale }
        } else {
            Enclosure { lo: &self.lo * k, hi: &self.hi * k, scale: self.scale }
        }
    }

    /// Directed division by a positive integer.
    pub fn div_u64(&self, d: u64) -> Enclosure {
        debug_assert!(d > 0);
        let d = BigInt::from(d);
        Enclosure {
            lo: self.lo.div_floor(&d),
            hi: div_ceil_int(&self.hi, &d),
            scale: self.scale,
        }
    }

    /// Interval product. Products are formed exactly at double scale, then
    /// shifted back with directed rounding.
    pub fn mul(&self, other: &Enclosure) -> Enclosure {
        debug_assert_eq!(self.scale, other.scale);
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = candidates.iter().min().unwrap();
        let hi = candidates.iter().max().unwrap();
        Enclosure {
            lo: shr_floor(lo, self.scale),
            hi: shr_ceil(hi, self.scale),
            scale: self.scale,
        }
    }

    /// Rounds the midpoint to `out_bits` fractional bits and returns
    /// `(mantissa, error_ulps)`: the true value is within
    /// `error_ulps * 2^-out_bits` of `mantissa * 2^-out_bits`.
    pub fn round_to(&self, out_bits: u32) -> (BigInt, BigUint) {
        assert!(self.scale > out_bits);
        let g = self.scale - out_bits;
        let sum = &self.lo + &self.hi; // twice the midpoint
        let width = self.width();
        debug_assert!(!width.is_negative());
        let divisor_bits = g + 1;
        if width.is_zero() && sum.trailing_zeros().map_or(true, |t| t >= divisor_bits as u64) {
            return ((sum >> divisor_bits), BigUint::zero());
        }
        let half = BigInt::one() << g;
        let mant = shr_floor(&(sum + &half), divisor_bits);
        // |value - true| <= 1/2 ulp (rounding) + width/2 (enclosure),
        // which is (2^g + width) / 2^(g+1) in output ulps
        let err_mag = shr_ceil(&(width + half), divisor_bits);
        let err = err_mag.to_biguint().expect("error bound is nonnegative");
        (mant, err)
    }
}

/// Enclosure of sqrt(2). The floor integer square root gives the lower
/// bound; sqrt(2) is irrational so the bound is always strict.
pub(crate) fn sqrt2(scale: u32) -> Enclosure {
    let base: BigUint = BigUint::one() << (2 * scale + 1);
    let lo = BigInt::from(base.sqrt());
    let hi = &lo + 1;
    Enclosure { lo, hi, scale }
}

/// atanh on `[0, ~0.34]` by the odd power series, with a rigorous tail
/// bound folded into the upper mantissa.
fn atanh_small(z: &Enclosure) -> Enclosure {
    debug_assert!(!z.lo.is_negative());
    let scale = z.scale;
    if z.hi.is_zero() {
        return Enclosure::zero(scale);
    }
    let z2 = z.mul(z);
    let mut term = z.clone();
    let mut acc = z.clone();
    let mut k = 3u64;
    loop {
        term = term.mul(&z2);
        acc = acc.add(&term.div_u64(k));
        // tail <= z^(k+2) / ((k+2)(1 - z^2)) <= 2 * z^(k+2) / (k+2)
        let next_hi = shr_ceil(&(&term.hi * &z2.hi), scale);
        let tail = div_ceil_int(&(next_hi << 1), &BigInt::from(k + 2)) + 1;
        if tail <= BigInt::from(2) {
            acc.hi += tail;
            return acc;
        }
        k += 2;
    }
}

/// Enclosure of ln(2) = 2 * atanh(1/3).
pub(crate) fn ln2(scale: u32) -> Enclosure {
    let third = Enclosure::from_ratio(&BigInt::one(), &BigInt::from(3), scale);
    atanh_small(&third).mul_u64(2)
}

/// Enclosure of ln(n) for n >= 1, reduced as n = 2^e * y with y in [1, 2)
/// and ln(y) = 2 * atanh((y - 1) / (y + 1)).
pub(crate) fn ln_u64(n: u64, ln2: &Enclosure, scale: u32) -> Enclosure {
    assert!(n >= 1);
    debug_assert_eq!(ln2.scale, scale);
    if n == 1 {
        return Enclosure::zero(scale);
    }
    let e = 63 - n.leading_zeros();
    let pow2 = 1u64 << e;
    let num = BigInt::from(n - pow2);
    let den = BigInt::from(n + pow2);
    let z = Enclosure::from_ratio(&num, &den, scale);
    ln2.mul_u64(e as u64).add(&atanh_small(&z).mul_u64(2))
}

/// Renders `mant * 2^-scale` as an exact-denominator decimal string with
/// `digits` places after the point, rounding the last place to nearest.
pub(crate) fn decimal_string(mant: &BigInt, scale: u32, digits: u32) -> String {
    let pow10 = num::pow::pow(BigInt::from(10), digits as usize);
    let scaled = mant * &pow10;
    let half = BigInt::one() << scale.saturating_sub(1);
    let rounded = if scaled.is_negative() {
        -shr_floor(&(-&scaled + &half), scale)
    } else {
        shr_floor(&(scaled + &half), scale)
    };
    let negative = rounded.is_negative();
    let digits_str = rounded.abs().to_string();
    let digits = digits as usize;
    let padded = if digits_str.len() <= digits {
        format!("{}{}", "0".repeat(digits + 1 - digits_str.len()), digits_str)
    } else {
        digits_str
    };
    let split = padded.len() - digits;
    let (int_part, frac_part) = padded.split_at(split);
    let sign = if negative { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac_part}")
    }
}

/// Scientific rendering of the nonnegative value `mant * 2^-scale` with two
/// significant digits, rounding up (a radius must never be under-printed).
pub(crate) fn radius_string(mant: &BigUint, scale: u32) -> String {
    if mant.is_zero() {
        return "0".to_string();
    }
    let m = BigInt::from(mant.clone());
    // around log10 of the value; refined below
    let mut exp10: i64 = (((mant.bits() as i64) - (scale as i64)) as f64 * 0.30103).floor() as i64 - 1;
    loop {
        // two significant digits: d = ceil(value * 10^(1 - exp10))
        let shift10 = 1 - exp10;
        let scaled = if shift10 >= 0 {
            &m * num::pow::pow(BigInt::from(10), shift10 as usize)
        } else {
            m.clone().div_floor(&num::pow::pow(BigInt::from(10), (-shift10) as usize))
        };
        let d = div_ceil_int(&scaled, &(BigInt::one() << scale));
        let d = d.to_i64().unwrap_or(i64::MAX);
        if d < 10 {
            exp10 -= 1;
        } else if d > 99 {
            exp10 += 1;
        } else {
            return format!("{}.{}e{}", d / 10, d % 10, exp10);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2_70: &str = "0.6931471805599453094172321214581765680755";
    const LN3_70: &str = "1.0986122886681096913952452369225257046474";
    const SQRT2_70: &str = "1.4142135623730950488016887242096980785696";

    /// Bounds a rounded decimal literal at `scale`: the referenced real is
    /// within one unit of the last printed digit, so the result brackets it.
    fn decimal_to_mantissa(text: &str, scale: u32) -> (BigInt, BigInt) {
        let (int_part, frac_part) = text.split_once('.').unwrap();
        let digits = format!("{int_part}{frac_part}");
        let num: BigInt = digits.parse().unwrap();
        let den = num::pow::pow(BigInt::from(10), frac_part.len());
        let lo: BigInt = (&num - BigInt::one()) << scale;
        let hi: BigInt = (&num + BigInt::one()) << scale;
        (lo.div_floor(&den), div_ceil_int(&hi, &den))
    }

    fn assert_encloses(enc: &Enclosure, decimal: &str) {
        let (lo, hi) = decimal_to_mantissa(decimal, enc.scale);
        assert!(
            enc.lo <= hi && lo <= enc.hi,
            "enclosure [{}, {}] misses {decimal}",
            enc.lo,
            enc.hi
        );
        // directed rounding loses a few ulps per series term, so width
        // grows about linearly with scale; anything worse is a bug
        assert!(
            enc.width() < BigInt::from(8 * enc.scale),
            "enclosure too wide: {}",
            enc.width()
        );
    }

    #[test]
    fn ln2_matches_reference() {
        for scale in [88u32, 128, 320] {
            assert_encloses(&ln2(scale), LN2_70);
        }
    }

    #[test]
    fn ln_u64_matches_reference() {
        let scale = 128;
        let l2 = ln2(scale);
        assert_encloses(&ln_u64(2, &l2, scale), LN2_70);
        assert_encloses(&ln_u64(3, &l2, scale), LN3_70);
        assert!(ln_u64(1, &l2, scale).width().is_zero());
    }

    #[test]
    fn sqrt2_matches_reference() {
        for scale in [88u32, 256] {
            assert_encloses(&sqrt2(scale), SQRT2_70);
            assert!(sqrt2(scale).width().is_one());
        }
    }

    #[test]
    fn ln_is_monotone_in_argument() {
        let scale = 96;
        let l2 = ln2(scale);
        let mut prev = Enclosure::zero(scale);
        for n in 2..200u64 {
            let cur = ln_u64(n, &l2, scale);
            assert!(prev.hi < cur.lo, "ln({n}) does not clear ln({})", n - 1);
            prev = cur;
        }
    }

    #[test]
    fn ln_additivity_within_width() {
        // ln(6) is inside ln(2) + ln(3) widened by nothing: both enclose
        let scale = 128;
        let l2 = ln2(scale);
        let l6 = ln_u64(6, &l2, scale);
        let sum = ln_u64(2, &l2, scale).add(&ln_u64(3, &l2, scale));
        assert!(l6.lo <= sum.hi && sum.lo <= l6.hi);
    }

    #[test]
    fn round_to_flags_exact_values() {
        let enc = Enclosure::from_u64(5, 117);
        let (mant, err) = enc.round_to(53);
        assert_eq!(mant, BigInt::from(5u64) << 53);
        assert!(err.is_zero());

        let (mant, err) = Enclosure::zero(117).round_to(53);
        assert!(mant.is_zero());
        assert!(err.is_zero());
    }

    #[test]
    fn round_to_error_covers_truth() {
        let scale = 117;
        let l2 = ln2(scale);
        let (mant, err) = ln_u64(3, &l2, scale).round_to(53);
        let (lo, hi) = decimal_to_mantissa(LN3_70, 53);
        let err = BigInt::from(err);
        assert!(&mant - &err <= lo && hi <= &mant + &err);
        assert!(err <= BigInt::from(2));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_string(&BigInt::from(3 << 4), 4, 2), "3.00");
        assert_eq!(decimal_string(&BigInt::from(1), 1, 1), "0.5");
        assert_eq!(decimal_string(&BigInt::from(-3), 1, 2), "-1.50");
        assert_eq!(decimal_string(&BigInt::from(0), 10, 3), "0.000");
        // 1/8 rounded to two places: 0.13
        assert_eq!(decimal_string(&BigInt::from(1), 3, 2), "0.13");
    }

    #[test]
    fn radius_rendering() {
        assert_eq!(radius_string(&BigUint::zero(), 53), "0");
        // 1 ulp at 53 bits is about 1.11e-16; rounded up to two digits
        assert_eq!(radius_string(&BigUint::one(), 53), "1.2e-16");
        assert_eq!(radius_string(&BigUint::from(3u32), 2), "7.5e-1");
        assert_eq!(radius_string(&BigUint::from(1u32), 4096), "9.6e-1234");
    }

    #[test]
    fn interval_mul_signs() {
        let scale = 16;
        let a = Enclosure { lo: BigInt::from(-3 << 16), hi: BigInt::from(2 << 16), scale };
        let b = Enclosure { lo: BigInt::from(-1 << 16), hi: BigInt::from(5 << 16), scale };
        let c = a.mul(&b);
        // true range of products: [-15, 10] => enclosure must contain it
        assert!(c.lo <= BigInt::from(-15i64 << 16));
        assert!(c.hi >= BigInt::from(10i64 << 16));
    }
}
