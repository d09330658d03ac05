//! The real-valued multiset aggregator: sum of m(x) * ln(beta(x)) at a
//! requested working precision, carrying a certified error radius.
//!
//! Finite arithmetic cannot deliver literal injectivity, so every value is
//! a fingerprint with a sound radius: when two values cannot be told apart
//! beyond their combined radii, the caller escalates to the exact integer
//! code, which is always decisive.

use std::collections::HashMap;

use num::bigint::{BigInt, BigUint};
use num::traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::codebook::{CodebookError, PrimeCodebook};
use crate::fixed::{decimal_string, ln2, ln_u64, radius_string, Enclosure};
use crate::multiset::{enumerate_multisets, Multiset};

pub const MIN_PRECISION_BITS: u32 = 24;
pub const MAX_PRECISION_BITS: u32 = 4096;
pub const DEFAULT_PRECISION_BITS: u32 = 53;

/// Extra working bits beyond the requested precision. Keeps the reported
/// radius at a handful of output ulps even after long summations.
const GUARD_BITS: u32 = 64;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum RealError {
    #[error(
        "precision {bits} out of range [{MIN_PRECISION_BITS}, {MAX_PRECISION_BITS}]"
    )]
    PrecisionOutOfRange { bits: u32 },
    #[error("could not certify distinctness below {max_bits} bits of precision")]
    EscalationLimit { max_bits: u32 },
    #[error("the enumeration holds fewer than two multisets; no gap exists")]
    EmptyEnumeration,
    #[error(transparent)]
    Codebook(#[from] CodebookError),
}

/// A real value at a fixed binary precision with a certified error radius:
/// the true quantity lies within `error_ulps * 2^-precision_bits` of
/// `mantissa * 2^-precision_bits`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RealCode {
    mant: BigInt,
    err: BigUint,
    precision: u32,
}

impl RealCode {
    pub(crate) fn from_enclosure(enc: &Enclosure, precision: u32) -> RealCode {
        let (mant, err) = enc.round_to(precision);
        RealCode { mant, err, precision }
    }

    pub(crate) fn exact_zero(precision: u32) -> RealCode {
        RealCode { mant: BigInt::zero(), err: BigUint::zero(), precision }
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision
    }

    /// Value numerator: the value is `mantissa() * 2^-precision_bits()`.
    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    /// Radius numerator: the radius is `error_ulps() * 2^-precision_bits()`.
    pub fn error_ulps(&self) -> &BigUint {
        &self.err
    }

    pub fn is_exact(&self) -> bool {
        self.err.is_zero()
    }

    /// Lossy conversion for display and quick checks.
    pub fn value_f64(&self) -> f64 {
        let bits = self.mant.bits();
        if bits <= 63 {
            return self.mant.to_i64().unwrap_or(0) as f64 / 2f64.powi(self.precision as i32);
        }
        let shift = bits - 63;
        let top = (&self.mant >> shift).to_i64().unwrap_or(0) as f64;
        top * 2f64.powi(shift as i32 - self.precision as i32)
    }

    /// Full-precision decimal rendering of the value.
    pub fn value_decimal(&self) -> String {
        let digits = (self.precision as f64 * 0.30103).ceil() as u32 + 1;
        decimal_string(&self.mant, self.precision, digits)
    }

    /// Two-significant-digit upper bound on the radius, e.g. `1.2e-16`.
    pub fn radius_decimal(&self) -> String {
        radius_string(&self.err, self.precision)
    }

    /// Mantissa and error aligned to a common precision with `other`.
    fn aligned(&self, target: u32) -> (BigInt, BigInt) {
        let shift = target - self.precision;
        (&self.mant << shift, BigInt::from(self.err.clone()) << shift)
    }
}

/// Three-way comparison outcome for certified values.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Distinctness {
    /// The values differ by more than the combined radii: provably distinct.
    Distinct,
    /// The radii overlap; finite precision cannot decide. Escalate to the
    /// exact integer codes.
    EqualUncertain,
    /// Same value and both radii zero: the same represented real.
    IdenticalRepresentation,
}

/// Compares two certified values. `Distinct` is sound at any precision;
/// `EqualUncertain` only means this precision cannot separate them.
pub fn certified_distinct(a: &RealCode, b: &RealCode) -> Distinctness {
    let target = a.precision.max(b.precision);
    let (ma, ea) = a.aligned(target);
    let (mb, eb) = b.aligned(target);
    if ma == mb && ea.is_zero() && eb.is_zero() {
        return Distinctness::IdenticalRepresentation;
    }
    if (ma - mb).abs() > ea + eb {
        Distinctness::Distinct
    } else {
        Distinctness::EqualUncertain
    }
}

fn check_precision(bits: u32) -> Result<(), RealError> {
    if !(MIN_PRECISION_BITS..=MAX_PRECISION_BITS).contains(&bits) {
        return Err(RealError::PrecisionOutOfRange { bits });
    }
    Ok(())
}

/// Shared per-scale natural log table over assigned primes.
pub(crate) struct LnTable {
    scale: u32,
    ln2: Enclosure,
    cache: HashMap<u64, Enclosure>,
}

impl LnTable {
    pub fn new(precision: u32) -> LnTable {
        let scale = precision + GUARD_BITS;
        LnTable { scale, ln2: ln2(scale), cache: HashMap::new() }
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn ln_prime(&mut self, p: u64) -> &Enclosure {
        let scale = self.scale;
        let ln2 = &self.ln2;
        self.cache.entry(p).or_insert_with(|| ln_u64(p, ln2, scale))
    }

    /// Enclosure of sum of m(x) * ln(beta(x)) over the multiset.
    pub fn aggregate_enclosure(
        &mut self,
        cb: &PrimeCodebook,
        ms: &Multiset,
    ) -> Result<Enclosure, CodebookError> {
        let mut acc = Enclosure::zero(self.scale);
        for (id, k) in ms.iter() {
            let p = cb.beta(id)?;
            acc = acc.add(&self.ln_prime(p).mul_u64(k));
        }
        Ok(acc)
    }
}

/// ln(beta(x)) at the requested precision, correctly rounded to within one
/// ulp (natural logarithm).
pub fn f_log(
    cb: &PrimeCodebook,
    x: crate::multiset::ElementId,
    precision_bits: u32,
) -> Result<RealCode, RealError> {
    check_precision(precision_bits)?;
    let p = cb.beta(x)?;
    let mut table = LnTable::new(precision_bits);
    Ok(RealCode::from_enclosure(table.ln_prime(p), precision_bits))
}

/// The aggregator: sum of m(x) * ln(beta(x)) with worst-case radius. The
/// empty multiset yields exactly zero with radius zero.
pub fn aggregate(
    cb: &PrimeCodebook,
    ms: &Multiset,
    precision_bits: u32,
) -> Result<RealCode, RealError> {
    check_precision(precision_bits)?;
    if ms.is_empty() {
        return Ok(RealCode::exact_zero(precision_bits));
    }
    let mut table = LnTable::new(precision_bits);
    let enc = table.aggregate_enclosure(cb, ms)?;
    Ok(RealCode::from_enclosure(&enc, precision_bits))
}

/// Result of a certified minimum-gap search.
#[derive(Clone, Debug)]
pub struct MinGap {
    /// The smallest |h(X1) - h(X2)| over distinct enumerated multisets,
    /// with the combined radius of the witnessing pair.
    pub gap: RealCode,
    pub witness: (Multiset, Multiset),
    /// Precision at which every pair was certified distinct.
    pub precision_bits: u32,
}

/// Minimum aggregator gap over all multisets with the given alphabet and
/// size bound. Doubles the precision until the ordering of all values is
/// certified, so the reported minimum provably has the right sign.
pub fn min_gap(
    cb: &PrimeCodebook,
    alphabet_size: usize,
    max_size: u64,
    precision_bits: u32,
) -> Result<MinGap, RealError> {
    check_precision(precision_bits)?;
    let multisets = enumerate_multisets(alphabet_size, max_size);
    if multisets.len() < 2 {
        return Err(RealError::EmptyEnumeration);
    }
    let mut precision = precision_bits;
    loop {
        let mut table = LnTable::new(precision);
        let mut codes: Vec<(RealCode, usize)> = Vec::with_capacity(multisets.len());
        for (i, ms) in multisets.iter().enumerate() {
            let enc = if ms.is_empty() {
                Enclosure::zero(table.scale())
            } else {
                table.aggregate_enclosure(cb, ms)?
            };
            codes.push((RealCode::from_enclosure(&enc, precision), i));
        }
        codes.sort_by(|a, b| a.0.mant.cmp(&b.0.mant));

        let mut certified = true;
        let mut best: Option<(BigInt, BigUint, usize, usize)> = None;
        for w in codes.windows(2) {
            let (ref a, ia) = w[0];
            let (ref b, ib) = w[1];
            let diff = &b.mant - &a.mant;
            let combined = &a.err + &b.err;
            if diff <= BigInt::from(combined.clone()) {
                certified = false;
                break;
            }
            if best.as_ref().map_or(true, |(d, _, _, _)| &diff < d) {
                best = Some((diff, combined, ia, ib));
            }
        }
        if certified {
            let (diff, combined, ia, ib) = best.expect("at least one adjacent pair");
            let gap = RealCode { mant: diff, err: combined, precision };
            return Ok(MinGap {
                gap,
                witness: (multisets[ia].clone(), multisets[ib].clone()),
                precision_bits: precision,
            });
        }
        let next = precision.saturating_mul(2);
        if next > MAX_PRECISION_BITS {
            return Err(RealError::EscalationLimit { max_bits: MAX_PRECISION_BITS });
        }
        precision = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiset::ElementId;

    // reference digits computed with an independent multiprecision library
    const LN2: &str = "0.6931471805599453094172321214581765680755001343602552";
    const LN3: &str = "1.0986122886681096913952452369225257046474905578227494";
    const LN12: &str = "2.4849066497880003102297094798388788407984908265432599";
    const LN_4_3: &str = "0.2876820724517809274392190059938274315035097108977610";

    fn book(n: usize) -> PrimeCodebook {
        let mut cb = PrimeCodebook::new();
        for i in 0..n {
            cb.intern(&format!("s{i}")).unwrap();
        }
        cb
    }

    fn id(i: u32) -> ElementId {
        ElementId::new(i)
    }

    fn ms(entries: &[(u32, u64)]) -> Multiset {
        Multiset::from_entries(entries.iter().map(|&(i, k)| (id(i), k))).unwrap()
    }

    /// |code - reference| <= radius + one unit of the reference's last
    /// printed digit, compared in exact integers.
    fn assert_within_radius(code: &RealCode, reference: &str) {
        let p = code.precision_bits();
        let (int_part, frac_part) = reference.split_once('.').unwrap();
        let digits: BigInt = format!("{int_part}{frac_part}").parse().unwrap();
        let den = num::pow::pow(BigInt::from(10), frac_part.len());
        // |mant/2^p - digits/den| <= err/2^p + 1/den, scaled by den * 2^p
        let lhs = (code.mantissa() * &den - digits * (BigInt::from(1) << p)).abs();
        let rhs = BigInt::from(code.error_ulps().clone()) * den + (BigInt::from(1) << p);
        assert!(lhs <= rhs, "value {} not within {} of {reference}",
            code.value_decimal(), code.radius_decimal());
    }

    #[test]
    fn f_log_reference_values() {
        let cb = book(2);
        for p in [24u32, 53, 256] {
            let l2 = f_log(&cb, id(0), p).unwrap();
            assert_within_radius(&l2, LN2);
            assert!(l2.error_ulps() <= &BigUint::from(1u32), "radius above one ulp");
            let l3 = f_log(&cb, id(1), p).unwrap();
            assert_within_radius(&l3, LN3);
        }
    }

    #[test]
    fn f_log_rejects_bad_inputs() {
        let cb = book(1);
        assert!(matches!(
            f_log(&cb, id(0), 8),
            Err(RealError::PrecisionOutOfRange { bits: 8 })
        ));
        assert!(matches!(
            f_log(&cb, id(0), 8192),
            Err(RealError::PrecisionOutOfRange { .. })
        ));
        assert!(matches!(
            f_log(&cb, id(5), 53),
            Err(RealError::Codebook(CodebookError::UnknownId { index: 5 }))
        ));
    }

    #[test]
    fn f_log_strictly_increasing_in_beta() {
        let cb = book(1000);
        let mut prev: Option<RealCode> = None;
        for i in 0..1000u32 {
            let cur = f_log(&cb, id(i), 53).unwrap();
            if let Some(prev) = prev {
                assert!(prev.mantissa() < cur.mantissa());
                assert_eq!(certified_distinct(&prev, &cur), Distinctness::Distinct);
            }
            prev = Some(cur);
        }
    }

    #[test]
    fn aggregate_empty_is_exact_zero() {
        let cb = book(1);
        let z = aggregate(&cb, &Multiset::empty(), 53).unwrap();
        assert!(z.mantissa().is_zero());
        assert!(z.is_exact());
        assert_eq!(z.value_decimal(), format!("0.{}", "0".repeat(17)));
        assert_eq!(z.radius_decimal(), "0");
    }

    #[test]
    fn aggregate_matches_log_of_product() {
        let cb = book(2);
        let code = aggregate(&cb, &ms(&[(0, 2), (1, 1)]), 53).unwrap();
        assert_within_radius(&code, LN12);
    }

    #[test]
    fn aggregate_is_additive_under_union() {
        let cb = book(6);
        let x = ms(&[(0, 2), (3, 1)]);
        let y = ms(&[(0, 1), (5, 4)]);
        let p = 53;
        let ax = aggregate(&cb, &x, p).unwrap();
        let ay = aggregate(&cb, &y, p).unwrap();
        let au = aggregate(&cb, &x.union(&y), p).unwrap();
        let sum = ax.mantissa() + ay.mantissa();
        let diff = (au.mantissa() - sum).abs();
        let slack = BigInt::from(ax.error_ulps() + ay.error_ulps() + au.error_ulps());
        assert!(diff <= slack);
        // radius is monotone under union, up to rounding slack
        let combined = ax.error_ulps() + ay.error_ulps() + BigUint::from(2u32);
        assert!(au.error_ulps() <= &combined);
    }

    #[test]
    fn certified_distinct_tri_state() {
        let cb = book(2);
        let a = f_log(&cb, id(0), 53).unwrap();
        let b = f_log(&cb, id(1), 53).unwrap();
        assert_eq!(certified_distinct(&a, &b), Distinctness::Distinct);
        // nonzero radius: a value is never provably identical to itself
        assert_eq!(certified_distinct(&a, &a), Distinctness::EqualUncertain);
        let z = aggregate(&cb, &Multiset::empty(), 53).unwrap();
        assert_eq!(certified_distinct(&z, &z), Distinctness::IdenticalRepresentation);
    }

    #[test]
    fn certified_distinct_mixed_precision() {
        let cb = book(2);
        let a = f_log(&cb, id(0), 53).unwrap();
        let b = f_log(&cb, id(1), 117).unwrap();
        assert_eq!(certified_distinct(&a, &b), Distinctness::Distinct);
    }

    #[test]
    fn min_gap_two_symbols() {
        let cb = book(2);
        let result = min_gap(&cb, 2, 2, 53).unwrap();
        // codes are ln of {1, 2, 3, 4, 6, 9}; the smallest gap is ln(4/3)
        assert_within_radius(&result.gap, LN_4_3);
        assert_eq!(result.precision_bits, 53);
        let (w1, w2) = &result.witness;
        let pair = (w1.clone(), w2.clone());
        let expected_a = ms(&[(1, 1)]); // ln 3
        let expected_b = ms(&[(0, 2)]); // ln 4
        assert!(
            pair == (expected_a.clone(), expected_b.clone())
                || pair == (expected_b, expected_a)
        );
    }

    #[test]
    fn min_gap_single_symbol_chain() {
        let cb = book(1);
        // codes are 0, ln2, 2 ln2, 3 ln2: all gaps equal ln 2
        let result = min_gap(&cb, 1, 3, 53).unwrap();
        assert_within_radius(&result.gap, LN2);
    }

    #[test]
    fn min_gap_positive_for_various_shapes() {
        let cb = book(8);
        for (n, s) in [(2usize, 3u64), (3, 3), (4, 2), (8, 2)] {
            let result = min_gap(&cb, n, s, 53).unwrap();
            assert!(result.gap.mantissa() > &BigInt::zero());
            assert!(
                result.gap.mantissa().to_biguint().unwrap() > *result.gap.error_ulps(),
                "gap sign not certified at (n={n}, s={s})"
            );
        }
    }

    #[test]
    fn min_gap_rejects_trivial_enumerations() {
        let cb = book(1);
        assert!(matches!(min_gap(&cb, 0, 5, 53), Err(RealError::EmptyEnumeration)));
        assert!(matches!(min_gap(&cb, 1, 0, 53), Err(RealError::EmptyEnumeration)));
    }

    /// A near-collision beyond any small enumeration: 301994 ln2 and
    /// 190537 ln3 agree to about 6.5e-8, which 24-bit radii cannot split.
    #[test]
    fn near_gap_uncertain_at_low_precision_resolved_exactly() {
        use crate::exact::{encode_exact, DEFAULT_MAX_CODE_BITS};
        let cb = book(2);
        let x1 = ms(&[(0, 301_994)]);
        let x2 = ms(&[(1, 190_537)]);
        let a24 = aggregate(&cb, &x1, 24).unwrap();
        let b24 = aggregate(&cb, &x2, 24).unwrap();
        assert_eq!(certified_distinct(&a24, &b24), Distinctness::EqualUncertain);
        // the exact codes decide instantly
        let c1 = encode_exact(&cb, &x1, DEFAULT_MAX_CODE_BITS).unwrap();
        let c2 = encode_exact(&cb, &x2, DEFAULT_MAX_CODE_BITS).unwrap();
        assert_ne!(c1, c2);
        // and higher real precision separates them too
        let a53 = aggregate(&cb, &x1, 53).unwrap();
        let b53 = aggregate(&cb, &x2, 53).unwrap();
        assert_eq!(certified_distinct(&a53, &b53), Distinctness::Distinct);
    }

    #[test]
    fn value_f64_tracks_decimal() {
        let cb = book(2);
        let code = aggregate(&cb, &ms(&[(0, 2), (1, 1)]), 53).unwrap();
        assert!((code.value_f64() - 2.484906649788).abs() < 1e-9);
        let big = aggregate(&cb, &ms(&[(0, 301_994)]), 256).unwrap();
        assert!((big.value_f64() - 209_326.2896).abs() < 0.01);
    }
}
