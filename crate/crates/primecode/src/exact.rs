//! The exact multiset code: the product of assigned primes raised to their
//! multiplicities, computed in arbitrary-precision integers.
//!
//! Two multisets get the same code exactly when they are equal, so the code
//! is a lossless, decodable fingerprint. Union of multisets corresponds to
//! multiplication of codes.

use std::collections::HashMap;
use std::fmt;

use std::collections::VecDeque;

use num::bigint::BigUint;
use num::traits::{One, Pow, Zero};
use thiserror::Error;

use crate::codebook::{CodebookError, PrimeCodebook};
use crate::multiset::Multiset;

/// Default ceiling on code size. Runaway products become clean errors
/// instead of memory exhaustion.
pub const DEFAULT_MAX_CODE_BITS: u64 = 1_000_000;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error("code would need about {estimated_bits} bits, over the cap of {max_bits}")]
    BitLengthCap { estimated_bits: u64, max_bits: u64 },
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("residual factor {residual} is not covered by the codebook")]
    UnknownFactor { residual: BigUint },
    #[error("a code must be a positive integer")]
    InvalidCode,
    #[error("`{text}` is not a valid lowercase hex code")]
    InvalidHex { text: String },
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum PhiError {
    #[error("multiset {0:?} appears more than once in the label table")]
    DuplicateMultiset(Multiset),
    #[error("two distinct multisets share a code; the encoder invariant is broken")]
    InjectivityViolation,
    #[error("code {hex} is outside the label table")]
    UnknownCode { hex: String },
    #[error(transparent)]
    Encode(#[from] EncodeError),
}

/// An exact code: an arbitrary-precision natural number at least 1.
/// The value 1 encodes exactly the empty multiset.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactCode(BigUint);

impl ExactCode {
    pub fn one() -> Self {
        ExactCode(BigUint::one())
    }

    pub fn from_biguint(value: BigUint) -> Result<Self, DecodeError> {
        if value.is_zero() {
            return Err(DecodeError::InvalidCode);
        }
        Ok(ExactCode(value))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn bits(&self) -> u64 {
        self.0.bits()
    }

    /// Lowercase hexadecimal, most significant digit first, no leading
    /// zeros; `"1"` for the empty multiset.
    pub fn to_hex(&self) -> String {
        format!("{:x}", self.0)
    }

    pub fn from_hex(text: &str) -> Result<Self, DecodeError> {
        if text.is_empty() || !text.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(DecodeError::InvalidHex { text: text.into() });
        }
        let value = BigUint::parse_bytes(text.as_bytes(), 16)
            .ok_or_else(|| DecodeError::InvalidHex { text: text.into() })?;
        Self::from_biguint(value)
    }
}

impl fmt::Display for ExactCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ExactCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExactCode({:x})", self.0)
    }
}

/// Lower bound on the bit length of the product, cheap to compute up front.
/// With bits(p) = b, p >= 2^(b-1), so p^m contributes at least m*(b-1) bits.
fn lower_bound_bits(cb: &PrimeCodebook, ms: &Multiset) -> Result<u64, EncodeError> {
    let mut total: u128 = 1;
    for (id, k) in ms.iter() {
        let p = cb.beta(id).map_err(EncodeError::Codebook)?;
        let b = (64 - p.leading_zeros()) as u128;
        total += k as u128 * (b - 1);
    }
    Ok(total.min(u64::MAX as u128) as u64)
}

/// Multiplies the factors pairwise front-to-back, keeping operand sizes
/// balanced so big multiplications stay near-optimal.
fn balanced_product(factors: Vec<BigUint>) -> BigUint {
    let mut queue: VecDeque<BigUint> = factors.into();
    while queue.len() >= 2 {
        let a = queue.pop_front().unwrap();
        let b = queue.pop_front().unwrap();
        queue.push_back(a * b);
    }
    queue.pop_front().unwrap_or_else(BigUint::one)
}

/// The exact code of a multiset: product over elements of beta(x)^m(x).
pub fn encode_exact(
    cb: &PrimeCodebook,
    ms: &Multiset,
    max_bits: u64,
) -> Result<ExactCode, EncodeError> {
    let estimated_bits = lower_bound_bits(cb, ms)?;
    if estimated_bits > max_bits {
        return Err(EncodeError::BitLengthCap { estimated_bits, max_bits });
    }
    let mut factors = Vec::with_capacity(ms.distinct_count());
    for (id, k) in ms.iter() {
        let p = cb.beta(id).map_err(EncodeError::Codebook)?;
        factors.push(Pow::pow(BigUint::from(p), k));
    }
    let product = balanced_product(factors);
    let bits = product.bits();
    if bits > max_bits {
        return Err(EncodeError::BitLengthCap { estimated_bits: bits, max_bits });
    }
    Ok(ExactCode(product))
}

/// Inverts the exact code by trial division over the assigned primes in
/// increasing order, stopping early once the residual must itself be prime.
pub fn decode_exact(cb: &PrimeCodebook, code: &ExactCode) -> Result<Multiset, DecodeError> {
    let mut residual = code.value().clone();
    let one = BigUint::one();
    let mut entries = std::collections::BTreeMap::new();

    for (id, _, p) in cb.iter() {
        if residual == one {
            break;
        }
        // all factors below p are divided out, so a residual under p^2
        // is prime; resolve it by direct lookup instead of more division
        let p_squared = BigUint::from(p as u128 * p as u128);
        if residual < p_squared {
            break;
        }
        let big_p = BigUint::from(p);
        let mut count: u64 = 0;
        loop {
            let (q, r) = num::Integer::div_rem(&residual, &big_p);
            if r.is_zero() {
                residual = q;
                count += 1;
            } else {
                break;
            }
        }
        if count > 0 {
            entries.insert(id, count);
        }
    }

    if residual != one {
        // the residual is either prime below the early-stop threshold or a
        // leftover beyond the assigned range; either way it must match an
        // assigned prime exactly
        if let Some(small) = num::ToPrimitive::to_u64(&residual) {
            if let crate::codebook::BetaInverse::Assigned(id) = cb.beta_inverse(small) {
                *entries.entry(id).or_insert(0) += 1;
                return Ok(Multiset::from_raw(entries));
            }
        }
        return Err(DecodeError::UnknownFactor { residual });
    }
    Ok(Multiset::from_raw(entries))
}

/// Product of two codes; the code of the union of the underlying multisets.
pub fn multiply_codes(
    a: &ExactCode,
    b: &ExactCode,
    max_bits: u64,
) -> Result<ExactCode, EncodeError> {
    let estimated_bits = a.bits() + b.bits();
    if estimated_bits > max_bits + 1 {
        return Err(EncodeError::BitLengthCap { estimated_bits, max_bits });
    }
    let product = a.value() * b.value();
    let bits = product.bits();
    if bits > max_bits {
        return Err(EncodeError::BitLengthCap { estimated_bits: bits, max_bits });
    }
    Ok(ExactCode(product))
}

/// A lookup table realizing an arbitrary multiset function as a function of
/// the code alone. Well-defined because the encoding is injective.
#[derive(Debug, Clone)]
pub struct PhiTable<L> {
    entries: HashMap<BigUint, (Multiset, L)>,
}

/// Builds the table from `(multiset, label)` pairs. The multisets must be
/// pairwise distinct.
pub fn compose_phi<L, I>(
    cb: &PrimeCodebook,
    pairs: I,
    max_bits: u64,
) -> Result<PhiTable<L>, PhiError>
where
    I: IntoIterator<Item = (Multiset, L)>,
{
    let mut entries = HashMap::new();
    for (ms, label) in pairs {
        let code = encode_exact(cb, &ms, max_bits)?;
        match entries.entry(code.0) {
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert((ms, label));
            }
            std::collections::hash_map::Entry::Occupied(o) => {
                return if o.get().0 == ms {
                    Err(PhiError::DuplicateMultiset(ms))
                } else {
                    Err(PhiError::InjectivityViolation)
                };
            }
        }
    }
    Ok(PhiTable { entries })
}

impl<L> PhiTable<L> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Applies the table to a code.
    pub fn apply(&self, code: &ExactCode) -> Result<&L, PhiError> {
        self.entries
            .get(code.value())
            .map(|(_, label)| label)
            .ok_or_else(|| PhiError::UnknownCode { hex: code.to_hex() })
    }
}
