//! Incremental prime supply: a segmented sieve of Eratosthenes that grows
//! its bound geometrically, plus a deterministic Miller-Rabin check for
//! arbitrary `u64` values.

use thiserror::Error;

/// Hard ceiling on how far the sieve may extend. Can be lowered per
/// instance; raising it beyond this is a non-goal.
pub const DEFAULT_SIEVE_LIMIT: u64 = 1 << 32;

const SEGMENT_LEN: u64 = 1 << 20;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SieveError {
    #[error("sieve limit {limit} reached while searching for more primes")]
    LimitExceeded { limit: u64 },
}

/// Segmented sieve with doubling growth. `nth_prime` is amortized cheap:
/// each extension doubles the sieved range, so repeated queries never
/// re-sieve old ground.
#[derive(Clone, Debug)]
pub struct PrimeSieve {
    primes: Vec<u64>,
    sieved_to: u64,
    limit: u64,
}

impl Default for PrimeSieve {
    fn default() -> Self {
        Self::new()
    }
}

impl PrimeSieve {
    pub fn new() -> Self {
        Self::with_limit(DEFAULT_SIEVE_LIMIT)
    }

    pub fn with_limit(limit: u64) -> Self {
        PrimeSieve { primes: Vec::new(), sieved_to: 1, limit }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Number of primes found so far.
    pub fn count(&self) -> usize {
        self.primes.len()
    }

    /// Returns the `(i + 1)`-th prime (`nth_prime(0) == 2`), extending the
    /// sieve on demand.
    pub fn nth_prime(&mut self, i: usize) -> Result<u64, SieveError> {
        while self.primes.len() <= i {
            self.extend()?;
        }
        Ok(self.primes[i])
    }

    /// The primes found so far, in increasing order.
    pub fn known_primes(&self) -> &[u64] {
        &self.primes
    }

    fn extend(&mut self) -> Result<(), SieveError> {
        if self.sieved_to >= self.limit {
            return Err(SieveError::LimitExceeded { limit: self.limit });
        }
        let new_to = self.sieved_to.saturating_mul(2).max(64).min(self.limit);

        if self.primes.is_empty() {
            // bootstrap with a plain sieve over [2, new_to]
            let n = new_to as usize;
            let mut composite = vec![false; n + 1];
            let mut p = 2usize;
            while p * p <= n {
                if !composite[p] {
                    let mut q = p * p;
                    while q <= n {
                        composite[q] = true;
                        q += p;
                    }
                }
                p += 1;
            }
            self.primes
                .extend((2..=n).filter(|&i| !composite[i]).map(|i| i as u64));
            self.sieved_to = new_to;
            return Ok(());
        }

        // doubling keeps sqrt(new_to) <= sieved_to, so the base primes on
        // hand always suffice to sieve the next range
        debug_assert!(self.sieved_to * self.sieved_to >= new_to);
        let mut lo = self.sieved_to + 1;
        while lo <= new_to {
            let hi = (lo + SEGMENT_LEN - 1).min(new_to);
            let len = (hi - lo + 1) as usize;
            let mut composite = vec![false; len];
            for &p in &self.primes {
                if p.saturating_mul(p) > hi {
                    break;
                }
                let mut start = p * p;
                if start < lo {
                    start = lo.div_ceil(p) * p;
                }
                let mut q = start;
                while q <= hi {
                    composite[(q - lo) as usize] = true;
                    q += p;
                }
            }
            for (off, &c) in composite.iter().enumerate() {
                if !c {
                    self.primes.push(lo + off as u64);
                }
            }
            lo = hi + 1;
        }
        self.sieved_to = new_to;
        Ok(())
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for the full `u64` range. The fixed witness
/// set below is known to be exact for all n < 3.3 * 10^24.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        r += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
