pub mod codebook;
pub(crate) mod fixed;
pub mod exact;
pub mod multiset;
pub mod primes;
pub mod real;
