//! The codebook: a growable bijection between interned symbols and primes.
//!
//! Symbols are interned to dense ids in first-use order (or in sorted order
//! via [`PrimeCodebook::intern_all_sorted`] when reproducible assignment
//! across runs matters), and id `i` is mapped to the `(i + 1)`-th prime.
//! Growth is append-only: an assigned prime never changes.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::multiset::{ElementId, Multiset, MultisetError, DEFAULT_MULTIPLICITY_CAP};
use crate::primes::{is_prime_u64, PrimeSieve, SieveError, DEFAULT_SIEVE_LIMIT};

const FILE_HEADER: &str = "primecode-codebook v1";

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum CodebookError {
    #[error("unknown element id {index}")]
    UnknownId { index: usize },
    #[error("unknown symbol `{symbol}`{}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    UnknownSymbol { symbol: String, line: Option<usize> },
    #[error("invalid symbol `{symbol}`: {reason}")]
    InvalidSymbol { symbol: String, reason: String },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unsupported codebook version: expected `{FILE_HEADER}`, found `{found}`")]
    VersionMismatch { found: String },
    #[error("codebook is full: id space exhausted")]
    IdSpaceExhausted,
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error(transparent)]
    Multiset(#[from] MultisetError),
    #[error("io error: {0}")]
    Io(String),
}

impl From<io::Error> for CodebookError {
    fn from(e: io::Error) -> Self {
        CodebookError::Io(e.to_string())
    }
}

/// Outcome of an inverse lookup prime -> id.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BetaInverse {
    Assigned(ElementId),
    /// The value is prime but no symbol has been assigned to it yet.
    UnassignedPrime,
    NotPrime,
}

/// Growable bijection symbol <-> id <-> prime.
///
/// Lookups of already-assigned ids are safe from many threads in parallel
/// (`&self`); interning new symbols requires exclusive access (`&mut self`).
/// [`PrimeCodebook::snapshot`] yields an immutable copy for bulk encoding.
#[derive(Clone, Debug)]
pub struct PrimeCodebook {
    symbols: Vec<String>,
    ids: HashMap<String, u32>,
    primes: Vec<u64>,
    sieve: PrimeSieve,
}

impl Default for PrimeCodebook {
    fn default() -> Self {
        Self::new()
    }
}

impl PrimeCodebook {
    pub fn new() -> Self {
        Self::with_sieve_limit(DEFAULT_SIEVE_LIMIT)
    }

    pub fn with_sieve_limit(limit: u64) -> Self {
        PrimeCodebook {
            symbols: Vec::new(),
            ids: HashMap::new(),
            primes: Vec::new(),
            sieve: PrimeSieve::with_limit(limit),
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    fn validate_symbol(symbol: &str) -> Result<(), CodebookError> {
        if symbol.is_empty() {
            return Err(CodebookError::InvalidSymbol {
                symbol: symbol.into(),
                reason: "empty".into(),
            });
        }
        if symbol.chars().any(char::is_whitespace) {
            return Err(CodebookError::InvalidSymbol {
                symbol: symbol.into(),
                reason: "contains whitespace".into(),
            });
        }
        if symbol.starts_with('#') {
            return Err(CodebookError::InvalidSymbol {
                symbol: symbol.into(),
                reason: "starts with comment character".into(),
            });
        }
        Ok(())
    }

    /// Interns a symbol, assigning the next unused prime on first sight.
    pub fn intern(&mut self, symbol: &str) -> Result<ElementId, CodebookError> {
        Self::validate_symbol(symbol)?;
        if let Some(&i) = self.ids.get(symbol) {
            return Ok(ElementId::new(i));
        }
        let index = u32::try_from(self.symbols.len())
            .map_err(|_| CodebookError::IdSpaceExhausted)?;
        let prime = self.sieve.nth_prime(index as usize)?;
        self.symbols.push(symbol.to_owned());
        self.ids.insert(symbol.to_owned(), index);
        self.primes.push(prime);
        Ok(ElementId::new(index))
    }

    /// Deterministic bulk interning: sorts (and dedups) the symbols first,
    /// so the assignment does not depend on encounter order.
    pub fn intern_all_sorted<'a, I>(&mut self, symbols: I) -> Result<Vec<ElementId>, CodebookError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut sorted: Vec<&str> = symbols.into_iter().collect();
        sorted.sort_unstable();
        sorted.dedup();
        sorted.into_iter().map(|s| self.intern(s)).collect()
    }

    pub fn lookup(&self, symbol: &str) -> Option<ElementId> {
        self.ids.get(symbol).map(|&i| ElementId::new(i))
    }

    pub fn symbol(&self, id: ElementId) -> Result<&str, CodebookError> {
        self.symbols
            .get(id.index())
            .map(String::as_str)
            .ok_or(CodebookError::UnknownId { index: id.index() })
    }

    /// The bijection beta: the prime assigned to `id`. Stable for the
    /// lifetime of the codebook.
    pub fn beta(&self, id: ElementId) -> Result<u64, CodebookError> {
        self.primes
            .get(id.index())
            .copied()
            .ok_or(CodebookError::UnknownId { index: id.index() })
    }

    /// Inverse lookup. Distinguishes "prime but not yet assigned" from
    /// "not prime at all".
    pub fn beta_inverse(&self, p: u64) -> BetaInverse {
        match self.primes.binary_search(&p) {
            Ok(i) => BetaInverse::Assigned(ElementId::new(i as u32)),
            Err(_) => {
                if is_prime_u64(p) {
                    BetaInverse::UnassignedPrime
                } else {
                    BetaInverse::NotPrime
                }
            }
        }
    }

    /// Assigned primes in id order (strictly increasing).
    pub fn assigned_primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn iter(&self) -> impl Iterator<Item = (ElementId, &str, u64)> + '_ {
        self.symbols
            .iter()
            .zip(&self.primes)
            .enumerate()
            .map(|(i, (s, &p))| (ElementId::new(i as u32), s.as_str(), p))
    }

    /// Immutable copy for fully parallel bulk encoding.
    pub fn snapshot(&self) -> PrimeCodebook {
        self.clone()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), CodebookError> {
        writeln!(w, "{FILE_HEADER}")?;
        for (_, symbol, prime) in self.iter() {
            writeln!(w, "{symbol} {prime}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CodebookError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    /// Parses and validates a codebook. Any defect (bad header, malformed
    /// line, duplicate symbol, wrong prime sequence) fails the whole load;
    /// no partial codebook is ever returned.
    pub fn read_from<R: BufRead>(r: R, sieve_limit: u64) -> Result<Self, CodebookError> {
        let mut lines = r.lines().enumerate();
        let header = match lines.next() {
            Some((_, line)) => line?,
            None => {
                return Err(CodebookError::VersionMismatch { found: "<empty file>".into() })
            }
        };
        if header.trim() != FILE_HEADER {
            return Err(CodebookError::VersionMismatch { found: header.trim().into() });
        }
        let mut cb = Self::with_sieve_limit(sieve_limit);
        for (i, line) in lines {
            let line = line?;
            let lineno = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut parts = content.split_whitespace();
            let symbol = parts.next().unwrap();
            let prime: u64 = parts
                .next()
                .ok_or_else(|| CodebookError::Parse {
                    line: lineno,
                    reason: "expected `<symbol> <prime>`".into(),
                })?
                .parse()
                .map_err(|e| CodebookError::Parse {
                    line: lineno,
                    reason: format!("bad prime: {e}"),
                })?;
            if parts.next().is_some() {
                return Err(CodebookError::Parse {
                    line: lineno,
                    reason: "trailing fields after `<symbol> <prime>`".into(),
                });
            }
            if cb.ids.contains_key(symbol) {
                return Err(CodebookError::Parse {
                    line: lineno,
                    reason: format!("duplicate symbol `{symbol}`"),
                });
            }
            let id = cb.intern(symbol).map_err(|e| match e {
                CodebookError::InvalidSymbol { symbol, reason } => CodebookError::Parse {
                    line: lineno,
                    reason: format!("invalid symbol `{symbol}`: {reason}"),
                },
                other => other,
            })?;
            let expected = cb.beta(id).expect("freshly interned id");
            if expected != prime {
                return Err(CodebookError::Parse {
                    line: lineno,
                    reason: format!(
                        "prime {prime} out of sequence for `{symbol}`: expected {expected}"
                    ),
                });
            }
        }
        Ok(cb)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CodebookError> {
        Self::load_with_limit(path, DEFAULT_SIEVE_LIMIT)
    }

    pub fn load_with_limit(path: impl AsRef<Path>, limit: u64) -> Result<Self, CodebookError> {
        let file = fs::File::open(path)?;
        Self::read_from(io::BufReader::new(file), limit)
    }

    /// Parses the multiset text format (`<symbol> <multiplicity>` per line,
    /// `#` comments, duplicates summed), interning unseen symbols.
    pub fn parse_multiset(&mut self, text: &str) -> Result<Multiset, CodebookError> {
        self.parse_multiset_inner(text, true)
    }

    /// As [`PrimeCodebook::parse_multiset`], but unseen symbols are an
    /// error instead of being interned.
    pub fn parse_multiset_readonly(&self, text: &str) -> Result<Multiset, CodebookError> {
        // interning is disabled, so the mutable path is never taken
        let mut snapshot = self.snapshot();
        snapshot.parse_multiset_inner(text, false)
    }

    fn parse_multiset_inner(
        &mut self,
        text: &str,
        intern: bool,
    ) -> Result<Multiset, CodebookError> {
        let mut ms = Multiset::empty();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut parts = content.split_whitespace();
            let symbol = parts.next().unwrap();
            let mult_str = parts.next().ok_or_else(|| CodebookError::Parse {
                line: lineno,
                reason: "expected `<symbol> <multiplicity>`".into(),
            })?;
            if parts.next().is_some() {
                return Err(CodebookError::Parse {
                    line: lineno,
                    reason: "trailing fields after `<symbol> <multiplicity>`".into(),
                });
            }
            let mult: u64 = mult_str.parse().map_err(|e| CodebookError::Parse {
                line: lineno,
                reason: format!("bad multiplicity: {e}"),
            })?;
            if mult == 0 {
                return Err(CodebookError::Parse {
                    line: lineno,
                    reason: "multiplicity must be at least 1".into(),
                });
            }
            let id = if intern {
                self.intern(symbol).map_err(|e| match e {
                    CodebookError::InvalidSymbol { symbol, reason } => CodebookError::Parse {
                        line: lineno,
                        reason: format!("invalid symbol `{symbol}`: {reason}"),
                    },
                    other => other,
                })?
            } else {
                self.lookup(symbol).ok_or_else(|| CodebookError::UnknownSymbol {
                    symbol: symbol.to_owned(),
                    line: Some(lineno),
                })?
            };
            ms = ms.insert_capped(id, mult, DEFAULT_MULTIPLICITY_CAP)?;
        }
        Ok(ms)
    }

    /// Renders a multiset in the text format, entries ordered by beta
    /// (equivalently, by id).
    pub fn format_multiset(&self, ms: &Multiset) -> Result<String, CodebookError> {
        let mut out = String::new();
        for (id, k) in ms.iter() {
            let symbol = self.symbol(id)?;
            out.push_str(symbol);
            out.push(' ');
            out.push_str(&k.to_string());
            out.push('\n');
        }
        Ok(out)
    }
}

impl fmt::Display for BetaInverse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaInverse::Assigned(id) => write!(f, "assigned to id {id}"),
            BetaInverse::UnassignedPrime => write!(f, "prime, not assigned"),
            BetaInverse::NotPrime => write!(f, "not prime"),
        }
    }
}
