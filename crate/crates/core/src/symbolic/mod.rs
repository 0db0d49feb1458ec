//! Subshifts of finite type and their exact thermodynamic formalism for
//! locally constant potentials.
//!
//! The base dynamics is the left shift `(σx)_i = x_{i+1}` on two-sided
//! sequences constrained by a 0/1 transition matrix, with the metric
//! `d(x, x') = 2^{-s}`, `s = min{|i| : x_i ≠ x'_i}`.

mod gibbs;
mod potential;
mod sample;
mod word;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gibbs::{cylinder_measure, entropy_markov, gibbs_state, pressure_exact, Cylinder, GibbsState};
pub use potential::{BasePotential, PotentialSpec};
pub use sample::{sample_orbit, ChainSampler};
pub use word::BaseWord;

/// Largest alphabet: words are serialized as strings over `'0'..='9'`.
pub const MAX_ALPHABET: usize = 10;

#[derive(Debug, Error)]
pub enum SymbolicError {
    #[error("alphabet size {0} outside 1..={MAX_ALPHABET}")]
    AlphabetSize(usize),
    #[error("transition matrix must be {0}x{0} with 0/1 entries")]
    MalformedTransition(usize),
    #[error("symbol {0} is not an admissible fixed point")]
    NotFixed(u8),
    #[error("transition matrix is reducible: symbol {to} is unreachable from symbol {from}")]
    Reducible { from: u8, to: u8 },
    #[error("transition matrix is irreducible but periodic with period {0}")]
    Periodic(usize),
    #[error("potential table must cover exactly the admissible words of length {len}: {detail}")]
    PotentialCoverage { len: usize, detail: String },
    #[error("invalid word {0:?}")]
    InvalidWord(String),
    #[error(
        "power iteration did not converge after {iterations} iterations \
         (last Rayleigh quotients {last:e}, {previous:e})"
    )]
    NonConvergence { iterations: usize, last: f64, previous: f64 },
    #[error("degenerate Perron vector: entry {index} is {value:e}")]
    DegeneratePerron { index: usize, value: f64 },
    #[error("invalid Markov chain: {0}")]
    InvalidChain(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A subshift of finite type with a designated fixed symbol `q̄`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicBase {
    alphabet: usize,
    transition: Vec<u8>,
    fixed_symbol: u8,
}

/// JSON form: `{"alphabet": k, "transition": [[...]], "fixed_word": j}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseSpec {
    pub alphabet: usize,
    pub transition: Vec<Vec<u8>>,
    pub fixed_word: u8,
}

/// Outcome of [`SymbolicBase::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BaseDiagnostics {
    pub irreducible: bool,
    pub aperiodic: bool,
    /// Smallest `n` with `T^n > 0`.
    pub primitivity_exponent: usize,
    pub fixed_symbols: Vec<u8>,
}

impl SymbolicBase {
    pub fn new(alphabet: usize, transition: Vec<Vec<u8>>, fixed_symbol: u8) -> Result<Self, SymbolicError> {
        if alphabet == 0 || alphabet > MAX_ALPHABET {
            return Err(SymbolicError::AlphabetSize(alphabet));
        }
        if transition.len() != alphabet
            || transition.iter().any(|row| row.len() != alphabet || row.iter().any(|&e| e > 1))
        {
            return Err(SymbolicError::MalformedTransition(alphabet));
        }
        let base = Self {
            alphabet,
            transition: transition.into_iter().flatten().collect(),
            fixed_symbol,
        };
        if (fixed_symbol as usize) >= alphabet || !base.allows(fixed_symbol, fixed_symbol) {
            return Err(SymbolicError::NotFixed(fixed_symbol));
        }
        Ok(base)
    }

    /// The full shift on `k` symbols with fixed symbol 0.
    pub fn full_shift(k: usize) -> Self {
        Self::new(k, vec![vec![1; k]; k], 0).expect("full shift")
    }

    /// The golden-mean shift (no factor "11").
    pub fn golden_mean() -> Self {
        Self::new(2, vec![vec![1, 1], vec![1, 0]], 0).expect("golden mean shift")
    }

    pub fn from_spec(spec: &BaseSpec) -> Result<Self, SymbolicError> {
        Self::new(spec.alphabet, spec.transition.clone(), spec.fixed_word)
    }

    pub fn from_json(json: &str) -> Result<Self, SymbolicError> {
        Self::from_spec(&serde_json::from_str(json)?)
    }

    pub fn to_spec(&self) -> BaseSpec {
        BaseSpec {
            alphabet: self.alphabet,
            transition: self.transition.chunks(self.alphabet).map(<[u8]>::to_vec).collect(),
            fixed_word: self.fixed_symbol,
        }
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn fixed_symbol(&self) -> u8 {
        self.fixed_symbol
    }

    #[inline]
    pub fn allows(&self, a: u8, b: u8) -> bool {
        self.transition[a as usize * self.alphabet + b as usize] == 1
    }

    pub fn is_admissible(&self, word: &[u8]) -> bool {
        word.iter().all(|&s| (s as usize) < self.alphabet) && word.windows(2).all(|w| self.allows(w[0], w[1]))
    }

    pub fn fixed_symbols(&self) -> Vec<u8> {
        (0..self.alphabet as u8).filter(|&a| self.allows(a, a)).collect()
    }

    /// All admissible words of the given length in lexicographic order.
    pub fn admissible_words(&self, len: usize) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        if len == 0 {
            out.push(Vec::new());
            return out;
        }
        let mut word = Vec::with_capacity(len);
        self.extend_words(&mut word, len, &mut out);
        out
    }

    fn extend_words(&self, word: &mut Vec<u8>, len: usize, out: &mut Vec<Vec<u8>>) {
        if word.len() == len {
            out.push(word.clone());
            return;
        }
        for a in 0..self.alphabet as u8 {
            if word.last().is_none_or(|&last| self.allows(last, a)) {
                word.push(a);
                self.extend_words(word, len, out);
                word.pop();
            }
        }
    }

    /// Checks irreducibility and aperiodicity and lists the fixed symbols.
    pub fn validate(&self) -> Result<BaseDiagnostics, SymbolicError> {
        let k = self.alphabet;
        for from in 0..k {
            let reach = self.reachable_from(from);
            if let Some(to) = reach.iter().position(|&r| !r) {
                return Err(SymbolicError::Reducible { from: from as u8, to: to as u8 });
            }
        }
        let period = self.period();
        if period != 1 {
            return Err(SymbolicError::Periodic(period));
        }
        // Wielandt: a primitive k×k matrix has T^n > 0 for n = (k-1)^2 + 1.
        let bound = (k - 1) * (k - 1) + 1;
        let mut power: Vec<bool> = self.transition.iter().map(|&e| e == 1).collect();
        let mut exponent = 1;
        while !power.iter().all(|&e| e) {
            exponent += 1;
            if exponent > bound {
                return Err(SymbolicError::Periodic(period));
            }
            let mut next = vec![false; k * k];
            for i in 0..k {
                for j in 0..k {
                    next[i * k + j] = (0..k).any(|m| power[i * k + m] && self.transition[m * k + j] == 1);
                }
            }
            power = next;
        }
        Ok(BaseDiagnostics {
            irreducible: true,
            aperiodic: true,
            primitivity_exponent: exponent,
            fixed_symbols: self.fixed_symbols(),
        })
    }

    fn reachable_from(&self, from: usize) -> Vec<bool> {
        let k = self.alphabet;
        let mut seen = vec![false; k];
        let mut stack = vec![from];
        while let Some(i) = stack.pop() {
            for (j, &edge) in self.transition[i * k..(i + 1) * k].iter().enumerate() {
                if edge == 1 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// Period of an irreducible graph: gcd of `level(u) + 1 - level(v)` over edges.
    fn period(&self) -> usize {
        let k = self.alphabet;
        let mut level = vec![usize::MAX; k];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for j in 0..k {
                if self.transition[i * k + j] == 1 && level[j] == usize::MAX {
                    level[j] = level[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        let mut g = 0usize;
        for i in 0..k {
            for j in 0..k {
                if self.transition[i * k + j] == 1 && level[i] != usize::MAX && level[j] != usize::MAX {
                    let d = (level[i] as i64 + 1 - level[j] as i64).unsigned_abs() as usize;
                    g = gcd(g, d);
                }
            }
        }
        g
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Parses a word written over `'0'..='9'`.
pub fn parse_word(s: &str) -> Result<Vec<u8>, SymbolicError> {
    s.chars()
        .map(|c| c.to_digit(10).map(|d| d as u8))
        .collect::<Option<Vec<u8>>>()
        .ok_or_else(|| SymbolicError::InvalidWord(s.to_owned()))
}

pub fn format_word(word: &[u8]) -> String {
    word.iter().map(|&d| char::from(b'0' + d)).collect()
}
