use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BaseWord, GibbsState, SymbolicBase};
use crate::scalar::{to_f64, Scalar};

/// Draws two-sided words from a stationary chain.
///
/// Forward steps use `P`; backward steps use the reversed chain
/// `P*_{ji} = p_i P_ij / p_j`.
#[derive(Clone, Debug)]
pub struct ChainSampler {
    blocks: Vec<Vec<u8>>,
    stationary_cdf: Vec<f64>,
    forward: Vec<Vec<(usize, f64)>>,
    backward: Vec<Vec<(usize, f64)>>,
}

fn cumulate(row: impl Iterator<Item = (usize, f64)>) -> Vec<(usize, f64)> {
    let mut acc = 0.0;
    let mut out: Vec<(usize, f64)> = row
        .filter(|e| e.1 > 0.0)
        .map(|(j, p)| {
            acc += p;
            (j, acc)
        })
        .collect();
    if let Some(last) = out.last_mut() {
        last.1 = f64::INFINITY;
    }
    out
}

fn pick(row: &[(usize, f64)], u: f64) -> usize {
    row.iter().find(|e| u < e.1).map_or(row[row.len() - 1].0, |e| e.0)
}

impl ChainSampler {
    pub fn new<T: Scalar>(g: &GibbsState<T>) -> Self {
        let p: Vec<f64> = g.stationary().iter().map(|&v| to_f64(v)).collect();
        let n = p.len();
        let mut acc = 0.0;
        let mut stationary_cdf: Vec<f64> = p
            .iter()
            .map(|&v| {
                acc += v;
                acc
            })
            .collect();
        stationary_cdf[n - 1] = f64::INFINITY;
        let forward = g
            .rows()
            .iter()
            .map(|row| cumulate(row.iter().map(|&(j, v)| (j, to_f64(v)))))
            .collect();
        let mut reversed: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in g.rows().iter().enumerate() {
            for &(j, v) in row {
                if p[j] > 0.0 {
                    reversed[j].push((i, p[i] * to_f64(v) / p[j]));
                }
            }
        }
        let backward = reversed.into_iter().map(|row| cumulate(row.into_iter())).collect();
        Self {
            blocks: g.blocks().to_vec(),
            stationary_cdf,
            forward,
            backward,
        }
    }

    /// A word covering at least `[-length, length]`, with `x_0` at the block centre.
    pub fn sample<R: Rng>(&self, length: usize, rng: &mut R) -> BaseWord {
        let order = self.blocks[0].len();
        let u: f64 = rng.gen();
        let present = self.stationary_cdf.partition_point(|&c| c <= u);
        let mut states = Vec::with_capacity(2 * length + 1);
        let mut state = present;
        for _ in 0..length {
            state = pick(&self.backward[state], rng.gen());
            states.push(state);
        }
        states.reverse();
        states.push(present);
        state = present;
        for _ in 0..length {
            state = pick(&self.forward[state], rng.gen());
            states.push(state);
        }
        let mut symbols = self.blocks[states[0]].clone();
        symbols.extend(states[1..].iter().map(|&s| self.blocks[s][order - 1]));
        BaseWord::new(symbols, length + order / 2)
    }

    /// A single long one-sided run `x_0 … x_{len-1}` (no backward extension).
    pub fn sample_forward<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<u8> {
        let order = self.blocks[0].len();
        let u: f64 = rng.gen();
        let mut state = self.stationary_cdf.partition_point(|&c| c <= u);
        let mut symbols = self.blocks[state].clone();
        while symbols.len() < len {
            state = pick(&self.forward[state], rng.gen());
            symbols.push(self.blocks[state][order - 1]);
        }
        symbols.truncate(len);
        symbols
    }
}

/// A two-sided Gibbs-distributed word over `[-length, length]`, deterministic per seed.
pub fn sample_orbit<T: Scalar>(base: &SymbolicBase, g: &GibbsState<T>, length: usize, seed: u64) -> BaseWord {
    debug_assert_eq!(base.alphabet(), g.alphabet());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ChainSampler::new(g).sample(length.max(1), &mut rng)
}
