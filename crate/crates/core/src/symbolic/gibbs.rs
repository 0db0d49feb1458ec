use std::collections::BTreeMap;

use super::{BasePotential, SymbolicBase, SymbolicError};
use crate::scalar::{to_f64, Scalar};

const MAX_POWER_ITERATIONS: usize = 200_000;

/// Higher-block presentation: states are admissible words of a fixed length,
/// `b → b'` when they overlap in all but one symbol.
#[derive(Clone, Debug)]
struct BlockGraph {
    blocks: Vec<Vec<u8>>,
    successors: Vec<Vec<usize>>,
}

impl BlockGraph {
    fn new(base: &SymbolicBase, len: usize) -> Self {
        let blocks = base.admissible_words(len);
        let index: BTreeMap<&[u8], usize> = blocks.iter().enumerate().map(|(i, b)| (b.as_slice(), i)).collect();
        let mut next = vec![0u8; len];
        let successors = blocks
            .iter()
            .map(|b| {
                let last = b[len - 1];
                (0..base.alphabet() as u8)
                    .filter(|&a| base.allows(last, a))
                    .filter_map(|a| {
                        next[..len - 1].copy_from_slice(&b[1..]);
                        next[len - 1] = a;
                        index.get(next.as_slice()).copied()
                    })
                    .collect()
            })
            .collect();
        Self { blocks, successors }
    }

    fn len(&self) -> usize {
        self.blocks.len()
    }
}

/// Power iteration on a nonnegative primitive operator from the all-ones start.
/// Returns the Perron root and the Perron vector normalized to unit sum.
fn power_iterate<T: Scalar>(n: usize, apply: impl Fn(&[T], &mut [T])) -> Result<(T, Vec<T>), SymbolicError> {
    let tol = T::solver_tolerance();
    let mut v = vec![T::one() / T::from_usize(n).unwrap(); n];
    let mut next = vec![T::zero(); n];
    let mut lambda = T::zero();
    let mut previous = T::zero();
    for _ in 0..MAX_POWER_ITERATIONS {
        apply(&v, &mut next);
        let total: T = next.iter().copied().sum();
        previous = lambda;
        lambda = total;
        let scale = T::one() / total;
        let mut change = T::zero();
        let mut top = T::zero();
        for (a, b) in v.iter_mut().zip(&next) {
            let nb = *b * scale;
            change = change.max((nb - *a).abs());
            top = top.max(nb);
            *a = nb;
        }
        if (lambda - previous).abs() <= tol * lambda && change <= tol * top {
            return Ok((lambda, v));
        }
    }
    Err(SymbolicError::NonConvergence {
        iterations: MAX_POWER_ITERATIONS,
        last: to_f64(lambda),
        previous: to_f64(previous),
    })
}

/// Right Perron data of `B_{ij} = 1[i→j] w_i`.
fn right_perron<T: Scalar>(g: &BlockGraph, w: &[T]) -> Result<(T, Vec<T>), SymbolicError> {
    power_iterate(g.len(), |v, out| {
        for (i, o) in out.iter_mut().enumerate() {
            *o = w[i] * g.successors[i].iter().map(|&j| v[j]).sum::<T>();
        }
    })
}

fn left_perron<T: Scalar>(g: &BlockGraph, w: &[T]) -> Result<(T, Vec<T>), SymbolicError> {
    power_iterate(g.len(), |v, out| {
        out.iter_mut().for_each(|o| *o = T::zero());
        for (i, succ) in g.successors.iter().enumerate() {
            let mass = v[i] * w[i];
            for &j in succ {
                out[j] = out[j] + mass;
            }
        }
    })
}

/// Potential values per block, shifted so the largest is zero.
fn block_weights<T: Scalar>(g: &BlockGraph, phi: &BasePotential<T>) -> (Vec<T>, Vec<T>, T) {
    let values: Vec<T> = g.blocks.iter().map(|b| phi.value(b).expect("block is admissible")).collect();
    let top = values.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let weights = values.iter().map(|&v| (v - top).exp()).collect();
    (values, weights, top)
}

/// Topological pressure of a locally constant potential: the log of the Perron
/// root of the weighted transition matrix on the higher-block recoding.
pub fn pressure_exact<T: Scalar>(base: &SymbolicBase, phi: &BasePotential<T>) -> Result<T, SymbolicError> {
    let graph = BlockGraph::new(base, 2 * phi.window_radius() + 1);
    let (_, weights, top) = block_weights(&graph, phi);
    let (lambda, _) = right_perron(&graph, &weights)?;
    Ok(lambda.ln() + top)
}

/// The equilibrium state of a locally constant potential, a stationary Markov
/// chain on the higher-block alphabet.
#[derive(Clone, Debug)]
pub struct GibbsState<T> {
    alphabet: usize,
    blocks: Vec<Vec<u8>>,
    index: BTreeMap<Vec<u8>, usize>,
    /// Sparse rows of the stochastic matrix.
    rows: Vec<Vec<(usize, T)>>,
    stationary: Vec<T>,
    pressure: T,
    potential_mean: T,
}

/// RPF normalization `P_ij = B_ij r_j / (λ r_i)`, `p_i ∝ l_i r_i`.
pub fn gibbs_state<T: Scalar>(base: &SymbolicBase, phi: &BasePotential<T>) -> Result<GibbsState<T>, SymbolicError> {
    base.validate()?;
    let graph = BlockGraph::new(base, 2 * phi.window_radius() + 1);
    let (values, weights, top) = block_weights(&graph, phi);
    let (lambda, right) = right_perron(&graph, &weights)?;
    let (_, left) = left_perron(&graph, &weights)?;
    let floor = T::epsilon();
    let rmax = right.iter().fold(T::zero(), |m, &v| m.max(v));
    let lmax = left.iter().fold(T::zero(), |m, &v| m.max(v));
    for (index, (&r, &l)) in right.iter().zip(&left).enumerate() {
        if r <= floor * rmax || l <= floor * lmax {
            return Err(SymbolicError::DegeneratePerron {
                index,
                value: to_f64(r.min(l)),
            });
        }
    }
    let rows: Vec<Vec<(usize, T)>> = graph
        .successors
        .iter()
        .enumerate()
        .map(|(i, succ)| {
            let raw: Vec<(usize, T)> = succ.iter().map(|&j| (j, weights[i] * right[j] / (lambda * right[i]))).collect();
            let total: T = raw.iter().map(|e| e.1).sum();
            raw.into_iter().map(|(j, p)| (j, p / total)).collect()
        })
        .collect();
    let mut stationary: Vec<T> = left.iter().zip(&right).map(|(&l, &r)| l * r).collect();
    normalize(&mut stationary);
    polish_stationary(&rows, &mut stationary);
    let potential_mean = stationary.iter().zip(&values).map(|(&p, &v)| p * v).sum();
    let index = graph.blocks.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
    Ok(GibbsState {
        alphabet: base.alphabet(),
        blocks: graph.blocks,
        index,
        rows,
        stationary,
        pressure: lambda.ln() + top,
        potential_mean,
    })
}

fn normalize<T: Scalar>(v: &mut [T]) {
    let total: T = v.iter().copied().sum();
    v.iter_mut().for_each(|x| *x = *x / total);
}

/// A few sweeps of `p ← pP` remove the rounding left over from the Perron vectors.
fn polish_stationary<T: Scalar>(rows: &[Vec<(usize, T)>], p: &mut Vec<T>) {
    for _ in 0..64 {
        let mut next = vec![T::zero(); p.len()];
        for (i, row) in rows.iter().enumerate() {
            for &(j, pij) in row {
                next[j] = next[j] + p[i] * pij;
            }
        }
        normalize(&mut next);
        let change = next.iter().zip(p.iter()).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        *p = next;
        if change <= T::epsilon() {
            break;
        }
    }
}

impl<T: Scalar> GibbsState<T> {
    /// A stationary chain given directly by its 1-block stochastic matrix.
    /// It is the equilibrium state of `φ(x) = log P(x_0, x_1)`, so the pressure
    /// is recorded as zero and the potential mean as `-h`.
    pub fn from_markov(base: &SymbolicBase, matrix: Vec<Vec<T>>, stationary: Vec<T>) -> Result<Self, SymbolicError> {
        let k = base.alphabet();
        let tol = T::solver_tolerance() * T::from_f64(100.0).unwrap();
        if matrix.len() != k || stationary.len() != k || matrix.iter().any(|r| r.len() != k) {
            return Err(SymbolicError::InvalidChain(format!("expected {k} states")));
        }
        let mut rows = Vec::with_capacity(k);
        for (i, row) in matrix.iter().enumerate() {
            let total: T = row.iter().copied().sum();
            if (total - T::one()).abs() > tol || row.iter().any(|&v| v < T::zero()) {
                return Err(SymbolicError::InvalidChain(format!("row {i} is not a probability vector")));
            }
            if row.iter().enumerate().any(|(j, &v)| v > T::zero() && !base.allows(i as u8, j as u8)) {
                return Err(SymbolicError::InvalidChain(format!("row {i} charges a forbidden transition")));
            }
            rows.push(
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| base.allows(i as u8, *j as u8))
                    .map(|(j, &v)| (j, v))
                    .collect::<Vec<_>>(),
            );
        }
        for j in 0..k {
            let flow: T = (0..k).map(|i| stationary[i] * matrix[i][j]).sum();
            if (flow - stationary[j]).abs() > tol {
                return Err(SymbolicError::InvalidChain(format!("p is not stationary at state {j}")));
            }
        }
        let blocks: Vec<Vec<u8>> = (0..k as u8).map(|a| vec![a]).collect();
        let index = blocks.iter().enumerate().map(|(i, b)| (b.clone(), i)).collect();
        let mut state = Self {
            alphabet: k,
            blocks,
            index,
            rows,
            stationary,
            pressure: T::zero(),
            potential_mean: T::zero(),
        };
        state.potential_mean = -entropy_markov(&state);
        Ok(state)
    }

    /// The Bernoulli measure with the given symbol probabilities on a full shift.
    pub fn bernoulli(probabilities: &[T]) -> Result<Self, SymbolicError> {
        let k = probabilities.len();
        let base = SymbolicBase::full_shift(k);
        Self::from_markov(&base, vec![probabilities.to_vec(); k], probabilities.to_vec())
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    /// Symbols per recoded state.
    pub fn block_order(&self) -> usize {
        self.blocks[0].len()
    }

    pub fn blocks(&self) -> &[Vec<u8>] {
        &self.blocks
    }

    pub fn state_index(&self, block: &[u8]) -> Option<usize> {
        self.index.get(block).copied()
    }

    pub fn stationary(&self) -> &[T] {
        &self.stationary
    }

    pub fn rows(&self) -> &[Vec<(usize, T)>] {
        &self.rows
    }

    pub fn transition(&self, i: usize, j: usize) -> T {
        self.rows[i].iter().find(|e| e.0 == j).map_or(T::zero(), |e| e.1)
    }

    /// Dense stochastic matrix; intended for small recodings.
    pub fn stochastic_matrix(&self) -> Vec<Vec<T>> {
        let n = self.blocks.len();
        let mut m = vec![vec![T::zero(); n]; n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[i][j] = v;
            }
        }
        m
    }

    pub fn pressure(&self) -> T {
        self.pressure
    }

    /// `∫ φ dμ` for the potential the state was built from.
    pub fn potential_mean(&self) -> T {
        self.potential_mean
    }

    /// Measure of the cylinder `[w]` at any position (the chain is stationary).
    pub fn word_measure(&self, word: &[u8]) -> T {
        let n = word.len();
        if n == 0 {
            return T::one();
        }
        if word.iter().any(|&s| s as usize >= self.alphabet) {
            return T::zero();
        }
        let order = self.block_order();
        if n < order {
            return self
                .blocks
                .iter()
                .zip(&self.stationary)
                .filter(|(b, _)| b.starts_with(word))
                .map(|(_, &p)| p)
                .sum();
        }
        let Some(mut state) = self.state_index(&word[..order]) else {
            return T::zero();
        };
        let mut measure = self.stationary[state];
        for start in 1..=n - order {
            let Some(next) = self.state_index(&word[start..start + order]) else {
                return T::zero();
            };
            measure = measure * self.transition(state, next);
            state = next;
        }
        measure
    }

    /// `μ([x_0 = a])`.
    pub fn symbol_marginal(&self, a: u8) -> T {
        self.word_measure(&[a])
    }
}

/// `h_μ = -Σ p_i P_ij log P_ij` with `0 log 0 = 0`.
pub fn entropy_markov<T: Scalar>(g: &GibbsState<T>) -> T {
    g.rows
        .iter()
        .zip(&g.stationary)
        .map(|(row, &p)| {
            row.iter()
                .filter(|e| e.1 > T::zero())
                .map(|&(_, pij)| -p * pij * pij.ln())
                .sum::<T>()
        })
        .sum()
}

/// A cylinder set `{x : x_{start+i} = word[i]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cylinder {
    pub start: i64,
    pub word: Vec<u8>,
}

impl Cylinder {
    pub fn new(start: i64, word: Vec<u8>) -> Self {
        Self { start, word }
    }

    /// Window `[-m, m]`; the word must have odd length `2m + 1`.
    pub fn centered(word: Vec<u8>) -> Self {
        assert!(word.len() % 2 == 1, "centered cylinders have odd length");
        let m = (word.len() / 2) as i64;
        Self { start: -m, word }
    }

    /// `C_m = {x : x_i = symbol for |i| ≤ m}`.
    pub fn fixed_point(symbol: u8, m: usize) -> Self {
        Self::centered(vec![symbol; 2 * m + 1])
    }

    pub fn empty() -> Self {
        Self { start: 0, word: Vec::new() }
    }
}

/// Product formula for the Markov measure; inadmissible words have measure 0.
pub fn cylinder_measure<T: Scalar>(g: &GibbsState<T>, c: &Cylinder) -> T {
    g.word_measure(&c.word)
}
