use std::fmt;
use std::sync::Arc;

/// How far [`BaseWord::separation`] looks for a disagreement.
const SEPARATION_SEARCH: i64 = 256;

/// A two-sided sequence stored as a finite window with periodic extension.
///
/// Coordinate `x_i` lives at `symbols[(origin + i) mod len]`. Shifting only
/// moves `origin`, so orbits share the underlying storage.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BaseWord {
    symbols: Arc<[u8]>,
    origin: i64,
}

impl BaseWord {
    /// `origin` is the index of `x_0` inside `symbols`.
    pub fn new(symbols: Vec<u8>, origin: usize) -> Self {
        assert!(!symbols.is_empty(), "empty base word");
        Self {
            symbols: symbols.into(),
            origin: origin as i64,
        }
    }

    /// The constant sequence `…sss…` stored over `[-radius, radius]`.
    pub fn constant(symbol: u8, radius: usize) -> Self {
        Self::new(vec![symbol; 2 * radius + 1], radius)
    }

    #[inline]
    pub fn at(&self, i: i64) -> u8 {
        let n = self.symbols.len() as i64;
        self.symbols[(self.origin + i).rem_euclid(n) as usize]
    }

    /// `σ^k x`.
    pub fn shifted(&self, k: i64) -> Self {
        Self {
            symbols: Arc::clone(&self.symbols),
            origin: self.origin + k,
        }
    }

    /// `x_from ..= x_to`.
    pub fn window(&self, from: i64, to: i64) -> Vec<u8> {
        (from..=to).map(|i| self.at(i)).collect()
    }

    /// Whether `[from, to]` lies inside the stored window (no periodic wrap).
    pub fn covers(&self, from: i64, to: i64) -> bool {
        from + self.origin >= 0 && to + self.origin < self.symbols.len() as i64
    }

    /// Radius `R` such that `[-R, R]` is stored without wrap.
    pub fn stored_radius(&self) -> i64 {
        let hi = self.symbols.len() as i64 - 1 - self.origin;
        self.origin.min(hi).max(-1)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    /// `min{|i| : x_i ≠ x'_i}`, or `None` when the words agree on the search range.
    pub fn separation(&self, other: &BaseWord) -> Option<u32> {
        if self.at(0) != other.at(0) {
            return Some(0);
        }
        (1..=SEPARATION_SEARCH)
            .find(|&i| self.at(i) != other.at(i) || self.at(-i) != other.at(-i))
            .map(|i| i as u32)
    }

    /// The metric `2^{-s}`.
    pub fn distance(&self, other: &BaseWord) -> f64 {
        match self.separation(other) {
            Some(s) => 0.5f64.powi(s as i32),
            None => 0.0,
        }
    }

    /// Number of rings `{-j, j}`, `j = 0, 1, …`, on which `x` matches `symbol`,
    /// capped at `cap`.
    pub fn match_depth(&self, symbol: u8, cap: usize) -> usize {
        let mut m = 0;
        while m < cap {
            let j = m as i64;
            if self.at(j) != symbol || self.at(-j) != symbol {
                break;
            }
            m += 1;
        }
        m
    }
}

impl fmt::Debug for BaseWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.stored_radius().clamp(0, 8);
        let left: String = (-r..0).map(|i| char::from(b'0' + self.at(i))).collect();
        let right: String = (1..=r).map(|i| char::from(b'0' + self.at(i))).collect();
        write!(f, "…{left}.{}{right}…", self.at(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_moves_the_origin() {
        let x = BaseWord::new(vec![0, 1, 2, 3, 4], 2);
        assert_eq!(x.at(0), 2);
        assert_eq!(x.at(-2), 0);
        let y = x.shifted(1);
        assert_eq!(y.at(0), 3);
        assert_eq!(y.shifted(-1), x);
        // periodic extension
        assert_eq!(x.at(3), 0);
    }

    #[test]
    fn distance_is_two_to_the_minus_separation() {
        let x = BaseWord::new(vec![0, 0, 0, 0, 0], 2);
        let y = BaseWord::new(vec![1, 0, 0, 0, 0], 2);
        assert_eq!(x.separation(&y), Some(2));
        assert_eq!(x.distance(&y), 0.25);
        assert_eq!(x.distance(&x), 0.0);
    }

    #[test]
    fn match_depth_counts_rings() {
        let x = BaseWord::new(vec![1, 0, 0, 0, 1], 2);
        assert_eq!(x.match_depth(0, 5), 2);
        assert_eq!(x.match_depth(1, 5), 0);
        assert_eq!(BaseWord::constant(0, 3).match_depth(0, 2), 2);
    }
}
