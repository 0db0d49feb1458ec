use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{format_word, parse_word, BaseWord, SymbolicBase, SymbolicError};
use crate::scalar::{lit, to_f64, Scalar};

/// A locally constant potential: its value at `x` depends on `x_{-r} … x_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasePotential<T> {
    window_radius: usize,
    values: BTreeMap<Vec<u8>, T>,
}

/// JSON form: `{"window_radius": r, "values": {"word": v}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub window_radius: usize,
    pub values: BTreeMap<String, f64>,
}

impl<T: Scalar> BasePotential<T> {
    pub fn new(base: &SymbolicBase, window_radius: usize, values: BTreeMap<Vec<u8>, T>) -> Result<Self, SymbolicError> {
        let len = 2 * window_radius + 1;
        let admissible = base.admissible_words(len);
        if let Some(w) = admissible.iter().find(|w| !values.contains_key(*w)) {
            return Err(SymbolicError::PotentialCoverage {
                len,
                detail: format!("missing word {}", format_word(w)),
            });
        }
        if values.len() != admissible.len() {
            let extra = values
                .keys()
                .find(|w| w.len() != len || !base.is_admissible(w))
                .map(|w| format_word(w))
                .unwrap_or_default();
            return Err(SymbolicError::PotentialCoverage {
                len,
                detail: format!("unexpected word {extra}"),
            });
        }
        if let Some((w, _)) = values.iter().find(|(_, v)| !v.is_finite()) {
            return Err(SymbolicError::PotentialCoverage {
                len,
                detail: format!("non-finite value at {}", format_word(w)),
            });
        }
        Ok(Self { window_radius, values })
    }

    pub fn from_fn(base: &SymbolicBase, window_radius: usize, f: impl Fn(&[u8]) -> T) -> Self {
        let values = base
            .admissible_words(2 * window_radius + 1)
            .into_iter()
            .map(|w| {
                let v = f(&w);
                (w, v)
            })
            .collect();
        Self { window_radius, values }
    }

    pub fn constant(base: &SymbolicBase, c: T) -> Self {
        Self::from_fn(base, 0, |_| c)
    }

    pub fn zero(base: &SymbolicBase) -> Self {
        Self::constant(base, T::zero())
    }

    /// `φ(x) = values[x_0]`.
    pub fn one_block(base: &SymbolicBase, values: &[T]) -> Self {
        assert_eq!(values.len(), base.alphabet(), "one value per symbol");
        Self::from_fn(base, 0, |w| values[w[0] as usize])
    }

    pub fn from_spec(base: &SymbolicBase, spec: &PotentialSpec) -> Result<Self, SymbolicError> {
        let mut values = BTreeMap::new();
        for (k, v) in &spec.values {
            values.insert(parse_word(k)?, lit::<T>(*v));
        }
        Self::new(base, spec.window_radius, values)
    }

    pub fn to_spec(&self) -> PotentialSpec {
        PotentialSpec {
            window_radius: self.window_radius,
            values: self.values.iter().map(|(k, v)| (format_word(k), to_f64(*v))).collect(),
        }
    }

    pub fn window_radius(&self) -> usize {
        self.window_radius
    }

    pub fn values(&self) -> &BTreeMap<Vec<u8>, T> {
        &self.values
    }

    /// Value on a window word of length `2r + 1`; inadmissible windows give `None`.
    pub fn value(&self, window: &[u8]) -> Option<T> {
        self.values.get(window).copied()
    }

    /// `φ(x)`.
    pub fn eval(&self, x: &BaseWord) -> T {
        let r = self.window_radius as i64;
        self.value(&x.window(-r, r)).unwrap_or_else(T::zero)
    }

    /// Same function written on a wider window.
    pub fn with_radius(&self, base: &SymbolicBase, radius: usize) -> Self {
        assert!(radius >= self.window_radius);
        let shift = radius - self.window_radius;
        Self::from_fn(base, radius, |w| self.values[&w[shift..w.len() - shift]])
    }

    /// `φ + c`.
    pub fn shifted(&self, c: T) -> Self {
        Self {
            window_radius: self.window_radius,
            values: self.values.iter().map(|(k, &v)| (k.clone(), v + c)).collect(),
        }
    }

    /// `φ + t·η`, written on the wider of the two windows.
    pub fn add_scaled(&self, base: &SymbolicBase, other: &Self, t: T) -> Self {
        let r = self.window_radius.max(other.window_radius);
        let a = self.with_radius(base, r);
        let b = other.with_radius(base, r);
        Self {
            window_radius: r,
            values: a.values.iter().map(|(k, &v)| (k.clone(), v + t * b.values[k])).collect(),
        }
    }

    pub fn sup_abs(&self) -> T {
        self.values.values().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> T {
        self.values.values().fold(T::neg_infinity(), |m, &v| m.max(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coverage_is_enforced() {
        let gm = SymbolicBase::golden_mean();
        let mut values = BTreeMap::new();
        values.insert(vec![0], 0.5);
        assert!(BasePotential::new(&gm, 0, values.clone()).is_err());
        values.insert(vec![1], 1.0);
        assert!(BasePotential::new(&gm, 0, values.clone()).is_ok());
        // "11" is inadmissible in the golden-mean shift
        let three = BasePotential::<f64>::from_fn(&gm, 1, |_| 0.0);
        assert_eq!(three.values().len(), 5);
        assert!(three.value(&[0, 1, 1]).is_none());
    }

    #[test]
    fn widening_preserves_values() {
        let b = SymbolicBase::full_shift(2);
        let phi = BasePotential::one_block(&b, &[0.25, -1.0]);
        let wide = phi.with_radius(&b, 2);
        let x = BaseWord::new(vec![1, 0, 1, 1, 0, 0, 1], 3);
        assert_eq!(phi.eval(&x), wide.eval(&x));
        assert_eq!(wide.eval(&x), -1.0);
    }

    #[test]
    fn spec_round_trip() {
        let b = SymbolicBase::full_shift(3);
        let json = r#"{"window_radius": 0, "values": {"0": 1.5, "1": 0.0, "2": -2.0}}"#;
        let spec: PotentialSpec = serde_json::from_str(json).unwrap();
        let phi = BasePotential::<f64>::from_spec(&b, &spec).unwrap();
        assert_eq!(phi.value(&[2]), Some(-2.0));
        assert_eq!(phi.to_spec(), spec);
    }
}
