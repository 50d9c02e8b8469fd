//! Sparse affine expressions over model variables.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Column index into a [`crate::lp::LinearProblem`].
pub type VarId = usize;

/// `constant + Σ coef·var`, with terms kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(VarId, f64)>,
}

impl LinExpr {
    pub fn constant(value: f64) -> Self {
        Self {
            constant: value,
            terms: Vec::new(),
        }
    }

    pub fn term(var: VarId, coef: f64) -> Self {
        Self {
            constant: 0.0,
            terms: alloc::vec![(var, coef)],
        }
    }

    pub fn add_term(&mut self, var: VarId, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((var, coef));
        }
        self
    }

    pub fn add_constant(&mut self, value: f64) -> &mut Self {
        self.constant += value;
        self
    }

    /// Adds `scale·other` in place.
    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        self.constant += scale * other.constant;
        for &(v, c) in &other.terms {
            self.add_term(v, scale * c);
        }
        self
    }

    pub fn scaled(&self, scale: f64) -> LinExpr {
        let mut out = LinExpr::constant(0.0);
        out.add_scaled(self, scale);
        out
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(v, c)| acc + c * point[v])
    }

    /// True when every coefficient and the constant are exactly zero.
    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    /// Merges duplicate variables and drops zero coefficients. Output is
    /// sorted by variable.
    pub fn compact(&self) -> LinExpr {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        LinExpr {
            constant: self.constant,
            terms: merged,
        }
    }

    pub fn max_var(&self) -> Option<VarId> {
        self.terms.iter().map(|&(v, _)| v).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_merges_and_drops() {
        let e = LinExpr {
            constant: 1.0,
            terms: alloc::vec![(3, 1.0), (1, 2.0), (3, -1.0), (1, 0.5)],
        };
        let c = e.compact();
        assert_eq!(c.terms, alloc::vec![(1, 2.5)]);
        assert_eq!(c.constant, 1.0);
    }

    #[test]
    fn eval_and_scale() {
        let mut e = LinExpr::constant(2.0);
        e.add_term(0, 3.0).add_term(1, -1.0);
        assert_eq!(e.eval(&[1.0, 4.0]), 1.0);
        assert_eq!(e.scaled(-2.0).eval(&[1.0, 4.0]), -2.0);
    }
}
