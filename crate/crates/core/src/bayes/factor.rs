//! Discrete factors (potentials) over sets of network variables.

use crate::error::{Error, Result};

/// A non-negative table over a sorted set of discrete variables.
///
/// Values are stored row-major in mixed radix with the first variable most
/// significant. Keeping `vars` sorted gives every factor over the same
/// variables one canonical layout, which keeps the algebra simple.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    /// Ascending variable ids.
    pub vars: Vec<usize>,
    /// Cardinality of each variable, parallel to `vars`.
    pub cards: Vec<usize>,
    pub values: Vec<f64>,
}

impl Factor {
    pub fn new(vars: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if vars.len() != cards.len() {
            return Err(Error::DimensionMismatch {
                expected: vars.len(),
                actual: cards.len(),
            });
        }
        if vars.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "factor variables must be strictly ascending".into(),
            ));
        }
        if cards.iter().any(|&c| c == 0) {
            return Err(Error::InvalidParameter("factor cardinalities must be positive".into()));
        }
        let expected: usize = cards.iter().product();
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite("factor values".into()));
        }
        Ok(Factor { vars, cards, values })
    }

    /// A factor over no variables holding a single constant.
    pub fn constant(value: f64) -> Self {
        Factor {
            vars: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
        }
    }

    fn position(&self, var: usize) -> Option<usize> {
        self.vars.binary_search(&var).ok()
    }

    /// Flat index of one full assignment to this factor's variables.
    fn flat_index(&self, assignment: &[usize]) -> usize {
        let mut idx = 0;
        for (state, card) in assignment.iter().zip(&self.cards) {
            debug_assert!(state < card);
            idx = idx * card + state;
        }
        idx
    }

    /// Pointwise product; the result ranges over the union of variables.
    pub fn product(&self, other: &Factor) -> Result<Factor> {
        let mut vars = Vec::new();
        let mut cards = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.vars.len() || j < other.vars.len() {
            let take_self = j >= other.vars.len()
                || (i < self.vars.len() && self.vars[i] <= other.vars[j]);
            if take_self {
                if j < other.vars.len() && self.vars[i] == other.vars[j] {
                    if self.cards[i] != other.cards[j] {
                        return Err(Error::DimensionMismatch {
                            expected: self.cards[i],
                            actual: other.cards[j],
                        });
                    }
                    j += 1;
                }
                vars.push(self.vars[i]);
                cards.push(self.cards[i]);
                i += 1;
            } else {
                vars.push(other.vars[j]);
                cards.push(other.cards[j]);
                j += 1;
            }
        }

        let total: usize = cards.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut assignment = vec![0usize; vars.len()];
        let self_pos: Vec<usize> = self.vars.iter().map(|v| vars.binary_search(v).expect("subset")).collect();
        let other_pos: Vec<usize> = other.vars.iter().map(|v| vars.binary_search(v).expect("subset")).collect();
        let mut self_assignment = vec![0usize; self.vars.len()];
        let mut other_assignment = vec![0usize; other.vars.len()];
        for _ in 0..total {
            for (k, &p) in self_pos.iter().enumerate() {
                self_assignment[k] = assignment[p];
            }
            for (k, &p) in other_pos.iter().enumerate() {
                other_assignment[k] = assignment[p];
            }
            values.push(
                self.values[self.flat_index(&self_assignment)]
                    * other.values[other.flat_index(&other_assignment)],
            );
            // Mixed-radix odometer, least significant variable last.
            for d in (0..vars.len()).rev() {
                assignment[d] += 1;
                if assignment[d] < cards[d] {
                    break;
                }
                assignment[d] = 0;
            }
        }
        Factor::new(vars, cards, values)
    }

    /// Fixes `var = state`, dropping the variable from the factor.
    pub fn reduce(&self, var: usize, state: usize) -> Result<Factor> {
        let Some(pos) = self.position(var) else {
            return Err(Error::UnknownNode(format!("variable {var} not in factor")));
        };
        if state >= self.cards[pos] {
            return Err(Error::InvalidParameter(format!(
                "state {state} out of range for variable {var} with {} states",
                self.cards[pos]
            )));
        }
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        let total: usize = cards.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut kept = vec![0usize; vars.len()];
        let mut full = vec![0usize; self.vars.len()];
        for _ in 0..total.max(1) {
            for (d, &s) in kept.iter().enumerate() {
                full[if d < pos { d } else { d + 1 }] = s;
            }
            full[pos] = state;
            values.push(self.values[self.flat_index(&full)]);
            for d in (0..kept.len()).rev() {
                kept[d] += 1;
                if kept[d] < cards[d] {
                    break;
                }
                kept[d] = 0;
            }
        }
        Factor::new(vars, cards, values)
    }

    /// Sums `var` out of the factor.
    pub fn marginalize(&self, var: usize) -> Result<Factor> {
        let Some(pos) = self.position(var) else {
            return Err(Error::UnknownNode(format!("variable {var} not in factor")));
        };
        let mut result = self.reduce(var, 0)?;
        for state in 1..self.cards[pos] {
            let slice = self.reduce(var, state)?;
            for (acc, v) in result.values.iter_mut().zip(&slice.values) {
                *acc += v;
            }
        }
        Ok(result)
    }

    /// Scales the factor to sum to one; errors when the mass is zero.
    pub fn normalize(&mut self) -> Result<()> {
        let total: f64 = self.values.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroProbabilityEvidence(
                "factor has zero total mass".into(),
            ));
        }
        for v in &mut self.values {
            *v /= total;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f_ab() -> Factor {
        // vars 0 (card 2), 1 (card 3)
        Factor::new(vec![0, 1], vec![2, 3], vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap()
    }

    fn f_bc() -> Factor {
        // vars 1 (card 3), 2 (card 2)
        Factor::new(vec![1, 2], vec![3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap()
    }

    #[test]
    fn test_product_matches_hand_enumeration() {
        let p = f_ab().product(&f_bc()).unwrap();
        assert_eq!(p.vars, vec![0, 1, 2]);
        assert_eq!(p.cards, vec![2, 3, 2]);
        // value(a,b,c) = f_ab(a,b) * f_bc(b,c); check a few entries by hand.
        // index = (a*3 + b)*2 + c
        assert_eq!(p.values[0], 0.1 * 1.0); // a0 b0 c0
        assert_eq!(p.values[1], 0.1 * 2.0); // a0 b0 c1
        assert_eq!(p.values[(1 * 3 + 2) * 2 + 1], 0.6 * 6.0); // a1 b2 c1
        assert_eq!(p.values.len(), 12);
    }

    #[test]
    fn test_product_is_commutative() {
        let ab = f_ab().product(&f_bc()).unwrap();
        let ba = f_bc().product(&f_ab()).unwrap();
        assert_eq!(ab, ba);
    }

    #[test]
    fn test_product_with_constant_scales() {
        let c = Factor::constant(2.0);
        let p = f_ab().product(&c).unwrap();
        assert_eq!(p.vars, f_ab().vars);
        for (res, orig) in p.values.iter().zip(&f_ab().values) {
            assert_eq!(*res, orig * 2.0);
        }
    }

    #[test]
    fn test_reduce_selects_the_slice() {
        let r = f_ab().reduce(1, 2).unwrap();
        assert_eq!(r.vars, vec![0]);
        assert_eq!(r.values, vec![0.3, 0.6]);
        let r0 = f_ab().reduce(0, 0).unwrap();
        assert_eq!(r0.values, vec![0.1, 0.2, 0.3]);
        assert!(f_ab().reduce(2, 0).is_err(), "variable not in factor");
        assert!(f_ab().reduce(1, 3).is_err(), "state out of range");
    }

    #[test]
    fn test_marginalize_sums_the_variable_out() {
        let m = f_ab().marginalize(0).unwrap();
        assert_eq!(m.vars, vec![1]);
        let expected = [0.1 + 0.4, 0.2 + 0.5, 0.3 + 0.6];
        for (v, e) in m.values.iter().zip(expected) {
            assert!((v - e).abs() < 1e-15);
        }
        // Marginalizing everything leaves the total mass as a constant.
        let total = f_ab().marginalize(0).unwrap().marginalize(1).unwrap();
        assert!(total.vars.is_empty());
        assert!((total.values[0] - 2.1).abs() < 1e-15);
    }

    #[test]
    fn test_marginalize_commutes_with_product_over_disjoint_var() {
        // sum_c (f_ab * f_bc) == f_ab * (sum_c f_bc)
        let lhs = f_ab().product(&f_bc()).unwrap().marginalize(2).unwrap();
        let rhs = f_ab().product(&f_bc().marginalize(2).unwrap()).unwrap();
        assert_eq!(lhs.vars, rhs.vars);
        for (a, b) in lhs.values.iter().zip(&rhs.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn test_normalize_and_zero_mass() {
        let mut f = f_ab();
        f.normalize().unwrap();
        assert!((f.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut zero = Factor::new(vec![0], vec![2], vec![0.0, 0.0]).unwrap();
        assert!(zero.normalize().is_err());
    }

    #[test]
    fn test_constructor_validation() {
        assert!(Factor::new(vec![1, 0], vec![2, 2], vec![0.0; 4]).is_err());
        assert!(Factor::new(vec![0, 0], vec![2, 2], vec![0.0; 4]).is_err());
        assert!(Factor::new(vec![0], vec![2], vec![0.0; 3]).is_err());
        assert!(Factor::new(vec![0], vec![2], vec![0.5, -0.5]).is_err());
        assert!(Factor::new(vec![0], vec![0], vec![]).is_err());
    }
}
