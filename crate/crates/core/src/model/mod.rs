//! MIP data model in `≥` normal form, local bound boxes, and solution checking.

mod mps;

pub use mps::{parse_mps, write_mps, MpsError};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable index {index} out of range (model has {n} variables)")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("duplicate variable {index} in row `{row}`")]
    DuplicateEntry { index: usize, row: String },
}

/// Original sense of a constraint before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowSense {
    Ge,
    Le,
    Eq,
}

/// A sparse linear form `Σ a_i x_i`, entries sorted by variable index, no zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow<T> {
    pub entries: Vec<(usize, T)>,
}

impl<T: Scalar> SparseRow<T> {
    /// Builds a row from unsorted entries, dropping exact zeros.
    pub fn new(mut entries: Vec<(usize, T)>) -> Self {
        entries.retain(|&(_, a)| a != T::zero());
        entries.sort_by_key(|&(i, _)| i);
        Self { entries }
    }

    pub fn from_dense(coefs: &[T]) -> Self {
        Self::new(coefs.iter().copied().enumerate().collect())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.entries.iter().copied()
    }

    pub fn coef(&self, var: usize) -> T {
        self.entries
            .binary_search_by_key(&var, |&(i, _)| i)
            .map(|k| self.entries[k].1)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn dot(&self, x: &[T]) -> T {
        self.entries.iter().map(|&(i, a)| a * x[i]).sum()
    }

    pub fn negated(&self) -> Self {
        Self {
            entries: self.entries.iter().map(|&(i, a)| (i, -a)).collect(),
        }
    }
}

/// A mixed-integer program `min cᵀx + offset  s.t. Ax ≥ b, ℓ ≤ x ≤ u, x_I integral`.
///
/// Every row is stored in `≥` form. Maximization objectives are negated on
/// construction; `maximize` remembers the original sense for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct MipModel<T> {
    pub name: String,
    pub objective: Vec<T>,
    pub objective_offset: T,
    pub maximize: bool,
    pub rows: Vec<SparseRow<T>>,
    pub lhs: Vec<T>,
    pub lb: Vec<T>,
    pub ub: Vec<T>,
    pub integer: Vec<bool>,
    pub var_names: Vec<String>,
    pub row_names: Vec<String>,
}

impl<T: Scalar> MipModel<T> {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            objective: Vec::new(),
            objective_offset: T::zero(),
            maximize: false,
            rows: Vec::new(),
            lhs: Vec::new(),
            lb: Vec::new(),
            ub: Vec::new(),
            integer: Vec::new(),
            var_names: Vec::new(),
            row_names: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds a variable with the given minimization objective coefficient.
    pub fn add_var(&mut self, name: impl Into<String>, lb: T, ub: T, integer: bool, obj: T) -> usize {
        self.objective.push(obj);
        self.lb.push(lb);
        self.ub.push(ub);
        self.integer.push(integer);
        self.var_names.push(name.into());
        self.objective.len() - 1
    }

    pub fn add_binary(&mut self, name: impl Into<String>, obj: T) -> usize {
        self.add_var(name, T::zero(), T::one(), true, obj)
    }

    /// Adds a constraint and returns the indices of the `≥` rows it became.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        entries: Vec<(usize, T)>,
        sense: RowSense,
        rhs: T,
    ) -> Result<Vec<usize>, ModelError> {
        let name = name.into();
        let mut seen = std::collections::HashSet::new();
        for &(i, _) in &entries {
            if i >= self.num_vars() {
                return Err(ModelError::IndexOutOfRange { index: i, n: self.num_vars() });
            }
            if !seen.insert(i) {
                return Err(ModelError::DuplicateEntry { index: i, row: name });
            }
        }
        let row = SparseRow::new(entries);
        Ok(match sense {
            RowSense::Ge => vec![self.push_row(name, row, rhs)],
            RowSense::Le => vec![self.push_row(name, row.negated(), -rhs)],
            RowSense::Eq => {
                let neg = row.negated();
                let lo = self.push_row(name.clone(), row, rhs);
                let hi = self.push_row(format!("{name}_le"), neg, -rhs);
                vec![lo, hi]
            }
        })
    }

    fn push_row(&mut self, name: String, row: SparseRow<T>, lhs: T) -> usize {
        self.rows.push(row);
        self.lhs.push(lhs);
        self.row_names.push(name);
        self.rows.len() - 1
    }

    /// `true` when some variable has crossing global bounds.
    pub fn has_crossing_bounds(&self) -> bool {
        self.lb.iter().zip(&self.ub).any(|(l, u)| l > u)
    }

    pub fn global_bounds(&self) -> LocalBounds<T> {
        LocalBounds {
            lb: self.lb.clone(),
            ub: self.ub.clone(),
        }
    }

    /// Objective value `cᵀx + offset` in minimization form.
    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum::<T>() + self.objective_offset
    }

    /// Converts an internal (minimization) objective value to the input's sense.
    pub fn external_objective(&self, value: T) -> T {
        if self.maximize {
            -value
        } else {
            value
        }
    }

    /// `true` when every objective coefficient is integral and sits on an integer variable.
    pub fn has_integral_objective(&self, tol: T) -> bool {
        self.objective
            .iter()
            .zip(&self.integer)
            .all(|(&c, &int)| c == T::zero() || (int && c.is_integral(tol)))
            && self.objective_offset.is_integral(tol)
    }

    /// Validates structural invariants (dimensions, sorted nonzero entries).
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.num_vars();
        for (len, what) in [
            (self.lb.len(), n),
            (self.ub.len(), n),
            (self.integer.len(), n),
            (self.var_names.len(), n),
        ] {
            if len != what {
                return Err(ModelError::DimensionMismatch { expected: what, got: len });
            }
        }
        let m = self.num_rows();
        for len in [self.lhs.len(), self.row_names.len()] {
            if len != m {
                return Err(ModelError::DimensionMismatch { expected: m, got: len });
            }
        }
        for (row, name) in self.rows.iter().zip(&self.row_names) {
            for w in row.entries.windows(2) {
                if w[0].0 >= w[1].0 {
                    return Err(ModelError::DuplicateEntry { index: w[1].0, row: name.clone() });
                }
            }
            if let Some(&(i, _)) = row.entries.iter().find(|&&(i, _)| i >= n) {
                return Err(ModelError::IndexOutOfRange { index: i, n });
            }
        }
        Ok(())
    }

    /// Checks a point against rows, bounds and integrality.
    pub fn check_solution(
        &self,
        point: &Assignment<T>,
        tol: T,
    ) -> Result<FeasibilityReport<T>, ModelError> {
        let x = &point.values;
        if x.len() != self.num_vars() {
            return Err(ModelError::DimensionMismatch {
                expected: self.num_vars(),
                got: x.len(),
            });
        }
        let row_violations = self
            .rows
            .iter()
            .zip(&self.lhs)
            .enumerate()
            .filter_map(|(r, (row, &b))| {
                let slack = row.dot(x) - b;
                (slack < -tol).then_some((r, slack))
            })
            .collect();
        let bound_violations = (0..x.len())
            .filter_map(|i| {
                if x[i] < self.lb[i] - tol {
                    Some((i, x[i] - self.lb[i]))
                } else if x[i] > self.ub[i] + tol {
                    Some((i, x[i] - self.ub[i]))
                } else {
                    None
                }
            })
            .collect();
        let integrality_violations = (0..x.len())
            .filter(|&i| self.integer[i] && !x[i].is_integral(tol))
            .collect();
        Ok(FeasibilityReport {
            row_violations,
            bound_violations,
            integrality_violations,
            objective: self.objective_value(x),
        })
    }
}

/// Per-node variable bounds `ℓ ≤ ℓ′ ≤ u′ ≤ u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBounds<T> {
    pub lb: Vec<T>,
    pub ub: Vec<T>,
}

impl<T: Scalar> LocalBounds<T> {
    pub fn new(lb: Vec<T>, ub: Vec<T>) -> Self {
        assert_eq!(lb.len(), ub.len(), "bound vectors differ in length");
        Self { lb, ub }
    }

    pub fn len(&self) -> usize {
        self.lb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lb.is_empty()
    }

    /// `true` if these bounds only tighten `global`.
    pub fn tightens(&self, global: &LocalBounds<T>) -> bool {
        self.len() == global.len()
            && (0..self.len()).all(|i| self.lb[i] >= global.lb[i] && self.ub[i] <= global.ub[i])
    }

    pub fn is_empty_box(&self) -> bool {
        self.lb.iter().zip(&self.ub).any(|(l, u)| l > u)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment<T> {
    pub values: Vec<T>,
}

impl<T> Assignment<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport<T> {
    /// `(row, activity − lhs)` for every violated row.
    pub row_violations: Vec<(usize, T)>,
    /// `(variable, signed distance to the violated bound)`.
    pub bound_violations: Vec<(usize, T)>,
    pub integrality_violations: Vec<usize>,
    /// `cᵀx + offset` in minimization form.
    pub objective: T,
}

impl<T> FeasibilityReport<T> {
    pub fn is_feasible(&self) -> bool {
        self.row_violations.is_empty()
            && self.bound_violations.is_empty()
            && self.integrality_violations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_binaries() -> MipModel<f64> {
        let mut m = MipModel::new("t");
        let x = m.add_binary("x", 1.0);
        let y = m.add_binary("y", 2.0);
        m.add_row("c1", vec![(x, 1.0), (y, 1.0)], RowSense::Ge, 2.0).unwrap();
        m
    }

    #[test]
    fn feasible_point() {
        let m = two_binaries();
        let rep = m.check_solution(&Assignment::new(vec![1.0, 1.0]), 1e-6).unwrap();
        assert!(rep.is_feasible());
        assert_eq!(rep.objective, 3.0);
    }

    #[test]
    fn fractional_point_violates_integrality() {
        let m = two_binaries();
        let rep = m.check_solution(&Assignment::new(vec![0.5, 1.0]), 1e-6).unwrap();
        assert_eq!(rep.integrality_violations, vec![0]);
        assert_eq!(rep.row_violations, vec![(0, -0.5)]);
    }

    #[test]
    fn origin_violates_row_by_two() {
        let m = two_binaries();
        let rep = m.check_solution(&Assignment::new(vec![0.0, 0.0]), 1e-6).unwrap();
        assert_eq!(rep.row_violations, vec![(0, -2.0)]);
        assert!(!rep.is_feasible());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = two_binaries();
        assert!(matches!(
            m.check_solution(&Assignment::new(vec![1.0]), 1e-6),
            Err(ModelError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn equality_rows_split() {
        let mut m = MipModel::<f64>::new("e");
        let x = m.add_binary("x", 0.0);
        let y = m.add_binary("y", 0.0);
        let rows = m.add_row("e", vec![(x, 1.0), (y, 1.0)], RowSense::Eq, 1.0).unwrap();
        assert_eq!(rows, vec![0, 1]);
        assert_eq!(m.rows[1].entries, vec![(0, -1.0), (1, -1.0)]);
        assert_eq!(m.lhs, vec![1.0, -1.0]);
    }

    #[test]
    fn zero_coefficients_dropped() {
        let row = SparseRow::new(vec![(3, 1.0), (1, 0.0), (0, -2.0)]);
        assert_eq!(row.entries, vec![(0, -2.0), (3, 1.0)]);
        assert_eq!(row.coef(3), 1.0);
        assert_eq!(row.coef(1), 0.0);
    }

    #[test]
    fn crossing_bounds_flagged() {
        let mut m = MipModel::<f64>::new("x");
        m.add_var("x", 2.0, 1.0, false, 0.0);
        assert!(m.has_crossing_bounds());
    }
}
