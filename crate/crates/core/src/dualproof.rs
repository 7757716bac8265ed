//! Proof constraints from Farkas rays, and the local-bound relaxation that
//! turns a ray into a short initial reason for conflict analysis.

use thiserror::Error;

use crate::confgraph::InitialReason;
use crate::lp::{aggregate, FarkasRay, LinearRow};
use crate::model::{LocalBounds, MipModel, SparseRow};
use crate::propagate::{maximal_activity, BoundDir, BoundJournal, Literal};
use crate::scalar::{Scalar, Tolerances};

/// The aggregated row `γᵀA x ≥ γᵀb`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofConstraint<T> {
    pub id: u64,
    pub row: SparseRow<T>,
    pub lhs: T,
    /// Whether the objective cutoff row carried a positive multiplier.
    pub includes_cutoff: bool,
    /// Incumbent objective in force when the cutoff row was aggregated.
    pub stamp: Option<T>,
    pub age: u32,
}

impl<T: Scalar> ProofConstraint<T> {
    /// An empty row with positive left-hand side: `0 ≥ β > 0`.
    pub fn is_global_contradiction(&self, tol: T) -> bool {
        self.row.is_empty() && self.lhs > tol
    }

    pub fn is_satisfied_by(&self, x: &[T], tol: T) -> bool {
        self.row.dot(x) >= self.lhs - tol
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProofError {
    #[error("proof constraint is not violated by its local bounds: max activity {max_activity} ≥ lhs {lhs}")]
    NotLocallyViolated { max_activity: f64, lhs: f64 },
}

/// Where the objective cutoff sits among the extra rows, and the incumbent value behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffInfo<T> {
    pub extra_index: usize,
    pub incumbent: T,
}

/// Aggregates the rows with the ray's multipliers.
pub fn build_proof_constraint<T: Scalar>(
    ray: &FarkasRay<T>,
    model: &MipModel<T>,
    extra_rows: &[LinearRow<T>],
    local: &LocalBounds<T>,
    cutoff: Option<CutoffInfo<T>>,
    tol: &Tolerances<T>,
) -> Result<ProofConstraint<T>, ProofError> {
    let agg = aggregate(&ray.gamma, model, extra_rows);
    let row = SparseRow::new(
        agg.into_iter()
            .enumerate()
            .filter(|&(_, a)| a.abs() >= tol.zero)
            .collect(),
    );
    let lhs: T = ray
        .gamma
        .iter()
        .zip(model.lhs.iter().chain(extra_rows.iter().map(|e| &e.lhs)))
        .map(|(&g, &b)| g * b)
        .sum();
    let (includes_cutoff, stamp) = match cutoff {
        Some(c) if ray.gamma[model.num_rows() + c.extra_index] > tol.zero => (true, Some(c.incumbent)),
        _ => (false, None),
    };
    let max_activity = maximal_activity(&row, &local.lb, &local.ub);
    if !(max_activity < lhs - tol.zero) {
        return Err(ProofError::NotLocallyViolated {
            max_activity: max_activity.as_f64(),
            lhs: lhs.as_f64(),
        });
    }
    Ok(ProofConstraint { id: 0, row, lhs, includes_cutoff, stamp, age: 0 })
}

/// Result of relaxing local bounds while keeping the ray's margin positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation<T> {
    pub relaxed: LocalBounds<T>,
    /// Bounds that could not be relaxed to their global value, at their relaxed value.
    pub kept: Vec<Literal<T>>,
    /// Local bounds with a nonzero reduced multiplier before relaxing.
    pub candidates: usize,
    /// Remaining `γᵀb + r̲ᵀℓ″ + r̄ᵀu″`.
    pub margin: T,
}

/// Greedily resets local bounds to global ones, cheapest slack consumption
/// first, while `γᵀb + r̲ᵀℓ″ + r̄ᵀu″` stays above `tol.zero`. Bounds that
/// cannot be reset are then loosened partially with what margin remains.
pub fn relax_local_bounds<T: Scalar>(
    ray: &FarkasRay<T>,
    model: &MipModel<T>,
    extra_rows: &[LinearRow<T>],
    local: &LocalBounds<T>,
    global: &LocalBounds<T>,
    tol: &Tolerances<T>,
) -> Relaxation<T> {
    let zero = T::zero();
    let mut relaxed = local.clone();
    let mut margin = ray.margin(model, extra_rows, local);

    // (var, dir, |r|, slack consumption)
    let mut cands: Vec<(usize, BoundDir, T, T)> = Vec::new();
    for i in 0..local.len() {
        if ray.rlow[i] > zero && local.lb[i] > global.lb[i] {
            cands.push((i, BoundDir::Lower, ray.rlow[i], ray.rlow[i] * (local.lb[i] - global.lb[i])));
        }
        if ray.rupp[i] < zero && local.ub[i] < global.ub[i] {
            cands.push((i, BoundDir::Upper, -ray.rupp[i], -ray.rupp[i] * (global.ub[i] - local.ub[i])));
        }
    }
    cands.sort_by(|a, b| a.3.partial_cmp(&b.3).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));

    let mut kept = Vec::new();
    for &(i, dir, weight, cost) in &cands {
        if margin - cost > tol.zero {
            margin = margin - cost;
            match dir {
                BoundDir::Lower => relaxed.lb[i] = global.lb[i],
                BoundDir::Upper => relaxed.ub[i] = global.ub[i],
            }
        } else {
            kept.push((i, dir, weight));
        }
    }
    let two = T::lit(2.0);
    let kept = kept
        .into_iter()
        .map(|(i, dir, weight)| {
            let spare = margin - two * tol.zero;
            if spare > zero {
                let step = spare / weight;
                margin = margin - weight * step;
                match dir {
                    BoundDir::Lower => relaxed.lb[i] = relaxed.lb[i] - step,
                    BoundDir::Upper => relaxed.ub[i] = relaxed.ub[i] + step,
                }
            }
            let value = match dir {
                BoundDir::Lower => relaxed.lb[i],
                BoundDir::Upper => relaxed.ub[i],
            };
            Literal::new(i, dir, value)
        })
        .collect();
    Relaxation { relaxed, kept, candidates: cands.len(), margin }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReasonError {
    #[error("no journal entry reaches bound {dir:?} {value} on variable {var}")]
    NotInJournal { var: usize, dir: BoundDir, value: String },
}

/// Maps each surviving bound to the earliest journal change achieving it.
pub fn initial_reason<T: Scalar>(kept: &[Literal<T>], journal: &BoundJournal<T>) -> Result<InitialReason, ReasonError> {
    let mut positions = Vec::with_capacity(kept.len());
    for lit in kept {
        match journal.earliest_achieving(lit.var, lit.dir, lit.value) {
            Some(p) => positions.push(p),
            None => {
                return Err(ReasonError::NotInJournal {
                    var: lit.var,
                    dir: lit.dir,
                    value: lit.value.to_string(),
                })
            }
        }
    }
    positions.sort_unstable();
    positions.dedup();
    Ok(InitialReason { positions })
}
