//! Conflict analysis over the implication graph stored in a [`BoundJournal`].
//!
//! Vertices are journal positions; the antecedents of a position are its
//! in-edges. Branching changes are the sources. The initial reason is the set
//! of positions connected to the infeasibility sink. A cut is found by
//! resolving positions backwards until the scheme's stopping rule holds, and
//! the negation of the bound changes on the cut becomes a conflict constraint.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::propagate::{BoundChange, BoundDir, BoundJournal, Literal, Reason};
use crate::scalar::Scalar;

/// Where a conflict constraint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConflictOrigin {
    Propagation,
    Lp,
    ProofWrapper,
}

/// A bound disjunction: at least one literal must hold in every feasible
/// (and, if stamped, improving) solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictConstraint<T> {
    pub id: u64,
    pub literals: Vec<Literal<T>>,
    pub origin: ConflictOrigin,
    pub age: u32,
    /// Incumbent objective the derivation depended on; the constraint is only
    /// valid for solutions that beat this incumbent.
    pub stamp: Option<T>,
}

impl<T: Scalar> ConflictConstraint<T> {
    pub fn is_satisfied_by(&self, x: &[T], tol: T) -> bool {
        self.literals.iter().any(|l| l.holds_at(x, tol))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InitialReason {
    pub positions: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutScheme {
    /// First unique implication point at the deepest level.
    #[default]
    FirstUip,
    /// Resolve down to branching decisions only.
    AllDecisions,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("reason references journal position {0}, journal has {1} entries")]
    UnknownPosition(usize, usize),
    #[error("branching vertex {0} cannot be resolved")]
    ResolvedBranching(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisOutcome<T> {
    /// The reason only involves global information: no (improving) solution exists.
    GloballyInfeasible { stamp: Option<T> },
    /// The cut was found but has more literals than allowed.
    TooLong { literals: usize },
    Conflict(ConflictConstraint<T>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions<T> {
    pub scheme: CutScheme,
    pub max_literals: usize,
    /// Stamp inherited from tightened global bounds, if any.
    pub global_stamp: Option<T>,
    pub origin: ConflictOrigin,
}

pub(crate) fn min_stamp<T: Scalar>(a: Option<T>, b: Option<T>) -> Option<T> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Stamp of a position including everything it was derived from.
fn cumulative_stamp<T: Scalar>(journal: &BoundJournal<T>, pos: usize, memo: &mut HashMap<usize, Option<T>>) -> Option<T> {
    if let Some(s) = memo.get(&pos) {
        return *s;
    }
    let e = journal.entry(pos);
    let mut s = e.stamp;
    for &a in &e.antecedents {
        s = min_stamp(s, cumulative_stamp(journal, a, memo));
    }
    memo.insert(pos, s);
    s
}

/// Literal that excludes the bound change: `x ≤ v` becomes `x ≥ v + 1` for
/// integers and `x ≥ v` otherwise.
pub fn negate_change<T: Scalar>(change: &BoundChange<T>, integer: bool) -> Literal<T> {
    let v = change.value;
    match change.dir {
        BoundDir::Upper => {
            let value = if integer { v.floor() + T::one() } else { v };
            Literal::new(change.var, BoundDir::Lower, value)
        }
        BoundDir::Lower => {
            let value = if integer { v.ceil() - T::one() } else { v };
            Literal::new(change.var, BoundDir::Upper, value)
        }
    }
}

/// Derives one conflict constraint from an infeasibility with the given reason.
///
/// `sink_stamp` is the stamp of the constraint (or proof) that detected the
/// infeasibility. The returned constraint has `id` 0; callers assign ids.
pub fn analyze_conflict<T: Scalar>(
    journal: &BoundJournal<T>,
    reason: &InitialReason,
    sink_stamp: Option<T>,
    integer: &[bool],
    opts: &AnalysisOptions<T>,
) -> Result<AnalysisOutcome<T>, AnalysisError> {
    let mut memo = HashMap::new();
    let mut stamp = min_stamp(sink_stamp, opts.global_stamp);
    let mut set: BTreeSet<usize> = BTreeSet::new();

    let admit = |pos: usize, set: &mut BTreeSet<usize>, stamp: &mut Option<T>, memo: &mut HashMap<usize, Option<T>>| {
        if journal.entry(pos).depth == 0 {
            *stamp = min_stamp(*stamp, cumulative_stamp(journal, pos, memo));
        } else {
            set.insert(pos);
        }
    };

    for &p in &reason.positions {
        if p >= journal.len() {
            return Err(AnalysisError::UnknownPosition(p, journal.len()));
        }
        admit(p, &mut set, &mut stamp, &mut memo);
    }

    loop {
        if set.is_empty() {
            break;
        }
        let pick = match opts.scheme {
            CutScheme::FirstUip => {
                let depth = set.iter().map(|&p| journal.entry(p).depth).max().unwrap();
                let at_depth = set.iter().filter(|&&p| journal.entry(p).depth == depth).count();
                if at_depth <= 1 {
                    None
                } else {
                    // the newest change at the deepest level is never its branching
                    set.iter().rev().copied().find(|&p| journal.entry(p).depth == depth)
                }
            }
            CutScheme::AllDecisions => set
                .iter()
                .rev()
                .copied()
                .find(|&p| journal.entry(p).reason != Reason::Branching),
        };
        let Some(p) = pick else { break };
        let e = journal.entry(p);
        if e.reason == Reason::Branching {
            return Err(AnalysisError::ResolvedBranching(p));
        }
        set.remove(&p);
        stamp = min_stamp(stamp, e.stamp);
        for &a in &e.antecedents {
            admit(a, &mut set, &mut stamp, &mut memo);
        }
    }

    if set.is_empty() {
        return Ok(AnalysisOutcome::GloballyInfeasible { stamp });
    }

    // keep the tightest change per (variable, direction)
    let mut tightest: HashMap<(usize, BoundDir), usize> = HashMap::new();
    for &p in &set {
        let e = journal.entry(p);
        tightest
            .entry((e.var, e.dir))
            .and_modify(|q| {
                let cur = journal.entry(*q).value;
                let tighter = match e.dir {
                    BoundDir::Lower => e.value > cur,
                    BoundDir::Upper => e.value < cur,
                };
                if tighter {
                    *q = p;
                }
            })
            .or_insert(p);
    }
    let mut chosen: Vec<usize> = tightest.into_values().collect();
    chosen.sort_unstable();
    if chosen.len() > opts.max_literals {
        return Ok(AnalysisOutcome::TooLong { literals: chosen.len() });
    }
    let literals = chosen
        .iter()
        .map(|&p| {
            let e = journal.entry(p);
            negate_change(e, integer[e.var])
        })
        .collect();
    Ok(AnalysisOutcome::Conflict(ConflictConstraint {
        id: 0,
        literals,
        origin: opts.origin,
        age: 0,
        stamp,
    }))
}

/// Positions whose conjunction the emitted conflict forbids, for tests and audits.
pub fn cut_positions<T: Scalar>(journal: &BoundJournal<T>, conflict: &ConflictConstraint<T>, integer: &[bool]) -> Vec<usize> {
    conflict
        .literals
        .iter()
        .filter_map(|lit| {
            journal.entries().iter().position(|e| negate_change(e, integer[e.var]) == *lit && e.depth > 0)
        })
        .collect()
}
