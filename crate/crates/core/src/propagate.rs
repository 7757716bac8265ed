//! Activity-based bound tightening for linear rows, unit propagation for bound
//! disjunctions, and the bound journal both of them write into.

use std::collections::VecDeque;

use crate::lp::times_bound;
use crate::model::{LocalBounds, SparseRow};
use crate::scalar::{Scalar, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundDir {
    Lower,
    Upper,
}

impl BoundDir {
    pub fn flip(self) -> Self {
        match self {
            Self::Lower => Self::Upper,
            Self::Upper => Self::Lower,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// Identifies the constraint behind a deduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintRef {
    Row(usize),
    Conflict(u64),
    Proof(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    Branching,
    Constraint(ConstraintRef),
}

/// One bound literal `x_var ≥ value` (lower) or `x_var ≤ value` (upper).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Literal<T> {
    pub var: usize,
    pub dir: BoundDir,
    pub value: T,
}

impl<T: Scalar> Literal<T> {
    pub fn new(var: usize, dir: BoundDir, value: T) -> Self {
        Self { var, dir, value }
    }

    /// `true` if the point satisfies the literal within `tol`.
    pub fn holds_at(&self, x: &[T], tol: T) -> bool {
        match self.dir {
            BoundDir::Lower => x[self.var] >= self.value - tol,
            BoundDir::Upper => x[self.var] <= self.value + tol,
        }
    }

    /// `true` if no point of the box satisfies the literal.
    pub fn falsified_by(&self, lb: &[T], ub: &[T], tol: T) -> bool {
        match self.dir {
            BoundDir::Lower => ub[self.var] < self.value - tol,
            BoundDir::Upper => lb[self.var] > self.value + tol,
        }
    }

    /// `true` if every point of the box satisfies the literal.
    pub fn entailed_by(&self, lb: &[T], ub: &[T], tol: T) -> bool {
        match self.dir {
            BoundDir::Lower => lb[self.var] >= self.value - tol,
            BoundDir::Upper => ub[self.var] <= self.value + tol,
        }
    }
}

/// A journaled bound tightening.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundChange<T> {
    pub var: usize,
    pub dir: BoundDir,
    pub value: T,
    pub old_value: T,
    pub depth: usize,
    pub reason: Reason,
    pub position: usize,
    /// Journal positions of the bounds the deduction relied on.
    pub antecedents: Vec<usize>,
    /// Incumbent stamp of the reason constraint, if it depends on a cutoff.
    pub stamp: Option<T>,
    prev_same: Option<usize>,
}

impl<T: Scalar> BoundChange<T> {
    /// The change read as a literal that holds after it.
    pub fn literal(&self) -> Literal<T> {
        Literal::new(self.var, self.dir, self.value)
    }
}

/// Ordered record of bound changes on top of a base box.
#[derive(Debug, Clone)]
pub struct BoundJournal<T> {
    base_lb: Vec<T>,
    base_ub: Vec<T>,
    lb: Vec<T>,
    ub: Vec<T>,
    entries: Vec<BoundChange<T>>,
    last: Vec<[Option<usize>; 2]>,
    depth: usize,
}

impl<T: Scalar> BoundJournal<T> {
    pub fn new(global: &LocalBounds<T>) -> Self {
        Self {
            base_lb: global.lb.clone(),
            base_ub: global.ub.clone(),
            lb: global.lb.clone(),
            ub: global.ub.clone(),
            entries: Vec::new(),
            last: vec![[None; 2]; global.len()],
            depth: 0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.lb.len()
    }

    pub fn lb(&self) -> &[T] {
        &self.lb
    }

    pub fn ub(&self) -> &[T] {
        &self.ub
    }

    pub fn bound(&self, var: usize, dir: BoundDir) -> T {
        match dir {
            BoundDir::Lower => self.lb[var],
            BoundDir::Upper => self.ub[var],
        }
    }

    pub fn base_bound(&self, var: usize, dir: BoundDir) -> T {
        match dir {
            BoundDir::Lower => self.base_lb[var],
            BoundDir::Upper => self.base_ub[var],
        }
    }

    pub fn local_bounds(&self) -> LocalBounds<T> {
        LocalBounds::new(self.lb.clone(), self.ub.clone())
    }

    pub fn base_bounds(&self) -> LocalBounds<T> {
        LocalBounds::new(self.base_lb.clone(), self.base_ub.clone())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn entries(&self) -> &[BoundChange<T>] {
        &self.entries
    }

    pub fn entry(&self, pos: usize) -> &BoundChange<T> {
        &self.entries[pos]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Opens a new decision level.
    pub fn push_level(&mut self) -> usize {
        self.depth += 1;
        self.depth
    }

    /// Latest change of the given bound, `None` if it still has its base value.
    pub fn last_change(&self, var: usize, dir: BoundDir) -> Option<usize> {
        self.last[var][dir.slot()]
    }

    /// Earliest change of the bound that is at least as tight as `value`.
    pub fn earliest_achieving(&self, var: usize, dir: BoundDir, value: T) -> Option<usize> {
        let tighter = |v: T| match dir {
            BoundDir::Lower => v >= value,
            BoundDir::Upper => v <= value,
        };
        let mut found = None;
        let mut cur = self.last[var][dir.slot()];
        while let Some(p) = cur {
            if !tighter(self.entries[p].value) {
                break;
            }
            found = Some(p);
            cur = self.entries[p].prev_same;
        }
        found
    }

    /// Earliest change after which the literal is falsified.
    pub fn earliest_falsifying(&self, lit: &Literal<T>, tol: T) -> Option<usize> {
        let dir = lit.dir.flip();
        let falsifies = |v: T| match lit.dir {
            BoundDir::Lower => v < lit.value - tol,
            BoundDir::Upper => v > lit.value + tol,
        };
        let mut found = None;
        let mut cur = self.last[lit.var][dir.slot()];
        while let Some(p) = cur {
            if !falsifies(self.entries[p].value) {
                break;
            }
            found = Some(p);
            cur = self.entries[p].prev_same;
        }
        found
    }

    /// Records a tightening; returns its position, or `None` if it does not tighten.
    pub fn apply(
        &mut self,
        var: usize,
        dir: BoundDir,
        value: T,
        reason: Reason,
        antecedents: Vec<usize>,
        stamp: Option<T>,
    ) -> Option<usize> {
        let old_value = self.bound(var, dir);
        let tightens = match dir {
            BoundDir::Lower => value > old_value,
            BoundDir::Upper => value < old_value,
        };
        if !tightens {
            return None;
        }
        let position = self.entries.len();
        let prev_same = self.last[var][dir.slot()];
        self.entries.push(BoundChange {
            var,
            dir,
            value,
            old_value,
            depth: self.depth,
            reason,
            position,
            antecedents,
            stamp,
            prev_same,
        });
        self.last[var][dir.slot()] = Some(position);
        match dir {
            BoundDir::Lower => self.lb[var] = value,
            BoundDir::Upper => self.ub[var] = value,
        }
        Some(position)
    }

    /// Undoes every change made above `depth`.
    pub fn backtrack_to(&mut self, depth: usize) {
        while let Some(e) = self.entries.last() {
            if e.depth <= depth {
                break;
            }
            let e = self.entries.pop().unwrap();
            match e.dir {
                BoundDir::Lower => self.lb[e.var] = e.old_value,
                BoundDir::Upper => self.ub[e.var] = e.old_value,
            }
            self.last[e.var][e.dir.slot()] = e.prev_same;
        }
        self.depth = self.depth.min(depth);
    }

    /// Replays the journal from `global`; equals the current bounds when
    /// `global` is the base box.
    pub fn replay(&self, global: &LocalBounds<T>) -> LocalBounds<T> {
        let mut out = global.clone();
        for e in &self.entries {
            match e.dir {
                BoundDir::Lower => out.lb[e.var] = e.value,
                BoundDir::Upper => out.ub[e.var] = e.value,
            }
        }
        out
    }

    fn antecedent_for(&self, var: usize, dir: BoundDir) -> Option<usize> {
        self.last[var][dir.slot()]
    }
}

/// `Σ_{a_i>0} a_i u′_i + Σ_{a_i<0} a_i ℓ′_i`, `+∞` if a contributing bound is infinite.
pub fn maximal_activity<T: Scalar>(row: &SparseRow<T>, lb: &[T], ub: &[T]) -> T {
    row.iter().map(|(i, a)| contribution(a, lb[i], ub[i])).sum()
}

/// Maximal activity of the row without variable `var`.
///
/// Panics if `var` has no coefficient in the row.
pub fn activity_residual<T: Scalar>(row: &SparseRow<T>, lb: &[T], ub: &[T], var: usize) -> T {
    assert!(row.coef(var) != T::zero(), "variable {var} has zero coefficient in row");
    row.iter()
        .filter(|&(i, _)| i != var)
        .map(|(i, a)| contribution(a, lb[i], ub[i]))
        .sum()
}

#[inline]
pub fn contribution<T: Scalar>(a: T, lb: T, ub: T) -> T {
    if a > T::zero() {
        times_bound(a, ub)
    } else {
        times_bound(a, lb)
    }
}

/// Infeasibility detected by a propagator: the constraint and the bound
/// changes whose conjunction violates it.
#[derive(Debug, Clone, PartialEq)]
pub struct Infeasibility<T> {
    pub constraint: ConstraintRef,
    pub antecedents: Vec<usize>,
    pub stamp: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropagationOutcome<T> {
    /// Number of bound changes applied.
    Deductions(usize),
    Infeasible(Infeasibility<T>),
    NoOp,
}

impl<T> PropagationOutcome<T> {
    pub fn deduced(&self) -> bool {
        matches!(self, Self::Deductions(_))
    }
}

/// Bound tightening on `a·x ≥ lhs`.
pub fn propagate_row<T: Scalar>(
    row: &SparseRow<T>,
    lhs: T,
    id: ConstraintRef,
    stamp: Option<T>,
    integer: &[bool],
    journal: &mut BoundJournal<T>,
    tol: &Tolerances<T>,
) -> PropagationOutcome<T> {
    let zero = T::zero();
    let mut finite = zero;
    let mut infinite = 0usize;
    let mut inf_var = usize::MAX;
    for (i, a) in row.iter() {
        let c = contribution(a, journal.lb[i], journal.ub[i]);
        if c.is_infinite() {
            infinite += 1;
            inf_var = i;
        } else {
            finite = finite + c;
        }
    }
    let support = |journal: &BoundJournal<T>, skip: usize| -> Vec<usize> {
        row.iter()
            .filter(|&(j, _)| j != skip)
            .filter_map(|(j, a)| {
                let dir = if a > zero { BoundDir::Upper } else { BoundDir::Lower };
                journal.antecedent_for(j, dir)
            })
            .collect()
    };
    if infinite == 0 && finite < lhs - tol.feasibility {
        return PropagationOutcome::Infeasible(Infeasibility {
            constraint: id,
            antecedents: support(journal, usize::MAX),
            stamp,
        });
    }
    if infinite > 1 {
        return PropagationOutcome::NoOp;
    }
    let reason = Reason::Constraint(id);
    let mut applied = 0;
    for (i, a) in row.iter() {
        let residual = if infinite == 1 {
            if i != inf_var {
                continue;
            }
            finite
        } else {
            finite - contribution(a, journal.lb[i], journal.ub[i])
        };
        let mut bound = (lhs - residual) / a;
        let dir = if a > zero { BoundDir::Lower } else { BoundDir::Upper };
        if integer[i] {
            bound = match dir {
                BoundDir::Lower => (bound - tol.integrality).ceil(),
                BoundDir::Upper => (bound + tol.integrality).floor(),
            };
        }
        let (cur, opposite) = match dir {
            BoundDir::Lower => (journal.lb[i], journal.ub[i]),
            BoundDir::Upper => (journal.ub[i], journal.lb[i]),
        };
        let gain = match dir {
            BoundDir::Lower => bound - cur,
            BoundDir::Upper => cur - bound,
        };
        if !(gain > tol.deduction) {
            continue;
        }
        let crosses = match dir {
            BoundDir::Lower => bound > opposite,
            BoundDir::Upper => bound < opposite,
        };
        if crosses {
            let overshoot = (bound - opposite).abs();
            if integer[i] || overshoot > tol.feasibility {
                let mut antecedents = support(journal, i);
                antecedents.extend(journal.antecedent_for(i, dir.flip()));
                return PropagationOutcome::Infeasible(Infeasibility { constraint: id, antecedents, stamp });
            }
            bound = opposite;
        }
        let antecedents = support(journal, i);
        if journal.apply(i, dir, bound, reason, antecedents, stamp).is_some() {
            applied += 1;
        }
    }
    if applied > 0 {
        PropagationOutcome::Deductions(applied)
    } else {
        PropagationOutcome::NoOp
    }
}

/// Unit propagation of the disjunction `lit₁ ∨ … ∨ lit_k`.
pub fn propagate_disjunction<T: Scalar>(
    literals: &[Literal<T>],
    id: ConstraintRef,
    stamp: Option<T>,
    journal: &mut BoundJournal<T>,
    tol: &Tolerances<T>,
) -> PropagationOutcome<T> {
    let mut open: Option<&Literal<T>> = None;
    for lit in literals {
        if lit.entailed_by(&journal.lb, &journal.ub, tol.feasibility) {
            return PropagationOutcome::NoOp;
        }
        if !lit.falsified_by(&journal.lb, &journal.ub, tol.feasibility) {
            if open.is_some() {
                return PropagationOutcome::NoOp;
            }
            open = Some(lit);
        }
    }
    let antecedents: Vec<usize> = literals
        .iter()
        .filter(|l| open.map_or(true, |o| !std::ptr::eq(*l, o)))
        .filter_map(|l| journal.earliest_falsifying(l, tol.feasibility))
        .collect();
    match open {
        None => PropagationOutcome::Infeasible(Infeasibility { constraint: id, antecedents, stamp }),
        Some(lit) => {
            match journal.apply(lit.var, lit.dir, lit.value, Reason::Constraint(id), antecedents, stamp) {
                Some(_) => PropagationOutcome::Deductions(1),
                None => PropagationOutcome::NoOp,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintKind<'a, T> {
    Linear { row: &'a SparseRow<T>, lhs: T },
    Disjunction(&'a [Literal<T>]),
}

/// A constraint handed to the fixpoint loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropConstraint<'a, T> {
    pub id: ConstraintRef,
    pub kind: ConstraintKind<'a, T>,
    pub stamp: Option<T>,
}

impl<'a, T: Scalar> PropConstraint<'a, T> {
    pub fn linear(id: ConstraintRef, row: &'a SparseRow<T>, lhs: T) -> Self {
        Self { id, kind: ConstraintKind::Linear { row, lhs }, stamp: None }
    }

    pub fn disjunction(id: ConstraintRef, literals: &'a [Literal<T>]) -> Self {
        Self { id, kind: ConstraintKind::Disjunction(literals), stamp: None }
    }

    pub fn with_stamp(mut self, stamp: Option<T>) -> Self {
        self.stamp = stamp;
        self
    }

    fn vars(&self) -> Box<dyn Iterator<Item = usize> + 'a> {
        match self.kind {
            ConstraintKind::Linear { row, .. } => Box::new(row.entries.iter().map(|&(i, _)| i)),
            ConstraintKind::Disjunction(lits) => Box::new(lits.iter().map(|l| l.var)),
        }
    }

    pub fn propagate(
        &self,
        integer: &[bool],
        journal: &mut BoundJournal<T>,
        tol: &Tolerances<T>,
    ) -> PropagationOutcome<T> {
        match self.kind {
            ConstraintKind::Linear { row, lhs } => {
                propagate_row(row, lhs, self.id, self.stamp, integer, journal, tol)
            }
            ConstraintKind::Disjunction(lits) => propagate_disjunction(lits, self.id, self.stamp, journal, tol),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FixpointOutcome<T> {
    Fixpoint,
    /// Round cap hit before quiescence.
    RoundLimit,
    Infeasible(Infeasibility<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixpointResult<T> {
    pub outcome: FixpointOutcome<T>,
    /// Per input constraint: whether it deduced anything.
    pub deduced: Vec<bool>,
    pub rounds: usize,
    pub changes: usize,
}

/// Variable → constraints occurrence lists for a constraint slice.
pub struct OccurrenceIndex {
    by_var: Vec<Vec<usize>>,
}

impl OccurrenceIndex {
    pub fn new<T: Scalar>(constraints: &[PropConstraint<'_, T>], num_vars: usize) -> Self {
        let mut by_var = vec![Vec::new(); num_vars];
        for (k, c) in constraints.iter().enumerate() {
            for v in c.vars() {
                by_var[v].push(k);
            }
        }
        Self { by_var }
    }

    /// Constraints mentioning `var`.
    pub fn watching(&self, var: usize) -> &[usize] {
        &self.by_var[var]
    }
}

pub const DEFAULT_ROUND_CAP: usize = 50;

/// Propagates every constraint to a fixpoint.
pub fn propagate_fixpoint<T: Scalar>(
    constraints: &[PropConstraint<'_, T>],
    integer: &[bool],
    journal: &mut BoundJournal<T>,
    tol: &Tolerances<T>,
) -> FixpointResult<T> {
    let index = OccurrenceIndex::new(constraints, journal.num_vars());
    let seeds: Vec<usize> = (0..constraints.len()).collect();
    propagate_from(constraints, &index, &seeds, integer, journal, tol, DEFAULT_ROUND_CAP)
}

/// Round-robin propagation starting from `seeds`; later rounds revisit the
/// constraints whose variables changed in the previous round.
pub fn propagate_from<T: Scalar>(
    constraints: &[PropConstraint<'_, T>],
    index: &OccurrenceIndex,
    seeds: &[usize],
    integer: &[bool],
    journal: &mut BoundJournal<T>,
    tol: &Tolerances<T>,
    round_cap: usize,
) -> FixpointResult<T> {
    let mut deduced = vec![false; constraints.len()];
    let mut queued = vec![false; constraints.len()];
    let mut current: VecDeque<usize> = VecDeque::new();
    for &k in seeds {
        if !queued[k] {
            queued[k] = true;
            current.push_back(k);
        }
    }
    let start = journal.len();
    let mut rounds = 0;
    while !current.is_empty() {
        if rounds == round_cap {
            return FixpointResult {
                outcome: FixpointOutcome::RoundLimit,
                deduced,
                rounds,
                changes: journal.len() - start,
            };
        }
        rounds += 1;
        let round_start = journal.len();
        while let Some(k) = current.pop_front() {
            queued[k] = false;
            match constraints[k].propagate(integer, journal, tol) {
                PropagationOutcome::Deductions(_) => deduced[k] = true,
                PropagationOutcome::Infeasible(inf) => {
                    return FixpointResult {
                        outcome: FixpointOutcome::Infeasible(inf),
                        deduced,
                        rounds,
                        changes: journal.len() - start,
                    };
                }
                PropagationOutcome::NoOp => {}
            }
        }
        for pos in round_start..journal.len() {
            let var = journal.entries[pos].var;
            for &k in &index.by_var[var] {
                if !queued[k] {
                    queued[k] = true;
                    current.push_back(k);
                }
            }
        }
    }
    FixpointResult {
        outcome: FixpointOutcome::Fixpoint,
        deduced,
        rounds,
        changes: journal.len() - start,
    }
}
