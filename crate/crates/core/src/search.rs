//! LP-based branch-and-bound with conflict and dual-ray learning.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use ordered_float::OrderedFloat;
use serde::Serialize;

use crate::confgraph::{
    analyze_conflict, AnalysisOptions, AnalysisOutcome, ConflictConstraint, ConflictOrigin, CutScheme, InitialReason,
};
use crate::dualproof::{build_proof_constraint, initial_reason, relax_local_bounds, CutoffInfo, ProofConstraint};
use crate::lp::{solve_lp, validate_farkas, Basis, FarkasRay, LinearRow, LpOutcome, LpSolution};
use crate::model::{Assignment, LocalBounds, MipModel, SparseRow};
use crate::pool::{AgingList, ConflictPool, Learned, PoolStats, DEFAULT_AGE_LIMIT};
use crate::propagate::{
    maximal_activity, BoundDir, BoundJournal, ConstraintRef, FixpointOutcome, Literal, OccurrenceIndex,
    PropConstraint, Reason, DEFAULT_ROUND_CAP,
};
use crate::scalar::{Scalar, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    None,
    Conflict,
    #[serde(rename = "dualray")]
    DualRay,
    Combined,
    CombinedPool,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::None, Mode::Conflict, Mode::DualRay, Mode::Combined, Mode::CombinedPool];

    /// Runs conflict-graph analysis.
    pub fn graph_analysis(self) -> bool {
        matches!(self, Mode::Conflict | Mode::Combined | Mode::CombinedPool)
    }

    /// Stores proof constraints from Farkas rays.
    pub fn dual_proofs(self) -> bool {
        matches!(self, Mode::DualRay | Mode::Combined | Mode::CombinedPool)
    }

    pub fn uses_pool(self) -> bool {
        self == Mode::CombinedPool
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::None => "none",
            Mode::Conflict => "conflict",
            Mode::DualRay => "dualray",
            Mode::Combined => "combined",
            Mode::CombinedPool => "combined-pool",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseSettingError(pub String);

impl fmt::Display for ParseSettingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown value '{}'", self.0)
    }
}

impl std::error::Error for ParseSettingError {}

impl FromStr for Mode {
    type Err = ParseSettingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Mode::None),
            "conflict" => Ok(Mode::Conflict),
            "dualray" => Ok(Mode::DualRay),
            "combined" => Ok(Mode::Combined),
            "combined-pool" | "combined+pool" => Ok(Mode::CombinedPool),
            _ => Err(ParseSettingError(s.to_string())),
        }
    }
}

/// Which infeasibilities feed conflict-graph analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictSource {
    #[default]
    Both,
    PropOnly,
    LpOnly,
}

impl ConflictSource {
    pub fn as_str(self) -> &'static str {
        match self {
            ConflictSource::Both => "both",
            ConflictSource::PropOnly => "prop-only",
            ConflictSource::LpOnly => "lp-only",
        }
    }
}

impl FromStr for ConflictSource {
    type Err = ParseSettingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(ConflictSource::Both),
            "prop-only" => Ok(ConflictSource::PropOnly),
            "lp-only" => Ok(ConflictSource::LpOnly),
            _ => Err(ParseSettingError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeSelection {
    Dfs,
    BestBound,
    #[default]
    Hybrid,
}

impl NodeSelection {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeSelection::Dfs => "dfs",
            NodeSelection::BestBound => "best-bound",
            NodeSelection::Hybrid => "hybrid",
        }
    }
}

impl FromStr for NodeSelection {
    type Err = ParseSettingError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dfs" => Ok(NodeSelection::Dfs),
            "best-bound" => Ok(NodeSelection::BestBound),
            "hybrid" => Ok(NodeSelection::Hybrid),
            _ => Err(ParseSettingError(s.to_string())),
        }
    }
}

pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(60);
pub const DEFAULT_NODE_LIMIT: u64 = 100_000;
pub const HYBRID_STREAK: usize = 100;

#[derive(Debug, Clone)]
pub struct Settings<T> {
    pub mode: Mode,
    pub conflict_source: ConflictSource,
    pub node_selection: NodeSelection,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    pub tolerances: Tolerances<T>,
    /// Recorded with the results; the search itself uses no randomness.
    pub seed: u64,
    pub cut_scheme: CutScheme,
    pub age_limit: u32,
    /// Keep a copy of every learned constraint in the result.
    pub record_learned: bool,
}

impl<T: Scalar> Default for Settings<T> {
    fn default() -> Self {
        Self {
            mode: Mode::Combined,
            conflict_source: ConflictSource::Both,
            node_selection: NodeSelection::Hybrid,
            time_limit: Some(DEFAULT_TIME_LIMIT),
            node_limit: Some(DEFAULT_NODE_LIMIT),
            tolerances: Tolerances::default(),
            seed: 0,
            cut_scheme: CutScheme::FirstUip,
            age_limit: DEFAULT_AGE_LIMIT,
            record_learned: false,
        }
    }
}

impl<T: Scalar> Settings<T> {
    pub fn with_mode(mode: Mode) -> Self {
        Self { mode, ..Self::default() }
    }
}

/// Literal cap for conflict constraints.
pub fn max_conflict_literals(n: usize) -> usize {
    (n as f64 * 0.1).ceil().max(10.0) as usize
}

/// Amount by which the cutoff row undercuts the incumbent value `z`.
pub fn cutoff_delta<T: Scalar>(model: &MipModel<T>, z: T, tol: &Tolerances<T>) -> T {
    if model.has_integral_objective(tol.integrality) && z.is_integral(tol.integrality) {
        T::one()
    } else {
        T::lit(1e-6) * z.abs().max(T::one())
    }
}

/// `-cᵀx ≥ -(z - δ)`.
pub fn cutoff_row<T: Scalar>(model: &MipModel<T>, z: T, tol: &Tolerances<T>) -> LinearRow<T> {
    let row = SparseRow::new(
        model
            .objective
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c != T::zero())
            .map(|(i, &c)| (i, -c))
            .collect(),
    );
    LinearRow::new(row, -(z - cutoff_delta(model, z, tol)))
}

/// Objective without the constant offset.
fn raw_objective<T: Scalar>(model: &MipModel<T>, x: &[T]) -> T {
    model.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node<T> {
    pub id: u64,
    pub parent: Option<u64>,
    pub depth: usize,
    pub branching: Option<Literal<T>>,
    /// Branching bounds from the root down to this node.
    pub path: Vec<Literal<T>>,
    /// Parent LP value, without objective offset.
    pub lower_bound: T,
    pub basis: Option<Basis>,
}

impl<T: Scalar> Node<T> {
    pub fn root() -> Self {
        Self {
            id: 0,
            parent: None,
            depth: 0,
            branching: None,
            path: Vec::new(),
            lower_bound: T::neg_infinity(),
            basis: None,
        }
    }

    /// Global bounds tightened by the branching path.
    pub fn bounds(&self, global: &LocalBounds<T>) -> LocalBounds<T> {
        let mut b = global.clone();
        for lit in &self.path {
            match lit.dir {
                BoundDir::Lower => b.lb[lit.var] = b.lb[lit.var].max(lit.value),
                BoundDir::Upper => b.ub[lit.var] = b.ub[lit.var].min(lit.value),
            }
        }
        b
    }
}

/// Open nodes with depth-first and best-bound orderings.
#[derive(Debug, Clone)]
pub struct OpenSet<T> {
    nodes: HashMap<u64, Node<T>>,
    by_depth: BTreeSet<(usize, u64)>,
    by_bound: BTreeSet<(OrderedFloat<f64>, u64)>,
    strategy: NodeSelection,
    streak: usize,
}

impl<T: Scalar> OpenSet<T> {
    pub fn new(strategy: NodeSelection) -> Self {
        Self {
            nodes: HashMap::new(),
            by_depth: BTreeSet::new(),
            by_bound: BTreeSet::new(),
            strategy,
            streak: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn push(&mut self, node: Node<T>) {
        self.by_depth.insert((node.depth, node.id));
        self.by_bound.insert((OrderedFloat(node.lower_bound.as_f64()), node.id));
        self.nodes.insert(node.id, node);
    }

    pub fn min_bound(&self) -> Option<f64> {
        self.by_bound.first().map(|(b, _)| b.0)
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.by_depth.clear();
        self.by_bound.clear();
    }

    fn take(&mut self, id: u64) -> Node<T> {
        let node = self.nodes.remove(&id).expect("indexed node");
        self.by_depth.remove(&(node.depth, id));
        self.by_bound.remove(&(OrderedFloat(node.lower_bound.as_f64()), id));
        node
    }

    fn pop_deepest(&mut self) -> Option<Node<T>> {
        let &(_, id) = self.by_depth.last()?;
        Some(self.take(id))
    }

    fn pop_best(&mut self) -> Option<Node<T>> {
        let &(_, id) = self.by_bound.first()?;
        Some(self.take(id))
    }
}

/// Picks the next node according to the set's strategy.
pub fn select_node<T: Scalar>(open: &mut OpenSet<T>) -> Option<Node<T>> {
    match open.strategy {
        NodeSelection::Dfs => open.pop_deepest(),
        NodeSelection::BestBound => open.pop_best(),
        NodeSelection::Hybrid => {
            if open.streak >= HYBRID_STREAK {
                open.streak = 0;
                open.pop_best()
            } else {
                open.streak += 1;
                open.pop_deepest()
            }
        }
    }
}

/// Most fractional integer variable, lowest index on ties.
pub fn branching_variable<T: Scalar>(x: &[T], integer: &[bool], tol: T) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, (&v, &int)) in x.iter().zip(integer).enumerate() {
        if !int {
            continue;
        }
        let frac = v - v.floor();
        let score = frac.min(T::one() - frac);
        if score > tol && best.map_or(true, |(_, s)| score > s) {
            best = Some((i, score));
        }
    }
    best.map(|(i, _)| i)
}

/// Children `x_i ≤ ⌊x_i⌋` and `x_i ≥ ⌈x_i⌉` of `node`; `None` if the solution is integral.
pub fn branch<T: Scalar>(
    node: &Node<T>,
    solution: &LpSolution<T>,
    integer: &[bool],
    tol: &Tolerances<T>,
    next_id: &mut u64,
    basis: Option<&Basis>,
) -> Option<(Node<T>, Node<T>)> {
    let i = branching_variable(&solution.primal, integer, tol.integrality)?;
    let v = solution.primal[i];
    let mut child = |lit: Literal<T>| {
        *next_id += 1;
        let mut path = node.path.clone();
        path.push(lit);
        Node {
            id: *next_id,
            parent: Some(node.id),
            depth: node.depth + 1,
            branching: Some(lit),
            path,
            lower_bound: solution.objective,
            basis: basis.cloned(),
        }
    };
    let down = child(Literal::new(i, BoundDir::Upper, v.floor()));
    let up = child(Literal::new(i, BoundDir::Lower, v.ceil()));
    Some((down, up))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Limit => "limit",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iterations: u64,
    pub max_depth: usize,
    pub infeasible_propagations: u64,
    pub infeasible_lps: u64,
    /// Infeasibilities from which something was learned.
    pub conflicts_analyzed: u64,
    pub conflict_constraints: u64,
    pub proof_constraints: u64,
    pub unit_conflicts: u64,
    pub conflict_deductions: u64,
    pub proof_deductions: u64,
    pub too_long: u64,
    pub birth_failures: u64,
    pub stalled_lps: u64,
    /// LP conflicts that went through bound relaxation.
    pub relaxation_events: u64,
    /// Local bounds with a nonzero reduced multiplier, summed over events.
    pub reason_before_total: u64,
    /// Bounds kept by the relaxation, summed over events.
    pub reason_after_total: u64,
    pub pool: PoolStats,
}

impl SolveStats {
    pub fn mean_reason_before(&self) -> f64 {
        self.reason_before_total as f64 / self.relaxation_events.max(1) as f64
    }

    pub fn mean_reason_after(&self) -> f64 {
        self.reason_after_total as f64 / self.relaxation_events.max(1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub status: SolveStatus,
    pub incumbent: Option<Vec<T>>,
    /// Objective of the incumbent in the model's own sense, offset included.
    pub objective: Option<T>,
    pub time: Duration,
    pub stats: SolveStats,
    /// Every learned constraint, when `record_learned` is set.
    pub learned: Vec<Learned<T>>,
}

enum Store<T> {
    List(AgingList<T>),
    Pool(ConflictPool<T>),
}

impl<T: Scalar> Store<T> {
    fn constraints(&self) -> Vec<&Learned<T>> {
        match self {
            Store::List(l) => l.iter().map(|e| &e.constraint).collect(),
            Store::Pool(p) => p.iter().map(|e| &e.constraint).collect(),
        }
    }

    fn insert(&mut self, c: Learned<T>) {
        match self {
            Store::List(l) => l.insert(c),
            Store::Pool(p) => {
                p.insert(c).expect("fresh constraint id");
            }
        }
    }

    fn age(&mut self, deduced: &HashSet<u64>) {
        match self {
            Store::List(l) => {
                l.age_all(|id| deduced.contains(&id));
            }
            Store::Pool(p) => {
                let ids: Vec<u64> = p.iter().map(|e| e.constraint.id()).collect();
                for id in ids {
                    p.record_propagation(id, deduced.contains(&id)).expect("pooled id");
                }
            }
        }
    }

    fn stats(&self) -> PoolStats {
        match self {
            Store::List(l) => l.stats(),
            Store::Pool(p) => p.stats(),
        }
    }
}

/// Positions and stamp explaining an infeasible node.
struct NodeConflict<T> {
    positions: Vec<usize>,
    stamp: Option<T>,
}

struct Activation<T> {
    conflict: Option<NodeConflict<T>>,
    /// A branching bound contradicted the global box; no learning.
    crossed: bool,
    deduced: HashSet<u64>,
    conflict_deductions: u64,
    proof_deductions: u64,
}

impl<T> Default for Activation<T> {
    fn default() -> Self {
        Self {
            conflict: None,
            crossed: false,
            deduced: HashSet::new(),
            conflict_deductions: 0,
            proof_deductions: 0,
        }
    }
}

fn prop_constraints<'a, T: Scalar>(model: &'a MipModel<T>, learned: &[&'a Learned<T>]) -> Vec<PropConstraint<'a, T>> {
    let mut cons: Vec<PropConstraint<'a, T>> = model
        .rows
        .iter()
        .zip(&model.lhs)
        .enumerate()
        .map(|(r, (row, &b))| PropConstraint::linear(ConstraintRef::Row(r), row, b))
        .collect();
    for l in learned {
        cons.push(match l {
            Learned::Conflict(c) => {
                PropConstraint::disjunction(ConstraintRef::Conflict(c.id), &c.literals).with_stamp(c.stamp)
            }
            Learned::Proof(p) => PropConstraint::linear(ConstraintRef::Proof(p.id), &p.row, p.lhs).with_stamp(p.stamp),
        });
    }
    cons
}

fn count_deductions<T: Scalar>(journal: &BoundJournal<T>, from: usize, act: &mut Activation<T>) {
    for e in &journal.entries()[from..] {
        match e.reason {
            Reason::Constraint(ConstraintRef::Conflict(id)) => {
                act.conflict_deductions += 1;
                act.deduced.insert(id);
            }
            Reason::Constraint(ConstraintRef::Proof(id)) => {
                act.proof_deductions += 1;
                act.deduced.insert(id);
            }
            _ => {}
        }
    }
}

/// Brings the journal to `path`, propagating at each new level.
#[allow(clippy::too_many_arguments)]
fn activate<T: Scalar>(
    model: &MipModel<T>,
    learned: &[&Learned<T>],
    journal: &mut BoundJournal<T>,
    current: &mut Vec<Literal<T>>,
    path: &[Literal<T>],
    tol: &Tolerances<T>,
) -> Activation<T> {
    let mut act = Activation::default();
    let common = current.iter().zip(path).take_while(|(a, b)| a == b).count();
    journal.backtrack_to(common);
    current.truncate(common);

    let cons = prop_constraints(model, learned);
    let index = OccurrenceIndex::new(&cons, model.num_vars());
    let all: Vec<usize> = (0..cons.len()).collect();

    let mut level = common;
    loop {
        let start = journal.len();
        let seeds: Vec<usize> = if level == path.len() {
            all.clone()
        } else {
            let lit = path[level];
            journal.push_level();
            current.push(lit);
            level += 1;
            let pos = journal.apply(lit.var, lit.dir, lit.value, Reason::Branching, Vec::new(), None);
            if journal.lb()[lit.var] > journal.ub()[lit.var] + tol.feasibility {
                let opposite = journal.last_change(lit.var, lit.dir.flip());
                match (pos, opposite) {
                    (Some(p), Some(q)) => {
                        act.conflict = Some(NodeConflict { positions: vec![p, q], stamp: None });
                    }
                    _ => act.crossed = true,
                }
                return act;
            }
            if level == path.len() {
                all.clone()
            } else {
                index.watching(lit.var).to_vec()
            }
        };
        let res = crate::propagate::propagate_from(
            &cons,
            &index,
            &seeds,
            &model.integer,
            journal,
            tol,
            DEFAULT_ROUND_CAP,
        );
        count_deductions(journal, start, &mut act);
        if let FixpointOutcome::Infeasible(inf) = res.outcome {
            act.conflict = Some(NodeConflict { positions: inf.antecedents, stamp: inf.stamp });
            return act;
        }
        if level == path.len() && seeds.len() == all.len() {
            return act;
        }
    }
}

enum Learn<T> {
    Nothing,
    Something,
    /// No (improving) solution exists anywhere.
    Global(Option<T>),
}

struct Solver<'m, T: Scalar> {
    model: &'m MipModel<T>,
    settings: &'m Settings<T>,
    tol: Tolerances<T>,
    global: LocalBounds<T>,
    global_stamp: Option<T>,
    global_dirty: bool,
    journal: BoundJournal<T>,
    current: Vec<Literal<T>>,
    store: Store<T>,
    next_constraint: u64,
    incumbent: Option<(Vec<T>, T)>,
    stats: SolveStats,
    log: Vec<Learned<T>>,
    max_literals: usize,
}

impl<'m, T: Scalar> Solver<'m, T> {
    fn new(model: &'m MipModel<T>, settings: &'m Settings<T>) -> Self {
        let global = model.global_bounds();
        let store = if settings.mode.uses_pool() {
            let mut p = ConflictPool::for_model(model.num_vars(), model.num_rows());
            if settings.age_limit != DEFAULT_AGE_LIMIT {
                p = ConflictPool::new(p.capacity(), settings.age_limit);
            }
            Store::Pool(p)
        } else {
            Store::List(AgingList::new(settings.age_limit))
        };
        Self {
            model,
            settings,
            tol: settings.tolerances,
            journal: BoundJournal::new(&global),
            global,
            global_stamp: None,
            global_dirty: true,
            current: Vec::new(),
            store,
            next_constraint: 0,
            incumbent: None,
            stats: SolveStats::default(),
            log: Vec::new(),
            max_literals: max_conflict_literals(model.num_vars()),
        }
    }

    fn cutoff(&self) -> Option<T> {
        self.incumbent.as_ref().map(|&(_, z)| z)
    }

    fn next_id(&mut self) -> u64 {
        self.next_constraint += 1;
        self.next_constraint
    }

    fn record(&mut self, c: &Learned<T>) {
        if self.settings.record_learned {
            self.log.push(c.clone());
        }
    }

    /// Starts a fresh journal from the global box, propagated at depth 0.
    fn rebuild(&mut self) -> Result<(), Option<T>> {
        self.global_dirty = false;
        self.journal = BoundJournal::new(&self.global);
        self.current.clear();
        if self.global.is_empty_box() {
            return Err(self.global_stamp);
        }
        let learned = self.store.constraints();
        let cons = prop_constraints(self.model, &learned);
        let res = crate::propagate::propagate_fixpoint(&cons, &self.model.integer, &mut self.journal, &self.tol);
        if let FixpointOutcome::Infeasible(inf) = res.outcome {
            let mut stamp = crate::confgraph::min_stamp(inf.stamp, self.global_stamp);
            for e in self.journal.entries() {
                stamp = crate::confgraph::min_stamp(stamp, e.stamp);
            }
            return Err(stamp);
        }
        Ok(())
    }

    fn apply_unit(&mut self, c: &ConflictConstraint<T>) {
        let lit = c.literals[0];
        match lit.dir {
            BoundDir::Lower => self.global.lb[lit.var] = self.global.lb[lit.var].max(lit.value),
            BoundDir::Upper => self.global.ub[lit.var] = self.global.ub[lit.var].min(lit.value),
        }
        self.global_stamp = crate::confgraph::min_stamp(self.global_stamp, c.stamp);
        self.global_dirty = true;
        self.stats.unit_conflicts += 1;
    }

    fn graph_analysis(&mut self, reason: &InitialReason, sink_stamp: Option<T>, origin: ConflictOrigin) -> Learn<T> {
        let opts = AnalysisOptions {
            scheme: self.settings.cut_scheme,
            max_literals: self.max_literals,
            global_stamp: self.global_stamp,
            origin,
        };
        match analyze_conflict(&self.journal, reason, sink_stamp, &self.model.integer, &opts) {
            Ok(AnalysisOutcome::Conflict(mut c)) => {
                c.id = self.next_id();
                self.stats.conflict_constraints += 1;
                let learned = Learned::Conflict(c);
                self.record(&learned);
                let Learned::Conflict(c) = learned else { unreachable!() };
                if c.literals.len() == 1 {
                    self.apply_unit(&c);
                } else {
                    self.store.insert(Learned::Conflict(c));
                }
                Learn::Something
            }
            Ok(AnalysisOutcome::GloballyInfeasible { stamp }) => Learn::Global(stamp),
            Ok(AnalysisOutcome::TooLong { .. }) => {
                self.stats.too_long += 1;
                Learn::Nothing
            }
            Err(e) => {
                log::debug!("conflict analysis failed: {e}");
                self.stats.birth_failures += 1;
                Learn::Nothing
            }
        }
    }

    fn handle_infeasible_propagation(&mut self, conflict: NodeConflict<T>) -> Learn<T> {
        self.stats.infeasible_propagations += 1;
        if !self.settings.mode.graph_analysis() || self.settings.conflict_source == ConflictSource::LpOnly {
            return Learn::Nothing;
        }
        let reason = InitialReason { positions: conflict.positions };
        self.graph_analysis(&reason, conflict.stamp, ConflictOrigin::Propagation)
    }

    /// Learns from an infeasible LP according to the mode.
    fn handle_infeasible_lp(&mut self, ray: &FarkasRay<T>, extra: &[LinearRow<T>]) -> Learn<T> {
        self.stats.infeasible_lps += 1;
        let mode = self.settings.mode;
        let graph = mode.graph_analysis() && self.settings.conflict_source != ConflictSource::PropOnly;
        if !graph && !mode.dual_proofs() {
            return Learn::Nothing;
        }
        let local = self.journal.local_bounds();
        if !validate_farkas(ray, self.model, extra, &local, T::lit(1e-7)).valid {
            self.stats.birth_failures += 1;
            return Learn::Nothing;
        }
        let cutoff = self.cutoff().map(|z| CutoffInfo { extra_index: 0, incumbent: z });
        let proof = match build_proof_constraint(ray, self.model, extra, &local, cutoff, &self.tol) {
            Ok(p) => p,
            Err(e) => {
                log::debug!("proof constraint rejected: {e}");
                self.stats.birth_failures += 1;
                return Learn::Nothing;
            }
        };
        let base = self.journal.base_bounds();
        if proof.is_global_contradiction(self.tol.zero)
            || maximal_activity(&proof.row, &base.lb, &base.ub) < proof.lhs - self.tol.feasibility
        {
            return Learn::Global(crate::confgraph::min_stamp(proof.stamp, self.global_stamp));
        }
        let mut result = Learn::Nothing;
        if graph {
            let relax = relax_local_bounds(ray, self.model, extra, &local, &base, &self.tol);
            self.stats.relaxation_events += 1;
            self.stats.reason_before_total += relax.candidates as u64;
            self.stats.reason_after_total += relax.kept.len() as u64;
            match initial_reason(&relax.kept, &self.journal) {
                Ok(reason) => match self.graph_analysis(&reason, proof.stamp, ConflictOrigin::Lp) {
                    Learn::Global(s) => return Learn::Global(s),
                    Learn::Something => result = Learn::Something,
                    Learn::Nothing => {}
                },
                Err(e) => {
                    log::debug!("no initial reason: {e}");
                    self.stats.birth_failures += 1;
                }
            }
        }
        if mode.dual_proofs() {
            let proof = ProofConstraint { id: self.next_id(), ..proof };
            self.stats.proof_constraints += 1;
            let learned = Learned::Proof(proof);
            self.record(&learned);
            self.store.insert(learned);
            result = Learn::Something;
        }
        result
    }

    fn new_incumbent(&mut self, x: Vec<T>, z: T) {
        self.incumbent = Some((x, z));
        if let Store::Pool(p) = &mut self.store {
            p.on_new_incumbent(z);
            p.update_pass();
        }
    }

    /// Rounds integer entries and accepts the point if it is feasible and improving.
    fn try_incumbent(&mut self, primal: &[T]) -> bool {
        let x: Vec<T> = primal
            .iter()
            .zip(&self.model.integer)
            .map(|(&v, &int)| if int { v.round() } else { v })
            .collect();
        let ok = self
            .model
            .check_solution(&Assignment::new(x.clone()), self.tol.feasibility)
            .map(|r| r.is_feasible())
            .unwrap_or(false);
        if !ok {
            return false;
        }
        let z = raw_objective(self.model, &x);
        if self.cutoff().map_or(true, |old| z < old) {
            self.new_incumbent(x, z);
        }
        true
    }

    fn run(mut self) -> SolveResult<T> {
        let start = Instant::now();
        let s = self.settings;
        let mut open = OpenSet::new(s.node_selection);
        open.push(Node::root());
        let mut next_node = 0u64;
        let mut complete = true;
        let mut unbounded = false;
        let mut global_end: Option<Option<T>> = None;

        while !open.is_empty() {
            if s.time_limit.is_some_and(|t| start.elapsed() >= t) || s.node_limit.is_some_and(|n| self.stats.nodes >= n) {
                complete = false;
                break;
            }
            let node = select_node(&mut open).expect("nonempty open set");
            if let Some(z) = self.cutoff() {
                let limit = z - cutoff_delta(self.model, z, &self.tol);
                if node.lower_bound > limit + self.tol.feasibility {
                    continue;
                }
                if cutoff_row(self.model, z, &self.tol).row.is_empty() {
                    // constant objective: nothing can improve on the incumbent
                    open.clear();
                    break;
                }
            }
            self.stats.nodes += 1;
            self.stats.max_depth = self.stats.max_depth.max(node.depth);

            if self.global_dirty {
                if let Err(stamp) = self.rebuild() {
                    global_end = Some(stamp);
                    break;
                }
            }
            let act = {
                let learned = self.store.constraints();
                activate(self.model, &learned, &mut self.journal, &mut self.current, &node.path, &self.tol)
            };
            self.stats.conflict_deductions += act.conflict_deductions;
            self.stats.proof_deductions += act.proof_deductions;
            self.store.age(&act.deduced);
            if act.crossed {
                continue;
            }
            let mut first_conflict = true;
            let mut on_learn = |solver: &mut Self, l: Learn<T>| -> Option<Option<T>> {
                match l {
                    Learn::Nothing => None,
                    Learn::Something => {
                        solver.stats.conflicts_analyzed += 1;
                        if first_conflict {
                            first_conflict = false;
                            if let Store::Pool(p) = &mut solver.store {
                                p.update_pass();
                            }
                        }
                        None
                    }
                    Learn::Global(stamp) => {
                        solver.stats.conflicts_analyzed += 1;
                        Some(stamp)
                    }
                }
            };
            if let Some(conflict) = act.conflict {
                let l = self.handle_infeasible_propagation(conflict);
                if let Some(stamp) = on_learn(&mut self, l) {
                    global_end = Some(stamp);
                    break;
                }
                continue;
            }

            let extra: Vec<LinearRow<T>> = self.cutoff().map(|z| cutoff_row(self.model, z, &self.tol)).into_iter().collect();
            let local = self.journal.local_bounds();
            let lp = solve_lp(self.model, &local, &extra, node.basis.as_ref(), &self.tol);
            self.stats.lp_iterations += lp.iterations as u64;
            match lp.outcome {
                LpOutcome::Optimal(sol) => {
                    if branching_variable(&sol.primal, &self.model.integer, self.tol.integrality).is_none() {
                        if !self.try_incumbent(&sol.primal) {
                            complete = false;
                        }
                        continue;
                    }
                    let (down, up) =
                        branch(&node, &sol, &self.model.integer, &self.tol, &mut next_node, lp.basis.as_ref())
                            .expect("fractional solution");
                    open.push(down);
                    open.push(up);
                }
                LpOutcome::Infeasible(ray) => {
                    let l = self.handle_infeasible_lp(&ray, &extra);
                    if let Some(stamp) = on_learn(&mut self, l) {
                        global_end = Some(stamp);
                        break;
                    }
                }
                LpOutcome::Unbounded { .. } => {
                    if node.depth == 0 && self.incumbent.is_none() {
                        unbounded = true;
                        break;
                    }
                    complete = false;
                }
                LpOutcome::Stalled => {
                    self.stats.stalled_lps += 1;
                    match self.split_unfixed(&node, &mut next_node) {
                        Some((a, b)) => {
                            open.push(a);
                            open.push(b);
                        }
                        None => complete = false,
                    }
                }
            }
        }

        self.stats.pool = self.store.stats();
        let status = if unbounded {
            SolveStatus::Unbounded
        } else if global_end.is_some() || (complete && open.is_empty()) {
            if self.incumbent.is_some() {
                SolveStatus::Optimal
            } else {
                SolveStatus::Infeasible
            }
        } else {
            SolveStatus::Limit
        };
        let objective = self
            .incumbent
            .as_ref()
            .map(|&(_, z)| self.model.external_objective(z + self.model.objective_offset));
        SolveResult {
            status,
            incumbent: self.incumbent.map(|(x, _)| x),
            objective,
            time: start.elapsed(),
            stats: self.stats,
            learned: self.log,
        }
    }

    /// Splits the first unfixed integer variable at its midpoint.
    fn split_unfixed(&self, node: &Node<T>, next_id: &mut u64) -> Option<(Node<T>, Node<T>)> {
        let (lb, ub) = (self.journal.lb(), self.journal.ub());
        let i = (0..lb.len()).find(|&i| self.model.integer[i] && lb[i] < ub[i])?;
        let mid = if lb[i].is_finite() && ub[i].is_finite() {
            ((lb[i] + ub[i]) / T::lit(2.0)).floor()
        } else if lb[i].is_finite() {
            lb[i]
        } else if ub[i].is_finite() {
            ub[i] - T::one()
        } else {
            T::zero()
        };
        let mut child = |lit: Literal<T>| {
            *next_id += 1;
            let mut path = node.path.clone();
            path.push(lit);
            Node {
                id: *next_id,
                parent: Some(node.id),
                depth: node.depth + 1,
                branching: Some(lit),
                path,
                lower_bound: node.lower_bound,
                basis: None,
            }
        };
        Some((
            child(Literal::new(i, BoundDir::Upper, mid)),
            child(Literal::new(i, BoundDir::Lower, mid + T::one())),
        ))
    }
}

/// Solves the model by branch-and-bound.
pub fn solve<T: Scalar>(model: &MipModel<T>, settings: &Settings<T>) -> SolveResult<T> {
    Solver::new(model, settings).run()
}
