//! Bounded-variable primal simplex for the LP relaxation under local bounds.
//!
//! Each row `a·x ≥ b` gets a surplus column `s = a·x − b ≥ 0`, so the working
//! system is `[A | −I](x, s) = b`. Phase 1 minimizes the sum of bound
//! violations of the basic variables; if that optimum is positive the phase-1
//! row duals `π` are nonnegative and `γ = π` satisfies the Farkas system with
//! margin equal to the remaining infeasibility.

use crate::model::{LocalBounds, MipModel, SparseRow};
use crate::scalar::{Scalar, Tolerances};

/// An additional `≥` row handed to the LP on top of the model rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow<T> {
    pub row: SparseRow<T>,
    pub lhs: T,
}

impl<T: Scalar> LinearRow<T> {
    pub fn new(row: SparseRow<T>, lhs: T) -> Self {
        Self { row, lhs }
    }
}

/// Dual multipliers certifying infeasibility: `γᵀA + r̲ + r̄ ≤ 0`,
/// `γᵀb + r̲ᵀℓ′ + r̄ᵀu′ > 0`, with `γ, r̲ ≥ 0 ≥ r̄`.
///
/// `gamma` covers the model rows followed by any extra rows of the solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasRay<T> {
    pub gamma: Vec<T>,
    pub rlow: Vec<T>,
    pub rupp: Vec<T>,
}

impl<T: Scalar> FarkasRay<T> {
    /// Completes row multipliers with reduced multipliers in unbounded-ray form,
    /// `r̲_i = max{0, −γᵀA_i}` and `r̄_i = min{0, −γᵀA_i}`.
    pub fn from_gamma(gamma: Vec<T>, model: &MipModel<T>, extra: &[LinearRow<T>]) -> Self {
        let agg = aggregate(&gamma, model, extra);
        let rlow = agg.iter().map(|&a| (-a).max(T::zero())).collect();
        let rupp = agg.iter().map(|&a| (-a).min(T::zero())).collect();
        Self { gamma, rlow, rupp }
    }

    /// `γᵀb + r̲ᵀℓ + r̄ᵀu` for the given box.
    pub fn margin(&self, model: &MipModel<T>, extra: &[LinearRow<T>], bounds: &LocalBounds<T>) -> T {
        let rhs = row_lhs(model, extra);
        let mut total: T = self.gamma.iter().zip(&rhs).map(|(&g, &b)| g * b).sum();
        for i in 0..self.rlow.len() {
            total = total + times_bound(self.rlow[i], bounds.lb[i]) + times_bound(self.rupp[i], bounds.ub[i]);
        }
        total
    }

    pub fn scale(&mut self, factor: T) {
        for v in self.gamma.iter_mut().chain(&mut self.rlow).chain(&mut self.rupp) {
            *v = *v * factor;
        }
    }
}

/// `coef·bound` with `0·∞ = 0`.
pub(crate) fn times_bound<T: Scalar>(coef: T, bound: T) -> T {
    if coef == T::zero() {
        T::zero()
    } else {
        coef * bound
    }
}

/// Dense `γᵀA` over model rows followed by extra rows. Entries that are pure
/// cancellation noise relative to their summands are flushed to zero.
pub fn aggregate<T: Scalar>(gamma: &[T], model: &MipModel<T>, extra: &[LinearRow<T>]) -> Vec<T> {
    let mut agg = vec![T::zero(); model.num_vars()];
    let mut mass = vec![T::zero(); model.num_vars()];
    let rows = model.rows.iter().chain(extra.iter().map(|e| &e.row));
    for (&g, row) in gamma.iter().zip(rows) {
        if g != T::zero() {
            for (i, a) in row.iter() {
                agg[i] = agg[i] + g * a;
                mass[i] = mass[i] + (g * a).abs();
            }
        }
    }
    let noise = T::epsilon() * T::lit(64.0);
    for (v, m) in agg.iter_mut().zip(mass) {
        if v.abs() <= noise * m {
            *v = T::zero();
        }
    }
    agg
}

fn row_lhs<T: Scalar>(model: &MipModel<T>, extra: &[LinearRow<T>]) -> Vec<T> {
    model.lhs.iter().copied().chain(extra.iter().map(|e| e.lhs)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration cap or numerical trouble; callers must not learn from it.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub primal: Vec<T>,
    /// `cᵀx` without the model's objective offset.
    pub objective: T,
    /// Row duals `y ≥ 0`, model rows then extra rows.
    pub duals: Vec<T>,
    /// `c − yᵀA` per structural variable.
    pub reduced_costs: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal(LpSolution<T>),
    Infeasible(FarkasRay<T>),
    /// A feasible point and a direction along which the objective decreases without bound.
    Unbounded { point: Vec<T>, ray: Vec<T> },
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// Column statuses for structurals followed by row surplus columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub status: Vec<BasisStatus>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult<T> {
    pub outcome: LpOutcome<T>,
    pub basis: Option<Basis>,
    pub iterations: usize,
}

impl<T> LpResult<T> {
    pub fn status(&self) -> LpStatus {
        match self.outcome {
            LpOutcome::Optimal(_) => LpStatus::Optimal,
            LpOutcome::Infeasible(_) => LpStatus::Infeasible,
            LpOutcome::Unbounded { .. } => LpStatus::Unbounded,
            LpOutcome::Stalled => LpStatus::Stalled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub iteration_limit: usize,
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degeneracy_streak: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            iteration_limit: 50_000,
            refactor_every: 50,
            degeneracy_streak: 100,
        }
    }
}

/// Solves `min cᵀx  s.t. Ax ≥ b, extra rows, ℓ′ ≤ x ≤ u′`.
pub fn solve_lp<T: Scalar>(
    model: &MipModel<T>,
    bounds: &LocalBounds<T>,
    extra_rows: &[LinearRow<T>],
    warm: Option<&Basis>,
    tol: &Tolerances<T>,
) -> LpResult<T> {
    solve_lp_with(model, bounds, extra_rows, warm, tol, &LpOptions::default())
}

pub fn solve_lp_with<T: Scalar>(
    model: &MipModel<T>,
    bounds: &LocalBounds<T>,
    extra_rows: &[LinearRow<T>],
    warm: Option<&Basis>,
    tol: &Tolerances<T>,
    opts: &LpOptions,
) -> LpResult<T> {
    let n = model.num_vars();
    if let Some(i) = (0..n).find(|&i| bounds.lb[i] > bounds.ub[i]) {
        // crossing bounds violate the precondition; certify the empty box
        // directly with r̲_i = 1, r̄_i = −1 (not in unbounded-ray form)
        let m = model.num_rows() + extra_rows.len();
        let mut rlow = vec![T::zero(); n];
        let mut rupp = vec![T::zero(); n];
        rlow[i] = T::one();
        rupp[i] = -T::one();
        return LpResult {
            outcome: LpOutcome::Infeasible(FarkasRay { gamma: vec![T::zero(); m], rlow, rupp }),
            basis: None,
            iterations: 0,
        };
    }
    let mut spx = Simplex::new(model, bounds, extra_rows, tol, opts);
    if let Some(b) = warm {
        spx.warm_start(b);
    }
    spx.run(model, extra_rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Simplex<'a, T> {
    m: usize,
    n: usize,
    /// row-major dense constraint matrix, `m × n`
    a: Vec<T>,
    b: Vec<T>,
    cost: &'a [T],
    lo: Vec<T>,
    hi: Vec<T>,
    x: Vec<T>,
    state: Vec<BasisStatus>,
    head: Vec<usize>,
    binv: Vec<T>,
    tol: &'a Tolerances<T>,
    opts: &'a LpOptions,
}

impl<'a, T: Scalar> Simplex<'a, T> {
    fn new(
        model: &'a MipModel<T>,
        bounds: &LocalBounds<T>,
        extra: &[LinearRow<T>],
        tol: &'a Tolerances<T>,
        opts: &'a LpOptions,
    ) -> Self {
        let n = model.num_vars();
        let m = model.num_rows() + extra.len();
        let mut a = vec![T::zero(); m * n];
        for (r, row) in model.rows.iter().chain(extra.iter().map(|e| &e.row)).enumerate() {
            for (i, v) in row.iter() {
                a[r * n + i] = v;
            }
        }
        let b = row_lhs(model, extra);
        let mut lo = bounds.lb.clone();
        let mut hi = bounds.ub.clone();
        lo.extend(std::iter::repeat(T::zero()).take(m));
        hi.extend(std::iter::repeat(T::infinity()).take(m));
        let mut state = vec![BasisStatus::AtLower; n + m];
        for s in state.iter_mut().skip(n) {
            *s = BasisStatus::Basic;
        }
        let mut binv = vec![T::zero(); m * m];
        for r in 0..m {
            binv[r * m + r] = -T::one();
        }
        let mut spx = Self {
            m,
            n,
            a,
            b,
            cost: &model.objective,
            lo,
            hi,
            x: vec![T::zero(); n + m],
            state,
            head: (n..n + m).collect(),
            binv,
            tol,
            opts,
        };
        spx.place_nonbasics();
        spx.compute_basics();
        spx
    }

    fn warm_start(&mut self, basis: &Basis) {
        let total = self.n + self.m;
        let mut status = basis.status.clone();
        if status.len() > total || status.len() < self.n {
            return;
        }
        // rows added since the basis was taken start with their surplus basic
        status.resize(total, BasisStatus::Basic);
        let head: Vec<usize> = (0..total).filter(|&j| status[j] == BasisStatus::Basic).collect();
        if head.len() != self.m {
            return;
        }
        let saved = (self.state.clone(), self.head.clone(), self.binv.clone());
        self.state = status;
        self.head = head;
        if self.refactor() {
            self.place_nonbasics();
            self.compute_basics();
        } else {
            (self.state, self.head, self.binv) = saved;
            self.place_nonbasics();
            self.compute_basics();
        }
    }

    /// Puts every nonbasic column on a finite bound consistent with its status.
    fn place_nonbasics(&mut self) {
        for j in 0..self.n + self.m {
            let (lo, hi) = (self.lo[j], self.hi[j]);
            let st = match self.state[j] {
                BasisStatus::Basic => continue,
                BasisStatus::AtUpper if hi.is_finite() => BasisStatus::AtUpper,
                _ if lo.is_finite() => BasisStatus::AtLower,
                _ if hi.is_finite() => BasisStatus::AtUpper,
                _ => BasisStatus::Free,
            };
            self.state[j] = st;
            self.x[j] = match st {
                BasisStatus::AtLower => lo,
                BasisStatus::AtUpper => hi,
                _ => T::zero(),
            };
        }
    }

    #[inline]
    fn col_entry(&self, j: usize, r: usize) -> T {
        if j < self.n {
            self.a[r * self.n + j]
        } else if j - self.n == r {
            -T::one()
        } else {
            T::zero()
        }
    }

    /// `π·M_j`
    fn dot_col(&self, pi: &[T], j: usize) -> T {
        if j < self.n {
            (0..self.m).map(|r| pi[r] * self.a[r * self.n + j]).sum()
        } else {
            -pi[j - self.n]
        }
    }

    /// `B⁻¹ M_j`
    fn ftran(&self, j: usize) -> Vec<T> {
        let m = self.m;
        let mut out = vec![T::zero(); m];
        if j < self.n {
            for r in 0..m {
                let v = self.a[r * self.n + j];
                if v != T::zero() {
                    for (p, o) in out.iter_mut().enumerate() {
                        *o = *o + self.binv[p * m + r] * v;
                    }
                }
            }
        } else {
            let r = j - self.n;
            for (p, o) in out.iter_mut().enumerate() {
                *o = -self.binv[p * m + r];
            }
        }
        out
    }

    /// Rebuilds `B⁻¹` by Gauss-Jordan elimination with partial pivoting.
    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut bm = vec![T::zero(); m * m];
        for (p, &j) in self.head.iter().enumerate() {
            for r in 0..m {
                bm[r * m + p] = self.col_entry(j, r);
            }
        }
        let mut inv = vec![T::zero(); m * m];
        for r in 0..m {
            inv[r * m + r] = T::one();
        }
        for c in 0..m {
            let piv = (c..m)
                .max_by(|&x, &y| bm[x * m + c].abs().partial_cmp(&bm[y * m + c].abs()).unwrap())
                .unwrap();
            if bm[piv * m + c].abs() <= self.tol.pivot {
                return false;
            }
            if piv != c {
                for k in 0..m {
                    bm.swap(piv * m + k, c * m + k);
                    inv.swap(piv * m + k, c * m + k);
                }
            }
            let d = bm[c * m + c];
            for k in 0..m {
                bm[c * m + k] = bm[c * m + k] / d;
                inv[c * m + k] = inv[c * m + k] / d;
            }
            for r in 0..m {
                if r != c {
                    let f = bm[r * m + c];
                    if f != T::zero() {
                        for k in 0..m {
                            bm[r * m + k] = bm[r * m + k] - f * bm[c * m + k];
                            inv[r * m + k] = inv[r * m + k] - f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        // rows of `inv` are indexed by basis position because `bm` columns were
        self.binv = inv;
        true
    }

    /// `x_B = B⁻¹ (b − Σ_N M_j x_j)`
    fn compute_basics(&mut self) {
        let m = self.m;
        let mut rhs = self.b.clone();
        for j in 0..self.n + self.m {
            if self.state[j] != BasisStatus::Basic && self.x[j] != T::zero() {
                for (r, v) in rhs.iter_mut().enumerate() {
                    let e = self.col_entry(j, r);
                    if e != T::zero() {
                        *v = *v - e * self.x[j];
                    }
                }
            }
        }
        for p in 0..m {
            let v: T = (0..m).map(|r| self.binv[p * m + r] * rhs[r]).sum();
            self.x[self.head[p]] = v;
        }
    }

    fn infeasibility(&self, j: usize) -> T {
        let v = self.x[j];
        if v < self.lo[j] - self.tol.primal {
            -T::one()
        } else if v > self.hi[j] + self.tol.primal {
            T::one()
        } else {
            T::zero()
        }
    }

    fn duals(&self, cb: &[T]) -> Vec<T> {
        let m = self.m;
        (0..m)
            .map(|r| (0..m).map(|p| cb[p] * self.binv[p * m + r]).sum())
            .collect()
    }

    fn run(mut self, model: &MipModel<T>, extra: &[LinearRow<T>]) -> LpResult<T> {
        let (m, n) = (self.m, self.n);
        let zero = T::zero();
        let mut iterations = 0usize;
        let mut since_refactor = 0usize;
        let mut degenerate = 0usize;
        loop {
            if since_refactor >= self.opts.refactor_every {
                if !self.refactor() {
                    return self.finish(LpOutcome::Stalled, iterations);
                }
                self.compute_basics();
                since_refactor = 0;
            }
            let cb_phase1: Vec<T> = self.head.iter().map(|&j| self.infeasibility(j)).collect();
            let phase = if cb_phase1.iter().any(|&c| c != zero) { Phase::One } else { Phase::Two };
            let cb: Vec<T> = match phase {
                Phase::One => cb_phase1,
                Phase::Two => self.head.iter().map(|&j| if j < n { self.cost[j] } else { zero }).collect(),
            };
            let pi = self.duals(&cb);

            let bland = degenerate >= self.opts.degeneracy_streak;
            let mut entering: Option<(usize, T)> = None;
            for j in 0..n + m {
                let st = self.state[j];
                if st == BasisStatus::Basic {
                    continue;
                }
                let cj = if phase == Phase::Two && j < n { self.cost[j] } else { zero };
                let rc = cj - self.dot_col(&pi, j);
                let eligible = match st {
                    BasisStatus::AtLower => rc < -self.tol.dual && self.hi[j] > self.lo[j],
                    BasisStatus::AtUpper => rc > self.tol.dual && self.hi[j] > self.lo[j],
                    BasisStatus::Free => rc.abs() > self.tol.dual,
                    BasisStatus::Basic => false,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    entering = Some((j, rc));
                    break;
                }
                if entering.map_or(true, |(_, best)| rc.abs() > best.abs()) {
                    entering = Some((j, rc));
                }
            }

            let Some((q, rc_q)) = entering else {
                return match phase {
                    Phase::One => {
                        let big = pi.iter().fold(T::one(), |m, g| m.max(g.abs()));
                        let noise = T::epsilon() * T::lit(1024.0) * big;
                        let gamma = pi.into_iter().map(|g| if g > noise { g } else { zero }).collect();
                        let ray = FarkasRay::from_gamma(gamma, model, extra);
                        self.finish(LpOutcome::Infeasible(ray), iterations)
                    }
                    Phase::Two => {
                        let primal = self.x[..n].to_vec();
                        let objective = primal.iter().zip(self.cost).map(|(&x, &c)| x * c).sum();
                        let reduced_costs = (0..n).map(|j| self.cost[j] - self.dot_col(&pi, j)).collect();
                        let sol = LpSolution { primal, objective, duals: pi, reduced_costs };
                        self.finish(LpOutcome::Optimal(sol), iterations)
                    }
                };
            };
            if iterations >= self.opts.iteration_limit {
                return self.finish(LpOutcome::Stalled, iterations);
            }
            iterations += 1;

            let sigma = if rc_q < zero { T::one() } else { -T::one() };
            let alpha = self.ftran(q);

            // ratio test
            let mut step = self.hi[q] - self.lo[q];
            let mut leave: Option<(usize, T)> = None;
            for p in 0..m {
                if alpha[p].abs() <= self.tol.pivot {
                    continue;
                }
                let j = self.head[p];
                let delta = -sigma * alpha[p];
                let v = self.x[j];
                let below = v < self.lo[j] - self.tol.primal;
                let above = v > self.hi[j] + self.tol.primal;
                let target = if delta > zero {
                    if above {
                        continue;
                    } else if below {
                        self.lo[j]
                    } else {
                        self.hi[j]
                    }
                } else if below {
                    continue;
                } else if above {
                    self.hi[j]
                } else {
                    self.lo[j]
                };
                if !target.is_finite() {
                    continue;
                }
                let ratio = ((target - v) / delta).max(zero);
                let better = match leave {
                    None => ratio < step || !step.is_finite(),
                    Some((lp, _)) => {
                        if bland {
                            ratio < step || (ratio == step && j < self.head[lp])
                        } else {
                            ratio < step - self.tol.zero
                                || (ratio <= step + self.tol.zero && alpha[p].abs() > alpha[lp].abs())
                        }
                    }
                };
                if better {
                    step = ratio;
                    leave = Some((p, target));
                }
            }

            if !step.is_finite() {
                return match phase {
                    Phase::Two => {
                        let mut ray = vec![zero; n + m];
                        ray[q] = sigma;
                        for p in 0..m {
                            ray[self.head[p]] = -sigma * alpha[p];
                        }
                        ray.truncate(n);
                        let point = self.x[..n].to_vec();
                        self.finish(LpOutcome::Unbounded { point, ray }, iterations)
                    }
                    Phase::One => self.finish(LpOutcome::Stalled, iterations),
                };
            }

            if step <= self.tol.primal {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.x[q] = self.x[q] + sigma * step;
            for p in 0..m {
                let j = self.head[p];
                self.x[j] = self.x[j] - sigma * alpha[p] * step;
            }

            match leave {
                None => {
                    // bound flip of the entering column
                    let (st, val) = if sigma > zero {
                        (BasisStatus::AtUpper, self.hi[q])
                    } else {
                        (BasisStatus::AtLower, self.lo[q])
                    };
                    self.state[q] = st;
                    self.x[q] = val;
                }
                Some((r, target)) => {
                    let j = self.head[r];
                    self.x[j] = target;
                    self.state[j] = if target == self.lo[j] { BasisStatus::AtLower } else { BasisStatus::AtUpper };
                    self.head[r] = q;
                    self.state[q] = BasisStatus::Basic;
                    let piv = alpha[r];
                    for k in 0..m {
                        self.binv[r * m + k] = self.binv[r * m + k] / piv;
                    }
                    for p in 0..m {
                        if p != r && alpha[p] != zero {
                            let f = alpha[p];
                            for k in 0..m {
                                self.binv[p * m + k] = self.binv[p * m + k] - f * self.binv[r * m + k];
                            }
                        }
                    }
                    since_refactor += 1;
                }
            }
        }
    }

    fn finish(self, outcome: LpOutcome<T>, iterations: usize) -> LpResult<T> {
        let basis = match outcome {
            LpOutcome::Stalled => None,
            _ => Some(Basis { status: self.state }),
        };
        LpResult { outcome, basis, iterations }
    }
}

/// Which Farkas condition failed worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarkasViolation {
    GammaSign,
    LowerMultiplierSign,
    UpperMultiplierSign,
    /// `γᵀA + r̲ + r̄ ≤ 0` fails in this column.
    DualFeasibility(usize),
    /// `r̲`/`r̄` differ from the unbounded-ray form in this column.
    RayForm(usize),
    /// `γᵀb + r̲ᵀℓ′ + r̄ᵀu′ > 0` fails.
    StrictInequality,
    Dimension,
}

impl std::fmt::Display for FarkasViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::GammaSign => write!(f, "γ sign"),
            Self::LowerMultiplierSign => write!(f, "r̲ sign"),
            Self::UpperMultiplierSign => write!(f, "r̄ sign"),
            Self::DualFeasibility(i) => write!(f, "γᵀA + r̲ + r̄ ≤ 0 in column {i}"),
            Self::RayForm(i) => write!(f, "unbounded-ray form in column {i}"),
            Self::StrictInequality => write!(f, "F₂ strict inequality"),
            Self::Dimension => write!(f, "dimension"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCheck<T> {
    pub valid: bool,
    /// Largest violation after normalizing the ray to unit max-norm.
    pub max_violation: T,
    pub worst: Option<FarkasViolation>,
    /// Normalized `γᵀb + r̲ᵀℓ′ + r̄ᵀu′`.
    pub margin: T,
}

/// Checks every Farkas condition of `ray` against the rows and box, scale-free.
pub fn validate_farkas<T: Scalar>(
    ray: &FarkasRay<T>,
    model: &MipModel<T>,
    extra_rows: &[LinearRow<T>],
    bounds: &LocalBounds<T>,
    tol: T,
) -> FarkasCheck<T> {
    let n = model.num_vars();
    let m = model.num_rows() + extra_rows.len();
    if ray.gamma.len() != m || ray.rlow.len() != n || ray.rupp.len() != n || bounds.len() != n {
        return FarkasCheck {
            valid: false,
            max_violation: T::infinity(),
            worst: Some(FarkasViolation::Dimension),
            margin: T::zero(),
        };
    }
    let scale = ray
        .gamma
        .iter()
        .chain(&ray.rlow)
        .chain(&ray.rupp)
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale == T::zero() {
        return FarkasCheck {
            valid: false,
            max_violation: T::infinity(),
            worst: Some(FarkasViolation::StrictInequality),
            margin: T::zero(),
        };
    }
    let mut worst: Option<FarkasViolation> = None;
    let mut max_violation = T::zero();
    let mut note = |v: T, what: FarkasViolation| {
        let v = v / scale;
        if v > max_violation {
            max_violation = v;
            worst = Some(what);
        }
    };
    for &g in &ray.gamma {
        note(-g, FarkasViolation::GammaSign);
    }
    for i in 0..n {
        note(-ray.rlow[i], FarkasViolation::LowerMultiplierSign);
        note(ray.rupp[i], FarkasViolation::UpperMultiplierSign);
    }
    let agg = aggregate(&ray.gamma, model, extra_rows);
    for i in 0..n {
        note(agg[i] + ray.rlow[i] + ray.rupp[i], FarkasViolation::DualFeasibility(i));
        let form = (ray.rlow[i] - (-agg[i]).max(T::zero()))
            .abs()
            .max((ray.rupp[i] - (-agg[i]).min(T::zero())).abs());
        note(form, FarkasViolation::RayForm(i));
    }
    let margin = ray.margin(model, extra_rows, bounds) / scale;
    let mut valid = max_violation <= tol;
    if !(margin > tol) {
        valid = false;
        if max_violation <= tol {
            worst = Some(FarkasViolation::StrictInequality);
            max_violation = if margin.is_nan() { T::infinity() } else { tol - margin };
        }
    }
    FarkasCheck { valid, max_violation, worst, margin }
}
