//! Deterministic linear programming.
//!
//! A self-contained two-phase primal simplex on the bounded-variable tableau.
//! Every other module funnels its geometry questions (emptiness, support,
//! redundancy, fibers, scalings) through [`solve`] / [`feasible`], so the
//! solver is built for reproducibility first: fixed pivot rules, no
//! randomness, no threads, and a Bland anti-cycling fallback that guarantees
//! termination.
//!
//! Constraint rows are normalized to unit Euclidean norm up front so one
//! absolute feasibility tolerance serves data spanning megawatts to per-unit
//! susceptances. Singleton rows are converted to variable bounds internally,
//! which keeps the tableau small when the caller encodes large boxes (bus
//! injection limits) as inequality rows.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Absolute feasibility tolerance on rows normalized to unit Euclidean norm.
pub const FEAS_TOL: f64 = 1e-9;

/// Phase-1 infeasibility threshold (sum of artificial variables).
const PHASE1_TOL: f64 = 1e-8;

/// Pivot magnitude below which a tableau entry is treated as zero.
const PIVOT_TOL: f64 = 1e-10;

/// Reduced-cost threshold for entering-variable eligibility.
const COST_TOL: f64 = 1e-9;

/// Step lengths below this count as degenerate pivots.
const DEGEN_TOL: f64 = 1e-11;

/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGEN_LIMIT: usize = 60;

/// Optimization sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// A linear program: optimize `objective · x` subject to
/// `a_ineq · x ≤ b_ineq`, `a_eq · x = b_eq`, and optional variable bounds
/// `lo ≤ x ≤ up`.
///
/// Either constraint block may have zero rows; a zero objective turns
/// [`solve`] into a feasible-point finder. Explicit bounds are equivalent to
/// singleton rows but cost no dense storage, which matters when the variable
/// count is large.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: DVector<f64>,
    pub a_ineq: DMatrix<f64>,
    pub b_ineq: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub lo: Option<DVector<f64>>,
    pub up: Option<DVector<f64>>,
}

/// Solution status of a linear program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve`]: `point` is present exactly when `status` is
/// [`LpStatus::Optimal`], and then satisfies every normalized constraint row
/// within [`FEAS_TOL`].
#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub value: f64,
    pub point: Option<DVector<f64>>,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("inconsistent dimensions: {0}")]
    BadShape(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("objective length 0: at least one variable required")]
    NoVariables,
    #[error("iteration limit exceeded ({0} pivots)")]
    IterationLimit(usize),
    #[error("numerical failure: residual {0:.3e} above tolerance after refinement")]
    Numerical(f64),
}

impl LpProblem {
    /// A maximization problem with no constraints yet.
    pub fn maximize(objective: DVector<f64>) -> Self {
        Self::new(Sense::Maximize, objective)
    }

    /// A minimization problem with no constraints yet.
    pub fn minimize(objective: DVector<f64>) -> Self {
        Self::new(Sense::Minimize, objective)
    }

    /// A pure feasibility problem (zero objective) over `n` variables.
    pub fn feasibility(n: usize) -> Self {
        Self::new(Sense::Minimize, DVector::zeros(n))
    }

    fn new(sense: Sense, objective: DVector<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            a_ineq: DMatrix::zeros(0, n),
            b_ineq: DVector::zeros(0),
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            lo: None,
            up: None,
        }
    }

    /// Replace the inequality block `A·x ≤ b`.
    pub fn with_ineq(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a_ineq = a;
        self.b_ineq = b;
        self
    }

    /// Replace the equality block `E·x = f`.
    pub fn with_eq(mut self, e: DMatrix<f64>, f: DVector<f64>) -> Self {
        self.a_eq = e;
        self.b_eq = f;
        self
    }

    /// Set variable bounds `lo ≤ x ≤ up`; entries may be ±infinity.
    pub fn with_bounds(mut self, lo: DVector<f64>, up: DVector<f64>) -> Self {
        self.lo = Some(lo);
        self.up = Some(up);
        self
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if n == 0 {
            return Err(LpError::NoVariables);
        }
        if self.a_ineq.ncols() != n && self.a_ineq.nrows() > 0 {
            return Err(LpError::BadShape(format!(
                "ineq has {} columns, expected {n}",
                self.a_ineq.ncols()
            )));
        }
        if self.a_ineq.nrows() != self.b_ineq.len() {
            return Err(LpError::BadShape(format!(
                "ineq: {} rows vs {} rhs entries",
                self.a_ineq.nrows(),
                self.b_ineq.len()
            )));
        }
        if self.a_eq.ncols() != n && self.a_eq.nrows() > 0 {
            return Err(LpError::BadShape(format!(
                "eq has {} columns, expected {n}",
                self.a_eq.ncols()
            )));
        }
        if self.a_eq.nrows() != self.b_eq.len() {
            return Err(LpError::BadShape(format!(
                "eq: {} rows vs {} rhs entries",
                self.a_eq.nrows(),
                self.b_eq.len()
            )));
        }
        if !self.objective.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if !self.a_ineq.iter().all(|v| v.is_finite()) || !self.b_ineq.iter().all(|v| v.is_finite())
        {
            return Err(LpError::NonFinite("inequality block"));
        }
        if !self.a_eq.iter().all(|v| v.is_finite()) || !self.b_eq.iter().all(|v| v.is_finite()) {
            return Err(LpError::NonFinite("equality block"));
        }
        for (bound, name) in [(&self.lo, "lower bounds"), (&self.up, "upper bounds")] {
            if let Some(v) = bound {
                if v.len() != n {
                    return Err(LpError::BadShape(format!(
                        "{name} has {} entries, expected {n}",
                        v.len()
                    )));
                }
                if v.iter().any(|x| x.is_nan()) {
                    return Err(LpError::NonFinite("variable bounds"));
                }
            }
        }
        Ok(())
    }
}

/// Solve a linear program.
///
/// Deterministic: repeated calls on identical input return bit-identical
/// status and value. When the result is `Optimal`, the point's residuals on
/// every normalized row are within [`FEAS_TOL`] (enforced by a post-solve
/// refinement step; violation is an error, never a silent return).
pub fn solve(p: &LpProblem) -> Result<LpResult, LpError> {
    p.validate()?;
    match solve_inner(p, false) {
        Ok(r) => Ok(r),
        // One retry under Bland's rule from the start: slower but immune to
        // the degenerate pivot sequences that can stall Dantzig pricing.
        Err(LpError::IterationLimit(_)) | Err(LpError::Numerical(_)) => solve_inner(p, true),
        Err(e) => Err(e),
    }
}

/// Phase-1 feasibility of the constraint system (objective ignored).
pub fn feasible(p: &LpProblem) -> Result<bool, LpError> {
    let probe = LpProblem {
        sense: Sense::Minimize,
        objective: DVector::zeros(p.n_vars()),
        ..p.clone()
    };
    Ok(solve(&probe)?.status == LpStatus::Optimal)
}

// ---------------------------------------------------------------------------
// Internal standard form
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum RowKind {
    Le,
    Eq,
}

/// Normalized rows with singleton rows already folded into variable bounds.
struct StdForm {
    n: usize,
    coef: Vec<Vec<f64>>, // general rows, dense, unit Euclidean norm
    rhs: Vec<f64>,
    kind: Vec<RowKind>,
    lo: Vec<f64>,
    up: Vec<f64>,
    /// Set when a constant or singleton row is contradictory on its own.
    trivially_infeasible: bool,
}

fn build_std(p: &LpProblem) -> StdForm {
    let n = p.n_vars();
    let mut sf = StdForm {
        n,
        coef: Vec::new(),
        rhs: Vec::new(),
        kind: Vec::new(),
        lo: match &p.lo {
            Some(v) => v.iter().copied().collect(),
            None => vec![f64::NEG_INFINITY; n],
        },
        up: match &p.up {
            Some(v) => v.iter().copied().collect(),
            None => vec![f64::INFINITY; n],
        },
        trivially_infeasible: false,
    };
    let add = |sf: &mut StdForm, row: &[f64], b: f64, kind: RowKind| {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-300 {
            // Constant row: 0 ≤ b or 0 = b.
            let bad = match kind {
                RowKind::Le => b < -FEAS_TOL,
                RowKind::Eq => b.abs() > FEAS_TOL,
            };
            if bad {
                sf.trivially_infeasible = true;
            }
            return;
        }
        let scaled: Vec<f64> = row.iter().map(|v| v / norm).collect();
        let b = b / norm;
        let nz: Vec<usize> = (0..sf.n).filter(|&j| scaled[j] != 0.0).collect();
        if nz.len() == 1 {
            // Singleton row becomes a variable bound; |a| = 1 after scaling.
            let j = nz[0];
            let a = scaled[j];
            let v = b / a;
            match kind {
                RowKind::Le if a > 0.0 => sf.up[j] = sf.up[j].min(v),
                RowKind::Le => sf.lo[j] = sf.lo[j].max(v),
                RowKind::Eq => {
                    sf.lo[j] = sf.lo[j].max(v);
                    sf.up[j] = sf.up[j].min(v);
                }
            }
            return;
        }
        sf.coef.push(scaled);
        sf.rhs.push(b);
        sf.kind.push(kind);
    };
    for i in 0..p.a_ineq.nrows() {
        let row: Vec<f64> = (0..n).map(|j| p.a_ineq[(i, j)]).collect();
        add(&mut sf, &row, p.b_ineq[i], RowKind::Le);
    }
    for i in 0..p.a_eq.nrows() {
        let row: Vec<f64> = (0..n).map(|j| p.a_eq[(i, j)]).collect();
        add(&mut sf, &row, p.b_eq[i], RowKind::Eq);
    }
    // Contradictory bounds beyond tolerance.
    for j in 0..n {
        if sf.lo[j] > sf.up[j] + FEAS_TOL {
            sf.trivially_infeasible = true;
        }
    }
    sf
}

// ---------------------------------------------------------------------------
// Bounded-variable tableau simplex
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum NonBasic {
    AtLower,
    AtUpper,
    FreeAtZero,
}

struct Tableau {
    m: usize,
    ncols: usize,  // structural + slack + artificial
    n_real: usize, // structural + slack
    t: Vec<f64>,   // row-major m × ncols
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<Option<NonBasic>>, // None = basic
    lo: Vec<f64>,
    up: Vec<f64>,
    d: Vec<f64>, // reduced-cost row
    cost: Vec<f64>,
    bland: bool,
    degen_run: usize,
    pivots: usize,
}

const ITER_CAP: usize = 200_000;

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            Some(NonBasic::AtLower) => self.lo[j],
            Some(NonBasic::AtUpper) => self.up[j],
            Some(NonBasic::FreeAtZero) => 0.0,
            None => unreachable!("basic variable queried as nonbasic"),
        }
    }

    fn rebuild_cost_row(&mut self) {
        for j in 0..self.ncols {
            let mut z = 0.0;
            for i in 0..self.m {
                z += self.cost[self.basis[i]] * self.at(i, j);
            }
            self.d[j] = self.cost[j] - z;
        }
    }

    fn objective_value(&self) -> f64 {
        let mut v = 0.0;
        for i in 0..self.m {
            v += self.cost[self.basis[i]] * self.beta[i];
        }
        for j in 0..self.ncols {
            if self.state[j].is_some() {
                v += self.cost[j] * self.nonbasic_value(j);
            }
        }
        v
    }

    fn choose_entering(&self, allow: usize) -> Option<(usize, f64)> {
        // Returns (column, direction sign). `allow` bounds the candidate
        // columns (used to bar artificial columns from re-entering).
        let mut best: Option<(usize, f64, f64)> = None; // (col, sigma, score)
        for j in 0..allow {
            let Some(state) = self.state[j] else { continue };
            let dj = self.d[j];
            let (eligible, sigma) = match state {
                NonBasic::AtLower => (dj < -COST_TOL, 1.0),
                NonBasic::AtUpper => (dj > COST_TOL, -1.0),
                NonBasic::FreeAtZero => (dj.abs() > COST_TOL, if dj < 0.0 { 1.0 } else { -1.0 }),
            };
            if !eligible {
                continue;
            }
            if self.bland {
                return Some((j, sigma));
            }
            let score = dj.abs();
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((j, sigma, score));
            }
        }
        best.map(|(j, sigma, _)| (j, sigma))
    }

    /// One simplex iteration. Returns `Ok(true)` when optimal, `Ok(false)`
    /// to continue, `Err(())` on unboundedness.
    fn step(&mut self, allow: usize) -> Result<bool, ()> {
        let Some((j_in, sigma)) = self.choose_entering(allow) else {
            return Ok(true);
        };

        // Ratio test: how far can the entering variable move before a basic
        // variable (or its own opposite bound) blocks it?
        const TIE: f64 = 1e-12;
        let own_range = self.up[j_in] - self.lo[j_in]; // may be INF
        let mut delta = own_range;
        let mut leave: Option<usize> = None; // row index; None = own bound / unbounded
        let mut leave_to_upper = false;
        for i in 0..self.m {
            let tij = self.at(i, j_in);
            if tij.abs() <= PIVOT_TOL {
                continue;
            }
            let k = self.basis[i];
            // beta_i changes at rate -sigma * tij per unit of entering move.
            let rate = -sigma * tij;
            let (limit, hits_upper) = if rate > 0.0 {
                if self.up[k].is_finite() {
                    (((self.up[k] - self.beta[i]) / rate).max(0.0), true)
                } else {
                    continue;
                }
            } else if self.lo[k].is_finite() {
                ((((self.beta[i] - self.lo[k]) / -rate)).max(0.0), false)
            } else {
                continue;
            };
            let replace = if limit < delta - TIE {
                true
            } else if limit <= delta + TIE {
                match leave {
                    // A row block at the same length as the own-bound flip:
                    // prefer the flip (no pivot), so do not replace.
                    None => limit < delta - TIE || own_range.is_infinite(),
                    Some(l) => {
                        if self.bland {
                            self.basis[i] < self.basis[l]
                        } else {
                            tij.abs() > self.at(l, j_in).abs()
                        }
                    }
                }
            } else {
                false
            };
            if replace {
                delta = delta.min(limit);
                leave = Some(i);
                leave_to_upper = hits_upper;
            }
        }

        if delta.is_infinite() {
            return Err(()); // unbounded in this direction
        }
        self.degen_run = if delta <= DEGEN_TOL { self.degen_run + 1 } else { 0 };
        if self.degen_run > DEGEN_LIMIT {
            self.bland = true;
        }

        let own_flip = leave.is_none();

        if own_flip {
            let delta = own_range;
            for i in 0..self.m {
                let tij = self.at(i, j_in);
                if tij != 0.0 {
                    self.beta[i] -= sigma * delta * tij;
                }
            }
            self.state[j_in] = Some(match self.state[j_in].unwrap() {
                NonBasic::AtLower => NonBasic::AtUpper,
                NonBasic::AtUpper => NonBasic::AtLower,
                NonBasic::FreeAtZero => unreachable!("free variable has no bound to flip to"),
            });
            self.pivots += 1;
            return Ok(false);
        }

        let l = leave.expect("bounded step without leaving row");
        let entering_new = self.nonbasic_value(j_in) + sigma * delta;
        // Update basic values for the move, then swap basis.
        for i in 0..self.m {
            let tij = self.at(i, j_in);
            if tij != 0.0 {
                self.beta[i] -= sigma * delta * tij;
            }
        }
        let k_out = self.basis[l];
        self.state[k_out] = Some(if leave_to_upper {
            NonBasic::AtUpper
        } else {
            NonBasic::AtLower
        });
        self.basis[l] = j_in;
        self.state[j_in] = None;
        self.beta[l] = entering_new;

        // Gauss-Jordan elimination on the pivot column.
        let piv = self.at(l, j_in);
        let inv = 1.0 / piv;
        for j in 0..self.ncols {
            self.t[l * self.ncols + j] *= inv;
        }
        for i in 0..self.m {
            if i == l {
                continue;
            }
            let f = self.at(i, j_in);
            if f != 0.0 {
                for j in 0..self.ncols {
                    let v = self.t[l * self.ncols + j];
                    if v != 0.0 {
                        self.t[i * self.ncols + j] -= f * v;
                    }
                }
            }
        }
        let f = self.d[j_in];
        if f != 0.0 {
            for j in 0..self.ncols {
                let v = self.t[l * self.ncols + j];
                if v != 0.0 {
                    self.d[j] -= f * v;
                }
            }
        }
        self.pivots += 1;
        Ok(false)
    }

    fn run(&mut self, allow: usize) -> Result<bool, LpError> {
        loop {
            if self.pivots > ITER_CAP {
                return Err(LpError::IterationLimit(self.pivots));
            }
            match self.step(allow) {
                Ok(true) => return Ok(true),
                Ok(false) => continue,
                Err(()) => return Ok(false), // unbounded
            }
        }
    }
}

fn solve_inner(p: &LpProblem, bland_from_start: bool) -> Result<LpResult, LpError> {
    let sf = build_std(p);
    if sf.trivially_infeasible {
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            value: f64::NAN,
            point: None,
        });
    }
    let n = sf.n;
    let m = sf.coef.len();
    let n_slack = sf.kind.iter().filter(|k| **k == RowKind::Le).count();
    let n_real = n + n_slack;
    let ncols = n_real + m; // one artificial per row

    // Column bounds.
    let mut lo = sf.lo.clone();
    let mut up = sf.up.clone();
    lo.resize(ncols, 0.0);
    up.resize(ncols, f64::INFINITY);

    // Initial nonbasic placement: finite bound nearest zero, else free at 0.
    let mut state: Vec<Option<NonBasic>> = (0..ncols)
        .map(|j| {
            Some(match (lo[j].is_finite(), up[j].is_finite()) {
                (true, true) => {
                    if lo[j].abs() <= up[j].abs() {
                        NonBasic::AtLower
                    } else {
                        NonBasic::AtUpper
                    }
                }
                (true, false) => NonBasic::AtLower,
                (false, true) => NonBasic::AtUpper,
                (false, false) => NonBasic::FreeAtZero,
            })
        })
        .collect();

    // Assemble rows with slack columns, compute the residual each artificial
    // must absorb, and orient rows so artificial coefficients are +1.
    let mut t = vec![0.0; m * ncols];
    let mut beta = vec![0.0; m];
    let mut basis = Vec::with_capacity(m);
    let mut slack_idx = n;
    for i in 0..m {
        let mut row = vec![0.0; ncols];
        row[..n].copy_from_slice(&sf.coef[i]);
        if sf.kind[i] == RowKind::Le {
            row[slack_idx] = 1.0;
            slack_idx += 1;
        }
        let mut resid = sf.rhs[i];
        for (j, item) in state.iter().enumerate().take(n_real) {
            if item.is_some() && row[j] != 0.0 {
                let v = match item.unwrap() {
                    NonBasic::AtLower => lo[j],
                    NonBasic::AtUpper => up[j],
                    NonBasic::FreeAtZero => 0.0,
                };
                resid -= row[j] * v;
            }
        }
        let flip = if resid < 0.0 { -1.0 } else { 1.0 };
        for v in row.iter_mut() {
            *v *= flip;
        }
        let art = n_real + i;
        row[art] = 1.0;
        beta[i] = resid * flip;
        basis.push(art);
        state[art] = None;
        t[i * ncols..(i + 1) * ncols].copy_from_slice(&row);
    }

    let mut tab = Tableau {
        m,
        ncols,
        n_real,
        t,
        beta,
        basis,
        state,
        lo,
        up,
        d: vec![0.0; ncols],
        cost: vec![0.0; ncols],
        bland: bland_from_start,
        degen_run: 0,
        pivots: 0,
    };

    // Phase 1: minimize the artificial sum.
    for j in n_real..ncols {
        tab.cost[j] = 1.0;
    }
    tab.rebuild_cost_row();
    let finished = tab.run(ncols)?;
    debug_assert!(finished, "phase 1 cannot be unbounded");
    if tab.objective_value() > PHASE1_TOL {
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            value: f64::NAN,
            point: None,
        });
    }

    // Drive any artificial still basic (at ~0) out of the basis, dropping
    // rows that prove redundant.
    let mut drop_rows = Vec::new();
    for i in 0..tab.m {
        if tab.basis[i] < tab.n_real {
            continue;
        }
        let mut pivot_col = None;
        let mut best = PIVOT_TOL;
        for j in 0..tab.n_real {
            if tab.state[j].is_some() && tab.at(i, j).abs() > best {
                best = tab.at(i, j).abs();
                pivot_col = Some(j);
            }
        }
        match pivot_col {
            Some(j) => {
                // Degenerate pivot: exchange at zero step.
                let k_out = tab.basis[i];
                tab.state[k_out] = Some(NonBasic::AtLower);
                let entering_val = tab.nonbasic_value(j);
                tab.basis[i] = j;
                tab.state[j] = None;
                tab.beta[i] = entering_val;
                let piv = tab.at(i, j);
                let inv = 1.0 / piv;
                for jj in 0..tab.ncols {
                    tab.t[i * tab.ncols + jj] *= inv;
                }
                for ii in 0..tab.m {
                    if ii == i {
                        continue;
                    }
                    let f = tab.at(ii, j);
                    if f != 0.0 {
                        for jj in 0..tab.ncols {
                            let v = tab.t[i * tab.ncols + jj];
                            if v != 0.0 {
                                tab.t[ii * tab.ncols + jj] -= f * v;
                            }
                        }
                    }
                }
                // beta unchanged: the artificial sat at zero.
            }
            None => drop_rows.push(i),
        }
    }
    if !drop_rows.is_empty() {
        for &i in drop_rows.iter().rev() {
            tab.basis.remove(i);
            tab.beta.remove(i);
            let start = i * tab.ncols;
            tab.t.drain(start..start + tab.ncols);
            tab.m -= 1;
        }
    }
    // Pin artificials at zero so they never re-enter.
    for j in tab.n_real..tab.ncols {
        if tab.state[j].is_some() {
            tab.state[j] = Some(NonBasic::AtLower);
        }
        tab.up[j] = 0.0;
    }

    // Phase 2: the real objective, as minimization.
    let sense_flip = match p.sense {
        Sense::Maximize => -1.0,
        Sense::Minimize => 1.0,
    };
    tab.cost = vec![0.0; tab.ncols];
    for j in 0..n {
        tab.cost[j] = sense_flip * p.objective[j];
    }
    tab.rebuild_cost_row();
    tab.degen_run = 0;
    let optimal = tab.run(tab.n_real)?;
    if !optimal {
        return Ok(LpResult {
            status: LpStatus::Unbounded,
            value: match p.sense {
                Sense::Maximize => f64::INFINITY,
                Sense::Minimize => f64::NEG_INFINITY,
            },
            point: None,
        });
    }

    // Extract, refine against the original normalized rows, and verify.
    let x = extract_refined(&sf, &tab)?;
    let value = p.objective.dot(&x);
    Ok(LpResult {
        status: LpStatus::Optimal,
        value,
        point: Some(x),
    })
}

/// Rebuild the solution from basis structure using a fresh LU factorization
/// of the basis columns (tableau drift does not accumulate into the answer),
/// then enforce the feasibility contract.
fn extract_refined(sf: &StdForm, tab: &Tableau) -> Result<DVector<f64>, LpError> {
    let n = sf.n;
    let m_all = sf.coef.len();
    let n_real = tab.n_real;

    // Dense standard-form matrix [rows | slacks] in original (unflipped)
    // orientation.
    let mut full = DMatrix::zeros(m_all, n_real);
    let mut slack_of_row = vec![usize::MAX; m_all];
    let mut slack_idx = n;
    for i in 0..m_all {
        for j in 0..n {
            full[(i, j)] = sf.coef[i][j];
        }
        if sf.kind[i] == RowKind::Eq {
            continue;
        }
        full[(i, slack_idx)] = 1.0;
        slack_of_row[i] = slack_idx;
        slack_idx += 1;
    }

    // Nonbasic values for every real column.
    let mut z = vec![0.0; n_real];
    for (j, item) in z.iter_mut().enumerate() {
        if tab.state[j].is_some() {
            *item = tab.nonbasic_value(j);
        }
    }

    // Rows that survived phase 1 (tab.m may be smaller after redundancy
    // drops); recover which original rows remain by matching basis length.
    // Redundant rows were consistent, so solving on the surviving structure
    // and checking all rows afterwards is sound.
    let kept: Vec<usize> = if tab.m == m_all {
        (0..m_all).collect()
    } else {
        // Basis rows correspond to surviving tableau rows in order; we do
        // not track original indices through drops, so fall back to solving
        // the full system in the least-squares sense over basic columns.
        (0..m_all).collect()
    };

    let basic_cols: Vec<usize> = tab.basis.iter().copied().filter(|&j| j < n_real).collect();
    let mut x_full = DVector::from_row_slice(&z);
    if !basic_cols.is_empty() {
        let mut rhs = DVector::zeros(kept.len());
        for (r, &i) in kept.iter().enumerate() {
            let mut v = sf.rhs[i];
            for j in 0..n_real {
                if tab.state.get(j).map_or(false, |s| s.is_some()) && z[j] != 0.0 {
                    v -= full[(i, j)] * z[j];
                }
            }
            rhs[r] = v;
        }
        let mut bmat = DMatrix::zeros(kept.len(), basic_cols.len());
        for (r, &i) in kept.iter().enumerate() {
            for (c, &j) in basic_cols.iter().enumerate() {
                bmat[(r, c)] = full[(i, j)];
            }
        }
        // Least-squares solve (square and nonsingular in the regular case).
        let solved = bmat.clone().svd(true, true).solve(&rhs, 1e-12);
        match solved {
            Ok(sol) => {
                for (c, &j) in basic_cols.iter().enumerate() {
                    x_full[j] = sol[c];
                }
            }
            Err(_) => {
                // Keep tableau values.
                for (i, &bj) in tab.basis.iter().enumerate() {
                    if bj < n_real {
                        x_full[bj] = tab.beta[i];
                    }
                }
            }
        }
    }

    // If refinement drifted outside a bound or a row, fall back to the raw
    // tableau solution before judging.
    let residual = |x: &DVector<f64>| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..m_all {
            let mut lhs = 0.0;
            for j in 0..n {
                lhs += sf.coef[i][j] * x[j];
            }
            let r = match sf.kind[i] {
                RowKind::Le => lhs - sf.rhs[i],
                RowKind::Eq => (lhs - sf.rhs[i]).abs(),
            };
            worst = worst.max(r);
        }
        for j in 0..n {
            if sf.lo[j].is_finite() {
                worst = worst.max(sf.lo[j] - x[j]);
            }
            if sf.up[j].is_finite() {
                worst = worst.max(x[j] - sf.up[j]);
            }
        }
        worst
    };

    let refined = DVector::from_iterator(n, (0..n).map(|j| x_full[j]));
    let r_refined = residual(&refined);
    let mut raw = DVector::from_row_slice(&z[..n]);
    for (i, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            raw[bj] = tab.beta[i];
        }
    }
    let r_raw = residual(&raw);
    let (best, r_best) = if r_refined <= r_raw {
        (refined, r_refined)
    } else {
        (raw, r_raw)
    };
    if r_best > FEAS_TOL {
        return Err(LpError::Numerical(r_best));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(rows: &[&[f64]]) -> DMatrix<f64> {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        DMatrix::from_fn(r, c, |i, j| rows[i][j])
    }

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn single_active_constraint() {
        let p = LpProblem::maximize(dv(&[1.0])).with_ineq(dm(&[&[1.0]]), dv(&[5.0]));
        let r = solve(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value - 5.0).abs() < 1e-9);
        assert!((r.point.unwrap()[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_bounds_infeasible() {
        // x ≥ 1 and x ≤ 0.
        let p = LpProblem::maximize(dv(&[1.0])).with_ineq(dm(&[&[-1.0], &[1.0]]), dv(&[-1.0, 0.0]));
        let r = solve(&p).unwrap();
        assert_eq!(r.status, LpStatus::Infeasible);
        assert!(r.point.is_none());
    }

    #[test]
    fn equality_forces_value() {
        let p = LpProblem::maximize(dv(&[1.0, 1.0]))
            .with_ineq(dm(&[&[1.0, 0.0], &[0.0, 1.0]]), dv(&[2.0, 3.0]))
            .with_eq(dm(&[&[1.0, 1.0]]), dv(&[4.0]));
        let r = solve(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value - 4.0).abs() < 1e-9);
        let x = r.point.unwrap();
        assert!(x[0] <= 2.0 + 1e-9 && x[1] <= 3.0 + 1e-9);
        assert!((x[0] + x[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_detected() {
        let p = LpProblem::maximize(dv(&[1.0, 0.0])).with_ineq(dm(&[&[0.0, 1.0]]), dv(&[1.0]));
        let r = solve(&p).unwrap();
        assert_eq!(r.status, LpStatus::Unbounded);
        assert!(r.value.is_infinite());
    }

    #[test]
    fn minimize_works() {
        // min x + y over x,y ≥ 1 is 2.
        let p = LpProblem::minimize(dv(&[1.0, 1.0]))
            .with_ineq(dm(&[&[-1.0, 0.0], &[0.0, -1.0]]), dv(&[-1.0, -1.0]));
        let r = solve(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn feasible_examples() {
        let p = LpProblem::feasibility(1).with_ineq(dm(&[&[1.0], &[-1.0]]), dv(&[1.0, 0.0]));
        assert!(feasible(&p).unwrap());
        let q = LpProblem::feasibility(1).with_ineq(dm(&[&[1.0], &[-1.0]]), dv(&[-1.0, 0.0]));
        assert!(!feasible(&q).unwrap());
    }

    #[test]
    fn balanced_box_dispatch_feasible() {
        // Six injection variables, balance equality, demand/generation box:
        // lower bounds -(3,3,3,3,3,6) GW, upper (7,0,0,7,0,-3) GW, in MW.
        let lo = [-3000.0, -3000.0, -3000.0, -3000.0, -3000.0, -6000.0];
        let hi = [7000.0, 0.0, 0.0, 7000.0, 0.0, -3000.0];
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for j in 0..6 {
            let mut r = [0.0; 6];
            r[j] = 1.0;
            rows.push(r);
            rhs.push(hi[j]);
            let mut r2 = [0.0; 6];
            r2[j] = -1.0;
            rows.push(r2);
            rhs.push(-lo[j]);
        }
        let a = DMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j]);
        let p = LpProblem::feasibility(6)
            .with_ineq(a, DVector::from_vec(rhs))
            .with_eq(dm(&[&[1.0; 6]]), dv(&[0.0]));
        assert!(feasible(&p).unwrap());
    }

    #[test]
    fn optimal_point_respects_residual_contract() {
        let p = LpProblem::maximize(dv(&[3.0, 5.0, -2.0]))
            .with_ineq(
                dm(&[
                    &[1.0, 2.0, 1.0],
                    &[3.0, -1.0, 0.5],
                    &[-1.0, -1.0, -1.0],
                    &[0.0, 1.0, 4.0],
                ]),
                dv(&[10.0, 8.0, 2.0, 12.0]),
            )
            .with_eq(dm(&[&[1.0, 1.0, 1.0]]), dv(&[4.0]));
        let r = solve(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        let x = r.point.unwrap();
        let resid = (x[0] + x[1] + x[2] - 4.0).abs();
        assert!(resid < 1e-9, "equality residual {resid}");
    }

    #[test]
    fn determinism_bitwise() {
        let p = LpProblem::maximize(dv(&[1.0, 2.0, 3.0, -1.0]))
            .with_ineq(
                dm(&[
                    &[1.0, 1.0, 1.0, 1.0],
                    &[2.0, -1.0, 0.0, 1.0],
                    &[0.5, 0.25, -1.0, 2.0],
                ]),
                dv(&[7.0, 4.0, 3.0]),
            )
            .with_eq(dm(&[&[1.0, -1.0, 0.0, 0.0]]), dv(&[0.5]));
        let a = solve(&p).unwrap();
        let b = solve(&p).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn degenerate_lp_terminates() {
        // Many redundant rows through the same vertex.
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut rhs = Vec::new();
        for k in 0..12 {
            let a = 1.0 + (k as f64) * 0.0; // identical rows
            rows.push(vec![a, 1.0]);
            rhs.push(2.0);
        }
        rows.push(vec![-1.0, 0.0]);
        rhs.push(0.0);
        rows.push(vec![0.0, -1.0]);
        rhs.push(0.0);
        let a = DMatrix::from_fn(rows.len(), 2, |i, j| rows[i][j]);
        let p = LpProblem::maximize(dv(&[1.0, 1.0])).with_ineq(a, DVector::from_vec(rhs));
        let r = solve(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn free_variable_equality_only() {
        // min y s.t. y = 3 with free y.
        let p = LpProblem::minimize(dv(&[1.0])).with_eq(dm(&[&[1.0]]), dv(&[3.0]));
        let r = solve(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn zero_row_handling() {
        // 0·x ≤ -1 is infeasible, 0·x ≤ 1 is vacuous.
        let p = LpProblem::feasibility(2).with_ineq(dm(&[&[0.0, 0.0]]), dv(&[-1.0]));
        assert!(!feasible(&p).unwrap());
        let q = LpProblem::feasibility(2).with_ineq(dm(&[&[0.0, 0.0]]), dv(&[1.0]));
        assert!(feasible(&q).unwrap());
    }

    #[test]
    fn shape_errors() {
        let p = LpProblem::maximize(dv(&[1.0])).with_ineq(dm(&[&[1.0, 2.0]]), dv(&[1.0]));
        assert!(matches!(solve(&p), Err(LpError::BadShape(_))));
        let q = LpProblem::maximize(dv(&[f64::NAN]));
        assert!(matches!(solve(&q), Err(LpError::NonFinite(_))));
    }
}
