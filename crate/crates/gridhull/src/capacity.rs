//! Transfer-capacity methodology on top of the DC network model: corridor
//! (NTC) constraint sets, the optimal NTC scaling along a nominal direction,
//! verification that NTC bounds protect every line, aggregated set images,
//! the strongly feasible (universally dispatchable) set, per-point
//! feasibility reports, and TTC/NTC/ATC accounting.
//!
//! Conventions: corridor rows are one-sided (`corridor flow ≤ bound`);
//! bidirectional borders are modeled as two corridors with opposite signs.
//! Scaling LPs use non-strict `≥ limit` for the violated line, so bounds
//! derived from the optimal scaling keep every closed line constraint
//! satisfiable but never exceedable; [`verify_ntc`] adds [`VERIFY_EPS_MW`]
//! to separate touching a limit from exceeding it.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::lpsolve::{self, LpError, LpProblem, LpStatus};
use crate::netmodel::{
    generator_polyhedron, line_polyhedron, DcSolver, InjectionVector, NetError, NetworkModel,
    BALANCE_TOL,
};
use crate::polytope::{intersect, is_empty, PolyError, PolyUnion, Polyhedron};
use crate::project::{image_exact, AggregationMap, ProjError, SupportOracle};
use crate::setdiff::{region_diff, SetDiffError};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Strict-exceedance margin for [`verify_ntc`], MW: a line counts as
/// violated only if its flow can pass `limit + VERIFY_EPS_MW`.
pub const VERIFY_EPS_MW: f64 = 1e-6;

/// Violation slack above which the lazy line oracle adds a cut, MW.
const FLOW_CUT_TOL_MW: f64 = 1e-6;

/// Outer-loop cap for lazy cut generation within one support query.
const CUT_ROUNDS: usize = 64;

#[derive(Debug, Error)]
pub enum CapError {
    #[error("corridor '{1}' references unknown line id {0}")]
    UnknownLine(i64, String),
    #[error("bad corridor specification: {0}")]
    BadSpec(String),
    #[error("line id {0} can be violated under every corridor bound scaling")]
    Unprotectable(i64),
    #[error("injection vector is unbalanced by {0} MW")]
    Unbalanced(f64),
    #[error("negative capacity account field: {0}")]
    BadAccount(&'static str),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Proj(#[from] ProjError),
    #[error(transparent)]
    Diff(#[from] SetDiffError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// One directed corridor: a signed sum of line flows.
#[derive(Debug, Clone, PartialEq)]
pub struct Corridor {
    pub name: String,
    /// `(line id, coefficient)` with coefficients in {+1, −1}.
    pub terms: Vec<(i64, f64)>,
}

/// Corridor constraint set: `corridor flow ≤ bounds`, with a nominal
/// direction and weights for bound optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct NtcSpec {
    pub corridors: Vec<Corridor>,
    /// Bounds per corridor, MW.
    pub bounds: DVector<f64>,
    /// Nominal scaling direction, entrywise ≥ 0 with a positive entry.
    pub nominal: DVector<f64>,
    /// Objective weights for bound optimization.
    pub weights: DVector<f64>,
}

impl NtcSpec {
    /// Structural validation; does not touch the network.
    pub fn validate(&self) -> Result<(), CapError> {
        let c = self.corridors.len();
        for (v, name) in [
            (&self.bounds, "bounds"),
            (&self.nominal, "nominal"),
            (&self.weights, "weights"),
        ] {
            if v.len() != c {
                return Err(CapError::BadSpec(format!(
                    "{name} has {} entries for {c} corridors",
                    v.len()
                )));
            }
        }
        for corr in &self.corridors {
            if corr.terms.is_empty() {
                return Err(CapError::BadSpec(format!("corridor '{}' has no terms", corr.name)));
            }
            for &(id, coeff) in &corr.terms {
                if coeff != 1.0 && coeff != -1.0 {
                    return Err(CapError::BadSpec(format!(
                        "corridor '{}' line {id} has coefficient {coeff}, want ±1",
                        corr.name
                    )));
                }
            }
        }
        if self.nominal.iter().any(|&v| v < 0.0) || self.nominal.iter().all(|&v| v <= 0.0) {
            return Err(CapError::BadSpec(
                "nominal direction must be ≥ 0 with a positive entry".into(),
            ));
        }
        if self.bounds.iter().any(|v| !v.is_finite()) {
            return Err(CapError::BadSpec("bounds must be finite".into()));
        }
        Ok(())
    }
}

/// TTC decomposition inputs, all MW and nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityAccount {
    pub ttc: f64,
    pub trm: f64,
    pub ltc: f64,
    pub aac: f64,
}

/// Outcome of a per-point feasibility query.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    /// Some original-system dispatch realizes the point within all limits.
    pub feasible: bool,
    /// Every dispatch realizing the point respects all limits.
    pub strongly_feasible: bool,
    /// A realizing dispatch when `feasible`.
    pub witness: Option<InjectionVector>,
    /// `(line id, max attainable |flow| MW, limit MW)` for the worst line
    /// when strong feasibility fails.
    pub worst_line: Option<(i64, f64, f64)>,
}

// ---------------------------------------------------------------------------
// Corridor row assembly
// ---------------------------------------------------------------------------

fn line_index_map(net: &NetworkModel) -> HashMap<i64, usize> {
    net.lines.iter().enumerate().map(|(i, l)| (l.id, i)).collect()
}

/// One injection-space row per corridor: signed sums of ISF rows.
fn corridor_rows(
    net: &NetworkModel,
    solver: &DcSolver,
    corridors: &[Corridor],
) -> Result<Vec<DVector<f64>>, CapError> {
    let by_id = line_index_map(net);
    let mut rows = Vec::with_capacity(corridors.len());
    for corr in corridors {
        let mut row = DVector::zeros(net.n_bus());
        for &(id, coeff) in &corr.terms {
            let idx = *by_id
                .get(&id)
                .ok_or_else(|| CapError::UnknownLine(id, corr.name.clone()))?;
            row += coeff * solver.isf_row(idx);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Injections satisfying corridor bounds and generator constraints:
/// corridor rows first, then the generator box and balance.
pub fn ntc_polyhedron(net: &NetworkModel, spec: &NtcSpec) -> Result<Polyhedron, CapError> {
    spec.validate()?;
    let solver = DcSolver::new(net)?;
    let rows = corridor_rows(net, &solver, &spec.corridors)?;
    let n = net.n_bus();
    let mut a = DMatrix::zeros(rows.len(), n);
    for (i, r) in rows.iter().enumerate() {
        a.row_mut(i).copy_from(&r.transpose());
    }
    let corr = Polyhedron::from_ineq(a, spec.bounds.clone());
    Ok(intersect(&corr, &generator_polyhedron(net))?)
}

// ---------------------------------------------------------------------------
// Optimal corridor-bound scaling
// ---------------------------------------------------------------------------

/// Smallest scaling `k` of the nominal direction at which the signed flow on
/// one line can reach its limit: minimize `k` over dispatches `x` with
/// corridor flows ≤ `k·nominal`, `x` in the generator set, and
/// `sign·flow_line ≥ limit`. Infeasible means the line can never reach its
/// limit under generator constraints alone: `+∞`.
pub fn ntc_line_scaling(
    net: &NetworkModel,
    spec: &NtcSpec,
    line: usize,
    sign: f64,
) -> Result<f64, CapError> {
    spec.validate()?;
    let solver = DcSolver::new(net)?;
    let rows = corridor_rows(net, &solver, &spec.corridors)?;
    line_scaling(net, &solver, &rows, &spec.nominal, line, sign)
}

fn line_scaling(
    net: &NetworkModel,
    solver: &DcSolver,
    corr_rows: &[DVector<f64>],
    nominal: &DVector<f64>,
    line: usize,
    sign: f64,
) -> Result<f64, CapError> {
    let n = net.n_bus();
    let nc = corr_rows.len();
    // Variables (x, k); minimize k.
    let mut objective = DVector::zeros(n + 1);
    objective[n] = 1.0;
    let mut a = DMatrix::zeros(nc + 1, n + 1);
    let mut b = DVector::zeros(nc + 1);
    for (c, row) in corr_rows.iter().enumerate() {
        a.view_mut((c, 0), (1, n)).copy_from(&row.transpose());
        a[(c, n)] = -nominal[c];
    }
    // sign·flow_line ≥ limit  ⇔  −sign·isf·x ≤ −limit.
    let isf = solver.isf_row(line);
    for j in 0..n {
        a[(nc, j)] = -sign * isf[j];
    }
    b[nc] = -solver.limits()[line];

    let (lo, up) = net.injection_bounds();
    let mut lo_z = DVector::from_element(n + 1, f64::NEG_INFINITY);
    let mut up_z = DVector::from_element(n + 1, f64::INFINITY);
    for j in 0..n {
        lo_z[j] = lo[j];
        up_z[j] = up[j];
    }
    let mut balance = DMatrix::from_element(1, n + 1, 1.0);
    balance[(0, n)] = 0.0;

    let problem = LpProblem::minimize(objective)
        .with_ineq(a, b)
        .with_eq(balance, DVector::zeros(1))
        .with_bounds(lo_z, up_z);
    let res = lpsolve::solve(&problem)?;
    match res.status {
        LpStatus::Optimal => Ok(res.value),
        LpStatus::Infeasible => Ok(f64::INFINITY),
        LpStatus::Unbounded => Err(CapError::Unprotectable(net.lines[line].id)),
    }
}

/// Optimal scaling of the nominal direction: the minimum of
/// [`ntc_line_scaling`] over every line and both flow signs. Bounds
/// `k·nominal` then keep every dispatch inside all line limits while some
/// dispatch touches one. `+∞` when no line can ever bind.
pub fn ntc_max_scaling(net: &NetworkModel, spec: &NtcSpec) -> Result<f64, CapError> {
    spec.validate()?;
    let solver = DcSolver::new(net)?;
    let rows = corridor_rows(net, &solver, &spec.corridors)?;
    let mut k_star = f64::INFINITY;
    for line in 0..net.n_line() {
        for sign in [1.0, -1.0] {
            let k = line_scaling(net, &solver, &rows, &spec.nominal, line, sign)?;
            k_star = k_star.min(k);
        }
    }
    Ok(k_star)
}

/// Search seeded random nonnegative nominal directions: scale each to its
/// optimal bounds, discard candidates whose bounds fail [`verify_ntc`]
/// (scaling is always followed by verification — directions with an
/// unboundable scale or a numerically razor-thin domain are unusable), and
/// keep the verified candidate maximizing `weights · bounds`; ties keep the
/// earliest sample. Deterministic for a fixed seed.
pub fn ntc_direction_search(
    net: &NetworkModel,
    corridors: &[Corridor],
    sample_count: usize,
    weights: &DVector<f64>,
    seed: u64,
) -> Result<NtcSpec, CapError> {
    if sample_count == 0 {
        return Err(CapError::BadSpec("sample_count must be ≥ 1".into()));
    }
    if weights.len() != corridors.len() {
        return Err(CapError::BadSpec(format!(
            "weights has {} entries for {} corridors",
            weights.len(),
            corridors.len()
        )));
    }
    let solver = DcSolver::new(net)?;
    let rows = corridor_rows(net, &solver, corridors)?;
    let nc = corridors.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, NtcSpec)> = None;
    for _ in 0..sample_count {
        let mut nominal = DVector::from_fn(nc, |_, _| {
            // Box–Muller standard normal from two uniform draws.
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            ((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()).abs()
        });
        let norm = nominal.norm();
        if norm < 1e-9 {
            continue;
        }
        nominal /= norm;
        let mut k = f64::INFINITY;
        let mut unusable = false;
        'lines: for line in 0..net.n_line() {
            for sign in [1.0, -1.0] {
                match line_scaling(net, &solver, &rows, &nominal, line, sign) {
                    Ok(v) => k = k.min(v),
                    Err(e) if numerically_unusable(&e) => {
                        unusable = true;
                        break 'lines;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        if unusable || !k.is_finite() {
            continue;
        }
        let candidate = NtcSpec {
            corridors: corridors.to_vec(),
            bounds: k * &nominal,
            nominal,
            weights: weights.clone(),
        };
        let objective = weights.dot(&candidate.bounds);
        if best.as_ref().is_some_and(|(obj, _)| objective <= *obj) {
            continue;
        }
        match verify_ntc(net, &candidate) {
            Ok((true, _)) => best = Some((objective, candidate)),
            Ok((false, _)) => {}
            Err(e) if numerically_unusable(&e) => {}
            Err(e) => return Err(e),
        }
    }
    best.map(|(_, spec)| spec).ok_or_else(|| {
        CapError::BadSpec("no verifiable direction sampled; raise sample_count".into())
    })
}

/// Numerical trouble that condemns one sampled candidate (razor-thin
/// scaling domains) without invalidating the search as a whole.
fn numerically_unusable(e: &CapError) -> bool {
    matches!(
        e,
        CapError::Lp(LpError::Numerical(_) | LpError::IterationLimit(_))
    )
}

/// Check that the corridor bounds prevent every line violation: for each
/// line and sign, the system {corridor flows ≤ bounds, x in generator set,
/// signed flow ≥ limit + [`VERIFY_EPS_MW`]} must be infeasible. Returns the
/// overall verdict and the ids of lines that can still be overloaded.
pub fn verify_ntc(net: &NetworkModel, spec: &NtcSpec) -> Result<(bool, Vec<i64>), CapError> {
    spec.validate()?;
    let solver = DcSolver::new(net)?;
    let rows = corridor_rows(net, &solver, &spec.corridors)?;
    let n = net.n_bus();
    let nc = rows.len();
    let (lo, up) = net.injection_bounds();
    let lo = DVector::from_vec(lo);
    let up = DVector::from_vec(up);
    let mut violating = Vec::new();
    for line in 0..net.n_line() {
        let isf = solver.isf_row(line);
        let mut hit = false;
        for sign in [1.0, -1.0] {
            let mut a = DMatrix::zeros(nc + 1, n);
            let mut b = DVector::zeros(nc + 1);
            for (c, row) in rows.iter().enumerate() {
                a.row_mut(c).copy_from(&row.transpose());
                b[c] = spec.bounds[c];
            }
            for j in 0..n {
                a[(nc, j)] = -sign * isf[j];
            }
            b[nc] = -(solver.limits()[line] + VERIFY_EPS_MW);
            let problem = LpProblem::feasibility(n)
                .with_ineq(a, b)
                .with_eq(DMatrix::from_element(1, n, 1.0), DVector::zeros(1))
                .with_bounds(lo.clone(), up.clone());
            if lpsolve::feasible(&problem)? {
                hit = true;
            }
        }
        if hit {
            violating.push(net.lines[line].id);
        }
    }
    Ok((violating.is_empty(), violating))
}

// ---------------------------------------------------------------------------
// Aggregated sets
// ---------------------------------------------------------------------------

/// Exact aggregated images of the generator set, the corridor-constrained
/// set, and the jointly line- and generator-feasible set. Exact projection
/// is exponential in bus count; intended for small networks — large ones
/// should sample [`LineFlowOracle`] through the approximate projection.
pub fn mapped_sets(
    net: &NetworkModel,
    agg: &AggregationMap,
    spec: &NtcSpec,
) -> Result<(Polyhedron, Polyhedron, Polyhedron), CapError> {
    let pg = generator_polyhedron(net);
    let pl = line_polyhedron(net)?;
    let pgt = image_exact(&pg, agg)?;
    let pntct = image_exact(&ntc_polyhedron(net, spec)?, agg)?;
    let plt = image_exact(&intersect(&pg, &pl)?, agg)?;
    Ok((pgt, pntct, plt))
}

/// The strongly feasible aggregated set: aggregated points every realizing
/// dispatch of which respects all line limits. Computed as the aggregated
/// generator image minus the images of each line's violation set (one per
/// line and sign), so the result is a non-convex union in general. Empty is
/// a valid outcome.
pub fn strong_feasible_set(net: &NetworkModel, agg: &AggregationMap) -> Result<PolyUnion, CapError> {
    let solver = DcSolver::new(net)?;
    let pg = generator_polyhedron(net);
    let pgt = image_exact(&pg, agg)?;
    let mut images = Vec::new();
    for line in 0..net.n_line() {
        let isf = solver.isf_row(line);
        for sign in [1.0, -1.0] {
            // Dispatches overloading this line in this direction.
            let mut violation = pg.clone();
            let row: Vec<f64> = isf.iter().map(|v| -sign * v).collect();
            violation.push_ineq(&row, -solver.limits()[line]);
            if is_empty(&violation)? {
                continue;
            }
            images.push(image_exact(&violation, agg)?);
        }
    }
    Ok(region_diff(&pgt, &images)?)
}

/// Feasibility of one aggregated point: existence (some dispatch in the
/// generator and line sets realizes it) and universality (every realizing
/// generator-set dispatch respects all line limits).
pub fn check_feasible(
    net: &NetworkModel,
    agg: &AggregationMap,
    y: &DVector<f64>,
) -> Result<FeasibilityReport, CapError> {
    if y.len() != agg.n_regions {
        return Err(CapError::BadSpec(format!(
            "point has {} entries for {} regions",
            y.len(),
            agg.n_regions
        )));
    }
    let imbalance: f64 = y.iter().sum();
    if imbalance.abs() > BALANCE_TOL {
        return Err(CapError::Unbalanced(imbalance));
    }
    let t = agg.matrix();
    let pg = generator_polyhedron(net);
    let pl = line_polyhedron(net)?;
    let n = net.n_bus();

    // Fiber equalities: T x = y together with the generator-set balance row.
    let fiber_eq = |p: &Polyhedron| -> (DMatrix<f64>, DVector<f64>) {
        let ne = p.e.nrows();
        let mut e = DMatrix::zeros(ne + t.nrows(), n);
        e.view_mut((0, 0), (ne, n)).copy_from(&p.e);
        e.view_mut((ne, 0), (t.nrows(), n)).copy_from(&t);
        let mut f = DVector::zeros(ne + t.nrows());
        f.view_mut((0, 0), (ne, 1)).copy_from(&p.f);
        f.view_mut((ne, 0), (t.nrows(), 1)).copy_from(y);
        (e, f)
    };

    // Existence: a dispatch in PG ∩ PL mapping to y.
    let joint = intersect(&pg, &pl)?;
    let (e, f) = fiber_eq(&joint);
    let lp = LpProblem::feasibility(n)
        .with_ineq(joint.a.clone(), joint.b.clone())
        .with_eq(e, f);
    let res = lpsolve::solve(&lp)?;
    let (feasible, witness) = match res.status {
        LpStatus::Optimal => (true, res.point),
        _ => (false, None),
    };

    // Universality: per-line maxima over the generator-set fiber.
    let (e_pg, f_pg) = fiber_eq(&pg);
    let solver = DcSolver::new(net)?;
    let mut strongly = false;
    let mut worst: Option<(i64, f64, f64)> = None;
    let probe = LpProblem::feasibility(n)
        .with_ineq(pg.a.clone(), pg.b.clone())
        .with_eq(e_pg.clone(), f_pg.clone());
    if lpsolve::solve(&probe)?.status == LpStatus::Optimal {
        strongly = true;
        for line in 0..net.n_line() {
            let isf = solver.isf_row(line);
            let limit = solver.limits()[line];
            let mut reach = f64::NEG_INFINITY;
            for sign in [1.0, -1.0] {
                let lp = LpProblem::maximize(sign * &isf)
                    .with_ineq(pg.a.clone(), pg.b.clone())
                    .with_eq(e_pg.clone(), f_pg.clone());
                let res = lpsolve::solve(&lp)?;
                if res.status == LpStatus::Optimal {
                    reach = reach.max(res.value);
                }
            }
            let excess = reach - limit;
            if excess > VERIFY_EPS_MW {
                strongly = false;
                if worst.as_ref().map_or(true, |w| excess > w.1 - w.2) {
                    worst = Some((net.lines[line].id, reach, limit));
                }
            }
        }
    }
    Ok(FeasibilityReport {
        feasible,
        strongly_feasible: strongly,
        witness,
        worst_line: worst,
    })
}

// ---------------------------------------------------------------------------
// Capacity accounting
// ---------------------------------------------------------------------------

/// `(ntc, atc, clamped)`: net capacity = ttc − trm − ltc, available = net −
/// aac; negative intermediate results are clamped to zero and flagged.
pub fn capacity_account(a: &CapacityAccount) -> Result<(f64, f64, bool), CapError> {
    for (v, name) in [(a.ttc, "ttc"), (a.trm, "trm"), (a.ltc, "ltc"), (a.aac, "aac")] {
        if !(v >= 0.0) {
            return Err(CapError::BadAccount(name));
        }
    }
    let mut clamped = false;
    let mut ntc = a.ttc - a.trm - a.ltc;
    if ntc < 0.0 {
        ntc = 0.0;
        clamped = true;
    }
    let mut atc = ntc - a.aac;
    if atc < 0.0 {
        atc = 0.0;
        clamped = true;
    }
    Ok((ntc, atc, clamped))
}

// ---------------------------------------------------------------------------
// Lazy support oracle over the jointly feasible dispatch set
// ---------------------------------------------------------------------------

/// Support oracle for the jointly generator- and line-feasible dispatch set
/// that never materializes the full line block. Each query maximizes over
/// the generator set plus the line rows cut so far; overloaded lines at the
/// optimum contribute new rows until none are overloaded. Cuts accumulate
/// across queries, so a direction sweep pays only for lines that ever bind.
pub struct LineFlowOracle {
    solver: DcSolver,
    lo: DVector<f64>,
    up: DVector<f64>,
    cuts: RefCell<Vec<(usize, f64)>>,
    rows: RefCell<Vec<(DVector<f64>, f64)>>,
}

impl LineFlowOracle {
    pub fn new(net: &NetworkModel) -> Result<Self, CapError> {
        let solver = DcSolver::new(net)?;
        let (lo, up) = net.injection_bounds();
        Ok(Self {
            solver,
            lo: DVector::from_vec(lo),
            up: DVector::from_vec(up),
            cuts: RefCell::new(Vec::new()),
            rows: RefCell::new(Vec::new()),
        })
    }

    /// Number of line rows generated so far.
    pub fn n_cuts(&self) -> usize {
        self.cuts.borrow().len()
    }

    /// Find a dispatch realizing the aggregated injections `y` while
    /// respecting generator bounds, balance, and every line limit, without
    /// materializing the full line block — `None` when no such dispatch
    /// exists. Cuts discovered here feed the same cache as support queries.
    pub fn fiber_point(
        &self,
        agg: &AggregationMap,
        y: &DVector<f64>,
    ) -> Result<Option<DVector<f64>>, CapError> {
        let n = self.solver.n_bus();
        if agg.n_bus != n {
            return Err(CapError::BadSpec(format!(
                "aggregation covers {} buses, network has {n}",
                agg.n_bus
            )));
        }
        if y.len() != agg.n_regions {
            return Err(CapError::BadSpec(format!(
                "injection vector has {} entries, aggregation has {} regions",
                y.len(),
                agg.n_regions
            )));
        }
        let total: f64 = y.iter().sum();
        if total.abs() > BALANCE_TOL {
            return Err(CapError::Unbalanced(total));
        }
        let t = agg.matrix();
        let mut eq = DMatrix::zeros(1 + t.nrows(), n);
        eq.row_mut(0).fill(1.0);
        eq.rows_mut(1, t.nrows()).copy_from(&t);
        let mut rhs = DVector::zeros(1 + t.nrows());
        rhs.rows_mut(1, t.nrows()).copy_from(y);
        match self.cut_solve(&DVector::zeros(n), &eq, &rhs)? {
            CutSolve::Optimal(_, point) => Ok(Some(point)),
            CutSolve::Infeasible => Ok(None),
        }
    }

    /// Maximize `objective` over generator bounds + `eq` + cached line cuts,
    /// regenerating cuts until the optimum overloads no line.
    fn cut_solve(
        &self,
        objective: &DVector<f64>,
        eq_rows: &DMatrix<f64>,
        eq_rhs: &DVector<f64>,
    ) -> Result<CutSolve, ProjError> {
        let n = self.solver.n_bus();
        for _ in 0..CUT_ROUNDS {
            let (a, b) = {
                let rows = self.rows.borrow();
                let mut a = DMatrix::zeros(rows.len(), n);
                let mut b = DVector::zeros(rows.len());
                for (i, (row, rhs)) in rows.iter().enumerate() {
                    a.row_mut(i).copy_from(&row.transpose());
                    b[i] = *rhs;
                }
                (a, b)
            };
            let lp = LpProblem::maximize(objective.clone())
                .with_ineq(a, b)
                .with_eq(eq_rows.clone(), eq_rhs.clone())
                .with_bounds(self.lo.clone(), self.up.clone());
            let res = lpsolve::solve(&lp).map_err(ProjError::Lp)?;
            let point = match res.status {
                LpStatus::Optimal => res.point.expect("optimal LP carries a point"),
                LpStatus::Infeasible => return Ok(CutSolve::Infeasible),
                LpStatus::Unbounded => {
                    return Err(ProjError::Unbounded(objective.iter().copied().collect()))
                }
            };
            let flows = self
                .solver
                .flows(&point)
                .map_err(|e| ProjError::BadMap(e.to_string()))?;
            let mut added = false;
            let mut stuck = 0.0f64;
            for line in 0..self.solver.n_line() {
                let limit = self.solver.limits()[line];
                let excess = flows[line].abs() - limit;
                if excess <= FLOW_CUT_TOL_MW.max(1e-9 * limit) {
                    continue;
                }
                let sign = if flows[line] > 0.0 { 1.0 } else { -1.0 };
                if self.cuts.borrow().contains(&(line, sign)) {
                    stuck = stuck.max(excess);
                    continue;
                }
                let row = sign * self.solver.isf_row(line);
                self.cuts.borrow_mut().push((line, sign));
                self.rows.borrow_mut().push((row, limit));
                added = true;
            }
            if !added {
                if stuck > FLOW_CUT_TOL_MW {
                    return Err(ProjError::Lp(LpError::Numerical(stuck)));
                }
                return Ok(CutSolve::Optimal(res.value, point));
            }
        }
        Err(ProjError::Lp(LpError::IterationLimit(CUT_ROUNDS)))
    }
}

enum CutSolve {
    Optimal(f64, DVector<f64>),
    Infeasible,
}

impl SupportOracle for LineFlowOracle {
    fn ambient_dim(&self) -> usize {
        self.solver.n_bus()
    }

    fn equalities(&self) -> (DMatrix<f64>, DVector<f64>) {
        (
            DMatrix::from_element(1, self.solver.n_bus(), 1.0),
            DVector::zeros(1),
        )
    }

    fn support(&self, d: &DVector<f64>) -> Result<(f64, DVector<f64>), ProjError> {
        let n = self.solver.n_bus();
        let eq = DMatrix::from_element(1, n, 1.0);
        match self.cut_solve(d, &eq, &DVector::zeros(1))? {
            CutSolve::Optimal(value, point) => Ok((value, point)),
            CutSolve::Infeasible => Err(ProjError::EmptySet),
        }
    }
}
