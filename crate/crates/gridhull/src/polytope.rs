//! H-representation polyhedra and primitive geometry.
//!
//! A [`Polyhedron`] is `{ y : A·y ≤ b, E·y = f }`. Equalities are kept
//! explicit rather than eliminated eagerly — the power-balance hyperplane is
//! structural in every set this library builds, and callers reason about it
//! by name. All tolerance comparisons happen on rows normalized to unit
//! Euclidean norm, so one absolute tolerance serves megawatt-scale and
//! per-unit-scale data alike.
//!
//! Non-convex sets are carried as a [`PolyUnion`] — a finite family of
//! polyhedra with (optionally certified) pairwise disjoint interiors.

use crate::lpsolve::{self, LpProblem, LpStatus};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Default membership tolerance in MW on normalized rows.
pub const MEMBER_TOL: f64 = 1e-6;

/// Chebyshev radius below which a polyhedron counts as a degenerate sliver.
pub const SLIVER_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("polyhedron is empty")]
    Empty,
    #[error("unbounded in direction {0:?}")]
    Unbounded(Vec<f64>),
    #[error("effective dimension {0} exceeds 2 after equality elimination")]
    NotPlanar(usize),
    #[error("linear programming failure: {0}")]
    Lp(#[from] lpsolve::LpError),
}

/// Convex polyhedron in H-representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    pub dim: usize,
    /// Inequality block: `a·y ≤ b` row-wise.
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// Equality block: `e·y = f` row-wise.
    pub e: DMatrix<f64>,
    pub f: DVector<f64>,
}

impl Polyhedron {
    /// The whole space of the given dimension (no constraints).
    pub fn whole_space(dim: usize) -> Self {
        Self {
            dim,
            a: DMatrix::zeros(0, dim),
            b: DVector::zeros(0),
            e: DMatrix::zeros(0, dim),
            f: DVector::zeros(0),
        }
    }

    /// Canonical empty polyhedron (`0·y ≤ -1`).
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            a: DMatrix::zeros(1, dim),
            b: DVector::from_element(1, -1.0),
            e: DMatrix::zeros(0, dim),
            f: DVector::zeros(0),
        }
    }

    /// Build from inequality rows only.
    pub fn from_ineq(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        let dim = a.ncols();
        assert_eq!(a.nrows(), b.len(), "inequality rows vs rhs length");
        Self {
            dim,
            a,
            b,
            e: DMatrix::zeros(0, dim),
            f: DVector::zeros(0),
        }
    }

    /// Attach equality rows.
    pub fn with_eq(mut self, e: DMatrix<f64>, f: DVector<f64>) -> Self {
        assert_eq!(e.ncols(), self.dim, "equality columns vs dimension");
        assert_eq!(e.nrows(), f.len(), "equality rows vs rhs length");
        self.e = e;
        self.f = f;
        self
    }

    /// Axis-aligned box `lo ≤ y ≤ up` (entries may be infinite to skip a side).
    pub fn from_box(lo: &[f64], up: &[f64]) -> Self {
        assert_eq!(lo.len(), up.len());
        let dim = lo.len();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for j in 0..dim {
            if up[j].is_finite() {
                let mut r = vec![0.0; dim];
                r[j] = 1.0;
                rows.push(r);
                rhs.push(up[j]);
            }
            if lo[j].is_finite() {
                let mut r = vec![0.0; dim];
                r[j] = -1.0;
                rows.push(r);
                rhs.push(-lo[j]);
            }
        }
        let a = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        Self::from_ineq(a, DVector::from_vec(rhs))
    }

    pub fn n_ineq(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_eq(&self) -> usize {
        self.e.nrows()
    }

    /// Append one inequality row `a·y ≤ b`.
    pub fn push_ineq(&mut self, row: &[f64], rhs: f64) {
        assert_eq!(row.len(), self.dim);
        let mut a = DMatrix::zeros(self.a.nrows() + 1, self.dim);
        a.view_mut((0, 0), (self.a.nrows(), self.dim)).copy_from(&self.a);
        for j in 0..self.dim {
            a[(self.a.nrows(), j)] = row[j];
        }
        let mut b = DVector::zeros(self.b.len() + 1);
        b.view_mut((0, 0), (self.b.len(), 1)).copy_from(&self.b);
        b[self.b.len()] = rhs;
        self.a = a;
        self.b = b;
    }

    /// The feasibility problem for this set (zero objective).
    pub(crate) fn feasibility_lp(&self) -> LpProblem {
        LpProblem::feasibility(self.dim)
            .with_ineq(self.a.clone(), self.b.clone())
            .with_eq(self.e.clone(), self.f.clone())
    }

    /// Maximize `d·y` over this set.
    pub(crate) fn support_lp(&self, d: &DVector<f64>) -> LpProblem {
        LpProblem::maximize(d.clone())
            .with_ineq(self.a.clone(), self.b.clone())
            .with_eq(self.e.clone(), self.f.clone())
    }
}

/// Point membership within `tol` on unit-normalized rows.
pub fn contains(p: &Polyhedron, y: &DVector<f64>, tol: f64) -> bool {
    assert_eq!(y.len(), p.dim, "point dimension");
    for i in 0..p.a.nrows() {
        let row = p.a.row(i);
        let norm = row.norm();
        let lhs = row.transpose().dot(y);
        let (lhs, rhs) = if norm > 1e-300 {
            (lhs / norm, p.b[i] / norm)
        } else {
            (0.0, p.b[i])
        };
        if lhs > rhs + tol {
            return false;
        }
    }
    for i in 0..p.e.nrows() {
        let row = p.e.row(i);
        let norm = row.norm();
        let lhs = row.transpose().dot(y);
        let (lhs, rhs) = if norm > 1e-300 {
            (lhs / norm, p.f[i] / norm)
        } else {
            (0.0, p.f[i])
        };
        if (lhs - rhs).abs() > tol {
            return false;
        }
    }
    true
}

/// Emptiness via a phase-1 LP.
pub fn is_empty(p: &Polyhedron) -> Result<bool, PolyError> {
    Ok(!lpsolve::feasible(&p.feasibility_lp())?)
}

/// Row-concatenation intersection.
pub fn intersect(p: &Polyhedron, q: &Polyhedron) -> Result<Polyhedron, PolyError> {
    if p.dim != q.dim {
        return Err(PolyError::DimMismatch(format!(
            "intersect: {} vs {}",
            p.dim, q.dim
        )));
    }
    let stack = |x: &DMatrix<f64>, y: &DMatrix<f64>| -> DMatrix<f64> {
        let mut m = DMatrix::zeros(x.nrows() + y.nrows(), p.dim);
        m.view_mut((0, 0), (x.nrows(), p.dim)).copy_from(x);
        m.view_mut((x.nrows(), 0), (y.nrows(), p.dim)).copy_from(y);
        m
    };
    let stack_v = |x: &DVector<f64>, y: &DVector<f64>| -> DVector<f64> {
        let mut v = DVector::zeros(x.len() + y.len());
        v.view_mut((0, 0), (x.len(), 1)).copy_from(x);
        v.view_mut((x.len(), 0), (y.len(), 1)).copy_from(y);
        v
    };
    Ok(Polyhedron {
        dim: p.dim,
        a: stack(&p.a, &q.a),
        b: stack_v(&p.b, &q.b),
        e: stack(&p.e, &q.e),
        f: stack_v(&p.f, &q.f),
    })
}

/// Value and maximizer of `max d·y` over `p`.
pub fn support(p: &Polyhedron, d: &DVector<f64>) -> Result<(f64, DVector<f64>), PolyError> {
    if d.len() != p.dim {
        return Err(PolyError::DimMismatch(format!(
            "support direction has {} entries, set has dim {}",
            d.len(),
            p.dim
        )));
    }
    let r = lpsolve::solve(&p.support_lp(d))?;
    match r.status {
        LpStatus::Optimal => Ok((r.value, r.point.expect("optimal LP carries a point"))),
        LpStatus::Infeasible => Err(PolyError::Empty),
        LpStatus::Unbounded => Err(PolyError::Unbounded(d.iter().copied().collect())),
    }
}

/// Drop duplicate and implied inequality rows; the point set is unchanged
/// and every surviving row is irredundant (relaxing it strictly enlarges the
/// set, LP-verified). Idempotent. An empty input collapses to the canonical
/// empty representation.
pub fn remove_redundancy(p: &Polyhedron) -> Result<Polyhedron, PolyError> {
    if is_empty(p)? {
        return Ok(Polyhedron::empty(p.dim).with_eq(p.e.clone(), p.f.clone()));
    }
    // Normalize rows, drop vacuous ones, dedupe near-identical ones.
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    'next_row: for i in 0..p.a.nrows() {
        let norm = p.a.row(i).norm();
        if norm <= 1e-300 {
            continue; // 0·y ≤ b with b ≥ 0 (emptiness was excluded above)
        }
        let r: DVector<f64> = p.a.row(i).transpose() / norm;
        let rb = p.b[i] / norm;
        for (q, qb) in &rows {
            if (&r - q).norm() < 1e-12 && (rb - qb).abs() < 1e-12 {
                continue 'next_row;
            }
        }
        rows.push((r, rb));
    }
    // Sequential irredundancy scan against the currently kept system.
    let mut keep = vec![true; rows.len()];
    for i in 0..rows.len() {
        keep[i] = false;
        let mut a_rows = Vec::new();
        let mut b_rhs = Vec::new();
        for (k, (r, rb)) in rows.iter().enumerate() {
            if keep[k] {
                a_rows.push(r.clone());
                b_rhs.push(*rb);
            }
        }
        // Relax row i by 1 to keep the probe LP bounded along its normal.
        a_rows.push(rows[i].0.clone());
        b_rhs.push(rows[i].1 + 1.0);
        let a = DMatrix::from_fn(a_rows.len(), p.dim, |r, c| a_rows[r][c]);
        let lp = LpProblem::maximize(rows[i].0.clone())
            .with_ineq(a, DVector::from_vec(b_rhs))
            .with_eq(p.e.clone(), p.f.clone());
        let sol = lpsolve::solve(&lp)?;
        let redundant = match sol.status {
            LpStatus::Optimal => sol.value <= rows[i].1 + 1e-7,
            // Unbounded along the normal even after relaxation cannot
            // happen; infeasible cannot happen (set nonempty).
            _ => false,
        };
        keep[i] = !redundant;
    }
    let kept: Vec<usize> = (0..rows.len()).filter(|&i| keep[i]).collect();
    let a = DMatrix::from_fn(kept.len(), p.dim, |r, c| rows[kept[r]].0[c]);
    let b = DVector::from_iterator(kept.len(), kept.iter().map(|&i| rows[i].1));
    Ok(Polyhedron {
        dim: p.dim,
        a,
        b,
        e: p.e.clone(),
        f: p.f.clone(),
    })
}

/// Orthonormal basis of the null space of `m` (vectors `v` with `m·v = 0`),
/// computed from the eigenvectors of the Gram matrix `mᵀm`, with
/// deterministic column signs. Returns an `ncols × null_dim` matrix.
pub(crate) fn nullspace_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let gram = m.transpose() * m;
    let eig = gram.symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("finite eigenvalues")
    });
    let threshold = if lam_max > 1e-300 { 1e-12 * lam_max } else { f64::INFINITY };
    let null_dim = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] <= threshold)
        .count()
        .min(n);
    let mut basis = DMatrix::zeros(n, null_dim);
    for k in 0..null_dim {
        let col = eig.eigenvectors.column(order[k]);
        for j in 0..n {
            basis[(j, k)] = col[j];
        }
        // Deterministic sign: make the largest-magnitude entry positive.
        let mut imax = 0;
        for j in 1..n {
            if basis[(j, k)].abs() > basis[(imax, k)].abs() {
                imax = j;
            }
        }
        if basis[(imax, k)] < 0.0 {
            for j in 0..n {
                basis[(j, k)] = -basis[(j, k)];
            }
        }
    }
    basis
}

/// Orthonormal basis of the null space of the equality block, and one
/// particular solution of `E·y = f`. Returns `(y0, basis)` where `basis`
/// columns span the affine subspace directions.
pub(crate) fn equality_geometry(p: &Polyhedron) -> Result<(DVector<f64>, DMatrix<f64>), PolyError> {
    if p.e.nrows() == 0 {
        return Ok((DVector::zeros(p.dim), DMatrix::identity(p.dim, p.dim)));
    }
    let svd = p.e.clone().svd(true, true);
    let y0 = svd
        .solve(&p.f, 1e-12)
        .map_err(|_| PolyError::DimMismatch("equality solve failed".into()))?;
    // Consistency: E y0 must reproduce f.
    let resid = (&p.e * &y0 - &p.f).norm();
    if resid > 1e-6 {
        return Err(PolyError::Empty);
    }
    Ok((y0, nullspace_basis(&p.e)))
}

/// Center and radius of the largest ball inside `p`, measured within the
/// affine subspace of the equality constraints: each inequality row is
/// tightened by `radius · ‖a_i projected onto null(E)‖`.
pub fn chebyshev_center(p: &Polyhedron) -> Result<(DVector<f64>, f64), PolyError> {
    let (_, basis) = equality_geometry(p)?;
    let n = p.dim;
    let m = p.a.nrows();
    // Variables (y, r): maximize r.
    let mut a = DMatrix::zeros(m + 1, n + 1);
    let mut b = DVector::zeros(m + 1);
    for i in 0..m {
        let norm = p.a.row(i).norm();
        let (row, rhs) = if norm > 1e-300 {
            (p.a.row(i).transpose() / norm, p.b[i] / norm)
        } else {
            (DVector::zeros(n), p.b[i])
        };
        let proj = basis.transpose() * &row;
        for j in 0..n {
            a[(i, j)] = row[j];
        }
        a[(i, n)] = proj.norm();
        b[i] = rhs;
    }
    // r ≥ 0.
    a[(m, n)] = -1.0;
    b[m] = 0.0;
    let mut e = DMatrix::zeros(p.e.nrows(), n + 1);
    e.view_mut((0, 0), (p.e.nrows(), n)).copy_from(&p.e);
    let mut obj = DVector::zeros(n + 1);
    obj[n] = 1.0;
    let lp = LpProblem::maximize(obj)
        .with_ineq(a, b)
        .with_eq(e, p.f.clone());
    let r = lpsolve::solve(&lp)?;
    match r.status {
        LpStatus::Optimal => {
            let pt = r.point.expect("optimal LP carries a point");
            let center = DVector::from_iterator(n, (0..n).map(|j| pt[j]));
            Ok((center, pt[n]))
        }
        LpStatus::Infeasible => Err(PolyError::Empty),
        LpStatus::Unbounded => {
            // Radius unbounded (e.g. whole space): report an infinite ball
            // at an arbitrary feasible anchor.
            let anchor = lpsolve::solve(&p.feasibility_lp())?;
            match anchor.status {
                LpStatus::Optimal => Ok((
                    anchor.point.expect("optimal LP carries a point"),
                    f64::INFINITY,
                )),
                _ => Err(PolyError::Empty),
            }
        }
    }
}

/// Vertices of a bounded polyhedron whose effective dimension (after
/// eliminating equalities) is at most 2, ordered counter-clockwise in the
/// equality subspace's parameter plane. Consecutive vertices are distinct
/// beyond 1e-8.
pub fn vertices_2d(p: &Polyhedron) -> Result<Vec<DVector<f64>>, PolyError> {
    if is_empty(p)? {
        return Ok(Vec::new());
    }
    let (y0, basis) = equality_geometry(p)?;
    let dim_eff = basis.ncols();
    if dim_eff > 2 {
        return Err(PolyError::NotPlanar(dim_eff));
    }
    if dim_eff == 0 {
        return Ok(vec![y0]);
    }
    // Parametrize y = y0 + basis·t and rewrite inequalities over t.
    let at = &p.a * &basis; // m × dim_eff
    let bt = &p.b - &p.a * &y0;
    let m = at.nrows();
    let param_poly = Polyhedron::from_ineq(at.clone(), bt.clone());

    // Boundedness check in parameter space.
    for k in 0..dim_eff {
        for sgn in [1.0, -1.0] {
            let mut d = DVector::zeros(dim_eff);
            d[k] = sgn;
            match support(&param_poly, &d) {
                Ok(_) => {}
                Err(PolyError::Unbounded(_)) => {
                    let dir: Vec<f64> = (&basis * &d).iter().copied().collect();
                    return Err(PolyError::Unbounded(dir));
                }
                Err(e) => return Err(e),
            }
        }
    }

    let mut pts: Vec<DVector<f64>> = Vec::new();
    if dim_eff == 1 {
        let mut d = DVector::zeros(1);
        d[0] = 1.0;
        let (hi, _) = support(&param_poly, &d)?;
        d[0] = -1.0;
        let (lo_neg, _) = support(&param_poly, &d)?;
        let lo = -lo_neg;
        pts.push(DVector::from_vec(vec![lo]));
        if hi - lo > 1e-8 {
            pts.push(DVector::from_vec(vec![hi]));
        }
    } else {
        // Candidate vertices: intersections of inequality-row pairs that
        // satisfy every row.
        for i in 0..m {
            for j in (i + 1)..m {
                let det = at[(i, 0)] * at[(j, 1)] - at[(i, 1)] * at[(j, 0)];
                let scale = at.row(i).norm() * at.row(j).norm();
                if det.abs() <= 1e-10 * scale.max(1e-300) {
                    continue;
                }
                let tx = (bt[i] * at[(j, 1)] - at[(i, 1)] * bt[j]) / det;
                let ty = (at[(i, 0)] * bt[j] - bt[i] * at[(j, 0)]) / det;
                let cand = DVector::from_vec(vec![tx, ty]);
                if contains(&param_poly, &cand, 1e-6) {
                    pts.push(cand);
                }
            }
        }
        if pts.is_empty() {
            // Single point or degenerate segment handled by an anchor.
            let anchor = lpsolve::solve(&param_poly.feasibility_lp())?;
            if let Some(t) = anchor.point {
                pts.push(t);
            }
        }
    }

    // Dedupe (cluster radius 1e-8) with deterministic representative choice.
    let mut unique: Vec<DVector<f64>> = Vec::new();
    for t in pts {
        if !unique.iter().any(|u| (u - &t).norm() <= 1e-8) {
            unique.push(t);
        }
    }
    if dim_eff == 2 && unique.len() > 2 {
        let cx = unique.iter().map(|t| t[0]).sum::<f64>() / unique.len() as f64;
        let cy = unique.iter().map(|t| t[1]).sum::<f64>() / unique.len() as f64;
        unique.sort_by(|a, b| {
            let aa = (a[1] - cy).atan2(a[0] - cx);
            let bb = (b[1] - cy).atan2(b[0] - cx);
            aa.partial_cmp(&bb).expect("finite angles")
        });
    } else if dim_eff == 1 {
        unique.sort_by(|a, b| a[0].partial_cmp(&b[0]).expect("finite parameters"));
    }
    Ok(unique.into_iter().map(|t| &y0 + &basis * t).collect())
}

/// Finite family of polyhedra representing a possibly non-convex set.
#[derive(Debug, Clone)]
pub struct PolyUnion {
    pub parts: Vec<Polyhedron>,
    /// Certified by construction or by [`check_disjoint_interiors`].
    pub disjoint_interiors: bool,
}

impl PolyUnion {
    pub fn empty(dim: usize) -> Self {
        let _ = dim;
        Self {
            parts: Vec::new(),
            disjoint_interiors: true,
        }
    }

    pub fn is_empty_family(&self) -> bool {
        self.parts.is_empty()
    }
}

/// True when some part contains `y` (linear scan).
pub fn union_contains(u: &PolyUnion, y: &DVector<f64>, tol: f64) -> bool {
    u.parts.iter().any(|p| contains(p, y, tol))
}

/// LP certificate that every pair of parts has disjoint interiors (relative
/// to their shared equality subspace): maximize the minimum slack over both
/// parts' inequality rows; a positive optimum exhibits a common interior
/// point.
pub fn check_disjoint_interiors(u: &PolyUnion) -> Result<bool, PolyError> {
    for i in 0..u.parts.len() {
        for j in (i + 1)..u.parts.len() {
            let p = &u.parts[i];
            let q = &u.parts[j];
            if p.dim != q.dim {
                return Err(PolyError::DimMismatch("union parts differ in dim".into()));
            }
            let inter = intersect(p, q)?;
            let n = inter.dim;
            let m = inter.a.nrows();
            // Variables (y, s): maximize s with a·y + s·‖a‖ ≤ b.
            let mut a = DMatrix::zeros(m + 1, n + 1);
            let mut b = DVector::zeros(m + 1);
            for r in 0..m {
                let norm = inter.a.row(r).norm().max(1e-300);
                for c in 0..n {
                    a[(r, c)] = inter.a[(r, c)] / norm;
                }
                a[(r, n)] = 1.0;
                b[r] = inter.b[r] / norm;
            }
            // s ≤ 1 cap keeps the LP bounded.
            a[(m, n)] = 1.0;
            b[m] = 1.0;
            let mut e = DMatrix::zeros(inter.e.nrows(), n + 1);
            e.view_mut((0, 0), (inter.e.nrows(), n)).copy_from(&inter.e);
            let mut obj = DVector::zeros(n + 1);
            obj[n] = 1.0;
            let lp = LpProblem::maximize(obj)
                .with_ineq(a, b)
                .with_eq(e, inter.f.clone());
            let r = lpsolve::solve(&lp)?;
            if r.status == LpStatus::Optimal && r.value > 1e-7 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polyhedron {
        Polyhedron::from_box(&[0.0, 0.0], &[1.0, 1.0])
    }

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn membership_square() {
        let sq = unit_square();
        assert!(contains(&sq, &dv(&[0.5, 0.5]), 1e-9));
        let tol = 1e-9;
        assert!(!contains(&sq, &dv(&[1.0 + 2.0 * tol, 0.0]), tol));
        assert!(contains(&sq, &dv(&[1.0, 1.0]), 1e-9)); // boundary
    }

    #[test]
    fn emptiness() {
        // x ≤ 0 and x ≥ 1.
        let p = Polyhedron::from_ineq(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            dv(&[0.0, -1.0]),
        );
        assert!(is_empty(&p).unwrap());
        assert!(!is_empty(&unit_square()).unwrap());
    }

    #[test]
    fn intersection_is_conjunction() {
        let sq = unit_square();
        let shifted = Polyhedron::from_box(&[0.5, 0.25], &[1.5, 1.25]);
        let inter = intersect(&sq, &shifted).unwrap();
        // Rectangle [0.5,1]×[0.25,1].
        let mut inside = 0;
        let mut agree = 0;
        for i in 0..1000 {
            let x = -0.5 + 2.5 * ((i * 7919) % 1000) as f64 / 1000.0;
            let y = -0.5 + 2.5 * ((i * 104729) % 1000) as f64 / 1000.0;
            let pt = dv(&[x, y]);
            let joint = contains(&sq, &pt, 1e-9) && contains(&shifted, &pt, 1e-9);
            if joint {
                inside += 1;
            }
            if joint == contains(&inter, &pt, 1e-9) {
                agree += 1;
            }
        }
        assert_eq!(agree, 1000);
        assert!(inside > 0);
    }

    #[test]
    fn redundancy_removal() {
        // x ≤ 1 and x ≤ 2 plus a duplicate.
        let p = Polyhedron::from_ineq(
            DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]),
            dv(&[1.0, 2.0, 1.0]),
        );
        let r = remove_redundancy(&p).unwrap();
        assert_eq!(r.n_ineq(), 1);
        assert!((r.b[0] - 1.0).abs() < 1e-12);
        // Idempotent.
        let r2 = remove_redundancy(&r).unwrap();
        assert_eq!(r2.n_ineq(), 1);
    }

    #[test]
    fn redundancy_preserves_set() {
        // Random-ish octagon with 50 sampled tangent lines of the unit disk.
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for k in 0..50 {
            let th = (k as f64) * 0.125664; // 2π/50
            rows.push(vec![th.cos(), th.sin()]);
            rhs.push(1.0);
        }
        let a = DMatrix::from_fn(50, 2, |i, j| rows[i][j]);
        let p = Polyhedron::from_ineq(a, DVector::from_vec(rhs));
        let r = remove_redundancy(&p).unwrap();
        assert!(r.n_ineq() <= 50);
        for i in 0..1000 {
            let x = -1.5 + 3.0 * ((i * 7919) % 1000) as f64 / 1000.0;
            let y = -1.5 + 3.0 * ((i * 104729) % 1000) as f64 / 1000.0;
            let pt = dv(&[x, y]);
            assert_eq!(
                contains(&p, &pt, 1e-6),
                contains(&r, &pt, 1e-6),
                "probe {i} reclassified"
            );
        }
    }

    #[test]
    fn support_square() {
        let sq = unit_square();
        let (v, _) = support(&sq, &dv(&[1.0, 0.0])).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        let (v2, at) = support(&sq, &dv(&[1.0, 1.0])).unwrap();
        assert!((v2 - 2.0).abs() < 1e-9);
        assert!((at - dv(&[1.0, 1.0])).norm() < 1e-7);
    }

    #[test]
    fn support_unbounded_propagates() {
        let half = Polyhedron::from_ineq(DMatrix::from_row_slice(1, 2, &[0.0, 1.0]), dv(&[1.0]));
        match support(&half, &dv(&[1.0, 0.0])) {
            Err(PolyError::Unbounded(d)) => assert_eq!(d, vec![1.0, 0.0]),
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn support_sublinear() {
        let p = Polyhedron::from_box(&[-1.0, -2.0, 0.5], &[3.0, 2.0, 4.0]);
        let dirs = [
            dv(&[1.0, 2.0, -1.0]),
            dv(&[0.5, -1.0, 2.0]),
            dv(&[-1.0, 0.0, 1.0]),
        ];
        for d1 in &dirs {
            for d2 in &dirs {
                let (s1, _) = support(&p, d1).unwrap();
                let (s2, _) = support(&p, d2).unwrap();
                let (s12, _) = support(&p, &(d1 + d2)).unwrap();
                assert!(s12 <= s1 + s2 + 1e-7);
            }
        }
    }

    #[test]
    fn chebyshev_square() {
        let (c, r) = chebyshev_center(&unit_square()).unwrap();
        assert!((c - dv(&[0.5, 0.5])).norm() < 1e-7);
        assert!((r - 0.5).abs() < 1e-7);
    }

    #[test]
    fn chebyshev_segment_in_plane() {
        // {x + y = 1, 0 ≤ x ≤ 1}: the in-subspace ball is the segment's
        // half-length √2/2 around the midpoint.
        let p = Polyhedron::from_ineq(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]),
            dv(&[1.0, 0.0]),
        )
        .with_eq(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), dv(&[1.0]));
        let (c, r) = chebyshev_center(&p).unwrap();
        assert!((&c - dv(&[0.5, 0.5])).norm() < 1e-7);
        let half_len = (2.0f64).sqrt() / 2.0;
        assert!((r - half_len).abs() < 1e-7, "radius {r} vs {half_len}");
        // Both endpoints sit at distance r from the center.
        for endpoint in [dv(&[0.0, 1.0]), dv(&[1.0, 0.0])] {
            assert!(((endpoint - &c).norm() - r).abs() < 1e-6);
        }
    }

    #[test]
    fn vertices_square_ccw() {
        let vs = vertices_2d(&unit_square()).unwrap();
        assert_eq!(vs.len(), 4);
        // CCW orientation: positive shoelace sum.
        let mut area2 = 0.0;
        for i in 0..4 {
            let a = &vs[i];
            let b = &vs[(i + 1) % 4];
            area2 += a[0] * b[1] - b[0] * a[1];
        }
        assert!(area2 > 0.0);
        assert!((area2 / 2.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn vertices_triangle() {
        // x ≥ 0, y ≥ 0, x + y ≤ 1.
        let p = Polyhedron::from_ineq(
            DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 1.0]),
            dv(&[0.0, 0.0, 1.0]),
        );
        let vs = vertices_2d(&p).unwrap();
        assert_eq!(vs.len(), 3);
    }

    #[test]
    fn vertices_roundtrip_classification() {
        // Rebuild H-representation from returned vertices and compare
        // probe classification.
        let p = Polyhedron::from_ineq(
            DMatrix::from_row_slice(4, 2, &[1.0, 2.0, -1.0, 1.0, 0.0, -1.0, 1.0, -3.0]),
            dv(&[4.0, 2.0, 0.5, 3.0]),
        );
        let vs = vertices_2d(&p).unwrap();
        assert!(vs.len() >= 3);
        // Facets from consecutive vertex pairs (CCW ⇒ outward normal is the
        // right-hand normal of each edge).
        let n = vs.len();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for i in 0..n {
            let u = &vs[i];
            let v = &vs[(i + 1) % n];
            let nx = v[1] - u[1];
            let ny = -(v[0] - u[0]);
            rows.push(vec![nx, ny]);
            rhs.push(nx * u[0] + ny * u[1]);
        }
        let a = DMatrix::from_fn(n, 2, |i, j| rows[i][j]);
        let q = Polyhedron::from_ineq(a, DVector::from_vec(rhs));
        for i in 0..1000 {
            let x = -2.0 + 6.0 * ((i * 7919) % 1000) as f64 / 1000.0;
            let y = -2.0 + 6.0 * ((i * 104729) % 1000) as f64 / 1000.0;
            let pt = dv(&[x, y]);
            assert_eq!(
                contains(&p, &pt, 1e-6),
                contains(&q, &pt, 1e-6),
                "probe {i} reclassified"
            );
        }
    }

    #[test]
    fn vertices_on_equality_plane() {
        // Box in 3D cut to the plane x+y+z = 0: effective dim 2.
        let p = Polyhedron::from_box(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0])
            .with_eq(DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]), dv(&[0.0]));
        let vs = vertices_2d(&p).unwrap();
        // Hexagonal slice.
        assert_eq!(vs.len(), 6);
        for v in &vs {
            assert!((v[0] + v[1] + v[2]).abs() < 1e-7);
        }
    }

    #[test]
    fn vertices_unbounded_error() {
        let half = Polyhedron::from_ineq(DMatrix::from_row_slice(1, 2, &[0.0, 1.0]), dv(&[1.0]));
        assert!(matches!(
            vertices_2d(&half),
            Err(PolyError::Unbounded(_))
        ));
    }

    #[test]
    fn vertices_3d_error() {
        let cube = Polyhedron::from_box(&[0.0; 3], &[1.0; 3]);
        assert!(matches!(vertices_2d(&cube), Err(PolyError::NotPlanar(3))));
    }

    #[test]
    fn union_membership_and_disjointness() {
        let left = Polyhedron::from_box(&[0.0, 0.0], &[0.5, 1.0]);
        let right = Polyhedron::from_box(&[0.5, 0.0], &[1.0, 1.0]);
        let u = PolyUnion {
            parts: vec![left, right],
            disjoint_interiors: true,
        };
        assert!(union_contains(&u, &dv(&[0.25, 0.5]), 1e-9));
        assert!(union_contains(&u, &dv(&[0.75, 0.5]), 1e-9));
        assert!(!union_contains(&u, &dv(&[1.25, 0.5]), 1e-9));
        assert!(check_disjoint_interiors(&u).unwrap());
        let empty = PolyUnion::empty(2);
        assert!(!union_contains(&empty, &dv(&[0.0, 0.0]), 1e-9));
    }

    #[test]
    fn union_overlap_detected() {
        let a = Polyhedron::from_box(&[0.0, 0.0], &[0.6, 1.0]);
        let b = Polyhedron::from_box(&[0.4, 0.0], &[1.0, 1.0]);
        let u = PolyUnion {
            parts: vec![a, b],
            disjoint_interiors: false,
        };
        assert!(!check_disjoint_interiors(&u).unwrap());
    }
}
