//! Linear images (projections) of polyhedra under bus-aggregation maps —
//! exact by variable elimination for small systems, inner/outer
//! approximation by support-function sampling for large ones.
//!
//! The exact path changes coordinates so the aggregated variables are
//! explicit, eliminates the remaining coordinates (equalities first by
//! Gaussian elimination, the rest by Fourier–Motzkin with greedy variable
//! order), and strips redundant rows after every stage. The sampled path
//! only ever asks a [`SupportOracle`] for maxima of linear functionals, so
//! it works on explicit H-polyhedra and on network-backed constraint sets
//! that never materialize their line rows.

use crate::lpsolve::LpError;
use crate::polytope::{
    self, is_empty, nullspace_basis, remove_redundancy, Polyhedron, PolyError,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Default direction seed for the sampled projection.
pub const DEFAULT_SEED: u64 = 42;

/// Default cap on intermediate elimination rows (override with the
/// `GRIDHULL_ROW_CAP` environment variable).
pub const DEFAULT_ROW_CAP: usize = 100_000;

#[derive(Debug, Error)]
pub enum ProjError {
    #[error("aggregation map invalid: {0}")]
    BadMap(String),
    #[error(
        "elimination produced {rows} intermediate rows, over the cap {cap}; \
         use the sampled approximation (image_approx) instead"
    )]
    RowCap { rows: usize, cap: usize },
    #[error("image is unbounded along direction {0:?}")]
    Unbounded(Vec<f64>),
    #[error("the set being projected is empty")]
    EmptySet,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("linear programming failure: {0}")]
    Lp(#[from] LpError),
}

/// Assignment of every bus to exactly one region.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationMap {
    pub n_bus: usize,
    /// `region_of[bus_position] = region index`.
    pub region_of: Vec<usize>,
    pub n_regions: usize,
    pub region_names: Vec<String>,
}

impl AggregationMap {
    /// Build from a per-bus region assignment. Regions must be contiguous
    /// indices `0..n_regions` and each must own at least one bus.
    pub fn new(region_of: Vec<usize>, n_regions: usize) -> Result<Self, ProjError> {
        let names = (0..n_regions).map(|r| format!("r{r}")).collect();
        Self::with_names(region_of, names)
    }

    /// Build with explicit region names (one per region index).
    pub fn with_names(region_of: Vec<usize>, region_names: Vec<String>) -> Result<Self, ProjError> {
        let n_regions = region_names.len();
        let n_bus = region_of.len();
        if n_bus == 0 {
            return Err(ProjError::BadMap("no buses".into()));
        }
        let mut seen = vec![false; n_regions];
        for (i, &r) in region_of.iter().enumerate() {
            if r >= n_regions {
                return Err(ProjError::BadMap(format!(
                    "bus position {i} assigned to region {r}, only {n_regions} regions declared"
                )));
            }
            seen[r] = true;
        }
        if let Some(r) = seen.iter().position(|s| !s) {
            return Err(ProjError::BadMap(format!(
                "region {} ({}) owns no bus",
                r, region_names[r]
            )));
        }
        Ok(Self { n_bus, region_of, n_regions, region_names })
    }

    /// The aggregation matrix (n_regions × n_bus, one 1 per column).
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_regions, self.n_bus);
        for (i, &r) in self.region_of.iter().enumerate() {
            m[(r, i)] = 1.0;
        }
        m
    }

    /// Bus positions belonging to one region.
    pub fn buses_of(&self, region: usize) -> Vec<usize> {
        self.region_of
            .iter()
            .enumerate()
            .filter(|&(_, &r)| r == region)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Aggregate a bus-level vector to the region level: `y_r = Σ x_i` over the
/// buses of region r.
pub fn apply_map(t: &AggregationMap, x: &DVector<f64>) -> DVector<f64> {
    assert_eq!(x.len(), t.n_bus, "vector length vs bus count");
    let mut y = DVector::zeros(t.n_regions);
    for (i, &r) in t.region_of.iter().enumerate() {
        y[r] += x[i];
    }
    y
}

fn row_cap() -> usize {
    std::env::var("GRIDHULL_ROW_CAP")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_ROW_CAP)
}

/// Exact image `{T·x : x ∈ P}` of a polyhedron under an aggregation map.
pub fn image_exact(p: &Polyhedron, t: &AggregationMap) -> Result<Polyhedron, ProjError> {
    if t.n_bus > 12 {
        eprintln!(
            "warning: exact projection over {} variables may be slow; \
             the sampled approximation scales better",
            t.n_bus
        );
    }
    linear_image_exact(p, &t.matrix())
}

/// Exact image `{M·x : x ∈ P}` under any full-row-rank linear map.
pub fn linear_image_exact(p: &Polyhedron, m: &DMatrix<f64>) -> Result<Polyhedron, ProjError> {
    linear_image_exact_capped(p, m, row_cap())
}

/// Exact image with an explicit intermediate-row cap.
pub fn linear_image_exact_capped(
    p: &Polyhedron,
    m: &DMatrix<f64>,
    cap: usize,
) -> Result<Polyhedron, ProjError> {
    let n = p.dim;
    let k = m.nrows();
    if m.ncols() != n {
        return Err(ProjError::BadMap(format!(
            "map has {} columns, set has dimension {n}",
            m.ncols()
        )));
    }
    if nullspace_basis(&m.transpose()).ncols() > 0 {
        return Err(ProjError::BadMap("map rows are linearly dependent".into()));
    }
    if is_empty(p)? {
        return Ok(Polyhedron::empty(k));
    }
    // Coordinate change z = S·x with S = [M; K], K an orthonormal basis of
    // the kernel of M: the first k coordinates of z are the image variables,
    // the rest get eliminated.
    let kernel = nullspace_basis(m); // n × (n − k)
    let n_u = kernel.ncols();
    let mut s = DMatrix::zeros(n, n);
    s.view_mut((0, 0), (k, n)).copy_from(m);
    s.view_mut((k, 0), (n_u, n)).copy_from(&kernel.transpose());
    let s_inv = s
        .try_inverse()
        .ok_or_else(|| ProjError::BadMap("coordinate change is singular".into()))?;

    let mut ineq: Vec<(DVector<f64>, f64)> = Vec::with_capacity(p.a.nrows());
    for i in 0..p.a.nrows() {
        ineq.push(((p.a.row(i) * &s_inv).transpose(), p.b[i]));
    }
    let mut eqs: Vec<(DVector<f64>, f64)> = Vec::with_capacity(p.e.nrows());
    for i in 0..p.e.nrows() {
        eqs.push(((p.e.row(i) * &s_inv).transpose(), p.f[i]));
    }
    let mut alive: Vec<usize> = (k..n).collect();

    // Stage 1: eliminate coordinates pinned by equality rows.
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for (r, (row, _)) in eqs.iter().enumerate() {
            let norm = row.norm();
            if norm < 1e-300 {
                continue;
            }
            for &j in &alive {
                let v = row[j].abs() / norm;
                if v > best.map_or(1e-9, |(_, _, b)| b) {
                    best = Some((r, j, v));
                }
            }
        }
        let Some((r, j, _)) = best else { break };
        let (prow, prhs) = eqs.remove(r);
        let c = prow[j];
        for (row, rhs) in ineq.iter_mut().chain(eqs.iter_mut()) {
            let factor = row[j] / c;
            if factor != 0.0 {
                *row -= &prow * factor;
                *rhs -= prhs * factor;
                row[j] = 0.0;
            }
        }
        alive.retain(|&v| v != j);
    }
    // Equality rows now involve only image coordinates; an inconsistent
    // constant row means the set was empty.
    for (row, rhs) in &eqs {
        if row.norm() < 1e-9 && rhs.abs() > 1e-6 {
            return Ok(Polyhedron::empty(k));
        }
    }
    eqs.retain(|(row, rhs)| row.norm() >= 1e-9 || rhs.abs() > 1e-6);

    // Stage 2: Fourier–Motzkin on the remaining coordinates, smallest
    // positive×negative product first, redundancy removal per stage.
    while !alive.is_empty() {
        let mut best: Option<(usize, usize)> = None; // (var, score)
        for &j in &alive {
            let mut pos = 0usize;
            let mut neg = 0usize;
            for (row, _) in &ineq {
                let c = row[j];
                let scale = row.norm().max(1e-300);
                if c > 1e-9 * scale {
                    pos += 1;
                } else if c < -1e-9 * scale {
                    neg += 1;
                }
            }
            let score = pos * neg;
            if best.map_or(true, |(_, s)| score < s) {
                best = Some((j, score));
            }
        }
        let (j, _) = best.expect("alive set nonempty");
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut keep = Vec::new();
        for (row, rhs) in ineq.drain(..) {
            let c = row[j];
            let scale = row.norm().max(1e-300);
            if c > 1e-9 * scale {
                pos.push((row, rhs));
            } else if c < -1e-9 * scale {
                neg.push((row, rhs));
            } else {
                keep.push((row, rhs));
            }
        }
        let projected_rows = keep.len() + pos.len() * neg.len();
        if projected_rows > cap {
            return Err(ProjError::RowCap { rows: projected_rows, cap });
        }
        for (prow, prhs) in &pos {
            let pc = prow[j];
            for (nrow, nrhs) in &neg {
                let nc = -nrow[j];
                let mut row = prow / pc + nrow / nc;
                row[j] = 0.0;
                keep.push((row, prhs / pc + nrhs / nc));
            }
        }
        ineq = keep;
        alive.retain(|&v| v != j);

        // Strip redundant rows before the next stage.
        let stage = assemble(n, &ineq, &eqs);
        if is_empty(&stage)? {
            return Ok(Polyhedron::empty(k));
        }
        let reduced = remove_redundancy(&stage)?;
        ineq = (0..reduced.a.nrows())
            .map(|i| (reduced.a.row(i).transpose(), reduced.b[i]))
            .collect();
    }

    // Drop the (now all-zero) eliminated columns.
    let shrink = |rows: &[(DVector<f64>, f64)]| -> (DMatrix<f64>, DVector<f64>) {
        let a = DMatrix::from_fn(rows.len(), k, |i, j| rows[i].0[j]);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|(_, r)| *r));
        (a, b)
    };
    let (a, b) = shrink(&ineq);
    let (e, f) = shrink(&dedupe_eq_rows(eqs));
    let image = Polyhedron { dim: k, a, b, e, f };
    Ok(remove_redundancy(&image)?)
}

fn assemble(dim: usize, ineq: &[(DVector<f64>, f64)], eqs: &[(DVector<f64>, f64)]) -> Polyhedron {
    let a = DMatrix::from_fn(ineq.len(), dim, |i, j| ineq[i].0[j]);
    let b = DVector::from_iterator(ineq.len(), ineq.iter().map(|(_, r)| *r));
    let e = DMatrix::from_fn(eqs.len(), dim, |i, j| eqs[i].0[j]);
    let f = DVector::from_iterator(eqs.len(), eqs.iter().map(|(_, r)| *r));
    Polyhedron { dim, a, b, e, f }
}

/// Normalize, sign-canonicalize, and deduplicate *equality* rows (for an
/// equality, ±row state the same constraint).
fn dedupe_eq_rows(rows: Vec<(DVector<f64>, f64)>) -> Vec<(DVector<f64>, f64)> {
    let mut out: Vec<(DVector<f64>, f64)> = Vec::new();
    'next: for (row, rhs) in rows {
        let norm = row.norm();
        if norm < 1e-300 {
            continue;
        }
        let (mut r, mut v) = (row / norm, rhs / norm);
        // Canonical sign: largest-magnitude entry positive.
        let mut imax = 0;
        for j in 1..r.len() {
            if r[j].abs() > r[imax].abs() {
                imax = j;
            }
        }
        if r[imax] < 0.0 {
            r = -r;
            v = -v;
        }
        for (q, w) in &out {
            if (&r - q).norm() < 1e-9 && (v - w).abs() < 1e-9 {
                continue 'next;
            }
        }
        out.push((r, v));
    }
    out
}

/// Normalize and deduplicate inequality rows, preserving orientation.
fn dedupe_ineq_rows(rows: Vec<(DVector<f64>, f64)>) -> Vec<(DVector<f64>, f64)> {
    let mut out: Vec<(DVector<f64>, f64)> = Vec::new();
    'next: for (row, rhs) in rows {
        let norm = row.norm();
        if norm < 1e-300 {
            continue;
        }
        let (r, v) = (row / norm, rhs / norm);
        for (q, w) in &out {
            if (&r - q).norm() < 1e-9 && (v - w).abs() < 1e-9 {
                continue 'next;
            }
        }
        out.push((r, v));
    }
    out
}

// ---------------------------------------------------------------------------
// Sampled projection.
// ---------------------------------------------------------------------------

/// A convex set queried only through its support function. The sampled
/// projection needs nothing else, which lets network-backed sets avoid
/// materializing their constraint rows.
pub trait SupportOracle {
    /// Dimension of the ambient space.
    fn ambient_dim(&self) -> usize;
    /// `max d·x` over the set with a maximizer.
    fn support(&self, d: &DVector<f64>) -> Result<(f64, DVector<f64>), ProjError>;
    /// Equality rows `(E, f)` known to hold on every member.
    fn equalities(&self) -> (DMatrix<f64>, DVector<f64>);
}

impl SupportOracle for Polyhedron {
    fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn support(&self, d: &DVector<f64>) -> Result<(f64, DVector<f64>), ProjError> {
        polytope::support(self, d).map_err(|e| match e {
            PolyError::Empty => ProjError::EmptySet,
            other => ProjError::Poly(other),
        })
    }

    fn equalities(&self) -> (DMatrix<f64>, DVector<f64>) {
        (self.e.clone(), self.f.clone())
    }
}

/// Inner/outer sandwich of a projected set.
#[derive(Debug, Clone)]
pub struct ApproxSet {
    /// Images of the support maximizers — certified members of the image.
    pub inner_vertices: Vec<DVector<f64>>,
    /// H-representation of the inner hull when the effective dimension
    /// (after equalities) is at most 3; `None` above that.
    pub inner_hull: Option<Polyhedron>,
    /// Intersection of the sampled supporting halfspaces — a superset.
    pub outer: Polyhedron,
    /// Certified sandwich width, MW (see [`gap_estimate`]).
    pub gap: f64,
}

/// Sampled projection under an aggregation map with the default seed.
pub fn image_approx(
    p: &Polyhedron,
    t: &AggregationMap,
    budget: usize,
    tol: f64,
) -> Result<ApproxSet, ProjError> {
    image_approx_seeded(p, t, budget, tol, DEFAULT_SEED)
}

/// Sampled projection with an explicit direction seed.
pub fn image_approx_seeded(
    p: &Polyhedron,
    t: &AggregationMap,
    budget: usize,
    tol: f64,
    seed: u64,
) -> Result<ApproxSet, ProjError> {
    image_approx_oracle(p, &t.matrix(), budget, tol, seed)
}

/// Sampled projection of any support-oracle set under a linear map.
pub fn image_approx_oracle(
    set: &dyn SupportOracle,
    m: &DMatrix<f64>,
    budget: usize,
    tol: f64,
    seed: u64,
) -> Result<ApproxSet, ProjError> {
    let n = set.ambient_dim();
    let k = m.nrows();
    if m.ncols() != n {
        return Err(ProjError::BadMap(format!(
            "map has {} columns, set has dimension {n}",
            m.ncols()
        )));
    }
    let budget = budget.max(1);
    let (e_x, f_x) = set.equalities();
    let (e_img, f_img) = transfer_equalities(&e_x, &f_x, m);

    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new(); // outer halfspaces
    let mut verts: Vec<DVector<f64>> = Vec::new();
    let mut probed: Vec<DVector<f64>> = Vec::new();
    let mut used = 0usize;

    let eval = |d: &DVector<f64>,
                rows: &mut Vec<(DVector<f64>, f64)>,
                verts: &mut Vec<DVector<f64>>,
                probed: &mut Vec<DVector<f64>>|
     -> Result<(), ProjError> {
        let norm = d.norm();
        if norm < 1e-12 {
            return Ok(());
        }
        let dn = d / norm;
        let xd = m.transpose() * &dn;
        match set.support(&xd) {
            Ok((v, x_star)) => {
                let y = m * x_star;
                rows.push((dn.clone(), v));
                push_unique(verts, y, 1e-8);
                probed.push(dn);
                Ok(())
            }
            Err(ProjError::Poly(PolyError::Unbounded(_))) => {
                Err(ProjError::Unbounded(dn.iter().copied().collect()))
            }
            Err(other) => Err(other),
        }
    };

    // Phase A: ± coordinate axes of the image space.
    'axes: for j in 0..k {
        for sgn in [1.0, -1.0] {
            if used >= budget {
                break 'axes;
            }
            let mut d = DVector::zeros(k);
            d[j] = sgn;
            eval(&d, &mut rows, &mut verts, &mut probed)?;
            used += 1;
        }
    }

    let current_gap = |rows: &Vec<(DVector<f64>, f64)>,
                       verts: &Vec<DVector<f64>>|
     -> Result<f64, ProjError> {
        let outer = assemble_outer(k, rows, &e_img, &f_img);
        let hull = inner_hull(k, verts, &e_img, &f_img);
        Ok(sandwich_gap(&outer, hull.as_ref(), verts)?)
    };

    // Phase B: seeded quasi-uniform directions until half the budget.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while used < budget / 2 {
        let d = DVector::from_fn(k, |_, _| {
            // Box–Muller standard normal from two uniform draws.
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        });
        eval(&d, &mut rows, &mut verts, &mut probed)?;
        used += 1;
        if used % 8 == 0 && current_gap(&rows, &verts)? <= tol {
            break;
        }
    }

    // Phase C: refine along inner-hull facet normals with the largest
    // sandwich width.
    loop {
        if current_gap(&rows, &verts)? <= tol || used >= budget {
            break;
        }
        let Some(hull) = inner_hull(k, &verts, &e_img, &f_img) else { break };
        let outer = assemble_outer(k, &rows, &e_img, &f_img);
        // Rank unprobed facet normals by local gap.
        let mut cands: Vec<(f64, DVector<f64>)> = Vec::new();
        for i in 0..hull.a.nrows() {
            let d = hull.a.row(i).transpose();
            let norm = d.norm();
            if norm < 1e-12 {
                continue;
            }
            let dn = d / norm;
            if probed.iter().any(|p| (p - &dn).norm() < 1e-9) {
                continue;
            }
            let (so, _) = match polytope::support(&outer, &dn) {
                Ok(v) => v,
                Err(PolyError::Unbounded(dir)) => return Err(ProjError::Unbounded(dir)),
                Err(e) => return Err(e.into()),
            };
            let si = verts
                .iter()
                .map(|v| dn.dot(v))
                .fold(f64::NEG_INFINITY, f64::max);
            cands.push((so - si, dn));
        }
        if cands.is_empty() {
            break;
        }
        cands.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite gaps"));
        let mut advanced = false;
        for (_, d) in cands.into_iter().take(4) {
            if used >= budget {
                break;
            }
            eval(&d, &mut rows, &mut verts, &mut probed)?;
            used += 1;
            advanced = true;
        }
        if !advanced {
            break;
        }
    }

    let outer = remove_redundancy(&assemble_outer(k, &rows, &e_img, &f_img))?;
    let hull = inner_hull(k, &verts, &e_img, &f_img);
    let gap = sandwich_gap(&outer, hull.as_ref(), &verts)?;
    Ok(ApproxSet { inner_vertices: verts, inner_hull: hull, outer, gap })
}

/// Width of the sandwich between the approximations: the largest amount by
/// which the outer set exceeds the inner vertices along any probe direction
/// (outer facet normals, inner facet normals, and the ± axes). Zero when
/// the two representations coincide.
pub fn gap_estimate(a: &ApproxSet) -> Result<f64, ProjError> {
    sandwich_gap(&a.outer, a.inner_hull.as_ref(), &a.inner_vertices)
}

fn sandwich_gap(
    outer: &Polyhedron,
    hull: Option<&Polyhedron>,
    verts: &[DVector<f64>],
) -> Result<f64, ProjError> {
    if verts.is_empty() {
        return Ok(f64::INFINITY);
    }
    let k = outer.dim;
    let mut dirs: Vec<DVector<f64>> = Vec::new();
    let push_dir = |d: DVector<f64>, dirs: &mut Vec<DVector<f64>>| {
        let norm = d.norm();
        if norm < 1e-12 {
            return;
        }
        let dn = d / norm;
        if !dirs.iter().any(|q| (q - &dn).norm() < 1e-9) {
            dirs.push(dn);
        }
    };
    for i in 0..outer.a.nrows() {
        push_dir(outer.a.row(i).transpose(), &mut dirs);
    }
    if let Some(h) = hull {
        for i in 0..h.a.nrows() {
            push_dir(h.a.row(i).transpose(), &mut dirs);
        }
    }
    for j in 0..k {
        for sgn in [1.0, -1.0] {
            let mut d = DVector::zeros(k);
            d[j] = sgn;
            push_dir(d, &mut dirs);
        }
    }
    let mut gap: f64 = 0.0;
    for d in &dirs {
        let so = match polytope::support(outer, d) {
            Ok((v, _)) => v,
            Err(PolyError::Unbounded(_)) => return Ok(f64::INFINITY),
            Err(e) => return Err(e.into()),
        };
        let si = verts.iter().map(|v| d.dot(v)).fold(f64::NEG_INFINITY, f64::max);
        gap = gap.max(so - si);
    }
    Ok(gap.max(0.0))
}

fn assemble_outer(
    k: usize,
    rows: &[(DVector<f64>, f64)],
    e_img: &DMatrix<f64>,
    f_img: &DVector<f64>,
) -> Polyhedron {
    let a = DMatrix::from_fn(rows.len(), k, |i, j| rows[i].0[j]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|(_, v)| *v));
    Polyhedron { dim: k, a, b, e: e_img.clone(), f: f_img.clone() }
}

fn push_unique(list: &mut Vec<DVector<f64>>, v: DVector<f64>, tol: f64) {
    if !list.iter().any(|u| (u - &v).norm() <= tol) {
        list.push(v);
    }
}

/// Equality rows of the image: for each equality `e·x = f` of the source,
/// a row `c·y = f` with `Mᵀ·c = e` (when such a `c` exists).
fn transfer_equalities(
    e_x: &DMatrix<f64>,
    f_x: &DVector<f64>,
    m: &DMatrix<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let k = m.nrows();
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    if e_x.nrows() > 0 {
        let mt = m.transpose();
        let svd = mt.clone().svd(true, true);
        for i in 0..e_x.nrows() {
            let e_row = e_x.row(i).transpose();
            if let Ok(c) = svd.solve(&e_row, 1e-12) {
                let resid = (&mt * &c - &e_row).norm();
                if resid <= 1e-8 * e_row.norm().max(1.0) {
                    rows.push((c, f_x[i]));
                }
            }
        }
    }
    let rows = dedupe_eq_rows(rows);
    let e = DMatrix::from_fn(rows.len(), k, |i, j| rows[i].0[j]);
    let f = DVector::from_iterator(rows.len(), rows.iter().map(|(_, v)| *v));
    (e, f)
}

/// H-representation of the convex hull of a point cloud whose effective
/// dimension (after the given equalities) is at most 3; `None` above that.
/// Facets are found by brute-force side checks over point pairs/triples.
fn inner_hull(
    k: usize,
    verts: &[DVector<f64>],
    e_img: &DMatrix<f64>,
    f_img: &DVector<f64>,
) -> Option<Polyhedron> {
    if verts.is_empty() {
        return None;
    }
    let basis = nullspace_basis(e_img); // k × eff
    let eff = basis.ncols();
    if eff > 3 {
        return None;
    }
    let anchor = &verts[0];
    let pts: Vec<DVector<f64>> = verts.iter().map(|v| basis.transpose() * (v - anchor)).collect();
    let scale = pts
        .iter()
        .map(|t| t.norm())
        .fold(0.0_f64, f64::max)
        .max(1.0);
    let side_tol = 1e-9 * scale;

    let mut t_rows: Vec<(DVector<f64>, f64)> = Vec::new();
    let emit = |normal: DVector<f64>, offset: f64, t_rows: &mut Vec<(DVector<f64>, f64)>| {
        let norm = normal.norm();
        if norm < 1e-12 {
            return;
        }
        t_rows.push((normal / norm, offset / norm));
    };

    match eff {
        0 => {
            // Single point: pin every coordinate.
            return Some(Polyhedron {
                dim: k,
                a: DMatrix::zeros(0, k),
                b: DVector::zeros(0),
                e: DMatrix::identity(k, k),
                f: anchor.clone(),
            });
        }
        1 => {
            let lo = pts.iter().map(|t| t[0]).fold(f64::INFINITY, f64::min);
            let hi = pts.iter().map(|t| t[0]).fold(f64::NEG_INFINITY, f64::max);
            emit(DVector::from_vec(vec![1.0]), hi, &mut t_rows);
            emit(DVector::from_vec(vec![-1.0]), -lo, &mut t_rows);
        }
        2 => {
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    let d0 = pts[j][0] - pts[i][0];
                    let d1 = pts[j][1] - pts[i][1];
                    if d0.abs() + d1.abs() < 1e-12 {
                        continue;
                    }
                    let normal = DVector::from_vec(vec![d1, -d0]);
                    let offset = normal.dot(&pts[i]);
                    let mut above = false;
                    let mut below = false;
                    for t in &pts {
                        let s = normal.dot(t) - offset;
                        if s > side_tol * normal.norm() {
                            above = true;
                        } else if s < -side_tol * normal.norm() {
                            below = true;
                        }
                    }
                    if !above {
                        emit(normal.clone(), offset, &mut t_rows);
                    }
                    if !below {
                        emit(-normal, -offset, &mut t_rows);
                    }
                }
            }
        }
        _ => {
            for i in 0..pts.len() {
                for j in (i + 1)..pts.len() {
                    for l in (j + 1)..pts.len() {
                        let u = &pts[j] - &pts[i];
                        let w = &pts[l] - &pts[i];
                        let normal = DVector::from_vec(vec![
                            u[1] * w[2] - u[2] * w[1],
                            u[2] * w[0] - u[0] * w[2],
                            u[0] * w[1] - u[1] * w[0],
                        ]);
                        let nn = normal.norm();
                        if nn < 1e-12 * scale * scale {
                            continue;
                        }
                        let offset = normal.dot(&pts[i]);
                        let mut above = false;
                        let mut below = false;
                        for t in &pts {
                            let s = normal.dot(t) - offset;
                            if s > side_tol * nn {
                                above = true;
                            } else if s < -side_tol * nn {
                                below = true;
                            }
                        }
                        if !above {
                            emit(normal.clone(), offset, &mut t_rows);
                        }
                        if !below {
                            emit(-normal, -offset, &mut t_rows);
                        }
                    }
                }
            }
        }
    }
    let t_rows = dedupe_ineq_rows(t_rows);
    if t_rows.is_empty() {
        // Degenerate cloud (all points coincide in parameter space up to
        // tolerance): fall back to the single-point pin.
        return Some(Polyhedron {
            dim: k,
            a: DMatrix::zeros(0, k),
            b: DVector::zeros(0),
            e: DMatrix::identity(k, k),
            f: anchor.clone(),
        });
    }
    // Map parameter-space rows n·t ≤ c back to y-space:
    // t = basisᵀ(y − anchor) ⇒ (basis·n)·y ≤ c + (basis·n)·anchor.
    let mut a = DMatrix::zeros(t_rows.len(), k);
    let mut b = DVector::zeros(t_rows.len());
    for (i, (nrm, off)) in t_rows.iter().enumerate() {
        let ny = &basis * nrm;
        for j in 0..k {
            a[(i, j)] = ny[j];
        }
        b[i] = off + ny.dot(anchor);
    }
    Some(Polyhedron { dim: k, a, b, e: e_img.clone(), f: f_img.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{generator_polyhedron, line_polyhedron};
    use crate::polytope::{contains, vertices_2d};
    use crate::testfix;
    use crate::lpsolve::{self, LpProblem};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    fn unit_square() -> Polyhedron {
        Polyhedron::from_box(&[0.0, 0.0], &[1.0, 1.0])
    }

    use crate::testfix::sixbus_regions;

    /// LP oracle: is the fiber {x ∈ P : M·x = y} nonempty?
    fn fiber_feasible(p: &Polyhedron, m: &DMatrix<f64>, y: &DVector<f64>) -> bool {
        let mut e = DMatrix::zeros(p.e.nrows() + m.nrows(), p.dim);
        e.view_mut((0, 0), (p.e.nrows(), p.dim)).copy_from(&p.e);
        e.view_mut((p.e.nrows(), 0), (m.nrows(), p.dim)).copy_from(m);
        let mut f = DVector::zeros(p.f.len() + y.len());
        f.view_mut((0, 0), (p.f.len(), 1)).copy_from(&p.f);
        f.view_mut((p.f.len(), 0), (y.len(), 1)).copy_from(y);
        let lp = LpProblem::feasibility(p.dim)
            .with_ineq(p.a.clone(), p.b.clone())
            .with_eq(e, f);
        lpsolve::feasible(&lp).unwrap()
    }

    #[test]
    fn map_validation() {
        assert!(AggregationMap::new(vec![0, 1, 0], 2).is_ok());
        // Identity-like maps are allowed at the type level.
        assert!(AggregationMap::new(vec![0, 1, 2], 3).is_ok());
        // Region out of range.
        assert!(matches!(
            AggregationMap::new(vec![0, 2], 2),
            Err(ProjError::BadMap(_))
        ));
        // Empty region.
        assert!(matches!(
            AggregationMap::new(vec![0, 0], 2),
            Err(ProjError::BadMap(_))
        ));
    }

    #[test]
    fn apply_map_examples() {
        let ident = AggregationMap::new(vec![0, 1, 2], 3).unwrap();
        let x = dv(&[1.0, -2.0, 1.0]);
        assert_eq!(apply_map(&ident, &x), x);
        let one = AggregationMap::new(vec![0, 0, 0], 1).unwrap();
        assert_eq!(apply_map(&one, &x), dv(&[0.0]));
        let t = sixbus_regions();
        let y = apply_map(&t, &dv(&[3000.0, 0.0, 0.0, 3000.0, 0.0, -6000.0]));
        assert_eq!(y, dv(&[3000.0, 3000.0, -6000.0]));
    }

    #[test]
    fn exact_identity_permutation() {
        let sq = unit_square();
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let img = linear_image_exact(&sq, &swap).unwrap();
        // The square is symmetric under the swap: probe equivalence.
        for i in 0..500 {
            let x = -0.5 + 2.0 * ((i * 7919) % 500) as f64 / 500.0;
            let y = -0.5 + 2.0 * ((i * 104729) % 500) as f64 / 500.0;
            let pt = dv(&[x, y]);
            assert_eq!(contains(&sq, &pt, 1e-7), contains(&img, &pt, 1e-7), "probe {i}");
        }
    }

    #[test]
    fn exact_sum_of_square_is_segment() {
        let sq = unit_square();
        let sum = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let img = linear_image_exact(&sq, &sum).unwrap();
        assert_eq!(img.dim, 1);
        let (hi, _) = polytope::support(&img, &dv(&[1.0])).unwrap();
        let (lo_neg, _) = polytope::support(&img, &dv(&[-1.0])).unwrap();
        assert!((hi - 2.0).abs() < 1e-9);
        assert!(lo_neg.abs() < 1e-9);
        assert!(contains(&img, &dv(&[1.5]), 1e-9));
        assert!(!contains(&img, &dv(&[2.5]), 1e-9));
    }

    #[test]
    fn exact_empty_source() {
        let empty = Polyhedron::empty(3);
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let img = linear_image_exact(&empty, &m).unwrap();
        assert!(is_empty(&img).unwrap());
    }

    #[test]
    fn exact_dependent_rows_rejected() {
        let sq = unit_square();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert!(matches!(
            linear_image_exact(&sq, &m),
            Err(ProjError::BadMap(_))
        ));
    }

    #[test]
    fn exact_row_cap_enforced() {
        // Projecting a generic 6-cube section with a tiny cap trips the
        // resource error instead of looping.
        let net = testfix::sixbus_base();
        let p = polytope::intersect(
            &generator_polyhedron(&net),
            &line_polyhedron(&net).unwrap(),
        )
        .unwrap();
        let t = sixbus_regions();
        match linear_image_exact_capped(&p, &t.matrix(), 3) {
            Err(ProjError::RowCap { rows, cap }) => {
                assert_eq!(cap, 3);
                assert!(rows > 3);
            }
            other => panic!("expected row cap error, got {other:?}"),
        }
    }

    #[test]
    fn sixbus_generation_image_pentagon() {
        let net = testfix::sixbus_base();
        let t = sixbus_regions();
        let img = image_exact(&generator_polyhedron(&net), &t).unwrap();
        let vs = vertices_2d(&img).unwrap();
        let expect = [
            (7000.0, -3000.0),
            (-3000.0, -3000.0),
            (-3000.0, -4000.0),
            (-1000.0, -6000.0),
            (7000.0, -6000.0),
        ];
        assert_eq!(vs.len(), expect.len(), "vertices: {vs:?}");
        for &(yn, ys) in &expect {
            assert!(
                vs.iter().any(|v| (v[0] - yn).abs() < 0.5 && (v[2] - ys).abs() < 0.5),
                "missing vertex ({yn}, {ys}) in {vs:?}"
            );
        }
    }

    #[test]
    fn sixbus_joint_image_hexagon() {
        let net = testfix::sixbus_base();
        let t = sixbus_regions();
        let p = polytope::intersect(
            &generator_polyhedron(&net),
            &line_polyhedron(&net).unwrap(),
        )
        .unwrap();
        let img = image_exact(&p, &t).unwrap();
        let vs = vertices_2d(&img).unwrap();
        let expect = [
            (7000.0, -3000.0),
            (-3000.0, -3000.0),
            (-3000.0, -4000.0),
            (-1800.0, -5200.0),
            (1800.0, -6000.0),
            (7000.0, -6000.0),
        ];
        assert_eq!(vs.len(), expect.len(), "vertices: {vs:?}");
        for &(yn, ys) in &expect {
            assert!(
                vs.iter().any(|v| (v[0] - yn).abs() < 0.5 && (v[2] - ys).abs() < 0.5),
                "missing vertex ({yn}, {ys}) in {vs:?}"
            );
        }
    }

    #[test]
    fn sixbus_image_matches_fiber_oracle() {
        let net = testfix::sixbus_base();
        let t = sixbus_regions();
        let m = t.matrix();
        let p = polytope::intersect(
            &generator_polyhedron(&net),
            &line_polyhedron(&net).unwrap(),
        )
        .unwrap();
        let img = image_exact(&p, &t).unwrap();
        // Probe a grid over the (north, south) plane, center balancing.
        let mut checked = 0;
        let mut inside = 0;
        for i in 0..25 {
            for j in 0..25 {
                let yn = -4000.0 + 12_000.0 * i as f64 / 24.0;
                let ys = -7000.0 + 4500.0 * j as f64 / 24.0;
                let y = dv(&[yn, -yn - ys, ys]);
                let member = contains(&img, &y, 1e-6);
                let fiber = fiber_feasible(&p, &m, &y);
                // Skip probes within 1 MW of the boundary: membership and
                // fiber LP may legitimately disagree inside the tolerance
                // band there.
                let near_edge = {
                    let mut tight = false;
                    for r in 0..img.a.nrows() {
                        let row = img.a.row(r);
                        let slack = img.b[r] - row.transpose().dot(&y);
                        if slack.abs() < 1.0 * row.norm() {
                            tight = true;
                        }
                    }
                    tight
                };
                if !near_edge {
                    assert_eq!(member, fiber, "probe ({yn}, {ys})");
                    checked += 1;
                    if member {
                        inside += 1;
                    }
                }
            }
        }
        assert!(checked > 400, "only {checked} clean probes");
        assert!(inside > 100, "only {inside} interior probes");
    }

    #[test]
    fn image_carries_balance() {
        let net = testfix::sixbus_base();
        let t = sixbus_regions();
        let img = image_exact(&generator_polyhedron(&net), &t).unwrap();
        let ones = dv(&[1.0, 1.0, 1.0]);
        let (hi, _) = polytope::support(&img, &ones).unwrap();
        let (lo, _) = polytope::support(&img, &(-&ones)).unwrap();
        assert!(hi.abs() < 1e-9 && lo.abs() < 1e-9);
    }

    #[test]
    fn approx_square_identity_axes() {
        let sq = unit_square();
        let t = AggregationMap::new(vec![0, 1], 2).unwrap();
        let a = image_approx(&sq, &t, 4, 0.0).unwrap();
        for i in 0..500 {
            let x = -0.5 + 2.0 * ((i * 7919) % 500) as f64 / 500.0;
            let y = -0.5 + 2.0 * ((i * 104729) % 500) as f64 / 500.0;
            let pt = dv(&[x, y]);
            assert_eq!(
                contains(&sq, &pt, 1e-7),
                contains(&a.outer, &pt, 1e-7),
                "outer must equal the box on probe {i}"
            );
        }
        for v in &a.inner_vertices {
            assert!(contains(&a.outer, v, 1e-6));
        }
    }

    #[test]
    fn approx_segment_closes_in_two_directions() {
        let sq = unit_square();
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let a = image_approx_oracle(&sq, &m, 2, 0.0, DEFAULT_SEED).unwrap();
        assert!(a.gap < 1e-9, "gap {}", a.gap);
        assert!(contains(&a.outer, &dv(&[0.0]), 1e-9));
        assert!(contains(&a.outer, &dv(&[2.0]), 1e-9));
        assert!(!contains(&a.outer, &dv(&[2.1]), 1e-9));
        let hull = a.inner_hull.expect("1-dimensional hull");
        assert!(contains(&hull, &dv(&[1.0]), 1e-9));
        assert!(!contains(&hull, &dv(&[-0.1]), 1e-9));
    }

    #[test]
    fn approx_unbounded_direction_reported() {
        let half = Polyhedron::from_ineq(
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
            dv(&[1.0]),
        );
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        match image_approx_oracle(&half, &m, 8, 0.0, DEFAULT_SEED) {
            Err(ProjError::Unbounded(d)) => {
                assert_eq!(d.len(), 2);
            }
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn approx_sixbus_converges_to_exact() {
        let net = testfix::sixbus_base();
        let t = sixbus_regions();
        let p = polytope::intersect(
            &generator_polyhedron(&net),
            &line_polyhedron(&net).unwrap(),
        )
        .unwrap();
        let exact = image_exact(&p, &t).unwrap();
        let a = image_approx(&p, &t, 64, 1.0).unwrap();
        assert!(a.gap <= 1.0, "gap {} MW", a.gap);
        // Soundness both ways on a probe grid.
        for i in 0..40 {
            for j in 0..40 {
                let yn = -4000.0 + 12_000.0 * i as f64 / 39.0;
                let ys = -7000.0 + 4500.0 * j as f64 / 39.0;
                let y = dv(&[yn, -yn - ys, ys]);
                if contains(&exact, &y, 1e-6) {
                    assert!(
                        contains(&a.outer, &y, 2e-6),
                        "exact point ({yn},{ys}) escaped the outer set"
                    );
                }
                if let Some(h) = &a.inner_hull {
                    // Inner hull members lie in the exact image, up to the
                    // certified sandwich width.
                    if contains(h, &y, 1e-6) {
                        assert!(
                            contains(&exact, &y, a.gap + 1e-6),
                            "inner point ({yn},{ys}) outside the exact image"
                        );
                    }
                }
            }
        }
        // Inner vertices always admit feasible fibers.
        let m = t.matrix();
        for v in &a.inner_vertices {
            assert!(fiber_feasible(&p, &m, v), "inner vertex {v:?} has no fiber");
        }
    }

    #[test]
    fn approx_gap_nonincreasing_in_budget() {
        let net = testfix::sixbus_base();
        let t = sixbus_regions();
        let p = polytope::intersect(
            &generator_polyhedron(&net),
            &line_polyhedron(&net).unwrap(),
        )
        .unwrap();
        let mut last = f64::INFINITY;
        for budget in [8, 16, 32, 64] {
            let a = image_approx(&p, &t, budget, 0.0).unwrap();
            assert!(
                a.gap <= last + 1e-9,
                "budget {budget}: gap {} after {}",
                a.gap,
                last
            );
            last = a.gap;
        }
    }

    #[test]
    fn approx_deterministic() {
        let net = testfix::sixbus_base();
        let t = sixbus_regions();
        let p = generator_polyhedron(&net);
        let a1 = image_approx(&p, &t, 24, 0.0).unwrap();
        let a2 = image_approx(&p, &t, 24, 0.0).unwrap();
        assert_eq!(a1.gap.to_bits(), a2.gap.to_bits());
        assert_eq!(a1.inner_vertices.len(), a2.inner_vertices.len());
        for (u, v) in a1.inner_vertices.iter().zip(&a2.inner_vertices) {
            assert_eq!(u, v);
        }
        assert_eq!(a1.outer.a, a2.outer.a);
    }

    #[test]
    fn gap_zero_when_identical() {
        let sq = unit_square();
        let verts = vec![dv(&[0.0, 0.0]), dv(&[1.0, 0.0]), dv(&[1.0, 1.0]), dv(&[0.0, 1.0])];
        let a = ApproxSet {
            inner_vertices: verts.clone(),
            inner_hull: Some(sq.clone()),
            outer: sq,
            gap: 0.0,
        };
        assert!(gap_estimate(&a).unwrap() < 1e-9);
    }

    #[test]
    fn gap_square_versus_inscribed_diamond() {
        // Outer [−.5,.5]², inner the diamond through the edge midpoints.
        // Axis normals agree (gap 0 there); the diamond's facet normals
        // (diagonals) expose the corner cut: (0.5+0.5)/√2 − 0.5/√2 = 1/(2√2).
        let outer = Polyhedron::from_box(&[-0.5, -0.5], &[0.5, 0.5]);
        let verts = vec![
            dv(&[0.5, 0.0]),
            dv(&[0.0, 0.5]),
            dv(&[-0.5, 0.0]),
            dv(&[0.0, -0.5]),
        ];
        let hull = inner_hull(2, &verts, &DMatrix::zeros(0, 2), &DVector::zeros(0)).unwrap();
        // Axis-normal agreement.
        let (sq_x, _) = polytope::support(&outer, &dv(&[1.0, 0.0])).unwrap();
        let diamond_x = verts.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
        assert!((sq_x - diamond_x).abs() < 1e-12);
        let a = ApproxSet { inner_vertices: verts, inner_hull: Some(hull), outer, gap: 0.0 };
        let g = gap_estimate(&a).unwrap();
        let expect = 1.0 / (2.0 * (2.0_f64).sqrt());
        assert!((g - expect).abs() < 1e-9, "gap {g} vs {expect}");
    }
}
