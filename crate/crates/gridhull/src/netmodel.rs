//! Power-system data model, DC power-flow sensitivities, and the generator
//! and line constraint polyhedra.
//!
//! Everything numeric is expressed on net bus injections `x` in MW
//! (generation minus demand per bus). Line flows are linear in balanced
//! injections: `f = B·x`, with the injection-shift matrix `B` built from a
//! reference-bus reduced susceptance Laplacian and afterwards row-centered,
//! which makes it independent of the reference choice on balanced vectors.
//!
//! The Laplacian solve is a sparse LDLᵀ factorization with a greedy
//! minimum-degree ordering, so sensitivity rows for single lines can be
//! produced on demand without materializing the dense matrix — the
//! thousands-of-buses path relies on this.

use crate::polytope::Polyhedron;
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeSet;
use thiserror::Error;

/// Power balance tolerance on injection vectors, MW.
pub const BALANCE_TOL: f64 = 1e-6;

/// Thermal-limit sentinel used when a data source marks a line unlimited.
pub const UNLIMITED_MW: f64 = 99_999.0;

/// Net injection vector in MW, ordered as `NetworkModel::buses`.
pub type InjectionVector = DVector<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: i64,
    /// Demand in MW, ≥ 0.
    pub demand: f64,
    /// Upper generation limit in MW, ≥ 0.
    pub gen_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: i64,
    pub from_bus: i64,
    pub to_bus: i64,
    /// Series susceptance in p.u., > 0.
    pub susceptance: f64,
    /// Thermal limit in MW, > 0.
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("duplicate bus id {0}")]
    DuplicateBus(i64),
    #[error("line {line} references unknown bus {bus}")]
    UnknownBus { line: i64, bus: i64 },
    #[error("line {0} connects bus {1} to itself")]
    SelfLoop(i64, i64),
    #[error("line {0} has non-positive susceptance {1}")]
    BadSusceptance(i64, f64),
    #[error("line {0} has non-positive limit {1}")]
    BadLimit(i64, f64),
    #[error("bus {0} has negative demand {1}")]
    BadDemand(i64, f64),
    #[error("bus {0} has negative generation limit {1}")]
    BadGenMax(i64, f64),
    #[error("network splits into {} components: {}", components.len(), summarize_components(components))]
    Disconnected { components: Vec<Vec<i64>> },
    #[error("injection imbalance {0:+.6} MW exceeds {BALANCE_TOL} MW")]
    Imbalance(f64),
    #[error("injection vector has {got} entries, network has {want} buses")]
    BadLength { got: usize, want: usize },
    #[error("susceptance system singular at elimination step {0}")]
    Singular(usize),
}

fn summarize_components(components: &[Vec<i64>]) -> String {
    let mut parts = Vec::new();
    for comp in components.iter().take(4) {
        let ids: Vec<String> = comp.iter().take(8).map(|id| id.to_string()).collect();
        let tail = if comp.len() > 8 { ", …" } else { "" };
        parts.push(format!("{{{}{}}}", ids.join(", "), tail));
    }
    if components.len() > 4 {
        parts.push(format!("… ({} more)", components.len() - 4));
    }
    parts.join(", ")
}

impl NetworkModel {
    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn n_line(&self) -> usize {
        self.lines.len()
    }

    /// Position of a bus id in the bus ordering.
    pub fn bus_index(&self, id: i64) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Line endpoints as bus positions, in line order.
    pub fn line_endpoints(&self) -> Result<Vec<(usize, usize)>, NetError> {
        let mut index = std::collections::HashMap::with_capacity(self.buses.len());
        for (i, b) in self.buses.iter().enumerate() {
            if index.insert(b.id, i).is_some() {
                return Err(NetError::DuplicateBus(b.id));
            }
        }
        self.lines
            .iter()
            .map(|l| {
                let f = *index
                    .get(&l.from_bus)
                    .ok_or(NetError::UnknownBus { line: l.id, bus: l.from_bus })?;
                let t = *index
                    .get(&l.to_bus)
                    .ok_or(NetError::UnknownBus { line: l.id, bus: l.to_bus })?;
                if f == t {
                    return Err(NetError::SelfLoop(l.id, l.from_bus));
                }
                Ok((f, t))
            })
            .collect()
    }

    /// Structural validation: unique ids, sane signs, connectivity.
    pub fn validate(&self) -> Result<(), NetError> {
        for b in &self.buses {
            if b.demand < 0.0 {
                return Err(NetError::BadDemand(b.id, b.demand));
            }
            if b.gen_max < 0.0 {
                return Err(NetError::BadGenMax(b.id, b.gen_max));
            }
        }
        for l in &self.lines {
            if !(l.susceptance > 0.0) {
                return Err(NetError::BadSusceptance(l.id, l.susceptance));
            }
            if !(l.limit > 0.0) {
                return Err(NetError::BadLimit(l.id, l.limit));
            }
        }
        let ends = self.line_endpoints()?;
        // Connectivity by breadth-first search.
        let n = self.n_bus();
        if n == 0 {
            return Ok(());
        }
        let mut adj = vec![Vec::new(); n];
        for &(f, t) in &ends {
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut components: Vec<Vec<i64>> = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = std::collections::VecDeque::from([start]);
            seen[start] = true;
            while let Some(u) = queue.pop_front() {
                comp.push(self.buses[u].id);
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        if components.len() > 1 {
            return Err(NetError::Disconnected { components });
        }
        Ok(())
    }

    /// Per-bus injection bounds `(lower, upper)` in MW:
    /// `−demand ≤ x_i ≤ gen_max_i − demand_i`.
    pub fn injection_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.buses.iter().map(|b| -b.demand).collect();
        let up = self.buses.iter().map(|b| b.gen_max - b.demand).collect();
        (lo, up)
    }
}

/// Check power balance and vector length.
fn check_balanced(n_bus: usize, x: &DVector<f64>) -> Result<(), NetError> {
    if x.len() != n_bus {
        return Err(NetError::BadLength { got: x.len(), want: n_bus });
    }
    let sum: f64 = x.iter().sum();
    if sum.abs() > BALANCE_TOL {
        return Err(NetError::Imbalance(sum));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sparse LDLᵀ with greedy minimum-degree ordering.
// ---------------------------------------------------------------------------

/// LDLᵀ factorization of a sparse symmetric positive-definite matrix.
/// Deterministic: ordering ties break on the smallest index.
pub(crate) struct SparseLdl {
    n: usize,
    /// `perm[k]` = original index eliminated at step k.
    perm: Vec<usize>,
    /// Columns of unit lower-triangular L (row index > column, ascending).
    cols: Vec<Vec<(usize, f64)>>,
    d: Vec<f64>,
}

impl SparseLdl {
    /// Factor from symmetric entries `(i, j, v)`; both triangles or one —
    /// duplicates are summed, and only `min(i,j) ≤ max(i,j)` placement is
    /// used, so supply each logical entry once.
    pub(crate) fn factor(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self, NetError> {
        if n == 0 {
            return Ok(Self { n, perm: vec![], cols: vec![], d: vec![] });
        }
        // Greedy minimum-degree ordering on the adjacency graph.
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for &(i, j, _) in entries {
            if i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
        let mut heap: BTreeSet<(usize, usize)> =
            (0..n).map(|v| (adj[v].len(), v)).collect();
        let mut perm = Vec::with_capacity(n);
        let mut eliminated = vec![false; n];
        while let Some(&(deg, v)) = heap.iter().next() {
            heap.remove(&(deg, v));
            if eliminated[v] || adj[v].len() != deg {
                continue; // stale heap entry
            }
            eliminated[v] = true;
            perm.push(v);
            let neigh: Vec<usize> = adj[v].iter().copied().collect();
            for &u in &neigh {
                adj[u].remove(&v);
            }
            for a in 0..neigh.len() {
                for b in (a + 1)..neigh.len() {
                    let (u, w) = (neigh[a], neigh[b]);
                    if adj[u].insert(w) {
                        adj[w].insert(u);
                    }
                }
            }
            for &u in &neigh {
                heap.insert((adj[u].len(), u));
            }
        }
        debug_assert_eq!(perm.len(), n);
        let mut iperm = vec![0; n];
        for (k, &v) in perm.iter().enumerate() {
            iperm[v] = k;
        }

        // Permuted upper-triangle columns (row ≤ col), duplicates summed.
        let mut upper: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in entries {
            let (pi, pj) = (iperm[i], iperm[j]);
            let (r, c) = if pi <= pj { (pi, pj) } else { (pj, pi) };
            upper[c].push((r, v));
        }
        for col in upper.iter_mut() {
            col.sort_unstable_by_key(|&(r, _)| r);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
            for &(r, v) in col.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == r => last.1 += v,
                    _ => merged.push((r, v)),
                }
            }
            *col = merged;
        }

        // Elimination tree.
        let none = usize::MAX;
        let mut parent = vec![none; n];
        let mut ancestor = vec![none; n];
        for k in 0..n {
            for &(i, _) in &upper[k] {
                let mut i = i;
                while i != none && i < k {
                    let next = ancestor[i];
                    ancestor[i] = k;
                    if next == none {
                        parent[i] = k;
                    }
                    i = next;
                }
            }
        }

        // Numeric factorization (row-by-row sparse triangular solves).
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut flag = vec![none; n];
        let mut pattern = vec![0usize; n];
        let mut stack = vec![0usize; n];
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for &(i, v) in &upper[k] {
                y[i] += v;
                let mut len = 0;
                let mut i = i;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                    if i == none {
                        break;
                    }
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    stack[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for s in top..n {
                let i = stack[s];
                let yi = y[i];
                y[i] = 0.0;
                for &(r, lv) in &cols[i] {
                    y[r] -= lv * yi;
                }
                if d[i].abs() < 1e-300 {
                    return Err(NetError::Singular(i));
                }
                let lki = yi / d[i];
                d[k] -= lki * yi;
                cols[i].push((k, lki));
            }
            if d[k].abs() < 1e-300 {
                return Err(NetError::Singular(k));
            }
        }
        Ok(Self { n, perm, cols, d })
    }

    /// Solve `M x = b` for the factored matrix.
    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = vec![0.0; self.n];
        for k in 0..self.n {
            x[k] = b[self.perm[k]];
        }
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                for &(r, v) in &self.cols[j] {
                    x[r] -= v * xj;
                }
            }
        }
        for j in 0..self.n {
            x[j] /= self.d[j];
        }
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for &(r, v) in &self.cols[j] {
                s -= v * x[r];
            }
            x[j] = s;
        }
        let mut out = DVector::zeros(self.n);
        for k in 0..self.n {
            out[self.perm[k]] = x[k];
        }
        out
    }
}

// ---------------------------------------------------------------------------
// DC solver: reduced Laplacian factorization + on-demand sensitivity rows.
// ---------------------------------------------------------------------------

/// Factored DC power-flow operator for one network. Produces line
/// sensitivity rows on demand and maps balanced injections to flows without
/// ever forming the dense sensitivity matrix.
pub struct DcSolver {
    n_bus: usize,
    ref_idx: usize,
    factor: SparseLdl,
    ends: Vec<(usize, usize)>,
    susceptance: Vec<f64>,
    limits: Vec<f64>,
}

impl DcSolver {
    /// Build with the first bus as the internal angle reference.
    pub fn new(net: &NetworkModel) -> Result<Self, NetError> {
        Self::with_reference(net, 0)
    }

    /// Build with an explicit reference bus position. The resulting
    /// sensitivities are reference-independent after row centering; the
    /// choice only affects round-off.
    pub fn with_reference(net: &NetworkModel, ref_idx: usize) -> Result<Self, NetError> {
        net.validate()?;
        let n = net.n_bus();
        assert!(ref_idx < n.max(1), "reference bus position out of range");
        let ends = net.line_endpoints()?;
        // Reduced index: skip the reference bus.
        let red = |i: usize| -> Option<usize> {
            if i == ref_idx {
                None
            } else if i < ref_idx {
                Some(i)
            } else {
                Some(i - 1)
            }
        };
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(3 * ends.len());
        for (l, &(f, t)) in ends.iter().enumerate() {
            let b = net.lines[l].susceptance;
            if let Some(rf) = red(f) {
                entries.push((rf, rf, b));
            }
            if let Some(rt) = red(t) {
                entries.push((rt, rt, b));
            }
            if let (Some(rf), Some(rt)) = (red(f), red(t)) {
                entries.push((rf, rt, -b));
            }
        }
        let factor = SparseLdl::factor(n.saturating_sub(1), &entries)?;
        Ok(Self {
            n_bus: n,
            ref_idx,
            factor,
            ends,
            susceptance: net.lines.iter().map(|l| l.susceptance).collect(),
            limits: net.lines.iter().map(|l| l.limit).collect(),
        })
    }

    pub fn n_bus(&self) -> usize {
        self.n_bus
    }

    pub fn n_line(&self) -> usize {
        self.ends.len()
    }

    /// Thermal limits in line order, MW.
    pub fn limits(&self) -> &[f64] {
        &self.limits
    }

    /// Line endpoints as bus positions.
    pub fn endpoints(&self) -> &[(usize, usize)] {
        &self.ends
    }

    fn reduce(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut r = DVector::zeros(self.n_bus - 1);
        let mut k = 0;
        for i in 0..self.n_bus {
            if i != self.ref_idx {
                r[k] = x[i];
                k += 1;
            }
        }
        r
    }

    fn expand(&self, r: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.n_bus);
        let mut k = 0;
        for i in 0..self.n_bus {
            if i != self.ref_idx {
                x[i] = r[k];
                k += 1;
            }
        }
        x
    }

    /// Sensitivity row of one line (MW flow per MW balanced injection),
    /// centered so the entries sum to zero.
    pub fn isf_row(&self, line: usize) -> DVector<f64> {
        let (f, t) = self.ends[line];
        let b = self.susceptance[line];
        if self.n_bus <= 1 {
            return DVector::zeros(self.n_bus);
        }
        let mut rhs = DVector::zeros(self.n_bus);
        rhs[f] += 1.0;
        rhs[t] -= 1.0;
        let w = self.factor.solve(&self.reduce(&rhs));
        let mut row = self.expand(&w) * b;
        let mean = row.iter().sum::<f64>() / self.n_bus as f64;
        row.add_scalar_mut(-mean);
        row
    }

    /// Flows on every line for a balanced injection vector, MW.
    pub fn flows(&self, x: &DVector<f64>) -> Result<DVector<f64>, NetError> {
        check_balanced(self.n_bus, x)?;
        if self.n_bus <= 1 {
            return Ok(DVector::zeros(self.n_line()));
        }
        let theta = self.factor.solve(&self.reduce(x));
        let full = self.expand(&theta);
        let mut f = DVector::zeros(self.n_line());
        for (l, &(a, b)) in self.ends.iter().enumerate() {
            f[l] = self.susceptance[l] * (full[a] - full[b]);
        }
        Ok(f)
    }

    /// Dense sensitivity matrix assembled row by row.
    pub fn isf_matrix(&self) -> IsfMatrix {
        let mut m = DMatrix::zeros(self.n_line(), self.n_bus);
        for l in 0..self.n_line() {
            let row = self.isf_row(l);
            for j in 0..self.n_bus {
                m[(l, j)] = row[j];
            }
        }
        IsfMatrix { m }
    }
}

/// Dense injection-to-flow sensitivity matrix (n_line × n_bus), rows
/// centered to sum to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct IsfMatrix {
    pub m: DMatrix<f64>,
}

impl IsfMatrix {
    pub fn n_line(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_bus(&self) -> usize {
        self.m.ncols()
    }

    pub fn row(&self, l: usize) -> DVector<f64> {
        self.m.row(l).transpose()
    }
}

/// Injection-to-flow sensitivity matrix of a connected network.
pub fn isf_matrix(net: &NetworkModel) -> Result<IsfMatrix, NetError> {
    Ok(DcSolver::new(net)?.isf_matrix())
}

/// Line flows for a balanced injection vector.
pub fn dc_flows(net: &NetworkModel, x: &InjectionVector) -> Result<DVector<f64>, NetError> {
    DcSolver::new(net)?.flows(x)
}

/// Injection box intersected with the power-balance hyperplane:
/// `{ x : −demand_i ≤ x_i ≤ gen_max_i − demand_i, Σ x = 0 }`.
pub fn generator_polyhedron(net: &NetworkModel) -> Polyhedron {
    let (lo, up) = net.injection_bounds();
    let n = net.n_bus();
    Polyhedron::from_box(&lo, &up).with_eq(
        DMatrix::from_element(1, n, 1.0),
        DVector::zeros(1),
    )
}

/// Thermal-limit polyhedron on balanced injections:
/// `{ x : |B·x|_l ≤ limit_l, Σ x = 0 }` with exactly `2·n_line`
/// inequality rows (one per flow sign).
pub fn line_polyhedron(net: &NetworkModel) -> Result<Polyhedron, NetError> {
    let solver = DcSolver::new(net)?;
    let n = net.n_bus();
    let m = net.n_line();
    let mut a = DMatrix::zeros(2 * m, n);
    let mut b = DVector::zeros(2 * m);
    for l in 0..m {
        let row = solver.isf_row(l);
        for j in 0..n {
            a[(2 * l, j)] = row[j];
            a[(2 * l + 1, j)] = -row[j];
        }
        b[2 * l] = net.lines[l].limit;
        b[2 * l + 1] = net.lines[l].limit;
    }
    Ok(Polyhedron::from_ineq(a, b).with_eq(
        DMatrix::from_element(1, n, 1.0),
        DVector::zeros(1),
    ))
}

/// True when `x` satisfies generation bounds, power balance, and every
/// thermal limit, all within [`BALANCE_TOL`] MW.
pub fn is_feasible(net: &NetworkModel, x: &InjectionVector) -> Result<bool, NetError> {
    if x.len() != net.n_bus() {
        return Err(NetError::BadLength { got: x.len(), want: net.n_bus() });
    }
    let (lo, up) = net.injection_bounds();
    for i in 0..net.n_bus() {
        if x[i] < lo[i] - BALANCE_TOL || x[i] > up[i] + BALANCE_TOL {
            return Ok(false);
        }
    }
    let sum: f64 = x.iter().sum();
    if sum.abs() > BALANCE_TOL {
        return Ok(false);
    }
    let flows = dc_flows(net, x)?;
    for (l, line) in net.lines.iter().enumerate() {
        if flows[l].abs() > line.limit + BALANCE_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::contains;
    use crate::testfix;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn two_bus_single_path() {
        let net = testfix::twobus();
        let f = dc_flows(&net, &dv(&[7.0, -7.0])).unwrap();
        assert_eq!(f.len(), 1);
        assert!((f[0] - 7.0).abs() < 1e-9);
    }

    #[test]
    fn ring_splits_parallel_paths() {
        // Lines 1–2, 1–3, 3–2 with equal susceptances: injection (P, −P, 0)
        // sends 2P/3 on the direct line and P/3 around the long path.
        let net = testfix::ring3();
        let p = 300.0;
        let f = dc_flows(&net, &dv(&[p, -p, 0.0])).unwrap();
        assert!((f[0] - 2.0 * p / 3.0).abs() <= 1e-12 * p);
        assert!((f[1] - p / 3.0).abs() <= 1e-12 * p);
        assert!((f[2] - p / 3.0).abs() <= 1e-12 * p);
    }

    #[test]
    fn zero_injection_zero_flow() {
        let net = testfix::sixbus_base();
        let f = dc_flows(&net, &DVector::zeros(6)).unwrap();
        assert!(f.norm() == 0.0);
    }

    #[test]
    fn reference_bus_invariance() {
        let net = testfix::sixbus_base();
        let base = DcSolver::with_reference(&net, 0).unwrap().isf_matrix();
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(7);
        let mut probes = Vec::new();
        for _ in 0..100 {
            let mut x = DVector::from_fn(6, |_, _| rng.gen_range(-1000.0..1000.0));
            let mean = x.iter().sum::<f64>() / 6.0;
            x.add_scalar_mut(-mean);
            probes.push(x);
        }
        for r in 1..6 {
            let alt = DcSolver::with_reference(&net, r).unwrap();
            let alt_m = alt.isf_matrix();
            assert!((&alt_m.m - &base.m).norm() < 1e-9 * base.m.norm().max(1.0));
            for x in &probes {
                let f0 = &base.m * x;
                let f1 = alt.flows(x).unwrap();
                let scale = f0.norm().max(1.0);
                assert!((f0 - f1).norm() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn isf_rows_sum_to_zero() {
        for net in [testfix::ring3(), testfix::sixbus_base()] {
            let isf = isf_matrix(&net).unwrap();
            for l in 0..isf.n_line() {
                let row = isf.row(l);
                assert!(row.iter().sum::<f64>().abs() <= 1e-9 * row.norm().max(1e-300));
            }
        }
    }

    #[test]
    fn sixbus_sensitivities_match_dense_solve() {
        // Independent oracle: dense Laplacian, reference bus removed, LU.
        let net = testfix::sixbus_base();
        let ends = net.line_endpoints().unwrap();
        let n = 6;
        let mut lap: DMatrix<f64> = DMatrix::zeros(n, n);
        for (l, &(f, t)) in ends.iter().enumerate() {
            let b = net.lines[l].susceptance;
            lap[(f, f)] += b;
            lap[(t, t)] += b;
            lap[(f, t)] -= b;
            lap[(t, f)] -= b;
        }
        let red = lap.view((1, 1), (n - 1, n - 1)).clone_owned();
        let lu = red.lu();
        let isf = isf_matrix(&net).unwrap();
        for l in 0..net.n_line() {
            let (f, t) = ends[l];
            let mut rhs = DVector::zeros(n - 1);
            if f > 0 {
                rhs[f - 1] += 1.0;
            }
            if t > 0 {
                rhs[t - 1] -= 1.0;
            }
            let w = lu.solve(&rhs).unwrap();
            let mut row = DVector::zeros(n);
            for j in 1..n {
                row[j] = w[j - 1] * net.lines[l].susceptance;
            }
            let mean = row.iter().sum::<f64>() / n as f64;
            row.add_scalar_mut(-mean);
            assert!((isf.row(l) - row).norm() < 1e-9);
        }
    }

    #[test]
    fn sixbus_north_to_south_unit_transfer() {
        // One MW from bus 1 to bus 6 splits evenly over the two symmetric
        // ring paths; the center coupling line carries nothing.
        let net = testfix::sixbus_base();
        let f = dc_flows(&net, &dv(&[1.0, 0.0, 0.0, 0.0, 0.0, -1.0])).unwrap();
        for l in 0..6 {
            assert!((f[l] - 0.5).abs() < 1e-9, "ring line {l}: {}", f[l]);
        }
        assert!(f[6].abs() < 1e-9, "coupling line: {}", f[6]);
    }

    #[test]
    fn sixbus_documented_dispatch_flows() {
        // Each region self-supplies except the south imports 3 GW from
        // bus 1 and 3 GW from bus 4.
        let net = testfix::sixbus_base();
        let x = dv(&[3000.0, 0.0, 0.0, 3000.0, 0.0, -6000.0]);
        let f = dc_flows(&net, &x).unwrap();
        // Oracle values from the dense solve, 1 decimal.
        let expect = [1285.7, 1714.3, 1285.7, 1714.3, 3428.6, 2571.4, 857.1];
        for l in 0..7 {
            assert!((f[l] - expect[l]).abs() < 0.1, "line {l}: {}", f[l]);
        }
        assert!(is_feasible(&net, &x).unwrap());
    }

    #[test]
    fn imbalance_reported() {
        let net = testfix::sixbus_base();
        match dc_flows(&net, &dv(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0])) {
            Err(NetError::Imbalance(s)) => assert!((s - 1.0).abs() < 1e-12),
            other => panic!("expected imbalance, got {other:?}"),
        }
    }

    #[test]
    fn flow_antisymmetry_exact() {
        let net = testfix::sixbus_base();
        let x = dv(&[250.0, -75.0, 125.0, -900.0, 400.0, 200.0]);
        let f_pos = dc_flows(&net, &x).unwrap();
        let f_neg = dc_flows(&net, &(-&x)).unwrap();
        for l in 0..7 {
            assert_eq!(f_pos[l], -f_neg[l]);
        }
    }

    #[test]
    fn generator_polyhedron_bounds() {
        let net = testfix::sixbus_base();
        let pg = generator_polyhedron(&net);
        assert_eq!(pg.dim, 6);
        assert_eq!(pg.n_eq(), 1);
        // Documented dispatch is inside.
        assert!(contains(&pg, &dv(&[3000.0, 0.0, 0.0, 3000.0, 0.0, -6000.0]), 1e-6));
        // Zero injection is not: bus 6 cannot self-supply (demand 6 GW,
        // generation cap 3 GW forces at least 3 GW of import).
        assert!(!contains(&pg, &DVector::zeros(6), 1e-6));
        // Upper bound at bus 1 is gen_max − demand = 7 GW.
        assert!(contains(&pg, &dv(&[7000.0, -1000.0, 0.0, 0.0, 0.0, -6000.0]), 1e-6));
        assert!(!contains(&pg, &dv(&[7001.0, -1001.0, 0.0, 0.0, 0.0, -6000.0]), 1e-6));
    }

    #[test]
    fn generator_polyhedron_single_bus() {
        let net = NetworkModel {
            base_mva: 100.0,
            buses: vec![Bus { id: 1, demand: 5.0, gen_max: 10.0 }],
            lines: vec![],
        };
        let pg = generator_polyhedron(&net);
        assert!(contains(&pg, &dv(&[0.0]), 1e-9));
        assert!(!contains(&pg, &dv(&[1.0]), 1e-9));
    }

    #[test]
    fn line_polyhedron_shape_and_boundary() {
        let net = testfix::sixbus_base();
        let pl = line_polyhedron(&net).unwrap();
        assert_eq!(pl.n_ineq(), 14);
        assert_eq!(pl.n_eq(), 1);
        assert!(contains(&pl, &DVector::zeros(6), 1e-9));
        // Scaling the north→south transfer until the tightest ring limit
        // (3300 MW at 0.5 MW/MW) is reached lands on the boundary.
        let t = 6600.0;
        assert!(contains(&pl, &dv(&[t, 0.0, 0.0, 0.0, 0.0, -t]), 1e-6));
        assert!(!contains(&pl, &dv(&[t + 1.0, 0.0, 0.0, 0.0, 0.0, -t - 1.0]), 1e-6));
    }

    #[test]
    fn two_bus_limit_violation() {
        let net = testfix::twobus();
        // Limit is 6 MW; pushing 7 MW violates it.
        let pl = line_polyhedron(&net).unwrap();
        assert!(!contains(&pl, &dv(&[7.0, -7.0]), 1e-6));
        assert!(!is_feasible(&net, &dv(&[7.0, -7.0])).unwrap());
    }

    #[test]
    fn feasibility_mirrors_polyhedra() {
        let net = testfix::sixbus_base();
        // The extreme center-export corner is inside the generation box but
        // overloads the line from bus 4 to bus 6 (4000 MW > 3600 MW).
        let corner = dv(&[-1000.0, 0.0, 0.0, 7000.0, 0.0, -6000.0]);
        let pg = generator_polyhedron(&net);
        assert!(contains(&pg, &corner, 1e-6));
        let f = dc_flows(&net, &corner).unwrap();
        assert!((f[4] - 4000.0).abs() < 0.5, "line 4–6 flow {}", f[4]);
        assert!(!is_feasible(&net, &corner).unwrap());
        // Unbalanced vectors are infeasible rather than an error here.
        assert!(!is_feasible(&net, &dv(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0])).unwrap());
    }

    #[test]
    fn self_sufficient_fixture_contains_zero() {
        let net = testfix::ring3();
        assert!(is_feasible(&net, &DVector::zeros(3)).unwrap());
        let pg = generator_polyhedron(&net);
        let pl = line_polyhedron(&net).unwrap();
        assert!(contains(&pg, &DVector::zeros(3), 1e-9));
        assert!(contains(&pl, &DVector::zeros(3), 1e-9));
    }

    #[test]
    fn disconnected_components_named() {
        let net = NetworkModel {
            base_mva: 100.0,
            buses: vec![
                Bus { id: 10, demand: 0.0, gen_max: 1.0 },
                Bus { id: 20, demand: 0.0, gen_max: 1.0 },
                Bus { id: 30, demand: 0.0, gen_max: 1.0 },
            ],
            lines: vec![Line {
                id: 1,
                from_bus: 10,
                to_bus: 20,
                susceptance: 1.0,
                limit: 5.0,
            }],
        };
        match net.validate() {
            Err(NetError::Disconnected { components }) => {
                assert_eq!(components.len(), 2);
                assert!(components.contains(&vec![10, 20]));
                assert!(components.contains(&vec![30]));
                let msg = NetError::Disconnected { components }.to_string();
                assert!(msg.contains("{10, 20}") && msg.contains("{30}"), "{msg}");
            }
            other => panic!("expected disconnected, got {other:?}"),
        }
    }

    #[test]
    fn invalid_data_rejected() {
        let mut net = testfix::twobus();
        net.lines[0].susceptance = 0.0;
        assert!(matches!(net.validate(), Err(NetError::BadSusceptance(_, _))));
        let mut net = testfix::twobus();
        net.lines[0].limit = -1.0;
        assert!(matches!(net.validate(), Err(NetError::BadLimit(_, _))));
        let mut net = testfix::twobus();
        net.buses[0].demand = -2.0;
        assert!(matches!(net.validate(), Err(NetError::BadDemand(_, _))));
        let mut net = testfix::twobus();
        net.lines[0].to_bus = net.lines[0].from_bus;
        assert!(matches!(net.validate(), Err(NetError::SelfLoop(_, _))));
        let mut net = testfix::twobus();
        net.buses[1].id = net.buses[0].id;
        assert!(matches!(net.validate(), Err(NetError::DuplicateBus(_))));
        let mut net = testfix::twobus();
        net.lines[0].to_bus = 99;
        assert!(matches!(net.validate(), Err(NetError::UnknownBus { .. })));
    }

    #[test]
    fn sparse_factorization_matches_dense() {
        // Laplacian of a random-ish graph plus diagonal shift, solved both
        // ways.
        let n = 12;
        let edges: Vec<(usize, usize, f64)> = vec![
            (0, 1, 1.5),
            (1, 2, 2.0),
            (2, 3, 0.7),
            (3, 4, 1.1),
            (4, 5, 3.0),
            (5, 0, 0.9),
            (0, 6, 1.2),
            (6, 7, 2.2),
            (7, 8, 0.4),
            (8, 9, 1.9),
            (9, 10, 2.7),
            (10, 11, 0.6),
            (11, 6, 1.4),
            (3, 9, 0.8),
            (1, 7, 1.3),
        ];
        let mut dense = DMatrix::zeros(n, n);
        let mut entries = Vec::new();
        for &(i, j, w) in &edges {
            dense[(i, i)] += w;
            dense[(j, j)] += w;
            dense[(i, j)] -= w;
            dense[(j, i)] -= w;
            entries.push((i, i, w));
            entries.push((j, j, w));
            entries.push((i, j, -w));
        }
        for i in 0..n {
            dense[(i, i)] += 0.5;
            entries.push((i, i, 0.5));
        }
        let ldl = SparseLdl::factor(n, &entries).unwrap();
        let rhs = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin());
        let x_sparse = ldl.solve(&rhs);
        let x_dense = dense.clone().lu().solve(&rhs).unwrap();
        assert!((x_sparse - x_dense).norm() < 1e-10);
    }
}
