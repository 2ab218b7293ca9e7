//! Polyhedral set difference: a bounded polytope minus a union of
//! polytopes, returned as a family of polytopes with pairwise disjoint
//! interiors.
//!
//! The construction is the classical sequential split: walk the subtrahend
//! polyhedra in the given order; for each, walk its rows in order, peeling
//! off the piece of the current region that violates the row (which is
//! therefore outside the subtrahend) and recursing that piece against the
//! remaining subtrahends. Equality rows are expanded into their two
//! half-space rows first. Pieces thinner than [`SLIVER_TOL`] (in-subspace
//! Chebyshev radius) are measure-zero artifacts of touching constraints and
//! are dropped. The cover is order-dependent but deterministic; tests must
//! classify points, not compare structure.

use crate::polytope::{
    chebyshev_center, intersect, is_empty, remove_redundancy, support, PolyError, Polyhedron,
    SLIVER_TOL,
};
pub use crate::polytope::{union_contains, PolyUnion};
use nalgebra::DVector;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SetDiffError {
    #[error("dimension mismatch: base has dim {0}, subtrahend has dim {1}")]
    DimMismatch(usize, usize),
    #[error("base polyhedron is unbounded along {0:?}")]
    Unbounded(Vec<f64>),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// `Y \ (R_1 ∪ … ∪ R_k)` as a union of polytopes with pairwise disjoint
/// interiors. `Y` must be bounded; an empty subtrahend list returns `{Y}`.
pub fn region_diff(y: &Polyhedron, rs: &[Polyhedron]) -> Result<PolyUnion, SetDiffError> {
    for r in rs {
        if r.dim != y.dim {
            return Err(SetDiffError::DimMismatch(y.dim, r.dim));
        }
    }
    if is_empty(y)? {
        return Ok(PolyUnion { parts: Vec::new(), disjoint_interiors: true });
    }
    // Boundedness: support along every ± axis.
    for j in 0..y.dim {
        for sgn in [1.0, -1.0] {
            let mut d = DVector::zeros(y.dim);
            d[j] = sgn;
            match support(y, &d) {
                Ok(_) => {}
                Err(PolyError::Unbounded(dir)) => return Err(SetDiffError::Unbounded(dir)),
                Err(e) => return Err(e.into()),
            }
        }
    }
    let mut parts = Vec::new();
    let base = remove_redundancy(y)?;
    recurse(base, rs, &mut parts)?;
    Ok(PolyUnion { parts, disjoint_interiors: true })
}

fn recurse(
    current: Polyhedron,
    rs: &[Polyhedron],
    out: &mut Vec<Polyhedron>,
) -> Result<(), SetDiffError> {
    let Some((r, rest)) = rs.split_first() else {
        out.push(current);
        return Ok(());
    };
    // A subtrahend that misses the current region entirely removes nothing.
    if is_empty(&intersect(&current, r)?)? {
        return recurse(current, rest, out);
    }
    // Equality rows of the subtrahend: one the current region already
    // satisfies everywhere constrains nothing and is dropped; one it does
    // not satisfy confines the subtrahend to a lower-dimensional slice,
    // whose removal is measure-zero — skip the subtrahend entirely.
    for i in 0..r.e.nrows() {
        let row = r.e.row(i).transpose();
        let (hi, _) = support(&current, &row)?;
        let (neg, _) = support(&current, &(-&row))?;
        let norm = row.norm().max(1e-300);
        if (hi - r.f[i]) / norm > SLIVER_TOL || (-neg - r.f[i]) / norm < -SLIVER_TOL {
            return recurse(current, rest, out);
        }
    }
    let mut inside = current;
    for i in 0..r.a.nrows() {
        let (row, rhs) = (r.a.row(i).transpose(), r.b[i]);
        // The piece violating this row lies outside the subtrahend.
        let mut piece = inside.clone();
        let neg: Vec<f64> = row.iter().map(|v| -v).collect();
        piece.push_ineq(&neg, -rhs);
        if !is_empty(&piece)? {
            let piece = remove_redundancy(&piece)?;
            let (_, radius) = chebyshev_center(&piece)?;
            if radius >= SLIVER_TOL {
                recurse(piece, rest, out)?;
            }
        }
        let pos: Vec<f64> = row.iter().copied().collect();
        inside.push_ineq(&pos, rhs);
        if is_empty(&inside)? {
            return Ok(());
        }
    }
    // What is left satisfies every row of the subtrahend — removed.
    Ok(())
}
