//! Transfer-capacity computation for zonally aggregated power networks.
//!
//! The library models a transmission grid under the DC power-flow
//! approximation, builds the generator and line constraint polyhedra over the
//! space of net bus injections, and computes what the aggregated (zonal)
//! market can see of those constraints:
//!
//! * [`capacity::ntc_max_scaling`] — the largest safe box bounds on
//!   corridor-aggregated flows (net transfer capacities),
//! * [`project::image_exact`] / [`project::image_approx`] — the exact or
//!   sampled projection of the joint constraint set onto zonal injections
//!   (the flow-based feasible set),
//! * [`capacity::strong_feasible_set`] — the (generally non-convex) set of
//!   zonal injections that stay line-safe for *every* generator-admissible
//!   dispatch realizing them.
//!
//! All set computation is exact-arithmetic-free and LP-backed: the solver in
//! [`lpsolve`] is a deterministic two-phase simplex, so identical inputs
//! produce identical outputs everywhere, including the sampled
//! approximations (seeded direction sequences).
//!
//! Units: megawatts throughout the data model; per-unit quantities appear
//! only inside case-file parsing.

pub mod capacity;
pub mod casefmt;
pub mod lpsolve;
pub mod netmodel;
pub mod polytope;
pub mod project;
pub mod setdiff;
pub mod syncase;

#[cfg(test)]
pub(crate) mod testfix;
