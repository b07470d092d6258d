//! Solver tolerances.

/// Primal feasibility tolerance on bounds and rows.
pub const FEASIBILITY: f64 = 1e-8;
/// Dual feasibility (reduced cost) tolerance.
pub const OPTIMALITY: f64 = 1e-9;
/// Distance from {0, 1} below which a binary counts as integral.
pub const INTEGRALITY: f64 = 1e-6;
/// Smallest acceptable pivot magnitude.
pub const PIVOT: f64 = 1e-9;
/// Pivots between refactorizations of the basis inverse.
pub const REFACTOR_INTERVAL: usize = 50;
/// Consecutive degenerate pivots before switching to Bland's rule.
pub const BLAND_TRIGGER: usize = 1000;
