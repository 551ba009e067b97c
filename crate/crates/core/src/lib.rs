//! Exact worst-case error tradeoff for jointly measuring two qubit observables.
//!
//! Two sharp observables `A = a·σ` and `B = b·σ` with `|a × b| = sin θ` cannot be measured
//! together without error. This crate computes which pairs of worst-case errors
//! `(ε_a, ε_b)` are attainable, builds the four-outcome POVM that attains any point on the
//! optimal boundary, splits that POVM into a randomized pair of projective measurements, and
//! ships brute-force oracles that check all of the above numerically.
//!
//! Module map:
//!
//! - [`bloch`]: Bloch vectors, qubit states and 2×2 Hermitian operators in `(w, v)` form.
//! - [`tradeoff`]: the boundary curve, the family of linear lower bounds and region tests.
//! - [`povm`]: optimal and commuting joint POVMs, marginals, joint measurability.
//! - [`protocol`]: ancilla-free two-projector protocol and its Monte Carlo simulation.
//! - [`oracle`]: independent numerical verification (state search, POVM search, envelopes).
//!
//! All operators are kept in coefficient form `(w I + v·σ)/2`; nothing here builds complex
//! matrices.

#![forbid(unsafe_code)]

pub mod bloch;
pub mod error;
pub mod oracle;
pub mod povm;
pub mod protocol;
pub mod tradeoff;

pub use bloch::{
    maximizing_state, worst_case_error, BlochVector, HermitianOp, ObservablePair, Outcome,
    QubitState, SharpDirection, UnsharpObservable, TOL,
};
pub use error::{Error, Result};
pub use oracle::{
    envelope_crosscheck, oracle_worst_case_error, povm_region_search, score_povm, SearchConfig,
    SearchReport,
};
pub use povm::{
    commuting_povm, jointly_measurable, optimal_construction, optimal_povm, tangency_residuals,
    MarginalPair, OptimalConstruction, Povm4, TangencyResiduals,
};
pub use protocol::{
    decompose, estimate_errors, sample_counts, sample_shots, simulate, simulate_shots,
    EconomicProtocol, ErrorEstimate, ShotCounts, ShotRecord, SimulationReport,
};
pub use tradeoff::{
    classify, curve_tangent, lower_bound_gap, optimal_point, phi_for_error_a, Classification,
    CurveTangent, ErrorPair, Region, TradeoffPoint,
};
