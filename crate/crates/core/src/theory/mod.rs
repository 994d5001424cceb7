//! Constants and right-hand sides of the nonconvex convergence bound, the
//! order-optimal step size, the cumulative-gradient growth estimator, and
//! pathwise checks of the supporting lemmas on recorded traces.

mod bounds;
mod growth;
mod lemmas;
mod verify;

pub use bounds::{
    bound_rhs, corollary_bound, default_q, m3_prime, m_constants, optimal_alpha, optimal_alpha_scaled,
    AssumptionEstimates, BoundInputs, EstimateSource, MConstants,
};
pub use growth::{estimate_growth_s, GrowthEstimate, GrowthTracker};
pub use lemmas::{
    check_lemma_a1, check_lemma_a2_a3, check_lemma_a4, check_lemma_a5, lemma_suite, CheckResult, CheckStatus,
    A1_TOLERANCE, BOUND_TOLERANCE, SLACK_TOLERANCE,
};
pub use verify::{verify_theorem, TheoremSetup, TheoryReport, LOOSENESS_RATIO};
