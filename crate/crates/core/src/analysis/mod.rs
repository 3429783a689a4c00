//! Convergence analysis of fault-prone iterations.

mod bounds;
mod diagnostics;
mod lyapunov;
mod second_moment;

pub use bounds::{
    fit_degradation_exponent, scaling_exponent, smoother_bound, smoother_corollary_bound,
    smoother_threshold, theory_scaling, ContourPoint, ScalingFit, SweepPoint,
};
pub use diagnostics::{
    assumption_constants, term_diagnostics, two_grid_energy_norm, AssumptionConstants,
    DiagnosticReport, DiagnosticRow,
};
pub use lyapunov::{
    lyapunov_estimate, FaultyCycle, FaultySmoother, FixedOperator, LyapunovEstimate,
    LyapunovOptions, RandomOperator, ZERO_HIT_LIMIT,
};
pub use second_moment::{
    enumerate_second_moment, replica_bound, sampled_second_moment, FactoredTerm,
    SecondMomentModel, SiteLaw, SiteLaws, TwoGridFactors, VarianceTerm,
};
