//! Cookie branching random walks (CBRW) on the integers.
//!
//! A CBRW is a discrete-time branching random walk on `Z` in which sites
//! that still hold a cookie use the offspring law `mu_c` and drift `p_c`,
//! while sites whose cookie has been consumed (or that never had one) use
//! `mu_0` and `p_0`. A cookie is removed the first time any particle
//! branches at its site; with cookies on the nonnegative half-line only
//! the leftmost cookie can be consumed per step.
//!
//! The crate has three layers:
//!
//! - [`analytic`]: closed forms — first-visit generating functions, the
//!   first-passage means `phi_r`/`phi_l`, the branching-random-walk
//!   trichotomy, and the full recurrence/transience classifier for
//!   half-line and full-line cookie layouts.
//! - [`engine`]: exact stochastic evolution of the population, count-based
//!   (arbitrary-precision or checked `u64` backends), plus a
//!   genealogy-tracking reference engine, first-passage kernels and the
//!   frontier comparison walk.
//! - [`estimators`] and [`gw`]: a reproducible Monte Carlo harness that
//!   cross-validates every closed form against simulation, and
//!   Galton-Watson analytics backing the embedded-process arguments.
//!
//! All randomness flows through [`engine::StreamSeed`]: a trial's stream is
//! a pure function of `(master_seed, stream_index)`, so results are
//! byte-identical regardless of host parallelism.

pub mod analytic;
pub mod engine;
pub mod estimators;
pub mod gw;
pub mod model;

pub use analytic::{
    classify_brw, classify_cbrw, first_visit_gf, frontier_speed_bound, left_reach_decay_rate,
    lp_growth_rate, phi_pair, AnalyticError, BoundaryFlag, BrwClass, DecisiveQuantities,
    FrontierSpeedBound, PhiPair, Regime, RegimeKind,
};
pub use engine::{
    run, run_brw_absorbed, run_brw_min_reach, run_comparison_walk, run_genealogy, sample_binomial,
    sample_offspring_total, step, BigCount, Count, EngineError, FirstPassageCounts, GenealogyRun,
    PopulationState, StreamSeed, Trace, TraceRecord,
};
pub use estimators::{
    estimate_left_reach_decay, estimate_phi, frontier_speed_estimate, lp_growth_check, phase_scan,
    recurrence_statistic, DecayReport, EstimateReport, EstimatorError, FrontierSpeedReport,
    LpGrowthReport, PhaseCell, PhaseGridSpec, PhaseScan, RecurrenceReport, ScanParam, Side,
    SimBudget,
};
pub use gw::{
    critical_survival_report, exact_survival_probability, extinction_probability,
    extinction_time_tail, simulate_gw, subcritical_decay_report, ExtinctionProbability, GwError,
    GwReport, GwReportRow, GwTrajectory, TailEstimate,
};
pub use model::{
    validate, CbrwParams, CookieLayout, GwSpec, ModelError, OffspringDistribution, ParamsDoc,
    ValidationError,
};
