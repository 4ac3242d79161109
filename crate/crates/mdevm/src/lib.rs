//! Micro differential evolution (micro-DE) with randomized mutation
//! factors.
//!
//! Micro-DE runs classical DE with very small populations (down to two
//! members) to cut function calls, at the price of a higher stagnation and
//! premature-convergence risk. This crate implements the counter-measure of
//! randomizing the mutation factor — per individual (`srmf`) or per decision
//! variable (`vrmf`) — together with the machinery needed to study it:
//!
//! * [`engine`] — the synchronous generation loop with greedy selection,
//!   uniform bound repair, and budget/error termination;
//! * [`mutation`] — the five mutant-vector schemes with reduced forms for
//!   populations of 2–4, the three factor modes, and binomial crossover;
//! * [`benchmarks`] — analytic test functions (uni-modal, multi-modal, and
//!   seeded shifted-rotated composites) with exact optimum metadata;
//! * [`diversity`] — centroid/pairwise diversity metrics and the Monte-Carlo
//!   simulators comparing the factor modes;
//! * [`stats`] — Wilcoxon rank-sum verdicts (exact and normal-approximation
//!   paths) and better/equal/worse tallies;
//! * [`harness`] — a config-driven matrix runner producing replayable
//!   archives, convergence/diversity curves, and comparison reports.

pub mod benchmarks;
pub mod diversity;
pub mod engine;
pub mod error;
pub mod harness;
pub mod mutation;
pub mod stats;

pub use engine::{
    Bounds, Individual, Objective, Population, RunConfig, RunRecord, Termination,
    TerminationCriteria,
};
pub use error::{Error, Result};
pub use mutation::{FactorMode, MutationConfig, MutationScheme};
pub use stats::Outcome;
