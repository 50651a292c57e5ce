//! Smooth variational principle: bump series that turn a lower semicontinuous
//! function into one with a strong minimum, and subjets extracted from them.

mod objective;
mod search;
mod series;
mod solver;
mod subjet;

pub use objective::{Evaluator, ObjectiveFunction};
pub use search::{approximate_min_search, SearchOptions, SearchResult};
pub use series::{PerturbationSeries, SeriesSpec, StepCertificate, StepRecord};
pub use solver::{
    certify_strong_minimum, evaluate_perturbed, recheck_step_certificates, run_svp, step_schedule, svp_step,
    PerturbedValue, SolverReport, StrongMinCertificate, SvpOptions,
};
pub use subjet::{
    extract_subjet, witness_local_min_margin, ConfiningTerm, SubjetElement, SubjetExtraction, SubjetSummary,
    SubjetWitness,
};
