//! Fitzpatrick functions of sigma-monotone (premonotone) operators on `R^n`.
//!
//! The crate evaluates
//! `F_T(x, x*) = sup { <x*, y> + <y*, x> - <y*, y> : (y, y*) in gr T }`
//! exactly on finite graphs and on nested sampling windows for continuous
//! one-dimensional operators, certifies sigma-monotonicity, estimates
//! `sigma_T`, and checks resolvent and quadratic-minorant properties.

pub mod cli;
pub mod error;
pub mod expr;
pub mod fitzpatrick;
pub mod hilbert;
mod linalg;
pub mod operator;
pub mod report;
pub mod reporting;
pub mod sigma;
pub mod sigma_analysis;

pub use error::{Error, Result};
pub use expr::{parse_expression, Expr};
pub use fitzpatrick::{
    affine_term, fitz_closed_form, fitz_exact_finite, fitz_sampled, m_set_value, membership_bound_check,
    verify_convexity, verify_extension_monotonicity, verify_fitz_inequality, verify_fitz_inf_identity, windowed_sups,
    ConvexTriple, FitzSource, FitzValue, WindowConfig, WindowSup,
};
pub use hilbert::{
    corollary_monotone_maximality_probe, quadratic_minorant_search, resolvent_solve, verify_resolvent_bound,
    MinorantConfig, MinorantResult, ProbeConfig, ResolventSolution, SolverConfig,
};
pub use operator::{evaluate_operator, BuiltinKind, FiniteGraph, OperatorSpec, PrimalDualPair, ValueSet};
pub use report::{CheckReport, Detail, ExtReal};
pub use reporting::{export_grid, reproduce_examples, ResultItem, RunReport};
pub use sigma::{sigma_value, SigmaSpec};
pub use sigma_analysis::{check_sigma_monotone, estimate_sigma_t, is_sigma_related, max_sigma_t, refute_maximality};
