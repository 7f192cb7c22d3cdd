//! Likelihood, maximum-likelihood fitting, and cross-validation.

pub mod cmaes;
mod cv;
mod fit;
mod likelihood;
pub mod space;

pub use cv::{
    compare_models, cross_validate, intervals_disjoint, mean_and_half_width, stratified_folds, Comparison, CvConfig,
    CvReport, FoldAssignment, PairwiseComparison, RankedModel,
};
pub use fit::{fit, fit_mle, FitOptions, FitResult};
pub use likelihood::{log_likelihood, log_likelihood_of, Evaluator, LogLikelihood, PROB_FLOOR};
pub use space::{Bounds, FixedParams, ParamSpace};
