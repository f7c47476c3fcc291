//! Tagged-particle runs, diffusion-matrix estimation and the variational
//! upper bound.

mod cg;
mod estimate;
mod series;
mod variational;

pub use cg::{conjugate_gradient, CgResult, Csr};
pub use estimate::{
    estimate_d, estimate_d_with, DiffusionEstimate, EstimatorOptions, FitWindow, Interval, MIN_REPLICAS,
    MIN_RESAMPLES,
};
pub use series::{
    linear_times, synthetic_brownian, tagged_run, DisplacementSeries, SeriesParams, TaggedMethod,
    TaggedRunParams,
};
pub use variational::{
    variational_upper_bound, Estimator, LocalFunctionWindow, VariationalBound, CG_MAX_ITER,
    CG_REL_TOL, EXACT_SITE_CAP,
};
