//! The KA exchange kernel and continuous-time Kawasaki dynamics.

mod catalog;
mod constraint;
mod kmc;
mod sampling;

pub use catalog::{RateCatalog, TorusGraph};
pub use constraint::{constraint_ka, ConstraintSpec};
pub use kmc::{is_blocked, kmc_run, rebuild_catalog, Event, KmcEngine, Trajectory};
pub use sampling::{impose, sample_bernoulli, sample_bernoulli_with, SampleCondition};
