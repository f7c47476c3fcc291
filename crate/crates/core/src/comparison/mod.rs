//! Comparison paths: explicit allowed paths that carry the tracer across an
//! open renormalised bond while leaving the environment unchanged up to the
//! exchange of the two corner boxes.

mod builder;
mod construct;
mod stages;

pub use builder::{PlanStage, StageTag};
pub use construct::{
    comparison_domain, comparison_endpoint, construct_comparison_path, sample_open_event_a,
    to_tracer_frame, ComparisonPath, PathSummary, PATH_LENGTH_CONSTANT,
};
pub use stages::{
    block_of, frame_blocks, is_wrapped, slice_exchange, slice_shift, tracer_into_tube,
    tube_transport, ShiftOrder,
};
