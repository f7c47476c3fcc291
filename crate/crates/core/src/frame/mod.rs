//! Framed and frameable configurations, allowed paths and their validation.

mod path;
mod prob;
mod search;

pub use path::{
    apply_step, validate_path, AllowedPath, PathMode, PathStep, PathViolation, Validation,
    ViolationKind, CHECKPOINT_EVERY,
};
pub use prob::{estimate_frameable_prob, FrameabilityEstimate};
pub use search::{
    frame_domain, frameability_search, is_framed, FrameabilityVerdict, Proof, SearchStats, Verdict,
    DEFAULT_BUDGET,
};
