//! Explicit-target refinement and vertex colors.

pub mod color;
pub mod stage;
pub mod target;

pub use color::{color_completion, colorize, FALLBACK_COLOR};
pub use stage::{loss_et, refine};
pub use target::{compute_explicit_target, Payload, VertexTargets};
