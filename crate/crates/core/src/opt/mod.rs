//! Coarse-to-fine mesh optimization against multi-view masks and normals.

pub mod config;
pub mod loss;
pub mod optimizer;
pub mod report;

pub use config::{ReconConfig, TargetNormalization};
pub use loss::{loss_mask, loss_normal, render_all, LossGrad};
pub use optimizer::{expansion_step, optimize_coarse, smooth_gradient, EXPANSION_UNIT};
pub use report::{IterationRecord, LossReport, Stage};
