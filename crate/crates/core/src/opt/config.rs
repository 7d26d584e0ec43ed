use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator of the explicit-target weighted mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetNormalization {
    /// Divide by the summed weights (a true weighted mean).
    #[default]
    WeightSum,
    /// Divide by the number of views the vertex is visible in.
    VisibleCount,
}

/// Optimization hyperparameters shared by the coarse and refinement stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconConfig {
    pub coarse_iters: usize,
    pub learning_rate: f64,
    /// Weight λ of the expansion regularizer.
    pub expansion_weight: f64,
    pub refine_iters: usize,
    pub remesh_every: usize,
    /// Target edge length at the first remesh, as a fraction of the
    /// bounding-box diagonal of the input mesh.
    pub edge_start: f64,
    /// Target edge length at the last coarse iteration (and during refinement).
    pub edge_end: f64,
    /// Average each vertex gradient with its 1-ring mean before stepping.
    pub grad_smooth: bool,
    /// Soft silhouette width in pixels.
    pub sigma: f64,
    pub seed: u64,
    /// Apply the expansion step during refinement too.
    pub refine_expansion: bool,
    pub target_normalization: TargetNormalization,
    /// Refine against explicit per-vertex targets; when off, refinement
    /// reuses the direct normal-map term of the coarse stage.
    pub explicit_target: bool,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            coarse_iters: 300,
            learning_rate: 0.3,
            expansion_weight: 0.1,
            refine_iters: 100,
            remesh_every: 10,
            edge_start: 0.04,
            edge_end: 0.01,
            grad_smooth: true,
            sigma: 1.0,
            seed: 0,
            refine_expansion: true,
            target_normalization: TargetNormalization::WeightSum,
            explicit_target: true,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.expansion_weight >= 0.0 && self.expansion_weight.is_finite()) {
            return bad("expansion weight must be non-negative");
        }
        if self.remesh_every == 0 {
            return bad("remesh interval must be at least 1");
        }
        if !(self.edge_start > 0.0 && self.edge_end > 0.0) {
            return bad("target edge lengths must be positive");
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if self.coarse_iters > 0 && self.coarse_iters < self.remesh_every {
            return bad("coarse iterations must be at least the remesh interval");
        }
        Ok(())
    }

    /// Target edge length (fraction of the diagonal) at coarse iteration `it`,
    /// linear from `edge_start` to `edge_end`.
    pub fn edge_fraction(&self, it: usize) -> f64 {
        if self.coarse_iters <= 1 {
            return self.edge_end;
        }
        let t = (it as f64 / (self.coarse_iters - 1) as f64).min(1.0);
        self.edge_start + (self.edge_end - self.edge_start) * t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ReconConfig::default().validate().unwrap();
        let c = ReconConfig {
            coarse_iters: 5,
            ..ReconConfig::default()
        };
        assert!(c.validate().is_err());
        let c = ReconConfig {
            coarse_iters: 0,
            ..ReconConfig::default()
        };
        c.validate().unwrap();
    }

    #[test]
    fn edge_schedule_is_linear() {
        let c = ReconConfig::default();
        assert_eq!(c.edge_fraction(0), 0.04);
        assert!((c.edge_fraction(299) - 0.01).abs() < 1e-15);
        assert!((c.edge_fraction(1000) - 0.01).abs() < 1e-15);
        let mid = c.edge_fraction(299) + c.edge_fraction(0);
        assert!((c.edge_fraction(149) + c.edge_fraction(150) - mid).abs() < 1e-12);
    }
}
