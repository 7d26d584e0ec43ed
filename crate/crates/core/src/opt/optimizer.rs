//! Gradient descent with expansion and periodic remeshing.

use crate::error::{Error, Result};
use crate::geometry::{remesh_pass, TriMesh};
use crate::raster::GradientBuffer;
use crate::views::ViewObservation;
use crate::Vec3;

use super::config::ReconConfig;
use super::loss::{accumulate, check_observations, mask_term, normal_image_term, render_all};
use super::report::{IterationRecord, LossReport, Stage};

/// Moves every vertex `weight * learning_rate * length` along its unit normal.
pub fn expansion_step(mesh: &TriMesh, weight: f64, learning_rate: f64, length: f64) -> Result<TriMesh> {
    let mut out = mesh.clone();
    if weight == 0.0 {
        return Ok(out);
    }
    let normals = mesh.vertex_normals()?;
    let d = weight * learning_rate * length;
    for (p, n) in out.vertices_mut().iter_mut().zip(&normals) {
        *p += n * d;
    }
    Ok(out)
}

/// Averages each vertex gradient with the mean over its 1-ring (half each).
pub fn smooth_gradient(mesh: &TriMesh, grad: &GradientBuffer) -> GradientBuffer {
    let adj = mesh.adjacency();
    let g = grad.as_slice();
    GradientBuffer::from_vec(
        (0..g.len())
            .map(|v| {
                let ring = adj.neighbors(v);
                if ring.is_empty() {
                    return g[v];
                }
                let mean: Vec3 = ring.iter().map(|&u| g[u]).sum::<Vec3>() / ring.len() as f64;
                g[v] * 0.5 + mean * 0.5
            })
            .collect(),
    )
}

/// Decay of the per-vertex mean squared gradient used to scale steps.
pub(crate) const STEP_DECAY: f64 = 0.9;
/// Fraction of `learning_rate` by which vertices relax toward their 1-ring mean.
pub(crate) const RELAX_WEIGHT: f64 = 0.3;
/// Expansion length unit in pixels: one step moves `λ · lr · unit`.
pub const EXPANSION_UNIT: f64 = 0.5;

/// Per-vertex step state. A vertex moves `lr * edge` along its gradient
/// divided by the running RMS of its own gradient, so steps are measured in
/// edge lengths whatever the loss scale.
pub(crate) struct StepState {
    mean_sq: Vec<f64>,
    steps: i32,
}

impl StepState {
    pub fn new() -> Self {
        StepState { mean_sq: Vec::new(), steps: 0 }
    }

    /// Vertex count changed: restart every vertex at the old average.
    fn resize(&mut self, n: usize) {
        if self.mean_sq.is_empty() {
            self.mean_sq = vec![0.0; n];
            self.steps = 0;
            return;
        }
        let avg = self.mean_sq.iter().sum::<f64>() / self.mean_sq.len() as f64 / self.correction();
        self.mean_sq = vec![avg; n];
        self.steps = i32::MAX;
    }

    fn correction(&self) -> f64 {
        if self.steps == i32::MAX {
            1.0
        } else {
            1.0 - STEP_DECAY.powi(self.steps)
        }
    }

    pub fn apply(&mut self, mesh: &mut TriMesh, grad: &GradientBuffer, length: f64) {
        if self.mean_sq.len() != mesh.num_vertices() {
            self.resize(mesh.num_vertices());
        }
        self.steps = self.steps.saturating_add(1);
        let c = self.correction();
        for ((p, g), ms) in mesh.vertices_mut().iter_mut().zip(grad.as_slice()).zip(&mut self.mean_sq) {
            *ms = STEP_DECAY * *ms + (1.0 - STEP_DECAY) * g.norm_squared();
            let rms = (*ms / c).sqrt();
            if rms > 0.0 {
                let d = g * (length / rms);
                let n = d.norm();
                *p -= if n > length { d * (length / n) } else { d };
            }
        }
    }
}

/// Moves each vertex `weight` of the way toward the mean of its 1-ring.
pub(crate) fn relax(mesh: &mut TriMesh, weight: f64) {
    let adj = mesh.adjacency();
    let old = mesh.vertices();
    let moved: Vec<Vec3> = (0..old.len())
        .map(|v| {
            let ring = adj.neighbors(v);
            if ring.is_empty() {
                return old[v];
            }
            let mean: Vec3 = ring.iter().map(|&u| old[u]).sum::<Vec3>() / ring.len() as f64;
            old[v] + (mean - old[v]) * weight
        })
        .collect();
    mesh.vertices_mut().copy_from_slice(&moved);
}

/// Loss terms and gradient of one iteration.
pub(crate) struct Evaluation {
    pub l_mask: f64,
    pub l_normal: f64,
    pub per_view: Vec<f64>,
    pub grad: GradientBuffer,
}

pub(crate) struct StagePlan<'a> {
    pub stage: Stage,
    pub iters: usize,
    pub config: &'a ReconConfig,
    /// World-space target edge length per iteration.
    pub edge_length: &'a dyn Fn(usize) -> f64,
    pub expansion: bool,
    /// Shrink the step and expansion linearly to zero over the stage.
    pub anneal: bool,
    /// World size of one pixel.
    pub pixel: f64,
}

/// The shared iteration loop: evaluate, step, relax, expand, remesh.
pub(crate) fn run_stage(
    mut mesh: TriMesh,
    plan: &StagePlan<'_>,
    report: &mut LossReport,
    mut evaluate: impl FnMut(&TriMesh) -> Result<Evaluation>,
) -> Result<TriMesh> {
    let config = plan.config;
    let closed = mesh.topology().is_watertight();
    let mut state = StepState::new();
    for it in 0..plan.iters {
        let e = evaluate(&mesh)?;
        let total = e.l_mask + e.l_normal;
        if !total.is_finite() || !e.grad.is_finite() {
            return Err(Error::NanLoss { iteration: it });
        }
        report.push(IterationRecord {
            stage: plan.stage,
            iteration: it,
            l_mask: e.l_mask,
            l_normal: e.l_normal,
            total,
            per_view: e.per_view,
        });
        let grad = if config.grad_smooth {
            smooth_gradient(&mesh, &e.grad)
        } else {
            e.grad
        };
        let edge = (plan.edge_length)(it);
        let lr = if plan.anneal {
            config.learning_rate * (1.0 - it as f64 / plan.iters as f64)
        } else {
            config.learning_rate
        };
        state.apply(&mut mesh, &grad, lr * edge);
        relax(&mut mesh, RELAX_WEIGHT * config.learning_rate);
        if plan.expansion {
            let unit = EXPANSION_UNIT * plan.pixel;
            mesh = expansion_step(&mesh, config.expansion_weight, lr, unit)?;
        }
        if (it + 1) % config.remesh_every == 0 {
            mesh = remesh_pass(&mesh, edge);
            let report = mesh.topology();
            if !report.is_manifold() || (closed && !report.is_watertight()) {
                return Err(Error::NonManifold { iteration: it });
            }
        }
    }
    Ok(mesh)
}

/// Minimizes `L_mask + L_normal` over the observations with RMS-scaled
/// gradient steps, 1-ring relaxation and expansion after every step.
/// Remeshes every `remesh_every` steps at a target edge length shrinking
/// linearly over the run.
pub fn optimize_coarse(
    mesh: &TriMesh,
    observations: &[ViewObservation],
    config: &ReconConfig,
) -> Result<(TriMesh, LossReport)> {
    config.validate()?;
    check_observations(observations)?;
    mesh.validate()?;
    let diag = mesh.bbox_diagonal();
    let edge = |it: usize| config.edge_fraction(it) * diag;
    let plan = StagePlan {
        stage: Stage::Coarse,
        iters: config.coarse_iters,
        config,
        edge_length: &edge,
        expansion: true,
        anneal: false,
        pixel: observations[0].view.pixel_world_size(),
    };
    let mut report = LossReport::default();
    let out = run_stage(mesh.clone(), &plan, &mut report, |m| {
        let renders = render_all(m, observations, config.sigma);
        let (terms, grad) = accumulate(m, &renders, observations, |_, out, obs, acc| {
            let lm = mask_term(out, obs, acc)?;
            let ln = normal_image_term(m, out, &obs.mask, &obs.normals, None, acc)?;
            Ok((lm, ln))
        })?;
        Ok(Evaluation {
            l_mask: terms.iter().map(|t| t.0).sum(),
            l_normal: terms.iter().map(|t| t.1).sum(),
            per_view: terms.iter().map(|t| t.0 + t.1).collect(),
            grad,
        })
    })?;
    Ok((out, report))
}
