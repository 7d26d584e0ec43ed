use isomer::geometry::{primitives, TriMesh};
use isomer::metrics::{chamfer_distance, normalize_unit_box};
use isomer::opt::{optimize_coarse, ReconConfig};
use isomer::pipeline::{initial_mesh, InitMode, PipelineConfig};
use isomer::views::{render_observation, OrthoView, ViewObservation};

fn fixture(mesh: &TriMesh, res: usize) -> Vec<ViewObservation> {
    OrthoView::ring(4, res).iter().map(|v| render_observation(mesh, v)).collect()
}

#[test]
fn ground_truth_start_is_not_destroyed() {
    let gt = normalize_unit_box(&primitives::icosphere(4, 0.4)).unwrap();
    let obs = fixture(&gt, 256);
    let before = chamfer_distance(&gt, &gt, 10_000, 0).unwrap();
    let (out, report) = optimize_coarse(&gt, &obs, &ReconConfig::default()).unwrap();
    let after = chamfer_distance(&out, &gt, 10_000, 0).unwrap();
    assert!(after <= before + 0.002, "{after} vs {before}");
    assert!(out.topology().is_watertight());
    assert!(report.records.iter().all(|r| r.total.is_finite()));
    assert!(report.min_total().unwrap() <= report.first_total().unwrap());
}

#[test]
fn sphere_start_cannot_open_a_hole() {
    let torus = normalize_unit_box(&primitives::torus(0.3, 0.12, 64, 24)).unwrap();
    let obs = fixture(&torus, 128);
    let config = PipelineConfig {
        init_mode: InitMode::Sphere,
        ..Default::default()
    };
    let init = initial_mesh(&obs, &config).unwrap();
    let (out, report) = optimize_coarse(&init, &obs, &config.recon).unwrap();
    assert!(report.min_total().unwrap() < report.first_total().unwrap());
    assert!(out.topology().is_watertight());
    assert_eq!(out.genus(), 0);
}

#[test]
fn records_cover_every_iteration() {
    let s = primitives::icosphere(3, 0.4);
    let obs = fixture(&s, 64);
    let config = ReconConfig {
        coarse_iters: 20,
        ..Default::default()
    };
    let (out, report) = optimize_coarse(&s, &obs, &config).unwrap();
    assert_eq!(report.records.len(), 20);
    assert!(report.records.iter().enumerate().all(|(i, r)| r.iteration == i && r.per_view.len() == 4));
    assert!(out.topology().is_watertight());
}
