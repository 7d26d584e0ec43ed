use std::time::Instant;

use isomer::geometry::primitives;
use isomer::init::{depth_to_sheet, estimate_initial_mesh, join_sheets, DepthMap, InitConfig};
use isomer::metrics::{chamfer_distance, volume_iou};
use isomer::views::{render_observation, Image, OrthoView, ViewObservation};
use isomer::Error;

fn front_back(mesh: &isomer::geometry::TriMesh, res: usize) -> (ViewObservation, ViewObservation) {
    (
        render_observation(mesh, &OrthoView::from_degrees(0.0, 0.0, res)),
        render_observation(mesh, &OrthoView::from_degrees(180.0, 0.0, res)),
    )
}

#[test]
fn analytic_hemispheres_join_close_to_sphere() {
    let r = 0.4;
    let res = 128;
    let view = OrthoView::from_degrees(0.0, 0.0, res);
    let height = |sign: f64| DepthMap {
        depth: Image::from_fn(res, res, |x, y| {
            let (cx, cy) = view.pixel_to_camera(x as f64 + 0.5, y as f64 + 0.5);
            let s = r * r - cx * cx - cy * cy;
            if s > 0.0 {
                sign * s.sqrt()
            } else {
                f64::NAN
            }
        }),
    };
    let front = depth_to_sheet(&height(1.0), &view, 1).unwrap();
    let mut back = depth_to_sheet(&height(-1.0), &view, 1).unwrap();
    back.flip_orientation();
    let mesh = join_sheets(&front, &back).unwrap();
    assert!(mesh.topology().is_watertight());
    assert_eq!(mesh.euler_characteristic(), 2);
    let sphere = primitives::icosphere(5, r);
    let cd = chamfer_distance(&mesh, &sphere, 10_000, 0).unwrap();
    println!("hemisphere join chamfer {cd:.5}");
    assert!(cd <= 0.02, "{cd}");
}

#[test]
fn sphere_fixture_initializes_to_budget() {
    let sphere = primitives::icosphere(5, 0.4);
    let (f, b) = front_back(&sphere, 256);
    let t = Instant::now();
    let mesh = estimate_initial_mesh(&f, &b, &InitConfig::default()).unwrap();
    println!("init took {:?}", t.elapsed());
    assert!(mesh.num_faces().abs_diff(2000) <= 2, "{}", mesh.num_faces());
    mesh.validate().unwrap();
    assert!(mesh.topology().is_watertight());
    assert_eq!(mesh.genus(), 0);
    let iou = volume_iou(&mesh, &sphere, 64).unwrap();
    let cd = chamfer_distance(&mesh, &sphere, 10_000, 0).unwrap();
    println!("sphere init IoU {iou:.4} CD {cd:.5}");
    assert!(iou >= 0.8, "{iou}");
}

#[test]
fn torus_fixture_keeps_its_hole() {
    let torus = primitives::torus(0.3, 0.12, 64, 24);
    let (f, b) = front_back(&torus, 256);
    let mesh = estimate_initial_mesh(&f, &b, &InitConfig::default()).unwrap();
    assert!(mesh.topology().is_watertight());
    assert_eq!(mesh.genus(), 1);
    assert!(mesh.num_faces().abs_diff(2000) <= 2);
    let iou = volume_iou(&mesh, &torus, 64).unwrap();
    println!("torus init IoU {iou:.4}");
}

#[test]
fn mismatched_hole_counts_are_rejected() {
    let torus = primitives::torus(0.3, 0.12, 48, 16);
    let sphere = primitives::icosphere(4, 0.42);
    let (f, _) = front_back(&torus, 128);
    let (_, b) = front_back(&sphere, 128);
    let err = estimate_initial_mesh(&f, &b, &InitConfig::default()).unwrap_err();
    assert!(
        matches!(err, Error::TopologyMismatch { front: 2, back: 1 }),
        "{err}"
    );
    assert!(err.to_string().contains("silhouette topology mismatch"));
}

#[test]
fn downsampled_input_matches_budget() {
    let sphere = primitives::icosphere(4, 0.35);
    let (f, b) = front_back(&sphere, 512);
    let mesh = estimate_initial_mesh(&f, &b, &InitConfig::default()).unwrap();
    assert!(mesh.num_faces().abs_diff(2000) <= 2);
}

#[test]
fn sphere_fixture_hemispheres_join_close_to_sphere() {
    let sphere = primitives::icosphere(5, 0.4);
    let (f, b) = front_back(&sphere, 256);
    let config = InitConfig {
        face_budget: usize::MAX,
        ..InitConfig::default()
    };
    let mesh = estimate_initial_mesh(&f, &b, &config).unwrap();
    assert!(mesh.topology().is_watertight());
    let cd = chamfer_distance(&mesh, &sphere, 10_000, 0).unwrap();
    println!("fixture hemisphere join chamfer {cd:.5} faces {}", mesh.num_faces());
    assert!(cd <= 0.02, "{cd}");
}
