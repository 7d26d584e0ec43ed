//! One check per acceptance criterion. Each test writes a single
//! `[PASS]`/`[FAIL]` line to stderr (uncaptured) before asserting.
//! Timing-sensitive tests share a lock so that they never overlap.

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::sync::Mutex;
use std::time::Instant;

use nalgebra::{Rotation3, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use isomer::geometry::{primitives, remesh_pass, save_mesh, TriMesh};
use isomer::init::{integrate_normals, integrate_rows, IntegrationMode, Rotations};
use isomer::metrics::{
    chamfer_distance, evaluate, fscore, nearest_distances, normalize_unit_box, sample_surface,
    volume_iou, Metric, MetricsConfig,
};
use isomer::opt::{loss_mask, loss_normal, optimize_coarse, ReconConfig};
use isomer::pipeline::{initial_mesh, reconstruct, PipelineConfig};
use isomer::raster::{rasterize, vertex_visibility, RenderOutput, DEFAULT_DEPTH_EPSILON, DEFAULT_SIGMA};
use isomer::refine::{color_completion, colorize, compute_explicit_target, loss_et, refine, Payload, VertexTargets};
use isomer::opt::TargetNormalization;
use isomer::views::{render_observation, Image, OrthoView, ViewObservation};
use isomer::Vec3;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[{tag}] criterion {id}: {name}: {detail}");
}

fn ring(mesh: &TriMesh, res: usize) -> Vec<ViewObservation> {
    OrthoView::ring(4, res).iter().map(|v| render_observation(mesh, v)).collect()
}

fn sphere_gt() -> TriMesh {
    normalize_unit_box(&primitives::icosphere(5, 0.4)).unwrap()
}

fn torus_gt() -> TriMesh {
    normalize_unit_box(&primitives::torus(0.3, 0.12, 96, 32)).unwrap()
}

fn geometry_metrics() -> MetricsConfig {
    MetricsConfig {
        metrics: vec![Metric::Cd, Metric::Iou],
        ..Default::default()
    }
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness

fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation3<f64> {
    Rotation3::from_euler_angles(rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU))
}

/// 42-vertex icosphere, randomly stretched, jittered, rotated and shifted.
fn random_mesh(rng: &mut ChaCha8Rng) -> TriMesh {
    let mut m = primitives::icosphere(1, rng.gen_range(0.25..0.35));
    let stretch = Vec3::new(rng.gen_range(0.8..1.2), rng.gen_range(0.8..1.2), rng.gen_range(0.8..1.2));
    let rot = random_rotation(rng);
    let shift = Vec3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
    m.map_vertices(|p| rot * (p.component_mul(&stretch) * rng.gen_range(0.9..1.1)) + shift);
    m
}

/// Silhouette sample key: pixel, edge, inside, and whether the closest
/// point is clamped to an endpoint.
type BandKey = (usize, usize, bool, bool, bool);

/// Pixel coverage and silhouette band branches; the losses are only
/// differentiable where a perturbation leaves these unchanged.
fn structure(mesh: &TriMesh, obs: &[ViewObservation]) -> Vec<(Vec<Option<u32>>, Vec<BandKey>)> {
    obs.iter()
        .map(|o| {
            let out: RenderOutput = rasterize(mesh, &o.view, DEFAULT_SIGMA);
            let band = out.silhouette_samples().iter().map(|s| (s.pixel, s.edge, s.inside, s.t <= 0.0, s.t >= 1.0)).collect();
            (out.face_id.pixels().to_vec(), band)
        })
        .collect()
}

#[derive(Default)]
struct FdTally {
    checked: usize,
    excluded: usize,
    worst: f64,
    failures: Vec<String>,
}

fn fd_check(
    tally: &mut FdTally,
    label: &str,
    mesh: &TriMesh,
    obs: &[ViewObservation],
    loss: &dyn Fn(&TriMesh) -> (f64, Vec<Vec3>),
) {
    let h = 1e-4;
    let (_, analytic) = loss(mesh);
    let base = structure(mesh, obs);
    for v in 0..mesh.num_vertices() {
        for axis in 0..3 {
            let moved = |d: f64| {
                let mut m = mesh.clone();
                m.vertices_mut()[v][axis] += d;
                m
            };
            let (plus, minus) = (moved(h), moved(-h));
            if structure(&plus, obs) != base || structure(&minus, obs) != base {
                tally.excluded += 1;
                continue;
            }
            let fd = (loss(&plus).0 - loss(&minus).0) / (2.0 * h);
            let ga = analytic[v][axis];
            let scale = ga.abs().max(fd.abs());
            if scale <= 1e-6 {
                continue;
            }
            tally.checked += 1;
            let rel = (ga - fd).abs() / scale;
            tally.worst = tally.worst.max(rel);
            if rel > 0.01 {
                tally.failures.push(format!("{label} v{v} axis {axis}: analytic {ga:.6e} fd {fd:.6e}"));
            }
        }
    }
}

#[test]
fn c1_gradients_match_finite_differences() {
    let _g = serial();
    let start = Instant::now();
    let mut tallies = [FdTally::default(), FdTally::default(), FdTally::default()];
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = random_mesh(&mut rng);
        let target = random_mesh(&mut rng);
        assert!(mesh.num_vertices() <= 100);
        let az = rng.gen_range(0.0..90.0);
        let el = rng.gen_range(-20.0..20.0);
        let obs: Vec<ViewObservation> = (0..4)
            .map(|k| render_observation(&target, &OrthoView::from_degrees(az + 90.0 * k as f64, el, 64)))
            .collect();
        // A smooth target field: the mesh's own normals under one random rotation.
        let field = Rotation3::from_scaled_axis(random_rotation(&mut rng) * Vec3::x() * rng.gen_range(0.2..0.6));
        let targets = VertexTargets {
            values: mesh.vertex_normals().unwrap().iter().map(|n| field * n).collect(),
            covered: vec![true; mesh.num_vertices()],
        };
        let s = DEFAULT_SIGMA;
        fd_check(&mut tallies[0], &format!("seed {seed} mask"), &mesh, &obs, &|m| {
            let l = loss_mask(m, &obs, s).unwrap();
            (l.value, l.grad.into_vec())
        });
        fd_check(&mut tallies[1], &format!("seed {seed} normal"), &mesh, &obs, &|m| {
            let l = loss_normal(m, &obs, s).unwrap();
            (l.value, l.grad.into_vec())
        });
        fd_check(&mut tallies[2], &format!("seed {seed} et"), &mesh, &obs, &|m| {
            let l = loss_et(m, &obs, &targets, s).unwrap();
            (l.value, l.grad.into_vec())
        });
    }
    let secs = start.elapsed().as_secs_f64();
    let names = ["L_mask", "L_normal", "L_ET"];
    let detail: Vec<String> = names
        .iter()
        .zip(&tallies)
        .map(|(n, t)| format!("{n} {} checked, {} excluded, worst {:.2e}", t.checked, t.excluded, t.worst))
        .collect();
    let failures: Vec<&String> = tallies.iter().flat_map(|t| &t.failures).collect();
    let enough = tallies.iter().all(|t| t.checked >= 200);
    let pass = failures.is_empty() && enough && secs <= 300.0;
    report(1, "gradients vs central differences", pass, &format!("{}; {secs:.1}s", detail.join("; ")));
    assert!(failures.is_empty(), "{} mismatches, first: {:?}", failures.len(), failures.first());
    assert!(enough);
    assert!(secs <= 300.0);
}

// ---------------------------------------------------------------------------
// 2. Depth integration

#[test]
fn c2_depth_integration() {
    // Tilted plane, running-sum mode: depth at column x is (x + 1) n_x.
    let theta = 0.35f64;
    let (w, h) = (40, 24);
    let n = Vec3::new(theta.sin(), 0.0, theta.cos());
    let normals = Image::new(w, h, n);
    let mask = Image::new(w, h, 1.0);
    let d = integrate_rows(&normals, &mask, 1.0, 0.0, IntegrationMode::Direct);
    let mut plane_err: f64 = 0.0;
    for y in 0..h {
        for x in 0..w {
            plane_err = plane_err.max((d.get(x, y).unwrap() - (x as f64 + 1.0) * n.x).abs());
        }
    }
    // After zero-mean recentering the same plane is the centered ramp.
    let centered = integrate_normals(&normals, &mask, 1.0, &Rotations::Angles(vec![0.0]), IntegrationMode::Direct).unwrap();
    let mean_ramp = (w as f64 + 1.0) / 2.0 * n.x;
    for y in 0..h {
        for x in 0..w {
            let want = (x as f64 + 1.0) * n.x - mean_ramp;
            plane_err = plane_err.max((centered.get(x, y).unwrap() - want).abs());
        }
    }

    // h(x, y) = 0.1 sin(2πx) cos(2πy) sampled at pixel centers.
    let res = 128;
    let px = 1.0 / res as f64;
    let at = |i: usize, j: usize| ((i as f64 + 0.5) * px, 0.75 - (j as f64 + 0.5) * px);
    let height = |x: f64, y: f64| 0.1 * (TAU * x).sin() * (TAU * y).cos();
    let normals = Image::from_fn(res, res, |i, j| {
        let (x, y) = at(i, j);
        let hx = 0.1 * TAU * (TAU * x).cos() * (TAU * y).cos();
        let hy = -0.1 * TAU * (TAU * x).sin() * (TAU * y).sin();
        Vec3::new(-hx, -hy, 1.0).normalize()
    });
    let truth: Vec<f64> = (0..res * res).map(|k| { let (x, y) = at(k % res, k / res); height(x, y) }).collect();
    let mean_t = truth.iter().sum::<f64>() / truth.len() as f64;
    let range = truth.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - truth.iter().cloned().fold(f64::INFINITY, f64::min);
    let got = integrate_normals(&normals, &Image::new(res, res, 1.0), px, &Rotations::Random { count: 10, seed: 0 }, IntegrationMode::Slope).unwrap();
    let mse = got.depth.pixels().iter().zip(&truth).map(|(g, t)| (g - (t - mean_t)).powi(2)).sum::<f64>() / truth.len() as f64;
    let rel = mse.sqrt() / range;

    let pass = plane_err <= 1e-12 && rel <= 0.02;
    report(2, "depth integration", pass, &format!("plane max error {plane_err:.1e}; sinusoid RMSE {:.2}% of range", rel * 100.0));
    assert!(plane_err <= 1e-12, "{plane_err}");
    assert!(rel <= 0.02, "{rel}");
}

// ---------------------------------------------------------------------------
// 3. Round trip

#[test]
fn c3_round_trip_reconstruction() {
    let _g = serial();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, gt) in [("sphere", sphere_gt()), ("torus", torus_gt())] {
        let obs = ring(&gt, 256);
        let t = Instant::now();
        let r = reconstruct(&obs, &PipelineConfig::default()).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let m = evaluate(&r.mesh, &gt, &geometry_metrics()).unwrap();
        let (cd, iou) = (m.chamfer.unwrap(), m.volume_iou.unwrap());
        let genus_ok = name != "torus" || r.mesh.genus() == 1;
        pass &= cd <= 0.01 && iou >= 0.8 && genus_ok && secs <= 120.0;
        lines.push(format!("{name} CD {cd:.5} IoU {iou:.3} genus {} {secs:.0}s", r.mesh.genus()));
    }
    report(3, "sphere and torus round trip", pass, &lines.join("; "));
    assert!(pass, "{lines:?}");
}

// ---------------------------------------------------------------------------
// 4. Expansion ablation

/// Thickness of a slab-like mesh over the central 92×92 pixels of a 256²
/// front view: front depth plus mirrored back depth, zero where uncovered.
fn min_separation(mesh: &TriMesh) -> f64 {
    let front = rasterize(mesh, &OrthoView::from_degrees(0.0, 0.0, 256), DEFAULT_SIGMA);
    let back = rasterize(mesh, &OrthoView::from_degrees(180.0, 0.0, 256), DEFAULT_SIGMA);
    let mut min = f64::INFINITY;
    for y in 82..174 {
        for x in 82..174 {
            let (f, b) = (*front.depth.get(x, y), *back.depth.get(255 - x, y));
            min = min.min(if f.is_finite() && b.is_finite() { f + b } else { 0.0 });
        }
    }
    min
}

#[test]
fn c4_expansion_prevents_collapse() {
    let _g = serial();
    let slab = primitives::subdivided_box(Vec3::new(0.6, 0.6, 0.01), 12);
    let obs = ring(&slab, 256);
    let init = initial_mesh(&obs, &PipelineConfig::default()).unwrap();
    let initial = min_separation(&init);
    let run = |lambda: f64| {
        let config = PipelineConfig {
            recon: ReconConfig { expansion_weight: lambda, ..Default::default() },
            ..Default::default()
        };
        min_separation(&reconstruct(&obs, &config).unwrap().mesh) / initial
    };
    let (off, on) = (run(0.0), run(0.1));
    let pass = initial > 0.0 && off < 0.1 && on >= 0.5;
    report(4, "thin-slab expansion ablation", pass, &format!(
        "initial separation {initial:.4}; λ=0 keeps {:.0}%, λ=0.1 keeps {:.0}%", off * 100.0, on * 100.0
    ));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 5. Explicit-target ablation

#[test]
fn c5_explicit_target_is_smoother() {
    let _g = serial();
    let gt = sphere_gt();
    let mut obs = ring(&gt, 256);
    let rot = Rotation3::from_axis_angle(&Vec3::y_axis(), 10f64.to_radians());
    obs[1].normals = obs[1].normals.map(|n| if *n == Vec3::zeros() { *n } else { rot * n });
    let config = ReconConfig::default();
    let init = initial_mesh(&obs, &PipelineConfig::default()).unwrap();
    let (coarse, _) = optimize_coarse(&init, &obs, &config).unwrap();
    let (with_et, _) = refine(&coarse, &obs, &config).unwrap();
    let (plain, _) = refine(&coarse, &obs, &ReconConfig { explicit_target: false, ..config }).unwrap();
    let (a, b) = (with_et.total_dihedral_variation(), plain.total_dihedral_variation());
    let pass = a < b;
    report(5, "explicit-target ablation", pass, &format!("total dihedral variation ET {a:.1} vs plain normal {b:.1}"));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 6. Algorithm oracles

/// Line-by-line weighted-target reference: for each vertex, sum w·c over
/// the views that see it, with w the squared cosine between the vertex
/// normal and the view direction, then divide by the summed weight.
fn reference_targets(mesh: &TriMesh, obs: &[ViewObservation], payload: Payload) -> Vec<Option<Vec3>> {
    let normals = mesh.vertex_normals().unwrap();
    let visible: Vec<Vec<bool>> = obs.iter().map(|o| vertex_visibility(mesh, &o.view, DEFAULT_DEPTH_EPSILON)).collect();
    (0..mesh.num_vertices())
        .map(|v| {
            let mut tot_weight = 0.0;
            let mut tot_color = Vec3::zeros();
            let mut seen = false;
            for (k, o) in obs.iter().enumerate() {
                if !visible[k][v] {
                    continue;
                }
                seen = true;
                let p = o.view.project(&mesh.vertices()[v]).pixel;
                let img = match payload {
                    Payload::Normals => &o.normals,
                    Payload::Rgb => &o.rgb,
                };
                let mut ci = bilinear(img, p);
                if payload == Payload::Normals {
                    ci = o.view.rotation().transpose() * ci;
                }
                let cos = normals[v].dot(&o.view.view_direction());
                let wi = cos * cos;
                tot_weight += wi;
                tot_color += ci * wi;
            }
            if !seen || tot_weight <= 0.0 {
                return None;
            }
            let c = tot_color / tot_weight;
            Some(if payload == Payload::Normals { c / c.norm() } else { c })
        })
        .collect()
}

/// Bilinear lookup with pixel centers at half-integers, clamped to the border.
fn bilinear(img: &Image<Vec3>, p: Vector2<f64>) -> Vec3 {
    let (w, h) = img.dims();
    let fx = (p.x - 0.5).clamp(0.0, (w - 1) as f64);
    let fy = (p.y - 0.5).clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
    let top = *img.get(x0, y0) * (1.0 - tx) + *img.get(x1, y0) * tx;
    let bottom = *img.get(x0, y1) * (1.0 - tx) + *img.get(x1, y1) * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Direct transcription of the propagation loop: visible vertices start
/// colored, each pass sweeps the invisible list in order, and the loop
/// runs on for as many passes as it took to color everything. Neighbors
/// are averaged in ascending index order.
fn reference_completion(mesh: &TriMesh, inv: &[usize], colors: &[Vec3], max_passes: usize) -> (Vec<Vec3>, Vec<bool>) {
    let n = mesh.num_vertices();
    let mut neighbors = vec![Vec::new(); n];
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            if !neighbors[a].contains(&b) {
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
    }
    neighbors.iter_mut().for_each(|l| l.sort_unstable());
    let mut c = colors.to_vec();
    let mut colored: Vec<bool> = (0..n).map(|v| !inv.contains(&v)).collect();
    let mut cnt: i64 = 0;
    let mut stage2 = false;
    let mut passes = 0;
    while (!stage2 || cnt > 0) && passes < max_passes {
        passes += 1;
        for &i in inv {
            let cn: Vec<usize> = neighbors[i].iter().copied().filter(|&u| colored[u]).collect();
            if !cn.is_empty() {
                colored[i] = true;
                c[i] = cn.iter().fold(Vec3::zeros(), |s, &u| s + c[u]) / cn.len() as f64;
            } else {
                colored[i] = false;
            }
        }
        if colored.iter().all(|&x| x) {
            stage2 = true;
            cnt -= 1;
        } else {
            cnt += 1;
        }
    }
    (c, colored)
}

fn random_obs(view: OrthoView, rng: &mut ChaCha8Rng) -> ViewObservation {
    let (w, h) = (view.width, view.height);
    let mut unit = || Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.2..1.0)).normalize();
    let normals = Image::from_fn(w, h, |_, _| unit());
    let rgb = Image::from_fn(w, h, |_, _| Vec3::new(rng.gen(), rng.gen(), rng.gen()));
    ViewObservation { view, mask: Image::new(w, h, 1.0), normals, rgb }
}

#[test]
fn c6_algorithm_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut scenes: Vec<(&str, TriMesh)> = vec![
        ("octahedron", primitives::icosphere(0, 0.4)),
        ("cube", primitives::cube(0.5)),
        ("uv sphere", primitives::uv_sphere(3, 5, 0.35)),
    ];
    let mut tilted = primitives::cube(0.4);
    let rot = Rotation3::from_euler_angles(0.3, 0.5, 0.1);
    tilted.map_vertices(|p| rot * p);
    scenes.push(("tilted cube", tilted));
    let mut et_mismatch = 0;
    let mut et_checked = 0;
    for (name, mesh) in &scenes {
        assert!(mesh.num_vertices() <= 20, "{name}");
        let views = [
            OrthoView::from_degrees(0.0, 0.0, 32),
            OrthoView::from_degrees(90.0, 0.0, 32),
            OrthoView::from_degrees(200.0, 20.0, 32),
        ];
        let obs: Vec<_> = views.iter().map(|v| random_obs(*v, &mut rng)).collect();
        for payload in [Payload::Normals, Payload::Rgb] {
            let got = compute_explicit_target(mesh, &obs, payload, TargetNormalization::WeightSum).unwrap();
            let want = reference_targets(mesh, &obs, payload);
            for v in 0..mesh.num_vertices() {
                et_checked += 1;
                let ok = match want[v] {
                    Some(c) => got.covered[v] && got.values[v] == c,
                    None => !got.covered[v] && got.values[v] == Vec3::zeros(),
                };
                if !ok {
                    et_mismatch += 1;
                    eprintln!("{name} {payload:?} v{v}: got {:?} want {:?}", got.values[v], want[v]);
                }
            }
        }
    }

    // Completion scenes: a path graph, an unreachable island and random
    // invisible subsets of small closed meshes.
    let mut cc_mismatch = 0;
    let mut cc_checked = 0;
    let path = TriMesh::new(
        vec![
            Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(3.0, 0.0, 0.0), Vec3::new(0.5, 1.0, 0.0), Vec3::new(1.5, 1.0, 0.0), Vec3::new(2.5, 1.0, 0.0),
        ],
        vec![[0, 1, 4], [1, 2, 5], [2, 3, 6]],
    )
    .unwrap();
    let mut island = path.clone();
    let mut tet = primitives::icosphere(0, 0.2);
    tet.transform(1.0, Vec3::new(9.0, 0.0, 0.0));
    island.append(&tet);
    let mut cases: Vec<(TriMesh, Vec<usize>)> = vec![
        (path.clone(), vec![1, 2]),
        (path.clone(), vec![1, 2, 5]),
        (island.clone(), (7..island.num_vertices()).collect()),
        (island.clone(), [vec![1, 2], (7..island.num_vertices()).collect()].concat()),
    ];
    for mesh in [primitives::icosphere(0, 0.4), primitives::uv_sphere(3, 6, 0.4), primitives::cube(0.5)] {
        for _ in 0..5 {
            let inv: Vec<usize> = (0..mesh.num_vertices()).filter(|_| rng.gen_bool(0.5)).collect();
            cases.push((mesh.clone(), inv));
        }
    }
    for (mesh, inv) in &cases {
        assert!(mesh.num_vertices() <= 20);
        let colors: Vec<Vec3> = (0..mesh.num_vertices()).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen())).collect();
        let mut flags = vec![false; mesh.num_vertices()];
        inv.iter().for_each(|&v| flags[v] = true);
        let max_passes = 10 * mesh.num_vertices();
        let got = color_completion(mesh, &flags, &colors);
        let (mut want, colored) = reference_completion(mesh, inv, &colors, max_passes);
        for v in 0..mesh.num_vertices() {
            if !colored[v] {
                want[v] = Vec3::new(0.5, 0.5, 0.5);
            }
        }
        cc_checked += mesh.num_vertices();
        cc_mismatch += got.iter().zip(&want).filter(|(a, b)| a != b).count();
    }
    // Hand-computed path case: b and c sit between red and blue endpoints.
    let red = Vec3::new(1.0, 0.0, 0.0);
    let blue = Vec3::new(0.0, 0.0, 1.0);
    let colors = vec![red, Vec3::zeros(), Vec3::zeros(), blue, red, red, blue];
    let got = color_completion(&path, &[false, true, true, false, false, false, false], &colors);
    let hand = got[1] == Vec3::new(1.0, 0.0, 0.0) && got[2] == Vec3::new(0.5, 0.0, 0.5);

    let pass = et_mismatch == 0 && cc_mismatch == 0 && hand;
    report(6, "target and completion oracles", pass, &format!(
        "targets {et_mismatch}/{et_checked} mismatched; completion {cc_mismatch}/{cc_checked} mismatched over {} scenes; hand case {}",
        cases.len(), if hand { "ok" } else { "wrong" }
    ));
    assert!(pass, "{:?} {:?}", got[1], got[2]);
}

// ---------------------------------------------------------------------------
// 7. Metrics oracles

fn brute_nearest(queries: &[Vec3], targets: &[Vec3]) -> Vec<f64> {
    queries
        .iter()
        .map(|q| targets.iter().map(|t| (q - t).norm()).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Volume shared by two balls of radius r whose centers are d apart.
fn lens_volume(r: f64, d: f64) -> f64 {
    PI * (4.0 * r + d) * (2.0 * r - d).powi(2) / 12.0
}

#[test]
fn c7_metrics_oracles() {
    let a = normalize_unit_box(&primitives::icosphere(3, 0.4)).unwrap();
    let b = normalize_unit_box(&primitives::torus(0.3, 0.12, 32, 12)).unwrap();
    let mut nn_exact = true;
    for n in [1usize, 17, 250, 1000] {
        let pa = sample_surface(&a, n, 3).unwrap();
        let pb = sample_surface(&b, n, 4).unwrap();
        nn_exact &= nearest_distances(&pa, &pb) == brute_nearest(&pa, &pb);
        nn_exact &= nearest_distances(&pb, &pa) == brute_nearest(&pb, &pa);
    }
    let pa = sample_surface(&a, 1000, 9).unwrap();
    let pb = sample_surface(&b, 1000, 10).unwrap();
    let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let brute_cd = 0.5 * (mean(brute_nearest(&pa, &pb)) + mean(brute_nearest(&pb, &pa)));
    let cd_exact = chamfer_distance(&a, &b, 1000, 9).unwrap() == brute_cd;

    let r = 0.3;
    let mut lens_worst: f64 = 0.0;
    for d in [0.1, 0.2, 0.3] {
        let s1 = primitives::icosphere(5, r);
        let mut s2 = s1.clone();
        s2.transform(1.0, Vec3::new(d, 0.0, 0.0));
        let inter = lens_volume(r, d);
        let ball = 4.0 / 3.0 * PI * r.powi(3);
        let want = inter / (2.0 * ball - inter);
        let got = volume_iou(&s1, &s2, 64).unwrap();
        lens_worst = lens_worst.max((got - want).abs() / want);
    }

    let s = normalize_unit_box(&primitives::icosphere(4, 0.4)).unwrap();
    let cds: Vec<f64> = [500, 2000, 8000].iter().map(|&n| chamfer_distance(&s, &s, n, 0).unwrap()).collect();
    let cd_trend = cds.windows(2).all(|w| w[1] < w[0]);
    let iou_one = volume_iou(&s, &s, 64).unwrap() == 1.0;
    let f_one = fscore(&s, &s, 0.05, 5000, 0).unwrap() == 1.0;

    let pass = nn_exact && cd_exact && lens_worst <= 0.05 && cd_trend && iou_one && f_one;
    report(7, "metrics oracles", pass, &format!(
        "grid = brute force {nn_exact}, CD exact {cd_exact}; lens IoU worst error {:.2}%; self CD {:.4}/{:.4}/{:.4}; IoU=1 {iou_one}; F=1 {f_one}",
        lens_worst * 100.0, cds[0], cds[1], cds[2]
    ));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 8. Structural invariants and determinism

#[test]
fn c8_structure_and_determinism() {
    let _g = serial();
    let gt = sphere_gt();
    let obs = ring(&gt, 128);
    let config = PipelineConfig::default();
    let watertight = |m: &TriMesh| {
        let t = m.topology();
        t.is_manifold() && t.is_watertight()
    };
    let init = initial_mesh(&obs, &config).unwrap();
    let (coarse, _) = optimize_coarse(&init, &obs, &config.recon).unwrap();
    let (refined, _) = refine(&coarse, &obs, &config.recon).unwrap();
    let colored = colorize(&refined, &obs).unwrap();
    let stages = [&init, &coarse, &refined, &colored];
    let all_watertight = stages.iter().all(|m| watertight(m));

    // Edge lengths straight after a remesh pass, relative to its target.
    let target = config.recon.edge_end * init.bbox_diagonal();
    let remeshed = remesh_pass(&coarse, target);
    let edges = remeshed.edge_lengths();
    let within = edges.iter().filter(|&&l| (0.5 * target..=2.0 * target).contains(&l)).count() as f64 / edges.len() as f64;

    let dir = tempfile::tempdir().unwrap();
    let bytes = |k: usize| {
        let r = reconstruct(&obs, &PipelineConfig { recon: ReconConfig { seed: 11, ..config.recon }, ..config }).unwrap();
        let path = dir.path().join(format!("run{k}.ply"));
        save_mesh(&r.mesh, &path).unwrap();
        std::fs::read(path).unwrap()
    };
    let identical = bytes(0) == bytes(1);

    let pass = all_watertight && within >= 0.9 && identical;
    report(8, "structural invariants", pass, &format!(
        "watertight after init/coarse/refine/color {all_watertight}; {:.1}% of remeshed edges within [0.5, 2]× target; repeat run byte-identical {identical}",
        within * 100.0
    ));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 9. Resolution scaling

#[test]
fn c9_time_scales_with_pixels() {
    let _g = serial();
    let gt = sphere_gt();
    let time = |res: usize| {
        let obs = ring(&gt, res);
        let t = Instant::now();
        reconstruct(&obs, &PipelineConfig::default()).unwrap();
        t.elapsed().as_secs_f64()
    };
    let (t256, t512) = (time(256), time(512));
    let ratio = t512 / t256;
    let pass = ratio <= 5.0;
    report(9, "runtime 256² vs 512²", pass, &format!("{t256:.1}s vs {t512:.1}s, ratio {ratio:.2}"));
    assert!(pass);
}
