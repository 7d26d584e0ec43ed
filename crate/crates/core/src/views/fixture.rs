//! Synthetic view sets rendered from a known mesh.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::camera::OrthoView;
use super::image::{save_gray, save_rgb, Image};
use super::normal_codec::{encode_normal, BACKGROUND};
use super::observation::{ViewObservation, ViewRecord, ViewSetManifest, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::geometry::TriMesh;
use crate::raster::{rasterize, render_attributes, DEFAULT_SIGMA};
use crate::Vec3;

/// Renders the hard mask, camera-frame normals and RGB for one view.
///
/// RGB uses the mesh's vertex colors, or `p + 0.5` when it has none.
pub fn render_observation(mesh: &TriMesh, view: &OrthoView) -> ViewObservation {
    let out = rasterize(mesh, view, DEFAULT_SIGMA);
    let colors: Vec<Vec3> = match mesh.colors() {
        Some(c) => c.to_vec(),
        None => mesh
            .vertices()
            .iter()
            .map(|p| (p + Vec3::repeat(0.5)).map(|c| c.clamp(0.0, 1.0)))
            .collect(),
    };
    ViewObservation {
        view: *view,
        mask: out.hard_mask(),
        normals: out.normal_image.clone(),
        rgb: render_attributes(mesh, &out, &colors, Vec3::zeros()),
    }
}

/// Renders every view and writes `view_{k}_{mask|normal|rgb}.png` plus
/// `views.json` into `out_dir`. Normal maps are 16-bit when requested.
pub fn generate_fixture(
    mesh: &TriMesh,
    views: &[OrthoView],
    out_dir: impl AsRef<Path>,
    sixteen_bit_normals: bool,
) -> Result<ViewSetManifest> {
    let out_dir = out_dir.as_ref();
    let first = views
        .first()
        .ok_or_else(|| Error::InvalidArgument("no views to render".into()))?;
    if views.iter().any(|v| {
        (v.width, v.height, v.half_extent) != (first.width, first.height, first.half_extent)
    }) {
        return Err(Error::InvalidArgument(
            "all views must share resolution and extent".into(),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let records = views
        .par_iter()
        .enumerate()
        .map(|(k, view)| {
            let obs = render_observation(mesh, view);
            let name = |kind: &str| PathBuf::from(format!("view_{k}_{kind}.png"));
            let rec = ViewRecord {
                azimuth_deg: view.azimuth.to_degrees(),
                elevation_deg: view.elevation.to_degrees(),
                mask: name("mask"),
                normal: name("normal"),
                rgb: name("rgb"),
            };
            let encoded: Image<Vec3> = obs.normals.map(|n| {
                if *n == Vec3::zeros() {
                    BACKGROUND
                } else {
                    encode_normal(n)
                }
            });
            save_gray(&obs.mask, &out_dir.join(&rec.mask))?;
            save_rgb(&encoded, &out_dir.join(&rec.normal), sixteen_bit_normals)?;
            save_rgb(&obs.rgb, &out_dir.join(&rec.rgb), false)?;
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = ViewSetManifest {
        resolution: [first.width, first.height],
        ortho_half_extent: first.half_extent,
        views: records,
    };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;
    use crate::views::load_observations;

    #[test]
    fn sphere_mask_is_centered_disc() {
        let sphere = primitives::icosphere(5, 0.4);
        let view = OrthoView::from_degrees(0.0, 0.0, 128);
        let obs = render_observation(&sphere, &view);
        let radius = 0.4 / view.half_extent * 64.0;
        for y in 0..128 {
            for x in 0..128 {
                let r = ((x as f64 + 0.5 - 64.0).powi(2) + (y as f64 + 0.5 - 64.0).powi(2)).sqrt();
                let m = *obs.mask.get(x, y);
                if r < radius - 1.0 {
                    assert_eq!(m, 1.0);
                } else if r > radius + 1.0 {
                    assert_eq!(m, 0.0);
                }
            }
        }
    }

    #[test]
    fn center_normal_matches_analytic() {
        let sphere = primitives::icosphere(5, 0.4);
        for az in [0.0, 90.0, 210.0] {
            let view = OrthoView::from_degrees(az, 15.0, 64);
            let obs = render_observation(&sphere, &view);
            let n = obs.normals.get(32, 32);
            let (x, y) = view.pixel_to_camera(32.5, 32.5);
            let expected = Vec3::new(x, y, (0.16 - x * x - y * y).sqrt()) / 0.4;
            let angle = n.dot(&expected).clamp(-1.0, 1.0).acos().to_degrees();
            assert!(angle < 1.0, "{n:?} vs {expected:?}");
        }
    }

    #[test]
    fn outside_frustum_gives_empty_mask() {
        let mut sphere = primitives::icosphere(2, 0.3);
        sphere.transform(1.0, Vec3::new(5.0, 0.0, 0.0));
        let obs = render_observation(&sphere, &OrthoView::from_degrees(0.0, 0.0, 32));
        assert!(obs.mask.pixels().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn back_view_mirrors_symmetric_mask() {
        let mut mesh = primitives::torus(0.25, 0.1, 24, 10);
        // Asymmetric in y so that a wrong vertical flip would show.
        mesh.map_vertices(|p| Vec3::new(p.x, p.y + 0.3 * p.x.abs(), p.z));
        let a = render_observation(&mesh, &OrthoView::from_degrees(0.0, 0.0, 64));
        let b = render_observation(&mesh, &OrthoView::from_degrees(180.0, 0.0, 64));
        let mirrored = b.mask.flip_horizontal();
        let differ = a
            .mask
            .pixels()
            .iter()
            .zip(mirrored.pixels())
            .filter(|(x, y)| x != y)
            .count();
        assert!(differ <= 64, "{differ} pixels differ");
    }

    #[test]
    fn fixture_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let sphere = primitives::icosphere(3, 0.4);
        let views = OrthoView::ring(4, 48);
        let manifest = generate_fixture(&sphere, &views, dir.path(), true).unwrap();
        assert_eq!(manifest.views.len(), 4);
        let obs = load_observations(dir.path()).unwrap();
        assert_eq!(obs.len(), 4);
        for (o, v) in obs.iter().zip(&views) {
            o.check_dims().unwrap();
            let direct = render_observation(&sphere, v);
            assert_eq!(o.mask, direct.mask);
            for (a, b) in o.normals.pixels().iter().zip(direct.normals.pixels()) {
                assert!((a - b).amax() <= 1e-4);
            }
        }
    }

    #[test]
    fn manifest_errors() {
        let dir = tempfile::tempdir().unwrap();
        let sphere = primitives::icosphere(2, 0.4);
        let mut manifest =
            generate_fixture(&sphere, &OrthoView::ring(4, 16), dir.path(), false).unwrap();
        // Wrong-resolution mask for the second view.
        save_gray(&Image::new(8, 8, 0.0), &dir.path().join("view_1_mask.png")).unwrap();
        let err = load_observations(dir.path()).unwrap_err().to_string();
        assert!(
            err.contains("90") && err.contains("view_1_mask.png"),
            "{err}"
        );
        manifest.views.truncate(1);
        manifest.write(&dir.path().join(MANIFEST_FILE)).unwrap();
        let err = load_observations(dir.path()).unwrap_err().to_string();
        assert!(err.contains("at least 2 views required"), "{err}");
    }
}
