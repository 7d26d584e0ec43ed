//! Per-view observations and the `views.json` manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::camera::OrthoView;
use super::image::{load_gray, load_rgb, Image};
use super::normal_codec::decode_normal;
use crate::error::{Error, Result};
use crate::Vec3;

/// Mask, camera-space normal map and RGB image for one view.
///
/// Normals are zero where the stored normal map holds the background color.
#[derive(Debug, Clone)]
pub struct ViewObservation {
    pub view: OrthoView,
    pub mask: Image<f64>,
    pub normals: Image<Vec3>,
    pub rgb: Image<Vec3>,
}

impl ViewObservation {
    pub fn check_dims(&self) -> Result<()> {
        let expected = (self.view.width, self.view.height);
        for dims in [self.mask.dims(), self.normals.dims(), self.rgb.dims()] {
            if dims != expected {
                return Err(Error::SizeMismatch(dims, expected));
            }
        }
        Ok(())
    }

    /// Number of pixels with mask > 0.5.
    pub fn covered_pixels(&self) -> usize {
        self.mask.pixels().iter().filter(|&&m| m > 0.5).count()
    }
}

/// One record of `views.json`. Paths are relative to the manifest directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewRecord {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub mask: PathBuf,
    pub normal: PathBuf,
    pub rgb: PathBuf,
}

/// Contents of `views.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSetManifest {
    pub resolution: [usize; 2],
    pub ortho_half_extent: f64,
    pub views: Vec<ViewRecord>,
}

pub const MANIFEST_FILE: &str = "views.json";

impl ViewSetManifest {
    pub fn view(&self, k: usize) -> OrthoView {
        let r = &self.views[k];
        OrthoView::new(
            r.azimuth_deg.to_radians(),
            r.elevation_deg.to_radians(),
            self.resolution[0],
            self.resolution[1],
        )
        .with_half_extent(self.ortho_half_extent)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Reads a manifest (a `views.json` path or the directory containing it)
/// and decodes every view.
pub fn load_observations(path: impl AsRef<Path>) -> Result<Vec<ViewObservation>> {
    let path = path.as_ref();
    let manifest_path = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_owned()
    };
    let dir = manifest_path.parent().unwrap_or(Path::new(".")).to_owned();
    let manifest = ViewSetManifest::read(&manifest_path)?;
    if manifest.views.len() < 2 {
        return Err(Error::TooFewViews);
    }
    let expected = (manifest.resolution[0] as u32, manifest.resolution[1] as u32);
    let mut out = Vec::with_capacity(manifest.views.len());
    for (k, rec) in manifest.views.iter().enumerate() {
        let check = |file: &Path, dims: (usize, usize)| -> Result<()> {
            let found = (dims.0 as u32, dims.1 as u32);
            if found != expected {
                return Err(Error::ResolutionMismatch {
                    azimuth_deg: rec.azimuth_deg,
                    file: file.to_owned(),
                    found,
                    expected,
                });
            }
            Ok(())
        };
        let mask_path = dir.join(&rec.mask);
        let normal_path = dir.join(&rec.normal);
        let rgb_path = dir.join(&rec.rgb);
        let mask = load_gray(&mask_path)?;
        check(&mask_path, mask.dims())?;
        let encoded = load_rgb(&normal_path)?;
        check(&normal_path, encoded.dims())?;
        let rgb = load_rgb(&rgb_path)?;
        check(&rgb_path, rgb.dims())?;
        let normals = encoded.map(|c| decode_normal(c).unwrap_or_else(Vec3::zeros));
        out.push(ViewObservation {
            view: manifest.view(k),
            mask,
            normals,
            rgb,
        });
    }
    Ok(out)
}
