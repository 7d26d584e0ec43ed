//! Cameras, images, the normal-map codec and on-disk view sets.

pub mod camera;
pub mod fixture;
pub mod image;
pub mod normal_codec;
pub mod observation;

pub use self::image::{load_gray, load_rgb, sample_image, save_gray, save_rgb, Image};
pub use camera::{OrthoView, Projection, DEFAULT_HALF_EXTENT};
pub use fixture::{generate_fixture, render_observation};
pub use normal_codec::{decode_normal, encode_normal, BACKGROUND};
pub use observation::{
    load_observations, ViewObservation, ViewRecord, ViewSetManifest, MANIFEST_FILE,
};
