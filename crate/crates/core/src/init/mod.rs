//! Initial mesh estimation from the front and back views.

pub mod integrate;
pub mod sheet;

pub use integrate::{
    integrate_normals, integrate_rows, mask_components, DepthMap, IntegrationMode, Rotations,
};
pub use sheet::{
    depth_to_sheet, downsample_observation, estimate_initial_mesh, join_sheets, sphere_init,
    InitConfig,
};
