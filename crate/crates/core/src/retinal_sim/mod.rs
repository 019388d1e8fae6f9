//! Software retinal-image simulation of gaze-contingent rendering.

mod foveate;
mod image;
mod occlusion;
mod raster;
mod scene;

pub use foveate::foveate;
pub use image::{ImageGeometry, RetinalImage, RgbImage};
pub use occlusion::{
    circle_overlap_area, make_detection_stimulus, occlusion_reveal_fraction,
    occlusion_reveal_fraction_nc, ProjectedCircle, STIMULUS_SIZE_DEG,
};
pub use raster::{render, render_nc, Resolution, MAX_RESOLUTION};
pub use scene::{
    default_scene, diopters_to_m, m_to_diopters, Background, FixationOrbit, ObjectKind, Rgb,
    Scene, SceneObject, Texture, RED, SCENE_VERSION,
};

/// True for pixels where red exceeds green, i.e. any visible contribution
/// of the solid red back surface over gray texture.
pub fn is_reddish(c: [u8; 3]) -> bool {
    c[0] > c[1]
}
