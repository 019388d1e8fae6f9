//! Gaze-contingent ocular parallax rendering.
//!
//! The eye's centre of projection (its front nodal point) sits several
//! millimetres in front of its centre of rotation, so every eye movement
//! shifts the viewpoint slightly. This crate models that effect end to end:
//!
//! * [`eye_model`]: schematic eyes and the rotation-to-nodal distance `NC`.
//! * [`gaze_transform`]: per-eye nodal points, eye and projection matrices.
//! * [`perception_model`]: parallax magnitude against peripheral acuity.
//! * [`retinal_sim`]: a deterministic CPU renderer for test stimuli.
//! * [`psychophysics`]: 2AFC session plans, simulated observers and fitting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eye_model;
pub mod gaze_transform;
pub mod perception_model;
pub mod psychophysics;
pub mod retinal_sim;

pub use error::{Error, Result};
pub use eye_model::{builtin_models, nc_distance, AccommodationState, SchematicEyeModel};
pub use gaze_transform::{
    eye_and_projection, eye_and_projection_nc, screen_displacement, screen_displacement_nc,
    DisplayGeometry, EyeSide, EyeTransforms, Frustum,
    GazeState, RenderMode, Transform4, Vec3,
};
