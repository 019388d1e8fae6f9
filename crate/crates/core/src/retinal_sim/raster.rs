//! Painter's-algorithm rasterizer for frontoparallel planar objects.
//!
//! Each sample's NDC position is mapped back through the projection matrix
//! to a tangent-plane direction from the projection centre; that ray is
//! intersected with every object plane, farthest object first.

use serde::{Deserialize, Serialize};

use super::image::{ImageGeometry, RetinalImage, RgbImage};
use super::scene::{Background, ObjectKind, Rgb, Scene, SceneObject, Texture};
use crate::error::{invalid, Result};
use crate::eye_model::SchematicEyeModel;
use crate::gaze_transform::{
    eye_and_projection_nc, per_eye_fixation, DisplayGeometry, EyeSide, EyeTransforms, GazeState,
    Ndc, Vec3,
};

/// Sub-sample offsets within a pixel (2x2 ordered grid).
const SUBSAMPLES: [(f64, f64); 4] = [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)];

pub const MAX_RESOLUTION: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub width: usize,
    pub height: usize,
}

impl Resolution {
    pub const fn new(width: usize, height: usize) -> Self {
        Resolution { width, height }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(invalid("image dimensions must be positive"));
        }
        if self.width > MAX_RESOLUTION || self.height > MAX_RESOLUTION {
            return Err(invalid(format!("resolution above {MAX_RESOLUTION}")));
        }
        Ok(())
    }
}

impl std::str::FromStr for Resolution {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| invalid(format!("resolution must look like 800x800, got '{s}'")))?;
        let p = |v: &str| v.trim().parse::<usize>().map_err(|_| invalid(format!("bad resolution '{s}'")));
        let r = Resolution::new(p(w)?, p(h)?);
        r.validate()?;
        Ok(r)
    }
}

/// Stateless 64-bit mixer used for all procedural textures.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn noise_gray(seed: u64, ix: i64, iy: i64) -> Rgb {
    let h = splitmix64(seed ^ splitmix64((ix as u64) ^ splitmix64(iy as u64).rotate_left(17)));
    let v = (h >> 56) as u8;
    [v, v, v]
}

fn sample_texture(tex: &Texture, u: f64, v: f64) -> Rgb {
    match tex {
        Texture::Solid { color } => *color,
        Texture::Noise { seed, cells } => {
            let n = *cells as f64;
            let ix = (((u + 1.0) * 0.5 * n).floor() as i64).clamp(0, *cells as i64 - 1);
            let iy = (((1.0 - v) * 0.5 * n).floor() as i64).clamp(0, *cells as i64 - 1);
            noise_gray(*seed, ix, iy)
        }
        Texture::Image { data, .. } => match data {
            Some(img) => {
                let x = (((u + 1.0) * 0.5 * img.width as f64).floor() as usize).min(img.width - 1);
                let y = (((1.0 - v) * 0.5 * img.height as f64).floor() as usize).min(img.height - 1);
                img.pixel(x, y)
            }
            None => [255, 0, 255],
        },
    }
}

fn sample_background(bg: &Background, tan: &Ndc) -> Rgb {
    match bg {
        Background::Solid { color } => *color,
        Background::Noise { seed, cell_deg } => {
            let az = tan.x.atan().to_degrees();
            let el = tan.y.atan().to_degrees();
            noise_gray(*seed, (az / cell_deg).floor() as i64, (el / cell_deg).floor() as i64)
        }
    }
}

/// Object-local coordinates in `[-1, 1]^2` of the point where the ray with
/// tangent direction `tan` from nodal point `n` meets the object's plane, or
/// `None` when the object is missed or lies behind the near plane.
///
/// With `n = 0` the result is `tan - centre` exactly, independent of depth,
/// so coaxial objects of equal angular size cover identical sample sets.
pub(crate) fn hit_object(obj: &SceneObject, n: &Vec3, near: f64, tan: &Ndc) -> Option<(f64, f64)> {
    let dist = obj.depth_m + n.z;
    if !(dist >= near) {
        return None;
    }
    let scale = 1.0 + n.z / obj.depth_m;
    let (cx, cy) = obj.center_tan();
    let qx = n.x / obj.depth_m + tan.x * scale - cx;
    let qy = n.y / obj.depth_m + tan.y * scale - cy;
    let rho = obj.half_extent_tan();
    let inside = match obj.kind {
        ObjectKind::Disc => qx * qx + qy * qy <= rho * rho,
        ObjectKind::TexturedQuad => qx.abs() <= rho && qy.abs() <= rho,
    };
    inside.then(|| (qx / rho, qy / rho))
}

fn shade_sample(order: &[&SceneObject], bg: &Background, t: &EyeTransforms, tan: &Ndc) -> Rgb {
    let mut color = sample_background(bg, tan);
    for obj in order {
        if let Some((u, v)) = hit_object(obj, &t.nodal_point, t.frustum.z_near, tan) {
            color = sample_texture(&obj.texture, u, v);
        }
    }
    color
}

/// Renders `scene` for one eye with the model's NC.
pub fn render(
    scene: &Scene,
    gaze: &GazeState,
    model: &SchematicEyeModel,
    geom: &DisplayGeometry,
    resolution: Resolution,
    side: EyeSide,
) -> Result<RetinalImage> {
    render_nc(scene, gaze, model.nc_m(), geom, resolution, side)
}

pub fn render_nc(
    scene: &Scene,
    gaze: &GazeState,
    nc_m: f64,
    geom: &DisplayGeometry,
    resolution: Resolution,
    side: EyeSide,
) -> Result<RetinalImage> {
    scene.validate()?;
    resolution.validate()?;
    for obj in &scene.objects {
        if let Texture::Image { data: None, path } = &obj.texture {
            return Err(crate::Error::Scene(format!("image texture '{path}' not loaded")));
        }
    }
    let t = eye_and_projection_nc(gaze, nc_m, geom, side)?;
    let order = scene.draw_order();
    let Resolution { width, height } = resolution;
    let mut img = RgbImage::new(width, height);
    for y in 0..height {
        for x in 0..width {
            let mut acc = [0u32; 3];
            for (ox, oy) in SUBSAMPLES {
                let ndc = Ndc::new(
                    -1.0 + 2.0 * (x as f64 + ox) / width as f64,
                    1.0 - 2.0 * (y as f64 + oy) / height as f64,
                );
                let tan = t.ndc_to_tangent(&ndc);
                let c = shade_sample(&order, &scene.background, &t, &tan);
                for k in 0..3 {
                    acc[k] += c[k] as u32;
                }
            }
            let n = SUBSAMPLES.len() as u32;
            img.set_pixel(x, y, acc.map(|a| ((a + n / 2) / n) as u8));
        }
    }
    let f = &t.frustum;
    let tan_bounds = [
        f.left / f.z_near,
        f.right / f.z_near,
        f.bottom / f.z_near,
        f.top / f.z_near,
    ];
    Ok(RetinalImage {
        image: img,
        geometry: ImageGeometry {
            tan_bounds,
            gaze_direction: per_eye_fixation(gaze, side)?.normalize(),
            fov_h_deg: geom.horizontal_fov(),
            fov_v_deg: geom.vertical_fov(),
        },
        gaze: *gaze,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaze_transform::RenderMode;
    use crate::retinal_sim::scene::RED;

    fn gaze(az: f64, mode: RenderMode) -> GazeState {
        GazeState::toward(EyeSide::Right, az, 0.0, 1.0, 0.064, mode).unwrap()
    }

    #[test]
    fn empty_scene_is_background() {
        let scene = Scene {
            background: Background::Solid { color: [10, 20, 30] },
            ..Scene::default()
        };
        let img = render(
            &scene,
            &gaze(0.0, RenderMode::OCULAR),
            &SchematicEyeModel::default(),
            &DisplayGeometry::default(),
            Resolution::new(16, 8),
            EyeSide::Right,
        )
        .unwrap();
        assert_eq!((img.width(), img.height()), (16, 8));
        assert!(img.image.data.chunks(3).all(|c| c == [10, 20, 30]));
    }

    #[test]
    fn disc_lands_where_projected() {
        let geom = DisplayGeometry::default();
        let obj = SceneObject::disc(1.0, 10.0, Texture::Solid { color: RED }).at(20.0, -10.0);
        let scene = Scene::new(vec![obj.clone()]);
        let g = gaze(5.0, RenderMode::OCULAR);
        let img = render(&scene, &g, &SchematicEyeModel::default(), &geom, Resolution::new(200, 200), EyeSide::Right)
            .unwrap();
        let t = crate::eye_and_projection(&g, &SchematicEyeModel::default(), &geom, EyeSide::Right).unwrap();
        let c = EyeSide::Right.center_of_rotation(g.ipd) + obj.center();
        let ndc = t.ndc(&c).unwrap();
        let px = ((ndc.x + 1.0) / 2.0 * 200.0) as usize;
        let py = ((1.0 - ndc.y) / 2.0 * 200.0) as usize;
        assert_eq!(img.image.pixel(px, py), RED);
        assert_eq!(img.image.pixel(100, 100), [0, 0, 0]);
    }

    #[test]
    fn resolution_parsing() {
        assert_eq!("800x600".parse::<Resolution>().unwrap(), Resolution::new(800, 600));
        assert!("800".parse::<Resolution>().is_err());
        assert!("0x10".parse::<Resolution>().is_err());
    }
}
