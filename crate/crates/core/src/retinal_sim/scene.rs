//! Scene description shared by the renderer, the CLI and the viewer
//! protocol.
//!
//! Objects live in the coordinate frame of the rendered eye's centre of
//! rotation: each is a frontoparallel planar patch in the plane
//! `z = -depth_m`, centred on the direction `(azimuth, elevation)`, and
//! sized by the visual angle it subtends from the centre of rotation.

use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

use super::image::RgbImage;
use crate::error::{Error, Result};

pub const SCENE_VERSION: u32 = 1;

pub type Rgb = [u8; 3];

pub const RED: Rgb = [255, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Disc,
    TexturedQuad,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Texture {
    Solid {
        color: Rgb,
    },
    /// Gray-level white noise on a `cells x cells` grid across the object.
    Noise {
        seed: u64,
        #[serde(default = "default_noise_cells")]
        cells: u32,
    },
    /// Binary PPM file, resolved relative to the scene file.
    Image {
        path: String,
        #[serde(skip)]
        data: Option<Arc<RgbImage>>,
    },
}

fn default_noise_cells() -> u32 {
    32
}

impl PartialEq for Texture {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Texture::Solid { color: a }, Texture::Solid { color: b }) => a == b,
            (Texture::Noise { seed: a, cells: c }, Texture::Noise { seed: b, cells: d }) => {
                a == b && c == d
            }
            (Texture::Image { path: a, .. }, Texture::Image { path: b, .. }) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Background {
    Solid {
        color: Rgb,
    },
    /// Noise texture at optical infinity, indexed by visual direction.
    Noise {
        seed: u64,
        #[serde(default = "default_cell_deg")]
        cell_deg: f64,
    },
}

fn default_cell_deg() -> f64 {
    0.5
}

impl Default for Background {
    fn default() -> Self {
        Background::Solid { color: [0, 0, 0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObject")]
pub struct SceneObject {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: ObjectKind,
    /// Distance of the object plane from the centre of rotation, metres.
    pub depth_m: f64,
    /// Diameter (disc) or side length (quad) in degrees of visual angle.
    pub angular_size_deg: f64,
    #[serde(default)]
    pub azimuth_deg: f64,
    #[serde(default)]
    pub elevation_deg: f64,
    pub texture: Texture,
}

#[derive(Deserialize)]
struct RawObject {
    #[serde(default)]
    name: Option<String>,
    kind: ObjectKind,
    #[serde(default)]
    depth_m: Option<f64>,
    #[serde(default)]
    depth_diopters: Option<f64>,
    angular_size_deg: f64,
    #[serde(default)]
    azimuth_deg: f64,
    #[serde(default)]
    elevation_deg: f64,
    texture: Texture,
}

impl TryFrom<RawObject> for SceneObject {
    type Error = Error;

    fn try_from(raw: RawObject) -> Result<Self> {
        let depth_m = match (raw.depth_m, raw.depth_diopters) {
            (Some(m), None) => m,
            (None, Some(d)) => diopters_to_m(d)?,
            _ => {
                return Err(Error::Scene(
                    "object needs exactly one of depth_m or depth_diopters".into(),
                ))
            }
        };
        let obj = SceneObject {
            name: raw.name,
            kind: raw.kind,
            depth_m,
            angular_size_deg: raw.angular_size_deg,
            azimuth_deg: raw.azimuth_deg,
            elevation_deg: raw.elevation_deg,
            texture: raw.texture,
        };
        obj.validate()?;
        Ok(obj)
    }
}

pub fn diopters_to_m(d: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Scene(format!("depth must be a positive diopter value, got {d}")));
    }
    Ok(1.0 / d)
}

pub fn m_to_diopters(m: f64) -> f64 {
    1.0 / m
}

impl SceneObject {
    /// Disc whose size is depth-compensated to subtend `angular_size_deg`.
    pub fn disc(depth_m: f64, angular_size_deg: f64, texture: Texture) -> Self {
        SceneObject {
            name: None,
            kind: ObjectKind::Disc,
            depth_m,
            angular_size_deg,
            azimuth_deg: 0.0,
            elevation_deg: 0.0,
            texture,
        }
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    pub fn at(mut self, azimuth_deg: f64, elevation_deg: f64) -> Self {
        self.azimuth_deg = azimuth_deg;
        self.elevation_deg = elevation_deg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.depth_m > 0.0 && self.depth_m.is_finite()) {
            return Err(Error::Scene(format!("object depth must be positive, got {}", self.depth_m)));
        }
        if !(self.angular_size_deg > 0.0 && self.angular_size_deg < 180.0) {
            return Err(Error::Scene(format!(
                "angular size must be in (0, 180), got {}",
                self.angular_size_deg
            )));
        }
        if self.azimuth_deg.abs() >= 90.0 || self.elevation_deg.abs() >= 90.0 {
            return Err(Error::Scene("object direction must be in front of the eye".into()));
        }
        if let Texture::Noise { cells: 0, .. } = self.texture {
            return Err(Error::Scene("noise texture needs at least one cell".into()));
        }
        Ok(())
    }

    pub fn depth_diopters(&self) -> f64 {
        m_to_diopters(self.depth_m)
    }

    /// Half-size in tangent units: physical half-size divided by depth.
    pub fn half_extent_tan(&self) -> f64 {
        (self.angular_size_deg.to_radians() / 2.0).tan()
    }

    /// Physical diameter / side length in metres.
    pub fn physical_size_m(&self) -> f64 {
        2.0 * self.depth_m * self.half_extent_tan()
    }

    /// Centre of the object in tangent units `(x/depth, y/depth)`.
    pub fn center_tan(&self) -> (f64, f64) {
        (
            self.azimuth_deg.to_radians().tan(),
            self.elevation_deg.to_radians().tan(),
        )
    }

    /// Centre in the centre-of-rotation frame, metres.
    pub fn center(&self) -> crate::Vec3 {
        let (cx, cy) = self.center_tan();
        crate::Vec3::new(cx * self.depth_m, cy * self.depth_m, -self.depth_m)
    }
}

/// Target circling the stimulus centre at a fixed visual-angle radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixationOrbit {
    pub radius_deg: f64,
    pub rate_deg_s: f64,
}

impl FixationOrbit {
    pub const DETECTION: FixationOrbit = FixationOrbit {
        radius_deg: 16.0,
        rate_deg_s: 90.0,
    };

    /// Target direction `(azimuth, elevation)` in degrees at time `t`.
    pub fn direction_at(&self, t_s: f64, start_phase_deg: f64, clockwise: bool) -> (f64, f64) {
        let sign = if clockwise { -1.0 } else { 1.0 };
        let phase = (start_phase_deg + sign * self.rate_deg_s * t_s).to_radians();
        (self.radius_deg * phase.cos(), self.radius_deg * phase.sin())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub version: u32,
    #[serde(default)]
    pub background: Background,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixation_orbit: Option<FixationOrbit>,
}

impl Default for Scene {
    fn default() -> Self {
        Scene {
            version: SCENE_VERSION,
            background: Background::default(),
            objects: Vec::new(),
            fixation_orbit: None,
        }
    }
}

impl Scene {
    pub fn new(objects: Vec<SceneObject>) -> Self {
        Scene {
            objects,
            ..Scene::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCENE_VERSION {
            return Err(Error::Scene(format!(
                "unsupported scene version {} (expected {SCENE_VERSION})",
                self.version
            )));
        }
        if let Background::Noise { cell_deg, .. } = self.background {
            if !(cell_deg > 0.0) {
                return Err(Error::Scene("background cell size must be positive".into()));
            }
        }
        self.objects.iter().try_for_each(SceneObject::validate)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Scene =
            serde_json::from_str(text).map_err(|e| Error::Scene(e.to_string()))?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialises")
    }

    /// Reads a scene file and loads any image textures relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut scene = Scene::from_json(&text)?;
        scene.resolve_textures(path.parent().unwrap_or(Path::new(".")))?;
        Ok(scene)
    }

    pub fn resolve_textures(&mut self, base: &Path) -> Result<()> {
        for obj in &mut self.objects {
            if let Texture::Image { path, data } = &mut obj.texture {
                if data.is_none() {
                    let img = RgbImage::read_ppm_file(&base.join(&*path))?;
                    *data = Some(Arc::new(img));
                }
            }
        }
        Ok(())
    }

    /// Objects in painter's order: farthest first, ties in declaration order.
    pub fn draw_order(&self) -> Vec<&SceneObject> {
        let mut objs: Vec<&SceneObject> = self.objects.iter().collect();
        objs.sort_by(|a, b| b.depth_m.total_cmp(&a.depth_m));
        objs
    }
}

/// The scene served when a client never sends one: the detection stimulus at
/// 1 D with a 0.5 D separation over a noise background.
pub fn default_scene() -> Scene {
    let mut s = super::make_detection_stimulus(1.0, 0.5, 7).expect("valid stimulus");
    s.background = Background::Noise {
        seed: 11,
        cell_deg: 1.0,
    };
    s
}
