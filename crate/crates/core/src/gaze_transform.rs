//! Per-eye nodal points and the ocular parallax eye / projection matrices.
//!
//! Conventions: right-handed head space with the origin midway between the
//! two centres of rotation, `+x` towards the right eye, `+y` up, and the
//! viewer looking down `-z`. The left eye's centre of rotation sits at
//! `(-ipd/2, 0, 0)` and the right eye's at `(+ipd/2, 0, 0)`.

use nalgebra::{Matrix4, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::eye_model::SchematicEyeModel;

pub type Vec3 = Vector3<f64>;
pub type Ndc = Vector2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EyeSide {
    Left,
    Right,
}

impl EyeSide {
    /// Sign of the `ipd/2` term: `+` for the left eye, `-` for the right.
    pub fn ipd_sign(self) -> f64 {
        match self {
            EyeSide::Left => 1.0,
            EyeSide::Right => -1.0,
        }
    }

    /// Head-space position of this eye's centre of rotation.
    pub fn center_of_rotation(self, ipd: f64) -> Vec3 {
        Vec3::new(-self.ipd_sign() * ipd / 2.0, 0.0, 0.0)
    }

    pub fn both() -> [EyeSide; 2] {
        [EyeSide::Left, EyeSide::Right]
    }
}

impl fmt::Display for EyeSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EyeSide::Left => "left",
            EyeSide::Right => "right",
        })
    }
}

impl FromStr for EyeSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(EyeSide::Left),
            "right" | "r" => Ok(EyeSide::Right),
            _ => Err(invalid(format!("unknown eye side '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RenderMode {
    Conventional,
    OcularParallax { gain: f64 },
    /// Lateral nodal point components negated.
    ReversedOcularParallax,
}

impl RenderMode {
    pub const OCULAR: RenderMode = RenderMode::OcularParallax { gain: 1.0 };

    pub fn validate(&self) -> Result<()> {
        match *self {
            RenderMode::OcularParallax { gain } if !(gain > 0.0 && gain.is_finite()) => {
                Err(invalid(format!("gain must be positive, got {gain}")))
            }
            _ => Ok(()),
        }
    }
}

impl Default for RenderMode {
    fn default() -> Self {
        RenderMode::OCULAR
    }
}

impl fmt::Display for RenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RenderMode::Conventional => f.write_str("conventional"),
            RenderMode::OcularParallax { gain } if *gain == 1.0 => f.write_str("ocular"),
            RenderMode::OcularParallax { gain } => write!(f, "ocular:{gain}"),
            RenderMode::ReversedOcularParallax => f.write_str("reversed"),
        }
    }
}

/// Accepts `conventional`, `ocular`, `ocular:<gain>`, `amplified:<gain>` and
/// `reversed`.
impl FromStr for RenderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, gain) = match lower.split_once(':') {
            Some((n, g)) => {
                let g: f64 = g
                    .parse()
                    .map_err(|_| invalid(format!("bad gain in mode '{s}'")))?;
                (n.to_string(), Some(g))
            }
            None => (lower, None),
        };
        let mode = match (name.as_str(), gain) {
            ("conventional", None) => RenderMode::Conventional,
            ("ocular" | "ocular-parallax" | "amplified", g) => RenderMode::OcularParallax {
                gain: g.unwrap_or(1.0),
            },
            ("reversed" | "reversed-ocular-parallax", None) => RenderMode::ReversedOcularParallax,
            _ => return Err(invalid(format!("unknown render mode '{s}'"))),
        };
        mode.validate()?;
        Ok(mode)
    }
}

/// Tracked binocular fixation for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeState {
    /// Fixation point `F` in head space, metres.
    pub fixation: Vec3,
    /// Interpupillary distance, metres.
    pub ipd: f64,
    pub mode: RenderMode,
}

impl GazeState {
    pub fn new(fixation: Vec3, ipd: f64, mode: RenderMode) -> Result<Self> {
        let g = GazeState {
            fixation,
            ipd,
            mode,
        };
        g.validate()?;
        Ok(g)
    }

    /// Fixation placed `distance` metres from `side`'s centre of rotation,
    /// in the direction given by azimuth (positive to the right) and
    /// elevation (positive up), both in degrees.
    pub fn toward(
        side: EyeSide,
        azimuth_deg: f64,
        elevation_deg: f64,
        distance: f64,
        ipd: f64,
        mode: RenderMode,
    ) -> Result<Self> {
        let dir = direction_from_angles(azimuth_deg, elevation_deg);
        let fixation = side.center_of_rotation(ipd) + dir * distance;
        GazeState::new(fixation, ipd, mode)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ipd > 0.0 && self.ipd.is_finite()) {
            return Err(invalid(format!("ipd must be positive, got {}", self.ipd)));
        }
        if !self.fixation.iter().all(|c| c.is_finite()) {
            return Err(invalid("fixation must be finite"));
        }
        if !(self.fixation.z < 0.0) {
            return Err(invalid(format!(
                "fixation must lie in front of the viewer (z < 0), got z = {}",
                self.fixation.z
            )));
        }
        self.mode.validate()
    }

    pub fn with_mode(mut self, mode: RenderMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Unit direction for an azimuth/elevation pair given in degrees.
pub fn direction_from_angles(azimuth_deg: f64, elevation_deg: f64) -> Vec3 {
    let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
    Vec3::new(el.cos() * az.sin(), el.sin(), -el.cos() * az.cos())
}

/// Nodal point offsets of both eyes relative to their centres of rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodalPair {
    pub left: Vec3,
    pub right: Vec3,
}

impl NodalPair {
    pub fn compute(state: &GazeState, nc_m: f64) -> Result<Self> {
        Ok(NodalPair {
            left: nodal_point(&per_eye_fixation(state, EyeSide::Left)?, nc_m, state.mode)?,
            right: nodal_point(&per_eye_fixation(state, EyeSide::Right)?, nc_m, state.mode)?,
        })
    }

    pub fn get(&self, side: EyeSide) -> Vec3 {
        match side {
            EyeSide::Left => self.left,
            EyeSide::Right => self.right,
        }
    }
}

/// Fixation point relative to the given eye's centre of rotation.
pub fn per_eye_fixation(state: &GazeState, side: EyeSide) -> Result<Vec3> {
    let f = state.fixation + Vec3::new(side.ipd_sign() * state.ipd / 2.0, 0.0, 0.0);
    if f.norm() == 0.0 {
        return Err(invalid("fixation coincides with the centre of rotation"));
    }
    Ok(f)
}

/// Front nodal point relative to the centre of rotation for an eye looking
/// along `f_eye`.
pub fn nodal_point(f_eye: &Vec3, nc_m: f64, mode: RenderMode) -> Result<Vec3> {
    let len = f_eye.norm();
    if !(len > 0.0) || !len.is_finite() {
        return Err(invalid("fixation vector must have nonzero finite length"));
    }
    if !(nc_m >= 0.0) {
        return Err(invalid(format!("NC must be non-negative, got {nc_m}")));
    }
    mode.validate()?;
    let n = match mode {
        RenderMode::Conventional => Vec3::zeros(),
        RenderMode::OcularParallax { gain } => f_eye * (gain * nc_m / len),
        RenderMode::ReversedOcularParallax => {
            let n = f_eye * (nc_m / len);
            Vec3::new(-n.x, -n.y, n.z)
        }
    };
    Ok(n)
}

/// Row-major 4x4 homogeneous transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform4(pub Matrix4<f64>);

impl Transform4 {
    pub fn identity() -> Self {
        Transform4(Matrix4::identity())
    }

    pub fn translation(t: &Vec3) -> Self {
        Transform4(Matrix4::new_translation(t))
    }

    pub fn from_row_major(v: &[f64; 16]) -> Self {
        Transform4(Matrix4::from_row_slice(v))
    }

    pub fn to_row_major(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                out[r * 4 + c] = self.0[(r, c)];
            }
        }
        out
    }

    /// Zero-based `(row, col)` entry.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn apply(&self, v: &Vector4<f64>) -> Vector4<f64> {
        self.0 * v
    }

    pub fn apply_point(&self, p: &Vec3) -> Vector4<f64> {
        self.0 * p.push(1.0)
    }

    pub fn then(&self, next: &Transform4) -> Transform4 {
        Transform4(next.0 * self.0)
    }

    pub fn max_abs_diff(&self, other: &Transform4) -> f64 {
        (self.0 - other.0).abs().max()
    }
}

impl std::ops::Mul for Transform4 {
    type Output = Transform4;

    fn mul(self, rhs: Transform4) -> Transform4 {
        Transform4(self.0 * rhs.0)
    }
}

impl Serialize for Transform4 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Transform4 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = <[f64; 16]>::deserialize(d)?;
        Ok(Transform4::from_row_major(&v))
    }
}

/// `T(-n) * T(±ipd/2)`: head space to the eye space of `side`.
pub fn eye_matrix(n: &Vec3, ipd: f64, side: EyeSide) -> Transform4 {
    let stereo = Transform4::translation(&Vec3::new(side.ipd_sign() * ipd / 2.0, 0.0, 0.0));
    Transform4::translation(&-n) * stereo
}

/// Physical display setup of the conventional stereo frustum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayGeometry {
    /// Half-angles in degrees, all positive.
    pub fov_left: f64,
    pub fov_right: f64,
    pub fov_top: f64,
    pub fov_bottom: f64,
    /// Distance from the centre of rotation to the virtual image, metres.
    /// `f64::INFINITY` for optical infinity (serialised as `"inf"`).
    #[serde(with = "image_distance_serde")]
    pub image_distance: f64,
    pub z_near: f64,
    pub z_far: f64,
}

impl Default for DisplayGeometry {
    fn default() -> Self {
        DisplayGeometry {
            fov_left: 45.0,
            fov_right: 45.0,
            fov_top: 45.0,
            fov_bottom: 45.0,
            image_distance: f64::INFINITY,
            z_near: 0.1,
            z_far: 100.0,
        }
    }
}

impl DisplayGeometry {
    pub fn symmetric(half_fov_deg: f64, image_distance: f64, z_near: f64, z_far: f64) -> Self {
        DisplayGeometry {
            fov_left: half_fov_deg,
            fov_right: half_fov_deg,
            fov_top: half_fov_deg,
            fov_bottom: half_fov_deg,
            image_distance,
            z_near,
            z_far,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [
            ("left", self.fov_left),
            ("right", self.fov_right),
            ("top", self.fov_top),
            ("bottom", self.fov_bottom),
        ] {
            if !(a > 0.0 && a < 90.0) {
                return Err(invalid(format!("fov {name} must be in (0, 90) degrees, got {a}")));
            }
        }
        if !(self.z_near > 0.0 && self.z_near < self.z_far && self.z_far.is_finite()) {
            return Err(invalid(format!(
                "need 0 < z_near < z_far, got {} / {}",
                self.z_near, self.z_far
            )));
        }
        if !(self.image_distance >= self.z_near) {
            return Err(invalid(format!(
                "image distance {} is closer than z_near",
                self.image_distance
            )));
        }
        Ok(())
    }

    /// Signed tangents `(left, right, bottom, top)`; left and bottom negative.
    pub fn tangents(&self) -> [f64; 4] {
        [
            -self.fov_left.to_radians().tan(),
            self.fov_right.to_radians().tan(),
            -self.fov_bottom.to_radians().tan(),
            self.fov_top.to_radians().tan(),
        ]
    }

    pub fn horizontal_fov(&self) -> f64 {
        self.fov_left + self.fov_right
    }

    pub fn vertical_fov(&self) -> f64 {
        self.fov_top + self.fov_bottom
    }
}

mod image_distance_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &f64, s: S) -> Result<S::Ok, S::Error> {
        if d.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*d)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(f64::INFINITY)
            }
            Repr::Text(t) => Err(serde::de::Error::custom(format!("bad image distance '{t}'"))),
        }
    }
}

/// Near-plane bounds of an asymmetric view frustum, in the eye space of the
/// projection centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frustum {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
    pub z_near: f64,
    pub z_far: f64,
}

impl Frustum {
    pub fn validate(&self) -> Result<()> {
        let ok = self.left < self.right
            && self.bottom < self.top
            && self.z_near > 0.0
            && self.z_near < self.z_far
            && [self.left, self.right, self.top, self.bottom, self.z_near, self.z_far]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Degenerate(format!("invalid frustum {self:?}")))
        }
    }
}

/// Frustum of a projection centre displaced from the centre of rotation.
///
/// `offset` is the centre of rotation as seen from the projection centre:
/// `x`/`y` lateral, `z` measured along the viewing direction. For a nodal
/// point `n` this is `(-n.x, -n.y, n.z)`; see [`projection_frustum`].
/// The near and far planes stay anchored `z_near`/`z_far` in front of the
/// centre of rotation, so the returned clip distances absorb `offset.z`.
///
/// The bounds are `(z_near + o_z) / (d + o_z) * (d tan(a) + o_xy)`, written
/// as `(z_near + o_z) * (tan(a) + o_xy / d) / (1 + o_z / d)` so that the
/// `d = inf` limit is exact.
pub fn frustum_from_offset(geom: &DisplayGeometry, offset: &Vec3) -> Result<Frustum> {
    geom.validate()?;
    let d = geom.image_distance;
    let inv_d = if d.is_infinite() { 0.0 } else { 1.0 / d };
    let denom = 1.0 + offset.z * inv_d;
    if !(denom > 0.0) {
        return Err(Error::Degenerate(format!(
            "projection centre at or beyond the virtual image (d = {d}, offset z = {})",
            offset.z
        )));
    }
    let near = geom.z_near + offset.z;
    let far = geom.z_far + offset.z;
    if !(near > 0.0) {
        return Err(Error::Degenerate(format!(
            "near plane behind the projection centre (effective near = {near})"
        )));
    }
    let [tl, tr, tb, tt] = geom.tangents();
    let bound = |tan_a: f64, lateral: f64| near * (tan_a + lateral * inv_d) / denom;
    let f = Frustum {
        left: bound(tl, offset.x),
        right: bound(tr, offset.x),
        bottom: bound(tb, offset.y),
        top: bound(tt, offset.y),
        z_near: near,
        z_far: far,
    };
    f.validate()?;
    Ok(f)
}

/// Frustum for a projection centre at nodal point `n` (relative to the
/// centre of rotation, head-space axes).
pub fn projection_frustum(geom: &DisplayGeometry, n: &Vec3) -> Result<Frustum> {
    frustum_from_offset(geom, &Vec3::new(-n.x, -n.y, n.z))
}

/// Right-handed perspective matrix with clip-space z in `[-1, 1]`.
pub fn projection_matrix(f: &Frustum) -> Result<Transform4> {
    if f.right == f.left || f.top == f.bottom || f.z_far == f.z_near {
        return Err(Error::Degenerate(format!("zero-extent frustum {f:?}")));
    }
    let (l, r, b, t, n, fa) = (f.left, f.right, f.bottom, f.top, f.z_near, f.z_far);
    #[rustfmt::skip]
    let m = Matrix4::new(
        2.0 * n / (r - l), 0.0,               (r + l) / (r - l),      0.0,
        0.0,               2.0 * n / (t - b), (t + b) / (t - b),      0.0,
        0.0,               0.0,               -(fa + n) / (fa - n),  -2.0 * fa * n / (fa - n),
        0.0,               0.0,               -1.0,                   0.0,
    );
    Ok(Transform4(m))
}

/// Per-eye outputs of the ocular parallax pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EyeTransforms {
    pub eye_matrix: Transform4,
    pub projection_matrix: Transform4,
    pub nodal_point: Vec3,
    pub frustum: Frustum,
}

impl EyeTransforms {
    /// Clip-space position of a head-space point.
    pub fn clip(&self, p: &Vec3) -> Vector4<f64> {
        self.projection_matrix.apply(&self.eye_matrix.apply_point(p))
    }

    /// Clip-space position of a model-space vertex under view `V` and model
    /// `M`: `P * E * V * M * v`.
    pub fn clip_with_pose(&self, v: &Vec3, view: &Transform4, model: &Transform4) -> Vector4<f64> {
        (self.projection_matrix * self.eye_matrix * *view * *model).apply_point(v)
    }

    /// NDC of a head-space point; errors if it is not in front of the near
    /// plane.
    pub fn ndc(&self, p: &Vec3) -> Result<Ndc> {
        let eye = self.eye_matrix.apply_point(p);
        if !(-eye.z >= self.frustum.z_near) {
            return Err(Error::BehindNearPlane);
        }
        let c = self.projection_matrix.apply(&eye);
        Ok(Ndc::new(c.x / c.w, c.y / c.w))
    }

    /// Tangent-plane coordinates `(x/-z, y/-z)` for an NDC position; the
    /// inverse of the projection's x/y mapping.
    pub fn ndc_to_tangent(&self, ndc: &Ndc) -> Ndc {
        let p = &self.projection_matrix;
        Ndc::new(
            (ndc.x + p.entry(0, 2)) / p.entry(0, 0),
            (ndc.y + p.entry(1, 2)) / p.entry(1, 1),
        )
    }
}

/// Eye and projection matrices for one eye with an explicit NC (metres).
pub fn eye_and_projection_nc(
    state: &GazeState,
    nc_m: f64,
    geom: &DisplayGeometry,
    side: EyeSide,
) -> Result<EyeTransforms> {
    state.validate()?;
    let f_eye = per_eye_fixation(state, side)?;
    let n = nodal_point(&f_eye, nc_m, state.mode)?;
    let frustum = projection_frustum(geom, &n)?;
    Ok(EyeTransforms {
        eye_matrix: eye_matrix(&n, state.ipd, side),
        projection_matrix: projection_matrix(&frustum)?,
        nodal_point: n,
        frustum,
    })
}

pub fn eye_and_projection(
    state: &GazeState,
    model: &SchematicEyeModel,
    geom: &DisplayGeometry,
    side: EyeSide,
) -> Result<EyeTransforms> {
    eye_and_projection_nc(state, model.nc_m(), geom, side)
}

/// NDC shift of head-space point `p` when gaze changes from `gaze_a` to
/// `gaze_b`.
pub fn screen_displacement(
    p: &Vec3,
    gaze_a: &GazeState,
    gaze_b: &GazeState,
    model: &SchematicEyeModel,
    geom: &DisplayGeometry,
    side: EyeSide,
) -> Result<Ndc> {
    screen_displacement_nc(p, gaze_a, gaze_b, model.nc_m(), geom, side)
}

pub fn screen_displacement_nc(
    p: &Vec3,
    gaze_a: &GazeState,
    gaze_b: &GazeState,
    nc_m: f64,
    geom: &DisplayGeometry,
    side: EyeSide,
) -> Result<Ndc> {
    let a = eye_and_projection_nc(gaze_a, nc_m, geom, side)?.ndc(p)?;
    let b = eye_and_projection_nc(gaze_b, nc_m, geom, side)?.ndc(p)?;
    Ok(b - a)
}
