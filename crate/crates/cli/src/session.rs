use std::path::PathBuf;

use base64::Engine;
use ocular_parallax::perception_model::AcuityModel;
use ocular_parallax::retinal_sim::{foveate, render, Resolution, Scene};
use ocular_parallax::{
    eye_and_projection, AccommodationState, DisplayGeometry, EyeSide, GazeState, RenderMode,
    Result, SchematicEyeModel, Vec3,
};

use crate::protocol::*;

pub const DEFAULT_IPD_M: f64 = 0.064;
pub const DEFAULT_FIXATION_M: f64 = 1.0;

/// State of one viewer connection.
#[derive(Debug, Clone)]
pub struct Session {
    pub scene: Scene,
    pub gaze: GazeState,
    pub model: SchematicEyeModel,
    pub geometry: DisplayGeometry,
    pub resolution: Resolution,
    pub frames: u64,
    /// Directory image textures in `set_scene` are resolved against.
    pub asset_dir: PathBuf,
}

impl Session {
    pub fn new(scene: Scene, asset_dir: PathBuf) -> Self {
        Session {
            scene,
            gaze: GazeState::new(Vec3::new(0.0, 0.0, -DEFAULT_FIXATION_M), DEFAULT_IPD_M, RenderMode::OCULAR)
                .expect("valid default gaze"),
            model: SchematicEyeModel::default(),
            geometry: DisplayGeometry::default(),
            resolution: Resolution::new(DEFAULT_FRAME_DIM, DEFAULT_FRAME_DIM),
            frames: 0,
            asset_dir,
        }
    }

    /// Handles one text frame. Never fails: problems come back as error
    /// replies and leave the state untouched.
    pub fn handle_text(&mut self, text: &str) -> Reply {
        match parse_request(text) {
            Ok(req) => self.handle(req),
            Err((msg, frame_id)) => Reply::error(msg, None, frame_id),
        }
    }

    pub fn handle(&mut self, req: Request) -> Reply {
        let kind = req.kind();
        if let Request::RequestFrame(f) = req {
            return self
                .frame(&f)
                .unwrap_or_else(|e| Reply::error(e.to_string(), Some(kind), Some(f.frame_id)));
        }
        let mut next = self.clone();
        match next.apply(req).and_then(|()| next.telemetry()) {
            Ok(telemetry) => {
                *self = next;
                Reply::Telemetry {
                    v: PROTOCOL_VERSION,
                    ack: kind.to_string(),
                    telemetry,
                }
            }
            Err(e) => Reply::error(e.to_string(), Some(kind), None),
        }
    }

    fn apply(&mut self, req: Request) -> Result<()> {
        let bad = |m: String| ocular_parallax::Error::InvalidInput(m);
        match req {
            Request::SetGaze(t) => {
                let fixation = match (t.fixation, t.azimuth_deg, t.elevation_deg) {
                    (Some(f), None, None) => Vec3::from(f),
                    (None, az, el) if az.is_some() || el.is_some() => {
                        let d = t.distance_m.unwrap_or(DEFAULT_FIXATION_M);
                        if !(d > 0.0 && d.is_finite()) {
                            return Err(bad(format!("distance_m must be positive, got {d}")));
                        }
                        ocular_parallax::gaze_transform::direction_from_angles(
                            az.unwrap_or(0.0),
                            el.unwrap_or(0.0),
                        ) * d
                    }
                    _ => return Err(bad("set_gaze needs either fixation or azimuth_deg/elevation_deg".into())),
                };
                self.gaze = GazeState::new(fixation, self.gaze.ipd, self.gaze.mode)?;
            }
            Request::SetMode { mode, gain } => {
                let mut m: RenderMode = mode.parse()?;
                if let Some(g) = gain {
                    match m {
                        RenderMode::OcularParallax { .. } => m = RenderMode::OcularParallax { gain: g },
                        _ => return Err(bad(format!("mode '{mode}' takes no gain"))),
                    }
                }
                m.validate()?;
                self.gaze = self.gaze.with_mode(m);
            }
            Request::SetEyeModel { name, accommodated } => {
                let state = if accommodated {
                    AccommodationState::Accommodated
                } else {
                    AccommodationState::Relaxed
                };
                self.model = SchematicEyeModel::lookup(&name, state)?;
            }
            Request::SetIpd { ipd_m } => {
                self.gaze = GazeState::new(self.gaze.fixation, ipd_m, self.gaze.mode)?;
            }
            Request::SetScene { scene } => {
                let mut s: Scene = serde_json::from_value(scene)
                    .map_err(|e| ocular_parallax::Error::Scene(e.to_string()))?;
                s.validate()?;
                s.resolve_textures(&self.asset_dir)?;
                self.scene = s;
            }
            Request::RequestFrame(_) => unreachable!("frames are handled separately"),
        }
        Ok(())
    }

    fn frame(&mut self, f: &FrameRequest) -> Result<Reply> {
        let width = f.width.unwrap_or(self.resolution.width);
        let height = f.height.unwrap_or(self.resolution.height);
        if width == 0 || height == 0 || width > MAX_FRAME_DIM || height > MAX_FRAME_DIM {
            return Err(ocular_parallax::Error::InvalidInput(format!(
                "frame size {width}x{height} outside 1..={MAX_FRAME_DIM}"
            )));
        }
        let res = Resolution::new(width, height);
        let eye = f.eye.unwrap_or(EyeSide::Right);
        let mut img = render(&self.scene, &self.gaze, &self.model, &self.geometry, res, eye)?;
        if f.foveate {
            img = foveate(&img, &AcuityModel::default());
        }
        let telemetry = self.telemetry()?;
        self.resolution = res;
        self.frames += 1;
        Ok(Reply::Frame {
            v: PROTOCOL_VERSION,
            frame_id: f.frame_id,
            seq: self.frames,
            eye,
            width,
            height,
            format: "ppm".into(),
            data: base64::engine::general_purpose::STANDARD.encode(img.image.to_ppm()),
            telemetry: Telemetry {
                frames_rendered: self.frames,
                ..telemetry
            },
        })
    }

    /// Gaze straight ahead at the current fixation distance.
    pub fn baseline_gaze(&self) -> GazeState {
        let d = self.gaze.fixation.norm();
        GazeState {
            fixation: Vec3::new(0.0, 0.0, -d),
            ..self.gaze
        }
    }

    pub fn telemetry(&self) -> Result<Telemetry> {
        let [l, r] = EyeSide::both().map(|side| eye_and_projection(&self.gaze, &self.model, &self.geometry, side));
        let (l, r) = (l?, r?);
        let baseline = self.baseline_gaze();
        let [bl, br] = EyeSide::both().map(|side| eye_and_projection(&baseline, &self.model, &self.geometry, side));
        let (bl, br) = (bl?, br?);
        let shift = |cur: &ocular_parallax::EyeTransforms, base: &ocular_parallax::EyeTransforms, p: &Vec3| {
            match (cur.ndc(p), base.ndc(p)) {
                (Ok(a), Ok(b)) => Some([a.x - b.x, a.y - b.y]),
                _ => None,
            }
        };
        let displacements = self
            .scene
            .objects
            .iter()
            .enumerate()
            .map(|(index, obj)| {
                let c = obj.center();
                let pl = EyeSide::Left.center_of_rotation(self.gaze.ipd) + c;
                let pr = EyeSide::Right.center_of_rotation(self.gaze.ipd) + c;
                ObjectDisplacement {
                    index,
                    name: obj.name.clone(),
                    left: shift(&l, &bl, &pl),
                    right: shift(&r, &br, &pr),
                }
            })
            .collect();
        let v3 = |v: Vec3| [v.x, v.y, v.z];
        Ok(Telemetry {
            mode: self.gaze.mode.to_string(),
            eye_model: self.model.kind.as_str().to_string(),
            accommodated: self.model.state == AccommodationState::Accommodated,
            nc_mm: self.model.nc_mm(),
            ipd_m: self.gaze.ipd,
            fixation: v3(self.gaze.fixation),
            nodal_points: PerEye {
                left: v3(l.nodal_point),
                right: v3(r.nodal_point),
            },
            frustums: PerEye {
                left: l.frustum,
                right: r.frustum,
            },
            displacements,
            frames_rendered: self.frames,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ocular_parallax::retinal_sim::default_scene;

    fn session() -> Session {
        Session::new(default_scene(), PathBuf::from("."))
    }

    fn telemetry(r: Reply) -> Telemetry {
        match r {
            Reply::Telemetry { telemetry, .. } | Reply::Frame { telemetry, .. } => telemetry,
            Reply::Error { message, .. } => panic!("error reply: {message}"),
        }
    }

    #[test]
    fn malformed_messages_keep_state() {
        let mut s = session();
        let before = s.gaze;
        for text in [
            "not json",
            "[]",
            r#"{"kind":"set_ipd","ipd_m":0.06}"#,
            r#"{"v":2,"kind":"set_ipd","ipd_m":0.06}"#,
            r#"{"v":1,"kind":"teleport"}"#,
            r#"{"v":1,"kind":"set_ipd","ipd_m":-1}"#,
            r#"{"v":1,"kind":"set_gaze","fixation":[0,0,1]}"#,
            r#"{"v":1,"kind":"set_mode","mode":"sideways"}"#,
            r#"{"v":1,"kind":"set_mode","mode":"reversed","gain":2}"#,
            r#"{"v":1,"kind":"set_eye_model","name":"cyclops"}"#,
        ] {
            assert!(matches!(s.handle_text(text), Reply::Error { .. }), "{text}");
        }
        assert_eq!(s.gaze, before);
    }

    #[test]
    fn frame_errors_carry_id() {
        let mut s = session();
        match s.handle_text(r#"{"v":1,"kind":"request_frame","frame_id":9,"width":2048,"height":8}"#) {
            Reply::Error { frame_id, request_kind, .. } => {
                assert_eq!(frame_id, Some(9));
                assert_eq!(request_kind.as_deref(), Some("request_frame"));
            }
            r => panic!("{r:?}"),
        }
        assert_eq!(s.frames, 0);
    }

    #[test]
    fn centered_gaze_has_zero_displacement() {
        let mut s = session();
        let t = telemetry(s.handle_text(r#"{"v":1,"kind":"set_gaze","azimuth_deg":0,"elevation_deg":0,"distance_m":2}"#));
        for d in &t.displacements {
            assert_eq!(d.left, Some([0.0, 0.0]));
            assert_eq!(d.right, Some([0.0, 0.0]));
        }
        let t = telemetry(s.handle_text(r#"{"v":1,"kind":"set_gaze","azimuth_deg":-15,"elevation_deg":0}"#));
        assert!(t.displacements.iter().all(|d| d.right.unwrap()[0].abs() > 1e-6));
        let t = telemetry(s.handle_text(r#"{"v":1,"kind":"set_mode","mode":"conventional"}"#));
        assert!(t.displacements.iter().all(|d| d.right == Some([0.0, 0.0])));
        assert_eq!(t.nodal_points.left, [0.0; 3]);
    }

    #[test]
    fn amplified_mode_scales_nodal_point() {
        let mut s = session();
        let a = telemetry(s.handle_text(r#"{"v":1,"kind":"set_gaze","azimuth_deg":10,"elevation_deg":5}"#));
        let b = telemetry(s.handle_text(r#"{"v":1,"kind":"set_mode","mode":"amplified","gain":2}"#));
        assert_eq!(b.mode, "ocular:2");
        for i in 0..3 {
            assert!((b.nodal_points.right[i] - 2.0 * a.nodal_points.right[i]).abs() < 1e-15);
        }
    }
}
