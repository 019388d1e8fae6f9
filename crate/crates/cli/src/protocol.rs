//! Versioned JSON messages exchanged over the viewer WebSocket.
//! Every message is a text frame holding one object with `"v": 1` and a
//! `"kind"` discriminator.

use ocular_parallax::{EyeSide, Frustum};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;
/// Largest frame edge a client may request.
pub const MAX_FRAME_DIM: usize = 1024;
pub const DEFAULT_FRAME_DIM: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Request {
    SetGaze(GazeTarget),
    SetMode {
        /// `conventional`, `ocular`, `amplified` or `reversed`; `ocular:<gain>`
        /// is also accepted.
        mode: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gain: Option<f64>,
    },
    SetEyeModel {
        name: String,
        #[serde(default)]
        accommodated: bool,
    },
    SetIpd {
        ipd_m: f64,
    },
    SetScene {
        scene: serde_json::Value,
    },
    RequestFrame(FrameRequest),
}

impl Request {
    pub fn kind(&self) -> &'static str {
        match self {
            Request::SetGaze(_) => "set_gaze",
            Request::SetMode { .. } => "set_mode",
            Request::SetEyeModel { .. } => "set_eye_model",
            Request::SetIpd { .. } => "set_ipd",
            Request::SetScene { .. } => "set_scene",
            Request::RequestFrame(_) => "request_frame",
        }
    }

    /// Wire form with the version field.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("request serialises");
        v["v"] = PROTOCOL_VERSION.into();
        v.to_string()
    }
}

/// Either an explicit head-space fixation point, or azimuth/elevation from
/// the head origin (midpoint between the eyes) at `distance_m`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GazeTarget {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixation: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub azimuth_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elevation_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRequest {
    pub frame_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eye: Option<EyeSide>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default)]
    pub foveate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerEye<T> {
    pub left: T,
    pub right: T,
}

/// NDC shift of an object's centre against the same session with gaze
/// straight ahead at the current fixation distance. `None` when the centre
/// is behind the near plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDisplacement {
    pub index: usize,
    #[serde(default)]
    pub name: Option<String>,
    pub left: Option<[f64; 2]>,
    pub right: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub mode: String,
    pub eye_model: String,
    pub accommodated: bool,
    pub nc_mm: f64,
    pub ipd_m: f64,
    pub fixation: [f64; 3],
    pub nodal_points: PerEye<[f64; 3]>,
    pub frustums: PerEye<Frustum>,
    pub displacements: Vec<ObjectDisplacement>,
    pub frames_rendered: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reply {
    Frame {
        v: u32,
        frame_id: u64,
        /// Per-session frame counter, strictly increasing.
        seq: u64,
        eye: EyeSide,
        width: usize,
        height: usize,
        /// Always `"ppm"` (binary P6).
        format: String,
        /// Base64 of the image file bytes.
        data: String,
        telemetry: Telemetry,
    },
    Telemetry {
        v: u32,
        /// Kind of the request being acknowledged.
        ack: String,
        telemetry: Telemetry,
    },
    Error {
        v: u32,
        message: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        request_kind: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frame_id: Option<u64>,
    },
}

impl Reply {
    pub fn error(message: impl Into<String>, request_kind: Option<&str>, frame_id: Option<u64>) -> Self {
        Reply::Error {
            v: PROTOCOL_VERSION,
            message: message.into(),
            request_kind: request_kind.map(str::to_string),
            frame_id,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reply serialises")
    }
}

/// Parses one text frame, checking the version field.
pub fn parse_request(text: &str) -> Result<Request, (String, Option<u64>)> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| (format!("malformed JSON: {e}"), None))?;
    let frame_id = value.get("frame_id").and_then(|f| f.as_u64());
    let obj = value
        .as_object_mut()
        .ok_or_else(|| ("message must be a JSON object".to_string(), None))?;
    match obj.remove("v").and_then(|v| v.as_u64()) {
        Some(v) if v == PROTOCOL_VERSION as u64 => {}
        Some(v) => return Err((format!("unsupported protocol version {v}"), frame_id)),
        None => return Err(("missing protocol version \"v\"".to_string(), frame_id)),
    }
    serde_json::from_value(value).map_err(|e| (format!("invalid message: {e}"), frame_id))
}
