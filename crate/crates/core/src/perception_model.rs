//! Ocular parallax magnitude versus peripheral visual acuity.
//!
//! Angles are degrees at the API boundary and radians internally. Object
//! distances are measured from the eye's centre of rotation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default far-point reference for dioptric queries: the nearest
/// back-surface distance of the detection stimuli (1 D).
pub const DEFAULT_REFERENCE_DISTANCE_M: f64 = 1.0;

/// Linear minimum-angle-of-resolution model `omega = m * e + omega0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcuityModel {
    /// Degrees of MAR per degree of eccentricity.
    pub slope: f64,
    /// Foveal MAR in degrees.
    pub omega0: f64,
}

impl Default for AcuityModel {
    fn default() -> Self {
        AcuityModel {
            slope: 0.022,
            omega0: 1.0 / 60.0,
        }
    }
}

impl AcuityModel {
    pub fn new(slope: f64, omega0: f64) -> Result<Self> {
        if !(slope >= 0.0 && omega0 > 0.0) {
            return Err(invalid(format!(
                "acuity model needs slope >= 0 and omega0 > 0 (got {slope}, {omega0})"
            )));
        }
        Ok(AcuityModel { slope, omega0 })
    }

    pub fn mar(&self, eccentricity_deg: f64) -> f64 {
        mar(self, eccentricity_deg)
    }
}

/// Minimum angle of resolution in degrees at eccentricity `e` degrees.
pub fn mar(model: &AcuityModel, e: f64) -> f64 {
    model.omega0 + model.slope * e
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplaySpec {
    /// Angular size of one pixel in arcminutes.
    pub pixel_pitch_arcmin: f64,
}

impl DisplaySpec {
    /// HTC Vive Pro: roughly 4.58 arcmin per pixel.
    pub const VIVE_PRO: DisplaySpec = DisplaySpec {
        pixel_pitch_arcmin: 4.58,
    };

    pub fn pitch_deg(&self) -> f64 {
        self.pixel_pitch_arcmin / 60.0
    }
}

/// Two points straight ahead of the unrotated eye.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParallaxQuery {
    pub eccentricity_deg: f64,
    pub d_near: f64,
    /// May be `f64::INFINITY`.
    pub d_far: f64,
    pub nc_m: f64,
}

impl ParallaxQuery {
    /// Query for a dioptric separation `delta_d` in front of `d_far`.
    pub fn from_diopters(eccentricity_deg: f64, delta_d: f64, d_far: f64, nc_m: f64) -> Self {
        ParallaxQuery {
            eccentricity_deg,
            d_near: 1.0 / (delta_d + 1.0 / d_far),
            d_far,
            nc_m,
        }
    }

    pub fn delta_diopters(&self) -> f64 {
        1.0 / self.d_near - 1.0 / self.d_far
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_near > 0.0 && self.d_near <= self.d_far) {
            return Err(invalid(format!(
                "need 0 < d_near <= d_far (got {}, {})",
                self.d_near, self.d_far
            )));
        }
        if !(0.0..90.0).contains(&self.eccentricity_deg) {
            return Err(invalid(format!(
                "eccentricity must be in [0, 90), got {}",
                self.eccentricity_deg
            )));
        }
        if !(self.nc_m >= 0.0) {
            return Err(invalid("NC must be non-negative"));
        }
        if self.d_near <= self.nc_m {
            return Err(invalid(format!(
                "near point ({} m) must lie beyond the nodal point ({} m)",
                self.d_near, self.nc_m
            )));
        }
        Ok(())
    }
}

/// Angular separation in degrees between the two query points as seen from
/// the nodal point after the eye has rotated by the query eccentricity.
pub fn parallax_angle(q: &ParallaxQuery) -> Result<f64> {
    q.validate()?;
    let e = q.eccentricity_deg.to_radians();
    let lateral = q.nc_m * e.sin();
    let axial = q.nc_m * e.cos();
    let near = (lateral / (q.d_near - axial)).atan();
    let far = if q.d_far.is_infinite() {
        0.0
    } else {
        (lateral / (q.d_far - axial)).atan()
    };
    Ok((near - far).to_degrees())
}

/// Scan resolution of [`detectability_crossover`], degrees.
pub const CROSSOVER_SCAN_STEP: f64 = 0.1;
/// Bisection tolerance of [`detectability_crossover`], degrees.
pub const CROSSOVER_TOLERANCE: f64 = 0.001;

/// Largest eccentricity below 90 degrees at which the parallax between two
/// points `delta_d` diopters apart reaches the MAR, or `None` if it never
/// does.
pub fn detectability_crossover(
    model: &AcuityModel,
    delta_d: f64,
    nc_m: f64,
    d_far: f64,
) -> Result<Option<f64>> {
    if !(delta_d > 0.0) {
        return Err(invalid(format!("delta_d must be positive, got {delta_d}")));
    }
    let margin = |e: f64| -> Result<f64> {
        let p = parallax_angle(&ParallaxQuery::from_diopters(e, delta_d, d_far, nc_m))?;
        Ok(p - mar(model, e))
    };
    let steps = (90.0 / CROSSOVER_SCAN_STEP).round() as usize;
    let mut last_detectable: Option<usize> = None;
    for i in 1..steps {
        if margin(i as f64 * CROSSOVER_SCAN_STEP)? >= 0.0 {
            last_detectable = Some(i);
        }
    }
    let Some(i) = last_detectable else {
        return Ok(None);
    };
    let mut lo = i as f64 * CROSSOVER_SCAN_STEP;
    let mut hi = (lo + CROSSOVER_SCAN_STEP).min(90.0 - 1e-9);
    if margin(hi)? >= 0.0 {
        return Ok(Some(hi));
    }
    while hi - lo > CROSSOVER_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if margin(mid)? >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// Eccentricity beyond which the display's pixel pitch is finer than the MAR.
pub fn display_mar_crossover(model: &AcuityModel, disp: &DisplaySpec) -> Result<f64> {
    let pitch = disp.pitch_deg();
    if !(disp.pixel_pitch_arcmin > 0.0) {
        return Err(invalid("pixel pitch must be positive"));
    }
    if pitch < model.omega0 {
        return Err(invalid(format!(
            "pixel pitch {pitch} deg is finer than the foveal MAR {} deg",
            model.omega0
        )));
    }
    if pitch == model.omega0 {
        return Ok(0.0);
    }
    if model.slope == 0.0 {
        return Err(invalid("flat acuity model never reaches the pixel pitch"));
    }
    Ok((pitch - model.omega0) / model.slope)
}

/// Angular speed of the line of sight, degrees per second, while pursuing a
/// target that circles the centre at a fixed visual-angle radius.
pub fn pursuit_retinal_speed(orbit_radius_deg: f64, angular_rate_deg_s: f64) -> Result<f64> {
    if !(0.0..90.0).contains(&orbit_radius_deg) {
        return Err(invalid(format!(
            "orbit radius must be in [0, 90), got {orbit_radius_deg}"
        )));
    }
    Ok(angular_rate_deg_s * orbit_radius_deg.to_radians().sin())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub eccentricity_deg: f64,
    /// One entry per requested dioptric separation, degrees.
    pub parallax_deg: Vec<f64>,
    pub mar_deg: f64,
    pub display_mar_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffTable {
    pub delta_d: Vec<f64>,
    pub rows: Vec<TradeoffRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffConfig {
    pub max_eccentricity: f64,
    pub step: f64,
    pub nc_m: f64,
    pub d_far: f64,
}

impl Default for TradeoffConfig {
    fn default() -> Self {
        TradeoffConfig {
            max_eccentricity: 40.0,
            step: 0.5,
            nc_m: 0.0076916,
            d_far: DEFAULT_REFERENCE_DISTANCE_M,
        }
    }
}

/// Parallax curves, MAR and display pitch sampled over eccentricity.
pub fn tradeoff_table(
    model: &AcuityModel,
    disp: &DisplaySpec,
    delta_d: &[f64],
    cfg: &TradeoffConfig,
) -> Result<TradeoffTable> {
    if !(cfg.step > 0.0) || !(0.0..90.0).contains(&cfg.max_eccentricity) {
        return Err(invalid(format!(
            "bad eccentricity range: max {} step {}",
            cfg.max_eccentricity, cfg.step
        )));
    }
    if delta_d.iter().any(|d| !(*d >= 0.0)) {
        return Err(invalid("dioptric separations must be non-negative"));
    }
    let n = (cfg.max_eccentricity / cfg.step + 1e-9).floor() as usize;
    let rows = (0..=n)
        .map(|i| {
            let e = i as f64 * cfg.step;
            let parallax_deg = delta_d
                .iter()
                .map(|&dd| parallax_angle(&ParallaxQuery::from_diopters(e, dd, cfg.d_far, cfg.nc_m)))
                .collect::<Result<Vec<_>>>()?;
            Ok(TradeoffRow {
                eccentricity_deg: e,
                parallax_deg,
                mar_deg: mar(model, e),
                display_mar_deg: disp.pitch_deg(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TradeoffTable {
        delta_d: delta_d.to_vec(),
        rows,
    })
}

impl TradeoffTable {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["eccentricity_deg".to_string()];
        h.extend(self.delta_d.iter().map(|d| format!("parallax_{d}D_deg")));
        h.push("mar_deg".into());
        h.push("display_mar_deg".into());
        h
    }

    /// Comma-separated with a header row; every row newline-terminated.
    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for row in &self.rows {
            let mut fields = vec![format!("{:.6}", row.eccentricity_deg)];
            fields.extend(row.parallax_deg.iter().map(|p| format!("{p:.6}")));
            fields.push(format!("{:.6}", row.mar_deg));
            fields.push(format!("{:.6}", row.display_mar_deg));
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}
