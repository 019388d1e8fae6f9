use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ocular_parallax::psychophysics::Experiment;
use ocular_parallax::retinal_sim::Resolution;
use ocular_parallax::{DisplayGeometry, EyeSide, RenderMode, Vec3};

#[derive(Debug, Parser)]
#[command(name = "ocpx", version, about = "Ocular parallax rendering toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print per-eye eye matrix, projection matrix and nodal point as JSON.
    Matrices(MatricesArgs),
    /// Perceptual analyses.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Render a scene for one eye to a binary PPM.
    Render(RenderArgs),
    /// Simulate 2AFC sessions and write the trial results as CSV.
    SimulateExperiment(SimulateArgs),
    /// Fit psychometric functions to a results CSV.
    Fit(FitArgs),
    /// Run the WebSocket session service for the interactive viewer.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Parallax and acuity against eccentricity as CSV.
    Curves(CurvesArgs),
    /// Eccentricities where parallax and display pitch cross the acuity limit.
    Crossover(CrossoverArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Side {
    Left,
    Right,
}

impl From<Side> for EyeSide {
    fn from(s: Side) -> Self {
        match s {
            Side::Left => EyeSide::Left,
            Side::Right => EyeSide::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ExperimentArg {
    Detection,
    Discrimination,
}

impl From<ExperimentArg> for Experiment {
    fn from(e: ExperimentArg) -> Self {
        match e {
            ExperimentArg::Detection => Experiment::Detection,
            ExperimentArg::Discrimination => Experiment::Discrimination,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EyeModelArgs {
    /// gullstrand1, gullstrand-emsley or emsley.
    #[arg(long = "eye-model", default_value = "gullstrand-emsley")]
    pub eye_model: String,
    /// Use the accommodated variant of the eye model.
    #[arg(long)]
    pub accommodated: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    /// Half field of view in degrees: left,right,top,bottom.
    #[arg(long, value_parser = parse_fov, default_value = "45,45,45,45")]
    pub fov: [f64; 4],
    #[arg(long, default_value_t = 0.1)]
    pub near: f64,
    #[arg(long, default_value_t = 100.0)]
    pub far: f64,
    /// Virtual image distance in metres, or "inf".
    #[arg(long = "image-distance", value_parser = parse_distance, default_value = "inf")]
    pub image_distance: f64,
}

impl GeometryArgs {
    pub fn geometry(&self) -> DisplayGeometry {
        let [l, r, t, b] = self.fov;
        DisplayGeometry {
            fov_left: l,
            fov_right: r,
            fov_top: t,
            fov_bottom: b,
            image_distance: self.image_distance,
            z_near: self.near,
            z_far: self.far,
        }
    }
}

#[derive(Debug, Args)]
pub struct MatricesArgs {
    /// Fixation point in head space, metres.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub fixation: Vec3,
    #[arg(long, default_value_t = 0.064)]
    pub ipd: f64,
    /// conventional, ocular, ocular:<gain>, amplified:<gain> or reversed.
    #[arg(long, value_parser = parse_mode, default_value = "ocular")]
    pub mode: RenderMode,
    #[command(flatten)]
    pub eye: EyeModelArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Depth separations in diopters.
    #[arg(long = "delta-d", value_parser = parse_list, default_value = "1,2,3")]
    pub delta_d: FloatList,
    #[arg(long = "max-ecc", default_value_t = 40.0)]
    pub max_ecc: f64,
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
    /// Distance of the farther point in metres, or "inf".
    #[arg(long = "reference-distance", value_parser = parse_distance, default_value = "1")]
    pub reference_distance: f64,
    /// Display pixel pitch in arcminutes.
    #[arg(long = "pixel-pitch", default_value_t = 4.58)]
    pub pixel_pitch: f64,
    #[command(flatten)]
    pub eye: EyeModelArgs,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CrossoverArgs {
    #[arg(long = "delta-d", value_parser = parse_list, default_value = "1,2,3")]
    pub delta_d: FloatList,
    #[arg(long = "reference-distance", value_parser = parse_distance, default_value = "1")]
    pub reference_distance: f64,
    #[arg(long = "pixel-pitch", default_value_t = 4.58)]
    pub pixel_pitch: f64,
    #[command(flatten)]
    pub eye: EyeModelArgs,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Scene JSON; the built-in default scene when omitted.
    #[arg(long, conflicts_with = "stimulus")]
    pub scene: Option<PathBuf>,
    /// Two-disc occlusion stimulus: back distance and separation, diopters.
    #[arg(long, value_parser = parse_pair)]
    pub stimulus: Option<(f64, f64)>,
    /// Fixation point in head space, metres.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, conflicts_with = "gaze_angles")]
    pub gaze: Option<Vec3>,
    /// Fixation as azimuth,elevation[,distance] from the rendered eye's
    /// centre of rotation (degrees, metres; distance defaults to 1).
    #[arg(long = "gaze-angles", value_parser = parse_list, allow_hyphen_values = true)]
    pub gaze_angles: Option<FloatList>,
    #[arg(long, value_parser = parse_mode, default_value = "ocular")]
    pub mode: RenderMode,
    #[arg(long, value_parser = parse_resolution, default_value = "800x800")]
    pub res: Resolution,
    #[arg(long, value_enum, default_value = "right")]
    pub eye_side: Side,
    #[arg(long, default_value_t = 0.064)]
    pub ipd: f64,
    /// Apply eccentricity-dependent acuity blur.
    #[arg(long)]
    pub foveate: bool,
    #[command(flatten)]
    pub eye: EyeModelArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub experiment: ExperimentArg,
    /// Observer parameters as JSON; missing fields take defaults.
    #[arg(long, default_value = "{}")]
    pub observer: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub replications: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8601)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Initial scene for every session.
    #[arg(long)]
    pub scene: Option<PathBuf>,
}

/// Comma-separated numbers given as one argument.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

pub fn parse_list(s: &str) -> Result<FloatList, String> {
    parse_numbers(s).map(FloatList)
}

fn parse_numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{p}' is not a finite number"))
        })
        .collect()
}

fn parse_fixed<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v = parse_numbers(s)?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected {N} comma-separated values, got {}", v.len()))
}

pub fn parse_vec3(s: &str) -> Result<Vec3, String> {
    parse_fixed::<3>(s).map(Vec3::from)
}

pub fn parse_fov(s: &str) -> Result<[f64; 4], String> {
    parse_fixed::<4>(s)
}

pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    parse_fixed::<2>(s).map(|[a, b]| (a, b))
}

pub fn parse_distance(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        t => t
            .parse::<f64>()
            .ok()
            .filter(|v| *v > 0.0)
            .ok_or_else(|| format!("'{s}' is not a positive distance or 'inf'")),
    }
}

pub fn parse_mode(s: &str) -> Result<RenderMode, String> {
    s.parse::<RenderMode>().map_err(|e| e.to_string())
}

pub fn parse_resolution(s: &str) -> Result<Resolution, String> {
    s.parse::<Resolution>().map_err(|e| e.to_string())
}
