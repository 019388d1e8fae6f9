use std::fs;
use std::io::Write;
use std::path::Path;

use ocular_parallax::perception_model::{
    detectability_crossover, display_mar_crossover, tradeoff_table, AcuityModel, DisplaySpec,
    TradeoffConfig,
};
use ocular_parallax::psychophysics::{
    analyze_records, records_from_csv, records_to_csv, simulate_experiment, SimulatedObserver,
};
use ocular_parallax::retinal_sim::{
    default_scene, foveate, is_reddish, make_detection_stimulus, render, Scene,
};
use ocular_parallax::{
    eye_and_projection, AccommodationState, EyeSide, GazeState, SchematicEyeModel,
};
use serde_json::json;

use crate::args::*;
use crate::error::{CliError, CliResult};

pub fn load_model(args: &EyeModelArgs) -> CliResult<SchematicEyeModel> {
    let state = if args.accommodated {
        AccommodationState::Accommodated
    } else {
        AccommodationState::Relaxed
    };
    Ok(SchematicEyeModel::lookup(&args.eye_model, state)?)
}

fn write_output(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(CliError::io(format!("writing {}", p.display()))),
        None => stdout.write_all(bytes).map_err(CliError::io("writing output")),
    }
}

pub fn matrices(a: &MatricesArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&a.eye)?;
    let geom = a.geometry.geometry();
    let gaze = GazeState::new(a.fixation, a.ipd, a.mode)?;
    let mut per_eye = serde_json::Map::new();
    for side in EyeSide::both() {
        let t = eye_and_projection(&gaze, &model, &geom, side)?;
        per_eye.insert(side.to_string(), serde_json::to_value(t).expect("serialisable"));
    }
    let doc = json!({
        "mode": a.mode.to_string(),
        "eye_model": model.name,
        "nc_mm": model.nc_mm(),
        "ipd": a.ipd,
        "fixation": a.fixation,
        "left": per_eye["left"],
        "right": per_eye["right"],
    });
    writeln!(stdout, "{}", serde_json::to_string_pretty(&doc).expect("json"))
        .map_err(CliError::io("writing output"))
}

pub fn curves(a: &CurvesArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&a.eye)?;
    let cfg = TradeoffConfig {
        max_eccentricity: a.max_ecc,
        step: a.step,
        nc_m: model.nc_m(),
        d_far: a.reference_distance,
    };
    let disp = DisplaySpec {
        pixel_pitch_arcmin: a.pixel_pitch,
    };
    let table = tradeoff_table(&AcuityModel::default(), &disp, &a.delta_d.0, &cfg)?;
    write_output(a.out.as_deref(), table.to_csv().as_bytes(), stdout)
}

pub fn crossover(a: &CrossoverArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&a.eye)?;
    let acuity = AcuityModel::default();
    let disp = DisplaySpec {
        pixel_pitch_arcmin: a.pixel_pitch,
    };
    let parallax = a
        .delta_d
        .0
        .iter()
        .map(|&dd| {
            let e = detectability_crossover(&acuity, dd, model.nc_m(), a.reference_distance)?;
            Ok(json!({"delta_d": dd, "eccentricity_deg": e}))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let doc = json!({
        "display_mar_crossover_deg": display_mar_crossover(&acuity, &disp)?,
        "parallax_crossover": parallax,
    });
    writeln!(stdout, "{}", serde_json::to_string_pretty(&doc).expect("json"))
        .map_err(CliError::io("writing output"))
}

pub fn render_cmd(a: &RenderArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&a.eye)?;
    let geom = a.geometry.geometry();
    let side = EyeSide::from(a.eye_side);
    let scene = match (&a.scene, a.stimulus) {
        (Some(p), _) => Scene::load(p)?,
        (None, Some((abs, rel))) => make_detection_stimulus(abs, rel, 7)?,
        (None, None) => default_scene(),
    };
    let gaze = match (&a.gaze, &a.gaze_angles) {
        (Some(f), _) => GazeState::new(*f, a.ipd, a.mode)?,
        (None, Some(v)) => {
            let (az, el, dist) = match v.0.as_slice() {
                [az, el] => (*az, *el, 1.0),
                [az, el, d] => (*az, *el, *d),
                _ => return Err(CliError::Usage("--gaze-angles takes az,el[,distance]".into())),
            };
            GazeState::toward(side, az, el, dist, a.ipd, a.mode)?
        }
        (None, None) => GazeState::toward(side, 0.0, 0.0, 1.0, a.ipd, a.mode)?,
    };
    let mut img = render(&scene, &gaze, &model, &geom, a.res, side)?;
    if a.foveate {
        img = foveate(&img, &AcuityModel::default());
    }
    fs::write(&a.out, img.image.to_ppm()).map_err(CliError::io(format!("writing {}", a.out.display())))?;
    let summary = json!({
        "out": a.out,
        "width": img.width(),
        "height": img.height(),
        "eye": side.to_string(),
        "mode": a.mode.to_string(),
        "reddish_pixels": img.count_pixels(is_reddish),
    });
    writeln!(stdout, "{summary}").map_err(CliError::io("writing output"))
}

pub fn simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let obs: SimulatedObserver = serde_json::from_str(&a.observer)
        .map_err(|e| CliError::Usage(format!("--observer: {e}")))?;
    let recs = simulate_experiment(a.experiment.into(), &obs, a.seed, a.replications)?;
    write_output(a.out.as_deref(), records_to_csv(&recs).as_bytes(), stdout)
}

pub fn fit(a: &FitArgs, stdout: &mut dyn Write) -> CliResult<()> {
    let text = fs::read_to_string(&a.input)
        .map_err(CliError::io(format!("reading {}", a.input.display())))?;
    let recs = records_from_csv(&text)?;
    let fits = analyze_records(&recs)?;
    let mut body = serde_json::to_string_pretty(&fits).expect("json");
    body.push('\n');
    write_output(a.out.as_deref(), body.as_bytes(), stdout)
}
