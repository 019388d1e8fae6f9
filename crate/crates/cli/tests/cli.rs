use std::process::Command;

use ocular_parallax::psychophysics::RESULTS_HEADER;
use ocular_parallax::retinal_sim::RgbImage;
use serde_json::Value;

fn ocpx(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ocpx")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn matrices_conventional_has_zero_nodal_point() {
    let (code, out, _) = ocpx(&["matrices", "--fixation", "0,0,-2", "--ipd", "0.064", "--mode", "conventional"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    for eye in ["left", "right"] {
        assert_eq!(v[eye]["nodal_point"], serde_json::json!([0.0, 0.0, 0.0]));
        assert_eq!(v[eye]["eye_matrix"].as_array().unwrap().len(), 16);
        assert_eq!(v[eye]["projection_matrix"].as_array().unwrap().len(), 16);
    }
    // Row-major: the stereo shift sits in the last column of the first row.
    assert_eq!(v["left"]["eye_matrix"][3], 0.032);
    assert_eq!(v["right"]["eye_matrix"][3], -0.032);
}

#[test]
fn matrices_ocular_matches_library() {
    let (code, out, _) = ocpx(&[
        "matrices", "--fixation", "0.1,0.05,-1", "--ipd", "0.06", "--mode", "ocular",
        "--eye-model", "emsley", "--fov", "40,45,42,44", "--near", "0.05", "--far", "50",
        "--image-distance", "1.5",
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let model = ocular_parallax::SchematicEyeModel::lookup("emsley", ocular_parallax::AccommodationState::Relaxed).unwrap();
    let geom = ocular_parallax::DisplayGeometry {
        fov_left: 40.0,
        fov_right: 45.0,
        fov_top: 42.0,
        fov_bottom: 44.0,
        image_distance: 1.5,
        z_near: 0.05,
        z_far: 50.0,
    };
    let gaze = ocular_parallax::GazeState::new(
        ocular_parallax::Vec3::new(0.1, 0.05, -1.0),
        0.06,
        ocular_parallax::RenderMode::OCULAR,
    )
    .unwrap();
    let t = ocular_parallax::eye_and_projection(&gaze, &model, &geom, ocular_parallax::EyeSide::Left).unwrap();
    let p: Vec<f64> = serde_json::from_value(v["left"]["projection_matrix"].clone()).unwrap();
    for (a, b) in p.iter().zip(t.projection_matrix.to_row_major()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn curves_last_mar() {
    let (code, out, _) = ocpx(&["analyze", "curves", "--delta-d", "3", "--max-ecc", "40"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| *h == "mar_deg").unwrap();
    let last: Vec<&str> = lines.last().unwrap().split(',').collect();
    assert_eq!(last[col], "0.896667");
    assert_eq!(last[0], "40.000000");
    assert!(out.ends_with('\n'));
}

#[test]
fn crossover_report() {
    let (code, out, _) = ocpx(&["analyze", "crossover", "--delta-d", "3"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["display_mar_crossover_deg"].as_f64().unwrap() - 2.712).abs() < 1e-3);
}

#[test]
fn render_stimulus() {
    let dir = tempfile::tempdir().unwrap();
    let centered = dir.path().join("c.ppm");
    let (code, out, err) = ocpx(&[
        "render", "--stimulus", "1,0.5", "--gaze-angles", "0,0", "--mode", "ocular",
        "--res", "200x200", "--out", centered.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["reddish_pixels"], 0);
    let img = RgbImage::read_ppm_file(&centered).unwrap();
    assert_eq!((img.width, img.height), (200, 200));

    let eccentric = dir.path().join("e.ppm");
    let (code, out, _) = ocpx(&[
        "render", "--stimulus", "1,0.5", "--gaze-angles", "15,0", "--res", "800x800",
        "--out", eccentric.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!(v["reddish_pixels"].as_u64().unwrap() > 0);

    let scene = dir.path().join("scene.json");
    std::fs::write(
        &scene,
        r#"{"version":1,"background":{"kind":"solid","color":[10,20,30]},
            "objects":[{"kind":"disc","depth_diopters":2,"angular_size_deg":10,
                        "texture":{"kind":"solid","color":[200,0,0]}}]}"#,
    )
    .unwrap();
    let img_path = dir.path().join("s.ppm");
    let (code, _, err) = ocpx(&[
        "render", "--scene", scene.to_str().unwrap(), "--gaze", "0,0,-1", "--res", "64x48",
        "--foveate", "--out", img_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let img = RgbImage::read_ppm_file(&img_path).unwrap();
    assert_eq!((img.width, img.height), (64, 48));
    assert_eq!(img.pixel(0, 0), [10, 20, 30]);
}

#[test]
fn simulate_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("results.csv");
    let fits = dir.path().join("fits.json");
    let (code, _, err) = ocpx(&[
        "simulate-experiment", "--experiment", "discrimination", "--observer",
        r#"{"weber":0.11,"intercept":0.38,"lapse":0.01}"#, "--seed", "7", "--replications", "200",
        "--out", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with(RESULTS_HEADER));
    assert_eq!(text.lines().count(), 1 + 200 * 225);

    let (code, _, err) = ocpx(&["fit", "--in", csv.to_str().unwrap(), "--out", fits.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&fits).unwrap()).unwrap();
    assert_eq!(v["experiment"], "discrimination");
    assert_eq!(v["groups"].as_array().unwrap().len(), 3);
    let slope = v["linear"]["slope"].as_f64().unwrap();
    let intercept = v["linear"]["intercept_d"].as_f64().unwrap();
    assert!((slope - 0.11).abs() < 0.05, "{slope}");
    assert!((intercept - 0.38).abs() < 0.08, "{intercept}");
}

#[test]
fn usage_errors_exit_2() {
    let (code, _, err) = ocpx(&["teleport"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"));
    let (code, _, _) = ocpx(&[]);
    assert_eq!(code, 2);
    for args in [
        &["matrices", "--fixation", "0,0"][..],
        &["matrices", "--fixation", "0,0,-1", "--mode", "sideways"],
        &["matrices", "--fixation", "0,0,-1", "--eye-model", "cyclops"],
        &["matrices", "--fixation", "0,0,1"],
        &["analyze", "curves", "--delta-d", "a,b"],
        &["render", "--res", "800", "--out", "x.ppm"],
        &["simulate-experiment", "--experiment", "detection", "--observer", "{bad"],
        &["simulate-experiment", "--experiment", "detection", "--observer", r#"{"lapse":0.5}"#],
    ] {
        let (code, _, err) = ocpx(args);
        assert_eq!(code, 2, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn in_process_dispatch() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = ocpx::dispatch(["ocpx", "analyze", "curves", "--delta-d", "1", "--max-ecc", "1"], &mut out, &mut err);
    assert_eq!(code, 0);
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 4);
    let mut out = Vec::new();
    assert_eq!(ocpx::dispatch(["ocpx", "--help"], &mut out, &mut err), 0);
    assert!(String::from_utf8(out).unwrap().contains("simulate-experiment"));
}
