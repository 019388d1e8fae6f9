//! Python module `ocular_parallax`.

use ocular_parallax::perception_model::{self as pm, AcuityModel, DisplaySpec, ParallaxQuery};
use ocular_parallax::psychophysics::{self as psy, Experiment, LevelData, SimulatedObserver};
use ocular_parallax::retinal_sim::{self as rs, Resolution, Scene};
use ocular_parallax::{
    AccommodationState, DisplayGeometry, EyeSide, GazeState, RenderMode, SchematicEyeModel, Vec3,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

pub fn to_py_err(e: ocular_parallax::Error) -> PyErr {
    use ocular_parallax::Error as E;
    match e {
        E::InvalidInput(_) | E::UnknownEyeModel(_) | E::Scene(_) | E::InsufficientData(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = ocular_parallax::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py_err)
}

fn state(accommodated: bool) -> AccommodationState {
    if accommodated {
        AccommodationState::Accommodated
    } else {
        AccommodationState::Relaxed
    }
}

fn rows(m: &ocular_parallax::Transform4) -> Vec<Vec<f64>> {
    m.to_row_major().chunks(4).map(<[f64]>::to_vec).collect()
}

/// Schematic eye model.
#[pyclass(name = "EyeModel", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyEyeModel {
    inner: SchematicEyeModel,
}

#[pymethods]
impl PyEyeModel {
    #[new]
    #[pyo3(signature = (name = "gullstrand-emsley", accommodated = false))]
    fn new(name: &str, accommodated: bool) -> PyResult<Self> {
        Ok(PyEyeModel {
            inner: SchematicEyeModel::lookup(name, state(accommodated)).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn builtin() -> Vec<PyEyeModel> {
        ocular_parallax::builtin_models()
            .into_iter()
            .map(|inner| PyEyeModel { inner })
            .collect()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn accommodated(&self) -> bool {
        self.inner.state == AccommodationState::Accommodated
    }

    #[getter]
    fn vn_mm(&self) -> f64 {
        self.inner.vn_mm
    }

    #[getter]
    fn vc_mm(&self) -> f64 {
        self.inner.vc_mm
    }

    #[getter]
    fn nc_mm(&self) -> f64 {
        self.inner.nc_mm()
    }

    fn __repr__(&self) -> String {
        format!("EyeModel(name={:?}, nc_mm={})", self.inner.name, self.inner.nc_mm())
    }
}

/// Display field of view, clip planes and virtual image distance.
#[pyclass(name = "DisplayGeometry", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGeometry {
    inner: DisplayGeometry,
}

#[pymethods]
impl PyGeometry {
    #[new]
    #[pyo3(signature = (fov = (45.0, 45.0, 45.0, 45.0), near = 0.1, far = 100.0, image_distance = f64::INFINITY))]
    fn new(fov: (f64, f64, f64, f64), near: f64, far: f64, image_distance: f64) -> PyResult<Self> {
        let inner = DisplayGeometry {
            fov_left: fov.0,
            fov_right: fov.1,
            fov_top: fov.2,
            fov_bottom: fov.3,
            image_distance,
            z_near: near,
            z_far: far,
        };
        inner.validate().map_err(to_py_err)?;
        Ok(PyGeometry { inner })
    }

    #[getter]
    fn fov(&self) -> (f64, f64, f64, f64) {
        let g = &self.inner;
        (g.fov_left, g.fov_right, g.fov_top, g.fov_bottom)
    }

    #[getter]
    fn image_distance(&self) -> f64 {
        self.inner.image_distance
    }
}

/// Per-eye eye matrix, projection matrix, nodal point and frustum.
#[pyclass(name = "EyeTransforms", frozen)]
pub struct PyEyeTransforms {
    inner: ocular_parallax::EyeTransforms,
}

#[pymethods]
impl PyEyeTransforms {
    /// 4x4 nested list, row-major.
    #[getter]
    fn eye_matrix(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.eye_matrix)
    }

    #[getter]
    fn projection_matrix(&self) -> Vec<Vec<f64>> {
        rows(&self.inner.projection_matrix)
    }

    #[getter]
    fn nodal_point(&self) -> (f64, f64, f64) {
        let n = self.inner.nodal_point;
        (n.x, n.y, n.z)
    }

    /// `(left, right, bottom, top, near, far)`.
    #[getter]
    fn frustum(&self) -> (f64, f64, f64, f64, f64, f64) {
        let f = self.inner.frustum;
        (f.left, f.right, f.bottom, f.top, f.z_near, f.z_far)
    }

    fn ndc(&self, point: (f64, f64, f64)) -> PyResult<(f64, f64)> {
        let v = self.inner.ndc(&Vec3::new(point.0, point.1, point.2)).map_err(to_py_err)?;
        Ok((v.x, v.y))
    }
}

fn gaze(fixation: (f64, f64, f64), ipd: f64, mode: &str) -> PyResult<GazeState> {
    GazeState::new(Vec3::new(fixation.0, fixation.1, fixation.2), ipd, parse::<RenderMode>(mode)?)
        .map_err(to_py_err)
}

fn geometry_or_default(g: Option<&PyGeometry>) -> DisplayGeometry {
    g.map(|g| g.inner).unwrap_or_default()
}

fn model_or_default(m: Option<&PyEyeModel>) -> SchematicEyeModel {
    m.map(|m| m.inner.clone()).unwrap_or_default()
}

#[pyfunction]
#[pyo3(signature = (name = "gullstrand-emsley", accommodated = false))]
fn nc_distance(name: &str, accommodated: bool) -> PyResult<f64> {
    let m = SchematicEyeModel::lookup(name, state(accommodated)).map_err(to_py_err)?;
    Ok(ocular_parallax::nc_distance(&m))
}

#[pyfunction]
#[pyo3(signature = (fixation, eye = "left", ipd = 0.064, mode = "ocular", model = None, geometry = None))]
fn eye_and_projection(
    fixation: (f64, f64, f64),
    eye: &str,
    ipd: f64,
    mode: &str,
    model: Option<&PyEyeModel>,
    geometry: Option<&PyGeometry>,
) -> PyResult<PyEyeTransforms> {
    let inner = ocular_parallax::eye_and_projection(
        &gaze(fixation, ipd, mode)?,
        &model_or_default(model),
        &geometry_or_default(geometry),
        parse::<EyeSide>(eye)?,
    )
    .map_err(to_py_err)?;
    Ok(PyEyeTransforms { inner })
}

/// NDC shift of `point` when fixation moves from `fixation_a` to
/// `fixation_b`.
#[pyfunction]
#[pyo3(signature = (point, fixation_a, fixation_b, eye = "left", ipd = 0.064, mode = "ocular", model = None, geometry = None))]
#[allow(clippy::too_many_arguments)]
fn screen_displacement(
    point: (f64, f64, f64),
    fixation_a: (f64, f64, f64),
    fixation_b: (f64, f64, f64),
    eye: &str,
    ipd: f64,
    mode: &str,
    model: Option<&PyEyeModel>,
    geometry: Option<&PyGeometry>,
) -> PyResult<(f64, f64)> {
    let d = ocular_parallax::screen_displacement(
        &Vec3::new(point.0, point.1, point.2),
        &gaze(fixation_a, ipd, mode)?,
        &gaze(fixation_b, ipd, mode)?,
        &model_or_default(model),
        &geometry_or_default(geometry),
        parse::<EyeSide>(eye)?,
    )
    .map_err(to_py_err)?;
    Ok((d.x, d.y))
}

/// Angular parallax in degrees between points `delta_d` diopters apart.
#[pyfunction]
#[pyo3(signature = (eccentricity_deg, delta_d, reference_distance = pm::DEFAULT_REFERENCE_DISTANCE_M, nc_mm = 7.6916))]
fn parallax_angle(eccentricity_deg: f64, delta_d: f64, reference_distance: f64, nc_mm: f64) -> PyResult<f64> {
    pm::parallax_angle(&ParallaxQuery::from_diopters(
        eccentricity_deg,
        delta_d,
        reference_distance,
        nc_mm / 1000.0,
    ))
    .map_err(to_py_err)
}

#[pyfunction]
fn mar(eccentricity_deg: f64) -> f64 {
    pm::mar(&AcuityModel::default(), eccentricity_deg)
}

#[pyfunction]
#[pyo3(signature = (pixel_pitch_arcmin = 4.58))]
fn display_mar_crossover(pixel_pitch_arcmin: f64) -> PyResult<f64> {
    pm::display_mar_crossover(&AcuityModel::default(), &DisplaySpec { pixel_pitch_arcmin }).map_err(to_py_err)
}

#[pyfunction]
#[pyo3(signature = (delta_d, reference_distance = pm::DEFAULT_REFERENCE_DISTANCE_M, nc_mm = 7.6916))]
fn detectability_crossover(delta_d: f64, reference_distance: f64, nc_mm: f64) -> PyResult<Option<f64>> {
    pm::detectability_crossover(&AcuityModel::default(), delta_d, nc_mm / 1000.0, reference_distance)
        .map_err(to_py_err)
}

#[pyfunction]
fn pursuit_retinal_speed(orbit_radius_deg: f64, angular_rate_deg_s: f64) -> PyResult<f64> {
    pm::pursuit_retinal_speed(orbit_radius_deg, angular_rate_deg_s).map_err(to_py_err)
}

/// Rendered RGB image, row-major, 3 bytes per pixel.
#[pyclass(name = "Image", frozen)]
pub struct PyImage {
    inner: rs::RgbImage,
}

#[pymethods]
impl PyImage {
    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }

    #[getter]
    fn data<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.data)
    }

    fn pixel(&self, x: usize, y: usize) -> PyResult<(u8, u8, u8)> {
        if x >= self.inner.width || y >= self.inner.height {
            return Err(PyValueError::new_err("pixel out of range"));
        }
        let [r, g, b] = self.inner.pixel(x, y);
        Ok((r, g, b))
    }

    fn to_ppm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_ppm())
    }

    fn count_reddish(&self) -> usize {
        self.inner.data.chunks_exact(3).filter(|c| rs::is_reddish([c[0], c[1], c[2]])).count()
    }
}

/// Two-disc occlusion stimulus as scene JSON.
#[pyfunction]
#[pyo3(signature = (absolute_d, relative_d, seed = 7))]
fn detection_stimulus(absolute_d: f64, relative_d: f64, seed: u64) -> PyResult<String> {
    Ok(rs::make_detection_stimulus(absolute_d, relative_d, seed).map_err(to_py_err)?.to_json())
}

/// Renders one eye's view. Gaze is azimuth/elevation from that eye's centre
/// of rotation; `scene` is scene JSON or `None` for the default scene.
#[pyfunction]
#[pyo3(signature = (scene = None, azimuth_deg = 0.0, elevation_deg = 0.0, distance = 1.0, mode = "ocular", eye = "right", width = 256, height = 256, ipd = 0.064, foveate = false, model = None, geometry = None))]
#[allow(clippy::too_many_arguments)]
fn render(
    py: Python<'_>,
    scene: Option<&str>,
    azimuth_deg: f64,
    elevation_deg: f64,
    distance: f64,
    mode: &str,
    eye: &str,
    width: usize,
    height: usize,
    ipd: f64,
    foveate: bool,
    model: Option<&PyEyeModel>,
    geometry: Option<&PyGeometry>,
) -> PyResult<PyImage> {
    let scene = match scene {
        Some(text) => Scene::from_json(text).map_err(to_py_err)?,
        None => rs::default_scene(),
    };
    let side = parse::<EyeSide>(eye)?;
    let g = GazeState::toward(side, azimuth_deg, elevation_deg, distance, ipd, parse::<RenderMode>(mode)?)
        .map_err(to_py_err)?;
    let model = model_or_default(model);
    let geom = geometry_or_default(geometry);
    let img = py
        .detach(|| {
            let img = rs::render(&scene, &g, &model, &geom, Resolution::new(width, height), side)?;
            Ok::<_, ocular_parallax::Error>(if foveate {
                rs::foveate(&img, &AcuityModel::default())
            } else {
                img
            })
        })
        .map_err(to_py_err)?;
    Ok(PyImage { inner: img.image })
}

#[pyclass(name = "PsychometricFit", frozen, get_all)]
pub struct PyFit {
    alpha: f64,
    beta: f64,
    guess_rate: f64,
    lapse: f64,
    log_likelihood: f64,
    threshold75: f64,
    reliable: bool,
}

impl From<psy::PsychometricFit> for PyFit {
    fn from(f: psy::PsychometricFit) -> Self {
        PyFit {
            alpha: f.alpha,
            beta: f.beta,
            guess_rate: f.guess_rate,
            lapse: f.lapse,
            log_likelihood: f.log_likelihood,
            threshold75: f.threshold75,
            reliable: f.reliable,
        }
    }
}

#[pymethods]
impl PyFit {
    fn __repr__(&self) -> String {
        format!(
            "PsychometricFit(threshold75={:.4}, alpha={:.4}, beta={:.4}, lapse={:.4}, reliable={})",
            self.threshold75, self.alpha, self.beta, self.lapse, self.reliable
        )
    }
}

/// Fits `[(relative_d, n_trials, n_correct), ...]`.
#[pyfunction]
fn fit_psychometric(levels: Vec<(f64, u64, u64)>) -> PyResult<PyFit> {
    let data: Vec<LevelData> = levels
        .into_iter()
        .map(|(relative_d, n_trials, n_correct)| LevelData {
            relative_d,
            n_trials,
            n_correct,
        })
        .collect();
    Ok(psy::fit_psychometric(&data).map_err(to_py_err)?.into())
}

/// Returns `(slope, intercept_d)`.
#[pyfunction]
fn discrimination_linear_fit(points: Vec<(f64, f64)>) -> PyResult<(f64, f64)> {
    let f = psy::discrimination_linear_fit(&points).map_err(to_py_err)?;
    Ok((f.slope, f.intercept_d))
}

#[pyfunction]
#[pyo3(signature = (successes, trials, p0 = 0.5, one_tailed = true))]
fn binomial_test(successes: u64, trials: u64, p0: f64, one_tailed: bool) -> PyResult<f64> {
    psy::binomial_test(successes, trials, p0, one_tailed).map_err(to_py_err)
}

/// Session plan as `[(absolute_d, offset_d, relative_d, effect_in_first_interval), ...]`.
#[pyfunction]
#[pyo3(signature = (experiment, seed = 0))]
fn plan_session(experiment: &str, seed: u64) -> PyResult<Vec<(f64, f64, f64, bool)>> {
    let plan = psy::plan_session(parse::<Experiment>(experiment)?, seed);
    Ok(plan
        .trials
        .iter()
        .map(|t| (t.absolute_d, t.offset_d, t.relative_d, t.interval_with_effect == psy::Interval::First))
        .collect())
}

type TrialRow = (usize, f64, f64, f64, bool);

/// Simulated trials as `[(trial_index, absolute_d, offset_d, relative_d, correct), ...]`.
/// `observer` is JSON with any of threshold, spread, lapse, weber, intercept, seed.
#[pyfunction]
#[pyo3(signature = (experiment, observer = "{}", seed = 0, replications = 1))]
fn simulate_experiment(
    py: Python<'_>,
    experiment: &str,
    observer: &str,
    seed: u64,
    replications: u64,
) -> PyResult<Vec<TrialRow>> {
    let obs: SimulatedObserver =
        serde_json::from_str(observer).map_err(|e| PyValueError::new_err(format!("observer: {e}")))?;
    let exp = parse::<Experiment>(experiment)?;
    let recs = py
        .detach(|| psy::simulate_experiment(exp, &obs, seed, replications))
        .map_err(to_py_err)?;
    Ok(recs
        .into_iter()
        .map(|r| (r.trial_index, r.absolute_d, r.offset_d, r.relative_d, r.correct))
        .collect())
}

#[pymodule(name = "ocular_parallax")]
fn ocular_parallax_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEyeModel>()?;
    m.add_class::<PyGeometry>()?;
    m.add_class::<PyEyeTransforms>()?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyFit>()?;
    m.add_function(wrap_pyfunction!(nc_distance, m)?)?;
    m.add_function(wrap_pyfunction!(eye_and_projection, m)?)?;
    m.add_function(wrap_pyfunction!(screen_displacement, m)?)?;
    m.add_function(wrap_pyfunction!(parallax_angle, m)?)?;
    m.add_function(wrap_pyfunction!(mar, m)?)?;
    m.add_function(wrap_pyfunction!(display_mar_crossover, m)?)?;
    m.add_function(wrap_pyfunction!(detectability_crossover, m)?)?;
    m.add_function(wrap_pyfunction!(pursuit_retinal_speed, m)?)?;
    m.add_function(wrap_pyfunction!(detection_stimulus, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(fit_psychometric, m)?)?;
    m.add_function(wrap_pyfunction!(discrimination_linear_fit, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_test, m)?)?;
    m.add_function(wrap_pyfunction!(plan_session, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_experiment, m)?)?;
    Ok(())
}

/// Registers the module with an embedded interpreter (tests and embedding).
pub fn init_embedded() {
    pyo3::append_to_inittab!(ocular_parallax_module);
}
