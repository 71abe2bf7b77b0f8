use std::path::PathBuf;

use ndarray::Array2;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fwm_core::aperture::{annulus_mask, apply_mask, gaussian_field, AnnulusSpec, GaussianSpec, MaskSampling};
use fwm_core::config::ScenarioConfig;
use fwm_core::gain::{self, DkCoupling, GainParameters};
use fwm_core::grid::{ComplexField2D, GridSpec, OpticalConfig, Plane};
use fwm_core::profile::{self, FitGuess, PositionUnit, RadialProfile, SliceOrientation};
use fwm_core::propagation::{self, Normalization, TransformOptions};
use fwm_core::{pipeline, Error};

fn py_err(e: Error) -> PyErr {
    if e.is_numerical() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(GridSpec);

#[pymethods]
impl PyGrid {
    /// Aperture-plane grid; `pitch` in micrometres.
    #[new]
    #[pyo3(signature = (nx = 1024, ny = 1024, pitch = 4.0))]
    fn new(nx: usize, ny: usize, pitch: f64) -> PyResult<Self> {
        GridSpec::new(nx, ny, pitch, Plane::Aperture)
            .map(PyGrid)
            .map_err(py_err)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    #[getter]
    fn pitch(&self) -> (f64, f64) {
        (self.0.pitch_x(), self.0.pitch_y())
    }

    #[getter]
    fn center_index(&self) -> (usize, usize) {
        self.0.center_index()
    }

    fn coordinate(&self, i: usize, j: usize) -> (f64, f64) {
        self.0.coordinate(i, j)
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid({}x{}, pitch={} um, plane={})",
            self.0.nx(),
            self.0.ny(),
            self.0.pitch_x(),
            self.0.plane().name()
        )
    }
}

#[pyclass(name = "Optics", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyOptics(OpticalConfig);

#[pymethods]
impl PyOptics {
    /// Wavelength, distance to the lens plane and focal length, all in um.
    #[new]
    #[pyo3(signature = (
        wavelength = OpticalConfig::DEFAULT_WAVELENGTH_UM,
        z = OpticalConfig::DEFAULT_Z_UM,
        focal_length = OpticalConfig::DEFAULT_FOCAL_UM,
    ))]
    fn new(wavelength: f64, z: f64, focal_length: f64) -> PyResult<Self> {
        OpticalConfig::new(wavelength, z, focal_length)
            .map(PyOptics)
            .map_err(py_err)
    }

    #[getter]
    fn wavelength(&self) -> f64 {
        self.0.wavelength()
    }

    #[getter]
    fn z(&self) -> f64 {
        self.0.z()
    }

    #[getter]
    fn focal_length(&self) -> f64 {
        self.0.focal_length()
    }
}

#[pyclass(name = "Field", frozen)]
struct PyField(ComplexField2D);

#[pymethods]
impl PyField {
    /// Unit-peak Gaussian amplitude of 1/e radius `waist` (um).
    #[staticmethod]
    #[pyo3(signature = (grid, waist, center = (0.0, 0.0)))]
    fn gaussian(grid: &PyGrid, waist: f64, center: (f64, f64)) -> PyResult<Self> {
        let spec = GaussianSpec::with_center(waist, center).map_err(py_err)?;
        Ok(PyField(gaussian_field(&grid.0, &spec)))
    }

    /// Field from row-major lists of real and (optionally) imaginary parts.
    #[staticmethod]
    #[pyo3(signature = (grid, re, im = None))]
    fn from_lists(grid: &PyGrid, re: Vec<Vec<f64>>, im: Option<Vec<Vec<f64>>>) -> PyResult<Self> {
        let (nx, ny) = grid.0.shape();
        let ok = |m: &Vec<Vec<f64>>| m.len() == nx && m.iter().all(|r| r.len() == ny);
        if !ok(&re) || !im.as_ref().is_none_or(ok) {
            return Err(PyValueError::new_err(format!("expected {nx} rows of {ny} values")));
        }
        let s = Array2::from_shape_fn((nx, ny), |(i, j)| {
            Complex64::new(re[i][j], im.as_ref().map_or(0.0, |m| m[i][j]))
        });
        ComplexField2D::new(grid.0, s).map(PyField).map_err(py_err)
    }

    /// Multiplies by an annulus `a0 <= r <= a1` (um).
    #[pyo3(signature = (a0, a1, hard = false))]
    fn through_annulus(&self, a0: f64, a1: f64, hard: bool) -> PyResult<Self> {
        let spec = AnnulusSpec::new(a0, a1).map_err(py_err)?;
        let sampling = if hard {
            MaskSampling::Hard
        } else {
            MaskSampling::default()
        };
        let mask = annulus_mask(self.0.grid(), &spec, sampling);
        apply_mask(&self.0, &mask).map(PyField).map_err(py_err)
    }

    /// Far field at the lens plane. `unitary` preserves total power;
    /// otherwise the physical Fresnel-Fraunhofer scaling is used.
    #[pyo3(signature = (optics = None, unitary = false))]
    fn farfield(&self, optics: Option<&PyOptics>, unitary: bool) -> PyResult<Self> {
        let cfg = optics.map_or_else(OpticalConfig::default, |o| o.0);
        let opts = TransformOptions {
            normalization: if unitary {
                Normalization::Unitary
            } else {
                Normalization::Physical
            },
            include_phase: false,
        };
        propagation::fraunhofer_with(&self.0, &cfg, opts)
            .map(|r| PyField(r.field))
            .map_err(py_err)
    }

    /// Field in the back focal plane of the lens.
    #[pyo3(signature = (optics = None))]
    fn lens(&self, optics: Option<&PyOptics>) -> PyResult<Self> {
        let cfg = optics.map_or_else(OpticalConfig::default, |o| o.0);
        propagation::lens_ft(&self.0, &cfg, TransformOptions::default())
            .map(PyField)
            .map_err(py_err)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    fn total_power(&self) -> f64 {
        self.0.total_power()
    }

    /// |U|^2 as a list of rows (first index is x).
    fn intensity(&self) -> Vec<Vec<f64>> {
        rows(&self.0.intensity())
    }

    /// Averaged slice through the centre, positions in um.
    #[pyo3(signature = (vertical = false, width = profile::DEFAULT_SLICE_WIDTH))]
    fn slice(&self, vertical: bool, width: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let orientation = if vertical {
            SliceOrientation::Vertical
        } else {
            SliceOrientation::Horizontal
        };
        let g = self.0.grid();
        let p = profile::extract_slice(&self.0.intensity(), orientation, g.center_index(), width)
            .and_then(|p| p.with_pitch(if vertical { g.pitch_y() } else { g.pitch_x() }))
            .map_err(py_err)?;
        Ok((p.positions().to_vec(), p.intensities().to_vec()))
    }
}

/// Closed-form far field of a centred Gaussian of waist `waist` at radius `rho`.
#[pyfunction]
#[pyo3(signature = (rho, waist, optics = None))]
fn gaussian_farfield(rho: f64, waist: f64, optics: Option<&PyOptics>) -> (f64, f64) {
    let cfg = optics.map_or_else(OpticalConfig::default, |o| o.0);
    let u = propagation::gaussian_farfield(rho, waist, &cfg);
    (u.re, u.im)
}

#[pyfunction]
#[pyo3(signature = (v, eps, i0 = 1.0))]
fn annular_airy_intensity(v: f64, eps: f64, i0: f64) -> PyResult<f64> {
    profile::annular_airy_intensity(v, eps, i0).map_err(py_err)
}

fn profile_from(x: Vec<f64>, y: Vec<f64>) -> PyResult<RadialProfile> {
    RadialProfile::new(x, y, PositionUnit::Micrometers).map_err(py_err)
}

/// Least-squares fit of the annular Airy law; returns a dict of parameters.
#[pyfunction]
#[pyo3(signature = (positions, intensities, eps0 = 0.5, offset = false))]
fn fit_airy<'py>(
    py: Python<'py>,
    positions: Vec<f64>,
    intensities: Vec<f64>,
    eps0: f64,
    offset: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let p = profile_from(positions, intensities)?;
    let guess = FitGuess {
        eps_ratio: eps0,
        fit_offset: offset,
        ..FitGuess::default()
    };
    let f = profile::fit_airy(&p, &guess).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("eps_ratio", f.eps_ratio)?;
    d.set_item("i0", f.i0)?;
    d.set_item("scale", f.scale)?;
    d.set_item("center", f.center)?;
    d.set_item("offset", f.offset)?;
    d.set_item("residual", f.residual)?;
    d.set_item("iterations", f.iterations)?;
    Ok(d)
}

/// Peak-normalised comparison of two profiles: `(nrmse, peak_offset)`.
#[pyfunction]
fn compare_profiles(xa: Vec<f64>, ya: Vec<f64>, xb: Vec<f64>, yb: Vec<f64>) -> PyResult<(f64, f64)> {
    let c = profile::compare_profiles(&profile_from(xa, ya)?, &profile_from(xb, yb)?).map_err(py_err)?;
    Ok((c.nrmse, c.peak_offset))
}

#[pyclass(name = "Gain", frozen)]
struct PyGain(GainParameters);

#[pymethods]
impl PyGain {
    /// Phase-insensitive amplifier with the given peak gain over `length` um.
    #[new]
    #[pyo3(signature = (gain = gain::TARGET_GAIN, length = gain::CELL_LENGTH_UM, literal = false))]
    fn new(gain: f64, length: f64, literal: bool) -> PyResult<Self> {
        let mut p = GainParameters::ideal(gain, length).map_err(py_err)?;
        if literal {
            p.coupling = DkCoupling::Literal;
        }
        Ok(PyGain(p))
    }

    #[getter]
    fn eps_l(&self) -> f64 {
        self.0.eps_g.re * self.0.length
    }

    fn probe(&self, dk: f64) -> f64 {
        gain::gain_probe(dk, &self.0)
    }

    fn conjugate(&self, dk: f64) -> f64 {
        gain::gain_conjugate(dk, &self.0)
    }
}

#[pyfunction]
fn eps_l_for_gain(gain: f64) -> f64 {
    gain::eps_l_for_gain(gain)
}

/// Config text of a built-in scenario.
#[pyfunction]
fn preset_config(name: &str) -> PyResult<String> {
    Ok(ScenarioConfig::preset(name).map_err(py_err)?.to_toml_string())
}

/// Runs a scenario (`preset:NAME` or a config path) into `out`; returns the
/// manifest notes and file checksums.
#[pyfunction]
fn simulate<'py>(py: Python<'py>, config: &str, out: PathBuf) -> PyResult<Bound<'py, PyDict>> {
    let cfg = match config.strip_prefix("preset:") {
        Some(name) => ScenarioConfig::preset(name),
        None => ScenarioConfig::load(std::path::Path::new(config)),
    }
    .map_err(py_err)?;
    let (_, manifest) = py.detach(|| pipeline::simulate(&cfg, &out)).map_err(py_err)?;
    let d = PyDict::new(py);
    for (k, v) in &manifest.notes {
        d.set_item(k, v)?;
    }
    let files = PyDict::new(py);
    for (name, sha) in manifest.checksums() {
        files.set_item(name, sha)?;
    }
    d.set_item("files", files)?;
    Ok(d)
}

#[pymodule]
fn fwm_modes(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyOptics>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyGain>()?;
    m.add_function(wrap_pyfunction!(gaussian_farfield, m)?)?;
    m.add_function(wrap_pyfunction!(annular_airy_intensity, m)?)?;
    m.add_function(wrap_pyfunction!(fit_airy, m)?)?;
    m.add_function(wrap_pyfunction!(compare_profiles, m)?)?;
    m.add_function(wrap_pyfunction!(eps_l_for_gain, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
