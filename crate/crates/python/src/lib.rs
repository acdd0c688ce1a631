use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use librotor::consts::hz_to_rad;
use librotor::fit::PairWindows;
use librotor::geometry::DampingMeasurement;
use librotor::io::IoError;
use librotor::physics::{self, TemperatureLaw};
use librotor::scenarios;
use librotor::synth::{self, ScanBase};
use librotor::thermometry::{self, CFactor};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: IoError) -> PyErr {
    match e {
        IoError::File { .. } => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn parse_channel(name: &str) -> PyResult<synth::Channel> {
    synth::Channel::ALL
        .into_iter()
        .find(|c| c.as_str() == name)
        .ok_or_else(|| value_err(format!("unknown channel `{name}`")))
}

/// A power spectral density trace with its acquisition metadata.
#[pyclass(name = "Trace", module = "pylibrotor", frozen)]
struct PyTrace {
    inner: synth::PsdTrace,
}

#[pymethods]
impl PyTrace {
    /// Reads `name.csv` and its `name.meta.json` sidecar.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        librotor::io::read_trace(&path).map(|inner| Self { inner }).map_err(io_err)
    }

    #[getter]
    fn freq_hz(&self) -> Vec<f64> {
        self.inner.freq_hz().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn detuning_hz(&self) -> f64 {
        self.inner.meta.detuning_hz
    }

    #[getter]
    fn het_freq_hz(&self) -> f64 {
        self.inner.meta.het_freq_hz
    }

    #[getter]
    fn channel(&self) -> &'static str {
        self.inner.meta.channel.as_str()
    }

    #[getter]
    fn averages(&self) -> u64 {
        self.inner.meta.averages
    }

    fn to_csv(&self) -> String {
        librotor::io::format_psd_csv(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trace(channel={}, detuning_hz={}, bins={})",
            self.inner.meta.channel.as_str(),
            self.inner.meta.detuning_hz,
            self.inner.len()
        )
    }
}

/// Validated run configuration.
#[pyclass(name = "RunConfig", module = "pylibrotor", frozen)]
struct PyRunConfig {
    inner: librotor::io::RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        librotor::io::RunConfig::from_json(text).map(|inner| Self { inner }).map_err(io_err)
    }

    /// `"cluster-1d"` or `"dumbbell-2d"`, scanned over `detunings_hz` on `channels`.
    #[staticmethod]
    #[pyo3(signature = (name, channels=None, detunings_hz=None))]
    fn preset(name: &str, channels: Option<Vec<String>>, detunings_hz: Option<Vec<f64>>) -> PyResult<Self> {
        let scenario = match name {
            "cluster-1d" => scenarios::cluster_1d(),
            "dumbbell-2d" => scenarios::dumbbell_2d(),
            other => return Err(value_err(format!("unknown preset `{other}`"))),
        };
        let channels = channels
            .unwrap_or_else(|| vec!["cavity_y".into()])
            .iter()
            .map(|c| parse_channel(c))
            .collect::<PyResult<_>>()?;
        let inner = librotor::io::RunConfig::from_scenario(&scenario, channels, detunings_hz.unwrap_or_default());
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    /// Synthesizes one trace per channel and detuning. Detunings without net
    /// cooling are skipped.
    #[pyo3(signature = (seed=None))]
    fn simulate(&self, seed: Option<u64>) -> PyResult<Vec<PyTrace>> {
        let mut cfg = self.inner.clone();
        if let Some(seed) = seed {
            cfg.synthesis.seed = seed;
        }
        let modes = cfg.modes().map_err(io_err)?;
        let detection = cfg.detection().map_err(io_err)?;
        let detunings = cfg.detunings_hz();
        let mut out = Vec::new();
        for &channel in &cfg.synthesis.channels {
            let base = ScanBase {
                modes: modes.to_vec(),
                optics: cfg.optics(),
                noise: cfg.noise(),
                detection: detection.clone(),
                area_scale_c: cfg.synthesis.area_scale_c,
                channel,
                noise_free: cfg.synthesis.noise_free,
            };
            out.extend(
                synth::scan_series(&base, &detunings)
                    .into_iter()
                    .filter_map(|p| p.result.ok())
                    .map(|st| PyTrace { inner: st.trace }),
            );
        }
        Ok(out)
    }
}

#[pyclass(name = "Occupation", module = "pylibrotor", frozen, get_all)]
struct PyOccupation {
    n: f64,
    n_err: f64,
    n_raw: f64,
    clamped: bool,
    ground_state_prob: f64,
    ground_state_prob_err: f64,
    stokes_area: f64,
    anti_stokes_area: f64,
    omega_hz: f64,
    fwhm_hz: f64,
    method: &'static str,
}

#[pymethods]
impl PyOccupation {
    fn __repr__(&self) -> String {
        format!("Occupation(n={} ± {}, method={})", self.n, self.n_err, self.method)
    }
}

/// Sideband-asymmetry occupation of one trace. A flat detector response is
/// assumed unless `shot` and `dark` traces are given; passing `c` selects the
/// difference-calibrated method.
#[pyfunction]
#[pyo3(signature = (trace, omega_hint_hz, c=None, c_err=0.0, shot=None, dark=None))]
fn extract_occupation(
    trace: &PyTrace,
    omega_hint_hz: f64,
    c: Option<f64>,
    c_err: f64,
    shot: Option<&PyTrace>,
    dark: Option<&PyTrace>,
) -> PyResult<PyOccupation> {
    let t = &trace.inner;
    let response = match (shot, dark) {
        (Some(s), Some(d)) => thermometry::calibrate_response(&s.inner, &d.inner).map_err(value_err)?,
        (None, None) => {
            let (lo, hi) = t.span_hz();
            librotor::noise::DetectorResponse::flat(hz_to_rad(lo), hz_to_rad(hi))
        }
        _ => return Err(value_err("shot and dark must be given together")),
    };
    let c = c.map(|value| CFactor { value, err: c_err });
    let (r, fit) =
        thermometry::extract_occupation(t, &response, omega_hint_hz, c, PairWindows::default()).map_err(value_err)?;
    Ok(PyOccupation {
        n: r.n,
        n_err: r.n_err,
        n_raw: r.n_raw,
        clamped: r.clamped,
        ground_state_prob: r.ground_state_prob,
        ground_state_prob_err: r.ground_state_prob_err,
        stokes_area: r.areas.stokes,
        anti_stokes_area: r.areas.anti_stokes,
        omega_hz: fit.omega_hz,
        fwhm_hz: fit.fwhm_hz,
        method: match r.method {
            thermometry::OccupationMethod::Ratio => "ratio",
            thermometry::OccupationMethod::DifferenceCalibrated => "difference_calibrated",
        },
    })
}

#[pyclass(name = "Geometry", module = "pylibrotor", frozen, get_all)]
struct PyGeometry {
    label: &'static str,
    ratio: f64,
    ratio_err: f64,
    confidence: f64,
    candidates: Vec<&'static str>,
    note: Option<String>,
}

#[pymethods]
impl PyGeometry {
    fn __repr__(&self) -> String {
        format!("Geometry(label={}, ratio={:.4} ± {:.4})", self.label, self.ratio, self.ratio_err)
    }
}

/// Particle geometry from the translational damping-rate ratio γ_y/γ_x.
#[pyfunction]
fn classify(gamma_x: f64, gamma_x_err: f64, gamma_y: f64, gamma_y_err: f64) -> PyResult<PyGeometry> {
    let c = librotor::geometry::classify(&DampingMeasurement::new(gamma_x, gamma_x_err, gamma_y, gamma_y_err))
        .map_err(value_err)?;
    Ok(PyGeometry {
        label: c.label.as_str(),
        ratio: c.ratio,
        ratio_err: c.ratio_err,
        confidence: c.confidence,
        candidates: c.candidates.iter().map(|l| l.as_str()).collect(),
        note: c.note,
    })
}

/// Mode temperature (K) for occupation `n` at `omega_hz`.
#[pyfunction]
#[pyo3(signature = (n, omega_hz, law="bose"))]
fn temperature(n: f64, omega_hz: f64, law: &str) -> PyResult<f64> {
    let law = match law {
        "bose" => TemperatureLaw::Bose,
        "equipartition" => TemperatureLaw::Equipartition,
        other => return Err(value_err(format!("unknown temperature law `{other}`"))),
    };
    Ok(match law {
        TemperatureLaw::Bose => physics::bose_temperature(n, hz_to_rad(omega_hz)),
        TemperatureLaw::Equipartition => physics::equipartition_temperature(n, hz_to_rad(omega_hz)),
    })
}

/// Cooling bound κ²/4Ω² for frequencies in Hz.
#[pyfunction]
fn n_min(kappa_hz: f64, omega_hz: f64) -> f64 {
    physics::n_min_bound(kappa_hz, omega_hz)
}

#[pyfunction]
fn revival_time(inertia: f64) -> f64 {
    physics::revival_time(inertia)
}

#[pyfunction]
fn zero_point_amplitude(inertia: f64, omega_hz: f64) -> f64 {
    physics::zero_point_amplitude(inertia, hz_to_rad(omega_hz))
}

#[pyfunction]
fn mean_angular_momentum(temperature: f64, inertia: f64) -> f64 {
    physics::mean_angular_momentum(temperature, inertia)
}

#[pymodule]
fn pylibrotor(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyTrace>()?;
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyOccupation>()?;
    m.add_class::<PyGeometry>()?;
    m.add_function(wrap_pyfunction!(extract_occupation, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(temperature, m)?)?;
    m.add_function(wrap_pyfunction!(n_min, m)?)?;
    m.add_function(wrap_pyfunction!(revival_time, m)?)?;
    m.add_function(wrap_pyfunction!(zero_point_amplitude, m)?)?;
    m.add_function(wrap_pyfunction!(mean_angular_momentum, m)?)?;
    Ok(())
}
