//! Python bindings: signals, decomposition, labeling, MMD tests and the
//! Encoder classifier. Sample sequences cross the boundary as lists of floats.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use trustaug::encoder::{self, EncoderConfig, ScalePreset};
use trustaug::error::Error;
use trustaug::mmd::{self, Bandwidth, KernelConfig, MmdReport};
use trustaug::preprocess::{self, CoaWeights};
use trustaug::prony::{self, labeling_vmd_config, LabelConfig};
use trustaug::synth::{self, CorpusConfig};
use trustaug::vmd::{self, VmdConfig};
use trustaug::{AngleMatrix, Label, LabeledDataset, LabeledSample};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Argument(_) | Error::Config(_) | Error::Format(_) | Error::Data(_) | Error::Label(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn label_of(s: &str) -> PyResult<Label> {
    s.parse().map_err(py_err)
}

/// A uniformly sampled real sequence.
#[pyclass(name = "Signal", module = "trustaug_py", frozen, from_py_object)]
#[derive(Clone)]
struct PySignal(trustaug::Signal);

#[pymethods]
impl PySignal {
    #[new]
    #[pyo3(signature = (samples, fs = 60.0))]
    fn new(samples: Vec<f64>, fs: f64) -> PyResult<Self> {
        trustaug::Signal::new(samples, fs).map(Self).map_err(py_err)
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.0.samples().to_vec()
    }

    #[getter]
    fn fs(&self) -> f64 {
        self.0.fs()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Signal(len={}, fs={})", self.0.len(), self.0.fs())
    }
}

fn signals(xs: &[PySignal]) -> Vec<trustaug::Signal> {
    xs.iter().map(|s| s.0.clone()).collect()
}

fn vmd_config(k_modes: usize, alpha: f64, tau: f64) -> VmdConfig {
    VmdConfig { k_modes, bandwidth_penalty: alpha, dual_ascent_step: tau, ..VmdConfig::default() }
}

/// Splits a signal into `k_modes` band-limited modes. Returns the modes and
/// their center frequencies in Hz.
#[pyfunction]
#[pyo3(signature = (signal, k_modes = 3, alpha = 2000.0, tau = 0.0))]
fn decompose(signal: &PySignal, k_modes: usize, alpha: f64, tau: f64) -> PyResult<(Vec<PySignal>, Vec<f64>)> {
    let m = vmd::decompose(&signal.0, &vmd_config(k_modes, alpha, tau)).map_err(py_err)?;
    Ok((m.modes.into_iter().map(PySignal).collect(), m.center_freqs))
}

/// The signal rebuilt from its modes without the lowest-frequency one.
#[pyfunction]
#[pyo3(signature = (signal, k_modes = 3, alpha = 2000.0, tau = 0.0))]
fn augment(signal: &PySignal, k_modes: usize, alpha: f64, tau: f64) -> PyResult<PySignal> {
    vmd::augment(&signal.0, &vmd_config(k_modes, alpha, tau)).map(PySignal).map_err(py_err)
}

#[pyfunction]
fn detrend(signal: &PySignal) -> PySignal {
    PySignal(preprocess::detrend_linear(&signal.0))
}

#[pyfunction]
fn unwrap(signal: &PySignal) -> PySignal {
    PySignal(preprocess::unwrap(&signal.0))
}

/// Rotor angles (one row per bus, radians) to detrended deviation signals.
/// Weights default to uniform.
#[pyfunction]
#[pyo3(signature = (angles, fs = 60.0, weights = None))]
fn preprocess_angles(angles: Vec<Vec<f64>>, fs: f64, weights: Option<Vec<f64>>) -> PyResult<Vec<PySignal>> {
    let n = angles.len();
    let a = AngleMatrix::new(angles, fs).map_err(py_err)?;
    let w = match weights {
        Some(w) => CoaWeights::normalized(w),
        None => CoaWeights::uniform(n),
    }
    .map_err(py_err)?;
    let rows = preprocess::preprocess_pipeline(&a, &w).map_err(py_err)?;
    Ok(rows.into_iter().map(PySignal).collect())
}

/// Damped sinusoids fitted by Prony's method, as
/// `(frequency, damping_sigma, amplitude, phase)` tuples.
#[pyfunction]
fn prony_fit(signal: &PySignal, order: usize) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let modes = prony::prony_fit(&signal.0, order).map_err(py_err)?;
    Ok(modes.iter().map(|m| (m.frequency, m.damping_sigma, m.amplitude, m.phase)).collect())
}

/// Labels one ringdown. Returns a dict with the label and the fitted
/// frequency, damping and damping ratio of the selected mode.
#[pyfunction]
#[pyo3(signature = (signal, zeta_threshold = 0.05))]
fn label<'py>(py: Python<'py>, signal: &PySignal, zeta_threshold: f64) -> PyResult<Bound<'py, PyDict>> {
    let cfg = LabelConfig { damping_ratio_threshold: zeta_threshold, ..LabelConfig::default() };
    let r = prony::label_report(&signal.0, &labeling_vmd_config(), &cfg).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("label", r.label.as_str())?;
    d.set_item("frequency", r.frequency)?;
    d.set_item("damping_sigma", r.damping_sigma)?;
    d.set_item("damping_ratio", r.damping_ratio)?;
    Ok(d)
}

fn kernel_config(sigma: Option<f64>) -> KernelConfig {
    match sigma {
        Some(s) => KernelConfig { bandwidth_sigma: Bandwidth::Fixed(s), ..KernelConfig::default() },
        None => KernelConfig::default(),
    }
}

fn report_dict<'py>(py: Python<'py>, r: &MmdReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mmd_biased", r.mmd_biased)?;
    d.set_item("mmd_unbiased_sq", r.mmd_unbiased_sq)?;
    d.set_item("rademacher_threshold", r.rademacher_threshold)?;
    d.set_item("asymptotic_threshold", r.asymptotic_threshold)?;
    d.set_item("alpha", r.alpha)?;
    d.set_item("m", r.m)?;
    d.set_item("sigma", r.sigma)?;
    d.set_item("verdict_rademacher", r.verdict_rademacher.to_string())?;
    d.set_item("verdict_asymptotic", r.verdict_asymptotic.to_string())?;
    Ok(d)
}

/// Kernel two-sample test between two equally sized sets of vectors. The
/// bandwidth defaults to the median heuristic.
#[pyfunction]
#[pyo3(signature = (x, y, alpha = 0.05, sigma = None))]
fn mmd_test<'py>(py: Python<'py>, x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, alpha: f64, sigma: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = mmd::two_sample_test(&x, &y, &kernel_config(sigma), alpha).map_err(py_err)?;
    report_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (x, y, sigma = None))]
fn mmd_biased(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, sigma: Option<f64>) -> PyResult<f64> {
    mmd::mmd_biased(&x, &y, &kernel_config(sigma)).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (x, y, sigma = None))]
fn mmd_unbiased_sq(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, sigma: Option<f64>) -> PyResult<f64> {
    mmd::mmd_unbiased_sq(&x, &y, &kernel_config(sigma)).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (m, alpha, kernel_bound = 1.0))]
fn rademacher_bound(m: usize, alpha: f64, kernel_bound: f64) -> PyResult<f64> {
    mmd::rademacher_bound(m, kernel_bound, alpha).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (m, alpha, kernel_bound = 1.0))]
fn asymptotic_bound(m: usize, alpha: f64, kernel_bound: f64) -> PyResult<f64> {
    mmd::asymptotic_bound(m, kernel_bound, alpha).map_err(py_err)
}

/// Synthetic labeled ringdowns: `(signals, labels)`.
#[pyfunction]
#[pyo3(signature = (n, unstable_fraction = 0.5, seed = 0))]
fn gen_dataset(n: usize, unstable_fraction: f64, seed: u64) -> PyResult<(Vec<PySignal>, Vec<String>)> {
    let c = synth::gen_dataset(n, unstable_fraction, seed, &CorpusConfig::default(), &LabelConfig::default())
        .map_err(py_err)?;
    Ok(c.dataset
        .into_samples()
        .into_iter()
        .map(|s| (PySignal(s.signal), s.label.as_str().to_string()))
        .unzip())
}

/// The Encoder classifier.
#[pyclass(name = "EncoderModel", module = "trustaug_py")]
struct PyEncoderModel(encoder::EncoderModel);

#[pymethods]
impl PyEncoderModel {
    /// `scale` is "desk" (small, fast) or "paper".
    #[new]
    #[pyo3(signature = (scale = "desk", seed = 0))]
    fn new(scale: &str, seed: u64) -> PyResult<Self> {
        let preset = match scale {
            "desk" => ScalePreset::Desk,
            "paper" => ScalePreset::Paper,
            other => return Err(PyValueError::new_err(format!("unknown scale {other:?}"))),
        };
        let cfg = EncoderConfig { seed, ..EncoderConfig::preset(preset) };
        encoder::EncoderModel::new(cfg).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        encoder::EncoderModel::load(path).map(Self).map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.0.save(path).map_err(py_err)
    }

    /// Trains in place and returns the per-epoch losses.
    #[pyo3(signature = (signals, labels, epochs = None))]
    fn train(&mut self, signals: Vec<PySignal>, labels: Vec<String>, epochs: Option<usize>) -> PyResult<Vec<f64>> {
        if signals.len() != labels.len() {
            return Err(PyValueError::new_err("signals and labels differ in length"));
        }
        let samples = signals
            .into_iter()
            .zip(&labels)
            .map(|(s, l)| Ok(LabeledSample::new(s.0, label_of(l)?)))
            .collect::<PyResult<Vec<_>>>()?;
        let d = LabeledDataset::new(samples).map_err(py_err)?;
        let mut cfg = self.0.config.clone();
        if let Some(e) = epochs {
            cfg.epochs = e;
        }
        encoder::train(&mut self.0, &d, &cfg).map(|r| r.epoch_loss).map_err(py_err)
    }

    /// Probability of the unstable class for each signal.
    fn predict_proba(&self, signals: Vec<PySignal>) -> PyResult<Vec<f64>> {
        let probs = self.0.forward(&self::signals(&signals)).map_err(py_err)?;
        Ok(probs.iter().map(|p| p[Label::Unstable.index()]).collect())
    }

    #[pyo3(signature = (signals, delta = 0.5))]
    fn predict(&self, signals: Vec<PySignal>, delta: f64) -> PyResult<Vec<String>> {
        let labels = encoder::predict(&self.0, &self::signals(&signals), delta).map_err(py_err)?;
        Ok(labels.iter().map(|l| l.as_str().to_string()).collect())
    }

    #[getter]
    fn checksum(&self) -> String {
        self.0.checksum()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.0.param_count()
    }
}

#[pymodule]
fn trustaug_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySignal>()?;
    m.add_class::<PyEncoderModel>()?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(augment, m)?)?;
    m.add_function(wrap_pyfunction!(detrend, m)?)?;
    m.add_function(wrap_pyfunction!(unwrap, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess_angles, m)?)?;
    m.add_function(wrap_pyfunction!(prony_fit, m)?)?;
    m.add_function(wrap_pyfunction!(label, m)?)?;
    m.add_function(wrap_pyfunction!(mmd_test, m)?)?;
    m.add_function(wrap_pyfunction!(mmd_biased, m)?)?;
    m.add_function(wrap_pyfunction!(mmd_unbiased_sq, m)?)?;
    m.add_function(wrap_pyfunction!(rademacher_bound, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gen_dataset, m)?)?;
    Ok(())
}
