//! Python bindings for `polar_awgn`.
//!
//! Long-running calls release the GIL. Library errors map to `ValueError`
//! (bad arguments or files), `ArithmeticError` (numeric failures) and
//! `OSError` (I/O).

use std::fs;
use std::io::BufReader;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use polar_awgn::analysis;
use polar_awgn::awgn::{self, AwgnMac};
use polar_awgn::codec;
use polar_awgn::constellation;
use polar_awgn::construction::{self, ReliabilityTable};
use polar_awgn::gf2;
use polar_awgn::harness;
use polar_awgn::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NumericFailure(m) => PyArithmeticError::new_err(m),
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for polar_awgn::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// Shaped Gaussian-quantile constellation.
#[pyclass(name = "Constellation", module = "polar_awgn_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConstellation {
    inner: constellation::Constellation,
}

#[pymethods]
impl PyConstellation {
    #[new]
    #[pyo3(signature = (n, power, gamma = 0.0))]
    fn new(n: usize, power: f64, gamma: f64) -> PyResult<Self> {
        Ok(PyConstellation { inner: constellation::build_constellation(n, power, gamma).py()? })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn levels(&self) -> usize {
        self.inner.levels()
    }

    #[getter]
    fn power(&self) -> f64 {
        self.inner.power()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    #[getter]
    fn shaping_variance(&self) -> f64 {
        self.inner.shaping_variance()
    }

    /// Amplitude of every label, indexed by label.
    fn amplitudes(&self) -> Vec<f64> {
        self.inner.amplitudes().to_vec()
    }

    fn mean_energy(&self) -> f64 {
        self.inner.mean_energy()
    }

    fn quantize(&self, x: f64) -> PyResult<f64> {
        self.inner.quantize(x).py()
    }

    fn symbol_prior(&self) -> Vec<(f64, f64)> {
        self.inner.symbol_prior()
    }

    fn mutual_information(&self, py: Python<'_>) -> PyResult<f64> {
        py.detach(|| awgn::mutual_information(&self.inner)).py()
    }

    /// Mutual information of level `level` (1-based).
    fn level_mutual_information(&self, py: Python<'_>, level: usize) -> PyResult<f64> {
        py.detach(|| awgn::level_mutual_information(&self.inner, level)).py()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyConstellation { inner: constellation::Constellation::from_json(text).py()? })
    }

    fn __repr__(&self) -> String {
        format!("Constellation(n={}, power={}, gamma={})", self.inner.n(), self.inner.power(), self.inner.gamma())
    }
}

/// Monte-Carlo Bhattacharyya parameters, one per `(level, k)`.
#[pyclass(name = "ReliabilityTable", module = "polar_awgn_py", frozen)]
struct PyReliabilityTable {
    inner: ReliabilityTable,
}

#[pymethods]
impl PyReliabilityTable {
    /// Genie-aided estimate over `trials` blocks of the AWGN channel.
    #[staticmethod]
    #[pyo3(signature = (constellation, trials, seed = 1, workers = None))]
    fn estimate(py: Python<'_>, constellation: &PyConstellation, trials: u64, seed: u64, workers: Option<usize>) -> PyResult<Self> {
        let c = constellation.inner.clone();
        let inner = py.detach(|| construction::estimate_reliability_with(&AwgnMac::new(c.clone()), c.n(), trials, seed, workers)).py()?;
        Ok(PyReliabilityTable { inner })
    }

    #[staticmethod]
    fn read_csv(path: &str) -> PyResult<Self> {
        let f = fs::File::open(path).map_err(|e| py_err(e.into()))?;
        Ok(PyReliabilityTable { inner: ReliabilityTable::read_csv(BufReader::new(f)).py()? })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        let f = fs::File::create(path).map_err(|e| py_err(e.into()))?;
        self.inner.write_csv(f).py()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn levels(&self) -> usize {
        self.inner.levels()
    }

    /// `z_mean` of `(level, k)`, both 1-based.
    fn z(&self, level: usize, k: usize) -> PyResult<f64> {
        if level == 0 || level > self.inner.levels() || k == 0 || k > self.inner.n() {
            return Err(PyValueError::new_err(format!("(level, k) = ({}, {}) out of range", level, k)));
        }
        Ok(self.inner.get(level, k).z_mean)
    }

    /// All `z_mean` values, one list per level.
    fn z_means(&self) -> Vec<Vec<f64>> {
        self.inner.entries().chunks(self.inner.n()).map(|c| c.iter().map(|r| r.z_mean).collect()).collect()
    }
}

/// A complete multilevel code: constellation plus information sets.
#[pyclass(name = "CodeSpec", module = "polar_awgn_py", frozen)]
struct PyCodeSpec {
    inner: codec::CodeSpec,
}

#[pymethods]
impl PyCodeSpec {
    /// Selects information sets from `table`. `rule` is one of `se`, `md`,
    /// `rate` (needs `rate`) or `calibrated` (uses `target`).
    #[staticmethod]
    #[pyo3(signature = (constellation, table, rule = "calibrated", rate = None, target = 1e-3, md_gamma = None, exponent = 4.0, seed = 1))]
    #[allow(clippy::too_many_arguments)]
    fn select(
        constellation: &PyConstellation,
        table: &PyReliabilityTable,
        rule: &str,
        rate: Option<f64>,
        target: f64,
        md_gamma: Option<f64>,
        exponent: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let t = &table.inner;
        let sets = match rule {
            "se" => construction::select_info_sets_se(t, exponent),
            "md" => construction::select_info_sets_md(t, md_gamma.unwrap_or(constellation.inner.gamma())).py()?,
            "rate" => {
                let r = rate.ok_or_else(|| PyValueError::new_err("rule 'rate' needs rate="))?;
                construction::select_info_sets_rate(t, r).py()?
            }
            "calibrated" => construction::select_info_sets_calibrated(t, target).py()?,
            other => return Err(PyValueError::new_err(format!("unknown rule {:?}", other))),
        };
        let mut spec = codec::CodeSpec::new(constellation.inner.clone(), sets, seed).py()?;
        spec.se_exponent = exponent;
        spec.union_bound = Some(construction::union_bound(t, &spec.info_sets).py()?.value);
        Ok(PyCodeSpec { inner: spec })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyCodeSpec { inner: codec::CodeSpec::from_json(text).py()? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.rate()
    }

    #[getter]
    fn union_bound(&self) -> Option<f64> {
        self.inner.union_bound
    }

    /// Information positions per level, 1-based.
    fn info_sets(&self) -> Vec<Vec<usize>> {
        self.inner.info_sets.sets.iter().map(|s| s.iter().map(|k| k + 1).collect()).collect()
    }

    /// One encode/transmit/decode round; returns the record as a dict.
    #[pyo3(signature = (trial, seed = None))]
    fn trial<'py>(&self, py: Python<'py>, trial: u64, seed: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
        let seed = seed.unwrap_or(self.inner.master_seed);
        let rec = py.detach(|| codec::end_to_end_trial(&self.inner, trial, seed)).py()?;
        let d = PyDict::new(py);
        d.set_item("trial", rec.trial)?;
        d.set_item("message_bits", bit_lists(rec.message_bits))?;
        d.set_item("decoded_message_bits", bit_lists(rec.decoded_message_bits))?;
        d.set_item("sent_symbols", rec.sent_symbols)?;
        d.set_item("received", rec.received)?;
        d.set_item("clamp_positions", rec.clamp_positions)?;
        d.set_item("level_errors", rec.level_errors)?;
        d.set_item("block_error", rec.block_error)?;
        Ok(d)
    }

    /// Runs `trials` blocks and returns the SimReport fields as a dict.
    #[pyo3(signature = (trials, seed = None, workers = None))]
    fn simulate<'py>(&self, py: Python<'py>, trials: u64, seed: Option<u64>, workers: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
        let seed = seed.unwrap_or(self.inner.master_seed);
        let r = py.detach(|| harness::run_simulation(&self.inner, trials, seed, workers)).py()?;
        let d = PyDict::new(py);
        d.set_item("spec_digest", &r.spec_digest)?;
        d.set_item("n", r.n)?;
        d.set_item("rate", r.rate)?;
        d.set_item("trials", r.trials)?;
        d.set_item("errors", r.errors)?;
        d.set_item("err_rate", r.err_rate())?;
        d.set_item("err_stderr", r.err_stderr())?;
        d.set_item("clamp_freq", r.clamp_freq())?;
        d.set_item("peak_mean_energy", r.peak_mean_energy)?;
        d.set_item("union_bound", r.union_bound)?;
        d.set_item("gap", r.gap)?;
        Ok(d)
    }
}

/// Bit words as lists of ints; a bare `Vec<u8>` would become `bytes`.
fn bit_list(bits: Vec<u8>) -> Vec<u32> {
    bits.into_iter().map(u32::from).collect()
}

fn bit_lists(words: Vec<Vec<u8>>) -> Vec<Vec<u32>> {
    words.into_iter().map(bit_list).collect()
}

/// `u G_n` over GF(2); `len(bits)` must be a power of two.
#[pyfunction]
fn polar_transform(bits: Vec<u8>) -> PyResult<Vec<u32>> {
    let w = gf2::BitWord::new(bits).py()?;
    Ok(bit_list(gf2::polar_transform(&w).py()?.into_bits()))
}

#[pyfunction]
fn channel_capacity(power: f64) -> PyResult<f64> {
    awgn::channel_capacity(power).py()
}

#[pyfunction]
fn h2_inv(y: f64) -> PyResult<f64> {
    construction::h2_inv(y).py()
}

#[pyfunction]
fn md_threshold(n: usize, gamma: f64) -> PyResult<f64> {
    construction::md_threshold(n, gamma).py()
}

/// `(lhs, rhs, holds)` of the quantization mean-square bound.
#[pyfunction]
fn quantization_bound_check(n: usize, power: f64, gamma: f64) -> PyResult<(f64, f64, bool)> {
    let b = analysis::quantization_bound_check(n, power, gamma).py()?;
    Ok((b.lhs, b.rhs, b.holds))
}

/// `(mu_hat, slope, r2)` of the log-log fit of `gaps` against `ns`.
#[pyfunction]
fn scaling_fit(ns: Vec<usize>, gaps: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    if ns.len() != gaps.len() {
        return Err(PyValueError::new_err("ns and gaps differ in length"));
    }
    let pts: Vec<(usize, f64)> = ns.into_iter().zip(gaps).collect();
    let f = analysis::scaling_fit(&pts).py()?;
    Ok((f.mu_hat, f.slope, f.r2))
}

#[pymodule]
fn polar_awgn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConstellation>()?;
    m.add_class::<PyReliabilityTable>()?;
    m.add_class::<PyCodeSpec>()?;
    m.add_function(wrap_pyfunction!(polar_transform, m)?)?;
    m.add_function(wrap_pyfunction!(channel_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(h2_inv, m)?)?;
    m.add_function(wrap_pyfunction!(md_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(quantization_bound_check, m)?)?;
    m.add_function(wrap_pyfunction!(scaling_fit, m)?)?;
    m.add("BETA", polar_awgn::BETA)?;
    Ok(())
}
