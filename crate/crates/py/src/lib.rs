//! Python bindings: fields, sessions, transcripts, attacks and exact analyses.

use num_rational::BigRational;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use relcommit_core::adversary::{self, ChshTables};
use relcommit_core::analysis::{self, VerifierStrategy};
use relcommit_core::engine::{self, Transcript};
use relcommit_core::scheme::{self, ExtrRule};
use relcommit_core::{Commitment, FieldSpec, OpenOutcome, Role, SchemeParams};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, r: &BigRational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((format!("{}/{}", r.numer(), r.denom()),))
}

fn rational(value: &Bound<'_, PyAny>) -> PyResult<BigRational> {
    value.str()?.to_str()?.parse::<BigRational>().map_err(err)
}

fn outcome(o: OpenOutcome) -> Option<u32> {
    o.value()
}

/// GF(2^n) with a fixed reduction polynomial.
#[pyclass(name = "Field", module = "relcommit", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct PyField(FieldSpec);

#[pymethods]
impl PyField {
    #[new]
    #[pyo3(signature = (n, poly=None))]
    fn new(n: u32, poly: Option<u32>) -> PyResult<Self> {
        match poly {
            Some(p) => FieldSpec::with_poly(n, p),
            None => FieldSpec::new(n),
        }
        .map(PyField)
        .map_err(err)
    }

    #[getter]
    fn n(&self) -> u32 {
        self.0.bits()
    }

    #[getter]
    fn poly(&self) -> u32 {
        self.0.poly()
    }

    #[getter]
    fn order(&self) -> u64 {
        self.0.order()
    }

    fn element(&self, value: u64) -> PyResult<u32> {
        self.0.element(value).map(|e| e.value()).map_err(err)
    }

    fn add(&self, a: u64, b: u64) -> PyResult<u32> {
        Ok(self.element(a)? ^ self.element(b)?)
    }

    fn mul(&self, a: u64, b: u64) -> PyResult<u32> {
        Ok(self.0.mul_raw(self.element(a)?, self.element(b)?))
    }

    fn inv(&self, a: u64) -> PyResult<u32> {
        self.0
            .inv_raw(self.element(a)?)
            .ok_or_else(|| PyValueError::new_err("zero has no inverse"))
    }

    fn pow(&self, a: u64, e: u64) -> PyResult<u32> {
        Ok(self.0.pow_raw(self.element(a)?, e))
    }

    fn __repr__(&self) -> String {
        format!("Field({})", self.0)
    }
}

/// Parameters of a multi-round session.
#[pyclass(name = "Params", module = "relcommit", frozen, eq, skip_from_py_object)]
#[derive(Clone, Copy, PartialEq, Eq)]
struct PyParams(SchemeParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (field, m, domain_bits=None, first_committer="P"))]
    fn new(field: &PyField, m: u32, domain_bits: Option<u32>, first_committer: &str) -> PyResult<Self> {
        let role: Role = first_committer.parse().map_err(err)?;
        SchemeParams::new(field.0, m, domain_bits.unwrap_or(field.0.bits()), role)
            .map(PyParams)
            .map_err(err)
    }

    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        text.parse().map(PyParams).map_err(err)
    }

    fn to_config(&self) -> String {
        self.0.to_config()
    }

    #[getter]
    fn field(&self) -> PyField {
        PyField(self.0.field)
    }

    #[getter]
    fn m(&self) -> u32 {
        self.0.m
    }

    #[getter]
    fn domain_bits(&self) -> u32 {
        self.0.domain_bits
    }

    fn __repr__(&self) -> String {
        format!("Params({})", self.0.to_config())
    }
}

#[pyclass(name = "Transcript", module = "relcommit", frozen)]
struct PyTranscript(Transcript);

#[pymethods]
impl PyTranscript {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Transcript::parse(text).map(PyTranscript).map_err(err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn params(&self) -> PyParams {
        PyParams(self.0.params)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    /// Opened value, or None for ⊥.
    #[getter]
    fn outcome(&self) -> Option<u32> {
        outcome(self.0.outcome)
    }

    #[getter]
    fn challenges(&self) -> Vec<u32> {
        self.0.challenges()
    }

    #[getter]
    fn responses(&self) -> Vec<u32> {
        self.0.responses()
    }

    #[getter]
    fn opening(&self) -> Option<u32> {
        self.0.opening()
    }

    /// Re-opens the recorded messages.
    fn verify(&self) -> PyResult<Option<u32>> {
        self.0.verify().map(outcome).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Transcript({}, seed={})", self.0.params.to_config(), self.0.seed)
    }
}

#[pyclass(name = "ChshTables", module = "relcommit", frozen)]
struct PyChshTables(ChshTables);

#[pymethods]
impl PyChshTables {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        text.parse().map(PyChshTables).map_err(err)
    }

    #[getter]
    fn q<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.0.q)
    }

    #[getter]
    fn optimal(&self) -> bool {
        self.0.optimal
    }

    #[getter]
    fn x_table(&self) -> Vec<u32> {
        self.0.x_table.clone()
    }

    #[getter]
    fn y_table(&self) -> Vec<u32> {
        self.0.y_table.clone()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

#[pyfunction]
fn run_honest_session(params: &PyParams, s: u64, seed: u64) -> PyResult<PyTranscript> {
    let e = params.0.field.element(s).map_err(err)?;
    engine::run_honest_session(&params.0, e, seed)
        .map(PyTranscript)
        .map_err(err)
}

/// String opening of one commitment `(a, x)` with `y`.
#[pyfunction]
fn extr(field: &PyField, y: u64, a: u64, x: u64) -> PyResult<Option<u32>> {
    let f = field.0;
    let c = Commitment::new(f.element(a).map_err(err)?, f.element(x).map_err(err)?).map_err(err)?;
    scheme::extr(f.element(y).map_err(err)?, &c).map(outcome).map_err(err)
}

#[pyfunction]
fn multiround_open(field: &PyField, challenges: Vec<u64>, responses: Vec<u64>, y_last: u64) -> PyResult<Option<u32>> {
    let f = field.0;
    let wrap = |v: &[u64]| -> PyResult<Vec<_>> { v.iter().map(|&e| f.element(e).map_err(err)).collect() };
    scheme::multiround_open(&wrap(&challenges)?, &wrap(&responses)?, f.element(y_last).map_err(err)?)
        .map(outcome)
        .map_err(err)
}

#[pyfunction]
fn chsh_search(field: &PyField) -> PyResult<PyChshTables> {
    adversary::brute_force_chsh(&field.0).map(PyChshTables).map_err(err)
}

/// `1 - (1 - q)^(⌊m/2⌋ + 1)` as a Fraction.
#[pyfunction]
fn tightness_success<'py>(py: Python<'py>, q: &Bound<'py, PyAny>, m: u32) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &adversary::tightness_success(&rational(q)?, m))
}

/// Runs the tightness attack for `trials` seeded sessions; returns
/// `(hits, counted)` over sessions with all challenges nonzero.
#[pyfunction]
fn tightness_attack(
    params: &PyParams,
    tables: &PyChshTables,
    target: u64,
    trials: u64,
    seed: u64,
) -> PyResult<(u64, u64)> {
    let p = params.0;
    let t = p.field.element(target).map_err(err)?;
    let (commit, open) = adversary::tightness_strategy(t, &tables.0);
    let est = adversary::conditional_success(&p, &commit, &open, t.value(), trials, seed).map_err(err)?;
    Ok((est.hits, est.trials))
}

#[pyfunction]
fn max_p0_plus_p1<'py>(py: Python<'py>, field: &PyField) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &analysis::max_p0_plus_p1(&field.0).map_err(err)?)
}

#[pyfunction]
fn sim_open_epsilon<'py>(py: Python<'py>, field: &PyField) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &analysis::sim_open_epsilon(&field.0).map_err(err)?)
}

#[pyfunction]
fn max_fairly_binding_error<'py>(py: Python<'py>, field: &PyField, alpha: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &analysis::max_fairly_binding_error(&field.0, &rational(alpha)?).map_err(err)?)
}

/// Verifier-view distance between honest commitments to `s0` and `s1`
/// under uniform challenges.
#[pyfunction]
fn hiding_distance<'py>(py: Python<'py>, params: &PyParams, s0: u32, s1: u32, horizon: u32) -> PyResult<Bound<'py, PyAny>> {
    let d = analysis::hiding_distance(&params.0, &VerifierStrategy::Honest, s0, s1, horizon).map_err(err)?;
    fraction(py, &d)
}

#[pyfunction]
fn k_of_chsh(field: &PyField) -> PyResult<u64> {
    scheme::k_of_extr(ExtrRule::Chsh, &field.0).map_err(err)
}

#[pymodule]
fn relcommit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyTranscript>()?;
    m.add_class::<PyChshTables>()?;
    m.add_function(wrap_pyfunction!(run_honest_session, m)?)?;
    m.add_function(wrap_pyfunction!(extr, m)?)?;
    m.add_function(wrap_pyfunction!(multiround_open, m)?)?;
    m.add_function(wrap_pyfunction!(chsh_search, m)?)?;
    m.add_function(wrap_pyfunction!(tightness_success, m)?)?;
    m.add_function(wrap_pyfunction!(tightness_attack, m)?)?;
    m.add_function(wrap_pyfunction!(max_p0_plus_p1, m)?)?;
    m.add_function(wrap_pyfunction!(sim_open_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(max_fairly_binding_error, m)?)?;
    m.add_function(wrap_pyfunction!(hiding_distance, m)?)?;
    m.add_function(wrap_pyfunction!(k_of_chsh, m)?)?;
    Ok(())
}
