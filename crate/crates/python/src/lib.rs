//! Python bindings (`compsamp`). Errors surface as `ValueError`.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use complement_sampling::classical;
use complement_sampling::cli::parse_rational;
use complement_sampling::game::{self, Backend, GameConfig, PlayerKind};
use complement_sampling::prp::{self, SaesKey};
use complement_sampling::rng::rng_from_seed;
use complement_sampling::simulator::StateVector;
use complement_sampling::subsetstates::{self, SubsetSpec};
use complement_sampling::swappers::{self, CurveValues};
use complement_sampling::Error;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "StateVector", module = "compsamp", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyStateVector {
    inner: StateVector,
}

impl From<StateVector> for PyStateVector {
    fn from(inner: StateVector) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyStateVector {
    /// Normalized state from `2^n_qubits` complex amplitudes.
    #[new]
    fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> PyResult<Self> {
        StateVector::new(n_qubits, amplitudes).map(Into::into).map_err(err)
    }

    #[staticmethod]
    fn uniform(n_qubits: usize) -> PyResult<Self> {
        StateVector::uniform(n_qubits).map(Into::into).map_err(err)
    }

    #[staticmethod]
    fn basis(n_qubits: usize, index: usize) -> PyResult<Self> {
        StateVector::basis(n_qubits, index).map(Into::into).map_err(err)
    }

    #[staticmethod]
    fn random(n_qubits: usize, seed: u64) -> PyResult<Self> {
        StateVector::random(n_qubits, &mut rng_from_seed(seed))
            .map(Into::into)
            .map_err(err)
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.dim()
    }

    fn __repr__(&self) -> String {
        format!("StateVector(n_qubits={})", self.inner.n_qubits())
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().to_vec()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.inner.exact_distribution()
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }

    /// `U|ψ⟩` with `U = 2|+⟩⟨+| - I`.
    fn diffusion(&self) -> Self {
        let mut s = self.inner.clone();
        s.diffusion();
        s.into()
    }

    fn hadamard_all(&self) -> Self {
        let mut s = self.inner.clone();
        s.hadamard_all();
        s.into()
    }

    fn inner_product(&self, other: &PyStateVector) -> PyResult<Complex64> {
        self.inner.inner_product(&other.inner).map_err(err)
    }

    fn fidelity(&self, other: &PyStateVector) -> PyResult<f64> {
        complement_sampling::simulator::fidelity(&self.inner, &other.inner).map_err(err)
    }

    /// Total probability on `indices`.
    fn mass_on(&self, indices: Vec<usize>) -> PyResult<f64> {
        if let Some(bad) = indices.iter().find(|&&i| i >= self.inner.dim()) {
            return Err(PyValueError::new_err(format!("index {bad} out of range")));
        }
        Ok(self.inner.mass_on(indices))
    }

    fn measure_all(&self, seed: u64) -> usize {
        self.inner.measure_all(&mut rng_from_seed(seed))
    }
}

#[pyclass(name = "SubsetSpec", module = "compsamp", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySubsetSpec {
    inner: SubsetSpec,
}

impl From<SubsetSpec> for PySubsetSpec {
    fn from(inner: SubsetSpec) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PySubsetSpec {
    #[new]
    fn new(n: usize, elements: Vec<usize>) -> PyResult<Self> {
        SubsetSpec::new(n, elements).map(Into::into).map_err(err)
    }

    #[staticmethod]
    fn random(n: usize, k: usize, seed: u64) -> PyResult<Self> {
        SubsetSpec::random(n, k, &mut rng_from_seed(seed))
            .map(Into::into)
            .map_err(err)
    }

    #[staticmethod]
    fn first_k(n: usize, k: usize) -> PyResult<Self> {
        SubsetSpec::first_k(n, k).map(Into::into).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str::<SubsetSpec>(text)
            .map(Into::into)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("subset serializes")
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn universe(&self) -> usize {
        self.inner.universe()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    fn elements(&self) -> Vec<usize> {
        self.inner.elements().to_vec()
    }

    fn complement_elements(&self) -> Vec<usize> {
        self.inner.complement_elements()
    }

    fn complement(&self) -> Self {
        self.inner.complement().into()
    }

    fn __contains__(&self, x: usize) -> bool {
        x < self.inner.universe() && self.inner.contains(x)
    }

    fn __len__(&self) -> usize {
        self.inner.k()
    }

    fn __repr__(&self) -> String {
        format!("SubsetSpec(n={}, k={})", self.inner.n(), self.inner.k())
    }
}

#[pyclass(name = "SwapAttempt", module = "compsamp", frozen, get_all)]
pub struct PySwapAttempt {
    flag: u8,
    sample: Option<usize>,
    success_probability: f64,
    attempts: usize,
}

#[pyclass(name = "GameTranscript", module = "compsamp", frozen)]
pub struct PyGameTranscript {
    inner: game::GameTranscript,
}

#[pymethods]
impl PyGameTranscript {
    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        game::read_transcript(text.as_bytes())
            .map(|inner| Self { inner })
            .map_err(err)
    }

    fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        game::write_transcript(&self.inner, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    #[getter]
    fn wins(&self) -> usize {
        self.inner.summary.wins
    }

    #[getter]
    fn rounds(&self) -> usize {
        self.inner.summary.rounds
    }

    #[getter]
    fn all_won(&self) -> bool {
        self.inner.summary.all_won
    }

    #[getter]
    fn win_rate(&self) -> f64 {
        self.inner.summary.win_rate
    }

    #[getter]
    fn master_seed(&self) -> u64 {
        self.inner.config.master_seed
    }

    fn candidates(&self) -> Vec<String> {
        self.inner.records.iter().map(|r| r.candidate_hex.clone()).collect()
    }

    fn verdicts(&self) -> Vec<u8> {
        self.inner.records.iter().map(|r| r.verdict).collect()
    }

    /// Re-derives every round from the header configuration, or from
    /// `master_seed` when given.
    #[pyo3(signature = (master_seed=None))]
    fn verify(&self, master_seed: Option<u64>) -> PyResult<bool> {
        let mut config = self.inner.config;
        if let Some(seed) = master_seed {
            config.master_seed = seed;
        }
        game::verify_transcript(&self.inner, &config).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "GameTranscript(player={}, wins={}, rounds={})",
            self.inner.config.player, self.inner.summary.wins, self.inner.summary.rounds
        )
    }
}

#[pyfunction]
fn make_subset_state(spec: &PySubsetSpec) -> PyStateVector {
    subsetstates::make_subset_state(&spec.inner).into()
}

#[pyfunction]
fn make_complement_state(spec: &PySubsetSpec) -> PyStateVector {
    subsetstates::make_complement_state(&spec.inner).into()
}

#[pyfunction]
fn make_conjugate_states(spec: &PySubsetSpec) -> (PyStateVector, PyStateVector) {
    let (p, m) = subsetstates::make_conjugate_states(&spec.inner);
    (p.into(), m.into())
}

#[pyfunction]
fn conjugate_pair_overlap(k: u64, universe: u64, x: u64) -> PyResult<f64> {
    subsetstates::conjugate_pair_overlap(k, universe, x).map_err(err)
}

/// Returns `(U|ψ⟩, 4(K/N)(1 - K/N))`.
#[pyfunction]
fn complement_swap(state: &PyStateVector, spec: &PySubsetSpec) -> (PyStateVector, f64) {
    let (s, p) = swappers::complement_swap(&state.inner, &spec.inner);
    (s.into(), p)
}

#[pyfunction]
fn zero_error_success_probability(k: usize, universe: usize) -> f64 {
    swappers::zero_error_success_probability(k, universe)
}

fn attempt(a: swappers::SwapAttempt) -> PySwapAttempt {
    PySwapAttempt {
        flag: a.flag,
        sample: a.sample,
        success_probability: a.success_probability,
        attempts: a.attempts,
    }
}

/// Tries up to `copies` copies of `state` knowing only the cardinality `k`.
#[pyfunction]
#[pyo3(signature = (state, k, seed, copies=1))]
fn zero_error_swap(state: &PyStateVector, k: usize, seed: u64, copies: usize) -> PyResult<PySwapAttempt> {
    let pool = vec![state.inner.clone(); copies];
    swappers::repeated_zero_error_swap_with_cardinality(&pool, k, &mut rng_from_seed(seed))
        .map(attempt)
        .map_err(err)
}

#[pyfunction]
fn coupon_collector_hit_probability(state: &PyStateVector, spec: &PySubsetSpec) -> PyResult<f64> {
    swappers::coupon_collector_hit_probability(&state.inner, &spec.inner).map_err(err)
}

#[pyfunction]
fn coupon_collector_sample(state: &PyStateVector, seed: u64) -> PyResult<usize> {
    swappers::coupon_collector_sample(&state.inner, &mut rng_from_seed(seed)).map_err(err)
}

#[pyfunction]
fn dj_distinguish(state: &PyStateVector, seed: u64) -> PyResult<u8> {
    swappers::dj_distinguish(&state.inner, &mut rng_from_seed(seed)).map_err(err)
}

#[pyfunction]
fn distinguishing_bias(a: &PyStateVector, b: &PyStateVector) -> PyResult<f64> {
    swappers::distinguishing_bias(&a.inner, &b.inner).map_err(err)
}

#[pyfunction]
fn aas_swapper(state: &PyStateVector) -> PyStateVector {
    swappers::aas_swapper_from_distinguisher(&state.inner).into()
}

/// `(cs, ze, cc, cl)` success probabilities at `β` for universe size `N`.
#[pyfunction]
fn analytic_curves(beta: f64, universe: usize) -> (f64, f64, f64, f64) {
    let v = CurveValues::analytic(beta, universe);
    (v.cs, v.ze, v.cc, v.cl)
}

/// The sweep table as CSV text, one row per integral `K`.
#[pyfunction]
#[pyo3(signature = (n, trials=0, seed=0))]
fn curves_csv(n: usize, trials: usize, seed: u64) -> PyResult<String> {
    if n == 0 || n > 12 {
        return Err(PyValueError::new_err(format!("n = {n} not in 1..=12")));
    }
    let universe = 1usize << n;
    let rows = swappers::success_curves(&swappers::admissible_betas(universe), universe, trials, seed)
        .map_err(err)?;
    let mut buf = Vec::new();
    swappers::write_curves_csv(&rows, trials, seed, &mut buf).map_err(err)?;
    Ok(String::from_utf8(buf).expect("CSV is UTF-8"))
}

#[pyfunction]
fn lower_bound_queries(universe: u64, k: u64, delta: f64) -> PyResult<f64> {
    classical::lower_bound_queries(universe, k, delta).map_err(err)
}

/// Exact bound as a rational string; `delta` may be `"p/q"` or a decimal.
#[pyfunction]
fn lower_bound_queries_exact(universe: u64, k: u64, delta: &str) -> PyResult<String> {
    let d = parse_rational(delta).map_err(err)?;
    classical::lower_bound_queries_exact(universe, k, &d)
        .map(|r| r.to_string())
        .map_err(err)
}

/// `[(q, "p/q"), ...]` for the number of distinct values in `d` draws from `k`.
#[pyfunction]
fn unique_draw_distribution(k: u64, d: u64) -> PyResult<Vec<(u64, String)>> {
    let dist = classical::unique_draw_distribution(k, d).map_err(err)?;
    Ok(dist
        .probabilities
        .into_iter()
        .map(|(q, p)| (q, p.to_string()))
        .collect())
}

#[pyfunction]
fn sample_complexity_success(universe: u64, k: u64, d: u64) -> PyResult<f64> {
    classical::sample_complexity_success(universe, k, d).map_err(err)
}

#[pyfunction]
fn random_guess_success(universe: u64, k: u64, q: u64) -> PyResult<String> {
    if k == 0 || k >= universe || q > k {
        return Err(PyValueError::new_err("need 1 <= K < N and q <= K"));
    }
    Ok(classical::random_guess_success(universe, k, q).to_string())
}

#[pyfunction]
fn saes_encrypt(key: u16, block: u16) -> u16 {
    prp::saes_encrypt(SaesKey(key), block)
}

#[pyfunction]
fn saes_decrypt(key: u16, block: u16) -> u16 {
    prp::saes_decrypt(SaesKey(key), block)
}

#[pyfunction]
#[pyo3(signature = (n, rounds, samples=1, player="quantum_complement", backend="saes", seed=0))]
fn run_game(
    n: usize,
    rounds: usize,
    samples: usize,
    player: &str,
    backend: &str,
    seed: u64,
) -> PyResult<PyGameTranscript> {
    let config = GameConfig {
        n,
        rounds,
        samples_per_round: samples,
        player: player.parse::<PlayerKind>().map_err(err)?,
        backend: backend.parse::<Backend>().map_err(err)?,
        master_seed: seed,
    };
    game::run_game(&config)
        .map(|inner| PyGameTranscript { inner })
        .map_err(err)
}

#[pymodule]
fn compsamp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStateVector>()?;
    m.add_class::<PySubsetSpec>()?;
    m.add_class::<PySwapAttempt>()?;
    m.add_class::<PyGameTranscript>()?;
    m.add_function(wrap_pyfunction!(make_subset_state, m)?)?;
    m.add_function(wrap_pyfunction!(make_complement_state, m)?)?;
    m.add_function(wrap_pyfunction!(make_conjugate_states, m)?)?;
    m.add_function(wrap_pyfunction!(conjugate_pair_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(complement_swap, m)?)?;
    m.add_function(wrap_pyfunction!(zero_error_success_probability, m)?)?;
    m.add_function(wrap_pyfunction!(zero_error_swap, m)?)?;
    m.add_function(wrap_pyfunction!(coupon_collector_hit_probability, m)?)?;
    m.add_function(wrap_pyfunction!(coupon_collector_sample, m)?)?;
    m.add_function(wrap_pyfunction!(dj_distinguish, m)?)?;
    m.add_function(wrap_pyfunction!(distinguishing_bias, m)?)?;
    m.add_function(wrap_pyfunction!(aas_swapper, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_curves, m)?)?;
    m.add_function(wrap_pyfunction!(curves_csv, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_queries, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_queries_exact, m)?)?;
    m.add_function(wrap_pyfunction!(unique_draw_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(sample_complexity_success, m)?)?;
    m.add_function(wrap_pyfunction!(random_guess_success, m)?)?;
    m.add_function(wrap_pyfunction!(saes_encrypt, m)?)?;
    m.add_function(wrap_pyfunction!(saes_decrypt, m)?)?;
    m.add_function(wrap_pyfunction!(run_game, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use pyo3::types::PyDict;

    fn with_module<R>(f: impl FnOnce(&Bound<'_, PyModule>) -> R) -> R {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "compsamp").unwrap();
            compsamp(&m).unwrap();
            f(&m)
        })
    }

    #[test]
    fn functions_callable_from_python() {
        with_module(|m| {
            let enc: u16 = m.getattr("saes_encrypt").unwrap().call1((0xA73Bu16, 0x6F6Bu16)).unwrap().extract().unwrap();
            assert_eq!(enc, 0x0738);
            let lb: String = m
                .getattr("lower_bound_queries_exact")
                .unwrap()
                .call1((1u64 << 16, 1u64 << 15, "1/6"))
                .unwrap()
                .extract()
                .unwrap();
            assert_eq!(lb, "16384");
        });
    }

    #[test]
    fn errors_become_value_errors() {
        with_module(|m| {
            let py = m.py();
            let e = m.getattr("SubsetSpec").unwrap().call1((3usize, vec![1usize, 1])).unwrap_err();
            assert!(e.is_instance_of::<PyValueError>(py));
            let kwargs = PyDict::new(py);
            kwargs.set_item("backend", "saes").unwrap();
            let e = m.getattr("run_game").unwrap().call((8usize, 1usize), Some(&kwargs)).unwrap_err();
            assert!(e.is_instance_of::<PyValueError>(py));
        });
    }

    #[test]
    fn swap_through_the_bindings() {
        with_module(|m| {
            let spec = m.getattr("SubsetSpec").unwrap().call_method1("random", (5usize, 16usize, 1u64)).unwrap();
            let state = m.getattr("make_subset_state").unwrap().call1((&spec,)).unwrap();
            let (out, p): (Bound<'_, PyAny>, f64) =
                m.getattr("complement_swap").unwrap().call1((&state, &spec)).unwrap().extract().unwrap();
            assert!((p - 1.0).abs() < 1e-12);
            let comp = m.getattr("make_complement_state").unwrap().call1((&spec,)).unwrap();
            let f: f64 = out.call_method1("fidelity", (&comp,)).unwrap().extract().unwrap();
            assert!((f - 1.0).abs() < 1e-12);
        });
    }
}
