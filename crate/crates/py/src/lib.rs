//! Python bindings for the trine QKD toolkit: attack construction, protocol
//! simulation, and the security-analysis operations.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use trine_qkd::channel::AttackModel;
use trine_qkd::protocol::{self, BitMapping, ProtocolKind};
use trine_qkd::qubit::{KrausOperator, Mat2};
use trine_qkd::security;
use trine_qkd::verify::{run_battery, VerifyOptions};

fn err(e: trine_qkd::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mapping(name: &str) -> PyResult<BitMapping> {
    match name {
        "exclusion" => Ok(BitMapping::Exclusion),
        "literal-paper" => Ok(BitMapping::Literal),
        other => Err(PyValueError::new_err(format!(
            "unknown mapping '{other}' (expected 'exclusion' or 'literal-paper')"
        ))),
    }
}

/// An eavesdropping channel between Alice and Bob.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Attack {
    inner: AttackModel,
}

#[pymethods]
impl Attack {
    /// The identity channel.
    #[staticmethod]
    fn none() -> Attack {
        Attack {
            inner: AttackModel::none(),
        }
    }

    /// Bernoulli qubit loss with probability q.
    #[staticmethod]
    fn loss(q: f64) -> PyResult<Attack> {
        Ok(Attack {
            inner: AttackModel::loss(q).map_err(err)?,
        })
    }

    /// Depolarizing channel rho -> (1-p) rho + (p/3) sum sigma rho sigma.
    #[staticmethod]
    fn depolarizing(p: f64) -> PyResult<Attack> {
        Ok(Attack {
            inner: AttackModel::depolarizing(p).map_err(err)?,
        })
    }

    /// The other depolarizing parameterization, rho -> (1-p) rho + p/2.
    #[staticmethod]
    fn depolarizing_replacement(p: f64) -> PyResult<Attack> {
        Ok(Attack {
            inner: AttackModel::depolarizing_replacement(p).map_err(err)?,
        })
    }

    /// Pauli mixture with flip probabilities (px, py, pz).
    #[staticmethod]
    fn pauli(px: f64, py: f64, pz: f64) -> PyResult<Attack> {
        Ok(Attack {
            inner: AttackModel::pauli_mixture(px, py, pz).map_err(err)?,
        })
    }

    /// Intercept/resend with the dual-resend strategy.
    #[staticmethod]
    fn intercept_resend() -> Attack {
        Attack {
            inner: AttackModel::intercept_resend_dual(),
        }
    }

    /// Weighted Kraus mixture; each matrix is 8 reals, row-major,
    /// real/imag interleaved.
    #[staticmethod]
    fn kraus(branches: Vec<(f64, [f64; 8])>) -> PyResult<Attack> {
        let mut ops = Vec::with_capacity(branches.len());
        for (w, m) in branches {
            let mat = Mat2::new([
                [
                    num_complex::Complex64::new(m[0], m[1]),
                    num_complex::Complex64::new(m[2], m[3]),
                ],
                [
                    num_complex::Complex64::new(m[4], m[5]),
                    num_complex::Complex64::new(m[6], m[7]),
                ],
            ]);
            ops.push((w, KrausOperator::new(mat).map_err(err)?));
        }
        Ok(Attack {
            inner: AttackModel::custom_kraus(ops).map_err(err)?,
        })
    }

    /// Composes Bernoulli loss on top of this attack.
    fn with_loss(&self, q: f64) -> PyResult<Attack> {
        Ok(Attack {
            inner: self.inner.clone().with_loss(q).map_err(err)?,
        })
    }

    #[getter]
    fn loss_prob(&self) -> f64 {
        self.inner.loss_prob()
    }

    fn __repr__(&self) -> String {
        format!("Attack(loss_prob={})", self.inner.loss_prob())
    }
}

/// Aggregate counters and estimates from one protocol run.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct RunStats {
    #[pyo3(get)]
    n_sent: u64,
    #[pyo3(get)]
    n_lost: u64,
    #[pyo3(get)]
    n_received: u64,
    #[pyo3(get)]
    n_conclusive: u64,
    #[pyo3(get)]
    n_inconclusive: u64,
    #[pyo3(get)]
    n_test: u64,
    #[pyo3(get)]
    n_key: u64,
    #[pyo3(get)]
    n_test_errors: u64,
    #[pyo3(get)]
    n_conclusive_errors: u64,
    #[pyo3(get)]
    e_err_estimate: f64,
    #[pyo3(get)]
    e_conclusive_observed: f64,
    #[pyo3(get)]
    inconclusive_fraction_i: f64,
    #[pyo3(get)]
    e_est_r04: f64,
    #[pyo3(get)]
    p_conc_observed: f64,
    #[pyo3(get)]
    seed: u64,
    inner: protocol::RunStats,
}

impl From<protocol::RunStats> for RunStats {
    fn from(s: protocol::RunStats) -> Self {
        RunStats {
            n_sent: s.n_sent,
            n_lost: s.n_lost,
            n_received: s.n_received,
            n_conclusive: s.n_conclusive,
            n_inconclusive: s.n_inconclusive,
            n_test: s.n_test,
            n_key: s.n_key,
            n_test_errors: s.n_test_errors,
            n_conclusive_errors: s.n_conclusive_errors,
            e_err_estimate: s.e_err_estimate,
            e_conclusive_observed: s.e_conclusive_observed,
            inconclusive_fraction_i: s.inconclusive_fraction_i,
            e_est_r04: s.e_est_r04,
            p_conc_observed: s.p_conc_observed,
            seed: s.seed,
            inner: s,
        }
    }
}

#[pymethods]
impl RunStats {
    fn __repr__(&self) -> String {
        format!(
            "RunStats(n_sent={}, n_conclusive={}, e_err_estimate={}, p_conc_observed={})",
            self.n_sent, self.n_conclusive, self.e_err_estimate, self.p_conc_observed
        )
    }
}

/// One protocol execution: statistics plus both raw keys.
#[pyclass(frozen, skip_from_py_object)]
struct ProtocolRun {
    #[pyo3(get)]
    stats: RunStats,
    #[pyo3(get)]
    alice_key: Vec<u8>,
    #[pyo3(get)]
    bob_key: Vec<u8>,
}

/// Bit/phase error probabilities of the filtered pair under an attack.
#[pyclass(frozen, skip_from_py_object)]
struct ErrorProbs {
    #[pyo3(get)]
    p_bit: f64,
    #[pyo3(get)]
    p_phase: f64,
    #[pyo3(get)]
    zeta: f64,
    #[pyo3(get)]
    ratio_residual: f64,
}

#[pymethods]
impl ErrorProbs {
    fn __repr__(&self) -> String {
        format!(
            "ErrorProbs(p_bit={}, p_phase={}, zeta={})",
            self.p_bit, self.p_phase, self.zeta
        )
    }
}

/// Asymptotic key-rate report.
#[pyclass(frozen, skip_from_py_object)]
struct KeyRate {
    #[pyo3(get)]
    e_bit: f64,
    #[pyo3(get)]
    e_phase: f64,
    #[pyo3(get)]
    p_conc: f64,
    #[pyo3(get)]
    rate: f64,
    #[pyo3(get)]
    rate_net: f64,
}

#[pymethods]
impl KeyRate {
    fn __repr__(&self) -> String {
        format!("KeyRate(e_bit={}, rate={})", self.e_bit, self.rate)
    }
}

impl From<security::KeyRateReport> for KeyRate {
    fn from(r: security::KeyRateReport) -> Self {
        KeyRate {
            e_bit: r.e_bit,
            e_phase: r.e_phase,
            p_conc: r.p_conc,
            rate: r.rate,
            rate_net: r.rate_net,
        }
    }
}

/// Security thresholds of the trine protocol.
#[pyclass(frozen, skip_from_py_object)]
struct Thresholds {
    /// Bit-error threshold, about 0.0981.
    #[pyo3(get)]
    e_star: f64,
    /// Depolarizing threshold under the Pauli-mixture convention.
    #[pyo3(get)]
    p_star: f64,
    /// The same under rho -> (1-p) rho + p/2.
    #[pyo3(get)]
    p_star_alternative_convention: f64,
}

/// Runs PBC00: sacrifices a random test fraction of the conclusive events
/// and keeps the rest as raw key.
#[pyfunction]
#[pyo3(signature = (n_pulses, attack, test_fraction=0.5, seed=981, mapping="exclusion"))]
fn run_pbc00(
    n_pulses: u64,
    attack: &Attack,
    test_fraction: f64,
    seed: u64,
    mapping: &str,
) -> PyResult<ProtocolRun> {
    let run = protocol::run_pbc00_with(
        n_pulses,
        &attack.inner,
        test_fraction,
        seed,
        parse_mapping(mapping)?,
    )
    .map_err(err)?;
    Ok(ProtocolRun {
        stats: run.stats.into(),
        alice_key: run.alice_key,
        bob_key: run.bob_key,
    })
}

/// Runs R04: every conclusive event is key; the error rate is estimated
/// from the inconclusive fraction.
#[pyfunction]
#[pyo3(signature = (n_pulses, attack, seed=981, mapping="exclusion"))]
fn run_r04(n_pulses: u64, attack: &Attack, seed: u64, mapping: &str) -> PyResult<ProtocolRun> {
    let run = protocol::run_r04_with(n_pulses, &attack.inner, seed, parse_mapping(mapping)?)
        .map_err(err)?;
    Ok(ProtocolRun {
        stats: run.stats.into(),
        alice_key: run.alice_key,
        bob_key: run.bob_key,
    })
}

/// Bit/phase error probabilities for an attack in the entanglement picture.
#[pyfunction]
fn analyze(attack: &Attack) -> PyResult<ErrorProbs> {
    let probs = security::error_probs_for_attack(&attack.inner).map_err(err)?;
    Ok(ErrorProbs {
        p_bit: probs.p_bit,
        p_phase: probs.p_phase,
        zeta: probs.zeta,
        ratio_residual: probs.ratio_residual,
    })
}

/// The asymptotic rate p_conc [1 - h(e) - h(5e/4)].
#[pyfunction]
fn key_rate(e_bit: f64, p_conc: f64) -> PyResult<KeyRate> {
    Ok(security::key_rate(e_bit, p_conc).map_err(err)?.into())
}

/// Key rate implied by a finished run ("pbc00" or "r04").
#[pyfunction]
fn pipeline_key_rate(stats: &RunStats, protocol: &str) -> PyResult<KeyRate> {
    let mode = match protocol {
        "pbc00" => ProtocolKind::Pbc00,
        "r04" => ProtocolKind::R04,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown protocol '{other}' (expected 'pbc00' or 'r04')"
            )))
        }
    };
    Ok(security::protocol_keyrate_pipeline(&stats.inner, mode)
        .map_err(err)?
        .into())
}

/// Binary entropy h(x) in bits.
#[pyfunction]
fn binary_entropy(x: f64) -> PyResult<f64> {
    security::binary_entropy(x).map_err(err)
}

/// Conclusive bit error rate of the depolarizing channel, 8p/(9+4p).
#[pyfunction]
fn depol_error_rate(p: f64) -> PyResult<f64> {
    security::depol_error_rate(p).map_err(err)
}

/// The R04 estimator (1-2I)/(1-I), clamped to [0, 1].
#[pyfunction]
fn estimate_from_inconclusive(i: f64) -> PyResult<f64> {
    Ok(protocol::estimate_from_inconclusive(i).map_err(err)?.value)
}

/// Security thresholds (bit error e*, depolarizing p*).
#[pyfunction]
fn thresholds() -> PyResult<Thresholds> {
    let t = security::depol_threshold().map_err(err)?;
    Ok(Thresholds {
        e_star: t.e_star,
        p_star: t.p_star,
        p_star_alternative_convention: t.p_star_alternative_convention,
    })
}

/// BB84's recomputed depolarizing threshold.
#[pyfunction]
fn bb84_threshold() -> PyResult<f64> {
    security::bb84_threshold().map_err(err)
}

/// The martingale deviation bound 2 exp(-N eps^2 / 2).
#[pyfunction]
fn azuma_bound(n: u64, epsilon: f64) -> f64 {
    security::azuma_bound(n, epsilon)
}

/// Smallest N with 2 exp(-N eps^2 / 2) <= delta.
#[pyfunction]
fn azuma_sample_size(epsilon: f64, delta: f64) -> PyResult<u64> {
    security::azuma_sample_size(epsilon, delta).map_err(err)
}

/// The cross-protocol threshold comparison as a JSON string.
#[pyfunction]
fn comparison_table_json() -> PyResult<String> {
    let table = security::comparison_table().map_err(err)?;
    Ok(serde_json::to_string_pretty(&table).expect("serializable table"))
}

/// Runs the invariant battery; returns (all_passed, report_json).
#[pyfunction]
#[pyo3(signature = (seed=981, mapping="exclusion"))]
fn verify(seed: u64, mapping: &str) -> PyResult<(bool, String)> {
    let report = run_battery(&VerifyOptions {
        seed,
        mapping: parse_mapping(mapping)?,
        corrupt_tolerances: false,
    })
    .map_err(err)?;
    let json = serde_json::to_string_pretty(&report).expect("serializable report");
    Ok((report.all_passed, json))
}

#[pymodule]
fn trineqkd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Attack>()?;
    m.add_class::<RunStats>()?;
    m.add_class::<ProtocolRun>()?;
    m.add_class::<ErrorProbs>()?;
    m.add_class::<KeyRate>()?;
    m.add_class::<Thresholds>()?;
    m.add_function(wrap_pyfunction!(run_pbc00, m)?)?;
    m.add_function(wrap_pyfunction!(run_r04, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(key_rate, m)?)?;
    m.add_function(wrap_pyfunction!(pipeline_key_rate, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(depol_error_rate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_from_inconclusive, m)?)?;
    m.add_function(wrap_pyfunction!(thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(bb84_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(azuma_bound, m)?)?;
    m.add_function(wrap_pyfunction!(azuma_sample_size, m)?)?;
    m.add_function(wrap_pyfunction!(comparison_table_json, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
