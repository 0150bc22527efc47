//! Turn measurement records into Pauli expectation estimates, recombined
//! scalars, and confidence/variance guarantee numbers.
//!
//! Each diagonalizing circuit contributes <b|U P U'|b> = s * (-1)^|b & m|,
//! where s is the (+-1) conjugation sign of U P U' and m its Z support.
//! That sign bookkeeping is explicit here; hits are recomputed from exact
//! tableau conjugation rather than trusted from the derandomizer.

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::pauli::{Axis, PauliString, WeightedPauliSet};
use crate::sim::MeasurementRecord;

/// Contribution of one circuit to one Pauli: None when the circuit does not
/// diagonalize it, otherwise the sign and Z-support needed to score a record.
#[derive(Debug, Clone)]
pub struct HitRule {
    pub sign: f64,
    pub z_support: Vec<u64>,
}

/// Precompute the per-circuit scoring rule for `p`.
pub fn hit_rule(circuit: &Circuit, p: &PauliString) -> Result<Option<HitRule>> {
    let conj = circuit.conjugate(p)?;
    if !conj.is_z_diagonal() {
        return Ok(None);
    }
    let sign = conj
        .sign()
        .as_real()
        .expect("Clifford image of a Hermitian Pauli has sign +-1");
    Ok(Some(HitRule {
        sign,
        z_support: conj.z_words().to_vec(),
    }))
}

impl HitRule {
    /// The +-1 value of one measurement record.
    pub fn score(&self, bits: &[bool]) -> f64 {
        let mut parity = 0u32;
        for (k, b) in bits.iter().enumerate() {
            if *b && (self.z_support[k / 64] >> (k % 64)) & 1 == 1 {
                parity ^= 1;
            }
        }
        if parity == 1 {
            -self.sign
        } else {
            self.sign
        }
    }
}

/// Empirical-average estimate of <P> from the measurement records; 0 when
/// no circuit diagonalizes P.
pub fn estimate(
    circuits: &[Circuit],
    records: &[MeasurementRecord],
    p: &PauliString,
) -> Result<f64> {
    let mut rules: Vec<Option<HitRule>> = Vec::with_capacity(circuits.len());
    for c in circuits {
        rules.push(hit_rule(c, p)?);
    }
    let mut hits = 0u64;
    let mut sum = 0.0;
    for r in records {
        let rule = rules
            .get(r.circuit_index)
            .ok_or_else(|| {
                Error::Dimension(format!(
                    "record references circuit {} of {}",
                    r.circuit_index,
                    circuits.len()
                ))
            })?
            .as_ref();
        if let Some(rule) = rule {
            hits += 1;
            sum += rule.score(&r.bits);
        }
    }
    Ok(if hits == 0 { 0.0 } else { sum / hits as f64 })
}

/// Hoeffding confidence bound 2 exp(-eps^2 h / 2); values above 1 are
/// vacuous and reported as-is.
pub fn confidence_bound(h: f64, epsilon: f64) -> f64 {
    2.0 * (-epsilon * epsilon * h / 2.0).exp()
}

/// Precision achievable at confidence 1 - delta with h hits:
/// sqrt(2 ln(2/delta) / h).
pub fn precision_for_confidence(h: f64, delta: f64) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::Domain(
            "precision is undefined with no hits".into(),
        ));
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Domain("delta must be in (0, 1)".into()));
    }
    Ok((2.0 * (2.0 / delta).ln() / h).sqrt())
}

/// State-agnostic variance bound N / h(P).
pub fn variance_bound(n_measurements: usize, h: f64) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::Domain("variance bound requires h > 0".into()));
    }
    Ok(n_measurements as f64 / h)
}

/// Mean squared error of repeated estimates against a known value.
pub fn mse(true_value: f64, estimates: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Domain("mse of an empty sample".into()));
    }
    Ok(estimates
        .iter()
        .map(|e| (true_value - e) * (true_value - e))
        .sum::<f64>()
        / estimates.len() as f64)
}

/// Per-Pauli block of the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PauliRow {
    pub pauli: String,
    pub coefficient: f64,
    pub estimate: f64,
    pub hits: u64,
    pub confidence_bound: f64,
    /// True when the confidence bound exceeds 1 and carries no information.
    pub vacuous: bool,
    /// N / h(P); absent when the Pauli was never hit.
    pub variance_bound: Option<f64>,
}

/// Recombined scalar (energy-style) block.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalarBlock {
    pub value: f64,
    /// eps * sum_P |c_P|.
    pub error_bound: f64,
    pub epsilon: f64,
    /// 1 - final cost when the final cost is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

/// Full estimation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimationReport {
    pub n_qubits: usize,
    pub n_measurements: usize,
    pub epsilon: f64,
    pub rows: Vec<PauliRow>,
    pub scalar: ScalarBlock,
}

/// Build the full report for a weighted Pauli set.
pub fn build_report(
    circuits: &[Circuit],
    records: &[MeasurementRecord],
    terms: &WeightedPauliSet,
    epsilon: f64,
    final_cost: Option<f64>,
) -> Result<EstimationReport> {
    let n_measurements = records.len();
    let mut rows = Vec::with_capacity(terms.len());
    let mut scalar_value = 0.0;
    for t in terms.terms() {
        let mut hits = 0u64;
        let mut sum = 0.0;
        for r in records {
            let circuit = circuits.get(r.circuit_index).ok_or_else(|| {
                Error::Dimension(format!(
                    "record references circuit {} of {}",
                    r.circuit_index,
                    circuits.len()
                ))
            })?;
            if let Some(rule) = hit_rule(circuit, &t.pauli)? {
                hits += 1;
                sum += rule.score(&r.bits);
            }
        }
        let estimate = if hits == 0 { 0.0 } else { sum / hits as f64 };
        let conf = confidence_bound(hits as f64, epsilon);
        scalar_value += t.coefficient * estimate;
        rows.push(PauliRow {
            pauli: t.pauli.sites().map(Axis::as_char).collect(),
            coefficient: t.coefficient,
            estimate,
            hits,
            confidence_bound: conf,
            vacuous: conf > 1.0,
            variance_bound: if hits > 0 {
                Some(n_measurements as f64 / hits as f64)
            } else {
                None
            },
        });
    }
    Ok(EstimationReport {
        n_qubits: terms.n(),
        n_measurements,
        epsilon,
        rows,
        scalar: ScalarBlock {
            value: scalar_value,
            error_bound: epsilon * terms.sum_abs_coefficients(),
            epsilon,
            confidence: final_cost.map(|c| 1.0 - c),
        },
    })
}

/// Scalar recombination sum_P c_P o(P) with its triangle-inequality bound;
/// every term of `terms` must appear in the report rows.
pub fn estimate_scalar(terms: &WeightedPauliSet, report: &EstimationReport) -> Result<(f64, f64)> {
    let mut value = 0.0;
    for t in terms.terms() {
        let text: String = t.pauli.sites().map(Axis::as_char).collect();
        let row = report
            .rows
            .iter()
            .find(|r| r.pauli == text)
            .ok_or_else(|| Error::Domain(format!("term {text} missing from report")))?;
        value += t.coefficient * row.estimate;
    }
    Ok((value, report.epsilon * terms.sum_abs_coefficients()))
}

/// CSV export of the per-Pauli rows plus a scalar summary row.
pub fn report_to_csv(report: &EstimationReport) -> String {
    let mut out =
        String::from("pauli,coefficient,estimate,hits,confidence_bound,vacuous,variance_bound\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{:.12e},{:.12e},{},{:.12e},{},{}\n",
            r.pauli,
            r.coefficient,
            r.estimate,
            r.hits,
            r.confidence_bound,
            r.vacuous,
            r.variance_bound
                .map(|v| format!("{v:.12e}"))
                .unwrap_or_default(),
        ));
    }
    out.push_str(&format!(
        "#scalar,value={:.12e},error_bound={:.12e},epsilon={}\n",
        report.scalar.value, report.scalar.error_bound, report.scalar.epsilon
    ));
    out
}
