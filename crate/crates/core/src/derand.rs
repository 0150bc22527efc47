//! Greedy derandomization of the brickwork ansatz under the confidence cost
//! function, in fixed-budget and per-observable coverage modes.
//!
//! COST({U_i}) = sum_P w_P * 2 * prod_i exp(-eps^2/2 * p_i(P)).
//!
//! While measurement j is being edited, the weights of measurements i < j
//! are frozen in a per-Pauli accumulator and measurements i > j contribute
//! their (shared) all-random ansatz weight, so each slot evaluation only
//! recomputes the weights of the one candidate spec.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{EnsembleSpec, GateOption, SlotOrder, SlotRef};
use crate::error::{Error, Result};
use crate::pauli::{Axis, HittingCounts, WeightedPauliSet};
use crate::weights::WeightEngine;

/// Hyperparameters of the cost function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostParams {
    /// Precision hyperparameter in (0, 1]; larger values flatten saturation.
    pub epsilon: f64,
    /// Keep the factor 2 of the confidence bound in reported values. The
    /// factor never changes an argmin; it makes the reported cost plug
    /// directly into the performance guarantee.
    pub include_factor_two: bool,
    /// Product horizon for coverage mode; defaults to N_O * |{P}|.
    pub measurement_horizon: Option<usize>,
}

impl Default for CostParams {
    fn default() -> CostParams {
        CostParams {
            epsilon: 0.9,
            include_factor_two: true,
            measurement_horizon: None,
        }
    }
}

impl CostParams {
    pub fn with_epsilon(epsilon: f64) -> CostParams {
        CostParams {
            epsilon,
            ..CostParams::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Domain("epsilon must be positive".into()));
        }
        Ok(())
    }

    fn lambda(&self) -> f64 {
        self.epsilon * self.epsilon / 2.0
    }

    fn prefactor(&self) -> f64 {
        if self.include_factor_two {
            2.0
        } else {
            1.0
        }
    }
}

/// Measurement budget: a fixed shot count, or a per-observable target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Budget {
    Shots(usize),
    PerObservable(usize),
}

/// Source of the cost weights w_P.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightSource {
    Uniform,
    AbsCoefficient,
    /// Use the weights already stored on the set.
    Explicit,
}

/// Full configuration of one derandomization run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub d: usize,
    pub budget: Budget,
    /// Slot order within each measurement; default per the ansatz module.
    pub order: Option<SlotOrder>,
    /// Allow option 0 (stay random); carries the shallow-shadows dominance
    /// guarantee.
    pub relaxed: bool,
    pub weights: WeightSource,
}

impl RunConfig {
    pub fn fixed(n: usize, d: usize, shots: usize) -> RunConfig {
        RunConfig {
            n,
            d,
            budget: Budget::Shots(shots),
            order: None,
            relaxed: false,
            weights: WeightSource::Explicit,
        }
    }

    pub fn coverage(n: usize, d: usize, per_observable: usize) -> RunConfig {
        RunConfig {
            n,
            d,
            budget: Budget::PerObservable(per_observable),
            order: None,
            relaxed: false,
            weights: WeightSource::Explicit,
        }
    }
}

/// One committed slot assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlotCommit {
    pub measurement: usize,
    pub slot: SlotRef,
    pub option: u8,
    pub cost: f64,
}

/// Result of a derandomization run.
#[derive(Debug, Clone)]
pub struct DerandOutput {
    pub specs: Vec<EnsembleSpec>,
    pub final_cost: f64,
    pub hits: HittingCounts,
    pub log: Vec<SlotCommit>,
    pub epsilon: f64,
}

/// Direct evaluation of the cost function for explicit ensembles.
pub fn cost(
    specs: &[EnsembleSpec],
    paulis: &WeightedPauliSet,
    params: &CostParams,
) -> Result<f64> {
    params.validate()?;
    if paulis.is_empty() {
        return Err(Error::Domain("empty Pauli set".into()));
    }
    for spec in specs {
        if spec.n() != paulis.n() {
            return Err(Error::Dimension(format!(
                "spec on {} qubits, paulis on {}",
                spec.n(),
                paulis.n()
            )));
        }
    }
    let engine = WeightEngine::<f64>::new();
    let lambda = params.lambda();
    let pre = params.prefactor();
    let terms: Result<Vec<f64>> = paulis
        .terms()
        .par_iter()
        .map(|t| {
            let mut h = 0.0;
            for spec in specs {
                h += engine.pauli_weight(spec, &t.pauli)?;
            }
            Ok(t.cost_weight * pre * (-lambda * h).exp())
        })
        .collect();
    Ok(terms?.into_iter().sum())
}

/// Cost of `n_measurements` copies of the all-random (shallow-shadows)
/// ansatz of the given size.
pub fn shallow_cost(
    paulis: &WeightedPauliSet,
    n: usize,
    d: usize,
    n_measurements: usize,
    params: &CostParams,
) -> Result<f64> {
    params.validate()?;
    if paulis.is_empty() {
        return Err(Error::Domain("empty Pauli set".into()));
    }
    let engine = WeightEngine::<f64>::new();
    let spec = EnsembleSpec::all_random(n, d)?;
    let lambda = params.lambda();
    let pre = params.prefactor();
    let mut total = 0.0;
    for t in paulis.terms() {
        let p = engine.pauli_weight(&spec, &t.pauli)?;
        total += t.cost_weight * pre * (-lambda * (n_measurements as f64) * p).exp();
    }
    Ok(total)
}

struct Greedy<'a> {
    engine: WeightEngine<f64>,
    paulis: &'a WeightedPauliSet,
    lambda: f64,
    prefactor: f64,
    /// Sum of committed p_i(P) per Pauli.
    committed: Vec<f64>,
    /// Weight of every Pauli under the all-random ansatz.
    shallow: Vec<f64>,
    options_two: Vec<u8>,
    options_single: Vec<u8>,
}

impl<'a> Greedy<'a> {
    fn new(
        paulis: &'a WeightedPauliSet,
        config: &RunConfig,
        params: &CostParams,
    ) -> Result<Greedy<'a>> {
        let engine = WeightEngine::<f64>::new();
        let template = EnsembleSpec::all_random(config.n, config.d)?;
        let shallow: Result<Vec<f64>> = paulis
            .terms()
            .par_iter()
            .map(|t| engine.pauli_weight(&template, &t.pauli))
            .collect();
        let (options_two, options_single) = if config.relaxed {
            (vec![0u8, 1, 2, 3], vec![0u8, 1, 2, 3, 4, 5, 6])
        } else {
            (vec![1u8, 2, 3], vec![1u8, 2, 3, 4, 5, 6])
        };
        Ok(Greedy {
            engine,
            paulis,
            lambda: params.lambda(),
            prefactor: params.prefactor(),
            committed: vec![0.0; paulis.len()],
            shallow,
            options_two,
            options_single,
        })
    }

    /// Weights of every Pauli under one candidate spec.
    fn weights_of(&self, spec: &EnsembleSpec) -> Result<Vec<f64>> {
        self.paulis
            .terms()
            .par_iter()
            .map(|t| self.engine.pauli_weight(spec, &t.pauli))
            .collect()
    }

    /// Cost with the edited measurement's weights `cand` and `future`
    /// remaining all-random measurements; `active` masks coverage mode.
    fn cost_with(&self, cand: &[f64], future: f64, active: Option<&[bool]>) -> f64 {
        let mut total = 0.0;
        for (k, t) in self.paulis.terms().iter().enumerate() {
            if let Some(mask) = active {
                if !mask[k] {
                    continue;
                }
            }
            let h = self.committed[k] + cand[k] + future * self.shallow[k];
            total += t.cost_weight * self.prefactor * (-self.lambda * h).exp();
        }
        total
    }

    /// Derandomize one measurement in place; returns its final per-Pauli
    /// weights and appends commits to the log.
    fn derandomize_measurement(
        &self,
        measurement: usize,
        order: &SlotOrder,
        config: &RunConfig,
        future: f64,
        active: Option<&[bool]>,
        log: &mut Vec<SlotCommit>,
    ) -> Result<(EnsembleSpec, Vec<f64>)> {
        let mut spec = EnsembleSpec::all_random(config.n, config.d)?;
        let mut last_weights = self.weights_of(&spec)?;
        for slot in order.slots() {
            let options: &[u8] = match slot {
                SlotRef::Two { .. } => &self.options_two,
                SlotRef::Single { .. } => &self.options_single,
            };
            let mut best: Option<(f64, u8, EnsembleSpec, Vec<f64>)> = None;
            for &code in options {
                let option = match slot {
                    SlotRef::Two { .. } => GateOption::TwoQubit(code),
                    SlotRef::Single { .. } => GateOption::SingleQubit(code),
                };
                let cand_spec = spec.assign(*slot, option)?;
                let cand_weights = self.weights_of(&cand_spec)?;
                let c = self.cost_with(&cand_weights, future, active);
                // Strict less-than keeps the lowest code on ties.
                if best.as_ref().map_or(true, |(bc, ..)| c < *bc) {
                    best = Some((c, code, cand_spec, cand_weights));
                }
            }
            let (c, code, cand_spec, cand_weights) = best.expect("non-empty option list");
            spec = cand_spec;
            last_weights = cand_weights;
            log.push(SlotCommit {
                measurement,
                slot: *slot,
                option: code,
                cost: c,
            });
        }
        Ok((spec, last_weights))
    }

    fn final_cost(&self, active: Option<&[bool]>) -> f64 {
        let mut total = 0.0;
        for (k, t) in self.paulis.terms().iter().enumerate() {
            if let Some(mask) = active {
                if !mask[k] {
                    continue;
                }
            }
            total += t.cost_weight * self.prefactor * (-self.lambda * self.committed[k]).exp();
        }
        total
    }

    fn hits(&self) -> HittingCounts {
        let mut hits = HittingCounts::new();
        for (k, t) in self.paulis.terms().iter().enumerate() {
            hits.set(&t.pauli, self.committed[k]);
        }
        hits
    }
}

fn apply_weight_source(paulis: &WeightedPauliSet, source: WeightSource) -> WeightedPauliSet {
    let mut set = paulis.clone();
    match source {
        WeightSource::Uniform => set.set_uniform_weights(),
        WeightSource::AbsCoefficient => set.set_abs_coefficient_weights(),
        WeightSource::Explicit => {}
    }
    set
}

/// Fixed-budget greedy derandomization (the strict algorithm unless
/// `config.relaxed` is set).
pub fn derandomize(
    paulis: &WeightedPauliSet,
    config: &RunConfig,
    params: &CostParams,
) -> Result<DerandOutput> {
    params.validate()?;
    if paulis.is_empty() {
        return Err(Error::Domain("empty Pauli set".into()));
    }
    if paulis.n() != config.n {
        return Err(Error::Dimension(format!(
            "paulis on {} qubits, config on {}",
            paulis.n(),
            config.n
        )));
    }
    let shots = match config.budget {
        Budget::Shots(s) if s >= 1 => s,
        Budget::Shots(_) => return Err(Error::Domain("shot budget must be >= 1".into())),
        Budget::PerObservable(_) => {
            return Err(Error::Domain(
                "fixed-budget mode requires Budget::Shots".into(),
            ))
        }
    };
    let weighted = apply_weight_source(paulis, config.weights);
    let mut greedy = Greedy::new(&weighted, config, params)?;
    let order = config
        .order
        .clone()
        .unwrap_or_else(|| SlotOrder::default_for(config.n, config.d));

    let mut specs = Vec::with_capacity(shots);
    let mut log = Vec::new();
    for j in 0..shots {
        let future = (shots - j - 1) as f64;
        let (spec, weights) =
            greedy.derandomize_measurement(j, &order, config, future, None, &mut log)?;
        for (k, w) in weights.iter().enumerate() {
            greedy.committed[k] += w;
        }
        specs.push(spec);
    }

    Ok(DerandOutput {
        final_cost: greedy.final_cost(None),
        hits: greedy.hits(),
        log,
        epsilon: params.epsilon,
        specs,
    })
}

/// Coverage-mode derandomization: appends measurements until every Pauli's
/// hitting count reaches `n_o`. The cost sum only includes Paulis still
/// short of the target, and the product horizon defaults to n_o * |{P}|.
pub fn derandomize_until_covered(
    paulis: &WeightedPauliSet,
    n_o: usize,
    config: &RunConfig,
    params: &CostParams,
) -> Result<DerandOutput> {
    params.validate()?;
    if paulis.is_empty() {
        return Err(Error::Domain("empty Pauli set".into()));
    }
    if n_o == 0 {
        return Err(Error::Domain("per-observable target must be >= 1".into()));
    }
    if paulis.n() != config.n {
        return Err(Error::Dimension(format!(
            "paulis on {} qubits, config on {}",
            paulis.n(),
            config.n
        )));
    }
    let weighted = apply_weight_source(paulis, config.weights);
    let mut greedy = Greedy::new(&weighted, config, params)?;
    let order = config
        .order
        .clone()
        .unwrap_or_else(|| SlotOrder::default_for(config.n, config.d));
    let horizon = params
        .measurement_horizon
        .unwrap_or(n_o * weighted.len())
        .max(1);
    let target = n_o as f64;
    let covered = |h: f64| h >= target - 1e-9;

    let mut active: Vec<bool> = vec![true; weighted.len()];
    let mut specs = Vec::new();
    let mut log = Vec::new();
    while active.iter().any(|a| *a) && specs.len() < horizon {
        let j = specs.len();
        let future = (horizon - j - 1) as f64;
        let (spec, weights) =
            greedy.derandomize_measurement(j, &order, config, future, Some(&active), &mut log)?;
        let progressed = weights
            .iter()
            .zip(&active)
            .any(|(w, a)| *a && *w > 1e-12);
        let (spec, weights) = if progressed {
            (spec, weights)
        } else {
            // Greedy made no progress on the remaining set; fall back to a
            // direct measurement of the first uncovered Pauli so the
            // direct-measurement shot bound always holds.
            let idx = active.iter().position(|a| *a).expect("some active");
            let spec = direct_basis_spec(config.n, config.d, &weighted.terms()[idx].pauli)?;
            let weights = greedy.weights_of(&spec)?;
            (spec, weights)
        };
        for (k, w) in weights.iter().enumerate() {
            greedy.committed[k] += w;
            if covered(greedy.committed[k]) {
                active[k] = false;
            }
        }
        specs.push(spec);
    }

    Ok(DerandOutput {
        final_cost: greedy.final_cost(None),
        hits: greedy.hits(),
        log,
        epsilon: params.epsilon,
        specs,
    })
}

/// Deterministic spec measuring exactly one Pauli: identity everywhere,
/// with the letter-to-Z rotation in the last single-qubit layer.
pub fn direct_basis_spec(n: usize, d: usize, p: &crate::pauli::PauliString) -> Result<EnsembleSpec> {
    let t = vec![1u8; d * (n / 2)];
    let mut s = vec![1u8; (d + 1) * n];
    for q in 0..n {
        let code = match p.site(q) {
            Axis::I | Axis::Z => 1,
            Axis::X => 2,
            Axis::Y => 4,
        };
        s[d * n + q] = code;
    }
    EnsembleSpec::from_codes(n, d, t, s)
}

/// Run the relaxed algorithm and return (cost_relaxed, cost_shallow); the
/// greedy construction guarantees cost_relaxed <= cost_shallow.
pub fn relaxed_dominates_shallow_check(
    paulis: &WeightedPauliSet,
    config: &RunConfig,
    params: &CostParams,
) -> Result<(f64, f64)> {
    if !config.relaxed {
        return Err(Error::Domain(
            "relaxed_dominates_shallow_check requires relaxed mode".into(),
        ));
    }
    let shots = match config.budget {
        Budget::Shots(s) => s,
        Budget::PerObservable(_) => {
            return Err(Error::Domain("dominance check uses a fixed budget".into()))
        }
    };
    let weighted = apply_weight_source(paulis, config.weights);
    let out = derandomize(&weighted, config, params)?;
    let shallow = shallow_cost(&weighted, config.n, config.d, shots, params)?;
    debug_assert!(out.final_cost <= shallow + 1e-12);
    Ok((out.final_cost, shallow))
}

/// Render the slot-commit log as tab-separated text (one line per commit).
pub fn render_run_log(log: &[SlotCommit]) -> String {
    let mut out = String::from("slot\toption\tcost\n");
    for c in log {
        let slot = match c.slot {
            SlotRef::Two { layer, pos } => format!("m{}.t{}.{}", c.measurement, layer, pos),
            SlotRef::Single { layer, qubit } => {
                format!("m{}.s{}.{}", c.measurement, layer, qubit)
            }
        };
        out.push_str(&format!("{}\t{}\t{:.12e}\n", slot, c.option, c.cost));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{parse_pauli, parse_pauli_list, WeightedPauli};

    fn uniform_set(texts: &[&str]) -> WeightedPauliSet {
        let n = texts[0].len();
        WeightedPauliSet::from_terms(
            n,
            texts
                .iter()
                .map(|t| WeightedPauli::new(parse_pauli(t).unwrap(), 1.0)),
        )
        .unwrap()
    }

    #[test]
    fn cost_formula_examples() {
        // One Pauli, one deterministic diagonalizing spec, eps = 0.5.
        let set = uniform_set(&["ZZ"]);
        let spec = EnsembleSpec::from_codes(2, 0, vec![], vec![1, 1]).unwrap();
        let params = CostParams::with_epsilon(0.5);
        let c = cost(&[spec], &set, &params).unwrap();
        assert!((c - 2.0 * (-0.125f64).exp()).abs() < 1e-14);

        // All p_i = 0: cost = 2 * sum of weights.
        let set = uniform_set(&["XX", "YY"]);
        let spec = EnsembleSpec::from_codes(2, 0, vec![], vec![1, 1]).unwrap();
        let c = cost(&[spec], &set, &params).unwrap();
        assert!((c - 4.0).abs() < 1e-14);
    }

    #[test]
    fn cost_rejects_empty_set() {
        let set = WeightedPauliSet::new(2);
        let spec = EnsembleSpec::all_random(2, 0).unwrap();
        assert!(cost(&[spec], &set, &CostParams::default()).is_err());
    }

    #[test]
    fn single_measurement_diagonalizes_zz() {
        let set = uniform_set(&["ZZ"]);
        let config = RunConfig::fixed(2, 0, 1);
        let out = derandomize(&set, &config, &CostParams::with_epsilon(0.9)).unwrap();
        assert_eq!(out.specs.len(), 1);
        assert!(out.specs[0].is_deterministic());
        let circ = out.specs[0].realize_fixed_circuit().unwrap();
        assert!(circ.diagonalizes(&parse_pauli("ZZ").unwrap()).unwrap());
        assert!((out.hits.get(&parse_pauli("ZZ").unwrap()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn determinism_same_inputs_same_outputs() {
        let set = uniform_set(&["XIZ", "ZZI", "IYY"]);
        let config = RunConfig::fixed(3, 1, 4);
        let params = CostParams::with_epsilon(0.7);
        let a = derandomize(&set, &config, &params).unwrap();
        let b = derandomize(&set, &config, &params).unwrap();
        assert_eq!(a.specs, b.specs);
        assert_eq!(a.final_cost, b.final_cost);
    }

    #[test]
    fn theorem_consistency_final_cost_matches_hit_decomposition() {
        let set = uniform_set(&["XX", "ZZ", "YI"]);
        let config = RunConfig::fixed(2, 1, 6);
        let params = CostParams::with_epsilon(0.6);
        let out = derandomize(&set, &config, &params).unwrap();
        let lambda = 0.18; // eps^2 / 2
        let recomputed: f64 = set
            .terms()
            .iter()
            .map(|t| 2.0 * (-lambda * out.hits.get(&t.pauli)).exp())
            .sum();
        assert!((recomputed - out.final_cost).abs() < 1e-12);
    }

    #[test]
    fn coverage_mode_reaches_target_exactly() {
        let set = uniform_set(&["ZI", "IZ", "XX"]);
        let config = RunConfig::coverage(2, 1, 4);
        let out = derandomize_until_covered(&set, 4, &config, &CostParams::default()).unwrap();
        let min_h = set
            .terms()
            .iter()
            .map(|t| out.hits.get(&t.pauli))
            .fold(f64::INFINITY, f64::min);
        assert!(min_h >= 4.0 - 1e-9);
        assert!(out.specs.len() <= 4 * set.len());
        for s in &out.specs {
            assert!(s.is_deterministic());
        }
    }

    #[test]
    fn coverage_single_pauli_takes_exactly_n_o_shots() {
        let set = uniform_set(&["Z"]);
        let config = RunConfig::coverage(1, 0, 25);
        let out = derandomize_until_covered(&set, 25, &config, &CostParams::default()).unwrap();
        assert_eq!(out.specs.len(), 25);
    }

    #[test]
    fn relaxed_mode_never_exceeds_shallow_cost() {
        let set = parse_pauli_list("XZI\nIYZ\nZZZ\nXIX\n").unwrap();
        let mut config = RunConfig::fixed(3, 1, 5);
        config.relaxed = true;
        config.weights = WeightSource::Uniform;
        let params = CostParams::with_epsilon(0.8);
        let (dss, shallow) = relaxed_dominates_shallow_check(&set, &config, &params).unwrap();
        assert!(dss <= shallow + 1e-15, "dss={dss} shallow={shallow}");
    }

    #[test]
    fn relaxed_per_slot_cost_monotone() {
        let set = uniform_set(&["XX", "ZZ"]);
        let mut config = RunConfig::fixed(2, 1, 3);
        config.relaxed = true;
        let out = derandomize(&set, &config, &CostParams::with_epsilon(0.9)).unwrap();
        let mut prev = f64::INFINITY;
        for c in &out.log {
            assert!(c.cost <= prev + 1e-12);
            prev = c.cost;
        }
    }

    #[test]
    fn direct_basis_spec_diagonalizes_its_target() {
        for text in ["XYZI", "IIII", "YYXX", "ZIZI"] {
            let p = parse_pauli(text).unwrap();
            let spec = direct_basis_spec(4, 2, &p).unwrap();
            let circ = spec.realize_fixed_circuit().unwrap();
            assert!(circ.diagonalizes(&p).unwrap(), "{text}");
        }
    }

    #[test]
    fn run_log_renders() {
        let set = uniform_set(&["ZZ"]);
        let config = RunConfig::fixed(2, 0, 1);
        let out = derandomize(&set, &config, &CostParams::default()).unwrap();
        let log = render_run_log(&out.log);
        assert!(log.starts_with("slot\toption\tcost\n"));
        assert_eq!(log.lines().count(), 1 + out.log.len());
    }
}
