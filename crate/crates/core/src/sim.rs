//! Exact conjugation lives in [`crate::circuit`]; this module adds the dense
//! statevector backend used to prepare small test states and sample
//! measurement outcomes, plus dense ground states of Pauli Hamiltonians.
//!
//! Basis convention: qubit 1 (site index 0) is the most significant bit of
//! a basis index, so bitstrings read left to right in site order.

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::pauli::{PauliString, WeightedPauliSet};
use crate::scalar::Real;

/// Maximum qubit count for the dense backend.
pub const MAX_DENSE_QUBITS: usize = 14;

/// Dense state on up to [`MAX_DENSE_QUBITS`] qubits, unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<F: Real> {
    n: usize,
    amps: Vec<Complex<F>>,
}

impl<F: Real> StateVector<F> {
    /// |0...0> on n qubits.
    pub fn zero_state(n: usize) -> Result<StateVector<F>> {
        if n > MAX_DENSE_QUBITS {
            return Err(Error::Resource(format!(
                "statevector supports n <= {MAX_DENSE_QUBITS}, got {n}"
            )));
        }
        let mut amps = vec![Complex::new(F::zero(), F::zero()); 1 << n];
        amps[0] = Complex::new(F::one(), F::zero());
        Ok(StateVector { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex<F>>) -> Result<StateVector<F>> {
        if n > MAX_DENSE_QUBITS {
            return Err(Error::Resource(format!(
                "statevector supports n <= {MAX_DENSE_QUBITS}, got {n}"
            )));
        }
        if amps.len() != 1 << n {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {} qubits",
                amps.len(),
                n
            )));
        }
        let state = StateVector { n, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("state norm {norm} is not 1")));
        }
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex<F>] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps
            .iter()
            .map(|a| {
                let re = a.re.to_f64().unwrap_or(0.0);
                let im = a.im.to_f64().unwrap_or(0.0);
                re * re + im * im
            })
            .sum::<f64>()
            .sqrt()
    }

    fn bit_of(&self, index: usize, site: usize) -> usize {
        (index >> (self.n - 1 - site)) & 1
    }

    /// Apply one gate in place.
    pub fn apply_gate(&mut self, gate: &Gate) {
        match *gate {
            Gate::Single { qubit, c } => {
                let m64 = c.matrix();
                let m: [[Complex<F>; 2]; 2] = [
                    [cast_c(m64[0][0]), cast_c(m64[0][1])],
                    [cast_c(m64[1][0]), cast_c(m64[1][1])],
                ];
                let stride = 1usize << (self.n - 1 - qubit);
                let mut base = 0;
                while base < self.amps.len() {
                    for r in base..base + stride {
                        let a0 = self.amps[r];
                        let a1 = self.amps[r + stride];
                        self.amps[r] = m[0][0] * a0 + m[0][1] * a1;
                        self.amps[r + stride] = m[1][0] * a0 + m[1][1] * a1;
                    }
                    base += stride * 2;
                }
            }
            Gate::Cnot { control, target } => {
                let ts = 1usize << (self.n - 1 - target);
                for idx in 0..self.amps.len() {
                    if self.bit_of(idx, control) == 1 && self.bit_of(idx, target) == 0 {
                        self.amps.swap(idx, idx | ts);
                    }
                }
            }
            Gate::Swap { a, b } => {
                for idx in 0..self.amps.len() {
                    let (ba, bb) = (self.bit_of(idx, a), self.bit_of(idx, b));
                    if ba == 1 && bb == 0 {
                        let other = idx ^ (1 << (self.n - 1 - a)) ^ (1 << (self.n - 1 - b));
                        self.amps.swap(idx, other);
                    }
                }
            }
            Gate::ISwap { a, b } => {
                let i_unit = Complex::new(F::zero(), F::one());
                for idx in 0..self.amps.len() {
                    let (ba, bb) = (self.bit_of(idx, a), self.bit_of(idx, b));
                    if ba == 1 && bb == 0 {
                        let other = idx ^ (1 << (self.n - 1 - a)) ^ (1 << (self.n - 1 - b));
                        let va = self.amps[idx];
                        let vb = self.amps[other];
                        self.amps[idx] = i_unit * vb;
                        self.amps[other] = i_unit * va;
                    }
                }
            }
        }
    }

    /// New state U|psi>.
    pub fn apply_circuit(&self, circuit: &Circuit) -> Result<StateVector<F>> {
        if circuit.n != self.n {
            return Err(Error::Dimension(format!(
                "state on {} qubits, circuit on {}",
                self.n, circuit.n
            )));
        }
        let mut out = self.clone();
        for g in &circuit.gates {
            out.apply_gate(g);
        }
        Ok(out)
    }

    /// Born-rule outcome probabilities of a computational-basis measurement.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps
            .iter()
            .map(|a| {
                let re = a.re.to_f64().unwrap_or(0.0);
                let im = a.im.to_f64().unwrap_or(0.0);
                re * re + im * im
            })
            .collect()
    }

    /// Exact expectation value <psi|P|psi>.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if p.n() != self.n {
            return Err(Error::Dimension(format!(
                "pauli on {} qubits, state on {}",
                p.n(),
                self.n
            )));
        }
        let mut x_flip = 0usize;
        let mut z_mask = 0usize;
        let mut n_y = 0u32;
        for s in 0..self.n {
            let bit = 1usize << (self.n - 1 - s);
            if p.x_bit(s) {
                x_flip |= bit;
            }
            if p.z_bit(s) {
                z_mask |= bit;
            }
            if p.x_bit(s) && p.z_bit(s) {
                n_y += 1;
            }
        }
        let mut acc = Complex::new(0.0f64, 0.0);
        for (b, amp) in self.amps.iter().enumerate() {
            let target = b ^ x_flip;
            let i_exp = u32::from(p.sign().i_exponent()) as usize
                + n_y as usize
                + 2 * ((b & z_mask).count_ones() as usize);
            let phase = match i_exp % 4 {
                0 => Complex::new(1.0, 0.0),
                1 => Complex::new(0.0, 1.0),
                2 => Complex::new(-1.0, 0.0),
                _ => Complex::new(0.0, -1.0),
            };
            let src = Complex::new(
                amp.re.to_f64().unwrap_or(0.0),
                amp.im.to_f64().unwrap_or(0.0),
            );
            let dst = &self.amps[target];
            let dst = Complex::new(
                dst.re.to_f64().unwrap_or(0.0),
                dst.im.to_f64().unwrap_or(0.0),
            );
            acc += dst.conj() * phase * src;
        }
        Ok(acc.re)
    }
}

fn cast_c<F: Real>(c: num_complex::Complex64) -> Complex<F> {
    Complex::new(F::from_f64_exact(c.re), F::from_f64_exact(c.im))
}

/// One measurement outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementRecord {
    pub circuit_index: usize,
    pub bits: Vec<bool>,
}

impl MeasurementRecord {
    pub fn bitstring(&self) -> String {
        self.bits.iter().map(|b| if *b { '1' } else { '0' }).collect()
    }

    pub fn from_bitstring(circuit_index: usize, s: &str) -> Result<MeasurementRecord> {
        let mut bits = Vec::with_capacity(s.len());
        for (k, c) in s.chars().enumerate() {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::Parse {
                        position: k + 1,
                        message: format!("invalid bit '{other}'"),
                    })
                }
            }
        }
        Ok(MeasurementRecord {
            circuit_index,
            bits,
        })
    }
}

/// Counter-based seeded generator: shot i draws from stream i of the run
/// seed, so parallel sampling is order-independent.
#[derive(Debug, Clone, Copy)]
pub struct RunRng {
    pub seed: u64,
}

impl RunRng {
    pub fn new(seed: u64) -> RunRng {
        RunRng { seed }
    }

    pub fn shot(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Draw a basis index from an explicit probability table.
pub fn sample_index(probabilities: &[f64], rng: &mut impl Rng) -> usize {
    let mut u: f64 = rng.gen();
    for (idx, p) in probabilities.iter().enumerate() {
        if u < *p {
            return idx;
        }
        u -= *p;
    }
    probabilities.len() - 1
}

fn index_bits(n: usize, idx: usize) -> Vec<bool> {
    (0..n).map(|s| (idx >> (n - 1 - s)) & 1 == 1).collect()
}

/// Rotate `state` by `circuit` and sample one computational-basis outcome
/// from shot stream `shot` of `seed`.
pub fn sample_measurement<F: Real>(
    circuit: &Circuit,
    state: &StateVector<F>,
    rng: &RunRng,
    circuit_index: usize,
) -> Result<MeasurementRecord> {
    let rotated = state.apply_circuit(circuit)?;
    let probs = rotated.probabilities();
    let mut shot_rng = rng.shot(circuit_index as u64);
    let idx = sample_index(&probs, &mut shot_rng);
    Ok(MeasurementRecord {
        circuit_index,
        bits: index_bits(state.n(), idx),
    })
}

/// Ground state of a Pauli-decomposed Hermitian operator by dense
/// diagonalization; returns (state, energy, degenerate_flag).
///
/// The complex Hermitian matrix is embedded as the real symmetric
/// [[Re, -Im], [Im, Re]] whose spectrum doubles every eigenvalue.
pub fn ground_state<F: Real>(h: &WeightedPauliSet) -> Result<(StateVector<F>, f64, bool)> {
    let n = h.n();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Resource(format!(
            "dense diagonalization supports n <= {MAX_DENSE_QUBITS}, got {n}"
        )));
    }
    let dim = 1usize << n;
    let mut re = DMatrix::<f64>::zeros(dim, dim);
    let mut im = DMatrix::<f64>::zeros(dim, dim);
    for term in h.terms() {
        let p = &term.pauli;
        let mut x_flip = 0usize;
        let mut z_mask = 0usize;
        let mut n_y = 0usize;
        for s in 0..n {
            let bit = 1usize << (n - 1 - s);
            if p.x_bit(s) {
                x_flip |= bit;
            }
            if p.z_bit(s) {
                z_mask |= bit;
            }
            if p.x_bit(s) && p.z_bit(s) {
                n_y += 1;
            }
        }
        for b in 0..dim {
            let target = b ^ x_flip;
            let i_exp = (n_y + 2 * (b & z_mask).count_ones() as usize) % 4;
            let (vre, vim) = match i_exp {
                0 => (term.coefficient, 0.0),
                1 => (0.0, term.coefficient),
                2 => (-term.coefficient, 0.0),
                _ => (0.0, -term.coefficient),
            };
            re[(target, b)] += vre;
            im[(target, b)] += vim;
        }
    }

    let mut doubled = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
    doubled.view_mut((0, 0), (dim, dim)).copy_from(&re);
    doubled.view_mut((dim, dim), (dim, dim)).copy_from(&re);
    doubled.view_mut((0, dim), (dim, dim)).copy_from(&(-&im));
    doubled.view_mut((dim, 0), (dim, dim)).copy_from(&im);

    let eig = nalgebra::SymmetricEigen::new(doubled);
    let mut order: Vec<usize> = (0..2 * dim).collect();
    order.sort_by(|a, b| {
        eig.eigenvalues[*a]
            .partial_cmp(&eig.eigenvalues[*b])
            .unwrap()
    });
    let ground = order[0];
    let energy = eig.eigenvalues[ground];
    // The doubling duplicates every eigenvalue, so intrinsic degeneracy
    // shows up as a quadruple-close bottom of the sorted spectrum.
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let degenerate = eig.eigenvalues[order[2]] - energy < 1e-8 * scale;

    let col = eig.eigenvectors.column(ground);
    let mut amps = Vec::with_capacity(dim);
    let mut norm = 0.0f64;
    for b in 0..dim {
        let c = Complex::new(col[b], col[b + dim]);
        norm += c.norm_sqr();
        amps.push(c);
    }
    let norm = norm.sqrt();
    let amps = amps
        .into_iter()
        .map(|c| Complex::new(F::from_f64_exact(c.re / norm), F::from_f64_exact(c.im / norm)))
        .collect();
    Ok((StateVector { n, amps }, energy, degenerate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::SingleClifford;
    use crate::pauli::{parse_pauli, parse_pauli_list, WeightedPauli};

    #[test]
    fn identity_circuit_on_zero_state_yields_zeros() {
        let state = StateVector::<f64>::zero_state(2).unwrap();
        let circ = Circuit::identity(2);
        let rng = RunRng::new(1);
        for i in 0..5 {
            let rec = sample_measurement(&circ, &state, &rng, i).unwrap();
            assert_eq!(rec.bitstring(), "00");
        }
    }

    #[test]
    fn hadamard_outcomes_are_balanced() {
        let state = StateVector::<f64>::zero_state(1).unwrap();
        let circ = Circuit {
            n: 1,
            gates: vec![Gate::Single {
                qubit: 0,
                c: SingleClifford::H,
            }],
        };
        let rng = RunRng::new(42);
        let shots = 10_000;
        let mut ones = 0usize;
        for i in 0..shots {
            if sample_measurement(&circ, &state, &rng, i).unwrap().bits[0] {
                ones += 1;
            }
        }
        // 3 sigma of a fair coin at 10^4 draws.
        let sigma = (0.25f64 * shots as f64).sqrt();
        assert!((ones as f64 - shots as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn seeded_stream_is_reproducible() {
        let state = StateVector::<f64>::zero_state(3).unwrap();
        let circ = Circuit {
            n: 3,
            gates: vec![
                Gate::Single {
                    qubit: 0,
                    c: SingleClifford::H,
                },
                Gate::Cnot {
                    control: 0,
                    target: 2,
                },
            ],
        };
        let rng = RunRng::new(7);
        let a: Vec<String> = (0..20)
            .map(|i| sample_measurement(&circ, &state, &rng, i).unwrap().bitstring())
            .collect();
        let b: Vec<String> = (0..20)
            .map(|i| sample_measurement(&circ, &state, &rng, i).unwrap().bitstring())
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn ground_state_of_single_qubit_hamiltonians() {
        let h = parse_pauli_list("1.0 Z").unwrap();
        let (state, energy, degenerate) = ground_state::<f64>(&h).unwrap();
        assert!((energy + 1.0).abs() < 1e-10);
        assert!(!degenerate);
        assert!(state.amplitudes()[1].norm() > 0.999);

        let h = parse_pauli_list("-1.0 X").unwrap();
        let (state, energy, _) = ground_state::<f64>(&h).unwrap();
        assert!((energy + 1.0).abs() < 1e-10);
        let probs = state.probabilities();
        assert!((probs[0] - 0.5).abs() < 1e-10);
        assert!((probs[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn ground_state_flags_degeneracy() {
        // H = Z on one of two qubits: the other qubit is free.
        let mut set = crate::pauli::WeightedPauliSet::new(2);
        set.insert(WeightedPauli::new(parse_pauli("ZI").unwrap(), 1.0))
            .unwrap();
        let (_, energy, degenerate) = ground_state::<f64>(&set).unwrap();
        assert!((energy + 1.0).abs() < 1e-10);
        assert!(degenerate);
    }

    #[test]
    fn expectation_matches_known_values() {
        let state = StateVector::<f64>::zero_state(2).unwrap();
        assert!((state.expectation(&parse_pauli("ZI").unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!((state.expectation(&parse_pauli("XI").unwrap()).unwrap()).abs() < 1e-12);
        // Bell state via H + CNOT: <XX> = <ZZ> = 1, <YY> = -1.
        let circ = Circuit {
            n: 2,
            gates: vec![
                Gate::Single {
                    qubit: 0,
                    c: SingleClifford::H,
                },
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
            ],
        };
        let bell = state.apply_circuit(&circ).unwrap();
        assert!((bell.expectation(&parse_pauli("XX").unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!((bell.expectation(&parse_pauli("ZZ").unwrap()).unwrap() - 1.0).abs() < 1e-12);
        assert!((bell.expectation(&parse_pauli("YY").unwrap()).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_total_variation_close_to_born() {
        // 2-qubit state rotated by a small circuit; 10^5 samples.
        let state = StateVector::<f64>::zero_state(2).unwrap();
        let circ = Circuit {
            n: 2,
            gates: vec![
                Gate::Single {
                    qubit: 0,
                    c: SingleClifford::SH,
                },
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
                Gate::Single {
                    qubit: 1,
                    c: SingleClifford::S,
                },
            ],
        };
        let rotated = state.apply_circuit(&circ).unwrap();
        let exact = rotated.probabilities();
        let rng = RunRng::new(11);
        let shots = 100_000usize;
        let mut counts = vec![0usize; exact.len()];
        let mut shot_rng = rng.shot(0);
        for _ in 0..shots {
            counts[sample_index(&exact, &mut shot_rng)] += 1;
        }
        let tv: f64 = exact
            .iter()
            .zip(&counts)
            .map(|(p, c)| (p - *c as f64 / shots as f64).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "tv = {tv}");
    }

    #[test]
    fn statevector_rejects_dimension_mismatch() {
        let state = StateVector::<f64>::zero_state(2).unwrap();
        let circ = Circuit::identity(3);
        assert!(state.apply_circuit(&circ).is_err());
    }
}
