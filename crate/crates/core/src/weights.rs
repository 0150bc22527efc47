//! Pauli-weight computation: the probability p(P) that a measurement drawn
//! from an (optionally partially derandomized) ansatz diagonalizes P.
//!
//! Distributions over conjugated Paulis evolve like a Markov chain on
//! doubled Pauli strings. Every gate becomes a column-stochastic transfer
//! matrix; fixed Clifford gates become permutation matrices. The full
//! brickwork network contracts as a trace of per-qubit-pair staircase
//! slices whose bond dimension is 4^(d-1) in the Pauli basis and 2^(d-1)
//! in the signature basis (valid when every single-qubit gate is twirled).

use serde::{Deserialize, Serialize};

use crate::ansatz::EnsembleSpec;
use crate::circuit::{Gate, SingleClifford};
use crate::error::{Error, Result};
use crate::pauli::{Axis, PauliString};
use crate::scalar::Real;

/// Operator basis used by the transfer matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightBasis {
    /// Per-site dimension 4: I, X, Y, Z.
    Pauli,
    /// Per-site dimension 2: trivial / nontrivial support.
    Signature,
}

impl WeightBasis {
    pub fn site_dim(self) -> usize {
        match self {
            WeightBasis::Pauli => 4,
            WeightBasis::Signature => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arity {
    Single,
    Two,
}

/// A per-gate stochastic matrix over the doubled-Pauli distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferTensor<F> {
    pub basis: WeightBasis,
    pub arity: Arity,
    /// Row-major dim x dim.
    pub matrix: Vec<F>,
    pub dim: usize,
}

impl<F: Real> TransferTensor<F> {
    pub fn entry(&self, row: usize, col: usize) -> F {
        self.matrix[row * self.dim + col]
    }

    /// Every column sums to one and all entries are non-negative.
    pub fn is_column_stochastic(&self, tol: F) -> bool {
        for col in 0..self.dim {
            let mut sum = F::zero();
            for row in 0..self.dim {
                let e = self.entry(row, col);
                if e < F::zero() {
                    return false;
                }
                sum = sum + e;
            }
            if (sum - F::one()).abs() > tol {
                return false;
            }
        }
        true
    }

    pub fn is_permutation(&self) -> bool {
        for col in 0..self.dim {
            let ones = (0..self.dim)
                .filter(|r| self.entry(*r, col) == F::one())
                .count();
            let zeros = (0..self.dim)
                .filter(|r| self.entry(*r, col) == F::zero())
                .count();
            if ones != 1 || zeros != self.dim - 1 {
                return false;
            }
        }
        true
    }
}

/// Gate catalog option, mirroring the ansatz code ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorOption {
    Single(u8),
    Two(u8),
    /// CNOT whose control is the second factor of the pair (occurs on the
    /// periodic wrap pair, where the lower-indexed qubit is the second
    /// tensor factor).
    TwoCnotReversed,
}

fn axis_index(a: Axis) -> usize {
    match a {
        Axis::I => 0,
        Axis::X => 1,
        Axis::Y => 2,
        Axis::Z => 3,
    }
}

fn index_axis(k: usize) -> Axis {
    match k {
        0 => Axis::I,
        1 => Axis::X,
        2 => Axis::Y,
        3 => Axis::Z,
        _ => unreachable!(),
    }
}

/// The exact transfer matrix of one gate option.
pub fn transfer_tensor<F: Real>(option: TensorOption, basis: WeightBasis) -> Result<TransferTensor<F>> {
    let third = F::from_f64_exact(1.0 / 3.0);
    match (option, basis) {
        (TensorOption::Single(code), WeightBasis::Pauli) => {
            let mut m = vec![F::zero(); 16];
            if code == 0 {
                m[0] = F::one();
                for r in 1..4 {
                    for c in 1..4 {
                        m[r * 4 + c] = third;
                    }
                }
            } else {
                let g = crate::ansatz::single_code_gate(code);
                for c in 0..4 {
                    let (img, _) = g.image(index_axis(c));
                    m[axis_index(img) * 4 + c] = F::one();
                }
            }
            Ok(TransferTensor {
                basis,
                arity: Arity::Single,
                matrix: m,
                dim: 4,
            })
        }
        (TensorOption::Single(code), WeightBasis::Signature) => {
            if code != 0 {
                return Err(Error::Unsupported(
                    "signature basis requires twirled single-qubit gates".into(),
                ));
            }
            // The twirl is already absorbed into the basis.
            Ok(TransferTensor {
                basis,
                arity: Arity::Single,
                matrix: vec![F::one(), F::zero(), F::zero(), F::one()],
                dim: 2,
            })
        }
        (TensorOption::Two(0), WeightBasis::Pauli) => {
            let mut m = vec![F::zero(); 256];
            m[0] = F::one();
            let fifteenth = F::from_f64_exact(1.0 / 15.0);
            for r in 1..16 {
                for c in 1..16 {
                    m[r * 16 + c] = fifteenth;
                }
            }
            Ok(TransferTensor {
                basis,
                arity: Arity::Two,
                matrix: m,
                dim: 16,
            })
        }
        (TensorOption::Two(code), WeightBasis::Pauli) if code <= 3 => {
            Ok(two_qubit_permutation(two_gate(code, 0, 1)))
        }
        (TensorOption::TwoCnotReversed, WeightBasis::Pauli) => Ok(two_qubit_permutation(Some(
            Gate::Cnot {
                control: 1,
                target: 0,
            },
        ))),
        (TensorOption::Two(0), WeightBasis::Signature) => {
            let fifth = F::from_f64_exact(0.2);
            let three_fifths = F::from_f64_exact(0.6);
            let mut m = vec![F::zero(); 16];
            m[0] = F::one();
            for c in 1..4 {
                m[4 + c] = fifth;
                m[8 + c] = fifth;
                m[12 + c] = three_fifths;
            }
            Ok(TransferTensor {
                basis,
                arity: Arity::Two,
                matrix: m,
                dim: 4,
            })
        }
        (TensorOption::Two(1), WeightBasis::Signature) => {
            let mut m = vec![F::zero(); 16];
            for k in 0..4 {
                m[k * 4 + k] = F::one();
            }
            Ok(TransferTensor {
                basis,
                arity: Arity::Two,
                matrix: m,
                dim: 4,
            })
        }
        (TensorOption::Two(2) | TensorOption::TwoCnotReversed, WeightBasis::Signature) => {
            // Symmetric under factor exchange: one-sided support stays
            // one-sided with probability 1/3 and spreads with 2/3.
            let mut m = vec![F::zero(); 16];
            let two_ninths = F::from_f64_exact(2.0 / 9.0);
            let two_thirds = F::from_f64_exact(2.0 / 3.0);
            let five_ninths = F::from_f64_exact(5.0 / 9.0);
            m[0] = F::one();
            m[5] = third;
            m[10] = third;
            m[7] = two_ninths;
            m[11] = two_ninths;
            m[13] = two_thirds;
            m[14] = two_thirds;
            m[15] = five_ninths;
            Ok(TransferTensor {
                basis,
                arity: Arity::Two,
                matrix: m,
                dim: 4,
            })
        }
        (TensorOption::Two(3), WeightBasis::Signature) => {
            let mut m = vec![F::zero(); 16];
            m[0] = F::one();
            m[1 * 4 + 2] = F::one();
            m[2 * 4 + 1] = F::one();
            m[15] = F::one();
            Ok(TransferTensor {
                basis,
                arity: Arity::Two,
                matrix: m,
                dim: 4,
            })
        }
        (TensorOption::Two(code), _) => {
            Err(Error::Domain(format!("two-qubit code {code} out of range")))
        }
    }
}

fn two_gate(code: u8, a: usize, b: usize) -> Option<Gate> {
    match code {
        1 => None,
        2 => Some(Gate::Cnot {
            control: a,
            target: b,
        }),
        3 => Some(Gate::Swap { a, b }),
        _ => unreachable!("fixed two-qubit code"),
    }
}

/// Unsigned conjugation permutation of a fixed two-qubit gate, as a 16x16
/// matrix over (first site digit * 4 + second site digit).
fn two_qubit_permutation<F: Real>(gate: Option<Gate>) -> TransferTensor<F> {
    let mut m = vec![F::zero(); 256];
    for c in 0..16 {
        let mut p = PauliString::identity(2);
        p.set_site(0, index_axis(c / 4));
        p.set_site(1, index_axis(c % 4));
        if let Some(g) = gate {
            g.conjugate_mut(&mut p);
        }
        let r = axis_index(p.site(0)) * 4 + axis_index(p.site(1));
        m[r * 16 + c] = F::one();
    }
    TransferTensor {
        basis: WeightBasis::Pauli,
        arity: Arity::Two,
        matrix: m,
        dim: 16,
    }
}

/// Measurement vector: picks out the I and Z components of the evolved
/// distribution (trivial support keeps weight 1, nontrivial drops to 1/3 in
/// the signature basis).
pub fn measurement_vector<F: Real>(basis: WeightBasis) -> Vec<F> {
    match basis {
        WeightBasis::Pauli => vec![F::one(), F::zero(), F::zero(), F::one()],
        WeightBasis::Signature => vec![F::one(), F::from_f64_exact(1.0 / 3.0)],
    }
}

/// Immutable tensor catalog plus contraction workspace.
pub struct WeightEngine<F: Real> {
    single_pauli: Vec<Vec<F>>,
    two_pauli: Vec<Vec<F>>,
    two_pauli_reversed_cnot: Vec<F>,
    two_sig: Vec<Vec<F>>,
    m_pauli: Vec<F>,
    m_sig: Vec<F>,
}

impl<F: Real> Default for WeightEngine<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> WeightEngine<F> {
    pub fn new() -> WeightEngine<F> {
        let single_pauli = (0..=6u8)
            .map(|c| {
                transfer_tensor::<F>(TensorOption::Single(c), WeightBasis::Pauli)
                    .expect("catalog")
                    .matrix
            })
            .collect();
        let two_pauli = (0..=3u8)
            .map(|c| {
                transfer_tensor::<F>(TensorOption::Two(c), WeightBasis::Pauli)
                    .expect("catalog")
                    .matrix
            })
            .collect();
        let two_pauli_reversed_cnot =
            transfer_tensor::<F>(TensorOption::TwoCnotReversed, WeightBasis::Pauli)
                .expect("catalog")
                .matrix;
        let two_sig = (0..=3u8)
            .map(|c| {
                transfer_tensor::<F>(TensorOption::Two(c), WeightBasis::Signature)
                    .expect("catalog")
                    .matrix
            })
            .collect();
        WeightEngine {
            single_pauli,
            two_pauli,
            two_pauli_reversed_cnot,
            two_sig,
            m_pauli: measurement_vector(WeightBasis::Pauli),
            m_sig: measurement_vector(WeightBasis::Signature),
        }
    }

    /// Pauli weight of `p` under `spec`, in [0, 1].
    ///
    /// Deterministic specs are routed through exact tableau conjugation and
    /// return exactly 0.0 or 1.0. Otherwise a staircase contraction runs in
    /// the signature basis when every single-qubit gate is still twirled,
    /// in the Pauli basis when some are fixed.
    pub fn pauli_weight(&self, spec: &EnsembleSpec, p: &PauliString) -> Result<F> {
        if spec.n() != p.n() {
            return Err(Error::Dimension(format!(
                "pauli on {} qubits, spec on {}",
                p.n(),
                spec.n()
            )));
        }
        if spec.is_deterministic() {
            let circuit = spec.realize_fixed_circuit()?;
            return Ok(if circuit.diagonalizes(p)? {
                F::one()
            } else {
                F::zero()
            });
        }
        if spec.all_singles_random() {
            Ok(self.staircase(spec, p, WeightBasis::Signature))
        } else {
            Ok(self.staircase(spec, p, WeightBasis::Pauli))
        }
    }

    fn single_matrix(&self, basis: WeightBasis, code: u8) -> Option<&[F]> {
        match basis {
            WeightBasis::Pauli => Some(&self.single_pauli[code as usize]),
            WeightBasis::Signature => None,
        }
    }

    fn two_matrix(&self, basis: WeightBasis, code: u8, control_first: bool) -> &[F] {
        match basis {
            WeightBasis::Pauli => {
                if code == 2 && !control_first {
                    &self.two_pauli_reversed_cnot
                } else {
                    &self.two_pauli[code as usize]
                }
            }
            WeightBasis::Signature => &self.two_sig[code as usize],
        }
    }

    fn site_vector(&self, basis: WeightBasis, a: Axis) -> Vec<F> {
        match basis {
            WeightBasis::Pauli => {
                let mut v = vec![F::zero(); 4];
                v[axis_index(a)] = F::one();
                v
            }
            WeightBasis::Signature => {
                if a == Axis::I {
                    vec![F::one(), F::zero()]
                } else {
                    vec![F::zero(), F::one()]
                }
            }
        }
    }

    fn mmt_vector(&self, basis: WeightBasis) -> &[F] {
        match basis {
            WeightBasis::Pauli => &self.m_pauli,
            WeightBasis::Signature => &self.m_sig,
        }
    }

    /// Staircase trace-of-matrix-product contraction. Odd n is padded with a
    /// virtual idle wire carrying identity gates.
    fn staircase(&self, spec: &EnsembleSpec, p: &PauliString, basis: WeightBasis) -> F {
        let view = PaddedView::new(spec);
        let k = basis.site_dim();
        let d = spec.d();
        let m = self.mmt_vector(basis);

        // Effective initial vector of a wire: single layer 1 already applied.
        let init_vec = |wire: usize| -> Vec<F> {
            let a = view.wire_axis(p, wire);
            let v = self.site_vector(basis, a);
            match self.single_matrix(basis, view.single_code(1, wire)) {
                Some(s) => mat_vec(s, &v, k),
                None => v,
            }
        };
        // Effective measurement row of a wire: single layer d+1 then m.
        let mmt_vec = |wire: usize| -> Vec<F> {
            match self.single_matrix(basis, view.single_code(d + 1, wire)) {
                Some(s) => vec_mat(m, s, k),
                None => m.to_vec(),
            }
        };

        if d == 0 {
            let mut total = F::one();
            for wire in 0..spec.n() {
                let v = init_vec(wire);
                let mm = self.mmt_vector(basis);
                let mut dot = F::zero();
                for i in 0..k {
                    dot = dot + mm[i] * v[i];
                }
                total = total * dot;
            }
            return total;
        }

        let n_eff = view.n_eff;
        let slices = n_eff / 2;
        let bond = k.pow(d as u32 - 1);
        let mut acc: Option<Vec<F>> = None;
        let o1 = (d - 1) % 2;

        for j in 0..slices {
            // Staircase slice j: gate of layer l sits on wires
            // (2j + o1 + l - 1, +1) mod n_eff.
            let kk = k * k;
            let mut t: Vec<F> = Vec::new(); // axes: outs.., up, ins..
            for layer in 1..=d {
                let lo = (2 * j + o1 + layer - 1) % n_eff;
                let hi = (lo + 1) % n_eff;
                let (code, control_first) = view.two_code(layer, lo);
                let g = self.two_matrix(basis, code, control_first);
                // Fold the single-qubit layer `layer` into the gate inputs.
                let slo = self.single_matrix(basis, view.single_code(layer, lo));
                let shi = self.single_matrix(basis, view.single_code(layer, hi));
                let e = fold_singles(g, slo, shi, k);

                if layer == 1 {
                    let x = kron(&init_vec(lo), &init_vec(hi));
                    let y = mat_vec(&e, &x, kk);
                    if d == 1 {
                        let w = kron(&mmt_vec(lo), &mmt_vec(hi));
                        let mut scalar = F::zero();
                        for i in 0..kk {
                            scalar = scalar + w[i] * y[i];
                        }
                        t = vec![scalar];
                    } else {
                        // t[out_1, up] = y[out_1 * k + up]
                        t = y;
                    }
                } else if layer < d {
                    // t'[(outs,out_l), up', (ins,in_l)]
                    //   = sum_up e[(out_l,up'),(up,in_l)] t[outs, up, ins]
                    let outs = k.pow(layer as u32 - 1);
                    let ins = k.pow(layer as u32 - 2);
                    let mut t2 = vec![F::zero(); outs * k * k * ins * k];
                    for o in 0..outs {
                        for up in 0..k {
                            for i in 0..ins {
                                let val = t[(o * k + up) * ins + i];
                                if val == F::zero() {
                                    continue;
                                }
                                for out_l in 0..k {
                                    for up2 in 0..k {
                                        for in_l in 0..k {
                                            let coef =
                                                e[(out_l * k + up2) * kk + (up * k + in_l)];
                                            if coef == F::zero() {
                                                continue;
                                            }
                                            let idx = ((((o * k + out_l) * k + up2) * ins + i)
                                                * k)
                                                + in_l;
                                            t2[idx] = t2[idx] + coef * val;
                                        }
                                    }
                                }
                            }
                        }
                    }
                    t = t2;
                } else {
                    // Final gate: both outputs contract with measurements.
                    let w_pair = kron(&mmt_vec(lo), &mmt_vec(hi));
                    // w[(up, in_d)] = sum_{lo,hi} w_pair[lo*k+hi] e[(lo,hi),(up,in_d)]
                    let w = vec_mat(&w_pair, &e, kk);
                    let outs = k.pow(d as u32 - 1);
                    let ins = k.pow(d as u32 - 2);
                    let mut t2 = vec![F::zero(); outs * ins * k];
                    for o in 0..outs {
                        for up in 0..k {
                            for i in 0..ins {
                                let val = t[(o * k + up) * ins + i];
                                if val == F::zero() {
                                    continue;
                                }
                                for in_d in 0..k {
                                    let idx = (o * ins + i) * k + in_d;
                                    t2[idx] = t2[idx] + w[up * k + in_d] * val;
                                }
                            }
                        }
                    }
                    t = t2;
                }
            }
            // t is now the bond x bond slice matrix (row-major).
            debug_assert_eq!(t.len(), bond * bond);
            acc = Some(match acc {
                None => t,
                Some(a) => mat_mul_square(&a, &t, bond),
            });
        }

        let a = acc.expect("at least one slice");
        let mut trace = F::zero();
        for i in 0..bond {
            trace = trace + a[i * bond + i];
        }
        trace
    }

    /// Dense reference: propagates the full 4^n distribution through every
    /// gate and contracts the measurement vector at each site. Exact but
    /// exponential; n is capped at 12.
    pub fn pauli_weight_dense(&self, spec: &EnsembleSpec, p: &PauliString) -> Result<F> {
        if spec.n() != p.n() {
            return Err(Error::Dimension(format!(
                "pauli on {} qubits, spec on {}",
                p.n(),
                spec.n()
            )));
        }
        if spec.n() > 12 {
            return Err(Error::Resource(format!(
                "dense weight needs a 4^n vector; n = {} exceeds 12",
                spec.n()
            )));
        }
        let n = spec.n();
        let d = spec.d();
        let size = 1usize << (2 * n);
        let mut v = vec![F::zero(); size];
        let mut start = 0usize;
        for s in 0..n {
            start = start * 4 + axis_index(p.site(s));
        }
        v[start] = F::one();

        for layer in 1..=d + 1 {
            for q in 0..n {
                let code = spec.s_codes()[spec.s_index(layer, q)];
                apply_single_dense(&mut v, n, q, &self.single_pauli[code as usize]);
            }
            if layer <= d {
                for (pos, (a, b)) in spec.layer_pairs(layer)?.into_iter().enumerate() {
                    let code = spec.t_codes()[spec.t_index(layer, pos)];
                    if code == 1 {
                        continue;
                    }
                    let control_first = a < b;
                    let m = self.two_matrix(WeightBasis::Pauli, code, control_first);
                    apply_two_dense(&mut v, n, a, b, m);
                }
            }
        }

        // Contract the measurement vector site by site (last site first).
        let m = &self.m_pauli;
        let mut len = size;
        for _ in 0..n {
            len /= 4;
            for i in 0..len {
                let base = i * 4;
                v[i] = m[0] * v[base] + m[1] * v[base + 1] + m[2] * v[base + 2] + m[3] * v[base + 3];
            }
        }
        Ok(v[0])
    }
}

/// View of a spec padded to an even wire count; the virtual wire carries
/// identity gates only.
struct PaddedView<'a> {
    spec: &'a EnsembleSpec,
    n_eff: usize,
}

impl<'a> PaddedView<'a> {
    fn new(spec: &'a EnsembleSpec) -> PaddedView<'a> {
        let n = spec.n();
        PaddedView {
            spec,
            n_eff: if n % 2 == 0 { n } else { n + 1 },
        }
    }

    fn wire_axis(&self, p: &PauliString, wire: usize) -> Axis {
        if wire < self.spec.n() {
            p.site(wire)
        } else {
            Axis::I
        }
    }

    fn single_code(&self, layer: usize, wire: usize) -> u8 {
        if wire < self.spec.n() {
            self.spec.s_codes()[self.spec.s_index(layer, wire)]
        } else {
            1
        }
    }

    /// Two-qubit code of the gate whose lower wire is `lo` in `layer`, plus
    /// whether the CNOT control (lower-indexed qubit) is the first factor.
    fn two_code(&self, layer: usize, lo: usize) -> (u8, bool) {
        let n = self.spec.n();
        let hi = (lo + 1) % self.n_eff;
        if lo >= n || hi >= n {
            return (1, true);
        }
        let offset = (self.spec.d() - layer) % 2;
        let pos = ((lo + self.n_eff - offset) % self.n_eff) / 2;
        debug_assert!(pos < n / 2);
        let code = self.spec.t_codes()[self.spec.t_index(layer, pos)];
        (code, lo < hi)
    }
}

fn mat_vec<F: Real>(m: &[F], v: &[F], dim: usize) -> Vec<F> {
    let mut out = vec![F::zero(); dim];
    for (r, o) in out.iter_mut().enumerate() {
        let mut acc = F::zero();
        for c in 0..dim {
            acc = acc + m[r * dim + c] * v[c];
        }
        *o = acc;
    }
    out
}

fn vec_mat<F: Real>(v: &[F], m: &[F], dim: usize) -> Vec<F> {
    let mut out = vec![F::zero(); dim];
    for (c, o) in out.iter_mut().enumerate() {
        let mut acc = F::zero();
        for r in 0..dim {
            acc = acc + v[r] * m[r * dim + c];
        }
        *o = acc;
    }
    out
}

fn kron<F: Real>(a: &[F], b: &[F]) -> Vec<F> {
    let mut out = vec![F::zero(); a.len() * b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

fn mat_mul_square<F: Real>(a: &[F], b: &[F], dim: usize) -> Vec<F> {
    let mut out = vec![F::zero(); dim * dim];
    for i in 0..dim {
        for l in 0..dim {
            let v = a[i * dim + l];
            if v == F::zero() {
                continue;
            }
            for j in 0..dim {
                out[i * dim + j] = out[i * dim + j] + v * b[l * dim + j];
            }
        }
    }
    out
}

/// e = g . (s_lo (x) s_hi), with missing singles treated as identity.
fn fold_singles<F: Real>(g: &[F], slo: Option<&[F]>, shi: Option<&[F]>, k: usize) -> Vec<F> {
    match (slo, shi) {
        (None, None) => g.to_vec(),
        _ => {
            let kk = k * k;
            let id: Vec<F> = {
                let mut m = vec![F::zero(); k * k];
                for i in 0..k {
                    m[i * k + i] = F::one();
                }
                m
            };
            let sl = slo.unwrap_or(&id);
            let sh = shi.unwrap_or(&id);
            let mut s = vec![F::zero(); kk * kk];
            for r1 in 0..k {
                for r2 in 0..k {
                    for c1 in 0..k {
                        for c2 in 0..k {
                            s[(r1 * k + r2) * kk + (c1 * k + c2)] = sl[r1 * k + c1] * sh[r2 * k + c2];
                        }
                    }
                }
            }
            // g . s
            let mut out = vec![F::zero(); kk * kk];
            for i in 0..kk {
                for l in 0..kk {
                    let v = g[i * kk + l];
                    if v == F::zero() {
                        continue;
                    }
                    for j in 0..kk {
                        out[i * kk + j] = out[i * kk + j] + v * s[l * kk + j];
                    }
                }
            }
            out
        }
    }
}

fn apply_single_dense<F: Real>(v: &mut [F], n: usize, site: usize, m: &[F]) {
    let stride = 1usize << (2 * (n - 1 - site));
    let block = stride * 4;
    let mut tmp = [F::zero(); 4];
    let mut base = 0;
    while base < v.len() {
        for r in 0..stride {
            for (dig, t) in tmp.iter_mut().enumerate() {
                *t = v[base + r + dig * stride];
            }
            for dig in 0..4 {
                let mut acc = F::zero();
                for c in 0..4 {
                    acc = acc + m[dig * 4 + c] * tmp[c];
                }
                v[base + r + dig * stride] = acc;
            }
        }
        base += block;
    }
}

fn apply_two_dense<F: Real>(v: &mut [F], n: usize, s1: usize, s2: usize, m: &[F]) {
    let st1 = 1usize << (2 * (n - 1 - s1));
    let st2 = 1usize << (2 * (n - 1 - s2));
    let size = v.len();
    let mut tmp = [F::zero(); 16];
    // Enumerate indices whose digits at s1 and s2 are both zero.
    let mut idx = 0usize;
    let mut visited = 0usize;
    let total = size / 16;
    while visited < total {
        let d1 = (idx / st1) % 4;
        let d2 = (idx / st2) % 4;
        if d1 == 0 && d2 == 0 {
            for a in 0..4 {
                for b in 0..4 {
                    tmp[a * 4 + b] = v[idx + a * st1 + b * st2];
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    let r = a * 4 + b;
                    let mut acc = F::zero();
                    for c in 0..16 {
                        acc = acc + m[r * 16 + c] * tmp[c];
                    }
                    v[idx + a * st1 + b * st2] = acc;
                }
            }
            visited += 1;
        }
        idx += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{GateOption, SlotRef};

    fn engine() -> WeightEngine<f64> {
        WeightEngine::new()
    }

    #[test]
    fn hadamard_tensor_swaps_x_and_z() {
        let t = transfer_tensor::<f64>(TensorOption::Single(2), WeightBasis::Pauli).unwrap();
        assert!(t.is_permutation());
        assert_eq!(t.entry(0, 0), 1.0);
        assert_eq!(t.entry(3, 1), 1.0); // X -> Z
        assert_eq!(t.entry(2, 2), 1.0); // Y fixed
        assert_eq!(t.entry(1, 3), 1.0); // Z -> X
    }

    #[test]
    fn single_twirl_tensor() {
        let t = transfer_tensor::<f64>(TensorOption::Single(0), WeightBasis::Pauli).unwrap();
        assert!(t.is_column_stochastic(1e-12));
        for r in 1..4 {
            for c in 1..4 {
                assert!((t.entry(r, c) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        assert_eq!(t.entry(0, 0), 1.0);
    }

    #[test]
    fn signature_cnot_columns() {
        let t = transfer_tensor::<f64>(TensorOption::Two(2), WeightBasis::Signature).unwrap();
        let col = |c: usize| -> Vec<f64> { (0..4).map(|r| t.entry(r, c)).collect() };
        assert_eq!(col(0), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(col(1), vec![0.0, 1.0 / 3.0, 0.0, 2.0 / 3.0]);
        assert_eq!(col(2), vec![0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(col(3), vec![0.0, 2.0 / 9.0, 2.0 / 9.0, 5.0 / 9.0]);
    }

    #[test]
    fn all_tensors_column_stochastic_and_fixed_are_permutations() {
        for c in 0..=6u8 {
            let t = transfer_tensor::<f64>(TensorOption::Single(c), WeightBasis::Pauli).unwrap();
            assert!(t.is_column_stochastic(1e-12), "single {c}");
            if c != 0 {
                assert!(t.is_permutation(), "single {c}");
            }
        }
        for c in 0..=3u8 {
            let t = transfer_tensor::<f64>(TensorOption::Two(c), WeightBasis::Pauli).unwrap();
            assert!(t.is_column_stochastic(1e-12), "two {c}");
            if c != 0 {
                assert!(t.is_permutation(), "two {c}");
            }
            let t = transfer_tensor::<f64>(TensorOption::Two(c), WeightBasis::Signature).unwrap();
            assert!(t.is_column_stochastic(1e-12), "two sig {c}");
        }
        let t =
            transfer_tensor::<f64>(TensorOption::TwoCnotReversed, WeightBasis::Pauli).unwrap();
        assert!(t.is_permutation());
    }

    #[test]
    fn signature_rejects_fixed_singles() {
        assert!(transfer_tensor::<f64>(TensorOption::Single(2), WeightBasis::Signature).is_err());
    }

    #[test]
    fn measurement_vectors() {
        assert_eq!(measurement_vector::<f64>(WeightBasis::Pauli), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(
            measurement_vector::<f64>(WeightBasis::Signature),
            vec![1.0, 1.0 / 3.0]
        );
        // Contracting (1,0,0,1) with the twirl image of Z gives 1/3.
        let t = transfer_tensor::<f64>(TensorOption::Single(0), WeightBasis::Pauli).unwrap();
        let z = [0.0, 0.0, 0.0, 1.0];
        let img = mat_vec(&t.matrix, &z, 4);
        let m = measurement_vector::<f64>(WeightBasis::Pauli);
        let dot: f64 = (0..4).map(|i| m[i] * img[i]).sum();
        assert!((dot - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn identity_pauli_always_weight_one() {
        let eng = engine();
        for (n, d) in [(1usize, 0usize), (3, 1), (4, 2), (5, 3)] {
            let spec = EnsembleSpec::all_random(n, d).unwrap();
            let p = PauliString::identity(n);
            let w = eng.pauli_weight(&spec, &p).unwrap();
            assert!((w - 1.0).abs() < 1e-12, "n={n} d={d} w={w}");
        }
    }

    #[test]
    fn single_qubit_twirl_z_is_one_third() {
        let eng = engine();
        let spec = EnsembleSpec::all_random(1, 0).unwrap();
        let z = crate::pauli::parse_pauli("Z").unwrap();
        let w = eng.pauli_weight(&spec, &z).unwrap();
        assert!((w - 1.0 / 3.0).abs() < 1e-15);
        let dense = eng.pauli_weight_dense(&spec, &z).unwrap();
        assert!((dense - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_cnot_weights_are_exact() {
        // n=2, d=1, two-qubit slot = CNOT, all singles identity.
        let spec = EnsembleSpec::from_codes(2, 1, vec![2], vec![1, 1, 1, 1]).unwrap();
        let eng = engine();
        let xi = crate::pauli::parse_pauli("XI").unwrap();
        let zi = crate::pauli::parse_pauli("ZI").unwrap();
        assert_eq!(eng.pauli_weight(&spec, &xi).unwrap(), 0.0);
        assert_eq!(eng.pauli_weight(&spec, &zi).unwrap(), 1.0);
        // The dense route agrees.
        assert!((eng.pauli_weight_dense(&spec, &xi).unwrap() - 0.0).abs() < 1e-12);
        assert!((eng.pauli_weight_dense(&spec, &zi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fully_identity_spec_measures_z_strings() {
        let spec = EnsembleSpec::from_codes(3, 0, vec![], vec![1, 1, 1]).unwrap();
        let eng = engine();
        let all_z = crate::pauli::parse_pauli("ZZZ").unwrap();
        let x_site = crate::pauli::parse_pauli("IXI").unwrap();
        assert_eq!(eng.pauli_weight(&spec, &all_z).unwrap(), 1.0);
        assert_eq!(eng.pauli_weight(&spec, &x_site).unwrap(), 0.0);
        assert!((eng.pauli_weight_dense(&spec, &all_z).unwrap() - 1.0).abs() < 1e-12);
        assert!((eng.pauli_weight_dense(&spec, &x_site).unwrap() - 0.0).abs() < 1e-12);
    }

    #[test]
    fn staircase_matches_dense_on_random_mixed_specs() {
        use rand::prelude::*;
        let eng = engine();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let n = rng.gen_range(2..=5);
            let d = rng.gen_range(0..=3);
            let mut spec = EnsembleSpec::all_random(n, d).unwrap();
            for layer in 1..=d {
                for pos in 0..n / 2 {
                    if rng.gen_bool(0.6) {
                        spec = spec
                            .assign(
                                SlotRef::Two { layer, pos },
                                GateOption::TwoQubit(rng.gen_range(1..=3)),
                            )
                            .unwrap();
                    }
                }
            }
            for layer in 1..=d + 1 {
                for qubit in 0..n {
                    if rng.gen_bool(0.5) {
                        spec = spec
                            .assign(
                                SlotRef::Single { layer, qubit },
                                GateOption::SingleQubit(rng.gen_range(1..=6)),
                            )
                            .unwrap();
                    }
                }
            }
            let mut p = PauliString::identity(n);
            for s in 0..n {
                p.set_site(s, index_axis(rng.gen_range(0..4)));
            }
            let fast = eng.pauli_weight(&spec, &p).unwrap();
            let dense = eng.pauli_weight_dense(&spec, &p).unwrap();
            assert!(
                (fast - dense).abs() < 1e-10,
                "n={n} d={d} fast={fast} dense={dense}"
            );
        }
    }

    #[test]
    fn signature_equals_pauli_basis_when_all_singles_random() {
        use rand::prelude::*;
        let eng = engine();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..40 {
            let n = rng.gen_range(2..=6);
            let d = rng.gen_range(1..=3);
            let mut spec = EnsembleSpec::all_random(n, d).unwrap();
            for layer in 1..=d {
                for pos in 0..n / 2 {
                    spec = spec
                        .assign(
                            SlotRef::Two { layer, pos },
                            GateOption::TwoQubit(rng.gen_range(0..=3)),
                        )
                        .unwrap();
                }
            }
            let mut p = PauliString::identity(n);
            for s in 0..n {
                p.set_site(s, index_axis(rng.gen_range(0..4)));
            }
            let sig = eng.staircase(&spec, &p, WeightBasis::Signature);
            let pau = eng.staircase(&spec, &p, WeightBasis::Pauli);
            assert!((sig - pau).abs() < 1e-12, "n={n} d={d} sig={sig} pau={pau}");
        }
    }

    #[test]
    fn normalization_sums_to_two_to_the_n() {
        use rand::prelude::*;
        let eng = engine();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for (n, d) in [(2usize, 1usize), (3, 2), (4, 2)] {
            let mut spec = EnsembleSpec::all_random(n, d).unwrap();
            for layer in 1..=d {
                for pos in 0..n / 2 {
                    spec = spec
                        .assign(
                            SlotRef::Two { layer, pos },
                            GateOption::TwoQubit(rng.gen_range(0..=3)),
                        )
                        .unwrap();
                }
            }
            let mut total = 0.0;
            for idx in 0..(1usize << (2 * n)) {
                let mut p = PauliString::identity(n);
                let mut rest = idx;
                for s in (0..n).rev() {
                    p.set_site(s, index_axis(rest % 4));
                    rest /= 4;
                }
                total += eng.pauli_weight_dense(&spec, &p).unwrap();
            }
            assert!(
                (total - (1u64 << n) as f64).abs() < 1e-8,
                "n={n} d={d} total={total}"
            );
        }
    }

    #[test]
    fn dense_rejects_large_n() {
        let eng = engine();
        let spec = EnsembleSpec::all_random(13, 0).unwrap();
        let p = PauliString::identity(13);
        assert!(matches!(
            eng.pauli_weight_dense(&spec, &p),
            Err(Error::Resource(_))
        ));
    }
}
