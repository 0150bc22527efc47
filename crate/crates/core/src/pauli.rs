//! Exact n-qubit Pauli-string algebra on packed bit masks.
//!
//! A site holds I/X/Y/Z according to its (x, z) bit pair: (0,0)/(1,0)/(1,1)/(0,1).
//! Site 1 in user-facing text is bit 0 internally; rendering reads sites
//! left to right.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the four unit phases ±1, ±i, stored as the exponent of i (mod 4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phase(u8);

impl Phase {
    pub const PLUS_ONE: Phase = Phase(0);
    pub const PLUS_I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_i_exponent(k: i64) -> Phase {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn i_exponent(self) -> u8 {
        self.0
    }

    /// Real value of the phase, or `None` for ±i.
    pub fn as_real(self) -> Option<f64> {
        match self.0 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }

    pub fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            0 => write!(f, "+1"),
            1 => write!(f, "+i"),
            2 => write!(f, "-1"),
            _ => write!(f, "-i"),
        }
    }
}

/// Single-site Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    I,
    X,
    Y,
    Z,
}

impl Axis {
    pub fn from_bits(x: bool, z: bool) -> Axis {
        match (x, z) {
            (false, false) => Axis::I,
            (true, false) => Axis::X,
            (true, true) => Axis::Y,
            (false, true) => Axis::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Axis::I => (false, false),
            Axis::X => (true, false),
            Axis::Y => (true, true),
            Axis::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Axis::I => 'I',
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// An n-qubit Pauli string with a tracked unit phase.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    sign: Phase,
}

fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

impl PauliString {
    /// The identity string on `n` qubits.
    pub fn identity(n: usize) -> PauliString {
        PauliString {
            n,
            x: vec![0; words_for(n)],
            z: vec![0; words_for(n)],
            sign: Phase::PLUS_ONE,
        }
    }

    /// Build from per-site letters, sign +1.
    pub fn from_axes(axes: &[Axis]) -> PauliString {
        let mut p = PauliString::identity(axes.len());
        for (k, a) in axes.iter().enumerate() {
            p.set_site(k, *a);
        }
        p
    }

    /// Single-letter string: `letter` on 0-based `site`, identity elsewhere.
    pub fn single(n: usize, site: usize, letter: Axis) -> PauliString {
        let mut p = PauliString::identity(n);
        p.set_site(site, letter);
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sign(&self) -> Phase {
        self.sign
    }

    pub fn set_sign(&mut self, sign: Phase) {
        self.sign = sign;
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn x_bit(&self, site: usize) -> bool {
        self.x[site / 64] >> (site % 64) & 1 == 1
    }

    pub fn z_bit(&self, site: usize) -> bool {
        self.z[site / 64] >> (site % 64) & 1 == 1
    }

    pub fn site(&self, site: usize) -> Axis {
        Axis::from_bits(self.x_bit(site), self.z_bit(site))
    }

    pub fn set_site(&mut self, site: usize, a: Axis) {
        assert!(site < self.n, "site out of range");
        let (xb, zb) = a.bits();
        let w = site / 64;
        let m = 1u64 << (site % 64);
        if xb {
            self.x[w] |= m;
        } else {
            self.x[w] &= !m;
        }
        if zb {
            self.z[w] |= m;
        } else {
            self.z[w] &= !m;
        }
    }

    pub fn sites(&self) -> impl Iterator<Item = Axis> + '_ {
        (0..self.n).map(|k| self.site(k))
    }

    /// Key identifying the string up to sign.
    pub fn mask_key(&self) -> (Vec<u64>, Vec<u64>) {
        (self.x.clone(), self.z.clone())
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|w| *w == 0) && self.z.iter().all(|w| *w == 0)
    }

    /// True when the string contains no X/Y component (i.e. it is diagonal
    /// in the computational basis).
    pub fn is_z_diagonal(&self) -> bool {
        self.x.iter().all(|w| *w == 0)
    }

    /// Number of non-identity sites.
    pub fn support_weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(xw, zw)| (xw | zw).count_ones() as usize)
            .sum()
    }

    fn check_same_n(&self, other: &PauliString) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "pauli strings on {} and {} qubits",
                self.n, other.n
            )));
        }
        Ok(())
    }

    /// Exact product `self · other` including its unit phase.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        self.check_same_n(other)?;
        let mut exponent: i64 =
            i64::from(self.sign.i_exponent()) + i64::from(other.sign.i_exponent());
        let mut x = Vec::with_capacity(self.x.len());
        let mut z = Vec::with_capacity(self.z.len());
        for w in 0..self.x.len() {
            let (x1, z1) = (self.x[w], self.z[w]);
            let (x2, z2) = (other.x[w], other.z[w]);
            // Power of i contributed by each site, by left operand letter:
            //   Y: z2 - x2,   X: z2 (2 x2 - 1),   Z: x2 (1 - 2 z2)
            let y1 = x1 & z1;
            let only_x1 = x1 & !z1;
            let only_z1 = z1 & !x1;
            let plus = (y1 & z2 & !x2).count_ones()
                + (only_x1 & z2 & x2).count_ones()
                + (only_z1 & x2 & !z2).count_ones();
            let minus = (y1 & x2 & !z2).count_ones()
                + (only_x1 & z2 & !x2).count_ones()
                + (only_z1 & x2 & z2).count_ones();
            exponent += i64::from(plus) - i64::from(minus);
            x.push(x1 ^ x2);
            z.push(z1 ^ z2);
        }
        Ok(PauliString {
            n: self.n,
            x,
            z,
            sign: Phase::from_i_exponent(exponent),
        })
    }

    /// Symplectic commutation test: true iff `self` and `other` commute.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_same_n(other)?;
        let mut parity = 0u32;
        for w in 0..self.x.len() {
            parity ^= (self.x[w] & other.z[w]).count_ones() & 1;
            parity ^= (self.z[w] & other.x[w]).count_ones() & 1;
        }
        Ok(parity == 0)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign != Phase::PLUS_ONE {
            write!(f, "({})", self.sign)?;
        }
        for a in self.sites() {
            write!(f, "{}", a.as_char())?;
        }
        Ok(())
    }
}

/// Parse a string over {I, X, Y, Z} into a sign `+1` Pauli string.
pub fn parse_pauli(text: &str) -> Result<PauliString> {
    if text.is_empty() {
        return Err(Error::Parse {
            position: 1,
            message: "empty Pauli string".into(),
        });
    }
    let mut p = PauliString::identity(text.chars().count());
    for (k, c) in text.chars().enumerate() {
        let a = match c {
            'I' => Axis::I,
            'X' => Axis::X,
            'Y' => Axis::Y,
            'Z' => Axis::Z,
            other => {
                return Err(Error::Parse {
                    position: k + 1,
                    message: format!("invalid Pauli character '{other}'"),
                })
            }
        };
        p.set_site(k, a);
    }
    Ok(p)
}

/// A Pauli string with a real coefficient and a non-negative cost weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPauli {
    pub pauli: PauliString,
    /// Coefficient c_P in the operator decomposition (Hamiltonian units).
    pub coefficient: f64,
    /// Relative importance w_P in the cost function; defaults to 1.
    pub cost_weight: f64,
}

impl WeightedPauli {
    pub fn new(pauli: PauliString, coefficient: f64) -> WeightedPauli {
        WeightedPauli {
            pauli,
            coefficient,
            cost_weight: 1.0,
        }
    }
}

/// Coefficients whose magnitude drops below this after merging are dropped.
pub const MERGE_EPS: f64 = 1e-12;

/// A set of weighted Pauli strings sharing one qubit count, with duplicate
/// masks merged by coefficient addition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPauliSet {
    n: usize,
    terms: Vec<WeightedPauli>,
}

impl WeightedPauliSet {
    pub fn new(n: usize) -> WeightedPauliSet {
        WeightedPauliSet {
            n,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(
        n: usize,
        terms: impl IntoIterator<Item = WeightedPauli>,
    ) -> Result<WeightedPauliSet> {
        let mut set = WeightedPauliSet::new(n);
        for t in terms {
            set.insert(t)?;
        }
        set.prune();
        Ok(set)
    }

    /// Add a term. A sign on the Pauli is folded into the coefficient; terms
    /// with identical masks have their coefficients summed. Near-zero merged
    /// coefficients are removed by [`prune`](Self::prune).
    pub fn insert(&mut self, mut term: WeightedPauli) -> Result<()> {
        if term.pauli.n() != self.n {
            return Err(Error::Dimension(format!(
                "term on {} qubits in a set on {}",
                term.pauli.n(),
                self.n
            )));
        }
        if term.cost_weight < 0.0 {
            return Err(Error::Domain("cost_weight must be >= 0".into()));
        }
        match term.pauli.sign().as_real() {
            Some(s) => {
                term.coefficient *= s;
                term.pauli.set_sign(Phase::PLUS_ONE);
            }
            None => {
                return Err(Error::Domain(
                    "imaginary-signed Pauli in a Hermitian set".into(),
                ))
            }
        }
        match self
            .terms
            .iter_mut()
            .find(|t| t.pauli.x_words() == term.pauli.x_words() && t.pauli.z_words() == term.pauli.z_words())
        {
            Some(existing) => {
                existing.coefficient += term.coefficient;
                existing.cost_weight = term.cost_weight;
            }
            None => self.terms.push(term),
        }
        Ok(())
    }

    /// Drop terms whose merged coefficient is below [`MERGE_EPS`] in magnitude.
    pub fn prune(&mut self) {
        self.terms.retain(|t| t.coefficient.abs() >= MERGE_EPS);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[WeightedPauli] {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = &WeightedPauli> {
        self.terms.iter()
    }

    /// Set every cost weight to 1.
    pub fn set_uniform_weights(&mut self) {
        for t in &mut self.terms {
            t.cost_weight = 1.0;
        }
    }

    /// Set every cost weight to |c_P|.
    pub fn set_abs_coefficient_weights(&mut self) {
        for t in &mut self.terms {
            t.cost_weight = t.coefficient.abs();
        }
    }

    pub fn sum_abs_coefficients(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }
}

/// Parse the Pauli-list text format: one term per line,
/// `<coefficient> <IXYZ-string>`; the coefficient is optional (default 1.0);
/// `#` starts a comment.
pub fn parse_pauli_list(text: &str) -> Result<WeightedPauliSet> {
    let mut terms: Vec<WeightedPauli> = Vec::new();
    let mut n: Option<usize> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let first = fields.next().unwrap();
        let (coeff, pauli_text) = match fields.next() {
            Some(second) => {
                let c: f64 = first.parse().map_err(|_| Error::Parse {
                    position: lineno + 1,
                    message: format!("invalid coefficient '{first}'"),
                })?;
                (c, second)
            }
            None => (1.0, first),
        };
        let pauli = parse_pauli(pauli_text).map_err(|e| Error::Parse {
            position: lineno + 1,
            message: format!("{e}"),
        })?;
        match n {
            None => n = Some(pauli.n()),
            Some(expect) if expect != pauli.n() => {
                return Err(Error::Parse {
                    position: lineno + 1,
                    message: format!("term on {} qubits, expected {}", pauli.n(), expect),
                })
            }
            _ => {}
        }
        terms.push(WeightedPauli::new(pauli, coeff));
    }
    let n = n.ok_or_else(|| Error::Parse {
        position: 1,
        message: "no terms in Pauli list".into(),
    })?;
    WeightedPauliSet::from_terms(n, terms)
}

/// Render a set back to the Pauli-list text format.
pub fn render_pauli_list(set: &WeightedPauliSet) -> String {
    let mut out = String::new();
    for t in set.terms() {
        let letters: String = t.pauli.sites().map(Axis::as_char).collect();
        out.push_str(&format!("{:.12} {}\n", t.coefficient, letters));
    }
    out
}

/// Hitting counts h(P) = Σ_i p_i(P), keyed by the Pauli masks.
#[derive(Debug, Clone, Default)]
pub struct HittingCounts {
    counts: HashMap<(Vec<u64>, Vec<u64>), f64>,
}

impl HittingCounts {
    pub fn new() -> HittingCounts {
        HittingCounts::default()
    }

    pub fn add(&mut self, p: &PauliString, weight: f64) {
        *self.counts.entry(p.mask_key()).or_insert(0.0) += weight;
    }

    pub fn set(&mut self, p: &PauliString, value: f64) {
        self.counts.insert(p.mask_key(), value);
    }

    pub fn get(&self, p: &PauliString) -> f64 {
        self.counts.get(&p.mask_key()).copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.counts.values().copied().fold(f64::INFINITY, f64::min)
    }
}
