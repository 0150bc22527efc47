//! Concrete Clifford gates and fixed measurement circuits.
//!
//! A single-qubit Clifford is stored by its conjugation action: the signed
//! images of X and Z. Global phases are irrelevant for measurements, which
//! leaves 24 distinct elements (6 Pauli permutations x 4 sign choices).

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Axis, PauliString, Phase};

/// Signed single-site Pauli: (letter, negated).
pub type SignedAxis = (Axis, bool);

/// A single-qubit Clifford, up to global phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SingleClifford {
    pub x_img: Axis,
    pub x_neg: bool,
    pub z_img: Axis,
    pub z_neg: bool,
}

/// Elementary single-qubit generators used for matrix synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HsGate {
    H,
    S,
}

impl SingleClifford {
    pub const IDENTITY: SingleClifford = SingleClifford {
        x_img: Axis::X,
        x_neg: false,
        z_img: Axis::Z,
        z_neg: false,
    };

    /// Hadamard: X <-> Z, Y -> -Y.
    pub const H: SingleClifford = SingleClifford {
        x_img: Axis::Z,
        x_neg: false,
        z_img: Axis::X,
        z_neg: false,
    };

    /// Phase gate: X -> Y, Z fixed.
    pub const S: SingleClifford = SingleClifford {
        x_img: Axis::Y,
        x_neg: false,
        z_img: Axis::Z,
        z_neg: false,
    };

    /// S inverse: X -> -Y, Z fixed.
    pub const S_DAGGER: SingleClifford = SingleClifford {
        x_img: Axis::Y,
        x_neg: true,
        z_img: Axis::Z,
        z_neg: false,
    };

    /// sqrt(X) = HSH: Z -> -Y, X fixed.
    pub const SQRT_X: SingleClifford = SingleClifford {
        x_img: Axis::X,
        x_neg: false,
        z_img: Axis::Y,
        z_neg: true,
    };

    /// H then S: the cycle X -> Z -> Y -> X.
    pub const SH: SingleClifford = SingleClifford {
        x_img: Axis::Z,
        x_neg: false,
        z_img: Axis::Y,
        z_neg: false,
    };

    /// S then H: the cycle X -> Y -> Z -> X.
    pub const HS: SingleClifford = SingleClifford {
        x_img: Axis::Y,
        x_neg: true,
        z_img: Axis::X,
        z_neg: false,
    };

    /// Signed image of a single-site letter under conjugation.
    pub fn image(&self, a: Axis) -> SignedAxis {
        match a {
            Axis::I => (Axis::I, false),
            Axis::X => (self.x_img, self.x_neg),
            Axis::Z => (self.z_img, self.z_neg),
            Axis::Y => {
                // Y = i X Z, so U Y U' = i (U X U')(U Z U').
                let xa = PauliString::single(1, 0, self.x_img);
                let za = PauliString::single(1, 0, self.z_img);
                let mut prod = xa.multiply(&za).expect("single site");
                let mut exp = i64::from(prod.sign().i_exponent()) + 1;
                if self.x_neg {
                    exp += 2;
                }
                if self.z_neg {
                    exp += 2;
                }
                prod.set_sign(Phase::from_i_exponent(exp));
                let neg = match prod.sign() {
                    Phase::PLUS_ONE => false,
                    Phase::MINUS_ONE => true,
                    _ => unreachable!("Clifford image of a Hermitian Pauli is Hermitian"),
                };
                (prod.site(0), neg)
            }
        }
    }

    /// Composition: apply `self` first, then `then`.
    pub fn then(&self, then: &SingleClifford) -> SingleClifford {
        let (xi, xn1) = self.image(Axis::X);
        let (x_img, xn2) = then.image(xi);
        let (zi, zn1) = self.image(Axis::Z);
        let (z_img, zn2) = then.image(zi);
        SingleClifford {
            x_img,
            x_neg: xn1 ^ xn2,
            z_img,
            z_neg: zn1 ^ zn2,
        }
    }

    pub fn inverse(&self) -> SingleClifford {
        SingleClifford::all()
            .iter()
            .copied()
            .find(|k| self.then(k) == SingleClifford::IDENTITY)
            .expect("group inverse")
    }

    /// All 24 elements, in a fixed deterministic order.
    pub fn all() -> &'static [SingleClifford] {
        &catalog().order
    }

    /// A realizing sequence of H and S gates (applied left to right).
    pub fn hs_sequence(&self) -> &'static [HsGate] {
        let cat = catalog();
        let idx = cat
            .order
            .iter()
            .position(|c| c == self)
            .expect("every single-qubit Clifford is in the catalog");
        &cat.sequences[idx]
    }

    /// Unitary 2x2 matrix (one representative of the phase class).
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let f = std::f64::consts::FRAC_1_SQRT_2;
        let zero = Complex64::new(0.0, 0.0);
        let h = [
            [Complex64::new(f, 0.0), Complex64::new(f, 0.0)],
            [Complex64::new(f, 0.0), Complex64::new(-f, 0.0)],
        ];
        let s = [
            [Complex64::new(1.0, 0.0), zero],
            [zero, Complex64::new(0.0, 1.0)],
        ];
        let mut m = [
            [Complex64::new(1.0, 0.0), zero],
            [zero, Complex64::new(1.0, 0.0)],
        ];
        for g in self.hs_sequence() {
            let gm = match g {
                HsGate::H => h,
                HsGate::S => s,
            };
            m = mat_mul(gm, m);
        }
        m
    }
}

fn mat_mul(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

struct Catalog {
    order: Vec<SingleClifford>,
    sequences: Vec<Vec<HsGate>>,
}

/// Enumerate the 24 single-qubit Cliffords by breadth-first products of H, S.
fn catalog() -> &'static Catalog {
    static CATALOG: OnceLock<Catalog> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let mut order = vec![SingleClifford::IDENTITY];
        let mut sequences: Vec<Vec<HsGate>> = vec![vec![]];
        let mut cursor = 0usize;
        while cursor < order.len() {
            let base = order[cursor];
            let base_seq = sequences[cursor].clone();
            for (g, c) in [(HsGate::H, SingleClifford::H), (HsGate::S, SingleClifford::S)] {
                let composed = base.then(&c);
                if !order.contains(&composed) {
                    let mut seq = base_seq.clone();
                    seq.push(g);
                    order.push(composed);
                    sequences.push(seq);
                }
            }
            cursor += 1;
        }
        assert_eq!(order.len(), 24);
        Catalog { order, sequences }
    })
}

/// One placed gate of a fixed measurement circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    Single {
        qubit: usize,
        c: SingleClifford,
    },
    /// CNOT with the stated control and target.
    Cnot {
        control: usize,
        target: usize,
    },
    Swap {
        a: usize,
        b: usize,
    },
    /// iSWAP; produced only by shallow-shadow sampling.
    ISwap {
        a: usize,
        b: usize,
    },
}

impl Gate {
    /// Conjugate `p` in place: p -> U p U'.
    pub fn conjugate_mut(&self, p: &mut PauliString) {
        match *self {
            Gate::Single { qubit, c } => {
                let (img, neg) = c.image(p.site(qubit));
                p.set_site(qubit, img);
                if neg {
                    p.set_sign(p.sign().mul(Phase::MINUS_ONE));
                }
            }
            Gate::Cnot { control, target } => {
                // X_c -> X_c X_t and Z_t -> Z_c Z_t. The only sign flips in
                // the 16-entry table are X o Z -> -Y o Y and Y o Y -> -X o Z.
                let (xc, zc) = (p.x_bit(control), p.z_bit(control));
                let (xt, zt) = (p.x_bit(target), p.z_bit(target));
                if xc && zt && (zc == xt) {
                    p.set_sign(p.sign().mul(Phase::MINUS_ONE));
                }
                p.set_site(target, Axis::from_bits(xt ^ xc, zt));
                p.set_site(control, Axis::from_bits(xc, zc ^ zt));
            }
            Gate::Swap { a, b } => {
                let (sa, sb) = (p.site(a), p.site(b));
                p.set_site(a, sb);
                p.set_site(b, sa);
            }
            Gate::ISwap { a, b } => {
                for g in iswap_sequence(a, b) {
                    g.conjugate_mut(p);
                }
            }
        }
    }

    /// Gates realizing the inverse, in application order.
    pub fn inverse_sequence(&self) -> Vec<Gate> {
        match *self {
            Gate::Single { qubit, c } => vec![Gate::Single {
                qubit,
                c: c.inverse(),
            }],
            Gate::Cnot { .. } | Gate::Swap { .. } => vec![*self],
            Gate::ISwap { a, b } => {
                let mut seq: Vec<Gate> = iswap_sequence(a, b).into_iter().collect();
                seq.reverse();
                seq.iter_mut().for_each(|g| {
                    *g = g.inverse_sequence()[0];
                });
                seq
            }
        }
    }
}

/// iSWAP = SWAP . CZ . (S o S), with CZ = (1 o H) CNOT (1 o H); the returned
/// gates are in application order.
fn iswap_sequence(a: usize, b: usize) -> [Gate; 6] {
    [
        Gate::Single {
            qubit: a,
            c: SingleClifford::S,
        },
        Gate::Single {
            qubit: b,
            c: SingleClifford::S,
        },
        Gate::Single {
            qubit: b,
            c: SingleClifford::H,
        },
        Gate::Cnot {
            control: a,
            target: b,
        },
        Gate::Single {
            qubit: b,
            c: SingleClifford::H,
        },
        Gate::Swap { a, b },
    ]
}

/// A deterministic measurement circuit: gates applied in order, then a
/// computational-basis measurement of every qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn identity(n: usize) -> Circuit {
        Circuit {
            n,
            gates: Vec::new(),
        }
    }

    /// Exact conjugation U P U' through the whole circuit.
    pub fn conjugate(&self, p: &PauliString) -> Result<PauliString> {
        if p.n() != self.n {
            return Err(Error::Dimension(format!(
                "pauli on {} qubits, circuit on {}",
                p.n(),
                self.n
            )));
        }
        let mut q = p.clone();
        for g in &self.gates {
            g.conjugate_mut(&mut q);
        }
        Ok(q)
    }

    /// True iff U P U' contains no X/Y component, i.e. measuring in the
    /// computational basis after U learns <P>.
    pub fn diagonalizes(&self, p: &PauliString) -> Result<bool> {
        Ok(self.conjugate(p)?.is_z_diagonal())
    }

    /// The inverse circuit.
    pub fn inverse(&self) -> Circuit {
        let gates = self
            .gates
            .iter()
            .rev()
            .flat_map(Gate::inverse_sequence)
            .collect();
        Circuit { n: self.n, gates }
    }
}

/// Symplectic generator images of a Clifford unitary: the conjugation
/// targets of every X_k and Z_k, signs included.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordTableau {
    n: usize,
    x_images: Vec<PauliString>,
    z_images: Vec<PauliString>,
}

impl CliffordTableau {
    /// Tableau of a fixed circuit.
    pub fn from_circuit(circuit: &Circuit) -> CliffordTableau {
        let n = circuit.n;
        let image = |letter: Axis, k: usize| {
            circuit
                .conjugate(&PauliString::single(n, k, letter))
                .expect("dimensions match")
        };
        CliffordTableau {
            n,
            x_images: (0..n).map(|k| image(Axis::X, k)).collect(),
            z_images: (0..n).map(|k| image(Axis::Z, k)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_image(&self, k: usize) -> &PauliString {
        &self.x_images[k]
    }

    pub fn z_image(&self, k: usize) -> &PauliString {
        &self.z_images[k]
    }

    /// Conjugate an arbitrary Pauli through the stored generator images.
    pub fn conjugate(&self, p: &PauliString) -> Result<PauliString> {
        if p.n() != self.n {
            return Err(Error::Dimension(format!(
                "pauli on {} qubits, tableau on {}",
                p.n(),
                self.n
            )));
        }
        // P = i^k prod_s X_s^{x_s} Z_s^{z_s}; conjugation is a homomorphism.
        let mut acc = PauliString::identity(self.n);
        acc.set_sign(p.sign());
        let mut i_exp = 0i64;
        for s in 0..self.n {
            let (xb, zb) = (p.x_bit(s), p.z_bit(s));
            // X^x Z^z = (-i)^{xz} P_site, so multiply back i^{xz}.
            if xb {
                acc = acc.multiply(&self.x_images[s])?;
            }
            if zb {
                acc = acc.multiply(&self.z_images[s])?;
            }
            if xb && zb {
                i_exp += 1;
            }
        }
        acc.set_sign(acc.sign().mul(Phase::from_i_exponent(i_exp)));
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::parse_pauli;

    #[test]
    fn single_clifford_catalog_is_the_full_group() {
        let all = SingleClifford::all();
        assert_eq!(all.len(), 24);
        for c in all {
            // x and z images must anticommute (both non-identity, distinct).
            assert_ne!(c.x_img, Axis::I);
            assert_ne!(c.z_img, Axis::I);
            assert_ne!(c.x_img, c.z_img);
        }
    }

    #[test]
    fn named_singles_realize_their_permutations() {
        assert_eq!(SingleClifford::H.image(Axis::X), (Axis::Z, false));
        assert_eq!(SingleClifford::H.image(Axis::Z), (Axis::X, false));
        assert_eq!(SingleClifford::H.image(Axis::Y), (Axis::Y, true));
        assert_eq!(SingleClifford::S.image(Axis::Y), (Axis::X, true));
        assert_eq!(SingleClifford::SQRT_X.image(Axis::Y), (Axis::Z, false));
        // Cycle X -> Z -> Y -> X.
        assert_eq!(SingleClifford::SH.image(Axis::X).0, Axis::Z);
        assert_eq!(SingleClifford::SH.image(Axis::Z).0, Axis::Y);
        assert_eq!(SingleClifford::SH.image(Axis::Y).0, Axis::X);
        // Cycle X -> Y -> Z -> X.
        assert_eq!(SingleClifford::HS.image(Axis::X).0, Axis::Y);
        assert_eq!(SingleClifford::HS.image(Axis::Y).0, Axis::Z);
        assert_eq!(SingleClifford::HS.image(Axis::Z).0, Axis::X);
    }

    #[test]
    fn cnot_conjugation_table() {
        let cnot = Circuit {
            n: 2,
            gates: vec![Gate::Cnot {
                control: 0,
                target: 1,
            }],
        };
        let check = |from: &str, to: &str, sign: Phase| {
            let img = cnot.conjugate(&parse_pauli(from).unwrap()).unwrap();
            let expect = parse_pauli(to).unwrap();
            assert_eq!(img.x_words(), expect.x_words(), "{from}");
            assert_eq!(img.z_words(), expect.z_words(), "{from}");
            assert_eq!(img.sign(), sign, "{from}");
        };
        check("XI", "XX", Phase::PLUS_ONE);
        check("IX", "IX", Phase::PLUS_ONE);
        check("ZI", "ZI", Phase::PLUS_ONE);
        check("IZ", "ZZ", Phase::PLUS_ONE);
        check("YI", "YX", Phase::PLUS_ONE);
        check("IY", "ZY", Phase::PLUS_ONE);
        check("XZ", "YY", Phase::MINUS_ONE);
        check("YY", "XZ", Phase::MINUS_ONE);
        check("XX", "XI", Phase::PLUS_ONE);
        check("ZZ", "IZ", Phase::PLUS_ONE);
        check("YZ", "XY", Phase::PLUS_ONE);
        check("ZY", "YX", Phase::PLUS_ONE);
    }

    #[test]
    fn h_conjugates_z_to_x() {
        let h = Circuit {
            n: 1,
            gates: vec![Gate::Single {
                qubit: 0,
                c: SingleClifford::H,
            }],
        };
        let img = h.conjugate(&parse_pauli("Z").unwrap()).unwrap();
        assert_eq!(img.site(0), Axis::X);
        assert_eq!(img.sign(), Phase::PLUS_ONE);
    }

    #[test]
    fn iswap_conjugation_matches_known_images() {
        let isw = Circuit {
            n: 2,
            gates: vec![Gate::ISwap { a: 0, b: 1 }],
        };
        let img = isw.conjugate(&parse_pauli("XI").unwrap()).unwrap();
        assert_eq!(img.site(0), Axis::Z);
        assert_eq!(img.site(1), Axis::Y);
        assert_eq!(img.sign(), Phase::PLUS_ONE);
        let img = isw.conjugate(&parse_pauli("ZI").unwrap()).unwrap();
        assert_eq!(img.site(0), Axis::I);
        assert_eq!(img.site(1), Axis::Z);
        let img = isw.conjugate(&parse_pauli("YI").unwrap()).unwrap();
        assert_eq!(img.site(0), Axis::Z);
        assert_eq!(img.site(1), Axis::X);
        assert_eq!(img.sign(), Phase::MINUS_ONE);
        let img = isw.conjugate(&parse_pauli("XX").unwrap()).unwrap();
        assert_eq!((img.site(0), img.site(1)), (Axis::X, Axis::X));
        assert_eq!(img.sign(), Phase::PLUS_ONE);
    }

    #[test]
    fn inverse_undoes_conjugation() {
        let circ = Circuit {
            n: 3,
            gates: vec![
                Gate::Single {
                    qubit: 0,
                    c: SingleClifford::SH,
                },
                Gate::Cnot {
                    control: 1,
                    target: 2,
                },
                Gate::ISwap { a: 0, b: 1 },
                Gate::Single {
                    qubit: 2,
                    c: SingleClifford::S,
                },
                Gate::Swap { a: 2, b: 0 },
            ],
        };
        let inv = circ.inverse();
        for text in ["XYZ", "ZZI", "IIY", "XXX", "YIZ"] {
            let p = parse_pauli(text).unwrap();
            let roundtrip = inv.conjugate(&circ.conjugate(&p).unwrap()).unwrap();
            assert_eq!(roundtrip, p, "{text}");
        }
    }

    #[test]
    fn tableau_matches_direct_conjugation() {
        let circ = Circuit {
            n: 3,
            gates: vec![
                Gate::Single {
                    qubit: 1,
                    c: SingleClifford::HS,
                },
                Gate::Cnot {
                    control: 0,
                    target: 1,
                },
                Gate::Swap { a: 1, b: 2 },
            ],
        };
        let tab = CliffordTableau::from_circuit(&circ);
        for text in ["XII", "IYI", "ZZZ", "XYZ", "IIX", "YYX"] {
            let p = parse_pauli(text).unwrap();
            assert_eq!(
                tab.conjugate(&p).unwrap(),
                circ.conjugate(&p).unwrap(),
                "{text}"
            );
        }
    }
}
