//! Pauli algebra, Clifford conjugation tables and Pauli transfer matrices.
//!
//! Conventions used throughout the crate:
//! - qubits are indexed `0..n` top to bottom; tensor factors are written with
//!   qubit 0 leftmost, and qubit 0 occupies the most significant bit of a
//!   computational basis index;
//! - multi-qubit Paulis on a small support are packed into a base-4 code with
//!   the first support qubit in the most significant digit (`II = 0`,
//!   `IX = 1`, ..., `ZZ = 15`);
//! - `PauliString` multiplication discards the global phase.  Exact phases
//!   only matter when multiplying stabilizer-group elements, which the
//!   stabilizer simulator tracks itself.

mod catalog;
mod gate;
mod ptm;

pub use catalog::{
    clifford_basis_b1, clifford_index_of, clifford_product_index, cnot, cz_gate, hadamard,
    identity_gate, pauli_gate, phase_gate, rotation_x, rotation_y, rotation_z,
    single_qubit_cliffords,
};
pub use gate::{clifford_conjugate, CliffordGate};
pub use ptm::{decompose_unitary_map, ptm_of_channel, ptm_of_clifford, ChannelSpec};

use crate::{Error, Result};
use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Single-qubit Pauli operator.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Pauli::I),
            1 => Ok(Pauli::X),
            2 => Ok(Pauli::Y),
            3 => Ok(Pauli::Z),
            _ => Err(Error::Dimension(format!("pauli code {code} out of range"))),
        }
    }

    /// Product with the global phase discarded: the letters compose as the
    /// symmetric XOR of (x, z) bit pairs.
    pub fn mul(self, other: Pauli) -> Pauli {
        let (x1, z1) = self.xz();
        let (x2, z2) = other.xz();
        Self::from_xz(x1 ^ x2, z1 ^ z2)
    }

    pub fn commutes(self, other: Pauli) -> bool {
        let (x1, z1) = self.xz();
        let (x2, z2) = other.xz();
        (x1 & z2) ^ (z1 & x2) == 0
    }

    pub fn xz(self) -> (u8, u8) {
        match self {
            Pauli::I => (0, 0),
            Pauli::X => (1, 0),
            Pauli::Y => (1, 1),
            Pauli::Z => (0, 1),
        }
    }

    pub fn from_xz(x: u8, z: u8) -> Self {
        match (x, z) {
            (0, 0) => Pauli::I,
            (1, 0) => Pauli::X,
            (1, 1) => Pauli::Y,
            (0, 1) => Pauli::Z,
            _ => unreachable!("xz bits out of range"),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            _ => Err(Error::Dimension(format!("unknown pauli letter `{c}`"))),
        }
    }

    pub fn matrix(self) -> Matrix2<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => Matrix2::new(l, o, o, l),
            Pauli::X => Matrix2::new(o, l, l, o),
            Pauli::Y => Matrix2::new(o, -i, i, o),
            Pauli::Z => Matrix2::new(l, o, o, -l),
        }
    }
}

/// Tensor product of single-qubit Paulis, one per qubit, phase-free.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString(vec![Pauli::I; n])
    }

    pub fn new(ops: Vec<Pauli>) -> Self {
        PauliString(ops)
    }

    /// Identity everywhere except `pairs` of (qubit, letter).
    pub fn from_sparse(n: usize, pairs: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n);
        for &(q, p) in pairs {
            if q >= n {
                return Err(Error::Dimension(format!("qubit {q} out of range for n={n}")));
            }
            s.0[q] = p;
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, q: usize) -> Pauli {
        self.0[q]
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        self.0[q] = p;
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.0
    }

    /// Number of non-identity tensor factors.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|p| **p != Pauli::I).count()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&q| self.0[q] != Pauli::I).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|p| *p == Pauli::I)
    }

    /// Letters drawn from {I, X} only (initialisation / measurement layers).
    pub fn is_ix_only(&self) -> bool {
        self.0.iter().all(|p| matches!(p, Pauli::I | Pauli::X))
    }

    /// Per-qubit product with global phase discarded.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.n() != other.n() {
            return Err(Error::Dimension(format!(
                "pauli string length mismatch: {} vs {}",
                self.n(),
                other.n()
            )));
        }
        Ok(PauliString(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(a, b)| a.mul(*b))
                .collect(),
        ))
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        let anti = self
            .0
            .iter()
            .zip(other.0.iter())
            .filter(|(a, b)| !a.commutes(**b))
            .count();
        anti % 2 == 0
    }

    /// Dense matrix with qubit 0 as the leftmost tensor factor.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::identity(1, 1);
        for p in &self.0 {
            m = m.kronecker(&crate::linalg::dmat2(&p.matrix()));
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars().map(Pauli::from_char).collect::<Result<Vec<_>>>().map(PauliString)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `pauli_mul` of the module contract: elementwise product of equal-length
/// string tuples, phase discarded.
pub fn pauli_mul(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    a.mul(b)
}

/// Packs letters on an ordered support into a base-4 code, first qubit in the
/// most significant digit.
pub fn pack_code(letters: &[Pauli]) -> usize {
    letters.iter().fold(0usize, |acc, p| acc * 4 + p.code() as usize)
}

/// Inverse of [`pack_code`] for a known support size.
pub fn unpack_code(code: usize, arity: usize) -> Vec<Pauli> {
    let mut out = vec![Pauli::I; arity];
    let mut c = code;
    for slot in (0..arity).rev() {
        out[slot] = Pauli::from_code((c % 4) as u8).expect("base-4 digit");
        c /= 4;
    }
    out
}

/// Dense matrix of a packed code on `arity` qubits.
pub fn code_matrix(code: usize, arity: usize) -> DMatrix<Complex64> {
    PauliString::new(unpack_code(code, arity)).matrix()
}

/// Symplectic commutation test between two packed codes of equal arity.
pub fn codes_commute(a: usize, b: usize, arity: usize) -> bool {
    let pa = unpack_code(a, arity);
    let pb = unpack_code(b, arity);
    let anti = pa
        .iter()
        .zip(pb.iter())
        .filter(|(x, y)| !x.commutes(**y))
        .count();
    anti % 2 == 0
}
