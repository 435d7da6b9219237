//! Clifford gates represented by their conjugation action on Pauli codes.

use super::{code_matrix, pack_code, unpack_code, PauliString};
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// A 1- or 2-qubit Clifford gate.
///
/// The gate keeps its dense unitary (needed by the density-matrix simulator
/// and by tomography-style tests) together with the signed permutation it
/// induces on Pauli codes, `g P g†  =  sign · P'`.  Equality of the signed
/// permutation is equality of the gate up to global phase.
#[derive(Clone, Debug)]
pub struct CliffordGate {
    name: String,
    arity: usize,
    matrix: DMatrix<Complex64>,
    table: Vec<(u8, i8)>,
    inv_table: Vec<(u8, i8)>,
}

impl CliffordGate {
    /// Builds a gate from a dense unitary, verifying unitarity and the
    /// Clifford property (every conjugated Pauli is again ± a single Pauli).
    pub fn from_matrix(name: &str, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        let arity = match dim {
            2 => 1,
            4 => 2,
            _ => {
                return Err(Error::Dimension(format!(
                    "gate `{name}`: expected a 2x2 or 4x4 matrix, got {dim}x{dim}"
                )))
            }
        };
        if matrix.ncols() != dim {
            return Err(Error::Dimension(format!("gate `{name}`: matrix is not square")));
        }
        let eye = DMatrix::<Complex64>::identity(dim, dim);
        if ((&matrix.adjoint() * &matrix) - &eye).iter().any(|c| c.norm() > 1e-9) {
            return Err(Error::NotClifford(format!("gate `{name}` is not unitary")));
        }

        let codes = 4usize.pow(arity as u32);
        let mut table = vec![(0u8, 1i8); codes];
        for c in 1..codes {
            let conj = &matrix * code_matrix(c, arity) * matrix.adjoint();
            let mut hit = None;
            for cand in 1..codes {
                let overlap = (code_matrix(cand, arity).adjoint() * &conj).trace()
                    / Complex64::new(dim as f64, 0.0);
                if (overlap.norm() - 1.0).abs() < 1e-9 {
                    if overlap.im.abs() > 1e-9 || hit.is_some() {
                        return Err(Error::NotClifford(format!(
                            "gate `{name}`: conjugation of code {c} is not a signed Pauli"
                        )));
                    }
                    hit = Some((cand as u8, if overlap.re > 0.0 { 1i8 } else { -1i8 }));
                } else if overlap.norm() > 1e-9 {
                    return Err(Error::NotClifford(format!(
                        "gate `{name}`: conjugation of code {c} mixes Paulis"
                    )));
                }
            }
            table[c] = hit.ok_or_else(|| {
                Error::NotClifford(format!("gate `{name}`: conjugation of code {c} vanished"))
            })?;
        }

        let mut inv_table = vec![(0u8, 1i8); codes];
        for c in 0..codes {
            let (out, sign) = table[c];
            inv_table[out as usize] = (c as u8, sign);
        }

        Ok(CliffordGate { name: name.to_string(), arity, matrix, table, inv_table })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// `g P g†` on packed codes.
    pub fn conjugate_code(&self, code: usize) -> (usize, i8) {
        let (out, sign) = self.table[code];
        (out as usize, sign)
    }

    /// `g† P g` on packed codes.
    pub fn conjugate_code_inv(&self, code: usize) -> (usize, i8) {
        let (out, sign) = self.inv_table[code];
        (out as usize, sign)
    }

    /// Same signed permutation, i.e. the same gate up to global phase.
    pub fn same_action(&self, other: &CliffordGate) -> bool {
        self.arity == other.arity && self.table == other.table
    }

    /// The gate applying `first`, then `self` (matrix product `self * first`).
    pub fn compose(&self, first: &CliffordGate, name: &str) -> Result<CliffordGate> {
        if self.arity != first.arity {
            return Err(Error::Dimension(format!(
                "cannot compose arity {} with arity {}",
                self.arity, first.arity
            )));
        }
        CliffordGate::from_matrix(name, &self.matrix * &first.matrix)
    }
}

/// Conjugates a Pauli string living on the gate's support:
/// returns `(P', sign)` with `g P g† = sign · P'`.
pub fn clifford_conjugate(gate: &CliffordGate, p: &PauliString) -> Result<(PauliString, i8)> {
    if p.n() != gate.arity() {
        return Err(Error::Dimension(format!(
            "pauli string on {} qubits fed to arity-{} gate",
            p.n(),
            gate.arity()
        )));
    }
    let (out, sign) = gate.conjugate_code(pack_code(p.ops()));
    Ok((PauliString::new(unpack_code(out, gate.arity())), sign))
}
