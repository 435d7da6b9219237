//! Pauli transfer matrices of channels and the decomposition of single-qubit
//! unitary maps over the 10-gate Clifford basis.

use super::{clifford_basis_b1, code_matrix, codes_commute, CliffordGate};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// A channel given either by a unitary, a Kraus family, or as a Pauli channel
/// with probabilities indexed by packed Pauli code.
pub enum ChannelSpec<'a> {
    Unitary(&'a DMatrix<Complex64>),
    Kraus(&'a [DMatrix<Complex64>]),
    PauliProbs(&'a [f64]),
}

fn arity_of_dim(dim: usize) -> Result<usize> {
    match dim {
        2 => Ok(1),
        4 => Ok(2),
        _ => Err(Error::Dimension(format!("channel dimension {dim} unsupported (need 2 or 4)"))),
    }
}

/// `M[t1][t2] = Tr[P_t1 E(P_t2)] / 2^m`, rows and columns indexed by packed
/// Pauli code.  Entries of a Hermiticity-preserving map are real; a complex
/// residue beyond tolerance is reported as an error.
pub fn ptm_of_channel(channel: &ChannelSpec) -> Result<DMatrix<f64>> {
    match channel {
        ChannelSpec::Unitary(u) => {
            let kraus = [(*u).clone()];
            ptm_of_kraus(&kraus)
        }
        ChannelSpec::Kraus(ks) => ptm_of_kraus(ks),
        ChannelSpec::PauliProbs(probs) => {
            let codes = probs.len();
            let arity = match codes {
                4 => 1,
                16 => 2,
                _ => {
                    return Err(Error::Dimension(format!(
                        "pauli channel with {codes} entries (need 4 or 16)"
                    )))
                }
            };
            // A Pauli channel is diagonal in the Pauli basis; the eigenvalue at
            // code t is the signed sum of probabilities by commutation.
            let mut m = DMatrix::zeros(codes, codes);
            for t in 0..codes {
                let mut lambda = 0.0;
                for (s, p) in probs.iter().enumerate() {
                    lambda += if codes_commute(s, t, arity) { *p } else { -*p };
                }
                m[(t, t)] = lambda;
            }
            Ok(m)
        }
    }
}

fn ptm_of_kraus(kraus: &[DMatrix<Complex64>]) -> Result<DMatrix<f64>> {
    let dim = kraus
        .first()
        .ok_or_else(|| Error::Dimension("empty Kraus family".into()))?
        .nrows();
    let arity = arity_of_dim(dim)?;
    let codes = 4usize.pow(arity as u32);
    let mut m = DMatrix::zeros(codes, codes);
    for t2 in 0..codes {
        let p2 = code_matrix(t2, arity);
        let mut image: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
        for k in kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::Dimension("ragged Kraus family".into()));
            }
            image += k * &p2 * k.adjoint();
        }
        for t1 in 0..codes {
            let val = (code_matrix(t1, arity) * &image).trace() / Complex64::new(dim as f64, 0.0);
            if val.im.abs() > 1e-9 {
                return Err(Error::Numerical(format!(
                    "transfer-matrix entry ({t1},{t2}) has imaginary part {}",
                    val.im
                )));
            }
            m[(t1, t2)] = val.re;
        }
    }
    Ok(m)
}

/// Transfer matrix of a Clifford gate straight from its conjugation table:
/// a signed permutation, exact and cheap.
pub fn ptm_of_clifford(gate: &CliffordGate) -> DMatrix<f64> {
    let codes = 4usize.pow(gate.arity() as u32);
    let mut m = DMatrix::zeros(codes, codes);
    for c in 0..codes {
        let (out, sign) = gate.conjugate_code(c);
        m[(out, c)] = sign as f64;
    }
    m
}

/// Least-squares coefficients of a single-qubit unitary map over the 10-gate
/// Clifford basis, together with the decomposition residual.  The residual
/// vanishes for unitary maps because the basis spans every single-qubit
/// unitary transfer matrix.
pub fn decompose_unitary_map(u: &DMatrix<Complex64>) -> Result<(Vec<f64>, f64)> {
    if u.nrows() != 2 || u.ncols() != 2 {
        return Err(Error::Dimension("decomposition expects a single-qubit unitary".into()));
    }
    let basis = clifford_basis_b1();
    let mut design = DMatrix::zeros(16, basis.len());
    for (j, g) in basis.iter().enumerate() {
        let ptm = ptm_of_clifford(g);
        for (i, v) in ptm.iter().enumerate() {
            design[(i, j)] = *v;
        }
    }
    let target_ptm = ptm_of_channel(&ChannelSpec::Unitary(u))?;
    let target = DVector::from_iterator(16, target_ptm.iter().copied());

    let svd = design.clone().svd(true, true);
    let alpha = svd
        .solve(&target, 1e-12)
        .map_err(|e| Error::Numerical(format!("basis decomposition solve failed: {e}")))?;
    let residual = (&design * &alpha - &target).norm();
    Ok((alpha.iter().copied().collect(), residual))
}
