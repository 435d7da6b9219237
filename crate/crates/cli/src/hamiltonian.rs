//! Weighted Pauli-string Hamiltonians: dense diagonalization oracles,
//! measurement grouping, and single-qubit basis changes.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use qem_core::linalg::min_eigenvalue_hermitian;
use qem_core::pauli::{Pauli, PauliString};

use crate::{CliError, CliResult};

/// One weighted term.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub string: PauliString,
}

/// A Hermitian operator as a real-weighted Pauli-string sum.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinHamiltonian {
    n: usize,
    terms: Vec<Term>,
}

impl SpinHamiltonian {
    pub fn new(n: usize, terms: Vec<(f64, PauliString)>) -> CliResult<Self> {
        for (w, s) in &terms {
            if s.n() != n {
                return Err(CliError::Config(format!(
                    "term {s} acts on {} qubits, hamiltonian declared {n}",
                    s.n()
                )));
            }
            if !w.is_finite() {
                return Err(CliError::Config(format!("non-finite coefficient for term {s}")));
            }
        }
        Ok(SpinHamiltonian {
            n,
            terms: terms.into_iter().map(|(coefficient, string)| Term { coefficient, string }).collect(),
        })
    }

    /// Transverse fields `a[i] X_i` plus an isotropic nearest-neighbour ring
    /// coupling `j (X X + Y Y + Z Z)` on the cycle `0-1-2-3-0`.
    pub fn heisenberg_ring(a: &[f64; 4], j: f64) -> Self {
        let n = 4;
        let mut terms = Vec::with_capacity(16);
        for (i, &ai) in a.iter().enumerate() {
            let s = PauliString::from_sparse(n, &[(i, Pauli::X)]).expect("qubit in range");
            terms.push((ai, s));
        }
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            for i in 0..n {
                let s = PauliString::from_sparse(n, &[(i, p), ((i + 1) % n, p)])
                    .expect("qubits in range");
                terms.push((j, s));
            }
        }
        SpinHamiltonian::new(n, terms).expect("ring terms are well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Energy from per-term expectation values, aligned with `terms()`.
    pub fn energy(&self, expectations: &[f64]) -> CliResult<f64> {
        if expectations.len() != self.terms.len() {
            return Err(CliError::Run(format!(
                "{} expectations for {} terms",
                expectations.len(),
                self.terms.len()
            )));
        }
        Ok(self.terms.iter().zip(expectations).map(|(t, e)| t.coefficient * e).sum())
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for t in &self.terms {
            m += t.string.matrix() * Complex64::new(t.coefficient, 0.0);
        }
        m
    }

    pub fn ground_energy(&self) -> CliResult<f64> {
        min_eigenvalue_hermitian(&self.matrix()).map_err(CliError::from)
    }

    /// Difference between the largest and smallest eigenvalue.
    pub fn spectral_width(&self) -> CliResult<f64> {
        let m = self.matrix();
        let lo = min_eigenvalue_hermitian(&m)?;
        let hi = -min_eigenvalue_hermitian(&(-m))?;
        Ok(hi - lo)
    }

    /// Greedy partition into qubit-wise commuting groups (indices into
    /// `terms()`), in first-fit order.
    pub fn commuting_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        'next: for (t, term) in self.terms.iter().enumerate() {
            for group in groups.iter_mut() {
                if group.iter().all(|&o| qubit_wise_commute(&term.string, &self.terms[o].string)) {
                    group.push(t);
                    continue 'next;
                }
            }
            groups.push(vec![t]);
        }
        groups
    }
}

/// Qubit-wise commutation: at every site the letters are equal or one is I.
/// Sufficient for simultaneous measurement after a shared basis change.
pub fn qubit_wise_commute(a: &PauliString, b: &PauliString) -> bool {
    a.ops()
        .iter()
        .zip(b.ops())
        .all(|(x, y)| *x == Pauli::I || *y == Pauli::I || x == y)
}

/// Full pairwise (symplectic) commutation over a term list.
pub fn mutually_commuting(strings: &[PauliString]) -> bool {
    for (i, a) in strings.iter().enumerate() {
        for b in strings.iter().skip(i + 1) {
            if !a.commutes(b) {
                return false;
            }
        }
    }
    true
}

/// The single-qubit gate `B` with `B' Z B = P`, so measuring Z after
/// applying `B` reads out `P`: identity for Z, the Hadamard for X, and the
/// Hadamard composed with the inverse phase gate for Y.
pub fn basis_change(p: Pauli) -> CliResult<Matrix2<Complex64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    match p {
        Pauli::Z => Ok(Matrix2::identity()),
        Pauli::X => Ok(Matrix2::new(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0))),
        Pauli::Y => Ok(Matrix2::new(c(s, 0.0), c(0.0, -s), c(s, 0.0), c(0.0, s))),
        Pauli::I => Err(CliError::Config("no measurement basis for the identity letter".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn basis_changes_conjugate_z_to_their_letter() {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let b = basis_change(p).unwrap();
            let z = Pauli::Z.matrix();
            let conj = b.adjoint() * z * b;
            let target = p.matrix();
            let err = (conj - target).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "letter {p:?} residual {err}");
        }
        assert!(basis_change(Pauli::I).is_err());
    }

    #[test]
    fn ring_ground_energy_is_reproducible() {
        let h = SpinHamiltonian::heisenberg_ring(&[0.270777, 0.192014, 0.0802803, 0.123018], 1.0);
        assert_eq!(h.terms().len(), 16);
        let e0 = h.ground_energy().unwrap();
        assert_abs_diff_eq!(e0, -8.001927058814909, epsilon = 1e-9);
        assert!(h.spectral_width().unwrap() > 0.0);
    }

    #[test]
    fn ring_terms_group_by_measurement_letter() {
        let h = SpinHamiltonian::heisenberg_ring(&[1.0, 1.0, 1.0, 1.0], 1.0);
        let groups = h.commuting_groups();
        assert_eq!(groups.len(), 3);
        // First group holds everything built from X: 4 fields + 4 ring pairs.
        assert_eq!(groups[0].len(), 8);
        assert_eq!(groups[1].len(), 4);
        assert_eq!(groups[2].len(), 4);
        for group in &groups {
            let strings: Vec<PauliString> =
                group.iter().map(|&t| h.terms()[t].string.clone()).collect();
            assert!(mutually_commuting(&strings));
        }
    }

    #[test]
    fn energy_weighs_expectations_by_coefficients() {
        let h = SpinHamiltonian::new(
            2,
            vec![(0.5, "ZI".parse().unwrap()), (-2.0, "ZZ".parse().unwrap())],
        )
        .unwrap();
        assert_abs_diff_eq!(h.energy(&[1.0, 1.0]).unwrap(), -1.5, epsilon = 1e-15);
        assert!(h.energy(&[1.0]).is_err());
        // Mismatched term width is rejected at construction.
        assert!(SpinHamiltonian::new(3, vec![(1.0, "ZZ".parse().unwrap())]).is_err());
    }

    #[test]
    fn qubit_wise_commutation_is_stricter_than_full_commutation() {
        let xx: PauliString = "XX".parse().unwrap();
        let yy: PauliString = "YY".parse().unwrap();
        assert!(xx.commutes(&yy));
        assert!(!qubit_wise_commute(&xx, &yy));
        let xi: PauliString = "XI".parse().unwrap();
        assert!(qubit_wise_commute(&xx, &xi));
    }
}
