//! Named gates and the two gate catalogues used by the learning protocols:
//! the 24 single-qubit Cliffords and the 10-element Clifford basis that spans
//! single-qubit maps.

use super::gate::CliffordGate;
use super::Pauli;
use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use std::sync::OnceLock;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn dm2(m: Matrix2<Complex64>) -> DMatrix<Complex64> {
    crate::linalg::dmat2(&m)
}

pub fn identity_gate() -> CliffordGate {
    CliffordGate::from_matrix("I", dm2(Matrix2::identity())).expect("identity is Clifford")
}

pub fn hadamard() -> CliffordGate {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let m = Matrix2::new(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0));
    CliffordGate::from_matrix("H", dm2(m)).expect("H is Clifford")
}

pub fn phase_gate() -> CliffordGate {
    let m = Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    CliffordGate::from_matrix("S", dm2(m)).expect("S is Clifford")
}

pub fn pauli_gate(p: Pauli) -> CliffordGate {
    CliffordGate::from_matrix(&p.to_char().to_string(), dm2(p.matrix())).expect("pauli is Clifford")
}

/// CNOT with the first support qubit as control.
pub fn cnot() -> CliffordGate {
    let mut m = DMatrix::zeros(4, 4);
    for (col, row) in [(0usize, 0usize), (1, 1), (2, 3), (3, 2)] {
        m[(row, col)] = c(1.0, 0.0);
    }
    CliffordGate::from_matrix("CNOT", m).expect("CNOT is Clifford")
}

pub fn cz_gate() -> CliffordGate {
    let mut m = DMatrix::identity(4, 4);
    m[(3, 3)] = c(-1.0, 0.0);
    CliffordGate::from_matrix("CZ", m).expect("CZ is Clifford")
}

/// `exp(-i theta X / 2)`.
pub fn rotation_x(theta: f64) -> Matrix2<Complex64> {
    let (s, co) = (theta / 2.0).sin_cos();
    Matrix2::new(c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0))
}

/// `exp(-i theta Y / 2)`.
pub fn rotation_y(theta: f64) -> Matrix2<Complex64> {
    let (s, co) = (theta / 2.0).sin_cos();
    Matrix2::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
}

/// `exp(-i theta Z / 2)`.
pub fn rotation_z(theta: f64) -> Matrix2<Complex64> {
    let half = theta / 2.0;
    Matrix2::new(
        Complex64::from_polar(1.0, -half),
        c(0.0, 0.0),
        c(0.0, 0.0),
        Complex64::from_polar(1.0, half),
    )
}

/// The 24 single-qubit Cliffords, generated by breadth-first closure of
/// {H, S} and deduplicated by conjugation action.  The ordering is fixed:
/// index 0 is the identity, and indices are stable across runs, which the
/// serialized training sets rely on.
pub fn single_qubit_cliffords() -> &'static Vec<CliffordGate> {
    static CATALOG: OnceLock<Vec<CliffordGate>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let gens = [hadamard(), phase_gate()];
        let mut out = vec![identity_gate()];
        let mut frontier = vec![0usize];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &idx in &frontier {
                for gen in &gens {
                    let cand = gen
                        .compose(&out[idx], &format!("C{}", out.len()))
                        .expect("closure of Cliffords");
                    if !out.iter().any(|g| g.same_action(&cand)) {
                        next.push(out.len());
                        out.push(cand);
                    }
                }
            }
            frontier = next;
        }
        assert_eq!(out.len(), 24, "single-qubit Clifford group has 24 elements");
        out
    })
}

/// Index of `gate` in the 24-element catalogue, comparing up to global phase.
pub fn clifford_index_of(gate: &CliffordGate) -> Option<usize> {
    single_qubit_cliffords().iter().position(|g| g.same_action(gate))
}

/// Index of the catalogue gate realising "apply `p`, then `C_i`", i.e. the
/// product `C_i · p`.  Inserting a Pauli immediately before a catalogue gate
/// stays inside the catalogue, which the single-slot learning protocols use
/// to reuse one 24-entry expectation table for every (gate, insertion) pair.
pub fn clifford_product_index(i: usize, p: Pauli) -> usize {
    static TABLE: OnceLock<Vec<[usize; 4]>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let catalog = single_qubit_cliffords();
        catalog
            .iter()
            .map(|g| {
                let mut row = [0usize; 4];
                for p in Pauli::ALL {
                    let prod = g
                        .compose(&pauli_gate(p), "tmp")
                        .expect("clifford times pauli");
                    row[p.code() as usize] =
                        clifford_index_of(&prod).expect("catalogue closed under Pauli products");
                }
                row
            })
            .collect()
    });
    table[i][p.code() as usize]
}

/// The 10-gate Clifford basis spanning the 10-dimensional space of
/// single-qubit Pauli transfer matrices:
/// I, X, Y, Z, (I+iX)/√2, (I+iY)/√2, (I+iZ)/√2, (Y+Z)/√2, (Z+X)/√2, (X+Y)/√2.
pub fn clifford_basis_b1() -> &'static Vec<CliffordGate> {
    static BASIS: OnceLock<Vec<CliffordGate>> = OnceLock::new();
    BASIS.get_or_init(|| {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let blend = |name: &str, a: Matrix2<Complex64>, b: Matrix2<Complex64>, ib: bool| {
            let w = if ib { c(0.0, s) } else { c(s, 0.0) };
            let m = a.map(|v| v * c(s, 0.0)) + b.map(|v| v * w);
            CliffordGate::from_matrix(name, dm2(m)).expect("B1 member is Clifford")
        };
        let (i, x, y, z) =
            (Pauli::I.matrix(), Pauli::X.matrix(), Pauli::Y.matrix(), Pauli::Z.matrix());
        vec![
            identity_gate(),
            pauli_gate(Pauli::X),
            pauli_gate(Pauli::Y),
            pauli_gate(Pauli::Z),
            blend("(I+iX)/sqrt2", i, x, true),
            blend("(I+iY)/sqrt2", i, y, true),
            blend("(I+iZ)/sqrt2", i, z, true),
            blend("(Y+Z)/sqrt2", y, z, false),
            blend("(Z+X)/sqrt2", z, x, false),
            blend("(X+Y)/sqrt2", x, y, false),
        ]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::clifford_conjugate;

    #[test]
    fn rotation_matrices_are_unitary_and_special() {
        for theta in [0.3, 1.2, -2.5] {
            for m in [rotation_x(theta), rotation_y(theta), rotation_z(theta)] {
                let err = (m.adjoint() * m - Matrix2::identity())
                    .iter()
                    .map(|v| v.norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-12);
                assert!((m.determinant().norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn catalogue_has_24_distinct_elements_with_identity_first() {
        let cat = single_qubit_cliffords();
        assert_eq!(cat.len(), 24);
        assert!(cat[0].same_action(&identity_gate()));
        for i in 0..cat.len() {
            for j in (i + 1)..cat.len() {
                assert!(!cat[i].same_action(&cat[j]), "duplicate at {i},{j}");
            }
        }
    }

    #[test]
    fn catalogue_contains_the_named_gates_and_paulis() {
        for g in
            [hadamard(), phase_gate(), pauli_gate(Pauli::X), pauli_gate(Pauli::Y), pauli_gate(Pauli::Z)]
        {
            assert!(clifford_index_of(&g).is_some(), "{} missing", g.name());
        }
    }

    #[test]
    fn catalogue_is_closed_under_composition() {
        let cat = single_qubit_cliffords();
        for a in cat.iter().take(6) {
            for b in cat.iter() {
                let prod = a.compose(b, "prod").unwrap();
                assert!(clifford_index_of(&prod).is_some());
            }
        }
    }

    #[test]
    fn pauli_product_lookup_matches_direct_composition() {
        let cat = single_qubit_cliffords();
        for i in [0usize, 3, 11, 23] {
            for p in Pauli::ALL {
                let direct = cat[i].compose(&pauli_gate(p), "direct").unwrap();
                assert!(cat[clifford_product_index(i, p)].same_action(&direct));
            }
        }
    }

    #[test]
    fn b1_members_are_cliffords_inside_the_catalogue() {
        for g in clifford_basis_b1() {
            assert!(clifford_index_of(g).is_some(), "{} not a single-qubit Clifford", g.name());
        }
        assert_eq!(clifford_basis_b1().len(), 10);
    }

    #[test]
    fn b1_blends_act_as_expected() {
        // (Z+X)/sqrt2 is the Hadamard.
        let zx = &clifford_basis_b1()[8];
        assert!(zx.same_action(&hadamard()));
        // (I+iX)/sqrt2 fixes X and maps Z -> Y.
        let sx = &clifford_basis_b1()[4];
        let (out, sign) = clifford_conjugate(sx, &"X".parse().unwrap()).unwrap();
        assert_eq!((out.to_string().as_str(), sign), ("X", 1));
        let (out, sign) = clifford_conjugate(sx, &"Z".parse().unwrap()).unwrap();
        assert_eq!((out.to_string().as_str(), sign), ("Y", 1));
    }
}
