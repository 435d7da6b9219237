//! Tableau simulation of Clifford-assigned circuits.
//!
//! The tableau keeps `n` destabilizer and `n` stabilizer generators as rows
//! of X/Z bit masks with phases tracked modulo 4 (stabilizer rows always
//! carry a real sign, `0` for `+1` and `2` for `-1`).  Expectations of Pauli
//! observables are deterministic: an observable either anticommutes with
//! some stabilizer (expectation 0) or equals a signed product of stabilizer
//! generators (expectation +/-1).

mod profile;
mod training;

pub use profile::{
    clifford_expectation_with_pauli_noise, NoisePoint, PauliChannelAt, PauliNoiseEval,
    SignProfile,
};
pub use training::{layout_hash, sample_training_set, TrainingEntry, TrainingSet};

use crate::circuit::{GateAssignment, LayeredCircuit};
use crate::pauli::{single_qubit_cliffords, CliffordGate, Pauli, PauliString};
use crate::{Error, Result};

/// Phase exponent of the single-qubit product `P_a * P_b = i^eps P_{ab}`,
/// indexed `[a][b]` in I, X, Y, Z code order.
const MUL_PHASE: [[u8; 4]; 4] = [
    [0, 0, 0, 0],
    [0, 0, 1, 3],
    [0, 3, 0, 1],
    [0, 1, 3, 0],
];

/// Multiplies two signed Pauli strings, tracking the `i` exponent.  Returns
/// `(phase mod 4, letters)` where phase 0 means `+`, 2 means `-`; commuting
/// inputs always land on an even phase.
pub fn signed_mul(a: (u8, &PauliString), b: (u8, &PauliString)) -> (u8, PauliString) {
    assert_eq!(a.1.n(), b.1.n(), "signed_mul length mismatch");
    let mut phase = (a.0 + b.0) % 4;
    let mut ops = Vec::with_capacity(a.1.n());
    for q in 0..a.1.n() {
        let (pa, pb) = (a.1.get(q), b.1.get(q));
        phase = (phase + MUL_PHASE[pa.code() as usize][pb.code() as usize]) % 4;
        ops.push(pa.mul(pb));
    }
    (phase, PauliString::new(ops))
}

/// Binary symplectic tableau for up to 64 qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Tableau {
    n: usize,
    /// Rows `0..n` are destabilizers, `n..2n` stabilizers.
    xs: Vec<u64>,
    zs: Vec<u64>,
    /// Phase exponent of `i` per row, modulo 4.
    phase: Vec<u8>,
}

impl Tableau {
    /// Tableau of `|0...0>`: destabilizers `X_i`, stabilizers `+Z_i`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1 && n <= 64, "tableau supports 1..=64 qubits, got {n}");
        let mut xs = vec![0u64; 2 * n];
        let mut zs = vec![0u64; 2 * n];
        for i in 0..n {
            xs[i] = 1 << i;
            zs[n + i] = 1 << i;
        }
        Tableau { n, xs, zs, phase: vec![0; 2 * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn letter(&self, row: usize, q: usize) -> Pauli {
        let x = ((self.xs[row] >> q) & 1) as u8;
        let z = ((self.zs[row] >> q) & 1) as u8;
        Pauli::from_xz(x, z)
    }

    fn set_letter(&mut self, row: usize, q: usize, p: Pauli) {
        let (x, z) = p.xz();
        self.xs[row] = (self.xs[row] & !(1 << q)) | ((x as u64) << q);
        self.zs[row] = (self.zs[row] & !(1 << q)) | ((z as u64) << q);
    }

    /// Conjugates every row by a single-qubit Clifford gate acting on `q`.
    pub fn apply_1q(&mut self, gate: &CliffordGate, q: usize) {
        assert_eq!(gate.arity(), 1, "apply_1q needs a single-qubit gate");
        assert!(q < self.n);
        for row in 0..2 * self.n {
            let code = self.letter(row, q).code() as usize;
            if code == 0 {
                continue;
            }
            let (new_code, sign) = gate.conjugate_code(code);
            self.set_letter(row, q, Pauli::from_code(new_code as u8).unwrap());
            if sign < 0 {
                self.phase[row] = (self.phase[row] + 2) % 4;
            }
        }
    }

    /// Conjugates every row by a two-qubit Clifford gate on `(a, b)`, with
    /// `a` as the first (most significant) digit of packed codes.
    pub fn apply_2q(&mut self, gate: &CliffordGate, a: usize, b: usize) {
        assert_eq!(gate.arity(), 2, "apply_2q needs a two-qubit gate");
        assert!(a < self.n && b < self.n && a != b);
        for row in 0..2 * self.n {
            let code = 4 * self.letter(row, a).code() as usize + self.letter(row, b).code() as usize;
            if code == 0 {
                continue;
            }
            let (new_code, sign) = gate.conjugate_code(code);
            self.set_letter(row, a, Pauli::from_code((new_code / 4) as u8).unwrap());
            self.set_letter(row, b, Pauli::from_code((new_code % 4) as u8).unwrap());
            if sign < 0 {
                self.phase[row] = (self.phase[row] + 2) % 4;
            }
        }
    }

    /// Conjugates by a Pauli gate: letters are untouched, rows that
    /// anticommute with it on `q` flip sign.
    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        if p == Pauli::I {
            return;
        }
        assert!(q < self.n);
        for row in 0..2 * self.n {
            if !self.letter(row, q).commutes(p) {
                self.phase[row] = (self.phase[row] + 2) % 4;
            }
        }
    }

    fn row_commutes_with(&self, row: usize, obs_x: u64, obs_z: u64) -> bool {
        let anti = (self.xs[row] & obs_z).count_ones() + (self.zs[row] & obs_x).count_ones();
        anti % 2 == 0
    }

    /// Exact expectation of a (sign-free) Pauli observable: `-1`, `0`, or `+1`.
    pub fn expectation_pauli(&self, obs: &PauliString) -> f64 {
        assert_eq!(obs.n(), self.n, "observable width mismatch");
        if obs.is_identity() {
            return 1.0;
        }
        let (mut obs_x, mut obs_z) = (0u64, 0u64);
        for q in 0..self.n {
            let (x, z) = obs.get(q).xz();
            obs_x |= (x as u64) << q;
            obs_z |= (z as u64) << q;
        }
        for row in self.n..2 * self.n {
            if !self.row_commutes_with(row, obs_x, obs_z) {
                return 0.0;
            }
        }
        // The observable commutes with the whole group, so it is a signed
        // product of the stabilizers paired with the destabilizers it
        // anticommutes with.
        let mut acc_phase = 0u8;
        let mut acc = PauliString::identity(self.n);
        for i in 0..self.n {
            if !self.row_commutes_with(i, obs_x, obs_z) {
                let (phase, letters) = self.row_signed(self.n + i);
                let (p, prod) = signed_mul((acc_phase, &acc), (phase, &letters));
                acc_phase = p;
                acc = prod;
            }
        }
        debug_assert_eq!(
            acc.ops(),
            obs.ops(),
            "stabilizer product does not reproduce the observable"
        );
        debug_assert!(acc_phase % 2 == 0);
        if acc_phase == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn row_signed(&self, row: usize) -> (u8, PauliString) {
        let ops = (0..self.n).map(|q| self.letter(row, q)).collect();
        (self.phase[row], PauliString::new(ops))
    }

    /// The stabilizer generators as `(sign, letters)` with sign -1 or +1.
    pub fn stabilizer_generators(&self) -> Vec<(i8, PauliString)> {
        (self.n..2 * self.n)
            .map(|row| {
                let (phase, letters) = self.row_signed(row);
                (if phase == 0 { 1 } else { -1 }, letters)
            })
            .collect()
    }

    /// Checks the symplectic pairing invariants; used in debug builds and tests.
    pub fn validate(&self) -> Result<()> {
        for i in 0..2 * self.n {
            if self.phase[i] % 2 != 0 {
                return Err(Error::Numerical(format!("row {i} carries an imaginary phase")));
            }
        }
        let commutes = |r1: usize, r2: usize| {
            let anti =
                (self.xs[r1] & self.zs[r2]).count_ones() + (self.zs[r1] & self.xs[r2]).count_ones();
            anti % 2 == 0
        };
        for i in 0..self.n {
            for j in 0..self.n {
                let (si, sj) = (self.n + i, self.n + j);
                if !commutes(si, sj) {
                    return Err(Error::Numerical(format!("stabilizers {i}, {j} anticommute")));
                }
                if i != j && !commutes(i, sj) {
                    return Err(Error::Numerical(format!(
                        "destabilizer {i} anticommutes with stabilizer {j}"
                    )));
                }
            }
            if commutes(i, self.n + i) {
                return Err(Error::Numerical(format!(
                    "destabilizer {i} fails to anticommute with its stabilizer"
                )));
            }
        }
        Ok(())
    }
}

/// Runs the full execution order (initialization, mitigation, computing, and
/// frame layers) on a tableau.  Every computing gate must carry a Clifford
/// catalog tag.
pub fn evolve(circuit: &LayeredCircuit, assignment: &GateAssignment) -> Result<Tableau> {
    assignment.validate_for(circuit)?;
    let catalog = single_qubit_cliffords();
    let nl = circuit.num_frame_layers();
    let n = circuit.n();
    let mut t = Tableau::new(n);
    for j in 1..=nl + 1 {
        for q in 0..n {
            t.apply_pauli(q, assignment.mitigation_at(circuit.mitigation_slot(2 * j - 1, q)));
        }
        for q in 0..n {
            let slot = circuit.computing_slot(j, q);
            let idx = assignment.computing_at(slot).clifford_index().ok_or_else(|| {
                Error::NotClifford(format!("computing slot ({j}, {q}) holds a non-Clifford gate"))
            })?;
            if idx != 0 {
                t.apply_1q(&catalog[idx], q);
            }
        }
        for q in 0..n {
            t.apply_pauli(q, assignment.mitigation_at(circuit.mitigation_slot(2 * j, q)));
        }
        if j <= nl {
            for g in &circuit.frame_layers()[j - 1] {
                t.apply_2q(g.clifford(), g.control, g.target);
            }
        }
    }
    #[cfg(debug_assertions)]
    t.validate()?;
    Ok(t)
}

/// Exact error-free expectation of the circuit observable under a Clifford
/// assignment; always `-1`, `0`, or `+1`.
pub fn clifford_expectation(circuit: &LayeredCircuit, assignment: &GateAssignment) -> Result<f64> {
    let t = evolve(circuit, assignment)?;
    let obs = circuit.observable().pauli_string(circuit.n())?;
    Ok(t.expectation_pauli(&obs))
}

/// Stabilizer generators of the pre-measurement state, for fidelity
/// estimation by sampling group elements.
pub fn stabilizer_group_observables(
    circuit: &LayeredCircuit,
    assignment: &GateAssignment,
) -> Result<Vec<(i8, PauliString)>> {
    Ok(evolve(circuit, assignment)?.stabilizer_generators())
}

/// Uniformly samples one element of the stabilizer group spanned by
/// `generators`, with its exact sign.
pub fn sample_group_element<R: rand::Rng>(
    generators: &[(i8, PauliString)],
    rng: &mut R,
) -> (i8, PauliString) {
    let n = generators[0].1.n();
    let mut acc_phase = 0u8;
    let mut acc = PauliString::identity(n);
    for (sign, letters) in generators {
        if rng.gen::<bool>() {
            let phase = if *sign < 0 { 2 } else { 0 };
            let (p, prod) = signed_mul((acc_phase, &acc), (phase, letters));
            acc_phase = p;
            acc = prod;
        }
    }
    (if acc_phase == 0 { 1 } else { -1 }, acc)
}
