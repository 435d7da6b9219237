//! Dense quantum state representations: full density matrices and pure
//! statevectors.
//!
//! Index convention (shared with [`crate::pauli::PauliString::matrix`]):
//! qubit 0 is the **most significant** bit of a basis index, i.e. the leftmost
//! tensor factor.  Basis index `i` assigns qubit `q` the bit
//! `(i >> (n - 1 - q)) & 1`.
//!
//! Multi-qubit operators are given in the same convention: for an operator on
//! `qubits = [a, b]`, the first listed qubit is the most significant bit of
//! the operator's own 4-dimensional index (matching
//! [`crate::pauli::code_matrix`] and the two-qubit gate catalog).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::pauli::unpack_code;
use crate::{Error, Result};

/// Largest qubit count admitted by the dense simulator.
pub const MAX_DENSE_QUBITS: usize = 12;

/// Bit position (within a basis index) of qubit `q` out of `n`.
#[inline]
fn bit_shift(n: usize, q: usize) -> usize {
    n - 1 - q
}

/// All basis indices of an `n_bits`-bit register whose bits at `shifts` are
/// zero, in increasing order.  `shifts` must be sorted ascending.
fn masked_bases(n_bits: usize, shifts: &[usize]) -> Vec<usize> {
    let free = n_bits - shifts.len();
    let mut out = Vec::with_capacity(1 << free);
    for m in 0..(1usize << free) {
        let mut idx = m;
        for &s in shifts {
            let low = idx & ((1 << s) - 1);
            idx = ((idx >> s) << (s + 1)) | low;
        }
        out.push(idx);
    }
    out
}

/// Scatter the bits of sub-index `t` (first qubit in `shifts_by_qubit` =
/// most significant bit of `t`) onto their index positions.
#[inline]
fn spread_sub_index(t: usize, shifts_by_qubit: &[usize]) -> usize {
    let k = shifts_by_qubit.len();
    let mut idx = 0;
    for (pos, &s) in shifts_by_qubit.iter().enumerate() {
        let bit = (t >> (k - 1 - pos)) & 1;
        idx |= bit << s;
    }
    idx
}

/// Precomputed action of a Pauli word on basis states: `P |b> = phase[b] |b ^ xmask>`.
struct PauliAction {
    xmask: usize,
    /// Phase accumulated per basis index, one of {1, i, -1, -i}.
    phases: Vec<Complex64>,
}

impl PauliAction {
    /// `qubits` lists the support (first = most significant code digit),
    /// `code` is the packed base-4 Pauli code over that support.
    fn new(n: usize, qubits: &[usize], code: usize) -> Self {
        let letters = unpack_code(code, qubits.len());
        let dim = 1usize << n;
        let mut xmask = 0usize;
        // (x, z) bits per involved index position.
        let mut zs: Vec<(usize, bool)> = Vec::new();
        let mut global = Complex64::new(1.0, 0.0);
        for (&q, &p) in qubits.iter().zip(letters.iter()) {
            let (xb, zb) = p.xz();
            let (x, z) = (xb != 0, zb != 0);
            let s = bit_shift(n, q);
            if x {
                xmask |= 1 << s;
            }
            if z {
                zs.push((s, x));
            }
            // Y |b> = i (-1)^b |b ^ 1rangle carries a constant factor i on top
            // of the (-1)^b handled below.
            if x && z {
                global *= Complex64::new(0.0, 1.0);
            }
        }
        let mut phases = vec![Complex64::new(0.0, 0.0); dim];
        for (b, slot) in phases.iter_mut().enumerate() {
            let mut neg = false;
            for &(s, _) in &zs {
                if (b >> s) & 1 == 1 {
                    neg = !neg;
                }
            }
            *slot = if neg { -global } else { global };
        }
        PauliAction { xmask, phases }
    }
}

/// Apply `M` (a `2^k x 2^k` operator on `qubits`) from the left to every
/// column of `data` (a `dim x dim` matrix stored column-major).
fn left_multiply(
    data: &mut DMatrix<Complex64>,
    n: usize,
    qubits: &[usize],
    m: &DMatrix<Complex64>,
) {
    let dim = 1usize << n;
    let k = qubits.len();
    let d = 1usize << k;
    let shifts_by_qubit: Vec<usize> = qubits.iter().map(|&q| bit_shift(n, q)).collect();
    let mut sorted = shifts_by_qubit.clone();
    sorted.sort_unstable();
    let bases = masked_bases(n, &sorted);
    let offsets: Vec<usize> = (0..d).map(|t| spread_sub_index(t, &shifts_by_qubit)).collect();

    let slice = data.as_mut_slice();
    let mut v = vec![Complex64::new(0.0, 0.0); d];
    let mut w = vec![Complex64::new(0.0, 0.0); d];
    for c in 0..dim {
        let col = c * dim;
        for &base in &bases {
            for t in 0..d {
                v[t] = slice[col + base + offsets[t]];
            }
            for (tp, out) in w.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (t, &vt) in v.iter().enumerate() {
                    acc += m[(tp, t)] * vt;
                }
                *out = acc;
            }
            for t in 0..d {
                slice[col + base + offsets[t]] = w[t];
            }
        }
    }
}

/// Apply `M†` (for the same operator layout as [`left_multiply`]) from the
/// right: `data <- data · M†`.
fn right_multiply_dagger(
    data: &mut DMatrix<Complex64>,
    n: usize,
    qubits: &[usize],
    m: &DMatrix<Complex64>,
) {
    let dim = 1usize << n;
    let k = qubits.len();
    let d = 1usize << k;
    let shifts_by_qubit: Vec<usize> = qubits.iter().map(|&q| bit_shift(n, q)).collect();
    let mut sorted = shifts_by_qubit.clone();
    sorted.sort_unstable();
    let bases = masked_bases(n, &sorted);
    let offsets: Vec<usize> = (0..d).map(|t| spread_sub_index(t, &shifts_by_qubit)).collect();

    let mut v = vec![Complex64::new(0.0, 0.0); d];
    let mut w = vec![Complex64::new(0.0, 0.0); d];
    for r in 0..dim {
        for &base in &bases {
            for t in 0..d {
                v[t] = data[(r, base + offsets[t])];
            }
            // (rho M†)[r, c_tp] = sum_t rho[r, c_t] conj(M[tp, t])
            for (tp, out) in w.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (t, &vt) in v.iter().enumerate() {
                    acc += vt * m[(tp, t)].conj();
                }
                *out = acc;
            }
            for t in 0..d {
                data[(r, base + offsets[t])] = w[t];
            }
        }
    }
}

/// Full density matrix of an `n`-qubit register (`n <= 12`).
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    n: usize,
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// `|0...0><0...0|` on `n` qubits.
    pub fn zero_state(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_DENSE_QUBITS {
            return Err(Error::CapExceeded(format!(
                "dense simulation supports 1..={MAX_DENSE_QUBITS} qubits, got {n}"
            )));
        }
        let dim = 1usize << n;
        let mut data = DMatrix::zeros(dim, dim);
        data[(0, 0)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        self.data.diagonal().sum()
    }

    /// Max absolute deviation from Hermiticity, `max |rho - rho†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                let d = (self.data[(r, c)] - self.data[(c, r)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Conjugate by a unitary on the listed qubits: `rho <- U rho U†`.
    pub fn apply_unitary(&mut self, qubits: &[usize], u: &DMatrix<Complex64>) -> Result<()> {
        self.check_support(qubits, u.nrows())?;
        left_multiply(&mut self.data, self.n, qubits, u);
        right_multiply_dagger(&mut self.data, self.n, qubits, u);
        Ok(())
    }

    /// Conjugate by a single Pauli word: `rho <- P rho P`.  Fast path used for
    /// mitigation-gate insertion and Pauli-channel terms.
    pub fn apply_pauli_code(&mut self, qubits: &[usize], code: usize) -> Result<()> {
        self.check_support(qubits, 1 << qubits.len())?;
        if code == 0 {
            return Ok(());
        }
        let action = PauliAction::new(self.n, qubits, code);
        self.data = permute_phase(&self.data, &action);
        Ok(())
    }

    /// Apply a (quasi-)mixture of Pauli conjugations:
    /// `rho <- sum_s w_s P_s rho P_s`.
    ///
    /// Negative weights are accepted — quasi-probability evolution is used by
    /// exact mitigation sums — but the weights must still sum to 1 so that the
    /// trace is preserved.
    pub fn apply_pauli_mixture(&mut self, qubits: &[usize], weights: &[(usize, f64)]) -> Result<()> {
        self.check_support(qubits, 1 << qubits.len())?;
        let total: f64 = weights.iter().map(|&(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidNoise(format!(
                "Pauli mixture weights must sum to 1, got {total}"
            )));
        }
        let dim = self.dim();
        let mut out = DMatrix::zeros(dim, dim);
        for &(code, w) in weights {
            if w == 0.0 {
                continue;
            }
            if code == 0 {
                out += self.data.scale(w);
            } else {
                let action = PauliAction::new(self.n, qubits, code);
                accumulate_permute_phase(&mut out, &self.data, &action, w);
            }
        }
        self.data = out;
        Ok(())
    }

    /// Apply a general channel given by Kraus operators on the listed qubits:
    /// `rho <- sum_k K_k rho K_k†`.
    pub fn apply_kraus(&mut self, qubits: &[usize], kraus: &[DMatrix<Complex64>]) -> Result<()> {
        let d = 1usize << qubits.len();
        if kraus.is_empty() {
            return Err(Error::InvalidNoise("empty Kraus list".into()));
        }
        for k in kraus {
            self.check_support(qubits, k.nrows())?;
            if k.ncols() != d {
                return Err(Error::Dimension(format!(
                    "Kraus operator is {}x{}, expected {d}x{d}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        let dim = self.dim();
        let mut out = DMatrix::zeros(dim, dim);
        for k in kraus {
            let mut term = self.data.clone();
            left_multiply(&mut term, self.n, qubits, k);
            right_multiply_dagger(&mut term, self.n, qubits, k);
            out += term;
        }
        self.data = out;
        Ok(())
    }

    /// Real parts of the diagonal: the Born probabilities of computational
    /// basis outcomes, indexed with qubit 0 as the most significant bit.
    pub fn diagonal_probs(&self) -> Vec<f64> {
        self.data.diagonal().iter().map(|z| z.re).collect()
    }

    fn check_support(&self, qubits: &[usize], rows: usize) -> Result<()> {
        if qubits.is_empty() {
            return Err(Error::Dimension("operator must touch at least one qubit".into()));
        }
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.n {
                return Err(Error::Dimension(format!(
                    "qubit {q} out of range for {}-qubit state",
                    self.n
                )));
            }
            if qubits[..i].contains(&q) {
                return Err(Error::Dimension(format!("duplicate qubit {q} in operator support")));
            }
        }
        let d = 1usize << qubits.len();
        if rows != d {
            return Err(Error::Dimension(format!(
                "operator has {rows} rows, expected {d} for {} qubit(s)",
                qubits.len()
            )));
        }
        Ok(())
    }
}

/// `out = P rho P` for a Pauli action (permutation + phases), freshly allocated.
fn permute_phase(rho: &DMatrix<Complex64>, action: &PauliAction) -> DMatrix<Complex64> {
    let dim = rho.nrows();
    let mut out = DMatrix::zeros(dim, dim);
    accumulate_permute_phase(&mut out, rho, action, 1.0);
    out
}

/// `out += w · P rho P` in a single pass.
///
/// With `P|b> = phi(b)|b ^ x>`, the conjugated matrix is
/// `(P rho P†)[r][c] = phi(r ^ x) conj(phi(c ^ x)) rho[r ^ x][c ^ x]`.
fn accumulate_permute_phase(
    out: &mut DMatrix<Complex64>,
    rho: &DMatrix<Complex64>,
    action: &PauliAction,
    w: f64,
) {
    let dim = rho.nrows();
    let x = action.xmask;
    for c in 0..dim {
        let cc = c ^ x;
        let col_phase = action.phases[cc].conj() * w;
        for r in 0..dim {
            let rr = r ^ x;
            out[(r, c)] += action.phases[rr] * col_phase * rho[(rr, cc)];
        }
    }
}

/// Pure statevector of an `n`-qubit register, used by the per-shot trajectory
/// sampler.  Same index convention as [`DensityMatrix`].
#[derive(Clone, Debug)]
pub struct Statevector {
    n: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    pub fn zero_state(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_DENSE_QUBITS {
            return Err(Error::CapExceeded(format!(
                "dense simulation supports 1..={MAX_DENSE_QUBITS} qubits, got {n}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `psi <- U psi` on the listed qubits.
    pub fn apply_unitary(&mut self, qubits: &[usize], u: &DMatrix<Complex64>) -> Result<()> {
        let k = qubits.len();
        let d = 1usize << k;
        if u.nrows() != d || u.ncols() != d {
            return Err(Error::Dimension(format!(
                "operator is {}x{}, expected {d}x{d}",
                u.nrows(),
                u.ncols()
            )));
        }
        for (i, &q) in qubits.iter().enumerate() {
            if q >= self.n {
                return Err(Error::Dimension(format!(
                    "qubit {q} out of range for {}-qubit state",
                    self.n
                )));
            }
            if qubits[..i].contains(&q) {
                return Err(Error::Dimension(format!("duplicate qubit {q} in operator support")));
            }
        }
        let shifts_by_qubit: Vec<usize> = qubits.iter().map(|&q| bit_shift(self.n, q)).collect();
        let mut sorted = shifts_by_qubit.clone();
        sorted.sort_unstable();
        let bases = masked_bases(self.n, &sorted);
        let offsets: Vec<usize> = (0..d).map(|t| spread_sub_index(t, &shifts_by_qubit)).collect();
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        for &base in &bases {
            for t in 0..d {
                v[t] = self.amps[base + offsets[t]];
            }
            for tp in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for (t, &vt) in v.iter().enumerate() {
                    acc += u[(tp, t)] * vt;
                }
                self.amps[base + offsets[tp]] = acc;
            }
        }
        Ok(())
    }

    /// `psi <- P psi` for a packed Pauli word (fast path, no matrix build).
    pub fn apply_pauli_code(&mut self, qubits: &[usize], code: usize) -> Result<()> {
        for &q in qubits {
            if q >= self.n {
                return Err(Error::Dimension(format!(
                    "qubit {q} out of range for {}-qubit state",
                    self.n
                )));
            }
        }
        if code == 0 {
            return Ok(());
        }
        let action = PauliAction::new(self.n, qubits, code);
        let x = action.xmask;
        let dim = self.amps.len();
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (i, slot) in out.iter_mut().enumerate() {
            let src = i ^ x;
            *slot = action.phases[src] * self.amps[src];
        }
        self.amps = out;
        Ok(())
    }

    /// Two-outcome Kraus unraveling: pick branch `k` with probability
    /// `||K_k psi||^2`, renormalize, and return the chosen branch index.
    pub fn kraus_jump<R: Rng>(
        &mut self,
        qubits: &[usize],
        kraus: &[DMatrix<Complex64>],
        rng: &mut R,
    ) -> Result<usize> {
        if kraus.is_empty() {
            return Err(Error::InvalidNoise("empty Kraus list".into()));
        }
        let mut weights = Vec::with_capacity(kraus.len());
        let mut branches = Vec::with_capacity(kraus.len());
        for k in kraus {
            let mut branch = self.clone();
            branch.apply_unitary(qubits, k)?;
            let w = branch.norm_sq();
            weights.push(w);
            branches.push(branch);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidNoise(format!(
                "Kraus branch weights sum to {total}, expected 1 (not trace preserving?)"
            )));
        }
        let mut u = rng.gen::<f64>() * total;
        let mut chosen = kraus.len() - 1;
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                chosen = i;
                break;
            }
            u -= w;
        }
        let mut state = branches.swap_remove(chosen);
        let scale = 1.0 / weights[chosen].sqrt();
        for a in &mut state.amps {
            *a *= scale;
        }
        *self = state;
        Ok(chosen)
    }

    /// Sample a computational-basis outcome; returns a packed word with bit
    /// `q` = outcome of qubit `q`.
    pub fn sample_outcome<R: Rng>(&self, rng: &mut R) -> u64 {
        let mut u = rng.gen::<f64>() * self.norm_sq();
        let mut index = self.amps.len() - 1;
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if u < p {
                index = i;
                break;
            }
            u -= p;
        }
        // Convert basis index (qubit 0 = MSB) to packed word (bit q = qubit q).
        let mut word = 0u64;
        for q in 0..self.n {
            if (index >> bit_shift(self.n, q)) & 1 == 1 {
                word |= 1 << q;
            }
        }
        word
    }
}
