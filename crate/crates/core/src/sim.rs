//! Dense statevector simulation.
//!
//! Basis index convention: qubit 0 is the most significant bit of the basis
//! index, so formatting an index as an `n`-character binary string puts qubit 0
//! leftmost. A bigram index `prefix ∥ suffix` is then a plain string split.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 24;

const NORM_TOL: f64 = 1e-9;
const UNITARY_TOL: f64 = 1e-12;

/// A 2×2 unitary acting on one qubit, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    m: [[Complex64; 2]; 2],
}

impl Unitary2 {
    /// General 2×2 unitary. Rejects matrices with `‖U†U − I‖` entries above 1e-9.
    pub fn new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let u = Unitary2 { m };
        let p = u.adjoint().mul(&u);
        let id = Unitary2::identity();
        for r in 0..2 {
            for c in 0..2 {
                if (p.m[r][c] - id.m[r][c]).norm() > NORM_TOL {
                    return Err(Error::arg(format!("matrix is not unitary: {m:?}")));
                }
            }
        }
        Ok(u)
    }

    /// The parameterized form `[[α, β], [−β̄, ᾱ]]` with `|α|² + |β|² = 1`.
    pub fn from_alpha_beta(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if !n.is_finite() || (n - 1.0).abs() > UNITARY_TOL {
            return Err(Error::arg(format!(
                "|alpha|^2 + |beta|^2 = {n}, expected 1"
            )));
        }
        Ok(Unitary2 {
            m: [[alpha, beta], [-beta.conj(), alpha.conj()]],
        })
    }

    pub(crate) const fn from_matrix_unchecked(m: [[Complex64; 2]; 2]) -> Self {
        Unitary2 { m }
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Unitary2 {
            m: [[one, zero], [zero, one]],
        }
    }

    pub fn pauli_x() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Unitary2 {
            m: [[zero, one], [one, zero]],
        }
    }

    pub fn hadamard() -> Self {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Unitary2 { m: [[s, s], [s, -s]] }
    }

    pub fn matrix(&self) -> &[[Complex64; 2]; 2] {
        &self.m
    }

    /// Top-left entry (α in the parameterized form).
    pub fn alpha(&self) -> Complex64 {
        self.m[0][0]
    }

    /// Top-right entry (β in the parameterized form).
    pub fn beta(&self) -> Complex64 {
        self.m[0][1]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Unitary2 {
            m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]],
        }
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Unitary2) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Unitary2 { m }
    }
}

/// Dense amplitude vector over `2^num_qubits` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// The all-zeros basis state `|0…0⟩`.
    pub fn zeros(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_register(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::arg(format!(
                "basis index {index} out of range for {num_qubits} qubits"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps explicit amplitudes. The length must be a power of two and the
    /// vector must have unit norm within 1e-9.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::arg(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_register(num_qubits)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::arg(format!("state norm^2 is {norm}, expected 1")));
        }
        Ok(StateVector {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::arg("inner product of states with different qubit counts"));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::arg(format!(
                "qubit {qubit} out of range for a {}-qubit register",
                self.num_qubits
            )));
        }
        Ok(())
    }

    fn bit_mask(&self, qubit: usize) -> usize {
        1 << (self.num_qubits - 1 - qubit)
    }

    /// Applies `gate` to `qubit` in place.
    pub fn apply_single(&mut self, gate: &Unitary2, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        let mask = self.bit_mask(qubit);
        let [[a, b], [c, d]] = gate.m;
        let dim = self.amplitudes.len();
        // Blocks of 2·mask indices; the lower half has the bit clear.
        let mut base = 0;
        while base < dim {
            for i in base..base + mask {
                let j = i | mask;
                let x0 = self.amplitudes[i];
                let x1 = self.amplitudes[j];
                self.amplitudes[i] = a * x0 + b * x1;
                self.amplitudes[j] = c * x0 + d * x1;
            }
            base += mask << 1;
        }
        Ok(())
    }

    /// Applies CNOT in place.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::arg(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        let cmask = self.bit_mask(control);
        let tmask = self.bit_mask(target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        match gate {
            Gate::Single { target, unitary } => self.apply_single(unitary, *target),
            Gate::Cnot { control, target } => self.apply_cnot(*control, *target),
        }
    }

    /// Probability that `qubit` reads 1.
    pub fn marginal_probability_one(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = self.bit_mask(qubit);
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Seeded multinomial sampling of computational-basis measurements.
    pub fn sample_shots(&self, shots: u64, seed: u64) -> Result<ShotCounts> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_shots_with(shots, &mut rng)
    }

    pub fn sample_shots_with<R: rand::Rng + ?Sized>(
        &self,
        shots: u64,
        rng: &mut R,
    ) -> Result<ShotCounts> {
        if shots == 0 {
            return Err(Error::arg("shots must be at least 1"));
        }
        let dist = WeightedIndex::new(self.probabilities())
            .map_err(|e| Error::arg(format!("cannot sample from state: {e}")))?;
        let mut by_index: BTreeMap<usize, u64> = BTreeMap::new();
        for _ in 0..shots {
            *by_index.entry(dist.sample(rng)).or_default() += 1;
        }
        let counts = by_index
            .into_iter()
            .map(|(i, c)| (bitstring(i, self.num_qubits), c))
            .collect();
        Ok(ShotCounts {
            counts,
            total_shots: shots,
        })
    }
}

/// Free-function form of [`StateVector::apply_single`].
pub fn apply_single_qubit_gate(
    mut state: StateVector,
    gate: &Unitary2,
    qubit: usize,
) -> Result<StateVector> {
    state.apply_single(gate, qubit)?;
    Ok(state)
}

/// Free-function form of [`StateVector::apply_cnot`].
pub fn apply_cnot(mut state: StateVector, control: usize, target: usize) -> Result<StateVector> {
    state.apply_cnot(control, target)?;
    Ok(state)
}

/// Runs `circuit` on `initial`, or on `|0…0⟩` when `initial` is `None`.
pub fn run_circuit(circuit: &Circuit, initial: Option<StateVector>) -> Result<StateVector> {
    let mut state = match initial {
        Some(s) => s,
        None => StateVector::zeros(circuit.num_qubits())?,
    };
    if state.num_qubits() != circuit.num_qubits() {
        return Err(Error::arg(format!(
            "circuit has {} qubits but the state has {}",
            circuit.num_qubits(),
            state.num_qubits()
        )));
    }
    for gate in circuit.gates() {
        state.apply_gate(gate)?;
    }
    Ok(state)
}

/// Measurement outcomes keyed by bitstring (qubit 0 leftmost).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotCounts {
    pub counts: BTreeMap<String, u64>,
    pub total_shots: u64,
}

impl ShotCounts {
    pub fn get(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    /// Fraction of shots in which `qubit` read 1.
    pub fn frequency_one(&self, qubit: usize) -> f64 {
        let ones: u64 = self
            .counts
            .iter()
            .filter(|(bits, _)| bits.as_bytes().get(qubit) == Some(&b'1'))
            .map(|(_, c)| *c)
            .sum();
        ones as f64 / self.total_shots as f64
    }
}

/// Formats a basis index as a bitstring with qubit 0 leftmost.
pub fn bitstring(index: usize, num_qubits: usize) -> String {
    (0..num_qubits)
        .map(|q| {
            if index >> (num_qubits - 1 - q) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

fn check_register(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        return Err(Error::arg(format!(
            "register size {num_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn identity_gate_is_noop() {
        let s = StateVector::from_amplitudes(vec![c(0.6), Complex64::new(0.0, 0.8)]).unwrap();
        let out = apply_single_qubit_gate(s.clone(), &Unitary2::identity(), 0).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn x_flips_zero_to_one() {
        let s = StateVector::zeros(1).unwrap();
        let out = apply_single_qubit_gate(s, &Unitary2::pauli_x(), 0).unwrap();
        assert_eq!(out.amplitudes(), &[c(0.0), c(1.0)]);
    }

    #[test]
    fn quarter_turn_x_rotation_gives_even_odds() {
        // Hand-multiplied [[cos t, -i sin t], [-i sin t, cos t]] · (1, 0) at t = π/4.
        let t = std::f64::consts::FRAC_PI_4;
        let u = Unitary2::from_alpha_beta(c(t.cos()), Complex64::new(0.0, -t.sin())).unwrap();
        let out = apply_single_qubit_gate(StateVector::zeros(1).unwrap(), &u, 0).unwrap();
        assert_abs_diff_eq!(out.marginal_probability_one(0).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitudes()[1].im, -FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn gate_on_missing_qubit_is_rejected() {
        let s = StateVector::zeros(2).unwrap();
        assert!(matches!(
            apply_single_qubit_gate(s, &Unitary2::pauli_x(), 2),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn cnot_truth_table() {
        let s = apply_cnot(StateVector::basis(2, 0b00).unwrap(), 0, 1).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b00).unwrap());
        // |10⟩: qubit 0 set.
        let s = apply_cnot(StateVector::basis(2, 0b10).unwrap(), 0, 1).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b11).unwrap());
    }

    #[test]
    fn cnot_makes_bell_state() {
        let h = FRAC_1_SQRT_2;
        let s = StateVector::from_amplitudes(vec![c(h), c(0.0), c(h), c(0.0)]).unwrap();
        let out = apply_cnot(s, 0, 1).unwrap();
        // 4×4 CNOT matrix (control = leftmost bit) applied by hand.
        let expected = [c(h), c(0.0), c(0.0), c(h)];
        for (a, b) in out.amplitudes().iter().zip(expected) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cnot_same_qubit_is_rejected() {
        let s = StateVector::zeros(2).unwrap();
        assert!(apply_cnot(s, 1, 1).is_err());
    }

    #[test]
    fn marginals() {
        assert_eq!(StateVector::zeros(1).unwrap().marginal_probability_one(0).unwrap(), 0.0);
        let h = FRAC_1_SQRT_2;
        let plus = StateVector::from_amplitudes(vec![c(h), c(h)]).unwrap();
        assert_abs_diff_eq!(plus.marginal_probability_one(0).unwrap(), 0.5, epsilon = 1e-12);
        let bell = StateVector::from_amplitudes(vec![c(h), c(0.0), c(0.0), c(h)]).unwrap();
        for q in 0..2 {
            assert_abs_diff_eq!(bell.marginal_probability_one(q).unwrap(), 0.5, epsilon = 1e-12);
        }
        assert!(bell.marginal_probability_one(2).is_err());
    }

    #[test]
    fn shots_on_basis_state() {
        let s = StateVector::basis(1, 1).unwrap();
        let counts = s.sample_shots(100, 3).unwrap();
        assert_eq!(counts.get("1"), 100);
        assert_eq!(counts.counts.len(), 1);
    }

    #[test]
    fn shots_uniform_superposition() {
        let h = FRAC_1_SQRT_2;
        let plus = StateVector::from_amplitudes(vec![c(h), c(h)]).unwrap();
        let counts = plus.sample_shots(100_000, 11).unwrap();
        let f = counts.get("1") as f64 / 1e5;
        // Binomial sd is 0.0016; ±0.01 is about 6 sd.
        assert!((0.49..=0.51).contains(&f), "{f}");
        assert_eq!(counts.counts.values().sum::<u64>(), 100_000);
    }

    #[test]
    fn shots_are_seeded() {
        let h = FRAC_1_SQRT_2;
        let plus = StateVector::from_amplitudes(vec![c(h), c(h)]).unwrap();
        assert_eq!(plus.sample_shots(500, 9).unwrap(), plus.sample_shots(500, 9).unwrap());
    }

    #[test]
    fn zero_shots_rejected() {
        assert!(StateVector::zeros(1).unwrap().sample_shots(0, 1).is_err());
    }

    #[test]
    fn bitstring_puts_qubit_zero_left() {
        assert_eq!(bitstring(0b101100, 6), "101100");
        assert_eq!(bitstring(1, 3), "001");
    }

    #[test]
    fn register_limits() {
        assert!(StateVector::zeros(0).is_err());
        assert!(StateVector::zeros(MAX_QUBITS + 1).is_err());
        assert!(StateVector::from_amplitudes(vec![c(1.0), c(0.0), c(0.0)]).is_err());
        assert!(StateVector::from_amplitudes(vec![c(1.0), c(1.0)]).is_err());
    }

    #[test]
    fn alpha_beta_form_checks_normalization() {
        assert!(Unitary2::from_alpha_beta(c(1.0), c(1.0)).is_err());
        let u = Unitary2::from_alpha_beta(c(0.6), Complex64::new(0.0, 0.8)).unwrap();
        assert!(Unitary2::new(*u.matrix()).is_ok());
    }
}
