//! Circuit representation and the circuit families used by the experiments.
//!
//! Rotation conventions differ by role and are named accordingly:
//!
//! * [`x_rotation`] uses the half-angle convention of the rotation-accumulation
//!   classifier: rotating `|0⟩` by `θ` gives `P(|1⟩) = sin²θ` (the standard
//!   `RX(2θ)`).
//! * [`ry`], [`rz`] and [`phase`] follow the usual gate conventions
//!   (`RY(θ) = exp(−iθY/2)` and so on) and drive state preparation, the
//!   feature maps and the Born machine ansatz.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::Unitary2;

/// Cumulative rotation beyond which an accumulated qubit starts to "turn the
/// corner" and its `P(|1⟩)` decreases again.
pub const SATURATION_ANGLE: f64 = FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Single { target: usize, unitary: Unitary2 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    fn qubits_below(&self, n: usize) -> bool {
        match *self {
            Gate::Single { target, .. } => target < n,
            Gate::Cnot { control, target } => control < n && target < n && control != target,
        }
    }

    pub fn adjoint(&self) -> Gate {
        match *self {
            Gate::Single { target, unitary } => Gate::Single {
                target,
                unitary: unitary.adjoint(),
            },
            cnot @ Gate::Cnot { .. } => cnot,
        }
    }
}

/// Ordered gate list over a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::arg("a circuit needs at least one qubit"));
        }
        Ok(Circuit {
            num_qubits,
            gates: Vec::new(),
        })
    }

    pub fn from_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Circuit::new(num_qubits)?;
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        if !gate.qubits_below(self.num_qubits) {
            return Err(Error::arg(format!(
                "gate {gate:?} does not fit a {}-qubit circuit",
                self.num_qubits
            )));
        }
        self.gates.push(gate);
        Ok(self)
    }

    pub fn single(&mut self, target: usize, unitary: Unitary2) -> Result<&mut Self> {
        self.push(Gate::Single { target, unitary })
    }

    pub fn x(&mut self, target: usize) -> Result<&mut Self> {
        self.single(target, Unitary2::pauli_x())
    }

    pub fn h(&mut self, target: usize) -> Result<&mut Self> {
        self.single(target, Unitary2::hadamard())
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.push(Gate::Cnot { control, target })
    }

    /// Appends all gates of `other`, which must act on the same register size.
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::arg(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.num_qubits, self.num_qubits
            )));
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(self)
    }

    /// The circuit implementing `U†`.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }

    /// Re-indexes the gates touching `qubits` onto a register of
    /// `qubits.len()` qubits. Fails if any gate couples a listed qubit to an
    /// unlisted one.
    pub fn restrict(&self, qubits: &[usize]) -> Result<Circuit> {
        let mut map = vec![None; self.num_qubits];
        for (new, &old) in qubits.iter().enumerate() {
            let slot = map
                .get_mut(old)
                .ok_or_else(|| Error::arg(format!("qubit {old} not in circuit")))?;
            *slot = Some(new);
        }
        let mut out = Circuit::new(qubits.len())?;
        for g in &self.gates {
            match *g {
                Gate::Single { target, unitary } => {
                    if let Some(t) = map[target] {
                        out.single(t, unitary)?;
                    }
                }
                Gate::Cnot { control, target } => match (map[control], map[target]) {
                    (Some(c), Some(t)) => {
                        out.cnot(c, t)?;
                    }
                    (None, None) => {}
                    _ => {
                        return Err(Error::arg(format!(
                            "CNOT({control}, {target}) crosses the restricted register"
                        )))
                    }
                },
            }
        }
        Ok(out)
    }
}

fn finite(theta: f64, what: &str) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("{what} angle must be finite, got {theta}")))
    }
}

/// Half-angle X rotation: `α = cos θ`, `β = −i sin θ`, so that `|0⟩` is
/// taken to `P(|1⟩) = sin²θ`. No wrapping is applied to `θ`.
pub fn x_rotation(theta: f64) -> Result<Unitary2> {
    finite(theta, "x-rotation")?;
    Unitary2::from_alpha_beta(
        Complex64::new(theta.cos(), 0.0),
        Complex64::new(0.0, -theta.sin()),
    )
}

/// `RY(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`.
pub fn ry(theta: f64) -> Result<Unitary2> {
    finite(theta, "y-rotation")?;
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(Unitary2::from_matrix_unchecked([
        [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
    ]))
}

/// `RZ(θ) = diag(e^{−iθ/2}, e^{iθ/2})`.
pub fn rz(theta: f64) -> Result<Unitary2> {
    finite(theta, "z-rotation")?;
    let zero = Complex64::new(0.0, 0.0);
    Ok(Unitary2::from_matrix_unchecked([
        [Complex64::from_polar(1.0, -theta / 2.0), zero],
        [zero, Complex64::from_polar(1.0, theta / 2.0)],
    ]))
}

/// Phase gate `diag(1, e^{iλ})`.
pub fn phase(lambda: f64) -> Result<Unitary2> {
    finite(lambda, "phase")?;
    let zero = Complex64::new(0.0, 0.0);
    Ok(Unitary2::from_matrix_unchecked([
        [Complex64::new(1.0, 0.0), zero],
        [zero, Complex64::from_polar(1.0, lambda)],
    ]))
}

/// Rotation-accumulation circuit on `k + 1` qubits: an X rotation on each
/// input qubit, then a CNOT from every input into the final sum qubit.
pub fn build_adder_circuit(angles: &[f64]) -> Result<Circuit> {
    let gates = angles
        .iter()
        .map(|&a| x_rotation(a))
        .collect::<Result<Vec<_>>>()?;
    build_adder_from_unitaries(&gates)
}

/// Adder with arbitrary single-qubit preparations on the inputs.
pub fn build_adder_from_unitaries(inputs: &[Unitary2]) -> Result<Circuit> {
    if inputs.is_empty() {
        return Err(Error::arg("adder needs at least one input"));
    }
    let k = inputs.len();
    let mut c = Circuit::new(k + 1)?;
    for (q, u) in inputs.iter().enumerate() {
        c.single(q, *u)?;
    }
    for q in 0..k {
        c.cnot(q, k)?;
    }
    Ok(c)
}

/// Closed form for the sum qubit of the adder: the probability that an odd
/// number of independent inputs read 1, `(1 − Π(1 − 2pᵢ)) / 2`.
pub fn parity_sum_oracle(probabilities: &[f64]) -> Result<f64> {
    let mut prod = 1.0;
    for &p in probabilities {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::arg(format!("probability {p} outside [0, 1]")));
        }
        prod *= 1.0 - 2.0 * p;
    }
    Ok((1.0 - prod) / 2.0)
}

/// Second-order Pauli-Z evolution feature map on `x.len()` qubits.
///
/// Each repetition applies H to every qubit, a phase `xᵢ` on qubit `i`, and
/// for every pair `i < j` the entangling block `CNOT(i,j) · P((π − xᵢ)(π − xⱼ)) · CNOT(i,j)`.
pub fn build_zz_feature_map(x: &[f64], repetitions: usize) -> Result<Circuit> {
    use std::f64::consts::PI;
    if x.is_empty() {
        return Err(Error::arg("feature map needs at least one dimension"));
    }
    let d = x.len();
    let mut c = Circuit::new(d)?;
    for _ in 0..repetitions {
        for q in 0..d {
            c.h(q)?;
        }
        for (q, &xi) in x.iter().enumerate() {
            c.single(q, phase(xi)?)?;
        }
        for i in 0..d {
            for j in i + 1..d {
                c.cnot(i, j)?;
                c.single(j, phase((PI - x[i]) * (PI - x[j]))?)?;
                c.cnot(i, j)?;
            }
        }
    }
    Ok(c)
}

/// Real-amplitude state preparation. `v.len()` must be a power of two ≥ 2;
/// the prepared state is `v / ‖v‖` on `log₂(v.len())` qubits.
///
/// Qubit `l` is set by a Y rotation uniformly controlled on qubits `0..l`,
/// with angles taken from the binary tree of subtree norms (leaf angles carry
/// the signs). Each uniformly controlled rotation is lowered to `2^l` RY gates
/// interleaved with CNOTs along a Gray-code path.
pub fn amplitude_encode(v: &[f64]) -> Result<Circuit> {
    let dim = v.len();
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::arg(format!(
            "amplitude encoding needs a power-of-two length >= 2, got {dim}"
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("amplitude encoding input has non-finite entries"));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::arg("cannot amplitude-encode the zero vector"));
    }
    let q = dim.trailing_zeros() as usize;

    // sq[l][j]: squared norm of the block of amplitudes whose first l bits are j.
    let mut sq: Vec<Vec<f64>> = vec![Vec::new(); q + 1];
    sq[q] = v.iter().map(|x| x * x).collect();
    for l in (0..q).rev() {
        sq[l] = sq[l + 1].chunks(2).map(|p| p[0] + p[1]).collect();
    }

    let mut c = Circuit::new(q)?;
    for level in 0..q {
        let angles: Vec<f64> = (0..1usize << level)
            .map(|j| {
                if level == q - 1 {
                    2.0 * v[2 * j + 1].atan2(v[2 * j])
                } else {
                    2.0 * sq[level + 1][2 * j + 1]
                        .sqrt()
                        .atan2(sq[level + 1][2 * j].sqrt())
                }
            })
            .collect();
        uniformly_controlled_ry(&mut c, level, &angles)?;
    }
    Ok(c)
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Applies `RY(angles[j])` to `target` conditioned on qubits `0..target`
/// being in basis state `j` (qubit 0 most significant).
fn uniformly_controlled_ry(c: &mut Circuit, target: usize, angles: &[f64]) -> Result<()> {
    let n = angles.len();
    debug_assert_eq!(n, 1 << target);
    if n == 1 {
        if angles[0] != 0.0 {
            c.single(target, ry(angles[0])?)?;
        }
        return Ok(());
    }
    let scale = 1.0 / n as f64;
    for i in 0..n {
        let g = gray(i);
        let theta: f64 = angles
            .iter()
            .enumerate()
            .map(|(j, a)| {
                if (j & g).count_ones().is_multiple_of(2) {
                    *a
                } else {
                    -*a
                }
            })
            .sum::<f64>()
            * scale;
        c.single(target, ry(theta)?)?;
        let flipped = (g ^ gray((i + 1) % n)).trailing_zeros() as usize;
        c.cnot(target - 1 - flipped, target)?;
    }
    Ok(())
}

/// Layered hardware-efficient ansatz for the Born machine: an initial RY
/// column, then per layer a CNOT ring `i → i+1 mod n` followed by RY and RZ
/// columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcbmAnsatz {
    pub num_qubits: usize,
    pub layers: usize,
}

impl QcbmAnsatz {
    pub const DEFAULT_LAYERS: usize = 4;

    pub fn new(num_qubits: usize, layers: usize) -> Self {
        QcbmAnsatz { num_qubits, layers }
    }

    pub fn param_count(&self) -> usize {
        self.layers * self.num_qubits * 2 + self.num_qubits
    }

    pub fn build(&self, params: &[f64]) -> Result<Circuit> {
        build_qcbm_ansatz(self.num_qubits, self.layers, params)
    }
}

pub fn build_qcbm_ansatz(num_qubits: usize, layers: usize, params: &[f64]) -> Result<Circuit> {
    let expected = QcbmAnsatz::new(num_qubits, layers).param_count();
    if params.len() != expected {
        return Err(Error::arg(format!(
            "ansatz with {num_qubits} qubits and {layers} layers takes {expected} parameters, got {}",
            params.len()
        )));
    }
    let n = num_qubits;
    let mut c = Circuit::new(n)?;
    let mut p = params.iter().copied();
    for q in 0..n {
        c.single(q, ry(p.next().unwrap())?)?;
    }
    for _ in 0..layers {
        if n > 1 {
            for q in 0..n {
                c.cnot(q, (q + 1) % n)?;
            }
        }
        for q in 0..n {
            c.single(q, ry(p.next().unwrap())?)?;
        }
        for q in 0..n {
            c.single(q, rz(p.next().unwrap())?)?;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::run_circuit;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn p1_from_zero(u: Unitary2) -> f64 {
        u.matrix()[1][0].norm_sqr()
    }

    #[test]
    fn x_rotation_cases() {
        assert_eq!(x_rotation(0.0).unwrap(), Unitary2::from_alpha_beta(1.0.into(), 0.0.into()).unwrap());
        assert_abs_diff_eq!(p1_from_zero(x_rotation(PI / 2.0).unwrap()), 1.0, epsilon = 1e-15);
        let expected = (PI / 24.0).sin().powi(2);
        assert_abs_diff_eq!(p1_from_zero(x_rotation(PI / 24.0).unwrap()), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.017037, epsilon = 1e-6);
        assert!(x_rotation(f64::NAN).is_err());
        assert!(x_rotation(f64::INFINITY).is_err());
    }

    #[test]
    fn adder_single_input_copies_probability() {
        let theta = 0.37;
        let c = build_adder_circuit(&[theta]).unwrap();
        assert_eq!(c.num_qubits(), 2);
        let s = run_circuit(&c, None).unwrap();
        assert_abs_diff_eq!(s.marginal_probability_one(1).unwrap(), theta.sin().powi(2), epsilon = 1e-12);
    }

    #[test]
    fn adder_two_inputs_at_quarter_turn() {
        let c = build_adder_circuit(&[FRAC_PI_4, FRAC_PI_4]).unwrap();
        let s = run_circuit(&c, None).unwrap();
        assert_abs_diff_eq!(s.marginal_probability_one(2).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn adder_rejects_empty() {
        assert!(build_adder_circuit(&[]).is_err());
    }

    #[test]
    fn parity_oracle_cases() {
        assert_abs_diff_eq!(parity_sum_oracle(&[0.3]).unwrap(), 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(parity_sum_oracle(&[0.5, 0.9]).unwrap(), 0.5, epsilon = 1e-15);
        let (t, f) = (0.4_f64, 1.1_f64);
        let expanded = t.sin().powi(2) * f.cos().powi(2) + t.cos().powi(2) * f.sin().powi(2);
        let oracle = parity_sum_oracle(&[t.sin().powi(2), f.sin().powi(2)]).unwrap();
        assert_abs_diff_eq!(oracle, expanded, epsilon = 1e-12);
        assert!(parity_sum_oracle(&[1.2]).is_err());
        assert!(parity_sum_oracle(&[-0.1]).is_err());
    }

    #[test]
    fn zz_map_single_dimension_zero_input() {
        let c = build_zz_feature_map(&[0.0], 1).unwrap();
        let s = run_circuit(&c, None).unwrap();
        for a in s.amplitudes() {
            assert_abs_diff_eq!(a.re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zz_map_gate_count() {
        // 2 reps × (2 H + 2 phase + 3 for the single pair)
        assert_eq!(build_zz_feature_map(&[0.5, 1.0], 2).unwrap().len(), 14);
        assert!(build_zz_feature_map(&[], 2).is_err());
    }

    #[test]
    fn zz_map_is_deterministic() {
        let x = [0.2, 1.3, 2.9];
        assert_eq!(build_zz_feature_map(&x, 2).unwrap(), build_zz_feature_map(&x, 2).unwrap());
    }

    fn encoded(v: &[f64]) -> Vec<f64> {
        let s = run_circuit(&amplitude_encode(v).unwrap(), None).unwrap();
        for a in s.amplitudes() {
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
        }
        s.amplitudes().iter().map(|a| a.re).collect()
    }

    #[test]
    fn amplitude_encode_cases() {
        let a = encoded(&[1.0, 0.0]);
        assert_abs_diff_eq!(a[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1], 0.0, epsilon = 1e-12);
        for x in encoded(&[1.0, 1.0, 1.0, 1.0]) {
            assert_abs_diff_eq!(x, 0.5, epsilon = 1e-12);
        }
        let a = encoded(&[3.0, 4.0]);
        assert_abs_diff_eq!(a[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn amplitude_encode_keeps_signs() {
        let v = [0.5, -0.5, -0.5, 0.5, 0.0, 0.0, 0.0, 0.0];
        let a = encoded(&v);
        for (x, y) in a.iter().zip(v) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn amplitude_encode_errors() {
        assert!(amplitude_encode(&[0.0, 0.0]).is_err());
        assert!(amplitude_encode(&[1.0, 2.0, 3.0]).is_err());
        assert!(amplitude_encode(&[1.0]).is_err());
    }

    #[test]
    fn qcbm_ansatz_shape() {
        assert_eq!(QcbmAnsatz::new(2, 1).param_count(), 6);
        assert!(build_qcbm_ansatz(2, 1, &[0.0; 5]).is_err());
        for layers in 0..3 {
            let a = QcbmAnsatz::new(3, layers);
            let s = run_circuit(&a.build(&vec![0.0; a.param_count()]).unwrap(), None).unwrap();
            assert_abs_diff_eq!(s.amplitudes()[0].norm_sqr(), 1.0, epsilon = 1e-12);
        }
        let s = run_circuit(&build_qcbm_ansatz(1, 0, &[PI / 2.0]).unwrap(), None).unwrap();
        assert_abs_diff_eq!(s.probabilities()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.probabilities()[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn inverse_undoes_circuit() {
        let c = build_zz_feature_map(&[0.3, 2.0, 1.1], 2).unwrap();
        let mut both = c.clone();
        both.append(&c.inverse()).unwrap();
        let s = run_circuit(&both, None).unwrap();
        assert_abs_diff_eq!(s.probabilities()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn restrict_rejects_crossing_gates() {
        let mut c = Circuit::new(3).unwrap();
        c.x(0).unwrap().cnot(0, 1).unwrap().x(2).unwrap();
        let r = c.restrict(&[0, 1]).unwrap();
        assert_eq!(r.len(), 2);
        assert!(c.restrict(&[1, 2]).is_err());
    }
}
