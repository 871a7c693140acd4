//! Noisy simulation of a small qubit register.
//!
//! Two state representations live here:
//!
//! * [`DensityMatrix`], the dense `2^n x 2^n` complex matrix. It is the
//!   general-purpose state used by [`DensityMatrix::apply_gate`] and friends.
//! * [`PauliEngine`], which stores the same state as its real coefficients in
//!   the Pauli-string basis (`rho = 2^-n * sum_P c_P P`). Every gate in the
//!   circuit family is a rotation generated by one Pauli string, every
//!   depolarizing channel is a diagonal scaling, and `<Z_q>` is a single
//!   coefficient, so circuit evaluation and its adjoint are cheap real
//!   vector sweeps. Training uses this engine.
//!
//! Rotations follow `exp(-i * angle * G / 2)` with `G` one of `X`, `Y`, `Z`
//! or the controlled-`X` projector form `|1><1| (x) X` for CRX.

mod dense;
mod pauli;

pub use dense::DensityMatrix;
pub use pauli::{BoundCircuit, GradientAccumulator, PauliEngine, PauliState};

use crate::error::{Error, Result};

/// Largest register the dense representations accept.
pub const MAX_QUBITS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Crx,
}

impl GateKind {
    pub fn is_two_qubit(self) -> bool {
        matches!(self, GateKind::Crx)
    }
}

/// Where a gate takes its rotation angle from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleSource {
    /// Trainable parameter at this index.
    Param(usize),
    /// Encoded input feature at this index.
    Input(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub target: usize,
    /// Control qubit, present exactly for [`GateKind::Crx`].
    pub control: Option<usize>,
    pub angle: AngleSource,
}

impl GateOp {
    pub fn single(kind: GateKind, target: usize, angle: AngleSource) -> Self {
        GateOp {
            kind,
            target,
            control: None,
            angle,
        }
    }

    pub fn crx(control: usize, target: usize, angle: AngleSource) -> Self {
        GateOp {
            kind: GateKind::Crx,
            target,
            control: Some(control),
            angle,
        }
    }

    /// Qubits touched, control first for two-qubit gates.
    pub fn qubits(&self) -> Vec<usize> {
        match self.control {
            Some(c) => vec![c, self.target],
            None => vec![self.target],
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.target >= n_qubits {
            return Err(Error::config(format!(
                "gate target {} out of range for {n_qubits} qubits",
                self.target
            )));
        }
        match (self.kind.is_two_qubit(), self.control) {
            (true, Some(c)) if c >= n_qubits => Err(Error::config(format!(
                "gate control {c} out of range for {n_qubits} qubits"
            ))),
            (true, Some(c)) if c == self.target => Err(Error::config(format!(
                "control and target coincide on qubit {c}"
            ))),
            (true, None) => Err(Error::config("CRX gate without a control qubit")),
            (false, Some(_)) => Err(Error::config("single-qubit gate with a control qubit")),
            _ => Ok(()),
        }
    }
}

/// Noise model: depolarizing after every gate, bit-flip on readout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub p_depol_1q: f64,
    pub p_depol_2q: f64,
    pub p_meas_flip: f64,
    pub enabled: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            p_depol_1q: 0.001,
            p_depol_2q: 0.01,
            p_meas_flip: 0.01,
            enabled: true,
        }
    }
}

impl NoiseConfig {
    pub fn off() -> Self {
        NoiseConfig {
            enabled: false,
            ..NoiseConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_depol_1q", self.p_depol_1q),
            ("p_depol_2q", self.p_depol_2q),
            ("p_meas_flip", self.p_meas_flip),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }

    /// Depolarizing probability after a gate of this kind, zero when disabled.
    pub fn gate_depolarizing(&self, kind: GateKind) -> f64 {
        match (self.enabled, kind.is_two_qubit()) {
            (false, _) => 0.0,
            (true, false) => self.p_depol_1q,
            (true, true) => self.p_depol_2q,
        }
    }

    /// Contraction factor the readout bit-flip applies to `<Z>`.
    pub fn readout_factor(&self) -> f64 {
        if self.enabled {
            1.0 - 2.0 * self.p_meas_flip
        } else {
            1.0
        }
    }
}

/// A compiled circuit: input-encoding gates followed by variational gates.
///
/// Encoding gates are single-qubit and take their angles from the input
/// vector; variational gates take theirs from the parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub n_params: usize,
    pub n_inputs: usize,
    pub encoding: Vec<GateOp>,
    pub variational: Vec<GateOp>,
}

impl Circuit {
    pub fn validate(&self) -> Result<()> {
        check_qubits(self.n_qubits)?;
        for g in &self.encoding {
            g.validate(self.n_qubits)?;
            match g.angle {
                AngleSource::Input(j) if j < self.n_inputs && !g.kind.is_two_qubit() => {}
                _ => {
                    return Err(Error::config(format!(
                        "encoding gate {g:?} must be single-qubit with an input angle"
                    )))
                }
            }
        }
        for g in &self.variational {
            g.validate(self.n_qubits)?;
            match g.angle {
                AngleSource::Param(k) if k < self.n_params => {}
                _ => {
                    return Err(Error::config(format!(
                        "variational gate {g:?} must reference a parameter below {}",
                        self.n_params
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn check_lengths(&self, params: &[f64], inputs: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::config(format!(
                "expected {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        if inputs.len() != self.n_inputs {
            return Err(Error::config(format!(
                "expected {} encoding angles, got {}",
                self.n_inputs,
                inputs.len()
            )));
        }
        Ok(())
    }

    fn angle(source: AngleSource, params: &[f64], inputs: &[f64]) -> f64 {
        match source {
            AngleSource::Param(k) => params[k],
            AngleSource::Input(j) => inputs[j],
        }
    }
}

pub(crate) fn check_qubits(n_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n_qubits) {
        Ok(())
    } else {
        Err(Error::config(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )))
    }
}

/// Initial state `|0...0><0...0|`.
pub fn init_state(n_qubits: usize) -> Result<DensityMatrix> {
    DensityMatrix::new(n_qubits)
}

/// Evolves `|0...0>` through the whole circuit on the dense representation.
pub fn simulate_dense(
    params: &[f64],
    inputs: &[f64],
    circuit: &Circuit,
    noise: &NoiseConfig,
) -> Result<DensityMatrix> {
    circuit.validate()?;
    circuit.check_lengths(params, inputs)?;
    let mut rho = DensityMatrix::new(circuit.n_qubits)?;
    for g in circuit.encoding.iter().chain(&circuit.variational) {
        rho.apply_gate_in_place(g, Circuit::angle(g.angle, params, inputs), noise)?;
    }
    Ok(rho)
}

/// `<Z>` on every qubit after running the circuit (readout noise included).
pub fn run_circuit(
    params: &[f64],
    inputs: &[f64],
    circuit: &Circuit,
    noise: &NoiseConfig,
) -> Result<Vec<f64>> {
    let engine = PauliEngine::new(circuit, noise)?;
    let bound = engine.bind(params, circuit.n_qubits)?;
    bound.readout(inputs)
}

/// Loss and `d loss / d params` for a single input.
///
/// `loss_tail` maps the per-qubit `<Z>` values to `(loss, d loss / d <Z>)`.
pub fn gradient<F>(
    params: &[f64],
    inputs: &[f64],
    circuit: &Circuit,
    noise: &NoiseConfig,
    loss_tail: F,
) -> Result<(f64, Vec<f64>)>
where
    F: FnOnce(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let engine = PauliEngine::new(circuit, noise)?;
    let bound = engine.bind(params, circuit.n_qubits)?;
    let encoded = bound.encode(inputs)?;
    let outputs = bound.readout_encoded(&encoded);
    let (loss, d_out) = loss_tail(&outputs)?;
    if !loss.is_finite() || d_out.iter().any(|d| !d.is_finite()) {
        return Err(Error::numeric(format!("non-finite loss {loss}")));
    }
    let mut acc = bound.accumulator();
    acc.add(&encoded, &d_out)?;
    Ok((loss, bound.gradient(&acc)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn one_ry() -> Circuit {
        Circuit {
            n_qubits: 1,
            n_params: 1,
            n_inputs: 0,
            encoding: vec![],
            variational: vec![GateOp::single(GateKind::Ry, 0, AngleSource::Param(0))],
        }
    }

    fn z_loss(out: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((out[0], vec![1.0]))
    }

    #[test]
    fn ry_gradient_is_minus_sine() {
        let c = one_ry();
        let (loss, g) = gradient(&[PI / 2.0], &[], &c, &NoiseConfig::off(), z_loss).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!((g[0] + 1.0).abs() < 1e-12);
        let (_, g) = gradient(&[0.0], &[], &c, &NoiseConfig::off(), z_loss).unwrap();
        assert!(g[0].abs() < 1e-12);
    }

    #[test]
    fn readout_flip_half_randomizes() {
        let c = Circuit {
            variational: vec![],
            n_params: 0,
            ..one_ry()
        };
        let noise = NoiseConfig {
            p_meas_flip: 0.5,
            ..NoiseConfig::default()
        };
        assert_eq!(run_circuit(&[], &[], &c, &noise).unwrap(), vec![0.0]);
        assert_eq!(run_circuit(&[], &[], &c, &NoiseConfig::off()).unwrap(), vec![1.0]);
    }

    #[test]
    fn length_mismatch_is_config_error() {
        let err = run_circuit(&[0.0, 1.0], &[], &one_ry(), &NoiseConfig::off()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn non_finite_loss_surfaces() {
        let err = gradient(&[0.3], &[], &one_ry(), &NoiseConfig::off(), |_| {
            Ok((f64::NAN, vec![1.0]))
        })
        .unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn gate_validation() {
        assert!(GateOp::crx(1, 1, AngleSource::Param(0)).validate(4).is_err());
        assert!(GateOp::crx(0, 4, AngleSource::Param(0)).validate(4).is_err());
        assert!(GateOp::single(GateKind::Crx, 0, AngleSource::Param(0))
            .validate(4)
            .is_err());
        assert!(GateOp::crx(3, 0, AngleSource::Param(0)).validate(4).is_ok());
    }

    #[test]
    fn noise_probabilities_checked() {
        let bad = NoiseConfig {
            p_depol_2q: 1.5,
            ..NoiseConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(NoiseConfig::default().validate().is_ok());
    }
}
