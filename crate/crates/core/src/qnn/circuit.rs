use std::f64::consts::PI;
use std::ops::{Deref, DerefMut};

use rand::Rng;

use crate::error::{Error, Result};
use crate::qsim::{AngleSource, Circuit, GateKind, GateOp};

/// Trainable rotation angles in radians.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn zeros(n: usize) -> Self {
        ParamVector(vec![0.0; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        ParamVector(v)
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Layer layout of the variational circuit.
///
/// Each layer applies RX, RY, RZ to every qubit, then a CRX ring with
/// control `i` and target `(i + 1) mod n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub n_layers: usize,
}

impl Default for CircuitSpec {
    fn default() -> Self {
        CircuitSpec {
            n_qubits: 4,
            n_layers: 6,
        }
    }
}

impl CircuitSpec {
    pub fn params_per_layer(&self) -> usize {
        3 * self.n_qubits + self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_layers * self.params_per_layer()
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=crate::qsim::MAX_QUBITS).contains(&self.n_qubits) {
            return Err(Error::config(format!(
                "circuit needs 2..={} qubits for its CRX ring, got {}",
                crate::qsim::MAX_QUBITS,
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Compiles encoding plus variational layers into a gate list.
    pub fn compile(&self, layout: &EncodingLayout) -> Result<Circuit> {
        self.validate()?;
        let n = self.n_qubits;
        let encoding = (0..layout.features_per_sample)
            .map(|j| {
                let (qubit, kind) = layout.gate_for(j, n);
                GateOp::single(kind, qubit, AngleSource::Input(j))
            })
            .collect();
        let mut variational = Vec::with_capacity(self.n_params());
        for layer in 0..self.n_layers {
            let base = layer * self.params_per_layer();
            for q in 0..n {
                for (k, kind) in [GateKind::Rx, GateKind::Ry, GateKind::Rz].into_iter().enumerate() {
                    variational.push(GateOp::single(kind, q, AngleSource::Param(base + 3 * q + k)));
                }
            }
            for i in 0..n {
                variational.push(GateOp::crx(i, (i + 1) % n, AngleSource::Param(base + 3 * n + i)));
            }
        }
        let circuit = Circuit {
            n_qubits: n,
            n_params: self.n_params(),
            n_inputs: layout.features_per_sample,
            encoding,
            variational,
        };
        circuit.validate()?;
        Ok(circuit)
    }

    /// Uniform angles in `[-pi/10, pi/10]`.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        (0..self.n_params())
            .map(|_| rng.random_range(-PI / 10.0..=PI / 10.0))
            .collect::<Vec<_>>()
            .into()
    }
}

/// Angle encoding of features in `[0, 1]`.
///
/// Feature `j` drives qubit `j mod n`; the first pass over the register uses
/// RX, the second RY, alternating after that.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodingLayout {
    pub features_per_sample: usize,
    /// Radians per unit feature.
    pub scale: f64,
}

impl Default for EncodingLayout {
    fn default() -> Self {
        EncodingLayout {
            features_per_sample: 8,
            scale: PI,
        }
    }
}

impl EncodingLayout {
    pub fn gate_for(&self, feature: usize, n_qubits: usize) -> (usize, GateKind) {
        let kind = if (feature / n_qubits).is_multiple_of(2) {
            GateKind::Rx
        } else {
            GateKind::Ry
        };
        (feature % n_qubits, kind)
    }

    pub fn encode(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.features_per_sample {
            return Err(Error::data(format!(
                "expected {} features, got {}",
                self.features_per_sample,
                features.len()
            )));
        }
        features
            .iter()
            .map(|&f| {
                if (0.0..=1.0).contains(&f) {
                    Ok(self.scale * f)
                } else {
                    Err(Error::data(format!("feature {f} outside [0, 1]")))
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{run_circuit, NoiseConfig};

    #[test]
    fn default_parameter_count() {
        let spec = CircuitSpec::default();
        assert_eq!(spec.n_params(), 96);
        let circuit = spec.compile(&EncodingLayout::default()).unwrap();
        assert_eq!(circuit.variational.len(), 96);
        assert_eq!(circuit.encoding.len(), 8);
    }

    #[test]
    fn ring_controls_every_qubit_once() {
        let spec = CircuitSpec::default();
        let circuit = spec.compile(&EncodingLayout::default()).unwrap();
        let ring: Vec<_> = circuit.variational[12..16].iter().map(|g| (g.control.unwrap(), g.target)).collect();
        assert_eq!(ring, vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
    }

    #[test]
    fn encoding_examples() {
        let layout = EncodingLayout::default();
        assert_eq!(layout.encode(&[0.0; 8]).unwrap(), vec![0.0; 8]);
        let a = layout.encode(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(a[0], PI);
        assert!(a[1..].iter().all(|&x| x == 0.0));
        assert_eq!(layout.gate_for(0, 4), (0, GateKind::Rx));
        assert_eq!(layout.gate_for(5, 4), (1, GateKind::Ry));
        assert!(layout.encode(&[0.5; 8]).unwrap().iter().all(|&x| x == PI / 2.0));
        assert!(layout.encode(&[0.5; 7]).is_err());
        assert!(layout.encode(&[1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn identity_circuit_reads_all_ones() {
        let spec = CircuitSpec::default();
        let circuit = spec.compile(&EncodingLayout::default()).unwrap();
        let out = run_circuit(&[0.0; 96], &[0.0; 8], &circuit, &NoiseConfig::off()).unwrap();
        assert_eq!(out, vec![1.0; 4]);
    }

    #[test]
    fn encoding_flip_on_qubit_zero() {
        // RX(pi) on qubit 0 through an all-zero variational stack; the CRX
        // ring is inactive at zero angle so only qubit 0 reads -1.
        let spec = CircuitSpec::default();
        let circuit = spec.compile(&EncodingLayout::default()).unwrap();
        let mut inputs = vec![0.0; 8];
        inputs[0] = PI;
        let out = run_circuit(&[0.0; 96], &inputs, &circuit, &NoiseConfig::off()).unwrap();
        let expect = [-1.0, 1.0, 1.0, 1.0];
        for (o, e) in out.iter().zip(expect) {
            assert!((o - e).abs() < 1e-12);
        }
    }

    #[test]
    fn init_in_range() {
        let mut rng = crate::seed::rng(3, 0, &[]);
        let p = CircuitSpec::default().init_params(&mut rng);
        assert!(p.iter().all(|x| x.abs() <= PI / 10.0));
    }
}
