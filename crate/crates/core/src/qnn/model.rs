use super::circuit::{CircuitSpec, EncodingLayout, ParamVector};
use super::readout::{argmax, log_softmax, softmax_cross_entropy};
use crate::data::Samples;
use crate::error::{Error, Result};
use crate::qsim::{Circuit, NoiseConfig, PauliEngine};
use crate::seed::Rng;

/// Mean loss, its gradient and the number of correct argmax predictions
/// over one mini-batch, all evaluated at the incoming parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub correct: usize,
}

/// A classifier trainable by [`super::local_train`] and averageable by the
/// federation: a flat parameter vector with batch gradients.
pub trait Model: Sync {
    fn n_params(&self) -> usize;

    fn n_classes(&self) -> usize;

    fn init_params(&self, rng: &mut Rng) -> ParamVector;

    fn batch_gradient(&self, params: &[f64], data: &Samples, batch: &[usize]) -> Result<BatchResult>;

    /// Log-probabilities for every sample in `data`.
    fn log_probs(&self, params: &[f64], data: &Samples) -> Result<Vec<Vec<f64>>>;
}

/// The variational classifier with `<Z_i>` of the first `n_classes` qubits
/// used directly as logits.
#[derive(Debug, Clone)]
pub struct QnnModel {
    spec: CircuitSpec,
    layout: EncodingLayout,
    noise: NoiseConfig,
    n_classes: usize,
    circuit: Circuit,
    engine: PauliEngine,
}

impl QnnModel {
    pub fn new(spec: CircuitSpec, layout: EncodingLayout, noise: NoiseConfig, n_classes: usize) -> Result<Self> {
        if n_classes < 2 || n_classes > spec.n_qubits {
            return Err(Error::config(format!(
                "{n_classes} classes cannot be read from {} qubits",
                spec.n_qubits
            )));
        }
        let circuit = spec.compile(&layout)?;
        let engine = PauliEngine::new(&circuit, &noise)?;
        Ok(QnnModel {
            spec,
            layout,
            noise,
            n_classes,
            circuit,
            engine,
        })
    }

    pub fn spec(&self) -> &CircuitSpec {
        &self.spec
    }

    pub fn layout(&self) -> &EncodingLayout {
        &self.layout
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// `(logits, log_probs)` for one feature vector.
    pub fn forward(&self, params: &[f64], features: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let bound = self.engine.bind(params, self.n_classes)?;
        let logits = bound.readout(&self.layout.encode(features)?)?;
        let lp = log_softmax(&logits);
        Ok((logits, lp))
    }

    /// Cross-entropy of one sample and its parameter gradient.
    pub fn sample_gradient(&self, params: &[f64], features: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
        let angles = self.layout.encode(features)?;
        let n_classes = self.n_classes;
        crate::qsim::gradient(params, &angles, &self.circuit, &self.noise, |z| {
            softmax_cross_entropy(&z[..n_classes], label).map(|(loss, mut d)| {
                d.resize(z.len(), 0.0);
                (loss, d)
            })
        })
    }
}

impl Model for QnnModel {
    fn n_params(&self) -> usize {
        self.spec.n_params()
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn init_params(&self, rng: &mut Rng) -> ParamVector {
        self.spec.init_params(rng)
    }

    fn batch_gradient(&self, params: &[f64], data: &Samples, batch: &[usize]) -> Result<BatchResult> {
        if batch.is_empty() {
            return Err(Error::data("empty batch"));
        }
        let bound = self.engine.bind(params, self.n_classes)?;
        let mut acc = bound.accumulator();
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let mut correct = 0;
        for &i in batch {
            let encoded = bound.encode(&self.layout.encode(data.features(i))?)?;
            let logits = bound.readout_encoded(&encoded);
            let label = data.label(i);
            if argmax(&logits) == label {
                correct += 1;
            }
            let (l, mut d) = softmax_cross_entropy(&logits, label)?;
            loss += l;
            d.iter_mut().for_each(|x| *x *= scale);
            acc.add(&encoded, &d)?;
        }
        let loss = loss * scale;
        if !loss.is_finite() {
            return Err(Error::numeric(format!("non-finite batch loss {loss}")));
        }
        Ok(BatchResult {
            loss,
            grad: bound.gradient(&acc),
            correct,
        })
    }

    fn log_probs(&self, params: &[f64], data: &Samples) -> Result<Vec<Vec<f64>>> {
        let bound = self.engine.bind(params, self.n_classes)?;
        (0..data.len())
            .map(|i| Ok(log_softmax(&bound.readout(&self.layout.encode(data.features(i))?)?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn model(noise: NoiseConfig) -> QnnModel {
        QnnModel::new(CircuitSpec::default(), EncodingLayout::default(), noise, 4).unwrap()
    }

    fn random_samples(n: usize, seed: u64) -> Samples {
        let mut rng = crate::seed::rng(seed, 0, &[]);
        let mut s = Samples::new(8, 4);
        for i in 0..n {
            let f: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
            s.push(&f, i % 4).unwrap();
        }
        s
    }

    #[test]
    fn forward_normalizes() {
        let m = model(NoiseConfig::default());
        let mut rng = crate::seed::rng(3, 0, &[]);
        let p = m.init_params(&mut rng);
        let s = random_samples(1, 3);
        let (logits, lp) = m.forward(&p, s.features(0)).unwrap();
        assert_eq!(logits.len(), 4);
        let total: f64 = lp.iter().map(|l| l.exp()).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn batch_gradient_is_mean_of_sample_gradients() {
        let m = model(NoiseConfig::default());
        let mut rng = crate::seed::rng(11, 0, &[]);
        let p = m.init_params(&mut rng);
        let s = random_samples(5, 12);
        let batch: Vec<usize> = (0..5).collect();
        let res = m.batch_gradient(&p, &s, &batch).unwrap();
        let mut mean = vec![0.0; 96];
        let mut loss = 0.0;
        for i in 0..5 {
            let (l, g) = m.sample_gradient(&p, s.features(i), s.label(i)).unwrap();
            loss += l / 5.0;
            for (a, b) in mean.iter_mut().zip(g) {
                *a += b / 5.0;
            }
        }
        assert!((res.loss - loss).abs() < 1e-12);
        for (a, b) in res.grad.iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_class_mode_reads_two_qubits() {
        let m = QnnModel::new(CircuitSpec::default(), EncodingLayout::default(), NoiseConfig::off(), 2).unwrap();
        let s = random_samples(1, 4);
        let (logits, _) = m.forward(&[0.1; 96], s.features(0)).unwrap();
        assert_eq!(logits.len(), 2);
        assert!(QnnModel::new(CircuitSpec::default(), EncodingLayout::default(), NoiseConfig::off(), 5).is_err());
    }
}
