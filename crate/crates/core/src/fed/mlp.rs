use rand::Rng as _;

use crate::data::Samples;
use crate::error::{Error, Result};
use crate::qnn::{argmax, log_softmax, softmax_cross_entropy, BatchResult, Model, ParamVector};
use crate::seed::Rng;

/// Classical baseline: one tanh hidden layer, softmax readout.
///
/// Parameter layout: `W1` (`hidden x inputs`, row-major), `b1`, `W2`
/// (`classes x hidden`), `b2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseMlp {
    pub n_inputs: usize,
    pub n_hidden: usize,
    pub n_classes: usize,
}

impl Default for DenseMlp {
    fn default() -> Self {
        DenseMlp {
            n_inputs: 8,
            n_hidden: 16,
            n_classes: 4,
        }
    }
}

impl DenseMlp {
    pub fn new(n_inputs: usize, n_hidden: usize, n_classes: usize) -> Result<Self> {
        if n_inputs == 0 || n_hidden == 0 || n_classes < 2 {
            return Err(Error::config(format!(
                "invalid dense network shape {n_inputs}->{n_hidden}->{n_classes}"
            )));
        }
        Ok(DenseMlp {
            n_inputs,
            n_hidden,
            n_classes,
        })
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.n_hidden * self.n_inputs;
        let b1 = w1 + self.n_hidden;
        let w2 = b1 + self.n_classes * self.n_hidden;
        (w1, b1, w2)
    }

    /// Hidden activations and logits.
    pub fn forward(&self, params: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (o_b1, o_w2, o_b2) = self.offsets();
        let hidden: Vec<f64> = (0..self.n_hidden)
            .map(|h| {
                let row = &params[h * self.n_inputs..(h + 1) * self.n_inputs];
                let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + params[o_b1 + h];
                z.tanh()
            })
            .collect();
        let logits = (0..self.n_classes)
            .map(|k| {
                let row = &params[o_w2 + k * self.n_hidden..o_w2 + (k + 1) * self.n_hidden];
                row.iter().zip(&hidden).map(|(w, a)| w * a).sum::<f64>() + params[o_b2 + k]
            })
            .collect();
        (hidden, logits)
    }

    fn check(&self, params: &[f64], data: &Samples) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::config(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        if data.dim() != self.n_inputs {
            return Err(Error::data(format!("{}-feature samples for a {}-input network", data.dim(), self.n_inputs)));
        }
        Ok(())
    }
}

impl Model for DenseMlp {
    fn n_params(&self) -> usize {
        (self.n_inputs + 1) * self.n_hidden + (self.n_hidden + 1) * self.n_classes
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Uniform in `+-1/sqrt(fan_in)` for every weight and bias.
    fn init_params(&self, rng: &mut Rng) -> ParamVector {
        let (o_b1, _, _) = self.offsets();
        let a1 = 1.0 / (self.n_inputs as f64).sqrt();
        let a2 = 1.0 / (self.n_hidden as f64).sqrt();
        ParamVector(
            (0..self.n_params())
                .map(|i| {
                    let a = if i < o_b1 + self.n_hidden { a1 } else { a2 };
                    rng.random_range(-a..=a)
                })
                .collect(),
        )
    }

    fn batch_gradient(&self, params: &[f64], data: &Samples, batch: &[usize]) -> Result<BatchResult> {
        self.check(params, data)?;
        if batch.is_empty() {
            return Err(Error::data("empty batch"));
        }
        let (o_b1, o_w2, o_b2) = self.offsets();
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        let mut correct = 0;
        for &i in batch {
            let x = data.features(i);
            let label = data.label(i);
            let (hidden, logits) = self.forward(params, x);
            if argmax(&logits) == label {
                correct += 1;
            }
            let (l, d) = softmax_cross_entropy(&logits, label)?;
            loss += l;
            let mut d_hidden = vec![0.0; self.n_hidden];
            for (k, dk) in d.iter().enumerate() {
                let dk = dk * scale;
                grad[o_b2 + k] += dk;
                for h in 0..self.n_hidden {
                    let w = o_w2 + k * self.n_hidden + h;
                    grad[w] += dk * hidden[h];
                    d_hidden[h] += dk * params[w];
                }
            }
            for h in 0..self.n_hidden {
                let dz = d_hidden[h] * (1.0 - hidden[h] * hidden[h]);
                grad[o_b1 + h] += dz;
                for (j, xj) in x.iter().enumerate() {
                    grad[h * self.n_inputs + j] += dz * xj;
                }
            }
        }
        let loss = loss * scale;
        if !loss.is_finite() {
            return Err(Error::numeric(format!("non-finite batch loss {loss}")));
        }
        Ok(BatchResult { loss, grad, correct })
    }

    fn log_probs(&self, params: &[f64], data: &Samples) -> Result<Vec<Vec<f64>>> {
        self.check(params, data)?;
        Ok((0..data.len())
            .map(|i| log_softmax(&self.forward(params, data.features(i)).1))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnn::cross_entropy;

    fn samples() -> Samples {
        let mut rng = crate::seed::rng(5, 0, &[]);
        let mut s = Samples::new(8, 4);
        for i in 0..6 {
            let f: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
            s.push(&f, i % 4).unwrap();
        }
        s
    }

    #[test]
    fn parameter_count() {
        assert_eq!(DenseMlp::default().n_params(), 8 * 16 + 16 + 16 * 4 + 4);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = DenseMlp::default();
        let data = samples();
        let p = m.init_params(&mut crate::seed::rng(1, 0, &[]));
        let batch: Vec<usize> = (0..data.len()).collect();
        let loss = |p: &[f64]| -> f64 {
            let lps = m.log_probs(p, &data).unwrap();
            lps.iter()
                .enumerate()
                .map(|(i, lp)| cross_entropy(lp, data.label(i)).unwrap())
                .sum::<f64>()
                / data.len() as f64
        };
        let res = m.batch_gradient(&p, &data, &batch).unwrap();
        assert!((res.loss - loss(&p)).abs() < 1e-12);
        for k in 0..p.len() {
            let (mut a, mut b) = (p.0.clone(), p.0.clone());
            a[k] += 1e-6;
            b[k] -= 1e-6;
            let fd = (loss(&a) - loss(&b)) / 2e-6;
            assert!((fd - res.grad[k]).abs() < 1e-7, "param {k}");
        }
    }
}
