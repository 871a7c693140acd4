use crate::error::{Error, Result};

/// Numerically stable `x - log(sum exp(x))`.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&x| (x - max).exp()).sum();
    let log_norm = max + sum.ln();
    logits.iter().map(|&x| x - log_norm).collect()
}

/// `-log_probs[label]`.
pub fn cross_entropy(log_probs: &[f64], label: usize) -> Result<f64> {
    log_probs
        .get(label)
        .map(|&lp| -lp)
        .ok_or_else(|| Error::data(format!("label {label} outside {} classes", log_probs.len())))
}

/// Loss and `d loss / d logits` for log-softmax followed by cross-entropy.
pub(crate) fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    let lp = log_softmax(logits);
    let loss = cross_entropy(&lp, label)?;
    let mut grad: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    // first maximum wins ties
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits() {
        let lp = log_softmax(&[0.0; 4]);
        for l in &lp {
            assert!((l - 0.25f64.ln()).abs() < 1e-15);
            assert!((l + 1.386294).abs() < 1e-6);
        }
        for label in 0..4 {
            assert!((cross_entropy(&lp, label).unwrap() - 4f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn argmax_picks_dominant_class() {
        assert_eq!(argmax(&log_softmax(&[1.0, -1.0, -1.0, -1.0])), 0);
        assert_eq!(argmax(&[0.0, 0.0, 0.0]), 0);
    }

    #[test]
    fn confident_prediction_has_vanishing_loss() {
        let lp = log_softmax(&[60.0, 0.0, 0.0, 0.0]);
        assert!(cross_entropy(&lp, 0).unwrap() < 1e-25);
    }

    #[test]
    fn out_of_range_label() {
        assert!(matches!(
            cross_entropy(&[0.0; 4], 4),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn batch_mean_is_mean_of_losses() {
        let logits: Vec<[f64; 4]> = (0..32)
            .map(|i| {
                let x = i as f64 * 0.1;
                [x.sin(), x.cos(), (2.0 * x).sin(), -x.cos()]
            })
            .collect();
        let losses: Vec<f64> = logits
            .iter()
            .enumerate()
            .map(|(i, l)| cross_entropy(&log_softmax(l), i % 4).unwrap())
            .collect();
        let mean = losses.iter().sum::<f64>() / 32.0;
        let by_pairs: f64 = losses.chunks(2).map(|c| (c[0] + c[1]) / 2.0).sum::<f64>() / 16.0;
        assert!((mean - by_pairs).abs() < 1e-14);
    }

    #[test]
    fn tail_gradient_matches_finite_differences() {
        let logits = [0.3, -0.8, 0.1, 0.9];
        let (_, g) = softmax_cross_entropy(&logits, 2).unwrap();
        for k in 0..4 {
            let h = 1e-6;
            let mut up = logits;
            let mut down = logits;
            up[k] += h;
            down[k] -= h;
            let fd = (softmax_cross_entropy(&up, 2).unwrap().0
                - softmax_cross_entropy(&down, 2).unwrap().0)
                / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn log_softmax_normalizes(logits in prop::collection::vec(-50.0f64..50.0, 1..10)) {
            let total: f64 = log_softmax(&logits).iter().map(|l| l.exp()).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }

        #[test]
        fn cross_entropy_non_negative(
            logits in prop::collection::vec(-50.0f64..50.0, 4),
            label in 0usize..4,
        ) {
            prop_assert!(cross_entropy(&log_softmax(&logits), label).unwrap() >= 0.0);
        }
    }
}
