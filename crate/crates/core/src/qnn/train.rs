use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::adam::AdamState;
use super::circuit::ParamVector;
use super::model::Model;
use super::readout::argmax;
use crate::data::Samples;
use crate::error::{Error, Result};
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            lr: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ParamVector,
    /// Mean batch loss over the final epoch.
    pub loss: f64,
    /// Fraction of correct predictions over the final epoch.
    pub accuracy: f64,
    pub steps: u64,
}

/// Mini-batch Adam over seeded per-epoch shuffles of `shard`.
///
/// A fresh optimizer state is used per call. With zero epochs the returned
/// metrics are an evaluation of the unchanged parameters on the shard.
pub fn local_train<M: Model + ?Sized>(
    model: &M,
    params: &ParamVector,
    shard: &Samples,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    if shard.is_empty() {
        return Err(Error::data("cannot train on an empty shard"));
    }
    if config.batch_size == 0 {
        return Err(Error::config("batch size must be positive"));
    }
    let mut params = params.clone();
    if config.epochs == 0 {
        let (accuracy, loss) = shard_metrics(model, &params, shard)?;
        return Ok(TrainOutcome {
            params,
            loss,
            accuracy,
            steps: 0,
        });
    }
    let mut rng = Rng::seed_from_u64(seed);
    let mut adam = AdamState::new(params.len(), config.lr);
    let mut order: Vec<usize> = (0..shard.len()).collect();
    let (mut loss, mut correct) = (0.0, 0);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        loss = 0.0;
        correct = 0;
        for batch in order.chunks(config.batch_size) {
            let res = model.batch_gradient(&params, shard, batch)?;
            loss += res.loss * batch.len() as f64;
            correct += res.correct;
            adam.step(&mut params, &res.grad)?;
        }
    }
    let n = shard.len() as f64;
    Ok(TrainOutcome {
        params,
        loss: loss / n,
        accuracy: correct as f64 / n,
        steps: adam.step_count,
    })
}

fn shard_metrics<M: Model + ?Sized>(model: &M, params: &[f64], shard: &Samples) -> Result<(f64, f64)> {
    let lps = model.log_probs(params, shard)?;
    let mut correct = 0;
    let mut loss = 0.0;
    for (i, lp) in lps.iter().enumerate() {
        if argmax(lp) == shard.label(i) {
            correct += 1;
        }
        loss -= lp[shard.label(i)];
    }
    let n = shard.len() as f64;
    Ok((correct as f64 / n, loss / n))
}
