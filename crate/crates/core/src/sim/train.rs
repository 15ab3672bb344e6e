use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::nn::{bce_loss, seeded_rng, NadamConfig, NadamState, ParamSet};
use crate::text::TokenizedSentence;

use super::{SimError, SimModel, SimModelConfig};

/// A labelled question pair; `label` 1 means similar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairExample {
    pub q1: TokenizedSentence,
    pub q2: TokenizedSentence,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: NadamConfig,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 20,
            batch_size: 32,
            optimizer: NadamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean loss over the epoch's training pass (each example scored before
    /// its batch update).
    pub train_loss: f64,
    /// Accuracy on the training split after the epoch.
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_size: usize,
    pub val_size: usize,
    pub epochs: Vec<EpochStats>,
    pub warnings: Vec<String>,
}

// Keeps the data-order streams distinct from the weight-init stream.
const SPLIT_STREAM: u64 = 0x5eed_5b17;

/// Deterministic 9:1 split of `0..n` into (train, validation) indices.
pub fn split_train_val(n: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded_rng(seed ^ SPLIT_STREAM));
    let val = n / 10;
    let train = idx.split_off(val);
    (train, idx)
}

/// Fraction of `(score, label)` pairs where `score >= threshold` matches `label == 1`.
pub fn accuracy_from_scores(scored: &[(f64, u8)], threshold: f64) -> Option<f64> {
    if scored.is_empty() {
        return None;
    }
    let correct = scored
        .iter()
        .filter(|&&(s, y)| (s >= threshold) == (y == 1))
        .count();
    Some(correct as f64 / scored.len() as f64)
}

/// Scores every pair, in order.
pub fn score_pairs(model: &SimModel, pairs: &[PairExample]) -> Result<Vec<(f64, u8)>, SimError> {
    pairs
        .par_iter()
        .map(|p| Ok((model.similarity(&p.q1, &p.q2)?.score, p.label)))
        .collect()
}

pub fn eval_accuracy(
    model: &SimModel,
    pairs: &[PairExample],
    threshold: f64,
) -> Result<f64, SimError> {
    let scored = score_pairs(model, pairs)?;
    accuracy_from_scores(&scored, threshold).ok_or(SimError::EmptyDataset)
}

fn mean_loss(scored: &[(f64, u8)]) -> f64 {
    scored
        .iter()
        .map(|&(s, y)| bce_loss(s, f64::from(y)))
        .sum::<f64>()
        / scored.len() as f64
}

/// Trains a similarity model with Nadam on mean binary cross entropy.
pub fn train_sim(
    dataset: &[PairExample],
    config: &SimModelConfig,
    options: &TrainOptions,
) -> Result<(SimModel, TrainHistory), SimError> {
    if dataset.is_empty() {
        return Err(SimError::EmptyDataset);
    }
    if let Some(bad) = dataset.iter().find(|p| p.label > 1) {
        return Err(SimError::Config(format!(
            "label {} is not 0 or 1",
            bad.label
        )));
    }
    if let Some(p) = dataset.iter().find(|p| p.q1.is_empty() || p.q2.is_empty()) {
        return Err(SimError::Config(format!(
            "empty sentence in pair {:?} / {:?}",
            p.q1.tokens(),
            p.q2.tokens()
        )));
    }
    let mut model = SimModel::new(config.clone())?;
    let (train_idx, val_idx) = split_train_val(dataset.len(), config.seed);
    let train: Vec<PairExample> = train_idx.iter().map(|&i| dataset[i].clone()).collect();
    let val: Vec<PairExample> = val_idx.iter().map(|&i| dataset[i].clone()).collect();

    let mut history = TrainHistory {
        train_size: train.len(),
        val_size: val.len(),
        ..Default::default()
    };
    let positives = dataset.iter().filter(|p| p.label == 1).count();
    if positives == 0 || positives == dataset.len() {
        let msg = format!("dataset has a single class (label {})", dataset[0].label);
        tracing::warn!("{msg}");
        history.warnings.push(msg);
    }

    let batch_size = options.batch_size.max(1);
    let mut optimizer = NadamState::new(options.optimizer);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = seeded_rng(config.seed.wrapping_add(1) ^ SPLIT_STREAM);
    for epoch in 1..=options.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(batch_size) {
            let results: Vec<_> = batch
                .par_iter()
                .map(|&i| {
                    let p = &train[i];
                    model.pair_loss_grad(p.q1.ids(), p.q2.ids(), f64::from(p.label))
                })
                .collect::<Result<_, _>>()?;
            model.zero_grads();
            let scale = 1.0 / batch.len() as f64;
            for (loss, _, grads) in &results {
                loss_sum += loss;
                grads.accumulate_into(&mut model, scale);
            }
            optimizer.step(&mut model)?;
        }

        let train_scored = score_pairs(&model, &train)?;
        let (val_loss, val_accuracy) = if val.is_empty() {
            (None, None)
        } else {
            let scored = score_pairs(&model, &val)?;
            (Some(mean_loss(&scored)), accuracy_from_scores(&scored, 0.5))
        };
        history.epochs.push(EpochStats {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            train_accuracy: accuracy_from_scores(&train_scored, 0.5).unwrap_or(0.0),
            val_loss,
            val_accuracy,
        });
        tracing::debug!(epoch, loss = loss_sum / train.len() as f64, "sim epoch");
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_nine_to_one_and_disjoint() {
        let (train, val) = split_train_val(40, 7);
        assert_eq!((train.len(), val.len()), (36, 4));
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
        assert_eq!(split_train_val(40, 7), (train, val));
    }

    #[test]
    fn accuracy_by_hand() {
        let scored = [(0.9, 1), (0.2, 0), (0.7, 0), (0.4, 0)];
        assert_eq!(accuracy_from_scores(&scored, 0.5), Some(0.75));
        assert_eq!(accuracy_from_scores(&[(0.9, 1), (0.1, 0)], 0.5), Some(1.0));
        assert_eq!(accuracy_from_scores(&[(0.9, 0), (0.1, 1)], 0.5), Some(0.0));
        assert_eq!(accuracy_from_scores(&[], 0.5), None);
    }

    #[test]
    fn threshold_tie_predicts_similar() {
        assert_eq!(accuracy_from_scores(&[(0.5, 1)], 0.5), Some(1.0));
    }
}
