use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::nn::{seeded_rng, NadamConfig, NadamState, ParamSet};

use super::{NerError, NerModel, NerModelConfig, TransitionMask};

/// One training sentence as vocabulary ids and tag indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NerExample {
    pub ids: Vec<usize>,
    pub tags: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NerTrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: NadamConfig,
}

impl Default for NerTrainOptions {
    fn default() -> Self {
        NerTrainOptions {
            epochs: 20,
            batch_size: 1,
            optimizer: NadamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NerEpochStats {
    pub epoch: usize,
    /// Mean negative log-likelihood over the dataset after the epoch.
    pub loss: f64,
    /// Smallest per-sentence loss seen during the epoch's updates.
    pub min_step_loss: f64,
    /// Token-level tag accuracy (unmasked Viterbi) after the epoch.
    pub token_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NerHistory {
    pub epochs: Vec<NerEpochStats>,
}

const SHUFFLE_STREAM: u64 = 0x7a66_c0de;

/// Fraction of tokens whose decoded tag equals the gold tag.
pub fn token_accuracy(
    model: &NerModel,
    data: &[NerExample],
    mask: Option<&TransitionMask>,
) -> Result<f64, NerError> {
    let counts: Vec<(usize, usize)> = data
        .par_iter()
        .map(|ex| {
            let pred = model.decode(&ex.ids, mask)?;
            Ok((
                pred.iter().zip(&ex.tags).filter(|(p, g)| p == g).count(),
                ex.tags.len(),
            ))
        })
        .collect::<Result<_, NerError>>()?;
    let (hit, total) = counts.iter().fold((0, 0), |(h, t), &(a, b)| (h + a, t + b));
    if total == 0 {
        return Err(NerError::EmptyDataset);
    }
    Ok(hit as f64 / total as f64)
}

fn mean_loss(model: &NerModel, data: &[NerExample]) -> Result<f64, NerError> {
    let losses: Vec<f64> = data
        .par_iter()
        .map(|ex| model.nll(&ex.ids, &ex.tags))
        .collect::<Result<_, _>>()?;
    Ok(losses.iter().sum::<f64>() / data.len() as f64)
}

/// Minimizes the mean CRF negative log-likelihood with Nadam.
pub fn train_ner(
    dataset: &[NerExample],
    config: &NerModelConfig,
    options: &NerTrainOptions,
) -> Result<(NerModel, NerHistory), NerError> {
    if dataset.is_empty() {
        return Err(NerError::EmptyDataset);
    }
    for ex in dataset {
        if ex.ids.is_empty() {
            return Err(NerError::EmptySentence);
        }
        if ex.ids.len() != ex.tags.len() {
            return Err(NerError::LengthMismatch {
                tokens: ex.ids.len(),
                tags: ex.tags.len(),
            });
        }
        if let Some(&bad) = ex.tags.iter().find(|&&t| t >= config.num_tags) {
            return Err(NerError::Index {
                what: "tag",
                index: bad,
                size: config.num_tags,
            });
        }
    }
    let mut model = NerModel::new(config.clone())?;
    let mut optimizer = NadamState::new(options.optimizer);
    let mut rng = seeded_rng(config.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = NerHistory::default();
    for epoch in 1..=options.epochs {
        order.shuffle(&mut rng);
        let mut min_step_loss = f64::INFINITY;
        for batch in order.chunks(options.batch_size.max(1)) {
            let results: Vec<_> = batch
                .par_iter()
                .map(|&i| model.nll_grad(&dataset[i].ids, &dataset[i].tags))
                .collect::<Result<_, _>>()?;
            model.zero_grads();
            let scale = 1.0 / batch.len() as f64;
            for (loss, grads) in &results {
                min_step_loss = min_step_loss.min(*loss);
                grads.accumulate_into(&mut model, scale);
            }
            optimizer.step(&mut model)?;
        }
        let loss = mean_loss(&model, dataset)?;
        history.epochs.push(NerEpochStats {
            epoch,
            loss,
            min_step_loss,
            token_accuracy: token_accuracy(&model, dataset, None)?,
        });
        tracing::debug!(epoch, loss, "ner epoch");
    }
    Ok((model, history))
}
