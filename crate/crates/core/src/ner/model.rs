use serde::{Deserialize, Serialize};

use crate::nn::{
    bilstm_backward, bilstm_forward, checkpoint::Checkpoint, embed_lookup, embedding_backward,
    matvec_add, matvec_t_add, outer_add, seeded_rng, uniform_init, BiLstmTrace, EmbeddingGrad,
    LstmGrad, LstmWeights, ParamSet, Parameter, Tensor, INIT_SCALE,
};
use crate::text::PAD;

use super::crf::{crf_nll_grad, viterbi_decode, CrfParams, TransitionMask};
use super::NerError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NerModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub num_tags: usize,
    pub seed: u64,
}

impl NerModelConfig {
    pub fn new(vocab_size: usize, embed_dim: usize, hidden: usize, num_tags: usize) -> Self {
        NerModelConfig {
            vocab_size,
            embed_dim,
            hidden,
            num_tags,
            seed: 7,
        }
    }

    pub fn validate(&self) -> Result<(), NerError> {
        if self.vocab_size < 2 || self.embed_dim < 1 || self.hidden < 1 || self.num_tags < 1 {
            return Err(NerError::Config(format!(
                "need vocab_size >= 2 and positive dims, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Embedding, BiLSTM and a linear emission layer feeding a linear-chain CRF.
#[derive(Debug, Clone, PartialEq)]
pub struct NerModel {
    pub config: NerModelConfig,
    pub embedding: Parameter,
    pub fwd: LstmWeights,
    pub bwd: LstmWeights,
    /// `T × 2H`.
    pub emit_weight: Parameter,
    pub emit_bias: Parameter,
    /// `T × T`, row = previous tag.
    pub transitions: Parameter,
    pub start: Parameter,
    pub end: Parameter,
}

struct Forward {
    embedded: Tensor,
    states: Tensor,
    trace: BiLstmTrace,
    emissions: Tensor,
}

/// Per-sentence gradients, mirroring the model parameters.
#[derive(Debug, Clone)]
pub struct NerGrads {
    pub embedding: EmbeddingGrad,
    pub fwd: LstmGrad,
    pub bwd: LstmGrad,
    pub emit_weight: Tensor,
    pub emit_bias: Tensor,
    pub transitions: Tensor,
    pub start: Tensor,
    pub end: Tensor,
}

impl NerGrads {
    pub fn accumulate_into(&self, model: &mut NerModel, scale: f64) {
        self.embedding
            .accumulate_into(&mut model.embedding.grad, scale);
        self.fwd.accumulate_into(&mut model.fwd, scale);
        self.bwd.accumulate_into(&mut model.bwd, scale);
        for (p, g) in [
            (&mut model.emit_weight, &self.emit_weight),
            (&mut model.emit_bias, &self.emit_bias),
            (&mut model.transitions, &self.transitions),
            (&mut model.start, &self.start),
            (&mut model.end, &self.end),
        ] {
            for (d, v) in p.grad.data_mut().iter_mut().zip(g.data()) {
                *d += scale * v;
            }
        }
    }
}

impl NerModel {
    pub fn new(config: NerModelConfig) -> Result<Self, NerError> {
        config.validate()?;
        let (v, d, h, t) = (
            config.vocab_size,
            config.embed_dim,
            config.hidden,
            config.num_tags,
        );
        let mut rng = seeded_rng(config.seed);
        let mut table = uniform_init(&[v, d], INIT_SCALE, &mut rng);
        table.row_mut(PAD).fill(0.0);
        let fwd = LstmWeights::init("fwd", d, h, &mut rng);
        let bwd = LstmWeights::init("bwd", d, h, &mut rng);
        let emit_weight = uniform_init(&[t, 2 * h], INIT_SCALE, &mut rng);
        let transitions = uniform_init(&[t, t], INIT_SCALE, &mut rng);
        Ok(NerModel {
            config,
            embedding: Parameter::new("embedding", table),
            fwd,
            bwd,
            emit_weight: Parameter::new("emit.weight", emit_weight),
            emit_bias: Parameter::zeros("emit.bias", &[t]),
            transitions: Parameter::new("crf.transitions", transitions),
            start: Parameter::zeros("crf.start", &[t]),
            end: Parameter::zeros("crf.end", &[t]),
        })
    }

    /// Current CRF parameters as a standalone value.
    pub fn crf(&self) -> CrfParams {
        CrfParams {
            transitions: self.transitions.value.clone(),
            start: self.start.value.data().to_vec(),
            end: self.end.value.data().to_vec(),
        }
    }

    fn forward(&self, ids: &[usize]) -> Result<Forward, NerError> {
        if ids.is_empty() {
            return Err(NerError::EmptySentence);
        }
        let embedded = embed_lookup(ids, &self.embedding.value)?;
        let (states, trace) = bilstm_forward(&embedded, ids.len(), &self.fwd, &self.bwd)?;
        let t = self.config.num_tags;
        let width = 2 * self.config.hidden;
        let mut emissions = Tensor::zeros(&[ids.len(), t]);
        for pos in 0..ids.len() {
            let row = emissions.row_mut(pos);
            row.copy_from_slice(self.emit_bias.value.data());
            matvec_add(self.emit_weight.value.data(), width, states.row(pos), row);
        }
        Ok(Forward {
            embedded,
            states,
            trace,
            emissions,
        })
    }

    /// `L × T` emission scores for a sentence.
    pub fn emissions(&self, ids: &[usize]) -> Result<Tensor, NerError> {
        Ok(self.forward(ids)?.emissions)
    }

    /// Negative log-likelihood of the gold tag indices.
    pub fn nll(&self, ids: &[usize], gold: &[usize]) -> Result<f64, NerError> {
        Ok(crf_nll_grad(&self.emissions(ids)?, gold, &self.crf())?.0)
    }

    pub fn nll_grad(&self, ids: &[usize], gold: &[usize]) -> Result<(f64, NerGrads), NerError> {
        let fw = self.forward(ids)?;
        let (nll, crf_grad) = crf_nll_grad(&fw.emissions, gold, &self.crf())?;
        let t = self.config.num_tags;
        let width = 2 * self.config.hidden;
        let mut grads = NerGrads {
            embedding: EmbeddingGrad::default(),
            fwd: LstmGrad::zeros_like(&self.fwd),
            bwd: LstmGrad::zeros_like(&self.bwd),
            emit_weight: Tensor::zeros(&[t, width]),
            emit_bias: Tensor::zeros(&[t]),
            transitions: crf_grad.transitions,
            start: Tensor::from_vec(&[t], crf_grad.start)?,
            end: Tensor::from_vec(&[t], crf_grad.end)?,
        };
        let mut d_states = Tensor::zeros(&[ids.len(), width]);
        for pos in 0..ids.len() {
            let de = crf_grad.emissions.row(pos);
            for (b, g) in grads.emit_bias.data_mut().iter_mut().zip(de) {
                *b += g;
            }
            outer_add(grads.emit_weight.data_mut(), width, de, fw.states.row(pos));
            matvec_t_add(
                self.emit_weight.value.data(),
                width,
                de,
                d_states.row_mut(pos),
            );
        }
        let dx = bilstm_backward(
            &fw.trace,
            &d_states,
            &self.fwd,
            &self.bwd,
            &mut grads.fwd,
            &mut grads.bwd,
        );
        debug_assert_eq!(dx.rows(), fw.embedded.rows());
        embedding_backward(ids, &dx, &mut grads.embedding);
        Ok((nll, grads))
    }

    /// Viterbi tag indices for a sentence.
    pub fn decode(
        &self,
        ids: &[usize],
        mask: Option<&TransitionMask>,
    ) -> Result<Vec<usize>, NerError> {
        Ok(viterbi_decode(&self.emissions(ids)?, &self.crf(), mask)?.0)
    }

    pub fn to_checkpoint(&self, extra: serde_json::Value) -> Checkpoint {
        Checkpoint {
            config: serde_json::json!({ "model": self.config, "extra": extra }),
            tensors: self
                .params()
                .into_iter()
                .map(|p| (p.name.clone(), p.value.clone()))
                .collect(),
        }
    }

    /// Rebuilds a model from a checkpoint, returning the `extra` config block.
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<(Self, serde_json::Value), NerError> {
        let config: NerModelConfig = serde_json::from_value(ck.config["model"].clone())
            .map_err(|e| NerError::Config(format!("checkpoint model config: {e}")))?;
        let mut model = NerModel::new(config)?;
        for p in model.params_mut() {
            let t = ck.tensor(&p.name)?;
            if t.shape() != p.value.shape() {
                return Err(NerError::Config(format!(
                    "tensor {} has shape {:?}",
                    p.name,
                    t.shape()
                )));
            }
            p.value = t.clone();
        }
        Ok((model, ck.config["extra"].clone()))
    }
}

impl ParamSet for NerModel {
    fn params(&self) -> Vec<&Parameter> {
        let mut v = vec![&self.embedding];
        v.extend(self.fwd.params());
        v.extend(self.bwd.params());
        v.extend([
            &self.emit_weight,
            &self.emit_bias,
            &self.transitions,
            &self.start,
            &self.end,
        ]);
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut v = vec![&mut self.embedding];
        v.extend(self.fwd.params_mut());
        v.extend(self.bwd.params_mut());
        v.extend([
            &mut self.emit_weight,
            &mut self.emit_bias,
            &mut self.transitions,
            &mut self.start,
            &mut self.end,
        ]);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::grad_check;

    fn small() -> NerModel {
        let mut m = NerModel::new(NerModelConfig {
            vocab_size: 7,
            embed_dim: 4,
            hidden: 3,
            num_tags: 4,
            seed: 21,
        })
        .unwrap();
        // Larger weights so every parameter carries a visible gradient.
        for p in m.params_mut() {
            for v in p.value.data_mut() {
                *v *= 5.0;
            }
        }
        m
    }

    #[test]
    fn gradient_check_full_model() {
        let mut m = small();
        let ids = [2, 5, 3, 6, 2];
        let gold = [1, 2, 0, 3, 1];
        let (_, grads) = m.nll_grad(&ids, &gold).unwrap();
        m.zero_grads();
        grads.accumulate_into(&mut m, 1.0);
        let report = grad_check(&mut m, 1e-5, |m| m.nll(&ids, &gold).unwrap());
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn nll_is_nonnegative() {
        let m = small();
        for gold in [[0, 0, 0], [3, 2, 1], [1, 1, 2]] {
            assert!(m.nll(&[2, 3, 4], &gold).unwrap() >= 0.0);
        }
    }

    #[test]
    fn empty_sentence_is_rejected() {
        assert!(matches!(
            small().emissions(&[]),
            Err(NerError::EmptySentence)
        ));
    }

    #[test]
    fn checkpoint_roundtrip() {
        let m = small();
        let ck = m.to_checkpoint(serde_json::json!({"k": 1}));
        let (back, extra) =
            NerModel::from_checkpoint(&Checkpoint::from_bytes(&ck.to_bytes()).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(extra["k"], 1);
    }
}
