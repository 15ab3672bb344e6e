use serde::{Deserialize, Serialize};

use crate::nn::{
    bce_grad, bce_loss, bilstm_backward, bilstm_forward, checkpoint::Checkpoint, dot, embed_lookup,
    embedding_backward, seeded_rng, uniform_init, BiLstmTrace, EmbeddingGrad, LstmGrad,
    LstmWeights, ParamSet, Parameter, Tensor, INIT_SCALE,
};
use crate::text::{TokenizedSentence, PAD};

use super::attention::{cross_attention, cross_attention_backward, CrossAttention};
use super::pooling::{pool, pool_backward, Pooling};
use super::SimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub max_len: usize,
    /// `false` gives the plain siamese BiLSTM ablation.
    pub interactive_attention: bool,
    #[serde(default)]
    pub pooling: Pooling,
    pub seed: u64,
}

impl SimModelConfig {
    pub fn new(vocab_size: usize, embed_dim: usize, hidden: usize) -> Self {
        SimModelConfig {
            vocab_size,
            embed_dim,
            hidden,
            max_len: 32,
            interactive_attention: true,
            pooling: Pooling::Mean,
            seed: 7,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.vocab_size < 2 || self.embed_dim < 1 || self.hidden < 1 || self.max_len < 1 {
            return Err(SimError::Config(format!(
                "need vocab_size >= 2 and positive dims, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Length of the sentence vector compared by cosine.
    pub fn repr_dim(&self) -> usize {
        if self.interactive_attention {
            4 * self.hidden
        } else {
            2 * self.hidden
        }
    }
}

/// Result of scoring one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    /// `(1 + cosine) / 2`, in `[0, 1]`.
    pub score: f64,
    /// Raw cosine in `[-1, 1]`.
    pub cosine: f64,
    /// Set when either sentence vector has zero norm; score is then 0.5.
    pub zero_norm: bool,
}

/// Cosine similarity, `None` if either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// A sentence run through the embedding and BiLSTM.
#[derive(Debug, Clone)]
pub struct EncodedSentence {
    ids: Vec<usize>,
    embedded: Tensor,
    states: Tensor,
    trace: BiLstmTrace,
}

impl EncodedSentence {
    /// BiLSTM states, one row per token.
    pub fn states(&self) -> &Tensor {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Intermediate values of a pair forward pass.
struct PairForward {
    attention: Option<CrossAttention>,
    va: Vec<f64>,
    vb: Vec<f64>,
    sim: Similarity,
}

/// Gradients of one example, mirroring the model parameters.
#[derive(Debug, Clone)]
pub struct SimGrads {
    pub embedding: EmbeddingGrad,
    pub fwd: LstmGrad,
    pub bwd: LstmGrad,
}

impl SimGrads {
    pub fn accumulate_into(&self, model: &mut SimModel, scale: f64) {
        self.embedding
            .accumulate_into(&mut model.embedding.grad, scale);
        self.fwd.accumulate_into(&mut model.fwd, scale);
        self.bwd.accumulate_into(&mut model.bwd, scale);
    }
}

/// Siamese BiLSTM encoder with interactive attention and cosine scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct SimModel {
    pub config: SimModelConfig,
    pub embedding: Parameter,
    pub fwd: LstmWeights,
    pub bwd: LstmWeights,
}

impl SimModel {
    pub fn new(config: SimModelConfig) -> Result<Self, SimError> {
        Self::with_init_scale(config, INIT_SCALE)
    }

    pub fn with_init_scale(config: SimModelConfig, scale: f64) -> Result<Self, SimError> {
        config.validate()?;
        let mut rng = seeded_rng(config.seed);
        let mut table = uniform_init(&[config.vocab_size, config.embed_dim], scale, &mut rng);
        table.row_mut(PAD).fill(0.0);
        let fwd = LstmWeights::init_scaled("fwd", config.embed_dim, config.hidden, scale, &mut rng);
        let bwd = LstmWeights::init_scaled("bwd", config.embed_dim, config.hidden, scale, &mut rng);
        Ok(SimModel {
            config,
            embedding: Parameter::new("embedding", table),
            fwd,
            bwd,
        })
    }

    /// Embeds and encodes the first `max_len` ids of a sentence.
    pub fn encode(&self, ids: &[usize]) -> Result<EncodedSentence, SimError> {
        let ids = &ids[..ids.len().min(self.config.max_len)];
        if ids.is_empty() {
            return Err(SimError::Degenerate("empty sentence"));
        }
        let embedded = embed_lookup(ids, &self.embedding.value)?;
        let (states, trace) = bilstm_forward(&embedded, ids.len(), &self.fwd, &self.bwd)?;
        Ok(EncodedSentence {
            ids: ids.to_vec(),
            embedded,
            states,
            trace,
        })
    }

    fn forward_pair(
        &self,
        a: &EncodedSentence,
        b: &EncodedSentence,
    ) -> Result<PairForward, SimError> {
        let mask_a = vec![true; a.len()];
        let mask_b = vec![true; b.len()];
        let pooling = self.config.pooling;
        let (attention, va, vb) = if self.config.interactive_attention {
            let att = cross_attention(&a.states, &b.states, &mask_a, &mask_b)?;
            let mut va = pool(&a.states, &mask_a, pooling)?;
            va.extend(pool(&att.attended_a, &mask_a, pooling)?);
            let mut vb = pool(&b.states, &mask_b, pooling)?;
            vb.extend(pool(&att.attended_b, &mask_b, pooling)?);
            (Some(att), va, vb)
        } else {
            (
                None,
                pool(&a.states, &mask_a, pooling)?,
                pool(&b.states, &mask_b, pooling)?,
            )
        };
        let sim = match cosine(&va, &vb) {
            Some(d) => Similarity {
                score: ((1.0 + d) / 2.0).clamp(0.0, 1.0),
                cosine: d,
                zero_norm: false,
            },
            None => Similarity {
                score: 0.5,
                cosine: 0.0,
                zero_norm: true,
            },
        };
        Ok(PairForward {
            attention,
            va,
            vb,
            sim,
        })
    }

    /// Scores two already-encoded sentences.
    pub fn score_encoded(
        &self,
        a: &EncodedSentence,
        b: &EncodedSentence,
    ) -> Result<Similarity, SimError> {
        Ok(self.forward_pair(a, b)?.sim)
    }

    pub fn similarity_ids(&self, a: &[usize], b: &[usize]) -> Result<Similarity, SimError> {
        self.score_encoded(&self.encode(a)?, &self.encode(b)?)
    }

    pub fn similarity(
        &self,
        a: &TokenizedSentence,
        b: &TokenizedSentence,
    ) -> Result<Similarity, SimError> {
        self.similarity_ids(a.ids(), b.ids())
    }

    /// Binary cross entropy of the pair score against `label`.
    pub fn pair_loss(&self, a: &[usize], b: &[usize], label: f64) -> Result<f64, SimError> {
        Ok(bce_loss(self.similarity_ids(a, b)?.score, label))
    }

    /// Loss, score and parameter gradients for one labelled pair.
    pub fn pair_loss_grad(
        &self,
        a: &[usize],
        b: &[usize],
        label: f64,
    ) -> Result<(f64, Similarity, SimGrads), SimError> {
        let ea = self.encode(a)?;
        let eb = self.encode(b)?;
        let fw = self.forward_pair(&ea, &eb)?;
        let loss = bce_loss(fw.sim.score, label);
        let mut grads = SimGrads {
            embedding: EmbeddingGrad::default(),
            fwd: LstmGrad::zeros_like(&self.fwd),
            bwd: LstmGrad::zeros_like(&self.bwd),
        };
        if fw.sim.zero_norm {
            return Ok((loss, fw.sim, grads));
        }

        let d_cos = 0.5 * bce_grad(fw.sim.score, label);
        let na = dot(&fw.va, &fw.va).sqrt();
        let nb = dot(&fw.vb, &fw.vb).sqrt();
        let d = fw.sim.cosine;
        let dva: Vec<f64> = fw
            .va
            .iter()
            .zip(&fw.vb)
            .map(|(x, y)| d_cos * (y / (na * nb) - d * x / (na * na)))
            .collect();
        let dvb: Vec<f64> = fw
            .vb
            .iter()
            .zip(&fw.va)
            .map(|(y, x)| d_cos * (x / (na * nb) - d * y / (nb * nb)))
            .collect();

        let pooling = self.config.pooling;
        let mask_a = vec![true; ea.len()];
        let mask_b = vec![true; eb.len()];
        let width = 2 * self.config.hidden;
        let mut d_states_a = pool_backward(&ea.states, &mask_a, pooling, &dva[..width]);
        let mut d_states_b = pool_backward(&eb.states, &mask_b, pooling, &dvb[..width]);
        if let Some(att) = &fw.attention {
            let d_att_a = pool_backward(&att.attended_a, &mask_a, pooling, &dva[width..]);
            let d_att_b = pool_backward(&att.attended_b, &mask_b, pooling, &dvb[width..]);
            let (da, db) =
                cross_attention_backward(att, &ea.states, &eb.states, &d_att_a, &d_att_b);
            d_states_a.add_assign(&da)?;
            d_states_b.add_assign(&db)?;
        }
        for (enc, d_states) in [(&ea, &d_states_a), (&eb, &d_states_b)] {
            let dx = bilstm_backward(
                &enc.trace,
                d_states,
                &self.fwd,
                &self.bwd,
                &mut grads.fwd,
                &mut grads.bwd,
            );
            debug_assert_eq!(dx.rows(), enc.embedded.rows());
            embedding_backward(&enc.ids, &dx, &mut grads.embedding);
        }
        Ok((loss, fw.sim, grads))
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
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<(Self, serde_json::Value), SimError> {
        let config: SimModelConfig = serde_json::from_value(ck.config["model"].clone())
            .map_err(|e| SimError::Config(format!("checkpoint model config: {e}")))?;
        let mut model = SimModel::new(config)?;
        for p in model.params_mut() {
            let t = ck.tensor(&p.name)?;
            if t.shape() != p.value.shape() {
                return Err(SimError::Config(format!(
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

impl ParamSet for SimModel {
    fn params(&self) -> Vec<&Parameter> {
        let mut v = vec![&self.embedding];
        v.extend(self.fwd.params());
        v.extend(self.bwd.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut v = vec![&mut self.embedding];
        v.extend(self.fwd.params_mut());
        v.extend(self.bwd.params_mut());
        v
    }
}
