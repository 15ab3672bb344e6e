//! Minimal numeric core: tensors, embedding, LSTM/BiLSTM with hand-written
//! backward passes, binary cross entropy, Nadam, a finite-difference gradient
//! checker and the checkpoint container.

pub mod checkpoint;
mod embedding;
mod gradcheck;
mod init;
mod loss;
mod lstm;
mod optim;
mod tensor;

use thiserror::Error;

pub use embedding::{embed_lookup, embedding_backward, EmbeddingGrad};
pub use gradcheck::{grad_check, grad_check_detailed, GradCheckReport, GradMismatch};
pub use init::{seeded_rng, uniform_init, INIT_SCALE};
pub use loss::{bce_grad, bce_loss, BCE_EPS};
pub use lstm::{
    bilstm_backward, bilstm_encode, bilstm_forward, lstm_step, lstm_step_backward, BiLstmTrace,
    Gate, LstmGrad, LstmStepCache, LstmWeights,
};
pub use optim::{NadamConfig, NadamState};
pub use tensor::Tensor;

pub(crate) use tensor::{dot, matvec_add, matvec_t_add, outer_add};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("index {index} out of range for {what} of size {size}")]
    Index {
        what: &'static str,
        index: usize,
        size: usize,
    },
    #[error("empty sequence")]
    EmptySequence,
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A named trainable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Parameter {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        Self::new(name, Tensor::zeros(shape))
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Anything exposing an ordered list of parameters.
pub trait ParamSet {
    fn params(&self) -> Vec<&Parameter>;
    fn params_mut(&mut self) -> Vec<&mut Parameter>;

    fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }
}

impl ParamSet for Vec<Parameter> {
    fn params(&self) -> Vec<&Parameter> {
        self.iter().collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.iter_mut().collect()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `log Σ exp(xs)`; `-inf` for an empty or all `-inf` input.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
