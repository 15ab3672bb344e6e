use serde::{Deserialize, Serialize};

use crate::nn::Tensor;

use super::SimError;

/// Reduction from per-word states to a fixed-length sentence vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    Mean,
    Max,
}

/// Pools the unmasked rows of `states` column-wise.
pub fn pool(states: &Tensor, mask: &[bool], pooling: Pooling) -> Result<Vec<f64>, SimError> {
    let rows: Vec<usize> = (0..states.rows())
        .filter(|&r| mask.get(r).copied().unwrap_or(false))
        .collect();
    if rows.is_empty() {
        return Err(SimError::Degenerate("no unmasked rows to pool"));
    }
    let width = states.cols();
    Ok(match pooling {
        Pooling::Mean => {
            let mut out = vec![0.0; width];
            for &r in &rows {
                for (o, v) in out.iter_mut().zip(states.row(r)) {
                    *o += v;
                }
            }
            let n = rows.len() as f64;
            out.iter_mut().for_each(|o| *o /= n);
            out
        }
        Pooling::Max => (0..width)
            .map(|c| {
                rows.iter()
                    .map(|&r| states.row(r)[c])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect(),
    })
}

/// Backward of [`pool`]. For max pooling the gradient goes to the first row
/// attaining the maximum.
pub fn pool_backward(states: &Tensor, mask: &[bool], pooling: Pooling, d_pooled: &[f64]) -> Tensor {
    let rows: Vec<usize> = (0..states.rows())
        .filter(|&r| mask.get(r).copied().unwrap_or(false))
        .collect();
    let mut d = Tensor::zeros(states.shape());
    match pooling {
        Pooling::Mean => {
            let n = rows.len() as f64;
            for &r in &rows {
                for (o, g) in d.row_mut(r).iter_mut().zip(d_pooled) {
                    *o = g / n;
                }
            }
        }
        Pooling::Max => {
            for (c, &g) in d_pooled.iter().enumerate() {
                let mut best = rows[0];
                for &r in &rows[1..] {
                    if states.row(r)[c] > states.row(best)[c] {
                        best = r;
                    }
                }
                d.row_mut(best)[c] += g;
            }
        }
    }
    d
}

/// `v = [pool(states), pool(attended)]`, dimension `2 × width`.
pub fn sentence_repr(
    states: &Tensor,
    attended: &Tensor,
    mask: &[bool],
    pooling: Pooling,
) -> Result<Vec<f64>, SimError> {
    if states.shape() != attended.shape() {
        return Err(SimError::Shape(format!(
            "states {:?} vs attended {:?}",
            states.shape(),
            attended.shape()
        )));
    }
    let mut v = pool(states, mask, pooling)?;
    v.extend(pool(attended, mask, pooling)?);
    Ok(v)
}
