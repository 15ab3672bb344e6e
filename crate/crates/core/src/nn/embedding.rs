use super::{NnError, Tensor};
use crate::text::PAD;

/// Gathers rows `ids` of the `V × D` table into an `L × D` matrix.
///
/// Lookup is plain row indexing; models keep the `PAD` row of their table at
/// zero so padded positions embed to the zero vector.
pub fn embed_lookup(ids: &[usize], table: &Tensor) -> Result<Tensor, NnError> {
    let vocab = table.rows();
    let dim = table.cols();
    let mut out = Vec::with_capacity(ids.len() * dim);
    for &id in ids {
        if id >= vocab {
            return Err(NnError::Index {
                what: "embedding table",
                index: id,
                size: vocab,
            });
        }
        out.extend_from_slice(table.row(id));
    }
    Tensor::from_vec(&[ids.len(), dim], out)
}

/// Sparse embedding gradient: one `(row, dL/drow)` entry per looked-up position.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingGrad {
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl EmbeddingGrad {
    /// Adds the rows into a dense `V × D` gradient, skipping `PAD`.
    pub fn accumulate_into(&self, dense: &mut Tensor, scale: f64) {
        for (id, g) in &self.rows {
            if *id == PAD {
                continue;
            }
            for (d, v) in dense.row_mut(*id).iter_mut().zip(g) {
                *d += scale * v;
            }
        }
    }
}

/// Backward of [`embed_lookup`]: pairs each id with the gradient of its row.
pub fn embedding_backward(ids: &[usize], d_out: &Tensor, grad: &mut EmbeddingGrad) {
    for (t, &id) in ids.iter().enumerate() {
        if id != PAD {
            grad.rows.push((id, d_out.row(t).to_vec()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> Tensor {
        let mut t = Tensor::zeros(&[n, n]);
        for i in 0..n {
            t.row_mut(i)[i] = 1.0;
        }
        t
    }

    #[test]
    fn identity_table_rows() {
        let out = embed_lookup(&[2, 0], &identity(3)).unwrap();
        assert_eq!(
            out.to_rows(),
            vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]
        );
    }

    #[test]
    fn pad_row_is_zero_in_model_tables() {
        let mut table = identity(3);
        table.row_mut(PAD).fill(0.0);
        let out = embed_lookup(&[PAD], &table).unwrap();
        assert_eq!(out.row(0), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn repeated_ids_copy_rows_verbatim() {
        let mut rng = crate::nn::seeded_rng(3);
        let table = crate::nn::uniform_init(&[5, 4], 1.0, &mut rng);
        let out = embed_lookup(&[3, 3, 1], &table).unwrap();
        assert_eq!(out.row(0), table.row(3));
        assert_eq!(out.row(1), table.row(3));
        assert_eq!(out.row(2), table.row(1));
    }

    #[test]
    fn out_of_range_id() {
        assert!(matches!(
            embed_lookup(&[7], &identity(3)),
            Err(NnError::Index { index: 7, .. })
        ));
    }

    #[test]
    fn backward_skips_pad() {
        let d = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let mut g = EmbeddingGrad::default();
        embedding_backward(&[PAD, 2], &d, &mut g);
        let mut dense = Tensor::zeros(&[3, 2]);
        g.accumulate_into(&mut dense, 1.0);
        assert_eq!(
            dense.to_rows(),
            vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![3.0, 4.0]]
        );
    }
}
