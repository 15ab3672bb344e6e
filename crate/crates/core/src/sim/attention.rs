use crate::nn::{dot, Tensor};

use super::SimError;

/// Raw dot-product scores `e_ij = ā_i · b̄_j` with the padding masks they
/// were computed under (`true` = real position).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMatrix {
    pub scores: Tensor,
    pub mask_a: Vec<bool>,
    pub mask_b: Vec<bool>,
}

/// Output of [`cross_attention`].
#[derive(Debug, Clone)]
pub struct CrossAttention {
    /// `ã_i = Σ_j softmax_j(e_i·) b̄_j`, `l_a × 2H`.
    pub attended_a: Tensor,
    /// `b̃_j = Σ_i softmax_i(e_·j) ā_i`, `l_b × 2H`.
    pub attended_b: Tensor,
    pub attention: AttentionMatrix,
    /// Row-normalized weights used for `ã` (rows sum to 1 over unmasked columns).
    pub row_weights: Tensor,
    /// Column-normalized weights used for `b̃` (columns sum to 1 over unmasked rows).
    pub col_weights: Tensor,
}

fn masked_softmax(scores: impl Iterator<Item = (f64, bool)> + Clone) -> Vec<f64> {
    let max = scores
        .clone()
        .filter(|&(_, keep)| keep)
        .map(|(s, _)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores
        .map(|(s, keep)| if keep { (s - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Interactive cross attention between two encoded sentences.
pub fn cross_attention(
    a: &Tensor,
    b: &Tensor,
    mask_a: &[bool],
    mask_b: &[bool],
) -> Result<CrossAttention, SimError> {
    let (la, lb) = (a.rows(), b.rows());
    if a.cols() != b.cols() || mask_a.len() != la || mask_b.len() != lb {
        return Err(SimError::Shape(format!(
            "attention inputs {:?}/{:?} with masks {}/{}",
            a.shape(),
            b.shape(),
            mask_a.len(),
            mask_b.len()
        )));
    }
    if !mask_a.iter().any(|&m| m) || !mask_b.iter().any(|&m| m) {
        return Err(SimError::Degenerate(
            "all positions of a sentence are masked",
        ));
    }
    let width = a.cols();

    let mut scores = Tensor::zeros(&[la, lb]);
    for i in 0..la {
        for j in 0..lb {
            if mask_a[i] && mask_b[j] {
                scores.row_mut(i)[j] = dot(a.row(i), b.row(j));
            }
        }
    }

    let mut row_weights = Tensor::zeros(&[la, lb]);
    for i in (0..la).filter(|&i| mask_a[i]) {
        let w = masked_softmax(scores.row(i).iter().copied().zip(mask_b.iter().copied()));
        row_weights.row_mut(i).copy_from_slice(&w);
    }
    let mut col_weights = Tensor::zeros(&[la, lb]);
    for j in (0..lb).filter(|&j| mask_b[j]) {
        let w = masked_softmax((0..la).map(|i| (scores.row(i)[j], mask_a[i])));
        for (i, v) in w.into_iter().enumerate() {
            col_weights.row_mut(i)[j] = v;
        }
    }

    let mut attended_a = Tensor::zeros(&[la, width]);
    for i in 0..la {
        let weights = row_weights.row(i).to_vec();
        let out = attended_a.row_mut(i);
        for (j, &w) in weights.iter().enumerate() {
            if w != 0.0 {
                for (o, v) in out.iter_mut().zip(b.row(j)) {
                    *o += w * v;
                }
            }
        }
    }
    let mut attended_b = Tensor::zeros(&[lb, width]);
    for j in 0..lb {
        for i in 0..la {
            let w = col_weights.row(i)[j];
            if w != 0.0 {
                let out = attended_b.row_mut(j);
                for (o, v) in out.iter_mut().zip(a.row(i)) {
                    *o += w * v;
                }
            }
        }
    }

    Ok(CrossAttention {
        attended_a,
        attended_b,
        attention: AttentionMatrix {
            scores,
            mask_a: mask_a.to_vec(),
            mask_b: mask_b.to_vec(),
        },
        row_weights,
        col_weights,
    })
}

/// Backward of [`cross_attention`]: given `dL/dã` and `dL/db̃`, returns the
/// attention contribution to `(dL/dā, dL/db̄)`.
pub fn cross_attention_backward(
    att: &CrossAttention,
    a: &Tensor,
    b: &Tensor,
    d_att_a: &Tensor,
    d_att_b: &Tensor,
) -> (Tensor, Tensor) {
    let (la, lb) = (a.rows(), b.rows());
    let p = &att.row_weights;
    let q = &att.col_weights;
    let mut da = Tensor::zeros(a.shape());
    let mut db = Tensor::zeros(b.shape());
    let mut d_scores = Tensor::zeros(&[la, lb]);

    // ã = P b̄: dP_ij = dã_i · b̄_j, db̄_j += P_ij dã_i, then through the row softmax.
    for i in 0..la {
        let dai = d_att_a.row(i);
        let dp: Vec<f64> = (0..lb).map(|j| dot(dai, b.row(j))).collect();
        let weighted: f64 = (0..lb).map(|j| p.row(i)[j] * dp[j]).sum();
        for j in 0..lb {
            let pij = p.row(i)[j];
            if pij != 0.0 {
                for (d, v) in db.row_mut(j).iter_mut().zip(dai) {
                    *d += pij * v;
                }
                d_scores.row_mut(i)[j] += pij * (dp[j] - weighted);
            }
        }
    }
    // b̃ = Qᵀ ā: dQ_ij = db̃_j · ā_i, dā_i += Q_ij db̃_j, then through the column softmax.
    for j in 0..lb {
        let dbj = d_att_b.row(j);
        let dq: Vec<f64> = (0..la).map(|i| dot(dbj, a.row(i))).collect();
        let weighted: f64 = (0..la).map(|i| q.row(i)[j] * dq[i]).sum();
        for i in 0..la {
            let qij = q.row(i)[j];
            if qij != 0.0 {
                for (d, v) in da.row_mut(i).iter_mut().zip(dbj) {
                    *d += qij * v;
                }
                d_scores.row_mut(i)[j] += qij * (dq[i] - weighted);
            }
        }
    }
    // e = ā b̄ᵀ.
    for i in 0..la {
        for j in 0..lb {
            let g = d_scores.row(i)[j];
            if g != 0.0 {
                let bj = b.row(j).to_vec();
                for (d, v) in da.row_mut(i).iter_mut().zip(&bj) {
                    *d += g * v;
                }
                let ai = a.row(i).to_vec();
                for (d, v) in db.row_mut(j).iter_mut().zip(&ai) {
                    *d += g * v;
                }
            }
        }
    }
    (da, db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all(n: usize) -> Vec<bool> {
        vec![true; n]
    }

    #[test]
    fn single_position() {
        let u = Tensor::from_rows(&[vec![0.3, -0.4]]).unwrap();
        let att = cross_attention(&u, &u, &all(1), &all(1)).unwrap();
        assert_eq!(att.attended_a, u);
        assert_eq!(att.attended_b, u);
        assert!((att.attention.scores.data()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_row_gives_mean_of_unmasked() {
        let a = Tensor::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let b = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 6.0], vec![100.0, 100.0]]).unwrap();
        let att = cross_attention(&a, &b, &all(1), &[true, true, false]).unwrap();
        assert_eq!(att.attended_a.row(0), &[2.0, 4.0]);
        assert_eq!(att.row_weights.row(0)[2], 0.0);
    }

    #[test]
    fn two_by_two_table() {
        let a = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let b = Tensor::from_rows(&[vec![1.0, 1.0], vec![2.0, 0.0]]).unwrap();
        let att = cross_attention(&a, &b, &all(2), &all(2)).unwrap();
        assert_eq!(
            att.attention.scores.to_rows(),
            vec![vec![1.0, 2.0], vec![1.0, 0.0]]
        );

        let sm = |x: f64, y: f64| (x.exp() / (x.exp() + y.exp()), y.exp() / (x.exp() + y.exp()));
        // rows of e: (1,2) and (1,0)
        let (p11, p12) = sm(1.0, 2.0);
        let (p21, p22) = sm(1.0, 0.0);
        let a1 = [p11 * 1.0 + p12 * 2.0, p11 * 1.0 + p12 * 0.0];
        let a2 = [p21 * 1.0 + p22 * 2.0, p21 * 1.0 + p22 * 0.0];
        // columns of e: (1,1) and (2,0)
        let (q11, q21) = sm(1.0, 1.0);
        let (q12, q22) = sm(2.0, 0.0);
        let b1 = [q11 * 1.0 + q21 * 0.0, q11 * 0.0 + q21 * 1.0];
        let b2 = [q12 * 1.0 + q22 * 0.0, q12 * 0.0 + q22 * 1.0];
        let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(a, b)| (a - b).abs() < 1e-15);
        assert!(close(att.attended_a.row(0), &a1));
        assert!(close(att.attended_a.row(1), &a2));
        assert!(close(att.attended_b.row(0), &b1));
        assert!(close(att.attended_b.row(1), &b2));
    }

    #[test]
    fn fully_masked_sentence_is_degenerate() {
        let a = Tensor::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(
            cross_attention(&a, &a, &[false], &[true]),
            Err(SimError::Degenerate(_))
        ));
    }

    #[test]
    fn large_scores_do_not_overflow() {
        let a = Tensor::from_rows(&[vec![40.0, 40.0]]).unwrap();
        let b = Tensor::from_rows(&[vec![40.0, 40.0], vec![-40.0, 40.0]]).unwrap();
        let att = cross_attention(&a, &b, &all(1), &all(2)).unwrap();
        assert!(att.attended_a.is_finite() && att.attended_b.is_finite());
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = crate::nn::seeded_rng(4);
        let a = crate::nn::uniform_init(&[3, 2], 1.0, &mut rng);
        let b = crate::nn::uniform_init(&[2, 2], 1.0, &mut rng);
        let ca = crate::nn::uniform_init(&[3, 2], 1.0, &mut rng);
        let cb = crate::nn::uniform_init(&[2, 2], 1.0, &mut rng);
        let loss = |a: &Tensor, b: &Tensor| {
            let att = cross_attention(a, b, &all(3), &all(2)).unwrap();
            dot(att.attended_a.data(), ca.data()) + dot(att.attended_b.data(), cb.data())
        };
        let att = cross_attention(&a, &b, &all(3), &all(2)).unwrap();
        let (da, db) = cross_attention_backward(&att, &a, &b, &ca, &cb);
        let h = 1e-6;
        for (which, grad) in [(0, &da), (1, &db)] {
            for k in 0..grad.len() {
                let (mut ap, mut am, mut bp, mut bm) = (a.clone(), a.clone(), b.clone(), b.clone());
                if which == 0 {
                    ap.data_mut()[k] += h;
                    am.data_mut()[k] -= h;
                } else {
                    bp.data_mut()[k] += h;
                    bm.data_mut()[k] -= h;
                }
                let numeric = (loss(&ap, &bp) - loss(&am, &bm)) / (2.0 * h);
                assert!(
                    (numeric - grad.data()[k]).abs() < 1e-7,
                    "{which}/{k}: {numeric} vs {}",
                    grad.data()[k]
                );
            }
        }
    }

    proptest! {
        #[test]
        fn weights_are_normalized(
            la in 1usize..5,
            lb in 1usize..5,
            seed in 0u64..10_000,
            scale in 0.1f64..20.0,
        ) {
            let mut rng = crate::nn::seeded_rng(seed);
            let a = crate::nn::uniform_init(&[la, 4], scale, &mut rng);
            let b = crate::nn::uniform_init(&[lb, 4], scale, &mut rng);
            let att = cross_attention(&a, &b, &all(la), &all(lb)).unwrap();
            for i in 0..la {
                let s: f64 = att.row_weights.row(i).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
            for j in 0..lb {
                let s: f64 = (0..la).map(|i| att.col_weights.row(i)[j]).sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }
}
