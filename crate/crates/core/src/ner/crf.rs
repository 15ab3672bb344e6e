use crate::nn::{logsumexp, Tensor};

use super::{NerError, Tag, TagSet};

/// Linear-chain CRF scores: `transitions[i][j]` scores tag `i` followed by
/// tag `j`; `start` and `end` score the first and last tag.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfParams {
    pub transitions: Tensor,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

impl CrfParams {
    pub fn zeros(num_tags: usize) -> Self {
        CrfParams {
            transitions: Tensor::zeros(&[num_tags, num_tags]),
            start: vec![0.0; num_tags],
            end: vec![0.0; num_tags],
        }
    }

    pub fn num_tags(&self) -> usize {
        self.start.len()
    }

    fn trans(&self, from: usize, to: usize) -> f64 {
        self.transitions.row(from)[to]
    }

    fn check(&self, emissions: &Tensor) -> Result<(usize, usize), NerError> {
        let t = self.num_tags();
        if self.end.len() != t || self.transitions.shape() != [t, t] {
            return Err(NerError::Shape(format!(
                "crf start {}, end {}, transitions {:?}",
                t,
                self.end.len(),
                self.transitions.shape()
            )));
        }
        if emissions.shape().len() != 2 || emissions.cols() != t {
            return Err(NerError::Shape(format!(
                "emissions {:?} do not match {t} tags",
                emissions.shape()
            )));
        }
        if emissions.rows() == 0 {
            return Err(NerError::EmptySentence);
        }
        Ok((emissions.rows(), t))
    }
}

/// Score of one tag path:
/// `start[y0] + Σ emit[t][yt] + Σ trans[y(t-1)][yt] + end[y(L-1)]`.
pub fn crf_gold_score(
    emissions: &Tensor,
    tags: &[usize],
    crf: &CrfParams,
) -> Result<f64, NerError> {
    let (len, t) = crf.check(emissions)?;
    if tags.len() != len {
        return Err(NerError::Shape(format!(
            "{} tags for {len} positions",
            tags.len()
        )));
    }
    if let Some(&bad) = tags.iter().find(|&&y| y >= t) {
        return Err(NerError::Index {
            what: "tag",
            index: bad,
            size: t,
        });
    }
    let mut score = crf.start[tags[0]] + crf.end[tags[len - 1]];
    for (pos, &y) in tags.iter().enumerate() {
        score += emissions.row(pos)[y];
        if pos > 0 {
            score += crf.trans(tags[pos - 1], y);
        }
    }
    Ok(score)
}

/// Forward log-scores `alpha[t][j]`: log-sum of all paths ending in tag `j`
/// at position `t`, excluding the end score.
fn forward(emissions: &Tensor, crf: &CrfParams, len: usize, t: usize) -> Vec<Vec<f64>> {
    let mut alpha = Vec::with_capacity(len);
    alpha.push(
        (0..t)
            .map(|j| crf.start[j] + emissions.row(0)[j])
            .collect::<Vec<f64>>(),
    );
    let mut terms = vec![0.0; t];
    for pos in 1..len {
        let prev: &Vec<f64> = &alpha[pos - 1];
        let row: Vec<f64> = (0..t)
            .map(|j| {
                for (i, term) in terms.iter_mut().enumerate() {
                    *term = prev[i] + crf.trans(i, j);
                }
                logsumexp(&terms) + emissions.row(pos)[j]
            })
            .collect();
        alpha.push(row);
    }
    alpha
}

/// Backward log-scores `beta[t][i]`: log-sum over continuations from tag `i`
/// at position `t`, including the end score.
fn backward(emissions: &Tensor, crf: &CrfParams, len: usize, t: usize) -> Vec<Vec<f64>> {
    let mut beta = vec![vec![0.0; t]; len];
    beta[len - 1].clone_from(&crf.end);
    let mut terms = vec![0.0; t];
    for pos in (0..len - 1).rev() {
        for i in 0..t {
            for (j, term) in terms.iter_mut().enumerate() {
                *term = crf.trans(i, j) + emissions.row(pos + 1)[j] + beta[pos + 1][j];
            }
            beta[pos][i] = logsumexp(&terms);
        }
    }
    beta
}

fn log_partition_from(alpha: &[Vec<f64>], crf: &CrfParams) -> f64 {
    let last = alpha.last().expect("nonempty");
    let terms: Vec<f64> = last.iter().zip(&crf.end).map(|(a, e)| a + e).collect();
    logsumexp(&terms)
}

/// `log Σ_paths exp(score)` by the forward algorithm.
pub fn crf_log_partition(emissions: &Tensor, crf: &CrfParams) -> Result<f64, NerError> {
    let (len, t) = crf.check(emissions)?;
    Ok(log_partition_from(&forward(emissions, crf, len, t), crf))
}

/// Gradient of the negative log-likelihood with respect to emissions and CRF
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfGrad {
    pub emissions: Tensor,
    pub transitions: Tensor,
    pub start: Vec<f64>,
    pub end: Vec<f64>,
}

/// Negative log-likelihood `log Z − score(gold)` and its gradient. The
/// gradient is expected counts under the model minus gold counts.
pub fn crf_nll_grad(
    emissions: &Tensor,
    gold: &[usize],
    crf: &CrfParams,
) -> Result<(f64, CrfGrad), NerError> {
    let gold_score = crf_gold_score(emissions, gold, crf)?;
    let (len, t) = crf.check(emissions)?;
    let alpha = forward(emissions, crf, len, t);
    let beta = backward(emissions, crf, len, t);
    let log_z = log_partition_from(&alpha, crf);

    let mut grad = CrfGrad {
        emissions: Tensor::zeros(&[len, t]),
        transitions: Tensor::zeros(&[t, t]),
        start: vec![0.0; t],
        end: vec![0.0; t],
    };
    for pos in 0..len {
        for j in 0..t {
            let p = (alpha[pos][j] + beta[pos][j] - log_z).exp();
            grad.emissions.row_mut(pos)[j] = p;
            if pos == 0 {
                grad.start[j] = p;
            }
            if pos == len - 1 {
                grad.end[j] = p;
            }
        }
        if pos > 0 {
            for i in 0..t {
                for j in 0..t {
                    let log_p =
                        alpha[pos - 1][i] + crf.trans(i, j) + emissions.row(pos)[j] + beta[pos][j]
                            - log_z;
                    grad.transitions.row_mut(i)[j] += log_p.exp();
                }
            }
        }
    }
    grad.start[gold[0]] -= 1.0;
    grad.end[gold[len - 1]] -= 1.0;
    for (pos, &y) in gold.iter().enumerate() {
        grad.emissions.row_mut(pos)[y] -= 1.0;
        if pos > 0 {
            grad.transitions.row_mut(gold[pos - 1])[y] -= 1.0;
        }
    }
    Ok((log_z - gold_score, grad))
}

/// Which transitions and start tags are admissible at decode time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMask {
    allowed: Vec<Vec<bool>>,
    start: Vec<bool>,
}

impl TransitionMask {
    /// Every transition allowed.
    pub fn open(num_tags: usize) -> Self {
        TransitionMask {
            allowed: vec![vec![true; num_tags]; num_tags],
            start: vec![true; num_tags],
        }
    }

    /// BIO constraints: `I-X` may only follow `B-X` or `I-X`, and may not
    /// start a sentence.
    pub fn bio(tags: &TagSet) -> Self {
        let t = tags.len();
        let mut mask = Self::open(t);
        for (j, &to) in tags.tags().iter().enumerate() {
            if let Tag::I(x) = to {
                mask.start[j] = false;
                for (i, &from) in tags.tags().iter().enumerate() {
                    mask.allowed[i][j] = from == Tag::B(x) || from == Tag::I(x);
                }
            }
        }
        mask
    }

    pub fn allows(&self, from: usize, to: usize) -> bool {
        self.allowed[from][to]
    }

    pub fn allows_start(&self, tag: usize) -> bool {
        self.start[tag]
    }

    pub fn num_tags(&self) -> usize {
        self.start.len()
    }
}

/// Highest-scoring tag path and its score. Masked transitions score `-inf`;
/// ties go to the lowest tag index.
pub fn viterbi_decode(
    emissions: &Tensor,
    crf: &CrfParams,
    mask: Option<&TransitionMask>,
) -> Result<(Vec<usize>, f64), NerError> {
    let (len, t) = crf.check(emissions)?;
    if let Some(m) = mask {
        if m.num_tags() != t {
            return Err(NerError::Shape(format!(
                "mask has {} tags, crf has {t}",
                m.num_tags()
            )));
        }
    }
    let trans = |i: usize, j: usize| match mask {
        Some(m) if !m.allows(i, j) => f64::NEG_INFINITY,
        _ => crf.trans(i, j),
    };
    let mut delta: Vec<f64> = (0..t)
        .map(|j| match mask {
            Some(m) if !m.allows_start(j) => f64::NEG_INFINITY,
            _ => crf.start[j] + emissions.row(0)[j],
        })
        .collect();
    let mut backptr: Vec<Vec<usize>> = Vec::with_capacity(len.saturating_sub(1));
    for pos in 1..len {
        let mut next = vec![f64::NEG_INFINITY; t];
        let mut ptr = vec![0usize; t];
        for j in 0..t {
            let mut best = f64::NEG_INFINITY;
            for (i, &d) in delta.iter().enumerate() {
                let s = d + trans(i, j);
                if s > best {
                    best = s;
                    ptr[j] = i;
                }
            }
            next[j] = best + emissions.row(pos)[j];
        }
        delta = next;
        backptr.push(ptr);
    }
    let mut best_tag = 0;
    let mut best = f64::NEG_INFINITY;
    for (j, (&d, &e)) in delta.iter().zip(&crf.end).enumerate() {
        if d + e > best {
            best = d + e;
            best_tag = j;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(NerError::Infeasible);
    }
    let mut path = vec![best_tag; len];
    for pos in (1..len).rev() {
        path[pos - 1] = backptr[pos - 1][path[pos]];
    }
    Ok((path, best))
}
