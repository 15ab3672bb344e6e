use rand::Rng;

use super::{
    matvec_add, matvec_t_add, outer_add, sigmoid, uniform_init, NnError, ParamSet, Parameter,
    Tensor, INIT_SCALE,
};

/// Gate blocks in the stacked weight matrices, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

/// LSTM cell parameters with the four gates stacked row-wise:
/// `input` is `4H × D`, `recurrent` is `4H × H`, `bias` is `4H`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmWeights {
    pub input: Parameter,
    pub recurrent: Parameter,
    pub bias: Parameter,
}

impl LstmWeights {
    pub fn zeros(prefix: &str, input_dim: usize, hidden: usize) -> Self {
        LstmWeights {
            input: Parameter::zeros(format!("{prefix}.input"), &[4 * hidden, input_dim]),
            recurrent: Parameter::zeros(format!("{prefix}.recurrent"), &[4 * hidden, hidden]),
            bias: Parameter::zeros(format!("{prefix}.bias"), &[4 * hidden]),
        }
    }

    /// Uniform weights in `±INIT_SCALE`, zero bias except the forget gate at 1.
    pub fn init(prefix: &str, input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        Self::init_scaled(prefix, input_dim, hidden, INIT_SCALE, rng)
    }

    pub fn init_scaled(
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        scale: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut w = Self::zeros(prefix, input_dim, hidden);
        w.input.value = uniform_init(&[4 * hidden, input_dim], scale, rng);
        w.recurrent.value = uniform_init(&[4 * hidden, hidden], scale, rng);
        let forget = Gate::Forget as usize * hidden;
        w.bias.value.data_mut()[forget..forget + hidden].fill(1.0);
        w
    }

    pub fn hidden(&self) -> usize {
        self.recurrent.value.cols()
    }

    pub fn input_dim(&self) -> usize {
        self.input.value.cols()
    }

    /// Rows of one gate's input matrix (`H × D`, row-major).
    pub fn gate_input(&self, gate: Gate) -> &[f64] {
        let h = self.hidden();
        let d = self.input_dim();
        let g = gate as usize;
        &self.input.value.data()[g * h * d..(g + 1) * h * d]
    }

    pub fn gate_recurrent(&self, gate: Gate) -> &[f64] {
        let h = self.hidden();
        let g = gate as usize;
        &self.recurrent.value.data()[g * h * h..(g + 1) * h * h]
    }

    pub fn gate_bias(&self, gate: Gate) -> &[f64] {
        let h = self.hidden();
        let g = gate as usize;
        &self.bias.value.data()[g * h..(g + 1) * h]
    }

    fn check(&self, x: usize, h_prev: usize, c_prev: usize) -> Result<(), NnError> {
        let h = self.hidden();
        let d = self.input_dim();
        if self.input.value.shape() != [4 * h, d] || self.bias.value.len() != 4 * h {
            return Err(NnError::Shape("inconsistent LSTM weights".into()));
        }
        if x != d || h_prev != h || c_prev != h {
            return Err(NnError::Shape(format!(
                "LSTM step expects x:{d}, h:{h}, c:{h}; got x:{x}, h:{h_prev}, c:{c_prev}"
            )));
        }
        Ok(())
    }
}

impl ParamSet for LstmWeights {
    fn params(&self) -> Vec<&Parameter> {
        vec![&self.input, &self.recurrent, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.input, &mut self.recurrent, &mut self.bias]
    }
}

/// Gradient buffers mirroring [`LstmWeights`].
#[derive(Debug, Clone, PartialEq)]
pub struct LstmGrad {
    pub input: Tensor,
    pub recurrent: Tensor,
    pub bias: Tensor,
}

impl LstmGrad {
    pub fn zeros_like(w: &LstmWeights) -> Self {
        LstmGrad {
            input: Tensor::zeros(w.input.value.shape()),
            recurrent: Tensor::zeros(w.recurrent.value.shape()),
            bias: Tensor::zeros(w.bias.value.shape()),
        }
    }

    pub fn accumulate_into(&self, w: &mut LstmWeights, scale: f64) {
        for (dst, src) in [
            (&mut w.input.grad, &self.input),
            (&mut w.recurrent.grad, &self.recurrent),
            (&mut w.bias.grad, &self.bias),
        ] {
            for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
                *d += scale * s;
            }
        }
    }
}

/// Everything one step's backward pass needs.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    /// Activated gates, stacked `[i, f, o, g]`.
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
    tanh_c: Vec<f64>,
}

fn step_cached(x: &[f64], h_prev: &[f64], c_prev: &[f64], w: &LstmWeights) -> LstmStepCache {
    let h = w.hidden();
    let mut z = w.bias.value.data().to_vec();
    matvec_add(w.input.value.data(), w.input_dim(), x, &mut z);
    matvec_add(w.recurrent.value.data(), h, h_prev, &mut z);
    for (k, v) in z.iter_mut().enumerate() {
        *v = if k < 3 * h { sigmoid(*v) } else { v.tanh() };
    }
    let mut c = vec![0.0; h];
    let mut tanh_c = vec![0.0; h];
    let mut h_out = vec![0.0; h];
    for k in 0..h {
        let (i, f, o, g) = (z[k], z[h + k], z[2 * h + k], z[3 * h + k]);
        c[k] = f * c_prev[k] + i * g;
        tanh_c[k] = c[k].tanh();
        h_out[k] = o * tanh_c[k];
    }
    LstmStepCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        gates: z,
        c,
        h: h_out,
        tanh_c,
    }
}

/// One LSTM cell step returning `(h, c)`.
pub fn lstm_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    w: &LstmWeights,
) -> Result<(Vec<f64>, Vec<f64>), NnError> {
    w.check(x.len(), h_prev.len(), c_prev.len())?;
    let cache = step_cached(x, h_prev, c_prev, w);
    Ok((cache.h, cache.c))
}

/// Backpropagates `dh`, `dc` through one step. Accumulates weight gradients
/// into `grad` and returns `(dx, dh_prev, dc_prev)`.
pub fn lstm_step_backward(
    cache: &LstmStepCache,
    dh: &[f64],
    dc: &[f64],
    w: &LstmWeights,
    grad: &mut LstmGrad,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = w.hidden();
    let z = &cache.gates;
    let mut dz = vec![0.0; 4 * h];
    let mut dc_prev = vec![0.0; h];
    for k in 0..h {
        let (i, f, o, g) = (z[k], z[h + k], z[2 * h + k], z[3 * h + k]);
        let tc = cache.tanh_c[k];
        let d_o = dh[k] * tc;
        let dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
        dz[k] = dct * g * i * (1.0 - i);
        dz[h + k] = dct * cache.c_prev[k] * f * (1.0 - f);
        dz[2 * h + k] = d_o * o * (1.0 - o);
        dz[3 * h + k] = dct * i * (1.0 - g * g);
        dc_prev[k] = dct * f;
    }
    outer_add(grad.input.data_mut(), w.input_dim(), &dz, &cache.x);
    outer_add(grad.recurrent.data_mut(), h, &dz, &cache.h_prev);
    for (b, d) in grad.bias.data_mut().iter_mut().zip(&dz) {
        *b += d;
    }
    let mut dx = vec![0.0; w.input_dim()];
    matvec_t_add(w.input.value.data(), w.input_dim(), &dz, &mut dx);
    let mut dh_prev = vec![0.0; h];
    matvec_t_add(w.recurrent.value.data(), h, &dz, &mut dh_prev);
    (dx, dh_prev, dc_prev)
}

/// Cached forward and backward scans of a BiLSTM over one sentence.
#[derive(Debug, Clone)]
pub struct BiLstmTrace {
    len: usize,
    rows: usize,
    /// Indexed by position.
    forward: Vec<LstmStepCache>,
    /// Indexed by position (scan order reversed).
    backward: Vec<LstmStepCache>,
}

impl BiLstmTrace {
    pub fn true_len(&self) -> usize {
        self.len
    }
}

/// Runs the forward scan over positions `0..true_len` and the backward scan
/// over `true_len-1..=0`; row `t` of the `L × 2H` output is
/// `[h_fwd(t), h_bwd(t)]`, rows at or past `true_len` are zero.
pub fn bilstm_forward(
    x: &Tensor,
    true_len: usize,
    fwd: &LstmWeights,
    bwd: &LstmWeights,
) -> Result<(Tensor, BiLstmTrace), NnError> {
    if true_len == 0 {
        return Err(NnError::EmptySequence);
    }
    if true_len > x.rows() || x.shape().len() != 2 {
        return Err(NnError::Shape(format!(
            "true length {true_len} exceeds {} input rows",
            x.rows()
        )));
    }
    let h = fwd.hidden();
    if bwd.hidden() != h {
        return Err(NnError::Shape(
            "forward/backward hidden sizes differ".into(),
        ));
    }
    fwd.check(x.cols(), h, h)?;
    bwd.check(x.cols(), h, h)?;

    let mut out = Tensor::zeros(&[x.rows(), 2 * h]);
    let mut forward = Vec::with_capacity(true_len);
    let (mut hs, mut cs) = (vec![0.0; h], vec![0.0; h]);
    for t in 0..true_len {
        let cache = step_cached(x.row(t), &hs, &cs, fwd);
        hs.clone_from(&cache.h);
        cs.clone_from(&cache.c);
        out.row_mut(t)[..h].copy_from_slice(&cache.h);
        forward.push(cache);
    }
    let mut backward = Vec::with_capacity(true_len);
    hs.fill(0.0);
    cs.fill(0.0);
    for t in (0..true_len).rev() {
        let cache = step_cached(x.row(t), &hs, &cs, bwd);
        hs.clone_from(&cache.h);
        cs.clone_from(&cache.c);
        out.row_mut(t)[h..].copy_from_slice(&cache.h);
        backward.push(cache);
    }
    backward.reverse();
    Ok((
        out,
        BiLstmTrace {
            len: true_len,
            rows: x.rows(),
            forward,
            backward,
        },
    ))
}

pub fn bilstm_encode(
    x: &Tensor,
    true_len: usize,
    fwd: &LstmWeights,
    bwd: &LstmWeights,
) -> Result<Tensor, NnError> {
    bilstm_forward(x, true_len, fwd, bwd).map(|(out, _)| out)
}

/// Backward of [`bilstm_forward`]; returns `dL/dX` (`L × D`).
pub fn bilstm_backward(
    trace: &BiLstmTrace,
    d_out: &Tensor,
    fwd: &LstmWeights,
    bwd: &LstmWeights,
    g_fwd: &mut LstmGrad,
    g_bwd: &mut LstmGrad,
) -> Tensor {
    let h = fwd.hidden();
    let mut dx = Tensor::zeros(&[trace.rows, fwd.input_dim()]);
    let (mut dh, mut dc) = (vec![0.0; h], vec![0.0; h]);
    for t in (0..trace.len).rev() {
        for (a, b) in dh.iter_mut().zip(&d_out.row(t)[..h]) {
            *a += b;
        }
        let (dxt, dhp, dcp) = lstm_step_backward(&trace.forward[t], &dh, &dc, fwd, g_fwd);
        for (a, b) in dx.row_mut(t).iter_mut().zip(&dxt) {
            *a += b;
        }
        dh = dhp;
        dc = dcp;
    }
    dh.fill(0.0);
    dc.fill(0.0);
    for t in 0..trace.len {
        for (a, b) in dh.iter_mut().zip(&d_out.row(t)[h..]) {
            *a += b;
        }
        let (dxt, dhp, dcp) = lstm_step_backward(&trace.backward[t], &dh, &dc, bwd, g_bwd);
        for (a, b) in dx.row_mut(t).iter_mut().zip(&dxt) {
            *a += b;
        }
        dh = dhp;
        dc = dcp;
    }
    dx
}
