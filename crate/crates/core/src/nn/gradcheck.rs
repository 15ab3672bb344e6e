use super::ParamSet;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
}

/// A coordinate whose relative error exceeded the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct GradMismatch {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    /// Bound on the floating-point error of the central difference itself,
    /// `16 ε max(|f(θ+δ)|, |f(θ-δ)|) / δ`.
    pub roundoff: f64,
}

impl GradMismatch {
    /// True when the discrepancy is within what the difference quotient
    /// can resolve at this step, i.e. not evidence of a wrong gradient.
    pub fn within_roundoff(&self) -> bool {
        (self.analytic - self.numeric).abs() <= self.roundoff
    }
}

/// Compares the analytic gradients stored in `model` against central
/// differences `(f(θ+δ) - f(θ-δ)) / 2δ`, one coordinate at a time.
///
/// Relative error is `|a - n| / max(|a|, |n|, 1e-8)`. Parameter values are
/// restored exactly after each probe.
pub fn grad_check<M: ParamSet>(
    model: &mut M,
    step: f64,
    loss: impl FnMut(&M) -> f64,
) -> GradCheckReport {
    grad_check_detailed(model, step, f64::INFINITY, loss).0
}

/// Like [`grad_check`], and also lists every coordinate whose relative
/// error exceeds `rel_tol`.
pub fn grad_check_detailed<M: ParamSet>(
    model: &mut M,
    step: f64,
    rel_tol: f64,
    mut loss: impl FnMut(&M) -> f64,
) -> (GradCheckReport, Vec<GradMismatch>) {
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        checked: 0,
    };
    let mut mismatches = Vec::new();
    let sizes: Vec<usize> = model.params().iter().map(|p| p.value.len()).collect();
    for (pi, &size) in sizes.iter().enumerate() {
        for k in 0..size {
            let original = model.params()[pi].value.data()[k];
            let analytic = model.params()[pi].grad.data()[k];
            model.params_mut()[pi].value.data_mut()[k] = original + step;
            let plus = loss(model);
            model.params_mut()[pi].value.data_mut()[k] = original - step;
            let minus = loss(model);
            model.params_mut()[pi].value.data_mut()[k] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            let rel = (analytic - numeric).abs() / denom;
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_param = model.params()[pi].name.clone();
                report.worst_index = k;
            }
            if rel >= rel_tol {
                mismatches.push(GradMismatch {
                    param: model.params()[pi].name.clone(),
                    index: k,
                    analytic,
                    numeric,
                    roundoff: 16.0 * f64::EPSILON * plus.abs().max(minus.abs()) / step,
                });
            }
        }
    }
    (report, mismatches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Parameter, Tensor};

    fn params(values: Vec<f64>) -> Vec<Parameter> {
        vec![Parameter::new(
            "theta",
            Tensor::from_vec(&[values.len()], values).unwrap(),
        )]
    }

    #[test]
    fn sum_of_squares() {
        let mut ps = params(vec![0.3, -1.2, 2.5, 0.01]);
        let analytic: Vec<f64> = ps[0].value.data().iter().map(|v| 2.0 * v).collect();
        ps[0].grad.data_mut().copy_from_slice(&analytic);
        let r = grad_check(&mut ps, 1e-5, |p| {
            p[0].value.data().iter().map(|v| v * v).sum()
        });
        assert!(r.max_rel_error < 1e-8, "{r:?}");
        assert_eq!(r.checked, 4);
    }

    #[test]
    fn linear_is_exact() {
        let mut ps = params(vec![0.5, 1.5, -2.0]);
        ps[0].grad.fill(1.0);
        let r = grad_check(&mut ps, 1e-5, |p| p[0].value.data().iter().sum());
        assert!(r.max_rel_error < 1e-9, "{r:?}");
    }

    #[test]
    fn detects_wrong_gradient() {
        let mut ps = params(vec![1.0]);
        ps[0].grad.fill(3.0);
        let r = grad_check(&mut ps, 1e-5, |p| p[0].value.data()[0].powi(2));
        assert!(r.max_rel_error > 0.3);
        assert_eq!(r.worst_param, "theta");
        let (_, bad) = grad_check_detailed(&mut ps, 1e-5, 1e-4, |p| p[0].value.data()[0].powi(2));
        assert_eq!(bad.len(), 1);
        assert!(!bad[0].within_roundoff());
    }

    #[test]
    fn tiny_gradient_under_large_loss_is_roundoff() {
        // True gradient 1e-10 on top of a loss near 10: the quotient cannot see it.
        let mut ps = params(vec![0.0]);
        ps[0].grad.fill(1e-10);
        let (r, bad) =
            grad_check_detailed(&mut ps, 1e-5, 1e-4, |p| 10.0 + 1e-10 * p[0].value.data()[0]);
        assert!(r.max_rel_error > 1e-4);
        assert_eq!(bad.len(), 1);
        assert!(bad[0].within_roundoff(), "{bad:?}");
    }

    #[test]
    fn values_restored() {
        let mut ps = params(vec![0.1, 0.2]);
        let before = ps[0].value.clone();
        grad_check(&mut ps, 1e-3, |p| p[0].value.data()[0].sin());
        assert_eq!(ps[0].value, before);
    }
}
