/// Probability clamp for binary cross entropy.
pub const BCE_EPS: f64 = 1e-7;

/// `-(y ln p + (1-y) ln(1-p))` with `p` clamped to `[ε, 1-ε]`.
pub fn bce_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// `d bce / dp`; zero where the clamp is active.
pub fn bce_grad(p: f64, y: f64) -> f64 {
    if !(BCE_EPS..=1.0 - BCE_EPS).contains(&p) {
        return 0.0;
    }
    -y / p + (1.0 - y) / (1.0 - p)
}
