/// Asymmetric Laplace density with its `alpha`-quantile at zero:
/// `alpha (1 - alpha) exp(-eps (alpha - 1{eps < 0}))`.
pub fn density_asymmetric_laplace(eps: f64, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    let indicator = if eps < 0.0 { 1.0 } else { 0.0 };
    alpha * (1.0 - alpha) * (-eps * (alpha - indicator)).exp()
}
