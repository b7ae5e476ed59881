/// Degrees of freedom of the residual distribution.
///
/// `Two` matches the direct transfer error, `Four` the symmetric transfer error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiSquareDof {
    Two,
    Four,
}

/// Inlier threshold `F⁻¹(alpha) σ²` on squared residuals.
pub fn chi2_threshold(sigma: f64, alpha: f64, dof: ChiSquareDof) -> f64 {
    assert!(sigma > 0.0, "sigma must be positive");
    chi2_inverse_cdf(alpha, dof) * sigma * sigma
}

/// Inverse CDF of the χ² distribution with an even number of degrees of freedom.
pub fn chi2_inverse_cdf(alpha: f64, dof: ChiSquareDof) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    let tail = (-alpha).ln_1p();
    match dof {
        // F(x) = 1 - exp(-x/2)
        ChiSquareDof::Two => -2.0 * tail,
        // F(x) = 1 - exp(-u)(1 + u), u = x/2. Solve ln(1+u) - u = ln(1-alpha)
        // by Newton from the right of the root, where iterates decrease monotonically.
        ChiSquareDof::Four => {
            let g = |u: f64| u.ln_1p() - u - tail;
            let mut u = -tail + (1.0 - tail).ln() + 2.0;
            while g(u) > 0.0 {
                u *= 2.0;
            }
            for _ in 0..100 {
                let step = g(u) / (-u / (1.0 + u));
                u -= step;
                if step.abs() <= 1e-15 * u {
                    break;
                }
            }
            2.0 * u
        }
    }
}
