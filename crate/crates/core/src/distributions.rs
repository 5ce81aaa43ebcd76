//! Standard normal, gamma and inverse Gaussian laws in the mean/dispersion
//! parameterization: for both response families `E[Y] = μ`, with
//! `Var[Y] = σ²μ²` for the gamma and `Var[Y] = σ²μ³` for the inverse Gaussian.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::special;

fn check_positive(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "probability",
            value: p,
        })
    }
}

/// Gamma law with mean `mu` and dispersion `sigma` (shape `1/σ²`, scale `μσ²`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    mu: f64,
    sigma: f64,
}

impl GammaParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        check_positive("gamma mean", mu)?;
        check_positive("gamma dispersion", sigma)?;
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn shape(&self) -> f64 {
        1.0 / (self.sigma * self.sigma)
    }

    pub fn scale(&self) -> f64 {
        self.mu * self.sigma * self.sigma
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma * self.mu * self.mu
    }
}

/// Inverse Gaussian law with mean `mu` and dispersion `sigma` (shape `λ = 1/σ²`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvGaussParams {
    mu: f64,
    sigma: f64,
}

impl InvGaussParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        check_positive("inverse Gaussian mean", mu)?;
        check_positive("inverse Gaussian dispersion", sigma)?;
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda(&self) -> f64 {
        1.0 / (self.sigma * self.sigma)
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma * self.mu.powi(3)
    }
}

/// Standard normal CDF Φ(z). Rejects non-finite input.
pub fn normal_cdf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain {
            what: "normal_cdf argument",
            value: z,
        });
    }
    Ok(special::phi(z))
}

/// Standard normal quantile Φ⁻¹(p) for `0 < p < 1`.
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(special::phi_inv(p))
}

/// `(P[Y ≤ y], P[Y > y])` for the gamma law, without argument checks.
///
/// The smaller tail is computed directly so both entries keep relative accuracy.
pub fn gamma_cdf_pair(y: f64, params: &GammaParams) -> (f64, f64) {
    special::regularized_gamma(params.shape(), y / params.scale())
}

pub fn gamma_cdf(y: f64, params: &GammaParams) -> Result<f64> {
    check_positive("gamma observation", y)?;
    Ok(gamma_cdf_pair(y, params).0)
}

pub fn gamma_sf(y: f64, params: &GammaParams) -> Result<f64> {
    check_positive("gamma observation", y)?;
    Ok(gamma_cdf_pair(y, params).1)
}

pub fn gamma_ln_pdf(y: f64, params: &GammaParams) -> f64 {
    special::ln_gamma_prefactor(params.shape(), y / params.scale()) - y.ln()
}

pub fn gamma_pdf(y: f64, params: &GammaParams) -> Result<f64> {
    check_positive("gamma observation", y)?;
    Ok(gamma_ln_pdf(y, params).exp())
}

/// Inverse of [`gamma_cdf`] by safeguarded Newton iteration.
pub fn gamma_quantile(p: f64, params: &GammaParams) -> Result<f64> {
    check_probability(p)?;
    let shape = params.shape();
    let scale = params.scale();
    // Wilson–Hilferty start, falling back to the small-x power law.
    let z = special::phi_inv(p);
    let wh = shape * (1.0 - 1.0 / (9.0 * shape) + z / (3.0 * shape.sqrt())).powi(3);
    let start = if wh > 0.0 && wh.is_finite() {
        wh * scale
    } else {
        ((p.ln() + special::ln_gamma(shape + 1.0)) / shape).exp() * scale
    };
    Ok(invert_cdf(
        p,
        start,
        |x| gamma_cdf_pair(x, params),
        |x| gamma_ln_pdf(x, params).exp(),
    ))
}

/// `(P[Y ≤ y], P[Y > y])` for the inverse Gaussian law, without argument checks.
///
/// Uses `F(y) = Φ(a) + e^{2λ/μ} Φ(-b)` with `a = √(λ/y)(y-μ)/μ`,
/// `b = √(λ/y)(y+μ)/μ`. The second term is rewritten as
/// `½ e^{-a²/2} erfcx(b/√2)`, which never overflows however large `λ/μ` is.
pub fn invgauss_cdf_pair(y: f64, params: &InvGaussParams) -> (f64, f64) {
    let mu = params.mu();
    let r = (params.lambda() / y).sqrt();
    let a = r * (y - mu) / mu;
    let b = r * (y + mu) / mu;
    let damp = (-0.5 * a * a).exp();
    let reflected = 0.5 * damp * special::erfcx(b * FRAC_1_SQRT_2);
    let lower = special::phi(a) + reflected;
    if lower <= 0.5 {
        return (lower, 1.0 - lower);
    }
    let upper = if a > 0.0 {
        0.5 * damp * (special::erfcx(a * FRAC_1_SQRT_2) - special::erfcx(b * FRAC_1_SQRT_2))
    } else {
        special::phi(-a) - reflected
    };
    let upper = upper.max(0.0);
    (1.0 - upper, upper)
}

pub fn invgauss_cdf(y: f64, params: &InvGaussParams) -> Result<f64> {
    check_positive("inverse Gaussian observation", y)?;
    Ok(invgauss_cdf_pair(y, params).0)
}

pub fn invgauss_sf(y: f64, params: &InvGaussParams) -> Result<f64> {
    check_positive("inverse Gaussian observation", y)?;
    Ok(invgauss_cdf_pair(y, params).1)
}

pub fn invgauss_ln_pdf(y: f64, params: &InvGaussParams) -> f64 {
    let s2 = params.sigma() * params.sigma();
    let mu = params.mu();
    -0.5 * (2.0 * PI * y.powi(3) * s2).ln() - (y - mu).powi(2) / (2.0 * mu * mu * s2 * y)
}

pub fn invgauss_pdf(y: f64, params: &InvGaussParams) -> Result<f64> {
    check_positive("inverse Gaussian observation", y)?;
    Ok(invgauss_ln_pdf(y, params).exp())
}

/// Inverse of [`invgauss_cdf`] by safeguarded Newton iteration.
pub fn invgauss_quantile(p: f64, params: &InvGaussParams) -> Result<f64> {
    check_probability(p)?;
    let z = special::phi_inv(p);
    let normal_guess = params.mu() + z * params.variance().sqrt();
    let start = if normal_guess > 0.0 {
        normal_guess
    } else {
        0.1 * params.mu()
    };
    Ok(invert_cdf(
        p,
        start,
        |x| invgauss_cdf_pair(x, params),
        |x| invgauss_ln_pdf(x, params).exp(),
    ))
}

const QUANTILE_TOL: f64 = 1e-12;
const QUANTILE_MAX_ITER: usize = 500;

/// Solves `F(x) = p` on `(0, ∞)` with Newton steps kept inside a bisection
/// bracket. Works on whichever tail of `p` is smaller so that extreme
/// probabilities keep relative accuracy.
fn invert_cdf(
    p: f64,
    start: f64,
    cdf_pair: impl Fn(f64) -> (f64, f64),
    pdf: impl Fn(f64) -> f64,
) -> f64 {
    let upper_tail = p > 0.5;
    let target = if upper_tail { 1.0 - p } else { p };
    // Increasing in x for both tails.
    let residual = |x: f64| {
        let (lower, upper) = cdf_pair(x);
        if upper_tail {
            target - upper
        } else {
            lower - target
        }
    };

    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    let mut x = start.max(f64::MIN_POSITIVE);
    for _ in 0..QUANTILE_MAX_ITER {
        let r = residual(x);
        if r.abs() <= QUANTILE_TOL * target {
            return x;
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi.is_finite() && hi - lo <= 4.0 * f64::EPSILON * hi {
            return x;
        }
        let density = pdf(x);
        let newton = if density > 0.0 {
            x - r / density
        } else {
            f64::NAN
        };
        x = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            2.0 * x
        };
    }
    x
}
