//! Gamma and inverse Gaussian GLMs: specification, IRLS fitting, dispersion
//! estimation, working weights and leverages.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{self, GammaParams, InvGaussParams};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Qr};
use crate::sampling::RngStream;
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gamma,
    InverseGaussian,
}

impl Family {
    /// Variance function V(μ); `Var[Y] = σ² V(μ)`.
    pub fn variance(self, mu: f64) -> f64 {
        match self {
            Family::Gamma => mu * mu,
            Family::InverseGaussian => mu * mu * mu,
        }
    }

    /// Unit deviance `d(y, μ)`, so that the deviance is `Σ d(yᵢ, μᵢ)`.
    pub fn unit_deviance(self, y: f64, mu: f64) -> f64 {
        match self {
            Family::Gamma => {
                let t = (y - mu) / mu;
                // −ln(1 + t) + t, accurate near t = 0.
                (2.0 * (t - t.ln_1p())).max(0.0)
            }
            Family::InverseGaussian => (y - mu).powi(2) / (mu * mu * y),
        }
    }

    /// `(F(y), 1 − F(y))` under mean `mu` and dispersion `sigma`.
    pub fn cdf_pair(self, y: f64, mu: f64, sigma: f64) -> Result<(f64, f64)> {
        check_response(y)?;
        Ok(match self {
            Family::Gamma => distributions::gamma_cdf_pair(y, &GammaParams::new(mu, sigma)?),
            Family::InverseGaussian => {
                distributions::invgauss_cdf_pair(y, &InvGaussParams::new(mu, sigma)?)
            }
        })
    }

    pub fn ln_pdf(self, y: f64, mu: f64, sigma: f64) -> Result<f64> {
        check_response(y)?;
        Ok(match self {
            Family::Gamma => distributions::gamma_ln_pdf(y, &GammaParams::new(mu, sigma)?),
            Family::InverseGaussian => {
                distributions::invgauss_ln_pdf(y, &InvGaussParams::new(mu, sigma)?)
            }
        })
    }

    pub fn sample(self, stream: &mut RngStream, mu: f64, sigma: f64) -> Result<f64> {
        Ok(match self {
            Family::Gamma => stream.gamma(&GammaParams::new(mu, sigma)?),
            Family::InverseGaussian => stream.inverse_gaussian(&InvGaussParams::new(mu, sigma)?),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Gamma => "gamma",
            Family::InverseGaussian => "invgauss",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gamma" | "ga" => Ok(Family::Gamma),
            "invgauss" | "inverse_gaussian" | "inverse-gaussian" | "ig" => {
                Ok(Family::InverseGaussian)
            }
            _ => Err(Error::Unknown {
                what: "family",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Log,
    /// η = 1/μ
    Inverse,
    /// η = 1/μ²
    InverseSquared,
    Identity,
}

impl Link {
    pub fn link(self, mu: f64) -> f64 {
        match self {
            Link::Log => mu.ln(),
            Link::Inverse => 1.0 / mu,
            Link::InverseSquared => 1.0 / (mu * mu),
            Link::Identity => mu,
        }
    }

    /// μ = g⁻¹(η). Returns NaN where η has no positive preimage.
    pub fn inverse(self, eta: f64) -> f64 {
        match self {
            Link::Log => eta.exp(),
            Link::Inverse if eta > 0.0 => 1.0 / eta,
            Link::InverseSquared if eta > 0.0 => 1.0 / eta.sqrt(),
            Link::Identity if eta > 0.0 => eta,
            _ => f64::NAN,
        }
    }

    /// dμ/dη expressed in terms of μ.
    pub fn dmu_deta(self, mu: f64) -> f64 {
        match self {
            Link::Log => mu,
            Link::Inverse => -mu * mu,
            Link::InverseSquared => -0.5 * mu * mu * mu,
            Link::Identity => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Link::Log => "log",
            Link::Inverse => "inverse",
            Link::InverseSquared => "inverse2",
            Link::Identity => "identity",
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "log" => Ok(Link::Log),
            "inverse" | "inv" => Ok(Link::Inverse),
            "inverse2" | "inverse_squared" | "1/mu^2" => Ok(Link::InverseSquared),
            "identity" | "id" => Ok(Link::Identity),
            _ => Err(Error::Unknown {
                what: "link",
                value: s.to_string(),
            }),
        }
    }
}

fn check_response(y: f64) -> Result<()> {
    if y.is_finite() && y > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "response",
            value: y,
        })
    }
}

fn valid_mean(mu: f64) -> bool {
    mu.is_finite() && mu > 0.0
}

/// Family, link, design and response of one regression problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    family: Family,
    link: Link,
    x: Matrix,
    y: Vec<f64>,
    column_names: Vec<String>,
}

impl ModelSpec {
    pub fn new(family: Family, link: Link, x: Matrix, y: Vec<f64>) -> Result<Self> {
        let (n, k) = (x.nrows(), x.ncols());
        if y.len() != n {
            return Err(Error::InvalidSpec(format!(
                "design has {n} rows but response has {} values",
                y.len()
            )));
        }
        if k == 0 {
            return Err(Error::InvalidSpec("design has no columns".into()));
        }
        if n <= k {
            return Err(Error::InsufficientData {
                needed: k + 1,
                got: n,
            });
        }
        if let Some(&bad) = x.as_slice().iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain {
                what: "design entry",
                value: bad,
            });
        }
        for &v in &y {
            check_response(v)?;
        }
        let column_names = (0..k).map(|j| format!("x{j}")).collect();
        Ok(Self {
            family,
            link,
            x,
            y,
            column_names,
        })
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.x.ncols() {
            return Err(Error::InvalidSpec(format!(
                "{} column names for {} columns",
                names.len(),
                self.x.ncols()
            )));
        }
        self.column_names = names;
        Ok(self)
    }

    /// Same family, link and design with a new response vector.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.family, self.link, self.x.clone(), y)?;
        out.column_names = self.column_names.clone();
        Ok(out)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn design(&self) -> &Matrix {
        &self.x
    }

    pub fn response(&self) -> &[f64] {
        &self.y
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }
}

/// How σ is estimated once β̂ has converged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionMethod {
    /// σ̂² = Σ (y − μ̂)²/V(μ̂) / (n − k).
    #[default]
    Pearson,
    /// Maximizer of the profile likelihood at β̂.
    MaximumLikelihood,
}

impl FromStr for DispersionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pearson" => Ok(Self::Pearson),
            "ml" | "mle" | "maximum_likelihood" => Ok(Self::MaximumLikelihood),
            _ => Err(Error::Unknown {
                what: "dispersion method",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub max_halvings: usize,
    pub dispersion: DispersionMethod,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-10,
            max_halvings: 20,
            dispersion: DispersionMethod::Pearson,
        }
    }
}

/// Score must fall below this fraction of `max_j Σᵢ |x_ij wᵢ (yᵢ − μᵢ)/μ′ᵢ|`.
const RELATIVE_SCORE_TOL: f64 = 1e-10;
const SCORE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub family: Family,
    pub link: Link,
    pub beta: Vec<f64>,
    pub sigma: f64,
    pub mu: Vec<f64>,
    pub eta: Vec<f64>,
    pub leverage: Vec<f64>,
    pub y: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub max_abs_score: f64,
    pub deviance: f64,
    pub dispersion_method: DispersionMethod,
    /// (XᵀWX)⁻¹ at μ̂, row-major.
    pub unscaled_covariance: Vec<Vec<f64>>,
}

impl FittedModel {
    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn k(&self) -> usize {
        self.beta.len()
    }

    /// σ̂ √[(XᵀŴX)⁻¹]ⱼⱼ
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.k())
            .map(|j| self.sigma * self.unscaled_covariance[j][j].sqrt())
            .collect()
    }

    pub fn log_likelihood(&self) -> Result<f64> {
        log_likelihood(self.family, &self.y, &self.mu, self.sigma)
    }

    /// A model object holding given parameters rather than estimates, with
    /// leverages evaluated at the implied means.
    pub fn from_parameters(spec: &ModelSpec, beta: &[f64], sigma: f64) -> Result<Self> {
        if beta.len() != spec.k() {
            return Err(Error::InvalidSpec(format!(
                "{} coefficients for {} columns",
                beta.len(),
                spec.k()
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Domain {
                what: "dispersion",
                value: sigma,
            });
        }
        let eta = spec.x.mul_vec(beta);
        let mu: Vec<f64> = eta.iter().map(|&e| spec.link.inverse(e)).collect();
        if !mu.iter().all(|&m| valid_mean(m)) {
            return Err(Error::InvalidMean { iteration: 0 });
        }
        let state = WorkingState::new(spec, &mu);
        let qr = state.factor(spec)?;
        let score = state.score(spec);
        Ok(Self {
            family: spec.family,
            link: spec.link,
            beta: beta.to_vec(),
            sigma,
            leverage: qr.hat_diagonal(),
            unscaled_covariance: qr.inverse_gram(),
            deviance: deviance(spec.family, &spec.y, &mu),
            mu,
            eta,
            y: spec.y.clone(),
            iterations: 0,
            converged: true,
            max_abs_score: max_abs(&score),
            dispersion_method: DispersionMethod::Pearson,
        })
    }
}

/// Working weights `w = (dμ/dη)² / V(μ)`.
pub fn working_weights(family: Family, link: Link, mu: &[f64]) -> Result<Vec<f64>> {
    mu.iter()
        .map(|&m| {
            if !valid_mean(m) {
                return Err(Error::Domain {
                    what: "fitted mean",
                    value: m,
                });
            }
            let d = link.dmu_deta(m);
            Ok(d * d / family.variance(m))
        })
        .collect()
}

/// Diagonal of `W^{1/2} X (XᵀWX)⁻¹ Xᵀ W^{1/2}`.
pub fn hat_diagonal(x: &Matrix, w: &[f64]) -> Result<Vec<f64>> {
    if w.len() != x.nrows() {
        return Err(Error::InvalidSpec(
            "weight vector length differs from design rows".into(),
        ));
    }
    if let Some(&bad) = w.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain {
            what: "weight",
            value: bad,
        });
    }
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    Ok(Qr::new_scaled(x, &sw)?.hat_diagonal())
}

pub fn deviance(family: Family, y: &[f64], mu: &[f64]) -> f64 {
    y.iter()
        .zip(mu)
        .map(|(&yi, &mi)| family.unit_deviance(yi, mi))
        .sum()
}

pub fn log_likelihood(family: Family, y: &[f64], mu: &[f64], sigma: f64) -> Result<f64> {
    y.iter()
        .zip(mu)
        .map(|(&yi, &mi)| family.ln_pdf(yi, mi, sigma))
        .sum()
}

/// Dispersion σ̂ at fixed fitted means; `k` is the number of coefficients.
pub fn estimate_sigma(
    family: Family,
    y: &[f64],
    mu: &[f64],
    k: usize,
    method: DispersionMethod,
) -> Result<f64> {
    let n = y.len();
    if mu.len() != n {
        return Err(Error::InvalidSpec(
            "response and fitted means differ in length".into(),
        ));
    }
    if n <= k {
        return Err(Error::InsufficientData {
            needed: k + 1,
            got: n,
        });
    }
    for (&yi, &mi) in y.iter().zip(mu) {
        check_response(yi)?;
        if !valid_mean(mi) {
            return Err(Error::Domain {
                what: "fitted mean",
                value: mi,
            });
        }
    }
    let sigma2 = match method {
        DispersionMethod::Pearson => {
            let chi2: f64 = y
                .iter()
                .zip(mu)
                .map(|(&yi, &mi)| (yi - mi).powi(2) / family.variance(mi))
                .sum();
            chi2 / (n - k) as f64
        }
        DispersionMethod::MaximumLikelihood => match family {
            Family::InverseGaussian => {
                y.iter()
                    .zip(mu)
                    .map(|(&yi, &mi)| (yi - mi).powi(2) / (mi * mi * yi))
                    .sum::<f64>()
                    / n as f64
            }
            Family::Gamma => {
                let shape = gamma_ml_shape(y, mu)?;
                1.0 / shape
            }
        },
    };
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::DegenerateDispersion(format!(
            "estimated σ² = {sigma2}; residuals are all zero"
        )));
    }
    Ok(sigma2.sqrt())
}

/// Solves `ln ν − ψ(ν) = s`, `s = mean(y/μ − ln(y/μ) − 1)`, for the gamma shape ν.
fn gamma_ml_shape(y: &[f64], mu: &[f64]) -> Result<f64> {
    let n = y.len() as f64;
    let s = y
        .iter()
        .zip(mu)
        .map(|(&yi, &mi)| {
            let t = (yi - mi) / mi;
            t - t.ln_1p()
        })
        .sum::<f64>()
        / n;
    if !(s > 0.0) {
        return Err(Error::DegenerateDispersion(format!(
            "mean unit deviance is {s}; fitted means reproduce the data"
        )));
    }
    // f is strictly decreasing from +∞ to 0.
    let f = |nu: f64| special::ln_minus_digamma(nu) - s;
    let mut nu = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
    for _ in 0..200 {
        let fv = f(nu);
        if (n * fv).abs() < 1e-10 || (fv.abs() < 1e-15 * s) {
            return Ok(nu);
        }
        if fv > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        let slope = 1.0 / nu - special::trigamma(nu);
        let newton = nu - fv / slope;
        nu = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            2.0 * nu
        };
        if hi.is_finite() && hi - lo < 1e-15 * hi {
            return Ok(nu);
        }
    }
    Err(Error::Estimation(format!(
        "gamma shape equation did not converge (s = {s}, bracket [{lo}, {hi}])"
    )))
}

/// Quantities that IRLS recomputes from the current means.
struct WorkingState {
    dmu: Vec<f64>,
    weight: Vec<f64>,
    resid: Vec<f64>,
}

impl WorkingState {
    fn new(spec: &ModelSpec, mu: &[f64]) -> Self {
        let dmu: Vec<f64> = mu.iter().map(|&m| spec.link.dmu_deta(m)).collect();
        let weight = mu
            .iter()
            .zip(&dmu)
            .map(|(&m, &d)| d * d / spec.family.variance(m))
            .collect();
        let resid = spec.y.iter().zip(mu).map(|(y, m)| y - m).collect();
        Self { dmu, weight, resid }
    }

    fn factor(&self, spec: &ModelSpec) -> Result<Qr> {
        let sw: Vec<f64> = self.weight.iter().map(|w| w.sqrt()).collect();
        Qr::new_scaled(&spec.x, &sw)
    }

    /// Score `Xᵀ W Δ (y − μ)` with `Δ = diag(dη/dμ)`, and its natural scale.
    fn score_with_scale(&self, spec: &ModelSpec) -> (Vec<f64>, f64) {
        let terms: Vec<f64> = (0..spec.n())
            .map(|i| self.weight[i] * self.resid[i] / self.dmu[i])
            .collect();
        let mut scale = 0.0_f64;
        let score = (0..spec.k())
            .map(|j| {
                let col = spec.x.column(j);
                let mut abs = 0.0;
                let s = col
                    .iter()
                    .zip(&terms)
                    .map(|(x, t)| {
                        abs += (x * t).abs();
                        x * t
                    })
                    .sum();
                scale = scale.max(abs);
                s
            })
            .collect();
        (score, scale)
    }

    fn score(&self, spec: &ModelSpec) -> Vec<f64> {
        self.score_with_scale(spec).0
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Fits by IRLS with default options.
pub fn fit(spec: &ModelSpec) -> Result<FittedModel> {
    fit_with(spec, &FitOptions::default())
}

pub fn fit_with(spec: &ModelSpec, opts: &FitOptions) -> Result<FittedModel> {
    let link = spec.link;
    let family = spec.family;
    let mut mu = spec.y.clone();
    let mut eta: Vec<f64> = mu.iter().map(|&m| link.link(m)).collect();
    let mut beta: Option<Vec<f64>> = None;
    let mut dev = deviance(family, &spec.y, &mu);
    let mut last_score = f64::INFINITY;

    for iter in 1..=opts.max_iter {
        let state = WorkingState::new(spec, &mu);
        let qr = state.factor(spec)?;
        let sw: Vec<f64> = state.weight.iter().map(|w| w.sqrt()).collect();
        let z: Vec<f64> = (0..spec.n())
            .map(|i| sw[i] * (eta[i] + state.resid[i] / state.dmu[i]))
            .collect();
        let mut beta_new = qr.solve(&z);
        let mut eta_new = spec.x.mul_vec(&beta_new);
        let mut mu_new: Vec<f64> = eta_new.iter().map(|&e| link.inverse(e)).collect();

        let mut halvings = 0;
        while !mu_new.iter().all(|&m| valid_mean(m)) {
            if halvings == opts.max_halvings {
                return Err(Error::InvalidMean { iteration: iter });
            }
            halvings += 1;
            for i in 0..spec.n() {
                eta_new[i] = 0.5 * (eta[i] + eta_new[i]);
            }
            if let Some(b) = &beta {
                for (bn, bo) in beta_new.iter_mut().zip(b) {
                    *bn = 0.5 * (*bn + bo);
                }
            }
            mu_new = eta_new.iter().map(|&e| link.inverse(e)).collect();
        }
        if halvings > 0 {
            log::debug!("IRLS iteration {iter}: {halvings} step halvings");
        }

        let dev_new = deviance(family, &spec.y, &mu_new);
        let step_small = match &beta {
            Some(b) => {
                let max_step = beta_new
                    .iter()
                    .zip(b)
                    .fold(0.0_f64, |m, (a, c)| m.max((a - c).abs()));
                let rel_dev = (dev_new - dev).abs() / (dev_new.abs() + 0.1);
                rel_dev < opts.tol || max_step < opts.tol
            }
            None => false,
        };
        beta = Some(beta_new);
        eta = eta_new;
        mu = mu_new;
        dev = dev_new;

        if step_small {
            let (score, scale) = WorkingState::new(spec, &mu).score_with_scale(spec);
            last_score = max_abs(&score);
            if last_score <= (RELATIVE_SCORE_TOL * scale).max(SCORE_FLOOR) {
                return finish(spec, opts, beta.unwrap(), iter);
            }
        }
    }
    let last_beta = beta.unwrap_or_default();
    if last_score.is_infinite() && !last_beta.is_empty() {
        let state = WorkingState::new(spec, &mu);
        last_score = max_abs(&state.score(spec));
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        max_abs_score: last_score,
        last_beta,
    })
}

fn finish(
    spec: &ModelSpec,
    opts: &FitOptions,
    beta: Vec<f64>,
    iterations: usize,
) -> Result<FittedModel> {
    let eta = spec.x.mul_vec(&beta);
    let mu: Vec<f64> = eta.iter().map(|&e| spec.link.inverse(e)).collect();
    if !mu.iter().all(|&m| valid_mean(m)) {
        return Err(Error::InvalidMean {
            iteration: iterations,
        });
    }
    let state = WorkingState::new(spec, &mu);
    let qr = state.factor(spec)?;
    let leverage = qr.hat_diagonal();
    if let Some((index, &h)) = leverage
        .iter()
        .enumerate()
        .find(|(_, &h)| !(h > 0.0 && h < 1.0))
    {
        return Err(Error::LeverageDegenerate { index, leverage: h });
    }
    let sigma = estimate_sigma(spec.family, &spec.y, &mu, spec.k(), opts.dispersion)?;
    Ok(FittedModel {
        family: spec.family,
        link: spec.link,
        sigma,
        leverage,
        unscaled_covariance: qr.inverse_gram(),
        deviance: deviance(spec.family, &spec.y, &mu),
        max_abs_score: max_abs(&state.score(spec)),
        beta,
        mu,
        eta,
        y: spec.y.clone(),
        iterations,
        converged: true,
        dispersion_method: opts.dispersion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(rows: &[(f64, f64)]) -> Matrix {
        let rows: Vec<Vec<f64>> = rows.iter().map(|&(a, b)| vec![1.0, a, b]).collect();
        Matrix::from_rows(&rows).unwrap()
    }

    fn simulated(
        family: Family,
        link: Link,
        beta: &[f64],
        sigma: f64,
        n: usize,
        seed: u64,
    ) -> ModelSpec {
        let mut s = RngStream::new(seed, 0);
        let rows: Vec<(f64, f64)> = (0..n).map(|_| (s.uniform(), s.uniform())).collect();
        let x = design(&rows);
        let y = x
            .mul_vec(beta)
            .iter()
            .map(|&e| family.sample(&mut s, link.inverse(e), sigma).unwrap())
            .collect();
        ModelSpec::new(family, link, x, y).unwrap()
    }

    #[test]
    fn link_round_trips() {
        for link in [
            Link::Log,
            Link::Inverse,
            Link::InverseSquared,
            Link::Identity,
        ] {
            for &mu in &[0.049, 0.6, 1.0, 20.085, 403.4, 2.0e4] {
                let back = link.inverse(link.link(mu));
                assert!(((back - mu) / mu).abs() < 1e-12, "{link}: {mu} -> {back}");
            }
        }
        assert!(Link::Inverse.inverse(-1.0).is_nan());
        assert!(Link::Identity.inverse(0.0).is_nan());
    }

    #[test]
    fn link_derivative_matches_finite_difference() {
        for link in [
            Link::Log,
            Link::Inverse,
            Link::InverseSquared,
            Link::Identity,
        ] {
            let mu = 2.5;
            let eta = link.link(mu);
            let h = 1e-6 * eta.abs().max(1e-3);
            let fd = (link.inverse(eta + h) - link.inverse(eta - h)) / (2.0 * h);
            assert!(((fd - link.dmu_deta(mu)) / fd).abs() < 1e-7, "{link}");
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("gamma".parse::<Family>().unwrap(), Family::Gamma);
        assert_eq!(
            "invgauss".parse::<Family>().unwrap(),
            Family::InverseGaussian
        );
        assert_eq!("inverse2".parse::<Link>().unwrap(), Link::InverseSquared);
        assert!(matches!(
            "logit".parse::<Link>(),
            Err(Error::Unknown { what: "link", .. })
        ));
        for l in [
            Link::Log,
            Link::Inverse,
            Link::InverseSquared,
            Link::Identity,
        ] {
            assert_eq!(l.as_str().parse::<Link>().unwrap(), l);
        }
    }

    #[test]
    fn weights_closed_forms() {
        let mu = [0.5, 2.0, 40.0];
        let w = working_weights(Family::Gamma, Link::Log, &mu).unwrap();
        assert!(w.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let w = working_weights(Family::InverseGaussian, Link::Log, &mu).unwrap();
        for (wi, m) in w.iter().zip(mu) {
            assert!((wi - 1.0 / m).abs() < 1e-15);
        }
        let w = working_weights(Family::Gamma, Link::Inverse, &mu).unwrap();
        for (wi, m) in w.iter().zip(mu) {
            assert!((wi - m * m).abs() < 1e-12 * m * m);
        }
        assert!(working_weights(Family::Gamma, Link::Log, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn hat_diagonal_trace_and_intercept_only() {
        let x = Matrix::from_columns(&[vec![1.0; 10]]).unwrap();
        let h = hat_diagonal(&x, &[1.0; 10]).unwrap();
        assert!(h.iter().all(|&v| (v - 0.1).abs() < 1e-15));
        let spec = simulated(Family::Gamma, Link::Log, &[3.0, 2.0, 1.0], 0.1, 20, 4);
        let w: Vec<f64> = (0..20).map(|i| 0.5 + i as f64 / 7.0).collect();
        let h = hat_diagonal(spec.design(), &w).unwrap();
        assert!((h.iter().sum::<f64>() - 3.0).abs() < 1e-12);
        assert!(hat_diagonal(spec.design(), &[1.0; 3]).is_err());
    }

    #[test]
    fn intercept_only_gamma_fits_the_mean() {
        let y = vec![3.1, 0.7, 5.5, 2.2, 1.9, 4.0, 2.8, 0.9, 3.3, 6.1];
        let x = Matrix::from_columns(&[vec![1.0; 10]]).unwrap();
        let spec = ModelSpec::new(Family::Gamma, Link::Log, x, y.clone()).unwrap();
        let m = fit(&spec).unwrap();
        let ybar = y.iter().sum::<f64>() / 10.0;
        assert!(m.mu.iter().all(|&v| (v - ybar).abs() < 1e-10 * ybar));
        assert!(m.converged);
    }

    #[test]
    fn recovers_simulation_truth() {
        let beta = [3.0, 2.0, 1.0];
        let spec = simulated(Family::Gamma, Link::Log, &beta, 0.1, 30, 17);
        let m = fit(&spec).unwrap();
        let se = m.standard_errors();
        for j in 0..3 {
            assert!(
                (m.beta[j] - beta[j]).abs() < 3.0 * se[j],
                "β{j}: {} ± {}",
                m.beta[j],
                se[j]
            );
        }
        assert!(m.max_abs_score < 1e-8);
        assert!(m.iterations < 15, "{}", m.iterations);
    }

    #[test]
    fn fitted_invariants_across_families_and_links() {
        let cases = [
            (Family::Gamma, Link::Log, vec![3.0, 2.0, 1.0], 0.1),
            (Family::Gamma, Link::Inverse, vec![0.0025, 0.04, 0.01], 0.1),
            (
                Family::InverseGaussian,
                Link::Log,
                vec![3.0, 2.0, 1.0],
                0.02,
            ),
            (
                Family::InverseGaussian,
                Link::InverseSquared,
                vec![0.000006, 0.002, 0.001],
                0.02,
            ),
            (Family::Gamma, Link::Identity, vec![5.0, 2.0, 1.0], 0.2),
            (
                Family::InverseGaussian,
                Link::Log,
                vec![-3.0, 1.5, 1.0],
                0.5,
            ),
        ];
        for (i, (family, link, beta, sigma)) in cases.into_iter().enumerate() {
            let spec = simulated(family, link, &beta, sigma, 40, 100 + i as u64);
            let m = fit(&spec).unwrap_or_else(|e| panic!("{family}/{link}: {e}"));
            for (e, mu) in m.eta.iter().zip(&m.mu) {
                assert!((link.link(*mu) - e).abs() < 1e-10 * e.abs().max(1.0));
            }
            let xb = spec.design().mul_vec(&m.beta);
            for (a, b) in xb.iter().zip(&m.eta) {
                assert_eq!(a, b);
            }
            assert!(m.leverage.iter().all(|&h| h > 0.0 && h < 1.0));
            assert!((m.leverage.iter().sum::<f64>() - 3.0).abs() < 1e-8);
            assert!(
                m.max_abs_score < 1e-8,
                "{family}/{link}: {}",
                m.max_abs_score
            );

            // One more IRLS step from β̂ barely moves it.
            let state = WorkingState::new(&spec, &m.mu);
            let sw: Vec<f64> = state.weight.iter().map(|w| w.sqrt()).collect();
            let z: Vec<f64> = (0..40)
                .map(|r| sw[r] * (m.eta[r] + state.resid[r] / state.dmu[r]))
                .collect();
            let next = state.factor(&spec).unwrap().solve(&z);
            for (a, b) in next.iter().zip(&m.beta) {
                assert!((a - b).abs() < 1e-8, "{family}/{link}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn duplicated_column_fails_with_names() {
        let spec = simulated(Family::Gamma, Link::Log, &[3.0, 2.0, 1.0], 0.1, 20, 9);
        let x = spec.design();
        let dup = Matrix::from_columns(&[
            x.column(0).to_vec(),
            x.column(1).to_vec(),
            x.column(1).to_vec(),
        ])
        .unwrap();
        let bad = ModelSpec::new(Family::Gamma, Link::Log, dup, spec.response().to_vec()).unwrap();
        assert_eq!(
            fit(&bad).unwrap_err(),
            Error::SingularDesign {
                column: 2,
                collinear_with: 1
            }
        );
    }

    #[test]
    fn spec_rejects_bad_response() {
        let x = Matrix::from_columns(&[vec![1.0; 3]]).unwrap();
        assert!(matches!(
            ModelSpec::new(Family::Gamma, Link::Log, x.clone(), vec![1.0, 0.0, 2.0]),
            Err(Error::Domain {
                what: "response",
                ..
            })
        ));
        assert!(ModelSpec::new(Family::Gamma, Link::Log, x.clone(), vec![1.0, 2.0]).is_err());
        let square = Matrix::from_columns(&[vec![1.0; 1]]).unwrap();
        assert!(ModelSpec::new(Family::Gamma, Link::Log, square, vec![1.0]).is_err());
    }

    #[test]
    fn exhausted_budget_reports_last_iterate() {
        let spec = simulated(Family::Gamma, Link::Log, &[3.0, 2.0, 1.0], 0.1, 20, 2);
        let opts = FitOptions {
            max_iter: 1,
            ..FitOptions::default()
        };
        match fit_with(&spec, &opts) {
            Err(Error::NonConvergence {
                iterations,
                last_beta,
                ..
            }) => {
                assert_eq!(iterations, 1);
                assert_eq!(last_beta.len(), 3);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn ig_dispersion_closed_form_and_degenerate() {
        let y = [1.0, 2.0, 4.0];
        let mu = [1.5, 1.5, 3.0];
        let s = estimate_sigma(
            Family::InverseGaussian,
            &y,
            &mu,
            1,
            DispersionMethod::MaximumLikelihood,
        )
        .unwrap();
        let expect: f64 = (0.25 / (2.25 * 1.0) + 0.25 / (2.25 * 2.0) + 1.0 / (9.0 * 4.0)) / 3.0;
        assert!((s - expect.sqrt()).abs() < 1e-15);
        assert!(matches!(
            estimate_sigma(
                Family::InverseGaussian,
                &y,
                &y,
                1,
                DispersionMethod::MaximumLikelihood
            ),
            Err(Error::DegenerateDispersion(_))
        ));
        assert!(matches!(
            estimate_sigma(
                Family::Gamma,
                &y,
                &y,
                1,
                DispersionMethod::MaximumLikelihood
            ),
            Err(Error::DegenerateDispersion(_))
        ));
    }

    #[test]
    fn pearson_dispersion_closed_form() {
        let y = [1.0, 2.0, 4.0, 3.0];
        let mu = [1.5, 1.5, 3.0, 3.0];
        let s = estimate_sigma(Family::Gamma, &y, &mu, 2, DispersionMethod::Pearson).unwrap();
        let chi2 = 0.25 / 2.25 + 0.25 / 2.25 + 1.0 / 9.0;
        assert!((s - (chi2 / 2.0f64).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gamma_ml_dispersion_near_truth() {
        let p = GammaParams::new(1.0, 0.1).unwrap();
        let mut s = RngStream::new(77, 0);
        let y: Vec<f64> = (0..10_000).map(|_| s.gamma(&p)).collect();
        let mu = vec![1.0; 10_000];
        let sigma = estimate_sigma(
            Family::Gamma,
            &y,
            &mu,
            1,
            DispersionMethod::MaximumLikelihood,
        )
        .unwrap();
        assert!((sigma - 0.1).abs() < 0.005, "{sigma}");
    }

    #[test]
    fn gamma_ml_dispersion_maximizes_likelihood_on_grid() {
        let spec = simulated(Family::Gamma, Link::Log, &[3.0, 2.0, 1.0], 0.3, 25, 31);
        let opts = FitOptions {
            dispersion: DispersionMethod::MaximumLikelihood,
            ..FitOptions::default()
        };
        let m = fit_with(&spec, &opts).unwrap();
        let best = m.log_likelihood().unwrap();
        for step in -10..=10 {
            let s = m.sigma + step as f64 * 1e-4;
            let ll = log_likelihood(Family::Gamma, &m.y, &m.mu, s).unwrap();
            assert!(ll <= best + 1e-12, "σ = {s}: {ll} > {best}");
        }
    }

    #[test]
    fn ml_fit_is_a_local_maximum_on_grid() {
        for (family, sigma, seed) in [
            (Family::Gamma, 0.2, 5u64),
            (Family::InverseGaussian, 0.05, 6),
        ] {
            let spec = simulated(family, Link::Log, &[1.0, 0.5, -0.5], sigma, 15, seed);
            let opts = FitOptions {
                dispersion: DispersionMethod::MaximumLikelihood,
                ..FitOptions::default()
            };
            let m = fit_with(&spec, &opts).unwrap();
            let best = m.log_likelihood().unwrap();
            let x = spec.design();
            // 5⁴ grid over (β₀, β₁, β₂, σ).
            let offsets = [-2e-3, -1e-3, 0.0, 1e-3, 2e-3];
            for &a in &offsets {
                for &b in &offsets {
                    for &c in &offsets {
                        let beta = [m.beta[0] + a, m.beta[1] + b, m.beta[2] + c];
                        let mu: Vec<f64> = x.mul_vec(&beta).iter().map(|e| e.exp()).collect();
                        for &d in &offsets {
                            let ll = log_likelihood(family, &m.y, &mu, m.sigma + d).unwrap();
                            assert!(ll <= best + 1e-9, "{family}: {ll} > {best}");
                        }
                    }
                }
            }
        }
    }
}
