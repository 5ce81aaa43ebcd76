//! Distributional summaries of residual samples and simulated envelopes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{self, FitOptions, FittedModel, ModelSpec};
use crate::residuals::{self, ResidualKind};
use crate::sampling::RngStream;
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    /// Unbiased (n − 1 denominator).
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub n: usize,
}

/// Sample mean, unbiased variance, and moment-ratio skewness and excess kurtosis.
pub fn moment_summary(values: &[f64]) -> Result<MomentSummary> {
    let n = values.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain {
            what: "moment_summary input",
            value: bad,
        });
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    if m2 == 0.0 {
        return Err(Error::DegenerateSample);
    }
    let variance = m2 / (nf - 1.0);
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    Ok(MomentSummary {
        mean,
        variance,
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        n,
    })
}

/// Anderson–Darling A² of `values` against the standard normal (no fitted parameters).
pub fn anderson_darling(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain {
            what: "anderson_darling input",
            value: bad,
        });
    }
    let mut z = values.to_vec();
    z.sort_by(f64::total_cmp);
    let n = z.len();
    let mut acc = 0.0;
    for i in 0..n {
        let weight = (2 * i + 1) as f64;
        acc += weight * (special::ln_phi(z[i]) + special::ln_phi(-z[n - 1 - i]));
    }
    Ok(-(n as f64) - acc / n as f64)
}

/// Kolmogorov–Smirnov distance between the empirical law of `values` and Uniform(0, 1).
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut u = values.to_vec();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let above = (i + 1) as f64 / n - x;
        let below = x - i as f64 / n;
        d.max(above).max(below)
    })
}

/// Linear-interpolation sample quantile of sorted data (the usual "type 7").
pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeScale {
    /// Signed residuals against normal order-statistic positions.
    #[default]
    Normal,
    /// Absolute residuals against half-normal positions.
    HalfNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeOptions {
    pub n_sim: usize,
    pub band: f64,
    pub scale: EnvelopeScale,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            n_sim: 100,
            band: 0.95,
            scale: EnvelopeScale::Normal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBand {
    /// 1-based rank.
    pub sorted_index: usize,
    pub lower: f64,
    pub upper: f64,
    pub observed: f64,
    pub expected_quantile: f64,
}

impl EnvelopeBand {
    pub fn contains_observed(&self) -> bool {
        self.lower <= self.observed && self.observed <= self.upper
    }
}

/// Plotting positions for ranks `1..=n`.
pub fn expected_positions(n: usize, scale: EnvelopeScale) -> Vec<f64> {
    let nf = n as f64;
    (1..=n)
        .map(|i| {
            let i = i as f64;
            match scale {
                EnvelopeScale::Normal => special::phi_inv((i - 0.375) / (nf + 0.25)),
                EnvelopeScale::HalfNormal => special::phi_inv((nf + i - 0.125) / (2.0 * nf + 0.5)),
            }
        })
        .collect()
}

fn sorted_for_plot(values: &[f64], scale: EnvelopeScale) -> Vec<f64> {
    let mut v: Vec<f64> = match scale {
        EnvelopeScale::Normal => values.to_vec(),
        EnvelopeScale::HalfNormal => values.iter().map(|x| x.abs()).collect(),
    };
    v.sort_by(f64::total_cmp);
    v
}

/// Simulated envelope for the sorted `kind` residuals of `fitted`.
///
/// Each replicate draws a response from the fitted law, refits `spec`'s
/// design and link, and contributes its sorted residuals. Replicate `j` uses
/// `stream.substream(j)`, so the band does not depend on the thread count.
pub fn simulated_envelope(
    spec: &ModelSpec,
    fitted: &FittedModel,
    kind: ResidualKind,
    opts: &EnvelopeOptions,
    stream: &RngStream,
) -> Result<Vec<EnvelopeBand>> {
    if opts.n_sim < 19 {
        return Err(Error::InsufficientData {
            needed: 19,
            got: opts.n_sim,
        });
    }
    if !(opts.band > 0.0 && opts.band < 1.0) {
        return Err(Error::Domain {
            what: "envelope band",
            value: opts.band,
        });
    }
    let n = spec.n();
    let observed = sorted_for_plot(&residuals::compute(fitted, kind)?.values, opts.scale);
    let fit_opts = FitOptions {
        dispersion: fitted.dispersion_method,
        ..FitOptions::default()
    };

    let replicates: Vec<Option<Vec<f64>>> = (0..opts.n_sim as u64)
        .into_par_iter()
        .map(|j| {
            let mut s = stream.substream(j);
            let outcome = (|| -> Result<Vec<f64>> {
                let y = fitted
                    .mu
                    .iter()
                    .map(|&mu| fitted.family.sample(&mut s, mu, fitted.sigma))
                    .collect::<Result<Vec<_>>>()?;
                let refit = glm::fit_with(&spec.with_response(y)?, &fit_opts)?;
                Ok(sorted_for_plot(
                    &residuals::compute(&refit, kind)?.values,
                    opts.scale,
                ))
            })();
            match outcome {
                Ok(v) => Some(v),
                Err(e) => {
                    log::warn!("envelope replicate {j} dropped: {e}");
                    None
                }
            }
        })
        .collect();

    let kept: Vec<Vec<f64>> = replicates.into_iter().flatten().collect();
    let dropped = opts.n_sim - kept.len();
    if dropped * 5 > opts.n_sim {
        return Err(Error::Envelope {
            dropped,
            total: opts.n_sim,
        });
    }
    let positions = expected_positions(n, opts.scale);
    let lo_p = (1.0 - opts.band) / 2.0;
    let hi_p = (1.0 + opts.band) / 2.0;
    Ok((0..n)
        .map(|r| {
            let mut column: Vec<f64> = kept.iter().map(|v| v[r]).collect();
            column.sort_by(f64::total_cmp);
            EnvelopeBand {
                sorted_index: r + 1,
                lower: sorted_quantile(&column, lo_p),
                upper: sorted_quantile(&column, hi_p),
                observed: observed[r],
                expected_quantile: positions[r],
            }
        })
        .collect())
}

/// Fraction of ranks whose observed residual lies inside the band.
pub fn envelope_coverage(bands: &[EnvelopeBand]) -> f64 {
    if bands.is_empty() {
        return 0.0;
    }
    bands.iter().filter(|b| b.contains_observed()).count() as f64 / bands.len() as f64
}
