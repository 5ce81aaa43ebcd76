//! The six residual kinds computed from a fitted model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{Family, FittedModel};
use crate::special;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    Quantile,
    AdjustedQuantile,
    DevianceStd,
    PearsonStd,
    Williams,
    AnscombeStd,
}

impl ResidualKind {
    pub const ALL: [ResidualKind; 6] = [
        ResidualKind::Quantile,
        ResidualKind::AdjustedQuantile,
        ResidualKind::DevianceStd,
        ResidualKind::PearsonStd,
        ResidualKind::Williams,
        ResidualKind::AnscombeStd,
    ];

    /// The five kinds that are scaled by the leverage.
    pub const STANDARDIZED: [ResidualKind; 5] = [
        ResidualKind::AdjustedQuantile,
        ResidualKind::DevianceStd,
        ResidualKind::PearsonStd,
        ResidualKind::Williams,
        ResidualKind::AnscombeStd,
    ];

    /// Short column label used in tables and plots.
    pub fn label(self) -> &'static str {
        match self {
            ResidualKind::Quantile => "r_qu",
            ResidualKind::AdjustedQuantile => "r*_qu",
            ResidualKind::DevianceStd => "r_dev",
            ResidualKind::PearsonStd => "r_pea",
            ResidualKind::Williams => "r_wil",
            ResidualKind::AnscombeStd => "r_ans",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ResidualKind::Quantile => "quantile",
            ResidualKind::AdjustedQuantile => "adjusted_quantile",
            ResidualKind::DevianceStd => "deviance",
            ResidualKind::PearsonStd => "pearson",
            ResidualKind::Williams => "williams",
            ResidualKind::AnscombeStd => "anscombe",
        }
    }

    /// Parses a comma-separated list; `all` expands to every kind.
    pub fn parse_list(s: &str) -> Result<Vec<ResidualKind>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("all") {
                out.extend(Self::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        out.sort();
        out.dedup();
        if out.is_empty() {
            return Err(Error::Unknown {
                what: "residual kind list",
                value: s.to_string(),
            });
        }
        Ok(out)
    }
}

impl fmt::Display for ResidualKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ResidualKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let kind = match key.as_str() {
            "quantile" | "qu" | "r_qu" => ResidualKind::Quantile,
            "adjusted_quantile" | "adjusted" | "aqu" | "r*_qu" | "r*qu" => {
                ResidualKind::AdjustedQuantile
            }
            "deviance" | "deviance_std" | "dev" | "r_dev" => ResidualKind::DevianceStd,
            "pearson" | "pearson_std" | "pea" | "r_pea" => ResidualKind::PearsonStd,
            "williams" | "wil" | "r_wil" => ResidualKind::Williams,
            "anscombe" | "anscombe_std" | "ans" | "r_ans" => ResidualKind::AnscombeStd,
            _ => {
                return Err(Error::Unknown {
                    what: "residual kind",
                    value: s.to_string(),
                })
            }
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSet<'m> {
    pub kind: ResidualKind,
    pub values: Vec<f64>,
    pub model: &'m FittedModel,
}

impl ResidualSet<'_> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn one_minus_h(model: &FittedModel) -> Result<Vec<f64>> {
    model
        .leverage
        .iter()
        .enumerate()
        .map(|(index, &h)| {
            if h < 1.0 && h.is_finite() {
                Ok(1.0 - h)
            } else {
                Err(Error::LeverageDegenerate { index, leverage: h })
            }
        })
        .collect()
}

fn finish(kind: ResidualKind, model: &FittedModel, values: Vec<f64>) -> Result<ResidualSet<'_>> {
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain {
            what: "residual",
            value: bad,
        });
    }
    Ok(ResidualSet {
        kind,
        values,
        model,
    })
}

/// Φ⁻¹ of a CDF value supplied as `(F, 1 − F)`, evaluated on the smaller
/// tail and clamped so the result stays finite.
pub fn normal_score(lower: f64, upper: f64) -> f64 {
    if lower <= upper {
        special::phi_inv(lower.max(f64::MIN_POSITIVE))
    } else {
        -special::phi_inv(upper.max(f64::MIN_POSITIVE))
    }
}

pub fn quantile_residual(model: &FittedModel) -> Result<ResidualSet<'_>> {
    let values = model
        .y
        .iter()
        .zip(&model.mu)
        .map(|(&y, &mu)| {
            let (lower, upper) = model.family.cdf_pair(y, mu, model.sigma)?;
            Ok(normal_score(lower, upper))
        })
        .collect::<Result<Vec<_>>>()?;
    finish(ResidualKind::Quantile, model, values)
}

pub fn adjusted_quantile_residual(model: &FittedModel) -> Result<ResidualSet<'_>> {
    let scale = one_minus_h(model)?;
    let raw = quantile_residual(model)?.values;
    let values = raw.iter().zip(&scale).map(|(r, s)| r / s.sqrt()).collect();
    finish(ResidualKind::AdjustedQuantile, model, values)
}

fn signed_root_deviance(family: Family, y: f64, mu: f64) -> f64 {
    match family {
        Family::InverseGaussian => (y - mu) / (mu * y.sqrt()),
        Family::Gamma => (y - mu).signum() * family.unit_deviance(y, mu).sqrt(),
    }
}

fn pearson_unscaled(model: &FittedModel) -> Vec<f64> {
    model
        .y
        .iter()
        .zip(&model.mu)
        .map(|(&y, &mu)| (y - mu) / model.family.variance(mu).sqrt())
        .collect()
}

pub fn deviance_residual_std(model: &FittedModel) -> Result<ResidualSet<'_>> {
    let scale = one_minus_h(model)?;
    let values = model
        .y
        .iter()
        .zip(&model.mu)
        .zip(&scale)
        .map(|((&y, &mu), s)| signed_root_deviance(model.family, y, mu) / (model.sigma * s.sqrt()))
        .collect();
    finish(ResidualKind::DevianceStd, model, values)
}

pub fn pearson_residual_std(model: &FittedModel) -> Result<ResidualSet<'_>> {
    let scale = one_minus_h(model)?;
    let values = pearson_unscaled(model)
        .iter()
        .zip(&scale)
        .map(|(p, s)| p / (model.sigma * s.sqrt()))
        .collect();
    finish(ResidualKind::PearsonStd, model, values)
}

pub fn williams_residual(model: &FittedModel) -> Result<ResidualSet<'_>> {
    let dev = deviance_residual_std(model)?.values;
    let pea = pearson_residual_std(model)?.values;
    let values = model
        .leverage
        .iter()
        .zip(dev.iter().zip(&pea))
        .zip(model.y.iter().zip(&model.mu))
        .map(|((&h, (&d, &p)), (&y, &mu))| {
            let sign = if y > mu {
                1.0
            } else if y < mu {
                -1.0
            } else {
                0.0
            };
            sign * ((1.0 - h) * d * d + h * p * p).sqrt()
        })
        .collect();
    finish(ResidualKind::Williams, model, values)
}

pub fn anscombe_residual_std(model: &FittedModel) -> Result<ResidualSet<'_>> {
    let scale = one_minus_h(model)?;
    let values = model
        .y
        .iter()
        .zip(&model.mu)
        .zip(&scale)
        .map(|((&y, &mu), s)| {
            let core = match model.family {
                Family::Gamma => {
                    let c = mu.cbrt();
                    3.0 * (y.cbrt() - c) / c
                }
                Family::InverseGaussian => (y / mu).ln() / mu.sqrt(),
            };
            core / (model.sigma * s.sqrt())
        })
        .collect();
    finish(ResidualKind::AnscombeStd, model, values)
}

pub fn compute(model: &FittedModel, kind: ResidualKind) -> Result<ResidualSet<'_>> {
    match kind {
        ResidualKind::Quantile => quantile_residual(model),
        ResidualKind::AdjustedQuantile => adjusted_quantile_residual(model),
        ResidualKind::DevianceStd => deviance_residual_std(model),
        ResidualKind::PearsonStd => pearson_residual_std(model),
        ResidualKind::Williams => williams_residual(model),
        ResidualKind::AnscombeStd => anscombe_residual_std(model),
    }
}
