//! Monte Carlo scenarios: a fixed design, repeated responses, refits, and
//! per-observation summaries of each residual kind across replications.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{anderson_darling, moment_summary, sorted_quantile};
use crate::error::{Error, Result};
use crate::glm::{self, Family, FitOptions, FittedModel, Link, ModelSpec};
use crate::linalg::Matrix;
use crate::residuals::{self, ResidualKind};
use crate::sampling::RngStream;

/// Stream id reserved for covariate draws, so the design never depends on
/// how many replications are requested.
pub const COVARIATE_STREAM: u64 = u64::MAX;

/// Law of one design column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CovariateGen {
    Intercept,
    Uniform {
        min: f64,
        max: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    Gamma {
        mu: f64,
        sigma: f64,
    },
    Invgauss {
        mu: f64,
        sigma: f64,
    },
    /// Explicit values, one per observation.
    Fixed {
        values: Vec<f64>,
    },
}

impl CovariateGen {
    pub fn unit_uniform() -> Self {
        CovariateGen::Uniform { min: 0.0, max: 1.0 }
    }

    fn draw(&self, n: usize, stream: &mut RngStream) -> Result<Vec<f64>> {
        use crate::distributions::{GammaParams, InvGaussParams};
        match self {
            CovariateGen::Intercept => Ok(vec![1.0; n]),
            CovariateGen::Uniform { min, max } => {
                if !(min < max) || !min.is_finite() || !max.is_finite() {
                    return Err(Error::InvalidSpec(format!("uniform bounds ({min}, {max})")));
                }
                Ok((0..n)
                    .map(|_| min + (max - min) * stream.uniform())
                    .collect())
            }
            CovariateGen::Normal { mean, sd } => {
                (0..n).map(|_| stream.normal(*mean, *sd)).collect()
            }
            CovariateGen::Gamma { mu, sigma } => {
                let p = GammaParams::new(*mu, *sigma)?;
                Ok((0..n).map(|_| stream.gamma(&p)).collect())
            }
            CovariateGen::Invgauss { mu, sigma } => {
                let p = InvGaussParams::new(*mu, *sigma)?;
                Ok((0..n).map(|_| stream.inverse_gaussian(&p)).collect())
            }
            CovariateGen::Fixed { values } => {
                if values.len() != n {
                    return Err(Error::InvalidSpec(format!(
                        "fixed covariate has {} values for n = {n}",
                        values.len()
                    )));
                }
                Ok(values.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub family: Family,
    pub link: Link,
    pub beta: Vec<f64>,
    /// One generator per design column, intercept included.
    pub covariates: Vec<CovariateGen>,
    pub sigma: f64,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.beta.len() != self.covariates.len() {
            return Err(Error::InvalidSpec(format!(
                "scenario {}: {} coefficients for {} covariate columns",
                self.name,
                self.beta.len(),
                self.covariates.len()
            )));
        }
        if self.n <= self.beta.len() {
            return Err(Error::InsufficientData {
                needed: self.beta.len() + 1,
                got: self.n,
            });
        }
        if self.replications == 0 {
            return Err(Error::InvalidSpec(format!(
                "scenario {}: zero replications",
                self.name
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Domain {
                what: "scenario dispersion",
                value: self.sigma,
            });
        }
        Ok(())
    }

    /// The design matrix, drawn once from the covariate stream.
    pub fn design(&self) -> Result<Matrix> {
        self.validate()?;
        let mut stream = RngStream::new(self.seed, COVARIATE_STREAM);
        let columns = self
            .covariates
            .iter()
            .map(|g| g.draw(self.n, &mut stream))
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_columns(&columns)
    }

    /// True means `g⁻¹(xᵢᵀβ)` for the scenario design.
    pub fn true_means(&self, design: &Matrix) -> Result<Vec<f64>> {
        let mu: Vec<f64> = design
            .mul_vec(&self.beta)
            .iter()
            .map(|&e| self.link.inverse(e))
            .collect();
        if let Some(&bad) = mu.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::Domain {
                what: "true mean",
                value: bad,
            });
        }
        Ok(mu)
    }
}

/// Fixed covariates of the n = 15 uniform-design built-ins.
///
/// The rows reproduce the tabulated true means of the I-a reference table
/// under β = (3, 2, 1) and the log link, so per-observation summaries can be
/// compared row by row.
pub const REFERENCE_DESIGN_X1: [f64; 15] = [
    0.451356, 0.435748, 0.839429, 0.522965, 0.666974, 0.852008, 0.101752, 0.523026, 0.08206,
    0.357439, 0.213135, 0.404759, 0.840973, 0.52077, 0.912869,
];
pub const REFERENCE_DESIGN_X2: [f64; 15] = [
    0.312994, 0.73673, 0.695044, 0.704076, 0.54607, 0.597701, 0.318258, 0.336737, 0.711903,
    0.236942, 0.460004, 0.930209, 0.587308, 0.600261, 0.516218,
];

pub const BUILTIN_NAMES: [&str; 14] = [
    "I-a", "II-a", "III-a", "IV-a", "V-a", "VI-a", "VII-a", "I-b", "II-b", "III-b", "IV-b", "V-b",
    "VI-b", "VII-b",
];

/// One built-in scenario by name (e.g. `"I-a"`) and sample size.
pub fn builtin_scenario(name: &str, n: usize) -> Result<Scenario> {
    let unknown = || Error::Unknown {
        what: "scenario",
        value: name.to_string(),
    };
    let (roman, suffix) = name.rsplit_once('-').ok_or_else(unknown)?;
    let family = match suffix {
        "a" => Family::Gamma,
        "b" => Family::InverseGaussian,
        _ => return Err(unknown()),
    };
    let gamma = family == Family::Gamma;
    let base = vec![3.0, 2.0, 1.0];
    let (link, beta, sigma, laws) = match roman {
        "I" => (
            Link::Log,
            base,
            if gamma { 0.1 } else { 0.02 },
            Laws::Uniform,
        ),
        "II" => (
            Link::Log,
            base,
            if gamma { 0.05 } else { 0.01 },
            Laws::Uniform,
        ),
        "III" => (
            Link::Log,
            base,
            if gamma { 0.5 } else { 0.03 },
            Laws::Uniform,
        ),
        "IV" => (
            Link::Log,
            vec![-3.0, 1.5, 1.0],
            if gamma { 0.1 } else { 0.5 },
            Laws::Uniform,
        ),
        "V" => (
            Link::Log,
            base,
            if gamma { 0.1 } else { 0.02 },
            Laws::NormalInvGauss,
        ),
        "VI" => (
            Link::Log,
            base,
            if gamma { 0.1 } else { 0.02 },
            Laws::NormalGamma,
        ),
        "VII" if gamma => (Link::Inverse, vec![0.0025, 0.04, 0.01], 0.1, Laws::Uniform),
        "VII" => (
            Link::InverseSquared,
            vec![0.000006, 0.002, 0.001],
            0.02,
            Laws::Uniform,
        ),
        _ => return Err(unknown()),
    };
    let (x1, x2) = match laws {
        Laws::Uniform if n == REFERENCE_DESIGN_X1.len() => (
            CovariateGen::Fixed {
                values: REFERENCE_DESIGN_X1.to_vec(),
            },
            CovariateGen::Fixed {
                values: REFERENCE_DESIGN_X2.to_vec(),
            },
        ),
        Laws::Uniform => (CovariateGen::unit_uniform(), CovariateGen::unit_uniform()),
        Laws::NormalInvGauss => (
            CovariateGen::Normal {
                mean: 0.5,
                sd: 0.25,
            },
            CovariateGen::Invgauss {
                mu: 0.4,
                sigma: 2.0,
            },
        ),
        Laws::NormalGamma => (
            CovariateGen::Normal {
                mean: 0.5,
                sd: 0.25,
            },
            CovariateGen::Gamma {
                mu: 0.4,
                sigma: 1.0,
            },
        ),
    };
    Ok(Scenario {
        name: name.to_string(),
        family,
        link,
        beta,
        covariates: vec![CovariateGen::Intercept, x1, x2],
        sigma,
        n,
        replications: 5000,
        seed: 0,
    })
}

enum Laws {
    Uniform,
    NormalInvGauss,
    NormalGamma,
}

/// All fourteen built-ins at n = 15 and n = 50.
pub fn builtin_scenarios() -> Vec<Scenario> {
    [15, 50]
        .into_iter()
        .flat_map(|n| {
            BUILTIN_NAMES
                .iter()
                .map(move |name| builtin_scenario(name, n).expect("built-in"))
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Worker threads; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
    /// Compute residuals at the true (β, σ) instead of refitting.
    pub at_truth: bool,
    /// Stop starting new replication chunks after this long.
    pub time_budget: Option<Duration>,
    pub fit: FitOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ad: f64,
}

impl ReplicationSummary {
    fn from_values(values: &[f64]) -> Result<Self> {
        let m = moment_summary(values)?;
        Ok(Self {
            mean: m.mean,
            variance: m.variance,
            skewness: m.skewness,
            excess_kurtosis: m.excess_kurtosis,
            ad: anderson_darling(values)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRow {
    /// 1-based.
    pub index: usize,
    pub mu: f64,
    /// Aligned with [`ScenarioReport::kinds`].
    pub stats: Vec<ReplicationSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub sd: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

/// Mean and SD across observations of each per-observation statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub kind: ResidualKind,
    pub mean: Spread,
    pub variance: Spread,
    pub skewness: Spread,
    pub excess_kurtosis: Spread,
    pub ad: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub family: Family,
    pub link: Link,
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
    pub replications_requested: usize,
    pub replications_run: usize,
    pub failures: usize,
    /// The time budget ran out before all replications were run.
    pub truncated: bool,
    pub at_truth: bool,
    pub kinds: Vec<ResidualKind>,
    pub observations: Vec<ObservationRow>,
    pub summary: Vec<KindSummary>,
    /// FNV-1a digest of the design matrix bits.
    pub design_digest: u64,
}

impl ScenarioReport {
    pub fn summary_for(&self, kind: ResidualKind) -> Option<&KindSummary> {
        self.summary.iter().find(|s| s.kind == kind)
    }

    pub fn stat(&self, observation: usize, kind: ResidualKind) -> Option<&ReplicationSummary> {
        let k = self.kinds.iter().position(|&x| x == kind)?;
        self.observations.get(observation).map(|row| &row.stats[k])
    }

    /// Tab-separated table: one row per observation, then `Mean` and `SD` rows.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("i\tmu");
        for k in &self.kinds {
            for stat in ["mean", "var", "skew", "kurt", "AD"] {
                out.push_str(&format!("\t{}_{stat}", k.label()));
            }
        }
        out.push('\n');
        for row in &self.observations {
            out.push_str(&format!("{}\t{:.3}", row.index, row.mu));
            for s in &row.stats {
                for v in [s.mean, s.variance, s.skewness, s.excess_kurtosis, s.ad] {
                    out.push_str(&format!("\t{v:.3}"));
                }
            }
            out.push('\n');
        }
        for (label, pick) in [("Mean", 0), ("SD", 1)] {
            out.push_str(label);
            out.push('\t');
            for s in &self.summary {
                for sp in [s.mean, s.variance, s.skewness, s.excess_kurtosis, s.ad] {
                    let v = if pick == 0 { sp.mean } else { sp.sd };
                    out.push_str(&format!("\t{v:.3}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

fn digest(m: &Matrix) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in m.as_slice() {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

const CHUNK: usize = 500;

/// Runs the scenario and summarizes each requested residual kind per observation.
pub fn run_scenario(
    s: &Scenario,
    kinds: &[ResidualKind],
    opts: &RunOptions,
) -> Result<ScenarioReport> {
    match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?
            .install(|| run_inner(s, kinds, opts)),
        None => run_inner(s, kinds, opts),
    }
}

fn run_inner(s: &Scenario, kinds: &[ResidualKind], opts: &RunOptions) -> Result<ScenarioReport> {
    if kinds.is_empty() {
        return Err(Error::InvalidSpec("no residual kinds requested".into()));
    }
    let design = s.design()?;
    let mu_true = s.true_means(&design)?;
    let template = ModelSpec::new(s.family, s.link, design.clone(), mu_true.clone())?;
    let truth = if opts.at_truth {
        Some(FittedModel::from_parameters(&template, &s.beta, s.sigma)?)
    } else {
        None
    };

    let one = |r: u64| -> Result<Vec<Vec<f64>>> {
        let mut stream = RngStream::new(s.seed, r);
        let y = mu_true
            .iter()
            .map(|&m| s.family.sample(&mut stream, m, s.sigma))
            .collect::<Result<Vec<_>>>()?;
        let model = match &truth {
            Some(t) => FittedModel { y, ..t.clone() },
            None => glm::fit_with(&template.with_response(y)?, &opts.fit)?,
        };
        kinds
            .iter()
            .map(|&k| residuals::compute(&model, k).map(|set| set.values))
            .collect()
    };

    let started = Instant::now();
    let mut results: Vec<Option<Vec<Vec<f64>>>> = Vec::with_capacity(s.replications);
    let mut truncated = false;
    while results.len() < s.replications {
        if let Some(budget) = opts.time_budget {
            if started.elapsed() > budget {
                truncated = true;
                log::warn!(
                    "scenario {}: time budget exhausted after {} of {} replications",
                    s.name,
                    results.len(),
                    s.replications
                );
                break;
            }
        }
        let lo = results.len();
        let hi = (lo + CHUNK).min(s.replications);
        let chunk: Vec<Option<Vec<Vec<f64>>>> = (lo as u64..hi as u64)
            .into_par_iter()
            .map(|r| match one(r) {
                Ok(v) => Some(v),
                Err(e) => {
                    log::debug!("scenario {} replication {r}: {e}", s.name);
                    None
                }
            })
            .collect();
        results.extend(chunk);
    }

    let run = results.len();
    let ok: Vec<&Vec<Vec<f64>>> = results.iter().flatten().collect();
    let failures = run - ok.len();
    if ok.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: ok.len(),
        });
    }
    if failures * 20 > run {
        return Err(Error::ScenarioFailures {
            name: s.name.clone(),
            failures,
            replications: run,
        });
    }

    let cells: Vec<(usize, usize)> = (0..s.n)
        .flat_map(|i| (0..kinds.len()).map(move |k| (i, k)))
        .collect();
    let stats = cells
        .par_iter()
        .map(|&(i, k)| {
            let values: Vec<f64> = ok.iter().map(|rep| rep[k][i]).collect();
            ReplicationSummary::from_values(&values)
        })
        .collect::<Result<Vec<_>>>()?;
    let observations: Vec<ObservationRow> = (0..s.n)
        .map(|i| ObservationRow {
            index: i + 1,
            mu: mu_true[i],
            stats: stats[i * kinds.len()..(i + 1) * kinds.len()].to_vec(),
        })
        .collect();
    let summary = kinds
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let col = |f: fn(&ReplicationSummary) -> f64| {
                Spread::of(
                    &observations
                        .iter()
                        .map(|o| f(&o.stats[k]))
                        .collect::<Vec<_>>(),
                )
            };
            KindSummary {
                kind,
                mean: col(|s| s.mean),
                variance: col(|s| s.variance),
                skewness: col(|s| s.skewness),
                excess_kurtosis: col(|s| s.excess_kurtosis),
                ad: col(|s| s.ad),
            }
        })
        .collect();

    Ok(ScenarioReport {
        scenario: s.name.clone(),
        family: s.family,
        link: s.link,
        n: s.n,
        sigma: s.sigma,
        seed: s.seed,
        replications_requested: s.replications,
        replications_run: run,
        failures,
        truncated,
        at_truth: opts.at_truth,
        kinds: kinds.to_vec(),
        observations,
        summary,
        design_digest: digest(&design),
    })
}

/// Distribution of the per-observation AD statistic for one kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdRanking {
    pub kind: ResidualKind,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// AD distribution per kind, ordered by mean AD ascending.
pub fn compare_report(report: &ScenarioReport) -> Vec<AdRanking> {
    let mut rows: Vec<AdRanking> = report
        .kinds
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let mut ad: Vec<f64> = report.observations.iter().map(|o| o.stats[k].ad).collect();
            ad.sort_by(f64::total_cmp);
            let spread = Spread::of(&ad);
            AdRanking {
                kind,
                mean: spread.mean,
                sd: spread.sd,
                min: ad[0],
                q1: sorted_quantile(&ad, 0.25),
                median: sorted_quantile(&ad, 0.5),
                q3: sorted_quantile(&ad, 0.75),
                max: ad[ad.len() - 1],
            }
        })
        .collect();
    rows.sort_by(|a, b| a.mean.total_cmp(&b.mean));
    rows
}

pub fn ranking_tsv(rows: &[AdRanking]) -> String {
    let mut out = String::from("kind\tmean\tsd\tmin\tq1\tmedian\tq3\tmax\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\n",
            r.kind.label(),
            r.mean,
            r.sd,
            r.min,
            r.q1,
            r.median,
            r.q3,
            r.max
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(name: &str, n: usize, reps: usize) -> Scenario {
        Scenario {
            replications: reps,
            ..builtin_scenario(name, n).unwrap()
        }
    }

    #[test]
    fn builtins_cover_both_tables() {
        let all = builtin_scenarios();
        assert_eq!(all.len(), 28);
        let i_a = builtin_scenario("I-a", 50).unwrap();
        assert_eq!(i_a.family, Family::Gamma);
        assert_eq!(i_a.link, Link::Log);
        assert_eq!(i_a.beta, vec![3.0, 2.0, 1.0]);
        assert_eq!(i_a.sigma, 0.1);
        assert_eq!(i_a.covariates[1], CovariateGen::unit_uniform());
        let v_b = builtin_scenario("V-b", 15).unwrap();
        assert_eq!(v_b.family, Family::InverseGaussian);
        assert_eq!(v_b.sigma, 0.02);
        assert_eq!(
            v_b.covariates[1],
            CovariateGen::Normal {
                mean: 0.5,
                sd: 0.25
            }
        );
        assert_eq!(
            v_b.covariates[2],
            CovariateGen::Invgauss {
                mu: 0.4,
                sigma: 2.0
            }
        );
        let vii_b = builtin_scenario("VII-b", 50).unwrap();
        assert_eq!(vii_b.link, Link::InverseSquared);
        assert_eq!(vii_b.beta, vec![0.000006, 0.002, 0.001]);
        assert!(builtin_scenario("VIII-a", 15).is_err());
        assert!(builtin_scenario("I-c", 15).is_err());
    }

    #[test]
    fn mean_ranges_follow_coefficients() {
        let s = builtin_scenario("IV-a", 50).unwrap();
        let mu = s.true_means(&s.design().unwrap()).unwrap();
        assert!(mu
            .iter()
            .all(|&m| m > (-3.0f64).exp() && m < (-0.5f64).exp()));
        let s = builtin_scenario("I-b", 50).unwrap();
        let mu = s.true_means(&s.design().unwrap()).unwrap();
        assert!(mu.iter().all(|&m| m > 20.085 && m < 403.43));
    }

    #[test]
    fn reference_design_reproduces_tabulated_means() {
        let expected = [
            67.742, 100.306, 215.703, 115.585, 131.633, 200.681, 33.844, 80.061, 48.232, 52.030,
            48.729, 114.403, 194.271, 103.731, 208.921,
        ];
        let s = builtin_scenario("I-a", 15).unwrap();
        let mu = s.true_means(&s.design().unwrap()).unwrap();
        for (m, e) in mu.iter().zip(expected) {
            assert!((m - e).abs() < 6e-4, "{m} vs {e}");
        }
    }

    #[test]
    fn design_ignores_replication_count() {
        let a = small("V-a", 50, 10).design().unwrap();
        let b = small("V-a", 50, 5000).design().unwrap();
        assert_eq!(a, b);
        let mut c = small("V-a", 50, 10);
        c.seed = 1;
        assert_ne!(a, c.design().unwrap());
    }

    #[test]
    fn report_is_thread_count_invariant() {
        let s = small("I-b", 15, 120);
        let opts1 = RunOptions {
            threads: Some(1),
            ..RunOptions::default()
        };
        let opts4 = RunOptions {
            threads: Some(4),
            ..RunOptions::default()
        };
        let a = run_scenario(&s, &ResidualKind::ALL, &opts1).unwrap();
        let b = run_scenario(&s, &ResidualKind::ALL, &opts4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_tsv(), b.to_tsv());
        assert_eq!(a.observations.len(), 15);
        assert_eq!(a.replications_run, 120);
        assert_eq!(a.failures, 0);
    }

    #[test]
    fn ranking_is_a_sorted_permutation() {
        let s = small("I-a", 15, 100);
        let report = run_scenario(&s, &ResidualKind::STANDARDIZED, &RunOptions::default()).unwrap();
        let table = compare_report(&report);
        assert_eq!(table.len(), 5);
        assert!(table.windows(2).all(|w| w[0].mean <= w[1].mean));
        let mut kinds: Vec<_> = table.iter().map(|r| r.kind).collect();
        kinds.sort();
        assert_eq!(kinds, ResidualKind::STANDARDIZED.to_vec());
        for r in &table {
            assert!(r.min <= r.q1 && r.q1 <= r.median && r.median <= r.q3 && r.q3 <= r.max);
        }
        let single = run_scenario(&s, &[ResidualKind::PearsonStd], &RunOptions::default()).unwrap();
        assert_eq!(compare_report(&single).len(), 1);
    }

    #[test]
    fn tsv_layout() {
        let s = small("II-a", 15, 50);
        let report = run_scenario(
            &s,
            &[ResidualKind::Quantile, ResidualKind::AdjustedQuantile],
            &RunOptions::default(),
        )
        .unwrap();
        let tsv = report.to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 1 + 15 + 2);
        assert_eq!(lines[0].split('\t').count(), 2 + 10);
        assert!(lines[0].starts_with("i\tmu\tr_qu_mean\tr_qu_var"));
        assert!(lines[1].starts_with("1\t67.742\t"));
        assert!(lines[16].starts_with("Mean\t\t"));
        assert_eq!(lines[16].split('\t').count(), 12);
    }

    #[test]
    fn zero_time_budget_truncates() {
        let s = small("I-a", 15, 5000);
        let opts = RunOptions {
            time_budget: Some(Duration::ZERO),
            ..RunOptions::default()
        };
        let r = run_scenario(&s, &[ResidualKind::Quantile], &opts);
        assert!(matches!(r, Err(Error::InsufficientData { got: 0, .. })));
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        let mut s = small("I-a", 15, 10);
        s.beta.pop();
        assert!(s.validate().is_err());
        let mut s = small("I-a", 15, 10);
        s.covariates[1] = CovariateGen::Fixed {
            values: vec![0.5; 3],
        };
        assert!(s.design().is_err());
        let mut s = small("VII-a", 20, 10);
        s.beta = vec![-1.0, 0.0, 0.0];
        let d = s.design().unwrap();
        assert!(s.true_means(&d).is_err());
    }
}
