use std::path::{Path, PathBuf};
use std::time::Duration;

use glmdiag::diagnostics::{
    envelope_coverage, simulated_envelope, EnvelopeBand, EnvelopeOptions, EnvelopeScale,
};
use glmdiag::glm::{fit, Family, FittedModel, Link, ModelSpec};
use glmdiag::linalg::Matrix;
use glmdiag::reference::{table_scenarios, table_values, Row, Stat, Table, AD_TABLE_KINDS};
use glmdiag::residuals::{compute, ResidualKind};
use glmdiag::sampling::RngStream;
use glmdiag::simulation::{
    builtin_scenario, compare_report, ranking_tsv, run_scenario, RunOptions, Scenario,
    ScenarioReport, BUILTIN_NAMES,
};
use serde::Serialize;

use crate::config::SimulationConfig;
use crate::data::Dataset;
use crate::error::CliError;
use crate::output::{file_stem, Outputs};
use crate::plot;

pub const INTERCEPT: &str = "(Intercept)";

/// Replication count at which reference comparisons carry pass/fail flags.
pub const REFERENCE_REPLICATIONS: usize = 5000;

pub struct ModelInput<'a> {
    pub data: &'a Path,
    pub family: Family,
    pub link: Link,
    pub response: &'a str,
    pub covariates: &'a [String],
    pub intercept: bool,
}

fn usage(e: glmdiag::Error) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn load_spec(input: &ModelInput) -> Result<ModelSpec, CliError> {
    let data = Dataset::read(input.data)?;
    let y = data.column(input.response)?;
    let mut names = Vec::new();
    let mut columns = Vec::new();
    if input.intercept {
        names.push(INTERCEPT.to_string());
        columns.push(vec![1.0; data.len()]);
    }
    for c in input.covariates {
        columns.push(data.column(c)?);
        names.push(c.clone());
    }
    if columns.is_empty() {
        return Err(CliError::Usage(
            "the model has no terms: add covariates or drop --no-intercept".into(),
        ));
    }
    let x = Matrix::from_columns(&columns).map_err(usage)?;
    ModelSpec::new(input.family, input.link, x, y)
        .and_then(|s| s.with_column_names(names))
        .map_err(|e| CliError::Usage(format!("invalid data: {e}")))
}

pub fn fit_spec(spec: &ModelSpec) -> Result<FittedModel, CliError> {
    fit(spec).map_err(|e| match e {
        glmdiag::Error::SingularDesign {
            column,
            collinear_with,
        } => {
            let names = spec.column_names();
            CliError::Fit(format!(
                "design is rank deficient: column '{}' is collinear with '{}'",
                names[column], names[collinear_with]
            ))
        }
        other => CliError::Fit(other.to_string()),
    })
}

#[derive(Serialize)]
struct Coefficient<'a> {
    term: &'a str,
    estimate: f64,
    std_error: f64,
}

#[derive(Serialize)]
struct FitReport<'a> {
    family: &'static str,
    link: &'static str,
    n: usize,
    k: usize,
    coefficients: Vec<Coefficient<'a>>,
    sigma: f64,
    dispersion_method: glmdiag::glm::DispersionMethod,
    deviance: f64,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
    max_abs_score: f64,
    leverage: &'a [f64],
    fitted: &'a [f64],
}

fn fit_report<'a>(spec: &'a ModelSpec, m: &'a FittedModel) -> Result<FitReport<'a>, CliError> {
    let se = m.standard_errors();
    Ok(FitReport {
        family: m.family.as_str(),
        link: m.link.as_str(),
        n: m.n(),
        k: m.k(),
        coefficients: spec
            .column_names()
            .iter()
            .zip(m.beta.iter().zip(se))
            .map(|(term, (&estimate, std_error))| Coefficient {
                term,
                estimate,
                std_error,
            })
            .collect(),
        sigma: m.sigma,
        dispersion_method: m.dispersion_method,
        deviance: m.deviance,
        log_likelihood: m
            .log_likelihood()
            .map_err(|e| CliError::Fit(e.to_string()))?,
        iterations: m.iterations,
        converged: m.converged,
        max_abs_score: m.max_abs_score,
        leverage: &m.leverage,
        fitted: &m.mu,
    })
}

pub fn cmd_fit(input: &ModelInput, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let spec = load_spec(input)?;
    let m = fit_spec(&spec)?;
    let report = fit_report(&spec, &m)?;
    let mut tsv = String::from("term\testimate\tstd_error\n");
    for c in &report.coefficients {
        tsv.push_str(&format!(
            "{}\t{:.6}\t{:.6}\n",
            c.term, c.estimate, c.std_error
        ));
    }
    tsv.push_str(&format!("sigma\t{:.6}\t\n", m.sigma));
    println!(
        "{} fit ({} link), n = {}, {} iterations, sigma = {:.6}",
        report.family, report.link, report.n, m.iterations, m.sigma
    );
    for c in &report.coefficients {
        println!("  {:<16} {:>14.6} ({:.6})", c.term, c.estimate, c.std_error);
    }
    let mut outputs = Outputs::new(out);
    outputs.text("fit.tsv", tsv);
    outputs.json("fit.json", &report)?;
    outputs.commit()
}

#[derive(Serialize)]
struct ResidualColumn {
    kind: &'static str,
    values: Vec<f64>,
}

pub fn cmd_residuals(
    input: &ModelInput,
    kinds: &[ResidualKind],
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let spec = load_spec(input)?;
    let m = fit_spec(&spec)?;
    let columns = kinds
        .iter()
        .map(|&k| {
            compute(&m, k)
                .map(|s| ResidualColumn {
                    kind: k.name(),
                    values: s.values,
                })
                .map_err(|e| CliError::Fit(format!("{} residuals: {e}", k.name())))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut tsv = String::from("id\ty\tmu\teta\th");
    for c in &columns {
        tsv.push('\t');
        tsv.push_str(c.kind);
    }
    tsv.push('\n');
    for i in 0..m.n() {
        tsv.push_str(&format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            i + 1,
            m.y[i],
            m.mu[i],
            m.eta[i],
            m.leverage[i]
        ));
        for c in &columns {
            tsv.push_str(&format!("\t{:.6}", c.values[i]));
        }
        tsv.push('\n');
    }

    let mut outputs = Outputs::new(out);
    for c in &columns {
        let svg = plot::residuals_vs_eta(&format!("{} residuals", c.kind), &m.eta, &c.values)?;
        outputs.text(format!("residuals_vs_eta_{}.svg", c.kind), svg);
    }
    outputs.text("residuals.tsv", tsv);
    #[derive(Serialize)]
    struct Doc<'a> {
        y: &'a [f64],
        mu: &'a [f64],
        eta: &'a [f64],
        leverage: &'a [f64],
        residuals: &'a [ResidualColumn],
    }
    outputs.json(
        "residuals.json",
        &Doc {
            y: &m.y,
            mu: &m.mu,
            eta: &m.eta,
            leverage: &m.leverage,
            residuals: &columns,
        },
    )?;
    outputs.commit()
}

pub struct EnvelopeInput {
    pub kinds: Vec<ResidualKind>,
    pub seed: u64,
    pub n_sim: usize,
    pub band: f64,
}

fn envelope_tsv(bands: &[EnvelopeBand]) -> String {
    let mut out = String::from("rank\texpected\tlower\tobserved\tupper\tinside\n");
    for b in bands {
        out.push_str(&format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\n",
            b.sorted_index,
            b.expected_quantile,
            b.lower,
            b.observed,
            b.upper,
            b.contains_observed()
        ));
    }
    out
}

pub fn cmd_envelope(
    input: &ModelInput,
    env: &EnvelopeInput,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    if !(env.band > 0.0 && env.band < 1.0) {
        return Err(CliError::Usage(format!(
            "--band must lie in (0, 1), got {}",
            env.band
        )));
    }
    if env.n_sim < 19 {
        return Err(CliError::Usage(format!(
            "--nsim-envelope must be at least 19, got {}",
            env.n_sim
        )));
    }
    let spec = load_spec(input)?;
    let m = fit_spec(&spec)?;

    #[derive(Serialize)]
    struct Entry {
        kind: &'static str,
        scale: &'static str,
        coverage: f64,
        bands: Vec<EnvelopeBand>,
    }
    let mut entries = Vec::new();
    let mut outputs = Outputs::new(out);
    for &kind in &env.kinds {
        let stream_id = ResidualKind::ALL
            .iter()
            .position(|&k| k == kind)
            .unwrap_or(0) as u64;
        for (scale, prefix, x_desc) in [
            (EnvelopeScale::Normal, "envelope", "normal quantile"),
            (
                EnvelopeScale::HalfNormal,
                "halfnormal",
                "half-normal quantile",
            ),
        ] {
            let opts = EnvelopeOptions {
                n_sim: env.n_sim,
                band: env.band,
                scale,
            };
            let bands =
                simulated_envelope(&spec, &m, kind, &opts, &RngStream::new(env.seed, stream_id))
                    .map_err(|e| CliError::Fit(format!("{} envelope: {e}", kind.name())))?;
            let coverage = envelope_coverage(&bands);
            println!(
                "{prefix} {}: {:.1}% of ranks inside the band",
                kind.name(),
                100.0 * coverage
            );
            outputs.text(
                format!("{prefix}_{}.tsv", kind.name()),
                envelope_tsv(&bands),
            );
            outputs.text(
                format!("{prefix}_{}.svg", kind.name()),
                plot::envelope(&format!("{} residuals", kind.name()), &bands, x_desc)?,
            );
            entries.push(Entry {
                kind: kind.name(),
                scale: prefix,
                coverage,
                bands,
            });
        }
    }
    outputs.json("envelope.json", &entries)?;
    outputs.commit()
}

fn run(
    s: &Scenario,
    kinds: &[ResidualKind],
    budget: Option<Duration>,
) -> Result<ScenarioReport, CliError> {
    let opts = RunOptions {
        time_budget: budget,
        ..RunOptions::default()
    };
    let report = run_scenario(s, kinds, &opts)
        .map_err(|e| CliError::Run(format!("scenario {}: {e}", s.name)))?;
    if report.truncated {
        log::warn!(
            "scenario {} n={}: time budget reached, {} of {} replications summarized",
            s.name,
            s.n,
            report.replications_run,
            s.replications
        );
    }
    Ok(report)
}

pub struct SimulateInput<'a> {
    pub source: &'a str,
    pub kinds: Option<Vec<ResidualKind>>,
    pub seed: Option<u64>,
    pub reps: Option<usize>,
    pub budget: Option<Duration>,
}

fn builtin_list(source: &str, seed: u64, reps: usize) -> Result<Vec<Scenario>, CliError> {
    let (name, n) = match source.split_once(':') {
        Some((name, n)) => {
            let n = n
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad sample size in '{source}'")))?;
            (name, vec![n])
        }
        None => (source, vec![15, 50]),
    };
    let names: Vec<&str> = if name.eq_ignore_ascii_case("all") {
        BUILTIN_NAMES.to_vec()
    } else {
        vec![name]
    };
    let mut out = Vec::new();
    for name in names {
        for &n in &n {
            let mut s = builtin_scenario(name, n).map_err(usage)?;
            s.seed = seed;
            s.replications = reps;
            out.push(s);
        }
    }
    Ok(out)
}

pub fn cmd_simulate(input: &SimulateInput, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let (scenarios, file_kinds, budget) = if input.source.ends_with(".toml") {
        let cfg = SimulationConfig::load(Path::new(input.source))?;
        (
            cfg.scenarios(input.seed, input.reps)?,
            cfg.kinds()?,
            cfg.time_budget()?.or(input.budget),
        )
    } else {
        (
            builtin_list(
                input.source,
                input.seed.unwrap_or(0),
                input.reps.unwrap_or(REFERENCE_REPLICATIONS),
            )?,
            None,
            input.budget,
        )
    };
    let kinds = input
        .kinds
        .clone()
        .or(file_kinds)
        .unwrap_or_else(|| ResidualKind::ALL.to_vec());
    let mut outputs = Outputs::new(out);
    let mut reports = Vec::new();
    for s in &scenarios {
        let report = run(s, &kinds, budget)?;
        let stem = format!("{}_n{}", file_stem(&s.name), s.n);
        let ranking = compare_report(&report);
        println!("{} n={}: mean AD by kind", s.name, s.n);
        for r in &ranking {
            println!("  {:<6} {:>10.3}", r.kind.label(), r.mean);
        }
        outputs.text(format!("{stem}.tsv"), report.to_tsv());
        outputs.text(format!("{stem}_ad_ranking.tsv"), ranking_tsv(&ranking));
        reports.push(report);
    }
    outputs.json("simulate.json", &reports)?;
    outputs.commit()
}

#[derive(Serialize)]
struct Comparison {
    scenario: &'static str,
    n: usize,
    kind: &'static str,
    row: String,
    stat: &'static str,
    reference: f64,
    observed: f64,
    tolerance: String,
    status: &'static str,
}

const LOW_REPLICATION: &str = "low-replication, informational";

pub fn cmd_reproduce(
    table: Table,
    seed: u64,
    reps: usize,
    budget: Option<Duration>,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let kinds: Vec<ResidualKind> = match table {
        Table::T1 | Table::T2 => vec![ResidualKind::Quantile, ResidualKind::AdjustedQuantile],
        _ => AD_TABLE_KINDS.to_vec(),
    };
    let mut reports = Vec::new();
    for (name, n) in table_scenarios(table) {
        let mut s = builtin_scenario(name, n).map_err(usage)?;
        s.seed = seed;
        s.replications = reps;
        reports.push(run(&s, &kinds, budget)?);
    }
    let informational = reps < REFERENCE_REPLICATIONS || reports.iter().any(|r| r.truncated);
    let find = |name: &str, n: usize| {
        reports
            .iter()
            .find(|r| r.scenario == name && r.n == n)
            .expect("scenario ran")
    };

    let mut comparisons = Vec::new();
    for v in table_values(table) {
        let r = find(v.scenario, v.n);
        let observed = match v.row {
            Row::Summary => {
                let s = r.summary_for(v.kind).expect("kind ran");
                match v.stat {
                    Stat::Mean => s.mean.mean,
                    Stat::Variance => s.variance.mean,
                    Stat::Skewness => s.skewness.mean,
                    Stat::ExcessKurtosis => s.excess_kurtosis.mean,
                    Stat::Ad => s.ad.mean,
                }
            }
            Row::Observation(i) => {
                let s = r.stat(i - 1, v.kind).expect("observation exists");
                match v.stat {
                    Stat::Mean => s.mean,
                    Stat::Variance => s.variance,
                    Stat::Skewness => s.skewness,
                    Stat::ExcessKurtosis => s.excess_kurtosis,
                    Stat::Ad => s.ad,
                }
            }
        };
        let status = if informational {
            LOW_REPLICATION
        } else if v.tolerance.allows(v.value, observed) {
            "pass"
        } else {
            "fail"
        };
        let (a, r) = (v.tolerance.absolute, v.tolerance.relative * 100.0);
        let tolerance = if r == 0.0 {
            format!("±{a}")
        } else if a == 0.0 {
            format!("±{r}%")
        } else {
            format!("±({a} + {r}%)")
        };
        comparisons.push(Comparison {
            scenario: v.scenario,
            n: v.n,
            kind: v.kind.label(),
            row: match v.row {
                Row::Summary => "Mean".into(),
                Row::Observation(i) => i.to_string(),
            },
            stat: v.stat.as_str(),
            reference: v.value,
            observed,
            tolerance,
            status,
        });
    }

    let id = table.id();
    let mut outputs = Outputs::new(out);
    let main_table = match table {
        Table::T7 | Table::T8 => {
            let mut t = String::from("scenario\tn\tkind\tmean\tsd\tmin\tq1\tmedian\tq3\tmax\n");
            for r in &reports {
                for row in compare_report(r) {
                    t.push_str(&format!(
                        "{}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\t{:.2}\n",
                        r.scenario,
                        r.n,
                        row.kind.label(),
                        row.mean,
                        row.sd,
                        row.min,
                        row.q1,
                        row.median,
                        row.q3,
                        row.max
                    ));
                }
            }
            t
        }
        _ => reports[0].to_tsv(),
    };
    outputs.text(format!("{id}.tsv"), main_table);
    let mut cmp =
        String::from("scenario\tn\tkind\trow\tstat\treference\tobserved\ttolerance\tstatus\n");
    for c in &comparisons {
        cmp.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:.3}\t{:.3}\t{}\t{}\n",
            c.scenario, c.n, c.kind, c.row, c.stat, c.reference, c.observed, c.tolerance, c.status
        ));
    }
    outputs.text(format!("{id}_comparison.tsv"), cmp);
    #[derive(Serialize)]
    struct Doc<'a> {
        table: &'static str,
        replications: usize,
        seed: u64,
        informational: bool,
        comparisons: &'a [Comparison],
        reports: &'a [ScenarioReport],
    }
    outputs.json(
        format!("{id}.json"),
        &Doc {
            table: id,
            replications: reps,
            seed,
            informational,
            comparisons: &comparisons,
            reports: &reports,
        },
    )?;
    if informational {
        println!(
            "{id}: {} values compared ({LOW_REPLICATION})",
            comparisons.len()
        );
    } else {
        let passed = comparisons.iter().filter(|c| c.status == "pass").count();
        println!(
            "{id}: {passed} of {} reference values within tolerance",
            comparisons.len()
        );
    }
    outputs.commit()
}
