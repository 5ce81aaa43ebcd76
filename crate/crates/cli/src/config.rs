//! Scenario collections read from TOML.
//!
//! ```toml
//! kinds = ["quantile", "adjusted_quantile"]
//! time_budget_secs = 60
//!
//! [[builtin]]
//! name = "I-a"
//! n = 15
//!
//! [[scenario]]
//! name = "small-gamma"
//! family = "gamma"
//! link = "log"
//! beta = [1.0, 0.5]
//! sigma = 0.2
//! n = 30
//! replications = 1000
//! covariates = [{ law = "intercept" }, { law = "uniform", min = 0.0, max = 1.0 }]
//! ```

use std::path::Path;
use std::time::Duration;

use glmdiag::glm::{Family, Link};
use glmdiag::residuals::ResidualKind;
use glmdiag::simulation::{builtin_scenario, CovariateGen, Scenario};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub kinds: Option<Vec<String>>,
    pub time_budget_secs: Option<f64>,
    #[serde(default)]
    pub builtin: Vec<BuiltinRef>,
    #[serde(default)]
    pub scenario: Vec<ScenarioConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinRef {
    pub name: String,
    pub n: usize,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub family: String,
    pub link: String,
    pub beta: Vec<f64>,
    pub covariates: Vec<CovariateGen>,
    pub sigma: f64,
    pub n: usize,
    pub replications: Option<usize>,
    pub seed: Option<u64>,
}

impl SimulationConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1) as u64)
                .unwrap_or(1);
            CliError::Parse {
                path: path.display().to_string(),
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn kinds(&self) -> Result<Option<Vec<ResidualKind>>, CliError> {
        self.kinds
            .as_ref()
            .map(|list| {
                ResidualKind::parse_list(&list.join(","))
                    .map_err(|e| CliError::Usage(e.to_string()))
            })
            .transpose()
    }

    pub fn time_budget(&self) -> Result<Option<Duration>, CliError> {
        self.time_budget_secs
            .map(|s| {
                Duration::try_from_secs_f64(s)
                    .map_err(|e| CliError::Usage(format!("time_budget_secs: {e}")))
            })
            .transpose()
    }

    /// Scenarios with CLI overrides applied over file values over defaults.
    pub fn scenarios(
        &self,
        seed: Option<u64>,
        reps: Option<usize>,
    ) -> Result<Vec<Scenario>, CliError> {
        let usage = |e: glmdiag::Error| CliError::Usage(e.to_string());
        let mut out = Vec::new();
        for b in &self.builtin {
            let mut s = builtin_scenario(&b.name, b.n).map_err(usage)?;
            s.seed = seed.or(b.seed).unwrap_or(0);
            s.replications = reps.or(b.replications).unwrap_or(5000);
            out.push(s);
        }
        for c in &self.scenario {
            let s = Scenario {
                name: c.name.clone(),
                family: c.family.parse::<Family>().map_err(usage)?,
                link: c.link.parse::<Link>().map_err(usage)?,
                beta: c.beta.clone(),
                covariates: c.covariates.clone(),
                sigma: c.sigma,
                n: c.n,
                replications: reps.or(c.replications).unwrap_or(5000),
                seed: seed.or(c.seed).unwrap_or(0),
            };
            s.validate().map_err(usage)?;
            out.push(s);
        }
        if out.is_empty() {
            return Err(CliError::Usage("configuration lists no scenarios".into()));
        }
        Ok(out)
    }
}
