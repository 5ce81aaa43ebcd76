//! CSV input: a mandatory header row and numeric columns.

use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::error::CliError;

pub struct Dataset {
    path: String,
    headers: Vec<String>,
    rows: Vec<(u64, StringRecord)>,
}

impl Dataset {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let shown = path.display().to_string();
        let mut reader = ReaderBuilder::new()
            .has_headers(true)
            .trim(Trim::All)
            .from_path(path)
            .map_err(|e| CliError::Io(format!("{shown}: {e}")))?;
        let parse_err = |e: csv::Error| {
            let line = e.position().map(|p| p.line()).unwrap_or(1);
            CliError::Parse {
                path: shown.clone(),
                line,
                message: e.to_string(),
            }
        };
        let headers = reader
            .headers()
            .map_err(parse_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(parse_err)?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            rows.push((line, record));
        }
        Ok(Self {
            path: shown,
            headers,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let j = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::MissingColumn(name.to_string()))?;
        self.rows
            .iter()
            .map(|(line, rec)| {
                let raw = rec.get(j).unwrap_or("");
                raw.parse::<f64>().map_err(|_| CliError::Parse {
                    path: self.path.clone(),
                    line: *line,
                    message: format!("column '{name}': '{raw}' is not a number"),
                })
            })
            .collect()
    }
}
