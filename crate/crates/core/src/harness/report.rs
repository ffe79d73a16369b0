use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{ExperimentConfig, Scenario};
use super::json::{self, SCHEMA_VERSION};
use crate::cpmaps::CPMap;
use crate::error::{Error, Result};
use crate::polar::{CertificateCheck, SeparationCertificate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Pass,
    Fail,
    /// Neither verdict could be certified; counted as a failure.
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub status: TrialStatus,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default)]
    pub detail: BTreeMap<String, Value>,
}

impl TrialRecord {
    pub fn new(trial: usize) -> Self {
        Self {
            trial,
            status: TrialStatus::Pass,
            metrics: BTreeMap::new(),
            detail: BTreeMap::new(),
        }
    }

    /// Records a metric; non-finite values fail the trial.
    pub fn metric(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.metrics.insert(name.to_string(), value);
        } else {
            self.detail
                .insert(format!("{name}_non_finite"), Value::String(value.to_string()));
            self.status = TrialStatus::Fail;
        }
    }

    /// Records `value` and fails the trial unless `value ≤ bound`.
    pub fn check_le(&mut self, name: &str, value: f64, bound: f64) {
        self.metric(name, value);
        if !(value <= bound) {
            self.fail(format!("{name} = {value:e} exceeds {bound:e}"));
        }
    }

    pub fn fail(&mut self, why: String) {
        self.status = TrialStatus::Fail;
        let entry = self
            .detail
            .entry("failures".to_string())
            .or_insert_with(|| Value::Array(Vec::new()));
        if let Value::Array(list) = entry {
            list.push(Value::String(why));
        }
    }

    pub fn note(&mut self, key: &str, value: Value) {
        self.detail.insert(key.to_string(), value);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub config: ExperimentConfig,
    pub pass_count: usize,
    pub fail_count: usize,
    pub undecided_count: usize,
    pub records: Vec<TrialRecord>,
    pub wall_time: f64,
}

/// A certificate stored in a report with the instance it separates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedCertificate {
    pub trial: usize,
    pub certificate: SeparationCertificate,
    pub generators: Vec<CPMap>,
    pub target: CPMap,
}

impl EmbeddedCertificate {
    pub fn revalidate(&self) -> Result<CertificateCheck> {
        self.certificate.revalidate(&self.generators, &self.target)
    }
}

impl Report {
    pub fn new(config: ExperimentConfig, records: Vec<TrialRecord>, wall_time: f64) -> Self {
        let pass_count = records.iter().filter(|r| r.status == TrialStatus::Pass).count();
        let undecided_count = records.iter().filter(|r| r.status == TrialStatus::Undecided).count();
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: config.scenario,
            fail_count: records.len() - pass_count,
            pass_count,
            undecided_count,
            config,
            records,
            wall_time,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.fail_count == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports hold only finite numbers")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Report = serde_json::from_str(text).map_err(json::parse_error)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported schema_version {}",
                report.schema_version
            )));
        }
        if report.pass_count + report.fail_count != report.records.len() {
            return Err(Error::Validation("pass_count + fail_count differs from the number of records".into()));
        }
        report.config.validate()?;
        Ok(report)
    }

    /// The report with `wall_time` zeroed, for reproducibility comparisons.
    pub fn without_wall_time(&self) -> Self {
        Self {
            wall_time: 0.0,
            ..self.clone()
        }
    }

    pub fn certificates(&self) -> Result<Vec<EmbeddedCertificate>> {
        let mut out = Vec::new();
        for r in &self.records {
            let Some(cert) = r.detail.get("certificate") else {
                continue;
            };
            let missing = || Error::Validation(format!("trial {}: certificate without its instance", r.trial));
            let generators = r
                .detail
                .get("generators")
                .and_then(Value::as_array)
                .ok_or_else(missing)?
                .iter()
                .map(json::from_value::<CPMap>)
                .collect::<Result<Vec<_>>>()?;
            let target = json::from_value::<CPMap>(r.detail.get("target").ok_or_else(missing)?)?;
            out.push(EmbeddedCertificate {
                trial: r.trial,
                certificate: json::from_value(cert)?,
                generators,
                target,
            });
        }
        Ok(out)
    }

    /// One row per trial: trial, status, then every metric column.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let columns: BTreeSet<&String> = self.records.iter().flat_map(|r| r.metrics.keys()).collect();
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        let mut header = vec!["trial".to_string(), "status".to_string()];
        header.extend(columns.iter().map(|c| c.to_string()));
        w.write_record(&header).map_err(csv_error)?;
        for r in &self.records {
            let mut row = vec![r.trial.to_string(), format!("{:?}", r.status).to_lowercase()];
            row.extend(
                columns
                    .iter()
                    .map(|c| r.metrics.get(*c).map(|v| v.to_string()).unwrap_or_default()),
            );
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("csv: {other:?}")),
    }
}
