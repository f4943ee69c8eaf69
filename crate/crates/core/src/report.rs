use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One named check with its measured residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

/// Pass/fail outcome of a batch of axiom or capacity checks. Failures are data,
/// not errors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn push(&mut self, name: &str, passed: bool, residual: f64, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_owned(), passed, residual, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn summary(&self) -> String {
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| format!("{} residual {}{}", c.name, c.residual, if c.passed { "" } else { " FAILED" }))
            .collect();
        parts.join("; ")
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for c in &self.checks {
            wtr.serialize(CheckRow { name: &c.name, passed: c.passed, residual: c.residual, detail: &c.detail })?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<ValidationReport> {
        let mut rdr = csv::Reader::from_reader(r);
        let checks = rdr.deserialize().collect::<std::result::Result<Vec<Check>, _>>().map_err(Error::from)?;
        Ok(ValidationReport { checks })
    }
}

#[derive(Serialize)]
struct CheckRow<'a> {
    name: &'a str,
    passed: bool,
    residual: f64,
    detail: &'a str,
}
