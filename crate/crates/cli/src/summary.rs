//! Machine-readable run summaries and atomic artifact writes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

pub const TOOL: &str = "stackel-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// One measured quantity against its threshold. Criteria that are not
/// enforced are reported findings and do not affect the exit status.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Criterion {
    pub name: String,
    pub measured: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub passed: bool,
    pub enforced: bool,
}

impl Criterion {
    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Comparison::AtMost, threshold)
    }

    pub fn at_least(name: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured, Comparison::AtLeast, threshold)
    }

    fn new(name: &str, measured: f64, comparison: Comparison, threshold: f64) -> Self {
        // NaN fails both comparisons.
        let passed = match comparison {
            Comparison::AtMost => measured <= threshold,
            Comparison::AtLeast => measured >= threshold,
        };
        Self {
            name: name.to_string(),
            measured,
            comparison,
            threshold,
            passed,
            enforced: true,
        }
    }

    pub fn advisory(mut self) -> Self {
        self.enforced = false;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerance {
    pub criterion: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integration: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Tolerance>,
    pub status: Status,
    pub criteria: Vec<Criterion>,
    pub results: Value,
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Summary {
    pub fn status_of(criteria: &[Criterion]) -> Status {
        if criteria.iter().all(|c| c.passed || !c.enforced) {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("summary is always serializable");
        text.push('\n');
        text
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_never_passes() {
        assert!(!Criterion::at_most("x", f64::NAN, 1.0).passed);
        assert!(!Criterion::at_least("x", f64::NAN, 1.0).passed);
    }

    #[test]
    fn advisory_criteria_do_not_fail_the_run() {
        let c = vec![Criterion::at_most("a", 0.5, 1.0), Criterion::at_most("b", 2.0, 1.0).advisory()];
        assert_eq!(Summary::status_of(&c), Status::Pass);
        let c = vec![Criterion::at_most("a", 1.5, 1.0)];
        assert_eq!(Summary::status_of(&c), Status::Fail);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "x.txt", "first").unwrap();
        write_atomic(dir.path(), "x.txt", "second").unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("x.txt")).unwrap(), "second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
