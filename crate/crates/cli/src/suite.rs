//! Manifests listing several experiments.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::{exit, LabError, Result};
use crate::experiments::{check, run_experiment, RunSummary};
use crate::output::{to_json_string, write_file};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    experiments: Vec<Entry>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Entry {
    /// Path relative to the manifest.
    Path(String),
    Inline(Value),
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub out: PathBuf,
    pub parallel: bool,
}

#[derive(Debug)]
pub enum EntryResult {
    Ran(RunSummary),
    Error { name: String, code: i32, message: String },
}

#[derive(Debug)]
pub struct SuiteReport {
    pub entries: Vec<EntryResult>,
    pub path: PathBuf,
}

impl SuiteReport {
    pub fn failed(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                EntryResult::Ran(s) if s.passed => None,
                EntryResult::Ran(s) => Some(s.name.as_str()),
                EntryResult::Error { name, .. } => Some(name.as_str()),
            })
            .collect()
    }

    /// 0 when every experiment passed; the code of the first run error if
    /// any experiment errored, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        let first_error = self.entries.iter().find_map(|e| match e {
            EntryResult::Error { code, .. } => Some(*code),
            _ => None,
        });
        match first_error {
            Some(code) => code,
            None if self.failed().is_empty() => exit::OK,
            None => exit::FAILED,
        }
    }
}

/// Parses and checks every experiment of a manifest. The first invalid one
/// aborts the whole suite.
pub fn load_manifest(path: &Path, seed: Option<u64>) -> Result<Vec<ExperimentConfig>> {
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| LabError::config(&source, ".", format!("invalid JSON: {e}")))?;
    let manifest: Manifest = serde_path_to_error::deserialize(value)
        .map_err(|e| LabError::config(&source, e.path().to_string(), e.into_inner().to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut configs = Vec::new();
    let mut names = HashSet::new();
    for (i, entry) in manifest.experiments.into_iter().enumerate() {
        let mut config = match entry {
            Entry::Path(p) => ExperimentConfig::load(&base.join(p))?,
            Entry::Inline(v) => ExperimentConfig::from_value(&format!("{source} experiments[{i}]"), v, None)?,
        };
        if let Some(seed) = seed {
            config.override_seed(seed);
        }
        check(&config)?;
        if !names.insert(config.name.clone()) {
            return Err(LabError::config(&source, format!("experiments[{i}].name"), format!("duplicate name {:?}", config.name)));
        }
        configs.push(config);
    }
    Ok(configs)
}

pub fn run_suite(configs: &[ExperimentConfig], options: &SuiteOptions) -> Result<SuiteReport> {
    std::fs::create_dir_all(&options.out).map_err(|e| LabError::io(&options.out, e))?;
    let run_one = |c: &ExperimentConfig| match run_experiment(c, &options.out) {
        Ok(s) => {
            println!("{} {}: {}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.summary);
            EntryResult::Ran(s)
        }
        Err(e) => {
            println!("ERROR {}: {e}", c.name);
            EntryResult::Error { name: c.name.clone(), code: e.exit_code(), message: e.to_string() }
        }
    };
    let entries: Vec<EntryResult> = if options.parallel {
        configs.par_iter().map(run_one).collect()
    } else {
        configs.iter().map(run_one).collect()
    };
    let listed: Vec<Value> = entries
        .iter()
        .map(|e| match e {
            EntryResult::Ran(s) => json!({
                "name": s.name,
                "kind": s.kind,
                "passed": s.passed,
                "summary": s.summary,
                "report": s.report.file_name().map(|f| f.to_string_lossy().into_owned()),
            }),
            EntryResult::Error { name, code, message } => json!({
                "name": name,
                "passed": false,
                "exit_code": code,
                "error": message,
            }),
        })
        .collect();
    let report = SuiteReport { entries, path: options.out.join("suite.json") };
    let aggregate = json!({
        "passed": report.failed().is_empty(),
        "failed": report.failed(),
        "experiments": listed,
    });
    write_file(&report.path, &to_json_string(&aggregate))?;
    Ok(report)
}
