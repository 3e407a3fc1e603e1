use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::evolution::RunResult;
use crate::Result;

/// Subdirectory of an experiment's output directory holding one JSON file per
/// run.
pub const RECORDS_DIR: &str = "records";
/// Wall-clock sidecar, one CSV line per executed run.
pub const TIMINGS_FILE: &str = "timings.csv";

/// One finished (problem, algorithm, run) cell. Serialized without wall-clock
/// time, so equal seeds give byte-identical files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: String,
    pub algorithm: String,
    pub run: usize,
    pub seed: u64,
    pub budget: usize,
    pub result: RunResult,
}

impl RunRecord {
    pub fn final_fitness(&self) -> f64 {
        self.result.best_fitness
    }
}

/// Append-only store of run records under `<dir>/records`.
#[derive(Clone, Debug)]
pub struct RecordStore {
    root: PathBuf,
}

impl RecordStore {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir.join(RECORDS_DIR))?;
        Ok(Self {
            root: dir.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, problem: &str, algorithm: &str, run: usize) -> PathBuf {
        self.root
            .join(RECORDS_DIR)
            .join(format!("{}__{}__{run:04}.json", sanitize(problem), sanitize(algorithm)))
    }

    /// A previously stored record, if it exists and parses.
    pub fn load(&self, problem: &str, algorithm: &str, run: usize) -> Option<RunRecord> {
        let text = fs::read_to_string(self.path_for(problem, algorithm, run)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Writes via a temporary file and rename, so a crash never leaves a
    /// truncated record behind.
    pub fn write(&self, record: &RunRecord) -> Result<()> {
        let path = self.path_for(&record.problem, &record.algorithm, record.run);
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec(record)?)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn append_timing(&self, record: &RunRecord, elapsed_seconds: f64) -> Result<()> {
        let path = self.root.join(TIMINGS_FILE);
        let fresh = !path.exists();
        let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            writeln!(f, "problem,algorithm,run,elapsed_seconds")?;
        }
        writeln!(
            f,
            "{},{},{},{elapsed_seconds}",
            record.problem, record.algorithm, record.run
        )?;
        Ok(())
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Loads every record under `dir/records`, or directly under `dir` when it has
/// no such subdirectory. Sorted by (problem, algorithm, run).
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let nested = dir.join(RECORDS_DIR);
    let source = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let mut records = Vec::new();
    for entry in fs::read_dir(&source)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let text = fs::read_to_string(&path)?;
            records.push(serde_json::from_str::<RunRecord>(&text)?);
        }
    }
    records.sort_by(|a, b| {
        (&a.problem, &a.algorithm, a.run).cmp(&(&b.problem, &b.algorithm, b.run))
    });
    Ok(records)
}
