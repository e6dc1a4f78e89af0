//! Artifact writers. Floats are written with 17 significant digits in
//! exponent form, so every value round-trips bit for bit.

use crate::error::CliError;
use billiard_core::coupling::CouplingOutcome;
use billiard_core::dynamics::{BounceRecord, Trajectory};
use billiard_core::stats::DominanceReport;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Collects the files a run writes, in order.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: PathBuf) -> Self {
        Self {
            dir,
            written: vec![],
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl Iterator<Item = Vec<String>>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let text =
            serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn trajectory(&mut self, name: &str, records: &[BounceRecord]) -> Result<(), CliError> {
        let rows = records.iter().map(|r| {
            vec![
                r.n.to_string(),
                float(r.s),
                float(r.phi()),
                float(r.theta),
                float(r.tau),
                float(r.clock),
            ]
        });
        self.csv(name, &["n", "s", "phi", "theta", "tau", "T"], rows)
    }

    /// Process state every `dt` from 0 up to the last hit.
    pub fn samples(
        &mut self,
        name: &str,
        trajectory: &Trajectory,
        dt: f64,
    ) -> Result<(), CliError> {
        let horizon = trajectory.horizon();
        let count = (horizon / dt).floor() as usize;
        let mut rows = Vec::with_capacity(count + 1);
        for k in 0..=count {
            let t = k as f64 * dt;
            let s = trajectory.sample_at(t)?;
            rows.push(vec![
                float(t),
                float(s.position.x),
                float(s.position.y),
                float(s.velocity.x),
                float(s.velocity.y),
            ]);
        }
        self.csv(name, &["t", "x", "y", "vx", "vy"], rows.into_iter())
    }

    pub fn outcomes(&mut self, name: &str, outcomes: &[CouplingOutcome]) -> Result<(), CliError> {
        let rows = outcomes.iter().enumerate().map(|(i, o)| {
            vec![
                i.to_string(),
                o.coupled.to_string(),
                float(o.index_or_time()),
                o.attempts.len().to_string(),
                o.stage_successes(1).to_string(),
                o.stage_successes(2).to_string(),
            ]
        });
        self.csv(
            name,
            &[
                "replica",
                "coupled",
                "index_or_time",
                "attempts",
                "stage1_successes",
                "stage2_successes",
            ],
            rows,
        )
    }

    pub fn dominance(
        &mut self,
        name: &str,
        axis: &str,
        report: &DominanceReport,
    ) -> Result<(), CliError> {
        let rows = report.rows.iter().map(|r| {
            vec![
                float(r.x),
                float(r.empirical),
                float(r.sigma),
                float(r.bound),
                r.pass.to_string(),
            ]
        });
        self.csv(name, &[axis, "empirical", "sigma", "bound", "pass"], rows)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    Ok(sha256_hex(&std::fs::read(path)?))
}
