//! Line-delimited JSON traces: one `iter` line per outer iteration followed
//! by a single `run` line with the run's outcome.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::KappaSetting;
use super::table::{aggregate, RunRecord, RunSummary};
use crate::error::{Error, Result};
use crate::solver::IterationRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TraceLine {
    Iter(IterationRecord),
    Run(RunRecord),
}

pub fn write_trace(path: &Path, trace: &[IterationRecord], record: &RunRecord) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let mut line = |l: TraceLine| -> Result<()> {
        serde_json::to_writer(&mut out, &l).map_err(|e| Error::Parse(e.to_string()))?;
        out.write_all(b"\n")?;
        Ok(())
    };
    for it in trace {
        line(TraceLine::Iter(it.clone()))?;
    }
    line(TraceLine::Run(record.clone()))?;
    out.flush()?;
    Ok(())
}

/// A parsed trace file.
#[derive(Debug, Clone)]
pub struct Trace {
    pub iterations: Vec<IterationRecord>,
    pub run: RunRecord,
}

pub fn read_trace(path: &Path) -> Result<Trace> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut iterations = vec![];
    let mut run = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TraceLine = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), i + 1)))?;
        match parsed {
            TraceLine::Iter(it) => iterations.push(it),
            TraceLine::Run(r) => run = Some(r),
        }
    }
    let run = run.ok_or_else(|| Error::Parse(format!("{}: no run record", path.display())))?;
    Ok(Trace { iterations, run })
}

/// Trace files of a directory, ordered by κ_s (numeric values ascending,
/// the exact sentinel last) and then by seed.
pub fn read_trace_dir(dir: &Path) -> Result<Vec<Trace>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    let mut traces = paths.iter().map(|p| read_trace(p)).collect::<Result<Vec<_>>>()?;
    let key = |k: KappaSetting| match k {
        KappaSetting::Value(v) => v,
        KappaSetting::Exact => f64::INFINITY,
    };
    traces.sort_by(|a, b| key(a.run.kappa_s).total_cmp(&key(b.run.kappa_s)).then(a.run.seed.cmp(&b.run.seed)));
    Ok(traces)
}

/// Rebuilds the summary rows from the run records stored in a trace
/// directory. Fails if a trace disagrees with its own iteration count.
pub fn reaggregate(dir: &Path) -> Result<Vec<RunSummary>> {
    let traces = read_trace_dir(dir)?;
    if traces.is_empty() {
        return Err(Error::InvalidParameter(format!("no trace files in {}", dir.display())));
    }
    for t in &traces {
        if t.run.status.is_some() && t.iterations.len() != t.run.stats.outer_iters {
            return Err(Error::Parse(format!(
                "trace for kappa {} seed {} has {} iterations but records {}",
                t.run.kappa_s,
                t.run.seed,
                t.iterations.len(),
                t.run.stats.outer_iters
            )));
        }
    }
    let records: Vec<RunRecord> = traces.into_iter().map(|t| t.run).collect();
    Ok(aggregate(&records))
}
