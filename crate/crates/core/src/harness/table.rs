//! Per-κ_s aggregation of runs and the CSV summary table.

use serde::{Deserialize, Serialize};

use super::config::KappaSetting;
use crate::error::{Error, Result};
use crate::solver::{SolveStats, SolveStatus};

pub const TABLE_HEADER: &str =
    "kappa_s,ir2n_iters,ir2_iters_per_outer,prox_iters_per_call,time_s,fail_rate,final_objective";

/// Outcome of one solver run, as stored at the end of its trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub kappa_s: KappaSetting,
    pub seed: u64,
    /// `None` when the run aborted with an error.
    pub status: Option<SolveStatus>,
    pub error: Option<String>,
    pub stats: SolveStats,
    pub solution_path: Option<String>,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.status == Some(SolveStatus::FirstOrder)
    }
}

/// One table row. Means run over successful runs only; the failure rate
/// over all of them. Without a successful run the means are `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub kappa_s: KappaSetting,
    pub ir2n_iters: f64,
    pub ir2_iters_per_outer: f64,
    pub prox_iters_per_call: f64,
    pub time_s: f64,
    pub fail_rate: f64,
    pub final_objective: f64,
    pub runs: usize,
    pub failures: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn summarize(kappa_s: KappaSetting, runs: &[&RunRecord]) -> RunSummary {
    let ok: Vec<&SolveStats> = runs.iter().filter(|r| r.succeeded()).map(|r| &r.stats).collect();
    let failures = runs.len() - ok.len();
    RunSummary {
        kappa_s,
        ir2n_iters: mean(ok.iter().map(|s| s.outer_iters as f64)),
        ir2_iters_per_outer: mean(ok.iter().map(|s| s.inner_per_outer())),
        prox_iters_per_call: mean(ok.iter().map(|s| s.prox_per_call())),
        time_s: mean(ok.iter().map(|s| s.time_s)),
        fail_rate: if runs.is_empty() { f64::NAN } else { failures as f64 / runs.len() as f64 },
        final_objective: mean(ok.iter().map(|s| s.objective())),
        runs: runs.len(),
        failures,
    }
}

/// Groups runs by κ_s in order of first appearance.
pub fn aggregate(records: &[RunRecord]) -> Vec<RunSummary> {
    let mut order: Vec<KappaSetting> = vec![];
    for r in records {
        if !order.contains(&r.kappa_s) {
            order.push(r.kappa_s);
        }
    }
    order
        .into_iter()
        .map(|k| {
            let group: Vec<&RunRecord> = records.iter().filter(|r| r.kappa_s == k).collect();
            summarize(k, &group)
        })
        .collect()
}

/// Three significant digits with a signed two-digit exponent, e.g. `1.45e+01`.
pub fn format_sci(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.2e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn format_kappa(k: KappaSetting) -> String {
    match k {
        KappaSetting::Exact => "exact".into(),
        KappaSetting::Value(v) => format_sci(v),
    }
}

pub fn emit_table(summaries: &[RunSummary]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for s in summaries {
        let cells = [
            format_kappa(s.kappa_s),
            format_sci(s.ir2n_iters),
            format_sci(s.ir2_iters_per_outer),
            format_sci(s.prox_iters_per_call),
            format_sci(s.time_s),
            format_sci(s.fail_rate),
            format_sci(s.final_objective),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// A row read back from [`emit_table`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub kappa_s: KappaSetting,
    pub ir2n_iters: f64,
    pub ir2_iters_per_outer: f64,
    pub prox_iters_per_call: f64,
    pub time_s: f64,
    pub fail_rate: f64,
    pub final_objective: f64,
}

pub fn parse_table(text: &str) -> Result<Vec<TableRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == TABLE_HEADER => {}
        other => return Err(Error::Parse(format!("unexpected table header {other:?}"))),
    }
    lines
        .map(|line| {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 7 {
                return Err(Error::Parse(format!("expected 7 columns in '{line}'")));
            }
            let num = |c: &str| c.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{c}'")));
            Ok(TableRow {
                kappa_s: cells[0].parse()?,
                ir2n_iters: num(cells[1])?,
                ir2_iters_per_outer: num(cells[2])?,
                prox_iters_per_call: num(cells[3])?,
                time_s: num(cells[4])?,
                fail_rate: num(cells[5])?,
                final_objective: num(cells[6])?,
            })
        })
        .collect()
}
