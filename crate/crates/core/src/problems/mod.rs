//! Benchmark problem generators and their smooth oracles.

mod bpdn;
mod fh;
mod matcomp;
pub mod ode;

use std::io::Write;

use crate::error::Result;

pub use bpdn::{bpdn_generate, bpdn_generate_with, BpdnConfig, BpdnProblem, LeastSquaresOracle};
pub use fh::{fh_generate, fh_generate_with, fh_true_parameters, simulate_on, FhConfig, FhOracle, FhProblem, MIN_TIME_SCALE};
pub use matcomp::{matcomp_generate, matcomp_generate_with, matcomp_image, MatCompConfig, MatCompProblem, MaskedOracle};

/// Writes equally long columns as whitespace-separated text with a `#` header.
pub fn write_columns<W: Write>(mut out: W, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    writeln!(out, "# {}", headers.join(" "))?;
    let rows = columns.iter().map(|c| c.len()).max().unwrap_or(0);
    for i in 0..rows {
        let line: Vec<String> =
            columns.iter().map(|c| c.get(i).map_or_else(|| "nan".to_string(), |v| format!("{v:.17e}"))).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}
