//! Merging traces into one long-format table for plotting.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};

use crate::report::{number, TRACE_HEADER};

pub const PLOT_HEADER: [&str; 7] = [
    "run_id",
    "t",
    "per_round",
    "bound_rhs",
    "ln_t",
    "ln_per_round",
    "ln_bound",
];

/// Run identifier of a trace: its directory name, or the file stem.
fn run_id(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .or_else(|| path.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".to_string())
}

fn log_or_empty(v: f64) -> String {
    if v > 0.0 {
        number(v.ln())
    } else {
        String::new()
    }
}

/// Returns the number of data rows written.
pub fn merge(traces: &[PathBuf], out: &Path) -> anyhow::Result<usize> {
    if traces.is_empty() {
        bail!("no traces given");
    }
    let mut seen = HashSet::new();
    let mut sources = Vec::new();
    for path in traces {
        let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header != TRACE_HEADER {
            bail!(
                "{}: schema mismatch, expected columns {}",
                path.display(),
                TRACE_HEADER.join(",")
            );
        }
        let mut id = run_id(path);
        let base = id.clone();
        let mut k = 1;
        while !seen.insert(id.clone()) {
            k += 1;
            id = format!("{base}#{k}");
        }
        sources.push((id, reader));
    }

    let mut writer = csv::Writer::from_path(out).with_context(|| format!("creating {}", out.display()))?;
    writer.write_record(PLOT_HEADER)?;
    let mut rows = 0;
    for (id, mut reader) in sources {
        for record in reader.records() {
            let record = record?;
            let field = |i: usize| -> anyhow::Result<f64> {
                record
                    .get(i)
                    .context("short row")?
                    .parse::<f64>()
                    .with_context(|| format!("run {id}: bad number in column {}", TRACE_HEADER[i]))
            };
            let (t, per_round, bound) = (field(0)?, field(7)?, field(8)?);
            writer.write_record([
                id.clone(),
                record[0].to_string(),
                record[7].to_string(),
                record[8].to_string(),
                log_or_empty(t),
                log_or_empty(per_round),
                log_or_empty(bound),
            ])?;
            rows += 1;
        }
    }
    writer.flush()?;
    Ok(rows)
}
