//! Executing a run and writing its trace, summary and config echo.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use dualavg_core::{run_with, BoundParams, LossGenerator, RegretTrace, RunOptions};

use crate::config::Experiment;

pub const TRACE_HEADER: [&str; 11] = [
    "t",
    "eta",
    "nu_star",
    "expected_loss",
    "cum_loss",
    "benchmark",
    "regret",
    "per_round",
    "bound_rhs",
    "support_fraction",
    "benchmark_slack",
];

/// Shortest decimal that parses back to the same `f64`.
pub fn number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Outcome of one run, with the constants used for its bound.
#[derive(Debug, Clone)]
pub struct Completed {
    pub trace: RegretTrace,
    pub bound_lipschitz: f64,
    pub bound_m: f64,
    pub pinned: bool,
}

pub fn execute(exp: &Experiment) -> anyhow::Result<Completed> {
    let mut source = LossGenerator::new(exp.losses.clone(), Arc::clone(&exp.domain))?;
    let options = RunOptions {
        tolerance: exp.tolerance,
        sample_seed: exp.sample_seed,
    };
    let mut trace = run_with(
        &exp.domain,
        &exp.potential,
        &exp.schedule,
        &mut source,
        exp.horizon,
        &options,
    )?;
    let pins = exp.pins.unwrap_or(crate::config::BoundSection {
        lipschitz: None,
        dual_bound: None,
    });
    let lipschitz = pins.lipschitz.unwrap_or(trace.l_hat);
    let m = pins.dual_bound.unwrap_or(trace.m_hat);
    let pinned = pins.lipschitz.is_some() || pins.dual_bound.is_some();
    if pinned {
        let params = BoundParams::new(&exp.domain, &exp.potential, &exp.schedule, lipschitz, m);
        trace.attach_bound(&params);
    }
    Ok(Completed {
        trace,
        bound_lipschitz: lipschitz,
        bound_m: m,
        pinned,
    })
}

pub fn write_trace(trace: &RegretTrace, path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(TRACE_HEADER)?;
    for (k, rec) in trace.records.iter().enumerate() {
        w.write_record([
            rec.t.to_string(),
            number(rec.eta),
            number(rec.nu_star),
            number(rec.expected_loss),
            number(trace.cum_expected_loss[k]),
            number(trace.benchmark[k]),
            number(trace.regret[k]),
            number(trace.per_round[k]),
            number(trace.bound_rhs[k]),
            number(rec.support_fraction),
            number(trace.benchmark_slack),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn summary(exp: &Experiment, done: &Completed) -> String {
    let trace = &done.trace;
    let t = trace.len();
    let mut s = String::new();
    let verdict = |n: usize| if n == 0 { "PASS".to_string() } else { format!("FAIL ({n} rounds)") };
    let _ = writeln!(s, "run: {}", exp.run_id());
    for label in &exp.label {
        let _ = writeln!(s, "sweep: {label}");
    }
    let _ = writeln!(s, "horizon: {t}");
    let _ = writeln!(s, "cells: {}", exp.domain.len());
    let _ = writeln!(s, "potential: {}", exp.potential.name());
    let _ = writeln!(s, "schedule: {:?}", exp.schedule);
    let _ = writeln!(s, "losses: {}", exp.losses.family.name());
    let _ = writeln!(s, "L_hat: {}", number(trace.l_hat));
    let _ = writeln!(s, "M_hat: {}", number(trace.m_hat));
    let _ = writeln!(
        s,
        "bound constants: L = {}, M = {} ({})",
        number(done.bound_lipschitz),
        number(done.bound_m),
        if done.pinned { "pinned" } else { "measured" }
    );
    match trace.fit(exp.fit_window) {
        Ok(slope) => {
            let _ = writeln!(
                s,
                "fitted exponent on [{}, {}]: {}",
                exp.fit_window.0,
                exp.fit_window.1,
                number(slope)
            );
        }
        Err(e) => {
            let _ = writeln!(s, "fitted exponent: n/a ({e})");
        }
    }
    let _ = writeln!(s, "final per_round: {}", number(trace.per_round[t - 1]));
    let _ = writeln!(s, "final bound_rhs: {}", number(trace.bound_rhs[t - 1]));
    let _ = writeln!(s, "bound domination: {}", verdict(trace.bound_violations().len()));
    let ell = exp.potential.convexity().ell;
    let uniform = trace.uniform_bound_violations(done.bound_m, ell, 1e-9).len();
    let _ = writeln!(s, "uniform-comparator bound: {}", verdict(uniform));
    let _ = writeln!(s, "benchmark_slack: {}", number(trace.benchmark_slack));
    let iterations: usize = trace.records.iter().map(|r| r.iterations).sum();
    let _ = writeln!(s, "bisection steps: {iterations}");
    s
}

/// Writes `trace.csv`, `summary.txt` and `config.toml` into `dir`.
pub fn write_outputs(exp: &Experiment, done: &Completed, dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_trace(&done.trace, &dir.join("trace.csv"))?;
    fs::write(dir.join("summary.txt"), summary(exp, done))?;
    fs::write(dir.join("config.toml"), &exp.echo)?;
    if done.trace.records.iter().any(|r| r.play.is_some()) {
        let mut w = csv::Writer::from_path(dir.join("plays.csv"))?;
        for rec in &done.trace.records {
            if let Some(p) = &rec.play {
                let mut row = vec![rec.t.to_string()];
                row.extend(p.iter().map(|v| number(*v)));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
    }
    Ok(())
}
