use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::{ExperimentConfig, Point, RawConfig};
use crate::error::CliError;
use crate::record::{emit_outputs, write_diagnostic, Artifact, ElementRecord, Outcome, RunRecord};
use crate::registry::Registry;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    /// Worker threads for sweeps; `None` uses every core.
    pub threads: Option<usize>,
    pub verify_only: bool,
}

/// A finished run: the record plus the artifacts still to be written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub record: RunRecord,
    pub artifacts: Vec<Artifact>,
}

fn element(label: String, prefix: &str, o: Outcome, artifacts: &mut Vec<Artifact>) -> Result<ElementRecord, CliError> {
    if let Some(m) = o.metrics.iter().find(|m| !m.value.is_finite()) {
        return Err(CliError::Numerical(format!("{label}: metric `{}` is not finite", m.name)));
    }
    let mut names = Vec::with_capacity(o.artifacts.len());
    for a in o.artifacts {
        let file = format!("{prefix}{}", a.file);
        names.push(file.clone());
        artifacts.push(Artifact { file, contents: a.contents });
    }
    Ok(ElementRecord { label, metrics: o.metrics, checks: o.checks, artifacts: names })
}

/// Resolves, validates and runs one experiment. Nothing is written to disk.
pub fn run_experiment(registry: &Registry, tag: &str, raw: &RawConfig, opts: &RunOptions) -> Result<RunOutput, CliError> {
    let exp = registry.get(tag)?;
    let cfg = ExperimentConfig::resolve(tag, raw, exp.params())?;
    let points = cfg.expand();
    for p in &points {
        exp.validate(p)?;
    }
    let start = Instant::now();
    let mut artifacts = Vec::new();
    let mut elements = Vec::new();
    if opts.verify_only {
        elements.push(element("verify".into(), "", exp.verify()?, &mut artifacts)?);
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
        let outcomes: Vec<Result<Outcome, CliError>> = pool.install(|| points.par_iter().map(|p| exp.run(p)).collect());
        let swept = cfg.swept_keys();
        let mut results: Vec<(Point, Outcome)> = Vec::with_capacity(points.len());
        for (p, o) in points.into_iter().zip(outcomes) {
            let o = o.map_err(|e| match e {
                CliError::Numerical(m) if !swept.is_empty() => CliError::Numerical(format!("{}: {m}", p.describe(&swept))),
                other => other,
            })?;
            results.push((p, o));
        }
        let aggregate = exp.aggregate(&results)?;
        let many = results.len() > 1;
        for (p, o) in results {
            let (label, prefix) = if many {
                (p.describe(&swept), format!("e{:02}_", p.index))
            } else {
                ("run".to_string(), String::new())
            };
            elements.push(element(label, &prefix, o, &mut artifacts)?);
        }
        if aggregate != Outcome::default() {
            elements.push(element("sweep".into(), "sweep_", aggregate, &mut artifacts)?);
        }
    }
    let passed = elements.iter().all(|e| e.checks.iter().all(|c| c.passed));
    let record = RunRecord {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: tag.to_string(),
        config_hash: cfg.hash(),
        config: cfg.canonical(),
        verify_only: opts.verify_only,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        elements,
        passed,
    };
    Ok(RunOutput { record, artifacts })
}

/// Runs and writes outputs, returning the process exit status: 0 when every
/// check passes, 2 for config errors, 3 for numerical failures or failed checks.
/// Failures leave a diagnostic file in `out`.
pub fn execute(registry: &Registry, tag: &str, raw: &RawConfig, out: &Path, opts: &RunOptions) -> (i32, Vec<PathBuf>) {
    let fail = |e: CliError| {
        let code = e.exit_code();
        eprintln!("error: {e}");
        match write_diagnostic(out, tag, &e) {
            Ok(p) => (code, vec![p]),
            Err(io) => {
                eprintln!("error: {io}");
                (code, Vec::new())
            }
        }
    };
    let run = match run_experiment(registry, tag, raw, opts) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let mut written = match emit_outputs(&run.record, &run.artifacts, out) {
        Ok(w) => w,
        Err(e) => return fail(e),
    };
    print!("{}", run.record.summary_table());
    if run.record.passed {
        return (0, written);
    }
    let failed: Vec<String> =
        run.record.failed_checks().iter().map(|(l, c)| format!("{l}: {} = {} ({})", c.name, c.value, c.limit)).collect();
    let e = CliError::Numerical(format!("failed checks: {}", failed.join("; ")));
    let (code, diag) = fail(e);
    written.extend(diag);
    (code, written)
}
