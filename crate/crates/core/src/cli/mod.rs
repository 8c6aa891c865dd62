//! Batch driver: configuration, suite execution and report output.

mod config;
mod report;
mod suites;

use std::collections::BTreeMap;
use std::time::Instant;

pub use config::{parse_config_text, parse_point, ConfigError, Format, HprojAction, RunConfig, Suite};
pub use report::{emit, fmt_f64, Check, ConfigEcho, Kind, Report, SuiteResult, Table, SCHEMA_VERSION};

/// Runs the selected suites (concurrently) and assembles the report in dependency order.
pub fn run(cfg: &RunConfig) -> Report {
    let results = crate::par::map(&cfg.suites, |&s| {
        let t = Instant::now();
        let r = suites::run_suite(cfg, s);
        (r, t.elapsed().as_secs_f64() * 1e3)
    });
    let timing_ms = cfg.timing.then(|| results.iter().map(|(r, ms)| (r.suite.clone(), fmt_f64(*ms))).collect::<BTreeMap<_, _>>());
    let p = &cfg.params;
    Report {
        schema_version: SCHEMA_VERSION,
        config: ConfigEcho {
            n: p.n(),
            k: p.k().to_string(),
            hbar: p.hbar().to_string(),
            cutoff: cfg.cutoff,
            measure: cfg.measure.to_string(),
            tol: fmt_f64(cfg.tol),
            seed: cfg.seed,
        },
        suites: results.into_iter().map(|(r, _)| r).collect(),
        timing_ms,
    }
}
