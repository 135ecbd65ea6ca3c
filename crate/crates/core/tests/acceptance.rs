//! One PASS/FAIL line per acceptance criterion, each backed by the default
//! configuration of the matching suite. Exits nonzero if any line fails.

use bachflow_core::cli_reports::{run_suite, ExperimentConfig, SuiteReport};
use std::time::{Duration, Instant};

struct Outcome {
    report: SuiteReport,
    elapsed: Duration,
}

fn run(suite: &str) -> Result<Outcome, String> {
    let start = Instant::now();
    let run = run_suite(&ExperimentConfig::for_suite(suite)).map_err(|e| format!("{suite}: {e}"))?;
    Ok(Outcome { report: run.report, elapsed: start.elapsed() })
}

fn summary(report: &SuiteReport, filter: impl Fn(&str) -> bool) -> (bool, String) {
    let checks: Vec<_> = report.checks.iter().filter(|c| filter(&c.id)).collect();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.id.as_str()).collect();
    let pass = !checks.is_empty() && failed.is_empty();
    let detail = if failed.is_empty() {
        format!("{} checks", checks.len())
    } else {
        format!("{} of {} checks failed: {}", failed.len(), checks.len(), failed.join(", "))
    };
    (pass, detail)
}

fn line(number: usize, title: &str, result: Result<(bool, String), String>) -> bool {
    let (pass, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    println!("criterion {number} ({title}): {} [{detail}]", if pass { "PASS" } else { "FAIL" });
    pass
}

fn timed(o: &Outcome, limit: Option<Duration>, filter: impl Fn(&str) -> bool) -> (bool, String) {
    let (mut pass, mut detail) = summary(&o.report, filter);
    detail.push_str(&format!(", {:.2?}", o.elapsed));
    if let Some(l) = limit {
        if o.elapsed > l {
            pass = false;
            detail.push_str(&format!(" exceeds {l:?}"));
        }
    }
    (pass, detail)
}

fn main() {
    let all = |_: &str| true;
    let mut ok = true;

    ok &= line(1, "indicial table", run("indicial-table").map(|o| timed(&o, Some(Duration::from_secs(1)), all)));
    ok &= line(2, "threshold constants and half-plane scan", run("indicial-scan").map(|o| timed(&o, Some(Duration::from_secs(60)), all)));
    ok &= line(3, "sphere trace kernel", run("sphere-kernel").map(|o| timed(&o, None, all)));
    ok &= line(
        4,
        "torus spectrum and flow",
        run("torus-modes").and_then(|m| {
            let f = run("torus-flow")?;
            let (pm, dm) = timed(&m, None, all);
            let (pf, df) = timed(&f, None, all);
            Ok((pm && pf, format!("modes: {dm}; flow: {df}")))
        }),
    );
    ok &= line(5, "identity suite", run("identities").map(|o| timed(&o, Some(Duration::from_secs(600)), all)));
    ok &= line(6, "nonpositivity sampling", run("spectra").map(|o| timed(&o, None, all)));
    let lin = run("linearization");
    ok &= line(
        7,
        "self-adjointness and gauge dependence",
        lin.as_ref().map(|o| timed(o, None, |id| !id.ends_with(".order"))).map_err(Clone::clone),
    );
    ok &= line(8, "linearization oracle", lin.as_ref().map(|o| timed(o, None, |id| id.ends_with(".order"))).map_err(Clone::clone));
    ok &= line(9, "nonlinear torus flow", run("nonlinear-flow").map(|o| timed(&o, None, all)));

    if !ok {
        std::process::exit(1);
    }
}
