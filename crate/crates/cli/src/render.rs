//! Aligned-text rendering of reports.

use dualinspect::{EstimateReport, Method, StudyReport};

pub fn estimate_table(report: &EstimateReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("method: {}\n", report.method));
    out.push_str(&format!("m: {}\n", report.m));
    out.push_str(&format!("alpha: {}\n", report.alpha));
    out.push_str(&format!(
        "{:<8}{:>12}{:>12}{:>12}{:>12}\n",
        "", "estimate", "std.err", "ci.lower", "ci.upper"
    ));
    let rows = [
        ("lambda", report.estimates.lambda, report.standard_errors.lambda, report.ci.lambda),
        ("p1", report.estimates.p1, report.standard_errors.p1, report.ci.p1),
        ("p2", report.estimates.p2, report.standard_errors.p2, report.ci.p2),
    ];
    for (name, est, se, ci) in rows {
        out.push_str(&format!(
            "{name:<8}{est:>12.6}{se:>12.6}{:>12.6}{:>12.6}\n",
            ci[0], ci[1]
        ));
    }
    if !report.flags.is_empty() {
        out.push_str(&format!("flags: {}\n", report.flags.join(",")));
    }
    if let Some(solver) = &report.solver {
        out.push_str(&format!(
            "solver: iterations={} residuals=[{:.2e}, {:.2e}, {:.2e}]\n",
            solver.iterations, solver.residuals[0], solver.residuals[1], solver.residuals[2]
        ));
    }
    out.pop();
    out
}

pub fn study_table(report: &StudyReport) -> String {
    let mut out = String::new();
    let c = &report.config;
    out.push_str(&format!(
        "study: lambda={} p1={} p2={} m={} replicates={} seed={}\n",
        c.params.lambda(),
        c.params.p1(),
        c.params.p2(),
        c.m,
        c.replicates,
        c.seed.0
    ));
    out.push_str(&format!(
        "{:<20}{:>10}{:>10}{:>12}{:>12}{:>12}{:>12}\n",
        "method", "ok", "failed", "mean(l)", "std(l)", "mean(p1)", "mean(p2)"
    ));
    for s in &report.methods {
        let failed: usize = s.failures.values().sum();
        let fmt = |v: Option<f64>| match v {
            Some(x) => format!("{x:>12.4}"),
            None => format!("{:>12}", "-"),
        };
        out.push_str(&format!(
            "{:<20}{:>10}{:>10}{}{}{}{}\n",
            method_name(s.method),
            s.successes,
            failed,
            fmt(s.mean.map(|t| t.lambda)),
            fmt(s.std.map(|t| t.lambda)),
            fmt(s.mean.map(|t| t.p1)),
            fmt(s.mean.map(|t| t.p2)),
        ));
        for (kind, count) in &s.failures {
            out.push_str(&format!("    {kind}: {count}\n"));
        }
    }
    if let Some(h) = &report.head_to_head {
        out.push_str(&format!(
            "ml closer to truth than moment: {:.1}% of {} replicates\n",
            100.0 * h.ml_better_fraction,
            h.both_succeeded
        ));
    }
    out.pop();
    out
}

fn method_name(method: Method) -> &'static str {
    match method {
        Method::Moment => "moment",
        Method::Mle => "mle",
        Method::CaptureRecapture => "capture_recapture",
    }
}
