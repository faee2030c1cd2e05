//! Acceptance battery: one PASS/FAIL line per criterion.
//!
//! Thresholds are pinned here as literals and checked against the values
//! the library suite reports, so a change to the library defaults cannot
//! loosen a criterion silently. Built without the test harness so the
//! lines always reach stdout.

use std::process::Command;
use std::time::Instant;

use mglab::suite::{run_suite, CriterionReport, SuiteOptions, CRITERIA};
use mglab::tolerances::{Tolerances, RUNTIME_BUDGET};

enum Req {
    Below(f64),
    AtLeast(f64),
    Above(f64),
    Band(f64, f64),
    True,
}

/// (criterion, check name or `prefix*`, pinned requirement)
const PINNED: &[(u8, &str, Req)] = &[
    (1, "max_exact_error", Req::Below(1e-9)),
    (1, "max_fd_error", Req::Below(1e-6)),
    (2, "sinh_relative_error", Req::Below(1e-8)),
    (2, "power_supersolution_defect", Req::AtLeast(-1e-10)),
    (3, "catenoid_max_error", Req::Below(1e-8)),
    (3, "mse_residual_ratio.*", Req::Band(3.0, 5.0)),
    (3, "jacobi_residual_ratio.*", Req::Band(3.0, 5.0)),
    (3, "flux_drift", Req::Below(1e-9)),
    (4, "canonical_feasible_pairs", Req::AtLeast(9.0)),
    (4, "identity_a3_eq_2a2", Req::Below(1e-12)),
    (4, "identity_a0_gamma", Req::Below(1e-12)),
    (4, "catenoid_sub_ball_log_margin", Req::Above(0.0)),
    (4, "kw_t_graph_log_margin", Req::Above(0.0)),
    (4, "entire_vs_corollary_limit", Req::Below(1e-6)),
    (4, "optimizer_minus_canonical_log", Req::Below(1e-12)),
    (5, "mass_drift", Req::Below(1e-8)),
    (5, "kernel_relative_error", Req::Below(1e-3)),
    (5, "supersolution.*", Req::Below(1e-10 + f64::EPSILON)),
    (5, "ball_average_gap_at_100", Req::Below(0.02)),
    (5, "lap_average_ratio.*", Req::Below(0.1)),
    (5, "lhopital.*", Req::AtLeast(0.0)),
    (6, "c0_vs_closed_form", Req::Below(1e-8)),
    (6, "gamma_in_band", Req::True),
    (6, "c1_prime_below_one_minus_gamma", Req::True),
    (7, "eta_prime_min_minus_half", Req::Above(0.0)),
    (7, "eta_prime_max", Req::Band(0.5, 1.0)),
    (7, "eta_prime_decreasing", Req::True),
    (7, "f_min_minus_c", Req::AtLeast(0.0)),
    (7, "ricci_min", Req::Above(0.0)),
    (7, "t_graph_residual", Req::Below(1e-10)),
    (7, "sup_du", Req::Band(0.0, f64::MAX)),
    (7, "kappa_bar", Req::Band(0.0, f64::MAX)),
    (8, "log_annulus_margin", Req::AtLeast(0.0)),
    (8, "catenoid_operator_margin", Req::AtLeast(0.0)),
    (9, "certificate_parallel_equals_sequential", Req::True),
    (9, "optimizer_repeatable", Req::True),
    (9, "heat_evolution_repeatable", Req::True),
];

fn satisfies(req: &Req, v: f64) -> bool {
    match *req {
        Req::Below(x) => v < x,
        Req::AtLeast(x) => v >= x,
        Req::Above(x) => v > x,
        Req::Band(lo, hi) => v >= lo && v <= hi,
        Req::True => v == 1.0,
    }
}

/// Failures of one criterion against the pinned table.
fn pinned_failures(c: &CriterionReport) -> Vec<String> {
    let mut out = Vec::new();
    for (id, pattern, req) in PINNED.iter().filter(|p| p.0 == c.id) {
        let matched: Vec<_> = match pattern.strip_suffix('*') {
            Some(prefix) => c.checks.iter().filter(|k| k.name.starts_with(prefix)).collect(),
            None => c.checks.iter().filter(|k| k.name == *pattern).collect(),
        };
        if matched.is_empty() {
            out.push(format!("criterion {id}: no check named {pattern}"));
        }
        for k in matched {
            if !satisfies(req, k.value) {
                out.push(format!("{}: {} = {:e}", c.id, k.name, k.value));
            }
        }
    }
    for k in c.checks.iter().filter(|k| k.asserted && !k.passed) {
        out.push(format!("{}: {} = {:e} (requires {})", c.id, k.name, k.value, k.requirement));
    }
    out
}

/// Runs `mglab suite --quick` and returns the `report` member.
fn cli_quick_report(dir: &std::path::Path, tag: &str) -> (i32, String) {
    let out = dir.join(format!("suite-{tag}.json"));
    let status = Command::new(env!("CARGO_BIN_EXE_mglab"))
        .args(["suite", "--quick", "--out"])
        .arg(&out)
        .output()
        .expect("binary runs");
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).expect("report written")).expect("json");
    (status.status.code().unwrap_or(-1), serde_json::to_string(&doc["report"]).unwrap())
}

fn main() {
    let pinned_defaults = Tolerances {
        curvature_exact: 1e-9,
        curvature_fd: 1e-6,
        ode_relative: 1e-8,
        supersolution_defect: -1e-10,
        catenoid_abs: 1e-8,
        order_ratio: 4.0,
        order_band: 0.25,
        flux_drift: 1e-9,
        identity_relative: 1e-12,
        entire_limit: 1e-6,
        mass_drift: 1e-8,
        kernel_relative: 1e-3,
        monotone: 1e-10,
        ball_average: 0.02,
        lap_average_ratio: 0.1,
        appendix_c0: 1e-8,
        t_graph_residual: 1e-10,
    };
    let defaults_ok = Tolerances::default() == pinned_defaults;
    let budgets_ok = RUNTIME_BUDGET == [1.0, 1.0, 5.0, 10.0, 60.0, 1.0, 30.0, 2.0, 120.0];

    let opts = SuiteOptions { quick: false, workers: 4, tolerances: pinned_defaults };
    let start = Instant::now();
    let run = run_suite(&CRITERIA, &opts).expect("suite runs");
    let wall = start.elapsed().as_secs_f64();

    let dir = tempfile::tempdir().unwrap();
    let (code_a, first) = cli_quick_report(dir.path(), "a");
    let (code_b, second) = cli_quick_report(dir.path(), "b");

    let mut failures = Vec::new();
    for c in &run.report.criteria {
        let mut f = pinned_failures(c);
        let t = run.timings.iter().find(|t| t.id == c.id).unwrap();
        if t.seconds >= RUNTIME_BUDGET[(c.id - 1) as usize] {
            f.push(format!("{}: {:.3} s over budget", c.id, t.seconds));
        }
        if c.id == 9 {
            if first != second {
                f.push("9: suite --quick reports differ between runs".into());
            }
            if code_a != 0 || code_b != 0 {
                f.push(format!("9: suite --quick exit codes {code_a}, {code_b}"));
            }
            if wall >= 120.0 {
                f.push(format!("9: full suite took {wall:.1} s"));
            }
        }
        println!(
            "criterion {}: {} ({}, {:.3} s){}",
            c.id,
            if f.is_empty() { "PASS" } else { "FAIL" },
            c.title,
            t.seconds,
            if f.is_empty() { String::new() } else { format!(" [{}]", f.join("; ")) }
        );
        failures.extend(f);
    }
    println!("full suite wall time: {wall:.3} s");
    if !defaults_ok {
        failures.push("library tolerance defaults differ from the pinned acceptance values".into());
    }
    if !budgets_ok {
        failures.push("runtime budgets differ from the pinned values".into());
    }
    if run.report.criteria.len() != 9 || !run.report.passed {
        failures.push("suite did not report nine passing criteria".into());
    }
    if !failures.is_empty() {
        eprintln!("acceptance failures: {failures:#?}");
        std::process::exit(1);
    }
    println!("acceptance: all criteria pass");
}
