//! Acceptance gate: eight criteria covering the closed-form kernel battery,
//! Bernstein-Markov growth, the trace identity, the certified extremal
//! solver, the two-sided kernel/extremal bounds, the convergence-rate
//! envelope, the certificate-deviation envelope, and output determinism.
//!
//! Runs without the libtest harness so every criterion reports exactly one
//! PASS/FAIL line even after an earlier one fails; the process exits
//! nonzero if any criterion failed. All tolerances are pinned below.

use bergman_extremal::{
    circle_set, fit_rate, lp_phi_log, orthonormalize, phi_log, sandwich_check,
    section_space_dim, make_eval_grid, PhiOptions, ProjectivePoint, Scenario,
};
use bergman_extremal::extremal::phi_subsample_indices;
use bergman_extremal::kernel::raw_gram;
use rayon::prelude::*;
use std::f64::consts::LN_2;
use std::time::Instant;

// Criterion 1: circle battery at N = 4n + 8 nodes.
const GRAM_REL_TOL: f64 = 1e-12;
const LOG_VALUE_TOL: f64 = 1e-9;
const BATTERY_DEGREES: [usize; 6] = [2, 4, 8, 16, 32, 64];
const BATTERY_BUDGET_SECS: f64 = 10.0;

// Criterion 2: node-maximum constant growth.
const BM_CIRCLE_REL_TOL: f64 = 1e-6;
const BM_DEGREE_MAX: usize = 64;
const BM_INTERVAL_DEGREES: [usize; 4] = [4, 8, 16, 32];

// Criterion 3: trace identity.
const TRACE_REL_TOL: f64 = 1e-8;

// Criterion 4: extremal solver certification.
const PHI_VALUE_TOL: f64 = 1e-5;
const PHI_GAP_TOL: f64 = 1e-5;
const PHI_DEGREES: [usize; 3] = [4, 8, 16];
const LP_AGREE_TOL: f64 = 1e-4;
const LP_DEGREES: [usize; 3] = [2, 4, 6];
const LP_PHASES: usize = 32;
const PHI_BUDGET_SECS: f64 = 300.0;

// Criterion 5: two-sided bounds.
const SANDWICH_SLACK: f64 = 1e-6;
const SANDWICH_DEGREES: [usize; 5] = [0, 2, 4, 8, 16];
const EQUALITY_TOL: f64 = 1e-9;

// Criterion 6: rate envelope.
const RATE_DEGREES: [usize; 4] = [8, 16, 32, 64];
const RATE_WINDOW: (f64, f64) = (0.1, 3.0);
const RATE_R2_MIN: f64 = 0.95;
const CIRCLE_C_WINDOW: (f64, f64) = (0.3, 0.8);
const RATE_BUDGET_SECS: f64 = 600.0;

// Criterion 7: certificate deviation envelope.
const DEV_ENVELOPE_SLACK: f64 = 1e-5;
const DEV_DEGREES: [usize; 3] = [4, 8, 16];

const ALL_SCENARIOS: [Scenario; 3] = [Scenario::Circle, Scenario::Interval, Scenario::AnnulusPair];

fn solver_opts() -> PhiOptions {
    PhiOptions {
        tol: 1e-6,
        max_iter: 2000,
    }
}

fn budget_line(elapsed: f64, budget: f64) -> String {
    format!("{elapsed:.1}s of {budget:.0}s budget")
}

/// Closed-form kernel battery on the unit circle: diagonal monomial Gram
/// with entries 2^-n, kernel diagonal 2^n at the origin and n + 1 on the
/// set, for n in {2, 4, 8, 16, 32, 64} at N = 4n + 8 nodes, within budget.
fn criterion_1() -> Result<String, String> {
    let start = Instant::now();
    let mut worst_gram = 0.0f64;
    let mut worst_value = 0.0f64;
    for &n in &BATTERY_DEGREES {
        let set = circle_set(4 * n + 8, 1.0).map_err(|e| e.to_string())?;

        let g = raw_gram(&set, n);
        let scale = 0.5f64.powi(n as i32);
        for j in 0..=n {
            for k in 0..=n {
                let expect = if j == k { scale } else { 0.0 };
                let rel = (g[(j, k)] - expect).norm() / scale;
                worst_gram = worst_gram.max(rel);
                if rel > GRAM_REL_TOL {
                    return Err(format!(
                        "Gram entry ({j},{k}) at degree {n} off by {rel:.3e} relative \
                         (tol {GRAM_REL_TOL:.0e})"
                    ));
                }
            }
        }

        let sections = orthonormalize(&set, n).map_err(|e| e.to_string())?;
        let origin_dev = (sections.bergman_log(&ProjectivePoint::origin()) - n as f64 * LN_2).abs();
        worst_value = worst_value.max(origin_dev);
        if origin_dev > LOG_VALUE_TOL {
            return Err(format!(
                "kernel at origin off by {origin_dev:.3e} log-units at degree {n} \
                 (tol {LOG_VALUE_TOL:.0e})"
            ));
        }
        let expect = ((n + 1) as f64).ln();
        for (k, &v) in sections.node_bergman_log().iter().enumerate() {
            let dev = (v - expect).abs();
            worst_value = worst_value.max(dev);
            if dev > LOG_VALUE_TOL {
                return Err(format!(
                    "kernel at node {k} off by {dev:.3e} log-units at degree {n} \
                     (tol {LOG_VALUE_TOL:.0e})"
                ));
            }
        }
        // The diagonal is constant on the whole circle, not just the nodes.
        for theta in [0.3f64, 1.1, 2.7] {
            let p = ProjectivePoint::from_zero_chart(num_complex::Complex64::from_polar(1.0, theta));
            let dev = (sections.bergman_log(&p) - expect).abs();
            worst_value = worst_value.max(dev);
            if dev > LOG_VALUE_TOL {
                return Err(format!(
                    "kernel at angle {theta} off by {dev:.3e} log-units at degree {n} \
                     (tol {LOG_VALUE_TOL:.0e})"
                ));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed > BATTERY_BUDGET_SECS {
        return Err(format!(
            "battery exceeded budget: {}",
            budget_line(elapsed, BATTERY_BUDGET_SECS)
        ));
    }
    Ok(format!(
        "max Gram deviation {worst_gram:.2e} rel, max kernel deviation {worst_value:.2e} \
         log-units, {}",
        budget_line(elapsed, BATTERY_BUDGET_SECS)
    ))
}

/// Node-maximum constant: M_n = n + 1 on the circle (1e-6 relative,
/// n <= 64); M_n <= 4n on the segment for n in {4, 8, 16, 32}; and the
/// quadratic growth cap M_n <= n^2 on both scenarios for 2 <= n <= 64.
fn criterion_2() -> Result<String, String> {
    let mut failures: Vec<String> = Vec::new();
    let mut circle_worst = 0.0f64;
    let mut circle_bm = vec![0.0f64; BM_DEGREE_MAX + 1];
    let mut interval_bm = vec![0.0f64; BM_DEGREE_MAX + 1];

    for n in 1..=BM_DEGREE_MAX {
        let set = Scenario::Circle
            .build(Scenario::Circle.default_node_count(n))
            .map_err(|e| e.to_string())?;
        let sections = orthonormalize(&set, n).map_err(|e| e.to_string())?;
        circle_bm[n] = sections.bm_constant_log().0;
        let rel = (circle_bm[n] - ((n + 1) as f64).ln()).exp_m1().abs();
        circle_worst = circle_worst.max(rel);
        if rel > BM_CIRCLE_REL_TOL {
            failures.push(format!("circle M_{n} off by {rel:.3e} relative"));
        }
    }
    for n in 2..=BM_DEGREE_MAX {
        let set = Scenario::Interval
            .build(Scenario::Interval.default_node_count(n))
            .map_err(|e| e.to_string())?;
        let sections = orthonormalize(&set, n).map_err(|e| e.to_string())?;
        interval_bm[n] = sections.bm_constant_log().0;
    }

    for &n in &BM_INTERVAL_DEGREES {
        let m = interval_bm[n].exp();
        if m > 4.0 * n as f64 {
            failures.push(format!("interval M_{n} = {m:.4} exceeds 4n = {}", 4 * n));
        }
    }
    for n in 2..=BM_DEGREE_MAX {
        let cap = 2.0 * (n as f64).ln();
        if circle_bm[n] > cap + 1e-12 {
            failures.push(format!(
                "circle M_{n} = {:.4} exceeds n^2 = {}",
                circle_bm[n].exp(),
                n * n
            ));
        }
        if interval_bm[n] > cap + 1e-12 {
            failures.push(format!(
                "interval M_{n} = {:.4} exceeds n^2 = {}",
                interval_bm[n].exp(),
                n * n
            ));
        }
    }

    if failures.is_empty() {
        Ok(format!(
            "circle max deviation {circle_worst:.2e} rel; segment bound and quadratic cap hold \
             for 2 <= n <= {BM_DEGREE_MAX}"
        ))
    } else {
        Err(format!(
            "{} violation(s): {}",
            failures.len(),
            failures.join("; ")
        ))
    }
}

/// Trace identity: the mass-weighted trace of the kernel diagonal equals
/// the section count n + 1 to 1e-8 relative on all three scenarios for
/// n <= 64.
fn criterion_3() -> Result<String, String> {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for &scenario in &ALL_SCENARIOS {
        for n in 0..=BM_DEGREE_MAX {
            let set = scenario
                .build(scenario.default_node_count(n))
                .map_err(|e| e.to_string())?;
            let sections = orthonormalize(&set, n).map_err(|e| e.to_string())?;
            let rel = (sections.weighted_trace_log() - (((n + 1) as f64).ln()))
                .exp_m1()
                .abs();
            if rel >= worst {
                worst = rel;
                worst_at = format!("{} degree {n}", scenario.name());
            }
            if rel > TRACE_REL_TOL {
                return Err(format!(
                    "trace off by {rel:.3e} relative at {} degree {n} (tol {TRACE_REL_TOL:.0e})",
                    scenario.name()
                ));
            }
        }
    }
    Ok(format!(
        "max relative deviation {worst:.2e} at {worst_at} (tol {TRACE_REL_TOL:.0e})"
    ))
}

/// Extremal solver certification on the circle: value (n/2) ln 2 at the
/// origin and 0 on the set to 1e-5, bracket width <= 1e-5, for
/// n in {4, 8, 16}; independent linear-program agreement to 1e-4 for
/// n in {2, 4, 6}; all within budget.
fn criterion_4() -> Result<String, String> {
    let start = Instant::now();
    let opts = solver_opts();
    let mut worst_dev = 0.0f64;
    let mut worst_gap = 0.0f64;

    for &n in &PHI_DEGREES {
        let set = Scenario::Circle
            .build(Scenario::Circle.default_node_count(n))
            .map_err(|e| e.to_string())?;

        let mut probes = vec![(ProjectivePoint::origin(), 0.5 * n as f64 * LN_2, "origin")];
        let nodes = set.points();
        probes.push((nodes[0], 0.0, "node 0"));
        probes.push((nodes[nodes.len() / 3], 0.0, "node N/3"));

        for (p, expect, label) in probes {
            let r = phi_log(&set, n, &p, &opts).map_err(|e| e.to_string())?;
            let dev = (r.log_phi - expect)
                .abs()
                .max((r.log_phi_primal - expect).abs());
            worst_dev = worst_dev.max(dev);
            worst_gap = worst_gap.max(r.final_gap);
            if !r.converged || dev > PHI_VALUE_TOL || r.final_gap > PHI_GAP_TOL {
                return Err(format!(
                    "degree {n} {label}: dev {dev:.3e} (tol {PHI_VALUE_TOL:.0e}), gap \
                     {:.3e} (tol {PHI_GAP_TOL:.0e}), converged {}",
                    r.final_gap, r.converged
                ));
            }
        }
    }

    let mut worst_lp = 0.0f64;
    for &n in &LP_DEGREES {
        let set = Scenario::Circle
            .build(Scenario::Circle.default_node_count(n))
            .map_err(|e| e.to_string())?;
        for (p, label) in [
            (ProjectivePoint::origin(), "origin"),
            (set.points()[0], "node 0"),
        ] {
            let r = phi_log(&set, n, &p, &opts).map_err(|e| e.to_string())?;
            let lp = lp_phi_log(&set, n, &p, LP_PHASES).map_err(|e| e.to_string())?;
            let diff = (lp.log_value - r.log_phi).abs();
            worst_lp = worst_lp.max(diff);
            if diff > LP_AGREE_TOL {
                return Err(format!(
                    "degree {n} {label}: solver and linear program disagree by {diff:.3e} \
                     (tol {LP_AGREE_TOL:.0e})"
                ));
            }
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    if elapsed > PHI_BUDGET_SECS {
        return Err(format!(
            "solver battery exceeded budget: {}",
            budget_line(elapsed, PHI_BUDGET_SECS)
        ));
    }
    Ok(format!(
        "max value deviation {worst_dev:.2e}, max bracket {worst_gap:.2e}, max LP \
         disagreement {worst_lp:.2e}, {}",
        budget_line(elapsed, PHI_BUDGET_SECS)
    ))
}

/// Two-sided bounds at every solver grid point of every scenario for
/// n in {0, 2, 4, 8, 16}, with slack 1e-6; at degree 0 the bounds collapse
/// to equalities.
fn criterion_5() -> Result<String, String> {
    let opts = solver_opts();
    let grid = make_eval_grid(6, 16);
    let idx = phi_subsample_indices(grid.len());
    let mut min_margin = f64::INFINITY;
    let mut checked = 0usize;

    for &scenario in &ALL_SCENARIOS {
        for &n in &SANDWICH_DEGREES {
            let set = scenario
                .build(scenario.default_node_count(n))
                .map_err(|e| e.to_string())?;
            let sections = orthonormalize(&set, n).map_err(|e| e.to_string())?;

            let results: Vec<Result<(usize, _), String>> = idx
                .par_iter()
                .map(|&k| {
                    phi_log(&set, n, &grid[k], &opts)
                        .map(|r| (k, r))
                        .map_err(|e| e.to_string())
                })
                .collect();

            for item in results {
                let (k, r) = item?;
                let b = sections.bergman_log(&grid[k]);
                let sw = sandwich_check(&set, &sections, b, &r, SANDWICH_SLACK);
                checked += 1;
                min_margin = min_margin.min(sw.lower_margin).min(sw.upper_margin);
                if !(sw.lower_ok && sw.upper_ok) {
                    return Err(format!(
                        "{} degree {n} grid point {k}: margins {:.3e}, {:.3e} \
                         (slack {SANDWICH_SLACK:.0e})",
                        scenario.name(),
                        sw.lower_margin,
                        sw.upper_margin
                    ));
                }
                if n == 0 {
                    let eq = sw
                        .ratio_log
                        .abs()
                        .max(sw.lower_envelope_log.abs())
                        .max(sw.upper_envelope_log.abs());
                    if eq > EQUALITY_TOL {
                        return Err(format!(
                            "{} degree 0 grid point {k}: bounds not equalities, deviation \
                             {eq:.3e} (tol {EQUALITY_TOL:.0e})",
                            scenario.name()
                        ));
                    }
                }
            }
        }
    }
    Ok(format!(
        "{checked} points checked, min margin {min_margin:.3e} (slack {SANDWICH_SLACK:.0e}), \
         degree-0 bounds are equalities"
    ))
}

/// Rate envelope: E_n * n / ln n stays in [0.1, 3.0] for n in
/// {8, 16, 32, 64} on both oracle scenarios, the through-origin fit of
/// E_n against ln(n)/n reaches R^2 >= 0.95, and the circle coefficient
/// lands in [0.3, 0.8]; all within budget.
fn criterion_6() -> Result<String, String> {
    let start = Instant::now();
    let grid = make_eval_grid(6, 16);
    let mut detail = Vec::new();

    for &scenario in &[Scenario::Circle, Scenario::Interval] {
        let mut samples = Vec::new();
        for &n in &RATE_DEGREES {
            let set = scenario
                .build(scenario.default_node_count(n))
                .map_err(|e| e.to_string())?;
            let sections = orthonormalize(&set, n).map_err(|e| e.to_string())?;
            let summary =
                bergman_extremal::degree_summary(scenario, &set, &sections, &grid, None)
                    .map_err(|e| e.to_string())?;
            let e_n = summary
                .sup_error
                .ok_or_else(|| format!("{} has no oracle", scenario.name()))?;
            let scaled = e_n * n as f64 / (n as f64).ln();
            if !(RATE_WINDOW.0..=RATE_WINDOW.1).contains(&scaled) {
                return Err(format!(
                    "{} degree {n}: E_n n / ln n = {scaled:.3} outside [{}, {}]",
                    scenario.name(),
                    RATE_WINDOW.0,
                    RATE_WINDOW.1
                ));
            }
            samples.push((n, e_n, summary.bm_constant_log));
        }
        let fit = fit_rate(&samples).ok_or("rate fit degenerate")?;
        if fit.r_squared < RATE_R2_MIN {
            return Err(format!(
                "{}: R^2 = {:.4} below {RATE_R2_MIN}",
                scenario.name(),
                fit.r_squared
            ));
        }
        if scenario == Scenario::Circle
            && !(CIRCLE_C_WINDOW.0..=CIRCLE_C_WINDOW.1).contains(&fit.c)
        {
            return Err(format!(
                "circle: c = {:.4} outside [{}, {}]",
                fit.c, CIRCLE_C_WINDOW.0, CIRCLE_C_WINDOW.1
            ));
        }
        detail.push(format!(
            "{}: c = {:.3}, R^2 = {:.4}",
            scenario.name(),
            fit.c,
            fit.r_squared
        ));
    }

    let elapsed = start.elapsed().as_secs_f64();
    if elapsed > RATE_BUDGET_SECS {
        return Err(format!(
            "rate study exceeded budget: {}",
            budget_line(elapsed, RATE_BUDGET_SECS)
        ));
    }
    Ok(format!(
        "{}; window [{}, {}] held at n in {:?}; {}",
        detail.join("; "),
        RATE_WINDOW.0,
        RATE_WINDOW.1,
        RATE_DEGREES,
        budget_line(elapsed, RATE_BUDGET_SECS)
    ))
}

/// Certificate deviation envelope: at every grid point where the solver
/// certified, both certificates satisfy
/// |(1/2n) log B_n - (1/n) log Phi_n| <= ln(M_n (n+1)) / (2n) + 1e-5.
fn criterion_7() -> Result<String, String> {
    let opts = solver_opts();
    let grid = make_eval_grid(6, 16);
    let idx = phi_subsample_indices(grid.len());
    let mut certified = 0usize;
    let mut uncertified = 0usize;
    let mut worst_slack = f64::NEG_INFINITY;

    for &scenario in &ALL_SCENARIOS {
        for &n in &DEV_DEGREES {
            let set = scenario
                .build(scenario.default_node_count(n))
                .map_err(|e| e.to_string())?;
            let sections = orthonormalize(&set, n).map_err(|e| e.to_string())?;
            let envelope =
                (sections.bm_constant_log().0 + (section_space_dim(n) as f64).ln())
                    / (2.0 * n as f64);

            let results: Vec<Result<(usize, _), String>> = idx
                .par_iter()
                .map(|&k| {
                    phi_log(&set, n, &grid[k], &opts)
                        .map(|r| (k, r))
                        .map_err(|e| e.to_string())
                })
                .collect();

            let mut certified_here = 0usize;
            for item in results {
                let (k, r) = item?;
                if !r.converged {
                    uncertified += 1;
                    continue;
                }
                certified += 1;
                certified_here += 1;
                let half = sections.bergman_log(&grid[k]) / (2.0 * n as f64);
                let dev = (half - r.log_phi / n as f64)
                    .abs()
                    .max((half - r.log_phi_primal / n as f64).abs());
                worst_slack = worst_slack.max(dev - envelope);
                if dev > envelope + DEV_ENVELOPE_SLACK {
                    return Err(format!(
                        "{} degree {n} grid point {k}: deviation {dev:.6} exceeds envelope \
                         {envelope:.6} + {DEV_ENVELOPE_SLACK:.0e}",
                        scenario.name()
                    ));
                }
            }
            if certified_here == 0 {
                return Err(format!(
                    "{} degree {n}: no certified solver point (vacuous check)",
                    scenario.name()
                ));
            }
        }
    }
    Ok(format!(
        "{certified} certified points within envelope (worst head-room {:.3e}), \
         {uncertified} uncertified runs excluded",
        -worst_slack
    ))
}

/// Determinism: two runs of the command-line binary with thread counts 1
/// and 8 produce byte-identical CSV outputs.
fn criterion_8() -> Result<String, String> {
    let exe = env!("CARGO_BIN_EXE_bergman-extremal");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{"scenario": "circle", "degrees": [2, 4, 8], "grid": {"radial": 4, "angular": 8}, "nodes": 64}"#,
    )
    .map_err(|e| e.to_string())?;

    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        let status = std::process::Command::new(exe)
            .args(["run", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(&out_dir)
            .args(["--threads", threads])
            .stdout(std::process::Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("run with {threads} thread(s) exited {status}"));
        }
        let conv = std::fs::read(out_dir.join("convergence.csv")).map_err(|e| e.to_string())?;
        let dump = std::fs::read(out_dir.join("grid_dump.csv")).map_err(|e| e.to_string())?;
        outputs.push((conv, dump));
    }

    if outputs[0].0 != outputs[1].0 {
        return Err("convergence.csv differs between 1 and 8 threads".into());
    }
    if outputs[0].1 != outputs[1].1 {
        return Err("grid_dump.csv differs between 1 and 8 threads".into());
    }
    Ok(format!(
        "convergence.csv ({} bytes) and grid_dump.csv ({} bytes) byte-identical across \
         thread counts 1 and 8",
        outputs[0].0.len(),
        outputs[0].1.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Result<String, String>); 8] = [
        ("criterion 1 (closed-form kernel battery)", criterion_1),
        ("criterion 2 (node-maximum growth)", criterion_2),
        ("criterion 3 (trace identity)", criterion_3),
        ("criterion 4 (certified extremal solver)", criterion_4),
        ("criterion 5 (two-sided bounds)", criterion_5),
        ("criterion 6 (rate envelope)", criterion_6),
        ("criterion 7 (deviation envelope)", criterion_7),
        ("criterion 8 (determinism)", criterion_8),
    ];

    let mut failed = 0usize;
    for (name, f) in criteria {
        match std::panic::catch_unwind(f) {
            Ok(Ok(detail)) => println!("{name}: PASS ({detail})"),
            Ok(Err(detail)) => {
                println!("{name}: FAIL ({detail})");
                failed += 1;
            }
            Err(p) => {
                let msg = p
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| p.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "opaque panic".into());
                println!("{name}: FAIL (panicked: {msg})");
                failed += 1;
            }
        }
    }

    if failed > 0 {
        eprintln!("acceptance: {failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria passed", criteria.len());
}
