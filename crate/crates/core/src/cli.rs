//! Command-line front end: configuration schema, run orchestration, and
//! the output writers.
//!
//! Output layout for `run`:
//!
//! * `convergence.csv` — one row per degree with the kernel diagnostics and
//!   extremal-solver certificates;
//! * `grid_dump.csv` — pointwise kernel values on the evaluation grid at
//!   the largest degree;
//! * `summary.json` — run metadata, the fitted convergence rate, and wall
//!   times. Wall times appear only here so the CSV outputs are
//!   byte-reproducible across thread counts.

use crate::error::{Error, Result};
use crate::extremal::{
    degree_summary, extremal_value, fit_rate, sandwich_check, DegreeSummary, RateFit,
};
use crate::geometry::{make_eval_grid, ProjectivePoint};
use crate::kernel::{orthonormalize, raw_gram};
use crate::measure::Scenario;
use crate::phi::{phi_log, PhiOptions};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Evaluation-grid dimensions.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Number of rings per chart.
    pub radial: usize,
    /// Points per ring.
    pub angular: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            radial: 6,
            angular: 16,
        }
    }
}

/// Extremal-solver stopping parameters, as configured.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PhiConfig {
    #[serde(default = "default_phi_tol")]
    pub tol: f64,
    #[serde(default = "default_phi_max_iter")]
    pub max_iter: usize,
}

fn default_phi_tol() -> f64 {
    1e-6
}

fn default_phi_max_iter() -> usize {
    2000
}

impl Default for PhiConfig {
    fn default() -> Self {
        PhiConfig {
            tol: default_phi_tol(),
            max_iter: default_phi_max_iter(),
        }
    }
}

/// Schema of the JSON run configuration. Unknown keys are rejected.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub degrees: Vec<usize>,
    #[serde(default)]
    pub grid: GridConfig,
    /// Node count override; when absent each degree uses the scenario
    /// default.
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub phi: PhiConfig,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
}

/// Check everything that can be checked without running: degree range,
/// grid size, node counts versus section counts, solver parameters.
pub fn validate_config(cfg: &RunConfig) -> Result<()> {
    if cfg.degrees.is_empty() {
        return Err(Error::Config("degrees: must be non-empty".into()));
    }
    for &n in &cfg.degrees {
        if n == 0 || n > 256 {
            return Err(Error::Config(format!(
                "degrees: {n} outside the supported range 1..=256"
            )));
        }
    }
    if cfg.grid.radial == 0 || cfg.grid.angular == 0 {
        return Err(Error::Config(
            "grid: radial and angular must be positive".into(),
        ));
    }
    let grid_points = 2 + (2 * cfg.grid.radial - 1) * cfg.grid.angular;
    if grid_points > 100_000 {
        return Err(Error::Config(format!(
            "grid: {grid_points} evaluation points exceeds the 100000 cap"
        )));
    }
    let n_max = *cfg.degrees.iter().max().unwrap();
    if let Some(nodes) = cfg.nodes {
        if nodes < n_max + 1 {
            return Err(Error::Config(format!(
                "nodes: {nodes} is fewer than the {} sections at degree {n_max}",
                n_max + 1
            )));
        }
        if nodes > 1_000_000 {
            return Err(Error::Config("nodes: exceeds the 1000000 cap".into()));
        }
    }
    if !(cfg.phi.tol > 0.0 && cfg.phi.tol.is_finite()) {
        return Err(Error::Config("phi.tol: must be positive".into()));
    }
    if cfg.phi.max_iter == 0 {
        return Err(Error::Config("phi.max_iter: must be positive".into()));
    }
    if let Some(t) = cfg.threads {
        if t == 0 || t > 64 {
            return Err(Error::Config(format!(
                "threads: {t} outside the supported range 1..=64"
            )));
        }
    }
    Ok(())
}

/// Thread count resolution: CLI flag, then config, then the smaller of the
/// machine parallelism and 16.
pub fn resolve_threads(flag: Option<usize>, cfg: Option<usize>) -> usize {
    flag.or(cfg).unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1)
            .min(16)
    })
}

fn fmt_e(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.12e}")
    }
}

#[derive(Serialize)]
struct RateFitJson {
    c: f64,
    r_squared: f64,
    bm_exponent: f64,
    points: usize,
}

#[derive(Serialize)]
struct SummaryJson {
    scenario: String,
    degrees: Vec<usize>,
    node_counts: Vec<usize>,
    grid_points: usize,
    threads: usize,
    phi: PhiConfig,
    checks: Vec<PropertyCheck>,
    all_checks_pass: bool,
    rate_fit: Option<RateFitJson>,
    per_degree_wall_ms: Vec<f64>,
    total_wall_ms: f64,
    outputs: Vec<String>,
}

/// One gating property check evaluated by `run`.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// The property checks a run is gated on: the trace identity per degree,
/// the two-sided kernel/extremal bounds at every solver point, and the
/// quadratic growth cap on the node-maximum constant (degrees >= 2).
/// Solver runs that end uncertified do not fail a check; they are counted
/// in the per-degree report instead.
pub fn evaluate_checks(summaries: &[DegreeSummary]) -> Vec<PropertyCheck> {
    let mut checks = Vec::new();

    let mut trace_worst = 0.0f64;
    let mut trace_n = 0usize;
    for s in summaries {
        let rel = (s.weighted_trace_log - s.expected_trace_log).exp_m1().abs();
        if rel >= trace_worst {
            trace_worst = rel;
            trace_n = s.degree;
        }
    }
    checks.push(PropertyCheck {
        name: "trace_identity".into(),
        pass: trace_worst <= 1e-8,
        detail: format!("max relative deviation {trace_worst:.3e} at degree {trace_n} (tol 1e-8)"),
    });

    let mut margin = f64::INFINITY;
    let mut margin_n = 0usize;
    for s in summaries {
        if s.phi_points > 0 && s.sandwich_margin_min < margin {
            margin = s.sandwich_margin_min;
            margin_n = s.degree;
        }
    }
    checks.push(PropertyCheck {
        name: "sandwich".into(),
        pass: !margin.is_finite() || margin >= -1e-6,
        detail: if margin.is_finite() {
            format!("min margin {margin:.3e} at degree {margin_n} (slack 1e-6)")
        } else {
            "no solver points".into()
        },
    });

    let mut excess = f64::NEG_INFINITY;
    let mut excess_n = 0usize;
    for s in summaries {
        if s.degree >= 2 {
            let e = s.bm_constant_log - 2.0 * (s.degree as f64).ln();
            if e > excess {
                excess = e;
                excess_n = s.degree;
            }
        }
    }
    if excess.is_finite() {
        checks.push(PropertyCheck {
            name: "bm_growth".into(),
            pass: excess <= 1e-6,
            detail: format!(
                "max ln(M_n / n^2) = {excess:.3e} at degree {excess_n} (tol 1e-6)"
            ),
        });
    }

    checks
}

/// Results of a full run, before anything is written.
pub struct RunArtifacts {
    pub summaries: Vec<DegreeSummary>,
    pub checks: Vec<PropertyCheck>,
    pub rate_fit: Option<RateFit>,
    pub grid: Vec<ProjectivePoint>,
    /// Kernel diagonal over the grid at the largest degree, in log units.
    pub top_bergman_log: Vec<f64>,
    pub top_degree: usize,
    pub per_degree_wall_ms: Vec<f64>,
    pub total_wall_ms: f64,
    pub threads: usize,
}

impl RunArtifacts {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Run the convergence study described by the (already validated)
/// configuration on a dedicated thread pool.
pub fn execute_run(cfg: &RunConfig, threads: usize) -> Result<RunArtifacts> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("threads: cannot build pool: {e}")))?;
    let mut degrees = cfg.degrees.clone();
    degrees.sort_unstable();
    degrees.dedup();
    let grid = make_eval_grid(cfg.grid.radial, cfg.grid.angular);
    let phi_opts = PhiOptions {
        tol: cfg.phi.tol,
        max_iter: cfg.phi.max_iter,
    };
    let total_start = Instant::now();
    let mut summaries = Vec::with_capacity(degrees.len());
    let mut walls = Vec::with_capacity(degrees.len());
    let mut top_bergman_log = Vec::new();
    let mut top_degree = 0usize;
    pool.install(|| -> Result<()> {
        for &n in &degrees {
            let start = Instant::now();
            let count = cfg.nodes.unwrap_or_else(|| cfg.scenario.default_node_count(n));
            let set = cfg.scenario.build(count)?;
            let sections = orthonormalize(&set, n)?;
            let summary = degree_summary(cfg.scenario, &set, &sections, &grid, Some(&phi_opts))?;
            if n == *degrees.last().unwrap() {
                top_bergman_log = crate::extremal::grid_bergman_log(&sections, &grid);
                top_degree = n;
            }
            summaries.push(summary);
            walls.push(start.elapsed().as_secs_f64() * 1e3);
        }
        Ok(())
    })?;
    let samples: Vec<(usize, f64, f64)> = summaries
        .iter()
        .map(|s| {
            (
                s.degree,
                s.sup_error.unwrap_or(f64::NAN),
                s.bm_constant_log,
            )
        })
        .collect();
    let rate_fit = fit_rate(&samples);
    let checks = evaluate_checks(&summaries);
    Ok(RunArtifacts {
        summaries,
        checks,
        rate_fit,
        grid,
        top_bergman_log,
        top_degree,
        per_degree_wall_ms: walls,
        total_wall_ms: total_start.elapsed().as_secs_f64() * 1e3,
        threads,
    })
}

pub fn render_convergence_csv(scenario: Scenario, arts: &RunArtifacts) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# scenario: {}", scenario.name());
    s.push_str(
        "# columns:\n\
         #   degree: line-bundle degree n\n\
         #   dim: number of orthonormal sections (n + 1)\n\
         #   nodes: collocation node count\n\
         #   basis: internal design basis\n\
         #   cond_estimate: diagonal-ratio estimate of the design conditioning\n\
         #   sup_error: sup over the grid of |(1/2n) log B_n - V| (nan without an oracle)\n\
         #   bm_constant_log: ln of the largest node value of the kernel diagonal\n\
         #   weighted_trace_log: ln of the mass-weighted trace of the kernel diagonal\n\
         #   expected_trace_log: ln(n + 1), the exact trace value\n\
         #   phi_points: grid points where the extremal solver ran\n\
         #   phi_unconverged: solver runs that ended without meeting the tolerance\n\
         #   phi_dev_max: max |(1/2n) log B_n - (1/n) log Phi_n| over certified points, both certificates\n\
         #   phi_dev_envelope: proven bound ln(M_n (n + 1)) / (2n) for that deviation\n\
         #   phi_gap_max: widest dual-primal bracket among the solver runs\n\
         #   phi_iterations_max: most solver iterations spent at any point\n\
         #   ratio_log_min, ratio_log_max: extremes of log B_n - 2 log Phi_n over the solver points\n\
         #   sandwich_margin_min: least slack in the two-sided kernel/extremal bounds\n",
    );
    s.push_str(
        "degree,dim,nodes,basis,cond_estimate,sup_error,bm_constant_log,weighted_trace_log,\
         expected_trace_log,phi_points,phi_unconverged,phi_dev_max,phi_dev_envelope,phi_gap_max,\
         phi_iterations_max,ratio_log_min,ratio_log_max,sandwich_margin_min\n",
    );
    let finite_or_nan = |x: f64| if x.is_finite() { x } else { f64::NAN };
    for r in &arts.summaries {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.degree,
            r.dim,
            r.node_count,
            r.basis.name(),
            fmt_e(r.cond_estimate),
            fmt_e(r.sup_error.unwrap_or(f64::NAN)),
            fmt_e(r.bm_constant_log),
            fmt_e(r.weighted_trace_log),
            fmt_e(r.expected_trace_log),
            r.phi_points,
            r.phi_unconverged,
            fmt_e(r.phi_dev_max),
            fmt_e(r.phi_dev_envelope),
            fmt_e(r.phi_gap_max),
            r.phi_iterations_max,
            fmt_e(finite_or_nan(r.sandwich_ratio_log_min)),
            fmt_e(finite_or_nan(r.sandwich_ratio_log_max)),
            fmt_e(finite_or_nan(r.sandwich_margin_min)),
        );
    }
    s
}

pub fn render_grid_dump_csv(scenario: Scenario, arts: &RunArtifacts) -> String {
    let n = arts.top_degree;
    let mut s = String::new();
    let _ = writeln!(s, "# scenario: {}", scenario.name());
    let _ = writeln!(s, "# degree: {n}");
    s.push_str(
        "# columns:\n\
         #   index: grid position (deterministic enumeration order)\n\
         #   chart: coordinate chart of the point\n\
         #   coord_re, coord_im: chart coordinate\n\
         #   log_bergman: log of the kernel diagonal at the point\n\
         #   normalized: log_bergman / (2n)\n\
         #   extremal: closed-form extremal value (nan without an oracle)\n\
         #   abs_error: |normalized - extremal| (nan without an oracle)\n\
         #   phi_log_upper, phi_log_lower: certified enclosure of log Phi_n\n\
         #     (nan where the solver did not run)\n",
    );
    s.push_str(
        "index,chart,coord_re,coord_im,log_bergman,normalized,extremal,abs_error,\
         phi_log_upper,phi_log_lower\n",
    );
    let top = arts.summaries.iter().find(|s| s.degree == n);
    for (i, (p, &lb)) in arts.grid.iter().zip(arts.top_bergman_log.iter()).enumerate() {
        let normalized = if n > 0 { lb / (2.0 * n as f64) } else { f64::NAN };
        let oracle = extremal_value(scenario, p).ok();
        let (v, err) = match oracle {
            Some(v) => (v, (normalized - v).abs()),
            None => (f64::NAN, f64::NAN),
        };
        let phi = top.and_then(|s| {
            s.phi_results
                .iter()
                .find(|(k, _)| *k == i)
                .map(|(_, r)| (r.log_phi, r.log_phi_primal))
        });
        let (pu, pl) = phi.unwrap_or((f64::NAN, f64::NAN));
        let c = p.coord();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            i,
            p.chart().name(),
            fmt_e(c.re),
            fmt_e(c.im),
            fmt_e(lb),
            fmt_e(normalized),
            fmt_e(v),
            fmt_e(err),
            fmt_e(pu),
            fmt_e(pl),
        );
    }
    s
}

fn render_summary_json(cfg: &RunConfig, arts: &RunArtifacts) -> String {
    let summary = SummaryJson {
        scenario: cfg.scenario.name().to_string(),
        degrees: arts.summaries.iter().map(|s| s.degree).collect(),
        node_counts: arts.summaries.iter().map(|s| s.node_count).collect(),
        grid_points: arts.grid.len(),
        threads: arts.threads,
        phi: cfg.phi,
        checks: arts.checks.clone(),
        all_checks_pass: arts.all_checks_pass(),
        rate_fit: arts.rate_fit.map(|f| RateFitJson {
            c: f.c,
            r_squared: f.r_squared,
            bm_exponent: f.bm_exponent,
            points: f.points,
        }),
        per_degree_wall_ms: arts.per_degree_wall_ms.clone(),
        total_wall_ms: arts.total_wall_ms,
        outputs: vec![
            "convergence.csv".to_string(),
            "grid_dump.csv".to_string(),
            "summary.json".to_string(),
        ],
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    text
}

pub fn write_outputs(cfg: &RunConfig, arts: &RunArtifacts, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("convergence.csv"),
        render_convergence_csv(cfg.scenario, arts),
    )?;
    std::fs::write(
        out_dir.join("grid_dump.csv"),
        render_grid_dump_csv(cfg.scenario, arts),
    )?;
    std::fs::write(out_dir.join("summary.json"), render_summary_json(cfg, arts))?;
    Ok(())
}

/// Small fixed battery of closed-form checks; prints one line per check.
pub fn selftest(out: &mut dyn std::io::Write) -> Result<bool> {
    use crate::measure::{circle_set, interval_set};
    let mut ok = true;
    let mut check = |out: &mut dyn std::io::Write, name: &str, pass: bool, detail: String| {
        let _ = writeln!(
            out,
            "selftest: {name}: {} ({detail})",
            if pass { "ok" } else { "FAILED" }
        );
        ok &= pass;
    };

    {
        let n = 8usize;
        let set = circle_set(4 * n + 8, 1.0)?;

        // Monomial Gram against the closed form delta_jk 2^{-n}.
        let g = raw_gram(&set, n);
        let scale = 0.5f64.powi(n as i32);
        let mut gdev = 0.0f64;
        for j in 0..=n {
            for k in 0..=n {
                let expect = if j == k { scale } else { 0.0 };
                gdev = gdev.max((g[(j, k)] - expect).norm() / scale);
            }
        }
        check(
            out,
            "gram diagonality",
            gdev <= 1e-12,
            format!("max |G_jk - delta 2^-n| / 2^-n = {gdev:.3e}"),
        );

        let sections = orthonormalize(&set, n)?;
        let b0 = sections.bergman_log(&ProjectivePoint::origin());
        let dev0 = (b0 - n as f64 * std::f64::consts::LN_2).abs();
        check(
            out,
            "circle center value",
            dev0 <= 1e-9,
            format!("|log B(0) - n ln 2| = {dev0:.3e}"),
        );

        let expect = ((n + 1) as f64).ln();
        let mdev = (sections.bm_constant_log().0 - expect).abs();
        check(
            out,
            "node maximum constant",
            mdev <= 1e-9,
            format!("|ln M_n - ln {}| = {mdev:.3e}", n + 1),
        );
        let tdev = (sections.weighted_trace_log() - expect).abs();
        check(
            out,
            "circle trace identity",
            tdev <= 1e-10,
            format!("|trace - (n+1)| log-units = {tdev:.3e}"),
        );
    }

    {
        let set = circle_set(256, 1.0)?;
        let n = 4;
        let r = phi_log(&set, n, &ProjectivePoint::origin(), &PhiOptions::default())?;
        let dev = (r.log_phi - 0.5 * n as f64 * std::f64::consts::LN_2).abs();
        check(
            out,
            "extremal value at center",
            r.converged && dev <= 1e-5,
            format!("dev = {dev:.3e}, gap = {:.3e}", r.final_gap),
        );
        let sections = orthonormalize(&set, n)?;
        let b0 = sections.bergman_log(&ProjectivePoint::origin());
        let sw = sandwich_check(&set, &sections, b0, &r, 1e-6);
        check(
            out,
            "sandwich at center",
            sw.lower_ok && sw.upper_ok,
            format!(
                "margins = {:.3e}, {:.3e}",
                sw.lower_margin, sw.upper_margin
            ),
        );
    }

    {
        // At degree 0 the two-sided bounds collapse to equalities for a
        // probability node measure.
        let set = circle_set(64, 1.0)?;
        let sections = orthonormalize(&set, 0)?;
        let p = ProjectivePoint::from_zero_chart(num_complex::Complex64::new(0.3, 0.2));
        let r = phi_log(&set, 0, &p, &PhiOptions::default())?;
        let b = sections.bergman_log(&p);
        let sw = sandwich_check(&set, &sections, b, &r, 1e-9);
        let equal = sw.ratio_log.abs() <= 1e-9
            && sw.lower_envelope_log.abs() <= 1e-12
            && sw.upper_envelope_log.abs() <= 1e-9;
        check(
            out,
            "degree-0 equalities",
            sw.lower_ok && sw.upper_ok && equal,
            format!(
                "ratio_log = {:.3e}, envelopes = {:.3e}, {:.3e}",
                sw.ratio_log, sw.lower_envelope_log, sw.upper_envelope_log
            ),
        );
    }

    {
        let set = interval_set(512)?;
        let n = 8;
        let sections = orthonormalize(&set, n)?;
        let expect = ((n + 1) as f64).ln();
        let tdev = (sections.weighted_trace_log() - expect).abs();
        check(
            out,
            "segment trace identity",
            tdev <= 1e-8,
            format!("|trace - (n+1)| log-units = {tdev:.3e}"),
        );
        let grid = make_eval_grid(4, 8);
        let summary = degree_summary(Scenario::Interval, &set, &sections, &grid, None)?;
        let sup = summary.sup_error.unwrap_or(f64::NAN);
        check(
            out,
            "segment sup error",
            sup.is_finite() && sup <= 0.25,
            format!("sup |(1/2n) log B - V| = {sup:.3e}"),
        );
    }

    Ok(ok)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::{Parser, Subcommand};

    #[derive(Parser)]
    #[command(
        name = "bergman-extremal",
        version,
        about = "Discrete Bergman kernels and extremal functions on the projective line"
    )]
    struct Cli {
        #[command(subcommand)]
        cmd: Cmd,
    }

    #[derive(Subcommand)]
    enum Cmd {
        /// Run a convergence study from a JSON configuration.
        Run {
            /// Path to the JSON configuration.
            #[arg(long)]
            config: PathBuf,
            /// Output directory (overrides out_dir from the configuration).
            #[arg(long)]
            out: Option<PathBuf>,
            /// Worker threads (overrides threads from the configuration).
            #[arg(long)]
            threads: Option<usize>,
        },
        /// Run the built-in closed-form battery.
        Selftest,
    }

    // Exit codes: 0 all property checks pass, 2 a check failed,
    // 1 configuration or runtime error (including usage errors).
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match cli.cmd {
        Cmd::Run {
            config,
            out,
            threads,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return 1;
                }
            };
            let cfg = match parse_config(&text).and_then(|c| {
                validate_config(&c)?;
                Ok(c)
            }) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 1;
                }
            };
            let out_dir = match out.or_else(|| cfg.out_dir.clone()) {
                Some(d) => d,
                None => {
                    eprintln!("error: no output directory (set out_dir or pass --out)");
                    return 1;
                }
            };
            if let Some(t) = threads {
                if t == 0 || t > 64 {
                    eprintln!("error: threads: {t} outside the supported range 1..=64");
                    return 1;
                }
            }
            let threads = resolve_threads(threads, cfg.threads);
            match execute_run(&cfg, threads).and_then(|arts| {
                write_outputs(&cfg, &arts, &out_dir)?;
                Ok(arts)
            }) {
                Ok(arts) => {
                    for c in &arts.checks {
                        println!(
                            "check {}: {} ({})",
                            c.name,
                            if c.pass { "pass" } else { "FAIL" },
                            c.detail
                        );
                    }
                    println!(
                        "wrote {} degrees to {} ({} grid points, {} threads)",
                        arts.summaries.len(),
                        out_dir.display(),
                        arts.grid.len(),
                        arts.threads
                    );
                    if arts.all_checks_pass() {
                        0
                    } else {
                        2
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    1
                }
            }
        }
        Cmd::Selftest => {
            let mut out = std::io::stdout();
            match selftest(&mut out) {
                Ok(true) => {
                    println!("selftest passed");
                    0
                }
                Ok(false) => {
                    println!("selftest FAILED");
                    2
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    1
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = parse_config(r#"{"scenario": "circle", "degrees": [2, 4]}"#).unwrap();
        assert!(matches!(cfg.scenario, Scenario::Circle));
        assert_eq!(cfg.degrees, vec![2, 4]);
        assert_eq!(cfg.grid.radial, 6);
        assert_eq!(cfg.grid.angular, 16);
        assert!((cfg.phi.tol - 1e-6).abs() < 1e-18);
        assert_eq!(cfg.phi.max_iter, 2000);
        validate_config(&cfg).unwrap();
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = parse_config(r#"{"scenario": "circle", "degrees": [2], "extra": 1}"#)
            .unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
        let err =
            parse_config(r#"{"scenario": "circle", "degrees": [2], "grid": {"radial": 2, "rings": 3}}"#)
                .unwrap_err();
        assert!(err.to_string().contains("rings"), "{err}");
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut cfg = parse_config(r#"{"scenario": "interval", "degrees": [4]}"#).unwrap();
        cfg.degrees = vec![];
        assert!(validate_config(&cfg).is_err());
        cfg.degrees = vec![0];
        assert!(validate_config(&cfg).is_err());
        cfg.degrees = vec![300];
        assert!(validate_config(&cfg).is_err());
        cfg.degrees = vec![8];
        cfg.nodes = Some(4);
        assert!(validate_config(&cfg).is_err());
        cfg.nodes = None;
        cfg.phi.tol = 0.0;
        assert!(validate_config(&cfg).is_err());
    }

    #[test]
    fn thread_resolution_priority() {
        assert_eq!(resolve_threads(Some(3), Some(7)), 3);
        assert_eq!(resolve_threads(None, Some(7)), 7);
        let auto = resolve_threads(None, None);
        assert!(auto >= 1 && auto <= 16);
    }

    #[test]
    fn float_formatting_is_fixed_width_scientific() {
        assert_eq!(fmt_e(1.0), "1.000000000000e0");
        assert_eq!(fmt_e(f64::NAN), "nan");
        assert_eq!(fmt_e(-0.5), "-5.000000000000e-1");
    }

    fn stub_summary(degree: usize) -> DegreeSummary {
        let d = (degree + 1) as f64;
        DegreeSummary {
            degree,
            dim: degree + 1,
            node_count: 64,
            basis: crate::poly::DesignBasis::Monomial,
            cond_estimate: 1.0,
            sup_error: Some(0.1),
            bm_constant_log: d.ln(),
            weighted_trace_log: d.ln(),
            expected_trace_log: d.ln(),
            phi_points: 4,
            phi_unconverged: 0,
            phi_dev_max: 0.0,
            phi_dev_envelope: 1.0,
            phi_gap_max: 0.0,
            phi_iterations_max: 1,
            sandwich_ratio_log_min: 0.0,
            sandwich_ratio_log_max: 0.5,
            sandwich_margin_min: 0.5,
            phi_results: Vec::new(),
        }
    }

    #[test]
    fn checks_catch_each_violation() {
        let good = vec![stub_summary(4), stub_summary(8)];
        assert!(evaluate_checks(&good).iter().all(|c| c.pass));

        let mut bad_trace = good.clone();
        bad_trace[0].weighted_trace_log += 1e-6;
        let checks = evaluate_checks(&bad_trace);
        assert!(!checks.iter().find(|c| c.name == "trace_identity").unwrap().pass);

        let mut bad_sandwich = good.clone();
        bad_sandwich[1].sandwich_margin_min = -1e-3;
        let checks = evaluate_checks(&bad_sandwich);
        assert!(!checks.iter().find(|c| c.name == "sandwich").unwrap().pass);

        let mut bad_growth = good.clone();
        bad_growth[0].bm_constant_log = 2.0 * 4f64.ln() + 0.3;
        let checks = evaluate_checks(&bad_growth);
        assert!(!checks.iter().find(|c| c.name == "bm_growth").unwrap().pass);

        // Degree-0-only runs have no growth check but still gate on the rest.
        let only_zero = vec![stub_summary(0)];
        let checks = evaluate_checks(&only_zero);
        assert!(checks.iter().all(|c| c.name != "bm_growth"));
        assert!(checks.iter().all(|c| c.pass));
    }
}
