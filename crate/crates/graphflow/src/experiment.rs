//! Batch experiment driver: execute a run configuration, emit CSV artifacts
//! and a plain-text report with one PASS/FAIL line per requested check, and
//! aggregate whole directories of configs. Also hosts the composite
//! experiments used by the verification suite: the supercritical blow-up
//! demonstration and the parabolic-rescaling covariance check.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{self, MonitoredQuantity, NormExponents, SpaceTimeSample, WeightChoice};
use crate::domain::Domain;
use crate::error::Error;
use crate::geom::V3;
use crate::graph;
use crate::grid::{Grid, GridFunction};
use crate::manufactured::{rational_to_f64, BlowupParameters, SelfSimilarSolution};
use crate::run_config::{BuiltRun, DiagnosticRequest, RunConfig};
use crate::solver::{self, Scheme, SolverConfig, SolutionTrajectory, TransportField};
use crate::Result;

/// One pass/fail (or informational) line of a run report.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub id: String,
    /// None for purely informational lines.
    pub pass: Option<bool>,
    pub detail: String,
}

impl CheckLine {
    fn info(id: impl Into<String>, detail: String) -> Self {
        CheckLine {
            id: id.into(),
            pass: None,
            detail,
        }
    }

    fn verdict(id: impl Into<String>, pass: bool, detail: String) -> Self {
        CheckLine {
            id: id.into(),
            pass: Some(pass),
            detail,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub name: String,
    pub criteria: Vec<String>,
    pub lines: Vec<CheckLine>,
    pub blowup_at: Option<f64>,
    pub out_dir: PathBuf,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.lines.iter().all(|l| l.pass != Some(false))
    }
}

fn fmt_float(x: f64) -> String {
    format!("{x:.12e}")
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn quantity_csv(path: &Path, q: &MonitoredQuantity, exps: Option<&NormExponents>) -> Result<()> {
    let pole = q.meta.pole.unwrap_or([f64::NAN; 3]);
    let s = q.meta.s.unwrap_or(f64::NAN);
    let (p_str, q_str) = match exps {
        Some(e) => (e.p.to_string(), e.q.to_string()),
        None => (
            q.meta.p.clone().unwrap_or_default(),
            q.meta.q.clone().unwrap_or_default(),
        ),
    };
    let rows: Vec<Vec<String>> = q
        .series
        .iter()
        .map(|(t, v)| {
            vec![
                fmt_float(*t),
                fmt_float(*v),
                q.tag.clone(),
                fmt_float(pole[0]),
                fmt_float(pole[1]),
                fmt_float(pole[2]),
                fmt_float(s),
                p_str.clone(),
                q_str.clone(),
            ]
        })
        .collect();
    write_csv(path, "t,value,tag,pole_x,pole_y,pole_h,s,p,q", &rows)
}

fn snapshot_csv(path: &Path, snap: &GridFunction) -> Result<()> {
    let grid = snap.grid();
    let n = grid.domain.dim();
    let q = graph::compute_quantities(snap)?;
    let mut rows = Vec::with_capacity(grid.active.len());
    for &idx in &grid.active {
        let p = grid.pos_of(idx);
        let mut row = vec![fmt_float(p[0])];
        if n == 2 {
            row.push(fmt_float(p[1]));
        }
        row.push(fmt_float(snap.values()[idx]));
        row.push(fmt_float(q.v[idx]));
        row.push(fmt_float(q.h[idx]));
        rows.push(row);
    }
    let header = if n == 2 { "x,y,u,v,h" } else { "x,u,v,h" };
    write_csv(path, header, &rows)
}

/// Execute one configured run: solve, write snapshot and diagnostic CSVs,
/// and produce the report lines.
pub fn run_experiment(cfg: &RunConfig, out_root: &Path) -> Result<RunOutcome> {
    let built = cfg.build()?;
    let out_dir = out_root.join(&built.out_dir);
    fs::create_dir_all(&out_dir)?;

    let traj = solver::run(&built.u0, &built.transport, &built.solver, |_| {})?;
    let mut lines = Vec::new();
    lines.push(CheckLine::info(
        "run",
        format!(
            "name={} scheme={:?} dt={} steps_to={} snapshots={}",
            built.name,
            built.solver.scheme,
            fmt_float(built.solver.dt),
            fmt_float(traj.last().time),
            traj.snapshots.len()
        ),
    ));
    if let Some(t) = traj.blowup_at {
        lines.push(CheckLine::info(
            "blowup_detected",
            format!("sup|du| crossed {} at t={}", built.solver.blowup_ceiling, fmt_float(t)),
        ));
    }

    write_trajectory_artifacts(&built, &traj, &out_dir)?;
    run_diagnostics(&built, &traj, &out_dir, &mut lines)?;

    let report_path = out_dir.join("report.txt");
    let mut report = String::new();
    for l in &lines {
        let status = match l.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        writeln!(report, "{status} {} {}", l.id, l.detail).unwrap();
    }
    fs::write(&report_path, report)?;

    Ok(RunOutcome {
        name: built.name,
        criteria: built.criteria,
        lines,
        blowup_at: traj.blowup_at,
        out_dir,
    })
}

fn write_trajectory_artifacts(
    built: &BuiltRun,
    traj: &SolutionTrajectory,
    out_dir: &Path,
) -> Result<()> {
    // dense scalar trace
    let rows: Vec<Vec<String>> = traj
        .trace
        .iter()
        .map(|tr| {
            vec![
                fmt_float(tr.t),
                fmt_float(tr.sup_du),
                fmt_float(tr.sup_v),
                fmt_float(tr.sup_u),
            ]
        })
        .collect();
    write_csv(&out_dir.join("trace.csv"), "t,sup_du,sup_v,sup_u", &rows)?;

    if built.snapshot_files > 0 {
        let stride = (traj.snapshots.len() / built.snapshot_files).max(1);
        let mut index_rows = Vec::new();
        for (k, snap) in traj.snapshots.iter().enumerate() {
            if k % stride != 0 && k + 1 != traj.snapshots.len() {
                continue;
            }
            let file = format!("snap_{k:06}.csv");
            snapshot_csv(&out_dir.join(&file), snap)?;
            index_rows.push(vec![fmt_float(snap.time), file]);
        }
        write_csv(&out_dir.join("index.csv"), "t,path", &index_rows)?;
    }
    Ok(())
}

fn run_diagnostics(
    built: &BuiltRun,
    traj: &SolutionTrajectory,
    out_dir: &Path,
    lines: &mut Vec<CheckLine>,
) -> Result<()> {
    let grid = &built.grid;
    let h = grid.h;
    let dt = built.solver.dt;
    for (k, req) in built.diagnostics.iter().enumerate() {
        match req {
            DiagnosticRequest::SupV { assert_check } => {
                let report = diagnostics::gradient_bound_monitor(traj, &built.u0)?;
                quantity_csv(&out_dir.join(format!("d{k}_sup_v.csv")), &report.series, None)?;
                let detail = format!(
                    "bound={} sup_du0={} certified_until={} first_violation={:?}",
                    fmt_float(report.bound),
                    fmt_float(report.sup_du0),
                    fmt_float(report.certified_until),
                    report.first_violation.map(fmt_float)
                );
                if *assert_check {
                    // pass condition: a positive certified interval exists
                    let pass = report.certified_until > traj.trace.first().map(|t| t.t).unwrap_or(0.0);
                    lines.push(CheckLine::verdict("gradient_bound", pass, detail));
                } else {
                    lines.push(CheckLine::info("gradient_bound", detail));
                }
            }
            DiagnosticRequest::Area => {
                let mut q = MonitoredQuantity::new("area", Default::default());
                for snap in &traj.snapshots {
                    let ones = vec![1.0; grid.node_count()];
                    q.push(snap.time, graph::surface_integral(snap, &ones)?);
                }
                quantity_csv(&out_dir.join(format!("d{k}_area.csv")), &q, None)?;
                lines.push(CheckLine::info(
                    "area",
                    format!("initial={} final={}",
                        fmt_float(q.series.first().map(|x| x.1).unwrap_or(f64::NAN)),
                        fmt_float(q.series.last().map(|x| x.1).unwrap_or(f64::NAN))),
                ));
            }
            DiagnosticRequest::Monotonicity {
                spec,
                phi_v,
                assert_check,
                tol_coeff,
            } => {
                let weight = if *phi_v {
                    WeightChoice::AreaElement
                } else {
                    WeightChoice::One
                };
                let q = diagnostics::monotonicity_quantity(traj, spec, weight)?;
                quantity_csv(&out_dir.join(format!("d{k}_{}.csv", q.tag)), &q, None)?;
                let max_inc = q.max_increment();
                let tol = tol_coeff * (h + dt);
                let detail = format!(
                    "max_increment={} tolerance={}",
                    fmt_float(max_inc),
                    fmt_float(tol)
                );
                if *assert_check {
                    lines.push(CheckLine::verdict("monotonicity", max_inc <= tol, detail));
                } else {
                    lines.push(CheckLine::info("monotonicity", detail));
                }
            }
            DiagnosticRequest::Weighted { spec, c13 } => {
                let q = diagnostics::weighted_quantity(traj, spec, *c13)?;
                quantity_csv(&out_dir.join(format!("d{k}_weighted.csv")), &q, None)?;
                lines.push(CheckLine::info(
                    "weighted_quantity",
                    format!(
                        "c13={} initial={} final={}",
                        c13,
                        fmt_float(q.series.first().map(|x| x.1).unwrap_or(f64::NAN)),
                        fmt_float(q.series.last().map(|x| x.1).unwrap_or(f64::NAN))
                    ),
                ));
            }
            DiagnosticRequest::BoundaryFlux { spec } => {
                let q = diagnostics::boundary_flux_series(traj, spec)?;
                quantity_csv(&out_dir.join(format!("d{k}_boundary_flux.csv")), &q, None)?;
                lines.push(CheckLine::info(
                    "boundary_flux",
                    format!("max={}", fmt_float(q.max_value())),
                ));
            }
            DiagnosticRequest::TransportNorm { exps, tau } => {
                let tau = tau.unwrap_or(built.solver.t_final);
                let norm = diagnostics::transport_norm(traj, &built.transport, exps, tau)?;
                let mut q = MonitoredQuantity::new("transport_norm", Default::default());
                q.meta.p = Some(exps.p.to_string());
                q.meta.q = Some(exps.q.to_string());
                q.push(tau.max(1e-300), norm);
                quantity_csv(&out_dir.join(format!("d{k}_transport_norm.csv")), &q, Some(exps))?;
                lines.push(CheckLine::info(
                    "transport_norm",
                    format!(
                        "p={} q={} gamma={} tau={} value={}",
                        exps.p,
                        exps.q,
                        exps.gamma(grid.domain.dim()),
                        fmt_float(tau),
                        fmt_float(norm)
                    ),
                ));
            }
            DiagnosticRequest::EvolutionResidual => {
                let res = diagnostics::evolution_residual(traj, &built.transport)?;
                let rows: Vec<Vec<String>> = res
                    .iter()
                    .map(|(t, v)| vec![fmt_float(*t), fmt_float(*v), "evolution_residual".into()])
                    .collect();
                write_csv(
                    &out_dir.join(format!("d{k}_evolution_residual.csv")),
                    "t,value,tag",
                    &rows,
                )?;
                let sup = res.iter().map(|(_, v)| *v).fold(0.0, f64::max);
                lines.push(CheckLine::info(
                    "evolution_residual",
                    format!("sup={}", fmt_float(sup)),
                ));
            }
            DiagnosticRequest::BoundarySign {
                assert_check,
                tol_coeff,
            } => {
                let report = diagnostics::boundary_sign_check(traj)?;
                quantity_csv(&out_dir.join(format!("d{k}_boundary_sign.csv")), &report.series, None)?;
                let tol = 1e-8 + tol_coeff * h;
                let worst = report.max_direct.max(report.max_via_b);
                let detail = format!(
                    "max_direct={} max_via_B={} gap={} tolerance={}",
                    fmt_float(report.max_direct),
                    fmt_float(report.max_via_b),
                    fmt_float(report.max_gap),
                    fmt_float(tol)
                );
                if *assert_check {
                    lines.push(CheckLine::verdict("boundary_sign", worst <= tol, detail));
                } else {
                    lines.push(CheckLine::info("boundary_sign", detail));
                }
            }
            DiagnosticRequest::Holder { alpha, pairs } => {
                let est = holder_estimate_for_run(built, traj, *alpha, *pairs);
                lines.push(CheckLine::info(
                    "holder_constant",
                    format!("alpha={} pairs={} estimate={}", alpha, pairs, fmt_float(est)),
                ));
            }
            DiagnosticRequest::ComparisonBound {
                assert_check,
                tol_coeff,
            } => {
                let report = solver::comparison_bound_check(traj, &built.transport);
                let tol = 1e-8 + tol_coeff * h;
                let detail = format!(
                    "sup_f={} sup_u0={} max_violation={} tolerance={}",
                    fmt_float(report.sup_f),
                    fmt_float(report.sup_u0),
                    fmt_float(report.max_violation),
                    fmt_float(tol)
                );
                if *assert_check {
                    lines.push(CheckLine::verdict(
                        "comparison_bound",
                        report.max_violation <= tol,
                        detail,
                    ));
                } else {
                    lines.push(CheckLine::info("comparison_bound", detail));
                }
            }
        }
    }
    Ok(())
}

/// Seeded sample pairs within the run's realized space-time box.
fn holder_estimate_for_run(
    built: &BuiltRun,
    traj: &SolutionTrajectory,
    alpha: f64,
    pairs: usize,
) -> f64 {
    let grid = &built.grid;
    let (low, high) = grid.domain.bounding_box();
    let t_end = traj.last().time.max(1e-12);
    let mut h_lo = f64::INFINITY;
    let mut h_hi = f64::NEG_INFINITY;
    for tr in &traj.trace {
        h_lo = h_lo.min(-tr.sup_u);
        h_hi = h_hi.max(tr.sup_u);
    }
    if !(h_lo < h_hi) {
        h_lo = -1.0;
        h_hi = 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(built.seed);
    let dim = grid.domain.dim();
    let mut sample_pairs = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let draw = |rng: &mut ChaCha8Rng| {
            let mut x: V3 = [0.0; 3];
            loop {
                for axis in 0..dim {
                    x[axis] = rng.gen_range(low[axis]..high[axis]);
                }
                if grid.domain.contains(&x) {
                    break;
                }
            }
            SpaceTimeSample {
                x,
                height: rng.gen_range(h_lo..h_hi),
                t: rng.gen_range(0.0..t_end),
            }
        };
        sample_pairs.push((draw(&mut rng), draw(&mut rng)));
    }
    diagnostics::holder_constant_estimate(&built.transport, dim, &sample_pairs, alpha)
}

/// Run every `*.toml` in a directory and aggregate the verdicts.
#[derive(Debug)]
pub struct SuiteOutcome {
    pub outcomes: Vec<RunOutcome>,
    pub config_errors: Vec<(PathBuf, Error)>,
    pub checks_total: usize,
    pub checks_failed: usize,
}

impl SuiteOutcome {
    pub fn ok(&self) -> bool {
        self.config_errors.is_empty() && self.checks_failed == 0
    }
}

pub fn verify_suite(dir: &Path, out_root: &Path) -> Result<SuiteOutcome> {
    let mut configs: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "toml").unwrap_or(false))
        .collect();
    configs.sort();
    let mut suite = SuiteOutcome {
        outcomes: Vec::new(),
        config_errors: Vec::new(),
        checks_total: 0,
        checks_failed: 0,
    };
    for path in configs {
        match crate::run_config::load(&path).and_then(|cfg| run_experiment(&cfg, out_root)) {
            Ok(outcome) => {
                for l in &outcome.lines {
                    if l.pass.is_some() {
                        suite.checks_total += 1;
                        if l.pass == Some(false) {
                            suite.checks_failed += 1;
                        }
                    }
                }
                suite.outcomes.push(outcome);
            }
            Err(e) => suite.config_errors.push((path, e)),
        }
    }
    Ok(suite)
}

/// Apply `--param key=v1,v2,...` overrides: run once per value with the
/// dotted key substituted into the TOML document.
pub fn sweep(
    config_text: &str,
    key: &str,
    values: &[String],
    out_root: &Path,
) -> Result<Vec<RunOutcome>> {
    let base: toml::Value = toml::from_str(config_text)
        .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    let mut outcomes = Vec::new();
    for (i, raw) in values.iter().enumerate() {
        let mut doc = base.clone();
        set_dotted(&mut doc, key, raw)?;
        let mut cfg: RunConfig = doc
            .try_into()
            .map_err(|e: toml::de::Error| Error::ConfigInvalid(e.to_string()))?;
        let suffix = format!("sweep{i}_{}", sanitize(raw));
        cfg.output.dir = format!("{}/{}", cfg.output.dir, suffix);
        cfg.meta.name = Some(format!(
            "{}_{}",
            cfg.meta.name.unwrap_or_else(|| "run".into()),
            suffix
        ));
        outcomes.push(run_experiment(&cfg, out_root)?);
    }
    Ok(outcomes)
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn set_dotted(doc: &mut toml::Value, key: &str, raw: &str) -> Result<()> {
    let mut cursor = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        cursor = cursor
            .get_mut(part)
            .ok_or_else(|| Error::ConfigInvalid(format!("sweep key '{key}': missing '{part}'")))?;
    }
    let leaf = parts.last().unwrap();
    let value = if let Ok(i) = raw.parse::<i64>() {
        toml::Value::Integer(i)
    } else if let Ok(f) = raw.parse::<f64>() {
        toml::Value::Float(f)
    } else {
        toml::Value::String(raw.to_string())
    };
    match cursor {
        toml::Value::Table(t) => {
            t.insert(leaf.to_string(), value);
            Ok(())
        }
        _ => Err(Error::ConfigInvalid(format!(
            "sweep key '{key}' does not address a table"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Composite experiments
// ---------------------------------------------------------------------------

/// One resolution level of the blow-up ladder.
#[derive(Debug, Clone)]
pub struct LadderRun {
    pub resolution: usize,
    pub blowup_at: Option<f64>,
    /// Fitted d ln sup|du| / d ln(1−t) over the configured window.
    pub fitted_growth: f64,
}

/// Results of the supercritical self-similar demonstration.
#[derive(Debug, Clone)]
pub struct BlowupReport {
    pub eps0: num_rational::Rational64,
    pub alpha0: num_rational::Rational64,
    /// Measured log-log slope of the inner L^p norm against 1−t.
    pub measured_inner_slope: f64,
    /// The displayed scaling exponent 3α−2+n/(2p)+(2α−1)/p.
    pub formula_inner_slope: f64,
    /// Partial iterated norms over [0, 1−δ] for the configured δ ladder.
    pub partial_norms: Vec<(f64, f64)>,
    pub ladder: Vec<LadderRun>,
    /// Exact growth exponent α₀ − 1/2 of sup|du|.
    pub expected_growth: f64,
    /// The companion subcritical run's certified bound interval.
    pub companion_certified_until: f64,
    pub companion_bound_violated: bool,
}

/// Parameters of the blow-up demonstration with desk-scale defaults.
#[derive(Debug, Clone)]
pub struct BlowupExperimentConfig {
    pub profile_radius: f64,
    pub amplitude: f64,
    /// Gradient ceiling as a multiple of sup|du₀|; the crossing must happen
    /// while the gradient peak is still resolved, so this sits just above 1.
    pub ceiling_rel: f64,
    /// Growth fit window in τ = 1−t.
    pub fit_window: (f64, f64),
    /// δ ladder for the partial-norm Cauchy check.
    pub deltas: Vec<f64>,
    /// Window in τ for the inner-norm slope fit.
    pub slope_window: (f64, f64),
    /// Companion subcritical horizon.
    pub companion_t_final: f64,
}

impl Default for BlowupExperimentConfig {
    fn default() -> Self {
        BlowupExperimentConfig {
            profile_radius: 0.7,
            amplitude: 1.0,
            ceiling_rel: 1.04,
            fit_window: (0.32, 0.8),
            deltas: vec![1e-1, 1e-2, 1e-3],
            slope_window: (1e-3, 1e-1),
            companion_t_final: 0.5,
        }
    }
}

/// Run the §-style optimality demonstration: exact-arithmetic exponents,
/// inner-norm slope fit on the closed-form family, Cauchy partial norms,
/// solver runs on a resolution ladder with gradient-growth fits, blow-up
/// detection, and a companion subcritical run.
pub fn blowup_experiment(
    params: &BlowupParameters,
    domain: &Domain,
    resolutions: &[usize],
    ecfg: &BlowupExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<BlowupReport> {
    if !params.is_supercritical() {
        return Err(Error::ConfigInvalid(format!(
            "blow-up experiment needs a supercritical pair, got (p,q)=({},{})",
            params.p, params.q
        )));
    }
    let dim = domain.dim();
    let alpha0 = rational_to_f64(params.alpha0());
    let p = rational_to_f64(params.p);
    let q = rational_to_f64(params.q);
    let sol = SelfSimilarSolution::new(dim, alpha0, ecfg.profile_radius, ecfg.amplitude);

    // (1) inner-norm slope on the exact family (fine quadrature oracle)
    let mut slope_points = Vec::new();
    let (lo, hi) = ecfg.slope_window;
    let samples = 25;
    for k in 0..samples {
        let tau = lo * (hi / lo).powf(k as f64 / (samples - 1) as f64);
        let inner = sol.inner_lp_norm(p, 1.0 - tau, 4000)?;
        slope_points.push((tau, inner));
    }
    let measured_inner_slope = diagnostics::fit_loglog_slope(&slope_points);
    let formula_inner_slope = crate::manufactured::scaling_exponent(alpha0, dim, Some(p));

    // (2) partial iterated norms over [0, 1−δ]
    let mut partial_norms = Vec::new();
    for &delta in &ecfg.deltas {
        let norm = sol.transport_norm_exact(p, q, 0.0, 1.0 - delta)?;
        partial_norms.push((delta, norm));
    }

    // (3) solver ladder with growth fits and blow-up detection
    let expected_growth = alpha0 - 0.5;
    let mut ladder = Vec::new();
    for &m in resolutions {
        let grid = Grid::new(domain.clone(), m)?;
        let u0 = GridFunction::from_fn(grid.clone(), 0.0, |x| sol.profile(x));
        let f = TransportField::SelfSimilar(sol.clone());
        let q0 = graph::compute_quantities(&u0)?;
        let sup_du0 = solver::sup_gradient_refined(&grid, &q0);
        // 0.2·h² obeys the CFL limit 0.225·h²/n... in one dimension; halve
        // per extra dimension
        let dt = 0.2 * grid.h * grid.h / dim as f64;
        let mut cfg = SolverConfig::new(Scheme::Explicit, dt, 1.0 - 1e-3);
        cfg.blowup_ceiling = ecfg.ceiling_rel * sup_du0;
        cfg.output_every = usize::MAX; // trace only; snapshots via run start/end
        let traj = solver::run(&u0, &f, &cfg, |_| {})?;
        let fit_points: Vec<(f64, f64)> = traj
            .trace
            .iter()
            .filter(|tr| {
                let tau = 1.0 - tr.t;
                tau >= ecfg.fit_window.0 && tau <= ecfg.fit_window.1
            })
            .map(|tr| (1.0 - tr.t, tr.sup_du))
            .collect();
        let fitted_growth = diagnostics::fit_loglog_slope(&fit_points);
        if let Some(dir) = out_dir {
            fs::create_dir_all(dir)?;
            let rows: Vec<Vec<String>> = traj
                .trace
                .iter()
                .map(|tr| vec![fmt_float(tr.t), fmt_float(tr.sup_du), fmt_float(tr.sup_v)])
                .collect();
            write_csv(
                &dir.join(format!("blowup_trace_m{m}.csv")),
                "t,sup_du,sup_v",
                &rows,
            )?;
        }
        ladder.push(LadderRun {
            resolution: m,
            blowup_at: traj.blowup_at,
            fitted_growth,
        });
    }

    // (4) companion subcritical run: same transport, truncated horizon,
    // subcritical exponents certify the gradient bound on the interval
    let companion = {
        let m = *resolutions.first().expect("nonempty ladder");
        let grid = Grid::new(domain.clone(), m)?;
        let u0 = GridFunction::from_fn(grid.clone(), 0.0, |x| sol.profile(x));
        let f = TransportField::SelfSimilar(sol.clone());
        let dt = 0.2 * grid.h * grid.h / dim as f64;
        let cfg = SolverConfig::new(Scheme::Explicit, dt, ecfg.companion_t_final);
        let traj = solver::run(&u0, &f, &cfg, |_| {})?;
        diagnostics::gradient_bound_monitor(&traj, &u0)?
    };

    let report = BlowupReport {
        eps0: params.eps0(),
        alpha0: params.alpha0(),
        measured_inner_slope,
        formula_inner_slope,
        partial_norms,
        ladder,
        expected_growth,
        companion_certified_until: companion.certified_until,
        companion_bound_violated: companion.first_violation.is_some(),
    };

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let mut rows = vec![vec![
            "eps0".to_string(),
            format!("{}", report.eps0),
            "alpha0".to_string(),
            format!("{}", report.alpha0),
        ]];
        rows.push(vec![
            "measured_inner_slope".into(),
            fmt_float(report.measured_inner_slope),
            "formula_inner_slope".into(),
            fmt_float(report.formula_inner_slope),
        ]);
        for (delta, norm) in &report.partial_norms {
            rows.push(vec![
                "partial_norm_delta".into(),
                fmt_float(*delta),
                "value".into(),
                fmt_float(*norm),
            ]);
        }
        for run in &report.ladder {
            rows.push(vec![
                format!("ladder_m{}", run.resolution),
                run.blowup_at.map(fmt_float).unwrap_or_default(),
                "fitted_growth".into(),
                fmt_float(run.fitted_growth),
            ]);
        }
        write_csv(&dir.join("blowup_summary.csv"), "key,value,key2,value2", &rows)?;
    }
    Ok(report)
}

/// Parabolic-rescaling covariance: solving on Ω with (u₀, f) and on λ⁻¹Ω
/// with (w₀(y) = u₀(λy)/λ, λf(λy, λz, λ²s)) produces trajectories with
/// sup|dw|(s) = sup|du|(λ²s). The discrete schemes commute with the
/// transform exactly, so the gap is rounding plus linear-solve tolerance.
#[derive(Debug, Clone)]
pub struct ScalingCovarianceReport {
    pub lambda: f64,
    /// max over matched output times of |sup|dw|(s_j) − sup|du|(t_j)|.
    pub max_gap: f64,
    pub sup_du_scale: f64,
}

pub fn scaling_covariance_experiment(lambda: f64, resolution: usize) -> Result<ScalingCovarianceReport> {
    // base run on (−1, 1)
    let grid_u = Grid::new(Domain::interval(-1.0, 1.0), resolution)?;
    let amp = 0.4;
    let u0 = GridFunction::from_fn(grid_u.clone(), 0.0, move |p| {
        amp * (std::f64::consts::PI * p[0]).cos()
    });
    let f_u = TransportField::Custom {
        name: "swirl".into(),
        eval: std::sync::Arc::new(|x: &V3, z: f64, t: f64| {
            [0.3 * (x[0] + z).sin(), 0.5 * (1.0 + t).recip() * x[0].cos(), 0.0]
        }),
    };
    let dt_u = 0.5 * SolverConfig::default_dt(Scheme::Explicit, grid_u.h, 1);
    let t_final = 0.05;
    let mut cfg_u = SolverConfig::new(Scheme::Explicit, dt_u, t_final);
    cfg_u.output_every = 8;
    let traj_u = solver::run(&u0, &f_u, &cfg_u, |_| {})?;

    // rescaled run on (−1/λ, 1/λ): w₀(y) = u₀(λy)/λ, f_w = λ f(λy, λz, λ²s)
    let grid_w = Grid::new(Domain::interval(-1.0 / lambda, 1.0 / lambda), resolution)?;
    let w0 = GridFunction::from_fn(grid_w.clone(), 0.0, move |p| {
        amp * (std::f64::consts::PI * lambda * p[0]).cos() / lambda
    });
    let f_w = TransportField::Custom {
        name: "swirl_rescaled".into(),
        eval: std::sync::Arc::new(move |y: &V3, z: f64, s: f64| {
            let x = lambda * y[0];
            let zz = lambda * z;
            let t = lambda * lambda * s;
            [
                lambda * 0.3 * (x + zz).sin(),
                lambda * 0.5 * (1.0 + t).recip() * x.cos(),
                0.0,
            ]
        }),
    };
    let mut cfg_w = SolverConfig::new(Scheme::Explicit, dt_u / (lambda * lambda), t_final / (lambda * lambda));
    cfg_w.output_every = 8;
    let traj_w = solver::run(&w0, &f_w, &cfg_w, |_| {})?;

    assert_eq!(traj_u.trace.len(), traj_w.trace.len());
    let mut max_gap: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (a, b) in traj_u.trace.iter().zip(&traj_w.trace) {
        max_gap = max_gap.max((a.sup_du - b.sup_du).abs());
        scale = scale.max(a.sup_du);
    }
    Ok(ScalingCovarianceReport {
        lambda,
        max_gap,
        sup_du_scale: scale,
    })
}

/// Manufactured-solution convergence: solve with the exact self-similar
/// transport at α (subcritical for α ≥ 1/2) and measure the sup-norm error
/// against the closed form at the final time.
pub fn manufactured_error(
    domain: &Domain,
    resolution: usize,
    scheme: Scheme,
    dt: f64,
    t_final: f64,
    sol: &SelfSimilarSolution,
) -> Result<f64> {
    let grid = Grid::new(domain.clone(), resolution)?;
    let u0 = GridFunction::from_fn(grid.clone(), 0.0, |x| sol.profile(x));
    let f = TransportField::SelfSimilar(sol.clone());
    let cfg = SolverConfig::new(scheme, dt, t_final);
    let traj = solver::run(&u0, &f, &cfg, |_| {})?;
    let last = traj.last();
    let mut err: f64 = 0.0;
    for &idx in &grid.active {
        let x = grid.pos_of(idx);
        let exact = sol.exact_fields(&x, last.time)?.u;
        err = err.max((last.values()[idx] - exact).abs());
    }
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run_config;

    fn minimal_cfg(dir: &str) -> String {
        format!(
            r#"
            [meta]
            name = "minimal"

            [domain]
            kind = "interval"
            a = 0.0
            b = 1.0
            resolution = 32

            [initial]
            kind = "zero"

            [solver]
            scheme = "explicit"
            t_final = 0.001

            [[diagnostics]]
            kind = "sup_v"

            [[diagnostics]]
            kind = "comparison_bound"

            [output]
            dir = "{dir}"
            "#
        )
    }

    #[test]
    fn minimal_experiment_runs_and_reports() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = run_config::parse(&minimal_cfg("runs/minimal")).unwrap();
        let outcome = run_experiment(&cfg, tmp.path()).unwrap();
        assert!(outcome.all_passed());
        assert!(outcome.out_dir.join("report.txt").exists());
        assert!(outcome.out_dir.join("trace.csv").exists());
        assert!(outcome.out_dir.join("index.csv").exists());
        // flat zero run: sup v identically 1
        let trace = std::fs::read_to_string(outcome.out_dir.join("trace.csv")).unwrap();
        for line in trace.lines().skip(1) {
            let sup_v: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            assert_eq!(sup_v, 1.0);
        }
    }

    #[test]
    fn determinism_byte_identical_outputs() {
        let tmp1 = tempfile::tempdir().unwrap();
        let tmp2 = tempfile::tempdir().unwrap();
        let text = minimal_cfg("runs/det");
        let cfg = run_config::parse(&text).unwrap();
        run_experiment(&cfg, tmp1.path()).unwrap();
        run_experiment(&cfg, tmp2.path()).unwrap();
        for file in ["report.txt", "trace.csv", "index.csv"] {
            let a = std::fs::read(tmp1.path().join("runs/det").join(file)).unwrap();
            let b = std::fs::read(tmp2.path().join("runs/det").join(file)).unwrap();
            assert_eq!(a, b, "{file} must be byte-identical");
        }
    }

    #[test]
    fn verify_suite_empty_dir() {
        let tmp = tempfile::tempdir().unwrap();
        let suite = verify_suite(tmp.path(), tmp.path()).unwrap();
        assert!(suite.ok());
        assert_eq!(suite.checks_total, 0);
    }

    #[test]
    fn sweep_overrides_dotted_keys() {
        let tmp = tempfile::tempdir().unwrap();
        let text = minimal_cfg("runs/sweep");
        let outcomes = sweep(
            &text,
            "solver.t_final",
            &["0.001".into(), "0.002".into()],
            tmp.path(),
        )
        .unwrap();
        assert_eq!(outcomes.len(), 2);
        assert_ne!(outcomes[0].out_dir, outcomes[1].out_dir);
    }

    #[test]
    fn scaling_covariance_is_exact_to_solver_tolerance() {
        let report = scaling_covariance_experiment(2.0, 96).unwrap();
        assert!(
            report.max_gap <= 1e-9 * (1.0 + report.sup_du_scale),
            "gap {} at scale {}",
            report.max_gap,
            report.sup_du_scale
        );
    }
}
