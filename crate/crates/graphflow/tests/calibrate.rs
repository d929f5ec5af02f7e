//! Temporary calibration probes (removed before finalization).

use graphflow::diagnostics::{self, WeightChoice};
use graphflow::domain::Domain;
use graphflow::experiment;
use graphflow::grid::{Grid, GridFunction};
use graphflow::kernels::KernelSpec;
use graphflow::manufactured::SelfSimilarSolution;
use graphflow::solver::{self, Scheme, SolverConfig, TransportField};

#[test]
#[ignore]
fn probe_manufactured_convergence() {
    let domain = Domain::interval(-1.0, 1.0);
    let sol = SelfSimilarSolution::new(1, 1.0, 0.5, 1.0);
    let t_final = 0.25;
    println!("--- spatial (dt = 0.1 h^2) ---");
    let mut prev: Option<f64> = None;
    for m in [128usize, 256, 512] {
        let h = 2.0 / m as f64;
        let dt = 0.1 * h * h;
        let t0 = std::time::Instant::now();
        let err = experiment::manufactured_error(&domain, m, Scheme::SemiImplicit, dt, t_final, &sol)
            .unwrap();
        println!(
            "m={m} err={err:.4e} rate={:.3} ({:?})",
            prev.map(|p: f64| (p / err).log2()).unwrap_or(f64::NAN),
            t0.elapsed()
        );
        prev = Some(err);
    }
    println!("--- temporal (m = 512) ---");
    let mut prev: Option<f64> = None;
    for k in [16usize, 32, 64] {
        let dt = t_final / k as f64;
        let err = experiment::manufactured_error(&domain, 512, Scheme::SemiImplicit, dt, t_final, &sol)
            .unwrap();
        println!(
            "dt={dt:.4e} err={err:.4e} rate={:.3}",
            prev.map(|p: f64| (p / err).log2()).unwrap_or(f64::NAN)
        );
        prev = Some(err);
    }
}

#[test]
#[ignore]
fn probe_monotonicity() {
    let g = Grid::new(Domain::interval(0.0, 1.0), 256).unwrap();
    let u0 = GridFunction::from_fn(g.clone(), 0.0, |p| {
        0.2 * (2.0 * std::f64::consts::PI * p[0]).cos()
    });
    let s = 1.0e-3;
    let dt = SolverConfig::default_dt(Scheme::Explicit, g.h, 1);
    let mut cfg = SolverConfig::new(Scheme::Explicit, dt, s - 1.5e-4);
    cfg.output_every = 3;
    let traj = solver::run(&u0, &TransportField::Zero, &cfg, |_| {}).unwrap();
    let spec = KernelSpec {
        dim: 1,
        pole: [0.5, -0.2, 0.0],
        s,
        cutoff_radius: 3.2,
    };
    println!("plateau {} vs 6 sqrt(s) {}", 3.2 / 16.0, 6.0 * s.sqrt());
    let t0 = std::time::Instant::now();
    let q = diagnostics::monotonicity_quantity(&traj, &spec, WeightChoice::AreaElement).unwrap();
    println!("quantity eval in {:?}, snapshots {}", t0.elapsed(), traj.snapshots.len());
    let max_inc = q.max_increment();
    println!(
        "first={:.6} last={:.6} max_increment={:.3e} tol C(h+dt)={:.3e}",
        q.series.first().unwrap().1,
        q.series.last().unwrap().1,
        max_inc,
        2.0 * (g.h + dt)
    );
    // interior-pole phi1 variant approaching 1 from below
    let q1 = diagnostics::monotonicity_quantity(&traj, &spec, WeightChoice::One).unwrap();
    println!(
        "phi1: first={:.6} last={:.6} max_inc={:.3e}",
        q1.series.first().unwrap().1,
        q1.series.last().unwrap().1,
        q1.max_increment()
    );
}

#[test]
#[ignore]
fn probe_evolution_residual_orders() {
    let domain = Domain::interval(-1.0, 1.0);
    let sol = SelfSimilarSolution::new(1, 1.0, 0.5, 1.0);
    let f = TransportField::SelfSimilar(sol.clone());
    let mut points = Vec::new();
    for m in [64usize, 128, 256] {
        let grid = Grid::new(domain.clone(), m).unwrap();
        let u0 = GridFunction::from_fn(grid.clone(), 0.0, |x| sol.profile(x));
        let dt = grid.h / 4.0;
        let mut cfg = SolverConfig::new(Scheme::SemiImplicit, dt, 0.1);
        cfg.output_every = 2;
        let traj = solver::run(&u0, &f, &cfg, |_| {}).unwrap();
        let res = diagnostics::evolution_residual(&traj, &f).unwrap();
        let sup = res.iter().map(|(_, v)| *v).fold(0.0, f64::max);
        let scale = grid.h + dt;
        println!("m={m} h+dt={scale:.4e} residual sup={sup:.4e}");
        points.push((scale, sup));
    }
    println!("fitted order {:.3}", diagnostics::fit_loglog_slope(&points));

    // PDE residual of the solver (discrete operator on exact solution)
    println!("--- discrete PDE residual at fixed t (O(h^2) expected) ---");
    for m in [64usize, 128, 256] {
        let grid = Grid::new(domain.clone(), m).unwrap();
        let t = 0.3;
        let u = GridFunction::from_fn(grid.clone(), t, |x| sol.exact_fields(x, t).unwrap().u);
        let q = graphflow::graph::compute_quantities(&u).unwrap();
        let mut sup: f64 = 0.0;
        for &idx in &grid.active {
            let x = grid.pos_of(idx);
            let a = solver::coefficients(&q.du[idx]);
            let d2 = q.d2u[idx];
            let lhs = sol.exact_fields(&x, t).unwrap().dtu;
            let g = sol.transport_height(&x, t).unwrap();
            let fv = [0.0, g, 0.0];
            let minus_du_one = [-q.du[idx][0], 1.0, 0.0];
            let rhs = a[0][0] * d2[0] + fv[0] * minus_du_one[0] + fv[1] * minus_du_one[1];
            sup = sup.max((lhs - rhs).abs());
        }
        println!("m={m} residual={sup:.4e}");
    }
}

#[test]
#[ignore]
fn probe_blowup_experiment() {
    use graphflow::manufactured::BlowupParameters;
    use num_rational::Rational64;
    let params = BlowupParameters::new(
        2,
        Rational64::from_integer(2),
        Rational64::from_integer(4),
    );
    let domain = Domain::disk(1.0);
    let ecfg = experiment::BlowupExperimentConfig::default();
    let t0 = std::time::Instant::now();
    let report =
        experiment::blowup_experiment(&params, &domain, &[96, 128], &ecfg, None).unwrap();
    println!("elapsed {:?}", t0.elapsed());
    println!(
        "eps0={} alpha0={} measured_slope={:.5} formula={:.5}",
        report.eps0, report.alpha0, report.measured_inner_slope, report.formula_inner_slope
    );
    for (d, n) in &report.partial_norms {
        println!("delta={d:.1e} partial norm={n:.6}");
    }
    for run in &report.ladder {
        println!(
            "m={} blowup={:?} fitted_growth={:.5} expected={:.5}",
            run.resolution, run.blowup_at, run.fitted_growth, report.expected_growth
        );
    }
    println!(
        "companion certified_until={} violated={}",
        report.companion_certified_until, report.companion_bound_violated
    );
}

#[test]
#[ignore]
fn probe_boundary_sign_magnitudes() {
    for m in [64usize, 96, 128] {
        let gd = Grid::new(Domain::disk(1.0), m).unwrap();
        let saddle = |p: &[f64; 3]| {
            0.2 * (p[0] * p[0] - p[1] * p[1]) * (2.0 - p[0] * p[0] - p[1] * p[1])
        };
        let u0d = GridFunction::from_fn(gd.clone(), 0.0, saddle);
        let dtd = SolverConfig::default_dt(Scheme::Explicit, gd.h, 2);
        let cfgd = SolverConfig::new(Scheme::Explicit, dtd, 10.0 * dtd);
        let trajd = solver::run(&u0d, &TransportField::Zero, &cfgd, |_| {}).unwrap();
        let rd = diagnostics::boundary_sign_check(&trajd).unwrap();
        println!(
            "m={m} h={:.4} max_direct={:.4e} max_via_b={:.4e} gap={:.4e} gap/h={:.3}",
            gd.h,
            rd.max_direct,
            rd.max_via_b,
            rd.max_gap,
            rd.max_gap / gd.h
        );
    }
}
