//! Monitored quantities along a trajectory: iterated transport norms, the
//! gradient bound, kernel-weighted monotonicity integrals, the evolution
//! residual of v, the boundary sign inequality, and Hölder-constant
//! estimates.
//!
//! Inequalities whose constants the analysis leaves unnamed are monitored —
//! their time series are produced and structural properties (signs,
//! monotonicity up to discretization tolerance, convergence orders) are
//! checked — but never asserted against invented numbers.

use num_rational::Rational64;

use crate::error::Error;
use crate::geom::{self, V3};
use crate::graph::{self, GraphQuantities};
use crate::grid::{stencil, GridFunction};
use crate::kernels::{self, KernelSpec};
use crate::solver::{SolutionTrajectory, TransportField};
use crate::Result;

/// An integrability exponent: a rational number ≥ 1, or ∞ (ess-sup norm).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    Finite(Rational64),
    Infinity,
}

impl Exponent {
    pub fn finite(num: i64, den: i64) -> Self {
        Exponent::Finite(Rational64::new(num, den))
    }

    pub fn integer(n: i64) -> Self {
        Exponent::Finite(Rational64::from_integer(n))
    }

    /// Exact reciprocal; 0 for ∞.
    pub fn recip(&self) -> Rational64 {
        match self {
            Exponent::Finite(r) => r.recip(),
            Exponent::Infinity => Rational64::from_integer(0),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Exponent::Finite(r) => Some(*r.numer() as f64 / *r.denom() as f64),
            Exponent::Infinity => None,
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// The pair (p, q) of the iterated norm, with the exact subcriticality gap
/// γ = 1 − n/p − 2/q. γ > 0 is the gradient-estimate regime; γ < 0 the
/// supercritical regime where the blow-up family lives.
#[derive(Debug, Clone, Copy)]
pub struct NormExponents {
    pub p: Exponent,
    pub q: Exponent,
}

impl NormExponents {
    pub fn new(p: Exponent, q: Exponent) -> Self {
        NormExponents { p, q }
    }

    /// γ = 1 − n/p − 2/q in exact rational arithmetic.
    pub fn gamma(&self, dim: usize) -> Rational64 {
        Rational64::from_integer(1)
            - Rational64::from_integer(dim as i64) * self.p.recip()
            - Rational64::from_integer(2) * self.q.recip()
    }

    pub fn is_subcritical(&self, dim: usize) -> bool {
        self.gamma(dim) > Rational64::from_integer(0)
    }
}

/// Metadata attached to a monitored series, echoed into its CSV.
#[derive(Debug, Clone, Default)]
pub struct QuantityMeta {
    pub pole: Option<V3>,
    pub s: Option<f64>,
    pub p: Option<String>,
    pub q: Option<String>,
}

/// A tagged time series of one monitored scalar.
#[derive(Debug, Clone)]
pub struct MonitoredQuantity {
    pub tag: String,
    pub series: Vec<(f64, f64)>,
    pub meta: QuantityMeta,
}

impl MonitoredQuantity {
    pub fn new(tag: impl Into<String>, meta: QuantityMeta) -> Self {
        MonitoredQuantity {
            tag: tag.into(),
            series: Vec::new(),
            meta,
        }
    }

    pub fn push(&mut self, t: f64, value: f64) {
        if let Some((last, _)) = self.series.last() {
            assert!(t > *last, "monitored times must increase");
        }
        assert!(value.is_finite(), "monitored value must be finite");
        self.series.push((t, value));
    }

    pub fn max_value(&self) -> f64 {
        self.series.iter().map(|(_, v)| *v).fold(f64::NAN, f64::max)
    }

    /// Largest increase between consecutive entries (≤ 0 means monotone
    /// nonincreasing).
    pub fn max_increment(&self) -> f64 {
        self.series
            .windows(2)
            .map(|w| w[1].1 - w[0].1)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Least-squares slope of ln y against ln x.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|(x, _)| x).sum();
    let sy: f64 = logs.iter().map(|(_, y)| y).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn snapshot_quantities(traj: &SolutionTrajectory) -> Result<Vec<GraphQuantities>> {
    traj.snapshots.iter().map(graph::compute_quantities).collect()
}

/// ‖f‖_{L^q_t L^p_x(t₀, τ, Γ_t)}: inner surface integrals of |f|^p on each
/// snapshot, outer trapezoid in time. p or q = ∞ become sup norms.
pub fn transport_norm(
    traj: &SolutionTrajectory,
    f: &TransportField,
    exps: &NormExponents,
    tau: f64,
) -> Result<f64> {
    let first = traj.snapshots.first().ok_or(Error::EmptyInterval)?;
    if tau <= first.time {
        return Err(Error::EmptyInterval);
    }
    let grid = first.grid();
    let dim = grid.domain.dim();
    let mut inner: Vec<(f64, f64)> = Vec::new(); // (t, inner L^p norm)
    for snap in &traj.snapshots {
        if snap.time > tau + 1e-12 {
            break;
        }
        let q = graph::compute_quantities(snap)?;
        let value = match exps.p.as_f64() {
            Some(p) => {
                let mut integrand = vec![0.0; grid.node_count()];
                for &idx in &grid.active {
                    let x = grid.pos_of(idx);
                    let fv = f.eval(dim, &x, snap.values()[idx], snap.time);
                    integrand[idx] = geom::norm(&fv).powf(p);
                }
                graph::surface_integral_with(snap, &q, &integrand).powf(1.0 / p)
            }
            None => grid
                .active
                .iter()
                .map(|&idx| {
                    let x = grid.pos_of(idx);
                    geom::norm(&f.eval(dim, &x, snap.values()[idx], snap.time))
                })
                .fold(0.0, f64::max),
        };
        inner.push((snap.time, value));
    }
    if inner.len() < 2 {
        return Err(Error::EmptyInterval);
    }
    match exps.q.as_f64() {
        Some(qv) => {
            let mut acc = 0.0;
            for w in inner.windows(2) {
                let (t0, v0) = w[0];
                let (t1, v1) = w[1];
                acc += 0.5 * (v0.powf(qv) + v1.powf(qv)) * (t1 - t0);
            }
            Ok(acc.powf(1.0 / qv))
        }
        None => Ok(inner.iter().map(|(_, v)| *v).fold(0.0, f64::max)),
    }
}

/// Time series of sup_Ω v(·,t) against the bound 4(1+‖du₀‖²_∞).
#[derive(Debug, Clone)]
pub struct GradientBoundReport {
    pub bound: f64,
    pub sup_du0: f64,
    /// First time sup v exceeds the bound, if ever.
    pub first_violation: Option<f64>,
    /// Largest t with the bound certified on [t₀, t].
    pub certified_until: f64,
    pub series: MonitoredQuantity,
}

pub fn gradient_bound_monitor(
    traj: &SolutionTrajectory,
    u0: &GridFunction,
) -> Result<GradientBoundReport> {
    let q0 = graph::compute_quantities(u0)?;
    let sup_du0 = crate::solver::sup_gradient_refined(u0.grid(), &q0);
    let bound = 4.0 * (1.0 + sup_du0 * sup_du0);
    let mut series = MonitoredQuantity::new("sup_v", QuantityMeta::default());
    let mut first_violation = None;
    let mut certified_until = traj.trace.first().map(|tr| tr.t).unwrap_or(0.0);
    for tr in &traj.trace {
        series.push(tr.t, tr.sup_v);
        if tr.sup_v > bound {
            if first_violation.is_none() {
                first_violation = Some(tr.t);
            }
        } else if first_violation.is_none() {
            certified_until = tr.t;
        }
    }
    Ok(GradientBoundReport {
        bound,
        sup_du0,
        first_violation,
        certified_until,
        series,
    })
}

/// Weight choice in the monotonicity integral ∫ φ(ρ₁+ρ₂) dH^n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightChoice {
    One,
    AreaElement,
}

/// ∫_{Γ_t} φ(ρ₁+ρ₂) dH^n = ∫_Ω φ(ρ₁+ρ₂) v dx per snapshot. Cells within
/// B(y, 4√(s−t)) of the pole are refined by 4× per-axis subsampling with
/// bilinear interpolation of u and v, which resolves the Gaussian once its
/// width approaches the grid spacing.
pub fn monotonicity_quantity(
    traj: &SolutionTrajectory,
    spec: &KernelSpec,
    weight: WeightChoice,
) -> Result<MonitoredQuantity> {
    let last = traj.snapshots.last().ok_or(Error::EmptyInterval)?;
    if last.time >= spec.s {
        return Err(Error::PoleNotCovered {
            last_time: last.time,
            s: spec.s,
        });
    }
    let meta = QuantityMeta {
        pole: Some(spec.pole),
        s: Some(spec.s),
        ..Default::default()
    };
    let tag = match weight {
        WeightChoice::One => "monotonicity_phi1",
        WeightChoice::AreaElement => "monotonicity_phiv",
    };
    let mut out = MonitoredQuantity::new(tag, meta);
    let quantities = snapshot_quantities(traj)?;
    for (snap, q) in traj.snapshots.iter().zip(&quantities) {
        let value = kernel_weighted_integral(snap, q, spec, weight)?;
        out.push(snap.time, value);
    }
    Ok(out)
}

fn kernel_weighted_integral(
    snap: &GridFunction,
    q: &GraphQuantities,
    spec: &KernelSpec,
    weight: WeightChoice,
) -> Result<f64> {
    let grid = snap.grid();
    let n = grid.domain.dim();
    let domain = &grid.domain;
    let tau = spec.s - snap.time;
    let refine_radius = 4.0 * tau.sqrt() + grid.h;
    let sub = 4usize;
    let cell_vol = grid.cell_volume();
    let sub_vol = cell_vol / (sub as f64).powi(n as i32);
    let mut acc = 0.0;
    for &idx in &grid.active {
        let x = grid.pos_of(idx);
        let spatial_gap = {
            let mut d2 = 0.0;
            for axis in 0..n {
                let d = x[axis] - spec.pole[axis];
                d2 += d * d;
            }
            d2.sqrt()
        };
        if spatial_gap <= refine_radius {
            // subsample the cell
            for a in 0..sub {
                for b in 0..if n == 2 { sub } else { 1 } {
                    let mut p = x;
                    p[0] += ((a as f64 + 0.5) / sub as f64 - 0.5) * grid.h;
                    if n == 2 {
                        p[1] += ((b as f64 + 0.5) / sub as f64 - 0.5) * grid.h;
                    }
                    if !domain.contains(&p) {
                        continue;
                    }
                    let u_p = match grid.interpolate(snap.values(), &p) {
                        Some(v) => v,
                        None => snap.values()[idx],
                    };
                    let v_p = match grid.interpolate(&q.v, &p) {
                        Some(v) => v,
                        None => q.v[idx],
                    };
                    let mut point = p;
                    point[n] = u_p;
                    let pair = kernels::eval_truncated(spec, domain, &point, snap.time)?;
                    let phi = match weight {
                        WeightChoice::One => 1.0,
                        WeightChoice::AreaElement => v_p,
                    };
                    acc += phi * pair.sum() * v_p * sub_vol;
                }
            }
        } else {
            let mut point = x;
            point[n] = snap.values()[idx];
            let pair = kernels::eval_truncated(spec, domain, &point, snap.time)?;
            let phi = match weight {
                WeightChoice::One => 1.0,
                WeightChoice::AreaElement => q.v[idx],
            };
            acc += phi * pair.sum() * q.v[idx] * cell_vol;
        }
    }
    Ok(acc)
}

/// η(t)·∫ v(ρ₁+ρ₂) dH^n with η(t) = exp(−c₁₃(s^{1/4} − (s−t)^{1/4}));
/// η(0) = 1 and η is nonincreasing.
pub fn weighted_quantity(
    traj: &SolutionTrajectory,
    spec: &KernelSpec,
    c13: f64,
) -> Result<MonitoredQuantity> {
    let base = monotonicity_quantity(traj, spec, WeightChoice::AreaElement)?;
    let mut out = MonitoredQuantity::new("weighted_phiv", base.meta.clone());
    let s = spec.s;
    for (t, v) in base.series {
        let eta = (-c13 * (s.powf(0.25) - (s - t).powf(0.25))).exp();
        out.push(t, eta * v);
    }
    Ok(out)
}

/// Boundary term ∫_{∂Γ_t}(ρ₁+ρ₂)(D_Γ v·ν̂) dH^{n−1}, exposed as a monitored
/// series with no asserted sign. Exact endpoint sum in one dimension;
/// staircase quadrature over boundary fringe nodes in two (weight h per
/// node), adequate for qualitative monitoring only.
pub fn boundary_flux_series(
    traj: &SolutionTrajectory,
    spec: &KernelSpec,
) -> Result<MonitoredQuantity> {
    let meta = QuantityMeta {
        pole: Some(spec.pole),
        s: Some(spec.s),
        ..Default::default()
    };
    let mut out = MonitoredQuantity::new("boundary_flux", meta);
    let quantities = snapshot_quantities(traj)?;
    for (snap, q) in traj.snapshots.iter().zip(&quantities) {
        if snap.time >= spec.s {
            break;
        }
        let grid = snap.grid();
        let n = grid.domain.dim();
        let dgv = graph::tangential_gradient_field(snap, q, &q.v);
        let mut acc = 0.0;
        for &idx in &grid.active {
            if !grid.fringe[idx] {
                continue;
            }
            let x = grid.pos_of(idx);
            let bp = grid
                .domain
                .nearest_boundary(&x)
                .expect("fringe nodes are near the boundary");
            let mut point = bp.position;
            point[n] = snap.values()[idx];
            let pair = kernels::eval_truncated(spec, &grid.domain, &point, snap.time)?;
            let flux = geom::dot(&dgv[idx], &bp.normal);
            let weight = if n == 1 { 1.0 } else { grid.h };
            acc += pair.sum() * flux * weight;
        }
        out.push(snap.time, acc);
    }
    Ok(out)
}

/// Residual of the evolution identity for v:
/// ∂_t v − Δ_Γ v − (du/v · dv)(∂_t u / v) + |A|²v + 2|D_Γ v|²/v − du·d(f·n⃗),
/// evaluated with centered differences in time across snapshots (an estimate
/// deliberately independent of the scheme's own update). Returns the sup
/// norm per interior snapshot time.
pub fn evolution_residual(
    traj: &SolutionTrajectory,
    f: &TransportField,
) -> Result<Vec<(f64, f64)>> {
    if traj.snapshots.len() < 3 {
        return Err(Error::InsufficientSnapshots {
            needed: 3,
            got: traj.snapshots.len(),
        });
    }
    let quantities = snapshot_quantities(traj)?;
    let dt_snap = traj.snapshot_dt();
    let mut out = Vec::new();
    for k in 1..traj.snapshots.len() - 1 {
        let (prev, cur, next) = (
            &traj.snapshots[k - 1],
            &traj.snapshots[k],
            &traj.snapshots[k + 1],
        );
        // guard against a truncated final interval (blow-up stop)
        if (next.time - cur.time - dt_snap).abs() > 1e-9 * (1.0 + dt_snap)
            || (cur.time - prev.time - dt_snap).abs() > 1e-9 * (1.0 + dt_snap)
        {
            continue;
        }
        let sup = evolution_residual_at(
            cur,
            &quantities[k],
            (&quantities[k - 1], &quantities[k + 1]),
            (prev, next),
            f,
            dt_snap,
        );
        out.push((cur.time, sup));
    }
    Ok(out)
}

fn evolution_residual_at(
    cur: &GridFunction,
    q: &GraphQuantities,
    (q_prev, q_next): (&GraphQuantities, &GraphQuantities),
    (prev, next): (&GridFunction, &GridFunction),
    f: &TransportField,
    dt_snap: f64,
) -> f64 {
    let grid = cur.grid();
    let n = grid.domain.dim();
    let t = cur.time;

    // f·n⃗ as a node field
    let mut f_dot_n = vec![0.0; grid.node_count()];
    if !f.is_zero() {
        for &idx in &grid.active {
            let x = grid.pos_of(idx);
            let fv = f.eval(n, &x, cur.values()[idx], t);
            f_dot_n[idx] = geom::dot(&fv, &q.normal[idx]);
        }
    }
    let dgv = graph::tangential_gradient_field(cur, q, &q.v);

    // per-axis first derivatives of the v field (active-only stencils)
    let mut dv_cols: Vec<Vec<f64>> = vec![vec![0.0; grid.node_count()]; 2];
    for &idx in &grid.active {
        let g = stencil::field_grad(grid, &q.v, idx);
        dv_cols[0][idx] = g[0];
        dv_cols[1][idx] = g[1];
    }

    let mut sup: f64 = 0.0;
    for &idx in &grid.active {
        let v = q.v[idx];
        let du = q.du[idx];
        let dtv = (q_next.v[idx] - q_prev.v[idx]) / (2.0 * dt_snap);
        let dtu = (next.values()[idx] - prev.values()[idx]) / (2.0 * dt_snap);

        // analytic dv from the graph quantities: dv_j = Σ_k u_k u_kj / v
        let hess = [
            [q.d2u[idx][0], q.d2u[idx][2]],
            [q.d2u[idx][2], q.d2u[idx][1]],
        ];
        let mut dv_analytic = [0.0f64; 2];
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += du[k] * hess[k][j];
            }
            dv_analytic[j] = acc / v;
        }

        // Δ_Γ v in expanded form: g^{ij} ∂_ij v + c^j ∂_j v, with v-field
        // derivatives from active-only stencils (uniformly consistent at the
        // fringe, where v satisfies no boundary condition on curved walls)
        let g = graph::inverse_metric(&du, v);
        let mut lap = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dij = stencil::field_dx(grid, &dv_cols[j], idx, i);
                lap += g[i][j] * dij;
            }
        }
        // c^j = [(dv)_j − (Δu·u_j + (d²u du)_j)/v + (du·dv) u_j/v²]/v
        let laplace_u = q.d2u[idx][0] + if n == 2 { q.d2u[idx][1] } else { 0.0 };
        let mut du_dot_dv = 0.0;
        for k in 0..n {
            du_dot_dv += du[k] * dv_analytic[k];
        }
        for j in 0..n {
            let mut hess_du_j = 0.0;
            for k in 0..n {
                hess_du_j += hess[j][k] * du[k];
            }
            let c_j = (dv_analytic[j] - (laplace_u * du[j] + hess_du_j) / v
                + du_dot_dv * du[j] / (v * v))
                / v;
            lap += c_j * dv_cols[j][idx];
        }

        let dgv2 = geom::norm_sq(&dgv[idx]);
        let du_d_fn = if f.is_zero() {
            0.0
        } else {
            let dfn = stencil::field_grad(grid, &f_dot_n, idx);
            (0..n).map(|k| du[k] * dfn[k]).sum::<f64>()
        };
        let residual = dtv - lap - du_dot_dv / v * (dtu / v) + q.a2[idx] * v
            + 2.0 * dgv2 / v
            - du_d_fn;
        sup = sup.max(residual.abs());
    }
    sup
}

/// Boundary sign audit of D_Γ v·ν̂ ≤ 0 for convex domains: the direct
/// projection formula and the second-fundamental-form identity
/// (1/v)B(du,du) are both evaluated at boundary-adjacent nodes.
#[derive(Debug, Clone)]
pub struct BoundarySignReport {
    /// max over nodes and times of D_Γ v·ν̂ (should be ≤ tolerance).
    pub max_direct: f64,
    /// max of (1/v)B(du,du) (nonpositive by convexity up to rounding).
    pub max_via_b: f64,
    /// max |direct − via_B| (discretization gap between the two routes).
    pub max_gap: f64,
    pub series: MonitoredQuantity,
}

pub fn boundary_sign_check(traj: &SolutionTrajectory) -> Result<BoundarySignReport> {
    let mut report = BoundarySignReport {
        max_direct: f64::NEG_INFINITY,
        max_via_b: f64::NEG_INFINITY,
        max_gap: 0.0,
        series: MonitoredQuantity::new("boundary_sign_max", QuantityMeta::default()),
    };
    let quantities = snapshot_quantities(traj)?;
    for (snap, q) in traj.snapshots.iter().zip(&quantities) {
        let grid = snap.grid();
        let n = grid.domain.dim();
        let mut t_max = f64::NEG_INFINITY;
        for &idx in &grid.active {
            if !grid.fringe[idx] {
                continue;
            }
            let x = grid.pos_of(idx);
            let bp = grid
                .domain
                .nearest_boundary(&x)
                .expect("fringe nodes project uniquely");
            let dv = stencil::field_grad(grid, &q.v, idx);
            let du = q.du[idx];
            let mut dv_dot_nu = 0.0;
            let mut dv_dot_du = 0.0;
            let mut du_dot_nu = 0.0;
            for k in 0..n {
                dv_dot_nu += dv[k] * bp.normal[k];
                dv_dot_du += dv[k] * du[k];
                du_dot_nu += du[k] * bp.normal[k];
            }
            let v = q.v[idx];
            let direct = dv_dot_nu + dv_dot_du * (-du_dot_nu) / (v * v);
            let du_lift = [du[0], if n == 2 { du[1] } else { 0.0 }, 0.0];
            let via_b = bp.second_form(&du_lift) / v;
            report.max_direct = report.max_direct.max(direct);
            report.max_via_b = report.max_via_b.max(via_b);
            report.max_gap = report.max_gap.max((direct - via_b).abs());
            t_max = t_max.max(direct.max(via_b));
        }
        if t_max.is_finite() {
            report.series.push(snap.time, t_max);
        }
    }
    Ok(report)
}

/// One space-time sample point for Hölder estimation.
#[derive(Debug, Clone, Copy)]
pub struct SpaceTimeSample {
    pub x: V3,
    pub height: f64,
    pub t: f64,
}

/// Empirical parabolic Hölder quotient
/// max |f(X,t)−f(Y,s)| / (|X−Y|^α + |t−s|^{α/2}) over sample pairs;
/// a lower bound for the true constant. Coincident pairs are skipped.
pub fn holder_constant_estimate(
    f: &TransportField,
    dim: usize,
    pairs: &[(SpaceTimeSample, SpaceTimeSample)],
    alpha: f64,
) -> f64 {
    let mut best: f64 = 0.0;
    for (a, b) in pairs {
        let mut xa = a.x;
        xa[dim] = a.height;
        let mut xb = b.x;
        xb[dim] = b.height;
        let dx = geom::norm(&geom::sub(&xa, &xb));
        let dt = (a.t - b.t).abs();
        let denom = dx.powf(alpha) + dt.powf(0.5 * alpha);
        if denom < 1e-14 {
            continue;
        }
        let fa = f.eval(dim, &a.x, a.height, a.t);
        let fb = f.eval(dim, &b.x, b.height, b.t);
        let num = geom::norm(&geom::sub(&fa, &fb));
        best = best.max(num / denom);
    }
    best
}
