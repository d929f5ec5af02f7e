//! Discrete differential geometry of the evolving graph Γ_t = {(x, u(x,t))}.
//!
//! All per-node quantities come from centered second-order stencils applied
//! after the Neumann closure: the slope du, area element v = √(1+|du|²),
//! scalar mean curvature h = −div(du/v), unit normal n⃗ = (−du,1)/v, and the
//! squared norm of the second fundamental form
//! |A|² = g^{ik} g^{jl} u_ij u_kl / v² with g^{ij} = δ_ij − u_i u_j / v².

use crate::error::Error;
use crate::geom::V3;
use crate::grid::{stencil, GridFunction};
use crate::Result;

/// Per-node geometric quantities of the graph of `u`. Vectors are padded to
/// the full grid length; entries are meaningful at active nodes.
#[derive(Debug, Clone)]
pub struct GraphQuantities {
    pub du: Vec<[f64; 2]>,
    /// Second derivatives packed as [u_xx, u_yy, u_xy].
    pub d2u: Vec<[f64; 3]>,
    pub v: Vec<f64>,
    pub h: Vec<f64>,
    pub normal: Vec<V3>,
    pub a2: Vec<f64>,
}

/// Inverse metric g^{ij} = δ_ij − u_i u_j / v² as a symmetric 2×2.
#[inline]
pub fn inverse_metric(du: &[f64; 2], v: f64) -> [[f64; 2]; 2] {
    let v2 = v * v;
    [
        [1.0 - du[0] * du[0] / v2, -du[0] * du[1] / v2],
        [-du[0] * du[1] / v2, 1.0 - du[1] * du[1] / v2],
    ]
}

pub fn compute_quantities(u: &GridFunction) -> Result<GraphQuantities> {
    u.check_finite("compute_quantities")?;
    let grid = u.grid().clone();
    let n = grid.domain.dim();
    let vals = u.values();
    let count = grid.node_count();
    let mut q = GraphQuantities {
        du: vec![[0.0; 2]; count],
        d2u: vec![[0.0; 3]; count],
        v: vec![1.0; count],
        h: vec![0.0; count],
        normal: vec![[0.0, 0.0, 1.0]; count],
        a2: vec![0.0; count],
    };
    for &idx in &grid.active {
        let mut du = [0.0; 2];
        let mut d2 = [0.0; 3];
        for axis in 0..n {
            du[axis] = stencil::dx(&grid, vals, idx, axis);
            d2[axis] = stencil::dxx(&grid, vals, idx, axis);
        }
        if n == 2 {
            d2[2] = stencil::dxy(&grid, vals, idx);
        }
        let v = (1.0 + du[0] * du[0] + du[1] * du[1]).sqrt();
        let g = inverse_metric(&du, v);
        let hess = [[d2[0], d2[2]], [d2[2], d2[1]]];
        // h = −(1/v) g^{ij} u_ij
        let mut gu = 0.0;
        for i in 0..n {
            for j in 0..n {
                gu += g[i][j] * hess[i][j];
            }
        }
        let h = -gu / v;
        // |A|² = g^{ik} g^{jl} u_ij u_kl / v²
        let mut a2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        a2 += g[i][k] * g[j][l] * hess[i][j] * hess[k][l];
                    }
                }
            }
        }
        a2 /= v * v;
        q.du[idx] = du;
        q.d2u[idx] = d2;
        q.v[idx] = v;
        q.h[idx] = h;
        // n⃗ = (−du, 1)/v with the height in slot n of the padded vector
        let mut nrm = [0.0; 3];
        for axis in 0..n {
            nrm[axis] = -du[axis] / v;
        }
        nrm[n] = 1.0 / v;
        q.normal[idx] = nrm;
        q.a2[idx] = a2;
    }
    Ok(q)
}

/// Laplace–Beltrami operator on Γ_t applied to a node field φ, in
/// conservative flux form: Δ_Γ φ = (1/v) Σ_i ∂_i (v g^{ij} ∂_j φ).
/// Fluxes live on cell faces, so the stencil annihilates constants exactly.
/// Both ghost layers must carry the Neumann closure.
pub fn laplace_beltrami(u: &GridFunction, phi: &GridFunction) -> Result<GridFunction> {
    if !u.grid().compatible(phi.grid()) {
        return Err(Error::GridMismatch);
    }
    let q = compute_quantities(u)?;
    let grid = u.grid().clone();
    let n = grid.domain.dim();
    let h = grid.h;
    let pvals = phi.values();
    let mut out = vec![0.0; grid.node_count()];

    // face flux in direction `axis` between idx and idx+stride(axis)
    let face_flux = |idx: usize, axis: usize| -> f64 {
        let s = grid.stride(axis);
        let jdx = idx + s;
        let vf = 0.5 * (q.v[idx] + q.v[jdx]);
        let duf = [
            0.5 * (q.du[idx][0] + q.du[jdx][0]),
            0.5 * (q.du[idx][1] + q.du[jdx][1]),
        ];
        let gf = inverse_metric(&duf, vf);
        // ∂_axis φ on the face
        let dphi_axis = (pvals[jdx] - pvals[idx]) / h;
        let mut flux = vf * gf[axis][axis] * dphi_axis;
        if n == 2 {
            let other = 1 - axis;
            let so = grid.stride(other);
            // transverse derivative averaged from the two adjacent centered
            // differences
            let d_at = |k: usize| (pvals[k + so] - pvals[k - so]) / (2.0 * h);
            let dphi_other = 0.5 * (d_at(idx) + d_at(jdx));
            flux += vf * gf[axis][other] * dphi_other;
        }
        flux
    };

    for &idx in &grid.active {
        let mut div = 0.0;
        for axis in 0..n {
            let s = grid.stride(axis);
            div += (face_flux(idx, axis) - face_flux(idx - s, axis)) / h;
        }
        out[idx] = div / q.v[idx];
    }
    // note: out is a derived field; reuse the closure so ghosts hold mirror
    // values rather than garbage
    Ok(GridFunction::from_values(grid, out, u.time))
}

/// Scalar field on the ambient cylinder Ω×R with an analytic gradient.
pub trait AmbientScalar {
    fn value(&self, x: &V3, height: f64) -> f64;
    /// Gradient in R^{n+1}: spatial components first, height slot last
    /// (slot n of the padded vector).
    fn gradient(&self, x: &V3, height: f64) -> V3;
}

/// Tangential gradient D_Γ φ = Dφ − (Dφ·n⃗)n⃗ of an ambient scalar restricted
/// to the graph. Returns one ambient vector per node.
pub fn tangential_gradient(
    u: &GridFunction,
    phi: &dyn AmbientScalar,
) -> Result<Vec<V3>> {
    let q = compute_quantities(u)?;
    tangential_gradient_with(u, &q, phi)
}

pub fn tangential_gradient_with(
    u: &GridFunction,
    q: &GraphQuantities,
    phi: &dyn AmbientScalar,
) -> Result<Vec<V3>> {
    let grid = u.grid();
    let mut out = vec![[0.0; 3]; grid.node_count()];
    for &idx in &grid.active {
        let x = grid.pos_of(idx);
        let grad = phi.gradient(&x, u.values()[idx]);
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFiniteInput {
                context: "tangential_gradient",
            });
        }
        let nrm = q.normal[idx];
        let gn = crate::geom::dot(&grad, &nrm);
        out[idx] = crate::geom::axpy(&grad, -gn, &nrm);
    }
    Ok(out)
}

/// Tangential gradient of a node field φ on Γ_t, using the ambient lift
/// Dφ = (dφ, 0). dφ is differenced over active nodes only (one-sided at the
/// fringe) since derived fields carry no boundary condition.
pub fn tangential_gradient_field(
    u: &GridFunction,
    q: &GraphQuantities,
    phi_vals: &[f64],
) -> Vec<V3> {
    let grid = u.grid();
    let n = grid.domain.dim();
    let mut out = vec![[0.0; 3]; grid.node_count()];
    for &idx in &grid.active {
        let dphi = stencil::field_grad(grid, phi_vals, idx);
        let mut grad: V3 = [0.0; 3];
        grad[..n].copy_from_slice(&dphi[..n]);
        let nrm = q.normal[idx];
        let gn = crate::geom::dot(&grad, &nrm);
        out[idx] = crate::geom::axpy(&grad, -gn, &nrm);
    }
    out
}

/// ∫_{Γ_t} integrand dH^n = ∫_Ω integrand · v dx by midpoint quadrature on
/// the masked grid.
pub fn surface_integral(u: &GridFunction, integrand: &[f64]) -> Result<f64> {
    let q = compute_quantities(u)?;
    Ok(surface_integral_with(u, &q, integrand))
}

pub fn surface_integral_with(
    u: &GridFunction,
    q: &GraphQuantities,
    integrand: &[f64],
) -> f64 {
    let grid = u.grid();
    let vol = grid.cell_volume();
    grid.active
        .iter()
        .map(|&i| integrand[i] * q.v[i])
        .sum::<f64>()
        * vol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::grid::Grid;
    use std::sync::Arc;

    fn interval_grid(m: usize) -> Arc<Grid> {
        Grid::new(Domain::interval(0.0, 1.0), m).unwrap()
    }

    #[test]
    fn flat_graph_quantities() {
        let g = interval_grid(32);
        let u = GridFunction::zeros(g.clone(), 0.0);
        let q = compute_quantities(&u).unwrap();
        for &idx in &g.active {
            assert_eq!(q.v[idx], 1.0);
            assert_eq!(q.h[idx], 0.0);
            assert_eq!(q.a2[idx], 0.0);
            assert_eq!(q.normal[idx][1], 1.0);
        }
    }

    #[test]
    fn parabola_curvature_matches_closed_form() {
        // 1-D: h = −u″/v³; centered stencils are exact on quadratics
        let g = Grid::new(Domain::interval(-1.0, 1.0), 512).unwrap();
        let u = GridFunction::from_fn(g.clone(), 0.0, |p| p[0] * p[0]);
        let q = compute_quantities(&u).unwrap();
        // node nearest x = 0
        let idx = g
            .active
            .iter()
            .copied()
            .min_by(|&a, &b| {
                g.pos_of(a)[0]
                    .abs()
                    .partial_cmp(&g.pos_of(b)[0].abs())
                    .unwrap()
            })
            .unwrap();
        let x0 = g.pos_of(idx)[0];
        let v = (1.0 + 4.0 * x0 * x0).sqrt();
        let exact = -2.0 / (v * v * v);
        assert!((q.h[idx] - exact).abs() < 1e-10, "h = {}", q.h[idx]);
        assert!((q.a2[idx] - exact * exact).abs() < 1e-10);
    }

    #[test]
    fn affine_graph_is_minimal_in_the_interior() {
        let g = Grid::new(Domain::interval(0.0, 1.0), 64).unwrap();
        let u = GridFunction::from_fn(g.clone(), 0.0, |p| p[0]);
        let q = compute_quantities(&u).unwrap();
        for &idx in &g.active {
            if g.fringe[idx] {
                continue; // the closure bends affine data at the boundary
            }
            assert!((q.v[idx] - 2.0_f64.sqrt()).abs() < 1e-12);
            assert!(q.h[idx].abs() < 1e-10);
            assert!(q.a2[idx].abs() < 1e-10);
        }
    }

    #[test]
    fn curvature_inequality_h2_le_n_a2() {
        let g = Grid::new(Domain::interval(0.0, 1.0), 128).unwrap();
        let u = GridFunction::from_fn(g.clone(), 0.0, |p| {
            0.3 * (2.0 * std::f64::consts::PI * p[0]).cos()
        });
        let q = compute_quantities(&u).unwrap();
        for &idx in &g.active {
            assert!(q.h[idx] * q.h[idx] <= 1.0 * q.a2[idx] + 1e-12);
        }
        let gd = Grid::new(Domain::disk(1.0), 48).unwrap();
        let ud = GridFunction::from_fn(gd.clone(), 0.0, |p| {
            0.2 * (p[0] * p[0] - p[1] * p[1]) * (2.0 - p[0] * p[0] - p[1] * p[1])
        });
        let qd = compute_quantities(&ud).unwrap();
        for &idx in &gd.active {
            assert!(qd.h[idx] * qd.h[idx] <= 2.0 * qd.a2[idx] + 1e-10);
        }
    }

    #[test]
    fn laplace_beltrami_flat_equals_euclidean() {
        let g = Grid::new(Domain::disk(1.0), 64).unwrap();
        let u = GridFunction::zeros(g.clone(), 0.0);
        let phi = GridFunction::from_fn(g.clone(), 0.0, |p| p[0] * p[0]);
        let lb = laplace_beltrami(&u, &phi).unwrap();
        for &idx in &g.active {
            if !g.is_core(idx, 2.0) {
                continue; // φ = x₁² violates the Neumann condition at ∂Ω
            }
            assert!(
                (lb.values()[idx] - 2.0).abs() < 1e-9,
                "Δφ = {}",
                lb.values()[idx]
            );
        }
    }

    #[test]
    fn laplace_beltrami_annihilates_constants() {
        // interval ghosts are plain copies: exact annihilation
        let g = interval_grid(32);
        let u = GridFunction::from_fn(g.clone(), 0.0, |p| 0.3 * p[0].sin());
        let phi = GridFunction::from_fn(g.clone(), 0.0, |_| 7.25);
        let lb = laplace_beltrami(&u, &phi).unwrap();
        for &idx in &g.active {
            assert_eq!(lb.values()[idx], 0.0);
        }
        // disk ghosts interpolate, leaving only rounding residue
        let gd = Grid::new(Domain::disk(1.0), 32).unwrap();
        let ud = GridFunction::from_fn(gd.clone(), 0.0, |p| 0.3 * p[0].sin());
        let phid = GridFunction::from_fn(gd.clone(), 0.0, |_| 7.25);
        let lbd = laplace_beltrami(&ud, &phid).unwrap();
        for &idx in &gd.active {
            assert!(lbd.values()[idx].abs() < 1e-11);
        }
    }

    #[test]
    fn laplace_beltrami_grid_mismatch() {
        let g1 = interval_grid(16);
        let g2 = interval_grid(32);
        let u = GridFunction::zeros(g1, 0.0);
        let phi = GridFunction::zeros(g2, 0.0);
        assert!(matches!(
            laplace_beltrami(&u, &phi),
            Err(Error::GridMismatch)
        ));
    }

    /// Ambient coordinate function x_slot (the height lives in slot n).
    struct Coordinate(usize);
    impl AmbientScalar for Coordinate {
        fn value(&self, x: &V3, _height: f64) -> f64 {
            x[self.0]
        }
        fn gradient(&self, _x: &V3, _height: f64) -> V3 {
            let mut g = [0.0; 3];
            g[self.0] = 1.0;
            g
        }
    }

    #[test]
    fn tangential_gradient_projects_out_the_normal() {
        let g = interval_grid(64);
        // u = x on (0,1): normal (−1,1)/√2, D_Γ x₁ = (1/2, 1/2)
        let u = GridFunction::from_fn(g.clone(), 0.0, |p| p[0]);
        let tg = tangential_gradient(&u, &Coordinate(0)).unwrap();
        for &idx in &g.active {
            if g.fringe[idx] {
                continue;
            }
            assert!((tg[idx][0] - 0.5).abs() < 1e-12);
            assert!((tg[idx][1] - 0.5).abs() < 1e-12);
        }
        // and for a flat graph the height coordinate has zero tangential part
        let flat = GridFunction::zeros(g.clone(), 0.0);
        let qflat = compute_quantities(&flat).unwrap();
        let height = Coordinate(1); // slot n = 1 on the interval
        let tg2 = tangential_gradient_with(&flat, &qflat, &height).unwrap();
        for &idx in &g.active {
            assert!(crate::geom::norm(&tg2[idx]) < 1e-12);
        }
    }

    #[test]
    fn tangential_gradient_norm_identity() {
        // |D_Γφ|² = |Dφ|² − (Dφ·n⃗)² for the projection formula
        let g = interval_grid(64);
        let u = GridFunction::from_fn(g.clone(), 0.0, |p| {
            0.4 * (std::f64::consts::PI * p[0]).cos()
        });
        let q = compute_quantities(&u).unwrap();
        let tg = tangential_gradient_with(&u, &q, &Coordinate(0)).unwrap();
        for &idx in &g.active {
            let grad = [1.0, 0.0, 0.0];
            let gn = crate::geom::dot(&grad, &q.normal[idx]);
            let expected = 1.0 - gn * gn;
            assert!((crate::geom::norm_sq(&tg[idx]) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn lower_bound_for_tangential_gradient_of_v() {
        // |D_Γ v|² ≥ |dv|²/v² given consistent stencils
        let g = interval_grid(128);
        let u = GridFunction::from_fn(g.clone(), 0.0, |p| {
            0.5 * (2.0 * std::f64::consts::PI * p[0]).sin()
        });
        let q = compute_quantities(&u).unwrap();
        let tgv = tangential_gradient_field(&u, &q, &q.v);
        for &idx in &g.active {
            let dv = stencil::field_grad(&g, &q.v, idx);
            let dv2 = dv[0] * dv[0] + dv[1] * dv[1];
            let lhs = crate::geom::norm_sq(&tgv[idx]);
            assert!(lhs >= dv2 / (q.v[idx] * q.v[idx]) - 1e-12);
        }
    }

    #[test]
    fn surface_integrals_on_catalog_graphs() {
        // u ≡ 0 on (0,1): length 1
        let g = interval_grid(64);
        let flat = GridFunction::zeros(g.clone(), 0.0);
        let ones = vec![1.0; g.node_count()];
        assert!((surface_integral(&flat, &ones).unwrap() - 1.0).abs() < 1e-12);
        // u = x on (0,1): length √2; boundary closure distorts two cells
        let lin = GridFunction::from_fn(g.clone(), 0.0, |p| p[0]);
        let len = surface_integral(&lin, &ones).unwrap();
        assert!(
            (len - 2.0_f64.sqrt()).abs() < 2.0 * g.h,
            "length {len} vs sqrt2"
        );
        // disk area π at 128²
        let gd = Grid::new(Domain::disk(1.0), 128).unwrap();
        let flat2 = GridFunction::zeros(gd.clone(), 0.0);
        let ones2 = vec![1.0; gd.node_count()];
        let area = surface_integral(&flat2, &ones2).unwrap();
        assert!((area - std::f64::consts::PI).abs() / std::f64::consts::PI < 0.01);
    }
}
