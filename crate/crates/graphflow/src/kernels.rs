//! Backward heat kernels, their boundary reflections, and radial cutoffs.
//!
//! The n-dimensional backward heat kernel with pole (Y, s) is
//! `ρ(X,t) = (4π(s−t))^{-n/2} exp(−|X−Y|²/(4(s−t)))` for ambient points
//! X ∈ R^{n+1}; the reflected kernel ρ̃ replaces X with X̃ = (x̃, x_{n+1}),
//! the reflection of the spatial part across ∂Ω. Truncated versions multiply
//! by a radial cutoff η: ρ₁ = η(X−Y)ρ, ρ₂ = η(X̃−Y)ρ̃. The sum ρ₁ + ρ₂ has
//! vanishing normal derivative on ∂Ω×R, which is what makes the boundary
//! monotonicity formula work.
//!
//! All derivatives are assembled from the squared-distance function g:
//! for the free kernel Dg = 2(X−Y), D²g = 2I; for the reflected kernel
//! Dg̃ = 2M(X̃−Y) and D²g̃ = 2M² − 4Σ_k [D(ν̂_i ν̂_k) − Dq_ik](X̃−Y)_k with
//! M = I − 2ν̂⊗ν̂ + 2Q̂. Cutoff derivatives ride along through the same g.

use crate::domain::Domain;
use crate::error::Error;
use crate::geom::{self, M3, V3};
use crate::Result;

/// Smooth radial cutoff: 1 on B_{R/16}, 0 outside B_{R/8}, nonincreasing.
/// Realized as a quintic smoothstep in r², so value, gradient, and Hessian
/// are continuous with closed forms.
#[derive(Debug, Clone, Copy)]
pub struct CutoffProfile {
    g_plateau: f64,
    g_support: f64,
}

impl CutoffProfile {
    pub fn for_radius(cutoff_radius: f64) -> Self {
        let r_plateau = cutoff_radius / 16.0;
        let r_support = cutoff_radius / 8.0;
        CutoffProfile {
            g_plateau: r_plateau * r_plateau,
            g_support: r_support * r_support,
        }
    }

    pub fn plateau_radius(&self) -> f64 {
        self.g_plateau.sqrt()
    }

    pub fn support_radius(&self) -> f64 {
        self.g_support.sqrt()
    }

    /// (N, dN/dg, d²N/dg²) as functions of g = r².
    pub fn value_d(&self, g: f64) -> (f64, f64, f64) {
        if g <= self.g_plateau {
            (1.0, 0.0, 0.0)
        } else if g >= self.g_support {
            (0.0, 0.0, 0.0)
        } else {
            let w = self.g_support - self.g_plateau;
            let s = (g - self.g_plateau) / w;
            // quintic smoothstep: 6s⁵ − 15s⁴ + 10s³
            let step = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
            let dstep = 30.0 * s * s * (1.0 - s) * (1.0 - s);
            let d2step = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
            (1.0 - step, -dstep / w, -d2step / (w * w))
        }
    }
}

/// Pole, terminal time, and cutoff radius for kernel evaluation.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    /// Surface dimension n (1 or 2).
    pub dim: usize,
    /// Pole Y = (y, y_{n+1}); the height sits in slot n.
    pub pole: V3,
    /// Terminal time s; kernels are evaluated for t < s.
    pub s: f64,
    /// Cutoff radius R (plateau R/16, support R/8).
    pub cutoff_radius: f64,
}

impl KernelSpec {
    pub fn cutoff(&self) -> CutoffProfile {
        CutoffProfile::for_radius(self.cutoff_radius)
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        if t >= self.s {
            return Err(Error::TimeOrderViolation { t, s: self.s });
        }
        Ok(self.s - t)
    }
}

/// Value and analytic derivatives of one kernel branch.
#[derive(Debug, Clone)]
pub struct KernelValues {
    pub rho: f64,
    pub grad: V3,
    pub hess: M3,
    pub dt: f64,
}

impl KernelValues {
    pub fn zero() -> Self {
        KernelValues {
            rho: 0.0,
            grad: [0.0; 3],
            hess: geom::ZERO_M3,
            dt: 0.0,
        }
    }
}

/// Squared distance g together with its ambient gradient and Hessian.
struct SqDist {
    g: f64,
    dg: V3,
    d2g: M3,
}

fn free_sqdist(spec: &KernelSpec, x: &V3) -> SqDist {
    let z = geom::sub(x, &spec.pole);
    SqDist {
        g: geom::norm_sq(&z),
        dg: geom::scale(&z, 2.0),
        d2g: geom::mat_scale(&geom::identity(spec.dim + 1), 2.0),
    }
}

/// Squared distance |X̃ − Y|² with derivatives through the reflection map.
fn reflected_sqdist(spec: &KernelSpec, domain: &Domain, x: &V3) -> SqDist {
    let n = spec.dim;
    let spatial = [x[0], if n == 2 { x[1] } else { 0.0 }, 0.0];
    let bp = domain
        .nearest_boundary(&spatial)
        .expect("reflection point away from the singular locus");
    let mut x_tilde = geom::sub(&geom::scale(&bp.position, 2.0), &spatial);
    x_tilde[n] = x[n]; // reflection acts on the spatial part only
    let z = geom::sub(&x_tilde, &spec.pole);

    let nu = bp.normal; // lifted: height slot already zero
    let q = domain.q_matrix(&spatial);
    let mut m = geom::mat_add(
        &geom::identity(n + 1),
        &geom::mat_scale(&geom::outer(&nu, &nu), -2.0),
    );
    m = geom::mat_add(&m, &geom::mat_scale(&q, 2.0));

    let dg = geom::scale(&geom::mat_vec(&m, &z), 2.0);

    let m2 = geom::mat_mul(&m, &m);
    let dnu = domain.dnu(&spatial);
    let dq = domain.dq(&spatial);
    let mut d2g = geom::mat_scale(&m2, 2.0);
    for i in 0..=n {
        for j in 0..=n {
            let mut corr = 0.0;
            for k in 0..=n {
                let d_nunu = dnu[j][i] * nu[k] + nu[i] * dnu[j][k];
                corr += (d_nunu - dq[j][i][k]) * z[k];
            }
            d2g[i][j] -= 4.0 * corr;
        }
    }
    SqDist {
        g: geom::norm_sq(&z),
        dg,
        d2g,
    }
}

/// Assemble the Gaussian and its derivatives from squared-distance data.
/// Flushes to exact zero once the exponent drops below −600 (ρ < 1e−260):
/// beyond that the value is zero at double precision and subnormal
/// arithmetic would only produce noise in derivative combinations.
fn gaussian(spec: &KernelSpec, tau: f64, sq: &SqDist) -> KernelValues {
    let n = spec.dim as f64;
    let exponent = -sq.g / (4.0 * tau);
    if exponent < -600.0 {
        return KernelValues::zero();
    }
    let norm = (4.0 * std::f64::consts::PI * tau).powf(-0.5 * n);
    let rho = norm * exponent.exp();
    let grad = geom::scale(&sq.dg, -rho / (4.0 * tau));
    let outer = geom::outer(&sq.dg, &sq.dg);
    let hess = geom::mat_add(
        &geom::mat_scale(&outer, rho / (16.0 * tau * tau)),
        &geom::mat_scale(&sq.d2g, -rho / (4.0 * tau)),
    );
    let dt = (0.5 * n / tau - sq.g / (4.0 * tau * tau)) * rho;
    KernelValues {
        rho,
        grad,
        hess,
        dt,
    }
}

/// Multiply a kernel branch by the cutoff η(g) via the product rule.
fn truncate(cut: &CutoffProfile, sq: &SqDist, kv: &KernelValues) -> KernelValues {
    let (eta, deta_dg, d2eta_dg2) = cut.value_d(sq.g);
    if eta == 0.0 {
        return KernelValues::zero();
    }
    // Dη = η'(g) Dg, D²η = η''(g) Dg⊗Dg + η'(g) D²g
    let deta = geom::scale(&sq.dg, deta_dg);
    let rho = eta * kv.rho;
    let grad = geom::axpy(&geom::scale(&kv.grad, eta), kv.rho, &deta);
    let mut hess = geom::mat_scale(&kv.hess, eta);
    let cross = geom::mat_add(
        &geom::outer(&deta, &kv.grad),
        &geom::outer(&kv.grad, &deta),
    );
    hess = geom::mat_add(&hess, &cross);
    let d2eta = geom::mat_add(
        &geom::mat_scale(&geom::outer(&sq.dg, &sq.dg), d2eta_dg2),
        &geom::mat_scale(&sq.d2g, deta_dg),
    );
    hess = geom::mat_add(&hess, &geom::mat_scale(&d2eta, kv.rho));
    let dt = eta * kv.dt;
    KernelValues {
        rho,
        grad,
        hess,
        dt,
    }
}

/// Untruncated backward heat kernel ρ with analytic derivatives.
pub fn eval_rho(spec: &KernelSpec, x: &V3, t: f64) -> Result<KernelValues> {
    let tau = spec.check_time(t)?;
    let sq = free_sqdist(spec, x);
    Ok(gaussian(spec, tau, &sq))
}

/// Reflected kernel ρ̃ with derivatives assembled through the reflection.
/// The spatial part of `x` must lie in N_{R/2} (unique projection).
pub fn eval_rho_tilde(spec: &KernelSpec, domain: &Domain, x: &V3, t: f64) -> Result<KernelValues> {
    let tau = spec.check_time(t)?;
    let n = spec.dim;
    let spatial = [x[0], if n == 2 { x[1] } else { 0.0 }, 0.0];
    if !domain.contains(&spatial) {
        return Err(Error::OutsideDomain);
    }
    let dist = domain.dist_to_boundary(&spatial);
    let limit = 0.5 * domain.curvature_radius();
    if dist >= limit {
        return Err(Error::PointTooDeep { dist, limit });
    }
    let sq = reflected_sqdist(spec, domain, x);
    Ok(gaussian(spec, tau, &sq))
}

/// The truncated pair (ρ₁, ρ₂) with derivatives.
#[derive(Debug, Clone)]
pub struct TruncatedKernels {
    pub rho1: KernelValues,
    pub rho2: KernelValues,
}

impl TruncatedKernels {
    pub fn sum(&self) -> f64 {
        self.rho1.rho + self.rho2.rho
    }
}

/// Evaluate ρ₁ = η(X−Y)ρ and ρ₂ = η(X̃−Y)ρ̃ at X = (x, height). ρ₂ is exactly
/// zero whenever dist(x,∂Ω) + dist(y,∂Ω) ≥ R/8, because the segment from y
/// to x̃ crosses ∂Ω, so |X̃−Y| ≥ dist(x,∂Ω) + dist(y,∂Ω); this also keeps all
/// reflections inside the uniqueness tube.
pub fn eval_truncated(spec: &KernelSpec, domain: &Domain, x: &V3, t: f64) -> Result<TruncatedKernels> {
    let tau = spec.check_time(t)?;
    let cut = spec.cutoff();
    let n = spec.dim;

    let sq1 = free_sqdist(spec, x);
    let rho1 = truncate(&cut, &sq1, &gaussian(spec, tau, &sq1));

    let spatial = [x[0], if n == 2 { x[1] } else { 0.0 }, 0.0];
    let pole_spatial = [spec.pole[0], if n == 2 { spec.pole[1] } else { 0.0 }, 0.0];
    let d_x = domain.dist_to_boundary(&spatial);
    let d_y = if domain.contains(&pole_spatial) {
        domain.dist_to_boundary(&pole_spatial)
    } else {
        0.0
    };
    let rho2 = if d_x + d_y >= cut.support_radius() {
        KernelValues::zero()
    } else {
        let sq2 = reflected_sqdist(spec, domain, x);
        truncate(&cut, &sq2, &gaussian(spec, tau, &sq2))
    };
    Ok(TruncatedKernels { rho1, rho2 })
}

/// Residual of the Huisken identity
/// `(w·Dρ)²/ρ + (I − w⊗w):D²ρ + ∂_tρ` for the untruncated kernel; vanishes
/// identically for every unit vector w.
pub fn huisken_identity_residual(spec: &KernelSpec, x: &V3, t: f64, w: &V3) -> Result<f64> {
    let kv = eval_rho(spec, x, t)?;
    Ok(huisken_combination(&kv, w))
}

/// `(w·Dρ)²/ρ + (I − w⊗w):D²ρ + ∂_tρ` for any kernel branch. Zero where the
/// kernel has flushed to zero. The square is evaluated as (w·Dρ/ρ)²·ρ so a
/// far-field ρ of order 1e−200 cannot underflow the numerator.
pub fn huisken_combination(kv: &KernelValues, w: &V3) -> f64 {
    if kv.rho == 0.0 {
        return 0.0;
    }
    let slope = geom::dot(w, &kv.grad) / kv.rho;
    let contracted = geom::trace(&kv.hess) - geom::quad_form(&kv.hess, w);
    slope * slope * kv.rho + contracted + kv.dt
}

/// Natural magnitude scale for the identity residual at (X, t):
/// ρ · max(1/(s−t), |X−Y|²/(s−t)²).
pub fn huisken_residual_scale(spec: &KernelSpec, x: &V3, t: f64) -> Result<f64> {
    let tau = spec.check_time(t)?;
    let kv = eval_rho(spec, x, t)?;
    let g = geom::norm_sq(&geom::sub(x, &spec.pole));
    Ok(kv.rho * (1.0 / tau).max(g / (tau * tau)))
}

/// Left-hand side and comparison scale of the reflected-kernel inequality:
/// LHS = (w·Dρ̃)²/ρ̃ + (I−w⊗w):D²ρ̃ + ∂_tρ̃,
/// scale = (|X̃−Y|/(s−t) + |X̃−Y|³/(s−t)²)·ρ̃.
/// The smallest admissible constant over a sample is max(0, LHS/scale).
pub fn reflected_inequality_terms(
    spec: &KernelSpec,
    domain: &Domain,
    x: &V3,
    t: f64,
    w: &V3,
) -> Result<(f64, f64)> {
    let tau = spec.check_time(t)?;
    let kv = eval_rho_tilde(spec, domain, x, t)?;
    let lhs = huisken_combination(&kv, w);
    let sq = reflected_sqdist(spec, domain, x);
    let r = sq.g.sqrt();
    let scale = (r / tau + r * r * r / (tau * tau)) * kv.rho;
    Ok((lhs, scale))
}

/// Normal derivative of ρ₁ + ρ₂ at a boundary point X = (ζ, height); the
/// reflection construction makes this vanish identically on ∂Ω×R.
pub fn boundary_normal_derivative(
    spec: &KernelSpec,
    domain: &Domain,
    boundary_x: &V3,
    t: f64,
) -> Result<f64> {
    let pair = eval_truncated(spec, domain, boundary_x, t)?;
    let spatial = [
        boundary_x[0],
        if spec.dim == 2 { boundary_x[1] } else { 0.0 },
        0.0,
    ];
    let bp = domain
        .nearest_boundary(&spatial)
        .expect("boundary sample away from the singular locus");
    let total = geom::add(&pair.rho1.grad, &pair.rho2.grad);
    Ok(geom::dot(&total, &bp.normal))
}
