//! Geometry of the convex base domain Ω.
//!
//! Two domains are supported: an interval (n = 1) and a disk centered at the
//! origin (n = 2). Both are convex with closed-form nearest-point projection
//! ζ, boundary reflection x̃ = 2ζ(x) − x, and deviation matrix
//! `Q(x) = Dζ(x) − (I − ν⊗ν)`. The interval has a flat boundary, so its
//! curvature radius is infinite; a configured surrogate radius sizes the
//! kernel cutoffs and tubular neighborhoods instead.

use crate::error::Error;
use crate::geom::{self, M3, V3, ZERO_M3};
use crate::Result;

/// Convex base domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Interval (a, b) ⊂ R. `r_surrogate` stands in for the (infinite)
    /// principal curvature radius when sizing cutoffs; default (b-a)/2.
    Interval { a: f64, b: f64, r_surrogate: f64 },
    /// Disk of radius `radius` centered at the origin of R².
    Disk { radius: f64 },
}

/// Nearest boundary point together with its outward normal and the
/// coefficient of the second fundamental form on the tangent space.
#[derive(Debug, Clone)]
pub struct BoundaryPoint {
    /// Position on ∂Ω (spatial coordinates, zero-padded).
    pub position: V3,
    /// Outward unit normal ν at the position (spatial, zero-padded).
    pub normal: V3,
    /// B(w,w) = curvature · |w_tan|²; ≤ 0 for convex Ω under the sign
    /// convention in which the boundary curves away from the outward normal.
    pub tangential_curvature: f64,
}

impl BoundaryPoint {
    /// Evaluate the second fundamental form on (the tangential part of) `w`.
    pub fn second_form(&self, w: &V3) -> f64 {
        let wn = geom::dot(w, &self.normal);
        let wt = geom::axpy(w, -wn, &self.normal);
        self.tangential_curvature * geom::norm_sq(&wt)
    }
}

/// Result of reflecting a point across ∂Ω.
#[derive(Debug, Clone)]
pub struct ReflectionData {
    pub projection: BoundaryPoint,
    /// x̃ = 2ζ(x) − x (spatial, zero-padded).
    pub reflected: V3,
    /// |x − ζ(x)| = dist(x, ∂Ω).
    pub distance: f64,
    /// Q(x) lifted to R^{n+1} (zero row/column in the height slot).
    pub q: M3,
}

/// Per-property maxima from checking the reflection-matrix lemma on a sample.
#[derive(Debug, Clone, Default)]
pub struct QPropertyReport {
    pub max_asymmetry: f64,
    pub max_normal_violation: f64,
    pub max_lift_violation: f64,
    /// max over the sample of |Q|_F − 2·dist(x, ∂Ω); ≤ 0 when the bound holds.
    pub max_norm_excess: f64,
    /// largest finite-difference estimate of |DQ| entries (boundedness check).
    pub max_dq_fd: f64,
    pub samples: usize,
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Self {
        assert!(a < b, "interval endpoints must satisfy a < b");
        Domain::Interval {
            a,
            b,
            r_surrogate: 0.5 * (b - a),
        }
    }

    pub fn interval_with_surrogate(a: f64, b: f64, r_surrogate: f64) -> Self {
        assert!(a < b && r_surrogate > 0.0);
        Domain::Interval { a, b, r_surrogate }
    }

    pub fn disk(radius: f64) -> Self {
        assert!(radius > 0.0, "disk radius must be positive");
        Domain::Disk { radius }
    }

    /// Spatial dimension n.
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Disk { .. } => 2,
        }
    }

    /// Principal curvature radius R of ∂Ω (the configured surrogate for the
    /// flat interval boundary).
    pub fn curvature_radius(&self) -> f64 {
        match self {
            Domain::Interval { r_surrogate, .. } => *r_surrogate,
            Domain::Disk { radius } => *radius,
        }
    }

    /// Bounding box as (low, high) per axis.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Domain::Interval { a, b, .. } => ([*a, 0.0], [*b, 0.0]),
            Domain::Disk { radius } => ([-radius, -radius], [*radius, *radius]),
        }
    }

    /// Lebesgue measure |Ω|.
    pub fn measure(&self) -> f64 {
        match self {
            Domain::Interval { a, b, .. } => b - a,
            Domain::Disk { radius } => std::f64::consts::PI * radius * radius,
        }
    }

    pub fn contains(&self, x: &V3) -> bool {
        match self {
            Domain::Interval { a, b, .. } => x[0] > *a && x[0] < *b,
            Domain::Disk { radius } => geom::norm_sq(x) < radius * radius,
        }
    }

    /// Distance to ∂Ω (for points inside or outside).
    pub fn dist_to_boundary(&self, x: &V3) -> f64 {
        match self {
            Domain::Interval { a, b, .. } => {
                if x[0] < *a {
                    a - x[0]
                } else if x[0] > *b {
                    x[0] - b
                } else {
                    (x[0] - a).min(b - x[0])
                }
            }
            Domain::Disk { radius } => (geom::norm(x) - radius).abs(),
        }
    }

    /// Nearest boundary point for any x with a well-defined projection
    /// (everything except the disk center / interval midpoint tie, where the
    /// left endpoint is chosen; `None` only at the exact disk center).
    /// Used internally by grid construction, which projects exterior points.
    pub fn nearest_boundary(&self, x: &V3) -> Option<BoundaryPoint> {
        match self {
            Domain::Interval { a, b, .. } => {
                let (pos, nu) = if x[0] - a <= b - x[0] {
                    (*a, -1.0)
                } else {
                    (*b, 1.0)
                };
                Some(BoundaryPoint {
                    position: [pos, 0.0, 0.0],
                    normal: [nu, 0.0, 0.0],
                    tangential_curvature: 0.0,
                })
            }
            Domain::Disk { radius } => {
                let r = geom::norm(x);
                if r == 0.0 {
                    return None;
                }
                let hat = geom::scale(x, 1.0 / r);
                Some(BoundaryPoint {
                    position: geom::scale(&hat, *radius),
                    normal: hat,
                    tangential_curvature: -1.0 / radius,
                })
            }
        }
    }

    /// Nearest-point projection onto ∂Ω for interior points in N_{R/2}.
    pub fn project_to_boundary(&self, x: &V3) -> Result<BoundaryPoint> {
        if !self.contains(x) {
            return Err(Error::OutsideDomain);
        }
        let dist = self.dist_to_boundary(x);
        let limit = 0.5 * self.curvature_radius();
        if dist >= limit {
            return Err(Error::PointTooDeep { dist, limit });
        }
        Ok(self
            .nearest_boundary(x)
            .expect("projection exists in N_{R/2}"))
    }

    /// Reflection x̃ = 2ζ(x) − x with the deviation matrix Q.
    pub fn reflect(&self, x: &V3) -> Result<ReflectionData> {
        let projection = self.project_to_boundary(x)?;
        Ok(self.reflect_unchecked(x, projection))
    }

    /// Reflection without the N_{R/2} / interiority guards; the caller is
    /// responsible for x having a unique projection.
    pub fn reflect_unchecked(&self, x: &V3, projection: BoundaryPoint) -> ReflectionData {
        let reflected = geom::sub(&geom::scale(&projection.position, 2.0), x);
        let distance = geom::norm(&geom::sub(x, &projection.position));
        let q = self.q_matrix(x);
        ReflectionData {
            projection,
            reflected,
            distance,
            q,
        }
    }

    /// Q(x) = Dζ(x) − (I − ν⊗ν), lifted to R^{n+1}. Identically zero for the
    /// interval; `(r/|x| − 1)(I − x̂⊗x̂)` on the spatial block for the disk.
    pub fn q_matrix(&self, x: &V3) -> M3 {
        match self {
            Domain::Interval { .. } => ZERO_M3,
            Domain::Disk { radius } => {
                let r = geom::norm(x);
                if r == 0.0 {
                    return ZERO_M3;
                }
                let c = radius / r - 1.0;
                let hat = geom::scale(x, 1.0 / r);
                let mut q = ZERO_M3;
                for i in 0..2 {
                    for k in 0..2 {
                        let p = if i == k { 1.0 } else { 0.0 };
                        q[i][k] = c * (p - hat[i] * hat[k]);
                    }
                }
                q
            }
        }
    }

    /// Spatial Jacobian of the normal field, `dnu[j][i] = ∂_{x_j} ν̂_i`,
    /// where ν̂(x) is the outward normal at ζ(x). Zero for the interval.
    pub fn dnu(&self, x: &V3) -> M3 {
        match self {
            Domain::Interval { .. } => ZERO_M3,
            Domain::Disk { .. } => {
                let r = geom::norm(x);
                if r == 0.0 {
                    return ZERO_M3;
                }
                let hat = geom::scale(x, 1.0 / r);
                let mut d = ZERO_M3;
                for j in 0..2 {
                    for i in 0..2 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        d[j][i] = (delta - hat[i] * hat[j]) / r;
                    }
                }
                d
            }
        }
    }

    /// Closed-form `dq[j][i][k] = ∂_{x_j} q_ik` (spatial indices; the lifted
    /// height slots are zero). Zero for the interval.
    pub fn dq(&self, x: &V3) -> [M3; 3] {
        match self {
            Domain::Interval { .. } => [ZERO_M3; 3],
            Domain::Disk { radius } => {
                let r = geom::norm(x);
                let mut out = [ZERO_M3; 3];
                if r == 0.0 {
                    return out;
                }
                let hat = geom::scale(x, 1.0 / r);
                let c = radius / r - 1.0;
                for j in 0..2 {
                    let dc = -radius / (r * r) * hat[j];
                    for i in 0..2 {
                        for k in 0..2 {
                            let delta_ik = if i == k { 1.0 } else { 0.0 };
                            let delta_ij = if i == j { 1.0 } else { 0.0 };
                            let delta_kj = if k == j { 1.0 } else { 0.0 };
                            let p_ik = delta_ik - hat[i] * hat[k];
                            let dp = -(hat[k] * (delta_ij - hat[i] * hat[j])
                                + hat[i] * (delta_kj - hat[k] * hat[j]))
                                / r;
                            out[j][i][k] = dc * p_ik + c * dp;
                        }
                    }
                }
                out
            }
        }
    }

    /// Check the five reflection-matrix properties on a sample of points.
    pub fn verify_q_properties(&self, samples: &[V3]) -> Result<QPropertyReport> {
        let mut report = QPropertyReport {
            samples: samples.len(),
            ..Default::default()
        };
        let fd_step = 1e-6 * self.curvature_radius();
        for x in samples {
            let refl = self.reflect(x)?;
            let q = &refl.q;
            let nu_lift = refl.projection.normal; // height slot already zero
            for i in 0..3 {
                for k in 0..3 {
                    report.max_asymmetry = report.max_asymmetry.max((q[i][k] - q[k][i]).abs());
                }
            }
            let qnu = geom::mat_vec(q, &nu_lift);
            report.max_normal_violation = report.max_normal_violation.max(geom::norm(&qnu));
            let e_height = [0.0, 0.0, 1.0];
            let qe = geom::mat_vec(q, &e_height);
            report.max_lift_violation = report.max_lift_violation.max(geom::norm(&qe));
            report.max_norm_excess = report
                .max_norm_excess
                .max(geom::frobenius(q) - 2.0 * refl.distance);
            // finite-difference boundedness of DQ
            for axis in 0..self.dim() {
                let mut xp = *x;
                let mut xm = *x;
                xp[axis] += fd_step;
                xm[axis] -= fd_step;
                let qp = self.q_matrix(&xp);
                let qm = self.q_matrix(&xm);
                let mut diff = ZERO_M3;
                for i in 0..3 {
                    for k in 0..3 {
                        diff[i][k] = (qp[i][k] - qm[i][k]) / (2.0 * fd_step);
                    }
                }
                report.max_dq_fd = report.max_dq_fd.max(geom::max_abs_entry(&diff));
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interval_projection_left_end() {
        let d = Domain::interval(0.0, 1.0);
        let bp = d.project_to_boundary(&[0.1, 0.0, 0.0]).unwrap();
        assert_eq!(bp.position[0], 0.0);
        assert_eq!(bp.normal[0], -1.0);
    }

    #[test]
    fn interval_reflection_and_zero_q() {
        let d = Domain::interval(0.0, 1.0);
        let r = d.reflect(&[0.1, 0.0, 0.0]).unwrap();
        assert!((r.reflected[0] - (-0.1)).abs() < 1e-15);
        assert_eq!(geom::frobenius(&r.q), 0.0);
    }

    #[test]
    fn disk_radial_projection() {
        let d = Domain::disk(1.0);
        let bp = d.project_to_boundary(&[0.9, 0.0, 0.0]).unwrap();
        assert!((bp.position[0] - 1.0).abs() < 1e-14);
        assert!((bp.normal[0] - 1.0).abs() < 1e-14);
        let r = d.reflect(&[0.9, 0.0, 0.0]).unwrap();
        assert!((r.reflected[0] - 1.1).abs() < 1e-14);
    }

    #[test]
    fn disk_diagonal_projection_matches_brute_force() {
        let d = Domain::disk(1.0);
        let x = [0.6, 0.6, 0.0];
        let bp = d.project_to_boundary(&x).unwrap();
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert!((bp.position[0] - inv_sqrt2).abs() < 1e-12);
        assert!((bp.position[1] - inv_sqrt2).abs() < 1e-12);
        let dist = geom::norm(&geom::sub(&x, &bp.position));
        assert!((dist - (1.0 - 0.6 * 2.0_f64.sqrt())).abs() < 1e-12);
        // independent oracle: minimize distance over a dense boundary sample
        let mut best = f64::INFINITY;
        let m = 200_000;
        for k in 0..m {
            let th = 2.0 * std::f64::consts::PI * (k as f64) / (m as f64);
            let p = [th.cos(), th.sin(), 0.0];
            best = best.min(geom::norm(&geom::sub(&x, &p)));
        }
        assert!((dist - best).abs() < 1e-9);
    }

    #[test]
    fn disk_q_norm_bound_at_0p9() {
        let d = Domain::disk(1.0);
        let r = d.reflect(&[0.9, 0.0, 0.0]).unwrap();
        let qn = geom::frobenius(&r.q);
        assert!((qn - (1.0 / 0.9 - 1.0)).abs() < 1e-12);
        assert!(qn <= 2.0 * r.distance + 1e-15);
    }

    #[test]
    fn projection_guards() {
        let d = Domain::disk(1.0);
        assert!(matches!(
            d.project_to_boundary(&[0.1, 0.0, 0.0]),
            Err(Error::PointTooDeep { .. })
        ));
        assert!(matches!(
            d.project_to_boundary(&[1.5, 0.0, 0.0]),
            Err(Error::OutsideDomain)
        ));
    }

    #[test]
    fn dq_matches_finite_differences_on_disk() {
        let d = Domain::disk(1.0);
        let x = [0.55, 0.6, 0.0];
        let dq = d.dq(&x);
        let h = 1e-6;
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let qp = d.q_matrix(&xp);
            let qm = d.q_matrix(&xm);
            for i in 0..2 {
                for k in 0..2 {
                    let fd = (qp[i][k] - qm[i][k]) / (2.0 * h);
                    assert!(
                        (fd - dq[j][i][k]).abs() < 1e-7,
                        "dq[{j}][{i}][{k}]: fd {fd} vs analytic {}",
                        dq[j][i][k]
                    );
                }
            }
        }
    }

    #[test]
    fn dzeta_decomposition_matches_finite_differences() {
        // Dζ = (I − ν⊗ν) + Q within O(step) on the disk
        let d = Domain::disk(1.0);
        let x = [0.0, 0.8, 0.0];
        let bp = d.nearest_boundary(&x).unwrap();
        let q = d.q_matrix(&x);
        let step = 1e-6;
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += step;
            xm[j] -= step;
            let zp = d.nearest_boundary(&xp).unwrap().position;
            let zm = d.nearest_boundary(&xm).unwrap().position;
            for i in 0..2 {
                let fd = (zp[i] - zm[i]) / (2.0 * step);
                let delta = if i == j { 1.0 } else { 0.0 };
                let analytic = delta - bp.normal[i] * bp.normal[j] + q[i][j];
                assert!((fd - analytic).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn projection_idempotent_along_normal() {
        let d = Domain::disk(1.0);
        for &rad in &[0.55, 0.7, 0.95] {
            let x = [rad * 0.6, rad * 0.8, 0.0];
            let bp = d.nearest_boundary(&x).unwrap();
            let eps = 1e-3;
            let nudged = geom::axpy(&bp.position, eps, &bp.normal);
            let bp2 = d.nearest_boundary(&nudged).unwrap();
            assert!(geom::norm(&geom::sub(&bp.position, &bp2.position)) < 1e-12);
        }
    }

    proptest! {
        /// convexity reflection inequality |x̃ − y| ≥ |x − y| for y ∈ Ω
        #[test]
        fn reflection_inequality_disk(rad in 0.501f64..0.999, th in 0.0f64..6.28,
                                      yr in 0.0f64..0.999, yth in 0.0f64..6.28) {
            let d = Domain::disk(1.0);
            let x = [rad * th.cos(), rad * th.sin(), 0.0];
            let y = [yr * yth.cos(), yr * yth.sin(), 0.0];
            let r = d.reflect(&x).unwrap();
            let lhs = geom::norm(&geom::sub(&r.reflected, &y));
            let rhs = geom::norm(&geom::sub(&x, &y));
            prop_assert!(lhs >= rhs - 1e-12);
        }

        #[test]
        fn reflection_inequality_interval(x in 0.0f64..0.24, y in 0.0f64..1.0) {
            let d = Domain::interval(0.0, 1.0);
            let r = d.reflect(&[x, 0.0, 0.0]).unwrap();
            prop_assert!((r.reflected[0] - y).abs() >= (x - y).abs() - 1e-12);
        }

        /// reflected points of interior points lie strictly outside
        #[test]
        fn reflection_exits_domain(rad in 0.501f64..0.999, th in 0.0f64..6.28) {
            let d = Domain::disk(1.0);
            let x = [rad * th.cos(), rad * th.sin(), 0.0];
            let r = d.reflect(&x).unwrap();
            prop_assert!(!d.contains(&r.reflected));
        }
    }
}
