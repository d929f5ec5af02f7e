//! Uniform cell-centered grids over Ω with a Neumann ghost layer.
//!
//! The grid covers the bounding box of Ω plus one padding node per side.
//! Interval nodes are all active; disk nodes are active when the cell center
//! lies strictly inside the circle, and exterior nodes touching an active
//! node across the 3×3 neighborhood become ghosts. Ghost values enforce the
//! homogeneous Neumann condition: the solution is extended evenly across the
//! boundary by a quadratic fit along the normal through the nearest boundary
//! point (zero normal slope at ∂Ω), with interior samples obtained by
//! bilinear interpolation of active nodes. Each ghost value is therefore a
//! fixed linear combination of active values, precomputed at construction.

use std::sync::Arc;

use crate::domain::Domain;
use crate::error::Error;
use crate::geom::{self, V3};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Active,
    Ghost,
    Exterior,
}

#[derive(Debug, Clone)]
struct GhostRule {
    target: usize,
    terms: Vec<(usize, f64)>,
}

#[derive(Debug)]
pub struct Grid {
    pub domain: Domain,
    /// Cells per axis across the bounding box.
    pub resolution: usize,
    pub h: f64,
    /// Padded node counts per axis; `[m+2, 1]` in one dimension.
    pub shape: [usize; 2],
    origin: [f64; 2],
    pub class: Vec<NodeClass>,
    pub active: Vec<usize>,
    ghost_rules: Vec<GhostRule>,
    /// Distance from the node to ∂Ω (defined for every node).
    pub bdist: Vec<f64>,
    /// Active nodes with a non-active neighbor in their 3×3 neighborhood.
    pub fringe: Vec<bool>,
}

impl Grid {
    pub fn new(domain: Domain, resolution: usize) -> Result<Arc<Grid>> {
        let minimum = match domain {
            Domain::Interval { .. } => 4,
            Domain::Disk { .. } => 16,
        };
        if resolution < minimum {
            return Err(Error::GridTooCoarse {
                resolution,
                minimum,
            });
        }
        let (low, high) = domain.bounding_box();
        let n = domain.dim();
        let h = (high[0] - low[0]) / resolution as f64;
        let shape = if n == 1 {
            [resolution + 2, 1]
        } else {
            [resolution + 2, resolution + 2]
        };
        let origin = [low[0] - 0.5 * h, if n == 1 { 0.0 } else { low[1] - 0.5 * h }];
        let count = shape[0] * shape[1];

        let mut grid = Grid {
            domain,
            resolution,
            h,
            shape,
            origin,
            class: vec![NodeClass::Exterior; count],
            active: Vec::new(),
            ghost_rules: Vec::new(),
            bdist: vec![0.0; count],
            fringe: vec![false; count],
        };

        for j in 0..shape[1] {
            for i in 0..shape[0] {
                let idx = grid.idx(i, j);
                let p = grid.pos(i, j);
                grid.bdist[idx] = grid.domain.dist_to_boundary(&p);
                if grid.domain.contains(&p) {
                    grid.class[idx] = NodeClass::Active;
                    grid.active.push(idx);
                }
            }
        }

        // mark ghosts: non-active nodes in the 3x3 neighborhood of an active
        for j in 0..shape[1] {
            for i in 0..shape[0] {
                let idx = grid.idx(i, j);
                if grid.class[idx] != NodeClass::Active {
                    continue;
                }
                let mut any_inactive = false;
                grid.for_neighborhood(i, j, |nidx| {
                    if grid.class[nidx] != NodeClass::Active {
                        any_inactive = true;
                    }
                });
                if any_inactive {
                    grid.fringe[idx] = true;
                }
            }
        }
        let mut ghost_targets = Vec::new();
        for j in 0..shape[1] {
            for i in 0..shape[0] {
                let idx = grid.idx(i, j);
                if grid.class[idx] != NodeClass::Active || !grid.fringe[idx] {
                    continue;
                }
                grid.for_neighborhood(i, j, |nidx| {
                    if grid.class[nidx] == NodeClass::Exterior {
                        ghost_targets.push(nidx);
                    }
                });
            }
        }
        ghost_targets.sort_unstable();
        ghost_targets.dedup();
        for idx in &ghost_targets {
            grid.class[*idx] = NodeClass::Ghost;
        }
        for idx in ghost_targets {
            let rule = grid.build_ghost_rule(idx)?;
            grid.ghost_rules.push(rule);
        }

        Ok(Arc::new(grid))
    }

    fn build_ghost_rule(&self, idx: usize) -> Result<GhostRule> {
        match self.domain {
            Domain::Interval { .. } => {
                // mirror across the cell face that carries the boundary
                let (i, j) = self.coords(idx);
                let src = if i == 0 {
                    self.idx(1, j)
                } else {
                    self.idx(self.shape[0] - 2, j)
                };
                Ok(GhostRule {
                    target: idx,
                    terms: vec![(src, 1.0)],
                })
            }
            Domain::Disk { .. } => {
                let (i, j) = self.coords(idx);
                let xg = self.pos(i, j);
                let bp = self
                    .domain
                    .nearest_boundary(&xg)
                    .expect("ghost nodes are away from the center");
                let d = self.domain.dist_to_boundary(&xg);
                // two interior samples along the inward normal
                let delta1 = self.find_sample_depth(&bp.position, &bp.normal, 1.2 * self.h)?;
                let delta2 =
                    self.find_sample_depth(&bp.position, &bp.normal, delta1 + self.h)?;
                let q1 = geom::axpy(&bp.position, -delta1, &bp.normal);
                let q2 = geom::axpy(&bp.position, -delta2, &bp.normal);
                let w1 = self.bilinear_active_weights(&q1).expect("checked depth");
                let w2 = self.bilinear_active_weights(&q2).expect("checked depth");
                // even quadratic along the normal: u(s) = c0 + c2 s², zero
                // slope at s = 0 (the boundary); samples at s = -δ1, -δ2,
                // evaluate at s = +d.
                let denom = delta2 * delta2 - delta1 * delta1;
                let t = (d * d - delta1 * delta1) / denom;
                let mut terms = Vec::with_capacity(8);
                for (src, w) in w1 {
                    terms.push((src, w * (1.0 - t)));
                }
                for (src, w) in w2 {
                    terms.push((src, w * t));
                }
                terms.sort_unstable_by_key(|(s, _)| *s);
                terms.dedup_by(|a, b| {
                    if a.0 == b.0 {
                        b.1 += a.1;
                        true
                    } else {
                        false
                    }
                });
                // weights sum to one algebraically; renormalize so constants
                // survive the closure to full precision
                let sum: f64 = terms.iter().map(|(_, w)| w).sum();
                for (_, w) in &mut terms {
                    *w /= sum;
                }
                Ok(GhostRule { target: idx, terms })
            }
        }
    }

    /// Smallest depth ≥ `start` (stepping by h/2) whose bilinear cell is
    /// fully active.
    fn find_sample_depth(&self, zeta: &V3, normal: &V3, start: f64) -> Result<f64> {
        let max_depth = 0.45 * self.domain.curvature_radius();
        let mut delta = start;
        while delta <= max_depth {
            let q = geom::axpy(zeta, -delta, normal);
            if self.bilinear_active_weights(&q).is_some() {
                return Ok(delta);
            }
            delta += 0.5 * self.h;
        }
        Err(Error::GridTooCoarse {
            resolution: self.resolution,
            minimum: 16,
        })
    }

    /// Bilinear interpolation weights of `p` using active nodes only.
    fn bilinear_active_weights(&self, p: &V3) -> Option<Vec<(usize, f64)>> {
        let n = self.domain.dim();
        let fx = (p[0] - self.origin[0]) / self.h;
        let i0 = fx.floor() as isize;
        let tx = fx - i0 as f64;
        if n == 1 {
            let i0 = usize::try_from(i0).ok()?;
            if i0 + 1 >= self.shape[0] {
                return None;
            }
            let a = self.idx(i0, 0);
            let b = self.idx(i0 + 1, 0);
            if self.class[a] != NodeClass::Active || self.class[b] != NodeClass::Active {
                return None;
            }
            Some(vec![(a, 1.0 - tx), (b, tx)])
        } else {
            let fy = (p[1] - self.origin[1]) / self.h;
            let j0 = fy.floor() as isize;
            let ty = fy - j0 as f64;
            let i0 = usize::try_from(i0).ok()?;
            let j0 = usize::try_from(j0).ok()?;
            if i0 + 1 >= self.shape[0] || j0 + 1 >= self.shape[1] {
                return None;
            }
            let mut out = Vec::with_capacity(4);
            for (di, dj, w) in [
                (0, 0, (1.0 - tx) * (1.0 - ty)),
                (1, 0, tx * (1.0 - ty)),
                (0, 1, (1.0 - tx) * ty),
                (1, 1, tx * ty),
            ] {
                let idx = self.idx(i0 + di, j0 + dj);
                if self.class[idx] != NodeClass::Active {
                    return None;
                }
                out.push((idx, w));
            }
            Some(out)
        }
    }

    /// Bilinear interpolation using any node with a valid value (active or
    /// ghost). Intended for use after the Neumann closure has been applied.
    pub fn interpolate(&self, values: &[f64], p: &V3) -> Option<f64> {
        let n = self.domain.dim();
        let fx = (p[0] - self.origin[0]) / self.h;
        let i0 = usize::try_from(fx.floor() as isize).ok()?;
        let tx = fx - i0 as f64;
        if n == 1 {
            if i0 + 1 >= self.shape[0] {
                return None;
            }
            let (a, b) = (self.idx(i0, 0), self.idx(i0 + 1, 0));
            if self.class[a] == NodeClass::Exterior || self.class[b] == NodeClass::Exterior {
                return None;
            }
            Some((1.0 - tx) * values[a] + tx * values[b])
        } else {
            let fy = (p[1] - self.origin[1]) / self.h;
            let j0 = usize::try_from(fy.floor() as isize).ok()?;
            let ty = fy - j0 as f64;
            if i0 + 1 >= self.shape[0] || j0 + 1 >= self.shape[1] {
                return None;
            }
            let mut acc = 0.0;
            for (di, dj, w) in [
                (0, 0, (1.0 - tx) * (1.0 - ty)),
                (1, 0, tx * (1.0 - ty)),
                (0, 1, (1.0 - tx) * ty),
                (1, 1, tx * ty),
            ] {
                let idx = self.idx(i0 + di, j0 + dj);
                if self.class[idx] == NodeClass::Exterior {
                    return None;
                }
                acc += w * values[idx];
            }
            Some(acc)
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i + j * self.shape[0]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.shape[0], idx / self.shape[0])
    }

    #[inline]
    pub fn pos(&self, i: usize, j: usize) -> V3 {
        if self.domain.dim() == 1 {
            [self.origin[0] + i as f64 * self.h, 0.0, 0.0]
        } else {
            [
                self.origin[0] + i as f64 * self.h,
                self.origin[1] + j as f64 * self.h,
                0.0,
            ]
        }
    }

    #[inline]
    pub fn pos_of(&self, idx: usize) -> V3 {
        let (i, j) = self.coords(idx);
        self.pos(i, j)
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        if axis == 0 {
            1
        } else {
            self.shape[0]
        }
    }

    pub fn node_count(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.domain.dim() as i32)
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.class[idx] == NodeClass::Active
    }

    /// True when the node sits at least `k` grid spacings inside ∂Ω.
    pub fn is_core(&self, idx: usize, k: f64) -> bool {
        self.is_active(idx) && self.bdist[idx] >= k * self.h
    }

    fn for_neighborhood(&self, i: usize, j: usize, mut f: impl FnMut(usize)) {
        let n = self.domain.dim();
        let jrange = if n == 1 { 0..=0 } else { -1..=1 };
        for dj in jrange {
            for di in -1..=1_isize {
                if di == 0 && dj == 0 {
                    continue;
                }
                let ni = i as isize + di;
                let nj = j as isize + dj;
                if ni < 0 || nj < 0 || ni >= self.shape[0] as isize || nj >= self.shape[1] as isize
                {
                    continue;
                }
                f(self.idx(ni as usize, nj as usize));
            }
        }
    }

    /// Fill ghost slots of `values` from active values.
    pub fn close_neumann(&self, values: &mut [f64]) {
        for rule in &self.ghost_rules {
            let mut acc = 0.0;
            for (src, w) in &rule.terms {
                acc += w * values[*src];
            }
            values[rule.target] = acc;
        }
    }

    /// Midpoint quadrature of per-node values over the active set.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let vol = self.cell_volume();
        self.active.iter().map(|&i| values[i]).sum::<f64>() * vol
    }

    /// Grids are interchangeable when their geometry and resolution agree.
    pub fn compatible(&self, other: &Grid) -> bool {
        self.domain == other.domain && self.resolution == other.resolution
    }
}

/// Discrete scalar field on a grid with the Neumann ghost closure kept
/// up to date: every constructor and mutation re-fills the ghost layer, so
/// centered stencils may be applied at any active node.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    pub time: f64,
}

impl GridFunction {
    pub fn zeros(grid: Arc<Grid>, time: f64) -> Self {
        let values = vec![0.0; grid.node_count()];
        GridFunction { grid, values, time }
    }

    pub fn from_fn(grid: Arc<Grid>, time: f64, f: impl Fn(&V3) -> f64) -> Self {
        let mut values = vec![0.0; grid.node_count()];
        for &idx in &grid.active {
            values[idx] = f(&grid.pos_of(idx));
        }
        grid.close_neumann(&mut values);
        GridFunction { grid, values, time }
    }

    /// Wrap a full padded value vector; ghost slots are overwritten by the
    /// closure.
    pub fn from_values(grid: Arc<Grid>, mut values: Vec<f64>, time: f64) -> Self {
        assert_eq!(values.len(), grid.node_count());
        grid.close_neumann(&mut values);
        GridFunction { grid, values, time }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn check_finite(&self, context: &'static str) -> Result<()> {
        for &idx in &self.grid.active {
            if !self.values[idx].is_finite() {
                return Err(Error::NonFiniteInput { context });
            }
        }
        Ok(())
    }

    pub fn sup_abs(&self) -> f64 {
        self.grid
            .active
            .iter()
            .map(|&i| self.values[i].abs())
            .fold(0.0, f64::max)
    }

    /// Max absolute difference over active nodes.
    pub fn sup_diff(&self, other: &GridFunction) -> f64 {
        self.grid
            .active
            .iter()
            .map(|&i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Centered and one-sided stencils. All centered variants assume the ghost
/// layer is valid; the `field_*` variants reference active nodes only and
/// fall back to one-sided differences at the fringe, for derived fields that
/// satisfy no boundary condition.
pub mod stencil {
    use super::{Grid, NodeClass};

    #[inline]
    pub fn dx(grid: &Grid, v: &[f64], idx: usize, axis: usize) -> f64 {
        let s = grid.stride(axis);
        (v[idx + s] - v[idx - s]) / (2.0 * grid.h)
    }

    #[inline]
    pub fn dxx(grid: &Grid, v: &[f64], idx: usize, axis: usize) -> f64 {
        let s = grid.stride(axis);
        (v[idx + s] - 2.0 * v[idx] + v[idx - s]) / (grid.h * grid.h)
    }

    /// Mixed second derivative by the 4-point centered stencil.
    #[inline]
    pub fn dxy(grid: &Grid, v: &[f64], idx: usize) -> f64 {
        let sx = grid.stride(0);
        let sy = grid.stride(1);
        (v[idx + sx + sy] - v[idx + sx - sy] - v[idx - sx + sy] + v[idx - sx - sy])
            / (4.0 * grid.h * grid.h)
    }

    /// First derivative of a derived node field using active nodes only:
    /// centered where possible, else one-sided second-order, else two-point.
    pub fn field_dx(grid: &Grid, v: &[f64], idx: usize, axis: usize) -> f64 {
        let s = grid.stride(axis);
        let h = grid.h;
        let len = v.len();
        let act = |k: usize| k < len && grid.class[k] == NodeClass::Active;
        let fwd1 = act(idx + s);
        let bwd1 = idx >= s && act(idx - s);
        if fwd1 && bwd1 {
            return (v[idx + s] - v[idx - s]) / (2.0 * h);
        }
        if fwd1 {
            if act(idx + 2 * s) {
                return (-3.0 * v[idx] + 4.0 * v[idx + s] - v[idx + 2 * s]) / (2.0 * h);
            }
            return (v[idx + s] - v[idx]) / h;
        }
        if bwd1 {
            if idx >= 2 * s && act(idx - 2 * s) {
                return (3.0 * v[idx] - 4.0 * v[idx - s] + v[idx - 2 * s]) / (2.0 * h);
            }
            return (v[idx] - v[idx - s]) / h;
        }
        0.0
    }

    /// Gradient of a derived node field (active-only stencils).
    pub fn field_grad(grid: &Grid, v: &[f64], idx: usize) -> [f64; 2] {
        let n = grid.domain.dim();
        let mut g = [0.0; 2];
        for (axis, slot) in g.iter_mut().enumerate().take(n) {
            *slot = field_dx(grid, v, idx, axis);
        }
        g
    }
}
