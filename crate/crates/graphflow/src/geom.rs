//! Small fixed-size vector and matrix helpers.
//!
//! Ambient space is R^{n+1} with n ∈ {1, 2}. Everything is stored in
//! zero-padded `[f64; 3]` / `[[f64; 3]; 3]` so that sums over all three
//! components remain correct regardless of the active dimension.

pub type V3 = [f64; 3];
pub type M3 = [[f64; 3]; 3];

pub const ZERO_V3: V3 = [0.0; 3];
pub const ZERO_M3: M3 = [[0.0; 3]; 3];

pub fn dot(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm_sq(a: &V3) -> f64 {
    dot(a, a)
}

pub fn norm(a: &V3) -> f64 {
    norm_sq(a).sqrt()
}

pub fn sub(a: &V3, b: &V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: &V3, b: &V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(a: &V3, c: f64) -> V3 {
    [a[0] * c, a[1] * c, a[2] * c]
}

pub fn axpy(y: &V3, c: f64, x: &V3) -> V3 {
    [y[0] + c * x[0], y[1] + c * x[1], y[2] + c * x[2]]
}

pub fn outer(a: &V3, b: &V3) -> M3 {
    let mut m = ZERO_M3;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i] * b[j];
        }
    }
    m
}

pub fn mat_vec(m: &M3, v: &V3) -> V3 {
    let mut out = ZERO_V3;
    for i in 0..3 {
        out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    out
}

pub fn mat_mul(a: &M3, b: &M3) -> M3 {
    let mut m = ZERO_M3;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    m
}

pub fn mat_add(a: &M3, b: &M3) -> M3 {
    let mut m = ZERO_M3;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i][j] + b[i][j];
        }
    }
    m
}

pub fn mat_scale(a: &M3, c: f64) -> M3 {
    let mut m = ZERO_M3;
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[i][j] * c;
        }
    }
    m
}

pub fn trace(m: &M3) -> f64 {
    m[0][0] + m[1][1] + m[2][2]
}

/// Frobenius norm.
pub fn frobenius(m: &M3) -> f64 {
    let mut s = 0.0;
    for row in m {
        for e in row {
            s += e * e;
        }
    }
    s.sqrt()
}

/// `w^T M w` for the quadratic form check in the Huisken identity.
pub fn quad_form(m: &M3, w: &V3) -> f64 {
    dot(w, &mat_vec(m, w))
}

/// Identity restricted to the first `dim` coordinates.
pub fn identity(dim: usize) -> M3 {
    let mut m = ZERO_M3;
    for (i, row) in m.iter_mut().enumerate().take(dim) {
        row[i] = 1.0;
    }
    m
}

pub fn max_abs_entry(m: &M3) -> f64 {
    let mut s: f64 = 0.0;
    for row in m {
        for e in row {
            s = s.max(e.abs());
        }
    }
    s
}
