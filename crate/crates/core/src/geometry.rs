//! Nearest-point projection onto the polytope spanned by the leaders.
//!
//! The projection is computed with Wolfe's nearest-point algorithm over
//! barycentric weights: an active set ("corral") of vertices whose affine
//! hull contains the current iterate is grown by the most violating vertex
//! and shrunk whenever the affine minimizer leaves the simplex. The vertex
//! count of a leader polytope is small, so every step is a dense solve.

use crate::error::{invalid, Result};

/// Absolute tolerance for geometric assertions.
pub const GEOMETRY_TOL: f64 = 1e-9;

/// Relative optimality gap at which the major cycle stops, scaled by the
/// largest squared vertex offset.
const OPTIMALITY_GAP: f64 = 1e-14;

/// Pivot threshold (relative) below which a corral is treated as affinely
/// dependent.
const RANK_TOL: f64 = 1e-12;

/// The convex hull of `k` points in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderHull {
    dim: usize,
    vertices: Vec<f64>,
}

impl LeaderHull {
    /// Builds a hull from `k * dim` row-major coordinates.
    pub fn new(dim: usize, vertices: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("hull dimension must be at least 1"));
        }
        if vertices.is_empty() {
            return Err(invalid("hull needs at least one vertex"));
        }
        if vertices.len() % dim != 0 {
            return Err(invalid(format!(
                "{} coordinates do not split into points of dimension {dim}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(invalid("hull vertices must be finite"));
        }
        Ok(Self { dim, vertices })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let dim = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
        if points.is_empty() {
            return Err(invalid("hull needs at least one vertex"));
        }
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(invalid("hull vertices have mixed dimensions"));
            }
            flat.extend_from_slice(p);
        }
        Self::new(dim, flat)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vertices.
    pub fn len(&self) -> usize {
        self.vertices.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> {
        self.vertices.chunks_exact(self.dim)
    }

    /// Point with the given barycentric weights.
    pub fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (w, v) in weights.iter().zip(self.vertices()) {
            if *w != 0.0 {
                axpy(*w, v, &mut out);
            }
        }
        out
    }
}

/// Nearest point of a hull to a query point.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub nearest: Vec<f64>,
    pub distance: f64,
    /// Barycentric weights over the hull vertices; nonnegative, summing to one.
    pub weights: Vec<f64>,
}

/// Projects `x` onto the hull.
pub fn project(x: &[f64], hull: &LeaderHull) -> Result<Projection> {
    check_dim(x, hull)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("query point must be finite"));
    }
    let weights = nearest_weights(x, hull);
    let nearest = hull.combine(&weights);
    let distance = dist(x, &nearest);
    Ok(Projection {
        nearest,
        distance,
        weights,
    })
}

/// Euclidean distance from `x` to the hull.
pub fn distance(x: &[f64], hull: &LeaderHull) -> Result<f64> {
    Ok(project(x, hull)?.distance)
}

/// Gradient of the squared distance, `2 (x - P(x))`.
pub fn sq_distance_gradient(x: &[f64], hull: &LeaderHull) -> Result<Vec<f64>> {
    let p = project(x, hull)?;
    Ok(x.iter().zip(&p.nearest).map(|(a, b)| 2.0 * (a - b)).collect())
}

/// Both sides of the inner-product bound relating a step `x_b - x_a` to the
/// change in hull distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualBound {
    /// `<x_a - P(x_a), x_b - x_a>`.
    pub lhs: f64,
    /// `|x_a|_K * ||x_a|_K - |x_b|_K|`.
    pub rhs: f64,
    /// `-|x_a|_K (|x_a|_K - |x_b|_K)` when `x_a` is strictly farther than `x_b`.
    pub sharp_rhs: Option<f64>,
}

impl ResidualBound {
    /// Whether both the general and (when applicable) the sharp bound hold.
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol && self.sharp_rhs.is_none_or(|s| self.lhs <= s + tol)
    }
}

pub fn residual_bound(x_a: &[f64], x_b: &[f64], hull: &LeaderHull) -> Result<ResidualBound> {
    check_dim(x_b, hull)?;
    let pa = project(x_a, hull)?;
    let db = distance(x_b, hull)?;
    let da = pa.distance;
    let lhs = x_a
        .iter()
        .zip(&pa.nearest)
        .zip(x_b)
        .map(|((a, p), b)| (a - p) * (b - a))
        .sum();
    Ok(ResidualBound {
        lhs,
        rhs: da * (da - db).abs(),
        sharp_rhs: (da > db).then(|| -da * (da - db)),
    })
}

fn check_dim(x: &[f64], hull: &LeaderHull) -> Result<()> {
    if x.len() != hull.dim {
        return Err(invalid(format!(
            "point has dimension {}, hull has dimension {}",
            x.len(),
            hull.dim
        )));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Wolfe's algorithm on the offsets `p_i = v_i - x`.
fn nearest_weights(x: &[f64], hull: &LeaderHull) -> Vec<f64> {
    let k = hull.len();
    let d = hull.dim;
    let offsets: Vec<f64> = hull
        .vertices()
        .flat_map(|v| v.iter().zip(x).map(|(a, b)| a - b))
        .collect();
    let p = |i: usize| &offsets[i * d..(i + 1) * d];

    let sq: Vec<f64> = (0..k).map(|i| dot(p(i), p(i))).collect();
    let scale = sq.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    let start = argmin_first(sq.iter().copied());

    let mut corral = vec![start];
    let mut w = vec![1.0];
    let mut z = p(start).to_vec();

    for _ in 0..(50 * (k + d) + 100) {
        let zz = dot(&z, &z);
        let (entering, best) = (0..k)
            .map(|i| (i, dot(&z, p(i))))
            .fold((usize::MAX, f64::INFINITY), |acc, (i, v)| {
                if v < acc.1 {
                    (i, v)
                } else {
                    acc
                }
            });
        if best >= zz - OPTIMALITY_GAP * scale || corral.contains(&entering) {
            break;
        }
        corral.push(entering);
        w.push(0.0);

        // Minor cycles: move toward the affine minimizer of the corral,
        // dropping vertices whose weight hits zero on the way.
        loop {
            let Some(alpha) = affine_minimizer(&corral, &p, d, scale) else {
                corral.pop();
                w.pop();
                break;
            };
            if alpha.iter().all(|&a| a > 0.0) {
                w = alpha;
                break;
            }
            let mut theta = 1.0;
            let mut leaving = usize::MAX;
            for (i, (&wi, &ai)) in w.iter().zip(&alpha).enumerate() {
                if ai <= 0.0 {
                    let t = if wi - ai > 0.0 { wi / (wi - ai) } else { 0.0 };
                    if t < theta || leaving == usize::MAX {
                        theta = t.clamp(0.0, 1.0);
                        leaving = i;
                    }
                }
            }
            for (wi, ai) in w.iter_mut().zip(&alpha) {
                *wi = (1.0 - theta) * *wi + theta * ai;
            }
            let keep: Vec<bool> = w
                .iter()
                .enumerate()
                .map(|(i, &wi)| i != leaving && wi > 0.0)
                .collect();
            let mut flags = keep.iter();
            corral.retain(|_| *flags.next().unwrap());
            let mut flags = keep.iter();
            w.retain(|_| *flags.next().unwrap());
            if corral.is_empty() {
                // Unreachable in exact arithmetic; fall back to the best vertex.
                corral.push(start);
                w.push(1.0);
                break;
            }
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= total);
        }

        z.iter_mut().for_each(|v| *v = 0.0);
        for (&s, &ws) in corral.iter().zip(&w) {
            axpy(ws, p(s), &mut z);
        }
    }

    let mut weights = vec![0.0; k];
    for (&s, &ws) in corral.iter().zip(&w) {
        weights[s] += ws.max(0.0);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|wi| *wi /= total);
    weights
}

fn argmin_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Minimizes `|sum_s alpha_s p_s|` subject to `sum_s alpha_s = 1` over the
/// corral, via a least-squares solve on the edge vectors `p_s - p_0`.
/// Returns `None` when the corral is numerically affinely dependent.
fn affine_minimizer<'a>(
    corral: &[usize],
    p: &impl Fn(usize) -> &'a [f64],
    d: usize,
    scale: f64,
) -> Option<Vec<f64>> {
    let m = corral.len();
    if m == 1 {
        return Some(vec![1.0]);
    }
    let base = p(corral[0]);
    let cols = m - 1;
    // Modified Gram-Schmidt with one reorthogonalization pass.
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut r = vec![vec![0.0; cols]; cols];
    for j in 0..cols {
        let mut v: Vec<f64> = p(corral[j + 1])
            .iter()
            .zip(base)
            .map(|(a, b)| a - b)
            .collect();
        let col_norm = norm(&v);
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot(qi, &v);
                r[i][j] += c;
                axpy(-c, qi, &mut v);
            }
        }
        let rjj = norm(&v);
        if rjj <= RANK_TOL * col_norm.max(scale.sqrt()) || col_norm == 0.0 {
            return None;
        }
        r[j][j] = rjj;
        v.iter_mut().for_each(|x| *x /= rjj);
        q.push(v);
    }
    debug_assert!(cols <= d);
    // R beta = -Q^T base
    let mut beta: Vec<f64> = q.iter().map(|qi| -dot(qi, base)).collect();
    for i in (0..cols).rev() {
        let mut s = beta[i];
        for (j, bj) in beta.iter().enumerate().skip(i + 1) {
            s -= r[i][j] * bj;
        }
        beta[i] = s / r[i][i];
    }
    let mut alpha = Vec::with_capacity(m);
    alpha.push(1.0 - beta.iter().sum::<f64>());
    alpha.extend(beta);
    Some(alpha)
}
