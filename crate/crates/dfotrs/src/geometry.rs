//! Trust-region interpolation geometry: greedy pivot acceptance of
//! candidate directions and boundary-aware probes along the null space
//! of the current direction set.
//!
//! The set always contains the origin implicitly; `directions` holds
//! the nonzero displacements from the iterate. A candidate is accepted
//! when its component orthogonal to the accepted directions, scaled by
//! the radius, clears the pivot threshold `xi`. Missing directions are
//! filled by probing each null-space basis vector both ways, truncating
//! at the box, and stopping at the trust-region boundary.

use crate::bounds::Bounds;
use crate::norms::TrNorm;
use crate::{Matrix, Vector};

/// Orthonormal basis of the orthogonal complement of `span(directions)`
/// in `R^n`, computed by a full QR factorization. Returns the identity
/// for an empty set and an `n x 0` matrix for a complete one.
pub fn null_basis(directions: &[Vector], n: usize) -> Matrix {
    let m = directions.len();
    if m == 0 {
        return Matrix::identity(n, n);
    }
    // QR of [D | I]: the first m columns of Q span range(D) because D
    // has full column rank, so the trailing n - m columns span its
    // orthogonal complement.
    let mut a = Matrix::zeros(n, m + n);
    for (j, d) in directions.iter().enumerate() {
        a.set_column(j, d);
    }
    for j in 0..n {
        a[(j, m + j)] = 1.0;
    }
    let q = a.qr().q();
    q.columns(m, n - m).into_owned()
}

/// Scaled pivot of `d` against the accepted directions, computed the
/// factorization way: the magnitude of the last diagonal entry of `R`
/// in a QR factorization of `(1/delta) [D | d]`. Equal to
/// `||Z^T d|| / delta` up to roundoff; kept as an independent route so
/// the two can be checked against each other.
pub fn pivot_via_qr(directions: &[Vector], d: &Vector, delta: f64) -> f64 {
    let n = d.len();
    let m = directions.len();
    assert!(m < n, "pivot of a complete set is zero by convention");
    let mut a = Matrix::zeros(n, m + 1);
    for (j, dir) in directions.iter().enumerate() {
        a.set_column(j, &(dir / delta));
    }
    a.set_column(m, &(d / delta));
    let r = a.qr().unpack_r();
    r[(m, m)].abs()
}

/// Certified conditioning constant: with every accepted pivot at least
/// `xi`, the inverse of the completed direction matrix satisfies
/// `||D^{-1}||_2 <= lambda_bound / delta`.
pub fn lambda_bound(n: usize, kappa0: f64, xi: f64) -> f64 {
    let nf = n as f64;
    nf.powf((nf - 1.0) / 2.0) * kappa0.powi(n as i32 - 1) / xi.powi(n as i32)
}

/// Interpolation set for one iteration: nonzero directions from the
/// iterate plus a cached orthonormal null-space basis.
#[derive(Debug, Clone)]
pub struct InterpolationSet {
    dim: usize,
    directions: Vec<Vector>,
    z: Matrix,
}

impl InterpolationSet {
    pub fn new(dim: usize) -> Self {
        InterpolationSet {
            dim,
            directions: Vec::with_capacity(dim),
            z: Matrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Complete means `n` nonzero directions (n + 1 interpolation points).
    pub fn is_complete(&self) -> bool {
        self.directions.len() == self.dim
    }

    pub fn directions(&self) -> &[Vector] {
        &self.directions
    }

    /// Null-space basis of the accepted directions (`dim x (dim - len)`).
    pub fn basis(&self) -> &Matrix {
        &self.z
    }

    /// Scaled pivot `||Z^T d||_2 / delta` of a candidate direction.
    pub fn pivot(&self, d: &Vector, delta: f64) -> f64 {
        (self.z.transpose() * d).norm() / delta
    }

    /// Accept `d` when its pivot clears `xi`; recompute the null basis
    /// on acceptance. Returns whether the direction was taken.
    pub fn try_accept(&mut self, d: Vector, delta: f64, xi: f64) -> bool {
        if self.is_complete() || self.pivot(&d, delta) < xi {
            return false;
        }
        self.directions.push(d);
        self.z = null_basis(&self.directions, self.dim);
        true
    }

    /// Directions as the columns of an `n x len` matrix.
    pub fn direction_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.dim, self.directions.len());
        for (j, d) in self.directions.iter().enumerate() {
            m.set_column(j, d);
        }
        m
    }
}

/// Greedy pivot filtering of candidate displacements `x_c - x_k`
/// (candidates must already be feasible and inside the trust region).
/// Candidates are taken in the given order until the set is complete;
/// the returned indices identify which were accepted.
pub fn build_from_candidates(
    x_k: &Vector,
    candidates: &[Vector],
    delta: f64,
    xi: f64,
) -> (InterpolationSet, Vec<usize>) {
    let mut set = InterpolationSet::new(x_k.len());
    let mut accepted = Vec::new();
    for (idx, c) in candidates.iter().enumerate() {
        if set.is_complete() {
            break;
        }
        if set.try_accept(c - x_k, delta, xi) {
            accepted.push(idx);
        }
    }
    (set, accepted)
}

/// Poisedness merit of a direction: squared Euclidean norm of its
/// null-space component.
pub fn upsilon(z: &Matrix, d: &Vector) -> f64 {
    (z.transpose() * d).norm_squared()
}

/// Per-coordinate step lengths at which the ray `x + tau * v` leaves
/// the box: `(upper_j - x_j)/v_j` for positive `v_j` against a finite
/// upper bound, `(lower_j - x_j)/v_j` for negative `v_j` against a
/// finite lower bound, infinity otherwise (including `v_j = 0`).
pub fn breakpoints(v: &Vector, x: &Vector, bounds: &Bounds) -> Vec<f64> {
    (0..v.len())
        .map(|j| {
            if v[j] > 0.0 && bounds.upper()[j].is_finite() {
                (bounds.upper()[j] - x[j]) / v[j]
            } else if v[j] < 0.0 && bounds.lower()[j].is_finite() {
                (bounds.lower()[j] - x[j]) / v[j]
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Truncated displacement `d(v, tau)_j = min(tau, taubar_j) * v_j`,
/// with the convention that a zero component of `v` contributes zero
/// regardless of any infinite factor.
pub fn truncated_direction(v: &Vector, tau: f64, taubars: &[f64]) -> Vector {
    Vector::from_fn(v.len(), |j, _| {
        if v[j] == 0.0 {
            0.0
        } else {
            tau.min(taubars[j]) * v[j]
        }
    })
}

/// Best feasible truncation of the probe `v` inside the trust region:
/// walks the distinct breakpoints of the ray, and if the fully
/// saturated displacement still fits in the region returns the
/// merit-maximizing breakpoint, otherwise solves for the boundary
/// crossing and maximizes the merit over the earlier breakpoints plus
/// the crossing. Returns `(tau, d(v, tau))`.
pub fn opt_step(
    z: &Matrix,
    v: &Vector,
    x: &Vector,
    bounds: &Bounds,
    delta: f64,
    norm: TrNorm,
) -> (f64, Vector) {
    let taubars = breakpoints(v, x, bounds);
    let mut bps: Vec<f64> = taubars.iter().copied().filter(|&t| t > 0.0).collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    if bps.is_empty() {
        // every coordinate of v is pinned at the box; the ray is dead
        return (0.0, Vector::zeros(v.len()));
    }

    // like truncated_direction, but saturated coordinates land exactly
    // on their box face instead of via the taubar*v round trip, which
    // can overshoot the box by an ulp
    let d_at = |tau: f64| -> Vector {
        Vector::from_fn(v.len(), |j, _| {
            if v[j] == 0.0 {
                0.0
            } else if taubars[j] <= tau {
                if v[j] > 0.0 {
                    bounds.upper()[j] - x[j]
                } else {
                    bounds.lower()[j] - x[j]
                }
            } else {
                tau * v[j]
            }
        })
    };
    let norm_at = |tau: f64| norm.eval(&d_at(tau));

    let largest = *bps.last().unwrap();
    if norm_at(largest) <= delta {
        // the whole truncated ray fits: pick the best breakpoint
        let mut best = (bps[0], upsilon(z, &d_at(bps[0])));
        for &bp in &bps[1..] {
            let u = upsilon(z, &d_at(bp));
            if u > best.1 {
                best = (bp, u);
            }
        }
        return (best.0, d_at(best.0));
    }

    // find the segment [prev, bp] on which the norm crosses delta
    let mut prev = 0.0;
    let mut crossing = bps.len() - 1;
    for (idx, &bp) in bps.iter().enumerate() {
        if norm_at(bp) >= delta {
            crossing = idx;
            break;
        }
        prev = bp;
    }
    let hi = bps[crossing];
    let tau_hat = boundary_crossing(v, &taubars, prev, hi, delta, norm, &norm_at);

    // best merit among breakpoints strictly before the crossing, plus tau_hat
    let mut best = (tau_hat, upsilon(z, &d_at(tau_hat)));
    for &bp in &bps[..crossing] {
        let u = upsilon(z, &d_at(bp));
        if u > best.1 {
            best = (bp, u);
        }
    }
    (best.0, d_at(best.0))
}

/// Solve `||d(v, tau)||_tr = delta` for `tau` on a segment with a fixed
/// saturation pattern: closed form (quadratic for the Euclidean norm,
/// piecewise linear for the max norm) verified against the norm, with a
/// bisection fallback at 1e-12 relative tolerance.
fn boundary_crossing(
    v: &Vector,
    taubars: &[f64],
    lo: f64,
    hi: f64,
    delta: f64,
    norm: TrNorm,
    norm_at: &dyn Fn(f64) -> f64,
) -> f64 {
    let analytic = match norm {
        TrNorm::L2 => {
            let mut saturated = 0.0;
            let mut free = 0.0;
            for j in 0..v.len() {
                if v[j] == 0.0 {
                    continue;
                }
                if taubars[j] <= lo {
                    saturated += (taubars[j] * v[j]).powi(2);
                } else {
                    free += v[j] * v[j];
                }
            }
            (free > 0.0).then(|| ((delta * delta - saturated).max(0.0) / free).sqrt())
        }
        TrNorm::Linf => {
            let mut free = 0.0_f64;
            for j in 0..v.len() {
                if v[j] != 0.0 && taubars[j] > lo {
                    free = free.max(v[j].abs());
                }
            }
            (free > 0.0).then(|| delta / free)
        }
    };
    let tol = 1e-12 * delta.max(1.0);
    if let Some(t) = analytic {
        let t = t.clamp(lo, hi);
        if (norm_at(t) - delta).abs() <= tol {
            return t;
        }
    }
    // bisection on a bracket with norm_at(lo) <= delta <= norm_at(hi)
    let mut a = lo;
    let mut b = if hi.is_finite() {
        hi
    } else {
        let mut b = lo.max(1.0);
        while norm_at(b) < delta {
            b *= 2.0;
        }
        b
    };
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if norm_at(mid) < delta {
            a = mid;
        } else {
            b = mid;
        }
    }
    b
}

/// One fill direction for an incomplete set: probe every null-space
/// basis vector in both orientations, truncate each at the box and the
/// trust region, and keep the first probe attaining the largest merit.
pub fn next_direction(
    set: &InterpolationSet,
    x: &Vector,
    bounds: &Bounds,
    delta: f64,
    norm: TrNorm,
) -> Vector {
    let z = set.basis();
    let nz = z.ncols();
    assert!(nz >= 1, "next_direction requires an incomplete set");
    let mut best_d = Vector::zeros(x.len());
    let mut best_u = 0.0;
    for i in 0..nz {
        for sign in [1.0, -1.0] {
            let v: Vector = z.column(i) * sign;
            let (_, d) = opt_step(z, &v, x, bounds, delta, norm);
            let u = upsilon(z, &d);
            if u > best_u {
                best_u = u;
                best_d = d;
            }
        }
    }
    best_d
}
