//! Methanol-to-hydrocarbons batch-reactor kinetics. The simulation
//! integrates a three-species concentration system whose right-hand
//! side depends on five nonnegative rate constants `x`, starting from a
//! simplex initial state, and reports the third concentration at a
//! requested time. Parameter rows are `w = [time, v1(0), v2(0), v3(0)]`.
//!
//! Instance generation draws perturbed initial states, a hidden rate
//! vector, and multiplicative data noise from a counter-based RNG in a
//! frozen order, so instances are reproducible and identical across
//! runs that share `(seed, rep, t)`.

use super::ProblemSpec;
use crate::rng::{instance_rng, SolverRng};
use crate::Vector;
use rand::Rng;
use rand_distr::StandardNormal;

pub const N_X: usize = 5;
pub const N_W: usize = 4;

/// Literature rate estimate used as the start point and the center of
/// the hidden-rate distribution.
pub const X_BASE: [f64; N_X] = [1.78, 2.17, 1.86, 1.80, 0.0];

/// Unperturbed initial concentration triples (each on the unit simplex).
pub const BASE_ICS: [[f64; 3]; 7] = [
    [1.0, 0.0, 0.0],
    [0.75, 0.25, 0.0],
    [0.75, 0.0, 0.25],
    [0.5, 0.5, 0.0],
    [0.5, 0.0, 0.5],
    [0.25, 0.75, 0.0],
    [0.25, 0.0, 0.75],
];

/// Observation times; elements are ordered time-major, so element
/// `i = 7 j + l` pairs time `j` with initial state `l`.
pub const TIMES: [f64; 3] = [0.1, 0.4, 0.8];

/// Radius of the ball in which initial states are perturbed before
/// projection back onto the simplex.
pub const IC_BALL_RADIUS: f64 = 0.1;

/// Relative half-width of the multiplicative observation noise.
pub const NOISE_LEVEL: f64 = 0.1;

/// Fixed integrator step for element evaluation.
pub const RK4_STEP: f64 = 1e-3;

/// Kinetics right-hand side. No smoothing at the removable `0/0` when
/// the denominator vanishes: the formula is evaluated as written and
/// returns NaN there, which the solver treats as a failed evaluation.
pub fn rhs(x: &[f64], v: [f64; 3]) -> [f64; 3] {
    let den = (x[1] + x[4]) * v[0] + v[1];
    [
        -(2.0 * x[1] - x[0] * v[1] / den + x[2] + x[3]) * v[0],
        x[0] * v[0] * (x[1] * v[0] - v[1]) / den + x[2] * v[0],
        x[0] * v[0] * (v[1] + x[4] * v[0]) / den + x[3] * v[0],
    ]
}

fn rk4_step(x: &[f64], v: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
    let k1 = rhs(x, v);
    let k2 = rhs(x, add(v, k1, 0.5 * h));
    let k3 = rhs(x, add(v, k2, 0.5 * h));
    let k4 = rhs(x, add(v, k3, h));
    let mut out = v;
    for c in 0..3 {
        out[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    out
}

/// Classical fourth-order Runge-Kutta with fixed step `h`: full steps
/// as long as they fit, then one exact partial step onto `tau`.
pub fn integrate_with_step(x: &[f64], v0: [f64; 3], tau: f64, h: f64) -> [f64; 3] {
    assert!(h > 0.0 && tau >= 0.0);
    let n_full = (tau / h + 1e-9).floor() as u64;
    let mut v = v0;
    for _ in 0..n_full {
        v = rk4_step(x, v, h);
    }
    let rem = tau - n_full as f64 * h;
    if rem > 1e-14 * tau.max(1.0) {
        v = rk4_step(x, v, rem);
    }
    v
}

/// Concentrations at time `tau` with the production step size.
pub fn integrate(x: &[f64], v0: [f64; 3], tau: f64) -> [f64; 3] {
    integrate_with_step(x, v0, tau, RK4_STEP)
}

/// Element simulation: third concentration at `w[0]`, starting from
/// `(w[1], w[2], w[3])`, under rates `x`.
pub fn phi(x: &Vector, w: &[f64]) -> f64 {
    integrate(x.as_slice(), [w[1], w[2], w[3]], w[0])[2]
}

/// Euclidean projection onto the unit simplex `{v >= 0, sum v = 1}`
/// via the sorted-threshold rule.
pub fn simplex_project(u: [f64; 3]) -> [f64; 3] {
    let mut s = u;
    s.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &sk) in s.iter().enumerate() {
        cum += sk;
        let cand = (cum - 1.0) / (k + 1) as f64;
        if sk - cand > 0.0 {
            theta = cand;
        }
    }
    [
        (u[0] - theta).max(0.0),
        (u[1] - theta).max(0.0),
        (u[2] - theta).max(0.0),
    ]
}

/// Uniform sample from the closed ball of the given radius: an
/// isotropic direction from three standard normals, then the radius
/// scaled by the cube root of one uniform draw. Exactly four RNG draws,
/// in that order.
pub fn ball_sample(rng: &mut SolverRng, radius: f64) -> [f64; 3] {
    let mut n = [0.0_f64; 3];
    for c in &mut n {
        *c = rng.sample(StandardNormal);
    }
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2])
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let u: f64 = rng.gen();
    let r = radius * u.cbrt();
    [r * n[0] / norm, r * n[1] / norm, r * n[2] / norm]
}

/// A generated instance together with the hidden quantities behind it.
#[derive(Debug, Clone)]
pub struct InstanceDetail {
    pub spec: ProblemSpec,
    /// Rates the data were generated from.
    pub x_true: Vector,
    /// Noise-free simulation values at `x_true`, in element order.
    pub phi_true: Vec<f64>,
}

/// Generate instance `t` of replication `rep` under the base seed.
///
/// RNG draw order (frozen): seven ball samples perturbing the initial
/// states in listing order, five uniforms shifting the base rates, then
/// twenty-one noise uniforms in element order.
pub fn instance_detail(seed: u64, rep: u64, t: u64) -> InstanceDetail {
    let mut rng = instance_rng(seed.wrapping_add(rep), t);
    let ics: Vec<[f64; 3]> = BASE_ICS
        .iter()
        .map(|base| {
            let p = ball_sample(&mut rng, IC_BALL_RADIUS);
            simplex_project([base[0] + p[0], base[1] + p[1], base[2] + p[2]])
        })
        .collect();
    let x_true = Vector::from_fn(N_X, |j, _| X_BASE[j] + rng.gen::<f64>());
    let mut w = Vec::with_capacity(TIMES.len() * ics.len());
    for &tau in &TIMES {
        for ic in &ics {
            w.push(vec![tau, ic[0], ic[1], ic[2]]);
        }
    }
    let phi_true: Vec<f64> = w.iter().map(|row| phi(&x_true, row)).collect();
    let y: Vec<f64> = phi_true
        .iter()
        .map(|&f| f + f.abs() * rng.gen_range(-NOISE_LEVEL..NOISE_LEVEL))
        .collect();
    InstanceDetail {
        spec: ProblemSpec {
            kind: "methanol".into(),
            x0: Vector::from_column_slice(&X_BASE),
            w,
            y,
        },
        x_true,
        phi_true,
    }
}

/// The instance alone, without the hidden generation detail.
pub fn instance_spec(seed: u64, rep: u64, t: u64) -> ProblemSpec {
    instance_detail(seed, rep, t).spec
}
