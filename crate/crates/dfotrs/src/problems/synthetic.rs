//! Synthetic zero-residual composites with analytic element gradients,
//! used to check that the solver actually drives the true stationarity
//! measure down, not just its own model's.

use super::LeastSquaresProblem;
use crate::bounds::Bounds;
use crate::Vector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

/// Affine simulation `w[0] + w[1..] . x` (rows carry intercept then
/// coefficients).
pub fn affine_phi(x: &Vector, w: &[f64]) -> f64 {
    w[0] + w[1..].iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>()
}

pub fn affine_grad(_x: &Vector, w: &[f64]) -> Vector {
    Vector::from_column_slice(&w[1..])
}

/// Random affine least-squares instance with a known interior solution:
/// `p` rows drawn from the seed, data generated noise-free at a hidden
/// point of the unit cube, feasible box `[-5, 5]^n`. Starts at zero.
pub fn affine(n: usize, p: usize, seed: u64) -> (LeastSquaresProblem, Vector) {
    assert!(p > n, "need more rows than unknowns for a determined fit");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..=n).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let x_star = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let y: Vec<f64> = w.iter().map(|row| affine_phi(&x_star, row)).collect();
    let problem = LeastSquaresProblem::new(
        affine_phi,
        w,
        y,
        Bounds::cube(n, -5.0, 5.0).unwrap(),
    )
    .with_gradient(affine_grad);
    (problem, Vector::zeros(n))
}

/// The classic banana valley as a two-element composite:
/// `F = (10 (x2 - x1^2), 1 - x1)` with zero data, minimized at `(1, 1)`
/// inside `[-2, 2]^2`. Starts at `(-1.2, 1)`.
pub fn valley() -> (LeastSquaresProblem, Vector) {
    let phi = |x: &Vector, w: &[f64]| {
        if w[0] < 0.5 {
            10.0 * (x[1] - x[0] * x[0])
        } else {
            1.0 - x[0]
        }
    };
    let grad = |x: &Vector, w: &[f64]| {
        if w[0] < 0.5 {
            Vector::from_vec(vec![-20.0 * x[0], 10.0])
        } else {
            Vector::from_vec(vec![-1.0, 0.0])
        }
    };
    let problem = LeastSquaresProblem::new(
        phi,
        vec![vec![0.0], vec![1.0]],
        vec![0.0, 0.0],
        Bounds::cube(2, -2.0, 2.0).unwrap(),
    )
    .with_gradient(grad);
    (problem, Vector::from_vec(vec![-1.2, 1.0]))
}

/// Coupled trigonometric system `F_i = sin(x_i) + (cos(x_j) - 1)/2`
/// with `j` the cyclic successor, zero data, solved at the origin of
/// `[-1, 1]^n`. Starts at `0.5` in every coordinate.
pub fn trig(n: usize) -> (LeastSquaresProblem, Vector) {
    assert!(n >= 2);
    let phi = move |x: &Vector, w: &[f64]| {
        let i = w[0] as usize;
        let j = (i + 1) % x.len();
        x[i].sin() + (x[j].cos() - 1.0) / 2.0
    };
    let grad = move |x: &Vector, w: &[f64]| {
        let i = w[0] as usize;
        let j = (i + 1) % x.len();
        let mut g = Vector::zeros(x.len());
        g[i] += x[i].cos();
        g[j] += -x[j].sin() / 2.0;
        g
    };
    let w: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let problem = LeastSquaresProblem::new(
        phi,
        w,
        vec![0.0; n],
        Bounds::cube(n, -1.0, 1.0).unwrap(),
    )
    .with_gradient(grad);
    (problem, Vector::from_element(n, 0.5))
}
