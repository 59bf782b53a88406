//! Ridge-regularized linear regression used to predict an element value
//! from nearby history records. Fitting runs in data-centered
//! coordinates so the weights are translation invariant and sum to one.

use crate::{Matrix, Vector};

/// Predicted value together with the weights it places on each
/// neighbor. The weights always sum to one.
#[derive(Debug, Clone)]
pub struct Regression {
    pub value: f64,
    pub beta: Vector,
}

/// Fit a ridge-regularized linear model through the neighbors and
/// evaluate it at `theta`.
///
/// With `theta_c` the neighbor mean and `M_d` the matrix of centered
/// neighbor rows, the prediction weights are
/// `beta = 1/N + M_d (M_d^T M_d + lambda I)^{-1} (theta - theta_c)`
/// and the value is `beta . values`. `lambda > 0` keeps the normal
/// matrix positive definite for any neighbor configuration.
///
/// A single neighbor at `theta` itself returns that neighbor's value
/// exactly (`beta = [1]`).
pub fn regress(theta: &[f64], neighbor_thetas: &[&[f64]], values: &[f64], lambda: f64) -> Regression {
    let n = neighbor_thetas.len();
    assert!(n > 0, "regression needs at least one neighbor");
    assert_eq!(values.len(), n);
    assert!(lambda > 0.0, "ridge weight must be positive");
    let dim = theta.len();

    let mut center = vec![0.0; dim];
    for row in neighbor_thetas {
        assert_eq!(row.len(), dim);
        for d in 0..dim {
            center[d] += row[d];
        }
    }
    for c in &mut center {
        *c /= n as f64;
    }
    // refinement pass: the weight-sum identity rides on the centered
    // columns summing to zero, and the solve amplifies any centering
    // residual by roughly 1/lambda
    for (d, c) in center.iter_mut().enumerate() {
        let residual: f64 = neighbor_thetas.iter().map(|row| row[d] - *c).sum();
        *c += residual / n as f64;
    }

    let m_d = Matrix::from_fn(n, dim, |i, d| neighbor_thetas[i][d] - center[d]);
    let mut normal = m_d.transpose() * &m_d;
    for d in 0..dim {
        normal[(d, d)] += lambda;
    }
    let rhs = Vector::from_fn(dim, |d, _| theta[d] - center[d]);
    let y = normal
        .cholesky()
        .expect("ridge-shifted normal matrix is positive definite")
        .solve(&rhs);

    let mut beta = Vector::from_element(n, 1.0 / n as f64) + &m_d * y;
    // the weights sum to one in real arithmetic; the residual left by
    // the solve is pure roundoff, so project it out
    let correction = (1.0 - beta.sum()) / n as f64;
    beta.add_scalar_mut(correction);
    let value = beta.dot(&Vector::from_column_slice(values));
    Regression { value, beta }
}
