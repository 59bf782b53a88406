//! Derivative-free trust-region optimization for composite objectives
//! `f(x) = h(F(x))` where the outer function `h` is known in closed form
//! and the inner element functions `F_i` are expensive black boxes.
//!
//! The solver interpolates linear models of each element on a
//! well-poised point set inside the trust region, assembles a
//! Gauss-Newton master model through the derivatives of `h`, and takes
//! Cauchy-decrease steps restricted to an unrelaxable box. Function
//! values at interpolation points may be replaced by local ridge
//! regression over a store of previously evaluated points whenever
//! enough neighbors exist within a radius that shrinks quadratically
//! with the trust region, so sequences of related problems get cheaper
//! as the store fills up.
//!
//! ```
//! use dfotrs::bounds::Bounds;
//! use dfotrs::config::SolverConfig;
//! use dfotrs::driver::{solve, RunMode};
//! use dfotrs::problems::LeastSquaresProblem;
//! use dfotrs::surrogate::HistoryStore;
//! use nalgebra::DVector;
//!
//! // fit v |-> phi(x, w) = x1 + x2 * w to three samples of 1 + 2 w
//! let problem = LeastSquaresProblem::new(
//!     |x: &DVector<f64>, w: &[f64]| x[0] + x[1] * w[0],
//!     vec![vec![0.0], vec![1.0], vec![2.0]],
//!     vec![1.0, 3.0, 5.0],
//!     Bounds::unbounded(2),
//! );
//! let mut config = SolverConfig::default();
//! config.budget = 200;
//! let mut store = HistoryStore::new(2, 1);
//! let report = solve(
//!     &problem,
//!     &DVector::from_vec(vec![0.0, 0.0]),
//!     &config,
//!     RunMode::NoHistory,
//!     &mut store,
//! )
//! .unwrap();
//! assert!(report.f_best < 1e-10);
//! ```

pub mod bench;
pub mod bounds;
pub mod config;
pub mod driver;
pub mod error;
pub mod geometry;
pub mod model;
pub mod norms;
pub mod problem;
pub mod problems;
pub mod rng;
pub mod surrogate;

pub use bounds::Bounds;
pub use config::SolverConfig;
pub use error::DfoError;
pub use norms::TrNorm;
pub use problem::CompositeProblem;

/// Column vector of `f64`, the working type for points and gradients.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix of `f64`.
pub type Matrix = nalgebra::DMatrix<f64>;
