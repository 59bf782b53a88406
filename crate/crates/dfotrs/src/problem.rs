use crate::bounds::Bounds;
use crate::{Matrix, Vector};
use std::sync::atomic::{AtomicU64, Ordering};

/// Value and derivatives of the outer function `h` at a point of
/// element space.
#[derive(Debug, Clone)]
pub struct OuterEval {
    pub value: f64,
    pub grad: Vector,
    pub hess: Matrix,
}

/// Composite objective `f(x) = h(F(x))`: a glass-box outer function
/// `h: R^p -> R` over `p` black-box element functions `F_i`, restricted
/// to an unrelaxable box.
///
/// Each element carries a parameter vector `w_i` (possibly empty) that
/// keys the evaluation history: the record for `F_i(x)` is stored at
/// `theta = (x, w_i)`, so elements of related problem instances share
/// one store.
pub trait CompositeProblem: Sync {
    /// Decision-variable dimension `n_x`.
    fn dim(&self) -> usize;

    /// Number of element functions `p`.
    fn num_elements(&self) -> usize;

    /// The box constraint.
    fn bounds(&self) -> &Bounds;

    /// Dimension `n_w` of every element parameter vector.
    fn param_dim(&self) -> usize;

    /// Parameter vector `w_i` of element `i`, length `param_dim()`.
    fn element_param(&self, i: usize) -> &[f64];

    /// Black-box element value `F_i(x)`. Only called through
    /// [`CountingOracle`], and only at feasible `x`.
    fn eval_element(&self, i: usize, x: &Vector) -> f64;

    /// Outer function with gradient and Hessian.
    fn outer(&self, v: &Vector) -> OuterEval;

    /// Analytic element gradient, where available (used by tests and
    /// stationarity diagnostics, never by the solver itself).
    fn element_gradient(&self, _i: usize, _x: &Vector) -> Option<Vector> {
        None
    }
}

/// Outcome of [`CountingOracle::try_eval`].
pub enum OracleOutcome {
    /// Fresh evaluation, charged against the budget.
    Value(f64),
    /// The next evaluation would exceed the budget; nothing was called.
    BudgetExhausted,
}

/// The only gateway to `eval_element`: enforces feasibility, counts
/// every call atomically, and refuses calls beyond the budget.
pub struct CountingOracle<'a, P: CompositeProblem + ?Sized> {
    problem: &'a P,
    budget: u64,
    count: AtomicU64,
}

impl<'a, P: CompositeProblem + ?Sized> CountingOracle<'a, P> {
    pub fn new(problem: &'a P, budget: u64) -> Self {
        CountingOracle {
            problem,
            budget,
            count: AtomicU64::new(0),
        }
    }

    pub fn problem(&self) -> &'a P {
        self.problem
    }

    /// Exact element evaluations performed so far.
    pub fn count(&self) -> u64 {
        self.count.load(Ordering::SeqCst)
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    /// Evaluate `F_i(x)`, charging one budget unit, or report that the
    /// budget is exhausted. Panics on infeasible `x`: the solver never
    /// requests such a point, so reaching it is a bug, and the box is
    /// unrelaxable.
    pub fn try_eval(&self, i: usize, x: &Vector) -> OracleOutcome {
        assert!(
            self.problem.bounds().contains(x),
            "oracle called outside the box (element {i})"
        );
        let claimed = self
            .count
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |c| {
                (c < self.budget).then_some(c + 1)
            });
        match claimed {
            Ok(_) => OracleOutcome::Value(self.problem.eval_element(i, x)),
            Err(_) => OracleOutcome::BudgetExhausted,
        }
    }
}
