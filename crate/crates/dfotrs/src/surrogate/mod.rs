//! Sourcing of element values during model construction: regression
//! over nearby history when enough records exist, free reuse of
//! bitwise-identical past evaluations, and budget-charged oracle calls
//! otherwise. Also scores history points as candidate interpolation
//! directions.

mod regression;
mod store;

pub use regression::{regress, Regression};
pub use store::HistoryStore;

use crate::norms::TrNorm;
use crate::problem::{CompositeProblem, CountingOracle, OracleOutcome};
use crate::Vector;

/// How a requested element value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueSource {
    /// Oracle call or bitwise reuse of a stored oracle call.
    Exact,
    /// Regression over frozen history records.
    Approx,
}

/// Why a value request could not be served.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalFailure {
    /// The oracle call budget is spent.
    BudgetExhausted,
    /// The oracle returned a non-finite value; nothing was recorded.
    NonFinite { element: usize },
}

#[allow(clippy::too_many_arguments)]
/// Produce the value of element `element` at `x`.
///
/// Sourcing order:
/// 1. when `allow_approx` and at least `n_min` frozen records lie
///    within `delta_app` of `theta = (x, w_element)`, regress over them
///    (no oracle charge);
/// 2. a live record at bitwise-identical `theta` is reused as exact,
///    also free;
/// 3. otherwise one budgeted oracle call, recorded into the store.
///
/// Non-finite oracle output is reported as a failure and never
/// recorded; the budget slot it consumed stays consumed.
pub fn approximate_or_evaluate<P: CompositeProblem + ?Sized>(
    oracle: &CountingOracle<'_, P>,
    element: usize,
    x: &Vector,
    delta_app: f64,
    store: &mut HistoryStore,
    n_min: usize,
    lambda: f64,
    allow_approx: bool,
) -> Result<(f64, ValueSource), EvalFailure> {
    let theta: Vec<f64> = x
        .iter()
        .copied()
        .chain(oracle.problem().element_param(element).iter().copied())
        .collect();

    if allow_approx && store.frozen_len() > 0 {
        let neighbors = store.query_frozen(&theta, delta_app, element);
        if neighbors.len() >= n_min {
            let rows: Vec<&[f64]> = neighbors
                .iter()
                .map(|&i| store.record_at(i).theta.as_slice())
                .collect();
            let values: Vec<f64> = neighbors
                .iter()
                .map(|&i| store.record_at(i).value)
                .collect();
            let fit = regress(&theta, &rows, &values, lambda);
            return Ok((fit.value, ValueSource::Approx));
        }
    }

    if let Some(v) = store.lookup_exact(&theta, element) {
        return Ok((v, ValueSource::Exact));
    }

    match oracle.try_eval(element, x) {
        OracleOutcome::BudgetExhausted => Err(EvalFailure::BudgetExhausted),
        OracleOutcome::Value(v) => {
            if !v.is_finite() {
                return Err(EvalFailure::NonFinite { element });
            }
            store.record(theta, v, element);
            Ok((v, ValueSource::Exact))
        }
    }
}

/// Candidate interpolation points drawn from history.
///
/// Takes the distinct live-store points inside the trust region
/// `{x : ||x - x_k||_tr <= delta}` and the feasible box, drops the
/// center itself, keeps those whose frozen history can cover at least
/// `u_thr` elements within `delta_app` (one record within radius covers
/// an element), and returns them sorted by Euclidean distance from the
/// center, nearest first.
pub fn score_candidates<P: CompositeProblem + ?Sized>(
    store: &HistoryStore,
    problem: &P,
    x_k: &Vector,
    delta: f64,
    delta_app: f64,
    norm: TrNorm,
    u_thr: usize,
) -> Vec<Vector> {
    let p = problem.num_elements();
    let bounds = problem.bounds();
    let same_bits = |a: &Vector, b: &Vector| {
        a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
    };

    let mut scored: Vec<(f64, Vector)> = Vec::new();
    for x in store.distinct_points() {
        if same_bits(&x, x_k) || !bounds.contains(&x) {
            continue;
        }
        let d = &x - x_k;
        if norm.eval(&d) > delta {
            continue;
        }
        let mut covered = 0usize;
        for i in 0..p {
            let theta: Vec<f64> = x
                .iter()
                .copied()
                .chain(problem.element_param(i).iter().copied())
                .collect();
            if store.has_frozen_neighbor(&theta, delta_app, i) {
                covered += 1;
            } else if covered + (p - 1 - i) < u_thr {
                break;
            }
        }
        if covered >= u_thr {
            scored.push((d.norm(), x));
        }
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    scored.into_iter().map(|(_, x)| x).collect()
}
