//! The trust-region iteration: certified interpolation sets around the
//! incumbent, history-assisted element values, a Gauss-Newton master
//! model, criticality control, and a ratio test on exact values at the
//! trial point.

use crate::config::SolverConfig;
use crate::error::DfoError;
use crate::geometry::{build_from_candidates, next_direction};
use crate::model::{fit_linear_elements, master_model, solve_tr_subproblem, stationarity};
use crate::problem::CompositeProblem;
use crate::problem::CountingOracle;
use crate::surrogate::{approximate_or_evaluate, score_candidates, EvalFailure, HistoryStore, ValueSource};
use crate::{Matrix, Vector};
use std::path::Path;

/// Radius below which the iteration stops.
pub const RADIUS_FLOOR: f64 = 1e-12;

/// Hard cap on iterations per solve.
pub const MAX_ITERS: u64 = 10_000;

/// Whether a solve may replace element values at model points with
/// regression over records frozen at solve entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    WithHistory,
    NoHistory,
}

/// Why the solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The exact-evaluation budget ran out (possibly mid-iteration; the
    /// interrupted iteration is not traced).
    Budget,
    /// The radius fell below [`RADIUS_FLOOR`].
    RadiusFloor,
    /// [`MAX_ITERS`] iterations completed.
    MaxIters,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Budget => "budget",
            Termination::RadiusFloor => "radius_floor",
            Termination::MaxIters => "max_iters",
        }
    }
}

/// What iteration `k` did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Model looked stationary while the radius was still large: shrink
    /// only, no trial.
    Criticality,
    /// Trial accepted, incumbent moved.
    Accepted,
    /// Trial rejected (including failed trial evaluations), radius
    /// shrunk.
    Rejected,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::Criticality => "criticality",
            StepKind::Accepted => "accepted",
            StepKind::Rejected => "rejected",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "criticality" => Some(StepKind::Criticality),
            "accepted" => Some(StepKind::Accepted),
            "rejected" => Some(StepKind::Rejected),
            _ => None,
        }
    }
}

/// One completed iteration. `delta` is the radius the iteration ran at;
/// `delta_app = c_app * delta^2` is the regression radius it used;
/// `rho` is 0 on criticality rows and -inf when the trial evaluation
/// failed; `pi_m` is NaN when the model could not be built at all (an
/// undefined oracle value at a model point). Counts are cumulative; `f`
/// is the incumbent objective after the iteration.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub k: u64,
    pub delta: f64,
    pub delta_app: f64,
    pub pi_m: f64,
    pub rho: f64,
    pub step: StepKind,
    pub exact_evals: u64,
    pub approx_uses: u64,
    pub f: f64,
}

/// Solve outcome: final incumbent, bookkeeping, and the full per-
/// iteration trace.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub x_best: Vector,
    pub f_best: f64,
    pub termination: Termination,
    pub iterations: u64,
    pub exact_evals: u64,
    pub approx_uses: u64,
    pub trace: Vec<TraceRow>,
}

const TRACE_HEADER: &str = "k\tdelta\tdelta_app\tpi_m\trho\tstep\texact_evals\tapprox_uses\tf";

impl SolverReport {
    /// Render the trace as tab-separated text with a commented summary
    /// and column documentation. Floats carry 17 significant digits, so
    /// equal reports render byte-identically.
    pub fn trace_tsv(&self) -> String {
        let mut s = String::new();
        s.push_str("# per-iteration trace; one row per completed iteration\n");
        s.push_str("# delta: radius at iteration start; delta_app = c_app * delta^2 (regression radius)\n");
        s.push_str("# pi_m: model stationarity (NaN when no model could be built); rho: decrease ratio (0 on criticality rows, -inf on failed trials)\n");
        s.push_str("# exact_evals / approx_uses: cumulative counts; f: incumbent objective after the iteration\n");
        s.push_str(&format!(
            "# termination={} iterations={} exact_evals={} approx_uses={} f_best={:.16e}\n",
            self.termination.as_str(),
            self.iterations,
            self.exact_evals,
            self.approx_uses,
            self.f_best
        ));
        let xs: Vec<String> = self.x_best.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&format!("# x_best={}\n", xs.join(" ")));
        s.push_str(TRACE_HEADER);
        s.push('\n');
        for r in &self.trace {
            s.push_str(&format!(
                "{}\t{:.16e}\t{:.16e}\t{:.16e}\t{:.16e}\t{}\t{}\t{}\t{:.16e}\n",
                r.k,
                r.delta,
                r.delta_app,
                r.pi_m,
                r.rho,
                r.step.as_str(),
                r.exact_evals,
                r.approx_uses,
                r.f
            ));
        }
        s
    }

    pub fn write_trace(&self, path: &Path) -> Result<(), DfoError> {
        std::fs::write(path, self.trace_tsv()).map_err(|e| DfoError::io(path, e))
    }
}

/// Parse the row section of a trace rendered by
/// [`SolverReport::trace_tsv`] (comment lines are skipped).
pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>, String> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line != TRACE_HEADER {
                return Err(format!("line {lineno}: unexpected column header"));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 9 {
            return Err(format!("line {lineno}: expected 9 columns, found {}", fields.len()));
        }
        let err = |what: &str| format!("line {lineno}: invalid {what}");
        rows.push(TraceRow {
            k: fields[0].parse().map_err(|_| err("k"))?,
            delta: fields[1].parse().map_err(|_| err("delta"))?,
            delta_app: fields[2].parse().map_err(|_| err("delta_app"))?,
            pi_m: fields[3].parse().map_err(|_| err("pi_m"))?,
            rho: fields[4].parse().map_err(|_| err("rho"))?,
            step: StepKind::parse(fields[5]).ok_or_else(|| err("step"))?,
            exact_evals: fields[6].parse().map_err(|_| err("exact_evals"))?,
            approx_uses: fields[7].parse().map_err(|_| err("approx_uses"))?,
            f: fields[8].parse().map_err(|_| err("f"))?,
        });
    }
    if !saw_header {
        return Err("missing column header".to_string());
    }
    Ok(rows)
}

/// Minimize the composite objective from `x0` within the problem's box.
///
/// The store is frozen at entry: records already present feed the
/// regression gate and candidate scoring (in [`RunMode::WithHistory`]),
/// while records added during the solve are visible only to bitwise
/// exact-value reuse. All records the solve adds remain in the store,
/// so a sequence of solves sharing one store gets progressively
/// cheaper.
///
/// The budget counts oracle calls; values obtained by regression or by
/// bitwise reuse are free. The incumbent always holds exactly evaluated
/// element values, so the reported objective is never an approximation.
pub fn solve<P: CompositeProblem + ?Sized>(
    problem: &P,
    x0: &Vector,
    config: &SolverConfig,
    mode: RunMode,
    store: &mut HistoryStore,
) -> Result<SolverReport, DfoError> {
    let n = problem.dim();
    let p = problem.num_elements();
    config.validate_for(problem.bounds())?;
    if x0.len() != n {
        return Err(DfoError::Config(format!(
            "start point has dimension {}, problem has {n}",
            x0.len()
        )));
    }
    if store.n_x() != n || store.n_w() != problem.param_dim() {
        return Err(DfoError::Config(format!(
            "history store is sized for n_x={} n_w={}, problem needs n_x={n} n_w={}",
            store.n_x(),
            store.n_w(),
            problem.param_dim()
        )));
    }
    if !problem.bounds().contains(x0) {
        return Err(DfoError::InfeasibleStart(format!(
            "start point violates the box: {x0}"
        )));
    }
    let required = (p as u64).saturating_mul(n as u64 + 1);
    if config.budget < required {
        return Err(DfoError::BudgetTooSmall {
            budget: config.budget,
            required,
        });
    }

    store.freeze();
    let oracle = CountingOracle::new(problem, config.budget);
    let allow_approx = mode == RunMode::WithHistory;
    let u_thr = config.u_threshold(p);
    let norm = config.tr_norm;
    let mut approx_uses: u64 = 0;

    // exact element values at the start point
    let mut f_vals = Vector::zeros(p);
    for i in 0..p {
        match approximate_or_evaluate(&oracle, i, x0, 0.0, store, config.n_min, config.lambda, false)
        {
            Ok((v, _)) => f_vals[i] = v,
            Err(EvalFailure::NonFinite { element }) => {
                return Err(DfoError::NonFiniteValue { element })
            }
            Err(EvalFailure::BudgetExhausted) => {
                unreachable!("budget was checked to cover the initial evaluations")
            }
        }
    }

    let mut x_k = x0.clone();
    let mut outer = problem.outer(&f_vals);
    let mut f_k = outer.value;
    let mut delta = config.delta0;
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut termination = Termination::MaxIters;

    'iterations: for k in 0..MAX_ITERS {
        let delta_k = delta;
        let delta_app = config.c_app * delta_k * delta_k;

        // certified interpolation set: scored history candidates first,
        // then probe-based fill directions
        let candidates =
            score_candidates(store, problem, &x_k, delta_k, delta_app, norm, u_thr);
        let (mut set, accepted) = build_from_candidates(&x_k, &candidates, delta_k, config.xi);
        let mut points: Vec<Vector> = accepted.iter().map(|&i| candidates[i].clone()).collect();
        while !set.is_complete() {
            let d = next_direction(&set, &x_k, problem.bounds(), delta_k, norm);
            if !set.try_accept(d.clone(), delta_k, config.xi) {
                return Err(DfoError::Geometry(format!(
                    "no fill direction reached pivot threshold {} at radius {delta_k}",
                    config.xi
                )));
            }
            // clamp away half-ulp box violations from the saturated ray
            points.push(problem.bounds().project(&(&x_k + &d)));
        }

        // element values at the set points
        let mut point_values = Matrix::zeros(p, n);
        let mut build_failed = false;
        'values: for (j, x_j) in points.iter().enumerate() {
            for i in 0..p {
                match approximate_or_evaluate(
                    &oracle,
                    i,
                    x_j,
                    delta_app,
                    store,
                    config.n_min,
                    config.lambda,
                    allow_approx,
                ) {
                    Ok((v, source)) => {
                        if source == ValueSource::Approx {
                            approx_uses += 1;
                        }
                        point_values[(i, j)] = v;
                    }
                    Err(EvalFailure::BudgetExhausted) => {
                        termination = Termination::Budget;
                        break 'iterations;
                    }
                    Err(EvalFailure::NonFinite { .. }) => {
                        build_failed = true;
                        break 'values;
                    }
                }
            }
        }

        let (pi_m, rho, step, delta_next);
        if build_failed {
            // an undefined oracle value at a model point: count the
            // iteration as unsuccessful and shrink toward cleaner ground
            pi_m = f64::NAN;
            rho = f64::NEG_INFINITY;
            step = StepKind::Rejected;
            delta_next = config.gamma_dec * delta_k;
        } else {
            let elements = fit_linear_elements(&set, &f_vals, &point_values);
            let master = master_model(&elements, &outer);
            let (pi, d_star) = stationarity(&master.g, &x_k, problem.bounds(), norm);
            pi_m = pi;

            if pi_m <= config.eps_c && delta_k > config.mu * pi_m {
                rho = 0.0;
                step = StepKind::Criticality;
                delta_next = config.gamma_dec * delta_k;
            } else {
                let tr = solve_tr_subproblem(
                    &master,
                    pi_m,
                    &d_star,
                    &x_k,
                    problem.bounds(),
                    delta_k,
                    norm,
                    config.kappa_fcd,
                );
                let x_trial = problem.bounds().project(&(&x_k + &tr.s));

                // the ratio test runs on exact values only
                let mut trial_vals = Vector::zeros(p);
                let mut trial_failed = false;
                for i in 0..p {
                    match approximate_or_evaluate(
                        &oracle,
                        i,
                        &x_trial,
                        delta_app,
                        store,
                        config.n_min,
                        config.lambda,
                        false,
                    ) {
                        Ok((v, _)) => trial_vals[i] = v,
                        Err(EvalFailure::BudgetExhausted) => {
                            termination = Termination::Budget;
                            break 'iterations;
                        }
                        Err(EvalFailure::NonFinite { .. }) => {
                            trial_failed = true;
                            break;
                        }
                    }
                }
                if trial_failed {
                    rho = f64::NEG_INFINITY;
                } else {
                    let trial_outer = problem.outer(&trial_vals);
                    let ratio = (f_k - trial_outer.value) / tr.predicted_decrease;
                    rho = if ratio.is_finite() {
                        ratio
                    } else {
                        f64::NEG_INFINITY
                    };
                    if rho >= config.eta {
                        x_k = x_trial;
                        f_vals = trial_vals;
                        outer = trial_outer;
                        f_k = outer.value;
                    }
                }
                if rho >= config.eta {
                    step = StepKind::Accepted;
                    delta_next = (config.gamma_inc * delta_k).min(config.delta_max);
                } else {
                    step = StepKind::Rejected;
                    delta_next = config.gamma_dec * delta_k;
                }
            }
        }

        trace.push(TraceRow {
            k,
            delta: delta_k,
            delta_app,
            pi_m,
            rho,
            step,
            exact_evals: oracle.count(),
            approx_uses,
            f: f_k,
        });
        delta = delta_next;
        if delta < RADIUS_FLOOR {
            termination = Termination::RadiusFloor;
            break;
        }
    }

    Ok(SolverReport {
        x_best: x_k,
        f_best: f_k,
        termination,
        iterations: trace.len() as u64,
        exact_evals: oracle.count(),
        approx_uses,
        trace,
    })
}
