//! Built-in composite problems. The workhorse is a least-squares
//! frontend over a parametric simulation `phi(x, w)`: element `i`
//! evaluates `phi` at parameter row `w_i`, and the outer function
//! measures squared misfit against data `y`. Element values are
//! independent of `y`, so evaluation history transfers across data
//! realizations of the same simulation.

pub mod methanol;
pub mod synthetic;

use crate::bounds::Bounds;
use crate::error::DfoError;
use crate::model::stationarity;
use crate::norms::TrNorm;
use crate::problem::{CompositeProblem, OuterEval};
use crate::{Matrix, Vector};
use std::io::Write as _;
use std::path::Path;

type DynPhi = Box<dyn Fn(&Vector, &[f64]) -> f64 + Send + Sync>;
type DynGrad = Box<dyn Fn(&Vector, &[f64]) -> Vector + Send + Sync>;

/// Composite `f(x) = sum_i (phi(x, w_i) - y_i)^2` over an unrelaxable
/// box. The elements are the simulations `phi(x, w_i)`; the data enter
/// only through the outer function.
pub struct LeastSquaresProblem {
    phi: DynPhi,
    grad: Option<DynGrad>,
    w: Vec<Vec<f64>>,
    y: Vec<f64>,
    bounds: Bounds,
    n_w: usize,
}

impl LeastSquaresProblem {
    /// Build from the simulation, its parameter rows (one per element,
    /// equal widths), the data vector, and the feasible box.
    pub fn new(
        phi: impl Fn(&Vector, &[f64]) -> f64 + Send + Sync + 'static,
        w: Vec<Vec<f64>>,
        y: Vec<f64>,
        bounds: Bounds,
    ) -> Self {
        assert!(!w.is_empty(), "need at least one element");
        assert_eq!(w.len(), y.len(), "one datum per parameter row");
        let n_w = w[0].len();
        assert!(
            w.iter().all(|row| row.len() == n_w),
            "parameter rows must have equal width"
        );
        LeastSquaresProblem {
            phi: Box::new(phi),
            grad: None,
            w,
            y,
            bounds,
            n_w,
        }
    }

    /// Attach the analytic gradient `x -> grad_x phi(x, w)`, enabling
    /// exact stationarity reporting for validation problems.
    pub fn with_gradient(
        mut self,
        grad: impl Fn(&Vector, &[f64]) -> Vector + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Box::new(grad));
        self
    }

    /// Raw simulation value at an arbitrary parameter row.
    pub fn simulate(&self, x: &Vector, w: &[f64]) -> f64 {
        (self.phi)(x, w)
    }

    pub fn data(&self) -> &[f64] {
        &self.y
    }

    pub fn params(&self) -> &[Vec<f64>] {
        &self.w
    }
}

impl CompositeProblem for LeastSquaresProblem {
    fn dim(&self) -> usize {
        self.bounds.dim()
    }

    fn num_elements(&self) -> usize {
        self.w.len()
    }

    fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    fn param_dim(&self) -> usize {
        self.n_w
    }

    fn element_param(&self, i: usize) -> &[f64] {
        &self.w[i]
    }

    fn eval_element(&self, i: usize, x: &Vector) -> f64 {
        (self.phi)(x, &self.w[i])
    }

    fn outer(&self, v: &Vector) -> OuterEval {
        let p = v.len();
        let r = Vector::from_fn(p, |i, _| v[i] - self.y[i]);
        OuterEval {
            value: r.norm_squared(),
            grad: 2.0 * &r,
            hess: Matrix::identity(p, p) * 2.0,
        }
    }

    fn element_gradient(&self, i: usize, x: &Vector) -> Option<Vector> {
        self.grad.as_ref().map(|g| g(x, &self.w[i]))
    }
}

/// Exact gradient of the composite objective, available when every
/// element exposes an analytic gradient: `grad f = G grad_h(F(x))` with
/// `G` the matrix of element gradients.
pub fn true_gradient<P: CompositeProblem + ?Sized>(problem: &P, x: &Vector) -> Option<Vector> {
    let p = problem.num_elements();
    let mut g = Matrix::zeros(problem.dim(), p);
    let mut f = Vector::zeros(p);
    for i in 0..p {
        f[i] = problem.eval_element(i, x);
        g.set_column(i, &problem.element_gradient(i, x)?);
    }
    Some(&g * problem.outer(&f).grad)
}

/// Exact first-order stationarity of the composite objective at `x`,
/// for problems with analytic element gradients.
pub fn true_stationarity<P: CompositeProblem + ?Sized>(
    problem: &P,
    x: &Vector,
    norm: TrNorm,
) -> Option<f64> {
    let g = true_gradient(problem, x)?;
    Some(stationarity(&g, x, problem.bounds(), norm).0)
}

/// Serializable description of a least-squares instance: a registered
/// simulation kind, a start point, parameter rows, and data. The kind
/// fixes the simulation code, its box, and the expected dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: String,
    pub x0: Vector,
    pub w: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl ProblemSpec {
    /// Instantiate the simulation this spec names.
    ///
    /// Registered kinds: `methanol` (batch-reactor kinetics, five
    /// nonnegative rate constants, parameter rows `[time, three initial
    /// concentrations]`) and `affine` (affine simulation
    /// `w[0] + w[1..] . x`, unbounded).
    pub fn build(&self) -> Result<LeastSquaresProblem, DfoError> {
        let n_x = self.x0.len();
        let n_w = self.w.first().map_or(0, |r| r.len());
        match self.kind.as_str() {
            "methanol" => {
                if n_x != methanol::N_X || n_w != methanol::N_W {
                    return Err(DfoError::Config(format!(
                        "methanol expects n_x={} n_w={}, spec has n_x={n_x} n_w={n_w}",
                        methanol::N_X,
                        methanol::N_W
                    )));
                }
                Ok(LeastSquaresProblem::new(
                    methanol::phi,
                    self.w.clone(),
                    self.y.clone(),
                    Bounds::nonnegative(methanol::N_X),
                ))
            }
            "affine" => {
                if n_w != n_x + 1 {
                    return Err(DfoError::Config(format!(
                        "affine expects n_w = n_x + 1, spec has n_x={n_x} n_w={n_w}"
                    )));
                }
                Ok(LeastSquaresProblem::new(
                    synthetic::affine_phi,
                    self.w.clone(),
                    self.y.clone(),
                    Bounds::unbounded(n_x),
                )
                .with_gradient(synthetic::affine_grad))
            }
            other => Err(DfoError::Config(format!(
                "unknown problem kind `{other}` (known: methanol, affine)"
            ))),
        }
    }

    /// Write the problem as text: a header with kind and dimensions, the
    /// start point, then one `w_i ... y_i` row per element, all floats
    /// at 17 significant digits (bit-exact round trip).
    pub fn save(&self, path: &Path) -> Result<(), DfoError> {
        let n_w = self.w.first().map_or(0, |r| r.len());
        let mut out = format!(
            "DFOPROB v1 kind={} n_x={} n_w={} p={}\n",
            self.kind,
            self.x0.len(),
            n_w,
            self.w.len()
        );
        let xs: Vec<String> = self.x0.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&format!("x0 {}\n", xs.join(" ")));
        for (row, &yi) in self.w.iter().zip(&self.y) {
            let mut fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            fields.push(format!("{yi:.16e}"));
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
        let mut f = std::fs::File::create(path).map_err(|e| DfoError::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| DfoError::io(path, e))
    }

    /// Parse a file written by [`ProblemSpec::save`]. Errors name the
    /// offending line.
    pub fn load(path: &Path) -> Result<Self, DfoError> {
        let text = std::fs::read_to_string(path).map_err(|e| DfoError::io(path, e))?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| DfoError::parse(path, 1, "empty file"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("DFOPROB") || parts.next() != Some("v1") {
            return Err(DfoError::parse(path, 1, "expected `DFOPROB v1` header"));
        }
        let (mut kind, mut n_x, mut n_w, mut p) = (None, None, None, None);
        for field in parts {
            let parse_usize = |v: &str, what: &str| {
                v.parse::<usize>()
                    .map_err(|_| DfoError::parse(path, 1, format!("invalid {what} in header")))
            };
            match field.split_once('=') {
                Some(("kind", v)) => kind = Some(v.to_string()),
                Some(("n_x", v)) => n_x = Some(parse_usize(v, "n_x")?),
                Some(("n_w", v)) => n_w = Some(parse_usize(v, "n_w")?),
                Some(("p", v)) => p = Some(parse_usize(v, "p")?),
                _ => {
                    return Err(DfoError::parse(
                        path,
                        1,
                        format!("unknown header field `{field}`"),
                    ))
                }
            }
        }
        let missing = |what: &str| DfoError::parse(path, 1, format!("header missing {what}"));
        let kind = kind.ok_or_else(|| missing("kind"))?;
        let n_x = n_x.ok_or_else(|| missing("n_x"))?;
        let n_w = n_w.ok_or_else(|| missing("n_w"))?;
        let p = p.ok_or_else(|| missing("p"))?;

        let parse_floats = |line: &str, lineno: usize, skip: usize| -> Result<Vec<f64>, DfoError> {
            line.split_whitespace()
                .skip(skip)
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| DfoError::parse(path, lineno, format!("invalid number `{f}`")))
                })
                .collect()
        };

        let (idx, line) = lines
            .next()
            .ok_or_else(|| DfoError::parse(path, 2, "missing x0 line"))?;
        if !line.starts_with("x0 ") {
            return Err(DfoError::parse(path, idx + 1, "expected `x0 <values>` line"));
        }
        let x0 = parse_floats(line, idx + 1, 1)?;
        if x0.len() != n_x {
            return Err(DfoError::parse(
                path,
                idx + 1,
                format!("x0 has {} values, header says n_x={n_x}", x0.len()),
            ));
        }

        let mut w = Vec::with_capacity(p);
        let mut y = Vec::with_capacity(p);
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut nums = parse_floats(line, lineno, 0)?;
            if nums.len() != n_w + 1 {
                return Err(DfoError::parse(
                    path,
                    lineno,
                    format!("expected {} fields, found {}", n_w + 1, nums.len()),
                ));
            }
            y.push(nums.pop().unwrap());
            w.push(nums);
        }
        if w.len() != p {
            return Err(DfoError::parse(
                path,
                1,
                format!("header says p={p} but file has {} element rows", w.len()),
            ));
        }
        Ok(ProblemSpec {
            kind,
            x0: Vector::from_vec(x0),
            w,
            y,
        })
    }
}
