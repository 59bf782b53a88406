use crate::error::DfoError;
use crate::Vector;

/// Unrelaxable box `[lower, upper]`. Entries may be infinite; every
/// coordinate must satisfy `lower[j] < upper[j]` strictly. Oracles are
/// never called outside the box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vector,
    upper: Vector,
}

impl Bounds {
    /// Build a box, validating dimensions and strict ordering.
    pub fn new(lower: Vector, upper: Vector) -> Result<Self, DfoError> {
        if lower.len() != upper.len() {
            return Err(DfoError::Config(format!(
                "bound dimensions differ: {} vs {}",
                lower.len(),
                upper.len()
            )));
        }
        for j in 0..lower.len() {
            if lower[j].is_nan() || upper[j].is_nan() || lower[j] >= upper[j] {
                return Err(DfoError::Config(format!(
                    "bounds must satisfy lower < upper per coordinate; coordinate {} has [{}, {}]",
                    j, lower[j], upper[j]
                )));
            }
        }
        Ok(Bounds { lower, upper })
    }

    /// The whole space: `[-inf, inf]^n`.
    pub fn unbounded(n: usize) -> Self {
        Bounds {
            lower: Vector::from_element(n, f64::NEG_INFINITY),
            upper: Vector::from_element(n, f64::INFINITY),
        }
    }

    /// Nonnegative orthant `[0, inf)^n`.
    pub fn nonnegative(n: usize) -> Self {
        Bounds {
            lower: Vector::zeros(n),
            upper: Vector::from_element(n, f64::INFINITY),
        }
    }

    /// Same finite interval `[lo, hi]` in every coordinate.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self, DfoError> {
        Bounds::new(Vector::from_element(n, lo), Vector::from_element(n, hi))
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &Vector {
        &self.lower
    }

    pub fn upper(&self) -> &Vector {
        &self.upper
    }

    /// Closed membership test (boundary points belong to the box).
    pub fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim()
            && (0..x.len()).all(|j| self.lower[j] <= x[j] && x[j] <= self.upper[j])
    }

    /// Euclidean projection onto the box: coordinatewise clamp.
    pub fn project(&self, x: &Vector) -> Vector {
        Vector::from_fn(x.len(), |j, _| x[j].clamp(self.lower[j], self.upper[j]))
    }

    /// Width `upper[j] - lower[j]` (may be infinite).
    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    /// Smallest coordinate width (infinite when every side is).
    pub fn min_width(&self) -> f64 {
        (0..self.dim()).fold(f64::INFINITY, |m, j| m.min(self.width(j)))
    }
}
