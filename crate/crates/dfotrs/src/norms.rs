use crate::Vector;

/// Trust-region norm. The approximation-radius norm used by the
/// history store is always the Euclidean norm; only the trust-region
/// norm is configurable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrNorm {
    /// Euclidean ball trust region.
    #[default]
    L2,
    /// Max-norm (box) trust region.
    Linf,
}

impl TrNorm {
    /// Trust-region norm of `v`.
    pub fn eval(self, v: &Vector) -> f64 {
        match self {
            TrNorm::L2 => v.norm(),
            TrNorm::Linf => v.iter().fold(0.0_f64, |m, &x| m.max(x.abs())),
        }
    }

    /// Constant with `||v||_2 <= kappa0 * ||v||_tr` for all `v` of
    /// dimension `n`. Tight: 1 for L2, sqrt(n) for Linf.
    pub fn kappa0(self, n: usize) -> f64 {
        match self {
            TrNorm::L2 => 1.0,
            TrNorm::Linf => (n as f64).sqrt(),
        }
    }

    /// Constant with `||v||_tr <= kappa1 * ||v||_2` for all `v`.
    /// Tight: 1 for both supported norms.
    pub fn kappa1(self, _n: usize) -> f64 {
        1.0
    }

    /// Name used in config files and CSV rows.
    pub fn name(self) -> &'static str {
        match self {
            TrNorm::L2 => "l2",
            TrNorm::Linf => "linf",
        }
    }

    /// Inverse of [`TrNorm::name`].
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "l2" => Some(TrNorm::L2),
            "linf" => Some(TrNorm::Linf),
            _ => None,
        }
    }
}
