use crate::bounds::Bounds;
use crate::error::DfoError;
use crate::norms::TrNorm;
use std::fmt::Write as _;
use std::path::Path;

/// Largest admissible pivot threshold for a box and trust-region norm:
/// `(1/n) * min(1/kappa1, min_width / (2 * delta_max))`. Interpolation
/// set completion is guaranteed for any `xi` in `(0, xi_max]`.
pub fn xi_max(bounds: &Bounds, norm: TrNorm, delta_max: f64) -> f64 {
    let n = bounds.dim() as f64;
    let cap_norm = 1.0 / norm.kappa1(bounds.dim());
    let cap_box = bounds.min_width() / (2.0 * delta_max);
    (1.0 / n) * cap_norm.min(cap_box)
}

/// Solver parameters. `Default` gives the reference values used
/// throughout the test suite; every field can also be read from a flat
/// `key = value` text file via [`SolverConfig::from_file`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Initial trust-region radius.
    pub delta0: f64,
    /// Radius cap.
    pub delta_max: f64,
    /// Shrink factor on unsuccessful and criticality iterations, in (0, 1).
    pub gamma_dec: f64,
    /// Growth factor on successful iterations, at least 1.
    pub gamma_inc: f64,
    /// Acceptance threshold for the actual/predicted decrease ratio, in (0, 1).
    pub eta: f64,
    /// Criticality coupling: shrink when `delta > mu * pi` while `pi <= eps_c`.
    pub mu: f64,
    /// Criticality activation threshold on the model stationarity measure.
    pub eps_c: f64,
    /// Approximation-radius coefficient: `delta_app = c_app * delta^2`.
    pub c_app: f64,
    /// Fraction of the ideal Cauchy decrease the step must retain, in (0, 1].
    pub kappa_fcd: f64,
    /// Pivot acceptance threshold for interpolation directions.
    pub xi: f64,
    /// Ridge regularization weight, positive.
    pub lambda: f64,
    /// Minimum neighbor count for the regression gate to fire.
    pub n_min: usize,
    /// Candidate score threshold; `None` means "every element", i.e. p.
    pub u_thr: Option<usize>,
    /// Exact element-evaluation budget per solve.
    pub budget: u64,
    /// Base RNG seed (benchmark replication r uses `seed + r`).
    pub seed: u64,
    /// Trust-region norm.
    pub tr_norm: TrNorm,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            delta0: 1.0,
            delta_max: 1e3,
            gamma_dec: 0.5,
            gamma_inc: 2.0,
            eta: 0.1,
            mu: 10.0,
            eps_c: 1e-2,
            c_app: 1.0,
            kappa_fcd: 0.5,
            xi: 1e-3,
            lambda: 1e-6,
            n_min: 1,
            u_thr: None,
            budget: u64::MAX,
            seed: 0,
            tr_norm: TrNorm::L2,
        }
    }
}

impl SolverConfig {
    /// Range checks that do not need the problem: radii, factors,
    /// thresholds. Problem-dependent checks live in
    /// [`SolverConfig::validate_for`].
    pub fn validate(&self) -> Result<(), DfoError> {
        let err = |m: String| Err(DfoError::Config(m));
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return err(format!("delta0 must be positive and finite, got {}", self.delta0));
        }
        if !(self.delta_max >= self.delta0 && self.delta_max.is_finite()) {
            return err(format!(
                "delta_max must be finite and at least delta0, got {}",
                self.delta_max
            ));
        }
        if !(self.gamma_dec > 0.0 && self.gamma_dec < 1.0) {
            return err(format!("gamma_dec must lie in (0, 1), got {}", self.gamma_dec));
        }
        if !(self.gamma_inc >= 1.0 && self.gamma_inc.is_finite()) {
            return err(format!("gamma_inc must be finite and >= 1, got {}", self.gamma_inc));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return err(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return err(format!("mu must be positive and finite, got {}", self.mu));
        }
        if !(self.eps_c > 0.0 && self.eps_c.is_finite()) {
            return err(format!("eps_c must be positive and finite, got {}", self.eps_c));
        }
        if !(self.c_app > 0.0 && self.c_app.is_finite()) {
            return err(format!("c_app must be positive and finite, got {}", self.c_app));
        }
        if !(self.kappa_fcd > 0.0 && self.kappa_fcd <= 1.0) {
            return err(format!("kappa_fcd must lie in (0, 1], got {}", self.kappa_fcd));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return err(format!("xi must be positive and finite, got {}", self.xi));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return err(format!("lambda must be positive and finite, got {}", self.lambda));
        }
        if self.n_min == 0 {
            return err("n_min must be at least 1".to_string());
        }
        if self.budget == 0 {
            return err("budget must be positive".to_string());
        }
        Ok(())
    }

    /// Full validation against a problem's box: everything in
    /// [`SolverConfig::validate`] plus the pivot-threshold cap
    /// `xi <= xi_max(bounds, tr_norm, delta_max)`.
    pub fn validate_for(&self, bounds: &Bounds) -> Result<(), DfoError> {
        self.validate()?;
        let cap = xi_max(bounds, self.tr_norm, self.delta_max);
        if self.xi > cap {
            return Err(DfoError::Config(format!(
                "xi = {} exceeds the certified cap xi_max = {} for this box and delta_max",
                self.xi, cap
            )));
        }
        Ok(())
    }

    /// Effective candidate score threshold for a problem with `p` elements.
    pub fn u_threshold(&self, p: usize) -> usize {
        self.u_thr.unwrap_or(p)
    }

    /// Parse a flat `key = value` file. Blank lines and lines starting
    /// with `#` are ignored; unknown or duplicate keys are errors that
    /// name the offending line.
    pub fn from_file(path: &Path) -> Result<Self, DfoError> {
        let text = std::fs::read_to_string(path).map_err(|e| DfoError::io(path, e))?;
        Self::from_str_named(&text, path)
    }

    /// Parse config text; `path` is used only in error messages.
    pub fn from_str_named(text: &str, path: &Path) -> Result<Self, DfoError> {
        let mut cfg = SolverConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| DfoError::parse(path, lineno, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(DfoError::parse(path, lineno, format!("duplicate key `{key}`")));
            }
            let bad_num =
                |k: &str| DfoError::parse(path, lineno, format!("invalid number for `{k}`"));
            match key {
                "delta0" => cfg.delta0 = value.parse().map_err(|_| bad_num(key))?,
                "delta_max" => cfg.delta_max = value.parse().map_err(|_| bad_num(key))?,
                "gamma_dec" => cfg.gamma_dec = value.parse().map_err(|_| bad_num(key))?,
                "gamma_inc" => cfg.gamma_inc = value.parse().map_err(|_| bad_num(key))?,
                "eta" => cfg.eta = value.parse().map_err(|_| bad_num(key))?,
                "mu" => cfg.mu = value.parse().map_err(|_| bad_num(key))?,
                "eps_c" => cfg.eps_c = value.parse().map_err(|_| bad_num(key))?,
                "c_app" => cfg.c_app = value.parse().map_err(|_| bad_num(key))?,
                "kappa_fcd" => cfg.kappa_fcd = value.parse().map_err(|_| bad_num(key))?,
                "xi" => cfg.xi = value.parse().map_err(|_| bad_num(key))?,
                "lambda" => cfg.lambda = value.parse().map_err(|_| bad_num(key))?,
                "n_min" => cfg.n_min = value.parse().map_err(|_| bad_num(key))?,
                "u_thr" => cfg.u_thr = Some(value.parse().map_err(|_| bad_num(key))?),
                "budget" => cfg.budget = value.parse().map_err(|_| bad_num(key))?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad_num(key))?,
                "tr_norm" => {
                    cfg.tr_norm = TrNorm::parse(value).ok_or_else(|| {
                        DfoError::parse(path, lineno, "tr_norm must be `l2` or `linf`")
                    })?
                }
                other => {
                    return Err(DfoError::parse(path, lineno, format!("unknown key `{other}`")))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Render in the same `key = value` format accepted by
    /// [`SolverConfig::from_file`].
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "delta0 = {}", self.delta0);
        let _ = writeln!(s, "delta_max = {}", self.delta_max);
        let _ = writeln!(s, "gamma_dec = {}", self.gamma_dec);
        let _ = writeln!(s, "gamma_inc = {}", self.gamma_inc);
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "mu = {}", self.mu);
        let _ = writeln!(s, "eps_c = {}", self.eps_c);
        let _ = writeln!(s, "c_app = {}", self.c_app);
        let _ = writeln!(s, "kappa_fcd = {}", self.kappa_fcd);
        let _ = writeln!(s, "xi = {}", self.xi);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "n_min = {}", self.n_min);
        if let Some(u) = self.u_thr {
            let _ = writeln!(s, "u_thr = {u}");
        }
        let _ = writeln!(s, "budget = {}", self.budget);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "tr_norm = {}", self.tr_norm.name());
        s
    }
}
