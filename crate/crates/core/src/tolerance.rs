use num_complex::Complex64;

/// Environment variable that overrides the reality tolerance.
pub const TOL_ENV: &str = "PTRING_TOL";

/// Numerical thresholds shared by the analysis routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// An energy counts as real when `|Im E| <= reality * (1 + |E|)`.
    pub reality: f64,
    /// Eigenvalues closer than this form one degenerate cluster.
    pub cluster: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            reality: 1e-9,
            cluster: 1e-7,
        }
    }
}

impl Tolerances {
    /// Defaults, with the reality tolerance taken from `PTRING_TOL` when it
    /// holds a positive number.
    pub fn from_env() -> Self {
        let mut tol = Self::default();
        if let Some(v) = std::env::var(TOL_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
        {
            if v.is_finite() && v > 0.0 {
                tol.reality = v;
            }
        }
        tol
    }

    pub fn is_real(&self, energy: Complex64) -> bool {
        energy.im.abs() <= self.reality * (1.0 + energy.norm())
    }
}
