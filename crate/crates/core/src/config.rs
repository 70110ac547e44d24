//! Ring geometry and onsite defects.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A periodic tight-binding ring of `n_sites` sites with unit hopping and two
/// complex onsite defects: `alpha` at site `k` and `beta` at site `k_prime`.
///
/// Sites are numbered from 1. The configuration is in PT mode when
/// `beta == conj(alpha)`, in which case `alpha = a + i*eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingConfig {
    n_sites: usize,
    k: usize,
    k_prime: usize,
    alpha: Complex64,
    beta: Complex64,
}

impl RingConfig {
    pub fn new(
        n_sites: usize,
        k: usize,
        k_prime: usize,
        alpha: Complex64,
        beta: Complex64,
    ) -> Result<Self> {
        if n_sites < 3 {
            return Err(Error::Config(format!(
                "ring needs at least 3 sites, got {n_sites}"
            )));
        }
        if k < 1 || k_prime <= k || k_prime > n_sites {
            return Err(Error::Config(format!(
                "lead positions must satisfy 1 <= k < k' <= N, got k={k}, k'={k_prime}, N={n_sites}"
            )));
        }
        if !(alpha.re.is_finite()
            && alpha.im.is_finite()
            && beta.re.is_finite()
            && beta.im.is_finite())
        {
            return Err(Error::Config("onsite energies must be finite".into()));
        }
        Ok(Self {
            n_sites,
            k,
            k_prime,
            alpha,
            beta,
        })
    }

    /// PT-symmetric ring: `alpha = a + i*eta` at `k`, `beta = a - i*eta` at `k_prime`.
    pub fn pt(n_sites: usize, k: usize, k_prime: usize, a: f64, eta: f64) -> Result<Self> {
        let alpha = Complex64::new(a, eta);
        Self::new(n_sites, k, k_prime, alpha, alpha.conj())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn k_prime(&self) -> usize {
        self.k_prime
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// Lead separation `k' - k` along the inner branch.
    pub fn d(&self) -> usize {
        self.k_prime - self.k
    }

    /// Lead separation `N - (k' - k)` along the outer branch.
    pub fn complementary_distance(&self) -> usize {
        self.n_sites - self.d()
    }

    pub fn is_pt(&self) -> bool {
        self.beta == self.alpha.conj()
    }

    /// Real part of the defect at `k`.
    pub fn a(&self) -> f64 {
        self.alpha.re
    }

    /// Gain strength, the imaginary part of the defect at `k`.
    pub fn eta(&self) -> f64 {
        self.alpha.im
    }

    /// Same geometry with the gain/loss replaced by `eta`.
    ///
    /// In PT mode this stays PT; in general mode the imaginary parts become
    /// `+eta` at `k` and `-eta` at `k'`, keeping both real parts.
    pub fn with_eta(&self, eta: f64) -> Self {
        Self {
            alpha: Complex64::new(self.alpha.re, eta),
            beta: Complex64::new(self.beta.re, -eta),
            ..*self
        }
    }

    /// Same geometry with the real onsite energy replaced by `a` on both defects.
    pub fn with_a(&self, a: f64) -> Self {
        Self {
            alpha: Complex64::new(a, self.alpha.im),
            beta: Complex64::new(a, self.beta.im),
            ..*self
        }
    }

    pub(crate) fn require_pt(&self, what: &str) -> Result<()> {
        if self.is_pt() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "{what} requires a PT-symmetric configuration"
            )))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    n_sites: usize,
    k: usize,
    k_prime: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha_im: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta_im: Option<f64>,
}

impl TryFrom<RawConfig> for RingConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        let general = [raw.alpha_re, raw.alpha_im, raw.beta_re, raw.beta_im];
        let pt = [raw.a, raw.eta];
        let any_general = general.iter().any(Option::is_some);
        let any_pt = pt.iter().any(Option::is_some);
        match (any_pt, any_general) {
            (true, true) => Err(Error::Config(
                "mixes PT fields (a, eta) with general fields (alpha_*, beta_*)".into(),
            )),
            (false, true) => match general {
                [Some(ar), Some(ai), Some(br), Some(bi)] => RingConfig::new(
                    raw.n_sites,
                    raw.k,
                    raw.k_prime,
                    Complex64::new(ar, ai),
                    Complex64::new(br, bi),
                ),
                _ => Err(Error::Config(
                    "general mode needs alpha_re, alpha_im, beta_re and beta_im".into(),
                )),
            },
            _ => RingConfig::pt(
                raw.n_sites,
                raw.k,
                raw.k_prime,
                raw.a.unwrap_or(0.0),
                raw.eta.unwrap_or(0.0),
            ),
        }
    }
}

impl From<&RingConfig> for RawConfig {
    fn from(cfg: &RingConfig) -> Self {
        let mut raw = RawConfig {
            n_sites: cfg.n_sites,
            k: cfg.k,
            k_prime: cfg.k_prime,
            a: None,
            eta: None,
            alpha_re: None,
            alpha_im: None,
            beta_re: None,
            beta_im: None,
        };
        if cfg.is_pt() {
            raw.a = Some(cfg.a());
            raw.eta = Some(cfg.eta());
        } else {
            raw.alpha_re = Some(cfg.alpha.re);
            raw.alpha_im = Some(cfg.alpha.im);
            raw.beta_re = Some(cfg.beta.re);
            raw.beta_im = Some(cfg.beta.im);
        }
        raw
    }
}

impl Serialize for RingConfig {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RawConfig::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RingConfig {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawConfig::deserialize(deserializer)?;
        RingConfig::try_from(raw).map_err(serde::de::Error::custom)
    }
}
