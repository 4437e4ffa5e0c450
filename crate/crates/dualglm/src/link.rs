//! Link-function catalog and separation diagnostics.
//!
//! Each family exposes its base CDF, quantile, density and density
//! derivative. `squash` is the clamped inverse link used inside the
//! estimators so iterations stay finite; the boundary pathology itself is
//! surfaced through [`diagnose_separation`] rather than hidden.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use thiserror::Error;

/// Clamp margin applied by [`LinkSpec::squash`].
pub const SQUASH_EPS: f64 = 1e-12;

/// Default |η| threshold above which a fit is flagged as separated.
/// Beyond 30 the logistic CDF is within ~1e-13 of a boundary, past the
/// resolution of `1 - p` in double precision.
pub const SEPARATION_THRESHOLD: f64 = 30.0;

/// Margin around {0, 1} at which fitted probabilities count as boundary hits.
pub const PROB_BOUNDARY_EPS: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("link diverges at boundary probability {0}")]
    BoundaryDivergence(f64),
    #[error("probability {0} outside (0,1)")]
    ProbabilityOutOfRange(f64),
    #[error("linear predictor must be finite, got {0}")]
    NonFiniteEta(f64),
    #[error("etas and probs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("link evaluation is unavailable with a user-supplied monotone transform")]
    TransformNotInvertible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkFamily {
    Logit,
    Probit,
    Cloglog,
    Identity,
}

impl LinkFamily {
    pub fn tag(self) -> &'static str {
        match self {
            LinkFamily::Logit => "logit",
            LinkFamily::Probit => "probit",
            LinkFamily::Cloglog => "cloglog",
            LinkFamily::Identity => "identity",
        }
    }
}

impl std::str::FromStr for LinkFamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "logit" => Ok(LinkFamily::Logit),
            "probit" => Ok(LinkFamily::Probit),
            "cloglog" => Ok(LinkFamily::Cloglog),
            "identity" => Ok(LinkFamily::Identity),
            other => Err(format!("unknown link family {other:?}")),
        }
    }
}

/// Optional monotone map (0,1) → (0,1) applied on top of the base CDF.
pub type MonotoneTransform = fn(f64) -> f64;

/// A link specification: base CDF family plus an optional monotone
/// transform of the success probability (default identity).
#[derive(Debug, Clone, Copy)]
pub struct LinkSpec {
    pub family: LinkFamily,
    pub transform: Option<MonotoneTransform>,
}

impl LinkSpec {
    pub fn new(family: LinkFamily) -> Self {
        Self {
            family,
            transform: None,
        }
    }

    pub fn logit() -> Self {
        Self::new(LinkFamily::Logit)
    }

    pub fn probit() -> Self {
        Self::new(LinkFamily::Probit)
    }

    pub fn cloglog() -> Self {
        Self::new(LinkFamily::Cloglog)
    }

    pub fn identity() -> Self {
        Self::new(LinkFamily::Identity)
    }

    fn std_normal() -> Normal {
        Normal::new(0.0, 1.0).expect("standard normal")
    }

    /// Base CDF at `eta` (identity family: passthrough).
    pub fn base_cdf(&self, eta: f64) -> f64 {
        match self.family {
            LinkFamily::Logit => 1.0 / (1.0 + (-eta).exp()),
            LinkFamily::Probit => Self::std_normal().cdf(eta),
            LinkFamily::Cloglog => 1.0 - (-eta.exp()).exp(),
            LinkFamily::Identity => eta,
        }
    }

    /// Derivative of the base CDF.
    pub fn density(&self, eta: f64) -> f64 {
        match self.family {
            LinkFamily::Logit => {
                let p = self.base_cdf(eta);
                p * (1.0 - p)
            }
            LinkFamily::Probit => Self::std_normal().pdf(eta),
            LinkFamily::Cloglog => (eta - eta.exp()).exp(),
            LinkFamily::Identity => 1.0,
        }
    }

    /// Second derivative of the base CDF.
    pub fn density_deriv(&self, eta: f64) -> f64 {
        match self.family {
            LinkFamily::Logit => {
                let p = self.base_cdf(eta);
                p * (1.0 - p) * (1.0 - 2.0 * p)
            }
            LinkFamily::Probit => -eta * Self::std_normal().pdf(eta),
            LinkFamily::Cloglog => (eta - eta.exp()).exp() * (1.0 - eta.exp()),
            LinkFamily::Identity => 0.0,
        }
    }

    fn base_quantile(&self, p: f64) -> f64 {
        match self.family {
            LinkFamily::Logit => (p / (1.0 - p)).ln(),
            LinkFamily::Probit => Self::std_normal().inverse_cdf(p),
            LinkFamily::Cloglog => (-(1.0 - p).ln()).ln(),
            LinkFamily::Identity => p,
        }
    }

    /// η = g(p). Errors at exact {0,1}: the link is unbounded there, and
    /// the divergence is reported instead of returning ±∞.
    pub fn link_eval(&self, p: f64) -> Result<f64, LinkError> {
        if self.transform.is_some() {
            return Err(LinkError::TransformNotInvertible);
        }
        if self.family == LinkFamily::Identity {
            return Ok(p);
        }
        if p == 0.0 || p == 1.0 {
            return Err(LinkError::BoundaryDivergence(p));
        }
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(LinkError::ProbabilityOutOfRange(p));
        }
        Ok(self.base_quantile(p))
    }

    /// p = F(η), composed with the optional monotone transform.
    pub fn inverse_link(&self, eta: f64) -> Result<f64, LinkError> {
        if !eta.is_finite() {
            return Err(LinkError::NonFiniteEta(eta));
        }
        let p = self.base_cdf(eta);
        Ok(match self.transform {
            Some(h) => h(p),
            None => p,
        })
    }

    /// Clamped inverse link: `base_cdf(eta)` restricted to
    /// `[SQUASH_EPS, 1 − SQUASH_EPS]` so per-observation exponent
    /// calibration is solvable in the reals.
    pub fn squash(&self, eta: f64) -> f64 {
        let p = self.base_cdf(eta);
        let p = match self.transform {
            Some(h) => h(p),
            None => p,
        };
        p.clamp(SQUASH_EPS, 1.0 - SQUASH_EPS)
    }

    /// True iff the base CDF satisfies `F(−x) = 1 − F(x)` on a grid.
    pub fn check_symmetry(&self, grid_size: usize, tol: f64) -> bool {
        assert!(grid_size >= 3, "grid_size must be at least 3");
        let lo = -6.0;
        let hi = 6.0;
        (0..grid_size).all(|i| {
            let x = lo + (hi - lo) * i as f64 / (grid_size - 1) as f64;
            (self.base_cdf(-x) - (1.0 - self.base_cdf(x))).abs() <= tol
        })
    }
}

/// Separation / unbounded-link diagnostic for a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub separated: bool,
    pub max_abs_eta: f64,
    pub offending_indices: Vec<usize>,
    pub fitted_prob_extremes: (f64, f64),
}

impl SeparationReport {
    pub fn clean() -> Self {
        Self {
            separated: false,
            max_abs_eta: 0.0,
            offending_indices: Vec::new(),
            fitted_prob_extremes: (0.5, 0.5),
        }
    }
}

/// Flag observations whose linear predictor exceeds `threshold` in
/// magnitude or whose fitted probability sits on a boundary.
pub fn diagnose_separation(
    etas: &[f64],
    probs: &[f64],
    threshold: f64,
) -> Result<SeparationReport, LinkError> {
    if etas.len() != probs.len() {
        return Err(LinkError::LengthMismatch(etas.len(), probs.len()));
    }
    if etas.is_empty() {
        return Err(LinkError::EmptyInput);
    }
    assert!(threshold > 0.0, "threshold must be positive");
    let mut offending = Vec::new();
    let mut max_abs_eta: f64 = 0.0;
    let mut min_p = f64::INFINITY;
    let mut max_p = f64::NEG_INFINITY;
    for (i, (&eta, &p)) in etas.iter().zip(probs).enumerate() {
        max_abs_eta = max_abs_eta.max(eta.abs());
        min_p = min_p.min(p);
        max_p = max_p.max(p);
        if eta.abs() > threshold || p <= PROB_BOUNDARY_EPS || p >= 1.0 - PROB_BOUNDARY_EPS {
            offending.push(i);
        }
    }
    Ok(SeparationReport {
        separated: !offending.is_empty(),
        max_abs_eta,
        offending_indices: offending,
        fitted_prob_extremes: (min_p, max_p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn link_eval_closed_forms() {
        assert_abs_diff_eq!(LinkSpec::logit().link_eval(0.5).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(LinkSpec::probit().link_eval(0.5).unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            LinkSpec::logit().link_eval(0.9).unwrap(),
            9.0f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn link_eval_boundary_errors() {
        assert!(matches!(
            LinkSpec::logit().link_eval(0.0),
            Err(LinkError::BoundaryDivergence(_))
        ));
        assert!(matches!(
            LinkSpec::probit().link_eval(1.0),
            Err(LinkError::BoundaryDivergence(_))
        ));
        // identity family accepts any real
        assert_eq!(LinkSpec::identity().link_eval(3.5).unwrap(), 3.5);
    }

    #[test]
    fn inverse_link_closed_forms() {
        assert_abs_diff_eq!(LinkSpec::logit().inverse_link(0.0).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(
            LinkSpec::cloglog().inverse_link(0.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            epsilon = 1e-14
        );
        assert!(LinkSpec::logit().inverse_link(f64::INFINITY).is_err());
    }

    #[test]
    fn round_trip_on_grid() {
        for family in [LinkFamily::Logit, LinkFamily::Probit, LinkFamily::Cloglog] {
            let spec = LinkSpec::new(family);
            for i in 1..100 {
                let p = i as f64 / 100.0;
                let eta = spec.link_eval(p).unwrap();
                let back = spec.inverse_link(eta).unwrap();
                assert!(
                    (back - p).abs() <= 1e-10,
                    "{family:?} round trip failed at p={p}: {back}"
                );
            }
        }
    }

    #[test]
    fn monotone_on_grid() {
        for family in [
            LinkFamily::Logit,
            LinkFamily::Probit,
            LinkFamily::Cloglog,
            LinkFamily::Identity,
        ] {
            let spec = LinkSpec::new(family);
            // cloglog saturates to exactly 1.0 in doubles past eta ~ 3.6
            let hi = if family == LinkFamily::Cloglog { 2.5 } else { 6.0 };
            let mut prev = None;
            for i in 0..200 {
                let eta = -6.0 + (hi + 6.0) * i as f64 / 199.0;
                let p = spec.inverse_link(eta).unwrap();
                if let Some(q) = prev {
                    assert!(p > q, "{family:?} not strictly increasing at eta={eta}");
                }
                prev = Some(p);
            }
        }
    }

    #[test]
    fn density_matches_finite_differences() {
        let h = 1e-5;
        for family in [LinkFamily::Logit, LinkFamily::Probit, LinkFamily::Cloglog] {
            let spec = LinkSpec::new(family);
            // stay where the CDF is not flat to double precision, so the
            // central difference is well conditioned; cloglog saturates at
            // much smaller eta than the symmetric families
            let hi = if family == LinkFamily::Cloglog { 1.5 } else { 5.0 };
            for i in 0..61 {
                let eta = -5.0 + (hi + 5.0) * i as f64 / 60.0;
                let fd = (spec.base_cdf(eta + h) - spec.base_cdf(eta - h)) / (2.0 * h);
                let an = spec.density(eta);
                let rel = (fd - an).abs() / an.abs().max(1e-12);
                // central differences lose accuracy where the CDF is flat
                assert!(rel < 1e-5, "{family:?} density mismatch at eta={eta}: rel={rel}");
            }
        }
    }

    #[test]
    fn density_deriv_matches_finite_differences() {
        let h = 1e-5;
        for family in [LinkFamily::Logit, LinkFamily::Probit, LinkFamily::Cloglog] {
            let spec = LinkSpec::new(family);
            for i in 0..41 {
                let eta = -4.0 + 8.0 * i as f64 / 40.0;
                let fd = (spec.density(eta + h) - spec.density(eta - h)) / (2.0 * h);
                let an = spec.density_deriv(eta);
                assert!(
                    (fd - an).abs() <= 1e-6 * (1.0 + an.abs()),
                    "{family:?} density_deriv mismatch at eta={eta}"
                );
            }
        }
    }

    #[test]
    fn symmetry_classification() {
        assert!(LinkSpec::logit().check_symmetry(101, 1e-12));
        assert!(LinkSpec::probit().check_symmetry(101, 1e-9));
        assert!(!LinkSpec::cloglog().check_symmetry(101, 1e-3));
    }

    #[test]
    fn squash_contract() {
        let spec = LinkSpec::logit();
        assert_abs_diff_eq!(spec.squash(0.0), 0.5, epsilon = 1e-15);
        for eta in [-1e6, -50.0, 0.0, 50.0, 1e6] {
            let p = spec.squash(eta);
            assert!((SQUASH_EPS..=1.0 - SQUASH_EPS).contains(&p));
        }
        // equals inverse_link away from the clamp region
        for i in 0..50 {
            let eta = -10.0 + 20.0 * i as f64 / 49.0;
            assert_eq!(spec.squash(eta), spec.inverse_link(eta).unwrap());
        }
    }

    #[test]
    fn separation_cases() {
        let r = diagnose_separation(&[0.1, -0.2], &[0.52, 0.45], 30.0).unwrap();
        assert!(!r.separated);
        assert!(r.offending_indices.is_empty());

        let r = diagnose_separation(&[5.0, 40.0], &[0.9, 1.0], 30.0).unwrap();
        assert!(r.separated);
        assert_eq!(r.offending_indices, vec![1]);
        assert_eq!(r.fitted_prob_extremes.1, 1.0);

        assert!(matches!(
            diagnose_separation(&[0.1], &[0.5, 0.6], 30.0),
            Err(LinkError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn separation_permutation_invariant_boolean() {
        let etas = [1.0, 35.0, -2.0];
        let probs = [0.6, 0.999_999_999, 0.2];
        let a = diagnose_separation(&etas, &probs, 30.0).unwrap();
        let etas_r = [-2.0, 1.0, 35.0];
        let probs_r = [0.2, 0.6, 0.999_999_999];
        let b = diagnose_separation(&etas_r, &probs_r, 30.0).unwrap();
        assert_eq!(a.separated, b.separated);
        assert_eq!(a.max_abs_eta, b.max_abs_eta);
    }

    #[test]
    fn monotone_transform_hook() {
        fn sq(p: f64) -> f64 {
            p * p
        }
        let spec = LinkSpec {
            family: LinkFamily::Logit,
            transform: Some(sq),
        };
        assert_abs_diff_eq!(spec.inverse_link(0.0).unwrap(), 0.25, epsilon = 1e-15);
        assert!(matches!(
            spec.link_eval(0.5),
            Err(LinkError::TransformNotInvertible)
        ));
    }
}
