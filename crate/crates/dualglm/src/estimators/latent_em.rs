//! Latent-variable EM for binary regression.
//!
//! E-step replaces the latent response by its conditional mean given the
//! observed outcome and current coefficients (truncated normal for probit,
//! truncated logistic for logit); M-step is least squares of the imputed
//! latent response on the design matrix.

use nalgebra::DVector;

use crate::dgp::Dataset;
use crate::link::{diagnose_separation, LinkFamily, LinkSpec};

use super::mle::binomial_loglik;
use super::{EstimatorTag, FitError, FitResult, SolverConfig};

/// φ(z)/Φ(z), stable in the far left tail.
fn normal_mills_ratio(z: f64) -> f64 {
    if z < -30.0 {
        let r = -z;
        return r + 1.0 / r;
    }
    let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let cap = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    use statrs::distribution::ContinuousCDF;
    phi / cap.cdf(z)
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Conditional mean of `y* = η + ε` given the observed binary outcome.
fn imputed_latent(family: LinkFamily, eta: f64, y_is_one: bool) -> f64 {
    match family {
        LinkFamily::Probit => {
            if y_is_one {
                eta + normal_mills_ratio(eta)
            } else {
                eta - normal_mills_ratio(-eta)
            }
        }
        LinkFamily::Logit => {
            // truncated standard logistic above/below the threshold; the
            // far-tail limits (±1, an exponential-tail mean) avoid 0/0
            if y_is_one {
                if eta < -35.0 {
                    1.0
                } else {
                    softplus(eta) / sigmoid(eta)
                }
            } else if eta > 35.0 {
                -1.0
            } else {
                -softplus(-eta) / sigmoid(-eta)
            }
        }
        _ => unreachable!("checked by caller"),
    }
}

/// EM fit; probit or logit links only (the truncated-mean E-step has a
/// stable closed form for those latent families).
pub fn fit_latent_em(
    d: &Dataset,
    link: &LinkSpec,
    cfg: &SolverConfig,
) -> Result<FitResult, FitError> {
    if !matches!(link.family, LinkFamily::Probit | LinkFamily::Logit) {
        return Err(FitError::UnsupportedLink(link.family.tag().to_string()));
    }
    if !d.is_binary() {
        return Err(FitError::NonBinaryOutcome);
    }
    if d.n() < d.p() {
        return Err(FitError::InsufficientData { n: d.n(), p: d.p() });
    }
    let n = d.n();
    let p = d.p();
    let xtx = d.x.transpose() * &d.x;
    let chol = xtx.cholesky().ok_or(FitError::SingularDesign)?;

    let mut beta = DVector::zeros(p);
    let mut converged = false;
    let mut iterations = 0;
    let mut norm_history = Vec::new();
    let mut etas = vec![0.0; n];
    for _ in 0..cfg.em_max_iter {
        for (i, eta) in etas.iter_mut().enumerate() {
            *eta = (0..p).map(|j| d.x[(i, j)] * beta[j]).sum();
        }
        let z: Vec<f64> = (0..n)
            .map(|i| imputed_latent(link.family, etas[i], d.y[i] == 1.0))
            .collect();
        let xtz = d.x.transpose() * DVector::from_column_slice(&z);
        let beta_new = chol.solve(&xtz);
        let delta = (&beta_new - &beta).amax();
        beta = beta_new;
        iterations += 1;
        norm_history.push(beta.norm());
        if delta <= cfg.param_tol {
            converged = true;
            break;
        }
    }
    for (i, eta) in etas.iter_mut().enumerate() {
        *eta = (0..p).map(|j| d.x[(i, j)] * beta[j]).sum();
    }
    let probs: Vec<f64> = etas.iter().map(|&e| link.squash(e)).collect();
    let report =
        diagnose_separation(&etas, &probs, cfg.separation_threshold).expect("nonempty fit");
    if report.separated {
        return Err(FitError::SeparationSuspected { report });
    }
    if !converged {
        let growing = norm_history.len() >= 2
            && norm_history.last().unwrap() > &norm_history[norm_history.len() / 2];
        if growing {
            return Err(FitError::SeparationSuspected { report });
        }
    }
    // gradient of the binomial log-likelihood at the EM solution, reported
    // as a diagnostic
    let grad_norm = {
        let mut grad = DVector::zeros(p);
        for i in 0..n {
            let mu = probs[i];
            let f = link.density(etas[i]);
            let u = (d.y[i] - mu) * f / (mu * (1.0 - mu));
            for j in 0..p {
                grad[j] += u * d.x[(i, j)];
            }
        }
        grad.amax()
    };
    Ok(FitResult {
        estimator: EstimatorTag::LatentEm,
        beta: beta.as_slice().to_vec(),
        alpha: None,
        loglik: binomial_loglik(d, link, beta.as_slice()),
        iterations,
        converged,
        grad_norm,
        separation: report,
        dataset_fingerprint: d.fingerprint(),
        link_family: link.family,
        max_calibration_residual: None,
    })
}
