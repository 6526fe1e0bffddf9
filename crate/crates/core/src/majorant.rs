//! Closed-form majorants and convergence radii.
//!
//! The density majorant solves a quasi-linear first-order PDE by
//! characteristics; its envelope of characteristic intersections sits at the
//! Lambert branch point, so every radius here is `1/(e τ)` for the
//! appropriate accumulated interaction τ. The k-regularized variant
//! `τ_k = ∫ exp{((k+1)/k) ∫ Ḃ} Γ` has the scale-independent closed form
//! `(β β_k/(β_k - β)) (1/κ(t) - (1/κ(t0)) (κ(t0)/κ(t))^{β/β_k})` with
//! threshold `β_k = 8π k/(k+1)`.

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureSpec};
use crate::scale::{RateSource, ScaleModel};
use crate::special;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

/// Short-distance cutoff: finite, or removed (t0 → -∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cutoff {
    Finite(f64),
    MinusInfinity,
}

impl Cutoff {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Cutoff::Finite(t) => Some(*t),
            Cutoff::MinusInfinity => None,
        }
    }
}

/// Everything a radius/flow computation needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorantParams {
    pub beta: f64,
    pub t0: Cutoff,
    /// Fixed upper scale time (0 unless overridden).
    pub t1: f64,
    /// Regularization order; k = 0 means unregularized.
    pub k: u32,
}

impl MajorantParams {
    pub fn new(beta: f64, t0: Cutoff, k: u32) -> Result<Self> {
        let p = Self { beta, t0, t1: 0.0, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) {
            return Err(Error::InvalidInput {
                reason: format!("beta must be >= 0, got {}", self.beta),
            });
        }
        if let Cutoff::Finite(t0) = self.t0 {
            if !(t0 < self.t1) {
                return Err(Error::InvalidInput {
                    reason: format!("t0 = {t0} must lie below t1 = {}", self.t1),
                });
            }
        }
        Ok(())
    }
}

/// Radius of convergence report for one (β, k, t0) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub beta: f64,
    pub k: u32,
    /// Finite cutoff, or None for t0 = -∞.
    pub t0: Option<f64>,
    pub tau: f64,
    pub radius: f64,
    /// β_k.
    pub threshold: f64,
    /// β < β_k: the radius stays positive as the cutoff is removed.
    pub converged: bool,
}

/// The two branch integrals entering the unregularized τ, and their minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauBranches {
    /// ∫ Γ(s) exp{2 ∫_s^t Ḃ} ds.
    pub flow_weighted: f64,
    /// exp{∫ Ḃ} ∫ Γ.
    pub uniform_weighted: f64,
    /// 0 if the first branch attains the infimum, 1 otherwise.
    pub argmin: u8,
}

impl TauBranches {
    pub fn tau(&self) -> f64 {
        self.flow_weighted.min(self.uniform_weighted)
    }
}

/// Threshold β_k = 8π k/(k+1), k >= 1.
pub fn threshold_beta(k: u32) -> f64 {
    let kf = k as f64;
    8.0 * PI * kf / (kf + 1.0)
}

fn check_beta_consistency(model: &ScaleModel, beta: f64) -> Result<()> {
    if (model.beta() - beta).abs() > 1e-12 * beta.abs().max(1.0) {
        return Err(Error::InvalidInput {
            reason: format!(
                "scale model carries beta = {} but params say {}",
                model.beta(),
                beta
            ),
        });
    }
    Ok(())
}

/// Unregularized τ of the basic convergence statement:
/// the infimum of the two branch integrals, each by adaptive quadrature
/// against arbitrary rates.
pub fn tau_theorem1_branches<R: RateSource>(
    rates: &R,
    t0: Cutoff,
    t: f64,
    q: &QuadratureSpec,
) -> Result<TauBranches> {
    match t0 {
        Cutoff::Finite(t0) => {
            if !(t0 < t) {
                if t0 == t {
                    return Ok(TauBranches {
                        flow_weighted: 0.0,
                        uniform_weighted: 0.0,
                        argmin: 0,
                    });
                }
                return Err(Error::InvalidInput {
                    reason: format!("t0 = {t0} must be <= t = {t}"),
                });
            }
            let inner = q.tightened(1e-2);
            let flow = quadrature::integrate(
                |s| {
                    let (_, gamma) = rates.rates_at(s);
                    let bsum = quadrature::integrate(|u| rates.rates_at(u).0, s, t, &inner)
                        .expect("inner b-dot quadrature");
                    gamma * (2.0 * bsum).exp()
                },
                t0,
                t,
                q,
            )?;
            let b_total = quadrature::integrate(|u| rates.rates_at(u).0, t0, t, q)?;
            let gamma_total = quadrature::integrate(|u| rates.rates_at(u).1, t0, t, q)?;
            let uniform = b_total.exp() * gamma_total;
            Ok(TauBranches {
                flow_weighted: flow,
                uniform_weighted: uniform,
                argmin: u8::from(uniform < flow),
            })
        }
        Cutoff::MinusInfinity => Err(Error::DivergentIntegral {
            what: "tau with t0 = -inf needs a scale model; use tau_theorem1 on a ScaleModel".into(),
        }),
    }
}

/// Unregularized τ for a scale model. Supports the removed cutoff: the
/// flow-weighted branch has the scale-independent limit `4πβ/((4π-β) κ(t))`
/// for β < 4π, while the uniform branch diverges for β > 0.
pub fn tau_theorem1(model: &ScaleModel, t0: Cutoff, t: f64, q: &QuadratureSpec) -> Result<TauBranches> {
    match t0 {
        Cutoff::Finite(_) => tau_theorem1_branches(model, t0, t, q),
        Cutoff::MinusInfinity => {
            let beta = model.beta();
            if beta == 0.0 {
                return Ok(TauBranches {
                    flow_weighted: 0.0,
                    uniform_weighted: 0.0,
                    argmin: 0,
                });
            }
            let beta1 = 4.0 * PI;
            if beta >= beta1 {
                return Err(Error::DivergentIntegral {
                    what: format!(
                        "both branches of tau diverge as t0 -> -inf for beta = {beta:.6e} >= 4*pi"
                    ),
                });
            }
            let kappa_t = model.kappa(t)?;
            let flow = beta1 * beta / ((beta1 - beta) * kappa_t);
            Ok(TauBranches {
                flow_weighted: flow,
                uniform_weighted: f64::INFINITY,
                argmin: 0,
            })
        }
    }
}

/// k-regularized τ_k by the scale-independent closed form (κ endpoints only).
///
/// With the cutoff removed and β < β_k this is `β β_k/(β_k - β) / κ(t1)`;
/// β >= β_k with the cutoff removed diverges.
pub fn tau_k(model: &ScaleModel, params: &MajorantParams) -> Result<f64> {
    params.validate()?;
    check_beta_consistency(model, params.beta)?;
    if params.k < 1 {
        return Err(Error::InvalidInput {
            reason: "tau_k needs k >= 1".into(),
        });
    }
    let beta = params.beta;
    let beta_k = threshold_beta(params.k);
    let kappa_t = model.kappa(params.t1)?;
    match params.t0 {
        Cutoff::MinusInfinity => {
            if beta >= beta_k {
                return Err(Error::ThresholdDivergence { beta, threshold: beta_k });
            }
            Ok(beta * beta_k / ((beta_k - beta) * kappa_t))
        }
        Cutoff::Finite(t0) => {
            let kappa_t0 = model.kappa(t0)?;
            let log_ratio = (kappa_t0 / kappa_t).ln();
            // Relative threshold: the closed form loses all digits only when
            // β is within rounding of β_k, where the logarithmic
            // antiderivative is exact.
            if (beta - beta_k).abs() <= 1e-9 * beta_k {
                return Ok(beta / kappa_t * log_ratio);
            }
            // Stable form: (β β_k/(β_k-β)) (1/κ(t)) (-expm1((β/β_k - 1) L)).
            let expo = (beta / beta_k - 1.0) * log_ratio;
            Ok(beta * beta_k / ((beta_k - beta) * kappa_t) * (-expo.exp_m1()))
        }
    }
}

/// τ_k by adaptive quadrature of `∫ exp{((k+1)/k)∫_s^t Ḃ} Γ(s) ds`;
/// cross-checks the closed form and serves generic rate sources.
pub fn tau_k_quadrature<R: RateSource>(
    rates: &R,
    t0: f64,
    t1: f64,
    k: u32,
    q: &QuadratureSpec,
) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidInput {
            reason: "tau_k needs k >= 1".into(),
        });
    }
    if t0 == t1 {
        return Ok(0.0);
    }
    let factor = (k as f64 + 1.0) / k as f64;
    let inner = q.tightened(1e-2);
    quadrature::integrate(
        |s| {
            let (_, gamma) = rates.rates_at(s);
            let bsum = quadrature::integrate(|u| rates.rates_at(u).0, s, t1, &inner)
                .expect("inner b-dot quadrature");
            gamma * (factor * bsum).exp()
        },
        t0,
        t1,
        q,
    )
}

/// Radius report at one (β, k, t0) cell: radius = 1/(e τ_k); with the cutoff
/// removed and β < β_k this equals (β_k - β)/(β_k β e).
pub fn radius_report(model: &ScaleModel, params: &MajorantParams) -> Result<RadiusReport> {
    let beta_k = threshold_beta(params.k);
    let converged = params.beta < beta_k;
    match tau_k(model, params) {
        Ok(tau) => {
            let radius = if tau > 0.0 { 1.0 / (E * tau) } else { f64::INFINITY };
            Ok(RadiusReport {
                beta: params.beta,
                k: params.k,
                t0: params.t0.finite(),
                tau,
                radius,
                threshold: beta_k,
                converged,
            })
        }
        Err(Error::ThresholdDivergence { .. }) => Ok(RadiusReport {
            beta: params.beta,
            k: params.k,
            t0: params.t0.finite(),
            tau: f64::INFINITY,
            radius: 0.0,
            threshold: beta_k,
            converged: false,
        }),
        Err(e) => Err(e),
    }
}

fn envelope_guard(z: f64, tau: f64) -> Result<f64> {
    let x = -z * tau;
    match special::lambert_w_principal(x) {
        Ok(w) => Ok(w),
        Err(Error::BranchPointViolation { .. }) => {
            Err(Error::EnvelopeCrossed { ez_tau: E * z * tau })
        }
        Err(e) => Err(e),
    }
}

/// Pressure majorant Φ(z; τ) = (-1/τ)(W(-zτ) + ½ W²(-zτ)), e z τ <= 1.
pub fn phi_majorant(z: f64, tau: f64) -> Result<f64> {
    if z < 0.0 || !(tau > 0.0) {
        return Err(Error::InvalidInput {
            reason: format!("phi_majorant needs z >= 0 and tau > 0 (got z = {z}, tau = {tau})"),
        });
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    let w = envelope_guard(z, tau)?;
    Ok(-(w + 0.5 * w * w) / tau)
}

/// Density majorant Θ(z; τ) = -W(-zτ)/(zτ) >= 1; z = 0 returns the limit 1.
pub fn theta_majorant(z: f64, tau: f64) -> Result<f64> {
    if z < 0.0 || !(tau > 0.0) {
        return Err(Error::InvalidInput {
            reason: format!("theta_majorant needs z >= 0 and tau > 0 (got z = {z}, tau = {tau})"),
        });
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    let w = envelope_guard(z, tau)?;
    Ok(-w / (z * tau))
}

/// Invert the characteristic z = z0 e^{-z0 τ}: z0 = (-1/τ) W(-zτ) >= z.
pub fn solve_characteristic(z: f64, tau: f64) -> Result<f64> {
    if z < 0.0 || tau < 0.0 {
        return Err(Error::InvalidInput {
            reason: format!("solve_characteristic needs z >= 0, tau >= 0 (got {z}, {tau})"),
        });
    }
    if tau == 0.0 || z == 0.0 {
        return Ok(z);
    }
    let w = envelope_guard(z, tau)?;
    Ok(-w / tau)
}

/// The classical convergence condition `e β |z| e^{βB} ||θ|| < 1` (strict).
pub fn brydges_federbush_condition(beta: f64, z: f64, b: f64, potential_norm: f64) -> bool {
    E * beta * z.abs() * (beta * b).exp() * potential_norm < 1.0
}
