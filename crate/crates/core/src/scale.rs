//! Scale decomposition of the planar screened interaction.
//!
//! A scale function κ(t), strictly decreasing on (-∞, 0] with κ(0) = 1 and
//! κ(t) → ∞ as t → -∞, generates the one-parameter covariance
//! `v(t, x) = (β/2π) g(√κ(t) |x|)` with rate
//! `v̇(s, x) = 2 Ḃ(s) h(√κ(s) |x|)`, where
//! `Ḃ(t) = (β/8π)(-ln κ)'(t)` and `Γ(t) = β (-κ'(t))/κ²(t)`.

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSpec;
use crate::special;
use serde::{Deserialize, Serialize};

/// The scale function family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScaleKind {
    /// κ(t) = e^{-rate·t}, rate > 0. Makes Ḃ constant.
    Exponential { rate: f64 },
    /// κ(t) = (1 - t)^exponent, exponent > 0.
    Power { exponent: f64 },
    /// κ sampled on an increasing time grid ending at t = 0 with κ = 1;
    /// evaluated by monotone cubic (Fritsch-Carlson) interpolation.
    Table { times: Vec<f64>, kappa: Vec<f64> },
}

/// An admissible scale model: a scale-function kind plus the inverse
/// temperature β it feeds.
///
/// Deserialization goes through the constructors so that admissibility is
/// re-validated and the interpolation tangents are rebuilt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleModel {
    kind: ScaleKind,
    beta: f64,
    /// Fritsch-Carlson tangents, precomputed for the table kind.
    #[serde(skip)]
    tangents: Vec<f64>,
}

/// Ḃ(t) and Γ(t) at one scale time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateValues {
    pub t: f64,
    pub b_dot: f64,
    pub gamma: f64,
}

impl ScaleModel {
    pub fn exponential(beta: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::NonAdmissible {
                reason: format!("exponential scale needs rate > 0, got {rate}"),
            });
        }
        Self::validated(ScaleKind::Exponential { rate }, beta, Vec::new())
    }

    pub fn power(beta: f64, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0) {
            return Err(Error::NonAdmissible {
                reason: format!("power scale needs exponent > 0, got {exponent}"),
            });
        }
        Self::validated(ScaleKind::Power { exponent }, beta, Vec::new())
    }

    /// Build a table-backed model. The grid must be strictly increasing, end
    /// at t = 0 with κ = 1, and κ must be strictly decreasing.
    pub fn from_table(beta: f64, times: Vec<f64>, kappa: Vec<f64>) -> Result<Self> {
        if times.len() != kappa.len() || times.len() < 3 {
            return Err(Error::NonAdmissible {
                reason: "table scale needs >= 3 matching samples".into(),
            });
        }
        for w in times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::NonAdmissible {
                    reason: "table times must be strictly increasing".into(),
                });
            }
        }
        for w in kappa.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::NonAdmissible {
                    reason: "kappa must be strictly decreasing in t".into(),
                });
            }
        }
        let last_t = *times.last().unwrap();
        let last_k = *kappa.last().unwrap();
        if last_t != 0.0 || (last_k - 1.0).abs() > 1e-9 {
            return Err(Error::NonAdmissible {
                reason: format!("table must end at t = 0 with kappa = 1 (got t = {last_t}, kappa = {last_k})"),
            });
        }
        let tangents = fritsch_carlson_tangents(&times, &kappa);
        Self::validated(ScaleKind::Table { times, kappa }, beta, tangents)
    }

    fn validated(kind: ScaleKind, beta: f64, tangents: Vec<f64>) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::NonAdmissible {
                reason: format!("beta must be finite and >= 0, got {beta}"),
            });
        }
        Ok(Self { kind, beta, tangents })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kind(&self) -> &ScaleKind {
        &self.kind
    }

    /// A copy of this model at a different inverse temperature.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::validated(self.kind.clone(), beta, self.tangents.clone())
    }

    // Integrator stage points can overshoot an endpoint by rounding noise;
    // clamp within this band, reject beyond it.
    fn clamp_range(&self, t: f64) -> Result<f64> {
        const SLOP: f64 = 1e-9;
        let mut t = t;
        if t > 0.0 {
            if t > SLOP {
                return Err(Error::OutOfRange { t, lo: f64::NEG_INFINITY, hi: 0.0 });
            }
            t = 0.0;
        }
        if let ScaleKind::Table { times, .. } = &self.kind {
            let lo = times[0];
            if t < lo {
                if t < lo - SLOP * lo.abs().max(1.0) {
                    return Err(Error::OutOfRange { t, lo, hi: 0.0 });
                }
                t = lo;
            }
        }
        Ok(t)
    }

    /// κ(t).
    pub fn kappa(&self, t: f64) -> Result<f64> {
        let t = self.clamp_range(t)?;
        Ok(match &self.kind {
            ScaleKind::Exponential { rate } => (-rate * t).exp(),
            ScaleKind::Power { exponent } => (1.0 - t).powf(*exponent),
            ScaleKind::Table { times, kappa } => {
                pchip_eval(times, kappa, &self.tangents, t).0
            }
        })
    }

    /// κ'(t).
    pub fn kappa_prime(&self, t: f64) -> Result<f64> {
        let t = self.clamp_range(t)?;
        Ok(match &self.kind {
            ScaleKind::Exponential { rate } => -rate * (-rate * t).exp(),
            ScaleKind::Power { exponent } => -exponent * (1.0 - t).powf(exponent - 1.0),
            ScaleKind::Table { times, kappa } => {
                pchip_eval(times, kappa, &self.tangents, t).1
            }
        })
    }

    /// Ḃ(t) = (β/8π)(-ln κ)'(t) and Γ(t) = β(-κ')/κ², both >= 0.
    pub fn rates(&self, t: f64) -> Result<RateValues> {
        let kappa = self.kappa(t)?;
        let kp = self.kappa_prime(t)?;
        if !(kappa > 0.0) || kp > 0.0 {
            return Err(Error::NonAdmissible {
                reason: format!("kappa not positive-decreasing at t = {t}"),
            });
        }
        let b_dot = self.beta / (8.0 * std::f64::consts::PI) * (-kp / kappa);
        let gamma = self.beta * (-kp) / (kappa * kappa);
        if !b_dot.is_finite() || !gamma.is_finite() {
            return Err(Error::NonAdmissible {
                reason: format!("rates not finite at t = {t}"),
            });
        }
        Ok(RateValues { t, b_dot, gamma })
    }

    /// Covariance v(t, r) = (β/2π) g(√κ(t) r), r > 0.
    pub fn covariance(&self, t: f64, r: f64, q: &QuadratureSpec) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::InvalidInput {
                reason: format!("covariance needs r > 0, got {r}"),
            });
        }
        let w = self.kappa(t)?.sqrt() * r;
        Ok(self.beta / (2.0 * std::f64::consts::PI) * special::kernel_g(w, q)?)
    }

    /// Covariance rate v̇(s, r) = 2 Ḃ(s) h(√κ(s) r), r >= 0.
    pub fn covariance_rate(&self, s: f64, r: f64, q: &QuadratureSpec) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::InvalidInput {
                reason: format!("covariance_rate needs r >= 0, got {r}"),
            });
        }
        let rates = self.rates(s)?;
        let w = self.kappa(s)?.sqrt() * r;
        Ok(2.0 * rates.b_dot * special::kernel_h(w, q)?)
    }
}

/// Constant rates Ḃ ≡ b, Γ ≡ g — the analytic-oracle regime (Cayley trees
/// for b = 0) and the CLI override for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantRates {
    pub b_dot: f64,
    pub gamma: f64,
}

/// Anything that yields (Ḃ, Γ) along the scale axis.
pub trait RateSource {
    fn rates_at(&self, t: f64) -> (f64, f64);
}

impl RateSource for ScaleModel {
    fn rates_at(&self, t: f64) -> (f64, f64) {
        // Callers validate the range before integrating; interior evaluation
        // cannot fail for an admissible model.
        let r = self.rates(t).expect("rates inside validated range");
        (r.b_dot, r.gamma)
    }
}

impl RateSource for ConstantRates {
    fn rates_at(&self, _t: f64) -> (f64, f64) {
        (self.b_dot, self.gamma)
    }
}

/// Fritsch-Carlson monotone tangents for a decreasing table.
fn fritsch_carlson_tangents(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut d = vec![0.0; n - 1];
    for i in 0..n - 1 {
        d[i] = (y[i + 1] - y[i]) / (t[i + 1] - t[i]);
    }
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        if d[i - 1] * d[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            // Weighted harmonic mean keeps the interpolant monotone.
            let w1 = 2.0 * (t[i + 1] - t[i]) + (t[i] - t[i - 1]);
            let w2 = (t[i + 1] - t[i]) + 2.0 * (t[i] - t[i - 1]);
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m
}

/// Evaluate the cubic Hermite interpolant and its derivative.
fn pchip_eval(t: &[f64], y: &[f64], m: &[f64], x: f64) -> (f64, f64) {
    let n = t.len();
    let i = match t.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(0) => 0,
        Err(i) => (i - 1).min(n - 2),
    };
    let h = t[i + 1] - t[i];
    let s = (x - t[i]) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let value = h00 * y[i] + h10 * h * m[i] + h01 * y[i + 1] + h11 * h * m[i + 1];
    let d00 = (6.0 * s2 - 6.0 * s) / h;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = (-6.0 * s2 + 6.0 * s) / h;
    let d11 = 3.0 * s2 - 2.0 * s;
    let deriv = d00 * y[i] + d10 * m[i] + d01 * y[i + 1] + d11 * m[i + 1];
    (value, deriv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn exponential_rates_by_hand() {
        // κ = e^{-2t}, β = 4π: Ḃ = 1, Γ = 8π e^{2t}.
        let m = ScaleModel::exponential(4.0 * PI, 2.0).unwrap();
        for &t in &[-3.0, -1.0, 0.0] {
            let r = m.rates(t).unwrap();
            assert!((r.b_dot - 1.0).abs() < 1e-14);
            assert!((r.gamma - 8.0 * PI * (2.0 * t).exp()).abs() < 1e-10 * r.gamma.max(1.0));
        }
    }

    #[test]
    fn zero_beta_zero_rates() {
        let m = ScaleModel::exponential(0.0, 2.0).unwrap();
        let r = m.rates(-1.0).unwrap();
        assert_eq!((r.b_dot, r.gamma), (0.0, 0.0));
    }

    #[test]
    fn rate_ratio_identity() {
        // Ḃ/Γ = κ/(8π) for every κ.
        let models = [
            ScaleModel::exponential(2.0 * PI, 2.0).unwrap(),
            ScaleModel::exponential(5.0 * PI, 0.7).unwrap(),
            ScaleModel::power(3.0 * PI, 1.5).unwrap(),
        ];
        for m in &models {
            for &t in &[-4.0, -2.0, -0.5, 0.0] {
                let r = m.rates(t).unwrap();
                let kappa = m.kappa(t).unwrap();
                assert!((r.b_dot / r.gamma - kappa / (8.0 * PI)).abs() < 1e-12 * kappa);
            }
        }
    }

    #[test]
    fn covariance_composes_kernel_g() {
        let q = QuadratureSpec::default();
        let m = ScaleModel::exponential(2.0 * PI, 2.0).unwrap();
        // κ(0) = 1, β = 2π: v(0, 1) = g(1).
        let v = m.covariance(0.0, 1.0, &q).unwrap();
        assert!((v - special::kernel_g(1.0, &q).unwrap()).abs() < 1e-12);
        // Decreasing in r, increasing in t.
        assert!(m.covariance(0.0, 2.0, &q).unwrap() < v);
        assert!(m.covariance(-1.0, 1.0, &q).unwrap() < v);
    }

    #[test]
    fn covariance_rate_at_zero_distance() {
        let q = QuadratureSpec::default();
        let m = ScaleModel::exponential(3.0 * PI, 2.0).unwrap();
        let r = m.rates(-0.7).unwrap();
        let v = m.covariance_rate(-0.7, 0.0, &q).unwrap();
        assert!((v - 2.0 * r.b_dot).abs() < 1e-13);
    }

    #[test]
    fn covariance_rate_norm_identity() {
        // 2π ∫_0^∞ v̇(s, r) r dr = Γ(s); substitute w = √κ r and use the
        // h-moment ∫ w h = 2.
        let q = QuadratureSpec::new(1e-11, 1e-11, 600).unwrap();
        for m in [
            ScaleModel::exponential(2.5 * PI, 2.0).unwrap(),
            ScaleModel::power(2.5 * PI, 2.0).unwrap(),
        ] {
            for &s in &[-1.5_f64, -0.25] {
                let kappa = m.kappa(s).unwrap();
                let inner = q.tightened(1e-2);
                let integral = crate::quadrature::integrate_decaying(
                    |r| m.covariance_rate(s, r, &inner).unwrap() * r,
                    50.0 / kappa.sqrt(),
                    &q,
                )
                .unwrap();
                let gamma = m.rates(s).unwrap().gamma;
                assert!(
                    (2.0 * PI * integral - gamma).abs() < 1e-6 * gamma,
                    "norm identity off at s = {s}: {} vs {gamma}",
                    2.0 * PI * integral
                );
            }
        }
    }

    #[test]
    fn table_kind_tracks_analytic_model() {
        let beta = 2.0 * PI;
        let exact = ScaleModel::exponential(beta, 2.0).unwrap();
        let times: Vec<f64> = (0..=400).map(|i| -4.0 + 0.01 * i as f64).collect();
        let kappa: Vec<f64> = times.iter().map(|&t| (-2.0 * t).exp()).collect();
        let table = ScaleModel::from_table(beta, times, kappa).unwrap();
        for &t in &[-3.7, -2.0, -1.234, -0.05] {
            let a = exact.rates(t).unwrap();
            let b = table.rates(t).unwrap();
            assert!((a.b_dot - b.b_dot).abs() < 1e-3 * a.b_dot.max(1e-9), "t = {t}");
            assert!((a.gamma - b.gamma).abs() < 1e-3 * a.gamma.max(1e-9), "t = {t}");
            assert!(b.b_dot >= 0.0 && b.gamma >= 0.0);
        }
    }

    #[test]
    fn table_rejections() {
        // Increasing kappa.
        let r = ScaleModel::from_table(1.0, vec![-2.0, -1.0, 0.0], vec![1.0, 2.0, 3.0]);
        assert!(matches!(r, Err(Error::NonAdmissible { .. })));
        // Not ending at (0, 1).
        let r = ScaleModel::from_table(1.0, vec![-2.0, -1.0, -0.5], vec![4.0, 2.0, 1.5]);
        assert!(matches!(r, Err(Error::NonAdmissible { .. })));
    }

    #[test]
    fn out_of_range() {
        let times: Vec<f64> = (0..=20).map(|i| -2.0 + 0.1 * i as f64).collect();
        let kappa: Vec<f64> = times.iter().map(|&t| (-2.0 * t).exp()).collect();
        let m = ScaleModel::from_table(1.0, times, kappa).unwrap();
        assert!(matches!(m.kappa(-3.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(m.kappa(0.5), Err(Error::OutOfRange { .. })));
        let e = ScaleModel::exponential(1.0, 2.0).unwrap();
        assert!(matches!(e.rates(0.5), Err(Error::OutOfRange { .. })));
    }
}
