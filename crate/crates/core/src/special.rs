//! Scalar special functions: the principal-branch Lambert W on [-1/e, 0] and
//! the planar screened-interaction kernels g and h.
//!
//! `g(w) = ∫_0^∞ exp(-w √(k²+1)) / √(k²+1) dk` and
//! `h(w) = w ∫_0^∞ exp(-w √(k²+1)) dk`, both evaluated by adaptive
//! quadrature of the defining integrands with certified truncation of the
//! exponential tail. `h` has the equivalent form
//! `∫_w^∞ e^{-ζ} ζ / √(ζ² - w²) dζ`, exposed separately for cross-checks.

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureSpec};
use serde::{Deserialize, Serialize};

/// Default slack past the branch point -1/e that is still treated as rounding.
pub const BRANCH_SLACK: f64 = 1e-12;

/// A kernel sample: rescaled distance `w = √κ |x|` and the kernel value there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub w: f64,
    pub value: f64,
}

/// Principal-branch Lambert W on [-1/e, 0] with the default branch slack.
///
/// Returns W with `W e^W = x` to 1e-12 absolute; W ∈ [-1, 0].
pub fn lambert_w_principal(x: f64) -> Result<f64> {
    lambert_w_principal_with_slack(x, BRANCH_SLACK)
}

/// Same as [`lambert_w_principal`] with a caller-chosen branch slack.
///
/// Arguments within `eps_branch` below -1/e are clamped to the branch point
/// (rounding noise); anything further below signals that the characteristic
/// envelope has been crossed.
pub fn lambert_w_principal_with_slack(x: f64, eps_branch: f64) -> Result<f64> {
    let min_x = -(-1.0_f64).exp(); // -1/e
    if x > 0.0 {
        return Err(Error::InvalidInput {
            reason: format!("lambert_w_principal expects x <= 0, got {x}"),
        });
    }
    if x < min_x {
        let excess = min_x - x;
        if excess > eps_branch {
            return Err(Error::BranchPointViolation { x, excess });
        }
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    // Seed: tree-function series near 0, square-root expansion near -1/e.
    let mut w = if x > -0.25 {
        let mut s = 0.0;
        let mut fact = 1.0;
        for n in 1..=12 {
            let nf = n as f64;
            fact *= nf;
            s += nf.powi(n as i32 - 1) * x.powi(n as i32) * (-1.0_f64).powi(n as i32 - 1) / fact;
        }
        s
    } else {
        let p = (2.0 * (1.0 + std::f64::consts::E * x)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 * p.powi(3) / 72.0 - 43.0 * p.powi(4) / 540.0
            + 769.0 * p.powi(5) / 17280.0
    };
    w = w.clamp(-1.0, 0.0);

    // Halley iteration on f(W) = W e^W - x.
    for _ in 0..50 {
        let ew = w.exp();
        let f = w * ew - x;
        let fp = ew * (1.0 + w);
        let denom = fp - f * (2.0 + w) / (2.0 * (1.0 + w).max(1e-300));
        if denom == 0.0 {
            break;
        }
        let step = f / denom;
        w -= step;
        w = w.clamp(-1.0, 0.0);
        if step.abs() < 1e-16 * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

// Truncation point K for ∫_0^∞ e^{-w√(k²+1)} φ(k) dk with φ of at most
// linear growth: the tail beyond K is below e^{-wK} (K/w + 2/w²), which we
// push under `tol`.
fn tail_cutoff(w: f64, tol: f64) -> f64 {
    let mut k = (1.0 / w).max(1.0);
    for _ in 0..200 {
        let bound = (-w * k).exp() * (k / w + 2.0 / (w * w));
        if bound < tol {
            return k;
        }
        k *= 1.5;
    }
    k
}

/// Kernel `g(w)` for `w > 0` (diverges logarithmically at 0).
pub fn kernel_g(w: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::InvalidInput {
            reason: format!("kernel_g needs w > 0 (got {w}); it diverges at 0"),
        });
    }
    let cutoff = tail_cutoff(w, 0.1 * q.abs_tol);
    quadrature::integrate_decaying(
        |k| (-w * (k * k + 1.0).sqrt()).exp() / (k * k + 1.0).sqrt(),
        cutoff,
        q,
    )
}

/// Kernel `h(w) = w ∫_0^∞ e^{-w√(k²+1)} dk` for `w >= 0`; `h(0) = 1` exactly.
pub fn kernel_h(w: f64, q: &QuadratureSpec) -> Result<f64> {
    if w < 0.0 {
        return Err(Error::InvalidInput {
            reason: format!("kernel_h needs w >= 0, got {w}"),
        });
    }
    // Exact limit; removes the removable 0/0 of the tail form.
    if w == 0.0 {
        return Ok(1.0);
    }
    let cutoff = tail_cutoff(w, 0.1 * q.abs_tol / w.max(1.0));
    let integral = quadrature::integrate_decaying(
        |k| (-w * (k * k + 1.0).sqrt()).exp(),
        cutoff,
        q,
    )?;
    Ok(w * integral)
}

/// The tail form `h(w) = ∫_w^∞ e^{-ζ} ζ / √(ζ² - w²) dζ`, regularized by the
/// substitution ζ = w + s² which removes the inverse-square-root endpoint.
pub fn kernel_h_from_tail(w: f64, q: &QuadratureSpec) -> Result<f64> {
    if w < 0.0 {
        return Err(Error::InvalidInput {
            reason: format!("kernel_h_from_tail needs w >= 0, got {w}"),
        });
    }
    if w == 0.0 {
        return Ok(1.0);
    }
    // ζ = w + s²: integrand 2 e^{-(w+s²)} (w+s²) / √(s² + 2w) ds on [0, ∞).
    let s_max = (40.0 + w).sqrt() + 2.0;
    quadrature::integrate_decaying(
        |s| {
            let z = w + s * s;
            2.0 * (-z).exp() * z / (s * s + 2.0 * w).sqrt()
        },
        s_max,
        q,
    )
}

/// Derivative `h'(w)` for `w > 0` by differentiating the defining integrand
/// under the integral: `h' = ∫ e^{-w√(k²+1)} dk - w ∫ √(k²+1) e^{-w√(k²+1)} dk`.
///
/// Always negative (h is strictly decreasing).
pub fn kernel_h_derivative(w: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::InvalidInput {
            reason: format!("kernel_h_derivative needs w > 0, got {w}"),
        });
    }
    let cutoff = tail_cutoff(w, 0.05 * q.abs_tol / w.max(1.0));
    let plain = quadrature::integrate_decaying(
        |k| (-w * (k * k + 1.0).sqrt()).exp(),
        cutoff,
        q,
    )?;
    let weighted = quadrature::integrate_decaying(
        |k| {
            let r = (k * k + 1.0).sqrt();
            r * (-w * r).exp()
        },
        cutoff,
        q,
    )?;
    Ok(plain - w * weighted)
}

/// Cubic-Hermite table of `h` on quadratically clustered nodes, for the
/// integrands that evaluate `h` millions of times (collapse diagnostics).
///
/// Node derivatives come from the kernel identity `h'(w) = -w g(w)`
/// (differentiate the defining integrands; verified against finite
/// differences in the unit tests). Quadratic clustering keeps the Hermite
/// error near 1e-11 uniformly, including the logarithmic region near 0.
pub(crate) struct KernelHTable {
    w_max: f64,
    nodes: usize,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl KernelHTable {
    fn build() -> Self {
        let w_max = 60.0;
        let nodes = 2000usize;
        let q = QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 800,
        };
        let mut values = Vec::with_capacity(nodes + 1);
        let mut derivs = Vec::with_capacity(nodes + 1);
        values.push(1.0);
        derivs.push(0.0);
        for i in 1..=nodes {
            let x = i as f64 / nodes as f64;
            let w = x * x * w_max;
            values.push(kernel_h(w, &q).expect("table h quadrature"));
            derivs.push(-w * kernel_g(w, &q).expect("table g quadrature"));
        }
        Self {
            w_max,
            nodes,
            values,
            derivs,
        }
    }

    /// Interpolated h(w); exact small-w expansion below the first node,
    /// 0 beyond w_max (where h < 1e-24).
    pub(crate) fn eval(&self, w: f64) -> f64 {
        debug_assert!(w >= 0.0);
        if w >= self.w_max {
            return 0.0;
        }
        let x = (w / self.w_max).sqrt() * self.nodes as f64;
        let i = (x as usize).min(self.nodes - 1);
        if i == 0 {
            let w1 = self.w_max / (self.nodes as f64 * self.nodes as f64);
            if w < 1e-3 * w1 {
                // h(w) = 1 + (w²/2)(ln(w/2) + γ - 1/2) + O(w⁴ ln w)
                const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
                if w == 0.0 {
                    return 1.0;
                }
                return 1.0 + 0.5 * w * w * ((0.5 * w).ln() + EULER_GAMMA - 0.5);
            }
        }
        let n2 = (self.nodes * self.nodes) as f64;
        let wl = (i * i) as f64 / n2 * self.w_max;
        let wr = ((i + 1) * (i + 1)) as f64 / n2 * self.w_max;
        let hseg = wr - wl;
        let s = (w - wl) / hseg;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.values[i]
            + (s3 - 2.0 * s2 + s) * hseg * self.derivs[i]
            + (-2.0 * s3 + 3.0 * s2) * self.values[i + 1]
            + (s3 - s2) * hseg * self.derivs[i + 1]
    }
}

/// The process-wide h table, built once on first use.
pub(crate) fn cached_kernel_h() -> &'static KernelHTable {
    use std::sync::OnceLock;
    static TABLE: OnceLock<KernelHTable> = OnceLock::new();
    TABLE.get_or_init(KernelHTable::build)
}

/// Cumulative `G(y) = ∫_1^y h(y')/y' dy'` on a logarithmic grid.
///
/// Any integral `∫ (-κ'/κ)(τ) h(√(κ(τ)/κ(s)) w) dτ` collapses to
/// `2 [G(w) - G(√(κ(t)/κ(s)) w)]` by the substitution y = √(κ(τ)/κ(s)) w,
/// independently of the scale function; this table turns the innermost
/// collapse quadrature into two lookups.
pub(crate) struct KernelHLogIntegralTable {
    u_min: f64,
    u_max: f64,
    step: f64,
    /// G at the grid points u_i = u_min + i·step (u = ln y).
    cumulative: Vec<f64>,
    /// h(e^{u_i}) — the derivative dG/du, for Hermite interpolation.
    slope: Vec<f64>,
}

impl KernelHLogIntegralTable {
    fn build() -> Self {
        let u_min = (1e-12_f64).ln();
        let u_max = (60.0_f64).ln();
        // Even panel count for composite Simpson.
        let panels = 8192usize;
        let step = (u_max - u_min) / panels as f64;
        let q = QuadratureSpec {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_subdivisions: 800,
        };
        let slope: Vec<f64> = (0..=panels)
            .map(|i| {
                let y = (u_min + step * i as f64).exp();
                kernel_h(y, &q).expect("table h quadrature")
            })
            .collect();
        // Composite Simpson pairs, anchored so that G(ln 1) = 0 afterwards.
        let mut cumulative = vec![0.0; panels + 1];
        for i in (2..=panels).step_by(2) {
            cumulative[i] =
                cumulative[i - 2] + step / 3.0 * (slope[i - 2] + 4.0 * slope[i - 1] + slope[i]);
            // Odd point by Simpson 3/8-free half rule (cubic Hermite of the
            // same data keeps 4th-order accuracy).
            cumulative[i - 1] = cumulative[i - 2]
                + step / 12.0 * (5.0 * slope[i - 2] + 8.0 * slope[i - 1] - slope[i]);
        }
        let anchor = {
            let u = -u_min / step;
            let i = u as usize;
            let frac = u - i as f64;
            cumulative[i] * (1.0 - frac) + cumulative[i + 1] * frac
        };
        for v in cumulative.iter_mut() {
            *v -= anchor;
        }
        Self {
            u_min,
            u_max,
            step,
            cumulative,
            slope,
        }
    }

    /// G(y); below the grid h ≡ 1 extends analytically, above it h ≡ 0.
    pub(crate) fn eval(&self, y: f64) -> f64 {
        debug_assert!(y > 0.0);
        let u = y.ln();
        if u <= self.u_min {
            return self.cumulative[0] + (u - self.u_min);
        }
        if u >= self.u_max {
            return *self.cumulative.last().unwrap();
        }
        let x = (u - self.u_min) / self.step;
        let i = (x as usize).min(self.cumulative.len() - 2);
        let s = x - i as f64;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.cumulative[i]
            + (s3 - 2.0 * s2 + s) * self.step * self.slope[i]
            + (-2.0 * s3 + 3.0 * s2) * self.cumulative[i + 1]
            + (s3 - s2) * self.step * self.slope[i + 1]
    }
}

/// The process-wide G table, built once on first use.
pub(crate) fn cached_kernel_h_log_integral() -> &'static KernelHLogIntegralTable {
    use std::sync::OnceLock;
    static TABLE: OnceLock<KernelHLogIntegralTable> = OnceLock::new();
    TABLE.get_or_init(KernelHLogIntegralTable::build)
}

/// Sample `h` on a grid of rescaled distances.
pub fn sample_kernel_h(ws: &[f64], q: &QuadratureSpec) -> Result<Vec<KernelValue>> {
    ws.iter()
        .map(|&w| Ok(KernelValue { w, value: kernel_h(w, q)? }))
        .collect()
}

/// Moment `∫_0^∞ w g(w) dw`, truncated where the integrand tail (≤ c e^{-w})
/// is below tolerance. Equals 1.
pub fn kernel_g_moment(q: &QuadratureSpec) -> Result<f64> {
    // Below w = 1e-4 the integrand w·g is bounded by w(1 - ln(w/2)), so the
    // omitted head is under 6e-9; the tail beyond 45 is under 1e-17.
    let head = 1e-4;
    let inner = q.tightened(1e-2);
    let breaks = vec![head, 0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 30.0, 45.0];
    let f = |w: f64| w * kernel_g(w, &inner).expect("inner g quadrature");
    let spec = QuadratureSpec {
        max_subdivisions: q.max_subdivisions * 2,
        ..*q
    };
    quadrature::integrate_segments(&f, &breaks, &spec)
}

/// Moment `∫_0^∞ w h(w) dw`. Equals 2.
pub fn kernel_h_moment(q: &QuadratureSpec) -> Result<f64> {
    let inner = q.tightened(1e-2);
    let breaks = vec![0.0, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 30.0, 45.0];
    let f = |w: f64| w * kernel_h(w, &inner).expect("inner h quadrature");
    let spec = QuadratureSpec {
        max_subdivisions: q.max_subdivisions * 2,
        ..*q
    };
    quadrature::integrate_segments(&f, &breaks, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    // Scalar Newton oracle, independent of the Halley path.
    fn newton_w(x: f64) -> f64 {
        let mut w = if x < -0.3 { -0.5 } else { x };
        for _ in 0..200 {
            let f = w * w.exp() - x;
            let fp = (1.0 + w) * w.exp();
            let step = f / fp;
            w -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        w
    }

    #[test]
    fn lambert_examples() {
        assert_eq!(lambert_w_principal(0.0).unwrap(), 0.0);
        let m1 = lambert_w_principal(-(-1.0_f64).exp()).unwrap();
        assert_eq!(m1, -1.0);
        let w = lambert_w_principal(-0.2).unwrap();
        assert!((w - newton_w(-0.2)).abs() < 1e-13);
        assert!((w + 0.2591711).abs() < 1e-7);
    }

    #[test]
    fn lambert_branch_violation() {
        let x = -(-1.0_f64).exp() - 1e-6;
        assert!(matches!(
            lambert_w_principal(x),
            Err(Error::BranchPointViolation { .. })
        ));
        // Within slack: clamped.
        let x = -(-1.0_f64).exp() - 1e-13;
        assert_eq!(lambert_w_principal(x).unwrap(), -1.0);
    }

    #[test]
    fn lambert_residual_on_grid() {
        let min_x = -(-1.0_f64).exp();
        for i in 0..=2000 {
            let x = min_x * (i as f64) / 2000.0;
            let w = lambert_w_principal(x).unwrap();
            assert!(
                (w * w.exp() - x).abs() <= 1e-12,
                "residual too large at x = {x}"
            );
            assert!((-1.0..=0.0).contains(&w));
        }
    }

    #[test]
    fn lambert_tree_series() {
        // -W(-x) = Σ n^{n-1} x^n / n! for small x.
        for &x in &[0.01_f64, 0.03, 0.05] {
            let mut s = 0.0;
            let mut fact = 1.0;
            for n in 1..=15 {
                let nf = n as f64;
                fact *= nf;
                s += nf.powi(n as i32 - 1) * x.powi(n as i32) / fact;
            }
            let w = lambert_w_principal(-x).unwrap();
            assert!((-w - s).abs() <= 1e-10, "x = {x}");
        }
    }

    #[test]
    fn kernel_g_at_one() {
        // 0.4210244 from the integrand quadrature; cross-checked against the
        // order-zero modified Bessel series in the integration tests.
        let v = kernel_g(1.0, &q()).unwrap();
        assert!((v - 0.4210244382407083).abs() < 1e-9);
    }

    #[test]
    fn kernel_g_decays() {
        let v = kernel_g(40.0, &q()).unwrap();
        assert!(v < 1e-15);
    }

    #[test]
    fn kernel_h_values() {
        assert_eq!(kernel_h(0.0, &q()).unwrap(), 1.0);
        let v = kernel_h(1.0, &q()).unwrap();
        assert!((v - 0.6019072301972346).abs() < 1e-9);
        assert!(kernel_h(40.0, &q()).unwrap() < 1e-14);
    }

    #[test]
    fn kernel_h_forms_agree() {
        for &w in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            let a = kernel_h(w, &q()).unwrap();
            let b = kernel_h_from_tail(w, &q()).unwrap();
            assert!((a - b).abs() < 1e-8, "w = {w}: {a} vs {b}");
        }
    }

    #[test]
    fn kernel_h_monotone() {
        let mut prev = kernel_h(0.0, &q()).unwrap();
        for i in 1..=1000 {
            let w = 8.0 * (i as f64) / 1000.0;
            let cur = kernel_h(w, &q()).unwrap();
            assert!(cur < prev, "h not decreasing at w = {w}");
            assert!(cur > 0.0 && cur <= 1.0);
            prev = cur;
        }
    }

    #[test]
    fn kernel_h_derivative_negative_and_matches_fd() {
        for &w in &[0.3, 1.0, 2.5] {
            let d = kernel_h_derivative(w, &q()).unwrap();
            assert!(d < 0.0);
            // Richardson-extrapolated central differences.
            let fd = |delta: f64| {
                (kernel_h(w + delta, &q()).unwrap() - kernel_h(w - delta, &q()).unwrap())
                    / (2.0 * delta)
            };
            let e1 = fd(1e-5);
            let e2 = fd(5e-6);
            let extrap = (4.0 * e2 - e1) / 3.0;
            assert!((d - extrap).abs() < 1e-6, "w = {w}: {d} vs {extrap}");
        }
    }

    #[test]
    fn kernel_h_derivative_at_one() {
        // Frozen from the finite-difference oracle above; also equals
        // -1 * g(1) through the kernel identity h' = -w g.
        let d = kernel_h_derivative(1.0, &q()).unwrap();
        assert!((d + 0.4210244382407083).abs() < 1e-8);
        let g1 = kernel_g(1.0, &q()).unwrap();
        assert!((d + g1).abs() < 1e-8);
    }

    #[test]
    fn kernel_h_derivative_vanishes_far_out() {
        let d = kernel_h_derivative(35.0, &q()).unwrap();
        assert!(d.abs() < 1e-12 && d < 0.0);
    }

    #[test]
    fn cached_table_matches_quadrature() {
        let table = cached_kernel_h();
        let spec = q();
        for i in 0..200 {
            // Log-spaced probe points across ten decades.
            let w = 1e-6 * (10.0_f64).powf(7.0 * i as f64 / 199.0);
            if w >= 55.0 {
                continue;
            }
            let direct = kernel_h(w, &spec).unwrap();
            let fast = table.eval(w);
            assert!(
                (direct - fast).abs() < 1e-8,
                "table off at w = {w}: {direct} vs {fast}"
            );
        }
        assert_eq!(table.eval(0.0), 1.0);
        assert_eq!(table.eval(61.0), 0.0);
    }

    #[test]
    fn moments() {
        let qm = QuadratureSpec::new(1e-9, 1e-9, 600).unwrap();
        let mg = kernel_g_moment(&qm).unwrap();
        assert!((mg - 1.0).abs() < 1e-6, "g moment {mg}");
        let mh = kernel_h_moment(&qm).unwrap();
        assert!((mh - 2.0).abs() < 1e-6, "h moment {mh}");
    }
}
