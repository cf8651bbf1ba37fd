//! The finite-horizon constant `B(T) = ∫_0^T e^{ψ(α)(T-t)} E e^{αX̄_t} dt`
//! by three independent routes, and the derived comparison quantities.
//!
//! * `b_quadrature` — composite Simpson over a shared-path Monte Carlo
//!   profile of the tilted supremum transform;
//! * `b_exp_time` — the exponential-time representation
//!   `ψ⁻¹ e^{ψT} E(e^{αX̄_e}; e<T)` for ψ > 0 and
//!   `(−ψ)⁻¹ E(e^{αX̄_{T-e}}; e<T)` for ψ < 0;
//! * `b_laplace` — deterministic Euler inversion of
//!   `δ ↦ (φ(δ)−α) / ((δ−ψ(α))² φ(δ))` in the spectrally positive case
//!   (`1/(δ−ψ)²` when `p ≤ 0`, where the supremum equals the endpoint).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{estimate_sup_mgf_profile, estimate_tail_prob, Importance};
use crate::laplace::{euler_nodes, euler_weights};
use crate::model::RiskModel;
use crate::path::sample_path;
use crate::quad::simpson_weights;
use crate::rng::{run_scalar, McEstimate};
use crate::stats::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BMethod {
    Quadrature,
    ExpTime,
    Laplace,
}

impl BMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BMethod::Quadrature => "quadrature",
            BMethod::ExpTime => "exp-time",
            BMethod::Laplace => "laplace",
        }
    }
}

/// One estimate of `B(T)`.
#[derive(Debug, Clone, Serialize)]
pub struct BEstimate {
    pub value: f64,
    /// Zero for the deterministic Laplace route (up to inversion tolerance).
    pub std_error: f64,
    pub method: BMethod,
    pub horizon: f64,
    pub alpha: f64,
    pub seed: u64,
    pub note: Option<String>,
}

impl BEstimate {
    /// 3-combined-SE agreement, with a relative floor for the deterministic
    /// method (its reported SE is zero).
    pub fn consistent_with(&self, other: &BEstimate, rel_floor: f64) -> bool {
        let se = (self.std_error.powi(2) + other.std_error.powi(2)).sqrt();
        let tol = (3.0 * se).max(rel_floor * self.value.abs().max(other.value.abs()));
        (self.value - other.value).abs() <= tol
    }
}

/// Shared-path Simpson quadrature of `e^{ψ(α)(T-s)} E e^{αX̄_s}` over a
/// uniform `grid_size`-interval mesh. Every replica contributes its whole
/// integrand profile, so the standard error is that of i.i.d. per-path
/// Simpson values (no cross-horizon covariance is dropped).
pub fn b_quadrature(
    model: &RiskModel,
    alpha: f64,
    horizon: f64,
    grid_size: usize,
    replicas: u64,
    seed: u64,
) -> Result<BEstimate> {
    let psi = model.cumulant(alpha)?;
    if horizon <= 0.0 {
        return Err(Error::Config("horizon must be positive".into()));
    }
    let n = grid_size.max(2) + grid_size % 2;
    let h = horizon / n as f64;
    let ts: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
    let weights = simpson_weights(n, h);
    let damp: Vec<f64> = ts.iter().map(|s| (psi * (horizon - s)).exp()).collect();
    let stats = run_scalar(replicas, seed, |rng, _| {
        let path = sample_path(model, horizon, rng);
        path.running_sup_multi(&ts)
            .iter()
            .zip(&weights)
            .zip(&damp)
            .map(|((sup, w), d)| w * d * (alpha * sup).exp())
            .sum()
    });
    Ok(BEstimate {
        value: stats.mean(),
        std_error: stats.std_error(),
        method: BMethod::Quadrature,
        horizon,
        alpha,
        seed,
        note: None,
    })
}

/// Exponential-time Monte Carlo representation of `B(T)`. Falls back to
/// quadrature within `|ψ(α)| < 1e-8` of the critical point (flagged).
pub fn b_exp_time(
    model: &RiskModel,
    alpha: f64,
    horizon: f64,
    replicas: u64,
    seed: u64,
) -> Result<BEstimate> {
    let psi = model.cumulant(alpha)?;
    if psi.abs() < 1e-8 {
        let mut b = b_quadrature(model, alpha, horizon, 64, replicas, seed)?;
        b.method = BMethod::ExpTime;
        b.note = Some("psi(alpha) at critical point: quadrature fallback".into());
        return Ok(b);
    }
    let rate = psi.abs();
    let prefactor = if psi > 0.0 { (psi * horizon).exp() / psi } else { 1.0 / rate };
    let stats = run_scalar(replicas, seed, |rng, _| {
        let e = crate::claims::sample_exp(rng, rate);
        if e >= horizon {
            return 0.0;
        }
        let t = if psi > 0.0 { e } else { horizon - e };
        let path = sample_path(model, t, rng);
        (alpha * path.running_sup(t)).exp()
    });
    Ok(BEstimate {
        value: prefactor * stats.mean(),
        std_error: prefactor * stats.std_error(),
        method: BMethod::ExpTime,
        horizon,
        alpha,
        seed,
        note: None,
    })
}

/// Number of Euler-summation terms (2M+1 transform evaluations).
const EULER_M: usize = 20;

/// Deterministic `B(T)` by Laplace inversion. The contour is shifted right
/// by `c = max(ψ(α), 0)` — inverting `e^{-cs}B(s)` keeps the integrand
/// polynomially bounded — and a resonance guard keeps every node away from
/// the double pole at `δ = ψ(α)`.
pub fn b_laplace(model: &RiskModel, alpha: f64, horizon: f64) -> Result<BEstimate> {
    let psi = model.cumulant(alpha)?;
    if horizon <= 0.0 {
        return Err(Error::Config("horizon must be positive".into()));
    }
    let subordinator = model.premium_rate <= 0.0;
    let mut shift = psi.max(0.0);
    let nodes = euler_nodes(horizon, EULER_M);
    if nodes.iter().any(|d| (d + shift - psi).norm() < 1e-6) {
        shift += 1e-3; // resonance guard: move the contour off the pole
    }
    let weights = euler_weights(EULER_M);
    let mut note = None;

    let mut sum = 0.0;
    if subordinator {
        // X̄ = X for p ≤ 0, so E e^{αX̄_{e(δ)}} = δ/(δ−ψ) and B̂ = 1/(δ−ψ)².
        note = Some("p <= 0: endpoint supremum transform 1/(delta-psi)^2".into());
        for (&d, &w) in nodes.iter().zip(&weights) {
            let delta = d + shift;
            let val = 1.0 / ((delta - psi) * (delta - psi));
            sum += w * val.re;
        }
    } else {
        // path-continued complex inverse cumulant along the contour
        let mut phi_prev = Complex64::new(model.phi_inverse(nodes[0].re + shift)?, 0.0);
        for (&d, &w) in nodes.iter().zip(&weights) {
            let delta = d + shift;
            let phi = model.phi_inverse_complex(delta, phi_prev)?;
            phi_prev = phi;
            let dm = delta - psi;
            let val = (phi - alpha) / (dm * dm * phi);
            sum += w * val.re;
        }
    }
    let value = 10f64.powf(EULER_M as f64 / 3.0) * sum / horizon * (shift * horizon).exp();
    Ok(BEstimate {
        value,
        std_error: 0.0,
        method: BMethod::Laplace,
        horizon,
        alpha,
        seed: 0,
        note,
    })
}

/// Headline estimate `P(τ(u) < T) ≈ Π̄⁺(u) · B(T)`.
pub fn finite_time_ruin_estimate(model: &RiskModel, u: f64, b: &BEstimate) -> f64 {
    model.levy_tail(u) * b.value
}

/// `ln m̂(t) / t` diagnostics along a horizon grid, with the least-squares
/// slope of `ln m̂(t)` as the extrapolated exponential growth rate.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthEstimate {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub extrapolated: f64,
}

pub fn growth_rate(
    model: &RiskModel,
    alpha: f64,
    t_grid: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<GrowthEstimate> {
    let profile = estimate_sup_mgf_profile(model, alpha, t_grid, replicas, seed)?;
    let mut values = Vec::with_capacity(t_grid.len());
    let mut std_errors = Vec::with_capacity(t_grid.len());
    let mut lny = Vec::with_capacity(t_grid.len());
    for (t, m) in t_grid.iter().zip(&profile) {
        values.push(m.estimate.ln() / t);
        std_errors.push(m.std_error / (m.estimate * t));
        lny.push(m.estimate.ln());
    }
    let n = t_grid.len() as f64;
    let tbar = t_grid.iter().sum::<f64>() / n;
    let ybar = lny.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in t_grid.iter().zip(&lny) {
        num += (t - tbar) * (y - ybar);
        den += (t - tbar) * (t - tbar);
    }
    Ok(GrowthEstimate { t_grid: t_grid.to_vec(), values, std_errors, extrapolated: num / den })
}

/// Classical second-order finite-time approximation
/// `C e^{-νu} Φ((T − au)/(b√u))` with `C = −EX₁/ψ'(ν)`, `a = 1/ψ'(ν)`,
/// `b² = ψ''(ν)/ψ'(ν)³`. Absent when the adjustment coefficient does not
/// exist or the second moment diverges at ν.
pub fn segerdahl(model: &RiskModel, u: f64, horizon: f64) -> Option<f64> {
    let nu = model.lundberg_root()?;
    let d1 = model.cumulant_d1(nu).ok()?;
    let d2 = model.cumulant_d2(nu).ok()?;
    if !d1.is_finite() || !d2.is_finite() || d1 <= 0.0 {
        return None;
    }
    let c = -model.mean_increment() / d1;
    let a = 1.0 / d1;
    let b = (d2 / d1.powi(3)).sqrt();
    Some(c * (-nu * u).exp() * normal_cdf((horizon - a * u) / (b * u.sqrt())))
}

/// Cramér–Lundberg infinite-horizon asymptote `C e^{-νu}`; absent without
/// an adjustment coefficient.
pub fn cramer_lundberg_estimate(model: &RiskModel, u: f64) -> Option<f64> {
    let nu = model.lundberg_root()?;
    let d1 = model.cumulant_d1(nu).ok()?;
    if !d1.is_finite() || d1 <= 0.0 {
        return None;
    }
    Some(-model.mean_increment() / d1 * (-nu * u).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRatioRow {
    pub u: f64,
    pub tail_prob: McEstimate,
    /// `P̂(X_T > u) / Π̄⁺(u)`.
    pub ratio: f64,
    pub ratio_se: f64,
    /// The convolution-equivalent prediction `T e^{ψ(α)T}`.
    pub prediction: f64,
}

/// Per-level comparison of `P(X_T > u)/Π̄⁺(u)` against `T e^{ψ(α)T}`.
pub fn tail_ratio_diagnostic(
    model: &RiskModel,
    alpha: f64,
    horizon: f64,
    u_grid: &[f64],
    replicas: u64,
    seed: u64,
    importance: Importance,
) -> Result<Vec<TailRatioRow>> {
    let psi = model.cumulant(alpha)?;
    let prediction = horizon * (psi * horizon).exp();
    let mut rows = Vec::with_capacity(u_grid.len());
    for (i, &u) in u_grid.iter().enumerate() {
        let est = estimate_tail_prob(model, u, horizon, replicas, seed + i as u64, importance)?;
        let tail = model.levy_tail(u);
        rows.push(TailRatioRow {
            u,
            ratio: est.estimate / tail,
            ratio_se: est.std_error / tail,
            prediction,
            tail_prob: est,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::ClaimDistribution;
    use crate::fluctuation::{sup_mgf_infinity, SupMgfAtInfinity};
    use crate::quad::integrate;

    fn exp_model(lambda: f64, p: f64, eta: f64) -> RiskModel {
        RiskModel::new(lambda, p, ClaimDistribution::exponential(eta).unwrap()).unwrap()
    }

    fn tp_model(lambda: f64, p: f64, t: f64, pw: f64, s: f64) -> RiskModel {
        RiskModel::new(lambda, p, ClaimDistribution::tilted_pareto(t, pw, s).unwrap()).unwrap()
    }

    #[test]
    fn subordinator_b_is_t_exp_psi_t() {
        // p = 0 ⇒ B(T) = T e^{ψ(α)T} exactly; all three methods must land there
        let m = tp_model(1.0, 0.0, 1.0, 2.5, 1.0);
        let (alpha, t) = (1.0, 1.0);
        let psi = m.cumulant(alpha).unwrap();
        let expect = t * (psi * t).exp();

        let q = b_quadrature(&m, alpha, t, 48, 300_000, 60).unwrap();
        assert!(
            (q.value - expect).abs() < 3.0 * q.std_error,
            "quadrature {} vs {expect} (se {})",
            q.value,
            q.std_error
        );

        let e = b_exp_time(&m, alpha, t, 300_000, 61).unwrap();
        assert!(
            (e.value - expect).abs() < 3.0 * e.std_error,
            "exp-time {} vs {expect} (se {})",
            e.value,
            e.std_error
        );

        let l = b_laplace(&m, alpha, t).unwrap();
        assert!(
            (l.value - expect).abs() < 5e-3 * expect,
            "laplace {} vs {expect}",
            l.value
        );
    }

    #[test]
    fn three_methods_agree_on_negative_psi() {
        // λ=1, p=3, Exp(1), α=0.5: ψ = 1 − 1.5 = −0.5
        let m = exp_model(1.0, 3.0, 1.0);
        let (alpha, t) = (0.5, 2.0);
        let q = b_quadrature(&m, alpha, t, 48, 250_000, 62).unwrap();
        let e = b_exp_time(&m, alpha, t, 250_000, 63).unwrap();
        let l = b_laplace(&m, alpha, t).unwrap();
        assert!(q.consistent_with(&e, 0.0), "q {} vs e {}", q.value, e.value);
        assert!(q.consistent_with(&l, 0.005), "q {} vs l {}", q.value, l.value);
    }

    #[test]
    fn three_methods_agree_on_positive_psi() {
        // λ=1, p=0.9, Exp(1), α=0.5: ψ = 1 − 0.45 = 0.55
        let m = exp_model(1.0, 0.9, 1.0);
        let (alpha, t) = (0.5, 2.0);
        let q = b_quadrature(&m, alpha, t, 48, 250_000, 64).unwrap();
        let e = b_exp_time(&m, alpha, t, 250_000, 65).unwrap();
        let l = b_laplace(&m, alpha, t).unwrap();
        assert!(q.consistent_with(&e, 0.0), "q {} vs e {}", q.value, e.value);
        assert!(q.consistent_with(&l, 0.005), "q {} vs l {}", q.value, l.value);
    }

    #[test]
    fn exp_time_critical_fallback_flagged() {
        let m = exp_model(1.0, 2.0, 1.0); // ψ(0.5) = 0
        let b = b_exp_time(&m, 0.5, 1.0, 50_000, 66).unwrap();
        assert_eq!(b.method, BMethod::ExpTime);
        assert!(b.note.as_deref().unwrap().contains("fallback"));
    }

    #[test]
    fn saturation_toward_infinite_horizon_limit() {
        // ψ(α) < 0: B(T) ↑ E e^{αX̄_∞}/(−ψ); at T = 5/|ψ| within 5%
        let m = tp_model(1.0, 2.0, 1.0, 2.0, 1.0);
        let alpha = 1.0;
        let psi = m.cumulant(alpha).unwrap();
        assert!((psi + 1.0).abs() < 1e-9);
        let limit = match sup_mgf_infinity(&m, alpha).unwrap() {
            SupMgfAtInfinity::Finite(v) => v / (-psi),
            _ => unreachable!(),
        };
        let t = 5.0 / psi.abs();
        let b = b_laplace(&m, alpha, t).unwrap();
        assert!(
            (b.value - limit).abs() < 0.05 * limit,
            "B({t}) = {} vs limit {limit}",
            b.value
        );
    }

    #[test]
    fn small_horizon_slope_is_one() {
        for m in [exp_model(1.0, 2.0, 1.0), tp_model(1.0, 2.0, 1.0, 2.0, 1.0)] {
            let alpha = match m.claims {
                ClaimDistribution::Exponential { .. } => 0.5,
                _ => 1.0,
            };
            let b = b_laplace(&m, alpha, 0.05).unwrap();
            let slope = b.value / 0.05;
            assert!((0.9..=1.1).contains(&slope), "B(T)/T = {slope}");
        }
    }

    #[test]
    fn laplace_transform_identity_via_mc() {
        // E e^{αX̄_{e(δ)}} must match δ(φ(δ)−α)/((δ−ψ)φ(δ)) and the
        // transform itself must match ∫ e^{-δs} B(s) ds on a grid.
        let m = exp_model(1.0, 2.0, 1.0);
        let (alpha, delta) = (0.5, 1.5);
        let psi = m.cumulant(alpha).unwrap();
        let phi = m.phi_inverse(delta).unwrap();
        let closed = delta * (phi - alpha) / ((delta - psi) * phi);
        let stats = run_scalar(400_000, 70, |rng, _| {
            let e = crate::claims::sample_exp(rng, delta);
            let path = sample_path(&m, e, rng);
            (alpha * path.running_sup(e)).exp()
        });
        assert!(
            (stats.mean() - closed).abs() < 3.0 * stats.std_error(),
            "MC {} vs closed {closed} (se {})",
            stats.mean(),
            stats.std_error()
        );

        // ∫_0^S e^{-δs} B̂(s) ds against (φ(δ)−α)/((δ−ψ)²φ(δ))
        let transform = (phi - alpha) / ((delta - psi).powi(2) * phi);
        let ss: Vec<f64> = (1..=14).map(|i| i as f64 * 0.75).collect();
        let bs: Vec<f64> =
            ss.iter().map(|&s| b_laplace(&m, alpha, s).unwrap().value).collect();
        let integral = integrate(
            &|s: f64| {
                // piecewise-linear interpolation of B on the grid (B(0)=0)
                let i = ss.partition_point(|&x| x <= s);
                let (s0, b0) = if i == 0 { (0.0, 0.0) } else { (ss[i - 1], bs[i - 1]) };
                let (s1, b1) = if i < ss.len() { (ss[i], bs[i]) } else { return 0.0 };
                let b = b0 + (b1 - b0) * (s - s0) / (s1 - s0);
                (-delta * s).exp() * b
            },
            0.0,
            *ss.last().unwrap(),
            1e-10,
            1e-8,
        );
        assert!(
            (integral.value - transform).abs() < 0.01 * transform,
            "grid integral {} vs transform {transform}",
            integral.value
        );
    }

    #[test]
    fn b_monotone_in_horizon() {
        let m = exp_model(1.0, 3.0, 1.0);
        let mut prev = 0.0;
        for &t in &[0.5, 1.0, 2.0, 4.0, 8.0] {
            let b = b_laplace(&m, 0.5, t).unwrap();
            assert!(b.value > prev, "B must increase: {} at {t}", b.value);
            prev = b.value;
        }
    }

    #[test]
    fn supercritical_divergence() {
        // ψ(α) > 0: B(2T) ≥ 1.5 B(T) for large T
        let m = exp_model(1.0, 0.9, 1.0);
        let b1 = b_laplace(&m, 0.5, 8.0).unwrap();
        let b2 = b_laplace(&m, 0.5, 16.0).unwrap();
        assert!(b2.value >= 1.5 * b1.value);
    }

    #[test]
    fn headline_estimate_scales_with_arrival_rate() {
        let m = exp_model(1.0, 2.0, 1.0);
        let b = b_laplace(&m, 0.25, 1.0).unwrap();
        let m2 = exp_model(2.0, 2.0, 1.0);
        let e1 = finite_time_ruin_estimate(&m, 3.0, &b);
        let e2 = finite_time_ruin_estimate(&m2, 3.0, &b);
        assert!((e2 / e1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn growth_rate_subordinator_identity() {
        // X̄ = X ⇒ ln m̂(t)/t = ψ(α) for every t
        let m = tp_model(1.0, 0.0, 1.0, 2.5, 1.0);
        let psi = m.cumulant(1.0).unwrap();
        let g =
            growth_rate(&m, 1.0, &[1.0, 2.0, 4.0], 200_000, 71).unwrap();
        for (v, se) in g.values.iter().zip(&g.std_errors) {
            assert!((v - psi).abs() < 4.0 * se, "{v} vs {psi} (se {se})");
        }
        assert!((g.extrapolated - psi).abs() < 0.02);
    }

    #[test]
    fn segerdahl_constants() {
        // λ=1, p=2, Exp(1): ν = ½, ψ'(ν)=2, ψ''(ν)=2 ⇒ C=½, a=½, b=½
        let m = exp_model(1.0, 2.0, 1.0);
        let nu = m.lundberg_root().unwrap();
        assert!((m.cumulant_d1(nu).unwrap() - 2.0).abs() < 1e-9);
        // T → ∞ recovers the Cramér–Lundberg asymptote
        let far = segerdahl(&m, 5.0, 1e6).unwrap();
        assert!((far - 0.5 * (-2.5f64).exp()).abs() < 1e-12);
        assert!((cramer_lundberg_estimate(&m, 5.0).unwrap() - 0.5 * (-2.5f64).exp()).abs() < 1e-14);
        // large-premium heavy-tail regime: no adjustment coefficient
        assert!(segerdahl(&tp_model(1.0, 2.0, 1.0, 2.0, 1.0), 5.0, 1.0).is_none());
    }

    #[test]
    fn tail_ratio_rows() {
        let m = tp_model(1.0, 0.0, 1.0, 2.5, 1.0);
        let rows = tail_ratio_diagnostic(
            &m,
            1.0,
            1.0,
            &[4.0, 8.0],
            200_000,
            72,
            Importance::Esscher { alpha: 1.0 },
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        let psi = m.cumulant(1.0).unwrap();
        for r in &rows {
            assert!((r.prediction - (psi * 1.0).exp()).abs() < 1e-12);
            assert!(r.ratio > 0.0);
        }
    }
}
