//! Ladder-height machinery for the compound-Poisson model with negative
//! drift, and the limiting overshoot laws built from it.
//!
//! With `EX_1 = λμ_F − p < 0` the running maximum is a terminating renewal
//! process: a new record occurs with probability `ρ̂ = λμ_F/p` and each
//! record increment follows the integrated-tail law `G(dx) = F̄(x)dx/μ_F`.
//! Only normalization-invariant ratios are exposed: the ladder jump measure
//! over its killing rate is `Π_H(dz)/q = λ/(p − λμ_F) · F̄(z) dz` and the
//! ladder drift vanishes (no creeping upward through jumps).

use crate::claims::ClaimDistribution;
use crate::error::{Error, Result};
use crate::model::{RiskModel, PSI_CRITICAL_TOL};
use crate::quad::{integrate, integrate_to_infinity};
use crate::rng::{run_scalar, McEstimate};
use rand::Rng;

/// Ascending-ladder summary of a negative-drift model.
#[derive(Debug, Clone)]
pub struct LadderData {
    /// Probability that a new maximum is ever reached, `ρ̂ = λμ_F/p ∈ (0,1)`.
    pub success_prob: f64,
    /// Claim mean `μ_F`.
    pub claim_mean: f64,
    /// Ladder drift `d_H`; zero for compound Poisson (no upward creeping).
    pub drift_coeff: f64,
    /// Coefficient of the killing-normalized ladder measure,
    /// `Π_H(dz)/q = ratio_coeff · F̄(z) dz`.
    pub ratio_coeff: f64,
    model: RiskModel,
}

/// Ladder quantities; requires `p > 0` and `EX_1 < 0`.
pub fn ladder_data(model: &RiskModel) -> Result<LadderData> {
    if model.premium_rate <= 0.0 {
        return Err(Error::Regime("ladder data needs a positive premium rate".into()));
    }
    let mu = model.claims.mean();
    if !mu.is_finite() || mu <= 0.0 {
        return Err(Error::Regime("claim mean must be finite and positive".into()));
    }
    let drift = model.arrival_rate * mu - model.premium_rate;
    if drift >= 0.0 {
        return Err(Error::Regime(format!(
            "maximum never terminates: EX_1 = {drift} ≥ 0"
        )));
    }
    Ok(LadderData {
        success_prob: model.arrival_rate * mu / model.premium_rate,
        claim_mean: mu,
        drift_coeff: 0.0,
        ratio_coeff: model.arrival_rate / (model.premium_rate - model.arrival_rate * mu),
        model: model.clone(),
    })
}

impl LadderData {
    /// Density of the integrated-tail (single ladder height) law, `F̄(x)/μ_F`.
    pub fn integrated_tail_density(&self, x: f64) -> f64 {
        self.model.claims.tail(x) / self.claim_mean
    }

    /// Density of `Π_H(dz)/q`.
    pub fn ladder_ratio_density(&self, z: f64) -> f64 {
        self.ratio_coeff * self.model.claims.tail(z)
    }

    /// MGF of the integrated-tail law, `ĝ(α) = (M_U(α) − 1)/(α μ_F)`.
    pub fn integrated_tail_mgf(&self, alpha: f64) -> Result<f64> {
        if alpha <= 0.0 {
            return Err(Error::Domain("integrated-tail MGF needs α > 0".into()));
        }
        Ok((self.model.claims.mgf(alpha)? - 1.0) / (alpha * self.claim_mean))
    }
}

/// Either a finite value of `E e^{α X̄_∞}` or a regime tag for `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupMgfAtInfinity {
    Finite(f64),
    /// ψ(α) ≥ 0: the all-time maximum has no exponential moment at α.
    Infinite,
}

/// `E e^{α X̄_∞}` by the geometric-compound closed form
/// `(1 − ρ̂)/(1 − ρ̂ ĝ(α))`, or the `Infinite` tag when ψ(α) ≥ 0.
pub fn sup_mgf_infinity(model: &RiskModel, alpha: f64) -> Result<SupMgfAtInfinity> {
    let ladder = ladder_data(model)?;
    let psi = model.cumulant(alpha)?;
    if psi >= 0.0 {
        return Ok(SupMgfAtInfinity::Infinite);
    }
    let g_hat = ladder.integrated_tail_mgf(alpha)?;
    Ok(SupMgfAtInfinity::Finite((1.0 - ladder.success_prob) / (1.0 - ladder.success_prob * g_hat)))
}

/// The infinite-horizon constant `E e^{αX̄_∞} / (−ψ(α))` toward which
/// `P(τ(u) < ∞)/Π̄⁺(u)` converges; `None` in the ψ(α) ≥ 0 regime.
pub fn infinite_horizon_constant(model: &RiskModel, alpha: f64) -> Result<Option<f64>> {
    match sup_mgf_infinity(model, alpha)? {
        SupMgfAtInfinity::Finite(m) => Ok(Some(m / (-model.cumulant(alpha)?))),
        SupMgfAtInfinity::Infinite => Ok(None),
    }
}

/// `P(τ(u) < ∞)` via the geometric compound of ladder heights. Exact for
/// exponential claims (`ρ̂ e^{-(η - λ/p)u}`), Monte Carlo otherwise.
pub fn ruin_prob_infinite(
    model: &RiskModel,
    u: f64,
    replicas: u64,
    seed: u64,
) -> Result<McEstimate> {
    let ladder = ladder_data(model)?;
    let rho = ladder.success_prob;
    if let ClaimDistribution::Exponential { rate } = model.claims {
        let decay = rate - model.arrival_rate / model.premium_rate;
        return Ok(McEstimate {
            estimate: rho * (-decay * u.max(0.0)).exp(),
            std_error: 0.0,
            replicas: 0,
            seed,
            method: "pk-exact".into(),
            hits: 0,
        });
    }
    let claims = model.claims.clone();
    let ln_rho = rho.ln();
    let stats = run_scalar(replicas, seed, move |rng, _| {
        let v: f64 = rng.random();
        let n = ((1.0_f64 - v).ln() / ln_rho).floor() as u64;
        let mut s = 0.0;
        for _ in 0..n {
            s += claims.sample_integrated_tail(rng).expect("base family");
            if s > u {
                return 1.0;
            }
        }
        if s > u {
            1.0
        } else {
            0.0
        }
    });
    Ok(stats.into_estimate(seed, "pk-geometric-mc"))
}

// ── Limiting overshoot laws ─────────────────────────────────────────────

/// `R(γ) = ∫_γ^∞ e^{αx} F̄(x) dx`, the kernel shared by the tilted overshoot
/// densities; adaptive quadrature at relative tolerance 1e-8 with a
/// certified tail bound. The tolerance is relative (not absolute) so deep-γ
/// evaluations, where the value itself is exponentially small, stay cheap.
fn tilted_tail_remainder(claims: &ClaimDistribution, alpha: f64, gamma: f64) -> f64 {
    const REL: f64 = 1e-8;
    match claims {
        ClaimDistribution::Exponential { rate } => {
            let c = rate - alpha;
            assert!(c > 0.0, "tilt must be below the exponential rate");
            let f = |x: f64| ((alpha - rate) * x).exp();
            let bound = |x: f64| (-c * x).exp() / c;
            integrate_to_infinity(&f, gamma, 1.0 / c, &bound, f64::MIN_POSITIVE, REL).value
        }
        ClaimDistribution::TiltedPareto { tilt, power, scale } => {
            let (t, p, s) = (*tilt, *power, *scale);
            let f = move |x: f64| ((alpha - t) * x).exp() * (1.0 + x / s).powf(-p);
            let bound = move |x: f64| {
                let alg = s * (1.0 + x / s).powf(1.0 - p) / (p - 1.0);
                if alpha < t {
                    alg.min(((alpha - t) * x).exp() * (1.0 + x / s).powf(-p) / (t - alpha))
                } else {
                    alg
                }
            };
            integrate_to_infinity(&f, gamma, s, &bound, f64::MIN_POSITIVE, REL).value
        }
        ClaimDistribution::Tilted { .. } => {
            unreachable!("overshoot laws are built for base claim families")
        }
    }
}

/// A certified upper bound for `R(γ)` used to truncate γ-integrals.
fn tilted_tail_remainder_bound(claims: &ClaimDistribution, alpha: f64, gamma: f64) -> f64 {
    match claims {
        ClaimDistribution::Exponential { rate } => {
            (-(rate - alpha) * gamma).exp() / (rate - alpha)
        }
        ClaimDistribution::TiltedPareto { tilt, power, scale } => {
            let alg = scale * (1.0 + gamma / scale).powf(1.0 - power) / (power - 1.0);
            if alpha < *tilt {
                alg.min((-(tilt - alpha) * gamma).exp() / (tilt - alpha))
            } else {
                alg
            }
        }
        ClaimDistribution::Tilted { .. } => unreachable!(),
    }
}

#[derive(Debug, Clone)]
enum OvershootKind {
    /// Infinite-horizon limit, ψ(α) < 0:
    /// `α e^{-αγ}/E e^{αX̄_∞} + α·rc·∫ e^{αy} F̄(y+γ) dy`.
    InfiniteHorizon { alpha: f64, sup_mgf: f64, ratio_coeff: f64 },
    /// Critical (ψ(α) = 0) limit: `α·rc·∫ e^{αy} F̄(y+γ) dy`.
    Critical { alpha: f64, ratio_coeff: f64 },
    /// Driftless subordinator renewal limit: the integrated-tail density.
    RenewalIntegratedTail,
    /// Tilt-weighted subordinator limit: `(α/ψ(α))·λ·∫ e^{αy} F(y+dγ) dy`.
    RenewalTilted { alpha: f64, psi: f64 },
}

/// A limiting overshoot distribution: an atom at zero plus an absolutely
/// continuous part with a pointwise-evaluable density.
#[derive(Debug, Clone)]
pub struct OvershootLaw {
    pub atom_at_zero: f64,
    kind: OvershootKind,
    claims: ClaimDistribution,
    arrival_rate: f64,
}

impl OvershootLaw {
    /// Density of the absolutely continuous part at `γ ≥ 0`.
    pub fn density(&self, gamma: f64) -> f64 {
        if gamma < 0.0 {
            return 0.0;
        }
        match &self.kind {
            OvershootKind::InfiniteHorizon { alpha, sup_mgf, ratio_coeff } => {
                let j = (-alpha * gamma).exp()
                    * tilted_tail_remainder(&self.claims, *alpha, gamma);
                alpha * (-alpha * gamma).exp() / sup_mgf + alpha * ratio_coeff * j
            }
            OvershootKind::Critical { alpha, ratio_coeff } => {
                let j = (-alpha * gamma).exp()
                    * tilted_tail_remainder(&self.claims, *alpha, gamma);
                alpha * ratio_coeff * j
            }
            OvershootKind::RenewalIntegratedTail => {
                self.claims.tail(gamma) / self.claims.mean()
            }
            OvershootKind::RenewalTilted { alpha, psi } => {
                // ∫_0^∞ e^{αy} f(y+γ) dy with the exponents combined up
                // front: the integrand is e^{(α-c)y - cγ}·factor(y+γ) where
                // c is the claim decay rate, so it never overflows.
                let claims = self.claims.clone();
                let c = claims.exponential_decay();
                let a = *alpha;
                let f = move |y: f64| {
                    ((a - c) * y - c * gamma).exp() * claims.algebraic_factor(y + gamma)
                };
                let claims2 = self.claims.clone();
                let bound = move |y: f64| match &claims2 {
                    ClaimDistribution::Exponential { rate } => {
                        rate * ((a - rate) * y - rate * gamma).exp() / (rate - a)
                    }
                    ClaimDistribution::TiltedPareto { tilt, power, scale } => {
                        let cap = tilt + power / scale;
                        let alg = (-tilt * gamma).exp() * cap * scale
                            * (1.0 + (y + gamma) / scale).powf(1.0 - power)
                            / (power - 1.0);
                        if a < *tilt {
                            alg.min(cap * ((a - tilt) * y - tilt * gamma).exp() / (tilt - a))
                        } else {
                            alg
                        }
                    }
                    ClaimDistribution::Tilted { .. } => unreachable!(),
                };
                let inner =
                    integrate_to_infinity(&f, 0.0, 1.0, &bound, f64::MIN_POSITIVE, 1e-8).value;
                (alpha / psi) * self.arrival_rate * inner
            }
        }
    }

    /// Total mass (atom + quadrature of the density); 1 up to tolerance for
    /// a correctly normalized law.
    pub fn total_mass(&self) -> f64 {
        let f = |g: f64| self.density(g);
        let bound = |g: f64| self.mass_tail_bound(g);
        self.atom_at_zero + integrate_to_infinity(&f, 0.0, 1.0, &bound, 1e-10, 1e-9).value
    }

    /// Certified bound on `∫_Γ^∞ density`.
    fn mass_tail_bound(&self, gamma: f64) -> f64 {
        match &self.kind {
            OvershootKind::InfiniteHorizon { alpha, sup_mgf, ratio_coeff } => {
                (-alpha * gamma).exp()
                    * (1.0 / sup_mgf
                        + ratio_coeff * tilted_tail_remainder_bound(&self.claims, *alpha, gamma))
            }
            OvershootKind::Critical { alpha, ratio_coeff } => {
                (-alpha * gamma).exp()
                    * ratio_coeff
                    * tilted_tail_remainder_bound(&self.claims, *alpha, gamma)
            }
            OvershootKind::RenewalIntegratedTail => match &self.claims {
                ClaimDistribution::Exponential { rate } => {
                    (-rate * gamma).exp() / (rate * self.claims.mean())
                }
                ClaimDistribution::TiltedPareto { power, scale, .. } => {
                    scale * (1.0 + gamma / scale).powf(1.0 - power)
                        / ((power - 1.0) * self.claims.mean())
                }
                ClaimDistribution::Tilted { .. } => unreachable!(),
            },
            OvershootKind::RenewalTilted { alpha, psi } => {
                // ∫_Γ^∞ ∫ e^{αy} f(y+γ) dy dγ = ∫ e^{αy} F̄(y+Γ) dy = e^{-αΓ} R(Γ)
                (alpha / psi)
                    * self.arrival_rate
                    * (-alpha * gamma).exp()
                    * tilted_tail_remainder_bound(&self.claims, *alpha, gamma)
            }
        }
    }

    /// CDF of the law tabulated on `[0, gamma_max]` (linear interpolation
    /// between quadrature cells), normalized by the computed total mass so
    /// shape comparisons are insensitive to sub-1e-6 normalization drift.
    pub fn cdf_table(&self, gamma_max: f64, cells: usize) -> OvershootCdf {
        let mut xs = Vec::with_capacity(cells + 1);
        let mut cdf = Vec::with_capacity(cells + 1);
        let h = gamma_max / cells as f64;
        let mut acc = self.atom_at_zero;
        xs.push(0.0);
        cdf.push(acc);
        for i in 0..cells {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            acc += integrate(&|g: f64| self.density(g), a, b, 1e-10, 1e-8).value;
            xs.push(b);
            cdf.push(acc);
        }
        OvershootCdf { xs, cdf, mass: acc + self.mass_tail_bound(gamma_max) }
    }
}

/// Tabulated, normalized CDF of an overshoot law.
#[derive(Debug, Clone)]
pub struct OvershootCdf {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    mass: f64,
}

impl OvershootCdf {
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.cdf[0] / self.mass;
        }
        if x >= *self.xs.last().unwrap() {
            return (self.cdf.last().unwrap() / self.mass).min(1.0);
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        ((self.cdf[i] + t * (self.cdf[i + 1] - self.cdf[i])) / self.mass).min(1.0)
    }
}

/// Limiting conditional overshoot law at infinite horizon (ψ(α) < 0 regime).
pub fn overshoot_law_infinite(model: &RiskModel, alpha: f64) -> Result<OvershootLaw> {
    let ladder = ladder_data(model)?;
    let sup_mgf = match sup_mgf_infinity(model, alpha)? {
        SupMgfAtInfinity::Finite(m) => m,
        SupMgfAtInfinity::Infinite => {
            return Err(Error::Regime(
                "infinite-horizon overshoot law needs ψ(α) < 0".into(),
            ))
        }
    };
    Ok(OvershootLaw {
        atom_at_zero: 0.0,
        kind: OvershootKind::InfiniteHorizon {
            alpha,
            sup_mgf,
            ratio_coeff: ladder.ratio_coeff,
        },
        claims: model.claims.clone(),
        arrival_rate: model.arrival_rate,
    })
}

/// Limiting conditional overshoot law at the critical point ψ(α) = 0
/// (checked within tolerance), requiring a finite tilted first moment.
pub fn overshoot_law_cramer(model: &RiskModel, alpha: f64) -> Result<OvershootLaw> {
    let ladder = ladder_data(model)?;
    let psi = model.cumulant(alpha)?;
    if psi.abs() > PSI_CRITICAL_TOL {
        return Err(Error::Regime(format!(
            "critical overshoot law needs ψ(α) = 0 within {PSI_CRITICAL_TOL}, got {psi}"
        )));
    }
    if !model.cumulant_d1(alpha)?.is_finite() {
        return Err(Error::Regime(
            "critical overshoot law needs a finite tilted first moment".into(),
        ));
    }
    Ok(OvershootLaw {
        atom_at_zero: 0.0,
        kind: OvershootKind::Critical { alpha, ratio_coeff: ladder.ratio_coeff },
        claims: model.claims.clone(),
        arrival_rate: model.arrival_rate,
    })
}

/// Unconditional renewal-theory overshoot limit for the driftless
/// subordinator (`p = 0`): the integrated-tail density `F̄(γ)/μ_F`.
pub fn overshoot_law_subordinator(model: &RiskModel) -> Result<OvershootLaw> {
    if model.premium_rate != 0.0 {
        return Err(Error::Regime("renewal overshoot limit needs p = 0".into()));
    }
    Ok(OvershootLaw {
        atom_at_zero: 0.0,
        kind: OvershootKind::RenewalIntegratedTail,
        claims: model.claims.clone(),
        arrival_rate: model.arrival_rate,
    })
}

/// Tilt-weighted subordinator overshoot limit,
/// `(α/ψ(α)) ∫ e^{αy} Π(y + dγ) dy` (conditional large-`T` limit).
pub fn overshoot_law_subordinator_tilted(model: &RiskModel, alpha: f64) -> Result<OvershootLaw> {
    if model.premium_rate != 0.0 {
        return Err(Error::Regime("renewal overshoot limit needs p = 0".into()));
    }
    let psi = model.cumulant(alpha)?;
    if psi <= 0.0 {
        return Err(Error::Regime("subordinator has ψ(α) > 0 for α > 0".into()));
    }
    Ok(OvershootLaw {
        atom_at_zero: 0.0,
        kind: OvershootKind::RenewalTilted { alpha, psi },
        claims: model.claims.clone(),
        arrival_rate: model.arrival_rate,
    })
}

/// Numeric check of the friendly-inversion identity for the ladder measure:
/// for spectrally positive compound Poisson the descending renewal measure is
/// Lebesgue, so `Π_H(dz)/q` must equal `λF̄(z)/(p−λμ_F) dz`. Returns the
/// maximum relative gap over the grid; `fault_factor` ≠ 1 perturbs one side
/// (test-harness fault injection).
pub fn vigon_check(model: &RiskModel, grid: &[f64], fault_factor: f64) -> Result<f64> {
    let ladder = ladder_data(model)?;
    let mut max_gap: f64 = 0.0;
    for &z in grid {
        let lhs = ladder.ladder_ratio_density(z) * fault_factor;
        let rhs = model.levy_tail(z) / (model.premium_rate - model.arrival_rate * ladder.claim_mean);
        let gap = (lhs - rhs).abs() / rhs;
        max_gap = max_gap.max(gap);
    }
    Ok(max_gap)
}
