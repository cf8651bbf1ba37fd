//! Claim-size distributions and their transforms.
//!
//! Two base families are supported:
//!
//! * `Exponential(rate)` — light-tailed, every quantity in closed form. Not
//!   convolution equivalent; it serves as an analytic oracle.
//! * `TiltedPareto(tilt, power, scale)` — survival `(1+x/σ)^{-θ} e^{-tilt·x}`,
//!   a regularly-varying factor under an exponential tilt. For `power > 1`
//!   the exponential moment at the tilt rate is finite, which is the regime
//!   the whole library is built around.
//!
//! `Tilted` wraps a base law under an Esscher change of measure
//! `e^{βx} F(dx) / M(β)`; exponential bases collapse back into the family.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_to_infinity};

const QUAD_ABS_TOL: f64 = 1e-13;
const QUAD_REL_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub enum ClaimDistribution {
    /// Density `rate · e^{-rate·x}` on `x ≥ 0`.
    Exponential { rate: f64 },
    /// Survival `F̄(x) = (1 + x/scale)^{-power} · e^{-tilt·x}` on `x ≥ 0`,
    /// with `tilt > 0`, `power > 1`, `scale > 0`.
    TiltedPareto { tilt: f64, power: f64, scale: f64 },
    /// Esscher transform of a base law: `F'(dx) = e^{beta·x} F(dx) / M(beta)`.
    Tilted { base: Box<ClaimDistribution>, beta: f64 },
}

impl ClaimDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        if rate <= 0.0 || !rate.is_finite() {
            return Err(Error::Config(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(ClaimDistribution::Exponential { rate })
    }

    pub fn tilted_pareto(tilt: f64, power: f64, scale: f64) -> Result<Self> {
        if tilt <= 0.0 || power <= 1.0 || scale <= 0.0 {
            return Err(Error::Config(format!(
                "tilted Pareto requires tilt > 0, power > 1, scale > 0; got ({tilt}, {power}, {scale})"
            )));
        }
        Ok(ClaimDistribution::TiltedPareto { tilt, power, scale })
    }

    /// Abscissa of convergence of the moment generating function. The MGF is
    /// finite strictly below it, and also *at* it for the Pareto family.
    pub fn mgf_abscissa(&self) -> f64 {
        match self {
            ClaimDistribution::Exponential { rate } => *rate,
            ClaimDistribution::TiltedPareto { tilt, .. } => *tilt,
            ClaimDistribution::Tilted { base, beta } => base.mgf_abscissa() - beta,
        }
    }

    /// Whether the MGF is finite at the abscissa itself.
    pub fn mgf_finite_at_abscissa(&self) -> bool {
        match self {
            ClaimDistribution::Exponential { .. } => false,
            ClaimDistribution::TiltedPareto { .. } => true,
            ClaimDistribution::Tilted { base, .. } => base.mgf_finite_at_abscissa(),
        }
    }

    fn check_mgf_domain(&self, beta: f64) -> Result<()> {
        let absc = self.mgf_abscissa();
        let inside = if self.mgf_finite_at_abscissa() { beta <= absc } else { beta < absc };
        if inside {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "mgf argument {beta} at or beyond abscissa of convergence {absc}"
            )))
        }
    }

    /// Survival function `F̄(x)`.
    pub fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        match self {
            ClaimDistribution::Exponential { rate } => (-rate * x).exp(),
            ClaimDistribution::TiltedPareto { tilt, power, scale } => {
                (1.0 + x / scale).powf(-power) * (-tilt * x).exp()
            }
            ClaimDistribution::Tilted { base, beta } => match base.as_ref() {
                ClaimDistribution::TiltedPareto { tilt, power, scale } => {
                    // ∫_x^∞ e^{β y} f(y) dy / M(β), with f the base density
                    let c = tilt - beta;
                    let norm = base.mgf(*beta).expect("tilt inside base domain by construction");
                    let raw = if c.abs() < 1e-14 {
                        // pure algebraic remainder integrates in closed form
                        tilt * scale * (1.0 + x / scale).powf(1.0 - power) / (power - 1.0)
                            + (1.0 + x / scale).powf(-power)
                    } else {
                        let g = pareto_bracket(*tilt, *power, *scale);
                        let f = |y: f64| (-c * y).exp() * g(y);
                        let cap = tilt + power / scale;
                        let bound = |y: f64| {
                            let b = (1.0 + y / scale).powf(-power);
                            let exp_part = cap * b * (-c * y).exp() / c;
                            let alg_part =
                                cap * scale * (1.0 + y / scale).powf(1.0 - power) / (power - 1.0);
                            exp_part.min(alg_part)
                        };
                        integrate_to_infinity(&f, x, *scale, &bound, QUAD_ABS_TOL, QUAD_REL_TOL)
                            .value
                    };
                    (raw / norm).clamp(0.0, 1.0)
                }
                _ => unreachable!("tilted wrapper only ever wraps the Pareto family"),
            },
        }
    }

    /// Density `f(x)` on `x > 0`.
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            ClaimDistribution::Exponential { rate } => rate * (-rate * x).exp(),
            ClaimDistribution::TiltedPareto { tilt, power, scale } => {
                (-tilt * x).exp() * pareto_bracket(*tilt, *power, *scale)(x)
            }
            ClaimDistribution::Tilted { base, beta } => match base.as_ref() {
                // exponents combined first so e^{βx}·e^{-tx} never overflows
                ClaimDistribution::TiltedPareto { tilt, power, scale } => {
                    let norm = base.mgf(*beta).expect("tilt inside base domain");
                    ((beta - tilt) * x).exp() * pareto_bracket(*tilt, *power, *scale)(x) / norm
                }
                _ => unreachable!("tilted wrapper only ever wraps the Pareto family"),
            },
        }
    }

    /// Algebraic (non-exponential) factor of the density: `density(x) =
    /// e^{-decay·x} · algebraic_factor(x)` with `decay = exponential_decay()`.
    pub(crate) fn algebraic_factor(&self, x: f64) -> f64 {
        match self {
            ClaimDistribution::Exponential { rate } => *rate,
            ClaimDistribution::TiltedPareto { tilt, power, scale } => {
                pareto_bracket(*tilt, *power, *scale)(x)
            }
            ClaimDistribution::Tilted { base, beta } => {
                let norm = base.mgf(*beta).expect("tilt inside base domain");
                base.algebraic_factor(x) / norm
            }
        }
    }

    /// The exponential decay rate paired with `algebraic_factor`.
    pub(crate) fn exponential_decay(&self) -> f64 {
        match self {
            ClaimDistribution::Exponential { rate } => *rate,
            ClaimDistribution::TiltedPareto { tilt, .. } => *tilt,
            ClaimDistribution::Tilted { base, beta } => base.exponential_decay() - beta,
        }
    }

    /// Mean `μ_F = ∫ F̄`.
    pub fn mean(&self) -> f64 {
        match self {
            ClaimDistribution::Exponential { rate } => 1.0 / rate,
            ClaimDistribution::TiltedPareto { .. } => {
                // μ_F = ∫ F̄ = I(tilt) with I the algebraic-kernel integral
                self.pareto_kernel_integral(0.0)
            }
            ClaimDistribution::Tilted { base, beta } => {
                let m = base.mgf(*beta).expect("tilt inside base domain");
                base.mgf_d1(*beta).map(|d| d / m).unwrap_or(f64::INFINITY)
            }
        }
    }

    /// `I(c) = ∫_0^∞ e^{-c x} (1+x/σ)^{-θ} dx` for `c = tilt - beta ≥ 0`.
    /// The MGF follows by parts: `M(β) = 1 + β · I(tilt - β)`.
    fn pareto_kernel_integral(&self, beta: f64) -> f64 {
        let ClaimDistribution::TiltedPareto { tilt, power, scale } = self else {
            unreachable!()
        };
        let (t, p, s) = (*tilt, *power, *scale);
        let c = t - beta;
        if c.abs() < 1e-14 {
            return s / (p - 1.0);
        }
        let f = |x: f64| (-c * x).exp() * (1.0 + x / s).powf(-p);
        let bound = |x: f64| {
            let alg = s * (1.0 + x / s).powf(1.0 - p) / (p - 1.0);
            let exp = (-c * x).exp() * (1.0 + x / s).powf(-p) / c;
            alg.min(exp)
        };
        integrate_to_infinity(&f, 0.0, s, &bound, QUAD_ABS_TOL, QUAD_REL_TOL).value
    }

    /// Moment generating function `M(β) = ∫ e^{βx} F(dx)`.
    pub fn mgf(&self, beta: f64) -> Result<f64> {
        self.check_mgf_domain(beta)?;
        match self {
            ClaimDistribution::Exponential { rate } => Ok(rate / (rate - beta)),
            ClaimDistribution::TiltedPareto { .. } => {
                Ok(1.0 + beta * self.pareto_kernel_integral(beta))
            }
            ClaimDistribution::Tilted { base, beta: b0 } => {
                Ok(base.mgf(b0 + beta)? / base.mgf(*b0)?)
            }
        }
    }

    /// MGF continued to complex arguments with `Re β` inside the domain.
    pub fn mgf_complex(&self, beta: Complex64) -> Result<Complex64> {
        self.check_mgf_domain(beta.re)?;
        match self {
            ClaimDistribution::Exponential { rate } => Ok(*rate / (*rate - beta)),
            ClaimDistribution::TiltedPareto { tilt, power, scale } => {
                let (t, p, s) = (*tilt, *power, *scale);
                let c = Complex64::new(t, 0.0) - beta;
                if c.norm() < 1e-14 {
                    return Ok(Complex64::new(1.0 + t * s / (p - 1.0), 0.0));
                }
                let f = |x: f64| (-c * x).exp() * (1.0 + x / s).powf(-p);
                let re_c = c.re;
                let bound = move |x: f64| {
                    let alg = s * (1.0 + x / s).powf(1.0 - p) / (p - 1.0);
                    if re_c > 0.0 {
                        alg.min((-re_c * x).exp() * (1.0 + x / s).powf(-p) / re_c)
                    } else {
                        alg
                    }
                };
                let i = integrate_to_infinity(&f, 0.0, s, &bound, QUAD_ABS_TOL, QUAD_REL_TOL);
                Ok(1.0 + beta * i.value)
            }
            ClaimDistribution::Tilted { base, beta: b0 } => {
                Ok(base.mgf_complex(beta + *b0)? / base.mgf(*b0)?)
            }
        }
    }

    /// First derivative `M'(β) = ∫ x e^{βx} F(dx)`; `+∞` when the moment
    /// diverges at the abscissa (power index ≤ 2).
    pub fn mgf_d1(&self, beta: f64) -> Result<f64> {
        self.check_mgf_domain(beta)?;
        match self {
            ClaimDistribution::Exponential { rate } => Ok(rate / (rate - beta).powi(2)),
            ClaimDistribution::TiltedPareto { tilt, power, scale } => {
                Ok(self.pareto_moment(*tilt, *power, *scale, beta, 1))
            }
            ClaimDistribution::Tilted { base, beta: b0 } => {
                Ok(base.mgf_d1(b0 + beta)? / base.mgf(*b0)?)
            }
        }
    }

    /// Second derivative `M''(β) = ∫ x² e^{βx} F(dx)`; `+∞` when divergent.
    pub fn mgf_d2(&self, beta: f64) -> Result<f64> {
        self.check_mgf_domain(beta)?;
        match self {
            ClaimDistribution::Exponential { rate } => Ok(2.0 * rate / (rate - beta).powi(3)),
            ClaimDistribution::TiltedPareto { tilt, power, scale } => {
                Ok(self.pareto_moment(*tilt, *power, *scale, beta, 2))
            }
            ClaimDistribution::Tilted { base, beta: b0 } => {
                Ok(base.mgf_d2(b0 + beta)? / base.mgf(*b0)?)
            }
        }
    }

    /// `∫ x^k e^{βx} f(x) dx` for the Pareto family, `k ∈ {1, 2}`.
    fn pareto_moment(&self, t: f64, p: f64, s: f64, beta: f64, k: i32) -> f64 {
        let c = t - beta;
        let cap = t + p / s; // bracket(x) ≤ cap · (1+x/s)^{-p}
        if c.abs() < 1e-14 {
            // moment at the abscissa exists only if the algebraic tail allows
            if p <= k as f64 + 1.0 {
                return f64::INFINITY;
            }
        }
        let g = pareto_bracket(t, p, s);
        let f = |x: f64| x.powi(k) * (-c * x).exp() * g(x);
        let bound = move |x: f64| {
            let alg = if p > k as f64 + 1.0 {
                // x^k (1+x/s)^{-p} ≤ s^k (1+x/s)^{k-p}
                cap * s.powi(k) * (1.0 + x / s).powf(k as f64 + 1.0 - p) * s
                    / (p - 1.0 - k as f64)
            } else {
                f64::INFINITY
            };
            let exp = if c > 0.0 {
                let poly = match k {
                    1 => x + 1.0 / c,
                    _ => x * x + 2.0 * x / c + 2.0 / (c * c),
                };
                cap * (-c * x).exp() * poly / c
            } else {
                f64::INFINITY
            };
            alg.min(exp)
        };
        integrate_to_infinity(&f, 0.0, s, &bound, QUAD_ABS_TOL, QUAD_REL_TOL).value
    }

    /// Complex `M'(β)` for Newton steps on the inverse cumulant.
    pub fn mgf_d1_complex(&self, beta: Complex64) -> Result<Complex64> {
        self.check_mgf_domain(beta.re)?;
        match self {
            ClaimDistribution::Exponential { rate } => {
                let d = *rate - beta;
                Ok(*rate / (d * d))
            }
            ClaimDistribution::TiltedPareto { tilt, power, scale } => {
                let (t, p, s) = (*tilt, *power, *scale);
                let c = Complex64::new(t, 0.0) - beta;
                let g = pareto_bracket(t, p, s);
                let f = |x: f64| Complex64::new(x, 0.0) * (-c * x).exp() * g(x);
                let cap = t + p / s;
                let re_c = c.re.max(1e-300);
                let bound = move |x: f64| cap * (-re_c * x).exp() * (x + 1.0 / re_c) / re_c;
                Ok(integrate_to_infinity(&f, 0.0, s, &bound, QUAD_ABS_TOL, QUAD_REL_TOL).value)
            }
            ClaimDistribution::Tilted { base, beta: b0 } => {
                Ok(base.mgf_d1_complex(beta + *b0)? / base.mgf(*b0)?)
            }
        }
    }

    /// Esscher transform by `beta`: the law `e^{βx} F(dx) / M(β)`.
    /// Exponential bases stay in-family; repeated tilts compose.
    pub fn esscher(&self, beta: f64) -> Result<ClaimDistribution> {
        if beta == 0.0 {
            return Ok(self.clone());
        }
        self.check_mgf_domain(beta)?;
        Ok(match self {
            ClaimDistribution::Exponential { rate } => {
                ClaimDistribution::Exponential { rate: rate - beta }
            }
            ClaimDistribution::TiltedPareto { .. } => {
                ClaimDistribution::Tilted { base: Box::new(self.clone()), beta }
            }
            ClaimDistribution::Tilted { base, beta: b0 } => {
                ClaimDistribution::Tilted { base: base.clone(), beta: b0 + beta }
            }
        })
    }

    // ── Sampling ─────────────────────────────────────────────────────────

    /// Draw one claim. Pareto draws use acceptance-rejection against
    /// `Exp(tilt)` with envelope constant `(tilt + power/scale)/tilt`; tilted
    /// Pareto draws use the exact two-component Lomax mixture thinned by the
    /// residual exponential factor.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_with_attempts(rng).0
    }

    /// As `sample`, additionally reporting proposal attempts (for envelope
    /// acceptance-rate diagnostics).
    pub fn sample_with_attempts<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, u32) {
        match self {
            ClaimDistribution::Exponential { rate } => (sample_exp(rng, *rate), 1),
            ClaimDistribution::TiltedPareto { tilt, power, scale } => {
                let cap = tilt + power / scale;
                let g = pareto_bracket(*tilt, *power, *scale);
                let mut attempts = 0u32;
                loop {
                    attempts += 1;
                    let x = sample_exp(rng, *tilt);
                    let v: f64 = rng.random();
                    if v * cap <= g(x) {
                        return (x, attempts);
                    }
                }
            }
            ClaimDistribution::Tilted { base, beta } => match base.as_ref() {
                ClaimDistribution::TiltedPareto { tilt, power, scale } => {
                    let c = tilt - beta;
                    let mut attempts = 0u32;
                    loop {
                        attempts += 1;
                        let x = sample_full_tilt_mixture(rng, *tilt, *power, *scale);
                        if c.abs() < 1e-14 {
                            return (x, attempts);
                        }
                        let v: f64 = rng.random();
                        if v <= (-c * x).exp() {
                            return (x, attempts);
                        }
                    }
                }
                _ => unreachable!("tilted wrapper only ever wraps the Pareto family"),
            },
        }
    }

    /// Draw from the integrated-tail law with density `F̄(x)/μ_F`
    /// (the single-ladder-height law). Base families only.
    pub fn sample_integrated_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match self {
            ClaimDistribution::Exponential { rate } => Ok(sample_exp(rng, *rate)),
            ClaimDistribution::TiltedPareto { tilt, power, scale } => loop {
                let x = sample_exp(rng, *tilt);
                let v: f64 = rng.random();
                if v <= (1.0 + x / scale).powf(-power) {
                    return Ok(x);
                }
            },
            ClaimDistribution::Tilted { .. } => Err(Error::Config(
                "integrated-tail sampling is defined for base claim families only".into(),
            )),
        }
    }

    /// Numeric CDF (quadrature of the density); used by goodness-of-fit tests.
    pub fn cdf_numeric(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let f = |y: f64| self.density(y);
        integrate(&f, 0.0, x, 1e-11, 1e-9).value.clamp(0.0, 1.0)
    }
}

/// The algebraic factor of the Pareto density:
/// `bracket(x) = tilt·(1+x/s)^{-p} + (p/s)·(1+x/s)^{-p-1}`, so that
/// `f(x) = e^{-tilt·x} · bracket(x)`.
fn pareto_bracket(tilt: f64, power: f64, scale: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| {
        let b = 1.0 + x / scale;
        tilt * b.powf(-power) + (power / scale) * b.powf(-power - 1.0)
    }
}

/// Inverse-CDF exponential draw; uses `1-U ∈ (0,1]` so `ln` never sees zero.
pub(crate) fn sample_exp<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Lomax(shape, scale) by inverse CDF: `x = scale·((1-U)^{-1/shape} - 1)`.
fn sample_lomax<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    let u: f64 = rng.random();
    scale * ((1.0 - u).powf(-1.0 / shape) - 1.0)
}

/// Exact draw from the Pareto law tilted all the way to its abscissa:
/// density ∝ `tilt·(1+x/s)^{-p} + (p/s)(1+x/s)^{-p-1}`, a two-component
/// Lomax mixture with weights `tσ/(p-1) : 1`.
fn sample_full_tilt_mixture<R: Rng + ?Sized>(rng: &mut R, t: f64, p: f64, s: f64) -> f64 {
    let w_heavy = t * s / (p - 1.0);
    let u: f64 = rng.random();
    if u * (w_heavy + 1.0) < w_heavy {
        sample_lomax(rng, p - 1.0, s)
    } else {
        sample_lomax(rng, p, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn tp(t: f64, p: f64, s: f64) -> ClaimDistribution {
        ClaimDistribution::tilted_pareto(t, p, s).unwrap()
    }

    // Frozen quadrature-oracle values (30-digit independent computation).
    const MU_F_TP121: f64 = 0.40365263767680592566;
    const MGF_TP121_AT_05: f64 = 1.2692723418790673828;

    #[test]
    fn exponential_mgf_closed_form() {
        let d = ClaimDistribution::exponential(1.0).unwrap();
        assert_eq!(d.mgf(0.0).unwrap(), 1.0);
        assert!((d.mgf(0.5).unwrap() - 2.0).abs() < 1e-14);
        assert!(d.mgf(1.0).is_err());
        assert!(d.mgf(1.5).is_err());
    }

    #[test]
    fn pareto_mgf_against_oracle() {
        let d = tp(1.0, 2.0, 1.0);
        // at the abscissa the kernel closes to 1 + tσ/(θ-1) = 2
        assert!((d.mgf(1.0).unwrap() - 2.0).abs() < 1e-10);
        assert!((d.mgf(0.5).unwrap() - MGF_TP121_AT_05).abs() < 1e-9);
        assert!((d.mgf(0.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(d.mgf(1.0 + 1e-9).is_err());
    }

    #[test]
    fn pareto_mean_against_oracle() {
        let d = tp(1.0, 2.0, 1.0);
        assert!((d.mean() - MU_F_TP121).abs() < 1e-10);
        let d = tp(1.0, 2.5, 1.0);
        assert!((d.mean() - 0.34382954152174947472).abs() < 1e-10);
    }

    #[test]
    fn tail_properties() {
        for d in [ClaimDistribution::exponential(1.3).unwrap(), tp(1.0, 2.0, 1.0)] {
            assert_eq!(d.tail(0.0), 1.0);
            let mut prev = 1.0;
            for i in 1..60 {
                let x = i as f64 * 0.5;
                let t = d.tail(x);
                assert!(t <= prev + 1e-15, "tail must be nonincreasing");
                prev = t;
            }
            assert!(prev < 1e-8);
        }
    }

    #[test]
    fn mgf_complex_matches_real_on_axis() {
        let d = tp(1.0, 2.5, 1.0);
        for &b in &[-1.0, -0.25, 0.3, 0.9] {
            let re = d.mgf(b).unwrap();
            let co = d.mgf_complex(Complex64::new(b, 0.0)).unwrap();
            assert!((co.re - re).abs() < 1e-9, "β={b}: {} vs {re}", co.re);
            assert!(co.im.abs() < 1e-10);
        }
    }

    #[test]
    fn esscher_composition_identity() {
        // M_tilted(β) · M(α) = M(α+β)
        let d = tp(1.0, 2.0, 1.0);
        let tilted = d.esscher(0.4).unwrap();
        for &b in &[-0.5, 0.1, 0.3, 0.6] {
            let lhs = tilted.mgf(b).unwrap() * d.mgf(0.4).unwrap();
            let rhs = d.mgf(1.0_f64.min(0.4 + b)).unwrap();
            if 0.4 + b <= 1.0 {
                assert!(
                    (lhs - rhs).abs() / rhs.abs() < 1e-8,
                    "composition at β={b}: {lhs} vs {rhs}"
                );
            }
        }
    }

    #[test]
    fn esscher_of_exponential_stays_exponential() {
        let d = ClaimDistribution::exponential(1.0).unwrap();
        let t = d.esscher(0.5).unwrap();
        assert_eq!(t, ClaimDistribution::Exponential { rate: 0.5 });
        // identity tilt
        assert_eq!(d.esscher(0.0).unwrap(), d);
    }

    #[test]
    fn pareto_sampler_acceptance_rate() {
        // envelope constant (t + p/s)/t = 3 for (1,2,1): acceptance 1/3
        let d = tp(1.0, 2.0, 1.0);
        let mut rng = substream(7, 0);
        let n = 200_000u32;
        let mut attempts = 0u64;
        for _ in 0..n {
            attempts += d.sample_with_attempts(&mut rng).1 as u64;
        }
        let rate = n as f64 / attempts as f64;
        assert!((rate - 1.0 / 3.0).abs() < 0.005, "acceptance rate {rate}");
    }

    #[test]
    fn pareto_sample_mean_matches_quadrature() {
        let d = tp(1.0, 2.0, 1.0);
        let mut rng = substream(11, 0);
        let n = 1_000_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = d.sample(&mut rng);
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let se = ((sumsq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!(
            (mean - MU_F_TP121).abs() < 3.0 * se,
            "mean {mean} vs {MU_F_TP121} (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn tilted_pareto_sampler_gof() {
        // Full-tilt mixture + thinning must reproduce the tilted law; compare
        // binned counts against quadrature cell masses (chi-square, df=15,
        // 0.999 critical value 37.70).
        let base = tp(1.0, 2.0, 1.0);
        for &beta in &[1.0, 0.6] {
            let d = base.esscher(beta).unwrap();
            let edges: Vec<f64> = (1..16).map(|i| i as f64 * 0.35).collect();
            let mut expected = Vec::new();
            let mut cdf_prev = 0.0;
            for &e in &edges {
                let c = d.cdf_numeric(e);
                expected.push(c - cdf_prev);
                cdf_prev = c;
            }
            expected.push(1.0 - cdf_prev);

            let n = 1_000_000usize;
            let mut counts = vec![0u64; expected.len()];
            let mut rng = substream(23, 0);
            for _ in 0..n {
                let x = d.sample(&mut rng);
                let k = edges.partition_point(|&e| e < x);
                counts[k] += 1;
            }
            let chi2: f64 = counts
                .iter()
                .zip(&expected)
                .map(|(&o, &p)| {
                    let e = p * n as f64;
                    (o as f64 - e) * (o as f64 - e) / e
                })
                .sum();
            assert!(chi2 < 37.70, "tilt {beta}: chi2 = {chi2}");
        }
    }

    #[test]
    fn integrated_tail_of_exponential_is_exponential() {
        let d = ClaimDistribution::exponential(2.0).unwrap();
        let mut rng = substream(3, 0);
        let n = 400_000;
        let mean: f64 =
            (0..n).map(|_| d.sample_integrated_tail(&mut rng).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.005);
    }
}
