//! Compound-Poisson-with-drift risk model and its analytic functions.
//!
//! The claim surplus process is `X_t = Σ_{i ≤ N_t} U_i − p·t` with `N` a rate
//! `λ` Poisson process, claims `U_i ≥ 0` i.i.d., and premium rate `p`. Its
//! cumulant is `ψ(β) = λ(M_U(β) − 1) − pβ`, convex with `ψ(0) = 0`.

use num_complex::Complex64;
use serde::Serialize;

use crate::claims::ClaimDistribution;
use crate::error::{Error, Result};

/// Root-finding tolerance for the Lundberg root and the inverse cumulant.
pub const ROOT_TOL: f64 = 1e-12;

/// |ψ(α)| below this counts as the critical (Cramér) regime.
pub const PSI_CRITICAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct RiskModel {
    /// Claim arrival rate λ > 0.
    pub arrival_rate: f64,
    /// Premium rate p; positive in the insurance case, `p ≤ 0` gives a
    /// subordinator (p = 0) or an upward-drifting process (p < 0).
    pub premium_rate: f64,
    pub claims: ClaimDistribution,
}

/// Sign regime of ψ at the analysis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

/// Diagnostics of the cumulant at one analysis index.
#[derive(Debug, Clone, Serialize)]
pub struct CumulantInfo {
    pub alpha: f64,
    pub psi: f64,
    pub regime: Regime,
    pub lundberg_root: Option<f64>,
    pub mgf_abscissa: f64,
}

impl RiskModel {
    pub fn new(arrival_rate: f64, premium_rate: f64, claims: ClaimDistribution) -> Result<Self> {
        if arrival_rate <= 0.0 || !arrival_rate.is_finite() {
            return Err(Error::Config(format!(
                "claim arrival rate must be positive, got {arrival_rate}"
            )));
        }
        if !premium_rate.is_finite() {
            return Err(Error::Config("premium rate must be finite".into()));
        }
        Ok(RiskModel { arrival_rate, premium_rate, claims })
    }

    /// Mean drift `EX_1 = λ μ_F − p`.
    pub fn mean_increment(&self) -> f64 {
        self.arrival_rate * self.claims.mean() - self.premium_rate
    }

    /// Cumulant `ψ(β) = λ(M_U(β) − 1) − pβ`.
    pub fn cumulant(&self, beta: f64) -> Result<f64> {
        Ok(self.arrival_rate * (self.claims.mgf(beta)? - 1.0) - self.premium_rate * beta)
    }

    /// `ψ'(β) = λ M_U'(β) − p`.
    pub fn cumulant_d1(&self, beta: f64) -> Result<f64> {
        Ok(self.arrival_rate * self.claims.mgf_d1(beta)? - self.premium_rate)
    }

    /// `ψ''(β) = λ M_U''(β)`.
    pub fn cumulant_d2(&self, beta: f64) -> Result<f64> {
        Ok(self.arrival_rate * self.claims.mgf_d2(beta)?)
    }

    pub fn cumulant_complex(&self, beta: Complex64) -> Result<Complex64> {
        Ok(self.arrival_rate * (self.claims.mgf_complex(beta)? - 1.0)
            - self.premium_rate * beta)
    }

    fn cumulant_d1_complex(&self, beta: Complex64) -> Result<Complex64> {
        Ok(self.arrival_rate * self.claims.mgf_d1_complex(beta)? - self.premium_rate)
    }

    /// Lévy measure tail `Π̄⁺(u) = λ F̄(u)`.
    pub fn levy_tail(&self, u: f64) -> f64 {
        self.arrival_rate * self.claims.tail(u)
    }

    /// Positive root of `ψ(ν) = 0` strictly inside the MGF domain, if any.
    ///
    /// Absence is a valid answer: it covers the large-premium
    /// convolution-equivalent regime (ψ < 0 up to the abscissa) and every
    /// model with non-negative drift.
    pub fn lundberg_root(&self) -> Option<f64> {
        if self.mean_increment() >= 0.0 {
            // ψ ≥ 0 on (0, ∞) by convexity: no positive root
            return None;
        }
        let absc = self.claims.mgf_abscissa();
        // find β_hi with ψ(β_hi) > 0, approaching the abscissa
        let mut hi = None;
        if self.claims.mgf_finite_at_abscissa() {
            if let Ok(v) = self.cumulant(absc) {
                if v > 0.0 {
                    hi = Some(absc);
                }
            }
        }
        if hi.is_none() {
            for k in 1..53 {
                let b = absc * (1.0 - 0.5f64.powi(k));
                match self.cumulant(b) {
                    Ok(v) if v > 0.0 => {
                        hi = Some(b);
                        break;
                    }
                    Ok(_) => {}
                    Err(_) => break,
                }
            }
        }
        let hi = hi?;
        // ψ < 0 just right of 0 (negative drift); halve until inside
        let mut lo = hi * 0.5;
        for _ in 0..200 {
            match self.cumulant(lo) {
                Ok(v) if v < 0.0 => break,
                _ => lo *= 0.5,
            }
            if lo < f64::MIN_POSITIVE {
                return None;
            }
        }
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            if hi - lo <= ROOT_TOL * 0.5 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match self.cumulant(mid) {
                Ok(v) if v < 0.0 => lo = mid,
                Ok(_) => hi = mid,
                Err(_) => hi = mid,
            }
        }
        let root = 0.5 * (lo + hi);
        (root > 0.0 && root < absc).then_some(root)
    }

    /// Inverse of ψ restricted to its decreasing branch on `(−∞, 0]`:
    /// returns `φ(δ) ≤ 0` with `ψ(φ(δ)) = δ` for `δ ≥ 0`. Needs `p > 0`.
    pub fn phi_inverse(&self, delta: f64) -> Result<f64> {
        if self.premium_rate <= 0.0 {
            return Err(Error::Domain(
                "inverse cumulant needs a positive premium rate (spectrally positive case)".into(),
            ));
        }
        if delta < 0.0 {
            return Err(Error::Domain(format!("inverse cumulant argument must be ≥ 0, got {delta}")));
        }
        if delta == 0.0 && self.mean_increment() < 0.0 {
            return Ok(0.0);
        }
        // Right end of the decreasing branch: 0 when EX_1 < 0, else the
        // argmin of ψ on (−∞, 0].
        let hi = if self.mean_increment() < 0.0 {
            0.0
        } else {
            let mut lo = -1.0;
            while self.cumulant_d1(lo).map(|d| d >= 0.0).unwrap_or(false) {
                lo *= 2.0;
                if lo < -1e12 {
                    return Err(Error::Domain("cumulant derivative never negative".into()));
                }
            }
            let (mut a, mut b) = (lo, 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if self.cumulant_d1(mid).map(|d| d < 0.0).unwrap_or(true) {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a < 1e-14 * (1.0 + a.abs()) {
                    break;
                }
            }
            a
        };
        // ψ(−L) ≥ pL − λ ≥ δ for L large enough
        let lo = -((delta + self.arrival_rate) / self.premium_rate + 1.0);
        let (mut a, mut b) = (lo, hi);
        // safeguarded Newton on g(β) = ψ(β) − δ
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let g = self.cumulant(x)? - delta;
            if g.abs() <= ROOT_TOL * 0.1 {
                return Ok(x);
            }
            if g > 0.0 {
                a = x; // left of root (ψ decreasing)
            } else {
                b = x;
            }
            let d = self.cumulant_d1(x)?;
            let newton = x - g / d;
            x = if d < 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if b - a < 1e-16 * (1.0 + a.abs()) {
                break;
            }
        }
        let g = self.cumulant(x)? - delta;
        if g.abs() <= 1e-10 {
            Ok(x)
        } else {
            Err(Error::Domain(format!("inverse cumulant failed to converge at δ={delta}")))
        }
    }

    /// Complex continuation of `phi_inverse`, used along Laplace inversion
    /// contours. `start` should be a nearby branch point (path continuation).
    pub fn phi_inverse_complex(&self, delta: Complex64, start: Complex64) -> Result<Complex64> {
        let mut z = start;
        for _ in 0..100 {
            let g = self.cumulant_complex(z)? - delta;
            if g.norm() <= 1e-11 * (1.0 + delta.norm()) {
                return Ok(z);
            }
            let d = self.cumulant_d1_complex(z)?;
            if d.norm() < 1e-300 {
                break;
            }
            let mut step = g / d;
            // damp huge steps to stay on the branch
            let cap = 1.0 + z.norm();
            if step.norm() > cap {
                step *= cap / step.norm();
            }
            z -= step;
            if z.re > -1e-12 {
                z = Complex64::new(-1e-12, z.im);
            }
        }
        let g = (self.cumulant_complex(z)? - delta).norm();
        if g <= 1e-8 * (1.0 + delta.norm()) {
            Ok(z)
        } else {
            Err(Error::Domain(format!(
                "complex inverse cumulant failed to converge at δ={delta} (residual {g:.2e})"
            )))
        }
    }

    /// Esscher transform at tilt `α`: arrival rate becomes `λ M_U(α)`, the
    /// claim law is tilted by `e^{αx}`, the premium rate is unchanged.
    pub fn esscher(&self, alpha: f64) -> Result<RiskModel> {
        if alpha == 0.0 {
            return Ok(self.clone());
        }
        let m = self.claims.mgf(alpha)?;
        Ok(RiskModel {
            arrival_rate: self.arrival_rate * m,
            premium_rate: self.premium_rate,
            claims: self.claims.esscher(alpha)?,
        })
    }

    /// Regime diagnostics at the analysis index.
    pub fn cumulant_info(&self, alpha: f64) -> Result<CumulantInfo> {
        let psi = self.cumulant(alpha)?;
        let regime = if psi.abs() <= PSI_CRITICAL_TOL {
            Regime::Critical
        } else if psi < 0.0 {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        };
        Ok(CumulantInfo {
            alpha,
            psi,
            regime,
            lundberg_root: self.lundberg_root(),
            mgf_abscissa: self.claims.mgf_abscissa(),
        })
    }
}
