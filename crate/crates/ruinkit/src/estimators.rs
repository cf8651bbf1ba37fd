//! Monte Carlo estimators over exact paths: tilted supremum transforms,
//! finite-horizon ruin probabilities (direct or exponentially tilted), and
//! marginal tail probabilities. All of them run on counter-based replica
//! streams, so results are bit-identical for any worker count.

use crate::error::{Error, Result};
use crate::fluctuation;
use crate::model::RiskModel;
use crate::path::{sample_path, simulate_passage};
use crate::rng::{run_replicas, run_scalar, McEstimate, ScalarStats};

/// Importance-sampling mode for rare-event estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Importance {
    None,
    /// Simulate under the Esscher transform at the given tilt and reweight
    /// each hit by `exp(-tilt·X_τ + ψ(tilt)·τ)`.
    Esscher { alpha: f64 },
}

/// `E e^{α X̄_t}` by direct Monte Carlo over exact paths.
pub fn estimate_sup_mgf(
    model: &RiskModel,
    alpha: f64,
    t: f64,
    replicas: u64,
    seed: u64,
) -> Result<McEstimate> {
    Ok(estimate_sup_mgf_profile(model, alpha, &[t], replicas, seed)?.pop().unwrap())
}

/// `E e^{α X̄_t}` at several horizons sharing one path set per replica.
/// Horizons must be ascending; the paths are simulated to the largest one.
pub fn estimate_sup_mgf_profile(
    model: &RiskModel,
    alpha: f64,
    ts: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    model.claims.mgf(alpha)?; // ψ(α) must be finite
    if ts.is_empty() || ts.windows(2).any(|w| w[0] > w[1]) || ts[0] < 0.0 {
        return Err(Error::Config("horizons must be ascending and non-negative".into()));
    }
    let horizon = *ts.last().unwrap();
    let k = ts.len();
    let stats = run_replicas(
        replicas,
        seed,
        || vec![ScalarStats::default(); k],
        |acc, rng, _| {
            let path = sample_path(model, horizon, rng);
            for (s, sup) in acc.iter_mut().zip(path.running_sup_multi(ts)) {
                s.push((alpha * sup).exp());
            }
        },
        |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect(),
    );
    Ok(stats
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.into_estimate(seed, format!("sup-mgf(t={})", ts[i])))
        .collect())
}

/// One recorded passage event under the simulation measure.
#[derive(Debug, Clone, Copy)]
pub struct RuinEvent {
    pub replica: u64,
    pub time: f64,
    /// Position at passage, `X_τ = u + overshoot`.
    pub value_at_passage: f64,
    /// Importance weight (1 under direct simulation).
    pub weight: f64,
}

/// Simulate every replica to first passage over `u` (or to the horizon) and
/// return the passage events in replica order. Under `Esscher` tilting the
/// weights make the events an unbiased weighted sample of ruin paths.
pub fn ruin_events(
    model: &RiskModel,
    u: f64,
    horizon: f64,
    replicas: u64,
    seed: u64,
    importance: Importance,
) -> Result<Vec<RuinEvent>> {
    let (sim_model, weight_fn): (RiskModel, Box<dyn Fn(f64, f64) -> f64 + Sync>) =
        match importance {
            Importance::None => (model.clone(), Box::new(|_, _| 1.0)),
            Importance::Esscher { alpha } => {
                let tilted = model.esscher(alpha).map_err(|e| {
                    Error::Config(format!("importance-sampling tilt unusable: {e}"))
                })?;
                let psi = model.cumulant(alpha)?;
                (tilted, Box::new(move |tau: f64, x_tau: f64| (-alpha * x_tau + psi * tau).exp()))
            }
        };
    let events = run_replicas(
        replicas,
        seed,
        Vec::new,
        |acc: &mut Vec<RuinEvent>, rng, i| {
            if let Some((tau, x_tau)) = simulate_passage(&sim_model, 0.0, u, horizon, rng) {
                acc.push(RuinEvent {
                    replica: i,
                    time: tau,
                    value_at_passage: x_tau,
                    weight: weight_fn(tau, x_tau),
                });
            }
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    Ok(events)
}

/// `P(τ(u) < T)` by direct simulation or Esscher importance sampling.
pub fn estimate_ruin_prob(
    model: &RiskModel,
    u: f64,
    horizon: f64,
    replicas: u64,
    seed: u64,
    importance: Importance,
) -> Result<McEstimate> {
    let events = ruin_events(model, u, horizon, replicas, seed, importance)?;
    let mut stats = ScalarStats::default();
    let mut next = 0usize;
    for i in 0..replicas {
        if next < events.len() && events[next].replica == i {
            stats.push(events[next].weight);
            next += 1;
        } else {
            stats.push(0.0);
        }
    }
    let method = match importance {
        Importance::None => {
            if stats.hits == 0 {
                "ruin-direct (no hits)".to_string()
            } else {
                "ruin-direct".to_string()
            }
        }
        Importance::Esscher { alpha } => format!("ruin-esscher-is(alpha={alpha})"),
    };
    Ok(stats.into_estimate(seed, method))
}

/// `P(X_T > u)` by direct simulation or Esscher importance sampling with the
/// endpoint weight `exp(-α X_T + ψ(α) T)`.
pub fn estimate_tail_prob(
    model: &RiskModel,
    u: f64,
    horizon: f64,
    replicas: u64,
    seed: u64,
    importance: Importance,
) -> Result<McEstimate> {
    let stats = match importance {
        Importance::None => run_scalar(replicas, seed, |rng, _| {
            let path = sample_path(model, horizon, rng);
            let x_t = path.value_at(horizon);
            if x_t > u {
                1.0
            } else {
                0.0
            }
        }),
        Importance::Esscher { alpha } => {
            let tilted = model
                .esscher(alpha)
                .map_err(|e| Error::Config(format!("importance-sampling tilt unusable: {e}")))?;
            let psi = model.cumulant(alpha)?;
            run_scalar(replicas, seed, move |rng, _| {
                let path = sample_path(&tilted, horizon, rng);
                let x_t = path.value_at(horizon);
                if x_t > u {
                    (-alpha * x_t + psi * horizon).exp()
                } else {
                    0.0
                }
            })
        }
    };
    let method = match importance {
        Importance::None => "tail-direct".to_string(),
        Importance::Esscher { alpha } => format!("tail-esscher-is(alpha={alpha})"),
    };
    Ok(stats.into_estimate(seed, method))
}

/// Finite surrogate horizon for an infinite-horizon ruin query, with a
/// certified bound on the neglected mass:
/// `P(T ≤ τ(u) < ∞) ≤ inf_w e^{ψ(w)T − w·u} · E e^{w X̄_∞}` over tilts with
/// `ψ(w) < 0`. Returns the smallest horizon whose bound is below
/// `tail_fraction · estimate_hint`.
pub fn surrogate_horizon(
    model: &RiskModel,
    u: f64,
    tail_fraction: f64,
    estimate_hint: f64,
) -> Result<f64> {
    if model.mean_increment() >= 0.0 {
        return Err(Error::Regime(
            "infinite-horizon surrogate needs negative drift (EX_1 < 0)".into(),
        ));
    }
    let target = (tail_fraction * estimate_hint).max(f64::MIN_POSITIVE);
    let absc = model.claims.mgf_abscissa();
    let mut best: Option<f64> = None;
    for k in 1..60 {
        let w = absc * k as f64 / 60.0;
        let Ok(psi) = model.cumulant(w) else { break };
        if psi >= 0.0 {
            continue;
        }
        let Ok(fluctuation::SupMgfAtInfinity::Finite(m_inf)) =
            fluctuation::sup_mgf_infinity(model, w)
        else {
            continue;
        };
        // e^{ψ(w)T - w u} m_inf = target
        let t = (target.ln() + w * u - m_inf.ln()) / psi;
        if t.is_finite() {
            let t = t.max(1.0);
            best = Some(best.map_or(t, |b: f64| b.min(t)));
        }
    }
    best.ok_or_else(|| Error::Budget("no tilt certifies the surrogate horizon".into()))
}
