//! Exact event-driven simulation of compound-Poisson-with-drift paths.
//!
//! No time grid anywhere: a path is its jump epochs, jump sizes and drift
//! rate, and the running supremum / first passage time are computed exactly
//! from the piecewise-linear structure. For `p > 0` the path falls between
//! jumps, so suprema sit at post-jump points; for `p ≤ 0` it rises (or is
//! flat) between jumps and segment endpoints must be examined too.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::claims::sample_exp;
use crate::model::RiskModel;

#[derive(Debug, Clone)]
pub struct PathSample {
    pub horizon: f64,
    /// Jump epochs, strictly increasing in (0, horizon].
    pub times: Vec<f64>,
    /// Jump sizes, positive.
    pub sizes: Vec<f64>,
    /// Premium rate p; the path drifts at −p between jumps.
    pub premium_rate: f64,
    /// Starting level (0 for the surplus process itself).
    pub start: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingMode {
    Jump,
    Drift,
}

#[derive(Debug, Clone, Copy)]
pub struct PassageEvent {
    pub time: f64,
    /// `X_τ − u ≥ 0`; strictly positive for jump crossings.
    pub overshoot: f64,
    pub mode: CrossingMode,
    /// Supremum strictly before the passage time.
    pub pre_sup: f64,
}

/// Draw one exact path on `[0, horizon]`: jump count `Poisson(λT)`, epochs
/// i.i.d. uniform (sorted), sizes i.i.d. from the claim law.
pub fn sample_path<R: Rng + ?Sized>(model: &RiskModel, horizon: f64, rng: &mut R) -> PathSample {
    let mean = model.arrival_rate * horizon;
    let n = if mean > 0.0 {
        Poisson::new(mean).expect("valid Poisson mean").sample(rng) as usize
    } else {
        0
    };
    let mut times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * horizon).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sizes: Vec<f64> = (0..n).map(|_| model.claims.sample(rng)).collect();
    PathSample { horizon, times, sizes, premium_rate: model.premium_rate, start: 0.0 }
}

impl PathSample {
    /// Path value at `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0 && t <= self.horizon + 1e-12);
        let mut v = self.start - self.premium_rate * t;
        for (ti, ui) in self.times.iter().zip(&self.sizes) {
            if *ti <= t {
                v += ui;
            } else {
                break;
            }
        }
        v
    }

    /// Exact running supremum over `[0, t]`.
    pub fn running_sup(&self, t: f64) -> f64 {
        self.running_sup_multi(&[t])[0]
    }

    /// Exact running suprema at several horizons (ascending), one pass.
    pub fn running_sup_multi(&self, ts: &[f64]) -> Vec<f64> {
        debug_assert!(ts.windows(2).all(|w| w[0] <= w[1]));
        let p = self.premium_rate;
        let mut out = Vec::with_capacity(ts.len());
        let mut sup = self.start; // value at time 0
        let mut cum = self.start;
        let mut k = 0usize;
        for &t in ts {
            while k < self.times.len() && self.times[k] <= t {
                cum += self.sizes[k];
                let post = cum - p * self.times[k];
                if post > sup {
                    sup = post;
                }
                k += 1;
            }
            let here = if p < 0.0 {
                // rising drift: the right endpoint is a candidate
                sup.max(cum - p * t)
            } else {
                sup
            };
            out.push(here);
        }
        out
    }

    /// Exact first time the path exceeds `level`, with overshoot, crossing
    /// mode and the supremum strictly before passage.
    pub fn first_passage(&self, level: f64) -> Option<PassageEvent> {
        let p = self.premium_rate;
        let mut pre_sup = self.start;
        let mut cum = self.start;
        let mut prev_t = 0.0;
        for (ti, ui) in self.times.iter().zip(&self.sizes) {
            // segment (prev_t, ti): value cum − p·s
            if p < 0.0 {
                let seg_end = cum - p * ti;
                if seg_end > level {
                    let t_star = (level - cum) / (-p);
                    if t_star >= prev_t && t_star <= *ti {
                        // continuous approach from below: sup before τ is the level
                        return Some(PassageEvent {
                            time: t_star,
                            overshoot: 0.0,
                            mode: CrossingMode::Drift,
                            pre_sup: level,
                        });
                    }
                }
            }
            let pre_jump = cum - p * ti;
            let post = pre_jump + ui;
            if post > level {
                // supremum strictly before τ: rising segments end at pre_jump
                let before = if p < 0.0 { pre_sup.max(pre_jump) } else { pre_sup };
                return Some(PassageEvent {
                    time: *ti,
                    overshoot: post - level,
                    mode: CrossingMode::Jump,
                    pre_sup: before,
                });
            }
            cum += ui;
            if post > pre_sup {
                pre_sup = post;
            }
            if p < 0.0 && pre_jump > pre_sup {
                pre_sup = pre_jump;
            }
            prev_t = *ti;
        }
        if p < 0.0 {
            let end = cum - p * self.horizon;
            if end > level {
                let t_star = (level - cum) / (-p);
                if t_star >= prev_t && t_star <= self.horizon {
                    return Some(PassageEvent {
                        time: t_star,
                        overshoot: 0.0,
                        mode: CrossingMode::Drift,
                        pre_sup: level,
                    });
                }
            }
        }
        None
    }
}

/// Sequential simulation straight to first passage over `level`, stopping at
/// `horizon`. Avoids materializing the path; exact in distribution.
/// Returns `(τ, X_τ)` if passage happens before the horizon.
pub fn simulate_passage<R: Rng + ?Sized>(
    model: &RiskModel,
    start: f64,
    level: f64,
    horizon: f64,
    rng: &mut R,
) -> Option<(f64, f64)> {
    let p = model.premium_rate;
    let lam = model.arrival_rate;
    let mut t = 0.0;
    let mut v = start;
    if v > level {
        return Some((0.0, v));
    }
    loop {
        let gap = sample_exp(rng, lam);
        let t_next = t + gap;
        if p < 0.0 {
            // rising segment may cross before the next jump or the horizon
            let seg_end_t = t_next.min(horizon);
            let seg_end_v = v - p * (seg_end_t - t);
            if seg_end_v > level {
                let t_star = t + (level - v) / (-p);
                if t_star <= horizon {
                    return Some((t_star, level));
                }
            }
        }
        if t_next >= horizon {
            return None;
        }
        v -= p * gap;
        v += model.claims.sample(rng);
        t = t_next;
        if v > level {
            return Some((t, v));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::ClaimDistribution;
    use crate::rng::substream;

    fn path(times: Vec<f64>, sizes: Vec<f64>, p: f64, horizon: f64) -> PathSample {
        PathSample { horizon, times, sizes, premium_rate: p, start: 0.0 }
    }

    // ── Hand-built exactness checks (no tolerance) ──────────────────────

    #[test]
    fn sup_of_empty_decreasing_path_is_zero() {
        let s = path(vec![], vec![], 1.0, 2.0);
        assert_eq!(s.running_sup(2.0), 0.0);
    }

    #[test]
    fn sup_single_jump() {
        // one jump u=3 at t=1 against drift p=1: sup over [0,2] is 3−1=2
        let s = path(vec![1.0], vec![3.0], 1.0, 2.0);
        assert_eq!(s.running_sup(2.0), 2.0);
        assert_eq!(s.running_sup(0.5), 0.0);
    }

    #[test]
    fn sup_upward_drift_endpoint() {
        let s = path(vec![], vec![], -1.0, 2.0);
        assert_eq!(s.running_sup(2.0), 2.0);
    }

    #[test]
    fn three_jump_path_exact() {
        // p = 1; jumps: (0.5, 2.0), (1.0, 0.25), (3.0, 4.0)
        // values after jumps: 1.5, 0.75, 1.75+... cum=2.25 at t=1 → 1.25; at t=3 cum=6.25 → 3.25
        let s = path(vec![0.5, 1.0, 3.0], vec![2.0, 0.25, 4.0], 1.0, 4.0);
        assert_eq!(s.running_sup(0.75), 1.5);
        assert_eq!(s.running_sup(2.0), 1.5);
        assert_eq!(s.running_sup(4.0), 3.25);
        assert_eq!(s.value_at(4.0), 6.25 - 4.0);

        let e = s.first_passage(3.0).unwrap();
        assert_eq!(e.time, 3.0);
        assert_eq!(e.overshoot, 0.25);
        assert_eq!(e.mode, CrossingMode::Jump);
        assert_eq!(e.pre_sup, 1.5);

        assert!(s.first_passage(3.5).is_none());
    }

    #[test]
    fn passage_one_jump() {
        let s = path(vec![1.0], vec![3.0], 1.0, 2.0);
        let e = s.first_passage(1.5).unwrap();
        assert_eq!(e.time, 1.0);
        assert_eq!(e.overshoot, 0.5);
        assert_eq!(e.mode, CrossingMode::Jump);
    }

    #[test]
    fn passage_no_jumps_absent() {
        let s = path(vec![], vec![], 1.0, 5.0);
        assert!(s.first_passage(0.5).is_none());
    }

    #[test]
    fn passage_by_drift() {
        let s = path(vec![], vec![], -1.0, 2.0);
        let e = s.first_passage(1.0).unwrap();
        assert_eq!(e.time, 1.0);
        assert_eq!(e.overshoot, 0.0);
        assert_eq!(e.mode, CrossingMode::Drift);
    }

    #[test]
    fn drift_crossing_between_jumps() {
        // p = −1 (rises at rate 1); jump 0.5 at t=1. Level 1.25:
        // value at t: t for t<1, then t+0.5. At t=1 the pre-jump value is 1.0,
        // the jump lands at 1.5 > 1.25 → jump crossing at t=1 wins.
        let s = path(vec![1.0], vec![0.5], -1.0, 3.0);
        let e = s.first_passage(1.25).unwrap();
        assert_eq!(e.time, 1.0);
        assert_eq!(e.mode, CrossingMode::Jump);
        assert_eq!(e.overshoot, 0.25);

        // level 2.0 is reached by drift at t = 1.5 (value t + 0.5 after jump)
        let e = s.first_passage(2.0).unwrap();
        assert_eq!(e.mode, CrossingMode::Drift);
        assert_eq!(e.overshoot, 0.0);
        assert_eq!(e.time, 1.5);
    }

    // ── Distributional checks ───────────────────────────────────────────

    #[test]
    fn jump_count_is_poisson() {
        let model =
            RiskModel::new(2.0, 1.0, ClaimDistribution::exponential(1.0).unwrap()).unwrap();
        let horizon = 1.5;
        let mean: f64 = 3.0;
        let n = 100_000;
        let mut counts = vec![0u64; 12];
        let mut rng = substream(5, 0);
        for _ in 0..n {
            let p = sample_path(&model, horizon, &mut rng);
            let k = p.times.len().min(11);
            counts[k] += 1;
        }
        // chi-square GOF against Poisson(3), last cell pooled; df=11, 0.999 → 31.26
        let mut probs: Vec<f64> = (0..11)
            .map(|k| {
                let lnp = -mean + k as f64 * mean.ln()
                    - (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
                lnp.exp()
            })
            .collect();
        let rest = 1.0 - probs.iter().sum::<f64>();
        probs.push(rest);
        let chi2: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(&o, &pr)| {
                let e = pr * n as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < 31.26, "Poisson GOF chi2 = {chi2}");
    }

    #[test]
    fn sequential_passage_agrees_with_batch_paths() {
        let model =
            RiskModel::new(1.0, 2.0, ClaimDistribution::exponential(1.0).unwrap()).unwrap();
        let (u, horizon) = (1.0, 4.0);
        let n = 60_000;
        let mut hits_batch = 0u64;
        let mut hits_seq = 0u64;
        for i in 0..n {
            let mut rng = substream(100, i);
            if sample_path(&model, horizon, &mut rng).first_passage(u).is_some() {
                hits_batch += 1;
            }
            let mut rng = substream(200, i);
            if simulate_passage(&model, 0.0, u, horizon, &mut rng).is_some() {
                hits_seq += 1;
            }
        }
        let p1 = hits_batch as f64 / n as f64;
        let p2 = hits_seq as f64 / n as f64;
        let se = (2.0 * p1 * (1.0 - p1) / n as f64).sqrt();
        assert!((p1 - p2).abs() < 3.0 * se, "{p1} vs {p2}");
    }

    #[test]
    fn upward_drift_passage_time_is_exact_in_law() {
        // p = −1, no-jump probability over τ-window: for level 1, pure drift
        // reaches it at t=1 unless a jump happens first (which only helps).
        let model =
            RiskModel::new(0.5, -1.0, ClaimDistribution::exponential(1.0).unwrap()).unwrap();
        let mut rng = substream(9, 3);
        for _ in 0..2000 {
            let (tau, x) = simulate_passage(&model, 0.0, 1.0, 10.0, &mut rng).unwrap();
            assert!(tau <= 1.0 + 1e-12);
            assert!(x >= 1.0);
        }
    }
}
