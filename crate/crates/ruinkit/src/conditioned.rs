//! The limiting conditioned first-passage object and its samplers.
//!
//! Conditioned on crossing a high level before time `T`, the path factorizes
//! into three independent pieces: an Esscher-tilted segment `Z` run until a
//! jump time `τ`, one big jump landing at offset `W₀` relative to the level,
//! and a post-jump segment `W` started at `W₀` and conditioned to cross zero
//! within the remaining window. The jump-time marginal of the triple carries
//! the weight `e^{ψ(α)t}·E e^{αX̄_{T-t}}`, so the passage-time marginal of
//! `τ + τ₀(W)` is exactly `B(t)/B(T)`.
//!
//! The only non-analytic ingredient is the family of passage probabilities
//! `p(z, s) = P(τ(|z|) < s)` for starting points `z ≤ 0`, tabulated once on
//! a `(z, s)` grid with Esscher importance sampling and reused across runs
//! (the grid persists to a versioned binary cache).

use std::io::{Read as IoRead, Write as IoWrite};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::claims::{sample_exp, ClaimDistribution};
use crate::error::{Error, Result};
use crate::estimators::{ruin_events, Importance};
use crate::model::RiskModel;
use crate::path::{sample_path, PathSample};
use crate::rng::run_replicas;

/// Default truncation threshold: the grid extends until the tabulated
/// integrand `α e^{α|z|} p(z,T)` falls below this fraction of its maximum.
pub const GRID_TRUNCATION: f64 = 1e-4;

/// Per-draw cap on post-jump rejection attempts.
const REJECTION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct PassageGrid {
    pub model: RiskModel,
    pub alpha: f64,
    pub horizon: f64,
    pub seed: u64,
    pub replicas_per_level: u64,
    /// Barrier distances `|z|`, ascending, starting at 0.
    pub levels: Vec<f64>,
    /// Time grid `0 = s₀ < … = horizon`.
    pub times: Vec<f64>,
    /// `p[i][j] ≈ P(τ(levels[i]) < times[j])`.
    pub p: Vec<Vec<f64>>,
    pub p_se: Vec<Vec<f64>>,
    /// ψ(α) of the base model (cached at build time).
    pub psi: f64,
}

/// Build the passage grid for `horizon`, extending the level range until the
/// tilted-exponential integrand is certifiably negligible.
pub fn build_passage_grid(
    model: &RiskModel,
    alpha: f64,
    horizon: f64,
    time_cells: usize,
    replicas_per_level: u64,
    seed: u64,
) -> Result<PassageGrid> {
    let psi = model.cumulant(alpha)?;
    let times: Vec<f64> =
        (0..=time_cells).map(|j| horizon * j as f64 / time_cells as f64).collect();
    let mut levels = vec![0.0];
    let mut z = 0.05;
    while levels.len() < 400 {
        levels.push(z);
        z *= 1.30;
        if z > 1e4 {
            break;
        }
    }

    let mut p = Vec::new();
    let mut p_se = Vec::new();
    let mut kept = Vec::new();
    let mut max_integrand: f64 = 0.0;
    let mut certified = false;
    for (i, &level) in levels.iter().enumerate() {
        let events = ruin_events(
            model,
            level,
            horizon,
            replicas_per_level,
            seed.wrapping_add(i as u64),
            Importance::Esscher { alpha },
        )?;
        let n = replicas_per_level as f64;
        let mut row = Vec::with_capacity(times.len());
        let mut row_se = Vec::with_capacity(times.len());
        for &s in &times {
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for e in &events {
                if e.time < s {
                    sum += e.weight;
                    sum_sq += e.weight * e.weight;
                }
            }
            let mean = sum / n;
            let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
            row.push(mean);
            row_se.push((var / n).sqrt());
        }
        let integrand = alpha * (alpha * level).exp() * row.last().unwrap();
        p.push(row);
        p_se.push(row_se);
        kept.push(level);
        max_integrand = max_integrand.max(integrand);
        if kept.len() > 4 && integrand < GRID_TRUNCATION * max_integrand {
            certified = true;
            break;
        }
    }
    if !certified {
        return Err(Error::Budget(format!(
            "grid truncation certificate unattained after {} levels (last integrand fraction {:.2e})",
            kept.len(),
            alpha * (alpha * kept.last().unwrap()).exp() * p.last().unwrap().last().unwrap()
                / max_integrand
        )));
    }
    Ok(PassageGrid {
        model: model.clone(),
        alpha,
        horizon,
        seed,
        replicas_per_level,
        levels: kept,
        times,
        p,
        p_se,
        psi,
    })
}

impl PassageGrid {
    /// Interpolated `p(levels[i], s)`, linear in `s`.
    fn p_at(&self, i: usize, s: f64) -> f64 {
        let times = &self.times;
        if s <= 0.0 {
            return 0.0;
        }
        if s >= *times.last().unwrap() {
            return *self.p[i].last().unwrap();
        }
        let j = times.partition_point(|&t| t <= s) - 1;
        let w = (s - times[j]) / (times[j + 1] - times[j]);
        self.p[i][j] + w * (self.p[i][j + 1] - self.p[i][j])
    }

    /// Tabulated integrand `g_i(s) = α e^{α levels[i]} p(levels[i], s)`.
    fn integrand_at(&self, i: usize, s: f64) -> f64 {
        self.alpha * (self.alpha * self.levels[i]).exp() * self.p_at(i, s)
    }

    /// Mass of the negative-offset part, `∫_0^{z_max} α e^{αy} p(y,s) dy`
    /// by the trapezoid rule over the level grid.
    pub fn negative_mass(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.levels.len() - 1 {
            let dz = self.levels[i + 1] - self.levels[i];
            acc += 0.5 * (self.integrand_at(i, s) + self.integrand_at(i + 1, s)) * dz;
        }
        acc
    }

    /// Grid reconstruction of `E e^{αX̄_s} = 1 + ∫ α e^{αy} p(y,s) dy`.
    pub fn sup_mgf_at(&self, s: f64) -> f64 {
        1.0 + self.negative_mass(s)
    }

    /// Grid reconstruction of `B(t) = ∫_0^t e^{ψ(α)r} E e^{αX̄_{t-r}} dr` on
    /// a uniform mesh (trapezoid per horizon); the last entry is `B(T)`.
    pub fn b_curve(&self, cells: usize) -> (Vec<f64>, Vec<f64>) {
        let h = self.horizon / cells as f64;
        let ts: Vec<f64> = (0..=cells).map(|k| k as f64 * h).collect();
        let mut b = vec![0.0; cells + 1];
        for (k, bk) in b.iter_mut().enumerate().skip(1) {
            let t = ts[k];
            let mut acc = 0.0;
            for j in 0..k {
                let r0 = ts[j];
                let r1 = ts[j + 1];
                let f0 = (self.psi * r0).exp() * self.sup_mgf_at(t - r0);
                let f1 = (self.psi * r1).exp() * self.sup_mgf_at(t - r1);
                acc += 0.5 * (f0 + f1) * h;
            }
            *bk = acc;
        }
        (ts, b)
    }

    /// Inverse-CDF table for the triple's jump time, whose density is
    /// proportional to `e^{ψ(α)t} · E e^{αX̄_{T-t}}` on `[0, T)`.
    pub fn tau_table(&self, cells: usize) -> TauTable {
        let h = self.horizon / cells as f64;
        let dens: Vec<f64> = (0..=cells)
            .map(|k| {
                let t = k as f64 * h;
                (self.psi * t).exp() * self.sup_mgf_at(self.horizon - t)
            })
            .collect();
        let mut ts = Vec::with_capacity(cells + 1);
        let mut cdf = Vec::with_capacity(cells + 1);
        ts.push(0.0);
        cdf.push(0.0);
        let mut acc = 0.0;
        for k in 0..cells {
            acc += 0.5 * (dens[k] + dens[k + 1]) * h;
            ts.push((k + 1) as f64 * h);
            cdf.push(acc);
        }
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        TauTable { ts, cdf, normalizer: total }
    }

    /// Draw the post-jump starting offset `W₀` for remaining window `s`:
    /// density `∝ α e^{-αz} p(z, s)` with `p ≡ 1` on `z > 0`, tabulated
    /// piecewise-linear on `z ≤ 0`.
    pub fn sample_w0<R: Rng + ?Sized>(&self, s: f64, rng: &mut R) -> Result<f64> {
        if s < 0.0 || s > self.horizon * (1.0 + 1e-9) {
            return Err(Error::Grid(format!(
                "remaining window {s} outside the tabulated horizon {}",
                self.horizon
            )));
        }
        let neg = self.negative_mass(s);
        let total = 1.0 + neg;
        let u: f64 = rng.random();
        if u * total <= 1.0 {
            // positive side: Exp(α)
            return Ok(sample_exp(rng, self.alpha));
        }
        // negative side: piecewise-linear density over level segments
        let target: f64 = rng.random::<f64>() * neg;
        let mut acc = 0.0;
        for i in 0..self.levels.len() - 1 {
            let g0 = self.integrand_at(i, s);
            let g1 = self.integrand_at(i + 1, s);
            let dz = self.levels[i + 1] - self.levels[i];
            let seg = 0.5 * (g0 + g1) * dz;
            if target <= acc + seg || i == self.levels.len() - 2 {
                let rem = (target - acc).clamp(0.0, seg);
                // solve rem = g0·x + (g1−g0)x²/(2dz) for x ∈ [0, dz]
                let a = 0.5 * (g1 - g0) / dz;
                let x = if a.abs() < 1e-300 * g0.abs().max(1.0) {
                    rem / g0.max(1e-300)
                } else {
                    let disc = (g0 * g0 + 4.0 * a * rem).max(0.0);
                    (-g0 + disc.sqrt()) / (2.0 * a)
                };
                let y = self.levels[i] + x.clamp(0.0, dz);
                return Ok(-y);
            }
            acc += seg;
        }
        unreachable!("segment scan covers the full negative mass")
    }

    pub fn matches(&self, model: &RiskModel, alpha: f64, horizon: f64) -> bool {
        self.model == *model && self.alpha == alpha && self.horizon == horizon
    }
}

/// Tabulated inverse CDF of the triple's jump time.
#[derive(Debug, Clone)]
pub struct TauTable {
    ts: Vec<f64>,
    cdf: Vec<f64>,
    /// `∫_0^T e^{ψt} E e^{αX̄_{T-t}} dt`, the grid's estimate of `B(T)`.
    pub normalizer: f64,
}

impl TauTable {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let j = self.cdf.partition_point(|&c| c < u).min(self.ts.len() - 1).max(1);
        let (c0, c1) = (self.cdf[j - 1], self.cdf[j]);
        let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.ts[j - 1] + w * (self.ts[j] - self.ts[j - 1])
    }

    pub fn cdf_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= *self.ts.last().unwrap() {
            return 1.0;
        }
        let j = self.ts.partition_point(|&x| x <= t) - 1;
        let w = (t - self.ts[j]) / (self.ts[j + 1] - self.ts[j]);
        self.cdf[j] + w * (self.cdf[j + 1] - self.cdf[j])
    }
}

/// Jump time of the killed tilted segment alone: density
/// `ψ(α)e^{ψ(α)t}/(e^{ψ(α)T} − 1)` on `[0,T)`, uniform when ψ(α) = 0.
pub fn sample_tau<R: Rng + ?Sized>(
    model: &RiskModel,
    alpha: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<f64> {
    let psi = model.cumulant(alpha)?;
    let u: f64 = rng.random();
    if psi == 0.0 {
        return Ok(u * horizon);
    }
    // t = ψ⁻¹ ln(1 + U(e^{ψT} − 1)), stable through exp_m1/ln_1p near ψ = 0
    Ok((u * (psi * horizon).exp_m1()).ln_1p() / psi)
}

/// One draw of the limiting conditioned object.
#[derive(Debug, Clone)]
pub struct LimitTriple {
    /// Jump time of the big jump.
    pub tau: f64,
    /// Tilted segment on `[0, τ)`.
    pub z_path: PathSample,
    /// `Z_{τ-}`, the position just before the big jump.
    pub pre_jump: f64,
    /// Post-jump offset relative to the barrier.
    pub w0: f64,
    /// Passage time of the post-jump segment over zero.
    pub tau0: f64,
    /// Final overshoot `W_{τ₀} ≥ 0`.
    pub overshoot: f64,
    /// Conditioned post-jump segment on `[0, τ₀]`.
    pub w_path: PathSample,
}

/// The scalar functionals of a triple (bulk runs drop the paths).
#[derive(Debug, Clone, Copy)]
pub struct TripleFunctionals {
    pub tau: f64,
    pub tau0: f64,
    pub overshoot: f64,
    pub pre_jump: f64,
    pub w0: f64,
}

/// Sampler context for limit triples; construct once, draw many.
pub struct TripleSampler<'a> {
    grid: &'a PassageGrid,
    tilted: RiskModel,
    tau_table: TauTable,
    psi_plus: f64,
}

impl<'a> TripleSampler<'a> {
    pub fn new(grid: &'a PassageGrid) -> Result<Self> {
        let tilted = grid.model.esscher(grid.alpha)?;
        let tau_table = grid.tau_table(2048);
        Ok(TripleSampler { grid, tilted, tau_table, psi_plus: grid.psi.max(0.0) })
    }

    pub fn tau_table(&self) -> &TauTable {
        &self.tau_table
    }

    /// Draw one triple. The post-jump conditioning `τ₀(W) < T − τ` is exact:
    /// a tilted proposal run to passage is accepted with probability
    /// `e^{-α(X_{τ₀}-W₀) + ψ(α)τ₀} / M`, `M = e^{αW₀ + ψ⁺(T-τ)}`, which is
    /// the likelihood-ratio rejection for the base-path law on `F_{τ₀}`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<LimitTriple> {
        let grid = self.grid;
        let alpha = grid.alpha;
        let tau = self.tau_table.sample(rng);
        let window = grid.horizon - tau;
        let w0 = grid.sample_w0(window, rng)?;

        let (tau0, overshoot, w_path) = if w0 > 0.0 {
            // already above the barrier: passage immediate, free path after
            let path = sample_path_from(&grid.model, w0, window, rng);
            (0.0, w0, path)
        } else {
            let log_m = alpha * w0 + self.psi_plus * window;
            let mut attempts = 0u64;
            loop {
                attempts += 1;
                if attempts > REJECTION_CAP {
                    return Err(Error::RejectionBudget(format!(
                        "post-jump acceptance below {:.1e} at offset {w0:.3}",
                        1.0 / REJECTION_CAP as f64
                    )));
                }
                if let Some((t0, path)) =
                    simulate_passage_path(&self.tilted, w0, 0.0, window, rng)
                {
                    let x_t0 = path.value_at(t0);
                    let log_w = -alpha * (x_t0 - w0) + grid.psi * t0;
                    let u: f64 = rng.random();
                    if u.ln() <= log_w - log_m {
                        break (t0, x_t0, path);
                    }
                }
            }
        };

        let z_path = sample_path(&self.tilted, tau, rng);
        let pre_jump = z_path.value_at(tau);
        Ok(LimitTriple { tau, z_path, pre_jump, w0, tau0, overshoot, w_path })
    }

    pub fn sample_functionals<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<TripleFunctionals> {
        let t = self.sample(rng)?;
        Ok(TripleFunctionals {
            tau: t.tau,
            tau0: t.tau0,
            overshoot: t.overshoot,
            pre_jump: t.pre_jump,
            w0: t.w0,
        })
    }
}

/// Draw `n` triples on counter-based substreams (parallel, deterministic).
pub fn sample_triples(
    grid: &PassageGrid,
    n: u64,
    seed: u64,
) -> Result<Vec<TripleFunctionals>> {
    let sampler = TripleSampler::new(grid)?;
    let results: Vec<Result<TripleFunctionals>> = run_replicas(
        n,
        seed,
        Vec::new,
        |acc: &mut Vec<Result<TripleFunctionals>>, rng: &mut ChaCha8Rng, _| {
            acc.push(sampler.sample_functionals(rng));
        },
        |mut a, b| {
            a.extend(b);
            a
        },
    );
    results.into_iter().collect()
}

/// Base path started at `start`.
fn sample_path_from<R: Rng + ?Sized>(
    model: &RiskModel,
    start: f64,
    horizon: f64,
    rng: &mut R,
) -> PathSample {
    let mut p = sample_path(model, horizon, rng);
    p.start = start;
    p
}

/// Event-by-event simulation to first passage that also returns the path up
/// to the passage time (`None` if the horizon is hit first).
fn simulate_passage_path<R: Rng + ?Sized>(
    model: &RiskModel,
    start: f64,
    level: f64,
    horizon: f64,
    rng: &mut R,
) -> Option<(f64, PathSample)> {
    let p = model.premium_rate;
    let lam = model.arrival_rate;
    let mut t = 0.0;
    let mut v = start;
    let mut times = Vec::new();
    let mut sizes = Vec::new();
    loop {
        let gap = sample_exp(rng, lam);
        let t_next = t + gap;
        if p < 0.0 {
            let seg_end_t = t_next.min(horizon);
            let rise_v = v - p * (seg_end_t - t);
            if rise_v > level {
                let t_star = t + (level - v) / (-p);
                if t_star <= horizon {
                    return Some((
                        t_star,
                        PathSample {
                            horizon: t_star,
                            times,
                            sizes,
                            premium_rate: p,
                            start,
                        },
                    ));
                }
            }
        }
        if t_next >= horizon {
            return None;
        }
        let size = model.claims.sample(rng);
        v = v - p * gap + size;
        t = t_next;
        times.push(t);
        sizes.push(size);
        if v > level {
            return Some((
                t,
                PathSample { horizon: t, times, sizes, premium_rate: p, start },
            ));
        }
    }
}

/// Weighted empirical joint law of `(overshoot, passage time)` given ruin
/// before the horizon, from direct or tilted simulation.
#[derive(Debug, Clone)]
pub struct ConditionalReference {
    /// `(overshoot, weight)` pairs.
    pub overshoots: Vec<(f64, f64)>,
    /// `(passage time, weight)` pairs.
    pub times: Vec<(f64, f64)>,
    pub hits: u64,
    pub effective_sample_size: f64,
}

pub fn conditional_mc_reference(
    model: &RiskModel,
    u: f64,
    horizon: f64,
    replicas: u64,
    seed: u64,
    importance: Importance,
    min_hits: u64,
) -> Result<ConditionalReference> {
    let events = ruin_events(model, u, horizon, replicas, seed, importance)?;
    if (events.len() as u64) < min_hits {
        return Err(Error::NoHits(format!(
            "{} ruin events below the required {min_hits}",
            events.len()
        )));
    }
    let ess = crate::stats::effective_sample_size(events.iter().map(|e| e.weight));
    Ok(ConditionalReference {
        overshoots: events.iter().map(|e| (e.value_at_passage - u, e.weight)).collect(),
        times: events.iter().map(|e| (e.time, e.weight)).collect(),
        hits: events.len() as u64,
        effective_sample_size: ess,
    })
}

// ── Grid persistence ─────────────────────────────────────────────────────

const GRID_MAGIC: &[u8; 4] = b"RKPG";
const GRID_VERSION: u32 = 1;

fn claim_code(claims: &ClaimDistribution) -> (u8, Vec<f64>) {
    match claims {
        ClaimDistribution::Exponential { rate } => (0, vec![*rate]),
        ClaimDistribution::TiltedPareto { tilt, power, scale } => {
            (1, vec![*tilt, *power, *scale])
        }
        ClaimDistribution::Tilted { base, beta } => {
            let (code, mut params) = claim_code(base);
            params.push(*beta);
            (code + 2, params)
        }
    }
}

fn claims_from_code(code: u8, params: &[f64]) -> Result<ClaimDistribution> {
    match (code, params) {
        (0, [rate]) => ClaimDistribution::exponential(*rate),
        (1, [t, p, s]) => ClaimDistribution::tilted_pareto(*t, *p, *s),
        (2, [rate, beta]) => ClaimDistribution::exponential(*rate)?.esscher(*beta),
        (3, [t, p, s, beta]) => ClaimDistribution::tilted_pareto(*t, *p, *s)?.esscher(*beta),
        _ => Err(Error::CacheFormat("unknown claim family code".into())),
    }
}

/// FNV-1a over the parameter bytes, stored in the header as a quick
/// compatibility check before the full parameter comparison.
fn params_digest(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl PassageGrid {
    fn param_bytes(&self) -> Vec<u8> {
        let (code, params) = claim_code(&self.model.claims);
        let mut out = Vec::new();
        out.push(code);
        out.push(params.len() as u8);
        for p in &params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        for v in [
            self.model.arrival_rate,
            self.model.premium_rate,
            self.alpha,
            self.horizon,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.replicas_per_level.to_le_bytes());
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(GRID_MAGIC);
        buf.extend_from_slice(&GRID_VERSION.to_le_bytes());
        let params = self.param_bytes();
        buf.extend_from_slice(&params_digest(&params).to_le_bytes());
        buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
        buf.extend_from_slice(&params);
        buf.extend_from_slice(&self.psi.to_le_bytes());
        buf.extend_from_slice(&(self.levels.len() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.times.len() as u32).to_le_bytes());
        for v in self.levels.iter().chain(&self.times) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for row in self.p.iter().chain(&self.p_se) {
            for v in row {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&buf))
            .map_err(|e| Error::CacheFormat(format!("cannot write grid cache: {e}")))
    }

    pub fn load(path: &Path) -> Result<PassageGrid> {
        let mut buf = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| Error::CacheFormat(format!("cannot read grid cache: {e}")))?;
        let mut cur = 0usize;
        let take = |cur: &mut usize, n: usize| -> Result<&[u8]> {
            if *cur + n > buf.len() {
                return Err(Error::CacheFormat("truncated grid cache".into()));
            }
            let s = &buf[*cur..*cur + n];
            *cur += n;
            Ok(s)
        };
        if take(&mut cur, 4)? != GRID_MAGIC {
            return Err(Error::CacheFormat("bad magic".into()));
        }
        let version = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap());
        if version != GRID_VERSION {
            return Err(Error::CacheFormat(format!("unsupported grid version {version}")));
        }
        let digest = u64::from_le_bytes(take(&mut cur, 8)?.try_into().unwrap());
        let plen = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap()) as usize;
        let params = take(&mut cur, plen)?.to_vec();
        if params_digest(&params) != digest {
            return Err(Error::CacheFormat("parameter digest mismatch".into()));
        }
        // decode params
        let code = params[0];
        let np = params[1] as usize;
        let mut vals = Vec::with_capacity(np);
        let mut pc = 2usize;
        for _ in 0..np {
            vals.push(f64::from_le_bytes(params[pc..pc + 8].try_into().unwrap()));
            pc += 8;
        }
        let claims = claims_from_code(code, &vals)?;
        let mut scalars = [0f64; 4];
        for s in scalars.iter_mut() {
            *s = f64::from_le_bytes(params[pc..pc + 8].try_into().unwrap());
            pc += 8;
        }
        let seed = u64::from_le_bytes(params[pc..pc + 8].try_into().unwrap());
        pc += 8;
        let replicas_per_level = u64::from_le_bytes(params[pc..pc + 8].try_into().unwrap());

        let psi = f64::from_le_bytes(take(&mut cur, 8)?.try_into().unwrap());
        let nl = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap()) as usize;
        let nt = u32::from_le_bytes(take(&mut cur, 4)?.try_into().unwrap()) as usize;
        let read_vec = |cur: &mut usize, n: usize| -> Result<Vec<f64>> {
            let s = take(cur, 8 * n)?;
            Ok(s.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let levels = read_vec(&mut cur, nl)?;
        let times = read_vec(&mut cur, nt)?;
        let mut p = Vec::with_capacity(nl);
        for _ in 0..nl {
            p.push(read_vec(&mut cur, nt)?);
        }
        let mut p_se = Vec::with_capacity(nl);
        for _ in 0..nl {
            p_se.push(read_vec(&mut cur, nt)?);
        }
        Ok(PassageGrid {
            model: RiskModel::new(scalars[0], scalars[1], claims)?,
            alpha: scalars[2],
            horizon: scalars[3],
            seed,
            replicas_per_level,
            levels,
            times,
            p,
            p_se,
            psi,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::estimate_sup_mgf;
    use crate::rng::substream;
    use crate::stats::ks_vs_cdf;

    fn tp_model() -> RiskModel {
        RiskModel::new(
            1.0,
            2.0,
            ClaimDistribution::tilted_pareto(1.0, 2.5, 1.0).unwrap(),
        )
        .unwrap()
    }

    fn small_grid() -> PassageGrid {
        build_passage_grid(&tp_model(), 1.0, 2.0, 24, 4_000, 1234).unwrap()
    }

    #[test]
    fn sample_tau_laws() {
        // ψ(α) = 0: uniform; KS over 1e5 draws below 0.01
        let m = RiskModel::new(1.0, 2.0, ClaimDistribution::exponential(1.0).unwrap()).unwrap();
        let horizon = 2.0;
        let mut rng = substream(1, 0);
        let mut draws: Vec<(f64, f64)> = (0..100_000)
            .map(|_| (sample_tau(&m, 0.5, horizon, &mut rng).unwrap(), 1.0))
            .collect();
        let d = ks_vs_cdf(&mut draws, |t| (t / horizon).clamp(0.0, 1.0));
        assert!(d <= 0.01, "uniform KS {d}");

        // tilted law: median at ψ⁻¹ ln((e^{ψT}+1)/2); check via empirical CDF
        let m2 = tp_model();
        let alpha = 1.0;
        let psi = m2.cumulant(alpha).unwrap();
        let mut draws: Vec<(f64, f64)> = (0..100_000)
            .map(|_| (sample_tau(&m2, alpha, horizon, &mut rng).unwrap(), 1.0))
            .collect();
        let cdf = |t: f64| ((psi * t).exp_m1() / (psi * horizon).exp_m1()).clamp(0.0, 1.0);
        let d = ks_vs_cdf(&mut draws, cdf);
        assert!(d <= 0.01, "tilted KS {d}");
    }

    #[test]
    fn sample_tau_continuity_near_critical() {
        // CDF with ψ = 1e-10 within 1e-6 of the uniform CDF pointwise
        let horizon = 2.0;
        let psi = 1e-10;
        for k in 1..20 {
            let t = horizon * k as f64 / 20.0;
            let tilted = (psi * t).exp_m1() / (psi * horizon).exp_m1();
            assert!((tilted - t / horizon).abs() < 1e-6);
        }
    }

    #[test]
    fn grid_positive_side_and_monotonicity() {
        let g = small_grid();
        // p(z, s) nondecreasing in s (per level, nested events, up to 2 SE)
        for (row, se) in g.p.iter().zip(&g.p_se) {
            for j in 1..row.len() {
                assert!(
                    row[j] >= row[j - 1] - 2.0 * (se[j] + se[j - 1]),
                    "p must grow in s"
                );
            }
        }
        // deeper start → smaller crossing probability (2-SE noise band)
        let last = g.times.len() - 1;
        for i in 1..g.levels.len() {
            assert!(
                g.p[i][last] <= g.p[i - 1][last] + 2.0 * (g.p_se[i][last] + g.p_se[i - 1][last]),
                "p must shrink in depth"
            );
        }
        // m(0) = 1 exactly
        assert!((g.sup_mgf_at(0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_sup_mgf_matches_direct_estimate() {
        let g = build_passage_grid(&tp_model(), 1.0, 2.0, 24, 20_000, 77).unwrap();
        let direct = estimate_sup_mgf(&tp_model(), 1.0, 2.0, 300_000, 78).unwrap();
        let from_grid = g.sup_mgf_at(2.0);
        // grid carries interpolation + truncation bias, allow a few percent
        let rel = (from_grid - direct.estimate).abs() / direct.estimate;
        assert!(rel < 0.05, "grid m(T) {from_grid} vs direct {}", direct.estimate);
    }

    #[test]
    fn w0_sampler_positive_fraction_and_conditional_law() {
        let g = small_grid();
        let mut rng = substream(5, 0);
        let s = 1.5;
        let n = 60_000;
        let mut pos = 0u64;
        let mut pos_draws: Vec<(f64, f64)> = Vec::new();
        for _ in 0..n {
            let z = g.sample_w0(s, &mut rng).unwrap();
            if z > 0.0 {
                pos += 1;
                pos_draws.push((z, 1.0));
            } else {
                assert!(z >= -g.levels.last().unwrap() - 1e-9, "truncation bound");
            }
        }
        let frac = pos as f64 / n as f64;
        let expect = 1.0 / (1.0 + g.negative_mass(s));
        assert!(
            (frac - expect).abs() < 3.0 * (expect * (1.0 - expect) / n as f64).sqrt() + 0.002,
            "positive fraction {frac} vs {expect}"
        );
        // conditional on W₀ > 0: Exp(α)
        let d = ks_vs_cdf(&mut pos_draws, |x| 1.0 - (-g.alpha * x).exp());
        assert!(d <= 0.012, "Exp(α) KS {d}");
    }

    #[test]
    fn rejection_acceptance_rate_matches_grid_probability() {
        // fixed offset z: empirical acceptance · M must equal p(z, s)
        let g = small_grid();
        let sampler = TripleSampler::new(&g).unwrap();
        let (z, s) = (-1.0, 1.5);
        let mut rng = substream(9, 0);
        let n = 40_000u64;
        let mut accepted = 0u64;
        let log_m = g.alpha * z + g.psi.max(0.0) * s;
        for _ in 0..n {
            if let Some((t0, path)) = simulate_passage_path(&sampler.tilted, z, 0.0, s, &mut rng)
            {
                let x = path.value_at(t0);
                let log_w = -g.alpha * (x - z) + g.psi * t0;
                let u: f64 = rng.random();
                if u.ln() <= log_w - log_m {
                    accepted += 1;
                }
            }
        }
        let rate = accepted as f64 / n as f64;
        let implied = rate * log_m.exp();
        // direct (untilted) estimate of the same probability
        let direct = crate::estimators::estimate_ruin_prob(
            &tp_model(),
            1.0,
            s,
            400_000,
            91,
            Importance::None,
        )
        .unwrap();
        let se = (direct.std_error.powi(2) + (rate * (1.0 - rate) / n as f64) * (2.0 * log_m).exp())
            .sqrt();
        assert!(
            (implied - direct.estimate).abs() < 3.0 * se + 0.003,
            "implied {implied} vs direct {}",
            direct.estimate
        );
    }

    #[test]
    fn triples_respect_supports() {
        let g = small_grid();
        let fs = sample_triples(&g, 4_000, 31).unwrap();
        for f in &fs {
            assert!(f.tau >= 0.0 && f.tau < g.horizon);
            assert!(f.tau0 >= 0.0 && f.tau + f.tau0 < g.horizon + 1e-9);
            assert!(f.overshoot >= 0.0);
            assert!(f.overshoot > 0.0, "no creeping for p > 0");
            assert!(f.tau.is_finite() && f.overshoot.is_finite() && f.w0.is_finite());
            if f.w0 > 0.0 {
                assert_eq!(f.tau0, 0.0);
                assert_eq!(f.overshoot, f.w0);
            }
        }
    }

    #[test]
    fn triple_passage_margin_follows_b_ratio() {
        let g = build_passage_grid(&tp_model(), 1.0, 2.0, 32, 20_000, 55).unwrap();
        let fs = sample_triples(&g, 60_000, 56).unwrap();
        let (ts, b) = g.b_curve(256);
        let bt = *b.last().unwrap();
        let mut sample: Vec<(f64, f64)> = fs.iter().map(|f| (f.tau + f.tau0, 1.0)).collect();
        let d = ks_vs_cdf(&mut sample, |t| {
            if t <= 0.0 {
                return 0.0;
            }
            if t >= *ts.last().unwrap() {
                return 1.0;
            }
            let j = ts.partition_point(|&x| x <= t) - 1;
            let w = (t - ts[j]) / (ts[j + 1] - ts[j]);
            ((b[j] + w * (b[j + 1] - b[j])) / bt).clamp(0.0, 1.0)
        });
        assert!(d <= 0.02, "passage-time margin sup-gap {d}");
    }

    #[test]
    fn w0_positive_probability_identity() {
        // P(W₀ > 0) = (∫_0^T e^{ψt} dt) / B(T), with B from the grid itself
        let g = build_passage_grid(&tp_model(), 1.0, 2.0, 32, 20_000, 57).unwrap();
        let fs = sample_triples(&g, 60_000, 58).unwrap();
        let frac = fs.iter().filter(|f| f.w0 > 0.0).count() as f64 / fs.len() as f64;
        let sampler = TripleSampler::new(&g).unwrap();
        let mu_mass = (g.psi * g.horizon).exp_m1() / g.psi;
        let expect = mu_mass / sampler.tau_table().normalizer;
        let se = (expect * (1.0 - expect) / fs.len() as f64).sqrt();
        assert!(
            (frac - expect).abs() < 4.0 * se + 0.01,
            "P(W0>0) {frac} vs {expect}"
        );
    }

    #[test]
    fn tilted_segment_killed_law() {
        // E[f(Z_s); s < τ] = e^{-ψ(α)s} E[e^{αX_s} f(X_s)] · P(τ > s)
        // for f = 1_{(0,∞)}, with the reweighted τ of the triple.
        let g = build_passage_grid(&tp_model(), 1.0, 2.0, 32, 20_000, 59).unwrap();
        let sampler = TripleSampler::new(&g).unwrap();
        let s = 0.8;
        let n = 50_000u64;
        let mut hits = 0u64;
        for i in 0..n {
            let mut rng = substream(60, i);
            let t = sampler.sample(&mut rng).unwrap();
            if t.tau > s && t.z_path.value_at(s) > 0.0 {
                hits += 1;
            }
        }
        let lhs = hits as f64 / n as f64;
        let psi = g.psi;
        let m = tp_model();
        let stats = crate::rng::run_scalar(400_000, 61, |rng, _| {
            let x = sample_path(&m, s, rng).value_at(s);
            if x > 0.0 {
                (-psi * s).exp() * (g.alpha * x).exp()
            } else {
                0.0
            }
        });
        let p_surv = 1.0 - sampler.tau_table().cdf_at(s);
        let rhs = stats.mean() * p_surv;
        let se = (stats.std_error() * p_surv).hypot((lhs * (1.0 - lhs) / n as f64).sqrt());
        assert!(
            (lhs - rhs).abs() < 3.0 * se + 0.01,
            "killed tilted law: {lhs} vs {rhs} (se {se})"
        );
    }

    #[test]
    fn grid_roundtrip_through_cache() {
        let g = small_grid();
        let dir = std::env::temp_dir().join("ruinkit-grid-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("grid.bin");
        g.save(&path).unwrap();
        let loaded = PassageGrid::load(&path).unwrap();
        assert!(loaded.matches(&g.model, g.alpha, g.horizon));
        assert_eq!(loaded.levels, g.levels);
        assert_eq!(loaded.times, g.times);
        assert_eq!(loaded.p, g.p);
        assert_eq!(loaded.p_se, g.p_se);
        // corrupted file is rejected
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[9] ^= 0xff;
        let bad = dir.join("bad.bin");
        std::fs::write(&bad, &bytes).unwrap();
        assert!(matches!(PassageGrid::load(&bad), Err(Error::CacheFormat(_))));
    }

    #[test]
    fn conditional_reference_no_hits() {
        let err = conditional_mc_reference(
            &tp_model(),
            500.0,
            1.0,
            1_000,
            3,
            Importance::None,
            100,
        );
        assert!(matches!(err, Err(Error::NoHits(_))));
    }
}
