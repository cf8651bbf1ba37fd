//! Acceptance-suite runner: every exit criterion of the project, executed at
//! fixed seeds and desk-scale budgets, shared by `cargo test` (the
//! `acceptance` integration target) and the CLI `validate` subcommand.
//!
//! Each criterion reports a target, an observed value and the tolerance it
//! was held to. Tolerances are pinned here, not tuned at run time.

use serde::Serialize;

use crate::asymptotics::{
    b_exp_time, b_laplace, b_quadrature, finite_time_ruin_estimate, segerdahl, BEstimate,
};
use crate::claims::ClaimDistribution;
use crate::conditioned::{
    build_passage_grid, conditional_mc_reference, sample_tau, sample_triples,
};
use crate::error::Result;
use crate::estimators::{
    estimate_ruin_prob, estimate_tail_prob, surrogate_horizon, Importance,
};
use crate::fluctuation::{
    overshoot_law_cramer, overshoot_law_infinite, ruin_prob_infinite, sup_mgf_infinity,
    vigon_check, SupMgfAtInfinity,
};
use crate::model::RiskModel;
use crate::rng::substream;
use crate::stats::{ks_two_sample, ks_vs_cdf};

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub criterion: String,
    pub target: String,
    pub observed: String,
    pub tolerance: String,
    pub pass: bool,
}

impl CriterionResult {
    fn new(
        id: &str,
        target: impl Into<String>,
        observed: impl Into<String>,
        tolerance: impl Into<String>,
        pass: bool,
    ) -> Self {
        CriterionResult {
            criterion: id.to_string(),
            target: target.into(),
            observed: observed.into(),
            tolerance: tolerance.into(),
            pass,
        }
    }
}

fn exp_model(lambda: f64, p: f64, eta: f64) -> RiskModel {
    RiskModel::new(lambda, p, ClaimDistribution::exponential(eta).unwrap()).unwrap()
}

fn tp_model(lambda: f64, p: f64, t: f64, pw: f64, s: f64) -> RiskModel {
    RiskModel::new(lambda, p, ClaimDistribution::tilted_pareto(t, pw, s).unwrap()).unwrap()
}

/// The canonical heavy-tailed test model: λ=1, p=2, tail `(1+x)^{-2} e^{-x}`.
fn headline_model() -> RiskModel {
    tp_model(1.0, 2.0, 1.0, 2.0, 1.0)
}

/// Run the full suite. `fault_injection` perturbs the ladder identity check
/// (harness sanity: the suite must then fail).
pub fn run_all(fault_injection: bool) -> Result<Vec<CriterionResult>> {
    Ok(vec![
        c01_subordinator_identity()?,
        c02_triple_method_consistency()?,
        c03_saturation()?,
        c04_small_horizon_limit()?,
        c05_headline_ratio()?,
        c06_tail_ratio()?,
        c07_infinite_horizon_constant()?,
        c08_overshoot_law_infinite_horizon()?,
        c09_cramer_overshoot()?,
        c10_conditioned_sampler_marginals()?,
        c11_vigon_identity(fault_injection)?,
        c12_exactness_and_determinism()?,
        c13_classical_oracle()?,
    ])
}

fn fmt3(x: f64) -> String {
    format!("{x:.6}")
}

/// 1. Subordinator identity: p = 0 ⇒ B(T) = T e^{ψ(α)T}; all three methods.
fn c01_subordinator_identity() -> Result<CriterionResult> {
    let m = tp_model(1.0, 0.0, 1.0, 2.5, 1.0);
    let (alpha, horizon) = (1.0, 1.0);
    let psi = m.cumulant(alpha)?;
    let target = horizon * (psi * horizon).exp();

    let q = b_quadrature(&m, alpha, horizon, 48, 600_000, 101)?;
    let e = b_exp_time(&m, alpha, horizon, 600_000, 102)?;
    let l = b_laplace(&m, alpha, horizon)?;

    let ok_q = (q.value - target).abs() <= 3.0 * q.std_error;
    let ok_e = (e.value - target).abs() <= 3.0 * e.std_error;
    let ok_l = (l.value - target).abs() <= 0.005 * target;
    Ok(CriterionResult::new(
        "1-subordinator-identity",
        fmt3(target),
        format!("quadrature={} exp-time={} laplace={}", fmt3(q.value), fmt3(e.value), fmt3(l.value)),
        "3 SE (MC) / 0.5% (Laplace)",
        ok_q && ok_e && ok_l,
    ))
}

/// 2. Quadrature / exponential-time / Laplace agreement across the sign
/// regimes of ψ(α), T ∈ {1, 2, 4}.
fn c02_triple_method_consistency() -> Result<CriterionResult> {
    // ψ(½) = 0 (critical), −0.5 and +0.55 respectively
    let configs =
        [exp_model(1.0, 2.0, 1.0), exp_model(1.0, 3.0, 1.0), exp_model(1.0, 0.9, 1.0)];
    let alpha = 0.5;
    let mut pass = true;
    let mut worst = String::new();
    let mut worst_gap = 0.0f64;
    let mut seed = 200;
    for m in &configs {
        for &horizon in &[1.0, 2.0, 4.0] {
            seed += 2;
            let q = b_quadrature(m, alpha, horizon, 48, 150_000, seed)?;
            let e = b_exp_time(m, alpha, horizon, 150_000, seed + 1)?;
            let l = b_laplace(m, alpha, horizon)?;
            let ok = q.consistent_with(&e, 0.0) && q.consistent_with(&l, 0.005);
            if !ok {
                pass = false;
            }
            let gap = ((q.value - l.value) / l.value).abs();
            if gap > worst_gap {
                worst_gap = gap;
                worst = format!(
                    "p={} T={horizon}: q={} e={} l={}",
                    m.premium_rate,
                    fmt3(q.value),
                    fmt3(e.value),
                    fmt3(l.value)
                );
            }
        }
    }
    Ok(CriterionResult::new(
        "2-triple-method-consistency",
        "pairwise agreement, 9 configurations",
        format!("worst quadrature-vs-laplace gap {:.3}% ({worst})", worst_gap * 100.0),
        "3 combined SE / 0.5%",
        pass,
    ))
}

/// 3. ψ(α) < 0 saturation: B(T) increases to `E e^{αX̄_∞}/(−ψ)`; at
/// `T = 5/|ψ|` the gap is below 5%.
fn c03_saturation() -> Result<CriterionResult> {
    let m = headline_model();
    let alpha = 1.0;
    let psi = m.cumulant(alpha)?;
    let limit = match sup_mgf_infinity(&m, alpha)? {
        SupMgfAtInfinity::Finite(v) => v / (-psi),
        SupMgfAtInfinity::Infinite => unreachable!("ψ(α) < 0 by construction"),
    };
    let t_star = 5.0 / psi.abs();
    let mut monotone = true;
    let mut prev = 0.0;
    let mut b_at_tstar = 0.0;
    for k in 1..=4 {
        let t = t_star * k as f64 / 4.0;
        let b = b_laplace(&m, alpha, t)?;
        if b.value <= prev {
            monotone = false;
        }
        prev = b.value;
        b_at_tstar = b.value;
    }
    let q = b_quadrature(&m, alpha, t_star, 64, 150_000, 301)?;
    let mc_agrees = (q.value - b_at_tstar).abs() <= (3.0 * q.std_error).max(0.01 * b_at_tstar);
    let gap = (b_at_tstar - limit).abs() / limit;
    Ok(CriterionResult::new(
        "3-saturation",
        format!("limit {}", fmt3(limit)),
        format!("B({t_star}) = {} (gap {:.2}%), monotone={monotone}", fmt3(b_at_tstar), gap * 100.0),
        "gap ≤ 5%, monotone in T, MC cross-check 3 SE/1%",
        gap <= 0.05 && monotone && mc_agrees,
    ))
}

/// 4. Small-horizon limit: B(T)/T ∈ [0.9, 1.1] at T = 0.05 for two configs.
fn c04_small_horizon_limit() -> Result<CriterionResult> {
    let slopes = [
        b_laplace(&exp_model(1.0, 2.0, 1.0), 0.5, 0.05)?.value / 0.05,
        b_laplace(&headline_model(), 1.0, 0.05)?.value / 0.05,
    ];
    let pass = slopes.iter().all(|s| (0.9..=1.1).contains(s));
    Ok(CriterionResult::new(
        "4-small-horizon-limit",
        "B(T)/T → 1",
        format!("slopes {} and {}", fmt3(slopes[0]), fmt3(slopes[1])),
        "within [0.9, 1.1] at T = 0.05",
        pass,
    ))
}

/// Trend helper: |1 − r| non-increasing within slack, final within `final_tol`.
fn monotone_trend_to_one(ratios: &[(f64, f64)], final_tol: f64) -> (bool, bool) {
    let mut trend = true;
    for w in ratios.windows(2) {
        let (r0, se0) = w[0];
        let (r1, se1) = w[1];
        let slack = 2.0 * (se0.powi(2) + se1.powi(2)).sqrt();
        if (1.0 - r1).abs() > (1.0 - r0).abs() + slack {
            trend = false;
        }
    }
    let (rf, _) = *ratios.last().unwrap();
    (trend, (1.0 - rf).abs() <= final_tol)
}

/// 5. Headline ratio: `P(τ(u)<T) / (Π̄⁺(u)·B(T))` trends to 1 over the
/// level grid, final level within 25%.
fn c05_headline_ratio() -> Result<CriterionResult> {
    let m = headline_model();
    let (alpha, horizon) = (1.0, 2.0);
    let b = b_laplace(&m, alpha, horizon)?;
    let mut ratios = Vec::new();
    let mut detail = String::new();
    for (i, &u) in [2.0, 4.0, 6.0, 8.0].iter().enumerate() {
        let est = estimate_ruin_prob(
            &m,
            u,
            horizon,
            400_000,
            500 + i as u64,
            Importance::Esscher { alpha },
        )?;
        let denom = finite_time_ruin_estimate(&m, u, &b);
        ratios.push((est.estimate / denom, est.std_error / denom));
        detail.push_str(&format!("u={u}: {:.4}±{:.4}  ", est.estimate / denom, est.std_error / denom));
    }
    let (trend, final_ok) = monotone_trend_to_one(&ratios, 0.25);
    Ok(CriterionResult::new(
        "5-headline-ratio",
        "ratio → 1 over u ∈ {2,4,6,8}",
        detail.trim().to_string(),
        "monotone trend (2 SE slack), final within 25%",
        trend && final_ok,
    ))
}

/// 6. Marginal tail ratio: `P(X_T > u)/Π̄⁺(u)` approaches `T e^{ψ(α)T}`.
fn c06_tail_ratio() -> Result<CriterionResult> {
    let m = headline_model();
    let (alpha, horizon) = (1.0, 2.0);
    let psi = m.cumulant(alpha)?;
    let prediction = horizon * (psi * horizon).exp();
    let mut ratios = Vec::new();
    let mut detail = String::new();
    for (i, &u) in [2.0, 4.0, 6.0, 8.0].iter().enumerate() {
        let est = estimate_tail_prob(
            &m,
            u,
            horizon,
            400_000,
            600 + i as u64,
            Importance::Esscher { alpha },
        )?;
        let tail = m.levy_tail(u);
        // normalized by the predicted constant so the trend helper applies
        ratios.push((est.estimate / tail / prediction, est.std_error / tail / prediction));
        detail.push_str(&format!("u={u}: {:.4}  ", est.estimate / tail));
    }
    let (trend, final_ok) = monotone_trend_to_one(&ratios, 0.25);
    Ok(CriterionResult::new(
        "6-tail-ratio",
        format!("ratio → T e^(psi T) = {}", fmt3(prediction)),
        detail.trim().to_string(),
        "monotone trend (2 SE slack), final within 25%",
        trend && final_ok,
    ))
}

/// 7. Infinite-horizon constant: `P(τ(u)<∞)/Π̄⁺(u)` trends to
/// `E e^{αX̄_∞}/(−ψ(α))`.
fn c07_infinite_horizon_constant() -> Result<CriterionResult> {
    let m = headline_model();
    let alpha = 1.0;
    let psi = m.cumulant(alpha)?;
    let limit = match sup_mgf_infinity(&m, alpha)? {
        SupMgfAtInfinity::Finite(v) => v / (-psi),
        SupMgfAtInfinity::Infinite => unreachable!(),
    };
    let mut norm_ratios = Vec::new();
    let mut detail = String::new();
    for (i, &u) in [1.0, 2.0, 4.0, 6.0].iter().enumerate() {
        let est = ruin_prob_infinite(&m, u, 4_000_000, 700 + i as u64)?;
        let tail = m.levy_tail(u);
        norm_ratios.push((est.estimate / tail / limit, est.std_error / tail / limit));
        detail.push_str(&format!("u={u}: {:.4}  ", est.estimate / tail));
    }
    let (trend, final_ok) = monotone_trend_to_one(&norm_ratios, 0.25);
    Ok(CriterionResult::new(
        "7-infinite-horizon-constant",
        format!("ratio → {}", fmt3(limit)),
        detail.trim().to_string(),
        "monotone trend (2 SE slack), final within 25%",
        trend && final_ok,
    ))
}

/// 8. Infinite-horizon overshoot law: conditional empirical overshoot vs the
/// closed-form limit, KS decreasing in u, final KS ≤ 0.05.
fn c08_overshoot_law_infinite_horizon() -> Result<CriterionResult> {
    let m = headline_model();
    let alpha = 1.0;
    let law = overshoot_law_infinite(&m, alpha)?;
    let cdf = law.cdf_table(60.0, 2400);
    let mut ks_values = Vec::new();
    let mut detail = String::new();
    for (i, &u) in [2.0, 4.0, 6.0].iter().enumerate() {
        let hint = m.levy_tail(u) * 1.6;
        let horizon = surrogate_horizon(&m, u, 0.01, hint)?;
        let reference = conditional_mc_reference(
            &m,
            u,
            horizon,
            150_000,
            800 + i as u64,
            Importance::Esscher { alpha },
            1_000,
        )?;
        let mut sample = reference.overshoots.clone();
        let ks = ks_vs_cdf(&mut sample, |x| cdf.eval(x));
        detail.push_str(&format!("u={u}: KS={ks:.4} (hits {})  ", reference.hits));
        ks_values.push(ks);
    }
    let decreasing = ks_values.windows(2).all(|w| w[1] <= w[0] + 0.01);
    let final_ok = *ks_values.last().unwrap() <= 0.05;
    Ok(CriterionResult::new(
        "8-overshoot-law-infinite-horizon",
        "conditional overshoot → total-variation limit law",
        detail.trim().to_string(),
        "KS decreasing in u, final ≤ 0.05",
        decreasing && final_ok,
    ))
}

/// 9. Critical overshoot law: normalization within 1e-4; the ψ(α) = −ε
/// family approaches it pointwise on a γ grid, final gap ≤ 1e-3.
fn c09_cramer_overshoot() -> Result<CriterionResult> {
    let alpha = 1.0;
    let claims = ClaimDistribution::tilted_pareto(1.0, 2.5, 1.0).unwrap();
    let lam = 1.0;
    let m_alpha = claims.mgf(alpha)?;
    // tune p to the critical point ψ(α; p) = 0
    let p_critical = lam * (m_alpha - 1.0) / alpha;
    let critical_model = RiskModel::new(lam, p_critical, claims.clone())?;
    let law = overshoot_law_cramer(&critical_model, alpha)?;
    let mass = law.total_mass();
    let mass_ok = (mass - 1.0).abs() <= 1e-4;

    let grid = [0.0, 0.5, 1.0, 2.0, 4.0];
    let mut gaps = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let p = (lam * (m_alpha - 1.0) + eps) / alpha;
        let nearby = overshoot_law_infinite(&RiskModel::new(lam, p, claims.clone())?, alpha)?;
        let gap = grid
            .iter()
            .map(|&g| (nearby.density(g) - law.density(g)).abs())
            .fold(0.0f64, f64::max);
        gaps.push(gap);
    }
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0]);
    let final_ok = *gaps.last().unwrap() <= 1e-3;
    Ok(CriterionResult::new(
        "9-critical-overshoot",
        "mass 1; ε-family → critical density",
        format!("mass {mass:.8}; gaps {:?}", gaps.iter().map(|g| format!("{g:.2e}")).collect::<Vec<_>>()),
        "mass within 1e-4; max-gap ≤ 1e-3, shrinking",
        mass_ok && shrinking && final_ok,
    ))
}

/// 10. Conditioned sampler marginals: jump-time law, passage-time margin
/// against `B(t)/B(T)`, two-sampler overshoot agreement improving in u.
fn c10_conditioned_sampler_marginals() -> Result<CriterionResult> {
    let m = tp_model(1.0, 2.0, 1.0, 2.5, 1.0);
    let (alpha, horizon) = (1.0, 2.0);

    // (a) standalone jump-time sampler against its analytic law
    let psi = m.cumulant(alpha)?;
    let mut rng = substream(1000, 0);
    let mut draws: Vec<(f64, f64)> = (0..100_000)
        .map(|_| (sample_tau(&m, alpha, horizon, &mut rng).unwrap(), 1.0))
        .collect();
    let tau_cdf = |t: f64| ((psi * t).exp_m1() / (psi * horizon).exp_m1()).clamp(0.0, 1.0);
    let ks_tau = ks_vs_cdf(&mut draws, tau_cdf);

    // (b) passage-time margin of the triple against B(t)/B(T), with the
    // deterministic Laplace route as the independent reference curve
    let grid = build_passage_grid(&m, alpha, horizon, 32, 20_000, 1001)?;
    let triples = sample_triples(&grid, 60_000, 1002)?;
    let n_ref = 48usize;
    let mut bs = vec![0.0];
    for k in 1..=n_ref {
        let t = horizon * k as f64 / n_ref as f64;
        bs.push(b_laplace(&m, alpha, t)?.value);
    }
    let bt = *bs.last().unwrap();
    let ref_cdf = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let x = t / horizon * n_ref as f64;
        let j = (x.floor() as usize).min(n_ref - 1);
        let w = x - j as f64;
        ((bs[j] + w * (bs[j + 1] - bs[j])) / bt).clamp(0.0, 1.0)
    };
    let mut passage: Vec<(f64, f64)> = triples.iter().map(|f| (f.tau + f.tau0, 1.0)).collect();
    let ks_passage = ks_vs_cdf(&mut passage, ref_cdf);

    // (c) overshoot margin vs direct conditional Monte Carlo, improving in u
    let mut triple_overshoots: Vec<(f64, f64)> =
        triples.iter().map(|f| (f.overshoot, 1.0)).collect();
    let mut ks_two = Vec::new();
    for (i, &u) in [3.0, 6.0, 9.0].iter().enumerate() {
        let reference = conditional_mc_reference(
            &m,
            u,
            horizon,
            200_000,
            1100 + i as u64,
            Importance::Esscher { alpha },
            1_000,
        )?;
        let mut ref_sample = reference.overshoots.clone();
        ks_two.push(ks_two_sample(&mut triple_overshoots, &mut ref_sample));
    }
    let decreasing = ks_two.windows(2).all(|w| w[1] <= w[0] + 0.01);
    let final_ok = *ks_two.last().unwrap() <= 0.05;

    let pass = ks_tau <= 0.01 && ks_passage <= 0.02 && decreasing && final_ok;
    Ok(CriterionResult::new(
        "10-conditioned-sampler-marginals",
        "jump-time law; passage margin = B(t)/B(T); two-sampler overshoot",
        format!(
            "KS(tau)={ks_tau:.4}; KS(passage)={ks_passage:.4}; KS(overshoot)={:?}",
            ks_two.iter().map(|k| format!("{k:.4}")).collect::<Vec<_>>()
        ),
        "0.01 / 0.02 / decreasing with final ≤ 0.05",
        pass,
    ))
}

/// 11. Ladder-measure identity (friendly inversion): analytic gap ≤ 1e-12 on
/// both claim families; a ×1.01 perturbation must be detected.
fn c11_vigon_identity(fault_injection: bool) -> Result<CriterionResult> {
    let grid = [0.5, 1.0, 2.0, 4.0];
    let factor = if fault_injection { 1.01 } else { 1.0 };
    let g_exp = vigon_check(&exp_model(1.0, 2.0, 1.0), &grid, factor)?;
    let g_tp = vigon_check(&headline_model(), &grid, factor)?;
    let faulty = vigon_check(&headline_model(), &grid, 1.01)?;
    let pass = g_exp <= 1e-12 && g_tp <= 1e-12 && (faulty - 0.01).abs() < 1e-3;
    Ok(CriterionResult::new(
        "11-ladder-identity",
        "gap ≤ 1e-12; injected ×1.01 fault detected",
        format!("exp={g_exp:.2e} pareto={g_tp:.2e} injected={faulty:.4}"),
        "1e-12",
        pass,
    ))
}

/// 12. Exactness of path functionals and bitwise determinism across reruns
/// and worker counts.
fn c12_exactness_and_determinism() -> Result<CriterionResult> {
    use crate::path::{CrossingMode, PathSample};
    // hand-built three-jump path: exact, no tolerance
    let path = PathSample {
        horizon: 4.0,
        times: vec![0.5, 1.0, 3.0],
        sizes: vec![2.0, 0.25, 4.0],
        premium_rate: 1.0,
        start: 0.0,
    };
    let exact = path.running_sup(2.0) == 1.5
        && path.running_sup(4.0) == 3.25
        && path.first_passage(3.0).map(|e| {
            e.time == 3.0 && e.overshoot == 0.25 && e.mode == CrossingMode::Jump && e.pre_sup == 1.5
        }) == Some(true)
        && path.first_passage(3.5).is_none();

    let m = headline_model();
    let run = || estimate_ruin_prob(&m, 3.0, 2.0, 40_000, 1200, Importance::None).unwrap();
    let a = run();
    let b = run();
    let rerun_identical =
        a.estimate.to_bits() == b.estimate.to_bits() && a.std_error.to_bits() == b.std_error.to_bits();

    let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let w1 = pool1.install(run);
    let w4 = pool4.install(run);
    let workers_identical = w1.estimate.to_bits() == w4.estimate.to_bits()
        && w1.std_error.to_bits() == w4.std_error.to_bits();

    Ok(CriterionResult::new(
        "12-exactness-and-determinism",
        "exact path functionals; bit-identical reruns; worker-count independence",
        format!("exact={exact} rerun={rerun_identical} workers={workers_identical}"),
        "exact equality",
        exact && rerun_identical && workers_identical,
    ))
}

/// 13. Classical adjustment-coefficient oracle: ν = ½, C = ½ analytically;
/// long-horizon Monte Carlo at u = 5 matches `½e^{-5/2}` within 3 SE.
fn c13_classical_oracle() -> Result<CriterionResult> {
    let m = exp_model(1.0, 2.0, 1.0);
    let nu = m.lundberg_root().unwrap_or(f64::NAN);
    let c = -m.mean_increment() / m.cumulant_d1(nu)?;
    let analytic_ok = (nu - 0.5).abs() <= 1e-10 && (c - 0.5).abs() <= 1e-10;

    let expect = 0.5 * (-2.5f64).exp();
    let horizon = surrogate_horizon(&m, 5.0, 0.01, expect)?;
    let est = estimate_ruin_prob(&m, 5.0, horizon, 400_000, 1300, Importance::None)?;
    let mc_ok = (est.estimate - expect).abs() <= 3.0 * est.std_error;
    // the Segerdahl comparator must also recover the asymptote at huge T
    let seg = segerdahl(&m, 5.0, 1e9).unwrap_or(f64::NAN);
    let seg_ok = (seg - expect).abs() <= 1e-10;
    Ok(CriterionResult::new(
        "13-classical-oracle",
        format!("nu=0.5, C=0.5, P = {}", fmt3(expect)),
        format!(
            "nu={nu:.12}, C={c:.12}, MC={}±{} (horizon {horizon:.1}), segerdahl(T→∞)={}",
            fmt3(est.estimate),
            fmt3(est.std_error),
            fmt3(seg)
        ),
        "1e-10 analytic / 3 SE Monte Carlo",
        analytic_ok && mc_ok && seg_ok,
    ))
}

/// Consistency flag used by the CLI `estimate-b` table.
pub fn methods_consistent(estimates: &[BEstimate]) -> bool {
    for (i, a) in estimates.iter().enumerate() {
        for b in &estimates[i + 1..] {
            let floor = if a.std_error == 0.0 || b.std_error == 0.0 { 0.005 } else { 0.0 };
            if !a.consistent_with(b, floor) {
                return false;
            }
        }
    }
    true
}
