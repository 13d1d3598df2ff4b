//! The theory-verification battery: Monte Carlo estimates of quantities with
//! known exact or limiting values, each turned into a pass/fail row.

use serde::{Deserialize, Serialize};

use super::{parallel_map, ExperimentConfig, ResultRow, VerificationReport, REFERENCE_STREAM_BASE};
use crate::descendants::{level_n1, simulate_recursion, TraceOptions};
use crate::error::{invalid, Result};
use crate::generators::{generate, sequential_tuple_probabilities, tuple_code};
use crate::randomness::{beta_unchecked, make_stream, Gamma, RngStream};
use crate::stats::{chi_square, ks_critical, sorted, summarize, two_sample_ks};
use crate::theory::{
    beta_shapes, derive_constants, expected_beta_moments, expected_phi, expected_s,
    expected_s_deviation_constant, limit_law, limit_moment, limit_reference_sample,
    lh_integrals, m1_drift, phi_asymptotic_constant, tree_expected_descendants, ModelParams,
    Variant,
};
use crate::yule::yule_at;

/// Replicate counts: `Quick` for smoke runs and tests, `Full` for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatteryScale {
    #[default]
    Quick,
    Full,
}

impl std::str::FromStr for BatteryScale {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(BatteryScale::Quick),
            "full" => Ok(BatteryScale::Full),
            other => Err(invalid(format!("unknown scale '{other}'"))),
        }
    }
}

/// Check names in battery order; check `i` is also selected by the letter
/// `'a' + i`.
pub const CHECK_NAMES: [&str; 10] = [
    "expected-s",
    "expected-phi",
    "beta-moments",
    "s-concentration",
    "lh-sums",
    "pa-pu",
    "xi-limit",
    "yule",
    "self-loop",
    "trees",
];

/// `K^-((m-1)χ) · m · ∏_{j=2}^{K} (1 + (m-1) B_j)`, a truncated draw of the
/// limit of the normalized product `Φ_K`.
pub fn beta_tilde_sample(m: u32, rho: f64, k: u64, stream: &mut RngStream) -> Result<f64> {
    let c = derive_constants(m, rho)?;
    if k < 2 {
        return Err(invalid(format!("K must be at least 2, got {k}")));
    }
    let mf1 = m as f64 - 1.0;
    let mut log_phi = (m as f64).ln();
    for j in 2..=k {
        let (a, b) = beta_shapes(j, m, rho);
        log_phi += (mf1 * beta_unchecked(stream, a, b)).ln_1p();
    }
    Ok((log_phi - c.kappa * (k as f64).ln()).exp())
}

fn stream_id(check: usize, sub: u64, replicate: u64) -> u64 {
    ((check as u64 + 1) << 40) + (sub << 32) + replicate
}

struct Ctx {
    seed: u64,
    threads: usize,
    full: bool,
    reference_size: usize,
}

impl Ctx {
    fn pick<T>(&self, quick: T, full: T) -> T {
        if self.full {
            full
        } else {
            quick
        }
    }

    /// Runs `f` for replicates `0..reps` on the streams of `(check, sub)`.
    fn replicate<T, F>(&self, check: usize, sub: u64, reps: u64, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut RngStream) -> Result<T> + Sync + Send,
    {
        parallel_map(self.threads, reps, |r| {
            let mut s = make_stream(self.seed, stream_id(check, sub, r));
            f(&mut s)
        })
    }
}

fn row(name: String, variant: Variant, m: u32, rho: f64, n: u64, reps: u64, est: f64) -> ResultRow {
    ResultRow::new(name, variant.as_str(), est)
        .model(m, rho, n)
        .replicates(reps)
}

/// Row for a sample mean compared with `reference` within `k` standard errors
/// plus an absolute `slack`.
#[allow(clippy::too_many_arguments)]
fn mean_check(
    name: String,
    model: (Variant, u32, f64, u64),
    samples: &[f64],
    reference: f64,
    source: &str,
    k: f64,
    slack: f64,
) -> Result<ResultRow> {
    let s = summarize(samples)?;
    let se = s.stderr.unwrap_or(0.0);
    let ok = (s.mean - reference).abs() < k * se + slack;
    let rule = if slack > 0.0 {
        format!("{source}; pass if |diff| < {k} se + {slack:.3e}")
    } else {
        format!("{source}; pass if |diff| < {k} se")
    };
    let (v, m, rho, n) = model;
    Ok(row(name, v, m, rho, n, samples.len() as u64, s.mean)
        .stderr(s.stderr)
        .reference(reference, rule)
        .pass(ok))
}

/// Row for a two-sample KS distance that must stay below `max(floor, critical)`.
fn ks_check(
    name: String,
    model: (Variant, u32, f64, u64),
    a: Vec<f64>,
    b: Vec<f64>,
    floor: f64,
    source: &str,
) -> Result<ResultRow> {
    let (a, b) = (sorted(a), sorted(b));
    let d = two_sample_ks(&a, &b)?;
    let threshold = floor.max(ks_critical(1e-3, a.len(), b.len()));
    let (v, m, rho, n) = model;
    Ok(row(name, v, m, rho, n, a.len() as u64, d)
        .reference(threshold, format!("two_sample_ks against {source}; pass if below reference"))
        .pass(d < threshold))
}

// (a) E S_{n,k}, plus the realized constant of the O(n^-chi k^(chi-1)) bound.
fn check_expected_s(ctx: &Ctx) -> Result<Vec<ResultRow>> {
    let reps = ctx.pick(20_000, 100_000);
    let mut rows = Vec::new();
    let points: [(u64, u64, u32, f64); 3] = [(1000, 100, 2, 0.0), (1000, 500, 3, 1.0), (500, 50, 2, -0.5)];
    for (sub, &(n, k, m, rho)) in points.iter().enumerate() {
        let samples = ctx.replicate(0, sub as u64, reps, |s| {
            let mut prod = 1.0;
            for i in k + 1..n {
                let (a, b) = beta_shapes(i, m, rho);
                prod *= 1.0 - beta_unchecked(s, a, b);
            }
            Ok(prod)
        })?;
        rows.push(mean_check(
            format!("a:E S(k={k})"),
            (Variant::PolyaUrn, m, rho, n),
            &samples,
            expected_s(n, k, m, rho)?,
            "expected_s",
            4.0,
            0.0,
        )?);
    }
    let (n, k) = (10_000, 100);
    let c = expected_s_deviation_constant(n, k, 2, 0.0)?;
    rows.push(
        row("a:S deviation constant(k=100)".into(), Variant::PolyaUrn, 2, 0.0, n, 0, c)
            .reference(2.0, "expected_s_deviation_constant; pass if below reference")
            .pass(c < 2.0),
    );
    Ok(rows)
}

// (b) E Φ_k and the asymptotic constant of E Φ_k / k^((m-1)chi).
fn check_expected_phi(ctx: &Ctx) -> Result<Vec<ResultRow>> {
    let reps = ctx.pick(20_000, 100_000);
    let k = 1000;
    let mut rows = Vec::new();
    let points: [(u32, f64); 3] = [(2, 0.0), (3, 1.0), (2, -0.5)];
    for (sub, &(m, rho)) in points.iter().enumerate() {
        let mf1 = m as f64 - 1.0;
        let samples = ctx.replicate(1, sub as u64, reps, |s| {
            let mut log_phi = (m as f64).ln();
            for j in 2..=k {
                let (a, b) = beta_shapes(j, m, rho);
                log_phi += (mf1 * beta_unchecked(s, a, b)).ln_1p();
            }
            Ok(log_phi.exp())
        })?;
        rows.push(mean_check(
            format!("b:E Phi(k={k})"),
            (Variant::PolyaUrn, m, rho, k + 1),
            &samples,
            expected_phi(k, m, rho)?,
            "expected_phi",
            4.0,
            0.0,
        )?);
    }
    let big = 1_000_000;
    let kappa = derive_constants(2, 0.0)?.kappa;
    let ratio = expected_phi(big, 2, 0.0)? / (big as f64).powf(kappa);
    let target = 4.0 / std::f64::consts::PI.sqrt();
    let constant = phi_asymptotic_constant(2, 0.0)?;
    rows.push(
        row("b:E Phi(k)/k^kappa(k=1e6)".into(), Variant::PolyaUrn, 2, 0.0, big + 1, 0, ratio)
            .reference(target, "4/sqrt(pi); pass if relative gap < 1e-3")
            .pass((ratio / target - 1.0).abs() < 1e-3),
    );
    rows.push(
        row("b:phi_asymptotic_constant".into(), Variant::PolyaUrn, 2, 0.0, 0, 0, constant)
            .reference(target, "4/sqrt(pi); pass if relative gap < 1e-12")
            .pass((constant / target - 1.0).abs() < 1e-12),
    );
    Ok(rows)
}

// (c) First and second moments of single beta factors.
fn check_beta_moments(ctx: &Ctx) -> Result<Vec<ResultRow>> {
    let reps = ctx.pick(100_000, 1_000_000);
    let mut rows = Vec::new();
    let points: [(u64, u32, f64); 3] = [(10, 2, 0.0), (5, 3, 1.0), (50, 2, -0.5)];
    for (sub, &(i, m, rho)) in points.iter().enumerate() {
        let (a, b) = beta_shapes(i, m, rho);
        let samples = ctx.replicate(2, sub as u64, reps, |s| Ok(beta_unchecked(s, a, b)))?;
        let squares: Vec<f64> = samples.iter().map(|x| x * x).collect();
        let (m1, m2) = expected_beta_moments(i, m, rho)?;
        let model = (Variant::PolyaUrn, m, rho, i);
        rows.push(mean_check(format!("c:E B(i={i})"), model, &samples, m1, "expected_beta_moments", 4.0, 0.0)?);
        rows.push(mean_check(format!("c:E B^2(i={i})"), model, &squares, m2, "expected_beta_moments", 4.0, 0.0)?);
    }
    Ok(rows)
}

// (d) Uniform closeness of S_{n,k} to (k/n)^chi above psi = n / ln n.
fn check_s_concentration(ctx: &Ctx) -> Result<Vec<ResultRow>> {
    let (n, reps): (u64, u64) = ctx.pick((10_000, 200), (100_000, 1000));
    let (m, rho) = (2, 0.0);
    let chi = derive_constants(m, rho)?.chi;
    let nf = n as f64;
    let psi = nf / nf.ln();
    let lo = psi.ceil() as u64;
    let delta = psi.powf(-1.0 / 3.0);
    let devs = ctx.replicate(3, 0, reps, |s| {
        let mut prod = 1.0;
        let mut worst: f64 = 0.0;
        for k in (lo..n).rev() {
            if k + 1 < n {
                let (a, b) = beta_shapes(k + 1, m, rho);
                prod *= 1.0 - beta_unchecked(s, a, b);
            }
            worst = worst.max((prod - (k as f64 / nf).powf(chi)).abs());
        }
        Ok(worst)
    })?;
    // Doob's L2 inequality for the martingale S_{n,k} / E S_{n,k}.
    let mut ratio = 1.0;
    for i in lo + 1..n {
        let (e1, e2) = expected_beta_moments(i, m, rho)?;
        ratio *= (1.0 - 2.0 * e1 + e2) / ((1.0 - e1) * (1.0 - e1));
    }
    let bound = ((ratio - 1.0) / (delta * delta)).min(1.0);
    let frac = devs.iter().filter(|&&d| d >= 2.0 * delta).count() as f64 / reps as f64;
    let slack = 3.0 * (bound * (1.0 - bound) / reps as f64).sqrt();
    let mean_dev = summarize(&devs)?;
    Ok(vec![
        row("d:P(max dev >= 2 delta)".into(), Variant::PolyaUrn, m, rho, n, reps, frac)
            .reference(bound, "Chebyshev-Doob bound Var(M)/delta^2; pass if below reference + 3 se")
            .pass(frac <= bound + slack),
        row("d:mean max dev".into(), Variant::PolyaUrn, m, rho, n, reps, mean_dev.mean)
            .stderr(mean_dev.stderr)
            .reference(2.0 * delta, "2 psi^(-1/3); pass if below reference")
            .pass(mean_dev.mean < 2.0 * delta),
    ])
}

// (e) The rescaled sums approximating the limit integrals H and I.
fn check_lh_sums(ctx: &Ctx) -> Result<Vec<ResultRow>> {
    let reps = ctx.pick(2000, 10_000);
    let lambda: f64 = 1000.0;
    let (m, rho) = (2, 0.0);
    let nu = derive_constants(m, rho)?.nu;
    let n = lambda.powf(1.0 / nu).round() as u64;
    let mut rows = Vec::new();
    for (sub, &(s0, t0, y)) in [(0.5, 2.0, 1.0), (1.0, 3.0, 2.0)].iter().enumerate() {
        let lo = (s0 * lambda).floor() as u64 + 1;
        let hi = (t0 * lambda).floor() as u64;
        let ly = lambda * y;
        let sums = ctx.replicate(4, sub as u64, reps, |s| {
            let (mut h, mut i) = (0.0, 0.0);
            for idx in lo..=hi {
                let (a, b) = beta_shapes(idx, m, rho);
                let beta = beta_unchecked(s, a, b);
                let surv = (ly * (-beta).ln_1p()).exp();
                h += surv - 1.0 + ly * beta;
                i += 1.0 - surv;
            }
            Ok((h / lambda, i / lambda))
        })?;
        let (h_lim, i_lim) = lh_integrals(s0, t0, y, m, rho)?;
        let hs: Vec<f64> = sums.iter().map(|p| p.0).collect();
        let is: Vec<f64> = sums.iter().map(|p| p.1).collect();
        let tag = format!("s={s0},t={t0},y={y}");
        let model = (Variant::PolyaUrn, m, rho, n);
        rows.push(mean_check(format!("e:H sum({tag})"), model, &hs, h_lim, "lh_integrals", 4.0, 0.01 * h_lim.abs())?);
        rows.push(mean_check(format!("e:I sum({tag})"), model, &is, i_lim, "lh_integrals", 4.0, 0.01 * i_lim.abs())?);
    }
    Ok(rows)
}

// (f) Sequential and Pólya-urn graphs at n = 4 against exact tuple probabilities.
fn check_pa_pu(ctx: &Ctx) -> Result<Vec<ResultRow>> {
    let reps = ctx.pick(100_000, 1_000_000);
    let (m, rho, n) = (2, 0.0, 4);
    let probs = sequential_tuple_probabilities(m, rho, n)?;
    let mut rows = Vec::new();
    for (sub, variant) in [Variant::Sequential, Variant::PolyaUrn].into_iter().enumerate() {
        let params = ModelParams::new(variant, m, rho, n, ctx.seed);
        let codes = ctx.replicate(5, sub as u64, reps, |s| Ok(tuple_code(&generate(&params, s)?)))?;
        let mut counts = vec![0u64; probs.len()];
        for c in codes {
            counts[c] += 1;
        }
        let test = chi_square(&counts, &probs)?;
        rows.push(
            row("f:tuple chi-square p".into(), variant, m, rho, n, reps, test.p_value)
                .reference(1e-3, "sequential_tuple_probabilities; pass if p above reference")
                .pass(test.p_value > 1e-3),
        );
    }
    Ok(rows)
}

// (g) Ξ against products of the normalizer limit and an independent Gamma.
fn check_xi_limit(ctx: &Ctx) -> Result<Vec<ResultRow>> {
    let (n, reps, k): (u64, u64, u64) = ctx.pick((100_000, 500, 10_000), (1_000_000, 2000, 100_000));
    let (m, rho) = (2, 0.0);
    let params = ModelParams::new(Variant::PolyaUrn, m, rho, n, ctx.seed);
    let opts = TraceOptions {
        xi: true,
        ..Default::default()
    };
    let xis = ctx.replicate(6, 0, reps, |s| {
        let t = simulate_recursion(&params, s, &opts)?;
        Ok(t.xi.unwrap_or(0.0))
    })?;
    let mf = m as f64;
    let gamma = Gamma::new(mf / (mf - 1.0), mf - 1.0)?;
    let tildes = ctx.replicate(6, 1, reps, |s| beta_tilde_sample(m, rho, k, s))?;
    let products = ctx.replicate(6, 2, reps, |s| {
        Ok(gamma.sample(s))
    })?
    .into_iter()
    .zip(&tildes)
    .map(|(g, b)| g * b)
    .collect();
    let model = (Variant::PolyaUrn, m, rho, n);
    let mut rows = vec![ks_check(
        format!("g:ks(Xi, beta_tilde*xi, K={k})"),
        model,
        xis,
        products,
        0.08,
        "beta_tilde_sample x Gamma(m/(m-1), m-1)",
    )?];
    let constant = phi_asymptotic_constant(m, rho)?;
    let kappa = derive_constants(m, rho)?.kappa;
    let normalized: Vec<f64> = tildes.iter().map(|b| b / constant).collect();
    let finite_k = expected_phi(k, m, rho)? / ((k as f64).powf(kappa) * constant);
    rows.push(mean_check(
        format!("g:E beta_tilde/constant(K={k})"),
        (Variant::PolyaUrn, m, rho, k),
        &normalized,
        finite_k,
        "expected_phi(K)/(K^kappa phi_asymptotic_constant)",
        4.0,
        0.0,
    )?);
    let min = tildes.iter().copied().fold(f64::INFINITY, f64::min);
    rows.push(
        row(format!("g:min beta_tilde(K={k})"), Variant::PolyaUrn, m, rho, k, reps, min)
            .reference(0.0, "positivity; pass if above reference")
            .pass(min > 0.0),
    );
    Ok(rows)
}

// (h) Yule process moments, its Gamma limit, and the coupling with Y_{n1}.
fn check_yule(ctx: &Ctx) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    let mean_reps = ctx.pick(20_000, 100_000);
    for (sub, &(m, x)) in [(2u32, 0.1), (3, 0.2)].iter().enumerate() {
        let counts = ctx.replicate(7, sub as u64, mean_reps, |s| Ok(yule_at(m, x, s)?.count as f64))?;
        rows.push(mean_check(
            format!("h:E Yule(x={x})"),
            (Variant::PolyaUrn, m, 0.0, 0),
            &counts,
            m as f64 / x.powi(m as i32 - 1),
            "m/x^(m-1)",
            3.0,
            0.0,
        )?);
    }
    let ks_reps = ctx.pick(2000, 10_000);
    let ref_reps = ctx.pick(20_000, 100_000);
    for (i, &(m, x)) in [(2u32, 1e-3), (3, 1e-2)].iter().enumerate() {
        let sub = 2 + 2 * i as u64;
        let scaled = ctx.replicate(7, sub, ks_reps, |s| Ok(yule_at(m, x, s)?.scaled))?;
        let mf = m as f64;
        let gamma = Gamma::new(mf / (mf - 1.0), mf - 1.0)?;
        let reference = ctx.replicate(7, sub + 1, ref_reps, |s| Ok(gamma.sample(s)))?;
        rows.push(ks_check(
            format!("h:ks(x^(m-1) Yule, Gamma)(x={x})"),
            (Variant::PolyaUrn, m, 0.0, 0),
            scaled,
            reference,
            0.03,
            "Gamma(m/(m-1), m-1)",
        )?);
    }
    let (n, reps): (u64, u64) = ctx.pick((100_000, 2000), (1_000_000, 10_000));
    let (m, rho) = (2, 0.0);
    let chi = derive_constants(m, rho)?.chi;
    let n1 = level_n1(n);
    let params = ModelParams::new(Variant::PolyaUrn, m, rho, n, ctx.seed);
    let opts = TraceOptions {
        stop_at: Some(n1),
        ..Default::default()
    };
    let levels = ctx.replicate(7, 6, reps, |s| {
        Ok(simulate_recursion(&params, s, &opts)?.y_n1.unwrap_or(0) as f64)
    })?;
    let x = (n1 as f64 / n as f64).powf(chi);
    let yules = ctx.replicate(7, 7, reps, |s| Ok(yule_at(m, x, s)?.count as f64))?;
    rows.push(ks_check(
        "h:ks(Y_n1, Yule((n1/n)^chi))".into(),
        (Variant::PolyaUrn, m, rho, n),
        levels,
        yules,
        0.05,
        "yule_at((n1/n)^chi)",
    )?);
    Ok(rows)
}

// (i) The self-loop model has the same limit law.
fn check_self_loop(ctx: &Ctx) -> Result<Vec<ResultRow>> {
    let (n, reps): (u64, u64) = ctx.pick((100_000, 300), (1_000_000, 1000));
    let (m, rho) = (2, 0.0);
    let law = limit_law(m, rho)?;
    let scale = (n as f64).powf(law.constants.nu);
    let run = |variant: Variant, sub: u64| {
        let params = ModelParams::new(variant, m, rho, n, ctx.seed);
        ctx.replicate(8, sub, reps, |s| {
            Ok(simulate_recursion(&params, s, &TraceOptions::default())?.x as f64 / scale)
        })
    };
    let loops = run(Variant::SelfLoop, 0)?;
    let plain = run(Variant::PolyaUrn, 1)?;
    let mean = summarize(&loops)?;
    let target = limit_moment(&law, 1.0)?;
    let model = (Variant::SelfLoop, m, rho, n);
    let mut reference_stream = make_stream(ctx.seed, REFERENCE_STREAM_BASE | stream_id(8, 2, 0));
    let reference = limit_reference_sample(&law, ctx.reference_size, &mut reference_stream);
    Ok(vec![
        row("i:mean(X/n^nu)".into(), Variant::SelfLoop, m, rho, n, reps, mean.mean)
            .stderr(mean.stderr)
            .reference(target, "limit_moment(p=1); pass if within 12%")
            .pass((mean.mean / target - 1.0).abs() < 0.12),
        ks_check("i:ks(X/n^nu, limit)".into(), model, loops.clone(), reference, 0.08, "limit_reference_sample")?,
        ks_check("i:ks(X/n^nu, polya-urn)".into(), model, loops, plain, 0.08, "polya-urn X/n^nu")?,
    ])
}

// (j) Trees: X grows like (1+ρ)/(2+ρ) ln n.
fn check_trees(ctx: &Ctx) -> Result<Vec<ResultRow>> {
    let (n, reps): (u64, u64) = ctx.pick((100_000, 200), (1_000_000, 1000));
    let rho = 0.0;
    let small = n / 100;
    let run = |size: u64, sub: u64| {
        let params = ModelParams::new(Variant::PolyaUrn, 1, rho, size, ctx.seed);
        ctx.replicate(9, sub, reps, |s| {
            Ok(simulate_recursion(&params, s, &TraceOptions::default())?.x as f64)
        })
    };
    let big_x = run(n, 0)?;
    let small_x = run(small, 1)?;
    let drift = m1_drift(rho)?;
    let ln_n = (n as f64).ln();
    let scaled: Vec<f64> = big_x.iter().map(|x| x / ln_n).collect();
    let s = summarize(&scaled)?;
    let model = (Variant::PolyaUrn, 1, rho, n);
    let big = summarize(&big_x)?;
    let little = summarize(&small_x)?;
    let span = (n as f64 / small as f64).ln();
    let slope = (big.mean - little.mean) / span;
    let slope_se = (big.stderr.unwrap_or(0.0).powi(2) + little.stderr.unwrap_or(0.0).powi(2)).sqrt() / span;
    Ok(vec![
        row("j:mean(X/ln n)".into(), Variant::PolyaUrn, 1, rho, n, reps, s.mean)
            .stderr(s.stderr)
            .reference(drift, "m1_drift; pass if within 10%")
            .pass((s.mean / drift - 1.0).abs() < 0.1),
        mean_check(
            "j:mean(X)".into(),
            model,
            &big_x,
            tree_expected_descendants(n, rho)?,
            "tree_expected_descendants",
            4.0,
            0.0,
        )?,
        row(format!("j:slope of mean(X) in ln n(n/{})", n / small), Variant::PolyaUrn, 1, rho, n, reps, slope)
            .stderr(Some(slope_se))
            .reference(drift, "m1_drift; pass if |diff| < 4 se")
            .pass((slope - drift).abs() < 4.0 * slope_se),
    ])
}

type Check = fn(&Ctx) -> Result<Vec<ResultRow>>;

const CHECKS: [Check; 10] = [
    check_expected_s,
    check_expected_phi,
    check_beta_moments,
    check_s_concentration,
    check_lh_sums,
    check_pa_pu,
    check_xi_limit,
    check_yule,
    check_self_loop,
    check_trees,
];

fn selected(checks: &[String]) -> Result<Vec<usize>> {
    let mut picked = vec![false; CHECK_NAMES.len()];
    for c in checks {
        if c == "all" {
            picked.iter_mut().for_each(|p| *p = true);
            continue;
        }
        let idx = CHECK_NAMES
            .iter()
            .enumerate()
            .position(|(i, name)| *name == c || c.len() == 1 && c.as_bytes()[0] == b'a' + i as u8)
            .ok_or_else(|| invalid(format!("unknown check '{c}'")))?;
        picked[idx] = true;
    }
    Ok((0..picked.len()).filter(|&i| picked[i]).collect())
}

/// Runs the selected checks. A check that errors is reported as a single
/// failed row and the remaining checks still run.
pub fn run_theory_battery(config: &ExperimentConfig) -> Result<VerificationReport> {
    let ctx = Ctx {
        seed: config.params.master_seed,
        threads: config.threads,
        full: config.scale == BatteryScale::Full,
        reference_size: config.reference_size.max(1),
    };
    let mut rows = Vec::new();
    for i in selected(&config.checks)? {
        match CHECKS[i](&ctx) {
            Ok(r) => rows.extend(r),
            Err(e) => rows.push(
                ResultRow::new(format!("{}:{}", (b'a' + i as u8) as char, CHECK_NAMES[i]), "-", 0.0)
                    .provenance(format!("error: {e}"))
                    .pass(false),
            ),
        }
    }
    Ok(VerificationReport { rows })
}
