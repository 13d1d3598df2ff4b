//! Closed-form and quadrature evaluation of the model's exact quantities:
//! derived exponents, the limit law of the descendant count and its moments,
//! Gamma-ratio expectations of the urn variables, the scaling ODE, the beta
//! integral identity, and the limiting mean curves.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::randomness::{Gamma, RngStream};
use crate::special::{gamma, gamma_upper_quantile, ln_gamma, ln_gamma_ratio};

/// Which construction of the graph is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Edge-by-edge preferential attachment.
    Sequential,
    /// Beta/stick-breaking representation of the same law.
    #[serde(alias = "polya")]
    PolyaUrn,
    /// Sequential attachment where the new vertex may also attach to itself.
    #[serde(alias = "selfloop")]
    SelfLoop,
    /// Every target uniform among earlier vertices.
    Uniform,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Sequential,
        Variant::PolyaUrn,
        Variant::SelfLoop,
        Variant::Uniform,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Sequential => "sequential",
            Variant::PolyaUrn => "polya-urn",
            Variant::SelfLoop => "self-loop",
            Variant::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Variant::Sequential),
            "polya" | "polya-urn" => Ok(Variant::PolyaUrn),
            "selfloop" | "self-loop" => Ok(Variant::SelfLoop),
            "uniform" => Ok(Variant::Uniform),
            other => Err(invalid(format!("unknown variant '{other}'"))),
        }
    }
}

/// Model parameters: `m` edges per new vertex, additive attractiveness `rho`,
/// `n` vertices in total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub variant: Variant,
    pub m: u32,
    pub rho: f64,
    pub n: u64,
    pub master_seed: u64,
}

impl ModelParams {
    pub fn new(variant: Variant, m: u32, rho: f64, n: u64, master_seed: u64) -> Self {
        ModelParams {
            variant,
            m,
            rho,
            n,
            master_seed,
        }
    }

    /// Checks `m >= 1`, `n >= 1` and `rho > -m` (the latter skipped for the
    /// uniform variant, which has no `rho`).
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if self.variant != Variant::Uniform {
            check_rho(self.m, self.rho)?;
        }
        Ok(())
    }
}

fn check_rho(m: u32, rho: f64) -> Result<()> {
    if !(rho > -(m as f64)) || !rho.is_finite() {
        return Err(invalid(format!("rho must exceed -m = -{m}, got {rho}")));
    }
    Ok(())
}

fn check_model(m: u32, rho: f64) -> Result<()> {
    if m < 2 {
        return Err(invalid(format!("m must be at least 2, got {m}")));
    }
    check_rho(m, rho)
}

/// Exponents derived from `(m, rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub m: u32,
    pub rho: f64,
    /// Growth exponent of the descendant count, `X ~ n^nu`.
    pub nu: f64,
    /// `(m + rho) / theta`.
    pub chi: f64,
    /// `2m + rho`, the per-vertex growth of the total weight.
    pub theta: f64,
    /// `1 + kappa = 1 / (1 - nu)`.
    pub alpha: f64,
    /// `(m - 1) chi`.
    pub kappa: f64,
}

pub fn derive_constants(m: u32, rho: f64) -> Result<DerivedConstants> {
    check_model(m, rho)?;
    let mf = m as f64;
    let theta = 2.0 * mf + rho;
    let chi = (mf + rho) / theta;
    let kappa = (mf - 1.0) * chi;
    let nu = (mf - 1.0) * (mf + rho) / (mf * (mf + rho + 1.0));
    Ok(DerivedConstants {
        m,
        rho,
        nu,
        chi,
        theta,
        alpha: 1.0 + kappa,
        kappa,
    })
}

/// The distributional limit of `X / n^nu`: `K (c ξ₁)^(1-nu)` with
/// `ξ₁ ~ Gamma(m/(m-1), 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    pub constants: DerivedConstants,
    /// The Gamma-function ratio `K`.
    pub gamma_ratio: f64,
    /// `c = (m + rho + 1)(m - 1) / (2m + rho)`.
    pub scale: f64,
    /// `1 - nu`.
    pub exponent: f64,
    /// `m / (m - 1)`.
    pub gamma_shape: f64,
    /// `K c^(1-nu)`, so the limit is `prefactor · ξ₁^(1-nu)`.
    pub prefactor: f64,
}

pub fn limit_law(m: u32, rho: f64) -> Result<LimitLaw> {
    let constants = derive_constants(m, rho)?;
    let mf = m as f64;
    let r = mf + rho + 1.0;
    let ln_k = ln_gamma(constants.nu) + ln_gamma((mf + rho) / (mf * r) + 1.0)
        - ln_gamma((mf + rho) / r);
    let gamma_ratio = ln_k.exp();
    let scale = r * (mf - 1.0) / constants.theta;
    let exponent = 1.0 - constants.nu;
    Ok(LimitLaw {
        constants,
        gamma_ratio,
        scale,
        exponent,
        gamma_shape: mf / (mf - 1.0),
        prefactor: gamma_ratio * scale.powf(exponent),
    })
}

impl LimitLaw {
    /// Maps a `Gamma(m/(m-1), 1)` value to the limit variable.
    pub fn transform(&self, xi1: f64) -> f64 {
        if xi1 <= 0.0 {
            return 0.0;
        }
        self.prefactor * xi1.powf(self.exponent)
    }
}

/// One draw of the limit variable.
pub fn limit_sample(law: &LimitLaw, stream: &mut RngStream) -> f64 {
    let g = Gamma::new(law.gamma_shape, 1.0)
        .expect("gamma shape m/(m-1) is positive")
        .sample(stream);
    law.transform(g)
}

/// A sorted sample of the limit variable, used as a reference CDF.
pub fn limit_reference_sample(law: &LimitLaw, size: usize, stream: &mut RngStream) -> Vec<f64> {
    let g = Gamma::new(law.gamma_shape, 1.0).expect("gamma shape m/(m-1) is positive");
    let mut v: Vec<f64> = (0..size).map(|_| law.transform(g.sample(stream))).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `E L^p` for the limit variable `L`.
pub fn limit_moment(law: &LimitLaw, p: f64) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(invalid(format!("moment order must be nonnegative, got {p}")));
    }
    if p == 0.0 {
        return Ok(1.0);
    }
    let s = law.gamma_shape;
    let ln = p * law.prefactor.ln() + ln_gamma(p * law.exponent + s) - ln_gamma(s);
    Ok(ln.exp())
}

/// `E S_{n,k}` where `S_{n,k} = ∏_{i=k+1}^{n-1} (1 - B_i)`, for `1 <= k <= n-1`.
pub fn expected_s(n: u64, k: u64, m: u32, rho: f64) -> Result<f64> {
    check_model(m, rho)?;
    if k < 1 || k + 1 > n {
        return Err(invalid(format!("k must lie in [1, n-1], got k={k}, n={n}")));
    }
    if k == n - 1 {
        return Ok(1.0);
    }
    let (mf, theta) = (m as f64, 2.0 * m as f64 + rho);
    let a = (3.0 * mf + rho) / theta;
    let b = 2.0 * mf / theta;
    let ln = ln_gamma_ratio(n as f64, -a, -b) + ln_gamma_ratio(k as f64 + 1.0, -b, -a);
    Ok(ln.exp().min(1.0))
}

/// `n^chi k^(1-chi) |E S_{n,k} - (k/n)^chi|`: the constant realized in the
/// `O(n^-chi k^(chi-1))` bound on the deviation from `(k/n)^chi`.
pub fn expected_s_deviation_constant(n: u64, k: u64, m: u32, rho: f64) -> Result<f64> {
    let chi = derive_constants(m, rho)?.chi;
    let (nf, kf) = (n as f64, k as f64);
    let dev = (expected_s(n, k, m, rho)? - (kf / nf).powf(chi)).abs();
    Ok(dev * nf.powf(chi) * kf.powf(1.0 - chi))
}

/// `E Φ_k` where `Φ_k = ∏_{j<=k} (1 + (m-1) B_j)` and `B_1 = 1`.
pub fn expected_phi(k: u64, m: u32, rho: f64) -> Result<f64> {
    check_model(m, rho)?;
    if k < 1 {
        return Err(invalid("k must be at least 1"));
    }
    let mf = m as f64;
    if k == 1 {
        return Ok(mf);
    }
    let theta = 2.0 * mf + rho;
    let up = ((mf - 1.0) * (mf + rho) - 2.0 * mf) / theta;
    let down = -2.0 * mf / theta;
    // m ∏_{i=2}^{k} (i + up)/(i + down)
    let ln = ln_gamma_ratio(k as f64 + 1.0, up, down) - ln_gamma_ratio(2.0, up, down);
    Ok(mf * ln.exp())
}

/// `lim_k E Φ_k / k^((m-1)chi)`, the mean of the limit normalizer of `Φ_k`.
pub fn phi_asymptotic_constant(m: u32, rho: f64) -> Result<f64> {
    check_model(m, rho)?;
    let mf = m as f64;
    let theta = 2.0 * mf + rho;
    let up = ((mf - 1.0) * (mf + rho) - 2.0 * mf) / theta;
    Ok(mf * (ln_gamma(2.0 - 2.0 * mf / theta) - ln_gamma(2.0 + up)).exp())
}

/// The shape parameters `(m + rho, (2i-3)m + (i-1)rho)` of `B_i`, `i >= 2`.
pub fn beta_shapes(i: u64, m: u32, rho: f64) -> (f64, f64) {
    let (mf, i) = (m as f64, i as f64);
    (mf + rho, (2.0 * i - 3.0) * mf + (i - 1.0) * rho)
}

/// `(E B_i, E B_i²)` for `i >= 2`.
pub fn expected_beta_moments(i: u64, m: u32, rho: f64) -> Result<(f64, f64)> {
    check_rho(m, rho)?;
    if i < 2 {
        return Err(invalid(format!("i must be at least 2, got {i}")));
    }
    let mf = m as f64;
    let theta = 2.0 * mf + rho;
    let denom = theta * i as f64 - 2.0 * mf;
    let a = mf + rho;
    Ok((a / denom, (a + 1.0) * a / ((denom + 1.0) * denom)))
}

/// Limit of `n^-nu Y_{t n^nu}` given the random factor `xi`.
pub fn y_limit_curve(t: f64, xi: f64, c: &DerivedConstants) -> f64 {
    let r = c.m as f64 + c.rho + 1.0;
    let x = r / c.theta * xi * t.powf(-c.alpha);
    c.theta * t * ((x.ln_1p() / r).exp_m1())
}

/// Limit of `W_{t n^nu} / (β̃ n^((m-1)chi))` given `xi`; increases to `xi`.
pub fn w_limit_curve(t: f64, xi: f64, c: &DerivedConstants) -> f64 {
    y_limit_curve(t, xi, c) * t.powf(c.alpha - 1.0)
}

fn gamma_mean_of<F: Fn(f64) -> f64>(m: u32, f: F) -> Result<f64> {
    let mf = m as f64;
    let shape = mf / (mf - 1.0);
    let scale = mf - 1.0;
    let upper = gamma_upper_quantile(shape, scale, 1e-12);
    let ln_norm = ln_gamma(shape) + shape * scale.ln();
    let density = |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        ((shape - 1.0) * x.ln() - x / scale - ln_norm).exp()
    };
    let tol = Tolerance {
        abs: 1e-13,
        rel: 1e-10,
    };
    Ok(integrate(|x| f(x) * density(x), 0.0, upper, tol)?.value)
}

/// `E[y_limit_curve(t, ξ)]` with `ξ ~ Gamma(m/(m-1), m-1)`.
///
/// The Gamma mass beyond its `1 - 1e-12` quantile is dropped; since the curve
/// is at most `ξ t^(1-alpha)`, the omitted part is below `1e-11 · t^(1-alpha)`.
pub fn mean_curve_y(t: f64, m: u32, rho: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    let c = derive_constants(m, rho)?;
    gamma_mean_of(m, |xi| y_limit_curve(t, xi, &c))
}

/// `E[w_limit_curve(t, ξ)]`: increasing in `t`, bounded by and tending to `E ξ = m`.
pub fn mean_curve_w(t: f64, m: u32, rho: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    let c = derive_constants(m, rho)?;
    gamma_mean_of(m, |xi| w_limit_curve(t, xi, &c))
}

/// Closed-form solution `f(t) = θ t^α ((1 + c t^-α)^(1/(m+ρ+1)) - 1)` of the
/// scaling ODE; `c = (m+ρ+1)/θ · f(∞)`.
pub fn ode_closed(t: f64, c: f64, m: u32, rho: f64) -> Result<f64> {
    let k = derive_constants(m, rho)?;
    if !(t > 0.0) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    let ta = t.powf(k.alpha);
    let x = c / ta;
    if !(x > -1.0) {
        return Err(Error::Domain(format!(
            "1 + c t^-alpha = {} is not positive",
            1.0 + x
        )));
    }
    let r = m as f64 + rho + 1.0;
    Ok(k.theta * ta * (x.ln_1p() / r).exp_m1())
}

/// Right-hand side `m t^(α-1) ((1 + f/(θt^α))^-(m+ρ) - 1 + χ f/t^α)`.
pub fn ode_rhs(t: f64, f: f64, m: u32, rho: f64) -> Result<f64> {
    let k = derive_constants(m, rho)?;
    if !(t > 0.0) {
        return Err(invalid(format!("t must be positive, got {t}")));
    }
    let ta = t.powf(k.alpha);
    let x = f / (k.theta * ta);
    if !(x > -1.0) {
        return Err(Error::Domain(format!(
            "1 + f/(theta t^alpha) = {} is not positive",
            1.0 + x
        )));
    }
    let mf = m as f64;
    let bracket = (-(mf + rho) * x.ln_1p()).exp_m1() + k.chi * f / ta;
    Ok(mf * t.powf(k.alpha - 1.0) * bracket)
}

/// Returns `(∫_0^∞ ((1+x)^-b - 1) x^(a-1) dx, Γ(a)Γ(b-a)/Γ(b))` for `-1 < a < 0 < b`.
///
/// The integral is split at `x = 1`. Power substitutions (`x = w^(1/(a+1))`
/// below 1 and `x = w^(1/a)` above) turn both pieces into bounded integrands.
pub fn beta_integral_check(a: f64, b: f64) -> Result<(f64, f64)> {
    if !(a > -1.0 && a < 0.0) {
        return Err(invalid(format!("a must lie in (-1, 0), got {a}")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid(format!("b must be positive, got {b}")));
    }
    let g = |x: f64| (-b * x.ln_1p()).exp_m1();
    let tol = Tolerance {
        abs: 1e-12,
        rel: 1e-11,
    };
    let head = integrate(
        |w| {
            let x = w.powf(1.0 / (a + 1.0));
            if x == 0.0 {
                return -b / (a + 1.0);
            }
            g(x) / x / (a + 1.0)
        },
        0.0,
        1.0,
        tol,
    )?;
    let tail = integrate(|w| -g(w.powf(1.0 / a)) / a, 0.0, 1.0, tol)?;
    let rhs = gamma(a) * gamma(b - a) / gamma(b);
    Ok((head.value + tail.value, rhs))
}

/// The two limit integrals
/// `H = ∫_s^t ((1 + y/(θu))^-(m+ρ) - 1 + χ y/u) du` and
/// `I = ∫_s^t (1 - (1 + y/(θu))^-(m+ρ)) du`.
pub fn lh_integrals(s: f64, t: f64, y: f64, m: u32, rho: f64) -> Result<(f64, f64)> {
    if !(s > 0.0) || !(t >= s) || !t.is_finite() {
        return Err(invalid(format!("need 0 < s <= t, got s={s}, t={t}")));
    }
    if !(y >= 0.0) {
        return Err(invalid(format!("y must be nonnegative, got {y}")));
    }
    let k = derive_constants(m, rho)?;
    let e = m as f64 + rho;
    let pow_minus_one = |u: f64| (-e * (y / (k.theta * u)).ln_1p()).exp_m1();
    let tol = Tolerance {
        abs: 1e-14,
        rel: 1e-11,
    };
    let h = integrate(|u| pow_minus_one(u) + k.chi * y / u, s, t, tol)?;
    let i = integrate(|u| -pow_minus_one(u), s, t, tol)?;
    Ok((h.value, i.value))
}

/// Exact `E X` for trees (`m = 1`): vertex `k >= 2` lies on the path from `n`
/// to the root with probability `(1+ρ)/((2+ρ)k - 2)`, vertex 1 always.
pub fn tree_expected_descendants(n: u64, rho: f64) -> Result<f64> {
    if !(rho > -1.0) {
        return Err(invalid(format!("rho must exceed -1 for m = 1, got {rho}")));
    }
    if n < 2 {
        return Ok(n as f64);
    }
    let tail: f64 = (2..n)
        .map(|k| (1.0 + rho) / ((2.0 + rho) * k as f64 - 2.0))
        .sum();
    Ok(2.0 + tail)
}

/// Drift `(1+ρ)/(2+ρ)` of `X / ln n` for trees (`m = 1`).
pub fn m1_drift(rho: f64) -> Result<f64> {
    if !(rho > -1.0) {
        return Err(invalid(format!("rho must exceed -1 for m = 1, got {rho}")));
    }
    Ok((1.0 + rho) / (2.0 + rho))
}
