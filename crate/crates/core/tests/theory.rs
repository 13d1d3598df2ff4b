mod common;

use common::{assert_close, gamma, mean_and_se, simpson};
use desclab::randomness::{make_stream, Gamma};
use desclab::theory::*;

#[test]
fn constants_at_known_points() {
    let c = derive_constants(2, 0.0).unwrap();
    assert_close(c.nu, 1.0 / 3.0, 1e-15, "nu(2,0)");
    assert_close(c.chi, 0.5, 1e-15, "chi(2,0)");
    assert_close(c.theta, 4.0, 0.0, "theta(2,0)");
    assert_close(c.alpha, 1.5, 1e-15, "alpha(2,0)");

    let c = derive_constants(3, 0.0).unwrap();
    assert_close(c.nu, 0.5, 1e-15, "nu(3,0)");
    assert_close(c.chi, 0.5, 1e-15, "chi(3,0)");
    assert_close(c.theta, 6.0, 0.0, "theta(3,0)");
    assert_close(c.alpha, 2.0, 1e-15, "alpha(3,0)");

    for m in 2..=12u32 {
        let nu = derive_constants(m, 0.0).unwrap().nu;
        assert_close(nu, (m as f64 - 1.0) / (m as f64 + 1.0), 1e-15, "nu(m,0)");
    }
}

#[test]
fn limit_law_at_two_zero() {
    let law = limit_law(2, 0.0).unwrap();
    let closed = gamma(1.0 / 3.0).powi(2)
        / (2f64.powf(4.0 / 3.0) * 3f64.powf(1.0 / 3.0) * gamma(2.0 / 3.0));
    assert_close(law.prefactor, closed, 1e-12, "prefactor");
    assert_close(law.prefactor, 1.45833, 5e-6, "prefactor (published digits)");
    assert_close(law.exponent, 2.0 / 3.0, 1e-15, "exponent");
    assert_close(law.gamma_shape, 2.0, 0.0, "gamma shape");
    // (m+ρ+1)(m-1)/(2m+ρ) at (2,0).
    assert_close(law.scale, 0.75, 1e-15, "scale");
}

#[test]
fn gamma_ratio_agrees_with_independent_gamma() {
    let (m, rho) = (3u32, 1.0);
    let (mf, r) = (m as f64, m as f64 + rho + 1.0);
    let nu = (mf - 1.0) * (mf + rho) / (mf * r);
    let k = gamma(nu) * gamma((mf + rho) / (mf * r) + 1.0) / gamma((mf + rho) / r);
    let law = limit_law(m, rho).unwrap();
    assert!((law.gamma_ratio / k - 1.0).abs() < 1e-12);
}

#[test]
fn limit_moments() {
    let law = limit_law(2, 0.0).unwrap();
    assert_eq!(limit_moment(&law, 0.0).unwrap(), 1.0);
    let closed = 5.0 * gamma(1.0 / 3.0).powi(2) / (2f64.powf(1.0 / 3.0) * 3f64.powf(7.0 / 3.0));
    assert_close(limit_moment(&law, 1.0).unwrap(), closed, 1e-12, "first moment");
    assert_close(limit_moment(&law, 1.0).unwrap(), 2.19416, 5e-6, "first moment (published digits)");

    // Second moment against Simpson quadrature of the Gamma(2,1) push-forward.
    let second = simpson(
        |g| (law.prefactor * g.powf(2.0 / 3.0)).powi(2) * g * (-g).exp(),
        0.0,
        80.0,
        400_000,
    );
    assert_close(limit_moment(&law, 2.0).unwrap(), second, 1e-9, "second moment");
    assert!(limit_moment(&law, -1.0).is_err());
}

#[test]
fn limit_samples_match_moments() {
    let law = limit_law(2, 0.0).unwrap();
    assert_eq!(law.transform(0.0), 0.0);
    let mut s = make_stream(11, 0);
    let xs: Vec<f64> = (0..1_000_000).map(|_| limit_sample(&law, &mut s)).collect();
    for p in [1.0, 2.0] {
        let powered: Vec<f64> = xs.iter().map(|x| x.powf(p)).collect();
        let (mean, se) = mean_and_se(&powered);
        let exact = limit_moment(&law, p).unwrap();
        assert!((mean - exact).abs() < 3.0 * se, "p={p}: {mean} vs {exact} (se {se})");
    }
}

#[test]
fn expected_s_against_direct_product() {
    assert_eq!(expected_s(100, 99, 2, 0.0).unwrap(), 1.0);
    let direct: f64 = (51..=99).map(|j| (4.0 * j as f64 - 6.0) / (4.0 * j as f64 - 4.0)).product();
    assert_close(expected_s(100, 50, 2, 0.0).unwrap(), direct, 1e-13, "E S(100,50)");
    assert!(expected_s(100, 0, 2, 0.0).is_err());
    assert!(expected_s(100, 100, 2, 0.0).is_err());
    // Realized constant of the |E S - (k/n)^chi| bound; C = 2 is the working bound.
    let c = expected_s_deviation_constant(10_000, 100, 2, 0.0).unwrap();
    assert!(c > 0.0 && c < 2.0, "observed constant {c}");
}

#[test]
fn expected_phi_against_direct_product() {
    assert_eq!(expected_phi(1, 2, 0.0).unwrap(), 2.0);
    assert_eq!(expected_phi(1, 5, 1.0).unwrap(), 5.0);
    let direct: f64 = 2.0 * (2..=1000).map(|i| 1.0 + 2.0 / (4.0 * i as f64 - 4.0)).product::<f64>();
    assert!((expected_phi(1000, 2, 0.0).unwrap() / direct - 1.0).abs() < 1e-12);

    let ratio = expected_phi(1_000_000, 2, 0.0).unwrap() / 1000.0;
    let target = 4.0 / std::f64::consts::PI.sqrt();
    assert!((ratio / target - 1.0).abs() < 1e-3);
    assert!((phi_asymptotic_constant(2, 0.0).unwrap() / target - 1.0).abs() < 1e-12);
}

#[test]
fn beta_moments_arithmetic() {
    assert_eq!(expected_beta_moments(2, 2, 0.0).unwrap().0, 0.5);
    let (m1, m2) = expected_beta_moments(5, 2, 0.0).unwrap();
    assert_close(m1, 1.0 / 8.0, 1e-16, "E B_5");
    assert_close(m2, 6.0 / (17.0 * 16.0), 1e-16, "E B_5^2");
    assert!(expected_beta_moments(1, 2, 0.0).is_err());
}

#[test]
fn mean_curves() {
    // t = 1 at (2,0): E[4((1 + 3ξ/4)^(1/3) - 1)] with ξ ~ Gamma(2,1).
    let oracle = simpson(
        |x| 4.0 * ((1.0 + 0.75 * x).cbrt() - 1.0) * x * (-x).exp(),
        0.0,
        80.0,
        200_000,
    );
    assert_close(mean_curve_y(1.0, 2, 0.0).unwrap(), oracle, 1e-9, "mean_curve_y(1)");
    assert!(mean_curve_y(0.0, 2, 0.0).is_err());

    // The W-normalized curve saturates at E ξ = m.
    for m in [2u32, 3] {
        let w = mean_curve_w(1000.0, m, 0.0).unwrap();
        assert!((w / m as f64 - 1.0).abs() < 0.01, "m={m}: {w}");
    }

    // Quadrature against a Monte Carlo average over ξ ~ Gamma(m/(m-1), m-1).
    let (m, rho, t) = (3u32, 1.0, 0.7);
    let c = derive_constants(m, rho).unwrap();
    let g = Gamma::new(1.5, 2.0).unwrap();
    let mut s = make_stream(5, 0);
    let vals: Vec<f64> = (0..1_000_000).map(|_| y_limit_curve(t, g.sample(&mut s), &c)).collect();
    let (mean, se) = mean_and_se(&vals);
    let exact = mean_curve_y(t, m, rho).unwrap();
    assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact}");
}

fn rk4(t0: f64, t1: f64, f0: f64, steps: usize, m: u32, rho: f64) -> f64 {
    // Integrate in s = ln t, where the solution varies on a uniform scale.
    let (s0, s1) = (t0.ln(), t1.ln());
    let h = (s1 - s0) / steps as f64;
    let g = |s: f64, f: f64| {
        let t = s.exp();
        t * ode_rhs(t, f, m, rho).unwrap()
    };
    let mut f = f0;
    for i in 0..steps {
        let s = s0 + i as f64 * h;
        let k1 = g(s, f);
        let k2 = g(s + h / 2.0, f + h / 2.0 * k1);
        let k3 = g(s + h / 2.0, f + h / 2.0 * k2);
        let k4 = g(s + h, f + h * k3);
        f += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    f
}

#[test]
fn ode_closed_form() {
    assert_eq!(ode_closed(2.0, 0.0, 2, 0.0).unwrap(), 0.0);
    assert_eq!(ode_rhs(2.0, 0.0, 2, 0.0).unwrap(), 0.0);
    // At (2,0): 4 t^(3/2) ((1 + c t^(-3/2))^(1/3) - 1).
    for &(t, c) in &[(0.5f64, 1.5f64), (2.0, 0.3), (7.0, 3.0)] {
        let explicit = 4.0 * t.powf(1.5) * ((1.0 + c * t.powf(-1.5)).cbrt() - 1.0);
        assert_close(ode_closed(t, c, 2, 0.0).unwrap(), explicit, 1e-13, "closed form at (2,0)");
    }
    let (m, rho, c) = (2u32, 0.0, 1.2);
    let f0 = ode_closed(0.1, c, m, rho).unwrap();
    let f1 = rk4(0.1, 10.0, f0, 4000, m, rho);
    let exact = ode_closed(10.0, c, m, rho).unwrap();
    assert!((f1 / exact - 1.0).abs() < 1e-8, "{f1} vs {exact}");
    assert!(ode_closed(1.0, -2.0, 2, 0.0).is_err());
}

#[test]
fn beta_integral() {
    let (lhs, rhs) = beta_integral_check(-1.0 / 3.0, 2.0 / 3.0).unwrap();
    assert_close(lhs, rhs, 1e-6, "(-1/3, 2/3)");
    let oracle = gamma(-1.0 / 3.0) * gamma(1.0) / gamma(2.0 / 3.0);
    assert_close(rhs, oracle, 1e-12, "rhs (-1/3, 2/3)");

    let (lhs, _) = beta_integral_check(-2.0 / 3.0, 2.0 / 3.0).unwrap();
    let magnitude = -gamma(-2.0 / 3.0) * gamma(4.0 / 3.0) / gamma(2.0 / 3.0);
    assert_close(-lhs, magnitude, 1e-6, "(-2/3, 2/3)");

    let (lhs, rhs) = beta_integral_check(-0.5, 1e-8).unwrap();
    assert!(lhs.abs() < 1e-6 && rhs.abs() < 1e-6);
    assert!(beta_integral_check(0.1, 1.0).is_err());
    assert!(beta_integral_check(-0.5, 0.0).is_err());
}

#[test]
fn lh_integrals_against_riemann_sum() {
    assert_eq!(lh_integrals(1.0, 2.0, 0.0, 2, 0.0).unwrap(), (0.0, 0.0));
    assert_eq!(lh_integrals(1.5, 1.5, 1.0, 2, 0.0).unwrap(), (0.0, 0.0));
    let (h, i) = lh_integrals(1.0, 2.0, 1.0, 2, 0.0).unwrap();
    let steps = 1_000_000;
    let du = 1.0 / steps as f64;
    let (mut hs, mut is) = (0.0, 0.0);
    for j in 0..steps {
        let u = 1.0 + (j as f64 + 0.5) * du;
        let p = (1.0 + 1.0 / (4.0 * u)).powi(-2);
        hs += (p - 1.0 + 0.5 / u) * du;
        is += (1.0 - p) * du;
    }
    assert_close(h, hs, 1e-5, "H");
    assert_close(i, is, 1e-5, "I");
    assert!(lh_integrals(0.0, 1.0, 1.0, 2, 0.0).is_err());
    assert!(lh_integrals(2.0, 1.0, 1.0, 2, 0.0).is_err());
    assert!(lh_integrals(1.0, 2.0, -1.0, 2, 0.0).is_err());
}

#[test]
fn tree_drift() {
    assert_eq!(m1_drift(0.0).unwrap(), 0.5);
    assert_eq!(m1_drift(2.0).unwrap(), 0.75);
    assert!((m1_drift(1e6).unwrap() - 1.0).abs() < 1e-5);
    assert!(m1_drift(-1.0).is_err());
    // n = 3: vertex 3 picks vertex 2 with probability 1/2.
    assert_close(tree_expected_descendants(3, 0.0).unwrap(), 2.5, 1e-15, "E X at n=3");
}
