use super::*;
use crate::exec::Executor;
use crate::numeric::wrap;
use crate::reflection::ReflectionLaw;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

fn circular(a: f64, b: f64, l: f64) -> f64 {
    let d = wrap(a - b, l);
    d.min(l - d)
}

#[test]
fn disc_chain_one_step() {
    // f = 1/π, θ* = 5π/6: α = (1/π)(5π/3 − π) = 2/3.
    let cert = disc_chain_rate(5.0 * PI / 6.0, 1.0 / PI, None).unwrap();
    assert_eq!(
        cert.bound,
        Bound::Geometric {
            alpha: cert.constant("alpha").unwrap(),
            n0: 1
        }
    );
    assert!((cert.constant("alpha").unwrap() - 2.0 / 3.0).abs() < 1e-12);
    cert.validate().unwrap();
}

#[test]
fn disc_chain_several_steps() {
    // θ* = π/2, ε = π/4: n₀ = 2 and α = (π/8)(1/π²)(π/2) = 1/16.
    let cert = disc_chain_rate(FRAC_PI_2, 1.0 / PI, Some(FRAC_PI_4)).unwrap();
    assert_eq!(cert.constant("n0").unwrap(), 2.0);
    assert!((cert.constant("alpha").unwrap() - 1.0 / 16.0).abs() < 1e-12);
    assert!(cert.warnings.is_empty());
    // Small θ*: the step count grows like π/(2(θ* − ε)).
    let cert = disc_chain_rate(0.3, 1.0, Some(0.1)).unwrap();
    let n0 = cert.constant("n0").unwrap();
    assert_eq!(n0, ((PI - 0.2) / 0.4).floor() + 1.0);
    assert!(matches!(
        disc_chain_rate(FRAC_PI_2, 1.0 / PI, None),
        Err(Error::InvalidParams(_))
    ));
    assert!(matches!(
        disc_chain_rate(FRAC_PI_2, 1.0 / PI, Some(2.0)),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn convex_chain_on_the_unit_disc() {
    // c = C = 1, D = 2, ρ = 1/π, θ* = π/2: q_min = √2/(4π), α = q(4π − 2π) = √2/2.
    let body = ConvexBody::disc(1.0).unwrap();
    let cert = convex_chain_rate(&body.summary(), FRAC_PI_2, 1.0 / PI, None).unwrap();
    assert!((cert.constant("q_min").unwrap() - SQRT_2 / (4.0 * PI)).abs() < 1e-12);
    assert!((cert.constant("alpha").unwrap() - SQRT_2 / 2.0).abs() < 1e-12);
}

#[test]
fn convex_chain_second_case() {
    let body = ConvexBody::ellipse(2.0, 1.0).unwrap();
    let s = body.summary();
    let theta = 0.5;
    assert!(theta <= s.curvature_max * s.perimeter / 8.0);
    let eps = 0.1;
    let cert = convex_chain_rate(&s, theta, 0.2, Some(eps)).unwrap();
    let n0 = cert.constant("n0").unwrap();
    let reach = 4.0 * theta / s.curvature_max;
    assert!(n0 * reach - 2.0 * (n0 - 1.0) * eps > s.perimeter / 2.0);
    assert!((n0 - 1.0) * reach - 2.0 * (n0 - 2.0) * eps <= s.perimeter / 2.0 || n0 == 2.0);
    let alpha = cert.constant("alpha").unwrap();
    assert!(alpha > 0.0 && alpha <= 1.0);
}

/// Positive root of `p₁(1−p₂)s² + (1−p₁)s − 1` by the textbook formula.
fn s2_textbook(p1: f64, p2: f64) -> f64 {
    let (a, b) = (p1 * (1.0 - p2), 1.0 - p1);
    (-b + (b * b + 4.0 * a).sqrt()) / (2.0 * a)
}

#[test]
fn lambda_max_oracle() {
    let lm = lambda_max(0.5, 0.5, 4.0).unwrap();
    let oracle = (2.0f64).ln().min(s2_textbook(0.5, 0.5).ln()) / 4.0;
    assert!((lm - oracle).abs() < 1e-14);
    assert!((lm - 0.052_98).abs() < 1e-5);
    assert!(matches!(
        lambda_max(1.0, 0.5, 1.0),
        Err(Error::DegenerateBound(_))
    ));
}

proptest! {
    #[test]
    fn c_lambda_positive_below_lambda_max(p1 in 1e-4f64..0.99, p2 in 1e-4f64..1.0, span in 0.1f64..10.0, frac in 0.01f64..0.99) {
        let lm = lambda_max(p1, p2, span).unwrap();
        let c = c_lambda(p1, p2, span, span, frac * lm);
        prop_assert!(c > 0.0 && c.is_finite());
        let e = (frac * lm * span).exp();
        prop_assert!(1.0 - e * (1.0 - p1) - e * e * p1 * (1.0 - p2) > 0.0);
    }
}

#[test]
fn disc_process_constants() {
    let law = ReflectionLaw::truncated_uniform(2.5).unwrap();
    let f = law.certificate().f_min;
    let (theta, eta, eps) = (2.5f64, 0.05, 0.05);
    let cert = disc_process_rate(1.0, theta, f, eta, eps).unwrap();
    let h = 2.0 * (1.0 - 2.0 * (theta / 2.0).cos()) - 2.0 * eta;
    assert!((cert.constant("h").unwrap() - h).abs() < 1e-12);
    let p1 = cert.constant("p1").unwrap();
    assert!((p1 - cert.constant("delta").unwrap() * h).abs() < 1e-15);
    let lm = cert.constant("lambda_max").unwrap();
    assert!((lm - lambda_max(p1, cert.constant("alpha").unwrap(), 4.0).unwrap()).abs() < 1e-15);
    cert.validate().unwrap();
    assert!(matches!(
        disc_process_rate(1.0, 1.5, f, eta, eps),
        Err(Error::HypothesisViolated(_))
    ));
    assert!(matches!(
        disc_process_rate(1.0, theta, f, 10.0, eps),
        Err(Error::InvalidParams(_))
    ));
    assert!(matches!(
        disc_process_rate(1.0, theta, f, eta, 1.0),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn disc_delta_against_quadrature() {
    // δ bounds 2f²/r·(density of the arccos change of variables); check it
    // never exceeds the exact density of T₂ on the window, via a direct
    // quadrature of the two-angle convolution for the uniform law.
    let (r, theta) = (1.0, 2.6f64);
    let f = 1.0 / theta;
    let eta = 0.05;
    let delta = disc_delta(r, theta, f, eta);
    let a = theta / 2.0;
    let density = |t: f64| {
        // T₂ = 2r(cos θ₁ + cos θ₂), θᵢ uniform on [−a, a].
        let s = t / (2.0 * r);
        let n = 20_000;
        let mut acc = 0.0;
        for k in 0..n {
            let u = -a + 2.0 * a * (k as f64 + 0.5) / n as f64;
            let c = s - u.cos();
            if c > a.cos() && c < 1.0 {
                acc += 2.0 / (1.0 - c * c).sqrt();
            }
        }
        acc * (2.0 * a / n as f64) * f * f / (2.0 * r)
    };
    let lo = 4.0 * r * a.cos() + eta;
    let hi = 4.0 * r - eta;
    for k in 0..=20 {
        let t = lo + (hi - lo) * k as f64 / 20.0;
        assert!(
            density(t) >= delta * (1.0 - 1e-3),
            "t = {t}: {} < {delta}",
            density(t)
        );
    }
}

#[test]
fn convex_stage_one_on_the_unit_disc() {
    let s = ConvexBody::disc(1.0).unwrap().summary();
    let mut warnings = vec![];
    let (n0, p) = convex_stage_one(&s, 0.3, 0.5, &mut warnings).unwrap();
    assert_eq!(n0, 2);
    assert!((p - 0.5 * 0.09).abs() < 1e-15);
    assert!(matches!(
        convex_stage_one(&s, 0.3, 1.5, &mut warnings),
        Err(Error::InvalidParams(_))
    ));
}

fn disc_params() -> PhiParams {
    PhiParams {
        beta: 1.0,
        delta_p: 1.0,
        eps: 0.01,
        rho_min: 1.0 / PI,
    }
}

#[test]
fn phi_geometry_symmetric_pair() {
    let body = ConvexBody::disc(1.0).unwrap();
    let (x, x_b) = (body.point_at(1.0), body.point_at(PI - 1.0));
    let geo = phi_geometry(&body, &x, &x_b, &disc_params()).unwrap();
    assert!(!geo.perturbed);
    assert!((geo.y_bar.s - 1.5 * PI).abs() < 1e-9);
    assert!(circular(geo.t_zx + geo.t_zx_b, PI, 2.0 * PI) < 1e-8);
    assert!(lemma_holds(&geo, 0.01, 1e-12));
    let l = body.perimeter();
    for t in [geo.i_star.0, geo.i_star.1] {
        assert!(circular(t, geo.y_bar.s, l) >= 1.0 - 1e-12);
        assert!(circular(t, geo.t_zx, l) >= 1.0 - 1e-12);
        assert!(circular(t, geo.t_zx_b, l) >= 1.0 - 1e-12);
    }
    assert!((geo.i_star.1 - geo.i_star.0 - 0.5 * geo.h * 0.01).abs() < 1e-15);
}

#[test]
fn stationary_point_is_specular() {
    // At t_z the chord from ȳ makes equal angles with the normal on both sides.
    let body = ConvexBody::ellipse(2.0, 1.0).unwrap();
    let (x, x_b) = (body.point_at(0.4), body.point_at(3.1));
    let p = PhiParams {
        beta: 1.5,
        delta_p: 1.5,
        eps: 7e-4,
        rho_min: 1.0 / PI,
    };
    let geo = phi_geometry(&body, &x, &x_b, &p).unwrap();
    let y = geo.y_bar;
    let z = body.point_at(geo.t_zx);
    let a_in = body.chord_angle(&x, &y).unwrap();
    let a_out = body.chord_angle(&z, &y).unwrap();
    assert!((a_in + a_out).abs() < 1e-7, "{a_in} vs {a_out}");
    assert!(lemma_holds(&geo, p.eps, 1e-12));
}

#[test]
fn antipodal_pair_is_perturbed() {
    let body = ConvexBody::disc(1.0).unwrap();
    let (x, x_b) = (body.point_at(0.3), body.point_at(0.3 + PI));
    let geo = phi_geometry(&body, &x, &x_b, &disc_params()).unwrap();
    assert!(geo.perturbed);
}

#[test]
fn phi_geometry_rejects_bad_params() {
    let body = ConvexBody::disc(1.0).unwrap();
    let (x, x_b) = (body.point_at(0.0), body.point_at(2.0));
    let mut p = disc_params();
    p.eps = 0.5;
    assert!(matches!(
        phi_geometry(&body, &x, &x_b, &p),
        Err(Error::InvalidParams(_))
    ));
    p = disc_params();
    p.beta = 1.9;
    assert!(matches!(
        phi_geometry(&body, &x, &x_b, &p),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn convex_process_certificate() {
    let body = ConvexBody::ellipse(2.0, 1.0).unwrap();
    let rho = 1.0 / PI;
    let params = ConvexProcessParams {
        zeta: 0.1,
        beta: 1.5,
        delta_p: 1.5,
        eps: 7e-4,
    };
    let cert = convex_process_rate(&body, PI, rho, params, 0.4, 3.1).unwrap();
    let kappa = cert.constant("kappa").unwrap();
    let width = cert.constant("i_star_hi").unwrap() - cert.constant("i_star_lo").unwrap();
    let h = cert.constant("h").unwrap();
    assert!(
        (kappa - 0.5 * cert.constant("a").unwrap() * width * h * 7e-4).abs()
            < 1e-12 * kappa.max(1e-300)
    );
    assert!(cert.constant("kappa_pair").unwrap() >= kappa);
    cert.validate().unwrap();
    assert!(matches!(
        convex_process_rate(&body, 3.0, rho, params, 0.4, 3.1),
        Err(Error::HypothesisViolated(_))
    ));
}

#[test]
fn certificate_json_round_trip() {
    let cert = disc_chain_rate(5.0 * PI / 6.0, 1.0 / PI, None).unwrap();
    let back = RateCertificate::from_json(&cert.to_json()).unwrap();
    assert_eq!(back, cert);
    let mut broken = cert.clone();
    broken.bound_curve.pop();
    assert!(RateCertificate::from_json(&broken.to_json()).is_err());
}

#[test]
fn optimizer_is_deterministic_and_maximal() {
    let body = ConvexBody::disc(1.0).unwrap();
    let law = ReflectionLaw::cosine();
    let fixed = FixedInputs {
        body: &body,
        law: &law,
        pair: None,
    };
    let grid = GridSpec {
        theta_star: GridSpec::interior(2.0 * PI / 3.0, PI, 6),
        eta: GridSpec::interior(0.0, 0.2, 4),
        eps: GridSpec::interior(0.0, 0.1, 4),
        ..Default::default()
    };
    let (params, cert) = optimize_free_params(
        CertificateKind::DiscProcess,
        &fixed,
        &RateParams::default(),
        &grid,
        &Executor::Sequential,
    )
    .unwrap();
    let (params_par, cert_par) = optimize_free_params(
        CertificateKind::DiscProcess,
        &fixed,
        &RateParams::default(),
        &grid,
        &Executor::with_workers(3),
    )
    .unwrap();
    assert_eq!(params, params_par);
    assert_eq!(cert, cert_par);
    for &t in &grid.theta_star {
        for &e in &grid.eta {
            for &p in &grid.eps {
                let q = RateParams {
                    theta_star: Some(t),
                    eta: Some(e),
                    eps: Some(p),
                    ..Default::default()
                };
                if let Ok(c) = certify_rate(CertificateKind::DiscProcess, &fixed, &q) {
                    assert!(c.objective() <= cert.objective());
                }
            }
        }
    }
}

#[test]
fn optimizer_breaks_ties_lexicographically() {
    // Above π/2 the disc chain ignores ε, so every ε ties.
    let body = ConvexBody::disc(1.0).unwrap();
    let law = ReflectionLaw::uniform_half();
    let fixed = FixedInputs {
        body: &body,
        law: &law,
        pair: None,
    };
    let grid = GridSpec {
        eps: vec![0.3, 0.1, 0.2],
        ..Default::default()
    };
    let (params, _) = optimize_free_params(
        CertificateKind::DiscChain,
        &fixed,
        &RateParams::default(),
        &grid,
        &Executor::Sequential,
    )
    .unwrap();
    assert_eq!(params.eps, Some(0.1));
    let empty = GridSpec {
        theta_star: vec![1.0],
        ..Default::default()
    };
    let r = optimize_free_params(
        CertificateKind::DiscProcess,
        &fixed,
        &RateParams {
            eta: Some(0.1),
            eps: Some(0.1),
            ..Default::default()
        },
        &empty,
        &Executor::Sequential,
    );
    assert_eq!(r.unwrap_err(), Error::EmptyFeasibleSet);
}
