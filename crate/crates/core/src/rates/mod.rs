//! Explicit convergence-rate certificates for the disc and for convex bodies
//! with bounded curvature, plus a grid search over their free parameters.

mod optimize;
mod phi;

pub use crate::bound::{Axis, Bound};
pub use optimize::{certify_rate, optimize_free_params, FixedInputs, GridSpec};
pub use phi::{lemma_holds, phi, phi_ds, phi_geometry, PhiGeometry, PhiParams};

use crate::error::{Error, Result};
use crate::geometry::{BodySummary, ConvexBody};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

/// Points in every serialized bound curve.
pub const CURVE_POINTS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    DiscChain,
    DiscProcess,
    ConvexChain,
    ConvexProcess,
}

/// Free constants of the theorems. Unused fields stay `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
}

impl RateParams {
    fn require(value: Option<f64>, name: &str) -> Result<f64> {
        value.ok_or_else(|| Error::InvalidParams(format!("missing parameter {name}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub kind: CertificateKind,
    pub inputs: BTreeMap<String, f64>,
    pub constants: BTreeMap<String, f64>,
    pub bound: Bound,
    pub bound_curve: Vec<[f64; 2]>,
    pub warnings: Vec<String>,
}

impl RateCertificate {
    fn new(
        kind: CertificateKind,
        inputs: &[(&str, f64)],
        constants: &[(&str, f64)],
        bound: Bound,
        warnings: Vec<String>,
    ) -> Self {
        let x_max = match bound {
            Bound::Geometric { alpha, n0 } => {
                let n0 = n0 as f64;
                if alpha >= 1.0 {
                    2.0 * n0
                } else {
                    (n0 * (1.0 + (1e-6f64).ln() / (1.0 - alpha).ln()))
                        .clamp(10.0 * n0, 1e4)
                        .ceil()
                }
            }
            Bound::Exponential {
                c_lambda, lambda, ..
            } => ((c_lambda.max(1.0) / 1e-6).ln() / lambda).clamp(1.0, 1e9),
        };
        Self {
            kind,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            constants: constants.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            bound,
            bound_curve: bound.curve(x_max, CURVE_POINTS),
            warnings,
        }
    }

    /// A named constant, or `InvalidParams` if the certificate lacks it.
    pub fn constant(&self, name: &str) -> Result<f64> {
        self.constants
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidParams(format!("certificate has no constant {name}")))
    }

    pub fn input(&self, name: &str) -> Result<f64> {
        self.inputs
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidParams(format!("certificate has no input {name}")))
    }

    /// The score maximized by [`optimize_free_params`]: `λ_M` for process
    /// certificates, `α^{1/n₀}` for chain certificates.
    pub fn objective(&self) -> f64 {
        match self.bound {
            Bound::Geometric { alpha, n0 } => alpha.powf(1.0 / n0 as f64),
            Bound::Exponential { lambda_max, .. } => lambda_max,
        }
    }

    /// `C_λ` at any `λ ∈ (0, λ_M)`; `None` outside that range or for chain certificates.
    pub fn c_lambda_at(&self, lambda: f64) -> Option<f64> {
        match self.kind {
            CertificateKind::DiscProcess | CertificateKind::ConvexProcess => {
                let p1 = self.constants.get("p1")?;
                let p2 = self.constants.get("p2")?;
                let a = self.constants.get("attempt_span")?;
                let t0 = self.constants.get("t0_max")?;
                let lm = self.constants.get("lambda_max")?;
                (lambda > 0.0 && lambda < *lm).then(|| c_lambda(*p1, *p2, *a, *t0, lambda))
            }
            _ => None,
        }
    }

    /// Re-checks the invariants, for certificates read back from disk.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(format!("certificate invalid: {m}")));
        match self.bound {
            Bound::Geometric { alpha, n0 } => {
                if !(alpha > 0.0 && alpha <= 1.0) || n0 == 0 {
                    return bad("alpha must lie in (0, 1] and n0 ≥ 1");
                }
            }
            Bound::Exponential {
                c_lambda,
                lambda,
                lambda_max,
            } => {
                if !(lambda_max > 0.0
                    && lambda > 0.0
                    && lambda < lambda_max
                    && c_lambda > 0.0
                    && c_lambda.is_finite())
                {
                    return bad("need 0 < λ < λ_M and finite positive C_λ");
                }
            }
        }
        if self.bound_curve.len() != CURVE_POINTS
            || self
                .bound_curve
                .windows(2)
                .any(|w| w[1][1] > w[0][1] || w[1][0] <= w[0][0])
        {
            return bad("bound curve must be a nonincreasing table of 256 points");
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cert: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParams(format!("certificate JSON: {e}")))?;
        cert.validate()?;
        Ok(cert)
    }
}

/// Largest admissible rate `(1/A)·min{ln(1/(1−p₁)), ln s₂}` for a two-stage
/// coupling with per-attempt successes `p₁` (stage 1) and `p₂` (stage 2) and
/// attempt duration at most `A`. `s₂` is the positive root of
/// `p₁(1−p₂)s² + (1−p₁)s − 1 = 0`; `s₂ − 1` is formed without cancellation
/// since it can sit far below machine epsilon.
pub fn lambda_max(p1: f64, p2: f64, attempt_span: f64) -> Result<f64> {
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::DegenerateBound(format!(
            "stage-1 success {p1} must lie in (0, 1)"
        )));
    }
    if !(p2 > 0.0 && p2 <= 1.0) {
        return Err(Error::DegenerateBound(format!(
            "stage-2 success {p2} must lie in (0, 1]"
        )));
    }
    let root = ((1.0 + p1).powi(2) - 4.0 * p1 * p2).sqrt();
    let s2_minus_one = 4.0 * p1 * p2 / ((1.0 + p1 + root) * (1.0 - p1 + root));
    let first = -(-p1).ln_1p();
    Ok(first.min(s2_minus_one.ln_1p()) / attempt_span)
}

/// `C_λ = p₁p₂ e^{λ(T₀+2A)} / (1 − e^{λA}(1−p₁) − e^{2λA}p₁(1−p₂))`, with the
/// denominator expanded in `u = e^{λA} − 1` to keep tiny rates accurate.
pub fn c_lambda(p1: f64, p2: f64, attempt_span: f64, t0_max: f64, lambda: f64) -> f64 {
    let u = (lambda * attempt_span).exp_m1();
    let denominator = p1 * p2 - u * (1.0 - p1) - p1 * (1.0 - p2) * u * (2.0 + u);
    p1 * p2 * (lambda * (t0_max + 2.0 * attempt_span)).exp() / denominator
}

fn exponential_bound(p1: f64, p2: f64, attempt_span: f64, t0_max: f64) -> Result<(f64, Bound)> {
    let lm = lambda_max(p1, p2, attempt_span)?;
    if !(lm > 0.0) {
        return Err(Error::DegenerateBound(format!("λ_M = {lm}")));
    }
    let lambda = 0.5 * lm;
    Ok((
        lm,
        Bound::Exponential {
            c_lambda: c_lambda(p1, p2, attempt_span, t0_max, lambda),
            lambda,
            lambda_max: lm,
        },
    ))
}

/// Smallest `n ≥ start` with `pred(n)`, up to a safety cap.
fn first_n(start: usize, pred: impl Fn(f64) -> bool) -> Result<usize> {
    (start..100_000)
        .find(|n| pred(*n as f64))
        .ok_or_else(|| Error::InvalidParams("no admissible number of steps below 10⁵".into()))
}

fn check_n0(search: usize, closed_form: f64, label: &str, warnings: &mut Vec<String>) {
    if !closed_form.is_finite() || closed_form as i64 != search as i64 {
        warnings.push(format!("{label}: printed closed form gives n0 = {closed_form}, direct search gives {search}; using the search"));
    }
}

/// Chain certificate for the disc. Case θ* > π/2 couples in one step with
/// `α = f_min(2θ* − π)`; otherwise `n₀` steps with
/// `α = (ε/2)^{n₀−1} f_min^{n₀} (2n₀θ* − 2(n₀−1)ε − π)`.
pub fn disc_chain_rate(theta_star: f64, f_min: f64, eps: Option<f64>) -> Result<RateCertificate> {
    if !(theta_star > 0.0 && theta_star <= PI) || !(f_min > 0.0) {
        return Err(Error::InvalidParams(format!(
            "need θ* ∈ (0, π] and f_min > 0, got θ* = {theta_star}, f_min = {f_min}"
        )));
    }
    let mut warnings = vec![];
    let (n0, alpha, eps_used) = if theta_star > FRAC_PI_2 {
        (1, f_min * (2.0 * theta_star - PI), 0.0)
    } else {
        let eps = eps.ok_or_else(|| Error::InvalidParams("θ* ≤ π/2 needs ε".into()))?;
        if !(eps > 0.0 && eps < theta_star) {
            return Err(Error::InvalidParams(format!(
                "ε = {eps} must lie in (0, θ* = {theta_star})"
            )));
        }
        let n0 = first_n(1, |n| 2.0 * n * theta_star - 2.0 * (n - 1.0) * eps > PI)?;
        check_n0(
            n0,
            ((PI - 2.0 * eps) / (2.0 * (theta_star - eps))).floor() + 1.0,
            "disc chain",
            &mut warnings,
        );
        let nf = n0 as f64;
        let alpha = (eps / 2.0).powi(n0 as i32 - 1)
            * f_min.powi(n0 as i32)
            * (2.0 * nf * theta_star - 2.0 * (nf - 1.0) * eps - PI);
        (n0, alpha, eps)
    };
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    if alpha > 1.0 + 1e-12 {
        return Err(Error::InvalidParams(format!(
            "α = {alpha} exceeds 1; f_min is not a valid lower bound"
        )));
    }
    let alpha = alpha.min(1.0);
    let nf = n0 as f64;
    let level = (f_min / 2.0).powi(n0 as i32) * eps_used.powi(n0 as i32 - 1);
    let half_width = nf * theta_star - (nf - 1.0) * eps_used;
    Ok(RateCertificate::new(
        CertificateKind::DiscChain,
        &[
            ("theta_star", theta_star),
            ("f_min", f_min),
            ("eps", eps_used),
        ],
        &[
            ("n0", nf),
            ("alpha", alpha),
            ("level", level),
            ("window_half_width", half_width),
        ],
        Bound::Geometric { alpha, n0 },
        warnings,
    ))
}

/// Lower bound `δ` on the density of the second hitting time on
/// `[4r cos(θ*/2) + η, 4r − η]`.
pub fn disc_delta(r: f64, theta_star: f64, f_min: f64, eta: f64) -> f64 {
    let half = 0.5 * theta_star;
    let left = half - (half.cos() + eta / (2.0 * r)).min(1.0).acos();
    let right = (1.0 - eta / (2.0 * r)).acos();
    2.0 * f_min * f_min / (r * half.sin()) * left.min(right)
}

/// Process certificate for the disc, valid for θ* ∈ (2π/3, π).
pub fn disc_process_rate(
    r: f64,
    theta_star: f64,
    f_min: f64,
    eta: f64,
    eps: f64,
) -> Result<RateCertificate> {
    if !(r > 0.0 && f_min > 0.0) {
        return Err(Error::InvalidParams("need r > 0 and f_min > 0".into()));
    }
    if !(theta_star > 2.0 * PI / 3.0 && theta_star < PI) {
        return Err(Error::HypothesisViolated(format!(
            "the disc process rate needs θ* ∈ (2π/3, π), got θ* = {theta_star}"
        )));
    }
    let eta_max = r * (1.0 - 2.0 * (0.5 * theta_star).cos());
    if !(eta > 0.0 && eta < eta_max) {
        return Err(Error::InvalidParams(format!(
            "η = {eta} must lie in (0, {eta_max})"
        )));
    }
    let eps_max = (2.0 * theta_star - PI) / 8.0;
    if !(eps > 0.0 && eps < eps_max) {
        return Err(Error::InvalidParams(format!(
            "ε = {eps} must lie in (0, {eps_max})"
        )));
    }
    let delta = disc_delta(r, theta_star, f_min, eta);
    let h = 2.0 * r * (1.0 - 2.0 * (0.5 * theta_star).cos()) - 2.0 * eta;
    let quarter = 0.25 * theta_star;
    let alpha = f_min * f_min / quarter.sin()
        * (4.0 * theta_star - 2.0 * PI - 16.0 * eps)
        * ((quarter - eps).cos() - quarter.cos());
    let p1 = delta * h;
    if p1 >= 1.0 {
        return Err(Error::DegenerateBound(format!("δh = {p1} ≥ 1")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    let (attempt_span, t0_max) = (4.0 * r, 2.0 * r);
    let (lm, bound) = exponential_bound(p1, alpha, attempt_span, t0_max)?;
    let joint_level = f_min * f_min / (4.0 * r * quarter.sin());
    Ok(RateCertificate::new(
        CertificateKind::DiscProcess,
        &[
            ("r", r),
            ("theta_star", theta_star),
            ("f_min", f_min),
            ("eta", eta),
            ("eps", eps),
        ],
        &[
            ("delta", delta),
            ("h", h),
            ("alpha", alpha),
            ("joint_level", joint_level),
            ("p1", p1),
            ("p2", alpha),
            ("attempt_span", attempt_span),
            ("t0_max", t0_max),
            ("lambda_max", lm),
        ],
        bound,
        vec![],
    ))
}

/// `q_min = cρ_min cos(θ*/2)/(CD)`.
pub fn q_min(summary: &BodySummary, theta_star: f64, rho_min: f64) -> f64 {
    summary.curvature_min * rho_min * (0.5 * theta_star).cos()
        / (summary.curvature_max * summary.diameter)
}

/// Chain certificate for a convex body with curvature in `[c, C]`.
pub fn convex_chain_rate(
    summary: &BodySummary,
    theta_star: f64,
    rho_min: f64,
    eps: Option<f64>,
) -> Result<RateCertificate> {
    if !(theta_star > 0.0 && theta_star <= PI) || !(rho_min > 0.0) {
        return Err(Error::InvalidParams(format!(
            "need θ* ∈ (0, π] and ρ_min > 0, got θ* = {theta_star}, ρ_min = {rho_min}"
        )));
    }
    let BodySummary {
        perimeter: l,
        curvature_max: cap,
        ..
    } = *summary;
    let q = q_min(summary, theta_star, rho_min);
    let mut warnings = vec![];
    let reach = 4.0 * theta_star / cap;
    let (n0, alpha, eps_used) = if theta_star > cap * l / 8.0 {
        (1, q * (8.0 * theta_star / cap - l), 0.0)
    } else {
        let eps = eps.ok_or_else(|| Error::InvalidParams("θ* ≤ C|∂K|/8 needs ε".into()))?;
        if !(eps > 0.0 && eps < 2.0 * theta_star / cap) {
            return Err(Error::InvalidParams(format!(
                "ε = {eps} must lie in (0, 2θ*/C = {})",
                2.0 * theta_star / cap
            )));
        }
        let n0 = first_n(2, |n| n * reach - 2.0 * (n - 1.0) * eps > 0.5 * l)?;
        check_n0(
            n0,
            ((0.5 * l - 2.0 * eps) / (reach - 2.0 * eps)).floor() + 1.0,
            "convex chain",
            &mut warnings,
        );
        let nf = n0 as f64;
        let alpha = reach.powi(n0 as i32 - 1)
            * q.powi(n0 as i32)
            * (4.0 * (2.0 * nf * theta_star / cap - (nf - 1.0) * eps) - l);
        (n0, alpha, eps)
    };
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    if alpha > 1.0 + 1e-12 {
        return Err(Error::InvalidParams(format!("α = {alpha} exceeds 1")));
    }
    let alpha = alpha.min(1.0);
    Ok(RateCertificate::new(
        CertificateKind::ConvexChain,
        &[
            ("theta_star", theta_star),
            ("rho_min", rho_min),
            ("eps", eps_used),
            ("perimeter", l),
            ("diameter", summary.diameter),
            ("curvature_min", summary.curvature_min),
            ("curvature_max", cap),
        ],
        &[
            ("n0", n0 as f64),
            ("alpha", alpha),
            ("q_min", q),
            ("level", q),
        ],
        Bound::Geometric { alpha, n0 },
        warnings,
    ))
}

/// Free constants of the convex process certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexProcessParams {
    pub zeta: f64,
    pub beta: f64,
    pub delta_p: f64,
    pub eps: f64,
}

/// Stage-1 constants: `n₀ = min{n : 2n/C − 2(n−1)ζ > D}` and
/// `p = (cρ_min)^{n₀} ζ^{n₀−1} (2n₀/C − 2(n₀−1)ζ − D)`.
pub fn convex_stage_one(
    summary: &BodySummary,
    rho_min: f64,
    zeta: f64,
    warnings: &mut Vec<String>,
) -> Result<(usize, f64)> {
    let BodySummary {
        diameter: d,
        curvature_min: c,
        curvature_max: cap,
        ..
    } = *summary;
    if !(zeta > 0.0 && zeta < 1.0 / cap) {
        return Err(Error::InvalidParams(format!(
            "ζ = {zeta} must lie in (0, 1/C = {})",
            1.0 / cap
        )));
    }
    let n0 = first_n(1, |n| 2.0 * n / cap - 2.0 * (n - 1.0) * zeta > d)?;
    let printed = ((d - 2.0 * zeta) / (2.0 * (1.0 / cap - 1.0))).floor() + 1.0;
    check_n0(n0, printed, "convex process", warnings);
    let nf = n0 as f64;
    let p = (c * rho_min).powi(n0 as i32)
        * zeta.powi(n0 as i32 - 1)
        * (2.0 * nf / cap - 2.0 * (nf - 1.0) * zeta - d);
    if !(p > 1e-12) {
        return Err(Error::NonPositiveP(p));
    }
    Ok((n0, p))
}

/// Process certificate for a convex body, for the pair of boundary points at
/// arc lengths `x_s` and `x_b_s`. Needs a law certified on the whole half-circle.
pub fn convex_process_rate(
    body: &ConvexBody,
    theta_star: f64,
    rho_min: f64,
    params: ConvexProcessParams,
    x_s: f64,
    x_b_s: f64,
) -> Result<RateCertificate> {
    if theta_star < PI {
        return Err(Error::HypothesisViolated(format!(
            "the convex process rate needs θ* = π, got {theta_star}"
        )));
    }
    let summary = body.summary();
    let mut warnings = vec![];
    let (n0, p) = convex_stage_one(&summary, rho_min, params.zeta, &mut warnings)?;
    let phi_params = PhiParams {
        beta: params.beta,
        delta_p: params.delta_p,
        eps: params.eps,
        rho_min,
    };
    let geo = phi_geometry(
        body,
        &body.point_at(x_s),
        &body.point_at(x_b_s),
        &phi_params,
    )?;
    if geo.perturbed {
        warnings.push("equidistant bisector: second start nudged by 1e-6 of the perimeter".into());
    }
    if !lemma_holds(&geo, params.eps, 1e-12) {
        return Err(Error::GeometryDegenerate(format!(
            "slope or interval bound fails numerically: min slope {} vs h {}, R2 - R1 = {} vs hε = {}",
            geo.min_slope,
            geo.h,
            geo.big_r2 - geo.big_r1,
            geo.h * params.eps
        )));
    }
    // R₂ − R₁ ≥ 2(hε − |I*|) = hε holds for every pair, so κ built on hε is uniform.
    let i_len = geo.i_star.1 - geo.i_star.0;
    let kappa = geo.eta * i_len * (geo.h * params.eps);
    let kappa_pair = geo.eta * i_len * (geo.big_r2 - geo.big_r1);
    if !(kappa > 0.0) {
        return Err(Error::DegenerateBound(format!("κ = {kappa}")));
    }
    let d = summary.diameter;
    let (attempt_span, t0_max) = (n0 as f64 * d, d);
    let (lm, bound) = exponential_bound(p, kappa, attempt_span, t0_max)?;
    let nf = n0 as f64;
    Ok(RateCertificate::new(
        CertificateKind::ConvexProcess,
        &[
            ("theta_star", theta_star),
            ("rho_min", rho_min),
            ("zeta", params.zeta),
            ("beta", params.beta),
            ("delta_p", params.delta_p),
            ("eps", params.eps),
            ("x_s", x_s),
            ("x_b_s", x_b_s),
            ("perimeter", summary.perimeter),
            ("diameter", d),
            ("curvature_min", summary.curvature_min),
            ("curvature_max", summary.curvature_max),
        ],
        &[
            ("n0", nf),
            ("p", p),
            (
                "stage1_level",
                (summary.curvature_min * rho_min).powi(n0 as i32) * params.zeta.powi(n0 as i32 - 1),
            ),
            ("h", geo.h),
            ("m", geo.m),
            ("a", geo.a),
            ("eta_cont", geo.eta),
            ("i_star_lo", geo.i_star.0),
            ("i_star_hi", geo.i_star.1),
            ("r1", geo.r1),
            ("r2", geo.r2),
            ("r1_b", geo.r1_b),
            ("r2_b", geo.r2_b),
            ("big_r1", geo.big_r1),
            ("big_r2", geo.big_r2),
            ("kappa", kappa),
            ("kappa_pair", kappa_pair),
            ("p1", p),
            ("p2", kappa),
            ("attempt_span", attempt_span),
            ("t0_max", t0_max),
            ("lambda_max", lm),
        ],
        bound,
        warnings,
    ))
}

#[cfg(test)]
mod tests;
