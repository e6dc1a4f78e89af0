//! Grid search over the free constants of a certificate.

use super::{
    convex_chain_rate, convex_process_rate, disc_chain_rate, disc_process_rate, CertificateKind,
    ConvexProcessParams, RateCertificate, RateParams,
};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::ConvexBody;
use crate::reflection::ReflectionLaw;
use serde::{Deserialize, Serialize};

/// Everything a certificate needs besides its free constants.
#[derive(Clone, Copy, Debug)]
pub struct FixedInputs<'a> {
    pub body: &'a ConvexBody,
    pub law: &'a ReflectionLaw,
    /// Arc lengths of the two starts, for the convex process certificate.
    pub pair: Option<(f64, f64)>,
}

/// Candidate values per free constant. An empty axis keeps the value from
/// the base parameters (or the law's certificate, for `theta_star`).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub theta_star: Vec<f64>,
    pub eps: Vec<f64>,
    pub eta: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta_p: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl GridSpec {
    /// `n` evenly spaced interior points of `(lo, hi)`.
    pub fn interior(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (1..=n)
            .map(|k| lo + (hi - lo) * k as f64 / (n + 1) as f64)
            .collect()
    }

    fn axes(&self, base: &RateParams) -> [Vec<Option<f64>>; 6] {
        let axis = |values: &Vec<f64>, fallback: Option<f64>| -> Vec<Option<f64>> {
            if values.is_empty() {
                vec![fallback]
            } else {
                let mut v = values.clone();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v.into_iter().map(Some).collect()
            }
        };
        [
            axis(&self.theta_star, base.theta_star),
            axis(&self.eps, base.eps),
            axis(&self.eta, base.eta),
            axis(&self.beta, base.beta),
            axis(&self.delta_p, base.delta_p),
            axis(&self.zeta, base.zeta),
        ]
    }
}

/// Builds one certificate. `θ*` defaults to the law's certified value; any
/// other `θ*` gets `f_min` recomputed from the law on `[−θ*/2, θ*/2]`.
pub fn certify_rate(
    kind: CertificateKind,
    fixed: &FixedInputs,
    params: &RateParams,
) -> Result<RateCertificate> {
    let cert = fixed.law.certificate();
    let (theta_star, f_min) = match params.theta_star {
        Some(t) if t != cert.theta_star => (t, fixed.law.min_density_on(0.5 * t)),
        _ => (cert.theta_star, cert.f_min),
    };
    let need = |v: Option<f64>, name: &str| RateParams::require(v, name);
    let radius = || {
        fixed
            .body
            .disc_radius()
            .ok_or_else(|| Error::InvalidParams("disc certificates need a disc".into()))
    };
    match kind {
        CertificateKind::DiscChain => {
            radius()?;
            disc_chain_rate(theta_star, f_min, params.eps)
        }
        CertificateKind::DiscProcess => disc_process_rate(
            radius()?,
            theta_star,
            f_min,
            need(params.eta, "eta")?,
            need(params.eps, "eps")?,
        ),
        CertificateKind::ConvexChain => {
            convex_chain_rate(&fixed.body.summary(), theta_star, f_min, params.eps)
        }
        CertificateKind::ConvexProcess => {
            let (x_s, x_b_s) = fixed.pair.ok_or_else(|| {
                Error::InvalidParams("the convex process certificate needs a pair of starts".into())
            })?;
            let p = ConvexProcessParams {
                zeta: need(params.zeta, "zeta")?,
                beta: need(params.beta, "beta")?,
                delta_p: need(params.delta_p, "delta_p")?,
                eps: need(params.eps, "eps")?,
            };
            convex_process_rate(fixed.body, theta_star, f_min, p, x_s, x_b_s)
        }
    }
}

/// Maximizes the certificate's objective over the grid. Inadmissible points
/// are skipped; ties go to the lexicographically smallest parameter vector
/// `(θ*, ε, η, β, δ_p, ζ)`.
pub fn optimize_free_params(
    kind: CertificateKind,
    fixed: &FixedInputs,
    base: &RateParams,
    grid: &GridSpec,
    exec: &Executor,
) -> Result<(RateParams, RateCertificate)> {
    let axes = grid.axes(base);
    let sizes: Vec<usize> = axes.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let point = |mut i: usize| -> RateParams {
        let mut pick = [None; 6];
        for k in (0..6).rev() {
            pick[k] = axes[k][i % sizes[k]];
            i /= sizes[k];
        }
        RateParams {
            theta_star: pick[0],
            eps: pick[1],
            eta: pick[2],
            beta: pick[3],
            delta_p: pick[4],
            zeta: pick[5],
        }
    };
    let best_in = |range: std::ops::Range<usize>| -> Option<(f64, usize, RateCertificate)> {
        let mut best: Option<(f64, usize, RateCertificate)> = None;
        for i in range {
            if let Ok(cert) = certify_rate(kind, fixed, &point(i)) {
                let score = cert.objective();
                if score.is_finite() && best.as_ref().is_none_or(|(b, _, _)| score > *b) {
                    best = Some((score, i, cert));
                }
            }
        }
        best
    };
    // Index order is lexicographic order, so keeping the first strict maximum breaks ties.
    let mut best: Option<(f64, usize, RateCertificate)> = None;
    for candidate in exec.map_chunks(total, 64, best_in).into_iter().flatten() {
        if best.as_ref().is_none_or(|(b, _, _)| candidate.0 > *b) {
            best = Some(candidate);
        }
    }
    let (_, index, cert) = best.ok_or(Error::EmptyFeasibleSet)?;
    Ok((point(index), cert))
}
