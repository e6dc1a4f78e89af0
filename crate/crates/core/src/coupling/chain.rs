use super::splits::{ConvexChainSplit, DiscChainSplit, Hit, Step};
use super::{gamma_couple, law_step, Attempt, CouplingOutcome, Pair};
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::rates::{CertificateKind, RateCertificate};
use crate::reflection::ReflectionLaw;
use rand::Rng;

/// Couples two copies of the boundary chain started at arc lengths `s0` and
/// `s0_b`, attempting a gamma coupling every `n₀` steps, for up to `n_max`
/// steps per copy. Once coupled, both copies share every later step.
#[allow(clippy::too_many_arguments)]
pub fn couple_chains<R: Rng + ?Sized>(
    body: &ConvexBody,
    law: &ReflectionLaw,
    s0: f64,
    s0_b: f64,
    cert: &RateCertificate,
    n_max: usize,
    record: bool,
    rng: &mut R,
) -> Result<CouplingOutcome> {
    let theta_star = cert.input("theta_star")?;
    let n0 = cert.constant("n0")? as usize;
    let f_min = match cert.kind {
        CertificateKind::DiscChain => {
            body.disc_radius().ok_or_else(|| {
                Error::InvalidParams("a disc chain certificate needs a disc".into())
            })?;
            cert.input("f_min")?
        }
        CertificateKind::ConvexChain => {
            if n0 != 1 {
                return Err(Error::InvalidParams(format!(
                    "convex chain coupling is implemented for n0 = 1, got {n0}"
                )));
            }
            super::check_summary(body, cert)?;
            cert.input("rho_min")?
        }
        other => {
            return Err(Error::InvalidParams(format!(
                "{other:?} is not a chain certificate"
            )))
        }
    };
    super::check_law(law, theta_star, f_min)?;

    let hit = |s: f64| Hit {
        point: body.point_at(s),
        clock: 0.0,
    };
    let mut pair = Pair::new([hit(s0), hit(s0_b)], [None, None], record);
    let mut attempts = vec![];
    let mut n = 0;
    let mut coupled = super::same_point(body, &pair.hits[0].point, &pair.hits[1].point);
    let mut coupling_index = coupled.then_some(0);

    while !coupled && n + n0 <= n_max {
        let (first, second, success, mass) = match cert.kind {
            CertificateKind::DiscChain => {
                let eps = cert.input("eps")?;
                let a =
                    DiscChainSplit::new(body, law, pair.hits[0].point, theta_star, f_min, n0, eps)?;
                let b =
                    DiscChainSplit::new(body, law, pair.hits[1].point, theta_star, f_min, n0, eps)?;
                let c = gamma_couple(&a, &b, rng)?;
                (c.first, c.second, c.success, c.overlap_mass)
            }
            _ => {
                let level = cert.constant("level")?;
                let a =
                    ConvexChainSplit::new(body, law, pair.hits[0].point, theta_star, f_min, level)?;
                let b =
                    ConvexChainSplit::new(body, law, pair.hits[1].point, theta_star, f_min, level)?;
                let c = gamma_couple(&a, &b, rng)?;
                (c.first, c.second, c.success, c.overlap_mass)
            }
        };
        attempts.push(Attempt {
            stage: 1,
            success,
            overlap_mass: mass,
            at: n as f64,
        });
        pair.apply(0, &first);
        pair.apply(1, &second);
        n += n0;
        if success {
            coupled = true;
            coupling_index = Some(n);
        }
    }
    while !coupled && n < n_max {
        for side in 0..2 {
            let step: Step = law_step(body, law, &pair.hits[side].point, rng)?;
            pair.apply(side, &[step]);
        }
        n += 1;
    }
    while coupled && n < n_max {
        let step = law_step(body, law, &pair.hits[0].point, rng)?;
        pair.apply_shared(&[step]);
        n += 1;
    }
    Ok(pair.finish(coupled, coupling_index, None, attempts))
}
