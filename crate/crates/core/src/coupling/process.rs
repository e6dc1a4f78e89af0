use super::splits::{ConvexJointSplit, ConvexTimeSplit, DiscJointSplit, DiscTimeSplit, Hit, Step};
use super::{gamma_couple, law_step, Attempt, CouplingOutcome, Pair};
use crate::dynamics::{BounceRecord, ProcessStart};
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use crate::rates::{lemma_holds, phi_geometry, CertificateKind, PhiParams, RateCertificate};
use crate::reflection::ReflectionLaw;
use rand::Rng;

/// First hit of a start, with its record for interior starts.
fn first_hit(body: &ConvexBody, start: &ProcessStart) -> Result<(Hit, Option<BounceRecord>)> {
    match *start {
        ProcessStart::Boundary(s) => Ok((
            Hit {
                point: body.point_at(s),
                clock: 0.0,
            },
            None,
        )),
        ProcessStart::Interior { position, velocity } => {
            let v = velocity.normalized();
            let (tau, y) = body.exit_ray(position, v)?;
            let rec = BounceRecord {
                n: 1,
                s: y.s,
                position: y.position,
                theta: f64::NAN,
                tau,
                clock: tau,
                velocity: v,
            };
            Ok((
                Hit {
                    point: y,
                    clock: tau,
                },
                Some(rec),
            ))
        }
    }
}

/// One stage of a process coupling from equal or unequal clocks.
enum Stage {
    /// Stage 1 met: both clocks now equal the common time.
    Synced(f64),
    /// Stage 2 met: both copies share a hit at the common time.
    Met(Hit),
    Failed,
}

struct Run<'a> {
    body: &'a ConvexBody,
    law: &'a ReflectionLaw,
    pair: Pair,
    attempts: Vec<Attempt>,
}

impl Run<'_> {
    fn log(&mut self, stage: u8, success: bool, overlap_mass: f64) {
        let at = self.pair.hits[0].clock.min(self.pair.hits[1].clock);
        self.attempts.push(Attempt {
            stage,
            success,
            overlap_mass,
            at,
        });
    }

    fn apply_both(&mut self, first: &[Step], second: &[Step]) {
        self.pair.apply(0, first);
        self.pair.apply(1, second);
    }

    /// Steps the copy that is behind until its clock strictly passes the other's.
    fn realign<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let behind = if self.pair.hits[0].clock <= self.pair.hits[1].clock {
            0
        } else {
            1
        };
        let target = self.pair.hits[1 - behind].clock;
        while self.pair.hits[behind].clock <= target {
            let step = law_step(self.body, self.law, &self.pair.hits[behind].point, rng)?;
            self.pair.apply(behind, &[step]);
        }
        Ok(())
    }

    fn independent<R: Rng + ?Sized>(&mut self, steps: usize, rng: &mut R) -> Result<()> {
        for side in 0..2 {
            for _ in 0..steps {
                let step = law_step(self.body, self.law, &self.pair.hits[side].point, rng)?;
                self.pair.apply(side, &[step]);
            }
        }
        Ok(())
    }

    fn min_clock(&self) -> f64 {
        self.pair.hits[0].clock.min(self.pair.hits[1].clock)
    }

    /// Shared steps up to `t_max`; only worth taking when paths are recorded.
    fn shared_until<R: Rng + ?Sized>(&mut self, t_max: f64, rng: &mut R) -> Result<()> {
        while self.pair.records.is_some() && self.pair.hits[0].clock < t_max {
            let step = law_step(self.body, self.law, &self.pair.hits[0].point, rng)?;
            self.pair.apply_shared(&[step]);
        }
        Ok(())
    }
}

/// Drives the stage loop until the copies meet or both clocks reach `t_max`.
#[allow(clippy::too_many_arguments)]
fn drive<R, F>(
    body: &ConvexBody,
    law: &ReflectionLaw,
    start: &ProcessStart,
    start_b: &ProcessStart,
    t_max: f64,
    record: bool,
    rng: &mut R,
    mut stage: F,
) -> Result<CouplingOutcome>
where
    R: Rng + ?Sized,
    F: FnMut(&mut Run<'_>, u8, &mut R) -> Result<Stage>,
{
    if !(t_max >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "t_max = {t_max} must be non-negative"
        )));
    }
    let (hit_a, rec_a) = first_hit(body, start)?;
    let (hit_b, rec_b) = first_hit(body, start_b)?;
    let mut run = Run {
        body,
        law,
        pair: Pair::new([hit_a, hit_b], [rec_a, rec_b], record),
        attempts: vec![],
    };
    if start == start_b {
        run.shared_until(t_max, rng)?;
        return Ok(run.pair.finish(true, None, Some(hit_a.clock), run.attempts));
    }
    while run.min_clock() < t_max {
        match stage(&mut run, 1, rng)? {
            Stage::Synced(clock) => run.pair.set_clock(clock),
            Stage::Met(_) => unreachable!("stage 1 only synchronizes clocks"),
            Stage::Failed => {
                run.realign(rng)?;
                continue;
            }
        }
        match stage(&mut run, 2, rng)? {
            Stage::Met(hit) => {
                run.pair.merge(hit);
                run.shared_until(t_max, rng)?;
                return Ok(run.pair.finish(true, None, Some(hit.clock), run.attempts));
            }
            _ => run.realign(rng)?,
        }
    }
    Ok(run.pair.finish(false, None, None, run.attempts))
}

/// Couples two copies of the billiard process in a disc. Stage 1 matches the
/// time of the second next hit; stage 2 then matches both the place and the
/// time of the second next hit.
#[allow(clippy::too_many_arguments)]
pub fn couple_process_disc<R: Rng + ?Sized>(
    body: &ConvexBody,
    law: &ReflectionLaw,
    start: ProcessStart,
    start_b: ProcessStart,
    cert: &RateCertificate,
    t_max: f64,
    record: bool,
    rng: &mut R,
) -> Result<CouplingOutcome> {
    if cert.kind != CertificateKind::DiscProcess {
        return Err(Error::InvalidParams(format!(
            "{:?} is not a disc process certificate",
            cert.kind
        )));
    }
    let r = body
        .disc_radius()
        .ok_or_else(|| Error::InvalidParams("a disc process certificate needs a disc".into()))?;
    let cert_r = cert.input("r")?;
    if (cert_r - r).abs() > 1e-12 * r {
        return Err(Error::InvalidParams(format!(
            "certificate radius {cert_r} differs from the body radius {r}"
        )));
    }
    let theta_star = cert.input("theta_star")?;
    let f_min = cert.input("f_min")?;
    let (eta, eps, delta) = (
        cert.input("eta")?,
        cert.input("eps")?,
        cert.constant("delta")?,
    );
    super::check_law(law, theta_star, f_min)?;
    drive(
        body,
        law,
        &start,
        &start_b,
        t_max,
        record,
        rng,
        |run, stage, rng| {
            let [x, y] = run.pair.hits;
            if stage == 1 {
                let a = DiscTimeSplit::new(body, law, x, theta_star, f_min, eta, delta)?;
                let b = DiscTimeSplit::new(body, law, y, theta_star, f_min, eta, delta)?;
                let c = gamma_couple(&a, &b, rng)?;
                run.log(1, c.success, c.overlap_mass);
                run.apply_both(&c.first, &c.second);
                Ok(c.coord.map_or(Stage::Failed, |t| Stage::Synced(t[0])))
            } else {
                let a = DiscJointSplit::new(body, law, x, theta_star, f_min, eps)?;
                let b = DiscJointSplit::new(body, law, y, theta_star, f_min, eps)?;
                let c = gamma_couple(&a, &b, rng)?;
                run.log(2, c.success, c.overlap_mass);
                run.apply_both(&c.first, &c.second);
                Ok(c.coord.map_or(Stage::Failed, |k| {
                    Stage::Met(Hit {
                        point: body.point_at(k[0] * r),
                        clock: k[1],
                    })
                }))
            }
        },
    )
}

/// Couples two copies of the billiard process in a convex body. Stage 1
/// matches the time of the `n₀`-th next hit; stage 2 uses the geometry of the
/// current pair of hits to match the place and time of the second next hit.
/// When that geometry is degenerate, stage 2 is replaced by two independent
/// steps, logged with zero overlap mass.
#[allow(clippy::too_many_arguments)]
pub fn couple_process_convex<R: Rng + ?Sized>(
    body: &ConvexBody,
    law: &ReflectionLaw,
    start: ProcessStart,
    start_b: ProcessStart,
    cert: &RateCertificate,
    t_max: f64,
    record: bool,
    rng: &mut R,
) -> Result<CouplingOutcome> {
    if cert.kind != CertificateKind::ConvexProcess {
        return Err(Error::InvalidParams(format!(
            "{:?} is not a convex process certificate",
            cert.kind
        )));
    }
    super::check_summary(body, cert)?;
    let theta_star = cert.input("theta_star")?;
    let rho = cert.input("rho_min")?;
    let n0 = cert.constant("n0")? as usize;
    let zeta = cert.input("zeta")?;
    let params = PhiParams {
        beta: cert.input("beta")?,
        delta_p: cert.input("delta_p")?,
        eps: cert.input("eps")?,
        rho_min: rho,
    };
    super::check_law(law, theta_star, rho)?;
    drive(
        body,
        law,
        &start,
        &start_b,
        t_max,
        record,
        rng,
        |run, stage, rng| {
            let [x, y] = run.pair.hits;
            if stage == 1 {
                let a = ConvexTimeSplit::new(body, law, x, n0, rho, zeta);
                let b = ConvexTimeSplit::new(body, law, y, n0, rho, zeta);
                let c = gamma_couple(&a, &b, rng)?;
                run.log(1, c.success, c.overlap_mass);
                run.apply_both(&c.first, &c.second);
                return Ok(c.coord.map_or(Stage::Failed, |t| Stage::Synced(t[0])));
            }
            let geo = match phi_geometry(body, &x.point, &y.point, &params) {
                Ok(geo) if lemma_holds(&geo, params.eps, 1e-12) => geo,
                Ok(_) | Err(Error::GeometryDegenerate(_)) => {
                    run.log(2, false, 0.0);
                    run.independent(2, rng)?;
                    return Ok(Stage::Failed);
                }
                Err(e) => return Err(e),
            };
            let a = ConvexJointSplit::new(body, law, x, geo, params.eps);
            let b = ConvexJointSplit::new(body, law, y, geo, params.eps);
            let c = gamma_couple(&a, &b, rng)?;
            run.log(2, c.success, c.overlap_mass);
            run.apply_both(&c.first, &c.second);
            Ok(c.coord.map_or(Stage::Failed, |k| {
                Stage::Met(Hit {
                    point: body.point_at(k[0]),
                    clock: k[1],
                })
            }))
        },
    )
}
