//! The boundary chain and the continuous-time billiard process.

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, ConvexBody};
use crate::numeric::{integrate_pieces, wrap, TAU};
use crate::reflection::{reflect, ReflectionLaw};
use crate::vec2::Vec2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Angles this close to ±π/2 count as tangent and are redrawn once.
pub const TANGENT_GUARD: f64 = 1e-9;

/// One hit of the boundary. `theta` and `velocity` describe the flight that
/// ended here: the reflection angle drawn at the previous hit (NaN when the
/// flight started in the interior) and its unit direction. `tau` is the
/// flight duration and `clock` the absolute hitting time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BounceRecord {
    pub n: usize,
    pub s: f64,
    pub position: Vec2,
    pub theta: f64,
    pub tau: f64,
    pub clock: f64,
    pub velocity: Vec2,
}

impl BounceRecord {
    /// Polar angle of the hit point in `[0, 2π)`.
    pub fn phi(&self) -> f64 {
        polar_angle(self.position)
    }
}

pub fn polar_angle(p: Vec2) -> f64 {
    wrap(p.y.atan2(p.x), TAU)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProcessStart {
    /// On the boundary at arc length `s`; the first velocity is reflected.
    Boundary(f64),
    /// In the interior with a given unit velocity.
    Interior { position: Vec2, velocity: Vec2 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: ProcessStart,
    pub start_position: Vec2,
    pub records: Vec<BounceRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub clock: f64,
    pub bounces_so_far: usize,
}

/// Draws a reflection angle, redrawing once if it is numerically tangent.
pub fn draw_angle<R: Rng + ?Sized>(law: &ReflectionLaw, rng: &mut R) -> Result<f64> {
    for _ in 0..2 {
        let theta = law.sample(rng);
        if theta.abs() < FRAC_PI_2 - TANGENT_GUARD {
            return Ok(theta);
        }
    }
    Err(Error::TangentRay {
        cos: (FRAC_PI_2 - TANGENT_GUARD).cos(),
    })
}

/// Deterministic part of a step: reflect at `x` by `theta` and fly to the next hit.
pub fn step_with_angle(
    body: &ConvexBody,
    x: &BoundaryPoint,
    theta: f64,
) -> Result<(BoundaryPoint, f64)> {
    body.exit_from(x, reflect(x, theta))
        .map(|(tau, y)| (y, tau))
}

/// One chain transition: returns the next hit, the angle used and the flight time.
pub fn chain_step<R: Rng + ?Sized>(
    body: &ConvexBody,
    law: &ReflectionLaw,
    x: &BoundaryPoint,
    rng: &mut R,
) -> Result<(BoundaryPoint, f64, f64)> {
    let theta = draw_angle(law, rng)?;
    let (y, tau) = step_with_angle(body, x, theta)?;
    Ok((y, theta, tau))
}

/// Closed-form disc transition from polar angle `phi`: `(φ + π + 2θ mod 2π, 2r cos θ)`.
pub fn disc_step_closed_form(r: f64, phi: f64, theta: f64) -> (f64, f64) {
    (wrap(PI + 2.0 * theta + phi, TAU), 2.0 * r * theta.cos())
}

/// Runs `n_steps` chain transitions from arc length `s0`.
pub fn run_chain<R: Rng + ?Sized>(
    body: &ConvexBody,
    law: &ReflectionLaw,
    s0: f64,
    n_steps: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    let start = body.point_at(s0);
    let mut records = Vec::with_capacity(n_steps);
    let (mut x, mut clock) = (start, 0.0);
    for n in 1..=n_steps {
        let (y, theta, tau) = chain_step(body, law, &x, rng)?;
        clock += tau;
        records.push(record(n, &x, &y, theta, tau, clock));
        x = y;
    }
    Ok(Trajectory {
        start: ProcessStart::Boundary(start.s),
        start_position: start.position,
        records,
    })
}

pub(crate) fn record(
    n: usize,
    from: &BoundaryPoint,
    to: &BoundaryPoint,
    theta: f64,
    tau: f64,
    clock: f64,
) -> BounceRecord {
    BounceRecord {
        n,
        s: to.s,
        position: to.position,
        theta,
        tau,
        clock,
        velocity: reflect(from, theta),
    }
}

/// Simulates the process until the last hitting time is at least `t_max`.
pub fn run_process<R: Rng + ?Sized>(
    body: &ConvexBody,
    law: &ReflectionLaw,
    start: ProcessStart,
    t_max: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    let mut records = Vec::new();
    let (mut x, start_position) = match start {
        ProcessStart::Boundary(s) => {
            let x = body.point_at(s);
            (x, x.position)
        }
        ProcessStart::Interior { position, velocity } => {
            let (tau, y) = body.exit_ray(position, velocity.normalized())?;
            records.push(BounceRecord {
                n: 1,
                s: y.s,
                position: y.position,
                theta: f64::NAN,
                tau,
                clock: tau,
                velocity: velocity.normalized(),
            });
            (y, position)
        }
    };
    let mut clock = records.last().map_or(0.0, |r| r.clock);
    while clock < t_max {
        let (y, theta, tau) = chain_step(body, law, &x, rng)?;
        clock += tau;
        records.push(record(records.len() + 1, &x, &y, theta, tau, clock));
        x = y;
    }
    Ok(Trajectory {
        start,
        start_position,
        records,
    })
}

impl Trajectory {
    /// Simulated span: the last hitting time, or 0 for an empty trajectory.
    pub fn horizon(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.clock)
    }

    /// The process at time `t`: the last hit before `t` plus the affine flight since.
    pub fn sample_at(&self, t: f64) -> Result<ProcessState> {
        let horizon = self.horizon();
        if !(t >= 0.0 && t <= horizon) {
            return Err(Error::BeyondHorizon { t, horizon });
        }
        // Number of hits with clock ≤ t.
        let k = self.records.partition_point(|r| r.clock <= t);
        let (origin, since) = if k == 0 {
            (self.start_position, 0.0)
        } else {
            (self.records[k - 1].position, self.records[k - 1].clock)
        };
        if k == self.records.len() {
            let last = &self.records[k - 1];
            return Ok(ProcessState {
                position: last.position,
                velocity: last.velocity,
                clock: t,
                bounces_so_far: k,
            });
        }
        let velocity = self.records[k].velocity;
        Ok(ProcessState {
            position: origin + velocity * (t - since),
            velocity,
            clock: t,
            bounces_so_far: k,
        })
    }
}

/// Free-function form of [`Trajectory::sample_at`].
pub fn sample_process_at(trajectory: &Trajectory, t: f64) -> Result<ProcessState> {
    trajectory.sample_at(t)
}

/// Transition density of the chain from `x` to `y` per unit arc length of `y`:
/// `f(θ) cos φ / ‖x − y‖` with θ the chord angle at `x` and φ the one at `y`.
pub fn kernel_q(
    body: &ConvexBody,
    law: &ReflectionLaw,
    x: &BoundaryPoint,
    y: &BoundaryPoint,
) -> Result<f64> {
    let chord = y.position - x.position;
    let distance = chord.norm();
    if distance < body.tol_geom() {
        return Err(Error::CoincidentPoints { distance });
    }
    let dir = chord / distance;
    let theta = x.normal.angle_to(dir);
    let cos_phi = (-dir).dot(y.normal).max(0.0);
    Ok(law.density(theta) * cos_phi / distance)
}

/// `∫ Q(x, y) dy` over the boundary, split where the density has kinks.
pub fn kernel_mass(body: &ConvexBody, law: &ReflectionLaw, x: &BoundaryPoint, tol: f64) -> f64 {
    let l = body.perimeter();
    let mut cuts = vec![0.0, l];
    for theta in law.breakpoints() {
        if let Ok((hit, _)) = step_with_angle(body, x, theta) {
            cuts.push(wrap(hit.s - x.s, l));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * l);
    integrate_pieces(
        |u| kernel_q(body, law, x, &body.point_at(x.s + u)).unwrap_or(0.0),
        &cuts,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::stream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn closed_form_examples() {
        let (phi, tau) = disc_step_closed_form(1.0, 0.0, 0.0);
        assert_abs_diff_eq!(phi, PI, epsilon = 1e-15);
        assert_abs_diff_eq!(tau, 2.0, epsilon = 1e-15);
        let (phi, tau) = disc_step_closed_form(1.0, 0.0, FRAC_PI_4);
        assert_abs_diff_eq!(phi, 1.5 * PI, epsilon = 1e-15);
        assert_abs_diff_eq!(tau, 2f64.sqrt(), epsilon = 1e-15);
        let (phi, tau) = disc_step_closed_form(2.0, PI, -PI / 6.0);
        assert_abs_diff_eq!(phi, 5.0 * PI / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(tau, 2.0 * 3f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn closed_form_matches_ray_trace() {
        // Independent oracle: intersect the line with the circle by hand.
        for &(r, phi, theta) in &[(1.0, 0.0, FRAC_PI_4), (2.0, PI, -PI / 6.0), (0.7, 1.3, 1.1)] {
            let p = Vec2::from_angle(phi) * r;
            let d = (-Vec2::from_angle(phi)).rotate(theta);
            let tau = -2.0 * p.dot(d);
            let q = p + d * tau;
            let (phi_next, tau_next) = disc_step_closed_form(r, phi, theta);
            assert_abs_diff_eq!(tau, tau_next, epsilon = 1e-13);
            assert_abs_diff_eq!(polar_angle(q), phi_next, epsilon = 1e-12);
        }
    }

    #[test]
    fn normal_chord_on_ellipse() {
        let body = ConvexBody::ellipse(2.0, 1.0).unwrap();
        let x = body.point_at(0.0);
        let (y, tau) = step_with_angle(&body, &x, 0.0).unwrap();
        assert_abs_diff_eq!(tau, 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(y.position.x, -2.0, epsilon = 1e-9);
    }

    #[test]
    fn geometric_chain_follows_recursion() {
        let body = ConvexBody::disc(1.3).unwrap();
        let law = ReflectionLaw::cosine();
        let traj = run_chain(&body, &law, 0.4, 10_000, &mut stream(5, 0, 0)).unwrap();
        let mut phi = 0.4 / 1.3;
        let mut clock = 0.0;
        for rec in &traj.records {
            let (next, tau) = disc_step_closed_form(1.3, phi, rec.theta);
            clock += tau;
            assert!((rec.tau - tau).abs() < 1e-10);
            assert!(crate::numeric::wrap_centered(rec.phi() - next, TAU).abs() < 1e-9);
            assert!((rec.clock - clock).abs() < 1e-8);
            phi = next;
        }
    }

    #[test]
    fn empty_chain() {
        let body = ConvexBody::disc(1.0).unwrap();
        let traj = run_chain(
            &body,
            &ReflectionLaw::cosine(),
            0.3,
            0,
            &mut stream(0, 0, 0),
        )
        .unwrap();
        assert!(traj.records.is_empty());
        assert_eq!(traj.start, ProcessStart::Boundary(0.3));
        assert_eq!(traj.horizon(), 0.0);
    }

    #[test]
    fn chain_is_deterministic_per_stream() {
        let body = ConvexBody::ellipse(2.0, 1.0).unwrap();
        let law = ReflectionLaw::uniform_half();
        let a = run_chain(&body, &law, 1.0, 200, &mut stream(9, 0, 3)).unwrap();
        let b = run_chain(&body, &law, 1.0, 200, &mut stream(9, 0, 3)).unwrap();
        let c = run_chain(&body, &law, 1.0, 200, &mut stream(9, 0, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn process_sampling() {
        let body = ConvexBody::disc(1.0).unwrap();
        let law = ReflectionLaw::cosine();
        let traj = run_process(
            &body,
            &law,
            ProcessStart::Boundary(0.0),
            50.0,
            &mut stream(1, 4, 0),
        )
        .unwrap();
        assert!(traj.horizon() >= 50.0);
        for w in traj.records.windows(2) {
            assert!(w[1].clock > w[0].clock);
            assert!(w[1].tau > 0.0 && w[1].tau <= 2.0 + 1e-12);
            let mid = traj.sample_at(0.5 * (w[0].clock + w[1].clock)).unwrap();
            let expected = (w[0].position + w[1].position) * 0.5;
            assert!(mid.position.distance(expected) < 1e-12);
            let at = traj.sample_at(w[0].clock).unwrap();
            assert!(at.position.distance(w[0].position) < 1e-12);
        }
        let mut rng = stream(2, 0, 0);
        for _ in 0..1000 {
            let t = rng.random::<f64>() * traj.horizon();
            assert!(traj.sample_at(t).unwrap().position.norm() <= 1.0 + body.tol_geom());
        }
        assert!(matches!(
            traj.sample_at(traj.horizon() + 1.0),
            Err(Error::BeyondHorizon { .. })
        ));
    }

    #[test]
    fn interior_start() {
        let body = ConvexBody::disc(1.0).unwrap();
        let start = ProcessStart::Interior {
            position: Vec2::new(0.0, 0.0),
            velocity: Vec2::new(1.0, 0.0),
        };
        let traj = run_process(
            &body,
            &ReflectionLaw::cosine(),
            start,
            5.0,
            &mut stream(1, 4, 1),
        )
        .unwrap();
        let first = traj.records[0];
        assert!(first.theta.is_nan());
        assert_abs_diff_eq!(first.tau, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            traj.sample_at(0.5).unwrap().position.x,
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn kernel_examples() {
        let body = ConvexBody::disc(1.0).unwrap();
        let law = ReflectionLaw::cosine();
        let (x, y) = (body.point_at(0.0), body.point_at(PI));
        assert_abs_diff_eq!(
            kernel_q(&body, &law, &x, &y).unwrap(),
            0.25,
            epsilon = 1e-15
        );
        assert!(matches!(
            kernel_q(&body, &law, &x, &x),
            Err(Error::CoincidentPoints { .. })
        ));
        let narrow = ReflectionLaw::truncated_uniform(FRAC_PI_4).unwrap();
        assert_eq!(
            kernel_q(&body, &narrow, &x, &body.point_at(0.5)).unwrap(),
            0.0
        );
    }

    #[test]
    fn kernel_small_chord_limit() {
        // cos φ ≈ κ‖x−y‖/2, so Q → f(π/2)·κ/2 as y → x.
        let body = ConvexBody::ellipse(2.0, 1.0).unwrap();
        let law = ReflectionLaw::uniform_half();
        for s in [0.0, 0.7, 2.0] {
            let x = body.point_at(s);
            let q = kernel_q(&body, &law, &x, &body.point_at(s + 1e-5)).unwrap();
            assert_abs_diff_eq!(q, body.curvature_at(s) / (2.0 * PI), epsilon = 1e-4);
        }
    }

    #[test]
    fn kernel_is_stochastic() {
        let law = ReflectionLaw::truncated_uniform(3.0 * FRAC_PI_4).unwrap();
        for body in [
            ConvexBody::disc(1.0).unwrap(),
            ConvexBody::ellipse(2.0, 1.0).unwrap(),
        ] {
            for s in [0.0, 0.9, 3.3] {
                let x = body.point_at(s);
                assert_abs_diff_eq!(kernel_mass(&body, &law, &x, 1e-11), 1.0, epsilon = 1e-7);
                assert_abs_diff_eq!(
                    kernel_mass(&body, &ReflectionLaw::cosine(), &x, 1e-11),
                    1.0,
                    epsilon = 1e-7
                );
            }
        }
    }

    #[test]
    fn truncated_support_of_second_hit_time() {
        let body = ConvexBody::disc(1.0).unwrap();
        let theta_star = 3.0 * FRAC_PI_4;
        let law = ReflectionLaw::truncated_uniform(theta_star).unwrap();
        let mut rng = stream(3, 0, 0);
        for _ in 0..10_000 {
            let traj = run_chain(&body, &law, 0.0, 2, &mut rng).unwrap();
            let t2 = traj.records[1].clock;
            assert!(t2 >= 4.0 * (0.5 * theta_star).cos() - 1e-12 && t2 <= 4.0 + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn disc_step_matches_geometry(s in 0.0f64..10.0, theta in -1.55f64..1.55, r in 0.2f64..5.0) {
            let body = ConvexBody::disc(r).unwrap();
            let x = body.point_at(s);
            let (y, tau) = step_with_angle(&body, &x, theta).unwrap();
            let (phi, tau_cf) = disc_step_closed_form(r, x.s / r, theta);
            prop_assert!((tau - tau_cf).abs() < 1e-10 * r);
            prop_assert!(crate::numeric::wrap_centered(y.s / r - phi, TAU).abs() < 1e-9);
        }
    }
}
