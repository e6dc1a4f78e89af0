//! The split laws used by each coupling stage.

use super::{Draw, Splitting, Window, Window1, REJECTION_CAP};
use crate::dynamics::{draw_angle, step_with_angle};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, ConvexBody};
use crate::numeric::{brent, irwin_hall_density, wrap, GaussLegendre, TAU};
use crate::rates::{phi, phi_ds, PhiGeometry};
use crate::reflection::{reflect, ReflectionLaw};
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

/// A boundary hit at an absolute time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub point: BoundaryPoint,
    pub clock: f64,
}

/// One flight: the angle drawn at its start, the hit it ends at, its duration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub theta: f64,
    pub to: BoundaryPoint,
    pub tau: f64,
}

fn walk(body: &ConvexBody, from: &BoundaryPoint, angles: &[f64]) -> Result<Vec<Step>> {
    let mut x = *from;
    let mut path = Vec::with_capacity(angles.len());
    for &theta in angles {
        let (to, tau) = step_with_angle(body, &x, theta)?;
        path.push(Step { theta, to, tau });
        x = to;
    }
    Ok(path)
}

fn random_walk<R: Rng + ?Sized>(
    body: &ConvexBody,
    law: &ReflectionLaw,
    from: &BoundaryPoint,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Step>> {
    let mut x = *from;
    let mut path = Vec::with_capacity(n);
    for _ in 0..n {
        let theta = draw_angle(law, rng)?;
        let (to, tau) = step_with_angle(body, &x, theta)?;
        path.push(Step { theta, to, tau });
        x = to;
    }
    Ok(path)
}

/// Flight straight to `to`, with the angle it needs at `from`.
fn aimed(from: &BoundaryPoint, to: BoundaryPoint) -> Step {
    let chord = to.position - from.position;
    let tau = chord.norm();
    Step {
        theta: from.normal.angle_to(chord / tau),
        to,
        tau,
    }
}

fn path_time(path: &[Step]) -> f64 {
    path.iter().map(|s| s.tau).sum()
}

/// Product over the path of `f_min/f(θ)` on `|θ| ≤ half`, zero outside.
fn flat_weight(law: &ReflectionLaw, f_min: f64, half: f64, path: &[Step]) -> f64 {
    path.iter()
        .map(|s| {
            if s.theta.abs() <= half {
                f_min / law.density(s.theta)
            } else {
                0.0
            }
        })
        .product()
}

/// `n` uniforms on `[lo, lo + width]` conditioned on their sum, by rejection.
fn uniforms_with_sum<R: Rng + ?Sized>(
    n: usize,
    lo: f64,
    width: f64,
    sum: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 1 {
        return Ok(vec![sum]);
    }
    let mut v = vec![0.0; n];
    for _ in 0..REJECTION_CAP {
        let mut acc = 0.0;
        for slot in v.iter_mut().take(n - 1) {
            *slot = lo + width * rng.random::<f64>();
            acc += *slot;
        }
        let last = sum - acc;
        if last >= lo && last <= lo + width {
            v[n - 1] = last;
            return Ok(v);
        }
    }
    Err(Error::RejectionExhausted(REJECTION_CAP))
}

fn pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return Some(i);
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0)
}

/// `n₀` steps of the disc chain. The component draws each angle uniformly on
/// `[−θ*/2, θ*/2]` at density `f_min`; its coordinate is the final polar angle.
#[derive(Clone, Debug)]
pub struct DiscChainSplit<'a> {
    body: &'a ConvexBody,
    law: &'a ReflectionLaw,
    r: f64,
    start: BoundaryPoint,
    n0: usize,
    half: f64,
    f_min: f64,
    window: Window,
    level: f64,
}

impl<'a> DiscChainSplit<'a> {
    pub fn new(
        body: &'a ConvexBody,
        law: &'a ReflectionLaw,
        start: BoundaryPoint,
        theta_star: f64,
        f_min: f64,
        n0: usize,
        eps: f64,
    ) -> Result<Self> {
        let r = body
            .disc_radius()
            .ok_or_else(|| Error::InvalidParams("disc chain coupling needs a disc".into()))?;
        let n = n0 as f64;
        let centre = start.s / r + n * PI;
        let half_width = n * theta_star - (n - 1.0) * eps;
        let window = Window::one(Window1::arc(centre - half_width, 2.0 * half_width, TAU));
        let level = (0.5 * f_min).powi(n0 as i32) * eps.powi(n0 as i32 - 1);
        Ok(Self {
            body,
            law,
            r,
            start,
            n0,
            half: 0.5 * theta_star,
            f_min,
            window,
            level,
        })
    }

    /// Offsets `x ≡ Φ − φ₀ − n₀π (mod 2π)` reachable by `2Σθ`, with the density of `2Σθ` there.
    fn branches(&self, phi_end: f64) -> Vec<(f64, f64)> {
        let (n, a) = (self.n0 as f64, self.half);
        let w = wrap(phi_end - self.start.s / self.r - n * PI, TAU);
        let reach = 2.0 * n * a;
        let k_lo = ((-reach - w) / TAU).ceil() as i64;
        let k_hi = ((reach - w) / TAU).floor() as i64;
        (k_lo..=k_hi)
            .map(|k| {
                let x = w + TAU * k as f64;
                (
                    x,
                    irwin_hall_density(self.n0, (0.5 * x + n * a) / (2.0 * a)) / (4.0 * a),
                )
            })
            .collect()
    }
}

impl Splitting for DiscChainSplit<'_> {
    type Path = Vec<Step>;

    fn window(&self) -> &Window {
        &self.window
    }

    fn level(&self) -> f64 {
        self.level
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw<Vec<Step>>> {
        let path = random_walk(self.body, self.law, &self.start, self.n0, rng)?;
        let end = path.last().map_or(self.start, |s| s.to);
        Ok(Draw {
            coord: [end.s / self.r, 0.0],
            path,
        })
    }

    fn component(&self, draw: &Draw<Vec<Step>>) -> Result<(f64, f64)> {
        let q = self.f_min * 2.0 * self.half;
        let density = q.powi(self.n0 as i32)
            * self
                .branches(draw.coord[0])
                .iter()
                .map(|b| b.1)
                .sum::<f64>();
        Ok((
            flat_weight(self.law, self.f_min, self.half, &draw.path),
            density,
        ))
    }

    fn draw_given<R: Rng + ?Sized>(&self, coord: [f64; 2], rng: &mut R) -> Result<Vec<Step>> {
        let branches = self.branches(coord[0]);
        let weights: Vec<f64> = branches.iter().map(|b| b.1).collect();
        let i = pick(&weights, rng).ok_or(Error::ProfileViolated {
            level: self.level,
            density: 0.0,
        })?;
        let a = self.half;
        let angles = uniforms_with_sum(self.n0, -a, 2.0 * a, 0.5 * branches[i].0, rng)?;
        let mut path = walk(self.body, &self.start, &angles)?;
        if let Some(last) = path.last_mut() {
            last.to = self.body.point_at(coord[0] * self.r);
        }
        Ok(path)
    }
}

/// One step of the convex chain. The component draws the angle uniformly on
/// `[−θ*/2, θ*/2]`; its coordinate is the arc length of the hit.
#[derive(Clone, Debug)]
pub struct ConvexChainSplit<'a> {
    body: &'a ConvexBody,
    law: &'a ReflectionLaw,
    start: BoundaryPoint,
    half: f64,
    f_min: f64,
    window: Window,
    level: f64,
}

impl<'a> ConvexChainSplit<'a> {
    pub fn new(
        body: &'a ConvexBody,
        law: &'a ReflectionLaw,
        start: BoundaryPoint,
        theta_star: f64,
        f_min: f64,
        level: f64,
    ) -> Result<Self> {
        let l = body.perimeter();
        let half = 0.5 * theta_star;
        let window = if half >= FRAC_PI_2 - 1e-9 {
            Window1::full(l)
        } else {
            let lo = step_with_angle(body, &start, half)?.0.s;
            let hi = step_with_angle(body, &start, -half)?.0.s;
            let mid = step_with_angle(body, &start, 0.0)?.0.s;
            let forward = wrap(hi - lo, l);
            if wrap(mid - lo, l) < forward {
                Window1::arc(lo, forward, l)
            } else {
                Window1::arc(hi, wrap(lo - hi, l), l)
            }
        };
        Ok(Self {
            body,
            law,
            start,
            half,
            f_min,
            window: Window::one(window),
            level,
        })
    }
}

impl Splitting for ConvexChainSplit<'_> {
    type Path = Vec<Step>;

    fn window(&self) -> &Window {
        &self.window
    }

    fn level(&self) -> f64 {
        self.level
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw<Vec<Step>>> {
        let path = random_walk(self.body, self.law, &self.start, 1, rng)?;
        Ok(Draw {
            coord: [path[0].to.s, 0.0],
            path,
        })
    }

    fn component(&self, draw: &Draw<Vec<Step>>) -> Result<(f64, f64)> {
        let step = &draw.path[0];
        let chord = step.to.position - self.start.position;
        let dist = chord.norm();
        let density = self.f_min * (-chord / dist).dot(step.to.normal).max(0.0) / dist;
        Ok((
            flat_weight(self.law, self.f_min, self.half, &draw.path),
            density,
        ))
    }

    fn draw_given<R: Rng + ?Sized>(&self, coord: [f64; 2], _rng: &mut R) -> Result<Vec<Step>> {
        Ok(vec![aimed(&self.start, self.body.point_at(coord[0]))])
    }
}

/// Two flights on a disc, split on the absolute time of the second hit. The
/// component draws both angles uniformly on `[−θ*/2, θ*/2]` at density `f_min`.
#[derive(Clone, Debug)]
pub struct DiscTimeSplit<'a> {
    body: &'a ConvexBody,
    law: &'a ReflectionLaw,
    r: f64,
    start: Hit,
    half: f64,
    f_min: f64,
    window: Window,
    level: f64,
}

impl<'a> DiscTimeSplit<'a> {
    pub fn new(
        body: &'a ConvexBody,
        law: &'a ReflectionLaw,
        start: Hit,
        theta_star: f64,
        f_min: f64,
        eta: f64,
        delta: f64,
    ) -> Result<Self> {
        let r = body
            .disc_radius()
            .ok_or_else(|| Error::InvalidParams("disc process coupling needs a disc".into()))?;
        let half = 0.5 * theta_star;
        let window = Window::one(Window1::interval(
            start.clock + 4.0 * r * half.cos() + eta,
            start.clock + 4.0 * r - eta,
        ));
        Ok(Self {
            body,
            law,
            r,
            start,
            half,
            f_min,
            window,
            level: delta,
        })
    }

    /// Range of `u₁ ∈ [0, a]` with `u₂ = arccos(s − cos u₁) ∈ [0, a]`.
    fn u_range(&self, s: f64) -> (f64, f64) {
        let a = self.half;
        let lo = (s - a.cos()).clamp(-1.0, 1.0).acos();
        let hi = (s - 1.0).clamp(-1.0, 1.0).acos();
        (lo, hi.min(a))
    }

    /// Density of the component's time coordinate at duration `t`.
    pub fn time_density(&self, t: f64) -> f64 {
        let s = t / (2.0 * self.r);
        let (lo, top) = self.u_range(s);
        if !(top > lo) {
            return 0.0;
        }
        // u = hi − w² removes the inverse-square-root end at s − cos u = 1,
        // leaving an analytic integrand in w.
        let hi = (s - 1.0).clamp(-1.0, 1.0).acos();
        let (sin_hi, sm1) = (hi.sin(), s - 1.0);
        let integrand = |w: f64| {
            let w2 = w * w;
            let one_minus = -sm1 * 2.0 * (0.5 * w2).sin().powi(2) + sin_hi * w2.sin();
            let root = (one_minus * (2.0 - one_minus)).max(0.0).sqrt();
            if root == 0.0 {
                2.0 / (2.0 * sin_hi).sqrt()
            } else {
                2.0 * w / root
            }
        };
        let (w_lo, w_hi) = ((hi - top).max(0.0).sqrt(), (hi - lo).sqrt());
        let mid = 0.5 * (w_lo + w_hi);
        let rule = time_rule();
        let integral = rule.integrate(integrand, w_lo, mid) + rule.integrate(integrand, mid, w_hi);
        2.0 * self.f_min * self.f_min / self.r * integral
    }
}

fn time_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(24))
}

impl Splitting for DiscTimeSplit<'_> {
    type Path = Vec<Step>;

    fn window(&self) -> &Window {
        &self.window
    }

    fn level(&self) -> f64 {
        self.level
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw<Vec<Step>>> {
        let path = random_walk(self.body, self.law, &self.start.point, 2, rng)?;
        Ok(Draw {
            coord: [self.start.clock + path_time(&path), 0.0],
            path,
        })
    }

    fn component(&self, draw: &Draw<Vec<Step>>) -> Result<(f64, f64)> {
        let weight = flat_weight(self.law, self.f_min, self.half, &draw.path);
        Ok((weight, self.time_density(draw.coord[0] - self.start.clock)))
    }

    fn draw_given<R: Rng + ?Sized>(&self, coord: [f64; 2], rng: &mut R) -> Result<Vec<Step>> {
        let s = (coord[0] - self.start.clock) / (2.0 * self.r);
        let (lo, _) = self.u_range(s);
        let u_mid = (0.5 * s).clamp(-1.0, 1.0).acos();
        let sin_mid = u_mid.sin();
        for _ in 0..REJECTION_CAP {
            // On u₁ ≤ u₂ the conditional density in u₁ is ∝ 1/sin u₂ ≤ 1/sin u_mid.
            let u1 = lo + (u_mid - lo) * rng.random::<f64>();
            let u2 = (s - u1.cos()).clamp(-1.0, 1.0).acos();
            if rng.random::<f64>() * u2.sin() <= sin_mid {
                let (mut t1, mut t2) = if rng.random::<bool>() {
                    (u1, u2)
                } else {
                    (u2, u1)
                };
                if rng.random::<bool>() {
                    t1 = -t1;
                }
                if rng.random::<bool>() {
                    t2 = -t2;
                }
                return walk(self.body, &self.start.point, &[t1, t2]);
            }
        }
        Err(Error::RejectionExhausted(REJECTION_CAP))
    }
}

/// Two flights on a disc, split on the pair (polar angle, time) of the
/// second hit, with the same flat component as [`DiscTimeSplit`].
#[derive(Clone, Debug)]
pub struct DiscJointSplit<'a> {
    body: &'a ConvexBody,
    law: &'a ReflectionLaw,
    r: f64,
    start: Hit,
    half: f64,
    f_min: f64,
    window: Window,
    level: f64,
}

impl<'a> DiscJointSplit<'a> {
    pub fn new(
        body: &'a ConvexBody,
        law: &'a ReflectionLaw,
        start: Hit,
        theta_star: f64,
        f_min: f64,
        eps: f64,
    ) -> Result<Self> {
        let r = body
            .disc_radius()
            .ok_or_else(|| Error::InvalidParams("disc process coupling needs a disc".into()))?;
        let quarter = 0.25 * theta_star;
        let half_width = theta_star - 4.0 * eps;
        let phi0 = start.point.s / r;
        let angle = Window1::arc(phi0 - half_width, 2.0 * half_width, TAU);
        let time = Window1::interval(
            start.clock + 4.0 * r * quarter.cos(),
            start.clock + 4.0 * r * (quarter - eps).cos(),
        );
        let level = f_min * f_min / (4.0 * r * quarter.sin());
        Ok(Self {
            body,
            law,
            r,
            start,
            half: 0.5 * theta_star,
            f_min,
            window: Window::two(angle, time),
            level,
        })
    }

    /// Angle pairs in the flat component reaching `coord`, each with its density contribution.
    fn preimages(&self, coord: [f64; 2]) -> Vec<(f64, f64, f64)> {
        let w = wrap(coord[0] - self.start.point.s / self.r, TAU);
        let c = (coord[1] - self.start.clock) / (2.0 * self.r);
        let a = self.half;
        let mut out = vec![];
        for sigma in [0.5 * w, 0.5 * w - PI] {
            let k = c / (2.0 * (0.5 * sigma).cos());
            if !(k.abs() <= 1.0) {
                continue;
            }
            let d0 = 2.0 * k.acos();
            let deltas: &[f64] = if d0 == 0.0 { &[0.0] } else { &[d0, -d0] };
            for &d in deltas {
                let (u1, u2) = (0.5 * (sigma + d), 0.5 * (sigma - d));
                if u1.abs() <= a && u2.abs() <= a {
                    let jac = 4.0 * self.r * (u1.sin() - u2.sin()).abs();
                    out.push((u1, u2, self.f_min * self.f_min / jac));
                }
            }
        }
        out
    }
}

impl Splitting for DiscJointSplit<'_> {
    type Path = Vec<Step>;

    fn window(&self) -> &Window {
        &self.window
    }

    fn level(&self) -> f64 {
        self.level
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw<Vec<Step>>> {
        let path = random_walk(self.body, self.law, &self.start.point, 2, rng)?;
        Ok(Draw {
            coord: [path[1].to.s / self.r, self.start.clock + path_time(&path)],
            path,
        })
    }

    fn component(&self, draw: &Draw<Vec<Step>>) -> Result<(f64, f64)> {
        let weight = flat_weight(self.law, self.f_min, self.half, &draw.path);
        Ok((weight, self.preimages(draw.coord).iter().map(|p| p.2).sum()))
    }

    fn draw_given<R: Rng + ?Sized>(&self, coord: [f64; 2], rng: &mut R) -> Result<Vec<Step>> {
        let pre = self.preimages(coord);
        let weights: Vec<f64> = pre.iter().map(|p| p.2).collect();
        let i = pick(&weights, rng).ok_or(Error::ProfileViolated {
            level: self.level,
            density: 0.0,
        })?;
        let mut path = walk(self.body, &self.start.point, &[pre[i].0, pre[i].1])?;
        path[1].to = self.body.point_at(coord[0] * self.r);
        Ok(path)
    }
}

const PREIMAGE_SCAN: usize = 256;

/// Chord length from `x` at angle `theta` and its derivative in `theta`.
fn chord_and_slope(body: &ConvexBody, x: &BoundaryPoint, theta: f64) -> Option<(f64, f64)> {
    let v = reflect(x, theta);
    let (tau, p) = body.exit_from(x, v).ok()?;
    let slope = -tau * p.normal.dot(v.perp()) / p.normal.dot(v);
    Some((tau, slope))
}

/// All angles whose chord from `x` has length `t`, with `|dτ/dθ|` at each.
pub fn chord_preimages(body: &ConvexBody, x: &BoundaryPoint, t: f64) -> Vec<(f64, f64)> {
    let edge = FRAC_PI_2 - 1e-12;
    let mut grid = vec![-edge];
    grid.extend(
        (0..PREIMAGE_SCAN).map(|k| -FRAC_PI_2 + PI * (k as f64 + 0.5) / PREIMAGE_SCAN as f64),
    );
    grid.push(edge);
    let value = |theta: f64| {
        body.chord_length_from(x, reflect(x, theta))
            .map_or(-t, |tau| tau - t)
    };
    let values: Vec<f64> = grid.iter().map(|&g| value(g)).collect();
    let mut out = vec![];
    for k in 0..grid.len() - 1 {
        if values[k] == 0.0 || values[k].signum() != values[k + 1].signum() && values[k + 1] != 0.0
        {
            if let Some(theta) = brent(value, grid[k], grid[k + 1], 1e-14) {
                if let Some((_, slope)) = chord_and_slope(body, x, theta) {
                    out.push((theta, slope.abs()));
                }
            }
        }
    }
    out
}

/// `n₀` flights on a convex body, split on the absolute time of the last hit.
/// Per flight, the component has time uniform on `[0, 2/C]` at density `cρ_min`,
/// with the angle chosen among the chord preimages in proportion to `1/|τ′|`.
#[derive(Clone, Debug)]
pub struct ConvexTimeSplit<'a> {
    body: &'a ConvexBody,
    law: &'a ReflectionLaw,
    start: Hit,
    n0: usize,
    c: f64,
    cap: f64,
    rho: f64,
    window: Window,
    level: f64,
}

impl<'a> ConvexTimeSplit<'a> {
    pub fn new(
        body: &'a ConvexBody,
        law: &'a ReflectionLaw,
        start: Hit,
        n0: usize,
        rho: f64,
        zeta: f64,
    ) -> Self {
        let s = body.summary();
        let (c, cap) = (s.curvature_min, s.curvature_max);
        let n = n0 as f64;
        let window = Window::one(Window1::interval(
            start.clock + (n - 1.0) * zeta,
            start.clock + 2.0 * n / cap - (n - 1.0) * zeta,
        ));
        let level = (c * rho).powi(n0 as i32) * zeta.powi(n0 as i32 - 1);
        Self {
            body,
            law,
            start,
            n0,
            c,
            cap,
            rho,
            window,
            level,
        }
    }

    fn step_weight(&self, from: &BoundaryPoint, step: &Step) -> Result<f64> {
        if step.tau > 2.0 / self.cap {
            return Ok(0.0);
        }
        let h: f64 = self.rho
            * chord_preimages(self.body, from, step.tau)
                .iter()
                .map(|p| 1.0 / p.1)
                .sum::<f64>();
        let w = self.c * self.rho * self.rho / (h * self.law.density(step.theta));
        if w > 1.0 + 1e-9 {
            return Err(Error::ProfileViolated {
                level: self.c * self.rho,
                density: h * self.law.density(step.theta) / self.rho,
            });
        }
        Ok(w)
    }
}

impl Splitting for ConvexTimeSplit<'_> {
    type Path = Vec<Step>;

    fn window(&self) -> &Window {
        &self.window
    }

    fn level(&self) -> f64 {
        self.level
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw<Vec<Step>>> {
        let path = random_walk(self.body, self.law, &self.start.point, self.n0, rng)?;
        Ok(Draw {
            coord: [self.start.clock + path_time(&path), 0.0],
            path,
        })
    }

    fn component(&self, draw: &Draw<Vec<Step>>) -> Result<(f64, f64)> {
        let mut from = self.start.point;
        let mut weight = 1.0;
        for step in &draw.path {
            weight *= self.step_weight(&from, step)?;
            if weight == 0.0 {
                break;
            }
            from = step.to;
        }
        let m = 2.0 * self.c * self.rho / self.cap;
        let t = draw.coord[0] - self.start.clock;
        Ok((
            weight,
            m.powi(self.n0 as i32) * irwin_hall_density(self.n0, t * self.cap / 2.0) * self.cap
                / 2.0,
        ))
    }

    fn draw_given<R: Rng + ?Sized>(&self, coord: [f64; 2], rng: &mut R) -> Result<Vec<Step>> {
        let times = uniforms_with_sum(
            self.n0,
            0.0,
            2.0 / self.cap,
            coord[0] - self.start.clock,
            rng,
        )?;
        let mut x = self.start.point;
        let mut path = Vec::with_capacity(self.n0);
        for t in times {
            let pre = chord_preimages(self.body, &x, t);
            let weights: Vec<f64> = pre.iter().map(|p| 1.0 / p.1).collect();
            let i = pick(&weights, rng)
                .ok_or_else(|| Error::GeometryDegenerate(format!("no chord of length {t}")))?;
            let (to, tau) = step_with_angle(self.body, &x, pre[i].0)?;
            path.push(Step {
                theta: pre[i].0,
                to,
                tau,
            });
            x = to;
        }
        Ok(path)
    }
}

/// Two flights on a convex body from a pair-specific geometry, split on
/// (arc length, absolute time) of the second hit. The component has density
/// `a` in (first hit, second hit) on `B^ε_ȳ × I*`.
#[derive(Clone, Debug)]
pub struct ConvexJointSplit<'a> {
    body: &'a ConvexBody,
    law: &'a ReflectionLaw,
    start: Hit,
    geo: PhiGeometry,
    eps: f64,
    window: Window,
}

impl<'a> ConvexJointSplit<'a> {
    pub fn new(
        body: &'a ConvexBody,
        law: &'a ReflectionLaw,
        start: Hit,
        geo: PhiGeometry,
        eps: f64,
    ) -> Self {
        let l = body.perimeter();
        let arc = Window1::arc(geo.i_star.0, geo.i_star.1 - geo.i_star.0, l);
        let time = Window1::interval(start.clock + geo.big_r1, start.clock + geo.big_r2);
        Self {
            body,
            law,
            start,
            geo,
            eps,
            window: Window::two(arc, time),
        }
    }

    fn in_ball(&self, s: f64) -> bool {
        self.body.arc_offset(self.geo.y_bar.s, s).abs() <= self.eps
    }

    fn in_window(&self, t: f64) -> bool {
        self.window.axes[0].contains(t)
    }

    fn weight(&self, draw: &Draw<Vec<Step>>) -> Result<f64> {
        let (first, second) = (draw.path[0].to, draw.path[1].to);
        if !(self.in_ball(first.s) && self.in_window(second.s)) {
            return Ok(0.0);
        }
        let q1 = crate::dynamics::kernel_q(self.body, self.law, &self.start.point, &first)?;
        let q2 = crate::dynamics::kernel_q(self.body, self.law, &first, &second)?;
        Ok(self.geo.a / (q1 * q2))
    }
}

impl Splitting for ConvexJointSplit<'_> {
    type Path = Vec<Step>;

    fn window(&self) -> &Window {
        &self.window
    }

    fn level(&self) -> f64 {
        self.geo.eta
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw<Vec<Step>>> {
        let path = random_walk(self.body, self.law, &self.start.point, 2, rng)?;
        Ok(Draw {
            coord: [path[1].to.s, self.start.clock + path_time(&path)],
            path,
        })
    }

    fn component(&self, draw: &Draw<Vec<Step>>) -> Result<(f64, f64)> {
        let weight = self.weight(draw)?;
        if weight == 0.0 {
            return Ok((0.0, 0.0));
        }
        let (s, t) = (draw.path[0].to.s, draw.path[1].to.s);
        Ok((
            weight,
            self.geo.a / phi_ds(self.body, self.start.point.position, s, t).abs(),
        ))
    }

    fn draw_given<R: Rng + ?Sized>(&self, coord: [f64; 2], _rng: &mut R) -> Result<Vec<Step>> {
        let (t, target) = (coord[0], coord[1] - self.start.clock);
        let w = self.start.point.position;
        let centre = self.geo.y_bar.s;
        let s = brent(
            |s| phi(self.body, w, s, t) - target,
            centre - self.eps,
            centre + self.eps,
            1e-14,
        )
        .ok_or_else(|| {
            Error::GeometryDegenerate(format!("no first hit in the ball for time {target}"))
        })?;
        let first = aimed(&self.start.point, self.body.point_at(s));
        let second = aimed(&first.to, self.body.point_at(t));
        Ok(vec![first, second])
    }
}
