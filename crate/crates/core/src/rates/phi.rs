//! Geometry behind the joint continuity of (position, time) after two
//! bounces on a convex body: the far bisector point ȳ, the stationary
//! points t_z, the window I* and the time interval (R₁, R₂).

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, ConvexBody};
use crate::numeric::{brent, wrap};
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};

const TZ_SCAN: usize = 512;
const WINDOW_GRID: usize = 33;
const BALL_GRID: usize = 17;

/// Free constants: `β` (distance of I* from ȳ), `δ_p` (distance of I* from
/// the stationary points), `ε` (half-width of the ball around ȳ), and the
/// law's `ρ_min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiParams {
    pub beta: f64,
    pub delta_p: f64,
    pub eps: f64,
    pub rho_min: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiGeometry {
    pub y_bar: BoundaryPoint,
    pub t_zx: f64,
    pub t_zx_b: f64,
    /// Unwrapped arc-length interval, `lo ∈ [0, L)`.
    pub i_star: (f64, f64),
    pub r1: f64,
    pub r2: f64,
    pub r1_b: f64,
    pub r2_b: f64,
    pub big_r1: f64,
    pub big_r2: f64,
    /// Slope lower bound `(δ_p/D)(βc/2)² − εM`.
    pub h: f64,
    pub m: f64,
    /// Density floor of the two-step path measure on `B^ε × I*`.
    pub a: f64,
    /// Joint density floor `a/2` on `I* × (R₁, R₂)`.
    pub eta: f64,
    /// Smallest `|∂_s φ_w|` seen on the `B^ε × I*` grid, over both starts.
    pub min_slope: f64,
    /// True if `x_b` was nudged to break an equidistant bisector.
    pub perturbed: bool,
}

/// Two-flight duration `|w − g(s)| + |g(s) − g(t)|`.
pub fn phi(body: &ConvexBody, w: Vec2, s: f64, t: f64) -> f64 {
    let gs = body.point_at(s).position;
    w.distance(gs) + gs.distance(body.point_at(t).position)
}

/// `∂_s` of [`phi`].
pub fn phi_ds(body: &ConvexBody, w: Vec2, s: f64, t: f64) -> f64 {
    let gs = body.point_at(s);
    let gt = body.point_at(t).position;
    let a = (gs.position - w).normalized();
    let b = (gs.position - gt).normalized();
    (a + b).dot(gs.tangent)
}

fn far_bisector_point(
    body: &ConvexBody,
    x: &BoundaryPoint,
    x_b: &BoundaryPoint,
) -> Result<BoundaryPoint> {
    let chord = x_b.position - x.position;
    let distance = chord.norm();
    if distance < body.tol_geom() {
        return Err(Error::CoincidentPoints { distance });
    }
    let mid = (x.position + x_b.position) * 0.5;
    let dir = chord.perp() / distance;
    let (_, p1) = body.exit_ray(mid, dir)?;
    let (_, p2) = body.exit_ray(mid, -dir)?;
    let (d1, d2) = (
        p1.position.distance(x.position),
        p2.position.distance(x.position),
    );
    if (d1 - d2).abs() <= 1e-9 * body.diameter() {
        return Err(Error::GeometryDegenerate(format!(
            "bisector intersections are equidistant ({d1} vs {d2})"
        )));
    }
    Ok(if d1 > d2 { p1 } else { p2 })
}

/// The `t ≠ s_ȳ` with `∂_s φ_w(s_ȳ, t) = 0`: the specular reflection point.
fn stationary_point(body: &ConvexBody, w: Vec2, s_y: f64) -> Result<f64> {
    let l = body.perimeter();
    let f = |t: f64| phi_ds(body, w, s_y, t);
    let ts: Vec<f64> = (0..TZ_SCAN)
        .map(|k| s_y + l * (k as f64 + 0.5) / TZ_SCAN as f64)
        .collect();
    let values: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    for k in 0..TZ_SCAN - 1 {
        if values[k].signum() != values[k + 1].signum() {
            let root = brent(f, ts[k], ts[k + 1], body.tol_root())
                .ok_or_else(|| Error::GeometryDegenerate("stationary point bracket lost".into()))?;
            return Ok(wrap(root, l));
        }
    }
    Err(Error::GeometryDegenerate(
        "no stationary point of the two-flight length".into(),
    ))
}

/// Largest arc of the circle `[0, L)` avoiding the open arcs `(c − r, c + r)`.
fn largest_gap(l: f64, forbidden: &[(f64, f64)]) -> Option<(f64, f64)> {
    if forbidden.iter().any(|&(_, r)| 2.0 * r >= l) {
        return None;
    }
    let mut arcs: Vec<(f64, f64)> = forbidden
        .iter()
        .map(|&(c, r)| {
            let lo = wrap(c - r, l);
            (lo, lo + 2.0 * r)
        })
        .collect();
    arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Sweep one turn starting at the first forbidden arc.
    let origin = arcs[0].0;
    let mut reach = arcs[0].1;
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |lo: f64, hi: f64| {
        if hi > lo && best.is_none_or(|(a, b)| hi - lo > b - a) {
            best = Some((lo, hi));
        }
    };
    for &(lo, hi) in arcs.iter().skip(1) {
        if lo > reach {
            consider(reach, lo);
        }
        reach = reach.max(hi);
    }
    consider(reach, origin + l);
    best
}

fn ranges(body: &ConvexBody, w: Vec2, ball: (f64, f64), window: &[f64]) -> (f64, f64) {
    let mut r1 = f64::NEG_INFINITY;
    let mut r2 = f64::INFINITY;
    for &t in window {
        let (a, b) = (phi(body, w, ball.0, t), phi(body, w, ball.1, t));
        r1 = r1.max(a.min(b));
        r2 = r2.min(a.max(b));
    }
    // |∂_t φ| ≤ 1, so between grid nodes the sup and inf move by at most half a spacing.
    let half_step = 0.5 * (window[window.len() - 1] - window[0]) / (window.len() - 1) as f64;
    (r1 + half_step, r2 - half_step)
}

fn build(
    body: &ConvexBody,
    x: &BoundaryPoint,
    x_b: &BoundaryPoint,
    p: &PhiParams,
    perturbed: bool,
) -> Result<PhiGeometry> {
    let summary = body.summary();
    let (l, d, c, cap) = (
        summary.perimeter,
        summary.diameter,
        summary.curvature_min,
        summary.curvature_max,
    );
    let PhiParams {
        beta,
        delta_p,
        eps,
        rho_min,
    } = *p;
    if !(beta > 0.0 && delta_p > 0.0 && rho_min > 0.0) {
        return Err(Error::InvalidParams(
            "β, δ_p and ρ_min must be positive".into(),
        ));
    }
    if l / 3.0 - (2.0 * delta_p).max(beta + delta_p) <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "need |∂K|/3 > max(2δ_p, β + δ_p), got β = {beta}, δ_p = {delta_p}"
        )));
    }
    if !(eps > 0.0 && eps < beta.min(1.0 / cap)) {
        return Err(Error::InvalidParams(format!(
            "ε = {eps} must lie in (0, min(β, 1/C) = {})",
            beta.min(1.0 / cap)
        )));
    }
    let m = 2.0 * (1.0 / (1.0 / cap - eps) + 1.0 / (beta - eps) + cap);
    let h = delta_p / d * (0.5 * beta * c).powi(2) - eps * m;
    if !(h > 0.0) {
        return Err(Error::InvalidParams(format!(
            "slope bound h = {h} is not positive; shrink ε"
        )));
    }
    let a = (c * rho_min / (2.0 * d)).powi(2) * (1.0 / cap - eps) * (beta - eps);

    let y_bar = far_bisector_point(body, x, x_b)?;
    let s_y = y_bar.s;
    let t_zx = stationary_point(body, x.position, s_y)?;
    let t_zx_b = stationary_point(body, x_b.position, s_y)?;

    let width = 0.5 * h * eps;
    let (gap_lo, gap_hi) = largest_gap(l, &[(s_y, beta), (t_zx, delta_p), (t_zx_b, delta_p)])
        .filter(|(lo, hi)| hi - lo >= width)
        .ok_or_else(|| {
            Error::NoAdmissibleWindow(format!(
                "no free arc of length {width} away from ȳ and the stationary points"
            ))
        })?;
    let centre = 0.5 * (gap_lo + gap_hi);
    let lo = wrap(centre - 0.5 * width, l);
    let i_star = (lo, lo + width);

    let ball = (s_y - eps, s_y + eps);
    let window: Vec<f64> = (0..WINDOW_GRID)
        .map(|k| i_star.0 + width * k as f64 / (WINDOW_GRID - 1) as f64)
        .collect();
    let (r1, r2) = ranges(body, x.position, ball, &window);
    let (r1_b, r2_b) = ranges(body, x_b.position, ball, &window);
    let (big_r1, big_r2) = (r1.max(r1_b), r2.min(r2_b));

    let mut min_slope = f64::INFINITY;
    for k in 0..BALL_GRID {
        let s = ball.0 + 2.0 * eps * k as f64 / (BALL_GRID - 1) as f64;
        for &t in &window {
            for w in [x.position, x_b.position] {
                min_slope = min_slope.min(phi_ds(body, w, s, t).abs());
            }
        }
    }
    Ok(PhiGeometry {
        y_bar,
        t_zx,
        t_zx_b,
        i_star,
        r1,
        r2,
        r1_b,
        r2_b,
        big_r1,
        big_r2,
        h,
        m,
        a,
        eta: 0.5 * a,
        min_slope,
        perturbed,
    })
}

/// Builds the geometry for the pair `(x, x_b)`. An equidistant bisector is a
/// measure-zero configuration; `x_b` is then moved by `10⁻⁶|∂K|` and the
/// construction retried once.
pub fn phi_geometry(
    body: &ConvexBody,
    x: &BoundaryPoint,
    x_b: &BoundaryPoint,
    params: &PhiParams,
) -> Result<PhiGeometry> {
    match build(body, x, x_b, params, false) {
        Err(Error::GeometryDegenerate(_)) => {
            let nudged = body.point_at(x_b.s + 1e-6 * body.perimeter());
            build(body, x, &nudged, params, true)
        }
        other => other,
    }
}

/// Checks the two slope and interval conclusions with tolerance `tol`.
pub fn lemma_holds(geo: &PhiGeometry, eps: f64, tol: f64) -> bool {
    geo.min_slope >= geo.h - tol && geo.big_r2 - geo.big_r1 >= geo.h * eps - tol
}
