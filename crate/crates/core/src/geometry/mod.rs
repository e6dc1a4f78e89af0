//! Planar convex bodies with bounded curvature and the geometric queries the
//! billiard needs: arc-length parametrization, normals, ray exits, chord angles.

mod ellipse;
mod table;

use crate::error::{Error, Result};
use crate::numeric::{golden_max, wrap, TAU};
use crate::vec2::Vec2;
use ellipse::Ellipse;
use serde::{Deserialize, Serialize};
use table::TableCurve;

/// A boundary point with its unit inward normal and unit tangent
/// (counter-clockwise orientation, so `normal = tangent.perp()`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub s: f64,
    pub position: Vec2,
    pub normal: Vec2,
    pub tangent: Vec2,
}

/// Perimeter, diameter and curvature bounds `c ≤ κ ≤ C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySummary {
    pub perimeter: f64,
    pub diameter: f64,
    pub curvature_min: f64,
    pub curvature_max: f64,
}

#[derive(Clone, Debug)]
enum Shape {
    Disc { r: f64 },
    Ellipse(Ellipse),
    Table(TableCurve),
}

#[derive(Clone, Debug)]
pub struct ConvexBody {
    shape: Shape,
    summary: BodySummary,
}

/// Grid size for the diameter and curvature searches.
const SUMMARY_GRID: usize = 4096;

impl ConvexBody {
    pub fn disc(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidBody(format!(
                "disc radius must be positive, got {r}"
            )));
        }
        let summary = BodySummary {
            perimeter: TAU * r,
            diameter: 2.0 * r,
            curvature_min: 1.0 / r,
            curvature_max: 1.0 / r,
        };
        Ok(Self {
            shape: Shape::Disc { r },
            summary,
        })
    }

    /// Ellipse with semi-axes `a ≥ b > 0`, major axis along x.
    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > 0.0 && a >= b) {
            return Err(Error::InvalidBody(format!(
                "ellipse needs a ≥ b > 0, got a = {a}, b = {b}"
            )));
        }
        Self::with_summary(Shape::Ellipse(Ellipse::new(a, b)))
    }

    /// Closed curve from a tabulated curvature profile; see the crate docs
    /// for the table convention.
    pub fn curvature_table(s: &[f64], kappa: &[f64]) -> Result<Self> {
        Self::with_summary(Shape::Table(TableCurve::new(s, kappa)?))
    }

    fn with_summary(shape: Shape) -> Result<Self> {
        let placeholder = BodySummary {
            perimeter: 0.0,
            diameter: 0.0,
            curvature_min: 0.0,
            curvature_max: 0.0,
        };
        let mut body = Self {
            shape,
            summary: placeholder,
        };
        body.summary.perimeter = body.raw_perimeter();
        body.summary = body.summarize();
        Ok(body)
    }

    pub fn summary(&self) -> BodySummary {
        self.summary
    }

    pub fn perimeter(&self) -> f64 {
        self.summary.perimeter
    }

    pub fn diameter(&self) -> f64 {
        self.summary.diameter
    }

    /// Geometric tolerance, `1e-9·D`.
    pub fn tol_geom(&self) -> f64 {
        1e-9 * self.summary.diameter.max(f64::MIN_POSITIVE)
    }

    /// Root-finding tolerance, `1e-10·D`.
    pub fn tol_root(&self) -> f64 {
        1e-10 * self.summary.diameter.max(f64::MIN_POSITIVE)
    }

    pub fn disc_radius(&self) -> Option<f64> {
        match self.shape {
            Shape::Disc { r } => Some(r),
            _ => None,
        }
    }

    fn raw_perimeter(&self) -> f64 {
        match &self.shape {
            Shape::Disc { r } => TAU * r,
            Shape::Ellipse(e) => e.perimeter(),
            Shape::Table(t) => t.perimeter(),
        }
    }

    /// Recomputes perimeter, diameter and curvature bounds numerically.
    /// Discs use the closed forms.
    pub fn summarize(&self) -> BodySummary {
        let perimeter = self.raw_perimeter();
        if let Shape::Disc { r } = self.shape {
            return BodySummary {
                perimeter,
                diameter: 2.0 * r,
                curvature_min: 1.0 / r,
                curvature_max: 1.0 / r,
            };
        }
        let h = perimeter / SUMMARY_GRID as f64;
        let pts: Vec<Vec2> = (0..SUMMARY_GRID)
            .map(|i| self.point_at(i as f64 * h).position)
            .collect();
        let (mut bi, mut bj, mut best) = (0, 0, 0.0);
        for i in 0..SUMMARY_GRID {
            for j in (i + 1)..SUMMARY_GRID {
                let d = (pts[i] - pts[j]).norm_sq();
                if d > best {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        let (mut s, mut t) = (bi as f64 * h, bj as f64 * h);
        let mut diameter = best.sqrt();
        for _ in 0..8 {
            let ps = self.point_at(t).position;
            s = golden_max(
                |u| (self.point_at(u).position - ps).norm(),
                s - h,
                s + h,
                1e-13 * perimeter,
            )
            .0;
            let pt = self.point_at(s).position;
            let (tt, d) = golden_max(
                |u| (self.point_at(u).position - pt).norm(),
                t - h,
                t + h,
                1e-13 * perimeter,
            );
            t = tt;
            diameter = diameter.max(d);
        }
        let (curvature_min, curvature_max) = match &self.shape {
            Shape::Table(c) => c.curvature_bounds(),
            _ => (0..SUMMARY_GRID)
                .map(|i| self.curvature_at(i as f64 * h))
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), k| {
                    (lo.min(k), hi.max(k))
                }),
        };
        BodySummary {
            perimeter,
            diameter,
            curvature_min,
            curvature_max,
        }
    }

    /// Boundary point at arc length `s` (taken modulo the perimeter).
    pub fn point_at(&self, s: f64) -> BoundaryPoint {
        match &self.shape {
            Shape::Disc { r } => {
                let s = wrap(s, TAU * r);
                disc_point(*r, s / r, s)
            }
            Shape::Ellipse(e) => e.point_at(s),
            Shape::Table(t) => t.point_at(s),
        }
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        match &self.shape {
            Shape::Disc { r } => 1.0 / r,
            Shape::Ellipse(e) => e.curvature_at(s),
            Shape::Table(t) => t.curvature_at(s),
        }
    }

    /// Signed distance to the boundary, negative inside. Exact for discs and
    /// tables, first order in the distance for ellipses.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        match &self.shape {
            Shape::Disc { r } => p.norm() - r,
            Shape::Ellipse(e) => e.signed_distance(p),
            Shape::Table(t) => t.signed_distance(p),
        }
    }

    /// Exit of the ray `origin + τ·direction` from an interior point.
    pub fn exit_ray(&self, origin: Vec2, direction: Vec2) -> Result<(f64, BoundaryPoint)> {
        let dist = self.signed_distance(origin);
        if dist > self.tol_geom() {
            return Err(Error::OutsideBody { distance: dist });
        }
        self.exit(origin, direction, None)
    }

    /// Exit of the ray leaving boundary point `x` along `direction`.
    pub fn exit_from(&self, x: &BoundaryPoint, direction: Vec2) -> Result<(f64, BoundaryPoint)> {
        let cos = direction.dot(x.normal);
        if cos <= self.tol_geom() {
            return Err(Error::TangentRay { cos });
        }
        self.exit(x.position, direction, Some(x))
    }

    fn exit(&self, o: Vec2, d: Vec2, from: Option<&BoundaryPoint>) -> Result<(f64, BoundaryPoint)> {
        let degenerate = || Error::TangentRay {
            cos: from.map_or(0.0, |x| d.dot(x.normal)),
        };
        match &self.shape {
            Shape::Disc { r } => {
                let tau = circle_chord(*r, o, d, from.is_some()).ok_or_else(degenerate)?;
                let p = o + d * tau;
                let phi = wrap(p.y.atan2(p.x), TAU);
                Ok((tau, disc_point(*r, phi, wrap(r * phi, TAU * r))))
            }
            Shape::Ellipse(e) => {
                let tau = e.chord(o, d, from.is_some()).ok_or_else(degenerate)?;
                Ok((tau, e.point_from_position(o + d * tau)))
            }
            Shape::Table(t) => t.exit(o, d, from, self.tol_root()).ok_or_else(degenerate),
        }
    }

    /// Chord length leaving `x` along `direction`, without locating the hit's arc length.
    pub fn chord_length_from(&self, x: &BoundaryPoint, direction: Vec2) -> Result<f64> {
        let cos = direction.dot(x.normal);
        if cos <= self.tol_geom() {
            return Err(Error::TangentRay { cos });
        }
        let tau = match &self.shape {
            Shape::Disc { r } => circle_chord(*r, x.position, direction, true),
            Shape::Ellipse(e) => e.chord(x.position, direction, true),
            Shape::Table(_) => return self.exit_from(x, direction).map(|(t, _)| t),
        };
        tau.ok_or(Error::TangentRay { cos })
    }

    /// Signed angle at `y` between the inward normal `n_y` and the unit chord
    /// direction from `y` towards `x`. Lies in `[−π/2, π/2]` by convexity.
    pub fn chord_angle(&self, x: &BoundaryPoint, y: &BoundaryPoint) -> Result<f64> {
        let chord = x.position - y.position;
        let distance = chord.norm();
        if distance < self.tol_geom() {
            return Err(Error::CoincidentPoints { distance });
        }
        Ok(y.normal.angle_to(chord / distance))
    }

    /// Signed arc-length offset from `from` to `to`, in `[−L/2, L/2)`.
    pub fn arc_offset(&self, from: f64, to: f64) -> f64 {
        let l = self.perimeter();
        wrap(to - from + 0.5 * l, l) - 0.5 * l
    }
}

fn disc_point(r: f64, phi: f64, s: f64) -> BoundaryPoint {
    let u = Vec2::from_angle(phi);
    BoundaryPoint {
        s,
        position: u * r,
        normal: -u,
        tangent: u.perp(),
    }
}

fn circle_chord(r: f64, o: Vec2, d: Vec2, on_boundary: bool) -> Option<f64> {
    let qa = d.norm_sq();
    let qb = 2.0 * o.dot(d);
    if on_boundary {
        let tau = -qb / qa;
        return (tau > 0.0).then_some(tau);
    }
    let qc = o.norm_sq() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (qb + disc.sqrt().copysign(qb));
    let r1 = q / qa;
    let r2 = if q != 0.0 { qc / q } else { r1 };
    let tau = r1.max(r2);
    (tau > 0.0).then_some(tau)
}
