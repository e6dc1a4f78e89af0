use super::BoundaryPoint;
use crate::error::{Error, Result};
use crate::numeric::{brent, golden_max, wrap, GaussLegendre, TAU};
use crate::vec2::Vec2;
use std::f64::consts::FRAC_PI_2;

/// Uniform sampling density of the position cache, per perimeter.
const CACHE_POINTS: usize = 4096;
/// Largest relative closure defect that is silently corrected.
const CLOSURE_TOL: f64 = 1e-6;

/// Closed curve given by a piecewise-linear curvature profile κ(s).
///
/// The tangent angle is the exact integral of κ (piecewise quadratic); the
/// position is the integral of the unit tangent, evaluated with Gauss-Legendre
/// on pieces where the tangent angle is a single quadratic.
#[derive(Clone, Debug)]
pub(crate) struct TableCurve {
    s: Vec<f64>,
    kappa: Vec<f64>,
    angle: Vec<f64>,
    length: f64,
    grid: Vec<f64>,
    grid_raw: Vec<Vec2>,
    gap: Vec2,
    center: Vec2,
    gl: GaussLegendre,
}

impl TableCurve {
    /// `s` must start at 0 and increase strictly; its last entry is the
    /// perimeter, where κ must repeat its first value.
    pub fn new(s: &[f64], kappa: &[f64]) -> Result<Self> {
        if s.len() != kappa.len() || s.len() < 3 {
            return Err(Error::InvalidBody(
                "curvature table needs at least 3 matching (s, kappa) rows".into(),
            ));
        }
        if s[0] != 0.0 {
            return Err(Error::InvalidBody(
                "curvature table must start at s = 0".into(),
            ));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) || s.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBody(
                "arc-length grid must be finite and strictly increasing".into(),
            ));
        }
        if kappa.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::InvalidBody(
                "curvature must be finite and strictly positive".into(),
            ));
        }
        let n = s.len() - 1;
        let rel = (kappa[n] - kappa[0]).abs() / kappa[0];
        if rel > CLOSURE_TOL {
            return Err(Error::NonClosedCurve(format!(
                "curvature is not periodic: κ(0) = {}, κ(L) = {}",
                kappa[0], kappa[n]
            )));
        }
        let length = s[n];
        let turning: f64 = (0..n)
            .map(|k| 0.5 * (kappa[k] + kappa[k + 1]) * (s[k + 1] - s[k]))
            .sum();
        let defect = turning / TAU - 1.0;
        if defect.abs() > CLOSURE_TOL {
            return Err(Error::NonClosedCurve(format!(
                "total turning {turning} differs from 2π by {:.3e} relative",
                defect
            )));
        }
        let scale = TAU / turning;
        let kappa: Vec<f64> = kappa.iter().map(|k| k * scale).collect();
        let mut angle = Vec::with_capacity(n + 1);
        angle.push(FRAC_PI_2);
        for k in 0..n {
            let prev = angle[k];
            angle.push(prev + 0.5 * (kappa[k] + kappa[k + 1]) * (s[k + 1] - s[k]));
        }

        let mut grid: Vec<f64> = (0..CACHE_POINTS)
            .map(|j| length * j as f64 / CACHE_POINTS as f64)
            .collect();
        grid.extend_from_slice(&s[..n]);
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * length);
        grid.push(length);

        let mut curve = Self {
            s: s.to_vec(),
            kappa,
            angle,
            length,
            grid,
            grid_raw: Vec::new(),
            gap: Vec2::default(),
            center: Vec2::default(),
            gl: GaussLegendre::new(16),
        };
        let mut raw = Vec::with_capacity(curve.grid.len());
        let mut p = Vec2::default();
        raw.push(p);
        for w in curve.grid.windows(2) {
            p += curve.integrate_tangent(w[0], w[1]);
            raw.push(p);
        }
        let gap = *raw.last().unwrap();
        if gap.norm() > CLOSURE_TOL * length {
            return Err(Error::NonClosedCurve(format!(
                "endpoint mismatch {:.3e} exceeds tolerance",
                gap.norm()
            )));
        }
        curve.grid_raw = raw;
        curve.gap = gap;
        // Centre the curve on the arc-length mean of the corrected positions.
        let mut c = Vec2::default();
        let m = curve.grid.len() - 1;
        for j in 0..m {
            let ds = curve.grid[j + 1] - curve.grid[j];
            let mid = 0.5 * (curve.corrected_raw(j) + curve.corrected_raw(j + 1));
            c += mid * ds;
        }
        curve.center = c / length;
        Ok(curve)
    }

    pub fn perimeter(&self) -> f64 {
        self.length
    }

    fn cell(&self, s: f64) -> usize {
        match self.s.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => i.min(self.s.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.s.len() - 2),
        }
    }

    /// Tangent angle at `s ∈ [0, L]`.
    pub fn tangent_angle(&self, s: f64) -> f64 {
        let k = self.cell(s);
        let x = s - self.s[k];
        let w = self.s[k + 1] - self.s[k];
        self.angle[k] + self.kappa[k] * x + (self.kappa[k + 1] - self.kappa[k]) * x * x / (2.0 * w)
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        let s = wrap(s, self.length);
        let k = self.cell(s);
        let x = (s - self.s[k]) / (self.s[k + 1] - self.s[k]);
        self.kappa[k] + x * (self.kappa[k + 1] - self.kappa[k])
    }

    /// Extreme node curvatures (exact extrema of the piecewise-linear profile).
    pub fn curvature_bounds(&self) -> (f64, f64) {
        let lo = self.kappa.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.kappa.iter().cloned().fold(0.0, f64::max);
        (lo, hi)
    }

    fn integrate_tangent(&self, a: f64, b: f64) -> Vec2 {
        let x = self.gl.integrate(|u| self.tangent_angle(u).cos(), a, b);
        let y = self.gl.integrate(|u| self.tangent_angle(u).sin(), a, b);
        Vec2::new(x, y)
    }

    fn corrected_raw(&self, j: usize) -> Vec2 {
        self.grid_raw[j] - self.gap * (self.grid[j] / self.length)
    }

    fn grid_position(&self, j: usize) -> Vec2 {
        self.corrected_raw(j) - self.center
    }

    pub fn position(&self, s: f64) -> Vec2 {
        let j = match self.grid.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => return self.grid_position(i.min(self.grid.len() - 1)),
            Err(i) => i.saturating_sub(1),
        };
        let raw = self.grid_raw[j] + self.integrate_tangent(self.grid[j], s);
        raw - self.gap * (s / self.length) - self.center
    }

    pub fn point_at(&self, s: f64) -> BoundaryPoint {
        let s = wrap(s, self.length);
        let tangent = Vec2::from_angle(self.tangent_angle(s));
        BoundaryPoint {
            s,
            position: self.position(s),
            normal: tangent.perp(),
            tangent,
        }
    }

    /// Ray exit by root finding on `σ ↦ (g(σ) − o) × d`.
    pub fn exit(
        &self,
        o: Vec2,
        d: Vec2,
        from: Option<&BoundaryPoint>,
        tol: f64,
    ) -> Option<(f64, BoundaryPoint)> {
        let cross_at = |s: f64| d.cross(self.position(wrap(s, self.length)) - o);
        let m = self.grid.len() - 1;
        let root = if let Some(x) = from {
            // Divide out the trivial root at the origin's own arc position.
            let s0 = x.s;
            let slope0 = d.cross(x.tangent);
            let scaled = |s: f64| {
                if s == s0 {
                    slope0
                } else {
                    cross_at(s) / (s - s0)
                }
            };
            let start = self.grid.partition_point(|v| *v <= s0);
            let mut prev = s0;
            let mut found = None;
            for i in 0..m {
                let j = (start + i) % m;
                let mut sj = self.grid[j];
                if sj <= s0 {
                    sj += self.length;
                }
                if scaled(sj).signum() != slope0.signum() {
                    found = Some((prev, sj));
                    break;
                }
                prev = sj;
            }
            let (lo, hi) = found.unwrap_or((prev, s0 + self.length));
            brent(scaled, lo, hi, tol)?
        } else {
            let mut best = None;
            let values: Vec<f64> = (0..m).map(|j| d.cross(self.grid_position(j) - o)).collect();
            for j in 0..m {
                let k = (j + 1) % m;
                if values[j] == 0.0 || values[j].signum() != values[k].signum() {
                    let mid = self.grid_position(j);
                    if d.dot(mid - o) > 0.0 {
                        let hi = if k == 0 { self.length } else { self.grid[k] };
                        best = Some((self.grid[j], hi));
                        break;
                    }
                }
            }
            let (lo, hi) = best?;
            brent(cross_at, lo, hi, tol)?
        };
        let hit = self.point_at(root);
        let tau = d.dot(hit.position - o);
        (tau > 0.0).then_some((tau, hit))
    }

    /// Distance to the nearest boundary point, negative inside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        let m = self.grid.len() - 1;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..m {
            let dist = (self.grid_position(j) - p).norm_sq();
            if dist < best_d {
                best_d = dist;
                best = j;
            }
        }
        let lo = if best == 0 {
            self.grid[m - 1] - self.length
        } else {
            self.grid[best - 1]
        };
        let hi = self.grid[best + 1];
        let (s, _) = golden_max(
            |s| -(self.position(wrap(s, self.length)) - p).norm_sq(),
            lo,
            hi,
            1e-13 * self.length,
        );
        let q = self.point_at(s);
        let dist = (p - q.position).norm();
        if (p - q.position).dot(q.normal) > 0.0 {
            -dist
        } else {
            dist
        }
    }
}
