use super::BoundaryPoint;
use crate::numeric::{wrap, GaussLegendre, TAU};
use crate::vec2::Vec2;

const CELLS: usize = 256;

/// Ellipse `x²/a² + y²/b² = 1`, arc length measured counter-clockwise from `(a, 0)`.
#[derive(Clone, Debug)]
pub(crate) struct Ellipse {
    pub a: f64,
    pub b: f64,
    cum: Vec<f64>,
    gl: GaussLegendre,
}

impl Ellipse {
    pub fn new(a: f64, b: f64) -> Self {
        let gl = GaussLegendre::new(16);
        let h = TAU / CELLS as f64;
        let mut cum = Vec::with_capacity(CELLS + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for k in 0..CELLS {
            acc += gl.integrate(|t| speed(a, b, t), k as f64 * h, (k + 1) as f64 * h);
            cum.push(acc);
        }
        Self { a, b, cum, gl }
    }

    pub fn perimeter(&self) -> f64 {
        self.cum[CELLS]
    }

    fn speed(&self, t: f64) -> f64 {
        speed(self.a, self.b, t)
    }

    /// Arc length from parameter 0 to `t ∈ [0, 2π]`.
    pub fn arc_of_param(&self, t: f64) -> f64 {
        let h = TAU / CELLS as f64;
        let k = ((t / h) as usize).min(CELLS - 1);
        let t0 = k as f64 * h;
        self.cum[k] + self.gl.integrate(|u| self.speed(u), t0, t)
    }

    /// Inverse of [`arc_of_param`] for `s ∈ [0, perimeter)`.
    pub fn param_of_arc(&self, s: f64) -> f64 {
        let h = TAU / CELLS as f64;
        let k = match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => return (i as f64 * h).min(TAU),
            Err(i) => i.saturating_sub(1).min(CELLS - 1),
        };
        let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
        let mut t = lo + (s - self.cum[k]) / (self.cum[k + 1] - self.cum[k]) * h;
        for _ in 0..12 {
            let err = self.arc_of_param(t) - s;
            let step = err / self.speed(t);
            t = (t - step).clamp(lo, hi);
            if step.abs() < 1e-16 * TAU {
                break;
            }
        }
        t
    }

    pub fn point_at_param(&self, t: f64, s: f64) -> BoundaryPoint {
        let (st, ct) = t.sin_cos();
        let v = self.speed(t);
        let tangent = Vec2::new(-self.a * st, self.b * ct) / v;
        BoundaryPoint {
            s,
            position: Vec2::new(self.a * ct, self.b * st),
            normal: tangent.perp(),
            tangent,
        }
    }

    pub fn point_at(&self, s: f64) -> BoundaryPoint {
        let s = wrap(s, self.perimeter());
        self.point_at_param(self.param_of_arc(s), s)
    }

    pub fn point_from_position(&self, p: Vec2) -> BoundaryPoint {
        let t = wrap((p.y / self.b).atan2(p.x / self.a), TAU);
        let s = wrap(self.arc_of_param(t), self.perimeter());
        self.point_at_param(t, s)
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        let t = self.param_of_arc(wrap(s, self.perimeter()));
        self.a * self.b / self.speed(t).powi(3)
    }

    /// Largest root of `|o + τ d|_E = 1`; `on_boundary` pins the constant term to 0.
    pub fn chord(&self, o: Vec2, d: Vec2, on_boundary: bool) -> Option<f64> {
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        let qa = d.x * d.x / a2 + d.y * d.y / b2;
        let qb = 2.0 * (o.x * d.x / a2 + o.y * d.y / b2);
        if on_boundary {
            let tau = -qb / qa;
            return (tau > 0.0).then_some(tau);
        }
        let qc = o.x * o.x / a2 + o.y * o.y / b2 - 1.0;
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

    /// First-order signed distance `F/|∇F|`, negative inside.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        let f = p.x * p.x / a2 + p.y * p.y / b2 - 1.0;
        let g = 2.0 * (p.x * p.x / (a2 * a2) + p.y * p.y / (b2 * b2)).sqrt();
        if g == 0.0 {
            -self.b
        } else {
            f / g
        }
    }
}

fn speed(a: f64, b: f64, t: f64) -> f64 {
    let (s, c) = t.sin_cos();
    (a * a * s * s + b * b * c * c).sqrt()
}
