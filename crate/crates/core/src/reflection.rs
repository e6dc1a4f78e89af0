//! Reflection laws on the inward half-circle, written as densities of the
//! angle θ ∈ [−π/2, π/2] between the outgoing velocity and the inward normal.

use crate::error::{Error, Result};
use crate::geometry::BoundaryPoint;
use crate::vec2::Vec2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// A window `[−θ*/2, θ*/2]` on which the density stays above `f_min`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawCertificate {
    pub f_min: f64,
    pub theta_star: f64,
}

impl LawCertificate {
    /// Mass of the flat part `f_min·θ*`.
    pub fn core_mass(&self) -> f64 {
        self.f_min * self.theta_star
    }
}

#[derive(Clone, Debug)]
struct TableDensity {
    grid: Vec<f64>,
    values: Vec<f64>,
    cdf: Vec<f64>,
}

#[derive(Clone, Debug)]
enum LawKind {
    Cosine,
    UniformHalf,
    TruncatedUniform { theta_star: f64 },
    Table(TableDensity),
}

#[derive(Clone, Debug)]
pub struct ReflectionLaw {
    kind: LawKind,
    certificate: LawCertificate,
}

/// Candidate count for the certificate search.
pub const CERTIFY_GRID: usize = 10_000;

impl ReflectionLaw {
    /// Density `cos θ / 2`.
    pub fn cosine() -> Self {
        Self::certified(LawKind::Cosine)
    }

    /// Density `1/π` on the whole half-circle.
    pub fn uniform_half() -> Self {
        Self::certified(LawKind::UniformHalf)
    }

    /// Density `1/θ*` on `[−θ*/2, θ*/2]`.
    pub fn truncated_uniform(theta_star: f64) -> Result<Self> {
        if !(theta_star > 0.0 && theta_star <= PI) {
            return Err(Error::InvalidLaw(format!(
                "truncated-uniform θ* must lie in (0, π], got {theta_star}"
            )));
        }
        Ok(Self::certified(LawKind::TruncatedUniform { theta_star }))
    }

    /// Piecewise-linear density through `(grid[i], values[i])`, zero outside
    /// the grid, renormalized to unit mass.
    pub fn table(grid: &[f64], values: &[f64]) -> Result<Self> {
        if grid.len() != values.len() || grid.len() < 2 {
            return Err(Error::InvalidLaw(
                "table needs at least two matching (theta, f) rows".into(),
            ));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidLaw(
                "angle grid must be strictly increasing".into(),
            ));
        }
        if grid[0] < -FRAC_PI_2 - 1e-12 || grid[grid.len() - 1] > FRAC_PI_2 + 1e-12 {
            return Err(Error::InvalidLaw(
                "angle grid must lie within [−π/2, π/2]".into(),
            ));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidLaw(
                "density values must be finite and non-negative".into(),
            ));
        }
        let mass: f64 = grid
            .windows(2)
            .zip(values.windows(2))
            .map(|(g, v)| 0.5 * (v[0] + v[1]) * (g[1] - g[0]))
            .sum();
        if !(mass > 0.0) {
            return Err(Error::InvalidLaw("density has zero mass".into()));
        }
        let values: Vec<f64> = values.iter().map(|v| v / mass).collect();
        let mut cdf = vec![0.0];
        for i in 0..grid.len() - 1 {
            let next = cdf[i] + 0.5 * (values[i] + values[i + 1]) * (grid[i + 1] - grid[i]);
            cdf.push(next);
        }
        let grid = grid
            .iter()
            .map(|g| g.clamp(-FRAC_PI_2, FRAC_PI_2))
            .collect();
        let kind = LawKind::Table(TableDensity { grid, values, cdf });
        let certificate = certify_kind(&kind, &mut product_objective)?;
        Ok(Self { kind, certificate })
    }

    fn certified(kind: LawKind) -> Self {
        let certificate = certify_kind(&kind, &mut product_objective)
            .expect("built-in laws have a positive core");
        Self { kind, certificate }
    }

    /// Replaces the certificate after checking `f ≥ f_min` on `[−θ*/2, θ*/2]`.
    pub fn with_certificate(mut self, certificate: LawCertificate) -> Result<Self> {
        let LawCertificate { f_min, theta_star } = certificate;
        if !(theta_star > 0.0 && theta_star <= PI && f_min > 0.0) {
            return Err(Error::InvalidLaw(format!("certificate needs θ* ∈ (0, π] and f_min > 0, got θ* = {theta_star}, f_min = {f_min}")));
        }
        let floor = self.min_density_on(0.5 * theta_star);
        if floor < f_min * (1.0 - 1e-12) {
            return Err(Error::InvalidLaw(format!(
                "density drops to {floor} < f_min = {f_min} on [−θ*/2, θ*/2]"
            )));
        }
        self.certificate = certificate;
        Ok(self)
    }

    pub fn certificate(&self) -> LawCertificate {
        self.certificate
    }

    pub fn label(&self) -> String {
        match &self.kind {
            LawKind::Cosine => "cosine".into(),
            LawKind::UniformHalf => "uniform_half".into(),
            LawKind::TruncatedUniform { theta_star } => format!("truncated_uniform({theta_star})"),
            LawKind::Table(t) => format!("table({} nodes)", t.grid.len()),
        }
    }

    pub fn density(&self, theta: f64) -> f64 {
        match &self.kind {
            LawKind::Cosine => {
                if theta.abs() <= FRAC_PI_2 {
                    0.5 * theta.cos()
                } else {
                    0.0
                }
            }
            LawKind::UniformHalf => {
                if theta.abs() <= FRAC_PI_2 {
                    1.0 / PI
                } else {
                    0.0
                }
            }
            LawKind::TruncatedUniform { theta_star } => {
                if theta.abs() <= 0.5 * theta_star {
                    1.0 / theta_star
                } else {
                    0.0
                }
            }
            LawKind::Table(t) => t.density(theta),
        }
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        match &self.kind {
            LawKind::Cosine => 0.5 * (theta.clamp(-FRAC_PI_2, FRAC_PI_2).sin() + 1.0),
            LawKind::UniformHalf => (theta.clamp(-FRAC_PI_2, FRAC_PI_2) + FRAC_PI_2) / PI,
            LawKind::TruncatedUniform { theta_star } => {
                let h = 0.5 * theta_star;
                (theta.clamp(-h, h) + h) / theta_star
            }
            LawKind::Table(t) => t.cdf(theta),
        }
    }

    /// Inverse CDF.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.kind {
            LawKind::Cosine => (2.0 * u - 1.0).asin(),
            LawKind::UniformHalf => PI * (u - 0.5),
            LawKind::TruncatedUniform { theta_star } => theta_star * (u - 0.5),
            LawKind::Table(t) => t.quantile(u),
        }
    }

    /// One angle by inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Infimum of the density over `[−half_width, half_width]`.
    pub fn min_density_on(&self, half_width: f64) -> f64 {
        let h = half_width.abs();
        match &self.kind {
            LawKind::Cosine => {
                if h <= FRAC_PI_2 {
                    0.5 * h.cos()
                } else {
                    0.0
                }
            }
            LawKind::UniformHalf => {
                if h <= FRAC_PI_2 * (1.0 + 1e-15) {
                    1.0 / PI
                } else {
                    0.0
                }
            }
            LawKind::TruncatedUniform { theta_star } => {
                if h <= 0.5 * theta_star * (1.0 + 1e-15) {
                    1.0 / theta_star
                } else {
                    0.0
                }
            }
            LawKind::Table(t) => {
                let mut m = t.density(-h).min(t.density(h));
                for (g, v) in t.grid.iter().zip(&t.values) {
                    if g.abs() < h {
                        m = m.min(*v);
                    }
                }
                m
            }
        }
    }

    /// Largest density value.
    pub fn max_density(&self) -> f64 {
        match &self.kind {
            LawKind::Cosine => 0.5,
            LawKind::UniformHalf => 1.0 / PI,
            LawKind::TruncatedUniform { theta_star } => 1.0 / theta_star,
            LawKind::Table(t) => t.values.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Points where the density is not smooth, inside (−π/2, π/2).
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            LawKind::Cosine | LawKind::UniformHalf => vec![],
            LawKind::TruncatedUniform { theta_star } => {
                if *theta_star < PI {
                    vec![-0.5 * theta_star, 0.5 * theta_star]
                } else {
                    vec![]
                }
            }
            LawKind::Table(t) => t
                .grid
                .iter()
                .cloned()
                .filter(|g| g.abs() < FRAC_PI_2)
                .collect(),
        }
    }

    /// Candidate full widths θ* that the certificate search must include on
    /// top of the uniform grid (support edges of flat and tabulated laws).
    fn natural_widths(&self) -> Vec<f64> {
        natural_widths(&self.kind)
    }
}

fn natural_widths(kind: &LawKind) -> Vec<f64> {
    match kind {
        LawKind::TruncatedUniform { theta_star } => vec![*theta_star],
        LawKind::Table(t) => t
            .grid
            .iter()
            .map(|g| (2.0 * g.abs()).min(PI))
            .filter(|w| *w > 0.0)
            .collect(),
        _ => vec![PI],
    }
}

impl TableDensity {
    fn cell(&self, theta: f64) -> Option<usize> {
        let n = self.grid.len();
        if theta < self.grid[0] || theta > self.grid[n - 1] {
            return None;
        }
        Some(
            self.grid
                .partition_point(|g| *g <= theta)
                .saturating_sub(1)
                .min(n - 2),
        )
    }

    fn density(&self, theta: f64) -> f64 {
        match self.cell(theta) {
            None => 0.0,
            Some(k) => {
                let x = (theta - self.grid[k]) / (self.grid[k + 1] - self.grid[k]);
                self.values[k] + x * (self.values[k + 1] - self.values[k])
            }
        }
    }

    fn cdf(&self, theta: f64) -> f64 {
        let n = self.grid.len();
        if theta <= self.grid[0] {
            return 0.0;
        }
        if theta >= self.grid[n - 1] {
            return 1.0;
        }
        let k = self.cell(theta).unwrap();
        let w = self.grid[k + 1] - self.grid[k];
        let x = theta - self.grid[k];
        let (f0, f1) = (self.values[k], self.values[k + 1]);
        self.cdf[k] + f0 * x + (f1 - f0) * x * x / (2.0 * w)
    }

    fn quantile(&self, u: f64) -> f64 {
        let n = self.grid.len();
        let k = self
            .cdf
            .partition_point(|c| *c <= u)
            .saturating_sub(1)
            .min(n - 2);
        let w = self.grid[k + 1] - self.grid[k];
        let (f0, f1) = (self.values[k], self.values[k + 1]);
        let r = (u - self.cdf[k]).max(0.0);
        // Root of (f1−f0)/(2w)·x² + f0·x = r, in the cancellation-free form.
        let disc = f0 * f0 + 2.0 * (f1 - f0) * r / w;
        let x = if disc <= 0.0 {
            w
        } else {
            2.0 * r / (f0 + disc.sqrt())
        };
        let x = if x.is_finite() { x.clamp(0.0, w) } else { w };
        self.grid[k] + x
    }
}

/// The default certificate objective: the flat mass `f_min·θ*`.
pub fn product_objective(f_min: f64, theta_star: f64) -> f64 {
    f_min * theta_star
}

/// Searches candidate widths θ* and returns the certificate maximizing
/// `objective(f_min(θ*), θ*)`, where `f_min(θ*)` is the density infimum on
/// `[−θ*/2, θ*/2]`. Ties keep the smaller θ*.
pub fn certify_with<F: FnMut(f64, f64) -> f64>(
    law: &ReflectionLaw,
    mut objective: F,
) -> Result<LawCertificate> {
    certify_kind(&law.kind, &mut objective)
}

/// [`certify_with`] under the product objective.
pub fn certify(law: &ReflectionLaw) -> Result<LawCertificate> {
    certify_with(law, product_objective)
}

fn certify_kind(
    kind: &LawKind,
    objective: &mut dyn FnMut(f64, f64) -> f64,
) -> Result<LawCertificate> {
    let probe = ReflectionLaw {
        kind: kind.clone(),
        certificate: LawCertificate {
            f_min: 0.0,
            theta_star: PI,
        },
    };
    let mut widths: Vec<f64> = (1..=CERTIFY_GRID)
        .map(|k| PI * k as f64 / CERTIFY_GRID as f64)
        .collect();
    widths.extend(probe.natural_widths());
    widths.sort_by(f64::total_cmp);
    widths.dedup();
    let mut best: Option<(f64, LawCertificate)> = None;
    for theta_star in widths {
        let f_min = probe.min_density_on(0.5 * theta_star);
        if !(f_min > 0.0) {
            continue;
        }
        let score = objective(f_min, theta_star);
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, LawCertificate { f_min, theta_star }));
        }
    }
    best.map(|(_, c)| c).ok_or(Error::NoPositiveCore)
}

/// Outgoing unit velocity: the inward normal rotated counter-clockwise by θ.
pub fn reflect(x: &BoundaryPoint, theta: f64) -> Vec2 {
    x.normal.rotate(theta)
}
