//! Couplings built from density lower bounds: the gamma (splitting) coupling
//! primitive, the chain coupling, and the two-stage process couplings.

mod chain;
mod process;
mod splits;

pub use chain::couple_chains;
pub use process::{couple_process_convex, couple_process_disc};
pub use splits::{
    chord_preimages, ConvexChainSplit, ConvexJointSplit, ConvexTimeSplit, DiscChainSplit,
    DiscJointSplit, DiscTimeSplit, Hit, Step,
};

use crate::dynamics::ProcessStart;
use crate::dynamics::{chain_step, record, BounceRecord};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::{BoundaryPoint, ConvexBody};
use crate::numeric::wrap;
use crate::rates::CertificateKind;
use crate::rates::RateCertificate;
use crate::reflection::ReflectionLaw;
use crate::stream::{lane, stream};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Proposals allowed per residual draw before giving up.
pub const REJECTION_CAP: usize = 1_000_000;
/// Relative slack when checking a component against its certified level.
const PROFILE_SLACK: f64 = 1e-9;

/// A finite union of intervals on the line or on a circle of length `period`.
/// Periodic pieces are kept inside `[0, period)`, split at the wrap point.
#[derive(Clone, Debug, PartialEq)]
pub struct Window1 {
    pieces: Vec<(f64, f64)>,
    period: Option<f64>,
}

impl Window1 {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Self {
            pieces: if hi > lo { vec![(lo, hi)] } else { vec![] },
            period: None,
        }
    }

    /// The arc `[lo, lo + len]` on a circle; `len ≥ period` gives the full circle.
    pub fn arc(lo: f64, len: f64, period: f64) -> Self {
        if len >= period {
            return Self::full(period);
        }
        if len <= 0.0 {
            return Self {
                pieces: vec![],
                period: Some(period),
            };
        }
        let lo = wrap(lo, period);
        let hi = lo + len;
        let pieces = if hi <= period {
            vec![(lo, hi)]
        } else {
            vec![(0.0, hi - period), (lo, period)]
        };
        Self {
            pieces,
            period: Some(period),
        }
    }

    pub fn full(period: f64) -> Self {
        Self {
            pieces: vec![(0.0, period)],
            period: Some(period),
        }
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    fn normalize(&self, x: f64) -> f64 {
        self.period.map_or(x, |p| wrap(x, p))
    }

    pub fn measure(&self) -> f64 {
        self.pieces.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let x = self.normalize(x);
        self.pieces.iter().any(|&(a, b)| x >= a && x <= b)
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        if self.period != other.period {
            return Err(Error::InvalidParams(
                "cannot intersect windows with different periods".into(),
            ));
        }
        let mut pieces = vec![];
        for &(a, b) in &self.pieces {
            for &(c, d) in &other.pieces {
                let (lo, hi) = (a.max(c), b.min(d));
                if hi > lo {
                    pieces.push((lo, hi));
                }
            }
        }
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
        Ok(Self {
            pieces,
            period: self.period,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u = rng.random::<f64>() * self.measure();
        for &(a, b) in &self.pieces {
            if u <= b - a {
                return a + u;
            }
            u -= b - a;
        }
        self.pieces.last().map_or(f64::NAN, |p| p.1)
    }
}

/// A product of one or two axes.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub axes: Vec<Window1>,
}

impl Window {
    pub fn one(axis: Window1) -> Self {
        Self { axes: vec![axis] }
    }

    pub fn two(first: Window1, second: Window1) -> Self {
        Self {
            axes: vec![first, second],
        }
    }

    pub fn measure(&self) -> f64 {
        self.axes.iter().map(Window1::measure).product()
    }

    pub fn contains(&self, coord: &[f64; 2]) -> bool {
        self.axes.iter().zip(coord).all(|(a, &x)| a.contains(x))
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        if self.axes.len() != other.axes.len() {
            return Err(Error::InvalidParams(
                "windows of different dimension".into(),
            ));
        }
        Ok(Self {
            axes: self
                .axes
                .iter()
                .zip(&other.axes)
                .map(|(a, b)| a.intersect(b))
                .collect::<Result<_>>()?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let mut c = [0.0; 2];
        for (slot, axis) in c.iter_mut().zip(&self.axes) {
            *slot = axis.sample(rng);
        }
        c
    }
}

/// One draw from the full law of a coupling stage: the path and its coordinate.
#[derive(Clone, Debug)]
pub struct Draw<P> {
    pub path: P,
    pub coord: [f64; 2],
}

/// A law split as `component + rest`, where the component's image on the
/// coordinate has a computable density that is at least `level` on `window`.
pub trait Splitting {
    type Path;
    fn window(&self) -> &Window;
    fn level(&self) -> f64;
    /// Draw from the full law.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw<Self::Path>>;
    /// Component weight along the path (component density relative to the
    /// full law, in `[0, 1]`) and the component's coordinate density there.
    /// The density is only meaningful when the weight is positive.
    fn component(&self, draw: &Draw<Self::Path>) -> Result<(f64, f64)>;
    /// Draw from the component conditioned on its coordinate.
    fn draw_given<R: Rng + ?Sized>(&self, coord: [f64; 2], rng: &mut R) -> Result<Self::Path>;
}

#[derive(Clone, Debug)]
pub struct Coupled<P, Q> {
    pub success: bool,
    /// Probability of the common part, `level·|O|`.
    pub overlap_mass: f64,
    pub coord: Option<[f64; 2]>,
    pub first: P,
    pub second: Q,
}

fn residual<S: Splitting, R: Rng + ?Sized>(
    side: &S,
    level: f64,
    overlap: &Window,
    rng: &mut R,
) -> Result<S::Path> {
    for _ in 0..REJECTION_CAP {
        let d = side.draw(rng)?;
        if level <= 0.0 || !overlap.contains(&d.coord) {
            return Ok(d.path);
        }
        let (weight, g) = side.component(&d)?;
        if weight > 1.0 + PROFILE_SLACK {
            return Err(Error::ProfileViolated {
                level: 1.0,
                density: weight,
            });
        }
        if weight <= 0.0 {
            return Ok(d.path);
        }
        if g < level * (1.0 - PROFILE_SLACK) {
            return Err(Error::ProfileViolated { level, density: g });
        }
        let accept = 1.0 - weight * level / g;
        if rng.random::<f64>() < accept {
            return Ok(d.path);
        }
    }
    Err(Error::RejectionExhausted(REJECTION_CAP))
}

/// Gamma coupling of two split laws. With probability `level·|O|`, where `O`
/// is the intersection of the windows, both sides are drawn from their
/// components at a common uniform coordinate in `O`. Otherwise each side is
/// drawn independently from its residual by rejection. Each marginal is
/// exactly its full law.
pub fn gamma_couple<A: Splitting, B: Splitting, R: Rng + ?Sized>(
    a: &A,
    b: &B,
    rng: &mut R,
) -> Result<Coupled<A::Path, B::Path>> {
    let level = a.level().min(b.level()).max(0.0);
    let overlap = a.window().intersect(b.window())?;
    let mass = level * overlap.measure();
    if mass > 1.0 + PROFILE_SLACK {
        return Err(Error::ProfileViolated {
            level,
            density: mass,
        });
    }
    if mass > 0.0 && rng.random::<f64>() < mass {
        let coord = overlap.sample(rng);
        let first = a.draw_given(coord, rng)?;
        let second = b.draw_given(coord, rng)?;
        return Ok(Coupled {
            success: true,
            overlap_mass: mass,
            coord: Some(coord),
            first,
            second,
        });
    }
    let first = residual(a, level, &overlap, rng)?;
    let second = residual(b, level, &overlap, rng)?;
    Ok(Coupled {
        success: false,
        overlap_mass: mass,
        coord: None,
        first,
        second,
    })
}

/// One coupling attempt. `at` is the step index (chains) or the clock (processes)
/// at which the attempt started.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub stage: u8,
    pub success: bool,
    pub overlap_mass: f64,
    pub at: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingOutcome {
    pub coupled: bool,
    /// Step at which the chains met (chains only).
    pub coupling_index: Option<usize>,
    /// Time at which the processes met (processes only).
    pub coupling_time: Option<f64>,
    pub attempts: Vec<Attempt>,
    /// The two trajectories, when recording was requested.
    pub paths: Option<[Vec<BounceRecord>; 2]>,
    /// The last hit of each copy. Process runs without recording stop at
    /// the coupling time, so there this is the meeting point.
    pub last: [BounceRecord; 2],
}

impl CouplingOutcome {
    pub fn stage_successes(&self, stage: u8) -> usize {
        self.attempts
            .iter()
            .filter(|a| a.stage == stage && a.success)
            .count()
    }

    /// Step index (chains) or time (processes) of coupling, NaN if uncoupled.
    pub fn index_or_time(&self) -> f64 {
        match (self.coupling_index, self.coupling_time) {
            (Some(n), _) => n as f64,
            (_, Some(t)) => t,
            _ => f64::NAN,
        }
    }
}

/// What each replica of [`couple_replicas`] runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Job {
    Chains {
        s0: f64,
        s0_b: f64,
        n_max: usize,
    },
    Processes {
        start: ProcessStart,
        start_b: ProcessStart,
        t_max: f64,
    },
}

/// Runs `replicas` independent couplings, replica `i` on stream
/// `(seed, COUPLING, i)`. The certificate kind picks the coupler. Outcomes come
/// back in replica order whatever the executor.
#[allow(clippy::too_many_arguments)]
pub fn couple_replicas(
    body: &ConvexBody,
    law: &ReflectionLaw,
    cert: &RateCertificate,
    job: Job,
    replicas: usize,
    seed: u64,
    record: bool,
    exec: &Executor,
) -> Result<Vec<CouplingOutcome>> {
    let one = |i: usize| {
        let mut rng = stream(seed, lane::COUPLING, i as u64);
        match (job, cert.kind) {
            (Job::Chains { s0, s0_b, n_max }, _) => {
                couple_chains(body, law, s0, s0_b, cert, n_max, record, &mut rng)
            }
            (
                Job::Processes {
                    start,
                    start_b,
                    t_max,
                },
                CertificateKind::ConvexProcess,
            ) => couple_process_convex(body, law, start, start_b, cert, t_max, record, &mut rng),
            (
                Job::Processes {
                    start,
                    start_b,
                    t_max,
                },
                _,
            ) => couple_process_disc(body, law, start, start_b, cert, t_max, record, &mut rng),
        }
    };
    exec.map_chunks(replicas, 64, |range| {
        range.map(one).collect::<Result<Vec<_>>>()
    })
    .into_iter()
    .try_fold(Vec::with_capacity(replicas), |mut acc, part| {
        acc.extend(part?);
        Ok(acc)
    })
}

/// One step of the chain from `x` under the full law.
fn law_step<R: Rng + ?Sized>(
    body: &ConvexBody,
    law: &ReflectionLaw,
    x: &BoundaryPoint,
    rng: &mut R,
) -> Result<Step> {
    let (to, theta, tau) = chain_step(body, law, x, rng)?;
    Ok(Step { theta, to, tau })
}

fn same_point(body: &ConvexBody, x: &BoundaryPoint, y: &BoundaryPoint) -> bool {
    x.position.distance(y.position) <= body.tol_geom()
}

/// The law must keep density `f_min` on `[−θ*/2, θ*/2]`.
fn check_law(law: &ReflectionLaw, theta_star: f64, f_min: f64) -> Result<()> {
    let actual = law.min_density_on(0.5 * theta_star);
    if actual < f_min * (1.0 - 1e-9) {
        return Err(Error::HypothesisViolated(format!(
            "law density {actual} on the window is below the certified {f_min}"
        )));
    }
    Ok(())
}

/// The certificate must have been built for this body.
fn check_summary(body: &ConvexBody, cert: &RateCertificate) -> Result<()> {
    let s = body.summary();
    for (name, value) in [
        ("perimeter", s.perimeter),
        ("diameter", s.diameter),
        ("curvature_min", s.curvature_min),
        ("curvature_max", s.curvature_max),
    ] {
        let certified = cert.input(name)?;
        if (certified - value).abs() > 1e-9 * value.abs().max(1.0) {
            return Err(Error::InvalidParams(format!(
                "certificate {name} = {certified} differs from the body's {value}"
            )));
        }
    }
    Ok(())
}

/// Records of both copies plus their current hits.
#[derive(Clone, Debug)]
struct Pair {
    hits: [Hit; 2],
    records: Option<[Vec<BounceRecord>; 2]>,
    last: [BounceRecord; 2],
    steps: [usize; 2],
}

impl Pair {
    fn new(hits: [Hit; 2], first: [Option<BounceRecord>; 2], keep: bool) -> Self {
        let blank = |h: &Hit| BounceRecord {
            n: 0,
            s: h.point.s,
            position: h.point.position,
            theta: f64::NAN,
            tau: f64::NAN,
            clock: h.clock,
            velocity: crate::vec2::Vec2::new(f64::NAN, f64::NAN),
        };
        let last = [
            first[0].unwrap_or_else(|| blank(&hits[0])),
            first[1].unwrap_or_else(|| blank(&hits[1])),
        ];
        let records = keep.then(|| {
            [
                first[0].into_iter().collect(),
                first[1].into_iter().collect(),
            ]
        });
        let steps = [first[0].map_or(0, |r| r.n), first[1].map_or(0, |r| r.n)];
        Self {
            hits,
            records,
            last,
            steps,
        }
    }

    fn apply(&mut self, side: usize, path: &[Step]) {
        for step in path {
            let from = self.hits[side].point;
            self.steps[side] += 1;
            let clock = self.hits[side].clock + step.tau;
            let rec = record(
                self.steps[side],
                &from,
                &step.to,
                step.theta,
                step.tau,
                clock,
            );
            if let Some(r) = self.records.as_mut() {
                r[side].push(rec);
            }
            self.last[side] = rec;
            self.hits[side] = Hit {
                point: step.to,
                clock,
            };
        }
    }

    /// Overwrites the latest hit of both copies with a common state.
    fn merge(&mut self, hit: Hit) {
        for side in 0..2 {
            self.hits[side] = hit;
            self.last[side].s = hit.point.s;
            self.last[side].position = hit.point.position;
            self.last[side].clock = hit.clock;
            if let Some(r) = self.records.as_mut() {
                if let Some(last) = r[side].last_mut() {
                    *last = self.last[side];
                }
            }
        }
    }

    /// Both copies follow the same path.
    fn apply_shared(&mut self, path: &[Step]) {
        self.apply(0, path);
        self.apply(1, path);
    }

    /// Pins both clocks to a common time (the coupled coordinate of a time split).
    fn set_clock(&mut self, clock: f64) {
        for side in 0..2 {
            self.hits[side].clock = clock;
            self.last[side].clock = clock;
            if let Some(r) = self.records.as_mut() {
                if let Some(last) = r[side].last_mut() {
                    last.clock = clock;
                }
            }
        }
    }

    fn finish(
        self,
        coupled: bool,
        coupling_index: Option<usize>,
        coupling_time: Option<f64>,
        attempts: Vec<Attempt>,
    ) -> CouplingOutcome {
        CouplingOutcome {
            coupled,
            coupling_index,
            coupling_time,
            attempts,
            paths: self.records,
            last: self.last,
        }
    }
}
