//! Histograms, total-variation estimates, density lower-bound checks and
//! dominance reports.

use crate::bound::{Axis, Bound};
use crate::coupling::{
    ConvexTimeSplit, DiscChainSplit, DiscJointSplit, DiscTimeSplit, Hit, Splitting, Window1,
};
use crate::dynamics::chain_step;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geometry::ConvexBody;
use crate::numeric::wrap;
use crate::rates::disc_delta;
use crate::reflection::ReflectionLaw;
use crate::stream::{lane, stream};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Verdicts need at least this many replicas.
pub const MIN_REPLICAS: usize = 1000;
/// Density lower-bound checks need at least this many samples.
pub const MIN_LB_SAMPLES: usize = 10_000;

/// Equal-width bins on `[lo, hi)`. Periodic histograms wrap values into the
/// domain; others count out-of-range values in `outside` only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
    pub counts: Vec<u64>,
    pub total: u64,
    pub outside: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize, periodic: bool) -> Self {
        assert!(
            hi > lo && bins > 0,
            "histogram needs lo < hi and at least one bin"
        );
        Self {
            lo,
            hi,
            periodic,
            counts: vec![0; bins],
            total: 0,
            outside: 0,
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let width = self.hi - self.lo;
        let x = if self.periodic {
            self.lo + wrap(x - self.lo, width)
        } else {
            x
        };
        if !(x >= self.lo && x < self.hi) {
            return None;
        }
        Some((((x - self.lo) / width * self.bins() as f64) as usize).min(self.bins() - 1))
    }

    pub fn add(&mut self, x: f64) {
        match self.bin_of(x) {
            Some(k) => {
                self.counts[k] += 1;
                self.total += 1;
            }
            None => self.outside += 1,
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.lo == other.lo
            && self.hi == other.hi
            && self.periodic == other.periodic
            && self.bins() == other.bins()
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        self.outside += other.outside;
        Ok(())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.total.max(1) as f64;
        self.counts.iter().map(|c| *c as f64 / n).collect()
    }
}

/// Half the L1 distance between the normalized histograms.
pub fn tv_hist(a: &Histogram, b: &Histogram) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch);
    }
    Ok(0.5
        * a.probabilities()
            .iter()
            .zip(b.probabilities())
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>())
}

/// Monte-Carlo scale of [`tv_hist`]: half the sum of the per-bin standard
/// errors of `p_i − q_i`. This bounds the expected noise of the estimator,
/// which stays positive even when both laws agree.
pub fn tv_sigma(a: &Histogram, b: &Histogram) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch);
    }
    let (na, nb) = (a.total.max(1) as f64, b.total.max(1) as f64);
    Ok(0.5
        * a.probabilities()
            .iter()
            .zip(b.probabilities())
            .map(|(p, q)| (p * (1.0 - p) / na + q * (1.0 - q) / nb).sqrt())
            .sum::<f64>())
}

/// Total variation between a histogram and the uniform law on its domain.
pub fn tv_to_uniform(h: &Histogram) -> f64 {
    let u = 1.0 / h.bins() as f64;
    0.5 * h.probabilities().iter().map(|p| (p - u).abs()).sum::<f64>()
}

/// An empirical curve with one Monte-Carlo standard error per point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCurve {
    pub axis: Axis,
    pub replicas: usize,
    pub x: Vec<f64>,
    pub value: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Two-start total variation `TV(n)` for `n = 0..=n_max`: two independent
/// chains from `s0` and `s0_b`, positions binned by arc-length fraction.
#[allow(clippy::too_many_arguments)]
pub fn empirical_tv_curve(
    body: &ConvexBody,
    law: &ReflectionLaw,
    s0: f64,
    s0_b: f64,
    n_max: usize,
    replicas: usize,
    bins: usize,
    seed: u64,
    exec: &Executor,
) -> Result<EmpiricalCurve> {
    let perimeter = body.perimeter();
    let blank = vec![Histogram::new(0.0, 1.0, bins, true); n_max + 1];
    let chunk = 1024;
    let run =
        |start: f64, chain_lane: u64, range: std::ops::Range<usize>| -> Result<Vec<Histogram>> {
            let mut hists = blank.clone();
            for i in range {
                let mut rng = stream(seed, chain_lane, i as u64);
                let mut x = body.point_at(start);
                hists[0].add(x.s / perimeter);
                for h in hists.iter_mut().skip(1) {
                    x = chain_step(body, law, &x, &mut rng)?.0;
                    h.add(x.s / perimeter);
                }
            }
            Ok(hists)
        };
    let parts = exec.map_chunks(replicas, chunk, |range| {
        Ok::<_, Error>((
            run(s0, lane::CHAIN_A, range.clone())?,
            run(s0_b, lane::CHAIN_B, range)?,
        ))
    });
    let (mut ha, mut hb) = (blank.clone(), blank);
    for part in parts {
        let (pa, pb) = part?;
        for (acc, p) in ha.iter_mut().zip(&pa).chain(hb.iter_mut().zip(&pb)) {
            acc.merge(p)?;
        }
    }
    let mut curve = EmpiricalCurve {
        axis: Axis::Steps,
        replicas,
        x: vec![],
        value: vec![],
        sigma: vec![],
    };
    for (n, (a, b)) in ha.iter().zip(&hb).enumerate() {
        curve.x.push(n as f64);
        curve.value.push(tv_hist(a, b)?);
        curve.sigma.push(tv_sigma(a, b)?);
    }
    Ok(curve)
}

/// Empirical survival `P(T > t)` on a grid. Uncoupled replicas carry `+∞`.
pub fn survival_curve(times: &[f64], grid: &[f64], axis: Axis) -> EmpiricalCurve {
    let n = times.len().max(1) as f64;
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut curve = EmpiricalCurve {
        axis,
        replicas: times.len(),
        x: vec![],
        value: vec![],
        sigma: vec![],
    };
    for &t in grid {
        let above = sorted.len() - sorted.partition_point(|x| *x <= t);
        let p = above as f64 / n;
        curve.x.push(t);
        curve.value.push(p);
        curve.sigma.push((p * (1.0 - p) / n).sqrt());
    }
    curve
}

/// How much Monte-Carlo slack a check allows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Margin {
    /// A fixed number of standard errors per comparison.
    Sigma(f64),
    /// A family-wise significance level, split evenly over all comparisons.
    Bonferroni(f64),
}

impl Margin {
    /// Critical z-score when `comparisons` tests share the margin.
    pub fn z(&self, comparisons: usize) -> f64 {
        match *self {
            Margin::Sigma(k) => k,
            Margin::Bonferroni(significance) => {
                let normal = Normal::new(0.0, 1.0).unwrap();
                normal.inverse_cdf(1.0 - significance / comparisons.max(1) as f64)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbReport {
    pub pass: bool,
    /// Smallest standardized excess of observed over required mass.
    pub worst_z: f64,
    pub z_critical: f64,
    pub windows_checked: usize,
}

/// An interval `[lo, hi]`; with a period, samples are wrapped into
/// `[lo, lo + period)` before testing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
    pub period: Option<f64>,
}

impl Span {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            period: None,
        }
    }

    pub fn periodic(lo: f64, hi: f64, period: f64) -> Self {
        Self {
            lo,
            hi,
            period: Some(period),
        }
    }

    fn place(&self, x: f64) -> f64 {
        match self.period {
            Some(p) => self.lo + wrap(x - self.lo, p),
            None => x,
        }
    }

    /// Dyadic pieces of the span, `2^depth` of them.
    fn pieces(&self, depth: u32) -> Vec<(f64, f64)> {
        let m = 1usize << depth;
        let w = (self.hi - self.lo) / m as f64;
        (0..m)
            .map(|k| (self.lo + k as f64 * w, self.lo + (k + 1) as f64 * w))
            .collect()
    }
}

/// Dyadic depth of the 1-D check: sub-windows down to 1/16 of the window.
pub const LB_DEPTH_1D: u32 = 4;
/// Dyadic depth per axis of the 2-D check: sub-rectangles down to 1/16 of the area.
pub const LB_DEPTH_2D: u32 = 2;

fn lb_verdict(
    n: usize,
    cells: impl Iterator<Item = (usize, f64)>,
    level: f64,
    margin: Margin,
    comparisons: usize,
) -> LbReport {
    let z_critical = margin.z(comparisons);
    let mut worst_z = f64::INFINITY;
    let nf = n as f64;
    for (hits, measure) in cells {
        let required = level * measure;
        if required <= 0.0 {
            continue;
        }
        let sigma = (required * (1.0 - required).max(0.0) / nf)
            .sqrt()
            .max(f64::MIN_POSITIVE);
        worst_z = worst_z.min((hits as f64 / nf - required) / sigma);
    }
    LbReport {
        pass: worst_z >= -z_critical,
        worst_z,
        z_critical,
        windows_checked: comparisons,
    }
}

/// Checks `P(X ∈ A) ≥ level·|A|` on all dyadic sub-windows `A` of `window`.
pub fn lb_check(samples: &[f64], window: Span, level: f64, margin: Margin) -> Result<LbReport> {
    if samples.len() < MIN_LB_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_LB_SAMPLES,
            got: samples.len(),
        });
    }
    let placed: Vec<f64> = samples.iter().map(|x| window.place(*x)).collect();
    let pieces: Vec<(f64, f64)> = (0..=LB_DEPTH_1D).flat_map(|d| window.pieces(d)).collect();
    let cells = pieces
        .iter()
        .map(|&(a, b)| (placed.iter().filter(|x| **x >= a && **x < b).count(), b - a));
    Ok(lb_verdict(
        samples.len(),
        cells,
        level,
        margin,
        pieces.len(),
    ))
}

/// Two-dimensional [`lb_check`] on dyadic sub-rectangles of `first × second`.
pub fn lb_check_2d(
    samples: &[(f64, f64)],
    first: Span,
    second: Span,
    level: f64,
    margin: Margin,
) -> Result<LbReport> {
    if samples.len() < MIN_LB_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_LB_SAMPLES,
            got: samples.len(),
        });
    }
    let placed: Vec<(f64, f64)> = samples
        .iter()
        .map(|(a, b)| (first.place(*a), second.place(*b)))
        .collect();
    let mut rects = Vec::new();
    for d in 0..=LB_DEPTH_2D {
        for a in first.pieces(d) {
            for b in second.pieces(d) {
                rects.push((a, b));
            }
        }
    }
    let cells = rects.iter().map(|&((a0, a1), (b0, b1))| {
        let hits = placed
            .iter()
            .filter(|(x, y)| *x >= a0 && *x < a1 && *y >= b0 && *y < b1)
            .count();
        (hits, (a1 - a0) * (b1 - b0))
    });
    Ok(lb_verdict(samples.len(), cells, level, margin, rects.len()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub x: f64,
    pub empirical: f64,
    pub sigma: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub rows: Vec<DominanceRow>,
    pub sigma_margin: f64,
    pub pass: bool,
}

/// Compares an empirical curve with a bound: each point passes when
/// `empirical ≤ bound + sigma_margin·σ`.
pub fn dominance_report(
    curve: &EmpiricalCurve,
    bound: &Bound,
    sigma_margin: f64,
) -> Result<DominanceReport> {
    if curve.axis != bound.axis() {
        return Err(Error::AxisMismatch {
            curve: format!("{:?}", curve.axis),
            certificate: format!("{:?}", bound.axis()),
        });
    }
    if curve.replicas < MIN_REPLICAS {
        return Err(Error::InsufficientSamples {
            needed: MIN_REPLICAS,
            got: curve.replicas,
        });
    }
    let rows: Vec<DominanceRow> = curve
        .x
        .iter()
        .zip(&curve.value)
        .zip(&curve.sigma)
        .map(|((&x, &empirical), &sigma)| {
            let bound = bound.value(x);
            DominanceRow {
                x,
                empirical,
                sigma,
                bound,
                pass: empirical <= bound + sigma_margin * sigma,
            }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(DominanceReport {
        rows,
        sigma_margin,
        pass,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chi2Result {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Two-sample χ² test of equal underlying laws for two binned samples,
/// allowing different sample sizes.
pub fn chi2_two_sample(a: &Histogram, b: &Histogram) -> Result<Chi2Result> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch);
    }
    let (na, nb) = (a.total as f64, b.total as f64);
    if a.total == 0 || b.total == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut statistic = 0.0;
    let mut used = 0usize;
    for (&r, &s) in a.counts.iter().zip(&b.counts) {
        if r + s == 0 {
            continue;
        }
        used += 1;
        let d = ka * r as f64 - kb * s as f64;
        statistic += d * d / (r + s) as f64;
    }
    let dof = if a.total == b.total {
        used.saturating_sub(1)
    } else {
        used
    }
    .max(1);
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| d.sf(statistic))
        .unwrap_or(f64::NAN);
    Ok(Chi2Result {
        statistic,
        dof,
        p_value,
    })
}

/// A density lower bound on a window that the coupling constructions rely on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// Disc: the polar angle of the next hit has density `≥ f_min/2` on an
    /// arc of half-width θ* opposite the start.
    DiscFirstAngle,
    /// Disc: the time of the second hit has density `≥ δ` on
    /// `[4r cos(θ*/2) + η, 4r − η]`.
    DiscSecondTime,
    /// Disc: (polar angle, time) of the second hit has density
    /// `≥ f_min²/(4r sin(θ*/4))` on the stage-2 window.
    DiscJoint,
    /// Convex body: the length of one flight has density `≥ cρ_min` on `[0, 2/C]`.
    ConvexFlightTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimSetup {
    pub claim: Claim,
    pub theta_star: f64,
    /// Law density lower bound on `[−θ*/2, θ*/2]`.
    pub f_min: f64,
    pub eta: f64,
    pub eps: f64,
    /// Arc length of the start point.
    pub start_s: f64,
    /// Multiplies the certified level; values above 1 make a negative control.
    pub inflate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub setup: ClaimSetup,
    pub level: f64,
    pub window: Vec<Span>,
    pub samples: usize,
    pub report: LbReport,
}

fn span_of(axis: &Window1) -> Result<Span> {
    let pieces = axis.pieces();
    match (axis.period(), pieces) {
        (None, [(lo, hi)]) => Ok(Span::new(*lo, *hi)),
        (Some(p), [(lo, hi)]) => Ok(Span::periodic(*lo, *hi, p)),
        (Some(p), [(_, a), (b, _)]) => Ok(Span::periodic(*b, p + a, p)),
        _ => Err(Error::NoAdmissibleWindow(
            "empty or fragmented window".into(),
        )),
    }
}

fn split_samples<S: Splitting + Sync>(
    split: &S,
    samples: usize,
    seed: u64,
    exec: &Executor,
) -> Result<Vec<[f64; 2]>> {
    let parts = exec.map_chunks(samples, 1024, |range| {
        range
            .map(|i| {
                let mut rng = stream(seed, lane::SAMPLES, i as u64);
                split.draw(&mut rng).map(|d| d.coord)
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut out = Vec::with_capacity(samples);
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

fn run_claim<S: Splitting + Sync>(
    split: &S,
    setup: ClaimSetup,
    samples: usize,
    seed: u64,
    exec: &Executor,
    margin: Margin,
) -> Result<ClaimReport> {
    let window = split
        .window()
        .axes
        .iter()
        .map(span_of)
        .collect::<Result<Vec<_>>>()?;
    let level = split.level() * setup.inflate;
    let coords = split_samples(split, samples, seed, exec)?;
    let report = if window.len() == 1 {
        lb_check(
            &coords.iter().map(|c| c[0]).collect::<Vec<_>>(),
            window[0],
            level,
            margin,
        )?
    } else {
        lb_check_2d(
            &coords.iter().map(|c| (c[0], c[1])).collect::<Vec<_>>(),
            window[0],
            window[1],
            level,
            margin,
        )?
    };
    Ok(ClaimReport {
        setup,
        level,
        window,
        samples,
        report,
    })
}

/// Samples the full dynamics and checks one density lower bound with [`lb_check`].
pub fn check_claim(
    body: &ConvexBody,
    law: &ReflectionLaw,
    setup: ClaimSetup,
    samples: usize,
    seed: u64,
    exec: &Executor,
    margin: Margin,
) -> Result<ClaimReport> {
    let start = body.point_at(setup.start_s);
    let hit = Hit {
        point: start,
        clock: 0.0,
    };
    let ClaimSetup {
        theta_star,
        f_min,
        eta,
        eps,
        ..
    } = setup;
    let need_disc = || {
        body.disc_radius()
            .ok_or_else(|| Error::InvalidParams(format!("{:?} needs a disc", setup.claim)))
    };
    match setup.claim {
        Claim::DiscFirstAngle => run_claim(
            &DiscChainSplit::new(body, law, start, theta_star, f_min, 1, 0.0)?,
            setup,
            samples,
            seed,
            exec,
            margin,
        ),
        Claim::DiscSecondTime => {
            let delta = disc_delta(need_disc()?, theta_star, f_min, eta);
            run_claim(
                &DiscTimeSplit::new(body, law, hit, theta_star, f_min, eta, delta)?,
                setup,
                samples,
                seed,
                exec,
                margin,
            )
        }
        Claim::DiscJoint => {
            need_disc()?;
            run_claim(
                &DiscJointSplit::new(body, law, hit, theta_star, f_min, eps)?,
                setup,
                samples,
                seed,
                exec,
                margin,
            )
        }
        Claim::ConvexFlightTime => run_claim(
            &ConvexTimeSplit::new(body, law, hit, 1, f_min, 0.0),
            setup,
            samples,
            seed,
            exec,
            margin,
        ),
    }
}
