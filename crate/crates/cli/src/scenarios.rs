//! One function per scenario. Each writes its artifacts and reports whether
//! its verdict (if any) passed.

use crate::config::{
    ExperimentConfig, Scenario, Target, DEFAULT_CHAIN_BINS, DEFAULT_LAMBDA_FRACTION,
    DEFAULT_TIME_POINTS,
};
use crate::error::CliError;
use crate::output::Artifacts;
use billiard_core::bound::Bound;
use billiard_core::coupling::{couple_replicas, Job};
use billiard_core::dynamics::{run_chain, run_process, ProcessStart};
use billiard_core::exec::Executor;
use billiard_core::rates::{
    certify_rate, optimize_free_params, CertificateKind, FixedInputs, RateCertificate,
};
use billiard_core::stats::{
    check_claim, dominance_report, empirical_tv_curve, survival_curve, ClaimSetup, Margin,
};
use billiard_core::stream::{lane, stream};
use billiard_core::{ConvexBody, ReflectionLaw};
use serde::Serialize;

pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub body: &'a ConvexBody,
    pub law: &'a ReflectionLaw,
    pub seed: u64,
    pub exec: Executor,
}

impl Context<'_> {
    fn s0(&self) -> f64 {
        self.cfg.s0.unwrap_or(0.0)
    }

    /// Second chain start; antipodal in arc length by default.
    fn s0_b(&self) -> f64 {
        self.cfg.s0_b.unwrap_or(0.5 * self.body.perimeter())
    }

    fn starts(&self) -> (ProcessStart, ProcessStart) {
        let a = self
            .cfg
            .start
            .map_or(ProcessStart::Boundary(self.s0()), Into::into);
        let b = self
            .cfg
            .start_b
            .map_or(ProcessStart::Boundary(self.s0_b()), Into::into);
        (a, b)
    }

    fn kind(&self, target: Target) -> CertificateKind {
        match (self.body.disc_radius().is_some(), target) {
            (true, Target::Chain) => CertificateKind::DiscChain,
            (true, Target::Process) => CertificateKind::DiscProcess,
            (false, Target::Chain) => CertificateKind::ConvexChain,
            (false, Target::Process) => CertificateKind::ConvexProcess,
        }
    }

    fn fixed(&self) -> FixedInputs<'_> {
        FixedInputs {
            body: self.body,
            law: self.law,
            pair: Some((self.s0(), self.s0_b())),
        }
    }

    fn certificate(&self, target: Target) -> Result<RateCertificate, CliError> {
        Ok(certify_rate(
            self.kind(target),
            &self.fixed(),
            &self.cfg.params,
        )?)
    }
}

/// Writes a certificate and reads it back, so every emitted file is known to re-validate.
fn emit_certificate(
    out: &mut Artifacts,
    name: &str,
    cert: &RateCertificate,
) -> Result<(), CliError> {
    let path = out.json(name, cert)?;
    RateCertificate::from_json(&std::fs::read_to_string(path)?)
        .map_err(|e| CliError::Runtime(format!("emitted certificate does not re-validate: {e}")))?;
    Ok(())
}

/// Runs the scenario; `Ok(false)` means a verification verdict failed.
pub fn run(ctx: &Context, out: &mut Artifacts) -> Result<bool, CliError> {
    let cfg = ctx.cfg;
    match cfg.scenario {
        Scenario::SimulateChain => {
            let mut rng = stream(ctx.seed, lane::CHAIN_A, 0);
            let trajectory = run_chain(ctx.body, ctx.law, ctx.s0(), cfg.n_max()?, &mut rng)?;
            out.trajectory("trajectory.csv", &trajectory.records)?;
            Ok(true)
        }
        Scenario::SimulateProcess => {
            let mut rng = stream(ctx.seed, lane::PROCESS, 0);
            let trajectory =
                run_process(ctx.body, ctx.law, ctx.starts().0, cfg.t_max()?, &mut rng)?;
            out.trajectory("trajectory.csv", &trajectory.records)?;
            if let Some(dt) = cfg.dt {
                out.samples("samples.csv", &trajectory, dt)?;
            }
            Ok(true)
        }
        Scenario::ChainRate => {
            emit_certificate(out, "certificate.json", &ctx.certificate(Target::Chain)?)?;
            Ok(true)
        }
        Scenario::ProcessRate => {
            emit_certificate(out, "certificate.json", &ctx.certificate(Target::Process)?)?;
            Ok(true)
        }
        Scenario::CoupleChains => {
            let cert = ctx.certificate(Target::Chain)?;
            let job = Job::Chains {
                s0: ctx.s0(),
                s0_b: ctx.s0_b(),
                n_max: cfg.n_max()?,
            };
            let outcomes = couple_replicas(
                ctx.body,
                ctx.law,
                &cert,
                job,
                cfg.replicas()?,
                ctx.seed,
                false,
                &ctx.exec,
            )?;
            emit_certificate(out, "certificate.json", &cert)?;
            out.outcomes("outcomes.csv", &outcomes)?;
            Ok(true)
        }
        Scenario::CoupleProcess => {
            let cert = ctx.certificate(Target::Process)?;
            let (start, start_b) = ctx.starts();
            let job = Job::Processes {
                start,
                start_b,
                t_max: cfg.t_max()?,
            };
            let outcomes = couple_replicas(
                ctx.body,
                ctx.law,
                &cert,
                job,
                cfg.replicas()?,
                ctx.seed,
                false,
                &ctx.exec,
            )?;
            emit_certificate(out, "certificate.json", &cert)?;
            out.outcomes("outcomes.csv", &outcomes)?;
            Ok(true)
        }
        Scenario::VerifyDominance => verify_dominance(ctx, out),
        Scenario::VerifyLb => {
            let claim = cfg
                .claim
                .ok_or_else(|| CliError::Config("verify_lb needs `claim`".into()))?;
            let theta_star = cfg
                .params
                .theta_star
                .unwrap_or(ctx.law.certificate().theta_star);
            let setup = ClaimSetup {
                claim,
                theta_star,
                f_min: ctx.law.min_density_on(0.5 * theta_star),
                eta: cfg.params.eta.unwrap_or(0.0),
                eps: cfg.params.eps.unwrap_or(0.0),
                start_s: ctx.s0(),
                inflate: cfg.inflate.unwrap_or(1.0),
            };
            let report = check_claim(
                ctx.body,
                ctx.law,
                setup,
                cfg.replicas()?,
                ctx.seed,
                &ctx.exec,
                Margin::Sigma(cfg.sigma_margin()),
            )?;
            out.json("lb_report.json", &report)?;
            Ok(report.report.pass)
        }
        Scenario::OptimizeParams => {
            let grid = cfg
                .grid
                .as_ref()
                .ok_or_else(|| CliError::Config("optimize_params needs `grid`".into()))?;
            let (params, cert) = optimize_free_params(
                ctx.kind(cfg.target),
                &ctx.fixed(),
                &cfg.params,
                grid,
                &ctx.exec,
            )?;
            out.json("optimized_params.json", &params)?;
            emit_certificate(out, "certificate.json", &cert)?;
            Ok(true)
        }
    }
}

#[derive(Serialize)]
struct DominanceFile<'a> {
    certificate_kind: CertificateKind,
    bound: Bound,
    replicas: usize,
    report: &'a billiard_core::stats::DominanceReport,
}

fn verify_dominance(ctx: &Context, out: &mut Artifacts) -> Result<bool, CliError> {
    let cfg = ctx.cfg;
    let replicas = cfg.replicas()?;
    let cert = ctx.certificate(cfg.target)?;
    let (mut curve, bound, axis) = match cfg.target {
        Target::Chain => {
            let bins = cfg.bins.unwrap_or(DEFAULT_CHAIN_BINS);
            let curve = empirical_tv_curve(
                ctx.body,
                ctx.law,
                ctx.s0(),
                ctx.s0_b(),
                cfg.n_max()?,
                replicas,
                bins,
                ctx.seed,
                &ctx.exec,
            )?;
            (curve, cert.bound, "n")
        }
        Target::Process => {
            let t_max = cfg.t_max()?;
            let (start, start_b) = ctx.starts();
            let job = Job::Processes {
                start,
                start_b,
                t_max,
            };
            let outcomes = couple_replicas(
                ctx.body, ctx.law, &cert, job, replicas, ctx.seed, false, &ctx.exec,
            )?;
            let times: Vec<f64> = outcomes
                .iter()
                .map(|o| o.coupling_time.unwrap_or(f64::INFINITY))
                .collect();
            let points = cfg.t_points.unwrap_or(DEFAULT_TIME_POINTS);
            let grid: Vec<f64> = (1..=points)
                .map(|k| t_max * k as f64 / points as f64)
                .collect();
            let lambda_max = cert.constant("lambda_max")?;
            let lambda = cfg.lambda_fraction.unwrap_or(DEFAULT_LAMBDA_FRACTION) * lambda_max;
            let c_lambda = cert
                .c_lambda_at(lambda)
                .ok_or_else(|| CliError::Config(format!("λ = {lambda} is outside (0, λ_M)")))?;
            let bound = Bound::Exponential {
                c_lambda,
                lambda,
                lambda_max,
            };
            (survival_curve(&times, &grid, bound.axis()), bound, "t")
        }
    };
    // Step 0 compares two point masses and carries no information.
    if axis == "n" && curve.x.first() == Some(&0.0) {
        curve.x.remove(0);
        curve.value.remove(0);
        curve.sigma.remove(0);
    }
    let report = dominance_report(&curve, &bound, cfg.sigma_margin())?;
    emit_certificate(out, "certificate.json", &cert)?;
    out.dominance("dominance.csv", axis, &report)?;
    out.json(
        "dominance.json",
        &DominanceFile {
            certificate_kind: cert.kind,
            bound,
            replicas,
            report: &report,
        },
    )?;
    Ok(report.pass)
}
