//! Experiment configuration: one TOML or JSON file per run.

use crate::error::CliError;
use billiard_core::dynamics::ProcessStart;
use billiard_core::rates::{GridSpec, RateParams};
use billiard_core::stats::Claim;
use billiard_core::{ConvexBody, ReflectionLaw, Vec2};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SimulateChain,
    SimulateProcess,
    ChainRate,
    ProcessRate,
    CoupleChains,
    CoupleProcess,
    VerifyDominance,
    VerifyLb,
    OptimizeParams,
}

/// Which dynamics a scenario certifies or verifies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    Chain,
    Process,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Disc {
        r: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// CSV of `(s, kappa)` rows.
    CurvatureTable {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    Cosine,
    UniformHalf,
    TruncatedUniform {
        theta_star: f64,
    },
    /// CSV of `(theta, f)` rows.
    Table {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StartSpec {
    Boundary(f64),
    Interior {
        position: [f64; 2],
        velocity: [f64; 2],
    },
}

impl From<StartSpec> for ProcessStart {
    fn from(s: StartSpec) -> Self {
        match s {
            StartSpec::Boundary(s) => ProcessStart::Boundary(s),
            StartSpec::Interior { position, velocity } => ProcessStart::Interior {
                position: Vec2::new(position[0], position[1]),
                velocity: Vec2::new(velocity[0], velocity[1]),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: Option<u64>,
    /// Worker threads; 0 or absent means the available parallelism.
    pub workers: Option<usize>,
    /// Output directory; relative paths resolve against the working directory.
    pub out: Option<PathBuf>,
    pub body: BodySpec,
    pub law: LawSpec,
    #[serde(default)]
    pub params: RateParams,
    #[serde(default)]
    pub target: Target,
    pub replicas: Option<usize>,
    pub n_max: Option<usize>,
    pub t_max: Option<f64>,
    /// Spacing of dense process samples; none are written when absent.
    pub dt: Option<f64>,
    pub bins: Option<usize>,
    pub s0: Option<f64>,
    pub s0_b: Option<f64>,
    pub start: Option<StartSpec>,
    pub start_b: Option<StartSpec>,
    pub grid: Option<GridSpec>,
    pub claim: Option<Claim>,
    pub inflate: Option<f64>,
    pub sigma_margin: Option<f64>,
    pub t_points: Option<usize>,
    /// Rate used for process dominance, as a fraction of `λ_M`.
    pub lambda_fraction: Option<f64>,
}

/// Command-line values that replace config fields of the same name.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_CHAIN_BINS: usize = 100;
pub const DEFAULT_TIME_POINTS: usize = 20;
pub const DEFAULT_SIGMA_MARGIN: f64 = 3.0;
pub const DEFAULT_LAMBDA_FRACTION: f64 = 0.5;

impl ExperimentConfig {
    /// Reads a config; `.json` files are JSON, everything else TOML. Table
    /// paths are resolved against the config's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        let dir = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let BodySpec::CurvatureTable { path } = &mut cfg.body {
            rebase(path);
        }
        if let LawSpec::Table { path } = &mut cfg.law {
            rebase(path);
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.workers.is_some() {
            self.workers = o.workers;
        }
        if o.out.is_some() {
            self.out.clone_from(&o.out);
        }
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Config("seed is mandatory (set `seed` or pass --seed)".into()))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn replicas(&self) -> Result<usize, CliError> {
        positive(self.replicas, "replicas")
    }

    pub fn n_max(&self) -> Result<usize, CliError> {
        self.n_max
            .ok_or_else(|| CliError::Config("n_max is required for this scenario".into()))
    }

    pub fn t_max(&self) -> Result<f64, CliError> {
        match self.t_max {
            Some(t) if t >= 0.0 && t.is_finite() => Ok(t),
            Some(t) => Err(CliError::Config(format!(
                "t_max = {t} must be finite and non-negative"
            ))),
            None => Err(CliError::Config(
                "t_max is required for this scenario".into(),
            )),
        }
    }

    pub fn sigma_margin(&self) -> f64 {
        self.sigma_margin.unwrap_or(DEFAULT_SIGMA_MARGIN)
    }

    /// Checks everything that can be checked without running: mandatory and
    /// scenario-specific fields, the body, the law and the output directory.
    pub fn validate(&self) -> Result<(ConvexBody, ReflectionLaw), CliError> {
        self.seed()?;
        let body = build_body(&self.body)?;
        let law = build_law(&self.law)?;
        if let Some(dt) = self.dt {
            if dt.is_nan() || dt <= 0.0 {
                return Err(CliError::Config(format!("dt = {dt} must be positive")));
            }
        }
        for (name, v) in [
            ("inflate", self.inflate),
            ("sigma_margin", self.sigma_margin),
            ("lambda_fraction", self.lambda_fraction),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!("{name} = {v} must be positive")));
                }
            }
        }
        if let Some(f) = self.lambda_fraction {
            if f >= 1.0 {
                return Err(CliError::Config(format!(
                    "lambda_fraction = {f} must lie in (0, 1)"
                )));
            }
        }
        match self.scenario {
            Scenario::SimulateChain => {
                self.n_max()?;
            }
            Scenario::SimulateProcess => {
                self.t_max()?;
            }
            Scenario::ChainRate | Scenario::ProcessRate => {}
            Scenario::CoupleChains => {
                self.replicas()?;
                self.n_max()?;
            }
            Scenario::CoupleProcess => {
                self.replicas()?;
                self.t_max()?;
            }
            Scenario::VerifyDominance => {
                self.replicas()?;
                match self.target {
                    Target::Chain => self.n_max().map(drop)?,
                    Target::Process => self.t_max().map(drop)?,
                }
                positive(self.bins.or(Some(DEFAULT_CHAIN_BINS)), "bins")?;
                positive(self.t_points.or(Some(DEFAULT_TIME_POINTS)), "t_points")?;
            }
            Scenario::VerifyLb => {
                self.replicas()?;
                self.claim
                    .ok_or_else(|| CliError::Config("verify_lb needs `claim`".into()))?;
            }
            Scenario::OptimizeParams => {
                self.grid
                    .as_ref()
                    .ok_or_else(|| CliError::Config("optimize_params needs `grid`".into()))?;
            }
        }
        check_writable(&self.out_dir())?;
        Ok((body, law))
    }
}

fn positive(v: Option<usize>, name: &str) -> Result<usize, CliError> {
    match v {
        Some(n) if n > 0 => Ok(n),
        Some(_) => Err(CliError::Config(format!("{name} must be positive"))),
        None => Err(CliError::Config(format!(
            "{name} is required for this scenario"
        ))),
    }
}

fn check_writable(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| {
        CliError::Config(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })?;
    let probe = dir.join(".billiard-write-probe");
    std::fs::write(&probe, b"").map_err(|e| {
        CliError::Config(format!(
            "output directory {} is not writable: {e}",
            dir.display()
        ))
    })?;
    let _ = std::fs::remove_file(probe);
    Ok(())
}

/// Two-column numeric CSV with a header row.
fn read_pairs(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let (mut a, mut b) = (vec![], vec![]);
    for row in reader.deserialize::<(f64, f64)>() {
        let (x, y) = row.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        a.push(x);
        b.push(y);
    }
    Ok((a, b))
}

pub fn build_body(spec: &BodySpec) -> Result<ConvexBody, CliError> {
    Ok(match spec {
        BodySpec::Disc { r } => ConvexBody::disc(*r)?,
        BodySpec::Ellipse { a, b } => ConvexBody::ellipse(*a, *b)?,
        BodySpec::CurvatureTable { path } => {
            let (s, kappa) = read_pairs(path)?;
            ConvexBody::curvature_table(&s, &kappa)?
        }
    })
}

pub fn build_law(spec: &LawSpec) -> Result<ReflectionLaw, CliError> {
    Ok(match spec {
        LawSpec::Cosine => ReflectionLaw::cosine(),
        LawSpec::UniformHalf => ReflectionLaw::uniform_half(),
        LawSpec::TruncatedUniform { theta_star } => ReflectionLaw::truncated_uniform(*theta_star)?,
        LawSpec::Table { path } => {
            let (theta, f) = read_pairs(path)?;
            ReflectionLaw::table(&theta, &f)?
        }
    })
}
