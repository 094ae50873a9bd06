//! Run configuration: a TOML file with one table per concern, overlaid by
//! command line flags that carry the same names as the keys.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use neckpinch_core::flow::SolverConfig;
use neckpinch_core::geometry::InitialFamily;
use neckpinch_core::regions::BlendConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Recorded with every run; nothing in the pipeline is stochastic yet.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub family: FamilySection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub bryant: BryantSection,
    #[serde(default)]
    pub formal: FormalSection,
    #[serde(default)]
    pub search: SearchSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Fiber dimension; required by every command that builds a profile.
    pub n: Option<usize>,
    /// Grid nodes of simulations and sample count of composite profiles.
    pub nodes: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { n: None, nodes: 800, out: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Sphere,
    #[serde(alias = "perturbed_sphere")]
    PerturbedSphere,
    Dumbbell,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySection {
    pub kind: FamilyKind,
    pub lambda: f64,
    pub waist: f64,
    pub cap: f64,
    pub skew: f64,
    pub radius: f64,
    pub amplitude: f64,
}

impl Default for FamilySection {
    fn default() -> Self {
        FamilySection {
            kind: FamilyKind::Dumbbell,
            lambda: 0.0,
            waist: 0.15,
            cap: 1.0,
            skew: 0.0,
            radius: 1.0,
            amplitude: 0.0,
        }
    }
}

impl FamilySection {
    pub fn build(&self) -> InitialFamily {
        match self.kind {
            FamilyKind::Sphere => InitialFamily::sphere(self.radius),
            FamilyKind::PerturbedSphere => {
                InitialFamily::PerturbedSphere { radius: self.radius, amplitude: self.amplitude }
            }
            FamilyKind::Dumbbell => {
                InitialFamily::Dumbbell { lambda: self.lambda, waist: self.waist, cap: self.cap, skew: self.skew }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Singular time; taken from the run directory when absent.
    pub t_est: Option<f64>,
    pub k_hint: Option<usize>,
    pub c_guess: Option<f64>,
    pub tip_tau: Option<f64>,
    pub gamma_max: f64,
    pub k_max: usize,
    pub tau_min: f64,
    pub delta_rel: f64,
    pub sigma_max: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            t_est: None,
            k_hint: None,
            c_guess: None,
            tip_tau: None,
            gamma_max: 2.0,
            k_max: 6,
            tau_min: 1.0,
            delta_rel: 1e-4,
            sigma_max: 12.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BryantSection {
    pub tol: f64,
}

impl Default for BryantSection {
    fn default() -> Self {
        BryantSection { tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormalSection {
    pub k: usize,
    pub c: f64,
    pub tau: Vec<f64>,
    /// Points per region window in the residual summaries.
    pub residual_samples: usize,
    pub blend: BlendConfig,
}

impl Default for FormalSection {
    fn default() -> Self {
        FormalSection {
            k: 3,
            c: 1.0,
            tau: vec![4.0, 5.0, 6.0, 7.0, 8.0],
            residual_samples: 400,
            blend: BlendConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub lo: f64,
    pub hi: f64,
    pub iters: usize,
    /// Curvature limit of the bisection runs, which also stop on neck loss.
    /// The two final bracket members are rerun with the `[solver]` settings.
    pub bisect_k_stop: f64,
    /// Mode assumed for the tip rescaling.
    pub k: usize,
    /// Start value of the tip scale fit; `k(n-1)/2` when absent.
    pub a: Option<f64>,
    /// Number of latest pole curvature samples in the blow-up fit.
    pub tail: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection { lo: 0.1, hi: 0.2, iters: 20, bisect_k_stop: 1e4, k: 3, a: None, tail: 8 }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config, CliError> {
        let Some(path) = path else { return Ok(Config::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn n(&self) -> Result<usize, CliError> {
        self.run.n.ok_or_else(|| CliError::Config("missing field `n` in [run] (or pass --n)".into()))
    }

    pub fn out(&self) -> Result<PathBuf, CliError> {
        self.run.out.clone().ok_or_else(|| CliError::Config("missing field `out` in [run] (or pass --out)".into()))
    }
}

fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
    if let Some(v) = v {
        *slot = v.clone();
    }
}

fn set_opt<T: Clone>(slot: &mut Option<T>, v: &Option<T>) {
    if v.is_some() {
        *slot = v.clone();
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed recorded in the manifest
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fiber dimension
    #[arg(long)]
    pub n: Option<usize>,
    /// Grid nodes, or composite samples for `formal`
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    pub fn apply(&self, c: &mut Config) {
        set(&mut c.seed, &self.seed);
        set_opt(&mut c.run.n, &self.n);
        set(&mut c.run.nodes, &self.nodes);
        set_opt(&mut c.run.out, &self.out);
    }
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// Initial profile family
    #[arg(long = "family", value_enum)]
    pub kind: Option<FamilyKind>,
    /// Dumbbell parameter in [0, 1]; larger values fill the neck
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Dumbbell neck radius at lambda = 0
    #[arg(long)]
    pub waist: Option<f64>,
    /// Dumbbell cap radius
    #[arg(long)]
    pub cap: Option<f64>,
    /// Dumbbell asymmetry in (-1, 1)
    #[arg(long, allow_hyphen_values = true)]
    pub skew: Option<f64>,
    /// Sphere radius
    #[arg(long)]
    pub radius: Option<f64>,
    /// Sphere perturbation amplitude
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
}

impl FamilyArgs {
    pub fn apply(&self, c: &mut Config) {
        let f = &mut c.family;
        set(&mut f.kind, &self.kind);
        set(&mut f.lambda, &self.lambda);
        set(&mut f.waist, &self.waist);
        set(&mut f.cap, &self.cap);
        set(&mut f.skew, &self.skew);
        set(&mut f.radius, &self.radius);
        set(&mut f.amplitude, &self.amplitude);
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Fraction of the stable explicit step
    #[arg(long)]
    pub cfl_safety: Option<f64>,
    /// Stop once the largest curvature reaches this value
    #[arg(long)]
    pub k_stop: Option<f64>,
    /// Stop once an interior radius falls below this value
    #[arg(long)]
    pub psi_floor: Option<f64>,
    /// Time horizon
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Snapshot whenever the largest curvature grew by this factor
    #[arg(long)]
    pub snapshot_growth: Option<f64>,
    /// Snapshot at least this often in time
    #[arg(long)]
    pub snapshot_dt: Option<f64>,
    /// Step budget
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Stop as soon as no neck is left
    #[arg(long)]
    pub stop_on_neck_loss: Option<bool>,
}

impl SolverArgs {
    pub fn apply(&self, c: &mut Config) {
        let s = &mut c.solver;
        set(&mut s.cfl_safety, &self.cfl_safety);
        set(&mut s.k_stop, &self.k_stop);
        set(&mut s.psi_floor, &self.psi_floor);
        set(&mut s.t_max, &self.t_max);
        set(&mut s.snapshot_growth, &self.snapshot_growth);
        set(&mut s.snapshot_dt, &self.snapshot_dt);
        set(&mut s.max_steps, &self.max_steps);
        set(&mut s.stop_on_neck_loss, &self.stop_on_neck_loss);
    }
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Singular time override
    #[arg(long)]
    pub t_est: Option<f64>,
    /// Mode used when no dominant mode is detected
    #[arg(long)]
    pub k_hint: Option<usize>,
    /// Start value of the intermediate fit for c
    #[arg(long)]
    pub c_guess: Option<f64>,
    /// τ of the tip comparison; the latest sample when absent
    #[arg(long)]
    pub tip_tau: Option<f64>,
    /// Largest tip rescaled radius compared with the soliton
    #[arg(long)]
    pub gamma_max: Option<f64>,
    /// Highest Hermite mode projected
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Earliest τ used by the mode fit
    #[arg(long)]
    pub tau_min: Option<f64>,
    /// Perturbation of T for the blow-up fit, relative to T - t_latest
    #[arg(long)]
    pub delta_rel: Option<f64>,
    /// Half width of the parabolic σ window
    #[arg(long)]
    pub sigma_max: Option<f64>,
}

impl AnalysisArgs {
    pub fn apply(&self, c: &mut Config) {
        let a = &mut c.analysis;
        set_opt(&mut a.t_est, &self.t_est);
        set_opt(&mut a.k_hint, &self.k_hint);
        set_opt(&mut a.c_guess, &self.c_guess);
        set_opt(&mut a.tip_tau, &self.tip_tau);
        set(&mut a.gamma_max, &self.gamma_max);
        set(&mut a.k_max, &self.k_max);
        set(&mut a.tau_min, &self.tau_min);
        set(&mut a.delta_rel, &self.delta_rel);
        set(&mut a.sigma_max, &self.sigma_max);
    }
}

#[derive(Debug, Args)]
pub struct BryantArgs {
    /// Tolerance of the soliton solve
    #[arg(long)]
    pub tol: Option<f64>,
}

impl BryantArgs {
    pub fn apply(&self, c: &mut Config) {
        set(&mut c.bryant.tol, &self.tol);
    }
}

#[derive(Debug, Args)]
pub struct FormalArgs {
    /// Degenerate mode k ≥ 3
    #[arg(long)]
    pub k: Option<usize>,
    /// Intermediate constant c
    #[arg(long)]
    pub c: Option<f64>,
    /// Comma separated list of τ values
    #[arg(long, value_delimiter = ',')]
    pub tau: Option<Vec<f64>>,
    /// Points per region window in the residual summaries
    #[arg(long)]
    pub residual_samples: Option<usize>,
}

impl FormalArgs {
    pub fn apply(&self, c: &mut Config) {
        let f = &mut c.formal;
        set(&mut f.k, &self.k);
        set(&mut f.c, &self.c);
        set(&mut f.tau, &self.tau);
        set(&mut f.residual_samples, &self.residual_samples);
    }
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Lower bracket end; must shrink without pinching
    #[arg(long)]
    pub lo: Option<f64>,
    /// Upper bracket end; must pinch
    #[arg(long)]
    pub hi: Option<f64>,
    /// Bisection steps
    #[arg(long)]
    pub iters: Option<usize>,
    /// Curvature limit of the bisection runs
    #[arg(long)]
    pub bisect_k_stop: Option<f64>,
    /// Mode assumed for the tip rescaling
    #[arg(long = "mode-k")]
    pub k: Option<usize>,
    /// Start value of the tip scale fit
    #[arg(long)]
    pub a: Option<f64>,
    /// Latest pole curvature samples used in the blow-up fit
    #[arg(long)]
    pub tail: Option<usize>,
}

impl SearchArgs {
    pub fn apply(&self, c: &mut Config) {
        let s = &mut c.search;
        set(&mut s.lo, &self.lo);
        set(&mut s.hi, &self.hi);
        set(&mut s.iters, &self.iters);
        set(&mut s.bisect_k_stop, &self.bisect_k_stop);
        set(&mut s.k, &self.k);
        set_opt(&mut s.a, &self.a);
        set(&mut s.tail, &self.tail);
    }
}
