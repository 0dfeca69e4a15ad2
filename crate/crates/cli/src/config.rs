//! Experiment configuration: TOML with one table per section (dotted keys
//! such as `domain.n = [199]` are equivalent). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use nehari_core::domain::{DomainSpec, WeightSpec};
use nehari_core::nehari::ProblemParams;
use nehari_core::parabolic::{DtPolicy, InnerSolve, StepperConfig};
use nehari_core::spectral::EigenOptions;
use nehari_core::stationary::{MountainPassOptions, NewtonOptions, PathSpec, ProbeConfig};
use nehari_core::{Field64, Grid64};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    /// One entry per axis.
    pub extent: Vec<f64>,
    pub n: Vec<usize>,
    pub omega0_lower: Vec<f64>,
    pub omega0_upper: Vec<f64>,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self { extent: vec![1.0], n: vec![299], omega0_lower: vec![0.4], omega0_upper: vec![0.7] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    Plateau,
    Ramp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightSection {
    pub profile: WeightKind,
    /// `b₀ > 0`; the weight is `−b₀` away from Ω₀.
    pub amplitude: f64,
    /// Ramp width δ; ignored for plateaus.
    pub width: f64,
}

impl Default for WeightSection {
    fn default() -> Self {
        Self { profile: WeightKind::Ramp, amplitude: 1.0, width: 0.05 }
    }
}

/// A single λ or a sweep list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    Single(f64),
    List(Vec<f64>),
}

impl LambdaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Single(l) => vec![*l],
            Self::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    pub lambda: LambdaSpec,
    pub nu: f64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self { lambda: LambdaSpec::Single(20.0), nu: 3.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerKind {
    Direct,
    Cg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperSection {
    pub dt: f64,
    pub policy: PolicyKind,
    pub stability_constant: f64,
    pub reevaluate_every: usize,
    pub horizon: f64,
    pub sample_stride: usize,
    pub growth_cutoff: f64,
    pub growth_window: usize,
    pub converge_tol: f64,
    pub inner: InnerKind,
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for StepperSection {
    fn default() -> Self {
        let d = StepperConfig::<f64>::default();
        let (c, every) = match d.policy {
            DtPolicy::Adaptive { constant, every } => (constant, every),
            DtPolicy::Fixed => (0.2, 100),
        };
        Self {
            dt: d.dt,
            policy: PolicyKind::Adaptive,
            stability_constant: c,
            reevaluate_every: every,
            horizon: d.horizon,
            sample_stride: d.sample_stride,
            growth_cutoff: d.growth_cutoff,
            growth_window: d.growth_window,
            converge_tol: d.converge_tol,
            inner: InnerKind::Direct,
            cg_tol: 1e-12,
            cg_max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub newton_tol: f64,
    pub newton_accept: f64,
    pub newton_max_iter: usize,
    pub eigen_tol: f64,
    pub eigen_max_iter: usize,
    /// Eigenpairs written by `spectrum` and used for Morse counts in `probe`.
    pub eigenpairs: usize,
    pub mp_step: f64,
    pub mp_tol: f64,
    pub mp_max_iter: usize,
    pub path_t1: f64,
    pub path_t2: f64,
    pub path_epsilon: f64,
    pub path_samples_per_segment: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let n = NewtonOptions::<f64>::default();
        let e = EigenOptions::<f64>::default();
        let m = MountainPassOptions::<f64>::default();
        let p = PathSpec::<f64>::default();
        Self {
            newton_tol: n.tol,
            newton_accept: n.accept,
            newton_max_iter: n.max_iter,
            eigen_tol: e.tol,
            eigen_max_iter: e.max_iter,
            eigenpairs: 8,
            mp_step: m.step,
            mp_tol: m.tol,
            mp_max_iter: m.max_iter,
            path_t1: p.t1,
            path_t2: p.t2,
            path_epsilon: p.epsilon,
            path_samples_per_segment: p.samples_per_segment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPreset {
    PositiveEigen,
    NegativeEigen,
    Random,
    Zero,
}

impl InitialPreset {
    pub fn label(self) -> &'static str {
        match self {
            Self::PositiveEigen => "positive-eigen",
            Self::NegativeEigen => "negative-eigen",
            Self::Random => "random",
            Self::Zero => "zero",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub initial: InitialPreset,
    /// Multiplier of the unit-L² first eigenfield for the eigen presets.
    pub amplitude: f64,
    /// H¹ seminorm of the `random` preset.
    pub random_h1: f64,
    /// Extra random seeds for a basin table; zero disables it.
    pub battery: usize,
    pub battery_max_h1: f64,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self { initial: InitialPreset::PositiveEigen, amplitude: 0.1, random_h1: 5.0, battery: 0, battery_max_h1: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSection {
    pub epsilons: Vec<f64>,
    /// Zero-based linearized eigen-index; `None` picks the first stable
    /// index with `|aᵢ| > 1e−8`.
    pub index: Option<usize>,
    pub dwell_horizon: f64,
    pub nonexistence_initializations: usize,
    pub nonexistence_horizon: f64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        let p = ProbeConfig::<f64>::default();
        Self {
            epsilons: vec![1e-2, 5e-3, 2.5e-3],
            index: None,
            dwell_horizon: 1.0,
            nonexistence_initializations: p.initializations,
            nonexistence_horizon: p.horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub domain: DomainSection,
    pub weight: WeightSection,
    pub problem: ProblemSection,
    pub stepper: StepperSection,
    pub solver: SolverSection,
    pub evolve: EvolveSection,
    pub probe: ProbeSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            domain: DomainSection::default(),
            weight: WeightSection::default(),
            problem: ProblemSection::default(),
            stepper: StepperSection::default(),
            solver: SolverSection::default(),
            evolve: EvolveSection::default(),
            probe: ProbeSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub lambda: Option<f64>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self, CliError> {
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(l) = o.lambda {
            self.problem.lambda = LambdaSpec::Single(l);
        }
        self.validate()?;
        Ok(self)
    }

    /// Canonical TOML used for hashing.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let d = &self.domain;
        let dim = d.extent.len();
        if !(dim == 1 || dim == 2) || d.n.len() != dim || d.omega0_lower.len() != dim || d.omega0_upper.len() != dim {
            return Err(CliError::Config("domain arrays must all have length 1 or all length 2".into()));
        }
        if self.problem.lambda.values().is_empty() {
            return Err(CliError::Config("problem.lambda list is empty".into()));
        }
        if self.probe.epsilons.iter().any(|&e| e.is_nan() || e <= 0.0) {
            return Err(CliError::Config("probe.epsilons must be positive".into()));
        }
        self.domain_spec().validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.weight_spec().validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.stepper_config().validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// The single λ, or an error naming the command for sweep lists.
    pub fn single_lambda(&self, command: &str) -> Result<f64, CliError> {
        match &self.problem.lambda {
            LambdaSpec::Single(l) => Ok(*l),
            LambdaSpec::List(v) if v.len() == 1 => Ok(v[0]),
            LambdaSpec::List(_) => Err(CliError::Config(format!("{command} needs a single problem.lambda; use sweep"))),
        }
    }

    pub fn domain_spec(&self) -> DomainSpec<f64> {
        let d = &self.domain;
        if d.extent.len() == 1 {
            DomainSpec::interval(d.extent[0], d.n[0], (d.omega0_lower[0], d.omega0_upper[0]))
        } else {
            DomainSpec::rectangle(
                (d.extent[0], d.extent[1]),
                (d.n[0], d.n[1]),
                (d.omega0_lower[0], d.omega0_upper[0]),
                (d.omega0_lower[1], d.omega0_upper[1]),
            )
        }
    }

    pub fn weight_spec(&self) -> WeightSpec<f64> {
        match self.weight.profile {
            WeightKind::Plateau => WeightSpec::plateau(self.weight.amplitude),
            WeightKind::Ramp => WeightSpec::ramp(self.weight.amplitude, self.weight.width),
        }
    }

    pub fn grid(&self) -> Result<Grid64, CliError> {
        nehari_core::domain::build_grid(&self.domain_spec()).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn params(&self, grid: &Grid64, lambda: f64) -> Result<ProblemParams<f64>, CliError> {
        let b: Field64 =
            nehari_core::domain::build_weight(grid, &self.weight_spec()).map_err(|e| CliError::Config(e.to_string()))?;
        ProblemParams::new(grid, lambda, self.problem.nu, b).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn stepper_config(&self) -> StepperConfig<f64> {
        let s = &self.stepper;
        StepperConfig {
            dt: s.dt,
            policy: match s.policy {
                PolicyKind::Fixed => DtPolicy::Fixed,
                PolicyKind::Adaptive => DtPolicy::Adaptive { constant: s.stability_constant, every: s.reevaluate_every },
            },
            horizon: s.horizon,
            sample_stride: s.sample_stride,
            growth_cutoff: s.growth_cutoff,
            growth_window: s.growth_window,
            converge_tol: s.converge_tol,
            stop_on_classification: true,
            inner: match s.inner {
                InnerKind::Direct => InnerSolve::Direct,
                InnerKind::Cg => InnerSolve::ConjugateGradient { tol: s.cg_tol, max_iter: s.cg_max_iter },
            },
        }
    }

    pub fn newton_options(&self) -> NewtonOptions<f64> {
        NewtonOptions {
            tol: self.solver.newton_tol,
            accept: self.solver.newton_accept,
            max_iter: self.solver.newton_max_iter,
            ..NewtonOptions::default()
        }
    }

    pub fn eigen_options(&self) -> EigenOptions<f64> {
        EigenOptions { tol: self.solver.eigen_tol, max_iter: self.solver.eigen_max_iter, ..EigenOptions::default() }
    }

    pub fn path_spec(&self) -> PathSpec<f64> {
        PathSpec {
            t1: self.solver.path_t1,
            t2: self.solver.path_t2,
            epsilon: self.solver.path_epsilon,
            samples_per_segment: self.solver.path_samples_per_segment,
        }
    }

    pub fn mountain_pass_options(&self) -> MountainPassOptions<f64> {
        MountainPassOptions {
            step: self.solver.mp_step,
            tol: self.solver.mp_tol,
            max_iter: self.solver.mp_max_iter,
            polish: self.newton_options(),
            ..MountainPassOptions::default()
        }
    }

    pub fn nonexistence_config(&self) -> ProbeConfig<f64> {
        ProbeConfig {
            initializations: self.probe.nonexistence_initializations,
            horizon: self.probe.nonexistence_horizon,
            stepper: self.stepper_config(),
            seed: self.seed,
            ..ProbeConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::parse(&cfg.canonical()).unwrap();
        assert_eq!(back, cfg);
        assert!(ExperimentConfig::parse("").unwrap() == cfg);
    }

    #[test]
    fn sections_and_dotted_keys_agree() {
        let a = ExperimentConfig::parse("[problem]\nlambda = 60.0\n[domain]\nn = [199]\n").unwrap();
        let b = ExperimentConfig::parse("problem.lambda = 60.0\ndomain.n = [199]\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.single_lambda("x").unwrap(), 60.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::parse("[problem]\nlamda = 3.0\n").is_err());
        assert!(ExperimentConfig::parse("[nope]\n").is_err());
        assert!(ExperimentConfig::parse("[domain]\nn = [99, 99]\n").is_err());
    }

    #[test]
    fn lambda_list_and_overrides() {
        let cfg = ExperimentConfig::parse("problem.lambda = [5.0, 20.0]\n").unwrap();
        assert_eq!(cfg.problem.lambda.values(), vec![5.0, 20.0]);
        assert!(cfg.single_lambda("stationary").is_err());
        let o = Overrides { lambda: Some(60.0), seed: Some(3), out: Some("x".into()) };
        let cfg = cfg.with_overrides(&o).unwrap();
        assert_eq!(cfg.problem.lambda, LambdaSpec::Single(60.0));
        assert_eq!((cfg.seed, cfg.output.dir.to_str().unwrap()), (3, "x"));
    }
}
