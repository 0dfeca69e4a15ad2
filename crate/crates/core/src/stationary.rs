//! Equilibria of `−Δu = λu + b|u|^{ν−1}u`: the positive solution by damped
//! Newton, probing for nonexistence above `λ₁(Ω₀)`, and the sign-changing
//! mountain-pass solution on the Nehari manifold.
//!
//! The mountain-pass search is a string method on the manifold. Samples move
//! along the H¹ gradient `(−Δ_h)⁻¹ g`, which on `N` is H¹-orthogonal to the
//! sample itself, and are re-projected after each move. The path maximizer
//! climbs along the path tangent, the remaining samples descend, and each
//! side of the maximizer is redistributed by H¹ arc length.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::VecDeque;
use thiserror::Error;

use crate::domain::{laplacian_apply, Field, Grid};
use crate::linalg::{BandLu, LinalgError};
use crate::nehari::{
    classify, energy, grad_energy, parts, project_to_nehari, residual_norm, turning_point, NehariError, NehariReport,
    ProblemParams, Sign,
};
use crate::parabolic::{evolve, DtPolicy, Equilibrium, ParabolicError, StepperConfig};
use crate::scalar::Scalar;
use crate::spectral::{
    dirichlet_spectrum, linearized_spectrum, morse_count, subdomain_spectrum, thresholds, LinearizedOperator,
    SpectralError, Thresholds,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StationaryError {
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Newton converged to the trivial equilibrium after {iterations} iterations")]
    ConvergedToZero { iterations: usize },
    #[error("λ = {lambda} outside the admissible window ({lower}, {upper})")]
    NotInRange { lambda: f64, lower: f64, upper: f64 },
    #[error("initial field is not positive at node {0}")]
    NonPositiveInit(usize),
    #[error("solution left the positive cone (min value {min:e})")]
    LeftPositiveCone { min: f64, residual: f64 },
    #[error("found a positive equilibrium at λ = {lambda} ≥ λ₁(Ω₀) (residual {residual:e})")]
    FoundPositiveEquilibrium { lambda: f64, residual: f64, field: Vec<f64> },
    #[error("nonexistence probe requires λ ≥ λ₁(Ω₀) = {threshold}, got {lambda}; use solve_positive")]
    ProbePrecondition { lambda: f64, threshold: f64 },
    #[error("path requires λ > λ₂(Ω) = {threshold}, got {lambda}")]
    PathPrecondition { lambda: f64, threshold: f64 },
    #[error("path sample at s = {s} is not projectable (A {a:?}, B {b:?})")]
    PathNotProjectable { s: f64, a: Sign, b: Sign },
    #[error("invalid path parameters: {0}")]
    InvalidPathSpec(String),
    #[error("path endpoints are not ±φ (mismatch {0:e})")]
    EndpointMismatch(f64),
    #[error("path sample {index} is off the Nehari manifold")]
    OffManifold { index: usize },
    #[error("deformation collapsed onto an endpoint after {} iterations", trace.len())]
    CollapseToEndpoint { trace: Vec<DeformationStep> },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Nehari(#[from] NehariError),
    #[error(transparent)]
    Parabolic(#[from] ParabolicError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions<T> {
    /// Converged when `‖g‖_{L²} ≤ tol`.
    pub tol: T,
    /// A stagnated line search still counts as converged below this.
    pub accept: T,
    pub max_iter: usize,
    /// Smallest line-search fraction before giving up.
    pub min_step: T,
    /// `‖u‖_{L²}` below which a converged state counts as trivial.
    pub zero_threshold: T,
    /// Gradient-flow warm start runs until `‖g‖ ≤ preflow_tol·max(1, ‖u‖)`.
    pub preflow_tol: T,
    /// Zero disables the warm start.
    pub preflow_max_steps: usize,
}

impl<T: Scalar> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            accept: T::lit(1e-9),
            max_iter: 200,
            min_step: T::lit(1e-10),
            zero_threshold: T::lit(1e-8),
            preflow_tol: T::lit(1e-3),
            preflow_max_steps: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult<T> {
    pub field: Field<T>,
    pub residual_norm: T,
    pub energy: T,
    pub nehari_report: NehariReport<T>,
    pub sign_domains: usize,
    pub morse_index: usize,
    pub iterations: usize,
}

/// Linearized eigenpairs computed for the Morse count.
const MORSE_PAIRS: usize = 8;

/// Grid, parameters and the discrete thresholds they sit against.
#[derive(Debug, Clone)]
pub struct StationaryProblem<'a, T> {
    pub grid: &'a Grid<T>,
    pub params: &'a ProblemParams<T>,
    pub thresholds: Thresholds<T>,
    pub newton: NewtonOptions<T>,
}

impl<'a, T: Scalar> StationaryProblem<'a, T> {
    pub fn new(grid: &'a Grid<T>, params: &'a ProblemParams<T>) -> Result<Self, StationaryError> {
        Ok(Self::with_thresholds(grid, params, thresholds(grid)?))
    }

    pub fn with_thresholds(grid: &'a Grid<T>, params: &'a ProblemParams<T>, thresholds: Thresholds<T>) -> Self {
        Self { grid, params, thresholds, newton: NewtonOptions::default() }
    }

    pub fn with_newton(mut self, newton: NewtonOptions<T>) -> Self {
        self.newton = newton;
        self
    }

    pub fn in_admissible_window(&self) -> bool {
        let l = self.params.lambda();
        self.thresholds.lambda1_omega < l && l < self.thresholds.lambda1_omega0
    }

    /// Damped Newton on `g(u) = 0` with backtracking on `‖g‖²`; no sign
    /// constraints.
    pub fn newton(&self, init: &Field<T>) -> Result<EquilibriumResult<T>, StationaryError> {
        let (g, p, o) = (self.grid, self.params, &self.newton);
        let mut u = init.clone();
        let mut r = residual_norm(g, p, &u);
        let mut it = 0;
        'outer: while r > o.tol {
            if it == o.max_iter {
                if r <= o.accept {
                    break;
                }
                return Err(StationaryError::NoConvergence { iterations: it, residual: r.as_f64() });
            }
            let grad = grad_energy(g, p, &u);
            let jac = LinearizedOperator::new(p, &u).matrix(g);
            let lu = match jac.lu() {
                Ok(lu) => lu,
                Err(_) => return Err(StationaryError::NoConvergence { iterations: it, residual: r.as_f64() }),
            };
            let rhs: Vec<T> = grad.iter().map(|&v| -v).collect();
            let delta = Field::from_vec(lu.solve(&rhs));
            let mut alpha = T::one();
            loop {
                let trial = u.add_scaled(alpha, &delta);
                let rt = residual_norm(g, p, &trial);
                if rt.is_finite() && rt * rt <= (T::one() - T::lit(1e-4) * alpha) * r * r {
                    u = trial;
                    r = rt;
                    break;
                }
                alpha /= T::lit(2.0);
                if alpha < o.min_step {
                    if r <= o.accept {
                        break 'outer;
                    }
                    return Err(StationaryError::NoConvergence { iterations: it, residual: r.as_f64() });
                }
            }
            it += 1;
        }
        if g.l2_norm(&u) < o.zero_threshold {
            return Err(StationaryError::ConvergedToZero { iterations: it });
        }
        self.finish(u, it)
    }

    /// Gradient-flow warm start followed by [`Self::newton`]. Odd in `init`
    /// to the last bit, so `−init` yields the exact negation.
    pub fn solve_signed(&self, init: &Field<T>) -> Result<EquilibriumResult<T>, StationaryError> {
        let start = self.preflow(init)?;
        self.newton(&start)
    }

    /// IMEX flow from `init` until the residual is small relative to the
    /// state, the state blows past `1e5`, or the step budget runs out.
    pub fn preflow(&self, init: &Field<T>) -> Result<Field<T>, StationaryError> {
        let (g, p, o) = (self.grid, self.params, &self.newton);
        let cfg = StepperConfig::<T>::default();
        let mut stepper = crate::parabolic::Stepper::new(g, p, cfg.inner);
        let mut u = init.clone();
        let mut dt = cfg.step_for(p, &u);
        for n in 0..o.preflow_max_steps {
            if n % 10 == 0 {
                let r = residual_norm(g, p, &u);
                let size = g.l2_norm(&u);
                if r <= o.preflow_tol * size.max(T::one()) || size > T::lit(1e5) {
                    break;
                }
            }
            if n % 100 == 0 {
                dt = cfg.step_for(p, &u);
            }
            u = match stepper.advance(&u, dt, n) {
                Ok(v) => v,
                Err(_) => break,
            };
        }
        Ok(u)
    }

    fn finish(&self, u: Field<T>, iterations: usize) -> Result<EquilibriumResult<T>, StationaryError> {
        let (g, p) = (self.grid, self.params);
        let k = MORSE_PAIRS.min(g.len());
        let spec = linearized_spectrum(g, p, &u, k)?;
        let morse_index = match morse_count(&spec) {
            Ok(q) => q,
            Err(_) => linearized_spectrum(g, p, &u, (4 * k).min(g.len())).and_then(|s| morse_count(&s))?,
        };
        Ok(EquilibriumResult {
            residual_norm: residual_norm(g, p, &u),
            energy: energy(g, p, &u),
            nehari_report: classify(g, p, &u),
            sign_domains: sign_domains(g, &u),
            morse_index,
            iterations,
            field: u,
        })
    }

    /// Newton from a positive `init`, requiring `λ₁(Ω) < λ < λ₁(Ω₀)`.
    pub fn solve_positive(&self, init: &Field<T>) -> Result<EquilibriumResult<T>, StationaryError> {
        if !self.in_admissible_window() {
            return Err(StationaryError::NotInRange {
                lambda: self.params.lambda().as_f64(),
                lower: self.thresholds.lambda1_omega.as_f64(),
                upper: self.thresholds.lambda1_omega0.as_f64(),
            });
        }
        self.solve_positive_forced(init)
    }

    /// [`Self::solve_positive`] without the window check.
    pub fn solve_positive_forced(&self, init: &Field<T>) -> Result<EquilibriumResult<T>, StationaryError> {
        if let Some(i) = init.iter().position(|&v| !(v > T::zero())) {
            return Err(StationaryError::NonPositiveInit(i));
        }
        let res = self.solve_signed(init)?;
        let min = res.field.min_value();
        if !(min > T::zero()) {
            return Err(StationaryError::LeftPositiveCone { min: min.as_f64(), residual: res.residual_norm.as_f64() });
        }
        Ok(res)
    }

    /// First Ω eigenfield at unit H¹ norm, projected onto `N` when possible.
    pub fn default_init(&self) -> Result<Field<T>, StationaryError> {
        let phi1 = dirichlet_spectrum(self.grid, 1)?.field(0).clone();
        let unit = phi1.scaled(T::one() / self.grid.h1_norm(&phi1));
        Ok(match project_to_nehari(self.grid, self.params, &unit) {
            Ok((_, v)) => v,
            Err(_) => unit,
        })
    }

    /// Positive random initial data, projected onto `N` when possible.
    pub fn random_positive_init(&self, rng: &mut ChaCha8Rng) -> Field<T> {
        let u = crate::random::positive_field(self.grid, rng);
        match project_to_nehari(self.grid, self.params, &u) {
            Ok((_, v)) => v,
            Err(_) => u,
        }
    }

    /// Searches for positive equilibria at `λ ≥ λ₁(Ω₀)` and measures the
    /// growth of `‖u‖_{L²(Ω₀)}` along a positive trajectory.
    pub fn nonexistence_probe(&self, cfg: &ProbeConfig<T>) -> Result<ProbeReport<T>, StationaryError> {
        let lambda = self.params.lambda();
        if lambda < self.thresholds.lambda1_omega0 {
            return Err(StationaryError::ProbePrecondition {
                lambda: lambda.as_f64(),
                threshold: self.thresholds.lambda1_omega0.as_f64(),
            });
        }
        let mut inits = vec![self.default_init()?];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        while inits.len() < cfg.initializations.max(5) {
            inits.push(self.random_positive_init(&mut rng));
        }
        let mut outcomes = Vec::with_capacity(inits.len());
        for init in &inits {
            match self.solve_positive_forced(init) {
                Ok(res) => {
                    return Err(StationaryError::FoundPositiveEquilibrium {
                        lambda: lambda.as_f64(),
                        residual: res.residual_norm.as_f64(),
                        field: res.field.iter().map(|v| v.as_f64()).collect(),
                    })
                }
                Err(e) => outcomes.push(e.to_string()),
            }
        }
        let phi1 = dirichlet_spectrum(self.grid, 1)?.field(0).clone();
        let u0 = phi1.scaled(cfg.initial_amplitude);
        let mut l2_omega0 = Vec::new();
        let step_cfg = StepperConfig {
            horizon: cfg.horizon,
            stop_on_classification: false,
            growth_cutoff: T::infinity(),
            ..cfg.stepper.clone()
        };
        let rec = evolve(self.grid, self.params, &u0, &step_cfg, &[])?;
        for s in &rec.samples {
            l2_omega0.push((s.t, s.l2_omega0));
        }
        let start = cfg.horizon * T::lit(0.1);
        let tail: Vec<T> = l2_omega0.iter().filter(|(t, _)| *t >= start).map(|&(_, v)| v).collect();
        let strictly_increasing = tail.len() >= 2 && tail.windows(2).all(|w| w[1] > w[0]);
        let sup = l2_omega0.iter().fold(T::zero(), |m, &(_, v)| m.max(v));
        Ok(ProbeReport {
            lambda,
            initializations: inits.len(),
            outcomes,
            sup_l2_omega0: sup,
            strictly_increasing,
            l2_omega0,
            positivity_preserved: rec.positivity_preserved.unwrap_or(false),
        })
    }

    /// `γ(s)` projected onto `N`, for `s ∈ [0, 1]`.
    pub fn path_point(&self, s: T, parts_: &PathParts<T>) -> Result<(T, Field<T>), StationaryError> {
        let three = T::lit(3.0);
        let third = T::one() / three;
        let raw = if s <= third {
            let a = three * s;
            parts_.phi.scaled(T::one() - a).add_scaled(a, &parts_.w1)
        } else if s <= T::lit(2.0) * third {
            let theta = three * (s - third) * T::lit(std::f64::consts::PI);
            parts_.w1.scaled(theta.cos()).add_scaled(theta.sin(), &parts_.w2)
        } else {
            let a = three * s - T::lit(2.0);
            parts_.w1.scaled(a - T::one()).add_scaled(-a, &parts_.phi)
        };
        let (a, b) = parts(self.grid, self.params, &raw);
        match turning_point(a, b, self.params.nu()) {
            Some(t) => Ok((t, raw.scaled(t))),
            None => Err(StationaryError::PathNotProjectable { s: s.as_f64(), a: Sign::of(a), b: Sign::of(b) }),
        }
    }

    /// Ingredients `φ`, `w₁ = t₁(φ₁ + εφ₁⁰)`, `w₂ = t₂(φ₂ + εφ₂⁰)`.
    pub fn path_parts(&self, phi: &Field<T>, spec: &PathSpec<T>) -> Result<PathParts<T>, StationaryError> {
        spec.validate()?;
        if self.params.lambda() <= self.thresholds.lambda2_omega {
            return Err(StationaryError::PathPrecondition {
                lambda: self.params.lambda().as_f64(),
                threshold: self.thresholds.lambda2_omega.as_f64(),
            });
        }
        let om = dirichlet_spectrum(self.grid, 2)?;
        let k0 = self.grid.omega0_count().min(2);
        let om0 = subdomain_spectrum(self.grid, k0)?;
        let phi20 = if om0.len() > 1 { om0.field(1).clone() } else { Field::zeros(self.grid) };
        let w1 = om.field(0).add_scaled(spec.epsilon, om0.field(0)).scaled(spec.t1);
        let w2 = om.field(1).add_scaled(spec.epsilon, &phi20).scaled(spec.t2);
        Ok(PathParts { phi: phi.clone(), w1, w2 })
    }

    /// Samples `γ` at `s_j = j/(3m)`, `j = 0..=3m`, each projected onto `N`.
    pub fn build_mp_path(&self, phi: &Field<T>, spec: &PathSpec<T>) -> Result<Vec<Field<T>>, StationaryError> {
        let pp = self.path_parts(phi, spec)?;
        let total = 3 * spec.samples_per_segment;
        (0..=total)
            .map(|j| self.path_point(T::from_count(j) / T::from_count(total), &pp).map(|(_, v)| v))
            .collect()
    }

    pub fn mountain_pass(
        &self,
        path: &[Field<T>],
        opts: &MountainPassOptions<T>,
    ) -> Result<MountainPassResult<T>, StationaryError> {
        mountain_pass_impl(self, path, opts)
    }
}

#[derive(Debug, Clone)]
pub struct ProbeConfig<T> {
    pub initializations: usize,
    pub horizon: T,
    pub initial_amplitude: T,
    pub stepper: StepperConfig<T>,
    pub seed: u64,
}

impl<T: Scalar> Default for ProbeConfig<T> {
    fn default() -> Self {
        Self {
            initializations: 5,
            horizon: T::lit(0.2),
            initial_amplitude: T::lit(0.1),
            stepper: StepperConfig::default(),
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport<T> {
    pub lambda: T,
    pub initializations: usize,
    /// Why each Newton run did not yield a positive equilibrium.
    pub outcomes: Vec<String>,
    pub sup_l2_omega0: T,
    /// Over the last 90% of the horizon.
    pub strictly_increasing: bool,
    pub l2_omega0: Vec<(T, T)>,
    pub positivity_preserved: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec<T> {
    pub t1: T,
    pub t2: T,
    pub epsilon: T,
    pub samples_per_segment: usize,
}

impl<T: Scalar> Default for PathSpec<T> {
    fn default() -> Self {
        Self { t1: T::lit(0.1), t2: T::lit(0.1), epsilon: T::lit(0.05), samples_per_segment: 33 }
    }
}

impl<T: Scalar> PathSpec<T> {
    pub fn validate(&self) -> Result<(), StationaryError> {
        if !(self.t1 > T::zero() && self.t2 > T::zero() && self.epsilon > T::zero()) {
            return Err(StationaryError::InvalidPathSpec("t1, t2 and epsilon must be positive".into()));
        }
        if self.samples_per_segment < 8 {
            return Err(StationaryError::InvalidPathSpec("at least 8 samples per segment".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathParts<T> {
    pub phi: Field<T>,
    pub w1: Field<T>,
    pub w2: Field<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MountainPassOptions<T> {
    /// Descent fraction of the H¹ gradient.
    pub step: T,
    /// Stop when the maximizer's `‖∇_{H¹} I‖_{H¹} ≤ tol`.
    pub tol: T,
    pub max_iter: usize,
    /// Iterations of plain descent before the maximizer starts climbing.
    pub climb_after: usize,
    pub max_halvings: usize,
    pub polish: NewtonOptions<T>,
}

impl<T: Scalar> Default for MountainPassOptions<T> {
    fn default() -> Self {
        Self {
            step: T::lit(0.1),
            tol: T::lit(1e-5),
            max_iter: 20_000,
            climb_after: 10,
            max_halvings: 12,
            polish: NewtonOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationStep {
    pub iteration: usize,
    pub max_index: usize,
    pub max_energy: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MountainPassResult<T> {
    pub solution: EquilibriumResult<T>,
    /// `I(φ)`, the endpoint level.
    pub endpoint_energy: T,
    /// Minimum of `I` over every manifold sample produced.
    pub min_sample_energy: T,
    pub path: Vec<Field<T>>,
    pub path_energies: Vec<T>,
    pub trace: Vec<DeformationStep>,
}

struct H1Solver<T> {
    lu: BandLu<T>,
}

impl<T: Scalar> H1Solver<T> {
    fn gradient(&self, g: &Field<T>) -> Field<T> {
        Field::from_vec(self.lu.solve(g.as_slice()))
    }
}

fn h1_inner<T: Scalar>(grid: &Grid<T>, u: &Field<T>, v: &Field<T>) -> T {
    grid.inner(&laplacian_apply(grid, u), v)
}

fn h1_dist<T: Scalar>(grid: &Grid<T>, u: &Field<T>, v: &Field<T>) -> T {
    let d = u - v;
    h1_inner(grid, &d, &d).max(T::zero()).sqrt()
}

fn mountain_pass_impl<T: Scalar>(
    prob: &StationaryProblem<'_, T>,
    path: &[Field<T>],
    opts: &MountainPassOptions<T>,
) -> Result<MountainPassResult<T>, StationaryError> {
    let (grid, params) = (prob.grid, prob.params);
    let m = path.len();
    if m < 3 {
        return Err(StationaryError::InvalidPathSpec("path needs at least 3 samples".into()));
    }
    let phi = path[0].clone();
    let mismatch = grid.l2_norm(&(&path[m - 1] + &phi));
    if mismatch > T::lit(1e-8) * grid.l2_norm(&phi).max(T::one()) {
        return Err(StationaryError::EndpointMismatch(mismatch.as_f64()));
    }
    for (index, u) in path.iter().enumerate() {
        let (a, b) = parts(grid, params, u);
        if (a - b).abs() > crate::nehari::manifold_tolerance(crate::domain::h1_seminorm_sq(grid, u)) {
            return Err(StationaryError::OffManifold { index });
        }
    }
    let h1 = H1Solver { lu: grid.laplacian_matrix().lu()? };
    let d_low = energy(grid, params, &phi);
    let mut path: Vec<Field<T>> = path.to_vec();
    let mut e: Vec<T> = path.iter().map(|u| energy(grid, params, u)).collect();
    let mut min_sample = e.iter().fold(T::infinity(), |a, &b| a.min(b));
    let mut trace = Vec::new();
    let project = |u: &Field<T>| -> Option<Field<T>> { project_to_nehari(grid, params, u).ok().map(|(_, v)| v) };
    let collapse_band = T::lit(1e-9) * d_low.abs().max(T::one());

    for iter in 0..opts.max_iter {
        let k = (1..m - 1).max_by(|&i, &j| e[i].partial_cmp(&e[j]).expect("finite energies")).expect("interior");
        let gk = h1.gradient(&grad_energy(grid, params, &path[k]));
        let gn = h1_inner(grid, &gk, &gk).max(T::zero()).sqrt();
        trace.push(DeformationStep { iteration: iter, max_index: k, max_energy: e[k].as_f64(), grad_norm: gn.as_f64() });
        if e[k] - d_low <= collapse_band {
            return Err(StationaryError::CollapseToEndpoint { trace });
        }
        if gn <= opts.tol {
            return polish(prob, &path, &e, k, d_low, min_sample, trace, opts);
        }
        let climbing = iter >= opts.climb_after;
        let tau = {
            let t = &path[k + 1] - &path[k - 1];
            let n = h1_inner(grid, &t, &t).sqrt();
            t.scaled(T::one() / n)
        };
        let updated: Vec<(Field<T>, T)> = (1..m - 1)
            .into_par_iter()
            .map(|j| {
                let u = &path[j];
                if climbing && j == k {
                    let along = h1_inner(grid, &gk, &tau);
                    let dir = gk.add_scaled(-T::lit(2.0) * along, &tau);
                    let mut alpha = opts.step;
                    for _ in 0..=opts.max_halvings {
                        if let Some(v) = project(&u.add_scaled(-alpha, &dir)) {
                            let ev = energy(grid, params, &v);
                            return (v, ev);
                        }
                        alpha /= T::lit(2.0);
                    }
                    return (u.clone(), e[j]);
                }
                let g = h1.gradient(&grad_energy(grid, params, u));
                let mut alpha = opts.step;
                for _ in 0..=opts.max_halvings {
                    if let Some(v) = project(&u.add_scaled(-alpha, &g)) {
                        let ev = energy(grid, params, &v);
                        if ev <= e[j] {
                            return (v, ev);
                        }
                    }
                    alpha /= T::lit(2.0);
                }
                (u.clone(), e[j])
            })
            .collect();
        for (j, (v, ev)) in updated.into_iter().enumerate() {
            path[j + 1] = v;
            e[j + 1] = ev;
        }
        let k = if climbing { k } else { m / 2 };
        path = reparametrize(grid, &path, k, &project);
        e = path.iter().map(|u| energy(grid, params, u)).collect();
        min_sample = e.iter().fold(min_sample, |a, &b| a.min(b));
    }
    let last = trace.last().map_or(f64::NAN, |s| s.grad_norm);
    Err(StationaryError::NoConvergence { iterations: opts.max_iter, residual: last })
}

#[allow(clippy::too_many_arguments)]
fn polish<T: Scalar>(
    prob: &StationaryProblem<'_, T>,
    path: &[Field<T>],
    e: &[T],
    k: usize,
    d_low: T,
    min_sample: T,
    trace: Vec<DeformationStep>,
    opts: &MountainPassOptions<T>,
) -> Result<MountainPassResult<T>, StationaryError> {
    let newton = StationaryProblem { newton: opts.polish, ..prob.clone() };
    let solution = newton.newton(&path[k])?;
    let phi = &path[0];
    let (grid, tol) = (prob.grid, T::lit(1e-6) * grid_norm(prob.grid, phi));
    if grid.l2_norm(&(&solution.field - phi)) <= tol || grid.l2_norm(&(&solution.field + phi)) <= tol {
        return Err(StationaryError::CollapseToEndpoint { trace });
    }
    Ok(MountainPassResult {
        solution,
        endpoint_energy: d_low,
        min_sample_energy: min_sample,
        path: path.to_vec(),
        path_energies: e.to_vec(),
        trace,
    })
}

fn grid_norm<T: Scalar>(grid: &Grid<T>, u: &Field<T>) -> T {
    grid.l2_norm(u).max(T::one())
}

/// Redistributes `path[0..=k]` and `path[k..]` to equal H¹ arc length keeping
/// `path[0]`, `path[k]` and the last sample fixed.
fn reparametrize<T: Scalar>(
    grid: &Grid<T>,
    path: &[Field<T>],
    k: usize,
    project: &(dyn Fn(&Field<T>) -> Option<Field<T>> + Sync),
) -> Vec<Field<T>> {
    let mut out = Vec::with_capacity(path.len());
    out.extend(redistribute(grid, &path[..=k], project));
    out.pop();
    out.extend(redistribute(grid, &path[k..], project));
    out
}

fn redistribute<T: Scalar>(
    grid: &Grid<T>,
    seg: &[Field<T>],
    project: &(dyn Fn(&Field<T>) -> Option<Field<T>> + Sync),
) -> Vec<Field<T>> {
    let n = seg.len();
    if n <= 2 {
        return seg.to_vec();
    }
    let mut cum = vec![T::zero(); n];
    for j in 1..n {
        cum[j] = cum[j - 1] + h1_dist(grid, &seg[j], &seg[j - 1]);
    }
    let total = cum[n - 1];
    if !(total > T::zero()) {
        return seg.to_vec();
    }
    let targets: Vec<T> = (0..n).map(|j| total * T::from_count(j) / T::from_count(n - 1)).collect();
    let mut out = Vec::with_capacity(n);
    out.push(seg[0].clone());
    let mut idx = 0;
    for &s in &targets[1..n - 1] {
        while idx + 1 < n - 1 && cum[idx + 1] < s {
            idx += 1;
        }
        let span = cum[idx + 1] - cum[idx];
        let w = if span > T::zero() { (s - cum[idx]) / span } else { T::zero() };
        let raw = seg[idx].scaled(T::one() - w).add_scaled(w, &seg[idx + 1]);
        out.push(project(&raw).unwrap_or_else(|| seg[idx].clone()));
    }
    out.push(seg[n - 1].clone());
    out
}

/// Connected components of `{u > θ}` plus those of `{u < −θ}` under grid
/// adjacency, with `θ = 1e−8·max|u|`.
pub fn sign_domains<T: Scalar>(grid: &Grid<T>, u: &Field<T>) -> usize {
    let theta = T::lit(1e-8) * u.max_abs();
    if u.max_abs() == T::zero() {
        return 0;
    }
    let label = |v: T| -> i8 {
        if v > theta {
            1
        } else if v < -theta {
            -1
        } else {
            0
        }
    };
    let mut seen = vec![false; grid.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..grid.len() {
        let s = label(u[start]);
        if s == 0 || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(node) = queue.pop_front() {
            for nb in grid.neighbors(node) {
                if !seen[nb] && label(u[nb]) == s {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
    }
    count
}

/// Free-function form of [`StationaryProblem::solve_positive`].
pub fn solve_positive<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    init: &Field<T>,
) -> Result<EquilibriumResult<T>, StationaryError> {
    StationaryProblem::new(grid, params)?.solve_positive(init)
}

/// Equilibria `{0, φ, −φ}` plus `±u*` when given, for trajectory
/// classification.
pub fn equilibrium_set<T: Scalar>(grid: &Grid<T>, phi: &Field<T>, u_star: Option<&Field<T>>) -> Vec<Equilibrium<T>> {
    let mut v = vec![
        Equilibrium::new("0", Field::zeros(grid)),
        Equilibrium::new("phi", phi.clone()),
        Equilibrium::new("-phi", -phi),
    ];
    if let Some(u) = u_star {
        v.push(Equilibrium::new("u*", u.clone()));
        v.push(Equilibrium::new("-u*", -u));
    }
    v
}

/// Fixed-step configuration used by probes that need reproducible time grids.
pub fn fixed_stepper<T: Scalar>(dt: T, horizon: T) -> StepperConfig<T> {
    StepperConfig { dt, horizon, policy: DtPolicy::Fixed, ..StepperConfig::default() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, build_weight, DomainSpec, WeightSpec};

    fn setup(n: usize, lambda: f64) -> (Grid<f64>, ProblemParams<f64>) {
        let g = build_grid(&DomainSpec::interval(1.0_f64, n, (0.4, 0.7))).unwrap();
        let b = build_weight(&g, &WeightSpec::plateau(1.0)).unwrap();
        let p = ProblemParams::new(&g, lambda, 3.0, b).unwrap();
        (g, p)
    }

    #[test]
    fn sign_domain_counts() {
        let (g, _) = setup(99, 20.0);
        let s = dirichlet_spectrum(&g, 2).unwrap();
        assert_eq!(sign_domains(&g, s.field(0)), 1);
        assert_eq!(sign_domains(&g, s.field(1)), 2);
        assert_eq!(sign_domains(&g, &Field::zeros(&g)), 0);
    }

    #[test]
    fn positive_solution_at_twenty() {
        let (g, p) = setup(199, 20.0);
        let prob = StationaryProblem::new(&g, &p).unwrap();
        let init = prob.default_init().unwrap();
        let res = prob.solve_positive(&init).unwrap();
        assert!(res.residual_norm <= 1e-9);
        assert!(res.field.min_value() > 0.0);
        assert!(res.energy < 0.0);
        assert_eq!(res.nehari_report.s_class, crate::nehari::SClass::SPlus);
        assert_eq!(res.morse_index, 0);
        let neg = prob.solve_signed(&-&init).unwrap();
        assert_eq!(neg.field, -res.field.clone());
    }

    #[test]
    fn subcritical_collapses_to_zero() {
        let (g, p) = setup(199, 5.0);
        let prob = StationaryProblem::new(&g, &p).unwrap();
        let init = prob.default_init().unwrap();
        assert!(matches!(prob.solve_positive(&init), Err(StationaryError::NotInRange { .. })));
        assert!(matches!(prob.solve_positive_forced(&init), Err(StationaryError::ConvergedToZero { .. })));
    }

    #[test]
    fn probe_guard() {
        let (g, p) = setup(99, 60.0);
        let prob = StationaryProblem::new(&g, &p).unwrap();
        assert!(matches!(
            prob.nonexistence_probe(&ProbeConfig::default()),
            Err(StationaryError::ProbePrecondition { .. })
        ));
    }

    #[test]
    fn path_spec_validation() {
        let bad = PathSpec { samples_per_segment: 4, ..PathSpec::<f64>::default() };
        assert!(bad.validate().is_err());
        let bad = PathSpec { epsilon: 0.0, ..PathSpec::<f64>::default() };
        assert!(bad.validate().is_err());
    }
}
