//! First-order IMEX integration of `∂ₜu = Δu + λu + b|u|^{ν−1}u`:
//! `(I − Δt·Δ_h) u⁺ = u + Δt·f(u)` with `f(u) = λu + b|u|^{ν−1}u`.
//!
//! The scheme is exactly odd under `u ↦ −u`. One step satisfies
//! `I(u⁺) − I(u) + Δt‖(u⁺ − u)/Δt‖² = O(Δt²)`, which is what
//! [`lyapunov_check`] measures.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::domain::{Field, Grid};
use crate::linalg::{conjugate_gradient, BandLu, BandMatrix, LinalgError};
use crate::nehari::{classify, energy, nehari_j, residual_norm, NehariReport, NehariSide, ProblemParams};
use crate::scalar::{odd_pow, Scalar};
use crate::spectral::{morse_count, SpectrumResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParabolicError {
    #[error("explicit reaction term overflowed at step {step}; reduce Δt")]
    Overflow { step: usize },
    #[error("invalid stepper configuration: {0}")]
    InvalidConfig(String),
    #[error("energy increased beyond C·Δt² at samples {steps:?}")]
    MonotonicityViolation { steps: Vec<usize> },
    #[error("trajectory needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("no positive linearized eigenvalue computed; Morse count not certified")]
    NoUnstableEigenvalueComputed,
    #[error("probe index {index} is not a stable direction (Morse count {morse}, μ = {mu:e})")]
    InvalidProbeIndex { index: usize, morse: usize, mu: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Inner solver for `(I − Δt·Δ_h) x = r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerSolve {
    /// Cached banded factorization.
    Direct,
    ConjugateGradient { tol: f64, max_iter: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    Fixed,
    /// `Δt = min(cap, c/(λ + ν·max|b||u|^{ν−1} + 1))`, re-evaluated every
    /// `every` steps.
    Adaptive { constant: f64, every: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepperConfig<T> {
    /// Step, or step cap under the adaptive policy.
    pub dt: T,
    pub policy: DtPolicy,
    pub horizon: T,
    pub sample_stride: usize,
    /// `‖u‖_{L²}` at or above which a monotone trailing window flags growth.
    pub growth_cutoff: T,
    pub growth_window: usize,
    /// L² distance and residual thresholds for convergence.
    pub converge_tol: T,
    pub stop_on_classification: bool,
    pub inner: InnerSolve,
}

impl<T: Scalar> Default for StepperConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(1e-3),
            policy: DtPolicy::Adaptive { constant: 0.2, every: 100 },
            horizon: T::lit(20.0),
            sample_stride: 10,
            growth_cutoff: T::lit(1e3),
            growth_window: 10,
            converge_tol: T::lit(1e-6),
            stop_on_classification: true,
            inner: InnerSolve::Direct,
        }
    }
}

impl<T: Scalar> StepperConfig<T> {
    pub fn validate(&self) -> Result<(), ParabolicError> {
        let bad = |m: &str| Err(ParabolicError::InvalidConfig(m.to_string()));
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return bad("dt must be positive");
        }
        if !(self.horizon >= T::zero()) || !self.horizon.is_finite() {
            return bad("horizon must be nonnegative");
        }
        if self.sample_stride == 0 {
            return bad("sample stride must be at least 1");
        }
        if self.growth_window < 2 {
            return bad("growth window must be at least 2");
        }
        if let DtPolicy::Adaptive { constant, every } = self.policy {
            if !(constant > 0.0) || every == 0 {
                return bad("adaptive policy needs a positive constant and period");
            }
        }
        Ok(())
    }

    /// Step chosen by the policy for the current state.
    pub fn step_for(&self, params: &ProblemParams<T>, u: &Field<T>) -> T {
        match self.policy {
            DtPolicy::Fixed => self.dt,
            DtPolicy::Adaptive { constant, .. } => stable_dt(params, u, T::lit(constant)).min(self.dt),
        }
    }
}

/// `c/(λ + ν·max_x |b(x)||u(x)|^{ν−1} + 1)`; never smaller than the bound
/// with `b₀·‖u‖_∞^{ν−1}`.
pub fn stable_dt<T: Scalar>(params: &ProblemParams<T>, u: &Field<T>, c: T) -> T {
    let nu = params.nu();
    let growth = u
        .iter()
        .zip(params.weight().iter())
        .filter(|(&v, _)| v != T::zero())
        .fold(T::zero(), |m, (&v, &b)| m.max(b.abs() * v.abs().powf(nu - T::one())));
    c / (params.lambda() + nu * growth + T::one())
}

/// `f(u) = λu + b|u|^{ν−1}u`.
fn reaction<T: Scalar>(params: &ProblemParams<T>, u: &Field<T>) -> Vec<T> {
    u.iter()
        .zip(params.weight().iter())
        .map(|(&v, &b)| params.lambda() * v + b * odd_pow(v, params.nu()))
        .collect()
}

fn diffusion_matrix<T: Scalar>(grid: &Grid<T>, dt: T) -> BandMatrix<T> {
    grid.laplacian_matrix().scaled_shifted(dt, T::one())
}

/// One IMEX step with a freshly factored system.
pub fn step<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    u: &Field<T>,
    dt: T,
) -> Result<Field<T>, ParabolicError> {
    Stepper::new(grid, params, InnerSolve::Direct).advance(u, dt, 0)
}

/// IMEX stepper caching the factorization for the last `Δt`.
pub struct Stepper<'a, T> {
    grid: &'a Grid<T>,
    params: &'a ProblemParams<T>,
    inner: InnerSolve,
    cache: Option<(T, BandMatrix<T>, Option<BandLu<T>>)>,
}

impl<'a, T: Scalar> Stepper<'a, T> {
    pub fn new(grid: &'a Grid<T>, params: &'a ProblemParams<T>, inner: InnerSolve) -> Self {
        Self { grid, params, inner, cache: None }
    }

    fn prepare(&mut self, dt: T) -> Result<(), ParabolicError> {
        if !matches!(&self.cache, Some((c, _, _)) if *c == dt) {
            let m = diffusion_matrix(self.grid, dt);
            let lu = match self.inner {
                InnerSolve::Direct => Some(m.lu()?),
                InnerSolve::ConjugateGradient { .. } => None,
            };
            self.cache = Some((dt, m, lu));
        }
        Ok(())
    }

    /// `u⁺` from `u`; `step` is only used in the overflow diagnostic.
    pub fn advance(&mut self, u: &Field<T>, dt: T, step: usize) -> Result<Field<T>, ParabolicError> {
        self.prepare(dt)?;
        let f = reaction(self.params, u);
        let rhs: Vec<T> = u.iter().zip(&f).map(|(&v, &fv)| v + dt * fv).collect();
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(ParabolicError::Overflow { step });
        }
        let (_, m, lu) = self.cache.as_ref().expect("prepared");
        let next = match (lu, self.inner) {
            (Some(lu), _) => lu.solve(&rhs),
            (None, InnerSolve::ConjugateGradient { tol, max_iter }) => {
                conjugate_gradient(|x, y| m.mul_vec_into(x, y), &rhs, Some(u.as_slice()), T::lit(tol), max_iter)?.0
            }
            (None, InnerSolve::Direct) => unreachable!("direct solve always factors"),
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(ParabolicError::Overflow { step });
        }
        Ok(Field::from_vec(next))
    }
}

/// Named candidate limit for trajectory classification.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium<T> {
    pub name: String,
    pub field: Field<T>,
}

impl<T: Scalar> Equilibrium<T> {
    pub fn new(name: impl Into<String>, field: Field<T>) -> Self {
        Self { name: name.into(), field }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Converged(String),
    Growing,
    Undecided,
}

impl Classification {
    pub fn label(&self) -> String {
        match self {
            Self::Converged(name) => format!("converged({name})"),
            Self::Growing => "growing".to_string(),
            Self::Undecided => "undecided".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample<T> {
    pub step: usize,
    pub t: T,
    pub energy: T,
    pub l2: T,
    pub h1: T,
    /// `‖(uⁿ − uⁿ⁻¹)/Δt‖_{L²}` of the last step; zero at `t = 0`.
    pub ut_l2: T,
    pub l2_omega0: T,
    pub side: NehariSide,
    /// `Σ Δt‖(uⁿ⁺¹ − uⁿ)/Δt‖²` up to this sample.
    pub dissipation: T,
    /// `Σ Δt²` up to this sample.
    pub dt_sq_sum: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub samples: Vec<TrajectorySample<T>>,
    pub final_field: Field<T>,
    pub classification: Classification,
    pub steps: usize,
    /// `sup ‖u(t)‖_{H¹}` over every step.
    pub sup_h1: T,
    /// Whether a nodewise-positive start stayed positive; `None` otherwise.
    pub positivity_preserved: Option<bool>,
    pub final_residual: T,
}

impl<T: Scalar> TrajectoryRecord<T> {
    pub fn times(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn energies(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.energy).collect()
    }

    pub fn final_time(&self) -> T {
        self.samples.last().map_or(T::zero(), |s| s.t)
    }
}

/// Integrates to the horizon, stopping early on classification when
/// configured.
pub fn evolve<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    u0: &Field<T>,
    cfg: &StepperConfig<T>,
    equilibria: &[Equilibrium<T>],
) -> Result<TrajectoryRecord<T>, ParabolicError> {
    evolve_observed(grid, params, u0, cfg, equilibria, |_, _, _| true)
}

/// [`evolve`] with an observer called after every step with
/// `(step, t, u)`; returning `false` stops the run.
pub fn evolve_observed<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    u0: &Field<T>,
    cfg: &StepperConfig<T>,
    equilibria: &[Equilibrium<T>],
    mut observe: impl FnMut(usize, T, &Field<T>) -> bool,
) -> Result<TrajectoryRecord<T>, ParabolicError> {
    cfg.validate()?;
    let mut stepper = Stepper::new(grid, params, cfg.inner);
    let mut u = u0.clone();
    let mut t = T::zero();
    let mut n = 0usize;
    let mut dt = cfg.step_for(params, &u);
    let mut diss = T::zero();
    let mut dt_sq = T::zero();
    let mut ut = T::zero();
    let mut sup_h1 = grid.h1_norm(&u);
    let starts_positive = u.min_value() > T::zero();
    let mut positive = starts_positive;
    let mut samples = vec![sample(grid, params, &u, n, t, ut, diss, dt_sq)];
    let mut classification = classify_state(grid, params, &u, cfg, equilibria, &samples);
    let tiny = cfg.horizon * T::lit(1e-12);
    while t < cfg.horizon - tiny && !(cfg.stop_on_classification && classification != Classification::Undecided) {
        if let DtPolicy::Adaptive { every, .. } = cfg.policy {
            if n.is_multiple_of(every) {
                dt = cfg.step_for(params, &u);
            }
        }
        let h = dt.min(cfg.horizon - t);
        let next = match stepper.advance(&u, h, n) {
            Ok(v) => v,
            Err(ParabolicError::Overflow { .. }) => {
                classification = if trailing_growth(&samples, cfg.growth_window) {
                    Classification::Growing
                } else {
                    Classification::Undecided
                };
                break;
            }
            Err(e) => return Err(e),
        };
        let du2: T = next.iter().zip(u.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>() * grid.cell_measure();
        diss += du2 / h;
        dt_sq += h * h;
        ut = du2.sqrt() / h;
        u = next;
        t += h;
        n += 1;
        sup_h1 = sup_h1.max(grid.h1_norm(&u));
        if starts_positive && positive && u.min_value() <= T::zero() {
            positive = false;
        }
        let go_on = observe(n, t, &u);
        let at_end = t >= cfg.horizon - tiny || !go_on;
        if n.is_multiple_of(cfg.sample_stride) || at_end {
            samples.push(sample(grid, params, &u, n, t, ut, diss, dt_sq));
            classification = classify_state(grid, params, &u, cfg, equilibria, &samples);
        }
        if !go_on {
            break;
        }
    }
    if samples.last().map(|s| s.step) != Some(n) {
        samples.push(sample(grid, params, &u, n, t, ut, diss, dt_sq));
        classification = classify_state(grid, params, &u, cfg, equilibria, &samples);
    }
    Ok(TrajectoryRecord {
        samples,
        final_residual: residual_norm(grid, params, &u),
        final_field: u,
        classification,
        steps: n,
        sup_h1,
        positivity_preserved: starts_positive.then_some(positive),
    })
}

#[allow(clippy::too_many_arguments)]
fn sample<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    u: &Field<T>,
    step: usize,
    t: T,
    ut_l2: T,
    dissipation: T,
    dt_sq_sum: T,
) -> TrajectorySample<T> {
    TrajectorySample {
        step,
        t,
        energy: energy(grid, params, u),
        l2: grid.l2_norm(u),
        h1: grid.h1_norm(u),
        ut_l2,
        l2_omega0: grid.l2_norm_omega0(u),
        side: side_of(grid, params, u),
        dissipation,
        dt_sq_sum,
    }
}

fn side_of<T: Scalar>(grid: &Grid<T>, params: &ProblemParams<T>, u: &Field<T>) -> NehariSide {
    if u.is_zero() {
        return NehariSide::Origin;
    }
    let j = nehari_j(grid, params, u);
    let tol = crate::nehari::manifold_tolerance(crate::domain::h1_seminorm_sq(grid, u));
    if j > tol {
        NehariSide::Plus
    } else if j < -tol {
        NehariSide::Minus
    } else {
        NehariSide::Manifold
    }
}

fn trailing_growth<T: Scalar>(samples: &[TrajectorySample<T>], window: usize) -> bool {
    samples.len() >= window && samples[samples.len() - window..].windows(2).all(|w| w[1].l2 > w[0].l2)
}

fn classify_state<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    u: &Field<T>,
    cfg: &StepperConfig<T>,
    equilibria: &[Equilibrium<T>],
    samples: &[TrajectorySample<T>],
) -> Classification {
    let last = samples.last().expect("at least one sample");
    if last.l2 >= cfg.growth_cutoff && trailing_growth(samples, cfg.growth_window) {
        return Classification::Growing;
    }
    let near: Vec<&Equilibrium<T>> =
        equilibria.iter().filter(|e| grid.l2_norm(&(u - &e.field)) <= cfg.converge_tol).collect();
    if let Some(e) = near.first() {
        if residual_norm(grid, params, u) <= cfg.converge_tol {
            return Classification::Converged(e.name.clone());
        }
    }
    Classification::Undecided
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovOptions<T> {
    /// `C` in the per-step tolerance `C·Δt²`.
    pub constant: T,
    /// Samples before this time are skipped.
    pub burn_in: T,
    /// Increments below `roundoff·max(1, |I|)` are attributed to rounding.
    pub roundoff: T,
}

impl<T: Scalar> Default for LyapunovOptions<T> {
    fn default() -> Self {
        Self { constant: T::lit(MONOTONE_CONSTANT), burn_in: T::zero(), roundoff: T::lit(ROUNDOFF_FLOOR) }
    }
}

/// Default `C` for the monotonicity tolerance `C·Δt²` per step.
pub const MONOTONE_CONSTANT: f64 = 1e-6;

/// Default relative rounding floor for energy increments.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport<T> {
    /// Consecutive sample pairs checked.
    pub pairs: usize,
    /// Largest `I(uᵐ⁺¹) − I(uᵐ)`.
    pub max_increment: T,
    /// Largest `|ΔI + Σ Δt‖Δu/Δt‖²| / Σ Δt²` over sample pairs.
    pub empirical_c: T,
    /// Same quantity for each pair.
    pub defect_ratios: Vec<T>,
}

/// Checks `I` nonincreasing within `C·Σ Δt²` between samples and reports the
/// empirical constant of the discrete dissipation identity.
pub fn lyapunov_check<T: Scalar>(
    record: &TrajectoryRecord<T>,
    opts: &LyapunovOptions<T>,
) -> Result<LyapunovReport<T>, ParabolicError> {
    let s: Vec<&TrajectorySample<T>> = record.samples.iter().filter(|s| s.t >= opts.burn_in).collect();
    if s.len() < 2 {
        return Err(ParabolicError::TooFewSamples(s.len()));
    }
    let mut bad = Vec::new();
    let mut max_inc = T::neg_infinity();
    let mut ratios = Vec::with_capacity(s.len() - 1);
    for (k, w) in s.windows(2).enumerate() {
        let inc = w[1].energy - w[0].energy;
        let dsq = w[1].dt_sq_sum - w[0].dt_sq_sum;
        max_inc = max_inc.max(inc);
        let floor = opts.roundoff * w[0].energy.abs().max(w[1].energy.abs()).max(T::one());
        if inc > opts.constant * dsq + floor {
            bad.push(k + 1);
        }
        let defect = inc + (w[1].dissipation - w[0].dissipation);
        ratios.push(if dsq > T::zero() { defect.abs() / dsq } else { T::zero() });
    }
    if !bad.is_empty() {
        return Err(ParabolicError::MonotonicityViolation { steps: bad });
    }
    let empirical_c = ratios.iter().fold(T::zero(), |m, &r| m.max(r));
    Ok(LyapunovReport { pairs: ratios.len(), max_increment: max_inc, empirical_c, defect_ratios: ratios })
}

/// Per-step dissipation defects `I(u⁺) − I(u) + Δt‖(u⁺ − u)/Δt‖²` over
/// `steps` fixed steps of size `dt` after a burn-in of `burn_in` (same step).
pub fn dissipation_defects<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    u0: &Field<T>,
    dt: T,
    burn_in: T,
    window: T,
) -> Result<Vec<T>, ParabolicError> {
    let mut stepper = Stepper::new(grid, params, InnerSolve::Direct);
    let mut u = u0.clone();
    let burn = (burn_in / dt).round().to_usize().unwrap_or(0);
    let count = (window / dt).round().to_usize().unwrap_or(0).max(1);
    for n in 0..burn {
        u = stepper.advance(&u, dt, n)?;
    }
    let mut e = energy(grid, params, &u);
    let mut out = Vec::with_capacity(count);
    for n in 0..count {
        let next = stepper.advance(&u, dt, burn + n)?;
        let du2: T = next.iter().zip(u.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>() * grid.cell_measure();
        let e1 = energy(grid, params, &next);
        out.push(e1 - e + du2 / dt);
        e = e1;
        u = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult<T> {
    /// Zero-based eigen-index.
    pub index: usize,
    pub mu: T,
    pub epsilon: T,
    /// `∫ u* ψᵢ`.
    pub a_i: T,
    /// `ε μᵢ aᵢ`.
    pub prediction: T,
    /// `J(u* + εψᵢ)`.
    pub measured: T,
    pub defect: T,
    /// Time spent within `δ = 10ε` of `u*` in L².
    pub dwell_time: T,
    pub dwell_radius: T,
}

/// First-order probe of `J` along a stable direction of `u*`.
///
/// `index` is zero-based and must be at least the Morse count (so `μᵢ > 0`).
pub fn stable_probe<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    u_star: &Field<T>,
    spectrum: &SpectrumResult<T>,
    index: usize,
    epsilon: T,
    cfg: &StepperConfig<T>,
) -> Result<ProbeResult<T>, ParabolicError> {
    let q = morse_count(spectrum).map_err(|_| ParabolicError::NoUnstableEigenvalueComputed)?;
    let mu = if index < spectrum.len() { spectrum.eigenvalue(index) } else { T::nan() };
    if index < q || !(mu > T::zero()) {
        return Err(ParabolicError::InvalidProbeIndex { index, morse: q, mu: mu.as_f64() });
    }
    let psi = spectrum.field(index);
    let a_i = grid.inner(u_star, psi);
    let u0 = u_star.add_scaled(epsilon, psi);
    let measured = nehari_j(grid, params, &u0);
    let prediction = epsilon * mu * a_i;
    let radius = T::lit(10.0) * epsilon.abs();
    let dwell_time = dwell_time(grid, params, &u0, u_star, radius, cfg)?;
    Ok(ProbeResult {
        index,
        mu,
        epsilon,
        a_i,
        prediction,
        measured,
        defect: (measured - prediction).abs(),
        dwell_time,
        dwell_radius: radius,
    })
}

/// Time until `‖u(t) − center‖_{L²}` first exceeds `radius` (capped at the
/// horizon).
pub fn dwell_time<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    u0: &Field<T>,
    center: &Field<T>,
    radius: T,
    cfg: &StepperConfig<T>,
) -> Result<T, ParabolicError> {
    let mut exit = None;
    let run_cfg = StepperConfig { stop_on_classification: false, ..cfg.clone() };
    let rec = evolve_observed(grid, params, u0, &run_cfg, &[], |_, t, u| {
        if grid.l2_norm(&(u - center)) > radius {
            exit = Some(t);
            false
        } else {
            true
        }
    })?;
    Ok(exit.unwrap_or(rec.final_time()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinRow<T> {
    pub seed_id: usize,
    pub initial: NehariReport<T>,
    pub classification: Classification,
    pub final_energy: T,
    pub final_time: T,
}

/// Evolves every seed independently (in parallel) and tabulates outcomes in
/// seed order.
pub fn basin_scan<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    seeds: &[Field<T>],
    cfg: &StepperConfig<T>,
    equilibria: &[Equilibrium<T>],
) -> Result<Vec<BasinRow<T>>, ParabolicError> {
    seeds
        .par_iter()
        .enumerate()
        .map(|(id, seed)| {
            let rec = evolve(grid, params, seed, cfg, equilibria)?;
            Ok(BasinRow {
                seed_id: id,
                initial: classify(grid, params, seed),
                final_energy: energy(grid, params, &rec.final_field),
                final_time: rec.final_time(),
                classification: rec.classification,
            })
        })
        .collect()
}

/// Seeded battery of smooth random initial data with H¹ norms spread
/// uniformly over `(0, max_h1]`.
pub fn random_battery<T: Scalar>(grid: &Grid<T>, count: usize, max_h1: T, seed: u64) -> Vec<Field<T>> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = T::lit(rng.random_range(0.05..=1.0));
            crate::random::field_with_h1(grid, &mut rng, r * max_h1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, build_weight, DomainSpec, WeightSpec};
    use crate::spectral::dirichlet_spectrum;

    fn setup(n: usize, lambda: f64, b0: f64) -> (Grid<f64>, ProblemParams<f64>) {
        let g = build_grid(&DomainSpec::interval(1.0_f64, n, (0.4, 0.7))).unwrap();
        let b = if b0 == 0.0 { Field::zeros(&g) } else { build_weight(&g, &WeightSpec::plateau(b0)).unwrap() };
        let p = ProblemParams::new(&g, lambda, 3.0, b).unwrap();
        (g, p)
    }

    #[test]
    fn zero_is_fixed() {
        let (g, p) = setup(50, 20.0, 1.0);
        assert!(step(&g, &p, &Field::zeros(&g), 1e-3).unwrap().is_zero());
    }

    #[test]
    fn heat_decay_of_eigenfield() {
        let (g, p) = setup(80, 0.0, 0.0);
        let s = dirichlet_spectrum(&g, 1).unwrap();
        let u = s.field(0).clone();
        let dt = 1e-2;
        let next = step(&g, &p, &u, dt).unwrap();
        let expected = u.scaled(1.0 / (1.0 + dt * s.eigenvalue(0)));
        assert!(g.l2_norm(&(&next - &expected)) < 1e-10);
    }

    #[test]
    fn cg_matches_direct() {
        let (g, p) = setup(60, 20.0, 1.0);
        let u = Field::from_fn(&g, |x| (std::f64::consts::PI * x[0]).sin());
        let a = Stepper::new(&g, &p, InnerSolve::Direct).advance(&u, 1e-3, 0).unwrap();
        let b = Stepper::new(&g, &p, InnerSolve::ConjugateGradient { tol: 1e-14, max_iter: 500 })
            .advance(&u, 1e-3, 0)
            .unwrap();
        assert!(g.l2_norm(&(&a - &b)) < 1e-10);
    }

    #[test]
    fn odd_flow_is_exact() {
        let (g, p) = setup(60, 20.0, 1.0);
        let u0 = crate::random::smooth_field(&g, &mut ChaCha8Rng::seed_from_u64(1));
        let cfg = StepperConfig { horizon: 0.05, ..StepperConfig::default() };
        let a = evolve(&g, &p, &u0, &cfg, &[]).unwrap();
        let b = evolve(&g, &p, &(-&u0), &cfg, &[]).unwrap();
        assert_eq!(a.final_field, -b.final_field.clone());
        assert_eq!(a.energies(), b.energies());
    }

    #[test]
    fn heat_energy_strictly_decreases() {
        let (g, p) = setup(60, 0.0, 0.0);
        let u0 = crate::random::smooth_field(&g, &mut ChaCha8Rng::seed_from_u64(2));
        let cfg = StepperConfig { horizon: 0.1, sample_stride: 1, policy: DtPolicy::Fixed, ..StepperConfig::default() };
        let rec = evolve(&g, &p, &u0, &cfg, &[]).unwrap();
        assert!(rec.energies().windows(2).all(|w| w[1] < w[0]));
        let rep = lyapunov_check(&rec, &LyapunovOptions::default()).unwrap();
        assert!(rep.max_increment < 0.0);
    }

    #[test]
    fn growth_is_flagged() {
        let (g, p) = setup(40, 30.0, 0.0);
        let u0 = Field::from_fn(&g, |x| (std::f64::consts::PI * x[0]).sin());
        let cfg = StepperConfig { horizon: 10.0, growth_cutoff: 1e3, ..StepperConfig::default() };
        let rec = evolve(&g, &p, &u0, &cfg, &[]).unwrap();
        assert_eq!(rec.classification, Classification::Growing);
    }

    #[test]
    fn config_validation() {
        let bad = StepperConfig { dt: -1.0, ..StepperConfig::<f64>::default() };
        assert!(matches!(bad.validate(), Err(ParabolicError::InvalidConfig(_))));
        let bad = StepperConfig { sample_stride: 0, ..StepperConfig::<f64>::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn too_few_samples() {
        let (g, _) = setup(10, 20.0, 1.0);
        let rec = TrajectoryRecord {
            samples: vec![],
            final_field: Field::zeros(&g),
            classification: Classification::Undecided,
            steps: 0,
            sup_h1: 0.0,
            positivity_preserved: None,
            final_residual: 0.0,
        };
        assert!(matches!(lyapunov_check(&rec, &LyapunovOptions::default()), Err(ParabolicError::TooFewSamples(0))));
    }
}
