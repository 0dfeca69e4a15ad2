//! Lowest eigenpairs of the discrete Dirichlet Laplacian on `Ω` and on `Ω₀`,
//! and of the linearization `L = −Δ − f_u(λ, x, φ)` at a stationary state.
//!
//! The eigensolver is shifted inverse subspace iteration: the shift sits
//! below the Gershgorin bound so `A − σI` is positive definite and is factored
//! once with the banded LU; each sweep applies the inverse to a block of
//! vectors, re-orthonormalizes, and extracts Ritz pairs. The block carries
//! guard vectors so clustered or repeated eigenvalues converge together.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::domain::{Field, Grid};
use crate::linalg::{orthonormalize, symmetric_eigen, BandMatrix, LinalgError};
use crate::nehari::ProblemParams;
use crate::scalar::{norm2, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("requested {requested} eigenpairs but the operator has dimension {dimension}")]
    TooManyEigenpairs { requested: usize, dimension: usize },
    #[error("eigenpair {index} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { index: usize, iterations: usize, residual: f64 },
    #[error("Ω₀ contains no grid nodes")]
    EmptySubdomain,
    #[error("eigenvalues are not sorted nondecreasingly at position {0}")]
    Unsorted(usize),
    #[error("all {0} computed eigenvalues are nonpositive; Morse count is inconclusive")]
    Inconclusive(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Which operator a spectrum belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// `−Δ_h` on `Ω`.
    DirichletOmega,
    /// `−Δ_h` on `Ω₀` nodes, Dirichlet on `∂Ω₀`, eigenfields zero-extended.
    DirichletOmega0,
    /// `−Δ_h − (λ + ν b|φ|^{ν−1})` at a state `φ`.
    Linearized,
}

impl OperatorKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::DirichletOmega => "dirichlet-omega",
            Self::DirichletOmega0 => "dirichlet-omega0",
            Self::Linearized => "linearized",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    pub value: T,
    /// L²-normalized under the grid quadrature.
    pub field: Field<T>,
    /// `‖Aψ − μψ‖_{L²}`.
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult<T> {
    kind: OperatorKind,
    pairs: Vec<EigenPair<T>>,
}

impl<T: Scalar> SpectrumResult<T> {
    /// Rejects eigenvalue lists that are not nondecreasing.
    pub fn new(kind: OperatorKind, pairs: Vec<EigenPair<T>>) -> Result<Self, SpectralError> {
        if let Some(i) = pairs.windows(2).position(|w| w[1].value < w[0].value) {
            return Err(SpectralError::Unsorted(i + 1));
        }
        Ok(Self { kind, pairs })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn pairs(&self) -> &[EigenPair<T>] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn eigenvalue(&self, i: usize) -> T {
        self.pairs[i].value
    }

    pub fn field(&self, i: usize) -> &Field<T> {
        &self.pairs[i].field
    }
}

#[derive(Debug, Clone)]
pub struct EigenOptions<T> {
    /// Converged when `residual ≤ tol·max(1, |μ|)`.
    pub tol: T,
    pub max_iter: usize,
    /// Extra block vectors beyond the requested count.
    pub guard: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for EigenOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-10), max_iter: 2000, guard: 6, seed: 0x5eed }
    }
}

/// Operators up to this size are diagonalized densely.
const DENSE_LIMIT: usize = 48;

/// `k` smallest eigenpairs of a symmetric banded matrix, as unit Euclidean
/// vectors, with Euclidean residuals.
pub fn lowest_eigenpairs<T: Scalar>(
    a: &BandMatrix<T>,
    k: usize,
    opts: &EigenOptions<T>,
) -> Result<Vec<(T, Vec<T>, T)>, SpectralError> {
    let n = a.size();
    if k == 0 || k > n {
        return Err(SpectralError::TooManyEigenpairs { requested: k, dimension: n });
    }
    if n <= DENSE_LIMIT {
        let dense: Vec<T> = (0..n * n).map(|idx| a.get(idx / n, idx % n)).collect();
        let (vals, vecs) = symmetric_eigen(&dense, n);
        return Ok((0..k)
            .map(|j| {
                let x: Vec<T> = (0..n).map(|r| vecs[r * n + j]).collect();
                let res = residual(a, &x, vals[j]);
                (vals[j], x, res)
            })
            .collect());
    }

    let p = (k + opts.guard.max(k)).min(n);
    let span = a.gershgorin_lower().abs().max(T::one());
    let shift = a.gershgorin_lower() - T::lit(1e-2) * span;
    let lu = a.scaled_shifted(T::one(), -shift).lu()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_col = |rng: &mut ChaCha8Rng| -> Vec<T> { (0..n).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect() };
    let mut x: Vec<Vec<T>> = (0..p).map(|_| random_col(&mut rng)).collect();
    orthonormalize(&mut x);

    let mut last = vec![T::infinity(); k];
    let mut ax = vec![vec![T::zero(); n]; p];
    for it in 0..opts.max_iter {
        let mut y: Vec<Vec<T>> = x.iter().map(|c| lu.solve(c)).collect();
        if !orthonormalize(&mut y) {
            for c in y.iter_mut() {
                if !norm2(c).is_finite() || (norm2(c) - T::one()).abs() > T::lit(1e-6) {
                    *c = random_col(&mut rng);
                }
            }
            orthonormalize(&mut y);
        }
        let ay: Vec<Vec<T>> = y.iter().map(|c| a.mul_vec(c)).collect();
        let mut h = vec![T::zero(); p * p];
        for i in 0..p {
            for j in i..p {
                let v = crate::scalar::dot(&y[i], &ay[j]);
                h[i * p + j] = v;
                h[j * p + i] = v;
            }
        }
        let (theta, s) = symmetric_eigen(&h, p);
        for j in 0..p {
            let (xj, axj) = (&mut x[j], &mut ax[j]);
            xj.iter_mut().for_each(|v| *v = T::zero());
            axj.iter_mut().for_each(|v| *v = T::zero());
            for i in 0..p {
                let c = s[i * p + j];
                crate::scalar::axpy(c, &y[i], xj);
                crate::scalar::axpy(c, &ay[i], axj);
            }
        }
        let mut all = true;
        for j in 0..k {
            let r: T = ax[j]
                .iter()
                .zip(&x[j])
                .map(|(&av, &xv)| {
                    let d = av - theta[j] * xv;
                    d * d
                })
                .sum::<T>()
                .sqrt();
            last[j] = r;
            if r > opts.tol * theta[j].abs().max(T::one()) {
                all = false;
            }
        }
        if all {
            return Ok((0..k)
                .map(|j| {
                    let res = residual(a, &x[j], theta[j]);
                    (theta[j], x[j].clone(), res)
                })
                .collect());
        }
        if it + 1 == opts.max_iter {
            let index = (0..k).find(|&j| last[j] > opts.tol * theta[j].abs().max(T::one())).unwrap_or(0);
            return Err(SpectralError::NoConvergence {
                index,
                iterations: opts.max_iter,
                residual: last[index].as_f64(),
            });
        }
    }
    unreachable!("loop returns on the final iteration")
}

fn residual<T: Scalar>(a: &BandMatrix<T>, x: &[T], mu: T) -> T {
    let ax = a.mul_vec(x);
    let nx = norm2(x);
    ax.iter()
        .zip(x)
        .map(|(&av, &xv)| {
            let d = av - mu * xv;
            d * d
        })
        .sum::<T>()
        .sqrt()
        / nx
}

/// Applies the sign convention and L² normalization, scattering local
/// vectors into full-grid fields.
fn to_spectrum<T: Scalar>(
    grid: &Grid<T>,
    kind: OperatorKind,
    raw: Vec<(T, Vec<T>, T)>,
    nodes: Option<&[usize]>,
) -> Result<SpectrumResult<T>, SpectralError> {
    let scale = T::one() / grid.cell_measure().sqrt();
    let pairs = raw
        .into_iter()
        .enumerate()
        .map(|(j, (value, mut x, res))| {
            let flip = if j == 0 {
                x.iter().copied().sum::<T>() < T::zero()
            } else {
                let big = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
                x.iter().find(|v| v.abs() > T::lit(1e-8) * big).is_some_and(|&v| v < T::zero())
            };
            if flip {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            let mut full = vec![T::zero(); grid.len()];
            match nodes {
                Some(idx) => idx.iter().zip(&x).for_each(|(&g, &v)| full[g] = v * scale),
                None => full.iter_mut().zip(&x).for_each(|(f, &v)| *f = v * scale),
            }
            EigenPair { value, field: Field::from_vec(full), residual: res }
        })
        .collect();
    SpectrumResult::new(kind, pairs)
}

pub fn dirichlet_spectrum<T: Scalar>(grid: &Grid<T>, k: usize) -> Result<SpectrumResult<T>, SpectralError> {
    dirichlet_spectrum_with(grid, k, &EigenOptions::default())
}

pub fn dirichlet_spectrum_with<T: Scalar>(
    grid: &Grid<T>,
    k: usize,
    opts: &EigenOptions<T>,
) -> Result<SpectrumResult<T>, SpectralError> {
    let raw = lowest_eigenpairs(&grid.laplacian_matrix(), k, opts)?;
    to_spectrum(grid, OperatorKind::DirichletOmega, raw, None)
}

pub fn subdomain_spectrum<T: Scalar>(grid: &Grid<T>, k: usize) -> Result<SpectrumResult<T>, SpectralError> {
    subdomain_spectrum_with(grid, k, &EigenOptions::default())
}

pub fn subdomain_spectrum_with<T: Scalar>(
    grid: &Grid<T>,
    k: usize,
    opts: &EigenOptions<T>,
) -> Result<SpectrumResult<T>, SpectralError> {
    if grid.omega0_count() == 0 {
        return Err(SpectralError::EmptySubdomain);
    }
    let (m, nodes) = grid.omega0_laplacian_matrix();
    let raw = lowest_eigenpairs(&m, k, opts)?;
    to_spectrum(grid, OperatorKind::DirichletOmega0, raw, Some(&nodes))
}

/// `L u = −Δu − f_u(λ, x, φ) u` with `f_u = λ + ν b |φ|^{ν−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedOperator<T> {
    pub base: Field<T>,
    pub coefficient: Field<T>,
}

impl<T: Scalar> LinearizedOperator<T> {
    pub fn new(params: &ProblemParams<T>, state: &Field<T>) -> Self {
        let nu = params.nu();
        let coefficient = state
            .iter()
            .zip(params.weight().iter())
            .map(|(&s, &b)| {
                // ν b |s|^{ν−1} → 0 as s → 0 for ν > 1
                let tail = if s == T::zero() { T::zero() } else { nu * b * s.abs().powf(nu - T::one()) };
                params.lambda() + tail
            })
            .collect();
        Self { base: state.clone(), coefficient: Field::from_vec(coefficient) }
    }

    pub fn matrix(&self, grid: &Grid<T>) -> BandMatrix<T> {
        let neg: Vec<T> = self.coefficient.iter().map(|&c| -c).collect();
        grid.laplacian_matrix().plus_diagonal(&neg)
    }

    pub fn apply(&self, grid: &Grid<T>, u: &Field<T>) -> Field<T> {
        let lu = crate::domain::laplacian_apply(grid, u);
        Field::from_vec(lu.iter().zip(u.iter()).zip(self.coefficient.iter()).map(|((&l, &v), &c)| l - c * v).collect())
    }
}

pub fn linearized_spectrum<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    state: &Field<T>,
    k: usize,
) -> Result<SpectrumResult<T>, SpectralError> {
    linearized_spectrum_with(grid, params, state, k, &EigenOptions::default())
}

pub fn linearized_spectrum_with<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    state: &Field<T>,
    k: usize,
    opts: &EigenOptions<T>,
) -> Result<SpectrumResult<T>, SpectralError> {
    let op = LinearizedOperator::new(params, state);
    let raw = lowest_eigenpairs(&op.matrix(grid), k, opts)?;
    to_spectrum(grid, OperatorKind::Linearized, raw, None)
}

/// `q = #{i : μᵢ ≤ 0}`; inconclusive when no computed eigenvalue is positive.
pub fn morse_count<T: Scalar>(spec: &SpectrumResult<T>) -> Result<usize, SpectralError> {
    let q = spec.pairs().iter().filter(|p| p.value <= T::zero()).count();
    if q == spec.len() {
        return Err(SpectralError::Inconclusive(q));
    }
    Ok(q)
}

/// Closed-form eigenvalue `(4/h²) sin²(kπh/(2L))` of the 1D discrete Dirichlet
/// Laplacian on `(0, L)` with `n` interior nodes.
pub fn closed_form_1d<T: Scalar>(length: T, n: usize, k: usize) -> T {
    let h = length / T::from_count(n + 1);
    let s = (T::from_count(k) * T::lit(std::f64::consts::PI) * h / (T::lit(2.0) * length)).sin();
    T::lit(4.0) * s * s / (h * h)
}

/// Discrete thresholds for the regime of `λ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds<T> {
    pub lambda1_omega: T,
    pub lambda2_omega: T,
    pub lambda1_omega0: T,
    /// `None` when `Ω₀` holds a single node.
    pub lambda2_omega0: Option<T>,
}

pub fn thresholds<T: Scalar>(grid: &Grid<T>) -> Result<Thresholds<T>, SpectralError> {
    let omega = dirichlet_spectrum(grid, 2)?;
    let k0 = grid.omega0_count().min(2);
    let omega0 = subdomain_spectrum(grid, k0.max(1))?;
    Ok(Thresholds {
        lambda1_omega: omega.eigenvalue(0),
        lambda2_omega: omega.eigenvalue(1),
        lambda1_omega0: omega0.eigenvalue(0),
        lambda2_omega0: (omega0.len() > 1).then(|| omega0.eigenvalue(1)),
    })
}

/// Where `λ` sits relative to the discrete thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `λ ≤ λ₁(Ω)`
    Subcritical,
    /// `λ₁(Ω) < λ ≤ λ₂(Ω)`, `λ < λ₁(Ω₀)`
    Admissible,
    /// `λ₂(Ω) < λ < λ₁(Ω₀)`
    MountainPassWindow,
    /// `λ ≥ λ₁(Ω₀)`
    Supercritical,
}

impl Regime {
    pub fn classify<T: Scalar>(lambda: T, th: &Thresholds<T>) -> Self {
        if lambda >= th.lambda1_omega0 {
            Self::Supercritical
        } else if lambda <= th.lambda1_omega {
            Self::Subcritical
        } else if lambda > th.lambda2_omega {
            Self::MountainPassWindow
        } else {
            Self::Admissible
        }
    }

    /// `λ₁(Ω) < λ < λ₁(Ω₀)`.
    pub fn is_admissible(self) -> bool {
        matches!(self, Self::Admissible | Self::MountainPassWindow)
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Subcritical => "subcritical",
            Self::Admissible => "admissible",
            Self::MountainPassWindow => "mountain-pass-window",
            Self::Supercritical => "supercritical",
        }
    }
}
