//! Energy `I`, Nehari functional `J = I′(u)u`, fibering maps, projection onto
//! the Nehari manifold and set classification.
//!
//! Everything is expressed through the two quadrature sums
//! `A(u) = ∫|∇u|² − λu²` and `B(u) = ∫ b|u|^{ν+1}`:
//! `I = A/2 − B/(ν+1)`, `J = A − B`, and along a ray
//! `I(tu) = t²A/2 − t^{ν+1}B/(ν+1)`.

use thiserror::Error;

use crate::domain::{h1_seminorm_sq, laplacian_apply, Field, Grid};
use crate::scalar::{odd_pow, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NehariError {
    #[error("growth rate λ = {0} must be finite and nonnegative")]
    InvalidLambda(f64),
    #[error("exponent ν = {nu} outside the admissible range for dimension {dimension}")]
    InvalidExponent { nu: f64, dimension: usize },
    #[error("weight is positive at node {0}")]
    PositiveWeight(usize),
    #[error("weight has {got} values, grid has {expected} nodes")]
    WeightLength { expected: usize, got: usize },
    #[error("operation requires a nonzero field")]
    ZeroField,
    #[error("fiber parameter t = {0} must be positive")]
    NonPositiveScale(f64),
    #[error("field is not projectable onto the Nehari manifold (A {a:?}, B {b:?})")]
    NotProjectable { a: Sign, b: Sign },
    #[error("field is off the Nehari manifold: J = {j:e}")]
    OffManifold { j: f64 },
}

/// Exact sign of a scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of<T: Scalar>(x: T) -> Self {
        if x < T::zero() {
            Self::Negative
        } else if x > T::zero() {
            Self::Positive
        } else {
            Self::Zero
        }
    }
}

/// `λ`, `ν` and the realized weight `b ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams<T> {
    lambda: T,
    nu: T,
    weight: Field<T>,
}

impl<T: Scalar> ProblemParams<T> {
    pub fn new(grid: &Grid<T>, lambda: T, nu: T, weight: Field<T>) -> Result<Self, NehariError> {
        if !lambda.is_finite() || lambda < T::zero() {
            return Err(NehariError::InvalidLambda(lambda.as_f64()));
        }
        let d = grid.dimension();
        let upper = if d <= 2 { T::infinity() } else { T::from_count(d + 2) / T::from_count(d - 2) };
        if !nu.is_finite() || nu <= T::one() || nu >= upper {
            return Err(NehariError::InvalidExponent { nu: nu.as_f64(), dimension: d });
        }
        if weight.len() != grid.len() {
            return Err(NehariError::WeightLength { expected: grid.len(), got: weight.len() });
        }
        if let Some(i) = weight.iter().position(|&b| b > T::zero() || !b.is_finite()) {
            return Err(NehariError::PositiveWeight(i));
        }
        Ok(Self { lambda, nu, weight })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn nu(&self) -> T {
        self.nu
    }

    pub fn weight(&self) -> &Field<T> {
        &self.weight
    }

    /// `max |b|`.
    pub fn weight_amplitude(&self) -> T {
        self.weight.max_abs()
    }

    pub fn with_lambda(&self, lambda: T) -> Result<Self, NehariError> {
        if !lambda.is_finite() || lambda < T::zero() {
            return Err(NehariError::InvalidLambda(lambda.as_f64()));
        }
        Ok(Self { lambda, ..self.clone() })
    }

    /// `½ − 1/(ν+1)`.
    pub fn nehari_factor(&self) -> T {
        T::lit(0.5) - T::one() / (self.nu + T::one())
    }
}

/// `(A(u), B(u))`.
pub fn parts<T: Scalar>(grid: &Grid<T>, params: &ProblemParams<T>, u: &Field<T>) -> (T, T) {
    let w = grid.cell_measure();
    let p = params.nu + T::one();
    let l2: T = u.iter().map(|&v| v * v).sum::<T>() * w;
    let b: T = u.iter().zip(params.weight.iter()).map(|(&v, &bi)| bi * v.abs().powf(p)).sum::<T>() * w;
    (h1_seminorm_sq(grid, u) - params.lambda * l2, b)
}

pub fn energy<T: Scalar>(grid: &Grid<T>, params: &ProblemParams<T>, u: &Field<T>) -> T {
    let (a, b) = parts(grid, params, u);
    a / T::lit(2.0) - b / (params.nu + T::one())
}

/// `g = −Δ_h u − λu − b|u|^{ν−1}u`, the L² representative of `I′(u)`.
pub fn grad_energy<T: Scalar>(grid: &Grid<T>, params: &ProblemParams<T>, u: &Field<T>) -> Field<T> {
    let lap = laplacian_apply(grid, u);
    let g = lap
        .iter()
        .zip(u.iter())
        .zip(params.weight.iter())
        .map(|((&l, &v), &b)| l - params.lambda * v - b * odd_pow(v, params.nu))
        .collect();
    Field::from_vec(g)
}

/// `‖grad_energy(u)‖_{L²}`, the stationary residual.
pub fn residual_norm<T: Scalar>(grid: &Grid<T>, params: &ProblemParams<T>, u: &Field<T>) -> T {
    grid.l2_norm(&grad_energy(grid, params, u))
}

pub fn nehari_j<T: Scalar>(grid: &Grid<T>, params: &ProblemParams<T>, u: &Field<T>) -> T {
    let (a, b) = parts(grid, params, u);
    a - b
}

/// Point `t ↦ (I(tu), dI(tu)/dt)` on a fibering map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSample<T> {
    pub t: T,
    pub value: T,
    pub slope: T,
}

impl<T: Scalar> FiberSample<T> {
    pub fn from_parts(a: T, b: T, nu: T, t: T) -> Self {
        let value = t * t * a / T::lit(2.0) - t.powf(nu + T::one()) * b / (nu + T::one());
        let slope = t * a - t.powf(nu) * b;
        Self { t, value, slope }
    }
}

pub fn fiber_scan<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    u: &Field<T>,
    t_list: &[T],
) -> Result<Vec<FiberSample<T>>, NehariError> {
    if u.is_zero() {
        return Err(NehariError::ZeroField);
    }
    if let Some(&t) = t_list.iter().find(|&&t| !(t > T::zero())) {
        return Err(NehariError::NonPositiveScale(t.as_f64()));
    }
    let (a, b) = parts(grid, params, u);
    Ok(t_list.iter().map(|&t| FiberSample::from_parts(a, b, params.nu, t)).collect())
}

/// `t* = (A/B)^{1/(ν−1)}` when `A < 0` and `B < 0`.
pub fn turning_point<T: Scalar>(a: T, b: T, nu: T) -> Option<T> {
    (a < T::zero() && b < T::zero()).then(|| (a / b).powf(T::one() / (nu - T::one())))
}

pub fn project_to_nehari<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    u: &Field<T>,
) -> Result<(T, Field<T>), NehariError> {
    if u.is_zero() {
        return Err(NehariError::ZeroField);
    }
    let (a, b) = parts(grid, params, u);
    match turning_point(a, b, params.nu) {
        Some(t) => Ok((t, u.scaled(t))),
        None => Err(NehariError::NotProjectable { a: Sign::of(a), b: Sign::of(b) }),
    }
}

/// Position relative to `N = {J = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NehariSide {
    Origin,
    /// `J > tol`
    Plus,
    /// `|J| ≤ tol`
    Manifold,
    /// `J < −tol`
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SClass {
    SPlus,
    SZero,
    OffManifold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LClass {
    LPlus,
    LZero,
    LMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BClass {
    BMinus,
    BZero,
}

impl NehariSide {
    pub fn label(self) -> &'static str {
        match self {
            Self::Origin => "origin",
            Self::Plus => "N+",
            Self::Manifold => "N",
            Self::Minus => "N-",
        }
    }
}

impl SClass {
    pub fn label(self) -> &'static str {
        match self {
            Self::SPlus => "S+",
            Self::SZero => "S0",
            Self::OffManifold => "off",
        }
    }
}

impl LClass {
    pub fn label(self) -> &'static str {
        match self {
            Self::LPlus => "L+",
            Self::LZero => "L0",
            Self::LMinus => "L-",
        }
    }
}

impl BClass {
    pub fn label(self) -> &'static str {
        match self {
            Self::BMinus => "B-",
            Self::BZero => "B0",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NehariReport<T> {
    pub a: T,
    pub b: T,
    pub j: T,
    pub i: T,
    pub nehari_side: NehariSide,
    pub s_class: SClass,
    /// `None` at the origin.
    pub l_class: Option<LClass>,
    pub b_class: Option<BClass>,
    pub projectable: bool,
    pub t_project: Option<T>,
}

/// Half-width of the "on manifold" band: `1e−8·max(1, ‖u‖²)`.
pub fn manifold_tolerance<T: Scalar>(h1_sq: T) -> T {
    T::lit(1e-8) * h1_sq.max(T::one())
}

/// Relative band for the `L⁰` and `B⁰` labels on normalized values.
pub const CLASS_BAND: f64 = 1e-10;

pub fn classify<T: Scalar>(grid: &Grid<T>, params: &ProblemParams<T>, u: &Field<T>) -> NehariReport<T> {
    let (a, b) = parts(grid, params, u);
    assert!(b <= T::zero(), "B(u) = {b:e} > 0 with a nonpositive weight");
    let j = a - b;
    let i = a / T::lit(2.0) - b / (params.nu + T::one());
    if u.is_zero() {
        return NehariReport {
            a,
            b,
            j,
            i,
            nehari_side: NehariSide::Origin,
            s_class: SClass::OffManifold,
            l_class: None,
            b_class: None,
            projectable: false,
            t_project: None,
        };
    }
    let n2 = h1_seminorm_sq(grid, u);
    let tol = manifold_tolerance(n2);
    let nehari_side = if j > tol {
        NehariSide::Plus
    } else if j < -tol {
        NehariSide::Minus
    } else {
        NehariSide::Manifold
    };
    let band = T::lit(CLASS_BAND);
    let a_hat = a / n2;
    let b_hat = b / n2.powf((params.nu + T::one()) / T::lit(2.0));
    let l_class = if a_hat > band {
        LClass::LPlus
    } else if a_hat < -band {
        LClass::LMinus
    } else {
        LClass::LZero
    };
    let b_class = if b_hat < -band { BClass::BMinus } else { BClass::BZero };
    let s_class = match (nehari_side, b_class) {
        (NehariSide::Manifold, BClass::BMinus) => SClass::SPlus,
        (NehariSide::Manifold, BClass::BZero) => SClass::SZero,
        _ => SClass::OffManifold,
    };
    let t_project = turning_point(a, b, params.nu);
    NehariReport {
        a,
        b,
        j,
        i,
        nehari_side,
        s_class,
        l_class: Some(l_class),
        b_class: Some(b_class),
        projectable: t_project.is_some(),
        t_project,
    }
}

/// `(I(u), (½ − 1/(ν+1))A(u), (½ − 1/(ν+1))B(u))` for `u` on the manifold.
pub fn nehari_energy_identity<T: Scalar>(
    grid: &Grid<T>,
    params: &ProblemParams<T>,
    u: &Field<T>,
) -> Result<(T, T, T), NehariError> {
    let (a, b) = parts(grid, params, u);
    let j = a - b;
    if j.abs() > manifold_tolerance(h1_seminorm_sq(grid, u)) {
        return Err(NehariError::OffManifold { j: j.as_f64() });
    }
    let c = params.nehari_factor();
    let i = a / T::lit(2.0) - b / (params.nu + T::one());
    Ok((i, c * a, c * b))
}
