//! Uniform tensor grids on a box `Ω`, the favorable subdomain `Ω₀`, grid
//! fields, the crowding weight `b`, and the finite-difference operators.
//!
//! Nodes are interior nodes only; homogeneous Dirichlet values on `∂Ω` are
//! implicit. Along axis `a` with `n_a` interior nodes and length `L_a` the
//! spacing is `h_a = L_a / (n_a + 1)` and node `i` sits at `(i + 1)·h_a`.
//! Multi-dimensional nodes are ordered row-major with the first axis (`x`)
//! varying fastest: `index = ix + nx·iy`.
//!
//! Quadrature is the lumped node rule with weight `Π h_a` per interior node,
//! so the weights sum to `Π n_a·h_a = Π L_a·n_a/(n_a+1)`, i.e. `|Ω|` minus the
//! boundary cell layer.

use std::ops::{Add, Index, Mul, Neg, Sub};

use thiserror::Error;

use crate::linalg::BandMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("dimension must be 1 or 2, got {0}")]
    InvalidDimension(usize),
    #[error("axis {axis}: resolution {n} is below the minimum of 3 interior nodes")]
    ResolutionTooSmall { axis: usize, n: usize },
    #[error("axis {axis}: extent must be positive and finite")]
    InvalidExtent { axis: usize },
    #[error("axis {axis}: Ω₀ = ({lower}, {upper}) must satisfy 0 < lower < upper < extent")]
    Omega0TouchesBoundary { axis: usize, lower: f64, upper: f64 },
    #[error("field length {got} does not match grid node count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field value at node {0} is not finite")]
    NonFinite(usize),
    #[error("invalid weight profile: {0}")]
    InvalidWeight(String),
}

/// Axis-aligned box `Π (lower_a, upper_a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Scalar> AxisBox<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Self {
        Self { lower, upper }
    }

    /// Euclidean distance from `x` to the closed box.
    pub fn distance(&self, x: &[T]) -> T {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&xi, (&lo, &hi))| {
                let d = (lo - xi).max(xi - hi).max(T::zero());
                d * d
            })
            .sum::<T>()
            .sqrt()
    }
}

/// Geometry of `Ω = Π (0, L_a)` with its subdomain `Ω₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec<T> {
    pub extent: Vec<T>,
    pub resolution: Vec<usize>,
    pub omega0: AxisBox<T>,
}

impl<T: Scalar> DomainSpec<T> {
    /// `Ω = (0, length)` with `n` interior nodes and `Ω₀ = (a, b)`.
    pub fn interval(length: T, n: usize, omega0: (T, T)) -> Self {
        Self {
            extent: vec![length],
            resolution: vec![n],
            omega0: AxisBox::new(vec![omega0.0], vec![omega0.1]),
        }
    }

    /// `Ω = (0, lx) × (0, ly)` with `n = (nx, ny)` and `Ω₀ = (x0, x1) × (y0, y1)`.
    pub fn rectangle(extent: (T, T), n: (usize, usize), x_range: (T, T), y_range: (T, T)) -> Self {
        Self {
            extent: vec![extent.0, extent.1],
            resolution: vec![n.0, n.1],
            omega0: AxisBox::new(vec![x_range.0, y_range.0], vec![x_range.1, y_range.1]),
        }
    }

    pub fn dimension(&self) -> usize {
        self.extent.len()
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let d = self.dimension();
        if d == 0 || d > 2 {
            return Err(DomainError::InvalidDimension(d));
        }
        if self.resolution.len() != d || self.omega0.lower.len() != d || self.omega0.upper.len() != d {
            return Err(DomainError::InvalidDimension(d));
        }
        for axis in 0..d {
            let len = self.extent[axis];
            if !(len > T::zero()) || !len.is_finite() {
                return Err(DomainError::InvalidExtent { axis });
            }
            let n = self.resolution[axis];
            if n < 3 {
                return Err(DomainError::ResolutionTooSmall { axis, n });
            }
            let (lo, hi) = (self.omega0.lower[axis], self.omega0.upper[axis]);
            if !(lo > T::zero() && lo < hi && hi < len) {
                return Err(DomainError::Omega0TouchesBoundary {
                    axis,
                    lower: lo.as_f64(),
                    upper: hi.as_f64(),
                });
            }
        }
        Ok(())
    }
}

/// Interior nodes of a uniform tensor grid with the `Ω₀` mask.
#[derive(Debug, Clone)]
pub struct Grid<T> {
    spec: DomainSpec<T>,
    spacing: Vec<T>,
    coords: Vec<T>,
    mask: Vec<bool>,
    cell_measure: T,
}

pub fn build_grid<T: Scalar>(spec: &DomainSpec<T>) -> Result<Grid<T>, DomainError> {
    spec.validate()?;
    let d = spec.dimension();
    let spacing: Vec<T> = (0..d)
        .map(|a| spec.extent[a] / T::from_count(spec.resolution[a] + 1))
        .collect();
    let len: usize = spec.resolution.iter().product();
    let mut coords = Vec::with_capacity(len * d);
    let mut mask = Vec::with_capacity(len);
    let mut multi = vec![0usize; d];
    for _ in 0..len {
        let mut inside = true;
        for a in 0..d {
            // (i+1)·L/(n+1) keeps node coordinates correctly rounded.
            let x = T::from_count(multi[a] + 1) * spec.extent[a] / T::from_count(spec.resolution[a] + 1);
            coords.push(x);
            let slack = T::lit(1e-9) * spacing[a];
            inside &= x > spec.omega0.lower[a] + slack && x < spec.omega0.upper[a] - slack;
        }
        mask.push(inside);
        for a in 0..d {
            multi[a] += 1;
            if multi[a] < spec.resolution[a] {
                break;
            }
            multi[a] = 0;
        }
    }
    let cell_measure = spacing.iter().fold(T::one(), |acc, &h| acc * h);
    Ok(Grid { spec: spec.clone(), spacing, coords, mask, cell_measure })
}

impl<T: Scalar> Grid<T> {
    pub fn spec(&self) -> &DomainSpec<T> {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.spec.resolution
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing
    }

    /// Quadrature weight of every node (`Π h_a`).
    pub fn cell_measure(&self) -> T {
        self.cell_measure
    }

    pub fn coord(&self, node: usize) -> &[T] {
        let d = self.dimension();
        &self.coords[node * d..(node + 1) * d]
    }

    pub fn in_omega0(&self, node: usize) -> bool {
        self.mask[node]
    }

    pub fn omega0_mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn omega0_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Sum of all quadrature weights.
    pub fn total_measure(&self) -> T {
        self.cell_measure * T::from_count(self.len())
    }

    /// Stride of axis `a` in the row-major node ordering.
    pub fn stride(&self, axis: usize) -> usize {
        self.spec.resolution[..axis].iter().product()
    }

    /// Index of node `i` along `axis`.
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.stride(axis)) % self.spec.resolution[axis]
    }

    /// Grid neighbours of `node` (2 per axis, fewer at the boundary).
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.dimension()).flat_map(move |a| {
            let s = self.stride(a);
            let i = self.axis_index(node, a);
            let n = self.spec.resolution[a];
            let lower = (i > 0).then(|| node - s);
            let upper = (i + 1 < n).then(|| node + s);
            lower.into_iter().chain(upper)
        })
    }

    /// `⟨u, v⟩_{L²}` under the node quadrature.
    pub fn inner(&self, u: &Field<T>, v: &Field<T>) -> T {
        self.cell_measure * crate::scalar::dot(u.as_slice(), v.as_slice())
    }

    pub fn l2_norm(&self, u: &Field<T>) -> T {
        self.inner(u, u).sqrt()
    }

    /// `‖u‖_{L²(Ω₀)}`.
    pub fn l2_norm_omega0(&self, u: &Field<T>) -> T {
        let s: T = u.iter().zip(&self.mask).filter(|(_, &m)| m).map(|(&x, _)| x * x).sum();
        (self.cell_measure * s).sqrt()
    }

    /// `‖u‖ = (∫|∇u|²)^{1/2}`.
    pub fn h1_norm(&self, u: &Field<T>) -> T {
        h1_seminorm_sq(self, u).sqrt()
    }

    /// Matrix of `−Δ_h` over all interior nodes, bandwidth = stride of the last axis.
    pub fn laplacian_matrix(&self) -> BandMatrix<T> {
        let d = self.dimension();
        let bw = self.stride(d - 1);
        let mut m = BandMatrix::zeros(self.len(), bw);
        let inv_h2: Vec<T> = self.spacing.iter().map(|&h| T::one() / (h * h)).collect();
        let diag: T = inv_h2.iter().fold(T::zero(), |acc, &c| acc + c + c);
        for node in 0..self.len() {
            m.set(node, node, diag);
            for a in 0..d {
                let s = self.stride(a);
                if self.axis_index(node, a) + 1 < self.spec.resolution[a] {
                    m.set(node, node + s, -inv_h2[a]);
                    m.set(node + s, node, -inv_h2[a]);
                }
            }
        }
        m
    }

    /// Matrix of `−Δ_h` restricted to `Ω₀` nodes (Dirichlet on `∂Ω₀`), with
    /// the list of global node indices in the local ordering.
    pub fn omega0_laplacian_matrix(&self) -> (BandMatrix<T>, Vec<usize>) {
        let nodes: Vec<usize> = (0..self.len()).filter(|&i| self.mask[i]).collect();
        let mut local = vec![usize::MAX; self.len()];
        for (k, &g) in nodes.iter().enumerate() {
            local[g] = k;
        }
        let d = self.dimension();
        let inv_h2: Vec<T> = self.spacing.iter().map(|&h| T::one() / (h * h)).collect();
        let diag: T = inv_h2.iter().fold(T::zero(), |acc, &c| acc + c + c);
        // Bandwidth of the renumbered box: local distance between axis neighbours.
        let mut bw = 0usize;
        for &g in &nodes {
            for a in 0..d {
                let s = self.stride(a);
                if self.axis_index(g, a) + 1 < self.spec.resolution[a] && self.mask[g + s] {
                    bw = bw.max(local[g + s] - local[g]);
                }
            }
        }
        let mut m = BandMatrix::zeros(nodes.len(), bw.max(1));
        for (k, &g) in nodes.iter().enumerate() {
            m.set(k, k, diag);
            for a in 0..d {
                let s = self.stride(a);
                if self.axis_index(g, a) + 1 < self.spec.resolution[a] && self.mask[g + s] {
                    let j = local[g + s];
                    m.set(k, j, -inv_h2[a]);
                    m.set(j, k, -inv_h2[a]);
                }
            }
        }
        (m, nodes)
    }
}

/// One real value per interior node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T>(Vec<T>);

impl<T: Scalar> Field<T> {
    /// Wraps values, checking the length against the grid and finiteness.
    pub fn new(grid: &Grid<T>, values: Vec<T>) -> Result<Self, DomainError> {
        if values.len() != grid.len() {
            return Err(DomainError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DomainError::NonFinite(i));
        }
        Ok(Self(values))
    }

    pub(crate) fn from_vec(values: Vec<T>) -> Self {
        Self(values)
    }

    pub fn zeros(grid: &Grid<T>) -> Self {
        Self(vec![T::zero(); grid.len()])
    }

    pub fn constant(grid: &Grid<T>, c: T) -> Self {
        Self(vec![c; grid.len()])
    }

    /// Samples `f(x)` at every node.
    pub fn from_fn(grid: &Grid<T>, f: impl Fn(&[T]) -> T) -> Self {
        Self((0..grid.len()).map(|i| f(grid.coord(i))).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == T::zero())
    }

    pub fn max_abs(&self) -> T {
        self.0.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> T {
        self.0.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn scaled(&self, t: T) -> Self {
        Self(self.0.iter().map(|&v| t * v).collect())
    }

    /// `self + alpha·other`.
    pub fn add_scaled(&self, alpha: T, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a + alpha * b).collect())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self(self.0.iter().map(|&v| f(v)).collect())
    }

    /// Nodewise product.
    pub fn hadamard(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).collect())
    }

    /// Lossy conversion between scalar types.
    pub fn cast<U: Scalar>(&self) -> Field<U> {
        Field(self.0.iter().map(|&v| U::lit(v.as_f64())).collect())
    }
}

impl<T> Index<usize> for Field<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Scalar> Add for &Field<T> {
    type Output = Field<T>;
    fn add(self, rhs: &Field<T>) -> Field<T> {
        Field(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a + b).collect())
    }
}

impl<T: Scalar> Sub for &Field<T> {
    type Output = Field<T>;
    fn sub(self, rhs: &Field<T>) -> Field<T> {
        Field(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a - b).collect())
    }
}

impl<T: Scalar> Neg for &Field<T> {
    type Output = Field<T>;
    fn neg(self) -> Field<T> {
        Field(self.0.iter().map(|&a| -a).collect())
    }
}

impl<T: Scalar> Neg for Field<T> {
    type Output = Field<T>;
    fn neg(self) -> Field<T> {
        -&self
    }
}

impl<T: Scalar> Mul<T> for &Field<T> {
    type Output = Field<T>;
    fn mul(self, t: T) -> Field<T> {
        self.scaled(t)
    }
}

/// Profile of the crowding weight as a function of the distance to `Ω̄₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightProfile<T> {
    /// `−b₀·min(1, dist/δ)`; with `δ = 0` this degenerates to the plateau.
    Ramp,
    /// `−b₀` where `dist > δ`, zero otherwise (discontinuous).
    Plateau,
    /// `−b₀·f(dist)` with `f` piecewise linear through `(distance, fraction)`
    /// points, constant beyond the last one. `f(0)` must be 0.
    Table(Vec<(T, T)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec<T> {
    pub profile: WeightProfile<T>,
    pub amplitude: T,
    pub width: T,
}

impl<T: Scalar> WeightSpec<T> {
    pub fn ramp(amplitude: T, width: T) -> Self {
        Self { profile: WeightProfile::Ramp, amplitude, width }
    }

    pub fn plateau(amplitude: T) -> Self {
        Self { profile: WeightProfile::Plateau, amplitude, width: T::zero() }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.amplitude > T::zero()) || !self.amplitude.is_finite() {
            return Err(DomainError::InvalidWeight("amplitude must be positive".into()));
        }
        if !(self.width >= T::zero()) || !self.width.is_finite() {
            return Err(DomainError::InvalidWeight("width must be nonnegative".into()));
        }
        if let WeightProfile::Table(points) = &self.profile {
            let Some(&(d0, f0)) = points.first() else {
                return Err(DomainError::InvalidWeight("empty table".into()));
            };
            if d0 != T::zero() || f0 != T::zero() {
                return Err(DomainError::InvalidWeight("table must start at (0, 0)".into()));
            }
            for w in points.windows(2) {
                if !(w[1].0 > w[0].0) {
                    return Err(DomainError::InvalidWeight("table distances must increase".into()));
                }
            }
            for &(d, f) in points {
                if !(T::zero()..=T::one()).contains(&f) {
                    return Err(DomainError::InvalidWeight("table fractions must lie in [0, 1]".into()));
                }
                if d > self.width && f == T::zero() {
                    return Err(DomainError::InvalidWeight(
                        "table fraction must be positive beyond the transition width".into(),
                    ));
                }
            }
            if points.len() == 1 {
                return Err(DomainError::InvalidWeight("table needs a positive tail".into()));
            }
        }
        Ok(())
    }

    /// Fraction of the amplitude at distance `dist ≥ 0` from `Ω̄₀`.
    pub fn fraction(&self, dist: T) -> T {
        match &self.profile {
            WeightProfile::Ramp if self.width > T::zero() => (dist / self.width).min(T::one()),
            WeightProfile::Ramp | WeightProfile::Plateau => {
                if dist > self.width {
                    T::one()
                } else {
                    T::zero()
                }
            }
            WeightProfile::Table(points) => {
                let last = points[points.len() - 1];
                if dist >= last.0 {
                    return last.1;
                }
                let k = points.iter().rposition(|p| p.0 <= dist).unwrap_or(0);
                let (d0, f0) = points[k];
                let (d1, f1) = points[k + 1];
                f0 + (f1 - f0) * (dist - d0) / (d1 - d0)
            }
        }
    }
}

/// Realizes `b(x) ≤ 0` on the grid; exactly zero on the `Ω₀` mask.
pub fn build_weight<T: Scalar>(grid: &Grid<T>, w: &WeightSpec<T>) -> Result<Field<T>, DomainError> {
    w.validate()?;
    let omega0 = &grid.spec().omega0;
    let values = (0..grid.len())
        .map(|i| {
            if grid.in_omega0(i) {
                T::zero()
            } else {
                -w.amplitude * w.fraction(omega0.distance(grid.coord(i)))
            }
        })
        .collect();
    Ok(Field(values))
}

/// `−Δ_h u` with the standard centered stencil and zero Dirichlet closure.
pub fn laplacian_apply<T: Scalar>(grid: &Grid<T>, u: &Field<T>) -> Field<T> {
    let mut out = vec![T::zero(); grid.len()];
    for a in 0..grid.dimension() {
        let s = grid.stride(a);
        let n = grid.resolution()[a];
        let c = T::one() / (grid.spacing()[a] * grid.spacing()[a]);
        for (node, o) in out.iter_mut().enumerate() {
            let i = grid.axis_index(node, a);
            let left = if i > 0 { u[node - s] } else { T::zero() };
            let right = if i + 1 < n { u[node + s] } else { T::zero() };
            *o += c * (u[node] + u[node] - left - right);
        }
    }
    Field(out)
}

/// `Σ wᵢ uᵢ`.
pub fn integrate<T: Scalar>(grid: &Grid<T>, u: &Field<T>) -> T {
    grid.cell_measure() * u.iter().copied().sum::<T>()
}

/// Discrete `∫|∇u|²` as the sum of squared forward differences (including the
/// boundary edges) times the cell measure; equals `⟨u, −Δ_h u⟩_{L²}`.
pub fn h1_seminorm_sq<T: Scalar>(grid: &Grid<T>, u: &Field<T>) -> T {
    let mut total = T::zero();
    for a in 0..grid.dimension() {
        let s = grid.stride(a);
        let n = grid.resolution()[a];
        let h = grid.spacing()[a];
        let mut acc = T::zero();
        for node in 0..grid.len() {
            let i = grid.axis_index(node, a);
            let next = if i + 1 < n { u[node + s] } else { T::zero() };
            let diff = next - u[node];
            acc += diff * diff;
            if i == 0 {
                acc += u[node] * u[node];
            }
        }
        total += acc / (h * h);
    }
    total * grid.cell_measure()
}
