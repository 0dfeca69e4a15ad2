//! Seeded smooth random fields: random combinations of low sine modes.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{Field, Grid};
use crate::scalar::Scalar;

/// Number of sine modes per axis.
pub const MODES: usize = 6;

/// `Σ c_k Π_a sin(k_a π x_a / L_a)` with `c_k` uniform in `[−1, 1]` damped by
/// `1/|k|`. Never identically zero.
pub fn smooth_field<T: Scalar>(grid: &Grid<T>, rng: &mut ChaCha8Rng) -> Field<T> {
    let d = grid.dimension();
    let total = MODES.pow(d as u32);
    let coeffs: Vec<f64> = (0..total).map(|_| rng.random_range(-1.0..1.0)).collect();
    let extent = grid.spec().extent.clone();
    Field::from_fn(grid, |x| {
        let mut s = 0.0;
        for (idx, c) in coeffs.iter().enumerate() {
            let mut rest = idx;
            let mut prod = 1.0;
            let mut k2 = 0.0;
            for a in 0..d {
                let k = (rest % MODES + 1) as f64;
                rest /= MODES;
                k2 += k * k;
                prod *= (k * std::f64::consts::PI * x[a].as_f64() / extent[a].as_f64()).sin();
            }
            s += c * prod / k2.sqrt();
        }
        T::lit(s)
    })
}

/// Smooth random field strictly positive on the grid: the fundamental mode
/// times `amp + |s|` for a random combination `s`.
pub fn positive_field<T: Scalar>(grid: &Grid<T>, rng: &mut ChaCha8Rng) -> Field<T> {
    let s = smooth_field(grid, rng);
    let amp = T::lit(rng.random_range(0.2..1.0));
    let extent = grid.spec().extent.clone();
    let base = Field::from_fn(grid, |x| {
        x.iter().zip(&extent).fold(T::one(), |p, (&xi, &l)| p * (T::lit(std::f64::consts::PI) * xi / l).sin())
    });
    base.hadamard(&s.map(|v| amp + v.abs()))
}

/// Random smooth field rescaled to the given H¹ seminorm.
pub fn field_with_h1<T: Scalar>(grid: &Grid<T>, rng: &mut ChaCha8Rng, h1: T) -> Field<T> {
    let s = smooth_field(grid, rng);
    let n = grid.h1_norm(&s);
    s.scaled(h1 / n)
}
