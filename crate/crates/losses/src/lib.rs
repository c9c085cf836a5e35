//! Loss kernels for relational feature alignment and depth supervision,
//! with analytic gradients and a finite-difference checker.
//!
//! All kernels work in f64 on [`Tensor5`]; `.f32g` files hold f32 on disk.

pub mod align;
pub mod depth;
pub mod error;
pub mod f32g;
pub mod fixtures;
pub mod gradcheck;
pub mod objective;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor5;

/// Fixed-order pairwise sum, so reductions are bit-stable.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    match x.len() {
        0 => 0.0,
        n if n <= 8 => x.iter().fold(0.0, |a, b| a + b),
        n => pairwise_sum(&x[..n / 2]) + pairwise_sum(&x[n / 2..]),
    }
}
