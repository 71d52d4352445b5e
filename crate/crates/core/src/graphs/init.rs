use rand::Rng;

use crate::autodiff::Tensor;

/// Uniform draw in `[-sqrt(1/fan_in), +sqrt(1/fan_in)]` for every element of `shape`.
pub fn uniform_fan_in<R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor {
    let bound = (1.0 / fan_in as f64).sqrt();
    let len: usize = shape.iter().product();
    let values = (0..len).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::new(shape.to_vec(), values).expect("shape matches length")
}
