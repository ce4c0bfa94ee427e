use crate::cell::CellParams;
use crate::error::Result;

/// `W ← W − α·∇W` for every tensor.
pub fn sgd_update(params: &mut CellParams, grads: &CellParams, learning_rate: f64) -> Result<()> {
    params.axpy(-learning_rate, grads)
}

/// Rescales `grads` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
pub fn clip_grad_norm(grads: &mut CellParams, max_norm: f64) -> f64 {
    let norm = grads.sum_squares().sqrt();
    if norm > max_norm && norm > 0.0 {
        grads.scale(max_norm / norm);
    }
    norm
}
