//! Margin-based contrastive loss over projected pairs, with analytic
//! gradients for both endpoints.
//!
//! For projections `p_i`, `p_j` with euclidean distance `D` and margin `m`:
//! positive pairs cost `D^2`, negative pairs cost `max(0, m - D)^2`. The
//! negative branch has zero gradient once `D >= m`, and the `1/D` factor in
//! its gradient is suppressed below `distance_epsilon` to avoid blowups at
//! coincident points.

use thiserror::Error;

/// Whether a product pair shares an outfit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairLabel {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub margin: f64,
    /// Distances below this are treated as zero in the negative-pair gradient.
    pub distance_epsilon: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { margin: 1.0, distance_epsilon: 1e-12 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), LossError> {
        if !self.margin.is_finite() || self.margin <= 0.0 {
            return Err(LossError::InvalidMargin { margin: self.margin });
        }
        if !self.distance_epsilon.is_finite() || self.distance_epsilon <= 0.0 {
            return Err(LossError::InvalidEpsilon { epsilon: self.distance_epsilon });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum LossError {
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("margin must be a positive finite number, got {margin}")]
    InvalidMargin { margin: f64 },
    #[error("distance epsilon must be a positive finite number, got {epsilon}")]
    InvalidEpsilon { epsilon: f64 },
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64, LossError> {
    if a.len() != b.len() {
        return Err(LossError::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

pub fn contrastive_loss(
    p_i: &[f64],
    p_j: &[f64],
    label: PairLabel,
    cfg: &LossConfig,
) -> Result<f64, LossError> {
    let d = euclidean_distance(p_i, p_j)?;
    Ok(match label {
        PairLabel::Positive => d * d,
        PairLabel::Negative => {
            let hinge = (cfg.margin - d).max(0.0);
            hinge * hinge
        }
    })
}

/// Gradients of [`contrastive_loss`] with respect to both projections.
/// The two returned vectors are exact negations of each other.
pub fn contrastive_grad(
    p_i: &[f64],
    p_j: &[f64],
    label: PairLabel,
    cfg: &LossConfig,
) -> Result<(Vec<f64>, Vec<f64>), LossError> {
    if p_i.len() != p_j.len() {
        return Err(LossError::LengthMismatch { left: p_i.len(), right: p_j.len() });
    }
    let diff: Vec<f64> = p_i.iter().zip(p_j).map(|(x, y)| x - y).collect();
    let d = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = match label {
        PairLabel::Positive => 2.0,
        PairLabel::Negative => {
            if d >= cfg.margin || d < cfg.distance_epsilon {
                0.0
            } else {
                -2.0 * (cfg.margin - d) / d
            }
        }
    };
    let grad_i: Vec<f64> = diff.iter().map(|v| scale * v).collect();
    let grad_j: Vec<f64> = grad_i.iter().map(|v| -v).collect();
    Ok((grad_i, grad_j))
}
