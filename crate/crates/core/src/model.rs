//! The projection head: a small MLP applied identically to both members of a
//! pair (one shared set of parameters), with explicit forward and reverse
//! passes and a binary checkpoint format.
//!
//! Hidden layers are affine + ReLU, the output layer is affine only. The
//! ReLU derivative at exactly zero is taken to be zero.
//!
//! FCKP checkpoint layout, all integers little-endian:
//!
//! ```text
//! bytes 0..4    magic "FCKP"
//! bytes 4..6    u16 format version (currently 1)
//! byte  6       u8 representation mode code (0 = image, 1 = text, 2 = both)
//! byte  7       u8 reserved (0)
//! bytes 8..12   u32 layer count
//! per layer     u32 in_dim, u32 out_dim, u8 activation code, 3 reserved bytes
//! then          all parameters as f64: per layer, weights row-major then bias
//! ```

use std::fs;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::bytes::Reader;
use crate::embedding_store::RepresentationMode;
use crate::rng::{seeded, Stream};

pub const FCKP_MAGIC: [u8; 4] = *b"FCKP";
pub const FCKP_VERSION: u16 = 1;
/// Fixed bytes before the per-layer shape entries.
pub const FCKP_HEADER_LEN: usize = 12;
/// Bytes per layer shape entry.
pub const FCKP_LAYER_ENTRY_LEN: usize = 12;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid head config: {reason}")]
    InvalidConfig { reason: String },
    #[error("{what} length {found} does not match expected {expected}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("corrupt checkpoint at byte {offset}: {reason}")]
    CorruptCheckpoint { offset: usize, reason: String },
    #[error("non-finite parameter in layer {layer}")]
    NonFiniteParameter { layer: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Relu => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Linear),
            1 => Some(Activation::Relu),
            _ => None,
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Linear => z,
            Activation::Relu => z.max(0.0),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Head shape: input width plus the output width of every layer, last entry
/// being the projection dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadConfig {
    pub input_dim: usize,
    pub layer_dims: Vec<usize>,
}

impl HeadConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_dim == 0 {
            return Err(ModelError::InvalidConfig { reason: "input_dim must be at least 1".into() });
        }
        if self.layer_dims.is_empty() {
            return Err(ModelError::InvalidConfig { reason: "layer_dims must not be empty".into() });
        }
        if self.layer_dims.iter().any(|&d| d == 0) {
            return Err(ModelError::InvalidConfig { reason: "layer widths must be at least 1".into() });
        }
        Ok(())
    }

    pub fn output_dim(&self) -> Option<usize> {
        self.layer_dims.last().copied()
    }
}

/// Trainable parameters for `config`: `in * out` weights plus `out` biases
/// per layer. An empty layer list has zero parameters.
pub fn param_count(config: &HeadConfig) -> usize {
    let mut in_dim = config.input_dim;
    let mut total = 0;
    for &out_dim in &config.layer_dims {
        total += in_dim * out_dim + out_dim;
        in_dim = out_dim;
    }
    total
}

/// One affine layer. Weights are row-major, `out_dim` rows of `in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Layer {
    pub fn new(
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if in_dim == 0 || out_dim == 0 {
            return Err(ModelError::InvalidConfig { reason: "layer dims must be at least 1".into() });
        }
        if weights.len() != in_dim * out_dim {
            return Err(ModelError::DimensionMismatch {
                what: "weights",
                expected: in_dim * out_dim,
                found: weights.len(),
            });
        }
        if bias.len() != out_dim {
            return Err(ModelError::DimensionMismatch {
                what: "bias",
                expected: out_dim,
                found: bias.len(),
            });
        }
        Ok(Self { in_dim, out_dim, activation, weights, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    /// Pre-activation `W x + b`.
    fn affine(&self, input: &[f64]) -> Vec<f64> {
        let mut z = self.bias.clone();
        for (row, z_k) in z.iter_mut().enumerate() {
            let w_row = &self.weights[row * self.in_dim..(row + 1) * self.in_dim];
            *z_k += w_row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
        }
        z
    }
}

/// Everything the reverse pass needs from a forward pass: the input and each
/// layer's pre-activation values.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    input: Vec<f64>,
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre_activations
    }
}

/// Per-layer parameter gradients, same shapes as the layers themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradients {
    pub layers: Vec<LayerGradients>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl HeadGradients {
    /// Element-wise accumulation; shapes must match.
    pub fn add_assign(&mut self, other: &HeadGradients) {
        assert_eq!(self.layers.len(), other.layers.len(), "gradient shape mismatch");
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            assert_eq!(mine.weights.len(), theirs.weights.len(), "gradient shape mismatch");
            for (a, b) in mine.weights.iter_mut().zip(&theirs.weights) {
                *a += b;
            }
            for (a, b) in mine.bias.iter_mut().zip(&theirs.bias) {
                *a += b;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                *w *= factor;
            }
            for b in &mut layer.bias {
                *b *= factor;
            }
        }
    }

    /// Flat view in the same order as [`SiameseHead::param_slices_mut`].
    pub fn tensor_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }
}

/// The shared-parameter projection head. "Siamese" refers to use, not
/// structure: the same head is applied to both members of a pair, so pair
/// gradients accumulate into one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct SiameseHead {
    mode: RepresentationMode,
    layers: Vec<Layer>,
}

impl SiameseHead {
    /// Glorot-uniform weight init, zero biases. Weights for each layer are
    /// drawn row-major from `U(-b, b)` with `b = sqrt(6 / (in + out))`.
    /// Deterministic in `seed`.
    pub fn init(config: &HeadConfig, mode: RepresentationMode, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = seeded(seed, Stream::Init, 0);
        let mut layers = Vec::with_capacity(config.layer_dims.len());
        let mut in_dim = config.input_dim;
        let last = config.layer_dims.len() - 1;
        for (idx, &out_dim) in config.layer_dims.iter().enumerate() {
            let activation = if idx == last { Activation::Linear } else { Activation::Relu };
            let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
            let weights: Vec<f64> =
                (0..in_dim * out_dim).map(|_| rng.random_range(-bound..bound)).collect();
            let bias = vec![0.0; out_dim];
            layers.push(Layer { in_dim, out_dim, activation, weights, bias });
            in_dim = out_dim;
        }
        Ok(Self { mode, layers })
    }

    /// Builds a head from explicit layers. Layers must chain (each input
    /// width equals the previous output width) and follow the fixed
    /// activation pattern: ReLU everywhere except a linear final layer.
    pub fn from_layers(mode: RepresentationMode, layers: Vec<Layer>) -> Result<Self, ModelError> {
        if layers.is_empty() {
            return Err(ModelError::InvalidConfig { reason: "head needs at least one layer".into() });
        }
        let last = layers.len() - 1;
        for (idx, layer) in layers.iter().enumerate() {
            if idx > 0 && layer.in_dim != layers[idx - 1].out_dim {
                return Err(ModelError::InvalidConfig {
                    reason: format!(
                        "layer {idx} input width {} does not chain with previous output width {}",
                        layer.in_dim,
                        layers[idx - 1].out_dim
                    ),
                });
            }
            let expected = if idx == last { Activation::Linear } else { Activation::Relu };
            if layer.activation != expected {
                return Err(ModelError::InvalidConfig {
                    reason: format!("layer {idx} must use {:?}", expected),
                });
            }
        }
        Ok(Self { mode, layers })
    }

    pub fn mode(&self) -> RepresentationMode {
        self.mode
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn config(&self) -> HeadConfig {
        HeadConfig {
            input_dim: self.input_dim(),
            layer_dims: self.layers.iter().map(|l| l.out_dim).collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.config())
    }

    /// Mutable views of every parameter tensor, weights then bias per layer,
    /// in layer order. Matches [`HeadGradients::tensor_slices`].
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn zeroed_gradients(&self) -> HeadGradients {
        HeadGradients {
            layers: self
                .layers
                .iter()
                .map(|l| LayerGradients {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    /// Full forward pass; the trace captures what `backward` needs.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, ForwardTrace), ModelError> {
        if x.len() != self.input_dim() {
            return Err(ModelError::DimensionMismatch {
                what: "input",
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for layer in &self.layers {
            let z = layer.affine(&current);
            current = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre_activations.push(z);
        }
        Ok((current, ForwardTrace { input: x.to_vec(), pre_activations }))
    }

    /// Forward pass when only the projection is needed.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        Ok(self.forward(x)?.0)
    }

    /// Exact reverse-mode pass for the trace's forward computation. Returns
    /// parameter gradients and the gradient with respect to the input.
    /// The trace must come from `forward` on this head with its current
    /// parameters.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        grad_output: &[f64],
    ) -> Result<(HeadGradients, Vec<f64>), ModelError> {
        if trace.pre_activations.len() != self.layers.len() {
            return Err(ModelError::DimensionMismatch {
                what: "trace layers",
                expected: self.layers.len(),
                found: trace.pre_activations.len(),
            });
        }
        if trace.input.len() != self.input_dim() {
            return Err(ModelError::DimensionMismatch {
                what: "trace input",
                expected: self.input_dim(),
                found: trace.input.len(),
            });
        }
        for (layer, z) in self.layers.iter().zip(&trace.pre_activations) {
            if z.len() != layer.out_dim {
                return Err(ModelError::DimensionMismatch {
                    what: "trace pre-activation",
                    expected: layer.out_dim,
                    found: z.len(),
                });
            }
        }
        if grad_output.len() != self.output_dim() {
            return Err(ModelError::DimensionMismatch {
                what: "grad_output",
                expected: self.output_dim(),
                found: grad_output.len(),
            });
        }

        let mut grads = self.zeroed_gradients();
        let mut delta = grad_output.to_vec();
        for idx in (0..self.layers.len()).rev() {
            let layer = &self.layers[idx];
            let z = &trace.pre_activations[idx];
            for (d, &z_k) in delta.iter_mut().zip(z) {
                *d *= layer.activation.derivative(z_k);
            }
            // The layer input is the previous layer's activation output,
            // recomputed from its traced pre-activations.
            let recomputed;
            let input: &[f64] = if idx == 0 {
                &trace.input
            } else {
                let prev = &self.layers[idx - 1];
                recomputed = trace.pre_activations[idx - 1]
                    .iter()
                    .map(|&v| prev.activation.apply(v))
                    .collect::<Vec<f64>>();
                &recomputed
            };
            let lg = &mut grads.layers[idx];
            for row in 0..layer.out_dim {
                let d = delta[row];
                let w_grad_row = &mut lg.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
                for (wg, a) in w_grad_row.iter_mut().zip(input) {
                    *wg += d * a;
                }
                lg.bias[row] += d;
            }
            let mut next = vec![0.0; layer.in_dim];
            for row in 0..layer.out_dim {
                let d = delta[row];
                let w_row = &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim];
                for (n, w) in next.iter_mut().zip(w_row) {
                    *n += w * d;
                }
            }
            delta = next;
        }
        Ok((grads, delta))
    }

    pub fn encode_checkpoint(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&FCKP_MAGIC);
        out.extend_from_slice(&FCKP_VERSION.to_le_bytes());
        out.push(self.mode.code());
        out.push(0);
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for layer in &self.layers {
            out.extend_from_slice(&(layer.in_dim as u32).to_le_bytes());
            out.extend_from_slice(&(layer.out_dim as u32).to_le_bytes());
            out.push(layer.activation.code());
            out.extend_from_slice(&[0u8; 3]);
        }
        for layer in &self.layers {
            for w in &layer.weights {
                out.extend_from_slice(&w.to_le_bytes());
            }
            for b in &layer.bias {
                out.extend_from_slice(&b.to_le_bytes());
            }
        }
        out
    }

    pub fn parse_checkpoint(bytes: &[u8]) -> Result<Self, ModelError> {
        let corrupt = |offset: usize, reason: String| ModelError::CorruptCheckpoint { offset, reason };
        let mut r = Reader::new(bytes);
        let short = |r: &Reader| ModelError::CorruptCheckpoint {
            offset: r.pos(),
            reason: "unexpected end of file".to_string(),
        };

        let magic = r.take(4).ok_or_else(|| short(&r))?;
        if magic != FCKP_MAGIC {
            return Err(corrupt(0, "bad magic: not a FCKP file".to_string()));
        }
        let version = r.u16().ok_or_else(|| short(&r))?;
        if version != FCKP_VERSION {
            return Err(corrupt(4, format!("unsupported version {version}")));
        }
        let mode_code = r.u8().ok_or_else(|| short(&r))?;
        let mode = RepresentationMode::from_code(mode_code)
            .ok_or_else(|| corrupt(6, format!("unknown mode code {mode_code}")))?;
        let _reserved = r.u8().ok_or_else(|| short(&r))?;
        let layer_count = r.u32().ok_or_else(|| short(&r))? as usize;
        if layer_count == 0 {
            return Err(corrupt(8, "zero layers".to_string()));
        }

        let mut shapes = Vec::with_capacity(layer_count);
        for idx in 0..layer_count {
            let entry_offset = r.pos();
            let in_dim = r.u32().ok_or_else(|| short(&r))? as usize;
            let out_dim = r.u32().ok_or_else(|| short(&r))? as usize;
            let act_code = r.u8().ok_or_else(|| short(&r))?;
            r.take(3).ok_or_else(|| short(&r))?;
            if in_dim == 0 || out_dim == 0 {
                return Err(corrupt(entry_offset, format!("layer {idx} has a zero dimension")));
            }
            let activation = Activation::from_code(act_code)
                .ok_or_else(|| corrupt(entry_offset, format!("unknown activation code {act_code}")))?;
            let expected = if idx == layer_count - 1 { Activation::Linear } else { Activation::Relu };
            if activation != expected {
                return Err(corrupt(
                    entry_offset,
                    format!("layer {idx} has an unsupported activation layout"),
                ));
            }
            if let Some(&(_, prev_out)) = shapes.last() {
                if in_dim != prev_out {
                    return Err(corrupt(
                        entry_offset,
                        format!(
                            "layer {idx} input width {in_dim} does not chain with previous output width {prev_out}"
                        ),
                    ));
                }
            }
            shapes.push((in_dim, out_dim));
        }

        let mut layers = Vec::with_capacity(layer_count);
        for (idx, &(in_dim, out_dim)) in shapes.iter().enumerate() {
            let activation = if idx == layer_count - 1 { Activation::Linear } else { Activation::Relu };
            let read_f64s = |r: &mut Reader, n: usize| -> Result<Vec<f64>, ModelError> {
                let raw = r.take(n * 8).ok_or_else(|| short(r))?;
                Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
            };
            let weights = read_f64s(&mut r, in_dim * out_dim)?;
            let bias = read_f64s(&mut r, out_dim)?;
            if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
                return Err(ModelError::NonFiniteParameter { layer: idx });
            }
            layers.push(Layer { in_dim, out_dim, activation, weights, bias });
        }
        if r.remaining() != 0 {
            return Err(corrupt(r.pos(), "trailing bytes after parameters".to_string()));
        }
        Ok(Self { mode, layers })
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<(), ModelError> {
        fs::write(path, self.encode_checkpoint())?;
        Ok(())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self, ModelError> {
        let bytes = fs::read(path)?;
        Self::parse_checkpoint(&bytes)
    }
}
