//! Deterministic minibatch training: sampled pairs flow through the shared
//! head twice (once per endpoint), the contrastive loss couples the two
//! projections, and both twins' gradients accumulate into the single
//! parameter set before one optimizer step per batch.

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::dataset::{product_pool, sample_pairs, Outfit, PairSample};
use crate::dataset::DatasetError;
use crate::embedding_store::{EmbeddingStore, RepresentationMode, StoreError};
use crate::loss::{contrastive_grad, contrastive_loss, LossConfig, LossError, PairLabel};
use crate::model::{HeadConfig, ModelError, SiameseHead};
use crate::rng::{seeded, Stream};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {reason}")]
    InvalidConfig { reason: String },
    #[error("no trainable pairs: every outfit has fewer than two items")]
    NoTrainablePairs,
    #[error("optimizer state does not match parameters: {reason}")]
    StateMismatch { reason: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// First-order update rule. SGD: `v <- momentum * v - lr * g`, `p <- p + v`.
/// Adam: standard bias-corrected moments,
/// `p <- p - lr * m_hat / (sqrt(v_hat) + epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Sgd { lr: f64, momentum: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, epsilon: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::adam(1e-3)
    }
}

impl Optimizer {
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam { lr, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }

    pub fn sgd(lr: f64, momentum: f64) -> Self {
        Optimizer::Sgd { lr, momentum }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            Optimizer::Sgd { lr, .. } | Optimizer::Adam { lr, .. } => lr,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Sgd { .. } => "sgd",
            Optimizer::Adam { .. } => "adam",
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |reason: String| TrainError::InvalidConfig { reason };
        match *self {
            Optimizer::Sgd { lr, momentum } => {
                if !lr.is_finite() || lr <= 0.0 {
                    return Err(bad(format!("learning rate must be positive, got {lr}")));
                }
                if !momentum.is_finite() || momentum < 0.0 || momentum >= 1.0 {
                    return Err(bad(format!("momentum must be in [0, 1), got {momentum}")));
                }
            }
            Optimizer::Adam { lr, beta1, beta2, epsilon } => {
                if !lr.is_finite() || lr <= 0.0 {
                    return Err(bad(format!("learning rate must be positive, got {lr}")));
                }
                for (name, beta) in [("beta1", beta1), ("beta2", beta2)] {
                    if !beta.is_finite() || !(0.0..1.0).contains(&beta) {
                        return Err(bad(format!("{name} must be in [0, 1), got {beta}")));
                    }
                }
                if !epsilon.is_finite() || epsilon <= 0.0 {
                    return Err(bad(format!("epsilon must be positive, got {epsilon}")));
                }
            }
        }
        Ok(())
    }
}

/// Per-tensor optimizer accumulators (velocity for SGD, both moments plus
/// the step counter for Adam).
#[derive(Debug, Clone)]
pub struct OptimizerState {
    optimizer: Optimizer,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step_count: u64,
}

impl OptimizerState {
    pub fn new(optimizer: Optimizer, tensor_lens: &[usize]) -> Self {
        let first = tensor_lens.iter().map(|&n| vec![0.0; n]).collect();
        let second = match optimizer {
            Optimizer::Sgd { .. } => Vec::new(),
            Optimizer::Adam { .. } => tensor_lens.iter().map(|&n| vec![0.0; n]).collect(),
        };
        Self { optimizer, first, second, step_count: 0 }
    }

    pub fn for_head(optimizer: Optimizer, head: &SiameseHead) -> Self {
        let lens: Vec<usize> = head
            .layers()
            .iter()
            .flat_map(|l| [l.weights().len(), l.bias().len()])
            .collect();
        Self::new(optimizer, &lens)
    }

    pub fn optimizer(&self) -> Optimizer {
        self.optimizer
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update in place. `params` and `grads` must both match the
    /// tensor layout the state was built for.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<(), TrainError> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(TrainError::StateMismatch {
                reason: format!(
                    "expected {} tensors, got {} params and {} grads",
                    self.first.len(),
                    params.len(),
                    grads.len()
                ),
            });
        }
        for (idx, ((p, g), m)) in params.iter().zip(grads).zip(&self.first).enumerate() {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(TrainError::StateMismatch {
                    reason: format!("tensor {idx} length mismatch"),
                });
            }
        }
        self.step_count += 1;
        match self.optimizer {
            Optimizer::Sgd { lr, momentum } => {
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.first) {
                    for ((p_k, &g_k), v_k) in p.iter_mut().zip(*g).zip(v) {
                        *v_k = momentum * *v_k - lr * g_k;
                        *p_k += *v_k;
                    }
                }
            }
            Optimizer::Adam { lr, beta1, beta2, epsilon } => {
                let t = self.step_count as i32;
                let bias1 = 1.0 - beta1.powi(t);
                let bias2 = 1.0 - beta2.powi(t);
                for (((p, g), m), v) in
                    params.iter_mut().zip(grads).zip(&mut self.first).zip(&mut self.second)
                {
                    for (((p_k, &g_k), m_k), v_k) in p.iter_mut().zip(*g).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *m_k = beta1 * *m_k + (1.0 - beta1) * g_k;
                        *v_k = beta2 * *v_k + (1.0 - beta2) * g_k * g_k;
                        let m_hat = *m_k / bias1;
                        let v_hat = *v_k / bias2;
                        *p_k -= lr * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: RepresentationMode,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub loss: LossConfig,
    pub seed: u64,
    pub negatives_per_positive: usize,
    pub max_positives_per_outfit: usize,
    /// Hidden and output widths of the head.
    pub layer_dims: Vec<usize>,
    /// Draw a fresh pair sample every epoch instead of reusing the first.
    pub resample_pairs_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: RepresentationMode::TextAndImage,
            epochs: 10,
            batch_size: 64,
            optimizer: Optimizer::default(),
            loss: LossConfig::default(),
            seed: 42,
            negatives_per_positive: 1,
            max_positives_per_outfit: 15,
            layer_dims: vec![512, 128],
            resample_pairs_each_epoch: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |reason: String| TrainError::InvalidConfig { reason };
        if self.epochs == 0 {
            return Err(bad("epochs must be at least 1".to_string()));
        }
        if self.batch_size == 0 {
            return Err(bad("batch_size must be at least 1".to_string()));
        }
        if self.negatives_per_positive == 0 {
            return Err(bad("negatives_per_positive must be at least 1".to_string()));
        }
        if self.layer_dims.is_empty() || self.layer_dims.iter().any(|&d| d == 0) {
            return Err(bad("layer_dims must be non-empty positive widths".to_string()));
        }
        self.optimizer.validate()?;
        self.loss.validate().map_err(|e| bad(e.to_string()))?;
        Ok(())
    }
}

/// Training output: the fitted head plus per-epoch mean losses and the pair
/// counts of the initial sample.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub head: SiameseHead,
    pub epoch_losses: Vec<f64>,
    pub n_pairs: usize,
    pub n_positives: usize,
    pub n_negatives: usize,
}

/// Seeded shuffle of the pairs, then contiguous chunks. The final batch may
/// be short. Each epoch gets its own permutation.
pub fn make_batches(
    pairs: &[PairSample],
    batch_size: usize,
    epoch: u64,
    seed: u64,
) -> Vec<Vec<PairSample>> {
    assert!(batch_size > 0, "batch_size must be positive");
    let mut shuffled = pairs.to_vec();
    shuffled.shuffle(&mut seeded(seed, Stream::Batches, epoch));
    shuffled.chunks(batch_size).map(<[PairSample]>::to_vec).collect()
}

/// One minibatch update on the shared parameters. Both endpoints of every
/// pair run through the same head; their gradients sum. Gradients are
/// averaged over the batch and applied with a single optimizer step.
/// Returns the mean pair loss of the batch (computed before the update).
pub fn train_step(
    head: &mut SiameseHead,
    batch: &[PairSample],
    store: &EmbeddingStore,
    state: &mut OptimizerState,
    cfg: &TrainConfig,
) -> Result<f64, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::InvalidConfig { reason: "empty batch".to_string() });
    }
    let mut total_loss = 0.0;
    let mut accumulated = head.zeroed_gradients();
    for pair in batch {
        let x_a = store.assemble_representation(&pair.id_a, cfg.mode)?;
        let x_b = store.assemble_representation(&pair.id_b, cfg.mode)?;
        let (p_a, trace_a) = head.forward(&x_a)?;
        let (p_b, trace_b) = head.forward(&x_b)?;
        total_loss += contrastive_loss(&p_a, &p_b, pair.label, &cfg.loss)?;
        let (g_a, g_b) = contrastive_grad(&p_a, &p_b, pair.label, &cfg.loss)?;
        let (grads_a, _) = head.backward(&trace_a, &g_a)?;
        let (grads_b, _) = head.backward(&trace_b, &g_b)?;
        accumulated.add_assign(&grads_a);
        accumulated.add_assign(&grads_b);
    }
    let scale = 1.0 / batch.len() as f64;
    accumulated.scale(scale);
    let grad_slices = accumulated.tensor_slices();
    let mut param_slices = head.param_slices_mut();
    state.step(&mut param_slices, &grad_slices)?;
    Ok(total_loss * scale)
}

/// Full training run: sample pairs, initialize the head for the requested
/// mode, then `epochs` passes of shuffled minibatches. Two calls with equal
/// inputs produce identical heads and losses.
pub fn train(
    outfits: &[Outfit],
    store: &EmbeddingStore,
    cfg: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    cfg.validate()?;
    let pool = product_pool(outfits);
    let base_pairs = sample_pairs(
        outfits,
        &pool,
        cfg.negatives_per_positive,
        cfg.max_positives_per_outfit,
        cfg.seed,
    );
    if base_pairs.is_empty() {
        return Err(TrainError::NoTrainablePairs);
    }
    let n_positives = base_pairs.iter().filter(|p| p.label == PairLabel::Positive).count();
    let n_negatives = base_pairs.len() - n_positives;

    let input_dim = store.input_dim(cfg.mode)?;
    let head_config = HeadConfig { input_dim, layer_dims: cfg.layer_dims.clone() };
    let mut head = SiameseHead::init(&head_config, cfg.mode, cfg.seed)?;
    let mut state = OptimizerState::for_head(cfg.optimizer, &head);

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut resampled: Vec<PairSample>;
    for epoch in 0..cfg.epochs {
        let pairs: &[PairSample] = if cfg.resample_pairs_each_epoch && epoch > 0 {
            resampled = crate::dataset::sample_pairs_round(
                outfits,
                &pool,
                cfg.negatives_per_positive,
                cfg.max_positives_per_outfit,
                cfg.seed,
                epoch as u64,
            );
            &resampled
        } else {
            &base_pairs
        };
        let batches = make_batches(pairs, cfg.batch_size, epoch as u64, cfg.seed);
        let mut weighted_loss = 0.0;
        for batch in &batches {
            weighted_loss += train_step(&mut head, batch, store, &mut state, cfg)? * batch.len() as f64;
        }
        let mean = weighted_loss / pairs.len() as f64;
        log::debug!("epoch {}/{}: mean pair loss {mean:.6}", epoch + 1, cfg.epochs);
        epoch_losses.push(mean);
    }
    Ok(TrainReport { head, epoch_losses, n_pairs: base_pairs.len(), n_positives, n_negatives })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding_store::{EmbeddingTable, ModalityEmbedding};
    use crate::model::Activation;
    use crate::model::Layer;

    fn pair(a: &str, b: &str, label: PairLabel) -> PairSample {
        PairSample { id_a: a.to_string(), id_b: b.to_string(), label }
    }

    fn numbered_pairs(n: usize) -> Vec<PairSample> {
        (0..n).map(|i| pair(&format!("a{i}"), &format!("b{i}"), PairLabel::Positive)).collect()
    }

    #[test]
    fn batches_cover_all_pairs_with_short_tail() {
        let pairs = numbered_pairs(10);
        let batches = make_batches(&pairs, 4, 0, 42);
        assert_eq!(batches.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 2]);
        let mut seen: Vec<&PairSample> = batches.iter().flatten().collect();
        seen.sort_by(|a, b| a.id_a.cmp(&b.id_a));
        let mut expected: Vec<&PairSample> = pairs.iter().collect();
        expected.sort_by(|a, b| a.id_a.cmp(&b.id_a));
        assert_eq!(seen, expected);
    }

    #[test]
    fn batch_shuffles_differ_per_epoch_but_not_per_call() {
        let pairs = numbered_pairs(64);
        assert_eq!(make_batches(&pairs, 8, 0, 7), make_batches(&pairs, 8, 0, 7));
        assert_ne!(make_batches(&pairs, 8, 0, 7), make_batches(&pairs, 8, 1, 7));
        assert_ne!(make_batches(&pairs, 8, 0, 7), make_batches(&pairs, 8, 0, 8));
    }

    #[test]
    fn sgd_hand_computed_update() {
        let mut p = vec![1.0, 2.0];
        let g = vec![0.5, -1.0];
        let mut state = OptimizerState::new(Optimizer::sgd(0.1, 0.9), &[2]);
        let mut params: Vec<&mut [f64]> = vec![&mut p];
        state.step(&mut params, &[&g]).unwrap();
        // v = -lr * g = [-0.05, 0.1]; p = [0.95, 2.1].
        assert_eq!(p, vec![0.95, 2.1]);
        let g2 = vec![0.0, 0.0];
        let mut params: Vec<&mut [f64]> = vec![&mut p];
        state.step(&mut params, &[&g2]).unwrap();
        // v = 0.9 * v = [-0.045, 0.09]; momentum keeps moving.
        assert!((p[0] - 0.905).abs() < 1e-12);
        assert!((p[1] - 2.19).abs() < 1e-12);
    }

    #[test]
    fn adam_first_step_magnitude_is_learning_rate() {
        // With constant gradient g, the bias-corrected first step is
        // -lr * g / (|g| + eps), essentially lr in magnitude.
        let mut p = vec![0.0, 0.0];
        let g = vec![0.5, -0.25];
        let mut state = OptimizerState::new(Optimizer::adam(0.01), &[2]);
        let mut params: Vec<&mut [f64]> = vec![&mut p];
        state.step(&mut params, &[&g]).unwrap();
        assert!((p[0] + 0.01).abs() < 1e-6, "{}", p[0]);
        assert!((p[1] - 0.01).abs() < 1e-6, "{}", p[1]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn zero_gradient_leaves_sgd_params_unchanged() {
        let mut p = vec![1.0, -1.0, 3.5];
        let mut state = OptimizerState::new(Optimizer::sgd(0.5, 0.0), &[3]);
        let g = vec![0.0; 3];
        let mut params: Vec<&mut [f64]> = vec![&mut p];
        state.step(&mut params, &[&g]).unwrap();
        assert_eq!(p, vec![1.0, -1.0, 3.5]);
    }

    #[test]
    fn state_shape_mismatch_is_rejected() {
        let mut p = vec![0.0; 3];
        let mut state = OptimizerState::new(Optimizer::adam(0.01), &[2]);
        let g = vec![0.0; 3];
        let mut params: Vec<&mut [f64]> = vec![&mut p];
        assert!(matches!(
            state.step(&mut params, &[&g]),
            Err(TrainError::StateMismatch { .. })
        ));
    }

    #[test]
    fn config_validation_rules() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { epochs: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { negatives_per_positive: 0, ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { layer_dims: vec![], ..TrainConfig::default() }.validate().is_err());
        assert!(TrainConfig { optimizer: Optimizer::sgd(0.0, 0.0), ..TrainConfig::default() }
            .validate()
            .is_err());
        assert!(TrainConfig { optimizer: Optimizer::sgd(-0.5, 0.0), ..TrainConfig::default() }
            .validate()
            .is_err());
        assert!(TrainConfig {
            loss: LossConfig { margin: -1.0, ..LossConfig::default() },
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
    }

    fn tiny_store() -> EmbeddingStore {
        let image = EmbeddingTable::new(
            2,
            vec![
                ModalityEmbedding { product_id: "a".to_string(), vector: vec![1.0, 0.0] },
                ModalityEmbedding { product_id: "b".to_string(), vector: vec![0.9, 0.1] },
                ModalityEmbedding { product_id: "c".to_string(), vector: vec![-1.0, 0.0] },
                ModalityEmbedding { product_id: "d".to_string(), vector: vec![-0.9, -0.1] },
            ],
        )
        .unwrap();
        EmbeddingStore::from_tables(Some(image), None)
    }

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            mode: RepresentationMode::ImageOnly,
            epochs: 3,
            batch_size: 2,
            layer_dims: vec![3, 2],
            ..TrainConfig::default()
        }
    }

    fn tiny_outfits() -> Vec<Outfit> {
        vec![
            Outfit { outfit_id: "o1".to_string(), items: vec!["a".to_string(), "b".to_string()] },
            Outfit { outfit_id: "o2".to_string(), items: vec!["c".to_string(), "d".to_string()] },
        ]
    }

    #[test]
    fn lr_zero_step_reports_loss_but_leaves_params() {
        // train_step itself does not gate the learning rate; a zero rate is
        // a degenerate but mechanically valid update.
        let store = tiny_store();
        let cfg = TrainConfig {
            optimizer: Optimizer::sgd(0.0, 0.0),
            ..tiny_cfg()
        };
        let head_config = HeadConfig { input_dim: 2, layer_dims: cfg.layer_dims.clone() };
        let mut head = SiameseHead::init(&head_config, cfg.mode, 1).unwrap();
        let before = head.clone();
        let mut state = OptimizerState::for_head(cfg.optimizer, &head);
        let batch = vec![pair("a", "b", PairLabel::Positive), pair("a", "c", PairLabel::Negative)];
        let loss = train_step(&mut head, &batch, &store, &mut state, &cfg).unwrap();
        assert!(loss > 0.0);
        assert_eq!(head, before);
    }

    #[test]
    fn train_step_moves_shared_parameters_once() {
        let store = tiny_store();
        let cfg = tiny_cfg();
        let head_config = HeadConfig { input_dim: 2, layer_dims: cfg.layer_dims.clone() };
        let mut head = SiameseHead::init(&head_config, cfg.mode, 1).unwrap();
        let before = head.clone();
        let mut state = OptimizerState::for_head(cfg.optimizer, &head);
        let batch = vec![pair("a", "c", PairLabel::Positive)];
        train_step(&mut head, &batch, &store, &mut state, &cfg).unwrap();
        assert_ne!(head, before);
        // Twin application still shares every parameter: projecting the same
        // input twice is identical.
        let x = store.assemble_representation("a", cfg.mode).unwrap();
        assert_eq!(head.project(&x).unwrap(), head.project(&x).unwrap());
    }

    #[test]
    fn twin_gradients_accumulate_into_one_set() {
        // For a positive pair under a linear head, dL/dW = 2 (p_a - p_b)
        // (x_a - x_b)^T: the twin contributions reinforce rather than cancel.
        let store = tiny_store();
        let layer = Layer::new(2, 2, Activation::Linear, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        let mut head = SiameseHead::from_layers(RepresentationMode::ImageOnly, vec![layer]).unwrap();
        let cfg = TrainConfig {
            mode: RepresentationMode::ImageOnly,
            optimizer: Optimizer::sgd(1.0, 0.0),
            layer_dims: vec![2],
            ..TrainConfig::default()
        };
        let mut state = OptimizerState::for_head(cfg.optimizer, &head);
        let batch = vec![pair("a", "c", PairLabel::Positive)];
        train_step(&mut head, &batch, &store, &mut state, &cfg).unwrap();
        // x_a = (1, 0), x_c = (-1, 0), identity head: p = x.
        // dL/dp_a = 2 (p_a - p_c) = (4, 0); dL/dW from twin a: (4,0) x_a^T,
        // from twin c: (-4,0) x_c^T; sum = [[8, 0], [0, 0]].
        // SGD at lr 1: W = I - [[8,0],[0,0]] = [[-7, 0], [0, 1]].
        let w = head.layers()[0].weights();
        assert!((w[0] - -7.0).abs() < 1e-12);
        assert!((w[1] - 0.0).abs() < 1e-12);
        assert!((w[2] - 0.0).abs() < 1e-12);
        assert!((w[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn train_is_deterministic_and_reports_counts() {
        let store = tiny_store();
        let outfits = tiny_outfits();
        let cfg = tiny_cfg();
        let r1 = train(&outfits, &store, &cfg).unwrap();
        let r2 = train(&outfits, &store, &cfg).unwrap();
        assert_eq!(r1.head, r2.head);
        assert_eq!(r1.epoch_losses, r2.epoch_losses);
        assert_eq!(r1.head.encode_checkpoint(), r2.head.encode_checkpoint());
        assert_eq!(r1.epoch_losses.len(), cfg.epochs);
        assert_eq!(r1.n_pairs, r1.n_positives + r1.n_negatives);
        assert_eq!(r1.n_positives, 2);
        assert_eq!(r1.n_negatives, 2);
        assert_eq!(r1.head.mode(), RepresentationMode::ImageOnly);
        assert_eq!(r1.head.input_dim(), 2);
        assert_eq!(r1.head.output_dim(), 2);

        let r3 = train(&outfits, &store, &TrainConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(r1.head, r3.head);
    }

    #[test]
    fn train_rejects_pairless_outfits() {
        let store = tiny_store();
        let outfits = vec![Outfit { outfit_id: "o1".to_string(), items: vec!["a".to_string()] }];
        assert!(matches!(
            train(&outfits, &store, &tiny_cfg()),
            Err(TrainError::NoTrainablePairs)
        ));
    }

    #[test]
    fn train_propagates_missing_embeddings() {
        let store = tiny_store();
        let outfits = vec![Outfit {
            outfit_id: "o1".to_string(),
            items: vec!["a".to_string(), "zzz".to_string()],
        }];
        match train(&outfits, &store, &tiny_cfg()) {
            Err(TrainError::Store(StoreError::MissingProduct { id, .. })) => assert_eq!(id, "zzz"),
            other => panic!("expected missing product, got {other:?}"),
        }
    }

    #[test]
    fn resampling_changes_later_epochs_only() {
        let store = tiny_store();
        let outfits = tiny_outfits();
        let fixed = train(&outfits, &store, &tiny_cfg()).unwrap();
        let resampled = train(
            &outfits,
            &store,
            &TrainConfig { resample_pairs_each_epoch: true, ..tiny_cfg() },
        )
        .unwrap();
        // Same initial sample, so the first epoch matches exactly.
        assert_eq!(fixed.epoch_losses[0], resampled.epoch_losses[0]);
        assert_eq!(fixed.n_pairs, resampled.n_pairs);
    }
}
