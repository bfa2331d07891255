//! Fill-in-the-blank (FITB) outfit completion over precomputed product
//! embeddings.
//!
//! The pipeline: load per-product image and text embeddings, assemble product
//! representations in one of three modes, train a shared-weight projection
//! head with a margin-based contrastive loss, then answer FITB queries by
//! ranking candidate products against the incomplete outfit. Rankings are
//! produced either by the trained head (euclidean distance in the projected
//! space) or by a zero-shot cosine baseline on the raw embeddings, and are
//! scored with accuracy and mean reciprocal rank.
//!
//! All disk formats (embedding tables, checkpoints, outfit and query files)
//! are little-endian binary or JSON lines; all computation is f64 even though
//! embeddings are stored as f32.

pub mod dataset;
pub mod embedding_store;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod ranker;
pub mod trainer;

mod bytes;
mod rng;

pub use dataset::{FitbQuery, Outfit, PairSample};
pub use embedding_store::{EmbeddingStore, EmbeddingTable, Modality, RepresentationMode};
pub use loss::{LossConfig, PairLabel};
pub use metrics::{evaluate, EvalReport};
pub use model::{HeadConfig, SiameseHead};
pub use ranker::{rank, rank_all, Aggregation, Ranking, Scorer, ScoringConfig};
pub use trainer::{train, Optimizer, TrainConfig, TrainReport};
