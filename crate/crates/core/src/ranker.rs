//! Candidate scoring and deterministic FITB ranking.
//!
//! Two scorers: the trained head projects items and candidates and ranks by
//! euclidean distance in the projected space (lower is better, aggregated by
//! mean or min over the incomplete outfit); the zero-shot baseline skips
//! training entirely and ranks by mean cosine similarity of per-modality
//! L2-normalized raw embeddings (higher is better).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FitbQuery;
use crate::embedding_store::{EmbeddingStore, Modality, RepresentationMode, StoreError};
use crate::loss::{euclidean_distance, LossError};
use crate::model::{ModelError, SiameseHead};

#[derive(Debug, Error)]
pub enum RankError {
    #[error("scorer `head` requires a trained head")]
    MissingHead,
    #[error("scorer `zeroshot` does not take a head")]
    UnexpectedHead,
    #[error("checkpoint was trained for mode {head_mode} but scoring requested {requested}")]
    ModeMismatch { head_mode: RepresentationMode, requested: RepresentationMode },
    #[error("query `{query_id}` has an empty incomplete outfit")]
    EmptyOutfit { query_id: String },
    #[error("zero-norm {modality} vector for product `{id}` cannot be normalized")]
    ZeroNorm { id: String, modality: Modality },
    #[error("query `{query_id}`: {source}")]
    InQuery { query_id: String, #[source] source: Box<RankError> },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Loss(#[from] LossError),
}

/// How a candidate is scored against the incomplete outfit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scorer {
    #[serde(rename = "head")]
    TrainedHead,
    #[serde(rename = "zeroshot")]
    ZeroShot,
}

impl std::fmt::Display for Scorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scorer::TrainedHead => "head",
            Scorer::ZeroShot => "zeroshot",
        })
    }
}

impl std::str::FromStr for Scorer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "head" => Ok(Scorer::TrainedHead),
            "zeroshot" => Ok(Scorer::ZeroShot),
            other => Err(format!("unknown scorer `{other}` (expected head or zeroshot)")),
        }
    }
}

/// Distance aggregation over the incomplete outfit (trained-head scorer).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregation {
    #[serde(rename = "mean")]
    MeanDistance,
    #[serde(rename = "min")]
    MinDistance,
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Aggregation::MeanDistance => "mean",
            Aggregation::MinDistance => "min",
        })
    }
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Aggregation::MeanDistance),
            "min" => Ok(Aggregation::MinDistance),
            other => Err(format!("unknown aggregation `{other}` (expected mean or min)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoringConfig {
    pub scorer: Scorer,
    pub aggregation: Aggregation,
    pub mode: RepresentationMode,
}

/// A scored query. `order` lists candidate indices best first; `scores`
/// stays in candidate order (so `scores[order[0]]` is the winning score).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub query_id: String,
    #[serde(rename = "ranking")]
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
}

/// Distance of the candidate's projection to the outfit items' projections,
/// aggregated. Lower is better.
pub fn score_candidate_model(
    head: &SiameseHead,
    store: &EmbeddingStore,
    mode: RepresentationMode,
    outfit_items: &[String],
    candidate: &str,
    aggregation: Aggregation,
) -> Result<f64, RankError> {
    let projected_candidate = head.project(&store.assemble_representation(candidate, mode)?)?;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    for item in outfit_items {
        let projected_item = head.project(&store.assemble_representation(item, mode)?)?;
        let d = euclidean_distance(&projected_candidate, &projected_item)?;
        sum += d;
        min = min.min(d);
    }
    Ok(match aggregation {
        Aggregation::MeanDistance => sum / outfit_items.len() as f64,
        Aggregation::MinDistance => min,
    })
}

fn normalized(store: &EmbeddingStore, id: &str, modality: Modality) -> Result<Vec<f64>, RankError> {
    let raw = store.modality_vector(id, modality)?;
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 0.0 {
        return Err(RankError::ZeroNorm { id: id.to_string(), modality });
    }
    Ok(raw.iter().map(|v| v / norm).collect())
}

/// Unit-norm raw representation for the zero-shot scorer. For
/// `TextAndImage` the two unit-normalized halves are concatenated and the
/// result renormalized (dividing by sqrt(2)), weighting both modalities
/// equally.
fn zeroshot_representation(
    store: &EmbeddingStore,
    id: &str,
    mode: RepresentationMode,
) -> Result<Vec<f64>, RankError> {
    match mode {
        RepresentationMode::ImageOnly => normalized(store, id, Modality::Image),
        RepresentationMode::TextOnly => normalized(store, id, Modality::Text),
        RepresentationMode::TextAndImage => {
            let mut v = normalized(store, id, Modality::Image)?;
            v.extend(normalized(store, id, Modality::Text)?);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            Ok(v.into_iter().map(|x| x / norm).collect())
        }
    }
}

/// Mean cosine similarity between the candidate and the outfit items, on
/// unit-normalized raw embeddings. Higher is better. Invariant to positive
/// rescaling of any stored vector.
pub fn score_candidate_zeroshot(
    store: &EmbeddingStore,
    mode: RepresentationMode,
    outfit_items: &[String],
    candidate: &str,
) -> Result<f64, RankError> {
    let cand = zeroshot_representation(store, candidate, mode)?;
    let mut sum = 0.0;
    for item in outfit_items {
        let item_repr = zeroshot_representation(store, item, mode)?;
        sum += cand.iter().zip(&item_repr).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(sum / outfit_items.len() as f64)
}

/// Scores every candidate and sorts deterministically: by score in the
/// scorer's preferred direction, ties broken by lower candidate index.
/// `head` must be present exactly when the scorer is `TrainedHead`, and its
/// training mode must equal the scoring mode.
pub fn rank(
    query: &FitbQuery,
    scoring: &ScoringConfig,
    head: Option<&SiameseHead>,
    store: &EmbeddingStore,
) -> Result<Ranking, RankError> {
    match (scoring.scorer, head) {
        (Scorer::TrainedHead, None) => return Err(RankError::MissingHead),
        (Scorer::ZeroShot, Some(_)) => return Err(RankError::UnexpectedHead),
        (Scorer::TrainedHead, Some(h)) if h.mode() != scoring.mode => {
            return Err(RankError::ModeMismatch { head_mode: h.mode(), requested: scoring.mode });
        }
        _ => {}
    }
    if query.incomplete_outfit.is_empty() {
        return Err(RankError::EmptyOutfit { query_id: query.query_id.clone() });
    }
    let in_query = |source: RankError| RankError::InQuery {
        query_id: query.query_id.clone(),
        source: Box::new(source),
    };
    let mut scores = Vec::with_capacity(query.candidates.len());
    for candidate in &query.candidates {
        let score = match scoring.scorer {
            Scorer::TrainedHead => score_candidate_model(
                head.expect("checked above"),
                store,
                scoring.mode,
                &query.incomplete_outfit,
                candidate,
                scoring.aggregation,
            ),
            Scorer::ZeroShot => {
                score_candidate_zeroshot(store, scoring.mode, &query.incomplete_outfit, candidate)
            }
        }
        .map_err(in_query)?;
        scores.push(score);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    match scoring.scorer {
        // Distances: ascending.
        Scorer::TrainedHead => {
            order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        }
        // Similarities: descending.
        Scorer::ZeroShot => {
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        }
    }
    Ok(Ranking { query_id: query.query_id.clone(), order, scores })
}

/// Ranks a batch of queries, optionally across `threads` workers. Results
/// are in query order and identical for any thread count; the first error in
/// query order wins.
pub fn rank_all(
    queries: &[FitbQuery],
    scoring: &ScoringConfig,
    head: Option<&SiameseHead>,
    store: &EmbeddingStore,
    threads: usize,
) -> Result<Vec<Ranking>, RankError> {
    let workers = threads.max(1).min(queries.len().max(1));
    if workers <= 1 {
        return queries.iter().map(|q| rank(q, scoring, head, store)).collect();
    }
    let chunk_size = queries.len().div_ceil(workers);
    let chunk_results: Vec<Result<Vec<Ranking>, RankError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = queries
            .chunks(chunk_size)
            .map(|chunk| {
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|q| rank(q, scoring, head, store))
                        .collect::<Result<Vec<Ranking>, RankError>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("ranking worker panicked")).collect()
    });
    let mut rankings = Vec::with_capacity(queries.len());
    for result in chunk_results {
        rankings.extend(result?);
    }
    Ok(rankings)
}
