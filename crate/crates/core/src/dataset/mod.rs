//! Outfit data, FITB query generation, pair sampling, and train/test splits.
//!
//! Outfits and queries travel as JSON lines. A FITB query holds an outfit
//! with its last item removed; that item hides among sampled distractors and
//! `gold_index` records where.

mod synthetic;

pub use synthetic::{generate_synthetic, SyntheticData, SyntheticFiles, SyntheticParams};

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::loss::PairLabel;
use crate::rng::{seeded, Stream};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: duplicate outfit id `{id}`")]
    DuplicateOutfitId { line: usize, id: String },
    #[error("line {line}: outfit `{id}` repeats item `{item}`")]
    DuplicateItem { line: usize, id: String, item: String },
    #[error("outfit `{outfit_id}` needs {needed} distractors but only {available} products exist outside it")]
    InsufficientDistractors { outfit_id: String, needed: usize, available: usize },
    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A curated set of products styled together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outfit {
    pub outfit_id: String,
    pub items: Vec<String>,
}

/// One fill-in-the-blank question: which candidate completes the outfit?
/// `gold_index` is present on labeled (test) queries and absent on unlabeled
/// ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitbQuery {
    pub query_id: String,
    pub incomplete_outfit: Vec<String>,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_index: Option<usize>,
}

impl FitbQuery {
    /// Structural invariants shared by parsed and generated queries.
    pub fn validate(&self) -> Result<(), String> {
        if self.query_id.is_empty() {
            return Err("empty query_id".to_string());
        }
        if self.incomplete_outfit.is_empty() {
            return Err("incomplete_outfit must hold at least one item".to_string());
        }
        if self.candidates.len() < 2 {
            return Err("need at least two candidates".to_string());
        }
        let distinct: BTreeSet<&String> = self.candidates.iter().collect();
        if distinct.len() != self.candidates.len() {
            return Err("candidates must be distinct".to_string());
        }
        let outfit: BTreeSet<&String> = self.incomplete_outfit.iter().collect();
        if self.candidates.iter().any(|c| outfit.contains(c)) {
            return Err("candidates must not appear in the incomplete outfit".to_string());
        }
        if let Some(gold) = self.gold_index {
            if gold >= self.candidates.len() {
                return Err(format!(
                    "gold_index {gold} out of range for {} candidates",
                    self.candidates.len()
                ));
            }
        }
        Ok(())
    }
}

/// A labeled training pair. Positive pairs co-occur in an outfit; negative
/// pairs never co-occur in any outfit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSample {
    pub id_a: String,
    pub id_b: String,
    pub label: PairLabel,
}

pub fn parse_outfits_str(text: &str) -> Result<Vec<Outfit>, DatasetError> {
    let mut outfits = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let outfit: Outfit = serde_json::from_str(raw)
            .map_err(|e| DatasetError::MalformedLine { line, reason: e.to_string() })?;
        if outfit.outfit_id.is_empty() {
            return Err(DatasetError::MalformedLine { line, reason: "empty outfit_id".to_string() });
        }
        if outfit.items.is_empty() {
            return Err(DatasetError::MalformedLine { line, reason: "empty items list".to_string() });
        }
        if outfit.items.iter().any(String::is_empty) {
            return Err(DatasetError::MalformedLine { line, reason: "empty item id".to_string() });
        }
        let mut items = BTreeSet::new();
        for item in &outfit.items {
            if !items.insert(item.as_str()) {
                return Err(DatasetError::DuplicateItem {
                    line,
                    id: outfit.outfit_id.clone(),
                    item: item.clone(),
                });
            }
        }
        if !seen_ids.insert(outfit.outfit_id.clone()) {
            return Err(DatasetError::DuplicateOutfitId { line, id: outfit.outfit_id });
        }
        outfits.push(outfit);
    }
    Ok(outfits)
}

pub fn parse_outfits(path: &Path) -> Result<Vec<Outfit>, DatasetError> {
    parse_outfits_str(&fs::read_to_string(path)?)
}

pub fn write_outfits(outfits: &[Outfit], path: &Path) -> Result<(), DatasetError> {
    let mut out = String::new();
    for outfit in outfits {
        out.push_str(&serde_json::to_string(outfit).expect("outfit serialization cannot fail"));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn parse_queries_str(text: &str) -> Result<Vec<FitbQuery>, DatasetError> {
    let mut queries = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let query: FitbQuery = serde_json::from_str(raw)
            .map_err(|e| DatasetError::MalformedLine { line, reason: e.to_string() })?;
        query
            .validate()
            .map_err(|reason| DatasetError::MalformedLine { line, reason })?;
        if !seen_ids.insert(query.query_id.clone()) {
            return Err(DatasetError::MalformedLine {
                line,
                reason: format!("duplicate query_id `{}`", query.query_id),
            });
        }
        queries.push(query);
    }
    Ok(queries)
}

pub fn parse_queries(path: &Path) -> Result<Vec<FitbQuery>, DatasetError> {
    parse_queries_str(&fs::read_to_string(path)?)
}

pub fn write_queries(queries: &[FitbQuery], path: &Path) -> Result<(), DatasetError> {
    let mut out = String::new();
    for query in queries {
        out.push_str(&serde_json::to_string(query).expect("query serialization cannot fail"));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Every product id appearing in any outfit, deduplicated and sorted.
pub fn product_pool(outfits: &[Outfit]) -> BTreeSet<String> {
    outfits.iter().flat_map(|o| o.items.iter().cloned()).collect()
}

/// [`generate_fitb_queries`] output: the queries plus how many outfits were
/// too short to query.
#[derive(Debug, Clone)]
pub struct GeneratedQueries {
    pub queries: Vec<FitbQuery>,
    pub skipped_outfits: usize,
}

/// Turns each outfit of length >= 2 into a query: the last item becomes the
/// gold candidate, hidden among `n_candidates - 1` distractors drawn without
/// replacement from products outside the outfit. Candidate order is shuffled;
/// the query id reuses the outfit id. Deterministic in `seed`.
pub fn generate_fitb_queries(
    outfits: &[Outfit],
    all_products: &BTreeSet<String>,
    n_candidates: usize,
    seed: u64,
) -> Result<GeneratedQueries, DatasetError> {
    if n_candidates < 2 {
        return Err(DatasetError::InvalidParameter {
            reason: format!("n_candidates must be at least 2, got {n_candidates}"),
        });
    }
    let mut rng = seeded(seed, Stream::Queries, 0);
    let mut queries = Vec::new();
    let mut skipped_outfits = 0usize;
    for outfit in outfits {
        if outfit.items.len() < 2 {
            skipped_outfits += 1;
            continue;
        }
        let (gold, incomplete) = outfit.items.split_last().expect("length checked above");
        let members: BTreeSet<&String> = outfit.items.iter().collect();
        let pool: Vec<&String> = all_products.iter().filter(|p| !members.contains(p)).collect();
        let needed = n_candidates - 1;
        if pool.len() < needed {
            return Err(DatasetError::InsufficientDistractors {
                outfit_id: outfit.outfit_id.clone(),
                needed,
                available: pool.len(),
            });
        }
        let mut picked = rand::seq::index::sample(&mut rng, pool.len(), needed).into_vec();
        picked.sort_unstable();
        let mut candidates: Vec<String> = picked.iter().map(|&i| pool[i].clone()).collect();
        candidates.push(gold.clone());
        candidates.shuffle(&mut rng);
        let gold_index = candidates.iter().position(|c| c == gold).expect("gold was just inserted");
        let query = FitbQuery {
            query_id: outfit.outfit_id.clone(),
            incomplete_outfit: incomplete.to_vec(),
            candidates,
            gold_index: Some(gold_index),
        };
        debug_assert!(query.validate().is_ok());
        queries.push(query);
    }
    Ok(GeneratedQueries { queries, skipped_outfits })
}

/// Draws labeled pairs for training. Within each outfit all item pairs are
/// positives, capped at `max_positives_per_outfit` by uniform subsampling.
/// Each positive spawns `negatives_per_positive` negatives: one endpoint is
/// kept (chosen by coin flip) and the other is replaced by a uniform draw
/// from the products that share no outfit with the kept endpoint. A kept
/// endpoint that co-occurs with everything yields no negative.
/// Deterministic in `seed`.
pub fn sample_pairs(
    outfits: &[Outfit],
    all_products: &BTreeSet<String>,
    negatives_per_positive: usize,
    max_positives_per_outfit: usize,
    seed: u64,
) -> Vec<PairSample> {
    sample_pairs_round(outfits, all_products, negatives_per_positive, max_positives_per_outfit, seed, 0)
}

/// `round` draws a fresh sample from the same distribution family; round 0 is
/// [`sample_pairs`].
pub(crate) fn sample_pairs_round(
    outfits: &[Outfit],
    all_products: &BTreeSet<String>,
    negatives_per_positive: usize,
    max_positives_per_outfit: usize,
    seed: u64,
    round: u64,
) -> Vec<PairSample> {
    let mut rng = seeded(seed, Stream::Pairs, round);

    // Products sharing at least one outfit, self included.
    let mut co_occur: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for outfit in outfits {
        for a in &outfit.items {
            let entry = co_occur.entry(a.as_str()).or_default();
            for b in &outfit.items {
                entry.insert(b.as_str());
            }
        }
    }
    let pool: Vec<&String> = all_products.iter().collect();
    let mut non_co_occurring: BTreeMap<&str, Vec<&String>> = BTreeMap::new();

    let mut samples = Vec::new();
    for outfit in outfits {
        let n = outfit.items.len();
        if n < 2 {
            continue;
        }
        let total = n * (n - 1) / 2;
        let pair_indices: Vec<usize> = if total <= max_positives_per_outfit {
            (0..total).collect()
        } else {
            let mut picked =
                rand::seq::index::sample(&mut rng, total, max_positives_per_outfit).into_vec();
            picked.sort_unstable();
            picked
        };
        for flat in pair_indices {
            let (i, j) = unrank_pair(flat, n);
            let id_a = outfit.items[i].as_str();
            let id_b = outfit.items[j].as_str();
            for _ in 0..negatives_per_positive {
                let keep = if rng.random_bool(0.5) { id_a } else { id_b };
                let partners = non_co_occurring.entry(keep).or_insert_with(|| {
                    let excluded = co_occur.get(keep).expect("keep comes from an outfit");
                    pool.iter().filter(|p| !excluded.contains(p.as_str())).copied().collect()
                });
                if partners.is_empty() {
                    continue;
                }
                let pick = partners[rng.random_range(0..partners.len())].clone();
                samples.push(PairSample {
                    id_a: keep.to_string(),
                    id_b: pick,
                    label: PairLabel::Negative,
                });
            }
            samples.push(PairSample {
                id_a: id_a.to_string(),
                id_b: id_b.to_string(),
                label: PairLabel::Positive,
            });
        }
    }
    samples
}

/// Lexicographic unranking of `flat` into the `flat`-th pair `(i, j)` with
/// `i < j < n`.
fn unrank_pair(flat: usize, n: usize) -> (usize, usize) {
    let mut remaining = flat;
    for i in 0..n - 1 {
        let row = n - 1 - i;
        if remaining < row {
            return (i, i + 1 + remaining);
        }
        remaining -= row;
    }
    unreachable!("flat index {flat} out of range for n = {n}")
}

/// Seeded shuffle split. `test_fraction` of the outfits (rounded to nearest)
/// go to the test side; both sides keep their original relative order.
pub fn split_outfits(
    outfits: &[Outfit],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<Outfit>, Vec<Outfit>), DatasetError> {
    if !(0.0..=1.0).contains(&test_fraction) || !test_fraction.is_finite() {
        return Err(DatasetError::InvalidParameter {
            reason: format!("test_fraction must be in [0, 1], got {test_fraction}"),
        });
    }
    let mut indices: Vec<usize> = (0..outfits.len()).collect();
    indices.shuffle(&mut seeded(seed, Stream::Split, 0));
    let n_test = (outfits.len() as f64 * test_fraction).round() as usize;
    let test_set: BTreeSet<usize> = indices.into_iter().take(n_test).collect();
    let mut train = Vec::with_capacity(outfits.len() - n_test);
    let mut test = Vec::with_capacity(n_test);
    for (idx, outfit) in outfits.iter().enumerate() {
        if test_set.contains(&idx) {
            test.push(outfit.clone());
        } else {
            train.push(outfit.clone());
        }
    }
    Ok((train, test))
}
