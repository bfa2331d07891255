//! FITB evaluation metrics: accuracy and mean reciprocal rank.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::FitbQuery;
use crate::embedding_store::{EmbeddingStore, RepresentationMode};
use crate::model::SiameseHead;
use crate::ranker::{rank_all, Aggregation, RankError, Ranking, Scorer, ScoringConfig};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no queries with a gold index; nothing to evaluate")]
    NoScorableQueries,
    #[error("query `{query_id}`: gold index {gold_index} out of range for {n_candidates} candidates")]
    GoldOutOfRange { query_id: String, gold_index: usize, n_candidates: usize },
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// 1-based position of the gold candidate in the ranking, or `None` when
/// `gold_index` does not appear in the order.
pub fn gold_rank(ranking: &Ranking, gold_index: usize) -> Option<usize> {
    ranking.order.iter().position(|&c| c == gold_index).map(|p| p + 1)
}

/// Fraction of queries whose gold candidate was ranked first. NaN on empty
/// input.
pub fn accuracy(gold_ranks: &[usize]) -> f64 {
    let hits = gold_ranks.iter().filter(|&&r| r == 1).count();
    hits as f64 / gold_ranks.len() as f64
}

/// Mean of 1/rank over queries, with ranks 1-based. NaN on empty input.
pub fn mrr(gold_ranks: &[usize]) -> f64 {
    let sum: f64 = gold_ranks.iter().map(|&r| 1.0 / r as f64).sum();
    sum / gold_ranks.len() as f64
}

/// Evaluation summary for one scorer configuration over one query set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Queries actually scored (had a gold index).
    pub n_queries: usize,
    /// Queries skipped because they carry no gold index.
    pub n_skipped: usize,
    pub accuracy: f64,
    pub mrr: f64,
    pub mode: RepresentationMode,
    pub scorer: Scorer,
    pub aggregation: Aggregation,
}

impl std::fmt::Display for EvalReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<12} {}", "mode", self.mode)?;
        writeln!(f, "{:<12} {}", "scorer", self.scorer)?;
        writeln!(f, "{:<12} {}", "aggregation", self.aggregation)?;
        writeln!(f, "{:<12} {}", "queries", self.n_queries)?;
        writeln!(f, "{:<12} {}", "skipped", self.n_skipped)?;
        writeln!(f, "{:<12} {:.4}", "accuracy", self.accuracy)?;
        write!(f, "{:<12} {:.4}", "mrr", self.mrr)
    }
}

/// Ranks every query carrying a gold index and reports accuracy and MRR.
/// Queries without a gold index are skipped and counted; if none remain the
/// evaluation fails rather than reporting over an empty set.
pub fn evaluate(
    queries: &[FitbQuery],
    scoring: &ScoringConfig,
    head: Option<&SiameseHead>,
    store: &EmbeddingStore,
    threads: usize,
) -> Result<EvalReport, MetricsError> {
    let scorable: Vec<FitbQuery> =
        queries.iter().filter(|q| q.gold_index.is_some()).cloned().collect();
    let n_skipped = queries.len() - scorable.len();
    if scorable.is_empty() {
        return Err(MetricsError::NoScorableQueries);
    }
    let rankings = rank_all(&scorable, scoring, head, store, threads)?;
    let mut gold_ranks = Vec::with_capacity(scorable.len());
    for (query, ranking) in scorable.iter().zip(&rankings) {
        let gold_index = query.gold_index.expect("filtered above");
        let rank = gold_rank(ranking, gold_index).ok_or_else(|| MetricsError::GoldOutOfRange {
            query_id: query.query_id.clone(),
            gold_index,
            n_candidates: query.candidates.len(),
        })?;
        gold_ranks.push(rank);
    }
    Ok(EvalReport {
        n_queries: scorable.len(),
        n_skipped,
        accuracy: accuracy(&gold_ranks),
        mrr: mrr(&gold_ranks),
        mode: scoring.mode,
        scorer: scoring.scorer,
        aggregation: scoring.aggregation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding_store::{EmbeddingTable, ModalityEmbedding};
    use crate::model::{Activation, Layer};

    #[test]
    fn accuracy_counts_rank_one_hits() {
        assert_eq!(accuracy(&[1, 2, 4]), 1.0 / 3.0);
        assert_eq!(accuracy(&[1, 1, 1]), 1.0);
        assert_eq!(accuracy(&[2, 3]), 0.0);
    }

    #[test]
    fn mrr_hand_values() {
        let got = mrr(&[1, 2, 4]);
        assert!((got - (1.0 + 0.5 + 0.25) / 3.0).abs() < 1e-12);
        assert_eq!(mrr(&[1, 1]), 1.0);
        // One query at each of 5 positions: the uniform-random expectation.
        let got = mrr(&[1, 2, 3, 4, 5]);
        assert!((got - 137.0 / 300.0).abs() < 1e-12);
    }

    #[test]
    fn empty_rank_lists_yield_nan() {
        assert!(accuracy(&[]).is_nan());
        assert!(mrr(&[]).is_nan());
    }

    #[test]
    fn gold_rank_reads_the_order() {
        let ranking = Ranking {
            query_id: "q".to_string(),
            order: vec![2, 0, 1],
            scores: vec![0.5, 0.9, 0.1],
        };
        assert_eq!(gold_rank(&ranking, 2), Some(1));
        assert_eq!(gold_rank(&ranking, 0), Some(2));
        assert_eq!(gold_rank(&ranking, 1), Some(3));
        assert_eq!(gold_rank(&ranking, 7), None);
    }

    fn line_store() -> EmbeddingStore {
        let rec = |id: &str, v: Vec<f32>| ModalityEmbedding {
            product_id: id.to_string(),
            vector: v,
        };
        EmbeddingStore::from_tables(
            Some(
                EmbeddingTable::new(
                    2,
                    vec![
                        rec("i0", vec![0.0, 0.0]),
                        rec("near", vec![0.1, 0.0]),
                        rec("far", vec![9.0, 0.0]),
                    ],
                )
                .unwrap(),
            ),
            None,
        )
    }

    fn identity_head() -> SiameseHead {
        let layer =
            Layer::new(2, 2, Activation::Linear, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        SiameseHead::from_layers(RepresentationMode::ImageOnly, vec![layer]).unwrap()
    }

    fn scoring() -> ScoringConfig {
        ScoringConfig {
            scorer: Scorer::TrainedHead,
            aggregation: Aggregation::MeanDistance,
            mode: RepresentationMode::ImageOnly,
        }
    }

    fn q(id: &str, gold: Option<usize>) -> FitbQuery {
        FitbQuery {
            query_id: id.to_string(),
            incomplete_outfit: vec!["i0".to_string()],
            candidates: vec!["far".to_string(), "near".to_string()],
            gold_index: gold,
        }
    }

    #[test]
    fn evaluate_scores_and_skips() {
        let store = line_store();
        let head = identity_head();
        // gold "near" at index 1 ranks first; gold "far" at index 0 ranks
        // second; the gold-less query is skipped.
        let queries = vec![q("a", Some(1)), q("b", Some(0)), q("c", None)];
        let report = evaluate(&queries, &scoring(), Some(&head), &store, 1).unwrap();
        assert_eq!(report.n_queries, 2);
        assert_eq!(report.n_skipped, 1);
        assert!((report.accuracy - 0.5).abs() < 1e-12);
        assert!((report.mrr - 0.75).abs() < 1e-12);
        assert_eq!(report.mode, RepresentationMode::ImageOnly);
        assert_eq!(report.scorer, Scorer::TrainedHead);
    }

    #[test]
    fn evaluate_rejects_gold_free_input() {
        let store = line_store();
        let head = identity_head();
        let queries = vec![q("a", None), q("b", None)];
        assert!(matches!(
            evaluate(&queries, &scoring(), Some(&head), &store, 1),
            Err(MetricsError::NoScorableQueries)
        ));
        assert!(matches!(
            evaluate(&[], &scoring(), Some(&head), &store, 1),
            Err(MetricsError::NoScorableQueries)
        ));
    }

    #[test]
    fn evaluate_rejects_out_of_range_gold() {
        let store = line_store();
        let head = identity_head();
        let queries = vec![q("a", Some(5))];
        assert!(matches!(
            evaluate(&queries, &scoring(), Some(&head), &store, 1),
            Err(MetricsError::GoldOutOfRange { gold_index: 5, n_candidates: 2, .. })
        ));
    }

    #[test]
    fn evaluate_is_thread_count_invariant() {
        let store = line_store();
        let head = identity_head();
        let queries: Vec<FitbQuery> =
            (0..9).map(|i| q(&format!("q{i}"), Some(i % 2))).collect();
        let base = evaluate(&queries, &scoring(), Some(&head), &store, 1).unwrap();
        for threads in [2, 4, 16] {
            let parallel = evaluate(&queries, &scoring(), Some(&head), &store, threads).unwrap();
            assert_eq!(parallel, base);
        }
    }

    #[test]
    fn report_serializes_and_displays() {
        let report = EvalReport {
            n_queries: 10,
            n_skipped: 2,
            accuracy: 0.7,
            mrr: 0.825,
            mode: RepresentationMode::TextAndImage,
            scorer: Scorer::ZeroShot,
            aggregation: Aggregation::MeanDistance,
        };
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"mode\":\"both\""), "{json}");
        assert!(json.contains("\"scorer\":\"zeroshot\""), "{json}");
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        let text = report.to_string();
        assert!(text.contains("accuracy"));
        assert!(text.contains("0.7000"));
        assert!(text.contains("0.8250"));
    }
}
