//! Corpus-level BLEU, length-bucketed reporting, and token accuracy.
//!
//! Scores are reported on the 0..100 scale. Modified n-gram precision clips each
//! hypothesis n-gram count per sentence at its reference count, and the clipped
//! counts are aggregated over the whole corpus before division, so pair order
//! never affects the score.

use std::collections::HashMap;

use crate::corpus::ParallelCorpus;
use crate::error::{Error, Result};
use crate::seq2seq::{DecodeConfig, Seq2SeqModel};
use crate::vocab::Vocabulary;

/// Corpus BLEU with per-n precisions and the brevity penalty.
#[derive(Debug, Clone)]
pub struct BleuReport {
    /// 100 * BP * geometric mean of p1..p_max_n, or 0 when any precision is 0.
    pub score: f64,
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub hypothesis_length: usize,
    pub reference_length: usize,
}

/// Per-source-length BLEU rows plus the overall score.
#[derive(Debug, Clone)]
pub struct LengthBucketReport {
    pub rows: Vec<LengthBucketRow>,
    pub overall: BleuReport,
}

#[derive(Debug, Clone)]
pub struct LengthBucketRow {
    pub source_length: usize,
    pub pair_count: usize,
    pub bleu: f64,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_default() += 1;
        }
    }
    counts
}

/// Single-reference corpus BLEU over n = 1..=max_n.
pub fn corpus_bleu(
    hypotheses: &[Vec<String>],
    references: &[Vec<String>],
    max_n: usize,
) -> Result<BleuReport> {
    assert!(max_n >= 1, "max_n must be at least 1");
    if hypotheses.len() != references.len() {
        return Err(Error::InvalidInput(format!(
            "hypothesis/reference count mismatch: {} vs {}",
            hypotheses.len(),
            references.len()
        )));
    }
    if hypotheses.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut matched = vec![0u64; max_n];
    let mut total = vec![0u64; max_n];
    let mut hyp_len = 0usize;
    let mut ref_len = 0usize;
    for (hyp, reference) in hypotheses.iter().zip(references) {
        hyp_len += hyp.len();
        ref_len += reference.len();
        for n in 1..=max_n {
            let hyp_counts = ngram_counts(hyp, n);
            if hyp_counts.is_empty() {
                continue;
            }
            let ref_counts = ngram_counts(reference, n);
            for (gram, count) in hyp_counts {
                total[n - 1] += count;
                matched[n - 1] += count.min(*ref_counts.get(gram).unwrap_or(&0));
            }
        }
    }

    let precisions: Vec<f64> = (0..max_n)
        .map(|i| {
            if total[i] == 0 {
                0.0
            } else {
                matched[i] as f64 / total[i] as f64
            }
        })
        .collect();

    let brevity_penalty = if hyp_len == 0 || hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };

    let score = if precisions.iter().all(|&p| p > 0.0) {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / max_n as f64;
        100.0 * brevity_penalty * log_mean.exp()
    } else {
        0.0
    };

    Ok(BleuReport {
        score,
        precisions,
        brevity_penalty,
        hypothesis_length: hyp_len,
        reference_length: ref_len,
    })
}

/// Sentence-level BLEU with add-one smoothing on the n > 1 precisions.
/// Diagnostic only; corpus scores come from `corpus_bleu`.
pub fn smoothed_sentence_bleu(hypothesis: &[String], reference: &[String], max_n: usize) -> f64 {
    assert!(max_n >= 1, "max_n must be at least 1");
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let hyp_counts = ngram_counts(hypothesis, n);
        let ref_counts = ngram_counts(reference, n);
        let total: u64 = hyp_counts.values().sum();
        let matched: u64 = hyp_counts
            .iter()
            .map(|(gram, count)| (*count).min(*ref_counts.get(*gram).unwrap_or(&0)))
            .sum();
        let p = if n == 1 {
            if total == 0 {
                return 0.0;
            }
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
    }
    let bp = if hypothesis.is_empty() || hypothesis.len() >= reference.len() {
        1.0
    } else {
        (1.0 - reference.len() as f64 / hypothesis.len() as f64).exp()
    };
    100.0 * bp * (log_sum / max_n as f64).exp()
}

/// Position-wise token match rate. Positions where the hypothesis is shorter or
/// longer than the reference count as wrong, so the denominator for each pair is
/// max(|hyp|, |ref|).
pub fn token_accuracy(hypotheses: &[Vec<String>], references: &[Vec<String>]) -> Result<f64> {
    if hypotheses.len() != references.len() {
        return Err(Error::InvalidInput(format!(
            "hypothesis/reference count mismatch: {} vs {}",
            hypotheses.len(),
            references.len()
        )));
    }
    if hypotheses.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut matched = 0usize;
    let mut positions = 0usize;
    for (hyp, reference) in hypotheses.iter().zip(references) {
        positions += hyp.len().max(reference.len());
        matched += hyp
            .iter()
            .zip(reference)
            .filter(|(h, r)| h == r)
            .count();
    }
    if positions == 0 {
        return Ok(1.0);
    }
    Ok(matched as f64 / positions as f64)
}

/// Transliterates every pair and scores it, grouped by source token count.
///
/// Rows cover the contiguous range of observed source lengths; lengths absent
/// from the data get a zero-count row so bucket counts always sum to the corpus
/// size. Buckets are independent, so `threads > 1` scores them concurrently
/// without changing any result.
pub fn bleu_by_length(
    model: &Seq2SeqModel,
    src_vocab: &Vocabulary,
    tgt_vocab: &Vocabulary,
    pairs: &ParallelCorpus,
    decode: &DecodeConfig,
    threads: usize,
) -> Result<LengthBucketReport> {
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let min_len = pairs.pairs.iter().map(|p| p.source.len()).min().unwrap();
    let max_len = pairs.pairs.iter().map(|p| p.source.len()).max().unwrap();

    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_len - min_len + 1];
    for (i, pair) in pairs.pairs.iter().enumerate() {
        buckets[pair.source.len() - min_len].push(i);
    }

    let transliterate_bucket = |indices: &[usize]| -> Result<Vec<Vec<String>>> {
        indices
            .iter()
            .map(|&i| {
                let text = pairs.pairs[i].source.join(" ");
                let out = model.transliterate(src_vocab, tgt_vocab, &text, decode)?;
                Ok(out.split_whitespace().map(str::to_owned).collect())
            })
            .collect()
    };

    let hyp_by_bucket: Vec<Result<Vec<Vec<String>>>> = if threads > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = buckets
                .chunks((buckets.len() + threads - 1) / threads.max(1))
                .map(|chunk| {
                    scope.spawn(move || {
                        chunk
                            .iter()
                            .map(|b| transliterate_bucket(b))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("bucket worker panicked"))
                .collect()
        })
    } else {
        buckets.iter().map(|b| transliterate_bucket(b)).collect()
    };

    let mut rows = Vec::with_capacity(buckets.len());
    let mut all_hyps = Vec::with_capacity(pairs.len());
    let mut all_refs = Vec::with_capacity(pairs.len());
    for (offset, (indices, hyps)) in buckets.iter().zip(hyp_by_bucket).enumerate() {
        let hyps = hyps?;
        let refs: Vec<Vec<String>> = indices
            .iter()
            .map(|&i| pairs.pairs[i].target.clone())
            .collect();
        let bleu = if indices.is_empty() {
            0.0
        } else {
            corpus_bleu(&hyps, &refs, 4)?.score
        };
        rows.push(LengthBucketRow {
            source_length: min_len + offset,
            pair_count: indices.len(),
            bleu,
        });
        all_hyps.extend(hyps);
        all_refs.extend(refs);
    }
    let overall = corpus_bleu(&all_hyps, &all_refs, 4)?;
    Ok(LengthBucketReport { rows, overall })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn perfect_match_scores_100() {
        let data = vec![toks("yeh kitab hai"), toks("main ja raha hoon")];
        let report = corpus_bleu(&data, &data, 4).unwrap();
        assert!((report.score - 100.0).abs() < 1e-9);
        assert_eq!(report.brevity_penalty, 1.0);
        assert!(report.precisions.iter().all(|&p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn hand_worked_brevity_case() {
        let report = corpus_bleu(&[toks("a b c d")], &[toks("a b c d e")], 4).unwrap();
        assert_eq!(report.precisions, vec![1.0, 1.0, 1.0, 1.0]);
        assert!((report.brevity_penalty - (1.0f64 - 5.0 / 4.0).exp()).abs() < 1e-12);
        assert!(
            (report.score - 77.8801).abs() < 1e-3,
            "score was {}",
            report.score
        );
    }

    #[test]
    fn clipping_zeroes_the_score() {
        let report = corpus_bleu(&[toks("the the the")], &[toks("the cat")], 4).unwrap();
        assert!((report.precisions[0] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.precisions[1], 0.0);
        assert_eq!(report.score, 0.0);
    }

    #[test]
    fn empty_hypothesis_contributes_length_only() {
        let report = corpus_bleu(
            &[toks(""), toks("a b")],
            &[toks("x"), toks("a b")],
            2,
        )
        .unwrap();
        assert_eq!(report.hypothesis_length, 2);
        assert_eq!(report.reference_length, 3);
        assert!(report.brevity_penalty < 1.0);
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            corpus_bleu(&[toks("a")], &[], 4),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(corpus_bleu(&[], &[], 4), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn smoothed_sentence_bleu_tolerates_missing_ngrams() {
        let s = smoothed_sentence_bleu(&toks("a b"), &toks("a b"), 4);
        assert!(s > 0.0, "short perfect sentence should not zero out, got {s}");
        assert_eq!(smoothed_sentence_bleu(&toks("x y"), &toks("a b"), 4), 0.0);
    }

    #[test]
    fn token_accuracy_cases() {
        let same = vec![toks("a b c")];
        assert_eq!(token_accuracy(&same, &same).unwrap(), 1.0);

        let disjoint = token_accuracy(&[toks("x y")], &[toks("a b")]).unwrap();
        assert_eq!(disjoint, 0.0);

        let partial = token_accuracy(&[toks("a b")], &[toks("a c d")]).unwrap();
        assert!((partial - 1.0 / 3.0).abs() < 1e-12);

        let longer = token_accuracy(&[toks("a b c d")], &[toks("a b")]).unwrap();
        assert!((longer - 0.5).abs() < 1e-12);

        assert!(matches!(
            token_accuracy(&[], &[]),
            Err(Error::EmptyCorpus)
        ));
    }
}
