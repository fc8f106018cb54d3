//! Parallel corpus loading, filtering, splitting, and variant-based augmentation.
//!
//! A corpus is an ordered list of aligned sentence pairs. All operations here are
//! pure functions of their inputs plus an explicit seed, so repeated runs with the
//! same arguments produce identical output.

use std::collections::HashMap;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One aligned sentence pair, whitespace-tokenized.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SentencePair {
    pub source: Vec<String>,
    pub target: Vec<String>,
}

/// Ordered list of aligned sentence pairs. Line order from the input files is preserved.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParallelCorpus {
    pub pairs: Vec<SentencePair>,
}

impl ParallelCorpus {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Disjoint train/test partition of a corpus.
#[derive(Debug, Clone)]
pub struct SplitCorpus {
    pub train: ParallelCorpus,
    pub test: ParallelCorpus,
}

/// Reads one whitespace-tokenized sentence per line. Lines are validated as UTF-8
/// individually so decode errors can name the offending line.
pub fn read_tokenized_lines<R: BufRead>(mut reader: R, name: &str) -> Result<Vec<Vec<String>>> {
    let mut sentences = Vec::new();
    let mut buf = Vec::new();
    let mut line = 0usize;
    loop {
        line += 1;
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let text = std::str::from_utf8(&buf).map_err(|_| Error::Utf8 {
            name: name.to_string(),
            line,
        })?;
        sentences.push(text.split_whitespace().map(str::to_owned).collect());
    }
    Ok(sentences)
}

/// Pairs line i of the source stream with line i of the target stream.
///
/// Empty lines yield empty token lists and are retained; `filter_max_length`
/// removes them downstream.
pub fn load_parallel<S: BufRead, T: BufRead>(source: S, target: T) -> Result<ParallelCorpus> {
    let src = read_tokenized_lines(source, "source")?;
    let tgt = read_tokenized_lines(target, "target")?;
    if src.len() != tgt.len() {
        return Err(Error::Alignment {
            source_lines: src.len(),
            target_lines: tgt.len(),
        });
    }
    let pairs = src
        .into_iter()
        .zip(tgt)
        .map(|(source, target)| SentencePair { source, target })
        .collect();
    Ok(ParallelCorpus { pairs })
}

/// Keeps pairs where both sides have between 1 and `max_len` tokens. Order preserved.
pub fn filter_max_length(mut corpus: ParallelCorpus, max_len: usize) -> ParallelCorpus {
    assert!(max_len >= 1, "max_len must be at least 1");
    corpus.pairs.retain(|p| {
        (1..=max_len).contains(&p.source.len()) && (1..=max_len).contains(&p.target.len())
    });
    corpus
}

/// Keeps pairs whose source and target have the same token count. Order preserved.
pub fn filter_equal_length(mut corpus: ParallelCorpus) -> ParallelCorpus {
    corpus.pairs.retain(|p| p.source.len() == p.target.len());
    corpus
}

/// Seeded shuffle followed by a floor(n * train_fraction) split.
/// The same seed always yields the same partition.
pub fn split(corpus: ParallelCorpus, train_fraction: f64, seed: u64) -> SplitCorpus {
    assert!(
        (0.0..=1.0).contains(&train_fraction),
        "train_fraction must lie in [0, 1]"
    );
    let mut pairs = corpus.pairs;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs.shuffle(&mut rng);
    let n_train = (pairs.len() as f64 * train_fraction).floor() as usize;
    let test = pairs.split_off(n_train);
    SplitCorpus {
        train: ParallelCorpus { pairs },
        test: ParallelCorpus { pairs: test },
    }
}

/// Spelling-variant table: target-language word -> weighted source-language variants.
///
/// Per-word probabilities must each lie in (0, 1] and sum to 1 within 1e-9.
#[derive(Debug, Clone, Default)]
pub struct VariantTable {
    map: HashMap<String, Vec<(String, f64)>>,
}

impl VariantTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[(String, f64)]> {
        self.map.get(word).map(Vec::as_slice)
    }

    /// Registers the variant distribution for one target word, validating the
    /// probability invariants.
    pub fn insert(&mut self, word: &str, variants: Vec<(String, f64)>) -> Result<()> {
        if variants.is_empty() {
            return Err(Error::InvalidInput(format!(
                "word {word:?} has no variants"
            )));
        }
        let mut sum = 0.0;
        for (variant, p) in &variants {
            if variant.is_empty() || variant.chars().any(char::is_whitespace) {
                return Err(Error::InvalidInput(format!(
                    "variant {variant:?} of {word:?} must be a non-empty single token"
                )));
            }
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "variant {variant:?} of {word:?} has probability {p}, expected (0, 1]"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "probabilities for {word:?} sum to {sum}, expected 1"
            )));
        }
        self.map.insert(word.to_string(), variants);
        Ok(())
    }

    /// Parses `target_word<TAB>variant<TAB>probability` lines. Lines for the same
    /// word may be scattered; blank lines are skipped.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut grouped: HashMap<String, Vec<(String, f64)>> = HashMap::new();
        let mut order: Vec<String> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                name: "variant table".to_string(),
                line: idx + 1,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let p: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad probability {:?}", fields[2])))?;
            if !grouped.contains_key(fields[0]) {
                order.push(fields[0].to_string());
            }
            grouped
                .entry(fields[0].to_string())
                .or_default()
                .push((fields[1].to_string(), p));
        }
        let mut table = Self::new();
        for word in order {
            let variants = grouped.remove(&word).unwrap();
            table.insert(&word, variants)?;
        }
        Ok(table)
    }

    /// Draws one variant of `word`, or `None` when the word has no entry.
    /// Consumes exactly one random value per mapped word, so a fixed seed gives
    /// a fixed draw sequence.
    pub fn sample<R: Rng>(&self, word: &str, rng: &mut R) -> Option<String> {
        let variants = self.map.get(word)?;
        let x: f64 = rng.gen();
        let mut acc = 0.0;
        for (variant, p) in variants {
            acc += p;
            if x < acc {
                return Some(variant.clone());
            }
        }
        Some(variants.last().unwrap().0.clone())
    }
}

/// Builds a source side for each target sentence by sampling one variant per word.
/// Words without a table entry are copied verbatim, so sentence lengths are preserved.
pub fn augment(targets: &[Vec<String>], variants: &VariantTable, seed: u64) -> ParallelCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = targets
        .iter()
        .map(|sentence| {
            let source = sentence
                .iter()
                .map(|word| {
                    variants
                        .sample(word, &mut rng)
                        .unwrap_or_else(|| word.clone())
                })
                .collect();
            SentencePair {
                source,
                target: sentence.clone(),
            }
        })
        .collect();
    ParallelCorpus { pairs }
}
