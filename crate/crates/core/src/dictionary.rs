//! One-to-one word mapping baseline.
//!
//! A dictionary maps each source word to exactly one target word. Unmapped words
//! transliterate to the UNK literal, which is what makes this baseline fail on
//! unseen spellings while the sequence model can still use context.

use std::collections::HashMap;
use std::io::BufRead;

use crate::corpus::ParallelCorpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct TransliterationDictionary {
    map: HashMap<String, String>,
}

/// A loaded dictionary plus the number of duplicate source entries whose target
/// conflicted with an earlier line (last entry wins).
#[derive(Debug)]
pub struct DictionaryLoad {
    pub dictionary: TransliterationDictionary,
    pub conflicts: usize,
}

impl TransliterationDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn lookup(&self, word: &str) -> Option<&str> {
        self.map.get(word).map(String::as_str)
    }

    pub fn insert(&mut self, source: &str, target: &str) {
        self.map.insert(source.to_string(), target.to_string());
    }
}

/// Parses `source<TAB>target` lines. Repeated identical lines collapse silently;
/// a repeated source with a different target overwrites and is counted.
pub fn load_dictionary<R: BufRead>(reader: R) -> Result<DictionaryLoad> {
    let mut map = HashMap::new();
    let mut conflicts = 0;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                name: "dictionary".to_string(),
                line: idx + 1,
                message: format!("expected 2 tab-separated fields, found {}", fields.len()),
            });
        }
        if let Some(old) = map.insert(fields[0].to_string(), fields[1].to_string()) {
            if old != fields[1] {
                conflicts += 1;
            }
        }
    }
    Ok(DictionaryLoad {
        dictionary: TransliterationDictionary { map },
        conflicts,
    })
}

/// Adds entries mined from position-aligned word pairs of an equal-length corpus.
///
/// For each source word not already mapped, the majority target wins; ties go to
/// the lexicographically smallest target. Existing entries are never overwritten,
/// so the entry count never decreases.
pub fn extend_from_corpus(
    mut dict: TransliterationDictionary,
    corpus: &ParallelCorpus,
) -> Result<TransliterationDictionary> {
    let mut tally: HashMap<&str, HashMap<&str, u64>> = HashMap::new();
    for pair in &corpus.pairs {
        if pair.source.len() != pair.target.len() {
            return Err(Error::InvalidInput(format!(
                "corpus must be equal-length: found pair with {} source and {} target tokens",
                pair.source.len(),
                pair.target.len()
            )));
        }
        for (s, t) in pair.source.iter().zip(&pair.target) {
            *tally
                .entry(s.as_str())
                .or_default()
                .entry(t.as_str())
                .or_default() += 1;
        }
    }
    for (source, candidates) in tally {
        if dict.lookup(source).is_some() {
            continue;
        }
        let mut ranked: Vec<(&str, u64)> = candidates.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        dict.insert(source, ranked[0].0);
    }
    Ok(dict)
}

/// Replaces each token by its mapping, or by the UNK literal when unmapped.
/// Output token count always equals input token count.
pub fn dict_transliterate(dict: &TransliterationDictionary, sentence: &str) -> String {
    sentence
        .split_whitespace()
        .map(|w| dict.lookup(w).unwrap_or("UNK"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SentencePair;
    use std::io::Cursor;

    #[test]
    fn load_counts_entries_and_conflicts() {
        let two = load_dictionary(Cursor::new("yeh\tیہ\nhai\tہے\n")).unwrap();
        assert_eq!(two.dictionary.len(), 2);
        assert_eq!(two.conflicts, 0);

        let dup = load_dictionary(Cursor::new("a\tx\na\tx\n")).unwrap();
        assert_eq!(dup.dictionary.len(), 1);
        assert_eq!(dup.conflicts, 0);

        let conflict = load_dictionary(Cursor::new("a\tx\na\ty\n")).unwrap();
        assert_eq!(conflict.dictionary.len(), 1);
        assert_eq!(conflict.dictionary.lookup("a"), Some("y"));
        assert_eq!(conflict.conflicts, 1);

        assert!(load_dictionary(Cursor::new("only_one_field\n")).is_err());
    }

    fn aligned(pairs: &[(&str, &str)]) -> ParallelCorpus {
        ParallelCorpus {
            pairs: pairs
                .iter()
                .map(|(s, t)| SentencePair {
                    source: s.split_whitespace().map(str::to_owned).collect(),
                    target: t.split_whitespace().map(str::to_owned).collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn extend_adds_positional_entries() {
        let corpus = aligned(&[("yeh kitab hai", "یہ کتاب ہے")]);
        let dict = extend_from_corpus(TransliterationDictionary::new(), &corpus).unwrap();
        assert_eq!(dict.len(), 3);
        assert_eq!(dict.lookup("kitab"), Some("کتاب"));
    }

    #[test]
    fn extend_empty_corpus_is_noop() {
        let mut dict = TransliterationDictionary::new();
        dict.insert("a", "x");
        let dict = extend_from_corpus(dict, &ParallelCorpus::default()).unwrap();
        assert_eq!(dict.len(), 1);
    }

    #[test]
    fn extend_majority_vote_with_tie_break() {
        let corpus = aligned(&[("w", "A"), ("w", "A"), ("w", "A"), ("w", "B")]);
        let dict = extend_from_corpus(TransliterationDictionary::new(), &corpus).unwrap();
        assert_eq!(dict.lookup("w"), Some("A"));

        let tied = aligned(&[("w", "B"), ("w", "A")]);
        let dict = extend_from_corpus(TransliterationDictionary::new(), &tied).unwrap();
        assert_eq!(dict.lookup("w"), Some("A"), "tie goes to smallest target");
    }

    #[test]
    fn extend_never_overwrites() {
        let mut dict = TransliterationDictionary::new();
        dict.insert("w", "KEEP");
        let corpus = aligned(&[("w", "OTHER"), ("w", "OTHER")]);
        let dict = extend_from_corpus(dict, &corpus).unwrap();
        assert_eq!(dict.lookup("w"), Some("KEEP"));
    }

    #[test]
    fn extend_rejects_unequal_pairs() {
        let corpus = aligned(&[("a b", "x")]);
        assert!(extend_from_corpus(TransliterationDictionary::new(), &corpus).is_err());
    }

    #[test]
    fn transliterate_preserves_length() {
        let mut dict = TransliterationDictionary::new();
        dict.insert("yeh", "یہ");
        dict.insert("hai", "ہے");
        assert_eq!(dict_transliterate(&dict, "yeh hai"), "یہ ہے");
        assert_eq!(dict_transliterate(&dict, "yeh unseen hai"), "یہ UNK ہے");
        assert_eq!(dict_transliterate(&dict, ""), "");
    }
}
