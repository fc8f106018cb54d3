//! Frequency-thresholded vocabularies with reserved special tokens.
//!
//! Indices 0..=3 are always PAD, GO, EOS, UNK. Corpus tokens that survive the
//! frequency threshold are numbered from 4 in order of first occurrence, so the
//! same token stream always produces the same index assignment.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const GO: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;

pub const SPECIAL_TOKENS: [&str; 4] = ["PAD", "GO", "EOS", "UNK"];

/// Bijective token/index table with raw corpus frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_index: HashMap<String, usize>,
    index_to_token: Vec<String>,
    frequency: Vec<u64>,
    min_count: u64,
}

impl Vocabulary {
    /// Counts tokens over `sentences` and keeps those occurring at least
    /// `min_count` times. Tokens spelled like a special literal fold onto the
    /// reserved index instead of getting their own entry.
    pub fn build(sentences: &[Vec<String>], min_count: u64) -> Self {
        assert!(min_count >= 1, "min_count must be at least 1");
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for sentence in sentences {
            for token in sentence {
                *counts.entry(token.as_str()).or_default() += 1;
            }
        }

        let mut token_to_index: HashMap<String, usize> = HashMap::new();
        let mut index_to_token: Vec<String> = Vec::new();
        let mut frequency: Vec<u64> = Vec::new();
        for special in SPECIAL_TOKENS {
            token_to_index.insert(special.to_string(), index_to_token.len());
            index_to_token.push(special.to_string());
            frequency.push(*counts.get(special).unwrap_or(&0));
        }

        // Second pass assigns indices in first-occurrence order.
        for sentence in sentences {
            for token in sentence {
                if token_to_index.contains_key(token) {
                    continue;
                }
                let freq = counts[token.as_str()];
                if freq < min_count {
                    continue;
                }
                token_to_index.insert(token.clone(), index_to_token.len());
                index_to_token.push(token.clone());
                frequency.push(freq);
            }
        }

        Vocabulary {
            token_to_index,
            index_to_token,
            frequency,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false // the four specials are always present
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.token_to_index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.index_to_token.get(index).map(String::as_str)
    }

    pub fn frequency(&self, index: usize) -> Option<u64> {
        self.frequency.get(index).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_index.contains_key(token)
    }

    /// Maps each token to its index, folding out-of-vocabulary tokens onto UNK.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens
            .iter()
            .map(|t| self.index(t.as_ref()).unwrap_or(UNK))
            .collect()
    }

    /// Inverse of `encode` for in-vocabulary tokens. Special indices render as
    /// their literal token strings.
    pub fn decode(&self, indices: &[usize]) -> Result<Vec<String>> {
        indices
            .iter()
            .map(|&i| {
                self.token(i)
                    .map(str::to_owned)
                    .ok_or(Error::IndexOutOfRange {
                        index: i,
                        size: self.len(),
                    })
            })
            .collect()
    }

    /// Writes `index<TAB>token<TAB>frequency` lines sorted by index, specials first.
    pub fn write_tsv<W: Write>(&self, mut writer: W) -> Result<()> {
        for (i, token) in self.index_to_token.iter().enumerate() {
            writeln!(writer, "{i}\t{token}\t{}", self.frequency[i])?;
        }
        Ok(())
    }

    /// Loads a vocabulary file, validating contiguity of indices, the
    /// token/index bijection, and the presence of the four specials.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut token_to_index = HashMap::new();
        let mut index_to_token = Vec::new();
        let mut frequency = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                name: "vocabulary".to_string(),
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
            let index: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad index {:?}", fields[0])))?;
            let freq: u64 = fields[2]
                .parse()
                .map_err(|_| parse_err(format!("bad frequency {:?}", fields[2])))?;
            if index != index_to_token.len() {
                return Err(parse_err(format!(
                    "indices must be contiguous from 0, expected {} found {index}",
                    index_to_token.len()
                )));
            }
            let token = fields[1].to_string();
            if token_to_index.insert(token.clone(), index).is_some() {
                return Err(parse_err(format!("duplicate token {token:?}")));
            }
            index_to_token.push(token);
            frequency.push(freq);
        }
        for (i, special) in SPECIAL_TOKENS.iter().enumerate() {
            if index_to_token.get(i).map(String::as_str) != Some(*special) {
                return Err(Error::Format(format!(
                    "vocabulary must start with the special tokens {SPECIAL_TOKENS:?}"
                )));
            }
        }
        // The file does not carry the build threshold; recover the tightest one
        // consistent with the stored frequencies.
        let min_count = frequency.iter().skip(4).copied().min().unwrap_or(1).max(1);
        Ok(Vocabulary {
            token_to_index,
            index_to_token,
            frequency,
            min_count,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn sentences(text: &[&str]) -> Vec<Vec<String>> {
        text.iter()
            .map(|s| s.split_whitespace().map(str::to_owned).collect())
            .collect()
    }

    #[test]
    fn threshold_excludes_rare_tokens() {
        let mut data = sentences(&["common word"]);
        for _ in 0..4 {
            data.push(sentences(&["common rare"])[0].clone());
        }
        // "common" x5, "rare" x4, "word" x1
        let v = Vocabulary::build(&data, 5);
        assert!(v.contains("common"));
        assert!(!v.contains("rare"));
        assert_eq!(v.encode(&["rare"]), vec![UNK]);
    }

    #[test]
    fn threshold_boundary_is_inclusive() {
        let data = sentences(&["w", "w", "w", "w", "w"]);
        let v = Vocabulary::build(&data, 5);
        assert!(v.contains("w"));
        assert_eq!(v.frequency(v.index("w").unwrap()), Some(5));
    }

    #[test]
    fn first_occurrence_order() {
        let data = sentences(&["a b a"]);
        let v = Vocabulary::build(&data, 1);
        assert_eq!(v.index("a"), Some(4));
        assert_eq!(v.index("b"), Some(5));
        assert_eq!(v.encode(&["a", "b"]), vec![4, 5]);
    }

    #[test]
    fn specials_always_present() {
        let v = Vocabulary::build(&[], 1);
        assert_eq!(v.len(), 4);
        assert_eq!(v.token(PAD), Some("PAD"));
        assert_eq!(v.token(GO), Some("GO"));
        assert_eq!(v.token(EOS), Some("EOS"));
        assert_eq!(v.token(UNK), Some("UNK"));
    }

    #[test]
    fn decode_round_trip_and_errors() {
        let data = sentences(&["main ja raha hoon", "main ja raha hoon"]);
        let v = Vocabulary::build(&data, 1);
        let toks: Vec<String> = "main ja raha hoon"
            .split_whitespace()
            .map(str::to_owned)
            .collect();
        let ids = v.encode(&toks);
        assert_eq!(ids.len(), 4);
        assert_eq!(v.decode(&ids).unwrap(), toks);
        assert_eq!(v.decode(&[UNK]).unwrap(), vec!["UNK".to_string()]);
        assert!(matches!(
            v.decode(&[v.len()]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn special_literals_fold_onto_reserved_indices() {
        let data = sentences(&["UNK a UNK a"]);
        let v = Vocabulary::build(&data, 1);
        assert_eq!(v.encode(&["UNK"]), vec![UNK]);
        assert_eq!(v.decode(&[UNK]).unwrap(), vec!["UNK".to_string()]);
    }

    #[test]
    fn rebuild_is_deterministic() {
        let data = sentences(&["c b a", "b c d", "a a c"]);
        let a = Vocabulary::build(&data, 1);
        let b = Vocabulary::build(&data, 1);
        assert_eq!(a, b);
    }

    #[test]
    fn tsv_round_trip() {
        let data = sentences(&["yeh kitab hai", "yeh kitab hai", "yeh hai"]);
        let v = Vocabulary::build(&data, 2);
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        let loaded = Vocabulary::read_tsv(Cursor::new(&buf)).unwrap();
        assert_eq!(loaded.len(), v.len());
        for i in 0..v.len() {
            assert_eq!(loaded.token(i), v.token(i));
            assert_eq!(loaded.frequency(i), v.frequency(i));
        }
    }

    #[test]
    fn tsv_rejects_gaps_and_duplicates() {
        let gap = "0\tPAD\t0\n1\tGO\t0\n2\tEOS\t0\n3\tUNK\t0\n5\tx\t9\n";
        assert!(Vocabulary::read_tsv(Cursor::new(gap)).is_err());
        let dup = "0\tPAD\t0\n1\tGO\t0\n2\tEOS\t0\n3\tUNK\t0\n4\tx\t9\n5\tx\t9\n";
        assert!(Vocabulary::read_tsv(Cursor::new(dup)).is_err());
        let no_specials = "0\tx\t9\n";
        assert!(Vocabulary::read_tsv(Cursor::new(no_specials)).is_err());
    }
}
