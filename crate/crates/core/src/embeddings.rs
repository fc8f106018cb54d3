//! CBOW word embeddings trained with negative sampling.
//!
//! For every token position the context vectors inside the window are averaged
//! and the center word is contrasted against noise words drawn proportionally to
//! unigram frequency raised to 0.75. Training is single-writer and iterates the
//! corpus in order, so a fixed seed reproduces the matrices bit for bit.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vocab::{self, Vocabulary};

/// CBOW training settings. `min_count` records the threshold the vocabulary was
/// built with; filtering itself happens in `Vocabulary::build`.
#[derive(Debug, Clone)]
pub struct CbowConfig {
    pub dim: usize,
    pub window: usize,
    pub min_count: u64,
    pub negative_samples: usize,
    pub epochs: usize,
    /// Starting learning rate, decayed linearly over all epochs down to `final_lr`.
    pub initial_lr: f64,
    pub final_lr: f64,
    pub seed: u64,
}

impl Default for CbowConfig {
    fn default() -> Self {
        CbowConfig {
            dim: 100,
            window: 5,
            min_count: 5,
            negative_samples: 5,
            epochs: 5,
            initial_lr: 0.025,
            final_lr: 1e-4,
            seed: 1,
        }
    }
}

/// V x dim input vectors plus the output-weight matrix used during training.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    vocab: Arc<Vocabulary>,
    dim: usize,
    vectors: Vec<f64>,
    output_weights: Option<Vec<f64>>,
}

/// Trained embeddings together with the mean loss of each epoch.
#[derive(Debug, Clone)]
pub struct CbowTraining {
    pub embeddings: EmbeddingMatrix,
    pub epoch_mean_loss: Vec<f64>,
}

impl EmbeddingMatrix {
    /// Word2vec-style initialization: input vectors uniform in
    /// [-0.5/dim, 0.5/dim], output weights zero.
    pub fn random(vocab: Arc<Vocabulary>, dim: usize, seed: u64) -> Self {
        assert!(dim >= 1, "dim must be at least 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 0.5 / dim as f64;
        let vectors = (0..vocab.len() * dim)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        EmbeddingMatrix {
            output_weights: Some(vec![0.0; vocab.len() * dim]),
            vocab,
            dim,
            vectors,
        }
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.vocab.len()
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        &self.vectors[index * self.dim..(index + 1) * self.dim]
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    fn word_vector(&self, word: &str) -> Result<&[f64]> {
        let idx = self
            .vocab
            .index(word)
            .ok_or_else(|| Error::UnknownWord(word.to_string()))?;
        Ok(self.vector(idx))
    }

    /// Writes `V dim` then one `token v1 .. v_dim` line per row. Values are
    /// printed as shortest round-trip f32 decimals.
    pub fn write_text<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "{} {}", self.rows(), self.dim)?;
        for i in 0..self.rows() {
            write!(writer, "{}", self.vocab.token(i).unwrap())?;
            for v in self.vector(i) {
                write!(writer, " {}", *v as f32)?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }

    /// Loads an embedding file, validating that tokens appear in exactly the
    /// order of the given vocabulary.
    pub fn read_text<R: BufRead>(reader: R, vocab: Arc<Vocabulary>) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("embedding file is empty".to_string()))??;
        let mut parts = header.split_whitespace();
        let rows: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("bad embedding header".to_string()))?;
        let dim: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("bad embedding header".to_string()))?;
        if rows != vocab.len() {
            return Err(Error::Format(format!(
                "embedding file has {rows} rows but vocabulary has {} entries",
                vocab.len()
            )));
        }
        let mut vectors = Vec::with_capacity(rows * dim);
        for (i, line) in lines.enumerate() {
            let line = line?;
            if i >= rows {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::Format("embedding file has trailing rows".to_string()));
            }
            let mut fields = line.split_whitespace();
            let token = fields
                .next()
                .ok_or_else(|| Error::Format(format!("embedding row {i} is empty")))?;
            if vocab.token(i) != Some(token) {
                return Err(Error::Format(format!(
                    "embedding row {i} is {token:?} but vocabulary expects {:?}",
                    vocab.token(i).unwrap_or("<missing>")
                )));
            }
            let mut got = 0;
            for field in fields {
                let v: f32 = field.parse().map_err(|_| {
                    Error::Format(format!("bad float {field:?} in embedding row {i}"))
                })?;
                vectors.push(v as f64);
                got += 1;
            }
            if got != dim {
                return Err(Error::Format(format!(
                    "embedding row {i} has {got} values, expected {dim}"
                )));
            }
        }
        if vectors.len() != rows * dim {
            return Err(Error::Format(format!(
                "embedding file ended after {} of {rows} rows",
                vectors.len() / dim.max(1)
            )));
        }
        Ok(EmbeddingMatrix {
            vocab,
            dim,
            vectors,
            output_weights: None,
        })
    }
}

/// Cosine similarity of the input vectors of two in-vocabulary words.
pub fn cosine(embedding: &EmbeddingMatrix, word_a: &str, word_b: &str) -> Result<f64> {
    let a = embedding.word_vector(word_a)?;
    let b = embedding.word_vector(word_b)?;
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidInput(format!(
            "cosine undefined for zero vector ({word_a:?} or {word_b:?})"
        )));
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

/// Top-k neighbours of `word` by cosine, excluding the query itself and the
/// special tokens. Ties break toward the lower vocabulary index.
pub fn nearest(embedding: &EmbeddingMatrix, word: &str, k: usize) -> Result<Vec<(String, f64)>> {
    assert!(k >= 1, "k must be at least 1");
    let query = embedding
        .vocab
        .index(word)
        .ok_or_else(|| Error::UnknownWord(word.to_string()))?;
    let mut scored: Vec<(usize, f64)> = Vec::new();
    for i in vocab::SPECIAL_TOKENS.len()..embedding.rows() {
        if i == query {
            continue;
        }
        let sim = cosine(embedding, word, embedding.vocab.token(i).unwrap())?;
        scored.push((i, sim));
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(i, sim)| (embedding.vocab.token(i).unwrap().to_string(), sim))
        .collect())
}

/// Gradients of one negative-sampling example, evaluated at fixed parameters.
#[derive(Debug, Clone)]
pub struct CbowExampleGrads {
    /// Gradient shared by every context word's input vector.
    pub d_context: Vec<f64>,
    /// Output-row gradients as (row index, gradient); rows may repeat.
    pub d_output: Vec<(usize, Vec<f64>)>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Loss and gradients of a single CBOW example: predict `center` from the
/// average of `context` against the given negative rows. Exposed so the trainer
/// and numerical gradient checks share one definition.
pub fn cbow_example(
    vectors: &[f64],
    output_weights: &[f64],
    dim: usize,
    center: usize,
    context: &[usize],
    negatives: &[usize],
) -> (f64, CbowExampleGrads) {
    assert!(!context.is_empty(), "context must be non-empty");
    let mut mean = vec![0.0; dim];
    for &c in context {
        for (m, v) in mean.iter_mut().zip(&vectors[c * dim..(c + 1) * dim]) {
            *m += v;
        }
    }
    let scale = 1.0 / context.len() as f64;
    for m in &mut mean {
        *m *= scale;
    }

    let mut loss = 0.0;
    let mut d_mean = vec![0.0; dim];
    let mut d_output = Vec::with_capacity(1 + negatives.len());
    for (row, label) in std::iter::once((center, 1.0))
        .chain(negatives.iter().map(|&n| (n, 0.0)))
    {
        let w = &output_weights[row * dim..(row + 1) * dim];
        let score: f64 = w.iter().zip(&mean).map(|(a, b)| a * b).sum();
        loss += if label == 1.0 {
            softplus(-score)
        } else {
            softplus(score)
        };
        let g = sigmoid(score) - label;
        for (dm, wv) in d_mean.iter_mut().zip(w) {
            *dm += g * wv;
        }
        d_output.push((row, mean.iter().map(|m| g * m).collect()));
    }

    let d_context = d_mean.iter().map(|d| d * scale).collect();
    (loss, CbowExampleGrads { d_context, d_output })
}

/// Cumulative unigram^0.75 noise distribution over the encoded training stream.
struct NoiseTable {
    cdf: Vec<f64>,
}

impl NoiseTable {
    fn from_counts(counts: &[u64]) -> Result<Self> {
        let mut cdf = Vec::with_capacity(counts.len());
        let mut acc = 0.0;
        for &c in counts {
            acc += (c as f64).powf(0.75);
            cdf.push(acc);
        }
        if acc <= 0.0 {
            return Err(Error::InvalidInput(
                "cannot build noise distribution from an empty stream".to_string(),
            ));
        }
        Ok(NoiseTable { cdf })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let x: f64 = rng.gen::<f64>() * self.cdf.last().unwrap();
        self.cdf.partition_point(|&acc| acc <= x).min(self.cdf.len() - 1)
    }
}

/// Trains CBOW embeddings over the given sentences. Out-of-vocabulary tokens
/// fold onto UNK and take part in training like any other word, so UNK ends up
/// with a usable vector.
pub fn train_cbow(
    sentences: &[Vec<String>],
    vocab: Arc<Vocabulary>,
    config: &CbowConfig,
) -> Result<CbowTraining> {
    assert!(config.window >= 1, "window must be at least 1");
    assert!(
        config.negative_samples >= 1,
        "negative_samples must be at least 1"
    );
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let encoded: Vec<Vec<usize>> = sentences
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| vocab.encode(s))
        .collect();
    let mut unigram = vec![0u64; vocab.len()];
    let mut examples_per_epoch = 0usize;
    for sentence in &encoded {
        for &t in sentence {
            unigram[t] += 1;
        }
        if sentence.len() > 1 {
            examples_per_epoch += sentence.len();
        }
    }
    if examples_per_epoch == 0 {
        return Err(Error::InvalidInput(
            "training stream yields no context/center examples".to_string(),
        ));
    }
    let noise = NoiseTable::from_counts(&unigram)?;

    let mut embedding = EmbeddingMatrix::random(vocab, config.dim, config.seed);
    let dim = config.dim;
    let mut output = embedding.output_weights.take().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e3779b97f4a7c15));

    let total_examples = (examples_per_epoch * config.epochs.max(1)) as f64;
    let mut processed = 0usize;
    let mut epoch_mean_loss = Vec::with_capacity(config.epochs);
    let mut negatives = Vec::with_capacity(config.negative_samples);
    let mut context = Vec::with_capacity(2 * config.window);

    for _epoch in 0..config.epochs {
        let mut epoch_loss = 0.0;
        let mut epoch_examples = 0usize;
        for sentence in &encoded {
            if sentence.len() < 2 {
                continue;
            }
            for (t, &center) in sentence.iter().enumerate() {
                context.clear();
                let lo = t.saturating_sub(config.window);
                let hi = (t + config.window).min(sentence.len() - 1);
                for j in lo..=hi {
                    if j != t {
                        context.push(sentence[j]);
                    }
                }
                negatives.clear();
                for _ in 0..config.negative_samples {
                    let n = noise.sample(&mut rng);
                    if n != center {
                        negatives.push(n);
                    }
                }

                let lr = (config.initial_lr
                    - (config.initial_lr - config.final_lr) * processed as f64 / total_examples)
                    .max(config.final_lr);
                processed += 1;

                let (loss, grads) =
                    cbow_example(&embedding.vectors, &output, dim, center, &context, &negatives);
                epoch_loss += loss;
                epoch_examples += 1;

                for &c in &context {
                    let row = &mut embedding.vectors[c * dim..(c + 1) * dim];
                    for (v, d) in row.iter_mut().zip(&grads.d_context) {
                        *v -= lr * d;
                    }
                }
                for (row_idx, d_row) in &grads.d_output {
                    let row = &mut output[row_idx * dim..(row_idx + 1) * dim];
                    for (w, d) in row.iter_mut().zip(d_row) {
                        *w -= lr * d;
                    }
                }
            }
        }
        epoch_mean_loss.push(epoch_loss / epoch_examples as f64);
    }

    if !embedding.vectors.iter().all(|v| v.is_finite()) {
        return Err(Error::Diverged { epoch: config.epochs, batch: 0 });
    }
    embedding.output_weights = Some(output);
    Ok(CbowTraining {
        embeddings: embedding,
        epoch_mean_loss,
    })
}
