//! Word-vector table: text loader, deterministic fallback, sentence embedding.

use std::collections::HashMap;
use std::path::Path;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const EMBEDDING_DIM: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    avg: Vec<f64>,
}

impl WordVectorTable {
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (word, v) in entries {
            if v.len() != dim {
                return Err(Error::Dimension {
                    context: "word vector",
                    expected: dim,
                    actual: v.len(),
                });
            }
            if vectors.insert(word.clone(), v).is_some() {
                warn!("duplicate word vector for {word:?}; keeping the last one");
            }
        }
        let avg = mean_vector(dim, vectors.values());
        Ok(Self { dim, vectors, avg })
    }

    /// Parses the `vocab_size dim` header followed by `word v1 … v_dim` lines.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hno, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, 1, "missing `vocab_size dim` header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (declared, dim) = match fields.as_slice() {
            [n, d] => (
                n.parse::<usize>()
                    .map_err(|_| Error::parse(origin, hno + 1, "bad vocabulary size"))?,
                d.parse::<usize>()
                    .map_err(|_| Error::parse(origin, hno + 1, "bad dimension"))?,
            ),
            _ => {
                return Err(Error::parse(
                    origin,
                    hno + 1,
                    "expected `vocab_size dim` header",
                ))
            }
        };
        if dim != EMBEDDING_DIM {
            return Err(Error::parse(
                origin,
                hno + 1,
                format!("word vectors must have dimension {EMBEDDING_DIM}, file declares {dim}"),
            ));
        }
        let mut entries = Vec::with_capacity(declared);
        for (i, line) in lines {
            let mut parts = line.split_whitespace();
            let word = parts.next().unwrap().to_string();
            let v = parts
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse(origin, i + 1, "bad vector component"))?;
            if v.len() != dim {
                return Err(Error::parse(
                    origin,
                    i + 1,
                    format!("expected {dim} components, found {}", v.len()),
                ));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::parse(origin, i + 1, "non-finite vector component"));
            }
            entries.push((word, v));
        }
        if entries.len() != declared {
            warn!(
                "{origin}: header declares {declared} words, found {}",
                entries.len()
            );
        }
        Self::from_entries(dim, entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::error::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Deterministic pseudo-random unit vectors for `vocabulary`, derived
    /// from a hash of `(seed, token)` so they do not depend on vocabulary
    /// order or platform.
    pub fn fallback<S: AsRef<str>>(vocabulary: impl IntoIterator<Item = S>, seed: u64) -> Self {
        let entries: Vec<(String, Vec<f64>)> = vocabulary
            .into_iter()
            .map(|t| {
                let t = t.as_ref();
                (t.to_string(), fallback_vector(t, seed, EMBEDDING_DIM))
            })
            .collect();
        Self::from_entries(EMBEDDING_DIM, entries)
            .expect("fallback vectors have the table dimension")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    pub fn average(&self) -> &[f64] {
        &self.avg
    }

    /// Known tokens map to their vectors, others to the average vector; the
    /// all-zero end-of-sentence vector is appended.
    pub fn embed<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<Vec<f64>> {
        self.embed_counting_unknown(tokens).0
    }

    pub fn embed_counting_unknown<S: AsRef<str>>(&self, tokens: &[S]) -> (Vec<Vec<f64>>, usize) {
        let mut unknown = 0;
        let mut out: Vec<Vec<f64>> = tokens
            .iter()
            .map(|t| match self.get(t.as_ref()) {
                Some(v) => v.to_vec(),
                None => {
                    unknown += 1;
                    self.avg.clone()
                }
            })
            .collect();
        out.push(vec![0.0; self.dim]);
        (out, unknown)
    }
}

fn mean_vector<'a>(dim: usize, vectors: impl Iterator<Item = &'a Vec<f64>>) -> Vec<f64> {
    let mut sum = vec![0.0; dim];
    let mut n = 0usize;
    for v in vectors {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
        n += 1;
    }
    if n > 0 {
        for s in &mut sum {
            *s /= n as f64;
        }
    }
    sum
}

pub fn fallback_vector(token: &str, seed: u64, dim: usize) -> Vec<f64> {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(token.as_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(digest);
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}
