//! Question corpus, preprocessing and word vectors.

mod corpus;
pub mod synth;
mod vectors;

pub use corpus::{
    parse_corpus, parse_corpus_str, preprocess, serialize_corpus, tokenize, write_corpus,
    CoarseLabel, LabeledSentence,
};
pub use vectors::{fallback_vector, WordVectorTable, EMBEDDING_DIM};
