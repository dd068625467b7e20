//! Unsupervised TF-IDF duplicate detector: a cosine-similarity threshold
//! classifier and k-top retrieval.

mod classifier;
mod tfidf;
mod tokenize;

pub use classifier::{
    f1_at, ktop_ranks, ktop_retrieve, train_threshold, ModelFile, ThresholdClassifier,
    ThresholdFit,
};
pub use tfidf::{corpus_from_repo, corpus_hash, fit_tfidf, SparseVector, TfIdfIndex};
pub use tokenize::{default_stopwords, preprocess, Stemmer, TokenizerConfig};
