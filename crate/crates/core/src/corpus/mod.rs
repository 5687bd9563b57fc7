//! Process corpora: document model, file format, preprocessing, splitting,
//! statistics and a synthetic generator with gold outline trees.

mod doc;
mod format;
mod preprocess;
mod split;
mod synth;

pub use doc::{outlines_from_parents, tokenize, Outline, ProcessDoc, Sentence};
pub use format::{parse_corpus, parse_corpus_str, serialize_corpus, write_corpus};
pub use preprocess::{preprocess, PreprocessOptions};
pub use split::{split_corpus, stats, CorpusStats};
pub use synth::{gen_synthetic, SynthParams};

#[cfg(test)]
mod tests;
