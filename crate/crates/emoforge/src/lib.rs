//! emoforge: a dependency-light toolkit for fine-grained emotion
//! classification of Bangla text, built around classical learners.
//!
//! The pieces compose into one pipeline: corpus loading and stratified
//! splitting ([`corpus`]), tokenization and n-grams ([`text`]), sparse
//! count/tf-idf features ([`vectorize`]), optional HMM POS filtering
//! ([`postag`]), the learners ([`classifiers`], [`svm`], [`cluster`]),
//! metrics ([`eval`]) and the config-driven experiment harness
//! ([`harness`]) that the `emoforge` binary exposes.

pub mod classifiers;
pub mod cluster;
pub mod corpus;
pub mod eval;
pub mod harness;
pub mod postag;
pub mod svm;
pub mod text;
pub mod vectorize;
