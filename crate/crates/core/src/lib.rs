//! Retrieval-augmented generation of test scenarios from bilingual
//! natural-language requirements, and an evaluation harness that scores
//! generated scenarios with BLEU, ROUGE and METEOR.

pub mod corpus;
pub mod embedding;
pub mod http;
pub mod vector_index;
pub mod prompt;
pub mod generator;
pub mod metrics;
pub mod harness;
