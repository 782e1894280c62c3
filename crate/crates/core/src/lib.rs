//! In-context example selection for grammatical error correction.
//!
//! Training examples are chosen for a query by comparing dependency trees
//! of ungrammatical sentences, optionally after a cheap lexical or dense
//! retrieval pass. The crate also renders few-shot prompts, drives a
//! chat-completions endpoint, and scores corrections with an edit-based
//! F0.5 metric.

pub mod gecscore;
pub mod lexical;
pub mod llmclient;
pub mod pipeline;
pub mod prompt;
pub mod synth;
pub mod treebank;
pub mod treekernel;
pub mod treepoly;

pub use gecscore::{f_beta, parse_m2, score_corpus, Edit, M2Doc, ScoreReport};
pub use lexical::{Bm25Index, Bm25Params, DenseIndex};
pub use llmclient::{Client, EndpointConfig, RunRecord};
pub use pipeline::{SelectionConfig, SelectionResult, Selector, Stage1, Stage2};
pub use prompt::{ChatMessage, Prompt, PromptStyle};
pub use treebank::{Corpus, DepTree, Example, LabelVocab};
pub use treekernel::{tree_kernel_similarity, KernelScore};
pub use treepoly::{poly_distance, tree_to_polynomial, Polynomial, WeightProfile};
