//! Code embeddings from bags of AST path-contexts.
//!
//! The pipeline runs from source text to a trained model:
//!
//! 1. [`ast`] parses MiniJ methods (or reads S-expression trees) into ASTs.
//! 2. [`paths`] enumerates the path-contexts between terminal pairs.
//! 3. [`corpus`] builds vocabularies and encodes bags of contexts.
//! 4. [`model`] pools a bag into one code vector with attention and scores
//!    every candidate name against it.
//! 5. [`train`] fits the parameters with exact gradients and Adam.
//! 6. [`metrics`] scores predictions by sub-token precision, recall and F1.
//! 7. [`vectors`] queries the learned name vectors (neighbors, combinations,
//!    analogies).

pub mod ast;
pub mod cli;
pub mod corpus;
pub mod metrics;
pub mod model;
pub mod paths;
pub mod pipeline;
pub mod train;
pub mod vectors;

pub use ast::{parse_methods, parse_mini, read_sexpr_ast, write_sexpr_ast, Ast, AstError};
pub use corpus::{
    encode_example, split_subtokens, AblationMask, EncodedExample, RawExample, Vocabs,
};
pub use metrics::{score_pair, Metrics, MetricsAccumulator};
pub use model::{AttentionVariant, ModelDims, ModelParams};
pub use paths::{extract_path_contexts, path_to_string, AstPath, ExtractionLimits, PathContext};
pub use train::{train, TrainConfig};
