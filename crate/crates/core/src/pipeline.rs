//! From source files to labeled examples.

use std::path::Path;
use std::str::FromStr;

use crate::ast::{parse_methods, read_sexpr_asts, Ast, AstError};
use crate::corpus::RawExample;
use crate::paths::{extract_path_contexts, ExtractionLimits};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    /// MiniJ method declarations.
    MiniJ,
    /// One S-expression tree per method.
    Sexpr,
    /// Already extracted dataset lines.
    Dataset,
}

impl SourceFormat {
    /// Guess from the extension: `.sexpr` trees, `.c2v` datasets, MiniJ otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("sexpr") => SourceFormat::Sexpr,
            Some("c2v") => SourceFormat::Dataset,
            _ => SourceFormat::MiniJ,
        }
    }
}

impl FromStr for SourceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minij" => Ok(SourceFormat::MiniJ),
            "sexpr" => Ok(SourceFormat::Sexpr),
            "dataset" => Ok(SourceFormat::Dataset),
            _ => Err(format!("unknown format {s:?} (expected minij, sexpr or dataset)")),
        }
    }
}

/// Labels a method tree by its declared name and extracts the rest of it.
/// Returns `None` for trees that are not methods.
pub fn method_example(ast: &Ast, limits: &ExtractionLimits) -> Option<RawExample> {
    let (_, name) = ast.method_name()?;
    let contexts = ast
        .without_method_name()
        .map(|body| extract_path_contexts(&body, limits))
        .unwrap_or_default();
    Some(RawExample {
        label: name.to_string(),
        contexts,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractSummary {
    pub methods: usize,
    pub contexts: usize,
    /// Trees without a method name, or methods without any path-context.
    pub dropped: usize,
}

impl ExtractSummary {
    pub fn add(&mut self, other: &ExtractSummary) {
        self.methods += other.methods;
        self.contexts += other.contexts;
        self.dropped += other.dropped;
    }
}

/// Extracts every method in one file's text.
pub fn extract_text(
    text: &str,
    format: SourceFormat,
    limits: &ExtractionLimits,
) -> Result<(Vec<RawExample>, ExtractSummary), AstError> {
    let trees = match format {
        SourceFormat::MiniJ => parse_methods(text)?,
        SourceFormat::Sexpr => read_sexpr_asts(text)?,
        SourceFormat::Dataset => {
            return Err(AstError::Syntax {
                line: 1,
                column: 1,
                message: "dataset files are already extracted".into(),
            })
        }
    };
    let mut summary = ExtractSummary::default();
    let mut out = Vec::new();
    for tree in &trees {
        match method_example(tree, limits) {
            Some(ex) if !ex.contexts.is_empty() => {
                summary.methods += 1;
                summary.contexts += ex.contexts.len();
                out.push(ex);
            }
            _ => summary.dropped += 1,
        }
    }
    Ok((out, summary))
}
