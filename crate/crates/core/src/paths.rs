//! AST paths between terminal pairs and the path-contexts built from them.
//!
//! A path climbs from its start terminal to a single pivot node and then
//! descends to its end terminal. Length is the number of steps; width is the
//! child-index distance, at the pivot, between the two branches the path
//! takes.

use std::fmt;
use std::str::FromStr;

use crate::ast::{is_valid_kind, normalize_value, Ast, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    fn separator(self) -> char {
        match self {
            Direction::Up => '^',
            Direction::Down => '_',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("path needs {expected} node kinds for {steps} steps, got {got}")]
    Arity {
        steps: usize,
        expected: usize,
        got: usize,
    },
    #[error("path has no steps")]
    Empty,
    #[error("path descends and then ascends again")]
    NotAscentThenDescent,
    #[error("invalid node kind {0:?} in path")]
    InvalidKind(String),
    #[error("max_length must be at least 1")]
    ZeroLength,
}

/// Node kinds `n1 .. n(k+1)` interleaved with `k` directions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AstPath {
    kinds: Vec<String>,
    directions: Vec<Direction>,
}

impl AstPath {
    pub fn new(kinds: Vec<String>, directions: Vec<Direction>) -> Result<Self, PathError> {
        if directions.is_empty() {
            return Err(PathError::Empty);
        }
        if kinds.len() != directions.len() + 1 {
            return Err(PathError::Arity {
                steps: directions.len(),
                expected: directions.len() + 1,
                got: kinds.len(),
            });
        }
        if directions
            .windows(2)
            .any(|w| w[0] == Direction::Down && w[1] == Direction::Up)
        {
            return Err(PathError::NotAscentThenDescent);
        }
        if let Some(bad) = kinds.iter().find(|k| !is_valid_kind(k)) {
            return Err(PathError::InvalidKind(bad.clone()));
        }
        Ok(Self { kinds, directions })
    }

    /// Number of steps, `k`.
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn kinds(&self) -> &[String] {
        &self.kinds
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn start_kind(&self) -> &str {
        &self.kinds[0]
    }

    pub fn end_kind(&self) -> &str {
        &self.kinds[self.kinds.len() - 1]
    }

    /// Position of the pivot within [`AstPath::kinds`].
    pub fn pivot(&self) -> usize {
        self.directions
            .iter()
            .take_while(|d| **d == Direction::Up)
            .count()
    }

    /// The same path walked from the other end.
    pub fn reverse(&self) -> AstPath {
        AstPath {
            kinds: self.kinds.iter().rev().cloned().collect(),
            directions: self.directions.iter().rev().map(|d| d.flip()).collect(),
        }
    }
}

/// Renders kinds joined by `^` for upward and `_` for downward steps.
pub fn path_to_string(path: &AstPath) -> String {
    path.to_string()
}

impl fmt::Display for AstPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.kinds[0])?;
        for (dir, kind) in self.directions.iter().zip(&self.kinds[1..]) {
            write!(f, "{}{}", dir.separator(), kind)?;
        }
        Ok(())
    }
}

impl FromStr for AstPath {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut kinds = Vec::new();
        let mut directions = Vec::new();
        let mut current = String::new();
        for c in s.chars() {
            let dir = match c {
                '^' => Direction::Up,
                '_' => Direction::Down,
                _ => {
                    current.push(c);
                    continue;
                }
            };
            kinds.push(std::mem::take(&mut current));
            directions.push(dir);
        }
        kinds.push(current);
        AstPath::new(kinds, directions)
    }
}

/// `<source value, path, target value>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathContext {
    pub source: String,
    pub path: AstPath,
    pub target: String,
}

impl PathContext {
    /// The mirrored context for the reversed terminal order.
    pub fn reverse(&self) -> PathContext {
        PathContext {
            source: self.target.clone(),
            path: self.path.reverse(),
            target: self.source.clone(),
        }
    }
}

impl fmt::Display for PathContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.source, self.path, self.target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractionLimits {
    pub max_length: usize,
    pub max_width: usize,
}

impl ExtractionLimits {
    pub fn new(max_length: usize, max_width: usize) -> Result<Self, PathError> {
        if max_length == 0 {
            return Err(PathError::ZeroLength);
        }
        Ok(Self {
            max_length,
            max_width,
        })
    }
}

impl Default for ExtractionLimits {
    fn default() -> Self {
        Self {
            max_length: 8,
            max_width: 2,
        }
    }
}

/// A terminal below the node being visited, with the number of upward steps
/// from the terminal to that node.
#[derive(Clone, Copy)]
struct Reach {
    ordinal: usize,
    terminal: NodeId,
    ups: usize,
}

/// Builds the path from `from` up `ups_from` steps to `pivot`, then down to `to`.
fn build_path(ast: &Ast, from: NodeId, ups_from: usize, to: NodeId, ups_to: usize) -> AstPath {
    let mut kinds = Vec::with_capacity(ups_from + ups_to + 1);
    let mut node = from;
    for _ in 0..ups_from {
        kinds.push(ast.kind(node).to_string());
        node = ast.parent(node).expect("ancestor within tree").0;
    }
    kinds.push(ast.kind(node).to_string());
    let mut descent = Vec::with_capacity(ups_to);
    let mut node = to;
    for _ in 0..ups_to {
        descent.push(ast.kind(node).to_string());
        node = ast.parent(node).expect("ancestor within tree").0;
    }
    kinds.extend(descent.into_iter().rev());
    let mut directions = vec![Direction::Up; ups_from];
    directions.resize(ups_from + ups_to, Direction::Down);
    AstPath { kinds, directions }
}

/// One path-context per unordered terminal pair `(i, j)`, `i < j` in
/// depth-first order, whose path fits the limits. Output is sorted by `(i, j)`.
///
/// Works bottom-up: every nonterminal combines the terminals reachable through
/// each pair of its children whose positions are at most `max_width` apart.
/// Terminals too far below a node to form any admissible path through it are
/// dropped before they reach its parent.
pub fn extract_path_contexts(ast: &Ast, limits: &ExtractionLimits) -> Vec<PathContext> {
    let terminals = ast.terminals();
    if terminals.len() < 2 {
        return Vec::new();
    }
    let mut ordinal_of = vec![usize::MAX; ast.len()];
    for (ord, &t) in terminals.iter().enumerate() {
        ordinal_of[t] = ord;
    }

    let mut reach: Vec<Vec<Reach>> = vec![Vec::new(); ast.len()];
    let mut found: Vec<(usize, usize, PathContext)> = Vec::new();
    for &id in ast.preorder().iter().rev() {
        let node = ast.node(id);
        if node.is_terminal() {
            reach[id].push(Reach {
                ordinal: ordinal_of[id],
                terminal: id,
                ups: 0,
            });
            continue;
        }
        let lifted: Vec<Vec<Reach>> = node
            .children
            .iter()
            .map(|&c| {
                std::mem::take(&mut reach[c])
                    .into_iter()
                    .map(|r| Reach { ups: r.ups + 1, ..r })
                    .filter(|r| r.ups < limits.max_length)
                    .collect()
            })
            .collect();
        for a in 0..lifted.len() {
            let last = (a + limits.max_width).min(lifted.len() - 1);
            for b in a + 1..=last {
                for left in &lifted[a] {
                    for right in &lifted[b] {
                        if left.ups + right.ups > limits.max_length {
                            continue;
                        }
                        let path = build_path(ast, left.terminal, left.ups, right.terminal, right.ups);
                        let source = normalize_value(
                            ast.kind(left.terminal),
                            ast.value(left.terminal).unwrap_or_default(),
                        );
                        let target = normalize_value(
                            ast.kind(right.terminal),
                            ast.value(right.terminal).unwrap_or_default(),
                        );
                        found.push((
                            left.ordinal,
                            right.ordinal,
                            PathContext {
                                source,
                                path,
                                target,
                            },
                        ));
                    }
                }
            }
        }
        reach[id] = lifted
            .into_iter()
            .flatten()
            .filter(|r| r.ups + 1 < limits.max_length)
            .collect();
    }
    found.sort_by_key(|(i, j, _)| (*i, *j));
    found.into_iter().map(|(_, _, ctx)| ctx).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse_mini, read_sexpr_ast};

    #[test]
    fn assignment_context() {
        let ast = parse_mini("x = 7;").unwrap();
        let contexts = extract_path_contexts(&ast, &ExtractionLimits::new(8, 2).unwrap());
        assert_eq!(contexts.len(), 1);
        assert_eq!(
            contexts[0].to_string(),
            "x,NameExpr^AssignExpr_IntegerLiteralExpr,7"
        );
        assert_eq!(contexts[0].path.len(), 2);
    }

    #[test]
    fn single_terminal_has_no_contexts() {
        let ast = read_sexpr_ast("(NameExpr \"x\")").unwrap();
        assert!(extract_path_contexts(&ast, &ExtractionLimits::default()).is_empty());
    }

    #[test]
    fn path_strings() {
        let p: AstPath = "NameExpr^AssignExpr_IntegerLiteralExpr".parse().unwrap();
        assert_eq!(p.reverse().to_string(), "IntegerLiteralExpr^AssignExpr_NameExpr");
        assert_eq!(p.pivot(), 1);
        let q: AstPath = "A^P_B".parse().unwrap();
        assert_eq!(q.reverse().to_string(), "B^P_A");
        assert_eq!(q.reverse().reverse(), q);
        assert_eq!("A_P^B".parse::<AstPath>(), Err(PathError::NotAscentThenDescent));
        assert_eq!("A".parse::<AstPath>(), Err(PathError::Empty));
        assert!("A^^B".parse::<AstPath>().is_err());
    }

    #[test]
    fn width_is_measured_at_pivot() {
        // four siblings: pairs (0,3) have width 3
        let ast = read_sexpr_ast("(P (A \"a\") (B \"b\") (C \"c\") (D \"d\"))").unwrap();
        let narrow = extract_path_contexts(&ast, &ExtractionLimits::new(8, 1).unwrap());
        assert_eq!(narrow.len(), 3);
        let wide = extract_path_contexts(&ast, &ExtractionLimits::new(8, 3).unwrap());
        assert_eq!(wide.len(), 6);
        let none = extract_path_contexts(&ast, &ExtractionLimits::new(8, 0).unwrap());
        assert!(none.is_empty());
    }

    #[test]
    fn length_limit() {
        let ast = read_sexpr_ast("(R (X (Y (A \"a\"))) (B \"b\"))").unwrap();
        // a -> Y -> X -> R -> b is 4 steps
        assert!(extract_path_contexts(&ast, &ExtractionLimits::new(3, 2).unwrap()).is_empty());
        let ok = extract_path_contexts(&ast, &ExtractionLimits::new(4, 2).unwrap());
        assert_eq!(ok[0].path.to_string(), "A^Y^X^R_B");
    }

    #[test]
    fn string_literals_are_normalized() {
        let ast = parse_mini("s = \"a, b\";").unwrap();
        let contexts = extract_path_contexts(&ast, &ExtractionLimits::default());
        assert_eq!(contexts[0].target, "STR");
    }

    #[test]
    fn zero_length_limit_rejected() {
        assert_eq!(ExtractionLimits::new(0, 2), Err(PathError::ZeroLength));
    }
}
