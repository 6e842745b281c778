//! Abstract syntax trees: an indexed node pool with a single root, nonterminals
//! that own ordered child lists, and terminals that carry exactly one value.
//!
//! Two front-ends produce trees: the MiniJ parser ([`parse_mini`],
//! [`parse_methods`]) and the S-expression reader ([`read_sexpr_ast`]).

mod minij;
mod sexpr;

use std::fmt;

pub use minij::{parse_methods, parse_mini};
pub use sexpr::{read_sexpr_ast, read_sexpr_asts, write_sexpr_ast};

/// Index of a node inside an [`Ast`]'s pool.
pub type NodeId = usize;

/// Node kinds emitted by the MiniJ parser. Ingested trees may use any kind.
pub mod kinds {
    pub const METHOD_DECL: &str = "MethodDecl";
    pub const PARAMETER: &str = "Parameter";
    pub const BLOCK: &str = "Block";
    pub const VAR_DECL: &str = "VarDecl";
    pub const ASSIGN_EXPR: &str = "AssignExpr";
    pub const IF_STMT: &str = "IfStmt";
    pub const WHILE_STMT: &str = "WhileStmt";
    pub const FOREACH: &str = "Foreach";
    pub const RETURN: &str = "Return";
    pub const CALL: &str = "Call";
    pub const FIELD_ACCESS: &str = "FieldAccess";
    pub const BINARY_EXPR: &str = "BinaryExpr";
    pub const UNARY_EXPR: &str = "UnaryExpr";
    pub const NAME_EXPR: &str = "NameExpr";
    pub const INTEGER_LITERAL_EXPR: &str = "IntegerLiteralExpr";
    pub const STRING_LITERAL_EXPR: &str = "StringLiteralExpr";
    pub const BOOLEAN_EXPR: &str = "BooleanExpr";
    pub const TYPE: &str = "Type";
    pub const NAME: &str = "Name";
    pub const ARRAY_ACCESS: &str = "ArrayAccess";

    /// The closed taxonomy of the built-in parser.
    pub const ALL: [&str; 20] = [
        METHOD_DECL,
        PARAMETER,
        BLOCK,
        VAR_DECL,
        ASSIGN_EXPR,
        IF_STMT,
        WHILE_STMT,
        FOREACH,
        RETURN,
        CALL,
        FIELD_ACCESS,
        BINARY_EXPR,
        UNARY_EXPR,
        NAME_EXPR,
        INTEGER_LITERAL_EXPR,
        STRING_LITERAL_EXPR,
        BOOLEAN_EXPR,
        TYPE,
        NAME,
        ARRAY_ACCESS,
    ];
}

/// Sentinel value for string-literal terminals.
pub const STRING_SENTINEL: &str = "STR";
/// Sentinel value for terminals whose value normalizes to nothing.
pub const EMPTY_SENTINEL: &str = "EMPTY";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AstError {
    #[error("empty input")]
    EmptyInput,
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid node kind {0:?}")]
    InvalidKind(String),
    #[error("node {0} is a terminal but has children")]
    TerminalWithChildren(NodeId),
    #[error("node {0} is a nonterminal without children")]
    EmptyNonterminal(NodeId),
    #[error("node {0} is not reachable exactly once from the root")]
    BadParentage(NodeId),
    #[error("child id {0} out of range")]
    ChildOutOfRange(NodeId),
}

#[derive(Debug, Clone)]
pub struct AstNode {
    pub kind: String,
    pub children: Vec<NodeId>,
    pub value: Option<String>,
}

impl AstNode {
    pub fn terminal(kind: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            children: Vec::new(),
            value: Some(value.into()),
        }
    }

    pub fn nonterminal(kind: impl Into<String>, children: Vec<NodeId>) -> Self {
        Self {
            kind: kind.into(),
            children,
            value: None,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.value.is_some()
    }
}

/// A validated tree. Parent links and child positions are derived on
/// construction so path extraction never has to search for them.
#[derive(Debug, Clone)]
pub struct Ast {
    nodes: Vec<AstNode>,
    root: NodeId,
    parents: Vec<Option<(NodeId, usize)>>,
}

/// Node kinds must not collide with the path-string and dataset separators.
pub fn is_valid_kind(kind: &str) -> bool {
    !kind.is_empty()
        && !kind
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '^' | '_' | ',' | '(' | ')' | '"' | '\\'))
}

impl Ast {
    /// Validates the pool against the tree invariants.
    pub fn from_parts(nodes: Vec<AstNode>, root: NodeId) -> Result<Self, AstError> {
        if nodes.is_empty() {
            return Err(AstError::EmptyInput);
        }
        if root >= nodes.len() {
            return Err(AstError::ChildOutOfRange(root));
        }
        let mut parents: Vec<Option<(NodeId, usize)>> = vec![None; nodes.len()];
        for (id, node) in nodes.iter().enumerate() {
            if !is_valid_kind(&node.kind) {
                return Err(AstError::InvalidKind(node.kind.clone()));
            }
            match (&node.value, node.children.is_empty()) {
                (Some(_), false) => return Err(AstError::TerminalWithChildren(id)),
                (None, true) => return Err(AstError::EmptyNonterminal(id)),
                _ => {}
            }
            for (pos, &child) in node.children.iter().enumerate() {
                if child >= nodes.len() {
                    return Err(AstError::ChildOutOfRange(child));
                }
                if child == root || parents[child].is_some() {
                    return Err(AstError::BadParentage(child));
                }
                parents[child] = Some((id, pos));
            }
        }
        // every non-root node has exactly one parent; a cycle detached from the
        // root would still satisfy that, so confirm reachability too.
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            seen[id] = true;
            stack.extend(nodes[id].children.iter().copied());
        }
        if let Some(id) = seen.iter().position(|s| !s) {
            return Err(AstError::BadParentage(id));
        }
        Ok(Self {
            nodes,
            root,
            parents,
        })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &AstNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[AstNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self, id: NodeId) -> &str {
        &self.nodes[id].kind
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id].children
    }

    pub fn value(&self, id: NodeId) -> Option<&str> {
        self.nodes[id].value.as_deref()
    }

    /// Parent node and the position of `id` in its child list.
    pub fn parent(&self, id: NodeId) -> Option<(NodeId, usize)> {
        self.parents[id]
    }

    /// Terminal node ids in depth-first, left-to-right order.
    pub fn terminals(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.is_terminal() {
                out.push(id);
            } else {
                stack.extend(node.children.iter().rev().copied());
            }
        }
        out
    }

    /// Ids in pre-order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev().copied());
        }
        out
    }

    pub fn depth(&self, mut id: NodeId) -> usize {
        let mut depth = 0;
        while let Some((parent, _)) = self.parents[id] {
            depth += 1;
            id = parent;
        }
        depth
    }

    /// The declared name of a method tree: the first `Name` terminal directly
    /// under a `MethodDecl` root.
    pub fn method_name(&self) -> Option<(NodeId, &str)> {
        let root = &self.nodes[self.root];
        if root.kind != kinds::METHOD_DECL {
            return None;
        }
        root.children.iter().find_map(|&c| {
            let child = &self.nodes[c];
            match (&child.value, child.kind == kinds::NAME) {
                (Some(v), true) => Some((c, v.as_str())),
                _ => None,
            }
        })
    }

    /// Copy of the tree with one node's subtree removed. Ancestors left
    /// without children are pruned as well; `None` means nothing is left.
    pub fn without_subtree(&self, removed: NodeId) -> Option<Ast> {
        fn copy(
            ast: &Ast,
            id: NodeId,
            removed: NodeId,
            out: &mut Vec<AstNode>,
        ) -> Option<NodeId> {
            if id == removed {
                return None;
            }
            let node = &ast.nodes[id];
            let slot = out.len();
            out.push(AstNode {
                kind: node.kind.clone(),
                children: Vec::new(),
                value: node.value.clone(),
            });
            if node.is_terminal() {
                return Some(slot);
            }
            let children: Vec<NodeId> = node
                .children
                .iter()
                .filter_map(|&c| copy(ast, c, removed, out))
                .collect();
            if children.is_empty() {
                out.truncate(slot);
                return None;
            }
            out[slot].children = children;
            Some(slot)
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        let root = copy(self, self.root, removed, &mut nodes)?;
        Some(Ast::from_parts(nodes, root).expect("pruned copy of a valid tree is valid"))
    }

    /// Tree with its method-name terminal removed, which is what gets
    /// extracted when the name is the prediction target.
    pub fn without_method_name(&self) -> Option<Ast> {
        match self.method_name() {
            Some((id, _)) => self.without_subtree(id),
            None => Some(self.clone()),
        }
    }

    fn subtree_eq(&self, a: NodeId, other: &Ast, b: NodeId) -> bool {
        let (x, y) = (&self.nodes[a], &other.nodes[b]);
        x.kind == y.kind
            && x.value == y.value
            && x.children.len() == y.children.len()
            && x
                .children
                .iter()
                .zip(&y.children)
                .all(|(&ca, &cb)| self.subtree_eq(ca, other, cb))
    }
}

/// Structural equality: same shape, kinds, and values regardless of pool order.
impl PartialEq for Ast {
    fn eq(&self, other: &Self) -> bool {
        self.nodes.len() == other.nodes.len() && self.subtree_eq(self.root, other, other.root)
    }
}

impl Eq for Ast {}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_sexpr_ast(self))
    }
}

/// Normalizes a terminal value for use in path-contexts: string literals
/// become [`STRING_SENTINEL`], everything else keeps only alphanumerics and
/// underscores, and an empty result becomes [`EMPTY_SENTINEL`].
pub fn normalize_value(kind: &str, raw: &str) -> String {
    if kind == kinds::STRING_LITERAL_EXPR {
        return STRING_SENTINEL.to_string();
    }
    let kept: String = raw
        .chars()
        .filter(|c| c.is_alphanumeric() || *c == '_')
        .collect();
    if kept.is_empty() {
        EMPTY_SENTINEL.to_string()
    } else {
        kept
    }
}

/// Owned, recursive form of a tree, convenient for construction. Converting
/// to an [`Ast`] lays the pool out in pre-order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    pub kind: String,
    pub value: Option<String>,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(kind: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            value: Some(value.into()),
            children: Vec::new(),
        }
    }

    pub fn node(kind: impl Into<String>, children: Vec<Tree>) -> Self {
        Self {
            kind: kind.into(),
            value: None,
            children,
        }
    }

    pub fn into_ast(self) -> Result<Ast, AstError> {
        fn push(tree: Tree, out: &mut Vec<AstNode>) -> NodeId {
            let id = out.len();
            out.push(AstNode {
                kind: tree.kind,
                children: Vec::new(),
                value: tree.value,
            });
            let children = tree.children.into_iter().map(|c| push(c, out)).collect();
            out[id].children = children;
            id
        }
        let mut nodes = Vec::new();
        let root = push(self, &mut nodes);
        Ast::from_parts(nodes, root)
    }

    pub fn from_ast(ast: &Ast) -> Tree {
        fn build(ast: &Ast, id: NodeId) -> Tree {
            let node = ast.node(id);
            Tree {
                kind: node.kind.clone(),
                value: node.value.clone(),
                children: node.children.iter().map(|&c| build(ast, c)).collect(),
            }
        }
        build(ast, ast.root())
    }
}
