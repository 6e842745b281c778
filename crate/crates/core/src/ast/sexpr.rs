//! S-expression tree format: `(Kind child ...)` for nonterminals and
//! `(Kind "value")` for terminals. Inside values `"` is written `\"` and a
//! backslash is written `\\`.

use super::{is_valid_kind, Ast, AstError, NodeId, Tree};

struct Reader {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Reader {
    fn new(text: &str) -> Self {
        Self {
            chars: text.chars().collect(),
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn error(&self, message: impl Into<String>) -> AstError {
        AstError::Syntax {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn advance(&mut self) -> Option<char> {
        let c = *self.chars.get(self.pos)?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.get(self.pos), Some(' ' | '\t' | '\n' | '\r')) {
            self.advance();
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    fn tree(&mut self) -> Result<Tree, AstError> {
        self.skip_ws();
        match self.advance() {
            Some('(') => {}
            Some(c) => return Err(self.error(format!("expected `(`, found {c:?}"))),
            None => return Err(self.error("unbalanced parentheses: unexpected end of input")),
        }
        self.skip_ws();
        let mut kind = String::new();
        while let Some(c) = self.peek() {
            if matches!(c, ' ' | '\t' | '\n' | '\r' | '(' | ')' | '"') {
                break;
            }
            kind.push(c);
            self.advance();
        }
        if kind.is_empty() {
            return Err(self.error("missing node kind"));
        }
        if !is_valid_kind(&kind) {
            return Err(AstError::InvalidKind(kind));
        }
        let mut value: Option<String> = None;
        let mut children = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(self.error("unbalanced parentheses: unexpected end of input")),
                Some(')') => {
                    self.advance();
                    break;
                }
                Some('"') => {
                    if value.is_some() || !children.is_empty() {
                        return Err(self.error(format!(
                            "nonterminal {kind} cannot carry a quoted value"
                        )));
                    }
                    value = Some(self.string()?);
                }
                Some('(') => {
                    if value.is_some() {
                        return Err(self.error(format!("terminal {kind} cannot have children")));
                    }
                    children.push(self.tree()?);
                }
                Some(c) => return Err(self.error(format!("unexpected character {c:?}"))),
            }
        }
        match value {
            Some(v) => Ok(Tree::leaf(kind, v)),
            None if children.is_empty() => {
                Err(self.error(format!("node {kind} has neither value nor children")))
            }
            None => Ok(Tree::node(kind, children)),
        }
    }

    fn string(&mut self) -> Result<String, AstError> {
        self.advance();
        let mut out = String::new();
        loop {
            match self.advance() {
                None => return Err(self.error("unterminated string")),
                Some('"') => return Ok(out),
                Some('\\') => match self.advance() {
                    Some(c @ ('"' | '\\')) => out.push(c),
                    Some(c) => return Err(self.error(format!("unknown escape \\{c}"))),
                    None => return Err(self.error("unterminated string")),
                },
                Some(c) => out.push(c),
            }
        }
    }
}

/// Reads exactly one tree.
pub fn read_sexpr_ast(text: &str) -> Result<Ast, AstError> {
    let mut reader = Reader::new(text);
    if reader.at_end() {
        return Err(AstError::EmptyInput);
    }
    let tree = reader.tree()?;
    if !reader.at_end() {
        return Err(match reader.peek() {
            Some(')') => reader.error("unbalanced parentheses: unexpected `)`"),
            _ => reader.error("trailing input after tree"),
        });
    }
    tree.into_ast()
}

/// Reads a sequence of whitespace-separated trees.
pub fn read_sexpr_asts(text: &str) -> Result<Vec<Ast>, AstError> {
    let mut reader = Reader::new(text);
    let mut out = Vec::new();
    while !reader.at_end() {
        if reader.peek() == Some(')') {
            return Err(reader.error("unbalanced parentheses: unexpected `)`"));
        }
        out.push(reader.tree()?.into_ast()?);
    }
    Ok(out)
}

fn write_node(ast: &Ast, id: NodeId, out: &mut String) {
    out.push('(');
    out.push_str(ast.kind(id));
    match ast.value(id) {
        Some(v) => {
            out.push_str(" \"");
            for c in v.chars() {
                if c == '"' || c == '\\' {
                    out.push('\\');
                }
                out.push(c);
            }
            out.push('"');
        }
        None => {
            for &child in ast.children(id) {
                out.push(' ');
                write_node(ast, child, out);
            }
        }
    }
    out.push(')');
}

/// Single-line rendering.
pub fn write_sexpr_ast(ast: &Ast) -> String {
    let mut out = String::new();
    write_node(ast, ast.root(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_assignment() {
        let ast = read_sexpr_ast("(AssignExpr (NameExpr \"x\") (IntegerLiteralExpr \"7\"))").unwrap();
        let expected = Tree::node(
            "AssignExpr",
            vec![Tree::leaf("NameExpr", "x"), Tree::leaf("IntegerLiteralExpr", "7")],
        );
        assert_eq!(Tree::from_ast(&ast), expected);
        assert_eq!(
            write_sexpr_ast(&ast),
            "(AssignExpr (NameExpr \"x\") (IntegerLiteralExpr \"7\"))"
        );
    }

    #[test]
    fn single_terminal_root() {
        let ast = read_sexpr_ast("(NameExpr \"x\")").unwrap();
        assert_eq!(ast.len(), 1);
        assert_eq!(ast.terminals(), vec![0]);
    }

    #[test]
    fn whitespace_and_escapes() {
        let ast = read_sexpr_ast("(A\n\t(B  \"say \\\"hi\\\" \\\\\")\n)").unwrap();
        assert_eq!(ast.value(1), Some("say \"hi\" \\"));
        let again = read_sexpr_ast(&write_sexpr_ast(&ast)).unwrap();
        assert_eq!(ast, again);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_sexpr_ast("(A (B \"x\")"), Err(AstError::Syntax { .. })));
        assert!(matches!(read_sexpr_ast("(A (B \"x\")))"), Err(AstError::Syntax { .. })));
        // terminal with children
        assert!(read_sexpr_ast("(A \"v\" (B \"x\"))").is_err());
        // nonterminal with quoted value
        assert!(read_sexpr_ast("(A (B \"x\") \"v\")").is_err());
        assert!(read_sexpr_ast("(A)").is_err());
        assert!(matches!(read_sexpr_ast("(Bad_Kind \"v\")"), Err(AstError::InvalidKind(_))));
        assert_eq!(read_sexpr_ast("   "), Err(AstError::EmptyInput));
    }

    #[test]
    fn reads_many() {
        let asts = read_sexpr_asts("(A \"1\")\n(B (C \"2\") (D \"3\"))\n").unwrap();
        assert_eq!(asts.len(), 2);
        assert!(read_sexpr_asts("").unwrap().is_empty());
    }
}
