//! MiniJ: a small Java-like language covering method declarations, local
//! declarations, assignments, `if`/`while`/foreach, returns, calls, field and
//! array access, and the usual unary/binary operators.
//!
//! Empty blocks produce no node, `void` return types produce no `Type`
//! terminal, and a bare `return;` is a `Return` terminal with value `return`.

use super::{kinds, Ast, AstError, Tree};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(String),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const PUNCTS: [&str; 25] = [
    "==", "!=", "<=", ">=", "&&", "||", "=", "<", ">", "+", "-", "*", "/", "%", "!", "(", ")",
    "{", "}", "[", "]", ";", ",", ".", ":",
];

fn lex(source: &str) -> Result<Vec<Token>, AstError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut column) = (0usize, 1usize, 1usize);
    let syntax = |line, column, message: String| AstError::Syntax {
        line,
        column,
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, column);
        if c.is_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$')
            {
                i += 1;
            }
            column += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            column += i - start;
            out.push(Token {
                tok: Tok::Int(chars[start..i].iter().collect()),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        if c == '"' {
            let mut value = String::new();
            i += 1;
            column += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(syntax(start_line, start_col, "unterminated string".into()))
                    }
                    Some('"') => {
                        i += 1;
                        column += 1;
                        break;
                    }
                    Some('\\') => {
                        let escaped = chars.get(i + 1).copied().ok_or_else(|| {
                            syntax(start_line, start_col, "unterminated string".into())
                        })?;
                        value.push(match escaped {
                            'n' => '\n',
                            't' => '\t',
                            other => other,
                        });
                        i += 2;
                        column += 2;
                    }
                    Some(&ch) => {
                        value.push(ch);
                        i += 1;
                        column += 1;
                    }
                }
            }
            out.push(Token {
                tok: Tok::Str(value),
                line: start_line,
                column: start_col,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                i += p.len();
                column += p.len();
                out.push(Token {
                    tok: Tok::Punct(p),
                    line: start_line,
                    column: start_col,
                });
            }
            None => {
                return Err(syntax(
                    start_line,
                    start_col,
                    format!("unexpected character {c:?}"),
                ))
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

const KEYWORDS: [&str; 8] = ["if", "else", "while", "for", "return", "true", "false", "void"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn bump(&mut self) -> Tok {
        let tok = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, message: impl Into<String>) -> AstError {
        let t = &self.tokens[self.pos];
        AstError::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<(), AstError> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{p}`, found {}", describe(self.peek()))))
        }
    }

    fn ident(&mut self) -> Result<String, AstError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) || s == "void" => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            other => Err(self.error(format!("expected identifier, found {}", describe(other)))),
        }
    }

    /// Length in tokens of a type (`ident ("[" "]")*`) starting at `offset`.
    fn type_len_at(&self, offset: usize) -> Option<usize> {
        match self.peek_at(offset) {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) || s == "void" => {}
            _ => return None,
        }
        let mut len = 1;
        while matches!(self.peek_at(offset + len), Tok::Punct("["))
            && matches!(self.peek_at(offset + len + 1), Tok::Punct("]"))
        {
            len += 2;
        }
        Some(len)
    }

    fn is_ident_at(&self, offset: usize) -> bool {
        matches!(self.peek_at(offset), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
    }

    fn at_method(&self) -> bool {
        match self.type_len_at(0) {
            Some(n) => self.is_ident_at(n) && matches!(self.peek_at(n + 1), Tok::Punct("(")),
            None => false,
        }
    }

    fn at_var_decl(&self) -> bool {
        match self.type_len_at(0) {
            Some(n) => {
                self.is_ident_at(n)
                    && matches!(self.peek_at(n + 1), Tok::Punct("=") | Tok::Punct(";"))
            }
            None => false,
        }
    }

    fn type_text(&mut self) -> Result<String, AstError> {
        let mut text = self.ident()?;
        while self.is_punct("[") {
            self.bump();
            self.expect("]")?;
            text.push_str("[]");
        }
        Ok(text)
    }

    fn method(&mut self) -> Result<Tree, AstError> {
        let ret = self.type_text()?;
        let name = self.ident()?;
        let mut children = Vec::new();
        if ret != "void" {
            children.push(Tree::leaf(kinds::TYPE, ret));
        }
        children.push(Tree::leaf(kinds::NAME, name));
        self.expect("(")?;
        if !self.is_punct(")") {
            loop {
                let ty = self.type_text()?;
                let name = self.ident()?;
                children.push(Tree::node(
                    kinds::PARAMETER,
                    vec![Tree::leaf(kinds::TYPE, ty), Tree::leaf(kinds::NAME, name)],
                ));
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        if !self.is_punct("{") {
            return Err(self.error("expected method body"));
        }
        children.extend(self.block()?);
        Ok(Tree::node(kinds::METHOD_DECL, children))
    }

    fn block(&mut self) -> Result<Option<Tree>, AstError> {
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return Err(self.error("unclosed block"));
            }
            stmts.extend(self.statement()?);
        }
        self.bump();
        Ok((!stmts.is_empty()).then(|| Tree::node(kinds::BLOCK, stmts)))
    }

    fn body(&mut self) -> Result<Option<Tree>, AstError> {
        if self.is_punct("{") {
            self.block()
        } else {
            self.statement()
        }
    }

    fn statement(&mut self) -> Result<Option<Tree>, AstError> {
        if self.is_punct("{") {
            return self.block();
        }
        if self.eat(";") {
            return Ok(None);
        }
        if self.is_keyword("if") {
            self.bump();
            self.expect("(")?;
            let mut children = vec![self.expression()?];
            self.expect(")")?;
            children.extend(self.body()?);
            if self.is_keyword("else") {
                self.bump();
                children.extend(self.body()?);
            }
            return Ok(Some(Tree::node(kinds::IF_STMT, children)));
        }
        if self.is_keyword("while") {
            self.bump();
            self.expect("(")?;
            let mut children = vec![self.expression()?];
            self.expect(")")?;
            children.extend(self.body()?);
            return Ok(Some(Tree::node(kinds::WHILE_STMT, children)));
        }
        if self.is_keyword("for") {
            self.bump();
            self.expect("(")?;
            let ty = self.type_text()?;
            let name = self.ident()?;
            self.expect(":")?;
            let iterable = self.expression()?;
            self.expect(")")?;
            let mut children = vec![
                Tree::node(
                    kinds::VAR_DECL,
                    vec![Tree::leaf(kinds::TYPE, ty), Tree::leaf(kinds::NAME, name)],
                ),
                iterable,
            ];
            children.extend(self.body()?);
            return Ok(Some(Tree::node(kinds::FOREACH, children)));
        }
        if self.is_keyword("return") {
            self.bump();
            if self.eat(";") {
                return Ok(Some(Tree::leaf(kinds::RETURN, "return")));
            }
            let value = self.expression()?;
            self.expect(";")?;
            return Ok(Some(Tree::node(kinds::RETURN, vec![value])));
        }
        if self.at_var_decl() {
            let ty = self.type_text()?;
            let name = self.ident()?;
            let mut children = vec![Tree::leaf(kinds::TYPE, ty), Tree::leaf(kinds::NAME, name)];
            if self.eat("=") {
                children.push(self.expression()?);
            }
            self.expect(";")?;
            return Ok(Some(Tree::node(kinds::VAR_DECL, children)));
        }
        let expr = self.expression()?;
        let stmt = if self.eat("=") {
            let value = self.expression()?;
            Tree::node(kinds::ASSIGN_EXPR, vec![expr, value])
        } else {
            expr
        };
        self.expect(";")?;
        Ok(Some(stmt))
    }

    fn expression(&mut self) -> Result<Tree, AstError> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<Tree, AstError> {
        const LEVELS: [&[&str]; 6] = [
            &["||"],
            &["&&"],
            &["==", "!="],
            &["<", ">", "<=", ">="],
            &["+", "-"],
            &["*", "/", "%"],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while LEVELS[level].iter().any(|op| self.is_punct(op)) {
            self.bump();
            let rhs = self.binary(level + 1)?;
            lhs = Tree::node(kinds::BINARY_EXPR, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Tree, AstError> {
        if self.is_punct("!") || self.is_punct("-") {
            self.bump();
            let operand = self.unary()?;
            return Ok(Tree::node(kinds::UNARY_EXPR, vec![operand]));
        }
        self.postfix()
    }

    fn args(&mut self, into: &mut Vec<Tree>) -> Result<(), AstError> {
        self.expect("(")?;
        if !self.is_punct(")") {
            loop {
                into.push(self.expression()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")
    }

    fn postfix(&mut self) -> Result<Tree, AstError> {
        let mut expr = match self.bump() {
            Tok::Ident(s) if s == "true" || s == "false" => {
                return Ok(Tree::leaf(kinds::BOOLEAN_EXPR, s));
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                if self.is_punct("(") {
                    let mut children = vec![Tree::leaf(kinds::NAME, s)];
                    self.args(&mut children)?;
                    Tree::node(kinds::CALL, children)
                } else {
                    Tree::leaf(kinds::NAME_EXPR, s)
                }
            }
            Tok::Int(s) => Tree::leaf(kinds::INTEGER_LITERAL_EXPR, s),
            Tok::Str(s) => Tree::leaf(kinds::STRING_LITERAL_EXPR, s),
            Tok::Punct("(") => {
                let inner = self.expression()?;
                self.expect(")")?;
                inner
            }
            other => {
                self.pos -= 1;
                return Err(self.error(format!("expected expression, found {}", describe(&other))));
            }
        };
        loop {
            if self.eat(".") {
                let name = self.ident()?;
                if self.is_punct("(") {
                    let mut children = vec![expr, Tree::leaf(kinds::NAME, name)];
                    self.args(&mut children)?;
                    expr = Tree::node(kinds::CALL, children);
                } else {
                    expr = Tree::node(kinds::FIELD_ACCESS, vec![expr, Tree::leaf(kinds::NAME, name)]);
                }
            } else if self.eat("[") {
                let index = self.expression()?;
                self.expect("]")?;
                expr = Tree::node(kinds::ARRAY_ACCESS, vec![expr, index]);
            } else {
                return Ok(expr);
            }
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(s) => format!("`{s}`"),
        Tok::Str(_) => "string literal".to_string(),
        Tok::Punct(p) => format!("`{p}`"),
        Tok::Eof => "end of input".to_string(),
    }
}

fn parser_for(source: &str) -> Result<Parser, AstError> {
    let tokens = lex(source)?;
    Ok(Parser { tokens, pos: 0 })
}

/// Parses a single snippet: either one method declaration or a sequence of
/// statements. A lone statement becomes the root; several are wrapped in a
/// `Block`.
pub fn parse_mini(source: &str) -> Result<Ast, AstError> {
    let mut p = parser_for(source)?;
    if matches!(p.peek(), Tok::Eof) {
        return Err(AstError::EmptyInput);
    }
    let tree = if p.at_method() {
        p.method()?
    } else {
        let mut stmts = Vec::new();
        while !matches!(p.peek(), Tok::Eof) {
            stmts.extend(p.statement()?);
        }
        match stmts.len() {
            0 => return Err(AstError::EmptyInput),
            1 => stmts.pop().unwrap(),
            _ => Tree::node(kinds::BLOCK, stmts),
        }
    };
    if !matches!(p.peek(), Tok::Eof) {
        return Err(p.error(format!("unexpected {}", describe(p.peek()))));
    }
    tree.into_ast()
}

/// Parses a file of zero or more method declarations.
pub fn parse_methods(source: &str) -> Result<Vec<Ast>, AstError> {
    let mut p = parser_for(source)?;
    let mut out = Vec::new();
    while !matches!(p.peek(), Tok::Eof) {
        if !p.at_method() {
            return Err(p.error("expected method declaration"));
        }
        out.push(p.method()?.into_ast()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(kind: &str, value: &str) -> Tree {
        Tree::leaf(kind, value)
    }

    #[test]
    fn assignment_statement() {
        let ast = parse_mini("x = 7;").unwrap();
        let expected = Tree::node(
            "AssignExpr",
            vec![leaf("NameExpr", "x"), leaf("IntegerLiteralExpr", "7")],
        );
        assert_eq!(Tree::from_ast(&ast), expected);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(parse_mini(""), Err(AstError::EmptyInput));
        assert_eq!(parse_mini("  \n "), Err(AstError::EmptyInput));
    }

    #[test]
    fn boolean_method() {
        // hand-built from the grammar
        let expected = Tree::node(
            "MethodDecl",
            vec![
                leaf("Type", "boolean"),
                leaf("Name", "f"),
                Tree::node("Parameter", vec![leaf("Type", "Object"), leaf("Name", "target")]),
                Tree::node(
                    "Block",
                    vec![Tree::node("Return", vec![leaf("BooleanExpr", "true")])],
                ),
            ],
        );
        let ast = parse_mini("boolean f(Object target) { return true; }").unwrap();
        assert_eq!(Tree::from_ast(&ast), expected);
    }

    #[test]
    fn foreach_if_and_field_access() {
        let src = "boolean contains(Object target) {
            for (Object elem : this.elements) {
                if (elem.equals(target)) { return true; }
            }
            return false;
        }";
        let ast = parse_mini(src).unwrap();
        let tree = Tree::from_ast(&ast);
        let block = &tree.children[3];
        let foreach = &block.children[0];
        assert_eq!(foreach.kind, "Foreach");
        assert_eq!(
            foreach.children[1],
            Tree::node("FieldAccess", vec![leaf("NameExpr", "this"), leaf("Name", "elements")])
        );
        let call = &foreach.children[2].children[0].children[0];
        assert_eq!(
            *call,
            Tree::node(
                "Call",
                vec![leaf("NameExpr", "elem"), leaf("Name", "equals"), leaf("NameExpr", "target")]
            )
        );
    }

    #[test]
    fn precedence_and_arrays() {
        let ast = parse_mini("x = a[i] + b * -c;").unwrap();
        let expected = Tree::node(
            "AssignExpr",
            vec![
                leaf("NameExpr", "x"),
                Tree::node(
                    "BinaryExpr",
                    vec![
                        Tree::node("ArrayAccess", vec![leaf("NameExpr", "a"), leaf("NameExpr", "i")]),
                        Tree::node(
                            "BinaryExpr",
                            vec![
                                leaf("NameExpr", "b"),
                                Tree::node("UnaryExpr", vec![leaf("NameExpr", "c")]),
                            ],
                        ),
                    ],
                ),
            ],
        );
        assert_eq!(Tree::from_ast(&ast), expected);
    }

    #[test]
    fn void_method_with_empty_pieces() {
        let ast = parse_mini("void f() { if (x) {} return; }").unwrap();
        let expected = Tree::node(
            "MethodDecl",
            vec![
                leaf("Name", "f"),
                Tree::node(
                    "Block",
                    vec![Tree::node("IfStmt", vec![leaf("NameExpr", "x")]), leaf("Return", "return")],
                ),
            ],
        );
        assert_eq!(Tree::from_ast(&ast), expected);
    }

    #[test]
    fn several_methods() {
        let src = "int a() { return 1; }\n// comment\nint[] b(int[] xs, int n) { int[] ys = xs; return ys; }";
        let methods = parse_methods(src).unwrap();
        assert_eq!(methods.len(), 2);
        assert_eq!(methods[1].method_name().unwrap().1, "b");
        assert!(parse_methods("").unwrap().is_empty());
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_mini("x = ;") {
            Err(AstError::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 5)),
            other => panic!("unexpected {other:?}"),
        }
        match parse_mini("int f() {\n  return 1\n}") {
            Err(AstError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_mini("x = \"abc").is_err());
        assert!(parse_mini("x # y;").is_err());
    }
}
