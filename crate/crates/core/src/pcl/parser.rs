use super::lexer::{tokenize, Token, TokenKind};
use super::{ErrorKind, Location, PclError, MAX_NESTING, MAX_SOURCE_CHARS, MAX_STATEMENTS};

/// Parsed construction program: ordered assignments plus the final declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PclProgram {
    pub statements: Vec<Statement>,
    pub final_ident: String,
    pub final_loc: Location,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub target: String,
    pub loc: Location,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Ref {
        name: String,
        loc: Location,
    },
    Activity {
        label: String,
        loc: Location,
    },
    Silent {
        loc: Location,
    },
    Xor {
        children: Vec<Expr>,
        loc: Location,
    },
    Loop {
        body: Box<Expr>,
        redo: Box<Expr>,
        loc: Location,
    },
    PartialOrder {
        children: Vec<Expr>,
        edges: Vec<EdgeLit>,
        loc: Location,
    },
}

impl Expr {
    pub fn loc(&self) -> Location {
        match self {
            Expr::Ref { loc, .. }
            | Expr::Activity { loc, .. }
            | Expr::Silent { loc }
            | Expr::Xor { loc, .. }
            | Expr::Loop { loc, .. }
            | Expr::PartialOrder { loc, .. } => *loc,
        }
    }

    /// Identifiers referenced by this expression, left to right.
    pub fn refs(&self) -> Vec<(&str, Location)> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<(&'a str, Location)>) {
        match self {
            Expr::Ref { name, loc } => out.push((name, *loc)),
            Expr::Activity { .. } | Expr::Silent { .. } => {}
            Expr::Xor { children, .. } | Expr::PartialOrder { children, .. } => {
                children.iter().for_each(|c| c.collect_refs(out))
            }
            Expr::Loop { body, redo, .. } => {
                body.collect_refs(out);
                redo.collect_refs(out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeLit {
    pub from: usize,
    pub to: usize,
    pub loc: Location,
}

const FUNCTIONS: [&str; 6] = ["activity", "silent", "xor", "loop", "partial_order", "final"];

/// Names that belong to general-purpose scripting rather than to the
/// construction language. Seeing one is reported as a forbidden construct.
const FORBIDDEN: &[&str] = &[
    "import", "from", "exec", "eval", "compile", "open", "def", "class", "lambda", "while",
    "for", "if", "elif", "else", "with", "global", "nonlocal", "return", "yield", "async",
    "await", "del", "try", "except", "finally", "raise", "assert", "print", "input", "getattr",
    "setattr", "delattr", "globals", "locals", "vars", "breakpoint", "exit", "quit",
];

fn is_forbidden(name: &str) -> bool {
    FORBIDDEN.contains(&name) || name.starts_with("__")
}

fn forbidden(name: &str, loc: Location) -> PclError {
    PclError::new(
        ErrorKind::ForbiddenConstruct,
        loc,
        format!(
            "`{name}` is not part of the model construction language; only activity, silent, \
             xor, loop, partial_order and final may be used, and no libraries can be imported"
        ),
    )
}

/// Raw call argument before it is matched against a function's signature.
enum Arg {
    Expr(Expr),
    Str(String, Location),
    Int(usize, Location),
    List(Vec<Arg>, Location),
    Tuple(Vec<Arg>, Location),
}

impl Arg {
    fn loc(&self) -> Location {
        match self {
            Arg::Expr(e) => e.loc(),
            Arg::Str(_, l) | Arg::Int(_, l) | Arg::List(_, l) | Arg::Tuple(_, l) => *l,
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

pub fn parse(source: &str) -> Result<PclProgram, PclError> {
    let chars = source.chars().count();
    if chars > MAX_SOURCE_CHARS {
        return Err(PclError::new(
            ErrorKind::LimitExceeded,
            Location { line: 1, column: 1 },
            format!("program has {chars} characters, the limit is {MAX_SOURCE_CHARS}"),
        ));
    }
    let tokens = tokenize(source)?;
    Parser {
        tokens,
        pos: 0,
        depth: 0,
    }
    .program()
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_kind_at(&self, offset: usize) -> &TokenKind {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn skip_terms(&mut self) {
        while self.peek().kind == TokenKind::Term {
            self.next();
        }
    }

    fn unexpected(&self, expected: &str) -> PclError {
        let t = self.peek();
        PclError::new(
            ErrorKind::Parse,
            t.loc,
            format!("expected {expected}, found {}", t.kind.describe()),
        )
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<Token, PclError> {
        if self.peek().kind == kind {
            Ok(self.next())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn program(mut self) -> Result<PclProgram, PclError> {
        let mut statements = Vec::new();
        loop {
            self.skip_terms();
            let tok = self.peek().clone();
            match &tok.kind {
                TokenKind::Eof if statements.is_empty() => {
                    return Err(PclError::new(
                        ErrorKind::Parse,
                        tok.loc,
                        "the program is empty; expected assignments followed by final(<identifier>)"
                            .into(),
                    ))
                }
                TokenKind::Eof => {
                    return Err(PclError::new(
                        ErrorKind::NoFinal,
                        tok.loc,
                        "the program has no final(<identifier>) declaration; end it with \
                         final(...) naming the root model"
                            .into(),
                    ))
                }
                TokenKind::Ident(name) if is_forbidden(name) => {
                    return Err(forbidden(name, tok.loc))
                }
                TokenKind::Ident(name)
                    if name == "final" && *self.peek_kind_at(1) == TokenKind::LParen =>
                {
                    self.next();
                    self.next();
                    let ident = self.ident("an identifier inside final(...)")?;
                    self.expect(TokenKind::RParen, "`)` closing final(...)")?;
                    self.skip_terms();
                    if self.peek().kind != TokenKind::Eof {
                        return Err(self.unexpected("end of input after final(...)"));
                    }
                    return Ok(PclProgram {
                        statements,
                        final_ident: ident.0,
                        final_loc: ident.1,
                    });
                }
                TokenKind::Ident(name) => {
                    let name = name.clone();
                    match self.peek_kind_at(1) {
                        TokenKind::Assign => {}
                        TokenKind::LParen if FUNCTIONS.contains(&name.as_str()) => {
                            return Err(PclError::new(
                                ErrorKind::Parse,
                                tok.loc,
                                format!(
                                    "the result of {name}(...) must be assigned to an identifier, \
                                     e.g. `x = {name}(...)`"
                                ),
                            ))
                        }
                        TokenKind::LParen => return Err(unknown_function(&name, tok.loc)),
                        _ => {
                            self.next();
                            return Err(self.unexpected(&format!("`=` after `{name}`")));
                        }
                    }
                    if FUNCTIONS.contains(&name.as_str()) {
                        return Err(PclError::new(
                            ErrorKind::Parse,
                            tok.loc,
                            format!("`{name}` is a function name and cannot be assigned to"),
                        ));
                    }
                    if statements.len() == MAX_STATEMENTS {
                        return Err(PclError::new(
                            ErrorKind::LimitExceeded,
                            tok.loc,
                            format!("program has more than {MAX_STATEMENTS} statements"),
                        ));
                    }
                    self.next();
                    self.next();
                    let expr = self.expr()?;
                    // Terminators are optional between statements.
                    match self.peek().kind {
                        TokenKind::Term | TokenKind::Eof | TokenKind::Ident(_) => {}
                        _ => return Err(self.unexpected("end of statement")),
                    }
                    statements.push(Statement {
                        target: name,
                        loc: tok.loc,
                        expr,
                    });
                }
                _ => return Err(self.unexpected("an assignment or final(...)")),
            }
        }
    }

    fn ident(&mut self, expected: &str) -> Result<(String, Location), PclError> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Ident(name) if is_forbidden(&name) => Err(forbidden(&name, tok.loc)),
            TokenKind::Ident(name) => {
                self.next();
                Ok((name, tok.loc))
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    fn enter(&mut self, loc: Location) -> Result<(), PclError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(PclError::new(
                ErrorKind::LimitExceeded,
                loc,
                format!("expressions are nested more than {MAX_NESTING} levels deep"),
            ));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, PclError> {
        let (name, loc) = self.ident("an expression (a function call or an identifier)")?;
        if self.peek().kind != TokenKind::LParen {
            if FUNCTIONS.contains(&name.as_str()) {
                return Err(self.unexpected(&format!("`(` after `{name}`")));
            }
            return Ok(Expr::Ref { name, loc });
        }
        if !FUNCTIONS.contains(&name.as_str()) {
            return Err(unknown_function(&name, loc));
        }
        if name == "final" {
            return Err(PclError::new(
                ErrorKind::Parse,
                loc,
                "final(...) must be the last line of the program, not part of an expression"
                    .into(),
            ));
        }
        self.enter(loc)?;
        self.next();
        let args = self.arg_list(TokenKind::RParen)?;
        self.depth -= 1;
        build_call(&name, loc, args)
    }

    /// Comma-separated arguments up to `close`; newlines inside brackets are
    /// ignored and a trailing comma is tolerated.
    fn arg_list(&mut self, close: TokenKind) -> Result<Vec<Arg>, PclError> {
        let mut args = Vec::new();
        self.skip_terms();
        if self.peek().kind == close {
            self.next();
            return Ok(args);
        }
        loop {
            self.skip_terms();
            args.push(self.arg()?);
            self.skip_terms();
            match self.peek().kind {
                TokenKind::Comma => {
                    self.next();
                    self.skip_terms();
                    if self.peek().kind == close {
                        self.next();
                        return Ok(args);
                    }
                }
                ref k if *k == close => {
                    self.next();
                    return Ok(args);
                }
                _ => return Err(self.unexpected(&format!("`,` or {}", close.describe()))),
            }
        }
    }

    fn arg(&mut self) -> Result<Arg, PclError> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Str(s) => {
                self.next();
                Ok(Arg::Str(s, tok.loc))
            }
            TokenKind::Int(i) => {
                self.next();
                Ok(Arg::Int(i, tok.loc))
            }
            TokenKind::LBracket | TokenKind::LParen => {
                self.enter(tok.loc)?;
                self.next();
                let close = if tok.kind == TokenKind::LBracket {
                    TokenKind::RBracket
                } else {
                    TokenKind::RParen
                };
                let items = self.arg_list(close.clone())?;
                self.depth -= 1;
                Ok(if close == TokenKind::RBracket {
                    Arg::List(items, tok.loc)
                } else {
                    Arg::Tuple(items, tok.loc)
                })
            }
            TokenKind::Ident(_) => Ok(Arg::Expr(self.expr()?)),
            _ => Err(self.unexpected("an argument")),
        }
    }
}

fn unknown_function(name: &str, loc: Location) -> PclError {
    PclError::new(
        ErrorKind::UnknownFunction,
        loc,
        format!(
            "unknown function `{name}`; the available functions are activity(\"label\"), \
             silent(), xor(a, b, ...), loop(do, redo), partial_order([children], [(i, j), ...]) \
             and final(root)"
        ),
    )
}

fn arity(name: &str, signature: &str, got: usize, loc: Location) -> PclError {
    PclError::new(
        ErrorKind::Arity,
        loc,
        format!("{name} called with {got} argument(s); expected {signature}"),
    )
}

fn type_error(what: &str, loc: Location) -> PclError {
    PclError::new(ErrorKind::Parse, loc, format!("expected {what}"))
}

fn into_expr(arg: Arg, what: &str) -> Result<Expr, PclError> {
    match arg {
        Arg::Expr(e) => Ok(e),
        other => Err(type_error(what, other.loc())),
    }
}

fn build_call(name: &str, loc: Location, mut args: Vec<Arg>) -> Result<Expr, PclError> {
    match name {
        "activity" => {
            if args.len() != 1 {
                return Err(arity(name, "exactly one string label", args.len(), loc));
            }
            match args.pop() {
                Some(Arg::Str(label, _)) => Ok(Expr::Activity { label, loc }),
                Some(other) => Err(type_error(
                    "a double-quoted string label in activity(...)",
                    other.loc(),
                )),
                None => unreachable!(),
            }
        }
        "silent" => {
            if !args.is_empty() {
                return Err(arity(name, "no arguments", args.len(), loc));
            }
            Ok(Expr::Silent { loc })
        }
        "xor" => {
            if args.len() < 2 {
                return Err(arity(name, "at least two submodels", args.len(), loc));
            }
            let children = args
                .into_iter()
                .map(|a| into_expr(a, "a submodel (identifier or call) as xor argument"))
                .collect::<Result<_, _>>()?;
            Ok(Expr::Xor { children, loc })
        }
        "loop" => {
            if args.len() != 2 {
                return Err(arity(name, "exactly two submodels (do, redo)", args.len(), loc));
            }
            let redo = into_expr(args.pop().unwrap(), "a submodel as the redo part of loop")?;
            let body = into_expr(args.pop().unwrap(), "a submodel as the do part of loop")?;
            Ok(Expr::Loop {
                body: Box::new(body),
                redo: Box::new(redo),
                loc,
            })
        }
        "partial_order" => {
            if args.len() != 2 {
                return Err(arity(
                    name,
                    "a list of submodels and a list of (i, j) edges",
                    args.len(),
                    loc,
                ));
            }
            let edges_arg = args.pop().unwrap();
            let children_arg = args.pop().unwrap();
            let children = match children_arg {
                Arg::List(items, list_loc) => {
                    if items.is_empty() {
                        return Err(PclError::new(
                            ErrorKind::Arity,
                            list_loc,
                            "partial_order needs at least one submodel in its child list".into(),
                        ));
                    }
                    items
                        .into_iter()
                        .map(|a| into_expr(a, "a submodel in the partial_order child list"))
                        .collect::<Result<Vec<_>, _>>()?
                }
                other => {
                    return Err(type_error(
                        "a [list] of submodels as the first partial_order argument",
                        other.loc(),
                    ))
                }
            };
            let edges = match edges_arg {
                Arg::List(items, _) => items
                    .into_iter()
                    .map(edge_lit)
                    .collect::<Result<Vec<_>, _>>()?,
                other => {
                    return Err(type_error(
                        "a [list] of (i, j) edges as the second partial_order argument",
                        other.loc(),
                    ))
                }
            };
            Ok(Expr::PartialOrder {
                children,
                edges,
                loc,
            })
        }
        _ => Err(unknown_function(name, loc)),
    }
}

fn edge_lit(arg: Arg) -> Result<EdgeLit, PclError> {
    match arg {
        Arg::Tuple(items, loc) => match items.as_slice() {
            [Arg::Int(from, _), Arg::Int(to, _)] => Ok(EdgeLit {
                from: *from,
                to: *to,
                loc,
            }),
            _ => Err(type_error(
                "an edge of two child indices like (0, 1)",
                loc,
            )),
        },
        other => Err(type_error("an edge tuple like (0, 1)", other.loc())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let p = parse("a = activity(\"pay\") final(a)").unwrap();
        assert_eq!(p.statements.len(), 1);
        assert_eq!(p.final_ident, "a");
        assert!(matches!(&p.statements[0].expr, Expr::Activity { label, .. } if label == "pay"));
    }

    #[test]
    fn missing_final() {
        assert_eq!(parse("a = activity(\"pay\")").unwrap_err().kind, ErrorKind::NoFinal);
        assert_eq!(parse("").unwrap_err().kind, ErrorKind::Parse);
        assert_eq!(parse("  \n# only a comment\n").unwrap_err().kind, ErrorKind::Parse);
    }

    #[test]
    fn forbidden_tokens() {
        let e = parse("import os").unwrap_err();
        assert_eq!(e.kind, ErrorKind::ForbiddenConstruct);
        assert_eq!(e.location, Location { line: 1, column: 1 });
        assert_eq!(
            parse("a = __import__(\"os\")\nfinal(a)").unwrap_err().kind,
            ErrorKind::ForbiddenConstruct
        );
        assert_eq!(
            parse("a = eval(\"1\")\nfinal(a)").unwrap_err().kind,
            ErrorKind::ForbiddenConstruct
        );
    }

    #[test]
    fn multiline_partial_order_with_trailing_comma() {
        let src = "a = activity(\"a\")\nb = activity(\"b\")\np = partial_order(\n  [a, b,],\n  [(0, 1),]\n)\nfinal(p)\n";
        let p = parse(src).unwrap();
        match &p.statements[2].expr {
            Expr::PartialOrder { children, edges, .. } => {
                assert_eq!(children.len(), 2);
                assert_eq!((edges[0].from, edges[0].to), (0, 1));
                assert_eq!(edges[0].loc, Location { line: 5, column: 4 });
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn arity_and_shape_errors() {
        assert_eq!(parse("a = loop(x)\nfinal(a)").unwrap_err().kind, ErrorKind::Arity);
        assert_eq!(parse("a = xor(x)\nfinal(a)").unwrap_err().kind, ErrorKind::Arity);
        assert_eq!(parse("a = silent(x)\nfinal(a)").unwrap_err().kind, ErrorKind::Arity);
        assert_eq!(parse("a = activity()\nfinal(a)").unwrap_err().kind, ErrorKind::Arity);
        assert_eq!(parse("a = activity(b)\nfinal(a)").unwrap_err().kind, ErrorKind::Parse);
        assert_eq!(
            parse("a = partial_order([x], [(0, 1, 2)])\nfinal(a)").unwrap_err().kind,
            ErrorKind::Parse
        );
        assert_eq!(parse("a = foo(x)\nfinal(a)").unwrap_err().kind, ErrorKind::UnknownFunction);
        assert_eq!(parse("xor(a, b)\nfinal(a)").unwrap_err().kind, ErrorKind::Parse);
        assert_eq!(parse("a = activity(\"x\") (\nfinal(a)").unwrap_err().kind, ErrorKind::Parse);
        assert_eq!(parse("a = activity(\"x\")\nfinal(a)\nb = silent()").unwrap_err().kind, ErrorKind::Parse);
    }

    #[test]
    fn limits() {
        let big = format!("a = activity(\"{}\")\nfinal(a)", "x".repeat(20_001));
        assert_eq!(parse(&big).unwrap_err().kind, ErrorKind::LimitExceeded);

        let many: String = (0..501).map(|i| format!("s{i} = silent()\n")).collect();
        let e = parse(&format!("{many}final(s0)")).unwrap_err();
        assert_eq!(e.kind, ErrorKind::LimitExceeded);
        assert_eq!(e.location.line, 501);

        let deep = format!("a = {}silent(){}\nfinal(a)", "loop(".repeat(40), ", silent())".repeat(40));
        assert_eq!(parse(&deep).unwrap_err().kind, ErrorKind::LimitExceeded);
    }
}
