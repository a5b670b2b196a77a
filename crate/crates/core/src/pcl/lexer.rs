use super::{ErrorKind, Location, PclError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    Int(usize),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Assign,
    /// Newline or `;`.
    Term,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Str(s) => format!("string {s:?}"),
            TokenKind::Int(i) => format!("integer {i}"),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Assign => "`=`".into(),
            TokenKind::Term => "end of statement".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub loc: Location,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn loc(&self) -> Location {
        Location {
            line: self.line,
            column: self.column,
        }
    }
}

/// Splits source text into tokens. Comments are dropped; newlines are kept
/// as statement terminators.
pub fn tokenize(source: &str) -> Result<Vec<Token>, PclError> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    loop {
        let loc = cur.loc();
        let Some(c) = cur.peek() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                loc: eof_location(source),
            });
            return Ok(tokens);
        };
        let kind = match c {
            '#' => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
                continue;
            }
            '\n' | ';' => {
                cur.bump();
                TokenKind::Term
            }
            c if c.is_whitespace() => {
                cur.bump();
                continue;
            }
            '(' | ')' | '[' | ']' | ',' | '=' => {
                cur.bump();
                match c {
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    ',' => TokenKind::Comma,
                    _ => TokenKind::Assign,
                }
            }
            '"' => {
                cur.bump();
                TokenKind::Str(lex_string(&mut cur, loc)?)
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                    digits.push(d);
                    cur.bump();
                }
                let value = digits.parse().map_err(|_| {
                    PclError::new(
                        ErrorKind::Lex,
                        loc,
                        format!("integer literal {digits} is too large"),
                    )
                })?;
                TokenKind::Int(value)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(d) = cur.peek().filter(|d| d.is_ascii_alphanumeric() || *d == '_') {
                    ident.push(d);
                    cur.bump();
                }
                TokenKind::Ident(ident)
            }
            '.' => {
                return Err(PclError::new(
                    ErrorKind::ForbiddenConstruct,
                    loc,
                    "attribute access with `.` is not allowed; only the model construction \
                     functions may be called"
                        .to_string(),
                ))
            }
            other => {
                return Err(PclError::new(
                    ErrorKind::Lex,
                    loc,
                    format!("unexpected character {other:?}"),
                ))
            }
        };
        tokens.push(Token { kind, loc });
    }
}

fn lex_string(cur: &mut Cursor<'_>, start: Location) -> Result<String, PclError> {
    let mut out = String::new();
    loop {
        match cur.bump() {
            None | Some('\n') => {
                return Err(PclError::new(
                    ErrorKind::Lex,
                    start,
                    "unterminated string literal".into(),
                ))
            }
            Some('"') => return Ok(out),
            Some('\\') => {
                let at = cur.loc();
                match cur.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    other => {
                        return Err(PclError::new(
                            ErrorKind::Lex,
                            at,
                            format!(
                                "unsupported escape sequence \\{}; only \\\" and \\\\ are allowed",
                                other.map(String::from).unwrap_or_default()
                            ),
                        ))
                    }
                }
            }
            Some(c) => out.push(c),
        }
    }
}

/// Position just past the last character of the final line.
pub fn eof_location(source: &str) -> Location {
    let line = source.split('\n').count();
    let column = source.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    Location { line, column }
}
