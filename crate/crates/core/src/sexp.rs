//! S-expressions shared by the configuration format and SMT-LIB.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug)]
pub enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

/// Structural equality, ignoring positions.
impl PartialEq for Sexp {
    fn eq(&self, other: &Sexp) -> bool {
        match (self, other) {
            (Sexp::Atom(a, _), Sexp::Atom(b, _)) => a == b,
            (Sexp::List(a, _), Sexp::List(b, _)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Sexp {}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct SexpError {
    pub pos: Pos,
    pub msg: String,
}

impl Sexp {
    pub fn atom(s: &str) -> Sexp {
        Sexp::Atom(s.to_string(), Pos::default())
    }

    pub fn list(items: Vec<Sexp>) -> Sexp {
        Sexp::List(items, Pos::default())
    }

    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(v, _) => Some(v),
            Sexp::Atom(..) => None,
        }
    }

    /// The head symbol of a list form.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|v| v.first()).and_then(|h| h.as_atom())
    }

    pub fn error(&self, msg: impl Into<String>) -> SexpError {
        SexpError { pos: self.pos(), msg: msg.into() }
    }
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty() || s.chars().any(|c| c.is_whitespace() || "()|;\"".contains(c))
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(s, _) if needs_quotes(s) => write!(f, "|{s}|"),
            Sexp::Atom(s, _) => write!(f, "{s}"),
            Sexp::List(items, _) => {
                write!(f, "(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Reader<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn err(&self, msg: &str) -> SexpError {
        SexpError { pos: self.pos, msg: msg.to_string() }
    }

    fn read(&mut self) -> Result<Option<Sexp>, SexpError> {
        self.skip_ws();
        let start = self.pos;
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.chars.peek() {
                        None => return Err(SexpError { pos: start, msg: "unclosed parenthesis".into() }),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexp::List(items, start)));
                        }
                        Some(_) => items.push(self.read()?.expect("non-empty input")),
                    }
                }
            }
            ')' => Err(self.err("unexpected `)`")),
            '|' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(SexpError { pos: start, msg: "unclosed `|`".into() }),
                        Some('|') => return Ok(Some(Sexp::Atom(s, start))),
                        Some(c) => s.push(c),
                    }
                }
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(SexpError { pos: start, msg: "unclosed string".into() }),
                        Some('"') => {
                            if self.chars.peek() == Some(&'"') {
                                self.bump();
                                s.push('"');
                            } else {
                                return Ok(Some(Sexp::Atom(s, start)));
                            }
                        }
                        Some(c) => s.push(c),
                    }
                }
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' || c == '|' || c == '"' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Some(Sexp::Atom(s, start)))
            }
        }
    }
}

pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SexpError> {
    let mut r = Reader { chars: text.chars().peekable(), pos: Pos { line: 1, col: 1 } };
    let mut out = Vec::new();
    while let Some(s) = r.read()? {
        out.push(s);
    }
    Ok(out)
}

pub fn parse_one(text: &str) -> Result<Sexp, SexpError> {
    let mut v = parse_all(text)?;
    match v.len() {
        1 => Ok(v.pop().unwrap()),
        0 => Err(SexpError { pos: Pos { line: 1, col: 1 }, msg: "empty input".into() }),
        _ => Err(v[1].error("trailing input")),
    }
}

/// True once `text` holds at least one complete top-level expression.
pub fn is_complete(text: &str) -> bool {
    let mut depth = 0i64;
    let mut seen = false;
    let mut quoted = false;
    let mut comment = false;
    for c in text.chars() {
        if comment {
            comment = c != '\n';
            continue;
        }
        if quoted {
            quoted = c != '|';
            continue;
        }
        match c {
            ';' => comment = true,
            '|' => {
                quoted = true;
                seen = true;
            }
            '(' => {
                depth += 1;
                seen = true;
            }
            ')' => depth -= 1,
            c if !c.is_whitespace() => seen = true,
            _ => {}
        }
    }
    seen && depth <= 0 && !quoted
}
