//! S-expression reader with source spans.
//!
//! Comments run from `;` to end of line. Symbols keep their raw spelling;
//! canonicalization happens when they become identifiers.

use crate::parser::ParseError;
use crate::span::SourceSpan;

#[derive(Clone, Debug, PartialEq)]
pub enum Sexpr {
    Sym(String, SourceSpan),
    Int(i64, SourceSpan),
    List(Vec<Sexpr>, SourceSpan),
}

impl Sexpr {
    pub fn span(&self) -> &SourceSpan {
        match self {
            Sexpr::Sym(_, s) | Sexpr::Int(_, s) | Sexpr::List(_, s) => s,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexpr::Sym(s, _) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            _ => None,
        }
    }
}

struct Scanner<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    file: &'a str,
    line: usize,
    col: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str, file: &'a str) -> Scanner<'a> {
        Scanner {
            chars: text.chars().peekable(),
            file,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn here(&self, len: usize) -> SourceSpan {
        SourceSpan::new(self.file, self.line, self.col, self.col + len)
    }
}

/// Reads every top-level expression in `text`.
pub fn parse_all(text: &str, file: &str) -> Result<Vec<Sexpr>, ParseError> {
    let mut scanner = Scanner::new(text, file);
    let mut out = Vec::new();
    loop {
        scanner.skip_trivia();
        if scanner.chars.peek().is_none() {
            return Ok(out);
        }
        out.push(read_expr(&mut scanner)?);
    }
}

fn read_expr(scanner: &mut Scanner) -> Result<Sexpr, ParseError> {
    scanner.skip_trivia();
    let span = scanner.here(1);
    match scanner.chars.peek() {
        None => Err(ParseError::syntax(span, "unexpected end of input")),
        Some('(') => {
            scanner.bump();
            let mut items = Vec::new();
            loop {
                scanner.skip_trivia();
                match scanner.chars.peek() {
                    None => {
                        return Err(ParseError::syntax(
                            scanner.here(1),
                            "unclosed parenthesis",
                        ))
                    }
                    Some(')') => {
                        scanner.bump();
                        return Ok(Sexpr::List(items, span));
                    }
                    Some(_) => items.push(read_expr(scanner)?),
                }
            }
        }
        Some(')') => Err(ParseError::syntax(span, "unmatched `)`")),
        Some(_) => read_atom(scanner),
    }
}

fn read_atom(scanner: &mut Scanner) -> Result<Sexpr, ParseError> {
    let start_line = scanner.line;
    let start_col = scanner.col;
    let mut word = String::new();
    while let Some(&c) = scanner.chars.peek() {
        if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
            break;
        }
        word.push(c);
        scanner.bump();
    }
    let span = SourceSpan::new(scanner.file, start_line, start_col, start_col + word.len());
    let looks_numeric = word
        .strip_prefix('-')
        .or_else(|| word.strip_prefix('+'))
        .unwrap_or(&word)
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit());
    if looks_numeric {
        match word.parse::<i64>() {
            Ok(v) => Ok(Sexpr::Int(v, span)),
            Err(_) => Err(ParseError::syntax(
                span,
                &format!("`{word}` is not a valid integer"),
            )),
        }
    } else {
        Ok(Sexpr::Sym(word, span))
    }
}
