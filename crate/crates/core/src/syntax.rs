//! Lexer and recursive-descent parser shared by the term, frame and process
//! readers.
//!
//! Term grammar: `ident | ident "(" term ("," term)* ")" | "<" term ("," term)+ ">"`.
//! Angle brackets with more than two components nest to the right, so
//! `<a,b,c>` reads as `<a,<b,c>>`. Identifiers starting with `z`, or declared
//! as variables by the caller, are variables; other identifiers are names
//! unless they spell a function symbol applied to arguments.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::term::{Symbol, Term, HOLE, MARKER};

/// A parse failure with a 1-based source location.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Number(String),
    LParen,
    RParen,
    Comma,
    LAngle,
    RAngle,
    Eq,
    Dot,
    Bar,
    Bang,
    LBracket,
    RBracket,
    Semi,
    LBrace,
    RBrace,
    Arrow,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::LAngle => f.write_str("`<`"),
            Tok::RAngle => f.write_str("`>`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

/// Whether reserved identifiers (`z0`, the marker, generated names) are accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    User,
    Internal,
}

fn is_ident_start(c: char, mode: Mode) -> bool {
    c.is_alphabetic() || c == '_' || (mode == Mode::Internal && c == '%')
}

fn is_ident_continue(c: char, mode: Mode) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\'' || c == '′' || (mode == Mode::Internal && c == '#')
}

pub(crate) fn lex(src: &str, mode: Mode) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let err = |msg: String| ParseError { line: l0, column: c0, message: msg };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '<' | '⟨' => Some(Tok::LAngle),
            '>' | '⟩' => Some(Tok::RAngle),
            '=' => Some(Tok::Eq),
            '.' => Some(Tok::Dot),
            '|' => Some(Tok::Bar),
            '!' => Some(Tok::Bang),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ';' => Some(Tok::Semi),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            _ => None,
        };
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Spanned { tok: Tok::Arrow, line: l0, column: c0 });
            i += 2;
            col += 2;
            continue;
        }
        if c == '↦' || c == '→' {
            out.push(Spanned { tok: Tok::Arrow, line: l0, column: c0 });
            i += 1;
            col += 1;
            continue;
        }
        if let Some(tok) = single {
            out.push(Spanned { tok, line: l0, column: c0 });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Spanned { tok: Tok::Number(s), line: l0, column: c0 });
            continue;
        }
        if is_ident_start(c, mode) {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let dotted = mode == Mode::Internal
                    && d == '.'
                    && chars[i - 1].is_ascii_digit()
                    && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit());
                if is_ident_continue(d, mode) || dotted {
                    i += 1;
                } else {
                    break;
                }
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Spanned { tok: Tok::Ident(s), line: l0, column: c0 });
            continue;
        }
        if c == '#' && mode == Mode::User {
            return Err(err("`#` is reserved for generated names".into()));
        }
        return Err(err(format!("unexpected character `{c}`")));
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

/// Cursor over a token stream.
pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    pub mode: Mode,
    /// Identifiers treated as variables in addition to those starting with `z`.
    pub vars: BTreeSet<String>,
}

impl Parser {
    pub fn new(src: &str, mode: Mode) -> Result<Parser, ParseError> {
        Ok(Parser { toks: lex(src, mode)?, pos: 0, mode, vars: BTreeSet::new() })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn error_here(&self, msg: impl Into<String>) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError { line: t.line, column: t.column, message: msg.into() }
    }

    pub fn error_at(&self, t: &Spanned, msg: impl Into<String>) -> ParseError {
        ParseError { line: t.line, column: t.column, message: msg.into() }
    }

    pub fn expect(&mut self, tok: Tok) -> Result<Spanned, ParseError> {
        if *self.peek() == tok {
            Ok(self.next())
        } else {
            Err(self.error_here(format!("expected {tok}, found {}", self.peek())))
        }
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn expect_ident(&mut self) -> Result<(String, Spanned), ParseError> {
        let t = self.next();
        match &t.tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.check_reserved(&s, &t)?;
                Ok((s, t))
            }
            other => Err(self.error_at(&t, format!("expected identifier, found {other}"))),
        }
    }

    pub fn expect_eof(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error_here(format!("unexpected {} after end of input", self.peek())))
        }
    }

    fn check_reserved(&self, s: &str, t: &Spanned) -> Result<(), ParseError> {
        if self.mode == Mode::User && (s == HOLE || s == "z₀" || s == "𝚡" || s == MARKER || s.contains('#')) {
            return Err(self.error_at(t, format!("`{s}` is a reserved identifier")));
        }
        Ok(())
    }

    pub fn is_variable_ident(&self, s: &str) -> bool {
        s.starts_with('z') || self.vars.contains(s) || s == "𝚡" || s == MARKER
    }

    fn leaf(&self, s: &str) -> Term {
        if self.mode == Mode::Internal {
            if s == "𝚡" || s == MARKER {
                return Term::marker();
            }
            if s == "z₀" || s == HOLE {
                return Term::hole();
            }
        }
        if self.is_variable_ident(s) {
            Term::var(s)
        } else {
            Term::name(s)
        }
    }

    pub fn term(&mut self) -> Result<Term, ParseError> {
        if self.eat(&Tok::LAngle) {
            let mut parts = vec![self.term()?];
            while self.eat(&Tok::Comma) {
                parts.push(self.term()?);
            }
            self.expect(Tok::RAngle)?;
            if parts.len() < 2 {
                return Err(self.error_here("a pair needs at least two components"));
            }
            let mut acc = parts.pop().unwrap();
            while let Some(p) = parts.pop() {
                acc = Term::pair(p, acc);
            }
            return Ok(acc);
        }
        let (id, tok) = match self.peek().clone() {
            Tok::Ident(_) => self.expect_ident()?,
            Tok::Number(n) => {
                let t = self.next();
                return Err(self.error_at(&t, format!("expected a term, found number `{n}`")));
            }
            other => return Err(self.error_here(format!("expected a term, found {other}"))),
        };
        if *self.peek() == Tok::LParen {
            let sym =
                Symbol::from_name(&id).ok_or_else(|| self.error_at(&tok, format!("unknown function symbol `{id}`")))?;
            self.next();
            let mut args = vec![self.term()?];
            while self.eat(&Tok::Comma) {
                args.push(self.term()?);
            }
            self.expect(Tok::RParen)?;
            if args.len() != sym.arity() {
                return Err(self.error_at(
                    &tok,
                    format!("`{}` expects {} arguments, found {}", sym.name(), sym.arity(), args.len()),
                ));
            }
            return Ok(Term::app(sym, args));
        }
        if Symbol::from_name(&id).is_some() {
            return Err(self.error_at(&tok, format!("function symbol `{id}` used without arguments")));
        }
        Ok(self.leaf(&id))
    }
}

/// Parses a single term from user input.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    parse_term_with_vars(src, &[])
}

/// Parses a term, treating the listed identifiers as variables.
pub fn parse_term_with_vars(src: &str, vars: &[&str]) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, Mode::User)?;
    p.vars = vars.iter().map(|s| s.to_string()).collect();
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a term that may mention the reserved marker `𝚡`/`%x`, the hole
/// `z0`/`z₀` and dotted position-indexed variables such as `z_1.2`.
pub fn parse_internal_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, Mode::Internal)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_and_sugar_agree() {
        let a = parse_term("pair(pi1(x), proj2(y))").unwrap();
        let b = parse_term("⟨π₁(x), π2(y)⟩").unwrap();
        let c = parse_term("<pi1(x), pi2(y)>").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn angle_tuples_nest_to_the_right() {
        let t = parse_term("<a,b,c>").unwrap();
        assert_eq!(t, parse_term("<a,<b,c>>").unwrap());
    }

    #[test]
    fn variables_by_prefix_or_declaration() {
        let t = parse_term_with_vars("dec(x, z_a)", &["x"]).unwrap();
        assert!(t.arg(0).is_var() && t.arg(1).is_var());
        assert!(parse_term("dec(x, k)").unwrap().arg(0).is_name());
    }

    #[test]
    fn reserved_identifiers_rejected() {
        assert!(parse_term("dec(z0,k)").is_err());
        assert!(parse_term("𝚡").is_err());
        assert!(parse_term("n#1").is_err());
        assert_eq!(parse_internal_term("dec(z0,k)").unwrap().arg(0), &Term::hole());
        assert_eq!(parse_internal_term("<z_1.2,𝚡>").unwrap().arg(1), &Term::marker());
    }

    #[test]
    fn arity_errors_carry_location() {
        let e = parse_term("enc(a,\n  b)").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(e.message.contains("expects 3"));
        let e = parse_term("pair").unwrap_err();
        assert!(e.message.contains("without arguments"));
    }

    #[test]
    fn round_trip_through_display() {
        let t = parse_term("check(m, sign(m, priv(a)), pub(a))").unwrap();
        assert_eq!(parse_term(&t.to_string()).unwrap(), t);
    }
}
