//! Tokenizer and recursive-descent parser for query text and type syntax.
//!
//! Precedence, loosest first: `let`/`if`, `or`, `and`, `not`, `==`,
//! `union`/`diff`, `+`, postfix `.field`. `let` and `if` extend as far to
//! the right as possible. `#` starts a comment that runs to end of line and
//! `;` separates queries in a multi-query file.

use std::fmt;

use thiserror::Error;

use crate::ast::{Qualifier, SurfaceExpr, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{column}: expected {expected}, found {found}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Bar,
    Dot,
    Colon,
    Assign,
    EqEq,
    Plus,
    Arrow,
    Semi,
    Kw(&'static str),
    Eof,
}

const KEYWORDS: &[&str] = &[
    "let", "in", "if", "then", "else", "not", "and", "or", "union", "diff", "sum", "flatten", "count",
    "empty", "true", "false", "int", "bool",
];

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(i) => write!(f, "integer `{i}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Assign => f.write_str("`=`"),
            Tok::EqEq => f.write_str("`==`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Arrow => f.write_str("`<-`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Kw(k) => write!(f, "`{k}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn position(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn error_at(src: &str, offset: usize, expected: &str, found: &str) -> SyntaxError {
    let (line, column) = position(src, offset);
    SyntaxError {
        line,
        column,
        expected: expected.to_owned(),
        found: found.to_owned(),
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '#' {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
            continue;
        }
        if is_ident_start(c) {
            let mut end = i;
            while let Some(&(j, c)) = chars.peek() {
                if !is_ident_char(c) {
                    break;
                }
                end = j + c.len_utf8();
                chars.next();
            }
            let word = &src[i..end];
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word.to_owned()),
            };
            out.push((tok, i));
            continue;
        }
        let negative = c == '-' && src[i + 1..].starts_with(|d: char| d.is_ascii_digit());
        if c.is_ascii_digit() || negative {
            chars.next();
            let mut end = i + 1;
            while let Some(&(j, d)) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                end = j + 1;
                chars.next();
            }
            let text = &src[i..end];
            let value = text
                .parse::<i64>()
                .map_err(|_| error_at(src, i, "integer literal in range", text))?;
            out.push((Tok::Int(value), i));
            continue;
        }
        chars.next();
        let next = chars.peek().map(|&(_, c)| c);
        let tok = match (c, next) {
            ('=', Some('=')) => {
                chars.next();
                Tok::EqEq
            }
            ('<', Some('-')) => {
                chars.next();
                Tok::Arrow
            }
            ('(', _) => Tok::LParen,
            (')', _) => Tok::RParen,
            ('{', _) => Tok::LBrace,
            ('}', _) => Tok::RBrace,
            (',', _) => Tok::Comma,
            ('|', _) => Tok::Bar,
            ('.', _) => Tok::Dot,
            (':', _) => Tok::Colon,
            ('=', _) => Tok::Assign,
            ('+', _) => Tok::Plus,
            (';', _) => Tok::Semi,
            _ => return Err(error_at(src, i, "a token", &format!("`{c}`"))),
        };
        out.push((tok, i));
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> PResult<Self> {
        Ok(Parser {
            src,
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn fail<T>(&self, expected: &str) -> PResult<T> {
        let (tok, offset) = &self.toks[self.pos];
        Err(error_at(self.src, *offset, expected, &tok.to_string()))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.fail(&tok.to_string())
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => self.fail("identifier"),
        }
    }

    fn expr(&mut self) -> PResult<SurfaceExpr> {
        match self.peek() {
            Tok::Kw("let") => {
                self.bump();
                let name = self.ident()?;
                self.expect(Tok::Assign)?;
                let bound = self.expr()?;
                self.expect(Tok::Kw("in"))?;
                let body = self.expr()?;
                Ok(SurfaceExpr::Let(name, Box::new(bound), Box::new(body)))
            }
            Tok::Kw("if") => {
                self.bump();
                let cond = self.expr()?;
                self.expect(Tok::Kw("then"))?;
                let then = self.expr()?;
                self.expect(Tok::Kw("else"))?;
                let other = self.expr()?;
                Ok(SurfaceExpr::If(Box::new(cond), Box::new(then), Box::new(other)))
            }
            _ => self.or_expr(),
        }
    }

    fn or_expr(&mut self) -> PResult<SurfaceExpr> {
        let mut lhs = self.and_expr()?;
        while self.eat(&Tok::Kw("or")) {
            let rhs = self.and_expr()?;
            lhs = SurfaceExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<SurfaceExpr> {
        let mut lhs = self.not_expr()?;
        while self.eat(&Tok::Kw("and")) {
            let rhs = self.not_expr()?;
            lhs = SurfaceExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<SurfaceExpr> {
        if self.eat(&Tok::Kw("not")) {
            let inner = self.not_expr()?;
            return Ok(SurfaceExpr::Not(Box::new(inner)));
        }
        self.eq_expr()
    }

    fn eq_expr(&mut self) -> PResult<SurfaceExpr> {
        let lhs = self.set_expr()?;
        if self.eat(&Tok::EqEq) {
            let rhs = self.set_expr()?;
            return Ok(SurfaceExpr::Eq(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn set_expr(&mut self) -> PResult<SurfaceExpr> {
        let mut lhs = self.add_expr()?;
        loop {
            if self.eat(&Tok::Kw("union")) {
                let rhs = self.add_expr()?;
                lhs = SurfaceExpr::Union(Box::new(lhs), Box::new(rhs));
            } else if self.eat(&Tok::Kw("diff")) {
                let rhs = self.add_expr()?;
                lhs = SurfaceExpr::Diff(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn add_expr(&mut self) -> PResult<SurfaceExpr> {
        let mut lhs = self.postfix()?;
        while self.eat(&Tok::Plus) {
            let rhs = self.postfix()?;
            lhs = SurfaceExpr::Add(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> PResult<SurfaceExpr> {
        let mut e = self.atom()?;
        while self.eat(&Tok::Dot) {
            let field = self.ident()?;
            e = SurfaceExpr::Proj(Box::new(e), field);
        }
        Ok(e)
    }

    fn call_arg(&mut self) -> PResult<SurfaceExpr> {
        self.expect(Tok::LParen)?;
        let e = self.expr()?;
        self.expect(Tok::RParen)?;
        Ok(e)
    }

    fn atom(&mut self) -> PResult<SurfaceExpr> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(SurfaceExpr::Int(i))
            }
            Tok::Kw("true") => {
                self.bump();
                Ok(SurfaceExpr::Bool(true))
            }
            Tok::Kw("false") => {
                self.bump();
                Ok(SurfaceExpr::Bool(false))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(SurfaceExpr::Var(name))
            }
            Tok::Kw("let") | Tok::Kw("if") => self.expr(),
            Tok::Kw("sum") => {
                self.bump();
                Ok(SurfaceExpr::Sum(Box::new(self.call_arg()?)))
            }
            Tok::Kw("count") => {
                self.bump();
                Ok(SurfaceExpr::Count(Box::new(self.call_arg()?)))
            }
            Tok::Kw("flatten") => {
                self.bump();
                Ok(SurfaceExpr::Flatten(Box::new(self.call_arg()?)))
            }
            Tok::Kw("empty") => {
                self.bump();
                if self.eat(&Tok::Colon) {
                    match self.ty()? {
                        Type::Bag(elem) => Ok(SurfaceExpr::Empty(Some(*elem))),
                        _ => self.fail("a bag type after `empty :`"),
                    }
                } else {
                    Ok(SurfaceExpr::Empty(None))
                }
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(SurfaceExpr::Record(Vec::new()));
                }
                let is_record = matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Colon;
                if !is_record {
                    let e = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(e);
                }
                let mut fields: Vec<(String, SurfaceExpr)> = Vec::new();
                loop {
                    let offset = self.toks[self.pos].1;
                    let name = self.ident()?;
                    if fields.iter().any(|(n, _)| *n == name) {
                        return Err(error_at(
                            self.src,
                            offset,
                            "distinct field names",
                            &format!("duplicate field `{name}`"),
                        ));
                    }
                    self.expect(Tok::Colon)?;
                    fields.push((name, self.expr()?));
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
                Ok(SurfaceExpr::Record(fields))
            }
            Tok::LBrace => {
                self.bump();
                let first = self.expr()?;
                if self.eat(&Tok::Bar) {
                    let quals = self.qualifiers()?;
                    self.expect(Tok::RBrace)?;
                    return Ok(SurfaceExpr::Comp(Box::new(first), quals));
                }
                let mut elems = vec![first];
                while self.eat(&Tok::Comma) {
                    elems.push(self.expr()?);
                }
                self.expect(Tok::RBrace)?;
                Ok(SurfaceExpr::BagLit(elems))
            }
            _ => self.fail("an expression"),
        }
    }

    fn generator(&mut self) -> PResult<Qualifier> {
        let name = self.ident()?;
        self.expect(Tok::Arrow)?;
        Ok(Qualifier::Gen(name, self.expr()?))
    }

    fn qualifiers(&mut self) -> PResult<Vec<Qualifier>> {
        let mut quals = vec![self.generator()?];
        while self.eat(&Tok::Comma) {
            let is_gen = matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Arrow;
            if is_gen {
                let offset = self.toks[self.pos].1;
                let q = self.generator()?;
                if let Qualifier::Gen(name, _) = &q {
                    let clash = quals
                        .iter()
                        .any(|p| matches!(p, Qualifier::Gen(n, _) if n == name));
                    if clash {
                        return Err(error_at(
                            self.src,
                            offset,
                            "distinct comprehension binders",
                            &format!("duplicate binder `{name}`"),
                        ));
                    }
                }
                quals.push(q);
            } else {
                quals.push(Qualifier::Filter(self.expr()?));
            }
        }
        Ok(quals)
    }

    fn ty(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Kw("int") => {
                self.bump();
                Ok(Type::Int)
            }
            Tok::Kw("bool") => {
                self.bump();
                Ok(Type::Bool)
            }
            Tok::LBrace => {
                self.bump();
                let elem = self.ty()?;
                self.expect(Tok::RBrace)?;
                Ok(Type::bag(elem))
            }
            Tok::LParen => {
                self.bump();
                let start = self.toks[self.pos].1;
                let mut fields = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        let name = self.ident()?;
                        self.expect(Tok::Colon)?;
                        fields.push((name, self.ty()?));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RParen)?;
                }
                Type::record(fields)
                    .ok_or_else(|| error_at(self.src, start, "distinct field names", "duplicate"))
            }
            _ => self.fail("a type"),
        }
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }
}

/// Parses a single query. A trailing `;` is accepted.
pub fn parse(text: &str) -> Result<SurfaceExpr, SyntaxError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.eat(&Tok::Semi);
    if !p.at_eof() {
        return p.fail("end of input");
    }
    Ok(e)
}

/// Parses a file holding one or more `;`-separated queries.
pub fn parse_program(text: &str) -> Result<Vec<SurfaceExpr>, SyntaxError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.expr()?);
        if !p.eat(&Tok::Semi) && !p.at_eof() {
            return p.fail("`;` or end of input");
        }
    }
    Ok(out)
}

/// Splits a multi-query file into the source text of each query.
pub fn split_program(text: &str) -> Result<Vec<String>, SyntaxError> {
    let toks = tokenize(text)?;
    let mut out = Vec::new();
    let mut start = 0;
    for (tok, offset) in &toks {
        if matches!(tok, Tok::Semi | Tok::Eof) {
            let chunk = text[start..*offset].trim();
            let has_code = chunk
                .lines()
                .any(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
            if has_code {
                out.push(chunk.to_owned());
            }
            start = offset + 1;
        }
    }
    Ok(out)
}

/// Parses the plain type syntax: `int`, `bool`, `(A: T, B: T)`, `{T}`.
pub fn parse_type(text: &str) -> Result<Type, SyntaxError> {
    let mut p = Parser::new(text)?;
    let t = p.ty()?;
    if !p.at_eof() {
        return p.fail("end of input");
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(i: i64) -> SurfaceExpr {
        SurfaceExpr::Int(i)
    }

    #[test]
    fn bag_literal_sum() {
        let e = parse("sum({1,2,3})").unwrap();
        assert_eq!(
            e,
            SurfaceExpr::Sum(Box::new(SurfaceExpr::BagLit(vec![int(1), int(2), int(3)])))
        );
    }

    #[test]
    fn projection_comprehension() {
        let e = parse("{ x.A | x <- R }").unwrap();
        let body = SurfaceExpr::Proj(Box::new(SurfaceExpr::Var("x".into())), "A".into());
        assert_eq!(
            e,
            SurfaceExpr::Comp(
                Box::new(body),
                vec![Qualifier::Gen("x".into(), SurfaceExpr::Var("R".into()))]
            )
        );
    }

    #[test]
    fn let_binding() {
        let e = parse("let y = 1 in y + y").unwrap();
        let y = || Box::new(SurfaceExpr::Var("y".into()));
        assert_eq!(
            e,
            SurfaceExpr::Let("y".into(), Box::new(int(1)), Box::new(SurfaceExpr::Add(y(), y())))
        );
    }

    #[test]
    fn precedence() {
        let e = parse("not a == b and c or d").unwrap();
        let v = |s: &str| Box::new(SurfaceExpr::Var(s.into()));
        let expected = SurfaceExpr::Or(
            Box::new(SurfaceExpr::And(
                Box::new(SurfaceExpr::Not(Box::new(SurfaceExpr::Eq(v("a"), v("b"))))),
                v("c"),
            )),
            v("d"),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn filters_and_generators() {
        let e = parse("{ (B: x.B) | x <- R, y <- S, x.A == y.D }").unwrap();
        let SurfaceExpr::Comp(_, quals) = e else {
            panic!("not a comprehension")
        };
        assert_eq!(quals.len(), 3);
        assert!(matches!(quals[2], Qualifier::Filter(_)));
    }

    #[test]
    fn empty_ascription() {
        assert_eq!(
            parse("empty : {int}").unwrap(),
            SurfaceExpr::Empty(Some(Type::Int))
        );
        assert_eq!(parse("empty").unwrap(), SurfaceExpr::Empty(None));
        assert!(parse("empty : int").is_err());
    }

    #[test]
    fn error_position() {
        let err = parse("let x = 1 in\n  x +").unwrap_err();
        assert_eq!((err.line, err.column), (2, 6));
        assert_eq!(err.found, "end of input");
    }

    #[test]
    fn duplicate_fields_rejected() {
        assert!(parse("(A: 1, A: 2)").is_err());
        assert!(parse("{ 1 | x <- R, x <- S }").is_err());
    }

    #[test]
    fn negative_literals_and_comments() {
        assert_eq!(parse("-3 # trailing\n").unwrap(), int(-3));
    }

    #[test]
    fn multi_query_files() {
        let progs = parse_program("1; true;\n# note\nsum({1})").unwrap();
        assert_eq!(progs.len(), 3);
        let parts = split_program("1 + 1;\n# c\n;2").unwrap();
        assert_eq!(parts, vec!["1 + 1".to_owned(), "2".to_owned()]);
    }

    #[test]
    fn types() {
        let t = parse_type("{(B: int, A: bool)}").unwrap();
        assert_eq!(
            t,
            Type::bag(Type::Record(vec![
                ("A".into(), Type::Bool),
                ("B".into(), Type::Int)
            ]))
        );
        assert_eq!(t.to_string(), "{(A: bool, B: int)}");
        assert!(parse_type("(A: int, A: int)").is_err());
    }
}
