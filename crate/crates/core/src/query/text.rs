//! Textual query syntax.
//!
//! ```text
//! query    := disj
//! disj     := conj ( "|" conj )*
//! conj     := unary ( "&" unary )*
//! unary    := "!" unary | "(" disj ")" | literal
//! literal  := number "<=" name "<=" number
//!           | name "=" level
//!           | name "in" "{" level ( "," level )* "}"
//! name, level := bare word | "double-quoted string"
//! ```
//!
//! `&` binds tighter than `|`. Bare words are any run of characters other
//! than whitespace, `"` and `( ) & | ! < = { } ,`. Numbers use the usual
//! float syntax, including `inf` and exponents (`1e-06`).

use super::ast::{Literal, Node, Predicate, Query};
use crate::dataio::{Column, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    LParen,
    RParen,
    And,
    Or,
    Not,
    Le,
    Eq,
    LBrace,
    RBrace,
    Comma,
}

fn is_special(c: char) -> bool {
    c.is_whitespace() || "\"()&|!<={},".contains(c)
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::QuerySyntax {
        position,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '&' => Some(Tok::And),
            '|' => Some(Tok::Or),
            '!' => Some(Tok::Not),
            '=' => Some(Tok::Eq),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            out.push((pos, t));
            i += 1;
            continue;
        }
        if c == '<' {
            if chars.get(i + 1).map(|p| p.1) == Some('=') {
                out.push((pos, Tok::Le));
                i += 2;
                continue;
            }
            return Err(syntax(pos, "expected `<=`"));
        }
        if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(syntax(pos, "unterminated quoted name")),
                    Some((_, '"')) => {
                        i += 1;
                        break;
                    }
                    Some((_, '\\')) => {
                        let Some((_, e)) = chars.get(i + 1) else {
                            return Err(syntax(pos, "dangling escape"));
                        };
                        s.push(*e);
                        i += 2;
                    }
                    Some((_, ch)) => {
                        s.push(*ch);
                        i += 1;
                    }
                }
            }
            out.push((pos, Tok::Word(s)));
            continue;
        }
        let start = i;
        while i < chars.len() && !is_special(chars[i].1) {
            i += 1;
        }
        let word: String = chars[start..i].iter().map(|p| p.1).collect();
        out.push((pos, Tok::Word(word)));
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    dataset: &'a Dataset,
    view: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.1.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let pos = self.pos();
        match self.next() {
            Some(t) if t == want => Ok(()),
            _ => Err(syntax(pos, format!("expected {what}"))),
        }
    }

    fn word(&mut self, what: &str) -> Result<(usize, String)> {
        let pos = self.pos();
        match self.next() {
            Some(Tok::Word(w)) => Ok((pos, w)),
            _ => Err(syntax(pos, format!("expected {what}"))),
        }
    }

    fn disj(&mut self) -> Result<Node> {
        let mut parts = vec![self.conj()?];
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Node::Or(parts)
        })
    }

    fn conj(&mut self) -> Result<Node> {
        let mut parts = vec![self.unary()?];
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Node::And(parts)
        })
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Tok::Not) => {
                self.at += 1;
                Ok(Node::Not(Box::new(self.unary()?)))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let inner = self.disj()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => self.literal(),
        }
    }

    fn attribute(&self, pos: usize, name: &str) -> Result<usize> {
        let view = &self.dataset.views[self.view];
        view.attribute_index(name).ok_or_else(|| Error::Query {
            query: self.text.to_string(),
            message: format!(
                "unknown attribute `{name}` in view `{}` (position {pos})",
                view.name
            ),
        })
    }

    fn level(&self, attr: usize, pos: usize, level: &str) -> Result<u32> {
        let a = &self.dataset.views[self.view].attributes[attr];
        a.level_index(level).ok_or_else(|| Error::Query {
            query: self.text.to_string(),
            message: format!(
                "`{}` has no level `{level}` (position {pos})",
                a.name
            ),
        })
    }

    fn literal(&mut self) -> Result<Node> {
        let (pos, first) = self.word("a literal")?;
        match self.peek() {
            Some(Tok::Le) => {
                self.at += 1;
                let lo: f64 = first
                    .parse()
                    .map_err(|_| syntax(pos, format!("`{first}` is not a number")))?;
                let (npos, name) = self.word("an attribute name")?;
                self.expect(Tok::Le, "`<=`")?;
                let (hpos, hi_text) = self.word("an upper bound")?;
                let hi: f64 = hi_text
                    .parse()
                    .map_err(|_| syntax(hpos, format!("`{hi_text}` is not a number")))?;
                if lo.is_nan() || hi.is_nan() || lo > hi {
                    return Err(syntax(pos, format!("invalid interval [{lo}, {hi}]")));
                }
                let attr = self.attribute(npos, &name)?;
                self.check_kind(attr, true, npos)?;
                Ok(Node::Lit(Literal::interval(attr, lo, hi)))
            }
            Some(Tok::Eq) => {
                self.at += 1;
                let attr = self.attribute(pos, &first)?;
                self.check_kind(attr, false, pos)?;
                let (lpos, level) = self.word("a level")?;
                let code = self.level(attr, lpos, &level)?;
                Ok(Node::Lit(Literal::levels(attr, vec![code])))
            }
            Some(Tok::Word(w)) if w == "in" => {
                self.at += 1;
                let attr = self.attribute(pos, &first)?;
                self.check_kind(attr, false, pos)?;
                self.expect(Tok::LBrace, "`{`")?;
                let mut codes = Vec::new();
                loop {
                    let (lpos, level) = self.word("a level")?;
                    codes.push(self.level(attr, lpos, &level)?);
                    match self.next() {
                        Some(Tok::Comma) => continue,
                        Some(Tok::RBrace) => break,
                        _ => return Err(syntax(self.pos(), "expected `,` or `}`")),
                    }
                }
                Ok(Node::Lit(Literal::levels(attr, codes)))
            }
            _ => Err(syntax(self.pos(), "expected `<=`, `=` or `in`")),
        }
    }

    fn check_kind(&self, attr: usize, numeric: bool, pos: usize) -> Result<()> {
        let a = &self.dataset.views[self.view].attributes[attr];
        let is_numeric = matches!(a.column, Column::Numeric(_));
        if is_numeric == numeric {
            Ok(())
        } else {
            Err(Error::Query {
                query: self.text.to_string(),
                message: format!(
                    "`{}` is {} (position {pos})",
                    a.name,
                    if is_numeric { "numeric" } else { "categorical" }
                ),
            })
        }
    }
}

/// Parses `text` as a query over view `view` of `dataset`.
pub fn parse_query(text: &str, dataset: &Dataset, view: usize) -> Result<Query> {
    if view >= dataset.n_views() {
        return Err(Error::Usage(format!("view index {view} out of range")));
    }
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(syntax(0, "empty query"));
    }
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
        dataset,
        view,
        text,
    };
    let root = p.disj()?;
    if p.at < p.toks.len() {
        return Err(syntax(p.pos(), "unexpected trailing input"));
    }
    Ok(Query::new(view, root))
}

fn quote(word: &str) -> String {
    if !word.is_empty() && !word.chars().any(is_special) && word != "in" {
        word.to_string()
    } else {
        let escaped = word.replace('\\', "\\\\").replace('"', "\\\"");
        format!("\"{escaped}\"")
    }
}

fn format_node(node: &Node, view: usize, dataset: &Dataset, out: &mut String) {
    match node {
        Node::Lit(l) => {
            let attr = &dataset.views[view].attributes[l.attribute];
            match &l.predicate {
                Predicate::Interval { lo, hi } => {
                    out.push_str(&format!("{lo} <= {} <= {hi}", quote(&attr.name)));
                }
                Predicate::Levels(codes) => {
                    let names: Vec<String> = match &attr.column {
                        Column::Categorical { levels, .. } => codes
                            .iter()
                            .map(|&c| quote(&levels[c as usize]))
                            .collect(),
                        Column::Numeric(_) => codes.iter().map(|c| c.to_string()).collect(),
                    };
                    if names.len() == 1 {
                        out.push_str(&format!("{} = {}", quote(&attr.name), names[0]));
                    } else {
                        out.push_str(&format!("{} in {{{}}}", quote(&attr.name), names.join(", ")));
                    }
                }
            }
        }
        Node::And(children) => {
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    out.push_str(" & ");
                }
                let paren = matches!(c, Node::Or(_));
                if paren {
                    out.push('(');
                }
                format_node(c, view, dataset, out);
                if paren {
                    out.push(')');
                }
            }
        }
        Node::Or(children) => {
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                format_node(c, view, dataset, out);
            }
        }
        Node::Not(inner) => {
            out.push_str("!(");
            format_node(inner, view, dataset, out);
            out.push(')');
        }
    }
}

pub fn format_query(query: &Query, dataset: &Dataset) -> String {
    let mut s = String::new();
    format_node(&query.root, query.view, dataset, &mut s);
    s
}
