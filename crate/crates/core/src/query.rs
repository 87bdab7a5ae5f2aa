//! Saved-set boolean query language.
//!
//! ```text
//! QUERY   := OR_EXPR ( 'REFINED' 'BY' REFINE ( 'AND' REFINE )* )*
//! OR_EXPR := AND_EXPR ( 'OR' AND_EXPR )*
//! AND_EXPR:= NOT_EXPR ( 'AND' NOT_EXPR )*
//! NOT_EXPR:= CLAUSE ( 'NOT' CLAUSE )*
//! CLAUSE  := FIELD ('='|':') CLAUSE | '(' QUERY ')' | '"' PHRASE '"' | TERM ['*'] | '#' NAME
//! FIELD   := TS | TOPIC | TI | TITLE
//! REFINE  := ['EXCLUDING'] FACET ('='|':') ( '(' VALUE ( 'OR' VALUE )* ')' | VALUE )
//! FACET   := DT | WC | PY | TIMESPAN
//! ```
//!
//! Operators are case-insensitive. `NOT` is binary (`#1 NOT #2` is set
//! difference) and binds tighter than `AND`, which binds tighter than `OR`.
//! Unscoped terms search the topic fields.
//!
//! Matching is whole-token and case-insensitive. A trailing `*` turns the last
//! token into a prefix match; this also works inside phrases
//! (`"climate chang*"`). A phrase must match contiguously inside one field
//! value: the title, the abstract, or a single keyword.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, RecordSet, StoreError};
use crate::text::{facet_key, tokenize};

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unresolved set reference {0}")]
    UnresolvedSet(String),
    #[error("refinement needs at least one facet value")]
    EmptyFacetValues,
    #[error("script line {line}: {message}")]
    Script { line: usize, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    /// title, abstract, author keywords and keywords plus
    Topic,
    Title,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facet {
    DocType,
    SubjectCategory,
    PubYear,
    /// values are `YYYY-YYYY` ranges
    Timespan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineMode {
    Include,
    Exclude,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Refinement {
    pub facet: Facet,
    pub mode: RefineMode,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Query {
    Phrase(String),
    Term { text: String, wildcard: bool },
    Field { field: Field, child: Box<Query> },
    And(Vec<Query>),
    Or(Vec<Query>),
    Not(Box<Query>, Box<Query>),
    SetRef(String),
    Refine { child: Box<Query>, refinement: Refinement },
}

// ---------------------------------------------------------------- lexing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    Assign,
    Quoted(String),
    Word(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn parse_err(offset: usize, message: impl Into<String>) -> QueryError {
    QueryError::Parse { offset, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<Token>, QueryError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' | ')' | '=' | ':' => {
                chars.next();
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => Tok::Assign,
                };
                out.push(Token { tok, pos });
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                let mut closed = false;
                for (_, c) in chars.by_ref() {
                    if c == '"' {
                        closed = true;
                        break;
                    }
                    s.push(c);
                }
                if !closed {
                    return Err(parse_err(pos, "unbalanced quote"));
                }
                out.push(Token { tok: Tok::Quoted(s), pos });
            }
            _ => {
                let mut s = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '=' | ':' | '"') {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                out.push(Token { tok: Tok::Word(s), pos });
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- parsing

struct Parser {
    tokens: Vec<Token>,
    i: usize,
    end: usize,
}

fn keyword(tok: Option<&Tok>, kw: &str) -> bool {
    matches!(tok, Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
}

fn is_operator(w: &str) -> bool {
    ["AND", "OR", "NOT"].iter().any(|op| w.eq_ignore_ascii_case(op))
}

fn facet_named(w: &str) -> Option<Facet> {
    match w.to_ascii_uppercase().as_str() {
        "DT" => Some(Facet::DocType),
        "WC" | "SC" => Some(Facet::SubjectCategory),
        "PY" => Some(Facet::PubYear),
        "TIMESPAN" => Some(Facet::Timespan),
        _ => None,
    }
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.peek_at(0)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.tokens.get(self.i + k).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.i).map_or(self.end, |t| t.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.i).cloned();
        self.i += 1;
        t
    }

    fn expr(&mut self) -> Result<Query, QueryError> {
        let mut q = self.or_expr()?;
        while keyword(self.peek(), "REFINED") {
            self.bump();
            if !keyword(self.peek(), "BY") {
                return Err(parse_err(self.pos(), "expected BY after REFINED"));
            }
            self.bump();
            loop {
                let refinement = self.refinement()?;
                q = Query::Refine { child: Box::new(q), refinement };
                let continues = keyword(self.peek(), "AND")
                    && match self.peek_at(1) {
                        Some(Tok::Word(w)) => w.eq_ignore_ascii_case("EXCLUDING") || facet_named(w).is_some(),
                        _ => false,
                    }
                    && (keyword(self.peek_at(1), "EXCLUDING") || self.peek_at(2) == Some(&Tok::Assign));
                if !continues {
                    break;
                }
                self.bump();
            }
        }
        Ok(q)
    }

    fn or_expr(&mut self) -> Result<Query, QueryError> {
        let mut children = vec![self.and_expr()?];
        while keyword(self.peek(), "OR") {
            self.bump();
            children.push(self.and_expr()?);
        }
        Ok(if children.len() == 1 { children.pop().unwrap() } else { Query::Or(children) })
    }

    fn and_expr(&mut self) -> Result<Query, QueryError> {
        let mut children = vec![self.not_expr()?];
        while keyword(self.peek(), "AND") {
            self.bump();
            children.push(self.not_expr()?);
        }
        Ok(if children.len() == 1 { children.pop().unwrap() } else { Query::And(children) })
    }

    fn not_expr(&mut self) -> Result<Query, QueryError> {
        let mut left = self.clause()?;
        while keyword(self.peek(), "NOT") {
            self.bump();
            let right = self.clause()?;
            left = Query::Not(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn clause(&mut self) -> Result<Query, QueryError> {
        let pos = self.pos();
        match self.peek().cloned() {
            None => Err(parse_err(pos, "expected a clause")),
            Some(Tok::RParen) => Err(parse_err(pos, "empty clause")),
            Some(Tok::Assign) => Err(parse_err(pos, "unexpected '=' or ':'")),
            Some(Tok::LParen) => {
                self.bump();
                if self.peek() == Some(&Tok::RParen) {
                    return Err(parse_err(self.pos(), "empty clause"));
                }
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.bump();
                        Ok(inner)
                    }
                    None => Err(parse_err(self.end, "unbalanced '(': missing ')'")),
                    Some(_) => Err(parse_err(self.pos(), "expected operator or ')'")),
                }
            }
            Some(Tok::Quoted(text)) => {
                self.bump();
                phrase(&text, pos)
            }
            Some(Tok::Word(w)) => {
                if self.peek_at(1) == Some(&Tok::Assign) {
                    let field = match w.to_ascii_uppercase().as_str() {
                        "TS" | "TOPIC" => Field::Topic,
                        "TI" | "TITLE" => Field::Title,
                        _ => return Err(parse_err(pos, format!("unknown field {w:?}"))),
                    };
                    self.bump();
                    self.bump();
                    let child = self.clause()?;
                    return Ok(Query::Field { field, child: Box::new(child) });
                }
                if is_operator(&w) {
                    return Err(parse_err(pos, format!("expected a clause, found operator {w}")));
                }
                self.bump();
                if let Some(name) = w.strip_prefix('#') {
                    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-') {
                        return Err(parse_err(pos, format!("invalid set reference {w:?}")));
                    }
                    return Ok(Query::SetRef(w));
                }
                term(&w, pos)
            }
        }
    }

    fn refinement(&mut self) -> Result<Refinement, QueryError> {
        let mut mode = RefineMode::Include;
        if keyword(self.peek(), "EXCLUDING") {
            self.bump();
            mode = RefineMode::Exclude;
        }
        let pos = self.pos();
        let facet = match self.bump().map(|t| t.tok) {
            Some(Tok::Word(w)) => facet_named(&w).ok_or_else(|| parse_err(pos, format!("unknown facet {w:?}")))?,
            _ => return Err(parse_err(pos, "expected a facet (DT, WC, PY or TIMESPAN)")),
        };
        if self.peek() != Some(&Tok::Assign) {
            return Err(parse_err(self.pos(), "expected '=' after facet"));
        }
        self.bump();

        let mut values = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.bump();
            let mut current: Vec<String> = Vec::new();
            loop {
                let pos = self.pos();
                match self.bump().map(|t| t.tok) {
                    Some(Tok::RParen) | None if current.is_empty() => {
                        return Err(parse_err(pos, "empty facet value"));
                    }
                    None => return Err(parse_err(self.end, "unbalanced '(': missing ')'")),
                    Some(Tok::RParen) => {
                        values.push(current.join(" "));
                        break;
                    }
                    Some(Tok::Word(w)) if w.eq_ignore_ascii_case("OR") => {
                        if current.is_empty() {
                            return Err(parse_err(pos, "empty facet value"));
                        }
                        values.push(std::mem::take(&mut current).join(" "));
                    }
                    Some(Tok::Word(w)) | Some(Tok::Quoted(w)) => current.push(w),
                    Some(_) => return Err(parse_err(pos, "unexpected token in facet values")),
                }
            }
        } else {
            let pos = self.pos();
            match self.bump().map(|t| t.tok) {
                Some(Tok::Word(w)) | Some(Tok::Quoted(w)) => values.push(w),
                _ => return Err(parse_err(pos, "expected a facet value")),
            }
        }
        Ok(Refinement { facet, mode, values })
    }
}

fn check_wildcard(word: &str, pos: usize) -> Result<(), QueryError> {
    match word.find('*') {
        Some(i) if i + 1 != word.len() => Err(parse_err(pos + i, "wildcard '*' must end the term")),
        _ => Ok(()),
    }
}

fn term(word: &str, pos: usize) -> Result<Query, QueryError> {
    check_wildcard(word, pos)?;
    let text = word.strip_suffix('*').unwrap_or(word);
    if tokenize(text).is_empty() {
        return Err(parse_err(pos, "empty term"));
    }
    Ok(Query::Term { text: text.to_string(), wildcard: word.ends_with('*') })
}

fn phrase(text: &str, pos: usize) -> Result<Query, QueryError> {
    let mut offset = pos + 1;
    for part in text.split(' ') {
        check_wildcard(part, offset)?;
        offset += part.len() + 1;
    }
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if tokenize(&collapsed).is_empty() {
        return Err(parse_err(pos, "empty phrase"));
    }
    Ok(Query::Phrase(collapsed))
}

/// Parses one query expression.
pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, i: 0, end: text.len() };
    let q = p.expr()?;
    match p.peek() {
        None => Ok(q),
        Some(Tok::RParen) => Err(parse_err(p.pos(), "unbalanced ')'")),
        Some(_) => Err(parse_err(p.pos(), "expected an operator")),
    }
}

// ---------------------------------------------------------------- printing

fn write_child(f: &mut fmt::Formatter<'_>, q: &Query) -> fmt::Result {
    match q {
        Query::And(_) | Query::Or(_) | Query::Not(..) | Query::Refine { .. } => write!(f, "({q})"),
        _ => write!(f, "{q}"),
    }
}

fn write_value(f: &mut fmt::Formatter<'_>, v: &str) -> fmt::Result {
    let plain = !v.is_empty()
        && !v.chars().any(|c| matches!(c, '(' | ')' | '=' | ':' | '"'))
        && !v.split_whitespace().any(is_operator);
    if plain {
        f.write_str(v)
    } else {
        write!(f, "\"{v}\"")
    }
}

impl fmt::Display for Refinement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mode == RefineMode::Exclude {
            f.write_str("EXCLUDING ")?;
        }
        f.write_str(match self.facet {
            Facet::DocType => "DT=(",
            Facet::SubjectCategory => "WC=(",
            Facet::PubYear => "PY=(",
            Facet::Timespan => "TIMESPAN=(",
        })?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(" OR ")?;
            }
            write_value(f, v)?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Phrase(text) => write!(f, "\"{text}\""),
            Query::Term { text, wildcard } => write!(f, "{text}{}", if *wildcard { "*" } else { "" }),
            Query::Field { field, child } => {
                let tag = match field {
                    Field::Topic => "TS",
                    Field::Title => "TI",
                };
                write!(f, "{tag}=({child})")
            }
            Query::And(children) | Query::Or(children) => {
                let op = if matches!(self, Query::And(_)) { " AND " } else { " OR " };
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write_child(f, c)?;
                }
                Ok(())
            }
            Query::Not(left, right) => {
                write_child(f, left)?;
                f.write_str(" NOT ")?;
                write_child(f, right)
            }
            Query::SetRef(name) => f.write_str(name),
            Query::Refine { child, refinement } => {
                write_child(f, child)?;
                write!(f, " REFINED BY {refinement}")
            }
        }
    }
}

// ---------------------------------------------------------------- evaluation

pub type SetTable = BTreeMap<String, RecordSet>;

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub set: RecordSet,
    pub warnings: Vec<String>,
}

struct Pattern {
    token: String,
    prefix: bool,
}

fn compile(text: &str, wildcard_last: bool) -> Vec<Pattern> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let wild = word.ends_with('*');
        let toks = tokenize(word.trim_end_matches('*'));
        let n = toks.len();
        out.extend(toks.into_iter().enumerate().map(|(i, token)| Pattern { token, prefix: wild && i + 1 == n }));
    }
    if wildcard_last {
        if let Some(last) = out.last_mut() {
            last.prefix = true;
        }
    }
    out
}

fn token_matches(p: &Pattern, tok: &str) -> bool {
    if p.prefix {
        tok.starts_with(&p.token)
    } else {
        tok == p.token
    }
}

struct Evaluator<'a> {
    corpus: &'a Corpus,
    sets: &'a SetTable,
    warnings: Vec<String>,
}

impl Evaluator<'_> {
    fn postings(&self, field: Field, p: &Pattern) -> BTreeSet<u32> {
        let index = match field {
            Field::Topic => &self.corpus.index().topic,
            Field::Title => &self.corpus.index().title,
        };
        if p.prefix {
            index
                .range(p.token.clone()..)
                .take_while(|(k, _)| k.starts_with(&p.token))
                .flat_map(|(_, v)| v.iter().copied())
                .collect()
        } else {
            index.get(&p.token).map(|v| v.iter().copied().collect()).unwrap_or_default()
        }
    }

    fn matches(&self, field: Field, patterns: &[Pattern]) -> BTreeSet<u32> {
        let Some(first) = patterns.first() else {
            return BTreeSet::new();
        };
        let mut candidates = self.postings(field, first);
        if patterns.len() == 1 {
            return candidates;
        }
        for p in &patterns[1..] {
            let next = self.postings(field, p);
            candidates.retain(|c| next.contains(c));
        }
        candidates.retain(|&pos| {
            let seg = self.corpus.segments(pos);
            let title = std::slice::from_ref(&seg.title);
            let segments: &[Vec<String>] = match field {
                Field::Topic => &seg.topic,
                Field::Title => title,
            };
            segments.iter().any(|toks| {
                toks.windows(patterns.len())
                    .any(|w| w.iter().zip(patterns).all(|(t, p)| token_matches(p, t)))
            })
        });
        candidates
    }

    fn eval(&mut self, q: &Query, field: Field) -> Result<BTreeSet<u32>, QueryError> {
        Ok(match q {
            Query::Phrase(text) => self.matches(field, &compile(text, false)),
            Query::Term { text, wildcard } => self.matches(field, &compile(text, *wildcard)),
            Query::Field { field, child } => self.eval(child, *field)?,
            Query::And(children) => {
                let mut acc = self.eval(&children[0], field)?;
                for c in &children[1..] {
                    let next = self.eval(c, field)?;
                    acc.retain(|x| next.contains(x));
                }
                acc
            }
            Query::Or(children) => {
                let mut acc = BTreeSet::new();
                for c in children {
                    acc.extend(self.eval(c, field)?);
                }
                acc
            }
            Query::Not(left, right) => {
                let mut acc = self.eval(left, field)?;
                let drop = self.eval(right, field)?;
                acc.retain(|x| !drop.contains(x));
                acc
            }
            Query::SetRef(name) => {
                let set = self.sets.get(name).ok_or_else(|| QueryError::UnresolvedSet(name.clone()))?;
                self.corpus.positions_of(set)?
            }
            Query::Refine { child, refinement } => {
                let members = self.eval(child, field)?;
                refine_positions(self.corpus, &members, refinement, &mut self.warnings)?
            }
        })
    }
}

/// Evaluates `query` against `corpus`, resolving `#n` references in `sets`.
/// The returned set is unnamed and carries the printed query as provenance.
pub fn evaluate(query: &Query, corpus: &Corpus, sets: &SetTable) -> Result<Evaluation, QueryError> {
    let mut ev = Evaluator { corpus, sets, warnings: Vec::new() };
    let positions = ev.eval(query, Field::Topic)?;
    Ok(Evaluation {
        set: corpus.set_from_positions(positions, query.to_string()),
        warnings: ev.warnings,
    })
}

fn parse_span(v: &str) -> Option<(i32, i32)> {
    let (a, b) = v.split_once('-').unwrap_or((v, v));
    let (a, b) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
    (a <= b).then_some((a, b))
}

fn refine_positions(
    corpus: &Corpus,
    members: &BTreeSet<u32>,
    r: &Refinement,
    warnings: &mut Vec<String>,
) -> Result<BTreeSet<u32>, QueryError> {
    if r.values.is_empty() {
        return Err(QueryError::EmptyFacetValues);
    }
    let index = corpus.index();
    let mut keys = BTreeSet::new();
    let mut years = BTreeSet::new();
    let mut spans = Vec::new();
    for v in &r.values {
        let known = match r.facet {
            Facet::DocType | Facet::SubjectCategory => {
                let key = facet_key(v);
                let table = if r.facet == Facet::DocType { &index.doc_types } else { &index.subject_categories };
                let hit = table.contains_key(&key);
                if hit {
                    keys.insert(key);
                }
                hit
            }
            Facet::PubYear => match v.trim().parse::<i32>() {
                Ok(y) if index.years.contains_key(&y) => years.insert(y) || true,
                _ => false,
            },
            Facet::Timespan => match parse_span(v) {
                Some(span) => {
                    spans.push(span);
                    true
                }
                None => false,
            },
        };
        if !known {
            let facet = match r.facet {
                Facet::DocType => "document type",
                Facet::SubjectCategory => "subject category",
                Facet::PubYear => "publication year",
                Facet::Timespan => "timespan",
            };
            warnings.push(format!("unknown {facet} {v:?} ignored"));
        }
    }

    let records = corpus.records();
    let hit = |pos: u32| -> bool {
        let rec = &records[pos as usize];
        match r.facet {
            Facet::DocType => rec.doc_types.iter().any(|d| keys.contains(&facet_key(d))),
            Facet::SubjectCategory => match r.mode {
                RefineMode::Include => rec.subject_categories.iter().any(|c| keys.contains(&facet_key(c))),
                // only records left with no remaining category are dropped
                RefineMode::Exclude => {
                    !rec.subject_categories.is_empty()
                        && rec.subject_categories.iter().all(|c| keys.contains(&facet_key(c)))
                }
            },
            Facet::PubYear => years.contains(&rec.pub_year),
            Facet::Timespan => spans.iter().any(|&(a, b)| (a..=b).contains(&rec.pub_year)),
        }
    };
    Ok(members
        .iter()
        .copied()
        .filter(|&p| match r.mode {
            RefineMode::Include => hit(p),
            RefineMode::Exclude => !hit(p),
        })
        .collect())
}

/// Applies one facet refinement to an existing set.
pub fn refine(set: &RecordSet, corpus: &Corpus, refinement: &Refinement) -> Result<(RecordSet, Vec<String>), QueryError> {
    let members = corpus.positions_of(set)?;
    let mut warnings = Vec::new();
    let kept = refine_positions(corpus, &members, refinement, &mut warnings)?;
    let child = if set.name.is_empty() {
        parse_query(&set.provenance).unwrap_or_else(|_| Query::SetRef(set.provenance.clone()))
    } else {
        Query::SetRef(set.name.clone())
    };
    let provenance = Query::Refine { child: Box::new(child), refinement: refinement.clone() }.to_string();
    Ok((corpus.set_from_positions(kept, provenance), warnings))
}

/// Re-evaluates a set's provenance and reports whether it reproduces the members.
pub fn replay(set: &RecordSet, corpus: &Corpus, sets: &SetTable) -> Result<bool, QueryError> {
    let q = parse_query(&set.provenance)?;
    Ok(evaluate(&q, corpus, sets)?.set.member_ids == set.member_ids)
}

// ---------------------------------------------------------------- scripts

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptStatement {
    pub name: String,
    pub query: Query,
    /// 1-based line number
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetOutcome {
    pub name: String,
    pub count: usize,
    pub warnings: Vec<String>,
}

/// Parses a query script: one `#N := <query>` per line. Blank lines and lines
/// starting with `--` are skipped.
pub fn parse_script(text: &str) -> Result<Vec<ScriptStatement>, QueryError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("--") {
            continue;
        }
        let Some((name, body)) = trimmed.split_once(":=") else {
            return Err(QueryError::Script { line: line_no, message: "expected `#name := query`".into() });
        };
        let name = name.trim();
        let valid_name = name.len() > 1
            && name.starts_with('#')
            && name[1..].chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-');
        if !valid_name {
            return Err(QueryError::Script { line: line_no, message: format!("invalid set name {name:?}") });
        }
        let query = parse_query(body).map_err(|e| QueryError::Script { line: line_no, message: e.to_string() })?;
        out.push(ScriptStatement { name: name.to_string(), query, line: line_no });
    }
    Ok(out)
}

/// Runs statements top to bottom, storing each result in `sets` under its name.
pub fn run_script(
    statements: &[ScriptStatement],
    corpus: &Corpus,
    sets: &mut SetTable,
) -> Result<Vec<SetOutcome>, QueryError> {
    let mut outcomes = Vec::with_capacity(statements.len());
    for st in statements {
        let ev = evaluate(&st.query, corpus, sets).map_err(|e| QueryError::Script {
            line: st.line,
            message: e.to_string(),
        })?;
        let set = ev.set.named(st.name.clone());
        outcomes.push(SetOutcome { name: st.name.clone(), count: set.len(), warnings: ev.warnings });
        sets.insert(st.name.clone(), set);
    }
    Ok(outcomes)
}
