//! A small SQL dialect for projection-selection and aggregate queries over
//! the chased star-table:
//!
//! ```text
//! query   := SELECT item ("," item)* FROM name [WHERE cond]
//!            [GROUP BY attr ("," attr)*] [HAVING term ("AND" term)*]
//! item    := attr | AGG "(" attr ")" | COUNT "(" "*" ")" | COUNT "(" DISTINCT attr ")"
//! cond    := cond OR cond | cond AND cond | NOT cond | "(" cond ")" | attr op (literal | attr)
//! term    := AGG "(" attr | "*" ")" op number
//! op      := "=" | "<>" | "!=" | "<" | "<=" | ">" | ">="
//! ```
//!
//! Keywords are case-insensitive; `AGG` is one of MIN, MAX, COUNT, SUM.
//! Text literals are single-quoted (`''` escapes a quote), numbers are
//! bare, and identifiers that clash with keywords can be double-quoted.
//! [`print_statement`] renders a canonical form that parses back to the
//! same query.

use std::fmt::Write as _;

use cqa_core::query::write_literal;
use cqa_core::{
    AggOp, Aggregate, AnalyticQuery, Atom, AttrId, CmpOp, Condition, HavingConjunct, Operand,
    Query, StandardQuery, Universe, Value,
};

use crate::error::{Error, Result};

/// Deepest nesting of parentheses and `NOT` accepted in a condition.
pub const MAX_DEPTH: usize = 64;
/// Most comparison atoms accepted in one condition.
pub const MAX_ATOMS: usize = 256;

const KEYWORDS: [&str; 10] = ["SELECT", "FROM", "WHERE", "GROUP", "BY", "HAVING", "AND", "OR", "NOT", "DISTINCT"];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    /// Bare identifier or keyword.
    Word(String),
    /// Double-quoted identifier.
    Quoted(String),
    /// Single-quoted text literal.
    Str(String),
    /// Numeric literal.
    Num(Value),
    Comma,
    LParen,
    RParen,
    Star,
    Op(CmpOp),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::Syntax { position, message: message.into() }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = text[i..].chars().next().expect("in bounds");
        let start = i;
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let simple = match c {
            ',' => Some(Tok::Comma),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '*' => Some(Tok::Star),
            '=' => Some(Tok::Op(CmpOp::Eq)),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, pos: start });
            i += 1;
            continue;
        }
        let next = bytes.get(i + 1).copied();
        match c {
            '<' => {
                let (op, len) = match next {
                    Some(b'=') => (CmpOp::Le, 2),
                    Some(b'>') => (CmpOp::Ne, 2),
                    _ => (CmpOp::Lt, 1),
                };
                out.push(Token { tok: Tok::Op(op), pos: start });
                i += len;
            }
            '>' => {
                let (op, len) = if next == Some(b'=') { (CmpOp::Ge, 2) } else { (CmpOp::Gt, 1) };
                out.push(Token { tok: Tok::Op(op), pos: start });
                i += len;
            }
            '!' if next == Some(b'=') => {
                out.push(Token { tok: Tok::Op(CmpOp::Ne), pos: start });
                i += 2;
            }
            '\'' | '"' => {
                let (s, end) = quoted(text, i, c)?;
                let tok = if c == '\'' { Tok::Str(s) } else { Tok::Quoted(s) };
                if matches!(&tok, Tok::Quoted(s) if s.is_empty()) {
                    return Err(syntax(start, "empty quoted identifier"));
                }
                out.push(Token { tok, pos: start });
                i = end;
            }
            c if c.is_ascii_digit() || c == '.' || (c == '-' && next.is_some_and(|b| b.is_ascii_digit() || b == b'.')) => {
                let (v, end) = number(text, i)?;
                out.push(Token { tok: Tok::Num(v), pos: start });
                i = end;
            }
            c if is_ident_start(c) => {
                let end = text[i..].find(|ch: char| !is_ident_char(ch)).map_or(text.len(), |n| i + n);
                out.push(Token { tok: Tok::Word(text[i..end].to_string()), pos: start });
                i = end;
            }
            other => return Err(syntax(start, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Token { tok: Tok::End, pos: text.len() });
    Ok(out)
}

/// Reads a quoted run starting at `start` (the opening quote); a doubled
/// quote stands for one quote character.
fn quoted(text: &str, start: usize, q: char) -> Result<(String, usize)> {
    let mut s = String::new();
    let mut chars = text[start + 1..].char_indices().peekable();
    while let Some((off, ch)) = chars.next() {
        if ch == q {
            if chars.peek().is_some_and(|(_, n)| *n == q) {
                chars.next();
                s.push(q);
                continue;
            }
            return Ok((s, start + 1 + off + 1));
        }
        s.push(ch);
    }
    Err(syntax(start, "unterminated quoted string"))
}

fn number(text: &str, start: usize) -> Result<(Value, usize)> {
    let bytes = text.as_bytes();
    let mut i = start;
    if bytes[i] == b'-' {
        i += 1;
    }
    let digits = |i: &mut usize| {
        let from = *i;
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
        *i - from
    };
    let mut float = false;
    let int_digits = digits(&mut i);
    if i < bytes.len() && bytes[i] == b'.' {
        float = true;
        i += 1;
        if int_digits + digits(&mut i) == 0 {
            return Err(syntax(start, "malformed number"));
        }
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        float = true;
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        if digits(&mut i) == 0 {
            return Err(syntax(start, "malformed exponent"));
        }
    }
    if i < bytes.len() && is_ident_char(bytes[i] as char) {
        return Err(syntax(i, "unexpected character after number"));
    }
    let lit = &text[start..i];
    let v = if float {
        let f: f64 = lit.parse().map_err(|_| syntax(start, "malformed number"))?;
        if !f.is_finite() {
            return Err(syntax(start, "number out of range"));
        }
        Value::Float(f)
    } else {
        Value::Int(lit.parse().map_err(|_| syntax(start, "integer out of range"))?)
    };
    Ok((v, i))
}

/// A parsed query with source information for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedStatement {
    /// The query.
    pub query: Query,
    /// Name in the FROM clause (validated, otherwise ignored).
    pub table: String,
    /// Byte offset of each select-list item.
    pub item_positions: Vec<usize>,
}

enum Item {
    Attr(AttrId, usize),
    Agg(Aggregate, usize),
}

struct Parser<'a> {
    toks: Vec<Token>,
    at: usize,
    u: &'a Universe,
    depth: usize,
    atoms: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.at + n).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.is_kw(kw);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(syntax(self.peek().pos, format!("expected {kw}")))
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<usize> {
        if self.peek().tok == tok {
            Ok(self.bump().pos)
        } else {
            Err(syntax(self.peek().pos, format!("expected {what}")))
        }
    }

    /// An identifier (bare non-keyword or quoted) and its position.
    fn name(&mut self, what: &str) -> Result<(String, usize)> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Word(w) if !is_keyword(&w) => {
                self.bump();
                Ok((w, t.pos))
            }
            Tok::Quoted(w) => {
                self.bump();
                Ok((w, t.pos))
            }
            _ => Err(syntax(t.pos, format!("expected {what}"))),
        }
    }

    fn attr(&mut self) -> Result<(AttrId, usize)> {
        let (name, position) = self.name("an attribute name")?;
        let a = self.u.id(&name).ok_or(Error::UnknownAttribute { name, position })?;
        Ok((a, position))
    }

    fn at_aggregate(&self) -> bool {
        matches!(&self.peek().tok, Tok::Word(w) if !is_keyword(w)) && *self.peek_at(1) == Tok::LParen
    }

    fn aggregate(&mut self) -> Result<(Aggregate, usize)> {
        let (name, pos) = self.name("an aggregate")?;
        let op = AggOp::from_name(&name).ok_or(Error::UnsupportedAggregate { name, position: pos })?;
        self.expect(Tok::LParen, "`(`")?;
        let agg = if self.peek().tok == Tok::Star {
            let star = self.bump().pos;
            if op != AggOp::Count {
                return Err(syntax(star, "`*` is only allowed in COUNT(*)"));
            }
            Aggregate::count_star()
        } else if self.is_kw("DISTINCT") {
            let kw = self.bump().pos;
            if op != AggOp::Count {
                return Err(syntax(kw, "DISTINCT is only allowed in COUNT"));
            }
            Aggregate::count_distinct(self.attr()?.0)
        } else {
            Aggregate::new(op, self.attr()?.0)
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok((agg, pos))
    }

    fn item(&mut self) -> Result<Item> {
        if self.at_aggregate() {
            let (agg, pos) = self.aggregate()?;
            Ok(Item::Agg(agg, pos))
        } else {
            let (a, pos) = self.attr()?;
            Ok(Item::Attr(a, pos))
        }
    }

    fn op(&mut self) -> Result<CmpOp> {
        match self.peek().tok {
            Tok::Op(op) => {
                self.bump();
                Ok(op)
            }
            _ => Err(syntax(self.peek().pos, "expected a comparison operator")),
        }
    }

    fn or(&mut self) -> Result<Condition> {
        let mut c = self.and()?;
        while self.eat_kw("OR") {
            c = c.or(self.and()?);
        }
        Ok(c)
    }

    fn and(&mut self) -> Result<Condition> {
        let mut c = self.not()?;
        while self.eat_kw("AND") {
            c = c.and(self.not()?);
        }
        Ok(c)
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        if self.depth >= MAX_DEPTH {
            return Err(syntax(self.peek().pos, format!("condition nests deeper than {MAX_DEPTH} levels")));
        }
        self.depth += 1;
        let out = f(self);
        self.depth -= 1;
        out
    }

    fn not(&mut self) -> Result<Condition> {
        if self.eat_kw("NOT") {
            return self.nested(|p| Ok(p.not()?.negate()));
        }
        if self.peek().tok == Tok::LParen {
            self.bump();
            let c = self.nested(Self::or)?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(c);
        }
        self.atoms += 1;
        if self.atoms > MAX_ATOMS {
            return Err(syntax(self.peek().pos, format!("condition has more than {MAX_ATOMS} comparisons")));
        }
        let (left, _) = self.attr()?;
        let op = self.op()?;
        let t = self.peek().clone();
        let right = match t.tok {
            Tok::Str(s) => {
                self.bump();
                Operand::Const(Value::Text(s))
            }
            Tok::Num(v) => {
                self.bump();
                Operand::Const(v)
            }
            Tok::Word(_) | Tok::Quoted(_) => Operand::Attr(self.attr()?.0),
            _ => return Err(syntax(t.pos, "expected a literal or an attribute")),
        };
        Ok(Condition::Atom(Atom { left, op, right }))
    }

    fn having(&mut self) -> Result<Vec<HavingConjunct>> {
        let mut out: Vec<HavingConjunct> = Vec::new();
        loop {
            if !self.at_aggregate() {
                if self.is_kw("NOT") || self.peek().tok == Tok::LParen {
                    return Err(cqa_core::Error::UnsupportedHaving(String::from(
                        "HAVING accepts only a conjunction of aggregate comparisons",
                    ))
                    .into());
                }
                return Err(syntax(self.peek().pos, "expected an aggregate term"));
            }
            let (agg, _) = self.aggregate()?;
            let op = self.op()?;
            let t = self.peek().clone();
            let Tok::Num(v) = t.tok else {
                return Err(syntax(t.pos, "expected a number"));
            };
            self.bump();
            match out.iter_mut().find(|h| h.aggregate == agg) {
                Some(h) => h.atoms.push((op, v)),
                None => out.push(HavingConjunct { aggregate: agg, atoms: vec![(op, v)] }),
            }
            if self.is_kw("OR") {
                return Err(cqa_core::Error::UnsupportedHaving(String::from("disjunction in HAVING")).into());
            }
            if !self.eat_kw("AND") {
                return Ok(out);
            }
        }
    }

    fn statement(&mut self) -> Result<ParsedStatement> {
        self.expect_kw("SELECT")?;
        let mut items = vec![self.item()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            items.push(self.item()?);
        }
        self.expect_kw("FROM")?;
        let (table, _) = self.name("a table name")?;
        let condition = if self.eat_kw("WHERE") { Some(self.or()?) } else { None };
        let group_pos = self.peek().pos;
        let mut group_by = Vec::new();
        let grouped = self.eat_kw("GROUP");
        if grouped {
            self.expect_kw("BY")?;
            group_by.push(self.attr()?.0);
            while self.peek().tok == Tok::Comma {
                self.bump();
                group_by.push(self.attr()?.0);
            }
        }
        let having_pos = self.peek().pos;
        let having = if self.eat_kw("HAVING") { Some(self.having()?) } else { None };
        if self.peek().tok != Tok::End {
            return Err(syntax(self.peek().pos, "unexpected input after the query"));
        }

        let item_positions = items.iter().map(|i| match i { Item::Attr(_, p) | Item::Agg(_, p) => *p }).collect();
        let aggs: Vec<(Aggregate, usize)> =
            items.iter().filter_map(|i| if let Item::Agg(a, p) = i { Some((a.clone(), *p)) } else { None }).collect();
        let attrs: Vec<(AttrId, usize)> =
            items.iter().filter_map(|i| if let Item::Attr(a, p) = i { Some((*a, *p)) } else { None }).collect();
        let query = match aggs.as_slice() {
            [] => {
                if grouped {
                    return Err(syntax(group_pos, "GROUP BY needs an aggregate in the select list"));
                }
                if having.is_some() {
                    return Err(syntax(having_pos, "HAVING needs GROUP BY"));
                }
                let sq = StandardQuery::new(attrs.iter().map(|(a, _)| *a).collect(), condition);
                sq.check(self.u)?;
                Query::Standard(sq)
            }
            [(agg, _)] => {
                if let Some((_, pos)) = attrs.iter().find(|(a, _)| !group_by.contains(a)) {
                    return Err(syntax(*pos, "attribute must appear in GROUP BY"));
                }
                if having.is_some() && !grouped {
                    return Err(syntax(having_pos, "HAVING needs GROUP BY"));
                }
                let aq = AnalyticQuery { group_by, aggregate: agg.clone(), condition, having: having.unwrap_or_default() };
                aq.check(self.u)?;
                Query::Analytic(aq)
            }
            [_, (_, pos), ..] => return Err(syntax(*pos, "only one aggregate is allowed in the select list")),
        };
        Ok(ParsedStatement { query, table, item_positions })
    }
}

fn write_literal_string(v: &Value) -> String {
    let mut s = String::new();
    write_literal(&mut s, v).expect("writing to a string");
    s
}

fn is_keyword(w: &str) -> bool {
    KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(w))
}

/// Parses `text` against the attribute names of `u`.
pub fn parse_query(text: &str, u: &Universe) -> Result<ParsedStatement> {
    let toks = lex(text)?;
    Parser { toks, at: 0, u, depth: 0, atoms: 0 }.statement()
}

/// Writes an identifier, double-quoting it when it is not a plain
/// non-keyword identifier.
fn write_name(out: &mut String, name: &str) {
    let plain = name.chars().next().is_some_and(is_ident_start) && name.chars().all(is_ident_char) && !is_keyword(name);
    if plain {
        out.push_str(name);
    } else {
        out.push('"');
        out.push_str(&name.replace('"', "\"\""));
        out.push('"');
    }
}

fn write_aggregate(out: &mut String, agg: &Aggregate, u: &Universe) {
    out.push_str(agg.op.name());
    out.push('(');
    match agg.measure {
        None => out.push('*'),
        Some(m) => {
            if agg.distinct {
                out.push_str("DISTINCT ");
            }
            write_name(out, u.name(m));
        }
    }
    out.push(')');
}

fn prec(c: &Condition) -> u8 {
    match c {
        Condition::Or(..) => 1,
        Condition::And(..) => 2,
        Condition::Not(_) => 3,
        Condition::Atom(_) => 4,
    }
}

fn write_condition(out: &mut String, c: &Condition, u: &Universe, min_prec: u8) {
    let paren = prec(c) < min_prec;
    if paren {
        out.push('(');
    }
    match c {
        Condition::Atom(a) => {
            write_name(out, u.name(a.left));
            let _ = write!(out, " {} ", a.op.symbol());
            match &a.right {
                Operand::Attr(b) => write_name(out, u.name(*b)),
                Operand::Const(v) => out.push_str(&write_literal_string(v)),
            }
        }
        Condition::Not(inner) => {
            out.push_str("NOT ");
            write_condition(out, inner, u, 3);
        }
        Condition::And(l, r) => {
            write_condition(out, l, u, 2);
            out.push_str(" AND ");
            write_condition(out, r, u, 3);
        }
        Condition::Or(l, r) => {
            write_condition(out, l, u, 1);
            out.push_str(" OR ");
            write_condition(out, r, u, 2);
        }
    }
    if paren {
        out.push(')');
    }
}

/// Canonical text of a query; parsing it back yields the same query.
pub fn print_statement(q: &Query, u: &Universe, table: &str) -> String {
    let mut out = String::from("SELECT ");
    let list = |out: &mut String, attrs: &[AttrId]| {
        for (i, a) in attrs.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            write_name(out, u.name(*a));
        }
    };
    let tail = |out: &mut String, condition: &Option<Condition>| {
        out.push_str(" FROM ");
        write_name(out, table);
        if let Some(c) = condition {
            out.push_str(" WHERE ");
            write_condition(out, c, u, 0);
        }
    };
    match q {
        Query::Standard(sq) => {
            list(&mut out, &sq.projection);
            tail(&mut out, &sq.condition);
        }
        Query::Analytic(aq) => {
            list(&mut out, &aq.group_by);
            if !aq.group_by.is_empty() {
                out.push_str(", ");
            }
            write_aggregate(&mut out, &aq.aggregate, u);
            tail(&mut out, &aq.condition);
            if !aq.group_by.is_empty() {
                out.push_str(" GROUP BY ");
                list(&mut out, &aq.group_by);
            }
            let mut first = true;
            for h in &aq.having {
                for (op, v) in &h.atoms {
                    out.push_str(if first { " HAVING " } else { " AND " });
                    first = false;
                    write_aggregate(&mut out, &h.aggregate, u);
                    let _ = write!(out, " {} {}", op.symbol(), write_literal_string(v));
                }
            }
        }
    }
    out
}
