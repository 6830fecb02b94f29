//! Text form of models.
//!
//! ```text
//! model A4
//! final A4
//! threshold δ4 = 30s
//! rule usage: when U:⊤ is P1, R:⊥ is P1
//!     if t(U)+δ4 < t(R)
//!     then A4:⊤ at t(R)
//! dwell near3: NearTable3 for ε3 after F then H:⊤
//! ```
//!
//! Patterns bind by exact name (`is`) or tag (`in`). Constraints compare
//! `t(var)[±offset]` against `t(var)` with `<` or `>`. Consequent times are
//! `t(var)`, `max(a, b, ...)`, `min(a, b, ...)` or `now`. Offsets are
//! durations (`ms`, `s`, `min`) or declared thresholds. `#` starts a comment.

use std::fmt;

use super::model::{
    Consequent, DwellRule, Model, ModelError, NameBinding, Offset, Pattern, Relation, Rule,
    TemporalConstraint, Thresholds, TimeExpr,
};
use crate::fluent::state_symbol;
use crate::time::format_duration;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(i64),
    State(bool),
    Colon,
    Comma,
    LParen,
    RParen,
    Plus,
    Minus,
    Lt,
    Gt,
    Eq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(n) => write!(f, "duration {n}ms"),
            Tok::State(s) => write!(f, "`{}`", state_symbol(*s)),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Gt => f.write_str("`>`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let single = match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            ':' => Some(Tok::Colon),
            ',' => Some(Tok::Comma),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '<' => Some(Tok::Lt),
            '>' => Some(Tok::Gt),
            '=' => Some(Tok::Eq),
            '⊤' => Some(Tok::State(true)),
            '⊥' => Some(Tok::State(false)),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, line: l0, col: c0 });
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let ms = crate::time::parse_duration(&word).map_err(|e| ParseError {
                line: l0,
                col: c0,
                message: e.to_string(),
            })?;
            out.push(Spanned { tok: Tok::Number(ms), line: l0, col: c0 });
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            out.push(Spanned { tok: Tok::Ident(word), line: l0, col: c0 });
        } else {
            return Err(ParseError {
                line: l0,
                col: c0,
                message: format!("unexpected character `{c}`"),
            });
        }
        col += i - start;
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

const KEYWORDS: &[&str] = &[
    "model", "final", "threshold", "rule", "dwell", "when", "is", "in", "if", "then", "at",
    "for", "after", "max", "min", "now",
];

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    fn err_at(&self, (line, col): (usize, usize), message: impl Into<String>) -> ParseError {
        ParseError { line, col, message: message.into() }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.err_at(self.here(), format!("expected {expected}, found {}", self.peek()))
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn symbol(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn state(&mut self) -> Result<bool, ParseError> {
        match self.peek().clone() {
            Tok::State(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Ident(w) => match crate::fluent::parse_state(&w) {
                Some(s) => {
                    self.bump();
                    Ok(s)
                }
                None => Err(self.unexpected("`⊤` or `⊥`")),
            },
            _ => Err(self.unexpected("`⊤` or `⊥`")),
        }
    }

    fn offset(&mut self, thresholds: &Thresholds, negated: bool) -> Result<Offset, ParseError> {
        let at = self.here();
        match self.peek().clone() {
            Tok::Number(ms) => {
                self.bump();
                Ok(Offset::Fixed(if negated { -ms } else { ms }))
            }
            Tok::Ident(_) => {
                let name = self.symbol("duration or threshold")?;
                if !thresholds.contains_key(&name) {
                    return Err(self.err_at(at, format!("unknown threshold `{name}`")));
                }
                Ok(Offset::Threshold { name, negated })
            }
            _ => Err(self.unexpected("duration or threshold")),
        }
    }

    /// `t(` var `)` with the variable checked against the rule's patterns.
    fn time_of(&mut self, vars: &[String]) -> Result<String, ParseError> {
        if !matches!(self.peek(), Tok::Ident(s) if s == "t") {
            return Err(self.unexpected("`t(`"));
        }
        self.bump();
        self.expect(Tok::LParen)?;
        let var = self.bound_var(vars)?;
        self.expect(Tok::RParen)?;
        Ok(var)
    }

    fn bound_var(&mut self, vars: &[String]) -> Result<String, ParseError> {
        let at = self.here();
        let var = self.symbol("variable")?;
        if !vars.contains(&var) {
            return Err(self.err_at(at, format!("unbound variable `{var}`")));
        }
        Ok(var)
    }

    fn rule(&mut self, thresholds: &Thresholds) -> Result<Rule, ParseError> {
        let name = self.symbol("rule name")?;
        self.expect(Tok::Colon)?;
        self.keyword("when")?;
        let mut patterns = Vec::new();
        let mut vars: Vec<String> = Vec::new();
        loop {
            let at = self.here();
            let var = self.symbol("variable")?;
            if vars.contains(&var) {
                return Err(self.err_at(at, format!("duplicate variable `{var}`")));
            }
            self.expect(Tok::Colon)?;
            let state = self.state()?;
            let binding = if self.at_keyword("is") {
                self.bump();
                NameBinding::Name(self.symbol("statement name")?)
            } else if self.at_keyword("in") {
                self.bump();
                NameBinding::Tag(self.symbol("tag")?)
            } else {
                return Err(self.unexpected("`is` or `in`"));
            };
            vars.push(var.clone());
            patterns.push(Pattern { var, state, binding });
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let mut constraints = Vec::new();
        if self.at_keyword("if") {
            self.bump();
            loop {
                let lhs = self.time_of(&vars)?;
                let offset = match self.peek() {
                    Tok::Plus => {
                        self.bump();
                        self.offset(thresholds, false)?
                    }
                    Tok::Minus => {
                        self.bump();
                        self.offset(thresholds, true)?
                    }
                    _ => Offset::Fixed(0),
                };
                let relation = match self.bump() {
                    Tok::Lt => Relation::Less,
                    Tok::Gt => Relation::Greater,
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected("`<` or `>`"));
                    }
                };
                let rhs = self.time_of(&vars)?;
                constraints.push(TemporalConstraint { lhs, offset, relation, rhs });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.keyword("then")?;
        let out = self.symbol("consequent name")?;
        self.expect(Tok::Colon)?;
        let state = self.state()?;
        self.keyword("at")?;
        let time = if self.at_keyword("now") {
            self.bump();
            TimeExpr::Now
        } else if self.at_keyword("max") || self.at_keyword("min") {
            let is_max = self.at_keyword("max");
            self.bump();
            self.expect(Tok::LParen)?;
            let mut list = vec![self.bound_var(&vars)?];
            while self.eat(&Tok::Comma) {
                list.push(self.bound_var(&vars)?);
            }
            self.expect(Tok::RParen)?;
            if is_max {
                TimeExpr::Max(list)
            } else {
                TimeExpr::Min(list)
            }
        } else {
            TimeExpr::Of(self.time_of(&vars)?)
        };
        Ok(Rule {
            name,
            patterns,
            constraints,
            consequent: Consequent { name: out, state, time },
        })
    }

    fn dwell(&mut self, thresholds: &Thresholds) -> Result<DwellRule, ParseError> {
        let name = self.symbol("dwell name")?;
        self.expect(Tok::Colon)?;
        let source = self.symbol("statement name")?;
        self.keyword("for")?;
        let threshold = self.offset(thresholds, false)?;
        let after = if self.at_keyword("after") {
            self.bump();
            Some(self.symbol("statement name")?)
        } else {
            None
        };
        self.keyword("then")?;
        let output = self.symbol("output name")?;
        self.expect(Tok::Colon)?;
        let at = self.here();
        if !self.state()? {
            return Err(self.err_at(at, "dwell output must be ⊤"));
        }
        Ok(DwellRule { name, source, threshold, after, output })
    }
}

/// Parses a model. Errors carry the 1-based line and column.
pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let mut name = None;
    let mut final_name: Option<(String, (usize, usize))> = None;
    let mut thresholds = Thresholds::new();
    let mut rules = Vec::new();
    let mut dwells = Vec::new();
    let mut starts = Vec::new();
    loop {
        let at = p.here();
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Ident(kw) => {
                p.bump();
                match kw.as_str() {
                    "model" => {
                        if name.is_some() {
                            return Err(p.err_at(at, "duplicate `model`"));
                        }
                        name = Some(p.symbol("model name")?);
                    }
                    "final" => {
                        if final_name.is_some() {
                            return Err(p.err_at(at, "duplicate `final`"));
                        }
                        final_name = Some((p.symbol("statement name")?, at));
                    }
                    "threshold" => {
                        let tname = p.symbol("threshold name")?;
                        p.expect(Tok::Eq)?;
                        let ms = match p.bump() {
                            Tok::Number(ms) => ms,
                            _ => {
                                p.pos -= 1;
                                return Err(p.unexpected("duration"));
                            }
                        };
                        if thresholds.insert(tname.clone(), ms).is_some() {
                            return Err(p.err_at(at, format!("duplicate threshold `{tname}`")));
                        }
                    }
                    "rule" => {
                        starts.push(at);
                        rules.push(p.rule(&thresholds)?);
                    }
                    "dwell" => {
                        starts.push(at);
                        dwells.push(p.dwell(&thresholds)?);
                    }
                    _ => {
                        p.pos -= 1;
                        return Err(p.unexpected("`model`, `final`, `threshold`, `rule` or `dwell`"));
                    }
                }
            }
            _ => return Err(p.unexpected("a declaration")),
        }
    }
    let end = p.here();
    if rules.is_empty() && dwells.is_empty() {
        return Err(p.err_at(end, "no rules"));
    }
    let (final_name, final_at) = final_name.ok_or_else(|| p.err_at(end, "missing `final`"))?;
    let model = Model {
        name: name.unwrap_or_else(|| final_name.clone()),
        rules,
        dwells,
        final_name,
        thresholds,
    };
    model.validate().map_err(|e| {
        let step = match &e {
            ModelError::DuplicateRule(n) => Some(n),
            ModelError::Cycle(names) => names.first(),
            _ => None,
        };
        let at = match step {
            Some(n) => model
                .rules
                .iter()
                .map(|r| &r.name)
                .chain(model.dwells.iter().map(|d| &d.name))
                .position(|x| x == n)
                .and_then(|i| starts.get(i).copied())
                .unwrap_or(end),
            None if matches!(e, ModelError::FinalNotUnique { .. }) => final_at,
            None => end,
        };
        p.err_at(at, e.to_string())
    })?;
    Ok(model)
}

fn write_offset(f: &mut fmt::Formatter<'_>, offset: &Offset, leading_sign: bool) -> fmt::Result {
    match offset {
        Offset::Fixed(0) if leading_sign => Ok(()),
        Offset::Fixed(ms) if leading_sign && *ms < 0 => write!(f, "-{}", format_duration(-ms)),
        Offset::Fixed(ms) if leading_sign => write!(f, "+{}", format_duration(*ms)),
        Offset::Fixed(ms) => f.write_str(&format_duration(*ms)),
        Offset::Threshold { name, negated } => {
            if leading_sign {
                f.write_str(if *negated { "-" } else { "+" })?;
            }
            f.write_str(name)
        }
    }
}

pub(super) fn write_model(model: &Model, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    writeln!(f, "model {}", model.name)?;
    writeln!(f, "final {}", model.final_name)?;
    for (name, ms) in &model.thresholds {
        writeln!(f, "threshold {name} = {}", format_duration(*ms))?;
    }
    for rule in &model.rules {
        write!(f, "rule {}: when ", rule.name)?;
        for (i, p) in rule.patterns.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let (kw, target) = match &p.binding {
                NameBinding::Name(n) => ("is", n),
                NameBinding::Tag(t) => ("in", t),
            };
            write!(f, "{}:{} {kw} {target}", p.var, state_symbol(p.state))?;
        }
        for (i, c) in rule.constraints.iter().enumerate() {
            f.write_str(if i == 0 { " if " } else { ", " })?;
            write!(f, "t({})", c.lhs)?;
            write_offset(f, &c.offset, true)?;
            let rel = match c.relation {
                Relation::Less => "<",
                Relation::Greater => ">",
            };
            write!(f, " {rel} t({})", c.rhs)?;
        }
        let c = &rule.consequent;
        write!(f, " then {}:{} at ", c.name, state_symbol(c.state))?;
        match &c.time {
            TimeExpr::Of(v) => write!(f, "t({v})")?,
            TimeExpr::Max(vs) => write!(f, "max({})", vs.join(", "))?,
            TimeExpr::Min(vs) => write!(f, "min({})", vs.join(", "))?,
            TimeExpr::Now => f.write_str("now")?,
        }
        writeln!(f)?;
    }
    for d in &model.dwells {
        write!(f, "dwell {}: {} for ", d.name, d.source)?;
        write_offset(f, &d.threshold, false)?;
        if let Some(a) = &d.after {
            write!(f, " after {a}")?;
        }
        writeln!(f, " then {}:⊤", d.output)?;
    }
    Ok(())
}
