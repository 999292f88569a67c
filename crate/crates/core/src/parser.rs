//! Line-oriented parser for the module language and the formula language.
//!
//! ```text
//! MODULE <name>
//!   VAR <name> : { v1, v2, ... }
//!   INPUT <name>
//!   STATE <id> [ var=val, ... ]
//!   INIT <id>
//!   TRANS <src> -> <dst> [ guard ] [ : <action> ] ;
//! GROUP <name> { <module>, ... } [ GOAL "<formula>" ]
//! ```
//!
//! Guards are comma lists of `var=val`, `var!=val` or `var=*`. Everything
//! after `#` on a line is a comment.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::formula::{Formula, Predicate, Temporal};
use crate::spec::{Constraint, GroupDecl, Guard, InputVar, ModuleDecl, SpecDocument, StateDecl, TransitionDecl, VarDecl};
use crate::{Error, Result};

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_value_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '?' | '!' | '.' | '+' | '-')
}

/// Character cursor over one line, tracking 1-based columns.
struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col0: usize,
    _src: core::marker::PhantomData<&'a str>,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line: usize, col0: usize) -> Self {
        Cursor { chars: text.chars().collect(), pos: 0, line, col0, _src: core::marker::PhantomData }
    }

    fn err<T>(&self, expected: &str) -> Result<T> {
        Err(Error::Syntax { line: self.line, col: self.col0 + self.pos + 1, expected: expected.to_string() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        let n = token.chars().count();
        if self.chars.len() >= self.pos + n && token.chars().zip(&self.chars[self.pos..]).all(|(a, b)| a == *b) {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            self.err(&alloc::format!("`{token}`"))
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let start = self.pos;
        while self.pos < self.chars.len() && pred(self.chars[self.pos]) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        self.skip_ws();
        match self.chars.get(self.pos) {
            Some(&c) if is_ident_start(c) => Ok(self.take_while(is_ident_char)),
            _ => self.err(what),
        }
    }

    fn value(&mut self) -> Result<String> {
        self.skip_ws();
        let v = self.take_while(is_value_char);
        if v.is_empty() {
            self.err("a value")
        } else {
            Ok(v)
        }
    }

    fn expect_end(&mut self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            self.err("end of line")
        }
    }

    /// Comma-separated items up to `close`; allows an empty list.
    fn list<T>(&mut self, close: char, mut item: impl FnMut(&mut Self) -> Result<T>) -> Result<Vec<T>> {
        let mut out = Vec::new();
        if self.peek() == Some(close) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(c) if c == close => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return self.err(&alloc::format!("`,` or `{close}`")),
            }
        }
    }
}

/// Strips a trailing `#` comment, ignoring `#` inside double quotes.
fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

struct PendingModule {
    decl: ModuleDecl,
    assignments: Vec<(String, Vec<(String, String)>, usize)>,
}

impl PendingModule {
    fn finish(self) -> Result<ModuleDecl> {
        let mut decl = self.decl;
        for (id, assigns, _line) in self.assignments {
            let mut valuation = Vec::with_capacity(decl.state_vars.len());
            for var in &decl.state_vars {
                let mut hits = assigns.iter().filter(|(n, _)| *n == var.name);
                match (hits.next(), hits.next()) {
                    (Some((_, v)), None) => valuation.push(v.clone()),
                    _ => return Err(Error::IncompleteValuation { module: decl.name.clone(), state: id }),
                }
            }
            if let Some((unknown, _)) = assigns.iter().find(|(n, _)| !decl.state_vars.iter().any(|v| v.name == *n)) {
                return Err(Error::UnknownVariable(unknown.clone()));
            }
            decl.states.push(StateDecl { id, valuation });
        }
        Ok(decl)
    }
}

/// Parses and fully resolves a specification document.
pub fn parse_spec(text: &str) -> Result<SpecDocument> {
    let (modules, groups) = parse_parts(text)?;
    SpecDocument::new(modules, groups)
}

/// Parses modules and groups without cross-module resolution.
pub fn parse_parts(text: &str) -> Result<(Vec<ModuleDecl>, Vec<GroupDecl>)> {
    let mut modules = Vec::new();
    let mut groups = Vec::new();
    let mut current: Option<PendingModule> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);
        let mut cur = Cursor::new(line, line_no, 0);
        if cur.at_end() {
            continue;
        }
        let keyword = cur.ident("a keyword")?;
        match keyword.as_str() {
            "MODULE" => {
                let name = cur.ident("a module name")?;
                cur.expect_end()?;
                if let Some(m) = current.take() {
                    modules.push(m.finish()?);
                }
                current = Some(PendingModule { decl: ModuleDecl::new(name), assignments: Vec::new() });
            }
            "GROUP" => {
                if let Some(m) = current.take() {
                    modules.push(m.finish()?);
                }
                groups.push(parse_group(&mut cur)?);
            }
            "VAR" | "INPUT" | "STATE" | "INIT" | "TRANS" => {
                let Some(m) = current.as_mut() else {
                    return Err(Error::Syntax { line: line_no, col: 1, expected: "MODULE before module items".into() });
                };
                parse_module_item(&keyword, &mut cur, m, line_no)?;
            }
            _ => {
                return Err(Error::Syntax {
                    line: line_no,
                    col: 1,
                    expected: "MODULE, VAR, INPUT, STATE, INIT, TRANS or GROUP".into(),
                })
            }
        }
    }
    if let Some(m) = current.take() {
        modules.push(m.finish()?);
    }
    Ok((modules, groups))
}

fn parse_module_item(keyword: &str, cur: &mut Cursor<'_>, m: &mut PendingModule, line_no: usize) -> Result<()> {
    match keyword {
        "VAR" => {
            let name = cur.ident("a variable name")?;
            cur.expect(":")?;
            cur.expect("{")?;
            let domain = cur.list('}', |c| c.value())?;
            cur.expect_end()?;
            m.decl.state_vars.push(VarDecl::new(name, domain));
        }
        "INPUT" => {
            let name = cur.ident("a variable name")?;
            cur.expect_end()?;
            m.decl.inputs.push(InputVar::unresolved(name));
        }
        "STATE" => {
            let id = cur.ident("a state id")?;
            cur.expect("[")?;
            let assigns = cur.list(']', |c| {
                let var = c.ident("a variable name")?;
                c.expect("=")?;
                Ok((var, c.value()?))
            })?;
            cur.expect_end()?;
            m.assignments.push((id, assigns, line_no));
        }
        "INIT" => {
            let id = cur.ident("a state id")?;
            cur.expect_end()?;
            m.decl.initial = id;
        }
        "TRANS" => {
            let src = cur.ident("a source state")?;
            cur.expect("->")?;
            let dst = cur.ident("a target state")?;
            let guard = if cur.peek() == Some('[') {
                cur.pos += 1;
                Guard { constraints: cur.list(']', parse_constraint)? }
            } else {
                Guard::any()
            };
            let action = if cur.eat(":") { cur.ident("an action name")? } else { String::new() };
            cur.expect(";")?;
            cur.expect_end()?;
            m.decl.transitions.push(TransitionDecl { src, dst, guard, action });
        }
        _ => unreachable!(),
    }
    Ok(())
}

fn parse_constraint(cur: &mut Cursor<'_>) -> Result<(String, Constraint)> {
    let var = cur.ident("a variable name")?;
    if cur.eat("!=") {
        Ok((var, Constraint::Neq(cur.value()?)))
    } else {
        cur.expect("=")?;
        if cur.eat("*") {
            Ok((var, Constraint::Any))
        } else {
            Ok((var, Constraint::Eq(cur.value()?)))
        }
    }
}

fn parse_group(cur: &mut Cursor<'_>) -> Result<GroupDecl> {
    let name = cur.ident("a group name")?;
    cur.expect("{")?;
    let members = cur.list('}', |c| c.ident("a module name"))?;
    let goal = if cur.eat("GOAL") {
        cur.expect("\"")?;
        let start = cur.pos;
        let Some(len) = cur.chars[start..].iter().position(|&c| c == '"') else {
            return cur.err("closing `\"`");
        };
        let text: String = cur.chars[start..start + len].iter().collect();
        let formula = FormulaParser { cur: Cursor::new(&text, cur.line, cur.col0 + start) }.parse()?;
        cur.pos = start + len + 1;
        Some(formula)
    } else {
        None
    };
    cur.expect_end()?;
    Ok(GroupDecl { name, members, goal })
}

/// Parses `<<A,B>> G pred` / `<<A>> F pred`.
pub fn parse_formula(text: &str) -> Result<Formula> {
    FormulaParser { cur: Cursor::new(text, 1, 0) }.parse()
}

const TEMPORAL_KEYWORDS: [&str; 6] = ["G", "F", "X", "U", "W", "R"];

struct FormulaParser<'a> {
    cur: Cursor<'a>,
}

impl FormulaParser<'_> {
    fn parse(mut self) -> Result<Formula> {
        self.cur.expect("<<")?;
        let coalition = self.cur.list('>', |c| c.ident("an agent name"))?;
        if coalition.is_empty() {
            return self.cur.err("an agent name");
        }
        // `list` consumed the first `>` of `>>`.
        if self.cur.peek_at(0) != Some('>') {
            return self.cur.err("`>>`");
        }
        self.cur.pos += 1;
        if self.cur.peek() == Some('<') && self.cur.peek_at(1) == Some('<') {
            return Err(Error::NestedCoalition);
        }
        let op = match self.cur.peek() {
            Some(c) if is_ident_start(c) => self.cur.ident("G or F")?,
            _ => return self.cur.err("G or F"),
        };
        let temporal = match op.as_str() {
            "G" => Temporal::Always,
            "F" => Temporal::Eventually,
            other if TEMPORAL_KEYWORDS.contains(&other) => return Err(Error::UnsupportedTemporal(op)),
            _ => return self.cur.err("G or F"),
        };
        let predicate = self.or_expr()?;
        self.cur.expect_end()?;
        Ok(Formula { coalition, temporal, predicate })
    }

    fn check_infix_temporal(&mut self) -> Result<()> {
        if let Some(c) = self.cur.peek() {
            if is_ident_start(c) {
                let save = self.cur.pos;
                let word = self.cur.take_while(is_ident_char);
                self.cur.pos = save;
                if TEMPORAL_KEYWORDS.contains(&word.as_str()) {
                    return Err(Error::UnsupportedTemporal(word));
                }
            }
        }
        Ok(())
    }

    fn or_expr(&mut self) -> Result<Predicate> {
        let mut left = self.and_expr()?;
        loop {
            self.check_infix_temporal()?;
            if self.cur.peek() == Some('|') {
                self.cur.pos += 1;
                let right = self.and_expr()?;
                left = Predicate::Or(Box::new(left), Box::new(right));
            } else {
                return Ok(left);
            }
        }
    }

    fn and_expr(&mut self) -> Result<Predicate> {
        let mut left = self.unary()?;
        loop {
            self.check_infix_temporal()?;
            if self.cur.peek() == Some('&') {
                self.cur.pos += 1;
                let right = self.unary()?;
                left = Predicate::And(Box::new(left), Box::new(right));
            } else {
                return Ok(left);
            }
        }
    }

    fn unary(&mut self) -> Result<Predicate> {
        match self.cur.peek() {
            Some('!') if self.cur.peek_at(1) != Some('=') => {
                self.cur.pos += 1;
                Ok(Predicate::Not(Box::new(self.unary()?)))
            }
            Some('<') if self.cur.peek_at(1) == Some('<') => Err(Error::NestedCoalition),
            Some('(') => {
                self.cur.pos += 1;
                let inner = self.or_expr()?;
                self.cur.expect(")")?;
                Ok(inner)
            }
            Some(c) if is_ident_start(c) => {
                let word = self.cur.ident("a variable")?;
                let followed_by_eq = self.cur.peek() == Some('=');
                if !followed_by_eq {
                    if TEMPORAL_KEYWORDS.contains(&word.as_str()) {
                        return Err(Error::UnsupportedTemporal(word));
                    }
                    match word.as_str() {
                        "true" => return Ok(Predicate::Const(true)),
                        "false" => return Ok(Predicate::Const(false)),
                        _ => return self.cur.err("`=`"),
                    }
                }
                self.cur.pos += 1;
                let value = self.cur.value()?;
                Ok(Predicate::Atom { var: word, value })
            }
            _ => self.cur.err("a predicate"),
        }
    }
}
