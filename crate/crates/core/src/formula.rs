//! Formulas of the single-coalition fragment: `<<C>> G pred` and `<<C>> F pred`.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Temporal {
    /// `G`: the predicate holds on every state of every outcome path.
    Always,
    /// `F`: every outcome path eventually hits the predicate.
    Eventually,
}

/// Boolean combination of `var=value` atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Predicate {
    Const(bool),
    Atom { var: String, value: String },
    Not(Box<Predicate>),
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
}

impl Predicate {
    pub fn atom(var: impl Into<String>, value: impl Into<String>) -> Self {
        Predicate::Atom { var: var.into(), value: value.into() }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(p: Predicate) -> Self {
        Predicate::Not(Box::new(p))
    }

    pub fn and(a: Predicate, b: Predicate) -> Self {
        Predicate::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Predicate, b: Predicate) -> Self {
        Predicate::Or(Box::new(a), Box::new(b))
    }

    /// Conjunction of all predicates; `true` when empty.
    pub fn conjunction(parts: impl IntoIterator<Item = Predicate>) -> Self {
        parts
            .into_iter()
            .reduce(Predicate::and)
            .unwrap_or(Predicate::Const(true))
    }

    /// Every `(var, value)` atom, left to right.
    pub fn atoms(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<(&'a str, &'a str)>) {
        match self {
            Predicate::Const(_) => {}
            Predicate::Atom { var, value } => out.push((var, value)),
            Predicate::Not(p) => p.collect_atoms(out),
            Predicate::And(a, b) | Predicate::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Evaluates against any variable lookup.
    pub fn eval_with<F>(&self, lookup: &F) -> bool
    where
        F: Fn(&str) -> Option<String>,
    {
        match self {
            Predicate::Const(b) => *b,
            Predicate::Atom { var, value } => lookup(var).as_deref() == Some(value.as_str()),
            Predicate::Not(p) => !p.eval_with(lookup),
            Predicate::And(a, b) => a.eval_with(lookup) && b.eval_with(lookup),
            Predicate::Or(a, b) => a.eval_with(lookup) || b.eval_with(lookup),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Const(b) => write!(f, "{b}"),
            Predicate::Atom { var, value } => write!(f, "{var}={value}"),
            Predicate::Not(p) => write!(f, "!({p})"),
            Predicate::And(a, b) => write!(f, "({a} & {b})"),
            Predicate::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Formula {
    pub coalition: Vec<String>,
    pub temporal: Temporal,
    pub predicate: Predicate,
}

impl Formula {
    pub fn new(coalition: Vec<String>, temporal: Temporal, predicate: Predicate) -> Self {
        Formula { coalition, temporal, predicate }
    }

    pub fn always<S: Into<String>>(coalition: impl IntoIterator<Item = S>, predicate: Predicate) -> Self {
        Formula::new(coalition.into_iter().map(Into::into).collect(), Temporal::Always, predicate)
    }

    pub fn eventually<S: Into<String>>(coalition: impl IntoIterator<Item = S>, predicate: Predicate) -> Self {
        Formula::new(coalition.into_iter().map(Into::into).collect(), Temporal::Eventually, predicate)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<<")?;
        for (i, agent) in self.coalition.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(agent)?;
        }
        let op = match self.temporal {
            Temporal::Always => "G",
            Temporal::Eventually => "F",
        };
        write!(f, ">> {op} {}", self.predicate)
    }
}
