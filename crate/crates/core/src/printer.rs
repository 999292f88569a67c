//! Pretty-printer emitting the surface syntax accepted by [`crate::parse_spec`].

use alloc::string::String;
use core::fmt::Write;

use crate::spec::{Constraint, Guard, ModuleDecl, SpecDocument};

pub fn print_guard(g: &Guard) -> String {
    let mut out = String::from("[");
    for (i, (var, c)) in g.constraints.iter().enumerate() {
        out.push_str(if i == 0 { " " } else { ", " });
        match c {
            Constraint::Any => write!(out, "{var}=*"),
            Constraint::Eq(v) => write!(out, "{var}={v}"),
            Constraint::Neq(v) => write!(out, "{var}!={v}"),
        }
        .unwrap();
    }
    out.push_str(" ]");
    out
}

pub fn print_module(m: &ModuleDecl) -> String {
    let mut out = String::new();
    writeln!(out, "MODULE {}", m.name).unwrap();
    if let Some(p) = &m.provenance {
        writeln!(
            out,
            "  # synthetic: assumption for {} built from {{{}}} at distance {}",
            p.target,
            p.sources.join(", "),
            p.distance
        )
        .unwrap();
    }
    for v in &m.state_vars {
        writeln!(out, "  VAR {} : {{ {} }}", v.name, v.domain.join(", ")).unwrap();
    }
    for i in &m.inputs {
        writeln!(out, "  INPUT {}", i.name).unwrap();
    }
    for s in &m.states {
        out.push_str("  STATE ");
        out.push_str(&s.id);
        out.push_str(" [");
        for (i, (var, value)) in m.state_vars.iter().zip(&s.valuation).enumerate() {
            out.push_str(if i == 0 { " " } else { ", " });
            write!(out, "{}={}", var.name, value).unwrap();
        }
        out.push_str(" ]\n");
    }
    writeln!(out, "  INIT {}", m.initial).unwrap();
    for t in &m.transitions {
        writeln!(out, "  TRANS {} -> {} {} : {} ;", t.src, t.dst, print_guard(&t.guard), t.action).unwrap();
    }
    out
}

pub fn print_spec(doc: &SpecDocument) -> String {
    let mut out = String::new();
    for m in doc.modules() {
        out.push_str(&print_module(m));
        out.push('\n');
    }
    for g in doc.groups() {
        write!(out, "GROUP {} {{ {} }}", g.name, g.members.join(", ")).unwrap();
        if let Some(goal) = &g.goal {
            write!(out, " GOAL \"{goal}\"").unwrap();
        }
        out.push('\n');
    }
    out
}
