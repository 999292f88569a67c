//! JSON and Graphviz exports of composed models and single modules.

use std::collections::BTreeMap;
use std::fmt::Write;

use agrmc_core::printer::print_guard;
use agrmc_core::{GlobalModel, ModuleDecl};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedState {
    pub id: usize,
    pub valuation: BTreeMap<String, String>,
    /// Local state of every module.
    pub local: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedTransition {
    pub src: usize,
    pub module: String,
    pub action: String,
    pub dst: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageInfo {
    pub page: usize,
    pub pages: usize,
    pub page_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedModel {
    pub states: Vec<ExportedState>,
    pub transitions: Vec<ExportedTransition>,
    pub initial: usize,
    pub total_states: usize,
    pub total_transitions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page: Option<PageInfo>,
}

fn state(m: &GlobalModel, s: usize) -> ExportedState {
    ExportedState {
        id: s,
        valuation: m.valuation(s).into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        local: (0..m.module_count()).map(|i| (m.module_name(i).to_string(), m.local_state(s, i).to_string())).collect(),
    }
}

fn export_range(m: &GlobalModel, range: std::ops::Range<usize>) -> ExportedModel {
    let mut transitions = Vec::new();
    for s in range.clone() {
        for e in m.successors(s) {
            transitions.push(ExportedTransition {
                src: s,
                module: m.module_name(e.module as usize).to_string(),
                action: m.action_name(e.module as usize, e.action).to_string(),
                dst: e.dst as usize,
            });
        }
    }
    ExportedModel {
        states: range.map(|s| state(m, s)).collect(),
        transitions,
        initial: m.initial(),
        total_states: m.num_states(),
        total_transitions: m.num_transitions(),
        page: None,
    }
}

pub fn export_model(m: &GlobalModel) -> ExportedModel {
    export_range(m, 0..m.num_states())
}

/// States `page * size ..` and the transitions leaving them. Pages past the
/// end are empty.
pub fn export_page(m: &GlobalModel, page: usize, size: usize) -> ExportedModel {
    let size = size.max(1);
    let start = page.saturating_mul(size).min(m.num_states());
    let end = start.saturating_add(size).min(m.num_states());
    let mut out = export_range(m, start..end);
    out.page = Some(PageInfo { page, pages: m.num_states().div_ceil(size), page_size: size });
    out
}

pub fn load_model_json(text: &str) -> serde_json::Result<ExportedModel> {
    serde_json::from_str(text)
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn model_dot(m: &GlobalModel) -> String {
    let mut out = String::from("digraph model {\n  node [shape=box];\n");
    for s in 0..m.num_states() {
        let label: Vec<String> = m.valuation(s).into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        let shape = if s == m.initial() { ", penwidth=2" } else { "" };
        writeln!(out, "  s{s} [label=\"{}\"{shape}];", escape(&label.join("\\n"))).unwrap();
    }
    for s in 0..m.num_states() {
        for e in m.successors(s) {
            let label = format!("{}.{}", m.module_name(e.module as usize), m.action_name(e.module as usize, e.action));
            writeln!(out, "  s{s} -> s{} [label=\"{}\"];", e.dst, escape(&label)).unwrap();
        }
    }
    out.push_str("}\n");
    out
}

pub fn module_dot(m: &ModuleDecl) -> String {
    let mut out = format!("digraph \"{}\" {{\n  node [shape=ellipse];\n", escape(&m.name));
    for s in &m.states {
        let label: Vec<String> = m.state_vars.iter().zip(&s.valuation).map(|(v, x)| format!("{}={x}", v.name)).collect();
        let extra = if s.id == m.initial { ", penwidth=2" } else { "" };
        writeln!(out, "  \"{}\" [label=\"{}\\n{}\"{extra}];", escape(&s.id), escape(&s.id), escape(&label.join(" "))).unwrap();
    }
    for t in &m.transitions {
        writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{} {}\"];",
            escape(&t.src),
            escape(&t.dst),
            escape(&t.action),
            escape(&print_guard(&t.guard))
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use agrmc_core::{compose, generate_simple_voting};

    #[test]
    fn json_round_trip() {
        let m = compose(&generate_simple_voting(1).unwrap()).unwrap();
        let e = export_model(&m);
        assert_eq!(e.states.len(), 23);
        assert_eq!(e.transitions.len(), m.num_transitions());
        let text = serde_json::to_string(&e).unwrap();
        assert_eq!(load_model_json(&text).unwrap(), e);
    }

    #[test]
    fn pages_partition_the_model() {
        let m = compose(&generate_simple_voting(2).unwrap()).unwrap();
        let pages: Vec<ExportedModel> = (0..3).map(|p| export_page(&m, p, 200)).collect();
        assert_eq!(pages[0].page.as_ref().unwrap().pages, 3);
        assert_eq!(pages.iter().map(|p| p.states.len()).sum::<usize>(), 529);
        assert_eq!(pages.iter().map(|p| p.transitions.len()).sum::<usize>(), 1925);
        assert!(export_page(&m, 9, 200).states.is_empty());
    }

    #[test]
    fn dot_is_deterministic() {
        let m = compose(&generate_simple_voting(1).unwrap()).unwrap();
        let a = model_dot(&m);
        assert_eq!(a, model_dot(&m));
        assert!(a.starts_with("digraph model {"));
        assert_eq!(a.matches(" -> ").count(), m.num_transitions());
    }
}
