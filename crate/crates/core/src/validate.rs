//! Totality check: local states with input valuations under which no
//! transition is enabled. The composer closes such gaps with a stutter, so
//! they are reported rather than rejected.

use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{guard_satisfied, InputValuation};
use crate::spec::SpecDocument;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gap {
    pub module: String,
    pub state: String,
    pub inputs: InputValuation,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub gaps: Vec<Gap>,
}

impl ValidationReport {
    pub fn is_total(&self) -> bool {
        self.gaps.is_empty()
    }
}

pub fn validate_spec(doc: &SpecDocument) -> ValidationReport {
    let mut gaps = Vec::new();
    for m in doc.modules() {
        let valuations = InputValuation::enumerate(m);
        for s in &m.states {
            for iv in &valuations {
                if !m.outgoing(&s.id).any(|t| guard_satisfied(&t.guard, iv)) {
                    gaps.push(Gap { module: m.name.clone(), state: s.id.clone(), inputs: iv.clone() });
                }
            }
        }
    }
    ValidationReport { gaps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_spec;
    use crate::voting::generate_simple_voting;

    #[test]
    fn voting_is_total() {
        for k in 1..=3 {
            assert!(validate_spec(&generate_simple_voting(k).unwrap()).is_total());
        }
    }

    #[test]
    fn gaps_are_listed_per_valuation() {
        let doc = parse_spec(
            "MODULE A\n VAR x : { 0, 1 }\n STATE a [ x=0 ]\n INIT a\n TRANS a -> a ;\n\
             MODULE B\n INPUT x\n STATE b [ ]\n STATE c [ ]\n INIT b\n TRANS b -> c [ x=1 ] ;\n",
        )
        .unwrap();
        let report = validate_spec(&doc);
        let found: Vec<_> = report.gaps.iter().map(|g| (g.state.as_str(), g.inputs.get("x").unwrap())).collect();
        assert_eq!(found, [("b", "0"), ("c", "0"), ("c", "1")]);
    }
}
