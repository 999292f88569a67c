use alloc::string::String;
use core::fmt;

/// Which configurable cap was exceeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resource {
    States,
    Transitions,
    Memory,
}

impl fmt::Display for Resource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resource::States => "states",
            Resource::Transitions => "transitions",
            Resource::Memory => "memory",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: expected {expected}")]
    Syntax { line: usize, col: usize, expected: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("value `{value}` is not in the domain of `{var}`")]
    DomainMismatch { var: String, value: String },
    #[error("invalid domain for variable `{0}`")]
    InvalidDomain(String),
    #[error("duplicate module `{0}`")]
    DuplicateModule(String),
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate state `{state}` in module `{module}`")]
    DuplicateState { module: String, state: String },
    #[error("duplicate action `{action}` in module `{module}`")]
    DuplicateAction { module: String, action: String },
    #[error("unknown state `{state}` in module `{module}`")]
    UnknownState { module: String, state: String },
    #[error("unknown module `{0}`")]
    UnknownModule(String),
    #[error("module `{0}` has no INIT state")]
    MissingInit(String),
    #[error("module `{0}` declares no states")]
    NoStates(String),
    #[error("state `{state}` of module `{module}` does not carry a total valuation")]
    IncompleteValuation { module: String, state: String },
    #[error("module `{module}` reads its own variable `{var}` as input")]
    SelfInput { module: String, var: String },
    #[error("guard in module `{module}` constrains `{var}`, which is not one of its inputs")]
    GuardOnNonInput { module: String, var: String },
    #[error("groups do not partition the module set: {0}")]
    GroupsNotPartition(String),
    #[error("coalition operator nested inside a path formula")]
    NestedCoalition,
    #[error("unsupported temporal operator `{0}`")]
    UnsupportedTemporal(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("resource limit exceeded: more than {limit} {resource}")]
    ResourceLimit { resource: Resource, limit: u64 },
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("strategy of `{agent}` is undefined at view {view}")]
    PartialStrategy { agent: String, view: String },
    #[error("strategy of `{agent}` picks `{action}` at view {view}, which is not enabled there")]
    InvalidStrategy { agent: String, view: String, action: String },
    #[error("group `{0}` has coalition members but no GOAL")]
    MissingGoal(String),
    #[error("local goals mix G and F objectives")]
    MixedTemporalOperators,
    #[error("invalid assumption: {0}")]
    InvalidAssumption(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
