//! JSON output envelope: every run echoes its resolved config; errors go to
//! stderr as JSON with an exit code by class (2 user/data, 3 numerical).

use ocd_core::{Dag, Error, LocalScore, Move, MoveKind};
use serde::Serialize;

use crate::config::{RunConfig, SCHEMA_VERSION};

#[derive(Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema_version: &'static str,
    pub config: RunConfig,
    pub result: T,
}

pub fn envelope<T: Serialize>(config: RunConfig, result: T) -> Envelope<T> {
    Envelope {
        schema_version: SCHEMA_VERSION,
        config,
        result,
    }
}

#[derive(Serialize)]
pub struct NamedEdge {
    pub source: String,
    pub target: String,
}

pub fn named_edges(g: &Dag, names: &[String]) -> Vec<NamedEdge> {
    g.edges()
        .into_iter()
        .map(|(s, t)| NamedEdge {
            source: names[s - 1].clone(),
            target: names[t - 1].clone(),
        })
        .collect()
}

#[derive(Serialize)]
pub struct NamedMove {
    pub kind: &'static str,
    pub source: String,
    pub target: String,
}

pub fn named_move(m: &Move, names: &[String]) -> NamedMove {
    NamedMove {
        kind: match m.kind {
            MoveKind::Add => "add",
            MoveKind::Delete => "delete",
            MoveKind::Reverse => "reverse",
        },
        source: names[m.source - 1].clone(),
        target: names[m.target - 1].clone(),
    }
}

#[derive(Serialize)]
pub struct NamedLocalScore {
    pub node: String,
    pub parents: Vec<String>,
    pub bic: f64,
    pub loglik: f64,
    pub k: usize,
    pub degenerate: bool,
}

pub fn named_local_score(s: &LocalScore, names: &[String]) -> NamedLocalScore {
    NamedLocalScore {
        node: names[s.node - 1].clone(),
        parents: s.parents.iter().map(|&p| names[p - 1].clone()).collect(),
        bic: s.bic,
        loglik: s.loglik,
        k: s.k,
        degenerate: s.degenerate,
    }
}

/// Exit code for an error: 2 for user/data problems, 3 for numerical ones.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Separation(_) => 3,
        _ => 2,
    }
}

pub fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::NodeOutOfRange { .. } => "node-out-of-range",
        Error::EmptyGraph => "empty-graph",
        Error::InapplicableMove(_) => "inapplicable-move",
        Error::WouldCreateCycle(_) => "would-create-cycle",
        Error::TooManyNodes { .. } => "too-many-nodes",
        Error::TooManyEdges { .. } => "too-many-edges",
        Error::Io(_) => "io",
        Error::Parse { .. } => "parse",
        Error::Validation(_) => "validation",
        Error::DegenerateColumn { .. } => "degenerate-column",
        Error::DegenerateTarget { .. } => "degenerate-target",
        Error::Separation(_) => "separation",
        Error::DimensionMismatch { .. } => "dimension-mismatch",
        Error::InvalidParentCode { .. } => "invalid-parent-code",
        Error::NodeCountMismatch { .. } => "node-count-mismatch",
        Error::LengthMismatch { .. } => "length-mismatch",
        Error::DegenerateLabels => "degenerate-labels",
        Error::ShapeMismatch { .. } => "shape-mismatch",
        Error::NotNormalized { .. } => "not-normalized",
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorEnvelope<'a> {
    schema_version: &'static str,
    error: ErrorBody<'a>,
}

/// Print machine-readable error JSON to stderr and return the exit code.
pub fn report_error(err: &Error) -> i32 {
    let env = ErrorEnvelope {
        schema_version: SCHEMA_VERSION,
        error: ErrorBody {
            kind: error_kind(err),
            message: err.to_string(),
        },
    };
    eprintln!(
        "{}",
        serde_json::to_string(&env).expect("error serialization")
    );
    exit_code(err)
}
