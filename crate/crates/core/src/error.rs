use crate::split::SplitFailure;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("node id {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("invalid hierarchy: {0}")]
    Hierarchy(String),

    #[error("unknown class `{0}`")]
    UnknownClass(String),

    #[error("class `{0}` is not a leaf of the hierarchy")]
    NotLeaf(String),

    #[error("row count mismatch: expected {expected}, found {found}")]
    RowMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("modularity is undefined on a graph without edges")]
    NoEdges,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Split(Box<SplitFailure>),

    #[error("non-finite loss at epoch {epoch}, batch {batch} (gradient norms {grad_norms:?})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        grad_norms: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
