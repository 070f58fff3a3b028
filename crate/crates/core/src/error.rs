use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// M-step block names, used to tag solver failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Initialization,
    EStep,
    Translation,
    Rotation,
    Centroids,
    Variances,
    Weights,
    Objective,
}

impl std::fmt::Display for Block {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Block::Initialization => "initialization",
            Block::EStep => "e-step",
            Block::Translation => "translation",
            Block::Rotation => "rotation",
            Block::Centroids => "centroids",
            Block::Variances => "variances",
            Block::Weights => "weights",
            Block::Objective => "objective",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cloud {cloud} is empty")]
    EmptyCloud { cloud: usize },

    #[error("cloud {cloud}, point {point}: non-finite coordinate")]
    NonFinitePoint { cloud: usize, point: usize },

    #[error("invalid rigid transform: {0}")]
    InvalidTransform(String),

    #[error("expected {expected} poses, got {actual}")]
    PoseCountMismatch { expected: usize, actual: usize },

    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("posterior normalizer vanished for cloud {cloud}, point {point}")]
    ZeroNormalizer { cloud: usize, point: usize },

    #[error("cloud {cloud} carries no inlier posterior mass")]
    DegenerateCloud { cloud: usize },

    #[error("total component posterior mass is zero")]
    DegenerateModel,

    #[error("non-finite value in objective term `{term}`")]
    NonFiniteObjective { term: &'static str },

    #[error("iteration {iteration}, {block} block: {source}")]
    Solver {
        iteration: usize,
        block: Block,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_block(self, iteration: usize, block: Block) -> Self {
        Error::Solver {
            iteration,
            block,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad inputs or settings rather than by the
    /// numerics of a run.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::EmptyCloud { .. }
                | Error::PoseCountMismatch { .. }
                | Error::InvalidTransform(_)
                | Error::NonFinitePoint { .. }
                | Error::Parse { .. }
        )
    }
}
