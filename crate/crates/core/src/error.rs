use std::path::PathBuf;

use crate::stream::{Action, ItemId, UserId};

/// Errors raised by sketches, the oracle, and the experiment pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("register index {index} out of range 0..{k}")]
    RegisterOutOfRange { index: usize, k: usize },

    #[error("infeasible element at t={t}: ({user}, {item}, {action})")]
    Infeasible {
        t: u64,
        user: UserId,
        item: ItemId,
        action: Action,
    },

    #[error("unknown user {0}")]
    UnknownUser(UserId),

    #[error("pair must consist of two distinct users, got {0} twice")]
    SameUser(UserId),

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("need at least two users for pair selection, found {0}")]
    TooFewUsers(usize),

    #[error("corrupt checkpoint: {0}")]
    Decode(String),

    #[error("cannot open {}", path.display())]
    Open { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
