use thiserror::Error;

use crate::corpus::StoreError;
use crate::dedup::DedupError;
use crate::graph::GraphError;
use crate::ingest::IngestError;
use crate::query::QueryError;
use crate::rpys::RpysError;
use crate::trend::TrendError;

/// Any error raised by the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Dedup(#[from] DedupError),
    #[error(transparent)]
    Rpys(#[from] RpysError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Trend(#[from] TrendError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
