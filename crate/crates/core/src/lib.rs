//! Bibliometric analysis workbench.
//!
//! The crate covers the whole analysis chain for a topic-specific publication
//! set:
//!
//! - [`ingest`]: field-tagged and tab-delimited export parsing, cited-reference
//!   field extraction, keyword normalization.
//! - [`corpus`]: indexed in-memory corpora, named record sets and their
//!   on-disk layout.
//! - [`query`]: the saved-set boolean query language (`TS=`, `TI=`, phrases,
//!   trailing wildcards, `#n` references, facet refinement).
//! - [`dedup`]: cited-reference variant clustering and curator merge maps.
//! - [`rpys`]: reference publication year spectroscopy (CR table, five-year
//!   median spectrum, period bands, N_TOP10).
//! - [`graph`]: keyword co-occurrence and country co-authorship networks with
//!   modularity clustering and export.
//! - [`trend`]: annual series, growth factors, doubling times, shares and
//!   country tables.
//! - [`synth`]: seeded synthetic corpora for tests and demos.
//!
//! ```
//! use biblioscope_core::ingest::{parse_export_str, ExportFormat};
//!
//! let text = "FN Export\nVR 1.0\nUT R1\nPY 2004\nDT Article\nID CLIMATE-CHANGE; MORTALITY\nER\nEF\n";
//! let parsed = parse_export_str(text, ExportFormat::TaggedText).unwrap();
//! assert_eq!(parsed.records[0].pub_year, 2004);
//! assert!(parsed.records[0].keywords_plus.contains("climate-change"));
//! ```

pub mod corpus;
pub mod dedup;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod query;
pub mod rpys;
pub mod synth;
pub mod text;
pub mod trend;

pub use corpus::{Corpus, RecordSet, SetOp};
pub use dedup::{MergeMap, RefCluster, RefTable};
pub use error::{Error, Result};
pub use graph::BiblioGraph;
pub use ingest::{CitedRefFields, CitingRecord, ExportFormat};
pub use query::Query;
pub use rpys::{Band, CrTable, HalfInt, SpectrumPoint};
pub use trend::AnnualSeries;
