//! Corpus workbench for object-oriented source code: cataloguing,
//! code properties, ML-ready representations, call graphs, task datasets
//! and tokenizer/window studies.

pub mod callgraph;
pub mod corpus;
pub mod error;
pub mod featuregraph;
pub mod fixture;
pub mod lexparse;
pub mod metrics;
pub mod par;
pub mod pathcontexts;
pub mod taskgen;
pub mod tokenstats;
pub mod workspace;

pub use error::{Error, Result};
