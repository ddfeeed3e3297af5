//! Evaluation harness, table files and command-line front end for the
//! lookup-table softmax kernels in [`lut_softmax_core`].

pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod histogram;
pub mod io;
pub mod metrics;
pub mod probe;
pub mod sweep;

pub use lut_softmax_core as core;

pub use corpus::{gen_logits, CorpusSpec, Distribution, DEFAULT_SEED};
pub use error::{HarnessError, Result};
pub use histogram::{sum_exp, sum_exp_histogram, SumExpHistogram};
pub use metrics::{error_report, ErrorReport};
pub use probe::{stacked_error_probe, LayerReport};
pub use sweep::{sweep, sweep_corpus, SweepRow};
