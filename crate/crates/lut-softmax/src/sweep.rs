//! Method x precision error sweeps and their CSV/JSON reports.

use std::fmt::Write as _;

use lut_softmax_core::{
    softmax_exact, Engine, LogitVector, Method, Precision, ProbVector, Softmax,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::corpus::CorpusSpec;
use crate::error::{HarnessError, Result};
use crate::metrics::{error_report, ErrorReport};

pub const CSV_HEADER: &str = "method,precision,bits,n_vectors,linf,l1_mean,kl_div,norm_dev";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(serialize_with = "as_display")]
    pub method: Method,
    #[serde(serialize_with = "as_display")]
    pub precision: Precision,
    pub report: ErrorReport,
}

fn as_display<T: std::fmt::Display, S: serde::Serializer>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Applies `engine` to every vector. Vectors may run on several threads;
/// the output keeps corpus order.
pub fn run_engine(engine: &Engine, corpus: &[LogitVector]) -> Result<Vec<ProbVector>> {
    corpus
        .par_iter()
        .map(|x| engine.softmax(x).map_err(HarnessError::from))
        .collect()
}

pub fn exact_outputs(corpus: &[LogitVector]) -> Vec<ProbVector> {
    corpus.par_iter().map(softmax_exact).collect()
}

/// One report row per `(method, precision)`, ordered method-major.
pub fn sweep(
    methods: &[Method],
    precisions: &[Precision],
    corpus: &[LogitVector],
) -> Result<Vec<SweepRow>> {
    if methods.is_empty() || precisions.is_empty() {
        return Err(HarnessError::InvalidParams(
            "sweep needs at least one method and one precision".into(),
        ));
    }
    let exact = exact_outputs(corpus);
    let mut rows = Vec::with_capacity(methods.len() * precisions.len());
    for &method in methods {
        for &precision in precisions {
            let approx = run_engine(&Engine::preset(method, precision), corpus)?;
            rows.push(SweepRow {
                method,
                precision,
                report: error_report(&approx, &exact)?,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_corpus(
    methods: &[Method],
    precisions: &[Precision],
    corpus: &CorpusSpec,
) -> Result<Vec<SweepRow>> {
    sweep(methods, precisions, &corpus.generate()?)
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let r = &row.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{:.12e},{:.12e},{:.12e},{:.12e}",
            row.method,
            row.precision,
            row.precision.bits(),
            r.n_vectors,
            r.linf,
            r.l1_mean,
            r.kl_div,
            r.norm_dev
        );
    }
    out
}

/// `{ method: { precision: report } }`, in sweep order.
pub fn to_json(rows: &[SweepRow]) -> Value {
    let mut methods = Map::new();
    for row in rows {
        let entry = methods
            .entry(row.method.name())
            .or_insert_with(|| Value::Object(Map::new()));
        if let Value::Object(precisions) = entry {
            precisions.insert(
                row.precision.name().to_string(),
                json!({
                    "bits": row.precision.bits(),
                    "n_vectors": row.report.n_vectors,
                    "linf": row.report.linf,
                    "l1_mean": row.report.l1_mean,
                    "kl_div": row.report.kl_div,
                    "norm_dev": row.report.norm_dev,
                }),
            );
        }
    }
    Value::Object(methods)
}
