//! Serialization of estimation and simulation results.
//!
//! CSV is the primary tabular format; JSON side files carry bands, dominance
//! tests, and run metadata. Every run embeds a metadata block with a schema
//! version, the full effective configuration, and the seed, so a run can be
//! reconstructed from its outputs alone.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::core::effects::{Aggregation, AggregationKind, QttSurface};
use crate::simulate::McReport;

/// Version of the output schema embedded in every metadata block.
pub const SCHEMA_VERSION: &str = "1";

/// Run metadata: enough to reproduce the run exactly.
#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    /// Output schema version.
    pub schema_version: String,
    /// Subcommand that produced the outputs.
    pub command: String,
    /// Effective configuration after flag/config/default resolution.
    pub config: BTreeMap<String, String>,
    /// Master seed of the run.
    pub seed: u64,
    /// Non-fatal warnings raised during the run.
    pub warnings: Vec<String>,
}

/// Machine-readable error envelope printed to standard error on failure.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    /// Stable error code (the error variant name).
    pub error: String,
    /// Human-readable message.
    pub message: String,
}

/// Serializes any value as pretty JSON plus a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)
}

/// Writes a QTT surface as CSV (`cohort,period,tau,qtt,n_treated,n_control`).
pub fn write_surface_csv<W: Write>(w: W, surface: &QttSurface) -> std::io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["cohort", "period", "tau", "qtt", "n_treated", "n_control"])?;
    for e in &surface.entries {
        csv.write_record([
            e.cohort.to_string(),
            e.period.to_string(),
            format_float(e.tau),
            format_float(e.qtt),
            e.n_treated.to_string(),
            e.n_control.to_string(),
        ])?;
    }
    csv.flush()
}

/// Surface rows as a JSON array.
pub fn write_surface_json<W: Write>(w: W, surface: &QttSurface) -> std::io::Result<()> {
    write_json(
        w,
        &surface
            .entries
            .iter()
            .map(SurfaceRow::from)
            .collect::<Vec<_>>(),
    )
}

#[derive(Serialize)]
struct SurfaceRow {
    cohort: u32,
    period: u32,
    tau: f64,
    qtt: f64,
    n_treated: usize,
    n_control: usize,
}

impl From<&crate::core::effects::QttEntry> for SurfaceRow {
    fn from(e: &crate::core::effects::QttEntry) -> Self {
        Self {
            cohort: e.cohort,
            period: e.period,
            tau: e.tau,
            qtt: e.qtt,
            n_treated: e.n_treated,
            n_control: e.n_control,
        }
    }
}

/// Writes an aggregation as CSV (`kind,tau,value`), with the weight table
/// appended as comment-free extra columns per row pair (`cohort,period,weight`
/// rows follow a blank-kind marker).
pub fn write_aggregation_csv<W: Write>(w: W, agg: &Aggregation) -> std::io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let kind = aggregation_label(&agg.kind);
    csv.write_record([
        "record",
        "kind",
        "tau_or_cohort",
        "value_or_period",
        "weight",
    ])?;
    for (tau, value) in &agg.values {
        csv.write_record([
            "value".into(),
            kind.clone(),
            format_float(*tau),
            format_float(*value),
            String::new(),
        ])?;
    }
    for (r, t, wgt) in &agg.weights {
        csv.write_record([
            "weight".into(),
            kind.clone(),
            r.to_string(),
            t.to_string(),
            format_float(*wgt),
        ])?;
    }
    csv.flush()
}

/// Aggregation as JSON.
pub fn write_aggregation_json<W: Write>(w: W, agg: &Aggregation) -> std::io::Result<()> {
    #[derive(Serialize)]
    struct Out<'a> {
        kind: String,
        values: &'a [(f64, f64)],
        weights: &'a [(u32, u32, f64)],
    }
    write_json(
        w,
        &Out {
            kind: aggregation_label(&agg.kind),
            values: &agg.values,
            weights: &agg.weights,
        },
    )
}

fn aggregation_label(kind: &AggregationKind) -> String {
    match kind {
        AggregationKind::EventTime { event_time } => format!("event:{event_time}"),
        AggregationKind::OverallWeighted => "overall".into(),
        AggregationKind::Custom => "custom".into(),
    }
}

/// Writes a Monte Carlo report as CSV mirroring the simulation tables
/// (`dgp,method,n,cohort,period,tau,truth,bias,rmse` plus the violation
/// parameters and replication accounting).
pub fn write_mc_csv<W: Write>(w: W, reports: &[McReport]) -> std::io::Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "dgp",
        "method",
        "n",
        "cohort",
        "period",
        "tau",
        "truth",
        "bias",
        "rmse",
        "epsilon_bar",
        "rho_bar",
        "reps_used",
    ])?;
    for report in reports {
        for c in &report.cells {
            csv.write_record([
                c.dgp.to_string(),
                c.method.clone(),
                c.n.to_string(),
                c.cohort.to_string(),
                c.period.to_string(),
                format_float(c.tau),
                format_float(c.truth),
                format_float(c.bias),
                format_float(c.rmse),
                format_float(report.spec.epsilon_bar),
                format_float(report.spec.rho_bar),
                c.reps_used.to_string(),
            ])?;
        }
    }
    csv.flush()
}

/// Compact, locale-free float formatting used in all CSV output.
pub fn format_float(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::effects::QttEntry;

    fn surface() -> QttSurface {
        QttSurface {
            anticipation: 0,
            taus: vec![0.5],
            entries: vec![QttEntry {
                cohort: 2,
                period: 2,
                tau: 0.5,
                qtt: 1.25,
                n_treated: 10,
                n_control: 20,
            }],
        }
    }

    #[test]
    fn surface_csv_layout() {
        let mut buf = Vec::new();
        write_surface_csv(&mut buf, &surface()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "cohort,period,tau,qtt,n_treated,n_control\n2,2,0.5,1.25,10,20\n"
        );
    }

    #[test]
    fn floats_keep_integer_marker() {
        assert_eq!(format_float(2.0), "2.0");
        assert_eq!(format_float(0.25), "0.25");
    }

    #[test]
    fn aggregation_csv_has_values_and_weights() {
        let agg = Aggregation {
            kind: AggregationKind::OverallWeighted,
            values: vec![(0.5, 2.0)],
            weights: vec![(2, 2, 1.0)],
        };
        let mut buf = Vec::new();
        write_aggregation_csv(&mut buf, &agg).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("value,overall,0.5,2.0,"));
        assert!(text.contains("weight,overall,2,2,1.0"));
    }
}
