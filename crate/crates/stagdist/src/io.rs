//! Long-format CSV ingestion into validated balanced panels.
//!
//! Input is UTF-8 delimited text with a header row; each row is one
//! (unit, period) observation. Cohort labels come either from a
//! first-treatment-period column (empty field or the literal `never` marks
//! the never-treated group) or from a per-period binary treatment column,
//! in which case the cohort is the first period with treatment one and any
//! later switch back to zero is a reversal error. Arbitrary integer period
//! labels are accepted and mapped onto `1..=T` in sorted order.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::core::panel::{BalancedPanel, Cohort, PanelError};

/// Column mapping for long-format input.
#[derive(Clone, Debug)]
pub struct PanelSchema {
    /// Unit-identifier column.
    pub unit: String,
    /// Integer period column.
    pub time: String,
    /// Numeric outcome column.
    pub outcome: String,
    /// First-treatment-period column (empty / `never` sentinel allowed).
    pub first_treated: Option<String>,
    /// Per-period binary treatment indicator column (alternative layout).
    pub treatment: Option<String>,
    /// Covariate columns, read at each unit's earliest period.
    pub covariates: Vec<String>,
    /// Field delimiter (comma by default).
    pub delimiter: u8,
}

impl Default for PanelSchema {
    fn default() -> Self {
        Self {
            unit: "unit".into(),
            time: "time".into(),
            outcome: "outcome".into(),
            first_treated: Some("first_treated".into()),
            treatment: None,
            covariates: Vec::new(),
            delimiter: b',',
        }
    }
}

/// Ingestion errors. I/O problems and malformed content are distinguished so
/// the CLI can map them to different exit codes.
#[derive(Debug)]
pub enum IoError {
    /// Operating-system level read failure.
    Io(std::io::Error),
    /// The byte stream is not parseable delimited text.
    Malformed(String),
    /// A named column is missing from the header.
    MissingColumn(String),
    /// A cell failed numeric or period parsing.
    BadCell {
        line: u64,
        column: String,
        message: String,
    },
    /// Neither a first-treated nor a treatment column was configured.
    NoCohortColumn,
    /// The first-treated value does not match any observed period.
    UnknownTreatmentPeriod { unit: String, value: String },
    /// Structural validation failure from panel construction.
    Validation(PanelError),
}

impl fmt::Display for IoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoError::Io(e) => write!(f, "input read failed: {e}"),
            IoError::Malformed(m) => write!(f, "malformed input: {m}"),
            IoError::MissingColumn(c) => write!(f, "column `{c}` not found in header"),
            IoError::BadCell {
                line,
                column,
                message,
            } => {
                write!(f, "line {line}, column `{column}`: {message}")
            }
            IoError::NoCohortColumn => {
                write!(f, "configure either a first-treated or a treatment column")
            }
            IoError::UnknownTreatmentPeriod { unit, value } => {
                write!(
                    f,
                    "unit `{unit}`: first-treated value `{value}` is not an observed period"
                )
            }
            IoError::Validation(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for IoError {}

impl From<std::io::Error> for IoError {
    fn from(e: std::io::Error) -> Self {
        IoError::Io(e)
    }
}

impl From<PanelError> for IoError {
    fn from(e: PanelError) -> Self {
        IoError::Validation(e)
    }
}

/// Whether the error came from the operating system (exit code 1) rather
/// than from invalid content (exit code 2).
impl IoError {
    /// True for OS-level failures.
    pub fn is_io(&self) -> bool {
        matches!(self, IoError::Io(_))
    }
}

/// A validated panel plus ingestion context.
#[derive(Debug)]
pub struct LoadedPanel {
    /// The panel, with periods remapped to `1..=T`.
    pub panel: BalancedPanel,
    /// Original integer period labels in ascending order; label `i` maps to
    /// internal period `i + 1`.
    pub period_labels: Vec<i64>,
    /// Non-fatal notes (dropped always-treated units, etc.).
    pub warnings: Vec<String>,
}

struct RawRow {
    unit: String,
    period: i64,
    outcome: f64,
    first_treated: Option<Option<i64>>, // Some(None) = never-treated sentinel
    treatment: Option<bool>,
    covariates: Vec<f64>,
}

/// Loads a panel from a file path.
pub fn load_panel_path(path: &Path, schema: &PanelSchema) -> Result<LoadedPanel, IoError> {
    let file = File::open(path)?;
    load_panel(file, schema)
}

/// Loads a panel from any reader.
pub fn load_panel<R: Read>(reader: R, schema: &PanelSchema) -> Result<LoadedPanel, IoError> {
    if schema.first_treated.is_none() && schema.treatment.is_none() {
        return Err(IoError::NoCohortColumn);
    }
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .flexible(false)
        .from_reader(reader);
    let headers = csv.headers().map_err(csv_error)?.clone();
    let col = |name: &str| -> Result<usize, IoError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IoError::MissingColumn(name.to_string()))
    };
    let unit_col = col(&schema.unit)?;
    let time_col = col(&schema.time)?;
    let outcome_col = col(&schema.outcome)?;
    let first_col = schema.first_treated.as_deref().map(col).transpose()?;
    let treat_col = schema.treatment.as_deref().map(col).transpose()?;
    let cov_cols: Vec<(String, usize)> = schema
        .covariates
        .iter()
        .map(|c| col(c).map(|i| (c.clone(), i)))
        .collect::<Result<_, _>>()?;

    let mut rows: Vec<RawRow> = Vec::new();
    for record in csv.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |i: usize| record.get(i).unwrap_or("").trim();
        let bad = |column: &str, message: String| IoError::BadCell {
            line,
            column: column.to_string(),
            message,
        };
        let period: i64 = cell(time_col).parse().map_err(|_| {
            bad(
                &schema.time,
                format!("`{}` is not an integer", cell(time_col)),
            )
        })?;
        let outcome: f64 = cell(outcome_col).parse().map_err(|_| {
            bad(
                &schema.outcome,
                format!("`{}` is not a number", cell(outcome_col)),
            )
        })?;
        let first_treated = match first_col {
            None => None,
            Some(i) => {
                let raw = cell(i);
                if raw.is_empty() || raw.eq_ignore_ascii_case("never") {
                    Some(None)
                } else {
                    let v: i64 = raw.parse().map_err(|_| {
                        bad(
                            schema.first_treated.as_deref().unwrap_or_default(),
                            format!("`{raw}` is neither a period nor the `never` sentinel"),
                        )
                    })?;
                    Some(Some(v))
                }
            }
        };
        let treatment = match treat_col {
            None => None,
            Some(i) => {
                let raw = cell(i);
                match raw {
                    "0" => Some(false),
                    "1" => Some(true),
                    _ => {
                        return Err(bad(
                            schema.treatment.as_deref().unwrap_or_default(),
                            format!("`{raw}` is not a 0/1 indicator"),
                        ))
                    }
                }
            }
        };
        let covariates = cov_cols
            .iter()
            .map(|(name, i)| {
                cell(*i)
                    .parse()
                    .map_err(|_| bad(name, format!("`{}` is not a number", cell(*i))))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(RawRow {
            unit: cell(unit_col).to_string(),
            period,
            outcome,
            first_treated,
            treatment,
            covariates,
        });
    }
    assemble(rows, schema)
}

fn csv_error(e: csv::Error) -> IoError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IoError::Io(io),
        other => IoError::Malformed(format!("{other:?}")),
    }
}

fn assemble(rows: Vec<RawRow>, schema: &PanelSchema) -> Result<LoadedPanel, IoError> {
    let period_labels: Vec<i64> = rows
        .iter()
        .map(|r| r.period)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let horizon = period_labels.len() as u32;
    let to_internal = |label: i64| -> Option<u32> {
        period_labels
            .binary_search(&label)
            .ok()
            .map(|i| i as u32 + 1)
    };

    // Units in first-appearance order; one cell per (unit, period).
    let mut units: Vec<String> = Vec::new();
    let mut unit_index: HashMap<String, usize> = HashMap::new();
    for r in &rows {
        if !unit_index.contains_key(&r.unit) {
            unit_index.insert(r.unit.clone(), units.len());
            units.push(r.unit.clone());
        }
    }
    let n = units.len();
    let t = horizon as usize;
    let mut outcomes = vec![f64::NAN; n * t];
    let mut seen = vec![false; n * t];
    let mut first_treated: Vec<Option<Option<i64>>> = vec![None; n];
    let mut indicators: Vec<Vec<(u32, bool)>> = vec![Vec::new(); n];
    let mut covariates: Vec<Option<(i64, Vec<f64>)>> = vec![None; n];
    for r in &rows {
        let ui = unit_index[&r.unit];
        let p = to_internal(r.period).unwrap();
        let idx = ui * t + (p - 1) as usize;
        if seen[idx] {
            return Err(PanelError::UnbalancedPanel {
                unit: r.unit.clone(),
            }
            .into());
        }
        seen[idx] = true;
        outcomes[idx] = r.outcome;
        if let Some(ft) = r.first_treated {
            first_treated[ui] = Some(ft);
        }
        if let Some(d) = r.treatment {
            indicators[ui].push((p, d));
        }
        if !schema.covariates.is_empty() {
            match &mut covariates[ui] {
                slot @ None => *slot = Some((r.period, r.covariates.clone())),
                Some((earliest, values)) => {
                    if r.period < *earliest {
                        *earliest = r.period;
                        *values = r.covariates.clone();
                    }
                }
            }
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(PanelError::UnbalancedPanel {
            unit: units[missing / t].clone(),
        }
        .into());
    }

    let mut warnings = Vec::new();
    let mut cohorts: Vec<Cohort> = Vec::with_capacity(n);
    for (ui, unit) in units.iter().enumerate() {
        let cohort = if let Some(ft) = first_treated[ui] {
            match ft {
                None => Cohort::Never,
                Some(label) => {
                    let p = to_internal(label).ok_or_else(|| IoError::UnknownTreatmentPeriod {
                        unit: unit.clone(),
                        value: label.to_string(),
                    })?;
                    Cohort::Treated(p)
                }
            }
        } else {
            // Derive the cohort from the per-period indicator; detect 1 -> 0
            // switches as reversals.
            let mut ind = indicators[ui].clone();
            ind.sort_unstable_by_key(|(p, _)| *p);
            let mut first = None;
            for &(p, d) in &ind {
                match (first, d) {
                    (None, true) => first = Some(p),
                    (Some(_), false) => {
                        return Err(PanelError::TreatmentReversal {
                            unit: unit.clone(),
                            period: p,
                        }
                        .into())
                    }
                    _ => {}
                }
            }
            first.map_or(Cohort::Never, Cohort::Treated)
        };
        cohorts.push(cohort);
    }

    // Drop always-treated units (treated already in the first observed
    // period) with a warning rather than failing the whole ingest.
    let keep: Vec<usize> = (0..n)
        .filter(|&ui| {
            if cohorts[ui] == Cohort::Treated(1) {
                warnings.push(format!(
                    "unit `{}` is treated in the first period and was dropped",
                    units[ui]
                ));
                false
            } else {
                true
            }
        })
        .collect();
    let kept_units: Vec<String> = keep.iter().map(|&ui| units[ui].clone()).collect();
    let kept_outcomes: Vec<f64> = keep
        .iter()
        .flat_map(|&ui| outcomes[ui * t..(ui + 1) * t].iter().copied())
        .collect();
    let kept_cohorts: Vec<Cohort> = keep.iter().map(|&ui| cohorts[ui]).collect();
    let kept_covariates = if schema.covariates.is_empty() {
        None
    } else {
        Some(
            keep.iter()
                .map(|&ui| covariates[ui].clone().map_or(Vec::new(), |(_, v)| v))
                .collect(),
        )
    };

    let panel = BalancedPanel::new(
        kept_units,
        horizon,
        kept_outcomes,
        kept_cohorts,
        kept_covariates,
    )?;
    Ok(LoadedPanel {
        panel,
        period_labels,
        warnings,
    })
}
