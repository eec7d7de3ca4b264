//! CSV and JSON renderings of tables, samples and limit studies.
//!
//! Numbers are written as shortest round-trip decimals in standard
//! precision and as decimal strings in extended precision, so a JSON table
//! read back with [`read_table_json`] reproduces the in-memory values
//! exactly.

use std::fmt::Write as _;

use rpq_core::distributions::{PmfTable, TableStatus};
use rpq_core::{DeformationAlgebra, MultiIndex, PrecisionMode, Real};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A scalar as written to JSON: a number in standard precision, a decimal
/// string in extended precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Float(f64),
    Decimal(String),
}

impl Number {
    pub fn of<T: Real>(x: &T) -> Number {
        match T::MODE {
            PrecisionMode::Standard => Number::Float(x.to_f64()),
            PrecisionMode::Extended => Number::Decimal(x.to_repr()),
        }
    }

    pub fn to_real<T: Real>(&self) -> Result<T, CliError> {
        match self {
            Number::Float(x) => Ok(T::from_f64(*x)),
            Number::Decimal(s) => T::parse_decimal(s)
                .ok_or_else(|| CliError::Input(format!("`{s}` is not a decimal number"))),
        }
    }
}

/// `p`, or `None` when the preset ignores it.
pub fn p_of<T: Real>(alg: &DeformationAlgebra<T>) -> Option<Number> {
    alg.preset()
        .is_none_or(|p| p.uses_p())
        .then(|| Number::of(alg.p()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub algebra: String,
    /// Absent when the preset does not use `p`.
    pub p: Option<Number>,
    pub q: Number,
    pub theta: Vec<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absorption: Option<Vec<f64>>,
    pub n: u32,
    pub k: usize,
    pub kind: String,
    pub mode: String,
    pub precision: PrecisionMode,
    pub total_mass: Number,
    pub normalization_defect: f64,
    pub truncated: bool,
    pub status: TableStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDocument {
    pub meta: TableMeta,
    pub entries: Vec<(Vec<u32>, Number)>,
}

impl TableDocument {
    pub fn from_table<T: Real>(table: &PmfTable<T>) -> TableDocument {
        let spec = table.spec();
        let alg = spec.algebra();
        let meta = TableMeta {
            algebra: alg.name().to_string(),
            p: p_of(alg),
            q: Number::of(alg.q()),
            theta: spec.theta().iter().map(Number::of).collect(),
            absorption: spec.absorption().map(<[f64]>::to_vec),
            n: spec.n(),
            k: spec.k(),
            kind: spec.kind().id().to_string(),
            mode: spec.mode().to_string(),
            precision: T::MODE,
            total_mass: Number::of(table.total_mass()),
            normalization_defect: table.normalization_defect(),
            truncated: table.truncated(),
            status: table.status(),
        };
        let entries = table
            .entries()
            .map(|(idx, p)| (idx.entries().to_vec(), Number::of(p)))
            .collect();
        TableDocument { meta, entries }
    }

    /// Entries converted back to scalars.
    pub fn values<T: Real>(&self) -> Result<Vec<(MultiIndex, T)>, CliError> {
        self.entries
            .iter()
            .map(|(idx, p)| Ok((MultiIndex::new(idx.clone())?, p.to_real()?)))
            .collect()
    }
}

pub fn table_json<T: Real>(table: &PmfTable<T>) -> String {
    let doc = TableDocument::from_table(table);
    let mut s = serde_json::to_string(&doc).expect("table serialises");
    s.push('\n');
    s
}

pub fn read_table_json(s: &str) -> Result<TableDocument, CliError> {
    serde_json::from_str(s).map_err(|e| CliError::Input(format!("malformed table: {e}")))
}

fn header(k: usize, last: Option<&str>) -> String {
    let mut cols: Vec<String> = (1..=k).map(|j| format!("r_{j}")).collect();
    cols.extend(last.map(str::to_string));
    cols.join(",")
}

fn row(idx: &[u32]) -> String {
    idx.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

/// One row per support point in lexicographic order, then a comment line
/// with the normalization defect.
pub fn table_csv<T: Real>(table: &PmfTable<T>) -> String {
    let mut s = header(table.spec().k(), Some("probability"));
    s.push('\n');
    for (idx, p) in table.entries() {
        let _ = writeln!(s, "{},{}", row(idx.entries()), p.to_repr());
    }
    let _ = writeln!(
        s,
        "# normalization_defect={:e} status={} truncated={}",
        table.normalization_defect(),
        status_id(table.status()),
        table.truncated()
    );
    s
}

fn status_id(s: TableStatus) -> &'static str {
    match s {
        TableStatus::Complete => "complete",
        TableStatus::Truncated => "truncated",
        TableStatus::SubStochastic => "sub-stochastic",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub algebra: String,
    pub p: Option<Number>,
    pub q: Number,
    pub theta: Vec<Number>,
    pub n: u32,
    pub k: usize,
    pub kind: String,
    pub seed: u64,
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDocument {
    pub meta: SampleMeta,
    pub draws: Vec<Vec<u32>>,
}

pub fn sample_csv(k: usize, draws: &[MultiIndex]) -> String {
    let mut s = header(k, None);
    s.push('\n');
    for d in draws {
        s.push_str(&row(d.entries()));
        s.push('\n');
    }
    s
}

pub fn sample_json(meta: SampleMeta, draws: &[MultiIndex]) -> String {
    let doc = SampleDocument {
        meta,
        draws: draws.iter().map(|d| d.entries().to_vec()).collect(),
    };
    let mut s = serde_json::to_string(&doc).expect("samples serialise");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitDocument {
    pub family: String,
    pub algebra: String,
    pub theta: Vec<Number>,
    /// `(n, sup distance)` in the order requested.
    pub distances: Vec<(u32, f64)>,
    pub strictly_decreasing: bool,
}

pub fn limits_csv(doc: &LimitDocument) -> String {
    let mut s = String::from("n,distance\n");
    for (n, d) in &doc.distances {
        let _ = writeln!(s, "{n},{d:?}");
    }
    let _ = writeln!(s, "# strictly_decreasing={}", doc.strictly_decreasing);
    s
}
