//! File formats: level and tree functions as CSV, eigen results and
//! evolution summaries as JSON, and supnorm time series as CSV.
//!
//! Every float is written with Rust's shortest round-trip formatting, and
//! every file is written to a temporary sibling and renamed into place.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Scheme, Trajectory};
use crate::operator::{LevelFunction, TreeFunction};
use crate::spectrum::EigenResult;
use crate::tree::{NodeId, TruncatedTree};

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn level_function_csv(u: &LevelFunction) -> String {
    let mut out = String::from("level,value\n");
    for (k, v) in u.values().iter().enumerate() {
        out.push_str(&format!("{k},{v:?}\n"));
    }
    out
}

pub fn parse_level_function_csv(text: &str) -> Result<LevelFunction> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    expect_header(&mut reader, &["level", "value"])?;
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let level: usize = parse_field(&record, 0, "level")?;
        if level != row {
            return Err(Error::Parse {
                what: "level function",
                detail: format!("row {row} has level {level}; rows must list levels 0..L in order"),
            });
        }
        values.push(parse_field(&record, 1, "value")?);
    }
    LevelFunction::new(values)
}

pub fn tree_function_csv(u: &TreeFunction) -> String {
    let mut out = String::from("path,value\n");
    for (node, v) in u.tree().nodes().zip(u.values()) {
        out.push_str(&format!("{node},{v:?}\n"));
    }
    out
}

/// Rows may come in any order; every node must appear exactly once.
pub fn parse_tree_function_csv(text: &str, tree: &TruncatedTree) -> Result<TreeFunction> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    expect_header(&mut reader, &["path", "value"])?;
    let mut seen: HashMap<usize, f64> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let node = NodeId::parse(record.get(0).unwrap_or(""), tree.m())?;
        let index = tree.node_index(&node)?;
        let value: f64 = parse_field(&record, 1, "value")?;
        if seen.insert(index, value).is_some() {
            return Err(Error::Parse { what: "tree function", detail: format!("node {node:?} listed twice") });
        }
    }
    let mut values = Vec::with_capacity(tree.node_count());
    for i in 0..tree.node_count() {
        match seen.get(&i) {
            Some(&v) => values.push(v),
            None => {
                return Err(Error::Parse {
                    what: "tree function",
                    detail: format!("missing node \"{}\"", tree.index_node(i)?),
                })
            }
        }
    }
    TreeFunction::new(tree, values)
}

fn expect_header(reader: &mut csv::Reader<&[u8]>, want: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    if header.iter().ne(want.iter().copied()) {
        return Err(Error::Parse {
            what: "csv header",
            detail: format!("expected {:?}, found {:?}", want.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    Ok(())
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, name: &'static str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = record.get(i).ok_or_else(|| Error::Parse { what: name, detail: "missing column".into() })?;
    raw.parse().map_err(|e: T::Err| Error::Parse { what: name, detail: format!("{raw:?}: {e}") })
}

/// Stable JSON layout of an eigenvalue computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub m: Option<usize>,
    pub beta: f64,
    pub depth: usize,
    pub lambda1: f64,
    pub bracket: [f64; 2],
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub interior_residual: f64,
    pub sum_identity_gap: f64,
}

impl EigenReport {
    pub fn new(result: &EigenResult, m: Option<usize>) -> Self {
        Self {
            m,
            beta: result.beta,
            depth: result.depth,
            lambda1: result.lambda1,
            bracket: [result.bracket.0, result.bracket.1],
            lower_bound: result.bounds.lower,
            upper_bound: result.bounds.upper,
            interior_residual: result.interior_residual,
            sum_identity_gap: result.sum_identity_gap,
        }
    }
}

/// Stable JSON layout summarising an evolution run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSummary {
    pub beta: f64,
    pub m: Option<usize>,
    pub depth: usize,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub fitted_rate: Option<f64>,
    pub lambda1_ref: Option<f64>,
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// `t,supnorm` rows for every grid time.
pub fn supnorm_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,supnorm\n");
    for (t, s) in traj.times.iter().zip(&traj.supnorms) {
        out.push_str(&format!("{t:?},{s:?}\n"));
    }
    out
}
