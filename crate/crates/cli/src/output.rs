//! Tables, JSON documents and the on-disk layout of a run.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Missing,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Missing, Cell::Num)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            // Shortest round-trip representation, as in the JSON outputs.
            Cell::Num(x) if x.is_finite() => serde_json::to_string(x).expect("finite float"),
            Cell::Num(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Num(x) => json!(x),
            Cell::Text(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_json_rows(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    m.insert((*c).to_string(), v.json());
                }
                Value::Object(m)
            })
            .collect();
        Value::Array(rows)
    }
}

#[derive(Debug, Clone)]
pub enum Body {
    Table(Table),
    Json(Value),
}

/// One output file. `stem` gets `.csv` or `.json` appended.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub stem: &'static str,
    pub body: Body,
}

impl Artifact {
    pub fn table(stem: &'static str, t: Table) -> Self {
        Self {
            stem,
            body: Body::Table(t),
        }
    }

    pub fn json<S: Serialize>(stem: &'static str, v: &S) -> Self {
        Self {
            stem,
            body: Body::Json(serde_json::to_value(v).expect("serializable result")),
        }
    }
}

/// Everything a command produced. The first artifact is the primary one.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Nonzero when the command ran but its checks failed.
    pub failed: bool,
}

impl Outcome {
    pub fn ok(artifacts: Vec<Artifact>) -> Self {
        Self {
            artifacts,
            failed: false,
        }
    }
}

/// Metadata embedded in every output; contains nothing time-dependent so
/// identical configurations give identical files.
pub fn metadata(command: &str, cfg: &RunConfig) -> Value {
    json!({ "command": command, "version": VERSION, "config": cfg })
}

/// Renders an artifact; returns the file name and the contents.
pub fn render(a: &Artifact, meta: &Value, format: Format) -> (String, String) {
    match (&a.body, format) {
        (Body::Table(t), Format::Csv) => {
            let mut s = String::new();
            writeln!(s, "# {}", serde_json::to_string(meta).unwrap()).unwrap();
            writeln!(s, "{}", t.columns.join(",")).unwrap();
            for r in &t.rows {
                let line: Vec<String> = r.iter().map(Cell::csv).collect();
                writeln!(s, "{}", line.join(",")).unwrap();
            }
            (format!("{}.csv", a.stem), s)
        }
        (Body::Table(t), Format::Json) => {
            let doc = json!({ "metadata": meta, "columns": t.columns, "rows": t.to_json_rows() });
            (format!("{}.json", a.stem), pretty(&doc))
        }
        (Body::Json(v), _) => {
            let doc = json!({ "metadata": meta, "result": v });
            (format!("{}.json", a.stem), pretty(&doc))
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap();
    s.push('\n');
    s
}

/// Refuses to reuse a directory that already holds anything.
pub fn check_fresh(dir: &Path) -> Result<(), String> {
    match fs::read_dir(dir) {
        Ok(mut it) => match it.next() {
            Some(_) => Err(format!(
                "output directory {} is not empty; refusing to overwrite",
                dir.display()
            )),
            None => Ok(()),
        },
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(format!("cannot inspect {}: {e}", dir.display())),
    }
}

/// Writes every artifact plus `run.json` (which alone carries wall time).
pub fn write_run(
    dir: &Path,
    rendered: &[(String, String)],
    meta: &Value,
    wall: f64,
    failed: bool,
) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, body) in rendered {
        let path = dir.join(name);
        // create_new: never clobber, even if something appeared meanwhile.
        fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)?
            .write_all(body.as_bytes())?;
    }
    let files: Vec<&str> = rendered.iter().map(|(n, _)| n.as_str()).collect();
    let run = json!({ "metadata": meta, "files": files, "wall_time_seconds": wall, "passed": !failed });
    let mut f = fs::OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(dir.join("run.json"))?;
    f.write_all(pretty(&run).as_bytes())
}
