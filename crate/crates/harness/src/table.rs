//! Result tables and their CSV form.
//!
//! Layout: a `#` header block (toolkit version, experiment, fingerprint and
//! the canonical config), the column names, the units, then one line per
//! point. Numbers use the shortest representation that parses back to the
//! same `f64`; failed values are empty fields.

use std::path::Path;

use crate::error::{HarnessError, Result};

pub const STATUS: &str = "status";
pub const OK: &str = "ok";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    /// Empty for dimensionless and text columns.
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }

    pub fn is_text(&self) -> bool {
        self.name == STATUS
    }

    /// `name [unit]`, or the bare name without a unit.
    pub fn label(&self) -> String {
        if self.unit.is_empty() {
            self.name.clone()
        } else {
            format!("{} [{}]", self.name, self.unit)
        }
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    Number(f64),
    Text(String),
    Missing,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Cell::Number(a), Cell::Number(b)) => a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()),
            (Cell::Text(a), Cell::Text(b)) => a == b,
            (Cell::Missing, Cell::Missing) => true,
            _ => false,
        }
    }
}

impl Cell {
    pub fn number(&self) -> Option<f64> {
        match self {
            Cell::Number(x) => Some(*x),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Number(x) => format!("{x:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Number(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Number)
    }
}

/// Status text for one point: `ok` or the error on a single line.
pub fn status<E: std::fmt::Display>(err: Option<E>) -> Cell {
    match err {
        None => Cell::Text(OK.into()),
        Some(e) => Cell::Text(e.to_string().split_whitespace().collect::<Vec<_>>().join(" ")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub experiment: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub fingerprint: String,
    pub version: String,
    /// Canonical config the table was computed from.
    pub config: String,
}

impl ResultTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Numeric values of a column, `None` where missing.
    pub fn values(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.column(name)?;
        Some(self.rows.iter().map(|r| r[k].number()).collect())
    }

    /// Rows whose status is not `ok`.
    pub fn failures(&self) -> usize {
        match self.column(STATUS) {
            Some(k) => self
                .rows
                .iter()
                .filter(|r| !matches!(&r[k], Cell::Text(s) if s == OK))
                .count(),
            None => 0,
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        if self.rows.is_empty() {
            return Err(HarnessError::Precondition("cannot export an empty table".into()));
        }
        let mut out = String::new();
        out.push_str(&format!("# version: {}\n", self.version));
        out.push_str(&format!("# experiment: {}\n", self.experiment));
        out.push_str(&format!("# fingerprint: {}\n", self.fingerprint));
        out.push_str("# config:\n");
        for line in self.config.lines() {
            out.push_str(&format!("#   {line}\n"));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let fail = |e: csv::Error| HarnessError::Precondition(format!("CSV encoding: {e}"));
        w.write_record(self.columns.iter().map(|c| c.name.as_str())).map_err(fail)?;
        w.write_record(self.columns.iter().map(|c| c.unit.as_str())).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(fail)?;
        }
        let body = w.into_inner().map_err(|e| HarnessError::Precondition(e.to_string()))?;
        out.push_str(&String::from_utf8(body).expect("UTF-8 input"));
        Ok(out)
    }

    pub fn from_csv(text: &str) -> std::result::Result<Self, String> {
        let mut version = None;
        let mut experiment = None;
        let mut fingerprint = None;
        let mut config = Vec::new();
        let mut in_config = false;
        let mut body_start = text.len();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let Some(rest) = line.strip_prefix('#') else {
                body_start = offset;
                break;
            };
            let rest = rest.trim_end_matches('\n');
            if in_config {
                match rest.strip_prefix("   ") {
                    Some(c) => config.push(c.to_string()),
                    None => return Err(format!("unindented header line {line:?}")),
                }
            } else if let Some(v) = rest.strip_prefix(" version: ") {
                version = Some(v.to_string());
            } else if let Some(v) = rest.strip_prefix(" experiment: ") {
                experiment = Some(v.to_string());
            } else if let Some(v) = rest.strip_prefix(" fingerprint: ") {
                fingerprint = Some(v.to_string());
            } else if rest == " config:" {
                in_config = true;
            } else {
                return Err(format!("unknown header line {line:?}"));
            }
            offset += line.len();
        }
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(text[body_start..].as_bytes());
        let mut records = r.records();
        let mut next = |what: &str| -> std::result::Result<csv::StringRecord, String> {
            records
                .next()
                .ok_or_else(|| format!("missing {what} row"))?
                .map_err(|e| e.to_string())
        };
        let names = next("name")?;
        let units = next("unit")?;
        if names.len() != units.len() {
            return Err("name and unit rows differ in length".into());
        }
        let columns: Vec<Column> = names.iter().zip(units.iter()).map(|(n, u)| Column::new(n, u)).collect();
        let mut rows = Vec::new();
        for rec in records {
            let rec = rec.map_err(|e| e.to_string())?;
            let row = rec
                .iter()
                .zip(&columns)
                .map(|(field, col)| {
                    if field.is_empty() {
                        Ok(Cell::Missing)
                    } else if col.is_text() {
                        Ok(Cell::Text(field.to_string()))
                    } else {
                        field
                            .parse::<f64>()
                            .map(Cell::Number)
                            .map_err(|_| format!("column {}: not a number: {field:?}", col.name))
                    }
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        let mut config = config.join("\n");
        if !config.is_empty() {
            config.push('\n');
        }
        Ok(Self {
            experiment: experiment.ok_or("missing experiment line")?,
            columns,
            rows,
            fingerprint: fingerprint.ok_or("missing fingerprint line")?,
            version: version.ok_or("missing version line")?,
            config,
        })
    }

    pub fn export_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = self.to_csv()?;
        std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_csv(&text).map_err(|reason| HarnessError::Table {
            path: path.display().to_string(),
            reason,
        })
    }
}

/// Config text embedded in a CSV header block.
pub fn embedded_config(csv: &str) -> Option<String> {
    ResultTable::from_csv(csv).ok().map(|t| t.config)
}
