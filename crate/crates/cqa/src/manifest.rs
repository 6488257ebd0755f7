//! Warehouse manifests and delimited table files.
//!
//! A manifest is a JSON document naming the dimensions, their attributes
//! and types, the fact measures, the table files and engine options:
//!
//! ```json
//! {
//!   "dimensions": [
//!     {"name": "D1", "key": "K1", "file": "d1.csv",
//!      "attributes": [{"name": "K1", "type": "text"}, {"name": "A1_1", "type": "text"}]}
//!   ],
//!   "fact": {"file": "f.csv", "measures": [{"name": "M1", "type": "int"}]},
//!   "options": {"measure_fds": true}
//! }
//! ```
//!
//! The key may be listed among a dimension's attributes to give it a type;
//! otherwise it is text. Table files are comma-separated with a header row
//! of attribute names; an empty cell is a missing value. Relative file
//! paths resolve against the manifest's directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use cqa_core::{
    AttrDef, AttrId, DimensionDef, StarSchemaDef, Tuple, Value, ValueType, Warehouse, DEFAULT_ENUMERATION_CAP,
    DEFAULT_REPAIR_LIMIT,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A declared attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSpec {
    /// Attribute name.
    pub name: String,
    /// `"int"`, `"float"` or `"text"`.
    #[serde(rename = "type")]
    pub ty: String,
}

/// A dimension table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionSpec {
    /// Table name.
    pub name: String,
    /// Key attribute name.
    pub key: String,
    /// Table file.
    pub file: String,
    /// Non-key attributes, optionally preceded by the key.
    pub attributes: Vec<AttributeSpec>,
}

/// The fact table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactSpec {
    /// Table file.
    pub file: String,
    /// Measures.
    pub measures: Vec<AttributeSpec>,
}

/// Engine options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Whether `𝕂 → Mₗ` dependencies hold.
    pub measure_fds: bool,
    /// Largest repair space the oracle and the `repairs` command enumerate.
    pub repair_limit: u64,
    /// Largest number of tuples any set enumeration may produce.
    pub enumeration_cap: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            measure_fds: true,
            repair_limit: DEFAULT_REPAIR_LIMIT as u64,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

/// A parsed manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    /// Dimension tables.
    pub dimensions: Vec<DimensionSpec>,
    /// Fact table.
    pub fact: FactSpec,
    /// Engine options.
    #[serde(default)]
    pub options: Options,
}

fn value_type(a: &AttributeSpec) -> Result<ValueType> {
    ValueType::from_name(&a.ty)
        .ok_or_else(|| Error::Manifest(format!("attribute `{}` has unknown type `{}`", a.name, a.ty)))
}

impl Manifest {
    /// Parses a manifest from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))
    }

    /// Renders the manifest as pretty-printed JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// The star schema the manifest declares.
    pub fn schema(&self) -> Result<StarSchemaDef> {
        let mut dims = Vec::with_capacity(self.dimensions.len());
        for d in &self.dimensions {
            let mut key_ty = ValueType::Text;
            let mut non_keys = Vec::new();
            for a in &d.attributes {
                let ty = value_type(a)?;
                if a.name == d.key {
                    key_ty = ty;
                } else {
                    non_keys.push(AttrDef::new(&a.name, ty));
                }
            }
            dims.push(DimensionDef { name: d.name.clone(), key: AttrDef::new(&d.key, key_ty), non_keys });
        }
        let measures = self
            .fact
            .measures
            .iter()
            .map(|m| Ok(AttrDef::new(&m.name, value_type(m)?)))
            .collect::<Result<Vec<_>>>()?;
        StarSchemaDef::new(dims, measures, self.options.measure_fds).map_err(|e| Error::Manifest(e.to_string()))
    }

    /// Builds the warehouse from table texts supplied by `read`, which maps
    /// a manifest file entry to its contents.
    pub fn load_with(&self, mut read: impl FnMut(&str) -> Result<String>) -> Result<Warehouse> {
        let schema = self.schema()?;
        let layout = schema.layout().clone();
        let mut dim_tables = Vec::with_capacity(self.dimensions.len());
        for (i, d) in self.dimensions.iter().enumerate() {
            let text = read(&d.file)?;
            let rows = parse_table(&text, &d.file, &schema, &schema.dim_schema(i))?;
            for (line, t) in &rows {
                let has_non_key = layout.non_keys[i].iter().any(|a| t.defines(*a));
                if !t.defines(layout.keys[i]) || !has_non_key {
                    return Err(Error::Restriction {
                        file: d.file.clone(),
                        row: *line,
                        message: String::from("a dimension row needs its key and at least one non-key value"),
                    });
                }
            }
            dim_tables.push(rows.into_iter().map(|(_, t)| t).collect());
        }
        let text = read(&self.fact.file)?;
        let fact = parse_table(&text, &self.fact.file, &schema, &schema.fact_schema())?;
        for (line, t) in &fact {
            if !t.defines_all(&layout.keys) || !layout.measures.iter().any(|a| t.defines(*a)) {
                return Err(Error::Restriction {
                    file: self.fact.file.clone(),
                    row: *line,
                    message: String::from("a fact row needs every key and at least one measure"),
                });
            }
        }
        Ok(Warehouse::new_validated(schema, dim_tables, fact.into_iter().map(|(_, t)| t).collect())?)
    }

    /// Builds the warehouse, reading table files relative to `base`.
    pub fn load_from_dir(&self, base: &Path) -> Result<Warehouse> {
        self.load_with(|file| read_file(&base.join(file)))
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), message: e.to_string() })
}

/// Parses one cell under a declared type. Empty cells are missing values.
pub fn parse_cell(text: &str, ty: ValueType) -> Option<Option<Value>> {
    if text.is_empty() {
        return Some(None);
    }
    let v = match ty {
        ValueType::Int => Value::Int(text.parse().ok()?),
        ValueType::Float => {
            let f: f64 = text.parse().ok()?;
            if !f.is_finite() {
                return None;
            }
            Value::Float(f)
        }
        ValueType::Text => Value::Text(text.to_string()),
    };
    Some(Some(v))
}

/// Parses a delimited table whose columns must belong to `allowed`.
/// Returns each row with its 1-based line number.
pub fn parse_table(text: &str, file: &str, schema: &StarSchemaDef, allowed: &[AttrId]) -> Result<Vec<(usize, Tuple)>> {
    let u = schema.universe();
    let csv_err = |row: usize, column: usize, message: String| Error::Csv { file: file.to_string(), row, column, message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| csv_err(1, 0, e.to_string()))?.clone();
    let mut columns = Vec::with_capacity(header.len());
    let mut seen = BTreeSet::new();
    for (j, name) in header.iter().enumerate() {
        let a = u
            .id(name)
            .filter(|a| allowed.contains(a))
            .ok_or_else(|| csv_err(1, j + 1, format!("`{name}` is not an attribute of this table")))?;
        if !seen.insert(a) {
            return Err(csv_err(1, j + 1, format!("column `{name}` appears twice")));
        }
        columns.push(a);
    }
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let line = n + 2;
        let record = record.map_err(|e| {
            let row = e.position().map_or(line, |p| p.line() as usize);
            csv_err(row, 0, e.to_string())
        })?;
        let line = record.position().map_or(line, |p| p.line() as usize);
        let mut pairs = Vec::with_capacity(columns.len());
        for (j, (a, cell)) in columns.iter().zip(record.iter()).enumerate() {
            let ty = u.info(*a).ty;
            match parse_cell(cell, ty) {
                Some(Some(v)) => pairs.push((*a, v)),
                Some(None) => {}
                None => {
                    return Err(Error::Type {
                        file: file.to_string(),
                        row: line,
                        column: j + 1,
                        value: cell.to_string(),
                        expected: ty.name(),
                    })
                }
            }
        }
        rows.push((line, Tuple::from_pairs(pairs)));
    }
    Ok(rows)
}

/// Reads a manifest file and loads the warehouse it describes.
pub fn load_warehouse(manifest_path: &Path) -> Result<(Manifest, Warehouse)> {
    let manifest = Manifest::from_json(&read_file(manifest_path)?)?;
    let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let w = manifest.load_from_dir(&base)?;
    Ok((manifest, w))
}

fn type_name(ty: ValueType) -> String {
    ty.name().to_string()
}

/// The manifest describing `w`, with table files `<dimension>.csv` and
/// `fact.csv`.
pub fn manifest_for(w: &Warehouse) -> Manifest {
    let schema = w.schema();
    let dimensions = schema
        .dimensions()
        .iter()
        .map(|d| DimensionSpec {
            name: d.name.clone(),
            key: d.key.name.clone(),
            file: format!("{}.csv", d.name),
            attributes: std::iter::once(&d.key)
                .chain(&d.non_keys)
                .map(|a| AttributeSpec { name: a.name.clone(), ty: type_name(a.ty) })
                .collect(),
        })
        .collect();
    let measures =
        schema.measures().iter().map(|m| AttributeSpec { name: m.name.clone(), ty: type_name(m.ty) }).collect();
    Manifest {
        dimensions,
        fact: FactSpec { file: String::from("fact.csv"), measures },
        options: Options { measure_fds: schema.measure_fds(), ..Options::default() },
    }
}

/// Renders rows as a delimited table over `columns`.
pub fn table_to_csv(w: &Warehouse, columns: &[AttrId], rows: &[Tuple]) -> String {
    let u = w.schema().universe();
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(columns.iter().map(|a| u.name(*a))).expect("in-memory write");
    for t in rows {
        out.write_record(columns.iter().map(|a| t.get(*a).map_or_else(String::new, |v| v.to_string())))
            .expect("in-memory write");
    }
    String::from_utf8(out.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

/// Writes `w` as a manifest plus table files into `dir`.
pub fn write_warehouse(w: &Warehouse, dir: &Path) -> Result<PathBuf> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |e: std::io::Error| Error::Io { path, message: e.to_string() }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let manifest = manifest_for(w);
    for (i, d) in manifest.dimensions.iter().enumerate() {
        let path = dir.join(&d.file);
        fs::write(&path, table_to_csv(w, &w.schema().dim_schema(i), w.dim_table(i))).map_err(io(&path))?;
    }
    let path = dir.join(&manifest.fact.file);
    fs::write(&path, table_to_csv(w, &w.schema().fact_schema(), w.fact_table())).map_err(io(&path))?;
    let path = dir.join("manifest.json");
    fs::write(&path, manifest.to_json()).map_err(io(&path))?;
    Ok(path)
}
