//! Column-oriented tables: CSV ingestion against a typed schema, imputation,
//! categorical encoding and seeded train/test splitting.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorCategory;
use crate::rng::Xorshift64Star;

/// Cell tokens treated as missing, besides an empty field.
pub const MISSING_TOKENS: [&str; 2] = ["", "NA"];

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("schema error: column '{column}' {problem}")]
    HeaderMismatch { column: String, problem: String },
    #[error(
        "parse error at row {row}, column '{column}': cannot read '{value}' as a finite number"
    )]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("type error: column '{column}' is not {expected}")]
    Type { column: String, expected: String },
    #[error("degenerate column '{0}': every value is missing")]
    DegenerateColumn(String),
    #[error("column '{0}' has missing cells; impute before encoding")]
    MissingCells(String),
    #[error("unknown category '{label}' in column '{column}'")]
    UnknownCategory { column: String, label: String },
    #[error("parameter error: {0}")]
    Param(String),
}

impl TabularError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            TabularError::Param(_) => ErrorCategory::Config,
            _ => ErrorCategory::Data,
        }
    }
}

type Result<T> = std::result::Result<T, TabularError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Feature,
    Target,
    Identifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    pub role: ColumnRole,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, kind: ColumnKind, role: ColumnRole) -> Self {
        Self {
            name: name.into(),
            kind,
            role,
        }
    }
}

/// Values of one column; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            Column::Numeric(v) => v[row].is_none(),
            Column::Categorical(v) => v[row].is_none(),
        }
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_missing(i)).count()
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&i| v[i]).collect()),
            Column::Categorical(v) => {
                Column::Categorical(rows.iter().map(|&i| v[i].clone()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Vec<ColumnSchema>,
    columns: Vec<Column>,
    n_rows: usize,
}

impl Table {
    /// Validates and assembles a table. Column kinds must match the schema,
    /// names must be unique, all columns must share one length and present
    /// numeric cells must be finite.
    pub fn new(schema: Vec<ColumnSchema>, columns: Vec<Column>) -> Result<Self> {
        if schema.len() != columns.len() {
            return Err(TabularError::Schema(format!(
                "{} schema entries for {} columns",
                schema.len(),
                columns.len()
            )));
        }
        check_unique_names(&schema)?;
        let n_rows = columns.first().map_or(0, Column::len);
        for (s, c) in schema.iter().zip(&columns) {
            if c.len() != n_rows {
                return Err(TabularError::Schema(format!(
                    "column '{}' has {} rows, expected {n_rows}",
                    s.name,
                    c.len()
                )));
            }
            if c.kind() != s.kind {
                return Err(TabularError::Type {
                    column: s.name.clone(),
                    expected: format!("{:?}", s.kind).to_lowercase(),
                });
            }
            if let Column::Numeric(v) = c {
                if let Some(row) = v.iter().position(|x| x.is_some_and(|x| !x.is_finite())) {
                    return Err(TabularError::Parse {
                        row: row + 1,
                        column: s.name.clone(),
                        value: format!("{}", v[row].unwrap()),
                    });
                }
            }
        }
        Ok(Self {
            schema,
            columns,
            n_rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|s| s.name == name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    pub fn column_schema(&self, name: &str) -> Option<&ColumnSchema> {
        self.column_index(name).map(|i| &self.schema[i])
    }

    /// The single target column, if exactly one is declared.
    pub fn target(&self) -> Option<&ColumnSchema> {
        let mut targets = self.schema.iter().filter(|s| s.role == ColumnRole::Target);
        match (targets.next(), targets.next()) {
            (Some(t), None) => Some(t),
            _ => None,
        }
    }

    /// Feature columns in schema order; identifiers and the target are excluded.
    pub fn feature_schema(&self) -> impl Iterator<Item = &ColumnSchema> {
        self.schema.iter().filter(|s| s.role == ColumnRole::Feature)
    }

    pub fn numeric_values(&self, name: &str) -> Result<&[Option<f64>]> {
        match self.column(name) {
            Some(Column::Numeric(v)) => Ok(v),
            Some(_) => Err(TabularError::Type {
                column: name.to_string(),
                expected: "numeric".into(),
            }),
            None => Err(TabularError::UnknownColumn(name.to_string())),
        }
    }

    pub fn categorical_values(&self, name: &str) -> Result<&[Option<String>]> {
        match self.column(name) {
            Some(Column::Categorical(v)) => Ok(v),
            Some(_) => Err(TabularError::Type {
                column: name.to_string(),
                expected: "categorical".into(),
            }),
            None => Err(TabularError::UnknownColumn(name.to_string())),
        }
    }

    /// New table holding the given rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Table {
        Table {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            n_rows: rows.len(),
        }
    }

    /// Replaces column `index` with `replacement` (possibly several columns).
    fn splice(&self, index: usize, replacement: Vec<(ColumnSchema, Column)>) -> Result<Table> {
        let mut schema = Vec::with_capacity(self.schema.len() + replacement.len());
        let mut columns = Vec::with_capacity(schema.capacity());
        for (i, (s, c)) in self.schema.iter().zip(&self.columns).enumerate() {
            if i == index {
                for (rs, rc) in &replacement {
                    schema.push(rs.clone());
                    columns.push(rc.clone());
                }
            } else {
                schema.push(s.clone());
                columns.push(c.clone());
            }
        }
        Table::new(schema, columns)
    }

    pub fn with_column(&self, name: &str, column: Column) -> Result<Table> {
        let index = self
            .column_index(name)
            .ok_or_else(|| TabularError::UnknownColumn(name.to_string()))?;
        let mut schema = self.schema[index].clone();
        schema.kind = column.kind();
        self.splice(index, vec![(schema, column)])
    }
}

fn check_unique_names(schema: &[ColumnSchema]) -> Result<()> {
    let mut seen = HashSet::new();
    for s in schema {
        if !seen.insert(s.name.as_str()) {
            return Err(TabularError::Schema(format!(
                "duplicate column '{}'",
                s.name
            )));
        }
    }
    Ok(())
}

/// Parses a schema file: a JSON array of `{name, kind, role}` objects.
pub fn parse_schema(json: &str) -> Result<Vec<ColumnSchema>> {
    let schema: Vec<ColumnSchema> =
        serde_json::from_str(json).map_err(|e| TabularError::Schema(e.to_string()))?;
    check_unique_names(&schema)?;
    Ok(schema)
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<ColumnSchema>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| TabularError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_schema(&text)
}

pub fn load_csv(path: impl AsRef<Path>, schema: &[ColumnSchema]) -> Result<Table> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TabularError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, schema)
}

/// Reads comma-separated data whose header must name exactly the schema's
/// columns, in any order. Columns come back in schema order.
pub fn read_csv<R: Read>(reader: R, schema: &[ColumnSchema]) -> Result<Table> {
    check_unique_names(schema)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| TabularError::Csv(e.to_string()))?
        .clone();
    let positions: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h, i)).collect();
    if positions.len() != header.len() {
        return Err(TabularError::Schema("header repeats a column name".into()));
    }
    for s in schema {
        if !positions.contains_key(s.name.as_str()) {
            return Err(TabularError::HeaderMismatch {
                column: s.name.clone(),
                problem: "is missing from the CSV header".into(),
            });
        }
    }
    if let Some(extra) = header.iter().find(|h| !schema.iter().any(|s| s.name == *h)) {
        return Err(TabularError::HeaderMismatch {
            column: extra.to_string(),
            problem: "is in the CSV header but not in the schema".into(),
        });
    }

    let mut columns: Vec<Column> = schema
        .iter()
        .map(|s| match s.kind {
            ColumnKind::Numeric => Column::Numeric(Vec::new()),
            ColumnKind::Categorical => Column::Categorical(Vec::new()),
        })
        .collect();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| TabularError::Csv(e.to_string()))?;
        for (s, col) in schema.iter().zip(columns.iter_mut()) {
            let raw = &record[positions[s.name.as_str()]];
            let missing = MISSING_TOKENS.contains(&raw);
            match col {
                Column::Numeric(v) => {
                    if missing {
                        v.push(None);
                    } else {
                        let x = raw
                            .trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| TabularError::Parse {
                                row: row + 1,
                                column: s.name.clone(),
                                value: raw.to_string(),
                            })?;
                        v.push(Some(x));
                    }
                }
                Column::Categorical(v) => v.push((!missing).then(|| raw.to_string())),
            }
        }
    }
    Table::new(schema.to_vec(), columns)
}

/// Writes the table as CSV in schema order; missing cells are empty fields.
pub fn write_csv<W: Write>(table: &Table, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| TabularError::Csv(e.to_string());
    w.write_record(table.schema.iter().map(|s| s.name.as_str()))
        .map_err(csv_err)?;
    let mut record: Vec<String> = Vec::with_capacity(table.n_cols());
    for row in 0..table.n_rows {
        record.clear();
        for c in &table.columns {
            record.push(match c {
                Column::Numeric(v) => v[row].map(|x| x.to_string()).unwrap_or_default(),
                Column::Categorical(v) => v[row].clone().unwrap_or_default(),
            });
        }
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|source| TabularError::Io {
        path: "<writer>".into(),
        source,
    })
}

pub fn save_csv(table: &Table, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| TabularError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv(table, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputeStrategy {
    #[default]
    Mean,
    Median,
}

/// The fill value for a numeric column: mean or median of the present cells.
pub fn impute_value(column: &str, values: &[Option<f64>], strategy: ImputeStrategy) -> Result<f64> {
    let mut present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(TabularError::DegenerateColumn(column.to_string()));
    }
    Ok(match strategy {
        ImputeStrategy::Mean => present.iter().sum::<f64>() / present.len() as f64,
        ImputeStrategy::Median => {
            present.sort_by(f64::total_cmp);
            let n = present.len();
            if n % 2 == 1 {
                present[n / 2]
            } else {
                0.5 * (present[n / 2 - 1] + present[n / 2])
            }
        }
    })
}

/// Fills every missing cell of a numeric column with the statistic of its
/// present cells. Present cells are untouched.
pub fn impute(table: &Table, column: &str, strategy: ImputeStrategy) -> Result<Table> {
    let values = table.numeric_values(column)?;
    let fill = impute_value(column, values, strategy)?;
    let filled = values.iter().map(|v| Some(v.unwrap_or(fill))).collect();
    table.with_column(column, Column::Numeric(filled))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingMode {
    Integer,
    OneHot,
}

/// Category roster of a categorical column, ordered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderMap {
    pub column: String,
    pub categories: Vec<String>,
    pub mode: EncodingMode,
}

impl EncoderMap {
    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.categories
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| TabularError::UnknownCategory {
                column: self.column.clone(),
                label: label.to_string(),
            })
    }

    /// Names of the numeric columns this encoder emits.
    pub fn output_names(&self) -> Vec<String> {
        match self.mode {
            EncodingMode::Integer => vec![self.column.clone()],
            EncodingMode::OneHot => self
                .categories
                .iter()
                .map(|c| format!("{}={}", self.column, c))
                .collect(),
        }
    }

    /// Encoded values of one label: a single index, or a one-hot vector.
    pub fn encode(&self, label: &str) -> Result<Vec<f64>> {
        let idx = self.index_of(label)?;
        Ok(match self.mode {
            EncodingMode::Integer => vec![idx as f64],
            EncodingMode::OneHot => {
                let mut v = vec![0.0; self.categories.len()];
                v[idx] = 1.0;
                v
            }
        })
    }
}

pub fn fit_encoder(table: &Table, column: &str, mode: EncodingMode) -> Result<EncoderMap> {
    let values = table.categorical_values(column)?;
    let mut categories: Vec<String> = Vec::new();
    for v in values {
        let label = v
            .as_ref()
            .ok_or_else(|| TabularError::MissingCells(column.to_string()))?;
        if !categories.contains(label) {
            categories.push(label.clone());
        }
    }
    Ok(EncoderMap {
        column: column.to_string(),
        categories,
        mode,
    })
}

pub fn apply_encoder(table: &Table, enc: &EncoderMap) -> Result<Table> {
    let values = table.categorical_values(&enc.column)?;
    let index = table
        .column_index(&enc.column)
        .expect("column checked above");
    let role = table.schema[index].role;
    let mut codes = Vec::with_capacity(values.len());
    for v in values {
        let label = v
            .as_ref()
            .ok_or_else(|| TabularError::MissingCells(enc.column.clone()))?;
        codes.push(enc.index_of(label)?);
    }
    let replacement = match enc.mode {
        EncodingMode::Integer => vec![(
            ColumnSchema::new(enc.column.clone(), ColumnKind::Numeric, role),
            Column::Numeric(codes.iter().map(|&c| Some(c as f64)).collect()),
        )],
        EncodingMode::OneHot => enc
            .output_names()
            .into_iter()
            .enumerate()
            .map(|(k, name)| {
                (
                    ColumnSchema::new(name, ColumnKind::Numeric, role),
                    Column::Numeric(
                        codes
                            .iter()
                            .map(|&c| Some(if c == k { 1.0 } else { 0.0 }))
                            .collect(),
                    ),
                )
            })
            .collect(),
    };
    table.splice(index, replacement)
}

/// Seeded shuffle of `0..n` split into `(train, test)` index lists, the test
/// side holding `round(test_fraction * n)` rows.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(TabularError::Param(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if n < 2 {
        return Err(TabularError::Param(format!("cannot split {n} rows")));
    }
    let n_test = (test_fraction * n as f64).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(TabularError::Param(format!(
            "test_fraction {test_fraction} of {n} rows leaves one side empty"
        )));
    }
    let perm = Xorshift64Star::new(seed).permutation(n);
    let test = perm[..n_test].to_vec();
    let train = perm[n_test..].to_vec();
    Ok((train, test))
}

pub fn split_train_test(table: &Table, test_fraction: f64, seed: u64) -> Result<(Table, Table)> {
    let (train, test) = split_indices(table.n_rows, test_fraction, seed)?;
    Ok((table.select_rows(&train), table.select_rows(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn numeric_table(values: Vec<Option<f64>>) -> Table {
        Table::new(
            vec![ColumnSchema::new(
                "x",
                ColumnKind::Numeric,
                ColumnRole::Feature,
            )],
            vec![Column::Numeric(values)],
        )
        .unwrap()
    }

    fn sex_table(labels: &[&str]) -> Table {
        Table::new(
            vec![ColumnSchema::new(
                "Sex",
                ColumnKind::Categorical,
                ColumnRole::Feature,
            )],
            vec![Column::Categorical(
                labels.iter().map(|s| Some(s.to_string())).collect(),
            )],
        )
        .unwrap()
    }

    fn diabetes_schema() -> Vec<ColumnSchema> {
        vec![
            ColumnSchema::new(
                "Name of patient",
                ColumnKind::Categorical,
                ColumnRole::Identifier,
            ),
            ColumnSchema::new("BMI", ColumnKind::Numeric, ColumnRole::Feature),
            ColumnSchema::new("Sex", ColumnKind::Categorical, ColumnRole::Feature),
            ColumnSchema::new("Medications", ColumnKind::Categorical, ColumnRole::Target),
        ]
    }

    #[test]
    fn empty_cell_is_missing() {
        let csv = "Name of patient,BMI,Sex,Medications\n\
                   a,22.5,female,Insulin\n\
                   b,,male,Biguanides\n\
                   c,31,NA,Insulin\n";
        let t = read_csv(csv.as_bytes(), &diabetes_schema()).unwrap();
        assert_eq!(t.n_rows(), 3);
        let bmi = t.numeric_values("BMI").unwrap();
        assert_eq!(bmi, &[Some(22.5), None, Some(31.0)]);
        assert!(t.column("Sex").unwrap().is_missing(2));
    }

    #[test]
    fn header_order_does_not_matter_and_crlf_is_accepted() {
        let csv = "Medications,Sex,BMI,Name of patient\r\nInsulin,male,20,x\r\n";
        let t = read_csv(csv.as_bytes(), &diabetes_schema()).unwrap();
        assert_eq!(t.schema()[1].name, "BMI");
        assert_eq!(t.numeric_values("BMI").unwrap(), &[Some(20.0)]);
    }

    #[test]
    fn missing_target_header_is_schema_error() {
        let csv = "Name of patient,BMI,Sex\na,1,male\n";
        match read_csv(csv.as_bytes(), &diabetes_schema()) {
            Err(TabularError::HeaderMismatch { column, .. }) => assert_eq!(column, "Medications"),
            other => panic!("expected header mismatch, got {other:?}"),
        }
    }

    #[test]
    fn extra_header_column_is_schema_error() {
        let csv = "Name of patient,BMI,Sex,Medications,Extra\na,1,male,Insulin,9\n";
        match read_csv(csv.as_bytes(), &diabetes_schema()) {
            Err(TabularError::HeaderMismatch { column, .. }) => assert_eq!(column, "Extra"),
            other => panic!("expected header mismatch, got {other:?}"),
        }
    }

    #[test]
    fn bad_numeric_cell_reports_coordinates() {
        let csv = "Name of patient,BMI,Sex,Medications\na,1,male,Insulin\nb,abc,male,Insulin\n";
        match read_csv(csv.as_bytes(), &diabetes_schema()) {
            Err(TabularError::Parse { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "BMI", "abc"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let csv = "Name of patient,BMI,Sex,Medications\na,inf,male,Insulin\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &diabetes_schema()),
            Err(TabularError::Parse { .. })
        ));
    }

    #[test]
    fn schema_json_round_trip() {
        let json = r#"[{"name":"BMI","kind":"numeric","role":"feature"},
                       {"name":"Medications","kind":"categorical","role":"target"}]"#;
        let s = parse_schema(json).unwrap();
        assert_eq!(s[1].role, ColumnRole::Target);
        assert!(parse_schema(r#"[{"name":"a","kind":"numeric","role":"feature","x":1}]"#).is_err());
    }

    #[test]
    fn mean_imputation() {
        let t = impute(
            &numeric_table(vec![Some(1.0), None, Some(3.0)]),
            "x",
            ImputeStrategy::Mean,
        )
        .unwrap();
        assert_eq!(
            t.numeric_values("x").unwrap(),
            &[Some(1.0), Some(2.0), Some(3.0)]
        );
    }

    #[test]
    fn median_imputation() {
        let t = impute(
            &numeric_table(vec![Some(1.0), Some(2.0), None, Some(9.0)]),
            "x",
            ImputeStrategy::Median,
        )
        .unwrap();
        assert_eq!(
            t.numeric_values("x").unwrap(),
            &[Some(1.0), Some(2.0), Some(2.0), Some(9.0)]
        );
        assert_eq!(
            impute_value("x", &[Some(4.0), Some(1.0)], ImputeStrategy::Median).unwrap(),
            2.5
        );
    }

    #[test]
    fn all_missing_is_degenerate() {
        let err = impute(&numeric_table(vec![None, None]), "x", ImputeStrategy::Mean).unwrap_err();
        assert!(matches!(err, TabularError::DegenerateColumn(c) if c == "x"));
    }

    #[test]
    fn imputing_categorical_is_type_error() {
        let err = impute(&sex_table(&["male"]), "Sex", ImputeStrategy::Mean).unwrap_err();
        assert!(matches!(err, TabularError::Type { .. }));
    }

    #[test]
    fn encoder_categories_follow_first_appearance() {
        let enc = fit_encoder(
            &sex_table(&["female", "male", "female"]),
            "Sex",
            EncodingMode::OneHot,
        )
        .unwrap();
        assert_eq!(enc.categories, vec!["female", "male"]);
        let single =
            fit_encoder(&sex_table(&["male", "male"]), "Sex", EncodingMode::Integer).unwrap();
        assert_eq!(single.categories.len(), 1);
        let meds = sex_table(&[
            "Diet and Lifestyle Modification",
            "Secretagogues",
            "Biguanides",
            "Secretagogues",
            "Insulin",
        ]);
        assert_eq!(
            fit_encoder(&meds, "Sex", EncodingMode::Integer)
                .unwrap()
                .categories
                .len(),
            4
        );
    }

    #[test]
    fn encoder_rejects_missing_and_numeric() {
        let t = Table::new(
            vec![ColumnSchema::new(
                "Sex",
                ColumnKind::Categorical,
                ColumnRole::Feature,
            )],
            vec![Column::Categorical(vec![Some("male".into()), None])],
        )
        .unwrap();
        assert!(matches!(
            fit_encoder(&t, "Sex", EncodingMode::Integer),
            Err(TabularError::MissingCells(_))
        ));
        assert!(matches!(
            fit_encoder(&numeric_table(vec![Some(1.0)]), "x", EncodingMode::Integer),
            Err(TabularError::Type { .. })
        ));
    }

    #[test]
    fn one_hot_and_integer_codes() {
        let t = sex_table(&["female", "male"]);
        let mut enc = fit_encoder(&t, "Sex", EncodingMode::OneHot).unwrap();
        assert_eq!(enc.encode("female").unwrap(), vec![1.0, 0.0]);
        let one_hot = apply_encoder(&t, &enc).unwrap();
        assert_eq!(one_hot.n_cols(), 2);
        assert_eq!(
            one_hot.numeric_values("Sex=female").unwrap(),
            &[Some(1.0), Some(0.0)]
        );
        assert_eq!(
            one_hot.numeric_values("Sex=male").unwrap(),
            &[Some(0.0), Some(1.0)]
        );

        enc.mode = EncodingMode::Integer;
        assert_eq!(enc.encode("male").unwrap(), vec![1.0]);
        let integer = apply_encoder(&t, &enc).unwrap();
        assert_eq!(
            integer.numeric_values("Sex").unwrap(),
            &[Some(0.0), Some(1.0)]
        );
    }

    #[test]
    fn unseen_label_is_an_error() {
        let enc = fit_encoder(
            &sex_table(&["female", "male"]),
            "Sex",
            EncodingMode::Integer,
        )
        .unwrap();
        let err = apply_encoder(&sex_table(&["unknown"]), &enc).unwrap_err();
        assert!(matches!(err, TabularError::UnknownCategory { label, .. } if label == "unknown"));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let t = numeric_table((0..10).map(|i| Some(i as f64)).collect());
        let (train, test) = split_train_test(&t, 0.2, 1).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (8, 2));
        let (train2, test2) = split_train_test(&t, 0.2, 1).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
    }

    #[test]
    fn different_seeds_give_different_permutations() {
        let (train1, test1) = split_indices(100, 0.2, 1).unwrap();
        let (train2, test2) = split_indices(100, 0.2, 2).unwrap();
        assert_eq!((train1.len(), test1.len()), (80, 20));
        assert_eq!((train2.len(), test2.len()), (80, 20));
        let mut s1 = test1.clone();
        let mut s2 = test2.clone();
        s1.sort_unstable();
        s2.sort_unstable();
        assert_ne!(s1, s2);
        assert_ne!(train1, train2);
    }

    #[test]
    fn split_parameter_errors() {
        for f in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                split_indices(10, f, 0),
                Err(TabularError::Param(_))
            ));
        }
        assert!(matches!(
            split_indices(1, 0.5, 0),
            Err(TabularError::Param(_))
        ));
    }

    fn arb_column() -> impl Strategy<Value = Vec<Option<f64>>> {
        prop::collection::vec(prop::option::weighted(0.7, -1e6f64..1e6), 1..60)
            .prop_filter("needs a present value", |v| v.iter().any(Option::is_some))
    }

    proptest! {
        #[test]
        fn imputation_is_idempotent(values in arb_column(), median in any::<bool>()) {
            let strategy = if median { ImputeStrategy::Median } else { ImputeStrategy::Mean };
            let once = impute(&numeric_table(values), "x", strategy).unwrap();
            let twice = impute(&once, "x", strategy).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn mean_imputation_preserves_mean(values in arb_column()) {
            let before = impute_value("x", &values, ImputeStrategy::Mean).unwrap();
            let t = impute(&numeric_table(values), "x", ImputeStrategy::Mean).unwrap();
            let after = impute_value("x", t.numeric_values("x").unwrap(), ImputeStrategy::Mean).unwrap();
            prop_assert!((after - before).abs() <= 1e-12 * before.abs().max(1.0));
        }

        #[test]
        fn integer_codes_decode_to_labels(labels in prop::collection::vec("[a-e]{1,2}", 1..40)) {
            let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
            let t = sex_table(&refs);
            let enc = fit_encoder(&t, "Sex", EncodingMode::Integer).unwrap();
            let coded = apply_encoder(&t, &enc).unwrap();
            let decoded: Vec<String> = coded
                .numeric_values("Sex")
                .unwrap()
                .iter()
                .map(|c| enc.categories[c.unwrap() as usize].clone())
                .collect();
            prop_assert_eq!(decoded, labels);
        }

        #[test]
        fn split_partitions_rows(n in 2usize..300, frac in 0.05f64..0.95, seed in any::<u64>()) {
            if let Ok((train, test)) = split_indices(n, frac, seed) {
                let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                prop_assert_eq!(test.len(), (frac * n as f64).round() as usize);
            }
        }
    }
}
