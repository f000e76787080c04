//! Feature selection (p-value screen plus multicollinearity pruning), min-max
//! scaling and PCA. Everything here is fitted on training rows and replayed
//! unchanged on held-out rows through [`PreprocessState`].
//!
//! The fixed order is impute → encode → select → scale. PCA is fitted on the
//! scaled training features and used only for the 2-D visualisation.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, ErrorCategory};
use crate::linalg::{sample_covariance, symmetric_eigen, JACOBI_TOLERANCE};
use crate::matrix::Matrix;
use crate::stats::{chi_square_survival, f_survival};
use crate::tabular::{
    fit_encoder, impute_value, Column, ColumnKind, ColumnRole, ColumnSchema, EncoderMap,
    EncodingMode, ImputeStrategy, Table, TabularError, MISSING_TOKENS,
};

pub const DEFAULT_P_THRESHOLD: f64 = 0.05;
pub const DEFAULT_CORR_THRESHOLD: f64 = 0.9;
pub const DEFAULT_PCA_COMPONENTS: usize = 2;
pub const PREPROCESS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("zero-variance input: {0}")]
    ZeroVariance(String),
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("feature selection dropped every feature")]
    EmptySelection,
    #[error("shape error: expected {expected} features, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("parameter error: {0}")]
    Param(String),
}

impl PreprocessError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            PreprocessError::Param(_) => ErrorCategory::Config,
            _ => ErrorCategory::Data,
        }
    }
}

type Result<T, E = PreprocessError> = std::result::Result<T, E>;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&x| x == v[0])
}

/// Pearson correlation with population standard deviations:
/// `Σ(aᵢ−Ā)(bᵢ−B̄) / (n·σa·σb)`, clamped to `[-1, 1]`.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(PreprocessError::Shape {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(PreprocessError::Param(
            "correlation needs at least 2 values".into(),
        ));
    }
    if is_constant(a) || is_constant(b) {
        return Err(PreprocessError::ZeroVariance("constant sequence".into()));
    }
    let n = a.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let sd_a = (saa / n).sqrt();
    let sd_b = (sbb / n).sqrt();
    Ok((sab / (n * (sd_a * sd_b))).clamp(-1.0, 1.0))
}

fn class_groups(labels: &[usize]) -> Result<BTreeMap<usize, Vec<usize>>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        groups.entry(c).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(PreprocessError::DegenerateLabels(format!(
            "{} distinct class(es); at least 2 required",
            groups.len()
        )));
    }
    if let Some((c, _)) = groups.iter().find(|(_, rows)| rows.len() < 2) {
        return Err(PreprocessError::DegenerateLabels(format!(
            "class {c} has fewer than 2 samples"
        )));
    }
    Ok(groups)
}

fn anova_from_groups(values: &[f64], groups: &BTreeMap<usize, Vec<usize>>) -> f64 {
    let n = values.len() as f64;
    let k = groups.len() as f64;
    let grand = mean(values);
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for rows in groups.values() {
        let m = rows.iter().map(|&i| values[i]).sum::<f64>() / rows.len() as f64;
        ssb += rows.len() as f64 * (m - grand) * (m - grand);
        ssw += rows.iter().map(|&i| (values[i] - m).powi(2)).sum::<f64>();
    }
    if ssw == 0.0 {
        return if ssb == 0.0 { 1.0 } else { 0.0 };
    }
    let f = (ssb / (k - 1.0)) / (ssw / (n - k));
    f_survival(f, k - 1.0, n - k)
}

/// One-way ANOVA F-test p-value of class-mean equality for one feature.
pub fn anova_p_value(values: &[f64], labels: &[usize]) -> Result<f64> {
    if values.len() != labels.len() {
        return Err(PreprocessError::Shape {
            expected: labels.len(),
            found: values.len(),
        });
    }
    Ok(anova_from_groups(values, &class_groups(labels)?))
}

/// Chi-square test of independence between a coded categorical feature and
/// the class labels.
pub fn chi_square_p_value(codes: &[f64], labels: &[usize]) -> Result<f64> {
    if codes.len() != labels.len() {
        return Err(PreprocessError::Shape {
            expected: labels.len(),
            found: codes.len(),
        });
    }
    let groups = class_groups(labels)?;
    let class_pos: HashMap<usize, usize> =
        groups.keys().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut levels: Vec<f64> = Vec::new();
    for &c in codes {
        if !levels.iter().any(|&l| l.to_bits() == c.to_bits()) {
            levels.push(c);
        }
    }
    if levels.len() < 2 {
        return Ok(1.0);
    }
    let mut table = vec![vec![0.0f64; groups.len()]; levels.len()];
    for (&c, &y) in codes.iter().zip(labels) {
        let r = levels
            .iter()
            .position(|&l| l.to_bits() == c.to_bits())
            .unwrap();
        table[r][class_pos[&y]] += 1.0;
    }
    let n = codes.len() as f64;
    let row_tot: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_tot: Vec<f64> = (0..groups.len())
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    let mut stat = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = row_tot[r] * col_tot[j] / n;
            if expected > 0.0 {
                stat += (obs - expected).powi(2) / expected;
            }
        }
    }
    let df = ((levels.len() - 1) * (groups.len() - 1)) as f64;
    Ok(chi_square_survival(stat, df))
}

/// ANOVA p-value of every column of `features` against `labels`.
pub fn feature_p_values(features: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
    if features.rows() != labels.len() {
        return Err(PreprocessError::Shape {
            expected: labels.len(),
            found: features.rows(),
        });
    }
    let groups = class_groups(labels)?;
    Ok((0..features.cols())
        .map(|j| anova_from_groups(&features.column(j), &groups))
        .collect())
}

/// How a feature column should be tested against the labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    HighP,
    Collinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedFeature {
    pub name: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub names: Vec<String>,
    pub p_values: Vec<f64>,
    /// Pairwise Pearson correlations; rows and columns of constant features are 0.
    pub correlation: Matrix,
    pub dropped: Vec<DroppedFeature>,
    pub selected: Vec<String>,
}

impl FeatureReport {
    pub fn selected_indices(&self) -> Vec<usize> {
        self.selected
            .iter()
            .map(|s| self.names.iter().position(|n| n == s).unwrap())
            .collect()
    }
}

fn correlation_matrix(features: &Matrix) -> Matrix {
    let d = features.cols();
    let columns: Vec<Vec<f64>> = (0..d).map(|j| features.column(j)).collect();
    let mut corr = Matrix::zeros(d, d);
    for i in 0..d {
        if !is_constant(&columns[i]) {
            corr[(i, i)] = 1.0;
        }
        for j in (i + 1)..d {
            let r = pearson_correlation(&columns[i], &columns[j]).unwrap_or(0.0);
            corr[(i, j)] = r;
            corr[(j, i)] = r;
        }
    }
    corr
}

/// Drops features whose p-value is at least `p_threshold`, then repeatedly
/// resolves the most correlated surviving pair with `|r| > corr_threshold` by
/// dropping the member with the larger mean absolute correlation to the other
/// survivors. Ties favour keeping the feature that comes first.
pub fn select_features(
    features: &Matrix,
    names: &[String],
    kinds: &[FeatureKind],
    labels: &[usize],
    p_threshold: f64,
    corr_threshold: f64,
) -> Result<FeatureReport> {
    for (label, t) in [
        ("p_threshold", p_threshold),
        ("corr_threshold", corr_threshold),
    ] {
        if !(t > 0.0 && t <= 1.0) {
            return Err(PreprocessError::Param(format!(
                "{label} must lie in (0, 1], got {t}"
            )));
        }
    }
    let d = features.cols();
    if names.len() != d || kinds.len() != d {
        return Err(PreprocessError::Shape {
            expected: d,
            found: names.len().min(kinds.len()),
        });
    }
    if features.rows() != labels.len() {
        return Err(PreprocessError::Shape {
            expected: labels.len(),
            found: features.rows(),
        });
    }
    let groups = class_groups(labels)?;
    let mut p_values = Vec::with_capacity(d);
    for j in 0..d {
        let col = features.column(j);
        p_values.push(match kinds[j] {
            FeatureKind::Continuous => anova_from_groups(&col, &groups),
            FeatureKind::Categorical => chi_square_p_value(&col, labels)?,
        });
    }
    let correlation = correlation_matrix(features);

    let mut dropped = Vec::new();
    let mut alive: Vec<usize> = Vec::new();
    for j in 0..d {
        if p_values[j] >= p_threshold {
            dropped.push(DroppedFeature {
                name: names[j].clone(),
                reason: DropReason::HighP,
            });
        } else {
            alive.push(j);
        }
    }

    loop {
        let mut worst: Option<(usize, usize, f64)> = None;
        for (a, &i) in alive.iter().enumerate() {
            for &j in &alive[a + 1..] {
                let r = correlation[(i, j)].abs();
                if r > corr_threshold && worst.is_none_or(|(_, _, w)| r > w) {
                    worst = Some((i, j, r));
                }
            }
        }
        let Some((i, j, _)) = worst else { break };
        let mean_abs = |f: usize| -> f64 {
            let others: Vec<usize> = alive.iter().copied().filter(|&o| o != f).collect();
            others
                .iter()
                .map(|&o| correlation[(f, o)].abs())
                .sum::<f64>()
                / others.len() as f64
        };
        // `i` precedes `j`; on a tie the later one goes.
        let victim = if mean_abs(i) > mean_abs(j) { i } else { j };
        alive.retain(|&f| f != victim);
        dropped.push(DroppedFeature {
            name: names[victim].clone(),
            reason: DropReason::Collinear,
        });
    }

    if alive.is_empty() {
        return Err(PreprocessError::EmptySelection);
    }
    Ok(FeatureReport {
        names: names.to_vec(),
        p_values,
        correlation,
        dropped,
        selected: alive.iter().map(|&j| names[j].clone()).collect(),
    })
}

/// Per-feature `(min, max)` fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn min_max_fit(features: &Matrix) -> Result<MinMaxScaler> {
    if features.rows() == 0 {
        return Err(PreprocessError::Param(
            "min-max fit needs at least one row".into(),
        ));
    }
    let mut min = features.row(0).to_vec();
    let mut max = min.clone();
    for r in features.row_iter().skip(1) {
        for (j, &v) in r.iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(MinMaxScaler { min, max })
}

impl MinMaxScaler {
    pub fn transform_value(&self, j: usize, x: f64) -> f64 {
        let range = self.max[j] - self.min[j];
        if range == 0.0 {
            0.0
        } else {
            (x - self.min[j]) / range
        }
    }
}

/// `x' = (x − min)/(max − min)`; constant features map to 0 and values
/// outside the fitted range are not clamped.
pub fn min_max_transform(features: &Matrix, scaler: &MinMaxScaler) -> Result<Matrix> {
    if features.cols() != scaler.min.len() {
        return Err(PreprocessError::Shape {
            expected: scaler.min.len(),
            found: features.cols(),
        });
    }
    let mut out = features.clone();
    for i in 0..out.rows() {
        for (j, v) in out.row_mut(i).iter_mut().enumerate() {
            *v = scaler.transform_value(j, *v);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaState {
    pub mean: Vec<f64>,
    /// `k × d`, rows orthonormal, ordered by descending eigenvalue.
    pub components: Matrix,
    /// All `d` covariance eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
}

impl PcaState {
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().sum();
        let k = self.components.rows();
        self.eigenvalues[..k]
            .iter()
            .map(|&e| if total > 0.0 { e / total } else { 0.0 })
            .collect()
    }
}

/// Top-`k` principal axes of the sample covariance (cyclic Jacobi). Each
/// component's largest-magnitude entry is made positive.
pub fn pca_fit(features: &Matrix, k: usize) -> Result<PcaState> {
    let d = features.cols();
    if k == 0 || k > d {
        return Err(PreprocessError::Param(format!(
            "PCA needs 1 <= k <= {d}, got {k}"
        )));
    }
    if features.rows() < 2 {
        return Err(PreprocessError::Param("PCA needs at least 2 rows".into()));
    }
    let mean = features.column_means();
    let cov = sample_covariance(features, &mean);
    let eig = symmetric_eigen(&cov, JACOBI_TOLERANCE);
    let mut components = Matrix::zeros(k, d);
    for c in 0..k {
        let v = eig.vectors.row(c);
        let mut lead = 0;
        for j in 1..d {
            if v[j].abs() > v[lead].abs() {
                lead = j;
            }
        }
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components[(c, j)] = sign * v[j];
        }
    }
    Ok(PcaState {
        mean,
        components,
        eigenvalues: eig.values,
    })
}

/// `(X − mean) · componentsᵀ`.
pub fn pca_transform(features: &Matrix, pca: &PcaState) -> Result<Matrix> {
    let d = pca.mean.len();
    if features.cols() != d {
        return Err(PreprocessError::Shape {
            expected: d,
            found: features.cols(),
        });
    }
    let k = pca.components.rows();
    let mut out = Matrix::zeros(features.rows(), k);
    let mut centered = vec![0.0; d];
    for (i, r) in features.row_iter().enumerate() {
        for ((c, &v), &m) in centered.iter_mut().zip(r).zip(&pca.mean) {
            *c = v - m;
        }
        for c in 0..k {
            out[(i, c)] = crate::linalg::dot(&centered, pca.components.row(c));
        }
    }
    Ok(out)
}

/// How categorical feature columns are encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureEncoding {
    /// Integer codes for columns with at most two categories, one-hot otherwise.
    #[default]
    Auto,
    Integer,
    OneHot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessOptions {
    pub imputation: ImputeStrategy,
    pub encoding: FeatureEncoding,
    pub p_threshold: f64,
    pub corr_threshold: f64,
    pub scaling: bool,
    /// Number of PCA components fitted for visualisation; 0 disables PCA.
    pub pca_components: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            imputation: ImputeStrategy::Mean,
            encoding: FeatureEncoding::Auto,
            p_threshold: DEFAULT_P_THRESHOLD,
            corr_threshold: DEFAULT_CORR_THRESHOLD,
            scaling: true,
            pca_components: DEFAULT_PCA_COMPONENTS,
        }
    }
}

/// Everything fitted on the training rows, replayable on any later input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessState {
    pub schema_version: u32,
    /// Raw feature columns the state was fitted on, in schema order.
    pub input_columns: Vec<ColumnSchema>,
    pub target: String,
    pub class_labels: Vec<String>,
    pub impute_values: BTreeMap<String, f64>,
    /// Most frequent training label per categorical feature, used for missing cells.
    pub categorical_fill: BTreeMap<String, String>,
    pub encoders: Vec<EncoderMap>,
    /// Encoded feature names before selection.
    pub encoded_features: Vec<String>,
    pub feature_report: FeatureReport,
    pub selected_features: Vec<String>,
    pub scaler: Option<MinMaxScaler>,
    pub pca: Option<PcaState>,
}

/// A fitted preprocessing state plus the transformed training data.
#[derive(Debug, Clone)]
pub struct FittedPreprocess {
    pub state: PreprocessState,
    pub features: Matrix,
    pub labels: Vec<usize>,
}

fn mode_label(
    column: &str,
    values: &[Option<String>],
) -> std::result::Result<String, TabularError> {
    let mut counts: Vec<(String, usize)> = Vec::new();
    for v in values.iter().flatten() {
        match counts.iter_mut().find(|(l, _)| l == v) {
            Some((_, c)) => *c += 1,
            None => counts.push((v.clone(), 1)),
        }
    }
    let mut best: Option<&(String, usize)> = None;
    for entry in &counts {
        if best.is_none_or(|b| entry.1 > b.1) {
            best = Some(entry);
        }
    }
    best.map(|(l, _)| l.clone())
        .ok_or_else(|| TabularError::DegenerateColumn(column.to_string()))
}

impl PreprocessState {
    /// Fits imputation, encoding, selection, scaling and (optionally) PCA on
    /// `train`, which must have exactly one target column.
    pub fn fit(train: &Table, options: &PreprocessOptions) -> Result<FittedPreprocess, Error> {
        let target = train
            .target()
            .ok_or_else(|| Error::Config("table must declare exactly one target column".into()))?
            .clone();
        if target.kind != ColumnKind::Categorical {
            return Err(TabularError::Type {
                column: target.name.clone(),
                expected: "categorical".into(),
            }
            .into());
        }
        let target_values = train.categorical_values(&target.name)?;
        if target_values.iter().any(Option::is_none) {
            return Err(TabularError::MissingCells(target.name.clone()).into());
        }
        let target_encoder = fit_encoder(train, &target.name, EncodingMode::Integer)?;
        let labels: Vec<usize> = target_values
            .iter()
            .map(|v| target_encoder.index_of(v.as_deref().unwrap()))
            .collect::<std::result::Result<_, _>>()?;

        let input_columns: Vec<ColumnSchema> = train.feature_schema().cloned().collect();
        let mut impute_values = BTreeMap::new();
        let mut categorical_fill = BTreeMap::new();
        let mut encoders = Vec::new();
        for col in &input_columns {
            match col.kind {
                ColumnKind::Numeric => {
                    let v = impute_value(
                        &col.name,
                        train.numeric_values(&col.name)?,
                        options.imputation,
                    )?;
                    impute_values.insert(col.name.clone(), v);
                }
                ColumnKind::Categorical => {
                    let values = train.categorical_values(&col.name)?;
                    let fill = mode_label(&col.name, values)?;
                    let mut categories: Vec<String> = Vec::new();
                    for v in values {
                        let label = v.as_ref().unwrap_or(&fill);
                        if !categories.contains(label) {
                            categories.push(label.clone());
                        }
                    }
                    let mode = match options.encoding {
                        FeatureEncoding::Integer => EncodingMode::Integer,
                        FeatureEncoding::OneHot => EncodingMode::OneHot,
                        FeatureEncoding::Auto if categories.len() <= 2 => EncodingMode::Integer,
                        FeatureEncoding::Auto => EncodingMode::OneHot,
                    };
                    categorical_fill.insert(col.name.clone(), fill);
                    encoders.push(EncoderMap {
                        column: col.name.clone(),
                        categories,
                        mode,
                    });
                }
            }
        }

        let mut state = PreprocessState {
            schema_version: PREPROCESS_SCHEMA_VERSION,
            input_columns,
            target: target.name.clone(),
            class_labels: target_encoder.categories,
            impute_values,
            categorical_fill,
            encoders,
            encoded_features: Vec::new(),
            feature_report: FeatureReport {
                names: Vec::new(),
                p_values: Vec::new(),
                correlation: Matrix::zeros(0, 0),
                dropped: Vec::new(),
                selected: Vec::new(),
            },
            selected_features: Vec::new(),
            scaler: None,
            pca: None,
        };
        let (encoded, names, kinds) = state.encode_table(train)?;
        state.encoded_features = names.clone();

        let report = select_features(
            &encoded,
            &names,
            &kinds,
            &labels,
            options.p_threshold,
            options.corr_threshold,
        )?;
        let selected = encoded.select_columns(&report.selected_indices());
        state.selected_features = report.selected.clone();
        state.feature_report = report;

        let features = if options.scaling {
            let scaler = min_max_fit(&selected)?;
            let scaled = min_max_transform(&selected, &scaler)?;
            state.scaler = Some(scaler);
            scaled
        } else {
            selected
        };
        if options.pca_components > 0 && features.rows() >= 2 {
            let k = options.pca_components.min(features.cols());
            state.pca = Some(pca_fit(&features, k)?);
        }
        Ok(FittedPreprocess {
            state,
            features,
            labels,
        })
    }

    /// Imputes and encodes every input column, returning the encoded matrix
    /// together with column names and test kinds.
    fn encode_table(
        &self,
        table: &Table,
    ) -> Result<(Matrix, Vec<String>, Vec<FeatureKind>), Error> {
        let mut columns: Vec<Vec<f64>> = Vec::new();
        let mut names = Vec::new();
        let mut kinds = Vec::new();
        for col in &self.input_columns {
            match col.kind {
                ColumnKind::Numeric => {
                    let fill = self.impute_values[&col.name];
                    let values = table.numeric_values(&col.name)?;
                    columns.push(values.iter().map(|v| v.unwrap_or(fill)).collect());
                    names.push(col.name.clone());
                    kinds.push(FeatureKind::Continuous);
                }
                ColumnKind::Categorical => {
                    let enc = self.encoder(&col.name);
                    let fill = &self.categorical_fill[&col.name];
                    let values = table.categorical_values(&col.name)?;
                    let width = enc.output_names().len();
                    let mut out = vec![Vec::with_capacity(values.len()); width];
                    for v in values {
                        let coded = enc.encode(v.as_deref().unwrap_or(fill))?;
                        for (o, x) in out.iter_mut().zip(coded) {
                            o.push(x);
                        }
                    }
                    columns.extend(out);
                    names.extend(enc.output_names());
                    kinds.extend(std::iter::repeat_n(FeatureKind::Categorical, width));
                }
            }
        }
        let matrix = if columns.is_empty() {
            Matrix::zeros(table.n_rows(), 0)
        } else {
            Matrix::from_columns(&columns).expect("columns share the table length")
        };
        Ok((matrix, names, kinds))
    }

    fn encoder(&self, column: &str) -> &EncoderMap {
        self.encoders
            .iter()
            .find(|e| e.column == column)
            .expect("every categorical input has an encoder")
    }

    fn finish(&self, encoded: &Matrix) -> Result<Matrix, Error> {
        let idx: Vec<usize> = self
            .selected_features
            .iter()
            .map(|s| self.encoded_features.iter().position(|n| n == s).unwrap())
            .collect();
        let selected = encoded.select_columns(&idx);
        Ok(match &self.scaler {
            Some(scaler) => min_max_transform(&selected, scaler)?,
            None => selected,
        })
    }

    /// Model-ready features for `table`, replaying every fitted transform.
    pub fn transform(&self, table: &Table) -> Result<Matrix, Error> {
        let (encoded, _, _) = self.encode_table(table)?;
        self.finish(&encoded)
    }

    /// Class indices of the target column of `table` under the fitted label order.
    pub fn transform_labels(&self, table: &Table) -> Result<Vec<usize>, Error> {
        let values = table.categorical_values(&self.target)?;
        values
            .iter()
            .map(|v| {
                let label = v
                    .as_deref()
                    .ok_or_else(|| TabularError::MissingCells(self.target.clone()))?;
                self.class_labels
                    .iter()
                    .position(|c| c == label)
                    .ok_or_else(|| TabularError::UnknownCategory {
                        column: self.target.clone(),
                        label: label.to_string(),
                    })
            })
            .collect::<std::result::Result<_, TabularError>>()
            .map_err(Error::from)
    }

    /// Raw input columns that feed at least one selected feature.
    pub fn required_inputs(&self) -> Vec<&ColumnSchema> {
        self.input_columns
            .iter()
            .filter(|col| match col.kind {
                ColumnKind::Numeric => self.selected_features.contains(&col.name),
                ColumnKind::Categorical => self
                    .encoder(&col.name)
                    .output_names()
                    .iter()
                    .any(|n| self.selected_features.contains(n)),
            })
            .collect()
    }

    /// Transforms one record given as raw text cells keyed by column name.
    /// Every required input must be present as a key; "" or "NA" values are
    /// imputed.
    pub fn transform_record(&self, record: &HashMap<String, String>) -> Result<Vec<f64>, Error> {
        let required = self.required_inputs();
        let missing: Vec<String> = required
            .iter()
            .filter(|c| !record.contains_key(&c.name))
            .map(|c| c.name.clone())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingFeatures(missing));
        }
        let mut schema = Vec::new();
        let mut columns = Vec::new();
        for col in &self.input_columns {
            let raw = record.get(&col.name).map(String::as_str).unwrap_or("");
            let is_missing = MISSING_TOKENS.contains(&raw);
            let column = match col.kind {
                ColumnKind::Numeric => Column::Numeric(vec![if is_missing {
                    None
                } else {
                    Some(
                        raw.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| TabularError::Parse {
                                row: 1,
                                column: col.name.clone(),
                                value: raw.to_string(),
                            })?,
                    )
                }]),
                ColumnKind::Categorical => {
                    Column::Categorical(vec![(!is_missing).then(|| raw.to_string())])
                }
            };
            schema.push(ColumnSchema::new(
                col.name.clone(),
                col.kind,
                ColumnRole::Feature,
            ));
            columns.push(column);
        }
        let table = Table::new(schema, columns)?;
        Ok(self.transform(&table)?.into_vec())
    }
}
