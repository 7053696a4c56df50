//! Typed tabular data: schema, records, encoding, stratified splitting and
//! CSV persistence with a JSON schema sidecar.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::linalg::Matrix;
use crate::seed::child_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Continuous,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        levels: impl IntoIterator<Item = S>,
    ) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Categorical {
                levels: levels.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn levels(&self) -> Option<&[String]> {
        match &self.kind {
            FeatureKind::Continuous => None,
            FeatureKind::Categorical { levels } => Some(levels),
        }
    }
}

/// Column layout of a dataset. `classes` is the declared set of building
/// type ids a record's class label may take.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema")]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
    target_metrics: Vec<String>,
    class_column: String,
    classes: Vec<String>,
}

#[derive(Deserialize)]
struct RawSchema {
    features: Vec<FeatureSpec>,
    target_metrics: Vec<String>,
    class_column: String,
    classes: Vec<String>,
}

impl TryFrom<RawSchema> for FeatureSchema {
    type Error = Error;

    fn try_from(raw: RawSchema) -> Result<Self> {
        FeatureSchema::new(
            raw.features,
            raw.target_metrics,
            raw.class_column,
            raw.classes,
        )
    }
}

fn first_duplicate<'a>(names: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    let mut seen = HashSet::new();
    names.into_iter().find(|n| !seen.insert(*n))
}

impl FeatureSchema {
    pub fn new(
        features: Vec<FeatureSpec>,
        target_metrics: Vec<String>,
        class_column: impl Into<String>,
        classes: Vec<String>,
    ) -> Result<Self> {
        let class_column = class_column.into();
        if features.is_empty() {
            return Err(Error::Schema("at least one feature is required".into()));
        }
        if let Some(d) = first_duplicate(features.iter().map(|f| f.name.as_str())) {
            return Err(Error::Schema(format!("duplicate feature name `{d}`")));
        }
        for f in &features {
            if let Some(levels) = f.levels() {
                if levels.is_empty() {
                    return Err(Error::Schema(format!(
                        "categorical feature `{}` has no levels",
                        f.name
                    )));
                }
                if let Some(d) = first_duplicate(levels.iter().map(String::as_str)) {
                    return Err(Error::Schema(format!(
                        "categorical feature `{}` repeats level `{d}`",
                        f.name
                    )));
                }
            }
        }
        if target_metrics.is_empty() {
            return Err(Error::Schema(
                "at least one target metric is required".into(),
            ));
        }
        if let Some(d) = first_duplicate(target_metrics.iter().map(String::as_str)) {
            return Err(Error::Schema(format!("duplicate target metric `{d}`")));
        }
        if let Some(d) = features
            .iter()
            .map(|f| f.name.as_str())
            .find(|n| target_metrics.iter().any(|t| t == n))
        {
            return Err(Error::Schema(format!(
                "`{d}` is both a feature and a target"
            )));
        }
        if features.iter().any(|f| f.name == class_column)
            || target_metrics.iter().any(|t| *t == class_column)
        {
            return Err(Error::Schema(format!(
                "class column `{class_column}` collides with a feature or target"
            )));
        }
        if classes.is_empty() {
            return Err(Error::Schema("no class labels declared".into()));
        }
        if let Some(d) = first_duplicate(classes.iter().map(String::as_str)) {
            return Err(Error::Schema(format!("duplicate class label `{d}`")));
        }
        Ok(FeatureSchema {
            features,
            target_metrics,
            class_column,
            classes,
        })
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn target_metrics(&self) -> &[String] {
        &self.target_metrics
    }

    pub fn class_column(&self) -> &str {
        &self.class_column
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, label: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::UnknownClass(label.to_string()))
    }

    pub fn metric_index(&self, metric: &str) -> Result<usize> {
        self.target_metrics
            .iter()
            .position(|m| m == metric)
            .ok_or_else(|| Error::UnknownMetric(metric.to_string()))
    }

    /// Number of encoded columns: one per continuous feature plus one per
    /// categorical level.
    pub fn encoded_width(&self) -> usize {
        self.features
            .iter()
            .map(|f| f.levels().map_or(1, <[String]>::len))
            .sum()
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fsutil::read_to_string(path)?)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        fsutil::write_json(path, self)
    }
}

/// One feature value. Categorical values store the index into the feature's
/// level set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue {
    Num(f64),
    Level(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub features: Vec<FeatureValue>,
    /// Index into the schema's class list.
    pub class: usize,
    /// One value per target metric, in schema order.
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: FeatureSchema,
    records: Vec<Record>,
}

impl Dataset {
    /// Validates every record against `schema`.
    pub fn new(schema: FeatureSchema, records: Vec<Record>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            check_record(&schema, r).map_err(|message| Error::Row {
                row: i + 1,
                message,
            })?;
        }
        Ok(Dataset { schema, records })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    pub fn indices_of_class(&self, class: usize) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.class == class)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn of_class(&self, label: &str) -> Result<Dataset> {
        let class = self.schema.class_index(label)?;
        Ok(self.subset(&self.indices_of_class(class)))
    }

    /// Record count per declared class, in schema class order.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.schema.classes.len()];
        for r in &self.records {
            counts[r.class] += 1;
        }
        counts
    }

    pub fn class_labels(&self) -> Vec<&str> {
        self.records
            .iter()
            .map(|r| self.schema.classes[r.class].as_str())
            .collect()
    }

    pub fn target_column(&self, metric: &str) -> Result<Vec<f64>> {
        let m = self.schema.metric_index(metric)?;
        Ok(self.records.iter().map(|r| r.targets[m]).collect())
    }

    /// Feature values of every record re-expressed against `schema`, with
    /// categorical levels mapped by name. Class labels and targets are not
    /// read.
    pub fn features_for(&self, schema: &FeatureSchema) -> Result<Vec<Vec<FeatureValue>>> {
        let ours = &self.schema.features;
        let theirs = &schema.features;
        if ours.len() != theirs.len()
            || ours
                .iter()
                .zip(theirs)
                .any(|(a, b)| a.name != b.name || a.levels().is_some() != b.levels().is_some())
        {
            return Err(Error::Schema(
                "dataset features differ from the expected schema".into(),
            ));
        }
        if ours == theirs {
            return Ok(self.records.iter().map(|r| r.features.clone()).collect());
        }
        // per feature, per source level: Ok(target level) or the offending name
        let level_maps: Vec<Option<Vec<std::result::Result<u32, &str>>>> = ours
            .iter()
            .zip(theirs)
            .map(|(a, b)| {
                let (Some(from), Some(to)) = (a.levels(), b.levels()) else {
                    return None;
                };
                Some(
                    from.iter()
                        .map(|level| {
                            to.iter()
                                .position(|l| l == level)
                                .map(|p| p as u32)
                                .ok_or(level.as_str())
                        })
                        .collect(),
                )
            })
            .collect();
        let mut rows = Vec::with_capacity(self.records.len());
        for r in &self.records {
            let mut row = Vec::with_capacity(r.features.len());
            for (fi, (v, map)) in r.features.iter().zip(&level_maps).enumerate() {
                row.push(match (v, map) {
                    (FeatureValue::Level(l), Some(map)) => match map[*l as usize] {
                        Ok(idx) => FeatureValue::Level(idx),
                        Err(level) => {
                            return Err(Error::UnknownLevel {
                                feature: ours[fi].name.clone(),
                                level: level.to_string(),
                            })
                        }
                    },
                    (v, _) => *v,
                });
            }
            rows.push(row);
        }
        Ok(rows)
    }
}

fn check_record(schema: &FeatureSchema, r: &Record) -> std::result::Result<(), String> {
    if r.features.len() != schema.features.len() {
        return Err(format!(
            "{} feature values, schema declares {}",
            r.features.len(),
            schema.features.len()
        ));
    }
    for (v, spec) in r.features.iter().zip(&schema.features) {
        match (v, &spec.kind) {
            (FeatureValue::Num(x), FeatureKind::Continuous) => {
                if !x.is_finite() {
                    return Err(format!("non-finite value for `{}`", spec.name));
                }
            }
            (FeatureValue::Level(l), FeatureKind::Categorical { levels }) => {
                if *l as usize >= levels.len() {
                    return Err(format!("level index {l} out of range for `{}`", spec.name));
                }
            }
            _ => return Err(format!("value kind does not match feature `{}`", spec.name)),
        }
    }
    if r.class >= schema.classes.len() {
        return Err(format!("class index {} out of range", r.class));
    }
    if r.targets.len() != schema.target_metrics.len() {
        return Err(format!(
            "{} target values, schema declares {}",
            r.targets.len(),
            schema.target_metrics.len()
        ));
    }
    if let Some((m, _)) = schema
        .target_metrics
        .iter()
        .zip(&r.targets)
        .find(|(_, t)| !t.is_finite())
    {
        return Err(format!("non-finite target `{m}`"));
    }
    Ok(())
}

/// Where an encoded column comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSource {
    pub feature: String,
    /// Set for one-hot columns.
    pub level: Option<String>,
}

/// Affine map applied to one encoded column: `(raw − mean) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    pub values: Matrix,
    pub column_map: Vec<ColumnSource>,
    pub standardization: Vec<Standardization>,
}

/// One-hot encoder with z-scored continuous columns. Statistics come from the
/// instances it was fitted on and are reused for every later transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    schema: FeatureSchema,
    column_map: Vec<ColumnSource>,
    standardization: Vec<Standardization>,
}

impl Encoder {
    /// Fits standardization statistics on `dataset[fit_on]`.
    pub fn fit(dataset: &Dataset, fit_on: &[usize]) -> Result<Encoder> {
        if fit_on.is_empty() {
            return Err(Error::Empty("encoder fit subset".into()));
        }
        if let Some(&bad) = fit_on.iter().find(|&&i| i >= dataset.len()) {
            return Err(Error::InvalidArgument(format!(
                "fit index {bad} outside dataset of {} records",
                dataset.len()
            )));
        }
        let schema = dataset.schema.clone();
        let mut column_map = Vec::with_capacity(schema.encoded_width());
        let mut standardization = Vec::with_capacity(schema.encoded_width());
        for (fi, spec) in schema.features.iter().enumerate() {
            match &spec.kind {
                FeatureKind::Continuous => {
                    let values = fit_on
                        .iter()
                        .map(|&i| match dataset.records[i].features[fi] {
                            FeatureValue::Num(x) => x,
                            FeatureValue::Level(_) => unreachable!("validated record"),
                        });
                    let (mean, std) = mean_and_std(values, fit_on.len());
                    column_map.push(ColumnSource {
                        feature: spec.name.clone(),
                        level: None,
                    });
                    standardization.push(Standardization {
                        mean,
                        scale: if std > 0.0 { std } else { 1.0 },
                    });
                }
                FeatureKind::Categorical { levels } => {
                    for level in levels {
                        column_map.push(ColumnSource {
                            feature: spec.name.clone(),
                            level: Some(level.clone()),
                        });
                        standardization.push(Standardization {
                            mean: 0.0,
                            scale: 1.0,
                        });
                    }
                }
            }
        }
        Ok(Encoder {
            schema,
            column_map,
            standardization,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn width(&self) -> usize {
        self.column_map.len()
    }

    pub fn column_map(&self) -> &[ColumnSource] {
        &self.column_map
    }

    pub fn standardization(&self) -> &[Standardization] {
        &self.standardization
    }

    /// Standardized encoding of every record in `dataset`.
    pub fn transform(&self, dataset: &Dataset) -> Result<EncodedMatrix> {
        let rows = dataset.features_for(&self.schema)?;
        let mut values = design_from_rows(&self.schema, rows.iter().map(Vec::as_slice));
        for r in 0..values.rows() {
            for (v, st) in values.row_mut(r).iter_mut().zip(&self.standardization) {
                *v = (*v - st.mean) / st.scale;
            }
        }
        Ok(EncodedMatrix {
            values,
            column_map: self.column_map.clone(),
            standardization: self.standardization.clone(),
        })
    }

    /// One-hot encoding with continuous values left in their original units.
    /// Tree models consume this form; it does not depend on fitted statistics.
    pub fn transform_unscaled(&self, dataset: &Dataset) -> Result<Matrix> {
        let rows = dataset.features_for(&self.schema)?;
        Ok(design_from_rows(
            &self.schema,
            rows.iter().map(Vec::as_slice),
        ))
    }
}

fn mean_and_std(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let n = n as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One-hot design matrix with continuous features in original units. The
/// class label is never part of it.
pub fn unscaled_design(dataset: &Dataset) -> Matrix {
    design_from_rows(
        &dataset.schema,
        dataset.records.iter().map(|r| r.features.as_slice()),
    )
}

fn design_from_rows<'a>(
    schema: &FeatureSchema,
    rows: impl ExactSizeIterator<Item = &'a [FeatureValue]>,
) -> Matrix {
    let mut m = Matrix::zeros(rows.len(), schema.encoded_width());
    for (r, features) in rows.enumerate() {
        let row = m.row_mut(r);
        let mut col = 0;
        for (v, spec) in features.iter().zip(&schema.features) {
            match (v, spec.levels()) {
                (FeatureValue::Num(x), None) => {
                    row[col] = *x;
                    col += 1;
                }
                (FeatureValue::Level(l), Some(levels)) => {
                    row[col + *l as usize] = 1.0;
                    col += levels.len();
                }
                _ => unreachable!("validated record"),
            }
        }
    }
    m
}

/// Fits an encoder on `fit_on` and applies it to the whole dataset.
pub fn encode(dataset: &Dataset, fit_on: &[usize]) -> Result<(EncodedMatrix, Encoder)> {
    let encoder = Encoder::fit(dataset, fit_on)?;
    let encoded = encoder.transform(dataset)?;
    Ok((encoded, encoder))
}

/// `round(ratio · n)` with halves rounded up.
pub fn train_count(ratio: f64, n: usize) -> usize {
    (ratio * n as f64 + 0.5).floor() as usize
}

/// Stratified random partition returning sorted `(train, test)` indices.
///
/// Each class is shuffled with its own stream seeded from
/// `child_seed(seed, class_label)` and contributes `round(ratio · n_class)`
/// records to the training side.
pub fn split_indices(dataset: &Dataset, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if dataset.is_empty() {
        return Err(Error::Empty("cannot split an empty dataset".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratio {ratio} must lie in (0, 1)"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, label) in dataset.schema.classes.iter().enumerate() {
        let mut idx = dataset.indices_of_class(class);
        match idx.len() {
            0 => continue,
            1 => {
                return Err(Error::TooFewRecords {
                    class: label.clone(),
                    count: 1,
                })
            }
            _ => {}
        }
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, label));
        idx.shuffle(&mut rng);
        let n_train = train_count(ratio, idx.len());
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(dataset: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset, ratio, seed)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Deterministic text form of a float that parses back to the same bits.
pub(crate) fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let bytes = csv_bytes(dataset)?;
    fsutil::write_atomic(path, &bytes)
}

pub fn csv_bytes(dataset: &Dataset) -> Result<Vec<u8>> {
    let schema = &dataset.schema;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = schema.features.iter().map(|f| f.name.as_str()).collect();
    header.push(&schema.class_column);
    header.extend(schema.target_metrics.iter().map(String::as_str));
    w.write_record(&header)?;
    let mut fields = Vec::with_capacity(header.len());
    for r in &dataset.records {
        fields.clear();
        for (v, spec) in r.features.iter().zip(&schema.features) {
            fields.push(match (v, spec.levels()) {
                (FeatureValue::Num(x), _) => format_f64(*x),
                (FeatureValue::Level(l), Some(levels)) => levels[*l as usize].clone(),
                (FeatureValue::Level(_), None) => unreachable!("validated record"),
            });
        }
        fields.push(schema.classes[r.class].clone());
        fields.extend(r.targets.iter().map(|t| format_f64(*t)));
        w.write_record(&fields)?;
    }
    w.into_inner()
        .map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

pub fn load_csv(path: &Path, schema: &FeatureSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Parses CSV text whose header names every feature, the class column and
/// every target metric (in any order).
pub fn read_csv<R: std::io::Read>(reader: R, schema: &FeatureSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let position: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    if position.len() != headers.len() {
        return Err(Error::Schema("duplicate column in CSV header".into()));
    }
    let col = |name: &str| {
        position
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let feature_cols = schema
        .features
        .iter()
        .map(|f| col(&f.name))
        .collect::<Result<Vec<_>>>()?;
    let class_col = col(&schema.class_column)?;
    let target_cols = schema
        .target_metrics
        .iter()
        .map(|m| col(m))
        .collect::<Result<Vec<_>>>()?;
    let expected = schema.features.len() + 1 + schema.target_metrics.len();
    if headers.len() != expected {
        let known: HashSet<usize> = feature_cols
            .iter()
            .chain(&target_cols)
            .copied()
            .chain([class_col])
            .collect();
        let extra = (0..headers.len()).find(|i| !known.contains(i)).unwrap();
        return Err(Error::Schema(format!(
            "unexpected column `{}`",
            &headers[extra]
        )));
    }
    let level_lookup: Vec<Option<BTreeMap<&str, u32>>> = schema
        .features
        .iter()
        .map(|f| {
            f.levels().map(|levels| {
                levels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.as_str(), i as u32))
                    .collect()
            })
        })
        .collect();

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let bad = |message: String| Error::Row {
            row: row_no,
            message,
        };
        let mut features = Vec::with_capacity(feature_cols.len());
        for ((spec, &c), lookup) in schema.features.iter().zip(&feature_cols).zip(&level_lookup) {
            let text = row.get(c).unwrap_or("");
            features.push(match lookup {
                None => FeatureValue::Num(
                    parse_finite(text).map_err(|m| bad(format!("feature `{}`: {m}", spec.name)))?,
                ),
                Some(map) => FeatureValue::Level(*map.get(text).ok_or_else(|| {
                    bad(format!(
                        "value `{text}` is not a level of categorical feature `{}`",
                        spec.name
                    ))
                })?),
            });
        }
        let label = row.get(class_col).unwrap_or("");
        let class = schema
            .class_index(label)
            .map_err(|_| bad(format!("unknown class label `{label}`")))?;
        let targets = schema
            .target_metrics
            .iter()
            .zip(&target_cols)
            .map(|(m, &c)| {
                parse_finite(row.get(c).unwrap_or(""))
                    .map_err(|e| bad(format!("target `{m}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        records.push(Record {
            features,
            class,
            targets,
        });
    }
    Ok(Dataset {
        schema: schema.clone(),
        records,
    })
}

fn parse_finite(text: &str) -> std::result::Result<f64, String> {
    match text.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("non-finite number `{text}`")),
        Err(_) => Err(format!("unparsable number `{text}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(
            vec![
                FeatureSpec::continuous("area"),
                FeatureSpec::continuous("floors"),
                FeatureSpec::categorical("zone", ["hot", "mixed", "cold"]),
            ],
            vec!["TGAS".into()],
            "type",
            vec!["A".into(), "B".into()],
        )
        .unwrap()
    }

    fn rec(area: f64, floors: f64, zone: u32, class: usize, y: f64) -> Record {
        Record {
            features: vec![
                FeatureValue::Num(area),
                FeatureValue::Num(floors),
                FeatureValue::Level(zone),
            ],
            class,
            targets: vec![y],
        }
    }

    #[test]
    fn schema_rejects_duplicates_and_collisions() {
        let f = || vec![FeatureSpec::continuous("a")];
        let t = || vec!["y".to_string()];
        let c = || vec!["A".to_string()];
        assert!(FeatureSchema::new(
            vec![FeatureSpec::continuous("a"), FeatureSpec::continuous("a")],
            t(),
            "type",
            c()
        )
        .is_err());
        assert!(FeatureSchema::new(
            vec![FeatureSpec::categorical("a", Vec::<String>::new())],
            t(),
            "type",
            c()
        )
        .is_err());
        assert!(FeatureSchema::new(
            vec![FeatureSpec::categorical("a", ["x", "x"])],
            t(),
            "type",
            c()
        )
        .is_err());
        assert!(FeatureSchema::new(f(), vec![], "type", c()).is_err());
        assert!(FeatureSchema::new(f(), t(), "a", c()).is_err());
        assert!(FeatureSchema::new(f(), t(), "y", c()).is_err());
        assert!(FeatureSchema::new(f(), t(), "type", vec![]).is_err());
        assert!(FeatureSchema::new(f(), t(), "type", c()).is_ok());
    }

    #[test]
    fn schema_json_is_validated() {
        let json = r#"{"features":[{"name":"a","kind":"continuous"},{"name":"a","kind":"continuous"}],
            "target_metrics":["y"],"class_column":"type","classes":["A"]}"#;
        assert!(serde_json::from_str::<FeatureSchema>(json).is_err());
        let s = schema();
        let back: FeatureSchema =
            serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn dataset_rejects_nonconforming_rows() {
        let bad_level = rec(1.0, 1.0, 7, 0, 1.0);
        let err = Dataset::new(schema(), vec![rec(1.0, 1.0, 0, 0, 1.0), bad_level]).unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }), "{err}");
        assert!(Dataset::new(schema(), vec![rec(f64::NAN, 1.0, 0, 0, 1.0)]).is_err());
        assert!(Dataset::new(schema(), vec![rec(1.0, 1.0, 0, 2, 1.0)]).is_err());
    }

    #[test]
    fn encode_standardizes_and_one_hots() {
        let ds = Dataset::new(
            schema(),
            vec![rec(2.0, 5.0, 0, 0, 1.0), rec(4.0, 5.0, 2, 1, 2.0)],
        )
        .unwrap();
        let (enc, encoder) = encode(&ds, &[0, 1]).unwrap();
        assert_eq!(enc.values.cols(), 5);
        assert_eq!(encoder.width(), 5);
        assert_eq!(enc.values.row(0), &[-1.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(enc.values.row(1), &[1.0, 0.0, 0.0, 0.0, 1.0]);
        // zero-variance column passes through centered with unit scale
        assert_eq!(
            enc.standardization[1],
            Standardization {
                mean: 5.0,
                scale: 1.0
            }
        );
        assert_eq!(
            enc.column_map[3],
            ColumnSource {
                feature: "zone".into(),
                level: Some("mixed".into())
            }
        );
    }

    #[test]
    fn encode_uses_only_fit_subset_statistics() {
        let ds = Dataset::new(
            schema(),
            vec![
                rec(2.0, 1.0, 0, 0, 1.0),
                rec(4.0, 1.0, 0, 0, 1.0),
                rec(100.0, 1.0, 0, 1, 1.0),
            ],
        )
        .unwrap();
        let (enc, _) = encode(&ds, &[0, 1]).unwrap();
        assert_eq!(enc.values[(2, 0)], 97.0);
        assert!(encode(&ds, &[]).is_err());
        assert!(encode(&ds, &[5]).is_err());
    }

    #[test]
    fn transform_reports_unknown_level() {
        let ds = Dataset::new(
            schema(),
            vec![rec(1.0, 1.0, 0, 0, 1.0), rec(2.0, 1.0, 1, 0, 1.0)],
        )
        .unwrap();
        let encoder = Encoder::fit(&ds, &[0, 1]).unwrap();
        let other_schema = FeatureSchema::new(
            vec![
                FeatureSpec::continuous("area"),
                FeatureSpec::continuous("floors"),
                FeatureSpec::categorical("zone", ["hot", "arctic"]),
            ],
            vec!["TGAS".into()],
            "type",
            vec!["A".into(), "B".into()],
        )
        .unwrap();
        let other = Dataset::new(other_schema, vec![rec(1.0, 1.0, 1, 0, 1.0)]).unwrap();
        match encoder.transform(&other) {
            Err(Error::UnknownLevel { feature, level }) => {
                assert_eq!(feature, "zone");
                assert_eq!(level, "arctic");
            }
            other => panic!("expected unknown level, got {other:?}"),
        }
    }

    #[test]
    fn split_counts_and_determinism() {
        let records = (0..100).map(|i| rec(i as f64, 1.0, 0, 0, 1.0)).collect();
        let ds = Dataset::new(schema(), records).unwrap();
        let (tr, te) = split_indices(&ds, 0.9, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (90, 10));
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(split_indices(&ds, 0.9, 7).unwrap(), (tr.clone(), te));
        assert_ne!(split_indices(&ds, 0.9, 8).unwrap().0, tr);
    }

    #[test]
    fn split_rounds_half_up() {
        assert_eq!(train_count(0.9, 13_645), 12_281);
        assert_eq!(train_count(0.5, 3), 2);
        assert_eq!(train_count(0.9, 100), 90);
    }

    #[test]
    fn split_errors() {
        let ds = Dataset::new(schema(), vec![rec(1.0, 1.0, 0, 0, 1.0)]).unwrap();
        assert!(matches!(
            split_indices(&ds, 0.9, 1),
            Err(Error::TooFewRecords { count: 1, .. })
        ));
        let ds = Dataset::new(schema(), vec![]).unwrap();
        assert!(split_indices(&ds, 0.9, 1).is_err());
        let ds = Dataset::new(schema(), vec![rec(1.0, 1.0, 0, 0, 1.0); 3]).unwrap();
        assert!(split_indices(&ds, 1.0, 1).is_err());
        assert!(split_indices(&ds, 0.0, 1).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let ds = Dataset::new(
            schema(),
            vec![
                rec(0.1 + 0.2, 1e-300, 1, 0, -3.25),
                rec(12345.678901234567, 2.0, 2, 1, 1.0 / 3.0),
            ],
        )
        .unwrap();
        let bytes = csv_bytes(&ds).unwrap();
        let back = read_csv(bytes.as_slice(), &schema()).unwrap();
        assert_eq!(back, ds);

        let missing_class = "area,floors,zone,TGAS\n1,2,hot,3\n";
        match read_csv(missing_class.as_bytes(), &schema()) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "type"),
            other => panic!("{other:?}"),
        }
        let bad_level = "area,floors,zone,type,TGAS\n1,2,hot,A,3\n1,2,tropic,A,3\n";
        match read_csv(bad_level.as_bytes(), &schema()) {
            Err(Error::Row { row, message }) => {
                assert_eq!(row, 2);
                assert!(message.contains("tropic"));
            }
            other => panic!("{other:?}"),
        }
        let bad_num = "area,floors,zone,type,TGAS\nabc,2,hot,A,3\n";
        assert!(matches!(
            read_csv(bad_num.as_bytes(), &schema()),
            Err(Error::Row { row: 1, .. })
        ));
        let bad_class = "area,floors,zone,type,TGAS\n1,2,hot,Z,3\n";
        let err = read_csv(bad_class.as_bytes(), &schema()).unwrap_err();
        assert!(err.to_string().contains("unknown class label `Z`"), "{err}");
        // columns may come in any order
        let shuffled = "TGAS,type,zone,floors,area\n3,B,cold,2,1\n";
        let ds = read_csv(shuffled.as_bytes(), &schema()).unwrap();
        assert_eq!(ds.records()[0], rec(1.0, 2.0, 2, 1, 3.0));
    }
}
