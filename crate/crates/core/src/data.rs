//! Tabular datasets: CSV ingestion, attribute typing, optional min-max
//! scaling and the fixed train/test partition.

use std::fmt;
use std::fs;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("empty dataset")]
    Empty,
    #[error("row {row}: expected {expected} columns, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("row {row}, column {column}: cannot parse '{cell}' as a number")]
    NotNumeric { row: usize, column: usize, cell: String },
    #[error("row {row}, column {column}: value is not finite")]
    NonFinite { row: usize, column: usize },
    #[error("column '{0}' not found")]
    MissingColumn(String),
    #[error("cannot split: {0}")]
    Split(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Real,
    Integer,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    None,
    MinMax,
}

/// Column to discard on load: by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl ColumnRef {
    /// Integers are positions, anything else a header name.
    pub fn parse(text: &str) -> Self {
        text.parse()
            .map(ColumnRef::Index)
            .unwrap_or_else(|_| ColumnRef::Name(text.to_string()))
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Index(i) => write!(f, "{i}"),
            ColumnRef::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LoadOptions {
    pub has_header: bool,
    pub drop_column: Option<ColumnRef>,
    pub normalize: Normalization,
}

/// `n × f` instance matrix plus its train/test partition. Before [`split`]
/// every row is a training row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub values: Array2<f64>,
    pub attribute_kind: AttributeKind,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl Dataset {
    pub fn from_matrix(name: impl Into<String>, values: Array2<f64>) -> Result<Self, DataError> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(DataError::Empty);
        }
        if let Some(((row, column), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(DataError::NonFinite {
                row: row + 1,
                column: column + 1,
            });
        }
        let attribute_kind = infer_kind(&values);
        let train_indices = (0..values.nrows()).collect();
        Ok(Self {
            name: name.into(),
            values,
            attribute_kind,
            train_indices,
            test_indices: Vec::new(),
        })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn feature_count(&self) -> usize {
        self.values.ncols()
    }

    pub fn train_matrix(&self) -> Array2<f64> {
        self.values.select(Axis(0), &self.train_indices)
    }

    pub fn test_matrix(&self) -> Array2<f64> {
        self.values.select(Axis(0), &self.test_indices)
    }

    /// Writes the matrix as headed CSV (`a1..af`).
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.feature_count()).map(|j| format!("a{j}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in self.values.rows() {
            let cells: Vec<String> = row.iter().map(f64::to_string).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        fs::write(path, out)
    }
}

fn infer_kind(values: &Array2<f64>) -> AttributeKind {
    if values.iter().all(|&v| v == 0.0 || v == 1.0) {
        AttributeKind::Binary
    } else if values.iter().all(|v| v.fract() == 0.0) {
        AttributeKind::Integer
    } else {
        AttributeKind::Real
    }
}

/// Maps every column onto `[0, 1]`; constant columns become 0.
pub fn min_max(values: &mut Array2<f64>) {
    for mut col in values.columns_mut() {
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        col.mapv_inplace(|v| if range > 0.0 { (v - lo) / range } else { 0.0 });
    }
}

/// Parses comma-separated numeric text. Row numbers in errors are 1-based
/// file lines; columns are 1-based positions in the raw file.
pub fn parse_csv(name: &str, text: &str, opts: &LoadOptions) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records().filter(|r| {
        r.as_ref()
            .map_or(true, |r| !(r.len() == 1 && r[0].is_empty()))
    });
    let line_of = |r: &csv::StringRecord| r.position().map_or(0, |p| p.line() as usize);
    let bad_row = |e: csv::Error| DataError::Io {
        path: name.to_string(),
        message: e.to_string(),
    };
    let header: Option<Vec<String>> = if opts.has_header {
        match records.next() {
            Some(r) => Some(r.map_err(bad_row)?.iter().map(str::to_string).collect()),
            None => None,
        }
    } else {
        None
    };
    let drop = match &opts.drop_column {
        None => None,
        Some(ColumnRef::Index(i)) => Some(*i),
        Some(ColumnRef::Name(n)) => Some(
            header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == n))
                .ok_or_else(|| DataError::MissingColumn(n.clone()))?,
        ),
    };

    let mut width = header.as_ref().map(Vec::len);
    let mut cells = Vec::new();
    let mut rows = 0;
    for record in records {
        let record = record.map_err(bad_row)?;
        let row = line_of(&record);
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(DataError::Ragged {
                row,
                expected,
                found: record.len(),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            if Some(j) == drop {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| DataError::NotNumeric {
                row,
                column: j + 1,
                cell: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFinite { row, column: j + 1 });
            }
            cells.push(v);
        }
        rows += 1;
    }
    let width = width.ok_or(DataError::Empty)?;
    if let Some(d) = drop {
        if d >= width {
            return Err(DataError::MissingColumn(d.to_string()));
        }
    }
    let features = width - usize::from(drop.is_some());
    if rows == 0 || features == 0 {
        return Err(DataError::Empty);
    }
    let mut values = Array2::from_shape_vec((rows, features), cells).expect("rectangular by construction");
    let kind = infer_kind(&values);
    if opts.normalize == Normalization::MinMax {
        min_max(&mut values);
    }
    let mut d = Dataset::from_matrix(name, values)?;
    d.attribute_kind = kind;
    Ok(d)
}

pub fn load_csv(path: &Path, opts: &LoadOptions) -> Result<Dataset, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    parse_csv(&name, &text, opts)
}

/// Seeded shuffle; the first `round(fraction * n)` shuffled rows form the test set.
pub fn split(d: &Dataset, fraction: f64, seed: u64) -> Result<Dataset, DataError> {
    let n = d.rows();
    if n < 2 {
        return Err(DataError::Split(format!("need at least 2 rows, have {n}")));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DataError::Split(format!("fraction {fraction} not in (0, 1)")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test_count = (fraction * n as f64).round() as usize;
    let mut out = d.clone();
    out.test_indices = order[..test_count].to_vec();
    out.train_indices = order[test_count..].to_vec();
    Ok(out)
}

/// Generators for small tabular corpora with the shapes of the classic
/// glass, sonar and spect benchmarks. Each returns the features plus a
/// class label derived from the latent factors.
pub mod synthetic {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
    #[serde(rename_all = "lowercase")]
    pub enum Shape {
        Glass,
        Sonar,
        Spect,
    }

    impl Shape {
        pub fn dims(self) -> (usize, usize) {
            match self {
                Shape::Glass => (214, 9),
                Shape::Sonar => (208, 60),
                Shape::Spect => (267, 22),
            }
        }

        pub fn name(self) -> &'static str {
            match self {
                Shape::Glass => "glass",
                Shape::Sonar => "sonar",
                Shape::Spect => "spect",
            }
        }
    }

    fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    /// Rows are nonlinear mixtures of a few latent factors plus noise.
    pub fn generate(shape: Shape, seed: u64) -> (Dataset, Vec<u32>) {
        let (n, f) = shape.dims();
        let latent = match shape {
            Shape::Glass => 3,
            Shape::Sonar => 4,
            Shape::Spect => 3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let loadings: Vec<Vec<f64>> = (0..f)
            .map(|j| {
                (0..latent)
                    .map(|k| match shape {
                        // Smooth spectral profiles across neighbouring bands.
                        Shape::Sonar => 2.0 * ((j as f64 + 1.0) * (k as f64 + 1.0) * 0.07).sin(),
                        _ => rng.random_range(-2.0..2.0),
                    })
                    .collect()
            })
            .collect();
        let offsets: Vec<f64> = (0..f).map(|_| rng.random_range(-1.0..1.0)).collect();
        let scales: Vec<f64> = (0..f)
            .map(|_| match shape {
                Shape::Glass => rng.random_range(0.5..3.0),
                _ => 1.0,
            })
            .collect();
        let mut values = Array2::zeros((n, f));
        let mut classes = Vec::with_capacity(n);
        for i in 0..n {
            let z: Vec<f64> = (0..latent).map(|_| rng.random_range(-1.5..1.5)).collect();
            classes.push(u32::from(z[0] > 0.0) + u32::from(z[1] > 0.5));
            for j in 0..f {
                let mix: f64 = offsets[j] + loadings[j].iter().zip(&z).map(|(w, z)| w * z).sum::<f64>();
                values[[i, j]] = match shape {
                    Shape::Glass => (scales[j] * sigmoid(mix) + noise.sample(&mut rng)).max(0.0),
                    Shape::Sonar => (0.6 * sigmoid(mix - 1.0) + 0.5 * noise.sample(&mut rng)).clamp(0.0, 1.0),
                    Shape::Spect => f64::from(u8::from(sigmoid(mix) + 3.0 * noise.sample(&mut rng) > 0.5)),
                };
            }
        }
        let values = match shape {
            // Four decimals, like the published benchmark files.
            Shape::Glass | Shape::Sonar => values.mapv(|v| (v * 1e4).round() / 1e4),
            Shape::Spect => values,
        };
        let d = Dataset::from_matrix(shape.name(), values).expect("finite by construction");
        (d, classes)
    }

    /// CSV with header `a1..af,class`.
    pub fn write_with_class(d: &Dataset, classes: &[u32], path: &Path) -> std::io::Result<()> {
        let mut out = String::new();
        let header: Vec<String> = (1..=d.feature_count()).map(|j| format!("a{j}")).collect();
        out.push_str(&header.join(","));
        out.push_str(",class\n");
        for (row, class) in d.values.rows().into_iter().zip(classes) {
            for v in row {
                out.push_str(&v.to_string());
                out.push(',');
            }
            out.push_str(&class.to_string());
            out.push('\n');
        }
        fs::write(path, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn opts() -> LoadOptions {
        LoadOptions {
            has_header: true,
            ..LoadOptions::default()
        }
    }

    #[test]
    fn drops_class_column_by_name_and_position() {
        let (d, classes) = synthetic::generate(synthetic::Shape::Glass, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("glass.csv");
        synthetic::write_with_class(&d, &classes, &path).unwrap();
        let by_name = load_csv(
            &path,
            &LoadOptions {
                drop_column: Some(ColumnRef::Name("class".into())),
                ..opts()
            },
        )
        .unwrap();
        assert_eq!((by_name.rows(), by_name.feature_count()), (214, 9));
        let by_index = load_csv(
            &path,
            &LoadOptions {
                drop_column: Some(ColumnRef::Index(9)),
                ..opts()
            },
        )
        .unwrap();
        assert_eq!(by_name.values, by_index.values);
        assert_eq!(by_name.values, d.values);
        assert_eq!(by_name.attribute_kind, AttributeKind::Real);
        assert_eq!(load_csv(&path, &opts()).unwrap().feature_count(), 10);
    }

    #[test]
    fn constant_feature_minmaxes_to_zero() {
        let d = parse_csv(
            "c",
            "5\n5\n5\n",
            &LoadOptions {
                normalize: Normalization::MinMax,
                ..LoadOptions::default()
            },
        )
        .unwrap();
        assert!(d.values.iter().all(|v| *v == 0.0));
        assert_eq!(d.attribute_kind, AttributeKind::Integer);
    }

    #[test]
    fn attribute_kinds() {
        let kind = |t: &str| parse_csv("k", t, &LoadOptions::default()).unwrap().attribute_kind;
        assert_eq!(kind("0,1\n1,1\n0,0\n"), AttributeKind::Binary);
        assert_eq!(kind("0,2\n1,7\n"), AttributeKind::Integer);
        assert_eq!(kind("0.5,2\n1,7\n"), AttributeKind::Real);
        let (spect, _) = synthetic::generate(synthetic::Shape::Spect, 3);
        assert_eq!(spect.attribute_kind, AttributeKind::Binary);
    }

    #[test]
    fn parse_errors_name_the_cell() {
        let e = parse_csv("e", "1,2\n3\n", &LoadOptions::default()).unwrap_err();
        assert_eq!(
            e,
            DataError::Ragged {
                row: 2,
                expected: 2,
                found: 1
            }
        );
        let e = parse_csv("e", "1,2\n3,x\n", &LoadOptions::default()).unwrap_err();
        assert!(matches!(e, DataError::NotNumeric { row: 2, column: 2, .. }));
        assert_eq!(parse_csv("e", "", &LoadOptions::default()).unwrap_err(), DataError::Empty);
        assert_eq!(parse_csv("e", "a,b\n", &opts()).unwrap_err(), DataError::Empty);
        let e = parse_csv(
            "e",
            "a,b\n1,2\n",
            &LoadOptions {
                drop_column: Some(ColumnRef::Name("z".into())),
                ..opts()
            },
        )
        .unwrap_err();
        assert_eq!(e, DataError::MissingColumn("z".into()));
    }

    #[test]
    fn minmax_range_and_identity_without_normalisation() {
        let text = "1.5,-2,10\n0.25,4,10\n3.125,0.5,11\n";
        let raw = parse_csv("r", text, &LoadOptions::default()).unwrap();
        assert_eq!(raw.values[[0, 0]], 1.5);
        assert_eq!(raw.values[[2, 0]], 3.125);
        let scaled = parse_csv(
            "r",
            text,
            &LoadOptions {
                normalize: Normalization::MinMax,
                ..LoadOptions::default()
            },
        )
        .unwrap();
        assert!(scaled.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = Dataset::from_matrix("s", Array2::zeros((10, 2))).unwrap();
        let s = split(&d, 0.2, 4).unwrap();
        assert_eq!((s.test_indices.len(), s.train_indices.len()), (2, 8));
        assert_eq!(s, split(&d, 0.2, 4).unwrap());
        let one = Dataset::from_matrix("s", Array2::zeros((1, 2))).unwrap();
        assert!(split(&one, 0.2, 0).is_err());
        assert!(split(&d, 1.0, 0).is_err());
    }

    #[test]
    fn split_partitions_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let n = rng.random_range(2..300);
            let seed = rng.random();
            let d = Dataset::from_matrix("p", Array2::zeros((n, 1))).unwrap();
            let s = split(&d, DEFAULT_TEST_FRACTION, seed).unwrap();
            let test: HashSet<_> = s.test_indices.iter().collect();
            let train: HashSet<_> = s.train_indices.iter().collect();
            assert!(test.is_disjoint(&train));
            assert_eq!(test.len() + train.len(), n);
            assert_eq!(s.test_indices.len(), (0.2 * n as f64).round() as usize);
        }
        for n in 2..=10_000usize {
            let expected = (0.2 * n as f64).round() as usize;
            assert_eq!(expected, (n + 2) / 5, "n={n}");
        }
    }
}
