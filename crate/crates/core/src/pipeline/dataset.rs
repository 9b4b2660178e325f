use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stats;

static IRIS_CSV: &str = include_str!("../../data/iris.csv");

/// Numeric design matrix with class labels `1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<Vec<f64>>,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        x: Vec<Vec<f64>>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::input("dataset has no rows"));
        }
        if x.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: labels.len(),
            });
        }
        let d = feature_names.len();
        if let Some(row) = x.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        let k = class_names.len();
        if let Some(&l) = labels.iter().find(|&&l| l == 0 || l > k) {
            return Err(Error::input(format!("label {l} outside 1..={k}")));
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("dataset contains a non-finite value"));
        }
        Ok(Dataset {
            x,
            labels,
            feature_names,
            class_names,
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn d(&self) -> usize {
        self.feature_names.len()
    }

    /// Number of classes.
    pub fn k(&self) -> usize {
        self.class_names.len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k()];
        for &l in &self.labels {
            counts[l - 1] += 1;
        }
        counts
    }

    /// 0/1 targets for the one-vs-rest task of class `class` (1-based).
    pub fn indicator(&self, class: usize) -> Vec<f64> {
        self.labels
            .iter()
            .map(|&l| if l == class { 1.0 } else { 0.0 })
            .collect()
    }

    /// Same labels and names with a replaced design matrix.
    pub fn with_points(&self, x: Vec<Vec<f64>>) -> Result<Self> {
        Dataset::new(
            x,
            self.labels.clone(),
            self.feature_names.clone(),
            self.class_names.clone(),
        )
    }

    /// Rows selected by index, keeping the class list.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let x = rows.iter().map(|&i| self.x[i].clone()).collect();
        let labels = rows.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(x, labels, self.feature_names.clone(), self.class_names.clone())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.feature_names.join(",");
        out.push_str(",label\n");
        for (row, &l) in self.x.iter().zip(&self.labels) {
            for v in row {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&self.class_names[l - 1]);
            out.push('\n');
        }
        out
    }
}

/// The Iris data bundled with the crate: 150 rows, 4 features, 3 species.
pub fn iris() -> Dataset {
    parse_csv(IRIS_CSV).expect("bundled iris data parses")
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text)
}

/// Parses rows of numeric fields followed by a label string. A first line
/// whose leading fields are not all numeric is taken as a header. Labels
/// are numbered in order of first appearance.
pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();

    let Some(&(first_ln, first)) = rows.peek() else {
        return Err(Error::parse(1, "empty data file"));
    };
    let first_fields: Vec<&str> = first.split(',').map(str::trim).collect();
    if first_fields.len() < 2 {
        return Err(Error::parse(first_ln, "expected at least one feature and a label"));
    }
    let d = first_fields.len() - 1;
    let is_header = first_fields[..d].iter().any(|f| f.parse::<f64>().is_err());
    let feature_names: Vec<String> = if is_header {
        rows.next();
        first_fields[..d].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=d).map(|i| format!("x{i}")).collect()
    };

    let mut x = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    for (ln, line) in rows {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != d + 1 {
            return Err(Error::parse(
                ln,
                format!("expected {} fields, found {}", d + 1, fields.len()),
            ));
        }
        let row = fields[..d]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(ln, format!("'{f}' is not a number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let name = fields[d];
        if name.is_empty() {
            return Err(Error::parse(ln, "missing label"));
        }
        let label = match class_names.iter().position(|c| c == name) {
            Some(i) => i + 1,
            None => {
                class_names.push(name.to_string());
                class_names.len()
            }
        };
        x.push(row);
        labels.push(label);
    }
    if x.is_empty() {
        return Err(Error::parse(first_ln + 1, "no data rows"));
    }
    Dataset::new(x, labels, feature_names, class_names)
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizeStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizeStats {
    pub fn fit(points: &[Vec<f64>]) -> Result<Self> {
        let d = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::input("no rows to standardize"))?;
        let mut mean = Vec::with_capacity(d);
        let mut std = Vec::with_capacity(d);
        for j in 0..d {
            let col: Vec<f64> = points.iter().map(|r| r[j]).collect();
            let mu = stats::mean(&col).unwrap_or(0.0);
            let sd = stats::std_dev(&col).unwrap_or(0.0);
            // relative test so a constant column with rounding noise is caught
            if !(sd > 1e-12 * (1.0 + mu.abs())) {
                return Err(Error::ZeroVariance { feature: j });
            }
            mean.push(mu);
            std.push(sd);
        }
        Ok(StandardizeStats { mean, std })
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn inverse(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| v * s + m)
            .collect()
    }

    pub fn transform_dataset(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.d() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: ds.d(),
            });
        }
        ds.with_points(ds.points().iter().map(|r| self.transform(r)).collect())
    }
}

/// Shifts and scales each feature to mean 0 and population variance 1.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, StandardizeStats)> {
    let stats = StandardizeStats::fit(ds.points())?;
    Ok((stats.transform_dataset(ds)?, stats))
}
