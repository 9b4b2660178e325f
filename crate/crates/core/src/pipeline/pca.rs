use std::io::Write;

use crate::error::{Error, Result};
use crate::linalg::{dot, symmetric_eigen, Matrix};

/// Leading principal directions of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// Unit directions, largest variance first.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalues of the kept components.
    pub variances: Vec<f64>,
    /// `variances / trace`.
    pub explained_ratio: Vec<f64>,
    pub mean: Vec<f64>,
}

impl PcaResult {
    pub fn total_explained(&self) -> f64 {
        self.explained_ratio.iter().sum()
    }

    /// Coordinates of `x` along the kept components.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        self.components.iter().map(|c| dot(c, &centered)).collect()
    }
}

/// Top-`k` eigenvectors of the (population) covariance matrix.
pub fn pca<P: AsRef<[f64]>>(points: &[P], k: usize) -> Result<PcaResult> {
    let n = points.len();
    let d = points
        .first()
        .map(|p| p.as_ref().len())
        .ok_or_else(|| Error::input("pca of an empty sample"))?;
    if k == 0 || k > d {
        return Err(Error::input(format!("pca needs 1 <= k <= {d}, got {k}")));
    }
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: p.as_ref().len(),
        });
    }
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = Matrix::zeros(d, d);
    for p in points {
        let c: Vec<f64> = p.as_ref().iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += c[i] * c[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[(i, j)] / n as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let trace: f64 = (0..d).map(|i| cov[(i, i)]).sum();
    if !(trace > 0.0) {
        return Err(Error::input("pca of a sample with zero total variance"));
    }

    let eig = symmetric_eigen(&cov)?;
    let mut components = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for idx in (0..d).rev().take(k) {
        let mut v = eig.vector(idx);
        // sign convention: largest-magnitude entry positive
        let pivot = v
            .iter()
            .copied()
            .fold(0.0_f64, |a, x| if x.abs() > a.abs() { x } else { a });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        variances.push(eig.values[idx].max(0.0));
    }
    let explained_ratio = variances.iter().map(|v| v / trace).collect();
    Ok(PcaResult {
        components,
        variances,
        explained_ratio,
        mean,
    })
}

/// Writes `pc1,pc2,...,label[,predicted]` rows for external plotting.
pub fn write_projection_csv<W: Write, P: AsRef<[f64]>>(
    pca: &PcaResult,
    points: &[P],
    labels: &[String],
    predicted: Option<&[String]>,
    mut out: W,
) -> std::io::Result<()> {
    let header: Vec<String> = (1..=pca.components.len()).map(|i| format!("pc{i}")).collect();
    write!(out, "{},label", header.join(","))?;
    if predicted.is_some() {
        write!(out, ",predicted")?;
    }
    writeln!(out)?;
    for (i, p) in points.iter().enumerate() {
        let coords: Vec<String> = pca.project(p.as_ref()).iter().map(f64::to_string).collect();
        write!(out, "{},{}", coords.join(","), labels[i])?;
        if let Some(pred) = predicted {
            write!(out, ",{}", pred[i])?;
        }
        writeln!(out)?;
    }
    Ok(())
}
