use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernels::Activation;
use crate::krr::{fit, read_fitted_model, FittedModel};
use crate::optim::{minimize_multistart, LossMode, OptimConfig, OptimOutcome, RunStatus};
use crate::pipeline::dataset::{Dataset, StandardizeStats};
use crate::record::{header_fields, parse_field, RecordCursor};

/// Settings of one one-vs-rest training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub m: usize,
    pub lambda: f64,
    pub activation: Activation,
    pub loss_mode: LossMode,
    /// Multi-start seeds; every class runs one start per seed.
    pub seeds: Vec<u64>,
    /// Optimizer knobs; `m`, `activation` and `loss_mode` are overridden
    /// by the fields above.
    pub optim: OptimConfig,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            m: 2,
            lambda: 0.01,
            activation: Activation::Cosine,
            loss_mode: LossMode::ClosedFormQr,
            seeds: (0..10).collect(),
            optim: OptimConfig::default(),
        }
    }
}

impl TrainSettings {
    pub fn optim_config(&self) -> OptimConfig {
        OptimConfig {
            m: self.m,
            activation: self.activation.clone(),
            loss_mode: self.loss_mode,
            ..self.optim.clone()
        }
    }
}

/// Seed of the start for `class` (1-based) under the user seed `seed`, so
/// that the classes of one run draw independent initializations.
pub fn class_seed(seed: u64, class: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(class as u64)
}

/// One binary scorer per class, optionally preceded by standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrModel {
    class_names: Vec<String>,
    models: Vec<FittedModel>,
    standardize: Option<StandardizeStats>,
}

impl OvrModel {
    pub fn new(
        class_names: Vec<String>,
        models: Vec<FittedModel>,
        standardize: Option<StandardizeStats>,
    ) -> Result<Self> {
        if models.is_empty() || models.len() != class_names.len() {
            return Err(Error::DimensionMismatch {
                expected: class_names.len(),
                found: models.len(),
            });
        }
        let d = models[0].theta().d();
        if let Some(m) = models.iter().find(|m| m.theta().d() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.theta().d(),
            });
        }
        if let Some(s) = &standardize {
            if s.mean.len() != d || s.std.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.mean.len(),
                });
            }
        }
        Ok(OvrModel {
            class_names,
            models,
            standardize,
        })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn models(&self) -> &[FittedModel] {
        &self.models
    }

    pub fn d(&self) -> usize {
        self.models[0].theta().d()
    }

    /// Standardization recorded at training time, applied by
    /// [`OvrModel::prepare`] to raw inputs.
    pub fn standardization(&self) -> Option<&StandardizeStats> {
        self.standardize.as_ref()
    }

    pub fn with_standardization(mut self, stats: StandardizeStats) -> Result<Self> {
        if stats.mean.len() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: stats.mean.len(),
            });
        }
        self.standardize = Some(stats);
        Ok(self)
    }

    /// Maps a raw dataset into the model's input space.
    pub fn prepare(&self, ds: &Dataset) -> Result<Dataset> {
        match &self.standardize {
            Some(s) => s.transform_dataset(ds),
            None => Ok(ds.clone()),
        }
    }

    /// `f_k(x)` for every class.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.models.iter().map(|m| m.predict(x)).collect()
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        text.parse()
    }
}

impl fmt::Display for OvrModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "ovr-model classes={} d={} standardized={}",
            self.class_names.len(),
            self.d(),
            u8::from(self.standardize.is_some())
        )?;
        for name in &self.class_names {
            writeln!(f, "class {name}")?;
        }
        if let Some(s) = &self.standardize {
            let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
            writeln!(f, "mean {}", join(&s.mean))?;
            writeln!(f, "std {}", join(&s.std))?;
        }
        for m in &self.models {
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

impl FromStr for OvrModel {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cursor = RecordCursor::new(text);
        let (ln, line) = cursor.expect_line("ovr-model header")?;
        let fields = header_fields(line, ln, "ovr-model")?;
        let k: usize = parse_field(&fields, "classes", ln)?;
        let d: usize = parse_field(&fields, "d", ln)?;
        let standardized: u8 = parse_field(&fields, "standardized", ln)?;
        let mut class_names = Vec::with_capacity(k);
        for _ in 0..k {
            let (ln, line) = cursor.expect_line("class name")?;
            let name = line
                .strip_prefix("class ")
                .ok_or_else(|| Error::parse(ln, format!("expected 'class <name>', found '{line}'")))?;
            class_names.push(name.trim().to_string());
        }
        let standardize = if standardized == 1 {
            let mut read = |key: &str| -> Result<Vec<f64>> {
                let (ln, line) = cursor.expect_line(key)?;
                let rest = line
                    .strip_prefix(key)
                    .ok_or_else(|| Error::parse(ln, format!("expected '{key}' line")))?;
                let v = crate::kernels::parse_floats(rest).map_err(|m| Error::parse(ln, m))?;
                if v.len() != d {
                    return Err(Error::parse(ln, format!("expected {d} values, found {}", v.len())));
                }
                Ok(v)
            };
            let mean = read("mean")?;
            let std = read("std")?;
            Some(StandardizeStats { mean, std })
        } else {
            None
        };
        let models = (0..k)
            .map(|_| read_fitted_model(&mut cursor))
            .collect::<Result<Vec<_>>>()?;
        cursor.expect_end()?;
        OvrModel::new(class_names, models, standardize)
    }
}

/// Per-class optimization results of [`train_ovr`].
#[derive(Debug, Clone, PartialEq)]
pub struct OvrTraining {
    pub model: OvrModel,
    /// Best run per class.
    pub runs: Vec<OptimOutcome>,
    /// All runs per class, in seed order.
    pub all_runs: Vec<Vec<OptimOutcome>>,
}

impl OvrTraining {
    pub fn statuses(&self) -> Vec<RunStatus> {
        self.runs.iter().map(|r| r.status).collect()
    }

    /// Whether any class ended its best run in a failure state.
    pub fn any_failed(&self) -> bool {
        self.runs.iter().any(|r| r.status.is_failure())
    }
}

/// Fits one binary scorer per class on 0/1 targets. Each class runs the
/// multi-start optimizer over `settings.seeds` and refits the
/// representer coefficients at the best θ. A class whose optimizer made
/// no progress still gets a model at its best θ; its status is recorded.
pub fn train_ovr(ds: &Dataset, settings: &TrainSettings) -> Result<OvrTraining> {
    let config = settings.optim_config();
    let mut models = Vec::with_capacity(ds.k());
    let mut runs = Vec::with_capacity(ds.k());
    let mut all_runs = Vec::with_capacity(ds.k());
    for class in 1..=ds.k() {
        let y = ds.indicator(class);
        let seeds: Vec<u64> = settings.seeds.iter().map(|&s| class_seed(s, class)).collect();
        let outcome = minimize_multistart(ds.points(), &y, settings.lambda, &config, &seeds)?;
        let best = outcome.best_run().clone();
        models.push(fit(&best.theta, ds.points(), &y, settings.lambda)?);
        runs.push(best);
        all_runs.push(outcome.runs);
    }
    Ok(OvrTraining {
        model: OvrModel::new(ds.class_names().to_vec(), models, None)?,
        runs,
        all_runs,
    })
}

/// Index (1-based) of the largest entry; ties go to the smallest index.
pub fn argmax_label(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] || (scores[best].is_nan() && !s.is_nan()) {
            best = i;
        }
    }
    best + 1
}

/// Class label (1-based) with the highest score.
pub fn classify(model: &OvrModel, x: &[f64]) -> Result<usize> {
    Ok(argmax_label(&model.scores(x)?))
}

pub fn predict_labels(model: &OvrModel, ds: &Dataset) -> Result<Vec<usize>> {
    ds.points().iter().map(|x| classify(model, x)).collect()
}

/// Fraction of rows whose predicted label equals the true label.
pub fn accuracy(model: &OvrModel, ds: &Dataset) -> Result<f64> {
    let pred = predict_labels(model, ds)?;
    let hits = pred.iter().zip(ds.labels()).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / ds.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ThetaParams;

    fn constant_model(value: f64, d: usize) -> FittedModel {
        let theta = ThetaParams::new(d, vec![1.0], vec![0.0], vec![vec![0.0; d]], Activation::Cosine).unwrap();
        FittedModel::new(theta, vec![vec![0.0; d]], vec![value], 0.01).unwrap()
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_label(&[0.9, 0.1, 0.2]), 1);
        assert_eq!(argmax_label(&[0.5, 0.5, 0.1]), 1);
        assert_eq!(argmax_label(&[0.1, 0.5, 0.5]), 2);
        assert_eq!(argmax_label(&[f64::NAN, 0.2]), 2);
    }

    #[test]
    fn constant_first_class_gets_one_third_of_iris() {
        let ds = crate::pipeline::iris();
        let names = ds.class_names().to_vec();
        let model = OvrModel::new(
            names,
            vec![constant_model(1.0, 4), constant_model(0.0, 4), constant_model(0.0, 4)],
            None,
        )
        .unwrap();
        assert!((accuracy(&model, &ds).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn model_record_round_trip() {
        let ds = crate::pipeline::iris();
        let stats = StandardizeStats::fit(ds.points()).unwrap();
        let model = OvrModel::new(
            vec!["a b".into(), "c".into()],
            vec![constant_model(0.25, 4), constant_model(-1.0 / 3.0, 4)],
            Some(stats),
        )
        .unwrap();
        assert_eq!(OvrModel::from_text(&model.to_text()).unwrap(), model);
    }

    #[test]
    fn mismatched_models_rejected() {
        let r = OvrModel::new(
            vec!["a".into(), "b".into()],
            vec![constant_model(1.0, 2), constant_model(1.0, 3)],
            None,
        );
        assert!(r.is_err());
    }
}
