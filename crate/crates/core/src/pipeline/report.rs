use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::Activation;
use crate::optim::{LossMode, OptimConfig, RunStatus};
use crate::pipeline::dataset::{standardize, Dataset};
use crate::pipeline::ovr::{accuracy, predict_labels, train_ovr, OvrModel, TrainSettings};
use crate::pipeline::pca::pca;
use crate::stats;

/// Held-out evaluation: a shuffled fraction of the rows is kept out of
/// training and used for accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Holdout {
    pub fraction: f64,
    pub seed: u64,
}

/// Splits row indices into `(train, test)`.
pub fn holdout_split(n: usize, holdout: Holdout) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(holdout.fraction > 0.0 && holdout.fraction < 1.0) {
        return Err(Error::input("holdout fraction must lie in (0, 1)"));
    }
    let n_test = ((n as f64) * holdout.fraction).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::input("holdout leaves an empty train or test part"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(holdout.seed));
    let mut test = idx.split_off(n - n_test);
    idx.sort_unstable();
    test.sort_unstable();
    Ok((idx, test))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Config {
    pub m: usize,
    pub lambda: f64,
    pub neumann_order: usize,
    pub seeds: Vec<u64>,
    pub optim: OptimConfig,
    /// Evaluate on a held-out part instead of the full dataset.
    pub holdout: Option<Holdout>,
}

impl Default for Table1Config {
    fn default() -> Self {
        Table1Config {
            m: 2,
            lambda: 0.01,
            neumann_order: 5,
            seeds: (0..10).collect(),
            optim: OptimConfig::default(),
            holdout: None,
        }
    }
}

/// Accuracy of the single-start model trained with one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub accuracy: f64,
    /// Per-class optimizer status.
    pub statuses: Vec<RunStatus>,
    pub losses: Vec<f64>,
}

impl SeedResult {
    pub fn failed(&self) -> bool {
        self.statuses.iter().any(|s| s.is_failure())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub loss_mode: LossMode,
    pub activation: Activation,
    pub seeds: Vec<SeedResult>,
}

impl Table1Row {
    pub fn method_name(&self) -> String {
        match self.loss_mode {
            LossMode::ClosedFormQr => "Inverted QR matrix".to_string(),
            LossMode::Neumann(l) => format!("Neumann series (L={l})"),
        }
    }

    pub fn function_name(&self) -> &str {
        match self.activation {
            Activation::Cosine => "cos",
            Activation::Relu => "ReLU",
            Activation::Custom(ref c) => c.name(),
        }
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.seeds.iter().map(|s| s.accuracy).collect()
    }

    pub fn best(&self) -> f64 {
        self.accuracies().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn median(&self) -> f64 {
        stats::median(&self.accuracies()).unwrap_or(f64::NAN)
    }

    /// Population standard deviation of the per-seed accuracies.
    pub fn spread(&self) -> f64 {
        stats::std_dev(&self.accuracies()).unwrap_or(f64::NAN)
    }

    pub fn failed_runs(&self) -> usize {
        self.seeds.iter().filter(|s| s.failed()).count()
    }

    pub fn all_failed(&self) -> bool {
        !self.seeds.is_empty() && self.failed_runs() == self.seeds.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Report {
    pub n: usize,
    pub d: usize,
    pub class_names: Vec<String>,
    pub pca_explained: f64,
    pub evaluated_on: String,
    pub rows: Vec<Table1Row>,
}

impl Table1Report {
    pub fn row(&self, mode: LossMode, activation: &Activation) -> Option<&Table1Row> {
        self.rows
            .iter()
            .find(|r| r.loss_mode == mode && r.activation.name() == activation.name())
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "| Method | Function | Accuracy | Median | Std | Failed runs |");
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for r in &self.rows {
            let acc = if r.all_failed() {
                format!("optimization failed (best {:.4})", r.best())
            } else {
                format!("{:.4}", r.best())
            };
            let _ = writeln!(
                s,
                "| {} | {} | {} | {:.4} | {:.4} | {}/{} |",
                r.method_name(),
                r.function_name(),
                acc,
                r.median(),
                r.spread(),
                r.failed_runs(),
                r.seeds.len()
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "Data: N={}, d={}, classes: {}. Accuracy is the best over seeds, evaluated on {}.",
            self.n,
            self.d,
            self.class_names.join(", "),
            self.evaluated_on
        );
        let _ = writeln!(s, "PC1+PC2 explained variance: {:.4}", self.pca_explained);
        let _ = writeln!(s);
        let _ = writeln!(s, "Per-seed accuracies:");
        let _ = writeln!(s);
        let seeds: Vec<String> = self
            .rows
            .first()
            .map(|r| r.seeds.iter().map(|s| format!("seed {}", s.seed)).collect())
            .unwrap_or_default();
        let _ = writeln!(s, "| Method | Function | {} |", seeds.join(" | "));
        let _ = writeln!(s, "|---|---|{}", "---|".repeat(seeds.len()));
        for r in &self.rows {
            let cells: Vec<String> = r
                .seeds
                .iter()
                .map(|sr| {
                    if sr.failed() {
                        let st: Vec<&str> = sr.statuses.iter().map(|s| s.as_str()).collect();
                        format!("{:.4} ({})", sr.accuracy, st.join("/"))
                    } else {
                        format!("{:.4}", sr.accuracy)
                    }
                })
                .collect();
            let _ = writeln!(
                s,
                "| {} | {} | {} |",
                r.method_name(),
                r.function_name(),
                cells.join(" | ")
            );
        }
        s
    }
}

/// The four method/function combinations, in table order.
pub fn table1_methods(neumann_order: usize) -> Vec<(LossMode, Activation)> {
    vec![
        (LossMode::ClosedFormQr, Activation::Relu),
        (LossMode::ClosedFormQr, Activation::Cosine),
        (LossMode::Neumann(neumann_order), Activation::Relu),
        (LossMode::Neumann(neumann_order), Activation::Cosine),
    ]
}

/// Trains one single-start one-vs-rest model per seed on standardized
/// data and records its accuracy on `eval` (the training set unless a
/// holdout is used).
pub fn run_table1_row(
    train: &Dataset,
    eval: &Dataset,
    cfg: &Table1Config,
    loss_mode: LossMode,
    activation: Activation,
) -> Result<Table1Row> {
    let mut seeds = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let settings = TrainSettings {
            m: cfg.m,
            lambda: cfg.lambda,
            activation: activation.clone(),
            loss_mode,
            seeds: vec![seed],
            optim: cfg.optim.clone(),
        };
        let trained = train_ovr(train, &settings)?;
        seeds.push(SeedResult {
            seed,
            accuracy: accuracy(&trained.model, eval)?,
            statuses: trained.statuses(),
            losses: trained.runs.iter().map(|r| r.loss).collect(),
        });
    }
    Ok(Table1Row {
        loss_mode,
        activation,
        seeds,
    })
}

/// Standardizes `raw`, reports the two-component PCA share and runs all
/// four rows of the accuracy table.
pub fn run_table1(raw: &Dataset, cfg: &Table1Config) -> Result<Table1Report> {
    let (ds, _) = standardize(raw)?;
    let pca_explained = pca(ds.points(), 2.min(ds.d()))?.total_explained();
    let (train, eval, evaluated_on) = match cfg.holdout {
        None => (ds.clone(), ds.clone(), "the full dataset".to_string()),
        Some(h) => {
            let (tr, te) = holdout_split(ds.n(), h)?;
            (
                ds.subset(&tr)?,
                ds.subset(&te)?,
                format!("a held-out {:.0}% of the rows", 100.0 * h.fraction),
            )
        }
    };
    let rows = table1_methods(cfg.neumann_order)
        .into_iter()
        .map(|(mode, act)| run_table1_row(&train, &eval, cfg, mode, act))
        .collect::<Result<Vec<_>>>()?;
    Ok(Table1Report {
        n: ds.n(),
        d: ds.d(),
        class_names: ds.class_names().to_vec(),
        pca_explained,
        evaluated_on,
        rows,
    })
}

/// Accuracy and confusion counts of a trained model on a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub class_names: Vec<String>,
    pub accuracy: f64,
    /// `confusion[t][p]`: rows with true class `t+1` predicted as `p+1`.
    pub confusion: Vec<Vec<usize>>,
}

/// Scores raw rows; the standardization stored in the model is applied first.
pub fn evaluate(model: &OvrModel, ds: &Dataset) -> Result<EvaluationReport> {
    if ds.d() != model.d() {
        return Err(Error::DimensionMismatch {
            expected: model.d(),
            found: ds.d(),
        });
    }
    let pred = predict_labels(model, &model.prepare(ds)?)?;
    let k = model.class_names().len();
    // true labels of the data index its own class list; match by name
    let mut confusion = vec![vec![0usize; k]; k];
    let mut hits = 0;
    for (p, &t) in pred.iter().zip(ds.labels()) {
        let name = &ds.class_names()[t - 1];
        let t_idx = model
            .class_names()
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::input(format!("class '{name}' is unknown to the model")))?;
        confusion[t_idx][p - 1] += 1;
        if t_idx + 1 == *p {
            hits += 1;
        }
    }
    Ok(EvaluationReport {
        class_names: model.class_names().to_vec(),
        accuracy: hits as f64 / ds.n() as f64,
        confusion,
    })
}

impl EvaluationReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("true\\predicted");
        for c in &self.class_names {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
        for (name, row) in self.class_names.iter().zip(&self.confusion) {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "{name},{}", cells.join(","));
        }
        let _ = writeln!(s, "accuracy,{}", self.accuracy);
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Accuracy: {:.4}", self.accuracy);
        let _ = writeln!(s);
        let _ = writeln!(s, "| true \\ predicted | {} |", self.class_names.join(" | "));
        let _ = writeln!(s, "|---|{}", "---|".repeat(self.class_names.len()));
        for (name, row) in self.class_names.iter().zip(&self.confusion) {
            let cells: Vec<String> = row.iter().map(usize::to_string).collect();
            let _ = writeln!(s, "| {name} | {} |", cells.join(" | "));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holdout_partitions_rows() {
        let (tr, te) = holdout_split(10, Holdout { fraction: 0.3, seed: 4 }).unwrap();
        assert_eq!(te.len(), 3);
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(holdout_split(10, Holdout { fraction: 1.0, seed: 0 }).is_err());
    }

    #[test]
    fn row_statistics() {
        let mk = |seed, accuracy, status| SeedResult {
            seed,
            accuracy,
            statuses: vec![status],
            losses: vec![0.0],
        };
        let row = Table1Row {
            loss_mode: LossMode::Neumann(5),
            activation: Activation::Relu,
            seeds: vec![
                mk(0, 0.5, RunStatus::Diverged),
                mk(1, 0.9, RunStatus::Converged),
                mk(2, 0.7, RunStatus::MaxIters),
            ],
        };
        assert_eq!(row.best(), 0.9);
        assert_eq!(row.median(), 0.7);
        assert_eq!(row.failed_runs(), 1);
        assert!(!row.all_failed());
        assert_eq!(row.method_name(), "Neumann series (L=5)");
        assert_eq!(row.function_name(), "ReLU");
    }
}
