//! Data loading, standardization, PCA and one-vs-rest classification.

mod config;
mod dataset;
mod ovr;
mod pca;
mod report;

pub use config::KeyValueConfig;
pub use dataset::{iris, load_csv, parse_csv, standardize, Dataset, StandardizeStats};
pub use ovr::{
    accuracy, argmax_label, class_seed, classify, predict_labels, train_ovr, OvrModel, OvrTraining, TrainSettings,
};
pub use pca::{pca, write_projection_csv, PcaResult};
pub use report::{
    evaluate, holdout_split, run_table1, run_table1_row, table1_methods, EvaluationReport, Holdout, SeedResult,
    Table1Config, Table1Report, Table1Row,
};
