use std::io::Write;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ridgekernel::optim::{LossMode, OptimConfig};
use ridgekernel::pipeline::{
    accuracy, argmax_label, evaluate, iris, load_csv, parse_csv, pca, run_table1, standardize, train_ovr,
    write_projection_csv, Dataset, OvrModel, Table1Config, TrainSettings,
};
use ridgekernel::{Activation, Error};

#[test]
fn load_from_disk_and_report_bad_lines() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "a,b,label\n1.0,2.0,u\n3.0,4.5,v\n-1,0,u").unwrap();
    let ds = load_csv(f.path()).unwrap();
    assert_eq!((ds.n(), ds.d(), ds.k()), (3, 2, 2));
    assert_eq!(ds.labels(), &[1, 2, 1]);

    let mut g = tempfile::NamedTempFile::new().unwrap();
    writeln!(g, "a,b,label\n1.0,2.0,u\n3.0,oops,v").unwrap();
    assert!(matches!(load_csv(g.path()), Err(Error::Parse { line: 3, .. })));
    assert!(matches!(load_csv("/nonexistent/data.csv"), Err(Error::Io { .. })));
}

#[test]
fn standardized_iris_has_unit_moments() {
    let (z, stats) = standardize(&iris()).unwrap();
    for j in 0..4 {
        let col: Vec<f64> = z.points().iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / 150.0;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 150.0;
        assert!(mean.abs() <= 1e-12);
        assert!((var - 1.0).abs() <= 1e-12);
    }
    for (raw, std) in iris().points().iter().zip(z.points()) {
        for (a, b) in stats.inverse(std).iter().zip(raw) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
    let (again, _) = standardize(&z).unwrap();
    for (a, b) in again.points().iter().zip(z.points()) {
        for (u, v) in a.iter().zip(b) {
            assert!((u - v).abs() <= 1e-12);
        }
    }
}

#[test]
fn iris_two_components_explain_most_variance() {
    let (z, _) = standardize(&iris()).unwrap();
    let r = pca(z.points(), 2).unwrap();
    assert!((r.total_explained() - 0.9581).abs() <= 0.002, "{}", r.total_explained());
    let all = pca(z.points(), 4).unwrap();
    assert!((all.total_explained() - 1.0).abs() <= 1e-10);
}

#[test]
fn projection_contracts_distances() {
    let (z, _) = standardize(&iris()).unwrap();
    let r = pca(z.points(), 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..500 {
        let (i, j) = (rng.random_range(0..150), rng.random_range(0..150));
        let (a, b) = (&z.points()[i], &z.points()[j]);
        let full: f64 = a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum();
        let (pa, pb) = (r.project(a), r.project(b));
        let proj: f64 = pa.iter().zip(&pb).map(|(u, v)| (u - v).powi(2)).sum();
        assert!(proj <= full * (1.0 + 1e-12) + 1e-12);
    }
}

#[test]
fn projection_csv_shape() {
    let (z, _) = standardize(&iris()).unwrap();
    let r = pca(z.points(), 2).unwrap();
    let labels: Vec<String> = z.labels().iter().map(|&l| z.class_names()[l - 1].clone()).collect();
    let mut buf = Vec::new();
    write_projection_csv(&r, z.points(), &labels, None, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("pc1,pc2,label"));
    assert_eq!(text.lines().count(), 151);
}

fn quick_settings(activation: Activation, loss_mode: LossMode) -> TrainSettings {
    TrainSettings {
        activation,
        loss_mode,
        seeds: vec![0],
        optim: OptimConfig {
            max_iters: 8,
            ..OptimConfig::default()
        },
        ..TrainSettings::default()
    }
}

#[test]
fn iris_ovr_has_three_models_of_twelve_parameters() {
    let (z, _) = standardize(&iris()).unwrap();
    let t = train_ovr(&z, &quick_settings(Activation::Cosine, LossMode::ClosedFormQr)).unwrap();
    assert_eq!(t.model.models().len(), 3);
    for m in t.model.models() {
        assert_eq!(m.theta().m() * (2 + m.theta().d()), 12);
    }
    let back = OvrModel::from_text(&t.model.to_text()).unwrap();
    assert_eq!(accuracy(&back, &z).unwrap(), accuracy(&t.model, &z).unwrap());
    let rep = evaluate(&t.model, &z).unwrap();
    assert_eq!(rep.confusion.iter().flatten().sum::<usize>(), 150);
    assert_eq!(rep.accuracy, accuracy(&t.model, &z).unwrap());
}

#[test]
fn relu_neumann_training_completes() {
    let (z, _) = standardize(&iris()).unwrap();
    let t = train_ovr(&z, &quick_settings(Activation::Relu, LossMode::Neumann(5))).unwrap();
    assert_eq!(t.model.models().len(), 3);
    assert_eq!(t.statuses().len(), 3);
}

#[test]
fn single_class_dataset_trains_one_model() {
    let ds = parse_csv("0.1,0.2,only\n0.5,-0.3,only\n-0.4,0.9,only\n").unwrap();
    assert_eq!(ds.indicator(1), vec![1.0; 3]);
    let t = train_ovr(&ds, &quick_settings(Activation::Cosine, LossMode::ClosedFormQr)).unwrap();
    assert_eq!(t.model.models().len(), 1);
    assert_eq!(accuracy(&t.model, &ds).unwrap(), 1.0);
}

#[test]
fn tiny_separable_set_is_memorized() {
    let ds = parse_csv("-2,0,a\n0,0,b\n2,0,c\n").unwrap();
    let settings = TrainSettings {
        lambda: 1e-4,
        m: 3,
        ..quick_settings(Activation::Cosine, LossMode::ClosedFormQr)
    };
    let t = train_ovr(&ds, &settings).unwrap();
    assert_eq!(accuracy(&t.model, &ds).unwrap(), 1.0);
}

#[test]
fn table_report_is_reproducible() {
    let raw = iris();
    let small: Vec<usize> = (0..150).step_by(5).collect();
    let ds: Dataset = raw.subset(&small).unwrap();
    let cfg = Table1Config {
        seeds: vec![0, 1],
        optim: OptimConfig {
            max_iters: 4,
            ..OptimConfig::default()
        },
        ..Table1Config::default()
    };
    let a = run_table1(&ds, &cfg).unwrap().to_markdown();
    let b = run_table1(&ds, &cfg).unwrap().to_markdown();
    assert_eq!(a, b);
    assert!(a.starts_with("| Method | Function | Accuracy |"));
    assert_eq!(
        a.lines()
            .filter(|l| l.starts_with("| Inverted QR") || l.starts_with("| Neumann"))
            .count(),
        8
    );
}

proptest! {
    #[test]
    fn argmax_is_invariant_under_monotone_maps(scores in prop::collection::vec(-5.0..5.0f64, 1..6), a in 0.1..3.0f64, b in -2.0..2.0f64) {
        let base = argmax_label(&scores);
        let affine: Vec<f64> = scores.iter().map(|s| a * s + b).collect();
        let cubic: Vec<f64> = scores.iter().map(|s| s.powi(3) + s).collect();
        let expo: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        prop_assert_eq!(argmax_label(&affine), base);
        prop_assert_eq!(argmax_label(&cubic), base);
        prop_assert_eq!(argmax_label(&expo), base);
    }
}
