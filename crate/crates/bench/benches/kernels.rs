use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ridgekernel::krr::{closed_form_loss, fit, neumann_loss};
use ridgekernel::optim::{init_theta, objective, LossMode};
use ridgekernel::pipeline::{iris, standardize};
use ridgekernel::ridgepoly::{apply_diff, closure_check, parse_poly};
use ridgekernel::{gram, Activation, RegularizedProblem};

fn iris_setup() -> (Vec<Vec<f64>>, Vec<f64>, ridgekernel::ThetaParams) {
    let (ds, _) = standardize(&iris()).unwrap();
    let theta = init_theta(2, 4, 0).unwrap().unpack(Activation::Cosine).unwrap();
    (ds.points().to_vec(), ds.indicator(1), theta)
}

fn bench_gram(c: &mut Criterion) {
    let (pts, _, theta) = iris_setup();
    let mut group = c.benchmark_group("gram");
    for n in [50, 150] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| gram(black_box(&theta), black_box(&pts[..n])).unwrap())
        });
    }
    group.finish();
}

fn bench_fit(c: &mut Criterion) {
    let (pts, y, theta) = iris_setup();
    c.bench_function("fit/iris", |b| {
        b.iter(|| fit(black_box(&theta), &pts, &y, 0.01).unwrap())
    });
    let problem = RegularizedProblem::from_sample(&theta, &pts, &y, 0.01).unwrap();
    c.bench_function("closed_form_loss/iris", |b| {
        b.iter(|| closed_form_loss(black_box(&problem)).unwrap())
    });
}

fn bench_neumann(c: &mut Criterion) {
    let (pts, y, theta) = iris_setup();
    let k = gram(&theta, &pts).unwrap();
    let lambda = 2.0 * ridgekernel::spectral_norm(&k) / pts.len() as f64;
    let problem = RegularizedProblem::new(k, y.clone(), lambda).unwrap();
    let mut group = c.benchmark_group("neumann_loss");
    for order in [5, 20] {
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |b, &order| {
            b.iter(|| neumann_loss(black_box(&problem), order).unwrap())
        });
    }
    group.finish();

    let flat = init_theta(2, 4, 0).unwrap();
    let mut group = c.benchmark_group("objective");
    for (name, mode) in [("qr", LossMode::ClosedFormQr), ("neumann5", LossMode::Neumann(5))] {
        group.bench_function(name, |b| {
            b.iter(|| objective(black_box(&flat), &pts, &y, 10.0, Activation::Cosine, mode))
        });
    }
    group.finish();
}

fn bench_poly(c: &mut Criterion) {
    let wedge = parse_poly("x1 y2 - x2 y1").unwrap();
    let q = parse_poly("(x1^2 + x2^2)(y1^2 + y2^2)").unwrap();
    c.bench_function("apply_diff/wedge", |b| {
        b.iter(|| apply_diff(black_box(&wedge), black_box(&q)).unwrap())
    });
    let cubic = parse_poly("(2 x1 + 3 x2 - y1 - y2)^4").unwrap();
    c.bench_function("closure_check/degree4", |b| {
        b.iter(|| closure_check(black_box(&cubic)).unwrap())
    });
}

criterion_group!(benches, bench_gram, bench_fit, bench_neumann, bench_poly);
criterion_main!(benches);
