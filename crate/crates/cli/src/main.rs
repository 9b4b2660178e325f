use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ridgekernel::mercer::{frame_check, parse_signed_vectors};
use ridgekernel::optim::{LossMode, OptimConfig};
use ridgekernel::pipeline::{
    evaluate, iris, load_csv, pca, predict_labels, run_table1, standardize, train_ovr, write_projection_csv, Dataset,
    Holdout, KeyValueConfig, OvrModel, Table1Config, TrainSettings,
};
use ridgekernel::ridgepoly::{closure_check, find_witness, parse_poly, vanishes_on_l};
use ridgekernel::shift_approx::{approx_sweep, median_sup_error, write_approx_csv, SweepSpec};
use ridgekernel::{Activation, CompactBox};

#[derive(Parser)]
#[command(name = "ridgekernel", version, about = "Ridge-function kernel machines")]
struct Cli {
    /// key = value file with defaults for the flags below
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for all randomness
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a one-vs-rest classifier and write it to a model file
    Train(TrainArgs),
    /// Score a model file against a labeled CSV
    Evaluate(EvaluateArgs),
    /// Sup error of the random-feature Gaussian approximation
    ApproxCheck(ApproxArgs),
    /// Frame condition of a signed feature model
    MercerCheck(MercerArgs),
    /// Vanishing and closure-membership tests for a polynomial in x and y
    PolyCheck(PolyArgs),
    /// Accuracy table for the four loss/activation combinations
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Qr,
    Neumann,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Md,
}

/// Training flags shared by `train` and `report`.
#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Optimizer iteration cap per run
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    neumann_order: Option<usize>,
    /// Number of starts; seeds are `seed, seed+1, ...`
    #[arg(long)]
    seeds: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled CSV; the bundled Iris data when omitted
    #[arg(long)]
    data: Option<PathBuf>,
    /// cos or relu
    #[arg(long)]
    activation: Option<String>,
    #[arg(long, value_enum)]
    solver: Option<Solver>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
    /// Write the optimizer trace of each class to this CSV
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "md")]
    report: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write PC1/PC2 coordinates with true and predicted labels to this CSV
    #[arg(long)]
    projection: Option<PathBuf>,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long)]
    gamma: Option<f64>,
    /// Comma-separated feature counts
    #[arg(long, value_delimiter = ',')]
    m1_list: Option<Vec<usize>>,
    /// Cube `LO..HI` in every coordinate
    #[arg(long, allow_hyphen_values = true)]
    r#box: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Lattice points per dimension
    #[arg(long)]
    grid: Option<usize>,
    /// Seeds per feature count
    #[arg(long)]
    seeds: Option<usize>,
    /// Phase count for discretization; 0 keeps the random phases
    #[arg(long)]
    phases: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MercerArgs {
    /// CSV rows `+|-,v1,...,vn`
    #[arg(long)]
    vectors: PathBuf,
}

#[derive(Args)]
struct PolyArgs {
    #[arg(long, allow_hyphen_values = true)]
    expr: String,
    /// Also decide membership in the closure of ridge kernels
    #[arg(long)]
    membership: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Run the four training configurations
    #[arg(long)]
    run_table1: bool,
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Evaluate on a held-out fraction of the rows instead of all rows
    #[arg(long)]
    holdout: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "seed",
    "m",
    "lambda",
    "max_iters",
    "neumann_order",
    "seeds",
    "activation",
    "solver",
    "gamma",
    "m1_list",
    "box",
    "dim",
    "grid",
    "phases",
];

/// Command-line value, else the config file value, else `default`.
struct Defaults {
    file: KeyValueConfig,
}

impl Defaults {
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        Ok(self.file.get(key)?.unwrap_or(default))
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(path) => KeyValueConfig::load(path)?,
        None => KeyValueConfig::default(),
    };
    file.check_keys(KNOWN_KEYS)?;
    let defaults = Defaults { file };
    let seed = defaults.pick(cli.seed, "seed", 0u64)?;

    match cli.command {
        Command::Train(args) => train(&defaults, seed, args),
        Command::Evaluate(args) => evaluate_cmd(args),
        Command::ApproxCheck(args) => approx_check(&defaults, seed, args),
        Command::MercerCheck(args) => mercer_check(args),
        Command::PolyCheck(args) => poly_check(seed, args),
        Command::Report(args) => report(&defaults, seed, args),
    }
}

fn load_data(path: Option<&Path>) -> Result<Dataset> {
    Ok(match path {
        Some(p) => load_csv(p)?,
        None => iris(),
    })
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn seed_list(seed: u64, count: usize) -> Result<Vec<u64>> {
    if count == 0 {
        bail!("--seeds must be at least 1");
    }
    Ok((0..count as u64).map(|i| seed.wrapping_add(i)).collect())
}

fn optim_config(d: &Defaults, args: &ModelArgs) -> Result<OptimConfig> {
    let base = OptimConfig::default();
    Ok(OptimConfig {
        max_iters: d.pick(args.max_iters, "max_iters", base.max_iters)?,
        ..base
    })
}

fn train(d: &Defaults, seed: u64, args: TrainArgs) -> Result<()> {
    let raw = load_data(args.data.as_deref())?;
    let (ds, stats) = standardize(&raw)?;
    let activation: Activation = d.pick(args.activation, "activation", "cos".to_string())?.parse()?;
    let solver = match args.solver {
        Some(s) => s,
        None => match d.file.raw("solver") {
            None => Solver::Qr,
            Some(v) => Solver::from_str(v, true).map_err(|e| anyhow::anyhow!("config key 'solver': {e}"))?,
        },
    };
    let order = d.pick(args.model.neumann_order, "neumann_order", 5)?;
    let loss_mode = match solver {
        Solver::Qr => LossMode::ClosedFormQr,
        Solver::Neumann => LossMode::Neumann(order),
    };
    let settings = TrainSettings {
        m: d.pick(args.model.m, "m", 2)?,
        lambda: d.pick(args.model.lambda, "lambda", 0.01)?,
        activation,
        loss_mode,
        seeds: seed_list(seed, d.pick(args.model.seeds, "seeds", 10)?)?,
        optim: optim_config(d, &args.model)?,
    };
    let trained = train_ovr(&ds, &settings)?;
    let model = trained.model.clone().with_standardization(stats)?;
    fs::write(&args.out, model.to_text()).with_context(|| format!("writing {}", args.out.display()))?;

    for (name, run) in ds.class_names().iter().zip(&trained.runs) {
        println!(
            "class {name}: seed {} loss {:.6e} status {} after {} iterations",
            run.seed, run.loss, run.status, run.iterations
        );
    }
    println!(
        "training accuracy {:.4}",
        ridgekernel::pipeline::accuracy(&trained.model, &ds)?
    );

    if let Some(path) = &args.trace {
        let mut out = Vec::new();
        writeln!(out, "class,iteration,loss,step,status")?;
        for (name, run) in ds.class_names().iter().zip(&trained.runs) {
            let mut block = Vec::new();
            run.write_trace_csv(&mut block)?;
            for line in String::from_utf8(block)?.lines().skip(1) {
                writeln!(out, "{name},{line}")?;
            }
        }
        fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    }
    if trained.any_failed() {
        eprintln!("warning: at least one class ended without progress or diverged");
    }
    Ok(())
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<()> {
    let text = fs::read_to_string(&args.model).with_context(|| format!("reading {}", args.model.display()))?;
    let model = OvrModel::from_text(&text)?;
    let raw = load_data(args.data.as_deref())?;
    let report = evaluate(&model, &raw)?;
    let body = match args.report {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Md => report.to_markdown(),
    };
    write_output(args.out.as_deref(), &body)?;

    if let Some(path) = &args.projection {
        let ds = model.prepare(&raw)?;
        let p = pca(ds.points(), 2.min(ds.d()))?;
        let names = model.class_names();
        let truth: Vec<String> = raw.labels().iter().map(|&l| raw.class_names()[l - 1].clone()).collect();
        let predicted: Vec<String> = predict_labels(&model, &ds)?
            .iter()
            .map(|&l| names[l - 1].clone())
            .collect();
        let mut out = Vec::new();
        write_projection_csv(&p, ds.points(), &truth, Some(&predicted), &mut out)?;
        fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn parse_box(text: &str) -> Result<(f64, f64)> {
    let (lo, hi) = text
        .split_once("..")
        .with_context(|| format!("box '{text}' is not of the form LO..HI"))?;
    Ok((lo.trim().parse()?, hi.trim().parse()?))
}

fn approx_check(d: &Defaults, seed: u64, args: ApproxArgs) -> Result<()> {
    let m1_list = match args.m1_list {
        Some(v) => v,
        None => match d.file.raw("m1_list") {
            Some(v) => v.split(',').map(|s| s.trim().parse()).collect::<Result<_, _>>()?,
            None => vec![100, 400, 1600],
        },
    };
    let (lo, hi) = parse_box(&d.pick(args.r#box, "box", "-1..1".to_string())?)?;
    let dim = d.pick(args.dim, "dim", 2)?;
    let phases = d.pick(args.phases, "phases", 3)?;
    let spec = SweepSpec {
        gamma: d.pick(args.gamma, "gamma", 1.0)?,
        m1_list: m1_list.clone(),
        seeds: seed_list(seed, d.pick(args.seeds, "seeds", 20)?)?,
        region: CompactBox::cube(lo, hi, dim)?,
        grid_per_dim: d.pick(args.grid, "grid", 17)?,
        phases: (phases > 0).then_some(phases),
    };
    let rows = approx_sweep(&spec)?;
    let mut csv = Vec::new();
    write_approx_csv(&rows, &mut csv)?;
    match &args.out {
        Some(path) => {
            fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
            for m1 in &m1_list {
                if let Some(med) = median_sup_error(&rows, *m1) {
                    println!("M1={m1}: median sup error {med:.6}");
                }
            }
        }
        None => io::stdout().write_all(&csv)?,
    }
    Ok(())
}

fn mercer_check(args: MercerArgs) -> Result<()> {
    let text = fs::read_to_string(&args.vectors).with_context(|| format!("reading {}", args.vectors.display()))?;
    let model = parse_signed_vectors(&text)?;
    let v = frame_check(&model)?;
    println!("mercer: {}", v.is_mercer);
    println!("min eigenvalue: {:.12e}", v.min_eigenvalue);
    Ok(())
}

fn poly_check(seed: u64, args: PolyArgs) -> Result<()> {
    let p = parse_poly(&args.expr)?;
    println!("polynomial: {p}");
    let vanishes = vanishes_on_l(&p)?;
    println!("vanishes on planes: {vanishes}");
    if let Some(w) = find_witness(&p, seed)? {
        println!(
            "witness: alpha={} beta={} w={:?} value={:.6e}",
            w.alpha, w.beta, w.w, w.value
        );
    }
    if args.membership {
        let verdict = closure_check(&p)?;
        println!("member: {}", verdict.member);
        if let Some((element, value)) = verdict.witness {
            println!("obstruction: p = {}", element.poly);
            println!("p(D) q = {value}");
        }
    }
    Ok(())
}

fn report(d: &Defaults, seed: u64, args: ReportArgs) -> Result<()> {
    if !args.run_table1 {
        bail!("nothing to do; pass --run-table1");
    }
    let raw = load_data(args.data.as_deref())?;
    let base = Table1Config::default();
    let cfg = Table1Config {
        m: d.pick(args.model.m, "m", base.m)?,
        lambda: d.pick(args.model.lambda, "lambda", base.lambda)?,
        neumann_order: d.pick(args.model.neumann_order, "neumann_order", base.neumann_order)?,
        seeds: seed_list(seed, d.pick(args.model.seeds, "seeds", base.seeds.len())?)?,
        optim: optim_config(d, &args.model)?,
        holdout: args.holdout.map(|fraction| Holdout { fraction, seed }),
    };
    let table = run_table1(&raw, &cfg)?;
    write_output(args.out.as_deref(), &table.to_markdown())
}
