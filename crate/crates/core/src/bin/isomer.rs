use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use isomer::geometry::{load_mesh, save_mesh};
use isomer::metrics::{evaluate, normalize_unit_box, Metric, MetricsConfig, DEFAULT_FSCORE_TAU};
use isomer::pipeline::{reconstruct, InitMode, RunManifest, RUN_MANIFEST_FILE};
use isomer::views::{generate_fixture, load_observations, OrthoView};
use isomer::{Error, Result};

#[derive(Parser)]
#[command(name = "isomer", version, about = "Mesh reconstruction from orthographic views")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a ground-truth mesh into a view set.
    Fixture(FixtureArgs),
    /// Reconstruct a colored mesh from a view set.
    Reconstruct(ReconstructArgs),
    /// Compare a predicted mesh against ground truth.
    Eval(EvalArgs),
}

#[derive(Args)]
struct FixtureArgs {
    mesh: PathBuf,
    #[arg(long, default_value_t = 4)]
    views: usize,
    #[arg(long, default_value_t = 256)]
    res: usize,
    #[arg(long)]
    out: PathBuf,
    /// Write 16-bit normal maps.
    #[arg(long)]
    sixteen_bit: bool,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Directory holding views.json and the images.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output mesh (.ply or .obj).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Coarse iterations [default: 300].
    #[arg(long)]
    iters: Option<usize>,
    /// Learning rate [default: 0.3].
    #[arg(long)]
    lr: Option<f64>,
    /// Expansion weight [default: 0.1].
    #[arg(long)]
    expansion: Option<f64>,
    /// Refinement iterations [default: 100].
    #[arg(long)]
    refine_iters: Option<usize>,
    /// auto or sphere [default: auto].
    #[arg(long)]
    init: Option<InitMode>,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Rerun from a run_manifest.json; other flags override its values.
    #[arg(long)]
    replay: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Comma-separated subset of cd, iou, fscore, psnr, ssim.
    #[arg(long, default_value = "cd,iou,fscore")]
    metrics: String,
    #[arg(long, default_value_t = DEFAULT_FSCORE_TAU)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; defaults to metrics.json beside the prediction.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Image { .. } | Error::Json { .. } | Error::Format { .. } => 2,
        Error::TopologyMismatch { .. } => 3,
        Error::NanLoss { .. } => 4,
        _ => 1,
    }
}

fn fixture(a: FixtureArgs) -> Result<()> {
    if a.views < 2 {
        return Err(Error::TooFewViews);
    }
    let mesh = normalize_unit_box(&load_mesh(&a.mesh)?)?;
    let manifest = generate_fixture(&mesh, &OrthoView::ring(a.views, a.res), &a.out, a.sixteen_bit)?;
    println!("wrote {} views to {}", manifest.views.len(), a.out.display());
    Ok(())
}

fn reconstruct_cmd(a: ReconstructArgs) -> Result<()> {
    let base = a.replay.as_deref().map(RunManifest::read).transpose()?;
    let missing = |what: &str| Error::InvalidArgument(format!("--{what} is required without --replay"));
    let input = match (&a.input, &base) {
        (Some(p), _) => p.clone(),
        (None, Some(m)) => m.input.clone(),
        (None, None) => return Err(missing("input")),
    };
    let output = match (&a.out, &base) {
        (Some(p), _) => p.clone(),
        (None, Some(m)) => m.output.clone(),
        (None, None) => return Err(missing("out")),
    };
    let mut config = base.map(|m| m.config).unwrap_or_default();
    let r = &mut config.recon;
    r.coarse_iters = a.iters.unwrap_or(r.coarse_iters);
    r.learning_rate = a.lr.unwrap_or(r.learning_rate);
    r.expansion_weight = a.expansion.unwrap_or(r.expansion_weight);
    r.refine_iters = a.refine_iters.unwrap_or(r.refine_iters);
    r.seed = a.seed.unwrap_or(r.seed);
    config.init_mode = a.init.unwrap_or(config.init_mode);

    let observations = load_observations(&input)?;
    let result = reconstruct(&observations, &config)?;
    save_mesh(&result.mesh, &output)?;
    let dir = output.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    RunManifest::new(&input, &output, config, result.timings).write(&dir.join(RUN_MANIFEST_FILE))?;
    result.losses.write_csv(&dir.join("losses.csv"))?;
    let t = result.timings;
    println!(
        "init {:.2}s  coarse {:.2}s  refine {:.2}s  colorize {:.2}s  total {:.2}s",
        t.init, t.coarse, t.refine, t.colorize, t.total
    );
    println!("wrote {} ({} faces)", output.display(), result.mesh.num_faces());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let metrics = a
        .metrics
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<Metric>>>()?;
    let pred = load_mesh(&a.pred)?;
    let gt = load_mesh(&a.gt)?;
    let config = MetricsConfig {
        metrics,
        fscore_tau: a.tau,
        seed: a.seed,
        ..Default::default()
    };
    let report = evaluate(&pred, &gt, &config)?;
    print!("{report}");
    let out = a.out.unwrap_or_else(|| a.pred.with_file_name("metrics.json"));
    std::fs::write(&out, report.to_json() + "\n").map_err(|source| Error::Io { path: out.clone(), source })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Some(n) = std::env::var("ISOMER_THREADS").ok().and_then(|v| v.parse().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match cli.command {
        Command::Fixture(a) => fixture(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::Eval(a) => eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match e {
                Error::TopologyMismatch { .. } => eprintln!("error: {e}; retry with --init sphere"),
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
