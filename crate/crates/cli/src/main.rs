//! `jumpid`: runs the identification pipeline stage by stage.
//!
//! Every stage reads the experiment config and works inside one output
//! directory, so stages can be rerun independently:
//!
//! ```text
//! jumpid generate --config case.toml --out runs/a
//! jumpid train    --config case.toml --out runs/a
//! jumpid estimate --config case.toml --out runs/a
//! ...
//! ```

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use jumpid_core::cases::{builtin, ExperimentConfig, BUILTIN_CASES};
use jumpid_core::criteria::{birth_death_cost_univariate, search_cost_univariate};
use jumpid_core::error::Error;
use jumpid_core::field::SolutionField;
use jumpid_core::io::{self, EstimateDoc, ReconstructionDoc, SelectionDoc};
use jumpid_core::pinn::{self, DualCheckpoint, DualNetwork};
use jumpid_core::pipeline;

#[derive(Parser)]
#[command(name = "jumpid", version, about = "Identify piecewise-constant PDE coefficients from data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem and draw noisy observations.
    Generate(StageArgs),
    /// Fit the solution and coefficient networks to the observations.
    Train(StageArgs),
    /// Fit a mixture to each coefficient's samples and pick the number of states.
    Estimate(StageArgs),
    /// Mark nodes near a jump.
    Identify(StageArgs),
    /// Evaluate the trained solution on a refined grid and score it.
    Reconstruct(StageArgs),
    /// Relative-error table and parameter counts, for one run or several.
    Report(ReportArgs),
    /// All stages in order.
    Run(StageArgs),
    /// Print the full config of a built-in case.
    Config {
        /// Case id, one of the built-in cases.
        #[arg(long)]
        case: String,
    },
}

#[derive(Args, Clone)]
struct StageArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Offset added to every stage seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output`, then `runs/<case>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ReportArgs {
    /// Experiment config; used when no run directories are listed.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for the table files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Finished run directories to tabulate together.
    #[arg(long, num_args = 0..)]
    runs: Option<Vec<PathBuf>>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Stage {
    Generate,
    Train,
    Estimate,
    Identify,
    Reconstruct,
    Report,
}

/// Process exit code for an error raised in `stage`.
fn exit_code(stage: Stage, err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Io { .. } | Error::Format { .. } => 5,
        Error::TrainingDiverged { .. } => 3,
        Error::DegenerateData(_) | Error::CeilingReached { .. } => 4,
        _ => match stage {
            Stage::Generate => 2,
            Stage::Train | Stage::Reconstruct => 3,
            Stage::Estimate | Stage::Identify | Stage::Report => 4,
        },
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
}

impl Ctx {
    fn load(args: &StageArgs) -> Result<Ctx, Error> {
        let mut cfg = ExperimentConfig::load(&args.config)?;
        if let Some(s) = args.seed {
            cfg.seeds = cfg.seeds.shifted(s);
        }
        let out = args.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| Path::new("runs").join(&cfg.case));
        Ok(Ctx { cfg, out })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn names(&self) -> Vec<&'static str> {
        self.cfg.equation.coefficient_names().to_vec()
    }

    fn network(&self) -> Result<DualNetwork, Error> {
        let c: DualCheckpoint = io::read_json(&self.path("checkpoint.json"))?;
        DualNetwork::from_checkpoint(&c)
    }

    fn estimates(&self) -> Result<Vec<EstimateDoc>, Error> {
        self.names().iter().map(|n| io::read_json(&self.path(&format!("estimate_{n}.json")))).collect()
    }
}

/// `rows x cols` layout of a field for images: the last two storage axes,
/// taking the final slice of any leading ones.
fn image_of(field: &SolutionField, channel: usize) -> (Vec<f64>, usize, usize) {
    let shape: Vec<usize> = field.grid.storage_axes().iter().map(|a| a.nodes).collect();
    let (rows, cols) = (shape[shape.len().saturating_sub(2)], shape[shape.len() - 1]);
    let (rows, cols) = if shape.len() == 1 { (1, cols) } else { (rows, cols) };
    let offset = field.grid.len() - rows * cols;
    let values = (0..rows * cols).map(|k| field.get(offset + k, channel)).collect();
    (values, rows, cols)
}

fn generate(ctx: &Ctx) -> Result<(), Error> {
    let data = pipeline::generate(&ctx.cfg)?;
    io::write_text(&ctx.path("config.toml"), &ctx.cfg.to_toml()?)?;
    io::write_text(&ctx.path("reference.csv"), &io::field_csv(&data.reference))?;
    io::write_text(&ctx.path("observations.csv"), &io::observations_csv(&data.observations, &data.reference.grid.coord_names()))?;
    let (img, rows, cols) = image_of(&data.reference, 0);
    io::write_bytes(&ctx.path("reference.ppm"), &io::heatmap_ppm(&img, rows, cols))?;
    info!("reference on {} nodes, {} observations", data.reference.grid.len(), data.observations.len());
    Ok(())
}

fn train(ctx: &Ctx) -> Result<(), Error> {
    let obs = io::parse_observations(&io::read_text(&ctx.path("observations.csv"))?, ctx.cfg.equation.dim())?;
    let (net, report) = pipeline::train(&ctx.cfg, &obs, &mut |r| info!("iteration {} loss {:.4e}", r.iteration, r.loss.total))?;
    io::write_json(&ctx.path("checkpoint.json"), &net.to_checkpoint())?;
    io::write_text(&ctx.path("loss.csv"), &io::loss_csv(&report.history))?;
    let iters: Vec<f64> = report.history.iter().map(|r| r.iteration as f64).collect();
    let res: Vec<f64> = report.history.iter().map(|r| r.loss.residual).collect();
    let obs_l: Vec<f64> = report.history.iter().map(|r| r.loss.observation).collect();
    io::write_text(&ctx.path("loss.svg"), &io::line_plot_svg("training loss", &iters, &[("residual", &res), ("observation", &obs_l)], true))?;
    let samples = pipeline::sample(&ctx.cfg, &net)?;
    io::write_text(&ctx.path("samples.csv"), &io::samples_csv(&samples))?;
    if samples.shape.len() == 1 {
        let x: Vec<f64> = samples.coords.clone();
        let series: Vec<(&str, &[f64])> = samples.names.iter().zip(&samples.values).map(|(n, v)| (n.as_str(), v.as_slice())).collect();
        io::write_text(&ctx.path("samples.svg"), &io::line_plot_svg("coefficient samples", &x, &series, false))?;
    }
    info!("final loss {:.4e}", report.final_loss.total);
    Ok(())
}

fn estimate(ctx: &Ctx) -> Result<(), Error> {
    let samples = pipeline::sample(&ctx.cfg, &ctx.network()?)?;
    let estimates = pipeline::estimate(&ctx.cfg, &samples)?;
    for (name, est) in ctx.names().iter().zip(&estimates) {
        io::write_json(&ctx.path(&format!("estimate_{name}.json")), &EstimateDoc::new(name, est))?;
        io::write_json(&ctx.path(&format!("selection_{name}.json")), &SelectionDoc::new(name, est))?;
        io::write_text(&ctx.path(&format!("trace_{name}.csv")), &io::trace_csv(&est.trace))?;
        if let Some(run) = &est.bdmc {
            io::write_text(&ctx.path(&format!("bdmc_{name}.csv")), &io::events_csv(&run.events))?;
            io::write_json(&ctx.path(&format!("visits_{name}.json")), &io::visits_json(&run.visits))?;
        }
        let mus: Vec<String> = est.estimate.components.iter().map(|c| format!("{:.4}", c.mu)).collect();
        info!("{name}: K = {} (means {})", est.estimate.k, mus.join(", "));
    }
    Ok(())
}

fn identify(ctx: &Ctx) -> Result<(), Error> {
    let samples = pipeline::sample(&ctx.cfg, &ctx.network()?)?;
    for ((name, doc), y) in ctx.names().iter().zip(ctx.estimates()?).zip(&samples.values) {
        let est = doc.mixture_estimate();
        let probs = pipeline::memberships(&est, y);
        let (f, mask) = pipeline::identify_probabilities(&samples, &probs, est.k, &ctx.cfg.region)?;
        let header = vec!["index".to_string(), "f".to_string()];
        io::write_text(&ctx.path(&format!("f_{name}.csv")), &io::csv_table(&header, f.iter().enumerate().map(|(i, &v)| vec![i as f64, v])))?;
        io::write_text(&ctx.path(&format!("mask_{name}.csv")), &io::mask_index_csv(&mask))?;
        if samples.shape.len() == 2 {
            let (rows, cols) = (samples.shape[0], samples.shape[1]);
            io::write_bytes(&ctx.path(&format!("mask_{name}.pgm")), &io::mask_pgm(&mask, rows, cols))?;
            io::write_bytes(&ctx.path(&format!("f_{name}.pgm")), &io::heatmap_pgm(&f, rows, cols))?;
            io::write_bytes(&ctx.path(&format!("{name}.ppm")), &io::heatmap_ppm(y, rows, cols))?;
        }
        info!("{name}: {} of {} nodes flagged", mask.iter().filter(|&&m| m).count(), mask.len());
    }
    Ok(())
}

fn reconstruct(ctx: &Ctx) -> Result<(), Error> {
    let net = ctx.network()?;
    let grid = ctx.cfg.grid()?;
    let mut reference = SolutionField::zeros(grid.clone(), ctx.cfg.equation.outputs());
    io::parse_field_values(&io::read_text(&ctx.path("reference.csv"))?, &mut reference)?;
    let mse = pinn::mse(&pinn::reconstruct(&net, &grid)?, &reference)?;
    let refine = ctx.cfg.reconstruct.refine;
    let fine = pinn::reconstruct(&net, &pipeline::refined_grid(&grid, refine)?)?;
    io::write_text(&ctx.path("reconstruction.csv"), &io::field_csv(&fine))?;
    let (img, rows, cols) = image_of(&fine, 0);
    io::write_bytes(&ctx.path("reconstruction.ppm"), &io::heatmap_ppm(&img, rows, cols))?;
    io::write_json(&ctx.path("reconstruction.json"), &ReconstructionDoc { mse, refine, nodes: fine.grid.len() })?;
    info!("MSE {mse:.4e}");
    Ok(())
}

/// Files the report needs from a run directory.
fn report_inputs(ctx: &Ctx) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = ctx.names().iter().map(|n| ctx.path(&format!("estimate_{n}.json"))).collect();
    files.push(ctx.path("reconstruction.json"));
    files
}

fn report_rows(ctx: &Ctx) -> Result<(Vec<pipeline::ReportRow>, Vec<EstimateDoc>), Error> {
    let docs = ctx.estimates()?;
    let recon: ReconstructionDoc = io::read_json(&ctx.path("reconstruction.json"))?;
    let estimates: Vec<_> = docs.iter().map(EstimateDoc::mixture_estimate).collect();
    Ok((pipeline::report_rows(&ctx.cfg, recon.mse, &estimates.iter().collect::<Vec<_>>()), docs))
}

/// Writes `report.csv` and `report.txt` into `out` and prints the text table.
fn write_report(out: &Path, rows: &[pipeline::ReportRow], docs: &[EstimateDoc]) -> Result<(), Error> {
    io::write_text(&out.join("report.csv"), &io::report_csv(rows))?;
    let mut counts = vec![["Parameter", "K", "K_max", "Search params", "Birth-death params"].map(String::from).to_vec()];
    for d in docs {
        let k_max = d.k + 2;
        counts.push(vec![
            d.parameter.clone(),
            d.k.to_string(),
            k_max.to_string(),
            search_cost_univariate(k_max).to_string(),
            birth_death_cost_univariate(k_max).to_string(),
        ]);
    }
    let text = format!("{}\n{}", io::report_text(rows), io::align(&counts));
    io::write_text(&out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn report(ctx: &Ctx) -> Result<(), Error> {
    let (rows, docs) = report_rows(ctx)?;
    write_report(&ctx.out, &rows, &docs)
}

/// Report over several run directories, each holding the `config.toml`
/// written by `generate`.
fn report_runs(runs: &[PathBuf], out: &Path) -> Result<(), Error> {
    let mut ctxs = Vec::new();
    let mut missing = Vec::new();
    for dir in runs {
        let config = dir.join("config.toml");
        if !config.exists() {
            missing.push(config);
            continue;
        }
        let ctx = Ctx { cfg: ExperimentConfig::load(&config)?, out: dir.clone() };
        missing.extend(report_inputs(&ctx).into_iter().filter(|p| !p.exists()));
        ctxs.push(ctx);
    }
    if !missing.is_empty() {
        for m in &missing {
            eprintln!("missing: {}", m.display());
        }
        return Err(Error::Format { what: "run directories".into(), detail: format!("{} artifacts missing", missing.len()) });
    }
    let (mut rows, mut docs) = (Vec::new(), Vec::new());
    for ctx in &ctxs {
        let (r, d) = report_rows(ctx)?;
        rows.extend(r);
        docs.extend(d);
    }
    write_report(out, &rows, &docs)
}

fn stage(ctx: &Ctx, s: Stage) -> Result<(), (Stage, Error)> {
    let r = match s {
        Stage::Generate => generate(ctx),
        Stage::Train => train(ctx),
        Stage::Estimate => estimate(ctx),
        Stage::Identify => identify(ctx),
        Stage::Reconstruct => reconstruct(ctx),
        Stage::Report => report(ctx),
    };
    r.map_err(|e| (s, e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (args, stages) = match cli.command {
        Command::Config { case } => {
            return match builtin(&case).map(|c| c.to_toml()) {
                Some(Ok(text)) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Some(Err(e)) => {
                    eprintln!("error: {e}");
                    ExitCode::from(5)
                }
                None => {
                    eprintln!("error: unknown case {case:?}; built-in cases: {}", BUILTIN_CASES.join(", "));
                    ExitCode::from(2)
                }
            };
        }
        Command::Generate(a) => (a, vec![Stage::Generate]),
        Command::Train(a) => (a, vec![Stage::Train]),
        Command::Estimate(a) => (a, vec![Stage::Estimate]),
        Command::Identify(a) => (a, vec![Stage::Identify]),
        Command::Reconstruct(a) => (a, vec![Stage::Reconstruct]),
        Command::Report(a) => {
            if let Some(runs) = &a.runs {
                let out = a.out.clone().unwrap_or_else(|| PathBuf::from("."));
                return match report_runs(runs, &out) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(e) => {
                        eprintln!("error: {e}");
                        ExitCode::from(exit_code(Stage::Report, &e))
                    }
                };
            }
            let Some(config) = a.config else {
                eprintln!("error: report needs --config or --runs");
                return ExitCode::from(2);
            };
            (StageArgs { config, seed: a.seed, out: a.out }, vec![Stage::Report])
        }
        Command::Run(a) => (a, vec![Stage::Generate, Stage::Train, Stage::Estimate, Stage::Identify, Stage::Reconstruct, Stage::Report]),
    };
    let ctx = match Ctx::load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(Stage::Generate, &e));
        }
    };
    for s in stages {
        if let Err((s, e)) = stage(&ctx, s) {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(s, &e));
        }
    }
    ExitCode::SUCCESS
}
