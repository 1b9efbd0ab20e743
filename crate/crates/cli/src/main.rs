//! `tltr` — benchmark CLI for trust-region solvers with sketched subspaces.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tltr_cli::config::{self, RawSpec};
use tltr_cli::{report, SweepParam};

#[derive(Parser)]
#[command(
    name = "tltr",
    about = "Run and compare trust-region solvers (TR, TLTR, SN) on classification losses",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver spec over its seeds and write traces + summary.
    Run(SpecArgs),
    /// Run several spec files over the same problem and tabulate them.
    Compare(CompareArgs),
    /// Re-run a base spec while sweeping one parameter.
    Sweep(SweepArgs),
    /// Generate a synthetic LIBSVM classification dataset.
    GenSynthetic(GenArgs),
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// Flat key-value spec file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Objective: logistic | ls
    #[arg(long)]
    loss: Option<String>,
    /// LIBSVM dataset path.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Regularization weight (default 1/N).
    #[arg(long)]
    lambda: Option<f64>,
    /// Feature-count override for files with omitted trailing features.
    #[arg(long)]
    features: Option<usize>,
    /// Solver: tr | tltr | sn
    #[arg(long)]
    solver: Option<String>,
    /// Full-space QP solver: cp | stcg
    #[arg(long)]
    fine: Option<String>,
    /// Iteration cap for the fine-level truncated CG.
    #[arg(long)]
    stcg_cap: Option<usize>,
    /// Subspace size.
    #[arg(long)]
    ell: Option<usize>,
    /// Subspace size as a fraction of the dimension (ceil).
    #[arg(long)]
    ell_frac: Option<f64>,
    /// Sketch distribution: gaussian | shash
    #[arg(long)]
    sketch: Option<String>,
    /// Nonzeros per column for s-hashing (default ~10% of ell).
    #[arg(long)]
    s: Option<usize>,
    /// Hashing density as a fraction of ell (ceil).
    #[arg(long)]
    s_frac: Option<f64>,
    /// Comma-separated seed list (default "0").
    #[arg(long)]
    seeds: Option<String>,
    /// Gradient-norm termination tolerance (default 1e-7).
    #[arg(long)]
    grad_tol: Option<f64>,
    /// Iteration budget (default 1000).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Initial trust radius (default 1).
    #[arg(long)]
    delta0: Option<f64>,
    /// Trust radius cap (default 1e6).
    #[arg(long)]
    delta_max: Option<f64>,
    /// Acceptance threshold (default 0.1).
    #[arg(long)]
    eta1: Option<f64>,
    /// Expansion threshold (default 0.75).
    #[arg(long)]
    eta2: Option<f64>,
    /// Rejection shrink factor (default 0.25).
    #[arg(long)]
    gamma1: Option<f64>,
    /// Weak-acceptance shrink factor (default 0.5).
    #[arg(long)]
    gamma2: Option<f64>,
    /// Radius growth factor (default 2).
    #[arg(long)]
    grow: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SpecArgs {
    fn to_raw(&self) -> RawSpec {
        RawSpec {
            loss: self.loss.clone(),
            data: self.data.as_ref().map(|p| p.display().to_string()),
            lambda: self.lambda,
            features: self.features,
            solver: self.solver.clone(),
            fine: self.fine.clone(),
            stcg_cap: self.stcg_cap,
            ell: self.ell,
            ell_frac: self.ell_frac,
            sketch: self.sketch.clone(),
            s: self.s,
            s_frac: self.s_frac,
            seeds: self.seeds.clone(),
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
            delta0: self.delta0,
            delta_max: self.delta_max,
            eta1: self.eta1,
            eta2: self.eta2,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            grow: self.grow,
            out: self.out.as_ref().map(|p| p.display().to_string()),
        }
    }

    fn resolve(&self) -> Result<tltr_cli::ExperimentSpec> {
        let mut raw = self.to_raw();
        if let Some(cfg_path) = &self.config {
            raw = config::merge(raw, config::from_file(cfg_path)?);
        }
        config::resolve(&raw, None)
    }
}

#[derive(Args)]
struct CompareArgs {
    /// Spec files to compare (two or more, same problem).
    #[arg(long = "spec", required = true)]
    specs: Vec<PathBuf>,
    /// Output directory; each spec writes into a numbered subdirectory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    base: SpecArgs,
    /// Swept parameter: ell | s | stcg-cap
    #[arg(long)]
    param: String,
    /// Comma-separated integer values.
    #[arg(long)]
    values: Option<String>,
    /// Comma-separated fractional values (of n for ell, of ell for s).
    #[arg(long)]
    frac_values: Option<String>,
}

#[derive(Args)]
struct GenArgs {
    /// Number of samples.
    #[arg(long)]
    samples: usize,
    /// Number of features.
    #[arg(long)]
    features: usize,
    /// Label flip probability in [0, 0.5].
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Geometric per-feature scale decay in (0, 1]; 1 = isotropic.
    #[arg(long, default_value_t = 1.0)]
    decay: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output LIBSVM file.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_run(args: &SpecArgs) -> Result<()> {
    let spec = args.resolve()?;
    let outcome = tltr_cli::run(&spec)?;
    for s in &outcome.per_seed {
        println!(
            "seed {:>3}: {:>6} iterations, {}, final ||grad f|| = {:e}",
            s.seed,
            s.iterations,
            match s.status {
                tltr_core::solvers::Termination::GradTol => "grad_tol",
                tltr_core::solvers::Termination::MaxIter => "max_iter",
            },
            s.final_grad_norm
        );
    }
    println!("wrote traces and summary.txt to {}", spec.out.display());
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let mut specs = Vec::new();
    for (i, path) in args.specs.iter().enumerate() {
        let raw = config::from_file(path)?;
        let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or("spec");
        let out = args.out.join(format!("{i}_{label}"));
        specs.push(config::resolve(&raw, Some(out))?);
    }
    let outcomes = tltr_cli::compare(&specs)?;
    let table = report::comparison_table(&outcomes);
    print!("{table}");
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("comparison.txt"), &table)
        .with_context(|| format!("cannot write comparison table to {}", args.out.display()))?;
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let spec = args.base.resolve()?;
    let param = match args.param.as_str() {
        "ell" => SweepParam::Ell,
        "s" => SweepParam::S,
        "stcg-cap" | "stcg_cap" => SweepParam::StcgCap,
        other => bail!("unknown sweep parameter `{other}` (expected ell|s|stcg-cap)"),
    };
    let values: Vec<usize> = match (&args.values, &args.frac_values) {
        (Some(_), Some(_)) => bail!("give either --values or --frac-values, not both"),
        (Some(list), None) => list
            .split(',')
            .map(|t| t.trim().parse::<usize>().context("bad sweep value"))
            .collect::<Result<_>>()?,
        (None, Some(list)) => {
            let fracs: Vec<f64> = list
                .split(',')
                .map(|t| t.trim().parse::<f64>().context("bad sweep fraction"))
                .collect::<Result<_>>()?;
            let reference = match param {
                SweepParam::Ell => tltr_cli::load_problem(&spec.problem)?.n_features(),
                SweepParam::S => {
                    spec.solver.sub.as_ref().map(|s| s.ell).context("--param s needs --ell")?
                }
                SweepParam::StcgCap => bail!("--frac-values does not apply to stcg-cap"),
            };
            fracs.iter().map(|f| ((f * reference as f64).ceil() as usize).max(1)).collect()
        }
        (None, None) => bail!("missing --values (or --frac-values)"),
    };
    let rows = tltr_cli::sweep(&spec, param, &values)?;
    let table = report::sweep_table(param.name(), &rows);
    print!("{table}");
    std::fs::create_dir_all(&spec.out)?;
    std::fs::write(spec.out.join("sweep.txt"), &table)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::GenSynthetic(args) => tltr_cli::gen_synthetic(
            args.samples,
            args.features,
            args.noise,
            args.decay,
            args.seed,
            &args.out,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
