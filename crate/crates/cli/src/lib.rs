//! Experiment harness behind the `tltr` binary: resolve a spec, run one
//! solver per seed in parallel, and write per-iteration CSV traces plus a
//! machine-readable summary.

pub mod config;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use tltr_core::data::{parse_libsvm, Dataset, LabelConvention};
use tltr_core::losses::{EvalCounts, LeastSquaresLoss, LogisticLoss, Objective};
use tltr_core::solvers::{
    sn_solve, tltr_solve, tr_solve, RunTrace, SnConfig, SubspaceConfig, Termination, TrConfig,
};
use tltr_core::synth::random_x0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Logistic,
    LeastSquares,
}

impl LossKind {
    pub fn convention(self) -> LabelConvention {
        match self {
            LossKind::Logistic => LabelConvention::PlusMinusOne,
            LossKind::LeastSquares => LabelConvention::ZeroOne,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Logistic => "logistic",
            LossKind::LeastSquares => "ls",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Tr,
    Tltr,
    Sn,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Tr => "tr",
            SolverKind::Tltr => "tltr",
            SolverKind::Sn => "sn",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub loss: LossKind,
    pub data: PathBuf,
    /// Regularization weight; `None` means the default `1/N`.
    pub lambda: Option<f64>,
    /// Feature-count override for files that omit trailing zero features.
    pub features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub kind: SolverKind,
    /// Trust-region constants, fine solver, tolerance, and budget. The
    /// tolerance and budget also drive the sketched Newton baseline.
    pub tr: TrConfig<f64>,
    /// Subspace configuration; required for `tltr` and `sn`.
    pub sub: Option<SubspaceConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub solver: SolverSpec,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

/// Evaluation-cost counters accumulated over a run, with per-iteration
/// snapshots for cost-versus-progress analysis.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CostLedger {
    pub n_f: u64,
    pub n_grad: u64,
    pub n_hessvec: u64,
    pub n_sketch: u64,
    /// Cumulative (n_f, n_grad, n_hessvec, n_sketch) after each iteration.
    pub per_iteration: Vec<(u64, u64, u64, u64)>,
}

impl CostLedger {
    pub fn from_trace(trace: &RunTrace<f64>, final_counts: EvalCounts) -> Self {
        let per_iteration = trace
            .records
            .iter()
            .map(|r| (r.evals.value, r.evals.gradient, r.evals.hess_vec, r.sketches))
            .collect();
        Self {
            n_f: final_counts.value,
            n_grad: final_counts.gradient,
            n_hessvec: final_counts.hess_vec,
            n_sketch: trace.records.last().map_or(0, |r| r.sketches),
            per_iteration,
        }
    }
}

/// Outcome of one seeded solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub iterations: usize,
    pub status: Termination,
    pub final_grad_norm: f64,
    pub final_f: f64,
    pub ledger: CostLedger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    pub n_samples: usize,
    pub n_features: usize,
    pub nnz: usize,
    pub lambda: f64,
    pub per_seed: Vec<SeedOutcome>,
}

impl ExperimentOutcome {
    pub fn iteration_counts(&self) -> Vec<usize> {
        self.per_seed.iter().map(|s| s.iterations).collect()
    }
}

pub fn median(values: &[usize]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 { v[n / 2] as f64 } else { (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0 }
}

/// Load, label-map, and validate the dataset named by a problem spec.
pub fn load_problem(problem: &ProblemSpec) -> Result<Dataset<f64>> {
    let text = fs::read_to_string(&problem.data)
        .with_context(|| format!("cannot read dataset {}", problem.data.display()))?;
    let raw = parse_libsvm::<f64>(&text, problem.features)
        .with_context(|| format!("cannot parse dataset {}", problem.data.display()))?;
    let mapped = raw
        .map_labels(problem.loss.convention())
        .context("cannot map labels for the requested loss")?;
    Ok(mapped)
}

fn build_objective(
    problem: &ProblemSpec,
    data: Dataset<f64>,
) -> Result<(Box<dyn Objective<f64>>, f64)> {
    Ok(match (problem.loss, problem.lambda) {
        (LossKind::Logistic, Some(l)) => (Box::new(LogisticLoss::new(data, l)?), l),
        (LossKind::Logistic, None) => {
            let loss = LogisticLoss::with_default_lambda(data)?;
            let l = loss.lambda();
            (Box::new(loss), l)
        }
        (LossKind::LeastSquares, Some(l)) => (Box::new(LeastSquaresLoss::new(data, l)?), l),
        (LossKind::LeastSquares, None) => {
            let loss = LeastSquaresLoss::with_default_lambda(data)?;
            let l = loss.lambda();
            (Box::new(loss), l)
        }
    })
}

/// Solve one seed of an experiment; the objective is rebuilt per seed so
/// evaluation counters start from zero.
pub fn solve_seed(
    spec: &ExperimentSpec,
    data: &Dataset<f64>,
    seed: u64,
) -> Result<(RunTrace<f64>, SeedOutcome)> {
    let (obj, _) = build_objective(&spec.problem, data.clone())?;
    let x0 = random_x0::<f64>(data.n_features(), seed);
    let trace = match spec.solver.kind {
        SolverKind::Tr => tr_solve(obj.as_ref(), &x0, &spec.solver.tr)?,
        SolverKind::Tltr => {
            let sub = spec.solver.sub.as_ref().expect("validated: tltr has a subspace config");
            tltr_solve(obj.as_ref(), &x0, &spec.solver.tr, sub, seed)?
        }
        SolverKind::Sn => {
            let sub = spec.solver.sub.as_ref().expect("validated: sn has a subspace config");
            let cfg = SnConfig {
                grad_tol: spec.solver.tr.grad_tol,
                max_iter: spec.solver.tr.max_iter,
                ..SnConfig::default()
            };
            sn_solve(obj.as_ref(), &x0, sub, &cfg, seed)?
        }
    };
    let ledger = CostLedger::from_trace(&trace, obj.eval_counts());
    let outcome = SeedOutcome {
        seed,
        iterations: trace.records.len(),
        status: trace.terminated_by,
        final_grad_norm: trace.final_grad_norm,
        final_f: obj.value(&trace.final_x),
        ledger,
    };
    Ok((trace, outcome))
}

fn validate(spec: &ExperimentSpec) -> Result<()> {
    if spec.seeds.is_empty() {
        bail!("at least one seed is required");
    }
    match spec.solver.kind {
        SolverKind::Tr => {}
        SolverKind::Tltr | SolverKind::Sn => {
            if spec.solver.sub.is_none() {
                bail!(
                    "solver `{}` needs a subspace size (--ell or --ell-frac)",
                    spec.solver.kind.name()
                );
            }
        }
    }
    Ok(())
}

/// Run every seed of a spec (in parallel), writing trace CSVs and a summary
/// into the output directory.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    validate(spec)?;
    let data = Arc::new(load_problem(&spec.problem)?);
    // Resolve lambda once so an invalid problem or config fails before any
    // worker starts or the output directory is touched.
    let (_, lambda) = build_objective(&spec.problem, data.as_ref().clone())?;
    if let Some(sub) = &spec.solver.sub {
        if sub.ell > data.n_features() {
            bail!(
                "subspace size ell={} exceeds problem dimension n={}",
                sub.ell,
                data.n_features()
            );
        }
    }

    fs::create_dir_all(&spec.out)
        .with_context(|| format!("cannot create output directory {}", spec.out.display()))?;

    let results: Vec<Result<(RunTrace<f64>, SeedOutcome)>> = spec
        .seeds
        .par_iter()
        .map(|&seed| solve_seed(spec, &data, seed))
        .collect();

    let mut per_seed = Vec::with_capacity(results.len());
    for result in results {
        let (trace, outcome) = result?;
        report::write_trace_csv(&spec.out, spec.solver.kind.name(), outcome.seed, &trace)?;
        report::write_full_trace_csv(&spec.out, spec.solver.kind.name(), outcome.seed, &trace)?;
        per_seed.push(outcome);
    }
    per_seed.sort_by_key(|s| s.seed);

    let outcome = ExperimentOutcome {
        spec: spec.clone(),
        n_samples: data.n_samples(),
        n_features: data.n_features(),
        nnz: data.nnz(),
        lambda,
        per_seed,
    };
    report::write_summary(&spec.out.join("summary.txt"), &outcome)?;
    Ok(outcome)
}

/// Compare several specs over the same problem: one row of iteration and
/// evaluation statistics per solver.
pub fn compare(specs: &[ExperimentSpec]) -> Result<Vec<ExperimentOutcome>> {
    if specs.len() < 2 {
        bail!("compare needs at least two specs, got {}", specs.len());
    }
    let base = &specs[0].problem;
    for s in &specs[1..] {
        if s.problem != *base {
            bail!(
                "compare requires a common problem: `{}` differs from `{}`",
                s.problem.data.display(),
                base.data.display()
            );
        }
    }
    specs.iter().map(run).collect()
}

/// Parameter swept by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Ell,
    S,
    StcgCap,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Ell => "ell",
            SweepParam::S => "s",
            SweepParam::StcgCap => "stcg-cap",
        }
    }
}

#[derive(Debug)]
pub enum SweepRow {
    Done { value: usize, outcome: ExperimentOutcome },
    Failed { value: usize, error: String },
}

/// Re-run the base spec for each parameter value; invalid values produce an
/// error row and the sweep continues.
pub fn sweep(base: &ExperimentSpec, param: SweepParam, values: &[usize]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        bail!("sweep needs a non-empty list of values");
    }
    match param {
        SweepParam::Ell | SweepParam::S => {
            if base.solver.sub.is_none() {
                bail!("parameter `{}` is not valid for solver `{}`", param.name(), base.solver.kind.name());
            }
        }
        SweepParam::StcgCap => {
            if !matches!(base.solver.tr.fine_solver, tltr_core::solvers::FineSolver::SteihaugToint { .. }) {
                bail!("parameter `stcg-cap` requires the stcg fine solver");
            }
        }
    }

    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut spec = base.clone();
        spec.out = base.out.join(format!("{}_{}", param.name(), value));
        match param {
            SweepParam::Ell => spec.solver.sub.as_mut().unwrap().ell = value,
            SweepParam::S => spec.solver.sub.as_mut().unwrap().s = Some(value),
            SweepParam::StcgCap => {
                spec.solver.tr.fine_solver =
                    tltr_core::solvers::FineSolver::SteihaugToint { cap: value }
            }
        }
        match run(&spec) {
            Ok(outcome) => rows.push(SweepRow::Done { value, outcome }),
            Err(err) => rows.push(SweepRow::Failed { value, error: format!("{err:#}") }),
        }
    }
    Ok(rows)
}

/// Generate a synthetic LIBSVM file with a planted separator.
pub fn gen_synthetic(
    samples: usize,
    features: usize,
    noise: f64,
    decay: f64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let data = tltr_core::synth::synthetic_classification::<f64>(samples, features, noise, decay, seed);
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(out, data.to_libsvm())
        .with_context(|| format!("cannot write {}", out.display()))?;
    Ok(())
}
