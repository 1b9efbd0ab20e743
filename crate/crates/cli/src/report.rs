//! Trace and summary writers. All numbers are written with `{:e}` (or as
//! integers), so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use tltr_core::solvers::{FineSolver, RunTrace, Termination};
use tltr_core::sketch::SketchKind;

use crate::{median, ExperimentOutcome, SolverKind, SweepRow};

fn status_name(t: Termination) -> &'static str {
    match t {
        Termination::GradTol => "grad_tol",
        Termination::MaxIter => "max_iter",
    }
}

/// `trace_<solver>_<seed>.csv` with the plotted columns.
pub fn write_trace_csv(
    dir: &Path,
    solver: &str,
    seed: u64,
    trace: &RunTrace<f64>,
) -> Result<()> {
    let mut out = String::from("Iteration,GradNorm\n");
    for r in &trace.records {
        let _ = writeln!(out, "{},{:e}", r.k, r.grad_norm);
    }
    let path = dir.join(format!("trace_{solver}_{seed}.csv"));
    fs::write(&path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn opt_float(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:e}"))
}

/// `trace_full_<solver>_<seed>.csv` with the full per-iteration state.
pub fn write_full_trace_csv(
    dir: &Path,
    solver: &str,
    seed: u64,
    trace: &RunTrace<f64>,
) -> Result<()> {
    let mut out = String::from(
        "Iteration,F,GradNorm,Delta,Rho,RhoTr,Accepted,SubspaceUsed,Alpha,NValue,NGrad,NHessVec,NSketch\n",
    );
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{},{},{},{},{},{:e},{},{},{},{}",
            r.k,
            r.f,
            r.grad_norm,
            opt_float(r.delta),
            opt_float(r.rho),
            opt_float(r.rho_tr),
            u8::from(r.accepted),
            u8::from(r.subspace_used),
            r.alpha,
            r.evals.value,
            r.evals.gradient,
            r.evals.hess_vec,
            r.sketches,
        );
    }
    let path = dir.join(format!("trace_full_{solver}_{seed}.csv"));
    fs::write(&path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Key-value run summary (`summary.txt`).
pub fn write_summary(path: &Path, outcome: &ExperimentOutcome) -> Result<()> {
    let spec = &outcome.spec;
    let mut out = String::new();
    let _ = writeln!(out, "solver = {}", spec.solver.kind.name());
    let _ = writeln!(out, "loss = {}", spec.problem.loss.name());
    let _ = writeln!(out, "data = {}", spec.problem.data.display());
    let _ = writeln!(out, "lambda = {:e}", outcome.lambda);
    let _ = writeln!(out, "samples = {}", outcome.n_samples);
    let _ = writeln!(out, "features = {}", outcome.n_features);
    let _ = writeln!(out, "nnz = {}", outcome.nnz);
    let _ = writeln!(out, "grad_tol = {:e}", spec.solver.tr.grad_tol);
    let _ = writeln!(out, "max_iter = {}", spec.solver.tr.max_iter);
    if spec.solver.kind != SolverKind::Sn {
        match spec.solver.tr.fine_solver {
            FineSolver::CauchyPoint => {
                let _ = writeln!(out, "fine = cp");
            }
            FineSolver::SteihaugToint { cap } => {
                let _ = writeln!(out, "fine = stcg");
                let _ = writeln!(out, "stcg_cap = {cap}");
            }
        }
        let tr = &spec.solver.tr;
        let _ = writeln!(out, "delta0 = {:e}", tr.delta0);
        let _ = writeln!(out, "delta_max = {:e}", tr.delta_max);
        let _ = writeln!(out, "eta1 = {:e}", tr.eta1);
        let _ = writeln!(out, "eta2 = {:e}", tr.eta2);
        let _ = writeln!(out, "gamma1 = {:e}", tr.gamma1);
        let _ = writeln!(out, "gamma2 = {:e}", tr.gamma2);
        let _ = writeln!(out, "grow = {:e}", tr.grow);
    }
    if let Some(sub) = &spec.solver.sub {
        let _ = writeln!(out, "ell = {}", sub.ell);
        if sub.ell > 0 {
            let kind = match sub.kind {
                SketchKind::Gaussian => "gaussian",
                SketchKind::SHashing => "shash",
            };
            let _ = writeln!(out, "sketch = {kind}");
            if sub.kind == SketchKind::SHashing {
                let s = sub.s.unwrap_or_else(|| tltr_core::sketch::default_hash_density(sub.ell));
                let _ = writeln!(out, "s = {s}");
            }
        }
    }
    let seeds: Vec<String> = spec.seeds.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "seeds = {}", seeds.join(","));

    for s in &outcome.per_seed {
        let p = format!("seed.{}", s.seed);
        let _ = writeln!(out, "{p}.iterations = {}", s.iterations);
        let _ = writeln!(out, "{p}.status = {}", status_name(s.status));
        let _ = writeln!(out, "{p}.final_grad_norm = {:e}", s.final_grad_norm);
        let _ = writeln!(out, "{p}.final_f = {:e}", s.final_f);
        let _ = writeln!(out, "{p}.n_f = {}", s.ledger.n_f);
        let _ = writeln!(out, "{p}.n_grad = {}", s.ledger.n_grad);
        let _ = writeln!(out, "{p}.n_hessvec = {}", s.ledger.n_hessvec);
        let _ = writeln!(out, "{p}.n_sketch = {}", s.ledger.n_sketch);
    }

    let iters = outcome.iteration_counts();
    let _ = writeln!(out, "iterations.median = {}", median(&iters));
    let _ = writeln!(out, "iterations.min = {}", iters.iter().min().unwrap());
    let _ = writeln!(out, "iterations.max = {}", iters.iter().max().unwrap());
    let solved = outcome.per_seed.iter().filter(|s| s.status == Termination::GradTol).count();
    let _ = writeln!(out, "solved = {solved}/{}", outcome.per_seed.len());

    fs::write(path, out).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Fixed-width comparison table; returned as a string so callers can both
/// print it and write it to a file.
pub fn comparison_table(outcomes: &[ExperimentOutcome]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:<6} {:>5} {:>9} {:>9} {:>9} {:>7} {:>10} {:>10} {:>10} {:>9}",
        "solver", "fine", "ell", "it.med", "it.min", "it.max", "solved", "n_f.med", "n_grad.med", "n_hv.med", "n_sk.med"
    );
    for o in outcomes {
        let fine = match (o.spec.solver.kind, o.spec.solver.tr.fine_solver) {
            (SolverKind::Sn, _) => "-".to_string(),
            (_, FineSolver::CauchyPoint) => "cp".to_string(),
            (_, FineSolver::SteihaugToint { cap }) => format!("stcg{cap}"),
        };
        let ell = o.spec.solver.sub.as_ref().map_or("-".into(), |s| s.ell.to_string());
        let iters = o.iteration_counts();
        let med = |f: fn(&crate::SeedOutcome) -> u64| {
            let v: Vec<usize> = o.per_seed.iter().map(|s| f(s) as usize).collect();
            median(&v)
        };
        let solved = o.per_seed.iter().filter(|s| s.status == Termination::GradTol).count();
        let _ = writeln!(
            out,
            "{:<8} {:<6} {:>5} {:>9} {:>9} {:>9} {:>7} {:>10} {:>10} {:>10} {:>9}",
            o.spec.solver.kind.name(),
            fine,
            ell,
            median(&iters),
            iters.iter().min().unwrap(),
            iters.iter().max().unwrap(),
            format!("{solved}/{}", o.per_seed.len()),
            med(|s| s.ledger.n_f),
            med(|s| s.ledger.n_grad),
            med(|s| s.ledger.n_hessvec),
            med(|s| s.ledger.n_sketch),
        );
    }
    out
}

/// One line per sweep value.
pub fn sweep_table(param: &str, rows: &[SweepRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>7} {:>9} {:>9} {:>9} {:>7}  {}",
        "param", "value", "it.med", "it.min", "it.max", "solved", "note"
    );
    for row in rows {
        match row {
            SweepRow::Done { value, outcome } => {
                let iters = outcome.iteration_counts();
                let solved =
                    outcome.per_seed.iter().filter(|s| s.status == Termination::GradTol).count();
                let _ = writeln!(
                    out,
                    "{:<10} {:>7} {:>9} {:>9} {:>9} {:>7}  ",
                    param,
                    value,
                    median(&iters),
                    iters.iter().min().unwrap(),
                    iters.iter().max().unwrap(),
                    format!("{solved}/{}", outcome.per_seed.len()),
                );
            }
            SweepRow::Failed { value, error } => {
                let _ = writeln!(
                    out,
                    "{:<10} {:>7} {:>9} {:>9} {:>9} {:>7}  error: {error}",
                    param, value, "-", "-", "-", "-"
                );
            }
        }
    }
    out
}
