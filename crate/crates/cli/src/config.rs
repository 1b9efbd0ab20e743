//! Flat key-value spec files and their resolution into experiment specs.
//!
//! A spec file holds one `key = value` pair per line (`#` comments allowed);
//! keys match the long CLI flags (`ell-frac` or `ell_frac` both work).
//! Command-line flags override file values.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use tltr_core::sketch::SketchKind;
use tltr_core::solvers::{FineSolver, SubspaceConfig, TrConfig};

use crate::{ExperimentSpec, LossKind, ProblemSpec, SolverKind, SolverSpec};

/// Unresolved spec: every knob optional, strings still raw.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawSpec {
    pub loss: Option<String>,
    pub data: Option<String>,
    pub lambda: Option<f64>,
    pub features: Option<usize>,
    pub solver: Option<String>,
    pub fine: Option<String>,
    pub stcg_cap: Option<usize>,
    pub ell: Option<usize>,
    pub ell_frac: Option<f64>,
    pub sketch: Option<String>,
    pub s: Option<usize>,
    pub s_frac: Option<f64>,
    pub seeds: Option<String>,
    pub grad_tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub delta0: Option<f64>,
    pub delta_max: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub grow: Option<f64>,
    pub out: Option<String>,
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| anyhow::anyhow!("key `{key}`: cannot parse `{value}`"))
}

/// Parse a flat key-value file.
pub fn from_file(path: &Path) -> Result<RawSpec> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read spec file {}", path.display()))?;
    let mut raw = RawSpec::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected `key = value`", path.display(), lineno + 1);
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "loss" => raw.loss = Some(value.into()),
            "data" => raw.data = Some(value.into()),
            "lambda" => raw.lambda = Some(parse_num(&key, value)?),
            "features" => raw.features = Some(parse_num(&key, value)?),
            "solver" => raw.solver = Some(value.into()),
            "fine" => raw.fine = Some(value.into()),
            "stcg_cap" => raw.stcg_cap = Some(parse_num(&key, value)?),
            "ell" => raw.ell = Some(parse_num(&key, value)?),
            "ell_frac" => raw.ell_frac = Some(parse_num(&key, value)?),
            "sketch" => raw.sketch = Some(value.into()),
            "s" => raw.s = Some(parse_num(&key, value)?),
            "s_frac" => raw.s_frac = Some(parse_num(&key, value)?),
            "seeds" => raw.seeds = Some(value.into()),
            "grad_tol" => raw.grad_tol = Some(parse_num(&key, value)?),
            "max_iter" => raw.max_iter = Some(parse_num(&key, value)?),
            "delta0" => raw.delta0 = Some(parse_num(&key, value)?),
            "delta_max" => raw.delta_max = Some(parse_num(&key, value)?),
            "eta1" => raw.eta1 = Some(parse_num(&key, value)?),
            "eta2" => raw.eta2 = Some(parse_num(&key, value)?),
            "gamma1" => raw.gamma1 = Some(parse_num(&key, value)?),
            "gamma2" => raw.gamma2 = Some(parse_num(&key, value)?),
            "grow" => raw.grow = Some(parse_num(&key, value)?),
            "out" => raw.out = Some(value.into()),
            other => bail!("{}:{}: unknown key `{other}`", path.display(), lineno + 1),
        }
    }
    Ok(raw)
}

/// Field-wise merge; values in `primary` win.
pub fn merge(primary: RawSpec, fallback: RawSpec) -> RawSpec {
    macro_rules! pick {
        ($field:ident) => {
            primary.$field.or(fallback.$field)
        };
    }
    RawSpec {
        loss: pick!(loss),
        data: pick!(data),
        lambda: pick!(lambda),
        features: pick!(features),
        solver: pick!(solver),
        fine: pick!(fine),
        stcg_cap: pick!(stcg_cap),
        ell: pick!(ell),
        ell_frac: pick!(ell_frac),
        sketch: pick!(sketch),
        s: pick!(s),
        s_frac: pick!(s_frac),
        seeds: pick!(seeds),
        grad_tol: pick!(grad_tol),
        max_iter: pick!(max_iter),
        delta0: pick!(delta0),
        delta_max: pick!(delta_max),
        eta1: pick!(eta1),
        eta2: pick!(eta2),
        gamma1: pick!(gamma1),
        gamma2: pick!(gamma2),
        grow: pick!(grow),
        out: pick!(out),
    }
}

pub fn parse_seed_list(text: &str) -> Result<Vec<u64>> {
    let seeds: Result<Vec<u64>> = text
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<u64>().map_err(|_| anyhow::anyhow!("bad seed `{t}`"))
        })
        .collect();
    let seeds = seeds?;
    if seeds.is_empty() {
        bail!("seed list is empty");
    }
    Ok(seeds)
}

/// Resolve a raw spec into a runnable experiment. Subspace fractions are
/// converted with `ceil` against the dataset dimension, which requires one
/// extra parse of the data file.
pub fn resolve(raw: &RawSpec, out_override: Option<PathBuf>) -> Result<ExperimentSpec> {
    let loss = match raw.loss.as_deref() {
        Some("logistic") => LossKind::Logistic,
        Some("ls") => LossKind::LeastSquares,
        Some(other) => bail!("unknown loss `{other}` (expected logistic|ls)"),
        None => bail!("missing `--loss`"),
    };
    let data = PathBuf::from(raw.data.as_deref().context("missing `--data`")?);
    let problem = ProblemSpec { loss, data, lambda: raw.lambda, features: raw.features };

    let kind = match raw.solver.as_deref() {
        Some("tr") => SolverKind::Tr,
        Some("tltr") => SolverKind::Tltr,
        Some("sn") => SolverKind::Sn,
        Some(other) => bail!("unknown solver `{other}` (expected tr|tltr|sn)"),
        None => bail!("missing `--solver`"),
    };

    let fine = match raw.fine.as_deref() {
        Some("cp") => FineSolver::CauchyPoint,
        Some("stcg") | None => FineSolver::SteihaugToint { cap: raw.stcg_cap.unwrap_or(2) },
        Some(other) => bail!("unknown fine solver `{other}` (expected cp|stcg)"),
    };

    let defaults = TrConfig::<f64>::default();
    let tr = TrConfig {
        delta0: raw.delta0.unwrap_or(defaults.delta0),
        delta_max: raw.delta_max.unwrap_or(defaults.delta_max),
        eta1: raw.eta1.unwrap_or(defaults.eta1),
        eta2: raw.eta2.unwrap_or(defaults.eta2),
        gamma1: raw.gamma1.unwrap_or(defaults.gamma1),
        gamma2: raw.gamma2.unwrap_or(defaults.gamma2),
        grow: raw.grow.unwrap_or(defaults.grow),
        grad_tol: raw.grad_tol.unwrap_or(defaults.grad_tol),
        max_iter: raw.max_iter.unwrap_or(defaults.max_iter),
        fine_solver: fine,
        stcg_rtol: defaults.stcg_rtol,
    };

    let sub = match kind {
        SolverKind::Tr => {
            if raw.ell.is_some() || raw.ell_frac.is_some() {
                bail!("solver `tr` takes no subspace size");
            }
            None
        }
        SolverKind::Tltr | SolverKind::Sn => {
            let ell = match (raw.ell, raw.ell_frac) {
                (Some(_), Some(_)) => bail!("give either --ell or --ell-frac, not both"),
                (Some(ell), None) => ell,
                (None, Some(frac)) => {
                    if !(0.0..=1.0).contains(&frac) {
                        bail!("--ell-frac must lie in [0, 1]");
                    }
                    let n = peek_dimension(&problem)?;
                    (frac * n as f64).ceil() as usize
                }
                (None, None) => bail!(
                    "solver `{}` needs a subspace size (--ell or --ell-frac)",
                    kind.name()
                ),
            };
            let sketch = match raw.sketch.as_deref() {
                Some("gaussian") | None => SketchKind::Gaussian,
                Some("shash") => SketchKind::SHashing,
                Some(other) => bail!("unknown sketch `{other}` (expected gaussian|shash)"),
            };
            let s = match (raw.s, raw.s_frac) {
                (Some(_), Some(_)) => bail!("give either --s or --s-frac, not both"),
                (Some(s), None) => Some(s),
                (None, Some(frac)) => {
                    if !(0.0..=1.0).contains(&frac) {
                        bail!("--s-frac must lie in [0, 1]");
                    }
                    Some(((frac * ell as f64).ceil() as usize).max(1))
                }
                (None, None) => None,
            };
            Some(SubspaceConfig { ell, kind: sketch, s, ..SubspaceConfig::disabled() })
        }
    };

    let seeds = parse_seed_list(raw.seeds.as_deref().unwrap_or("0"))?;
    let out = match out_override {
        Some(o) => o,
        None => PathBuf::from(raw.out.as_deref().context("missing `--out`")?),
    };

    Ok(ExperimentSpec { problem, solver: SolverSpec { kind, tr, sub }, seeds, out })
}

fn peek_dimension(problem: &ProblemSpec) -> Result<usize> {
    Ok(crate::load_problem(problem)?.n_features())
}
