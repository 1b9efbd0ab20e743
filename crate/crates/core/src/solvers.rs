//! Trust-region drivers: the two-level method with a sketched subspace step,
//! the standard single-level method, and a sketched Newton baseline.
//!
//! Every solver emits a [`RunTrace`] with one record per iteration attempt,
//! so runs are comparable across methods and reproducible byte-for-byte
//! given the same seed and configuration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{add_scaled, dot, norm};
use crate::losses::{EvalCounts, Objective};
use crate::qp::{cauchy_point, steihaug_toint, QpStep, QuadraticModel};
use crate::scalar::{lit, Scalar};
use crate::sketch::{
    default_hash_density, gaussian_sketch, shash_sketch, sketch_gradient, sketch_hessian,
    SketchKind, SketchOperator,
};

/// Residual tolerance for the subspace QP: solved as accurately as the
/// conjugate gradient allows, since the reduced problem is small.
const SUBSPACE_STCG_RTOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("objective or gradient not finite at the initial point")]
    NonFiniteStart,
    #[error("objective or gradient became non-finite at iteration {0}")]
    NonFinite(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Solver for the full-space trust-region subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FineSolver {
    CauchyPoint,
    /// Truncated CG with an iteration cap.
    SteihaugToint { cap: usize },
}

/// Trust-region constants and termination controls.
#[derive(Debug, Clone, PartialEq)]
pub struct TrConfig<T> {
    pub delta0: T,
    pub delta_max: T,
    /// Acceptance threshold, `0 < eta1 <= eta2 < 1`.
    pub eta1: T,
    /// Expansion threshold.
    pub eta2: T,
    /// Shrink factor on rejection, `0 < gamma1 <= gamma2 < 1`.
    pub gamma1: T,
    /// Shrink factor on weak acceptance.
    pub gamma2: T,
    /// Radius growth factor on strong acceptance, `> 1`.
    pub grow: T,
    pub grad_tol: T,
    pub max_iter: usize,
    pub fine_solver: FineSolver,
    /// Residual tolerance for the fine-level truncated CG.
    pub stcg_rtol: T,
}

impl<T: Scalar> Default for TrConfig<T> {
    fn default() -> Self {
        Self {
            delta0: T::one(),
            delta_max: lit(1e6),
            eta1: lit(0.1),
            eta2: lit(0.75),
            gamma1: lit(0.25),
            gamma2: lit(0.5),
            grow: lit(2.0),
            grad_tol: lit(1e-7),
            max_iter: 1000,
            fine_solver: FineSolver::SteihaugToint { cap: 2 },
            stcg_rtol: lit(1e-6),
        }
    }
}

impl<T: Scalar> TrConfig<T> {
    fn validate(&self) -> Result<(), SolveError> {
        let ok = self.delta0 > T::zero()
            && self.delta_max >= self.delta0
            && T::zero() < self.eta1
            && self.eta1 <= self.eta2
            && self.eta2 < T::one()
            && T::zero() < self.gamma1
            && self.gamma1 <= self.gamma2
            && self.gamma2 < T::one()
            && self.grow > T::one()
            && self.grad_tol > T::zero();
        if !ok {
            return Err(SolveError::Config(
                "need 0 < eta1 <= eta2 < 1, 0 < gamma1 <= gamma2 < 1, grow > 1, \
                 0 < delta0 <= delta_max, grad_tol > 0"
                    .into(),
            ));
        }
        if let FineSolver::SteihaugToint { cap } = self.fine_solver {
            if cap < 1 {
                return Err(SolveError::Config("steihaug cap must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Sketched-subspace controls. `ell = 0` disables the subspace step
/// entirely, reducing the two-level method to the standard one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubspaceConfig {
    pub ell: usize,
    pub kind: SketchKind,
    /// Nonzeros per column for s-hashing; `None` picks ~10% of `ell`.
    pub s: Option<usize>,
    /// Halving steps tried by the subspace line search after alpha = 1.
    pub alpha_max_backtracks: usize,
    /// Draw a fresh sketch even after a rejected iteration.
    pub redraw_on_reject: bool,
}

impl SubspaceConfig {
    pub fn disabled() -> Self {
        Self {
            ell: 0,
            kind: SketchKind::Gaussian,
            s: None,
            alpha_max_backtracks: 10,
            redraw_on_reject: true,
        }
    }

    pub fn gaussian(ell: usize) -> Self {
        Self { ell, ..Self::disabled() }
    }

    pub fn shashing(ell: usize, s: Option<usize>) -> Self {
        Self { ell, kind: SketchKind::SHashing, s, ..Self::disabled() }
    }

    fn enabled(&self) -> bool {
        self.ell > 0
    }

    fn validate(&self, n: usize) -> Result<(), SolveError> {
        if !self.enabled() {
            return Ok(());
        }
        if self.ell > n {
            return Err(SolveError::Config(format!(
                "subspace size ell={} exceeds problem dimension n={n}",
                self.ell
            )));
        }
        if self.kind == SketchKind::SHashing {
            let s = self.s.unwrap_or_else(|| default_hash_density(self.ell));
            if s < 1 || s > self.ell {
                return Err(SolveError::Config(format!(
                    "hashing density s={s} must satisfy 1 <= s <= ell={}",
                    self.ell
                )));
            }
        }
        Ok(())
    }
}

/// One iteration attempt. `f`, `grad_norm`, and `delta` describe the state
/// at the start of the iteration; the remaining fields describe its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<T> {
    pub k: usize,
    pub f: T,
    pub grad_norm: T,
    /// Trust radius, absent for line-search methods.
    pub delta: Option<T>,
    /// Acceptance ratio; `-inf` marks a degenerate-denominator rejection,
    /// `None` an iteration that terminated before attempting a step.
    pub rho: Option<T>,
    /// The ratio the standard single-level method would have produced for
    /// the same smoothing step.
    pub rho_tr: Option<T>,
    pub accepted: bool,
    pub subspace_used: bool,
    pub alpha: T,
    pub evals: EvalCounts,
    pub sketches: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradTol,
    MaxIter,
}

/// Run metadata carried alongside the records.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunMeta {
    pub solver: String,
    pub seed: u64,
    /// Compact configuration description, for trace provenance.
    pub config: String,
    /// Problem identifier, filled in by callers that know it.
    pub problem: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<T> {
    pub records: Vec<IterationRecord<T>>,
    pub terminated_by: Termination,
    pub final_x: Vec<T>,
    pub final_grad_norm: T,
    pub meta: RunMeta,
}

impl<T: Scalar> RunTrace<T> {
    /// Number of iteration attempts before termination.
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn accepted_steps(&self) -> usize {
        self.records.iter().filter(|r| r.accepted).count()
    }
}

/// Composite acceptance ratio: actual decrease of the full trial step over
/// model decrease plus the measured subspace gain. Returns `None` when the
/// denominator falls below `1e-15 * max(1, |f_k|)` (degenerate ratio, the
/// caller must reject and shrink).
pub fn composite_rho<T: Scalar>(
    f_k: T,
    f_trial: T,
    model_decrease: T,
    f_half: T,
    f_after_sub: T,
) -> Option<T> {
    let denom = model_decrease + (f_half - f_after_sub);
    let floor = lit::<T>(1e-15) * T::one().max(f_k.abs());
    if !denom.is_finite() || denom < floor {
        return None;
    }
    let rho = (f_k - f_trial) / denom;
    if rho.is_finite() { Some(rho) } else { None }
}

/// Three-case radius update.
pub fn radius_update<T: Scalar>(rho: T, delta: T, cfg: &TrConfig<T>) -> T {
    if rho >= cfg.eta2 {
        (cfg.grow * delta).min(cfg.delta_max)
    } else if rho >= cfg.eta1 {
        cfg.gamma2 * delta
    } else {
        cfg.gamma1 * delta
    }
}

/// Backtracking search for a step size along the prolongated subspace
/// direction: tries `alpha in {1, 1/2, 1/4, ...}` (1 + `max_backtracks`
/// candidates) and returns the first that strictly decreases `f` from
/// `x_half`. Failure is a normal outcome.
pub fn line_search_alpha<T: Scalar>(
    obj: &dyn Objective<T>,
    x_half: &[T],
    d: &[T],
    max_backtracks: usize,
) -> (T, bool) {
    let f_half = obj.value(x_half);
    let (alpha, _, ok) = line_search_alpha_from(obj, x_half, f_half, d, max_backtracks);
    (alpha, ok)
}

fn line_search_alpha_from<T: Scalar>(
    obj: &dyn Objective<T>,
    x_half: &[T],
    f_half: T,
    d: &[T],
    max_backtracks: usize,
) -> (T, T, bool) {
    let mut alpha = T::one();
    for _ in 0..=max_backtracks {
        let f_new = obj.value(&add_scaled(x_half, alpha, d));
        if f_new < f_half {
            return (alpha, f_new, true);
        }
        alpha = alpha * lit(0.5);
    }
    (T::zero(), f_half, false)
}

/// Standard trust-region method: smoothing step only, acceptance by the
/// classical ratio. Identical record-for-record to [`tltr_solve`] with the
/// subspace disabled.
pub fn tr_solve<T: Scalar>(
    obj: &dyn Objective<T>,
    x0: &[T],
    cfg: &TrConfig<T>,
) -> Result<RunTrace<T>, SolveError> {
    let mut trace = drive_tr(obj, x0, cfg, &SubspaceConfig::disabled(), 0)?;
    trace.meta.solver = "tr".into();
    Ok(trace)
}

/// Two-level trust-region method: a cheap full-space smoothing step,
/// followed by an accurately solved subproblem in a fresh random subspace,
/// composed through the two-level acceptance ratio.
pub fn tltr_solve<T: Scalar>(
    obj: &dyn Objective<T>,
    x0: &[T],
    cfg: &TrConfig<T>,
    sub: &SubspaceConfig,
    seed: u64,
) -> Result<RunTrace<T>, SolveError> {
    let mut trace = drive_tr(obj, x0, cfg, sub, seed)?;
    trace.meta.solver = "tltr".into();
    trace.meta.seed = seed;
    Ok(trace)
}

/// Per-iteration sketch with counter-derived RNG substreams: iteration `k`
/// draws from stream `k + 1` of the root seed, so traces do not depend on
/// how many draws earlier iterations consumed (stream 0 is left to callers
/// for initial guesses).
fn draw_sketch<T: Scalar>(
    sub: &SubspaceConfig,
    n: usize,
    seed: u64,
    k: usize,
) -> SketchOperator<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64 + 1);
    match sub.kind {
        SketchKind::Gaussian => {
            gaussian_sketch(sub.ell, n, &mut rng).expect("validated dimensions")
        }
        SketchKind::SHashing => {
            let s = sub.s.unwrap_or_else(|| default_hash_density(sub.ell));
            shash_sketch(sub.ell, n, s, &mut rng).expect("validated dimensions")
        }
    }
}

fn describe_tr_config<T: Scalar>(cfg: &TrConfig<T>, sub: &SubspaceConfig) -> String {
    let fine = match cfg.fine_solver {
        FineSolver::CauchyPoint => "cp".to_string(),
        FineSolver::SteihaugToint { cap } => format!("stcg(cap={cap},rtol={})", cfg.stcg_rtol),
    };
    let subspace = if sub.ell == 0 {
        "off".to_string()
    } else {
        let kind = match sub.kind {
            SketchKind::Gaussian => "gaussian".to_string(),
            SketchKind::SHashing => format!(
                "shash(s={})",
                sub.s.unwrap_or_else(|| default_hash_density(sub.ell))
            ),
        };
        format!("ell={} {kind} backtracks={} redraw={}", sub.ell, sub.alpha_max_backtracks, sub.redraw_on_reject)
    };
    format!(
        "fine={fine} delta0={} delta_max={} eta=({},{}) gamma=({},{}) grow={} grad_tol={} max_iter={} subspace[{subspace}]",
        cfg.delta0, cfg.delta_max, cfg.eta1, cfg.eta2, cfg.gamma1, cfg.gamma2, cfg.grow,
        cfg.grad_tol, cfg.max_iter
    )
}

fn drive_tr<T: Scalar>(
    obj: &dyn Objective<T>,
    x0: &[T],
    cfg: &TrConfig<T>,
    sub: &SubspaceConfig,
    seed: u64,
) -> Result<RunTrace<T>, SolveError> {
    cfg.validate()?;
    sub.validate(obj.dimension())?;

    let mut x = x0.to_vec();
    let mut f_x = obj.value(&x);
    if !f_x.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFiniteStart);
    }
    let mut delta = cfg.delta0;
    let mut records: Vec<IterationRecord<T>> = Vec::new();
    let mut termination = Termination::MaxIter;
    let mut sketches = 0u64;
    let mut kept_sketch: Option<SketchOperator<T>> = None;
    let mut last_rejected = false;
    let mut final_grad_norm: Option<T> = None;

    for k in 0..cfg.max_iter {
        let f_start = f_x;
        let g = obj.gradient(&x);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(if k == 0 { SolveError::NonFiniteStart } else { SolveError::NonFinite(k) });
        }
        let grad_norm = norm(&g);
        if grad_norm < cfg.grad_tol {
            records.push(IterationRecord {
                k,
                f: f_start,
                grad_norm,
                delta: Some(delta),
                rho: None,
                rho_tr: None,
                accepted: false,
                subspace_used: false,
                alpha: T::zero(),
                evals: obj.eval_counts(),
                sketches,
            });
            termination = Termination::GradTol;
            final_grad_norm = Some(grad_norm);
            break;
        }

        // Smoothing step on the full space.
        let hess = |v: &[T]| obj.hess_vec(&x, v);
        let model = QuadraticModel { f0: f_x, grad: &g, hess: &hess, radius: delta };
        let fine: QpStep<T> = match cfg.fine_solver {
            FineSolver::CauchyPoint => cauchy_point(&model),
            FineSolver::SteihaugToint { cap } => steihaug_toint(&model, cfg.stcg_rtol, cap),
        }
        .expect("gradient nonzero above tolerance");
        let x_half = add_scaled(&x, T::one(), &fine.p);
        let f_half = obj.value(&x_half);

        // Subspace step at the post-smoothing point.
        let mut alpha = T::zero();
        let mut subspace_used = false;
        let mut f_after = f_half;
        let mut x_trial = x_half.clone();
        if sub.enabled() {
            let operator = if !sub.redraw_on_reject && last_rejected && kept_sketch.is_some() {
                kept_sketch.take().expect("checked is_some")
            } else {
                sketches += 1;
                draw_sketch(sub, obj.dimension(), seed, k)
            };
            let g_half = obj.gradient(&x_half);
            let gs = sketch_gradient(&operator, &g_half);
            if norm(&gs) > T::zero() {
                let hs = sketch_hessian(&operator, obj, &x_half);
                let sub_model =
                    QuadraticModel { f0: f_half, grad: &gs, hess: &hs, radius: delta };
                let sub_step = steihaug_toint(&sub_model, lit(SUBSPACE_STCG_RTOL), sub.ell)
                    .expect("sketched gradient nonzero");
                let direction = operator.apply_transpose(&sub_step.p);
                let (a, f_new, ok) = line_search_alpha_from(
                    obj,
                    &x_half,
                    f_half,
                    &direction,
                    sub.alpha_max_backtracks,
                );
                if ok {
                    alpha = a;
                    f_after = f_new;
                    subspace_used = true;
                    x_trial = add_scaled(&x_half, a, &direction);
                }
            }
            kept_sketch = Some(operator);
        }

        let rho_tr = composite_rho(f_start, f_half, fine.model_decrease, f_half, f_half);
        let rho = composite_rho(f_start, f_after, fine.model_decrease, f_half, f_after);
        let accepted = matches!(rho, Some(r) if r > cfg.eta1);
        if accepted {
            x = x_trial;
            f_x = f_after;
        }
        last_rejected = !accepted;
        records.push(IterationRecord {
            k,
            f: f_start,
            grad_norm,
            delta: Some(delta),
            rho: Some(rho.unwrap_or_else(T::neg_infinity)),
            rho_tr: Some(rho_tr.unwrap_or_else(T::neg_infinity)),
            accepted,
            subspace_used,
            alpha,
            evals: obj.eval_counts(),
            sketches,
        });
        delta = radius_update(rho.unwrap_or_else(T::neg_infinity), delta, cfg);
    }

    let final_grad_norm = match final_grad_norm {
        Some(gn) => gn,
        None => norm(&obj.gradient(&x)),
    };
    Ok(RunTrace {
        records,
        terminated_by: termination,
        final_x: x,
        final_grad_norm,
        meta: RunMeta {
            solver: String::new(),
            seed,
            config: describe_tr_config(cfg, sub),
            problem: String::new(),
        },
    })
}

/// Controls for the sketched Newton baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct SnConfig<T> {
    /// Armijo slope fraction.
    pub armijo_c: T,
    pub max_backtracks: usize,
    pub grad_tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for SnConfig<T> {
    fn default() -> Self {
        Self { armijo_c: lit(1e-4), max_backtracks: 50, grad_tol: lit(1e-7), max_iter: 1000 }
    }
}

/// Sketched Newton baseline: per iteration a fresh sketch, an exactly solved
/// `ell x ell` Newton system on the subspace, and Armijo backtracking along
/// the prolongated direction. Falls back to the sketched steepest-descent
/// direction when the factorization fails or the Newton direction does not
/// descend.
pub fn sn_solve<T: Scalar>(
    obj: &dyn Objective<T>,
    x0: &[T],
    sub: &SubspaceConfig,
    cfg: &SnConfig<T>,
    seed: u64,
) -> Result<RunTrace<T>, SolveError> {
    if !sub.enabled() {
        return Err(SolveError::Config("sketched Newton requires ell >= 1".into()));
    }
    sub.validate(obj.dimension())?;
    let n = obj.dimension();
    let mut trace = sn_solve_with(obj, x0, cfg, |k| draw_sketch(sub, n, seed, k))?;
    trace.meta.seed = seed;
    Ok(trace)
}

/// [`sn_solve`] with an explicit sketch source, one operator per iteration
/// (coordinate sketches, fixed operators in tests).
pub fn sn_solve_with<T: Scalar>(
    obj: &dyn Objective<T>,
    x0: &[T],
    cfg: &SnConfig<T>,
    mut sketcher: impl FnMut(usize) -> SketchOperator<T>,
) -> Result<RunTrace<T>, SolveError> {
    if cfg.grad_tol <= T::zero() {
        return Err(SolveError::Config("grad_tol must be positive".into()));
    }
    let mut x = x0.to_vec();
    let mut f_x = obj.value(&x);
    if !f_x.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFiniteStart);
    }
    let mut records = Vec::new();
    let mut termination = Termination::MaxIter;
    let mut sketches = 0u64;
    let mut final_grad_norm: Option<T> = None;

    for k in 0..cfg.max_iter {
        let f_start = f_x;
        let g = obj.gradient(&x);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(if k == 0 { SolveError::NonFiniteStart } else { SolveError::NonFinite(k) });
        }
        let grad_norm = norm(&g);
        if grad_norm < cfg.grad_tol {
            records.push(IterationRecord {
                k,
                f: f_start,
                grad_norm,
                delta: None,
                rho: None,
                rho_tr: None,
                accepted: false,
                subspace_used: false,
                alpha: T::zero(),
                evals: obj.eval_counts(),
                sketches,
            });
            termination = Termination::GradTol;
            final_grad_norm = Some(grad_norm);
            break;
        }

        let operator = sketcher(k);
        sketches += 1;
        let gs = sketch_gradient(&operator, &g);
        let mut alpha = T::zero();
        let mut accepted = false;
        let subspace_used = norm(&gs) > T::zero();
        if subspace_used {
            let hs = sketch_hessian(&operator, obj, &x);
            let neg_gs: Vec<T> = gs.iter().map(|&v| -v).collect();
            let newton = hs
                .solve_symmetric(&neg_gs)
                .map(|q| operator.apply_transpose(&q))
                .filter(|d| dot(&g, d) < T::zero());
            let d = match newton {
                Some(d) => d,
                None => operator.apply_transpose(&neg_gs),
            };
            let gd = dot(&g, &d);
            if gd < T::zero() {
                let mut a = T::one();
                for _ in 0..=cfg.max_backtracks {
                    let f_new = obj.value(&add_scaled(&x, a, &d));
                    if f_new <= f_start + cfg.armijo_c * a * gd {
                        x = add_scaled(&x, a, &d);
                        f_x = f_new;
                        alpha = a;
                        accepted = true;
                        break;
                    }
                    a = a * lit(0.5);
                }
            }
        }
        records.push(IterationRecord {
            k,
            f: f_start,
            grad_norm,
            delta: None,
            rho: None,
            rho_tr: None,
            accepted,
            subspace_used,
            alpha,
            evals: obj.eval_counts(),
            sketches,
        });
    }

    let final_grad_norm = match final_grad_norm {
        Some(gn) => gn,
        None => norm(&obj.gradient(&x)),
    };
    Ok(RunTrace {
        records,
        terminated_by: termination,
        final_x: x,
        final_grad_norm,
        meta: RunMeta {
            solver: "sn".into(),
            seed: 0,
            config: format!(
                "armijo_c={} backtracks={} grad_tol={} max_iter={}",
                cfg.armijo_c, cfg.max_backtracks, cfg.grad_tol, cfg.max_iter
            ),
            problem: String::new(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::LogisticLoss;
    use crate::synth::{random_x0, synthetic_classification};

    /// f(x) = 1/2 sum d_i x_i^2, a convex quadratic with diagonal Hessian.
    struct DiagQuadratic {
        diag: Vec<f64>,
    }

    impl Objective<f64> for DiagQuadratic {
        fn dimension(&self) -> usize {
            self.diag.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            0.5 * x.iter().zip(&self.diag).map(|(&xi, &di)| di * xi * xi).sum::<f64>()
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter().zip(&self.diag).map(|(&xi, &di)| di * xi).collect()
        }
        fn hess_vec(&self, _x: &[f64], v: &[f64]) -> Vec<f64> {
            v.iter().zip(&self.diag).map(|(&vi, &di)| di * vi).collect()
        }
    }

    struct Rosenbrock;

    impl Objective<f64> for Rosenbrock {
        fn dimension(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ]
        }
        fn hess_vec(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
            let h11 = 2.0 - 400.0 * (x[1] - 3.0 * x[0] * x[0]);
            let h12 = -400.0 * x[0];
            vec![h11 * v[0] + h12 * v[1], h12 * v[0] + 200.0 * v[1]]
        }
    }

    fn unit_quadratic(n: usize) -> DiagQuadratic {
        DiagQuadratic { diag: vec![1.0; n] }
    }

    fn logistic_instance(seed: u64) -> LogisticLoss<f64> {
        let data = synthetic_classification(60, 8, 0.1, 0.3, seed);
        LogisticLoss::with_default_lambda(data).unwrap()
    }

    /// Separable variant: the optimum value stays below 1, so the
    /// degenerate-ratio floor lies safely under the gradient tolerance and
    /// runs terminate by GradTol.
    fn separable_logistic_instance(seed: u64) -> LogisticLoss<f64> {
        let data = synthetic_classification(60, 8, 0.0, 0.3, seed);
        LogisticLoss::with_default_lambda(data).unwrap()
    }

    #[test]
    fn composite_rho_reduces_to_standard_ratio() {
        // p_S = 0: f_half == f_after_sub
        let rho = composite_rho(2.0, 1.5, 0.6, 1.5, 1.5).unwrap();
        assert!((rho - 0.5_f64 / 0.6).abs() < 1e-15);
    }

    #[test]
    fn composite_rho_direct_arithmetic() {
        let rho = composite_rho(2.0, 1.2, 0.6, 1.5, 1.2).unwrap();
        assert!((rho - 0.8_f64 / 0.9).abs() < 1e-15);
    }

    #[test]
    fn composite_rho_degenerate_denominator() {
        assert!(composite_rho(1.0, 1.0, 0.0, 1.0, 1.0).is_none());
        assert!(composite_rho(1.0, 1.0, 1e-20, 1.0, 1.0).is_none());
        assert!(composite_rho(1.0, f64::NAN, 1.0, 1.0, 1.0).is_none());
    }

    #[test]
    fn composite_rho_dominates_standard_when_subspace_gains() {
        // (A + d) / (B + d) > A / B whenever A < B, d > 0
        for (a, b, gain) in [(0.3, 0.6, 0.1), (0.0, 1.0, 0.5), (0.55, 0.6, 1e-3)] {
            let f_k = 10.0;
            let f_half = f_k - a;
            let f_after = f_half - gain;
            let standard = composite_rho(f_k, f_half, b, f_half, f_half).unwrap();
            let composite = composite_rho(f_k, f_after, b, f_half, f_after).unwrap();
            assert!(standard < 1.0);
            assert!(composite > standard, "composite {composite} <= standard {standard}");
        }
    }

    #[test]
    fn radius_update_three_cases() {
        let cfg = TrConfig::<f64> { delta_max: 100.0, ..TrConfig::default() };
        assert_eq!(radius_update(0.9, 1.0, &cfg), 2.0);
        assert_eq!(radius_update(0.3, 1.0, &cfg), 0.5);
        assert_eq!(radius_update(0.01, 1.0, &cfg), 0.25);
        assert_eq!(radius_update(f64::NEG_INFINITY, 1.0, &cfg), 0.25);
        // growth caps at delta_max
        assert_eq!(radius_update(0.9, 80.0, &cfg), 100.0);
    }

    #[test]
    fn line_search_accepts_descent_immediately() {
        let obj = unit_quadratic(2);
        let x_half = [1.0, 1.0];
        let d = [-0.1, -0.1]; // small step along -grad
        let (alpha, ok) = line_search_alpha(&obj, &x_half, &d, 10);
        assert!(ok);
        assert_eq!(alpha, 1.0);
    }

    #[test]
    fn line_search_fails_on_ascent_direction() {
        let obj = unit_quadratic(2);
        let x_half = [1.0, 0.0];
        let d = [1.0, 0.0];
        let (alpha, ok) = line_search_alpha(&obj, &x_half, &d, 6);
        assert!(!ok);
        assert_eq!(alpha, 0.0);
    }

    #[test]
    fn line_search_halves_on_overshoot() {
        // bowl f = x^2/2 at x = 1; exact step is -1, direction overshoots 3x:
        // alpha = 1 lands at -2 (worse), alpha = 1/2 lands at -0.5 (better).
        let obj = unit_quadratic(1);
        let (alpha, ok) = line_search_alpha(&obj, &[1.0], &[-3.0], 10);
        assert!(ok);
        assert_eq!(alpha, 0.5);
    }

    #[test]
    fn tr_solves_pure_quadratic_in_a_few_iterations() {
        let obj = unit_quadratic(3);
        let cfg = TrConfig {
            delta0: 10.0,
            fine_solver: FineSolver::SteihaugToint { cap: 5 },
            ..TrConfig::default()
        };
        let trace = tr_solve(&obj, &[1.0, 1.0, 1.0], &cfg).unwrap();
        assert_eq!(trace.terminated_by, Termination::GradTol);
        assert!(trace.final_grad_norm < 1e-7);
        assert!(trace.iterations() <= 3, "took {} iterations", trace.iterations());
        let first = &trace.records[0];
        assert!(first.accepted);
        assert!((first.rho.unwrap() - 1.0).abs() < 1e-12, "exact model gives rho = 1");
    }

    #[test]
    fn tr_solves_rosenbrock() {
        let cfg = TrConfig {
            grad_tol: 1e-10,
            max_iter: 500,
            fine_solver: FineSolver::SteihaugToint { cap: 10 },
            stcg_rtol: 1e-10,
            ..TrConfig::default()
        };
        let trace = tr_solve(&Rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert_eq!(trace.terminated_by, Termination::GradTol);
        assert!((trace.final_x[0] - 1.0).abs() < 1e-6, "x = {:?}", trace.final_x);
        assert!((trace.final_x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_max_iter_yields_empty_trace() {
        let obj = unit_quadratic(2);
        let cfg = TrConfig { max_iter: 0, ..TrConfig::default() };
        let trace = tr_solve(&obj, &[1.0, 1.0], &cfg).unwrap();
        assert!(trace.records.is_empty());
        assert_eq!(trace.terminated_by, Termination::MaxIter);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let obj = unit_quadratic(2);
        let cfg = TrConfig::default();
        assert!(matches!(
            tr_solve(&obj, &[f64::NAN, 0.0], &cfg),
            Err(SolveError::NonFiniteStart)
        ));
    }

    #[test]
    fn config_validation() {
        let obj = unit_quadratic(2);
        let bad = TrConfig { eta1: 0.9, eta2: 0.5, ..TrConfig::default() };
        assert!(matches!(tr_solve(&obj, &[1.0, 1.0], &bad), Err(SolveError::Config(_))));
        // ell > n must fail before any evaluation
        let sub = SubspaceConfig::gaussian(5);
        assert!(matches!(
            tltr_solve(&obj, &[1.0, 1.0], &TrConfig::default(), &sub, 1),
            Err(SolveError::Config(_))
        ));
    }

    #[test]
    fn tltr_with_subspace_disabled_equals_tr() {
        for seed in [1u64, 2, 3] {
            let loss_a = logistic_instance(seed);
            let loss_b = logistic_instance(seed);
            let x0 = random_x0(8, seed);
            let cfg = TrConfig { max_iter: 200, ..TrConfig::default() };
            let tr = tr_solve(&loss_a, &x0, &cfg).unwrap();
            let off = tltr_solve(&loss_b, &x0, &cfg, &SubspaceConfig::disabled(), seed).unwrap();
            assert_eq!(tr.records, off.records);
            assert_eq!(tr.terminated_by, off.terminated_by);
            assert_eq!(tr.final_x, off.final_x);
        }
    }

    #[test]
    fn tltr_is_deterministic_given_seed() {
        let cfg = TrConfig { max_iter: 100, ..TrConfig::default() };
        let sub = SubspaceConfig::gaussian(3);
        let x0 = random_x0(8, 7);
        let a = tltr_solve(&logistic_instance(5), &x0, &cfg, &sub, 42).unwrap();
        let b = tltr_solve(&logistic_instance(5), &x0, &cfg, &sub, 42).unwrap();
        assert_eq!(a, b);
        let c = tltr_solve(&logistic_instance(5), &x0, &cfg, &sub, 43).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn tltr_accepted_iterates_strictly_decrease_f() {
        let cfg = TrConfig { max_iter: 300, ..TrConfig::default() };
        let sub = SubspaceConfig::shashing(3, None);
        let x0 = random_x0(8, 3);
        let trace = tltr_solve(&separable_logistic_instance(9), &x0, &cfg, &sub, 11).unwrap();
        assert_eq!(trace.terminated_by, Termination::GradTol);
        for pair in trace.records.windows(2) {
            if pair[0].accepted {
                assert!(pair[1].f < pair[0].f, "accepted step must strictly decrease f");
            } else {
                assert_eq!(pair[1].f, pair[0].f);
            }
        }
    }

    #[test]
    fn tltr_composite_ratio_dominates_standard() {
        let cfg = TrConfig {
            max_iter: 300,
            fine_solver: FineSolver::CauchyPoint,
            ..TrConfig::default()
        };
        let sub = SubspaceConfig::gaussian(3);
        let x0 = random_x0(8, 21);
        let trace = tltr_solve(&logistic_instance(13), &x0, &cfg, &sub, 17).unwrap();
        let mut checked = 0;
        for r in &trace.records {
            let (Some(rho), Some(rho_tr)) = (r.rho, r.rho_tr) else { continue };
            if r.subspace_used && rho_tr.is_finite() && rho_tr < 1.0 {
                assert!(rho > rho_tr, "iteration {}: rho {rho} <= rho_tr {rho_tr}", r.k);
                checked += 1;
            }
        }
        assert!(checked > 0, "no subspace iterations exercised the dominance check");
    }

    #[test]
    fn tltr_feasible_steps_and_radius_bounds() {
        // feasibility of p_F and p_S is enforced inside the QP solvers; here
        // check the radius trajectory stays within (0, delta_max].
        let cfg = TrConfig { max_iter: 200, delta_max: 8.0, ..TrConfig::default() };
        let sub = SubspaceConfig::gaussian(4);
        let x0 = random_x0(8, 2);
        let trace = tltr_solve(&logistic_instance(2), &x0, &cfg, &sub, 3).unwrap();
        for r in &trace.records {
            let d = r.delta.unwrap();
            assert!(d > 0.0 && d <= 8.0);
        }
    }

    #[test]
    fn tltr_keep_sketch_on_reject_draws_fewer() {
        let cfg = TrConfig {
            max_iter: 60,
            delta0: 1e4, // oversize radius provokes rejections early on
            ..TrConfig::default()
        };
        let x0 = random_x0(8, 5);
        let redraw = SubspaceConfig::gaussian(3);
        let keep = SubspaceConfig { redraw_on_reject: false, ..SubspaceConfig::gaussian(3) };
        let a = tltr_solve(&logistic_instance(4), &x0, &cfg, &redraw, 9).unwrap();
        let b = tltr_solve(&logistic_instance(4), &x0, &cfg, &keep, 9).unwrap();
        let rejected: usize = b.records.iter().filter(|r| !r.accepted).count();
        assert!(rejected > 0, "test instance expected to reject at least once");
        let draws_a = a.records.last().unwrap().sketches;
        let draws_b = b.records.last().unwrap().sketches;
        assert!(draws_b < draws_a, "kept sketches must reduce draws: {draws_b} vs {draws_a}");
    }

    #[test]
    fn sn_exact_newton_on_quadratic() {
        let obj = DiagQuadratic { diag: vec![2.0, 5.0, 1.0] };
        let cfg = SnConfig::default();
        let trace = sn_solve_with(&obj, &[3.0, -1.0, 2.0], &cfg, |_| {
            SketchOperator::coordinate(3, 3).unwrap()
        })
        .unwrap();
        assert_eq!(trace.terminated_by, Termination::GradTol);
        assert_eq!(trace.accepted_steps(), 1);
        assert_eq!(trace.records[0].alpha, 1.0);
        assert!(trace.final_grad_norm < 1e-7);
    }

    #[test]
    fn sn_descends_on_logistic() {
        let loss = separable_logistic_instance(31);
        let sub = SubspaceConfig::gaussian(4); // ell = n/2
        let cfg = SnConfig { max_iter: 400, ..SnConfig::default() };
        let trace = sn_solve(&loss, &random_x0(8, 31), &sub, &cfg, 5).unwrap();
        assert_eq!(trace.terminated_by, Termination::GradTol);
        // f strictly decreases on every accepted step; the Euclidean
        // gradient norm is only contracted on most iterations (the subspace
        // Newton step controls the H^{-1}-norm, not the Euclidean one).
        let mut decreases = 0;
        let mut total = 0;
        for pair in trace.records.windows(2) {
            total += 1;
            if pair[1].grad_norm < pair[0].grad_norm {
                decreases += 1;
            }
            if pair[0].accepted {
                assert!(pair[1].f < pair[0].f);
            }
        }
        assert!(total > 5);
        assert!(
            decreases * 2 > total,
            "gradient norm decreased on only {decreases}/{total} iterations"
        );
    }

    #[test]
    fn sn_singular_sketched_hessian_falls_back() {
        // duplicate rows make S H S^T singular
        let obj = DiagQuadratic { diag: vec![1.0, 1.0, 1.0] };
        let entries = vec![
            1.0, 0.0, 0.0, //
            1.0, 0.0, 0.0,
        ];
        let cfg = SnConfig { max_iter: 5, ..SnConfig::default() };
        let trace = sn_solve_with(&obj, &[1.0, 1.0, 1.0], &cfg, |_| {
            SketchOperator::from_dense(2, 3, entries.clone()).unwrap()
        })
        .unwrap();
        // fallback direction still makes progress along the first coordinate
        assert!(trace.records.iter().any(|r| r.accepted));
        assert!(trace.final_x[0].abs() < 1.0);
    }

    #[test]
    fn sn_requires_enabled_subspace() {
        let obj = unit_quadratic(2);
        let err = sn_solve(&obj, &[1.0, 1.0], &SubspaceConfig::disabled(), &SnConfig::default(), 1);
        assert!(matches!(err, Err(SolveError::Config(_))));
    }

    #[test]
    fn gradtol_termination_flag_is_truthful() {
        let loss = separable_logistic_instance(77);
        let cfg = TrConfig { max_iter: 500, ..TrConfig::default() };
        let trace = tr_solve(&loss, &random_x0(8, 77), &cfg).unwrap();
        assert_eq!(trace.terminated_by, Termination::GradTol);
        assert!(trace.final_grad_norm < cfg.grad_tol);
        // the terminal record carries the below-tolerance gradient norm
        let last = trace.records.last().unwrap();
        assert!(last.grad_norm < cfg.grad_tol);
        assert!(last.rho.is_none());
    }
}

