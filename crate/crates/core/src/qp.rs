//! Approximate solvers for the trust-region subproblem
//! `min_p  <g, p> + 1/2 <p, H p>  s.t.  ||p|| <= radius`.
//!
//! The Cauchy point and truncated conjugate gradient (Steihaug-Toint) cover
//! production use; `brute_force_tr` is a slow grid oracle for dimensions up
//! to three, kept for test comparisons.

use thiserror::Error;

use crate::linalg::{add_scaled, dot, norm, scaled, DenseMatrix};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Error)]
pub enum QpError {
    #[error("model gradient is zero: already converged")]
    ZeroGradient,
    #[error("direction is zero")]
    ZeroDirection,
    #[error("brute-force oracle supports dimension <= 3, got {0}")]
    DimensionTooLarge(usize),
}

/// Action of the model Hessian.
pub trait HessVec<T>: Sync {
    fn apply(&self, v: &[T]) -> Vec<T>;
}

impl<T, F> HessVec<T> for F
where
    F: Fn(&[T]) -> Vec<T> + Sync,
{
    fn apply(&self, v: &[T]) -> Vec<T> {
        self(v)
    }
}

impl<T: Scalar> HessVec<T> for DenseMatrix<T> {
    fn apply(&self, v: &[T]) -> Vec<T> {
        self.matvec(v)
    }
}

/// Quadratic model `m(p) = f0 + <g, p> + 1/2 <p, H p>` trusted on the ball
/// of the given radius.
pub struct QuadraticModel<'a, T> {
    pub f0: T,
    pub grad: &'a [T],
    pub hess: &'a dyn HessVec<T>,
    pub radius: T,
}

impl<'a, T: Scalar> QuadraticModel<'a, T> {
    pub fn value(&self, p: &[T]) -> T {
        let hp = self.hess.apply(p);
        self.f0 + dot(self.grad, p) + lit::<T>(0.5) * dot(p, &hp)
    }

    /// Model decrease `m(0) - m(p)`; clamped at zero against rounding.
    pub fn decrease(&self, p: &[T]) -> T {
        let hp = self.hess.apply(p);
        let dec = -(dot(self.grad, p) + lit::<T>(0.5) * dot(p, &hp));
        dec.max(T::zero())
    }
}

/// An approximate subproblem solution.
#[derive(Debug, Clone, PartialEq)]
pub struct QpStep<T> {
    pub p: Vec<T>,
    /// `m(0) - m(p)`, nonnegative.
    pub model_decrease: T,
    pub boundary_hit: bool,
    pub iterations: usize,
}

/// Positive root of `||p + tau d|| = radius`, numerically stable form.
pub fn boundary_tau<T: Scalar>(p: &[T], d: &[T], radius: T) -> Result<T, QpError> {
    let dd = dot(d, d);
    if dd == T::zero() {
        return Err(QpError::ZeroDirection);
    }
    let pd = dot(p, d);
    let pp = dot(p, p);
    let disc = (pd * pd + dd * (radius * radius - pp)).max(T::zero());
    let root = disc.sqrt();
    // Choose the branch that avoids subtracting nearly equal quantities.
    let tau = if pd <= T::zero() {
        (root - pd) / dd
    } else {
        (radius * radius - pp) / (pd + root)
    };
    Ok(tau.max(T::zero()))
}

/// Minimizer of the model along `-g` within the ball.
pub fn cauchy_point<T: Scalar>(model: &QuadraticModel<'_, T>) -> Result<QpStep<T>, QpError> {
    let g = model.grad;
    let gn = norm(g);
    if gn == T::zero() {
        return Err(QpError::ZeroGradient);
    }
    let hg = model.hess.apply(g);
    let ghg = dot(g, &hg);
    let (tau, boundary_hit) = if ghg <= T::zero() {
        (T::one(), true)
    } else {
        let t = gn * gn * gn / (model.radius * ghg);
        if t >= T::one() { (T::one(), true) } else { (t, false) }
    };
    let coef = -tau * model.radius / gn;
    let p = scaled(coef, g);
    // decrease along p = coef*g: -(coef ||g||^2 + coef^2/2 g'Hg)
    let dec = -(coef * gn * gn + lit::<T>(0.5) * coef * coef * ghg);
    Ok(QpStep { p, model_decrease: dec.max(T::zero()), boundary_hit, iterations: 1 })
}

/// Truncated conjugate gradient for the subproblem, starting from `p = 0`.
///
/// Exits on (a) residual below `rtol * ||g||`, (b) the iteration cap,
/// (c) negative curvature, or (d) an iterate leaving the region; in the last
/// two cases the step continues to the boundary along the current direction.
pub fn steihaug_toint<T: Scalar>(
    model: &QuadraticModel<'_, T>,
    rtol: T,
    max_iter: usize,
) -> Result<QpStep<T>, QpError> {
    steihaug_toint_traced(model, rtol, max_iter, |_| {})
}

/// `steihaug_toint` with a per-iterate callback, for inspecting the CG path.
pub fn steihaug_toint_traced<T: Scalar>(
    model: &QuadraticModel<'_, T>,
    rtol: T,
    max_iter: usize,
    mut on_iterate: impl FnMut(&[T]),
) -> Result<QpStep<T>, QpError> {
    let g = model.grad;
    let gn = norm(g);
    if gn == T::zero() {
        return Err(QpError::ZeroGradient);
    }
    assert!(max_iter >= 1, "steihaug_toint requires max_iter >= 1");
    let n = g.len();
    let mut p = vec![T::zero(); n];
    let mut r = g.to_vec();
    let mut d = scaled(-T::one(), g);
    let mut rr = dot(&r, &r);
    let mut boundary_hit = false;
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;
        let hd = model.hess.apply(&d);
        let dhd = dot(&d, &hd);
        if dhd <= T::zero() {
            let tau = boundary_tau(&p, &d, model.radius)?;
            p = add_scaled(&p, tau, &d);
            boundary_hit = true;
            on_iterate(&p);
            break;
        }
        let alpha = rr / dhd;
        let p_next = add_scaled(&p, alpha, &d);
        if norm(&p_next) >= model.radius {
            let tau = boundary_tau(&p, &d, model.radius)?;
            p = add_scaled(&p, tau, &d);
            boundary_hit = true;
            on_iterate(&p);
            break;
        }
        p = p_next;
        on_iterate(&p);
        r = add_scaled(&r, alpha, &hd);
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() <= rtol * gn {
            break;
        }
        let beta = rr_next / rr;
        rr = rr_next;
        d = add_scaled(&scaled(-T::one(), &r), beta, &d);
    }

    let model_decrease = model.decrease(&p);
    Ok(QpStep { p, model_decrease, boundary_hit, iterations })
}

/// Grid-plus-polish oracle for the subproblem, dimensions 1..=3 only.
///
/// Scans a dense grid of the ball, polishes the best grid points by
/// projected gradient descent, and also tries the unconstrained stationary
/// point when it is feasible. Returns the best candidate found.
pub fn brute_force_tr<T: Scalar>(
    model: &QuadraticModel<'_, T>,
    grid: usize,
) -> Result<QpStep<T>, QpError> {
    let n = model.grad.len();
    if n > 3 {
        return Err(QpError::DimensionTooLarge(n));
    }
    assert!(grid >= 2, "grid must have at least 2 points per axis");
    let radius = model.radius;

    // Dense Hessian by probing, for the polish step size and stationary point.
    let mut h = DenseMatrix::zeros(n);
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        let col = model.hess.apply(&e);
        for i in 0..n {
            h.set(i, j, col[i]);
        }
    }
    let mut frob = T::zero();
    for i in 0..n {
        for j in 0..n {
            frob += h.get(i, j) * h.get(i, j);
        }
    }
    let lipschitz = frob.sqrt();

    let mut evals = 0usize;
    let mut best: Vec<(T, Vec<T>)> = Vec::new(); // (decrease, point), best first
    let consider = |p: Vec<T>, dec: T, best: &mut Vec<(T, Vec<T>)>| {
        let pos = best.partition_point(|(d, _)| *d > dec);
        best.insert(pos, (dec, p));
        best.truncate(5);
    };

    consider(vec![T::zero(); n], T::zero(), &mut best);
    let steps = grid - 1;
    let axis: Vec<T> = (0..grid)
        .map(|k| -radius + lit::<T>(2.0 * k as f64 / steps as f64) * radius)
        .collect();
    let mut point = vec![T::zero(); n];
    let mut scan = |best: &mut Vec<(T, Vec<T>)>, evals: &mut usize| {
        let total = grid.pow(n as u32);
        for flat in 0..total {
            let mut rem = flat;
            for item in point.iter_mut() {
                *item = axis[rem % grid];
                rem /= grid;
            }
            if norm(&point) <= radius {
                *evals += 1;
                let dec = model.decrease(&point);
                consider(point.clone(), dec, best);
            }
        }
    };
    scan(&mut best, &mut evals);

    // Unconstrained stationary point H p = -g, feasible only.
    if let Some(p) = h.solve_symmetric(&scaled(-T::one(), model.grad)) {
        if norm(&p) <= radius {
            evals += 1;
            let dec = model.decrease(&p);
            consider(p, dec, &mut best);
        }
    }

    // Projected gradient polish from the leading candidates.
    let step = if lipschitz > T::zero() {
        T::one() / lipschitz
    } else {
        radius / norm(model.grad).max(T::min_positive_value())
    };
    let starts: Vec<Vec<T>> = best.iter().map(|(_, p)| p.clone()).collect();
    for start in starts {
        let mut p = start;
        for _ in 0..400 {
            let grad_m = add_scaled(model.grad, T::one(), &h.matvec(&p));
            let mut next = add_scaled(&p, -step, &grad_m);
            let nn = norm(&next);
            if nn > radius {
                let shrink = radius / nn;
                next = scaled(shrink, &next);
            }
            let moved = next.iter().zip(&p).map(|(&a, &b)| (a - b).abs()).fold(T::zero(), T::max);
            p = next;
            if moved <= lit::<T>(1e-16) * radius {
                break;
            }
        }
        evals += 1;
        let dec = model.decrease(&p);
        consider(p, dec, &mut best);
    }

    let (model_decrease, p) = best.swap_remove(0);
    let boundary_hit = norm(&p) >= radius * lit::<T>(1.0 - 1e-9);
    Ok(QpStep { p, model_decrease, boundary_hit, iterations: evals })
}
