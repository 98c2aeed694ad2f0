//! Maximum composite likelihood estimation.
//!
//! Damped Newton iterations on the score, with a Nelder–Mead simplex search
//! whenever the observed sensitivity is not positive definite or the line
//! search stalls. Convergence is declared on the score itself:
//! ‖cℓ_θ(θ̃)‖_∞ < tol · (1 + ‖cℓ_θ(init)‖_∞).

use std::cell::Cell;

use super::{composite_score, score_jacobian, CompositeLikelihood};
use crate::error::{Error, Result};
use crate::numkernel::linalg::{dot, max_abs};
use crate::numkernel::Matrix;

#[derive(Clone, Debug)]
pub struct McleOptions {
    /// Budget in evaluations: each objective value, score or score
    /// Jacobian counts once.
    pub max_evaluations: usize,
    pub tolerance: f64,
}

impl Default for McleOptions {
    fn default() -> Self {
        McleOptions {
            max_evaluations: 5000,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct McleFit {
    pub theta: Vec<f64>,
    pub score: Vec<f64>,
    pub logcl: f64,
    pub evaluations: usize,
}

pub fn solve_mcle<C: CompositeLikelihood + ?Sized>(
    cl: &C,
    data: &C::Data,
    init: &[f64],
) -> Result<Vec<f64>> {
    solve_mcle_with(cl, data, init, &McleOptions::default()).map(|f| f.theta)
}

pub fn solve_mcle_with<C: CompositeLikelihood + ?Sized>(
    cl: &C,
    data: &C::Data,
    init: &[f64],
    opts: &McleOptions,
) -> Result<McleFit> {
    if init.len() != cl.dim() {
        return Err(Error::Dimension {
            expected: cl.dim(),
            found: init.len(),
        });
    }
    if !cl.in_support(init) {
        return Err(Error::Domain(format!("initial value {init:?} outside the parameter space")));
    }
    let evals = Cell::new(0usize);
    let objective = |t: &[f64]| -> f64 {
        evals.set(evals.get() + 1);
        if !cl.in_support(t) {
            return f64::INFINITY;
        }
        let v = -cl.logcl(t, data);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let score = |t: &[f64]| -> Result<Vec<f64>> {
        evals.set(evals.get() + 1);
        composite_score(cl, t, data)
    };

    let mut x = init.to_vec();
    let mut fx = objective(&x);
    if !fx.is_finite() {
        return Err(Error::Domain(format!("composite log-likelihood not finite at {init:?}")));
    }
    let mut s = score(&x)?;
    let tol = opts.tolerance * (1.0 + max_abs(&s));
    let d = x.len();

    loop {
        if max_abs(&s) < tol {
            return Ok(McleFit {
                theta: x,
                score: s,
                logcl: -fx,
                evaluations: evals.get(),
            });
        }
        if evals.get() >= opts.max_evaluations {
            return Err(Error::Convergence {
                best: x,
                evaluations: evals.get(),
                score_norm: max_abs(&s),
            });
        }
        evals.set(evals.get() + 1);
        let step = score_jacobian(cl, &x, data)
            .ok()
            .and_then(|jac| newton_direction(&jac, &s));
        let mut moved = false;
        if let Some(dir) = step {
            // Armijo on −cℓ; near the optimum objective differences sink below
            // rounding, so a decrease of the score norm also counts.
            let slope = -dot(&s, &dir);
            let mut t = 1.0;
            for _ in 0..30 {
                let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
                let fc = objective(&cand);
                if fc.is_finite() {
                    let armijo = fc <= fx + 1e-4 * t * slope;
                    let flat = (fc - fx).abs() <= 1e-10 * (1.0 + fx.abs());
                    if armijo || flat {
                        if let Ok(sc) = score(&cand) {
                            if armijo || max_abs(&sc) < max_abs(&s) {
                                x = cand;
                                fx = fc;
                                s = sc;
                                moved = true;
                                break;
                            }
                        }
                    }
                }
                t *= 0.5;
            }
        }
        if !moved {
            let remaining = opts.max_evaluations.saturating_sub(evals.get());
            let budget = remaining.min(400 * d.max(1));
            if budget == 0 {
                continue;
            }
            let (xn, fnew) = nelder_mead(&objective, &x, budget);
            if fnew < fx {
                x = xn;
                fx = fnew;
            }
            s = score(&x)?;
        }
    }
}

/// Newton direction for maximizing cℓ: (−∇s)⁻¹ s, Levenberg-damped until
/// the negated Jacobian is positive definite.
fn newton_direction(jac: &Matrix, s: &[f64]) -> Option<Vec<f64>> {
    if !jac.is_finite() {
        return None;
    }
    let neg = jac.scale(-1.0).symmetrize();
    let diag: Vec<f64> = neg.diagonal().iter().map(|v| v.abs().max(1e-12)).collect();
    let mut mu = 0.0;
    for _ in 0..12 {
        let mut m = neg.clone();
        for (i, dv) in diag.iter().enumerate() {
            m[(i, i)] += mu * dv;
        }
        if let Ok(l) = m.cholesky() {
            let y = l.solve_lower(s).ok()?;
            return l.solve_lower_transpose(&y).ok();
        }
        mu = if mu == 0.0 { 1e-3 } else { mu * 10.0 };
    }
    None
}

/// Nelder–Mead minimization with dimension-adaptive coefficients. Returns
/// the best vertex and its value after at most `budget` evaluations.
pub fn nelder_mead(f: &impl Fn(&[f64]) -> f64, x0: &[f64], budget: usize) -> (Vec<f64>, f64) {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = if n > 1 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let used = Cell::new(0usize);
    let eval = |x: &[f64]| {
        used.set(used.get() + 1);
        f(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] = if v[i] != 0.0 { v[i] * 1.05 } else { 2.5e-4 };
        let fv = eval(&v);
        simplex.push((v, fv));
    }
    while used.get() < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = (worst - best).abs();
        let size = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= 1e-13 * (1.0 + best.abs()) && size <= 1e-10 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / nf)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(beta);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = along(gamma);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-gamma);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for vert in simplex.iter_mut().skip(1) {
            let shrunk: Vec<f64> = x_best
                .iter()
                .zip(&vert.0)
                .map(|(b, v)| b + delta * (v - b))
                .collect();
            let fs = eval(&shrunk);
            *vert = (shrunk, fs);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx)
}
