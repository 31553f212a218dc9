//! Newton-type minimizer with backtracking line search, used by the
//! ordinal-regression fitter.
//!
//! The Hessian is formed by central finite differences of the analytic
//! gradient and solved by damped Cholesky; if no useful Newton direction
//! exists the step falls back to steepest descent. Accepted iterates are
//! strictly non-increasing in objective value (Armijo condition).

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum OptimStatus {
    /// Gradient or relative-decrease tolerance met.
    Converged,
    /// Iteration cap reached; best-so-far point returned.
    MaxIter,
    /// Line search could not find a decrease.
    Stalled,
    /// A coordinate crossed the parameter bound (separation).
    BoundExceeded,
}

#[derive(Debug, Clone)]
pub(crate) struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub status: OptimStatus,
    /// Objective at the start plus after every accepted step.
    pub trace: Vec<f64>,
}

pub(crate) struct OptimOptions {
    pub max_iter: usize,
    pub tol_grad: f64,
    pub tol_nll: f64,
    pub param_bound: f64,
}

pub(crate) fn minimize<F, G>(f: F, grad: G, x0: Vec<f64>, opts: &OptimOptions) -> OptimResult
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let dim = x0.len();
    let mut x = x0;
    let mut fx = f(&x);
    let mut trace = vec![fx];
    let mut iterations = 0;

    if dim == 0 {
        return OptimResult {
            x,
            value: fx,
            iterations,
            status: OptimStatus::Converged,
            trace,
        };
    }

    let status = loop {
        let g = grad(&x);
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm <= opts.tol_grad {
            break OptimStatus::Converged;
        }
        if iterations >= opts.max_iter {
            break OptimStatus::MaxIter;
        }
        iterations += 1;

        let h = fd_hessian(&grad, &x);
        let mut dir = newton_direction(&h, &g).unwrap_or_else(|| g.iter().map(|v| -v).collect());
        let mut slope: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        if !slope.is_finite() || slope >= 0.0 {
            dir = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }

        let mut accepted = false;
        let mut t = 1.0;
        for _ in 0..MAX_BACKTRACKS {
            let xt: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let ft = f(&xt);
            if ft.is_finite() && ft <= fx + ARMIJO_C1 * t * slope {
                let decrease = fx - ft;
                x = xt;
                fx = ft;
                trace.push(fx);
                accepted = true;
                if x.iter().any(|v| v.abs() > opts.param_bound) {
                    return OptimResult {
                        x,
                        value: fx,
                        iterations,
                        status: OptimStatus::BoundExceeded,
                        trace,
                    };
                }
                if decrease <= opts.tol_nll * (1.0 + fx.abs()) {
                    return OptimResult {
                        x,
                        value: fx,
                        iterations,
                        status: OptimStatus::Converged,
                        trace,
                    };
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break OptimStatus::Stalled;
        }
    };

    OptimResult {
        x,
        value: fx,
        iterations,
        status,
        trace,
    }
}

/// Central finite differences of the gradient, symmetrized.
#[allow(clippy::needless_range_loop)]
fn fd_hessian<G>(grad: &G, x: &[f64]) -> Vec<Vec<f64>>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let dim = x.len();
    let mut h = vec![vec![0.0; dim]; dim];
    let mut xp = x.to_vec();
    for j in 0..dim {
        let step = 6e-6 * x[j].abs().max(1.0);
        xp[j] = x[j] + step;
        let gp = grad(&xp);
        xp[j] = x[j] - step;
        let gm = grad(&xp);
        xp[j] = x[j];
        for i in 0..dim {
            h[i][j] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    for i in 0..dim {
        for j in 0..i {
            let avg = 0.5 * (h[i][j] + h[j][i]);
            h[i][j] = avg;
            h[j][i] = avg;
        }
    }
    h
}

/// Solve (H + lambda I) d = -g with escalating damping; None if no finite
/// descent direction is found.
fn newton_direction(h: &[Vec<f64>], g: &[f64]) -> Option<Vec<f64>> {
    let dim = g.len();
    let scale = (0..dim)
        .map(|i| h[i][i].abs())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
    for damp in [0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2] {
        let lambda = damp * scale;
        let mut hd = h.to_vec();
        for (i, row) in hd.iter_mut().enumerate() {
            row[i] += lambda;
        }
        if let Some(d) = cholesky_solve(&hd, &rhs) {
            let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
            if slope.is_finite() && slope < 0.0 && d.iter().all(|v| v.is_finite()) {
                return Some(d);
            }
        }
    }
    None
}

/// Solve A x = b for symmetric positive-definite A; None if factorization fails.
#[allow(clippy::needless_range_loop)]
fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if !sum.is_finite() || sum <= 0.0 {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    // L y = b, then L^T x = y
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        // A = [[4,2],[2,3]], b = [2,5] -> x = [-0.5, 2]
        let a = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let x = cholesky_solve(&a, &[2.0, 5.0]).unwrap();
        assert!((x[0] + 0.5).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        // not positive definite
        let bad = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(cholesky_solve(&bad, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn minimizes_shifted_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2);
        let g = |x: &[f64]| vec![2.0 * (x[0] - 3.0), 4.0 * (x[1] + 1.0)];
        let opts = OptimOptions {
            max_iter: 100,
            tol_grad: 1e-10,
            tol_nll: 1e-14,
            param_bound: 50.0,
        };
        let r = minimize(f, g, vec![0.0, 0.0], &opts);
        assert_eq!(r.status, OptimStatus::Converged);
        assert!((r.x[0] - 3.0).abs() < 1e-8 && (r.x[1] + 1.0).abs() < 1e-8);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn minimizes_rosenbrock_like_nonconvex() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 10.0 * (x[1] - x[0] * x[0]).powi(2);
        let g = |x: &[f64]| {
            vec![
                -2.0 * (1.0 - x[0]) - 40.0 * x[0] * (x[1] - x[0] * x[0]),
                20.0 * (x[1] - x[0] * x[0]),
            ]
        };
        let opts = OptimOptions {
            max_iter: 200,
            tol_grad: 1e-9,
            tol_nll: 1e-16,
            param_bound: 50.0,
        };
        let r = minimize(f, g, vec![-1.2, 1.0], &opts);
        assert_eq!(r.status, OptimStatus::Converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reports_bound_crossing() {
        // unbounded below along x: drives past the bound
        let f = |x: &[f64]| -x[0];
        let g = |_: &[f64]| vec![-1.0];
        let opts = OptimOptions {
            max_iter: 500,
            tol_grad: 1e-10,
            tol_nll: 1e-16,
            param_bound: 10.0,
        };
        let r = minimize(f, g, vec![0.0], &opts);
        assert_eq!(r.status, OptimStatus::BoundExceeded);
        assert!(r.x[0] > 10.0);
    }
}
