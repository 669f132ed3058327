//! Small dense Newton solver with finite-difference Jacobians.

use nalgebra::{Const, DimMin, SMatrix, SVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Recompute the Jacobian only when the residual shrinks by less than
    /// this factor in one step.
    pub refresh_ratio: f64,
    pub fd_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 50,
            refresh_ratio: 0.25,
            fd_step: 1e-7,
        }
    }
}

pub(crate) fn fd_jacobian<const N: usize, F>(
    f: &mut F,
    x: &SVector<f64, N>,
    fx: &SVector<f64, N>,
    step: f64,
) -> Result<SMatrix<f64, N, N>>
where
    F: FnMut(&SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    let mut jac = SMatrix::<f64, N, N>::zeros();
    for k in 0..N {
        let h = step * x[k].abs().max(1.0);
        let mut xp = *x;
        xp[k] += h;
        let fp = match f(&xp) {
            Ok(v) => v,
            Err(_) => {
                // one-sided the other way when the forward probe leaves the domain
                let mut xm = *x;
                xm[k] -= h;
                let fm = f(&xm)?;
                jac.set_column(k, &((fx - fm) / h));
                continue;
            }
        };
        jac.set_column(k, &((fp - fx) / h));
    }
    Ok(jac)
}

/// Damped Newton iteration. `jac0`, when given, seeds the Jacobian (chord
/// steps until convergence stalls).
pub(crate) fn newton<const N: usize, F>(
    what: &'static str,
    mut f: F,
    x0: SVector<f64, N>,
    jac0: Option<SMatrix<f64, N, N>>,
    opts: NewtonOptions,
) -> Result<SVector<f64, N>>
where
    F: FnMut(&SVector<f64, N>) -> Result<SVector<f64, N>>,
    Const<N>: DimMin<Const<N>, Output = Const<N>>,
{
    let mut x = x0;
    let mut fx = f(&x)?;
    let mut norm = fx.amax();
    if norm <= opts.tol {
        return Ok(x);
    }
    let mut jac = match jac0 {
        Some(j) => j,
        None => fd_jacobian(&mut f, &x, &fx, opts.fd_step)?,
    };
    let mut fresh = jac0.is_none();
    for _ in 0..opts.max_iter {
        let Some(dx) = solve_dense(&jac, &(-fx)) else {
            if fresh {
                break;
            }
            jac = fd_jacobian(&mut f, &x, &fx, opts.fd_step)?;
            fresh = true;
            continue;
        };
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let xn = x + dx * lambda;
            if let Ok(fnew) = f(&xn) {
                let nn = fnew.amax();
                if nn.is_finite() && (nn < norm || nn <= opts.tol) {
                    accepted = Some((xn, fnew, nn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xn, fnew, nn)) => {
                let ratio = nn / norm;
                x = xn;
                fx = fnew;
                norm = nn;
                if norm <= opts.tol {
                    return Ok(x);
                }
                if ratio > opts.refresh_ratio {
                    jac = fd_jacobian(&mut f, &x, &fx, opts.fd_step)?;
                    fresh = true;
                } else {
                    fresh = false;
                }
            }
            None => {
                if fresh {
                    break;
                }
                jac = fd_jacobian(&mut f, &x, &fx, opts.fd_step)?;
                fresh = true;
            }
        }
    }
    Err(Error::NoConvergence {
        what,
        iterations: opts.max_iter,
        residual: norm,
    })
}

/// LU solve; `None` when `a` is singular relative to its largest entry.
pub(crate) fn solve_dense<const N: usize>(a: &SMatrix<f64, N, N>, b: &SVector<f64, N>) -> Option<SVector<f64, N>>
where
    Const<N>: DimMin<Const<N>, Output = Const<N>>,
{
    let scale = a.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let lu = a.lu();
    if lu.u().diagonal().iter().any(|d| !(d.abs() > 1e-14 * scale)) {
        return None;
    }
    lu.solve(b)
}

/// Scalar Newton with a finite-difference slope.
pub(crate) fn newton_scalar<F>(
    what: &'static str,
    mut f: F,
    x0: f64,
    slope0: Option<f64>,
    opts: NewtonOptions,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let x = newton::<1, _>(
        what,
        |x| Ok(SVector::<f64, 1>::new(f(x[0])?)),
        SVector::<f64, 1>::new(x0),
        slope0.map(SMatrix::<f64, 1, 1>::new),
        opts,
    )?;
    Ok(x[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_coupled_quadratics() {
        let x = newton::<2, _>(
            "test",
            |x| Ok(SVector::<f64, 2>::new(x[0] * x[0] + x[1] - 3.0, x[0] - x[1] * x[1] + 3.0)),
            SVector::<f64, 2>::new(1.5, 1.5),
            None,
            NewtonOptions::default(),
        )
        .unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reports_failure() {
        let r = newton_scalar("test", |x| Ok(x * x + 1.0), 0.3, None, NewtonOptions::default());
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }
}
