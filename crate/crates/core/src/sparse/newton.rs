use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{norm2, DenseLu};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonSettings {
    /// Absolute tolerance on the residual 2-norm.
    pub abs_tol: f64,
    /// Tolerance relative to the initial residual norm.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Differencing step is `fd_epsilon * (1 + |x_j|)`.
    pub fd_epsilon: f64,
    pub max_halvings: usize,
    /// Keep the factorized Jacobian across iterations and time steps while
    /// it still yields fast contraction.
    pub jacobian_reuse: bool,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            abs_tol: 1e-11,
            rel_tol: 1e-12,
            max_iter: 50,
            fd_epsilon: 1e-7,
            max_halvings: 8,
            jacobian_reuse: true,
        }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || !(self.fd_epsilon > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("solver.max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub initial_residual: f64,
    pub jacobians: usize,
}

/// Newton iteration with a forward-difference Jacobian, optionally reusing
/// the factorization between calls.
pub struct NewtonSolver {
    settings: NewtonSettings,
    lu: Option<DenseLu>,
}

/// Contraction factor above which a reused Jacobian is refreshed.
const REFRESH_RATIO: f64 = 0.25;

impl NewtonSolver {
    pub fn new(settings: NewtonSettings) -> Self {
        NewtonSolver { settings, lu: None }
    }

    pub fn settings(&self) -> &NewtonSettings {
        &self.settings
    }

    /// Drops any cached factorization.
    pub fn invalidate(&mut self) {
        self.lu = None;
    }

    /// Solves `f(x) = 0` starting from `x0`. The residual callback writes
    /// into its second argument and may reject an iterate by returning an
    /// error, which triggers step halving.
    pub fn solve<F>(&mut self, mut f: F, x0: Vec<f64>) -> Result<NewtonOutcome>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        let s = self.settings.clone();
        let n = x0.len();
        let mut x = x0;
        let mut r = vec![0.0; n];
        f(&x, &mut r)?;
        let mut rn = norm2(&r);
        if !rn.is_finite() {
            return Err(Error::InvalidIterate("non-finite initial residual".into()));
        }
        let r0 = rn;
        let target = s.abs_tol.max(s.rel_tol * r0);
        let mut jacobians = 0;
        if rn <= target {
            return Ok(NewtonOutcome {
                x,
                iterations: 0,
                residual: rn,
                initial_residual: r0,
                jacobians,
            });
        }
        if !s.jacobian_reuse {
            self.lu = None;
        }

        let mut xt = vec![0.0; n];
        let mut rt = vec![0.0; n];
        for it in 1..=s.max_iter {
            let fresh = self.lu.is_none();
            if fresh {
                let jac = fd_jacobian(&mut f, &x, &r, s.fd_epsilon)?;
                self.lu = Some(DenseLu::new(&jac)?);
                jacobians += 1;
            }
            let dx = self.lu.as_ref().unwrap().solve(&r);

            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..=s.max_halvings {
                for i in 0..n {
                    xt[i] = x[i] - t * dx[i];
                }
                if f(&xt, &mut rt).is_ok() {
                    let rtn = norm2(&rt);
                    if rtn.is_finite() && rtn < rn {
                        accepted = Some(rtn);
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some(rtn) = accepted else {
                if fresh {
                    return Err(Error::NonConvergence {
                        iterations: it,
                        residual: rn,
                        best: x,
                    });
                }
                log::debug!("line search failed with a reused Jacobian; refreshing");
                self.lu = None;
                continue;
            };
            let ratio = rtn / rn;
            std::mem::swap(&mut x, &mut xt);
            std::mem::swap(&mut r, &mut rt);
            rn = rtn;
            log::trace!("newton iteration {it}: |r| = {rn:.3e} (step {t})");
            if rn <= target {
                if !s.jacobian_reuse {
                    self.lu = None;
                }
                return Ok(NewtonOutcome {
                    x,
                    iterations: it,
                    residual: rn,
                    initial_residual: r0,
                    jacobians,
                });
            }
            if !s.jacobian_reuse || ratio > REFRESH_RATIO {
                self.lu = None;
            }
        }
        Err(Error::NonConvergence {
            iterations: s.max_iter,
            residual: rn,
            best: x,
        })
    }
}

fn fd_jacobian<F>(f: &mut F, x: &[f64], r: &[f64], eps: f64) -> Result<Mat<f64>>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = x.len();
    let mut jac = Mat::zeros(n, n);
    let mut xp = x.to_vec();
    let mut rp = vec![0.0; n];
    for j in 0..n {
        let h = eps * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let (h, ok) = match f(&xp, &mut rp) {
            Ok(()) => (h, true),
            Err(_) => {
                xp[j] = x[j] - h;
                (-h, f(&xp, &mut rp).is_ok())
            }
        };
        if !ok {
            return Err(Error::InvalidIterate(format!(
                "residual undefined near the current iterate (column {j})"
            )));
        }
        for i in 0..n {
            jac[(i, j)] = (rp[i] - r[i]) / h;
        }
        xp[j] = x[j];
    }
    Ok(jac)
}

/// Plain Newton iteration (fresh Jacobian every iteration).
pub fn newton_solve<F>(f: F, x0: Vec<f64>, settings: &NewtonSettings) -> Result<NewtonOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let settings = NewtonSettings {
        jacobian_reuse: false,
        ..settings.clone()
    };
    NewtonSolver::new(settings).solve(f, x0)
}
