use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{norm_inf, ScalarField};
use crate::linalg::{solve_banded, BandMatrix};

/// A square nonlinear system `R(u) = 0` with a banded Jacobian.
pub trait NonlinearProblem {
    fn residual(&self, u: &[f64], out: &mut [f64]);
    fn jacobian(&self, u: &[f64]) -> BandMatrix;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Residual threshold, relative to `max(1, |u|_inf)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Backtracking factor in (0, 1]; 1 disables line search.
    pub damping: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            damping: 1.0,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("newton tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("newton max_iter must be at least 1".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }

    /// Absolute residual threshold at iterate `u`.
    pub fn threshold(&self, u: &[f64]) -> f64 {
        self.tol * norm_inf(u).max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub history: Vec<f64>,
    pub failure: Option<String>,
}

impl NewtonReport {
    fn failed(mut self, why: impl Into<String>) -> Self {
        self.converged = false;
        self.failure = Some(why.into());
        self
    }
}

/// Newton's method on raw vectors.
pub fn newton_raw<P: NonlinearProblem + ?Sized>(problem: &P, guess: &[f64], cfg: &NewtonConfig) -> (Vec<f64>, NewtonReport) {
    let n = guess.len();
    let mut u = guess.to_vec();
    let mut r = vec![0.0; n];
    let mut report = NewtonReport::default();

    problem.residual(&u, &mut r);
    let mut rnorm = norm_inf(&r);
    report.history.push(rnorm);
    report.residual = rnorm;

    loop {
        if !rnorm.is_finite() {
            return (u, report.failed("non-finite residual"));
        }
        if rnorm <= cfg.threshold(&u) {
            report.converged = true;
            return (u, report);
        }
        if report.iterations >= cfg.max_iter {
            return (u, report.failed(format!("no convergence after {} iterations", cfg.max_iter)));
        }
        let jac = problem.jacobian(&u);
        let du = match solve_banded(&jac, &r) {
            Ok(du) => du,
            Err(e) => return (u, report.failed(e.to_string())),
        };
        report.iterations += 1;

        let mut step = 1.0;
        let mut trial = vec![0.0; n];
        let mut rtrial = vec![0.0; n];
        loop {
            for i in 0..n {
                trial[i] = u[i] - step * du[i];
            }
            problem.residual(&trial, &mut rtrial);
            let tn = norm_inf(&rtrial);
            if cfg.damping >= 1.0 || (tn.is_finite() && tn < rnorm) || step < 1e-8 {
                break;
            }
            step *= cfg.damping;
        }
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut r, &mut rtrial);
        rnorm = norm_inf(&r);
        report.history.push(rnorm);
        report.residual = rnorm;
    }
}

/// Solves `residual(u) = 0` starting from `guess`.
pub fn newton_solve<P: NonlinearProblem + ?Sized>(problem: &P, guess: &ScalarField, cfg: &NewtonConfig) -> (ScalarField, NewtonReport) {
    let (u, rep) = newton_raw(problem, guess.values(), cfg);
    (ScalarField::from_raw(*guess.grid(), u), rep)
}

/// Scalar Newton iteration; convergence uses the same relative criterion as
/// the field solver.
pub fn newton_scalar(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, x0: f64, cfg: &NewtonConfig) -> (f64, NewtonReport) {
    let mut x = x0;
    let mut report = NewtonReport::default();
    let mut fx = f(x);
    report.history.push(fx.abs());
    loop {
        report.residual = fx.abs();
        if !fx.is_finite() {
            return (x, report.failed("non-finite residual"));
        }
        if fx.abs() <= cfg.tol * x.abs().max(1.0) {
            report.converged = true;
            return (x, report);
        }
        if report.iterations >= cfg.max_iter {
            return (x, report.failed(format!("no convergence after {} iterations", cfg.max_iter)));
        }
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            return (x, report.failed("zero derivative"));
        }
        let dx = fx / d;
        let mut step = 1.0;
        let mut xt;
        let mut ft;
        loop {
            xt = x - step * dx;
            ft = f(xt);
            if cfg.damping >= 1.0 || (ft.is_finite() && ft.abs() < fx.abs()) || step < 1e-8 {
                break;
            }
            step *= cfg.damping;
        }
        report.iterations += 1;
        x = xt;
        fx = ft;
        report.history.push(fx.abs());
    }
}

/// Default finite-difference increment `1e-6 (1 + |u|_inf)`.
pub fn default_fd_step(u: &[f64]) -> f64 {
    1e-6 * (1.0 + norm_inf(u))
}

/// Dense central-difference Jacobian of `residual` at `u`.
pub fn fd_jacobian(residual: impl Fn(&[f64], &mut [f64]), u: &[f64], h: f64) -> DMatrix<f64> {
    let n = u.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut up = u.to_vec();
    let mut rp = vec![0.0; n];
    let mut rm = vec![0.0; n];
    for j in 0..n {
        up[j] = u[j] + h;
        residual(&up, &mut rp);
        up[j] = u[j] - h;
        residual(&up, &mut rm);
        up[j] = u[j];
        for i in 0..n {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    jac
}
