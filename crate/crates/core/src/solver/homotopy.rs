//! Natural-parameter continuation in the perturbation amplitude.

use crate::error::{Error, Result};
use crate::grid::ScalarField;

use super::newton::{newton_solve, NewtonConfig, NewtonReport, NonlinearProblem};

/// Maximum consecutive halvings of a failed continuation step.
pub const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomotopyConfig {
    pub delta_start: f64,
    pub delta_end: f64,
    pub steps: usize,
    pub adaptive: bool,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        Self {
            delta_start: 0.001,
            delta_end: 0.5,
            steps: 32,
            adaptive: true,
        }
    }
}

impl HomotopyConfig {
    pub fn new(delta_start: f64, delta_end: f64) -> Self {
        Self {
            delta_start,
            delta_end,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta_start.is_finite() || !self.delta_end.is_finite() {
            return Err(Error::Config("homotopy endpoints must be finite".into()));
        }
        if self.steps == 0 {
            return Err(Error::Config("homotopy needs at least one step".into()));
        }
        Ok(())
    }

    /// Amplitude at schedule position `t` in [0, 1]: geometric between
    /// same-signed nonzero endpoints, linear otherwise.
    pub fn delta_at(&self, t: f64) -> f64 {
        let (a, b) = (self.delta_start, self.delta_end);
        if t <= 0.0 {
            return a;
        }
        if t >= 1.0 {
            return b;
        }
        if a != 0.0 && b != 0.0 && a.signum() == b.signum() {
            a * (b / a).powf(t)
        } else {
            a + (b - a) * t
        }
    }
}

#[derive(Debug, Clone)]
pub struct HomotopyOutcome<S> {
    /// Solution at the last amplitude that converged (the seed if none did).
    pub state: S,
    /// Report of the final Newton solve attempted.
    pub report: NewtonReport,
    pub last_good_delta: Option<f64>,
    pub completed: bool,
    pub solves: usize,
}

/// Drives `solve(delta, warm_start)` along the schedule. `solve` returns the
/// new state and its Newton report; a non-converged report triggers step
/// halving when `adaptive` is on.
pub fn continuation<S: Clone>(
    cfg: &HomotopyConfig,
    seed: S,
    mut solve: impl FnMut(f64, &S) -> (S, NewtonReport),
) -> HomotopyOutcome<S> {
    let mut solves = 1;
    let (first, rep) = solve(cfg.delta_start, &seed);
    if !rep.converged {
        return HomotopyOutcome {
            state: seed,
            report: rep,
            last_good_delta: None,
            completed: false,
            solves,
        };
    }
    let mut state = first;
    let mut last = rep;
    let mut t_cur = 0.0_f64;
    for node in 1..=cfg.steps {
        let t_node = node as f64 / cfg.steps as f64;
        let mut halvings = 0;
        while t_cur < t_node {
            let h = (t_node - t_cur) / f64::powi(2.0, halvings as i32);
            let t_try = if halvings == 0 { t_node } else { t_cur + h };
            let (next, rep) = solve(cfg.delta_at(t_try), &state);
            solves += 1;
            if rep.converged {
                state = next;
                last = rep;
                t_cur = t_try;
                halvings = 0;
            } else if cfg.adaptive && halvings < MAX_HALVINGS {
                halvings += 1;
            } else {
                return HomotopyOutcome {
                    state,
                    report: rep,
                    last_good_delta: Some(cfg.delta_at(t_cur)),
                    completed: false,
                    solves,
                };
            }
        }
    }
    HomotopyOutcome {
        state,
        report: last,
        last_good_delta: Some(cfg.delta_end),
        completed: true,
        solves,
    }
}

/// Continuation of a delta-parameterised family of field problems,
/// warm-starting each Newton solve from the previous solution.
pub fn homotopy_path<P, F>(family: F, seed: &ScalarField, hcfg: &HomotopyConfig, ncfg: &NewtonConfig) -> HomotopyOutcome<ScalarField>
where
    P: NonlinearProblem,
    F: Fn(f64) -> P,
{
    continuation(hcfg, seed.clone(), |delta, warm| newton_solve(&family(delta), warm, ncfg))
}
