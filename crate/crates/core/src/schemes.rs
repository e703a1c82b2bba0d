//! One-step maps for backward Euler, Crank-Nicolson, the convex-splitting
//! modified Crank-Nicolson scheme and DIRK methods, plus their exact
//! reduction to spatially constant states.
//!
//! All residuals are written in increment form (the step equation multiplied
//! through by `dt`), so each reads `phi - ... = 0` in units of the field.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{ac_rhs_into, reaction, AcParams, GridSpec, ScalarField};
use crate::linalg::BandMatrix;
use crate::solver::{newton_scalar, newton_solve, real_cubic_roots, NewtonConfig, NewtonReport, NonlinearProblem};
use crate::tableau::ButcherTableau;

#[derive(Debug, Clone, PartialEq)]
pub enum SchemeKind {
    BackwardEuler,
    CrankNicolson,
    ModifiedCn,
    Dirk(ButcherTableau),
}

impl SchemeKind {
    pub fn dirk2() -> Self {
        SchemeKind::Dirk(ButcherTableau::dirk2())
    }

    pub fn all() -> [SchemeKind; 4] {
        [
            SchemeKind::BackwardEuler,
            SchemeKind::CrankNicolson,
            SchemeKind::ModifiedCn,
            SchemeKind::dirk2(),
        ]
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SchemeKind::BackwardEuler => "be",
            SchemeKind::CrankNicolson => "cn",
            SchemeKind::ModifiedCn => "modcn",
            SchemeKind::Dirk(t) if *t == ButcherTableau::dirk2() => "dirk2",
            SchemeKind::Dirk(_) => "dirk",
        }
    }

    /// Step size for a given ratio: `dt / eps^2` (BE), `dt / (2 eps^2)`
    /// (CN, MODCN), `dt / (4 eps^2)` (DIRK).
    pub fn ratio_denominator(&self) -> f64 {
        match self {
            SchemeKind::BackwardEuler => 1.0,
            SchemeKind::CrankNicolson | SchemeKind::ModifiedCn => 2.0,
            SchemeKind::Dirk(_) => 4.0,
        }
    }

    pub fn dt_from_ratio(&self, ratio: f64, eps: f64) -> f64 {
        ratio * self.ratio_denominator() * eps * eps
    }

    pub fn ratio(&self, p: &AcParams) -> f64 {
        p.dt / (self.ratio_denominator() * p.eps_sq())
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "be" => Ok(SchemeKind::BackwardEuler),
            "cn" => Ok(SchemeKind::CrankNicolson),
            "modcn" => Ok(SchemeKind::ModifiedCn),
            "dirk" | "dirk2" => Ok(SchemeKind::dirk2()),
            other => Err(Error::Config(format!("unknown scheme '{other}' (expected be, cn, modcn, dirk2)"))),
        }
    }
}

/// `u - theta F(u) - known = 0`. Covers a backward Euler step
/// (`theta = dt`), the implicit half of Crank-Nicolson (`theta = dt/2`), a
/// DIRK stage (`theta = dt a_ii`) and, with negative `theta`, the backward
/// problems solved for preimages.
#[derive(Debug, Clone)]
pub struct ImplicitStage {
    pub grid: GridSpec,
    pub theta: f64,
    pub eps_sq: f64,
    pub known: Vec<f64>,
}

impl NonlinearProblem for ImplicitStage {
    fn residual(&self, u: &[f64], out: &mut [f64]) {
        ac_rhs_into(&self.grid, u, self.eps_sq, out);
        for ((o, ui), k) in out.iter_mut().zip(u).zip(&self.known) {
            *o = ui - self.theta * *o - k;
        }
    }

    fn jacobian(&self, u: &[f64]) -> BandMatrix {
        let mut m = self.grid.laplacian_matrix();
        m.scale(-self.theta);
        let diag: Vec<f64> = u.iter().map(|v| 1.0 + self.theta * (3.0 * v * v - 1.0) / self.eps_sq).collect();
        m.add_diagonal(&diag);
        m
    }
}

/// Which time level of the modified Crank-Nicolson equation is unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unknown {
    Next,
    Previous,
}

/// Convex-splitting modified Crank-Nicolson equation
/// `next - prev - dt/2 (L next + L prev) + dt (next + prev)(next^2 + prev^2)/(4 eps^2) - dt prev/eps^2 = 0`,
/// solved for either time level.
#[derive(Debug, Clone)]
pub struct ModCnProblem {
    pub grid: GridSpec,
    pub dt: f64,
    pub eps_sq: f64,
    pub fixed: Vec<f64>,
    pub unknown: Unknown,
}

impl ModCnProblem {
    fn levels<'a>(&'a self, u: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        match self.unknown {
            Unknown::Next => (u, &self.fixed),
            Unknown::Previous => (&self.fixed, u),
        }
    }
}

impl NonlinearProblem for ModCnProblem {
    fn residual(&self, u: &[f64], out: &mut [f64]) {
        let (next, prev) = self.levels(u);
        let n = u.len();
        let sum: Vec<f64> = next.iter().zip(prev).map(|(a, b)| a + b).collect();
        crate::grid::laplacian_into(&self.grid, &sum, out);
        let k4 = self.dt / (4.0 * self.eps_sq);
        let k1 = self.dt / self.eps_sq;
        for i in 0..n {
            let (a, b) = (next[i], prev[i]);
            out[i] = a - b - 0.5 * self.dt * out[i] + k4 * (a + b) * (a * a + b * b) - k1 * b;
        }
    }

    fn jacobian(&self, u: &[f64]) -> BandMatrix {
        let (next, prev) = self.levels(u);
        let mut m = self.grid.laplacian_matrix();
        m.scale(-0.5 * self.dt);
        let k4 = self.dt / (4.0 * self.eps_sq);
        let k1 = self.dt / self.eps_sq;
        let diag: Vec<f64> = next
            .iter()
            .zip(prev)
            .map(|(&a, &b)| match self.unknown {
                Unknown::Next => 1.0 + k4 * (3.0 * a * a + b * b + 2.0 * a * b),
                Unknown::Previous => -1.0 + k4 * (a * a + 3.0 * b * b + 2.0 * a * b) - k1,
            })
            .collect();
        m.add_diagonal(&diag);
        m
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepReport {
    pub stages: Vec<NewtonReport>,
    pub success: bool,
}

impl StepReport {
    fn from_stages(stages: Vec<NewtonReport>) -> Self {
        let success = stages.iter().all(|s| s.converged);
        Self { stages, success }
    }

    pub fn failure(&self) -> Option<String> {
        self.stages.iter().find_map(|s| s.failure.clone())
    }
}

fn rhs(u: &[f64], grid: &GridSpec, eps_sq: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    ac_rhs_into(grid, u, eps_sq, &mut out);
    out
}

pub fn be_step(phi_n: &ScalarField, p: &AcParams, cfg: &NewtonConfig) -> (ScalarField, StepReport) {
    let problem = ImplicitStage {
        grid: *phi_n.grid(),
        theta: p.dt,
        eps_sq: p.eps_sq(),
        known: phi_n.values().to_vec(),
    };
    let (u, rep) = newton_solve(&problem, phi_n, cfg);
    (u, StepReport::from_stages(vec![rep]))
}

pub fn cn_step(phi_n: &ScalarField, p: &AcParams, cfg: &NewtonConfig) -> (ScalarField, StepReport) {
    let grid = *phi_n.grid();
    let half = 0.5 * p.dt;
    let f_n = rhs(phi_n.values(), &grid, p.eps_sq());
    let known = phi_n.values().iter().zip(&f_n).map(|(v, f)| v + half * f).collect();
    let problem = ImplicitStage {
        grid,
        theta: half,
        eps_sq: p.eps_sq(),
        known,
    };
    let (u, rep) = newton_solve(&problem, phi_n, cfg);
    (u, StepReport::from_stages(vec![rep]))
}

pub fn modcn_step(phi_n: &ScalarField, p: &AcParams, cfg: &NewtonConfig) -> (ScalarField, StepReport) {
    let problem = ModCnProblem {
        grid: *phi_n.grid(),
        dt: p.dt,
        eps_sq: p.eps_sq(),
        fixed: phi_n.values().to_vec(),
        unknown: Unknown::Next,
    };
    let (u, rep) = newton_solve(&problem, phi_n, cfg);
    (u, StepReport::from_stages(vec![rep]))
}

/// Stage values of one DIRK step, followed by the new state.
#[derive(Debug, Clone)]
pub struct DirkStages {
    pub stages: Vec<ScalarField>,
    pub next: ScalarField,
    pub report: StepReport,
}

pub fn dirk_stages(phi_n: &ScalarField, tab: &ButcherTableau, p: &AcParams, cfg: &NewtonConfig) -> DirkStages {
    let grid = *phi_n.grid();
    let eps_sq = p.eps_sq();
    let s = tab.stages();
    let mut stages: Vec<ScalarField> = Vec::with_capacity(s);
    let mut rhs_vals: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut reports = Vec::with_capacity(s);

    for i in 0..s {
        let mut known = phi_n.values().to_vec();
        for (j, f) in rhs_vals.iter().enumerate() {
            let w = p.dt * tab.a(i, j);
            if w != 0.0 {
                known.iter_mut().zip(f).for_each(|(k, fj)| *k += w * fj);
            }
        }
        let aii = tab.a(i, i);
        let stage = if aii == 0.0 {
            ScalarField::from_raw(grid, known)
        } else {
            let problem = ImplicitStage {
                grid,
                theta: p.dt * aii,
                eps_sq,
                known,
            };
            let guess = stages.last().unwrap_or(phi_n);
            let (u, rep) = newton_solve(&problem, guess, cfg);
            let ok = rep.converged;
            reports.push(rep);
            if !ok {
                return DirkStages {
                    stages,
                    next: u,
                    report: StepReport::from_stages(reports),
                };
            }
            u
        };
        rhs_vals.push(rhs(stage.values(), &grid, eps_sq));
        stages.push(stage);
    }

    let mut next = phi_n.values().to_vec();
    for (bi, f) in tab.b().iter().zip(&rhs_vals) {
        let w = p.dt * bi;
        next.iter_mut().zip(f).for_each(|(v, fi)| *v += w * fi);
    }
    DirkStages {
        stages,
        next: ScalarField::from_raw(grid, next),
        report: StepReport::from_stages(reports),
    }
}

pub fn dirk_step(phi_n: &ScalarField, tab: &ButcherTableau, p: &AcParams, cfg: &NewtonConfig) -> (ScalarField, StepReport) {
    let out = dirk_stages(phi_n, tab, p, cfg);
    (out.next, out.report)
}

pub fn step(kind: &SchemeKind, phi_n: &ScalarField, p: &AcParams, cfg: &NewtonConfig) -> (ScalarField, StepReport) {
    match kind {
        SchemeKind::BackwardEuler => be_step(phi_n, p, cfg),
        SchemeKind::CrankNicolson => cn_step(phi_n, p, cfg),
        SchemeKind::ModifiedCn => modcn_step(phi_n, p, cfg),
        SchemeKind::Dirk(tab) => dirk_step(phi_n, tab, p, cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSummary {
    pub step: usize,
    pub t: f64,
    pub min: f64,
    pub max: f64,
    pub center: f64,
    pub l2: f64,
}

impl StepSummary {
    fn of(step: usize, t: f64, u: &ScalarField) -> Self {
        Self {
            step,
            t,
            min: u.min(),
            max: u.max(),
            center: u.center_value(),
            l2: u.norm_l2(),
        }
    }

    /// `|phi - sign|_inf` from the extrema.
    pub fn distance_to(&self, sign: f64) -> f64 {
        (self.min - sign).abs().max((self.max - sign).abs())
    }
}

#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub settle_tol: f64,
    pub newton: NewtonConfig,
    pub keep_snapshots: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            settle_tol: 1e-3,
            newton: NewtonConfig::default(),
            keep_snapshots: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// One entry per recorded state, starting with the initial field.
    pub summaries: Vec<StepSummary>,
    pub snapshots: Option<Vec<ScalarField>>,
    pub final_state: ScalarField,
    pub settled: bool,
    /// First step from which every later state stays within the tolerance.
    pub settle_step: Option<usize>,
    /// +1 or -1 when settled, 0 otherwise.
    pub limit_sign: i8,
    pub failure: Option<String>,
}

impl Trajectory {
    /// Sign changes of the centre value between consecutive states.
    pub fn center_sign_changes(&self) -> usize {
        self.summaries
            .windows(2)
            .filter(|w| w[0].center.signum() != w[1].center.signum() && w[0].center != 0.0 && w[1].center != 0.0)
            .count()
    }

    pub fn center_signs(&self) -> Vec<i8> {
        self.summaries.iter().map(|s| sign_of(s.center)).collect()
    }
}

pub(crate) fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Index from which every entry of `dist` stays within `tol`.
pub(crate) fn settle_index(dist: &[f64], tol: f64) -> Option<usize> {
    if dist.last().map_or(true, |d| *d > tol) {
        return None;
    }
    let mut idx = dist.len() - 1;
    while idx > 0 && dist[idx - 1] <= tol {
        idx -= 1;
    }
    Some(idx)
}

pub fn simulate(kind: &SchemeKind, phi0: &ScalarField, steps: usize, p: &AcParams, cfg: &SimulateConfig) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::Config("simulate needs at least one step".into()));
    }
    if !(cfg.settle_tol > 0.0) {
        return Err(Error::Config("settle tolerance must be positive".into()));
    }
    cfg.newton.validate()?;

    let mut summaries = vec![StepSummary::of(0, 0.0, phi0)];
    let mut snapshots = cfg.keep_snapshots.then(|| vec![phi0.clone()]);
    let mut state = phi0.clone();
    let mut failure = None;
    for n in 1..=steps {
        let (next, rep) = step(kind, &state, p, &cfg.newton);
        if !rep.success {
            failure = Some(format!(
                "step {n}: {}",
                rep.failure().unwrap_or_else(|| "newton failure".into())
            ));
            break;
        }
        state = next;
        summaries.push(StepSummary::of(n, n as f64 * p.dt, &state));
        if let Some(s) = snapshots.as_mut() {
            s.push(state.clone());
        }
    }

    let (mut settled, mut settle_step, mut limit_sign) = (false, None, 0);
    for sign in [1.0, -1.0] {
        let dist: Vec<f64> = summaries.iter().map(|s| s.distance_to(sign)).collect();
        if let Some(idx) = settle_index(&dist, cfg.settle_tol) {
            settled = true;
            settle_step = Some(summaries[idx].step);
            limit_sign = sign as i8;
        }
    }
    Ok(Trajectory {
        summaries,
        snapshots,
        final_state: state,
        settled,
        settle_step,
        limit_sign,
        failure,
    })
}

/// One real image of a constant state under a step map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardImage {
    pub value: f64,
    /// The branch reached by Newton started from the current value.
    pub selected: bool,
}

/// Real roots of `u - theta F(u) - known = 0` for constant `u`.
pub(crate) fn stage_roots(theta: f64, eps_sq: f64, known: f64) -> Vec<f64> {
    if theta == 0.0 {
        return vec![known];
    }
    let q = theta / eps_sq;
    real_cubic_roots(q, 0.0, 1.0 - q, -known)
        .map(|r| r.distinct())
        .unwrap_or_default()
}

/// Newton on the constant stage equation.
pub(crate) fn stage_newton(theta: f64, eps_sq: f64, known: f64, guess: f64, cfg: &NewtonConfig) -> Option<f64> {
    if theta == 0.0 {
        return Some(known);
    }
    let q = theta / eps_sq;
    let (x, rep) = newton_scalar(
        |u| u + q * (u * u * u - u) - known,
        |u| 1.0 + q * (3.0 * u * u - 1.0),
        guess,
        cfg,
    );
    rep.converged.then_some(x)
}

fn dedupe(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        if out.last().map_or(true, |l| (x - l).abs() > 1e-9 * x.abs().max(1.0)) {
            out.push(x);
        }
    }
    out
}

fn modcn_forward_cubic(r: f64, p: &AcParams) -> [f64; 4] {
    // c^3 + r c^2 + (r^2 + 4 eps^2/dt) c + r^3 - (4 eps^2/dt) r - 4 r
    let k = 4.0 * p.eps_sq() / p.dt;
    [1.0, r, r * r + k, r * r * r - k * r - 4.0 * r]
}

fn dirk_images(tab: &ButcherTableau, r: f64, p: &AcParams) -> Vec<f64> {
    fn walk(tab: &ButcherTableau, r: f64, p: &AcParams, fs: &mut Vec<f64>, out: &mut Vec<f64>) {
        let i = fs.len();
        let eps_sq = p.eps_sq();
        if i == tab.stages() {
            out.push(r + p.dt * tab.b().iter().zip(fs.iter()).map(|(b, f)| b * f).sum::<f64>());
            return;
        }
        let known = r + p.dt * (0..i).map(|j| tab.a(i, j) * fs[j]).sum::<f64>();
        for u in stage_roots(p.dt * tab.a(i, i), eps_sq, known) {
            fs.push(reaction(u, eps_sq));
            walk(tab, r, p, fs, out);
            fs.pop();
        }
    }
    let mut out = Vec::new();
    walk(tab, r, p, &mut Vec::new(), &mut out);
    out
}

/// Image of the constant state `r` along the Newton-from-`r` branch.
pub fn scalar_step(kind: &SchemeKind, r: f64, p: &AcParams, cfg: &NewtonConfig) -> Option<f64> {
    let eps_sq = p.eps_sq();
    match kind {
        SchemeKind::BackwardEuler => stage_newton(p.dt, eps_sq, r, r, cfg),
        SchemeKind::CrankNicolson => {
            let half = 0.5 * p.dt;
            stage_newton(half, eps_sq, r + half * reaction(r, eps_sq), r, cfg)
        }
        SchemeKind::ModifiedCn => {
            let k4 = p.dt / (4.0 * eps_sq);
            let k1 = p.dt / eps_sq;
            let (x, rep) = newton_scalar(
                |c| c - r + k4 * (c + r) * (c * c + r * r) - k1 * r,
                |c| 1.0 + k4 * (3.0 * c * c + r * r + 2.0 * c * r),
                r,
                cfg,
            );
            rep.converged.then_some(x)
        }
        SchemeKind::Dirk(tab) => {
            let mut fs: Vec<f64> = Vec::with_capacity(tab.stages());
            let mut guess = r;
            for i in 0..tab.stages() {
                let known = r + p.dt * (0..i).map(|j| tab.a(i, j) * fs[j]).sum::<f64>();
                let u = stage_newton(p.dt * tab.a(i, i), eps_sq, known, guess, cfg)?;
                fs.push(reaction(u, eps_sq));
                guess = u;
            }
            Some(r + p.dt * tab.b().iter().zip(&fs).map(|(b, f)| b * f).sum::<f64>())
        }
    }
}

/// All real images of the constant state `r` under one step, with the
/// Newton-from-`r` branch marked.
pub fn scalar_map(kind: &SchemeKind, r: f64, p: &AcParams) -> Vec<ForwardImage> {
    let eps_sq = p.eps_sq();
    let images = match kind {
        SchemeKind::BackwardEuler => stage_roots(p.dt, eps_sq, r),
        SchemeKind::CrankNicolson => {
            let half = 0.5 * p.dt;
            stage_roots(half, eps_sq, r + half * reaction(r, eps_sq))
        }
        SchemeKind::ModifiedCn => {
            let [a3, a2, a1, a0] = modcn_forward_cubic(r, p);
            real_cubic_roots(a3, a2, a1, a0).map(|c| c.distinct()).unwrap_or_default()
        }
        SchemeKind::Dirk(tab) => dirk_images(tab, r, p),
    };
    let images = dedupe(images);
    let selected = scalar_step(kind, r, p, &NewtonConfig::default());
    let pick = selected.and_then(|s| {
        images
            .iter()
            .enumerate()
            .map(|(i, v)| (i, (v - s).abs()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"))
            .filter(|(_, d)| *d <= 1e-7 * s.abs().max(1.0))
            .map(|(i, _)| i)
    });
    images
        .into_iter()
        .enumerate()
        .map(|(i, value)| ForwardImage {
            value,
            selected: Some(i) == pick,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn params(eps: f64, dt: f64) -> AcParams {
        AcParams::new(eps, dt).unwrap()
    }

    const ROOT: f64 = 0.6823278038280193; // c^3 + c - 1 = 0

    #[test]
    fn steady_states_are_fixed() {
        let g = make_grid(1, 33).unwrap();
        let p = params(0.1, 0.01);
        let cfg = NewtonConfig::default();
        for kind in SchemeKind::all() {
            for c in [1.0, -1.0, 0.0] {
                let phi = ScalarField::constant(g, c);
                let (u, rep) = step(&kind, &phi, &p, &cfg);
                assert!(rep.success);
                assert!(rep.stages.iter().all(|s| s.iterations == 0), "{kind} at {c}");
                assert_eq!(u, phi);
            }
        }
    }

    #[test]
    fn be_scalar_cubic() {
        let g = make_grid(1, 33).unwrap();
        let p = params(0.1, 0.005);
        let (u, rep) = be_step(&ScalarField::constant(g, 0.5), &p, &NewtonConfig::default());
        assert!(rep.success);
        assert!(u.values().iter().all(|v| (v - ROOT).abs() < 1e-9));
        let imgs = scalar_map(&SchemeKind::BackwardEuler, 0.5, &p);
        assert_eq!(imgs.len(), 1);
        assert!(imgs[0].selected && (imgs[0].value - ROOT).abs() < 1e-12);
    }

    #[test]
    fn be_from_fig2_initial_moves_toward_one() {
        let g = make_grid(1, 33).unwrap();
        let p = params(0.1, 0.005);
        let (u, _) = be_step(&ScalarField::constant(g, 1.9931), &p, &NewtonConfig::default());
        let v = u.center_value();
        assert!(v > 1.0 && v < 1.9931);
    }

    #[test]
    fn cn_sign_flip() {
        let g = make_grid(1, 33).unwrap();
        let p = params(0.1, 0.01);
        let (u, rep) = cn_step(&ScalarField::constant(g, 1.99310), &p, &NewtonConfig::default());
        assert!(rep.success);
        assert!((u.center_value() + 0.984375).abs() < 1e-3);
        let imgs = scalar_map(&SchemeKind::CrankNicolson, 1.99310, &p);
        assert_eq!(imgs.len(), 1);
        assert!(imgs[0].selected);
        assert!((imgs[0].value + 0.984375).abs() < 1e-3);

        let (u, _) = cn_step(&ScalarField::constant(g, 0.5), &p, &NewtonConfig::default());
        let v = u.center_value();
        assert!(v > 0.5 && v <= 1.0, "{v}");
    }

    #[test]
    fn modcn_closed_form_to_zero() {
        let g = make_grid(1, 33).unwrap();
        let p = params(0.1, 0.01);
        let r1 = 2.0 * (1.0_f64 + 0.01 / 0.01).sqrt();
        let (u, rep) = modcn_step(&ScalarField::constant(g, r1), &p, &NewtonConfig::default());
        assert!(rep.success);
        assert!(u.norm_inf() < 1e-9, "{}", u.norm_inf());
        let imgs = scalar_map(&SchemeKind::ModifiedCn, 0.0, &p);
        assert_eq!(imgs, vec![ForwardImage { value: 0.0, selected: true }]);
    }

    #[test]
    fn dirk_sign_flip_and_stage_identity() {
        let g = make_grid(1, 33).unwrap();
        let p = params(0.1, 0.01);
        let tab = ButcherTableau::dirk2();
        let phi = ScalarField::constant(g, 7.0);
        let out = dirk_stages(&phi, &tab, &p, &NewtonConfig::default());
        assert!(out.report.success);
        assert!(out.next.max() < 0.0);

        let phi = ScalarField::from_fn(g, |x| 0.4 * (std::f64::consts::PI * x[0]).cos() + 0.1);
        let out = dirk_stages(&phi, &tab, &p, &NewtonConfig::default());
        let f2 = crate::grid::ac_rhs(&out.stages[1], &p);
        let ident = out.stages[1].lin_comb(1.0, &f2, p.dt / 4.0);
        assert!(ident.dist_inf(&out.next) <= 1e-10);
    }

    #[test]
    fn odd_symmetry() {
        let g = make_grid(1, 33).unwrap();
        let p = params(0.1, 0.01);
        let phi = ScalarField::from_fn(g, |x| 0.7 * x[0] + 0.2 * (3.0 * x[0]).cos());
        let neg = phi.map(|v| -v);
        for kind in SchemeKind::all() {
            let (a, _) = step(&kind, &phi, &p, &NewtonConfig::default());
            let (b, _) = step(&kind, &neg, &p, &NewtonConfig::default());
            assert!(a.lin_comb(1.0, &b, 1.0).norm_inf() <= 1e-10, "{kind}");
        }
    }

    #[test]
    fn unique_images_in_stable_regimes() {
        let p = params(0.1, 0.01); // CN and DIRK2 stable, BE not
        for r in [-3.0, -0.7, 0.2, 1.5, 7.0] {
            for kind in [SchemeKind::CrankNicolson, SchemeKind::ModifiedCn, SchemeKind::dirk2()] {
                let imgs = scalar_map(&kind, r, &p);
                assert_eq!(imgs.len(), 1, "{kind} r={r}: {imgs:?}");
                assert!(imgs[0].selected);
            }
        }
        // BE at dt = 3 eps^2 from r = 0 has three images
        let p = params(0.1, 0.03);
        let imgs = scalar_map(&SchemeKind::BackwardEuler, 0.0, &p);
        assert_eq!(imgs.len(), 3);
        assert_eq!(imgs.iter().filter(|i| i.selected).count(), 1);
        assert!(imgs.iter().find(|i| i.selected).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn scheme_tags() {
        for kind in SchemeKind::all() {
            assert_eq!(kind.tag().parse::<SchemeKind>().unwrap(), kind);
        }
        assert!("rk4".parse::<SchemeKind>().is_err());
        let p = params(0.1, 0.01);
        assert!((SchemeKind::CrankNicolson.ratio(&p) - 0.5).abs() < 1e-14);
        assert!((SchemeKind::dirk2().ratio(&p) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn settle_index_rules() {
        assert_eq!(settle_index(&[1.0, 0.5, 1e-4, 1e-5], 1e-3), Some(2));
        assert_eq!(settle_index(&[1e-4, 0.5, 1e-4], 1e-3), Some(2));
        assert_eq!(settle_index(&[1e-4, 0.5], 1e-3), None);
    }
}
