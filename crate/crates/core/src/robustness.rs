//! Backward analysis: which states a scheme maps onto a given one.
//!
//! For spatially constant targets the preimage problem reduces to cubics
//! (a chain of cubics for the two-stage DIRK array). Repeating the backward
//! step from zero yields the thresholds `r_i` (and `s_i` for DIRK) that
//! partition constant initial data by the sign of the limit. Perturbed
//! targets `c + delta f` are handled on the grid by continuation in `delta`,
//! seeded with the linearized gain of the perturbation.

use crate::error::{Error, Result};
use crate::grid::{ac_rhs_into, reaction, AcParams, ModeIndex, ScalarField};
use crate::schemes::{self, settle_index, sign_of, ImplicitStage, ModCnProblem, SchemeKind, Unknown};
use crate::solver::{continuation, newton_scalar, newton_solve, real_cubic_roots, HomotopyConfig, NewtonConfig, NewtonReport};
use crate::tableau::ButcherTableau;

/// Distinct-root tolerance across the DIRK root tree.
pub const DEDUPE_TOL: f64 = 1e-8;

/// Discriminant record of one cubic solved while building a preimage set.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSolve {
    pub stage: String,
    pub target: f64,
    pub discriminant: f64,
    pub discriminant_sign: i8,
}

/// One preimage with the intermediate stage constants that produced it
/// (`[phi_1, phi_2]` for DIRK, empty otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct PreimageBranch {
    pub r: f64,
    pub stages: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreimageSet {
    pub scheme: String,
    pub target: f64,
    /// Ascending; repeated cubic roots are listed with multiplicity.
    pub roots: Vec<f64>,
    pub branches: Vec<PreimageBranch>,
    pub cubics: Vec<CubicSolve>,
}

impl PreimageSet {
    pub fn distinct_roots(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.r).collect()
    }

    /// Branch with the largest `|r|`.
    pub fn outermost(&self) -> Option<&PreimageBranch> {
        self.branches.iter().max_by(|a, b| a.r.abs().partial_cmp(&b.r.abs()).expect("finite"))
    }

    pub fn branch_near(&self, r: f64) -> Option<&PreimageBranch> {
        self.branches
            .iter()
            .min_by(|a, b| (a.r - r).abs().partial_cmp(&(b.r - r).abs()).expect("finite"))
    }
}

fn solve_cubic(stage: &str, target: f64, coeffs: [f64; 4], log: &mut Vec<CubicSolve>) -> Result<Vec<f64>> {
    let roots = real_cubic_roots(coeffs[0], coeffs[1], coeffs[2], coeffs[3])?;
    log.push(CubicSolve {
        stage: stage.to_string(),
        target,
        discriminant: roots.discriminant,
        discriminant_sign: roots.discriminant_sign,
    });
    Ok(roots.real_roots)
}

/// Roots of `u - theta F(u) - known = 0` for constant `u`, logging the cubic.
fn stage_cubic(stage: &str, theta: f64, eps_sq: f64, known: f64, log: &mut Vec<CubicSolve>) -> Result<Vec<f64>> {
    if theta == 0.0 {
        return Ok(vec![known]);
    }
    let q = theta / eps_sq;
    let roots = solve_cubic(stage, known, [q, 0.0, 1.0 - q, -known], log)?;
    Ok(dedupe(roots, 1e-12))
}

fn dedupe(mut v: Vec<f64>, tol: f64) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    v.dedup_by(|a, b| (*a - *b).abs() <= tol * a.abs().max(1.0));
    v
}

/// Coefficients `(theta_2, theta_1)` of the backward chain of a two-stage
/// tableau with `b_1 = a_21`: `next = phi_2 - theta_2 F(phi_2)` and
/// `phi_2 - dt a_22 F(phi_2) = phi_1 - theta_1 F(phi_1)`.
fn chain_thetas(tab: &ButcherTableau, dt: f64) -> (f64, f64) {
    (-dt * (tab.b()[1] - tab.a(1, 1)), -dt * (tab.a(1, 0) - tab.a(0, 0)))
}

fn cn_preimage_cubic(c: f64, p: &AcParams) -> [f64; 4] {
    let q = p.dt / (2.0 * p.eps_sq());
    [q, 0.0, -1.0 - q, c + q * (c * c * c - c)]
}

fn modcn_preimage_cubic(c: f64, p: &AcParams) -> [f64; 4] {
    let k = 4.0 * p.eps_sq() / p.dt;
    [1.0, c, c * c - k - 4.0, c * c * c + k * c]
}

/// All real constant states mapped onto the constant `c` by one step.
pub fn preimage_constants(kind: &SchemeKind, c: f64, p: &AcParams) -> Result<PreimageSet> {
    let eps_sq = p.eps_sq();
    let mut cubics = Vec::new();
    let (roots, branches) = match kind {
        SchemeKind::BackwardEuler => {
            let r = c - p.dt * reaction(c, eps_sq);
            (vec![r], vec![PreimageBranch { r, stages: vec![] }])
        }
        SchemeKind::CrankNicolson | SchemeKind::ModifiedCn => {
            let coeffs = if matches!(kind, SchemeKind::CrankNicolson) {
                cn_preimage_cubic(c, p)
            } else {
                modcn_preimage_cubic(c, p)
            };
            let roots = solve_cubic("r", c, coeffs, &mut cubics)?;
            let branches = dedupe(roots.clone(), 1e-12)
                .into_iter()
                .map(|r| PreimageBranch { r, stages: vec![] })
                .collect();
            (roots, branches)
        }
        SchemeKind::Dirk(tab) if tab.is_chainable() => {
            let (th2, th1) = chain_thetas(tab, p.dt);
            let mut raw = Vec::new();
            for phi2 in stage_cubic("phi2", th2, eps_sq, c, &mut cubics)? {
                let known = phi2 - p.dt * tab.a(1, 1) * reaction(phi2, eps_sq);
                for phi1 in stage_cubic("phi1", th1, eps_sq, known, &mut cubics)? {
                    let r = phi1 - p.dt * tab.a(0, 0) * reaction(phi1, eps_sq);
                    raw.push(PreimageBranch { r, stages: vec![phi1, phi2] });
                }
            }
            raw.sort_by(|a, b| a.r.partial_cmp(&b.r).expect("finite"));
            raw.dedup_by(|a, b| (a.r - b.r).abs() <= DEDUPE_TOL * a.r.abs().max(1.0));
            (raw.iter().map(|b| b.r).collect(), raw)
        }
        SchemeKind::Dirk(_) => {
            // no enumeration: follow the branch continuous with r = c
            let cfg = NewtonConfig::default();
            let fwd = |r: f64| schemes::scalar_step(kind, r, p, &cfg).unwrap_or(f64::NAN);
            let (r, rep) = newton_scalar(
                |r| fwd(r) - c,
                |r| {
                    let h = 1e-6 * r.abs().max(1.0);
                    (fwd(r + h) - fwd(r - h)) / (2.0 * h)
                },
                c,
                &cfg,
            );
            if !rep.converged {
                return Err(Error::Solver(format!("scalar preimage of {c}: {}", rep.failure.unwrap_or_default())));
            }
            (vec![r], vec![PreimageBranch { r, stages: vec![] }])
        }
    };
    Ok(PreimageSet {
        scheme: kind.tag().to_string(),
        target: c,
        roots,
        branches,
        cubics,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSequence {
    pub scheme: String,
    pub ratio: f64,
    pub r: Vec<f64>,
    /// DIRK only.
    pub s: Vec<f64>,
}

impl IntervalSequence {
    /// `[r_1, r_2, ...]`, or `[r_1, s_1, r_2, s_2, ...]` for DIRK.
    pub fn entries(&self) -> Vec<f64> {
        if self.s.is_empty() {
            return self.r.clone();
        }
        self.r.iter().zip(&self.s).flat_map(|(a, b)| [*a, *b]).collect()
    }

    /// Sign of the limit for a constant start in each interval between
    /// consecutive entries, starting with `(0, entries[0])`.
    pub fn labels(&self) -> Vec<i8> {
        (0..self.entries().len()).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect()
    }
}

/// Parameters realising a ratio; the sequences depend on the ratio alone.
pub fn params_for_ratio(kind: &SchemeKind, ratio: f64) -> Result<AcParams> {
    AcParams::new(1.0, kind.dt_from_ratio(ratio, 1.0))
}

fn unique_root(kind: &SchemeKind, set: &PreimageSet) -> Result<f64> {
    let bad = set.cubics.iter().find(|c| c.discriminant_sign != -1);
    let single = set.branches.len() == 1;
    match (kind, bad) {
        (SchemeKind::Dirk(_), _) if single => Ok(set.branches[0].r),
        (SchemeKind::CrankNicolson | SchemeKind::ModifiedCn, None) if single => Ok(set.branches[0].r),
        _ => Err(Error::Analysis(format!(
            "{} preimage of {} is not unique: roots {:?}, discriminants {:?}",
            kind.tag(),
            set.target,
            set.roots,
            set.cubics.iter().map(|c| c.discriminant_sign).collect::<Vec<_>>()
        ))),
    }
}

/// Interval thresholds at the given ratio (`dt/(2 eps^2)` for CN and MODCN,
/// `dt/(4 eps^2)` for DIRK), `count` entries per family.
pub fn interval_sequence(kind: &SchemeKind, ratio: f64, count: usize) -> Result<IntervalSequence> {
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::Config(format!("ratio must be positive, got {ratio}")));
    }
    if count == 0 {
        return Err(Error::Config("count must be at least 1".into()));
    }
    let p = params_for_ratio(kind, ratio)?;
    let (mut r, mut s) = (Vec::with_capacity(count), Vec::new());
    match kind {
        SchemeKind::BackwardEuler => return Err(Error::Config("interval sequences exist for cn, modcn and dirk2 only".into())),
        SchemeKind::CrankNicolson => {
            r.push((1.0 + 1.0 / ratio).sqrt());
            while r.len() < count {
                let prev = *r.last().expect("nonempty");
                let set = preimage_constants(kind, -prev, &p)?;
                r.push(unique_root(kind, &set)?.abs());
            }
        }
        SchemeKind::ModifiedCn => {
            r.push(2.0 * (1.0 + 1.0 / (2.0 * ratio)).sqrt());
            while r.len() < count {
                let prev = *r.last().expect("nonempty");
                let set = preimage_constants(kind, prev, &p)?;
                r.push(unique_root(kind, &set)?.abs());
            }
        }
        SchemeKind::Dirk(tab) => {
            if !tab.is_chainable() {
                return Err(Error::Analysis("interval sequences need a chainable two-stage tableau".into()));
            }
            let zero = preimage_constants(kind, 0.0, &p)?;
            let pos: Vec<f64> = zero.distinct_roots().into_iter().filter(|v| *v > DEDUPE_TOL).collect();
            if zero.branches.len() != 5 || pos.len() != 2 {
                return Err(Error::Analysis(format!("expected five preimages of zero, found {:?}", zero.roots)));
            }
            r.push(pos[0]);
            s.push(pos[1]);
            while r.len() < count {
                let (pr, ps) = (*r.last().expect("nonempty"), *s.last().expect("nonempty"));
                r.push(unique_root(kind, &preimage_constants(kind, pr, &p)?)?.abs());
                s.push(unique_root(kind, &preimage_constants(kind, ps, &p)?)?.abs());
            }
        }
    }
    Ok(IntervalSequence {
        scheme: kind.tag().to_string(),
        ratio,
        r,
        s,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationResult {
    pub r: f64,
    /// Values after each step.
    pub values: Vec<f64>,
    /// Sign after each step.
    pub signs: Vec<i8>,
    /// First step from which the value stays within the settle tolerance.
    pub settle_step: Option<usize>,
    pub limit_sign: i8,
    pub failure: Option<String>,
}

impl ClassificationResult {
    pub fn sign_changes(&self) -> usize {
        let mut prev = sign_of(self.r);
        let mut n = 0;
        for &s in &self.signs {
            if s != 0 && prev != 0 && s != prev {
                n += 1;
            }
            if s != 0 {
                prev = s;
            }
        }
        n
    }
}

/// Iterates the Newton-from-current branch of the constant step map.
pub fn classify_constant_initial(kind: &SchemeKind, r: f64, p: &AcParams, max_steps: usize, settle_tol: f64) -> Result<ClassificationResult> {
    if max_steps == 0 {
        return Err(Error::Config("max_steps must be at least 1".into()));
    }
    if !(settle_tol > 0.0) {
        return Err(Error::Config("settle tolerance must be positive".into()));
    }
    let cfg = NewtonConfig::default();
    let mut values = Vec::with_capacity(max_steps);
    let mut cur = r;
    let mut failure = None;
    for n in 1..=max_steps {
        match schemes::scalar_step(kind, cur, p, &cfg) {
            Some(v) => {
                values.push(v);
                cur = v;
            }
            None => {
                failure = Some(format!("step {n}: scalar newton failed from {cur}"));
                break;
            }
        }
    }
    let states: Vec<f64> = std::iter::once(r).chain(values.iter().copied()).collect();
    let (mut settle_step, mut limit_sign) = (None, 0);
    for sign in [1.0, -1.0] {
        let dist: Vec<f64> = states.iter().map(|v| (v - sign).abs()).collect();
        if let Some(idx) = settle_index(&dist, settle_tol) {
            settle_step = Some(idx);
            limit_sign = sign as i8;
        }
    }
    Ok(ClassificationResult {
        r,
        signs: values.iter().map(|v| sign_of(*v)).collect(),
        values,
        settle_step,
        limit_sign,
        failure,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum GainValue {
    Scalar(f64),
    /// `(B_2, B_1, B_0)` for the two DIRK stages and the initial state.
    Staged([f64; 3]),
    /// A denominator vanished; names the factor.
    Pole(String),
}

impl GainValue {
    /// Gain of the unknown initial state (`B` or `B_0`).
    pub fn initial(&self) -> Option<f64> {
        match self {
            GainValue::Scalar(b) => Some(*b),
            GainValue::Staged(g) => Some(g[2]),
            GainValue::Pole(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationGain {
    pub scheme: String,
    pub c: f64,
    pub r: f64,
    pub mode: ModeIndex,
    pub gain: GainValue,
}

const POLE_TOL: f64 = 1e-14;

fn ratio_or_pole(num: f64, den: f64, scale: f64, what: &str) -> std::result::Result<f64, String> {
    if den.abs() <= POLE_TOL * scale.max(1.0) {
        Err(format!("{what} denominator vanishes"))
    } else {
        Ok(num / den)
    }
}

/// Gain `B` such that `r + delta B f` maps to `c + delta f` to first order in
/// `delta`, for a mode `f` with `-lap f = m f`.
pub fn perturbation_gain(kind: &SchemeKind, c: f64, r: f64, k: &ModeIndex, p: &AcParams) -> Result<PerturbationGain> {
    let m = k.wavenumber_sq();
    let (e2, dt) = (p.eps_sq(), p.dt);
    let gain = match kind {
        SchemeKind::BackwardEuler => GainValue::Scalar(1.0 + dt * m + dt * (3.0 * c * c - 1.0) / e2),
        SchemeKind::CrankNicolson => {
            let num = 2.0 / dt + m + (3.0 * c * c - 1.0) / e2;
            let den = m - 2.0 / dt + (3.0 * r * r - 1.0) / e2;
            let scale = m + 2.0 / dt + (3.0 * r * r + 1.0) / e2;
            ratio_or_pole(-num, den, scale, "B").map_or_else(GainValue::Pole, GainValue::Scalar)
        }
        SchemeKind::ModifiedCn => {
            let num = (3.0 * c * c + r * r + 2.0 * c * r) / (2.0 * e2) + 2.0 / dt + m;
            let den = (3.0 * r * r + c * c + 2.0 * c * r - 4.0) / (2.0 * e2) - 2.0 / dt + m;
            let scale = (3.0 * r * r + c * c + 2.0 * (c * r).abs() + 4.0) / (2.0 * e2) + 2.0 / dt + m;
            ratio_or_pole(-num, den, scale, "B").map_or_else(GainValue::Pole, GainValue::Scalar)
        }
        SchemeKind::Dirk(_) => {
            return Err(Error::Config("DIRK gains need the stage constants; use dirk_perturbation_gains".into()));
        }
    };
    Ok(PerturbationGain {
        scheme: kind.tag().to_string(),
        c,
        r,
        mode: k.clone(),
        gain,
    })
}

/// Stagewise gains of the two-stage array for stage constants `c2`, `c1`
/// (from the chain behind a preimage of `c`).
pub fn dirk_perturbation_gains(c2: f64, c1: f64, k: &ModeIndex, p: &AcParams) -> PerturbationGain {
    let m = k.wavenumber_sq();
    let q = p.dt / (4.0 * p.eps_sq());
    let lin = |v: f64| p.dt * m / 4.0 + q * (3.0 * v * v - 1.0);
    let scale = |v: f64| p.dt * m / 4.0 + q * (3.0 * v * v + 1.0) + 1.0;
    let gain = ratio_or_pole(1.0, 1.0 - lin(c2), scale(c2), "B2")
        .and_then(|b2| Ok((b2, ratio_or_pole(b2 * (1.0 + lin(c2)), 1.0 - lin(c1), scale(c1), "B1")?)))
        .map(|(b2, b1)| [b2, b1, b1 * (1.0 + lin(c1))])
        .map_or_else(GainValue::Pole, GainValue::Staged);
    PerturbationGain {
        scheme: "dirk2".into(),
        c: c2 - p.dt / 4.0 * reaction(c2, p.eps_sq()),
        r: c1 - p.dt / 4.0 * reaction(c1, p.eps_sq()),
        mode: k.clone(),
        gain,
    }
}

/// Constant part and gain of every unknown level of a preimage solve,
/// outermost first: one level for BE/CN/MODCN, `[phi_2, phi_1]` for DIRK.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSeed {
    pub levels: Vec<(f64, f64)>,
    /// Gain of the initial state itself (`B`, or `B_0` for DIRK).
    pub initial_gain: f64,
}

impl GainSeed {
    /// Seed around the preimage branch nearest `r` of constant `c`, for a
    /// target perturbed by mode `k`.
    pub fn for_branch(kind: &SchemeKind, c: f64, r: f64, k: &ModeIndex, p: &AcParams) -> Result<Self> {
        let set = preimage_constants(kind, c, p)?;
        let branch = set
            .branch_near(r)
            .ok_or_else(|| Error::Analysis(format!("no real preimage of {c}")))?
            .clone();
        let pole = |g: &GainValue| match g {
            GainValue::Pole(why) => Err(Error::Analysis(format!("gain pole: {why}"))),
            _ => Ok(()),
        };
        match kind {
            SchemeKind::Dirk(tab) if tab.is_chainable() => {
                let (c1, c2) = (branch.stages[0], branch.stages[1]);
                let g = dirk_perturbation_gains(c2, c1, k, p);
                pole(&g.gain)?;
                let GainValue::Staged([b2, b1, b0]) = g.gain else { unreachable!() };
                Ok(Self {
                    levels: vec![(c2, b2), (c1, b1)],
                    initial_gain: b0,
                })
            }
            SchemeKind::Dirk(_) => Err(Error::Analysis("field preimages need a chainable two-stage tableau".into())),
            _ => {
                let g = perturbation_gain(kind, c, branch.r, k, p)?;
                pole(&g.gain)?;
                let b = g.gain.initial().expect("finite gain");
                Ok(Self {
                    levels: vec![(branch.r, b)],
                    initial_gain: b,
                })
            }
        }
    }

    /// The identity seed `phi = target`, suitable for BE.
    pub fn identity(c: f64) -> Self {
        Self {
            levels: vec![(c, 1.0)],
            initial_gain: 1.0,
        }
    }

    pub fn fields(&self, profile: &ScalarField, delta: f64) -> Vec<ScalarField> {
        self.levels
            .iter()
            .map(|&(r, b)| profile.map(|f| r + delta * b * f))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct PreimageOutcome {
    pub field: ScalarField,
    pub report: NewtonReport,
    pub delta: f64,
    pub completed: bool,
    pub last_good_delta: Option<f64>,
    pub solves: usize,
    /// `|step(field) - (c + delta f)|_inf`.
    pub forward_residual: f64,
}

fn rhs(u: &ScalarField, eps_sq: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.values().len()];
    ac_rhs_into(u.grid(), u.values(), eps_sq, &mut out);
    out
}

/// Solves `u - theta F(u) = known(delta)` style backward problems for the
/// target `c + delta profile`, continuing in `delta` over `hcfg`.
pub fn preimage_field(
    kind: &SchemeKind,
    c: f64,
    profile: &ScalarField,
    seed: &GainSeed,
    p: &AcParams,
    hcfg: &HomotopyConfig,
    ncfg: &NewtonConfig,
) -> Result<PreimageOutcome> {
    hcfg.validate()?;
    ncfg.validate()?;
    let grid = *profile.grid();
    let eps_sq = p.eps_sq();
    let target = |delta: f64| profile.map(|f| c + delta * f);

    let levels = match kind {
        SchemeKind::Dirk(tab) if tab.is_chainable() => 2,
        SchemeKind::Dirk(_) => return Err(Error::Analysis("field preimages need a chainable two-stage tableau".into())),
        _ => 1,
    };
    if seed.levels.len() != levels {
        return Err(Error::Config(format!("{} preimage seed needs {levels} level(s), got {}", kind.tag(), seed.levels.len())));
    }

    let solve = |delta: f64, warm: &Vec<ScalarField>| -> (Vec<ScalarField>, NewtonReport) {
        let t = target(delta);
        match kind {
            SchemeKind::BackwardEuler | SchemeKind::CrankNicolson => {
                let (theta, w) = if matches!(kind, SchemeKind::BackwardEuler) {
                    (0.0, p.dt)
                } else {
                    (-0.5 * p.dt, 0.5 * p.dt)
                };
                let known = t.values().iter().zip(rhs(&t, eps_sq)).map(|(v, f)| v - w * f).collect();
                let prob = ImplicitStage { grid, theta, eps_sq, known };
                let (u, rep) = newton_solve(&prob, &warm[0], ncfg);
                (vec![u], rep)
            }
            SchemeKind::ModifiedCn => {
                let prob = ModCnProblem {
                    grid,
                    dt: p.dt,
                    eps_sq,
                    fixed: t.values().to_vec(),
                    unknown: Unknown::Previous,
                };
                let (u, rep) = newton_solve(&prob, &warm[0], ncfg);
                (vec![u], rep)
            }
            SchemeKind::Dirk(tab) => {
                let (th2, th1) = chain_thetas(tab, p.dt);
                let prob2 = ImplicitStage {
                    grid,
                    theta: th2,
                    eps_sq,
                    known: t.values().to_vec(),
                };
                let (phi2, rep2) = newton_solve(&prob2, &warm[0], ncfg);
                if !rep2.converged {
                    return (warm.clone(), rep2);
                }
                let w = p.dt * tab.a(1, 1);
                let known = phi2.values().iter().zip(rhs(&phi2, eps_sq)).map(|(v, f)| v - w * f).collect();
                let prob1 = ImplicitStage {
                    grid,
                    theta: th1,
                    eps_sq,
                    known,
                };
                let (phi1, rep1) = newton_solve(&prob1, &warm[1], ncfg);
                (vec![phi2, phi1], rep1)
            }
        }
    };

    let out = continuation(hcfg, seed.fields(profile, hcfg.delta_start), solve);
    let delta = out.last_good_delta.unwrap_or(hcfg.delta_start);
    let field = match kind {
        SchemeKind::Dirk(tab) => {
            let phi1 = &out.state[1];
            let w = p.dt * tab.a(0, 0);
            let vals = phi1.values().iter().zip(rhs(phi1, eps_sq)).map(|(v, f)| v - w * f).collect();
            ScalarField::new(grid, vals)?
        }
        _ => out.state[0].clone(),
    };
    let check_cfg = NewtonConfig {
        tol: ncfg.tol.min(1e-13),
        ..*ncfg
    };
    let (fwd, rep) = schemes::step(kind, &field, p, &check_cfg);
    let forward_residual = if rep.success || rep.stages.iter().all(|s| s.residual.is_finite()) {
        fwd.dist_inf(&target(delta))
    } else {
        f64::INFINITY
    };
    Ok(PreimageOutcome {
        field,
        report: out.report,
        delta,
        completed: out.completed,
        last_good_delta: out.last_good_delta,
        solves: out.solves,
        forward_residual,
    })
}

/// Preimage of a target that is a single mode around a constant.
pub fn mode_preimage(
    kind: &SchemeKind,
    c: f64,
    r: f64,
    k: &ModeIndex,
    profile: &ScalarField,
    p: &AcParams,
    hcfg: &HomotopyConfig,
    ncfg: &NewtonConfig,
) -> Result<PreimageOutcome> {
    let seed = GainSeed::for_branch(kind, c, r, k, p)?;
    preimage_field(kind, c, profile, &seed, p, hcfg, ncfg)
}

/// Forward images of a constant that Newton can reach, used by round-trip
/// checks: all real roots of the forward polynomial.
pub fn forward_roots(kind: &SchemeKind, r: f64, p: &AcParams) -> Vec<f64> {
    schemes::scalar_map(kind, r, p).into_iter().map(|i| i.value).collect()
}
