//! Step-size bounds for forward uniqueness, coefficients of the linearized
//! step operators at constant states, and the values of `eps^2` at which
//! those operators become singular.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ModeIndex};
use crate::linalg::BandMatrix;
use crate::schemes::SchemeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdFormula {
    Eps2,
    TwoEps2,
    Inf,
    Eps2OverMaxAii,
}

impl ThresholdFormula {
    pub fn tag(&self) -> &'static str {
        match self {
            ThresholdFormula::Eps2 => "EPS2",
            ThresholdFormula::TwoEps2 => "TWO_EPS2",
            ThresholdFormula::Inf => "INF",
            ThresholdFormula::Eps2OverMaxAii => "EPS2_OVER_MAX_AII",
        }
    }
}

impl fmt::Display for ThresholdFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityThreshold {
    pub scheme: SchemeKind,
    /// Largest step with a unique next state; `f64::INFINITY` when unbounded.
    pub dt_max: f64,
    pub formula: ThresholdFormula,
}

pub fn stability_threshold(kind: &SchemeKind, eps: f64) -> Result<StabilityThreshold> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Config(format!("eps must be positive, got {eps}")));
    }
    let e2 = eps * eps;
    let (dt_max, formula) = match kind {
        SchemeKind::BackwardEuler => (e2, ThresholdFormula::Eps2),
        SchemeKind::CrankNicolson => (2.0 * e2, ThresholdFormula::TwoEps2),
        SchemeKind::ModifiedCn => (f64::INFINITY, ThresholdFormula::Inf),
        SchemeKind::Dirk(tab) => (e2 / tab.max_diagonal(), ThresholdFormula::Eps2OverMaxAii),
    };
    Ok(StabilityThreshold {
        scheme: kind.clone(),
        dt_max,
        formula,
    })
}

/// Helmholtz coefficient `a` of the homogeneous linearized step equation
/// `-lap(psi) + a psi = 0` at next-step constant `c`. A nonnegative value
/// means only the zero solution exists.
///
/// `r` is the current constant (needed by MODCN only); `stage_a` is the
/// diagonal entry of the DIRK stage (required for DIRK).
pub fn uniqueness_coefficient(kind: &SchemeKind, c: f64, eps: f64, dt: f64, r: Option<f64>, stage_a: Option<f64>) -> Result<f64> {
    let e2 = eps * eps;
    match kind {
        SchemeKind::BackwardEuler => Ok(1.0 / dt + (3.0 * c * c - 1.0) / e2),
        SchemeKind::CrankNicolson => Ok(1.0 / dt + (3.0 * c * c - 1.0) / (2.0 * e2)),
        SchemeKind::ModifiedCn => {
            let r = r.ok_or_else(|| Error::Analysis("MODCN coefficient needs the current constant r".into()))?;
            Ok(1.0 / dt + (2.0 * c * c + (c + r) * (c + r)) / (4.0 * e2))
        }
        SchemeKind::Dirk(_) => {
            let a = stage_a.ok_or_else(|| Error::Analysis("DIRK coefficient needs the stage diagonal a_ii".into()))?;
            if !(a > 0.0) {
                return Err(Error::Analysis(format!("stage diagonal must be positive, got {a}")));
            }
            Ok(1.0 / (dt * a) + (3.0 * c * c - 1.0) / e2)
        }
    }
}

/// `eps^2` at which mode `k` bifurcates from constant `c`, or `None` when
/// `1 - 3c^2 <= 0` or the scheme never loses uniqueness (MODCN). DIRK uses
/// `stage_a`, defaulting to the tableau's largest diagonal entry.
pub fn bifurcation_epsilon_sq(kind: &SchemeKind, c: f64, dt: f64, k: &ModeIndex, stage_a: Option<f64>) -> Option<f64> {
    let num = 1.0 - 3.0 * c * c;
    if num <= 0.0 {
        return None;
    }
    let base = match kind {
        SchemeKind::BackwardEuler => 1.0 / dt,
        SchemeKind::CrankNicolson => 2.0 / dt,
        SchemeKind::ModifiedCn => return None,
        SchemeKind::Dirk(tab) => 1.0 / (dt * stage_a.unwrap_or_else(|| tab.max_diagonal())),
    };
    Some(num / (base + k.wavenumber_sq()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationPoint {
    pub eps_sq: f64,
    pub mode: ModeIndex,
    pub c: f64,
    pub scheme: String,
    pub eigenfunction: String,
    /// The mode's membership in the family is not settled for this scheme
    /// (the half-index `1/2` sine mode for Crank-Nicolson).
    pub ambiguous: bool,
}

/// All modes with `2 k_i` in `0..=2 max_k` whose bifurcating `eps^2` is at
/// least `eps_min^2`, largest first.
pub fn enumerate_bifurcations(kind: &SchemeKind, c: f64, dt: f64, eps_min: f64, max_k: u32, dim: usize) -> Result<Vec<BifurcationPoint>> {
    if !(eps_min > 0.0) {
        return Err(Error::Config(format!("eps_min must be positive, got {eps_min}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if !(1..=2).contains(&dim) {
        return Err(Error::Config(format!("dimension must be 1 or 2, got {dim}")));
    }
    let top = 2 * max_k;
    let mut out = Vec::new();
    let mut visit = |twice: Vec<u32>| {
        let mode = ModeIndex::from_twice(twice);
        if let Some(e2) = bifurcation_epsilon_sq(kind, c, dt, &mode, None) {
            if e2 >= eps_min * eps_min {
                let ambiguous = matches!(kind, SchemeKind::CrankNicolson) && mode.twice().contains(&1);
                out.push(BifurcationPoint {
                    eps_sq: e2,
                    eigenfunction: mode.descriptor(),
                    mode,
                    c,
                    scheme: kind.tag().to_string(),
                    ambiguous,
                });
            }
        }
    };
    if dim == 1 {
        (0..=top).for_each(|a| visit(vec![a]));
    } else {
        for a in 0..=top {
            for b in 0..=top {
                visit(vec![a, b]);
            }
        }
    }
    // stable sort keeps index order among ties
    out.sort_by(|x, y| y.eps_sq.partial_cmp(&x.eps_sq).expect("finite"));
    Ok(out)
}

/// Linearization of one step about constant states `r -> c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedProblem {
    pub scheme: String,
    pub c: f64,
    pub r: Option<f64>,
    pub coefficient: f64,
    /// Right-hand side `G` of the perturbation equation in terms of the
    /// next-step perturbation `f`.
    pub forcing: String,
}

impl LinearizedProblem {
    pub fn new(kind: &SchemeKind, c: f64, r: Option<f64>, eps: f64, dt: f64, stage_a: Option<f64>) -> Result<Self> {
        let coefficient = uniqueness_coefficient(kind, c, eps, dt, r, stage_a)?;
        let forcing = match kind {
            SchemeKind::BackwardEuler => "G = f/dt - lap(f) + (3c^2-1) f/eps^2",
            SchemeKind::CrankNicolson => "G = f/dt - lap(f)/2 + (3c^2-1) f/(2 eps^2)",
            SchemeKind::ModifiedCn => "G = f/dt - lap(f)/2 + (3c^2+r^2+2cr) f/(4 eps^2)",
            SchemeKind::Dirk(_) => "G = f/(dt a) - lap(f) + (3c^2-1) f/eps^2",
        };
        Ok(Self {
            scheme: kind.tag().to_string(),
            c,
            r,
            coefficient,
            forcing: forcing.to_string(),
        })
    }

    /// Discrete operator `-L_h + coefficient I` on `grid`.
    pub fn operator(&self, grid: &GridSpec) -> BandMatrix {
        discrete_operator(grid, self.coefficient)
    }
}

pub fn discrete_operator(grid: &GridSpec, coefficient: f64) -> BandMatrix {
    let mut m = grid.laplacian_matrix();
    m.scale(-1.0);
    m.shift_diagonal(coefficient);
    m
}

/// Eigenvalues of `-L_h + coefficient I`, computed after the trapezoid
/// similarity transform that makes the Neumann Laplacian symmetric.
pub fn discrete_spectrum(grid: &GridSpec, coefficient: f64) -> Vec<f64> {
    let a = discrete_operator(grid, coefficient).to_dense();
    let w: Vec<f64> = grid.trapezoid_weights();
    let n = w.len();
    let sym = DMatrix::from_fn(n, n, |i, j| a[(i, j)] * (w[i] / w[j]).sqrt());
    // average away rounding asymmetry before the symmetric solver
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    ev
}

/// Smallest eigenvalue magnitude of the discrete linearized operator at the
/// bifurcating `eps` of integer mode `k`.
pub fn bifurcation_defect(kind: &SchemeKind, c: f64, dt: f64, k: &ModeIndex, grid: &GridSpec, stage_a: Option<f64>) -> Result<f64> {
    if !k.all_integer() {
        return Err(Error::Analysis("discrete cross-check needs integer mode indices".into()));
    }
    let e2 = bifurcation_epsilon_sq(kind, c, dt, k, stage_a)
        .ok_or_else(|| Error::Analysis(format!("no bifurcation for {} at c = {c}", kind.tag())))?;
    let a = match kind {
        SchemeKind::Dirk(tab) => Some(stage_a.unwrap_or_else(|| tab.max_diagonal())),
        _ => stage_a,
    };
    let mut coef = uniqueness_coefficient(kind, c, e2.sqrt(), dt, Some(c), a)?;
    if matches!(kind, SchemeKind::CrankNicolson) {
        // the CN operator carries lap/2; rescale to -lap + 2a
        coef *= 2.0;
    }
    Ok(discrete_spectrum(grid, coef).iter().fold(f64::INFINITY, |m, v| m.min(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::tableau::ButcherTableau;

    #[test]
    fn thresholds() {
        let t = stability_threshold(&SchemeKind::BackwardEuler, 0.1).unwrap();
        assert_eq!(t.dt_max, 0.1 * 0.1);
        assert_eq!(t.formula, ThresholdFormula::Eps2);
        assert_eq!(stability_threshold(&SchemeKind::CrankNicolson, 0.1).unwrap().dt_max, 2.0 * 0.1 * 0.1);
        assert_eq!(stability_threshold(&SchemeKind::ModifiedCn, 0.3).unwrap().dt_max, f64::INFINITY);
        let d = stability_threshold(&SchemeKind::dirk2(), 0.1).unwrap().dt_max;
        assert!((d - 0.04).abs() < 1e-15);
        assert!(stability_threshold(&SchemeKind::BackwardEuler, 0.0).is_err());
    }

    #[test]
    fn coefficient_boundaries() {
        let e = 0.1;
        assert_eq!(uniqueness_coefficient(&SchemeKind::BackwardEuler, 0.0, e, e * e, None, None).unwrap(), 0.0);
        assert_eq!(uniqueness_coefficient(&SchemeKind::CrankNicolson, 0.0, e, 2.0 * e * e, None, None).unwrap(), 0.0);
        let m = uniqueness_coefficient(&SchemeKind::ModifiedCn, 1.0, e, 0.01, Some(1.0), None).unwrap();
        assert!((m - (100.0 + 6.0 / 0.04)).abs() < 1e-9);
        assert!(uniqueness_coefficient(&SchemeKind::ModifiedCn, 1.0, e, 0.01, None, None).is_err());
        assert!(uniqueness_coefficient(&SchemeKind::dirk2(), 1.0, e, 0.01, None, None).is_err());
        let a = 0.25;
        let v = uniqueness_coefficient(&SchemeKind::dirk2(), 0.0, e, e * e / a, None, Some(a)).unwrap();
        assert!(v.abs() < 1e-9);
    }

    #[test]
    fn bifurcation_values() {
        let k1 = ModeIndex::integer(&[1]);
        let pi2 = std::f64::consts::PI.powi(2);
        let be = bifurcation_epsilon_sq(&SchemeKind::BackwardEuler, 0.0, 1.0, &k1, None).unwrap();
        assert!((be - 1.0 / (1.0 + pi2)).abs() < 1e-15);
        assert!((be - 0.091999).abs() < 1e-6);
        let cn = bifurcation_epsilon_sq(&SchemeKind::CrankNicolson, 0.0, 1.0, &k1, None).unwrap();
        assert!((cn - 1.0 / (2.0 + pi2)).abs() < 1e-15);
        assert!((cn - 0.0842488).abs() < 1e-7);
        let c = 1.0 / 3f64.sqrt();
        assert!(bifurcation_epsilon_sq(&SchemeKind::BackwardEuler, c * (1.0 + 1e-15), 1.0, &k1, None).is_none());
        assert!(bifurcation_epsilon_sq(&SchemeKind::ModifiedCn, 0.0, 1.0, &k1, None).is_none());
    }

    #[test]
    fn dirk_with_unit_diagonal_is_be() {
        let tab = SchemeKind::Dirk(ButcherTableau::dirk2());
        for (c, dt, k) in [(0.0, 0.3, 1u32), (0.4, 2.0, 3), (-0.2, 0.01, 0)] {
            let m = ModeIndex::integer(&[k]);
            assert_eq!(
                bifurcation_epsilon_sq(&tab, c, dt, &m, Some(1.0)),
                bifurcation_epsilon_sq(&SchemeKind::BackwardEuler, c, dt, &m, None)
            );
            assert_eq!(
                uniqueness_coefficient(&tab, c, 0.1, dt, None, Some(1.0)).unwrap(),
                uniqueness_coefficient(&SchemeKind::BackwardEuler, c, 0.1, dt, None, None).unwrap()
            );
        }
    }

    #[test]
    fn enumeration_order() {
        assert!(enumerate_bifurcations(&SchemeKind::BackwardEuler, 0.6, 1.0, 0.01, 4, 1).unwrap().is_empty());
        let pts = enumerate_bifurcations(&SchemeKind::BackwardEuler, 0.0, 10.0, 0.05, 2, 1).unwrap();
        let ks: Vec<u32> = pts.iter().map(|p| p.mode.twice()[0]).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4]);
        assert!(pts.iter().all(|p| !p.ambiguous));
        assert_eq!(pts[1].eigenfunction, ModeIndex::from_twice(vec![1]).descriptor());

        let pts = enumerate_bifurcations(&SchemeKind::CrankNicolson, 0.0, 0.5, 1e-3, 1, 2).unwrap();
        assert_eq!(pts[0].mode.twice(), &[0, 0]);
        assert!((pts[0].eps_sq - 0.25).abs() < 1e-15);
        assert!(pts[1..].iter().all(|p| p.eps_sq < 0.25));
        assert!(pts.iter().any(|p| p.ambiguous));
    }

    #[test]
    fn discrete_defect_is_second_order() {
        for kind in [SchemeKind::BackwardEuler, SchemeKind::CrankNicolson, SchemeKind::dirk2()] {
            for k in [1u32, 2] {
                let m = ModeIndex::integer(&[k]);
                let d: Vec<f64> = [33usize, 65, 129]
                    .iter()
                    .map(|&n| bifurcation_defect(&kind, 0.0, 0.5, &m, &make_grid(1, n).unwrap(), None).unwrap())
                    .collect();
                for w in d.windows(2) {
                    let ratio = w[0] / w[1];
                    assert!((3.5..=4.5).contains(&ratio), "{kind} k={k}: {d:?}");
                }
            }
        }
    }
}
