use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use acstab_core::grid::{eval_mode, make_grid, AcParams, GridSpec, ModeIndex, ScalarField};
use acstab_core::robustness::{
    dirk_perturbation_gains, interval_sequence, params_for_ratio, perturbation_gain, preimage_constants, GainValue,
};
use acstab_core::schemes::{scalar_map, step, ImplicitStage, ModCnProblem, SchemeKind, Unknown};
use acstab_core::solver::{default_fd_step, fd_jacobian, newton_solve, NewtonConfig, NonlinearProblem};
use acstab_core::stability::{bifurcation_epsilon_sq, stability_threshold};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_field(g: GridSpec, rng: &mut ChaCha8Rng, amp: f64) -> ScalarField {
    let a: [f64; 3] = [rng.gen_range(-amp..amp), rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)];
    let noise: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let base = ScalarField::from_fn(g, |x| a[0] + a[1] * (PI * x[0]).cos() + a[2] * (2.5 * x[0] + x[1]).sin());
    ScalarField::new(g, base.values().iter().zip(noise).map(|(b, n)| b + n).collect()).unwrap()
}

fn jacobian_rel_error(problem: &dyn NonlinearProblem, u: &[f64]) -> f64 {
    let fd = fd_jacobian(|x, o| problem.residual(x, o), u, default_fd_step(u));
    let an = problem.jacobian(u).to_dense();
    (&an - &fd).abs().max() / an.abs().max()
}

#[test]
fn analytic_jacobians_match_finite_differences() {
    let mut r = rng(11);
    for dim in [1, 2] {
        let g = make_grid(dim, if dim == 1 { 17 } else { 7 }).unwrap();
        let eps_sq = 0.01;
        let dt = 0.01;
        for _ in 0..20 {
            let u = random_field(g, &mut r, 2.0);
            let known = random_field(g, &mut r, 2.0).into_values();
            // BE, CN, DIRK stage and the negative-theta backward problem
            for theta in [dt, dt / 2.0, dt / 4.0, -dt / 4.0] {
                let p = ImplicitStage { grid: g, theta, eps_sq, known: known.clone() };
                let e = jacobian_rel_error(&p, u.values());
                assert!(e <= 1e-5, "theta {theta}: {e}");
            }
            for unknown in [Unknown::Next, Unknown::Previous] {
                let p = ModCnProblem { grid: g, dt, eps_sq, fixed: known.clone(), unknown };
                let e = jacobian_rel_error(&p, u.values());
                assert!(e <= 1e-5, "{unknown:?}: {e}");
            }
        }
    }
}

#[test]
fn be_unique_below_threshold() {
    let g = make_grid(1, 33).unwrap();
    let mut r = rng(5);
    let eps = 0.1;
    let dt = stability_threshold(&SchemeKind::BackwardEuler, eps).unwrap().dt_max;
    for dt in [dt, 0.5 * dt] {
        let phi_n = random_field(g, &mut r, 1.5);
        let problem = ImplicitStage { grid: g, theta: dt, eps_sq: eps * eps, known: phi_n.values().to_vec() };
        let sols: Vec<ScalarField> = (0..100)
            .map(|_| {
                let guess = ScalarField::new(g, (0..g.len()).map(|_| r.gen_range(-3.0..3.0)).collect()).unwrap();
                let (u, rep) = newton_solve(&problem, &guess, &NewtonConfig::default());
                assert!(rep.converged, "{:?}", rep.failure);
                u
            })
            .collect();
        for s in &sols[1..] {
            assert!(s.dist_inf(&sols[0]) <= 1e-8);
        }
    }
}

fn stable_draw(r: &mut ChaCha8Rng) -> (SchemeKind, AcParams) {
    let kinds = SchemeKind::all();
    let kind = kinds[r.gen_range(0..4)].clone();
    let eps = r.gen_range(0.05..0.5);
    let dt_max = stability_threshold(&kind, eps).unwrap().dt_max.min(4.0 * eps * eps);
    let dt = r.gen_range(0.05..1.0) * dt_max;
    (kind, AcParams::new(eps, dt).unwrap())
}

#[test]
fn preimage_round_trip() {
    let mut r = rng(21);
    for _ in 0..50 {
        let (kind, p) = stable_draw(&mut r);
        let c = r.gen_range(-3.0..3.0);
        let set = preimage_constants(&kind, c, &p).unwrap();
        assert!(!set.roots.is_empty());
        for root in set.distinct_roots() {
            let imgs = scalar_map(&kind, root, &p);
            let best = imgs.iter().map(|i| (i.value - c).abs()).fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-8 * c.abs().max(1.0), "{kind} c={c} r={root}: {imgs:?}");
        }
    }
}

#[test]
fn closed_forms() {
    let mut r = rng(3);
    for _ in 0..100 {
        let eps: f64 = r.gen_range(0.02..1.0);
        let e2 = eps * eps;
        let dt = r.gen_range(0.05..2.0) * e2;
        let p = AcParams::new(eps, dt).unwrap();

        let cn = preimage_constants(&SchemeKind::CrankNicolson, 0.0, &p).unwrap();
        let r1 = (1.0 + 2.0 * e2 / dt).sqrt();
        assert!((cn.roots[2] - r1).abs() <= 1e-12 * r1);

        let m = preimage_constants(&SchemeKind::ModifiedCn, 0.0, &p).unwrap();
        let r1 = 2.0 * (1.0 + e2 / dt).sqrt();
        assert!((m.roots[2] - r1).abs() <= 1e-12 * r1);

        let d = preimage_constants(&SchemeKind::dirk2(), 0.0, &p).unwrap();
        assert_eq!(d.roots.len(), 5);
        let (r1, s1) = (d.roots[3], d.roots[4]);
        let want = 2.0 * (1.0 + 4.0 * e2 / dt).sqrt();
        assert!((r1 - want).abs() <= 1e-12 * want);
        let h = (r1 - s1) / 2.0;
        let lhs = (s1 + r1) / 2.0;
        let rhs = -(dt / (4.0 * e2)) * (h * h * h - h);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "{lhs} {rhs}");
    }
}

#[test]
fn preimage_odd_symmetry() {
    let mut r = rng(8);
    for _ in 0..100 {
        let (kind, p) = stable_draw(&mut r);
        let c = r.gen_range(-4.0..4.0);
        let a = preimage_constants(&kind, c, &p).unwrap().distinct_roots();
        let mut b: Vec<f64> = preimage_constants(&kind, -c, &p).unwrap().distinct_roots().iter().map(|v| -v).collect();
        b.reverse();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0), "{kind} {c}: {a:?} {b:?}");
        }
    }
}

#[test]
fn cn_sign_rule() {
    let kind = SchemeKind::CrankNicolson;
    let p = params_for_ratio(&kind, 0.5).unwrap();
    let seq = interval_sequence(&kind, 0.5, 2).unwrap();
    let (r1, r2) = (seq.r[0], seq.r[1]);
    let mut r = rng(13);
    for _ in 0..1000 {
        let x = r.gen_range(-2.0 * r2..2.0 * r2);
        let imgs = scalar_map(&kind, x, &p);
        let sel = imgs.iter().find(|i| i.selected).expect("selected branch").value;
        let positive = (x > 0.0 && x < r1) || x < -r1;
        assert_eq!(sel > 0.0, positive, "r = {x}, image {sel}");
    }
    // boundary points map to zero
    for x in [0.0, r1, -r1] {
        let imgs = scalar_map(&kind, x, &p);
        assert!(imgs.iter().find(|i| i.selected).unwrap().value.abs() < 1e-12);
    }
}

#[test]
fn dirk_sequences_interleave() {
    for ratio in [0.001, 0.01, 0.1, 0.25, 0.5] {
        let e = interval_sequence(&SchemeKind::dirk2(), ratio, 4).unwrap().entries();
        assert!(e.windows(2).all(|w| w[0] < w[1]), "{ratio}: {e:?}");
    }
}

#[test]
fn second_preimage_reproduces_sequence() {
    for ratio in [0.01, 0.1, 0.25, 0.5] {
        let cn = SchemeKind::CrankNicolson;
        let p = params_for_ratio(&cn, ratio).unwrap();
        let r1 = preimage_constants(&cn, 0.0, &p).unwrap().roots[2];
        let second = preimage_constants(&cn, -r1, &p).unwrap();
        assert_eq!(second.branches.len(), 1);
        let seq = interval_sequence(&cn, ratio, 2).unwrap();
        assert!((second.roots[0].abs() - seq.r[1]).abs() <= 1e-9 * seq.r[1]);

        let m = SchemeKind::ModifiedCn;
        let p = params_for_ratio(&m, ratio).unwrap();
        let r1 = preimage_constants(&m, 0.0, &p).unwrap().roots[2];
        let second = preimage_constants(&m, r1, &p).unwrap();
        assert_eq!(second.branches.len(), 1);
        let seq = interval_sequence(&m, ratio, 2).unwrap();
        assert!((second.roots[0].abs() - seq.r[1]).abs() <= 1e-9 * seq.r[1]);
    }
}

/// Forward-mode dual number for first-order perturbation checks.
#[derive(Debug, Clone, Copy)]
struct Dual {
    v: f64,
    d: f64,
}

impl Dual {
    fn new(v: f64, d: f64) -> Self {
        Self { v, d }
    }
    fn c(v: f64) -> Self {
        Self { v, d: 0.0 }
    }
    fn cube(self) -> Self {
        self * self * self
    }
}
impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}
impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}
impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.v * o.d + self.d * o.v)
    }
}

/// `lap(v + delta d mode) = -m delta d mode`; fields are divided by the mode.
fn lap(u: Dual, m: f64) -> Dual {
    Dual::new(0.0, -m * u.d)
}

fn rhs(u: Dual, m: f64, e2: f64) -> Dual {
    lap(u, m) - (u.cube() - u) * Dual::c(1.0 / e2)
}

fn random_mode(r: &mut ChaCha8Rng) -> ModeIndex {
    if r.gen_bool(0.5) {
        ModeIndex::integer(&[r.gen_range(0..6)])
    } else {
        ModeIndex::integer(&[r.gen_range(0..5), r.gen_range(0..5)])
    }
}

#[test]
fn gains_solve_linearized_equations() {
    let mut r = rng(99);
    let mut checked = [0usize; 3];
    while checked.iter().any(|n| *n < 100) {
        let eps: f64 = r.gen_range(0.05..0.5);
        let e2 = eps * eps;
        let dt = r.gen_range(1e-3..1e-1);
        let p = AcParams::new(eps, dt).unwrap();
        let k = random_mode(&mut r);
        let m = k.wavenumber_sq();
        let (c, rr) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        let dtc = Dual::c(dt);
        let half = Dual::c(0.5);
        let next = Dual::new(c, 1.0);

        if let GainValue::Scalar(b) = perturbation_gain(&SchemeKind::CrankNicolson, c, rr, &k, &p).unwrap().gain {
            if b.abs() > 1e-3 && b.abs() < 1e3 {
                let prev = Dual::new(rr, b);
                let res = next - prev - dtc * half * (rhs(next, m, e2) + rhs(prev, m, e2));
                assert!(res.d.abs() <= 1e-9 * b.abs(), "cn {res:?} b={b}");
                checked[0] += 1;
            }
        }
        if let GainValue::Scalar(b) = perturbation_gain(&SchemeKind::ModifiedCn, c, rr, &k, &p).unwrap().gain {
            if b.abs() > 1e-3 && b.abs() < 1e3 {
                let prev = Dual::new(rr, b);
                let res = next - prev - dtc * half * (lap(next, m) + lap(prev, m))
                    + dtc * Dual::c(1.0 / (4.0 * e2)) * (next + prev) * (next * next + prev * prev)
                    - dtc * Dual::c(1.0 / e2) * prev;
                assert!(res.d.abs() <= 1e-9 * b.abs(), "modcn {res:?} b={b}");
                checked[1] += 1;
            }
        }
        let (c2, c1) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0));
        if let GainValue::Staged([b2, b1, b0]) = dirk_perturbation_gains(c2, c1, &k, &p).gain {
            if [b2, b1, b0].iter().all(|b| b.abs() > 1e-3 && b.abs() < 1e3) {
                let q = Dual::c(dt / 4.0);
                let (p2, p1, p0) = (Dual::new(c2, b2), Dual::new(c1, b1), Dual::new(0.0, b0));
                let ra = next - p2 - q * rhs(p2, m, e2);
                let rb = p2 - p0 - dtc * (half * rhs(p1, m, e2) + Dual::c(0.25) * rhs(p2, m, e2));
                let rc = p1 - p0 - q * rhs(p1, m, e2);
                let scale = b0.abs().min(b1.abs()).min(b2.abs());
                for res in [ra, rb, rc] {
                    assert!(res.d.abs() <= 1e-9 * scale, "dirk {res:?} {b2} {b1} {b0}");
                }
                checked[2] += 1;
            }
        }
    }
}

#[test]
fn gain_2d_uses_summed_wavenumber() {
    let p = AcParams::new(0.1, 0.01).unwrap();
    let k1 = ModeIndex::integer(&[1]);
    let k11 = ModeIndex::integer(&[1, 1]);
    let b = |k: &ModeIndex| perturbation_gain(&SchemeKind::CrankNicolson, 0.984375, -1.99310, k, &p).unwrap().gain.initial().unwrap();
    let e2 = p.eps_sq();
    let m = 2.0 * PI * PI;
    let want = -(2.0 / p.dt + m + (3.0 * 0.984375_f64.powi(2) - 1.0) / e2) / (m - 2.0 / p.dt + (3.0 * 1.99310_f64.powi(2) - 1.0) / e2);
    assert!((b(&k11) - want).abs() <= 1e-12 * want.abs());
    assert!(b(&k1) != b(&k11));
}

#[test]
fn constant_steps_match_scalar_map() {
    let g = make_grid(1, 17).unwrap();
    let mut r = rng(4);
    for _ in 0..40 {
        let (kind, p) = stable_draw(&mut r);
        let c = r.gen_range(-4.0..4.0);
        let (u, rep) = step(&kind, &ScalarField::constant(g, c), &p, &NewtonConfig::default());
        assert!(rep.success);
        let sel = scalar_map(&kind, c, &p).into_iter().find(|i| i.selected).unwrap().value;
        assert!(u.values().iter().all(|v| (v - sel).abs() <= 1e-9 * sel.abs().max(1.0)), "{kind} {c}");
    }
}

#[test]
fn mode_is_discrete_eigenvector() {
    // cos(k pi x) is exact for the mirror-ghost stencil, with eigenvalue
    // -(4/h^2) sin^2(k pi h / 2)
    let g = make_grid(1, 41).unwrap();
    let h = g.spacing();
    for k in 0..5u32 {
        let f = eval_mode(&ModeIndex::integer(&[k]), &g).unwrap();
        let lf = acstab_core::grid::apply_laplacian(&f);
        let lam = -(4.0 / (h * h)) * (k as f64 * PI * h / 2.0).sin().powi(2);
        assert!(lf.lin_comb(1.0, &f, -lam).norm_inf() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steps_are_odd(a in -2.0f64..2.0, b in -1.0f64..1.0, kind_ix in 0usize..4, dt in 0.002f64..0.02) {
        let g = make_grid(1, 17).unwrap();
        let p = AcParams::new(0.1, dt).unwrap();
        let kind = SchemeKind::all()[kind_ix].clone();
        let phi = ScalarField::from_fn(g, |x| a + b * (PI * x[0]).cos() + 0.3 * x[0]);
        let neg = phi.map(|v| -v);
        let (u, r1) = step(&kind, &phi, &p, &NewtonConfig::default());
        let (w, r2) = step(&kind, &neg, &p, &NewtonConfig::default());
        prop_assume!(r1.success && r2.success);
        prop_assert!(u.lin_comb(1.0, &w, 1.0).norm_inf() <= 1e-10);
    }

    #[test]
    fn fixed_points(eps in 0.02f64..1.0, dt in 1e-4f64..1.0, kind_ix in 0usize..4, c_ix in 0usize..3) {
        let g = make_grid(1, 9).unwrap();
        let p = AcParams::new(eps, dt).unwrap();
        let c = [-1.0, 0.0, 1.0][c_ix];
        let phi = ScalarField::constant(g, c);
        let (u, rep) = step(&SchemeKind::all()[kind_ix], &phi, &p, &NewtonConfig::default());
        prop_assert!(rep.success);
        prop_assert!(rep.stages.iter().all(|s| s.iterations == 0 && s.residual <= 1e-12));
        prop_assert_eq!(u, phi);
    }

    #[test]
    fn bifurcation_monotone(c in -0.55f64..0.55, dt in 0.01f64..5.0, k in 0u32..6, bump in 1u32..3) {
        for kind in [SchemeKind::BackwardEuler, SchemeKind::CrankNicolson, SchemeKind::dirk2()] {
            let lo = ModeIndex::integer(&[k, 1]);
            let hi = ModeIndex::integer(&[k + bump, 1]);
            let a = bifurcation_epsilon_sq(&kind, c, dt, &lo, None).unwrap();
            let b = bifurcation_epsilon_sq(&kind, c, dt, &hi, None).unwrap();
            prop_assert!(b < a);
            let longer = bifurcation_epsilon_sq(&kind, c, dt * 1.5, &lo, None).unwrap();
            prop_assert!(longer > a);
        }
    }
}
