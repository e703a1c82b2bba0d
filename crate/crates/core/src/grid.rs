//! Uniform node-centred grids on `[-1, 1]^d`, sampled fields and the
//! homogeneous-Neumann Laplacian.
//!
//! The boundary rows use a mirror ghost node (ghost value equals the first
//! interior neighbour), which gives a discrete zero normal derivative and
//! annihilates constants exactly.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::BandMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Config(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if n < 3 {
            return Err(Error::Config(format!("need at least 3 points per axis, got {n}")));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        2.0 / (self.n - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `j` along any axis.
    pub fn node(&self, j: usize) -> f64 {
        -1.0 + j as f64 * self.spacing()
    }

    /// Per-axis node indices of flat index `idx` (row-major, last axis fastest).
    pub fn axis_indices(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.n, idx % self.n],
        }
    }

    /// Coordinates of flat node `idx`; unused axes are zero.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.axis_indices(idx);
        match self.dim {
            1 => [self.node(i), 0.0],
            _ => [self.node(i), self.node(j)],
        }
    }

    /// Flat index of the node nearest the origin.
    pub fn center_index(&self) -> usize {
        let c = self.n / 2;
        match self.dim {
            1 => c,
            _ => c * self.n + c,
        }
    }

    /// Tensor-product trapezoidal quadrature weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let w1 = |j: usize| if j == 0 || j == self.n - 1 { 0.5 * h } else { h };
        (0..self.len())
            .map(|idx| {
                let [i, j] = self.axis_indices(idx);
                match self.dim {
                    1 => w1(i),
                    _ => w1(i) * w1(j),
                }
            })
            .collect()
    }

    /// Half-bandwidth of any stencil operator on this grid.
    pub fn bandwidth(&self) -> usize {
        match self.dim {
            1 => 1,
            _ => self.n,
        }
    }

    /// Band matrix of the Neumann Laplacian.
    pub fn laplacian_matrix(&self) -> BandMatrix {
        let bw = self.bandwidth();
        let mut m = BandMatrix::zeros(self.len(), bw, bw);
        let inv_h2 = 1.0 / (self.spacing() * self.spacing());
        let n = self.n;
        let stride = |axis: usize| match (self.dim, axis) {
            (1, _) => 1,
            (_, 0) => n,
            _ => 1,
        };
        for idx in 0..self.len() {
            let ij = self.axis_indices(idx);
            for axis in 0..self.dim {
                let s = stride(axis);
                let pos = ij[axis];
                m.add(idx, idx, -2.0 * inv_h2);
                if pos == 0 {
                    m.add(idx, idx + s, 2.0 * inv_h2);
                } else if pos == n - 1 {
                    m.add(idx, idx - s, 2.0 * inv_h2);
                } else {
                    m.add(idx, idx - s, inv_h2);
                    m.add(idx, idx + s, inv_h2);
                }
            }
        }
        m
    }
}

/// A grid function in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    /// Builds a field without the finiteness check; used for solver
    /// intermediates that are validated elsewhere.
    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: GridSpec, v: f64) -> Self {
        Self {
            grid,
            values: vec![v; grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm_inf(&self) -> f64 {
        norm_inf(&self.values)
    }

    /// Trapezoidal L2 norm over the domain.
    pub fn norm_l2(&self) -> f64 {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn center_value(&self) -> f64 {
        self.values[self.grid.center_index()]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| f(*v)).collect())
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: f64, other: &ScalarField, beta: f64) -> Self {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        )
    }

    pub fn dist_inf(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Interface width and time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcParams {
    pub eps: f64,
    pub dt: f64,
}

impl AcParams {
    pub fn new(eps: f64, dt: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("eps must be positive, got {eps}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { eps, dt })
    }

    pub fn eps_sq(&self) -> f64 {
        self.eps * self.eps
    }
}

/// Neumann eigenmode index: one non-negative half-integer per axis, stored
/// doubled. Integer entries select `cos(pi k x)`, half-integers `sin(pi k x)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    twice: Vec<u32>,
}

impl ModeIndex {
    pub fn from_twice(twice: Vec<u32>) -> Self {
        Self { twice }
    }

    pub fn integer(k: &[u32]) -> Self {
        Self {
            twice: k.iter().map(|v| 2 * v).collect(),
        }
    }

    /// Parses each value as a half-integer; rejects anything else.
    pub fn from_values(k: &[f64]) -> Result<Self> {
        k.iter()
            .map(|&v| {
                let t = 2.0 * v;
                if v < 0.0 || (t - t.round()).abs() > 1e-12 {
                    Err(Error::Config(format!("mode index {v} is not a non-negative half-integer")))
                } else {
                    Ok(t.round() as u32)
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_twice)
    }

    pub fn dim(&self) -> usize {
        self.twice.len()
    }

    pub fn twice(&self) -> &[u32] {
        &self.twice
    }

    pub fn k(&self, axis: usize) -> f64 {
        self.twice[axis] as f64 / 2.0
    }

    pub fn is_cosine(&self, axis: usize) -> bool {
        self.twice[axis] % 2 == 0
    }

    pub fn all_integer(&self) -> bool {
        self.twice.iter().all(|t| t % 2 == 0)
    }

    /// `sum_i (pi k_i)^2`, the continuum eigenvalue of `-Laplacian`.
    pub fn wavenumber_sq(&self) -> f64 {
        (0..self.dim()).map(|i| (PI * self.k(i)).powi(2)).sum()
    }

    /// Human-readable eigenfunction, e.g. `cos(1*pi*x1)*sin(0.5*pi*x2)`.
    pub fn descriptor(&self) -> String {
        (0..self.dim())
            .map(|i| {
                let f = if self.is_cosine(i) { "cos" } else { "sin" };
                format!("{f}({}*pi*x{})", fmt_half(self.twice[i]), i + 1)
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

fn fmt_half(twice: u32) -> String {
    if twice % 2 == 0 {
        format!("{}", twice / 2)
    } else {
        format!("{}.5", twice / 2)
    }
}

pub fn make_grid(dim: usize, n: usize) -> Result<GridSpec> {
    GridSpec::new(dim, n)
}

/// Second-order Neumann Laplacian applied to raw values on `grid`.
pub fn laplacian_into(grid: &GridSpec, u: &[f64], out: &mut [f64]) {
    let n = grid.n;
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let second = |um: f64, u0: f64, up: f64| (um - 2.0 * u0 + up) * inv_h2;
    match grid.dim {
        1 => {
            for j in 0..n {
                let um = if j == 0 { u[1] } else { u[j - 1] };
                let up = if j == n - 1 { u[n - 2] } else { u[j + 1] };
                out[j] = second(um, u[j], up);
            }
        }
        _ => {
            for i in 0..n {
                for j in 0..n {
                    let at = |a: usize, b: usize| u[a * n + b];
                    let im = if i == 0 { 1 } else { i - 1 };
                    let ip = if i == n - 1 { n - 2 } else { i + 1 };
                    let jm = if j == 0 { 1 } else { j - 1 };
                    let jp = if j == n - 1 { n - 2 } else { j + 1 };
                    let c = at(i, j);
                    out[i * n + j] = second(at(im, j), c, at(ip, j)) + second(at(i, jm), c, at(i, jp));
                }
            }
        }
    }
}

pub fn apply_laplacian(u: &ScalarField) -> ScalarField {
    let mut out = vec![0.0; u.values.len()];
    laplacian_into(&u.grid, &u.values, &mut out);
    ScalarField::from_raw(u.grid, out)
}

pub fn eval_mode(k: &ModeIndex, grid: &GridSpec) -> Result<ScalarField> {
    if k.dim() != grid.dim() {
        return Err(Error::Dimension {
            expected: grid.dim(),
            got: k.dim(),
        });
    }
    Ok(ScalarField::from_fn(*grid, |x| {
        (0..k.dim())
            .map(|i| {
                let arg = PI * k.k(i) * x[i];
                if k.is_cosine(i) {
                    arg.cos()
                } else {
                    arg.sin()
                }
            })
            .product()
    }))
}

/// Pointwise Allen-Cahn reaction `-(u^3 - u) / eps^2`.
#[inline]
pub fn reaction(u: f64, eps_sq: f64) -> f64 {
    -(u * u * u - u) / eps_sq
}

/// `F(u) = Laplacian(u) - (u^3 - u) / eps^2` on raw values.
pub fn ac_rhs_into(grid: &GridSpec, u: &[f64], eps_sq: f64, out: &mut [f64]) {
    laplacian_into(grid, u, out);
    for (o, v) in out.iter_mut().zip(u) {
        *o += reaction(*v, eps_sq);
    }
}

pub fn ac_rhs(u: &ScalarField, p: &AcParams) -> ScalarField {
    let mut out = vec![0.0; u.values.len()];
    ac_rhs_into(&u.grid, &u.values, p.eps_sq(), &mut out);
    ScalarField::from_raw(u.grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_construction() {
        let g = make_grid(1, 3).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!((0..3).map(|j| g.node(j)).collect::<Vec<_>>(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(make_grid(1, 257).unwrap().spacing(), 0.0078125);
        assert_eq!(make_grid(2, 65).unwrap().len(), 4225);
        assert!(matches!(make_grid(3, 10), Err(Error::Config(_))));
        assert!(matches!(make_grid(1, 2), Err(Error::Config(_))));
        assert!(matches!(make_grid(0, 10), Err(Error::Config(_))));
    }

    #[test]
    fn constants_are_annihilated() {
        for g in [make_grid(1, 7).unwrap(), make_grid(2, 9).unwrap()] {
            let lap = apply_laplacian(&ScalarField::constant(g, 5.0));
            assert!(lap.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn cosine_second_derivative_1d() {
        let g = make_grid(1, 257).unwrap();
        let u = ScalarField::from_fn(g, |x| (PI * x[0]).cos());
        let lap = apply_laplacian(&u);
        let err = lap.lin_comb(1.0, &u, PI * PI).norm_inf();
        assert!(err <= 1e-3, "err = {err}");
    }

    #[test]
    fn separable_cosine_2d() {
        let g = make_grid(2, 129).unwrap();
        let u = ScalarField::from_fn(g, |x| (PI * x[0]).cos() * (PI * x[1]).cos());
        let lap = apply_laplacian(&u);
        let err = lap.lin_comb(1.0, &u, 2.0 * PI * PI).norm_inf();
        assert!(err <= 5e-3, "err = {err}");
    }

    #[test]
    fn matrix_matches_stencil() {
        for g in [make_grid(1, 9).unwrap(), make_grid(2, 6).unwrap()] {
            let u = ScalarField::from_fn(g, |x| (1.3 * x[0]).sin() + x[1] * x[1] * x[0]);
            let direct = apply_laplacian(&u);
            let via = g.laplacian_matrix().matvec(u.values());
            for (a, b) in direct.values().iter().zip(&via) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn modes() {
        let g = make_grid(1, 101).unwrap();
        let one = eval_mode(&ModeIndex::integer(&[0]), &g).unwrap();
        assert!(one.values().iter().all(|v| *v == 1.0));
        let c1 = eval_mode(&ModeIndex::integer(&[1]), &g).unwrap();
        assert_abs_diff_eq!(c1.values()[50], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c1.values()[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c1.values()[100], -1.0, epsilon = 1e-15);

        // sin(pi x / 2): the one-sided slope at the walls is O(h)
        let half = ModeIndex::from_values(&[0.5]).unwrap();
        assert!(!half.is_cosine(0));
        let s = eval_mode(&half, &g).unwrap();
        let h = g.spacing();
        let v = s.values();
        assert!(((v[1] - v[0]) / h).abs() <= 2.0 * h);
        assert!(((v[100] - v[99]) / h).abs() <= 2.0 * h);
        // analytic derivative at the walls
        assert_abs_diff_eq!((PI / 2.0) * (PI / 2.0).cos(), 0.0, epsilon = 1e-15);

        assert!(matches!(
            eval_mode(&ModeIndex::integer(&[1, 1]), &g),
            Err(Error::Dimension { .. })
        ));
        assert!(ModeIndex::from_values(&[0.3]).is_err());
        assert_eq!(ModeIndex::from_values(&[1.0, 1.5]).unwrap().descriptor(), "cos(1*pi*x1)*sin(1.5*pi*x2)");
    }

    #[test]
    fn rhs_values() {
        let g = make_grid(1, 17).unwrap();
        let p = AcParams::new(0.1, 0.01).unwrap();
        for c in [1.0, -1.0, 0.0] {
            let r = ac_rhs(&ScalarField::constant(g, c), &p);
            assert!(r.values().iter().all(|v| *v == 0.0));
        }
        let r = ac_rhs(&ScalarField::constant(g, 0.5), &p);
        for v in r.values() {
            assert_abs_diff_eq!(*v, 37.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn params_validation() {
        assert!(AcParams::new(0.0, 1.0).is_err());
        assert!(AcParams::new(0.1, -1.0).is_err());
        assert!(AcParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn field_validation() {
        let g = make_grid(1, 3).unwrap();
        assert!(matches!(ScalarField::new(g, vec![0.0; 2]), Err(Error::Dimension { .. })));
        assert!(ScalarField::new(g, vec![0.0, f64::NAN, 1.0]).is_err());
    }
}
