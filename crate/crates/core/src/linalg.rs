//! Banded matrices and a partial-pivoting band LU.
//!
//! Every Jacobian in this crate is a combination of the identity, the
//! Neumann Laplacian stencil and a diagonal, so it is banded with
//! half-bandwidth 1 in 1D and `n` (points per axis) in 2D.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Rows are stored with extra room for `kl` fill-in columns so the same
/// storage can be factored in place.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn identity(n: usize, kl: usize, ku: usize) -> Self {
        let mut m = Self::zeros(n, kl, ku);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        // row i covers columns [i - kl, i + ku + kl]
        let lo = i as isize - self.kl as isize;
        let off = j as isize - lo;
        if off < 0 || off as usize >= self.width || j >= self.n {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        (j <= i && i - j <= self.kl) || (j > i && j - i <= self.ku)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.slot(i, j) {
            Some(s) if self.in_band(i, j) => self.data[s],
            _ => 0.0,
        }
    }

    /// Sets entry `(i, j)`. Panics when the entry lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band");
        let s = self.slot(i, j).expect("in-band slot");
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i},{j}) outside band");
        let s = self.slot(i, j).expect("in-band slot");
        self.data[s] += v;
    }

    pub fn add_diagonal(&mut self, d: &[f64]) {
        assert_eq!(d.len(), self.n);
        for (i, v) in d.iter().enumerate() {
            self.add(i, i, *v);
        }
    }

    pub fn shift_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.add(i, i, v);
        }
    }

    /// `self *= alpha`.
    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// LU factorisation with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let reach = kl + self.ku;
        let mut piv = vec![0usize; n];
        let mut scratch_k = vec![0.0; reach + 1];
        let mut scratch_p = vec![0.0; reach + 1];
        let scale = self
            .data
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);

        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.raw(k, k).abs();
            for i in k + 1..=last {
                let v = self.raw(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= f64::EPSILON * scale * 1e-4 || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            piv[k] = p;
            let hi = (k + reach).min(n - 1);
            if p != k {
                // swap only the active columns [k, hi]; stored multipliers stay put
                for (o, j) in (k..=hi).enumerate() {
                    scratch_k[o] = self.raw(k, j);
                    scratch_p[o] = self.raw(p, j);
                }
                for (o, j) in (k..=hi).enumerate() {
                    self.put(k, j, scratch_p[o]);
                    self.put(p, j, scratch_k[o]);
                }
            }
            let pivot = self.raw(k, k);
            for i in k + 1..=last {
                let l = self.raw(i, k) / pivot;
                if l == 0.0 {
                    continue;
                }
                self.put(i, k, l);
                for j in k + 1..=hi {
                    let u = self.raw(k, j);
                    if u != 0.0 {
                        let s = self.slot(i, j).expect("fill slot");
                        self.data[s] -= l * u;
                    }
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }

    #[inline]
    fn raw(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    #[inline]
    fn put(&mut self, i: usize, j: usize, v: f64) {
        match self.slot(i, j) {
            Some(s) => self.data[s] = v,
            None => debug_assert!(v == 0.0, "dropping nonzero fill at ({i},{j})"),
        }
    }
}

/// Factored band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.m.n;
        let kl = self.m.kl;
        let reach = kl + self.m.ku;
        let mut b = rhs.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= self.m.raw(i, k) * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                acc -= self.m.raw(k, j) * b[j];
            }
            b[k] = acc / self.m.raw(k, k);
        }
        b
    }
}

/// Solves `A x = b`, then applies one step of iterative refinement so the
/// relative residual lands near machine precision even for poorly scaled
/// Jacobians.
pub fn solve_banded(a: &BandMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let lu = a.clone().factor()?;
    let mut x = lu.solve(b);
    let ax = a.matvec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let dx = lu.solve(&r);
    x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("non-finite linear solve".into()));
    }
    Ok(x)
}
