use crate::error::{Error, Result};

/// Coefficients of a diagonally implicit Runge-Kutta method.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ButcherTableau {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if s == 0 {
            return Err(Error::Config("tableau needs at least one stage".into()));
        }
        if a.len() != s || c.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(Error::Config(format!("tableau shape mismatch for {s} stages")));
        }
        for (i, row) in a.iter().enumerate() {
            if row[i + 1..].iter().any(|v| *v != 0.0) {
                return Err(Error::Config(format!("tableau row {} is not lower triangular", i + 1)));
            }
        }
        if (0..s).all(|i| a[i][i] == 0.0) {
            return Err(Error::Config("tableau has no implicit stage".into()));
        }
        if a.iter().flatten().chain(&b).chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::Config("tableau has non-finite coefficients".into()));
        }
        Ok(Self { a, b, c })
    }

    /// Two-stage, second-order array with `a_ii = 1/4`.
    pub fn dirk2() -> Self {
        Self {
            a: vec![vec![0.25, 0.0], vec![0.5, 0.25]],
            b: vec![0.5, 0.5],
            c: vec![0.25, 0.75],
        }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.stages()).map(|i| self.a[i][i])
    }

    pub fn max_diagonal(&self) -> f64 {
        self.diagonal().fold(f64::NEG_INFINITY, f64::max)
    }

    /// True when `phi^{n+1} = phi_2 + dt (b_2 - a_22) F(phi_2)` holds, which
    /// lets a two-stage step be inverted one stage at a time.
    pub fn is_chainable(&self) -> bool {
        self.stages() == 2 && self.b[0] == self.a[1][0] && self.a[0][0] > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_array() {
        let t = ButcherTableau::dirk2();
        assert_eq!(t.stages(), 2);
        assert_eq!(t.max_diagonal(), 0.25);
        assert!(t.is_chainable());
        assert!(ButcherTableau::new(t.a.clone(), t.b.clone(), t.c.clone()).is_ok());
        // second-order conditions
        assert_eq!(t.b().iter().sum::<f64>(), 1.0);
        assert_eq!(t.b().iter().zip(t.c()).map(|(b, c)| b * c).sum::<f64>(), 0.5);
    }

    #[test]
    fn rejects_invalid() {
        assert!(ButcherTableau::new(vec![vec![0.5, 0.1], vec![0.5, 0.5]], vec![0.5, 0.5], vec![0.5, 1.0]).is_err());
        assert!(ButcherTableau::new(vec![vec![0.0]], vec![1.0], vec![0.0]).is_err());
        assert!(ButcherTableau::new(vec![vec![1.0]], vec![1.0, 0.0], vec![0.0]).is_err());
    }
}
