//! Real roots of real cubics: trigonometric form for three real roots,
//! Cardano for one, with a Newton polish on the original coefficients.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative size below which the discriminant counts as zero.
pub const DISCRIMINANT_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CubicRoots {
    /// Ascending, repeated roots listed with multiplicity.
    pub real_roots: Vec<f64>,
    /// Sign of the discriminant: +1 three distinct real roots, 0 a repeated
    /// root, -1 one real root and a complex pair.
    pub discriminant_sign: i8,
    pub discriminant: f64,
}

impl CubicRoots {
    /// Roots with duplicates collapsed.
    pub fn distinct(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(3);
        for &r in &self.real_roots {
            if out.last().map_or(true, |l| (r - *l).abs() > 1e-12 * r.abs().max(1.0)) {
                out.push(r);
            }
        }
        out
    }
}

/// Discriminant of `a3 r^3 + a2 r^2 + a1 r + a0` together with the magnitude
/// of its largest term.
pub fn discriminant(a3: f64, a2: f64, a1: f64, a0: f64) -> (f64, f64) {
    let terms = [
        18.0 * a3 * a2 * a1 * a0,
        -4.0 * a2.powi(3) * a0,
        a2 * a2 * a1 * a1,
        -4.0 * a3 * a1.powi(3),
        -27.0 * a3 * a3 * a0 * a0,
    ];
    let scale = terms.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    (terms.iter().sum(), scale)
}

fn eval(c: &[f64; 4], x: f64) -> f64 {
    ((c[0] * x + c[1]) * x + c[2]) * x + c[3]
}

fn deriv(c: &[f64; 4], x: f64) -> f64 {
    (3.0 * c[0] * x + 2.0 * c[1]) * x + c[2]
}

fn polish(c: &[f64; 4], x: f64) -> f64 {
    let d = deriv(c, x);
    if d == 0.0 || !d.is_finite() {
        return x;
    }
    let y = x - eval(c, x) / d;
    if y.is_finite() && eval(c, y).abs() <= eval(c, x).abs() {
        y
    } else {
        x
    }
}

pub fn real_cubic_roots(a3: f64, a2: f64, a1: f64, a0: f64) -> Result<CubicRoots> {
    if a3 == 0.0 || !a3.is_finite() {
        return Err(Error::Degree);
    }
    let coeffs = [a3, a2, a1, a0];
    let (disc, scale) = discriminant(a3, a2, a1, a0);
    let sign: i8 = if disc.abs() <= DISCRIMINANT_ZERO_TOL * scale {
        0
    } else if disc > 0.0 {
        1
    } else {
        -1
    };

    // depressed cubic t^3 + p t + q with r = t - b/3
    let b = a2 / a3;
    let c = a1 / a3;
    let d = a0 / a3;
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;

    let mut roots: Vec<f64> = match sign {
        1 => {
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
            let theta = arg.acos() / 3.0;
            (0..3).map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos() - shift).collect()
        }
        -1 => {
            let disc_dep = (q * q / 4.0 + p * p * p / 27.0).max(0.0);
            let sq = disc_dep.sqrt();
            let big = (-q / 2.0 - q.signum() * sq).cbrt();
            let other = if big != 0.0 { -p / (3.0 * big) } else { 0.0 };
            vec![big + other - shift]
        }
        _ => {
            let pscale = b * b / 3.0 + c.abs() + 1e-300;
            if p.abs() <= 1e-12 * pscale {
                vec![-shift; 3]
            } else {
                let simple = 3.0 * q / p;
                let double = -3.0 * q / (2.0 * p);
                vec![simple - shift, double - shift, double - shift]
            }
        }
    };

    if sign != 0 {
        roots.iter_mut().for_each(|r| *r = polish(&coeffs, *r));
    } else if roots.len() == 3 && roots[0] != roots[1] {
        // only the simple root is safe to polish
        roots[0] = polish(&coeffs, roots[0]);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    Ok(CubicRoots {
        real_roots: roots,
        discriminant_sign: sign,
        discriminant: disc,
    })
}
