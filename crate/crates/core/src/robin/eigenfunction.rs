//! Eigenfunction `u_j(x) = β_j sin(z x)` on edge `j`, normalized by `u(v) = 1`.

use num_complex::Complex64;
use serde::Serialize;

use super::RobinEigenvalue;
use crate::error::{Error, Result};
use crate::graph::StarGraph;
use crate::secular::sin_reduced_c;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenfunctionCoefficients {
    pub beta: Vec<Complex64>,
    /// `‖u‖²` from the closed form.
    pub l2_norm_sq: f64,
    /// `|z Σ β_j cos(zℓ_j) + α|`.
    pub kirchhoff_residual: f64,
}

/// `∫₀^ℓ |sin(z x)|² dx` for `z = τ + iη`.
pub fn sin_norm_sq(z: Complex64, l: f64) -> f64 {
    let (tau, eta) = (z.re, z.im);
    let hyper = if eta.abs() < 1e-8 { l / 2.0 } else { (2.0 * eta * l).sinh() / (4.0 * eta) };
    let trig = if tau.abs() < 1e-8 { l / 2.0 } else { (2.0 * tau * l).sin() / (4.0 * tau) };
    hyper - trig
}

pub fn eigenfunction_coefficients(
    g: &StarGraph,
    alpha: Complex64,
    rob: &RobinEigenvalue,
) -> Result<EigenfunctionCoefficients> {
    if !rob.class.is_regular() {
        return Err(Error::CoincidentEigenfunction);
    }
    let z = rob.z;
    let mut beta = Vec::with_capacity(g.n_edges());
    let mut sum_cos = Complex64::new(0.0, 0.0);
    let mut norm = 0.0;
    for &l in g.lengths() {
        let s = sin_reduced_c(z * l);
        if s.norm() == 0.0 {
            return Err(Error::PoleProximity(z.re * l));
        }
        let b = 1.0 / s;
        sum_cos += b * (z * l).cos();
        norm += b.norm_sqr() * sin_norm_sq(z, l);
        beta.push(b);
    }
    Ok(EigenfunctionCoefficients { beta, l2_norm_sq: norm, kirchhoff_residual: (z * sum_cos + alpha).norm() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kirchhoff::EigenClass;
    use std::f64::consts::PI;

    fn entry(z: Complex64, alpha: Complex64) -> RobinEigenvalue {
        RobinEigenvalue {
            index: 1,
            alpha,
            tau: z.re,
            rho: None,
            z,
            eigenvalue: z * z,
            delta: Complex64::new(0.0, 0.0),
            residual: 0.0,
            certified: true,
            class: EigenClass::Regular,
        }
    }

    #[test]
    fn symmetric_mode() {
        let g = StarGraph::unspecified(&[1.0, 1.0]).unwrap();
        let zero = Complex64::new(0.0, 0.0);
        let e = eigenfunction_coefficients(&g, zero, &entry(Complex64::new(PI / 2.0, 0.0), zero)).unwrap();
        for b in &e.beta {
            assert!((b - 1.0).norm() < 1e-15);
        }
        assert!(e.kirchhoff_residual < 1e-15);
    }

    #[test]
    fn unequal_edges() {
        let g = StarGraph::unspecified(&[1.0, 2.0]).unwrap();
        let zero = Complex64::new(0.0, 0.0);
        let e = eigenfunction_coefficients(&g, zero, &entry(Complex64::new(PI / 3.0, 0.0), zero)).unwrap();
        let want = 2.0 / 3f64.sqrt();
        for b in &e.beta {
            assert!((b - want).norm() < 1e-14);
        }
        assert!(e.kirchhoff_residual < 1e-14);
    }

    #[test]
    fn norm_matches_quadrature_off_axis() {
        let z = Complex64::new(2.3, 0.4);
        let l = 1.7;
        let n = 20000;
        let h = l / n as f64;
        // Composite Simpson.
        let f = |x: f64| (z * x).sin().norm_sqr();
        let mut s = f(0.0) + f(l);
        for k in 1..n {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
        }
        assert!((s * h / 3.0 - sin_norm_sq(z, l)).abs() < 1e-10);
    }

    #[test]
    fn coincident_rejected() {
        let g = StarGraph::unspecified(&[1.0, 2.0]).unwrap();
        let mut r = entry(Complex64::new(PI, 0.0), Complex64::new(1.0, 0.0));
        r.class = EigenClass::Coincident { dirichlet_multiplicity: 2 };
        assert_eq!(eigenfunction_coefficients(&g, r.alpha, &r), Err(Error::CoincidentEigenfunction));
    }
}
