//! Secular functions of the star graph: `F_N`, `F_D`, `Ψ`, `ψ_α` and the
//! observable `Φ`, all evaluated through an argument-reduced cotangent.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::StarGraph;

/// Distance of a reduced argument to `0` below which evaluation is refused.
pub const POLE_TOL: f64 = 1e-13;
/// Beyond this imaginary part `cot` is replaced by its limit `∓i`.
pub const IMAG_GUARD: f64 = 50.0;

// π split in three pieces; the first two carry 24 significant bits so that
// `k * PI_A` and `k * PI_B` are exact for |k| < 2^29.
const PI_A: f64 = 3.141592502593994;
const PI_B: f64 = 1.5099578831723193e-07;
const PI_C: f64 = 1.0780605716316238e-14;

/// Writes `x = kπ + r` with `r ∈ (−π/2, π/2]`; accurate for `|x| ≤ 1e9`.
pub fn reduce_pi(x: f64) -> (f64, f64) {
    let mut k = (x / PI).round();
    let mut r = ((x - k * PI_A) - k * PI_B) - k * PI_C;
    if r <= -FRAC_PI_2 {
        k -= 1.0;
        r = ((x - k * PI_A) - k * PI_B) - k * PI_C;
    } else if r > FRAC_PI_2 {
        k += 1.0;
        r = ((x - k * PI_A) - k * PI_B) - k * PI_C;
    }
    (k, r)
}

fn is_odd(k: f64) -> bool {
    (k % 2.0).abs() == 1.0
}

/// `x mod 2π` in `[0, 2π)`.
pub fn reduce_two_pi(x: f64) -> f64 {
    let (k, r) = reduce_pi(x);
    let mut y = if is_odd(k) { r + PI } else { r };
    if y < 0.0 {
        y += 2.0 * PI;
    }
    if y >= 2.0 * PI {
        y -= 2.0 * PI;
    }
    y
}

/// Distance from `x` to the lattice `πZ`.
pub fn dist_to_pi_lattice(x: f64) -> f64 {
    reduce_pi(x).1.abs()
}

/// `cot x` for real `x`, refusing arguments within [`POLE_TOL`] of `πZ`.
pub fn cot_reduced(x: f64) -> Result<f64> {
    let (_, r) = reduce_pi(x);
    if r.abs() < POLE_TOL {
        return Err(Error::PoleProximity(x));
    }
    let (s, c) = r.sin_cos();
    Ok(c / s)
}

/// `cot w` for complex `w`, reducing `Re w` modulo π first.
pub fn cot_reduced_c(w: Complex64) -> Result<Complex64> {
    let b = w.im;
    if b > IMAG_GUARD {
        return Ok(Complex64::new(0.0, -1.0));
    }
    if b < -IMAG_GUARD {
        return Ok(Complex64::new(0.0, 1.0));
    }
    let (_, a) = reduce_pi(w.re);
    if a.abs() < POLE_TOL && b.abs() < POLE_TOL {
        return Err(Error::PoleProximity(w.re));
    }
    let (sa, ca) = a.sin_cos();
    let (sb, cb) = (b.sinh(), b.cosh());
    let den = sa * sa + sb * sb;
    Ok(Complex64::new(sa * ca / den, -sb * cb / den))
}

/// `sin w` with the real part reduced modulo π.
pub fn sin_reduced_c(w: Complex64) -> Complex64 {
    let (k, a) = reduce_pi(w.re);
    let (sa, ca) = a.sin_cos();
    let v = Complex64::new(sa * w.im.cosh(), ca * w.im.sinh());
    if is_odd(k) {
        -v
    } else {
        v
    }
}

/// `(sin w, cos w)·e^{−|Im w|}`; bounded for any imaginary part.
pub fn sin_cos_scaled(w: Complex64) -> (Complex64, Complex64) {
    let (k, a) = reduce_pi(w.re);
    let (sa, ca) = a.sin_cos();
    let b = w.im;
    let e = (-2.0 * b.abs()).exp();
    let ch = 0.5 * (1.0 + e);
    let sh = 0.5 * (1.0 - e) * b.signum();
    let mut s = Complex64::new(sa * ch, ca * sh);
    let mut c = Complex64::new(ca * ch, -sa * sh);
    if is_odd(k) {
        s = -s;
        c = -c;
    }
    (s, c)
}

fn sin_cos_real(x: f64) -> (f64, f64) {
    let (k, r) = reduce_pi(x);
    let (s, c) = r.sin_cos();
    if is_odd(k) {
        (-s, -c)
    } else {
        (s, c)
    }
}

/// `F_N(y) = Σ_j cos(y_j) Π_{k≠j} sin(y_k)`, via prefix/suffix sine products.
pub fn eval_fn(y: &[f64]) -> f64 {
    let sc: Vec<(f64, f64)> = y.iter().map(|&v| sin_cos_real(v)).collect();
    let n = sc.len();
    let mut suffix = vec![1.0; n + 1];
    for j in (0..n).rev() {
        suffix[j] = suffix[j + 1] * sc[j].0;
    }
    let mut prefix = 1.0;
    let mut sum = 0.0;
    for j in 0..n {
        sum += sc[j].1 * prefix * suffix[j + 1];
        prefix *= sc[j].0;
    }
    sum
}

/// `F_D(y) = Π_j sin(y_j)`.
pub fn eval_fd(y: &[f64]) -> f64 {
    y.iter().map(|&v| sin_cos_real(v).0).product()
}

/// `Ψ(y) = −Σ_j cot(y_j)`.
pub fn eval_psi_torus(y: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &v in y {
        s -= cot_reduced(v)?;
    }
    Ok(s)
}

/// A torus point with both determinants and `Ψ` where defined.
#[derive(Debug, Clone, PartialEq)]
pub struct SecularPoint {
    pub y: Vec<f64>,
    pub f_n: f64,
    pub f_d: f64,
    pub psi: Option<f64>,
}

impl SecularPoint {
    pub fn at(y: &[f64]) -> Self {
        SecularPoint { y: y.to_vec(), f_n: eval_fn(y), f_d: eval_fd(y), psi: eval_psi_torus(y).ok() }
    }
}

/// `Ψ(τℓ)` for real `τ`.
pub fn psi_real(g: &StarGraph, tau: f64) -> Result<f64> {
    let mut s = 0.0;
    for &l in g.lengths() {
        s -= cot_reduced(tau * l)?;
    }
    Ok(s)
}

/// `ψ₀'(τ) = Σ ℓ_j / sin²(τℓ_j)` for real `τ`.
pub fn psi0_prime_real(g: &StarGraph, tau: f64) -> Result<f64> {
    let mut s = 0.0;
    for &l in g.lengths() {
        let c = cot_reduced(tau * l)?;
        s += l * (1.0 + c * c);
    }
    Ok(s)
}

/// `ψ_α(z) = −Σ cot(zℓ_j) − α/z`.
pub fn eval_psi(z: Complex64, g: &StarGraph, alpha: Complex64) -> Result<Complex64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroArgument);
    }
    let mut s = Complex64::new(0.0, 0.0);
    for &l in g.lengths() {
        s -= cot_reduced_c(z * l)?;
    }
    Ok(s - alpha / z)
}

/// `ψ₀'(z) = Σ ℓ_j (1 + cot²(zℓ_j))`.
pub fn eval_psi0_prime(z: Complex64, g: &StarGraph) -> Result<Complex64> {
    let mut s = Complex64::new(0.0, 0.0);
    for &l in g.lengths() {
        let c = cot_reduced_c(z * l)?;
        s += l * (1.0 + c * c);
    }
    Ok(s)
}

/// `ψ₀''(z) = −2 Σ ℓ_j² cos(zℓ_j)/sin³(zℓ_j)`.
pub fn eval_psi0_second(z: Complex64, g: &StarGraph) -> Result<Complex64> {
    let mut s = Complex64::new(0.0, 0.0);
    for &l in g.lengths() {
        let c = cot_reduced_c(z * l)?;
        s -= 2.0 * l * l * c * (1.0 + c * c);
    }
    Ok(s)
}

/// `ψ_α(z)` and `ψ_α'(z) = ψ₀'(z) + α/z²` in one pass.
pub fn eval_psi_and_prime(z: Complex64, g: &StarGraph, alpha: Complex64) -> Result<(Complex64, Complex64)> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroArgument);
    }
    let mut f = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &l in g.lengths() {
        let c = cot_reduced_c(z * l)?;
        f -= c;
        d += l * (1.0 + c * c);
    }
    let inv = 1.0 / z;
    Ok((f - alpha * inv, d + alpha * inv * inv))
}

/// `Φ(y) = 2 / Σ ℓ_j (1 + cot² y_j)`, extended by `0` at poles.
pub fn eval_phi(y: &[f64], g: &StarGraph) -> f64 {
    let mut s = 0.0;
    for (&v, &l) in y.iter().zip(g.lengths()) {
        match cot_reduced(v) {
            Ok(c) => s += l * (1.0 + c * c),
            Err(_) => return 0.0,
        }
    }
    2.0 / s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cot_examples() {
        assert!(cot_reduced(PI / 2.0).unwrap().abs() < 1e-16);
        assert_relative_eq!(cot_reduced(PI / 3.0).unwrap(), 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(cot_reduced(0.0), Err(Error::PoleProximity(_))));
        assert!(matches!(cot_reduced(PI), Err(Error::PoleProximity(_))));
    }

    #[test]
    fn complex_cot_saturates_and_matches_ratio() {
        assert_eq!(cot_reduced_c(c(0.3, 60.0)).unwrap(), c(0.0, -1.0));
        assert_eq!(cot_reduced_c(c(0.3, -60.0)).unwrap(), c(0.0, 1.0));
        let w = c(0.7, 0.4);
        let want = w.cos() / w.sin();
        assert_relative_eq!((cot_reduced_c(w).unwrap() - want).norm(), 0.0, epsilon = 1e-15);
        // Imaginary axis: cot(ib) = −i coth b.
        let b = 0.25f64;
        let got = cot_reduced_c(c(0.0, b)).unwrap();
        assert_relative_eq!(got.im, -1.0 / b.tanh(), epsilon = 1e-14);
    }

    #[test]
    fn determinant_examples() {
        let h = PI / 2.0;
        assert!(eval_fn(&[h, h, h]).abs() < 1e-15);
        assert_relative_eq!(eval_fn(&[0.0, h, h]), 1.0, epsilon = 1e-15);
        assert_relative_eq!(eval_fn(&[PI / 4.0, PI / 4.0]), 1.0, epsilon = 1e-15);
        assert_relative_eq!(eval_fd(&[h, h, h]), 1.0, epsilon = 1e-15);
        assert_eq!(eval_fd(&[0.0, 1.0]), 0.0);
        assert_relative_eq!(eval_fd(&[PI / 6.0, PI / 6.0]), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn psi_examples() {
        let g11 = StarGraph::unspecified(&[1.0, 1.0]).unwrap();
        let g12 = StarGraph::unspecified(&[1.0, 2.0]).unwrap();
        let zero = c(0.0, 0.0);
        assert!(eval_psi(c(PI / 2.0, 0.0), &g11, zero).unwrap().norm() < 1e-15);
        assert!(eval_psi(c(PI / 3.0, 0.0), &g12, zero).unwrap().norm() < 1e-15);
        let v = eval_psi(c(PI / 2.0, 0.0), &g11, c(1.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, -2.0 / PI, epsilon = 1e-15);
        assert_eq!(eval_psi(zero, &g11, zero), Err(Error::ZeroArgument));
        assert_relative_eq!(eval_psi0_prime(c(PI / 2.0, 0.0), &g11).unwrap().re, 2.0, epsilon = 1e-15);
        assert_relative_eq!(eval_psi0_prime(c(PI / 3.0, 0.0), &g12).unwrap().re, 4.0, epsilon = 1e-14);
        assert!(eval_psi0_second(c(PI / 2.0, 0.0), &g11).unwrap().norm() < 1e-15);
    }

    #[test]
    fn phi_examples() {
        let g = StarGraph::unspecified(&[1.0, 2.0]).unwrap();
        assert_relative_eq!(eval_phi(&[PI / 3.0, 2.0 * PI / 3.0], &g), 0.5, epsilon = 1e-15);
        assert_relative_eq!(eval_phi(&[PI / 2.0, PI / 2.0], &g), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(eval_phi(&[PI, 1.0], &g), 0.0);
    }

    #[test]
    fn torus_reduction() {
        assert_relative_eq!(reduce_two_pi(7.0), 7.0 - 2.0 * PI, epsilon = 1e-15);
        assert_relative_eq!(reduce_two_pi(-1.0), 2.0 * PI - 1.0, epsilon = 1e-15);
        assert_relative_eq!(reduce_two_pi(3.0 * PI + 0.5), PI + 0.5, epsilon = 1e-12);
    }

    #[test]
    fn secular_point_relation() {
        let p = SecularPoint::at(&[0.3, 1.1, 2.5]);
        assert_relative_eq!(p.psi.unwrap() * p.f_d, -p.f_n, max_relative = 1e-12);
    }

    fn graph3() -> StarGraph {
        StarGraph::independent(&[1.0, 2f64.sqrt(), PI]).unwrap()
    }

    proptest! {
        #[test]
        fn psi_relation_with_determinants(y in proptest::collection::vec(0.01f64..6.27, 2..5)) {
            prop_assume!(y.iter().all(|v| dist_to_pi_lattice(*v) > 1e-6));
            let p = SecularPoint::at(&y);
            let lhs = p.psi.unwrap() * p.f_d;
            prop_assert!((lhs + p.f_n).abs() <= 1e-12 * p.f_n.abs().max(1e-300) + 1e-15);
        }

        #[test]
        fn psi_prime_identity(t in 0.5f64..200.0) {
            let g = graph3();
            let d = g.lengths().iter().map(|l| dist_to_pi_lattice(t * l)).fold(f64::INFINITY, f64::min);
            prop_assume!(d > 1e-3);
            // Step scaled to the nearest pole keeps the O(h²) error tiny.
            let h = 1e-4 * d / PI;
            let zero = Complex64::new(0.0, 0.0);
            let fp = eval_psi(Complex64::new(t + h, 0.0), &g, zero).unwrap().re;
            let fm = eval_psi(Complex64::new(t - h, 0.0), &g, zero).unwrap().re;
            let fd = (fp - fm) / (2.0 * h);
            let exact = eval_psi0_prime(Complex64::new(t, 0.0), &g).unwrap().re;
            prop_assert!(((fd - exact) / exact).abs() < 1e-6);
        }

        #[test]
        fn phi_times_gradient_is_two(y in proptest::collection::vec(0.01f64..6.27, 3)) {
            let g = graph3();
            prop_assume!(y.iter().all(|v| dist_to_pi_lattice(*v) > 1e-6));
            let phi = eval_phi(&y, &g);
            let grad: f64 = y.iter().zip(g.lengths()).map(|(v, l)| l / v.sin().powi(2)).sum();
            prop_assert!((phi * grad - 2.0).abs() < 1e-10);
            prop_assert!(phi > 0.0 && phi <= g.phi_max() * (1.0 + 1e-15));
        }

        #[test]
        fn psi_is_pi_periodic(y in proptest::collection::vec(0.01f64..3.1, 3), j in 0usize..3) {
            prop_assume!(y.iter().all(|v| dist_to_pi_lattice(*v) > 1e-6));
            let mut shifted = y.clone();
            shifted[j] += PI;
            let a = eval_psi_torus(&y).unwrap();
            let b = eval_psi_torus(&shifted).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn psi_conjugation(re in 0.1f64..50.0, im in -3.0f64..3.0, ar in -3.0f64..3.0, ai in -3.0f64..3.0) {
            let g = graph3();
            let z = Complex64::new(re, im);
            let a = Complex64::new(ar, ai);
            let (Ok(v), Ok(w)) = (eval_psi(z, &g, a), eval_psi(z.conj(), &g, a.conj())) else {
                return Ok(());
            };
            prop_assert!((v.conj() - w).norm() <= 1e-12 * v.norm().max(1.0));
        }
    }
}
