//! Finite-difference model of the star graph Laplacian, used as an
//! independent oracle for eigenvalues.
//!
//! Each edge is cut into `m_j = round(ℓ_j/h)` cells with Dirichlet data at the
//! outer end. The centre row is a half-cell finite volume, so the discrete
//! quadratic form is `Σ|Δu|²/h_j + α|u_c|²` against the lumped mass. The
//! generalized problem is symmetrized by `M^{-1/2}`; the matrix is a tree,
//! so elimination from the leaves inward never fills in.

#![allow(dead_code)]

use num_complex::Complex64;

pub struct FdStar {
    h: Vec<f64>,
    /// Interior node count per edge.
    inner: Vec<usize>,
    centre_mass: f64,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl FdStar {
    pub fn new(lengths: &[f64], h: f64) -> Self {
        let cells: Vec<usize> = lengths.iter().map(|l| (l / h).round().max(2.0) as usize).collect();
        let h: Vec<f64> = lengths.iter().zip(&cells).map(|(l, m)| l / *m as f64).collect();
        let centre_mass = h.iter().sum::<f64>() / 2.0;
        FdStar { inner: cells.iter().map(|m| m - 1).collect(), h, centre_mass }
    }

    pub fn dim(&self) -> usize {
        1 + self.inner.iter().sum::<usize>()
    }

    fn centre_diag(&self, alpha: Complex64) -> Complex64 {
        (c(self.h.iter().map(|h| 1.0 / h).sum::<f64>()) + alpha) / self.centre_mass
    }

    /// Coupling between the centre and the first interior node of edge `j`.
    fn link(&self, j: usize) -> f64 {
        -1.0 / self.h[j] / (self.centre_mass * self.h[j]).sqrt()
    }

    /// Solves `(A − σ) y = b`; also returns the pivots.
    ///
    /// Vectors are laid out as `[centre, edge 0 (centre side first), edge 1, …]`.
    pub fn solve(&self, alpha: Complex64, sigma: Complex64, b: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut piv = vec![c(0.0); b.len()];
        let mut rhs = b.to_vec();
        let mut pc = self.centre_diag(alpha) - sigma;
        let mut rc = b[0];
        let mut off = 1;
        for (j, &m) in self.inner.iter().enumerate() {
            let h2 = self.h[j] * self.h[j];
            let (d, o) = (c(2.0 / h2) - sigma, -1.0 / h2);
            // Outer end first.
            for k in (0..m).rev() {
                let i = off + k;
                if k + 1 == m {
                    piv[i] = d;
                } else {
                    piv[i] = d - o * o / piv[i + 1];
                    rhs[i] = rhs[i] - o * rhs[i + 1] / piv[i + 1];
                }
            }
            let l = self.link(j);
            pc -= l * l / piv[off];
            rc -= l * rhs[off] / piv[off];
            off += m;
        }
        piv[0] = pc;
        let mut y = vec![c(0.0); b.len()];
        y[0] = rc / pc;
        let mut off = 1;
        for (j, &m) in self.inner.iter().enumerate() {
            let h2 = self.h[j] * self.h[j];
            let o = -1.0 / h2;
            y[off] = (rhs[off] - self.link(j) * y[0]) / piv[off];
            for k in 1..m {
                let i = off + k;
                y[i] = (rhs[i] - o * y[i - 1]) / piv[i];
            }
            off += m;
        }
        (y, piv)
    }

    pub fn apply(&self, alpha: Complex64, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![c(0.0); x.len()];
        y[0] = self.centre_diag(alpha) * x[0];
        let mut off = 1;
        for (j, &m) in self.inner.iter().enumerate() {
            let h2 = self.h[j] * self.h[j];
            let l = self.link(j);
            y[0] += l * x[off];
            for k in 0..m {
                let i = off + k;
                let mut v = 2.0 / h2 * x[i];
                if k == 0 {
                    v += l * x[0];
                } else {
                    v -= x[i - 1] / h2;
                }
                if k + 1 < m {
                    v -= x[i + 1] / h2;
                }
                y[i] = v;
            }
            off += m;
        }
        y
    }

    /// Number of eigenvalues below `sigma` for real `alpha`.
    pub fn count_below(&self, alpha: f64, sigma: f64) -> usize {
        let b = vec![c(0.0); self.dim()];
        let (_, piv) = self.solve(c(alpha), c(sigma), &b);
        piv.iter().filter(|p| p.re < 0.0).count()
    }

    /// The `k` smallest eigenvalues for real `alpha`, by bisection on the
    /// inertia count.
    pub fn lowest_real(&self, alpha: f64, k: usize) -> Vec<f64> {
        let mut hi = 1.0;
        while self.count_below(alpha, hi) < k {
            hi *= 2.0;
        }
        let lo0 = -alpha.abs() * alpha.abs() - 1.0 - self.h.iter().map(|h| 1.0 / h).sum::<f64>().abs();
        (0..k)
            .map(|i| {
                let (mut lo, mut up) = (lo0, hi);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + up);
                    if self.count_below(alpha, mid) > i {
                        up = mid;
                    } else {
                        lo = mid;
                    }
                    if up - lo <= 1e-13 * up.abs().max(1.0) {
                        break;
                    }
                }
                0.5 * (lo + up)
            })
            .collect()
    }

    fn rayleigh(&self, alpha: Complex64, x: &[Complex64]) -> Complex64 {
        let ax = self.apply(alpha, x);
        let num: Complex64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let den: Complex64 = x.iter().map(|a| a * a).sum();
        num / den
    }

    fn normalize(x: &mut [Complex64]) {
        let n = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        for v in x {
            *v /= n;
        }
    }

    /// Rayleigh quotient iteration (unconjugated quotient, the matrix being
    /// complex symmetric) from `(sigma, x)`.
    fn rqi(&self, alpha: Complex64, mut sigma: Complex64, mut x: Vec<Complex64>) -> (Complex64, Vec<Complex64>) {
        for _ in 0..30 {
            // Tiny offset keeps the shifted matrix invertible at convergence.
            let shift = sigma + Complex64::new(1e-13, 1e-13) * sigma.norm().max(1.0);
            let (mut y, _) = self.solve(alpha, shift, &x);
            Self::normalize(&mut y);
            let next = self.rayleigh(alpha, &y);
            x = y;
            let done = (next - sigma).norm() <= 1e-13 * next.norm().max(1.0);
            sigma = next;
            if done {
                break;
            }
        }
        (sigma, x)
    }

    /// The `k` lowest eigenvalues continued from `α = 0` to `alpha` in
    /// `steps` stages.
    pub fn lowest_continued(&self, alpha: Complex64, k: usize, steps: usize) -> Vec<Complex64> {
        let start = self.lowest_real(0.0, k);
        start
            .iter()
            .map(|&l0| {
                // Generic start vector: symmetric graphs have modes orthogonal
                // to any symmetric one.
                let mut x: Vec<Complex64> = (0..self.dim()).map(|i| c((1.0 + i as f64 * 0.7548776662).sin())).collect();
                let mut sigma = c(l0);
                for _ in 0..4 {
                    let (mut y, _) = self.solve(c(0.0), sigma + c(1e-9 * l0.max(1.0)), &x);
                    Self::normalize(&mut y);
                    x = y;
                }
                for s in 1..=steps {
                    let a = alpha * (s as f64 / steps as f64);
                    let (ns, nx) = self.rqi(a, sigma, x);
                    sigma = ns;
                    x = nx;
                }
                sigma
            })
            .collect()
    }
}
