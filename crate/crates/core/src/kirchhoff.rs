//! Spectrum of the Kirchhoff Laplacian `H₀`: regular roots of `Ψ(τℓ) = 0`,
//! one per gap of the Dirichlet spectrum, plus coincident eigenvalues at
//! multiple Dirichlet points.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{dirichlet_spectrum, DirichletPoint, StarGraph};
use crate::secular::{psi0_prime_real, psi_real, reduce_two_pi};

/// Bisection stops once the bracket is this narrow.
pub const BISECTION_WIDTH: f64 = 1e-6;
/// Newton stops once `|Ψ|` is below this.
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 30;
/// Tolerance used when checking that a `τ` is a regular root.
pub const ROOT_CHECK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EigenClass {
    Regular,
    Coincident { dirichlet_multiplicity: usize },
}

impl EigenClass {
    pub fn is_regular(&self) -> bool {
        matches!(self, EigenClass::Regular)
    }

    pub fn label(&self) -> &'static str {
        match self {
            EigenClass::Regular => "regular",
            EigenClass::Coincident { .. } => "coincident",
        }
    }

    pub fn dirichlet_multiplicity(&self) -> usize {
        match self {
            EigenClass::Regular => 1,
            EigenClass::Coincident { dirichlet_multiplicity } => *dirichlet_multiplicity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KirchhoffEigenvalue {
    pub index: usize,
    pub tau: f64,
    pub eigenvalue: f64,
    pub class: EigenClass,
    /// `1/ψ₀'(τ)`; only for regular entries.
    pub rho: Option<f64>,
    /// `τℓ mod 2π`.
    pub torus_point: Vec<f64>,
}

impl KirchhoffEigenvalue {
    pub fn rho_or_zero(&self) -> f64 {
        self.rho.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KirchhoffSpectrum {
    /// Every eigenvalue with `τ ≤ cutoff` is listed.
    pub cutoff: f64,
    pub total_length: f64,
    pub entries: Vec<KirchhoffEigenvalue>,
}

impl KirchhoffSpectrum {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.tau).collect()
    }

    /// Keeps the first `n` entries. The cutoff drops to the last kept value
    /// below the first dropped one, so a split coincident block never counts
    /// as covered.
    pub fn truncate(&mut self, n: usize) {
        if n >= self.entries.len() {
            return;
        }
        let dropped = self.entries[n].tau;
        self.entries.truncate(n);
        self.cutoff = self.entries.iter().rev().map(|e| e.tau).find(|&t| t < dropped).unwrap_or(0.0);
    }
}

/// Floor under which `|Ψ|` cannot be pushed in double precision at `τ`.
pub fn residual_floor(tau: f64, slope: f64) -> f64 {
    16.0 * f64::EPSILON * tau.abs().max(1.0) * slope.abs()
}

pub fn torus_point(g: &StarGraph, tau: f64) -> Vec<f64> {
    g.lengths().iter().map(|l| reduce_two_pi(tau * l)).collect()
}

/// Initial bracket strictly inside the gap `(lo, hi)`, with verified signs.
pub fn initial_bracket(g: &StarGraph, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let gap = hi - lo;
    let ulp = 8.0 * f64::EPSILON * hi;
    let off = (gap * 1e-6).max(ulp).min(gap / 4.0);
    let a = lo + off;
    let b = hi - off;
    let fail = || Error::BracketFailure { lo: a, hi: b };
    let fa = psi_real(g, a).map_err(|_| fail())?;
    let fb = psi_real(g, b).map_err(|_| fail())?;
    if fa < 0.0 && fb > 0.0 {
        Ok((a, b))
    } else {
        Err(fail())
    }
}

/// The unique root of the increasing function `τ ↦ Ψ(τℓ)` on `(lo, hi)`.
pub fn regular_root(g: &StarGraph, lo: f64, hi: f64) -> Result<f64> {
    let (mut a, mut b) = initial_bracket(g, lo, hi)?;
    while b - a > BISECTION_WIDTH {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let v = psi_real(g, m)?;
        if v == 0.0 {
            return Ok(m);
        }
        if v < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..NEWTON_MAX_ITER {
        let v = psi_real(g, x)?;
        if v.abs() <= NEWTON_TOL {
            break;
        }
        if v < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let d = psi0_prime_real(g, x)?;
        let mut next = x - v / d;
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 2.0 * f64::EPSILON * x || b - a <= 4.0 * f64::EPSILON * x {
            break;
        }
    }
    Ok(x)
}

/// `ρ = 1/ψ₀'(τ)` at a regular root.
pub fn rho(g: &StarGraph, tau: f64) -> Result<f64> {
    let slope = psi0_prime_real(g, tau).map_err(|_| Error::NotARegularRoot(tau))?;
    let v = psi_real(g, tau).map_err(|_| Error::NotARegularRoot(tau))?;
    if v.abs() > ROOT_CHECK_TOL.max(residual_floor(tau, slope)) {
        return Err(Error::NotARegularRoot(tau));
    }
    Ok(1.0 / slope)
}

/// All eigenvalues of `H₀` with `τ ≤ r`, in nondecreasing order.
pub fn kirchhoff_spectrum(g: &StarGraph, r: f64) -> Result<KirchhoffSpectrum> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("cutoff {r} must be positive")));
    }
    // One point past the cutoff on every edge closes the last gap.
    let reach = r + PI / g.min_length() * 1.01;
    let points = dirichlet_spectrum(g, reach);
    let mut walls: Vec<f64> = Vec::with_capacity(points.len() + 1);
    walls.push(0.0);
    walls.extend(points.iter().map(|p| p.tau));
    let gaps: Vec<(f64, f64)> = walls.windows(2).map(|w| (w[0], w[1])).filter(|(lo, _)| *lo < r).collect();
    let roots: Vec<Result<f64>> = gaps.par_iter().map(|&(lo, hi)| regular_root(g, lo, hi)).collect();

    let mut entries = Vec::new();
    let mut push = |tau: f64, class: EigenClass, rho: Option<f64>| {
        entries.push(KirchhoffEigenvalue {
            index: entries.len() + 1,
            tau,
            eigenvalue: tau * tau,
            class,
            rho,
            torus_point: torus_point(g, tau),
        });
    };
    for (k, root) in roots.into_iter().enumerate() {
        let tau = root?;
        if tau <= r {
            let slope = psi0_prime_real(g, tau)?;
            push(tau, EigenClass::Regular, Some(1.0 / slope));
        }
        if let Some(p) = points.get(k) {
            push_coincident(p, r, &mut push);
        }
    }
    Ok(KirchhoffSpectrum { cutoff: r, total_length: g.total_length(), entries })
}

fn push_coincident(p: &DirichletPoint, r: f64, push: &mut impl FnMut(f64, EigenClass, Option<f64>)) {
    if p.tau > r || p.multiplicity < 2 {
        return;
    }
    for _ in 1..p.multiplicity {
        push(p.tau, EigenClass::Coincident { dirichlet_multiplicity: p.multiplicity }, None);
    }
}

/// Eigenvalue count in `(r1, r2]` and its deviation from `|Γ|(r2−r1)/π`.
pub fn weyl_count(spectrum: &KirchhoffSpectrum, r1: f64, r2: f64) -> Result<(usize, f64)> {
    if r2 < r1 {
        return Err(Error::InvalidArgument(format!("window ({r1}, {r2}] is reversed")));
    }
    if r2 > spectrum.cutoff {
        return Err(Error::SpectrumTooShort { covered: spectrum.cutoff, requested: r2 });
    }
    if r1 == r2 {
        return Ok((0, 0.0));
    }
    let count = spectrum.entries.iter().filter(|e| e.tau > r1 && e.tau <= r2).count();
    Ok((count, count as f64 - spectrum.total_length * (r2 - r1) / PI))
}
