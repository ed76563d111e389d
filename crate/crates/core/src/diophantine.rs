//! Subsequences of the Robin spectrum along which `δ_n(α)` converges:
//! towards `0` when `τ_n` is squeezed between nearly coincident Dirichlet
//! points, and towards `sα` when the torus orbit passes near a chosen point.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Rationality, StarGraph};
use crate::robin::{RobinEigenvalue, RobinSpectrum};
use crate::secular::reduce_two_pi;

/// Relative accuracy at which `x` counts as rational: the expansion stops
/// when the remainder or the error of the last convergent falls below it.
pub const RATIONAL_TOL: f64 = 1e-15;
pub const DEFAULT_EPS_FIT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergentSequence {
    pub x: f64,
    pub convergents: Vec<(u64, u64)>,
}

pub fn continued_fraction(x: f64, k_max: usize) -> Result<ConvergentSequence> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("continued fraction of {x}")));
    }
    let (mut p_prev, mut q_prev) = (0u128, 1u128);
    let (mut p, mut q) = (1u128, 0u128);
    let mut rem = x;
    let mut out = Vec::new();
    while out.len() < k_max {
        let a = rem.floor();
        let (np, nq) = match (a as u128)
            .checked_mul(p)
            .and_then(|v| v.checked_add(p_prev))
            .zip((a as u128).checked_mul(q).and_then(|v| v.checked_add(q_prev)))
        {
            Some((np, nq)) if np <= u64::MAX as u128 && nq <= u64::MAX as u128 => (np, nq),
            _ => break,
        };
        (p_prev, q_prev, p, q) = (p, q, np, nq);
        // A zero numerator (x < 1) is not a usable convergent, and a repeated
        // denominator (second partial quotient 1) supersedes the first one.
        if p > 0 {
            if out.last().is_some_and(|&(_, lq)| lq == q as u64) {
                out.pop();
            }
            out.push((p as u64, q as u64));
            // Past this point the remainder carries only rounding noise.
            if (x - p as f64 / q as f64).abs() <= RATIONAL_TOL * x {
                break;
            }
        }
        let frac = rem - a;
        if frac < RATIONAL_TOL {
            break;
        }
        rem = 1.0 / frac;
    }
    Ok(ConvergentSequence { x, convergents: out })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowHit {
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub index: Option<usize>,
    /// Torus distance of the selected point to the target point.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsequenceReport {
    pub indices: Vec<usize>,
    pub taus: Vec<f64>,
    pub values: Vec<Complex64>,
    pub target: Complex64,
    /// Minus the least-squares slope of `log|δ − target|` against `log λ(0)`.
    pub rate_exponent: Option<f64>,
    /// Exponent the bound constant is measured with.
    pub rate_claimed: f64,
    /// `max |δ − target|·λ(0)^rate_claimed`.
    pub bound_constant: f64,
    pub windows: Vec<WindowHit>,
    pub hit_ratio: f64,
    /// Set when the computed range ran out before all convergents were used.
    pub truncated: bool,
}

impl SubsequenceReport {
    pub fn distances(&self) -> Vec<f64> {
        self.values.iter().map(|v| (v - self.target).norm()).collect()
    }
}

/// Least-squares slope of `y` on `x`.
fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn build_report(
    picks: &[&RobinEigenvalue],
    target: Complex64,
    rate_claimed: f64,
    windows: Vec<WindowHit>,
    truncated: bool,
) -> SubsequenceReport {
    let lam: Vec<f64> = picks.iter().map(|e| e.tau * e.tau).collect();
    let dist: Vec<f64> = picks.iter().map(|e| (e.delta - target).norm()).collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) =
        lam.iter().zip(&dist).filter(|(_, d)| **d > 0.0).map(|(l, d)| (l.ln(), d.ln())).unzip();
    let rate_exponent = if lx.len() == lam.len() { slope(&lx, &ly).map(|s| -s) } else { None };
    let bound_constant = lam.iter().zip(&dist).map(|(l, d)| d * l.powf(rate_claimed)).fold(0.0, f64::max);
    let hit_ratio = if windows.is_empty() {
        1.0
    } else {
        windows.iter().filter(|w| w.index.is_some()).count() as f64 / windows.len() as f64
    };
    SubsequenceReport {
        indices: picks.iter().map(|e| e.index).collect(),
        taus: picks.iter().map(|e| e.tau).collect(),
        values: picks.iter().map(|e| e.delta).collect(),
        target,
        rate_exponent,
        rate_claimed,
        bound_constant,
        windows,
        hit_ratio,
        truncated,
    }
}

fn require_independent(g: &StarGraph) -> Result<()> {
    if matches!(g.rationality(), Rationality::Independent) {
        Ok(())
    } else {
        Err(Error::RequiresIndependentLengths)
    }
}

/// For each convergent `p/q` of `ℓ_i/ℓ_j`, the regular index with `τ`
/// between `πq/ℓ_j` and `πp/ℓ_i` (smallest `ρ` if several).
pub fn small_rho_subsequence(
    g: &StarGraph,
    (i, j): (usize, usize),
    spectrum: &RobinSpectrum,
    k_max: usize,
) -> Result<SubsequenceReport> {
    require_independent(g)?;
    let n = g.n_edges();
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidArgument(format!("edge pair ({i}, {j}) for {n} edges")));
    }
    let (li, lj) = (g.lengths()[i], g.lengths()[j]);
    let cf = continued_fraction(li / lj, k_max)?;
    let mut picks: Vec<&RobinEigenvalue> = Vec::new();
    let mut truncated = false;
    for &(p, q) in &cf.convergents {
        let a = PI * q as f64 / lj;
        let b = PI * p as f64 / li;
        let (lo, hi) = (a.min(b), a.max(b));
        if hi > spectrum.cutoff {
            truncated = true;
            break;
        }
        let best = spectrum
            .entries
            .iter()
            .filter(|e| e.class.is_regular() && e.tau > lo && e.tau < hi)
            .min_by(|x, y| x.rho.unwrap_or(f64::INFINITY).total_cmp(&y.rho.unwrap_or(f64::INFINITY)));
        if let Some(e) = best {
            if picks.last().is_none_or(|last| last.index < e.index) {
                picks.push(e);
            }
        }
    }
    if picks.is_empty() && truncated {
        return Err(Error::OutOfComputedRange(0));
    }
    Ok(build_report(&picks, Complex64::new(0.0, 0.0), 1.0, Vec::new(), truncated))
}

/// Torus point `(θ, π − θ, π/2, …, π/2)` with `Φ = s`.
pub fn target_point(g: &StarGraph, s: f64) -> Result<Vec<f64>> {
    let ls = g.lengths();
    let phi_max = 2.0 / g.total_length();
    if !(s > 0.0 && s <= phi_max * (1.0 + 1e-12)) {
        return Err(Error::InvalidTarget(s));
    }
    let rest: f64 = ls[2..].iter().sum();
    // (ℓ₁ + ℓ₂)/sin²θ + Σ_{j≥3} ℓ_j = 2/s.
    let sin2 = ((ls[0] + ls[1]) / (2.0 / s - rest)).min(1.0);
    let theta = sin2.sqrt().asin();
    let mut y = vec![PI / 2.0; ls.len()];
    y[0] = theta;
    y[1] = PI - theta;
    Ok(y)
}

fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Indices `n ≤ n_max` whose torus point is nearest to a point with
/// `Φ = s`, one per dyadic `τ` window, within radius `τ^(−1/(2N)+eps_fit)`.
pub fn targeted_subsequence(
    g: &StarGraph,
    spectrum: &RobinSpectrum,
    s: f64,
    n_max: usize,
    eps_fit: f64,
) -> Result<SubsequenceReport> {
    require_independent(g)?;
    let phi_max = 2.0 / g.total_length();
    if !(0.0..=phi_max * (1.0 + 1e-12)).contains(&s) {
        return Err(Error::InvalidTarget(s));
    }
    if n_max > spectrum.len() {
        return Err(Error::OutOfComputedRange(n_max));
    }
    let alpha = spectrum.alpha;
    if s == 0.0 {
        let mut r = small_rho_subsequence(g, (1, 0), spectrum, 64)?;
        let keep = r.indices.iter().take_while(|&&i| i <= n_max).count();
        let picks: Vec<&RobinEigenvalue> = r.indices[..keep].iter().map(|&i| &spectrum.entries[i - 1]).collect();
        let truncated = r.truncated || keep < r.indices.len();
        r = build_report(&picks, Complex64::new(0.0, 0.0), 1.0, Vec::new(), truncated);
        return Ok(r);
    }
    let y0 = target_point(g, s)?;
    let n = g.n_edges() as f64;
    let exponent = -1.0 / (2.0 * n) + eps_fit;
    let entries = &spectrum.entries[..n_max];
    let tau_max = entries.last().map_or(0.0, |e| e.tau);
    let mut edges = Vec::new();
    let mut t = 1.0;
    while t < tau_max {
        edges.push(t);
        t *= 2.0;
    }
    edges.push(t);
    let windows: Vec<(WindowHit, Option<&RobinEigenvalue>)> = edges
        .par_windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let best = entries
                .iter()
                .filter(|e| e.class.is_regular() && e.tau >= lo && e.tau < hi)
                .filter_map(|e| {
                    let y: Vec<f64> = g.lengths().iter().map(|l| reduce_two_pi(e.tau * l)).collect();
                    let d = torus_distance(&y, &y0);
                    (d <= e.tau.powf(exponent)).then_some((e, d))
                })
                .min_by(|a, b| a.1.total_cmp(&b.1));
            (
                WindowHit { tau_lo: lo, tau_hi: hi, index: best.map(|b| b.0.index), distance: best.map(|b| b.1) },
                best.map(|b| b.0),
            )
        })
        .collect();
    let picks: Vec<&RobinEigenvalue> = windows.iter().filter_map(|w| w.1).collect();
    let hits: Vec<WindowHit> = windows.into_iter().map(|w| w.0).collect();
    Ok(build_report(&picks, alpha * s, 1.0 / (2.0 * n) - eps_fit, hits, false))
}

/// `min |κ·ℓ|·‖κ‖^γ` over nonzero integer `κ` with `‖κ‖ ≤ kappa_norm_max`.
pub fn diophantine_quality(g: &StarGraph, gamma: f64, kappa_norm_max: f64) -> Result<f64> {
    require_independent(g)?;
    if !(1.0..=1e4).contains(&kappa_norm_max) || !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need gamma > 0 and 1 ≤ kappa_norm_max ≤ 1e4, got {gamma}, {kappa_norm_max}"
        )));
    }
    let ls = g.lengths();
    let n = ls.len();
    let k = kappa_norm_max.floor() as i64;
    let k2 = kappa_norm_max * kappa_norm_max;
    // The first coordinate splits the work; the last is scanned outward
    // from the value that nearly cancels the others.
    let best = (-k..=k)
        .into_par_iter()
        .map(|first| {
            let mut best = f64::INFINITY;
            let mut prefix = vec![0i64; n - 1];
            prefix[0] = first;
            scan_prefix(ls, gamma, k2, k, &mut prefix, 1, &mut best);
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}

fn scan_prefix(ls: &[f64], gamma: f64, k2: f64, k: i64, prefix: &mut Vec<i64>, pos: usize, best: &mut f64) {
    let n = ls.len();
    let used: f64 = prefix[..pos].iter().map(|&v| (v * v) as f64).sum();
    if used > k2 {
        return;
    }
    if pos < n - 1 {
        for v in -k..=k {
            prefix[pos] = v;
            scan_prefix(ls, gamma, k2, k, prefix, pos + 1, best);
        }
        prefix[pos] = 0;
        return;
    }
    let partial: f64 = prefix.iter().zip(ls).map(|(&v, l)| v as f64 * l).sum();
    let last_l = ls[n - 1];
    let centre = (-partial / last_l).round() as i64;
    let all_zero = prefix.iter().all(|&v| v == 0);
    for step in 0.. {
        let mut progressed = false;
        for c in if step == 0 { vec![centre] } else { vec![centre - step, centre + step] } {
            let norm2 = used + (c * c) as f64;
            if norm2 > k2 || (all_zero && c == 0) {
                continue;
            }
            let dot = (partial + c as f64 * last_l).abs();
            // ‖κ‖ ≥ 1, so dot alone bounds the product from below.
            if dot >= *best {
                continue;
            }
            progressed = true;
            *best = best.min(dot * norm2.sqrt().powf(gamma));
        }
        // |κ·ℓ| grows with the distance from the centre.
        let far = (step as f64 - 0.5).max(0.0) * last_l;
        if !progressed && (far >= *best || (step as f64) > 2.0 * k2.sqrt()) {
            break;
        }
    }
}
