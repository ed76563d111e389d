//! The limit distribution `μ_ℓ` of `δ_n(α)/α` on `[0, 2/|Γ|]`: exact atoms for
//! commensurable lengths, Monte-Carlo co-area quadrature for independent
//! lengths, and the empirical distribution of computed shifts.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{rational_rank, Rationality, StarGraph};
use crate::kirchhoff::{kirchhoff_spectrum, KirchhoffSpectrum};
use crate::robin::RobinEigenvalue;
use crate::secular::{cot_reduced, dist_to_pi_lattice};

pub const DEFAULT_BINS: usize = 64;
/// Draws with a coordinate this close to `πZ` are rejected.
pub const POLE_REJECT: f64 = 1e-12;
const CHUNK: usize = 4096;
const ATOM_MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MeasureKind {
    Atoms(Vec<(f64, f64)>),
    Histogram { bin_edges: Vec<f64>, masses: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub kind: MeasureKind,
    pub total_mass: f64,
    pub mc_stderr: f64,
    /// Right end `2/|Γ|` of the support interval.
    pub support_max: f64,
}

impl MeasureEstimate {
    /// `(location, mass)` pairs: atoms, or bin midpoints.
    pub fn points(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            MeasureKind::Atoms(a) => a.clone(),
            MeasureKind::Histogram { bin_edges, masses } => {
                bin_edges.windows(2).zip(masses).map(|(e, &m)| (0.5 * (e[0] + e[1]), m)).collect()
            }
        }
    }

    /// Mass of the histogram bin containing `s`, or of atoms within `tol`.
    pub fn mass_near(&self, s: f64, tol: f64) -> f64 {
        match &self.kind {
            MeasureKind::Atoms(a) => a.iter().filter(|(x, _)| (x - s).abs() <= tol).map(|(_, m)| m).sum(),
            MeasureKind::Histogram { bin_edges, masses } => {
                let b = bin_of(s, bin_edges[bin_edges.len() - 1], masses.len());
                masses[b]
            }
        }
    }
}

fn uniform_edges(support_max: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|k| support_max * k as f64 / bins as f64).collect()
}

fn bin_of(s: f64, support_max: f64, bins: usize) -> usize {
    let k = (s / support_max * bins as f64).floor();
    if k < 0.0 {
        0
    } else {
        (k as usize).min(bins - 1)
    }
}

/// One Monte-Carlo draw on the level set `Ψ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusSample {
    /// Coordinate solved for on the two branches.
    pub solved: usize,
    /// The other `N − 1` coordinates, uniform on `[0, 2π)`.
    pub y_rest: Vec<f64>,
    /// Solutions in `(0, π)` and `(π, 2π)`.
    pub branch_roots: [f64; 2],
    /// Surface weight `(ℓ·∇Ψ)·sin²(y_solved)` on each branch.
    pub weights: [f64; 2],
    /// `Φ` on each branch.
    pub phi: [f64; 2],
}

impl TorusSample {
    /// Full torus point on branch `b`.
    pub fn point(&self, b: usize) -> Vec<f64> {
        let mut y = self.y_rest.clone();
        y.insert(self.solved, self.branch_roots[b]);
        y
    }
}

/// Solves `Ψ(y) = 0` for coordinate `k` given the others; `None` if some
/// given coordinate is within `POLE_REJECT` of `πZ`.
pub fn torus_sample(g: &StarGraph, k: usize, y_rest: Vec<f64>) -> Option<TorusSample> {
    let ls = g.lengths();
    let mut rhs = 0.0;
    // Σ ℓ_j/sin² y_j over the given coordinates.
    let mut grad_rest = 0.0;
    for (i, &y) in y_rest.iter().enumerate() {
        if dist_to_pi_lattice(y) < POLE_REJECT {
            return None;
        }
        let c = cot_reduced(y).ok()?;
        rhs -= c;
        let j = if i < k { i } else { i + 1 };
        grad_rest += ls[j] * (1.0 + c * c);
    }
    // cot y_k = rhs; cot is a decreasing bijection of (0, π) onto R.
    let y0 = 1f64.atan2(rhs);
    let s_k = 1.0 + rhs * rhs;
    let grad = grad_rest + ls[k] * s_k;
    let w = grad / s_k;
    let phi = 2.0 / grad;
    Some(TorusSample { solved: k, y_rest, branch_roots: [y0, y0 + PI], weights: [w, w], phi: [phi, phi] })
}

/// Co-area Monte-Carlo estimate of `μ_ℓ` for independent lengths.
///
/// The level set is covered by the partition of unity
/// `χ_k = sin⁻²y_k / Σ_i sin⁻²y_i`, one chart per solved coordinate. In chart
/// `k` the weighted surface element is `χ_k·(ℓ·∇Ψ)·sin²y_k dy_rest`, which
/// is bounded by `max ℓ`, so the estimator has finite variance in every
/// dimension. Charts are picked uniformly and each branch deposits
/// `N·χ_k w_k / (2|Γ|M)`.
pub fn quadrature_measure(g: &StarGraph, samples: usize, bins: usize, seed: u64) -> Result<MeasureEstimate> {
    if !matches!(g.rationality(), Rationality::Independent) {
        return Err(Error::RequiresIndependentLengths);
    }
    if samples < 1000 || bins == 0 {
        return Err(Error::InvalidArgument(format!("need samples ≥ 1000 and bins ≥ 1, got {samples}, {bins}")));
    }
    let n = g.n_edges();
    let total_len = g.total_length();
    let support_max = 2.0 / total_len;
    let ls = g.lengths().to_vec();
    let n_chunks = samples.div_ceil(CHUNK);

    struct Partial {
        hist: Vec<f64>,
        sum: f64,
        sum_sq: f64,
        rejected: u64,
    }
    let parts: Vec<Partial> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut p = Partial { hist: vec![0.0; bins], sum: 0.0, sum_sq: 0.0, rejected: 0 };
            let mut done = 0;
            while done < count {
                let k = (c * CHUNK + done) % n;
                let y_rest: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
                let Some(ts) = torus_sample(g, k, y_rest) else {
                    p.rejected += 1;
                    continue;
                };
                // χ_k·w_k = Σ ℓ_i s_i / Σ s_i with s_i = 1/sin² y_i.
                let y = ts.point(0);
                let (mut num, mut den) = (0.0, 0.0);
                for (&v, &l) in y.iter().zip(&ls) {
                    let cv = cot_reduced(v).unwrap_or(0.0);
                    let s = 1.0 + cv * cv;
                    num += l * s;
                    den += s;
                }
                let per_branch = n as f64 * (num / den) / (2.0 * total_len);
                for b in 0..2 {
                    p.hist[bin_of(ts.phi[b], support_max, bins)] += per_branch;
                }
                let t = 2.0 * per_branch;
                p.sum += t;
                p.sum_sq += t * t;
                done += 1;
            }
            p
        })
        .collect();

    let mut hist = vec![0.0; bins];
    let (mut sum, mut sum_sq, mut rejected) = (0.0, 0.0, 0u64);
    for p in parts {
        for (h, v) in hist.iter_mut().zip(&p.hist) {
            *h += v;
        }
        sum += p.sum;
        sum_sq += p.sum_sq;
        rejected += p.rejected;
    }
    let drawn = samples as u64 + rejected;
    if rejected as f64 > 0.01 * drawn as f64 {
        return Err(Error::SampleNearPole { rejected, drawn });
    }
    let m = samples as f64;
    for h in &mut hist {
        *h /= m;
    }
    let mean = sum / m;
    let var = (sum_sq / m - mean * mean).max(0.0) * m / (m - 1.0);
    Ok(MeasureEstimate {
        kind: MeasureKind::Histogram { bin_edges: uniform_edges(support_max, bins), masses: hist },
        total_mass: mean,
        mc_stderr: (var / m).sqrt(),
        support_max,
    })
}

/// Exact atoms of `μ_ℓ` for commensurable lengths, from one spectral period.
pub fn rational_atoms(g: &StarGraph) -> Result<MeasureEstimate> {
    if !matches!(g.rationality(), Rationality::Rational { .. }) {
        return Err(Error::RequiresRationalLengths);
    }
    let period = rational_rank(g)?.period.expect("rational graph has a period");
    let reach = period * (1.0 + 1e-9);
    let ks = kirchhoff_spectrum(g, reach)?;
    let mut atoms: Vec<(f64, usize)> = Vec::new();
    for e in &ks.entries {
        let s = 2.0 * e.rho_or_zero();
        match atoms.iter_mut().find(|(x, _)| (x - s).abs() <= ATOM_MERGE_TOL) {
            Some(a) => a.1 += 1,
            None => atoms.push((s, 1)),
        }
    }
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let k = ks.len();
    Ok(MeasureEstimate {
        kind: MeasureKind::Atoms(atoms.into_iter().map(|(s, c)| (s, c as f64 / k as f64)).collect()),
        total_mass: 1.0,
        mc_stderr: 0.0,
        support_max: 2.0 / g.total_length(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution {
    pub estimate: MeasureEstimate,
    pub deltas: Vec<Complex64>,
    /// `max |Im(δ_n/α)|`.
    pub max_im_ratio: f64,
}

/// Histogram of `s_n = Re(δ_n/α)` clipped to `[0, 2/|Γ|]`.
pub fn empirical_delta_distribution(
    entries: &[RobinEigenvalue],
    total_length: f64,
    alpha: Complex64,
    bins: usize,
) -> Result<EmpiricalDistribution> {
    if alpha == Complex64::new(0.0, 0.0) {
        return Err(Error::AlphaZero);
    }
    if entries.len() < 100 || bins == 0 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 eigenvalues and one bin, got {} and {bins}",
            entries.len()
        )));
    }
    let support_max = 2.0 / total_length;
    let mut masses = vec![0.0; bins];
    let unit = 1.0 / entries.len() as f64;
    let mut max_im: f64 = 0.0;
    for e in entries {
        let r = e.delta / alpha;
        max_im = max_im.max(r.im.abs());
        let s = r.re.clamp(0.0, support_max);
        masses[bin_of(s, support_max, bins)] += unit;
    }
    Ok(EmpiricalDistribution {
        estimate: MeasureEstimate {
            kind: MeasureKind::Histogram { bin_edges: uniform_edges(support_max, bins), masses },
            total_mass: 1.0,
            mc_stderr: 0.0,
            support_max,
        },
        deltas: entries.iter().map(|e| e.delta).collect(),
        max_im_ratio: max_im,
    })
}

/// Atom masses spread onto histogram bins; an atom on an interior edge
/// (within `1e-9` of a bin width) is shared equally by both neighbours.
pub fn bin_atoms(atoms: &[(f64, f64)], bin_edges: &[f64]) -> Vec<f64> {
    let bins = bin_edges.len() - 1;
    let top = bin_edges[bins];
    let width = top / bins as f64;
    let mut out = vec![0.0; bins];
    for &(x, m) in atoms {
        let k = (x / width).round();
        if k >= 1.0 && (k as usize) < bins && (x - k * width).abs() <= 1e-9 * width {
            out[k as usize - 1] += 0.5 * m;
            out[k as usize] += 0.5 * m;
        } else {
            out[bin_of(x, top, bins)] += m;
        }
    }
    out
}

/// Per-atom comparison with a histogram: `(s, atom mass, histogram mass in
/// the bins that receive that atom)`.
pub fn atom_mass_errors(hist: &MeasureEstimate, atoms: &MeasureEstimate) -> Result<Vec<(f64, f64, f64)>> {
    let (MeasureKind::Histogram { bin_edges, masses }, MeasureKind::Atoms(list)) = (&hist.kind, &atoms.kind) else {
        return Err(Error::InvalidArgument("expected a histogram and an atomic estimate".into()));
    };
    check_support(hist, atoms)?;
    Ok(list
        .iter()
        .map(|&(x, m)| {
            let spread = bin_atoms(&[(x, 1.0)], bin_edges);
            let got: f64 = spread.iter().zip(masses).filter(|(w, _)| **w > 0.0).map(|(_, h)| h).sum();
            (x, m, got)
        })
        .collect())
}

fn check_support(a: &MeasureEstimate, b: &MeasureEstimate) -> Result<()> {
    let tol = 1e-12 * a.support_max.max(b.support_max);
    if (a.support_max - b.support_max).abs() > tol {
        return Err(Error::SupportMismatch(a.support_max, b.support_max));
    }
    Ok(())
}

/// Location/mass pairs of both estimates on a common footing: an atomic
/// estimate compared with a histogram is first binned onto its grid.
fn aligned(a: &MeasureEstimate, b: &MeasureEstimate) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let binned = |atoms: &[(f64, f64)], edges: &[f64]| -> Vec<(f64, f64)> {
        edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).zip(bin_atoms(atoms, edges)).collect()
    };
    match (&a.kind, &b.kind) {
        (MeasureKind::Atoms(x), MeasureKind::Histogram { bin_edges, .. }) => (binned(x, bin_edges), b.points()),
        (MeasureKind::Histogram { bin_edges, .. }, MeasureKind::Atoms(y)) => (a.points(), binned(y, bin_edges)),
        _ => (a.points(), b.points()),
    }
}

/// Both CDFs, normalized to unit mass, on the union of their locations.
fn cdfs(a: &MeasureEstimate, b: &MeasureEstimate) -> Result<Vec<(f64, f64, f64)>> {
    check_support(a, b)?;
    let (pa, pb) = aligned(a, b);
    let ma: f64 = pa.iter().map(|p| p.1).sum();
    let mb: f64 = pb.iter().map(|p| p.1).sum();
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    pts.extend(pa.into_iter().map(|(x, m)| (x, m / ma, 0.0)));
    pts.extend(pb.into_iter().map(|(x, m)| (x, 0.0, m / mb)));
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (mut fa, mut fb) = (0.0, 0.0);
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    for (x, da, db) in pts {
        fa += da;
        fb += db;
        match out.last_mut() {
            Some(last) if last.0 == x => {
                last.1 = fa;
                last.2 = fb;
            }
            _ => out.push((x, fa, fb)),
        }
    }
    Ok(out)
}

/// Kolmogorov–Smirnov distance between two estimates.
pub fn ks_distance(a: &MeasureEstimate, b: &MeasureEstimate) -> Result<f64> {
    Ok(cdfs(a, b)?.iter().map(|(_, fa, fb)| (fa - fb).abs()).fold(0.0, f64::max))
}

/// Wasserstein-1 distance, the `L¹` distance of the CDFs.
pub fn wasserstein1(a: &MeasureEstimate, b: &MeasureEstimate) -> Result<f64> {
    let c = cdfs(a, b)?;
    Ok(c.windows(2).map(|w| (w[0].1 - w[0].2).abs() * (w[1].0 - w[0].0)).sum())
}

/// Distance from a torus point to the strata where at least two coordinates
/// lie in `πZ`.
pub fn strata_distance(y: &[f64]) -> f64 {
    let mut d: Vec<f64> = y.iter().map(|&v| dist_to_pi_lattice(v)).collect();
    d.sort_by(f64::total_cmp);
    match d.len() {
        0 => 0.0,
        1 => d[0],
        _ => d[0].hypot(d[1]),
    }
}

/// Number of entries whose torus point lies within `eps` of the singular
/// strata, and the number of entries.
pub fn singular_count(g: &StarGraph, spectrum: &KirchhoffSpectrum, eps: f64) -> Result<(usize, usize)> {
    if !matches!(g.rationality(), Rationality::Independent) {
        return Err(Error::RequiresIndependentLengths);
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps {eps} must be nonnegative")));
    }
    let hits = spectrum.entries.iter().filter(|e| strata_distance(&e.torus_point) < eps).count();
    Ok((hits, spectrum.len()))
}

pub fn singular_fraction(g: &StarGraph, spectrum: &KirchhoffSpectrum, eps: f64) -> Result<f64> {
    let (hits, n) = singular_count(g, spectrum, eps)?;
    Ok(if n == 0 { 0.0 } else { hits as f64 / n as f64 })
}
