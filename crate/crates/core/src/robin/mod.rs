//! Robin eigenvalues `λ_n(α) = z_n(α)²`: each Kirchhoff root is continued to
//! a root of `ψ_α`, certified in the disk `D(τ_n, γ₀ρ_n)` by a winding number,
//! and low indices that never enter their disk are found by a global
//! argument-principle search.

mod checks;
mod eigenfunction;
mod region;
pub mod winding;

use std::f64::consts::E;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

pub use checks::{robin_weyl_count, spectral_checks, SpectralReport, SIGN_TOL};
pub use eigenfunction::{eigenfunction_coefficients, EigenfunctionCoefficients};

use crate::error::{Error, Result};
use crate::graph::StarGraph;
use crate::kirchhoff::{kirchhoff_spectrum, EigenClass, KirchhoffEigenvalue, KirchhoffSpectrum};
use crate::secular::eval_psi_and_prime;

/// Contour node count is doubled up to this before giving up.
pub const MAX_CONTOUR_NODES: usize = 4096;
/// Smallest `|ψ_α|` accepted at a contour node.
pub const CONTOUR_FLOOR: f64 = 1e-8;
/// Largest accepted distance of the raw winding number from an integer.
pub const CONTOUR_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationParams {
    /// Disk radius factor `1/(16 e N)`.
    pub gamma0: f64,
    pub contour_nodes: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl VerificationParams {
    pub fn for_graph(g: &StarGraph) -> Self {
        VerificationParams {
            gamma0: 1.0 / (16.0 * E * g.n_edges() as f64),
            contour_nodes: 256,
            newton_tol: 1e-12,
            newton_max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobinEigenvalue {
    pub index: usize,
    pub alpha: Complex64,
    /// Kirchhoff root this eigenvalue is paired with.
    pub tau: f64,
    pub rho: Option<f64>,
    /// Square root of the eigenvalue with `Re z ≥ 0`.
    pub z: Complex64,
    pub eigenvalue: Complex64,
    /// `λ_n(α) − λ_n(0)`.
    pub delta: Complex64,
    /// `|ψ_α(z)|`; zero for coincident entries.
    pub residual: f64,
    /// Unique root in `D(τ, γ₀ρ)` confirmed by the winding number.
    pub certified: bool,
    pub class: EigenClass,
}

impl RobinEigenvalue {
    fn build(entry: &KirchhoffEigenvalue, alpha: Complex64, z: Complex64, residual: f64, certified: bool) -> Self {
        let z = if z.re < 0.0 { -z } else { z };
        let tau = entry.tau;
        RobinEigenvalue {
            index: entry.index,
            alpha,
            tau,
            rho: entry.rho,
            z,
            eigenvalue: z * z,
            delta: (z - tau) * (z + tau),
            residual,
            certified,
            class: entry.class,
        }
    }

    fn coincident(entry: &KirchhoffEigenvalue, alpha: Complex64) -> Self {
        let z = Complex64::new(entry.tau, 0.0);
        RobinEigenvalue {
            index: entry.index,
            alpha,
            tau: entry.tau,
            rho: None,
            z,
            eigenvalue: z * z,
            delta: Complex64::new(0.0, 0.0),
            residual: 0.0,
            certified: true,
            class: entry.class,
        }
    }
}

/// Smallest `|ψ_α|` reachable in double precision near `z`.
pub fn psi_floor(z: Complex64, slope: Complex64) -> f64 {
    16.0 * f64::EPSILON * z.norm().max(1.0) * slope.norm()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOutcome {
    pub z: Complex64,
    pub residual: f64,
    pub converged: bool,
}

/// Newton on `ψ_α`; with `disk = Some((c, r))` steps are halved until they
/// stay in the disk and decrease `|ψ_α|`.
pub(crate) fn newton(
    g: &StarGraph,
    alpha: Complex64,
    z0: Complex64,
    params: &VerificationParams,
    disk: Option<(f64, f64)>,
) -> Option<NewtonOutcome> {
    let mut z = z0;
    let (mut f, mut d) = eval_psi_and_prime(z, g, alpha).ok()?;
    for _ in 0..params.newton_max_iter {
        let res = f.norm();
        if !res.is_finite() {
            return None;
        }
        if res <= params.newton_tol || res <= psi_floor(z, d) {
            return Some(NewtonOutcome { z, residual: res, converged: true });
        }
        let step = f / d;
        let mut next = z - step;
        if let Some((c, r)) = disk {
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                next = z - step * t;
                if (next - c).norm() <= r {
                    if let Ok((fv, _)) = eval_psi_and_prime(next, g, alpha) {
                        if fv.norm() < res {
                            accepted = true;
                            break;
                        }
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                return Some(NewtonOutcome { z, residual: res, converged: false });
            }
        }
        if (next - z).norm() <= 4.0 * f64::EPSILON * z.norm() {
            let (fv, _) = eval_psi_and_prime(next, g, alpha).ok()?;
            return Some(NewtonOutcome { z: next, residual: fv.norm(), converged: true });
        }
        z = next;
        let (fv, dv) = eval_psi_and_prime(z, g, alpha).ok()?;
        f = fv;
        d = dv;
    }
    let res = f.norm();
    Some(NewtonOutcome { z, residual: res, converged: res <= params.newton_tol || res <= psi_floor(z, d) })
}

/// Winding number of `ψ_α` on `C(τ_n, γ₀ρ_n)`.
pub fn certify_disk(
    g: &StarGraph,
    alpha: Complex64,
    entry: &KirchhoffEigenvalue,
    params: &VerificationParams,
) -> Result<i64> {
    let rho = match (entry.class, entry.rho) {
        (EigenClass::Regular, Some(r)) => r,
        _ => return Err(Error::InvalidArgument("certification needs a regular entry".into())),
    };
    let center = Complex64::new(entry.tau, 0.0);
    let radius = params.gamma0 * rho;
    let eval = |z: Complex64| eval_psi_and_prime(z, g, alpha).ok();
    let mut m = params.contour_nodes.max(8);
    let mut last_reason = String::new();
    while m <= MAX_CONTOUR_NODES {
        match circle_winding(center, radius, m, &eval) {
            Ok(k) => return Ok(k),
            Err(reason) => last_reason = reason,
        }
        m *= 2;
    }
    Err(Error::ContourIllConditioned { index: entry.index, reason: last_reason })
}

fn circle_winding<F>(center: Complex64, radius: f64, m: usize, eval: &F) -> std::result::Result<i64, String>
where
    F: Fn(Complex64) -> Option<(Complex64, Complex64)>,
{
    let raw = winding::circle_winding_raw(center, radius, m, CONTOUR_FLOOR, eval)
        .ok_or_else(|| format!("|psi| below {CONTOUR_FLOOR:e} at a node"))?;
    let k = raw.re.round();
    if (raw - Complex64::new(k, 0.0)).norm() > CONTOUR_SLACK {
        return Err(format!("raw winding {raw} is not near an integer"));
    }
    Ok(k as i64)
}

/// Continues one Kirchhoff entry to the Robin root near it.
pub fn robin_eigenvalue(
    g: &StarGraph,
    alpha: Complex64,
    entry: &KirchhoffEigenvalue,
    params: &VerificationParams,
) -> Result<RobinEigenvalue> {
    let tau = entry.tau;
    let rho = match (entry.class, entry.rho) {
        (EigenClass::Regular, Some(r)) => r,
        _ => return Ok(RobinEigenvalue::coincident(entry, alpha)),
    };
    let center = Complex64::new(tau, 0.0);
    let radius = params.gamma0 * rho;
    let inside = |o: &NewtonOutcome| o.converged && (o.z - center).norm() <= radius;
    let seed = center + alpha * rho / tau;

    let plain = newton(g, alpha, seed, params, None);
    let mut found = plain.filter(inside);
    if found.is_none() {
        found = newton(g, alpha, seed, params, Some((tau, radius))).filter(inside);
    }
    if let Some(o) = found {
        let certified = certify_disk(g, alpha, entry, params)? == 1;
        return Ok(RobinEigenvalue::build(entry, alpha, o.z, o.residual, certified));
    }
    // The root is not where the seed points; if the disk holds exactly one
    // root, any Newton run that converges inside it has found that root.
    if let Ok(1) = certify_disk(g, alpha, entry, params) {
        let starts =
            (0..8).map(|k| center + Complex64::from_polar(0.5 * radius, k as f64 * std::f64::consts::FRAC_PI_4));
        for z0 in std::iter::once(center + Complex64::new(0.0, 0.25 * radius)).chain(starts) {
            if let Some(o) = newton(g, alpha, z0, params, Some((tau, radius))).filter(inside) {
                return Ok(RobinEigenvalue::build(entry, alpha, o.z, o.residual, true));
            }
        }
    }
    match plain {
        Some(o) if o.converged => Ok(RobinEigenvalue::build(entry, alpha, o.z, o.residual, false)),
        _ => Err(Error::NewtonDiverged { index: entry.index }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobinSpectrum {
    pub alpha: Complex64,
    pub cutoff: f64,
    pub total_length: f64,
    pub entries: Vec<RobinEigenvalue>,
    /// First index from which every entry is certified.
    pub onset: usize,
    /// The Kirchhoff spectrum on the same range.
    pub kirchhoff: KirchhoffSpectrum,
    /// `λ(0)` of the first Kirchhoff entry past the cutoff.
    pub next_kirchhoff_eigenvalue: Option<f64>,
}

impl RobinSpectrum {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keeps the first `n` entries, with the Kirchhoff list cut to match.
    pub fn truncate(&mut self, n: usize) {
        if n >= self.entries.len() {
            return;
        }
        self.next_kirchhoff_eigenvalue = Some(self.kirchhoff.entries[n].eigenvalue);
        self.entries.truncate(n);
        self.kirchhoff.truncate(n);
        self.cutoff = self.kirchhoff.cutoff;
    }
}

/// Robin eigenvalues for every Kirchhoff entry with `τ ≤ r`, same indexing.
pub fn robin_spectrum(g: &StarGraph, alpha: Complex64, r: f64, params: &VerificationParams) -> Result<RobinSpectrum> {
    let reach = r + 2.0 * std::f64::consts::PI / g.min_length();
    let ext = kirchhoff_spectrum(g, reach)?;
    let n_in = ext.entries.iter().filter(|e| e.tau <= r).count();

    let outcomes: Vec<Option<RobinEigenvalue>> =
        ext.entries.par_iter().map(|e| robin_eigenvalue(g, alpha, e, params).ok()).collect();
    let certified = |o: &Option<RobinEigenvalue>| o.as_ref().is_some_and(|x| x.certified);
    let low = outcomes.iter().rposition(|o| !certified(o)).map_or(0, |p| p + 1);

    let mut entries: Vec<RobinEigenvalue> = Vec::with_capacity(ext.len());
    if low > 0 {
        // Entries [0, low) go through the global search; if the tail of the
        // extended list is uncertified the last entry only marks the boundary.
        let (located, right) = if low < ext.len() {
            (low, right_boundary(&ext.entries, low, params))
        } else {
            let k = ext.len() - 1;
            if k < n_in || k == 0 {
                return Err(Error::RegionCountMismatch { expected: n_in, found: k });
            }
            let (a, b) = (ext.entries[k - 1].tau, ext.entries[k].tau);
            (k, (0.5 * (a + b)).powi(2))
        };
        let candidates: Vec<Option<Complex64>> = outcomes[..located].iter().map(|o| o.as_ref().map(|x| x.z)).collect();
        let zs = region::locate_low(g, alpha, &ext.entries[..located], &candidates, right, params)?;
        let mut it = zs.into_iter();
        for e in &ext.entries[..located] {
            if e.class.is_regular() {
                let z = it.next().expect("one root per regular entry");
                let residual = eval_psi_and_prime(z, g, alpha).map(|(f, _)| f.norm()).unwrap_or(f64::NAN);
                let mut rob = RobinEigenvalue::build(e, alpha, z, residual, false);
                if let Some(Some(prev)) = outcomes.get(e.index - 1) {
                    if prev.certified && (prev.z - rob.z).norm() <= 1e-9 * rob.z.norm().max(1.0) {
                        rob.certified = true;
                    }
                }
                entries.push(rob);
            } else {
                entries.push(RobinEigenvalue::coincident(e, alpha));
            }
        }
        entries.extend(outcomes[located..].iter().map(|o| o.clone().expect("certified entry")));
    } else {
        entries.extend(outcomes.into_iter().map(|o| o.expect("certified entry")));
    }
    let onset = entries.iter().rposition(|x| !x.certified).map_or(1, |p| p + 2);
    let next = ext.entries.get(n_in).map(|e| e.eigenvalue);
    entries.truncate(n_in);
    let kirchhoff =
        KirchhoffSpectrum { cutoff: r, total_length: ext.total_length, entries: ext.entries[..n_in].to_vec() };
    Ok(RobinSpectrum {
        alpha,
        cutoff: r,
        total_length: g.total_length(),
        entries,
        onset: onset.min(n_in + 1),
        kirchhoff,
        next_kirchhoff_eigenvalue: next,
    })
}

/// Vertical line `Re λ = x` separating the low region from certified disks.
fn right_boundary(entries: &[KirchhoffEigenvalue], first_certified: usize, params: &VerificationParams) -> f64 {
    let e = &entries[first_certified];
    let t2 = e.tau * e.tau;
    match e.rho {
        Some(rho) => {
            let r = params.gamma0 * rho;
            t2 - 2.0 * e.tau * r - 2.0 * r * r
        }
        None => {
            let prev = if first_certified > 0 { entries[first_certified - 1].eigenvalue } else { 0.0 };
            t2 - 0.25 * (t2 - prev)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kirchhoff::kirchhoff_spectrum;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma0_matches_definition() {
        let g = StarGraph::unspecified(&[1.0, 2.0, 3.0]).unwrap();
        let p = VerificationParams::for_graph(&g);
        assert_eq!(p.gamma0, 1.0 / (16.0 * E * 3.0));
    }

    #[test]
    fn alpha_zero_returns_kirchhoff() {
        let g = StarGraph::independent(&[1.0, 2f64.sqrt()]).unwrap();
        let params = VerificationParams::for_graph(&g);
        let s = robin_spectrum(&g, c(0.0, 0.0), 30.0, &params).unwrap();
        for (r, k) in s.entries.iter().zip(&s.kirchhoff.entries) {
            assert_eq!(r.z, c(k.tau, 0.0));
            assert_eq!(r.delta, c(0.0, 0.0));
            assert!(r.certified);
        }
        assert_eq!(s.onset, 1);
    }

    #[test]
    fn coincident_entry_is_untouched() {
        let g = StarGraph::rational(1.0, &[(1, 1), (2, 1)]).unwrap();
        let k = kirchhoff_spectrum(&g, 3.5).unwrap();
        let params = VerificationParams::for_graph(&g);
        let r = robin_eigenvalue(&g, c(0.7, -1.3), &k.entries[2], &params).unwrap();
        assert_eq!(r.z, c(PI, 0.0));
        assert_eq!(r.delta, c(0.0, 0.0));
    }

    #[test]
    fn equal_lengths_first_root_solves_secular_equation() {
        // Two unit edges: ψ_α = 0 reduces to 2 z cot z + α = 0.
        let g = StarGraph::unspecified(&[1.0, 1.0]).unwrap();
        let k = kirchhoff_spectrum(&g, 2.0).unwrap();
        let params = VerificationParams::for_graph(&g);
        let alpha = c(1.0, 0.0);
        let r = robin_eigenvalue(&g, alpha, &k.entries[0], &params).unwrap();
        let reduced = 2.0 * r.z * r.z.cos() / r.z.sin() + alpha;
        assert!(reduced.norm() < 1e-10);
        assert!(r.z.re > PI / 2.0 && r.z.re < PI);
        assert!(r.z.im.abs() < 1e-12);
    }
}
