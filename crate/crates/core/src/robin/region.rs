//! Global location of the low Robin eigenvalues.
//!
//! The eigenvalues are the zeros, with multiplicity, of the entire function
//! `E(λ) = (z F_N(zℓ) + α F_D(zℓ)) / z^N`, `z = √λ` (even in `z`). All of them
//! with `Re λ < x_R` lie in the rectangle `[x_L, x_R] × [−c, c]`, which is cut
//! into vertical strips around the Newton candidates; each strip count is
//! compared with the candidates it holds, and strips that disagree are
//! searched by recursive subdivision.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::winding::{arg_change, round_count};
use super::{newton, VerificationParams};
use crate::error::{Error, Result};
use crate::graph::StarGraph;
use crate::kirchhoff::KirchhoffEigenvalue;
use crate::secular::sin_cos_scaled;

const MAX_DEPTH: usize = 60;
const COUNT_SLACK: f64 = 1e-3;
const SPLITS: [(f64, f64); 5] =
    [(0.4837, 0.5163), (0.4512, 0.5391), (0.5219, 0.4708), (0.4033, 0.5874), (0.5731, 0.4266)];

/// `E(λ)` times the positive factor `exp(−Σ|Im zℓ_j|)`.
pub(crate) fn e_scaled(g: &StarGraph, alpha: Complex64, lam: Complex64) -> Complex64 {
    let z = lam.sqrt();
    let ls = g.lengths();
    if z.norm() < 1e-8 {
        let prod: f64 = ls.iter().product();
        let inv: f64 = ls.iter().map(|l| 1.0 / l).sum();
        return (alpha + inv) * prod;
    }
    let sc: Vec<(Complex64, Complex64)> = ls.iter().map(|&l| sin_cos_scaled(z * l)).collect();
    let n = sc.len();
    let mut suffix = vec![Complex64::new(1.0, 0.0); n + 1];
    for j in (0..n).rev() {
        suffix[j] = suffix[j + 1] * sc[j].0;
    }
    let mut prefix = Complex64::new(1.0, 0.0);
    let mut fnn = Complex64::new(0.0, 0.0);
    for (j, &(s, c)) in sc.iter().enumerate() {
        fnn += prefix * c * suffix[j + 1];
        prefix *= s;
    }
    (z * fnn + alpha * suffix[0]) / z.powu(n as u32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Known {
    Regular(Complex64),
    Coincident(Complex64),
}

impl Known {
    fn lam(&self) -> Complex64 {
        match *self {
            Known::Regular(l) | Known::Coincident(l) => l,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn contains(&self, l: Complex64) -> bool {
        l.re > self.x0 && l.re < self.x1 && l.im > self.y0 && l.im < self.y1
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

struct Search<'a> {
    g: &'a StarGraph,
    alpha: Complex64,
    params: &'a VerificationParams,
}

impl Search<'_> {
    fn e(&self, lam: Complex64) -> Complex64 {
        e_scaled(self.g, self.alpha, lam)
    }

    /// Change of `arg E` along `p → q`.
    fn seg(&self, p: Complex64, q: Complex64) -> Option<f64> {
        // Phase speed of E along the z-path is about |Γ|.
        let mut arc = 0.0;
        let steps = 32;
        let mut prev = p.sqrt();
        for k in 1..=steps {
            let cur = (p + (q - p) * (k as f64 / steps as f64)).sqrt();
            let cur = if (cur - prev).norm() > (cur + prev).norm() { -cur } else { cur };
            arc += (cur - prev).norm();
            prev = cur;
        }
        let n = (2.0 * self.g.total_length() * arc).ceil() as usize + 8;
        arg_change(&|l| self.e(l), p, q, n)
    }

    fn count(&self, r: &Rect) -> Option<i64> {
        let a = Complex64::new(r.x0, r.y0);
        let b = Complex64::new(r.x1, r.y0);
        let c = Complex64::new(r.x1, r.y1);
        let d = Complex64::new(r.x0, r.y1);
        let total = self.seg(a, b)? + self.seg(b, c)? + self.seg(c, d)? + self.seg(d, a)?;
        round_count(total / (2.0 * PI), COUNT_SLACK)
    }

    fn newton_root(&self, lam0: Complex64) -> Option<Complex64> {
        let z0 = lam0.sqrt();
        let z0 = if z0.norm() < 1e-12 { Complex64::new(1e-3, 1e-3) } else { z0 };
        let o = newton(self.g, self.alpha, z0, self.params, None)?;
        o.converged.then(|| o.z * o.z)
    }

    /// Every zero in `r` given that there are `count` of them; returns the
    /// ones that are not coincident.
    fn search(&self, r: Rect, count: i64, mut known: Vec<Known>, depth: usize) -> Result<Vec<Complex64>> {
        let mismatch = |k: &[Known]| Error::RegionCountMismatch { expected: count.max(0) as usize, found: k.len() };
        known.retain(|k| r.contains(k.lam()));
        if known.len() as i64 > count {
            return Err(mismatch(&known));
        }
        if (known.len() as i64) < count {
            if let Some(l) = self.newton_root(r.center()) {
                if r.contains(l) && !known.iter().any(|k| close(k.lam(), l)) {
                    known.push(Known::Regular(l));
                }
            }
        }
        if known.len() as i64 == count {
            return Ok(regular_of(&known));
        }
        let diam = (r.x1 - r.x0).hypot(r.y1 - r.y0);
        if depth >= MAX_DEPTH || diam < 1e-9 * (1.0 + r.center().norm()) {
            return Err(mismatch(&known));
        }
        for &(fx, fy) in &SPLITS {
            let xm = r.x0 + fx * (r.x1 - r.x0);
            let ym = r.y0 + fy * (r.y1 - r.y0);
            let subs = [
                Rect { x0: r.x0, x1: xm, y0: r.y0, y1: ym },
                Rect { x0: xm, x1: r.x1, y0: r.y0, y1: ym },
                Rect { x0: xm, x1: r.x1, y0: ym, y1: r.y1 },
                Rect { x0: r.x0, x1: xm, y0: ym, y1: r.y1 },
            ];
            let counts: Option<Vec<i64>> = subs.iter().map(|s| self.count(s)).collect();
            let Some(counts) = counts else { continue };
            if counts.iter().sum::<i64>() != count || counts.iter().any(|&c| c < 0) {
                continue;
            }
            let mut out = Vec::new();
            for (s, &c) in subs.iter().zip(&counts) {
                if c > 0 {
                    out.extend(self.search(*s, c, known.clone(), depth + 1)?);
                }
            }
            return Ok(out);
        }
        Err(Error::ContourIllConditioned { index: 0, reason: "no usable split of a search cell".into() })
    }
}

fn regular_of(known: &[Known]) -> Vec<Complex64> {
    known
        .iter()
        .filter_map(|k| match k {
            Known::Regular(l) => Some(*l),
            Known::Coincident(_) => None,
        })
        .collect()
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-9 * (1.0 + a.norm())
}

/// Robin roots `z` (one per regular entry of `entries`, in order of `Re z`)
/// for all eigenvalues with `Re λ < x_right`.
///
/// `candidates[i]` is a Newton root already attached to `entries[i]`, if any.
pub(crate) fn locate_low(
    g: &StarGraph,
    alpha: Complex64,
    entries: &[KirchhoffEigenvalue],
    candidates: &[Option<Complex64>],
    x_right: f64,
    params: &VerificationParams,
) -> Result<Vec<Complex64>> {
    let a = alpha.norm();
    let x_left = -a * a - 1.0;
    let c = 2.0 * a * (a + (a * a + x_right.max(0.0)).sqrt()) + 1.0;
    let ctx = Search { g, alpha, params };
    let whole = Rect { x0: x_left, x1: x_right, y0: -c, y1: c };

    let mut known: Vec<Known> = Vec::new();
    for (e, cand) in entries.iter().zip(candidates) {
        if !e.class.is_regular() {
            known.push(Known::Coincident(Complex64::new(e.eigenvalue, 0.0)));
        } else if let Some(z) = cand {
            let l = z * z;
            if whole.contains(l) && !known.iter().any(|k| matches!(k, Known::Regular(_)) && close(k.lam(), l)) {
                known.push(Known::Regular(l));
            }
        }
    }
    known.sort_by(|p, q| p.lam().re.total_cmp(&q.lam().re));

    // Split lines sit halfway between distinct real parts.
    let mut lines = vec![x_left];
    for w in known.windows(2) {
        let (p, q) = (w[0].lam().re, w[1].lam().re);
        if q - p > 1e-9 * (1.0 + q.abs()) {
            lines.push(0.5 * (p + q));
        }
    }
    lines.push(x_right);

    let verticals: Vec<Option<f64>> =
        lines.par_iter().map(|&x| ctx.seg(Complex64::new(x, -c), Complex64::new(x, c))).collect();
    let strips: Vec<Result<(i64, Vec<Complex64>)>> = (0..lines.len() - 1)
        .into_par_iter()
        .map(|i| {
            let r = Rect { x0: lines[i], x1: lines[i + 1], y0: -c, y1: c };
            let inside: Vec<Known> = known.iter().copied().filter(|k| r.contains(k.lam())).collect();
            let fast = match (verticals[i], verticals[i + 1]) {
                (Some(vl), Some(vr)) => {
                    let b = ctx.seg(Complex64::new(r.x0, -c), Complex64::new(r.x1, -c));
                    let t = ctx.seg(Complex64::new(r.x1, c), Complex64::new(r.x0, c));
                    match (b, t) {
                        (Some(b), Some(t)) => round_count((b + vr + t - vl) / (2.0 * PI), COUNT_SLACK),
                        _ => None,
                    }
                }
                _ => None,
            };
            let n = match fast {
                Some(n) => n,
                None => ctx.count(&shrink(&r)).ok_or_else(|| Error::ContourIllConditioned {
                    index: 0,
                    reason: format!("zero on the boundary of strip [{}, {}]", r.x0, r.x1),
                })?,
            };
            if n == inside.len() as i64 {
                Ok((n, regular_of(&inside)))
            } else {
                Ok((n, ctx.search(r, n, inside, 0)?))
            }
        })
        .collect();

    let mut total = 0i64;
    let mut regular: Vec<Complex64> = Vec::new();
    for s in strips {
        let (n, roots) = s?;
        total += n;
        regular.extend(roots);
    }
    if total != entries.len() as i64 {
        return Err(Error::RegionCountMismatch { expected: entries.len(), found: total.max(0) as usize });
    }
    let n_regular = entries.iter().filter(|e| e.class.is_regular()).count();
    if regular.len() != n_regular {
        return Err(Error::RegionCountMismatch { expected: n_regular, found: regular.len() });
    }
    let mut zs: Vec<Complex64> = regular
        .into_iter()
        .map(|l| {
            let z = l.sqrt();
            match newton(g, alpha, z, params, None) {
                Some(o) if o.converged && (o.z * o.z - l).norm() <= 1e-6 * (1.0 + l.norm()) => o.z,
                _ => z,
            }
        })
        .map(|z| if z.re < 0.0 { -z } else { z })
        .collect();
    zs.sort_by(|p, q| p.re.total_cmp(&q.re).then(p.im.total_cmp(&q.im)));
    Ok(zs)
}

/// Same strip with its vertical sides nudged inward, for a retry.
fn shrink(r: &Rect) -> Rect {
    let w = r.x1 - r.x0;
    Rect { x0: r.x0 + 1e-7 * w, x1: r.x1 - 1.3e-7 * w, ..*r }
}
