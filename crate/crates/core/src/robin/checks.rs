//! Sign, strip and gap checks on a computed Robin spectrum.

use std::f64::consts::PI;

use serde::Serialize;

use super::RobinSpectrum;
use crate::error::{Error, Result};

pub const SIGN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    /// Entries with `Im λ` of the wrong sign beyond `SIGN_TOL`.
    pub sign_violations: usize,
    /// `max |Im λ|` over the upper half of the index range.
    pub top_half_max_im: f64,
    /// `2|Im α|/|Γ|`.
    pub strip_bound: f64,
    /// `max |δ_n| / gap_n`, where `gap_n` is the distance from `λ_n(0)` to the
    /// rest of the Kirchhoff spectrum.
    pub max_delta_over_gap: f64,
    pub gap_violations_below_onset: usize,
    pub gap_violations_from_onset: usize,
    pub onset: usize,
}

pub fn spectral_checks(s: &RobinSpectrum) -> Result<SpectralReport> {
    if s.entries.is_empty() {
        return Err(Error::InvalidArgument("empty Robin spectrum".into()));
    }
    let im_alpha = s.alpha.im;
    let wrong_sign = |im: f64| {
        if im.abs() <= SIGN_TOL {
            false
        } else if im_alpha == 0.0 {
            true
        } else {
            im.signum() != im_alpha.signum()
        }
    };
    let sign_violations = s.entries.iter().filter(|e| wrong_sign(e.eigenvalue.im)).count();
    let half = s.entries.len() / 2;
    let top_half_max_im = s.entries[half..].iter().map(|e| e.eigenvalue.im.abs()).fold(0.0, f64::max);

    let lam0: Vec<f64> = s.kirchhoff.entries.iter().map(|e| e.eigenvalue).collect();
    let gaps = distinct_gaps(&lam0, s.next_kirchhoff_eigenvalue);
    let mut max_ratio: f64 = 0.0;
    let (mut below, mut from) = (0, 0);
    for (e, gap) in s.entries.iter().zip(&gaps) {
        let d = e.delta.norm();
        if d == 0.0 {
            continue;
        }
        max_ratio = max_ratio.max(d / gap);
        if d > *gap {
            if e.index < s.onset {
                below += 1;
            } else {
                from += 1;
            }
        }
    }
    Ok(SpectralReport {
        sign_violations,
        top_half_max_im,
        strip_bound: 2.0 * im_alpha.abs() / s.total_length,
        max_delta_over_gap: max_ratio,
        gap_violations_below_onset: below,
        gap_violations_from_onset: from,
        onset: s.onset,
    })
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Distance from each value of a sorted list to the nearest different value.
pub(crate) fn distinct_gaps(sorted: &[f64], next: Option<f64>) -> Vec<f64> {
    let mut all: Vec<f64> = sorted.to_vec();
    all.extend(next);
    (0..sorted.len())
        .map(|i| {
            let v = all[i];
            let below = all[..i].iter().rev().find(|&&w| !same(w, v)).map(|w| v - w);
            let above = all[i + 1..].iter().find(|&&w| !same(w, v)).map(|w| w - v);
            match (below, above) {
                (Some(a), Some(b)) => a.min(b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => f64::INFINITY,
            }
        })
        .collect()
}

/// Count of entries with `Re z ∈ (r1, r2]` and its deviation from
/// `|Γ|(r2 − r1)/π`.
pub fn robin_weyl_count(s: &RobinSpectrum, r1: f64, r2: f64) -> Result<(usize, f64)> {
    if r2 < r1 {
        return Err(Error::InvalidArgument(format!("window ({r1}, {r2}] is reversed")));
    }
    if r2 > s.cutoff {
        return Err(Error::SpectrumTooShort { covered: s.cutoff, requested: r2 });
    }
    let n = s.entries.iter().filter(|e| e.z.re > r1 && e.z.re <= r2).count();
    Ok((n, n as f64 - s.total_length * (r2 - r1) / PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_skip_repeated_values() {
        let g = distinct_gaps(&[1.0, 4.0, 4.0, 6.0], Some(10.0));
        assert_eq!(g, vec![3.0, 2.0, 2.0, 2.0]);
        assert_eq!(distinct_gaps(&[2.0], None), vec![f64::INFINITY]);
    }
}
