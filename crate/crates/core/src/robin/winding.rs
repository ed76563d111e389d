//! Zero counting by the argument principle: trapezoid quadrature of `f'/f`
//! on circles, and adaptive phase tracking along straight segments.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Raw value of `(1/2πi)∮ f'/f dz` on `C(center, radius)` with `m` nodes.
///
/// Nodes sit at half-integer angles so that doubling `m` never reuses a node.
/// Returns `None` when `|f|` drops below `floor` at some node.
pub fn circle_winding_raw<F>(center: Complex64, radius: f64, m: usize, floor: f64, f: F) -> Option<Complex64>
where
    F: Fn(Complex64) -> Option<(Complex64, Complex64)>,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..m {
        let theta = 2.0 * PI * (k as f64 + 0.5) / m as f64;
        let w = Complex64::from_polar(radius, theta);
        let (v, d) = f(center + w)?;
        if !(v.norm() >= floor) {
            return None;
        }
        acc += d / v * w;
    }
    Some(acc / m as f64)
}

fn phase(a: Complex64, b: Complex64) -> f64 {
    (b / a).arg()
}

/// Continuous change of `arg f` along the segment `p → q`.
///
/// `n_init` uniform samples are refined wherever consecutive phases differ
/// by more than π/4 or a midpoint disagrees. Returns `None` if a zero lies
/// too close to the segment to resolve.
pub fn arg_change<F>(f: &F, p: Complex64, q: Complex64, n_init: usize) -> Option<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let n = n_init.max(2);
    let mut total = 0.0;
    let mut prev_t = 0.0;
    let mut prev = f(p);
    if !finite_nonzero(prev) {
        return None;
    }
    for k in 1..=n {
        let t = k as f64 / n as f64;
        let v = f(p + (q - p) * t);
        if !finite_nonzero(v) {
            return None;
        }
        total += refine(f, p, q, prev_t, t, prev, v, 0)?;
        prev_t = t;
        prev = v;
    }
    Some(total)
}

fn finite_nonzero(v: Complex64) -> bool {
    v.re.is_finite() && v.im.is_finite() && v.norm() > 0.0
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    f: &F,
    p: Complex64,
    q: Complex64,
    t0: f64,
    t1: f64,
    f0: Complex64,
    f1: Complex64,
    depth: usize,
) -> Option<f64>
where
    F: Fn(Complex64) -> Complex64,
{
    let whole = phase(f0, f1);
    let tm = 0.5 * (t0 + t1);
    let fm = f(p + (q - p) * tm);
    if !finite_nonzero(fm) {
        return None;
    }
    let d1 = phase(f0, fm);
    let d2 = phase(fm, f1);
    let limit = PI / 4.0;
    if d1.abs() < limit && d2.abs() < limit && (d1 + d2 - whole).abs() < 1e-9 {
        return Some(d1 + d2);
    }
    if depth >= 48 {
        return None;
    }
    Some(refine(f, p, q, t0, tm, f0, fm, depth + 1)? + refine(f, p, q, tm, t1, fm, f1, depth + 1)?)
}

/// Rounds a raw winding number, refusing values far from an integer.
pub fn round_count(raw: f64, slack: f64) -> Option<i64> {
    let k = raw.round();
    if (raw - k).abs() <= slack {
        Some(k as i64)
    } else {
        None
    }
}
