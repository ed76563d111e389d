//! Invariant suite run by `starspec verify` on the configured graph.
//!
//! Only bounds that hold for every admissible configuration decide the exit
//! status; asymptotic statements (gap bound, strip bound, Robin counting) are
//! reported alongside without being counted.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use starspec_core::diophantine::continued_fraction;
use starspec_core::graph::{dirichlet_spectrum, progression, rational_rank, zero_eigenvalue_alpha, Rationality};
use starspec_core::kirchhoff::{residual_floor, weyl_count, EigenClass, ROOT_CHECK_TOL};
use starspec_core::measure::{empirical_delta_distribution, quadrature_measure, rational_atoms};
use starspec_core::robin::{psi_floor, robin_weyl_count, spectral_checks};
use starspec_core::secular::{eval_fd, eval_fn, eval_phi, eval_psi, eval_psi_and_prime, eval_psi_torus, psi_real};

use crate::commands::{robin_for, Output};
use crate::config::Run;
use crate::error::CliError;

/// Random torus points per secular identity.
const TORUS_POINTS: usize = 256;
/// Monte-Carlo tolerance for the quadrature mass, in standard errors.
const MASS_SIGMAS: f64 = 5.0;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Informational checks never fail the run.
    pub gating: bool,
    pub detail: String,
}

#[derive(Default)]
struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn gate(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check { name: name.into(), pass, gating: true, detail });
    }

    fn report(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check { name: name.into(), pass, gating: false, detail });
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn graph_checks(run: &Run, r: f64, s: &mut Suite) {
    let g = &run.graph;
    let merged = dirichlet_spectrum(g, r);
    let per_edge: usize = (0..g.n_edges()).map(|j| progression(g, j, r).len()).sum();
    let total: usize = merged.iter().map(|p| p.multiplicity).sum();
    s.gate("dirichlet_multiplicities", total == per_edge, format!("{total} merged vs {per_edge} per edge"));
    let sorted = merged.windows(2).all(|w| w[0].tau < w[1].tau);
    s.gate("dirichlet_strictly_increasing", sorted, format!("{} points", merged.len()));

    let a0 = zero_eigenvalue_alpha(g);
    let z = 1e-4;
    let v = eval_psi(Complex64::new(z, 0.0), g, Complex64::new(a0, 0.0)).map(|v| v.norm());
    // ψ tends to zΣℓ/3 at that coupling.
    let pass = v.as_ref().is_ok_and(|v| *v <= z * g.total_length());
    s.gate("zero_mode_coupling", pass, format!("alpha {a0:.6}, |psi({z})| = {v:?}"));

    if let Rationality::Rational { .. } = g.rationality() {
        match rational_rank(g) {
            Ok(info) => {
                let p = info.period.unwrap_or(f64::NAN);
                let worst = g
                    .lengths()
                    .iter()
                    .map(|l| {
                        let k = p * l / PI;
                        (k - k.round()).abs()
                    })
                    .fold(0.0, f64::max);
                s.gate("rational_period", worst <= 1e-9, format!("period {p}, max offset {worst:.2e}"));
            }
            Err(e) => s.gate("rational_period", false, e.to_string()),
        }
    }
}

fn secular_checks(run: &Run, s: &mut Suite) {
    let g = &run.graph;
    let n = g.n_edges();
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let (mut det_worst, mut per_worst, mut phi_bad) = (0.0f64, 0.0f64, 0usize);
    let phi_max = g.phi_max();
    for _ in 0..TORUS_POINTS {
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let Ok(psi) = eval_psi_torus(&y) else { continue };
        let (f_n, f_d) = (eval_fn(&y), eval_fd(&y));
        let cot_sum: f64 = y.iter().map(|v| (v.cos() / v.sin()).abs()).sum();
        let scale = f_n.abs() + f_d.abs() * cot_sum;
        det_worst = det_worst.max((psi * f_d + f_n).abs() / scale.max(f64::MIN_POSITIVE));
        let j = rng.gen_range(0..n);
        let mut shifted = y.clone();
        shifted[j] += PI;
        if let Ok(p2) = eval_psi_torus(&shifted) {
            per_worst = per_worst.max((p2 - psi).abs() / psi.abs().max(1.0));
        }
        let phi = eval_phi(&y, g);
        if !(0.0..=phi_max * (1.0 + 1e-12)).contains(&phi) {
            phi_bad += 1;
        }
    }
    s.gate("determinant_identity", det_worst <= 1e-10, format!("max relative defect {det_worst:.2e}"));
    s.gate("pi_periodicity", per_worst <= 1e-9, format!("max relative change {per_worst:.2e}"));
    s.gate("phi_range", phi_bad == 0, format!("{phi_bad} of {TORUS_POINTS} outside [0, 2/|Γ|]"));
}

fn kirchhoff_checks(run: &Run, k: &starspec_core::kirchhoff::KirchhoffSpectrum, s: &mut Suite) {
    let g = &run.graph;
    let n = g.n_edges();
    let d = dirichlet_spectrum(g, k.cutoff);
    let regular: Vec<f64> = k.entries.iter().filter(|e| e.class.is_regular()).map(|e| e.tau).collect();
    let mut bad = 0;
    let mut left = 0.0;
    for p in &d {
        let inside = regular.iter().filter(|&&t| t > left && t < p.tau).count();
        bad += usize::from(inside != 1);
        let at = k.entries.iter().filter(|e| !e.class.is_regular() && rel_close(e.tau, p.tau, 1e-10)).count();
        bad += usize::from(at != p.multiplicity - 1);
        left = p.tau;
    }
    s.gate("interlacing", bad == 0, format!("{bad} exceptions over {} Dirichlet points", d.len()));

    let mut worst: f64 = 0.0;
    let mut res_bad = 0;
    for e in k.entries.iter().filter(|e| e.class.is_regular()) {
        let slope = 1.0 / e.rho_or_zero();
        let v = psi_real(g, e.tau).map_or(f64::INFINITY, f64::abs);
        let tol = ROOT_CHECK_TOL.max(residual_floor(e.tau, slope));
        worst = worst.max(v / tol);
        res_bad += usize::from(v > tol);
    }
    s.gate("kirchhoff_residuals", res_bad == 0, format!("{res_bad} above tolerance, worst ratio {worst:.3}"));

    let coincident_ok = k.entries.iter().all(|e| match e.class {
        EigenClass::Regular => e.rho.is_some_and(|r| r > 0.0),
        EigenClass::Coincident { dirichlet_multiplicity } => dirichlet_multiplicity >= 2 && e.rho.is_none(),
    });
    s.gate("entry_classes", coincident_ok, format!("{} entries", k.len()));

    let mut rng = ChaCha8Rng::seed_from_u64(run.seed ^ 0x5eed);
    let mut max_defect: f64 = 0.0;
    for w in 0..=run.windows {
        let (a, b) = if w == 0 {
            (0.0, k.cutoff)
        } else {
            let (a, b): (f64, f64) = (rng.gen_range(0.0..k.cutoff), rng.gen_range(0.0..k.cutoff));
            (a.min(b), a.max(b))
        };
        match weyl_count(k, a, b) {
            Ok((_, def)) => max_defect = max_defect.max(def.abs()),
            Err(_) => max_defect = f64::INFINITY,
        }
    }
    // Per-edge floor errors add up to less than N, interlacing adds one more.
    s.gate(
        "weyl_defect",
        max_defect < (n + 1) as f64,
        format!("max |defect| {max_defect:.4} over {} windows, bound {}", run.windows + 1, n + 1),
    );
}

fn robin_checks(run: &Run, rs: &starspec_core::robin::RobinSpectrum, s: &mut Suite) {
    let g = &run.graph;
    let a = run.alpha;
    let consecutive = rs.entries.iter().enumerate().all(|(i, e)| e.index == i + 1);
    s.gate(
        "robin_indexing",
        consecutive && rs.len() == rs.kirchhoff.len(),
        format!("{} entries, {} Kirchhoff", rs.len(), rs.kirchhoff.len()),
    );
    let uncertified = rs.entries.iter().filter(|e| e.index >= rs.onset && !e.certified).count();
    s.gate("certified_from_onset", uncertified == 0, format!("onset {}, {uncertified} uncertified after it", rs.onset));

    let (mut res_bad, mut disk_bad, mut fixed_bad) = (0, 0, 0);
    let gamma0 = run.tolerances.gamma0;
    for e in &rs.entries {
        match e.class {
            EigenClass::Coincident { .. } => fixed_bad += usize::from(e.z != Complex64::new(e.tau, 0.0)),
            EigenClass::Regular if e.certified => {
                let tol = match eval_psi_and_prime(e.z, g, a) {
                    Ok((_, d)) => run.tolerances.newton_tol.max(psi_floor(e.z, d)),
                    Err(_) => 0.0,
                };
                res_bad += usize::from(!(e.residual <= tol));
                let radius = gamma0 * e.rho.unwrap_or(0.0);
                disk_bad += usize::from((e.z - e.tau).norm() > radius * (1.0 + 1e-6));
            }
            EigenClass::Regular => {}
        }
    }
    s.gate("robin_residuals", res_bad == 0, format!("{res_bad} certified entries above tolerance"));
    s.gate("disk_localization", disk_bad == 0, format!("{disk_bad} certified roots outside their disk"));
    s.gate("coincident_fixed", fixed_bad == 0, format!("{fixed_bad} coincident entries moved"));

    if a == Complex64::new(0.0, 0.0) {
        let moved = rs.entries.iter().filter(|e| e.delta.norm() > 1e-9 * e.eigenvalue.norm().max(1.0)).count();
        s.gate("zero_coupling_is_kirchhoff", moved == 0, format!("{moved} entries moved"));
    }

    match spectral_checks(rs) {
        Ok(rep) => {
            s.gate("imaginary_sign", rep.sign_violations == 0, format!("{} wrong-sign entries", rep.sign_violations));
            s.report(
                "gap_bound_from_onset",
                rep.gap_violations_from_onset == 0,
                format!(
                    "{} violations from onset, {} below, max |delta|/gap {:.4}",
                    rep.gap_violations_from_onset, rep.gap_violations_below_onset, rep.max_delta_over_gap
                ),
            );
            s.report(
                "strip_bound",
                rep.top_half_max_im <= rep.strip_bound * (1.0 + 1e-3),
                format!("top-half max |Im λ| {:.5}, bound {:.5}", rep.top_half_max_im, rep.strip_bound),
            );
        }
        Err(e) => s.gate("imaginary_sign", false, e.to_string()),
    }
    match robin_weyl_count(rs, 0.0, rs.cutoff) {
        Ok((_, d)) => s.report("robin_weyl_defect", d.abs() <= g.n_edges() as f64, format!("full-range defect {d:.4}")),
        Err(e) => s.report("robin_weyl_defect", false, e.to_string()),
    }
}

fn measure_checks(run: &Run, rs: &starspec_core::robin::RobinSpectrum, s: &mut Suite) {
    let g = &run.graph;
    match g.rationality() {
        Rationality::Rational { .. } => match rational_atoms(g) {
            Ok(m) => {
                let pts = m.points();
                let sum: f64 = pts.iter().map(|p| p.1).sum();
                let inside = pts.iter().all(|p| p.0 >= 0.0 && p.0 <= m.support_max * (1.0 + 1e-12));
                s.gate(
                    "atom_masses",
                    (sum - 1.0).abs() <= 1e-12 && inside,
                    format!("{} atoms, total {sum}", pts.len()),
                );
            }
            Err(e) => s.gate("atom_masses", false, e.to_string()),
        },
        Rationality::Independent => match quadrature_measure(g, run.samples, run.bins, run.seed) {
            Ok(m) => {
                let tol = MASS_SIGMAS * m.mc_stderr + 1e-12;
                s.gate(
                    "quadrature_mass",
                    (m.total_mass - 1.0).abs() <= tol,
                    format!("total {:.6}, stderr {:.2e}", m.total_mass, m.mc_stderr),
                );
            }
            Err(e) => s.gate("quadrature_mass", false, e.to_string()),
        },
        Rationality::Unspecified => {}
    }
    if run.alpha != Complex64::new(0.0, 0.0) && rs.len() >= 100 {
        match empirical_delta_distribution(&rs.entries, g.total_length(), run.alpha, run.bins) {
            Ok(e) => {
                let sum: f64 = e.estimate.points().iter().map(|p| p.1).sum();
                s.gate("empirical_mass", (sum - 1.0).abs() <= 1e-9, format!("total {sum}"));
            }
            Err(e) => s.gate("empirical_mass", false, e.to_string()),
        }
    }
}

fn diophantine_checks(run: &Run, s: &mut Suite) {
    let g = &run.graph;
    if !matches!(g.rationality(), Rationality::Independent) {
        return;
    }
    let (i, j) = run.pair;
    let l = g.lengths();
    if i >= l.len() || j >= l.len() || i == j {
        s.gate("convergents", false, format!("pair ({i}, {j}) is not two distinct edges"));
        return;
    }
    let x = l[i] / l[j];
    match continued_fraction(x, run.k_max) {
        Ok(cf) => {
            let c = &cf.convergents;
            let increasing = c.windows(2).all(|w| w[0].1 < w[1].1);
            let close = c.iter().all(|&(p, q)| {
                let q = q as f64;
                (x - p as f64 / q).abs() <= 1.0 / (q * q) * (1.0 + 1e-9)
            });
            s.gate("convergents", increasing && close && !c.is_empty(), format!("{} convergents of {x}", c.len()));
        }
        Err(e) => s.gate("convergents", false, e.to_string()),
    }
}

/// Runs every check; the output holds `verify.json`, and the second value
/// lists the failed gating checks.
pub fn verify(run: &Run) -> Result<(Output, Vec<String>), CliError> {
    let mut suite = Suite::default();
    let rs = robin_for(run)?;
    graph_checks(run, rs.cutoff, &mut suite);
    secular_checks(run, &mut suite);
    kirchhoff_checks(run, &rs.kirchhoff, &mut suite);
    robin_checks(run, &rs, &mut suite);
    measure_checks(run, &rs, &mut suite);
    diophantine_checks(run, &mut suite);

    let failed: Vec<String> = suite.checks.iter().filter(|c| c.gating && !c.pass).map(|c| c.name.clone()).collect();
    let summary = json!({ "passed": failed.is_empty(), "failed": failed, "checks": suite.checks });
    let mut bytes = serde_json::to_vec_pretty(&summary).expect("serializable");
    bytes.push(b'\n');
    Ok((Output { files: vec![("verify.json".into(), bytes)], summary, stages: Vec::new() }, failed))
}

/// One line per check, as printed on stdout.
pub fn lines(summary: &serde_json::Value) -> Vec<String> {
    summary["checks"]
        .as_array()
        .map(|cs| {
            cs.iter()
                .map(|c| {
                    let tag = match (c["pass"].as_bool(), c["gating"].as_bool()) {
                        (Some(true), _) => "ok  ",
                        (_, Some(true)) => "FAIL",
                        _ => "note",
                    };
                    format!("{tag} {}: {}", c["name"].as_str().unwrap_or(""), c["detail"].as_str().unwrap_or(""))
                })
                .collect()
        })
        .unwrap_or_default()
}
