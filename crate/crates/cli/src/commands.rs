//! The data-producing commands. Each returns its files in memory; writing,
//! caching and the manifest are handled by the caller.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use starspec_core::diophantine::{small_rho_subsequence, targeted_subsequence, SubsequenceReport};
use starspec_core::graph::Rationality;
use starspec_core::io;
use starspec_core::kirchhoff::{weyl_count, KirchhoffSpectrum};
use starspec_core::measure::{
    atom_mass_errors, empirical_delta_distribution, ks_distance, quadrature_measure, rational_atoms, wasserstein1,
    MeasureEstimate, MeasureKind,
};
use starspec_core::robin::{robin_spectrum, robin_weyl_count, spectral_checks, RobinSpectrum};
use starspec_core::Error;

use crate::config::Run;
use crate::error::CliError;

pub struct Output {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Value,
    pub stages: Vec<(String, f64)>,
}

struct Stages {
    last: Instant,
    done: Vec<(String, f64)>,
}

impl Stages {
    fn new() -> Self {
        Stages { last: Instant::now(), done: Vec::new() }
    }

    fn mark(&mut self, name: &str) {
        let now = Instant::now();
        self.done.push((name.to_string(), (now - self.last).as_secs_f64()));
        self.last = now;
    }
}

fn header(run: &Run) -> String {
    format!("graph {}\nalpha {},{}", run.graph.canonical(), run.alpha.re, run.alpha.im)
}

fn text(s: String) -> Vec<u8> {
    s.into_bytes()
}

fn json_bytes(v: &impl serde::Serialize) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}

/// Robin spectrum over the configured range, truncated to `n_max` if given.
pub fn robin_for(run: &Run) -> Result<RobinSpectrum, CliError> {
    let (r, keep) = run.cutoff()?;
    let mut s = robin_spectrum(&run.graph, run.alpha, r, &run.tolerances.params())?;
    if let Some(n) = keep {
        if s.len() < n {
            return Err(Error::SpectrumTooShort { covered: s.cutoff, requested: r }.into());
        }
        s.truncate(n);
    }
    Ok(s)
}

fn kirchhoff_for(run: &Run) -> Result<KirchhoffSpectrum, CliError> {
    let (r, keep) = run.cutoff()?;
    let mut k = starspec_core::kirchhoff::kirchhoff_spectrum(&run.graph, r)?;
    if let Some(n) = keep {
        if k.len() < n {
            return Err(Error::SpectrumTooShort { covered: k.cutoff, requested: r }.into());
        }
        k.truncate(n);
    }
    Ok(k)
}

pub fn spectrum(run: &Run) -> Result<Output, CliError> {
    let mut st = Stages::new();
    let s = robin_for(run)?;
    st.mark("robin_spectrum");
    let h = header(run);
    let files = vec![
        ("kirchhoff.csv".to_string(), text(io::kirchhoff_csv(&s.kirchhoff, Some(&h))?)),
        ("robin.csv".to_string(), text(io::robin_csv(&s.entries, Some(&h))?)),
    ];
    st.mark("write");
    let summary = json!({
        "eigenvalues": s.len(),
        "cutoff": s.cutoff,
        "onset": s.onset,
        "certified": s.entries.iter().filter(|e| e.certified).count(),
    });
    Ok(Output { files, summary, stages: st.done })
}

pub fn robin(run: &Run) -> Result<Output, CliError> {
    let mut st = Stages::new();
    let s = robin_for(run)?;
    st.mark("robin_spectrum");
    let report = spectral_checks(&s)?;
    st.mark("spectral_checks");
    let files = vec![
        ("robin.csv".to_string(), text(io::robin_csv(&s.entries, Some(&header(run)))?)),
        ("spectral_report.json".to_string(), json_bytes(&report)),
    ];
    let summary = json!({ "eigenvalues": s.len(), "onset": s.onset, "report": report });
    Ok(Output { files, summary, stages: st.done })
}

/// Exact atoms for rational graphs, quadrature for independent ones.
fn reference_measure(run: &Run) -> Result<Option<(&'static str, MeasureEstimate)>, CliError> {
    Ok(match run.graph.rationality() {
        Rationality::Rational { .. } => Some(("atoms", rational_atoms(&run.graph)?)),
        Rationality::Independent => {
            Some(("quadrature", quadrature_measure(&run.graph, run.samples, run.bins, run.seed)?))
        }
        Rationality::Unspecified => None,
    })
}

pub fn measure(run: &Run) -> Result<Output, CliError> {
    let mut st = Stages::new();
    let s = robin_for(run)?;
    st.mark("robin_spectrum");
    let emp = empirical_delta_distribution(&s.entries, run.graph.total_length(), run.alpha, run.bins)?;
    st.mark("empirical");
    let h = header(run);
    let mut files = vec![("empirical.csv".to_string(), text(io::measure_csv(&emp.estimate, Some(&h))?))];
    let mut summary = json!({
        "eigenvalues": s.len(),
        "bins": run.bins,
        "max_im_ratio": emp.max_im_ratio,
    });
    let mut series = vec![("empirical", &emp.estimate)];
    let reference = reference_measure(run)?;
    st.mark("reference");
    if let Some((name, m)) = &reference {
        files.push((format!("{name}.csv"), text(io::measure_csv(m, Some(&h))?)));
        summary["reference"] = json!(name);
        summary["ks"] = json!(ks_distance(&emp.estimate, m)?);
        summary["w1"] = json!(wasserstein1(&emp.estimate, m)?);
        summary["reference_total_mass"] = json!(m.total_mass);
        summary["reference_mc_stderr"] = json!(m.mc_stderr);
        if matches!(m.kind, MeasureKind::Atoms(_)) {
            let errs: Vec<Value> = atom_mass_errors(&emp.estimate, m)?
                .into_iter()
                .map(|(s, want, got)| json!({ "s": s, "atom_mass": want, "empirical_mass": got }))
                .collect();
            summary["atoms"] = Value::Array(errs);
        }
        series.push((name, m));
    }
    files.push(("measure.svg".to_string(), text(io::measure_svg(&series))));
    files.push(("measure.json".to_string(), json_bytes(&summary)));
    st.mark("compare");
    Ok(Output { files, summary, stages: st.done })
}

/// The full range followed by `run.windows` random windows inside it.
fn windows(run: &Run, cutoff: f64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut out = vec![(0.0, cutoff)];
    out.extend((0..run.windows).map(|_| {
        let (a, b): (f64, f64) = (rng.gen_range(0.0..cutoff), rng.gen_range(0.0..cutoff));
        (a.min(b), a.max(b))
    }));
    out
}

fn max_abs_defect(rows: &[(f64, f64, usize, f64)]) -> f64 {
    rows.iter().map(|r| r.3.abs()).fold(0.0, f64::max)
}

pub fn weyl(run: &Run) -> Result<Output, CliError> {
    let mut st = Stages::new();
    let k = kirchhoff_for(run)?;
    st.mark("kirchhoff_spectrum");
    let ws = windows(run, k.cutoff);
    let rows =
        ws.iter().map(|&(a, b)| weyl_count(&k, a, b).map(|(n, d)| (a, b, n, d))).collect::<Result<Vec<_>, _>>()?;
    let h = header(run);
    let mut files = vec![("weyl.csv".to_string(), text(io::weyl_csv(&rows, Some(&h))?))];
    let mut summary = json!({
        "cutoff": k.cutoff,
        "eigenvalues": k.len(),
        "windows": run.windows,
        "max_abs_defect": max_abs_defect(&rows),
        "edges": run.graph.n_edges(),
    });
    if run.alpha != Complex64::new(0.0, 0.0) {
        let s = robin_for(run)?;
        // Counted by Re z, so windows stay inside the range both lists cover.
        let top = s.cutoff.min(k.cutoff);
        let rows = windows(run, top)
            .iter()
            .map(|&(a, b)| robin_weyl_count(&s, a, b).map(|(n, d)| (a, b, n, d)))
            .collect::<Result<Vec<_>, _>>()?;
        files.push(("robin_weyl.csv".to_string(), text(io::weyl_csv(&rows, Some(&h))?)));
        summary["robin_max_abs_defect"] = json!(max_abs_defect(&rows));
        st.mark("robin_weyl");
    }
    st.mark("windows");
    Ok(Output { files, summary, stages: st.done })
}

fn subsequence_output(run: &Run, r: SubsequenceReport, mut st: Stages) -> Result<Output, CliError> {
    let files = vec![
        ("subsequence.csv".to_string(), text(io::subsequence_csv(&r, Some(&header(run)))?)),
        ("subsequence.json".to_string(), json_bytes(&r)),
    ];
    st.mark("write");
    let summary = json!({
        "hits": r.indices.len(),
        "rate_exponent": r.rate_exponent,
        "rate_claimed": r.rate_claimed,
        "bound_constant": r.bound_constant,
        "truncated": r.truncated,
    });
    Ok(Output { files, summary, stages: st.done })
}

pub fn small_rho(run: &Run) -> Result<Output, CliError> {
    let mut st = Stages::new();
    let s = robin_for(run)?;
    st.mark("robin_spectrum");
    let r = small_rho_subsequence(&run.graph, run.pair, &s, run.k_max)?;
    st.mark("subsequence");
    subsequence_output(run, r, st)
}

pub fn targeted(run: &Run) -> Result<Output, CliError> {
    let target =
        run.target.ok_or_else(|| CliError::usage("MissingTarget", "set target in the config or pass --s".into()))?;
    let mut st = Stages::new();
    let s = robin_for(run)?;
    st.mark("robin_spectrum");
    let r = targeted_subsequence(&run.graph, &s, target, s.len(), run.tolerances.eps_fit)?;
    st.mark("subsequence");
    subsequence_output(run, r, st)
}
