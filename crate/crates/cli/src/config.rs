//! Run configuration: the JSON file, command line overrides, and the
//! resolved form whose canonical JSON keys the cache.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use starspec_core::diophantine::{DEFAULT_EPS_FIT, RATIONAL_TOL};
use starspec_core::graph::{GraphDeclaration, DIRICHLET_MERGE_TOL};
use starspec_core::kirchhoff::{BISECTION_WIDTH, NEWTON_MAX_ITER, NEWTON_TOL, ROOT_CHECK_TOL};
use starspec_core::measure::{DEFAULT_BINS, POLE_REJECT};
use starspec_core::robin::{VerificationParams, CONTOUR_FLOOR, CONTOUR_SLACK, MAX_CONTOUR_NODES, SIGN_TOL};
use starspec_core::secular::{IMAG_GUARD, POLE_TOL};
use starspec_core::StarGraph;

use crate::error::CliError;

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_WINDOWS: usize = 1000;
pub const DEFAULT_K_MAX: usize = 64;

/// A number given either as JSON number or as decimal string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Decimal {
    Text(String),
    Value(f64),
}

impl Decimal {
    fn value(&self) -> Result<f64, CliError> {
        match self {
            Decimal::Value(v) => Ok(*v),
            Decimal::Text(s) => {
                s.trim().parse().map_err(|_| CliError::usage("ConfigInvalid", format!("{s:?} is not a decimal number")))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub gamma0: Option<f64>,
    pub contour_nodes: Option<usize>,
    pub newton_tol: Option<f64>,
    pub newton_max_iter: Option<usize>,
    pub eps_fit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: GraphDeclaration,
    #[serde(default)]
    pub alpha: Option<[Decimal; 2]>,
    #[serde(default, rename = "R")]
    pub r: Option<f64>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub tolerances: ToleranceOverrides,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub bins: Option<usize>,
    #[serde(default)]
    pub samples: Option<usize>,
    /// Random windows drawn by the Weyl command.
    #[serde(default)]
    pub windows: Option<usize>,
    /// Target `s` of the targeted subsequence.
    #[serde(default)]
    pub target: Option<f64>,
    /// Edge pair `(i, j)` of the small-ρ subsequence.
    #[serde(default)]
    pub pair: Option<[usize; 2]>,
    #[serde(default)]
    pub k_max: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage("ConfigNotFound", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage("ConfigInvalid", format!("{}: {e}", path.display())))
    }
}

/// Command line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alpha: Option<Complex64>,
    pub r: Option<f64>,
    pub n_max: Option<usize>,
    pub bins: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub target: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Range {
    #[serde(rename = "R")]
    Cutoff(f64),
    #[serde(rename = "n_max")]
    Count(usize),
}

/// Every tolerance that can affect a reported number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub gamma0: f64,
    pub contour_nodes: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub eps_fit: f64,
    pub max_contour_nodes: usize,
    pub contour_floor: f64,
    pub contour_slack: f64,
    pub pole_tol: f64,
    pub imag_guard: f64,
    pub dirichlet_merge_tol: f64,
    pub bisection_width: f64,
    pub kirchhoff_newton_tol: f64,
    pub kirchhoff_newton_max_iter: usize,
    pub root_check_tol: f64,
    pub sign_tol: f64,
    pub pole_reject: f64,
    pub rational_tol: f64,
}

impl Tolerances {
    pub fn params(&self) -> VerificationParams {
        VerificationParams {
            gamma0: self.gamma0,
            contour_nodes: self.contour_nodes,
            newton_tol: self.newton_tol,
            newton_max_iter: self.newton_max_iter,
        }
    }
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Run {
    pub graph: StarGraph,
    pub alpha: Complex64,
    pub range: Option<Range>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub out: PathBuf,
    pub bins: usize,
    pub samples: usize,
    pub windows: usize,
    pub target: Option<f64>,
    pub pair: (usize, usize),
    pub k_max: usize,
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::usage("ConfigInvalid", format!("{name} must be positive, got {v}")))
    }
}

fn positive_count(name: &str, v: usize) -> Result<usize, CliError> {
    if v > 0 {
        Ok(v)
    } else {
        Err(CliError::usage("ConfigInvalid", format!("{name} must be positive")))
    }
}

impl Run {
    pub fn resolve(cfg: RunConfig, o: Overrides) -> Result<Self, CliError> {
        let graph = cfg.graph.build()?;
        let alpha = match (o.alpha, &cfg.alpha) {
            (Some(a), _) => a,
            (None, Some([re, im])) => Complex64::new(re.value()?, im.value()?),
            (None, None) => Complex64::new(0.0, 0.0),
        };
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(CliError::usage("ConfigInvalid", format!("alpha {alpha} is not finite")));
        }
        let range = match (o.r, o.n_max) {
            (Some(_), Some(_)) => return Err(CliError::usage("ConfigInvalid", "give either --R or --n-max".into())),
            (Some(r), None) => Some(Range::Cutoff(r)),
            (None, Some(n)) => Some(Range::Count(n)),
            (None, None) => match (cfg.r, cfg.n_max) {
                (Some(_), Some(_)) => {
                    return Err(CliError::usage("ConfigInvalid", "config sets both R and n_max".into()))
                }
                (Some(r), None) => Some(Range::Cutoff(r)),
                (None, Some(n)) => Some(Range::Count(n)),
                (None, None) => None,
            },
        };
        match range {
            Some(Range::Cutoff(r)) => {
                positive("R", r)?;
            }
            Some(Range::Count(n)) => {
                positive_count("n_max", n)?;
            }
            None => {}
        }
        let base = VerificationParams::for_graph(&graph);
        let t = &cfg.tolerances;
        let tolerances = Tolerances {
            gamma0: positive("gamma0", t.gamma0.unwrap_or(base.gamma0))?,
            contour_nodes: positive_count("contour_nodes", t.contour_nodes.unwrap_or(base.contour_nodes))?,
            newton_tol: positive("newton_tol", t.newton_tol.unwrap_or(base.newton_tol))?,
            newton_max_iter: positive_count("newton_max_iter", t.newton_max_iter.unwrap_or(base.newton_max_iter))?,
            eps_fit: positive("eps_fit", t.eps_fit.unwrap_or(DEFAULT_EPS_FIT))?,
            max_contour_nodes: MAX_CONTOUR_NODES,
            contour_floor: CONTOUR_FLOOR,
            contour_slack: CONTOUR_SLACK,
            pole_tol: POLE_TOL,
            imag_guard: IMAG_GUARD,
            dirichlet_merge_tol: DIRICHLET_MERGE_TOL,
            bisection_width: BISECTION_WIDTH,
            kirchhoff_newton_tol: NEWTON_TOL,
            kirchhoff_newton_max_iter: NEWTON_MAX_ITER,
            root_check_tol: ROOT_CHECK_TOL,
            sign_tol: SIGN_TOL,
            pole_reject: POLE_REJECT,
            rational_tol: RATIONAL_TOL,
        };
        let pair = cfg.pair.map_or((1, 0), |[i, j]| (i, j));
        Ok(Run {
            graph,
            alpha,
            range,
            tolerances,
            seed: o.seed.unwrap_or(cfg.seed),
            out: o.out.or(cfg.output_dir).unwrap_or_else(|| PathBuf::from("starspec-out")),
            bins: positive_count("bins", o.bins.or(cfg.bins).unwrap_or(DEFAULT_BINS))?,
            samples: positive_count("samples", o.samples.or(cfg.samples).unwrap_or(DEFAULT_SAMPLES))?,
            windows: positive_count("windows", cfg.windows.unwrap_or(DEFAULT_WINDOWS))?,
            target: o.target.or(cfg.target),
            pair,
            k_max: positive_count("k_max", cfg.k_max.unwrap_or(DEFAULT_K_MAX))?,
        })
    }

    pub fn range(&self) -> Result<Range, CliError> {
        self.range.ok_or_else(|| {
            CliError::usage("MissingRange", "set R or n_max in the config, or pass --R / --n-max".into())
        })
    }

    /// Cutoff to compute up to, and the entry count to keep. A count is
    /// turned into a cutoff by the Weyl law with a 10% margin.
    pub fn cutoff(&self) -> Result<(f64, Option<usize>), CliError> {
        Ok(match self.range()? {
            Range::Cutoff(r) => (r, None),
            Range::Count(n) => {
                let g = &self.graph;
                (1.1 * (n + g.n_edges()) as f64 * std::f64::consts::PI / g.total_length(), Some(n))
            }
        })
    }

    /// Canonical description of everything that determines the outputs.
    pub fn canonical(&self, command: &str) -> serde_json::Value {
        serde_json::json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "graph": self.graph.canonical(),
            "alpha": [self.alpha.re, self.alpha.im],
            "range": self.range,
            "tolerances": self.tolerances,
            "seed": self.seed,
            "bins": self.bins,
            "samples": self.samples,
            "windows": self.windows,
            "target": self.target,
            "pair": [self.pair.0, self.pair.1],
            "k_max": self.k_max,
        })
    }
}

/// Parses `RE,IM` or `RE`.
pub fn parse_alpha(s: &str) -> Result<Complex64, String> {
    let mut parts = s.split(',');
    let re = parts.next().unwrap_or("").trim();
    let im = parts.next().unwrap_or("0").trim();
    if parts.next().is_some() {
        return Err(format!("{s:?}: expected RE,IM"));
    }
    let re: f64 = re.parse().map_err(|_| format!("{re:?} is not a number"))?;
    let im: f64 = im.parse().map_err(|_| format!("{im:?} is not a number"))?;
    Ok(Complex64::new(re, im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> RunConfig {
        serde_json::from_str(text).unwrap()
    }

    #[test]
    fn alpha_forms() {
        assert_eq!(parse_alpha("1,-2"), Ok(Complex64::new(1.0, -2.0)));
        assert_eq!(parse_alpha("0.5"), Ok(Complex64::new(0.5, 0.0)));
        assert!(parse_alpha("1,2,3").is_err());
        assert!(parse_alpha("x").is_err());
    }

    #[test]
    fn file_and_flags_merge() {
        let c =
            config(r#"{"graph": {"lengths": [1, 2], "rationality": "independent"}, "alpha": ["1", "0.5"], "R": 10}"#);
        let run = Run::resolve(c.clone(), Overrides::default()).unwrap();
        assert_eq!(run.alpha, Complex64::new(1.0, 0.5));
        assert_eq!(run.range, Some(Range::Cutoff(10.0)));
        let o = Overrides { n_max: Some(50), alpha: Some(Complex64::new(2.0, 0.0)), ..Default::default() };
        let run = Run::resolve(c, o).unwrap();
        assert_eq!(run.range, Some(Range::Count(50)));
        assert_eq!(run.alpha, Complex64::new(2.0, 0.0));
        let (r, keep) = run.cutoff().unwrap();
        assert_eq!(keep, Some(50));
        assert!(r > 50.0 * std::f64::consts::PI / 3.0);
    }

    #[test]
    fn invalid_configs() {
        let both = config(r#"{"graph": {"lengths": [1, 2]}, "R": 10, "n_max": 5}"#);
        assert_eq!(Run::resolve(both, Overrides::default()).unwrap_err().name(), "ConfigInvalid");
        let negative = config(r#"{"graph": {"lengths": [1, 2]}, "tolerances": {"newton_tol": -1}}"#);
        assert_eq!(Run::resolve(negative, Overrides::default()).unwrap_err().name(), "ConfigInvalid");
        assert!(
            serde_json::from_str::<RunConfig>(r#"{"graph": {"lengths": [1, 2]}, "tolerances": {"bogus": 1}}"#).is_err()
        );
        let bad_graph = config(r#"{"graph": {"lengths": [1, -2]}}"#);
        assert_eq!(Run::resolve(bad_graph, Overrides::default()).unwrap_err().name(), "NonPositiveLength");
    }

    #[test]
    fn canonical_form_ignores_output_dir() {
        let c = config(r#"{"graph": {"lengths": [1, 2]}, "R": 10}"#);
        let a = Run::resolve(c.clone(), Overrides { out: Some("a".into()), ..Default::default() }).unwrap();
        let b = Run::resolve(c, Overrides { out: Some("b".into()), ..Default::default() }).unwrap();
        assert_eq!(a.canonical("spectrum"), b.canonical("spectrum"));
        assert_ne!(a.canonical("spectrum"), a.canonical("weyl"));
    }
}
