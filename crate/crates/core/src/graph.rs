//! Metric star graphs: edge lengths, declared rational structure, the
//! Dirichlet spectrum with multiplicities, and the rank of the length lattice.

use std::f64::consts::PI;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational used for Dirichlet points of rational graphs, in units of `π/c`.
pub type Q = Ratio<i128>;

/// Relative merge tolerance for Dirichlet points of non-rational graphs.
pub const DIRICHLET_MERGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Rationality {
    /// Lengths declared rationally independent.
    Independent,
    /// `ℓ_j = base * p_j / q_j`.
    Rational { base: f64, fractions: Vec<(i64, i64)> },
    /// Plain floats; rational-only and independence-only operations refuse.
    Unspecified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarGraph {
    lengths: Vec<f64>,
    rationality: Rationality,
    total_length: f64,
}

impl StarGraph {
    /// Validates lengths and caches the total length.
    pub fn new(lengths: Vec<f64>, rationality: Rationality) -> Result<Self> {
        if let Rationality::Rational { base, fractions } = &rationality {
            return Self::rational(*base, fractions);
        }
        Self::checked(lengths, rationality)
    }

    pub fn independent(lengths: &[f64]) -> Result<Self> {
        Self::checked(lengths.to_vec(), Rationality::Independent)
    }

    pub fn unspecified(lengths: &[f64]) -> Result<Self> {
        Self::checked(lengths.to_vec(), Rationality::Unspecified)
    }

    /// Builds `ℓ_j = base * p_j / q_j`; lengths are never read back from floats.
    pub fn rational(base: f64, fractions: &[(i64, i64)]) -> Result<Self> {
        if !(base > 0.0) || !base.is_finite() {
            return Err(Error::NonPositiveLength(base));
        }
        if let Some(&(p, q)) = fractions.iter().find(|(p, q)| *p <= 0 || *q <= 0) {
            return Err(Error::InconsistentRationalDeclaration(format!("fraction {p}/{q} is not positive")));
        }
        let lengths = fractions.iter().map(|&(p, q)| base * p as f64 / q as f64).collect();
        Self::checked(lengths, Rationality::Rational { base, fractions: fractions.to_vec() })
    }

    fn checked(lengths: Vec<f64>, rationality: Rationality) -> Result<Self> {
        if lengths.len() < 2 {
            return Err(Error::TooFewEdges(lengths.len()));
        }
        if let Some(&l) = lengths.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::NonPositiveLength(l));
        }
        let total_length = lengths.iter().sum();
        Ok(StarGraph { lengths, rationality, total_length })
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn n_edges(&self) -> usize {
        self.lengths.len()
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn rationality(&self) -> &Rationality {
        &self.rationality
    }

    pub fn min_length(&self) -> f64 {
        self.lengths.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Upper end of the support of the limit measure, `2/|Γ|`.
    pub fn phi_max(&self) -> f64 {
        2.0 / self.total_length
    }

    /// Canonical text form, stable across runs; used for hashing.
    pub fn canonical(&self) -> String {
        let lens: Vec<String> = self.lengths.iter().map(|l| format!("{:?}", l)).collect();
        let rat = match &self.rationality {
            Rationality::Independent => "independent".to_string(),
            Rationality::Unspecified => "unspecified".to_string(),
            Rationality::Rational { base, fractions } => {
                let fr: Vec<String> = fractions.iter().map(|(p, q)| format!("{p}/{q}")).collect();
                format!("rational(base={:?};{})", base, fr.join(","))
            }
        };
        format!("lengths=[{}];rationality={}", lens.join(","), rat)
    }

    /// Reduced fractions `a_j / b_j` of a rational declaration.
    fn reduced_fractions(&self) -> Option<(f64, Vec<(i128, i128)>)> {
        match &self.rationality {
            Rationality::Rational { base, fractions } => Some((
                *base,
                fractions
                    .iter()
                    .map(|&(p, q)| {
                        let r = Q::new(p as i128, q as i128);
                        (*r.numer(), *r.denom())
                    })
                    .collect(),
            )),
            _ => None,
        }
    }
}

/// A point of the Dirichlet spectrum `T_∞` with the edges that vanish there.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPoint {
    pub tau: f64,
    pub multiplicity: usize,
    pub member_edges: Vec<usize>,
    /// `τ / (π/c)` for rational graphs.
    pub exact: Option<Q>,
}

/// The arithmetic progression `kπ/ℓ_j`, `k ≥ 1`, restricted to `(0, r]`.
pub fn progression(g: &StarGraph, j: usize, r: f64) -> Vec<DirichletPoint> {
    let l = g.lengths[j];
    let rational = g.reduced_fractions();
    let mut out = Vec::new();
    let mut k: i128 = 1;
    loop {
        let (tau, exact) = match &rational {
            Some((base, fr)) => {
                let (a, b) = fr[j];
                let x = Q::new(k * b, a);
                (rational_tau(*base, &x), Some(x))
            }
            None => (k as f64 * PI / l, None),
        };
        if tau > r {
            break;
        }
        out.push(DirichletPoint { tau, multiplicity: 1, member_edges: vec![j], exact });
        k += 1;
    }
    out
}

fn rational_tau(base: f64, x: &Q) -> f64 {
    PI / base * (*x.numer() as f64) / (*x.denom() as f64)
}

fn same_point(a: &DirichletPoint, b: &DirichletPoint) -> bool {
    match (&a.exact, &b.exact) {
        (Some(x), Some(y)) => x == y,
        _ => (a.tau - b.tau).abs() < DIRICHLET_MERGE_TOL * a.tau.max(b.tau),
    }
}

/// Merges sorted progressions into one strictly increasing list.
///
/// The representative `tau` of a merged group is the one contributed by the
/// lowest edge index, so the result does not depend on merge order.
pub fn merge_progressions(lists: &[Vec<DirichletPoint>]) -> Vec<DirichletPoint> {
    let mut all: Vec<DirichletPoint> = lists.iter().flatten().cloned().collect();
    all.sort_by(|a, b| a.tau.total_cmp(&b.tau).then(a.member_edges[0].cmp(&b.member_edges[0])));
    let mut out: Vec<DirichletPoint> = Vec::with_capacity(all.len());
    for p in all {
        if let Some(last) = out.last_mut() {
            if same_point(last, &p) {
                let lead_last = last.member_edges[0];
                let lead_new = p.member_edges[0];
                if lead_new < lead_last {
                    last.tau = p.tau;
                }
                last.member_edges.extend(p.member_edges);
                last.member_edges.sort_unstable();
                last.member_edges.dedup();
                last.multiplicity = last.member_edges.len();
                continue;
            }
        }
        out.push(p);
    }
    out
}

/// All points of `T_∞ ∩ (0, r]` with multiplicities, strictly increasing.
pub fn dirichlet_spectrum(g: &StarGraph, r: f64) -> Vec<DirichletPoint> {
    let lists: Vec<Vec<DirichletPoint>> = (0..g.n_edges()).map(|j| progression(g, j, r)).collect();
    merge_progressions(&lists)
}

/// Rank of the length lattice, with the spectral period in the rational case.
#[derive(Debug, Clone, PartialEq)]
pub struct RankInfo {
    pub rank: usize,
    /// Smallest `P > 0` with `Pℓ_j ∈ πZ` for all `j`.
    pub period: Option<f64>,
    /// The same period in units of `π/c`.
    pub period_exact: Option<Q>,
}

pub fn rational_rank(g: &StarGraph) -> Result<RankInfo> {
    match &g.rationality {
        Rationality::Unspecified => Err(Error::RationalityUndeclared),
        Rationality::Independent => Ok(RankInfo { rank: g.n_edges(), period: None, period_exact: None }),
        Rationality::Rational { .. } => {
            let (base, fr) = g.reduced_fractions().expect("rational graph");
            // P = (π/c)·x with x·a_j/b_j ∈ Z for all j: x = lcm(b)/gcd(a).
            let l = fr.iter().fold(1i128, |acc, &(_, b)| acc.lcm(&b));
            let d = fr.iter().fold(0i128, |acc, &(a, _)| acc.gcd(&a));
            let x = Q::new(l, d);
            Ok(RankInfo { rank: 1, period: Some(rational_tau(base, &x)), period_exact: Some(x) })
        }
    }
}

/// The coupling constant for which `0` is an eigenvalue: `−Σ 1/ℓ_j`.
///
/// With the vertex condition `Σ u_j'(ℓ_j) + α u(v) = 0` the zero mode is
/// `u_j(x) = x/ℓ_j`, which forces `α = −Σ 1/ℓ_j`.
pub fn zero_eigenvalue_alpha(g: &StarGraph) -> f64 {
    -g.lengths.iter().map(|l| 1.0 / l).sum::<f64>()
}

/// Graph declaration as read from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDeclaration {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
    #[serde(default)]
    pub rationality: RationalityDeclaration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalityDeclaration {
    Keyword(String),
    Rational { base: String, fractions: Vec<[i64; 2]> },
}

impl Default for RationalityDeclaration {
    fn default() -> Self {
        RationalityDeclaration::Keyword("unspecified".into())
    }
}

impl GraphDeclaration {
    pub fn build(&self) -> Result<StarGraph> {
        match &self.rationality {
            RationalityDeclaration::Rational { base, fractions } => {
                let c: f64 = base
                    .trim()
                    .parse()
                    .map_err(|_| Error::InconsistentRationalDeclaration(format!("base {base:?} is not a number")))?;
                let fr: Vec<(i64, i64)> = fractions.iter().map(|f| (f[0], f[1])).collect();
                let g = StarGraph::rational(c, &fr)?;
                if let Some(ls) = &self.lengths {
                    if ls.len() != fr.len() {
                        return Err(Error::InconsistentRationalDeclaration(
                            "lengths and fractions differ in count".into(),
                        ));
                    }
                }
                Ok(g)
            }
            RationalityDeclaration::Keyword(k) => {
                let lengths = self
                    .lengths
                    .clone()
                    .ok_or_else(|| Error::InvalidArgument("graph declaration has no lengths".into()))?;
                match k.to_ascii_lowercase().as_str() {
                    "independent" => StarGraph::checked(lengths, Rationality::Independent),
                    "unspecified" => StarGraph::checked(lengths, Rationality::Unspecified),
                    other => Err(Error::InvalidArgument(format!("unknown rationality {other:?}"))),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_declaration_materializes_lengths() {
        let g = StarGraph::rational(1.0, &[(1, 1), (1, 1)]).unwrap();
        assert_eq!(g.lengths(), &[1.0, 1.0]);
        assert_eq!(g.total_length(), 2.0);
    }

    #[test]
    fn independent_total_length() {
        let g = StarGraph::independent(&[1.0, std::f64::consts::SQRT_2, PI]).unwrap();
        assert!((g.total_length() - 5.555806).abs() < 1e-6);
    }

    #[test]
    fn guards() {
        assert_eq!(StarGraph::unspecified(&[1.0, -1.0]), Err(Error::NonPositiveLength(-1.0)));
        assert_eq!(StarGraph::unspecified(&[1.0]), Err(Error::TooFewEdges(1)));
        assert!(matches!(StarGraph::rational(1.0, &[(1, 1), (0, 2)]), Err(Error::InconsistentRationalDeclaration(_))));
        assert!(matches!(StarGraph::rational(1.0, &[(1, 1), (1, -2)]), Err(Error::InconsistentRationalDeclaration(_))));
    }

    fn taus_mults(ps: &[DirichletPoint]) -> Vec<(f64, usize)> {
        ps.iter().map(|p| (p.tau, p.multiplicity)).collect()
    }

    #[test]
    fn dirichlet_examples() {
        let g = StarGraph::rational(1.0, &[(1, 1), (2, 1)]).unwrap();
        let d = dirichlet_spectrum(&g, 7.0);
        let want = [(PI / 2.0, 1), (PI, 2), (1.5 * PI, 1), (2.0 * PI, 2)];
        assert_eq!(d.len(), want.len());
        for (got, w) in taus_mults(&d).iter().zip(want.iter()) {
            assert!((got.0 - w.0).abs() < 1e-14);
            assert_eq!(got.1, w.1);
        }
        let g11 = StarGraph::rational(1.0, &[(1, 1), (1, 1)]).unwrap();
        let d = dirichlet_spectrum(&g11, 4.0);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].multiplicity, 2);
        assert!((d[0].tau - PI).abs() < 1e-15);
        assert!(dirichlet_spectrum(&g, 1.0).is_empty());
    }

    #[test]
    fn float_lengths_merge_equal_progressions() {
        let g = StarGraph::unspecified(&[1.0, 1.0, 2.0]).unwrap();
        let d = dirichlet_spectrum(&g, 3.5);
        assert_eq!(taus_mults(&d).iter().map(|x| x.1).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn rank_examples() {
        let g = StarGraph::rational(1.0, &[(1, 1), (1, 1)]).unwrap();
        let r = rational_rank(&g).unwrap();
        assert_eq!(r.rank, 1);
        assert!((r.period.unwrap() - PI).abs() < 1e-15);
        let g = StarGraph::rational(1.0, &[(1, 1), (2, 1)]).unwrap();
        assert!((rational_rank(&g).unwrap().period.unwrap() - PI).abs() < 1e-15);
        // ℓ = (1/2, 1/3): P·(1/2) and P·(1/3) in πZ first at P = 6π.
        let g = StarGraph::rational(1.0, &[(1, 2), (1, 3)]).unwrap();
        assert!((rational_rank(&g).unwrap().period.unwrap() - 6.0 * PI).abs() < 1e-13);
        // ℓ = (2/3, 4/3)·c with c = 3: lengths (2, 4), period π/2.
        let g = StarGraph::rational(3.0, &[(2, 3), (4, 3)]).unwrap();
        assert!((rational_rank(&g).unwrap().period.unwrap() - PI / 2.0).abs() < 1e-15);
        let g = StarGraph::independent(&[1.0, 2f64.sqrt()]).unwrap();
        assert_eq!(rational_rank(&g).unwrap(), RankInfo { rank: 2, period: None, period_exact: None });
        let g = StarGraph::unspecified(&[1.0, 2.0]).unwrap();
        assert_eq!(rational_rank(&g), Err(Error::RationalityUndeclared));
    }

    #[test]
    fn zero_mode_coupling() {
        let g = StarGraph::unspecified(&[1.0, 1.0]).unwrap();
        assert_eq!(zero_eigenvalue_alpha(&g), -2.0);
        let g = StarGraph::unspecified(&[1.0, 2.0]).unwrap();
        assert_eq!(zero_eigenvalue_alpha(&g), -1.5);
        let g = StarGraph::unspecified(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(zero_eigenvalue_alpha(&g), -1.5);
    }

    #[test]
    fn declaration_json_shapes() {
        let d = GraphDeclaration {
            lengths: Some(vec![1.0, 2.0]),
            rationality: RationalityDeclaration::Keyword("independent".into()),
        };
        assert_eq!(d.build().unwrap().rationality(), &Rationality::Independent);
        let d = GraphDeclaration {
            lengths: None,
            rationality: RationalityDeclaration::Rational { base: "1".into(), fractions: vec![[1, 1], [1, 2]] },
        };
        assert_eq!(d.build().unwrap().lengths(), &[1.0, 0.5]);
    }
}
