mod common;

use std::f64::consts::PI;

use common::FdStar;
use proptest::prelude::*;
use starspec_core::error::Error;
use starspec_core::graph::{
    dirichlet_spectrum, merge_progressions, progression, rational_rank, zero_eigenvalue_alpha, DirichletPoint,
    GraphDeclaration,
};
use starspec_core::secular::dist_to_pi_lattice;
use starspec_core::StarGraph;

#[test]
fn constructors_and_guards() {
    let g = StarGraph::rational(1.0, &[(1, 1), (1, 1)]).unwrap();
    assert_eq!(g.lengths(), &[1.0, 1.0]);
    assert_eq!(g.total_length(), 2.0);
    let g = StarGraph::independent(&[1.0, std::f64::consts::SQRT_2, std::f64::consts::PI]).unwrap();
    assert!((g.total_length() - 5.555806).abs() < 1e-6);
    assert_eq!(StarGraph::unspecified(&[1.0, -1.0]), Err(Error::NonPositiveLength(-1.0)));
    assert_eq!(StarGraph::unspecified(&[1.0]), Err(Error::TooFewEdges(1)));
    assert!(matches!(StarGraph::rational(1.0, &[(1, 1), (0, 1)]), Err(Error::InconsistentRationalDeclaration(_))));
}

#[test]
fn declaration_from_json() {
    let d: GraphDeclaration =
        serde_json::from_str(r#"{"rationality": {"base": "0.5", "fractions": [[1, 1], [3, 2]]}}"#).unwrap();
    let g = d.build().unwrap();
    assert_eq!(g.lengths(), &[0.5, 0.75]);
    assert_eq!(rational_rank(&g).unwrap().rank, 1);
}

#[test]
fn dirichlet_examples() {
    let g = StarGraph::rational(1.0, &[(1, 1), (2, 1)]).unwrap();
    let pts: Vec<(f64, usize)> = dirichlet_spectrum(&g, 7.0).iter().map(|p| (p.tau, p.multiplicity)).collect();
    assert_eq!(pts, vec![(PI / 2.0, 1), (PI, 2), (1.5 * PI, 1), (2.0 * PI, 2)]);
    assert!(dirichlet_spectrum(&g, 1.0).is_empty());
    let g = StarGraph::rational(1.0, &[(1, 1), (1, 1)]).unwrap();
    let pts = dirichlet_spectrum(&g, 4.0);
    assert_eq!(pts.len(), 1);
    assert_eq!((pts[0].tau, pts[0].multiplicity), (PI, 2));
}

#[test]
fn rank_examples() {
    let g = StarGraph::rational(1.0, &[(1, 1), (1, 1)]).unwrap();
    assert_eq!(rational_rank(&g).unwrap().period, Some(PI));
    let g = StarGraph::rational(1.0, &[(1, 1), (2, 1)]).unwrap();
    let r = rational_rank(&g).unwrap();
    assert_eq!((r.rank, r.period), (1, Some(PI)));
    let g = StarGraph::independent(&[1.0, 2f64.sqrt()]).unwrap();
    let r = rational_rank(&g).unwrap();
    assert_eq!((r.rank, r.period), (2, None));
    let g = StarGraph::unspecified(&[1.0, 2.0]).unwrap();
    assert_eq!(rational_rank(&g), Err(Error::RationalityUndeclared));
}

#[test]
fn zero_mode_coupling_examples() {
    let a = |ls: &[f64]| zero_eigenvalue_alpha(&StarGraph::unspecified(ls).unwrap());
    assert_eq!(a(&[1.0, 1.0]).abs(), 2.0);
    assert_eq!(a(&[1.0, 2.0]).abs(), 1.5);
    assert_eq!(a(&[2.0, 2.0, 2.0]).abs(), 1.5);
}

#[test]
fn zero_mode_coupling_matches_finite_differences() {
    for ls in [vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 2f64.sqrt(), PI]] {
        let g = StarGraph::unspecified(&ls).unwrap();
        let alpha = zero_eigenvalue_alpha(&g);
        let fd = FdStar::new(&ls, 1e-3);
        // The discrete zero mode is exactly piecewise linear, so it stays at 0.
        assert!(fd.lowest_real(alpha, 1)[0].abs() < 1e-9, "{ls:?}");
        // The opposite sign gives a strictly positive spectrum.
        assert!(fd.lowest_real(-alpha, 1)[0] > 0.5, "{ls:?}");
    }
}

fn lengths_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..5.0, 2..5)
}

fn fractions_strategy() -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((1i64..7, 1i64..5), 2..5)
}

proptest! {
    #[test]
    fn dirichlet_counts_per_edge(ls in lengths_strategy(), r in 1.0f64..60.0) {
        let g = StarGraph::unspecified(&ls).unwrap();
        let pts = dirichlet_spectrum(&g, r);
        for (j, l) in ls.iter().enumerate() {
            let count = pts.iter().filter(|p| p.member_edges.contains(&j)).count();
            prop_assert_eq!(count, (r * l / PI).floor() as usize);
        }
        for p in &pts {
            prop_assert_eq!(p.multiplicity, p.member_edges.len());
            for &j in &p.member_edges {
                prop_assert!(dist_to_pi_lattice(p.tau * ls[j]) <= 1e-9 * p.tau * ls[j]);
            }
        }
        prop_assert!(pts.windows(2).all(|w| w[0].tau < w[1].tau));
    }

    #[test]
    fn merging_is_associative(fr in fractions_strategy(), r in 1.0f64..40.0) {
        let g = StarGraph::rational(1.0, &fr).unwrap();
        let lists: Vec<Vec<DirichletPoint>> = (0..fr.len()).map(|j| progression(&g, j, r)).collect();
        let at_once = merge_progressions(&lists);
        let mut pairwise = lists[0].clone();
        for l in &lists[1..] {
            pairwise = merge_progressions(&[pairwise, l.clone()]);
        }
        let mut reversed = lists.last().unwrap().clone();
        for l in lists.iter().rev().skip(1) {
            reversed = merge_progressions(&[l.clone(), reversed]);
        }
        prop_assert_eq!(&at_once, &pairwise);
        prop_assert_eq!(&at_once, &reversed);
        prop_assert_eq!(&at_once, &dirichlet_spectrum(&g, r));
    }

    #[test]
    fn rational_spectrum_repeats_each_period(fr in fractions_strategy(), shift in 0.0f64..1.0) {
        let g = StarGraph::rational(1.0, &fr).unwrap();
        let info = rational_rank(&g).unwrap();
        let (p, px) = (info.period.unwrap(), info.period_exact.unwrap());
        prop_assume!(p < 200.0);
        let t0 = shift * p;
        let pts = dirichlet_spectrum(&g, t0 + 3.0 * p);
        let window = |k: f64| -> Vec<_> {
            pts.iter()
                .filter(|q| q.tau > t0 + k * p && q.tau <= t0 + (k + 1.0) * p)
                .map(|q| (q.exact.unwrap(), q.multiplicity))
                .collect()
        };
        let first = window(0.0);
        let shifted: Vec<_> = first.iter().map(|&(x, m)| (x + px, m)).collect();
        prop_assert!(!first.is_empty());
        prop_assert_eq!(shifted, window(1.0));
    }
}
