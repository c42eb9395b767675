//! Detector certificates checked against direct density computations, and
//! the closure hull checked against a naive fixpoint over pair sets.

use std::collections::BTreeSet;

use num_rational::BigRational;
use proptest::prelude::*;

use mecdyn::density::hitting_density;
use mecdyn::exact::{parse_rational, ratio};
use mecdyn::folner::{Budget, FolnerFamily};
use mecdyn::gallery::{self, Profile, RelationKind};
use mecdyn::group::{GroupDescriptor, GroupElement};
use mecdyn::relations::{
    detect_proximal, forward_closure_negative, icer_hull, CertificateKind, FiniteModel, NegativeEvidence, Verdict,
};
use mecdyn::space::{ActionKind, Coord, Neighborhood, Point, Space, SystemPoint, Tail};

fn two_point() -> Space {
    Space::two_point(1, vec![], GroupDescriptor::Integers, ActionKind::Translate).unwrap()
}

fn ends() -> (SystemPoint, SystemPoint) {
    (SystemPoint::new(1, Coord::MinusInf), SystemPoint::new(1, Coord::PlusInf))
}

fn exact(text: &str) -> BigRational {
    parse_rational(text).unwrap()
}

/// Recomputes every accepted witness score from hitting densities on balls
/// around the target pair.
fn recheck_scores(space: &Space, cert: &mecdyn::relations::Certificate, family: &FolnerFamily, upper: Option<(u64, u64)>) {
    let b = Budget::default();
    for record in cert.witnesses.iter().filter(|r| r.accepted) {
        let u = Neighborhood::ball(cert.pair, exact(&record.radius.exact));
        for e in &record.entries {
            let want = match upper {
                None => hitting_density(space, &e.pair, &u, family, e.k, &b).unwrap().ratio_exact,
                Some((lo, hi)) => {
                    let start = lo + (hi - lo + 1) / 2;
                    (start..=hi)
                        .map(|n| hitting_density(space, &e.pair, &u, family, n, &b).unwrap().ratio_exact)
                        .max()
                        .unwrap()
                }
            };
            assert_eq!(exact(&e.score.exact), want, "k={} radius={}", e.k, record.radius.exact);
        }
    }
}

#[test]
fn the_two_ends_are_matched_sensitive() {
    let s = two_point();
    let (m, p) = ends();
    let family = FolnerFamily::ZInitial;
    let params = gallery::detector_params(&family, Profile::Quick);
    let cert = gallery::detect(RelationKind::SrjmsF, &s, &Point::Pair(m, p), &family, &params).unwrap();
    assert_eq!(cert.verdict, Verdict::Positive);
    assert_eq!(cert.kind, CertificateKind::SrjmsF);
    assert!(cert.witnesses.iter().any(|r| r.accepted));
    assert!(exact(&cert.threshold.clone().unwrap().exact) >= params.floor);
    recheck_scores(&s, &cert, &family, None);

    let json = serde_json::to_value(&cert).unwrap();
    assert_eq!(json["kind"], "SRJMS_F");
    assert_eq!(json["verdict"], "POSITIVE");
    assert!(json["parameters"]["radii"].is_array());
    assert!(json["witnesses"][0]["entries"][0]["score"]["exact"].is_string());
}

#[test]
fn upper_density_scores_are_window_maxima() {
    let s = two_point();
    let (m, p) = ends();
    let family = FolnerFamily::ZInitial;
    let mut params = gallery::detector_params(&family, Profile::Quick);
    params.window = (1, 60);
    params.ks = vec![5, 10];
    let cert = gallery::detect(RelationKind::QrmsF, &s, &Point::Pair(p, m), &family, &params).unwrap();
    recheck_scores(&s, &cert, &family, Some(params.window));
}

#[test]
fn isolated_diagonal_points_are_negative() {
    let s = two_point();
    let x = SystemPoint::int(1, 0);
    let family = FolnerFamily::ZInitial;
    let params = gallery::detector_params(&family, Profile::Quick);
    let cert = gallery::detect(RelationKind::QrmsF, &s, &Point::Pair(x, x), &family, &params).unwrap();
    assert_eq!(cert.verdict, Verdict::Negative);
    match cert.negative {
        Some(NegativeEvidence::IsolatedCoordinate { ref bounds, .. }) => {
            let (n, last) = bounds.last().unwrap();
            // At most one element of F_n lands a given orbit point on x.
            assert!(exact(&last.exact) <= ratio(1, *n as i64));
        }
        ref other => panic!("{other:?}"),
    }
    let err = gallery::detect(RelationKind::SwsmF, &s, &Point::Pair(x, x), &family, &params);
    assert!(err.is_err());
}

#[test]
fn the_diagonal_at_a_fixed_end_is_positive() {
    let s = two_point();
    let (m, _) = ends();
    let family = FolnerFamily::ZInitial;
    let params = gallery::detector_params(&family, Profile::Quick);
    for kind in [RelationKind::QrmsF, RelationKind::SrjmsF, RelationKind::QrmsBanach] {
        let cert = gallery::detect(kind, &s, &Point::Pair(m, m), &family, &params).unwrap();
        assert_eq!(cert.verdict, Verdict::Positive, "{kind:?}");
    }
}

/// Distance between the images of `Int(i)` and `Int(j)` on one copy.
fn gap(i: i64, j: i64) -> f64 {
    let pos = |s: i64| (1.0 + s as f64 / (1.0 + s.abs() as f64)) / 2.0;
    (pos(i) - pos(j)).abs()
}

#[test]
fn proximality_follows_the_layout() {
    let s = two_point();
    let elements: Vec<GroupElement> = (-100..=100).map(GroupElement::IntShift).collect();
    let (m, p) = ends();
    let far = detect_proximal(&s, &Point::Pair(m, p), &elements, 0.05).unwrap();
    assert_eq!(far.min_distance, 1.0);
    assert!(!far.proximal);
    let near = detect_proximal(&s, &Point::Pair(SystemPoint::int(1, 0), SystemPoint::int(1, 3)), &elements, 0.05)
        .unwrap();
    let want = (-100..=100).map(|a| gap(-a, 3 - a)).fold(f64::INFINITY, f64::min);
    assert!((near.min_distance - want).abs() < 1e-12);
    assert!(near.proximal);
}

#[test]
fn forward_closed_neighbourhoods_certify_negatives() {
    let entry = gallery::build("three-glued").unwrap();
    let s = &entry.space;
    let a = SystemPoint::new(1, Coord::MinusInf);
    let c = SystemPoint::new(2, Coord::MinusInf);
    let u1 = Neighborhood::PointSet {
        points: vec![Point::Single(a)],
        tails: vec![Tail::at_most(1, -1)],
    };
    let u2 = Neighborhood::PointSet {
        points: vec![Point::Single(c)],
        tails: vec![Tail::at_most(2, -1), Tail::at_most(3, -1)],
    };
    let u = Neighborhood::product(u1, u2);
    let cert = forward_closure_negative(s, &Point::Pair(a, c), &u, &FolnerFamily::ZInitial, 30, 60, &Budget::default())
        .unwrap();
    assert_eq!(cert.verdict, Verdict::Negative);
    assert_eq!(cert.kind, CertificateKind::NegativeForwardClosure);
    let json = serde_json::to_value(&cert).unwrap();
    assert_eq!(json["negative"]["kind"], "forward_closure");
}

/// Naive closure: iterate symmetry, transitivity and the class maps on
/// explicit pair sets until nothing changes.
fn naive_hull(model: &FiniteModel, relation: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    let n = model.len();
    let mut set: BTreeSet<(usize, usize)> = relation.iter().copied().collect();
    set.extend((0..n).map(|i| (i, i)));
    loop {
        let mut next = set.clone();
        for &(x, y) in &set {
            next.insert((y, x));
            for map in model.generators.iter().chain(model.approaches.iter()) {
                next.insert((map[x], map[y]));
            }
            for &(y2, z) in &set {
                if y == y2 {
                    next.insert((x, z));
                }
            }
        }
        if next == set {
            return set;
        }
        set = next;
    }
}

fn random_model() -> impl Strategy<Value = (FiniteModel, Vec<(usize, usize)>)> {
    (2usize..7).prop_flat_map(|n| {
        (
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            prop::collection::vec(prop::collection::vec(0..n, n), 0..3),
            prop::collection::vec((0..n, 0..n), 0..4),
        )
            .prop_map(move |(perm, approaches, relation)| {
                let classes = (0..n).map(|i| format!("c{i}")).collect();
                (FiniteModel::new(classes, vec![perm], approaches).unwrap(), relation)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hull_matches_the_naive_fixpoint((model, relation) in random_model()) {
        let hull = icer_hull(&model, &relation).unwrap();
        prop_assert_eq!(&hull.pairs, &naive_hull(&model, &relation));
        let again = icer_hull(&model, &hull.pairs.iter().copied().collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(again.pairs, hull.pairs);
    }
}

#[test]
fn glued_model_closes_the_chain() {
    let entry = gallery::build("three-glued").unwrap();
    let model = FiniteModel::from_space(&entry.space).unwrap();
    // Two glued limit points per side pattern, plus three orbits.
    assert_eq!(model.len(), 7);
    let a = model.class_of(&entry.space, SystemPoint::new(1, Coord::MinusInf)).unwrap();
    let d = model.class_of(&entry.space, SystemPoint::new(3, Coord::PlusInf)).unwrap();
    let b = model.class_of(&entry.space, SystemPoint::new(1, Coord::PlusInf)).unwrap();
    let hull = icer_hull(&model, &[(a, b), (b, d)]).unwrap();
    assert!(hull.pairs.contains(&(a, d)));
    assert!(hull.pairs.contains(&(d, a)));
    assert!(FiniteModel::from_space(&gallery::build("lamplighter").unwrap().space).is_err());
}
