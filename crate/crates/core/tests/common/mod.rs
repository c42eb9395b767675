//! Property checks shared by the proptest suite and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use proptest::sample::Index;
use proptest::test_runner::TestCaseError;

use mecdyn::density::hitting_density;
use mecdyn::exact::ratio;
use mecdyn::folner::{Budget, FolnerFamily};
use mecdyn::gallery::{self, Check, GalleryEntry, Profile, RelationKind, NAMES};
use mecdyn::group::{GroupDescriptor, GroupElement};
use mecdyn::measures::{support_union_estimate, w1, AtomicMeasure};
use mecdyn::relations::{ClosureProbe, DetectorParams, Verdict};
use mecdyn::space::{Neighborhood, Point, Space, SystemPoint};

pub fn entries() -> Vec<GalleryEntry> {
    NAMES.iter().map(|n| gallery::build(n).unwrap()).collect()
}

fn pick<T: Copy>(items: &[T], i: &Index) -> T {
    items[i.index(items.len())]
}

/// `n` small enough for the lamp box, larger over ℤ.
fn index_for(family: &FolnerFamily, n: u64) -> u64 {
    if family.required_group() == Some(GroupDescriptor::Lamplighter) {
        1 + n % 6
    } else {
        n
    }
}

#[derive(Clone, Debug)]
pub struct IdentityCase {
    pub system: usize,
    pub first: Index,
    pub second: Index,
    pub shape: u8,
    pub radius: usize,
    pub other: Index,
    pub n: u64,
}

pub fn identity_case() -> impl Strategy<Value = IdentityCase> {
    (0usize..5, any::<Index>(), any::<Index>(), 0u8..4, 0usize..5, any::<Index>(), 1u64..=40).prop_map(
        |(system, first, second, shape, radius, other, n)| IdentityCase {
            system,
            first,
            second,
            shape,
            radius,
            other,
            n,
        },
    )
}

/// `(F_n)_* δ_x (U) = |G_U(x) ∩ F_n| / |F_n|`, both sides exact.
pub fn check_identity(case: &IdentityCase) -> Result<(), TestCaseError> {
    let entry = gallery::build(NAMES[case.system]).unwrap();
    let space = &entry.space;
    let family = &entry.families[0];
    let n = index_for(family, case.n);
    let singles = space.truncate_singles(4);
    let x = Point::Pair(pick(&singles, &case.first), pick(&singles, &case.second));
    let radii = [ratio(1, 2), ratio(1, 4), ratio(1, 10), ratio(1, 1000), ratio(3, 2)];
    let r = radii[case.radius].clone();
    let y = pick(&singles, &case.other);
    let u = match case.shape {
        0 => Neighborhood::ball(x, r),
        1 => Neighborhood::ball(Point::Pair(y, y), r),
        2 => Neighborhood::points([x, Point::Pair(y, y)]),
        _ => Neighborhood::product(Neighborhood::ball(y, r), Neighborhood::All),
    };
    let budget = Budget::default();
    let mu = AtomicMeasure::empirical(space, &x, family, n, &budget).unwrap();
    let mass = mu.mass(space, &u).unwrap();
    let rec = hitting_density(space, &x, &u, family, n, &budget).unwrap();
    prop_assert_eq!(mass, rec.ratio_exact, "{} {} n={}", entry.name, x, n);
    Ok(())
}

#[derive(Clone, Debug)]
pub struct MeasureTriple {
    pub system: usize,
    pub atoms: [Vec<(Index, u8)>; 3],
}

pub fn measure_triple() -> impl Strategy<Value = MeasureTriple> {
    let measure = || prop::collection::vec((any::<Index>(), 1u8..=5), 1..=4);
    (0usize..5, measure(), measure(), measure()).prop_map(|(system, a, b, c)| MeasureTriple {
        system,
        atoms: [a, b, c],
    })
}

fn build_measure(space: &Space, singles: &[SystemPoint], atoms: &[(Index, u8)]) -> AtomicMeasure {
    let total: i64 = atoms.iter().map(|a| a.1 as i64).sum();
    let weighted = atoms.iter().map(|(i, w)| (Point::Single(pick(singles, i)), ratio(*w as i64, total)));
    AtomicMeasure::from_weighted(space, weighted).unwrap()
}

/// Identity of indiscernibles, symmetry and the triangle inequality for w1.
pub fn check_w1_axioms(t: &MeasureTriple) -> Result<(), TestCaseError> {
    let entry = gallery::build(NAMES[t.system]).unwrap();
    let space = &entry.space;
    let singles = space.truncate_singles(3);
    let [a, b, c] = &t.atoms;
    let (mu, nu, rho) = (
        build_measure(space, &singles, a),
        build_measure(space, &singles, b),
        build_measure(space, &singles, c),
    );
    let d = |x: &AtomicMeasure, y: &AtomicMeasure| w1(space, x, y).unwrap();
    prop_assert!(d(&mu, &mu).is_zero());
    let mn = d(&mu, &nu);
    prop_assert_eq!(mn.clone(), d(&nu, &mu));
    prop_assert_eq!(mn.is_zero(), mu == nu);
    prop_assert!(mn <= d(&mu, &rho) + d(&rho, &nu));
    Ok(())
}

/// `(gh)k = g(hk)` for all triples of the lamp box `F_3`.
pub fn lamp_associativity() -> Result<usize, String> {
    let f = FolnerFamily::LampBox
        .enumerate(GroupDescriptor::Lamplighter, 3, &Budget::default())
        .map_err(|e| e.to_string())?;
    let mut checked = 0;
    for g in &f {
        for h in &f {
            let gh = g.multiply(h).map_err(|e| e.to_string())?;
            for k in &f {
                let left = gh.multiply(k).map_err(|e| e.to_string())?;
                let right = g.multiply(&h.multiply(k).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
                if left != right {
                    return Err(format!("({g}·{h})·{k} ≠ {g}·({h}·{k})"));
                }
                checked += 1;
            }
        }
    }
    let id = GroupElement::identity(GroupDescriptor::Lamplighter);
    if f.iter().any(|g| g.multiply(&g.inverse().unwrap()).unwrap() != id) {
        return Err("inverse fails".into());
    }
    Ok(checked)
}

/// Closure probes registered by an entry's relation rows.
fn probes(entry: &GalleryEntry) -> Vec<(Point, Neighborhood)> {
    let mut out: Vec<(Point, Neighborhood)> = Vec::new();
    for row in &entry.rows {
        if let Check::Relation { probes, .. } = &row.check {
            for p in probes {
                if !out.iter().any(|q| q.0 == p.0) {
                    out.push(p.clone());
                }
            }
        }
    }
    out
}

fn params_for(entry: &GalleryEntry, family: &FolnerFamily, pair: &Point) -> DetectorParams {
    let mut params = gallery::detector_params(family, Profile::Quick);
    if let Some((_, u)) = probes(entry).into_iter().find(|(q, _)| q == pair) {
        params.closure_probe = Some(ClosureProbe {
            neighbourhood: u,
            n_max: 50,
            truncation: 200,
        });
    }
    params
}

fn verdict(entry: &GalleryEntry, kind: RelationKind, pair: &Point) -> Result<Verdict, String> {
    let family = &entry.families[0];
    let params = params_for(entry, family, pair);
    gallery::detect(kind, &entry.space, pair, family, &params)
        .map(|c| c.verdict)
        .map_err(|e| format!("{} {pair}: {e}", entry.name))
}

/// Limit points plus `Int(0)` in every copy, squared.
fn candidate_pairs(space: &Space) -> Vec<Point> {
    let singles = space.truncate_singles(0);
    let mut out = Vec::new();
    for &a in &singles {
        for &b in &singles {
            out.push(Point::Pair(a, b));
        }
    }
    out
}

/// Off the diagonal, weak sensitivity in the mean and regional joint mean
/// sensitivity give the same verdict. Returns the number of pairs compared.
pub fn off_diagonal_agreement(entry: &GalleryEntry) -> Result<usize, String> {
    use rayon::prelude::*;
    let pairs: Vec<Point> = candidate_pairs(&entry.space).into_iter().filter(|p| !p.is_diagonal()).collect();
    pairs.par_iter().try_for_each(|p| {
        let a = verdict(entry, RelationKind::SwsmF, p)?;
        let b = verdict(entry, RelationKind::SrjmsF, p)?;
        if a != b {
            return Err(format!("{} {p}: swsm {a:?}, srjms {b:?}", entry.name));
        }
        Ok(())
    })?;
    Ok(pairs.len())
}

/// Every `Q_rms^F` positive is an `S_rjms^F` positive and, over ℤ, a
/// positive of the Banach version. Returns the number of `Q_rms^F` positives.
pub fn inclusion_chain(entry: &GalleryEntry) -> Result<usize, String> {
    use rayon::prelude::*;
    let integers = entry.space.group() == GroupDescriptor::Integers;
    let positives = candidate_pairs(&entry.space)
        .par_iter()
        .map(|p| {
            if verdict(entry, RelationKind::QrmsF, p)? != Verdict::Positive {
                return Ok(0);
            }
            let s = verdict(entry, RelationKind::SrjmsF, p)?;
            if s != Verdict::Positive {
                return Err(format!("{} {p}: in Q_rms^F but S_rjms^F gives {s:?}", entry.name));
            }
            if integers {
                let b = verdict(entry, RelationKind::QrmsBanach, p)?;
                if b != Verdict::Positive {
                    return Err(format!("{} {p}: in Q_rms^F but Q_rms gives {b:?}", entry.name));
                }
            }
            Ok(1)
        })
        .collect::<Result<Vec<usize>, String>>()?;
    Ok(positives.iter().sum())
}

/// Diagonal pairs with positive `Q_rms^F` are exactly the diagonal over the
/// estimated maximal support.
pub fn diagonal_support_law(entry: &GalleryEntry) -> Result<BTreeSet<SystemPoint>, String> {
    use rayon::prelude::*;
    let space = &entry.space;
    let family = &entry.families[0];
    let n = if family.required_group() == Some(GroupDescriptor::Lamplighter) { 8 } else { 200 };
    let support: BTreeSet<SystemPoint> = support_union_estimate(
        space,
        &space.truncate_singles(3),
        std::slice::from_ref(family),
        n,
        &ratio(1, 10),
        &ratio(1, 10),
        &Budget::default(),
    )
    .map_err(|e| e.to_string())?
    .points
    .into_iter()
    .collect();
    let singles = space.truncate_singles(2);
    let positive: BTreeSet<SystemPoint> = singles
        .par_iter()
        .map(|&s| Ok((s, verdict(entry, RelationKind::QrmsF, &Point::Pair(s, s))?)))
        .collect::<Result<Vec<_>, String>>()?
        .into_iter()
        .filter(|(_, v)| *v == Verdict::Positive)
        .map(|(s, _)| s)
        .collect();
    let support_in_range: BTreeSet<SystemPoint> = support.iter().copied().filter(|p| singles.contains(p)).collect();
    if positive != support_in_range {
        return Err(format!(
            "{}: positive diagonal {:?}, support {:?}",
            entry.name, positive, support_in_range
        ));
    }
    Ok(support)
}

/// `1/(n+1)` as an exact rational.
pub fn reciprocal(n: u64) -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(n))
}
