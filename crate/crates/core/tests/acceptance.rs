//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mecdyn::averaging::{cesaro_metric, mec_probe, MecVerdict};
use mecdyn::exact::{self, ratio};
use mecdyn::folner::{lamp_defect_bound, Budget, FolnerFamily};
use mecdyn::gallery::{self, Profile, RelationKind};
use mecdyn::group::{GroupDescriptor, GroupElement};
use mecdyn::measures::{cluster_detect, w1, AtomicMeasure, DEFAULT_CLUSTER_TOL};
use mecdyn::relations::{forward_closure_negative, icer_hull, FiniteModel, NegativeEvidence, Verdict};
use mecdyn::space::{Coord, Neighborhood, Point, Space, SystemPoint, Tail};
use mecdyn::template::{PairTemplate, PointTemplate};

type Outcome = Result<String, String>;

const L: GroupDescriptor = GroupDescriptor::Lamplighter;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn space(name: &str) -> Space {
    gallery::build(name).unwrap().space
}

fn pow2(k: u64) -> BigInt {
    BigInt::from(1u8) << k
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let budget = Budget::default();
    for n in 1..=12u64 {
        let formula = BigInt::from(n + 1) * pow2(n + 1);
        let card = FolnerFamily::LampBox.cardinality(n).map_err(e)?;
        let listed = FolnerFamily::LampBox.enumerate(L, n, &budget).map_err(e)?.len();
        ensure(BigInt::from(card) == formula, format!("cardinality at n={n}"))?;
        ensure(BigInt::from(listed) == formula, format!("enumeration at n={n}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 5.0, format!("took {secs:.1}s"))?;
    Ok(format!("n <= 12 in {secs:.2}s"))
}

/// `|F_n \ g⁻¹F_n| / |F_n|` straight from the definition.
fn defect_oracle(n: u64, g: &GroupElement) -> BigRational {
    let f = FolnerFamily::LampBox.enumerate(L, n, &Budget::default()).unwrap();
    let set: std::collections::HashSet<&GroupElement> = f.iter().collect();
    let outside = f.iter().filter(|h| !set.contains(&g.multiply(h).unwrap())).count();
    BigRational::new(BigInt::from(outside), BigInt::from(f.len()))
}

fn ac2() -> Outcome {
    let budget = Budget::default();
    let sigma = GroupElement::sigma(1);
    for n in 1..=12u64 {
        let d = FolnerFamily::LampBox.defect(L, n, std::slice::from_ref(&sigma), &budget).map_err(e)?;
        ensure(d == common::reciprocal(n + 1), format!("σ defect at n={n} is {d}"))?;
    }
    let mut checked = 0;
    let small = FolnerFamily::LampBox.enumerate(L, 3, &budget).map_err(e)?;
    for n in [3u64, 5] {
        for g in &small {
            let d = FolnerFamily::LampBox.defect(L, n, std::slice::from_ref(g), &budget).map_err(e)?;
            ensure(d == defect_oracle(n, g), format!("defect of {g} at n={n} disagrees with the set computation"))?;
            ensure(d <= lamp_defect_bound(g, n).map_err(e)?, format!("bound fails for {g} at n={n}"))?;
            checked += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xac2);
    for _ in 0..100 {
        let shift = rng.gen_range(-30i64..=30);
        let count = rng.gen_range(0..=8);
        let lamps: Vec<i64> = (0..count).map(|_| rng.gen_range(-30i64..=30)).collect();
        let g = GroupElement::lamp(shift, lamps);
        let n = rng.gen_range(4u64..=8);
        let d = FolnerFamily::LampBox.defect(L, n, std::slice::from_ref(&g), &budget).map_err(e)?;
        ensure(d <= lamp_defect_bound(&g, n).map_err(e)?, format!("bound fails for {g} at n={n}"))?;
        checked += 1;
    }
    Ok(format!("σ defect = 1/(n+1) for n <= 12; bound holds for {checked} elements"))
}

/// `¼ Σ_b (A_n)_* δ_{τ_b x}` built directly from the shift action.
fn quarter_oracle(space: &Space, n: u64) -> AtomicMeasure {
    let x = Point::Pair(SystemPoint::up(n as i64), SystemPoint::up(n as i64 + 1));
    let k = n as i64;
    let mut atoms = Vec::new();
    let weight = BigRational::new(BigInt::one(), BigInt::from(4 * (n + 1)));
    for b in [vec![], vec![k], vec![k + 1], vec![k, k + 1]] {
        let y = space.act(&GroupElement::lamp(0, b), &x).unwrap();
        for a in k..=2 * k {
            atoms.push((space.act(&GroupElement::sigma(a), &y).unwrap(), weight.clone()));
        }
    }
    AtomicMeasure::from_weighted(space, atoms).unwrap()
}

fn lamp_empirical(space: &Space, n: u64) -> AtomicMeasure {
    let x = Point::Pair(SystemPoint::up(n as i64), SystemPoint::up(n as i64 + 1));
    AtomicMeasure::empirical(space, &x, &FolnerFamily::LampBox, n, &Budget::default()).unwrap()
}

fn ac3() -> Outcome {
    let s = space("lamplighter");
    for n in 1..=10 {
        ensure(lamp_empirical(&s, n) == quarter_oracle(&s, n), format!("n={n}"))?;
    }
    Ok("exact equality for n <= 10".into())
}

/// `φ(s) = 1/(2s+1)` for `s ≥ 0` and `1/(2s−1)` below.
fn phi(s: i64) -> BigRational {
    if s >= 0 {
        ratio(1, 2 * s + 1)
    } else {
        ratio(1, 2 * s - 1)
    }
}

fn ac4() -> Outcome {
    let s = space("lamplighter");
    let (up, down) = (SystemPoint::up_inf(), SystemPoint::down_inf());
    let corners = AtomicMeasure::from_weighted(
        &s,
        [(up, up), (up, down), (down, up), (down, down)].map(|(a, b)| (Point::Pair(a, b), ratio(1, 4))),
    )
    .map_err(e)?;
    let mut values = Vec::new();
    for n in 4..=12u64 {
        values.push(w1(&s, &lamp_empirical(&s, n), &corners).map_err(e)?);
    }
    ensure(values.windows(2).all(|w| w[1] < w[0]), "w1 is not strictly decreasing on [4, 12]")?;
    // Each lamp pattern is equally likely, so moving every atom to the corner
    // of its own copies is a coupling; its cost is the mean embedding gap.
    let n = 12i64;
    let mut oracle = BigRational::zero();
    for a in n..=2 * n {
        oracle += exact::abs(&phi(n - a)) + exact::abs(&phi(n + 1 - a));
    }
    oracle /= BigInt::from(n + 1);
    let last = values.last().unwrap();
    let (lv, ov) = (exact::to_f64(last), exact::to_f64(&oracle));
    ensure(lv <= ov + 1e-12, format!("w1 {lv} above oracle {ov}"))?;
    Ok(format!("w1 at n=12 is {lv:.6}, oracle {ov:.6}"))
}

/// Position of `Int(i)` on the unit segment of a single two-point copy.
fn position(i: i64) -> f64 {
    (1.0 + i as f64 / (1.0 + i.abs() as f64)) / 2.0
}

fn ac5() -> Outcome {
    let s = space("two-point");
    let (minus, plus) = (SystemPoint::new(1, Coord::MinusInf), SystemPoint::new(1, Coord::PlusInf));
    let x = Point::Pair(SystemPoint::int(1, -3), minus);
    let target = AtomicMeasure::dirac(Point::Pair(plus, minus));
    let budget = Budget::default();
    let mut values = Vec::new();
    for k in [50u64, 100, 200, 500] {
        let mu = AtomicMeasure::empirical(&s, &x, &FolnerFamily::ZInitial, k, &budget).map_err(e)?;
        values.push(exact::to_f64(&w1(&s, &mu, &target).map_err(e)?));
    }
    ensure(values.windows(2).all(|w| w[1] < w[0]), format!("not decreasing: {values:?}"))?;
    let k = 500i64;
    let oracle: f64 = (-3..=k - 4).map(|i| 1.0 - position(i)).sum::<f64>() / k as f64;
    let last = *values.last().unwrap();
    ensure(last <= oracle + 1e-12, format!("w1 {last} above oracle {oracle}"))?;
    Ok(format!("w1 at k=500 is {last:.6}, oracle {oracle:.6}"))
}

fn ac6() -> Outcome {
    let s = space("three-glued");
    let x = Point::Pair(SystemPoint::int(1, 3), SystemPoint::int(3, 3));
    let budget = Budget::default();
    let measures = (496..=500u64)
        .map(|k| AtomicMeasure::empirical(&s, &x, &FolnerFamily::ZCentered, k, &budget))
        .collect::<Result<Vec<_>, _>>()
        .map_err(e)?;
    let c = cluster_detect(&s, &measures, DEFAULT_CLUSTER_TOL)
        .map_err(e)?
        .ok_or("no cluster candidate")?;
    let heavy = c.limit_view.heavy_atoms(&ratio(1, 10));
    let (a, b, cc) = (
        SystemPoint::new(1, Coord::MinusInf),
        SystemPoint::new(1, Coord::PlusInf),
        SystemPoint::new(2, Coord::MinusInf),
    );
    let want = [Point::Pair(a, cc), Point::Pair(b, b)];
    ensure(heavy.len() == 2, format!("{} heavy atoms", heavy.len()))?;
    for (p, w) in &heavy {
        ensure(want.contains(p), format!("unexpected heavy atom {p}"))?;
        ensure((exact::to_f64(w) - 0.5).abs() < 1e-2, format!("weight {} at {p}", exact::to_f64(w)))?;
    }
    Ok(format!(
        "heavy atoms {} and {}, spread {:.1e}",
        heavy[0].0, heavy[1].0, c.spread
    ))
}

fn ac7() -> Outcome {
    let s = space("lamplighter");
    let budget = Budget::default();
    let (x, y) = (SystemPoint::up(3), SystemPoint::down(5));
    for n in 6..=12 {
        let f = cesaro_metric(&s, x, y, &FolnerFamily::LampBox, n, &budget).map_err(e)?;
        let a = cesaro_metric(&s, x, y, &FolnerFamily::ZShifted, n, &budget).map_err(e)?;
        ensure(f == a, format!("n={n}: {f} vs {a}"))?;
    }
    Ok("exact equality for n in [6, 12]".into())
}

fn ac8() -> Outcome {
    let s = space("lamplighter-z");
    let approach = PairTemplate::new(PointTemplate::line(1, 1, 0), PointTemplate::fixed(SystemPoint::up_inf()));
    let ks = [1, 2, 5, 10, 20, 50, 100];
    let r = mec_probe(&s, &FolnerFamily::ZShifted, &approach, &ks, 1e-2, (1, 500), &Budget::default()).map_err(e)?;
    ensure(r.verdict == MecVerdict::ConsistentWithMec, format!("violating k: {:?}", r.violating))?;
    let tail = &r.estimates[r.estimates.len() / 2..];
    let worst = tail.iter().map(|t| t.2).fold(0.0, f64::max);
    ensure(worst < 1e-2, format!("tail estimate {worst}"))?;
    Ok(format!("largest tail estimate {worst:.2e}"))
}

fn ac9() -> Outcome {
    let s = space("literature-dock");
    let family = FolnerFamily::ZInitial;
    let mut params = gallery::detector_params(&family, Profile::Quick);
    params.window = (1, 200);
    for x in -5..=5 {
        let p = SystemPoint::int(0, x);
        let cert = gallery::detect(RelationKind::SrjmsF, &s, &Point::Pair(p, p), &family, &params).map_err(e)?;
        ensure(cert.verdict == Verdict::Negative, format!("({p},{p}) is {:?}", cert.verdict))?;
        let Some(NegativeEvidence::IsolatedCoordinate {
            witness_densities,
            bounds,
            ..
        }) = &cert.negative
        else {
            return Err(format!("({p},{p}) has no isolated-point evidence"));
        };
        ensure(witness_densities.len() == 200, "window does not cover n <= 200")?;
        for ((n, d), (_, b)) in witness_densities.iter().zip(bounds) {
            let inv = 1.0 / *n as f64;
            ensure(d.float <= inv && b.float <= inv, format!("({p},{p}) at n={n}: {} > 1/n", d.exact))?;
        }
    }
    let inf = SystemPoint::new(0, Coord::Inf);
    let cert = gallery::detect(RelationKind::SrjmsF, &s, &Point::Pair(inf, inf), &family, &params).map_err(e)?;
    ensure(cert.verdict == Verdict::Positive, "(∞,∞) not positive")?;
    let t = cert.threshold.ok_or("no threshold")?;
    ensure(t.exact == "1", format!("(∞,∞) density {}", t.exact))?;
    Ok("isolated diagonal densities <= 1/n for n <= 200; (∞,∞) density 1".into())
}

fn ac10() -> Outcome {
    let s = space("three-glued");
    let (a, c) = (SystemPoint::new(1, Coord::MinusInf), SystemPoint::new(2, Coord::MinusInf));
    let u1 = Neighborhood::PointSet {
        points: vec![Point::Single(a)],
        tails: vec![Tail::at_most(1, -1)],
    };
    let u2 = Neighborhood::PointSet {
        points: vec![Point::Single(c)],
        tails: vec![Tail::at_most(2, -1), Tail::at_most(3, -1)],
    };
    let cert = forward_closure_negative(
        &s,
        &Point::Pair(a, c),
        &Neighborhood::product(u1, u2),
        &FolnerFamily::ZInitial,
        50,
        200,
        &Budget::default(),
    )
    .map_err(e)?;
    ensure(cert.verdict == Verdict::Negative, format!("verdict {:?}", cert.verdict))?;
    let Some(NegativeEvidence::ForwardClosure {
        checked_points,
        elements,
        diagonal_gap,
        ..
    }) = &cert.negative
    else {
        return Err("no forward-closure evidence".into());
    };
    Ok(format!(
        "{checked_points} points x {elements} elements, diagonal gap {}",
        diagonal_gap.exact
    ))
}

fn named(pairs: &[(SystemPoint, SystemPoint)]) -> Vec<Point> {
    pairs.iter().map(|&(a, b)| Point::Pair(a, b)).collect()
}

fn ac11() -> Outcome {
    // two-point: seed {(∞,−∞)}, expect {±∞}² ∪ Δ
    let s = space("two-point");
    let (m, p) = (SystemPoint::new(1, Coord::MinusInf), SystemPoint::new(1, Coord::PlusInf));
    let model = FiniteModel::from_space(&s).map_err(e)?;
    let hull = icer_hull(&model, &model.classify(&s, &named(&[(p, m)])).map_err(e)?).map_err(e)?;
    let mut want: std::collections::BTreeSet<(usize, usize)> =
        model.classify(&s, &named(&[(m, m), (m, p), (p, m), (p, p)])).map_err(e)?.into_iter().collect();
    want.extend((0..model.len()).map(|i| (i, i)));
    ensure(hull.pairs == want, format!("two-point hull {:?}", hull.named_pairs(&model)))?;

    // three-glued: seed Q_rms, expect R ∪ Δ with R = {±∞⁽¹⁾, ±∞⁽²⁾}²
    let s = space("three-glued");
    let ends = [
        SystemPoint::new(1, Coord::MinusInf),
        SystemPoint::new(1, Coord::PlusInf),
        SystemPoint::new(2, Coord::MinusInf),
        SystemPoint::new(2, Coord::PlusInf),
    ];
    let mut r = Vec::new();
    for &x in &ends {
        for &y in &ends {
            r.push((x, y));
        }
    }
    let q: Vec<_> = r
        .iter()
        .copied()
        .filter(|&(x, y)| !((x, y) == (ends[0], ends[3]) || (x, y) == (ends[3], ends[0])))
        .collect();
    let model = FiniteModel::from_space(&s).map_err(e)?;
    let hull = icer_hull(&model, &model.classify(&s, &named(&q)).map_err(e)?).map_err(e)?;
    let mut want: std::collections::BTreeSet<(usize, usize)> =
        model.classify(&s, &named(&r)).map_err(e)?.into_iter().collect();
    want.extend((0..model.len()).map(|i| (i, i)));
    ensure(hull.pairs == want, format!("three-glued hull {:?}", hull.named_pairs(&model)))?;
    Ok(format!("both hulls equal their expected sets; three-glued has {} pairs", want.len()))
}

fn run_property<S, F>(strategy: S, check: F) -> Result<(), String>
where
    S: proptest::strategy::Strategy,
    S::Value: std::fmt::Debug,
    F: Fn(S::Value) -> Result<(), proptest::test_runner::TestCaseError>,
{
    let config = Config {
        cases: 200,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, check).map_err(|err| err.to_string())
}

fn ac12() -> Outcome {
    let start = Instant::now();
    run_property(common::identity_case(), |c| common::check_identity(&c))
        .map_err(|m| format!("identity: {m}"))?;
    run_property(common::measure_triple(), |t| common::check_w1_axioms(&t)).map_err(|m| format!("w1: {m}"))?;
    let triples = common::lamp_associativity()?;
    let mut agreed = 0;
    let mut chained = 0;
    for entry in common::entries() {
        agreed += common::off_diagonal_agreement(&entry)?;
        chained += common::inclusion_chain(&entry)?;
        common::diagonal_support_law(&entry)?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, format!("took {secs:.0}s"))?;
    Ok(format!(
        "200+200 cases, {triples} triples, {agreed} pairs agree, {chained} chains, 5 support laws in {secs:.0}s"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("AC1 lamp box cardinality", ac1),
        ("AC2 Følner defect", ac2),
        ("AC3 lamplighter decomposition", ac3),
        ("AC4 lamplighter limit", ac4),
        ("AC5 two-point convergence", ac5),
        ("AC6 half-half limit", ac6),
        ("AC7 D_F = D_A", ac7),
        ("AC8 mean equicontinuity", ac8),
        ("AC9 isolated diagonal densities", ac9),
        ("AC10 forward-closure certificate", ac10),
        ("AC11 icer golden sets", ac11),
        ("AC12 property suites", ac12),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS {name}: {msg} ({secs:.1}s)"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg} ({secs:.1}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
