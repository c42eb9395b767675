//! Registered example systems together with their expected-results tables.
//!
//! [`build`] wires a system; [`verify`] runs every expected row against the
//! detectors and estimators and reports `MATCH`, `MISMATCH` or
//! `INCONCLUSIVE` per row. Failures are report rows, never errors.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::averaging::{cesaro_metric, mec_probe, MecVerdict};
use crate::density::hitting_density;
use crate::error::{Error, Result};
use crate::exact::{self, ratio, Exact};
use crate::folner::{lamp_defect_bound, Budget, FolnerFamily};
use crate::group::{GroupDescriptor, GroupElement};
use crate::measures::{cluster_detect, support_union_estimate, w1, AtomicMeasure, DEFAULT_CLUSTER_TOL};
use crate::relations::{
    detect_qrms_banach, detect_qrms_f, detect_qrp, detect_srjms_f, detect_swsm_f, icer_hull, Certificate,
    CertificateKind, ClosureProbe, DetectorParams, FiniteModel, Verdict, WitnessSource,
};
use crate::space::{ActionKind, Coord, Neighborhood, Point, Space, SpaceDescriptor, SystemPoint, Tail};
use crate::template::{PairTemplate, PointTemplate};

/// Names accepted by [`build`].
pub const NAMES: [&str; 5] = ["literature-dock", "lamplighter-z", "lamplighter", "two-point", "three-glued"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// LampBox up to `n = 8`, integer windows up to 200.
    Quick,
    /// LampBox up to `n = 12`, integer windows up to 1000.
    Full,
}

impl Profile {
    pub fn lamp_n(self) -> u64 {
        match self {
            Profile::Quick => 8,
            Profile::Full => 12,
        }
    }

    /// Window end for measure limits and mean averages over ℤ.
    pub fn z_window(self) -> u64 {
        match self {
            Profile::Quick => 200,
            Profile::Full => 500,
        }
    }

    /// Window end for density searches over ℤ.
    pub fn detector_window(self) -> u64 {
        match self {
            Profile::Quick => 200,
            Profile::Full => 400,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Quick => "quick",
            Profile::Full => "full",
        })
    }
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Profile::Quick),
            "full" => Ok(Profile::Full),
            other => Err(Error::UnknownName(format!("profile {other}"))),
        }
    }
}

/// Which relation a relation row asks about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RelationKind {
    QrmsF,
    SrjmsF,
    SwsmF,
    QrmsBanach,
}

impl RelationKind {
    pub fn certificate_kind(self) -> CertificateKind {
        match self {
            RelationKind::QrmsF => CertificateKind::QrmsF,
            RelationKind::SrjmsF => CertificateKind::SrjmsF,
            RelationKind::SwsmF => CertificateKind::SwsmF,
            RelationKind::QrmsBanach => CertificateKind::QrmsBanach,
        }
    }

    /// Whether witnesses are scored against the matched Følner set `F_k`.
    pub fn matched(self) -> bool {
        matches!(self, RelationKind::SrjmsF | RelationKind::SwsmF)
    }
}

impl FromStr for RelationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "qrms-f" => Ok(RelationKind::QrmsF),
            "srjms-f" => Ok(RelationKind::SrjmsF),
            "swsm-f" => Ok(RelationKind::SwsmF),
            "qrms-banach" | "qrms" => Ok(RelationKind::QrmsBanach),
            other => Err(Error::UnknownName(format!("relation {other}"))),
        }
    }
}

/// Runs the detector for `kind` with the registered witnesses of the space.
pub fn detect(
    kind: RelationKind,
    space: &Space,
    pair: &Point,
    family: &FolnerFamily,
    params: &DetectorParams,
) -> Result<Certificate> {
    let source = WitnessSource::new(witness_templates(space, pair, kind.matched())?);
    match kind {
        RelationKind::QrmsF => detect_qrms_f(space, pair, family, &source, params),
        RelationKind::SrjmsF => detect_srjms_f(space, pair, family, &source, params),
        RelationKind::SwsmF => detect_swsm_f(space, pair, family, &source, params),
        RelationKind::QrmsBanach => detect_qrms_banach(space, pair, family, &source, params),
    }
}

/// The two ends of a copy after gluing, `(−∞ end, +∞ end)`.
fn copy_ends(space: &Space, copy: u8) -> Result<(SystemPoint, SystemPoint)> {
    let one_point = space.limit_points().iter().any(|p| p.coord == Coord::Inf);
    if one_point {
        let inf = space.canonical(SystemPoint::new(copy, Coord::Inf))?;
        return Ok((inf, inf));
    }
    Ok((
        space.canonical(SystemPoint::new(copy, Coord::MinusInf))?,
        space.canonical(SystemPoint::new(copy, Coord::PlusInf))?,
    ))
}

/// Parametric asymptotically diagonal witnesses for a pair of limit points.
///
/// Every witness starts near a common limit point `z`. A coordinate aimed at
/// `t` either sits at `z = t`, or runs through a copy with one end at `z` and
/// the other at `t`, as `Int(∓k)` so that the group can carry it from one end
/// to the other. Matched witnesses use `∓⌊k/2⌋` so that half of `F_k` does
/// the carrying. Lamplighter spaces add `(Int(k), Int(k+1))` in each copy,
/// whose lamps split the orbit over all four corners. Pairs with an integer
/// coordinate get no templates.
pub fn witness_templates(space: &Space, pair: &Point, matched: bool) -> Result<Vec<PairTemplate>> {
    if space.is_product() {
        return Err(Error::DimensionMismatch("witnesses live in the square of a base space".into()));
    }
    let Point::Pair(p, q) = space.canonical_point(pair)? else {
        return Err(Error::DimensionMismatch("witnesses approach pairs".into()));
    };
    if !p.is_limit() || !q.is_limit() {
        return Ok(Vec::new());
    }
    let den = if matched { 2 } else { 1 };
    let copies = space.copies();
    let ends = copies
        .iter()
        .map(|&c| Ok((c, copy_ends(space, c)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<PairTemplate> = Vec::new();
    let mut push = |t: PairTemplate| {
        if !out.contains(&t) {
            out.push(t);
        }
    };
    for z in space.limit_points() {
        let options = |t: SystemPoint| {
            let mut v = Vec::new();
            if t == z {
                v.push(PointTemplate::fixed(z));
            }
            for &(c, (lo, hi)) in &ends {
                if lo == z && hi == t {
                    v.push(PointTemplate::Linear { copy: c, num: -1, den, offset: 0 });
                }
                if hi == z && lo == t {
                    v.push(PointTemplate::Linear { copy: c, num: 1, den, offset: 0 });
                }
            }
            v
        };
        for a in options(p) {
            for b in options(q) {
                push(PairTemplate::new(a, b));
            }
        }
    }
    if space.action() == ActionKind::Lamplighter {
        for &c in &copies {
            push(PairTemplate::new(PointTemplate::line(c, 1, 0), PointTemplate::line(c, 1, 1)));
        }
    }
    Ok(out)
}

/// Detector parameters sized for a family and a budget profile.
pub fn detector_params(family: &FolnerFamily, profile: Profile) -> DetectorParams {
    let mut params = DetectorParams::default();
    if family.required_group() == Some(GroupDescriptor::Lamplighter) {
        params.radii = vec![ratio(1, 2), ratio(1, 4)];
        params.ks = match profile {
            Profile::Quick => (4..=8).collect(),
            Profile::Full => (6..=12).collect(),
        };
        // The isolated-point bound 1/(2(n+1)) only drops below the floor at
        // n = 10, and it is cheap to enumerate up to 12.
        params.window = (1, 12);
    } else {
        params.ks = match profile {
            Profile::Quick => vec![10, 20, 40, 80, 120],
            Profile::Full => vec![20, 40, 80, 160],
        };
        params.window = (1, profile.detector_window());
    }
    params
}

/// One expected claim about a gallery system and how to check it.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum Check {
    /// `|F_n| = (n+1)·2^{n+1}` matches the enumeration and `σ` has defect `1/(n+1)`.
    LampFolner,
    /// `(F_n)_* δ_{(↑n, ↑(n+1))}` equals the quarter mixture of `A_n`-pushforwards of its lamp translates.
    LampDecomposition { n_max: u64 },
    /// `F_n^* d = G_n^* d` exactly for every listed pair and every `n` in the range.
    CesaroEqual {
        pairs: Vec<Point>,
        left: FolnerFamily,
        right: FolnerFamily,
        n_from: u64,
    },
    /// Mean-equicontinuity probe along an approach sequence.
    Mec {
        family: FolnerFamily,
        approach: PairTemplate,
        ks: Vec<i64>,
        epsilon: f64,
    },
    /// Membership verdicts over a candidate list.
    Relation {
        kind: RelationKind,
        family: FolnerFamily,
        candidates: Vec<Point>,
        members: Vec<Point>,
        /// Forward-closure neighbourhoods for expected non-members.
        probes: Vec<(Point, Neighborhood)>,
    },
    /// The relation's definition excludes the diagonal.
    DiagonalExcluded { kind: RelationKind, family: FolnerFamily, pairs: Vec<Point> },
    /// Every neighbourhood of a diagonal pair is hit by every element of `F_n`.
    DiagonalHits { family: FolnerFamily, n: u64, pairs: Vec<Point> },
    /// Pairs certified not regionally proximal.
    NotRegionallyProximal { pairs: Vec<Point> },
    /// Limit of `(F_k)_* δ_{x_k}` along the trailing indices of the window.
    Limit {
        start: PairTemplate,
        family: FolnerFamily,
        /// Average the four lamp translates `τ_b`, `b ⊆ {k, k+1}`, of the start.
        lamp_quarters: bool,
        target: Vec<(Point, Exact)>,
    },
    /// Points carrying empirical mass.
    Support { family: FolnerFamily, expected: Vec<SystemPoint> },
    /// The icer hull of a detected relation on the finite model.
    Icer {
        family: FolnerFamily,
        relation: Vec<Point>,
        /// Pairs of the hull off the diagonal, as points of the space.
        expected: Vec<Point>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpectedRow {
    pub id: String,
    pub claim: String,
    pub check: Check,
}

#[derive(Clone, Debug, Serialize)]
pub struct GalleryEntry {
    pub name: String,
    pub description: String,
    pub descriptor: SpaceDescriptor,
    #[serde(skip)]
    pub space: Space,
    pub families: Vec<FolnerFamily>,
    pub rows: Vec<ExpectedRow>,
}

fn row(id: &str, claim: &str, check: Check) -> ExpectedRow {
    ExpectedRow {
        id: id.into(),
        claim: claim.into(),
        check,
    }
}

fn pairs_of(points: &[SystemPoint]) -> Vec<Point> {
    let mut out = Vec::new();
    for &a in points {
        for &b in points {
            out.push(Point::Pair(a, b));
        }
    }
    out
}

fn minus(c: u8) -> SystemPoint {
    SystemPoint::new(c, Coord::MinusInf)
}

fn plus(c: u8) -> SystemPoint {
    SystemPoint::new(c, Coord::PlusInf)
}

fn half() -> Exact {
    Exact::from(ratio(1, 2))
}

pub fn build(name: &str) -> Result<GalleryEntry> {
    match name {
        "literature-dock" => literature_dock(),
        "lamplighter-z" => lamplighter_z(),
        "lamplighter" => lamplighter(),
        "two-point" => two_point(),
        "three-glued" => three_glued(),
        other => Err(Error::UnknownName(format!("gallery entry {other}"))),
    }
}

fn literature_dock() -> Result<GalleryEntry> {
    let space = Space::one_point(1, GroupDescriptor::Integers, ActionKind::Translate)?;
    let inf = SystemPoint::new(0, Coord::Inf);
    let diagonal: Vec<Point> = space.truncate_singles(5).into_iter().map(|p| Point::Pair(p, p)).collect();
    let f = FolnerFamily::ZInitial;
    Ok(GalleryEntry {
        name: "literature-dock".into(),
        description: "ℤ acting by translation on its one-point compactification, F_n = {0, …, n−1}".into(),
        rows: vec![
            row(
                "srjms-diagonal",
                "the only diagonal pair that is regionally jointly mean sensitive is (∞,∞)",
                Check::Relation {
                    kind: RelationKind::SrjmsF,
                    family: f.clone(),
                    candidates: diagonal.clone(),
                    members: vec![Point::Pair(inf, inf)],
                    probes: vec![],
                },
            ),
            row(
                "first-set-hits-diagonal",
                "every neighbourhood of every diagonal pair is hit by all of F_1",
                Check::DiagonalHits {
                    family: f.clone(),
                    n: 1,
                    pairs: diagonal.clone(),
                },
            ),
            row(
                "wsm-excludes-diagonal",
                "weak sensitivity in the mean is only defined off the diagonal",
                Check::DiagonalExcluded {
                    kind: RelationKind::SwsmF,
                    family: f.clone(),
                    pairs: diagonal,
                },
            ),
        ],
        families: vec![f],
        descriptor: space.descriptor().clone(),
        space,
    })
}

fn lamplighter_z() -> Result<GalleryEntry> {
    let space = Space::one_point(2, GroupDescriptor::Integers, ActionKind::Sigma)?;
    let a = FolnerFamily::ZShifted;
    Ok(GalleryEntry {
        name: "lamplighter-z".into(),
        description: "ℤ acting by the shift σ on two copies of the one-point compactification of ℤ".into(),
        rows: vec![row(
            "mean-equicontinuous",
            "D_A vanishes along A_n = {n, …, 2n}, so the action is mean equicontinuous",
            Check::Mec {
                family: a.clone(),
                approach: PairTemplate::new(PointTemplate::line(1, 1, 0), PointTemplate::fixed(SystemPoint::up_inf())),
                ks: vec![1, 2, 5, 10, 20, 50, 100],
                epsilon: 0.01,
            },
        )],
        families: vec![a],
        descriptor: space.descriptor().clone(),
        space,
    })
}

fn lamplighter() -> Result<GalleryEntry> {
    let space = Space::one_point(2, GroupDescriptor::Lamplighter, ActionKind::Lamplighter)?;
    let f = FolnerFamily::LampBox;
    let (up, down) = (SystemPoint::up_inf(), SystemPoint::down_inf());
    let off = vec![Point::Pair(up, down), Point::Pair(down, up)];
    let quarter = Exact::from(ratio(1, 4));
    Ok(GalleryEntry {
        name: "lamplighter".into(),
        description: "the lamplighter group acting on two copies of the one-point compactification of ℤ".into(),
        rows: vec![
            row(
                "folner",
                "F_n = {σ^a τ_b : {a} ∪ b ⊆ A_n} is a Følner sequence of size (n+1)·2^(n+1)",
                Check::LampFolner,
            ),
            row(
                "f-mean-equicontinuous",
                "D_F agrees with D_A, hence the action is F-mean equicontinuous",
                Check::CesaroEqual {
                    pairs: vec![
                        Point::Pair(SystemPoint::up(3), SystemPoint::down(5)),
                        Point::Pair(SystemPoint::up(0), up),
                        Point::Pair(SystemPoint::down(2), SystemPoint::up(5)),
                    ],
                    left: f.clone(),
                    right: FolnerFamily::ZShifted,
                    n_from: 6,
                },
            ),
            row(
                "quarter-decomposition",
                "the empirical measure of (↑n, ↑(n+1)) splits into four A_n-pushforwards",
                Check::LampDecomposition { n_max: 10 },
            ),
            row(
                "quarter-limit",
                "the empirical measures of (↑n, ↑(n+1)) converge to the uniform measure on the four corners",
                Check::Limit {
                    start: PairTemplate::new(PointTemplate::line(1, 1, 0), PointTemplate::line(1, 1, 1)),
                    family: FolnerFamily::ZShifted,
                    lamp_quarters: true,
                    target: pairs_of(&[down, up]).into_iter().map(|p| (p, quarter.clone())).collect(),
                },
            ),
            row(
                "srjms-off-diagonal",
                "(↑∞, ↓∞) is regionally jointly mean sensitive along F",
                Check::Relation {
                    kind: RelationKind::SrjmsF,
                    family: f.clone(),
                    candidates: pairs_of(&[down, up]),
                    members: pairs_of(&[down, up]),
                    probes: vec![],
                },
            ),
            row(
                "wsm-off-diagonal",
                "off the diagonal this is the same as weak sensitivity in the mean",
                Check::Relation {
                    kind: RelationKind::SwsmF,
                    family: f.clone(),
                    candidates: off.clone(),
                    members: off,
                    probes: vec![],
                },
            ),
        ],
        families: vec![f],
        descriptor: space.descriptor().clone(),
        space,
    })
}

fn two_point() -> Result<GalleryEntry> {
    let space = Space::two_point(1, vec![], GroupDescriptor::Integers, ActionKind::Translate)?;
    let f = FolnerFamily::ZInitial;
    let ends = [minus(1), plus(1)];
    let square = pairs_of(&ends);
    let candidates = pairs_of(&space.truncate_singles(1));
    let relation = |id: &str, claim: &str, kind: RelationKind| {
        row(
            id,
            claim,
            Check::Relation {
                kind,
                family: f.clone(),
                candidates: candidates.clone(),
                members: square.clone(),
                probes: vec![],
            },
        )
    };
    Ok(GalleryEntry {
        name: "two-point".into(),
        description: "ℤ acting by translation on its two-point compactification, F_k = {0, …, k−1}".into(),
        rows: vec![
            relation("qrms-f", "Q_rms^F = {±∞}²", RelationKind::QrmsF),
            relation("srjms-f", "S_rjms^F = {±∞}²", RelationKind::SrjmsF),
            relation("qrms", "Q_rms = {±∞}²", RelationKind::QrmsBanach),
            row(
                "limit",
                "the empirical measures of (−3, −∞) converge to δ_(∞,−∞)",
                Check::Limit {
                    start: PairTemplate::new(
                        PointTemplate::Linear { copy: 1, num: 0, den: 1, offset: -3 },
                        PointTemplate::fixed(minus(1)),
                    ),
                    family: f.clone(),
                    lamp_quarters: false,
                    target: vec![(Point::Pair(plus(1), minus(1)), Exact::from(ratio(1, 1)))],
                },
            ),
            row(
                "support",
                "the maximal support is {±∞}",
                Check::Support {
                    family: f.clone(),
                    expected: ends.to_vec(),
                },
            ),
            row(
                "icer",
                "the mean equicontinuous structure relation is {±∞}² ∪ Δ",
                Check::Icer {
                    family: f.clone(),
                    relation: vec![Point::Pair(plus(1), minus(1))],
                    expected: square,
                },
            ),
        ],
        families: vec![f, FolnerFamily::ZCentered],
        descriptor: space.descriptor().clone(),
        space,
    })
}

fn three_glued() -> Result<GalleryEntry> {
    let space = Space::two_point(
        3,
        vec![(plus(1), plus(3)), (minus(2), minus(3))],
        GroupDescriptor::Integers,
        ActionKind::Translate,
    )?;
    let (a, b, c, d) = (minus(1), plus(1), minus(2), plus(2));
    let f = FolnerFamily::ZInitial;
    let fc = FolnerFamily::ZCentered;
    let r = pairs_of(&[a, b, c, d]);
    let qrms: Vec<Point> = r
        .iter()
        .copied()
        .filter(|p| *p != Point::Pair(a, d) && *p != Point::Pair(d, a))
        .collect();
    let qrms_f: Vec<Point> = qrms
        .iter()
        .copied()
        .filter(|p| *p != Point::Pair(a, c) && *p != Point::Pair(c, a))
        .collect();
    let candidates = pairs_of(&space.truncate_singles(0));
    let u1 = Neighborhood::PointSet {
        points: vec![Point::Single(a)],
        tails: vec![Tail::at_most(1, -1)],
    };
    let u2 = Neighborhood::PointSet {
        points: vec![Point::Single(c)],
        tails: vec![Tail::at_most(2, -1), Tail::at_most(3, -1)],
    };
    let probes = vec![
        (Point::Pair(a, c), Neighborhood::product(u1.clone(), u2.clone())),
        (Point::Pair(c, a), Neighborhood::product(u2, u1)),
    ];
    let relation = |id: &str, claim: &str, kind: RelationKind, family: &FolnerFamily, members: &[Point], probes: &[(Point, Neighborhood)]| {
        row(
            id,
            claim,
            Check::Relation {
                kind,
                family: family.clone(),
                candidates: candidates.clone(),
                members: members.to_vec(),
                probes: probes.to_vec(),
            },
        )
    };
    Ok(GalleryEntry {
        name: "three-glued".into(),
        description: "three two-point compactifications of ℤ glued along ∞⁽¹⁾ = ∞⁽³⁾ and −∞⁽²⁾ = −∞⁽³⁾".into(),
        rows: vec![
            relation(
                "qrms-f",
                "Q_rms^F is R without (−∞⁽¹⁾,∞⁽²⁾), (−∞⁽¹⁾,−∞⁽²⁾) and their flips",
                RelationKind::QrmsF,
                &f,
                &qrms_f,
                &probes,
            ),
            relation(
                "srjms-f",
                "S_rjms^F equals Q_rms^F",
                RelationKind::SrjmsF,
                &f,
                &qrms_f,
                &probes,
            ),
            relation(
                "qrms",
                "Q_rms is R without (−∞⁽¹⁾,∞⁽²⁾) and its flip",
                RelationKind::QrmsBanach,
                &f,
                &qrms,
                &[],
            ),
            relation(
                "qrms-f-centered",
                "Q_rms along F'_k = {−k, …, k} equals Q_rms",
                RelationKind::QrmsF,
                &fc,
                &qrms,
                &[],
            ),
            relation(
                "srjms-f-centered",
                "S_rjms along F' equals Q_rms",
                RelationKind::SrjmsF,
                &fc,
                &qrms,
                &[],
            ),
            row(
                "not-regionally-proximal",
                "(−∞⁽¹⁾,∞⁽²⁾) is not regionally proximal",
                Check::NotRegionallyProximal {
                    pairs: vec![Point::Pair(a, d), Point::Pair(d, a)],
                },
            ),
            row(
                "limit-initial",
                "the empirical measures of (−3⁽³⁾, −3⁽²⁾) along F converge to δ_(∞⁽¹⁾,∞⁽²⁾)",
                Check::Limit {
                    start: PairTemplate::new(
                        PointTemplate::Linear { copy: 3, num: 0, den: 1, offset: -3 },
                        PointTemplate::Linear { copy: 2, num: 0, den: 1, offset: -3 },
                    ),
                    family: f.clone(),
                    lamp_quarters: false,
                    target: vec![(Point::Pair(b, d), Exact::from(ratio(1, 1)))],
                },
            ),
            row(
                "limit-centered",
                "the empirical measures of (3⁽¹⁾, 3⁽³⁾) along F' converge to ½(δ_(∞⁽¹⁾,∞⁽¹⁾) + δ_(−∞⁽¹⁾,−∞⁽²⁾))",
                Check::Limit {
                    start: PairTemplate::new(
                        PointTemplate::Linear { copy: 1, num: 0, den: 1, offset: 3 },
                        PointTemplate::Linear { copy: 3, num: 0, den: 1, offset: 3 },
                    ),
                    family: fc.clone(),
                    lamp_quarters: false,
                    target: vec![(Point::Pair(a, c), half()), (Point::Pair(b, b), half())],
                },
            ),
            row(
                "support",
                "the maximal support is {±∞⁽¹⁾, ±∞⁽²⁾}",
                Check::Support {
                    family: f.clone(),
                    expected: vec![a, b, c, d],
                },
            ),
            row(
                "icer",
                "the mean equicontinuous structure relation is R ∪ Δ",
                Check::Icer {
                    family: f.clone(),
                    relation: vec![Point::Pair(a, b), Point::Pair(b, c), Point::Pair(c, d)],
                    expected: r,
                },
            ),
        ],
        families: vec![f, fc],
        descriptor: space.descriptor().clone(),
        space,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RowStatus {
    Match,
    Mismatch,
    Inconclusive,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Match => "MATCH",
            RowStatus::Mismatch => "MISMATCH",
            RowStatus::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RowReport {
    pub id: String,
    pub claim: String,
    pub status: RowStatus,
    pub detail: String,
    /// Set when the row stopped on a resource budget.
    pub budget_exceeded: bool,
    pub data: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub name: String,
    pub profile: Profile,
    pub rows: Vec<RowReport>,
    pub matched: usize,
    pub mismatched: usize,
    pub inconclusive: usize,
}

impl Report {
    pub fn all_match(&self) -> bool {
        self.matched == self.rows.len()
    }

    pub fn has_mismatch(&self) -> bool {
        self.mismatched > 0
    }

    pub fn budget_exceeded(&self) -> bool {
        self.rows.iter().any(|r| r.budget_exceeded)
    }

    /// Fixed-width human table.
    pub fn table(&self) -> String {
        let w = self.rows.iter().map(|r| r.id.len()).max().unwrap_or(2).max(2);
        let mut out = format!("{} ({} profile)\n", self.name, self.profile);
        let _ = writeln!(out, "{:<w$}  {:<12}  detail", "id", "status");
        for r in &self.rows {
            let _ = writeln!(out, "{:<w$}  {:<12}  {}", r.id, r.status.to_string(), r.detail);
        }
        let _ = writeln!(
            out,
            "{} MATCH, {} MISMATCH, {} INCONCLUSIVE",
            self.matched, self.mismatched, self.inconclusive
        );
        out
    }
}

struct Outcome {
    status: RowStatus,
    detail: String,
    data: serde_json::Value,
}

fn outcome(ok: bool, detail: String, data: serde_json::Value) -> Outcome {
    Outcome {
        status: if ok { RowStatus::Match } else { RowStatus::Mismatch },
        detail,
        data,
    }
}

/// Checks every row of an entry. Rows run concurrently; the report keeps table order.
pub fn verify(entry: &GalleryEntry, profile: Profile) -> Report {
    verify_with_budget(entry, profile, &Budget::default())
}

/// [`verify`] with an explicit enumeration budget.
pub fn verify_with_budget(entry: &GalleryEntry, profile: Profile, budget: &Budget) -> Report {
    let rows: Vec<RowReport> = entry
        .rows
        .par_iter()
        .map(|r| {
            let (status, detail, budget_exceeded, data) = match check_row(&entry.space, &r.check, profile, budget) {
                Ok(o) => (o.status, o.detail, false, o.data),
                Err(e) => (RowStatus::Inconclusive, format!("error: {e}"), e.is_budget(), serde_json::Value::Null),
            };
            RowReport {
                id: r.id.clone(),
                claim: r.claim.clone(),
                status,
                detail,
                budget_exceeded,
                data,
            }
        })
        .collect();
    let count = |s: RowStatus| rows.iter().filter(|r| r.status == s).count();
    Report {
        name: entry.name.clone(),
        profile,
        matched: count(RowStatus::Match),
        mismatched: count(RowStatus::Mismatch),
        inconclusive: count(RowStatus::Inconclusive),
        rows,
    }
}

fn check_row(space: &Space, check: &Check, profile: Profile, budget: &Budget) -> Result<Outcome> {
    match check {
        Check::LampFolner => check_lamp_folner(profile, budget),
        Check::LampDecomposition { n_max } => check_decomposition(space, (*n_max).min(profile.lamp_n()), budget),
        Check::CesaroEqual {
            pairs,
            left,
            right,
            n_from,
        } => {
            let ns: Vec<u64> = (*n_from..=profile.lamp_n()).collect();
            let mut unequal = Vec::new();
            for p in pairs {
                let Point::Pair(x, y) = *p else {
                    return Err(Error::DimensionMismatch("mean distances compare pairs".into()));
                };
                let bad = ns
                    .par_iter()
                    .map(|&n| Ok((n, cesaro_metric(space, x, y, left, n, budget)? == cesaro_metric(space, x, y, right, n, budget)?)))
                    .collect::<Result<Vec<_>>>()?;
                unequal.extend(bad.into_iter().filter(|(_, eq)| !eq).map(|(n, _)| format!("{p} at n={n}")));
            }
            Ok(outcome(
                unequal.is_empty(),
                format!("{} pairs, n in [{n_from}, {}], {} unequal", pairs.len(), profile.lamp_n(), unequal.len()),
                json!({ "unequal": unequal }),
            ))
        }
        Check::Mec {
            family,
            approach,
            ks,
            epsilon,
        } => {
            let window = (1, profile.z_window());
            let ks: Vec<i64> = ks.iter().copied().filter(|&k| k <= window.1 as i64 / 4).collect();
            let report = mec_probe(space, family, approach, &ks, *epsilon, window, budget)?;
            let worst = report.estimates.iter().map(|e| e.2).fold(0.0, f64::max);
            Ok(outcome(
                report.verdict == MecVerdict::ConsistentWithMec,
                format!("largest D estimate {worst:.2e} < {epsilon} over window [1, {}]", window.1),
                json!({ "estimates": report.estimates, "violating": report.violating }),
            ))
        }
        Check::Relation {
            kind,
            family,
            candidates,
            members,
            probes,
        } => check_relation(space, *kind, family, candidates, members, probes, profile, budget),
        Check::DiagonalExcluded { kind, family, pairs } => {
            let params = detector_params(family, profile);
            let mut accepted = Vec::new();
            for p in pairs {
                match detect(*kind, space, p, family, &params) {
                    Err(Error::Domain(_)) => {}
                    Err(e) => return Err(e),
                    Ok(_) => accepted.push(p.to_string()),
                }
            }
            Ok(outcome(
                accepted.is_empty(),
                format!("{} diagonal pairs rejected", pairs.len() - accepted.len()),
                json!({ "accepted": accepted }),
            ))
        }
        Check::DiagonalHits { family, n, pairs } => {
            let mut misses = Vec::new();
            for p in pairs {
                for radius in [ratio(1, 2), ratio(1, 10), ratio(1, 1000)] {
                    let u = Neighborhood::ball(*p, radius);
                    let rec = hitting_density(space, p, &u, family, *n, budget)?;
                    if rec.ratio_exact != ratio(1, 1) {
                        misses.push(p.to_string());
                    }
                }
            }
            Ok(outcome(
                misses.is_empty(),
                format!("{} pairs, hit ratio 1 at n={n} for radii 1/2, 1/10, 1/1000", pairs.len()),
                json!({ "misses": misses }),
            ))
        }
        Check::NotRegionallyProximal { pairs } => {
            let params = DetectorParams::default();
            let mut data = Vec::new();
            let mut status = RowStatus::Match;
            for p in pairs {
                let cert = detect_qrp(space, p, &params.radii, &params.qrp)?;
                status = worse(status, expect(false, cert.verdict));
                data.push(json!({ "pair": p.to_string(), "verdict": cert.verdict }));
            }
            Ok(Outcome {
                status,
                detail: format!("{} pairs checked against every pair within the largest radius", pairs.len()),
                data: json!(data),
            })
        }
        Check::Limit {
            start,
            family,
            lamp_quarters,
            target,
        } => check_limit(space, start, family, *lamp_quarters, target, profile, budget),
        Check::Support { family, expected } => {
            let n = profile.z_window();
            let est = support_union_estimate(
                space,
                &space.truncate_singles(3),
                std::slice::from_ref(family),
                n,
                &ratio(1, 10),
                &ratio(1, 10),
                budget,
            )?;
            let got: BTreeSet<SystemPoint> = est.points.iter().copied().collect();
            let want: BTreeSet<SystemPoint> = expected.iter().map(|p| space.canonical(*p)).collect::<Result<_>>()?;
            Ok(outcome(
                got == want,
                format!(
                    "estimated {{{}}} at n={n}",
                    got.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
                ),
                serde_json::to_value(&est).unwrap_or_default(),
            ))
        }
        Check::Icer {
            family,
            relation,
            expected,
        } => check_icer(space, family, relation, expected, profile),
    }
}

fn check_lamp_folner(profile: Profile, budget: &Budget) -> Result<Outcome> {
    let f = FolnerFamily::LampBox;
    let group = GroupDescriptor::Lamplighter;
    let sigma = [GroupElement::sigma(1)];
    let mut bad = Vec::new();
    for n in 1..=profile.lamp_n() {
        let formula = (n as u128 + 1) << (n + 1);
        let size = f.cardinality(n)?;
        let listed = f.enumerate(group, n, budget)?.len() as u128;
        let defect = f.defect(group, n, &sigma, budget)?;
        let bound = lamp_defect_bound(&sigma[0], n)?;
        let want = BigRational::new(BigInt::from(1), BigInt::from(n + 1));
        if size != formula || listed != formula || defect != want || defect > bound {
            bad.push(n);
        }
    }
    Ok(outcome(
        bad.is_empty(),
        format!("n in [1, {}]: size (n+1)·2^(n+1), defect of σ is 1/(n+1)", profile.lamp_n()),
        json!({ "failing_n": bad }),
    ))
}

/// `¼ Σ_{b ⊆ {k, k+1}} (G_k)_* δ_{τ_b · x}`
fn lamp_quarter_measure(space: &Space, x: &Point, family: &FolnerFamily, k: u64, budget: &Budget) -> Result<AtomicMeasure> {
    let k = k as i64;
    let lamps: [&[i64]; 4] = [&[], &[k], &[k + 1], &[k, k + 1]];
    let parts = lamps
        .iter()
        .map(|b| {
            let y = space.act(&GroupElement::lamp(0, b.iter().copied()), x)?;
            AtomicMeasure::empirical(space, &y, family, k as u64, budget)
        })
        .collect::<Result<Vec<_>>>()?;
    let q = ratio(1, 4);
    let weighted: Vec<(BigRational, &AtomicMeasure)> = parts.iter().map(|m| (q.clone(), m)).collect();
    AtomicMeasure::mixture(space, &weighted)
}

fn check_decomposition(space: &Space, n_max: u64, budget: &Budget) -> Result<Outcome> {
    let results = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let x = Point::Pair(SystemPoint::up(n as i64), SystemPoint::up(n as i64 + 1));
            let full = AtomicMeasure::empirical(space, &x, &FolnerFamily::LampBox, n, budget)?;
            let split = lamp_quarter_measure(space, &x, &FolnerFamily::ZShifted, n, budget)?;
            Ok((n, full == split))
        })
        .collect::<Result<Vec<_>>>()?;
    let bad: Vec<u64> = results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    Ok(outcome(
        bad.is_empty(),
        format!("exact equality of atomic measures for n in [1, {n_max}]"),
        json!({ "failing_n": bad }),
    ))
}

fn check_limit(
    space: &Space,
    start: &PairTemplate,
    family: &FolnerFamily,
    lamp_quarters: bool,
    target: &[(Point, Exact)],
    profile: Profile,
    budget: &Budget,
) -> Result<Outcome> {
    let end = profile.z_window();
    let ks: Vec<u64> = (end - 4..=end).collect();
    let measures = ks
        .par_iter()
        .map(|&k| {
            let x = start.at(k as i64)?;
            if lamp_quarters {
                lamp_quarter_measure(space, &x, family, k, budget)
            } else {
                AtomicMeasure::empirical(space, &x, family, k, budget)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let target_exact: Vec<(Point, BigRational)> = target
        .iter()
        .map(|(p, w)| Ok((*p, exact::parse_rational(&w.exact)?)))
        .collect::<Result<_>>()?;
    let target_measure = AtomicMeasure::from_weighted(space, target_exact.iter().cloned())?;
    let Some(candidate) = cluster_detect(space, &measures, DEFAULT_CLUSTER_TOL)? else {
        return Ok(Outcome {
            status: RowStatus::Inconclusive,
            detail: format!("no trailing cluster among k in [{}, {end}]", end - 4),
            data: serde_json::Value::Null,
        });
    };
    // Moving every atom to its nearest limit point is one transport plan to
    // the limit view, so its cost bounds w1 from above.
    let mut snap_cost = BigRational::zero();
    for (p, w) in candidate.measure.atoms() {
        let snapped = AtomicMeasure::dirac(*p).snap_to_limits(space)?;
        snap_cost += space.metric(p, &snapped.atoms()[0].0)? * w;
    }
    let distance = w1(space, &candidate.measure, &target_measure)?;
    let min_weight = target_exact.iter().map(|(_, w)| w.clone()).min().unwrap_or_else(BigRational::zero);
    let heavy = candidate.limit_view.heavy_atoms(&(min_weight / BigInt::from(2)));
    let heavy_points: BTreeSet<Point> = heavy.iter().map(|(p, _)| *p).collect();
    let target_points: BTreeSet<Point> = target_exact.iter().map(|(p, _)| *p).collect();
    let weights_close = heavy.iter().all(|(p, w)| {
        target_exact
            .iter()
            .find(|(q, _)| q == p)
            .is_some_and(|(_, t)| (exact::to_f64(w) - exact::to_f64(t)).abs() < LIMIT_WEIGHT_TOL)
    });
    // Triangle inequality through the limit view; a failure here means the
    // transport solver and the metric disagree.
    let view_gap = w1(space, &candidate.limit_view, &target_measure)?;
    let within = distance <= &snap_cost + &view_gap;
    let ok = heavy_points == target_points && weights_close && within;
    Ok(outcome(
        ok,
        format!(
            "k={end}: w1 to target {:.3e}, spread {:.1e}, {} heavy atoms",
            exact::to_f64(&distance),
            candidate.spread,
            heavy.len()
        ),
        json!({
            "k": end,
            "w1": Exact::from(&distance),
            "snap_cost": Exact::from(&snap_cost),
            "limit_view_w1": Exact::from(&view_gap),
            "spread": candidate.spread,
            "heavy": heavy.iter().map(|(p, w)| json!({ "point": p.to_string(), "weight": Exact::from(w) })).collect::<Vec<_>>(),
        }),
    ))
}

/// Heavy-atom weight tolerance of limit rows. Atoms that start near a
/// different limit point keep a share of order `1/k` in the limit view.
pub const LIMIT_WEIGHT_TOL: f64 = 5e-2;

fn expect(member: bool, verdict: Verdict) -> RowStatus {
    match (member, verdict) {
        (_, Verdict::Inconclusive) => RowStatus::Inconclusive,
        (true, Verdict::Positive) | (false, Verdict::Negative) => RowStatus::Match,
        _ => RowStatus::Mismatch,
    }
}

fn worse(a: RowStatus, b: RowStatus) -> RowStatus {
    use RowStatus::*;
    match (a, b) {
        (Mismatch, _) | (_, Mismatch) => Mismatch,
        (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
        _ => Match,
    }
}

#[allow(clippy::too_many_arguments)]
fn check_relation(
    space: &Space,
    kind: RelationKind,
    family: &FolnerFamily,
    candidates: &[Point],
    members: &[Point],
    probes: &[(Point, Neighborhood)],
    profile: Profile,
    budget: &Budget,
) -> Result<Outcome> {
    let members: BTreeSet<Point> = members.iter().map(|p| space.canonical_point(p)).collect::<Result<_>>()?;
    let base = detector_params(family, profile);
    let results = candidates
        .par_iter()
        .map(|p| {
            let p = space.canonical_point(p)?;
            let mut params = base.clone();
            params.budget = *budget;
            if let Some((_, u)) = probes.iter().find(|(q, _)| space.canonical_point(q).ok() == Some(p)) {
                params.closure_probe = Some(ClosureProbe {
                    neighbourhood: u.clone(),
                    n_max: 50,
                    truncation: 200,
                });
            }
            let cert = detect(kind, space, &p, family, &params)?;
            Ok((p, cert))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut status = RowStatus::Match;
    let mut rows = Vec::new();
    let mut off = Vec::new();
    let mut found = Vec::new();
    for (p, cert) in &results {
        let member = members.contains(p);
        let s = expect(member, cert.verdict);
        status = worse(status, s);
        if s != RowStatus::Match {
            off.push(format!("{p}: {:?}", cert.verdict));
        }
        if cert.verdict == Verdict::Positive {
            found.push(p.to_string());
        }
        rows.push(json!({
            "pair": p.to_string(),
            "expected": member,
            "verdict": cert.verdict,
            "threshold": cert.threshold,
        }));
    }
    let detail = if off.is_empty() {
        format!("{} candidates, {} positive as expected", results.len(), found.len())
    } else {
        format!("{} candidates; unexpected: {}", results.len(), off.join("; "))
    };
    Ok(Outcome {
        status,
        detail,
        data: json!({ "family": family.to_string(), "pairs": rows }),
    })
}

fn check_icer(
    space: &Space,
    family: &FolnerFamily,
    relation: &[Point],
    expected: &[Point],
    profile: Profile,
) -> Result<Outcome> {
    let params = detector_params(family, profile);
    let certs = relation
        .par_iter()
        .map(|p| detect(RelationKind::QrmsF, space, p, family, &params))
        .collect::<Result<Vec<_>>>()?;
    let mut status = RowStatus::Match;
    for c in &certs {
        status = worse(status, expect(true, c.verdict));
    }
    let model = FiniteModel::from_space(space)?;
    let rel = model.classify(space, relation)?;
    let hull = icer_hull(&model, &rel)?;
    let mut want: BTreeSet<(usize, usize)> = model.classify(space, expected)?.into_iter().collect();
    want.extend((0..model.len()).map(|i| (i, i)));
    if hull.pairs != want {
        status = RowStatus::Mismatch;
    }
    let named = hull.named_pairs(&model);
    Ok(Outcome {
        status,
        detail: format!(
            "{} seed pairs detected in Q_rms^F; hull has {} blocks over {} classes",
            certs.iter().filter(|c| c.verdict == Verdict::Positive).count(),
            hull.blocks.len(),
            model.len()
        ),
        data: json!({
            "classes": model.classes,
            "blocks": hull.blocks,
            "pairs": named,
            "rounds": hull.rounds,
        }),
    })
}
