//! Compact metric models built from compactifications of ℤ.
//!
//! Two families of spaces are supported: disjoint copies of the one-point
//! compactification `ℤ ∪ {∞}` and disjoint copies of the two-point
//! compactification `ℤ ∪ {±∞}`, the latter optionally with limit points glued
//! together. Products of two such spaces are allowed as well. Points of `X²`
//! are written as [`Point::Pair`] over a non-product space.
//!
//! The metric is fixed once and for all:
//!
//! * one-point copies use `φ(∞) = 0`, `φ(s) = 1/(2s+1)` for `s ≥ 0` and
//!   `φ(s) = 1/(2s−1)` for `s < 0`; two points are `|φ(p) − φ(q)|` apart plus
//!   one unit per copy index between them;
//! * two-point copies are laid out as unit segments on the real line. Glued
//!   copies are placed end to end and disconnected chains are separated by a
//!   gap of length one. `Int(s)` sits at the affine image of `s/(1+|s|)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::group::{GroupDescriptor, GroupElement};

/// Integer coordinates beyond this magnitude are refused by the exact metric.
pub const EXACT_COORD_LIMIT: i64 = 1 << 40;

type Q128 = Ratio<i128>;

/// Coordinate of a point inside one copy of a compactified ℤ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    MinusInf,
    Int(i64),
    PlusInf,
    /// The single point at infinity of a one-point compactification.
    Inf,
}

impl Coord {
    pub fn is_limit(self) -> bool {
        !matches!(self, Coord::Int(_))
    }

    pub fn as_int(self) -> Option<i64> {
        match self {
            Coord::Int(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::MinusInf => f.write_str("-inf"),
            Coord::Int(s) => write!(f, "{s}"),
            Coord::PlusInf => f.write_str("+inf"),
            Coord::Inf => f.write_str("inf"),
        }
    }
}

impl FromStr for Coord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "-inf" => Ok(Coord::MinusInf),
            "+inf" => Ok(Coord::PlusInf),
            "inf" => Ok(Coord::Inf),
            other => other
                .parse::<i64>()
                .map(Coord::Int)
                .map_err(|_| Error::Parse(format!("coordinate `{s}`"))),
        }
    }
}

impl Serialize for Coord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Coord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A point of a (non-product) space: a coordinate tagged with its copy.
///
/// One-point copies are numbered from 0 (so `↓s` is copy 0 and `↑s` is copy 1),
/// two-point copies from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemPoint {
    pub copy: u8,
    pub coord: Coord,
}

impl SystemPoint {
    pub fn new(copy: u8, coord: Coord) -> Self {
        SystemPoint { copy, coord }
    }

    pub fn int(copy: u8, s: i64) -> Self {
        SystemPoint::new(copy, Coord::Int(s))
    }

    /// `↑s`
    pub fn up(s: i64) -> Self {
        SystemPoint::int(1, s)
    }

    /// `↓s`
    pub fn down(s: i64) -> Self {
        SystemPoint::int(0, s)
    }

    pub fn up_inf() -> Self {
        SystemPoint::new(1, Coord::Inf)
    }

    pub fn down_inf() -> Self {
        SystemPoint::new(0, Coord::Inf)
    }

    pub fn is_limit(&self) -> bool {
        self.coord.is_limit()
    }
}

impl fmt::Display for SystemPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.coord, self.copy)
    }
}

impl FromStr for SystemPoint {
    type Err = Error;

    /// Accepts `coord@copy` as well as the shorthands `up_inf`, `down_inf`,
    /// `up5`, `down-3` (copies 1 and 0 of a one-point space).
    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim();
        let bad = || Error::Parse(format!("point `{text}`"));
        for (prefix, copy) in [("up", 1u8), ("down", 0u8)] {
            if let Some(rest) = t.strip_prefix(prefix) {
                let rest = rest.strip_prefix('_').unwrap_or(rest);
                let coord: Coord = rest.parse().map_err(|_| bad())?;
                return Ok(SystemPoint::new(copy, coord));
            }
        }
        let (coord, copy) = t.rsplit_once('@').ok_or_else(bad)?;
        Ok(SystemPoint::new(
            copy.trim().parse().map_err(|_| bad())?,
            coord.parse().map_err(|_| bad())?,
        ))
    }
}

/// A point of a space or of its square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Single(SystemPoint),
    Pair(SystemPoint, SystemPoint),
}

impl Point {
    pub fn pair(a: SystemPoint, b: SystemPoint) -> Self {
        Point::Pair(a, b)
    }

    pub fn is_pair(&self) -> bool {
        matches!(self, Point::Pair(..))
    }

    pub fn components(&self) -> Vec<SystemPoint> {
        match *self {
            Point::Single(p) => vec![p],
            Point::Pair(a, b) => vec![a, b],
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, Point::Pair(a, b) if a == b)
    }

    /// The pair with its coordinates swapped. Singles are returned unchanged.
    pub fn flipped(&self) -> Point {
        match *self {
            Point::Pair(a, b) => Point::Pair(b, a),
            p => p,
        }
    }
}

impl From<SystemPoint> for Point {
    fn from(p: SystemPoint) -> Self {
        Point::Single(p)
    }
}

impl From<(SystemPoint, SystemPoint)> for Point {
    fn from((a, b): (SystemPoint, SystemPoint)) -> Self {
        Point::Pair(a, b)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Single(p) => write!(f, "{p}"),
            Point::Pair(a, b) => write!(f, "({a}, {b})"),
        }
    }
}

impl FromStr for Point {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        let t = text.trim().trim_start_matches('(').trim_end_matches(')');
        match t.split_once(',') {
            Some((a, b)) => Ok(Point::Pair(a.parse()?, b.parse()?)),
            None => Ok(Point::Single(t.parse()?)),
        }
    }
}

/// How the acting group moves integer coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    /// `g.x = g + x`
    Translate,
    /// `k.x = x − k`, i.e. the integer `k` acts as `σ^k`.
    Sigma,
    /// `σ^a τ_b` toggles the copy at the sites in `b`, then applies `σ^a`.
    Lamplighter,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceShape {
    OnePoint {
        copies: u8,
    },
    TwoPoint {
        copies: u8,
        #[serde(default)]
        gluings: Vec<(SystemPoint, SystemPoint)>,
    },
    Product {
        left: Box<SpaceShape>,
        right: Box<SpaceShape>,
    },
}

/// Serializable description of a space together with its acting group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub shape: SpaceShape,
    pub group: GroupDescriptor,
    pub action: ActionKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Segment {
    offset: i64,
    reversed: bool,
}

#[derive(Clone, Debug)]
enum Geometry {
    OnePoint {
        copies: u8,
    },
    TwoPoint {
        copies: u8,
        /// Maps every glued limit point to its canonical representative.
        canon: BTreeMap<SystemPoint, SystemPoint>,
        segments: Vec<Segment>,
        length: i64,
    },
    Product(Box<Space>, Box<Space>),
}

/// A validated space with its precomputed layout.
#[derive(Clone, Debug)]
pub struct Space {
    desc: SpaceDescriptor,
    geometry: Geometry,
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        self.desc == other.desc
    }
}

impl Space {
    pub fn new(desc: SpaceDescriptor) -> Result<Self> {
        match desc.action {
            ActionKind::Translate | ActionKind::Sigma => {
                if desc.group != GroupDescriptor::Integers {
                    return Err(Error::InvalidSpace(
                        "translation actions need the integer group".into(),
                    ));
                }
            }
            ActionKind::Lamplighter => {
                if desc.group != GroupDescriptor::Lamplighter {
                    return Err(Error::InvalidSpace(
                        "the lamplighter action needs the lamplighter group".into(),
                    ));
                }
            }
        }
        let geometry = match &desc.shape {
            SpaceShape::OnePoint { copies } => {
                if *copies == 0 {
                    return Err(Error::InvalidSpace("at least one copy is required".into()));
                }
                if desc.action == ActionKind::Lamplighter && *copies != 2 {
                    return Err(Error::InvalidSpace(
                        "the lamplighter action lives on exactly two one-point copies".into(),
                    ));
                }
                Geometry::OnePoint { copies: *copies }
            }
            SpaceShape::TwoPoint { copies, gluings } => {
                if desc.action == ActionKind::Lamplighter {
                    return Err(Error::InvalidSpace(
                        "the lamplighter action lives on one-point copies".into(),
                    ));
                }
                two_point_layout(*copies, gluings)?
            }
            SpaceShape::Product { left, right } => {
                let sub = |shape: &SpaceShape| -> Result<Box<Space>> {
                    if matches!(shape, SpaceShape::Product { .. }) {
                        return Err(Error::InvalidSpace("nested products are not supported".into()));
                    }
                    Ok(Box::new(Space::new(SpaceDescriptor {
                        shape: shape.clone(),
                        group: desc.group,
                        action: desc.action,
                    })?))
                };
                Geometry::Product(sub(left)?, sub(right)?)
            }
        };
        Ok(Space { desc, geometry })
    }

    pub fn one_point(copies: u8, group: GroupDescriptor, action: ActionKind) -> Result<Self> {
        Space::new(SpaceDescriptor {
            shape: SpaceShape::OnePoint { copies },
            group,
            action,
        })
    }

    pub fn two_point(
        copies: u8,
        gluings: Vec<(SystemPoint, SystemPoint)>,
        group: GroupDescriptor,
        action: ActionKind,
    ) -> Result<Self> {
        Space::new(SpaceDescriptor {
            shape: SpaceShape::TwoPoint { copies, gluings },
            group,
            action,
        })
    }

    pub fn descriptor(&self) -> &SpaceDescriptor {
        &self.desc
    }

    pub fn group(&self) -> GroupDescriptor {
        self.desc.group
    }

    pub fn action(&self) -> ActionKind {
        self.desc.action
    }

    pub fn is_product(&self) -> bool {
        matches!(self.geometry, Geometry::Product(..))
    }

    /// The two spaces the coordinates of a [`Point::Pair`] live in.
    pub fn pair_factors(&self) -> (&Space, &Space) {
        match &self.geometry {
            Geometry::Product(a, b) => (a, b),
            _ => (self, self),
        }
    }

    /// Copy indices in increasing order.
    pub fn copies(&self) -> Vec<u8> {
        match &self.geometry {
            Geometry::OnePoint { copies } => (0..*copies).collect(),
            Geometry::TwoPoint { copies, .. } => (1..=*copies).collect(),
            Geometry::Product(..) => Vec::new(),
        }
    }

    /// Validates a single point and returns its canonical representative.
    pub fn canonical(&self, p: SystemPoint) -> Result<SystemPoint> {
        let outside = || Error::NotInSpace(p.to_string());
        match &self.geometry {
            Geometry::OnePoint { copies } => {
                if p.copy >= *copies || matches!(p.coord, Coord::PlusInf | Coord::MinusInf) {
                    return Err(outside());
                }
                Ok(p)
            }
            Geometry::TwoPoint { copies, canon, .. } => {
                if p.copy == 0 || p.copy > *copies || p.coord == Coord::Inf {
                    return Err(outside());
                }
                Ok(canon.get(&p).copied().unwrap_or(p))
            }
            Geometry::Product(..) => Err(Error::DimensionMismatch(format!(
                "single point {p} given for a product space"
            ))),
        }
    }

    pub fn canonical_point(&self, p: &Point) -> Result<Point> {
        match *p {
            Point::Single(a) => Ok(Point::Single(self.canonical(a)?)),
            Point::Pair(a, b) => {
                let (l, r) = self.pair_factors();
                Ok(Point::Pair(l.canonical(a)?, r.canonical(b)?))
            }
        }
    }

    /// All limit points, canonical and sorted.
    pub fn limit_points(&self) -> Vec<SystemPoint> {
        let mut out = Vec::new();
        match &self.geometry {
            Geometry::OnePoint { copies } => {
                for c in 0..*copies {
                    out.push(SystemPoint::new(c, Coord::Inf));
                }
            }
            Geometry::TwoPoint { copies, canon, .. } => {
                for c in 1..=*copies {
                    for coord in [Coord::MinusInf, Coord::PlusInf] {
                        let p = SystemPoint::new(c, coord);
                        out.push(canon.get(&p).copied().unwrap_or(p));
                    }
                }
            }
            Geometry::Product(..) => {}
        }
        out.sort();
        out.dedup();
        out
    }

    /// Exact real coordinate of a point of a non-product space.
    pub fn embed(&self, p: SystemPoint) -> Result<BigRational> {
        let q = self.embed_q128(p)?;
        Ok(BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom())))
    }

    pub fn embed_point(&self, p: &Point) -> Result<Vec<BigRational>> {
        match *p {
            Point::Single(a) => Ok(vec![self.embed(a)?]),
            Point::Pair(a, b) => {
                let (l, r) = self.pair_factors();
                Ok(vec![l.embed(a)?, r.embed(b)?])
            }
        }
    }

    fn embed_q128(&self, p: SystemPoint) -> Result<Q128> {
        let p = self.canonical(p)?;
        if let Coord::Int(s) = p.coord {
            if s.abs() > EXACT_COORD_LIMIT {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {s} exceeds the exact metric range"
                )));
            }
        }
        match &self.geometry {
            Geometry::OnePoint { .. } => Ok(phi_q(p.coord) + Q128::from_integer(3 * p.copy as i128)),
            Geometry::TwoPoint { segments, .. } => Ok(segment_position_q(segments, p)),
            Geometry::Product(..) => unreachable!("canonical rejects product singles"),
        }
    }

    pub fn embed_f64(&self, p: SystemPoint) -> Result<f64> {
        let p = self.canonical(p)?;
        match &self.geometry {
            Geometry::OnePoint { .. } => Ok(phi_f64(p.coord) + 3.0 * p.copy as f64),
            Geometry::TwoPoint { segments, .. } => Ok(segment_position_f64(segments, p)),
            Geometry::Product(..) => unreachable!("canonical rejects product singles"),
        }
    }

    fn single_metric_q128(&self, p: SystemPoint, q: SystemPoint) -> Result<Q128> {
        match &self.geometry {
            Geometry::OnePoint { .. } => {
                let (p, q) = (self.canonical(p)?, self.canonical(q)?);
                for c in [p.coord, q.coord] {
                    if let Coord::Int(s) = c {
                        if s.abs() > EXACT_COORD_LIMIT {
                            return Err(Error::InvalidArgument(format!(
                                "coordinate {s} exceeds the exact metric range"
                            )));
                        }
                    }
                }
                let gap = (p.copy as i128 - q.copy as i128).abs();
                Ok((phi_q(p.coord) - phi_q(q.coord)).abs() + Q128::from_integer(gap))
            }
            Geometry::TwoPoint { .. } => Ok((self.embed_q128(p)? - self.embed_q128(q)?).abs()),
            Geometry::Product(..) => Err(Error::DimensionMismatch(
                "single points given for a product space".into(),
            )),
        }
    }

    fn single_metric_f64(&self, p: SystemPoint, q: SystemPoint) -> Result<f64> {
        match &self.geometry {
            Geometry::OnePoint { .. } => {
                let (p, q) = (self.canonical(p)?, self.canonical(q)?);
                let gap = (p.copy as f64 - q.copy as f64).abs();
                Ok((phi_f64(p.coord) - phi_f64(q.coord)).abs() + gap)
            }
            Geometry::TwoPoint { .. } => Ok((self.embed_f64(p)? - self.embed_f64(q)?).abs()),
            Geometry::Product(..) => Err(Error::DimensionMismatch(
                "single points given for a product space".into(),
            )),
        }
    }

    /// Exact distance. Pairs use the sum of the coordinate distances.
    pub fn metric(&self, p: &Point, q: &Point) -> Result<BigRational> {
        match (*p, *q) {
            (Point::Single(a), Point::Single(b)) => {
                let d = self.single_metric_q128(a, b)?;
                Ok(q128_to_big(d))
            }
            (Point::Pair(a, a2), Point::Pair(b, b2)) => {
                let (l, r) = self.pair_factors();
                Ok(q128_to_big(l.single_metric_q128(a, b)?) + q128_to_big(r.single_metric_q128(a2, b2)?))
            }
            _ => Err(Error::DimensionMismatch(format!("cannot compare {p} with {q}"))),
        }
    }

    pub fn metric_f64(&self, p: &Point, q: &Point) -> Result<f64> {
        match (*p, *q) {
            (Point::Single(a), Point::Single(b)) => self.single_metric_f64(a, b),
            (Point::Pair(a, a2), Point::Pair(b, b2)) => {
                let (l, r) = self.pair_factors();
                Ok(l.single_metric_f64(a, b)? + r.single_metric_f64(a2, b2)?)
            }
            _ => Err(Error::DimensionMismatch(format!("cannot compare {p} with {q}"))),
        }
    }

    /// Largest possible distance between two single points.
    pub fn diameter(&self) -> BigRational {
        match &self.geometry {
            Geometry::OnePoint { copies } => crate::exact::int(2 + *copies as i64 - 1),
            Geometry::TwoPoint { length, .. } => crate::exact::int(*length),
            Geometry::Product(a, b) => a.diameter() + b.diameter(),
        }
    }

    /// Diameter of the space the given point lives in (the space itself or its square).
    pub fn diameter_for(&self, p: &Point) -> BigRational {
        match p {
            Point::Single(_) => self.diameter(),
            Point::Pair(..) => {
                let (l, r) = self.pair_factors();
                l.diameter() + r.diameter()
            }
        }
    }

    pub fn act_single(&self, g: &GroupElement, p: SystemPoint) -> Result<SystemPoint> {
        if g.group() != self.desc.group {
            return Err(Error::GroupMismatch {
                expected: self.desc.group,
                found: g.group(),
            });
        }
        let p = self.canonical(p)?;
        let Coord::Int(s) = p.coord else {
            return Ok(p);
        };
        let overflow = Error::Overflow("action on a coordinate");
        match (self.desc.action, g) {
            (ActionKind::Translate, GroupElement::IntShift(a)) => {
                Ok(SystemPoint::int(p.copy, s.checked_add(*a).ok_or(overflow)?))
            }
            (ActionKind::Sigma, GroupElement::IntShift(a)) => {
                Ok(SystemPoint::int(p.copy, s.checked_sub(*a).ok_or(overflow)?))
            }
            (ActionKind::Lamplighter, GroupElement::Lamp { shift, lamps }) => {
                let copy = if lamps.contains(s) { 1 - p.copy } else { p.copy };
                Ok(SystemPoint::int(copy, s.checked_sub(*shift).ok_or(overflow)?))
            }
            _ => Err(Error::GroupMismatch {
                expected: self.desc.group,
                found: g.group(),
            }),
        }
    }

    /// Applies `g` to a point; pairs are moved by the diagonal action.
    pub fn act(&self, g: &GroupElement, p: &Point) -> Result<Point> {
        match *p {
            Point::Single(a) => Ok(Point::Single(self.act_single(g, a)?)),
            Point::Pair(a, b) => {
                let (l, r) = self.pair_factors();
                Ok(Point::Pair(l.act_single(g, a)?, r.act_single(g, b)?))
            }
        }
    }

    /// Every point with integer coordinate in `[-n, n]`, plus all limit points.
    /// Product spaces return all pairs of truncated factor points.
    pub fn truncate(&self, n: i64) -> Result<Vec<Point>> {
        if n < 0 {
            return Err(Error::InvalidArgument("truncation must be nonnegative".into()));
        }
        if let Geometry::Product(a, b) = &self.geometry {
            let left = a.truncate_singles(n);
            let right = b.truncate_singles(n);
            let mut out = Vec::with_capacity(left.len() * right.len());
            for &x in &left {
                for &y in &right {
                    out.push(Point::Pair(x, y));
                }
            }
            return Ok(out);
        }
        Ok(self.truncate_singles(n).into_iter().map(Point::Single).collect())
    }

    /// Single points of a non-product space with `|s| ≤ n`, limit points included.
    pub fn truncate_singles(&self, n: i64) -> Vec<SystemPoint> {
        let mut out = self.limit_points();
        for c in self.copies() {
            for s in -n..=n {
                out.push(SystemPoint::int(c, s));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn contains(&self, u: &Neighborhood, p: &Point) -> Result<bool> {
        let p = self.canonical_point(p)?;
        match u {
            Neighborhood::Ball { center, radius } => {
                let center = self.canonical_point(center)?;
                if center.is_pair() != p.is_pair() {
                    return Err(Error::DimensionMismatch(format!(
                        "ball centred at {center} queried with {p}"
                    )));
                }
                let approx = self.metric_f64(&center, &p)?;
                let r = crate::exact::to_f64(radius);
                if (approx - r).abs() > 1e-9 * (1.0 + r.abs()) {
                    return Ok(approx < r);
                }
                Ok(self.metric(&center, &p)? < *radius)
            }
            Neighborhood::PointSet { points, tails } => {
                for q in points {
                    if self.canonical_point(q)? == p {
                        return Ok(true);
                    }
                }
                if let Point::Single(a) = p {
                    return Ok(tails.iter().any(|t| t.matches(a)));
                }
                Ok(false)
            }
            Neighborhood::ProductOf { left: a, right: b } => {
                let Point::Pair(x, y) = p else {
                    return Err(Error::DimensionMismatch(format!(
                        "product neighbourhood queried with single point {p}"
                    )));
                };
                let (l, r) = self.pair_factors();
                Ok(l.contains(a, &Point::Single(x))? && r.contains(b, &Point::Single(y))?)
            }
            Neighborhood::All => Ok(true),
        }
    }
}

fn q128_to_big(q: Q128) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

fn phi_q(c: Coord) -> Q128 {
    match c {
        Coord::Int(s) if s >= 0 => Q128::new(1, 2 * s as i128 + 1),
        Coord::Int(s) => Q128::new(1, 2 * s as i128 - 1),
        _ => Q128::zero(),
    }
}

fn phi_f64(c: Coord) -> f64 {
    match c {
        Coord::Int(s) if s >= 0 => 1.0 / (2.0 * s as f64 + 1.0),
        Coord::Int(s) => 1.0 / (2.0 * s as f64 - 1.0),
        _ => 0.0,
    }
}

/// Position in `[0, 1]` of a coordinate on a forward-oriented unit segment.
fn unit_position_q(c: Coord) -> Q128 {
    match c {
        Coord::MinusInf => Q128::zero(),
        Coord::PlusInf => Q128::from_integer(1),
        Coord::Int(s) => {
            let u = Q128::new(s as i128, 1 + (s as i128).abs());
            (Q128::from_integer(1) + u) / 2
        }
        Coord::Inf => unreachable!("two-point spaces have no single infinity"),
    }
}

fn unit_position_f64(c: Coord) -> f64 {
    match c {
        Coord::MinusInf => 0.0,
        Coord::PlusInf => 1.0,
        Coord::Int(s) => {
            let s = s as f64;
            (1.0 + s / (1.0 + s.abs())) / 2.0
        }
        Coord::Inf => unreachable!("two-point spaces have no single infinity"),
    }
}

fn segment_position_q(segments: &[Segment], p: SystemPoint) -> Q128 {
    let seg = segments[p.copy as usize - 1];
    let u = unit_position_q(p.coord);
    let u = if seg.reversed { Q128::from_integer(1) - u } else { u };
    Q128::from_integer(seg.offset as i128) + u
}

fn segment_position_f64(segments: &[Segment], p: SystemPoint) -> f64 {
    let seg = segments[p.copy as usize - 1];
    let u = unit_position_f64(p.coord);
    let u = if seg.reversed { 1.0 - u } else { u };
    seg.offset as f64 + u
}

/// End of a copy: 0 for `−∞`, 1 for `+∞`.
fn end_of(c: Coord) -> Option<usize> {
    match c {
        Coord::MinusInf => Some(0),
        Coord::PlusInf => Some(1),
        _ => None,
    }
}

fn two_point_layout(copies: u8, gluings: &[(SystemPoint, SystemPoint)]) -> Result<Geometry> {
    if copies == 0 {
        return Err(Error::InvalidSpace("at least one copy is required".into()));
    }
    let n = copies as usize;
    // partner[copy-1][end] = (copy'-1, end')
    let mut partner: Vec<[Option<(usize, usize)>; 2]> = vec![[None, None]; n];
    let mut seen = std::collections::BTreeSet::new();
    for &(a, b) in gluings {
        let check = |p: SystemPoint| -> Result<(usize, usize)> {
            let end = end_of(p.coord).ok_or_else(|| {
                Error::InvalidSpace(format!("only limit points can be glued, got {p}"))
            })?;
            if p.copy == 0 || p.copy > copies {
                return Err(Error::InvalidSpace(format!("gluing mentions unknown copy in {p}")));
            }
            Ok((p.copy as usize - 1, end))
        };
        let (ea, eb) = (check(a)?, check(b)?);
        let key = if ea <= eb { (ea, eb) } else { (eb, ea) };
        if !seen.insert(key) {
            continue;
        }
        if ea.0 == eb.0 {
            return Err(Error::InvalidSpace(format!(
                "gluing {a} to {b} closes a loop; only chains are supported"
            )));
        }
        for (x, y) in [(ea, eb), (eb, ea)] {
            if partner[x.0][x.1].is_some() {
                return Err(Error::InvalidSpace(format!(
                    "limit point of copy {} is glued twice; only chains are supported",
                    x.0 + 1
                )));
            }
            partner[x.0][x.1] = Some(y);
        }
    }

    let mut segments = vec![Segment { offset: 0, reversed: false }; n];
    let mut placed = vec![false; n];
    let mut offset = 0i64;
    let mut canon = BTreeMap::new();
    for start in 0..n {
        if placed[start] {
            continue;
        }
        // Collect the component and find its lowest-index copy with a free end.
        let mut comp = vec![start];
        let mut stack = vec![start];
        let mut in_comp = vec![false; n];
        in_comp[start] = true;
        while let Some(c) = stack.pop() {
            for (c2, _) in partner[c].iter().flatten() {
                if !in_comp[*c2] {
                    in_comp[*c2] = true;
                    comp.push(*c2);
                    stack.push(*c2);
                }
            }
        }
        comp.sort_unstable();
        let Some(&first) = comp.iter().find(|&&c| partner[c][0].is_none() || partner[c][1].is_none())
        else {
            return Err(Error::InvalidSpace(
                "gluings form a cycle; only chains are supported".into(),
            ));
        };
        // Free end on the left; forward orientation when both ends are free.
        let mut left_end = if partner[first][0].is_none() { 0 } else { 1 };
        let mut cur = first;
        loop {
            segments[cur] = Segment {
                offset,
                reversed: left_end == 1,
            };
            placed[cur] = true;
            offset += 1;
            let right_end = 1 - left_end;
            match partner[cur][right_end] {
                Some((next, next_end)) => {
                    let here = SystemPoint::new(cur as u8 + 1, if right_end == 0 { Coord::MinusInf } else { Coord::PlusInf });
                    let there = SystemPoint::new(next as u8 + 1, if next_end == 0 { Coord::MinusInf } else { Coord::PlusInf });
                    let rep = here.min(there);
                    canon.insert(here, rep);
                    canon.insert(there, rep);
                    cur = next;
                    left_end = next_end;
                }
                None => break,
            }
        }
        offset += 1;
    }
    Ok(Geometry::TwoPoint {
        copies,
        canon,
        segments,
        length: offset - 1,
    })
}

/// Which integer coordinates a [`Tail`] collects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    AtMost,
    AtLeast,
}

/// All integer points `s` of one copy with `s ≤ bound` (or `s ≥ bound`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tail {
    pub copy: u8,
    pub side: TailSide,
    pub bound: i64,
}

impl Tail {
    pub fn at_most(copy: u8, bound: i64) -> Self {
        Tail {
            copy,
            side: TailSide::AtMost,
            bound,
        }
    }

    pub fn at_least(copy: u8, bound: i64) -> Self {
        Tail {
            copy,
            side: TailSide::AtLeast,
            bound,
        }
    }

    pub fn matches(&self, p: SystemPoint) -> bool {
        match (p.coord, self.side) {
            (Coord::Int(s), TailSide::AtMost) => p.copy == self.copy && s <= self.bound,
            (Coord::Int(s), TailSide::AtLeast) => p.copy == self.copy && s >= self.bound,
            _ => false,
        }
    }
}

/// A decidable subset of a space or of its square.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Neighborhood {
    /// Open ball: membership is `metric(center, p) < radius`.
    Ball {
        center: Point,
        #[serde(with = "rational_serde")]
        radius: BigRational,
    },
    PointSet {
        points: Vec<Point>,
        #[serde(default)]
        tails: Vec<Tail>,
    },
    ProductOf {
        left: Box<Neighborhood>,
        right: Box<Neighborhood>,
    },
    /// The whole space.
    All,
}

impl Neighborhood {
    pub fn ball(center: impl Into<Point>, radius: BigRational) -> Self {
        Neighborhood::Ball {
            center: center.into(),
            radius,
        }
    }

    pub fn points<I: IntoIterator<Item = Point>>(points: I) -> Self {
        Neighborhood::PointSet {
            points: points.into_iter().collect(),
            tails: Vec::new(),
        }
    }

    pub fn product(a: Neighborhood, b: Neighborhood) -> Self {
        Neighborhood::ProductOf {
            left: Box::new(a),
            right: Box::new(b),
        }
    }
}

pub(crate) mod rational_serde {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&crate::exact::fraction_string(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        crate::exact::parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Largest absolute integer coordinate among the components of a point.
pub fn max_abs_coord(p: &Point) -> i64 {
    p.components()
        .iter()
        .filter_map(|c| c.coord.as_int())
        .map(|s| s.checked_abs().unwrap_or(i64::MAX))
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
pub(crate) fn big_to_f64(q: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(q).unwrap_or_else(|| crate::exact::to_f64(q))
}
