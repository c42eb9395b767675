//! Smallest closed invariant equivalence relation containing a relation, on a
//! finite model of the space.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupDescriptor;
use crate::space::{ActionKind, Coord, Point, Space, SystemPoint};

/// A finite model: points of the space grouped into classes.
///
/// Limit points are their own classes; the integer points of each copy form
/// one orbit class. `generators` permute classes. Each `approach` sends a
/// class to the limit class reached along one direction of the group (limit
/// classes are fixed), so relating `A` and `B` forces relating their images:
/// this is the topological closure step.
#[derive(Clone, Debug, Serialize)]
pub struct FiniteModel {
    pub classes: Vec<String>,
    pub generators: Vec<Vec<usize>>,
    pub approaches: Vec<Vec<usize>>,
    #[serde(skip)]
    index: BTreeMap<String, usize>,
    #[serde(skip)]
    points: Vec<Option<SystemPoint>>,
}

impl FiniteModel {
    pub fn new(classes: Vec<String>, generators: Vec<Vec<usize>>, approaches: Vec<Vec<usize>>) -> Result<Self> {
        let n = classes.len();
        for map in generators.iter().chain(approaches.iter()) {
            if map.len() != n || map.iter().any(|&c| c >= n) {
                return Err(Error::InvalidArgument("class maps must send every class to a class".into()));
            }
        }
        for g in &generators {
            let distinct: BTreeSet<_> = g.iter().collect();
            if distinct.len() != n {
                return Err(Error::InvalidArgument("generators must permute the classes".into()));
            }
        }
        let index: BTreeMap<String, usize> = classes.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        if index.len() != n {
            return Err(Error::InvalidArgument("class names must be distinct".into()));
        }
        Ok(FiniteModel {
            points: vec![None; n],
            classes,
            generators,
            approaches,
            index,
        })
    }

    /// The model of a ℤ-action by translations (or their inverses) on a
    /// compactified space. Lamplighter actions have no registered model.
    pub fn from_space(space: &Space) -> Result<Self> {
        if space.is_product() || space.group() != GroupDescriptor::Integers || space.action() == ActionKind::Lamplighter {
            return Err(Error::InvalidArgument(
                "finite models are registered only for ℤ-actions on a base space".into(),
            ));
        }
        let limits = space.limit_points();
        let copies = space.copies();
        let mut classes: Vec<String> = limits.iter().map(|p| p.to_string()).collect();
        let mut points: Vec<Option<SystemPoint>> = limits.iter().map(|&p| Some(p)).collect();
        for c in &copies {
            classes.push(format!("orbit@{c}"));
            points.push(None);
        }
        let nl = limits.len();
        let limit_index = |p: SystemPoint| -> Result<usize> {
            let p = space.canonical(p)?;
            limits
                .iter()
                .position(|&q| q == p)
                .ok_or_else(|| Error::NotInSpace(p.to_string()))
        };
        let one_point = limits.iter().any(|p| p.coord == Coord::Inf);
        let mut approaches = Vec::new();
        let ends: &[Coord] = if one_point { &[Coord::Inf] } else { &[Coord::PlusInf, Coord::MinusInf] };
        for &end in ends {
            let mut map: Vec<usize> = (0..nl).collect();
            for &c in &copies {
                map.push(limit_index(SystemPoint::new(c, end))?);
            }
            approaches.push(map);
        }
        let identity: Vec<usize> = (0..classes.len()).collect();
        let mut model = FiniteModel::new(classes, vec![identity], approaches)?;
        model.points = points;
        for (i, c) in copies.iter().enumerate() {
            model.index.insert(format!("orbit@{c}"), nl + i);
        }
        Ok(model)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownName(format!("class {name}")))
    }

    /// Class of a point of the underlying space (models built by [`FiniteModel::from_space`]).
    pub fn class_of(&self, space: &Space, p: SystemPoint) -> Result<usize> {
        let p = space.canonical(p)?;
        if p.is_limit() {
            return self.class_index(&p.to_string());
        }
        self.class_index(&format!("orbit@{}", p.copy))
    }

    /// Representative point of a class: the limit point, or `0` in the copy.
    pub fn representative(&self, class: usize) -> Option<SystemPoint> {
        if let Some(p) = self.points.get(class).copied().flatten() {
            return Some(p);
        }
        let name = self.classes.get(class)?;
        let copy: u8 = name.strip_prefix("orbit@")?.parse().ok()?;
        Some(SystemPoint::int(copy, 0))
    }

    /// Class pairs of a set of point pairs.
    pub fn classify(&self, space: &Space, pairs: &[Point]) -> Result<Vec<(usize, usize)>> {
        pairs
            .iter()
            .map(|p| match *p {
                Point::Pair(a, b) => Ok((self.class_of(space, a)?, self.class_of(space, b)?)),
                Point::Single(_) => Err(Error::DimensionMismatch("relations contain pairs".into())),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IcerResult {
    /// Equivalence classes of the hull, each sorted, in order of first element.
    pub blocks: Vec<Vec<usize>>,
    /// The hull as a set of class pairs (diagonal included).
    pub pairs: BTreeSet<(usize, usize)>,
    pub rounds: usize,
}

impl IcerResult {
    pub fn named_pairs(&self, model: &FiniteModel) -> BTreeSet<(String, String)> {
        self.pairs
            .iter()
            .map(|&(a, b)| (model.classes[a].clone(), model.classes[b].clone()))
            .collect()
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

fn union(parent: &mut [usize], a: usize, b: usize) -> bool {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra == rb {
        return false;
    }
    let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
    parent[hi] = lo;
    true
}

/// Fixpoint closure of `relation ∪ Δ` under symmetry, transitivity, the
/// generators and the approach maps.
pub fn icer_hull(model: &FiniteModel, relation: &[(usize, usize)]) -> Result<IcerResult> {
    let n = model.len();
    if relation.iter().any(|&(a, b)| a >= n || b >= n) {
        return Err(Error::InvalidArgument("relation mentions an unknown class".into()));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    for &(a, b) in relation {
        union(&mut parent, a, b);
    }
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut changed = false;
        for a in 0..n {
            for b in (a + 1)..n {
                if find(&mut parent, a) != find(&mut parent, b) {
                    continue;
                }
                for map in model.generators.iter().chain(model.approaches.iter()) {
                    changed |= union(&mut parent, map[a], map[b]);
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for x in 0..n {
        let r = find(&mut parent, x);
        blocks.entry(r).or_default().push(x);
    }
    let blocks: Vec<Vec<usize>> = blocks.into_values().collect();
    let mut pairs = BTreeSet::new();
    for block in &blocks {
        for &a in block {
            for &b in block {
                pairs.insert((a, b));
            }
        }
    }
    Ok(IcerResult { blocks, pairs, rounds })
}
