//! Finite atomic probability measures on a space or its square.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{self, Exact};
use crate::folner::{Budget, FolnerFamily};
use crate::group::GroupElement;
use crate::orbit::orbit_counts;
use crate::space::{Neighborhood, Point, Space, SystemPoint};
use crate::transport;

/// Supports above this many atoms are coarsened before transport.
pub const MAX_TRANSPORT_ATOMS: usize = 4000;

/// A probability measure with finitely many atoms and exact rational weights.
///
/// Atoms are canonical points, sorted, distinct and of positive weight; the
/// weights sum to exactly one.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<(Point, BigRational)>,
}

impl Serialize for AtomicMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Atom<'a> {
            point: &'a Point,
            weight: Exact,
        }
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|(p, w)| Atom {
                point: p,
                weight: Exact::from(w),
            })
            .collect();
        let mut st = s.serialize_struct("AtomicMeasure", 1)?;
        st.serialize_field("atoms", &atoms)?;
        st.end()
    }
}

impl AtomicMeasure {
    pub fn dirac(p: impl Into<Point>) -> Self {
        AtomicMeasure {
            atoms: vec![(p.into(), BigRational::one())],
        }
    }

    /// Canonicalizes, merges coinciding atoms and checks total mass one.
    pub fn from_weighted<I>(space: &Space, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Point, BigRational)>,
    {
        let mut merged: BTreeMap<Point, BigRational> = BTreeMap::new();
        let mut arity = None;
        for (p, w) in atoms {
            if w.is_negative() {
                return Err(Error::InvalidArgument(format!("negative weight at {p}")));
            }
            if *arity.get_or_insert(p.is_pair()) != p.is_pair() {
                return Err(Error::DimensionMismatch("measure mixes points and pairs".into()));
            }
            let p = space.canonical_point(&p)?;
            *merged.entry(p).or_insert_with(BigRational::zero) += w;
        }
        let atoms: Vec<_> = merged.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        let total: BigRational = atoms.iter().map(|(_, w)| w.clone()).sum();
        if !total.is_one() {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {}, not 1",
                exact::fraction_string(&total)
            )));
        }
        Ok(AtomicMeasure { atoms })
    }

    /// Uniform weight on a multiset given by counts of canonical points.
    pub fn from_counts(counts: &BTreeMap<Point, u64>, total: u64) -> Result<Self> {
        if total == 0 || counts.values().sum::<u64>() != total {
            return Err(Error::InvalidArgument("counts do not add up to the total".into()));
        }
        let denom = BigInt::from(total);
        Ok(AtomicMeasure {
            atoms: counts
                .iter()
                .filter(|(_, &c)| c > 0)
                .map(|(p, &c)| (*p, BigRational::new(BigInt::from(c), denom.clone())))
                .collect(),
        })
    }

    /// `(F_n)_* δ_start = (1/|F_n|) Σ_{g ∈ F_n} δ_{g.start}`.
    pub fn empirical(space: &Space, start: &Point, family: &FolnerFamily, n: u64, budget: &Budget) -> Result<Self> {
        let (counts, total) = orbit_counts(space, start, family, n, budget)?;
        AtomicMeasure::from_counts(&counts, total)
    }

    /// Convex combination `Σ c_i μ_i`; coefficients must be nonnegative and sum to one.
    pub fn mixture(space: &Space, parts: &[(BigRational, &AtomicMeasure)]) -> Result<Self> {
        let atoms = parts
            .iter()
            .flat_map(|(c, mu)| mu.atoms.iter().map(move |(p, w)| (*p, c * w)));
        AtomicMeasure::from_weighted(space, atoms)
    }

    pub fn atoms(&self) -> &[(Point, BigRational)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_pair_measure(&self) -> bool {
        self.atoms.first().is_some_and(|(p, _)| p.is_pair())
    }

    pub fn total_mass(&self) -> BigRational {
        self.atoms.iter().map(|(_, w)| w.clone()).sum()
    }

    pub fn weight_of(&self, p: &Point) -> BigRational {
        self.atoms
            .binary_search_by(|(q, _)| q.cmp(p))
            .map(|i| self.atoms[i].1.clone())
            .unwrap_or_else(|_| BigRational::zero())
    }

    /// `μ(U)`, exact.
    pub fn mass(&self, space: &Space, u: &Neighborhood) -> Result<BigRational> {
        let mut total = BigRational::zero();
        for (p, w) in &self.atoms {
            if space.contains(u, p)? {
                total += w;
            }
        }
        Ok(total)
    }

    /// `π_* μ`: atoms are mapped and coinciding images merged.
    pub fn pushforward<F>(&self, space: &Space, map: F) -> Result<Self>
    where
        F: Fn(&Point) -> Result<Point>,
    {
        let mapped = self
            .atoms
            .iter()
            .map(|(p, w)| Ok((map(p)?, w.clone())))
            .collect::<Result<Vec<_>>>()?;
        AtomicMeasure::from_weighted(space, mapped)
    }

    /// `g_* μ`.
    pub fn translate(&self, space: &Space, g: &GroupElement) -> Result<Self> {
        self.pushforward(space, |p| space.act(g, p))
    }

    /// Marginal on coordinate 0 or 1 of a pair measure.
    pub fn marginal(&self, space: &Space, coordinate: usize) -> Result<Self> {
        let (l, r) = space.pair_factors();
        let target = if coordinate == 0 { l } else { r };
        self.pushforward(target, |p| match *p {
            Point::Pair(a, b) => Ok(Point::Single(if coordinate == 0 { a } else { b })),
            Point::Single(_) => Err(Error::DimensionMismatch("marginal of a single-point measure".into())),
        })
    }

    /// Atoms with weight strictly above `weight_tol`.
    pub fn support(&self, weight_tol: &BigRational) -> Vec<Point> {
        self.atoms
            .iter()
            .filter(|(_, w)| w > weight_tol)
            .map(|(p, _)| *p)
            .collect()
    }

    /// Every coordinate moved to its nearest limit point (ties go to the smallest).
    pub fn snap_to_limits(&self, space: &Space) -> Result<Self> {
        let snap_single = |s: &Space, p: SystemPoint| -> Result<SystemPoint> {
            if p.is_limit() {
                return Ok(p);
            }
            let mut best: Option<(BigRational, SystemPoint)> = None;
            for l in s.limit_points() {
                let d = s.metric(&Point::Single(p), &Point::Single(l))?;
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, l));
                }
            }
            best.map(|(_, l)| l)
                .ok_or_else(|| Error::InvalidSpace("space without limit points".into()))
        };
        self.pushforward(space, |p| match *p {
            Point::Single(a) => Ok(Point::Single(snap_single(space, a)?)),
            Point::Pair(a, b) => {
                let (l, r) = space.pair_factors();
                Ok(Point::Pair(snap_single(l, a)?, snap_single(r, b)?))
            }
        })
    }

    /// Atoms of weight at least `threshold`.
    pub fn heavy_atoms(&self, threshold: &BigRational) -> Vec<(Point, BigRational)> {
        self.atoms.iter().filter(|(_, w)| w >= threshold).cloned().collect()
    }

    /// Merges neighbouring atoms closer than `eps` (in the float metric) into the first of them.
    fn coarsened(&self, space: &Space, eps: f64) -> Result<Self> {
        let mut order: Vec<usize> = (0..self.atoms.len()).collect();
        let keys = self
            .atoms
            .iter()
            .map(|(p, _)| embed_key(space, p))
            .collect::<Result<Vec<_>>>()?;
        order.sort_by(|&i, &j| keys[i].partial_cmp(&keys[j]).unwrap_or(std::cmp::Ordering::Equal));
        let mut merged: Vec<(Point, BigRational)> = Vec::new();
        for i in order {
            let (p, w) = &self.atoms[i];
            if let Some((q, acc)) = merged.last_mut() {
                if space.metric_f64(q, p)? < eps {
                    *acc += w;
                    continue;
                }
            }
            merged.push((*p, w.clone()));
        }
        AtomicMeasure::from_weighted(space, merged)
    }
}

fn embed_key(space: &Space, p: &Point) -> Result<(f64, f64)> {
    Ok(match *p {
        Point::Single(a) => (space.embed_f64(a)?, 0.0),
        Point::Pair(a, b) => {
            let (l, r) = space.pair_factors();
            (l.embed_f64(a)?, r.embed_f64(b)?)
        }
    })
}

fn sorted_for_transport(space: &Space, mu: &AtomicMeasure) -> Result<Vec<(Point, BigRational)>> {
    let mut atoms = mu.atoms.clone();
    let keys = atoms
        .iter()
        .map(|(p, _)| embed_key(space, p))
        .collect::<Result<Vec<_>>>()?;
    let mut idx: Vec<usize> = (0..atoms.len()).collect();
    idx.sort_by(|&i, &j| keys[i].partial_cmp(&keys[j]).unwrap_or(std::cmp::Ordering::Equal));
    atoms = idx.into_iter().map(|i| atoms[i].clone()).collect();
    Ok(atoms)
}

/// Wasserstein-1 distance with ground cost the space metric.
///
/// The optimal plan comes from the transportation simplex; its cost is then
/// evaluated with exact distances. Supports above [`MAX_TRANSPORT_ATOMS`] atoms
/// are first coarsened by merging atoms within `1e-9` of each other.
pub fn w1(space: &Space, mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<BigRational> {
    if mu.is_pair_measure() != nu.is_pair_measure() {
        return Err(Error::DimensionMismatch("w1 between measures on different spaces".into()));
    }
    let prep = |m: &AtomicMeasure| -> Result<AtomicMeasure> {
        if m.len() <= MAX_TRANSPORT_ATOMS {
            return Ok(m.clone());
        }
        let c = m.coarsened(space, 1e-9)?;
        if c.len() > MAX_TRANSPORT_ATOMS {
            return Err(Error::Budget {
                what: "w1 support size".into(),
                needed: c.len() as u128,
                limit: MAX_TRANSPORT_ATOMS as u128,
            });
        }
        Ok(c)
    };
    let (mu, nu) = (prep(mu)?, prep(nu)?);
    if mu == nu {
        return Ok(BigRational::zero());
    }
    let a = sorted_for_transport(space, &mu)?;
    let b = sorted_for_transport(space, &nu)?;
    let cost = |i: usize, j: usize| space.metric_f64(&a[i].0, &b[j].0).unwrap_or(f64::INFINITY);
    let supply: Vec<BigRational> = a.iter().map(|(_, w)| w.clone()).collect();
    let demand: Vec<BigRational> = b.iter().map(|(_, w)| w.clone()).collect();
    let flows = transport::solve(&cost, &supply, &demand)?;
    let mut total = BigRational::zero();
    for f in flows {
        let (p, q) = (&a[f.from].0, &b[f.to].0);
        if p != q {
            total += f.mass * space.metric(p, q)?;
        }
    }
    Ok(total)
}

/// `w1` through the integrated CDF difference, valid when the metric on single
/// points is the distance of their embeddings (two-point spaces and a single
/// one-point copy).
pub fn w1_line(space: &Space, mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<BigRational> {
    if mu.is_pair_measure() || nu.is_pair_measure() || !is_line_metric(space) {
        return Err(Error::InvalidArgument(
            "the one-dimensional formula needs single points with a line metric".into(),
        ));
    }
    let line = |m: &AtomicMeasure| -> Result<Vec<(BigRational, BigRational)>> {
        m.atoms
            .iter()
            .map(|(p, w)| match p {
                Point::Single(a) => Ok((space.embed(*a)?, w.clone())),
                Point::Pair(..) => unreachable!(),
            })
            .collect()
    };
    Ok(transport::w1_line(&line(mu)?, &line(nu)?))
}

/// Whether `metric(p, q) = |embed(p) − embed(q)|` for single points.
pub fn is_line_metric(space: &Space) -> bool {
    use crate::space::SpaceShape;
    match &space.descriptor().shape {
        SpaceShape::TwoPoint { .. } => true,
        SpaceShape::OnePoint { copies } => *copies == 1,
        SpaceShape::Product { .. } => false,
    }
}

/// `max_g w1(g_* μ, μ)` over the given generators.
pub fn invariance_defect(space: &Space, mu: &AtomicMeasure, generators: &[GroupElement]) -> Result<BigRational> {
    let mut worst = BigRational::zero();
    for g in generators {
        let d = w1(space, &mu.translate(space, g)?, mu)?;
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

/// A trailing-Cauchy limit candidate for a sequence of measures.
#[derive(Clone, Debug, Serialize)]
pub struct ClusterCandidate {
    pub measure: AtomicMeasure,
    /// The candidate with every coordinate moved to its nearest limit point.
    pub limit_view: AtomicMeasure,
    /// Largest pairwise w1 among the trailing entries.
    pub spread: f64,
    pub trailing: usize,
}

pub const DEFAULT_CLUSTER_TOL: f64 = 1e-3;
pub const CLUSTER_TRAIL: usize = 5;

/// Returns the last measure when the trailing entries are pairwise within `tol` in w1.
pub fn cluster_detect(space: &Space, measures: &[AtomicMeasure], tol: f64) -> Result<Option<ClusterCandidate>> {
    if measures.len() < 3 {
        return Err(Error::InvalidArgument("cluster detection needs at least three measures".into()));
    }
    let tail = &measures[measures.len().saturating_sub(CLUSTER_TRAIL)..];
    let mut spread: f64 = 0.0;
    for i in 0..tail.len() {
        for j in i + 1..tail.len() {
            let d = exact::to_f64(&w1(space, &tail[i], &tail[j])?);
            spread = spread.max(d);
            if d >= tol {
                return Ok(None);
            }
        }
    }
    let last = tail.last().expect("nonempty").clone();
    Ok(Some(ClusterCandidate {
        limit_view: last.snap_to_limits(space)?,
        measure: last,
        spread,
        trailing: tail.len(),
    }))
}

/// Parameters of the maximal-support estimate.
#[derive(Clone, Debug, Serialize)]
pub struct SupportEstimate {
    pub points: Vec<SystemPoint>,
    pub n: u64,
    pub radius: Exact,
    pub mass_floor: Exact,
    pub families: Vec<String>,
    pub starts: usize,
}

/// Union of the points carrying mass at least `floor` in some empirical measure
/// `(F_n)_* δ_x` over the given starts and families.
///
/// An isolated integer point `p` is tested with the neighbourhood `{p}`, a limit
/// point with the open ball of the given radius around it.
pub fn support_union_estimate(
    space: &Space,
    starts: &[SystemPoint],
    families: &[FolnerFamily],
    n: u64,
    radius: &BigRational,
    floor: &BigRational,
    budget: &Budget,
) -> Result<SupportEstimate> {
    let mut found = std::collections::BTreeSet::new();
    for fam in families {
        for x in starts {
            let mu = AtomicMeasure::empirical(space, &Point::Single(*x), fam, n, budget)?;
            for l in space.limit_points() {
                if mu.mass(space, &Neighborhood::ball(l, radius.clone()))? >= *floor {
                    found.insert(l);
                }
            }
            for (p, w) in mu.atoms() {
                if let Point::Single(a) = p {
                    if !a.is_limit() && w >= floor {
                        found.insert(*a);
                    }
                }
            }
        }
    }
    Ok(SupportEstimate {
        points: found.into_iter().collect(),
        n,
        radius: Exact::from(radius),
        mass_floor: Exact::from(floor),
        families: families.iter().map(|f| f.to_string()).collect(),
        starts: starts.len(),
    })
}
