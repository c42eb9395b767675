//! Hitting-time sets `G_U(y, y') = {g : (g.y, g.y') ∈ U}` and finite proxies
//! for their upper asymptotic and upper Banach densities.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::Exact;
use crate::folner::{Budget, FolnerFamily};
use crate::group::{GroupDescriptor, GroupElement};
use crate::orbit::orbit_counts;
use crate::space::{Neighborhood, Point, Space};

/// Exact hit count of a pair along one Følner set.
#[derive(Clone, Debug, Serialize)]
pub struct HittingRecord {
    pub pair: Point,
    pub family: String,
    pub n: u64,
    pub hits: u64,
    pub size: u64,
    pub ratio: Exact,
    #[serde(skip)]
    pub ratio_exact: BigRational,
}

/// The elements of `elements` moving `pair` into `u`.
pub fn hitting_set(space: &Space, pair: &Point, u: &Neighborhood, elements: &[GroupElement]) -> Result<Vec<GroupElement>> {
    let mut out = Vec::new();
    for g in elements {
        if space.contains(u, &space.act(g, pair)?)? {
            out.push(g.clone());
        }
    }
    Ok(out)
}

/// `|G_U(pair) ∩ F_n| / |F_n|`, exact.
pub fn hitting_density(
    space: &Space,
    pair: &Point,
    u: &Neighborhood,
    family: &FolnerFamily,
    n: u64,
    budget: &Budget,
) -> Result<HittingRecord> {
    let (counts, size) = orbit_counts(space, pair, family, n, budget)?;
    let mut hits = 0u64;
    for (p, c) in &counts {
        if space.contains(u, p)? {
            hits += c;
        }
    }
    let ratio = BigRational::new(BigInt::from(hits), BigInt::from(size));
    Ok(HittingRecord {
        pair: *pair,
        family: family.to_string(),
        n,
        hits,
        size,
        ratio: Exact::from(&ratio),
        ratio_exact: ratio,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct UaEstimate {
    pub records: Vec<HittingRecord>,
    /// Largest ratio over the upper half of the window.
    pub tail_max: Exact,
    #[serde(skip)]
    pub tail_max_exact: BigRational,
    pub window: (u64, u64),
}

pub fn ua_dens_estimate(
    space: &Space,
    pair: &Point,
    u: &Neighborhood,
    family: &FolnerFamily,
    window: (u64, u64),
    budget: &Budget,
) -> Result<UaEstimate> {
    if window.0 == 0 || window.0 > window.1 {
        return Err(Error::InvalidArgument("window must be nonempty and start at 1 or later".into()));
    }
    let records = (window.0..=window.1)
        .into_par_iter()
        .map(|n| hitting_density(space, pair, u, family, n, budget))
        .collect::<Result<Vec<_>>>()?;
    let tail = &records[records.len() / 2..];
    let tail_max = tail
        .iter()
        .map(|r| r.ratio_exact.clone())
        .max()
        .unwrap_or_else(BigRational::zero);
    Ok(UaEstimate {
        records,
        tail_max: Exact::from(&tail_max),
        tail_max_exact: tail_max,
        window,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct UbEstimate {
    pub value: Exact,
    #[serde(skip)]
    pub value_exact: BigRational,
    pub argmax_translate: i64,
    pub shape: String,
    pub n: u64,
    pub translates: (i64, i64),
}

/// `max_{t ∈ translates} |G' ∩ F_n·t| / |F_n|` where `G'` is given by a
/// membership predicate and `t` ranges over translations (`t` in ℤ, `σ^t` in
/// the lamplighter group).
pub fn banach_ratio<P>(
    group: GroupDescriptor,
    predicate: P,
    shape: &FolnerFamily,
    n: u64,
    translates: (i64, i64),
    budget: &Budget,
) -> Result<UbEstimate>
where
    P: Fn(&GroupElement) -> Result<bool> + Sync,
{
    if translates.0 > translates.1 {
        return Err(Error::InvalidArgument("empty translate range".into()));
    }
    let f = shape.enumerate(group, n, budget)?;
    let size = f.len() as i64;
    // Membership is memoized: for translation shapes most products repeat.
    let counts = (translates.0..=translates.1)
        .into_par_iter()
        .map(|t| {
            let tg = GroupElement::translation(group, t);
            let mut memo: HashMap<GroupElement, bool> = HashMap::new();
            let mut hits = 0i64;
            for g in &f {
                let h = g.multiply(&tg)?;
                let hit = match memo.get(&h) {
                    Some(&b) => b,
                    None => {
                        let b = predicate(&h)?;
                        memo.insert(h, b);
                        b
                    }
                };
                if hit {
                    hits += 1;
                }
            }
            Ok((t, hits))
        })
        .collect::<Result<Vec<_>>>()?;
    let (best_t, best) = counts
        .iter()
        .fold((translates.0, -1i64), |(bt, bh), &(t, h)| if h > bh { (t, h) } else { (bt, bh) });
    let value = BigRational::new(BigInt::from(best), BigInt::from(size));
    Ok(UbEstimate {
        value: Exact::from(&value),
        value_exact: value,
        argmax_translate: best_t,
        shape: shape.to_string(),
        n,
        translates,
    })
}

/// Finite proxy of the upper Banach density of `G_U(pair)`.
pub fn ub_dens_estimate(
    space: &Space,
    pair: &Point,
    u: &Neighborhood,
    shape: &FolnerFamily,
    n: u64,
    translates: (i64, i64),
    budget: &Budget,
) -> Result<UbEstimate> {
    let pair = space.canonical_point(pair)?;
    banach_ratio(
        space.group(),
        |g| space.contains(u, &space.act(g, &pair)?),
        shape,
        n,
        translates,
        budget,
    )
}

/// Default translate range `{−5n, …, 5n}`.
pub fn default_translates(n: u64) -> (i64, i64) {
    let r = 5 * n as i64;
    (-r, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};
    use crate::space::{ActionKind, Coord, SystemPoint};

    fn dock() -> Space {
        Space::one_point(1, GroupDescriptor::Integers, ActionKind::Translate).unwrap()
    }

    #[test]
    fn fixed_pair_hits_everything() {
        let s = dock();
        let inf = SystemPoint::new(0, Coord::Inf);
        let pair = Point::Pair(inf, inf);
        let u = Neighborhood::ball(pair, ratio(1, 10));
        let f = FolnerFamily::ZInitial.enumerate(GroupDescriptor::Integers, 12, &Budget::default()).unwrap();
        assert_eq!(hitting_set(&s, &pair, &u, &f).unwrap(), f);
        let r = hitting_density(&s, &pair, &u, &FolnerFamily::ZInitial, 12, &Budget::default()).unwrap();
        assert_eq!(r.ratio_exact, int(1));
    }

    #[test]
    fn isolated_diagonal_is_hit_once() {
        let s = dock();
        let x = SystemPoint::int(0, 5);
        let u = Neighborhood::points([Point::Pair(x, x)]);
        let r = hitting_density(
            &s,
            &Point::Pair(SystemPoint::int(0, 0), SystemPoint::int(0, 0)),
            &u,
            &FolnerFamily::ZInitial,
            10,
            &Budget::default(),
        )
        .unwrap();
        assert_eq!(r.ratio_exact, ratio(1, 10));
        let pair = Point::Pair(SystemPoint::int(0, -3), SystemPoint::int(0, -3));
        let big = FolnerFamily::ZCentered.enumerate(GroupDescriptor::Integers, 40, &Budget::default()).unwrap();
        assert!(hitting_set(&s, &pair, &u, &big).unwrap().len() <= 1);
    }

    #[test]
    fn even_integers_have_banach_ratio_one_half() {
        let est = banach_ratio(
            GroupDescriptor::Integers,
            |g| Ok(g.shift() % 2 == 0),
            &FolnerFamily::ZInitial,
            10,
            (-50, 50),
            &Budget::default(),
        )
        .unwrap();
        assert_eq!(est.value_exact, ratio(1, 2));
    }

    #[test]
    fn whole_group_has_banach_ratio_one() {
        let est = banach_ratio(
            GroupDescriptor::Lamplighter,
            |_| Ok(true),
            &FolnerFamily::LampBox,
            2,
            (-3, 3),
            &Budget::default(),
        )
        .unwrap();
        assert_eq!(est.value_exact, int(1));
    }
}
