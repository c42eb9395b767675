//! Images of a point under a Følner set, counted with multiplicity.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::folner::{Budget, FolnerFamily};
use crate::space::{Point, Space};

/// `{g.start : g ∈ F_n}` as a multiset, plus `|F_n|`.
pub fn orbit_counts(
    space: &Space,
    start: &Point,
    family: &FolnerFamily,
    n: u64,
    budget: &Budget,
) -> Result<(BTreeMap<Point, u64>, u64)> {
    let start = space.canonical_point(start)?;
    let elements = family.enumerate(space.group(), n, budget)?;
    let mut counts = BTreeMap::new();
    for g in &elements {
        *counts.entry(space.act(g, &start)?).or_insert(0) += 1;
    }
    Ok((counts, elements.len() as u64))
}
