//! Exact arithmetic for the two acting groups: the integers and the
//! lamplighter group `<σ, τ>`.
//!
//! Lamplighter elements are kept in the normal form `σ^a τ_b`, where `b` is a
//! finite set of lamp sites. The product rule is
//!
//! ```text
//! σ^a τ_b · σ^c τ_d = σ^(a+c) τ_((b+c) Δ d)
//! ```
//!
//! which follows from the commutation `τ_d σ^a = σ^a τ_(d+a)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Which algebra a [`GroupElement`] belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupDescriptor {
    Integers,
    Lamplighter,
}

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupDescriptor::Integers => f.write_str("integers"),
            GroupDescriptor::Lamplighter => f.write_str("lamplighter"),
        }
    }
}

/// A finite set of lamp sites, stored sorted and duplicate-free.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LampSet(Vec<i64>);

impl LampSet {
    pub fn empty() -> Self {
        LampSet(Vec::new())
    }

    pub fn singleton(site: i64) -> Self {
        LampSet(vec![site])
    }

    /// Builds the set of the given sites. Repeated sites collapse.
    pub fn from_sites<I: IntoIterator<Item = i64>>(sites: I) -> Self {
        let mut v: Vec<i64> = sites.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        LampSet(v)
    }

    /// Wraps an already sorted, duplicate-free vector.
    pub(crate) fn from_sorted(v: Vec<i64>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        LampSet(v)
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: i64) -> bool {
        self.0.binary_search(&site).is_ok()
    }

    pub fn shifted(&self, by: i64) -> Result<Self> {
        let v = self
            .0
            .iter()
            .map(|&s| s.checked_add(by).ok_or(Error::Overflow("lamp site shift")))
            .collect::<Result<Vec<_>>>()?;
        Ok(LampSet(v))
    }

    /// Linear-time merge of two sorted sets.
    pub fn symmetric_difference(&self, other: &LampSet) -> LampSet {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        LampSet(out)
    }
}

/// An element of ℤ or of the lamplighter group, in unique normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupElement {
    IntShift(i64),
    Lamp { shift: i64, lamps: LampSet },
}

impl GroupElement {
    pub fn identity(group: GroupDescriptor) -> Self {
        match group {
            GroupDescriptor::Integers => GroupElement::IntShift(0),
            GroupDescriptor::Lamplighter => GroupElement::Lamp {
                shift: 0,
                lamps: LampSet::empty(),
            },
        }
    }

    /// `σ^a` inside the lamplighter group.
    pub fn sigma(a: i64) -> Self {
        GroupElement::Lamp {
            shift: a,
            lamps: LampSet::empty(),
        }
    }

    /// `τ_b = σ^{-b} τ σ^b`, the lamp toggle at site `b`.
    pub fn tau(b: i64) -> Self {
        GroupElement::Lamp {
            shift: 0,
            lamps: LampSet::singleton(b),
        }
    }

    pub fn lamp<I: IntoIterator<Item = i64>>(shift: i64, sites: I) -> Self {
        GroupElement::Lamp {
            shift,
            lamps: LampSet::from_sites(sites),
        }
    }

    /// The element of `group` that translates by `t` (`t` itself in ℤ, `σ^t` in the
    /// lamplighter group).
    pub fn translation(group: GroupDescriptor, t: i64) -> Self {
        match group {
            GroupDescriptor::Integers => GroupElement::IntShift(t),
            GroupDescriptor::Lamplighter => GroupElement::sigma(t),
        }
    }

    pub fn group(&self) -> GroupDescriptor {
        match self {
            GroupElement::IntShift(_) => GroupDescriptor::Integers,
            GroupElement::Lamp { .. } => GroupDescriptor::Lamplighter,
        }
    }

    pub fn shift(&self) -> i64 {
        match self {
            GroupElement::IntShift(a) => *a,
            GroupElement::Lamp { shift, .. } => *shift,
        }
    }

    pub fn lamps(&self) -> &[i64] {
        match self {
            GroupElement::IntShift(_) => &[],
            GroupElement::Lamp { lamps, .. } => lamps.as_slice(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.shift() == 0 && self.lamps().is_empty()
    }

    /// Largest absolute coordinate mentioned by the normal form.
    pub fn max_abs_coordinate(&self) -> u64 {
        self.lamps()
            .iter()
            .map(|b| b.unsigned_abs())
            .chain(std::iter::once(self.shift().unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn multiply(&self, other: &GroupElement) -> Result<GroupElement> {
        match (self, other) {
            (GroupElement::IntShift(a), GroupElement::IntShift(c)) => a
                .checked_add(*c)
                .map(GroupElement::IntShift)
                .ok_or(Error::Overflow("integer product")),
            (
                GroupElement::Lamp { shift: a, lamps: b },
                GroupElement::Lamp { shift: c, lamps: d },
            ) => {
                let shift = a.checked_add(*c).ok_or(Error::Overflow("lamplighter shift"))?;
                let lamps = b.shifted(*c)?.symmetric_difference(d);
                Ok(GroupElement::Lamp { shift, lamps })
            }
            _ => Err(Error::GroupMismatch {
                expected: self.group(),
                found: other.group(),
            }),
        }
    }

    /// `(σ^a τ_b)^{-1} = σ^{-a} τ_{b-a}`.
    pub fn inverse(&self) -> Result<GroupElement> {
        match self {
            GroupElement::IntShift(a) => a
                .checked_neg()
                .map(GroupElement::IntShift)
                .ok_or(Error::Overflow("integer inverse")),
            GroupElement::Lamp { shift, lamps } => {
                let neg = shift.checked_neg().ok_or(Error::Overflow("lamplighter inverse"))?;
                Ok(GroupElement::Lamp {
                    shift: neg,
                    lamps: lamps.shifted(neg)?,
                })
            }
        }
    }
}

pub fn identity(group: GroupDescriptor) -> GroupElement {
    GroupElement::identity(group)
}

pub fn multiply(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    g.multiply(h)
}

pub fn inverse(g: &GroupElement) -> Result<GroupElement> {
    g.inverse()
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::IntShift(a) => write!(f, "s^{a}"),
            GroupElement::Lamp { shift, lamps } => {
                write!(f, "s^{shift} t{{")?;
                for (i, b) in lamps.as_slice().iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{b}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl FromStr for GroupElement {
    type Err = Error;

    /// Accepts `s^a` (ℤ), `s^a t{b1,...}` (lamplighter) and a bare integer (ℤ).
    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("group element `{text}`"));
        let t = text.trim();
        if let Ok(a) = t.parse::<i64>() {
            return Ok(GroupElement::IntShift(a));
        }
        let rest = t.strip_prefix("s^").ok_or_else(bad)?;
        let (shift_part, lamp_part) = match rest.find('t') {
            Some(pos) => (rest[..pos].trim(), Some(rest[pos..].trim())),
            None => (rest.trim(), None),
        };
        let shift: i64 = shift_part.parse().map_err(|_| bad())?;
        let Some(lamp_part) = lamp_part else {
            return Ok(GroupElement::IntShift(shift));
        };
        let inner = lamp_part
            .strip_prefix("t{")
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(bad)?;
        let mut sites = Vec::new();
        for piece in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            sites.push(piece.parse::<i64>().map_err(|_| bad())?);
        }
        let n = sites.len();
        let lamps = LampSet::from_sites(sites);
        if lamps.len() != n {
            return Err(Error::Parse(format!("repeated lamp site in `{text}`")));
        }
        Ok(GroupElement::Lamp { shift, lamps })
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
