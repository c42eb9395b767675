//! Følner sequences: descriptors, exact enumeration, cardinalities and defects.
//!
//! Families are group-agnostic where that makes sense: the integer families
//! `{0..n-1}`, `{-n..n}` and `A_n = {n..2n}` denote translations, which in the
//! lamplighter group are the powers `σ^a`. `LampBox` only exists in the
//! lamplighter group.
//!
//! Haar measure is counting measure, so every ratio here is an exact rational.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupDescriptor, GroupElement, LampSet};

/// Default cap on the number of group elements a single enumeration may produce.
pub const DEFAULT_MAX_ELEMENTS: u128 = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_elements: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_elements: DEFAULT_MAX_ELEMENTS,
        }
    }
}

impl Budget {
    pub fn check(&self, what: impl Into<String>, needed: u128) -> Result<()> {
        if needed > self.max_elements {
            return Err(Error::Budget {
                what: what.into(),
                needed,
                limit: self.max_elements,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum FolnerFamily {
    /// `{0, …, n−1}`
    ZInitial,
    /// `{−n, …, n}`
    ZCentered,
    /// `A_n = {n, …, 2n}`
    ZShifted,
    /// `{σ^a τ_b : {a} ∪ b ⊆ A_n}`
    LampBox,
    Interleaved { families: Vec<FolnerFamily> },
    /// `n ↦ base(indices[n−1])`
    Subsequence {
        base: Box<FolnerFamily>,
        indices: Vec<u64>,
    },
}

impl fmt::Display for FolnerFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FolnerFamily::ZInitial => f.write_str("z_initial"),
            FolnerFamily::ZCentered => f.write_str("z_centered"),
            FolnerFamily::ZShifted => f.write_str("z_shifted"),
            FolnerFamily::LampBox => f.write_str("lamp_box"),
            FolnerFamily::Interleaved { families } => {
                f.write_str("interleaved(")?;
                for (i, fam) in families.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{fam}")?;
                }
                f.write_str(")")
            }
            FolnerFamily::Subsequence { base, indices } => {
                write!(f, "subsequence({base}; {} indices)", indices.len())
            }
        }
    }
}

impl FromStr for FolnerFamily {
    type Err = Error;

    /// Accepts the four basic names, or a JSON descriptor.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "z_initial" => Ok(FolnerFamily::ZInitial),
            "z_centered" => Ok(FolnerFamily::ZCentered),
            "z_shifted" => Ok(FolnerFamily::ZShifted),
            "lamp_box" => Ok(FolnerFamily::LampBox),
            _ if t.starts_with('{') => {
                serde_json::from_str(t).map_err(|e| Error::Parse(format!("family descriptor: {e}")))
            }
            _ => Err(Error::UnknownName(t.to_string())),
        }
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("Følner index n must be at least 1".into()));
    }
    if n > i64::MAX as u64 / 4 {
        return Err(Error::Overflow("Følner index"));
    }
    Ok(())
}

/// Builds an interleaved family. Every input reappears as a subsequence.
pub fn interleave(families: Vec<FolnerFamily>) -> Result<FolnerFamily> {
    if families.is_empty() {
        return Err(Error::InvalidArgument("cannot interleave zero families".into()));
    }
    let mut needs = None;
    for f in &families {
        if let Some(g) = f.required_group() {
            if needs.is_some_and(|h| h != g) {
                return Err(Error::GroupMismatch {
                    expected: needs.unwrap(),
                    found: g,
                });
            }
            needs = Some(g);
        }
    }
    Ok(FolnerFamily::Interleaved { families })
}

impl FolnerFamily {
    /// The group this family is tied to, if any.
    pub fn required_group(&self) -> Option<GroupDescriptor> {
        match self {
            FolnerFamily::LampBox => Some(GroupDescriptor::Lamplighter),
            FolnerFamily::Interleaved { families } => families.iter().find_map(|f| f.required_group()),
            FolnerFamily::Subsequence { base, .. } => base.required_group(),
            _ => None,
        }
    }

    fn check_group(&self, group: GroupDescriptor) -> Result<()> {
        match self.required_group() {
            Some(g) if g != group => Err(Error::GroupMismatch {
                expected: g,
                found: group,
            }),
            _ => Ok(()),
        }
    }

    /// Resolves composite families down to a basic family and index.
    pub fn resolve(&self, n: u64) -> Result<(FolnerFamily, u64)> {
        check_n(n)?;
        match self {
            FolnerFamily::Interleaved { families } => {
                if families.is_empty() {
                    return Err(Error::InvalidArgument("empty interleaving".into()));
                }
                let m = families.len() as u64;
                // index j = k·m + i, with residue 0 read as the last family
                let i = n % m;
                let which = if i == 0 { m - 1 } else { i - 1 };
                let k = (n / m).max(1);
                families[which as usize].resolve(k)
            }
            FolnerFamily::Subsequence { base, indices } => {
                if indices.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidArgument(
                        "subsequence indices must be strictly increasing".into(),
                    ));
                }
                let idx = *indices.get(n as usize - 1).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "subsequence has {} indices, asked for n={n}",
                        indices.len()
                    ))
                })?;
                base.resolve(idx)
            }
            basic => Ok((basic.clone(), n)),
        }
    }

    /// Exact size of `F_n` without enumerating it.
    pub fn cardinality(&self, n: u64) -> Result<u128> {
        let (basic, n) = self.resolve(n)?;
        let n = n as u128;
        Ok(match basic {
            FolnerFamily::ZInitial => n,
            FolnerFamily::ZCentered => 2 * n + 1,
            FolnerFamily::ZShifted => n + 1,
            FolnerFamily::LampBox => {
                if n + 1 >= 120 {
                    return Err(Error::Overflow("lamp box cardinality"));
                }
                (n + 1) << (n + 1)
            }
            _ => unreachable!("resolve returns basic families"),
        })
    }

    /// The integer range `lo..=hi` of shifts used by a basic integer family.
    fn shift_range(&self, n: u64) -> (i64, i64) {
        let n = n as i64;
        match self {
            FolnerFamily::ZInitial => (0, n - 1),
            FolnerFamily::ZCentered => (-n, n),
            FolnerFamily::ZShifted | FolnerFamily::LampBox => (n, 2 * n),
            _ => unreachable!("only basic families have a shift range"),
        }
    }

    /// Largest absolute coordinate appearing in any element of `F_n`.
    pub fn max_abs_coordinate(&self, n: u64) -> Result<i64> {
        let (basic, n) = self.resolve(n)?;
        let (lo, hi) = basic.shift_range(n);
        Ok(lo.abs().max(hi.abs()))
    }

    /// `F_n` as a list of distinct elements in deterministic order.
    pub fn enumerate(&self, group: GroupDescriptor, n: u64, budget: &Budget) -> Result<Vec<GroupElement>> {
        self.check_group(group)?;
        let size = self.cardinality(n)?;
        budget.check(format!("enumerating {self} at n={n}"), size)?;
        let (basic, n) = self.resolve(n)?;
        let (lo, hi) = basic.shift_range(n);
        if basic != FolnerFamily::LampBox {
            return Ok((lo..=hi).map(|a| GroupElement::translation(group, a)).collect());
        }
        let sites: Vec<i64> = (lo..=hi).collect();
        let width = sites.len();
        let mut out = Vec::with_capacity(size as usize);
        for a in lo..=hi {
            for mask in 0u64..(1u64 << width) {
                let lamps: Vec<i64> = (0..width).filter(|i| mask >> i & 1 == 1).map(|i| sites[i]).collect();
                out.push(GroupElement::Lamp {
                    shift: a,
                    lamps: LampSet::from_sorted(lamps),
                });
            }
        }
        Ok(out)
    }

    /// Membership `g ∈ F_n` without enumeration.
    pub fn contains(&self, group: GroupDescriptor, n: u64, g: &GroupElement) -> Result<bool> {
        self.check_group(group)?;
        if g.group() != group {
            return Err(Error::GroupMismatch {
                expected: group,
                found: g.group(),
            });
        }
        let (basic, n) = self.resolve(n)?;
        let (lo, hi) = basic.shift_range(n);
        let a = g.shift();
        if a < lo || a > hi {
            return Ok(false);
        }
        Ok(match basic {
            FolnerFamily::LampBox => g.lamps().iter().all(|b| (lo..=hi).contains(b)),
            _ => g.lamps().is_empty(),
        })
    }

    /// One-sided defect `|K·F_n \ F_n| / |F_n|`.
    pub fn defect(&self, group: GroupDescriptor, n: u64, k: &[GroupElement], budget: &Budget) -> Result<BigRational> {
        let (outside, _lost, size) = self.defect_counts(group, n, k, budget)?;
        Ok(BigRational::new(BigInt::from(outside), BigInt::from(size)))
    }

    /// Symmetric defect `|K·F_n Δ F_n| / |F_n|`.
    pub fn symmetric_defect(
        &self,
        group: GroupDescriptor,
        n: u64,
        k: &[GroupElement],
        budget: &Budget,
    ) -> Result<BigRational> {
        let (outside, lost, size) = self.defect_counts(group, n, k, budget)?;
        Ok(BigRational::new(BigInt::from(outside + lost), BigInt::from(size)))
    }

    /// Returns `(|KF \ F|, |F \ KF|, |F|)`.
    fn defect_counts(
        &self,
        group: GroupDescriptor,
        n: u64,
        k: &[GroupElement],
        budget: &Budget,
    ) -> Result<(u128, u128, u128)> {
        if k.is_empty() {
            return Err(Error::InvalidArgument("K must be nonempty".into()));
        }
        for g in k {
            if g.group() != group {
                return Err(Error::GroupMismatch {
                    expected: group,
                    found: g.group(),
                });
            }
        }
        let f = self.enumerate(group, n, budget)?;
        let mut outside: HashSet<GroupElement> = HashSet::new();
        let mut hit: HashSet<GroupElement> = HashSet::new();
        for g in k {
            for x in &f {
                let y = g.multiply(x)?;
                if self.contains(group, n, &y)? {
                    hit.insert(y);
                } else {
                    outside.insert(y);
                }
            }
        }
        let size = f.len() as u128;
        Ok((outside.len() as u128, size - hit.len() as u128, size))
    }
}

/// `Σ_{d ∈ {c} ∪ 𝐝} |(d + A_n) \ A_n| / |A_n|` for `g = σ^c τ_𝐝`.
pub fn lamp_defect_bound(g: &GroupElement, n: u64) -> Result<BigRational> {
    check_n(n)?;
    let GroupElement::Lamp { shift, lamps } = g else {
        return Err(Error::GroupMismatch {
            expected: GroupDescriptor::Lamplighter,
            found: g.group(),
        });
    };
    let width = n as u128 + 1;
    let mut sites: Vec<i64> = lamps.as_slice().to_vec();
    sites.push(*shift);
    sites.sort_unstable();
    sites.dedup();
    let total: u128 = sites
        .iter()
        .map(|d| (d.unsigned_abs() as u128).min(width))
        .sum();
    Ok(BigRational::new(BigInt::from(total), BigInt::from(width)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, ratio};

    const Z: GroupDescriptor = GroupDescriptor::Integers;
    const L: GroupDescriptor = GroupDescriptor::Lamplighter;

    fn shifts(v: &[GroupElement]) -> Vec<i64> {
        v.iter().map(|g| g.shift()).collect()
    }

    #[test]
    fn basic_enumerations() {
        let b = Budget::default();
        assert_eq!(shifts(&FolnerFamily::ZInitial.enumerate(Z, 3, &b).unwrap()), vec![0, 1, 2]);
        assert_eq!(
            shifts(&FolnerFamily::ZCentered.enumerate(Z, 2, &b).unwrap()),
            vec![-2, -1, 0, 1, 2]
        );
        assert_eq!(shifts(&FolnerFamily::ZShifted.enumerate(Z, 3, &b).unwrap()), vec![3, 4, 5, 6]);
        assert!(FolnerFamily::ZInitial.enumerate(Z, 0, &b).is_err());
    }

    #[test]
    fn lamp_box_at_one() {
        let got: HashSet<_> = FolnerFamily::LampBox
            .enumerate(L, 1, &Budget::default())
            .unwrap()
            .into_iter()
            .collect();
        let mut want = HashSet::new();
        for a in 1..=2 {
            for b in [vec![], vec![1], vec![2], vec![1, 2]] {
                want.insert(GroupElement::lamp(a, b));
            }
        }
        assert_eq!(got, want);
        assert!(FolnerFamily::LampBox.enumerate(Z, 1, &Budget::default()).is_err());
    }

    #[test]
    fn cardinalities() {
        assert_eq!(FolnerFamily::LampBox.cardinality(1).unwrap(), 8);
        assert_eq!(FolnerFamily::LampBox.cardinality(4).unwrap(), 160);
        assert_eq!(FolnerFamily::ZInitial.cardinality(7).unwrap(), 7);
    }

    #[test]
    fn budget_is_enforced() {
        let tiny = Budget { max_elements: 100 };
        let err = FolnerFamily::LampBox.enumerate(L, 5, &tiny).unwrap_err();
        assert!(err.is_budget());
    }

    #[test]
    fn defects() {
        let b = Budget::default();
        let one = [GroupElement::IntShift(1)];
        assert_eq!(FolnerFamily::ZInitial.symmetric_defect(Z, 10, &one, &b).unwrap(), ratio(2, 10));
        assert_eq!(FolnerFamily::ZInitial.defect(Z, 10, &one, &b).unwrap(), ratio(1, 10));
        let sigma = [GroupElement::sigma(1)];
        assert_eq!(FolnerFamily::LampBox.defect(L, 9, &sigma, &b).unwrap(), ratio(1, 10));
        let e = [GroupElement::identity(Z)];
        assert_eq!(FolnerFamily::ZCentered.symmetric_defect(Z, 5, &e, &b).unwrap(), int(0));
        let tau = [GroupElement::tau(0)];
        assert_eq!(FolnerFamily::LampBox.defect(L, 4, &tau, &b).unwrap(), int(0));
    }

    #[test]
    fn lamp_bounds() {
        assert_eq!(lamp_defect_bound(&GroupElement::sigma(1), 9).unwrap(), ratio(1, 10));
        assert_eq!(lamp_defect_bound(&GroupElement::tau(0), 9).unwrap(), int(0));
        assert_eq!(lamp_defect_bound(&GroupElement::tau(-1), 9).unwrap(), ratio(1, 10));
        assert!(lamp_defect_bound(&GroupElement::IntShift(1), 3).is_err());
        let b = Budget::default();
        let exact = FolnerFamily::LampBox.defect(L, 9, &[GroupElement::tau(-1)], &b).unwrap();
        assert_eq!(exact, ratio(1, 10));
    }

    #[test]
    fn interleaving() {
        let b = Budget::default();
        let single = interleave(vec![FolnerFamily::ZInitial]).unwrap();
        for n in 1..6 {
            assert_eq!(
                single.enumerate(Z, n, &b).unwrap(),
                FolnerFamily::ZInitial.enumerate(Z, n, &b).unwrap()
            );
        }
        let both = interleave(vec![FolnerFamily::ZInitial, FolnerFamily::ZCentered]).unwrap();
        assert_eq!(shifts(&both.enumerate(Z, 3, &b).unwrap()), vec![0]);
        assert_eq!(shifts(&both.enumerate(Z, 4, &b).unwrap()), vec![-2, -1, 0, 1, 2]);
        assert!(interleave(vec![]).is_err());
    }

    #[test]
    fn subsequences() {
        let b = Budget::default();
        let sub = FolnerFamily::Subsequence {
            base: Box::new(FolnerFamily::ZCentered),
            indices: vec![2, 5, 9],
        };
        assert_eq!(
            sub.enumerate(Z, 2, &b).unwrap(),
            FolnerFamily::ZCentered.enumerate(Z, 5, &b).unwrap()
        );
        assert!(sub.enumerate(Z, 4, &b).is_err());
        let bad = FolnerFamily::Subsequence {
            base: Box::new(FolnerFamily::ZCentered),
            indices: vec![3, 3],
        };
        assert!(bad.enumerate(Z, 1, &b).is_err());
    }

    #[test]
    fn membership_matches_enumeration() {
        let b = Budget::default();
        let f = FolnerFamily::LampBox.enumerate(L, 2, &b).unwrap();
        for g in &f {
            assert!(FolnerFamily::LampBox.contains(L, 2, g).unwrap());
        }
        assert!(!FolnerFamily::LampBox.contains(L, 2, &GroupElement::lamp(2, [5])).unwrap());
        assert!(!FolnerFamily::ZShifted.contains(L, 2, &GroupElement::lamp(2, [2])).unwrap());
    }

    #[test]
    fn json_descriptors() {
        let fam = interleave(vec![FolnerFamily::LampBox, FolnerFamily::ZShifted]).unwrap();
        let json = serde_json::to_string(&fam).unwrap();
        let back: FolnerFamily = json.parse().unwrap();
        assert_eq!(back, fam);
        assert_eq!(serde_json::to_string(&FolnerFamily::LampBox).unwrap(), r#"{"kind":"lamp_box"}"#);
        assert_eq!("lamp_box".parse::<FolnerFamily>().unwrap(), FolnerFamily::LampBox);
    }
}
