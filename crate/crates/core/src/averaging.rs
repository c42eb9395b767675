//! Cesàro averages of the metric along Følner sets and the finite-window
//! estimates of the Besicovitch and Weyl mean pseudometrics built from them.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{self, Exact};
use crate::folner::{Budget, FolnerFamily};
use crate::orbit::orbit_counts;
use crate::space::{Point, Space, SystemPoint};
use crate::template::PairTemplate;

pub const DEFAULT_EPSILON: f64 = 1e-2;
pub const STABILITY_TOL: f64 = 1e-3;

fn reject_product(space: &Space) -> Result<()> {
    if space.is_product() {
        return Err(Error::DimensionMismatch(
            "mean pseudometrics are computed on a single space, not a product".into(),
        ));
    }
    Ok(())
}

/// `F_n^* d(x, x') = (1/|F_n|) Σ_{g ∈ F_n} d(g.x, g.x')`, exact.
pub fn cesaro_metric(
    space: &Space,
    x: SystemPoint,
    x2: SystemPoint,
    family: &FolnerFamily,
    n: u64,
    budget: &Budget,
) -> Result<BigRational> {
    reject_product(space)?;
    let (counts, total) = orbit_counts(space, &Point::Pair(x, x2), family, n, budget)?;
    let mut sum = BigRational::zero();
    for (p, c) in &counts {
        let Point::Pair(a, b) = *p else { unreachable!() };
        if a != b {
            sum += space.metric(&Point::Single(a), &Point::Single(b))? * BigInt::from(*c);
        }
    }
    Ok(sum / BigInt::from(total))
}

/// Float version of [`cesaro_metric`].
pub fn cesaro_metric_f64(
    space: &Space,
    x: SystemPoint,
    x2: SystemPoint,
    family: &FolnerFamily,
    n: u64,
    budget: &Budget,
) -> Result<f64> {
    reject_product(space)?;
    let (counts, total) = orbit_counts(space, &Point::Pair(x, x2), family, n, budget)?;
    let mut sum = 0.0;
    for (p, c) in &counts {
        let Point::Pair(a, b) = *p else { unreachable!() };
        sum += space.metric_f64(&Point::Single(a), &Point::Single(b))? * *c as f64;
    }
    Ok(sum / total as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileValue {
    pub n: u64,
    pub size: u128,
    pub average: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<Exact>,
}

/// Cesàro averages over a window of indices with the `limsup` proxy.
#[derive(Clone, Debug, Serialize)]
pub struct AverageProfile {
    pub family: String,
    pub pair: Point,
    pub window: (u64, u64),
    pub values: Vec<ProfileValue>,
    /// Maximum over the upper half of the window.
    pub tail_sup: f64,
    /// The last quarter of the window varies by less than `STABILITY_TOL`.
    pub stabilized: bool,
    pub exact: bool,
}

impl AverageProfile {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(["n", "size", "average", "tail_sup"]).map_err(io)?;
        for v in &self.values {
            w.write_record([
                v.n.to_string(),
                v.size.to_string(),
                v.exact.as_ref().map_or_else(|| v.average.to_string(), |e| e.exact.clone()),
                self.tail_sup.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn check_window(window: (u64, u64)) -> Result<()> {
    if window.0 == 0 || window.0 > window.1 {
        return Err(Error::InvalidArgument(format!(
            "window [{}, {}] must be nonempty and start at 1 or later",
            window.0, window.1
        )));
    }
    Ok(())
}

/// Start of the upper half of a list of `len` values.
pub(crate) fn upper_half(len: usize) -> usize {
    len / 2
}

pub fn besicovitch_profile(
    space: &Space,
    x: SystemPoint,
    x2: SystemPoint,
    family: &FolnerFamily,
    window: (u64, u64),
    exact: bool,
    budget: &Budget,
) -> Result<AverageProfile> {
    check_window(window)?;
    let values = (window.0..=window.1)
        .into_par_iter()
        .map(|n| {
            let size = family.cardinality(n)?;
            if exact {
                let q = cesaro_metric(space, x, x2, family, n, budget)?;
                Ok(ProfileValue {
                    n,
                    size,
                    average: exact::to_f64(&q),
                    exact: Some(Exact::from(&q)),
                })
            } else {
                Ok(ProfileValue {
                    n,
                    size,
                    average: cesaro_metric_f64(space, x, x2, family, n, budget)?,
                    exact: None,
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let tail = &values[upper_half(values.len())..];
    let tail_sup = tail.iter().map(|v| v.average).fold(0.0, f64::max);
    let quarter = &values[values.len() - values.len().div_ceil(4)..];
    let (lo, hi) = quarter
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.average), hi.max(v.average)));
    Ok(AverageProfile {
        family: family.to_string(),
        pair: Point::Pair(x, x2),
        window,
        values,
        tail_sup,
        stabilized: hi - lo < STABILITY_TOL,
        exact,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WeylEstimate {
    pub value: f64,
    pub argmax_family: String,
    pub per_family: Vec<(String, f64)>,
    pub window: (u64, u64),
}

/// Maximum of the Besicovitch estimates over the listed families. This
/// under-approximates the supremum over all Følner sequences.
pub fn weyl_estimate(
    space: &Space,
    x: SystemPoint,
    x2: SystemPoint,
    families: &[FolnerFamily],
    window: (u64, u64),
    budget: &Budget,
) -> Result<WeylEstimate> {
    if families.is_empty() {
        return Err(Error::InvalidArgument("at least one family is required".into()));
    }
    let mut per_family = Vec::with_capacity(families.len());
    for f in families {
        let p = besicovitch_profile(space, x, x2, f, window, false, budget)?;
        per_family.push((f.to_string(), p.tail_sup));
    }
    let (argmax_family, value) = per_family
        .iter()
        .fold((String::new(), f64::NEG_INFINITY), |(bf, bv), (f, v)| {
            if *v > bv { (f.clone(), *v) } else { (bf, bv) }
        });
    Ok(WeylEstimate {
        value,
        argmax_family,
        per_family,
        window,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MecVerdict {
    ConsistentWithMec,
    Violation,
}

#[derive(Clone, Debug, Serialize)]
pub struct MecReport {
    pub verdict: MecVerdict,
    pub approach: PairTemplate,
    pub family: String,
    pub epsilon: f64,
    pub window: (u64, u64),
    /// `(k, d(x_k, x'_k), D estimate)` for every probed `k`.
    pub estimates: Vec<(i64, f64, f64)>,
    pub violating: Vec<i64>,
    /// Profile of the worst probed `k` in the tail.
    pub witness: AverageProfile,
}

/// Probes `F`-mean equicontinuity along an approach `(x_k, x'_k)` whose two
/// coordinates converge to a common point.
///
/// The approach is rejected unless its last pair is closer than `epsilon` and
/// no farther apart than its first. The verdict is a violation when some `k` in
/// the upper half of `ks` has a `D_F` estimate of at least `epsilon`.
pub fn mec_probe(
    space: &Space,
    family: &FolnerFamily,
    approach: &PairTemplate,
    ks: &[i64],
    epsilon: f64,
    window: (u64, u64),
    budget: &Budget,
) -> Result<MecReport> {
    if ks.len() < 2 {
        return Err(Error::InvalidArgument("probe at least two values of k".into()));
    }
    let dist = |k: i64| -> Result<f64> {
        let Point::Pair(a, b) = approach.at(k)? else { unreachable!() };
        space.metric_f64(&Point::Single(a), &Point::Single(b))
    };
    let first = dist(ks[0])?;
    let last = dist(*ks.last().expect("nonempty"))?;
    if !(last < epsilon && last <= first) {
        return Err(Error::InvalidArgument(format!(
            "approach does not converge: d = {first} at k = {}, {last} at k = {}",
            ks[0],
            ks.last().unwrap()
        )));
    }
    let profiles = ks
        .par_iter()
        .map(|&k| {
            let Point::Pair(a, b) = approach.at(k)? else { unreachable!() };
            Ok((k, dist(k)?, besicovitch_profile(space, a, b, family, window, false, budget)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let tail_start = upper_half(profiles.len());
    let violating: Vec<i64> = profiles[tail_start..]
        .iter()
        .filter(|(_, _, p)| p.tail_sup >= epsilon)
        .map(|(k, _, _)| *k)
        .collect();
    let worst = profiles[tail_start..]
        .iter()
        .max_by(|a, b| a.2.tail_sup.total_cmp(&b.2.tail_sup))
        .expect("nonempty tail");
    Ok(MecReport {
        verdict: if violating.is_empty() {
            MecVerdict::ConsistentWithMec
        } else {
            MecVerdict::Violation
        },
        approach: *approach,
        family: family.to_string(),
        epsilon,
        window,
        estimates: profiles.iter().map(|(k, d, p)| (*k, *d, p.tail_sup)).collect(),
        violating,
        witness: worst.2.clone(),
    })
}
