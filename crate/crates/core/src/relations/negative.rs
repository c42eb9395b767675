//! Structural negative certificates, the regional-proximality screen and the
//! proximality probe.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use super::{Certificate, CertificateKind, NegativeEvidence, QrpParams, Verdict};
use crate::density::hitting_density;
use crate::error::{Error, Result};
use crate::exact::{self, Exact};
use crate::folner::{Budget, FolnerFamily};
use crate::group::{GroupDescriptor, GroupElement};
use crate::space::{Neighborhood, Point, Space, SystemPoint};

pub(super) fn describe(u: &Neighborhood) -> String {
    serde_json::to_string(u).unwrap_or_else(|_| "?".into())
}

fn split(pair: &Point) -> Result<(SystemPoint, SystemPoint)> {
    match *pair {
        Point::Pair(a, b) => Ok((a, b)),
        Point::Single(_) => Err(Error::DimensionMismatch("relation queries take a pair".into())),
    }
}

pub(super) fn single_distance(space: &Space, a: SystemPoint, b: SystemPoint) -> Result<f64> {
    space.metric_f64(&Point::Single(a), &Point::Single(b))
}

/// Negative certificate for a pair with an isolated (integer) coordinate.
///
/// Take `U = {x} × X` (or `{(x, x')}` when both coordinates are isolated).
/// Any hit `g.y = x` pins `y = g⁻¹.x`, so for every pair `(y, y')` the
/// density of `G_U(y, y') ∩ F_n` is at most
/// `b_n = max_y |{g ∈ F_n : g.y = x}| / |F_n|`. The bound is computed
/// exhaustively for each `n` of the window and does not depend on a right
/// translate, so it also caps Banach densities along the same shape.
///
/// Returns `None` when both coordinates are limit points.
pub fn isolated_negative(
    space: &Space,
    kind: CertificateKind,
    pair: &Point,
    family: &FolnerFamily,
    window: (u64, u64),
    floor: &BigRational,
    budget: &Budget,
) -> Result<Option<Certificate>> {
    let pair = space.canonical_point(pair)?;
    let (a, b) = split(&pair)?;
    let coordinate = if !a.is_limit() {
        0
    } else if !b.is_limit() {
        1
    } else {
        return Ok(None);
    };
    if window.0 == 0 || window.0 > window.1 {
        return Err(Error::InvalidArgument("window must be nonempty and start at 1 or later".into()));
    }
    let x = if coordinate == 0 { a } else { b };
    let u = match (a.is_limit(), b.is_limit()) {
        (false, false) => Neighborhood::points([pair]),
        (false, true) => Neighborhood::product(Neighborhood::points([Point::Single(a)]), Neighborhood::All),
        _ => Neighborhood::product(Neighborhood::All, Neighborhood::points([Point::Single(b)])),
    };
    let group = space.group();
    let rows = (window.0..=window.1)
        .into_par_iter()
        .map(|n| {
            let f = family.enumerate(group, n, budget)?;
            let mut pre: HashMap<SystemPoint, u64> = HashMap::new();
            for g in &f {
                *pre.entry(space.act_single(&g.inverse()?, x)?).or_insert(0) += 1;
            }
            let worst = pre.values().copied().max().unwrap_or(0);
            let bound = BigRational::new(BigInt::from(worst), BigInt::from(f.len()));
            let density = hitting_density(space, &pair, &u, family, n, budget)?.ratio_exact;
            Ok((n, bound, density))
        })
        .collect::<Result<Vec<_>>>()?;
    // The bounds must be non-increasing over the upper half of the window and
    // either end below the floor or decay like 1/n there (then their limit,
    // and with it every upper density, is 0).
    let tail = &rows[rows.len() / 2..];
    let monotone = tail.windows(2).all(|w| w[1].1 <= w[0].1);
    let last_bound = rows.last().map(|r| r.1.clone()).unwrap_or_else(BigRational::zero);
    let (n0, b0) = (tail[0].0, tail[0].1.clone());
    let inverse_decay = tail.len() >= 2
        && last_bound < b0
        && tail
            .iter()
            .all(|(n, b, _)| b * BigInt::from(*n) <= &b0 * BigInt::from(2 * n0));

    let mut cert = Certificate::new(
        kind,
        pair,
        serde_json::json!({ "family": family.to_string(), "window": window, "floor": exact::fraction_string(floor) }),
    );
    cert.neighbourhoods.push(describe(&u));
    cert.negative = Some(NegativeEvidence::IsolatedCoordinate {
        coordinate,
        neighbourhood: describe(&u),
        bounds: rows.iter().map(|r| (r.0, Exact::from(&r.1))).collect(),
        witness_densities: rows.iter().map(|r| (r.0, Exact::from(&r.2))).collect(),
    });
    if monotone && (last_bound < *floor || inverse_decay) {
        cert.verdict = Verdict::Negative;
        cert.notes.push(format!(
            "hitting densities of U are bounded by a non-increasing sequence ending at {}",
            exact::fraction_string(&last_bound)
        ));
        if last_bound >= *floor {
            cert.notes
                .push("the bounds stay above the floor in this window but decay like 1/n, so their limit is 0".into());
        }
    } else {
        cert.notes.push("isolated-point bound does not fall below the floor in this window".into());
    }
    Ok(Some(cert))
}

/// Elements searched by the regional-proximality screen: translations in
/// `[-w, w]`, and in the lamplighter group also `σ^a τ_b` with `b` a single
/// lamp in `[-lamps, lamps]`.
pub fn qrp_elements(group: GroupDescriptor, w: i64, lamps: i64) -> Vec<GroupElement> {
    let mut out = Vec::new();
    for a in -w..=w {
        out.push(GroupElement::translation(group, a));
        if group == GroupDescriptor::Lamplighter {
            for b in -lamps..=lamps {
                out.push(GroupElement::lamp(a, [b]));
            }
        }
    }
    out
}

/// Regional proximality screen.
///
/// For each radius `r` and scale `ε`, search the truncated pairs `(y, y')`
/// in the ball of radius `r` about the pair for an element `g` of the window
/// with `d(g.y, g.y') < ε`. `POSITIVE` when every `(r, ε)` is met; `NEGATIVE`
/// when the exhaustive search fails for some `(r, ε)`.
pub fn detect_qrp(space: &Space, pair: &Point, radii: &[BigRational], params: &QrpParams) -> Result<Certificate> {
    let pair = space.canonical_point(pair)?;
    split(&pair)?;
    if radii.is_empty() || params.epsilons.is_empty() {
        return Err(Error::InvalidArgument("qrp needs radii and scales".into()));
    }
    let elements = qrp_elements(space.group(), params.element_window, params.truncation);
    let singles = space.truncate_singles(params.truncation);
    let r_max = radii.iter().max().cloned().unwrap_or_else(BigRational::zero);
    let r_max_f = exact::to_f64(&r_max);
    let center = pair;

    // (candidate pair, smallest distance reached under the window)
    let candidates = singles
        .par_iter()
        .map(|&y| {
            let mut out = Vec::new();
            for &y2 in &singles {
                let cand = Point::Pair(y, y2);
                let dc = space.metric_f64(&center, &cand)?;
                if dc > r_max_f + 1e-9 {
                    continue;
                }
                let mut best = f64::INFINITY;
                for g in &elements {
                    let d = single_distance(space, space.act_single(g, y)?, space.act_single(g, y2)?)?;
                    best = best.min(d);
                }
                out.push((cand, best));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();

    let mut cert = Certificate::new(
        CertificateKind::Qrp,
        pair,
        serde_json::json!({
            "radii": radii.iter().map(exact::fraction_string).collect::<Vec<_>>(),
            "qrp": params,
        }),
    );
    let mut sorted: Vec<&BigRational> = radii.iter().collect();
    sorted.sort_by(|a, b| b.cmp(a));
    let mut eps: Vec<f64> = params.epsilons.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    for r in sorted {
        let u = Neighborhood::ball(pair, r.clone());
        let mut inside = Vec::new();
        for (cand, best) in &candidates {
            if space.contains(&u, cand)? {
                inside.push(*best);
            }
        }
        cert.neighbourhoods.push(describe(&u));
        let min_distance = inside.iter().copied().fold(f64::INFINITY, f64::min);
        for &e in &eps {
            if min_distance >= e {
                cert.verdict = Verdict::Negative;
                cert.negative = Some(NegativeEvidence::NotRegionallyProximal {
                    radius: Exact::from(r),
                    epsilon: e,
                    min_distance,
                    candidates: inside.len(),
                    elements: elements.len(),
                });
                cert.notes.push(format!(
                    "no truncated pair within {} of the pair is brought closer than {e}",
                    exact::fraction_string(r)
                ));
                return Ok(cert);
            }
        }
    }
    cert.verdict = Verdict::Positive;
    cert.notes.push("every (radius, scale) combination is met in the search window".into());
    Ok(cert)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProximalReport {
    pub pair: Point,
    pub min_distance: f64,
    pub argmin: GroupElement,
    pub elements: usize,
    pub tolerance: f64,
    /// `min_distance < tolerance`
    pub proximal: bool,
}

/// `min_{g} d(g.x, g.x')` over the given elements.
pub fn detect_proximal(space: &Space, pair: &Point, elements: &[GroupElement], tolerance: f64) -> Result<ProximalReport> {
    let pair = space.canonical_point(pair)?;
    let (a, b) = split(&pair)?;
    let first = elements
        .first()
        .ok_or_else(|| Error::InvalidArgument("proximality needs at least one element".into()))?;
    let mut best = (f64::INFINITY, first.clone());
    for g in elements {
        let d = single_distance(space, space.act_single(g, a)?, space.act_single(g, b)?)?;
        if d < best.0 {
            best = (d, g.clone());
        }
    }
    Ok(ProximalReport {
        pair,
        min_distance: best.0,
        argmin: best.1,
        elements: elements.len(),
        tolerance,
        proximal: best.0 < tolerance,
    })
}

/// Forward-closure negative certificate.
///
/// Checks exhaustively over the truncation that `g.p ∈ U` implies `p ∈ U` for
/// every `g ∈ F_1 ∪ … ∪ F_{n_max}`, and measures how far `U` stays from the
/// diagonal. When both hold, an asymptotically diagonal sequence eventually
/// lies outside `U` and so is never moved into `U` by the family: `NEGATIVE`.
/// A closed `U` touching the diagonal gives `INCONCLUSIVE`.
pub fn forward_closure_negative(
    space: &Space,
    pair: &Point,
    u: &Neighborhood,
    family: &FolnerFamily,
    n_max: u64,
    truncation: i64,
    budget: &Budget,
) -> Result<Certificate> {
    let pair = space.canonical_point(pair)?;
    split(&pair)?;
    if space.is_product() {
        return Err(Error::InvalidArgument("closure certificates work on a base space".into()));
    }
    if !space.contains(u, &pair)? {
        return Err(Error::InvalidArgument(format!("{pair} is not in the neighbourhood")));
    }
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let group = space.group();
    let mut seen = HashSet::new();
    let mut elements = Vec::new();
    for n in 1..=n_max {
        for g in family.enumerate(group, n, budget)? {
            if seen.insert(g.clone()) {
                elements.push(g);
            }
        }
    }
    let reach = elements.iter().map(|g| g.max_abs_coordinate()).max().unwrap_or(0) as i64;
    if truncation < 2 * reach {
        return Err(Error::InvalidArgument(format!(
            "truncation {truncation} does not cover the action range of the family (need at least {})",
            2 * reach
        )));
    }
    let singles = space.truncate_singles(truncation);

    let params = serde_json::json!({
        "family": family.to_string(),
        "n_max": n_max,
        "truncation": truncation,
        "neighbourhood": u,
    });
    let mut cert = Certificate::new(CertificateKind::NegativeForwardClosure, pair, params);
    cert.neighbourhoods.push(describe(u));

    // Coordinate sets, when U is a product, allow a per-coordinate check.
    let member = |v: &Neighborhood, y: SystemPoint| space.contains(v, &Point::Single(y));
    let coordinate_closed = |v: &Neighborhood| -> Result<Option<(SystemPoint, GroupElement)>> {
        let found = singles
            .par_iter()
            .map(|&y| {
                if member(v, y)? {
                    return Ok(None);
                }
                for g in &elements {
                    if member(v, space.act_single(g, y)?)? {
                        return Ok(Some((y, g.clone())));
                    }
                }
                Ok(None)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(found.into_iter().flatten().next())
    };

    let (closed, inside): (bool, Vec<(SystemPoint, SystemPoint)>) = match u {
        Neighborhood::ProductOf { left, right }
            if coordinate_closed(left)?.is_none() && coordinate_closed(right)?.is_none() =>
        {
            let l: Vec<_> = singles.iter().copied().filter(|&y| member(left, y).unwrap_or(false)).collect();
            let r: Vec<_> = singles.iter().copied().filter(|&y| member(right, y).unwrap_or(false)).collect();
            let mut inside = Vec::with_capacity(l.len() * r.len());
            for &a in &l {
                for &b in &r {
                    inside.push((a, b));
                }
            }
            (true, inside)
        }
        _ => {
            let pairs = singles.len() as u128 * singles.len() as u128;
            budget.check("closure check over truncated pairs", pairs * elements.len() as u128)?;
            let rows = singles
                .par_iter()
                .map(|&a| {
                    let mut inside = Vec::new();
                    let mut broken = None;
                    for &b in &singles {
                        let p = Point::Pair(a, b);
                        if space.contains(u, &p)? {
                            inside.push((a, b));
                            continue;
                        }
                        for g in &elements {
                            if space.contains(u, &space.act(g, &p)?)? {
                                broken = Some((p, g.clone()));
                                break;
                            }
                        }
                        if broken.is_some() {
                            break;
                        }
                    }
                    Ok((inside, broken))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut inside = Vec::new();
            let mut broken = None;
            for (i, b) in rows {
                inside.extend(i);
                if broken.is_none() {
                    broken = b;
                }
            }
            if let Some((p, g)) = broken {
                cert.notes.push(format!("closure fails: {g} moves {p} into U"));
                (false, inside)
            } else {
                (true, inside)
            }
        }
    };

    let mut gap_f = f64::INFINITY;
    let mut arg = None;
    for &(a, b) in &inside {
        let d = single_distance(space, a, b)?;
        if d < gap_f {
            gap_f = d;
            arg = Some((a, b));
        }
    }
    let gap = match arg {
        Some((a, b)) => space.metric(&Point::Single(a), &Point::Single(b))?,
        None => BigRational::zero(),
    };
    cert.parameters["closure_holds"] = serde_json::Value::Bool(closed);
    if closed {
        cert.notes.push(format!(
            "closure holds for {} elements over {} truncated points",
            elements.len(),
            singles.len()
        ));
    }
    if closed && arg.is_some() && gap > BigRational::zero() {
        cert.verdict = Verdict::Negative;
        cert.negative = Some(NegativeEvidence::ForwardClosure {
            neighbourhood: describe(u),
            checked_points: singles.len(),
            elements: elements.len(),
            diagonal_gap: Exact::from(&gap),
        });
    } else if closed {
        cert.notes.push("U meets the diagonal, so closure alone certifies nothing".into());
    }
    Ok(cert)
}
