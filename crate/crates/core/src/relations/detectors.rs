//! Witness search for the sensitivity relations.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::negative::{describe, detect_qrp, forward_closure_negative, isolated_negative, single_distance};
use super::{Certificate, CertificateKind, DetectorParams, GridParams, Verdict, WitnessEntry, WitnessRecord};
use crate::density::{default_translates, ub_dens_estimate};
use crate::error::{Error, Result};
use crate::exact::{self, Exact};
use crate::folner::{Budget, FolnerFamily};
use crate::orbit::orbit_counts;
use crate::space::{Neighborhood, Point, Space};
use crate::template::PairTemplate;

/// Parametric witness families `k ↦ (x_k, x'_k)` to try before the grid search.
#[derive(Clone, Debug, Default)]
pub struct WitnessSource {
    pub templates: Vec<PairTemplate>,
}

impl WitnessSource {
    pub fn new(templates: Vec<PairTemplate>) -> Self {
        WitnessSource { templates }
    }
}

enum Scoring<'a> {
    /// Upper asymptotic density: largest ratio over the upper half of the window.
    Ua { family: &'a FolnerFamily, window: (u64, u64) },
    /// Density of `G_U(x_k, x'_k) ∩ F_k`.
    Matched { family: &'a FolnerFamily },
    /// Upper Banach density proxy on a fixed shape.
    Banach {
        shape: &'a FolnerFamily,
        n: u64,
        translates: (i64, i64),
    },
}

impl Scoring<'_> {
    fn depends_on_k(&self) -> bool {
        matches!(self, Scoring::Matched { .. })
    }
}

fn ratios_from_orbit(
    space: &Space,
    w: &Point,
    family: &FolnerFamily,
    n: u64,
    us: &[Neighborhood],
    budget: &Budget,
) -> Result<Vec<BigRational>> {
    let (counts, size) = orbit_counts(space, w, family, n, budget)?;
    let mut hits = vec![0u64; us.len()];
    for (p, c) in &counts {
        for (j, u) in us.iter().enumerate() {
            if space.contains(u, p)? {
                hits[j] += c;
            }
        }
    }
    Ok(hits
        .into_iter()
        .map(|h| BigRational::new(BigInt::from(h), BigInt::from(size)))
        .collect())
}

fn score(space: &Space, w: &Point, k: u64, scoring: &Scoring, us: &[Neighborhood], budget: &Budget) -> Result<Vec<BigRational>> {
    match *scoring {
        Scoring::Matched { family } => ratios_from_orbit(space, w, family, k, us, budget),
        Scoring::Ua { family, window } => {
            let len = window.1 - window.0 + 1;
            let start = window.0 + len / 2;
            let rows = (start..=window.1)
                .into_par_iter()
                .map(|n| ratios_from_orbit(space, w, family, n, us, budget))
                .collect::<Result<Vec<_>>>()?;
            let mut best = vec![BigRational::zero(); us.len()];
            for row in rows {
                for (b, r) in best.iter_mut().zip(row) {
                    if r > *b {
                        *b = r;
                    }
                }
            }
            Ok(best)
        }
        Scoring::Banach { shape, n, translates } => us
            .iter()
            .map(|u| Ok(ub_dens_estimate(space, w, u, shape, n, translates, budget)?.value_exact))
            .collect(),
    }
}

/// An evaluated witness sequence: `(k, pair, d(pair), score per neighbourhood)`.
struct Seq {
    source: String,
    entries: Vec<(u64, Point, f64, Vec<BigRational>)>,
}

fn witness_distance(space: &Space, w: &Point) -> Result<f64> {
    match *w {
        Point::Pair(a, b) => single_distance(space, a, b),
        Point::Single(_) => Err(Error::DimensionMismatch("witnesses are pairs".into())),
    }
}

fn eval_template(
    space: &Space,
    t: &PairTemplate,
    ks: &[u64],
    scoring: &Scoring,
    us: &[Neighborhood],
    budget: &Budget,
) -> Result<Seq> {
    let entries = ks
        .par_iter()
        .map(|&k| {
            let w = space.canonical_point(&t.at(k as i64)?)?;
            let d = witness_distance(space, &w)?;
            Ok((k, w, d, score(space, &w, k, scoring, us, budget)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Seq {
        source: t.to_string(),
        entries,
    })
}

fn eval_constant(space: &Space, w: Point, ks: &[u64], scoring: &Scoring, us: &[Neighborhood], budget: &Budget) -> Result<Seq> {
    let d = witness_distance(space, &w)?;
    let entries = if scoring.depends_on_k() {
        ks.par_iter()
            .map(|&k| Ok((k, w, d, score(space, &w, k, scoring, us, budget)?)))
            .collect::<Result<Vec<_>>>()?
    } else {
        let s = score(space, &w, ks[0], scoring, us, budget)?;
        ks.iter().map(|&k| (k, w, d, s.clone())).collect()
    };
    Ok(Seq {
        source: format!("constant {w}"),
        entries,
    })
}

/// Fallback search: constant diagonal witnesses, then for each radius the
/// best seeded sample of truncated pairs with `d < δ_i`, where `δ_i` halves
/// along the sequence.
fn grid_sequences(
    space: &Space,
    grid: &GridParams,
    ks: &[u64],
    scoring: &Scoring,
    us: &[Neighborhood],
    min_radius: f64,
    budget: &Budget,
) -> Result<Vec<Seq>> {
    let singles = space.truncate_singles(grid.truncation);
    let mut out = Vec::new();
    for &p in &singles {
        out.push(eval_constant(space, Point::Pair(p, p), ks, scoring, us, budget)?);
    }
    let mut near: Vec<(Point, f64)> = Vec::new();
    for &a in &singles {
        for &b in &singles {
            if a != b {
                let d = single_distance(space, a, b)?;
                if d < min_radius {
                    near.push((Point::Pair(a, b), d));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
    let mut per_k: Vec<Vec<(u64, Point, f64, Vec<BigRational>)>> = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        let delta = min_radius / 2f64.powi(i as i32 + 1);
        let pool: Vec<&(Point, f64)> = near.iter().filter(|(_, d)| *d < delta).collect();
        let chosen: Vec<&&(Point, f64)> = pool.choose_multiple(&mut rng, grid.samples).collect();
        let scored = chosen
            .par_iter()
            .map(|(w, d)| Ok((k, *w, *d, score(space, w, k, scoring, us, budget)?)))
            .collect::<Result<Vec<_>>>()?;
        per_k.push(scored);
    }
    if per_k.iter().all(|v| !v.is_empty()) {
        for j in 0..us.len() {
            let entries = per_k
                .iter()
                .map(|cands| {
                    cands
                        .iter()
                        .max_by(|x, y| x.3[j].cmp(&y.3[j]))
                        .cloned()
                        .expect("nonempty candidate list")
                })
                .collect();
            out.push(Seq {
                source: format!("seeded grid (seed {}) best for neighbourhood {j}", grid.seed),
                entries,
            });
        }
    }
    Ok(out)
}

/// Tail acceptance for radius index `j`: every tail score clears the floor,
/// and tail witness distances are non-increasing and below the smallest radius.
fn tail_check(seq: &Seq, j: usize, floor: &BigRational, min_radius: f64) -> (bool, BigRational) {
    let tail = &seq.entries[seq.entries.len() / 2..];
    let tail_min = tail.iter().map(|e| e.3[j].clone()).min().unwrap_or_else(BigRational::zero);
    let close = tail.iter().all(|e| e.2 < min_radius) && tail.windows(2).all(|w| w[1].2 <= w[0].2);
    (close && tail_min >= *floor && !tail.is_empty(), tail_min)
}

fn record(seq: &Seq, j: usize, radius: &BigRational, accepted: bool, tail_min: &BigRational) -> WitnessRecord {
    WitnessRecord {
        radius: Exact::from(radius),
        source: seq.source.clone(),
        entries: seq
            .entries
            .iter()
            .map(|e| WitnessEntry {
                k: e.0,
                pair: e.1,
                distance: e.2,
                score: Exact::from(&e.3[j]),
                score_exact: e.3[j].clone(),
            })
            .collect(),
        accepted,
        tail_min: Exact::from(tail_min),
    }
}

struct Prepared {
    pair: Point,
    radii: Vec<BigRational>,
    us: Vec<Neighborhood>,
    min_radius: f64,
    notes: Vec<String>,
}

fn prepare(space: &Space, kind: CertificateKind, pair: &Point, params: &DetectorParams) -> Result<Prepared> {
    if space.is_product() {
        return Err(Error::InvalidArgument("relation detectors work on a base space".into()));
    }
    let pair = space.canonical_point(pair)?;
    let Point::Pair(a, b) = pair else {
        return Err(Error::DimensionMismatch("relation queries take a pair".into()));
    };
    if kind == CertificateKind::SwsmF && a == b {
        return Err(Error::Domain("weak sensitivity in the mean is defined for distinct points".into()));
    }
    if params.ks.is_empty() || params.ks.contains(&0) {
        return Err(Error::InvalidArgument("witness indices must be positive and nonempty".into()));
    }
    let mut notes = Vec::new();
    let mut radii: Vec<BigRational> = params.radii.clone();
    if a != b {
        let d = space.metric(&Point::Single(a), &Point::Single(b))?;
        let before = radii.len();
        radii.retain(|r| *r < d);
        if radii.len() < before {
            notes.push(format!(
                "radii not below d(x, x') = {} were dropped so the balls miss the diagonal",
                exact::fraction_string(&d)
            ));
        }
    }
    if radii.is_empty() {
        return Err(Error::InvalidArgument("no usable radius".into()));
    }
    radii.sort_by(|x, y| y.cmp(x));
    let us = radii.iter().map(|r| Neighborhood::ball(pair, r.clone())).collect();
    let min_radius = exact::to_f64(radii.last().expect("nonempty"));
    Ok(Prepared {
        pair,
        radii,
        us,
        min_radius,
        notes,
    })
}

/// Isolated-coordinate and regional-proximality screens shared by every detector.
fn screens(
    space: &Space,
    kind: CertificateKind,
    prep: &Prepared,
    bound_family: &FolnerFamily,
    bound_window: (u64, u64),
    params: &DetectorParams,
) -> Result<Option<Certificate>> {
    if let Some(mut cert) =
        isolated_negative(space, kind, &prep.pair, bound_family, bound_window, &params.floor, &params.budget)?
    {
        if cert.verdict == Verdict::Negative {
            cert.parameters = params.json();
            cert.notes.extend(prep.notes.iter().cloned());
            return Ok(Some(cert));
        }
    }
    let qrp = detect_qrp(space, &prep.pair, &prep.radii, &params.qrp)?;
    if qrp.verdict == Verdict::Negative {
        let mut cert = Certificate::new(kind, prep.pair, params.json());
        cert.verdict = Verdict::Negative;
        cert.neighbourhoods = qrp.neighbourhoods;
        cert.negative = qrp.negative;
        cert.notes.extend(prep.notes.iter().cloned());
        cert.notes
            .push("the pair is not regionally proximal, and every sensitivity relation lies inside that one".into());
        return Ok(Some(cert));
    }
    Ok(None)
}

fn closure_fallback(
    space: &Space,
    cert: &mut Certificate,
    family: &FolnerFamily,
    params: &DetectorParams,
) -> Result<()> {
    let Some(probe) = &params.closure_probe else {
        return Ok(());
    };
    let c = forward_closure_negative(
        space,
        &cert.pair,
        &probe.neighbourhood,
        family,
        probe.n_max,
        probe.truncation,
        &params.budget,
    )?;
    cert.neighbourhoods.push(describe(&probe.neighbourhood));
    cert.notes.extend(c.notes);
    if c.verdict == Verdict::Negative {
        cert.verdict = Verdict::Negative;
        cert.negative = c.negative;
    }
    Ok(())
}

fn search(
    space: &Space,
    kind: CertificateKind,
    pair: &Point,
    scoring: Scoring,
    bound_family: &FolnerFamily,
    bound_window: (u64, u64),
    closure_family: Option<&FolnerFamily>,
    source: &WitnessSource,
    params: &DetectorParams,
) -> Result<Certificate> {
    let prep = prepare(space, kind, pair, params)?;
    if let Some(cert) = screens(space, kind, &prep, bound_family, bound_window, params)? {
        return Ok(cert);
    }
    let mut cert = Certificate::new(kind, prep.pair, params.json());
    cert.notes.extend(prep.notes.iter().cloned());
    cert.neighbourhoods = prep.us.iter().map(describe).collect();

    let mut seqs = Vec::new();
    for t in &source.templates {
        seqs.push(eval_template(space, t, &params.ks, &scoring, &prep.us, &params.budget)?);
    }

    let mut grid_used = false;
    let mut best: Vec<Option<BigRational>>;
    loop {
        best = vec![None; prep.us.len()];
        for j in 0..prep.us.len() {
            for seq in &seqs {
                let (accepted, tail_min) = tail_check(seq, j, &params.floor, prep.min_radius);
                if accepted && best[j].as_ref().map_or(true, |b| tail_min > *b) {
                    best[j] = Some(tail_min.clone());
                }
            }
        }
        let complete = best.iter().all(Option::is_some);
        match (&params.grid, complete, grid_used) {
            (Some(grid), false, false) => {
                grid_used = true;
                cert.notes.push("templates did not cover every neighbourhood; grid search used".into());
                seqs.extend(grid_sequences(
                    space,
                    grid,
                    &params.ks,
                    &scoring,
                    &prep.us,
                    prep.min_radius,
                    &params.budget,
                )?);
            }
            _ => break,
        }
    }

    let n_templates = source.templates.len();
    for (j, r) in prep.radii.iter().enumerate() {
        let mut best_grid: Option<(usize, BigRational, bool)> = None;
        for (i, seq) in seqs.iter().enumerate() {
            let (accepted, tail_min) = tail_check(seq, j, &params.floor, prep.min_radius);
            if i < n_templates {
                cert.witnesses.push(record(seq, j, r, accepted, &tail_min));
            } else if best_grid
                .as_ref()
                .map_or(true, |(_, m, acc)| (accepted, &tail_min) > (*acc, m))
            {
                best_grid = Some((i, tail_min, accepted));
            }
        }
        if let Some((i, m, acc)) = best_grid {
            cert.witnesses.push(record(&seqs[i], j, r, acc, &m));
        }
    }

    if best.iter().all(Option::is_some) {
        let c = best.into_iter().flatten().min().expect("nonempty radii");
        cert.verdict = Verdict::Positive;
        cert.threshold = Some(Exact::from(&c));
    } else if let Some(f) = closure_family {
        closure_fallback(space, &mut cert, f, params)?;
    }
    Ok(cert)
}

/// Quasi-mean-sensitivity evidence along `F`: witnesses `(x_k, x'_k)` whose
/// upper asymptotic hitting densities, estimated on the window, clear a
/// common threshold for every ball.
pub fn detect_qrms_f(
    space: &Space,
    pair: &Point,
    family: &FolnerFamily,
    source: &WitnessSource,
    params: &DetectorParams,
) -> Result<Certificate> {
    search(
        space,
        CertificateKind::QrmsF,
        pair,
        Scoring::Ua {
            family,
            window: params.window,
        },
        family,
        params.window,
        Some(family),
        source,
        params,
    )
}

/// Matched-index evidence: the witness with index `k` is scored against `F_k`.
pub fn detect_srjms_f(
    space: &Space,
    pair: &Point,
    family: &FolnerFamily,
    source: &WitnessSource,
    params: &DetectorParams,
) -> Result<Certificate> {
    search(
        space,
        CertificateKind::SrjmsF,
        pair,
        Scoring::Matched { family },
        family,
        params.window,
        Some(family),
        source,
        params,
    )
}

/// Upper Banach evidence on a fixed shape with right translates.
pub fn detect_qrms_banach(
    space: &Space,
    pair: &Point,
    shape: &FolnerFamily,
    source: &WitnessSource,
    params: &DetectorParams,
) -> Result<Certificate> {
    let translates = params.translates.unwrap_or_else(|| default_translates(params.banach_n));
    search(
        space,
        CertificateKind::QrmsBanach,
        pair,
        Scoring::Banach {
            shape,
            n: params.banach_n,
            translates,
        },
        shape,
        params.window,
        None,
        source,
        params,
    )
}

/// Weak sensitivity in the mean along `F`: for every ball and every scale
/// `ε` some witness with `d(y, y') < ε` has matched density above the floor.
/// Diagonal pairs are rejected.
pub fn detect_swsm_f(
    space: &Space,
    pair: &Point,
    family: &FolnerFamily,
    source: &WitnessSource,
    params: &DetectorParams,
) -> Result<Certificate> {
    let kind = CertificateKind::SwsmF;
    let prep = prepare(space, kind, pair, params)?;
    if params.epsilons.is_empty() {
        return Err(Error::InvalidArgument("weak sensitivity needs at least one scale".into()));
    }
    if let Some(cert) = screens(space, kind, &prep, family, params.window, params)? {
        return Ok(cert);
    }
    let scoring = Scoring::Matched { family };
    let mut cert = Certificate::new(kind, prep.pair, params.json());
    cert.notes.extend(prep.notes.iter().cloned());
    cert.neighbourhoods = prep.us.iter().map(describe).collect();

    let mut seqs = Vec::new();
    for t in &source.templates {
        seqs.push(eval_template(space, t, &params.ks, &scoring, &prep.us, &params.budget)?);
    }
    let best_for = |seqs: &[Seq]| -> Vec<Vec<BigRational>> {
        (0..prep.us.len())
            .map(|j| {
                params
                    .epsilons
                    .iter()
                    .map(|&e| {
                        seqs.iter()
                            .flat_map(|s| s.entries.iter())
                            .filter(|en| en.2 < e)
                            .map(|en| en.3[j].clone())
                            .max()
                            .unwrap_or_else(BigRational::zero)
                    })
                    .collect()
            })
            .collect()
    };
    let mut table = best_for(&seqs);
    let met = |t: &Vec<Vec<BigRational>>| t.iter().flatten().all(|b| *b >= params.floor);
    if !met(&table) {
        if let Some(grid) = &params.grid {
            cert.notes.push("templates did not cover every (ball, scale); grid search used".into());
            seqs.extend(grid_sequences(
                space,
                grid,
                &params.ks,
                &scoring,
                &prep.us,
                prep.min_radius,
                &params.budget,
            )?);
            table = best_for(&seqs);
        }
    }
    for (j, r) in prep.radii.iter().enumerate() {
        for seq in seqs.iter().take(source.templates.len()) {
            let ok = params.epsilons.iter().all(|&e| {
                seq.entries.iter().any(|en| en.2 < e && en.3[j] >= params.floor)
            });
            let m = seq.entries.iter().map(|e| e.3[j].clone()).max().unwrap_or_else(BigRational::zero);
            cert.witnesses.push(record(seq, j, r, ok, &m));
        }
    }
    if met(&table) {
        let c = table.into_iter().flatten().min().expect("nonempty");
        cert.verdict = Verdict::Positive;
        cert.threshold = Some(Exact::from(&c));
    } else {
        closure_fallback(space, &mut cert, family, params)?;
    }
    Ok(cert)
}
