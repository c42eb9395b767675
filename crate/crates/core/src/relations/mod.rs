//! Certificate-producing detectors for the sensitivity relations, structural
//! negative certificates, and the icer hull on finite models.
//!
//! Every verdict is evidence at the stated finite parameters. `POSITIVE`
//! lists explicit asymptotically diagonal witnesses whose hitting densities
//! clear a common threshold; `NEGATIVE` rests on an exhaustively checked
//! obstruction; `INCONCLUSIVE` is returned otherwise.

mod detectors;
mod icer;
mod negative;

pub use detectors::{detect_qrms_banach, detect_qrms_f, detect_srjms_f, detect_swsm_f, WitnessSource};
pub use icer::{icer_hull, FiniteModel, IcerResult};
pub use negative::{
    detect_proximal, detect_qrp, forward_closure_negative, isolated_negative, qrp_elements, ProximalReport,
};

use num_rational::BigRational;
use serde::{Serialize, Serializer};

use crate::exact::{self, Exact};
use crate::folner::Budget;
use crate::space::{Neighborhood, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CertificateKind {
    QrmsF,
    SrjmsF,
    SwsmF,
    QrmsBanach,
    Proximal,
    Qrp,
    NegativeForwardClosure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Positive,
    Negative,
    Inconclusive,
}

/// One evaluated member `(x_k, x'_k)` of a witness sequence.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessEntry {
    pub k: u64,
    pub pair: Point,
    /// `d(x_k, x'_k)`
    pub distance: f64,
    pub score: Exact,
    #[serde(skip)]
    pub score_exact: BigRational,
}

/// A witness sequence evaluated against one neighbourhood.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessRecord {
    pub radius: Exact,
    pub source: String,
    pub entries: Vec<WitnessEntry>,
    pub accepted: bool,
    pub tail_min: Exact,
}

/// Why a negative certificate holds.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NegativeEvidence {
    /// A coordinate is an isolated point `x`; along `F_n` at most
    /// `bound_n · |F_n|` elements map any point onto `x`.
    IsolatedCoordinate {
        coordinate: usize,
        neighbourhood: String,
        bounds: Vec<(u64, Exact)>,
        witness_densities: Vec<(u64, Exact)>,
    },
    /// No pair in the truncated ball is brought `epsilon`-close by the element window.
    NotRegionallyProximal {
        radius: Exact,
        epsilon: f64,
        min_distance: f64,
        candidates: usize,
        elements: usize,
    },
    /// `g.p ∈ U ⇒ p ∈ U` for all tested `g`, and `U` stays `diagonal_gap` away from the diagonal.
    ForwardClosure {
        neighbourhood: String,
        checked_points: usize,
        elements: usize,
        diagonal_gap: Exact,
    },
}

/// Structured evidence for a relation-membership query.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub pair: Point,
    pub verdict: Verdict,
    /// Largest threshold all accepted witnesses clear.
    pub threshold: Option<Exact>,
    pub neighbourhoods: Vec<String>,
    pub witnesses: Vec<WitnessRecord>,
    pub negative: Option<NegativeEvidence>,
    pub notes: Vec<String>,
    pub parameters: serde_json::Value,
}

impl Certificate {
    fn new(kind: CertificateKind, pair: Point, parameters: serde_json::Value) -> Self {
        Certificate {
            kind,
            pair,
            verdict: Verdict::Inconclusive,
            threshold: None,
            neighbourhoods: Vec::new(),
            witnesses: Vec::new(),
            negative: None,
            notes: Vec::new(),
            parameters,
        }
    }
}

/// Default density floor: witnesses must clear `1/20` to count.
pub fn default_floor() -> BigRational {
    exact::ratio(1, 20)
}

fn ser_rationals<S: Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    let strings: Vec<String> = v.iter().map(exact::fraction_string).collect();
    strings.serialize(s)
}

fn ser_rational<S: Serializer>(v: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&exact::fraction_string(v))
}

/// Search window for the regional-proximality screen.
#[derive(Clone, Debug, Serialize)]
pub struct QrpParams {
    /// Candidate pairs have integer coordinates in `[-truncation, truncation]`.
    pub truncation: i64,
    /// Translations range over `[-element_window, element_window]`.
    pub element_window: i64,
    pub epsilons: Vec<f64>,
}

impl Default for QrpParams {
    fn default() -> Self {
        QrpParams {
            truncation: 10,
            element_window: 40,
            epsilons: vec![0.5, 0.2, 0.05],
        }
    }
}

/// Seeded fallback search over truncation pairs.
#[derive(Clone, Debug, Serialize)]
pub struct GridParams {
    pub truncation: i64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            truncation: 4,
            samples: 12,
            seed: 0x5eed,
        }
    }
}

/// A neighbourhood to test with [`forward_closure_negative`] when no positive
/// witness is found.
#[derive(Clone, Debug, Serialize)]
pub struct ClosureProbe {
    pub neighbourhood: Neighborhood,
    pub n_max: u64,
    pub truncation: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DetectorParams {
    #[serde(serialize_with = "ser_rationals")]
    pub radii: Vec<BigRational>,
    #[serde(serialize_with = "ser_rational")]
    pub floor: BigRational,
    /// Witness indices. Matched detectors evaluate `x_k` against `F_k`.
    pub ks: Vec<u64>,
    /// Window of `n` for upper asymptotic densities and isolated-point bounds.
    pub window: (u64, u64),
    /// Scales `ε` for weak sensitivity in the mean.
    pub epsilons: Vec<f64>,
    /// Shape index for upper Banach densities.
    pub banach_n: u64,
    /// Translate range for upper Banach densities; defaults to `±5n`.
    pub translates: Option<(i64, i64)>,
    pub qrp: QrpParams,
    pub grid: Option<GridParams>,
    pub closure_probe: Option<ClosureProbe>,
    #[serde(skip)]
    pub budget: Budget,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            radii: vec![exact::ratio(1, 2), exact::ratio(1, 4), exact::ratio(1, 10)],
            floor: default_floor(),
            ks: vec![8, 16, 24, 32],
            window: (1, 200),
            epsilons: vec![0.1, 0.05, 0.02],
            banach_n: 40,
            translates: None,
            qrp: QrpParams::default(),
            grid: Some(GridParams::default()),
            closure_probe: None,
            budget: Budget::default(),
        }
    }
}

impl DetectorParams {
    fn json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}
