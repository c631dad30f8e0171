//! Lower bounds for the conditionality constants
//!
//! * `k_m = sup_{|A|≤m} ‖S_A‖`, and
//! * `L_m = sup { ‖S_A f‖ / ‖f‖ : supp f ⊆ [1, m] }`,
//!
//! together with growth fits of measured ladders against a doubling target.
//!
//! For `f` supported in `[1, m]`, `S_A f = S_{A∩[1,m]} f`, so the `L_m`
//! search only ranges over `A ⊆ [1, m]`.
//!
//! The oracle sweeps the `{-1, 0, 1}` grid on `[1, m]` with every subset `A`,
//! then runs coordinate ascent (halving, doubling, sign flips, zeroing,
//! activation and membership toggles) from the best grid points. Beyond the
//! oracle guard, values come from template witnesses and seeded random
//! starts, each polished by the same ascent. Every value is a certified
//! lower bound carried by a [`Witness`].

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bases::BasisTruncation;
use crate::search::{
    grid_point, grid_size, projection_grid, random_start, rng_for, stream_id, top_hits, AscentConfig,
    ProjectionState,
};
use crate::witness::{Method, Witness, WitnessKind};

/// Default largest `m` handled by the exhaustive grid.
pub const ORACLE_GUARD: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum ConditionalityError {
    #[error("m = {m} is above the oracle guard {guard}")]
    OverGuard { m: usize, guard: usize },
    #[error("m = {m} outside 1..={d}")]
    SizeOutOfRange { m: usize, d: usize },
    #[error("growth fit needs at least 4 points with strictly increasing m")]
    BadLadder,
    #[error("unknown growth target `{0}`")]
    UnknownTarget(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub guard: usize,
    /// Number of best grid points refined by ascent.
    pub ascent_starts: usize,
    pub ascent: AscentConfig,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { guard: ORACLE_GUARD, ascent_starts: 256, ascent: AscentConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateConfig {
    pub oracle: OracleConfig,
    /// Cap on random starts, whatever the budget.
    pub max_random_starts: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig { oracle: OracleConfig::default(), max_random_starts: 4096 }
    }
}

fn check_m(b: &BasisTruncation, m: usize) -> Result<(), ConditionalityError> {
    if m == 0 || m > b.d() {
        return Err(ConditionalityError::SizeOutOfRange { m, d: b.d() });
    }
    Ok(())
}

/// Larger ratio wins; ties go to the lower `key`.
fn pick(x: Option<(u64, Witness)>, y: Option<(u64, Witness)>) -> Option<(u64, Witness)> {
    match (x, y) {
        (Some(x), Some(y)) => {
            if y.1.ratio > x.1.ratio || (y.1.ratio == x.1.ratio && y.0 < x.0) {
                Some(y)
            } else {
                Some(x)
            }
        }
        (x, None) => x,
        (None, y) => y,
    }
}

fn polish(
    b: &BasisTruncation,
    a: Vec<f64>,
    in_set: Vec<bool>,
    max_card: usize,
    cfg: &AscentConfig,
    kind: WitnessKind,
    method: Method,
) -> Witness {
    let mut st = ProjectionState::new(b, a, in_set, max_card);
    st.ascend(cfg);
    let set = st.set();
    Witness::evaluate(b, st.a, set, kind, method)
}

fn mask_vec(n: usize, mask: u64) -> Vec<bool> {
    (0..n).map(|j| mask >> j & 1 == 1).collect()
}

/// Grid sweep over coefficients on `[0, n)` and sets with `|A| ≤ max_card`,
/// followed by ascent from the leading grid points.
fn projection_oracle(
    b: &BasisTruncation,
    n: usize,
    max_card: usize,
    cfg: &OracleConfig,
    kind: WitnessKind,
) -> Witness {
    let hits = top_hits(projection_grid(b, n, max_card), cfg.ascent_starts.max(1));
    hits.par_iter()
        .enumerate()
        .map(|(rank, hit)| {
            let mut a = vec![0.0; n];
            grid_point(hit.index, &mut a);
            let w = polish(b, a, mask_vec(n, hit.mask), max_card, &cfg.ascent, kind, Method::Oracle);
            Some((rank as u64, w))
        })
        .reduce(|| None, pick)
        .map(|(_, w)| w)
        .expect("the grid has a nonzero point")
}

/// Exhaustive-grid lower bound for `L_m`, frozen as the reference value.
pub fn lm_oracle(b: &BasisTruncation, m: usize) -> Result<(f64, Witness), ConditionalityError> {
    lm_oracle_with(b, m, &OracleConfig::default())
}

pub fn lm_oracle_with(
    b: &BasisTruncation,
    m: usize,
    cfg: &OracleConfig,
) -> Result<(f64, Witness), ConditionalityError> {
    check_m(b, m)?;
    if m > cfg.guard {
        return Err(ConditionalityError::OverGuard { m, guard: cfg.guard });
    }
    let w = projection_oracle(b, m, m, cfg, WitnessKind::Conditionality);
    Ok((w.ratio, w))
}

/// Structured starting witnesses.
#[derive(Debug, Clone, PartialEq)]
pub enum TemplateFamily {
    /// All-ones coefficients; `A` = even or odd positions.
    AlternatingIndicator,
    /// Coefficients `(-1)^j`, also with the last one halved; `A` = positive
    /// or negative positions.
    AlternatingSigns,
    /// Heap-ordered tree weights `2^{-depth(j)}`; `A` = even or odd depths.
    DyadicTree,
    /// Caller-supplied witnesses, used when they fit the support.
    Explicit(Vec<Witness>),
}

impl TemplateFamily {
    pub fn name(&self) -> &'static str {
        match self {
            TemplateFamily::AlternatingIndicator => "alternating-indicator",
            TemplateFamily::AlternatingSigns => "alternating-signs",
            TemplateFamily::DyadicTree => "dyadic-tree",
            TemplateFamily::Explicit(_) => "explicit",
        }
    }

    /// Every family except [`TemplateFamily::Explicit`].
    pub fn standard() -> Vec<TemplateFamily> {
        vec![
            TemplateFamily::AlternatingIndicator,
            TemplateFamily::AlternatingSigns,
            TemplateFamily::DyadicTree,
        ]
    }

    /// `(coeffs, A)` pairs supported in `[0, n)`.
    pub fn candidates(&self, n: usize) -> Vec<(Vec<f64>, Vec<usize>)> {
        let parity = |p: usize| (0..n).filter(|j| j % 2 == p).collect::<Vec<_>>();
        match self {
            TemplateFamily::AlternatingIndicator => {
                vec![(vec![1.0; n], parity(0)), (vec![1.0; n], parity(1))]
            }
            TemplateFamily::AlternatingSigns => {
                let a: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
                let mut halved = a.clone();
                if let Some(x) = halved.last_mut() {
                    *x *= 0.5;
                }
                vec![
                    (a.clone(), parity(0)),
                    (a, parity(1)),
                    (halved.clone(), parity(0)),
                    (halved, parity(1)),
                ]
            }
            TemplateFamily::DyadicTree => {
                let depth = |j: usize| (usize::BITS - 1 - (j + 1).leading_zeros()) as usize;
                let a: Vec<f64> = (0..n).map(|j| (-(depth(j) as f64)).exp2()).collect();
                let by_depth =
                    |p: usize| (0..n).filter(|&j| depth(j) % 2 == p).collect::<Vec<_>>();
                vec![(a.clone(), by_depth(0)), (a, by_depth(1))]
            }
            TemplateFamily::Explicit(ws) => ws
                .iter()
                .filter(|w| w.support_end() <= n)
                .map(|w| {
                    let mut a = w.coeffs.clone();
                    a.resize(n, 0.0);
                    (a, w.set.iter().copied().filter(|&j| j < n).collect())
                })
                .collect(),
        }
    }
}

impl fmt::Display for TemplateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TemplateFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "alternating-indicator" => Ok(TemplateFamily::AlternatingIndicator),
            "alternating-signs" => Ok(TemplateFamily::AlternatingSigns),
            "dyadic-tree" => Ok(TemplateFamily::DyadicTree),
            other => Err(format!("unknown template family `{other}`")),
        }
    }
}

fn set_mask(n: usize, set: &[usize]) -> Vec<bool> {
    let mut v = vec![false; n];
    for &j in set {
        v[j] = true;
    }
    v
}

/// Shared driver of the `L_m` and `k_m` estimators.
struct Search<'a> {
    b: &'a BasisTruncation,
    /// Coefficients range over `[0, n)`.
    n: usize,
    max_card: usize,
    kind: WitnessKind,
    cfg: &'a EstimateConfig,
}

impl Search<'_> {
    fn run(
        &self,
        m: usize,
        budget: usize,
        seed: u64,
        templates: &[(Vec<f64>, Vec<usize>)],
    ) -> Witness {
        let mut best: Option<(u64, Witness)> = None;
        let full = self.n <= self.cfg.oracle.guard
            && grid_size(self.n).is_some_and(|g| budget as u64 >= g);
        if full {
            let w = projection_oracle(self.b, self.n, self.max_card, &self.cfg.oracle, self.kind);
            best = pick(best, Some((0, w)));
        }
        let asc = &self.cfg.oracle.ascent;
        let from_templates = templates
            .par_iter()
            .enumerate()
            .map(|(i, (a, set))| {
                let w = polish(
                    self.b,
                    a.clone(),
                    set_mask(self.n, set),
                    self.max_card,
                    asc,
                    self.kind,
                    Method::Template,
                );
                Some((1 + i as u64, w))
            })
            .reduce(|| None, pick);
        best = pick(best, from_templates);
        let offset = 1 + templates.len() as u64;
        let starts = budget.min(self.cfg.max_random_starts) as u64;
        let from_random = (0..starts)
            .into_par_iter()
            .map(|idx| {
                let mut rng = rng_for(seed, stream_id(m, idx));
                let (a, in_set) = random_start(&mut rng, self.n, self.max_card);
                let w = polish(self.b, a, in_set, self.max_card, asc, self.kind, Method::Random);
                Some((offset + idx, w))
            })
            .reduce(|| None, pick);
        best = pick(best, from_random);
        best.map(|(_, w)| w).unwrap_or_else(|| {
            // Only reachable with no templates and zero budget: A = {0}.
            let mut a = vec![0.0; self.n];
            a[0] = 1.0;
            Witness::evaluate(self.b, a, vec![0], self.kind, Method::Template)
        })
    }
}

/// Lower bound for `L_m`: the oracle when `budget ≥ 3^m` (and `m` is within
/// the guard), template witnesses, and `min(budget, cap)` random starts,
/// all polished by ascent. The result never decreases when `budget` grows.
pub fn lm_estimate(
    b: &BasisTruncation,
    m: usize,
    budget: usize,
    seed: u64,
    templates: &[TemplateFamily],
) -> Result<(f64, Witness), ConditionalityError> {
    lm_estimate_with(b, m, budget, seed, templates, &EstimateConfig::default())
}

pub fn lm_estimate_with(
    b: &BasisTruncation,
    m: usize,
    budget: usize,
    seed: u64,
    templates: &[TemplateFamily],
    cfg: &EstimateConfig,
) -> Result<(f64, Witness), ConditionalityError> {
    check_m(b, m)?;
    let candidates: Vec<_> = templates.iter().flat_map(|t| t.candidates(m)).collect();
    let search = Search { b, n: m, max_card: m, kind: WitnessKind::Conditionality, cfg };
    let w = search.run(m, budget, seed, &candidates);
    Ok((w.ratio, w))
}

/// Lower bound for `k_m`: coefficients range over all `d` positions and
/// `|A| ≤ m`. Templates are laid out on supports of length `m..=2m+1` with
/// `A` cut to its first `m` indices.
pub fn km_estimate(
    b: &BasisTruncation,
    m: usize,
    budget: usize,
    seed: u64,
    templates: &[TemplateFamily],
) -> Result<(f64, Witness), ConditionalityError> {
    km_estimate_with(b, m, budget, seed, templates, &EstimateConfig::default())
}

pub fn km_estimate_with(
    b: &BasisTruncation,
    m: usize,
    budget: usize,
    seed: u64,
    templates: &[TemplateFamily],
    cfg: &EstimateConfig,
) -> Result<(f64, Witness), ConditionalityError> {
    check_m(b, m)?;
    let d = b.d();
    let mut candidates = Vec::new();
    for s in m..=(2 * m + 1).min(d) {
        for t in templates {
            for (mut a, set) in t.candidates(s) {
                a.resize(d, 0.0);
                candidates.push((a, set.into_iter().take(m).collect()));
            }
        }
    }
    let search = Search { b, n: d, max_card: m, kind: WitnessKind::Projection, cfg };
    let w = search.run(m, budget, seed, &candidates);
    Ok((w.ratio, w))
}

/// Doubling growth target `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GrowthTarget {
    /// `log₂ m`.
    Log,
    /// `m^a`.
    Power(f64),
    Linear,
}

impl GrowthTarget {
    pub fn delta(&self, m: f64) -> f64 {
        match self {
            GrowthTarget::Log => m.log2(),
            GrowthTarget::Power(a) => m.powf(*a),
            GrowthTarget::Linear => m,
        }
    }

    /// `C` with `δ(2t) ≤ C δ(t)` (for `t ≥ 2` in the logarithmic case).
    pub fn doubling_constant(&self) -> f64 {
        match self {
            GrowthTarget::Log => 2.0,
            GrowthTarget::Power(a) => 2f64.powf(*a),
            GrowthTarget::Linear => 2.0,
        }
    }

    /// Checks that `δ` increases along `ladder` and `δ(2t) ≤ Cδ(t)` at each rung.
    pub fn is_doubling_on(&self, ladder: &[usize]) -> bool {
        let c = self.doubling_constant();
        let increasing = ladder.windows(2).all(|w| self.delta(w[0] as f64) < self.delta(w[1] as f64));
        let doubling = ladder
            .iter()
            .filter(|&&t| !(matches!(self, GrowthTarget::Log) && t < 2))
            .all(|&t| self.delta(2.0 * t as f64) <= c * self.delta(t as f64) * (1.0 + 1e-12));
        increasing && doubling
    }
}

impl fmt::Display for GrowthTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrowthTarget::Log => f.write_str("log"),
            GrowthTarget::Power(a) => write!(f, "power:{a}"),
            GrowthTarget::Linear => f.write_str("linear"),
        }
    }
}

impl TryFrom<String> for GrowthTarget {
    type Error = ConditionalityError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<GrowthTarget> for String {
    fn from(t: GrowthTarget) -> String {
        t.to_string()
    }
}

impl FromStr for GrowthTarget {
    type Err = ConditionalityError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log" => Ok(GrowthTarget::Log),
            "linear" => Ok(GrowthTarget::Linear),
            _ => s
                .strip_prefix("power:")
                .and_then(|a| a.parse::<f64>().ok())
                .filter(|a| *a > 0.0 && *a < 1.0)
                .map(GrowthTarget::Power)
                .ok_or_else(|| ConditionalityError::UnknownTarget(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

/// Default accepted slope band of a growth fit.
pub const DEFAULT_SLOPE_BAND: (f64, f64) = (0.1, 10.0);
/// Minimum coefficient of determination for a passing fit.
pub const MIN_R_SQUARED: f64 = 0.95;

/// Least-squares fit `LB ≈ α + β δ(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` when the ladder is constant.
    pub r_squared: Option<f64>,
    pub band: (f64, f64),
    pub verdict: Verdict,
}

pub fn growth_fit(series: &[(usize, f64)], target: GrowthTarget) -> Result<GrowthFit, ConditionalityError> {
    growth_fit_with_band(series, target, DEFAULT_SLOPE_BAND)
}

pub fn growth_fit_with_band(
    series: &[(usize, f64)],
    target: GrowthTarget,
    band: (f64, f64),
) -> Result<GrowthFit, ConditionalityError> {
    if series.len() < 4 || series.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(ConditionalityError::BadLadder);
    }
    let n = series.len() as f64;
    let xs: Vec<f64> = series.iter().map(|(m, _)| target.delta(*m as f64)).collect();
    let ys: Vec<f64> = series.iter().map(|(_, y)| *y).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy <= f64::EPSILON * my.abs().max(1.0) {
        None
    } else {
        let ss_res: f64 =
            xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        Some(1.0 - ss_res / syy)
    };
    let pass = r_squared.is_some_and(|r| r >= MIN_R_SQUARED) && slope >= band.0 && slope <= band.1;
    Ok(GrowthFit { slope, intercept, r_squared, band, verdict: Verdict::from_bool(pass) })
}

/// One rung of a measured ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub m: usize,
    pub lb: f64,
    pub method: Method,
    pub delta_m: f64,
    pub witness: Witness,
}

/// How each rung of a ladder is measured.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderOptions {
    /// Rungs up to this `m` use the oracle.
    pub oracle_through: usize,
    pub budget: usize,
    pub seed: u64,
    pub templates: Vec<TemplateFamily>,
    pub config: EstimateConfig,
}

impl Default for LadderOptions {
    fn default() -> Self {
        LadderOptions {
            oracle_through: ORACLE_GUARD,
            budget: 256,
            seed: 0xC0FFEE,
            templates: TemplateFamily::standard(),
            config: EstimateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstantKind {
    /// `L_m`.
    #[serde(rename = "L")]
    L,
    /// `k_m`.
    #[serde(rename = "k")]
    K,
}

impl FromStr for ConstantKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "L" | "l" => Ok(ConstantKind::L),
            "k" | "K" => Ok(ConstantKind::K),
            other => Err(format!("unknown constant `{other}` (expected L or k)")),
        }
    }
}

/// Lower bounds along `ladder`. A witness found at a smaller rung remains
/// admissible at every larger rung, so values are carried forward and the
/// ladder is non-decreasing.
pub fn measure_ladder(
    b: &BasisTruncation,
    kind: ConstantKind,
    ladder: &[usize],
    target: GrowthTarget,
    opts: &LadderOptions,
) -> Result<Vec<LadderPoint>, ConditionalityError> {
    let mut out: Vec<LadderPoint> = Vec::with_capacity(ladder.len());
    for &m in ladder {
        let (_, w) = match kind {
            ConstantKind::L if m <= opts.oracle_through.min(opts.config.oracle.guard) => {
                lm_oracle_with(b, m, &opts.config.oracle)?
            }
            ConstantKind::L => {
                lm_estimate_with(b, m, opts.budget, opts.seed, &opts.templates, &opts.config)?
            }
            ConstantKind::K => {
                km_estimate_with(b, m, opts.budget, opts.seed, &opts.templates, &opts.config)?
            }
        };
        let w = match out.last() {
            Some(prev) if prev.witness.ratio > w.ratio => prev.witness.clone(),
            _ => w,
        };
        out.push(LadderPoint { m, lb: w.ratio, method: w.method, delta_m: target.delta(m as f64), witness: w });
    }
    Ok(out)
}

/// A measured ladder with its growth fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub label: String,
    pub target: GrowthTarget,
    pub points: Vec<LadderPoint>,
    pub fit: Option<GrowthFit>,
    pub target_doubling: bool,
    pub verdict: Verdict,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    m: usize,
    lb: f64,
    method: &'a str,
    delta_m: f64,
}

/// Ladder rows under the header `m,lb,method,delta_m`.
pub fn ladder_csv(points: &[LadderPoint]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    if points.is_empty() {
        w.write_record(["m", "lb", "method", "delta_m"]).expect("in-memory csv");
    }
    for p in points {
        w.serialize(CsvRow { m: p.m, lb: p.lb, method: p.method.as_str(), delta_m: p.delta_m })
            .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

impl GrowthReport {
    /// Fits `points` against `target`; ladders too short to fit are kept
    /// with `fit = None` and a FAIL verdict.
    pub fn new(label: impl Into<String>, target: GrowthTarget, points: Vec<LadderPoint>, band: (f64, f64)) -> Self {
        let series: Vec<(usize, f64)> = points.iter().map(|p| (p.m, p.lb)).collect();
        let fit = growth_fit_with_band(&series, target, band).ok();
        let ladder: Vec<usize> = points.iter().map(|p| p.m).collect();
        let target_doubling = target.is_doubling_on(&ladder);
        let verdict = Verdict::from_bool(fit.is_some_and(|f| f.verdict == Verdict::Pass) && target_doubling);
        GrowthReport { label: label.into(), target, points, fit, target_doubling, verdict }
    }

    pub fn series(&self) -> Vec<(usize, f64)> {
        self.points.iter().map(|p| (p.m, p.lb)).collect()
    }

    /// `m,lb,method,delta_m`.
    pub fn to_csv(&self) -> String {
        ladder_csv(&self.points)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Position of `m` in a block ladder `d_1, d_2, …`: `r` is the number of
/// complete blocks, `Σ_{n≤r} d_n ≤ m < Σ_{n≤r+1} d_n`, with `d_0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPosition {
    pub m: usize,
    pub r: usize,
    pub d_r: usize,
}

pub fn block_position(dims: &[usize], m: usize) -> BlockPosition {
    let mut total = 0;
    let mut r = 0;
    for &d in dims {
        if total + d > m {
            break;
        }
        total += d;
        r += 1;
    }
    let d_r = if r == 0 { 1 } else { dims[r - 1] };
    BlockPosition { m, r, d_r }
}

/// `C₄ = C₂C₃D²/(D-1)` for block growth ratio `D`.
pub fn chain_constant(c2: f64, c3: f64, growth: f64) -> f64 {
    c2 * c3 * growth * growth / (growth - 1.0)
}

/// First `m ≤ Σ d_n` violating `m ≤ c₄ d_r`, if any.
pub fn block_chain_violation(dims: &[usize], c4: f64) -> Option<BlockPosition> {
    let total: usize = dims.iter().sum();
    (1..=total).map(|m| block_position(dims, m)).find(|p| p.m as f64 > c4 * p.d_r as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{difference, dyadic_dims, lindenstrauss, summing, unit_vector_system};
    use crate::greedy::project;
    use crate::spaces::SpaceDesc;

    #[test]
    fn unit_vectors_have_trivial_oracle() {
        for space in [SpaceDesc::lp(1.0), SpaceDesc::lp(2.0), SpaceDesc::linf()] {
            let b = unit_vector_system(6, space).unwrap();
            for m in 1..=6 {
                assert_eq!(lm_oracle(&b, m).unwrap().0, 1.0);
            }
        }
    }

    #[test]
    fn difference_oracle_attains_hand_witness() {
        let b = difference(3).unwrap();
        let (v, w) = lm_oracle(&b, 3).unwrap();
        assert!(v >= 3.0 - 1e-12);
        assert!(w.verify(&b));
    }

    #[test]
    fn lindenstrauss_m2_in_range() {
        let (v, _) = lm_oracle(&lindenstrauss(4).unwrap(), 2).unwrap();
        assert!((1.0..=2.0).contains(&v), "{v}");
    }

    #[test]
    fn oracle_guard_enforced() {
        let b = difference(14).unwrap();
        assert_eq!(lm_oracle(&b, 13), Err(ConditionalityError::OverGuard { m: 13, guard: 12 }));
        assert!(lm_oracle(&b, 0).is_err());
    }

    #[test]
    fn sets_beyond_support_change_nothing() {
        let b = difference(10).unwrap();
        let a = [1.0, -0.5, 2.0, 0.0, 1.5];
        let inside = project(&b, &a, &[0, 2, 4]).unwrap();
        let outside = project(&b, &a, &[0, 2, 4, 6, 7, 9]).unwrap();
        assert_eq!(inside, outside);
    }

    #[test]
    fn difference_templates() {
        let b = difference(12).unwrap();
        for m in 2..=12 {
            let (v, _) = lm_estimate(&b, m, 1, 0, &[TemplateFamily::AlternatingIndicator]).unwrap();
            assert!(v >= (2 * m.div_ceil(2) - 1) as f64, "m={m}: {v}");
        }
    }

    #[test]
    fn summing_templates() {
        let b = summing(16).unwrap();
        for m in 2..=16 {
            let (v, _) = lm_estimate(&b, m, 1, 0, &[TemplateFamily::AlternatingSigns]).unwrap();
            assert!(v >= m as f64 / 4.0, "m={m}: {v}");
        }
    }

    #[test]
    fn km_difference_example() {
        let b = difference(8).unwrap();
        let (v, w) = km_estimate(&b, 4, 1, 0, &[TemplateFamily::AlternatingIndicator]).unwrap();
        assert!(v >= 7.0 - 1e-12);
        assert!(w.set.len() <= 4);
        assert!(w.verify(&b));
    }

    #[test]
    fn estimate_monotone_in_budget() {
        let b = lindenstrauss(10).unwrap();
        let mut prev = 0.0;
        for budget in [1, 2, 4, 8, 16, 32] {
            let (v, _) = lm_estimate(&b, 9, budget, 5, &[]).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn growth_fit_examples() {
        let exact: Vec<(usize, f64)> = [2, 4, 8, 16, 32].iter().map(|&m| (m, 3.0 * (m as f64).log2())).collect();
        let fit = growth_fit(&exact, GrowthTarget::Log).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-12);
        assert!((fit.r_squared.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(fit.verdict, Verdict::Pass);

        let flat: Vec<(usize, f64)> = [2, 4, 8, 16].iter().map(|&m| (m, 1.0)).collect();
        let fit = growth_fit(&flat, GrowthTarget::Linear).unwrap();
        assert_eq!(fit.r_squared, None);
        assert_eq!(fit.verdict, Verdict::Fail);

        assert_eq!(growth_fit(&exact[..3], GrowthTarget::Log), Err(ConditionalityError::BadLadder));
    }

    #[test]
    fn targets_are_doubling() {
        let ladder = [2, 4, 8, 16, 32, 64];
        for t in [GrowthTarget::Log, GrowthTarget::Power(0.5), GrowthTarget::Linear] {
            assert!(t.is_doubling_on(&ladder), "{t}");
            assert_eq!(t.to_string().parse::<GrowthTarget>().unwrap(), t);
        }
        assert!("power:2".parse::<GrowthTarget>().is_err());
    }

    #[test]
    fn report_csv_schema() {
        let b = difference(6).unwrap();
        let pts = measure_ladder(&b, ConstantKind::L, &[2, 3, 4, 5], GrowthTarget::Linear, &LadderOptions::default())
            .unwrap();
        let report = GrowthReport::new("difference", GrowthTarget::Linear, pts, DEFAULT_SLOPE_BAND);
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("m,lb,method,delta_m"));
        assert_eq!(lines.next(), Some("2,2.0,oracle,2.0"));
        assert_eq!(report.verdict, Verdict::Pass);
    }

    #[test]
    fn block_chain_on_dyadic_ladder() {
        let dims = dyadic_dims(1, 6);
        let c4 = chain_constant(1.0, 1.0, 2.0);
        assert_eq!(c4, 4.0);
        assert_eq!(block_chain_violation(&dims, c4), None);
        assert_eq!(block_position(&dims, 1), BlockPosition { m: 1, r: 0, d_r: 1 });
        assert_eq!(block_position(&dims, 6), BlockPosition { m: 6, r: 2, d_r: 4 });
        assert_eq!(block_position(&dims, 126), BlockPosition { m: 126, r: 6, d_r: 64 });
        // A ladder growing faster than the constant allows is caught.
        assert!(block_chain_violation(&[1, 10], 4.0).is_some());
    }
}
