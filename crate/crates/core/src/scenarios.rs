//! Named, reproducible experiment pipelines. A scenario names a basis
//! recipe, a ladder of `m` values, an optional growth target and a list of
//! property checks; running it yields a [`ScenarioReport`] whose verdict is
//! PASS exactly when every check passes.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bases::{self, BasisTruncation, Side};
use crate::conditionality::{
    self, block_chain_violation, chain_constant, ladder_csv, lm_estimate,
    lm_oracle, measure_ladder, ConditionalityError, ConstantKind, GrowthFit, GrowthReport,
    GrowthTarget, LadderOptions, LadderPoint, TemplateFamily, Verdict, DEFAULT_SLOPE_BAND,
    ORACLE_GUARD,
};
use crate::greedy::{self, FundamentalMode, GreedyError, SUBSET_GUARD};
use crate::recipe::{Recipe, RecipeError};
use crate::report::line_plot;
use crate::search::{rng_for, stream_id};
use crate::spaces::{self, Block, Exponent, SpaceDesc};
use crate::witness::{Method, Witness, WitnessKind};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const DEFAULT_BUDGET: usize = 64;

/// Random starts per basis vector in the quasi-greedy checks.
pub const QUASI_GREEDY_DENSITY: usize = 4;
/// Vectors drawn by the randomized norm-inequality checks.
pub const RANDOM_VECTORS: usize = 1000;
/// Slack on exact-value comparisons.
pub const VALUE_TOLERANCE: f64 = 1e-9;
/// Slack on norm inequalities and transferred ratios.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Every check identifier a scenario may list.
pub const CHECKS: &[&str] = &[
    "growth-fit",
    "ladder-monotone",
    "witnesses-verify",
    "lb-exactly-one",
    "lb-at-least-m-minus-1",
    "lb-at-least-quarter-m",
    "unit-control-spaces",
    "template-matches-oracle",
    "lb64-over-lb8",
    "fundamental-ratio",
    "quasi-greedy-stability",
    "interleave-transfer",
    "block-chain",
    "block-witness-transfer",
    "block-quasi-greedy",
    "block-fundamental",
    "split-identity",
    "split-distortion",
    "split-canonical",
    "lorentz-retract-lift",
    "lorentz-lift-bv",
    "lorentz-lift-sup",
    "lorentz-retract-l1",
    "lorentz-retract-sup",
];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}`")]
    Unknown(String),
    #[error("duplicate scenario name `{0}`")]
    Duplicate(String),
    #[error("scenario `{name}`: {reason}")]
    Invalid { name: String, reason: String },
    #[error(transparent)]
    Recipe(#[from] RecipeError),
    #[error(transparent)]
    Conditionality(#[from] ConditionalityError),
    #[error("scenario config: {0}")]
    Config(#[from] toml::de::Error),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_kind() -> ConstantKind {
    ConstantKind::L
}

fn default_oracle_through() -> usize {
    ORACLE_GUARD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub recipe: String,
    #[serde(default)]
    pub ladder: Vec<usize>,
    #[serde(default)]
    pub target: Option<GrowthTarget>,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_kind")]
    pub kind: ConstantKind,
    /// Rungs up to this `m` use the exhaustive oracle.
    #[serde(default = "default_oracle_through")]
    pub oracle_through: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    scenario: Vec<Scenario>,
}

impl Scenario {
    fn new(name: &str, recipe: &str, ladder: Vec<usize>, target: Option<GrowthTarget>, checks: &[&str]) -> Self {
        Scenario {
            name: name.into(),
            recipe: recipe.into(),
            ladder,
            target,
            checks: checks.iter().map(|c| c.to_string()).collect(),
            budget: DEFAULT_BUDGET,
            seed: DEFAULT_SEED,
            kind: ConstantKind::L,
            oracle_through: ORACLE_GUARD,
        }
    }

    fn invalid(&self, reason: impl Into<String>) -> ScenarioError {
        ScenarioError::Invalid { name: self.name.clone(), reason: reason.into() }
    }

    /// Checks everything that can be checked without building the basis.
    pub fn validate(&self) -> Result<Recipe, ScenarioError> {
        if self.name.is_empty() {
            return Err(self.invalid("empty name"));
        }
        let recipe: Recipe = self.recipe.parse()?;
        if self.ladder.contains(&0) || self.ladder.windows(2).any(|w| w[0] >= w[1]) {
            return Err(self.invalid("ladder must be strictly increasing positive integers"));
        }
        for c in &self.checks {
            if !CHECKS.contains(&c.as_str()) {
                return Err(self.invalid(format!("unknown check `{c}`")));
            }
        }
        if self.checks.iter().any(|c| c == "growth-fit") && self.target.is_none() {
            return Err(self.invalid("growth-fit needs a target"));
        }
        Ok(recipe)
    }
}

/// The scenarios shipped with the library.
pub fn builtin_scenarios() -> Vec<Scenario> {
    let linear = Some(GrowthTarget::Linear);
    let mut lindenstrauss_log = Scenario::new(
        "lindenstrauss-log",
        "lindenstrauss:64",
        vec![4, 8, 16, 32, 64],
        Some(GrowthTarget::Log),
        &[
            "growth-fit",
            "lb64-over-lb8",
            "quasi-greedy-stability",
            "fundamental-ratio",
            "ladder-monotone",
            "witnesses-verify",
        ],
    );
    lindenstrauss_log.budget = 64;
    let mut blocksum = Scenario::new(
        "blocksum-L1",
        "blocksum(lindenstrauss,dims=2^1..2^6,p=1)",
        vec![6, 14, 30, 62, 126],
        Some(GrowthTarget::Log),
        &[
            "block-chain",
            "block-witness-transfer",
            "block-quasi-greedy",
            "block-fundamental",
            "ladder-monotone",
            "witnesses-verify",
            "growth-fit",
        ],
    );
    blocksum.budget = 16;
    let mut pq_split = Scenario::new(
        "pq-split",
        "pqsplit(difference,dims=2^1..2^4,p=1,q=1)",
        vec![2, 6, 14, 30],
        linear,
        &[
            "split-identity",
            "split-distortion",
            "split-canonical",
            "block-chain",
            "ladder-monotone",
            "witnesses-verify",
            "growth-fit",
        ],
    );
    pq_split.budget = 32;
    vec![
        Scenario::new(
            "unit-control",
            "unit:16:lp:2",
            vec![2, 4, 8, 16],
            None,
            &["lb-exactly-one", "unit-control-spaces", "witnesses-verify"],
        ),
        Scenario::new(
            "summing-linear",
            "summing:10",
            (2..=10).collect(),
            linear,
            &["lb-at-least-quarter-m", "ladder-monotone", "growth-fit", "witnesses-verify"],
        ),
        Scenario::new(
            "difference-linear",
            "difference:10",
            (2..=10).collect(),
            linear,
            &["lb-at-least-m-minus-1", "template-matches-oracle", "growth-fit", "witnesses-verify"],
        ),
        lindenstrauss_log,
        Scenario::new(
            "interleave-transfer",
            "interleave(difference:8,unit:8:lp:2)",
            vec![2, 4, 6, 8, 10, 12, 14, 16],
            linear,
            &["interleave-transfer", "ladder-monotone", "growth-fit", "witnesses-verify"],
        ),
        blocksum,
        pq_split,
        Scenario::new(
            "lorentz-embed",
            "unit:16:bv",
            vec![],
            None,
            &[
                "lorentz-retract-lift",
                "lorentz-lift-bv",
                "lorentz-lift-sup",
                "lorentz-retract-l1",
                "lorentz-retract-sup",
            ],
        ),
    ]
}

pub fn find_builtin(name: &str) -> Result<Scenario, ScenarioError> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| ScenarioError::Unknown(name.into()))
}

/// Parses a TOML document of `[[scenario]]` tables.
pub fn parse_config(text: &str) -> Result<Vec<Scenario>, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text)?;
    let mut names = BTreeSet::new();
    for s in &file.scenario {
        s.validate()?;
        if !names.insert(s.name.clone()) {
            return Err(ScenarioError::Duplicate(s.name.clone()));
        }
    }
    Ok(file.scenario)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl CheckResult {
    fn new(check: &str, ok: bool, detail: String) -> Self {
        CheckResult { check: check.into(), verdict: Verdict::from_bool(ok), detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub recipe: String,
    pub basis: String,
    pub seed: u64,
    pub budget: usize,
    pub kind: ConstantKind,
    pub target: Option<GrowthTarget>,
    /// Every rung with the witness that certifies it.
    pub points: Vec<LadderPoint>,
    pub fit: Option<GrowthFit>,
    pub checks: Vec<CheckResult>,
    pub verdict: Verdict,
}

impl ScenarioReport {
    /// `m,lb,method,delta_m`.
    pub fn ladder_csv(&self) -> String {
        ladder_csv(&self.points)
    }

    /// `check,verdict,detail`.
    pub fn checks_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(["check", "verdict", "detail"]).expect("in-memory csv");
        for c in &self.checks {
            w.write_record([c.check.as_str(), c.verdict.as_str(), c.detail.as_str()])
                .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn plot(&self) -> String {
        let pts: Vec<(f64, f64)> = self.points.iter().map(|p| (p.m as f64, p.lb)).collect();
        line_plot(&self.name, "m", "lower bound", &pts)
    }
}

/// Shared inputs of the checks.
struct Context<'a> {
    scenario: &'a Scenario,
    recipe: &'a Recipe,
    basis: &'a BasisTruncation,
    points: &'a [LadderPoint],
    growth: Option<&'a GrowthReport>,
    options: &'a LadderOptions,
}

type CheckOutcome = Result<(bool, String), String>;

/// Builds the basis, measures the ladder and evaluates every check.
pub fn run(scenario: &Scenario) -> Result<ScenarioReport, ScenarioError> {
    let recipe = scenario.validate()?;
    let basis = recipe.build()?;
    if let Some(&m) = scenario.ladder.iter().find(|&&m| m > basis.d()) {
        return Err(scenario.invalid(format!("rung {m} exceeds the basis size {}", basis.d())));
    }
    let mut templates = TemplateFamily::standard();
    let transferred = transfer_templates(&recipe, &basis, scenario);
    if !transferred.is_empty() {
        templates.push(TemplateFamily::Explicit(transferred));
    }
    let options = LadderOptions {
        oracle_through: scenario.oracle_through,
        budget: scenario.budget,
        seed: scenario.seed,
        templates,
        ..LadderOptions::default()
    };
    let target = scenario.target.unwrap_or(GrowthTarget::Linear);
    let points = measure_ladder(&basis, scenario.kind, &scenario.ladder, target, &options)?;
    let growth = scenario
        .target
        .map(|t| GrowthReport::new(basis.label(), t, points.clone(), DEFAULT_SLOPE_BAND));
    let ctx = Context {
        scenario,
        recipe: &recipe,
        basis: &basis,
        points: &points,
        growth: growth.as_ref(),
        options: &options,
    };
    let checks: Vec<CheckResult> = scenario
        .checks
        .iter()
        .map(|id| {
            let (ok, detail) = match run_check(id, &ctx) {
                Ok(r) => r,
                Err(e) => (false, e),
            };
            CheckResult::new(id, ok, detail)
        })
        .collect();
    let verdict = Verdict::from_bool(checks.iter().all(|c| c.verdict == Verdict::Pass));
    Ok(ScenarioReport {
        name: scenario.name.clone(),
        recipe: scenario.recipe.clone(),
        basis: basis.label().into(),
        seed: scenario.seed,
        budget: scenario.budget,
        kind: scenario.kind,
        target: scenario.target,
        points,
        fit: growth.and_then(|g| g.fit),
        checks,
        verdict,
    })
}

fn run_check(id: &str, ctx: &Context) -> CheckOutcome {
    match id {
        "growth-fit" => growth_fit_check(ctx),
        "ladder-monotone" => ladder_monotone(ctx),
        "witnesses-verify" => witnesses_verify(ctx),
        "lb-exactly-one" => rung_bound(ctx, "|LB - 1| <= 1e-9", |_, lb| (lb - 1.0).abs() <= VALUE_TOLERANCE),
        "lb-at-least-m-minus-1" => {
            rung_bound(ctx, "LB >= m - 1", |m, lb| lb + VALUE_TOLERANCE >= m as f64 - 1.0)
        }
        "lb-at-least-quarter-m" => {
            rung_bound(ctx, "LB >= m/4", |m, lb| lb + VALUE_TOLERANCE >= m as f64 / 4.0)
        }
        "unit-control-spaces" => unit_control_spaces(ctx),
        "template-matches-oracle" => template_matches_oracle(ctx),
        "lb64-over-lb8" => lb64_over_lb8(ctx),
        "fundamental-ratio" => fundamental_ratio(ctx),
        "quasi-greedy-stability" => quasi_greedy_stability(ctx),
        "interleave-transfer" => interleave_transfer(ctx),
        "block-chain" => block_chain(ctx),
        "block-witness-transfer" => block_witness_transfer(ctx),
        "block-quasi-greedy" => block_quasi_greedy(ctx),
        "block-fundamental" => block_fundamental(ctx),
        "split-identity" => split_identity(ctx),
        "split-distortion" => split_distortion(ctx),
        "split-canonical" => split_canonical(ctx),
        "lorentz-retract-lift" => lorentz_check(ctx, LorentzProperty::RetractLift),
        "lorentz-lift-bv" => lorentz_check(ctx, LorentzProperty::LiftBv),
        "lorentz-lift-sup" => lorentz_check(ctx, LorentzProperty::LiftSup),
        "lorentz-retract-l1" => lorentz_check(ctx, LorentzProperty::RetractL1),
        "lorentz-retract-sup" => lorentz_check(ctx, LorentzProperty::RetractSup),
        other => Err(format!("unknown check `{other}`")),
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

fn ladder_value(ctx: &Context, m: usize) -> Option<f64> {
    ctx.points.iter().find(|p| p.m == m).map(|p| p.lb)
}

fn growth_fit_check(ctx: &Context) -> CheckOutcome {
    let g = ctx.growth.ok_or("no growth target")?;
    let Some(fit) = g.fit else {
        return Ok((false, "ladder too short to fit".into()));
    };
    let r2 = fit.r_squared.map_or("undefined".into(), fmt_f);
    Ok((
        g.verdict == Verdict::Pass,
        format!(
            "target={} slope={} intercept={} R2={} band=[{},{}] min R2={} doubling={}",
            g.target,
            fmt_f(fit.slope),
            fmt_f(fit.intercept),
            r2,
            fit.band.0,
            fit.band.1,
            conditionality::MIN_R_SQUARED,
            g.target_doubling
        ),
    ))
}

fn ladder_monotone(ctx: &Context) -> CheckOutcome {
    let bad = ctx.points.windows(2).find(|w| w[1].lb < w[0].lb);
    Ok(match bad {
        None => (true, format!("{} rungs non-decreasing", ctx.points.len())),
        Some(w) => (false, format!("LB_{} = {} > LB_{} = {}", w[0].m, w[0].lb, w[1].m, w[1].lb)),
    })
}

fn witnesses_verify(ctx: &Context) -> CheckOutcome {
    for p in ctx.points {
        let w = &p.witness;
        let admissible = match ctx.scenario.kind {
            ConstantKind::L => w.support_end() <= p.m && w.set.iter().all(|&j| j < p.m),
            ConstantKind::K => w.set.len() <= p.m,
        };
        if !admissible {
            return Ok((false, format!("witness at m={} violates its support constraint", p.m)));
        }
        if !w.verify(ctx.basis) || w.ratio != p.lb {
            return Ok((false, format!("witness at m={} does not reproduce {}", p.m, p.lb)));
        }
    }
    Ok((true, format!("{} witnesses re-evaluated", ctx.points.len())))
}

fn rung_bound(ctx: &Context, rule: &str, ok: impl Fn(usize, f64) -> bool) -> CheckOutcome {
    if ctx.points.is_empty() {
        return Err("empty ladder".into());
    }
    Ok(match ctx.points.iter().find(|p| !ok(p.m, p.lb)) {
        None => (true, format!("{rule} at {} rungs", ctx.points.len())),
        Some(p) => (false, format!("{rule} fails at m={}: LB={}", p.m, p.lb)),
    })
}

fn unit_control_spaces(ctx: &Context) -> CheckOutcome {
    let d = ctx.scenario.ladder.iter().copied().max().ok_or("empty ladder")?;
    let mut parts = Vec::new();
    let mut ok = true;
    for space in [SpaceDesc::lp(1.0), SpaceDesc::lp(2.0), SpaceDesc::linf()] {
        let b = bases::unit_vector_system(d, space.clone()).map_err(|e| e.to_string())?;
        let pts = measure_ladder(&b, ConstantKind::L, &ctx.scenario.ladder, GrowthTarget::Linear, ctx.options)
            .map_err(|e| e.to_string())?;
        let worst = pts.iter().map(|p| (p.lb - 1.0).abs()).fold(0.0f64, f64::max);
        ok &= worst <= VALUE_TOLERANCE;
        parts.push(format!("{space}: max |LB-1| = {worst:e}"));
    }
    Ok((ok, parts.join("; ")))
}

fn template_matches_oracle(ctx: &Context) -> CheckOutcome {
    let mut compared = 0;
    let mut worst = 0.0f64;
    for &m in ctx.scenario.ladder.iter().filter(|&&m| m <= ORACLE_GUARD) {
        let (oracle, _) = lm_oracle(ctx.basis, m).map_err(|e| e.to_string())?;
        let (template, _) = lm_estimate(ctx.basis, m, 0, ctx.scenario.seed, &TemplateFamily::standard())
            .map_err(|e| e.to_string())?;
        worst = worst.max((template - oracle).abs());
        compared += 1;
    }
    if compared == 0 {
        return Err("no rung within the oracle guard".into());
    }
    Ok((worst <= VALUE_TOLERANCE, format!("{compared} rungs, max |template - oracle| = {worst:e}")))
}

fn lb64_over_lb8(ctx: &Context) -> CheckOutcome {
    let (lb8, lb64) = (
        ladder_value(ctx, 8).ok_or("ladder lacks m=8")?,
        ladder_value(ctx, 64).ok_or("ladder lacks m=64")?,
    );
    let ratio = lb64 / lb8;
    Ok((ratio <= 4.0, format!("LB_64/LB_8 = {} (bound 4)", fmt_f(ratio))))
}

/// `φ_m/m ∈ [1/2, 2]` for `m ≤ 12` by exact subset enumeration.
fn fundamental_ratio(ctx: &Context) -> CheckOutcome {
    let t = ctx.basis.truncate(ctx.basis.d().min(SUBSET_GUARD)).map_err(|e| e.to_string())?;
    let profile = greedy::subset_norm_profile(&t).map_err(|e: GreedyError| e.to_string())?;
    let top = 12.min(t.d());
    let ratios: Vec<f64> = (1..=top).map(|m| profile.upper[m] / m as f64).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    Ok((
        lo >= 0.5 && hi <= 2.0,
        format!("phi_m/m over m=1..{top} on d={}: min {} max {}", t.d(), fmt_f(lo), fmt_f(hi)),
    ))
}

fn quasi_greedy_stability(ctx: &Context) -> CheckOutcome {
    let mut values = Vec::new();
    for d in [8, 16, 32, 64] {
        let recipe = ctx.recipe.resized(d).ok_or("recipe has no size parameter")?;
        let b = recipe.build().map_err(|e| e.to_string())?;
        let (v, w) = greedy::quasi_greedy_constant_lb(&b, QUASI_GREEDY_DENSITY * d, ctx.scenario.seed)
            .map_err(|e| e.to_string())?;
        if !w.verify(&b) {
            return Ok((false, format!("quasi-greedy witness at d={d} does not re-verify")));
        }
        values.push((d, v));
    }
    let at_least_one = values.iter().all(|&(_, v)| v >= 1.0 - NORM_TOLERANCE);
    let (v16, v64) = (values[1].1, values[3].1);
    let listed: Vec<String> = values.iter().map(|(d, v)| format!("d={d}: {}", fmt_f(*v))).collect();
    Ok((
        at_least_one && v64 <= 1.5 * v16,
        format!("{}; value(64)/value(16) = {} (bound 1.5)", listed.join(", "), fmt_f(v64 / v16)),
    ))
}

/// Places a witness of the first summand of an interleave onto its positions.
fn transfer_to_interleave(w: &Witness, d0: usize, d1: usize, n: usize) -> (Vec<f64>, Vec<usize>) {
    let mut coeffs = vec![0.0; n];
    for (j, &a) in w.coeffs.iter().enumerate() {
        coeffs[bases::interleave_index(Side::First, j, d0, d1)] = a;
    }
    let set = w.set.iter().map(|&j| bases::interleave_index(Side::First, j, d0, d1)).collect();
    (coeffs, set)
}

/// Places a witness of a block's base truncation into block `r`.
fn transfer_to_block(w: &Witness, dims: &[usize], r: usize, n: usize) -> (Vec<f64>, Vec<usize>) {
    let offset = bases::block_offset(dims, r);
    let mut coeffs = vec![0.0; n];
    coeffs[offset..offset + w.coeffs.len()].copy_from_slice(&w.coeffs);
    (coeffs, w.set.iter().map(|&j| j + offset).collect())
}

/// Oracle witness on the first summand at every `m ≤ min(d0, guard)`.
fn summand_witnesses(first: &BasisTruncation) -> Result<Vec<Witness>, ConditionalityError> {
    (1..=first.d().min(ORACLE_GUARD)).map(|m| lm_oracle(first, m).map(|(_, w)| w)).collect()
}

/// One witness per block: the oracle when the block fits the guard, the
/// template estimate otherwise.
fn block_witnesses(
    base: &BasisTruncation,
    dims: &[usize],
    budget: usize,
    seed: u64,
) -> Result<Vec<(BasisTruncation, Witness)>, String> {
    dims.iter()
        .map(|&dn| {
            let t = base.truncate(dn).map_err(|e| e.to_string())?;
            let (_, w) = if dn <= ORACLE_GUARD {
                lm_oracle(&t, dn)
            } else {
                lm_estimate(&t, dn, budget, seed, &TemplateFamily::standard())
            }
            .map_err(|e| e.to_string())?;
            Ok((t, w))
        })
        .collect()
}

/// Witnesses carried over from the summands of a combined basis.
fn transfer_templates(recipe: &Recipe, basis: &BasisTruncation, scenario: &Scenario) -> Vec<Witness> {
    let n = basis.d();
    let wrap = |(coeffs, set): (Vec<f64>, Vec<usize>)| {
        Witness::evaluate(basis, coeffs, set, WitnessKind::Conditionality, Method::Transfer)
    };
    match recipe {
        Recipe::Interleave(a, b) => {
            let (Ok(first), Ok(second)) = (a.build(), b.build()) else {
                return Vec::new();
            };
            summand_witnesses(&first)
                .unwrap_or_default()
                .iter()
                .map(|w| wrap(transfer_to_interleave(w, first.d(), second.d(), n)))
                .collect()
        }
        Recipe::BlockSum { base, dims, .. } | Recipe::PqSplit { base, dims, .. } => {
            let max = dims.iter().copied().max().unwrap_or(1);
            let Ok(base) = base.build_with(Some(max)) else {
                return Vec::new();
            };
            // Whole-block witnesses, plus oracle witnesses of every smaller
            // size placed at the start of each block that can hold them.
            let whole = block_witnesses(&base, dims, scenario.budget, scenario.seed).unwrap_or_default();
            let partial = summand_witnesses(&base).unwrap_or_default();
            let mut out: Vec<Witness> = whole
                .iter()
                .enumerate()
                .map(|(r, (_, w))| wrap(transfer_to_block(w, dims, r, n)))
                .collect();
            for (r, &dn) in dims.iter().enumerate() {
                for w in partial.iter().filter(|w| w.coeffs.len() <= dn) {
                    out.push(wrap(transfer_to_block(w, dims, r, n)));
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn interleave_transfer(ctx: &Context) -> CheckOutcome {
    let Recipe::Interleave(a, b) = ctx.recipe else {
        return Err("recipe is not an interleave".into());
    };
    let first = a.build().map_err(|e| e.to_string())?;
    let second = b.build().map_err(|e| e.to_string())?;
    let witnesses = summand_witnesses(&first).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for w in &witnesses {
        let (coeffs, set) = transfer_to_interleave(w, first.d(), second.d(), ctx.basis.d());
        let moved = Witness::evaluate(ctx.basis, coeffs, set, WitnessKind::Conditionality, Method::Transfer);
        worst = worst.max(relative_gap(moved.ratio, w.ratio));
    }
    let exact = worst <= NORM_TOLERANCE;
    let mut dominated = 0;
    let mut failure = None;
    for p in ctx.points.iter().filter(|p| p.m % 2 == 0 && p.m / 2 <= witnesses.len()) {
        let base = witnesses[p.m / 2 - 1].ratio;
        if p.lb < base * (1.0 - NORM_TOLERANCE) {
            failure.get_or_insert(format!("LB_{} = {} < {}", p.m, p.lb, base));
        }
        dominated += 1;
    }
    let detail = format!(
        "{} transferred witnesses, max relative gap {worst:e}; LB_2m >= LB_m at {dominated} rungs{}",
        witnesses.len(),
        failure.as_ref().map_or(String::new(), |f| format!(" ({f})"))
    );
    Ok((exact && failure.is_none(), detail))
}

fn recipe_dims(recipe: &Recipe) -> Option<&[usize]> {
    match recipe {
        Recipe::BlockSum { dims, .. } | Recipe::PqSplit { dims, .. } => Some(dims),
        _ => None,
    }
}

/// `m ≤ C₄ d_r` for every `m ≤ Σ d_n`, with `C₂ = C₃ = 1` for coordinate
/// maps and `D` the largest ratio of consecutive block sizes.
fn block_chain(ctx: &Context) -> CheckOutcome {
    let dims = recipe_dims(ctx.recipe).ok_or("recipe has no block ladder")?;
    let growth = dims.windows(2).map(|w| w[1] as f64 / w[0] as f64).fold(0.0f64, f64::max);
    if dims.len() < 2 || growth <= 1.0 {
        return Err("block sizes must grow".into());
    }
    let c4 = chain_constant(1.0, 1.0, growth);
    let total: usize = dims.iter().sum();
    Ok(match block_chain_violation(dims, c4) {
        None => (true, format!("m <= {c4}*d_r for all m <= {total} (D = {growth})")),
        Some(p) => (false, format!("m = {} exceeds {c4}*d_r = {}", p.m, c4 * p.d_r as f64)),
    })
}

fn block_witness_transfer(ctx: &Context) -> CheckOutcome {
    let Recipe::BlockSum { base, dims, .. } = ctx.recipe else {
        return Err("recipe is not a block sum".into());
    };
    let max = dims.iter().copied().max().unwrap_or(1);
    let base = base.build_with(Some(max)).map_err(|e| e.to_string())?;
    let found = block_witnesses(&base, dims, ctx.scenario.budget, ctx.scenario.seed)?;
    let mut mismatches = Vec::new();
    for (r, (t, w)) in found.iter().enumerate() {
        let (coeffs, set) = transfer_to_block(w, dims, r, ctx.basis.d());
        let moved = Witness::evaluate(ctx.basis, coeffs, set, WitnessKind::Conditionality, Method::Transfer);
        if moved.ratio != w.ratio || !w.verify(t) {
            mismatches.push(format!("block {r}: {} vs {}", moved.ratio, w.ratio));
        }
    }
    let ratios: Vec<String> = found.iter().map(|(_, w)| fmt_f(w.ratio)).collect();
    Ok(if mismatches.is_empty() {
        (true, format!("{} blocks reproduce ratios [{}] exactly", found.len(), ratios.join(", ")))
    } else {
        (false, mismatches.join("; "))
    })
}

fn block_quasi_greedy(ctx: &Context) -> CheckOutcome {
    let Recipe::BlockSum { base, dims, .. } = ctx.recipe else {
        return Err("recipe is not a block sum".into());
    };
    let max = dims.iter().copied().max().unwrap_or(1);
    let base = base.build_with(Some(max)).map_err(|e| e.to_string())?;
    let budget = QUASI_GREEDY_DENSITY * max;
    let seed = ctx.scenario.seed;
    let (sum_value, _) = greedy::quasi_greedy_constant_lb(ctx.basis, budget, seed).map_err(|e| e.to_string())?;
    let (base_value, _) = greedy::quasi_greedy_constant_lb(&base, budget, seed).map_err(|e| e.to_string())?;
    Ok((
        sum_value <= 1.1 * base_value,
        format!(
            "block sum {} vs base at d={max} {} (ratio {}, bound 1.1, budget {budget})",
            fmt_f(sum_value),
            fmt_f(base_value),
            fmt_f(sum_value / base_value)
        ),
    ))
}

/// `φ_m/m ∈ [1/2, 2]` at dyadic `m` by subset search.
fn block_fundamental(ctx: &Context) -> CheckOutcome {
    let d = ctx.basis.d();
    let budget = ctx.scenario.budget.max(1);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut m = 1;
    while m <= d {
        let phi = greedy::fundamental_function(ctx.basis, m, FundamentalMode::Search, budget, ctx.scenario.seed)
            .map_err(|e| e.to_string())?;
        lo = lo.min(phi / m as f64);
        hi = hi.max(phi / m as f64);
        m *= 2;
    }
    Ok((lo >= 0.5 && hi <= 2.0, format!("phi_m/m at m = 1, 2, 4, ... <= {d}: min {} max {}", fmt_f(lo), fmt_f(hi))))
}

/// The identity split must coincide with a block sum assembled directly.
fn split_identity(ctx: &Context) -> CheckOutcome {
    let Recipe::PqSplit { base, dims, p, .. } = ctx.recipe else {
        return Err("recipe is not a split".into());
    };
    let max = dims.iter().copied().max().unwrap_or(1);
    let base = base.build_with(Some(max)).map_err(|e| e.to_string())?;
    let blocks = dims
        .iter()
        .map(|&dn| {
            let t = base.truncate(dn)?;
            Ok((dn, bases::BlockMapPair::identity(t.ambient_dim(), t.space().clone())))
        })
        .collect::<Result<Vec<_>, bases::BasisError>>()
        .map_err(|e| e.to_string())?;
    let via_maps = bases::pq_block_sum(&base, &blocks, *p, Exponent::Inf).map_err(|e| e.to_string())?;
    let truncs: Vec<BasisTruncation> =
        dims.iter().map(|&dn| base.truncate(dn)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let n: usize = truncs.iter().map(|t| t.ambient_dim()).sum();
    let mut columns = Vec::new();
    let mut offset = 0;
    for t in &truncs {
        for c in t.columns() {
            let mut v = vec![0.0; n];
            v[offset..offset + c.len()].copy_from_slice(c);
            columns.push(v);
        }
        offset += t.ambient_dim();
    }
    let space = SpaceDesc::MixedSum {
        outer: *p,
        blocks: truncs.iter().map(|t| Block::new(t.space().clone(), t.ambient_dim())).collect(),
    };
    let same = via_maps.columns() == columns.as_slice() && via_maps.space() == &space;
    Ok((same, format!("identity maps over {} blocks {} the direct block sum", dims.len(), if same { "reproduce" } else { "differ from" })))
}

/// Norm ratio between the split basis and the unsplit block sum on random
/// coefficient vectors; splitting a block in two costs at most a factor 2.
fn split_distortion(ctx: &Context) -> CheckOutcome {
    let Recipe::PqSplit { base, dims, p, .. } = ctx.recipe else {
        return Err("recipe is not a split".into());
    };
    let max = dims.iter().copied().max().unwrap_or(1);
    let base = base.build_with(Some(max)).map_err(|e| e.to_string())?;
    let plain = bases::block_sum(&base, dims, *p).map_err(|e| e.to_string())?;
    let d = ctx.basis.d();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for idx in 0..RANDOM_VECTORS as u64 {
        let mut rng = rng_for(ctx.scenario.seed, stream_id(d, idx));
        let a: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = plain.norm(&plain.synthesize(&a)) / ctx.basis.norm(&ctx.basis.synthesize(&a));
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((
        lo >= 1.0 - NORM_TOLERANCE && hi <= 2.0 + NORM_TOLERANCE,
        format!("unsplit/split norm ratio over {RANDOM_VECTORS} vectors in [{}, {}] (bounds [1, 2])", fmt_f(lo), fmt_f(hi)),
    ))
}

fn split_canonical(_ctx: &Context) -> CheckOutcome {
    let n_max = 5;
    let b = bases::canonical_split_instance(n_max, Exponent::Finite(2.0)).map_err(|e| e.to_string())?;
    let expected: usize = (2..=n_max).map(|n| (1usize << n) - 2).sum();
    let unit = (0..b.d()).all(|j| (b.norm(b.column(j)) - 1.0).abs() <= NORM_TOLERANCE);
    Ok((
        b.d() == expected && unit,
        format!("{}: {} vectors (expected {expected}), unit norms {}", b.label(), b.d(), unit),
    ))
}

#[derive(Debug, Clone, Copy)]
enum LorentzProperty {
    RetractLift,
    LiftBv,
    LiftSup,
    RetractL1,
    RetractSup,
}

fn lorentz_check(ctx: &Context, prop: LorentzProperty) -> CheckOutcome {
    let l1 = |v: &[f64]| spaces::norm(&SpaceDesc::lp(1.0), v).expect("finite vector");
    let sup = |v: &[f64]| spaces::norm(&SpaceDesc::linf(), v).expect("finite vector");
    let bv = |v: &[f64]| spaces::norm(&SpaceDesc::Bv, v).expect("finite vector");
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for idx in 0..RANDOM_VECTORS as u64 {
        let mut rng = rng_for(ctx.scenario.seed, stream_id(0, idx));
        // Retraction pairs coordinates, so its inputs have even length.
        let n = match prop {
            LorentzProperty::RetractL1 | LorentzProperty::RetractSup => 2 * rng.gen_range(1..=16),
            _ => rng.gen_range(1..=32),
        };
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // Excess of the left side over the right side of each inequality.
        let excess = match prop {
            LorentzProperty::RetractLift => {
                let back = bases::lorentz_retract(&bases::lorentz_lift(&f));
                ok &= back == f;
                back.iter().zip(&f).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max)
            }
            LorentzProperty::LiftBv => bv(&bases::lorentz_lift(&f)) - l1(&f),
            LorentzProperty::LiftSup => sup(&bases::lorentz_lift(&f)) - sup(&f),
            LorentzProperty::RetractL1 => l1(&bases::lorentz_retract(&f)) - bv(&f),
            LorentzProperty::RetractSup => sup(&bases::lorentz_retract(&f)) - 2.0 * sup(&f),
        };
        worst = worst.max(excess);
    }
    let (rule, holds) = match prop {
        LorentzProperty::RetractLift => ("retract(lift f) = f", ok),
        LorentzProperty::LiftBv => ("|lift f|_bv <= |f|_1 + 1e-12", worst <= NORM_TOLERANCE),
        LorentzProperty::LiftSup => ("|lift f|_inf <= |f|_inf", worst <= 0.0),
        LorentzProperty::RetractL1 => ("|retract f|_1 <= |f|_bv + 1e-12", worst <= NORM_TOLERANCE),
        LorentzProperty::RetractSup => ("|retract f|_inf <= 2|f|_inf + 1e-12", worst <= NORM_TOLERANCE),
    };
    Ok((holds, format!("{rule} over {RANDOM_VECTORS} vectors; max excess {}", fmt_f(worst))))
}

/// Files written by [`write_bundle`], relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub recipe: String,
    pub seed: u64,
    pub budget: usize,
    pub verdict: Verdict,
    pub files: Vec<String>,
    /// Seconds since the Unix epoch; omitted for byte-stable output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), ScenarioError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| ScenarioError::Io { path, source })
}

/// Writes `<name>.csv`, `<name>-checks.csv`, `<name>.json`, `<name>.svg`
/// and `manifest.json` into `dir`.
pub fn write_bundle(report: &ScenarioReport, dir: &Path, timestamp: bool) -> Result<Manifest, ScenarioError> {
    std::fs::create_dir_all(dir).map_err(|source| ScenarioError::Io { path: dir.into(), source })?;
    let name = &report.name;
    let files = vec![
        format!("{name}.csv"),
        format!("{name}-checks.csv"),
        format!("{name}.json"),
        format!("{name}.svg"),
    ];
    write_file(dir, &files[0], &report.ladder_csv())?;
    write_file(dir, &files[1], &report.checks_csv())?;
    write_file(dir, &files[2], &(report.to_json() + "\n"))?;
    write_file(dir, &files[3], &report.plot())?;
    let generated_at = timestamp.then(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs())
    });
    let manifest = Manifest {
        scenario: name.clone(),
        recipe: report.recipe.clone(),
        seed: report.seed,
        budget: report.budget,
        verdict: report.verdict,
        files,
        generated_at,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifests serialize") + "\n";
    write_file(dir, "manifest.json", &text)?;
    Ok(manifest)
}
