//! Thresholding-greedy machinery: greedy sets, coordinate projections and
//! lower-bound estimators for the quasi-greedy constant, the almost-greedy
//! constant, the fundamental function and the democracy ratio.
//!
//! All values are measured on a finite truncation, so they are lower bounds
//! for the constants of the infinite basis the truncation comes from.
//!
//! Up to [`GRID_GUARD`] basis vectors the estimators sweep the full
//! `{-1, 0, 1}` grid and every greedy set. Since all nonzero grid
//! coefficients tie, every subset of the support is a greedy set there.
//! Beyond the guard they fall back to seeded random magnitudes.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::bases::BasisTruncation;
use crate::search::{gray_walk, grid_point, grid_size, mask_to_set, rng_for, stream_id, IMPROVEMENT};
use crate::witness::{Method, Witness, WitnessKind, ZERO_NORM};

/// Largest dimension swept exhaustively by the greedy-constant estimators.
pub const GRID_GUARD: usize = 12;
/// Largest dimension for exact subset enumeration of `‖Σ_{j∈A} x_j‖`.
pub const SUBSET_GUARD: usize = 20;
/// Sweep cap of the magnitude ascent used above [`GRID_GUARD`].
const QUASI_GREEDY_SWEEPS: usize = 4;

#[derive(Debug, Error, PartialEq)]
pub enum GreedyError {
    #[error("index {index} out of range for {d} basis vectors")]
    IndexOutOfRange { index: usize, d: usize },
    #[error("coefficient vector has length {got}, basis has {d} vectors")]
    CoefficientLength { got: usize, d: usize },
    #[error("m = {m} exceeds {d}")]
    SizeOutOfRange { m: usize, d: usize },
    #[error("budget must be at least 1")]
    EmptyBudget,
    #[error("exact enumeration limited to d <= {guard}, got {d}")]
    OverGuard { d: usize, guard: usize },
}

/// `S_A f = Σ_{j∈A} a_j x_j`.
pub fn project(b: &BasisTruncation, a: &[f64], set: &[usize]) -> Result<Vec<f64>, GreedyError> {
    if a.len() > b.d() {
        return Err(GreedyError::CoefficientLength { got: a.len(), d: b.d() });
    }
    if let Some(&index) = set.iter().find(|&&j| j >= b.d()) {
        return Err(GreedyError::IndexOutOfRange { index, d: b.d() });
    }
    let mut out = vec![0.0; b.ambient_dim()];
    for &j in set {
        if let Some(&x) = a.get(j) {
            if x != 0.0 {
                b.add_column(j, x, &mut out);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyMode {
    Canonical,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedySetFamily {
    pub coeffs: Vec<f64>,
    pub m: usize,
    /// Lowest-index tie-break.
    pub canonical: Vec<usize>,
    /// Every greedy set of size `m` (only the canonical one in canonical mode).
    pub all_sets: Vec<Vec<usize>>,
}

/// `min_{k∈A} |a_k| ≥ max_{j∉A} |a_j|`.
pub fn is_greedy_set(a: &[f64], set: &[usize]) -> bool {
    let mut inside = vec![false; a.len()];
    for &j in set {
        inside[j] = true;
    }
    let lo = set.iter().map(|&k| a[k].abs()).fold(f64::INFINITY, f64::min);
    let hi = (0..a.len()).filter(|&j| !inside[j]).map(|j| a[j].abs()).fold(0.0f64, f64::max);
    set.is_empty() || lo >= hi
}

/// Indices sorted by decreasing magnitude, ties by increasing index.
pub(crate) fn greedy_order(a: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[j].abs().total_cmp(&a[i].abs()).then(i.cmp(&j)));
    order
}

pub fn greedy_sets(a: &[f64], m: usize, mode: GreedyMode) -> Result<GreedySetFamily, GreedyError> {
    if m > a.len() {
        return Err(GreedyError::SizeOutOfRange { m, d: a.len() });
    }
    let order = greedy_order(a);
    let mut canonical = order[..m].to_vec();
    canonical.sort_unstable();
    let all_sets = match mode {
        GreedyMode::Canonical => vec![canonical.clone()],
        GreedyMode::All if m == 0 => vec![vec![]],
        GreedyMode::All => {
            let threshold = a[order[m - 1]].abs();
            let forced: Vec<usize> = order.iter().copied().filter(|&j| a[j].abs() > threshold).collect();
            let tied: Vec<usize> = order.iter().copied().filter(|&j| a[j].abs() == threshold).collect();
            let mut sets = Vec::new();
            for pick in combinations(&tied, m - forced.len()) {
                let mut s: Vec<usize> = forced.iter().copied().chain(pick).collect();
                s.sort_unstable();
                sets.push(s);
            }
            sets.sort();
            sets
        }
    };
    Ok(GreedySetFamily { coeffs: a.to_vec(), m, canonical, all_sets })
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::new(), &mut out);
    out
}

fn residual_norm(b: &BasisTruncation, f: &[f64], g: &[f64], buf: &mut [f64]) -> f64 {
    for ((r, x), y) in buf.iter_mut().zip(f).zip(g) {
        *r = x - y;
    }
    b.norm(buf)
}

/// Result of one grid point or random start, ordered by (value desc, key asc).
struct Candidate {
    value: f64,
    key: u64,
    witness: Witness,
}

fn pick(x: Option<Candidate>, y: Option<Candidate>) -> Option<Candidate> {
    match (x, y) {
        (Some(x), Some(y)) => {
            if y.value > x.value || (y.value == x.value && y.key < x.key) {
                Some(y)
            } else {
                Some(x)
            }
        }
        (x, None) => x,
        (None, y) => y,
    }
}

/// Lower bound for `sup ‖f - S_A f‖ / ‖f‖` over greedy sets `A`.
///
/// For `d ≤ GRID_GUARD` this is the exact maximum over the sign grid and
/// every greedy set, and `budget` is not used. Otherwise `budget` random
/// starts are refined by multiplicative moves `{1/2, 2, -1}` against the
/// canonical greedy sets of every size.
pub fn quasi_greedy_constant_lb(
    b: &BasisTruncation,
    budget: usize,
    seed: u64,
) -> Result<(f64, Witness), GreedyError> {
    if budget == 0 {
        return Err(GreedyError::EmptyBudget);
    }
    let d = b.d();
    let best = if d <= GRID_GUARD {
        quasi_greedy_grid(b)
    } else {
        (0..budget as u64)
            .into_par_iter()
            .map(|idx| {
                let mut rng = rng_for(seed, stream_id(d, idx));
                let a = random_magnitudes(&mut rng, d);
                let (value, a, set) = quasi_greedy_ascent(b, a);
                let witness = Witness::evaluate(b, a, set, WitnessKind::QuasiGreedy, Method::Random);
                Some(Candidate { value, key: idx, witness })
            })
            .reduce(|| None, pick)
    };
    // A = ∅ always gives ratio 1.
    let fallback = Witness::evaluate(b, unit_coeffs(d, 0), vec![], WitnessKind::QuasiGreedy, Method::Grid);
    let w = match best {
        Some(c) if c.witness.ratio > fallback.ratio => c.witness,
        _ => fallback,
    };
    Ok((w.ratio, w))
}

fn unit_coeffs(d: usize, j: usize) -> Vec<f64> {
    let mut a = vec![0.0; d];
    a[j] = 1.0;
    a
}

fn random_magnitudes(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d)
        .map(|_| {
            if rng.gen_range(0..5) == 0 {
                0.0
            } else {
                let mag: f64 = rng.gen_range(0.05..=1.0);
                if rng.gen_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            }
        })
        .collect()
}

fn quasi_greedy_grid(b: &BasisTruncation) -> Option<Candidate> {
    let d = b.d();
    let n = b.ambient_dim();
    (0..grid_size(d).expect("guarded"))
        .into_par_iter()
        .map_init(
            || (vec![0.0; d], vec![0.0; n], vec![0.0; n], vec![0.0; n]),
            |(a, f, g, buf), index| {
                if !grid_point(index, a) {
                    return None;
                }
                b.synthesize_into(a, f);
                let den = b.norm(f);
                if den < ZERO_NORM {
                    return None;
                }
                let support: Vec<usize> = (0..d).filter(|&j| a[j] != 0.0).collect();
                let (mut value, mut mask) = (0.0, 0u64);
                gray_walk(b, a, &support, g, |m, _, g| {
                    let r = residual_norm(b, f, g, buf) / den;
                    if r > value {
                        value = r;
                        mask = m;
                    }
                });
                let witness = Witness::evaluate(
                    b,
                    a.clone(),
                    mask_to_set(mask),
                    WitnessKind::QuasiGreedy,
                    Method::Grid,
                );
                Some(Candidate { value, key: index, witness })
            },
        )
        .reduce(|| None, pick)
}

/// `max_k ‖f - S_{G_k} f‖ / ‖f‖` over canonical greedy sets `G_k`, with
/// the maximizing set.
fn quasi_greedy_value(b: &BasisTruncation, a: &[f64], f: &mut [f64], g: &mut [f64], buf: &mut [f64]) -> (f64, usize) {
    b.synthesize_into(a, f);
    let den = b.norm(f);
    if den < ZERO_NORM {
        return (0.0, 0);
    }
    g.fill(0.0);
    let (mut best, mut best_k) = (1.0, 0);
    for (k, j) in greedy_order(a).into_iter().enumerate() {
        if a[j] == 0.0 {
            break;
        }
        b.add_column(j, a[j], g);
        let r = residual_norm(b, f, g, buf) / den;
        if r > best {
            best = r;
            best_k = k + 1;
        }
    }
    (best, best_k)
}

fn quasi_greedy_ascent(b: &BasisTruncation, mut a: Vec<f64>) -> (f64, Vec<f64>, Vec<usize>) {
    let n = b.ambient_dim();
    let (mut f, mut g, mut buf) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut value, _) = quasi_greedy_value(b, &a, &mut f, &mut g, &mut buf);
    for _ in 0..QUASI_GREEDY_SWEEPS {
        let mut improved = false;
        for j in 0..a.len() {
            if a[j] == 0.0 {
                continue;
            }
            let old = a[j];
            let mut best: Option<(f64, f64)> = None;
            for t in [0.5, 2.0, -1.0] {
                a[j] = old * t;
                let (v, _) = quasi_greedy_value(b, &a, &mut f, &mut g, &mut buf);
                if v >= value + IMPROVEMENT && best.is_none_or(|(bv, _)| v > bv) {
                    best = Some((v, a[j]));
                }
            }
            a[j] = old;
            if let Some((v, x)) = best {
                a[j] = x;
                value = v;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    let (value, k) = quasi_greedy_value(b, &a, &mut f, &mut g, &mut buf);
    let mut set = greedy_order(&a)[..k].to_vec();
    set.sort_unstable();
    (value, a, set)
}

/// Lower bound for `sup ‖f - S_A f‖ / min_{|B|≤|A|} ‖f - S_B f‖` over greedy `A`.
///
/// Exhaustive over the sign grid for `d ≤ GRID_GUARD`. Above it, `budget`
/// random vectors are scored against canonical greedy sets, with the
/// minimum over `B` approximated by greedy sets and by a greedy
/// residual-reducing sequence. Either approximation only enlarges the
/// denominator, so the result stays a lower bound.
pub fn almost_greedy_constant_lb(
    b: &BasisTruncation,
    budget: usize,
    seed: u64,
) -> Result<(f64, Witness), GreedyError> {
    if budget == 0 {
        return Err(GreedyError::EmptyBudget);
    }
    let d = b.d();
    let best = if d <= GRID_GUARD {
        almost_greedy_grid(b)
    } else {
        (0..budget as u64)
            .into_par_iter()
            .map(|idx| {
                let mut rng = rng_for(seed ^ 0xa1a1, stream_id(d, idx));
                let a = random_magnitudes(&mut rng, d);
                almost_greedy_sample(b, a, idx)
            })
            .reduce(|| None, pick)
    };
    let mut fallback =
        Witness::evaluate(b, unit_coeffs(d, 0), vec![], WitnessKind::AlmostGreedy, Method::Grid);
    fallback.reference_set = Some(vec![]);
    fallback.ratio = fallback.recompute(b);
    let w = match best {
        Some(c) if c.witness.ratio > fallback.ratio => c.witness,
        _ => fallback,
    };
    Ok((w.ratio, w))
}

fn almost_greedy_witness(b: &BasisTruncation, a: Vec<f64>, set: Vec<usize>, reference: Vec<usize>, method: Method) -> Witness {
    let mut w = Witness::evaluate(b, a, set, WitnessKind::AlmostGreedy, method);
    w.reference_set = Some(reference);
    w.ratio = w.recompute(b);
    w
}

fn almost_greedy_grid(b: &BasisTruncation) -> Option<Candidate> {
    let d = b.d();
    let n = b.ambient_dim();
    (0..grid_size(d).expect("guarded"))
        .into_par_iter()
        .map_init(
            || (vec![0.0; d], vec![0.0; n], vec![0.0; n], vec![0.0; n]),
            |(a, f, g, buf), index| {
                if !grid_point(index, a) {
                    return None;
                }
                b.synthesize_into(a, f);
                let full = b.norm(f);
                if full < ZERO_NORM {
                    return None;
                }
                let support: Vec<usize> = (0..d).filter(|&j| a[j] != 0.0).collect();
                let s = support.len();
                let mut max_res = vec![(f64::NEG_INFINITY, 0u64); s + 1];
                let mut min_res = vec![(f64::INFINITY, 0u64); s + 1];
                gray_walk(b, a, &support, g, |mask, card, g| {
                    let r = residual_norm(b, f, g, buf);
                    if r > max_res[card].0 {
                        max_res[card] = (r, mask);
                    }
                    if r < min_res[card].0 {
                        min_res[card] = (r, mask);
                    }
                });
                let (mut value, mut best) = (0.0, (0u64, 0u64));
                let mut den = min_res[0];
                for k in 0..=s {
                    if min_res[k].0 < den.0 {
                        den = min_res[k];
                    }
                    let num = max_res[k].0;
                    let r = if den.0 < ZERO_NORM {
                        if num < ZERO_NORM {
                            0.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        num / den.0
                    };
                    if r > value {
                        value = r;
                        best = (max_res[k].1, den.1);
                    }
                }
                let witness =
                    almost_greedy_witness(b, a.clone(), mask_to_set(best.0), mask_to_set(best.1), Method::Grid);
                Some(Candidate { value, key: index, witness })
            },
        )
        .reduce(|| None, pick)
}

fn almost_greedy_sample(b: &BasisTruncation, a: Vec<f64>, key: u64) -> Option<Candidate> {
    let n = b.ambient_dim();
    let f = b.synthesize(&a);
    if b.norm(&f) < ZERO_NORM {
        return None;
    }
    let mut buf = vec![0.0; n];
    let order: Vec<usize> = greedy_order(&a).into_iter().take_while(|&j| a[j] != 0.0).collect();
    // Residuals of the canonical greedy sets.
    let mut g = vec![0.0; n];
    let mut greedy_res = vec![b.norm(&f)];
    for &j in &order {
        b.add_column(j, a[j], &mut g);
        greedy_res.push(residual_norm(b, &f, &g, &mut buf));
    }
    // Greedy residual-reducing sequence B_1 ⊂ B_2 ⊂ ….
    let mut h = vec![0.0; n];
    let mut chosen: Vec<usize> = Vec::new();
    let mut used = vec![false; a.len()];
    let mut reduce_res = vec![b.norm(&f)];
    for _ in 0..order.len() {
        let mut best: Option<(f64, usize)> = None;
        for &j in &order {
            if used[j] {
                continue;
            }
            b.add_column(j, a[j], &mut h);
            let r = residual_norm(b, &f, &h, &mut buf);
            b.add_column(j, -a[j], &mut h);
            if best.is_none_or(|(br, _)| r < br) {
                best = Some((r, j));
            }
        }
        let (r, j) = best.expect("order is nonempty here");
        b.add_column(j, a[j], &mut h);
        used[j] = true;
        chosen.push(j);
        reduce_res.push(r);
    }
    let mut value = 0.0;
    let mut best = (0usize, 0usize, false);
    let mut den = (greedy_res[0], 0usize, false);
    for k in 0..=order.len() {
        if greedy_res[k] < den.0 {
            den = (greedy_res[k], k, false);
        }
        if reduce_res[k] < den.0 {
            den = (reduce_res[k], k, true);
        }
        let num = greedy_res[k];
        let r = if den.0 < ZERO_NORM {
            if num < ZERO_NORM {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            num / den.0
        };
        if r > value {
            value = r;
            best = (k, den.1, den.2);
        }
    }
    let mut set = order[..best.0].to_vec();
    set.sort_unstable();
    let mut reference = if best.2 { chosen[..best.1].to_vec() } else { order[..best.1].to_vec() };
    reference.sort_unstable();
    let witness = almost_greedy_witness(b, a, set, reference, Method::Random);
    Some(Candidate { value: witness.ratio, key, witness })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FundamentalMode {
    Exact,
    Search,
}

/// Exact `φ_k` and `min_{|A|=k} ‖Σ_{j∈A} x_j‖` for every `k ≤ d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetNormProfile {
    /// `upper[k] = max_{|A|≤k} ‖Σ_{j∈A} x_j‖`.
    pub upper: Vec<f64>,
    /// `lower[k] = min_{|A|=k} ‖Σ_{j∈A} x_j‖`.
    pub lower: Vec<f64>,
}

pub fn subset_norm_profile(b: &BasisTruncation) -> Result<SubsetNormProfile, GreedyError> {
    let d = b.d();
    if d > SUBSET_GUARD {
        return Err(GreedyError::OverGuard { d, guard: SUBSET_GUARD });
    }
    let ones = vec![1.0; d];
    let support: Vec<usize> = (0..d).collect();
    let mut g = vec![0.0; b.ambient_dim()];
    let mut upper = vec![0.0f64; d + 1];
    let mut lower = vec![f64::INFINITY; d + 1];
    lower[0] = 0.0;
    gray_walk(b, &ones, &support, &mut g, |_, card, g| {
        let v = b.norm(g);
        upper[card] = upper[card].max(v);
        if card > 0 {
            lower[card] = lower[card].min(v);
        }
    });
    for k in 1..=d {
        upper[k] = upper[k].max(upper[k - 1]);
    }
    Ok(SubsetNormProfile { upper, lower })
}

/// `φ_m = sup_{|A|≤m} ‖Σ_{j∈A} x_j‖`, exactly or as a search lower bound.
pub fn fundamental_function(
    b: &BasisTruncation,
    m: usize,
    mode: FundamentalMode,
    budget: usize,
    seed: u64,
) -> Result<f64, GreedyError> {
    if m > b.d() {
        return Err(GreedyError::SizeOutOfRange { m, d: b.d() });
    }
    match mode {
        FundamentalMode::Exact => Ok(subset_norm_profile(b)?.upper[m]),
        FundamentalMode::Search => Ok(grow_subsets(b, m, budget, seed, true)),
    }
}

/// Best `‖Σ_{j∈A} x_j‖` found by growing sets one index at a time from
/// `budget` seeded starting indices. Maximizes over `|A| ≤ m` when
/// `maximize`, else minimizes over `|A| = m`.
fn grow_subsets(b: &BasisTruncation, m: usize, budget: usize, seed: u64, maximize: bool) -> f64 {
    let d = b.d();
    if m == 0 {
        return 0.0;
    }
    let starts = budget.max(1) as u64;
    let results: Vec<f64> = (0..starts)
        .into_par_iter()
        .map(|idx| {
            let first = if idx == 0 {
                0
            } else {
                rng_for(seed, stream_id(m, idx)).gen_range(0..d)
            };
            let mut g = vec![0.0; b.ambient_dim()];
            let mut used = vec![false; d];
            b.add_column(first, 1.0, &mut g);
            used[first] = true;
            let mut best = b.norm(&g);
            for _ in 1..m {
                let mut step: Option<(f64, usize)> = None;
                for j in (0..d).filter(|&j| !used[j]) {
                    b.add_column(j, 1.0, &mut g);
                    let v = b.norm(&g);
                    b.add_column(j, -1.0, &mut g);
                    let wins = match step {
                        None => true,
                        Some((s, _)) => (maximize && v > s) || (!maximize && v < s),
                    };
                    if wins {
                        step = Some((v, j));
                    }
                }
                let (v, j) = step.expect("m <= d leaves an unused index");
                b.add_column(j, 1.0, &mut g);
                used[j] = true;
                best = if maximize { best.max(v) } else { v };
            }
            best
        })
        .collect();
    if maximize {
        results.into_iter().fold(0.0f64, f64::max)
    } else {
        results.into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// `φ_m / min_{|A|=m} ‖Σ_{j∈A} x_j‖`. Search mode divides a lower bound of
/// `φ_m` by an upper bound of the minimum, so it stays a lower bound.
pub fn democracy_ratio(
    b: &BasisTruncation,
    m: usize,
    mode: FundamentalMode,
    budget: usize,
    seed: u64,
) -> Result<f64, GreedyError> {
    if m == 0 || m > b.d() {
        return Err(GreedyError::SizeOutOfRange { m, d: b.d() });
    }
    let (upper, lower) = match mode {
        FundamentalMode::Exact => {
            let p = subset_norm_profile(b)?;
            (p.upper[m], p.lower[m])
        }
        FundamentalMode::Search => {
            (grow_subsets(b, m, budget, seed, true), grow_subsets(b, m, budget, seed, false))
        }
    };
    Ok(upper / lower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{difference, interleave, lindenstrauss, summing, unit_vector_system};
    use crate::spaces::SpaceDesc;

    #[test]
    fn projection_examples() {
        let b = difference(3).unwrap();
        assert_eq!(project(&b, &[1.0, 1.0, 1.0], &[]).unwrap(), vec![0.0; 3]);
        assert_eq!(project(&b, &[1.0, 1.0, 1.0], &[0, 1, 2]).unwrap(), b.synthesize(&[1.0, 1.0, 1.0]));
        let p = project(&b, &[1.0, 1.0, 1.0], &[0, 2]).unwrap();
        assert_eq!(p, vec![1.0, -1.0, 1.0]);
        assert_eq!(b.norm(&p), 3.0);
        assert_eq!(
            project(&b, &[1.0], &[3]),
            Err(GreedyError::IndexOutOfRange { index: 3, d: 3 })
        );
    }

    #[test]
    fn greedy_set_examples() {
        assert_eq!(greedy_sets(&[3.0, 1.0, 2.0], 2, GreedyMode::Canonical).unwrap().canonical, vec![0, 2]);
        assert_eq!(
            greedy_sets(&[1.0, 1.0, 1.0], 2, GreedyMode::All).unwrap().all_sets,
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert_eq!(
            greedy_sets(&[2.0, 2.0, 1.0], 1, GreedyMode::All).unwrap().all_sets,
            vec![vec![0], vec![1]]
        );
        assert_eq!(greedy_sets(&[2.0, -2.0, 1.0], 0, GreedyMode::All).unwrap().all_sets, vec![Vec::<usize>::new()]);
    }

    #[test]
    fn greedy_set_count_is_binomial_product() {
        let a = [3.0, -1.0, 2.0, 1.0, -2.0, 1.0, 0.0];
        for m in 0..=a.len() {
            let fam = greedy_sets(&a, m, GreedyMode::All).unwrap();
            for s in &fam.all_sets {
                assert!(is_greedy_set(&a, s));
                assert_eq!(s.len(), m);
            }
            let brute = (0u32..1 << a.len())
                .filter(|mask| mask.count_ones() as usize == m)
                .filter(|&mask| is_greedy_set(&a, &mask_to_set(mask as u64)))
                .count();
            assert_eq!(fam.all_sets.len(), brute, "m = {m}");
        }
    }

    #[test]
    fn unit_vectors_are_one_suppression() {
        for p in [1.0, 2.0] {
            let b = unit_vector_system(5, SpaceDesc::lp(p)).unwrap();
            assert_eq!(quasi_greedy_constant_lb(&b, 1, 0).unwrap().0, 1.0);
            assert_eq!(almost_greedy_constant_lb(&b, 1, 0).unwrap().0, 1.0);
        }
        let b = unit_vector_system(14, SpaceDesc::linf()).unwrap();
        assert_eq!(quasi_greedy_constant_lb(&b, 8, 0).unwrap().0, 1.0);
    }

    #[test]
    fn quasi_greedy_witnesses_verify() {
        for b in [lindenstrauss(6).unwrap(), summing(6).unwrap(), lindenstrauss(16).unwrap()] {
            let (v, w) = quasi_greedy_constant_lb(&b, 8, 3).unwrap();
            assert!(v >= 1.0);
            assert!(w.verify(&b));
            assert_eq!(v, w.ratio);
            let a: Vec<f64> = w.coeffs.clone();
            assert!(is_greedy_set(&a, &w.set));
        }
    }

    #[test]
    fn summing_is_far_from_quasi_greedy() {
        assert!(quasi_greedy_constant_lb(&summing(8).unwrap(), 1, 0).unwrap().0 >= 2.0);
    }

    #[test]
    fn almost_greedy_single_coefficient() {
        let b = lindenstrauss(14).unwrap();
        let w = almost_greedy_witness(&b, unit_coeffs(14, 3), vec![3], vec![], Method::Grid);
        assert_eq!(w.ratio, 0.0);
        let w = almost_greedy_witness(&b, unit_coeffs(14, 3), vec![], vec![], Method::Grid);
        assert_eq!(w.ratio, 1.0);
        let (v, w) = almost_greedy_constant_lb(&b, 4, 1).unwrap();
        assert!(v >= 1.0 && v.is_finite());
        assert!(w.verify(&b));
    }

    #[test]
    fn fundamental_function_of_unit_vectors() {
        let b = unit_vector_system(6, SpaceDesc::lp(1.0)).unwrap();
        let c = unit_vector_system(6, SpaceDesc::linf()).unwrap();
        for m in 0..=6 {
            assert_eq!(fundamental_function(&b, m, FundamentalMode::Exact, 1, 0).unwrap(), m as f64);
            assert_eq!(fundamental_function(&b, m, FundamentalMode::Search, 3, 0).unwrap(), m as f64);
            let expected = if m == 0 { 0.0 } else { 1.0 };
            assert_eq!(fundamental_function(&c, m, FundamentalMode::Exact, 1, 0).unwrap(), expected);
        }
        let big = unit_vector_system(21, SpaceDesc::lp(1.0)).unwrap();
        assert!(fundamental_function(&big, 3, FundamentalMode::Exact, 1, 0).is_err());
    }

    #[test]
    fn democracy_examples() {
        let b = unit_vector_system(5, SpaceDesc::lp(2.0)).unwrap();
        for m in 1..=5 {
            assert!((democracy_ratio(&b, m, FundamentalMode::Exact, 1, 0).unwrap() - 1.0).abs() < 1e-12);
        }
        let mix = interleave(
            &unit_vector_system(2, SpaceDesc::lp(1.0)).unwrap(),
            &unit_vector_system(2, SpaceDesc::lp(2.0)).unwrap(),
        )
        .unwrap();
        assert_eq!(democracy_ratio(&mix, 2, FundamentalMode::Exact, 1, 0).unwrap(), 2.0);
        let l = lindenstrauss(10).unwrap();
        for m in 1..=10 {
            assert!(democracy_ratio(&l, m, FundamentalMode::Exact, 1, 0).unwrap() <= 4.0);
        }
    }
}
