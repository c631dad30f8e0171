//! Search primitives shared by the estimators: the `{-1, 0, 1}` sign grid,
//! Gray-code walks over index subsets, seeded random streams and
//! coordinate-wise local ascent of projection ratios.
//!
//! Every random sample is drawn from its own ChaCha stream, addressed by
//! `(seed, stream)`. Work can therefore be split across threads in any way
//! without changing results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bases::BasisTruncation;
use crate::witness::ZERO_NORM;

/// Smallest accepted gain of one ascent step.
pub const IMPROVEMENT: f64 = 1e-10;

/// Counter-based generator for sample `stream` under `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id of sample `idx` at size parameter `m`.
pub fn stream_id(m: usize, idx: u64) -> u64 {
    ((m as u64) << 32) | (idx & 0xffff_ffff)
}

/// `3^n`, if it fits.
pub fn grid_size(n: usize) -> Option<u64> {
    3u64.checked_pow(n as u32)
}

/// Decodes grid point `index` into `out` (digits 0, 1, 2 map to 0, 1, -1).
/// Returns `false` for the zero vector and for points whose first nonzero
/// entry is negative, which are mirror images of another point.
pub fn grid_point(mut index: u64, out: &mut [f64]) -> bool {
    let mut first = 0.0;
    for x in out.iter_mut() {
        *x = match index % 3 {
            0 => 0.0,
            1 => 1.0,
            _ => -1.0,
        };
        if first == 0.0 {
            first = *x;
        }
        index /= 3;
    }
    first > 0.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHit {
    pub ratio: f64,
    pub index: u64,
    pub mask: u64,
}

impl GridHit {
    /// Larger ratio first, then lower grid index.
    fn precedes(&self, other: &GridHit) -> bool {
        self.ratio > other.ratio || (self.ratio == other.ratio && self.index < other.index)
    }
}

pub(crate) fn mask_to_set(mask: u64) -> Vec<usize> {
    (0..64).filter(|j| mask >> j & 1 == 1).collect()
}

/// Walks all subsets of `support` in Gray-code order and calls
/// `visit(mask, card, g)` with `g = Σ_{j∈A} a_j x_j` maintained incrementally.
pub(crate) fn gray_walk(
    b: &BasisTruncation,
    a: &[f64],
    support: &[usize],
    g: &mut [f64],
    mut visit: impl FnMut(u64, usize, &[f64]),
) {
    g.fill(0.0);
    let mut mask = 0u64;
    let mut card = 0usize;
    visit(0, 0, g);
    for i in 1u64..(1u64 << support.len()) {
        let j = support[i.trailing_zeros() as usize];
        if mask >> j & 1 == 1 {
            b.add_column(j, -a[j], g);
            mask &= !(1 << j);
            card -= 1;
        } else {
            b.add_column(j, a[j], g);
            mask |= 1 << j;
            card += 1;
        }
        visit(mask, card, g);
    }
}

/// Best projection ratio of every grid point on `[0, n)`, with `|A| ≤ max_card`.
/// Points whose ratio cannot be evaluated are omitted.
pub(crate) fn projection_grid(b: &BasisTruncation, n: usize, max_card: usize) -> Vec<GridHit> {
    let total = grid_size(n).expect("grid size guarded by caller");
    let ambient = b.ambient_dim();
    (0..total)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; ambient], Vec::with_capacity(n)),
            |(a, g, support), index| {
                if !grid_point(index, a) {
                    return None;
                }
                support.clear();
                support.extend((0..n).filter(|&j| a[j] != 0.0));
                b.synthesize_into(a, g);
                let den = b.norm(g);
                if den < ZERO_NORM {
                    return None;
                }
                let mut best = GridHit { ratio: 0.0, index, mask: 0 };
                gray_walk(b, a, support, g, |mask, card, g| {
                    if card <= max_card {
                        let r = b.norm(g) / den;
                        if r > best.ratio {
                            best.ratio = r;
                            best.mask = mask;
                        }
                    }
                });
                Some(best)
            },
        )
        .flatten()
        .collect()
}

/// The `k` leading hits in (ratio desc, index asc) order.
pub(crate) fn top_hits(mut hits: Vec<GridHit>, k: usize) -> Vec<GridHit> {
    hits.sort_by(|x, y| {
        if x.precedes(y) {
            std::cmp::Ordering::Less
        } else if y.precedes(x) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    hits.truncate(k);
    hits
}

/// Parameters of the coordinate-wise ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig {
    pub max_sweeps: usize,
    /// Multiplicative moves tried on nonzero coefficients (sign flips and
    /// zeroing are always tried).
    pub factors: &'static [f64],
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig { max_sweeps: 64, factors: &[0.5, 2.0, 0.25, 4.0] }
    }
}

/// Mutable `(a, A)` with `f = Xa` and `g = X a|_A` kept up to date.
pub(crate) struct ProjectionState<'b> {
    b: &'b BasisTruncation,
    pub a: Vec<f64>,
    pub in_set: Vec<bool>,
    card: usize,
    max_card: usize,
    f: Vec<f64>,
    g: Vec<f64>,
    nf: f64,
    ng: f64,
    saved: Vec<(usize, f64, f64)>,
}

impl<'b> ProjectionState<'b> {
    pub fn new(b: &'b BasisTruncation, a: Vec<f64>, in_set: Vec<bool>, max_card: usize) -> Self {
        let card = in_set.iter().filter(|x| **x).count();
        let mut s = ProjectionState {
            b,
            a,
            in_set,
            card,
            max_card,
            f: vec![0.0; b.ambient_dim()],
            g: vec![0.0; b.ambient_dim()],
            nf: 0.0,
            ng: 0.0,
            saved: Vec::new(),
        };
        s.resync();
        s
    }

    /// Recomputes `f`, `g` and both norms from scratch.
    fn resync(&mut self) {
        self.b.synthesize_into(&self.a, &mut self.f);
        self.g.fill(0.0);
        for j in 0..self.a.len() {
            if self.in_set[j] && self.a[j] != 0.0 {
                self.b.add_column(j, self.a[j], &mut self.g);
            }
        }
        self.nf = self.b.norm(&self.f);
        self.ng = self.b.norm(&self.g);
    }

    pub fn ratio(&self) -> f64 {
        if self.nf < ZERO_NORM {
            0.0
        } else {
            self.ng / self.nf
        }
    }

    pub fn set(&self) -> Vec<usize> {
        (0..self.a.len()).filter(|&j| self.in_set[j]).collect()
    }

    /// Ratio after `a_j ← value`, leaving the state untouched.
    fn probe_coeff(&mut self, j: usize, value: f64) -> f64 {
        let delta = value - self.a[j];
        self.saved.clear();
        for &(i, x) in self.b.sparse_column(j) {
            self.saved.push((i, self.f[i], self.g[i]));
            self.f[i] += delta * x;
            if self.in_set[j] {
                self.g[i] += delta * x;
            }
        }
        let nf = self.b.norm(&self.f);
        let ng = if self.in_set[j] { self.b.norm(&self.g) } else { self.ng };
        for &(i, f, g) in &self.saved {
            self.f[i] = f;
            self.g[i] = g;
        }
        if nf < ZERO_NORM {
            0.0
        } else {
            ng / nf
        }
    }

    fn commit_coeff(&mut self, j: usize, value: f64) {
        let delta = value - self.a[j];
        for &(i, x) in self.b.sparse_column(j) {
            self.f[i] += delta * x;
            if self.in_set[j] {
                self.g[i] += delta * x;
            }
        }
        self.a[j] = value;
        self.nf = self.b.norm(&self.f);
        self.ng = self.b.norm(&self.g);
    }

    /// Ratio after toggling membership of `j`, or `None` if not allowed.
    fn probe_toggle(&mut self, j: usize) -> Option<f64> {
        if !self.in_set[j] && self.card >= self.max_card {
            return None;
        }
        let sign = if self.in_set[j] { -1.0 } else { 1.0 };
        self.saved.clear();
        for &(i, x) in self.b.sparse_column(j) {
            self.saved.push((i, self.f[i], self.g[i]));
            self.g[i] += sign * self.a[j] * x;
        }
        let ng = self.b.norm(&self.g);
        for &(i, _, g) in &self.saved {
            self.g[i] = g;
        }
        Some(if self.nf < ZERO_NORM { 0.0 } else { ng / self.nf })
    }

    fn commit_toggle(&mut self, j: usize) {
        let sign = if self.in_set[j] { -1.0 } else { 1.0 };
        for &(i, x) in self.b.sparse_column(j) {
            self.g[i] += sign * self.a[j] * x;
        }
        self.in_set[j] = !self.in_set[j];
        if self.in_set[j] {
            self.card += 1;
        } else {
            self.card -= 1;
        }
        self.ng = self.b.norm(&self.g);
    }

    /// Rescales by a power of two so that `max |a_j| ∈ [1, 2)`; exact.
    fn normalize(&mut self) {
        let max = self.a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if max > 0.0 {
            let t = (-max.log2().floor()).exp2();
            for x in &mut self.a {
                *x *= t;
            }
        }
    }

    /// Best single-coordinate move from the current point, if it gains at
    /// least [`IMPROVEMENT`].
    fn best_move(&mut self, cfg: &AscentConfig) -> Option<(usize, Move)> {
        let current = self.ratio();
        let mut best: Option<(f64, usize, Move)> = None;
        let mut consider = |r: f64, j: usize, mv: Move| {
            if r >= current + IMPROVEMENT && best.is_none_or(|(b, _, _)| r > b) {
                best = Some((r, j, mv));
            }
        };
        for j in 0..self.a.len() {
            let aj = self.a[j];
            if aj != 0.0 {
                for &t in cfg.factors {
                    consider(self.probe_coeff(j, aj * t), j, Move::Coeff(aj * t));
                }
                consider(self.probe_coeff(j, -aj), j, Move::Coeff(-aj));
                consider(self.probe_coeff(j, 0.0), j, Move::Coeff(0.0));
            } else {
                for v in [1.0, -1.0, 0.5, -0.5] {
                    consider(self.probe_coeff(j, v), j, Move::Coeff(v));
                }
            }
            if let Some(r) = self.probe_toggle(j) {
                consider(r, j, Move::Toggle);
            }
        }
        best.map(|(_, j, mv)| (j, mv))
    }

    /// Steepest-ascent hill climbing over single-coordinate moves, for at
    /// most `max_sweeps · n` steps; returns the final ratio.
    pub fn ascend(&mut self, cfg: &AscentConfig) -> f64 {
        let n = self.a.len().max(1);
        for step in 1..=cfg.max_sweeps * n {
            match self.best_move(cfg) {
                Some((j, Move::Coeff(v))) => self.commit_coeff(j, v),
                Some((j, Move::Toggle)) => self.commit_toggle(j),
                None => break,
            }
            if step % n == 0 {
                self.normalize();
                self.resync();
            }
        }
        self.normalize();
        self.resync();
        self.ratio()
    }
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Coeff(f64),
    Toggle,
}

/// Random start on `[0, n)`: each coefficient is zero with probability 1/5,
/// otherwise a random sign times a magnitude in `[1/4, 1]`; `A` takes each
/// nonzero index with probability 1/2 subject to `|A| ≤ max_card`.
pub(crate) fn random_start(rng: &mut ChaCha8Rng, n: usize, max_card: usize) -> (Vec<f64>, Vec<bool>) {
    let mut a = vec![0.0; n];
    for x in &mut a {
        if rng.gen_range(0..5) != 0 {
            let mag: f64 = rng.gen_range(0.25..=1.0);
            *x = if rng.gen_bool(0.5) { mag } else { -mag };
        }
    }
    if a.iter().all(|x| *x == 0.0) && n > 0 {
        a[rng.gen_range(0..n)] = 1.0;
    }
    let mut in_set = vec![false; n];
    let mut card = 0;
    for j in 0..n {
        if a[j] != 0.0 && card < max_card && rng.gen_bool(0.5) {
            in_set[j] = true;
            card += 1;
        }
    }
    (a, in_set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{difference, lindenstrauss};
    use rand::RngCore;

    #[test]
    fn grid_decoding() {
        let mut a = [0.0; 3];
        assert!(!grid_point(0, &mut a));
        assert!(grid_point(1, &mut a));
        assert_eq!(a, [1.0, 0.0, 0.0]);
        assert!(!grid_point(2, &mut a));
        assert!(!grid_point(2 + 3, &mut a));
        assert!(grid_point(1 + 2 * 3, &mut a));
        assert_eq!(a, [1.0, -1.0, 0.0]);
        let kept = (0..27).filter(|&i| grid_point(i, &mut a)).count();
        assert_eq!(kept, 13);
    }

    #[test]
    fn streams_are_independent_of_order() {
        let x = rng_for(7, stream_id(3, 5)).next_u64();
        let _ = rng_for(7, stream_id(3, 4)).next_u64();
        assert_eq!(rng_for(7, stream_id(3, 5)).next_u64(), x);
        assert_ne!(rng_for(7, stream_id(4, 5)).next_u64(), x);
    }

    #[test]
    fn gray_walk_visits_every_subset() {
        let b = difference(4).unwrap();
        let a = [1.0, -1.0, 0.0, 1.0];
        let mut g = vec![0.0; 4];
        let mut seen = Vec::new();
        gray_walk(&b, &a, &[0, 1, 3], &mut g, |mask, card, g| {
            assert_eq!(card, mask.count_ones() as usize);
            let mut h = vec![0.0; 4];
            b.synthesize_subset_into(&a, &mask_to_set(mask), &mut h);
            assert_eq!(g, &h[..]);
            seen.push(mask);
        });
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn ascent_never_decreases() {
        let b = lindenstrauss(6).unwrap();
        for idx in 0..20 {
            let mut rng = rng_for(1, idx);
            let (a, s) = random_start(&mut rng, 6, 6);
            let mut st = ProjectionState::new(&b, a, s, 6);
            let before = st.ratio();
            let after = st.ascend(&AscentConfig::default());
            assert!(after >= before - 1e-12);
        }
    }

    #[test]
    fn difference_grid_reaches_m() {
        let b = difference(5).unwrap();
        let hits = projection_grid(&b, 5, 5);
        let best = top_hits(hits, 1)[0];
        assert!((best.ratio - 5.0).abs() < 1e-12);
    }
}
