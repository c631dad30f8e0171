//! Finite-dimensional sequence-space norms.
//!
//! Every space is described by a [`SpaceDesc`], which doubles as a small
//! textual language (`lp:1`, `c0:8`, `mixed:q=2[lp:1^4,lp:1^8]`,
//! `lorentz:p=2,q=1`, `bv`). Infinite exponents and the `c0`-sense outer sum
//! are carried symbolically by [`Exponent::Inf`]; no float infinity ever
//! enters the arithmetic.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("dimension mismatch: space expects {expected}, vector has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid space parameter: {0}")]
    InvalidParameter(String),
    #[error("vector contains NaN at position {0}")]
    NotANumber(usize),
    #[error("cannot parse space description `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

/// An exponent in `[1, ∞]`.
///
/// For an outer (block) sum `Inf` is the `c0`-sense sum, written `q=0` in the
/// textual form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Inf,
}

impl Exponent {
    fn validate(self) -> Result<(), SpaceError> {
        match self {
            Exponent::Finite(p) if p.is_finite() && p >= 1.0 => Ok(()),
            Exponent::Finite(p) => Err(SpaceError::InvalidParameter(format!(
                "exponent must be >= 1, got {p}"
            ))),
            Exponent::Inf => Ok(()),
        }
    }

    /// Combines nonnegative magnitudes in the ℓ_p (or sup) sense.
    fn combine(self, values: impl Iterator<Item = f64>) -> f64 {
        match self {
            Exponent::Inf => values.fold(0.0, f64::max),
            Exponent::Finite(1.0) => values.sum(),
            Exponent::Finite(p) => {
                // A single nonzero term is returned as is, so that embedding
                // a vector into one summand never perturbs its norm.
                let mut single = None;
                let mut nonzero = 0usize;
                let mut total = 0.0;
                for x in values {
                    if x != 0.0 {
                        nonzero += 1;
                        single = Some(x);
                        total += if p == 2.0 { x * x } else { x.powf(p) };
                    }
                }
                match (nonzero, single) {
                    (0, _) => 0.0,
                    (1, Some(x)) => x,
                    _ if p == 2.0 => total.sqrt(),
                    _ => total.powf(p.recip()),
                }
            }
        }
    }
}

/// Weight sequence of a Lorentz space `d_q(w)`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Explicit(Vec<f64>),
    /// `w_n = n^{q/p - 1}`, the classical `ℓ_{p,q}`.
    LorentzPQ { p: f64, q: f64 },
}

impl WeightSpec {
    fn weight(&self, n: usize) -> f64 {
        match self {
            WeightSpec::Explicit(w) => w[n],
            WeightSpec::LorentzPQ { p, q } => ((n + 1) as f64).powf(q / p - 1.0),
        }
    }
}

/// One summand of a [`SpaceDesc::MixedSum`].
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub space: SpaceDesc,
    pub dim: usize,
}

impl Block {
    pub fn new(space: SpaceDesc, dim: usize) -> Self {
        Block { space, dim }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceDesc {
    Lp(Exponent),
    /// ℓ_∞ norm on a truncation of `c0` of the given dimension.
    C0Trunc(usize),
    /// `(⊕ X_n)_q`: block norms combined in the ℓ_q sense (sup if `Inf`).
    MixedSum { outer: Exponent, blocks: Vec<Block> },
    Lorentz { q: f64, weights: WeightSpec },
    /// Bounded variation: `|a_1| + Σ_{j≥2} |a_j - a_{j-1}|`.
    Bv,
}

impl SpaceDesc {
    pub fn lp(p: f64) -> Self {
        SpaceDesc::Lp(Exponent::Finite(p))
    }

    pub fn linf() -> Self {
        SpaceDesc::Lp(Exponent::Inf)
    }

    pub fn lorentz_pq(p: f64, q: f64) -> Self {
        SpaceDesc::Lorentz { q, weights: WeightSpec::LorentzPQ { p, q } }
    }

    /// Dimension the space is pinned to, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            SpaceDesc::C0Trunc(d) => Some(*d),
            SpaceDesc::MixedSum { blocks, .. } => Some(blocks.iter().map(|b| b.dim).sum()),
            _ => None,
        }
    }

    /// Checks the parameters and that vectors of length `dim` are admissible.
    pub fn validate_for_dim(&self, dim: usize) -> Result<(), SpaceError> {
        self.validate()?;
        match self {
            SpaceDesc::C0Trunc(d) if *d != dim => {
                Err(SpaceError::DimensionMismatch { expected: *d, got: dim })
            }
            SpaceDesc::MixedSum { blocks, .. } => {
                let total: usize = blocks.iter().map(|b| b.dim).sum();
                if total != dim {
                    return Err(SpaceError::DimensionMismatch { expected: total, got: dim });
                }
                Ok(())
            }
            SpaceDesc::Lorentz { weights: WeightSpec::Explicit(w), .. } if w.len() < dim => {
                Err(SpaceError::InvalidParameter(format!(
                    "{} Lorentz weights supplied for dimension {dim}",
                    w.len()
                )))
            }
            _ => Ok(()),
        }
    }

    /// Checks parameters only (no dimension).
    pub fn validate(&self) -> Result<(), SpaceError> {
        match self {
            SpaceDesc::Lp(p) => p.validate(),
            SpaceDesc::C0Trunc(0) => {
                Err(SpaceError::InvalidParameter("c0 truncation of dimension 0".into()))
            }
            SpaceDesc::C0Trunc(_) | SpaceDesc::Bv => Ok(()),
            SpaceDesc::MixedSum { outer, blocks } => {
                outer.validate()?;
                if blocks.is_empty() {
                    return Err(SpaceError::InvalidParameter("mixed sum without blocks".into()));
                }
                for b in blocks {
                    if b.dim == 0 {
                        return Err(SpaceError::InvalidParameter(
                            "mixed sum block of dimension 0".into(),
                        ));
                    }
                    b.space.validate_for_dim(b.dim)?;
                }
                Ok(())
            }
            SpaceDesc::Lorentz { q, weights } => {
                if !(q.is_finite() && *q >= 1.0) {
                    return Err(SpaceError::InvalidParameter(format!(
                        "Lorentz q must be in [1, inf), got {q}"
                    )));
                }
                match weights {
                    WeightSpec::Explicit(w) => {
                        if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                            return Err(SpaceError::InvalidParameter(format!(
                                "Lorentz weights must be positive, got {bad}"
                            )));
                        }
                    }
                    WeightSpec::LorentzPQ { p, q: wq } => {
                        if !(p.is_finite() && *p >= 1.0) {
                            return Err(SpaceError::InvalidParameter(format!(
                                "Lorentz p must be in [1, inf), got {p}"
                            )));
                        }
                        if wq != q {
                            return Err(SpaceError::InvalidParameter(format!(
                                "Lorentz preset q={wq} disagrees with space q={q}"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// The space restricted to the first `n` coordinates, for spaces where
    /// dropping trailing zero coordinates preserves the norm.
    pub fn restrict_prefix(&self, n: usize) -> Result<SpaceDesc, SpaceError> {
        match self {
            SpaceDesc::Lp(_) | SpaceDesc::Lorentz { .. } => Ok(self.clone()),
            SpaceDesc::C0Trunc(_) => Ok(SpaceDesc::C0Trunc(n)),
            SpaceDesc::MixedSum { outer, blocks } => {
                let mut left = n;
                let mut kept = Vec::new();
                for b in blocks {
                    if left == 0 {
                        break;
                    }
                    if b.dim <= left {
                        kept.push(b.clone());
                        left -= b.dim;
                    } else {
                        kept.push(Block::new(b.space.restrict_prefix(left)?, left));
                        left = 0;
                    }
                }
                Ok(SpaceDesc::MixedSum { outer: *outer, blocks: kept })
            }
            // The final |a_n - 0| jump depends on what follows the prefix.
            SpaceDesc::Bv => Err(SpaceError::InvalidParameter(
                "bounded-variation norm does not restrict to coordinate prefixes".into(),
            )),
        }
    }

    /// Unchecked evaluation; callers validate once up front.
    pub(crate) fn eval(&self, v: &[f64]) -> f64 {
        match self {
            SpaceDesc::Lp(p) => p.combine(v.iter().map(|x| x.abs())),
            SpaceDesc::C0Trunc(_) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            SpaceDesc::MixedSum { outer, blocks } => {
                let mut offset = 0;
                outer.combine(blocks.iter().map(|b| {
                    let part = &v[offset..offset + b.dim];
                    offset += b.dim;
                    b.space.eval(part)
                }))
            }
            SpaceDesc::Lorentz { q, weights } => {
                let sorted = nonincreasing_rearrangement(v);
                let sum: f64 =
                    sorted.iter().enumerate().map(|(n, a)| a.powf(*q) * weights.weight(n)).sum();
                sum.powf(q.recip())
            }
            SpaceDesc::Bv => {
                let mut prev = 0.0;
                let mut total = 0.0;
                for &x in v {
                    total += (x - prev).abs();
                    prev = x;
                }
                total
            }
        }
    }
}

/// Norm of `v` in `space`.
pub fn norm(space: &SpaceDesc, v: &[f64]) -> Result<f64, SpaceError> {
    if let Some(i) = v.iter().position(|x| x.is_nan()) {
        return Err(SpaceError::NotANumber(i));
    }
    space.validate_for_dim(v.len())?;
    Ok(space.eval(v))
}

/// Absolute values of `v` sorted in non-increasing order.
pub fn nonincreasing_rearrangement(v: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

// ---------------------------------------------------------------------------
// Textual form

impl fmt::Display for SpaceDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceDesc::Lp(Exponent::Finite(p)) => write!(f, "lp:{p}"),
            SpaceDesc::Lp(Exponent::Inf) => write!(f, "lp:inf"),
            SpaceDesc::C0Trunc(d) => write!(f, "c0:{d}"),
            SpaceDesc::MixedSum { outer, blocks } => {
                match outer {
                    Exponent::Finite(q) => write!(f, "mixed:q={q}[")?,
                    Exponent::Inf => write!(f, "mixed:q=0[")?,
                }
                for (i, b) in blocks.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}^{}", b.space, b.dim)?;
                }
                write!(f, "]")
            }
            SpaceDesc::Lorentz { weights: WeightSpec::LorentzPQ { p, q }, .. } => {
                write!(f, "lorentz:p={p},q={q}")
            }
            SpaceDesc::Lorentz { q, weights: WeightSpec::Explicit(w) } => {
                write!(f, "lorentz:q={q},w=[")?;
                for (i, x) in w.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
            SpaceDesc::Bv => write!(f, "bv"),
        }
    }
}

const SPACE_PREFIXES: [&str; 5] = ["lp:", "c0:", "mixed:", "lorentz:", "bv"];

fn parse_err(input: &str, reason: impl Into<String>) -> SpaceError {
    SpaceError::Parse { input: input.to_string(), reason: reason.into() }
}

fn parse_f64(input: &str, s: &str) -> Result<f64, SpaceError> {
    s.trim().parse::<f64>().map_err(|_| parse_err(input, format!("`{s}` is not a number")))
}

/// Splits on commas at bracket depth zero.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

impl FromStr for SpaceDesc {
    type Err = SpaceError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let s = input.trim();
        if s == "bv" {
            return Ok(SpaceDesc::Bv);
        }
        if let Some(rest) = s.strip_prefix("lp:") {
            let p = match rest.trim() {
                "inf" | "∞" => Exponent::Inf,
                other => Exponent::Finite(parse_f64(input, other)?),
            };
            let space = SpaceDesc::Lp(p);
            space.validate()?;
            return Ok(space);
        }
        if let Some(rest) = s.strip_prefix("c0:") {
            let d = rest
                .trim()
                .parse::<usize>()
                .map_err(|_| parse_err(input, "c0 dimension must be an integer"))?;
            let space = SpaceDesc::C0Trunc(d);
            space.validate()?;
            return Ok(space);
        }
        if let Some(rest) = s.strip_prefix("mixed:") {
            let rest = rest
                .strip_prefix("q=")
                .ok_or_else(|| parse_err(input, "mixed sum needs `q=`"))?;
            let open = rest.find('[').ok_or_else(|| parse_err(input, "missing `[`"))?;
            if !rest.ends_with(']') {
                return Err(parse_err(input, "missing closing `]`"));
            }
            let q = parse_f64(input, &rest[..open])?;
            let outer = if q == 0.0 { Exponent::Inf } else { Exponent::Finite(q) };
            let body = &rest[open + 1..rest.len() - 1];
            // A comma inside `lorentz:p=..,q=..` is not a block separator.
            let mut items: Vec<String> = Vec::new();
            for piece in split_top_level(body) {
                let starts_space = SPACE_PREFIXES.iter().any(|p| piece.trim().starts_with(p));
                match items.last_mut() {
                    Some(last) if !starts_space => {
                        last.push(',');
                        last.push_str(piece);
                    }
                    _ => items.push(piece.to_string()),
                }
            }
            let mut blocks = Vec::with_capacity(items.len());
            for item in &items {
                let caret = item
                    .rfind('^')
                    .ok_or_else(|| parse_err(input, format!("block `{item}` lacks `^dim`")))?;
                let dim = item[caret + 1..]
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| parse_err(input, format!("bad block dimension in `{item}`")))?;
                blocks.push(Block::new(item[..caret].parse()?, dim));
            }
            let space = SpaceDesc::MixedSum { outer, blocks };
            space.validate()?;
            return Ok(space);
        }
        if let Some(rest) = s.strip_prefix("lorentz:") {
            let mut p = None;
            let mut q = None;
            let mut w = None;
            for kv in split_top_level(rest) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| parse_err(input, format!("expected key=value, got `{kv}`")))?;
                match k.trim() {
                    "p" => p = Some(parse_f64(input, v)?),
                    "q" => q = Some(parse_f64(input, v)?),
                    "w" => {
                        let v = v.trim();
                        let inner = v
                            .strip_prefix('[')
                            .and_then(|x| x.strip_suffix(']'))
                            .ok_or_else(|| parse_err(input, "weights must be `[w1;w2;...]`"))?;
                        let ws = inner
                            .split(';')
                            .map(|x| parse_f64(input, x))
                            .collect::<Result<Vec<_>, _>>()?;
                        w = Some(ws);
                    }
                    other => return Err(parse_err(input, format!("unknown key `{other}`"))),
                }
            }
            let q = q.ok_or_else(|| parse_err(input, "Lorentz space needs q"))?;
            let space = match (p, w) {
                (Some(p), None) => SpaceDesc::lorentz_pq(p, q),
                (None, Some(w)) => SpaceDesc::Lorentz { q, weights: WeightSpec::Explicit(w) },
                _ => return Err(parse_err(input, "give exactly one of p or w")),
            };
            space.validate()?;
            return Ok(space);
        }
        Err(parse_err(input, "unknown space"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9
    }

    #[test]
    fn l1_norm_example() {
        assert!(close(norm(&SpaceDesc::lp(1.0), &[3.0, -1.0, 2.0]).unwrap(), 6.0));
    }

    #[test]
    fn lorentz_p1_q1_is_l1() {
        let s = SpaceDesc::lorentz_pq(1.0, 1.0);
        assert!(close(norm(&s, &[3.0, 1.0, 2.0]).unwrap(), 6.0));
    }

    #[test]
    fn bv_example() {
        assert!(close(norm(&SpaceDesc::Bv, &[1.0, 0.0, 1.0, 0.0]).unwrap(), 4.0));
    }

    #[test]
    fn lorentz_explicit_weights() {
        let s = SpaceDesc::Lorentz {
            q: 2.0,
            weights: WeightSpec::Explicit(vec![1.0, 0.5, 1.0 / 3.0]),
        };
        let expected = (34.0f64 / 3.0).sqrt();
        assert!(close(norm(&s, &[1.0, 2.0, 3.0]).unwrap(), expected));
        // Brute-force cross-check: the weighted sum is maximised by pairing the
        // largest magnitudes with the largest weights, over all orderings.
        let v = [1.0f64, 2.0, 3.0];
        let w = [1.0, 0.5, 1.0 / 3.0];
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best = perms
            .iter()
            .map(|p| p.iter().zip(w).map(|(&i, wi)| v[i].powi(2) * wi).sum::<f64>())
            .fold(0.0, f64::max)
            .sqrt();
        assert!(close(best, expected));
    }

    #[test]
    fn rearrangement_examples() {
        assert_eq!(nonincreasing_rearrangement(&[0.0, -3.0, 1.0]), vec![3.0, 1.0, 0.0]);
        assert_eq!(nonincreasing_rearrangement(&[0.0, 0.0, 0.0]), vec![0.0; 3]);
        assert_eq!(nonincreasing_rearrangement(&[2.0, 2.0, -2.0]), vec![2.0; 3]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            norm(&SpaceDesc::C0Trunc(3), &[1.0, 2.0]),
            Err(SpaceError::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(matches!(
            norm(&SpaceDesc::lp(0.5), &[1.0]),
            Err(SpaceError::InvalidParameter(_))
        ));
        assert!(matches!(norm(&SpaceDesc::lp(2.0), &[f64::NAN]), Err(SpaceError::NotANumber(0))));
        let short = SpaceDesc::Lorentz { q: 1.0, weights: WeightSpec::Explicit(vec![1.0]) };
        assert!(norm(&short, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn mixed_sum_c0_sense() {
        let s: SpaceDesc = "mixed:q=0[lp:1^2,lp:2^2]".parse().unwrap();
        // max(|1|+|1|, sqrt(9+16))
        assert!(close(norm(&s, &[1.0, -1.0, 3.0, 4.0]).unwrap(), 5.0));
        let s: SpaceDesc = "mixed:q=1[lp:1^2,lp:2^2]".parse().unwrap();
        assert!(close(norm(&s, &[1.0, -1.0, 3.0, 4.0]).unwrap(), 7.0));
    }

    #[test]
    fn textual_round_trip() {
        for text in [
            "lp:1",
            "lp:inf",
            "lp:2.5",
            "c0:7",
            "bv",
            "lorentz:p=2,q=1",
            "lorentz:q=2,w=[1;0.5;0.25]",
            "mixed:q=2[lp:1^4,lp:1^8]",
            "mixed:q=0[mixed:q=1[lp:1^2,c0:3^3]^5,lorentz:p=3,q=2^4,bv^2]",
        ] {
            let s: SpaceDesc = text.parse().unwrap();
            assert_eq!(s.to_string(), text);
        }
        assert!("lp:x".parse::<SpaceDesc>().is_err());
        assert!("mixed:q=1[lp:1]".parse::<SpaceDesc>().is_err());
        assert!("hilbert".parse::<SpaceDesc>().is_err());
    }

    #[test]
    fn prefix_restriction() {
        let s: SpaceDesc = "mixed:q=1[lp:1^2,c0:3^3]".parse().unwrap();
        let r = s.restrict_prefix(4).unwrap();
        assert_eq!(r.to_string(), "mixed:q=1[lp:1^2,c0:2^2]");
        assert!(SpaceDesc::Bv.restrict_prefix(2).is_err());
    }
}
