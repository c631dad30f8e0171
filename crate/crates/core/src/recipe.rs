//! Textual basis recipes such as `lindenstrauss:32`,
//! `interleave(difference:8,unit:8:lp:2)` or
//! `blocksum(lindenstrauss,dims=2^1..2^6,p=1)`.
//!
//! Inside `blocksum`/`pqsplit` the base may omit its size; it is then built
//! with as many vectors as the largest block needs.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::bases::{self, BasisError, BasisTruncation};
use crate::spaces::{Exponent, SpaceDesc};

#[derive(Debug, Error)]
pub enum RecipeError {
    #[error("cannot parse recipe `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error("recipe `{0}` needs an explicit size here")]
    MissingSize(String),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Recipe {
    Lindenstrauss(Option<usize>),
    Summing(Option<usize>),
    Difference(Option<usize>),
    Unit(Option<usize>, SpaceDesc),
    Interleave(Box<Recipe>, Box<Recipe>),
    BlockSum { base: Box<Recipe>, dims: Vec<usize>, p: Exponent },
    /// Block sum whose blocks are split into coordinate halves summed in
    /// `ℓ_p` and `ℓ_q` respectively.
    PqSplit { base: Box<Recipe>, dims: Vec<usize>, p: Exponent, q: Exponent },
    /// Unit vectors split into `ℓ_∞^n ⊕ ℓ_2^{2^n-n-2}` blocks, `n = 2..=n_max`.
    CanonicalSplit { n_max: u32, p: Exponent },
    File(PathBuf),
}

fn err(input: &str, reason: impl Into<String>) -> RecipeError {
    RecipeError::Parse { input: input.into(), reason: reason.into() }
}

/// Splits at commas that are not nested inside brackets.
fn split_top(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
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

fn parse_exponent(input: &str, s: &str) -> Result<Exponent, RecipeError> {
    match s {
        "0" | "inf" => Ok(Exponent::Inf),
        _ => {
            let p: f64 = s.parse().map_err(|_| err(input, format!("bad exponent `{s}`")))?;
            if p < 1.0 {
                return Err(err(input, "exponents must be 0 (sup) or at least 1"));
            }
            Ok(Exponent::Finite(p))
        }
    }
}

/// `2^a..2^b` or an explicit `;`-separated list.
pub fn parse_dims(s: &str) -> Result<Vec<usize>, RecipeError> {
    let bad = || err(s, "expected `2^a..2^b` or `d1;d2;…`");
    let dims: Vec<usize> = if let Some((lo, hi)) = s.split_once("..") {
        let exp = |t: &str| t.strip_prefix("2^").and_then(|e| e.parse::<u32>().ok());
        let (lo, hi) = (exp(lo).ok_or_else(bad)?, exp(hi).ok_or_else(bad)?);
        if lo > hi || hi > 30 {
            return Err(bad());
        }
        bases::dyadic_dims(lo, hi)
    } else {
        s.split(';').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if dims.is_empty() || dims.contains(&0) {
        return Err(bad());
    }
    Ok(dims)
}

fn format_dims(dims: &[usize]) -> String {
    let dyadic = dims.iter().all(|d| d.is_power_of_two())
        && dims.windows(2).all(|w| w[1] == 2 * w[0])
        && dims.len() > 1;
    if dyadic {
        format!("2^{}..2^{}", dims[0].trailing_zeros(), dims[dims.len() - 1].trailing_zeros())
    } else {
        dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";")
    }
}

fn format_exponent(p: Exponent) -> String {
    match p {
        Exponent::Finite(p) => p.to_string(),
        Exponent::Inf => "0".into(),
    }
}

fn named_args<'a>(input: &str, args: &[&'a str]) -> Result<Vec<(&'a str, &'a str)>, RecipeError> {
    args.iter()
        .map(|a| a.split_once('=').map(|(k, v)| (k.trim(), v.trim())).ok_or_else(|| err(input, format!("expected key=value, got `{a}`"))))
        .collect()
}

impl FromStr for Recipe {
    type Err = RecipeError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let s = input.trim();
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(Recipe::File(PathBuf::from(path)));
        }
        if let Some(open) = s.find('(') {
            let name = &s[..open];
            let body = s[open + 1..].strip_suffix(')').ok_or_else(|| err(input, "missing `)`"))?;
            let args = split_top(body);
            return match name {
                "interleave" => {
                    if args.len() != 2 {
                        return Err(err(input, "interleave takes two recipes"));
                    }
                    Ok(Recipe::Interleave(Box::new(args[0].parse()?), Box::new(args[1].parse()?)))
                }
                "blocksum" | "pqsplit" => {
                    let base: Recipe = args[0].parse()?;
                    let mut dims = None;
                    let (mut p, mut q) = (Exponent::Finite(1.0), Exponent::Finite(1.0));
                    for (k, v) in named_args(input, &args[1..])? {
                        match k {
                            "dims" => dims = Some(parse_dims(v)?),
                            "p" => p = parse_exponent(input, v)?,
                            "q" if name == "pqsplit" => q = parse_exponent(input, v)?,
                            _ => return Err(err(input, format!("unknown argument `{k}`"))),
                        }
                    }
                    let dims = dims.unwrap_or_else(|| bases::dyadic_dims(1, 6));
                    let base = Box::new(base);
                    Ok(if name == "blocksum" {
                        Recipe::BlockSum { base, dims, p }
                    } else {
                        Recipe::PqSplit { base, dims, p, q }
                    })
                }
                "canonical-split" => {
                    let mut n_max = None;
                    let mut p = Exponent::Finite(2.0);
                    for (k, v) in named_args(input, &args)? {
                        match k {
                            "n" => n_max = Some(v.parse().map_err(|_| err(input, "bad n"))?),
                            "p" => p = parse_exponent(input, v)?,
                            _ => return Err(err(input, format!("unknown argument `{k}`"))),
                        }
                    }
                    Ok(Recipe::CanonicalSplit { n_max: n_max.ok_or_else(|| err(input, "missing n"))?, p })
                }
                _ => Err(err(input, format!("unknown combinator `{name}`"))),
            };
        }
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        let size = |t: &str| -> Result<usize, RecipeError> {
            match t.parse::<usize>() {
                Ok(d) if d > 0 => Ok(d),
                _ => Err(err(input, format!("bad size `{t}`"))),
            }
        };
        match name {
            "lindenstrauss" | "summing" | "difference" => {
                let d = rest.map(size).transpose()?;
                Ok(match name {
                    "lindenstrauss" => Recipe::Lindenstrauss(d),
                    "summing" => Recipe::Summing(d),
                    _ => Recipe::Difference(d),
                })
            }
            "unit" => {
                let (d, space) = match rest {
                    None => (None, SpaceDesc::lp(2.0)),
                    Some(r) => match r.split_once(':') {
                        Some((d, sp)) => (Some(size(d)?), sp.parse().map_err(|e| err(input, format!("{e}")))?),
                        None => (Some(size(r)?), SpaceDesc::lp(2.0)),
                    },
                };
                Ok(Recipe::Unit(d, space))
            }
            _ => Err(err(input, format!("unknown basis `{name}`"))),
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sized = |f: &mut fmt::Formatter<'_>, name: &str, d: &Option<usize>| match d {
            Some(d) => write!(f, "{name}:{d}"),
            None => f.write_str(name),
        };
        match self {
            Recipe::Lindenstrauss(d) => sized(f, "lindenstrauss", d),
            Recipe::Summing(d) => sized(f, "summing", d),
            Recipe::Difference(d) => sized(f, "difference", d),
            Recipe::Unit(d, space) => match d {
                Some(d) => write!(f, "unit:{d}:{space}"),
                None => f.write_str("unit"),
            },
            Recipe::Interleave(a, b) => write!(f, "interleave({a},{b})"),
            Recipe::BlockSum { base, dims, p } => {
                write!(f, "blocksum({base},dims={},p={})", format_dims(dims), format_exponent(*p))
            }
            Recipe::PqSplit { base, dims, p, q } => write!(
                f,
                "pqsplit({base},dims={},p={},q={})",
                format_dims(dims),
                format_exponent(*p),
                format_exponent(*q)
            ),
            Recipe::CanonicalSplit { n_max, p } => {
                write!(f, "canonical-split(n={n_max},p={})", format_exponent(*p))
            }
            Recipe::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

impl Recipe {
    /// Builds the truncation; `size` fills in a missing dimension.
    pub fn build_with(&self, size: Option<usize>) -> Result<BasisTruncation, RecipeError> {
        let need = |d: &Option<usize>| d.or(size).ok_or_else(|| RecipeError::MissingSize(self.to_string()));
        let b = match self {
            Recipe::Lindenstrauss(d) => bases::lindenstrauss(need(d)?)?,
            Recipe::Summing(d) => bases::summing(need(d)?)?,
            Recipe::Difference(d) => bases::difference(need(d)?)?,
            Recipe::Unit(d, space) => bases::unit_vector_system(need(d)?, space.clone())?,
            Recipe::Interleave(a, b) => bases::interleave(&a.build_with(size)?, &b.build_with(size)?)?,
            Recipe::BlockSum { base, dims, p } => {
                let max = *dims.iter().max().expect("dims are nonempty");
                bases::block_sum(&base.build_with(Some(max))?, dims, *p)?
            }
            Recipe::PqSplit { base, dims, p, q } => {
                let max = *dims.iter().max().expect("dims are nonempty");
                bases::half_split_sum(&base.build_with(Some(max))?, dims, *p, *q)?
            }
            Recipe::CanonicalSplit { n_max, p } => bases::canonical_split_instance(*n_max, *p)?,
            Recipe::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| RecipeError::Io { path: path.clone(), source })?;
                BasisTruncation::from_json(&text)?
            }
        };
        Ok(b)
    }

    /// The same primitive family at dimension `d`; `None` for combinations.
    pub fn resized(&self, d: usize) -> Option<Recipe> {
        match self {
            Recipe::Lindenstrauss(_) => Some(Recipe::Lindenstrauss(Some(d))),
            Recipe::Summing(_) => Some(Recipe::Summing(Some(d))),
            Recipe::Difference(_) => Some(Recipe::Difference(Some(d))),
            Recipe::Unit(_, space) => Some(Recipe::Unit(Some(d), space.clone())),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<BasisTruncation, RecipeError> {
        self.build_with(None)
    }
}
