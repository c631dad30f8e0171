//! Certificates for lower bounds: a coefficient vector and an index set.

use serde::{Deserialize, Serialize};

use crate::bases::BasisTruncation;

/// Norms below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

/// Which ratio a witness certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// `‖S_A f‖ / ‖f‖` with `supp f ⊆ [0, m)`.
    Conditionality,
    /// `‖S_A f‖ / ‖f‖` with `|A| ≤ m`.
    Projection,
    /// `‖f - S_A f‖ / ‖f‖` with `A` a greedy set of `f`.
    QuasiGreedy,
    /// `‖f - S_A f‖ / ‖f - S_B f‖` with `A` greedy and `|B| ≤ |A|`.
    AlmostGreedy,
}

/// How a witness was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Oracle,
    Template,
    Random,
    Grid,
    Transfer,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::Template => "template",
            Method::Random => "random",
            Method::Grid => "grid",
            Method::Transfer => "transfer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub coeffs: Vec<f64>,
    /// Zero-based, sorted.
    #[serde(rename = "A")]
    pub set: Vec<usize>,
    /// `None` encodes an unbounded ratio (vanishing denominator).
    #[serde(with = "ratio_repr")]
    pub ratio: f64,
    pub kind: WitnessKind,
    pub method: Method,
    /// Comparison set `B` of an almost-greedy witness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_set: Option<Vec<usize>>,
}

mod ratio_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &f64, s: S) -> Result<S::Ok, S::Error> {
        if r.is_finite() {
            s.serialize_f64(*r)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Witness {
    /// Builds a witness and computes its ratio from scratch.
    pub fn evaluate(
        b: &BasisTruncation,
        coeffs: Vec<f64>,
        mut set: Vec<usize>,
        kind: WitnessKind,
        method: Method,
    ) -> Witness {
        set.sort_unstable();
        set.dedup();
        let mut w = Witness { coeffs, set, ratio: 0.0, kind, method, reference_set: None };
        w.ratio = w.recompute(b);
        w
    }

    /// The ratio implied by `(coeffs, A)` on `b`, evaluated afresh.
    pub fn recompute(&self, b: &BasisTruncation) -> f64 {
        let f = b.synthesize(&self.coeffs);
        let mut g = vec![0.0; b.ambient_dim()];
        b.synthesize_subset_into(&self.coeffs, &self.set, &mut g);
        match self.kind {
            WitnessKind::Conditionality | WitnessKind::Projection => {
                safe_ratio(b.norm(&g), b.norm(&f))
            }
            WitnessKind::QuasiGreedy => {
                let r: Vec<f64> = f.iter().zip(&g).map(|(x, y)| x - y).collect();
                safe_ratio(b.norm(&r), b.norm(&f))
            }
            WitnessKind::AlmostGreedy => {
                let r: Vec<f64> = f.iter().zip(&g).map(|(x, y)| x - y).collect();
                let mut h = vec![0.0; b.ambient_dim()];
                let reference = self.reference_set.as_deref().unwrap_or(&[]);
                b.synthesize_subset_into(&self.coeffs, reference, &mut h);
                let s: Vec<f64> = f.iter().zip(&h).map(|(x, y)| x - y).collect();
                let (num, den) = (b.norm(&r), b.norm(&s));
                if den < ZERO_NORM {
                    if num < ZERO_NORM {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    num / den
                }
            }
        }
    }

    /// True when the stored ratio matches a fresh evaluation to `1e-12`
    /// relative.
    pub fn verify(&self, b: &BasisTruncation) -> bool {
        let r = self.recompute(b);
        if r.is_infinite() || self.ratio.is_infinite() {
            return r == self.ratio;
        }
        (r - self.ratio).abs() <= 1e-12 * self.ratio.abs().max(1.0)
    }

    /// Largest coefficient index in use plus one.
    pub fn support_end(&self) -> usize {
        self.coeffs.iter().rposition(|x| *x != 0.0).map_or(0, |i| i + 1)
    }

    /// Positive rescaling of the coefficients; the ratio is unchanged.
    pub fn scaled(&self, b: &BasisTruncation, t: f64) -> Witness {
        let coeffs = self.coeffs.iter().map(|x| x * t).collect();
        let mut w = Witness { coeffs, ..self.clone() };
        w.ratio = w.recompute(b);
        w
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("witnesses serialize")
    }
}

pub(crate) fn safe_ratio(num: f64, den: f64) -> f64 {
    if den < ZERO_NORM {
        0.0
    } else {
        num / den
    }
}
