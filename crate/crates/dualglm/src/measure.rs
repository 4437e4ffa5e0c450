//! Finite atomic signed measures with Hahn/Jordan decomposition.
//!
//! Atoms are `(label, weight)` pairs with extended-real weights. At most one
//! sign of infinity may appear across the whole measure; infinities are a
//! tagged variant of [`Weight`], never a floating-point overflow sentinel.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Extended real weight of one atom.
///
/// Serializes as a plain JSON number, or the strings `"inf"` / `"-inf"`
/// for the infinite variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    Finite(f64),
    PosInf,
    NegInf,
}

impl Serialize for Weight {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Weight::Finite(v) => s.serialize_f64(*v),
            Weight::PosInf => s.serialize_str("inf"),
            Weight::NegInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) if v.is_finite() => Ok(Weight::Finite(v)),
            Repr::Num(v) => Err(serde::de::Error::custom(format!(
                "non-finite numeric weight {v}; use \"inf\" or \"-inf\""
            ))),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl Weight {
    pub fn is_finite(self) -> bool {
        matches!(self, Weight::Finite(_))
    }

    /// Finite value, or `None` for either infinity.
    pub fn finite(self) -> Option<f64> {
        match self {
            Weight::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Value as an IEEE double (infinities map to `±INFINITY`).
    pub fn as_f64(self) -> f64 {
        match self {
            Weight::Finite(v) => v,
            Weight::PosInf => f64::INFINITY,
            Weight::NegInf => f64::NEG_INFINITY,
        }
    }

    fn is_nonnegative(self) -> bool {
        match self {
            Weight::Finite(v) => v >= 0.0,
            Weight::PosInf => true,
            Weight::NegInf => false,
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Finite(v) => write!(f, "{v}"),
            Weight::PosInf => write!(f, "inf"),
            Weight::NegInf => write!(f, "-inf"),
        }
    }
}

impl FromStr for Weight {
    type Err = MeasureError;

    fn from_str(s: &str) -> Result<Self, MeasureError> {
        match s.trim() {
            "inf" | "+inf" => Ok(Weight::PosInf),
            "-inf" => Ok(Weight::NegInf),
            t => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| MeasureError::ParseWeight(t.to_string()))?;
                if v.is_nan() || v.is_infinite() {
                    return Err(MeasureError::ParseWeight(t.to_string()));
                }
                Ok(Weight::Finite(v))
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("signed measure carries both +inf and -inf weights")]
    BothInfinities,
    #[error("measure must have at least one atom")]
    Empty,
    #[error("duplicate atom label {0:?}")]
    DuplicateLabel(String),
    #[error("atom weight is NaN for label {0:?}")]
    NanWeight(String),
    #[error("cannot parse weight {0:?}")]
    ParseWeight(String),
    #[error("normalization undefined: total variation is {0}")]
    NormalizationUndefined(String),
    #[error("malformed measure line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Finite atomic signed measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedMeasure {
    atoms: Vec<(String, Weight)>,
}

impl SignedMeasure {
    pub fn new<L: Into<String>>(atoms: Vec<(L, Weight)>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        let atoms: Vec<(String, Weight)> =
            atoms.into_iter().map(|(l, w)| (l.into(), w)).collect();
        let mut seen = BTreeSet::new();
        let mut has_pos_inf = false;
        let mut has_neg_inf = false;
        for (label, w) in &atoms {
            if !seen.insert(label.clone()) {
                return Err(MeasureError::DuplicateLabel(label.clone()));
            }
            match w {
                Weight::PosInf => has_pos_inf = true,
                Weight::NegInf => has_neg_inf = true,
                Weight::Finite(v) if v.is_nan() => {
                    return Err(MeasureError::NanWeight(label.clone()))
                }
                _ => {}
            }
        }
        if has_pos_inf && has_neg_inf {
            return Err(MeasureError::BothInfinities);
        }
        Ok(Self { atoms })
    }

    /// Convenience constructor from finite `(label, weight)` pairs.
    pub fn from_finite<L: Into<String>>(atoms: Vec<(L, f64)>) -> Result<Self, MeasureError> {
        Self::new(
            atoms
                .into_iter()
                .map(|(l, w)| (l, Weight::Finite(w)))
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[(String, Weight)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Measure of an atom index subset (finite atoms only; infinities
    /// propagate through `as_f64`).
    pub fn subset_measure(&self, indices: &BTreeSet<usize>) -> f64 {
        indices.iter().map(|&i| self.atoms[i].1.as_f64()).sum()
    }

    /// Parse the plain-text atom format: one atom per line,
    /// `label<TAB>weight`, weight `inf`/`-inf` allowed.
    pub fn from_text(text: &str) -> Result<Self, MeasureError> {
        let mut atoms = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (label, weight) = line.split_once('\t').ok_or(MeasureError::MalformedLine {
                line: i + 1,
                reason: "expected label<TAB>weight".to_string(),
            })?;
            let w: Weight = weight.parse().map_err(|e| MeasureError::MalformedLine {
                line: i + 1,
                reason: format!("{e}"),
            })?;
            atoms.push((label.to_string(), w));
        }
        Self::new(atoms)
    }

    pub fn from_file(path: &Path) -> Result<Self, MeasureError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (label, w) in &self.atoms {
            out.push_str(&format!("{label}\t{w}\n"));
        }
        out
    }
}

/// Partition of atom indices into a positive and a negative set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HahnDecomposition {
    pub positive_set: BTreeSet<usize>,
    pub negative_set: BTreeSet<usize>,
}

/// Nonnegative atomic measure; weights are finite reals or `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<(String, Weight)>,
}

impl AtomicMeasure {
    pub fn total(&self) -> Weight {
        let mut acc = 0.0;
        for (_, w) in &self.atoms {
            match w {
                Weight::Finite(v) => acc += v,
                Weight::PosInf => return Weight::PosInf,
                Weight::NegInf => unreachable!("nonnegative measure"),
            }
        }
        Weight::Finite(acc)
    }

    pub fn weight_of(&self, label: &str) -> Option<Weight> {
        self.atoms
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, w)| *w)
    }
}

/// Jordan pair `ν = ν⁺ − ν⁻` of mutually singular nonnegative measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanPair {
    pub nu_plus: AtomicMeasure,
    pub nu_minus: AtomicMeasure,
}

/// Atomic probability measure: nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMeasure {
    pub atoms: Vec<(String, f64)>,
    pub total: f64,
}

/// Split atoms by weight sign. Zero-weight atoms tie-break into the
/// positive set so the partition is deterministic.
pub fn hahn_decompose(m: &SignedMeasure) -> HahnDecomposition {
    let mut positive_set = BTreeSet::new();
    let mut negative_set = BTreeSet::new();
    for (i, (_, w)) in m.atoms().iter().enumerate() {
        if w.is_nonnegative() {
            positive_set.insert(i);
        } else {
            negative_set.insert(i);
        }
    }
    HahnDecomposition {
        positive_set,
        negative_set,
    }
}

/// `ν⁺(a) = max(w, 0)`, `ν⁻(a) = max(−w, 0)`; the pair is mutually singular.
pub fn jordan_decompose(m: &SignedMeasure) -> JordanPair {
    let mut nu_plus = Vec::with_capacity(m.len());
    let mut nu_minus = Vec::with_capacity(m.len());
    for (label, w) in m.atoms() {
        let (p, n) = match w {
            Weight::Finite(v) => (Weight::Finite(v.max(0.0)), Weight::Finite((-v).max(0.0))),
            Weight::PosInf => (Weight::PosInf, Weight::Finite(0.0)),
            Weight::NegInf => (Weight::Finite(0.0), Weight::PosInf),
        };
        nu_plus.push((label.clone(), p));
        nu_minus.push((label.clone(), n));
    }
    JordanPair {
        nu_plus: AtomicMeasure { atoms: nu_plus },
        nu_minus: AtomicMeasure { atoms: nu_minus },
    }
}

/// Total variation `Σ |w|`; `+inf` if any atom is infinite.
pub fn total_variation(m: &SignedMeasure) -> Weight {
    let mut acc = 0.0;
    for (_, w) in m.atoms() {
        match w {
            Weight::Finite(v) => acc += v.abs(),
            Weight::PosInf | Weight::NegInf => return Weight::PosInf,
        }
    }
    Weight::Finite(acc)
}

/// Normalize by total variation into a probability measure.
pub fn normalize(m: &SignedMeasure) -> Result<ProbabilityMeasure, MeasureError> {
    let tv = match total_variation(m) {
        Weight::Finite(v) if v > 0.0 => v,
        Weight::Finite(_) => {
            return Err(MeasureError::NormalizationUndefined("0".to_string()))
        }
        _ => return Err(MeasureError::NormalizationUndefined("inf".to_string())),
    };
    let atoms: Vec<(String, f64)> = m
        .atoms()
        .iter()
        .map(|(l, w)| (l.clone(), w.as_f64().abs() / tv))
        .collect();
    let total = atoms.iter().map(|(_, w)| w).sum();
    Ok(ProbabilityMeasure { atoms, total })
}

/// Maximal index set of finite-weight entries; the sum over it is finite.
pub fn finite_subcover(weights: &[Weight]) -> BTreeSet<usize> {
    weights
        .iter()
        .enumerate()
        .filter(|(_, w)| w.is_finite())
        .map(|(i, _)| i)
        .collect()
}
