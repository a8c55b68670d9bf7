//! POVM-valued predicates over a finite outcome set.
//!
//! Outcome sets are finite lists of labelled atoms. A predicate stores one
//! effect per atom; the effect of any subset is recomputed by summation,
//! so additivity holds by construction.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, hermitian_deviation, hs_inner, loewner_leq};
use crate::matrix::ComplexMatrix;
use crate::state::DensityState;
use crate::tolerance::ToleranceConfig;

/// Ordered, non-empty list of distinct outcome labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeSpace {
    atoms: Vec<String>,
}

impl OutcomeSpace {
    pub fn new<S: Into<String>>(atoms: impl IntoIterator<Item = S>) -> Result<Self> {
        let atoms: Vec<String> = atoms.into_iter().map(Into::into).collect();
        if atoms.is_empty() {
            return Err(Error::InvalidOutcomeSpace("no atoms".into()));
        }
        let mut seen = BTreeSet::new();
        for a in &atoms {
            if !seen.insert(a.as_str()) {
                return Err(Error::InvalidOutcomeSpace(format!("duplicate label `{a}`")));
            }
        }
        Ok(Self { atoms })
    }

    /// Atoms labelled "0", "1", ...
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()))
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.atoms
            .iter()
            .position(|a| a == label)
            .ok_or_else(|| Error::UnknownAtom(label.to_string()))
    }

    fn require_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::SpaceMismatch {
                left: self.atoms.clone(),
                right: other.atoms.clone(),
            });
        }
        Ok(())
    }
}

/// A quantum predicate: one effect per atom, all of the same dimension.
///
/// Construction only checks the shape. Positivity and `Σ F ⪯ I` are
/// reported by [`validate_predicate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    space: OutcomeSpace,
    effects: Vec<ComplexMatrix>,
}

impl Predicate {
    pub fn new(space: OutcomeSpace, effects: Vec<ComplexMatrix>) -> Result<Self> {
        if effects.len() != space.len() {
            return Err(Error::InvalidPredicate(vec![format!(
                "{} atoms but {} effects",
                space.len(),
                effects.len()
            )]));
        }
        let dim = effects[0].dim();
        if let Some(e) = effects.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: e.dim(),
            });
        }
        Ok(Self { space, effects })
    }

    /// Predicate on atoms "0", "1", ... in order.
    pub fn from_effects(effects: Vec<ComplexMatrix>) -> Result<Self> {
        Self::new(OutcomeSpace::numbered(effects.len())?, effects)
    }

    /// The projective measurement in the computational basis.
    pub fn computational_basis(dim: usize) -> Self {
        let effects = (0..dim).map(|k| ComplexMatrix::basis_projector(dim, k)).collect();
        Self::from_effects(effects).expect("dim >= 1")
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn effect(&self, label: &str) -> Result<&ComplexMatrix> {
        Ok(&self.effects[self.space.index_of(label)?])
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    /// F_Σ, the sum of all effects.
    pub fn total_effect(&self) -> ComplexMatrix {
        self.effects
            .iter()
            .skip(1)
            .fold(self.effects[0].clone(), |acc, e| &acc + e)
    }

    /// Same outcome space, effects transformed atom by atom.
    pub fn map_effects(&self, f: impl FnMut(&ComplexMatrix) -> Result<ComplexMatrix>) -> Result<Self> {
        let effects = self.effects.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(self.space.clone(), effects)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            space: self.space.clone(),
            effects: self.effects.iter().map(|e| e.scale(s)).collect(),
        }
    }

    /// Copy with the effect of atom `index` replaced.
    pub fn with_effect(&self, index: usize, effect: ComplexMatrix) -> Result<Self> {
        let mut effects = self.effects.clone();
        if index >= effects.len() {
            return Err(Error::OutOfRange(format!("atom index {index}")));
        }
        effects[index] = effect;
        Self::new(self.space.clone(), effects)
    }

    /// Largest entrywise difference over all atoms.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.require_compatible(other)?;
        self.effects
            .iter()
            .zip(&other.effects)
            .try_fold(0.0f64, |acc, (a, b)| Ok(acc.max(a.max_abs_diff(b)?)))
    }

    pub(crate) fn require_compatible(&self, other: &Self) -> Result<()> {
        self.space.require_same(&other.space)?;
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EffectNotHermitian { atom: String, deviation: f64 },
    EffectNotPsd { atom: String, min_eigenvalue: f64 },
    SumExceedsIdentity { max_eigenvalue: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::EffectNotHermitian { atom, deviation } => {
                write!(f, "effect `{atom}` not hermitian (deviation {deviation:e})")
            }
            Violation::EffectNotPsd {
                atom,
                min_eigenvalue,
            } => write!(f, "effect `{atom}` not PSD (min eigenvalue {min_eigenvalue})"),
            Violation::SumExceedsIdentity { max_eigenvalue } => write!(
                f,
                "F_Σ ⪯ I fails (max eigenvalue of summed effect {max_eigenvalue})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub complete: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.valid
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

/// Checks every effect is PSD and the summed effect is below the identity.
pub fn validate_predicate(p: &Predicate, tol: &ToleranceConfig) -> Result<ValidationReport> {
    let mut violations = Vec::new();
    for (atom, e) in p.space.atoms().iter().zip(&p.effects) {
        let deviation = hermitian_deviation(e);
        if deviation > tol.residual_tol {
            violations.push(Violation::EffectNotHermitian {
                atom: atom.clone(),
                deviation,
            });
            continue;
        }
        let min_eigenvalue = eigh(e)?.min();
        if min_eigenvalue < -tol.eig_tol {
            violations.push(Violation::EffectNotPsd {
                atom: atom.clone(),
                min_eigenvalue,
            });
        }
    }
    let total = p.total_effect();
    if hermitian_deviation(&total) <= tol.residual_tol {
        let max_eigenvalue = eigh(&total)?.max();
        if max_eigenvalue > 1.0 + tol.eig_tol {
            violations.push(Violation::SumExceedsIdentity { max_eigenvalue });
        }
    }
    let valid = violations.is_empty();
    Ok(ValidationReport {
        valid,
        complete: valid && is_complete(p, tol),
        violations,
    })
}

/// Errors with the list of violations unless `p` is valid.
pub fn require_valid(p: &Predicate, tol: &ToleranceConfig) -> Result<()> {
    let report = validate_predicate(p, tol)?;
    if !report.valid {
        return Err(Error::InvalidPredicate(report.messages()));
    }
    Ok(())
}

/// F_A for a set A of atom labels; the empty set gives the zero operator.
pub fn effect_of_set<S: AsRef<str>>(p: &Predicate, subset: &[S]) -> Result<ComplexMatrix> {
    let indices = subset
        .iter()
        .map(|l| p.space.index_of(l.as_ref()))
        .collect::<Result<BTreeSet<_>>>()?;
    Ok(indices
        .into_iter()
        .fold(ComplexMatrix::zeros(p.dim()), |acc, i| &acc + &p.effects[i]))
}

/// F_Σ = I within `residual_tol`, entrywise.
pub fn is_complete(p: &Predicate, tol: &ToleranceConfig) -> bool {
    p.total_effect()
        .max_abs_diff(&ComplexMatrix::identity(p.dim()))
        .map(|d| d <= tol.residual_tol)
        .unwrap_or(false)
}

/// Atomwise Loewner order. Checking atoms is enough: if every atom gap is
/// PSD, every sum of atom gaps is PSD.
pub fn predicate_leq(f: &Predicate, g: &Predicate, tol: &ToleranceConfig) -> Result<bool> {
    f.require_compatible(g)?;
    for (a, b) in f.effects.iter().zip(&g.effects) {
        if !loewner_leq(a, b, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Order through satisfiability: for every atom, the largest possible
/// excess sat(ρ, F)(A) − sat(ρ, G)(A) over all states ρ must be ≤ eig_tol.
/// That supremum is the top eigenvalue of F_A − G_A, attained at the
/// corresponding eigenvector.
pub fn s_leq(f: &Predicate, g: &Predicate, tol: &ToleranceConfig) -> Result<bool> {
    f.require_compatible(g)?;
    for (a, b) in f.effects.iter().zip(&g.effects) {
        for m in [a, b] {
            let deviation = hermitian_deviation(m);
            if deviation > tol.residual_tol {
                return Err(Error::NotHermitian { deviation });
            }
        }
        if eigh(&(a - b))?.max() > tol.eig_tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A state separating two predicates on one atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderWitness {
    pub atom: String,
    pub state: DensityState,
    /// Tr(ρ F_atom)
    pub lhs: f64,
    /// Tr(ρ G_atom)
    pub rhs: f64,
}

/// When `f ⪯ g` fails, the pure state on the eigenvector of the most
/// negative eigenvalue of `G_i − F_i` for the worst atom `i`.
pub fn order_witness(
    f: &Predicate,
    g: &Predicate,
    tol: &ToleranceConfig,
) -> Result<Option<OrderWitness>> {
    f.require_compatible(g)?;
    let mut worst: Option<(usize, f64, Vec<Complex64>)> = None;
    for (i, (a, b)) in f.effects.iter().zip(&g.effects).enumerate() {
        let eig = eigh(&(b - a))?;
        let gap = eig.min();
        if gap < -tol.eig_tol && worst.as_ref().is_none_or(|w| gap < w.1) {
            worst = Some((i, gap, eig.vectors[0].clone()));
        }
    }
    let Some((i, _, v)) = worst else {
        return Ok(None);
    };
    let state = DensityState::pure(&v)?;
    let lhs = expectation(state.matrix(), &f.effects[i]);
    let rhs = expectation(state.matrix(), &g.effects[i]);
    Ok(Some(OrderWitness {
        atom: f.space.atoms[i].clone(),
        state,
        lhs,
        rhs,
    }))
}

/// Re Tr(ρ A) for hermitian ρ and A.
pub(crate) fn expectation(rho: &ComplexMatrix, a: &ComplexMatrix) -> f64 {
    // ρ is hermitian so Tr(ρ†A) = Tr(ρA)
    hs_inner(rho, a).expect("equal dims").re
}

/// The satisfiability measure A ↦ Tr(ρ F_A), stored per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct SatMeasure {
    space: OutcomeSpace,
    weights: Vec<f64>,
    satisfied: bool,
}

impl SatMeasure {
    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, label: &str) -> Result<f64> {
        Ok(self.weights[self.space.index_of(label)?])
    }

    /// All weights non-negative and at least one above `residual_tol`.
    pub fn satisfied(&self) -> bool {
        self.satisfied
    }

    /// Mass of a set of atoms.
    pub fn mass<S: AsRef<str>>(&self, subset: &[S]) -> Result<f64> {
        let indices = subset
            .iter()
            .map(|l| self.space.index_of(l.as_ref()))
            .collect::<Result<BTreeSet<_>>>()?;
        Ok(indices.into_iter().map(|i| self.weights[i]).sum())
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

pub fn sat(rho: &DensityState, p: &Predicate, tol: &ToleranceConfig) -> Result<SatMeasure> {
    if rho.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: rho.dim(),
        });
    }
    let weights: Vec<f64> = p
        .effects
        .iter()
        .map(|e| expectation(rho.matrix(), e))
        .collect();
    let satisfied =
        weights.iter().all(|&w| w >= -tol.residual_tol) && weights.iter().any(|&w| w > tol.residual_tol);
    Ok(SatMeasure {
        space: p.space.clone(),
        weights,
        satisfied,
    })
}

/// Supremum of a finite ⪯-monotone chain.
///
/// Consecutive elements are checked; on a monotone finite chain the least
/// upper bound is the last element.
pub fn chain_sup(chain: &[Predicate], tol: &ToleranceConfig) -> Result<Predicate> {
    let first = chain.first().ok_or(Error::EmptyChain)?;
    for (index, pair) in chain.windows(2).enumerate() {
        first.require_compatible(&pair[1])?;
        if !predicate_leq(&pair[0], &pair[1], tol)? {
            return Err(Error::ChainNotMonotone { index: index + 1 });
        }
    }
    Ok(chain.last().expect("non-empty").clone())
}

impl Serialize for Predicate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Effects<'a>(&'a Predicate);
        impl Serialize for Effects<'_> {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut map = s.serialize_map(Some(self.0.effects.len()))?;
                for (a, e) in self.0.space.atoms.iter().zip(&self.0.effects) {
                    map.serialize_entry(a, e)?;
                }
                map.end()
            }
        }
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("atoms", &self.space.atoms)?;
        map.serialize_entry("effects", &Effects(self))?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for Predicate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;

        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            atoms: Vec<String>,
            effects: serde_json::Map<String, serde_json::Value>,
        }
        let raw = Raw::deserialize(d)?;
        let space = OutcomeSpace::new(raw.atoms).map_err(D::Error::custom)?;
        if let Some(extra) = raw.effects.keys().find(|k| space.index_of(k).is_err()) {
            return Err(D::Error::custom(format!("effect for unknown atom `{extra}`")));
        }
        let effects = space
            .atoms()
            .iter()
            .map(|a| {
                let v = raw
                    .effects
                    .get(a)
                    .ok_or_else(|| D::Error::custom(format!("missing effect for atom `{a}`")))?;
                ComplexMatrix::deserialize(v).map_err(D::Error::custom)
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Predicate::new(space, effects).map_err(D::Error::custom)
    }
}

impl Serialize for SatMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        struct Weights<'a>(&'a SatMeasure);
        impl Serialize for Weights<'_> {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                let mut map = s.serialize_map(Some(self.0.weights.len()))?;
                for (a, w) in self.0.space.atoms.iter().zip(&self.0.weights) {
                    map.serialize_entry(a, w)?;
                }
                map.end()
            }
        }
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("weights", &Weights(self))?;
        map.serialize_entry("satisfied", &self.satisfied)?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for SatMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;

        #[derive(Deserialize)]
        struct Raw {
            weights: serde_json::Map<String, serde_json::Value>,
            satisfied: bool,
        }
        let raw = Raw::deserialize(d)?;
        let space = OutcomeSpace::new(raw.weights.keys().cloned()).map_err(D::Error::custom)?;
        let weights = raw
            .weights
            .values()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| D::Error::custom("weight is not a number"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(SatMeasure {
            space,
            weights,
            satisfied: raw.satisfied,
        })
    }
}
