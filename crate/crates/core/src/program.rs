//! Quantum programs: linear maps on d×d operators.
//!
//! The canonical form is the d²×d² superoperator acting on column-stacked
//! matrices, `vec(X)[j·d + i] = X[i, j]` (so `vec(|i⟩⟨j|) = e_j ⊗ e_i`).
//! Kraus operators are kept as a second view when the program was built
//! from them. Positive maps that are not completely positive (the
//! transpose, for instance) have no Kraus form, which is why the
//! superoperator is the carrier.
//!
//! Construction does not require trace preservation except from a Choi
//! matrix; [`QuantumProgram::is_trace_preserving`] audits it and the
//! weakest-precondition transformer refuses programs that fail it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, hermitian_deviation, is_psd};
use crate::matrix::{ComplexMatrix, I, ONE, ZERO};
use crate::sampling::{haar_pure_state, rng_from_seed};
use crate::state::DensityState;
use crate::tolerance::ToleranceConfig;

/// Column-stacking vectorization.
pub fn vectorize(x: &ComplexMatrix) -> Vec<Complex64> {
    let d = x.dim();
    (0..d * d).map(|k| x.get(k % d, k / d)).collect()
}

/// Inverse of [`vectorize`]; `v.len()` must be a perfect square.
pub fn devectorize(v: &[Complex64]) -> Result<ComplexMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::InvalidMatrix(format!(
            "vector of length {} is not a vectorized square matrix",
            v.len()
        )));
    }
    ComplexMatrix::from_fn(d, |i, j| v[j * d + i])
}

/// Superoperator of X ↦ K X K†, i.e. conj(K) ⊗ K.
pub fn conjugation_superop(k: &ComplexMatrix) -> ComplexMatrix {
    k.conj().kron(k)
}

fn pauli() -> [ComplexMatrix; 3] {
    [
        ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap(),
        ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap(),
        ComplexMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]]).unwrap(),
    ]
}

/// Programs available by name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum NamedProgram {
    Identity,
    Transpose,
    /// ρ ↦ (1 − p)ρ + p·Tr(ρ)·I/d
    Depolarizing { p: f64 },
    /// Qubit amplitude damping with decay probability γ.
    AmplitudeDamping {
        #[serde(alias = "γ")]
        gamma: f64,
    },
}

impl NamedProgram {
    fn label(&self) -> String {
        match self {
            NamedProgram::Identity => "identity".into(),
            NamedProgram::Transpose => "transpose".into(),
            NamedProgram::Depolarizing { p } => format!("depolarizing({p})"),
            NamedProgram::AmplitudeDamping { gamma } => format!("amplitude_damping({gamma})"),
        }
    }
}

/// Where a program comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ProgramSource {
    Kraus(Vec<ComplexMatrix>),
    Unitary(ComplexMatrix),
    Choi(ComplexMatrix),
    Super(ComplexMatrix),
    Named(NamedProgram),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumProgram {
    dim: usize,
    superop: ComplexMatrix,
    kraus: Option<Vec<ComplexMatrix>>,
    label: String,
}

/// Builds a program on d-dimensional operators.
pub fn build_program(source: ProgramSource, dim: usize, tol: &ToleranceConfig) -> Result<QuantumProgram> {
    if dim == 0 {
        return Err(Error::InvalidProgram("dimension must be at least 1".into()));
    }
    match source {
        ProgramSource::Kraus(ops) => QuantumProgram::from_kraus(ops, dim, "kraus"),
        ProgramSource::Unitary(u) => {
            let dev = (&u.adjoint() * &u).max_abs_diff(&ComplexMatrix::identity(u.dim()))?;
            if dev > tol.residual_tol {
                return Err(Error::InvalidProgram(format!(
                    "matrix is not unitary (max |U†U - I| = {dev:e})"
                )));
            }
            QuantumProgram::from_kraus(vec![u], dim, "unitary")
        }
        ProgramSource::Super(s) => QuantumProgram::from_superop(s, dim, "super"),
        ProgramSource::Choi(j) => QuantumProgram::from_choi(&j, dim, tol),
        ProgramSource::Named(n) => QuantumProgram::named(n, dim),
    }
}

impl QuantumProgram {
    pub fn from_superop(superop: ComplexMatrix, dim: usize, label: impl Into<String>) -> Result<Self> {
        if superop.dim() != dim * dim {
            return Err(Error::InvalidProgram(format!(
                "superoperator is {0}x{0}, expected {1}x{1}",
                superop.dim(),
                dim * dim
            )));
        }
        Ok(Self {
            dim,
            superop,
            kraus: None,
            label: label.into(),
        })
    }

    pub fn from_kraus(ops: Vec<ComplexMatrix>, dim: usize, label: impl Into<String>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidProgram("no Kraus operators".into()));
        }
        if let Some(k) = ops.iter().find(|k| k.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: k.dim(),
            });
        }
        let superop = ops
            .iter()
            .map(conjugation_superop)
            .reduce(|a, b| &a + &b)
            .expect("non-empty");
        Ok(Self {
            dim,
            superop,
            kraus: Some(ops),
            label: label.into(),
        })
    }

    /// Inverse of [`QuantumProgram::to_choi`]. Rejects Choi matrices whose
    /// output partial trace is not the identity.
    pub fn from_choi(choi: &ComplexMatrix, dim: usize, tol: &ToleranceConfig) -> Result<Self> {
        let d = dim;
        if choi.dim() != d * d {
            return Err(Error::InvalidProgram(format!(
                "Choi matrix is {0}x{0}, expected {1}x{1}",
                choi.dim(),
                d * d
            )));
        }
        let partial = ComplexMatrix::from_fn(d, |i, j| (0..d).map(|a| choi.get(a * d + i, a * d + j)).sum())?;
        let deviation = partial.max_abs_diff(&ComplexMatrix::identity(d))?;
        if deviation > tol.residual_tol {
            return Err(Error::NotTracePreserving { deviation });
        }
        // S[b·d + a, j·d + i] = J[a·d + i, b·d + j]
        let superop = ComplexMatrix::from_fn(d * d, |row, col| {
            let (b, a) = (row / d, row % d);
            let (j, i) = (col / d, col % d);
            choi.get(a * d + i, b * d + j)
        })?;
        Self::from_superop(superop, d, "choi")
    }

    pub fn named(name: NamedProgram, dim: usize) -> Result<Self> {
        let label = name.label();
        let d = dim;
        match name {
            NamedProgram::Identity => Self::from_kraus(vec![ComplexMatrix::identity(d)], d, label),
            NamedProgram::Transpose => {
                let superop = ComplexMatrix::from_fn(d * d, |row, col| {
                    if row == (col % d) * d + col / d {
                        ONE
                    } else {
                        ZERO
                    }
                })?;
                Self::from_superop(superop, d, label)
            }
            NamedProgram::Depolarizing { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::OutOfRange(format!("depolarizing p = {p} outside [0, 1]")));
                }
                if d == 2 {
                    let mut ops = vec![ComplexMatrix::identity(2).scale((1.0 - 0.75 * p).sqrt())];
                    ops.extend(pauli().iter().map(|s| s.scale((p / 4.0).sqrt())));
                    return Self::from_kraus(ops, d, label);
                }
                let vid = vectorize(&ComplexMatrix::identity(d));
                let superop = ComplexMatrix::from_fn(d * d, |row, col| {
                    let keep = if row == col { 1.0 - p } else { 0.0 };
                    Complex64::new(keep, 0.0) + vid[row] * vid[col] * (p / d as f64)
                })?;
                Self::from_superop(superop, d, label)
            }
            NamedProgram::AmplitudeDamping { gamma } => {
                if d != 2 {
                    return Err(Error::InvalidProgram(format!(
                        "amplitude damping acts on qubits, got dim {d}"
                    )));
                }
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(Error::OutOfRange(format!(
                        "amplitude damping gamma = {gamma} outside [0, 1]"
                    )));
                }
                let k0 = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, (1.0 - gamma).sqrt()]])?;
                let k1 = ComplexMatrix::from_real_rows(&[&[0.0, gamma.sqrt()], &[0.0, 0.0]])?;
                Self::from_kraus(vec![k0, k1], d, label)
            }
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::named(NamedProgram::Identity, dim).expect("valid dim")
    }

    pub fn transpose(dim: usize) -> Self {
        Self::named(NamedProgram::Transpose, dim).expect("valid dim")
    }

    pub fn depolarizing(dim: usize, p: f64) -> Result<Self> {
        Self::named(NamedProgram::Depolarizing { p }, dim)
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        Self::named(NamedProgram::AmplitudeDamping { gamma }, 2)
    }

    pub fn unitary(u: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let d = u.dim();
        build_program(ProgramSource::Unitary(u), d, tol)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn superop(&self) -> &ComplexMatrix {
        &self.superop
    }

    pub fn kraus(&self) -> Option<&[ComplexMatrix]> {
        self.kraus.as_deref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    fn require_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: dim,
            });
        }
        Ok(())
    }

    /// The linear action on an arbitrary operator, through the superoperator.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.require_dim(x.dim())?;
        devectorize(&self.superop.mul_vec(&vectorize(x)))
    }

    /// The linear action through the Kraus view, Σ K X K†.
    pub fn apply_kraus(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.require_dim(x.dim())?;
        let ops = self.kraus.as_ref().ok_or(Error::NoKraus)?;
        Ok(ops
            .iter()
            .map(|k| &(k * x) * &k.adjoint())
            .reduce(|a, b| &a + &b)
            .expect("non-empty"))
    }

    /// Evolves a density state. Fails when the image leaves the state
    /// space: trace off by more than `residual_tol`, or an eigenvalue below
    /// −10·eig_tol (a non-positive map at work).
    pub fn apply(&self, rho: &DensityState, tol: &ToleranceConfig) -> Result<DensityState> {
        let out = self.apply_matrix(rho.matrix())?;
        let deviation = (out.trace() - ONE).norm();
        if deviation > tol.residual_tol {
            return Err(Error::NotTracePreserving { deviation });
        }
        let herm = hermitian_deviation(&out);
        if herm > tol.residual_tol {
            return Err(Error::InvalidState(format!(
                "image is not hermitian (deviation {herm:e})"
            )));
        }
        let min_eigenvalue = eigh(&out)?.min();
        if min_eigenvalue < -10.0 * tol.eig_tol {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(DensityState::from_trusted(out))
    }

    /// Hilbert–Schmidt adjoint C*, defined by Tr(C*(F)† ρ) = Tr(F† C(ρ)).
    /// Its superoperator is the conjugate transpose of this one; a Kraus
    /// view {K} becomes {K†}.
    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            superop: self.superop.adjoint(),
            kraus: self
                .kraus
                .as_ref()
                .map(|ops| ops.iter().map(ComplexMatrix::adjoint).collect()),
            label: format!("adjoint({})", self.label),
        }
    }

    /// max |C*(I) − I|; zero exactly for trace-preserving maps.
    pub fn trace_deviation(&self) -> f64 {
        let id = ComplexMatrix::identity(self.dim);
        self.adjoint()
            .apply_matrix(&id)
            .and_then(|u| u.max_abs_diff(&id))
            .expect("dimensions agree")
    }

    /// Trace preservation, decided as unitality of the dual map.
    pub fn is_trace_preserving(&self, tol: &ToleranceConfig) -> bool {
        self.trace_deviation() <= tol.residual_tol
    }

    /// J(C) = Σᵢⱼ C(|i⟩⟨j|) ⊗ |i⟩⟨j|.
    pub fn to_choi(&self) -> ComplexMatrix {
        let d = self.dim;
        ComplexMatrix::from_fn(d * d, |row, col| {
            let (a, i) = (row / d, row % d);
            let (b, j) = (col / d, col % d);
            self.superop.get(b * d + a, j * d + i)
        })
        .expect("superoperator entries are finite")
    }

    pub fn choi_eigenvalues(&self) -> Result<Vec<f64>> {
        let choi = self.to_choi();
        let deviation = hermitian_deviation(&choi);
        if deviation > 1e-9 {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(eigh(&choi)?.values)
    }

    /// CP iff the Choi matrix is PSD.
    pub fn is_completely_positive(&self, tol: &ToleranceConfig) -> Result<bool> {
        is_psd(&self.to_choi(), tol)
    }

    /// Three-valued positivity audit; see [`PositivityVerdict`].
    ///
    /// Non-CP maps are tested on the computational and Fourier bases, then
    /// on `sample_count` Haar-random pure states drawn from `seed`.
    pub fn is_positive_sampled(&self, tol: &ToleranceConfig, seed: u64) -> Result<PositivityVerdict> {
        if self.is_completely_positive(tol)? {
            return Ok(PositivityVerdict::CertifiedCp);
        }
        let d = self.dim;
        let structured = structured_states(d);
        for psi in &structured {
            if let Some(v) = self.positivity_violation(psi, tol)? {
                return Ok(v);
            }
        }
        let mut rng = rng_from_seed(seed);
        for _ in 0..tol.sample_count {
            let psi = haar_pure_state(d, &mut rng);
            if let Some(v) = self.positivity_violation(&psi, tol)? {
                return Ok(v);
            }
        }
        Ok(PositivityVerdict::NoCounterexample {
            samples: tol.sample_count,
            structured: structured.len(),
        })
    }

    fn positivity_violation(&self, psi: &[Complex64], tol: &ToleranceConfig) -> Result<Option<PositivityVerdict>> {
        let out = self.apply_matrix(&ComplexMatrix::outer(psi)?)?;
        if is_psd(&out, tol)? {
            return Ok(None);
        }
        Ok(Some(PositivityVerdict::Counterexample {
            psi: psi.to_vec(),
            min_eigenvalue: eigh(&out)?.min(),
        }))
    }
}

/// Computational basis followed by the Fourier basis.
fn structured_states(d: usize) -> Vec<Vec<Complex64>> {
    let mut out: Vec<Vec<Complex64>> = (0..d)
        .map(|k| (0..d).map(|j| if j == k { ONE } else { ZERO }).collect())
        .collect();
    let norm = 1.0 / (d as f64).sqrt();
    for k in 0..d {
        out.push(
            (0..d)
                .map(|j| Complex64::from_polar(norm, 2.0 * PI * (j * k) as f64 / d as f64))
                .collect(),
        );
    }
    out
}

/// Outcome of a positivity audit. `NoCounterexample` is evidence, not a
/// proof: deciding positivity of a general linear map is hard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PositivityVerdict {
    /// Choi matrix is PSD, so the map is CP and hence positive.
    CertifiedCp,
    NoCounterexample { samples: usize, structured: usize },
    /// A pure state whose image has a negative eigenvalue.
    Counterexample { psi: Vec<Complex64>, min_eigenvalue: f64 },
}

impl PositivityVerdict {
    pub fn is_counterexample(&self) -> bool {
        matches!(self, PositivityVerdict::Counterexample { .. })
    }
}

/// Run `first`, then `second`.
pub fn seq(first: &QuantumProgram, second: &QuantumProgram) -> Result<QuantumProgram> {
    first.require_dim(second.dim)?;
    let kraus = match (&first.kraus, &second.kraus) {
        (Some(a), Some(b)) => Some(b.iter().flat_map(|k2| a.iter().map(move |k1| k2 * k1)).collect()),
        _ => None,
    };
    Ok(QuantumProgram {
        dim: first.dim,
        superop: &second.superop * &first.superop,
        kraus,
        label: format!("seq({}, {})", first.label, second.label),
    })
}

/// Convex combination `weight·c1 + (1 − weight)·c2`.
pub fn mix(weight: f64, c1: &QuantumProgram, c2: &QuantumProgram) -> Result<QuantumProgram> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::OutOfRange(format!("mixing weight {weight} outside [0, 1]")));
    }
    c1.require_dim(c2.dim)?;
    let kraus = match (&c1.kraus, &c2.kraus) {
        (Some(a), Some(b)) => {
            let mut ops = Vec::new();
            if weight > 0.0 {
                ops.extend(a.iter().map(|k| k.scale(weight.sqrt())));
            }
            if weight < 1.0 {
                ops.extend(b.iter().map(|k| k.scale((1.0 - weight).sqrt())));
            }
            Some(ops)
        }
        _ => None,
    };
    Ok(QuantumProgram {
        dim: c1.dim,
        superop: &c1.superop.scale(weight) + &c2.superop.scale(1.0 - weight),
        kraus,
        label: format!("mix({weight}, {}, {})", c1.label, c2.label),
    })
}

/// Measure with instrument {Mₘ} and run branch m on outcome m, forgetting
/// the outcome: ρ ↦ Σₘ Pₘ(Mₘ ρ Mₘ†).
pub fn measure_branch(
    instrument: &[ComplexMatrix],
    branches: &[QuantumProgram],
    tol: &ToleranceConfig,
) -> Result<QuantumProgram> {
    if instrument.is_empty() {
        return Err(Error::InvalidProgram("empty instrument".into()));
    }
    if instrument.len() != branches.len() {
        return Err(Error::InvalidProgram(format!(
            "{} measurement operators but {} branches",
            instrument.len(),
            branches.len()
        )));
    }
    let d = branches[0].dim;
    for m in instrument {
        branches[0].require_dim(m.dim())?;
    }
    for b in branches {
        branches[0].require_dim(b.dim)?;
    }
    let total = instrument
        .iter()
        .map(|m| &m.adjoint() * m)
        .reduce(|a, b| &a + &b)
        .expect("non-empty");
    let deviation = total.max_abs_diff(&ComplexMatrix::identity(d))?;
    if deviation > tol.residual_tol {
        return Err(Error::IncompleteInstrument { deviation });
    }
    let superop = instrument
        .iter()
        .zip(branches)
        .map(|(m, b)| &b.superop * &conjugation_superop(m))
        .reduce(|a, b| &a + &b)
        .expect("non-empty");
    let kraus = if branches.iter().all(|b| b.kraus.is_some()) {
        Some(
            instrument
                .iter()
                .zip(branches)
                .flat_map(|(m, b)| b.kraus.as_ref().unwrap().iter().map(move |k| k * m))
                .collect(),
        )
    } else {
        None
    };
    let labels: Vec<&str> = branches.iter().map(|b| b.label.as_str()).collect();
    Ok(QuantumProgram {
        dim: d,
        superop,
        kraus,
        label: format!("measure_branch[{}]", labels.join(", ")),
    })
}

/// On-disk form of a program:
/// `{"dim": d, "repr": "kraus"|"super"|"choi"|"named", "payload": .., "label": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramFile {
    pub dim: usize,
    #[serde(flatten)]
    pub body: ProgramBody,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "repr", content = "payload", rename_all = "snake_case")]
pub enum ProgramBody {
    Kraus(Vec<ComplexMatrix>),
    Super(ComplexMatrix),
    Choi(ComplexMatrix),
    Named(NamedProgram),
}

impl ProgramFile {
    pub fn build(self, tol: &ToleranceConfig) -> Result<QuantumProgram> {
        let source = match self.body {
            ProgramBody::Kraus(k) => ProgramSource::Kraus(k),
            ProgramBody::Super(s) => ProgramSource::Super(s),
            ProgramBody::Choi(j) => ProgramSource::Choi(j),
            ProgramBody::Named(n) => ProgramSource::Named(n),
        };
        let program = build_program(source, self.dim, tol)?;
        Ok(match self.label {
            Some(l) => program.with_label(l),
            None => program,
        })
    }
}

impl From<&QuantumProgram> for ProgramFile {
    fn from(p: &QuantumProgram) -> Self {
        let body = match &p.kraus {
            Some(k) => ProgramBody::Kraus(k.clone()),
            None => ProgramBody::Super(p.superop.clone()),
        };
        ProgramFile {
            dim: p.dim,
            body,
            label: Some(p.label.clone()),
        }
    }
}

impl Serialize for QuantumProgram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProgramFile::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuantumProgram {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ProgramFile::deserialize(d)?
            .build(&ToleranceConfig::default())
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_density, random_unitary, rng_from_seed};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn pauli_x() -> QuantumProgram {
        QuantumProgram::unitary(pauli()[0].clone(), &tol()).unwrap()
    }

    fn state(m: ComplexMatrix) -> DensityState {
        DensityState::new(m, &tol()).unwrap()
    }

    #[test]
    fn vectorization_is_column_stacking() {
        let x = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let v: Vec<f64> = vectorize(&x).iter().map(|z| z.re).collect();
        assert_eq!(v, vec![1.0, 3.0, 2.0, 4.0]);
        assert_eq!(devectorize(&vectorize(&x)).unwrap(), x);
        assert!(devectorize(&[ONE, ONE, ONE]).is_err());
    }

    #[test]
    fn identity_fixes_states() {
        let t = tol();
        let id = QuantumProgram::identity(3);
        assert_eq!(id.superop(), &ComplexMatrix::identity(9));
        let mut rng = rng_from_seed(1);
        for _ in 0..10 {
            let rho = state(random_density(3, &mut rng));
            let out = id.apply(&rho, &t).unwrap();
            assert!(out.matrix().max_abs_diff(rho.matrix()).unwrap() < 1e-15);
        }
    }

    #[test]
    fn pauli_x_flips() {
        let out = pauli_x().apply(&DensityState::basis(2, 0), &tol()).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::basis_projector(2, 1)).unwrap() < 1e-15);
    }

    #[test]
    fn non_unitary_rejected() {
        let m = ComplexMatrix::diag(&[1.0, 0.5]).unwrap();
        assert!(QuantumProgram::unitary(m, &tol()).is_err());
    }

    #[test]
    fn amplitude_damping_kraus_complete() {
        let c = QuantumProgram::amplitude_damping(0.3).unwrap();
        let sum = c
            .kraus()
            .unwrap()
            .iter()
            .map(|k| &k.adjoint() * k)
            .reduce(|a, b| &a + &b)
            .unwrap();
        assert!(sum.max_abs_diff(&ComplexMatrix::identity(2)).unwrap() <= 1e-12);
        assert!(QuantumProgram::amplitude_damping(1.5).is_err());
        assert!(QuantumProgram::named(NamedProgram::AmplitudeDamping { gamma: 0.3 }, 3).is_err());
    }

    #[test]
    fn apply_examples() {
        let t = tol();
        let mut rng = rng_from_seed(2);
        let dep = QuantumProgram::depolarizing(2, 1.0).unwrap();
        for _ in 0..5 {
            let out = dep.apply(&state(random_density(2, &mut rng)), &t).unwrap();
            assert!(out.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)).unwrap() < 1e-15);
        }

        // K0|1⟩⟨1|K0† + K1|1⟩⟨1|K1† = diag(0.3, 0.7)
        let ad = QuantumProgram::amplitude_damping(0.3).unwrap();
        let out = ad.apply(&DensityState::basis(2, 1), &t).unwrap();
        let want = ComplexMatrix::diag(&[0.3, 0.7]).unwrap();
        assert!(out.matrix().max_abs_diff(&want).unwrap() < 1e-15);

        let h = Complex64::new(0.5, 0.0);
        let rho = state(
            ComplexMatrix::from_rows(&[vec![h, I * 0.5], vec![-I * 0.5, h]]).unwrap(),
        );
        let out = QuantumProgram::transpose(2).apply(&rho, &t).unwrap();
        let want = ComplexMatrix::from_rows(&[vec![h, -I * 0.5], vec![I * 0.5, h]]).unwrap();
        assert!(out.matrix().max_abs_diff(&want).unwrap() < 1e-15);

        assert!(matches!(
            dep.apply(&DensityState::basis(3, 0), &t),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn apply_reports_leaving_state_space() {
        let t = tol();
        let lossy = QuantumProgram::from_superop(ComplexMatrix::identity(4).scale(0.9), 2, "lossy").unwrap();
        assert!(matches!(
            lossy.apply(&DensityState::basis(2, 0), &t),
            Err(Error::NotTracePreserving { .. })
        ));
        // ρ ↦ 1.5ρᵀ − 0.25·Tr(ρ)·I sends |0⟩⟨0| to diag(1.25, −0.25)
        let t2 = QuantumProgram::transpose(2);
        let vid = vectorize(&ComplexMatrix::identity(2));
        let trace_part = ComplexMatrix::from_fn(4, |r, c| vid[r] * vid[c]).unwrap();
        let s = &t2.superop().scale(1.5) - &trace_part.scale(0.25);
        let bad = QuantumProgram::from_superop(s, 2, "bad").unwrap();
        assert!(bad.is_trace_preserving(&t));
        assert!(matches!(
            bad.apply(&DensityState::basis(2, 0), &t),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn adjoint_examples() {
        let t = tol();
        let id = QuantumProgram::identity(2);
        assert_eq!(id.adjoint().superop(), id.superop());

        for p in [0.0, 0.25, 0.5, 1.0] {
            let dep = QuantumProgram::depolarizing(2, p).unwrap();
            let f = ComplexMatrix::basis_projector(2, 0);
            let via_super = dep.adjoint().apply_matrix(&f).unwrap();
            let via_kraus = dep.adjoint().apply_kraus(&f).unwrap();
            let want = ComplexMatrix::diag(&[1.0 - p / 2.0, p / 2.0]).unwrap();
            assert!(via_super.max_abs_diff(&want).unwrap() < 1e-15);
            assert!(via_kraus.max_abs_diff(&want).unwrap() < 1e-15);
        }

        let tr = QuantumProgram::transpose(3);
        assert_eq!(tr.adjoint().superop(), tr.superop());
        assert!(tr.is_trace_preserving(&t));
    }

    #[test]
    fn depolarizing_general_dim_matches_formula() {
        let t = tol();
        let mut rng = rng_from_seed(9);
        let dep = QuantumProgram::depolarizing(3, 0.4).unwrap();
        let rho = random_density(3, &mut rng);
        let out = dep.apply_matrix(&rho).unwrap();
        let want = &rho.scale(0.6) + &ComplexMatrix::identity(3).scale(0.4 / 3.0);
        assert!(out.max_abs_diff(&want).unwrap() < 1e-15);
        assert!(dep.is_trace_preserving(&t));
        assert!(dep.is_completely_positive(&t).unwrap());
        // d = 2 Kraus form agrees with the superoperator formula
        let dep2 = QuantumProgram::depolarizing(2, 0.4).unwrap();
        let rho = random_density(2, &mut rng);
        let want = &rho.scale(0.6) + &ComplexMatrix::identity(2).scale(0.2);
        assert!(dep2.apply_matrix(&rho).unwrap().max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn trace_preservation_examples() {
        let t = tol();
        for g in [0.0, 0.3, 0.77, 1.0] {
            assert!(QuantumProgram::amplitude_damping(g).unwrap().is_trace_preserving(&t));
        }
        let lossy = QuantumProgram::from_superop(ComplexMatrix::identity(4).scale(0.9), 2, "lossy").unwrap();
        assert!(!lossy.is_trace_preserving(&t));
        assert!(QuantumProgram::transpose(2).is_trace_preserving(&t));
    }

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn choi_examples() {
        let t = tol();
        let ev = QuantumProgram::identity(2).choi_eigenvalues().unwrap();
        for (a, b) in ev.iter().zip([0.0, 0.0, 0.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }

        let tr = QuantumProgram::transpose(2);
        let swap = ComplexMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(tr.to_choi(), swap);
        let ev = tr.choi_eigenvalues().unwrap();
        for (a, b) in ev.iter().zip([-1.0, 1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }

        for p in [0.1, 0.5, 0.9] {
            let ev = QuantumProgram::depolarizing(2, p).unwrap().choi_eigenvalues().unwrap();
            let want = sorted(vec![2.0 - 1.5 * p, p / 2.0, p / 2.0, p / 2.0]);
            for (a, b) in ev.iter().zip(want) {
                assert!((a - b).abs() < 1e-12, "p={p}: {ev:?}");
            }
        }

        let dep = QuantumProgram::depolarizing(2, 0.5).unwrap();
        let back = QuantumProgram::from_choi(&dep.to_choi(), 2, &t).unwrap();
        assert!(back.superop().max_abs_diff(dep.superop()).unwrap() < 1e-15);
    }

    #[test]
    fn choi_rejects_non_trace_preserving() {
        let t = tol();
        let j = QuantumProgram::identity(2).to_choi().scale(0.9);
        assert!(matches!(
            build_program(ProgramSource::Choi(j), 2, &t),
            Err(Error::NotTracePreserving { .. })
        ));
        assert!(build_program(ProgramSource::Choi(ComplexMatrix::identity(3)), 2, &t).is_err());
    }

    #[test]
    fn cp_classification() {
        let t = tol();
        assert!(QuantumProgram::amplitude_damping(0.3).unwrap().is_completely_positive(&t).unwrap());
        assert!(!QuantumProgram::transpose(2).is_completely_positive(&t).unwrap());
        let dep = QuantumProgram::depolarizing(2, 0.5).unwrap();
        assert!(dep.is_completely_positive(&t).unwrap());
        assert!((dep.choi_eigenvalues().unwrap()[0] - 0.25).abs() < 1e-12);
    }

    /// ρ ↦ (ρᵀ − 0.1·Tr(ρ)·I)/0.8, trace preserving but not positive.
    fn shifted_transpose() -> QuantumProgram {
        let vid = vectorize(&ComplexMatrix::identity(2));
        let trace_part = ComplexMatrix::from_fn(4, |r, c| vid[r] * vid[c]).unwrap();
        let s = (QuantumProgram::transpose(2).superop() - &trace_part.scale(0.1)).scale(1.0 / 0.8);
        QuantumProgram::from_superop(s, 2, "shifted transpose").unwrap()
    }

    #[test]
    fn positivity_verdicts() {
        let t = tol();
        match QuantumProgram::transpose(2).is_positive_sampled(&t, 4).unwrap() {
            PositivityVerdict::NoCounterexample { samples, structured } => {
                assert_eq!(samples, 1000);
                assert_eq!(structured, 4);
            }
            v => panic!("unexpected {v:?}"),
        }
        assert_eq!(
            QuantumProgram::amplitude_damping(0.3).unwrap().is_positive_sampled(&t, 4).unwrap(),
            PositivityVerdict::CertifiedCp
        );

        let c = shifted_transpose();
        assert!(c.is_trace_preserving(&t));
        let verdict = c.is_positive_sampled(&t, 4).unwrap();

        // grid oracle over the Bloch sphere
        let n = 100;
        let mut grid_min = f64::INFINITY;
        for a in 0..n {
            for b in 0..n {
                let theta = PI * a as f64 / (n - 1) as f64;
                let phi = 2.0 * PI * b as f64 / n as f64;
                let psi = [
                    Complex64::new((theta / 2.0).cos(), 0.0),
                    Complex64::from_polar((theta / 2.0).sin(), phi),
                ];
                let out = c.apply_matrix(&ComplexMatrix::outer(&psi).unwrap()).unwrap();
                grid_min = grid_min.min(eigh(&out).unwrap().min());
            }
        }
        assert!((grid_min + 0.125).abs() < 1e-9, "{grid_min}");
        match verdict {
            PositivityVerdict::Counterexample { psi, min_eigenvalue } => {
                assert!(grid_min < -t.eig_tol);
                assert!(min_eigenvalue < -t.eig_tol);
                let out = c.apply_matrix(&ComplexMatrix::outer(&psi).unwrap()).unwrap();
                assert!((eigh(&out).unwrap().min() - min_eigenvalue).abs() < 1e-12);
            }
            v => panic!("grid oracle found negativity but verdict was {v:?}"),
        }
    }

    #[test]
    fn seq_examples() {
        let t = tol();
        let mut rng = rng_from_seed(12);
        let ad = QuantumProgram::amplitude_damping(0.3).unwrap();
        let composed = seq(&QuantumProgram::identity(2), &ad).unwrap();
        for _ in 0..5 {
            let rho = random_density(2, &mut rng);
            let a = composed.apply_matrix(&rho).unwrap();
            let b = ad.apply_matrix(&rho).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-15);
        }

        let xx = seq(&pauli_x(), &pauli_x()).unwrap();
        assert!(xx.superop().max_abs_diff(&ComplexMatrix::identity(4)).unwrap() < 1e-15);

        let two = seq(&ad, &QuantumProgram::amplitude_damping(0.4).unwrap()).unwrap();
        let out = two.apply(&DensityState::basis(2, 1), &t).unwrap();
        let step = QuantumProgram::amplitude_damping(0.4)
            .unwrap()
            .apply(&ad.apply(&DensityState::basis(2, 1), &t).unwrap(), &t)
            .unwrap();
        let want = ComplexMatrix::diag(&[0.58, 0.42]).unwrap();
        assert!(out.matrix().max_abs_diff(&want).unwrap() < 1e-15);
        assert!(step.matrix().max_abs_diff(&want).unwrap() < 1e-15);
        // Kraus view composed pairwise agrees with the superoperator product
        let rho = random_density(2, &mut rng);
        assert!(two.apply_kraus(&rho).unwrap().max_abs_diff(&two.apply_matrix(&rho).unwrap()).unwrap() < 1e-15);

        assert!(seq(&ad, &QuantumProgram::identity(3)).is_err());
    }

    #[test]
    fn mix_examples() {
        let t = tol();
        let ad = QuantumProgram::amplitude_damping(0.3).unwrap();
        let m = mix(1.0, &ad, &pauli_x()).unwrap();
        assert_eq!(m.superop(), ad.superop());

        let half = mix(0.5, &QuantumProgram::identity(2), &pauli_x()).unwrap();
        let out = half.apply(&DensityState::basis(2, 0), &t).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::diag(&[0.5, 0.5]).unwrap()).unwrap() < 1e-15);
        assert!(half.is_trace_preserving(&t));

        let mt = mix(0.3, &QuantumProgram::transpose(2), &ad).unwrap();
        assert!(mt.is_trace_preserving(&t));
        assert!(mt.kraus().is_none());

        assert!(mix(1.2, &ad, &ad).is_err());
        assert!(mix(-0.1, &ad, &ad).is_err());
    }

    #[test]
    fn measure_branch_examples() {
        let t = tol();
        let p0 = ComplexMatrix::basis_projector(2, 0);
        let p1 = ComplexMatrix::basis_projector(2, 1);
        let id = QuantumProgram::identity(2);

        let deph = measure_branch(&[p0.clone(), p1.clone()], &[id.clone(), id.clone()], &t).unwrap();
        let plus = ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]]).unwrap();
        let out = deph.apply(&state(plus), &t).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::diag(&[0.5, 0.5]).unwrap()).unwrap() < 1e-15);

        let ad = QuantumProgram::amplitude_damping(0.3).unwrap();
        let single = measure_branch(&[ComplexMatrix::identity(2)], std::slice::from_ref(&ad), &t).unwrap();
        assert!(single.superop().max_abs_diff(ad.superop()).unwrap() < 1e-15);

        let fix = measure_branch(&[p0.clone(), p1.clone()], &[id.clone(), pauli_x()], &t).unwrap();
        let out = fix.apply(&DensityState::basis(2, 1), &t).unwrap();
        assert!(out.matrix().max_abs_diff(&p0).unwrap() < 1e-15);
        assert!(fix.is_completely_positive(&t).unwrap());

        assert!(matches!(
            measure_branch(std::slice::from_ref(&p0), std::slice::from_ref(&id), &t),
            Err(Error::IncompleteInstrument { .. })
        ));
        assert!(measure_branch(&[p0, p1], &[id], &t).is_err());
    }

    #[test]
    fn adjoint_is_involution() {
        let mut rng = rng_from_seed(4);
        let u = random_unitary(3, &mut rng);
        let c = QuantumProgram::unitary(u, &tol()).unwrap();
        assert_eq!(c.adjoint().adjoint().superop(), c.superop());
    }

    #[test]
    fn program_json() {
        let t = tol();
        let named = r#"{"dim": 2, "repr": "named", "payload": {"name": "depolarizing", "p": 0.5}, "label": "dep"}"#;
        let f: ProgramFile = serde_json::from_str(named).unwrap();
        let c = f.build(&t).unwrap();
        assert_eq!(c.label(), "dep");
        assert!(c.superop().max_abs_diff(QuantumProgram::depolarizing(2, 0.5).unwrap().superop()).unwrap() < 1e-15);

        let s = serde_json::to_string(&QuantumProgram::transpose(2)).unwrap();
        assert!(s.contains(r#""repr":"super""#));
        let back: QuantumProgram = serde_json::from_str(&s).unwrap();
        assert_eq!(back, QuantumProgram::transpose(2));

        let ad = QuantumProgram::amplitude_damping(0.3).unwrap();
        let back: QuantumProgram = serde_json::from_str(&serde_json::to_string(&ad).unwrap()).unwrap();
        assert_eq!(back, ad);

        let bad = r#"{"dim": 3, "repr": "kraus", "payload": [{"dim":2,"re":[[1,0],[0,1]],"im":[[0,0],[0,0]]}]}"#;
        let f: ProgramFile = serde_json::from_str(bad).unwrap();
        assert!(matches!(f.build(&t), Err(Error::DimensionMismatch { .. })));
    }
}
