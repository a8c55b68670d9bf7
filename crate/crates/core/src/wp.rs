//! Weakest preconditions of POVM predicates.
//!
//! For a trace-preserving positive program C and predicate F, the weakest
//! precondition is the predicate C*F obtained by applying the
//! Hilbert–Schmidt adjoint to every effect. A predicate G is a
//! precondition of F under C when Tr(G_A ρ) ≤ Tr(F_A C(ρ)) for every state
//! ρ and set A, which is the same as G ⪯ C*F atom by atom.

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh, hermitian_deviation, loewner_gap, psd_sqrt};
use crate::matrix::ComplexMatrix;
use crate::predicate::{expectation, predicate_leq, require_valid, OutcomeSpace, Predicate};
use crate::program::{PositivityVerdict, QuantumProgram};
use crate::sampling::{haar_pure_state, random_density, random_effect, random_psd, rng_from_seed, sub_seed};
use crate::state::DensityState;
use crate::tolerance::ToleranceConfig;

/// Agreement demanded between the superoperator and Kraus routes.
pub const ROUTE_AGREEMENT_TOL: f64 = 1e-10;

/// States each shrinkage candidate is checked against in [`weakest_check`].
pub const CANDIDATE_PROBE_STATES: usize = 50;

fn require_dim(c: &QuantumProgram, f: &Predicate) -> Result<()> {
    if c.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            found: f.dim(),
        });
    }
    Ok(())
}

fn require_trace_preserving(c: &QuantumProgram, tol: &ToleranceConfig) -> Result<()> {
    let deviation = c.trace_deviation();
    if deviation > tol.residual_tol {
        return Err(Error::NotTracePreserving { deviation });
    }
    Ok(())
}

/// WP(C)F = C*F, computed through the adjoint superoperator.
///
/// Refuses programs that are not trace preserving and invalid predicates.
/// Positivity of `c` is assumed here; [`wp_audited`] checks it.
pub fn wp(c: &QuantumProgram, f: &Predicate, tol: &ToleranceConfig) -> Result<Predicate> {
    require_dim(c, f)?;
    require_trace_preserving(c, tol)?;
    require_valid(f, tol)?;
    let dual = c.adjoint();
    f.map_effects(|e| dual.apply_matrix(e))
}

/// WP(C)F through the Kraus view, Σ K† F K per effect.
pub fn wp_via_kraus(c: &QuantumProgram, f: &Predicate, tol: &ToleranceConfig) -> Result<Predicate> {
    require_dim(c, f)?;
    require_trace_preserving(c, tol)?;
    require_valid(f, tol)?;
    let dual = c.adjoint();
    f.map_effects(|e| dual.apply_kraus(e))
}

/// Weakest precondition together with the positivity audit of the program.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditedWp {
    pub predicate: Predicate,
    pub positivity: PositivityVerdict,
    pub warnings: Vec<String>,
}

/// [`wp`] plus a sampled positivity audit. A found counterexample is an
/// error; an inconclusive audit only adds a warning.
pub fn wp_audited(c: &QuantumProgram, f: &Predicate, tol: &ToleranceConfig, seed: u64) -> Result<AuditedWp> {
    let predicate = wp(c, f, tol)?;
    let positivity = c.is_positive_sampled(tol, seed)?;
    let mut warnings = Vec::new();
    match &positivity {
        PositivityVerdict::CertifiedCp => {}
        PositivityVerdict::NoCounterexample { samples, structured } => warnings.push(format!(
            "program is not completely positive; positivity is sampled, not proven \
             ({samples} random and {structured} basis states passed)"
        )),
        PositivityVerdict::Counterexample { min_eigenvalue, .. } => {
            return Err(Error::NotPositive {
                min_eigenvalue: *min_eigenvalue,
            })
        }
    }
    Ok(AuditedWp {
        predicate,
        positivity,
        warnings,
    })
}

/// Per atom |Tr(C*(F_i) ρ) − Tr(F_i C(ρ))|.
pub fn duality_residual(
    c: &QuantumProgram,
    f: &Predicate,
    rho: &DensityState,
    tol: &ToleranceConfig,
) -> Result<Vec<f64>> {
    let pulled = wp(c, f, tol)?;
    if rho.dim() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            found: rho.dim(),
        });
    }
    let evolved = c.apply_matrix(rho.matrix())?;
    Ok(pulled
        .effects()
        .iter()
        .zip(f.effects())
        .map(|(g, e)| (expectation(rho.matrix(), g) - trace_product(e, &evolved)).abs())
        .collect())
}

/// Re Tr(A B) for hermitian A; B need not be hermitian.
fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let d = a.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for k in 0..d {
            acc += (a.get(i, k) * b.get(k, i)).re;
        }
    }
    acc
}

/// Per-atom values keyed by outcome label, serialized as a JSON object.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomValues(pub Vec<(String, f64)>);

impl AtomValues {
    fn new(space: &OutcomeSpace, values: Vec<f64>) -> Self {
        Self(space.atoms().iter().cloned().zip(values).collect())
    }

    pub fn get(&self, atom: &str) -> Option<f64> {
        self.0.iter().find(|(a, _)| a == atom).map(|(_, v)| *v)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min)
    }
}

impl Serialize for AtomValues {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (a, v) in &self.0 {
            map.serialize_entry(a, v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for AtomValues {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = serde_json::Map::<String, serde_json::Value>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                v.as_f64()
                    .map(|x| (k, x))
                    .ok_or_else(|| serde::de::Error::custom("expected a number"))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(AtomValues)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
}

/// A state on which the candidate precondition promises more than the
/// program delivers: `lhs = Tr(G_atom ρ) > rhs = Tr(F_atom C(ρ))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreconditionWitness {
    pub atom: String,
    pub state: DensityState,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub witness: Option<PreconditionWitness>,
    /// Smallest eigenvalue of WP(C)F_i − G_i per atom; negative where the
    /// triple fails.
    pub margins: AtomValues,
    /// Largest duality residual per atom over the probe states.
    pub residuals: AtomValues,
    pub seed: u64,
    pub tolerance: ToleranceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity: Option<PositivityVerdict>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl VerificationReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

/// Random probe states for duality residuals.
const RESIDUAL_PROBES: usize = 8;

/// Decides whether `g` is a precondition of `f` under `c`, i.e.
/// `g ⪯ WP(C)F`. On failure the witness is the eigenvector of the most
/// negative eigenvalue of the deficit `WP(C)F_i − G_i`, with both sides
/// evaluated directly: `Tr(G_i ρ)` and `Tr(F_i C(ρ))`.
pub fn is_precondition(
    g: &Predicate,
    c: &QuantumProgram,
    f: &Predicate,
    tol: &ToleranceConfig,
    seed: u64,
) -> Result<VerificationReport> {
    g.require_compatible(f)?;
    let w = wp(c, f, tol)?;
    let d = c.dim();

    let mut margins = Vec::with_capacity(g.space().len());
    let mut worst: Option<(usize, f64, Vec<num_complex::Complex64>)> = None;
    let mut probes: Vec<DensityState> = Vec::new();
    for (i, (gi, wi)) in g.effects().iter().zip(w.effects()).enumerate() {
        // validates hermiticity of both sides
        loewner_gap(gi, wi, tol)?;
        let eig = eigh(&(wi - gi))?;
        margins.push(eig.min());
        if eig.min() < -tol.eig_tol && worst.as_ref().is_none_or(|x| eig.min() < x.1) {
            worst = Some((i, eig.min(), eig.vectors[0].clone()));
        }
        for v in &eig.vectors {
            probes.push(DensityState::pure(v)?);
        }
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..RESIDUAL_PROBES {
        probes.push(DensityState::pure(&haar_pure_state(d, &mut rng))?);
    }
    let mut residuals = vec![0.0f64; g.space().len()];
    for rho in &probes {
        for (r, v) in residuals.iter_mut().zip(duality_residual(c, f, rho, tol)?) {
            *r = r.max(v);
        }
    }

    let witness = match worst {
        Some((i, _, v)) => {
            let state = DensityState::pure(&v)?;
            let evolved = c.apply_matrix(state.matrix())?;
            Some(PreconditionWitness {
                atom: g.space().atoms()[i].clone(),
                lhs: expectation(state.matrix(), &g.effects()[i]),
                rhs: trace_product(&f.effects()[i], &evolved),
                state,
            })
        }
        None => None,
    };
    Ok(VerificationReport {
        verdict: if witness.is_some() {
            Verdict::Fails
        } else {
            Verdict::Holds
        },
        witness,
        margins: AtomValues::new(g.space(), margins),
        residuals: AtomValues::new(g.space(), residuals),
        seed,
        tolerance: *tol,
        positivity: None,
        warnings: Vec::new(),
    })
}

/// `{pre} prog {post}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTriple")]
pub struct HoareTriple {
    pre: Predicate,
    prog: QuantumProgram,
    post: Predicate,
}

#[derive(Deserialize)]
struct RawTriple {
    pre: Predicate,
    prog: QuantumProgram,
    post: Predicate,
}

impl TryFrom<RawTriple> for HoareTriple {
    type Error = Error;
    fn try_from(raw: RawTriple) -> Result<Self> {
        HoareTriple::new(raw.pre, raw.prog, raw.post)
    }
}

impl HoareTriple {
    pub fn new(pre: Predicate, prog: QuantumProgram, post: Predicate) -> Result<Self> {
        if pre.space() != post.space() {
            return Err(Error::MalformedTriple(format!(
                "pre atoms {:?} differ from post atoms {:?}",
                pre.space().atoms(),
                post.space().atoms()
            )));
        }
        if pre.dim() != post.dim() || prog.dim() != post.dim() {
            return Err(Error::MalformedTriple(format!(
                "dimensions differ: pre {}, program {}, post {}",
                pre.dim(),
                prog.dim(),
                post.dim()
            )));
        }
        Ok(Self { pre, prog, post })
    }

    pub fn pre(&self) -> &Predicate {
        &self.pre
    }

    pub fn prog(&self) -> &QuantumProgram {
        &self.prog
    }

    pub fn post(&self) -> &Predicate {
        &self.post
    }
}

/// The triple holds iff `pre ⪯ WP(prog)post`. The program's positivity is
/// audited and recorded in the report.
pub fn verify_triple(t: &HoareTriple, tol: &ToleranceConfig, seed: u64) -> Result<VerificationReport> {
    let audited = wp_audited(&t.prog, &t.post, tol, seed)?;
    let mut report = is_precondition(&t.pre, &t.prog, &t.post, tol, seed)?;
    report.positivity = Some(audited.positivity);
    report.warnings = audited.warnings;
    Ok(report)
}

/// G = W^{1/2}(I − R)W^{1/2} per atom, for shrink factors 0 ⪯ Rᵢ ⪯ I.
/// Then 0 ⪯ G ⪯ W, so G is a precondition whenever W is the weakest one.
pub fn shrink_candidate(w: &Predicate, shrink: &[ComplexMatrix], tol: &ToleranceConfig) -> Result<Predicate> {
    if shrink.len() != w.space().len() {
        return Err(Error::OutOfRange(format!(
            "{} shrink factors for {} atoms",
            shrink.len(),
            w.space().len()
        )));
    }
    let id = ComplexMatrix::identity(w.dim());
    let effects = w
        .effects()
        .iter()
        .zip(shrink)
        .map(|(wi, r)| {
            let s = psd_sqrt(wi, tol)?;
            Ok((&(&s * &id.checked_sub(r)?) * &s).hermitian_part())
        })
        .collect::<Result<Vec<_>>>()?;
    Predicate::new(w.space().clone(), effects)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakestReport {
    pub trials: usize,
    pub all_dominated: bool,
    /// Candidates that failed the sampled precondition inequality.
    pub not_preconditions: usize,
    /// Candidates not below WP(C)F in the predicate order.
    pub not_dominated: usize,
    /// Largest Tr(G_i ρ) − Tr(F_i C(ρ)) seen over all candidates and probes.
    pub max_excess: f64,
    pub seed: u64,
}

/// Generates `sample_count` preconditions by random PSD shrinkage of
/// WP(C)F, confirms each one on sampled states through
/// `Tr(G_i ρ) ≤ Tr(F_i C(ρ))`, and confirms each is below WP(C)F.
pub fn weakest_check(c: &QuantumProgram, f: &Predicate, tol: &ToleranceConfig, seed: u64) -> Result<WeakestReport> {
    let w = wp(c, f, tol)?;
    let d = c.dim();
    let outcomes = (0..tol.sample_count)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_from_seed(sub_seed(seed, trial as u64));
            let shrink = (0..f.space().len())
                .map(|_| random_effect(d, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let g = shrink_candidate(&w, &shrink, tol)?;
            let mut excess = f64::NEG_INFINITY;
            for _ in 0..CANDIDATE_PROBE_STATES {
                let rho = random_density(d, &mut rng);
                let evolved = c.apply_matrix(&rho)?;
                for (gi, fi) in g.effects().iter().zip(f.effects()) {
                    excess = excess.max(expectation(&rho, gi) - trace_product(fi, &evolved));
                }
            }
            let dominated = predicate_leq(&g, &w, tol)?;
            Ok((excess, dominated))
        })
        .collect::<Result<Vec<_>>>()?;
    let not_preconditions = outcomes.iter().filter(|(e, _)| *e > tol.eig_tol).count();
    let not_dominated = outcomes.iter().filter(|(_, d)| !d).count();
    Ok(WeakestReport {
        trials: outcomes.len(),
        all_dominated: not_preconditions == 0 && not_dominated == 0,
        not_preconditions,
        not_dominated,
        max_excess: outcomes.iter().map(|(e, _)| *e).fold(f64::NEG_INFINITY, f64::max),
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialReport {
    pub trials: usize,
    pub bump: f64,
    /// Candidates that `is_precondition` rejected.
    pub rejected: usize,
    /// Rejections whose witness re-evaluates to lhs > rhs + eig_tol.
    pub verified_witnesses: usize,
    pub seed: u64,
}

impl AdversarialReport {
    pub fn all_rejected(&self) -> bool {
        self.rejected == self.trials && self.verified_witnesses == self.trials
    }
}

/// Bumps one random atom of WP(C)F by `bump·P` (P random PSD with unit
/// operator norm) and checks that every such candidate is rejected with a
/// witness that survives direct re-evaluation.
pub fn adversarial_check(
    c: &QuantumProgram,
    f: &Predicate,
    bump: f64,
    trials: usize,
    tol: &ToleranceConfig,
    seed: u64,
) -> Result<AdversarialReport> {
    if !(bump > 0.0 && bump.is_finite()) {
        return Err(Error::OutOfRange(format!("bump must be positive, got {bump}")));
    }
    let w = wp(c, f, tol)?;
    let d = c.dim();
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = sub_seed(seed, trial as u64);
            let mut rng = rng_from_seed(trial_seed);
            let atom = (rand::Rng::gen::<u64>(&mut rng) % f.space().len() as u64) as usize;
            let p = random_psd(d, &mut rng);
            let p = p.scale(1.0 / eigh(&p)?.max());
            let g = w.with_effect(atom, &w.effects()[atom] + &p.scale(bump))?;
            let report = is_precondition(&g, c, f, tol, trial_seed)?;
            let verified = match &report.witness {
                Some(wit) => {
                    let i = g.space().index_of(&wit.atom)?;
                    let lhs = expectation(wit.state.matrix(), &g.effects()[i]);
                    let rhs = expectation(c.apply(&wit.state, tol)?.matrix(), &f.effects()[i]);
                    lhs > rhs + tol.eig_tol && (lhs - wit.lhs).abs() <= tol.residual_tol
                        && (rhs - wit.rhs).abs() <= tol.residual_tol
                }
                None => false,
            };
            Ok((!report.holds(), verified))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AdversarialReport {
        trials,
        bump,
        rejected: outcomes.iter().filter(|(r, _)| *r).count(),
        verified_witnesses: outcomes.iter().filter(|(_, v)| *v).count(),
        seed,
    })
}

/// max entrywise |WP(c1; c2)F − WP(c1)(WP(c2)F)|.
pub fn wp_compose_check(
    c1: &QuantumProgram,
    c2: &QuantumProgram,
    f: &Predicate,
    tol: &ToleranceConfig,
) -> Result<f64> {
    let whole = wp(&crate::program::seq(c1, c2)?, f, tol)?;
    let staged = wp(c1, &wp(c2, f, tol)?, tol)?;
    whole.max_abs_diff(&staged)
}

/// The single-effect case: WP of the one-atom predicate {m}, returned as a
/// matrix. Requires a Kraus view, and fails if the superoperator result
/// differs from Σ K† m K by more than [`ROUTE_AGREEMENT_TOL`].
pub fn dp_reduction(c: &QuantumProgram, m: &ComplexMatrix, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    let deviation = hermitian_deviation(m);
    if deviation > tol.residual_tol {
        return Err(Error::OutOfRange(format!("effect is not hermitian (deviation {deviation:e})")));
    }
    let eig = eigh(m)?;
    if eig.min() < -tol.eig_tol || eig.max() > 1.0 + tol.eig_tol {
        return Err(Error::OutOfRange(format!(
            "effect spectrum [{}, {}] not within [0, 1]",
            eig.min(),
            eig.max()
        )));
    }
    if c.kraus().is_none() {
        return Err(Error::NoKraus);
    }
    let one = Predicate::new(OutcomeSpace::new(["F1"])?, vec![m.clone()])?;
    let via_super = wp(c, &one, tol)?.effects()[0].clone();
    let via_kraus = c.adjoint().apply_kraus(m)?;
    let deviation = via_super.max_abs_diff(&via_kraus)?;
    if deviation > ROUTE_AGREEMENT_TOL {
        return Err(Error::RouteDisagreement { deviation });
    }
    Ok(via_super)
}
