//! Seeded property campaigns over random programs, predicates and states.
//!
//! Trial `t` at dimension `d` draws everything from its own sub-seed, so a
//! campaign gives identical results however rayon schedules it.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::inverse_sqrt;
use crate::matrix::ComplexMatrix;
use crate::predicate::{expectation, order_witness, predicate_leq, s_leq, OutcomeSpace, Predicate};
use crate::program::{mix, seq, QuantumProgram};
use crate::sampling::{
    haar_pure_state, random_density, random_effect, random_psd, random_unitary, rng_from_seed, sub_seed, SeededRng,
};
use crate::state::DensityState;
use crate::tolerance::ToleranceConfig;
use crate::wp::{adversarial_check, duality_residual, is_precondition, shrink_candidate, weakest_check, wp, wp_compose_check};

/// Bound on |Tr(C*(F)ρ) − Tr(F C(ρ))|.
pub const DUALITY_THRESHOLD: f64 = 1e-10;
/// Bound on |WP(c1; c2)F − WP(c1)WP(c2)F|.
pub const COMPOSE_THRESHOLD: f64 = 1e-10;
/// Size of the adversarial bump in the weakest suite.
pub const ADVERSARIAL_BUMP: f64 = 1e-3;
/// (program, predicate) pairs per dimension in the weakest suite.
pub const WEAKEST_PAIRS: usize = 10;
/// Adversarial candidates per pair in the weakest suite.
pub const ADVERSARIAL_PER_PAIR: usize = 10;
/// Random states used to certify each positive case in the orders suite.
pub const ORDER_PROBE_STATES: usize = 500;
/// Largest dimension the campaigns accept by default.
pub const DEFAULT_MAX_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProgramKind {
    Cp,
    Transpose,
    /// Transpose followed by a unitary.
    TransposeUnitary,
    /// Convex mix of the transpose and a CP map; CP for small transpose weight.
    TransposeMix,
}

impl ProgramKind {
    /// True for the kinds that are CP by construction.
    pub fn is_cp(self) -> bool {
        self == ProgramKind::Cp
    }
}

/// Random complete POVM: Fᵢ = S^{-1/2} Aᵢ S^{-1/2} with Aᵢ random PSD and
/// S = Σ Aᵢ.
pub fn random_povm(dim: usize, atoms: usize, rng: &mut SeededRng) -> Result<Predicate> {
    let tol = ToleranceConfig::default();
    let parts: Vec<ComplexMatrix> = (0..atoms).map(|_| random_psd(dim, rng)).collect();
    let total = parts.iter().skip(1).fold(parts[0].clone(), |a, b| &a + b);
    let inv = inverse_sqrt(&total, &tol)?;
    let effects = parts
        .iter()
        .map(|a| (&(&inv * a) * &inv).hermitian_part())
        .collect();
    Predicate::new(OutcomeSpace::numbered(atoms)?, effects)
}

/// Random predicate: complete half the time, otherwise a complete one
/// scaled into [0.3, 1).
pub fn random_predicate(dim: usize, atoms: usize, rng: &mut SeededRng) -> Result<Predicate> {
    let p = random_povm(dim, atoms, rng)?;
    if rng.gen_bool(0.5) {
        Ok(p)
    } else {
        Ok(p.scale(rng.gen_range(0.3..1.0)))
    }
}

/// Random CPTP map with `n` Kraus operators cut from a Haar isometry.
pub fn random_cp_program(dim: usize, n: usize, rng: &mut SeededRng) -> Result<QuantumProgram> {
    let u = random_unitary(dim * n, rng);
    let ops = (0..n)
        .map(|m| ComplexMatrix::from_fn(dim, |i, j| u.get(m * dim + i, j)))
        .collect::<Result<Vec<_>>>()?;
    QuantumProgram::from_kraus(ops, dim, format!("random_cp({n})"))
}

/// A random positive trace-preserving program of the requested kind.
pub fn random_program(kind: ProgramKind, dim: usize, rng: &mut SeededRng) -> Result<QuantumProgram> {
    let tol = ToleranceConfig::default();
    match kind {
        ProgramKind::Cp => {
            let n = rng.gen_range(1..=3);
            random_cp_program(dim, n, rng)
        }
        ProgramKind::Transpose => Ok(QuantumProgram::transpose(dim)),
        ProgramKind::TransposeUnitary => {
            let u = QuantumProgram::unitary(random_unitary(dim, rng), &tol)?;
            seq(&QuantumProgram::transpose(dim), &u)
        }
        ProgramKind::TransposeMix => {
            let n = rng.gen_range(1..=3);
            let cp = random_cp_program(dim, n, rng)?;
            mix(rng.gen_range(0.05..0.95), &QuantumProgram::transpose(dim), &cp)
        }
    }
}

/// Cycles through every kind; a quarter of the trials are CP.
pub fn kind_for_trial(trial: usize) -> ProgramKind {
    match trial % 4 {
        0 => ProgramKind::Transpose,
        1 => ProgramKind::Cp,
        2 => ProgramKind::TransposeUnitary,
        _ => ProgramKind::TransposeMix,
    }
}

/// Random state; one in four is pure.
pub fn random_state(dim: usize, rng: &mut SeededRng) -> Result<DensityState> {
    if rng.gen_ratio(1, 4) {
        DensityState::pure(&haar_pure_state(dim, rng))
    } else {
        DensityState::new(random_density(dim, rng), &ToleranceConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Duality,
    Weakest,
    Compose,
    Orders,
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "duality" => Ok(Suite::Duality),
            "weakest" => Ok(Suite::Weakest),
            "compose" => Ok(Suite::Compose),
            "orders" => Ok(Suite::Orders),
            "all" => Ok(Suite::All),
            other => Err(format!(
                "unknown suite `{other}` (expected duality, weakest, compose, orders or all)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub dims: Vec<usize>,
    /// Trials per dimension.
    pub trials: usize,
    pub failures: usize,
    /// Largest residual or deviation observed; `None` for suites that only count.
    pub max_deviation: Option<f64>,
    pub threshold: Option<f64>,
    pub counts: BTreeMap<String, usize>,
    pub passed: bool,
    pub first_failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub seed: u64,
    pub tolerance: ToleranceConfig,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

/// Checks a dimension list against `[2, max_dim]`.
pub fn check_dims(dims: &[usize], max_dim: usize) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::OutOfRange("no dimensions given".into()));
    }
    if let Some(d) = dims.iter().find(|&&d| d < 2 || d > max_dim) {
        return Err(Error::OutOfRange(format!("dimension {d} outside [2, {max_dim}]")));
    }
    Ok(())
}

fn trial_seed(seed: u64, dim: usize, trial: usize) -> u64 {
    sub_seed(sub_seed(seed, dim as u64), trial as u64)
}

/// Runs one suite (or all of them) with `trials` trials per dimension.
pub fn run_campaign(
    suite: Suite,
    dims: &[usize],
    trials: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<CampaignReport> {
    check_dims(dims, DEFAULT_MAX_DIM)?;
    let suites = match suite {
        Suite::All => vec![Suite::Duality, Suite::Weakest, Suite::Compose, Suite::Orders],
        s => vec![s],
    };
    let reports = suites
        .into_iter()
        .map(|s| match s {
            Suite::Duality => duality_suite(dims, trials, seed, tol),
            Suite::Weakest => weakest_suite(dims, trials, seed, tol),
            Suite::Compose => compose_suite(dims, trials, seed, tol),
            Suite::Orders => orders_suite(dims, trials, seed, tol),
            Suite::All => unreachable!(),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CampaignReport {
        seed,
        tolerance: *tol,
        passed: reports.iter().all(|r| r.passed),
        suites: reports,
    })
}

struct Trial {
    deviation: f64,
    ok: bool,
    counts: Vec<(&'static str, usize)>,
    note: String,
}

fn summarize(
    suite: Suite,
    dims: &[usize],
    trials: usize,
    threshold: Option<f64>,
    results: Vec<Trial>,
) -> SuiteReport {
    let mut counts = BTreeMap::new();
    for r in &results {
        for (tag, n) in &r.counts {
            if *n > 0 {
                *counts.entry((*tag).to_string()).or_insert(0) += n;
            }
        }
    }
    let failures = results.iter().filter(|r| !r.ok).count();
    SuiteReport {
        suite,
        dims: dims.to_vec(),
        trials,
        failures,
        max_deviation: threshold.map(|_| results.iter().map(|r| r.deviation).fold(0.0, f64::max)),
        threshold,
        counts,
        passed: failures == 0,
        first_failure: results.iter().find(|r| !r.ok).map(|r| r.note.clone()),
    }
}

/// |Tr(C*(Fᵢ)ρ) − Tr(Fᵢ C(ρ))| over random (program, predicate, state).
pub fn duality_suite(dims: &[usize], trials: usize, seed: u64, tol: &ToleranceConfig) -> Result<SuiteReport> {
    let results = run_seeded(dims, trials, seed, |d, t, rng| {
        let kind = kind_for_trial(t);
        let c = random_program(kind, d, rng)?;
        let atoms = rng.gen_range(1..=4);
        let f = random_predicate(d, atoms, rng)?;
        let rho = random_state(d, rng)?;
        let residual = duality_residual(&c, &f, &rho, tol)?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(Trial {
            deviation: residual,
            ok: residual <= DUALITY_THRESHOLD,
            counts: vec![(if kind.is_cp() { "kraus_programs" } else { "transpose_programs" }, 1)],
            note: format!("d={d} trial={t} residual={residual:e}"),
        })
    })?;
    Ok(summarize(Suite::Duality, dims, trials, Some(DUALITY_THRESHOLD), results))
}

/// Membership of WP(C)F, domination of shrinkage candidates and rejection
/// of bumped candidates. `trials` shrinkage candidates per dimension are
/// spread over [`WEAKEST_PAIRS`] (program, predicate) pairs.
pub fn weakest_suite(dims: &[usize], trials: usize, seed: u64, tol: &ToleranceConfig) -> Result<SuiteReport> {
    let pairs = WEAKEST_PAIRS.min(trials.max(1));
    let results = run_seeded(dims, pairs, seed, |d, p, rng| {
        let kind = if p % 2 == 0 { ProgramKind::Cp } else { kind_for_trial(p) };
        let c = random_program(kind, d, rng)?;
        let atoms = rng.gen_range(1..=3);
        let f = random_predicate(d, atoms, rng)?;
        let pair_seed = rng.gen::<u64>();
        let w = wp(&c, &f, tol)?;
        let member = is_precondition(&w, &c, &f, tol, pair_seed)?.holds();
        let candidates = trials / pairs + usize::from(p < trials % pairs);
        let weakest = weakest_check(&c, &f, &tol.with_sample_count(candidates.max(1)), pair_seed)?;
        let adversarial = adversarial_check(&c, &f, ADVERSARIAL_BUMP, ADVERSARIAL_PER_PAIR, tol, pair_seed)?;
        let ok = member && weakest.all_dominated && adversarial.all_rejected();
        let counts = vec![
            ("pairs", 1),
            ("membership_holds", usize::from(member)),
            ("candidates", weakest.trials),
            ("candidates_not_dominated", weakest.not_dominated + weakest.not_preconditions),
            ("adversarial", adversarial.trials),
            ("adversarial_rejected", adversarial.rejected),
            ("adversarial_witness_verified", adversarial.verified_witnesses),
        ];
        Ok(Trial {
            deviation: weakest.max_excess.max(0.0),
            ok,
            counts,
            note: format!(
                "d={d} pair={p} member={member} all_dominated={} adversarial {}/{} rejected",
                weakest.all_dominated, adversarial.rejected, adversarial.trials
            ),
        })
    })?;
    Ok(summarize(Suite::Weakest, dims, trials, None, results))
}

/// WP(c1; c2)F = WP(c1)(WP(c2)F) and (c1; c2)* = c2*; c1* as superoperators.
pub fn compose_suite(dims: &[usize], trials: usize, seed: u64, tol: &ToleranceConfig) -> Result<SuiteReport> {
    let results = run_seeded(dims, trials, seed, |d, t, rng| {
        let c1 = random_program(kind_for_trial(t), d, rng)?;
        let c2 = random_program(kind_for_trial(t / 4 + 1), d, rng)?;
        let atoms = rng.gen_range(1..=3);
        let f = random_predicate(d, atoms, rng)?;
        let wp_dev = wp_compose_check(&c1, &c2, &f, tol)?;
        let adj_dev = seq(&c1, &c2)?
            .adjoint()
            .superop()
            .max_abs_diff(seq(&c2.adjoint(), &c1.adjoint())?.superop())?;
        let deviation = wp_dev.max(adj_dev);
        Ok(Trial {
            deviation,
            ok: deviation <= COMPOSE_THRESHOLD,
            counts: vec![("pairs", 1)],
            note: format!("d={d} trial={t} wp deviation={wp_dev:e} adjoint deviation={adj_dev:e}"),
        })
    })?;
    Ok(summarize(Suite::Compose, dims, trials, Some(COMPOSE_THRESHOLD), results))
}

/// s_leq against predicate_leq, with witnesses for every negative pair and
/// [`ORDER_PROBE_STATES`] random states certifying every positive one.
pub fn orders_suite(dims: &[usize], trials: usize, seed: u64, tol: &ToleranceConfig) -> Result<SuiteReport> {
    let results = run_seeded(dims, trials, seed, |d, t, rng| {
        let atoms = rng.gen_range(1..=3);
        let (f, g) = random_order_pair(d, atoms, t % 2 == 0, rng)?;
        let loewner = predicate_leq(&f, &g, tol)?;
        let sat_order = s_leq(&f, &g, tol)?;
        let mut counts = vec![(if loewner { "positive_pairs" } else { "negative_pairs" }, 1)];
        let mut ok = loewner == sat_order;
        if ok {
            counts.push(("agreements", 1));
        }
        if loewner {
            // no sampled state may separate them
            for _ in 0..ORDER_PROBE_STATES {
                let rho = random_state(d, rng)?;
                for (fi, gi) in f.effects().iter().zip(g.effects()) {
                    if expectation(rho.matrix(), fi) > expectation(rho.matrix(), gi) + tol.eig_tol {
                        ok = false;
                    }
                }
            }
        } else {
            match order_witness(&f, &g, tol)? {
                Some(w) => {
                    let i = f.space().index_of(&w.atom)?;
                    let lhs = expectation(w.state.matrix(), &f.effects()[i]);
                    let rhs = expectation(w.state.matrix(), &g.effects()[i]);
                    if lhs > rhs + tol.eig_tol {
                        counts.push(("verified_witnesses", 1));
                    } else {
                        ok = false;
                    }
                }
                None => ok = false,
            }
        }
        Ok(Trial {
            deviation: 0.0,
            ok,
            counts,
            note: format!("d={d} trial={t} predicate_leq={loewner} s_leq={sat_order}"),
        })
    })?;
    Ok(summarize(Suite::Orders, dims, trials, None, results))
}

/// A pair (f, g) of predicates on the same atoms. When `comparable`, f is a
/// shrinkage of g so f ⪯ g; otherwise f is an independent draw, usually
/// incomparable.
pub fn random_order_pair(
    dim: usize,
    atoms: usize,
    comparable: bool,
    rng: &mut SeededRng,
) -> Result<(Predicate, Predicate)> {
    let tol = ToleranceConfig::default();
    let g = random_predicate(dim, atoms, rng)?;
    let f = if comparable {
        let shrink = (0..atoms)
            .map(|_| random_effect(dim, rng))
            .collect::<Result<Vec<_>>>()?;
        shrink_candidate(&g, &shrink, &tol)?
    } else {
        random_predicate(dim, atoms, rng)?
    };
    Ok((f, g))
}

fn run_seeded<F>(dims: &[usize], trials: usize, seed: u64, f: F) -> Result<Vec<Trial>>
where
    F: Fn(usize, usize, &mut SeededRng) -> Result<Trial> + Sync,
{
    let jobs: Vec<(usize, usize)> = dims
        .iter()
        .flat_map(|&d| (0..trials).map(move |t| (d, t)))
        .collect();
    jobs.into_par_iter()
        .map(|(d, t)| {
            let mut rng = rng_from_seed(trial_seed(seed, d, t));
            f(d, t, &mut rng)
        })
        .collect()
}
