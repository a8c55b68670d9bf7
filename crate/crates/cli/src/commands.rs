use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use qwp_core::campaign::{random_state, run_campaign, CampaignReport, Suite};
use qwp_core::matrix::ComplexMatrix;
use qwp_core::predicate::{is_complete, sat, validate_predicate, Predicate, SatMeasure, Violation};
use qwp_core::program::{PositivityVerdict, ProgramFile};
use qwp_core::sampling::{rng_from_seed, sub_seed};
use qwp_core::state::DensityState;
use qwp_core::tolerance::ToleranceConfig;
use qwp_core::wp::{duality_residual, verify_triple, wp_audited, HoareTriple, VerificationReport};

use crate::io::{
    build_program, decode, read_json, read_predicate, read_program, read_text, to_json, write_json, CliError,
    STATUS_FAILED, STATUS_SEMANTIC,
};

/// States sampled for the duality residual in the `wp` sidecar report.
pub const WP_RESIDUAL_STATES: usize = 100;

pub struct Context {
    pub tol: ToleranceConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub status: u8,
    pub stdout: String,
    pub stderr: String,
}

/// What was run, recorded in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub inputs: Vec<String>,
    pub seed: u64,
    pub tolerance: ToleranceConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Serialize)]
struct Report<T: Serialize> {
    manifest: RunManifest,
    timestamp: u64,
    #[serde(flatten)]
    result: T,
}

impl Context {
    fn manifest(&self, command: &'static str, inputs: &[&Path]) -> RunManifest {
        RunManifest {
            command,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            seed: self.seed,
            tolerance: self.tol,
            out: self.out.as_ref().map(|p| p.display().to_string()),
        }
    }

    /// Writes the report to `--out` if given, else returns it for stdout.
    fn emit<T: Serialize>(&self, manifest: RunManifest, result: T, status: u8) -> Result<Outcome, CliError> {
        let report = Report {
            manifest,
            timestamp: timestamp(),
            result,
        };
        let stdout = match &self.out {
            Some(path) => {
                write_json(path, &report)?;
                String::new()
            }
            None => to_json(&report),
        };
        Ok(Outcome {
            status,
            stdout,
            stderr: String::new(),
        })
    }
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ValidateResult {
    Predicate {
        dim: usize,
        atoms: Vec<String>,
        valid: bool,
        complete: bool,
        violations: Vec<Violation>,
    },
    Program {
        dim: usize,
        label: String,
        valid: bool,
        trace_preserving: bool,
        trace_deviation: f64,
        completely_positive: bool,
        choi_min_eigenvalue: f64,
        positivity: PositivityVerdict,
    },
    InvalidProgram {
        valid: bool,
        error: String,
    },
}

pub fn validate(ctx: &Context, path: &Path) -> Result<Outcome, CliError> {
    let text = read_text(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let manifest = ctx.manifest("validate", &[path]);
    let (result, problems) = if value.get("atoms").is_some() {
        let p: Predicate = decode(value, path, "predicate")?;
        let report = validate_predicate(&p, &ctx.tol)?;
        let problems = report.messages();
        let result = ValidateResult::Predicate {
            dim: p.dim(),
            atoms: p.space().atoms().to_vec(),
            valid: report.valid,
            complete: report.complete,
            violations: report.violations,
        };
        (result, problems)
    } else if value.get("repr").is_some() {
        let file: ProgramFile = decode(value, path, "program")?;
        match file.build(&ctx.tol) {
            Err(e) => {
                let error = e.to_string();
                (
                    ValidateResult::InvalidProgram {
                        valid: false,
                        error: error.clone(),
                    },
                    vec![error],
                )
            }
            Ok(c) => {
                let tp = c.is_trace_preserving(&ctx.tol);
                let positivity = c.is_positive_sampled(&ctx.tol, ctx.seed)?;
                let mut problems = Vec::new();
                if !tp {
                    problems.push(format!("not trace preserving (deviation {:e})", c.trace_deviation()));
                }
                if let PositivityVerdict::Counterexample { min_eigenvalue, .. } = &positivity {
                    problems.push(format!("not positive: a pure state maps to eigenvalue {min_eigenvalue:e}"));
                }
                let result = ValidateResult::Program {
                    dim: c.dim(),
                    label: c.label().to_string(),
                    valid: problems.is_empty(),
                    trace_preserving: tp,
                    trace_deviation: c.trace_deviation(),
                    completely_positive: c.is_completely_positive(&ctx.tol)?,
                    choi_min_eigenvalue: c.choi_eigenvalues()?[0],
                    positivity,
                };
                (result, problems)
            }
        }
    } else {
        return Err(CliError::io(format!(
            "{}: not a predicate (no \"atoms\") or a program (no \"repr\")",
            path.display()
        )));
    };
    let status = if problems.is_empty() { 0 } else { STATUS_SEMANTIC };
    let mut outcome = ctx.emit(manifest, result, status)?;
    for p in problems {
        outcome.stderr.push_str(&format!("invalid: {p}\n"));
    }
    Ok(outcome)
}

#[derive(Serialize)]
pub struct WpReport {
    pub program: String,
    pub dim: usize,
    pub input_complete: bool,
    pub output_complete: bool,
    pub duality_states: usize,
    pub max_duality_residual: f64,
    pub positivity: PositivityVerdict,
    pub warnings: Vec<String>,
}

pub fn wp(ctx: &Context, program: &Path, predicate: &Path) -> Result<Outcome, CliError> {
    let c = read_program(program, &ctx.tol)?;
    let f = read_predicate(predicate)?;
    if c.dim() != f.dim() {
        return Err(CliError::semantic(format!(
            "dimension mismatch: program acts on dimension {}, predicate has dimension {}",
            c.dim(),
            f.dim()
        )));
    }
    let audited = wp_audited(&c, &f, &ctx.tol, ctx.seed)?;
    let mut rng = rng_from_seed(sub_seed(ctx.seed, 1));
    let mut max_residual = 0.0f64;
    for _ in 0..WP_RESIDUAL_STATES {
        let rho = random_state(c.dim(), &mut rng)?;
        for r in duality_residual(&c, &f, &rho, &ctx.tol)? {
            max_residual = max_residual.max(r);
        }
    }
    let report = WpReport {
        program: c.label().to_string(),
        dim: c.dim(),
        input_complete: is_complete(&f, &ctx.tol),
        output_complete: is_complete(&audited.predicate, &ctx.tol),
        duality_states: WP_RESIDUAL_STATES,
        max_duality_residual: max_residual,
        positivity: audited.positivity,
        warnings: audited.warnings,
    };
    let manifest = ctx.manifest("wp", &[program, predicate]);
    match &ctx.out {
        Some(out) => {
            write_json(out, &audited.predicate)?;
            let sidecar = sidecar_path(out);
            write_json(
                &sidecar,
                &Report {
                    manifest,
                    timestamp: timestamp(),
                    result: report,
                },
            )?;
            Ok(Outcome::default())
        }
        None => {
            #[derive(Serialize)]
            struct Both<'a> {
                predicate: &'a Predicate,
                report: WpReport,
            }
            ctx.emit(
                manifest,
                Both {
                    predicate: &audited.predicate,
                    report,
                },
                0,
            )
        }
    }
}

/// `wp.json` → `wp.report.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("report.json")
}

pub fn verify(ctx: &Context, path: &Path) -> Result<Outcome, CliError> {
    let value: Value = read_json(path)?;
    let mut obj = match value {
        Value::Object(m) => m,
        _ => return Err(CliError::io(format!("{}: a triple must be a JSON object", path.display()))),
    };
    let mut take = |key: &str| {
        obj.remove(key)
            .ok_or_else(|| CliError::io(format!("{}: missing field `{key}`", path.display())))
    };
    let (pre, prog, post) = (take("pre")?, take("prog")?, take("post")?);
    let pre: Predicate = decode(pre, path, "precondition")?;
    let prog: ProgramFile = decode(prog, path, "program")?;
    let post: Predicate = decode(post, path, "postcondition")?;
    let prog = build_program(prog, path, &ctx.tol)?;
    let triple = HoareTriple::new(pre, prog, post)?;
    let report: VerificationReport = verify_triple(&triple, &ctx.tol, ctx.seed)?;
    let holds = report.holds();
    let note = report.witness.as_ref().map(|w| {
        format!(
            "triple fails at atom `{}`: Tr(G ρ) = {:.6} > Tr(F C(ρ)) = {:.6}\n",
            w.atom, w.lhs, w.rhs
        )
    });
    let mut outcome = ctx.emit(ctx.manifest("verify", &[path]), report, if holds { 0 } else { STATUS_FAILED })?;
    if !holds {
        outcome.stderr = note.unwrap_or_else(|| "triple fails\n".into());
    }
    Ok(outcome)
}

#[derive(Serialize)]
struct SatResult {
    sat: SatMeasure,
    total: f64,
}

pub fn sat_cmd(ctx: &Context, state: &Path, predicate: &Path) -> Result<Outcome, CliError> {
    let m: ComplexMatrix = read_json(state)?;
    let rho = DensityState::new(m, &ctx.tol).map_err(|e| CliError::semantic(format!("{}: {e}", state.display())))?;
    let p = read_predicate(predicate)?;
    if rho.dim() != p.dim() {
        return Err(CliError::semantic(format!(
            "dimension mismatch: state has dimension {}, predicate has dimension {}",
            rho.dim(),
            p.dim()
        )));
    }
    let measure = sat(&rho, &p, &ctx.tol)?;
    let total = measure.total();
    ctx.emit(ctx.manifest("sat", &[state, predicate]), SatResult { sat: measure, total }, 0)
}

pub fn properties(ctx: &Context, suite: Suite, dims: &[usize], trials: Option<usize>) -> Result<Outcome, CliError> {
    let trials = trials.unwrap_or(ctx.tol.sample_count);
    if trials == 0 {
        return Err(CliError::semantic("trials must be positive"));
    }
    let report: CampaignReport = run_campaign(suite, dims, trials, ctx.seed, &ctx.tol)?;
    let passed = report.passed;
    let failures: Vec<String> = report
        .suites
        .iter()
        .filter(|s| !s.passed)
        .map(|s| {
            format!(
                "{:?}: {} failing trials, first: {}\n",
                s.suite,
                s.failures,
                s.first_failure.as_deref().unwrap_or("?")
            )
        })
        .collect();
    let mut outcome = ctx.emit(ctx.manifest("properties", &[]), report, if passed { 0 } else { STATUS_FAILED })?;
    outcome.stderr = failures.concat();
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_sits_next_to_output() {
        assert_eq!(sidecar_path(Path::new("out/wp.json")), PathBuf::from("out/wp.report.json"));
        assert_eq!(sidecar_path(Path::new("wp")), PathBuf::from("wp.report.json"));
    }
}
