use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use gwrk_core::bijection::{forest_to_path, path_to_forest};
use gwrk_core::diagnostics::{
    martingale_diagnostic, verify_discrete_rk, verify_excision, verify_law_equality, verify_rk_limit,
    ExperimentReport,
};
use gwrk_core::samplers::{sample_feller, sample_forest, sample_path, sample_population};
use gwrk_core::{ExplorationPath, Lane, Substream};

use crate::config::{ExperimentConfig, Verb};
use crate::error::{CliError, CliResult};
use crate::formats::{
    feller_csv, path_csv, population_csv, read_forest, read_path, report_csv, sidecar_path, to_json,
    write_file, ForestFile, PathSidecar,
};
use crate::parallel::ThreadPool;

/// Executes the configured verb. Single objects go to `--out` or `stdout`;
/// reports go to `--out` (JSON) plus a CSV next to it, or to `stdout` as
/// JSON only.
pub fn run(config: &ExperimentConfig, stdout: &mut dyn Write) -> CliResult<()> {
    let verb = config
        .verb
        .ok_or_else(|| CliError::Usage("no verb given".into()))?;
    let seed = config.seed;
    match verb {
        Verb::SamplePath => {
            let rates = config.rates()?;
            let path = sample_path(&rates, config.slope, &mut Substream::new(seed, 0, Lane::Path))?;
            let params = BTreeMap::from([
                ("lambda".to_string(), rates.lambda),
                ("mu".to_string(), rates.mu),
                ("ancestors".to_string(), rates.ancestors as f64),
            ]);
            emit_path(&path, Some(seed), params, config.out.as_deref(), stdout)
        }
        Verb::SampleTree => {
            let forest = sample_forest(&config.rates()?, &mut Substream::new(seed, 0, Lane::Forest))?;
            emit(to_json(&ForestFile::from_forest(&forest)).as_bytes(), config.out.as_deref(), stdout)
        }
        Verb::Population => {
            let renorm = config.renorm()?;
            let traj = sample_population(&renorm, config.horizon, &mut Substream::new(seed, 0, Lane::Population))?;
            emit(&population_csv(&traj, renorm.big_n)?, config.out.as_deref(), stdout)
        }
        Verb::Feller => {
            let path = sample_feller(
                &config.feller()?,
                config.horizon,
                config.dt,
                &mut Substream::new(seed, 0, Lane::Feller),
            )?;
            emit(&feller_csv(&path)?, config.out.as_deref(), stdout)
        }
        Verb::ToTree => {
            let path = read_path(input(config)?)?;
            let forest = path_to_forest(&path)?;
            emit(to_json(&ForestFile::from_forest(&forest)).as_bytes(), config.out.as_deref(), stdout)
        }
        Verb::ToPath => {
            let forest = read_forest(input(config)?)?;
            let path = forest_to_path(&forest, config.slope)?;
            emit_path(&path, None, BTreeMap::new(), config.out.as_deref(), stdout)
        }
        _ => {
            let report = run_report(verb, config)?;
            emit_report(&report, config.out.as_deref(), stdout)?;
            if config.assert && !report.passed {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.as_str())
                    .collect();
                let mut reason = format!("{} failed: {}", report.name, failed.join("; "));
                if !report.violations.is_empty() {
                    reason.push_str(&format!(" ({} violations)", report.violations.len()));
                }
                return Err(CliError::Assertion(reason));
            }
            Ok(())
        }
    }
}

/// Builds the report of a `verify-*` verb.
pub fn run_report(verb: Verb, config: &ExperimentConfig) -> CliResult<ExperimentReport> {
    let pool = ThreadPool::new(config.threads)?;
    let (n, seed) = (config.replicas, config.seed);
    let report = match verb {
        Verb::VerifyRkDiscrete => verify_discrete_rk(&config.rates()?, n, seed, &pool)?,
        Verb::VerifyLaw => verify_law_equality(&config.rates()?, n, seed, &pool)?,
        Verb::VerifyChop => verify_excision(&config.rates()?, config.excision_level()?, n, seed, &pool)?,
        Verb::VerifyMartingale => martingale_diagnostic(&config.renorm()?, &config.eval_times(), n, seed, &pool)?,
        Verb::VerifyRkLimit => verify_rk_limit(&config.renorm()?, &config.levels, n, config.dt, seed, &pool)?,
        other => return Err(CliError::Usage(format!("{} does not produce a report", other.name()))),
    };
    Ok(report)
}

fn input(config: &ExperimentConfig) -> CliResult<&Path> {
    config
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("--input is required".into()))
}

fn emit(bytes: &[u8], out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, bytes),
        None => stdout
            .write_all(bytes)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn has_extension(p: &Path, ext: &str) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn emit_path(
    path: &ExplorationPath,
    seed: Option<u64>,
    params: BTreeMap<String, f64>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> CliResult<()> {
    let csv = path_csv(path)?;
    match out {
        Some(p) => {
            if has_extension(p, "json") {
                return Err(CliError::Usage("path output must not end in .json, which is the sidecar".into()));
            }
            write_file(p, &csv)?;
            let side = PathSidecar::for_path(path, seed, params);
            write_file(&sidecar_path(p), to_json(&side).as_bytes())
        }
        None => emit(&csv, None, stdout),
    }
}

fn emit_report(report: &ExperimentReport, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<()> {
    let json = to_json(report);
    match out {
        Some(p) => {
            if has_extension(p, "csv") {
                return Err(CliError::Usage("report output must not end in .csv, which holds the flat rows".into()));
            }
            write_file(p, json.as_bytes())?;
            write_file(&p.with_extension("csv"), &report_csv(report)?)
        }
        None => emit(json.as_bytes(), None, stdout),
    }
}
