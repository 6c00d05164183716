use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use xiboot_core::seed::{child_seed, rng_from_seed};
use xiboot_core::simulation::{CalibrationResult, StudyConfig};
use xiboot_core::{calibrate_truth, estimate, run_study, xi};

use crate::error::CliError;
use crate::input::read_input;
use crate::manifest::RunManifest;
use crate::{BootstrapArgs, CalibrateArgs, Command, ExecArgs, StudyArgs, XiArgs};

/// Runs `command` inside a thread pool sized by its `--threads` flag.
pub fn dispatch(command: &Command) -> Result<String, CliError> {
    let exec = match command {
        Command::Xi(a) => &a.exec,
        Command::Bootstrap(a) => &a.exec,
        Command::Calibrate(a) => &a.exec,
        Command::Study(a) => &a.exec,
    };
    let threads = resolve_threads(exec)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match command {
        Command::Xi(a) => cmd_xi(a, threads),
        Command::Bootstrap(a) => cmd_bootstrap(a, threads),
        Command::Calibrate(a) => cmd_calibrate(a, threads),
        Command::Study(a) => cmd_study(a, threads),
    })
}

fn resolve_threads(exec: &ExecArgs) -> Result<usize, CliError> {
    match exec.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => Ok(t),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn cmd_xi(args: &XiArgs, threads: usize) -> Result<String, CliError> {
    let input = read_input(&args.input)?;
    let sample = &input.sample;
    let value = xi(sample, &mut rng_from_seed(child_seed(args.exec.seed, 0)))?;
    let formula = if sample.y_tie_count() == 0 { "no-ties" } else { "ties" };
    let manifest = RunManifest::new(
        "xi",
        json!({}),
        args.exec.seed,
        Some(input.digest.clone()),
        threads,
    );
    to_json(&json!({
        "xi": value,
        "n": sample.len(),
        "x_ties": sample.x_tie_count(),
        "y_ties": sample.y_tie_count(),
        "formula": formula,
        "manifest": manifest,
    }))
}

fn cmd_bootstrap(args: &BootstrapArgs, threads: usize) -> Result<String, CliError> {
    let input = read_input(&args.input)?;
    let sample = &input.sample;
    let rule = args.rule.rule();
    let est = estimate(sample, &rule, args.replicates, args.level, args.exec.seed)?;
    let (e, trace) = (&est.estimate, &est.trace);
    let chosen = trace.chosen();
    let manifest = RunManifest::new(
        "bootstrap",
        json!({ "rule": rule, "replicates": args.replicates, "level": args.level }),
        args.exec.seed,
        Some(input.digest.clone()),
        threads,
    );
    to_json(&json!({
        "xi_n": e.xi_n,
        "n": sample.len(),
        "chosen_m": trace.chosen_m,
        "chosen_index": trace.chosen_index,
        "candidate_ms": trace.candidate_ms(),
        "distance_matrix": trace.pairwise_distances,
        "sigma_star_sq": e.sigma_star_sq,
        "ci": [e.ci_low, e.ci_high],
        "level": e.level,
        "z": e.z,
        "center": chosen.center(),
        "centering": "bootstrap-mean",
        "discrete_rate_warning": trace.discrete_rate_warning,
        "manifest": manifest,
    }))
}

fn cmd_calibrate(args: &CalibrateArgs, threads: usize) -> Result<String, CliError> {
    let model = args.model.model();
    let cal = &args.calibration;
    let result = calibrate_truth(&model, cal.n_cal, cal.m_cal, args.exec.seed)?;
    let manifest = RunManifest::new(
        "calibrate",
        json!({ "model": model, "n_cal": cal.n_cal, "M_cal": cal.m_cal }),
        args.exec.seed,
        None,
        threads,
    );
    let mut doc = serde_json::to_value(result)?;
    doc["manifest"] = serde_json::to_value(manifest)?;
    let out = to_json(&doc)?;
    if let Some(path) = &args.out {
        write_file(path, out.as_bytes())?;
    }
    Ok(out)
}

fn load_truth(path: &Path) -> Result<CalibrationResult, CliError> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Usage(format!("{}: not a calibration file: {e}", path.display())))
}

fn cmd_study(args: &StudyArgs, threads: usize) -> Result<String, CliError> {
    let cfg = StudyConfig {
        model: args.model.model(),
        n: args.n,
        runs: args.runs,
        replicates: args.replicates,
        rule: args.rule.rule(),
        level: args.level,
        seed: args.exec.seed,
    };
    cfg.validate()?;
    let (truth, truth_source) = match &args.truth {
        Some(path) => (load_truth(path)?, Value::String(path.display().to_string())),
        None => {
            let cal = &args.calibration;
            // Calibration draws from its own branch so it never overlaps run streams.
            let seed = child_seed(args.exec.seed, u64::MAX);
            (calibrate_truth(&cfg.model, cal.n_cal, cal.m_cal, seed)?, Value::from("inline"))
        }
    };
    let report = run_study(&cfg, &truth)?;

    fs::create_dir_all(&args.out).map_err(|source| CliError::Io {
        path: args.out.display().to_string(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    for record in &report.records {
        writer.serialize(record)?;
    }
    let runs_csv = writer.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    write_file(&args.out.join("runs.csv"), &runs_csv)?;

    let manifest = RunManifest::new("study", serde_json::to_value(&cfg)?, cfg.seed, None, threads);
    let out = to_json(&json!({
        "rmse": report.rmse,
        "rrmse": report.rrmse,
        "coverage": report.coverage,
        "coverage_se": report.coverage_se,
        "mean_ci_length": report.mean_ci_length,
        "mean_sigma_star_sq": report.mean_sigma_star_sq,
        "truth_xi": report.truth_xi,
        "truth_sigma_sq": report.truth_sigma_sq,
        "successful_runs": report.records.len(),
        "failures": report.failures,
        "truth": truth,
        "truth_source": truth_source,
        "manifest": manifest,
    }))?;
    write_file(&args.out.join("report.json"), out.as_bytes())?;
    Ok(out)
}
