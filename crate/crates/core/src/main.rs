use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use chemns::diagnostics::{fit_decay_for, parse_exponent, CriterionKind, NormSpec, Verdict};
use chemns::experiment::{
    check_criteria, picard_experiment, run_experiment, validate, ExperimentError, RunOutcome,
    EXIT_CONFIG, EXIT_FAILURE, EXIT_MONITOR, EXIT_OK,
};
use chemns::io::{parse_config, parse_timeseries, RunConfig};

#[derive(Parser)]
#[command(name = "chemns", version, about = "Chemotaxis-fluid simulations on the periodic box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configuration to its end time.
    Run {
        config: PathBuf,
        /// Exit with status 4 when a monitor fails.
        #[arg(long)]
        strict: bool,
    },
    /// Run the successive-approximation solver on the configured window.
    Picard {
        config: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Classify exponent pairs of a regularity criterion.
    CheckCriteria {
        #[arg(long)]
        alpha: f64,
        /// `ps` or `bv`.
        #[arg(long)]
        kind: String,
        /// `p1,q1` or `p1,q1,p2,q2`; `inf` allowed.
        #[arg(long)]
        pairs: String,
        #[arg(long)]
        strict: bool,
    },
    /// Fit a decay exponent to one column of a time-series CSV.
    FitDecay {
        csv: PathBuf,
        #[arg(long)]
        column: String,
        /// `t_a,t_b`.
        #[arg(long)]
        window: String,
        /// Dissipation exponent used for the reference rate.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
    /// Check the fast operators against the reference oracles.
    Validate {
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long)]
        strict: bool,
    },
    /// Run several configurations concurrently; each writes to its own output directory.
    Sweep {
        configs: Vec<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
}

fn configure_threads() {
    if let Ok(v) = std::env::var("CHEMNS_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("ignoring CHEMNS_THREADS = '{v}' (expected a positive integer)"),
        }
    }
}

fn load(path: &Path) -> Result<(RunConfig, PathBuf), ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ExperimentError::Config(format!("cannot read {}: {e}", path.display()))
    })?;
    let cfg = parse_config(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

fn report_run(label: &str, outcome: &RunOutcome) -> bool {
    let s = &outcome.summary;
    println!(
        "{label}: t = {} after {} steps ({} rejected), {} records -> {}",
        s.final_state.t,
        s.accepted_steps,
        s.rejected_steps,
        outcome.records.len(),
        outcome.timeseries.display()
    );
    for f in &outcome.failures {
        if let Verdict::Fail { detail, .. } = &f.verdict {
            println!("{label}: monitor {} FAIL at t = {}: {detail}", f.name, f.t);
        }
    }
    for fit in &outcome.fits {
        let reference = fit
            .reference
            .map_or("none".to_string(), |r| format!("{r:.6}"));
        println!(
            "{label}: fit {} on [{}, {}]: exponent {:.6}, residual {:.3e}, reference {reference}",
            fit.selector.as_deref().unwrap_or("?"),
            fit.window.0,
            fit.window.1,
            fit.exponent,
            fit.residual
        );
    }
    outcome.failures.is_empty()
}

fn fail(e: ExperimentError) -> i32 {
    eprintln!("error: {e}");
    if let ExperimentError::Step(chemns::stepper::StepError::SuspectedSingularity {
        record: Some(r),
        ..
    }) = &e
    {
        eprintln!(
            "last record: t = {}, max n = {:e}, max c = {:e}, |u|_2^2 = {:e}",
            r.t, r.n_max, r.c_max, r.u_l2_sq
        );
    }
    e.exit_code()
}

fn execute(command: Command) -> i32 {
    match command {
        Command::Run { config, strict } => {
            let result = load(&config).and_then(|(cfg, base)| run_experiment(&cfg, &base));
            match result {
                Ok(outcome) => {
                    let clean = report_run("run", &outcome);
                    if strict && !clean {
                        EXIT_MONITOR
                    } else {
                        EXIT_OK
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::Picard { config, strict } => {
            match load(&config).and_then(|(cfg, base)| Ok((picard_experiment(&cfg, &base)?, cfg))) {
                Ok((out, cfg)) => {
                    for (i, w) in out.report.w_history.iter().enumerate() {
                        let ratio = if i == 0 {
                            String::new()
                        } else {
                            format!(", ratio {:.4}", out.report.contraction_ratios[i - 1])
                        };
                        println!("iteration {}: sup W = {w:.6e}{ratio}", i + 1);
                    }
                    println!(
                        "T0 = {}, converged = {}, contraction by {} = {}",
                        out.t0,
                        out.report.converged,
                        cfg.picard.bound,
                        out.report.contracts_by(cfg.picard.bound)
                    );
                    if let Some(d) = &out.report.diagnosis {
                        println!("diagnosis: {d}");
                    }
                    if strict && !out.report.converged {
                        EXIT_MONITOR
                    } else {
                        EXIT_OK
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::CheckCriteria {
            alpha,
            kind,
            pairs,
            strict,
        } => {
            let parsed = kind
                .parse::<CriterionKind>()
                .map_err(|e| ExperimentError::Config(e.to_string()))
                .and_then(|k| {
                    let values = pairs
                        .split(',')
                        .map(|p| parse_exponent(p).map_err(|e| ExperimentError::Config(e.to_string())))
                        .collect::<Result<Vec<_>, _>>()?;
                    check_criteria(alpha, k, &values)
                });
            match parsed {
                Ok(verdicts) => {
                    for (i, v) in verdicts.iter().enumerate() {
                        println!("pair {}: {v}", i + 1);
                    }
                    if strict && verdicts.iter().any(|v| !v.is_admissible()) {
                        EXIT_MONITOR
                    } else {
                        EXIT_OK
                    }
                }
                Err(e) => fail(e),
            }
        }
        Command::FitDecay {
            csv,
            column,
            window,
            alpha,
            dim,
        } => {
            let result = (|| -> Result<String, ExperimentError> {
                let text = std::fs::read_to_string(&csv).map_err(|e| {
                    ExperimentError::Config(format!("cannot read {}: {e}", csv.display()))
                })?;
                let ts = parse_timeseries(&text)?;
                let series = ts.series(&column)?;
                let bounds = window
                    .split(',')
                    .map(|s| chemns::io::parse_number(s).map_err(ExperimentError::Config))
                    .collect::<Result<Vec<_>, _>>()?;
                if bounds.len() != 2 {
                    return Err(ExperimentError::Config("--window expects t_a,t_b".into()));
                }
                let fit = match column.parse::<NormSpec>() {
                    Ok(sel) => fit_decay_for(&series, (bounds[0], bounds[1]), &sel, alpha, dim)?,
                    Err(_) => chemns::diagnostics::fit_decay(&series, (bounds[0], bounds[1]))?,
                };
                Ok(format!(
                    "{column}: exponent {:.8}, residual {:.3e}, samples {}, reference {}",
                    fit.exponent,
                    fit.residual,
                    fit.samples,
                    fit.reference.map_or("none".into(), |r| format!("{r:.8}"))
                ))
            })();
            match result {
                Ok(line) => {
                    println!("{line}");
                    EXIT_OK
                }
                Err(e) => fail(e),
            }
        }
        Command::Validate { grid, strict } => match validate(grid) {
            Ok(lines) => {
                let mut all = true;
                for l in &lines {
                    all &= l.passed;
                    println!(
                        "{} {}: {}",
                        if l.passed { "PASS" } else { "FAIL" },
                        l.name,
                        l.detail
                    );
                }
                match (all, strict) {
                    (true, _) => EXIT_OK,
                    (false, true) => EXIT_MONITOR,
                    (false, false) => EXIT_FAILURE,
                }
            }
            Err(e) => fail(e),
        },
        Command::Sweep { configs, strict } => {
            if configs.is_empty() {
                eprintln!("error: sweep needs at least one configuration");
                return EXIT_CONFIG;
            }
            let codes: Vec<i32> = configs
                .par_iter()
                .map(|path| {
                    let label = path.display().to_string();
                    match load(path).and_then(|(cfg, base)| run_experiment(&cfg, &base)) {
                        Ok(outcome) => {
                            if !report_run(&label, &outcome) && strict {
                                EXIT_MONITOR
                            } else {
                                EXIT_OK
                            }
                        }
                        Err(e) => {
                            eprintln!("{label}: error: {e}");
                            e.exit_code()
                        }
                    }
                })
                .collect();
            codes.into_iter().max().unwrap_or(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    ExitCode::from(execute(cli.command) as u8)
}
