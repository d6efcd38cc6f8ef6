//! Orchestration of configured runs: build the model and initial data, run
//! the stepper or the successive-approximation solver, write outputs.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::diagnostics::{
    check_pairs, fit_decay_for, CriterionKind, CriterionSpec, DecayFit, Diagnostics,
    DiagnosticsConfig, DiagnosticsError, DiagnosticsRecord, MonitorVerdict, NormSpec, PairVerdict,
    Tracker,
};
use crate::io::{
    build_grid, build_initial, decode_snapshot, emit_timeseries, encode_snapshot, write_snapshot,
    IoError, RunConfig,
};
use crate::model::{ModelError, ModelParams, State};
use crate::oracle::{fd_derivative, DenseSpectralOracle};
use crate::random::bandlimited_field;
use crate::spectral::{
    fft_forward, frac_laplacian, leray_project, Field, SpectralGrid, VectorField,
};
use crate::stepper::{
    find_contractive_window, picard_solve, run_with, PicardReport, RunObserver, RunSummary,
    StepError, Stepper,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SINGULARITY: i32 = 3;
pub const EXIT_MONITOR: i32 = 4;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Step(StepError),
    #[error(transparent)]
    Diagnostics(DiagnosticsError),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Io(IoError::Config { .. }) => EXIT_CONFIG,
            ExperimentError::Step(StepError::SuspectedSingularity { .. }) => EXIT_SINGULARITY,
            ExperimentError::Step(StepError::Config(_) | StepError::Model(_)) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        }
    }
}

impl From<StepError> for ExperimentError {
    fn from(e: StepError) -> Self {
        ExperimentError::Step(e)
    }
}

impl From<ModelError> for ExperimentError {
    fn from(e: ModelError) -> Self {
        ExperimentError::Config(e.to_string())
    }
}

impl From<DiagnosticsError> for ExperimentError {
    fn from(e: DiagnosticsError) -> Self {
        match e {
            DiagnosticsError::Invalid(_) | DiagnosticsError::OutOfRange(_) => {
                ExperimentError::Config(e.to_string())
            }
            other => ExperimentError::Diagnostics(other),
        }
    }
}

/// Grid, coefficients and validated initial state of a configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub grid: Arc<SpectralGrid>,
    pub params: ModelParams,
    pub state0: State,
}

pub fn prepare(cfg: &RunConfig, base_dir: &Path) -> Result<Prepared, ExperimentError> {
    let grid = build_grid(&cfg.grid)?;
    let params = cfg.model.to_params(&grid);
    let state0 = build_initial(&cfg.initial, &grid, base_dir)?;
    params.validate(state0.c.sup_abs())?;
    Ok(Prepared {
        grid,
        params,
        state0,
    })
}

fn output_dir(cfg: &RunConfig, base_dir: &Path) -> Result<PathBuf, ExperimentError> {
    let dir = base_dir.join(&cfg.output.dir);
    std::fs::create_dir_all(&dir).map_err(|e| IoError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, text).map_err(|e| {
        ExperimentError::Io(IoError::Io {
            path: path.display().to_string(),
            source: e,
        })
    })
}

pub fn diagnostics_for(cfg: &RunConfig, params: &ModelParams, c_max: f64) -> Result<Diagnostics, ExperimentError> {
    let d = &cfg.diagnostics;
    Ok(Diagnostics::new(
        DiagnosticsConfig {
            norms: d.norms.clone(),
            cadence: d.cadence,
            criterion: d.criterion.clone(),
            grad_c_variant: d.grad_c_variant,
        },
        params,
        c_max,
    )?)
}

struct Observer {
    tracker: Tracker,
    checkpoint_every: usize,
    dir: PathBuf,
    alpha: f64,
    checkpoints: Vec<PathBuf>,
}

impl RunObserver for Observer {
    fn observe(&mut self, state: &State, step: usize) -> Result<(), String> {
        self.tracker.observe(state, step)?;
        if self.checkpoint_every > 0 && step > 0 && step.is_multiple_of(self.checkpoint_every) {
            let path = self.dir.join(format!("checkpoint_{step:06}.cnsf"));
            write_snapshot(state, self.alpha, &path).map_err(|e| e.to_string())?;
            self.checkpoints.push(path);
        }
        Ok(())
    }

    fn latest_record(&self) -> Option<DiagnosticsRecord> {
        self.tracker.latest_record()
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub records: Vec<DiagnosticsRecord>,
    pub columns: Vec<String>,
    pub failures: Vec<MonitorVerdict>,
    pub reports: Vec<MonitorVerdict>,
    pub fits: Vec<DecayFit>,
    pub timeseries: PathBuf,
    pub final_snapshot: PathBuf,
    pub checkpoints: Vec<PathBuf>,
}

/// Runs the stepper to `t_end`, writing the time series, checkpoints and the
/// final snapshot under the output directory (relative to `base_dir`). On a
/// suspected singularity the time series up to that point is still written.
pub fn run_experiment(cfg: &RunConfig, base_dir: &Path) -> Result<RunOutcome, ExperimentError> {
    let prep = prepare(cfg, base_dir)?;
    let dir = output_dir(cfg, base_dir)?;
    let diagnostics = diagnostics_for(cfg, &prep.params, prep.state0.c.sup_abs())?;
    let columns = diagnostics.columns();
    let stepper = Stepper::new(&prep.params, &cfg.stepper, &prep.state0)?;
    let mut observer = Observer {
        tracker: Tracker::new(diagnostics, cfg.diagnostics.tolerances),
        checkpoint_every: cfg.output.checkpoint_every,
        dir: dir.clone(),
        alpha: prep.params.alpha,
        checkpoints: Vec::new(),
    };
    let result = run_with(&stepper, &prep.state0, &mut observer);
    if let Ok(summary) = &result {
        observer.tracker.finish(&summary.final_state)?;
    }
    let timeseries = dir.join(&cfg.output.timeseries);
    write_text(&timeseries, &emit_timeseries(&observer.tracker.records, &columns))?;
    let summary = result?;
    let final_snapshot = dir.join(&cfg.output.final_snapshot);
    write_snapshot(&summary.final_state, prep.params.alpha, &final_snapshot)?;

    let mut fits = Vec::new();
    for fw in &cfg.diagnostics.fits {
        let series: Vec<(f64, f64)> = observer
            .tracker
            .records
            .iter()
            .filter_map(|r| r.get(&fw.column).map(|v| (r.t, v)))
            .collect();
        let selector: Option<NormSpec> = fw.column.parse().ok();
        let fit = match &selector {
            Some(s) => fit_decay_for(&series, fw.window, s, prep.params.alpha, prep.grid.dim())?,
            None => {
                let mut f = crate::diagnostics::fit_decay(&series, fw.window)?;
                f.selector = Some(fw.column.clone());
                f
            }
        };
        fits.push(fit);
    }
    let Observer {
        tracker, checkpoints, ..
    } = observer;
    Ok(RunOutcome {
        summary,
        records: tracker.records,
        columns,
        failures: tracker.failures,
        reports: tracker.reports,
        fits,
        timeseries,
        final_snapshot,
        checkpoints,
    })
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub t0: f64,
    pub report: PicardReport,
    /// `(t0, contracted)` of every attempted window (one entry without search).
    pub attempts: Vec<(f64, bool)>,
    pub trajectory: Vec<State>,
    pub report_path: PathBuf,
}

fn picard_csv(report: &PicardReport) -> String {
    let mut s = String::from("iteration,W,ratio\n");
    for (i, w) in report.w_history.iter().enumerate() {
        let ratio = if i == 0 {
            f64::NAN
        } else {
            report.contraction_ratios[i - 1]
        };
        s.push_str(&format!("{},{w:.16e},{ratio:.16e}\n", i + 1));
    }
    s
}

/// Runs the successive-approximation solver, optionally searching for a
/// window that contracts by the configured bound.
pub fn picard_experiment(cfg: &RunConfig, base_dir: &Path) -> Result<PicardOutcome, ExperimentError> {
    let prep = prepare(cfg, base_dir)?;
    let dir = output_dir(cfg, base_dir)?;
    let p = &cfg.picard;
    let (t0, report, attempts, trajectory) = if p.search {
        match find_contractive_window(
            &prep.state0,
            &prep.params,
            &p.config,
            p.bound,
            p.max_halvings,
            p.refinements,
        )? {
            Some(w) => (w.t0, w.report, w.attempts, w.trajectory),
            None => {
                let (traj, report) = picard_solve(&prep.state0, &prep.params, &p.config)?;
                (p.config.t0, report, vec![(p.config.t0, false)], traj)
            }
        }
    } else {
        let (traj, report) = picard_solve(&prep.state0, &prep.params, &p.config)?;
        let ok = report.contracts_by(p.bound);
        (p.config.t0, report, vec![(p.config.t0, ok)], traj)
    };
    let report_path = dir.join("picard.csv");
    write_text(&report_path, &picard_csv(&report))?;
    if let Some(last) = trajectory.last() {
        write_snapshot(last, prep.params.alpha, &dir.join(&cfg.output.final_snapshot))?;
    }
    Ok(PicardOutcome {
        t0,
        report,
        attempts,
        trajectory,
        report_path,
    })
}

/// Classifies pairs given as `p1,q1[,p2,q2]`.
pub fn check_criteria(alpha: f64, kind: CriterionKind, pairs: &[f64]) -> Result<Vec<PairVerdict>, ExperimentError> {
    if pairs.len() != 2 && pairs.len() != 4 {
        return Err(ExperimentError::Config(
            "--pairs expects p1,q1 or p1,q1,p2,q2".into(),
        ));
    }
    let spec = CriterionSpec {
        kind,
        pairs: pairs.chunks(2).map(|c| (c[0], c[1])).collect(),
        alpha,
    };
    Ok(check_pairs(&spec)?)
}

/// One line of the `validate` report.
#[derive(Debug, Clone)]
pub struct ValidationLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Self-checks of the fast operators against the oracles on an `n`-point grid
/// (dense comparisons use at most 16 points per axis).
pub fn validate(n: usize) -> Result<Vec<ValidationLine>, ExperimentError> {
    use std::f64::consts::PI;
    let mut out = Vec::new();
    let mut line = |name: &str, passed: bool, detail: String| {
        out.push(ValidationLine {
            name: name.into(),
            passed,
            detail,
        })
    };
    let cfg_err = |e: crate::spectral::SpectralError| ExperimentError::Config(e.to_string());

    let small = SpectralGrid::uniform(3, n.min(16), 2.0 * PI).map_err(cfg_err)?;
    let oracle = DenseSpectralOracle::new(&small).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut worst = 0.0f64;
    let mut ok = true;
    for seed in 0..5 {
        let f = bandlimited_field(&small, seed, 0, small.sizes()[0] / 2 - 1, 1.0).map_err(cfg_err)?;
        for s in [0.6, 0.75, 1.0, 1.25] {
            let fast = frac_laplacian(&f, s).map_err(cfg_err)?;
            match oracle.check_frac_laplacian(&f, s, &fast, 1e-12) {
                Ok(d) => worst = worst.max(d),
                Err(e) => {
                    ok = false;
                    worst = f64::NAN;
                    line("dense-oracle", false, e.to_string());
                }
            }
        }
    }
    if ok {
        line("dense-oracle", true, format!("max relative deviation {worst:.3e}"));
    }

    let grid = SpectralGrid::uniform(2, n, 2.0 * PI).map_err(cfg_err)?;
    let f = Field::from_fn(&grid, |x| (2.0 * x[0] + x[1]).cos());
    let s = 0.75;
    let t = 0.3;
    let mut spec = fft_forward(&f);
    let k2 = grid.k_squared().to_vec();
    spec.apply_symbol(|i| (-k2[i].powf(s) * t).exp());
    let evolved = crate::spectral::fft_inverse(&spec);
    let exact = f.scaled((-(5f64).powf(s) * t).exp());
    let err = evolved.axpy(-1.0, &exact).sup_abs() / exact.sup_abs();
    line("semigroup", err < 1e-12, format!("relative error {err:.3e}"));

    let errs: Vec<f64> = [n, 2 * n]
        .iter()
        .map(|&m| {
            let g = SpectralGrid::uniform(2, m, 2.0 * PI).map_err(cfg_err)?;
            let f = Field::from_fn(&g, |x| x[0].sin());
            let d = fd_derivative(&f, 0, 1).map_err(|e| ExperimentError::Config(e.to_string()))?;
            Ok(d.axpy(-1.0, &Field::from_fn(&g, |x| x[0].cos())).sup_abs())
        })
        .collect::<Result<_, ExperimentError>>()?;
    let order = (errs[0] / errs[1]).log2();
    line(
        "fd-order",
        (3.7..=4.3).contains(&order),
        format!("observed order {order:.3}"),
    );

    let u = VectorField::from_components(
        (0..2)
            .map(|j| bandlimited_field(&grid, 11, j, 3, 1.0))
            .collect::<Result<_, _>>()
            .map_err(cfg_err)?,
    )
    .map_err(cfg_err)?;
    let p = leray_project(&u);
    let pp = leray_project(&p);
    let idem = pp.axpy(-1.0, &p).sup_abs();
    let div = State::new(Field::zeros(&grid), Field::zeros(&grid), p)
        .map_err(|e| ExperimentError::Config(e.to_string()))?
        .relative_divergence();
    line(
        "leray",
        idem < 1e-13 && div < 1e-13,
        format!("idempotence {idem:.3e}, divergence {div:.3e}"),
    );

    let mut state = State::new(
        bandlimited_field(&grid, 3, 0, 3, 1.0).map_err(cfg_err)?,
        bandlimited_field(&grid, 3, 1, 3, 1.0).map_err(cfg_err)?,
        u,
    )
    .map_err(|e| ExperimentError::Config(e.to_string()))?;
    state.t = 0.25;
    let bytes = encode_snapshot(&state, 1.0);
    let back = decode_snapshot(&bytes)?;
    line(
        "snapshot",
        encode_snapshot(&back.state, back.alpha) == bytes,
        format!("{} bytes", bytes.len()),
    );

    let inf = f64::INFINITY;
    let a = check_criteria(1.0, CriterionKind::ProdiSerrin, &[2.0, inf])?;
    let b = check_criteria(1.0, CriterionKind::ProdiSerrin, &[2.0, 3.0])?;
    line(
        "criteria",
        a[0].is_admissible() && !b[0].is_admissible(),
        format!("(2, inf): {}, (2, 3): {}", a[0], b[0]),
    );
    Ok(out)
}
