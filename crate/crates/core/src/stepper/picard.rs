//! Successive approximation with lagged nonlinear terms.
//!
//! Iterate `j + 1` solves the linear problem whose forcing is the nonlinear
//! tendency of iterate `j`, starting from the zero trajectory. Each linear
//! problem is integrated with the exponential trapezoid rule
//! `y_{m+1} = E y_m + (h/2) (E F_m + F_{m+1})` on a fixed node grid, the
//! forcing being interpolated linearly in time between stored nodes.

use super::StepError;
use crate::model::{tendencies, ModelParams, SpectralState, State, VelocityMode};
use crate::spectral::{frac_symbol, leray_project_spectrum, SpectralGrid, Spectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    pub t0: f64,
    pub n_time_nodes: usize,
    pub max_iters: usize,
    pub tol: f64,
    /// Trapezoid substeps between consecutive stored nodes.
    pub substeps: usize,
    /// Stop early once the difference functional stops decreasing.
    pub contraction_report: bool,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            t0: 0.1,
            n_time_nodes: 17,
            max_iters: 30,
            tol: 1e-9,
            substeps: 2,
            contraction_report: true,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(format!("t0 = {} must be > 0", self.t0));
        }
        if self.n_time_nodes < 16 {
            return Err(format!(
                "n_time_nodes = {} must be at least 16",
                self.n_time_nodes
            ));
        }
        if self.max_iters == 0 || self.substeps == 0 {
            return Err("max_iters and substeps must be positive".into());
        }
        if !(self.tol > 0.0) {
            return Err(format!("tol = {} must be > 0", self.tol));
        }
        Ok(())
    }

    /// Spacing of the stored nodes.
    pub fn node_spacing(&self) -> f64 {
        self.t0 / (self.n_time_nodes - 1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub iters: usize,
    /// `sup_t W^j` for `j = 1..=iters`.
    pub w_history: Vec<f64>,
    /// `sup W^{j+1} / sup W^j`, one entry fewer than `w_history`.
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    /// Set when iteration stopped without converging.
    pub diagnosis: Option<String>,
}

impl PicardReport {
    /// Converged with every ratio from the second onward at most `bound`.
    pub fn contracts_by(&self, bound: f64) -> bool {
        self.converged && self.contraction_ratios.iter().skip(1).all(|&r| r <= bound)
    }
}

struct Linear {
    sym_n: Vec<f64>,
    sym_c: Vec<f64>,
    sym_u: Vec<f64>,
    dynamic_u: bool,
}

impl Linear {
    fn new(grid: &SpectralGrid, params: &ModelParams) -> Self {
        let k2 = grid.k_squared();
        Self {
            sym_n: k2.iter().map(|k| params.kappa_n * k).collect(),
            sym_c: k2.iter().map(|k| params.kappa_c * k).collect(),
            sym_u: frac_symbol(grid, params.alpha),
            dynamic_u: params.velocity == VelocityMode::Dynamic,
        }
    }

    /// `y <- E(h) y + (h/2) (E(h) f0 + f1)` on one spectrum.
    fn trapezoid(y: &mut Spectrum, f0: &Spectrum, f1: &Spectrum, symbol: &[f64], h: f64) {
        let y = y.coeffs_mut();
        for i in 0..y.len() {
            let e = (-symbol[i] * h).exp();
            y[i] = e * y[i] + 0.5 * h * (e * f0.coeffs()[i] + f1.coeffs()[i]);
        }
    }

    fn step(&self, y: &mut SpectralState, f0: &SpectralState, f1: &SpectralState, h: f64) {
        Self::trapezoid(&mut y.n, &f0.n, &f1.n, &self.sym_n, h);
        Self::trapezoid(&mut y.c, &f0.c, &f1.c, &self.sym_c, h);
        if self.dynamic_u {
            for axis in 0..y.u.len() {
                Self::trapezoid(&mut y.u[axis], &f0.u[axis], &f1.u[axis], &self.sym_u, h);
            }
            leray_project_spectrum(&mut y.u);
        }
    }
}

fn lerp(a: &SpectralState, b: &SpectralState, theta: f64) -> SpectralState {
    let mut out = a.clone();
    out.for_each_mut(|_, s| s.apply_symbol(|_| 1.0 - theta));
    out.axpy(theta, b);
    out
}

/// `|n|^2_{L^2} + |c|^2_{H^1} + |u|^2_{L^2}` of a spectral difference.
fn w_functional(d: &SpectralState) -> f64 {
    let grid = d.grid();
    let scale = grid.volume() / (grid.len() as f64).powi(2);
    let k2 = grid.k_squared();
    let c_h1: f64 = d
        .c
        .coeffs()
        .iter()
        .zip(k2)
        .map(|(z, k)| (1.0 + k) * z.norm_sqr())
        .sum();
    let u: f64 = d.u.iter().map(Spectrum::energy).sum();
    scale * (d.n.energy() + c_h1 + u)
}

/// Runs the iteration on `[0, cfg.t0]` and returns the last iterate at the
/// stored nodes together with the convergence report.
pub fn picard_solve(
    state0: &State,
    params: &ModelParams,
    cfg: &PicardConfig,
) -> Result<(Vec<State>, PicardReport), StepError> {
    cfg.validate().map_err(StepError::Config)?;
    params.validate(state0.c.sup_abs())?;
    let grid = state0.grid();
    let linear = Linear::new(grid, params);
    let nodes = cfg.n_time_nodes;
    let h_node = cfg.node_spacing();
    let h = h_node / cfg.substeps as f64;
    let mut y0 = SpectralState::from_state(state0);
    if linear.dynamic_u {
        leray_project_spectrum(&mut y0.u);
    }

    let mut prev: Vec<SpectralState> = vec![SpectralState::zeros(grid); nodes];
    let mut report = PicardReport {
        iters: 0,
        w_history: Vec::new(),
        contraction_ratios: Vec::new(),
        converged: false,
        diagnosis: None,
    };
    let frozen_u = !linear.dynamic_u;

    for _ in 0..cfg.max_iters {
        let forcing = prev
            .iter()
            .map(|y| {
                let t = tendencies(y, params)?;
                let zeros = || y.u.iter().map(|s| s.scaled(0.0)).collect();
                Ok(SpectralState {
                    n: t.n,
                    c: t.c,
                    u: t.u.unwrap_or_else(zeros),
                })
            })
            .collect::<Result<Vec<_>, StepError>>()?;
        let mut next = Vec::with_capacity(nodes);
        let mut y = y0.clone();
        next.push(y.clone());
        for m in 0..nodes - 1 {
            for sub in 0..cfg.substeps {
                let a = sub as f64 / cfg.substeps as f64;
                let b = (sub + 1) as f64 / cfg.substeps as f64;
                let f0 = lerp(&forcing[m], &forcing[m + 1], a);
                let f1 = lerp(&forcing[m], &forcing[m + 1], b);
                linear.step(&mut y, &f0, &f1, h);
            }
            if frozen_u {
                y.u = y0.u.clone();
            }
            next.push(y.clone());
        }

        let w = prev
            .iter()
            .zip(&next)
            .map(|(p, q)| {
                let mut d = q.clone();
                d.axpy(-1.0, p);
                w_functional(&d)
            })
            .fold(0.0, f64::max);
        if let Some(&last) = report.w_history.last() {
            report.contraction_ratios.push(if last > 0.0 { w / last } else { 0.0 });
        }
        report.w_history.push(w);
        report.iters += 1;
        prev = next;

        if !w.is_finite() {
            report.diagnosis = Some("no-contraction: iterates became non-finite".into());
            break;
        }
        if w <= cfg.tol {
            report.converged = true;
            break;
        }
        let r = &report.contraction_ratios;
        if cfg.contraction_report && r.len() >= 3 && r[r.len() - 3..].iter().all(|&x| x >= 1.0) {
            report.diagnosis = Some(format!(
                "no-contraction: sup W grew over three consecutive iterations (last ratio {:.3})",
                r[r.len() - 1]
            ));
            break;
        }
    }
    if !report.converged && report.diagnosis.is_none() {
        report.diagnosis = Some(format!(
            "no-contraction: sup W = {:e} above tol after {} iterations",
            report.w_history.last().copied().unwrap_or(f64::NAN),
            report.iters
        ));
    }

    let trajectory = prev
        .iter()
        .enumerate()
        .map(|(m, y)| y.to_state(m as f64 * h_node))
        .collect();
    Ok((trajectory, report))
}

/// Outcome of the window search.
#[derive(Debug, Clone)]
pub struct WindowSearch {
    pub t0: f64,
    pub trajectory: Vec<State>,
    pub report: PicardReport,
    /// `(t0, contracted)` for every attempted window.
    pub attempts: Vec<(f64, bool)>,
}

/// Halves `cfg.t0` until the iteration contracts by `bound`, then bisects
/// `refinements` times between the last failure and the first success to
/// enlarge the window. Returns `None` if no window succeeds within
/// `max_halvings`.
pub fn find_contractive_window(
    state0: &State,
    params: &ModelParams,
    cfg: &PicardConfig,
    bound: f64,
    max_halvings: usize,
    refinements: usize,
) -> Result<Option<WindowSearch>, StepError> {
    let mut attempts = Vec::new();
    let mut t = cfg.t0;
    let mut failed: Option<f64> = None;
    let mut best = None;
    for _ in 0..=max_halvings {
        let trial = PicardConfig { t0: t, ..cfg.clone() };
        let (traj, report) = picard_solve(state0, params, &trial)?;
        let ok = report.contracts_by(bound);
        attempts.push((t, ok));
        if ok {
            best = Some((t, traj, report));
            break;
        }
        failed = Some(t);
        t *= 0.5;
    }
    let Some((mut lo, mut traj, mut report)) = best else {
        return Ok(None);
    };
    if let Some(mut hi) = failed {
        for _ in 0..refinements {
            let mid = 0.5 * (lo + hi);
            let trial = PicardConfig { t0: mid, ..cfg.clone() };
            let (tr, rep) = picard_solve(state0, params, &trial)?;
            let ok = rep.contracts_by(bound);
            attempts.push((mid, ok));
            if ok {
                lo = mid;
                traj = tr;
                report = rep;
            } else {
                hi = mid;
            }
        }
    }
    Ok(Some(WindowSearch {
        t0: lo,
        trajectory: traj,
        report,
        attempts,
    }))
}
