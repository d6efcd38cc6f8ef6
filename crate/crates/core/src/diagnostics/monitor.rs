use super::record::{Accumulators, Diagnostics, DiagnosticsRecord};
use super::DiagnosticsError;
use crate::model::State;
use crate::spectral::{gradient, lp_norm, vector_lp_norm};
use crate::stepper::RunObserver;

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail { magnitude: f64, detail: String },
    /// Measured but not asserted.
    Reported { value: f64, detail: String },
}

impl Verdict {
    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail { .. })
    }
}

/// Monitor outcome at one record.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorVerdict {
    pub name: &'static str,
    pub t: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorTolerances {
    /// Relative growth allowed between consecutive records for monotone norms.
    pub monotone_slack: f64,
    /// Relative drift allowed on the density mass.
    pub mass: f64,
    /// Undershoot below zero allowed, relative to the initial sup.
    pub positivity: f64,
}

impl Default for MonitorTolerances {
    fn default() -> Self {
        Self {
            monotone_slack: 1e-10,
            mass: 1e-11,
            positivity: 1e-8,
        }
    }
}

/// Checks the unconditional Lyapunov statements between consecutive records:
/// `|c|_2` and `|c|_inf` nonincreasing, `c >= 0`, mass of `n` conserved. The
/// `|n|_2` balance is reported only.
#[derive(Debug, Clone)]
pub struct EnergyMonitors {
    pub tolerances: MonitorTolerances,
    s_fchi: f64,
    initial: Option<DiagnosticsRecord>,
    previous: Option<DiagnosticsRecord>,
}

impl EnergyMonitors {
    pub fn new(tolerances: MonitorTolerances, s_fchi: f64) -> Self {
        Self {
            tolerances,
            s_fchi,
            initial: None,
            previous: None,
        }
    }

    fn c_sup(r: &DiagnosticsRecord) -> f64 {
        r.c_max.abs().max(r.c_min.abs())
    }

    /// Verdicts for `record`; `state` must be the state it was taken from.
    pub fn check(
        &mut self,
        record: &DiagnosticsRecord,
        state: &State,
    ) -> Result<Vec<MonitorVerdict>, DiagnosticsError> {
        let tol = self.tolerances;
        let initial = self.initial.get_or_insert_with(|| record.clone()).clone();
        let prev = self.previous.replace(record.clone());
        let t = record.t;
        let mut out = Vec::with_capacity(4);
        let mut push = |name, verdict| out.push(MonitorVerdict { name, t, verdict });

        let n_ok = record.n_min >= -tol.positivity * initial.n_max.abs().max(f64::MIN_POSITIVE);
        let c_l2 = record.c_l2_sq.sqrt();
        push(
            "ccL2",
            match &prev {
                Some(p) if n_ok => {
                    let before = p.c_l2_sq.sqrt();
                    let growth = c_l2 - before;
                    if growth > tol.monotone_slack * before.max(f64::MIN_POSITIVE) {
                        Verdict::Fail {
                            magnitude: growth,
                            detail: format!("|c|_2 rose from {before:e} to {c_l2:e}"),
                        }
                    } else {
                        Verdict::Pass
                    }
                }
                _ => Verdict::Pass,
            },
        );

        let c_ref = Self::c_sup(&initial).max(f64::MIN_POSITIVE);
        let sup = Self::c_sup(record);
        let cinfty = if record.c_min < -tol.positivity * c_ref {
            Verdict::Fail {
                magnitude: -record.c_min,
                detail: format!("min c = {:e} is negative", record.c_min),
            }
        } else {
            match &prev {
                Some(p) if sup - Self::c_sup(p) > tol.monotone_slack * Self::c_sup(p).max(f64::MIN_POSITIVE) => {
                    Verdict::Fail {
                        magnitude: sup - Self::c_sup(p),
                        detail: format!("|c|_inf rose from {:e} to {sup:e}", Self::c_sup(p)),
                    }
                }
                _ => Verdict::Pass,
            }
        };
        push("cinfty", cinfty);

        let m0 = initial.mass_n;
        let drift = (record.mass_n - m0).abs();
        push(
            "ncL1",
            if drift > tol.mass * m0.abs().max(f64::MIN_POSITIVE) {
                Verdict::Fail {
                    magnitude: drift / m0.abs().max(f64::MIN_POSITIVE),
                    detail: format!("mass of n drifted from {m0:e} to {:e}", record.mass_n),
                }
            } else {
                Verdict::Pass
            },
        );

        // Discrete d/dt |n|_2^2 against the drift bound
        // 2 |grad n|_2 S |grad c|_3 |n|_6 (dissipation ignored).
        let report = match &prev {
            Some(p) if record.t > p.t => {
                let rate = (record.n_l2_sq - p.n_l2_sq) / (record.t - p.t);
                let gn = vector_lp_norm(&gradient(&state.n), 2.0)?;
                let gc = vector_lp_norm(&gradient(&state.c), 3.0)?;
                let n6 = lp_norm(&state.n, 6.0)?;
                let bound = 2.0 * gn * self.s_fchi * gc * n6;
                Verdict::Reported {
                    value: rate,
                    detail: format!("d/dt |n|_2^2 = {rate:e}, drift bound {bound:e}"),
                }
            }
            _ => Verdict::Reported {
                value: 0.0,
                detail: "first record".into(),
            },
        };
        push("nL2", report);
        Ok(out)
    }
}

/// Run observer that advances the accumulators on every accepted step and
/// stores a record plus monitor verdicts every `cadence` steps.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub diagnostics: Diagnostics,
    pub monitors: EnergyMonitors,
    pub records: Vec<DiagnosticsRecord>,
    pub failures: Vec<MonitorVerdict>,
    pub reports: Vec<MonitorVerdict>,
    accumulators: Accumulators,
    last_recorded_step: Option<usize>,
    last_step: usize,
}

impl Tracker {
    pub fn new(diagnostics: Diagnostics, tolerances: MonitorTolerances) -> Self {
        let monitors = EnergyMonitors::new(tolerances, diagnostics.s_fchi());
        let accumulators = diagnostics.fresh_accumulators();
        Self {
            diagnostics,
            monitors,
            records: Vec::new(),
            failures: Vec::new(),
            reports: Vec::new(),
            accumulators,
            last_recorded_step: None,
            last_step: 0,
        }
    }

    pub fn accumulators(&self) -> &Accumulators {
        &self.accumulators
    }

    fn emit(&mut self, state: &State, step: usize) -> Result<(), DiagnosticsError> {
        let record = self.diagnostics.record(&self.accumulators, state)?;
        for v in self.monitors.check(&record, state)? {
            match v.verdict {
                Verdict::Fail { .. } => self.failures.push(v),
                Verdict::Reported { .. } => self.reports.push(v),
                Verdict::Pass => {}
            }
        }
        self.records.push(record);
        self.last_recorded_step = Some(step);
        Ok(())
    }

    /// Records the final state if the cadence skipped it.
    pub fn finish(&mut self, state: &State) -> Result<(), DiagnosticsError> {
        if self.last_recorded_step != Some(self.last_step) {
            self.emit(state, self.last_step)?;
        }
        Ok(())
    }

    pub fn observe_state(&mut self, state: &State, step: usize) -> Result<(), DiagnosticsError> {
        self.accumulators = self.diagnostics.accumulate(&self.accumulators, state)?;
        self.last_step = step;
        if step.is_multiple_of(self.diagnostics.config.cadence) {
            self.emit(state, step)?;
        }
        Ok(())
    }
}

impl RunObserver for Tracker {
    fn observe(&mut self, state: &State, step: usize) -> Result<(), String> {
        self.observe_state(state, step).map_err(|e| e.to_string())
    }

    fn latest_record(&self) -> Option<DiagnosticsRecord> {
        self.records.last().cloned()
    }
}
