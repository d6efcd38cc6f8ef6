//! Run configuration in a flat sectioned text format.
//!
//! ```text
//! # comment
//! [grid]
//! dim = 2
//! n = 64            # one value for every axis, or a comma list
//! length = 2pi      # decimal, optionally suffixed by `pi`
//!
//! [model]
//! alpha = 1
//! chi = constant 1  # constant A | linear A | saturating A | poly C0 C1 .. | spline CMAX V0 V1 ..
//! f = linear 1
//! grad_phi = constant 0, 0   # or: cosine A m1 m2 [m3]
//! ```
//!
//! Sections: `grid`, `model`, `initial`, `stepper`, `diagnostics`, `picard`,
//! `output`. Every key is optional except `grid.n` and `model.alpha`. Unknown
//! sections or keys, duplicate keys and malformed values are rejected with
//! the offending line number. [`emit_config`] writes the canonical form,
//! which parses back to an equal [`RunConfig`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::f64::consts::PI;
use std::path::PathBuf;

use super::IoError;
use crate::diagnostics::{
    check_pairs, format_exponent, parse_exponent, CriterionKind, CriterionSpec, MonitorTolerances,
    NormSpec,
};
use crate::model::{ModelParams, ScalarFunction, VelocityMode};
use crate::stepper::{PicardConfig, Scheme, StepperConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub dim: usize,
    pub sizes: Vec<usize>,
    pub lengths: Vec<f64>,
}

/// Potential gradient driving the fluid.
#[derive(Debug, Clone, PartialEq)]
pub enum GradPhiSpec {
    /// Uniform vector.
    Constant(Vec<f64>),
    /// Gradient of `phi = A cos(k . x)` with `k_i = 2 pi m_i / L_i`.
    Cosine { amplitude: f64, modes: Vec<i64> },
}

impl GradPhiSpec {
    fn emit(&self) -> String {
        match self {
            GradPhiSpec::Constant(v) => format!("constant {}", join_f64(v)),
            GradPhiSpec::Cosine { amplitude, modes } => {
                let m: Vec<String> = modes.iter().map(|m| m.to_string()).collect();
                format!("cosine {amplitude:?} {}", m.join(" "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub alpha: f64,
    pub chi: ScalarFunction,
    pub f: ScalarFunction,
    pub grad_phi: GradPhiSpec,
    pub kappa_n: f64,
    pub kappa_c: f64,
    pub velocity: VelocityMode,
}

/// Named initial-data presets; every preset adds `n_background` and
/// `c_background` to the density and oxygen.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialPreset {
    /// Gaussian bumps `a exp(-|x - x0|^2 / (2 w^2))` (periodized) in `n` and `c`.
    GaussianBlob {
        n_amplitude: f64,
        c_amplitude: f64,
        width: f64,
        c_width: f64,
        /// `None` centers the blob in the box.
        center: Option<Vec<f64>>,
    },
    /// `epsilon (sin x cos y, -cos x sin y, 0)` on the fundamental wavenumbers.
    TaylorGreen { epsilon: f64 },
    /// Band-limited random fields; `n` and `c` perturb their backgrounds,
    /// the velocity is Leray-projected.
    RandomBandlimited {
        seed: u64,
        k_max: usize,
        amplitude: f64,
        u_amplitude: f64,
    },
    Snapshot { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub preset: InitialPreset,
    pub n_background: f64,
    pub c_background: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitWindow {
    pub column: String,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSection {
    pub norms: Vec<NormSpec>,
    pub cadence: usize,
    pub criterion: Option<CriterionSpec>,
    pub grad_c_variant: bool,
    pub fits: Vec<FitWindow>,
    pub tolerances: MonitorTolerances,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardSection {
    pub config: PicardConfig,
    /// Search for a window contracting by `bound` when set.
    pub search: bool,
    pub bound: f64,
    pub max_halvings: usize,
    pub refinements: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub timeseries: String,
    /// Checkpoint every this many accepted steps; 0 disables checkpoints.
    pub checkpoint_every: usize,
    pub final_snapshot: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub initial: InitialConfig,
    pub stepper: StepperConfig,
    pub diagnostics: DiagnosticsSection,
    pub picard: PicardSection,
    pub output: OutputConfig,
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

const SECTIONS: [&str; 7] = [
    "grid",
    "model",
    "initial",
    "stepper",
    "diagnostics",
    "picard",
    "output",
];

fn err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Config {
        line,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Sections, IoError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line_no, "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(err(line_no, format!("unknown section [{name}]")));
            }
            if sections.contains_key(name) {
                return Err(err(line_no, format!("section [{name}] appears twice")));
            }
            sections.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("expected 'key = value', found '{line}'")))?;
        let section = current
            .as_ref()
            .ok_or_else(|| err(line_no, "key outside of any section"))?;
        let key = key.trim().to_string();
        let map = sections.get_mut(section).expect("section inserted");
        if map.contains_key(&key) {
            return Err(err(line_no, format!("duplicate key '{key}' in [{section}]")));
        }
        map.insert(
            key,
            Entry {
                line: line_no,
                value: value.trim().to_string(),
                used: false,
            },
        );
    }
    Ok(sections)
}

struct Reader<'a> {
    sections: &'a mut Sections,
}

impl Reader<'_> {
    fn raw(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        let e = self.sections.get_mut(section)?.get_mut(key)?;
        e.used = true;
        Some((e.line, e.value.clone()))
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map_or(0, |e| e.line)
    }

    fn get<T>(
        &mut self,
        section: &str,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>, IoError> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((line, v)) => parse(&v)
                .map(Some)
                .map_err(|m| err(line, format!("{section}.{key}: {m}"))),
        }
    }

    fn or<T>(
        &mut self,
        section: &str,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, IoError> {
        Ok(self.get(section, key, parse)?.unwrap_or(default))
    }

    fn required<T>(
        &mut self,
        section: &str,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, IoError> {
        self.get(section, key, parse)?
            .ok_or_else(|| err(0, format!("missing required key {section}.{key}")))
    }

    fn reject_unused(&self) -> Result<(), IoError> {
        let mut unused: Vec<(usize, String)> = self
            .sections
            .iter()
            .flat_map(|(s, m)| {
                m.iter()
                    .filter(|(_, e)| !e.used)
                    .map(move |(k, e)| (e.line, format!("unknown key '{k}' in [{s}]")))
            })
            .collect();
        unused.sort();
        match unused.into_iter().next() {
            Some((line, msg)) => Err(err(line, msg)),
            None => Ok(()),
        }
    }
}

/// Decimal number, optionally with a `pi` factor (`2pi`, `pi`, `0.5pi`).
pub fn parse_number(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let value = if let Some(head) = t.strip_suffix("pi") {
        let head = head.trim().trim_end_matches('*').trim();
        let factor = if head.is_empty() {
            1.0
        } else {
            head.parse::<f64>().map_err(|_| format!("not a number: '{t}'"))?
        };
        factor * PI
    } else {
        t.parse::<f64>().map_err(|_| format!("not a number: '{t}'"))?
    };
    if !value.is_finite() {
        return Err(format!("'{t}' is not finite"));
    }
    Ok(value)
}

fn parse_usize(text: &str) -> Result<usize, String> {
    text.trim()
        .parse()
        .map_err(|_| format!("not a nonnegative integer: '{}'", text.trim()))
}

fn parse_bool(text: &str) -> Result<bool, String> {
    match text.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("not a boolean: '{other}'")),
    }
}

fn parse_list<T>(text: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(item)
        .collect()
}

fn positive(v: f64) -> Result<f64, String> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be > 0"))
    }
}

fn join_f64(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

fn per_axis<T: Clone>(values: Vec<T>, dim: usize, what: &str) -> Result<Vec<T>, String> {
    match values.len() {
        1 => Ok(vec![values[0].clone(); dim]),
        n if n == dim => Ok(values),
        n => Err(format!("{what}: expected 1 or {dim} values, found {n}")),
    }
}

fn parse_grad_phi(text: &str) -> Result<GradPhiSpec, String> {
    let t = text.trim();
    if t == "none" || t == "0" {
        return Ok(GradPhiSpec::Constant(vec![0.0]));
    }
    if let Some(rest) = t.strip_prefix("constant") {
        return Ok(GradPhiSpec::Constant(parse_list(rest, parse_number)?));
    }
    if let Some(rest) = t.strip_prefix("cosine") {
        let parts: Vec<&str> = rest.split_whitespace().collect();
        if parts.len() < 3 {
            return Err("cosine needs an amplitude and one integer per axis".into());
        }
        let amplitude = parse_number(parts[0])?;
        let modes = parts[1..]
            .iter()
            .map(|m| m.parse::<i64>().map_err(|_| format!("bad mode '{m}'")))
            .collect::<Result<_, _>>()?;
        return Ok(GradPhiSpec::Cosine { amplitude, modes });
    }
    Err(format!("unknown grad_phi form '{t}' (constant V.. | cosine A M..)"))
}

fn parse_fit(text: &str) -> Result<FitWindow, String> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(format!("fit entry '{text}' must read 'COLUMN T_A T_B'"));
    }
    let (a, b) = (parse_number(parts[1])?, parse_number(parts[2])?);
    if !(a < b) {
        return Err(format!("fit window [{a}, {b}] must satisfy t_a < t_b"));
    }
    Ok(FitWindow {
        column: parts[0].to_string(),
        window: (a, b),
    })
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, IoError> {
    let mut sections = tokenize(text)?;
    let mut r = Reader {
        sections: &mut sections,
    };

    let dim = r.or("grid", "dim", 3, parse_usize)?;
    if !(2..=3).contains(&dim) {
        return Err(err(r.line_of("grid", "dim"), format!("grid.dim = {dim} must be 2 or 3")));
    }
    let sizes = r.required("grid", "n", |t| {
        let v = parse_list(t, parse_usize)?;
        let v = per_axis(v, dim, "n")?;
        if v.iter().any(|&n| n < 8 || n % 2 == 1) {
            return Err("every size must be even and at least 8".into());
        }
        Ok(v)
    })?;
    let lengths = r.or("grid", "length", vec![2.0 * PI; dim], |t| {
        let v = parse_list(t, |x| parse_number(x).and_then(positive))?;
        per_axis(v, dim, "length")
    })?;
    let grid = GridConfig {
        dim,
        sizes,
        lengths,
    };

    let alpha_line = r.line_of("model", "alpha");
    let alpha = r.required("model", "alpha", parse_number)?;
    if alpha <= 0.5 {
        return Err(err(
            alpha_line,
            format!(
                "model.alpha = {alpha} violates alpha > 1/2, the range of local well-posedness"
            ),
        ));
    }
    let scalar = |t: &str| t.parse::<ScalarFunction>().map_err(|e| e.to_string());
    let chi = r.or("model", "chi", ScalarFunction::Constant(1.0), scalar)?;
    let f_line = r.line_of("model", "f");
    let f = r.or("model", "f", ScalarFunction::Linear(1.0), scalar)?;
    match f.value(0.0) {
        Ok(0.0) => {}
        Ok(v) => {
            return Err(err(
                f_line,
                format!("model.f has f(0) = {v}; the consumption rate must satisfy f(0) = 0 and f >= 0"),
            ))
        }
        Err(e) => return Err(err(f_line, format!("model.f: {e}"))),
    }
    let grad_phi = r.or(
        "model",
        "grad_phi",
        GradPhiSpec::Constant(vec![0.0; dim]),
        parse_grad_phi,
    )?;
    let grad_phi = match grad_phi {
        GradPhiSpec::Constant(v) => GradPhiSpec::Constant(
            per_axis(v, dim, "grad_phi").map_err(|m| err(r.line_of("model", "grad_phi"), m))?,
        ),
        GradPhiSpec::Cosine { modes, .. } if modes.len() != dim => {
            return Err(err(
                r.line_of("model", "grad_phi"),
                format!("grad_phi cosine needs {dim} mode indices"),
            ))
        }
        other => other,
    };
    let kappa_n = r.or("model", "kappa_n", 1.0, |t| parse_number(t).and_then(positive))?;
    let kappa_c = r.or("model", "kappa_c", 1.0, |t| parse_number(t).and_then(positive))?;
    let velocity = r.or("model", "velocity", VelocityMode::Dynamic, |t| match t {
        "dynamic" => Ok(VelocityMode::Dynamic),
        "frozen" => Ok(VelocityMode::Frozen),
        other => Err(format!("unknown velocity mode '{other}' (dynamic | frozen)")),
    })?;
    let model = ModelConfig {
        alpha,
        chi,
        f,
        grad_phi,
        kappa_n,
        kappa_c,
        velocity,
    };

    let preset_line = r.line_of("initial", "preset");
    let preset_name = r.or("initial", "preset", "gaussian-blob".to_string(), |t| Ok(t.to_string()))?;
    let preset = match preset_name.as_str() {
        "gaussian-blob" => {
            let width = r.or("initial", "width", 0.5, |t| parse_number(t).and_then(positive))?;
            InitialPreset::GaussianBlob {
                n_amplitude: r.or("initial", "n_amplitude", 1.0, parse_number)?,
                c_amplitude: r.or("initial", "c_amplitude", 1.0, parse_number)?,
                width,
                c_width: r.or("initial", "c_width", width, |t| parse_number(t).and_then(positive))?,
                center: r.get("initial", "center", |t| {
                    per_axis(parse_list(t, parse_number)?, dim, "center")
                })?,
            }
        }
        "taylor-green" => InitialPreset::TaylorGreen {
            epsilon: r.or("initial", "epsilon", 0.1, parse_number)?,
        },
        "random-bandlimited" => {
            let k_line = r.line_of("initial", "k_max");
            let k_max = r.or("initial", "k_max", 2, parse_usize)?;
            let n_min = *grid.sizes.iter().min().expect("dim >= 2");
            if k_max == 0 || 2 * k_max >= n_min {
                return Err(err(
                    k_line,
                    format!("initial.k_max = {k_max} must lie in 1..{}", n_min / 2),
                ));
            }
            InitialPreset::RandomBandlimited {
                seed: r.or("initial", "seed", 0, |t| {
                    t.parse::<u64>().map_err(|_| format!("bad seed '{t}'"))
                })?,
                k_max,
                amplitude: r.or("initial", "amplitude", 0.1, parse_number)?,
                u_amplitude: r.or("initial", "u_amplitude", 0.0, parse_number)?,
            }
        }
        "snapshot" => InitialPreset::Snapshot {
            path: r.required("initial", "path", |t| Ok(PathBuf::from(t)))?,
        },
        other => {
            return Err(err(
                preset_line,
                format!(
                    "unknown preset '{other}' (gaussian-blob | taylor-green | random-bandlimited | snapshot)"
                ),
            ))
        }
    };
    let initial = InitialConfig {
        preset,
        n_background: r.or("initial", "n_background", 0.0, parse_number)?,
        c_background: r.or("initial", "c_background", 0.0, parse_number)?,
    };

    let d = StepperConfig::default();
    let stepper = StepperConfig {
        dt_init: r.or("stepper", "dt_init", d.dt_init, |t| parse_number(t).and_then(positive))?,
        cfl: r.or("stepper", "cfl", d.cfl, parse_number)?,
        t_end: r.or("stepper", "t_end", d.t_end, parse_number)?,
        scheme: r.or("stepper", "scheme", d.scheme, |t| {
            Scheme::parse(t).ok_or_else(|| format!("unknown scheme '{t}' (rk2 | euler)"))
        })?,
        max_dt_halvings: r.or("stepper", "max_dt_halvings", d.max_dt_halvings, |t| {
            t.parse().map_err(|_| format!("bad integer '{t}'"))
        })?,
        positivity_tol: r.or("stepper", "positivity_tol", d.positivity_tol, parse_number)?,
        divergence_tol: r.or("stepper", "divergence_tol", d.divergence_tol, parse_number)?,
    };
    stepper
        .validate()
        .map_err(|m| err(r.line_of("stepper", "cfl"), format!("stepper: {m}")))?;

    let dd = crate::diagnostics::DiagnosticsConfig::default();
    let norms = r.or("diagnostics", "norms", dd.norms.clone(), |t| {
        parse_list(t, |s| s.parse::<NormSpec>().map_err(|e| e.to_string()))
    })?;
    let cadence_line = r.line_of("diagnostics", "cadence");
    let cadence = r.or("diagnostics", "cadence", 1, parse_usize)?;
    if cadence == 0 {
        return Err(err(cadence_line, "diagnostics.cadence must be >= 1"));
    }
    let crit_line = r.line_of("diagnostics", "criterion");
    let kind = r.get("diagnostics", "criterion", |t| {
        t.parse::<CriterionKind>().map_err(|e| e.to_string())
    })?;
    let pairs = r.get("diagnostics", "pairs", |t| {
        let v = parse_list(t, |x| parse_exponent(x).map_err(|e| e.to_string()))?;
        if v.len() != 2 && v.len() != 4 {
            return Err("pairs must list p1, q1 or p1, q1, p2, q2".into());
        }
        Ok(v.chunks(2).map(|c| (c[0], c[1])).collect::<Vec<_>>())
    })?;
    let criterion = match (kind, pairs) {
        (None, None) => None,
        (Some(kind), Some(pairs)) => {
            let spec = CriterionSpec { kind, pairs, alpha };
            let verdicts = check_pairs(&spec).map_err(|e| err(crit_line, e.to_string()))?;
            for (i, v) in verdicts.iter().enumerate() {
                if !v.is_admissible() {
                    return Err(err(crit_line, format!("criterion pair {}: {v}", i + 1)));
                }
            }
            Some(spec)
        }
        _ => {
            return Err(err(
                crit_line.max(r.line_of("diagnostics", "pairs")),
                "diagnostics.criterion and diagnostics.pairs must be given together",
            ))
        }
    };
    let grad_c_variant = r.or("diagnostics", "grad_c_variant", false, parse_bool)?;
    let fits = r.or("diagnostics", "fit", Vec::new(), |t| parse_list(t, parse_fit))?;
    let mt = MonitorTolerances::default();
    let tolerances = MonitorTolerances {
        monotone_slack: r.or("diagnostics", "monotone_slack", mt.monotone_slack, parse_number)?,
        mass: r.or("diagnostics", "mass_tol", mt.mass, parse_number)?,
        positivity: r.or("diagnostics", "positivity_tol", mt.positivity, parse_number)?,
    };
    let diagnostics = DiagnosticsSection {
        norms,
        cadence,
        criterion,
        grad_c_variant,
        fits,
        tolerances,
    };

    let pd = PicardConfig::default();
    let pconfig = PicardConfig {
        t0: r.or("picard", "t0", pd.t0, |t| parse_number(t).and_then(positive))?,
        n_time_nodes: r.or("picard", "n_time_nodes", pd.n_time_nodes, parse_usize)?,
        max_iters: r.or("picard", "max_iters", pd.max_iters, parse_usize)?,
        tol: r.or("picard", "tol", pd.tol, |t| parse_number(t).and_then(positive))?,
        substeps: r.or("picard", "substeps", pd.substeps, parse_usize)?,
        contraction_report: r.or("picard", "contraction_report", pd.contraction_report, parse_bool)?,
    };
    pconfig
        .validate()
        .map_err(|m| err(r.line_of("picard", "n_time_nodes"), format!("picard: {m}")))?;
    let picard = PicardSection {
        config: pconfig,
        search: r.or("picard", "search", false, parse_bool)?,
        bound: r.or("picard", "bound", 0.5, |t| parse_number(t).and_then(positive))?,
        max_halvings: r.or("picard", "max_halvings", 8, parse_usize)?,
        refinements: r.or("picard", "refinements", 3, parse_usize)?,
    };

    let output = OutputConfig {
        dir: r.or("output", "dir", PathBuf::from("out"), |t| Ok(PathBuf::from(t)))?,
        timeseries: r.or("output", "timeseries", "timeseries.csv".to_string(), |t| Ok(t.to_string()))?,
        checkpoint_every: r.or("output", "checkpoint_every", 0, parse_usize)?,
        final_snapshot: r.or("output", "final_snapshot", "final.cnsf".to_string(), |t| Ok(t.to_string()))?,
    };

    r.reject_unused()?;

    let config = RunConfig {
        grid,
        model,
        initial,
        stepper,
        diagnostics,
        picard,
        output,
    };
    Ok(config)
}

/// Canonical text of `config`; `parse_config(emit_config(c)) == c`.
pub fn emit_config(config: &RunConfig) -> String {
    let mut s = String::new();
    let g = &config.grid;
    let sizes: Vec<String> = g.sizes.iter().map(|n| n.to_string()).collect();
    let _ = writeln!(s, "[grid]\ndim = {}\nn = {}\nlength = {}", g.dim, sizes.join(", "), join_f64(&g.lengths));

    let m = &config.model;
    let _ = writeln!(
        s,
        "\n[model]\nalpha = {:?}\nchi = {}\nf = {}\ngrad_phi = {}\nkappa_n = {:?}\nkappa_c = {:?}\nvelocity = {}",
        m.alpha,
        m.chi,
        m.f,
        m.grad_phi.emit(),
        m.kappa_n,
        m.kappa_c,
        match m.velocity {
            VelocityMode::Dynamic => "dynamic",
            VelocityMode::Frozen => "frozen",
        }
    );

    let i = &config.initial;
    s.push_str("\n[initial]\n");
    match &i.preset {
        InitialPreset::GaussianBlob {
            n_amplitude,
            c_amplitude,
            width,
            c_width,
            center,
        } => {
            let _ = writeln!(
                s,
                "preset = gaussian-blob\nn_amplitude = {n_amplitude:?}\nc_amplitude = {c_amplitude:?}\nwidth = {width:?}\nc_width = {c_width:?}"
            );
            if let Some(c) = center {
                let _ = writeln!(s, "center = {}", join_f64(c));
            }
        }
        InitialPreset::TaylorGreen { epsilon } => {
            let _ = writeln!(s, "preset = taylor-green\nepsilon = {epsilon:?}");
        }
        InitialPreset::RandomBandlimited {
            seed,
            k_max,
            amplitude,
            u_amplitude,
        } => {
            let _ = writeln!(
                s,
                "preset = random-bandlimited\nseed = {seed}\nk_max = {k_max}\namplitude = {amplitude:?}\nu_amplitude = {u_amplitude:?}"
            );
        }
        InitialPreset::Snapshot { path } => {
            let _ = writeln!(s, "preset = snapshot\npath = {}", path.display());
        }
    }
    let _ = writeln!(s, "n_background = {:?}\nc_background = {:?}", i.n_background, i.c_background);

    let st = &config.stepper;
    let _ = writeln!(
        s,
        "\n[stepper]\ndt_init = {:?}\ncfl = {:?}\nt_end = {:?}\nscheme = {}\nmax_dt_halvings = {}\npositivity_tol = {:?}\ndivergence_tol = {:?}",
        st.dt_init, st.cfl, st.t_end, st.scheme.name(), st.max_dt_halvings, st.positivity_tol, st.divergence_tol
    );

    let d = &config.diagnostics;
    let norms: Vec<String> = d.norms.iter().map(|n| n.to_string()).collect();
    let _ = writeln!(s, "\n[diagnostics]\nnorms = {}\ncadence = {}", norms.join(", "), d.cadence);
    if let Some(c) = &d.criterion {
        let pairs: Vec<String> = c
            .pairs
            .iter()
            .flat_map(|&(p, q)| [format_exponent(p), format_exponent(q)])
            .collect();
        let _ = writeln!(s, "criterion = {}\npairs = {}", c.kind, pairs.join(", "));
    }
    let _ = writeln!(s, "grad_c_variant = {}", d.grad_c_variant);
    if !d.fits.is_empty() {
        let fits: Vec<String> = d
            .fits
            .iter()
            .map(|f| format!("{} {:?} {:?}", f.column, f.window.0, f.window.1))
            .collect();
        let _ = writeln!(s, "fit = {}", fits.join(", "));
    }
    let _ = writeln!(
        s,
        "monotone_slack = {:?}\nmass_tol = {:?}\npositivity_tol = {:?}",
        d.tolerances.monotone_slack, d.tolerances.mass, d.tolerances.positivity
    );

    let p = &config.picard;
    let _ = writeln!(
        s,
        "\n[picard]\nt0 = {:?}\nn_time_nodes = {}\nmax_iters = {}\ntol = {:?}\nsubsteps = {}\ncontraction_report = {}\nsearch = {}\nbound = {:?}\nmax_halvings = {}\nrefinements = {}",
        p.config.t0,
        p.config.n_time_nodes,
        p.config.max_iters,
        p.config.tol,
        p.config.substeps,
        p.config.contraction_report,
        p.search,
        p.bound,
        p.max_halvings,
        p.refinements
    );

    let o = &config.output;
    let _ = writeln!(
        s,
        "\n[output]\ndir = {}\ntimeseries = {}\ncheckpoint_every = {}\nfinal_snapshot = {}",
        o.dir.display(),
        o.timeseries,
        o.checkpoint_every,
        o.final_snapshot
    );
    s
}

impl ModelConfig {
    /// Coefficients on `grid` (the potential gradient is sampled on the nodes).
    pub fn to_params(
        &self,
        grid: &std::sync::Arc<crate::spectral::SpectralGrid>,
    ) -> ModelParams {
        use crate::spectral::VectorField;
        let grad_phi = match &self.grad_phi {
            GradPhiSpec::Constant(v) => VectorField::from_fn(grid, |_| v.clone()),
            GradPhiSpec::Cosine { amplitude, modes } => {
                let k: Vec<f64> = modes
                    .iter()
                    .zip(grid.lengths())
                    .map(|(&m, &l)| 2.0 * PI * m as f64 / l)
                    .collect();
                VectorField::from_fn(grid, |x| {
                    let arg: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
                    k.iter().map(|ki| -amplitude * ki * arg.sin()).collect()
                })
            }
        };
        ModelParams {
            alpha: self.alpha,
            chi: self.chi.clone(),
            f: self.f.clone(),
            grad_phi,
            kappa_n: self.kappa_n,
            kappa_c: self.kappa_c,
            velocity: self.velocity,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[grid]\nn = 16\n[model]\nalpha = 1\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.grid.dim, 3);
        assert_eq!(c.grid.sizes, vec![16; 3]);
        assert_eq!(c.stepper.cfl, 0.4);
        assert_eq!(c.stepper.dt_init, StepperConfig::default().dt_init);
        assert_eq!((c.model.kappa_n, c.model.kappa_c), (1.0, 1.0));
    }

    #[test]
    fn alpha_at_or_below_one_half_is_rejected() {
        let e = parse_config("[grid]\nn = 16\n[model]\nalpha = 0.4\n").unwrap_err();
        match e {
            IoError::Config { line, message } => {
                assert_eq!(line, 4);
                assert!(message.contains("alpha > 1/2"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn consumption_must_vanish_at_zero() {
        let e = parse_config("[grid]\nn = 16\n[model]\nalpha = 1\nf = constant 1\n").unwrap_err();
        assert!(matches!(e, IoError::Config { line: 5, .. }), "{e:?}");
    }

    #[test]
    fn unknown_keys_and_sections_carry_lines() {
        let e = parse_config("[grid]\nn = 16\nfoo = 1\n[model]\nalpha = 1\n").unwrap_err();
        assert!(matches!(e, IoError::Config { line: 3, .. }), "{e:?}");
        let e = parse_config("[grids]\n").unwrap_err();
        assert!(matches!(e, IoError::Config { line: 1, .. }));
        let e = parse_config("[grid]\nn 16\n").unwrap_err();
        assert!(matches!(e, IoError::Config { line: 2, .. }));
        let e = parse_config("[model]\nalpha = 1\n").unwrap_err();
        assert!(matches!(e, IoError::Config { line: 0, .. }));
    }

    #[test]
    fn pi_suffix_and_lists() {
        let c = parse_config("[grid]\ndim = 2\nn = 16, 32\nlength = 2pi, 4\n[model]\nalpha = 1.25\n").unwrap();
        assert_eq!(c.grid.sizes, vec![16, 32]);
        assert_eq!(c.grid.lengths, vec![2.0 * PI, 4.0]);
        assert!(parse_config("[grid]\ndim = 2\nn = 16, 32, 8\n[model]\nalpha = 1\n").is_err());
        assert!(parse_config("[grid]\nn = 9\n[model]\nalpha = 1\n").is_err());
    }

    #[test]
    fn inadmissible_criterion_is_rejected() {
        let text = format!("{MINIMAL}[diagnostics]\ncriterion = ps\npairs = 2, 3\n");
        let e = parse_config(&text).unwrap_err();
        assert!(e.to_string().contains("q₁ > 3"), "{e}");
    }

    #[test]
    fn canonical_round_trip() {
        let text = "[grid]\ndim = 2\nn = 32\nlength = 2pi\n[model]\nalpha = 1.1\nchi = saturating 2\nf = poly 0 1 0.5\n\
                    grad_phi = cosine 0.3 1 0\nvelocity = frozen\n[initial]\npreset = random-bandlimited\nseed = 9\nk_max = 4\n\
                    u_amplitude = 0.05\nc_background = 1\n[stepper]\nscheme = euler\nt_end = 0.5\n\
                    [diagnostics]\nnorms = c_L2, u_Linf, gradc_H0.5\ncriterion = bv\npairs = 2, inf, 4, 6\nfit = c_L2 1 2\n\
                    [picard]\nsearch = true\n[output]\ndir = /tmp/x\ncheckpoint_every = 5\n";
        let c = parse_config(text).unwrap();
        let again = parse_config(&emit_config(&c)).unwrap();
        assert_eq!(c, again);
    }
}
