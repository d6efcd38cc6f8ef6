use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use super::config::{GridConfig, InitialConfig, InitialPreset};
use super::snapshot::read_snapshot;
use super::IoError;
use crate::model::State;
use crate::random::bandlimited_field;
use crate::spectral::{leray_project, Field, SpectralGrid, VectorField};

pub fn build_grid(cfg: &GridConfig) -> Result<Arc<SpectralGrid>, IoError> {
    SpectralGrid::new(&cfg.sizes, &cfg.lengths).map_err(|e| IoError::Config {
        line: 0,
        message: format!("grid: {e}"),
    })
}

/// `a exp(-|x - x0|^2 / (2 w^2))` summed over the nearest periodic images.
pub fn periodic_gaussian(grid: &Arc<SpectralGrid>, amplitude: f64, center: &[f64], width: f64) -> Field {
    let lengths = grid.lengths().to_vec();
    Field::from_fn(grid, |x| {
        let mut prod = amplitude;
        for axis in 0..x.len() {
            let l = lengths[axis];
            let images = (8.0 * width / l).ceil() as i64 + 1;
            let s: f64 = (-images..=images)
                .map(|k| {
                    let d = x[axis] - center[axis] + k as f64 * l;
                    (-d * d / (2.0 * width * width)).exp()
                })
                .sum();
            prod *= s;
        }
        prod
    })
}

/// Initial state for `cfg` on `grid`. Snapshot paths are resolved against
/// `base_dir`. Rejects negative density or oxygen.
pub fn build_initial(
    cfg: &InitialConfig,
    grid: &Arc<SpectralGrid>,
    base_dir: &Path,
) -> Result<State, IoError> {
    let dim = grid.dim();
    let config_err = |message: String| IoError::Config { line: 0, message };
    let mut state = match &cfg.preset {
        InitialPreset::GaussianBlob {
            n_amplitude,
            c_amplitude,
            width,
            c_width,
            center,
        } => {
            let center = center
                .clone()
                .unwrap_or_else(|| grid.lengths().iter().map(|l| l / 2.0).collect());
            State {
                n: periodic_gaussian(grid, *n_amplitude, &center, *width),
                c: periodic_gaussian(grid, *c_amplitude, &center, *c_width),
                u: VectorField::zeros(grid),
                t: 0.0,
            }
        }
        InitialPreset::TaylorGreen { epsilon } => {
            let k: Vec<f64> = grid.lengths().iter().map(|l| 2.0 * PI / l).collect();
            let e = *epsilon;
            let u = VectorField::from_fn(grid, |x| {
                let mut v = vec![0.0; dim];
                v[0] = e * (k[0] * x[0]).sin() * (k[1] * x[1]).cos();
                v[1] = -e * (k[0] / k[1]) * (k[0] * x[0]).cos() * (k[1] * x[1]).sin();
                v
            });
            State {
                n: Field::zeros(grid),
                c: Field::zeros(grid),
                u,
                t: 0.0,
            }
        }
        InitialPreset::RandomBandlimited {
            seed,
            k_max,
            amplitude,
            u_amplitude,
        } => {
            let draw = |stream: u64, amp: f64| {
                bandlimited_field(grid, *seed, stream, *k_max, amp)
                    .map_err(|e| config_err(format!("initial: {e}")))
            };
            let u = (0..dim)
                .map(|j| draw(2 + j as u64, *u_amplitude))
                .collect::<Result<Vec<_>, _>>()?;
            State {
                n: draw(0, *amplitude)?,
                c: draw(1, *amplitude)?,
                u: leray_project(&VectorField::from_components(u).expect("dim components")),
                t: 0.0,
            }
        }
        InitialPreset::Snapshot { path } => {
            let full = base_dir.join(path);
            let snap = read_snapshot(&full)?;
            if **snap.state.grid() != **grid {
                return Err(config_err(format!(
                    "snapshot {} has grid {:?} x {:?}, config expects {:?} x {:?}",
                    full.display(),
                    snap.state.grid().sizes(),
                    snap.state.grid().lengths(),
                    grid.sizes(),
                    grid.lengths()
                )));
            }
            let mut s = snap.state;
            // Rebind to the config grid so every field shares one Arc.
            s.n = Field::from_values(grid, s.n.into_values()).expect("same size");
            s.c = Field::from_values(grid, s.c.into_values()).expect("same size");
            s.u = VectorField::from_components(
                s.u.components()
                    .iter()
                    .map(|f| Field::from_values(grid, f.values().to_vec()).expect("same size"))
                    .collect(),
            )
            .expect("dim components");
            s
        }
    };
    if cfg.n_background != 0.0 {
        state.n = state.n.map(|v| v + cfg.n_background);
    }
    if cfg.c_background != 0.0 {
        state.c = state.c.map(|v| v + cfg.c_background);
    }
    if state.n.min() < 0.0 || state.c.min() < 0.0 {
        return Err(config_err(format!(
            "initial data must be nonnegative: min n = {:e}, min c = {:e}",
            state.n.min(),
            state.c.min()
        )));
    }
    Ok(state)
}
