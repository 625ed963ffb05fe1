//! Initial-condition library. Centers default to the domain midpoint;
//! plane-wave modes are integer lattice indices, so the wavevector is
//! always exactly representable on the grid.

use crate::config::{IcSpec, SimConfig};
use crate::error::{QhdError, Result};
use crate::fields::{Grid, WaveField};
use crate::snapshot;
use num_complex::Complex64;
use std::sync::Arc;

/// Build the configured initial state on `grid`.
pub fn make_initial_condition(cfg: &SimConfig, grid: &Arc<Grid>) -> Result<WaveField> {
    let ic = &cfg.ic;
    let x0 = ic.x0.unwrap_or(grid.lx / 2.0);
    let y0 = ic.y0.unwrap_or(grid.ly / 2.0);
    let hbar = cfg.hbar;
    let kx = 2.0 * std::f64::consts::PI * ic.kx_index as f64 / grid.lx;
    let ky = 2.0 * std::f64::consts::PI * ic.ky_index as f64 / grid.ly;
    match ic.name.as_str() {
        // amp * exp(-r^2 / (2 width^2)); mass = pi amp^2 width^2
        "gaussian" => Ok(WaveField::from_fn(grid, hbar, |x, y| {
            let r2 = (x - x0).powi(2) + (y - y0).powi(2);
            Complex64::new(ic.amp * (-r2 / (2.0 * ic.width * ic.width)).exp(), 0.0)
        })),
        "plane_wave" => Ok(WaveField::from_fn(grid, hbar, |x, y| {
            Complex64::from_polar(ic.amp, kx * x + ky * y)
        })),
        "gaussian_boosted" => Ok(WaveField::from_fn(grid, hbar, |x, y| {
            let r2 = (x - x0).powi(2) + (y - y0).powi(2);
            Complex64::from_polar(
                ic.amp * (-r2 / (2.0 * ic.width * ic.width)).exp(),
                kx * x + ky * y,
            )
        })),
        // ((x-x0) + i (y-y0)) exp(-r^2 / width^2); density vanishes at the core
        "vortex" => Ok(WaveField::from_fn(grid, hbar, |x, y| {
            let (cx, cy) = (x - x0, y - y0);
            let env = (-(cx * cx + cy * cy) / (ic.width * ic.width)).exp();
            Complex64::new(cx * env, cy * env)
        })),
        // branch-safe current carrier exp(-r^2) exp(i amp_phase sin x);
        // meant for domains whose side is a multiple of 2 pi
        "phase_bump" => Ok(WaveField::from_fn(grid, hbar, |x, y| {
            let r2 = (x - x0).powi(2) + (y - y0).powi(2);
            Complex64::from_polar((-r2).exp(), ic.amp_phase * x.sin())
        })),
        "file" => load_from_file(ic, grid, hbar),
        other => Err(QhdError::Config(format!("unknown ic name '{other}'"))),
    }
}

fn load_from_file(ic: &IcSpec, grid: &Arc<Grid>, hbar: f64) -> Result<WaveField> {
    let (psi, meta) = snapshot::read_wave(std::path::Path::new(&ic.path))?;
    if !psi.grid.same_as(grid) {
        return Err(QhdError::Dimension(format!(
            "snapshot '{}' has grid {}x{} on {}x{}, configured {}x{} on {}x{}",
            ic.path, psi.grid.nx, psi.grid.ny, psi.grid.lx, psi.grid.ly,
            grid.nx, grid.ny, grid.lx, grid.ly
        )));
    }
    if (meta.hbar - hbar).abs() > 1e-12 * hbar {
        return Err(QhdError::Validation(format!(
            "snapshot '{}' carries hbar = {}, configured {}",
            ic.path, meta.hbar, hbar
        )));
    }
    Ok(psi)
}
