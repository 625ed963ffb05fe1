//! Electrostatic potential from a charge density.
//!
//! Three routes to `-lap V = rho - C`:
//! * `PeriodicZeroMean`: spectral inversion on the torus with the source
//!   mean removed, `V_hat = rho_hat / |k|^2`, zero mode zeroed.
//! * `FreeSpacePadded`: zero-padded convolution with the logarithmic kernel
//!   `G(x) = -(1/2pi) log|x|`, the self-cell regularized to
//!   `-(1/2pi)(log h - 3/2)`, `h = sqrt(dx dy)`.
//! * `QuadratureOracle`: the same sum done directly in O(N^2); reference
//!   implementation, guarded to grids of at most 128 x 128.

use crate::error::{QhdError, Result};
use crate::fields::{RealField, VectorField};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

pub const ORACLE_MAX_POINTS: usize = 128 * 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoissonMode {
    PeriodicZeroMean,
    FreeSpacePadded,
    QuadratureOracle,
}

impl PoissonMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "periodic_zero_mean" => Ok(Self::PeriodicZeroMean),
            "free_space_padded" => Ok(Self::FreeSpacePadded),
            "quadrature_oracle" => Ok(Self::QuadratureOracle),
            other => Err(QhdError::Config(format!(
                "unknown poisson mode '{other}' (expected periodic_zero_mean, \
                 free_space_padded or quadrature_oracle)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::PeriodicZeroMean => "periodic_zero_mean",
            Self::FreeSpacePadded => "free_space_padded",
            Self::QuadratureOracle => "quadrature_oracle",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PoissonSolution {
    pub v: RealField,
    /// Set when a doping profile with nonzero mean is used in free-space
    /// mode, where the far field of the result is not meaningful.
    pub doping_mean_warning: bool,
}

fn source_field(rho: &RealField, doping: Option<&RealField>) -> Result<(Vec<f64>, bool)> {
    if !rho.is_finite() {
        return Err(QhdError::Validation("poisson source is not finite".into()));
    }
    let mut warning = false;
    let src = match doping {
        None => rho.values.clone(),
        Some(c) => {
            if !c.grid.same_as(&rho.grid) {
                return Err(QhdError::Dimension(
                    "doping profile grid does not match the density grid".into(),
                ));
            }
            let mean = c.values.iter().sum::<f64>() / c.values.len() as f64;
            if mean.abs() > 1e-12 * (1.0 + c.max_abs()) {
                warning = true;
            }
            rho.values.iter().zip(&c.values).map(|(r, c)| r - c).collect()
        }
    };
    Ok((src, warning))
}

/// Solve for the potential of `rho - doping` in the requested mode.
pub fn solve(rho: &RealField, doping: Option<&RealField>, mode: PoissonMode) -> Result<PoissonSolution> {
    let (src, warning) = source_field(rho, doping)?;
    let grid = &rho.grid;
    let v = match mode {
        PoissonMode::PeriodicZeroMean => {
            let mean = src.iter().sum::<f64>() / src.len() as f64;
            let mut spec: Vec<Complex64> =
                src.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
            grid.forward(&mut spec);
            for iy in 0..grid.ny {
                for ix in 0..grid.nx {
                    let k2 = grid.kx[ix] * grid.kx[ix] + grid.ky[iy] * grid.ky[iy];
                    let idx = iy * grid.nx + ix;
                    if k2 > 0.0 {
                        spec[idx] /= k2;
                    } else {
                        spec[idx] = Complex64::new(0.0, 0.0);
                    }
                }
            }
            grid.inverse(&mut spec);
            RealField {
                grid: grid.clone(),
                values: spec.iter().map(|v| v.re).collect(),
            }
        }
        PoissonMode::FreeSpacePadded => padded_convolution(grid, &src),
        PoissonMode::QuadratureOracle => oracle_potential(grid, &src)?,
    };
    let warning = warning && mode != PoissonMode::PeriodicZeroMean;
    Ok(PoissonSolution {
        v,
        doping_mean_warning: warning,
    })
}

fn log_kernel(r2: f64, h: f64) -> f64 {
    if r2 > 0.0 {
        -(1.0 / (4.0 * PI)) * r2.ln()
    } else {
        -(1.0 / (2.0 * PI)) * (h.ln() - 1.5)
    }
}

fn padded_convolution(grid: &std::sync::Arc<crate::fields::Grid>, src: &[f64]) -> RealField {
    let (nx, ny) = (grid.nx, grid.ny);
    let (px, py) = (2 * nx, 2 * ny);
    let h = (grid.dx * grid.dy).sqrt();
    let da = grid.cell_area();
    let fft = crate::fft::Fft2d::new(px, py);

    // kernel on the padded lattice with signed min-image displacements
    let mut kernel = vec![Complex64::default(); px * py];
    for iy in 0..py {
        let sy = if iy <= ny { iy as f64 } else { iy as f64 - py as f64 };
        let dyv = sy * grid.dy;
        for ix in 0..px {
            let sx = if ix <= nx { ix as f64 } else { ix as f64 - px as f64 };
            let dxv = sx * grid.dx;
            kernel[iy * px + ix] = Complex64::new(log_kernel(dxv * dxv + dyv * dyv, h), 0.0);
        }
    }
    let mut padded = vec![Complex64::default(); px * py];
    for iy in 0..ny {
        for ix in 0..nx {
            padded[iy * px + ix] = Complex64::new(src[iy * nx + ix], 0.0);
        }
    }
    fft.forward(&mut kernel);
    fft.forward(&mut padded);
    for (p, k) in padded.iter_mut().zip(&kernel) {
        *p *= k;
    }
    fft.inverse(&mut padded);

    let mut values = vec![0.0; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            values[iy * nx + ix] = padded[iy * px + ix].re * da;
        }
    }
    RealField {
        grid: grid.clone(),
        values,
    }
}

fn oracle_guard(grid: &crate::fields::Grid) -> Result<()> {
    if grid.len() > ORACLE_MAX_POINTS {
        return Err(QhdError::Refusal(format!(
            "quadrature oracle is O(N^2) and limited to grids of {} points, got {}",
            ORACLE_MAX_POINTS,
            grid.len()
        )));
    }
    Ok(())
}

fn oracle_potential(grid: &std::sync::Arc<crate::fields::Grid>, src: &[f64]) -> Result<RealField> {
    oracle_guard(grid)?;
    let (nx, ny) = (grid.nx, grid.ny);
    let h = (grid.dx * grid.dy).sqrt();
    let da = grid.cell_area();
    let values: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|i| {
            let (tx, ty) = (grid.x(i % nx), grid.y(i / nx));
            let mut acc = 0.0;
            for jy in 0..ny {
                let dyv = ty - grid.y(jy);
                for jx in 0..nx {
                    let dxv = tx - grid.x(jx);
                    acc += log_kernel(dxv * dxv + dyv * dyv, h) * src[jy * nx + jx];
                }
            }
            acc * da
        })
        .collect();
    Ok(RealField {
        grid: grid.clone(),
        values,
    })
}

/// Gradient of the potential. Spectral in the periodic and free-space modes;
/// the oracle mode sums the Hardy kernel directly with a zero self-cell.
pub fn grad_v(rho: &RealField, doping: Option<&RealField>, mode: PoissonMode) -> Result<VectorField> {
    match mode {
        PoissonMode::PeriodicZeroMean | PoissonMode::FreeSpacePadded => {
            Ok(solve(rho, doping, mode)?.v.gradient())
        }
        PoissonMode::QuadratureOracle => {
            let (src, _) = source_field(rho, doping)?;
            let grid = &rho.grid;
            oracle_guard(grid)?;
            let (nx, ny) = (grid.nx, grid.ny);
            let da = grid.cell_area();
            let pairs: Vec<(f64, f64)> = (0..nx * ny)
                .into_par_iter()
                .map(|i| {
                    let (tx, ty) = (grid.x(i % nx), grid.y(i / nx));
                    let (mut ax, mut ay) = (0.0, 0.0);
                    for jy in 0..ny {
                        let dyv = ty - grid.y(jy);
                        for jx in 0..nx {
                            let dxv = tx - grid.x(jx);
                            let r2 = dxv * dxv + dyv * dyv;
                            if r2 > 0.0 {
                                let w = -src[jy * nx + jx] / (2.0 * PI * r2);
                                ax += w * dxv;
                                ay += w * dyv;
                            }
                        }
                    }
                    (ax * da, ay * da)
                })
                .collect();
            Ok(VectorField {
                grid: grid.clone(),
                x: pairs.iter().map(|p| p.0).collect(),
                y: pairs.iter().map(|p| p.1).collect(),
            })
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PotentialEnergy {
    /// `1/2 integral V rho`.
    pub half_v_rho: f64,
    /// `1/2 integral |grad V|^2`, reported alongside.
    pub half_grad_v_sq: f64,
}

/// Field energy of a density/potential pair.
pub fn potential_energy(rho: &RealField, v: &RealField) -> Result<PotentialEnergy> {
    if !rho.grid.same_as(&v.grid) {
        return Err(QhdError::Dimension("rho and V grids differ".into()));
    }
    let da = rho.grid.cell_area();
    let half_v_rho = 0.5
        * rho
            .values
            .iter()
            .zip(&v.values)
            .map(|(r, vv)| r * vv)
            .sum::<f64>()
        * da;
    let g = v.gradient();
    let half_grad_v_sq =
        0.5 * g.x.iter().zip(&g.y).map(|(a, b)| a * a + b * b).sum::<f64>() * da;
    Ok(PotentialEnergy {
        half_v_rho,
        half_grad_v_sq,
    })
}
