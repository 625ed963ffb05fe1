//! Periodic rectangular grid and spectral calculus.
//!
//! All fields are flat row-major buffers with x fastest: `values[iy * nx + ix]`
//! sits at `(x, y) = (ix * dx, iy * dy)`. Derivatives are spectral: transform,
//! multiply mode m by `i k_m` (gradient) or `-|k|^2` (Laplacian), transform
//! back. The Nyquist mode is zeroed in odd-order derivative multipliers.
//! Quadrature is the plain lattice sum times the cell area, which is
//! spectrally accurate for smooth periodic integrands.

use crate::error::{QhdError, Result};
use crate::fft::Fft2d;
use num_complex::Complex64;
use std::sync::Arc;

/// Periodic rectangle descriptor with wavenumber tables and transform plans.
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub dx: f64,
    pub dy: f64,
    /// Wavenumbers in standard transform order: 0, 1, .., n/2-1, -n/2, .., -1
    /// times 2*pi/l.
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    fft: Fft2d,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Grid({}x{}, {}x{})", self.nx, self.ny, self.lx, self.ly)
    }
}

fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / l;
    (0..n)
        .map(|i| {
            if i < n / 2 {
                i as f64 * dk
            } else {
                (i as i64 - n as i64) as f64 * dk
            }
        })
        .collect()
}

/// Build a grid. Point counts must be powers of two (>= 4); side lengths
/// positive. Grid point `j` maps to `x_j = j * dx`.
pub fn make_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Arc<Grid>> {
    for (n, name) in [(nx, "nx"), (ny, "ny")] {
        if n < 4 || !n.is_power_of_two() {
            return Err(QhdError::Config(format!(
                "{name} = {n} must be a power of two >= 4"
            )));
        }
    }
    for (l, name) in [(lx, "lx"), (ly, "ly")] {
        if !(l > 0.0) {
            return Err(QhdError::Config(format!("{name} = {l} must be positive")));
        }
    }
    Ok(Arc::new(Grid {
        nx,
        ny,
        lx,
        ly,
        dx: lx / nx as f64,
        dy: ly / ny as f64,
        kx: wavenumbers(nx, lx),
        ky: wavenumbers(ny, ly),
        fft: Fft2d::new(nx, ny),
    }))
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 * self.dx
    }

    pub fn y(&self, iy: usize) -> f64 {
        iy as f64 * self.dy
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.fft.forward(data);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.fft.inverse(data);
    }

    /// kx with the Nyquist mode zeroed, for odd derivative operators.
    fn kx_odd(&self, i: usize) -> f64 {
        if i == self.nx / 2 {
            0.0
        } else {
            self.kx[i]
        }
    }

    fn ky_odd(&self, i: usize) -> f64 {
        if i == self.ny / 2 {
            0.0
        } else {
            self.ky[i]
        }
    }
}

fn check_same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(QhdError::Dimension(format!(
            "fields live on different grids: {a:?} vs {b:?}"
        )))
    }
}

/// Real scalar field.
#[derive(Clone, Debug)]
pub struct RealField {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
}

/// Pair of real fields sharing one grid (a 2-vector field).
#[derive(Clone, Debug)]
pub struct VectorField {
    pub grid: Arc<Grid>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Complex field carrying the `hbar` of the state it represents.
#[derive(Clone, Debug)]
pub struct WaveField {
    pub grid: Arc<Grid>,
    pub values: Vec<Complex64>,
    pub hbar: f64,
}

impl RealField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                values.push(f(grid.x(ix), grid.y(iy)));
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.grid.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Spectral gradient. Real input yields real output; the imaginary
    /// residue of the inverse transform is discarded (it is at rounding
    /// level for any real input).
    pub fn gradient(&self) -> VectorField {
        let spec = self.spectrum();
        VectorField {
            grid: self.grid.clone(),
            x: real_part(apply_multiplier(&self.grid, &spec, DerivAxis::X)),
            y: real_part(apply_multiplier(&self.grid, &spec, DerivAxis::Y)),
        }
    }

    pub fn laplacian(&self) -> RealField {
        let spec = self.spectrum();
        RealField {
            grid: self.grid.clone(),
            values: real_part(apply_multiplier(&self.grid, &spec, DerivAxis::Lap)),
        }
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let mut spec: Vec<Complex64> =
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.forward(&mut spec);
        spec
    }
}

impl VectorField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: grid.clone(),
            x: vec![0.0; grid.len()],
            y: vec![0.0; grid.len()],
        }
    }

    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self
            .x
            .iter()
            .zip(&self.y)
            .map(|(a, b)| a * a + b * b)
            .sum();
        (s * self.grid.cell_area()).sqrt()
    }

    /// Componentwise integral (a 2-vector).
    pub fn integrate(&self) -> (f64, f64) {
        let da = self.grid.cell_area();
        (
            self.x.iter().sum::<f64>() * da,
            self.y.iter().sum::<f64>() * da,
        )
    }

    pub fn divergence(&self) -> RealField {
        let gx = RealField {
            grid: self.grid.clone(),
            values: self.x.clone(),
        }
        .gradient();
        let gy = RealField {
            grid: self.grid.clone(),
            values: self.y.clone(),
        }
        .gradient();
        RealField {
            grid: self.grid.clone(),
            values: gx.x.iter().zip(&gy.y).map(|(a, b)| a + b).collect(),
        }
    }

    /// Scalar curl d(y-component)/dx - d(x-component)/dy.
    pub fn curl(&self) -> RealField {
        let gx = RealField {
            grid: self.grid.clone(),
            values: self.x.clone(),
        }
        .gradient();
        let gy = RealField {
            grid: self.grid.clone(),
            values: self.y.clone(),
        }
        .gradient();
        RealField {
            grid: self.grid.clone(),
            values: gy.x.iter().zip(&gx.y).map(|(a, b)| a - b).collect(),
        }
    }
}

impl WaveField {
    pub fn zeros(grid: &Arc<Grid>, hbar: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::default(); grid.len()],
            hbar,
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, hbar: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                values.push(f(grid.x(ix), grid.y(iy)));
            }
        }
        Self {
            grid: grid.clone(),
            values,
            hbar,
        }
    }

    pub fn density(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn norm_l2(&self) -> f64 {
        self.mass().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn gradient(&self) -> (WaveField, WaveField) {
        let mut spec = self.values.clone();
        self.grid.forward(&mut spec);
        let gx = apply_multiplier(&self.grid, &spec, DerivAxis::X);
        let gy = apply_multiplier(&self.grid, &spec, DerivAxis::Y);
        (
            WaveField {
                grid: self.grid.clone(),
                values: gx,
                hbar: self.hbar,
            },
            WaveField {
                grid: self.grid.clone(),
                values: gy,
                hbar: self.hbar,
            },
        )
    }

    pub fn laplacian(&self) -> WaveField {
        let mut spec = self.values.clone();
        self.grid.forward(&mut spec);
        WaveField {
            grid: self.grid.clone(),
            values: apply_multiplier(&self.grid, &spec, DerivAxis::Lap),
            hbar: self.hbar,
        }
    }
}

/// L2 inner product `integral of conj(f) g`.
pub fn inner(f: &WaveField, g: &WaveField) -> Result<Complex64> {
    check_same_grid(&f.grid, &g.grid)?;
    let s: Complex64 = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(s * f.grid.cell_area())
}

enum DerivAxis {
    X,
    Y,
    Lap,
}

fn apply_multiplier(grid: &Grid, spec: &[Complex64], axis: DerivAxis) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); spec.len()];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let idx = iy * grid.nx + ix;
            let m = match axis {
                DerivAxis::X => Complex64::new(0.0, grid.kx_odd(ix)),
                DerivAxis::Y => Complex64::new(0.0, grid.ky_odd(iy)),
                DerivAxis::Lap => {
                    let k2 = grid.kx[ix] * grid.kx[ix] + grid.ky[iy] * grid.ky[iy];
                    Complex64::new(-k2, 0.0)
                }
            };
            out[idx] = spec[idx] * m;
        }
    }
    grid.inverse(&mut out);
    out
}

fn real_part(values: Vec<Complex64>) -> Vec<f64> {
    values.iter().map(|v| v.re).collect()
}
